#  Bell Bound
#
#  Licensed under the Apache License, Version 2.0 (the "License");
#  you may not use this file except in compliance with the License.
#  You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
#  Unless required by applicable law or agreed to in writing, software
#  distributed under the License is distributed on an "AS IS" BASIS,
#  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
#  See the License for the specific language governing permissions and
#  limitations under the License.

"""Two-photon coincidence experiments, simulated shot by shot.

Random numbers come from Philox (a counter-based 64-bit generator) keyed by
``SeedSequence(seed, spawn_key=(pair, block, stream))``. Every setting pair,
shot block and role (hidden variable, arm A, arm B, detector) owns its own
stream, so arm A's outcomes never depend on arm B's setting and block
counts can be merged in any order.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Tuple

import numpy as np
import pandas as pd
from scipy import integrate

import scenario as sc
from linalg_core import expectation, tensor_product
from tools import check_seed, derived_seed, plog

PAIR_LABELS = ('11', '21', '12', '22')
SIGNS = {'11': 1, '21': 1, '12': 1, '22': -1}
LHV_BOUND_TOL = 1e-12

# 随机流编号
HIDDEN, ARM_A, ARM_B, LOSS_A, LOSS_B, DARK_A, DARK_B, JOINT = range(8)

class SimulationError(ValueError):
    pass

def deterministic_sign(theta, lam, u):
    """sign(cos 2(theta - lambda)) with sign(0) = +1."""
    return np.where(np.cos(2 * (theta - lam)) >= 0, 1, -1).astype(np.int8)

def malus_probabilistic(theta, lam, u):
    """+1 with probability cos^2(theta - lambda)."""
    return np.where(u < np.cos(theta - lam) ** 2, 1, -1).astype(np.int8)

RESPONSE_RULES: Dict[str, Callable] = {
    'DeterministicSign': deterministic_sign,
    'MalusProbabilistic': malus_probabilistic,
}

# lambda -> expected outcome, used by the exact correlations
MEAN_RESPONSES: Dict[str, Callable] = {
    'DeterministicSign': lambda theta, lam: 1.0 if math.cos(2 * (theta - lam)) >= 0 else -1.0,
    'MalusProbabilistic': lambda theta, lam: math.cos(2 * (theta - lam)),
}

def register_response_rule(name: str, rule: Callable, mean: Optional[Callable] = None):
    """Add a local response rule ``rule(theta, lambdas, uniforms) -> +/-1 array``.

    ``mean(theta, lam)`` is the expected outcome at fixed lambda; without it
    the rule can be simulated but has no exact correlation.
    """
    if name in RESPONSE_RULES:
        raise ValueError(f"response rule {name!r} already registered")
    RESPONSE_RULES[name] = rule
    if mean is not None:
        MEAN_RESPONSES[name] = mean

@dataclass(frozen=True)
class LHVModel:
    name: str
    hidden_distribution: str = 'UniformAngle'  # lambda uniform on [0, pi)
    response_a: str = 'DeterministicSign'
    response_b: str = 'DeterministicSign'

    def __post_init__(self):
        if self.hidden_distribution != 'UniformAngle':
            raise ValueError(f"unsupported hidden distribution {self.hidden_distribution!r}")
        for rule in (self.response_a, self.response_b):
            if rule not in RESPONSE_RULES:
                raise ValueError(f"unknown response rule {rule!r}")

DETERMINISTIC = LHVModel('deterministic', response_a='DeterministicSign', response_b='DeterministicSign')
MALUS = LHVModel('malus', response_a='MalusProbabilistic', response_b='MalusProbabilistic')
BUILTIN_MODELS = {'deterministic': DETERMINISTIC, 'malus': MALUS}
MODEL_NAMES = ('quantum', 'deterministic', 'malus')

def canonical_angle(theta: float) -> float:
    if not math.isfinite(theta):
        raise SimulationError(f"angle {theta} is not finite")
    theta = math.fmod(theta, math.pi)
    if theta < 0:
        theta += math.pi
    return 0.0 if theta >= math.pi else theta

@dataclass(frozen=True)
class AngleSettings:
    """Polarizer orientations in radians, canonicalized modulo pi."""
    alpha1: float
    alpha2: float
    beta1: float
    beta2: float

    def __post_init__(self):
        for name in ('alpha1', 'alpha2', 'beta1', 'beta2'):
            object.__setattr__(self, name, canonical_angle(float(getattr(self, name))))

    @classmethod
    def from_degrees(cls, alpha1, alpha2, beta1, beta2) -> 'AngleSettings':
        return cls(*(math.radians(a) for a in (alpha1, alpha2, beta1, beta2)))

    def pairs(self) -> Dict[str, Tuple[float, float]]:
        return {
            '11': (self.alpha1, self.beta1),
            '21': (self.alpha2, self.beta1),
            '12': (self.alpha1, self.beta2),
            '22': (self.alpha2, self.beta2),
        }

    def shifted(self, offset: float) -> 'AngleSettings':
        return AngleSettings(self.alpha1 + offset, self.alpha2 + offset, self.beta1 + offset, self.beta2 + offset)

def optimal_angles() -> AngleSettings:
    return AngleSettings(0.0, math.pi / 4, math.pi / 8, -math.pi / 8)

def scan_angles(phi: float) -> AngleSettings:
    """alpha1 = 0, alpha2 = 2 phi, beta1 = phi, beta2 = -phi."""
    return AngleSettings(0.0, 2 * phi, phi, -phi)

@dataclass(frozen=True)
class Detector:
    efficiency_a: float = 1.0
    efficiency_b: float = 1.0
    dark_count: float = 0.0

    def __post_init__(self):
        for name in ('efficiency_a', 'efficiency_b', 'dark_count'):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise SimulationError(f"{name} must lie in [0, 1], got {value}")

    @property
    def ideal(self) -> bool:
        return self.efficiency_a == 1.0 and self.efficiency_b == 1.0 and self.dark_count == 0.0

IDEAL = Detector()

@dataclass(frozen=True)
class PairCounts:
    n_pp: int
    n_pm: int
    n_mp: int
    n_mm: int
    emitted: int
    transmission_a: float
    transmission_b: float

    @property
    def shots(self) -> int:
        return self.n_pp + self.n_pm + self.n_mp + self.n_mm

    @property
    def correlation(self) -> float:
        if self.shots == 0:
            raise SimulationError("no coincidences registered")
        return (self.n_pp + self.n_mm - self.n_pm - self.n_mp) / self.shots

    @property
    def standard_error(self) -> float:
        e = self.correlation
        return math.sqrt(max(1.0 - e * e, 0.0) / self.shots)

@dataclass(frozen=True)
class CoincidenceStats:
    model: str
    settings: AngleSettings
    shots: int
    seed: int
    pairs: Dict[str, PairCounts] = field(default_factory=dict)

    def correlation(self, label: str) -> float:
        return self.pairs[label].correlation

@dataclass(frozen=True)
class ChshEstimate:
    S: float
    sigma: float
    correlations: Dict[str, float]

def _stream(seed: int, pair: int, block: int, role: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(pair, block, role))))

def _blocks(shots: int, block_size: int):
    start = 0
    block = 0
    while start < shots:
        n = min(block_size, shots - start)
        yield block, n
        start += n
        block += 1

def _check_shots(shots: int, block_size: int):
    if shots < 1:
        raise SimulationError("shots must be at least 1")
    if block_size < 1:
        raise SimulationError("block size must be at least 1")

def _register(out, efficiency, dark, seed, pair, block, loss_role, dark_role):
    """Apply detector loss and dark counts; returns (outcomes, registered mask)."""
    n = out.size
    registered = np.ones(n, dtype=bool)
    if efficiency < 1.0:
        registered = _stream(seed, pair, block, loss_role).random(n) < efficiency
    if dark > 0.0:
        rng = _stream(seed, pair, block, dark_role)
        fires = rng.random(n) < dark
        noise = np.where(rng.random(n) < 0.5, 1, -1).astype(np.int8)
        out = np.where(registered, out, noise)
        registered = registered | fires
    return out, registered

def _accumulate(counts, out_a, out_b, detector, seed, pair, block):
    if not detector.ideal:
        out_a, reg_a = _register(out_a, detector.efficiency_a, detector.dark_count, seed, pair, block, LOSS_A, DARK_A)
        out_b, reg_b = _register(out_b, detector.efficiency_b, detector.dark_count, seed, pair, block, LOSS_B, DARK_B)
    else:
        reg_a = reg_b = np.ones(out_a.size, dtype=bool)
    both = reg_a & reg_b
    a, b = out_a[both], out_b[both]
    counts['n_pp'] += int(np.count_nonzero((a > 0) & (b > 0)))
    counts['n_pm'] += int(np.count_nonzero((a > 0) & (b < 0)))
    counts['n_mp'] += int(np.count_nonzero((a < 0) & (b > 0)))
    counts['n_mm'] += int(np.count_nonzero((a < 0) & (b < 0)))
    counts['emitted'] += int(out_a.size)
    counts['singles_a'] += int(np.count_nonzero(reg_a))
    counts['plus_a'] += int(np.count_nonzero(out_a[reg_a] > 0))
    counts['singles_b'] += int(np.count_nonzero(reg_b))
    counts['plus_b'] += int(np.count_nonzero(out_b[reg_b] > 0))

def _pair_counts(counts) -> PairCounts:
    return PairCounts(counts['n_pp'], counts['n_pm'], counts['n_mp'], counts['n_mm'], counts['emitted'],
                      counts['plus_a'] / counts['singles_a'] if counts['singles_a'] else math.nan,
                      counts['plus_b'] / counts['singles_b'] if counts['singles_b'] else math.nan)

def _new_counts():
    return dict.fromkeys(('n_pp', 'n_pm', 'n_mp', 'n_mm', 'emitted', 'singles_a', 'plus_a',
                          'singles_b', 'plus_b'), 0)

def lhv_outcomes(model: LHVModel, theta_a: float, theta_b: float, n: int, seed: int, pair: int, block: int):
    """Outcomes of one shot block; arm A reads only lambda, its own uniforms and theta_a."""
    lam = _stream(seed, pair, block, HIDDEN).random(n) * math.pi
    out_a = RESPONSE_RULES[model.response_a](theta_a, lam, _stream(seed, pair, block, ARM_A).random(n))
    out_b = RESPONSE_RULES[model.response_b](theta_b, lam, _stream(seed, pair, block, ARM_B).random(n))
    return out_a, out_b

def run_lhv(model: LHVModel, settings: AngleSettings, shots: int, seed: int,
            detector: Detector = IDEAL, block_size: int = 65536) -> CoincidenceStats:
    _check_shots(shots, block_size)
    seed = check_seed(seed)
    pairs = {}
    for index, (label, (alpha, beta)) in enumerate(settings.pairs().items()):
        counts = _new_counts()
        for block, n in _blocks(shots, block_size):
            out_a, out_b = lhv_outcomes(model, alpha, beta, n, seed, index, block)
            _accumulate(counts, out_a, out_b, detector, seed, index, block)
        pairs[label] = _pair_counts(counts)
    return CoincidenceStats(model.name, settings, shots, seed, pairs)

def quantum_probabilities(alpha: float, beta: float) -> np.ndarray:
    """Joint outcome probabilities (++, +-, -+, --) for the state (|HH> + |VV>) / sqrt 2."""
    state = sc.phi_plus(2)
    probs = [expectation(state, tensor_product(sc.projector(alpha, s), sc.projector(beta, t)))
             for s, t in ((1, 1), (1, -1), (-1, 1), (-1, -1))]
    probs = np.clip(np.array(probs), 0.0, None)
    return probs / probs.sum()

def run_quantum(settings: AngleSettings, shots: int, seed: int,
                detector: Detector = IDEAL, block_size: int = 65536) -> CoincidenceStats:
    _check_shots(shots, block_size)
    seed = check_seed(seed)
    outcome_a = np.array([1, 1, -1, -1], dtype=np.int8)
    outcome_b = np.array([1, -1, 1, -1], dtype=np.int8)
    pairs = {}
    for index, (label, (alpha, beta)) in enumerate(settings.pairs().items()):
        cumulative = np.cumsum(quantum_probabilities(alpha, beta))
        cumulative[-1] = 1.0
        counts = _new_counts()
        for block, n in _blocks(shots, block_size):
            u = _stream(seed, index, block, JOINT).random(n)
            k = np.searchsorted(cumulative, u, side='right')
            _accumulate(counts, outcome_a[k], outcome_b[k], detector, seed, index, block)
        pairs[label] = _pair_counts(counts)
    return CoincidenceStats('quantum', settings, shots, seed, pairs)

def simulate(model_name: str, settings: AngleSettings, shots: int, seed: int,
             detector: Detector = IDEAL, block_size: int = 65536) -> CoincidenceStats:
    if model_name == 'quantum':
        return run_quantum(settings, shots, seed, detector, block_size)
    if model_name not in BUILTIN_MODELS:
        raise SimulationError(f"unknown model {model_name!r}, expected one of {MODEL_NAMES}")
    return run_lhv(BUILTIN_MODELS[model_name], settings, shots, seed, detector, block_size)

def chsh_estimate(stats: CoincidenceStats) -> ChshEstimate:
    missing = [label for label in PAIR_LABELS if label not in stats.pairs]
    if missing:
        raise SimulationError(f"missing setting pairs {missing}")
    correlations = {label: stats.pairs[label].correlation for label in PAIR_LABELS}
    s = sum(SIGNS[label] * correlations[label] for label in PAIR_LABELS)
    sigma = math.sqrt(sum(stats.pairs[label].standard_error ** 2 for label in PAIR_LABELS))
    return ChshEstimate(s, sigma, correlations)

def _sawtooth(delta: float) -> float:
    d = math.fmod(abs(delta), math.pi)
    d = min(d, math.pi - d)
    return 1.0 - 4.0 * d / math.pi

def exact_correlation(model_name: str, alpha: float, beta: float) -> float:
    """Infinite-shot correlation E(alpha, beta) of a model."""
    delta = alpha - beta
    if model_name == 'quantum':
        return math.cos(2 * delta)
    model = BUILTIN_MODELS.get(model_name)
    if model is None:
        raise SimulationError(f"unknown model {model_name!r}")
    return lhv_correlation(model, alpha, beta)

def lhv_correlation(model: LHVModel, alpha: float, beta: float) -> float:
    rules = (model.response_a, model.response_b)
    if rules == ('DeterministicSign', 'DeterministicSign'):
        return _sawtooth(alpha - beta)
    if rules == ('MalusProbabilistic', 'MalusProbabilistic'):
        return 0.5 * math.cos(2 * (alpha - beta))
    if not all(r in MEAN_RESPONSES for r in rules):
        raise SimulationError(f"model {model.name!r} has no mean response for exact correlations")
    mean_a, mean_b = MEAN_RESPONSES[rules[0]], MEAN_RESPONSES[rules[1]]
    points = sorted({p for p in (canonical_angle(t + k * math.pi / 4) for t in (alpha, beta) for k in (1, 3))
                     if 0.0 < p < math.pi})
    value, _ = integrate.quad(lambda lam: mean_a(alpha, lam) * mean_b(beta, lam), 0.0, math.pi,
                              points=points or None, limit=200)
    return value / math.pi

def _deterministic_correlation(alpha: float, beta: float, grid: int) -> float:
    """Integrate sign(cos 2(alpha - l)) sign(cos 2(beta - l)) over l in [0, pi) exactly."""
    breaks = {0.0, math.pi}
    for theta in (alpha, beta):
        for k in (1, 3):
            breaks.add(canonical_angle(theta + k * math.pi / 4))
    edges = sorted(breaks)
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        width = (hi - lo) / grid
        for i in range(grid):
            mid = lo + (i + 0.5) * width
            total += width * deterministic_sign(alpha, mid, None) * deterministic_sign(beta, mid, None)
    return float(total) / math.pi

def enumerate_deterministic_lhv(settings: AngleSettings, grid: int = 1) -> float:
    """Exact S of the deterministic sign model from its sign-change breakpoints."""
    if grid < 1:
        raise SimulationError("grid must be at least 1")
    s = sum(SIGNS[label] * _deterministic_correlation(alpha, beta, grid)
            for label, (alpha, beta) in settings.pairs().items())
    if s > 2.0 + LHV_BOUND_TOL:
        raise SimulationError(f"deterministic model exceeded the local bound: S = {s!r}")
    return s

def exact_chsh(model_name: str, settings: AngleSettings) -> float:
    if model_name == 'deterministic':
        return enumerate_deterministic_lhv(settings)
    return sum(SIGNS[label] * exact_correlation(model_name, alpha, beta)
               for label, (alpha, beta) in settings.pairs().items())

SCAN_COLUMNS = ['phi', 'model', 'shots', 'S', 'sigma', 'S_exact', 'seed']

def angle_scan(model_name: str, step: float, shots: int, seed: int,
               detector: Detector = IDEAL, block_size: int = 65536) -> pd.DataFrame:
    """S(phi) over phi in [0, pi/4] for the family (0, 2 phi, phi, -phi); model 'all' scans every model."""
    if not 0 < step <= math.pi / 8 + 1e-12:
        raise SimulationError("step must lie in (0, pi/8]")
    names = MODEL_NAMES if model_name == 'all' else (model_name,)
    count = int(math.floor(math.pi / 4 / step + 1e-9))
    rows = []
    for name in names:
        for i in range(count + 1):
            phi = i * step
            settings = scan_angles(phi)
            run_seed = derived_seed(seed, i)
            estimate = chsh_estimate(simulate(name, settings, shots, run_seed, detector, block_size))
            rows.append({'phi': phi, 'model': name, 'shots': shots, 'S': estimate.S,
                         'sigma': estimate.sigma, 'S_exact': exact_chsh(name, settings), 'seed': run_seed})
    return pd.DataFrame(rows, columns=SCAN_COLUMNS)

STATS_COLUMNS = ['model', 'alpha1', 'alpha2', 'beta1', 'beta2', 'shots', 'E11', 'E21', 'E12', 'E22',
                 'S', 'sigma', 'seed']

def estimate_to_frame(stats: CoincidenceStats, estimate: Optional[ChshEstimate] = None) -> pd.DataFrame:
    estimate = estimate or chsh_estimate(stats)
    s = stats.settings
    row = {'model': stats.model, 'alpha1': s.alpha1, 'alpha2': s.alpha2, 'beta1': s.beta1, 'beta2': s.beta2,
           'shots': stats.shots, 'S': estimate.S, 'sigma': estimate.sigma, 'seed': stats.seed}
    for label in PAIR_LABELS:
        row['E' + label] = estimate.correlations[label]
    return pd.DataFrame([row], columns=STATS_COLUMNS)

def stats_to_frame(stats: CoincidenceStats) -> pd.DataFrame:
    """Per-arm single-photon transmission frequencies for each setting pair."""
    rows = []
    for label in PAIR_LABELS:
        counts = stats.pairs[label]
        rows.append({'pair': label, 'emitted': counts.emitted, 'coincidences': counts.shots,
                     'transmission_a': counts.transmission_a, 'transmission_b': counts.transmission_b})
    return pd.DataFrame(rows, columns=['pair', 'emitted', 'coincidences', 'transmission_a', 'transmission_b'])

def log_estimate(stats: CoincidenceStats, estimate: ChshEstimate):
    plog(f'{stats.model}: S = {estimate.S:.6f} +/- {estimate.sigma:.6f} ({stats.shots} shots per pair)')
