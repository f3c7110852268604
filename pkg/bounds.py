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

"""Maximal Bell values per commutation regime.

classical_max   exact enumeration of the 16 vertex assignments
local_max       seesaw over tensor-embedded observables and the top eigenvector
nonlocal_max    projected gradient ascent on the largest singular value of a
                shared-space Bell operator, polished by a singular-vector seesaw

Restart ``i`` draws from a Philox stream seeded with ``master_seed + i``; the
best restart wins, ties going to the lowest index, so serial and parallel
runs agree bit for bit.
"""

import concurrent.futures as fut
import itertools
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np
import pandas as pd
from tqdm import tqdm

import scenario as sc
from linalg_core import (ConvergenceError, QuantumState, Tolerances, clamp_spectrum, configure_tolerances,
                         hermitian_basis, hermitian_eigen, hermitian_part, partial_trace, pure_state,
                         random_hermitian, sign_spectrum, tensor_product, tolerances, top_singular_vectors)
from tools import check_seed, derived_seed, plog

MONOTONE_TOL = 1e-9
LOCAL_REACH_TOL = 1e-6
NONLOCAL_REACH_TOL = 1e-3
CEILING_TOL = {sc.Regime.Classical: 1e-12, sc.Regime.LocalHiddenVariable: 1e-6, sc.Regime.Nonlocal: 1e-3}
MIN_STEP = 1e-12
GRADIENTS = ('analytic', 'numeric')

class OptimizationError(ArithmeticError):
    pass

@dataclass(frozen=True)
class OptimizerConfig:
    dimension: int = 2
    restarts: int = 8
    max_iterations: int = 2000
    step_size: float = 0.05
    convergence_eps: float = 1e-9
    master_seed: int = 42
    value_range: tuple = sc.DEFAULT_RANGE
    gradient: str = 'analytic'
    gradient_step: float = 1e-5
    workers: int = 1
    progress: bool = False

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be at least 1")
        if self.dimension < 1:
            raise ValueError("dimension must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")
        if not self.step_size > 0:
            raise ValueError("step_size must be positive")
        if not self.convergence_eps > 0:
            raise ValueError("convergence_eps must be positive")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")
        if self.gradient not in GRADIENTS:
            raise ValueError(f"unknown gradient {self.gradient!r}, expected one of {GRADIENTS}")
        if not self.gradient_step > 0:
            raise ValueError("gradient_step must be positive")
        check_seed(self.master_seed)
        sc.check_value_range(self.value_range)

@dataclass(frozen=True)
class OptimizationResult:
    regime: sc.Regime
    best_value: float
    best_scenario: sc.BellScenario
    best_state: QuantumState
    restarts: int
    iterations_total: int
    converged: bool
    master_seed: int
    target: float
    reach_tol: float = 0.0
    history: tuple = ()
    best_restart: int = 0
    stationary: bool = False

    @property
    def reached_target(self) -> bool:
        return self.best_value >= self.target - self.reach_tol

@dataclass
class _Restart:
    index: int
    value: float
    ops: list
    state: np.ndarray
    iterations: int
    converged: bool
    history: list = field(default_factory=list)
    stationary: bool = False

def naive_bound() -> float:
    """<B^H B> <= 16 for observables of norm at most one, hence <B> <= 4."""
    return sc.NAIVE_BOUND

def chsh_value(x1, x2, y1, y2):
    return x1 * y1 + x2 * y1 + x1 * y2 - x2 * y2

def classical_max(value_range=sc.DEFAULT_RANGE) -> OptimizationResult:
    """Exact maximum over the 2^4 endpoint assignments; bilinear forms peak at vertices."""
    lo, hi = sc.check_value_range(value_range)
    if lo < -1.0 or hi > 1.0:
        raise sc.RangeError(f"unsupported value range [{lo}, {hi}], expected a sub-interval of [-1, 1]")
    best_value, best = -math.inf, None
    for vertex in itertools.product((hi, lo), repeat=4):
        value = chsh_value(*vertex)
        if value > best_value:
            best_value, best = value, vertex
    x1, x2, y1, y2 = (np.array([[v]], dtype=complex) for v in best)
    scenario = sc.build_scenario(x1, x2, y1, y2, value_range=(lo, hi))
    return OptimizationResult(sc.Regime.Classical, float(best_value), scenario, sc.basis_state(1),
                              restarts=1, iterations_total=16, converged=True, master_seed=0,
                              target=sc.Regime.Classical.expected_bound, reach_tol=1e-12)

def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))

def _initial_ops(cfg: OptimizerConfig, index: int, start) -> list:
    lo, hi = cfg.value_range
    if start is not None and index == 0:
        return [np.array(m, dtype=complex) for m in start]
    rng = _rng(derived_seed(cfg.master_seed, index))
    return [random_hermitian(rng, cfg.dimension, lo, hi) for _ in range(4)]

def _tensor_bell(ops) -> np.ndarray:
    a1, a2, b1, b2 = ops
    return tensor_product(a1, b1 + b2) + tensor_product(a2, b1 - b2)

def _shared_bell(ops) -> np.ndarray:
    a1, a2, b1, b2 = ops
    return a1 @ b1 + a2 @ b1 + a1 @ b2 - a2 @ b2

def _seesaw_restart(cfg: OptimizerConfig, index: int, start=None) -> _Restart:
    lo, hi = cfg.value_range
    d = cfg.dimension
    eye = np.eye(d, dtype=complex)
    ops = _initial_ops(cfg, index, start)
    history = []
    converged = False
    psi = evaluated = None
    for it in range(1, cfg.max_iterations + 1):
        evaluated = ops
        spectrum = hermitian_eigen(_tensor_bell(ops))
        value = float(spectrum.eigenvalues[0])
        psi = spectrum.eigenvectors[:, 0]
        if history and value < history[-1] - MONOTONE_TOL:
            raise OptimizationError(f"seesaw value decreased from {history[-1]:.12f} to {value:.12f} "
                                    f"(restart {index}, iteration {it})")
        history.append(value)
        if len(history) > 1 and value - history[-2] < cfg.convergence_eps:
            converged = True
            break
        rho = np.outer(psi, psi.conj())
        a1, a2, b1, b2 = ops
        # 每个测量算符的线性系数算符 T 为偏迹
        a1 = sign_spectrum(hermitian_part(partial_trace(rho @ np.kron(eye, b1 + b2), (d, d), keep=0)), lo, hi)
        a2 = sign_spectrum(hermitian_part(partial_trace(rho @ np.kron(eye, b1 - b2), (d, d), keep=0)), lo, hi)
        b1 = sign_spectrum(hermitian_part(partial_trace(rho @ np.kron(a1 + a2, eye), (d, d), keep=1)), lo, hi)
        b2 = sign_spectrum(hermitian_part(partial_trace(rho @ np.kron(a1 - a2, eye), (d, d), keep=1)), lo, hi)
        ops = [a1, a2, b1, b2]
    stationary = len(history) > 1 and history[-1] == history[0]
    return _Restart(index, history[-1], evaluated, psi, len(history), converged, history, stationary)

def singular_value_gradient(ops, solver: Optional[str] = None):
    """(sigma, [grad_a1, grad_a2, grad_b1, grad_b2]) of the largest singular value of B.

    With B v = sigma u, d sigma = Re(u^H dB v); projected on Hermitian
    directions the gradients are Hermitian parts of the outer products below.
    """
    a1, a2, b1, b2 = ops
    sigma, u, v = top_singular_vectors(_shared_bell(ops), solver)
    vu = np.outer(v, u.conj())
    grads = [hermitian_part((b1 + b2) @ vu), hermitian_part((b1 - b2) @ vu),
             hermitian_part(vu @ (a1 + a2)), hermitian_part(vu @ (a1 - a2))]
    return sigma, grads

def numerical_gradient(f: Callable, ops, h: float = 1e-5) -> list:
    """Central differences of f over the orthonormal Hermitian basis of each observable."""
    grads = []
    for k, x in enumerate(ops):
        g = np.zeros_like(x, dtype=complex)
        for e in hermitian_basis(x.shape[0]):
            plus = list(ops)
            minus = list(ops)
            plus[k] = x + h * e
            minus[k] = x - h * e
            g = g + (f(plus) - f(minus)) / (2 * h) * e
        grads.append(g)
    return grads

def singular_value_cap(value_range) -> float:
    """sigma_max(B) <= 2 sqrt(2) m^2 for observables of norm at most m.

    ||B psi|| <= m (||(b1+b2) psi|| + ||(b1-b2) psi||) <= m sqrt(2) sqrt(2||b1 psi||^2 + 2||b2 psi||^2)
    """
    lo, hi = value_range
    m = max(abs(lo), abs(hi))
    return 2 * math.sqrt(2) * m * m

def _within_range(m: np.ndarray, lo: float, hi: float) -> bool:
    """Gershgorin discs inside [lo, hi] put the whole spectrum there."""
    centers = np.real(np.diag(m))
    radii = np.abs(m).sum(axis=1) - np.abs(centers)
    return bool(np.all(centers - radii >= lo) and np.all(centers + radii <= hi))

def _project(m, lo: float, hi: float) -> np.ndarray:
    m = hermitian_part(m)
    if _within_range(m, lo, hi):
        return m
    return clamp_spectrum(m, lo, hi)

def _sigma(ops) -> float:
    return top_singular_vectors(_shared_bell(ops))[0]

def _value_and_gradient(cfg: OptimizerConfig, ops):
    if cfg.gradient == 'numeric':
        return _sigma(ops), numerical_gradient(_sigma, ops, cfg.gradient_step)
    return singular_value_gradient(ops)

def _singular_seesaw(ops, value, lo, hi, eps, max_iterations, cap=math.inf):
    """Monotone polish: Re(u^H B v) is linear in each observable with u, v fixed."""
    _, u, v = top_singular_vectors(_shared_bell(ops))
    iterations = 0
    while iterations < max_iterations:
        if value >= cap:
            return ops, value, iterations, True
        iterations += 1
        vu = np.outer(v, u.conj())
        a1, a2, b1, b2 = ops
        a1 = sign_spectrum(hermitian_part((b1 + b2) @ vu), lo, hi)
        a2 = sign_spectrum(hermitian_part((b1 - b2) @ vu), lo, hi)
        b1 = sign_spectrum(hermitian_part(vu @ (a1 + a2)), lo, hi)
        b2 = sign_spectrum(hermitian_part(vu @ (a1 - a2)), lo, hi)
        trial = [a1, a2, b1, b2]
        trial_value, trial_u, trial_v = top_singular_vectors(_shared_bell(trial))
        if trial_value < value + eps:
            if trial_value > value:
                ops, value = trial, trial_value
            return ops, value, iterations, True
        ops, value, u, v = trial, trial_value, trial_u, trial_v
    return ops, value, iterations, value >= cap

def _gradient_restart(cfg: OptimizerConfig, index: int, start=None) -> _Restart:
    lo, hi = cfg.value_range
    # 达到理论上限即可停止
    cap = singular_value_cap(cfg.value_range) - cfg.convergence_eps
    handoff = max(cfg.convergence_eps, math.sqrt(cfg.convergence_eps))
    ops = _initial_ops(cfg, index, start)
    value, grads = _value_and_gradient(cfg, ops)
    history = [value]
    step = cfg.step_size
    iterations = 0
    while iterations < cfg.max_iterations and value < cap:
        iterations += 1
        trial = [_project(x + step * g, lo, hi) for x, g in zip(ops, grads)]
        trial_value, trial_grads = _value_and_gradient(cfg, trial)
        if trial_value > value:
            improvement = trial_value - value
            ops, value, grads = trial, trial_value, trial_grads
            history.append(value)
            if improvement < handoff:
                break
        else:
            step /= 2  # 未改进则步长减半
            if step < MIN_STEP:
                break
    ops, value, polish_iterations, polished = _singular_seesaw(
        ops, value, lo, hi, cfg.convergence_eps, cfg.max_iterations, cap)
    if value > history[-1]:
        history.append(value)
    stationary = len(history) == 1 and value < cap
    v = top_singular_vectors(_shared_bell(ops))[2]
    return _Restart(index, value, ops, v, iterations + polish_iterations, polished, history, stationary)

def _restart_with_tolerances(worker: Callable, tol: Tolerances, cfg: OptimizerConfig, index: int, start):
    configure_tolerances(**asdict(tol))
    return worker(cfg, index, start)

def _run_restarts(worker: Callable, cfg: OptimizerConfig, start, desc: str) -> list:
    indices = range(cfg.restarts)
    if cfg.workers > 1:
        # 子进程不继承模块级容差
        tol = tolerances()
        with fut.ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            jobs = pool.map(_restart_with_tolerances, itertools.repeat(worker), itertools.repeat(tol),
                            itertools.repeat(cfg), indices, itertools.repeat(start))
            return list(tqdm(jobs, total=cfg.restarts, desc=desc, disable=not cfg.progress))
    return [worker(cfg, i, start) for i in tqdm(indices, desc=desc, disable=not cfg.progress)]

def _merge(results: Sequence[_Restart]) -> _Restart:
    best = results[0]
    for r in results[1:]:
        if r.value > best.value:
            best = r
    return best

def _finish(regime: sc.Regime, cfg: OptimizerConfig, results: list, embedding: sc.Embedding,
            reach_tol: float) -> OptimizationResult:
    best = _merge(results)
    if not any(r.converged for r in results):
        raise ConvergenceError(f"{regime.value} optimizer did not converge in any of {cfg.restarts} restarts",
                               iterations=sum(r.iterations for r in results), best_value=best.value)
    ceiling = regime.expected_bound + CEILING_TOL[regime]
    if best.value > ceiling or best.value > naive_bound() + 1e-9:
        raise OptimizationError(f"{regime.value} optimum {best.value:.12f} exceeds the ceiling {ceiling:.12f}")
    scenario = sc.build_scenario(*best.ops, embedding=embedding, value_range=cfg.value_range)
    result = OptimizationResult(regime, float(best.value), scenario, pure_state(best.state, normalize=True),
                                restarts=cfg.restarts, iterations_total=sum(r.iterations for r in results),
                                converged=best.converged, master_seed=cfg.master_seed,
                                target=regime.expected_bound, reach_tol=reach_tol,
                                history=tuple(best.history), best_restart=best.index,
                                stationary=best.stationary)
    plog(f'{regime.value}: best {result.best_value:.10f} (target {result.target:.10f}) '
         f'restart {best.index}/{cfg.restarts}, {result.iterations_total} iterations')
    return result

def local_max(cfg: OptimizerConfig, start=None) -> OptimizationResult:
    """Seesaw over tensor-embedded scenarios; ``start`` fixes restart 0's observables."""
    if cfg.dimension < 2:
        raise ValueError("local_max needs dimension >= 2")
    results = _run_restarts(_seesaw_restart, cfg, start, 'seesaw')
    return _finish(sc.Regime.LocalHiddenVariable, cfg, results, sc.Embedding.TensorEmbedded, LOCAL_REACH_TOL)

def nonlocal_max(cfg: OptimizerConfig, start=None) -> OptimizationResult:
    """Projected gradient on sigma_max(B) over shared-space scenarios.

    The value is capped by 2 sqrt(2): ||B psi|| <= ||(b1+b2) psi|| + ||(b1-b2) psi||
    <= sqrt(2) sqrt(2||b1 psi||^2 + 2||b2 psi||^2). The 2 sqrt(3) target is
    reported and checked as a ceiling, not assumed reachable.
    """
    if cfg.dimension < 2:
        raise ValueError("nonlocal_max needs dimension >= 2")
    results = _run_restarts(_gradient_restart, cfg, start, 'gradient')
    return _finish(sc.Regime.Nonlocal, cfg, results, sc.Embedding.SharedSpace, NONLOCAL_REACH_TOL)

def nonlocal_dimension_search(cfg: OptimizerConfig, dims=(2, 3, 4)) -> pd.DataFrame:
    rows = []
    for d in dims:
        result = nonlocal_max(replace(cfg, dimension=d))
        rows.append({'dimension': d, 'achieved': result.best_value, 'target': result.target,
                     'reached': result.reached_target, 'converged': result.converged})
    return pd.DataFrame(rows, columns=['dimension', 'achieved', 'target', 'reached', 'converged'])

def sampling_oracle(regime: sc.Regime, dimension: int = 2, samples: int = 10000, seed: int = 0,
                    value_range=sc.DEFAULT_RANGE) -> float:
    """Best value over seeded random feasible samples of a regime, evaluated with LAPACK."""
    lo, hi = sc.check_value_range(value_range)
    rng = _rng(check_seed(seed))
    if regime is sc.Regime.Classical:
        x = rng.uniform(lo, hi, size=(samples, 4))
        return float(np.max(chsh_value(x[:, 0], x[:, 1], x[:, 2], x[:, 3])))
    best = -math.inf
    for _ in range(samples):
        ops = [random_hermitian(rng, dimension, lo, hi, solver='numpy') for _ in range(4)]
        if regime is sc.Regime.LocalHiddenVariable:
            value = np.linalg.eigvalsh(_tensor_bell(ops))[-1]
        else:
            value = np.linalg.norm(_shared_bell(ops), ord=2)
        best = max(best, float(value))
    return best

REPORT_COLUMNS = ['regime', 'dimension', 'restarts', 'achieved', 'target', 'reached', 'converged',
                  'seed', 'consistent', 'error']

def regime_report(configs: Optional[dict] = None, value_range=sc.DEFAULT_RANGE,
                  experimental: Optional[float] = None, consistency_tol: float = 1e-3) -> pd.DataFrame:
    """Run the three maximizers; a failing row records its error and the others still run.

    ``consistent`` marks regimes whose bound is not overpassed by the
    experimental value.
    """
    configs = configs or {}
    local_cfg = configs.get(sc.Regime.LocalHiddenVariable) or OptimizerConfig(value_range=value_range)
    nonlocal_cfg = configs.get(sc.Regime.Nonlocal) or OptimizerConfig(restarts=100, value_range=value_range)
    runs = [
        (sc.Regime.Classical, None, lambda: classical_max(value_range)),
        (sc.Regime.LocalHiddenVariable, local_cfg, lambda: local_max(local_cfg)),
        (sc.Regime.Nonlocal, nonlocal_cfg, lambda: nonlocal_max(nonlocal_cfg)),
    ]
    rows = []
    for regime, cfg, run in runs:
        row = {'regime': regime.name, 'dimension': cfg.dimension if cfg else 1,
               'restarts': cfg.restarts if cfg else 1, 'achieved': math.nan,
               'target': regime.expected_bound, 'reached': False, 'converged': False,
               'seed': cfg.master_seed if cfg else 0, 'consistent': None, 'error': ''}
        try:
            result = run()
            row.update(achieved=result.best_value, reached=result.reached_target, converged=result.converged)
        except (ArithmeticError, ValueError) as e:
            plog(f'{regime.name} failed: {e}')
            row['error'] = str(e)
            if getattr(e, 'best_value', None) is not None:
                row['achieved'] = e.best_value
        if experimental is not None:
            row['consistent'] = bool(experimental <= regime.expected_bound + consistency_tol)
        rows.append(row)
    return pd.DataFrame(rows, columns=REPORT_COLUMNS)
