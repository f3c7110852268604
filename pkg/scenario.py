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

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple, Union

import numpy as np

from linalg_core import (ComplexMatrix, QuantumState, ShapeError, SizeError, SymmetryError,
                         as_square, commutator, density_matrix, expectation, hermitian_eigen,
                         hermitian_part, max_entry_norm, pure_state, tensor_product, tolerances,
                         top_singular_vectors)
from tools import plog

SQRT2 = math.sqrt(2.0)
SQRT3 = math.sqrt(3.0)
NAIVE_BOUND = 4.0
FEASIBILITY_TOL = 1e-9
GAP_TOL = 1e-9

DEFAULT_RANGE = (-1.0, 1.0)
PROBABILITY_RANGE = (0.0, 1.0)

class FeasibilityError(ValueError):
    pass

class RangeError(ValueError):
    pass

class ScenarioError(ValueError):
    pass

class Site(Enum):
    ArmA = 'A'
    ArmB = 'B'
    Shared = 'shared'

class Embedding(Enum):
    TensorEmbedded = 'tensor'
    SharedSpace = 'shared'

class Regime(Enum):
    Classical = 'classical'
    LocalHiddenVariable = 'local'
    Nonlocal = 'nonlocal'

    @property
    def expected_bound(self) -> float:
        return REGIME_BOUNDS[self]

REGIME_BOUNDS = {
    Regime.Classical: 2.0,
    Regime.LocalHiddenVariable: 2.0 * SQRT2,
    Regime.Nonlocal: 2.0 * SQRT3,
}

def check_value_range(value_range) -> Tuple[float, float]:
    try:
        lo, hi = (float(v) for v in value_range)
    except (TypeError, ValueError):
        raise RangeError(f"value range must be a pair of numbers, got {value_range!r}")
    if not (math.isfinite(lo) and math.isfinite(hi)) or lo > hi:
        raise RangeError(f"invalid value range [{lo}, {hi}]")
    return lo, hi

@dataclass(frozen=True)
class Observable:
    matrix: ComplexMatrix
    site: Site = Site.Shared
    label: str = ''

    @property
    def dim(self) -> int:
        return int(self.matrix.shape[0])

def observable(matrix, site: Site = Site.Shared, label: str = '') -> Observable:
    m = as_square(matrix, label or 'observable')
    if max_entry_norm(m - m.conj().T) > tolerances().herm:
        raise SymmetryError(f"observable {label!r} is not Hermitian")
    return Observable(hermitian_part(m), site, label)

# 预设测量算符
def pauli_x() -> ComplexMatrix:
    return np.array([[0, 1], [1, 0]], dtype=complex)

def pauli_y() -> ComplexMatrix:
    return np.array([[0, -1j], [1j, 0]], dtype=complex)

def pauli_z() -> ComplexMatrix:
    return np.array([[1, 0], [0, -1]], dtype=complex)

def identity(dim: int = 2) -> ComplexMatrix:
    return np.eye(dim, dtype=complex)

def diag(values) -> ComplexMatrix:
    return np.diag(np.asarray(values, dtype=float)).astype(complex)

def bloch(theta: float, phi: float) -> ComplexMatrix:
    """Spin observable along the Bloch direction (theta, phi), radians."""
    return (math.cos(theta) * pauli_z()
            + math.sin(theta) * math.cos(phi) * pauli_x()
            + math.sin(theta) * math.sin(phi) * pauli_y())

def polarizer(theta: float) -> ComplexMatrix:
    """+1 for transmission through a polarizer at angle theta, -1 otherwise."""
    return math.cos(2 * theta) * pauli_z() + math.sin(2 * theta) * pauli_x()

def projector(theta: float, outcome: int = 1) -> ComplexMatrix:
    if outcome not in (1, -1):
        raise ValueError("outcome must be +1 or -1")
    return (identity(2) + outcome * polarizer(theta)) / 2

# 量子态
def basis_state(dim: int, index: int = 0) -> QuantumState:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return pure_state(v)

def phi_plus(site_dim: int = 2) -> QuantumState:
    v = np.zeros(site_dim * site_dim, dtype=complex)
    for i in range(site_dim):
        v[i * site_dim + i] = 1.0
    return pure_state(v, normalize=True)

def maximally_mixed(dim: int) -> QuantumState:
    return density_matrix(np.eye(dim, dtype=complex) / dim)

@dataclass(frozen=True)
class BellScenario:
    a1: Observable
    a2: Observable
    b1: Observable
    b2: Observable
    embedding: Embedding = Embedding.TensorEmbedded
    value_range: Tuple[float, float] = DEFAULT_RANGE

    @property
    def dim_a(self) -> int:
        return self.a1.dim

    @property
    def dim_b(self) -> int:
        return self.b1.dim

    @property
    def dim(self) -> int:
        if self.embedding is Embedding.TensorEmbedded:
            return self.dim_a * self.dim_b
        return self.dim_a

    def observables(self):
        return {'a1': self.a1, 'a2': self.a2, 'b1': self.b1, 'b2': self.b2}

def _as_observable(x: Union[Observable, np.ndarray], site: Site, label: str) -> Observable:
    if isinstance(x, Observable):
        if x.site not in (site, Site.Shared):
            raise ScenarioError(f"observable {label} is tagged {x.site.name}, expected {site.name}")
        return Observable(x.matrix, site, x.label or label)
    return observable(x, site, label)

def _check_feasible(obs: Observable, lo: float, hi: float):
    values = hermitian_eigen(obs.matrix).eigenvalues
    if values[0] > hi + FEASIBILITY_TOL or values[-1] < lo - FEASIBILITY_TOL:
        raise FeasibilityError(
            f"observable {obs.label} has spectrum [{values[-1]:.6g}, {values[0]:.6g}] outside [{lo}, {hi}]")

def build_scenario(a1, a2, b1, b2, embedding: Embedding = Embedding.TensorEmbedded,
                   value_range=DEFAULT_RANGE) -> BellScenario:
    lo, hi = check_value_range(value_range)
    embedding = Embedding(embedding)
    if embedding is Embedding.TensorEmbedded:
        site_a, site_b = Site.ArmA, Site.ArmB
    else:
        site_a = site_b = Site.Shared
    obs = [_as_observable(a1, site_a, 'a1'), _as_observable(a2, site_a, 'a2'),
           _as_observable(b1, site_b, 'b1'), _as_observable(b2, site_b, 'b2')]

    tol = tolerances()
    if embedding is Embedding.TensorEmbedded:
        if obs[0].dim != obs[1].dim or obs[2].dim != obs[3].dim:
            raise ShapeError("observables on the same arm must share one dimension")
        if max(obs[0].dim, obs[2].dim) > tol.max_site_dim:
            raise SizeError(f"site dimension exceeds the cap {tol.max_site_dim}")
        if obs[0].dim * obs[2].dim > tol.max_total_dim:
            raise SizeError(f"embedded dimension exceeds the cap {tol.max_total_dim}")
    elif len({o.dim for o in obs}) != 1:
        raise ShapeError("shared-space observables must all have one common dimension, got "
                         + ', '.join(f"{o.label}:{o.dim}" for o in obs))

    for o in obs:
        _check_feasible(o, lo, hi)
    return BellScenario(*obs, embedding=embedding, value_range=(lo, hi))

def embedded_observables(s: BellScenario) -> dict:
    """a_j -> a_j (x) I and b_k -> I (x) b_k for tensor scenarios, unchanged otherwise."""
    if s.embedding is Embedding.SharedSpace:
        return {k: o.matrix for k, o in s.observables().items()}
    eye_a, eye_b = identity(s.dim_a), identity(s.dim_b)
    return {
        'a1': tensor_product(s.a1.matrix, eye_b),
        'a2': tensor_product(s.a2.matrix, eye_b),
        'b1': tensor_product(eye_a, s.b1.matrix),
        'b2': tensor_product(eye_a, s.b2.matrix),
    }

def bell_operator(s: BellScenario) -> ComplexMatrix:
    """B = a1 b1 + a2 b1 + a1 b2 - a2 b2."""
    a1, a2, b1, b2 = s.a1.matrix, s.a2.matrix, s.b1.matrix, s.b2.matrix
    if s.embedding is Embedding.TensorEmbedded:
        return (tensor_product(a1, b1) + tensor_product(a2, b1)
                + tensor_product(a1, b2) - tensor_product(a2, b2))
    return a1 @ b1 + a2 @ b1 + a1 @ b2 - a2 @ b2

def _check_state(s: BellScenario, state: QuantumState):
    if state.dim != s.dim:
        raise ShapeError(f"state dimension {state.dim} does not match scenario dimension {s.dim}")

def bell_expectation(s: BellScenario, state: QuantumState) -> float:
    """<B>, using the Hermitian part (B + B^H) / 2 for shared-space scenarios."""
    _check_state(s, state)
    b = bell_operator(s)
    if s.embedding is Embedding.SharedSpace:
        b = hermitian_part(b)
    return expectation(state, b)

def magnitude_bound(s: BellScenario, state: QuantumState) -> float:
    """sqrt(<B^H B>)."""
    _check_state(s, state)
    b = bell_operator(s)
    return math.sqrt(max(expectation(state, hermitian_part(b.conj().T @ b)), 0.0))

def optimal_state(s: BellScenario) -> QuantumState:
    """Top eigenvector of B (tensor) or top right singular vector of B (shared)."""
    b = bell_operator(s)
    if s.embedding is Embedding.TensorEmbedded:
        v = hermitian_eigen(b).eigenvectors[:, 0]
    else:
        v = top_singular_vectors(b)[2]
    return pure_state(v, normalize=True)

@dataclass(frozen=True)
class CommutationRegime:
    regime: Regime
    expected_bound: float
    witness: Tuple[Tuple[str, float], ...]

SAME_SITE_PAIRS = (('a1', 'a2'), ('b1', 'b2'))
CROSS_SITE_PAIRS = (('a1', 'b1'), ('a1', 'b2'), ('a2', 'b1'), ('a2', 'b2'))

def classify_regime(s: BellScenario, tol: Optional[float] = None) -> CommutationRegime:
    tol = tolerances().commutator if tol is None else tol
    if not tol > 0:
        raise ValueError("commutator tolerance must be positive")
    ops = embedded_observables(s)
    site_ops = {k: o.matrix for k, o in s.observables().items()}

    witness = []
    same_site = []
    for x, y in SAME_SITE_PAIRS:
        norm = max_entry_norm(commutator(site_ops[x], site_ops[y]))
        witness.append((f"{x},{y}", norm))
        same_site.append(norm)
    cross_site = []
    for x, y in CROSS_SITE_PAIRS:
        norm = max_entry_norm(commutator(ops[x], ops[y]))
        witness.append((f"{x},{y}", norm))
        cross_site.append(norm)

    if any(n > tol for n in cross_site):
        regime = Regime.Nonlocal
    elif any(n > tol for n in same_site):
        regime = Regime.LocalHiddenVariable
    else:
        regime = Regime.Classical
    return CommutationRegime(regime, regime.expected_bound, tuple(witness))

def swap_assumption_delta(e11: float, e21: float, e12: float, e22: float) -> float:
    """Change of E11 + E21 + E12 - E22 when a1 and a2 are interchanged: 2|E12 - E22|."""
    for name, e in (('E11', e11), ('E21', e21), ('E12', e12), ('E22', e22)):
        if not math.isfinite(e) or abs(e) > 1.0 + FEASIBILITY_TOL:
            raise RangeError(f"correlation {name} = {e} outside [-1, 1]")
    combination = e11 + e21 + e12 - e22
    swapped = e21 + e11 + e22 - e12
    return abs(combination - swapped)

def swapped_scenario(s: BellScenario) -> BellScenario:
    """The same scenario with a1 and a2 interchanged."""
    return BellScenario(Observable(s.a2.matrix, s.a2.site, s.a1.label or 'a1'),
                        Observable(s.a1.matrix, s.a1.site, s.a2.label or 'a2'),
                        s.b1, s.b2, s.embedding, s.value_range)

def correlation_table(s: BellScenario, state: QuantumState) -> Tuple[float, float, float, float]:
    """(E11, E21, E12, E22) with E_jk = <a_j b_k> (Hermitian part in a shared space)."""
    _check_state(s, state)
    ops = embedded_observables(s)
    table = []
    for a, b in (('a1', 'b1'), ('a2', 'b1'), ('a1', 'b2'), ('a2', 'b2')):
        table.append(expectation(state, hermitian_part(ops[a] @ ops[b])))
    return tuple(table)

@dataclass(frozen=True)
class BellEvaluation:
    expectation: float
    magnitude: float
    gap: float
    gap_flag: bool
    regime: CommutationRegime
    correlations: Tuple[float, float, float, float]
    swap_delta: float

def evaluate(s: BellScenario, state: Optional[QuantumState] = None) -> BellEvaluation:
    if state is None:
        state = optimal_state(s)
    value = bell_expectation(s, state)
    magnitude = magnitude_bound(s, state)
    gap = magnitude - abs(value)
    gap_flag = gap > GAP_TOL
    if gap_flag:
        plog(f'<B> = {value:.9f} is below sqrt(<B^H B>) = {magnitude:.9f} (gap {gap:.3e})')
    correlations = tuple(max(-1.0, min(1.0, e)) for e in correlation_table(s, state))
    return BellEvaluation(value, magnitude, gap, gap_flag, classify_regime(s),
                          correlations, swap_assumption_delta(*correlations))

# 参考场景
def optimal_chsh_scenario() -> BellScenario:
    return build_scenario(pauli_z(), pauli_x(), (pauli_z() + pauli_x()) / SQRT2,
                          (pauli_z() - pauli_x()) / SQRT2)

def classical_reference() -> BellScenario:
    return build_scenario(diag([1, -1]), diag([1, 1]), diag([-1, 1]), diag([1, -1]))

def local_reference() -> BellScenario:
    return build_scenario(pauli_z(), pauli_x(), pauli_z(), pauli_x())

def nonlocal_reference() -> BellScenario:
    return build_scenario(pauli_z(), pauli_x(), pauli_y(), (pauli_x() + pauli_y()) / SQRT2,
                          embedding=Embedding.SharedSpace)
