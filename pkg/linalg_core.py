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

"""Dense complex matrix arithmetic for small Bell operators.

Matrices are plain ``numpy`` complex arrays. Every public function validates
its operands (finite entries, dimension caps) and is a pure function of its
inputs.
"""

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional, Union

import numpy as np

ComplexMatrix = np.ndarray

# Error definitions
class LinalgError(ValueError):
    pass

class ShapeError(LinalgError):
    pass

class SizeError(LinalgError):
    pass

class SymmetryError(LinalgError):
    pass

class StateError(LinalgError):
    pass

class ConvergenceError(ArithmeticError):
    def __init__(self, message, iterations=0, best_value=None):
        super().__init__(message)
        self.iterations = iterations
        self.best_value = best_value

SOLVERS = ('jacobi', 'numpy')

@dataclass(frozen=True)
class Tolerances:
    herm: float = 1e-10
    unitary: float = 1e-10
    recon: float = 1e-8
    commutator: float = 1e-9
    max_site_dim: int = 8
    max_total_dim: int = 64
    max_sweeps: int = 100
    solver: str = 'jacobi'

_TOLERANCES = Tolerances()

def tolerances() -> Tolerances:
    return _TOLERANCES

def configure_tolerances(**overrides) -> Tolerances:
    """Replace the central tolerances; ``None`` values are ignored."""
    global _TOLERANCES
    changes = {k: v for k, v in overrides.items() if v is not None}
    updated = replace(_TOLERANCES, **changes)
    if updated.solver not in SOLVERS:
        raise ValueError(f"unknown eigensolver {updated.solver!r}, expected one of {SOLVERS}")
    for name in ('herm', 'unitary', 'recon', 'commutator'):
        if not getattr(updated, name) > 0:
            raise ValueError(f"tolerance {name} must be positive")
    if updated.max_site_dim < 1 or updated.max_total_dim < 1 or updated.max_sweeps < 1:
        raise ValueError("dimension caps and sweep limit must be positive")
    _TOLERANCES = updated
    return updated

def as_matrix(m, name='matrix') -> ComplexMatrix:
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2:
        raise ShapeError(f"{name} must be two-dimensional, got shape {a.shape}")
    rows, cols = a.shape
    if rows < 1 or cols < 1:
        raise ShapeError(f"{name} must have at least one row and column, got {a.shape}")
    cap = _TOLERANCES.max_total_dim
    if rows > cap or cols > cap:
        raise SizeError(f"{name} shape {a.shape} exceeds the dimension cap {cap}")
    if not np.all(np.isfinite(a)):
        raise LinalgError(f"{name} has non-finite entries")
    return a

def as_square(m, name='matrix') -> ComplexMatrix:
    a = as_matrix(m, name)
    if a.shape[0] != a.shape[1]:
        raise ShapeError(f"{name} must be square, got shape {a.shape}")
    return a

def max_entry_norm(m) -> float:
    a = np.asarray(m, dtype=complex)
    return float(np.abs(a).max()) if a.size else 0.0

def hermitian_part(m) -> ComplexMatrix:
    a = as_square(m)
    return (a + a.conj().T) / 2

def is_hermitian(m, tol: Optional[float] = None) -> bool:
    a = as_square(m)
    tol = _TOLERANCES.herm if tol is None else tol
    return max_entry_norm(a - a.conj().T) <= tol

def _require_hermitian(m, name='matrix') -> ComplexMatrix:
    a = as_square(m, name)
    asym = max_entry_norm(a - a.conj().T)
    if asym > _TOLERANCES.herm:
        raise SymmetryError(f"{name} is not Hermitian (max |m - m^H| = {asym:.3e})")
    return (a + a.conj().T) / 2

def tensor_product(lhs, rhs) -> ComplexMatrix:
    """Kronecker product; block (i, j) of the result is ``lhs[i, j] * rhs``."""
    a = as_matrix(lhs, 'lhs')
    b = as_matrix(rhs, 'rhs')
    rows, cols = a.shape[0] * b.shape[0], a.shape[1] * b.shape[1]
    cap = _TOLERANCES.max_total_dim
    if rows > cap or cols > cap:
        raise SizeError(f"tensor product shape ({rows}, {cols}) exceeds the dimension cap {cap}")
    return np.kron(a, b)

def commutator(x, y) -> ComplexMatrix:
    a = as_square(x, 'x')
    b = as_square(y, 'y')
    if a.shape != b.shape:
        raise ShapeError(f"commutator operands differ in shape: {a.shape} vs {b.shape}")
    return a @ b - b @ a

def partial_trace(m, dims, keep: int) -> ComplexMatrix:
    """Trace out one factor of a bipartite operator on ``dims[0] x dims[1]``."""
    a = as_square(m)
    d_a, d_b = int(dims[0]), int(dims[1])
    if a.shape[0] != d_a * d_b:
        raise ShapeError(f"operator dimension {a.shape[0]} does not match dims {d_a}x{d_b}")
    a4 = a.reshape(d_a, d_b, d_a, d_b)
    if keep == 0:
        return np.einsum('ijkj->ik', a4)
    if keep == 1:
        return np.einsum('ijik->jk', a4)
    raise ValueError("keep must be 0 (first factor) or 1 (second factor)")

@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray   # descending
    eigenvectors: ComplexMatrix  # columns

    def reconstruct(self) -> ComplexMatrix:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T

    def unitarity_residual(self) -> float:
        v = self.eigenvectors
        return max_entry_norm(v.conj().T @ v - np.eye(v.shape[1]))

def _jacobi(a: np.ndarray, max_sweeps: int):
    """Cyclic Jacobi rotations on a real symmetric matrix.

    Returns (eigenvalues, eigenvectors, sweeps). Rotation angles follow the
    stable tangent formula t = sgn(theta) / (|theta| + sqrt(theta^2 + 1)).
    """
    a = np.array(a, dtype=float)
    n = a.shape[0]
    v = np.eye(n)
    scale = math.sqrt(float(np.sum(a * a)))
    target = 1e-12 * scale
    for sweep in range(max_sweeps + 1):
        off = math.sqrt(float(np.sum((a - np.diag(np.diag(a))) ** 2)))
        if off <= target:
            return np.diag(a).copy(), v, sweep
        if sweep == max_sweeps:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = (1.0 if theta >= 0 else -1.0) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                rot = np.array([[c, s], [-s, c]])
                pq = [p, q]
                a[:, pq] = a[:, pq] @ rot
                a[pq, :] = rot.T @ a[pq, :]
                a[p, q] = a[q, p] = 0.0
                v[:, pq] = v[:, pq] @ rot
    raise ConvergenceError(f"Jacobi eigensolver did not converge in {max_sweeps} sweeps", iterations=max_sweeps)

def _complex_basis_from_embedding(w: np.ndarray, vecs: np.ndarray, n: int) -> np.ndarray:
    """Pick n orthonormal complex eigenvectors out of the 2n real ones.

    Each eigenvalue of the n x n Hermitian matrix appears twice in the real
    embedding, with eigenvectors (x; y) and (-y; x) mapping to x + iy and
    i(x + iy). Within each cluster of equal eigenvalues the candidate with
    the largest residual against the vectors already chosen is taken.
    """
    order = np.argsort(-w, kind='stable')
    w = w[order]
    cand = vecs[:n, order] + 1j * vecs[n:, order]
    gap = 1e-8 * max(1.0, float(np.abs(w).max()))

    clusters = []
    start = 0
    for i in range(1, 2 * n + 1):
        if i == 2 * n or w[i - 1] - w[i] > gap:
            clusters.append((start, i))
            start = i

    chosen = []

    def pick(block, need):
        for _ in range(need):
            if len(chosen) == n:
                return
            if chosen:
                q = np.column_stack(chosen)
                resid = block - q @ (q.conj().T @ block)
            else:
                resid = block
            norms = np.linalg.norm(resid, axis=0)
            j = int(np.argmax(norms))
            if norms[j] < 1e-6:
                return
            vec = resid[:, j] / norms[j]
            if chosen:
                q = np.column_stack(chosen)
                vec = vec - q @ (q.conj().T @ vec)
                vec = vec / np.linalg.norm(vec)
            chosen.append(vec)

    for lo, hi in clusters:
        pick(cand[:, lo:hi], (hi - lo) // 2)
    if len(chosen) < n:
        pick(cand, n - len(chosen))
    if len(chosen) < n:
        raise ConvergenceError("could not recover a complex eigenbasis from the real embedding")
    return np.column_stack(chosen)

def hermitian_eigen(m, solver: Optional[str] = None) -> Spectrum:
    """Eigendecomposition of a Hermitian matrix, eigenvalues descending.

    The default ``jacobi`` solver diagonalizes the 2n x 2n real symmetric
    embedding [[Re, -Im], [Im, Re]]; ``numpy`` delegates to LAPACK and is
    kept as an oracle. Ties are ordered by the basis index found first.
    """
    h = _require_hermitian(m)
    n = h.shape[0]
    tol = _TOLERANCES
    solver = solver or tol.solver
    if solver == 'numpy':
        values, vectors = np.linalg.eigh(h)
    elif solver == 'jacobi':
        embedded = np.block([[h.real, -h.imag], [h.imag, h.real]])
        w, vecs, _ = _jacobi(embedded, tol.max_sweeps)
        vectors = _complex_basis_from_embedding(w, vecs, n)
        values = np.real(np.einsum('ij,ik,kj->j', vectors.conj(), h, vectors))
    else:
        raise ValueError(f"unknown eigensolver {solver!r}, expected one of {SOLVERS}")
    order = np.argsort(-values, kind='stable')
    spectrum = Spectrum(eigenvalues=np.asarray(values, dtype=float)[order], eigenvectors=vectors[:, order])

    scale = max(1.0, max_entry_norm(h))
    if spectrum.unitarity_residual() > tol.unitary:
        raise ConvergenceError("eigenvector matrix is not unitary within tolerance")
    if max_entry_norm(spectrum.reconstruct() - h) > tol.recon * scale:
        raise ConvergenceError("eigen reconstruction residual exceeds tolerance")
    return spectrum

def top_singular_vectors(m, solver: Optional[str] = None):
    """(sigma, u, v) with m v = sigma u for the largest singular value."""
    a = as_matrix(m)
    gram = hermitian_part(a.conj().T @ a)
    spectrum = hermitian_eigen(gram, solver)
    sigma = math.sqrt(max(float(spectrum.eigenvalues[0]), 0.0))
    v = spectrum.eigenvectors[:, 0]
    if sigma > 0:
        u = (a @ v) / sigma
        u = u / np.linalg.norm(u)
    else:
        u = np.zeros(a.shape[0], dtype=complex)
        u[0] = 1.0
    return sigma, u, v

def largest_singular_value(m, solver: Optional[str] = None) -> float:
    """sqrt of the largest eigenvalue of m^H m."""
    return top_singular_vectors(m, solver)[0]

class StateKind(Enum):
    PureVector = 'pure'
    DensityMatrix = 'density'

@dataclass(frozen=True)
class QuantumState:
    kind: StateKind
    data: ComplexMatrix  # column vector or square matrix

    @property
    def dim(self) -> int:
        return int(self.data.shape[0])

    @property
    def is_pure(self) -> bool:
        return self.kind is StateKind.PureVector

    def density(self) -> ComplexMatrix:
        if self.is_pure:
            return self.data @ self.data.conj().T
        return self.data

def pure_state(vector, normalize: bool = False) -> QuantumState:
    v = np.asarray(vector, dtype=complex).reshape(-1, 1)
    v = as_matrix(v, 'state vector')
    norm = float(np.linalg.norm(v))
    if normalize:
        if norm == 0:
            raise StateError("cannot normalize the zero vector")
        v = v / norm
    elif abs(norm - 1.0) > 1e-10:
        raise StateError(f"state vector must have unit norm, got {norm:.12g}")
    return QuantumState(StateKind.PureVector, v)

def density_matrix(m) -> QuantumState:
    rho = as_square(m, 'density matrix')
    if max_entry_norm(rho - rho.conj().T) > 1e-10:
        raise StateError("density matrix must be Hermitian")
    rho = (rho + rho.conj().T) / 2
    trace = float(np.real(np.trace(rho)))
    if abs(trace - 1.0) > 1e-10:
        raise StateError(f"density matrix must have unit trace, got {trace:.12g}")
    lowest = float(hermitian_eigen(rho).eigenvalues[-1])
    if lowest < -1e-10:
        raise StateError(f"density matrix must be positive semidefinite (min eigenvalue {lowest:.3e})")
    return QuantumState(StateKind.DensityMatrix, rho)

def expectation(state: Union[QuantumState, np.ndarray], op) -> float:
    """<psi|op|psi> for pure states, tr(rho op) for density matrices."""
    h = _require_hermitian(op, 'operator')
    if isinstance(state, QuantumState):
        data, pure = state.data, state.is_pure
    else:
        data = np.asarray(state, dtype=complex)
        pure = data.ndim == 1 or data.shape[1] == 1
        data = data.reshape(-1, 1) if pure else data
    if data.shape[0] != h.shape[0]:
        raise ShapeError(f"state dimension {data.shape[0]} does not match operator dimension {h.shape[0]}")
    if pure:
        value = complex((data.conj().T @ h @ data)[0, 0])
    else:
        value = complex(np.trace(data @ h))
    if abs(value.imag) > _TOLERANCES.herm * max(1.0, abs(value.real)):
        raise SymmetryError(f"expectation has imaginary part {value.imag:.3e}")
    return value.real

def clamp_spectrum(m, lo: float, hi: float, solver: Optional[str] = None) -> ComplexMatrix:
    if lo > hi:
        raise ValueError(f"empty spectrum interval [{lo}, {hi}]")
    spectrum = hermitian_eigen(m, solver)
    clamped = Spectrum(np.clip(spectrum.eigenvalues, lo, hi), spectrum.eigenvectors)
    return hermitian_part(clamped.reconstruct())

def sign_spectrum(m, lo: float, hi: float, solver: Optional[str] = None) -> ComplexMatrix:
    """Maximizer of tr(X m) over Hermitian X with spectrum in [lo, hi].

    Non-negative eigenvalues of m map to ``hi``, negative ones to ``lo``.
    """
    spectrum = hermitian_eigen(m, solver)
    values = np.where(spectrum.eigenvalues >= 0, hi, lo).astype(float)
    return hermitian_part(Spectrum(values, spectrum.eigenvectors).reconstruct())

def hermitian_basis(dim: int) -> list:
    """Orthonormal basis (Frobenius inner product) of dim x dim Hermitian matrices."""
    basis = []
    for j in range(dim):
        e = np.zeros((dim, dim), dtype=complex)
        e[j, j] = 1.0
        basis.append(e)
    for j in range(dim):
        for k in range(j + 1, dim):
            e = np.zeros((dim, dim), dtype=complex)
            e[j, k] = e[k, j] = 1 / math.sqrt(2)
            basis.append(e)
            e = np.zeros((dim, dim), dtype=complex)
            e[j, k] = 1j / math.sqrt(2)
            e[k, j] = -1j / math.sqrt(2)
            basis.append(e)
    return basis

def random_hermitian(rng: np.random.Generator, dim: int, lo: float = -1.0, hi: float = 1.0,
                     solver: Optional[str] = None) -> ComplexMatrix:
    """Seeded standard-normal entries, symmetrized, spectrum clamped to [lo, hi]."""
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return clamp_spectrum((g + g.conj().T) / 2, lo, hi, solver)
