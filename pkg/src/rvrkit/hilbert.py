"""Finite-dimensional operator algebra.

Operators are dense complex matrices wrapped in immutable dataclasses.
``Projector`` and ``DensityOperator`` are the validated subtypes; build them
with :func:`validate_projector` and :func:`validate_density` rather than by
calling the constructors directly.

The Hermitian eigen-solver is a cyclic complex Jacobi iteration. It is slower
than LAPACK but deterministic to the bit across platforms, which matters for
byte-identical reports.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Sequence

import numpy as np
from numpy.typing import ArrayLike

from .errors import (
    BadIndex,
    DimensionMismatch,
    NonFinite,
    NonRealResult,
    NotDensity,
    NotHermitian,
    NotIdempotent,
    ValidationError,
)

TOL = 1e-9
DEGENERACY_GAP = 1e-8
JACOBI_OFF_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100


@dataclass(frozen=True, eq=False)
class Operator:
    """Square complex matrix; the array is copied and made read-only."""

    matrix: np.ndarray

    def __post_init__(self) -> None:
        m = np.array(self.matrix, dtype=np.complex128, copy=True)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
            raise DimensionMismatch(f"operator must be a non-empty square matrix, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise NonFinite("operator has NaN or infinite entries")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __matmul__(self, other: "Operator") -> "Operator":
        _same_dim(self, other)
        return Operator(self.matrix @ other.matrix)

    def __add__(self, other: "Operator") -> "Operator":
        _same_dim(self, other)
        return Operator(self.matrix + other.matrix)

    def __sub__(self, other: "Operator") -> "Operator":
        _same_dim(self, other)
        return Operator(self.matrix - other.matrix)

    def __repr__(self) -> str:
        return f"{type(self).__name__}(dim={self.dim})"


class Projector(Operator):
    """Hermitian idempotent operator (a yes/no observable)."""

    def complement(self) -> "Projector":
        return Projector(np.eye(self.dim) - self.matrix)


class DensityOperator(Operator):
    """Hermitian, unit-trace, positive semidefinite operator."""


@dataclass(frozen=True)
class SpectralDecomposition:
    eigenvalues: tuple[float, ...]
    eigenprojectors: tuple[Projector, ...]

    def reconstruct(self) -> np.ndarray:
        return sum(lam * p.matrix for lam, p in zip(self.eigenvalues, self.eigenprojectors))


def as_operator(a: Operator | ArrayLike) -> Operator:
    return a if isinstance(a, Operator) else Operator(np.asarray(a))


def _same_dim(*ops: Operator) -> None:
    dims = {o.dim for o in ops}
    if len(dims) > 1:
        raise DimensionMismatch(f"operator dimensions differ: {sorted(dims)}")


def max_abs(m: np.ndarray) -> float:
    return float(np.max(np.abs(m))) if m.size else 0.0


def hermitian_residual(a: Operator | ArrayLike) -> float:
    m = as_operator(a).matrix
    return max_abs(m - m.conj().T)


def validate_projector(op: Operator | ArrayLike) -> Projector:
    op = as_operator(op)
    m = op.matrix
    r_h = hermitian_residual(op)
    if r_h > TOL:
        raise NotHermitian(f"projector not Hermitian: max residual {r_h:.3e}", residual=r_h, what="hermitian")
    r_i = max_abs(m @ m - m)
    if r_i > TOL:
        raise NotIdempotent(f"projector not idempotent: max residual {r_i:.3e}", residual=r_i, what="idempotent")
    return Projector(m)


def validate_density(op: Operator | ArrayLike) -> DensityOperator:
    op = as_operator(op)
    m = op.matrix
    r_h = hermitian_residual(op)
    if r_h > TOL:
        raise NotHermitian(f"density operator not Hermitian: max residual {r_h:.3e}", residual=r_h, what="hermitian")
    tr = complex(np.trace(m))
    r_t = abs(tr - 1.0)
    if r_t > TOL:
        raise NotDensity(f"density operator trace {tr.real:.12g} differs from 1 by {r_t:.3e}", residual=r_t, what="trace")
    lo = min(jacobi_eigh(m)[0])
    if lo < -TOL:
        raise NotDensity(f"density operator has negative eigenvalue {lo:.3e}", residual=-lo, what="positivity")
    return DensityOperator(m)


def commutes(a: Operator | ArrayLike, b: Operator | ArrayLike) -> bool:
    a, b = as_operator(a), as_operator(b)
    _same_dim(a, b)
    return max_abs(a.matrix @ b.matrix - b.matrix @ a.matrix) <= TOL


def tensor_product(a: Operator | ArrayLike, b: Operator | ArrayLike) -> Operator:
    a, b = as_operator(a), as_operator(b)
    m = np.kron(a.matrix, b.matrix)
    # keep the strongest subtype both factors share
    if isinstance(a, DensityOperator) and isinstance(b, DensityOperator):
        return DensityOperator(m)
    if isinstance(a, Projector) and isinstance(b, Projector):
        return Projector(m)
    return Operator(m)


def tensor(*ops: Operator | ArrayLike) -> Operator:
    return reduce(tensor_product, ops)


def partial_trace(rho: DensityOperator | ArrayLike, subsystem_dims: Sequence[int], traced_index: int) -> DensityOperator:
    """Trace out factor ``traced_index`` of a state on ``⊗ subsystem_dims``."""
    rho = as_operator(rho)
    dims = [int(d) for d in subsystem_dims]
    if any(d < 1 for d in dims) or int(np.prod(dims)) != rho.dim:
        raise DimensionMismatch(f"subsystem dims {dims} do not multiply to {rho.dim}")
    k = len(dims)
    if not 0 <= traced_index < k:
        raise BadIndex(f"traced_index {traced_index} out of range for {k} subsystems")
    t = rho.matrix.reshape(dims + dims)
    t = np.trace(t, axis1=traced_index, axis2=traced_index + k)
    rest = int(np.prod([d for i, d in enumerate(dims) if i != traced_index])) if k > 1 else 1
    return DensityOperator(t.reshape(rest, rest))


def reduced_state(rho: DensityOperator | ArrayLike, subsystem_dims: Sequence[int], keep: int) -> DensityOperator:
    """Reduced density operator of a single factor (traces out all the others)."""
    rho = as_operator(rho)
    dims = list(subsystem_dims)
    if not 0 <= keep < len(dims):
        raise BadIndex(f"subsystem index {keep} out of range")
    for idx in reversed(range(len(dims))):
        if idx != keep:
            rho = partial_trace(rho, dims, idx)
            dims.pop(idx)
    return rho if isinstance(rho, DensityOperator) else DensityOperator(rho.matrix)


def _jacobi_rotate(a: np.ndarray, v: np.ndarray, p: int, q: int) -> None:
    g = a[p, q]
    mag = abs(g)
    phase = g / mag
    app, aqq = a[p, p].real, a[q, q].real
    # real Jacobi angle on the phase-rotated 2x2 block [[app, |g|], [|g|, aqq]]
    tau = (aqq - app) / (2.0 * mag)
    if abs(tau) > 1e150:
        t = 0.5 / tau
    else:
        t = (1.0 if tau >= 0 else -1.0) / (abs(tau) + np.sqrt(1.0 + tau * tau))
    c = 1.0 / np.sqrt(1.0 + t * t)
    s = t * c
    # J = diag(1, conj(phase)) @ [[c, s], [-s, c]]
    j = np.array([[c, s], [-s * np.conj(phase), c * np.conj(phase)]], dtype=np.complex128)
    cols = [p, q]
    a[:, cols] = a[:, cols] @ j
    a[cols, :] = j.conj().T @ a[cols, :]
    a[p, q] = a[q, p] = 0.0
    a[p, p] = a[p, p].real
    a[q, q] = a[q, q].real
    v[:, cols] = v[:, cols] @ j


def jacobi_eigh(m: ArrayLike) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and unitary eigenvector matrix of a Hermitian matrix.

    Cyclic row-order sweeps; stops once the off-diagonal Frobenius norm is
    below ``1e-12`` (scaled by the matrix norm when that exceeds 1).
    """
    a = np.array(m, dtype=np.complex128, copy=True)
    n = a.shape[0]
    a = 0.5 * (a + a.conj().T)
    v = np.eye(n, dtype=np.complex128)
    scale = max(1.0, float(np.linalg.norm(a)))
    offdiag = ~np.eye(n, dtype=bool)
    for _ in range(JACOBI_MAX_SWEEPS):
        off = float(np.linalg.norm(a[offdiag]))
        if off < JACOBI_OFF_TOL * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                g = abs(a[p, q])
                # negligible against both diagonal entries: rotating only adds noise
                if g == 0.0 or g < 1e-18 * min(abs(a[p, p]), abs(a[q, q])):
                    a[p, q] = a[q, p] = 0.0
                    continue
                _jacobi_rotate(a, v, p, q)
    w = np.diag(a).real.copy()
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def eigvalsh(a: Operator | ArrayLike) -> np.ndarray:
    return jacobi_eigh(as_operator(a).matrix)[0]


def spectral_decompose(a: Operator | ArrayLike) -> SpectralDecomposition:
    """Distinct eigenvalues with their eigenprojectors; near-degenerate levels are merged."""
    a = as_operator(a)
    r = hermitian_residual(a)
    if r > TOL:
        raise NotHermitian(f"operator not Hermitian: max residual {r:.3e}", residual=r, what="hermitian")
    w, v = jacobi_eigh(a.matrix)
    groups: list[list[int]] = [[0]]
    for i in range(1, len(w)):
        if w[i] - w[groups[-1][-1]] < DEGENERACY_GAP:
            groups[-1].append(i)
        else:
            groups.append([i])
    values, projs = [], []
    for g in groups:
        vecs = v[:, g]
        values.append(float(np.mean(w[g])))
        projs.append(Projector(vecs @ vecs.conj().T))
    return SpectralDecomposition(tuple(values), tuple(projs))


def trace_product(
    rho: DensityOperator | ArrayLike,
    factors: Iterable[Operator | ArrayLike] = (),
    commuting_projectors: bool = False,
) -> float:
    """Real part of Tr(rho · f1 · f2 ...).

    With ``commuting_projectors=True`` the caller asserts the factors are
    mutually commuting projectors, so the trace must be real; an imaginary
    part above 1e-9 then raises :class:`NonRealResult`.
    """
    rho = as_operator(rho)
    m = rho.matrix
    for f in factors:
        f = as_operator(f)
        _same_dim(rho, f)
        m = m @ f.matrix
    tr = complex(np.trace(m))
    if commuting_projectors and abs(tr.imag) > TOL:
        raise NonRealResult(f"trace has imaginary part {tr.imag:.3e} for commuting projectors")
    return tr.real


# common constants ---------------------------------------------------------

PAULI_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
IDENTITY2 = np.eye(2, dtype=np.complex128)


def bloch_vector(theta_deg: float, phi_deg: float = 0.0) -> np.ndarray:
    """Unit vector with polar angle ``theta`` from +z and azimuth ``phi`` (degrees)."""
    t, f = np.radians(theta_deg), np.radians(phi_deg)
    return np.array([np.sin(t) * np.cos(f), np.sin(t) * np.sin(f), np.cos(t)])


def spin_projector(theta_deg: float, phi_deg: float = 0.0) -> Projector:
    """Rank-1 qubit projector ½(I + n·σ) onto spin-up along the Bloch direction n."""
    n = bloch_vector(theta_deg, phi_deg)
    m = 0.5 * (IDENTITY2 + n[0] * PAULI_X + n[1] * PAULI_Y + n[2] * PAULI_Z)
    return Projector(m)


def embed(op: Operator | ArrayLike, slot: int, subsystem_dims: Sequence[int]) -> Operator:
    """Place a single-factor operator at ``slot`` with identities elsewhere."""
    op = as_operator(op)
    dims = list(subsystem_dims)
    if not 0 <= slot < len(dims):
        raise BadIndex(f"slot {slot} out of range for {len(dims)} subsystems")
    if dims[slot] != op.dim:
        raise DimensionMismatch(f"operator dim {op.dim} does not fit slot of dim {dims[slot]}")
    parts = [op if i == slot else Projector(np.eye(d)) for i, d in enumerate(dims)]
    out = tensor(*parts)
    return Projector(out.matrix) if isinstance(op, Projector) else Operator(out.matrix)


def pure_state(vec: ArrayLike) -> DensityOperator:
    v = np.asarray(vec, dtype=np.complex128).ravel()
    nrm = np.linalg.norm(v)
    if nrm == 0:
        raise ValidationError("zero state vector", residual=1.0, what="norm")
    v = v / nrm
    return DensityOperator(np.outer(v, v.conj()))


def maximally_mixed(dim: int) -> DensityOperator:
    return DensityOperator(np.eye(dim) / dim)
