"""Probabilities predicted by a density operator.

Every distribution here is computed in closed spectral form: an observable
with eigenprojectors P_j assigns Tr(rho P_j) to eigenvalue a_j, and a family
of commuting observables assigns Tr(rho P_λ Q_μ ...) to each outcome tuple.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import NotCommuting, NotHermitian, OutOfRange, ValidationError
from .hilbert import (
    TOL,
    DensityOperator,
    Operator,
    Projector,
    as_operator,
    commutes,
    hermitian_residual,
    jacobi_eigh,
    spectral_decompose,
    trace_product,
)

NEG_CLAMP = 1e-12
JOINT_BASIS_SEED = 20160327


@dataclass(frozen=True)
class DiscreteDistribution:
    support: tuple[float, ...]
    weights: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.support) != len(self.weights):
            raise ValidationError("support and weights differ in length")
        if any(b <= a for a, b in zip(self.support, self.support[1:])):
            raise ValidationError("support must be strictly ascending")
        if any(w < 0 for w in self.weights):
            raise ValidationError("negative weight", residual=-min(self.weights))
        s = sum(self.weights)
        if abs(s - 1.0) > TOL:
            raise ValidationError(f"weights sum to {s!r}", residual=abs(s - 1.0))

    def prob(self, value: float, tol: float = 1e-8) -> float:
        for a, w in zip(self.support, self.weights):
            if abs(a - value) < tol:
                return w
        return 0.0

    def mean(self) -> float:
        return float(np.dot(self.support, self.weights))


@dataclass(frozen=True)
class CommutingJoint:
    """Joint outcome table of commuting observables.

    ``table[i, j, ...]`` is the probability that observable 0 takes
    ``supports[0][i]``, observable 1 takes ``supports[1][j]``, and so on.
    """

    supports: tuple[tuple[float, ...], ...]
    table: np.ndarray

    @property
    def n(self) -> int:
        return len(self.supports)

    def marginal(self, k: int) -> DiscreteDistribution:
        axes = tuple(i for i in range(self.n) if i != k)
        w = self.table.sum(axis=axes) if axes else self.table
        return DiscreteDistribution(self.supports[k], tuple(float(x) for x in w))

    def prob(self, values: Sequence[float], tol: float = 1e-8) -> float:
        idx = []
        for sup, v in zip(self.supports, values):
            hits = [i for i, a in enumerate(sup) if abs(a - v) < tol]
            if not hits:
                return 0.0
            idx.append(hits[0])
        return float(self.table[tuple(idx)])


def _clamp_prob(p: float, what: str) -> float:
    if p < -NEG_CLAMP:
        raise OutOfRange(f"{what}: negative probability {p:.3e}")
    return max(p, 0.0)


def observable_distribution(rho: DensityOperator, a: Operator) -> DiscreteDistribution:
    sd = spectral_decompose(a)
    weights = [_clamp_prob(trace_product(rho, [p]), "observable_distribution") for p in sd.eigenprojectors]
    total = sum(weights)
    # renormalise rounding only; validity was already checked by the clamp
    weights = [w / total for w in weights]
    return DiscreteDistribution(sd.eigenvalues, tuple(weights))


def projector_probability(rho: DensityOperator, p: Projector) -> float:
    """Tr(rho p), the probability that the projector takes the value 1."""
    v = trace_product(rho, [p], commuting_projectors=True)
    if v < -TOL or v > 1 + TOL:
        raise OutOfRange(f"Tr(rho P) = {v:.12g} is not a probability")
    return min(max(v, 0.0), 1.0)


def _check_commuting(ops: Sequence[Operator]) -> None:
    for i, j in itertools.combinations(range(len(ops)), 2):
        if not commutes(ops[i], ops[j]):
            raise NotCommuting(f"observables {i} and {j} do not commute", pair=(i, j))


def commuting_joint(rho: DensityOperator, observables: Sequence[Operator]) -> CommutingJoint:
    obs = [as_operator(o) for o in observables]
    for i, o in enumerate(obs):
        r = hermitian_residual(o)
        if r > TOL:
            raise NotHermitian(f"observable {i} not Hermitian: residual {r:.3e}", residual=r)
    _check_commuting(obs)
    decomps = [spectral_decompose(o) for o in obs]
    shape = tuple(len(d.eigenvalues) for d in decomps)
    table = np.zeros(shape)
    for idx in itertools.product(*(range(s) for s in shape)):
        factors = [d.eigenprojectors[i] for d, i in zip(decomps, idx)]
        table[idx] = _clamp_prob(trace_product(rho, factors), "commuting_joint")
    table.setflags(write=False)
    return CommutingJoint(tuple(d.eigenvalues for d in decomps), table)


def marginal_probabilities(rho: DensityOperator, projectors: Sequence[Projector], subset: Sequence[int]) -> float:
    """Probability that every projector in ``subset`` takes the value 1."""
    chosen = [projectors[i] for i in subset]
    try:
        _check_commuting(chosen)
    except NotCommuting as exc:
        i, j = exc.pair
        raise NotCommuting(f"projectors {subset[i]} and {subset[j]} do not commute", pair=(subset[i], subset[j])) from None
    v = trace_product(rho, chosen, commuting_projectors=True)
    if v < -TOL or v > 1 + TOL:
        raise OutOfRange(f"subset probability {v:.12g} out of range")
    return min(max(v, 0.0), 1.0)


def simultaneous_eigenbasis(observables: Sequence[Operator], seed: int = JOINT_BASIS_SEED) -> np.ndarray:
    """Orthonormal basis of common eigenvectors (columns) of commuting observables.

    Diagonalises a random real combination of the family. For generic
    coefficients every eigenspace of the combination is a joint eigenspace, so
    any basis inside it is a simultaneous eigenbasis.
    """
    obs = [as_operator(o) for o in observables]
    _check_commuting(obs)
    rng = np.random.default_rng(seed)
    coeffs = rng.uniform(0.5, 1.5, size=len(obs)) * np.pi
    combo = sum(c * o.matrix for c, o in zip(coeffs, obs))
    return jacobi_eigh(combo)[1]


def joint_from_common_basis(rho: DensityOperator, observables: Sequence[Operator], seed: int = JOINT_BASIS_SEED) -> CommutingJoint:
    """Joint table as a mixture over common eigenvectors.

    Each basis vector phi_j carries weight <phi_j|rho|phi_j> and is a
    deterministic outcome for every observable, so the table is a sum of
    point masses. Independent of :func:`commuting_joint`, which works from
    products of eigenprojectors.
    """
    obs = [as_operator(o) for o in observables]
    basis = simultaneous_eigenbasis(obs, seed)
    decomps = [spectral_decompose(o) for o in obs]
    supports = tuple(d.eigenvalues for d in decomps)
    table = np.zeros(tuple(len(s) for s in supports))
    rho_m = as_operator(rho).matrix
    for j in range(basis.shape[1]):
        phi = basis[:, j]
        weight = float(np.real(phi.conj() @ rho_m @ phi))
        idx = []
        for o, sup in zip(obs, supports):
            val = float(np.real(phi.conj() @ o.matrix @ phi))
            idx.append(int(np.argmin([abs(val - a) for a in sup])))
        table[tuple(idx)] += weight
    table.setflags(write=False)
    return CommutingJoint(supports, table)
