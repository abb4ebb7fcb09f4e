"""Von Neumann entropy and the information inequality S_j <= S <= Σ S_j.

Entropies are in nats. A classical joint distribution always satisfies both
sides of the inequality. An entangled pure state breaks the left side: the
whole has zero entropy while each part is mixed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch
from .hilbert import DensityOperator, eigvalsh, max_abs, pure_state, reduced_state, tensor

EIGEN_FLOOR = 1e-12
VIOLATION_TOL = 1e-9
PRODUCT_TOL = 1e-6


def von_neumann_entropy(rho: DensityOperator) -> float:
    lam = eigvalsh(rho)
    lam = lam[lam > EIGEN_FLOOR]
    return float(-np.sum(lam * np.log(lam))) + 0.0  # no -0.0 for pure states


def make_singlet() -> DensityOperator:
    """(|↑↓> - |↓↑>)/√2 with basis order |↑↑>, |↑↓>, |↓↑>, |↓↓>."""
    return pure_state(np.array([0.0, 1.0, -1.0, 0.0]) / math.sqrt(2.0))


@dataclass(frozen=True)
class EntropyReport:
    total: float
    parts: tuple[float, ...]

    @property
    def lower_bound_slack(self) -> float:
        """min_j (S - S_j); negative means some part is more uncertain than the whole."""
        return min(self.total - s for s in self.parts)

    @property
    def subadditivity_slack(self) -> float:
        return sum(self.parts) - self.total

    @property
    def violation(self) -> bool:
        return self.lower_bound_slack < -VIOLATION_TOL

    @staticmethod
    def bits(nats: float) -> float:
        return nats / math.log(2.0)


def information_inequality_report(rho: DensityOperator, subsystem_dims: Sequence[int]) -> EntropyReport:
    dims = list(subsystem_dims)
    if int(np.prod(dims)) != rho.dim:
        raise DimensionMismatch(f"subsystem dims {dims} do not multiply to {rho.dim}")
    parts = tuple(von_neumann_entropy(reduced_state(rho, dims, j)) for j in range(len(dims)))
    return EntropyReport(von_neumann_entropy(rho), parts)


def product_form_probe(rho: DensityOperator, subsystem_dims: Sequence[int], tol: float = PRODUCT_TOL):
    """Return the factor states if rho equals the product of its reductions, else None.

    This finds only product decompositions; a ``None`` answer does not by
    itself prove entanglement for mixed states.
    """
    dims = list(subsystem_dims)
    factors = [reduced_state(rho, dims, j) for j in range(len(dims))]
    if max_abs(tensor(*factors).matrix - rho.matrix) <= tol:
        return factors
    return None
