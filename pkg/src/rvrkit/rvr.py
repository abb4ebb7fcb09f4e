"""Random-variable representations of (projector set, state) pairs.

Each projector becomes a {0,1} random variable. Every mutually commuting
subset gets the probability Tr(rho · product of its projectors), the chance
that all of its variables equal 1. The representation is *complete* when one
joint distribution over all variables has every one of those probabilities
as a marginal. Completeness is what a noncontextual hidden-variable model
needs.

Variables come in complement pairs (P, I - P). The joint distribution lives on
one representative per pair (the "base" variables); the other member is
fixed to ``1 - base``.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .classical import JointTable, PairMarginals, atom_bits, distance, quadrilateral_check
from .errors import DimensionMismatch, NumericallyAmbiguous, TooManyVariables
from .hilbert import TOL, DensityOperator, Projector, as_operator, commutes, max_abs, spectral_decompose
from .lp import HullResult, LpOutcome, LpProblem, hull_membership_oracle, solve_feasibility
from .quantum_prob import marginal_probabilities

log = logging.getLogger(__name__)

MAX_BASE_VARIABLES = 20
MARGINAL_BAND = 1e-9
WITNESS_TOL = 1e-7
VIOLATION_TOL = 1e-7
DEFAULT_MAX_SUBSET = 4


@dataclass(frozen=True, eq=False)
class CommutationGraph:
    adjacency: np.ndarray  # bool, symmetric, True on the diagonal

    @classmethod
    def of(cls, projectors: Sequence[Projector]) -> "CommutationGraph":
        n = len(projectors)
        adj = np.eye(n, dtype=bool)
        for i, j in itertools.combinations(range(n), 2):
            adj[i, j] = adj[j, i] = commutes(projectors[i], projectors[j])
        adj.setflags(write=False)
        return cls(adj)

    def commute(self, i: int, j: int) -> bool:
        return bool(self.adjacency[i, j])

    def cliques(self, max_size: int) -> list[tuple[int, ...]]:
        """All mutually commuting index sets of size 1..max_size, by size then lexicographically."""
        n = self.adjacency.shape[0]
        out: list[tuple[int, ...]] = []
        level = [(i,) for i in range(n)]
        size = 1
        while level and size <= max_size:
            out.extend(level)
            nxt = []
            for c in level:
                for j in range(c[-1] + 1, n):
                    if all(self.adjacency[i, j] for i in c):
                        nxt.append(c + (j,))
            level = nxt
            size += 1
        return out


@dataclass(frozen=True, eq=False)
class RvrModel:
    projectors: tuple[Projector, ...]
    labels: tuple[str, ...]
    complement: tuple[int, ...]  # complement[i] is the index of I - P_i
    rho: DensityOperator
    graph: CommutationGraph
    defined: Mapping[tuple[int, ...], float]
    max_subset: int

    @property
    def n_variables(self) -> int:
        return len(self.projectors)

    @property
    def base_variables(self) -> tuple[int, ...]:
        """One representative (the lower index) of each complement pair."""
        return tuple(i for i in range(self.n_variables) if i <= self.complement[i])

    def base_literal(self, i: int) -> tuple[int, bool]:
        """(position among base variables, negated?) for variable ``i``."""
        base = self.base_variables
        if i in base:
            return base.index(i), False
        return base.index(self.complement[i]), True

    def is_complement_pair(self, subset: Sequence[int]) -> bool:
        return len(subset) == 2 and self.complement[subset[0]] == subset[1]

    def probability(self, *indices: int) -> float:
        return self.defined[tuple(sorted(indices))]

    def pair_marginals(self) -> PairMarginals:
        singles = tuple(self.defined[(i,)] for i in range(self.n_variables))
        pairs = {k: v for k, v in self.defined.items() if len(k) == 2}
        return PairMarginals(singles, pairs)

    def label_of(self, subset: Sequence[int]) -> str:
        return "p(" + ",".join(self.labels[i] for i in subset) + ")"


@dataclass(frozen=True)
class QuadrilateralCertificate:
    indices: tuple[int, int, int, int]  # (a1, b1, b2, a2)
    labels: tuple[str, str, str, str]
    slack: float

    kind = "quadrilateral"


@dataclass(frozen=True)
class FarkasCertificate:
    """Linear functional on the defined marginals that is <= 0 for every joint table.

    ``coefficients`` maps each defined subset to its multiplier; the constant
    term is the multiplier of the normalisation row. ``slack`` is minus the
    proven margin, so it is negative for a valid certificate.
    """

    coefficients: Mapping[tuple[int, ...], float]
    constant: float
    slack: float

    kind = "farkas"


@dataclass(frozen=True, eq=False)
class FeasibilityResult:
    status: str  # "complete" | "incomplete"
    witness: JointTable | None = None
    certificate: QuadrilateralCertificate | FarkasCertificate | None = None
    farkas: FarkasCertificate | None = None
    lp: LpOutcome | None = None
    max_witness_error: float | None = None

    @property
    def complete(self) -> bool:
        return self.status == "complete"


def _merge_duplicates(projectors: Sequence[Projector], labels: Sequence[str]) -> tuple[list[Projector], list[str]]:
    kept: list[Projector] = []
    kept_labels: list[str] = []
    for p, lab in zip(projectors, labels):
        if any(max_abs(p.matrix - q.matrix) <= TOL for q in kept):
            log.debug("dropping duplicate projector %s", lab)
            continue
        kept.append(p)
        kept_labels.append(lab)
    return kept, kept_labels


def close_under_complement(projectors: Sequence[Projector], labels: Sequence[str]) -> tuple[list[Projector], list[str], list[int]]:
    projs, labs = _merge_duplicates(projectors, labels)
    n0 = len(projs)
    comp = [-1] * n0
    for i in range(n0):
        if comp[i] >= 0:
            continue
        target = np.eye(projs[i].dim) - projs[i].matrix
        for j in range(n0):
            if j != i and comp[j] < 0 and max_abs(projs[j].matrix - target) <= TOL:
                comp[i], comp[j] = j, i
                break
    for i in range(n0):
        if comp[i] < 0:
            projs.append(projs[i].complement())
            labs.append("~" + labs[i])
            comp[i] = len(projs) - 1
            comp.append(i)
    return projs, labs, comp


def build_rvr(
    projectors: Sequence[Projector],
    rho: DensityOperator,
    max_subset: int = DEFAULT_MAX_SUBSET,
    labels: Sequence[str] | None = None,
) -> RvrModel:
    if max_subset < 2:
        raise ValueError("max_subset must be at least 2")
    projectors = [p if isinstance(p, Projector) else Projector(as_operator(p).matrix) for p in projectors]
    if not projectors:
        raise ValueError("need at least one projector")
    for i, p in enumerate(projectors):
        if p.dim != rho.dim:
            raise DimensionMismatch(f"projector {i} has dim {p.dim}, state has dim {rho.dim}")
    if labels is None:
        labels = [f"P{i}" for i in range(len(projectors))]
    if len(labels) != len(projectors):
        raise ValueError("one label per projector")
    projs, labs, comp = close_under_complement(projectors, list(labels))
    graph = CommutationGraph.of(projs)
    defined = {s: marginal_probabilities(rho, projs, s) for s in graph.cliques(max_subset)}
    return RvrModel(tuple(projs), tuple(labs), tuple(comp), rho, graph, defined, max_subset)


def projectors_from_observable(op) -> list[Projector]:
    """Eigenprojectors of a Hermitian observable, the route for non-projector inputs."""
    return list(spectral_decompose(op).eigenprojectors)


# LP encoding -----------------------------------------------------------------


def indicator_rows(model: RvrModel, subsets: Sequence[tuple[int, ...]]) -> np.ndarray:
    """Row per subset: which base-variable atoms put every variable in it to 1."""
    nb = len(model.base_variables)
    bits = atom_bits(nb).astype(bool)
    rows = np.ones((len(subsets), 2**nb), dtype=bool)
    for r, s in enumerate(subsets):
        for v in s:
            pos, neg = model.base_literal(v)
            rows[r] &= ~bits[:, pos] if neg else bits[:, pos]
    return rows.astype(float)


def witness_error(model: RvrModel, table: JointTable) -> float:
    subsets = list(model.defined)
    pred = indicator_rows(model, subsets) @ table.probs
    target = np.array([model.defined[s] for s in subsets])
    return float(np.max(np.abs(pred - target))) if subsets else 0.0


def completeness_lp(model: RvrModel) -> FeasibilityResult:
    nb = len(model.base_variables)
    if nb > MAX_BASE_VARIABLES:
        raise TooManyVariables(f"{nb} base variables exceed the limit of {MAX_BASE_VARIABLES}")
    subsets = list(model.defined)
    a = np.vstack([np.ones((1, 2**nb)), indicator_rows(model, subsets)])
    b = np.concatenate([[1.0], [model.defined[s] for s in subsets]])
    band = np.concatenate([[0.0], np.full(len(subsets), MARGINAL_BAND)])
    problem = LpProblem(a, b, band)
    outcome = solve_feasibility(problem)
    log.debug("completeness LP: %s after %d pivots (phase 1 = %.3e)", outcome.status, outcome.pivots, outcome.phase1_value)

    if outcome.status == "ambiguous":
        raise NumericallyAmbiguous(f"completeness LP is numerically ambiguous: {outcome.reason}", outcome.phase1_value)

    if outcome.feasible:
        x = np.maximum(outcome.point, 0.0)
        table = JointTable(nb, x / x.sum())
        err = witness_error(model, table)
        if err > WITNESS_TOL:
            raise NumericallyAmbiguous(f"LP point misses a defined marginal by {err:.3e}", outcome.phase1_value)
        return FeasibilityResult("complete", witness=table, lp=outcome, max_witness_error=err)

    y = outcome.farkas
    farkas = FarkasCertificate(
        coefficients={s: float(c) for s, c in zip(subsets, y[1:])},
        constant=float(y[0]),
        slack=-outcome.margin,
    )
    scan = scan_quadrilaterals(model)
    cert: QuadrilateralCertificate | FarkasCertificate = farkas
    if scan and scan[0][1] < -VIOLATION_TOL:
        quad, slack = scan[0]
        cert = QuadrilateralCertificate(quad, tuple(model.labels[i] for i in quad), slack)
    return FeasibilityResult("incomplete", certificate=cert, farkas=farkas, lp=outcome)


def scan_quadrilaterals(model: RvrModel) -> list[tuple[tuple[int, int, int, int], float]]:
    """Slack of every admissible quadrilateral (a1, b1, b2, a2), most violated first.

    Admissible: distinct variables whose four cross pairs (a1,b1), (a1,b2),
    (b2,a2), (a2,b1) all have defined joint probabilities.
    """
    m = model.pair_marginals()
    n = m.n
    if n < 4:
        return []
    dist = np.full((n, n), np.nan)
    for i in range(n):
        for j in range(n):
            if m.declared(i, j):
                dist[i, j] = distance(m, i, j)
    a1, b1, b2, a2 = np.meshgrid(*(np.arange(n),) * 4, indexing="ij")
    slack = dist[a1, b2] + dist[b2, a2] + dist[a2, b1] - dist[a1, b1]
    distinct = (a1 != b1) & (a1 != b2) & (a1 != a2) & (b1 != b2) & (b1 != a2) & (b2 != a2)
    ok = distinct & np.isfinite(slack)
    idx = np.nonzero(ok.ravel())[0]  # row-major: lexicographic in (a1, b1, b2, a2)
    vals = slack.ravel()[idx]
    order = np.argsort(vals, kind="stable")
    quads = np.stack([a1.ravel()[idx], b1.ravel()[idx], b2.ravel()[idx], a2.ravel()[idx]], axis=1)
    return [(tuple(int(v) for v in quads[o]), float(vals[o])) for o in order]


def kochen_specker_witness(model: RvrModel) -> QuadrilateralCertificate | None:
    """Most violated quadrilateral, if it is violated by more than 1e-7.

    A returned certificate shows that no noncontextual hidden-variable model
    reproduces this state on this projector set.
    """
    scan = scan_quadrilaterals(model)
    if not scan or scan[0][1] >= -VIOLATION_TOL:
        return None
    quad, slack = scan[0]
    # cross-check against the scalar routine so the two code paths stay in step
    assert abs(quadrilateral_check(model.pair_marginals(), *quad) - slack) < 1e-12
    return QuadrilateralCertificate(quad, tuple(model.labels[i] for i in quad), slack)


# exact oracle bridge -----------------------------------------------------------


def base_subsets(model: RvrModel) -> list[tuple[int, ...]]:
    """Defined subsets made of base variables only.

    Probabilities of subsets that contain a complemented variable follow from
    these by inclusion-exclusion, so they are the affinely independent
    coordinates of the marginal vector.
    """
    base = set(model.base_variables)
    return [s for s in model.defined if all(v in base for v in s)]


def hull_oracle(model: RvrModel) -> HullResult:
    """Exact rational version of the completeness question (small instances only).

    Vertices are the deterministic assignments of the base variables; the
    target is the vector of defined base-subset probabilities, converted to
    rationals exactly from their float values.
    """
    nb = len(model.base_variables)
    if nb > 12:
        raise TooManyVariables("exact oracle limited to 12 base variables")
    subsets = base_subsets(model)
    rows = indicator_rows(model, subsets)
    vertices = [[Fraction(int(v)) for v in rows[:, atom]] for atom in range(2**nb)]
    target = [Fraction(model.defined[s]) for s in subsets]
    return hull_membership_oracle(vertices, target)
