"""Linear feasibility: a float simplex for production and an exact oracle for tests.

``solve_feasibility`` decides whether ``{x >= 0 : |A x - b| <= band}`` is
non-empty. Phase 1 of a dense-tableau simplex (Bland's rule throughout)
minimises the total amount by which the bands are exceeded. A zero optimum
gives a feasible point. A positive optimum comes with a Farkas vector y
satisfying

    y^T A <= 0   and   y^T b - band^T |y| > 0,

which rules out every x >= 0 (``y^T A x <= 0`` contradicts
``y^T A x >= y^T b - band^T |y|``).

``hull_membership_oracle`` answers the convex-hull question in exact rational
arithmetic with its own small simplex. It shares no code with the float path
so that the two can referee each other.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch

FEASIBILITY_THRESHOLD = 1e-7
AMBIGUITY_HALF_WIDTH = 1e-9
PIVOT_TOL = 1e-11
REDUCED_COST_TOL = 1e-12
MAX_PIVOTS = 200_000


@dataclass(frozen=True, eq=False)
class LpProblem:
    """Equality rows ``a_eq @ x = b_eq`` relaxed to ``± band``, with ``x >= 0``."""

    a_eq: np.ndarray
    b_eq: np.ndarray
    band: np.ndarray | float = 0.0

    def __post_init__(self) -> None:
        a = np.atleast_2d(np.array(self.a_eq, dtype=float))
        b = np.array(self.b_eq, dtype=float).ravel()
        if a.shape[0] != b.shape[0]:
            raise DimensionMismatch(f"{a.shape[0]} rows but {b.shape[0]} right-hand sides")
        if a.shape[1] < 1:
            raise DimensionMismatch("need at least one variable")
        band = np.broadcast_to(np.array(self.band, dtype=float), b.shape).copy()
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b)) and np.all(np.isfinite(band))):
            raise ValueError("LP data must be finite")
        if np.any(band < 0):
            raise ValueError("band tolerances must be non-negative")
        for arr in (a, b, band):
            arr.setflags(write=False)
        object.__setattr__(self, "a_eq", a)
        object.__setattr__(self, "b_eq", b)
        object.__setattr__(self, "band", band)

    @property
    def n_vars(self) -> int:
        return self.a_eq.shape[1]

    @property
    def n_rows(self) -> int:
        return self.a_eq.shape[0]

    def residuals(self, x: np.ndarray) -> np.ndarray:
        return self.a_eq @ x - self.b_eq

    def farkas_margin(self, y: np.ndarray) -> float:
        """``y^T b - band^T |y|``, the gap a valid certificate proves."""
        return float(y @ self.b_eq - self.band @ np.abs(y))

    def farkas_slope(self, y: np.ndarray) -> float:
        """Largest entry of ``y^T A``; must be <= 0 (up to rounding) for a valid certificate."""
        return float(np.max(y @ self.a_eq))


@dataclass(frozen=True, eq=False)
class LpOutcome:
    status: str  # "feasible" | "infeasible" | "ambiguous"
    phase1_value: float
    point: np.ndarray | None = None
    farkas: np.ndarray | None = None
    margin: float = 0.0
    pivots: int = 0
    reason: str = ""

    @property
    def feasible(self) -> bool:
        return self.status == "feasible"


def _pivot(t: np.ndarray, row: int, col: int) -> None:
    t[row] /= t[row, col]
    col_vals = t[:, col].copy()
    col_vals[row] = 0.0
    nz = np.nonzero(col_vals)[0]
    if nz.size:
        t[nz] -= np.outer(col_vals[nz], t[row])


def _bland_phase1(t: np.ndarray, basis: list[int], cost: np.ndarray, n_cols: int) -> int:
    """Minimise ``cost @ z`` over the tableau in place; returns the pivot count.

    ``t`` holds ``[B^-1 M | B^-1 r]`` with one row per constraint. The
    objective row is recomputed from the basis each step, which costs a
    matrix-vector product but keeps rounding from accumulating in it.
    """
    pivots = 0
    while pivots < MAX_PIVOTS:
        reduced = cost - cost[basis] @ t[:, :n_cols]
        entering = next((j for j in range(n_cols) if reduced[j] < -REDUCED_COST_TOL), None)
        if entering is None:
            return pivots
        colv = t[:, entering]
        rhs = t[:, -1]
        best_row, best_ratio = -1, np.inf
        for i in np.nonzero(colv > PIVOT_TOL)[0]:
            ratio = rhs[i] / colv[i]
            # Bland tie-break: smallest basic variable index
            if ratio < best_ratio - 1e-15 or (abs(ratio - best_ratio) <= 1e-15 and basis[i] < basis[best_row]):
                best_row, best_ratio = i, ratio
        if best_row < 0:
            # unbounded direction cannot occur in phase 1 (objective bounded below by 0)
            raise RuntimeError("phase-1 simplex reported an unbounded direction")
        _pivot(t, best_row, entering)
        basis[best_row] = entering
        pivots += 1
    raise RuntimeError(f"simplex exceeded {MAX_PIVOTS} pivots")


def _drive_out_artificials(t: np.ndarray, basis: list[int], first_art: int) -> None:
    """Second phase preparation: pivot zero-level artificials out of the basis where possible."""
    for i, bv in enumerate(basis):
        if bv < first_art:
            continue
        row = t[i, :first_art]
        cand = np.nonzero(np.abs(row) > PIVOT_TOL)[0]
        if cand.size:
            _pivot(t, i, int(cand[0]))
            basis[i] = int(cand[0])


def solve_feasibility(p: LpProblem) -> LpOutcome:
    a, b, band = p.a_eq, p.b_eq, p.band
    k, m = a.shape

    zero_rows = np.nonzero(~np.any(a != 0.0, axis=1))[0]
    for i in zero_rows:
        if abs(b[i]) > band[i]:
            y = np.zeros(k)
            y[i] = np.sign(b[i])
            return LpOutcome(
                "infeasible", phase1_value=abs(b[i]) - band[i], farkas=y,
                margin=p.farkas_margin(y), reason=f"row {i} is all zero with rhs {b[i]!r} outside its band",
            )

    # Two inequality rows per constraint, written with slacks:
    #   upper:  A_i x + s_i  = b_i + t_i
    #   lower:  A_i x - s'_i = b_i - t_i
    # and each row sign-normalised so its right-hand side is >= 0.
    rows = 2 * k
    m_struct = np.vstack([a, a])
    rhs = np.concatenate([b + band, b - band])
    slack_sign = np.concatenate([np.ones(k), -np.ones(k)])
    flip = np.where(rhs < 0, -1.0, 1.0)
    m_struct = m_struct * flip[:, None]
    rhs = rhs * flip
    slack_coef = slack_sign * flip  # +1 means the slack can start basic

    needs_art = np.nonzero(slack_coef < 0)[0]
    n_art = needs_art.size
    first_slack, first_art = m, m + rows
    n_cols = m + rows + n_art
    t = np.zeros((rows, n_cols + 1))
    t[:, :m] = m_struct
    t[np.arange(rows), first_slack + np.arange(rows)] = slack_coef
    t[needs_art, first_art + np.arange(n_art)] = 1.0
    t[:, -1] = rhs

    basis = [first_slack + i for i in range(rows)]
    for j, i in enumerate(needs_art):
        basis[i] = first_art + j
    # columns forming the initial identity, row by row, to recover B^-1 at the end
    init_cols = list(basis)

    cost = np.zeros(n_cols)
    cost[first_art:] = 1.0
    pivots = _bland_phase1(t, basis, cost, n_cols)

    z = np.zeros(n_cols)
    z[basis] = t[:, -1]
    phase1 = float(cost @ z)
    x = np.maximum(z[:m], 0.0)

    if abs(phase1 - FEASIBILITY_THRESHOLD) <= AMBIGUITY_HALF_WIDTH:
        return LpOutcome("ambiguous", phase1, point=x, pivots=pivots,
                         reason=f"phase-1 optimum {phase1:.3e} inside the ambiguity band")
    if phase1 < FEASIBILITY_THRESHOLD:
        _drive_out_artificials(t, basis, first_art)
        z = np.zeros(n_cols)
        z[basis] = t[:, -1]
        return LpOutcome("feasible", phase1, point=np.maximum(z[:m], 0.0), pivots=pivots)

    # Phase-1 dual y = c_B^T B^-1; B^-1 sits in the columns that formed the
    # initial identity. Undoing the row flips gives multipliers u <= 0 on the
    # upper rows and l >= 0 on the lower rows, and y = u + l certifies the
    # original banded system.
    y_rows = (cost[basis] @ t[:, init_cols]) * flip
    y = y_rows[:k] + y_rows[k:]
    margin = p.farkas_margin(y)
    slope = p.farkas_slope(y)
    scale = max(1.0, float(np.max(np.abs(y))))
    if slope <= 1e-9 * scale and margin > FEASIBILITY_THRESHOLD:
        return LpOutcome("infeasible", phase1, point=x, farkas=y, margin=margin, pivots=pivots)
    return LpOutcome("ambiguous", phase1, point=x, farkas=y, margin=margin, pivots=pivots,
                     reason=f"certificate check failed (slope {slope:.3e}, margin {margin:.3e})")


# exact oracle ---------------------------------------------------------------


@dataclass(frozen=True)
class HullResult:
    member: bool
    weights: tuple[Fraction, ...] | None = None
    normal: tuple[Fraction, ...] | None = None
    offset: Fraction | None = None

    def separation(self, point: Sequence[Fraction]) -> Fraction:
        """normal·point + offset; <= 0 on every vertex, > 0 on the target."""
        assert self.normal is not None and self.offset is not None
        return sum((n * Fraction(x) for n, x in zip(self.normal, point)), Fraction(0)) + self.offset


def _frac(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


def hull_membership_oracle(vertices: Sequence[Sequence], target: Sequence) -> HullResult:
    """Exact test of ``target ∈ conv(vertices)``.

    Solves ``sum_i w_i v_i = target, sum_i w_i = 1, w >= 0`` by a rational
    phase-1 simplex with one artificial per row. On failure the phase-1 dual
    (normal, offset) separates: ``normal·v + offset <= 0`` for every vertex
    and ``> 0`` for the target.
    """
    verts = [[_frac(x) for x in v] for v in vertices]
    tgt = [_frac(x) for x in target]
    d = len(tgt)
    if not verts:
        raise DimensionMismatch("no vertices")
    if any(len(v) != d for v in verts):
        raise DimensionMismatch("vertex and target dimensions differ")
    nv = len(verts)
    n_rows = d + 1
    # rows: coordinates then normalisation; columns: weights then artificials then rhs
    rows: list[list[Fraction]] = []
    signs: list[int] = []
    for r in range(n_rows):
        coeffs = [v[r] for v in verts] if r < d else [Fraction(1)] * nv
        rhs = tgt[r] if r < d else Fraction(1)
        s = -1 if rhs < 0 else 1
        signs.append(s)
        art = [Fraction(0)] * n_rows
        art[r] = Fraction(1)
        rows.append([c * s for c in coeffs] + art + [rhs * s])
    basis = [nv + r for r in range(n_rows)]
    n_cols = nv + n_rows

    def reduced_costs() -> list[Fraction]:
        out = []
        for j in range(n_cols):
            c = Fraction(1) if j >= nv else Fraction(0)
            for i, bv in enumerate(basis):
                if bv >= nv and rows[i][j]:
                    c -= rows[i][j]
            out.append(c)
        return out

    while True:
        rc = reduced_costs()
        entering = next((j for j in range(n_cols) if rc[j] < 0), None)
        if entering is None:
            break
        best = None
        for i in range(n_rows):
            a = rows[i][entering]
            if a > 0:
                ratio = rows[i][-1] / a
                if best is None or ratio < best[0] or (ratio == best[0] and basis[i] < basis[best[1]]):
                    best = (ratio, i)
        assert best is not None, "phase 1 is bounded below"
        pr = best[1]
        piv = rows[pr][entering]
        rows[pr] = [x / piv for x in rows[pr]]
        for i in range(n_rows):
            if i != pr and rows[i][entering]:
                f = rows[i][entering]
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[pr])]
        basis[pr] = entering

    value = sum((rows[i][-1] for i, bv in enumerate(basis) if bv >= nv), Fraction(0))
    if value == 0:
        w = [Fraction(0)] * nv
        for i, bv in enumerate(basis):
            if bv < nv:
                w[bv] = rows[i][-1]
        return HullResult(True, weights=tuple(w))
    # y_r = 1 - reduced cost of artificial r, in the sign-normalised rows
    rc = reduced_costs()
    y = [(Fraction(1) - rc[nv + r]) * signs[r] for r in range(n_rows)]
    # y·[v;1] <= 0 for vertices and y·[t;1] = value > 0; flip so the target is on the positive side
    return HullResult(False, normal=tuple(y[:d]), offset=y[d])
