import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from instances import VERTICES, feasibility_problem, random_rational_instance
from rvrkit.errors import DimensionMismatch
from rvrkit.lp import FEASIBILITY_THRESHOLD, LpProblem, hull_membership_oracle, solve_feasibility


def assert_valid_farkas(p: LpProblem, y: np.ndarray) -> None:
    assert p.farkas_slope(y) <= 1e-9 * max(1.0, np.max(np.abs(y)))
    assert p.farkas_margin(y) > FEASIBILITY_THRESHOLD


class TestSolveFeasibility:
    def test_simplex_row(self):
        out = solve_feasibility(LpProblem([[1.0, 1.0]], [1.0]))
        assert out.feasible
        assert out.point.sum() == pytest.approx(1.0)
        assert np.all(out.point >= 0)

    def test_negative_target(self):
        p = LpProblem([[1.0]], [-1.0])
        out = solve_feasibility(p)
        assert out.status == "infeasible"
        assert_valid_farkas(p, out.farkas)

    def test_band_absorbs_small_offset(self):
        assert solve_feasibility(LpProblem([[1.0]], [-5e-10], band=1e-9)).feasible

    def test_zero_row(self):
        p = LpProblem([[0.0, 0.0], [1.0, 1.0]], [0.5, 1.0])
        out = solve_feasibility(p)
        assert out.status == "infeasible"
        assert np.array_equal(out.farkas, [1.0, 0.0])
        assert "all zero" in out.reason

    def test_zero_row_with_zero_rhs_is_harmless(self):
        assert solve_feasibility(LpProblem([[0.0, 0.0], [1.0, 1.0]], [0.0, 1.0])).feasible

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            LpProblem([[1.0, 2.0]], [1.0, 2.0])

    def test_chsh_violating_marginals(self):
        c, s = 0.5 + math.sqrt(2) / 4, 0.5 - math.sqrt(2) / 4
        # p(a_i b_j) for the singlet at optimal settings; three at (2+√2)/8, one at (2-√2)/8
        target = [0.5] * 4 + [c / 2, c / 2, c / 2, s / 2]
        p = feasibility_problem(target)
        out = solve_feasibility(p)
        assert out.status == "infeasible"
        assert_valid_farkas(p, out.farkas)

    def test_redundant_rows(self):
        out = solve_feasibility(LpProblem([[1.0, 1.0], [2.0, 2.0], [1.0, 0.0]], [1.0, 2.0, 0.25]))
        assert out.feasible
        assert out.point == pytest.approx([0.25, 0.75])


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(1, 5), st.integers(1, 8))
def test_outcome_invariants_against_scipy(seed, k, m):
    rng = np.random.default_rng(seed)
    a = rng.integers(-2, 3, size=(k, m)).astype(float)
    b = rng.integers(-3, 4, size=k).astype(float)
    p = LpProblem(a, b, 1e-9)
    out = solve_feasibility(p)
    ref = linprog(np.zeros(m), A_eq=a, b_eq=b, bounds=[(0, None)] * m, method="highs")
    if out.status == "feasible":
        assert np.all(out.point >= 0)
        assert np.max(np.abs(p.residuals(out.point))) <= 1e-9 + FEASIBILITY_THRESHOLD
        assert ref.status == 0
    elif out.status == "infeasible":
        assert_valid_farkas(p, out.farkas)
        assert ref.status == 2


class TestHullOracle:
    def test_vertex(self):
        r = hull_membership_oracle([[0, 0], [1, 0], [0, 1]], [1, 0])
        assert r.member
        assert r.weights == (0, 1, 0)

    def test_midpoint(self):
        r = hull_membership_oracle([[0, 0], [2, 2]], [1, 1])
        assert r.member
        assert r.weights == (Fraction(1, 2), Fraction(1, 2))

    def test_outside(self):
        verts = [[0, 0], [1, 0], [0, 1]]
        r = hull_membership_oracle(verts, [1, 1])
        assert not r.member
        assert all(r.separation(v) <= 0 for v in verts)
        assert r.separation([1, 1]) > 0

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            hull_membership_oracle([[0, 0], [1]], [0, 0])

    def test_singlet_separated_by_ch_functional(self):
        r2 = Fraction(1414213562373095, 10**15)
        c, s = (2 + r2) / 8, (2 - r2) / 8
        target = [Fraction(1, 2)] * 4 + [c, c, c, s]
        r = hull_membership_oracle(VERTICES, target)
        assert not r.member
        assert all(r.separation(v) <= 0 for v in VERTICES)
        assert r.separation(target) > 0
        # -(p(a1) + p(b1) - p(a1b1) - p(a1b2) - p(a2b1) + p(a2b2)), the CH expression negated
        ch = [1, 0, 1, 0, -1, -1, -1, 1]
        k = r.normal[0] / -ch[0]
        assert k > 0
        assert list(r.normal) == [-k * x for x in ch]


def test_float_lp_agrees_with_exact_oracle():
    rng = np.random.default_rng(11)
    seen = {True: 0, False: 0}
    for _ in range(60):
        tgt = random_rational_instance(rng)
        exact = hull_membership_oracle(VERTICES, tgt).member
        out = solve_feasibility(feasibility_problem(tgt))
        if out.status != "ambiguous":
            assert out.feasible == exact
        seen[exact] += 1
    assert seen[True] and seen[False]
