import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rvrkit.entropy import make_singlet
from rvrkit.errors import NotCommuting, NotHermitian, OutOfRange
from rvrkit.hilbert import (
    IDENTITY2,
    PAULI_X,
    PAULI_Z,
    DensityOperator,
    Projector,
    embed,
    maximally_mixed,
    pure_state,
    spin_projector,
    tensor,
)
from rvrkit.quantum_prob import (
    commuting_joint,
    joint_from_common_basis,
    marginal_probabilities,
    observable_distribution,
    projector_probability,
)

UP = np.diag([1.0, 0.0])
DOWN = np.diag([0.0, 1.0])


def test_eigenstate_distribution():
    d = observable_distribution(pure_state(np.array([1.0, 0.0])), PAULI_Z)
    assert d.support == pytest.approx((-1.0, 1.0))
    assert d.prob(1.0) == pytest.approx(1.0)
    assert d.prob(-1.0) == pytest.approx(0.0)


@pytest.mark.parametrize("rho", [maximally_mixed(2), pure_state(np.array([1.0, 1.0]) / math.sqrt(2))])
def test_half_half(rho):
    d = observable_distribution(rho, PAULI_Z)
    assert d.weights == pytest.approx((0.5, 0.5))
    assert d.mean() == pytest.approx(0.0, abs=1e-12)


def test_observable_distribution_rejects_non_hermitian():
    with pytest.raises(NotHermitian):
        observable_distribution(maximally_mixed(2), np.array([[0, 1], [0, 0]]))


def test_mean_matches_trace():
    rng = np.random.default_rng(4)
    a = rng.normal(size=(3, 3))
    a = a + a.T
    rho = DensityOperator(np.diag([0.2, 0.3, 0.5]).astype(complex))
    assert observable_distribution(rho, a).mean() == pytest.approx(np.trace(rho.matrix @ a).real)


class TestProjectorProbability:
    def test_certain(self):
        assert projector_probability(DensityOperator(UP), Projector(UP)) == pytest.approx(1.0)

    def test_impossible(self):
        assert projector_probability(DensityOperator(UP), Projector(DOWN)) == pytest.approx(0.0)

    def test_mixed(self):
        assert projector_probability(maximally_mixed(2), spin_projector(123, 45)) == pytest.approx(0.5)

    def test_out_of_range(self):
        # a non-positive "state" slipped past validation
        bad = object.__new__(DensityOperator)
        object.__setattr__(bad, "matrix", np.diag([2.0, -1.0]).astype(complex))
        with pytest.raises(OutOfRange):
            projector_probability(bad, Projector(UP))


class TestCommutingJoint:
    def test_singlet_up_up(self):
        a = embed(UP, 0, [2, 2])
        b = embed(UP, 1, [2, 2])
        j = commuting_joint(make_singlet(), [a, b])
        assert j.prob([1, 1]) == pytest.approx(0.0, abs=1e-12)
        assert j.prob([1, 0]) == pytest.approx(0.5)
        assert j.prob([0, 1]) == pytest.approx(0.5)
        assert j.prob([0, 0]) == pytest.approx(0.0, abs=1e-12)

    def test_product_factorises(self):
        rng = np.random.default_rng(5)
        r1 = pure_state(rng.normal(size=2) + 1j * rng.normal(size=2))
        r2 = pure_state(rng.normal(size=2) + 1j * rng.normal(size=2))
        a, b = rng.normal(size=(2, 2)), rng.normal(size=(2, 2))
        a, b = a + a.T, b + b.T
        j = commuting_joint(tensor(r1, r2), [tensor(a, IDENTITY2), tensor(IDENTITY2, b)])
        outer = np.outer(j.marginal(0).weights, j.marginal(1).weights)
        assert np.max(np.abs(j.table - outer)) < 1e-9

    def test_single_observable(self):
        rho = pure_state(np.array([0.6, 0.8j]))
        j = commuting_joint(rho, [PAULI_X])
        d = observable_distribution(rho, PAULI_X)
        assert j.marginal(0).weights == pytest.approx(d.weights)

    def test_not_commuting_names_pair(self):
        with pytest.raises(NotCommuting) as exc:
            commuting_joint(maximally_mixed(2), [PAULI_Z, PAULI_Z, PAULI_X])
        assert exc.value.pair == (0, 2)

    def test_non_hermitian(self):
        with pytest.raises(NotHermitian):
            commuting_joint(maximally_mixed(2), [np.array([[0, 1], [0, 0]])])


class TestMarginalProbabilities:
    def test_single(self):
        rho = pure_state(np.array([0.6, 0.8]))
        p = spin_projector(40)
        assert marginal_probabilities(rho, [p], [0]) == pytest.approx(projector_probability(rho, p))

    def test_singlet_anticorrelation(self):
        ps = [embed(UP, 0, [2, 2]), embed(UP, 1, [2, 2])]
        assert marginal_probabilities(make_singlet(), ps, [0, 1]) == pytest.approx(0.0, abs=1e-12)

    def test_complement_pair(self):
        p = spin_projector(77, 13)
        assert marginal_probabilities(pure_state(np.array([1.0, 0])), [p, p.complement()], [0, 1]) == pytest.approx(0, abs=1e-12)

    def test_noncommuting_pair_reports_indices(self):
        ps = [spin_projector(0), spin_projector(10), spin_projector(90)]
        with pytest.raises(NotCommuting) as exc:
            marginal_probabilities(maximally_mixed(2), ps, [2, 0])
        assert set(exc.value.pair) == {0, 2}


def _random_commuting_family(rng, d, k):
    q, _ = np.linalg.qr(rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)))
    # small integer spectra force degeneracies
    return [q @ np.diag(rng.integers(-1, 2, size=d).astype(float)) @ q.conj().T for _ in range(k)]


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 5), st.integers(1, 3), st.integers(0, 2**31 - 1))
def test_two_routes_agree(d, k, seed):
    rng = np.random.default_rng(seed)
    obs = _random_commuting_family(rng, d, k)
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = DensityOperator(g @ g.conj().T / np.trace(g @ g.conj().T).real)
    j1 = commuting_joint(rho, obs)
    j2 = joint_from_common_basis(rho, obs)
    for s1, s2 in zip(j1.supports, j2.supports):
        assert s1 == pytest.approx(s2)
    assert np.max(np.abs(j1.table - j2.table)) < 1e-8
    assert j1.table.sum() == pytest.approx(1.0)
