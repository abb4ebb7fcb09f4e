import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rvrkit.entropy import EntropyReport, information_inequality_report, make_singlet, product_form_probe, von_neumann_entropy
from rvrkit.errors import DimensionMismatch
from rvrkit.hilbert import DensityOperator, embed, maximally_mixed, pure_state, reduced_state, spin_projector, tensor
from rvrkit.quantum_prob import projector_probability

LN2 = math.log(2)


def random_density(rng, n, rank=None):
    g = rng.normal(size=(n, rank or n)) + 1j * rng.normal(size=(n, rank or n))
    r = g @ g.conj().T
    return DensityOperator(r / np.trace(r).real)


def entropy_oracle(rho: DensityOperator) -> float:
    lam = np.linalg.eigvalsh(rho.matrix)
    lam = lam[lam > 1e-12]
    return float(-(lam * np.log(lam)).sum())


class TestVonNeumann:
    def test_pure(self):
        assert von_neumann_entropy(pure_state(np.array([0.6, 0.8j]))) == pytest.approx(0.0, abs=1e-12)

    def test_qubit_mixed(self):
        assert von_neumann_entropy(maximally_mixed(2)) == pytest.approx(LN2)

    def test_two_qubit_mixed(self):
        assert von_neumann_entropy(maximally_mixed(4)) == pytest.approx(2 * LN2)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 6), st.integers(0, 2**31 - 1))
    def test_against_lapack(self, n, seed):
        rho = random_density(np.random.default_rng(seed), n)
        assert von_neumann_entropy(rho) == pytest.approx(entropy_oracle(rho), abs=1e-10)


class TestSinglet:
    def test_entropies(self):
        rho = make_singlet()
        assert abs(von_neumann_entropy(rho)) < 1e-9
        for k in (0, 1):
            assert abs(von_neumann_entropy(reduced_state(rho, [2, 2], k)) - LN2) < 1e-9

    def test_up_up_impossible(self):
        up = np.diag([1.0, 0.0])
        p = tensor(up, up)
        assert projector_probability(make_singlet(), p) == pytest.approx(0.0, abs=1e-12)

    def test_report_flags(self):
        rep = information_inequality_report(make_singlet(), [2, 2])
        assert rep.violation
        assert rep.lower_bound_slack == pytest.approx(-LN2)
        assert EntropyReport.bits(rep.parts[0]) == pytest.approx(1.0)


class TestReport:
    def test_product_additive(self):
        rng = np.random.default_rng(0)
        r1, r2 = random_density(rng, 2), random_density(rng, 3)
        rep = information_inequality_report(tensor(r1, r2), [2, 3])
        assert not rep.violation
        assert rep.subadditivity_slack == pytest.approx(0.0, abs=1e-9)

    def test_maximally_mixed(self):
        rep = information_inequality_report(maximally_mixed(4), [2, 2])
        assert not rep.violation
        assert rep.total == pytest.approx(2 * LN2)
        assert rep.parts == pytest.approx((LN2, LN2))

    def test_dims(self):
        with pytest.raises(DimensionMismatch):
            information_inequality_report(maximally_mixed(4), [2, 3])


class TestProductProbe:
    def test_product_found(self):
        rng = np.random.default_rng(1)
        r1, r2 = random_density(rng, 2), random_density(rng, 2)
        factors = product_form_probe(tensor(r1, r2), [2, 2])
        assert factors is not None
        assert np.allclose(factors[0].matrix, r1.matrix)

    def test_singlet_not_product(self):
        assert product_form_probe(make_singlet(), [2, 2]) is None


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(1, 4))
def test_violation_implies_not_product(seed, rank):
    rho = random_density(np.random.default_rng(seed), 4, rank)
    rep = information_inequality_report(rho, [2, 2])
    assert rep.subadditivity_slack >= -1e-9
    if rep.violation:
        assert product_form_probe(rho, [2, 2]) is None


def test_spin_projector_embed_is_local():
    # a local measurement cannot change the other party's reduced state
    rho = make_singlet()
    p = embed(spin_projector(40), 0, [2, 2])
    post = p.matrix @ rho.matrix @ p.matrix + (np.eye(4) - p.matrix) @ rho.matrix @ (np.eye(4) - p.matrix)
    assert np.allclose(reduced_state(DensityOperator(post), [2, 2], 1).matrix, np.eye(2) / 2)
