import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose
from scipy.linalg import expm

from qmeter.core import DensityMatrix, Observable, PureState, RandomStream
from qmeter.cloning import (
    CoherencyParam,
    InfoCloneSetup,
    apply_induced_unitary,
    clone_smearing_variance,
    coherent_clone_moments,
    coherent_fidelity_bound,
    coherent_overlap,
    info_clone_overlap,
    d_dim_clone_state,
    d_dim_fidelity,
    estimate_alpha,
    estimate_alpha_experiments,
    induced_unitary,
    info_clone,
    information_cloning_time,
    linearity_probe,
    nocloning_constraint,
    qubit_clone_expectation_factor,
    qubit_fidelity,
    sample_clone_quadratures,
    sample_coherent_clone,
    sample_coherent_quadratures,
    shrinking_factor,
)

from conftest import random_state

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)


class TestNoCloning:
    @pytest.mark.parametrize("c", [0.0, 1.0, 1j * 0 + 1])
    def test_trivial_overlaps_allowed(self, c):
        assert nocloning_constraint(c, 3).consistent

    def test_roots_of_unity_allowed(self):
        # unit-modulus overlap: the two states differ only by a phase
        c = np.exp(2j * math.pi / 4)
        assert nocloning_constraint(c, 4).consistent

    @settings(max_examples=100, deadline=None)
    @given(st.floats(0.01, 0.99), st.floats(0, 2 * math.pi), st.integers(1, 20))
    def test_interior_overlaps_violate(self, r, phi, n):
        rep = nocloning_constraint(r * np.exp(1j * phi), n)
        assert rep.violation
        assert rep.residual == pytest.approx(abs(r * np.exp(1j * phi) * (1 - (r * np.exp(1j * phi)) ** n)))

    def test_invalid(self):
        with pytest.raises(ValueError):
            nocloning_constraint(1.5, 1)
        with pytest.raises(ValueError):
            nocloning_constraint(0.5, 0)


class TestLinearityProbe:
    def test_cross_term(self):
        up, dn = PureState.basis(0, 2), PureState.basis(1, 2)
        h = 1 / math.sqrt(2)
        assert linearity_probe(up, dn, (h, h), SIGMA_X) == pytest.approx(1.0, abs=1e-12)

    def test_eigenstates_of_observable_give_zero(self):
        up, dn = PureState.basis(0, 2), PureState.basis(1, 2)
        assert linearity_probe(up, dn, (0.6, 0.8), Observable(np.array([1.0, -1.0]))) == pytest.approx(0.0, abs=1e-15)

    def test_matches_cross_term_formula(self):
        rng = np.random.default_rng(0)
        s1, s2 = random_state(rng, 3), random_state(rng, 3)
        a, b = 0.3 + 0.2j, -0.5j
        h = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        o = h + h.conj().T
        v = a * s1.amplitudes + b * s2.amplitudes
        n2 = np.vdot(v, v).real
        cross = 2 * np.real(np.conj(a) * b * np.vdot(s1.amplitudes, o @ s2.amplitudes)) / n2
        assert linearity_probe(s1, s2, (a, b), o) == pytest.approx(abs(cross), rel=1e-10)

    def test_parallel_states_rejected(self):
        s = PureState.basis(0, 2)
        with pytest.raises(ValueError):
            linearity_probe(s, s, (0.6, 0.8), SIGMA_X)


class TestInducedUnitary:
    @pytest.mark.parametrize("n", [1, 2, 5, 40])
    def test_orthogonal(self, n):
        rng = np.random.default_rng(n)
        u = induced_unitary(rng.uniform(0.2, 2.0, n), 0.9)
        assert np.max(np.abs(u @ u.T - np.eye(n + 1))) < 1e-12

    def test_equals_exponential_of_generator(self):
        rng = np.random.default_rng(7)
        r = rng.uniform(0.5, 1.5, 6)
        k = np.zeros((7, 7))
        k[0, 1:] = r
        k[1:, 0] = -r
        for t in (0.3, 1.7, 4.0):
            assert_allclose(induced_unitary(r, t), expm(k * t), atol=1e-12)

    def test_matrix_free_application(self):
        rng = np.random.default_rng(1)
        r = rng.uniform(0.5, 1.5, 9)
        v = rng.standard_normal(10) + 1j * rng.standard_normal(10)
        assert_allclose(apply_induced_unitary(r, 2.2, v), induced_unitary(r, 2.2) @ v, atol=1e-13)

    def test_invalid_couplings(self):
        with pytest.raises(ValueError):
            induced_unitary([1.0, -1.0], 1.0)


class TestInfoClone:
    @pytest.mark.parametrize("n", [1, 4, 100, 10000])
    def test_clones_carry_alpha_over_sqrt_n(self, n):
        alpha = CoherencyParam(3 + 2j)
        first, clones = info_clone(InfoCloneSetup(alpha, n_clones=n))
        assert abs(first.value) < 1e-12
        assert len(clones) == n
        vals = np.array([c.value for c in clones])
        assert_allclose(vals, (3 + 2j) / math.sqrt(n), atol=1e-12)

    def test_norm_preserved_at_any_time(self):
        alpha = CoherencyParam(1 - 1j)
        setup = InfoCloneSetup(alpha, beta=CoherencyParam(0.2j), n_clones=3, couplings=[1.0, 2.0, 0.5], t=0.77)
        first, clones = info_clone(setup)
        total = abs(first.value) ** 2 + sum(abs(c.value) ** 2 for c in clones)
        assert total == pytest.approx(abs(1 - 1j) ** 2 + 3 * 0.04)

    def test_cloning_time(self):
        assert math.sin(information_cloning_time([1.0] * 9) * 3.0) == pytest.approx(-1.0)

    def test_unequal_couplings_need_explicit_time(self):
        with pytest.raises(ValueError):
            info_clone(InfoCloneSetup(CoherencyParam(1), n_clones=2, couplings=[1.0, 2.0]))


class TestQuadratures:
    def test_moments(self):
        x = sample_coherent_quadratures(CoherencyParam(1 + 2j), "position", RandomStream(3), size=50000)
        p = sample_coherent_quadratures(CoherencyParam(1 + 2j), "momentum", RandomStream(4), size=50000)
        assert abs(x.mean() - math.sqrt(2)) < 4 * math.sqrt(0.5 / 50000)
        assert abs(p.mean() - 2 * math.sqrt(2)) < 4 * math.sqrt(0.5 / 50000)
        assert x.var() == pytest.approx(0.5, rel=0.03)

    def test_bad_quadrature(self):
        with pytest.raises(ValueError):
            sample_coherent_quadratures(CoherencyParam(0), "phase", RandomStream(0))

    def test_estimate_alpha_unbiased(self):
        _, clones = info_clone(InfoCloneSetup(CoherencyParam(3 + 2j), n_clones=100))
        est = np.array([estimate_alpha(clones, RandomStream(1, i)).alpha_hat for i in range(3000)])
        assert abs(est.real.mean() - 3) < 4 * 0.7071 / math.sqrt(3000)
        assert abs(est.imag.mean() - 2) < 4 * 0.7071 / math.sqrt(3000)
        assert est.real.std() == pytest.approx(1 / math.sqrt(2), rel=0.06)

    def test_estimate_std_formula(self):
        _, even = info_clone(InfoCloneSetup(CoherencyParam(1), n_clones=10))
        _, odd = info_clone(InfoCloneSetup(CoherencyParam(1), n_clones=11))
        assert estimate_alpha(even, RandomStream(0)).std_per_component == pytest.approx(1 / math.sqrt(2))
        assert estimate_alpha(odd, RandomStream(0)).std_per_component == pytest.approx(math.sqrt(11 / 20))

    def test_estimate_rejects_mixed_clones(self):
        with pytest.raises(ValueError):
            estimate_alpha([CoherencyParam(1), CoherencyParam(2)], RandomStream(0))

    def test_experiments_match_single_estimates(self):
        out = estimate_alpha_experiments(3 + 2j, 50, 5, seed=9, first_id=10)
        _, clones = info_clone(InfoCloneSetup(CoherencyParam(3 + 2j), n_clones=50))
        ref = [estimate_alpha(clones, RandomStream(9, 10 + i)).alpha_hat for i in range(5)]
        assert_allclose(out, ref, atol=1e-14)


class TestFidelityFormulas:
    def test_exact_fractions(self):
        for n in range(1, 8):
            for m in range(n, 12):
                f = Fraction(m * n + m + n, m * (n + 2))
                assert qubit_fidelity(n, m) == pytest.approx(float(f), abs=1e-15)
        assert qubit_fidelity(1, 2) == 5 / 6

    def test_d_dim_reduces_to_qubit(self):
        for n in range(1, 20):
            for m in range(n, 40):
                assert d_dim_fidelity(n, m, 2) == pytest.approx(qubit_fidelity(n, m), abs=1e-12)

    def test_perfect_when_no_copies_are_made(self):
        for d in (2, 3, 7):
            assert d_dim_fidelity(4, 4, d) == pytest.approx(1.0)
            assert coherent_fidelity_bound(4, 4) == pytest.approx(1.0)

    def test_limits(self):
        assert abs(qubit_fidelity(1, 10**6) - 2 / 3) < 1e-6
        assert abs(coherent_fidelity_bound(1, 10**6) - 0.5) < 1e-6
        assert shrinking_factor(1, 10**6, 2) == pytest.approx(1 / 3, abs=1e-6)

    def test_invalid_counts(self):
        with pytest.raises(ValueError):
            qubit_fidelity(3, 2)
        with pytest.raises(ValueError):
            d_dim_fidelity(1, 2, 1)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(1, 30), st.integers(0, 30), st.integers(2, 10), st.integers(0, 2**32 - 1))
    def test_clone_state_fidelity(self, n, extra, d, seed):
        m = n + extra
        psi = random_state(np.random.default_rng(seed), d)
        rho = d_dim_clone_state(psi.projector(), n, m, d)
        assert rho.fidelity(psi) == pytest.approx(d_dim_fidelity(n, m, d), abs=1e-12)

    def test_expectation_factor(self):
        assert qubit_clone_expectation_factor(2) == pytest.approx(5 / 6)
        vals = [qubit_clone_expectation_factor(m) for m in range(1, 200)]
        assert all(b < a for a, b in zip(vals, vals[1:]))
        assert qubit_clone_expectation_factor(10**7) == pytest.approx(2 / 3, abs=1e-6)

    def test_expectation_factor_on_clone_state(self):
        # the projector onto the input has zero expectation in the orthogonal state
        psi = PureState.normalized([0.3, 1j])
        for m in (2, 5, 50):
            rho = d_dim_clone_state(psi.projector(), 1, m, 2)
            assert rho.expectation(psi.projector().entries) == pytest.approx(qubit_clone_expectation_factor(m))

    def test_dimension_checked(self):
        with pytest.raises(ValueError):
            d_dim_clone_state(DensityMatrix(np.eye(3) / 3), 1, 2, 2)


class TestCoherentClones:
    def test_smearing_variance(self):
        assert clone_smearing_variance(1, 2) == 0.5
        assert clone_smearing_variance(3, 3) == 0.0

    def test_moments(self):
        mx, mp, vx, vp = coherent_clone_moments(CoherencyParam(1 + 1j), 1, 10)
        assert (mx, mp) == pytest.approx((math.sqrt(2), math.sqrt(2)))
        assert vx == vp == pytest.approx(1.4)

    def test_no_smearing_returns_input(self):
        out = sample_coherent_clone(CoherencyParam(2j), 3, 3, RandomStream(0))
        assert out == CoherencyParam(2j)

    def test_clone_parameter_spread(self):
        draws = sample_coherent_clone(CoherencyParam(1 + 0j), 1, 2, RandomStream(5), size=40000)
        assert np.var(draws.real) == pytest.approx(0.25, rel=0.03)
        assert np.var(draws.imag) == pytest.approx(0.25, rel=0.03)

    def test_quadrature_variance(self):
        x = sample_clone_quadratures(CoherencyParam(0.5), 1, 4, "position", RandomStream(2), 50000)
        assert x.var() == pytest.approx(0.5 + 0.75, rel=0.03)
        assert abs(x.mean() - math.sqrt(2) * 0.5) < 4 * math.sqrt(1.25 / 50000)


def test_coherent_overlap_from_fock_expansion():
    # truncated photon-number expansion of two coherent states
    from math import factorial

    a, b = 0.7 - 0.2j, -0.3 + 0.5j
    k = np.arange(40)
    fock = lambda z: np.exp(-abs(z) ** 2 / 2) * np.array([z**j / math.sqrt(factorial(j)) for j in k])
    ref = abs(np.vdot(fock(a), fock(b))) ** 2
    assert coherent_overlap(CoherencyParam(a), CoherencyParam(b)) == pytest.approx(ref, rel=1e-12)


def test_info_clone_overlap():
    alpha = CoherencyParam(3 + 2j)
    assert info_clone_overlap(alpha, 1) == 1.0
    assert info_clone_overlap(alpha, 4) == pytest.approx(math.exp(-13 / 4))
    assert info_clone_overlap(CoherencyParam(0.1), 10**6) == pytest.approx(math.exp(-0.01), rel=1e-3)
