import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.linalg import expm

from qmeter.core import RandomStream, partial_trace
from qmeter.protective import (
    DOWN,
    MINUS_X,
    PLUS_X,
    UP,
    ProtectiveBranchKind,
    ProtectiveConfig,
    coupling_schedule,
    evolve_two_qubit_protective,
    failed_branch_pointer_state,
    ideal_pointer_shift,
    interaction_hamiltonian,
    orthogonal_qubit_state,
    perturbed_eigenvalue,
    pointer_angle_from_detector,
    sample_protective_branch,
    two_qubit_interaction_unitary,
)


def sliced_joint_oracle(alpha, beta, t_total, steps, gap, schedule):
    """Full 4x4 evolution, one scipy matrix exponential per time slice."""
    nu = np.array([alpha, beta], dtype=complex)
    perp = np.array([-np.conj(beta), np.conj(alpha)])
    h_sys = np.kron(gap * np.outer(perp, perp.conj()), np.eye(2))
    v = interaction_hamiltonian()
    g = coupling_schedule(t_total, steps, schedule)
    dt = t_total / steps
    psi = np.kron(nu, DOWN)
    for gk in g:
        psi = expm(-1j * dt * (h_sys + gk * v)) @ psi
    return psi


def test_pointer_shift_is_expectation(biased_qubit, pauli_z):
    assert ideal_pointer_shift(biased_qubit, pauli_z, r0=2.0) == pytest.approx(1.6)


def test_perturbed_eigenvalue():
    assert perturbed_eigenvalue(1.0, 2.0, 0.5, 4.0) == pytest.approx(1.25)
    with pytest.raises(ValueError):
        perturbed_eigenvalue(1.0, 2.0, 0.5, 0.0)


def test_orthogonal_state(biased_qubit):
    perp = orthogonal_qubit_state(biased_qubit)
    assert abs(perp.overlap(biased_qubit)) < 1e-15


class TestBranchModel:
    def test_probabilities(self):
        cfg = ProtectiveConfig(10.0, (1.0, 2.0, 3.0))
        assert_allclose(cfg.branch_probabilities(), [1 - 14 / 100, 0.01, 0.04, 0.09])
        assert cfg.failure_probability() == pytest.approx(0.14)

    def test_invalid_configs(self):
        with pytest.raises(ValueError):
            ProtectiveConfig(1.0)
        with pytest.raises(ValueError):
            ProtectiveConfig(5.0, (1.0, -1.0, 0.0))
        with pytest.raises(ValueError):
            ProtectiveConfig(5.0, pointer_distribution="gaussian")

    def test_branch_frequencies(self, biased_qubit, pauli_z):
        cfg = ProtectiveConfig(3.0, (1.0, 1.0, 1.0))
        n = 9000
        kinds = [sample_protective_branch(biased_qubit, pauli_z, cfg, RandomStream(2, i)).kind.value for i in range(n)]
        freq = np.bincount(kinds, minlength=5)[1:] / n
        p = cfg.branch_probabilities()
        assert np.all(np.abs(freq - p) < 4 * np.sqrt(p * (1 - p) / n))

    def test_branch_contents(self, biased_qubit, pauli_z):
        cfg = ProtectiveConfig(2.0, (1.0, 1.0, 1.0), r0=0.5)
        perp = orthogonal_qubit_state(biased_qubit)
        seen = set()
        for i in range(400):
            br = sample_protective_branch(biased_qubit, pauli_z, cfg, RandomStream(1, i))
            seen.add(br.kind)
            if br.kind is ProtectiveBranchKind.ProtectedCorrectPointer:
                assert br.pointer_reading == pytest.approx(0.1)
                assert br.post_state.fidelity(biased_qubit) == pytest.approx(1.0)
            elif br.kind is ProtectiveBranchKind.CollapsedOrthoPointer:
                assert br.pointer_reading == pytest.approx(0.5 + 0.4)
                assert br.post_state.fidelity(perp) == pytest.approx(1.0)
            else:
                assert -0.5 <= br.pointer_reading <= 1.5
        assert seen == set(ProtectiveBranchKind)

    def test_long_duration_is_ideal(self, biased_qubit, pauli_z):
        cfg = ProtectiveConfig(1e6)
        readings = [sample_protective_branch(biased_qubit, pauli_z, cfg, RandomStream(0, i)).pointer_reading for i in range(200)]
        assert_allclose(readings, -0.4)


class TestTwoQubit:
    def test_interaction_unitary_flips_pointer(self):
        u = two_qubit_interaction_unitary(7.0)
        out = u @ np.kron(UP, DOWN)
        phase = out[0] / 1.0
        assert abs(abs(phase) - 1.0) < 1e-12
        assert_allclose(out, phase * np.kron(UP, UP), atol=1e-12)
        assert_allclose(u @ np.kron(DOWN, DOWN), np.kron(DOWN, DOWN), atol=1e-12)

    @pytest.mark.parametrize("schedule", ["ramp", "constant"])
    def test_schedule_normalized(self, schedule):
        g = coupling_schedule(25.0, 4000, schedule)
        assert g.sum() * 25.0 / 4000 == pytest.approx(1.0, abs=1e-10)

    @pytest.mark.parametrize("alpha2", [0.2, 0.5, 0.9])
    @pytest.mark.parametrize("schedule", ["ramp", "constant"])
    def test_matches_sliced_oracle(self, alpha2, schedule):
        a, b = math.sqrt(alpha2), math.sqrt(1 - alpha2) * np.exp(0.4j)
        res = evolve_two_qubit_protective(a, b, 12.0, steps=300, schedule=schedule)
        ref = sliced_joint_oracle(a, b, 12.0, 300, math.pi, schedule)
        assert abs(abs(np.vdot(ref, res.joint_state)) - 1.0) < 1e-10

    def test_constant_schedule_exact_exponential(self):
        a = b = 1 / math.sqrt(2)
        exact = evolve_two_qubit_protective(a, b, 8.0, schedule="constant")
        sliced = evolve_two_qubit_protective(a, b, 8.0, steps=5000, schedule="constant")
        assert abs(abs(np.vdot(exact.joint_state, sliced.joint_state)) - 1.0) < 1e-10

    def test_eigenstates_of_sz_read_cleanly(self):
        up = evolve_two_qubit_protective(1.0, 0.0, 50.0)
        dn = evolve_two_qubit_protective(0.0, 1.0, 50.0)
        assert up.pointer_angle == pytest.approx(math.pi, abs=1e-6)
        assert dn.pointer_angle == pytest.approx(0.0, abs=1e-6)
        assert up.p_protect == pytest.approx(1.0, abs=1e-12)
        assert dn.p_protect == pytest.approx(1.0, abs=1e-12)

    def test_probabilities_consistent(self):
        res = evolve_two_qubit_protective(math.sqrt(0.5), math.sqrt(0.5), 20.0)
        assert res.p_protect + res.p_fail == pytest.approx(1.0)
        rho_s = partial_trace(np.outer(res.joint_state, res.joint_state.conj()), (2, 2), 0).entries
        nu = np.array([1, 1]) / math.sqrt(2)
        assert res.p_protect == pytest.approx(np.vdot(nu, rho_s @ nu).real)
        perp = np.array([-1, 1]) / math.sqrt(2)
        phi = res.failed_component(perp)
        assert np.vdot(phi, phi).real == pytest.approx(res.p_fail, abs=1e-12)

    def test_failure_falls_as_inverse_square(self):
        ts = np.array([20.0, 40.0, 80.0])
        pf = [evolve_two_qubit_protective(math.sqrt(0.5), math.sqrt(0.5), t).p_fail for t in ts]
        slope = np.polyfit(np.log(ts), np.log(pf), 1)[0]
        assert slope == pytest.approx(-2.0, abs=0.1)

    def test_pointer_angle_from_detector(self):
        assert pointer_angle_from_detector(np.outer(DOWN, DOWN)) == pytest.approx(0.0)
        assert pointer_angle_from_detector(np.outer(UP, UP)) == pytest.approx(math.pi)
        assert pointer_angle_from_detector(np.eye(2) / 2) == pytest.approx(math.pi / 2)

    def test_input_validation(self):
        with pytest.raises(ValueError):
            evolve_two_qubit_protective(1.0, 1.0, 5.0)
        with pytest.raises(ValueError):
            evolve_two_qubit_protective(1.0, 0.0, -5.0)
        with pytest.raises(ValueError):
            evolve_two_qubit_protective(1.0, 0.0, 5.0, gap=0.0)


def test_failed_branch_state_conventions():
    st = failed_branch_pointer_state()
    assert_allclose(st.vector, MINUS_X)
    for basis in (UP, DOWN):
        assert abs(np.vdot(basis, st.vector)) ** 2 == pytest.approx(abs(np.vdot(basis, st.alternate)) ** 2)
    assert_allclose(st.alternate, PLUS_X)
