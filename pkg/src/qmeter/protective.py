"""Protective measurements: ideal law, 1/T branch model, two-qubit adiabatic scheme.

Conventions for the two-qubit model (system S, detector A, each a qubit):

* joint vectors are ordered ``S (x) A`` in the z bases
  ``|up d_up>, |up d_dn>, |dn d_up>, |dn d_dn>``;
* x eigenstates are ``|+x> = (|up> + |dn>)/sqrt 2`` and
  ``|-x> = (|up> - |dn>)/sqrt 2``, so ``|d_dn> = (|+x> - |-x>)/sqrt 2``;
* the detector starts in ``|d_dn>`` and the coupling is
  ``-pi g(t) P_{z,+} (x) P_{x,-}`` with ``integral g dt = 1``;
* the unknown state ``|nu>`` is protected by the system Hamiltonian
  ``gap * |nu_perp><nu_perp|``, which makes it a non-degenerate eigenstate.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .core import (
    DimensionMismatchError,
    Observable,
    PureState,
    RandomStream,
    _check_pair,
    expectation,
    matrix_exponential_evolve,
    partial_trace,
)

UP = np.array([1.0, 0.0], dtype=complex)
DOWN = np.array([0.0, 1.0], dtype=complex)
PLUS_X = (UP + DOWN) / math.sqrt(2.0)
MINUS_X = (UP - DOWN) / math.sqrt(2.0)
P_Z_PLUS = np.outer(UP, UP.conj())
P_X_MINUS = np.outer(MINUS_X, MINUS_X.conj())
DEFAULT_GAP = math.pi


def ideal_pointer_shift(state: PureState, obs: Observable, r0: float = 0.0) -> float:
    """Pointer reading of an ideal (infinitely slow) protective measurement."""
    return r0 + expectation(state, obs)


def perturbed_eigenvalue(omega_j: float, a_i: float, s_jj: float, t_total: float) -> float:
    """First-order energy omega_j + a_i s_jj / T of the coupled system-apparatus level."""
    if not t_total > 0:
        raise ValueError("measurement duration T must be positive")
    return omega_j + a_i * s_jj / t_total


# --- non-ideal branch model ------------------------------------------------


class ProtectiveBranchKind(enum.Enum):
    ProtectedCorrectPointer = 1
    ProtectedRandomPointer = 2
    CollapsedOrthoPointer = 3
    CollapsedRandomPointer = 4


@dataclass(frozen=True)
class ProtectiveConfig:
    """Duration ``t_total`` and the constants of the three 1/T^2 failure branches."""

    t_total: float
    branch_coeffs: tuple[float, float, float] = (1.0, 1.0, 1.0)
    r0: float = 0.0
    pointer_distribution: str = "uniform"

    def __post_init__(self):
        if not self.t_total > 0:
            raise ValueError("t_total must be positive")
        if len(self.branch_coeffs) != 3 or any(c < 0 for c in self.branch_coeffs):
            raise ValueError("branch_coeffs must be three non-negative numbers")
        if self.failure_probability() >= 1.0:
            raise ValueError("failure probabilities sum to >= 1; increase t_total")
        if self.pointer_distribution != "uniform":
            raise ValueError(f"unsupported pointer distribution {self.pointer_distribution!r}")

    def branch_probabilities(self) -> np.ndarray:
        fail = np.asarray(self.branch_coeffs, dtype=float) ** 2 / self.t_total**2
        return np.concatenate([[1.0 - fail.sum()], fail])

    def failure_probability(self) -> float:
        return float(sum(c * c for c in self.branch_coeffs) / self.t_total**2)


@dataclass(frozen=True)
class ProtectiveBranch:
    kind: ProtectiveBranchKind
    post_state: PureState
    pointer_reading: float


def orthogonal_qubit_state(state: PureState) -> PureState:
    if state.dim != 2:
        raise DimensionMismatchError("the orthogonal complement is unique only in two dimensions")
    a, b = state.amplitudes
    return PureState(np.array([-np.conj(b), np.conj(a)]))


def sample_protective_branch(
    state: PureState, obs: Observable, cfg: ProtectiveConfig, rng: RandomStream
) -> ProtectiveBranch:
    """Outcome of one finite-T protective measurement on a qubit."""
    _check_pair(state, obs)
    perp = orthogonal_qubit_state(state)
    gen = rng.generator
    u = gen.random()
    cum = np.cumsum(cfg.branch_probabilities())
    # probabilities sum to 1 by construction; guard the final bin against round-off
    branch = min(int(np.searchsorted(cum, u, side="right")), 3)
    kind = ProtectiveBranchKind(branch + 1)
    lo = cfg.r0 + obs.eigenvalues.min()
    hi = cfg.r0 + obs.eigenvalues.max()
    if kind is ProtectiveBranchKind.ProtectedCorrectPointer:
        return ProtectiveBranch(kind, state, ideal_pointer_shift(state, obs, cfg.r0))
    if kind is ProtectiveBranchKind.ProtectedRandomPointer:
        return ProtectiveBranch(kind, state, float(gen.uniform(lo, hi)))
    if kind is ProtectiveBranchKind.CollapsedOrthoPointer:
        return ProtectiveBranch(kind, perp, ideal_pointer_shift(perp, obs, cfg.r0))
    return ProtectiveBranch(kind, perp, float(gen.uniform(lo, hi)))


# --- two-qubit adiabatic scheme ---------------------------------------------


def interaction_hamiltonian() -> np.ndarray:
    """Coupling -pi P_{z,+} (x) P_{x,-} (to be multiplied by g(t))."""
    return -math.pi * np.kron(P_Z_PLUS, P_X_MINUS)


def two_qubit_interaction_unitary(t_total: float) -> np.ndarray:
    """Impulsive evolution under the coupling alone with g = 1/T over duration T."""
    if not t_total > 0:
        raise ValueError("t_total must be positive")
    return matrix_exponential_evolve(interaction_hamiltonian() / t_total, t_total)


def coupling_schedule(t_total: float, steps: int, schedule: str = "ramp") -> np.ndarray:
    """Midpoint samples of g(t) on ``steps`` equal slices of [0, T].

    ``"ramp"`` is g = (2/T) sin^2(pi t / 2T): switched on smoothly and off
    suddenly at the end of the measurement. ``"constant"`` is g = 1/T.
    """
    x = (np.arange(steps) + 0.5) / steps
    if schedule == "ramp":
        return 2.0 * np.sin(0.5 * np.pi * x) ** 2 / t_total
    if schedule == "constant":
        return np.full(steps, 1.0 / t_total)
    raise ValueError(f"unknown schedule {schedule!r}")


def default_steps(t_total: float, gap: float) -> int:
    return max(2000, int(math.ceil(20.0 * (gap + math.pi) * t_total)))


@dataclass(frozen=True)
class TwoQubitResult:
    joint_state: np.ndarray
    p_protect: float
    p_fail: float
    pointer_angle: float

    def detector_state(self) -> np.ndarray:
        rho = np.outer(self.joint_state, self.joint_state.conj())
        return partial_trace(rho, (2, 2), keep=1).entries

    def failed_component(self, perp: np.ndarray) -> np.ndarray:
        """Unnormalized detector state accompanying the system in ``perp``."""
        return np.kron(perp.conj(), np.eye(2)) @ self.joint_state


def pointer_angle_from_detector(rho_a: np.ndarray) -> float:
    """Rotation angle about x that best reproduces the reduced detector state."""
    w = float(np.clip(np.vdot(DOWN, rho_a @ DOWN).real, 0.0, 1.0))
    return 2.0 * math.acos(math.sqrt(w))


def evolve_two_qubit_protective(
    alpha: complex,
    beta: complex,
    t_total: float,
    steps: int | None = None,
    *,
    gap: float = DEFAULT_GAP,
    schedule: str = "ramp",
) -> TwoQubitResult:
    """Exact evolution of (alpha|up> + beta|dn>) (x) |d_dn> for duration ``t_total``.

    The coupling commutes with the detector's x projectors, so the evolution
    splits into two qubit problems: on the ``|+x>`` branch the system only
    feels its protecting Hamiltonian, on the ``|-x>`` branch it also feels
    ``-pi g(t) P_{z,+}``. The latter is integrated slice by slice with the
    compiled kernel; for the constant schedule a single matrix exponential
    is used unless ``steps`` is given explicitly.
    """
    if abs(abs(alpha) ** 2 + abs(beta) ** 2 - 1.0) > 1e-10:
        raise ValueError("|alpha|^2 + |beta|^2 must equal 1")
    if not t_total > 0:
        raise ValueError("t_total must be positive")
    if not gap > 0:
        raise ValueError("the protecting gap must be positive")
    nu = np.array([alpha, beta], dtype=complex)
    perp = np.array([-np.conj(beta), np.conj(alpha)])
    h_sys = gap * np.outer(perp, perp.conj())
    v = -math.pi * P_Z_PLUS

    if schedule == "constant" and steps is None:
        psi_minus = matrix_exponential_evolve(h_sys + v / t_total, t_total) @ nu
    else:
        n = default_steps(t_total, gap) if steps is None else int(steps)
        if n < 1:
            raise ValueError("steps must be positive")
        g = coupling_schedule(t_total, n, schedule)
        psi_minus = _kernels.propagate_two_level(h_sys, v, g, t_total / n, nu)
    # nu has zero energy under h_sys, so the +x branch is stationary
    psi_plus = nu
    joint = (np.kron(psi_plus, PLUS_X) - np.kron(psi_minus, MINUS_X)) / math.sqrt(2.0)
    joint = joint / np.linalg.norm(joint)

    rho_s = partial_trace(np.outer(joint, joint.conj()), (2, 2), keep=0).entries
    p_protect = float(np.clip(np.vdot(nu, rho_s @ nu).real, 0.0, 1.0))
    rho_a = partial_trace(np.outer(joint, joint.conj()), (2, 2), keep=1).entries
    return TwoQubitResult(joint, p_protect, 1.0 - p_protect, pointer_angle_from_detector(rho_a))


@dataclass(frozen=True)
class ApparatusState:
    """Detector state with its expansion in the pointer basis {|d_up>, |d_dn>}.

    ``alternate`` is the expansion written with the opposite sign convention,
    (|d_up> + |d_dn>)/sqrt 2. The two have equal squared overlaps with each
    pointer basis state, which is all the readout depends on.
    """

    vector: np.ndarray
    coefficients: tuple[complex, complex]
    alternate: np.ndarray


def failed_branch_pointer_state() -> ApparatusState:
    """The fixed detector state |d_dn>_x left behind by a failed measurement."""
    vec = MINUS_X.copy()
    return ApparatusState(vec, (complex(vec[0]), complex(vec[1])), PLUS_X.copy())
