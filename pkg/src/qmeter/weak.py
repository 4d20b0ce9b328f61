"""Weak measurements without post-selection, single shot and repeated.

A weak measurement of a non-degenerate observable with apparatus width
``delta_p`` returns an outcome ``p`` drawn from a Gaussian mixture centred on
the eigenvalues, and damps each amplitude by exp(-(p - s_i)^2 / (2 delta_p^2)).
Repeating it on one copy drives a random walk over states whose absorbing
points are the eigenstates.

Amplitude moduli are tracked as log-probabilities so that long walks (products
of thousands of Gaussian factors) never underflow; the phases of the initial
amplitudes are untouched by the update and are reattached on output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels
from .core import (
    DensityMatrix,
    GaussianMixture1D,
    Observable,
    PureState,
    RandomStream,
    RenormalizationError,
    _check_pair,
)

CONVERGENCE_THRESHOLD = 1.0 - 1e-6
BLOCK_SIZE = 256


@dataclass(frozen=True)
class WeakConfig:
    delta_p: float

    def __post_init__(self):
        if not (self.delta_p > 0 and math.isfinite(self.delta_p)):
            raise ValueError(f"delta_p must be positive and finite, got {self.delta_p!r}")

    def is_weak_for(self, obs: Observable) -> bool:
        """Whether the apparatus is much broader than the spectrum (5x rule)."""
        return self.delta_p >= 5 * obs.spread()


def _log_probs(state: PureState) -> np.ndarray:
    p = state.probabilities
    with np.errstate(divide="ignore"):
        lw = np.log(p)
    top = lw.max()
    return lw - (top + np.log(np.sum(np.exp(lw - top))))


def _phases(state: PureState) -> np.ndarray:
    a = state.amplitudes
    mod = np.abs(a)
    return np.where(mod > 0, a / np.where(mod > 0, mod, 1.0), 1.0)


def _amplitudes_from_logw(phases: np.ndarray, logw: np.ndarray) -> np.ndarray:
    return phases * np.exp(0.5 * logw)


def _converged_index(logw: np.ndarray) -> int | None:
    k = int(np.argmax(logw))
    return k if math.exp(logw[k]) >= CONVERGENCE_THRESHOLD else None


def weak_outcome_density(state: PureState, obs: Observable, cfg: WeakConfig) -> GaussianMixture1D:
    """Single-shot outcome law: Gaussians of variance delta_p^2/2 at each eigenvalue."""
    _check_pair(state, obs)
    return GaussianMixture1D(state.probabilities, obs.eigenvalues, cfg.delta_p / math.sqrt(2.0))


def sample_weak(state: PureState, obs: Observable, cfg: WeakConfig, rng: RandomStream, size=None):
    """Draw weak outcome(s): pick component i with weight |alpha_i|^2, then a Gaussian."""
    _check_pair(state, obs)
    gen = rng.generator
    u = gen.random(size)
    z = gen.standard_normal(size)
    cum = np.cumsum(state.probabilities)
    k = np.minimum(np.searchsorted(cum, u, side="right"), np.nonzero(state.probabilities > 0)[0][-1])
    p = obs.eigenvalues[k] + z * (cfg.delta_p / math.sqrt(2.0))
    return float(p) if size is None else p


def weak_update(state: PureState, obs: Observable, cfg: WeakConfig, p: float) -> PureState:
    """Post-measurement system state after observing outcome ``p``."""
    _check_pair(state, obs)
    if not math.isfinite(p):
        raise RenormalizationError(f"outcome {p!r} is not finite")
    amps = state.amplitudes
    alive = amps != 0
    log_damp = -((p - obs.eigenvalues) ** 2) / (2.0 * cfg.delta_p**2)
    # shifting by the largest live exponent keeps at least one factor equal to 1
    log_damp = log_damp - log_damp[alive].max()
    new = np.where(alive, amps * np.exp(log_damp), 0.0)
    norm = np.sqrt(np.vdot(new, new).real)
    if not (norm > 0 and np.isfinite(norm)):
        raise RenormalizationError("all amplitudes vanished during the weak update")
    return PureState(new / norm)


def weak_state_from_outcomes(
    state: PureState, obs: Observable, cfg: WeakConfig, outcomes: Sequence[float]
) -> PureState:
    """Closed-form state after a whole outcome record (order does not matter)."""
    _check_pair(state, obs)
    p = np.asarray(outcomes, dtype=float)
    lw = _log_probs(state) - np.sum((p[:, None] - obs.eigenvalues[None, :]) ** 2, axis=0) / cfg.delta_p**2
    top = lw.max()
    lw = lw - (top + np.log(np.sum(np.exp(lw - top))))
    return PureState(_amplitudes_from_logw(_phases(state), lw))


@dataclass(frozen=True)
class WeakTrajectory:
    """Outcome record of repeated weak measurements and the state after each step."""

    outcomes: np.ndarray
    amplitudes: np.ndarray
    converged_to: int | None

    @property
    def states(self) -> list[PureState]:
        return [PureState(a) for a in self.amplitudes]

    @property
    def final_state(self) -> PureState:
        return PureState(self.amplitudes[-1])

    @property
    def mean(self) -> float:
        return float(self.outcomes.mean())


def _draws(stream: RandomStream, m: int) -> tuple[np.ndarray, np.ndarray]:
    gen = stream.generator
    u = gen.random(m)
    z = gen.standard_normal(m)
    return u, z


def run_weak_trajectory(
    state: PureState, obs: Observable, cfg: WeakConfig, m: int, rng: RandomStream
) -> WeakTrajectory:
    """Perform ``m`` weak measurements on one copy, resetting the apparatus each time."""
    _check_pair(state, obs)
    if m < 1:
        raise ValueError("a trajectory needs at least one measurement")
    u, z = _draws(rng, m)
    logw = _log_probs(state)[None, :].copy()
    outcomes = np.empty((1, m))
    steps = np.arange(1, m + 1, dtype=np.int64)
    snaps = np.empty((1, m, state.dim))
    _kernels.weak_walk(logw, obs.eigenvalues.copy(), float(cfg.delta_p), u[None, :], z[None, :], outcomes, steps, snaps)
    if not np.all(np.isfinite(outcomes)):
        raise RenormalizationError("weak walk produced non-finite outcomes")
    amps = _amplitudes_from_logw(_phases(state)[None, :], snaps[0])
    return WeakTrajectory(outcomes[0], amps, _converged_index(logw[0]))


@dataclass(frozen=True)
class WeakEnsemble:
    """Batch of independent weak trajectories.

    ``snapshots[t, k]`` holds the amplitudes of trajectory ``t`` after
    ``snapshot_steps[k]`` measurements; ``converged_to`` is -1 where the walk
    has not reached an eigenstate.
    """

    outcomes: np.ndarray
    final_amplitudes: np.ndarray
    converged_to: np.ndarray
    snapshot_steps: np.ndarray
    snapshots: np.ndarray

    @property
    def means(self) -> np.ndarray:
        return self.outcomes.mean(axis=1)

    def arrival_fractions(self, dim: int) -> np.ndarray:
        counts = np.bincount(self.converged_to[self.converged_to >= 0], minlength=dim)
        return counts / self.converged_to.size


def run_weak_ensemble(
    state: PureState,
    obs: Observable,
    cfg: WeakConfig,
    m: int,
    n_trajectories: int,
    seed: int,
    *,
    snapshot_steps: Sequence[int] = (),
    first_id: int = 0,
    keep_outcomes: bool = True,
) -> WeakEnsemble:
    """Run trajectories ``first_id .. first_id + n_trajectories - 1``.

    Trajectory ``i`` draws from ``RandomStream(seed, i)`` and is identical to
    ``run_weak_trajectory`` with that stream. Work is done in fixed blocks of
    trajectories so that the result does not depend on the caller's batching.
    A snapshot step of 0 records the initial state.
    """
    _check_pair(state, obs)
    if m < 1:
        raise ValueError("a trajectory needs at least one measurement")
    d = state.dim
    steps = np.asarray(sorted(set(int(s) for s in snapshot_steps)), dtype=np.int64)
    if steps.size and (steps[0] < 0 or steps[-1] > m):
        raise ValueError(f"snapshot steps must lie in [0, {m}]")
    kernel_steps = steps[steps > 0]
    lw0 = _log_probs(state)
    phases = _phases(state)
    ev = obs.eigenvalues.copy()

    n = n_trajectories
    outcomes = np.empty((n, m)) if keep_outcomes else None
    means = np.empty(n)
    final_lw = np.empty((n, d))
    snaps_lw = np.empty((n, steps.size, d))
    for start in range(0, n, BLOCK_SIZE):
        stop = min(n, start + BLOCK_SIZE)
        b = stop - start
        u = np.empty((b, m))
        z = np.empty((b, m))
        for r in range(b):
            u[r], z[r] = _draws(RandomStream(seed, first_id + start + r), m)
        logw = np.tile(lw0, (b, 1))
        out = np.empty((b, m))
        ks = np.empty((b, kernel_steps.size, d))
        _kernels.weak_walk(logw, ev, float(cfg.delta_p), u, z, out, kernel_steps, ks)
        if keep_outcomes:
            outcomes[start:stop] = out
        means[start:stop] = out.mean(axis=1)
        final_lw[start:stop] = logw
        if steps.size:
            snaps_lw[start:stop, steps == 0, :] = lw0
            snaps_lw[start:stop, steps > 0, :] = ks
    if not np.all(np.isfinite(means)):
        raise RenormalizationError("weak walk produced non-finite outcomes")
    top = final_lw.argmax(axis=1)
    conv = np.where(np.exp(final_lw.max(axis=1)) >= CONVERGENCE_THRESHOLD, top, -1)
    ens = WeakEnsemble(
        outcomes=outcomes if keep_outcomes else means[:, None],
        final_amplitudes=_amplitudes_from_logw(phases, final_lw),
        converged_to=conv.astype(np.int64),
        snapshot_steps=steps,
        snapshots=_amplitudes_from_logw(phases, snaps_lw),
    )
    return ens


def ensemble_density_matrix(amplitudes: np.ndarray) -> np.ndarray:
    """Average of |psi><psi| over trajectories, summed in trajectory order."""
    a = np.asarray(amplitudes, dtype=complex)
    acc = np.zeros((a.shape[1], a.shape[1]), dtype=complex)
    for start in range(0, a.shape[0], BLOCK_SIZE):
        blk = a[start : start + BLOCK_SIZE]
        acc += blk.T @ blk.conj()
    return acc / a.shape[0]


def weak_joint_logdensity(outcomes: Sequence[float], state: PureState, obs: Observable, cfg: WeakConfig) -> float:
    _check_pair(state, obs)
    p = np.asarray(outcomes, dtype=float)
    m = p.size
    log_norm_sq = -0.5 * math.log(math.pi * cfg.delta_p**2)
    lw = _log_probs(state) - np.sum((p[:, None] - obs.eigenvalues[None, :]) ** 2, axis=0) / cfg.delta_p**2
    top = lw.max()
    return float(m * log_norm_sq + top + math.log(np.sum(np.exp(lw - top))))


def weak_joint_density(outcomes: Sequence[float], state: PureState, obs: Observable, cfg: WeakConfig) -> float:
    """Joint density of a record of repeated weak outcomes (symmetric in the record)."""
    return math.exp(weak_joint_logdensity(outcomes, state, obs, cfg))


def weak_mean_distribution(state: PureState, obs: Observable, cfg: WeakConfig, m: int) -> GaussianMixture1D:
    """Law of the average of ``m`` repeated outcomes: Gaussians at the eigenvalues."""
    _check_pair(state, obs)
    if m < 1:
        raise ValueError("m must be at least 1")
    return GaussianMixture1D(state.probabilities, obs.eigenvalues, cfg.delta_p / math.sqrt(2.0 * m))


def weak_reduced_density_after(state: PureState, obs: Observable, cfg: WeakConfig, m: int) -> DensityMatrix:
    """Trajectory-averaged system density matrix after ``m`` weak measurements."""
    _check_pair(state, obs)
    if m < 0:
        raise ValueError("m must be non-negative")
    a = state.amplitudes
    ds = obs.eigenvalues[:, None] - obs.eigenvalues[None, :]
    return DensityMatrix(np.outer(a, a.conj()) * np.exp(-m * ds**2 / (4.0 * cfg.delta_p**2)))


def weak_resource_exact(cfg: WeakConfig, obs_spread: float, strong_count: int) -> float:
    if not obs_spread > 0:
        raise ValueError("the observable spread must be positive (eigenstates admit no comparison)")
    return (cfg.delta_p / obs_spread) ** 2 * strong_count / 2.0


def weak_resource_ratio(cfg: WeakConfig, obs_spread: float, strong_count: int) -> int:
    """Number of weak measurements matching the error of ``strong_count`` strong ones."""
    exact = weak_resource_exact(cfg, obs_spread, strong_count)
    nearest = round(exact)
    if abs(exact - nearest) <= 1e-9 * max(1.0, exact):
        return int(nearest)
    return int(math.ceil(exact))
