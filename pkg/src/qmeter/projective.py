"""Repeated projective (Dirac-von Neumann) measurements on a single copy."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import (
    DimensionMismatchError,
    Observable,
    PointMasses,
    PureState,
    RandomStream,
    _check_pair,
)


@dataclass(frozen=True)
class StrongTrajectory:
    """Outcomes of ``n`` repeated strong measurements.

    Only the first measurement is random; the rest act on an eigenstate and
    repeat its outcome, so the record is constant by construction.
    """

    outcomes: np.ndarray
    collapsed_index: int

    @property
    def mean(self) -> float:
        return float(self.outcomes[0])


def _draw_index(probs: np.ndarray, u: float) -> int:
    cum = np.cumsum(probs)
    hits = np.nonzero(u < cum)[0]
    if hits.size:
        return int(hits[0])
    return int(np.nonzero(probs > 0)[0][-1])


def sample_strong(state: PureState, obs: Observable, rng: RandomStream) -> tuple[int, PureState]:
    """Collapse ``state`` onto an eigenvector of ``obs`` with Born probabilities."""
    _check_pair(state, obs)
    index = _draw_index(state.probabilities, rng.generator.random())
    return index, PureState.basis(index, state.dim)


def run_strong_trajectory(state: PureState, obs: Observable, n: int, rng: RandomStream) -> StrongTrajectory:
    if n < 1:
        raise ValueError("a trajectory needs at least one measurement")
    index, _ = sample_strong(state, obs, rng)
    return StrongTrajectory(np.full(n, obs.eigenvalues[index]), index)


def run_strong_ensemble(
    state: PureState, obs: Observable, n: int, n_trajectories: int, seed: int, first_id: int = 0
) -> np.ndarray:
    """Collapsed eigenvalue index of each trajectory, one stream per trajectory.

    Row ``i`` equals ``run_strong_trajectory(..., RandomStream(seed, first_id + i))``.
    """
    _check_pair(state, obs)
    if n < 1:
        raise ValueError("a trajectory needs at least one measurement")
    probs = state.probabilities
    idx = np.empty(n_trajectories, dtype=np.int64)
    for t in range(n_trajectories):
        idx[t] = _draw_index(probs, RandomStream(seed, first_id + t).generator.random())
    return idx


def strong_joint_density(outcomes: Sequence[float], state: PureState, obs: Observable) -> float:
    """Probability of an exact outcome record; non-constant records have zero weight."""
    _check_pair(state, obs)
    outcomes = np.asarray(outcomes, dtype=float)
    if outcomes.size == 0:
        raise ValueError("empty outcome record")
    match = np.isclose(outcomes[:, None], obs.eigenvalues[None, :], rtol=0.0, atol=1e-12)
    if not match.any(axis=1).all():
        raise DimensionMismatchError("outcome is not an eigenvalue of the observable")
    index = np.argmax(match, axis=1)
    if np.any(index != index[0]):
        return 0.0
    return float(state.probabilities[index[0]])


def strong_mean_distribution(state: PureState, obs: Observable) -> PointMasses:
    """Distribution of the mean of N repeated outcomes (the same for every N)."""
    _check_pair(state, obs)
    probs = state.probabilities
    keep = probs > 0
    return PointMasses(obs.eigenvalues[keep].copy(), probs[keep].copy())
