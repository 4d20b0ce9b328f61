"""Numerical foundation: states, observables, small dense matrices, randomness.

All Hilbert spaces here are small (dimension well below 100), so everything is
stored densely as numpy arrays. Units follow the hbar = 1 convention.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import erf

NORM_TOL = 1e-10
HERMITIAN_TOL = 1e-12


class DimensionMismatchError(ValueError):
    """Raised when a state, observable or matrix have incompatible sizes."""


class RenormalizationError(ArithmeticError):
    """Raised when a state update leaves no finite, non-zero amplitude."""


def _as_complex_vector(values) -> np.ndarray:
    arr = np.asarray(values, dtype=complex)
    if arr.ndim != 1:
        raise DimensionMismatchError(f"expected a 1-d amplitude vector, got shape {arr.shape}")
    return arr


@dataclass(frozen=True, eq=False)
class PureState:
    """Normalized amplitude vector in the eigenbasis of a reference observable.

    The constructor checks normalization; use :meth:`normalized` to build a
    state from arbitrary (non-zero) amplitudes.
    """

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = _as_complex_vector(self.amplitudes)
        if amps.size < 2:
            raise DimensionMismatchError("a state needs at least two basis vectors")
        if not np.all(np.isfinite(amps)):
            raise ValueError("amplitudes must be finite")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"amplitudes are not normalized (norm^2 = {norm!r})")
        amps = amps.copy()
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def normalized(cls, amplitudes) -> "PureState":
        amps = _as_complex_vector(amplitudes)
        norm = np.sqrt(np.vdot(amps, amps).real)
        if not np.isfinite(norm) or norm == 0.0:
            raise RenormalizationError("cannot normalize a zero or non-finite vector")
        return cls(amps / norm)

    @classmethod
    def basis(cls, index: int, dim: int) -> "PureState":
        amps = np.zeros(dim, dtype=complex)
        amps[index] = 1.0
        return cls(amps)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    @property
    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def projector(self) -> "DensityMatrix":
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()))

    def overlap(self, other: "PureState") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def fidelity(self, other: "PureState") -> float:
        return abs(self.overlap(other)) ** 2

    def __repr__(self):
        return f"PureState({np.array2string(self.amplitudes, precision=6)})"


@dataclass(frozen=True, eq=False)
class Observable:
    """Non-degenerate observable, diagonal in the reference basis."""

    eigenvalues: np.ndarray
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        ev = np.asarray(self.eigenvalues, dtype=float)
        if ev.ndim != 1 or ev.size < 2:
            raise DimensionMismatchError("an observable needs at least two eigenvalues")
        if not np.all(np.isfinite(ev)):
            raise ValueError("eigenvalues must be finite")
        if np.unique(ev).size != ev.size:
            raise ValueError("eigenvalues must be pairwise distinct (non-degenerate spectrum)")
        if self.labels is not None and len(self.labels) != ev.size:
            raise DimensionMismatchError("one label per eigenvalue is required")
        ev = ev.copy()
        ev.setflags(write=False)
        object.__setattr__(self, "eigenvalues", ev)

    @property
    def dim(self) -> int:
        return self.eigenvalues.size

    def matrix(self) -> np.ndarray:
        return np.diag(self.eigenvalues).astype(complex)

    def spread(self) -> float:
        return float(self.eigenvalues.max() - self.eigenvalues.min())


def _check_hermitian(entries: np.ndarray, what: str) -> np.ndarray:
    m = np.asarray(entries, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatchError(f"{what} must be a square matrix, got shape {m.shape}")
    if not np.allclose(m, m.conj().T, rtol=0.0, atol=HERMITIAN_TOL):
        raise ValueError(f"{what} is not Hermitian")
    return m


@dataclass(frozen=True, eq=False)
class HermitianOperator:
    entries: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "entries", _check_hermitian(self.entries, "operator"))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, unit-trace, positive semidefinite matrix."""

    entries: np.ndarray

    def __post_init__(self):
        m = _check_hermitian(self.entries, "density matrix")
        tr = np.trace(m).real
        if abs(tr - 1.0) > 1e-10:
            raise ValueError(f"density matrix trace is {tr!r}, expected 1")
        if np.linalg.eigvalsh(m).min() < -1e-10:
            raise ValueError("density matrix has a negative eigenvalue")
        object.__setattr__(self, "entries", m)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def expectation(self, op) -> float:
        return float(np.trace(self.entries @ operator_matrix(op)).real)

    def fidelity(self, state: PureState) -> float:
        """Overlap <psi|rho|psi> with a pure state."""
        psi = state.amplitudes
        return float(np.vdot(psi, self.entries @ psi).real)


class RandomStream:
    """Reproducible stream of random draws keyed by ``(seed, stream_id)``.

    Each Monte Carlo trajectory owns one stream, so results never depend on
    how trajectories are batched or which worker runs them.
    """

    def __init__(self, seed: int, stream_id: int = 0):
        if seed < 0 or stream_id < 0:
            raise ValueError("seed and stream_id must be non-negative")
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        sequence = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,))
        self.generator = np.random.Generator(np.random.PCG64(sequence))

    def spawn(self, stream_id: int) -> "RandomStream":
        return RandomStream(self.seed, stream_id)

    def __repr__(self):
        return f"RandomStream(seed={self.seed}, stream_id={self.stream_id})"


def operator_matrix(obs) -> np.ndarray:
    """Dense matrix of an :class:`Observable`, :class:`HermitianOperator` or array."""
    if isinstance(obs, Observable):
        return obs.matrix()
    if isinstance(obs, HermitianOperator):
        return obs.entries
    return _check_hermitian(obs, "observable")


def _check_pair(state: PureState, obs: Observable):
    if state.dim != obs.dim:
        raise DimensionMismatchError(
            f"state has dimension {state.dim} but observable has {obs.dim} eigenvalues"
        )


def expectation(state: PureState, obs: Observable) -> float:
    """Expectation value sum_i |alpha_i|^2 s_i."""
    _check_pair(state, obs)
    return float(np.dot(state.probabilities, obs.eigenvalues))


def observable_variance(state: PureState, obs: Observable) -> float:
    _check_pair(state, obs)
    p = state.probabilities
    mean = np.dot(p, obs.eigenvalues)
    # centred form avoids cancellation for nearly-eigenstate inputs
    return float(np.dot(p, (obs.eigenvalues - mean) ** 2))


def matrix_exponential_evolve(h: HermitianOperator | np.ndarray, t: float) -> np.ndarray:
    """Return the unitary exp(-i h t) via the eigendecomposition of ``h``."""
    m = h.entries if isinstance(h, HermitianOperator) else _check_hermitian(h, "generator")
    if not np.isfinite(t):
        raise ValueError("evolution time must be finite")
    w, v = np.linalg.eigh(m)
    return (v * np.exp(-1j * w * t)) @ v.conj().T


def partial_trace(dm: DensityMatrix | np.ndarray, dims: tuple[int, int], keep: int | str) -> DensityMatrix:
    """Reduce a bipartite density matrix to subsystem ``keep`` (0/"A" or 1/"B")."""
    m = dm.entries if isinstance(dm, DensityMatrix) else np.asarray(dm, dtype=complex)
    d_a, d_b = dims
    if m.shape != (d_a * d_b, d_a * d_b):
        raise DimensionMismatchError(f"matrix of shape {m.shape} does not factor as {d_a}x{d_b}")
    keep = {"A": 0, "B": 1, "a": 0, "b": 1}.get(keep, keep)
    t = m.reshape(d_a, d_b, d_a, d_b)
    if keep == 0:
        red = np.einsum("ijkj->ik", t)
    elif keep == 1:
        red = np.einsum("ijil->jl", t)
    else:
        raise ValueError(f"keep must select subsystem 0/'A' or 1/'B', got {keep!r}")
    return DensityMatrix(red)


@dataclass(frozen=True)
class PointMasses:
    """Discrete distribution: point masses ``weights`` located at ``values``."""

    values: np.ndarray
    weights: np.ndarray

    def mean(self) -> float:
        return float(np.dot(self.values, self.weights))

    def pmf(self, y) -> float:
        hit = np.isclose(self.values, y, rtol=0.0, atol=1e-12)
        return float(self.weights[hit].sum())


@dataclass(frozen=True)
class GaussianMixture1D:
    """One-dimensional Gaussian mixture; calling it evaluates the pdf."""

    weights: np.ndarray
    means: np.ndarray
    stds: np.ndarray = field()

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        mu = np.asarray(self.means, dtype=float)
        sd = np.broadcast_to(np.asarray(self.stds, dtype=float), mu.shape).copy()
        if not (w.shape == mu.shape == sd.shape):
            raise DimensionMismatchError("weights, means and stds must have equal length")
        if np.any(sd <= 0):
            raise ValueError("component standard deviations must be positive")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", mu)
        object.__setattr__(self, "stds", sd)

    def logpdf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)[..., None]
        log_comp = (
            np.log(self.weights, where=self.weights > 0, out=np.full(self.weights.shape, -np.inf))
            - 0.5 * np.log(2 * np.pi * self.stds**2)
            - 0.5 * ((x - self.means) / self.stds) ** 2
        )
        top = np.max(log_comp, axis=-1, keepdims=True)
        return (top + np.log(np.sum(np.exp(log_comp - top), axis=-1, keepdims=True)))[..., 0]

    def pdf(self, x) -> np.ndarray:
        return np.exp(self.logpdf(x))

    __call__ = pdf

    def cdf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)[..., None]
        z = (x - self.means) / (self.stds * np.sqrt(2.0))
        return np.sum(self.weights * 0.5 * (1.0 + erf(z)), axis=-1)

    def mean(self) -> float:
        return float(np.dot(self.weights, self.means))

    def var(self) -> float:
        m = self.mean()
        return float(np.dot(self.weights, self.stds**2 + (self.means - m) ** 2))


def as_state(amplitudes: PureState | Sequence[complex]) -> PureState:
    return amplitudes if isinstance(amplitudes, PureState) else PureState(amplitudes)
