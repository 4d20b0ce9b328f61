"""No-cloning checks, information cloning of coherent states, optimal cloning.

Quadratures follow x = (a + a^dag)/sqrt 2 and p = (a - a^dag)/(i sqrt 2): a
coherent state |alpha> has quadrature means sqrt 2 Re(alpha), sqrt 2 Im(alpha)
and variance 1/2 in each.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import DensityMatrix, PureState, RandomStream, operator_matrix

SQRT2 = math.sqrt(2.0)


# --- no-go checks -------------------------------------------------------------


@dataclass(frozen=True)
class NoCloningReport:
    overlap: complex
    n_clones: int
    residual: float
    consistent: bool

    @property
    def violation(self) -> bool:
        return not self.consistent


def nocloning_constraint(overlap: complex, n_clones: int, tol: float = 1e-12) -> NoCloningReport:
    """Check whether unitary cloning could preserve the inner product ``overlap``.

    Cloning both states into ``n_clones`` extra copies turns their overlap c
    into c^(N+1), so a cloner can exist only when c = c^(N+1).
    """
    c = complex(overlap)
    if abs(c) > 1.0 + 1e-12:
        raise ValueError(f"an overlap of unit vectors has modulus <= 1, got {abs(c)!r}")
    if n_clones < 1:
        raise ValueError("n_clones must be at least 1")
    residual = abs(c - c ** (n_clones + 1))
    return NoCloningReport(c, n_clones, residual, residual <= tol)


def linearity_probe(s1: PureState, s2: PureState, coeffs: tuple[complex, complex], obs) -> float:
    """Gap between a superposition's expectation value and its linear extension.

    A device that reported <O> without disturbing the state would act
    linearly, answering |a|^2 <O>_1 + |b|^2 <O>_2 on a s1 + b s2; the true value
    carries the cross terms 2 Re(a* b <s1|O|s2>). ``obs`` may be an
    :class:`~qmeter.core.Observable` or any Hermitian matrix.
    """
    if s1.dim != s2.dim:
        raise ValueError("states must share a Hilbert space")
    if s1.fidelity(s2) > 1.0 - 1e-12:
        raise ValueError("s1 and s2 are parallel; the superposition is trivial")
    a, b = complex(coeffs[0]), complex(coeffs[1])
    o = operator_matrix(obs)
    if o.shape[0] != s1.dim:
        raise ValueError("observable and states have different dimensions")
    v = a * s1.amplitudes + b * s2.amplitudes
    norm_sq = float(np.vdot(v, v).real)
    if not norm_sq > 0:
        raise ValueError("the superposition vanishes")
    # with weights taken from the normalized superposition, the difference
    # between the true and linear answers is exactly the cross term, which is
    # evaluated directly to avoid cancellation
    cross = 2.0 * np.real(np.conj(a) * b * np.vdot(s1.amplitudes, o @ s2.amplitudes))
    return float(abs(cross) / norm_sq)


# --- information cloning ------------------------------------------------------


@dataclass(frozen=True)
class CoherencyParam:
    value: complex

    def __post_init__(self):
        v = complex(self.value)
        if not (math.isfinite(v.real) and math.isfinite(v.imag)):
            raise ValueError("coherency parameter must be finite")
        object.__setattr__(self, "value", v)

    @property
    def quadrature_means(self) -> tuple[float, float]:
        return SQRT2 * self.value.real, SQRT2 * self.value.imag


@dataclass(frozen=True)
class InfoCloneSetup:
    """Unknown coherent state ``alpha``, N blank coherent states ``beta``, couplings.

    ``t=None`` selects the information-cloning time, where sin(Rt) = -1.
    """

    alpha: CoherencyParam
    beta: CoherencyParam = field(default_factory=lambda: CoherencyParam(0))
    n_clones: int = 1
    couplings: Sequence[float] | None = None
    t: float | None = None

    def __post_init__(self):
        if self.n_clones < 1:
            raise ValueError("n_clones must be at least 1")
        r = np.ones(self.n_clones) if self.couplings is None else np.asarray(self.couplings, dtype=float)
        if r.shape != (self.n_clones,):
            raise ValueError(f"expected {self.n_clones} couplings, got {r.size}")
        object.__setattr__(self, "couplings", tuple(float(x) for x in r))


def induced_unitary(couplings: Sequence[float], t: float) -> np.ndarray:
    """Orthogonal map the beam-splitter unitary induces on (alpha, beta_1..beta_N).

    It rotates by angle Rt, R = |r|, in the plane spanned by the first
    coordinate and the coupling direction r/R, and fixes everything orthogonal.
    """
    r = np.asarray(couplings, dtype=float)
    if r.ndim != 1 or r.size < 1:
        raise ValueError("at least one coupling is required")
    if np.any(r <= 0):
        raise ValueError("couplings must be positive")
    big_r = float(np.sqrt(np.sum(r * r)))
    rhat = r / big_r
    c, s = math.cos(big_r * t), math.sin(big_r * t)
    n = r.size
    u = np.empty((n + 1, n + 1))
    u[0, 0] = c
    u[0, 1:] = rhat * s
    u[1:, 0] = -rhat * s
    u[1:, 1:] = np.eye(n) + (c - 1.0) * np.outer(rhat, rhat)
    return u


def apply_induced_unitary(couplings: Sequence[float], t: float, vec) -> np.ndarray:
    """``induced_unitary(couplings, t) @ vec`` in O(N) without forming the matrix."""
    r = np.asarray(couplings, dtype=float)
    if r.ndim != 1 or r.size < 1:
        raise ValueError("at least one coupling is required")
    if np.any(r <= 0):
        raise ValueError("couplings must be positive")
    v = np.asarray(vec, dtype=complex)
    if v.shape != (r.size + 1,):
        raise ValueError(f"expected a vector of length {r.size + 1}, got shape {v.shape}")
    big_r = float(np.sqrt(np.sum(r * r)))
    rhat = r / big_r
    c, s = math.cos(big_r * t), math.sin(big_r * t)
    proj = np.dot(rhat, v[1:])
    out = np.empty_like(v)
    out[0] = c * v[0] + s * proj
    out[1:] = v[1:] + ((c - 1.0) * proj - s * v[0]) * rhat
    return out


def information_cloning_time(couplings: Sequence[float]) -> float:
    """Smallest positive t with sin(Rt) = -1."""
    r = np.asarray(couplings, dtype=float)
    return 1.5 * math.pi / float(np.sqrt(np.sum(r * r)))


def info_clone(setup: InfoCloneSetup) -> tuple[CoherencyParam, list[CoherencyParam]]:
    """Apply the induced unitary to (alpha, beta, ..., beta).

    Coherent inputs stay a product of coherent states, so the output is fully
    described by N + 1 coherency parameters.
    """
    r = np.asarray(setup.couplings)
    if setup.t is None:
        if not np.allclose(r, r[0], rtol=1e-12, atol=0.0):
            raise ValueError("identical clones require equal couplings")
        t = information_cloning_time(r)
    else:
        t = setup.t
    vec = np.empty(setup.n_clones + 1, dtype=complex)
    vec[0] = setup.alpha.value
    vec[1:] = setup.beta.value
    out = apply_induced_unitary(r, t, vec)
    return CoherencyParam(out[0]), [CoherencyParam(x) for x in out[1:]]


def _param_values(param) -> np.ndarray | complex:
    if isinstance(param, CoherencyParam):
        return param.value
    if isinstance(param, (complex, float, int)):
        return complex(param)
    arr = np.asarray(param)
    if arr.dtype == object:
        arr = np.array([p.value if isinstance(p, CoherencyParam) else complex(p) for p in arr.ravel()])
    return arr.astype(complex)


def sample_coherent_quadratures(param, which: str, rng: RandomStream, size=None):
    """Measure the position or momentum quadrature of coherent state(s).

    ``param`` may be a single :class:`CoherencyParam` or an array of complex
    parameters (one draw each, ``size`` ignored).
    """
    val = _param_values(param)
    if which in ("position", "x"):
        centre = SQRT2 * np.real(val)
    elif which in ("momentum", "p"):
        centre = SQRT2 * np.imag(val)
    else:
        raise ValueError(f"which must be 'position' or 'momentum', got {which!r}")
    if np.ndim(centre) == 0:
        out = centre + math.sqrt(0.5) * rng.generator.standard_normal(size)
        return float(out) if size is None else out
    return centre + math.sqrt(0.5) * rng.generator.standard_normal(np.shape(centre))


def coherent_overlap(a: CoherencyParam, b: CoherencyParam) -> float:
    """Squared overlap |<a|b>|^2 = exp(-|a - b|^2) of two coherent states."""
    return math.exp(-abs(a.value - b.value) ** 2)


def info_clone_overlap(alpha: CoherencyParam, n_clones: int) -> float:
    """Overlap of one information clone |alpha/sqrt N> with the original |alpha>.

    It depends on alpha, unlike the N -> infinity cloning bound of 1/2.
    """
    if n_clones < 1:
        raise ValueError("n_clones must be at least 1")
    return coherent_overlap(alpha, CoherencyParam(alpha.value / math.sqrt(n_clones)))


@dataclass(frozen=True)
class AlphaEstimate:
    alpha_hat: complex
    std_per_component: float
    n_used: int


def estimate_alpha(clones, rng: RandomStream) -> AlphaEstimate:
    """Estimate the original alpha from N identical information clones alpha/sqrt N.

    Position is measured on ceil(N/2) clones and momentum on the rest; each
    sample mean is rescaled by sqrt(N/2). The per-component spread of the
    estimate is 1/sqrt 2 for even N, whatever N is.
    """
    vals = np.atleast_1d(_param_values(clones))
    n = vals.size
    if n < 2:
        raise ValueError("at least two clones are needed")
    if not np.allclose(vals, vals[0], rtol=1e-12, atol=1e-15):
        raise ValueError("clones must all carry the same coherency parameter")
    return _estimate_from_parameter(complex(vals[0]), n, rng.generator)


def _estimate_from_parameter(theta: complex, n: int, gen: np.random.Generator) -> AlphaEstimate:
    n_x = (n + 1) // 2
    n_p = n - n_x
    xs = SQRT2 * theta.real + math.sqrt(0.5) * gen.standard_normal(n_x)
    ps = SQRT2 * theta.imag + math.sqrt(0.5) * gen.standard_normal(n_p)
    scale = math.sqrt(n / 2.0)
    alpha_hat = complex(scale * xs.mean(), scale * ps.mean())
    std = math.sqrt(n / (4.0 * min(n_x, n_p)))
    return AlphaEstimate(alpha_hat, std, n)


def estimate_alpha_experiments(alpha: complex, n_clones: int, n_experiments: int, seed: int, first_id: int = 0) -> np.ndarray:
    """Run independent info-cloning + estimation experiments; returns alpha_hat values.

    Experiment ``i`` clones ``alpha`` into ``n_clones`` copies and estimates it
    with ``RandomStream(seed, first_id + i)``.
    """
    _, clones = info_clone(InfoCloneSetup(CoherencyParam(alpha), n_clones=n_clones))
    theta = clones[0].value
    out = np.empty(n_experiments, dtype=complex)
    for i in range(n_experiments):
        gen = RandomStream(seed, first_id + i).generator
        out[i] = _estimate_from_parameter(theta, n_clones, gen).alpha_hat
    return out


# --- optimal cloning ----------------------------------------------------------


def _check_counts(n: int, m: int):
    if not (1 <= n <= m):
        raise ValueError(f"need 1 <= N <= M, got N={n}, M={m}")


def qubit_fidelity(n: int, m: int) -> float:
    """Optimal universal N -> M qubit cloning fidelity."""
    _check_counts(n, m)
    return (m * n + m + n) / (m * (n + 2))


def d_dim_fidelity(n: int, m: int, d: int) -> float:
    """Optimal universal N -> M fidelity in d dimensions."""
    _check_counts(n, m)
    if d < 2:
        raise ValueError("dimension must be at least 2")
    return n / m + (m - n) * (n + 1) / (m * (n + d))


def shrinking_factor(n: int, m: int, d: int) -> float:
    _check_counts(n, m)
    if d < 2:
        raise ValueError("dimension must be at least 2")
    return n * (m + d) / (m * (n + d))


def d_dim_clone_state(rho_in: DensityMatrix, n: int, m: int, d: int) -> DensityMatrix:
    """Single-clone state: the input shrunk toward I/d by the factor eta(N, M)."""
    if rho_in.dim != d:
        raise ValueError(f"input state has dimension {rho_in.dim}, expected {d}")
    eta = shrinking_factor(n, m, d)
    return DensityMatrix(eta * rho_in.entries + (1.0 - eta) * np.eye(d) / d)


def qubit_clone_expectation_factor(m: int) -> float:
    """Factor relating <O>_clone to <O>_true for 1 -> M qubit clones.

    Applies to observables whose expectation vanishes in the state orthogonal
    to the input; the factor is F(1, M) and tends to 2/3.
    """
    return qubit_fidelity(1, m)


def coherent_fidelity_bound(n: int, m: int) -> float:
    """Upper bound on N -> M cloning fidelity for coherent states."""
    _check_counts(n, m)
    return m * n / (m * n + m - n)


def clone_smearing_variance(n: int, m: int) -> float:
    """sigma(N, M)^2 = 1/N - 1/M."""
    _check_counts(n, m)
    return 1.0 / n - 1.0 / m


def coherent_clone_moments(alpha: CoherencyParam, n: int, m: int) -> tuple[float, float, float, float]:
    """(mean_x, mean_p, var_x, var_p) of an optimal Gaussian clone of |alpha>."""
    sig2 = clone_smearing_variance(n, m)
    mx, mp = alpha.quadrature_means
    return mx, mp, 0.5 + sig2, 0.5 + sig2


def sample_coherent_clone(alpha: CoherencyParam, n: int, m: int, rng: RandomStream, size=None):
    """Draw the coherent component alpha + beta of the Gaussian clone mixture.

    beta is complex Gaussian with density exp(-|beta|^2/sigma^2)/(pi sigma^2),
    i.e. each real component has variance sigma^2/2.
    """
    sig2 = clone_smearing_variance(n, m)
    if sig2 == 0.0:
        return CoherencyParam(alpha.value) if size is None else np.full(size, alpha.value)
    z = rng.generator.standard_normal((2,) if size is None else (2,) + tuple(np.atleast_1d(size)))
    beta = math.sqrt(sig2 / 2.0) * (z[0] + 1j * z[1])
    if size is None:
        return CoherencyParam(alpha.value + complex(beta))
    return alpha.value + beta


def sample_clone_quadratures(alpha: CoherencyParam, n: int, m: int, which: str, rng: RandomStream, size: int) -> np.ndarray:
    """Quadrature readings on ``size`` independently prepared optimal clones."""
    centres = sample_coherent_clone(alpha, n, m, rng, size=size)
    return sample_coherent_quadratures(np.asarray(centres), which, rng)
