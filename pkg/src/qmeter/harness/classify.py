"""Ontology classification of the distribution of single-copy averages.

The empirical distribution of y (the average of repeated outcomes on one
copy) is compared with four target forms:

* ``Exact``: a delta function at the expectation value;
* ``FAPP1``: a single narrow distribution centred on the expectation value;
* ``FAPP2``: such a distribution plus components of negligible weight;
* ``None``: two or more non-negligible components, the signature of outcomes
  that settle on random eigenvalues.

Candidate Gaussian mixtures are fitted by EM and compared by BIC.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

EXACT_STD = 1e-9
NEGLIGIBLE_WEIGHT = 0.02
MIN_SAMPLES = 500
N_INIT = 20
_LOG_2PI = math.log(2.0 * math.pi)


class VerdictKind(str, enum.Enum):
    Exact = "Exact"
    FAPP1 = "FAPP1"
    FAPP2 = "FAPP2"
    None_ = "None"


@dataclass(frozen=True)
class MixtureFit:
    weights: np.ndarray
    means: np.ndarray
    stds: np.ndarray
    loglik: float
    n_params: int
    bic: float
    pinned: bool = False

    @property
    def k(self) -> int:
        return self.weights.size

    def components(self) -> list[dict]:
        order = np.argsort(self.means, kind="stable")
        return [
            {"weight": float(self.weights[i]), "mean": float(self.means[i]), "std": float(self.stds[i])}
            for i in order
        ]


@dataclass(frozen=True)
class OntologyVerdict:
    kind: VerdictKind
    mu_hat: float
    epsilon_hat: float
    components: list[dict]
    figures_of_merit: tuple[float, float]
    model: str = ""
    bic: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "mu_hat": self.mu_hat,
            "epsilon_hat": self.epsilon_hat,
            "components": self.components,
            "figures_of_merit": list(self.figures_of_merit),
            "model": self.model,
            "bic": self.bic,
        }


def _kmeans_1d(x: np.ndarray, k: int, rng: np.random.Generator, iters: int = 50) -> np.ndarray:
    # k-means++ seeding, then Lloyd iterations
    centres = [x[rng.integers(x.size)]]
    for _ in range(1, k):
        d2 = np.min((x[:, None] - np.array(centres)[None, :]) ** 2, axis=1)
        total = d2.sum()
        if total == 0:
            centres.append(x[rng.integers(x.size)])
        else:
            centres.append(x[rng.choice(x.size, p=d2 / total)])
    c = np.sort(np.array(centres, dtype=float))
    for _ in range(iters):
        # in 1-D the nearest centre is found from the sorted midpoints
        lab = np.searchsorted(0.5 * (c[1:] + c[:-1]), x)
        cnt = np.bincount(lab, minlength=k)
        sums = np.bincount(lab, weights=x, minlength=k)
        new = np.sort(np.where(cnt > 0, sums / np.maximum(cnt, 1), c))
        if np.allclose(new, c, rtol=0, atol=1e-12):
            break
        c = new
    return c


def _log_components(x, w, mu, var):
    with np.errstate(divide="ignore"):
        lw = np.log(w)
    return lw - 0.5 * (_LOG_2PI + np.log(var)) - 0.5 * (x[:, None] - mu) ** 2 / var


def _em(x, w, mu, var, pinned: bool, var_floor: float, max_iter: int, tol: float):
    n = x.size
    prev = -np.inf
    for _ in range(max_iter):
        lc = _log_components(x, w, mu, var)
        top = lc.max(axis=1, keepdims=True)
        lse = top[:, 0] + np.log(np.exp(lc - top).sum(axis=1))
        ll = float(lse.sum())
        resp = np.exp(lc - lse[:, None])
        nk = resp.sum(axis=0)
        w = nk / n
        live = nk > 1e-12
        if not pinned:
            mu = np.where(live, (resp * x[:, None]).sum(axis=0) / np.where(live, nk, 1.0), mu)
        var = np.where(live, (resp * (x[:, None] - mu) ** 2).sum(axis=0) / np.where(live, nk, 1.0), var)
        var = np.maximum(var, var_floor)
        if ll - prev <= tol * n:
            break
        prev = ll
    lc = _log_components(x, w, mu, var)
    top = lc.max(axis=1, keepdims=True)
    ll = float((top[:, 0] + np.log(np.exp(lc - top).sum(axis=1))).sum())
    return w, mu, var, ll


def fit_gaussian_mixture(
    samples: Sequence[float],
    k: int,
    *,
    pinned_means: Sequence[float] | None = None,
    n_init: int = N_INIT,
    seed: int = 0,
    max_iter: int = 500,
    tol: float = 1e-7,
) -> MixtureFit:
    """Maximum-likelihood 1-D Gaussian mixture, best of ``n_init`` EM restarts.

    With ``pinned_means`` the component means are held fixed and only weights
    and variances are fitted. EM stops once the log-likelihood gains less than
    ``tol`` per sample; restarts whose k-means seeding lands on an already
    tried set of centres are skipped. Variances are floored at (1e-6 * scale)^2 so
    point-mass data give a finite likelihood.
    """
    x = np.asarray(samples, dtype=float)
    n = x.size
    scale = float(np.std(x)) or 1.0
    var_floor = (1e-6 * scale) ** 2
    rng = np.random.default_rng(seed)
    best = None
    if pinned_means is not None:
        mu0 = np.asarray(pinned_means, dtype=float)
        k = mu0.size
        lab = np.argmin(np.abs(x[:, None] - mu0[None, :]), axis=1)
        w0 = np.bincount(lab, minlength=k) / n
        w0 = np.clip(w0, 1e-3, None)
        w0 /= w0.sum()
        var0 = np.full(k, max(np.var(x), var_floor))
        inits = [(w0, mu0, var0)]
        for _ in range(min(n_init, 3) - 1):
            wr = rng.dirichlet(np.ones(k))
            inits.append((wr, mu0, var0 * rng.uniform(0.05, 1.0, k)))
        n_params = (k - 1) + k
    else:
        inits = []
        seen = []
        for _ in range(n_init if k > 1 else 1):
            c = _kmeans_1d(x, k, rng) if k > 1 else np.array([x.mean()])
            if any(np.allclose(c, prev, rtol=0.0, atol=1e-9 * scale) for prev in seen):
                continue
            seen.append(c)
            lab = np.argmin(np.abs(x[:, None] - c[None, :]), axis=1)
            w0 = np.clip(np.bincount(lab, minlength=k) / n, 1e-3, None)
            var0 = np.array([np.var(x[lab == j]) if np.sum(lab == j) > 1 else np.var(x) for j in range(k)])
            inits.append((w0 / w0.sum(), c, np.maximum(var0, var_floor)))
        n_params = (k - 1) + 2 * k
    pinned = pinned_means is not None
    for w0, mu0, var0 in inits:
        w, mu, var, ll = _em(x, w0, mu0.astype(float), var0, pinned, var_floor, max_iter, tol)
        if best is None or ll > best[3]:
            best = (w, mu, var, ll)
    w, mu, var, ll = best
    bic = -2.0 * ll + n_params * math.log(n)
    return MixtureFit(w, mu, np.sqrt(var), ll, n_params, bic, pinned)


def _centred(mean, std, weight, n, target, tolerance):
    if target is None:
        return True
    tol = tolerance if tolerance is not None else 4.0 * std / math.sqrt(max(weight * n, 1.0)) + 1e-12
    return abs(mean - target) <= tol


def classify_mean_distribution(
    samples: Sequence[float],
    eigenvalues: Sequence[float] | None,
    true_mean: float | None = None,
    *,
    mean_tolerance: float | None = None,
    negligible_weight: float = NEGLIGIBLE_WEIGHT,
    n_init: int = N_INIT,
) -> OntologyVerdict:
    """Classify samples of a single-copy average against the ontology criteria.

    Candidate models are a single Gaussian, free mixtures with 2 and
    ``len(eigenvalues)`` components, and a mixture with means pinned at the
    eigenvalues; the lowest BIC wins. "Centred" means within
    ``mean_tolerance`` of ``true_mean`` (default: four standard errors of the
    component mean). Without ``true_mean`` the centring test is skipped and
    the bias figure of merit is taken against the overall sample mean.
    """
    x = np.asarray(samples, dtype=float)
    if x.ndim != 1 or x.size < MIN_SAMPLES:
        raise ValueError(f"at least {MIN_SAMPLES} samples are required, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise ValueError("samples contain non-finite values")
    n = x.size
    sample_mean = float(x.mean())
    reference = sample_mean if true_mean is None else float(true_mean)

    sd = float(x.std())
    if sd < EXACT_STD:
        comp = [{"weight": 1.0, "mean": sample_mean, "std": sd}]
        return OntologyVerdict(
            VerdictKind.Exact, sample_mean, sd, comp, (abs(sample_mean - reference), sd), "delta", {}
        )

    ev = None if eigenvalues is None or len(eigenvalues) == 0 else np.asarray(eigenvalues, dtype=float)
    fits: dict[str, MixtureFit] = {"k=1": fit_gaussian_mixture(x, 1)}
    ks = {2} | ({ev.size} if ev is not None else set())
    for k in sorted(ks):
        fits[f"k={k}"] = fit_gaussian_mixture(x, k, n_init=n_init, seed=k)
    if ev is not None:
        fits["pinned"] = fit_gaussian_mixture(x, ev.size, pinned_means=ev, n_init=n_init)
    name = min(fits, key=lambda key: (fits[key].bic, fits[key].n_params))
    best = fits[name]
    bics = {key: float(f.bic) for key, f in fits.items()}

    heavy = best.weights >= negligible_weight
    dom = int(np.argmax(best.weights))
    mu_d, sd_d, w_d = float(best.means[dom]), float(best.stds[dom]), float(best.weights[dom])
    centred = _centred(mu_d, sd_d, w_d, n, true_mean, mean_tolerance)

    if heavy.sum() >= 2:
        kind = VerdictKind.None_
        mu_hat, eps_hat = sample_mean, sd
    elif best.k == 1:
        kind = VerdictKind.FAPP1 if centred else VerdictKind.None_
        mu_hat, eps_hat = mu_d, sd_d
    else:
        kind = VerdictKind.FAPP2 if centred else VerdictKind.None_
        mu_hat, eps_hat = mu_d, sd_d
    return OntologyVerdict(kind, mu_hat, eps_hat, best.components(), (abs(mu_hat - reference), eps_hat), name, bics)
