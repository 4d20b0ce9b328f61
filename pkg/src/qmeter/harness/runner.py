"""Experiment runner: dispatch a config to its scheme and write artifacts.

Trajectories are processed in fixed blocks of :data:`BLOCK` consecutive
indices, trajectory ``i`` always drawing from ``RandomStream(seed, i)``.
Blocks may be farmed out to worker processes, but results are consumed in
block order, so every output is identical for any worker count.

Outputs (when an output directory is given):

``trajectories.csv``
    per-trajectory (or per-step) records;
``summary.json``
    verdict, moments and scheme-specific statistics;
``plot_data.csv``
    histogram of the classified samples with fitted and analytic densities.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import repeat
from pathlib import Path

import numpy as np

from .. import cloning, projective, protective, weak
from ..core import GaussianMixture1D, HermitianOperator, Observable, PureState, RandomStream, expectation
from .classify import MIN_SAMPLES, OntologyVerdict, classify_mean_distribution
from .config import ExperimentConfig
from .report import resource_report

BLOCK = 256
HIST_BINS = 60


@dataclass
class RunSummary:
    """Result of :func:`run_experiment`.

    ``config`` echoes the configuration without the execution-only fields
    (``out``, ``workers``). ``samples`` holds the classified single-copy
    averages (or readings) and is not serialized; ``outputs`` maps artifact
    names to the files written.
    """

    scheme: str
    seed: int
    config: dict
    n_records: int
    moments: dict | None
    verdict: OntologyVerdict | None
    extras: dict
    wall_time: float
    outputs: dict = field(default_factory=dict)
    samples: np.ndarray | None = field(default=None, repr=False)

    def to_dict(self, include_runtime: bool = False) -> dict:
        v = self.verdict
        out = {
            "scheme": self.scheme,
            "seed": self.seed,
            "verdict": v.kind.value if v else None,
            "mu_hat": v.mu_hat if v else None,
            "epsilon_hat": v.epsilon_hat if v else None,
            "components": v.components if v else [],
            "figures_of_merit": list(v.figures_of_merit) if v else None,
            "model": v.model if v else None,
            "moments": self.moments,
            "n_records": self.n_records,
        }
        out.update(self.extras)
        out["config"] = self.config
        # wall time varies run to run, so it is recorded only on request
        out["runtime_s"] = self.wall_time if include_runtime else None
        return _jsonable(out)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else None
    if isinstance(obj, (complex, np.complexfloating)):
        return [_jsonable(obj.real), _jsonable(obj.imag)]
    return obj


def _blocks(fn, payload, n: int, workers: int):
    starts = list(range(0, n, BLOCK))
    stops = [min(n, s + BLOCK) for s in starts]
    if workers <= 1 or len(starts) <= 1:
        for s, e in zip(starts, stops):
            yield fn(payload, s, e)
        return
    with ProcessPoolExecutor(max_workers=workers) as pool:
        yield from pool.map(fn, repeat(payload), starts, stops)


class _Records:
    """Buffered CSV writer; rows are formatted with ``repr`` of Python floats."""

    def __init__(self, header):
        self.buf = io.StringIO()
        self.writer = csv.writer(self.buf, lineterminator="\n")
        self.writer.writerow(header)
        self.count = 0

    def add(self, rows):
        for row in rows:
            self.writer.writerow([_cell(x) for x in row])
            self.count += 1

    def text(self) -> str:
        return self.buf.getvalue()


def _cell(x):
    if isinstance(x, (bool, np.bool_)):
        return int(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return x


@dataclass
class _Outcome:
    records: _Records
    samples: np.ndarray | None = None
    eigenvalues: list | None = None
    true_mean: float | None = None
    analytic: GaussianMixture1D | None = None
    extras: dict = field(default_factory=dict)


def _state(cfg: ExperimentConfig) -> PureState:
    return PureState(np.asarray(cfg.amplitudes, dtype=complex))


def _observable(cfg: ExperimentConfig) -> Observable:
    return Observable(np.asarray(cfg.eigenvalues, dtype=float))


# --- block workers (module level so they pickle) ---------------------------


def _strong_block(payload, start, stop):
    state, obs, n, seed = payload
    return projective.run_strong_ensemble(state, obs, n, stop - start, seed, first_id=start)


def _weak_block(payload, start, stop):
    state, obs, wcfg, m, seed, rec_steps, snap_steps = payload
    steps = sorted(set(rec_steps) | set(snap_steps))
    ens = weak.run_weak_ensemble(state, obs, wcfg, m, stop - start, seed, snapshot_steps=steps, first_id=start)
    pos = {s: i for i, s in enumerate(ens.snapshot_steps.tolist())}
    rec_idx = [pos[s] for s in rec_steps]
    amp_sq = np.abs(ens.snapshots[:, rec_idx, :]) ** 2
    outs = ens.outcomes[:, np.asarray(rec_steps) - 1]
    rho_sums = np.stack(
        [weak.ensemble_density_matrix(ens.snapshots[:, pos[s], :]) * (stop - start) for s in snap_steps]
    ) if snap_steps else None
    return ens.means, ens.converged_to, outs, amp_sq, rho_sums


def _protective_block(payload, start, stop):
    state, obs, pcfg, seed = payload
    rows = []
    for i in range(start, stop):
        br = protective.sample_protective_branch(state, obs, pcfg, RandomStream(seed, i))
        rows.append((br.kind.value, br.pointer_reading, state.fidelity(br.post_state)))
    return rows


def _two_qubit_block(payload, start, stop):
    p_protect, reading_protected, p_fail_up = payload[:3]
    seed = payload[3]
    rows = []
    for i in range(start, stop):
        gen = RandomStream(seed, i).generator
        u_branch, u_pointer = gen.random(2)
        if u_branch < p_protect:
            rows.append((1, reading_protected))
        else:
            rows.append((0, 1.0 if u_pointer < p_fail_up else 0.0))
    return rows


def _info_block(payload, start, stop):
    alpha, n_clones, seed = payload
    return cloning.estimate_alpha_experiments(alpha, n_clones, stop - start, seed, first_id=start)


def _coherent_clone_block(payload, start, stop):
    alpha, n_in, m_out, seed = payload
    out = []
    for i in range(start, stop):
        rng = RandomStream(seed, i)
        clone = cloning.sample_coherent_clone(cloning.CoherencyParam(alpha), n_in, m_out, rng)
        x = cloning.sample_coherent_quadratures(clone, "position", rng)
        out.append((clone.value, x))
    return out


def _discrete_block(payload, start, stop):
    probs, seed = payload
    cum = np.cumsum(probs)
    last = int(np.nonzero(probs > 0)[0][-1])
    idx = np.empty(stop - start, dtype=np.int64)
    for r, i in enumerate(range(start, stop)):
        u = RandomStream(seed, i).generator.random()
        idx[r] = min(int(np.searchsorted(cum, u, side="right")), last)
    return idx


def _overlap_block(payload, start, stop):
    seed = payload
    out = []
    for i in range(start, stop):
        u, v = RandomStream(seed, i).generator.random(2)
        out.append(math.sqrt(u) * complex(math.cos(2 * math.pi * v), math.sin(2 * math.pi * v)))
    return out


# --- scheme handlers ---------------------------------------------------------


def _run_strong(cfg, workers):
    state, obs = _state(cfg), _observable(cfg)
    rec = _Records(["trajectory_id", "collapsed_index", "outcome", "y_mean"])
    ys = []
    tid = 0
    for idx in _blocks(_strong_block, (state, obs, cfg.repeats, cfg.seed), cfg.trajectories, workers):
        vals = obs.eigenvalues[idx]
        rec.add((tid + r, int(k), float(v), float(v)) for r, (k, v) in enumerate(zip(idx, vals)))
        tid += idx.size
        ys.append(vals)
    y = np.concatenate(ys)
    idx_all = np.searchsorted(np.sort(obs.eigenvalues), y)
    order = np.argsort(obs.eigenvalues)
    freq = np.bincount(order[idx_all], minlength=obs.dim) / y.size
    dist = projective.strong_mean_distribution(state, obs)
    extras = {
        "first_outcome_frequencies": freq,
        "born_probabilities": state.probabilities,
        "analytic_mean_distribution": {"values": dist.values, "weights": dist.weights},
    }
    return _Outcome(rec, y, list(obs.eigenvalues), expectation(state, obs), None, extras)


def _record_steps(cfg) -> list[int]:
    m = cfg.repeats
    stride = cfg.record_stride or max(1, m // 100)
    steps = list(range(stride, m + 1, stride))
    if not steps or steps[-1] != m:
        steps.append(m)
    return steps


def _run_weak(cfg, workers):
    state, obs = _state(cfg), _observable(cfg)
    wcfg = weak.WeakConfig(float(cfg.delta_p))
    m = cfg.repeats
    rec_steps = _record_steps(cfg)
    snap_steps = sorted(set(cfg.snapshot_steps or []))
    header = ["trajectory_id", "step", "outcome_p"] + [f"amp_sq_{i}" for i in range(obs.dim)]
    rec = _Records(header)
    means, conv = [], []
    rho_acc = np.zeros((len(snap_steps), obs.dim, obs.dim), dtype=complex) if snap_steps else None
    tid = 0
    payload = (state, obs, wcfg, m, cfg.seed, rec_steps, snap_steps)
    for mb, cb, outs, amp_sq, rho_sums in _blocks(_weak_block, payload, cfg.trajectories, workers):
        for r in range(mb.size):
            rec.add(
                [tid + r, s, float(outs[r, j])] + [float(a) for a in amp_sq[r, j]]
                for j, s in enumerate(rec_steps)
            )
        tid += mb.size
        means.append(mb)
        conv.append(cb)
        if rho_sums is not None:
            rho_acc += rho_sums
    y = np.concatenate(means)
    conv = np.concatenate(conv)
    arrivals = np.bincount(conv[conv >= 0], minlength=obs.dim) / conv.size
    extras = {
        "converged_fraction": float(np.mean(conv >= 0)),
        "arrival_fractions": arrivals,
        "born_probabilities": state.probabilities,
        "weak_regime": wcfg.is_weak_for(obs),
    }
    if snap_steps:
        rows = []
        for k, s in enumerate(snap_steps):
            mc = rho_acc[k] / cfg.trajectories
            an = weak.weak_reduced_density_after(state, obs, wcfg, s).entries
            rows.append({
                "m": s,
                "abs_offdiag_mc": float(abs(mc[0, 1])),
                "abs_offdiag_analytic": float(abs(an[0, 1])),
                "max_abs_error": float(np.max(np.abs(mc - an))),
            })
        extras["coherence_decay"] = rows
    spread = math.sqrt(max(0.0, float(np.dot(state.probabilities, (obs.eigenvalues - expectation(state, obs)) ** 2))))
    if spread > 0:
        extras["resources"] = resource_report(wcfg, obs, state, 100)
    analytic = weak.weak_mean_distribution(state, obs, wcfg, m)
    return _Outcome(rec, y, list(obs.eigenvalues), expectation(state, obs), analytic, extras)


def _run_protective_branch(cfg, workers):
    state, obs = _state(cfg), _observable(cfg)
    pcfg = protective.ProtectiveConfig(float(cfg.t_total), tuple(cfg.c_coeffs), float(cfg.r0))
    rec = _Records(["trajectory_id", "branch", "pointer_reading", "fidelity_with_input"])
    readings, kinds = [], []
    tid = 0
    for rows in _blocks(_protective_block, (state, obs, pcfg, cfg.seed), cfg.trajectories, workers):
        rec.add((tid + r, *row) for r, row in enumerate(rows))
        tid += len(rows)
        kinds.extend(r[0] for r in rows)
        readings.extend(r[1] for r in rows)
    freq = np.bincount(np.asarray(kinds), minlength=5)[1:] / len(kinds)
    extras = {
        "branch_frequencies": {k.name: float(freq[k.value - 1]) for k in protective.ProtectiveBranchKind},
        "branch_probabilities": {
            k.name: float(p) for k, p in zip(protective.ProtectiveBranchKind, pcfg.branch_probabilities())
        },
        "ideal_reading": protective.ideal_pointer_shift(state, obs, pcfg.r0),
    }
    ev = list(obs.eigenvalues + pcfg.r0)
    return _Outcome(rec, np.asarray(readings), ev, protective.ideal_pointer_shift(state, obs, pcfg.r0), None, extras)


def _run_two_qubit(cfg, workers):
    a, b = cfg.amplitudes
    gap = protective.DEFAULT_GAP if cfg.gap is None else float(cfg.gap)
    res = protective.evolve_two_qubit_protective(a, b, float(cfg.t_total), cfg.steps, gap=gap, schedule=cfg.schedule)
    nu = np.array([a, b], dtype=complex)
    perp = np.array([-np.conj(b), np.conj(a)])
    phi_nu = res.failed_component(nu)
    phi_perp = res.failed_component(perp)
    theta_nu = protective.pointer_angle_from_detector(np.outer(phi_nu, phi_nu.conj()) / max(np.vdot(phi_nu, phi_nu).real, 1e-300))
    norm_perp = np.vdot(phi_perp, phi_perp).real
    p_fail_up = float(abs(phi_perp[0]) ** 2 / norm_perp) if norm_perp > 0 else 0.0
    reading = theta_nu / math.pi
    rec = _Records(["trajectory_id", "protected", "reading"])
    readings = []
    tid = 0
    for rows in _blocks(_two_qubit_block, (res.p_protect, reading, p_fail_up, cfg.seed), cfg.trajectories, workers):
        rec.add((tid + r, *row) for r, row in enumerate(rows))
        tid += len(rows)
        readings.extend(r[1] for r in rows)
    fb = protective.failed_branch_pointer_state()
    extras = {
        "p_protect": res.p_protect,
        "p_fail": res.p_fail,
        "pointer_angle": res.pointer_angle,
        "ideal_pointer_angle": math.pi * abs(a) ** 2,
        "failed_detector_overlap_with_dn_x": float(abs(np.vdot(fb.vector, phi_perp)) ** 2 / norm_perp) if norm_perp > 0 else None,
        "gap": gap,
        "schedule": cfg.schedule,
    }
    return _Outcome(rec, np.asarray(readings), [0.0, 1.0], float(abs(a) ** 2), None, extras)


def _run_info_clone(cfg, workers):
    alpha = complex(cfg.alpha)
    rec = _Records(["trajectory_id", "alpha_hat_re", "alpha_hat_im"])
    est = []
    tid = 0
    for vals in _blocks(_info_block, (alpha, cfg.n_clones, cfg.seed), cfg.trajectories, workers):
        rec.add((tid + r, float(v.real), float(v.imag)) for r, v in enumerate(vals))
        tid += vals.size
        est.append(vals)
    est = np.concatenate(est)
    extras = {
        "alpha": alpha,
        "clone_parameter": alpha / math.sqrt(cfg.n_clones),
        "alpha_hat_mean": [float(est.real.mean()), float(est.imag.mean())],
        "alpha_hat_std": [float(est.real.std(ddof=1)) if est.size > 1 else None, float(est.imag.std(ddof=1)) if est.size > 1 else None],
        "predicted_std": 1.0 / math.sqrt(2.0),
    }
    analytic = GaussianMixture1D([1.0], [alpha.real], [math.sqrt(0.5)])
    return _Outcome(rec, est.real.copy(), None, alpha.real, analytic, extras)


def _run_optimal_clone(cfg, workers):
    n, m = cfg.n_in, cfg.m_out
    if cfg.clone_kind == "coherent":
        alpha = complex(cfg.alpha)
        rec = _Records(["trajectory_id", "clone_re", "clone_im", "position"])
        xs = []
        tid = 0
        for rows in _blocks(_coherent_clone_block, (alpha, n, m, cfg.seed), cfg.trajectories, workers):
            rec.add((tid + r, float(c.real), float(c.imag), float(x)) for r, (c, x) in enumerate(rows))
            tid += len(rows)
            xs.extend(x for _, x in rows)
        xs = np.asarray(xs)
        mx, mp, vx, vp = cloning.coherent_clone_moments(cloning.CoherencyParam(alpha), n, m)
        extras = {
            "fidelity_bound": cloning.coherent_fidelity_bound(n, m),
            "sigma_sq": cloning.clone_smearing_variance(n, m),
            "analytic_moments": {"mean_x": mx, "mean_p": mp, "var_x": vx, "var_p": vp},
            "empirical_position": {"mean": float(xs.mean()), "var": float(xs.var(ddof=1)) if xs.size > 1 else None},
        }
        y = xs / math.sqrt(2.0)
        analytic = GaussianMixture1D([1.0], [alpha.real], [math.sqrt(vx / 2.0)])
        return _Outcome(rec, y, None, alpha.real, analytic, extras)

    state, obs = _state(cfg), _observable(cfg)
    d = state.dim
    rho = cloning.d_dim_clone_state(state.projector(), n, m, d)
    probs = np.clip(np.real(np.diag(rho.entries)), 0.0, None)
    probs = probs / probs.sum()
    rec = _Records(["trajectory_id", "outcome_index", "outcome"])
    ys = []
    tid = 0
    for idx in _blocks(_discrete_block, (probs, cfg.seed), cfg.trajectories, workers):
        vals = obs.eigenvalues[idx]
        rec.add((tid + r, int(k), float(v)) for r, (k, v) in enumerate(zip(idx, vals)))
        tid += idx.size
        ys.append(vals)
    fid = cloning.qubit_fidelity(n, m) if cfg.clone_kind == "qubit" else cloning.d_dim_fidelity(n, m, d)
    extras = {
        "fidelity": fid,
        "fidelity_from_state": rho.fidelity(state),
        "shrinking_factor": cloning.shrinking_factor(n, m, d),
        "expectation_true": expectation(state, obs),
        "expectation_clone": rho.expectation(obs),
    }
    if cfg.clone_kind == "qubit" and n == 1:
        extras["expectation_factor"] = cloning.qubit_clone_expectation_factor(m)
    return _Outcome(rec, np.concatenate(ys), list(obs.eigenvalues), expectation(state, obs), None, extras)


def _run_linearity(cfg, workers):
    s1 = PureState(np.asarray(cfg.amplitudes, dtype=complex))
    s2 = PureState(np.asarray(cfg.second_amplitudes, dtype=complex))
    if cfg.observable_matrix is not None:
        obs = HermitianOperator(np.asarray(cfg.observable_matrix, dtype=complex))
    else:
        obs = _observable(cfg)
    mismatch = cloning.linearity_probe(s1, s2, tuple(cfg.coeffs), obs)
    rec = _Records(["trajectory_id", "mismatch"])
    rec.add([(0, mismatch)])
    return _Outcome(rec, extras={"mismatch": mismatch, "no_go_certified": mismatch > 1e-12})


def _run_nocloning(cfg, workers):
    if cfg.overlaps is not None:
        overlaps = list(cfg.overlaps)
    else:
        overlaps = []
        for vals in _blocks(_overlap_block, cfg.seed, cfg.trajectories, workers):
            overlaps.extend(vals)
    rec = _Records(["trajectory_id", "overlap_re", "overlap_im", "residual", "consistent"])
    reports = [cloning.nocloning_constraint(c, cfg.n_clones) for c in overlaps]
    rec.add((i, r.overlap.real, r.overlap.imag, r.residual, r.consistent) for i, r in enumerate(reports))
    extras = {
        "n_overlaps": len(reports),
        "n_violations": sum(r.violation for r in reports),
        "n_consistent": sum(r.consistent for r in reports),
    }
    return _Outcome(rec, extras=extras)


HANDLERS = {
    "strong-repeat": _run_strong,
    "weak-repeat": _run_weak,
    "protective-branch": _run_protective_branch,
    "two-qubit-protective": _run_two_qubit,
    "info-clone": _run_info_clone,
    "optimal-clone": _run_optimal_clone,
    "linearity-probe": _run_linearity,
    "nocloning": _run_nocloning,
}


def _plot_data(samples: np.ndarray, verdict: OntologyVerdict | None, analytic) -> str:
    lo, hi = float(samples.min()), float(samples.max())
    if hi - lo < 1e-12:
        lo, hi = lo - 0.5, hi + 0.5
    counts, edges = np.histogram(samples, bins=HIST_BINS, range=(lo, hi))
    centres = 0.5 * (edges[1:] + edges[:-1])
    density = counts / (samples.size * np.diff(edges))
    fitted = None
    if verdict is not None and verdict.components and all(c["std"] > 0 for c in verdict.components):
        fitted = GaussianMixture1D(
            [c["weight"] for c in verdict.components],
            [c["mean"] for c in verdict.components],
            [c["std"] for c in verdict.components],
        )
    rec = _Records(["bin_left", "bin_right", "bin_centre", "count", "density", "fitted_pdf", "analytic_pdf"])
    rec.add(
        (
            edges[i],
            edges[i + 1],
            centres[i],
            int(counts[i]),
            density[i],
            float(fitted(centres[i])) if fitted is not None else "",
            float(analytic(centres[i])) if analytic is not None else "",
        )
        for i in range(centres.size)
    )
    return rec.text()


def run_experiment(config: ExperimentConfig, *, out_dir: str | Path | None = None, workers: int | None = None) -> RunSummary:
    """Run one experiment and classify its single-copy statistics.

    Parameters
    ----------
    config : ExperimentConfig
        Validated configuration.
    out_dir : path, optional
        Where to write ``trajectories.csv``, ``summary.json`` and
        ``plot_data.csv``; defaults to ``config.out``. Nothing is written
        when neither is set.
    workers : int, optional
        Worker processes; defaults to ``config.workers``. The results do not
        depend on it.

    Returns
    -------
    RunSummary
        The verdict is ``None`` for schemes without a sample to classify and
        for runs shorter than the classifier's minimum sample size.
    """
    t0 = time.perf_counter()
    n_workers = workers if workers is not None else config.workers
    outcome = HANDLERS[config.scheme](config, n_workers)

    verdict = None
    moments = None
    extras = dict(outcome.extras)
    if outcome.samples is not None:
        s = outcome.samples
        moments = {"n": int(s.size), "mean": float(s.mean()), "var": float(s.var(ddof=1)) if s.size > 1 else 0.0}
        if s.size >= MIN_SAMPLES:
            verdict = classify_mean_distribution(s, outcome.eigenvalues, outcome.true_mean)
        else:
            extras["verdict_note"] = f"classification needs at least {MIN_SAMPLES} samples"
        if outcome.true_mean is not None:
            extras["true_mean"] = outcome.true_mean
    wall = time.perf_counter() - t0
    summary = RunSummary(
        scheme=config.scheme,
        seed=config.seed,
        config=config.to_dict(execution=False),
        n_records=outcome.records.count,
        moments=moments,
        verdict=verdict,
        extras=extras,
        wall_time=wall,
        samples=outcome.samples,
    )

    target = out_dir if out_dir is not None else config.out
    if target is not None:
        path = Path(target)
        path.mkdir(parents=True, exist_ok=True)
        files = {"trajectories": path / "trajectories.csv", "summary": path / "summary.json"}
        files["trajectories"].write_text(outcome.records.text())
        if outcome.samples is not None and outcome.samples.size:
            files["plot_data"] = path / "plot_data.csv"
            files["plot_data"].write_text(_plot_data(outcome.samples, verdict, outcome.analytic))
        files["summary"].write_text(
            json.dumps(summary.to_dict(include_runtime=config.record_runtime), indent=2) + "\n"
        )
        summary.outputs = {k: str(v) for k, v in files.items()}
    return summary
