"""Compare the compiled and pure-numpy kernels on representative workloads.

Run with ``python benchmarks/bench_kernels.py``. Each kernel is timed on
identical inputs under both backends, and the largest deviation between the
two outputs is reported alongside the timings.
"""

import argparse
import math
import time

import numpy as np

from qmeter._kernels import available_backends


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def weak_walk_case(n=256, m=5000, d=2, delta_p=10.0, seed=0):
    rng = np.random.default_rng(seed)
    u = rng.random((n, m))
    z = rng.standard_normal((n, m))
    ev = np.linspace(1.0, -1.0, d)
    lw0 = np.log(np.full(d, 1.0 / d))
    steps = np.array([10, 100, 1000], dtype=np.int64)

    def run(mod):
        logw = np.tile(lw0, (n, 1))
        out = np.empty((n, m))
        snaps = np.empty((n, steps.size, d))
        mod.weak_walk(logw, ev, delta_p, u, z, out, steps, snaps)
        return out

    return run


def propagate_case(t_total=1000.0, gap=math.pi):
    from qmeter.protective import P_Z_PLUS, coupling_schedule, default_steps

    nu = np.array([1.0, 1.0], dtype=complex) / math.sqrt(2.0)
    perp = np.array([-nu[1].conj(), nu[0].conj()])
    h0 = gap * np.outer(perp, perp.conj())
    v = -math.pi * P_Z_PLUS
    steps = default_steps(t_total, gap)
    g = coupling_schedule(t_total, steps)
    dt = t_total / steps

    def run(mod):
        return mod.propagate_two_level(h0, v, g, dt, nu)

    return run


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args(argv)

    backends = available_backends()
    if "cython" not in backends:
        print("compiled backend not built; only the numpy fallback is available")
    cases = {
        "weak_walk (256 x 5000 steps)": weak_walk_case(),
        "propagate_two_level (T = 1000)": propagate_case(),
    }
    print(f"{'kernel':34s} {'backend':8s} {'seconds':>10s} {'speed-up':>9s} {'max |diff|':>11s}")
    for name, run in cases.items():
        base_t, base_out = best_of(lambda: run(backends["python"]), args.repeat)
        print(f"{name:34s} {'python':8s} {base_t:10.4f} {1.0:9.1f} {'':>11s}")
        if "cython" in backends:
            t, out = best_of(lambda: run(backends["cython"]), args.repeat)
            diff = float(np.max(np.abs(np.asarray(out) - np.asarray(base_out))))
            print(f"{name:34s} {'cython':8s} {t:10.4f} {base_t / t:9.1f} {diff:11.2e}")


if __name__ == "__main__":
    main()
