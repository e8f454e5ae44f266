"""Benchmark the compiled solver core against the pure numpy fallback.

Usage: python benchmarks/bench_backends.py [--reps 20]

Times the raw penalized eigen-step at several problem sizes and a full
tuning run on a synthetic study dataset, then reports the speedup and a
cross-backend agreement check.
"""

import argparse
import time

import numpy as np

from cise import backend
from cise.kernels import build_kernel
from cise.metrics import subspace_distance
from cise.simlab import StudyConfig, generate_study
from cise.solver import tune


def time_step(impl, p, d, iters):
    rng = np.random.default_rng(12345)
    a = rng.standard_normal((p, p))
    g = np.ascontiguousarray(0.5 * (a + a.T))
    b = rng.standard_normal((p, p))
    w = np.ascontiguousarray(b @ b.T + p * np.eye(p))
    h = np.abs(rng.standard_normal(p))
    gamma = None
    t0 = time.perf_counter()
    for _ in range(iters):
        gamma, v, rn, lam, dist = impl.penalized_step(g, w, h, d, gamma)
    return (time.perf_counter() - t0) / iters


def time_tune(impl, reps):
    import cise.backend as backend_mod

    saved = backend_mod.penalized_step
    backend_mod.penalized_step = impl.penalized_step
    try:
        total = 0.0
        last = None
        for rep in range(reps):
            cfg = StudyConfig(study=2, n=120, seed=99, method="sir")
            data, _, _ = generate_study(cfg, rep)
            kp = build_kernel(data, "sir", h=cfg.h)
            t0 = time.perf_counter()
            _, est = tune(kp, 1, data.n)
            total += time.perf_counter() - t0
            last = est
        return total / reps, last
    finally:
        backend_mod.penalized_step = saved


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--reps", type=int, default=20,
                    help="tuning runs per backend")
    args = ap.parse_args()

    pure = backend.get_backend("pure")
    try:
        comp = backend.get_backend("compiled")
    except ImportError:
        print("compiled backend not built; run pip install -e . first")
        return

    print(f"{'step (p, d)':<16} {'pure':>12} {'compiled':>12} {'speedup':>9}")
    for p, d in [(6, 1), (13, 2), (24, 1), (24, 2), (48, 3)]:
        iters = 3000 if p <= 24 else 800
        tp = time_step(pure, p, d, iters)
        tc = time_step(comp, p, d, iters)
        print(f"({p:>3}, {d})        {tp * 1e6:>10.1f}us {tc * 1e6:>10.1f}us "
              f"{tp / tc:>8.2f}x")

    tp, ep = time_tune(pure, args.reps)
    tc, ec = time_tune(comp, args.reps)
    print(f"\n{'full tuning run':<16} {tp * 1e3:>10.1f}ms {tc * 1e3:>10.1f}ms "
          f"{tp / tc:>8.2f}x")
    agree = subspace_distance(ep.basis, ec.basis)
    print(f"agreement: active sets match = {ep.active.tolist() == ec.active.tolist()}, "
          f"subspace distance = {agree:.2e}")


if __name__ == "__main__":
    main()
