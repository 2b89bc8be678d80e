#!/usr/bin/env python3
"""Timing comparison of the compiled and numpy kernel backends.

Micro-benchmarks the hot kernels at the default problem size
(N = K = L = 4) and then times one full fp-ma realization end to end
under each backend.  Run from the repository root:

    python3 benchmarks/bench_kernels.py
"""

import time

import numpy as np

from mamiso import ExperimentConfig, kernels, sample_scenario
from mamiso.harness import run_fp, stream_seed
from mamiso.positions import _ascent_step


def timeit(fn, *args, repeats=7, inner=200):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        for _ in range(inner):
            fn(*args)
        best = min(best, (time.perf_counter() - t0) / inner)
    return best * 1e6  # microseconds


def build_instance():
    cfg = ExperimentConfig(power_dbm=5.0)
    scen = sample_scenario(cfg, 42)
    gains, rho, offsets = scen.stacked_paths
    rng = np.random.default_rng(0)
    positions = rng.uniform(0, cfg.region_m, (cfg.n_antennas, 2))
    linear = 0.5 * (rng.standard_normal(4) + 1j * rng.standard_normal(4))
    quadratic = rng.uniform(0, 1.0, 4)
    t = positions[1].copy()
    base = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    gram_minus = base.conj().T @ base
    points = rng.uniform(0, cfg.region_m, (64, 2))
    return cfg, scen, dict(gains=gains, rho=rho, offsets=offsets, kwave=scen.kwave,
                           positions=positions, linear=linear, quadratic=quadratic,
                           t=t, gram_minus=gram_minus, points=points,
                           region=cfg.region_m, spacing=cfg.spacing_m)


def micro_cases(d):
    yield "channel_gains (64 pts)", lambda k: k.channel_gains(
        d["points"], d["gains"], d["rho"], d["offsets"], d["kwave"])
    yield "fp_value", lambda k: k.fp_value(
        d["t"], d["linear"], d["quadratic"], d["gains"], d["rho"], d["offsets"], d["kwave"])
    yield "fp_grad", lambda k: k.fp_grad(
        d["t"], d["linear"], d["quadratic"], d["gains"], d["rho"], d["offsets"], d["kwave"])

    grad = kernels.fp_grad(d["t"], d["linear"], d["quadratic"],
                           d["gains"], d["rho"], d["offsets"], d["kwave"])
    step = _ascent_step(grad, 10 * 2 * np.pi / d["kwave"])
    yield "fp_line_search", lambda k: k.fp_line_search(
        d["t"], step, d["linear"], d["quadratic"], d["gains"], d["rho"], d["offsets"],
        d["kwave"], d["positions"], 1, d["region"], d["spacing"], 10.0, 1e-3)
    yield "zf_value", lambda k: k.zf_value(
        d["t"], d["gram_minus"], d["gains"], d["rho"], d["offsets"], d["kwave"])
    yield "zf_line_search", lambda k: k.zf_line_search(
        d["t"], step, d["gram_minus"], d["gains"], d["rho"], d["offsets"],
        d["kwave"], d["positions"], 1, d["region"], d["spacing"], 10.0, 1e-3)


def main():
    backends = kernels.available_backends()
    if "cython" not in backends:
        print("compiled backend not built; micro-benchmarks run numpy only")
    cfg, scen, d = build_instance()

    import mamiso._kernels_np as np_impl
    impls = {"numpy": np_impl}
    if "cython" in backends:
        import mamiso._kernels_cy as cy_impl
        impls["cython"] = cy_impl

    print(f"{'kernel':<24}" + "".join(f"{name + ' (us)':>14}" for name in impls)
          + ("{:>10}".format("speedup") if len(impls) == 2 else ""))
    for label, call in micro_cases(d):
        times = {name: timeit(call, impl) for name, impl in impls.items()}
        row = f"{label:<24}" + "".join(f"{times[name]:14.2f}" for name in impls)
        if len(impls) == 2:
            row += f"{times['numpy'] / times['cython']:10.1f}x"
        print(row)

    print()
    active = kernels.backend()
    for name in impls:
        kernels.use(name)
        t0 = time.perf_counter()
        rec = run_fp(scen, cfg, init_seed=stream_seed(cfg.seed, 0, 1))
        elapsed = time.perf_counter() - t0
        print(f"end-to-end fp-ma realization [{name}]: {elapsed * 1e3:8.1f} ms "
              f"({rec.iters} iterations, rate {rec.sum_rate:.3f})")
    kernels.use(active)


if __name__ == "__main__":
    main()
