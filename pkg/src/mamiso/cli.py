"""Command-line harness.

Subcommands:
  run          one realization of each selected scheme, trajectory on stdout
  sweep        Monte-Carlo over a parameter grid, CSV + manifest outputs
  convergence  per-iteration objective dump for convergence plots
"""

import argparse
import logging
import sys
from pathlib import Path

from . import __version__, kernels
from .harness import (ALGO_ORDER, DEFAULT_SWEEPS, ExperimentConfig, MonteCarloReport,
                      monte_carlo, write_convergence_csv, write_outputs)


def _algo_list(text: str):
    algos = tuple(a.strip() for a in text.split(",") if a.strip())
    bad = [a for a in algos if a not in ALGO_ORDER]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown algorithms {bad}; choose from {ALGO_ORDER}")
    return algos


def _value_list(text: str):
    return [float(v) for v in text.split(",") if v.strip()]


def _add_common(parser):
    parser.add_argument("--config", type=Path, help="JSON config file (ExperimentConfig fields)")
    parser.add_argument("--seed", type=int, help="master seed override")
    parser.add_argument("--realizations", type=int, help="realization count override")
    parser.add_argument("--algos", type=_algo_list,
                        help=f"comma-separated subset of {','.join(ALGO_ORDER)}")
    parser.add_argument("--out", type=Path, help="output directory")
    parser.add_argument("--threads", type=int, default=1, help="worker processes (default 1)")


def build_parser():
    parser = argparse.ArgumentParser(prog="mamiso",
                                     description="Movable-antenna multiuser MISO simulations")
    parser.add_argument("--version", action="version", version=f"mamiso {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="single realization, prints the objective trajectory")
    _add_common(p_run)
    p_run.add_argument("--realization", type=int, default=0,
                       help="realization index within the seeded stream (default 0)")

    p_sweep = sub.add_parser("sweep", help="Monte-Carlo sweep over a parameter grid")
    _add_common(p_sweep)
    p_sweep.add_argument("--var", default="power_dbm", choices=sorted(DEFAULT_SWEEPS),
                         help="swept config field (default power_dbm)")
    p_sweep.add_argument("--values", type=_value_list,
                         help="comma-separated sweep values (default grids: 0,5,10,15 dBm "
                              "for power, 1,2,3,4 for the region size)")

    p_conv = sub.add_parser("convergence", help="emit per-iteration objectives to CSV")
    _add_common(p_conv)
    return parser


def _load_config(args) -> ExperimentConfig:
    config = ExperimentConfig.from_json(args.config) if args.config else ExperimentConfig()
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if getattr(args, "realizations", None) is not None:
        overrides["realizations"] = args.realizations
    if args.algos is not None:
        overrides["algos"] = args.algos
    return config.replace(**overrides) if overrides else config


def _cmd_run(args) -> int:
    config = _load_config(args)
    from .harness import _run_realization

    records = _run_realization(config, args.realization)
    for rec in records:
        print(f"# {rec.algo}: sum_rate={rec.sum_rate:.6f} bits/s/Hz, "
              f"iters={rec.iters}, wall={rec.wall_ms:.1f} ms")
        for i, value in enumerate(rec.trajectory):
            print(f"{rec.algo}\t{i}\t{float(value)!r}")
    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)
        write_convergence_csv(records, args.out / "trajectory.csv")
    return 0


def _cmd_sweep(args) -> int:
    config = _load_config(args)
    report = monte_carlo(config, sweep_var=args.var, sweep_values=args.values,
                         threads=args.threads)
    out_dir = args.out or Path("results")
    paths = write_outputs(report, out_dir)
    print(f"# backend={kernels.backend()} records={len(report.records)} "
          f"excluded={len(report.errors)}")
    for row in report.aggregates:
        print(f"{args.var}={row['sweep_value']:g} {row['algo']}: "
              f"mean={row['mean']:.4f} std={row['std']:.4f} "
              f"p5={row['p5']:.4f} p95={row['p95']:.4f} (n={row['n']})")
    print(f"# wrote {paths['realizations']}, {paths['aggregate']}, "
          f"{paths['timings']}, {paths['manifest']}")
    return 0


def _cmd_convergence(args) -> int:
    config = _load_config(args)
    report: MonteCarloReport = monte_carlo(config, threads=args.threads)
    out_dir = args.out or Path("results")
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "convergence.csv"
    write_convergence_csv(report.records, path)
    for algo in config.algos:
        iters = [r.iters for r in report.records if r.algo == algo]
        print(f"{algo}: median iterations {sorted(iters)[len(iters) // 2]}")
    print(f"# wrote {path}")
    return 0


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    handlers = {"run": _cmd_run, "sweep": _cmd_sweep, "convergence": _cmd_convergence}
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
