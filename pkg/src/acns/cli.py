"""Command line entry point: ``acns {simulate,sweep,norms,suitability,compare}``.

Every sub-command reads ``--config FILE`` and accepts overrides for the
common fields.  The exit status is 0 when every enabled check passes, 1 when
some check fails and 2 for configuration errors.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .errors import SchemaError
from .harness import emit_report, parse_config, run_sweep, with_overrides

# monitors enabled by each sub-command (sweep uses the config's own list)
SUBSETS = {
    "simulate": ("energy",),
    "norms": ("lemma31", "velocity", "pressure", "nonlinear", "forcing", "modal"),
    "suitability": ("suitability",),
    "compare": ("convergence",),
}


def build_parser():
    p = argparse.ArgumentParser(prog="acns", description="Artificial compressibility sweeps and checks.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    helps = {
        "simulate": "run the AC solver for each eps and check the energy law",
        "sweep": "full sweep: every monitor enabled in the config",
        "norms": "uniform-bound monitors only",
        "suitability": "local energy inequality and vanishing-term checks",
        "compare": "convergence metrics against the incompressible reference",
    }
    for name, text in helps.items():
        s = sub.add_parser(name, help=text)
        s.add_argument("--config", required=True, help="JSON configuration file")
        s.add_argument("--n", type=int)
        s.add_argument("--eps", type=float, nargs="+", help="override eps_list")
        s.add_argument("--T", type=float)
        s.add_argument("--dt", type=float)
        s.add_argument("--dt-rec", type=float, dest="dt_rec")
        s.add_argument("--nu", type=float)
        s.add_argument("--init", choices=["taylor-green", "abc", "random", "zero"])
        s.add_argument("--seed", type=int)
        s.add_argument("--output", "-o")
        s.add_argument("--workers", type=int)
        s.add_argument("--no-figures", action="store_true")
        if name == "simulate":
            s.add_argument("--save", action="store_true", help="write trajectories to the output dir")
    return p


def config_from_args(args):
    cfg = parse_config(args.config)
    over = dict(n=args.n, T=args.T, dt=args.dt, dt_rec=args.dt_rec, nu=args.nu,
                output=args.output, workers=args.workers)
    if args.eps:
        over["eps_list"] = list(args.eps)
    if args.init or args.seed is not None:
        init = dict(cfg.init.__dict__)
        if args.init:
            init["type"] = args.init
        if args.seed is not None:
            init["seed"] = args.seed
        over["init"] = init
    if args.command in SUBSETS:
        over["monitors"] = list(SUBSETS[args.command])
    if getattr(args, "save", False):
        over["save_trajectories"] = True
    return with_overrides(cfg, **over)


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = config_from_args(args)
    except SchemaError as e:
        print(f"config error at {e.path}: {e.message}", file=sys.stderr)
        return 2
    report = run_sweep(cfg)
    emit_report(report, cfg.output, figures=not args.no_figures)
    failed = [k for k, v in report.checks.items() if not v]
    for r in report.results:
        status = "ok" if r.ok else f"FAILED ({r.error})"
        print(f"eps={r.eps:g}: {status}")
    print(f"{len(report.checks) - len(failed)}/{len(report.checks)} checks passed; report in {cfg.output}")
    for k in failed:
        print(f"  failed: {k}")
    return 0 if not failed else 1


if __name__ == "__main__":
    sys.exit(main())
