"""Command-line harness.

Subcommands:
  run <config>      Monte Carlo coverage experiment from a JSON/TOML config.
  bounds            Print the closed-form bound evaluators for given scalars.
  compare <config>  Paired truncated-vs-untruncated comparison.

Exit code 0 iff every asserted criterion passed.
"""

import argparse
import sys

from . import bounds as bnd
from . import harness
from ._kernels import BACKEND
from .solver import stepsize_constant
from .truncation import threshold_tau, threshold_universal


def _add_common(p):
    p.add_argument("--seed", type=int, default=None, help="override master seed")
    p.add_argument("--reps", type=int, default=None, help="override replication count")
    p.add_argument("--out-dir", default=None, help="output directory")
    p.add_argument("--threads", type=int, default=1, help="parallel workers")


def build_parser():
    p = argparse.ArgumentParser(prog="rsmd",
                                description="Robust stochastic mirror descent harness")
    sub = p.add_subparsers(dest="command", required=True)

    pr = sub.add_parser("run", help="run a Monte Carlo experiment")
    pr.add_argument("config", help="JSON or TOML experiment config")
    _add_common(pr)

    pb = sub.add_parser("bounds", help="print bound evaluator outputs")
    pb.add_argument("--L", type=float, required=True)
    pb.add_argument("--R", type=float, required=True)
    pb.add_argument("--Theta", type=float, required=True)
    pb.add_argument("--sigma", type=float, required=True)
    pb.add_argument("--N", type=int, required=True)
    pb.add_argument("--tau", type=float, default=2.0)
    pb.add_argument("--C", type=float, default=bnd.THEOREM2_DEFAULT_C,
                    help="constant for the universal-threshold bound")

    pc = sub.add_parser("compare", help="paired method comparison")
    pc.add_argument("config", help="JSON or TOML experiment config")
    _add_common(pc)
    return p


def cmd_run(args):
    cfg = harness.load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.reps is not None:
        cfg.reps = args.reps
    report, coverage = harness.monte_carlo(cfg, out_dir=args.out_dir,
                                           threads=args.threads)
    print(f"config {report['config_hash']}  backend={BACKEND}  "
          f"reps={cfg.reps}  method={cfg.method}")
    for row in coverage.rows:
        status = "pass" if row.passed else "FAIL"
        print(f"  [{status}] {row.bound:24s} tau={row.tau:<6g} "
              f"freq={row.frequency:.4f} budget={row.budget:.4f}"
              f"+{row.slack:.2f} wilson=({row.wilson_low:.4f},{row.wilson_high:.4f})")
    q = report["gap_quantiles"]
    print(f"  gaps: q50={q['q50']:.4g} q90={q['q90']:.4g} "
          f"q99={q['q99']:.4g} mean={q['mean']:.4g}")
    if cfg.assert_coverage and not coverage.all_passed():
        return 1
    return 0


def cmd_bounds(args):
    beta = stepsize_constant(args.L, args.sigma, args.N, args.R, args.Theta)
    M = args.L * args.R
    print(f"corollary1        = {bnd.bound_corollary1(args.L, args.R, args.Theta, args.sigma, args.N)!r}")
    print(f"theorem1          = {bnd.bound_theorem1(args.L, args.R, args.Theta, args.sigma, args.N, args.tau)!r}")
    print(f"theorem2          = {bnd.bound_theorem2(args.L, args.R, args.Theta, args.sigma, args.N, args.tau, C=args.C)!r}")
    print(f"beta_bar          = {beta!r}")
    print(f"lambda_tau        = {threshold_tau(args.sigma, args.N, args.tau, M)!r}")
    print(f"lambda_universal  = {threshold_universal(args.sigma, args.N, M)!r}")
    return 0


def cmd_compare(args):
    cfg = harness.load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.reps is not None:
        cfg.reps = args.reps
    result = harness.compare_methods(cfg, out_dir=args.out_dir,
                                     threads=args.threads)
    print(f"config {result['config_hash']}  backend={BACKEND}")
    for row in result["quantiles"]:
        print(f"  {row['method']:16s} q50={row['q50']:.4g} q90={row['q90']:.4g} "
              f"q99={row['q99']:.4g} mean={row['mean']:.4g}")
    print(f"  99%-quantile ordered (truncated <= untruncated): "
          f"{result['robust_99_ordered']}")
    return 0 if result["robust_99_ordered"] else 1


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "run":
        code = cmd_run(args)
    elif args.command == "bounds":
        code = cmd_bounds(args)
    else:
        code = cmd_compare(args)
    sys.exit(code)


if __name__ == "__main__":
    main()
