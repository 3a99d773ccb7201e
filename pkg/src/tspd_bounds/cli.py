"""Command-line interface.

Subcommands: upper-bound, lower-bound, solve, gen, nn-check, and
experiment {upper-table, empirical-table, lower-table}. Results are printed
as JSON (or written with --out); failures exit nonzero after printing a
machine-readable error object.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

from .experiments import (
    DEFAULT_BETAS,
    ExperimentConfig,
    report_run,
    report_table,
    run_empirical_table,
    run_lower_table,
    run_upper_table,
)
from .geometry import MetricPair, TruckNorm, generate_instance, load_instance, save_instance
from .lowerbound import BETA_PRESETS, NormKind, lb_param, lb_ratio, rho_star, sample_nn_distances
from .ringmodel import solution_to_dict
from .solvers import HeuristicConfig, tspd_exact, tspd_heuristic
from .stripbound import PatternKind, estimate_bound, optimize_then_estimate


def _parse_metric(name: str) -> TruckNorm:
    return TruckNorm.RECTILINEAR if name == "mixed" else TruckNorm.EUCLIDEAN


def _float_list(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(","))


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(","))


def _emit(obj: dict, out: str | None) -> None:
    text = json.dumps(obj, indent=2)
    if out:
        with open(out, "w") as f:
            f.write(text + "\n")
    else:
        print(text)


def _cmd_upper_bound(args) -> None:
    pattern = PatternKind(args.pattern)
    if args.optimize_h:
        est = optimize_then_estimate(pattern, args.alpha, args.samples, args.seed,
                                     args.h_lo, args.h_hi)
    else:
        if args.h is None:
            raise ValueError("pass --h F or --optimize-h")
        est = estimate_bound(pattern, args.alpha, args.h, args.samples, args.seed)
    _emit(est.to_dict(), args.out)


def _cmd_lower_bound(args) -> None:
    if args.preset is not None:
        beta = BETA_PRESETS[args.preset]
    elif args.beta is not None:
        beta = args.beta
    else:
        raise ValueError("pass --beta F or --preset NAME")
    bound = lb_ratio(beta, args.alpha) if args.ratio else lb_param(beta, args.alpha)
    _emit({
        "beta": beta,
        "alpha": args.alpha,
        "rho_star": rho_star(beta, args.alpha),
        "bound": bound,
        "kind": "ratio" if args.ratio else "parametric",
    }, args.out)


def _cmd_nn_check(args) -> None:
    result = sample_nn_distances(NormKind(args.norm), args.intensity, args.trials, args.seed)
    _emit(result.to_dict(), args.out)


def _cmd_gen(args) -> None:
    inst = generate_instance(args.n, args.seed)
    save_instance(inst, args.out)
    print(json.dumps({"written": args.out, "n": inst.n, "seed": inst.seed}))


def _cmd_solve(args) -> None:
    inst = load_instance(args.instance)
    metric = MetricPair(truck_norm=_parse_metric(args.metric), alpha=args.alpha)
    if args.method == "exact":
        report = tspd_exact(inst, metric)
    else:
        cfg = HeuristicConfig(max_ring=args.max_ring)
        report = tspd_heuristic(inst, metric, args.seed, config=cfg)
    payload = solution_to_dict(report.solution, inst, metric)
    payload.update({
        "method": report.method,
        "elapsed_s": report.elapsed,
        "seed": report.seed,
    })
    _emit(payload, args.out)


def _cmd_experiment(args) -> None:
    cfg = ExperimentConfig(
        alphas=args.alphas,
        sizes=args.sizes,
        instances_per_cell=args.instances,
        samples=args.samples,
        seed=args.seed,
        metric=_parse_metric(args.metric),
    )
    t0 = time.perf_counter()
    if args.table == "upper-table":
        result = run_upper_table(cfg)
    elif args.table == "empirical-table":
        result = run_empirical_table(cfg)
    else:
        result = run_lower_table(cfg, betas=args.betas)
    if args.out:
        written = report_table(result, args.out, fmt=args.format)
        print(json.dumps({"written": written, "elapsed_s": time.perf_counter() - t0}))
    else:
        print(json.dumps({"meta": {"seed": result.seed}, "payload": result.payload()}, indent=2))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tspd-bounds",
        description="Bounds on the asymptotic truck-and-drone routing constant.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("upper-bound", help="Monte Carlo strip upper bound")
    p.add_argument("--pattern", required=True,
                   choices=[k.value for k in PatternKind])
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--samples", type=int, default=2_000_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--h", type=float, default=None)
    p.add_argument("--optimize-h", action="store_true")
    p.add_argument("--h-lo", type=float, default=0.5)
    p.add_argument("--h-hi", type=float, default=4.0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_upper_bound)

    p = sub.add_parser("lower-bound", help="closed-form lower bound")
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--preset", choices=sorted(BETA_PRESETS), default=None)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--ratio", action="store_true",
                   help="use the ratio bound beta/(1+alpha) instead")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_lower_bound)

    p = sub.add_parser("nn-check", help="validate nearest-neighbor laws by sampling")
    p.add_argument("--norm", choices=["l1", "l2"], required=True)
    p.add_argument("--intensity", type=float, required=True)
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_nn_check)

    p = sub.add_parser("gen", help="generate a uniform random instance file")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("solve", help="solve a TSPD instance")
    p.add_argument("--instance", required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--metric", choices=["euclidean", "mixed"], default="euclidean")
    p.add_argument("--method", choices=["exact", "heuristic"], default="heuristic")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-ring", type=int, default=8)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("experiment", help="reproduce a results table at desk scale")
    p.add_argument("table", choices=["upper-table", "empirical-table", "lower-table"])
    p.add_argument("--alphas", type=_float_list, default=(1.0, 1.5, 2.0, 2.5, 3.0))
    p.add_argument("--sizes", type=_int_list, default=(50, 200, 500, 1000))
    p.add_argument("--instances", type=int, default=30)
    p.add_argument("--samples", type=int, default=2_000_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--metric", choices=["euclidean", "mixed"], default="euclidean")
    p.add_argument("--betas", type=_float_list, default=DEFAULT_BETAS)
    p.add_argument("--out", default=None, help="base path; writes <base>.json/.csv")
    p.add_argument("--format", choices=["json", "csv", "both"], default="both")
    p.set_defaults(func=_cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except Exception as exc:  # noqa: BLE001 - the CLI boundary reports all failures
        print(json.dumps({"error": {"type": type(exc).__name__, "message": str(exc)}}))
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
