"""Command-line interface.

Subcommands: estimate, oracle, sweep, rate-fit, approx-check, mine.
Machine output (JSON) goes to stdout; the fully resolved configuration and
diagnostics go to stderr. Exit codes: 0 success, 2 usage or parse error,
1 runtime error.
"""
from __future__ import annotations

import argparse
import json
import math
import sys

from .divergences import DivergenceKind
from .distributions import mine_pair, parse_distribution, sample
from .errors import DivestError, SpecParseError
from .estimator import TrainOptions, estimate
from .experiments import (SweepConfig, approx_check, fit_rate, read_results,
                          run_sweep, write_results)
from .netclass import ScheduleRequest
from .oracle import oracle_value

USAGE_ERROR, RUNTIME_ERROR = 2, 1


def _log_config(args: argparse.Namespace) -> None:
    resolved = {k: v for k, v in vars(args).items() if k != "func"}
    print(f"config: {json.dumps(resolved, default=str, sort_keys=True)}",
          file=sys.stderr)


def _dist(text: str):
    return parse_distribution(text)


def _schedule_request(kind: DivergenceKind, args,
                      d: int, n: int) -> ScheduleRequest:
    if args.schedule == "consistency":
        # width grows like (1 - slack)/4 * log n
        k = max(2, int((1.0 - args.slack) / 4.0 * math.log(n)))
        regime, m = "unknown_m", None
    else:
        k = args.k
        regime = "known_m" if args.schedule == "known-m" else "unknown_m"
        m = args.m
    support = "ball_auto" if args.support == "ball-auto" else args.support
    return ScheduleRequest(kind=kind, k=k, d=d, regime=regime, M=m,
                           support=support,
                           smoothness=args.smoothness, c0=args.c0,
                           c1=args.c1)


def _train_options(args) -> TrainOptions:
    return TrainOptions(steps=args.steps, step_size=args.lr,
                        batch=args.batch, restarts=args.restarts,
                        seed=args.seed, record_trace=args.trace)


def _cmd_estimate(args) -> int:
    kind = DivergenceKind.from_string(args.divergence)
    if args.dv:
        if kind not in (DivergenceKind.KL, DivergenceKind.KL_DV):
            raise DivestError("--dv applies to the KL divergence only")
        kind = DivergenceKind.KL_DV
    p = _dist(args.dist_p)
    q = _dist(args.dist_q)
    from .distributions import derive_seed
    X = sample(p, args.n, derive_seed(args.seed, "x"))
    Y = sample(q, args.n_q or args.n, derive_seed(args.seed, "y"))
    req = _schedule_request(kind, args, p.d, args.n)
    res = estimate(kind, req, X, Y, _train_options(args))
    out = {"kind": kind.value, **res.to_dict(include_trace=args.trace)}
    _emit(out, args.out)
    return 0


def _cmd_oracle(args) -> int:
    kind = DivergenceKind.from_string(args.divergence)
    p = _dist(args.dist_p)
    q = _dist(args.dist_q)
    method = args.method.replace("-", "_")
    res = oracle_value(kind, p, q, method=method, n=args.n, seed=args.seed)
    _emit(res.to_dict(kind), args.out)
    return 0


def _cmd_sweep(args) -> int:
    with open(args.config) as fh:
        cfg = SweepConfig.from_json(fh.read())
    records = run_sweep(cfg)
    fmt = "json" if args.out.endswith(".json") else "csv"
    write_results(records, args.out, fmt=fmt)
    print(f"wrote {len(records)} records to {args.out}", file=sys.stderr)
    return 0


def _cmd_rate_fit(args) -> int:
    records = read_results(getattr(args, "in"))
    fit = fit_rate(records, axis=args.axis)
    _emit(fit.to_dict(), args.out)
    return 0


def _cmd_approx_check(args) -> int:
    p = _dist(args.dist_p)
    q = _dist(args.dist_q)
    k_grid = [int(v) for v in args.k_grid.split(",")]
    rows = approx_check(p, q, k_grid, n_seeds=args.seeds, steps=args.steps,
                        step_size=args.lr, M=args.m or 5.0,
                        root_seed=args.seed)
    out = [{"k": r.k, "sup_error": r.sup_error, "l2_error": r.l2_error}
           for r in rows]
    _emit(out, args.out)
    return 0


def _cmd_mine(args) -> int:
    joint, product = mine_pair(args.rho)
    from .distributions import derive_seed
    X = sample(joint, args.n, derive_seed(args.seed, "x"))
    Y = sample(product, args.n, derive_seed(args.seed, "y"))
    req = _schedule_request(DivergenceKind.KL_DV, args, 2, args.n)
    res = estimate(DivergenceKind.KL_DV, req, X, Y, _train_options(args))
    reference = -0.5 * math.log(1.0 - args.rho ** 2)
    out = {
        "rho": args.rho,
        "estimate": res.value,
        "per_restart": res.per_restart,
        # derived cross-check, not estimator output
        "reference_mi": reference,
    }
    _emit(out, args.out)
    return 0


def _emit(obj, mode: str) -> None:
    if mode == "text":
        if isinstance(obj, dict):
            for k, v in obj.items():
                print(f"{k}: {v}")
        else:
            print(obj)
    else:
        print(json.dumps(obj, indent=1, sort_keys=True))


def _add_common_estimator_flags(sp) -> None:
    sp.add_argument("--k", type=int, default=64)
    sp.add_argument("--schedule", choices=["known-m", "unknown-m",
                                           "consistency"],
                    default="unknown-m")
    sp.add_argument("--m", type=float, default=None,
                    help="M for the known-m schedule")
    sp.add_argument("--slack", type=float, default=0.5,
                    help="consistency-schedule slack (width ~ (1-slack)/4 log n)")
    sp.add_argument("--support", choices=["compact", "ball-auto"],
                    default="compact")
    sp.add_argument("--smoothness", type=float, default=1.0)
    sp.add_argument("--c0", type=float, default=1.0)
    sp.add_argument("--c1", type=float, default=1.0)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--restarts", type=int, default=5)
    sp.add_argument("--steps", type=int, default=2000)
    sp.add_argument("--lr", type=float, default=0.5)
    sp.add_argument("--batch", type=int, default=None)
    sp.add_argument("--trace", action="store_true")
    sp.add_argument("--out", choices=["json", "text"], default="json")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="divest")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("estimate", help="neural divergence estimate")
    sp.add_argument("--divergence", required=True)
    sp.add_argument("--dist-p", required=True)
    sp.add_argument("--dist-q", required=True)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--n-q", type=int, default=None,
                    help="sample count from q when unequal to --n")
    sp.add_argument("--dv", action="store_true",
                    help="use the Donsker-Varadhan objective (KL only)")
    _add_common_estimator_flags(sp)
    sp.set_defaults(func=_cmd_estimate)

    sp = sub.add_parser("oracle", help="ground-truth divergence value")
    sp.add_argument("--divergence", required=True)
    sp.add_argument("--dist-p", required=True)
    sp.add_argument("--dist-q", required=True)
    sp.add_argument("--method", choices=["auto", "closed-form", "quadrature",
                                         "mc-plugin"], default="auto")
    sp.add_argument("--n", type=int, default=100_000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", choices=["json", "text"], default="json")
    sp.set_defaults(func=_cmd_oracle)

    sp = sub.add_parser("sweep", help="run a benchmark sweep")
    sp.add_argument("--config", required=True)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=_cmd_sweep)

    sp = sub.add_parser("rate-fit", help="log-log slope of sweep errors")
    sp.add_argument("--in", required=True)
    sp.add_argument("--axis", choices=["n", "k"], default="n")
    sp.add_argument("--out", choices=["json", "text"], default="json")
    sp.set_defaults(func=_cmd_rate_fit)

    sp = sub.add_parser("approx-check",
                        help="supervised fit of the log-ratio potential")
    sp.add_argument("--dist-p", required=True)
    sp.add_argument("--dist-q", required=True)
    sp.add_argument("--k-grid", default="8,16,32,64,128,256")
    sp.add_argument("--seeds", type=int, default=5)
    sp.add_argument("--steps", type=int, default=200)
    sp.add_argument("--lr", type=float, default=0.05)
    sp.add_argument("--m", type=float, default=10.0)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", choices=["json", "text"], default="json")
    sp.set_defaults(func=_cmd_approx_check)

    sp = sub.add_parser("mine", help="mutual information via DV estimator")
    sp.add_argument("--rho", type=float, required=True)
    sp.add_argument("--n", type=int, required=True)
    _add_common_estimator_flags(sp)
    sp.set_defaults(func=_cmd_mine)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return USAGE_ERROR if exc.code not in (0, None) else 0
    _log_config(args)
    try:
        return args.func(args)
    except SpecParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except DivestError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return RUNTIME_ERROR
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return RUNTIME_ERROR


if __name__ == "__main__":
    sys.exit(main())
