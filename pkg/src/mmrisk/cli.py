"""Command line for the experiment laboratory.

Subcommands: run (execute a configured experiment), fit-rate (log-log rate
from an emitted CSV), verify (named acceptance/property suite), schedule
(print a minibatch schedule), divergence (exact discrete divergences).
Exit codes: 0 pass, 1 acceptance failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

from . import bounds, harness, optimizer, problems


def _cmd_run(args) -> int:
    cfg = harness.load_config(args.config)
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    if args.out is not None:
        cfg = dataclasses.replace(cfg, out_dir=args.out)
    result = harness.run_scenario(cfg)
    print(json.dumps(harness.result_summary(result), indent=2))
    return 0


def _cmd_fit_rate(args) -> int:
    slope, intercept, r2 = harness.fit_rate_from_csv(args.input)
    print(json.dumps({"slope": slope, "intercept": intercept, "r2": r2}, indent=2))
    return 0


def _cmd_verify(args) -> int:
    try:
        report = harness.verify_suite(args.suite, args.seed)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(json.dumps(report, indent=2))
    return 0 if report["passed"] else 1


def _cmd_schedule(args) -> int:
    sched = optimizer.batch_schedule(args.n, args.kappa)
    print(
        json.dumps(
            {
                "n": args.n,
                "kappa": args.kappa,
                "batches": sched.tolist(),
                "total": int(sched.sum()),
            }
        )
    )
    return 0


def _cmd_divergence(args) -> int:
    P = problems.load_distribution(args.p)
    Q = problems.load_distribution(args.q)
    if not isinstance(P, problems.DiscreteDistribution) or not isinstance(
        Q, problems.DiscreteDistribution
    ):
        print("error: divergences need discrete distributions", file=sys.stderr)
        return 2
    d = bounds.divergences(P, Q)
    print(json.dumps({"tv": d.tv, "kl": d.kl, "lecam": d.lecam}))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mmrisk", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a configured experiment")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--seed", type=int, default=None, help="override the config seed")
    p_run.add_argument("--out", default=None, help="directory for results.csv/summary.json")
    p_run.set_defaults(fn=_cmd_run)

    p_fit = sub.add_parser("fit-rate", help="fit the log-log rate of an emitted CSV")
    p_fit.add_argument("--input", required=True)
    p_fit.set_defaults(fn=_cmd_fit_rate)

    p_ver = sub.add_parser("verify", help="run a named verification suite")
    p_ver.add_argument("--suite", required=True)
    p_ver.add_argument("--seed", type=int, default=0)
    p_ver.set_defaults(fn=_cmd_verify)

    p_sch = sub.add_parser("schedule", help="print the minibatch schedule for (n, kappa)")
    p_sch.add_argument("--n", type=int, required=True)
    p_sch.add_argument("--kappa", type=float, required=True)
    p_sch.set_defaults(fn=_cmd_schedule)

    p_div = sub.add_parser("divergence", help="exact divergences of two discrete laws")
    p_div.add_argument("--p", required=True)
    p_div.add_argument("--q", required=True)
    p_div.set_defaults(fn=_cmd_divergence)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (harness.ConfigError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
