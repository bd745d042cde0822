"""Command-line interface.

Subcommands: plan, region, run, bench, selftest. Exit codes: 0 on success,
2 when a configuration or bound check rejects the request, 3 on a runtime
protocol failure.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

from .config import parse_config
from .errors import ConfigRejection, ProtocolFailure
from .harness import PHASE_LABELS, PHASES, run_protocol, selftest
from .planner import grid_to_csv, interval_approx_check, plan, region_grid


def _load_config(path: str):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigRejection(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def _parse_range(spec: str) -> range:
    try:
        lo, hi = spec.split(":")
        return range(int(lo), int(hi) + 1)
    except ValueError as exc:
        raise ConfigRejection(
            f"range must look like LO:HI, got {spec!r}") from exc


def cmd_plan(args) -> int:
    cfg = _load_config(args.config)
    report = plan(cfg.plan_inputs, cfg.scheme,
                  enforce_security=cfg.enforce_security,
                  security_table=cfg.security_table)
    text = report.to_text()
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_region(args) -> int:
    cfg = _load_config(args.config)
    inputs = cfg.plan_inputs
    if args.lam is not None:
        from dataclasses import replace

        inputs = replace(inputs, lam=args.lam)
    grid = region_grid(inputs, _parse_range(args.t_bits),
                       _parse_range(args.eps_bits))
    if args.output:
        with open(args.output, "w", newline="") as fh:
            grid_to_csv(grid, fh)
    else:
        grid_to_csv(grid, sys.stdout)
    if args.intervals:
        rep = interval_approx_check(inputs, grid)
        sys.stderr.write(
            f"piecewise check: max deviation outside +-"
            f"{rep.window_halfwidth_bits:.0f}-bit window = "
            f"{rep.max_deviation_outside:.3f} bits, crossover at "
            f"log2 t ~ {rep.crossover_bits:.1f}\n")
    return 0


def cmd_run(args) -> int:
    cfg = _load_config(args.config)
    if args.rounds is not None:
        from dataclasses import replace

        cfg = replace(cfg, rounds=args.rounds)
    transcript = run_protocol(cfg)
    sys.stdout.write(transcript.timings_text())
    sys.stdout.write(f"max_error = {float(transcript.max_error):.6e}\n")
    if args.output:
        outdir = Path(args.output)
        outdir.mkdir(parents=True, exist_ok=True)
        (outdir / "transcript.txt").write_text(transcript.to_text())
        (outdir / "timings.txt").write_text(transcript.timings_text())
        import numpy as np

        np.save(outdir / "aggregate.npy",
                np.array([float(v) for v in transcript.aggregate]))
    return 0


def cmd_bench(args) -> int:
    cfg = _load_config(args.config)
    parties = [int(x) for x in args.parties.split(",")]
    rows = []
    from dataclasses import replace

    for count in parties:
        run_cfg = replace(
            cfg, plan_inputs=replace(cfg.plan_inputs, parties=count))
        best = None
        for _ in range(args.repeats):
            transcript = run_protocol(run_cfg)
            timings = transcript.timings
            if best is None or timings["total"] < best["total"]:
                best = timings
        rows.append([count] + [f"{best[k]:.6f}" for k in PHASES])
        sys.stderr.write(f"parties={count}: total {best['total']:.3f} s\n")
    header = ["parties"] + [PHASE_LABELS[k] for k in PHASES]
    fh = open(args.output, "w", newline="") if args.output else sys.stdout
    try:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(header)
        out.writerows(rows)
    finally:
        if args.output:
            fh.close()
    return 0


def cmd_selftest(_args) -> int:
    report = selftest()
    sys.stdout.write(report.to_text())
    return 0 if report.ok else 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="thagg",
        description="threshold additive HE aggregation toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="evaluate bounds and pick a modulus")
    p.add_argument("-c", "--config", required=True)
    p.add_argument("-o", "--output")
    p.set_defaults(fn=cmd_plan)

    p = sub.add_parser("region", help="scheme-comparison grid as CSV")
    p.add_argument("-c", "--config", required=True)
    p.add_argument("--t-bits", default="8:120")
    p.add_argument("--eps-bits", default="8:120")
    p.add_argument("--lam", type=int, default=None,
                   help="override the smudging parameter")
    p.add_argument("--intervals", action="store_true",
                   help="report the piecewise-linear approximation quality")
    p.add_argument("-o", "--output")
    p.set_defaults(fn=cmd_region)

    p = sub.add_parser("run", help="run the aggregation protocol once")
    p.add_argument("-c", "--config", required=True)
    p.add_argument("-o", "--output", help="directory for transcript artifacts")
    p.add_argument("--rounds", type=int, default=None)
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("bench", help="timing sweep over party counts")
    p.add_argument("-c", "--config", required=True)
    p.add_argument("--parties", default="2,4,8,16")
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("-o", "--output")
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("selftest", help="run the built-in property suite")
    p.set_defaults(fn=cmd_selftest)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigRejection as exc:
        sys.stderr.write(f"rejected: {exc}\n")
        return 2
    except ProtocolFailure as exc:
        sys.stderr.write(f"protocol failure: {exc}\n")
        return 3


if __name__ == "__main__":
    sys.exit(main())
