"""Command line entry point: ``run``, ``sweep``, ``report`` and ``check``."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .acceptance import CRITERIA, criterion_line, run_criterion
from .config import ExperimentConfig
from .records import load_records, report
from .runner import run, sweep


def _parse_value(s: str):
    try:
        return json.loads(s)
    except json.JSONDecodeError:
        return s


def _print_record(rec):
    c = rec.counts()
    status = "PASS" if rec.passed else "FAIL"
    print(f"{rec.run_id}: {status} ({c['pass']} pass, {c['fail']} fail, {c['skipped']} skipped, {rec.wall_clock:.1f} s)")
    for v in rec.verdicts:
        if v.status != "pass":
            print(f"  {v.status}: {v.name} value={v.value} threshold={v.threshold} margin={v.margin} {v.note}")
    if rec.error:
        print("  error: " + rec.error.splitlines()[0])


def cmd_run(args) -> int:
    cfg = ExperimentConfig.load(args.config)
    if args.output_dir:
        cfg.output_dir = args.output_dir
    rec = run(cfg)
    _print_record(rec)
    return 0 if rec.passed else 1


def cmd_sweep(args) -> int:
    cfg = ExperimentConfig.load(args.config)
    if args.output_dir:
        cfg.output_dir = args.output_dir
    values = [_parse_value(s.strip()) for s in args.values.split(",") if s.strip()]
    recs = sweep(cfg, args.axis, values, workers=args.workers)
    for r in recs:
        _print_record(r)
    report(recs, Path(cfg.output_dir) / f"{cfg.run_id}__sweep_{args.axis}")
    return 0 if all(r.passed for r in recs) else 1


def cmd_report(args) -> int:
    recs = load_records(args.dir)
    if not recs:
        print(f"no record.json found below {args.dir}", file=sys.stderr)
        return 2
    paths = report(recs, args.out or args.dir)
    print(f"wrote {paths['csv']} and {paths['json']}")
    return 0 if all(r.passed for r in recs) else 1


def cmd_check(args) -> int:
    numbers = [n for n, _, _ in CRITERIA] if args.all else args.criterion
    if not numbers:
        print("check needs --all or --criterion N", file=sys.stderr)
        return 2
    ok = True
    for n in numbers:
        passed, recs = run_criterion(n, args.output_dir)
        ok &= passed
        print(criterion_line(n, passed, recs), flush=True)
        if args.verbose:
            for r in recs:
                _print_record(r)
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fractrans", description="Fractional transport-diffusion experiments.")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run one experiment from a JSON config")
    r.add_argument("--config", required=True)
    r.add_argument("--output-dir")
    r.set_defaults(func=cmd_run)
    s = sub.add_parser("sweep", help="run an experiment once per value of one config field")
    s.add_argument("--config", required=True)
    s.add_argument("--axis", required=True, help="dotted field, e.g. solver.alpha or grid.N")
    s.add_argument("--values", required=True, help="comma-separated values")
    s.add_argument("--workers", type=int, help="worker processes (default: $FRACTRANS_WORKERS or 1)")
    s.add_argument("--output-dir")
    s.set_defaults(func=cmd_sweep)
    rp = sub.add_parser("report", help="summarize every record below a directory")
    rp.add_argument("--dir", required=True)
    rp.add_argument("--out", help="output directory (default: --dir)")
    rp.set_defaults(func=cmd_report)
    c = sub.add_parser("check", help="run the acceptance suite")
    c.add_argument("--all", action="store_true")
    c.add_argument("--criterion", type=int, action="append")
    c.add_argument("--output-dir", default="runs/check")
    c.add_argument("-v", "--verbose", action="store_true")
    c.set_defaults(func=cmd_check)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
