"""Command-line driver.

``ostrokernel run <config|scenario> [--out DIR] [--threads N]`` writes
``report.json``, one CSV per case, grid snapshots and ``timing.json`` into
``DIR/<scenario>``.  ``ostrokernel list-scenarios`` prints the shipped ones.

Exit codes: 0 all cases passed, 1 numeric or assertion failure, 2 config error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from .config import load_config, shipped_scenarios
from .errors import ConfigError, OstroError
from .pipelines import run_config
from .propagator import save_snapshot

__all__ = ["main", "write_outputs"]


def _dump(obj):
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_outputs(out_dir, report, results, timings):
    """Write the report, per-case CSVs, snapshots and timings; return the report path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for res in results:
        label = res.record["label"]
        if res.csv_header:
            with open(out / f"{label}.csv", "w", newline="", encoding="ascii") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(res.csv_header)
                for row in res.csv_rows:
                    w.writerow([repr(float(v)) for v in row])
        for key, grid in sorted(res.snapshots.items()):
            if grid is None:
                continue
            snap = out / "snapshots"
            snap.mkdir(exist_ok=True)
            save_snapshot(grid, snap / f"{label}-{key}.grid")
    path = out / "report.json"
    path.write_text(_dump(report), encoding="utf-8")
    (out / "timing.json").write_text(_dump({k: round(v, 3) for k, v in timings.items()}), encoding="utf-8")
    return path


def _run(args):
    cfg = load_config(args.config)
    if args.threads < 1:
        raise ConfigError("--threads must be at least 1", field="threads")
    report, results, timings = run_config(cfg, threads=args.threads)
    path = write_outputs(Path(args.out) / cfg.name, report, results, timings)
    for rec in report["cases"]:
        status = "PASS" if rec["passed"] else "FAIL"
        print(f"{status}  {cfg.name}/{rec['label']}  ({timings[rec['label']]:.2f} s)")
    print(f"report: {path}")
    return 0 if report["passed"] else 1


def _parser():
    p = argparse.ArgumentParser(prog="ostrokernel", description="One-cell path-integral kernels and their convergence studies.")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a scenario file or a shipped scenario by name")
    r.add_argument("config")
    r.add_argument("--out", default="ostrokernel-out", help="output directory (default: %(default)s)")
    r.add_argument("--threads", type=int, default=1, help="worker threads for grid sums (default: 1)")
    sub.add_parser("list-scenarios", help="list shipped scenarios")
    return p


def main(argv=None):
    args = _parser().parse_args(argv)
    if args.command == "list-scenarios":
        for name in shipped_scenarios():
            print(name)
        return 0
    try:
        return _run(args)
    except ConfigError as exc:
        print(f"config error [{exc.field}]: {exc}", file=sys.stderr)
        return 2
    except (OstroError, ArithmeticError, ValueError) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
