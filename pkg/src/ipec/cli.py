"""Command-line entry point: ``ipec-bench <command> <spec> ...``.

Environment:
  IPEC_OUTPUT_DIR  base directory for outputs (default ./results)
  IPEC_THREADS     cap on BLAS/OpenMP threads
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import bench

COMMANDS = {
    "run": None,
    "landscape": "landscape",
    "cost": None,
    "learn": "learn",
    "distribution": "distribution",
}


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ipec-bench", description="Run mitigation experiments from spec files.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("spec", type=Path)
        p.add_argument("--out", help="output base directory (overrides IPEC_OUTPUT_DIR)")
        p.add_argument("--restarts", type=int, help="override run.restarts")
    v = sub.add_parser("verify", help="run a spec and check its summary against expected values")
    v.add_argument("spec", type=Path)
    v.add_argument("expected", type=Path)
    v.add_argument("--out")
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        spec = bench.ExperimentSpec.load(args.spec)
        if args.command == "cost":
            rec = bench.run_cost(spec)
        else:
            want = COMMANDS.get(args.command)
            if want and spec.strategy != want:
                raise bench.ConfigError(f"'{args.command}' needs strategy.name = {want}, got {spec.strategy}")
            if getattr(args, "restarts", None) is not None:
                spec = bench.dataclasses.replace(spec, restarts=args.restarts)
            rec = bench.run(spec)
        outdir = rec.write(bench.output_dir(spec, args.out))
    except bench.ConfigError as exc:
        print(f"{args.spec}: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"{args.spec}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {outdir}")
    if args.command == "verify":
        failures = bench.verify(rec.summary, json.loads(args.expected.read_text()))
        for f in failures:
            print(f"FAIL {f}")
        print("verify: " + ("ok" if not failures else f"{len(failures)} mismatches"))
        return 1 if failures else 0
    return 0


if __name__ == "__main__":
    sys.exit(main())
