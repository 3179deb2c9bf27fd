"""Command line entry point: ``stablesde <kind> --config FILE``."""
import argparse
import os
import sys

from .exceptions import StableSDEError
from .experiments import KINDS, ExperimentConfig, run, validate


def _parser():
    ap = argparse.ArgumentParser(prog="stablesde", description="Euler schemes for SDEs driven by stable noise")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in KINDS + ("run", "validate"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="INI experiment file")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--workers", type=int, default=os.cpu_count() or 1)
        p.add_argument("--seed", type=int, default=None, help="overrides [experiment] seed")
    return ap


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        cfg = ExperimentConfig.load(args.config)
    except (OSError, ValueError) as e:
        print(f"error: cannot read config: {e}", file=sys.stderr)
        return 2
    if args.command not in ("run", "validate"):
        if cfg.kind and cfg.kind != args.command:
            print(f"error: config kind {cfg.kind!r} does not match command {args.command!r}", file=sys.stderr)
            return 2
        cfg.sections.setdefault("experiment", {})["kind"] = args.command
    if args.seed is not None:
        cfg.sections.setdefault("experiment", {})["seed"] = str(args.seed)
    if args.command == "validate":
        diags = validate(cfg)
        for d in diags:
            print(d, file=sys.stderr if d.severity == "error" else sys.stdout)
        return 2 if any(d.severity == "error" for d in diags) else 0
    try:
        status, result = run(cfg, args.out, max(1, args.workers))
    except StableSDEError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    if status:
        for d in result:
            print(f"error: {d}", file=sys.stderr)
        return status
    for k, v in sorted(result.summary.items()):
        print(f"{k}: {v}")
    print(f"wrote {len(result.outputs)} files and manifest.json")
    return 0


if __name__ == "__main__":
    sys.exit(main())
