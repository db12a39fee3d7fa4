"""Command line: ``cellfree <fig2..fig7|coverage|selftest> [options]``."""

import argparse
import json
import os
import sys

from .config import SCHEMA, ConfigError, resolve_config
from .figures import FIGURES, run_figure
from .selftest import run_selftest


def _parse_set(items):
    out = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        out[key.strip()] = value.strip()
    return out


def build_parser():
    p = argparse.ArgumentParser(prog="cellfree", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in list(FIGURES) + ["selftest"]:
        s = sub.add_parser(name)
        s.add_argument("--config", help="JSON file with configuration overrides")
        s.add_argument("--seed", type=int, help="master seed")
        s.add_argument("--trials", type=int, help="Monte Carlo trials per point")
        s.add_argument("--out", help="output CSV (directory for selftest)")
        s.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help=f"override any field: {', '.join(SCHEMA)}")
        s.add_argument("--print-config", action="store_true", help="echo the resolved config")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        overrides = _parse_set(args.set)
        overrides.update({"seed": args.seed, "trials": args.trials})
        cfg = resolve_config(args.config, overrides)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if args.print_config:
        print(json.dumps(cfg.to_dict(), indent=2, sort_keys=True))
    try:
        if args.command == "selftest":
            out = args.out or os.path.join("results", "selftest")
            failed = run_selftest(cfg, out, trials=args.trials)
            for name in failed:
                print(f"FAILED: {name}", file=sys.stderr)
            print(f"selftest: {'ok' if not failed else f'{len(failed)} failure(s)'} -> {out}")
            return 1 if failed else 0
        out = args.out or os.path.join("results", f"{args.command}.csv")
        rows = run_figure(args.command, cfg, out)
    except OSError as exc:
        print(f"cannot write output: {exc}", file=sys.stderr)
        return 1
    print(f"{args.command}: {len(rows)} rows -> {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
