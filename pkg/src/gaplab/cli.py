"""Command-line entry points.

`lab run <config.toml>` evaluates one experiment; `lab validate` checks a
config without running it; `lab fixtures check` re-runs the frozen
regression configs and diffs their CSVs.  Exit codes: 1 invalid config,
2 resource cap exceeded, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

from .measures import ResourceCapError
from .runner import (
    ConfigError,
    check_fixtures,
    load_config,
    run_experiment,
)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_CAP = 2
EXIT_NUMERICAL = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lab",
        description="configuration-driven spectral-gap experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one experiment config")
    run.add_argument("config", help="path to a TOML experiment config")
    run.add_argument("--seed", type=int, default=None,
                     help="override the seed recorded in the config")
    run.add_argument("--out", default=None, help="output directory")
    run.add_argument("--threads", type=int, default=1,
                     help="worker threads for independent grid cells")

    val = sub.add_parser("validate", help="parse and validate a config")
    val.add_argument("config", help="path to a TOML experiment config")

    fix = sub.add_parser("fixtures", help="frozen regression configs")
    fix_sub = fix.add_subparsers(dest="fixtures_command", required=True)
    chk = fix_sub.add_parser("check", help="re-run fixtures and diff CSVs")
    chk.add_argument("--out", default=None,
                     help="keep outputs under this directory")
    chk.add_argument("--threads", type=int, default=1)
    return parser


def _is_cap_error(exc: Exception) -> bool:
    text = str(exc).lower()
    return "cap" in text or "exceed" in text


def _cmd_run(args) -> int:
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = dataclasses.replace(cfg, seed=args.seed)
        out = args.out or cfg.output_dir or "out"
        manifest = run_experiment(cfg, out, threads=args.threads)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ResourceCapError as exc:
        print(f"resource cap: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (ValueError, ArithmeticError) as exc:
        if _is_cap_error(exc):
            print(f"resource cap: {exc}", file=sys.stderr)
            return EXIT_CAP
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    files = ", ".join(o["file"] for o in manifest["outputs"])
    print(f"{cfg.kind}: wrote {files} in {out} "
          f"({manifest['wall_time_s']}s, seed {cfg.seed})")
    return EXIT_OK


def _cmd_validate(args) -> int:
    try:
        cfg = load_config(args.config)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"ok: {cfg.kind} experiment on {cfg.group}, seed {cfg.seed}")
    return EXIT_OK


def _cmd_fixtures_check(args) -> int:
    results = check_fixtures(out_root=args.out, threads=args.threads)
    failed = 0
    for res in results:
        if res.ok:
            print(f"fixture {res.name}: ok")
        else:
            failed += 1
            print(f"fixture {res.name}: FAIL ({res.detail})")
    if failed:
        print(f"{failed} of {len(results)} fixtures failed", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "run":
        return _cmd_run(args)
    if args.command == "validate":
        return _cmd_validate(args)
    return _cmd_fixtures_check(args)


if __name__ == "__main__":
    sys.exit(main())
