"""``simulate <config-path> [--mode M] [--out DIR] [--override key=value ...]``

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
The output directory can also be set with ``REPTAXIS_OUT_DIR``; ``--out``
takes precedence over it, and it over ``run.out_dir``.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from .config import MODES, ConfigError, apply_overrides, emit_config, parse_config
from .diagnostics import DualNormError
from .timestepper import ContinuationError, NumericalFailure

OUT_ENV = "REPTAXIS_OUT_DIR"
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="simulate", description=__doc__.splitlines()[0])
    p.add_argument("config", help="config file path ('-' reads stdin)")
    p.add_argument("--mode", choices=MODES, help="run mode (overrides run.mode)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                   help="override one config key; repeatable")
    p.add_argument("--emit-config", action="store_true", help="print the effective config and exit")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def load_config(args):
    try:
        if args.config == "-":
            text = sys.stdin.read()
        else:
            with open(args.config, encoding="utf-8") as fh:
                text = fh.read()
    except OSError as exc:
        raise ConfigError(args.config, None, f"cannot read config: {exc}") from None
    cfg = parse_config(text)
    overrides = list(args.override)
    if args.mode:
        overrides.append(f'run.mode="{args.mode}"')
    out = args.out or os.environ.get(OUT_ENV)
    if out:
        overrides.append(f"run.out_dir={json.dumps(out)}")
    return apply_overrides(cfg, overrides) if overrides else cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.emit_config:
        sys.stdout.write(emit_config(cfg))
        return 0

    from .modes import execute

    try:
        summary = execute(cfg)
    except (NumericalFailure, ContinuationError, DualNormError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        # unwritable output directory counts as a configuration problem
        print(f"output error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(json.dumps(summary, indent=1, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
