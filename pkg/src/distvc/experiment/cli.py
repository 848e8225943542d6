"""Command-line entry point: ``distvc <subcommand> [--config PATH] ...``.

Exit status is 0 on success, 2 for an invalid config (printed as
``file:line: message``) and 3 for an I/O failure. Log verbosity comes from
``DISTVC_LOG_LEVEL`` (default ``WARNING``).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import replace

from .config import ConfigError, RunConfig, load_config
from .runner import run

SUBCOMMANDS = {
    "utility-sweep": "utility_sweep",
    "simulate-standard": "standard_sim",
    "simulate-distributed": "distributed_sim",
    "compare": "compare",
    "match-eval": "match_eval",
}

EXIT_CONFIG = 2
EXIT_IO = 3


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="distvc", description="Venture fund economics experiments.")
    sub = p.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", metavar="PATH", help="YAML run configuration")
        s.add_argument("--seed", type=_u64, help="master seed (overrides the config)")
        s.add_argument("--trials", type=_positive)
        s.add_argument("--out-dir", metavar="PATH")
        s.add_argument("--svg", action=argparse.BooleanOptionalAction, default=None,
                       help="also write SVG charts")
        s.add_argument("--workers", type=_positive, help="threads for the trial pool")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=os.environ.get("DISTVC_LOG_LEVEL", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config) if args.config else RunConfig()
        cfg = cfg.with_overrides(scenario=SUBCOMMANDS[args.command], master_seed=args.seed,
                                 trials=args.trials, svg=args.svg, workers=args.workers,
                                 output_dir=args.out_dir)
    except ConfigError as e:
        if e.source is None and args.config:
            e.source = args.config
        print(str(e), file=sys.stderr)
        return EXIT_CONFIG
    except OSError as e:
        print(f"{args.config}: {e.strerror or e}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        manifest = run(cfg)
    except OSError as e:
        print(f"error writing outputs: {e}", file=sys.stderr)
        return EXIT_IO
    for o in manifest.outputs:
        print(os.path.join(cfg.output_dir, o.path))
    return 0


if __name__ == "__main__":
    sys.exit(main())
