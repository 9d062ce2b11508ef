"""ctis – shift-invariant CTIS reconstruction command-line entry point."""

from __future__ import annotations

import argparse
import logging
import sys
from typing import Sequence

from ctis.config import settings
from ctis.errors import CtisError

log = logging.getLogger(__name__)


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--log-level",
        default=settings.log_level,
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        type=str.upper,
    )
    common.add_argument(
        "--threads",
        type=int,
        default=None,
        help=f"FFT worker threads (default {settings.threads})",
    )
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ctis",
        description="Shift-invariant CTIS reconstruction: synthesis, projection, EM, benchmarks.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    common = _common_parser()

    # --- Register subcommands ---
    from ctis.commands import benchmark, compare, project, reconstruct, synth

    for module in (synth, project, reconstruct, compare, benchmark):
        module.register(subparsers, common)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)

    # --- Logging goes to stderr so stdout stays machine-parsable ---
    logging.basicConfig(
        level=args.log_level,
        format="%(levelname)s:    %(name)s - %(message)s",
        stream=sys.stderr,
        force=True,
    )

    if args.threads is not None and args.threads < 1:
        print("error:config: --threads must be >= 1", file=sys.stderr)
        return 2

    try:
        args.func(args)
    except CtisError as exc:
        print(f"error:{exc.category}: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error:io: {exc}", file=sys.stderr)
        return 2
    except Exception:
        log.exception("Unexpected failure in %s", args.command)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
