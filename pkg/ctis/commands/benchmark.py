"""``benchmark``: runtime comparison table and band-count scaling."""

from __future__ import annotations

import argparse
import logging
from pathlib import Path

from ctis.commands import parse_int_list, parse_names
from ctis.errors import ConfigError
from ctis.services.backends import BACKENDS
from ctis.services.benchmark import render_table, run_benchmark, scale_bands
from ctis.services.solver import PRECISIONS
from ctis.storage import load_cube, load_image, load_kernels, write_benchmark_csv

logger = logging.getLogger(__name__)


def register(subparsers: argparse._SubParsersAction, common: argparse.ArgumentParser) -> None:
    p = subparsers.add_parser("benchmark", parents=[common], help="time EM per backend and K")
    p.add_argument("--kernels", type=Path, required=True)
    p.add_argument("--image", type=Path, required=True)
    p.add_argument("--iterations", default="1,5,25", help="K1,K2,...")
    p.add_argument("--backends", default=",".join(BACKENDS))
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--precision", choices=PRECISIONS, default="f32")
    p.add_argument("--truth", type=Path, help="known datacube for relative_error")
    p.add_argument("--band-counts", help="w1,w2,... for per-iteration scaling in w")
    p.add_argument("--scaling-iterations", type=int, default=5)
    p.add_argument("--extrapolate-w", type=int, help="report the fitted time at this many bands")
    p.add_argument("--out", type=Path, required=True, help="CSV output")
    p.set_defaults(func=run)


def run(args: argparse.Namespace) -> None:
    iterations = parse_int_list(args.iterations, "--iterations")
    backends = parse_names(args.backends)
    unknown = [b for b in backends if b not in BACKENDS]
    if unknown or not backends:
        raise ConfigError(f"--backends must be drawn from {BACKENDS}, got {args.backends!r}")

    kernels = load_kernels(args.kernels)
    image = load_image(args.image, expected=kernels.geometry)
    truth = load_cube(args.truth, expected=kernels.geometry) if args.truth else None

    result = run_benchmark(
        kernels,
        image,
        iterations,
        backends=backends,
        repeats=args.repeats,
        truth=truth,
        threads=args.threads,
        precision=args.precision,
    )

    if args.band_counts:
        counts = parse_int_list(args.band_counts, "--band-counts")
        if len(counts) < 2:
            raise ConfigError("--band-counts needs at least two values for a linear fit")
        if max(counts) > kernels.geometry.w:
            raise ConfigError(f"--band-counts exceeds the kernel set's {kernels.geometry.w} bands")
        result.scaling = scale_bands(
            kernels,
            counts,
            iterations=args.scaling_iterations,
            repeats=args.repeats,
            truth=truth,
            threads=args.threads,
            precision=args.precision,
            extrapolate_w=args.extrapolate_w,
        )

    write_benchmark_csv(args.out, (row.as_dict() for row in result.rows))
    print(render_table(result), end="")
