"""``compare``: quality metrics between two datacubes."""

from __future__ import annotations

import argparse
from pathlib import Path

from ctis.services.metrics import pixel_error_stats, relative_error
from ctis.storage import load_cube


def register(subparsers: argparse._SubParsersAction, common: argparse.ArgumentParser) -> None:
    p = subparsers.add_parser(
        "compare", parents=[common], help="relative and average relative pixel error"
    )
    p.add_argument("--cube-a", type=Path, required=True, help="estimate")
    p.add_argument("--cube-b", type=Path, required=True, help="reference")
    p.add_argument("--epsilon", type=float, help="exclude reference voxels <= epsilon")
    p.set_defaults(func=run)


def run(args: argparse.Namespace) -> None:
    ref = load_cube(args.cube_b)
    est = load_cube(args.cube_a, expected=ref.geometry)
    stats = pixel_error_stats(est, ref, epsilon=args.epsilon)
    print(f"relative_error: {relative_error(est, ref):.12g}")
    print(f"avg_relative_pixel_error: {stats.value:.12g}")
    print(f"excluded_voxels: {stats.excluded}")
