"""``synth-calib`` and ``synth-scene``: deterministic synthetic inputs."""

from __future__ import annotations

import argparse
import logging
from pathlib import Path

from ctis.config import settings
from ctis.models import parse_geometry, parse_wavelengths
from ctis.services.calibration import SceneKind, SpotSpec, synth_kernels, synth_scene
from ctis.storage import read_geometry, save_cube, save_kernels

logger = logging.getLogger(__name__)


def register(subparsers: argparse._SubParsersAction, common: argparse.ArgumentParser) -> None:
    calib = subparsers.add_parser(
        "synth-calib", parents=[common], help="write synthetic calibration kernels"
    )
    calib.add_argument("--geometry", required=True, help="a,alpha,gamma,xi,w")
    calib.add_argument("--wavelengths", help="lo:hi or a comma-separated list (nm)")
    calib.add_argument("--seed", type=int, default=0)
    calib.add_argument("--spots", default=settings.default_spots, help="spot layout key=value,...")
    calib.add_argument("--out", type=Path, required=True)
    calib.set_defaults(func=synth_calib)

    scene = subparsers.add_parser(
        "synth-scene", parents=[common], help="write a synthetic datacube"
    )
    scene.add_argument("--kind", required=True, help="constant:V | rgb:PATH | random:SEED")
    where = scene.add_mutually_exclusive_group(required=True)
    where.add_argument("--geometry", help="a,alpha,gamma,xi,w")
    where.add_argument("--like", type=Path, help="copy the geometry of an existing container")
    scene.add_argument("--out", type=Path, required=True)
    scene.set_defaults(func=synth_scene_cmd)


def synth_calib(args: argparse.Namespace) -> None:
    geometry = parse_geometry(args.geometry)
    if args.wavelengths:
        geometry = parse_geometry(
            args.geometry, parse_wavelengths(args.wavelengths, geometry.w)
        )
    kernels = synth_kernels(geometry, SpotSpec.parse(args.spots), seed=args.seed, workers=args.threads)
    save_kernels(args.out, kernels)
    print(f"kernels: {args.out} ({geometry.describe()})")


def synth_scene_cmd(args: argparse.Namespace) -> None:
    geometry = read_geometry(args.like) if args.like else parse_geometry(args.geometry)
    cube = synth_scene(geometry, SceneKind.parse(args.kind))
    save_cube(args.out, cube)
    print(f"cube: {args.out} ({geometry.describe()})")
