"""``project``: simulate an FPA image from a datacube, optionally with shot noise."""

from __future__ import annotations

import argparse
import logging
from pathlib import Path

import numpy as np

from ctis.errors import ConfigError
from ctis.models import FpaImage
from ctis.services.backends import BACKENDS, make_backend
from ctis.storage import load_cube, load_kernels, save_image

logger = logging.getLogger(__name__)


def register(subparsers: argparse._SubParsersAction, common: argparse.ArgumentParser) -> None:
    p = subparsers.add_parser("project", parents=[common], help="forward-project a datacube")
    p.add_argument("--kernels", type=Path, required=True)
    p.add_argument("--cube", type=Path, required=True)
    p.add_argument("--backend", choices=BACKENDS, default="wbh")
    p.add_argument("--noise", help="poisson:SCALE")
    p.add_argument("--seed", type=int, default=0, help="noise seed")
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=run)


def parse_noise(text: str) -> float:
    """Scale of ``poisson:SCALE`` (photons per unit intensity)."""
    kind, _, arg = text.partition(":")
    if kind != "poisson":
        raise ConfigError(f"unknown noise model {text!r}; expected poisson:SCALE")
    try:
        scale = float(arg)
    except ValueError as exc:
        raise ConfigError(f"bad poisson scale {arg!r}") from exc
    if not scale > 0:
        raise ConfigError(f"poisson scale must be > 0, got {scale}")
    return scale


def add_poisson_noise(image: FpaImage, scale: float, seed: int) -> FpaImage:
    """``Poisson(g * scale) / scale``, seeded."""
    rng = np.random.default_rng(seed)
    counts = rng.poisson(image.data.astype(np.float64) * scale)
    return FpaImage(image.geometry, (counts / scale).astype(image.data.dtype))


def run(args: argparse.Namespace) -> None:
    kernels = load_kernels(args.kernels)
    cube = load_cube(args.cube, expected=kernels.geometry)
    backend = make_backend(args.backend, kernels, threads=args.threads)

    clean = backend.forward(cube.astype(kernels.dtype)).data
    # transform roundoff can leave tiny negatives where the image is dark
    image = FpaImage(kernels.geometry, np.maximum(clean, 0))
    if args.noise:
        image = add_poisson_noise(image, parse_noise(args.noise), args.seed)
        logger.info("Applied %s noise (seed=%d)", args.noise, args.seed)

    save_image(args.out, image)
    print(f"image: {args.out} (sum {float(image.data.sum()):.6g})")
