"""Shared fixtures: small geometries, seeded generators and random kernels."""

from __future__ import annotations

import numpy as np
import pytest

from ctis.models import Datacube, FpaImage, SystemGeometry
from ctis.services.calibration import KernelSet, SpotSpec


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(42)


@pytest.fixture
def tiny() -> SystemGeometry:
    """a=2, alpha=3, gamma=4, xi=3, w=2: n=12, ell=6, m=12."""
    return SystemGeometry(2, 3, 4, 3, 2)


@pytest.fixture
def desk() -> SystemGeometry:
    return SystemGeometry(8, 6, 32, 24, 4)


@pytest.fixture
def desk_spots() -> SpotSpec:
    """Spot layout that stays clear of the desk FPA edges for all four bands."""
    return SpotSpec(radius=3, dispersion=1, jitter=0.1)


def random_kernels(
    geometry: SystemGeometry, rng: np.random.Generator, low: float = 0.0
) -> KernelSet:
    spatial = rng.uniform(low, 1.0, size=(geometry.w, geometry.n))
    return KernelSet.from_spatial(geometry, spatial)


def random_cube(geometry: SystemGeometry, rng: np.random.Generator, low: float = 0.0) -> Datacube:
    return Datacube(geometry, rng.uniform(low, 1.0, size=geometry.m))


def random_image(geometry: SystemGeometry, rng: np.random.Generator) -> FpaImage:
    return FpaImage(geometry, rng.uniform(0.0, 1.0, size=geometry.n))


def random_geometries(rng: np.random.Generator, count: int = 20, max_nw: int = 10_000):
    """Random valid geometries with ``n * w <= max_nw``."""
    out: list[SystemGeometry] = []
    while len(out) < count:
        a, alpha = (int(v) for v in rng.integers(1, 6, size=2))
        gamma = a + int(rng.integers(0, 7))
        xi = alpha + int(rng.integers(0, 7))
        w = int(rng.integers(1, 5))
        if gamma * xi * w <= max_nw:
            out.append(SystemGeometry(a, alpha, gamma, xi, w))
    return out


def rel(a: np.ndarray, b: np.ndarray) -> float:
    """Relative L2 difference of ``a`` against ``b``."""
    nb = float(np.linalg.norm(b))
    return float(np.linalg.norm(a - b)) / nb if nb else float(np.linalg.norm(a))
