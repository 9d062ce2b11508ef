"""Projector backends for the EM solver: spectral (``wbh``) and brute force (``bf``)."""

from __future__ import annotations

import logging

import numpy as np

from ctis.config import settings
from ctis.errors import ConfigError
from ctis.models import Datacube, FpaImage, SystemGeometry
from ctis.services import oracle, projector
from ctis.services.calibration import KernelSet

logger = logging.getLogger(__name__)

BACKENDS = ("wbh", "bf")


class WbhBackend:
    """Spectral projector with its own reusable workspace.

    Results are views of owned buffers and are overwritten by the next call.
    """

    name = "wbh"

    def __init__(self, kernels: KernelSet, workers: int | None = None) -> None:
        self.kernels = kernels
        self.geometry: SystemGeometry = kernels.geometry
        self.workers = workers or settings.threads
        self.workspace = projector.ProjectorWorkspace.for_geometry(kernels.geometry, kernels.dtype)
        self._image = np.empty(self.geometry.n, dtype=kernels.dtype)
        self._cube = np.empty(self.geometry.m, dtype=kernels.dtype)

    @property
    def nbytes(self) -> int:
        return self.workspace.nbytes

    def forward(self, f: Datacube) -> FpaImage:
        return projector.forward(
            self.kernels, f, self.workspace, workers=self.workers, out=self._image
        )

    def backward(self, u: FpaImage) -> Datacube:
        return projector.backward(
            self.kernels, u, self.workspace, workers=self.workers, out=self._cube
        )


class BruteForceBackend:
    """Explicit system-matrix products."""

    name = "bf"

    def __init__(self, kernels: KernelSet, cap: int | None = None) -> None:
        self.geometry: SystemGeometry = kernels.geometry
        self.matrix = oracle.build_dense_h(kernels, cap=cap)

    @property
    def nbytes(self) -> int:
        return self.matrix.nbytes

    def forward(self, f: Datacube) -> FpaImage:
        return oracle.bf_forward(self.matrix, f)

    def backward(self, u: FpaImage) -> Datacube:
        return oracle.bf_backward(self.matrix, u)


def make_backend(
    name: str,
    kernels: KernelSet,
    threads: int | None = None,
    dtype=None,
) -> WbhBackend | BruteForceBackend:
    """Backend by CLI name, with kernels cast to ``dtype`` when given."""
    if name not in BACKENDS:
        raise ConfigError(f"unknown backend {name!r}; choose from {BACKENDS}")
    if dtype is not None:
        kernels = kernels.astype(dtype)
    backend = WbhBackend(kernels, workers=threads) if name == "wbh" else BruteForceBackend(kernels)
    logger.info(
        "Using %s backend (%s, working set %.1f MiB)",
        name, kernels.dtype, backend.nbytes / 2**20,
    )
    return backend
