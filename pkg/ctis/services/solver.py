"""EM reconstruction over a pluggable projector backend.

Each iteration applies the multiplicative update::

    f(k+1) = (f(k) / h) * H^T( g / H f(k) )

with the forward projection clamped at zero and the ratio guarded by
``epsilon`` (0/0 -> 0, x/0 -> x/epsilon).
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Callable, Protocol

import numpy as np

from ctis.config import settings
from ctis.errors import ConfigError, NegativeDataError, NegativeImageError, ZeroColumnError
from ctis.models import (
    Datacube,
    FpaImage,
    SystemGeometry,
    check_geometry,
    validate_nonnegative,
)
from ctis.services.calibration import ColumnSums, KernelSet

logger = logging.getLogger(__name__)

INIT_MODES = ("ones", "backproject")
PRECISIONS = ("f32", "f64")


class ProjectorBackend(Protocol):
    name: str
    geometry: SystemGeometry

    def forward(self, f: Datacube) -> FpaImage: ...

    def backward(self, u: FpaImage) -> Datacube: ...


@dataclass(frozen=True)
class SolverConfig:
    iterations: int = settings.default_iterations
    init: str = "ones"
    epsilon: float | None = None  # None -> precision default
    record_residuals: bool = False
    precision: str = "f64"

    def __post_init__(self) -> None:
        if self.iterations < 1:
            raise ConfigError(f"iterations must be >= 1, got {self.iterations}")
        if self.init not in INIT_MODES:
            raise ConfigError(f"init must be one of {INIT_MODES}, got {self.init!r}")
        if self.precision not in PRECISIONS:
            raise ConfigError(f"precision must be one of {PRECISIONS}, got {self.precision!r}")
        if self.epsilon is not None and not self.epsilon > 0:
            raise ConfigError(f"epsilon must be > 0, got {self.epsilon}")

    @property
    def dtype(self) -> np.dtype:
        return settings.dtype_for(self.precision)

    @property
    def guard(self) -> float:
        return self.epsilon if self.epsilon is not None else settings.epsilon_for(self.precision)


@dataclass
class SolveReport:
    final: Datacube
    seconds: list[float] = field(default_factory=list)
    residuals: list[float] | None = None
    iterations: int = 0

    @property
    def total_seconds(self) -> float:
        return float(sum(self.seconds))


def em_ratio(g: np.ndarray, projected: np.ndarray, epsilon: float) -> np.ndarray:
    """``g / max(Hf, eps)`` with 0 where both ``g`` and ``Hf`` vanish.

    ``projected`` must already be clamped at zero.
    """
    ratio = g / np.maximum(projected, epsilon)
    ratio[(g == 0) & (projected <= epsilon)] = 0.0
    return ratio


def em_update(f: np.ndarray, h: np.ndarray, zeta: np.ndarray) -> np.ndarray:
    """``(f / h) * zeta`` with ``zeta`` clamped at zero against transform roundoff."""
    return (f / h) * np.maximum(zeta, 0)


def em_solve(
    kernels: KernelSet,
    g: FpaImage,
    h: ColumnSums,
    cfg: SolverConfig,
    backend: ProjectorBackend,
    callback: Callable[[int, Datacube], None] | None = None,
) -> SolveReport:
    """Run ``cfg.iterations`` EM updates and return the final cube with timings.

    ``callback(k, f_k)`` sees every iterate, starting with the initial guess
    at ``k = 1``.
    """
    geometry = kernels.geometry
    check_geometry(geometry, g, h, backend)
    try:
        validate_nonnegative(g)
    except NegativeDataError as exc:
        raise NegativeImageError(f"image: {exc}", index=exc.index) from exc
    if np.any(h.data <= 0):
        raise ZeroColumnError("column sums must be strictly positive")

    dtype = cfg.dtype
    eps = cfg.guard
    g_data = g.data.astype(dtype, copy=False)
    h_data = h.data.astype(dtype, copy=False)
    g_norm = float(np.linalg.norm(g_data))

    logger.info(
        "EM solve: %s, backend=%s, K=%d, init=%s, precision=%s, epsilon=%g "
        "(0/0 -> 0, x/0 -> x/epsilon)",
        geometry.describe(), backend.name, cfg.iterations, cfg.init, cfg.precision, eps,
    )

    if cfg.init == "ones":
        f = Datacube.full(geometry, 1.0, dtype=dtype)
    else:
        f = backend.backward(FpaImage(geometry, g_data))
        f = Datacube(geometry, np.maximum(f.data, 0).astype(dtype, copy=False))

    report = SolveReport(final=f, residuals=[] if cfg.record_residuals else None)
    for k in range(1, cfg.iterations + 1):
        if callback is not None:
            callback(k, f)
        start = time.perf_counter()

        projected = np.maximum(backend.forward(f).data, 0)
        if report.residuals is not None:
            diff = float(np.linalg.norm(g_data - projected))
            report.residuals.append(diff / g_norm if g_norm > 0 else diff)
        u = FpaImage(geometry, em_ratio(g_data, projected, eps))
        zeta = backend.backward(u).data
        f = Datacube(geometry, em_update(f.data, h_data, zeta).astype(dtype, copy=False))

        elapsed = time.perf_counter() - start
        report.seconds.append(elapsed)
        logger.debug(
            "iteration %d/%d: %.4fs%s",
            k, cfg.iterations, elapsed,
            f", residual {report.residuals[-1]:.3e}" if report.residuals else "",
        )

    report.final = f
    report.iterations = cfg.iterations
    logger.info("EM solve finished: %d iterations in %.3fs", cfg.iterations, report.total_seconds)
    return report
