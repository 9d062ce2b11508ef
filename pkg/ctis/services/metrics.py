"""Reconstruction quality and runtime-scaling metrics."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from ctis.config import settings
from ctis.errors import AllPixelsExcluded, ZeroReferenceError
from ctis.models import Datacube, check_geometry

logger = logging.getLogger(__name__)


def relative_error(f_est: Datacube, f_ref: Datacube) -> float:
    """``||f_est - f_ref||_2 / ||f_ref||_2``."""
    check_geometry(f_ref.geometry, f_est)
    ref = f_ref.data.astype(np.float64, copy=False)
    ref_norm = float(np.linalg.norm(ref))
    if ref_norm == 0:
        raise ZeroReferenceError("reference datacube is all zeros")
    return float(np.linalg.norm(f_est.data.astype(np.float64, copy=False) - ref)) / ref_norm


class PixelError(NamedTuple):
    value: float
    used: int
    excluded: int


def pixel_error_stats(
    f_a: Datacube,
    f_b: Datacube,
    epsilon: float | None = None,
) -> PixelError:
    """Mean of ``|a_j - b_j| / b_j`` over voxels with ``b_j > epsilon``."""
    check_geometry(f_b.geometry, f_a)
    eps = settings.pixel_epsilon if epsilon is None else epsilon
    a = f_a.data.astype(np.float64, copy=False)
    b = f_b.data.astype(np.float64, copy=False)
    keep = b > eps
    used = int(np.count_nonzero(keep))
    if used == 0:
        raise AllPixelsExcluded(f"every reference voxel is <= {eps}")
    value = float(np.mean(np.abs(a[keep] - b[keep]) / b[keep]))
    excluded = b.size - used
    if excluded:
        logger.debug("Average relative pixel error excluded %d of %d voxels", excluded, b.size)
    return PixelError(value, used, excluded)


def avg_relative_pixel_error(
    f_a: Datacube,
    f_b: Datacube,
    epsilon: float | None = None,
) -> float:
    return pixel_error_stats(f_a, f_b, epsilon).value


@dataclass(frozen=True)
class LinearFit:
    slope: float
    intercept: float
    r_squared: float

    def predict(self, x: float) -> float:
        return self.slope * x + self.intercept


def fit_linear(x: Sequence[float], y: Sequence[float]) -> LinearFit:
    """Least-squares line through ``(x, y)`` with its coefficient of determination."""
    xs = np.asarray(x, dtype=np.float64)
    ys = np.asarray(y, dtype=np.float64)
    if xs.size < 2:
        raise ValueError("need at least two points for a linear fit")
    slope, intercept = np.polyfit(xs, ys, 1)
    ss_res = float(np.sum((ys - (slope * xs + intercept)) ** 2))
    ss_tot = float(np.sum((ys - ys.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return LinearFit(float(slope), float(intercept), r2)
