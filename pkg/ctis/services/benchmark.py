"""Runtime benchmarks: EM wall time per backend and iteration count, and
per-iteration time as a function of the number of wavelength bands.

Results are rows for the benchmark CSV plus a plain-text table rendered with
Jinja2 (rows K, columns backend).
"""

from __future__ import annotations

import logging
import statistics
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from jinja2 import Environment, FileSystemLoader

from ctis.errors import (
    AllPixelsExcluded,
    ConfigError,
    SizeCapExceeded,
    ZeroReferenceError,
)
from ctis.models import Datacube, FpaImage, check_geometry
from ctis.services.backends import BACKENDS, make_backend
from ctis.services.calibration import KernelSet, column_sums
from ctis.services.metrics import LinearFit, fit_linear, pixel_error_stats, relative_error
from ctis.services.solver import SolverConfig, em_solve

logger = logging.getLogger(__name__)

TEMPLATES_DIR = Path(__file__).resolve().parent.parent / "templates"
RAW_SOLVER = "em"
SUMMARY_SOLVER = "em-median"

_templates = Environment(
    loader=FileSystemLoader(str(TEMPLATES_DIR)),
    trim_blocks=True,
    lstrip_blocks=True,
    keep_trailing_newline=True,
)


# ---------------------------------------------------------------------------
# Result structures
# ---------------------------------------------------------------------------


@dataclass
class BenchmarkRow:
    """One CSV row; quality columns stay None when not computable."""

    solver: str
    backend: str
    w: int
    K: int
    seconds: float
    relative_error: float | None = None
    avg_rel_pixel_error: float | None = None

    def as_dict(self) -> dict[str, object]:
        return asdict(self)


@dataclass
class BandScaling:
    """Median per-iteration seconds for each band count and the linear fit."""

    band_counts: list[int]
    seconds_per_iteration: list[float]
    fit: LinearFit
    extrapolate_w: int | None = None

    @property
    def extrapolated_seconds(self) -> float | None:
        if self.extrapolate_w is None:
            return None
        return self.fit.predict(self.extrapolate_w)


@dataclass
class BenchmarkResult:
    rows: list[BenchmarkRow] = field(default_factory=list)
    memory: dict[str, int] = field(default_factory=dict)  # backend -> working-set bytes
    scaling: BandScaling | None = None

    @property
    def summary(self) -> list[BenchmarkRow]:
        return [r for r in self.rows if r.solver == SUMMARY_SOLVER]

    def seconds(self, backend: str, K: int) -> float | None:
        for row in self.summary:
            if row.backend == backend and row.K == K:
                return row.seconds
        return None


# ---------------------------------------------------------------------------
# Runs
# ---------------------------------------------------------------------------


def _quality(final: Datacube, truth: Datacube | None) -> float | None:
    if truth is None:
        return None
    try:
        return relative_error(final, truth)
    except ZeroReferenceError:
        return None


def run_benchmark(
    kernels: KernelSet,
    image: FpaImage,
    iterations: Sequence[int],
    backends: Sequence[str] = BACKENDS,
    repeats: int = 3,
    truth: Datacube | None = None,
    threads: int | None = None,
    precision: str = "f32",
) -> BenchmarkResult:
    """Time ``em_solve`` for every (backend, K, repeat) and add median rows.

    A backend whose oracle matrix exceeds the size cap is skipped with a
    warning rather than failing the whole run.
    """
    check_geometry(kernels.geometry, image)
    if truth is not None:
        check_geometry(kernels.geometry, truth)
    if repeats < 1:
        raise ConfigError(f"repeats must be >= 1, got {repeats}")

    w = kernels.geometry.w
    h = column_sums(kernels)
    result = BenchmarkResult()
    finals: dict[tuple[str, int], Datacube] = {}

    dtype = SolverConfig(precision=precision).dtype
    for name in backends:
        try:
            backend = make_backend(name, kernels, threads=threads, dtype=dtype)
        except SizeCapExceeded as exc:
            logger.warning("Skipping %s backend: %s", name, exc)
            continue
        result.memory[name] = backend.nbytes

        for K in iterations:
            cfg = SolverConfig(iterations=K, precision=precision)
            raw: list[BenchmarkRow] = []
            for rep in range(repeats):
                report = em_solve(kernels, image, h, cfg, backend)
                if rep == 0:
                    finals[(name, K)] = report.final
                row = BenchmarkRow(
                    RAW_SOLVER, name, w, K, report.total_seconds,
                    relative_error=_quality(report.final, truth),
                )
                raw.append(row)
                logger.info(
                    "benchmark %s K=%d repeat %d/%d: %.4fs", name, K, rep + 1, repeats, row.seconds
                )
            result.rows.extend(raw)
            result.rows.append(
                BenchmarkRow(
                    SUMMARY_SOLVER, name, w, K,
                    statistics.median(r.seconds for r in raw),
                    relative_error=raw[0].relative_error,
                )
            )

    _attach_pixel_errors(result, finals)
    return result


def _attach_pixel_errors(result: BenchmarkResult, finals: dict[tuple[str, int], Datacube]) -> None:
    """Spectral rows get the average relative pixel error against the
    brute-force cube at the same K."""
    for row in result.rows:
        if row.backend != "wbh" or ("bf", row.K) not in finals:
            continue
        try:
            stats = pixel_error_stats(finals[("wbh", row.K)], finals[("bf", row.K)])
        except AllPixelsExcluded:
            continue
        row.avg_rel_pixel_error = stats.value


def scale_bands(
    kernels: KernelSet,
    band_counts: Sequence[int],
    iterations: int,
    repeats: int = 3,
    truth: Datacube | None = None,
    threads: int | None = None,
    precision: str = "f32",
    extrapolate_w: int | None = None,
) -> BandScaling:
    """Median per-iteration spectral EM time on the first ``w`` bands, for each
    ``w`` in ``band_counts``, with a least-squares line through the points."""
    per_iteration: list[float] = []
    cfg = SolverConfig(iterations=iterations, precision=precision)
    for w in band_counts:
        sub = kernels.subset(w)
        if truth is not None:
            cube = Datacube(sub.geometry, truth.data[: sub.geometry.m])
        else:
            cube = Datacube.full(sub.geometry, 1.0)
        backend = make_backend("wbh", sub, threads=threads, dtype=cfg.dtype)
        clean = backend.forward(cube.astype(cfg.dtype)).data
        image = FpaImage(sub.geometry, np.maximum(clean, 0))
        h = column_sums(sub)
        times = [
            em_solve(sub, image, h, cfg, backend).total_seconds / iterations
            for _ in range(repeats)
        ]
        per_iteration.append(statistics.median(times))
        logger.info("band scaling w=%d: %.5fs per iteration", w, per_iteration[-1])

    fit = fit_linear(band_counts, per_iteration)
    logger.info(
        "per-iteration time ~ %.3e * w + %.3e (R^2 = %.4f)", fit.slope, fit.intercept, fit.r_squared
    )
    return BandScaling(list(band_counts), per_iteration, fit, extrapolate_w)


# ---------------------------------------------------------------------------
# Text report
# ---------------------------------------------------------------------------


def render_table(result: BenchmarkResult) -> str:
    """Table of median seconds, one row per K and one column per backend."""
    backends = list(dict.fromkeys(r.backend for r in result.summary))
    ks = sorted({r.K for r in result.summary})
    table = [
        {"K": K, "cells": [result.seconds(b, K) for b in backends]}
        for K in ks
    ]
    return _templates.get_template("benchmark_table.txt.j2").render(
        backends=backends,
        table=table,
        memory=result.memory,
        scaling=result.scaling,
    )
