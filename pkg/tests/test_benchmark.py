"""Benchmark harness: rows, summaries, table, band scaling."""

from __future__ import annotations

import dataclasses
import time

import numpy as np
import pytest

from conftest import random_kernels
from ctis.config import settings
from ctis.models import FpaImage, SystemGeometry
from ctis.services import oracle
from ctis.services.backends import make_backend
from ctis.services.benchmark import (
    SUMMARY_SOLVER,
    render_table,
    run_benchmark,
    scale_bands,
)
from ctis.services.calibration import SceneKind, column_sums, synth_kernels, synth_scene
from ctis.services.solver import SolverConfig, em_solve


@pytest.fixture
def problem(desk, desk_spots):
    ks = synth_kernels(desk, desk_spots)
    truth = synth_scene(desk, SceneKind.parse("constant:100"))
    image = FpaImage(desk, np.maximum(make_backend("wbh", ks).forward(truth).data, 0))
    return ks, image, truth


class TestRunBenchmark:
    def test_rows_and_summaries(self, problem):
        ks, image, truth = problem
        result = run_benchmark(ks, image, [1, 3], backends=["wbh", "bf"], repeats=2, truth=truth)
        assert len(result.rows) == 2 * 2 * 3
        summary = result.summary
        assert {(r.backend, r.K) for r in summary} == {("wbh", 1), ("wbh", 3), ("bf", 1), ("bf", 3)}
        assert all(r.solver == SUMMARY_SOLVER for r in summary)
        for row in result.rows:
            assert row.w == 4
            assert row.seconds > 0
            assert row.relative_error is not None and row.relative_error < 1e-3
            if row.backend == "wbh":
                assert row.avg_rel_pixel_error is not None and row.avg_rel_pixel_error < 1e-3
            else:
                assert row.avg_rel_pixel_error is None
        assert set(result.memory) == {"wbh", "bf"}

    def test_median_row(self, problem):
        ks, image, _ = problem
        result = run_benchmark(ks, image, [2], backends=["wbh"], repeats=3)
        raw = sorted(r.seconds for r in result.rows if r.solver == "em")
        assert result.seconds("wbh", 2) == raw[1]
        assert result.rows[0].relative_error is None

    def test_oversized_oracle_is_skipped(self, problem, monkeypatch):
        ks, image, _ = problem
        monkeypatch.setattr(oracle, "settings", dataclasses.replace(settings, oracle_cap=1))
        result = run_benchmark(ks, image, [1], backends=["wbh", "bf"], repeats=1)
        assert {r.backend for r in result.rows} == {"wbh"}

    def test_table(self, problem):
        ks, image, _ = problem
        result = run_benchmark(ks, image, [1, 2], backends=["wbh", "bf"], repeats=1)
        table = render_table(result)
        assert "wbh + EM" in table and "bf + EM" in table
        assert "Working set" in table
        lines = [line for line in table.splitlines() if line.split()[:1] in (["1"], ["2"])]
        assert len(lines) == 2


class TestBandScaling:
    def test_fit_and_extrapolation(self, problem):
        ks, _, truth = problem
        scaling = scale_bands(ks, [1, 2, 4], iterations=2, repeats=1, truth=truth, extrapolate_w=75)
        assert scaling.band_counts == [1, 2, 4]
        assert len(scaling.seconds_per_iteration) == 3
        assert scaling.extrapolated_seconds == pytest.approx(scaling.fit.predict(75))

    def test_rendered(self, problem):
        ks, image, _ = problem
        result = run_benchmark(ks, image, [1], backends=["wbh"], repeats=1)
        result.scaling = scale_bands(ks, [2, 4], iterations=1, repeats=1, extrapolate_w=75)
        table = render_table(result)
        assert "R^2" in table
        assert "extrapolated w=75" in table


def _per_iteration(kernels, backend_name, iterations=5, repeats=5):
    g = kernels.geometry
    backend = make_backend(backend_name, kernels)
    image = FpaImage(g, np.ones(g.n))
    cfg = SolverConfig(iterations=iterations)
    h = column_sums(kernels)
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        em_solve(kernels, image, h, cfg, backend)
        times.append((time.perf_counter() - start) / iterations)
    return float(np.median(times))


@pytest.mark.benchmark
class TestComplexityClaims:
    def test_linear_in_bands(self, rng):
        g = SystemGeometry(32, 32, 256, 256, 16)
        ks = random_kernels(g, rng, low=0.1)
        scaling = scale_bands(ks, [2, 4, 8, 16], iterations=3, repeats=5, precision="f32")
        assert scaling.fit.r_squared >= 0.95

    @pytest.mark.parametrize("dims", [(16, 16, 48, 48, 2), (16, 32, 40, 64, 2)])
    def test_spectral_beats_brute_force(self, rng, dims):
        ks = random_kernels(SystemGeometry(*dims), rng, low=0.1)
        assert ks.geometry.ell >= 256
        assert _per_iteration(ks, "wbh") < _per_iteration(ks, "bf")
