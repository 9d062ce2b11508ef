"""Quality metrics and the runtime line fit."""

from __future__ import annotations

import numpy as np
import pytest

from conftest import random_cube
from ctis.errors import AllPixelsExcluded, ZeroReferenceError
from ctis.models import Datacube
from ctis.services.metrics import (
    avg_relative_pixel_error,
    fit_linear,
    pixel_error_stats,
    relative_error,
)


class TestRelativeError:
    def test_identical(self, tiny, rng):
        f = random_cube(tiny, rng)
        assert relative_error(f, f) == 0.0

    def test_homogeneity(self, tiny, rng):
        f = random_cube(tiny, rng, low=0.1)
        assert relative_error(Datacube(tiny, 2 * f.data), f) == pytest.approx(1.0, rel=1e-12)

    def test_matches_direct_sum(self, tiny, rng):
        a, b = random_cube(tiny, rng), random_cube(tiny, rng)
        expected = np.sqrt(sum((x - y) ** 2 for x, y in zip(a.data, b.data))) / np.sqrt(
            sum(y**2 for y in b.data)
        )
        assert relative_error(a, b) == pytest.approx(expected, rel=1e-12)

    def test_zero_reference(self, tiny, rng):
        with pytest.raises(ZeroReferenceError):
            relative_error(random_cube(tiny, rng), Datacube.zeros(tiny))


class TestPixelError:
    def test_identical(self, tiny, rng):
        f = random_cube(tiny, rng, low=0.1)
        assert avg_relative_pixel_error(f, f) == 0.0

    def test_constant_ratio(self, tiny, rng):
        b = random_cube(tiny, rng, low=0.1)
        a = Datacube(tiny, 1.001 * b.data)
        assert avg_relative_pixel_error(a, b) == pytest.approx(0.001, abs=1e-12)

    def test_matches_direct_sum(self, tiny, rng):
        a, b = random_cube(tiny, rng, low=0.1), random_cube(tiny, rng, low=0.1)
        expected = sum(abs(x - y) / y for x, y in zip(a.data, b.data)) / tiny.m
        assert avg_relative_pixel_error(a, b) == pytest.approx(expected, rel=1e-12)

    def test_excludes_dark_reference_voxels(self, tiny):
        b = np.ones(tiny.m)
        b[:4] = 0.0
        a = np.full(tiny.m, 2.0)
        stats = pixel_error_stats(Datacube(tiny, a), Datacube(tiny, b))
        assert stats.used == tiny.m - 4
        assert stats.excluded == 4
        assert stats.value == pytest.approx(1.0)

    def test_all_excluded(self, tiny, rng):
        with pytest.raises(AllPixelsExcluded):
            pixel_error_stats(random_cube(tiny, rng), Datacube.zeros(tiny))

    def test_custom_epsilon(self, tiny):
        b = np.linspace(0.1, 1.2, tiny.m)
        stats = pixel_error_stats(Datacube(tiny, b), Datacube(tiny, b), epsilon=0.5)
        assert stats.excluded == int(np.count_nonzero(b <= 0.5))


class TestLinearFit:
    def test_exact_line(self):
        fit = fit_linear([2, 4, 8, 16], [0.5, 0.9, 1.7, 3.3])
        assert fit.slope == pytest.approx(0.2)
        assert fit.intercept == pytest.approx(0.1)
        assert fit.r_squared == pytest.approx(1.0)
        assert fit.predict(75) == pytest.approx(15.1)

    def test_noisy(self, rng):
        x = np.arange(1, 20, dtype=float)
        y = 3 * x + rng.normal(0, 0.1, x.size)
        assert fit_linear(x, y).r_squared > 0.99

    def test_needs_two_points(self):
        with pytest.raises(ValueError):
            fit_linear([1], [1])
