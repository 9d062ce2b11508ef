"""Explicit system matrix and brute-force products."""

from __future__ import annotations

import numpy as np
import pytest

from conftest import random_cube, random_geometries, random_kernels, rel
from ctis.errors import GeometryMismatch, SizeCapExceeded
from ctis.models import Datacube, FpaImage, SystemGeometry
from ctis.services.calibration import KernelSet, column_sums, synth_kernels
from ctis.services.index_map import embedding_matrix
from ctis.services.oracle import (
    bf_backward,
    bf_em_step,
    bf_forward,
    build_dense_h,
    shifted_calibration_image,
)


class TestStructure:
    def test_shape(self, tiny, rng):
        H = build_dense_h(random_kernels(tiny, rng))
        assert H.shape == (tiny.n, tiny.m)
        assert not H.is_sparse

    def test_impulse_gives_selection_matrix(self):
        g = SystemGeometry(2, 3, 4, 3, 1)
        spatial = np.zeros((1, g.n))
        spatial[0, 0] = 1.0
        H = build_dense_h(KernelSet.from_spatial(g, spatial))
        np.testing.assert_array_equal(H.toarray(), embedding_matrix(g))

    def test_hand_computed_shifts(self):
        g = SystemGeometry(2, 3, 4, 3, 1)
        spatial = np.zeros((1, g.n))
        spatial[0, [0, 1]] = [1.0, 2.0]
        H = build_dense_h(KernelSet.from_spatial(g, spatial)).toarray()
        assert set(np.flatnonzero(H[:, 0])) == {0, 1}
        assert set(np.flatnonzero(H[:, 1])) == {1, 2}
        assert H[2, 1] == 2.0

    def test_column_sums_match(self, rng):
        for g in random_geometries(rng):
            ks = random_kernels(g, rng)
            H = build_dense_h(ks)
            np.testing.assert_allclose(H.column_sums(), column_sums(ks).data, rtol=1e-12)

    def test_sparse_storage_matches_dense(self, desk, rng):
        ks = random_kernels(desk, rng)
        dense = build_dense_h(ks)
        sparse = build_dense_h(ks, dense_max_n=1)
        assert sparse.is_sparse
        np.testing.assert_array_equal(sparse.toarray(), dense.toarray())
        f = random_cube(desk, rng)
        np.testing.assert_allclose(bf_forward(sparse, f).data, bf_forward(dense, f).data, rtol=1e-12)

    def test_size_cap(self, desk, rng):
        with pytest.raises(SizeCapExceeded):
            build_dense_h(random_kernels(desk, rng), cap=desk.n * desk.w - 1)


class TestShiftInvariance:
    def test_columns_are_shifted_calibration_images(self, desk, desk_spots):
        ks = synth_kernels(desk, desk_spots)
        H = build_dense_h(ks).toarray()
        for j in range(desk.m):
            s, r = divmod(j, desk.ell)
            row, col = r % desk.a, r // desk.a
            column = H[:, j].reshape((desk.gamma, desk.xi), order="F")
            np.testing.assert_array_equal(column, shifted_calibration_image(ks, s, row, col))


class TestProducts:
    def test_backward_is_transpose(self, tiny, rng):
        ks = random_kernels(tiny, rng)
        H = build_dense_h(ks)
        u = FpaImage(tiny, rng.uniform(size=tiny.n))
        np.testing.assert_allclose(bf_backward(H, u).data, H.toarray().T @ u.data)

    def test_geometry_checked(self, tiny, rng):
        H = build_dense_h(random_kernels(tiny, rng))
        with pytest.raises(GeometryMismatch):
            bf_forward(H, Datacube.zeros(SystemGeometry(2, 3, 4, 3, 1)))

    def test_em_step_fixed_point(self, tiny, rng):
        ks = random_kernels(tiny, rng, low=0.1)
        H = build_dense_h(ks)
        f = random_cube(tiny, rng, low=0.5)
        g = bf_forward(H, f)
        step = bf_em_step(H, column_sums(ks), f, g)
        assert rel(step.data, f.data) <= 1e-12

    def test_em_step_zero_image(self, tiny, rng):
        ks = random_kernels(tiny, rng)
        H = build_dense_h(ks)
        step = bf_em_step(H, column_sums(ks), Datacube.full(tiny, 1.0), FpaImage.zeros(tiny))
        np.testing.assert_array_equal(step.data, np.zeros(tiny.m))
