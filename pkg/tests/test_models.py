"""Geometry, vector types and validation."""

from __future__ import annotations

import numpy as np
import pytest

from ctis.errors import (
    DimensionError,
    GeometryMismatch,
    MetadataError,
    NegativeDataError,
    NonFiniteError,
)
from ctis.models import (
    Datacube,
    EmbeddedStack,
    FpaImage,
    SystemGeometry,
    check_geometry,
    make_geometry,
    parse_geometry,
    parse_wavelengths,
    validate_nonnegative,
)


class TestDerivedSizes:
    def test_full_scale_instrument(self):
        g = SystemGeometry(89, 80, 2048, 2048, 75)
        assert g.n == 4_194_304
        assert g.ell == 7120
        assert g.m == 534_000

    def test_tiny(self, tiny):
        assert (tiny.n, tiny.ell, tiny.m, tiny.beta) == (12, 6, 12, 7)

    def test_odd_n_beta(self):
        assert SystemGeometry(1, 1, 3, 3, 1).beta == 5

    def test_make_geometry_takes_any_sequence(self):
        g = make_geometry(2, 3, 4, 3, 2, [450.0, 550.0])
        assert g.wavelengths == (450.0, 550.0)
        assert g.same_shape(SystemGeometry(2, 3, 4, 3, 2))


class TestValidation:
    @pytest.mark.parametrize(
        "dims",
        [(0, 3, 4, 3, 2), (2, 3, 4, 3, 0), (2, -1, 4, 3, 2), (2.0, 3, 4, 3, 2), (True, 3, 4, 3, 1)],
    )
    def test_bad_dimensions(self, dims):
        with pytest.raises(DimensionError):
            SystemGeometry(*dims)

    def test_fpa_smaller_than_field_stop(self):
        with pytest.raises(DimensionError):
            SystemGeometry(5, 3, 4, 3, 1)
        with pytest.raises(DimensionError):
            SystemGeometry(2, 4, 4, 3, 1)

    def test_wavelength_count(self):
        with pytest.raises(MetadataError):
            SystemGeometry(2, 3, 4, 3, 2, wavelengths=(450.0,))

    def test_wavelengths_increasing(self):
        with pytest.raises(MetadataError):
            SystemGeometry(2, 3, 4, 3, 2, wavelengths=(600.0, 500.0))

    def test_dimension_errors_are_value_errors(self):
        with pytest.raises(ValueError):
            SystemGeometry(0, 1, 1, 1, 1)


class TestGeometryHelpers:
    def test_parse(self):
        assert parse_geometry("2, 3,4,3,2").dims == (2, 3, 4, 3, 2)

    @pytest.mark.parametrize("text", ["2,3,4", "2,3,4,3,x", ""])
    def test_parse_rejects(self, text):
        with pytest.raises(DimensionError):
            parse_geometry(text)

    def test_wavelength_range(self):
        assert parse_wavelengths("400:700", 4) == (400.0, 500.0, 600.0, 700.0)

    def test_wavelength_list(self):
        assert parse_wavelengths("450,550", 2) == (450.0, 550.0)

    def test_with_bands(self):
        g = SystemGeometry(2, 3, 4, 3, 3, wavelengths=(1.0, 2.0, 3.0))
        sub = g.with_bands(2)
        assert sub.w == 2 and sub.wavelengths == (1.0, 2.0)
        with pytest.raises(DimensionError):
            g.with_bands(4)

    def test_metadata_never_mismatches(self, tiny):
        labelled = SystemGeometry(2, 3, 4, 3, 2, wavelengths=(450.0, 550.0))
        check_geometry(tiny, labelled)

    def test_mismatch(self, tiny):
        with pytest.raises(GeometryMismatch):
            check_geometry(tiny, Datacube.zeros(SystemGeometry(2, 3, 4, 3, 1)))


class TestVectors:
    def test_length_checked(self, tiny):
        with pytest.raises(DimensionError):
            Datacube(tiny, np.zeros(tiny.m + 1))
        with pytest.raises(DimensionError):
            FpaImage(tiny, np.zeros(tiny.n - 1))
        with pytest.raises(DimensionError):
            EmbeddedStack(tiny, np.zeros(tiny.n))

    def test_integer_data_promoted(self, tiny):
        assert Datacube(tiny, np.arange(tiny.m)).data.dtype == np.float64

    def test_float32_kept(self, tiny):
        assert Datacube.zeros(tiny, dtype=np.float32).data.dtype == np.float32

    def test_cube_is_column_major_per_band(self, tiny):
        cube = np.arange(tiny.m, dtype=np.float64).reshape(tiny.w, tiny.a, tiny.alpha)
        f = Datacube.from_array(tiny, cube)
        for s in range(tiny.w):
            for row in range(tiny.a):
                for col in range(tiny.alpha):
                    assert f.data[row + tiny.a * col + s * tiny.ell] == cube[s, row, col]
        np.testing.assert_array_equal(f.to_array(), cube)

    def test_image_is_column_major(self, tiny):
        image = np.arange(tiny.n, dtype=np.float64).reshape(tiny.gamma, tiny.xi)
        g = FpaImage.from_array(tiny, image)
        assert g.data[1 + tiny.gamma * 2] == image[1, 2]
        np.testing.assert_array_equal(g.to_array(), image)

    def test_from_array_shape_checked(self, tiny):
        with pytest.raises(DimensionError):
            Datacube.from_array(tiny, np.zeros((tiny.w, tiny.alpha, tiny.a)))

    def test_planes_view(self, tiny):
        z = EmbeddedStack(tiny, np.arange(tiny.n * tiny.w, dtype=np.float64))
        assert z.planes().shape == (tiny.w, tiny.n)
        assert z.planes()[1, 0] == tiny.n


class TestNonnegativity:
    def test_first_negative_index(self, tiny):
        data = np.ones(tiny.m)
        data[[3, 7]] = -1.0
        with pytest.raises(NegativeDataError) as info:
            validate_nonnegative(Datacube(tiny, data))
        assert info.value.index == 3
        assert info.value.category == "negative-data"

    def test_non_finite(self, tiny):
        data = np.ones(tiny.n)
        data[5] = np.inf
        with pytest.raises(NonFiniteError) as info:
            validate_nonnegative(FpaImage(tiny, data))
        assert info.value.index == 5

    def test_zero_is_valid(self, tiny):
        validate_nonnegative(Datacube.zeros(tiny))
