"""Instrument geometry and the vector data model shared by every module.

All vectors are flattened column-major (row index fastest):

* a datacube is ``w`` contiguous blocks of ``ell = a*alpha`` voxels, each
  block column-major over the ``a x alpha`` field stop;
* an FPA image is ``n = gamma*xi`` pixels, column-major over the sensor;
* an embedded stack is ``w`` contiguous FPA-sized planes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from ctis.errors import (
    DimensionError,
    GeometryMismatch,
    MetadataError,
    NegativeDataError,
    NonFiniteError,
)

_REAL_DTYPES = (np.dtype(np.float32), np.dtype(np.float64))


# ---------------------------------------------------------------------------
# Geometry
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SystemGeometry:
    """Field-stop, FPA and band dimensions plus the sizes derived from them."""

    a: int
    alpha: int
    gamma: int
    xi: int
    w: int
    wavelengths: tuple[float, ...] | None = None

    n: int = field(init=False)
    ell: int = field(init=False)
    m: int = field(init=False)
    beta: int = field(init=False)

    def __post_init__(self) -> None:
        for name in ("a", "alpha", "gamma", "xi", "w"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
                raise DimensionError(f"{name} must be an integer, got {value!r}")
            if value < 1:
                raise DimensionError(f"{name} must be >= 1, got {value}")
            object.__setattr__(self, name, int(value))
        if self.gamma < self.a:
            raise DimensionError(f"FPA rows gamma={self.gamma} < field-stop rows a={self.a}")
        if self.xi < self.alpha:
            raise DimensionError(
                f"FPA columns xi={self.xi} < field-stop columns alpha={self.alpha}"
            )

        if self.wavelengths is not None:
            wl = tuple(float(v) for v in self.wavelengths)
            if len(wl) != self.w:
                raise MetadataError(f"{len(wl)} wavelengths given for w={self.w} bands")
            if any(b <= a for a, b in zip(wl, wl[1:])):
                raise MetadataError("wavelengths must be strictly increasing")
            object.__setattr__(self, "wavelengths", wl)

        n = self.gamma * self.xi
        ell = self.a * self.alpha
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "ell", ell)
        object.__setattr__(self, "m", ell * self.w)
        object.__setattr__(self, "beta", n // 2 + 1)

    @cached_property
    def embed_indices(self) -> np.ndarray:
        """Position in the length ``n*w`` stack of every datacube voxel ``j``."""
        j = np.arange(self.m, dtype=np.int64)
        s = j // self.ell
        r = j - s * self.ell
        return r + (self.gamma - self.a) * (r // self.a) + s * self.n

    @property
    def dims(self) -> tuple[int, int, int, int, int]:
        return (self.a, self.alpha, self.gamma, self.xi, self.w)

    def same_shape(self, other: SystemGeometry) -> bool:
        """Dimension equality; wavelength metadata is informational only."""
        return self.dims == other.dims

    def with_bands(self, w: int) -> SystemGeometry:
        """Geometry restricted to the first ``w`` bands."""
        if not 1 <= w <= self.w:
            raise DimensionError(f"cannot take {w} bands out of {self.w}")
        wl = self.wavelengths[:w] if self.wavelengths is not None else None
        return SystemGeometry(self.a, self.alpha, self.gamma, self.xi, w, wl)

    def describe(self) -> str:
        return (
            f"a={self.a} alpha={self.alpha} gamma={self.gamma} xi={self.xi} "
            f"w={self.w} (n={self.n}, ell={self.ell}, m={self.m})"
        )


def make_geometry(
    a: int,
    alpha: int,
    gamma: int,
    xi: int,
    w: int,
    wavelengths: Sequence[float] | None = None,
) -> SystemGeometry:
    """Build and validate a geometry."""
    wl = tuple(wavelengths) if wavelengths is not None else None
    return SystemGeometry(a, alpha, gamma, xi, w, wl)


def parse_geometry(text: str, wavelengths: Sequence[float] | None = None) -> SystemGeometry:
    """Parse ``"a,alpha,gamma,xi,w"``."""
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if len(parts) != 5:
        raise DimensionError(f"geometry needs 5 comma-separated integers, got {text!r}")
    try:
        a, alpha, gamma, xi, w = (int(p) for p in parts)
    except ValueError as exc:
        raise DimensionError(f"geometry must be integers: {text!r}") from exc
    return make_geometry(a, alpha, gamma, xi, w, wavelengths)


def parse_wavelengths(text: str, w: int) -> tuple[float, ...]:
    """Parse ``"lo:hi"`` (w evenly spaced centers) or an explicit list."""
    try:
        if ":" in text:
            lo, hi = (float(v) for v in text.split(":", 1))
            return tuple(float(v) for v in np.linspace(lo, hi, w))
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise MetadataError(f"cannot parse wavelengths {text!r}") from exc


# ---------------------------------------------------------------------------
# Vectors
# ---------------------------------------------------------------------------


def _as_vector(data: np.ndarray | Sequence[float], length: int, what: str) -> np.ndarray:
    arr = np.asarray(data)
    if arr.dtype not in _REAL_DTYPES:
        arr = arr.astype(np.float64)
    if arr.ndim != 1:
        arr = arr.reshape(-1)
    if arr.shape[0] != length:
        raise DimensionError(f"{what} needs {length} values, got {arr.shape[0]}")
    return arr


@dataclass(frozen=True, eq=False)
class Datacube:
    """The unknown ``f``: ``w`` blocks of ``ell`` voxels."""

    geometry: SystemGeometry
    data: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "data", _as_vector(self.data, self.geometry.m, "datacube"))

    @classmethod
    def full(cls, geometry: SystemGeometry, value: float, dtype=np.float64) -> Datacube:
        return cls(geometry, np.full(geometry.m, value, dtype=dtype))

    @classmethod
    def zeros(cls, geometry: SystemGeometry, dtype=np.float64) -> Datacube:
        return cls(geometry, np.zeros(geometry.m, dtype=dtype))

    @classmethod
    def from_array(cls, geometry: SystemGeometry, cube: np.ndarray) -> Datacube:
        """From a band-first ``(w, a, alpha)`` array."""
        cube = np.asarray(cube)
        expected = (geometry.w, geometry.a, geometry.alpha)
        if cube.shape != expected:
            raise DimensionError(f"cube shape {cube.shape} != {expected}")
        return cls(geometry, cube.transpose(0, 2, 1).reshape(-1))

    def to_array(self) -> np.ndarray:
        g = self.geometry
        return self.data.reshape(g.w, g.alpha, g.a).transpose(0, 2, 1)

    def blocks(self) -> np.ndarray:
        """``(w, ell)`` view of the per-band blocks."""
        return self.data.reshape(self.geometry.w, self.geometry.ell)

    def astype(self, dtype) -> Datacube:
        return Datacube(self.geometry, self.data.astype(dtype, copy=False))


@dataclass(frozen=True, eq=False)
class FpaImage:
    """A sensor image (roles ``g``, ``u``, ``g^(k)``)."""

    geometry: SystemGeometry
    data: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "data", _as_vector(self.data, self.geometry.n, "FPA image"))

    @classmethod
    def zeros(cls, geometry: SystemGeometry, dtype=np.float64) -> FpaImage:
        return cls(geometry, np.zeros(geometry.n, dtype=dtype))

    @classmethod
    def from_array(cls, geometry: SystemGeometry, image: np.ndarray) -> FpaImage:
        """From a ``(gamma, xi)`` array."""
        image = np.asarray(image)
        if image.shape != (geometry.gamma, geometry.xi):
            raise DimensionError(
                f"image shape {image.shape} != {(geometry.gamma, geometry.xi)}"
            )
        return cls(geometry, image.ravel(order="F"))

    def to_array(self) -> np.ndarray:
        return self.data.reshape((self.geometry.gamma, self.geometry.xi), order="F")

    def astype(self, dtype) -> FpaImage:
        return FpaImage(self.geometry, self.data.astype(dtype, copy=False))


@dataclass(frozen=True, eq=False)
class EmbeddedStack:
    """``w`` FPA-sized planes: ``v = (I_w (x) E) f`` or the adjoint-side ``z``."""

    geometry: SystemGeometry
    data: np.ndarray

    def __post_init__(self) -> None:
        g = self.geometry
        object.__setattr__(self, "data", _as_vector(self.data, g.n * g.w, "embedded stack"))

    @classmethod
    def zeros(cls, geometry: SystemGeometry, dtype=np.float64) -> EmbeddedStack:
        return cls(geometry, np.zeros(geometry.n * geometry.w, dtype=dtype))

    def planes(self) -> np.ndarray:
        """``(w, n)`` view of the planes."""
        return self.data.reshape(self.geometry.w, self.geometry.n)


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


def validate_finite(x: Datacube | FpaImage | EmbeddedStack) -> None:
    bad = np.flatnonzero(~np.isfinite(x.data))
    if bad.size:
        raise NonFiniteError(f"non-finite value at index {bad[0]}", index=int(bad[0]))


def validate_nonnegative(x: Datacube | FpaImage | EmbeddedStack) -> None:
    """Raise unless every entry is finite and >= 0."""
    validate_finite(x)
    neg = np.flatnonzero(x.data < 0)
    if neg.size:
        raise NegativeDataError(
            f"negative value {float(x.data[neg[0]])} at index {neg[0]}", index=int(neg[0])
        )


def check_geometry(expected: SystemGeometry, *items: object) -> None:
    """Raise GeometryMismatch unless every item's geometry matches ``expected``."""
    for item in items:
        other = getattr(item, "geometry", item)
        if not expected.same_shape(other):
            raise GeometryMismatch(
                f"geometry {other.describe()} does not match {expected.describe()}"
            )
