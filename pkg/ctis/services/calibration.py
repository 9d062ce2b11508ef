"""Calibration kernels, column sums, and synthetic kernels/scenes.

A kernel ``c_i`` is the band-i calibration image of a point source at
field-stop position (0, 0).  Shift-invariance makes every other column of
the system matrix a cyclic shift of it, so the kernel set (spatial form for
``h`` and the oracle, half-spectrum ``d_i`` for the projectors) is the
whole instrument model.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.fft
from PIL import Image

from ctis.config import settings
from ctis.errors import (
    BandMismatch,
    ConfigError,
    CountMismatch,
    NonFiniteError,
    SpotOutOfBounds,
    ZeroColumnError,
)
from ctis.models import (
    Datacube,
    FpaImage,
    SystemGeometry,
    check_geometry,
    validate_nonnegative,
)

logger = logging.getLogger(__name__)

TRUNCATE_SIGMAS = 4.0


# ---------------------------------------------------------------------------
# Kernel set & column sums
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class KernelSet:
    """Per-band kernels: ``spatial`` is ``(w, n)``, ``spectral`` is ``(w, beta)``."""

    geometry: SystemGeometry
    spatial: np.ndarray
    spectral: np.ndarray

    @classmethod
    def from_spatial(
        cls,
        geometry: SystemGeometry,
        spatial: np.ndarray,
        workers: int | None = None,
    ) -> KernelSet:
        spatial = np.ascontiguousarray(spatial)
        if spatial.dtype not in (np.float32, np.float64):
            spatial = spatial.astype(np.float64)
        if spatial.shape != (geometry.w, geometry.n):
            raise CountMismatch(
                f"kernel array shape {spatial.shape} != {(geometry.w, geometry.n)}"
            )
        spectral = scipy.fft.rfft(spatial, axis=-1, workers=workers or settings.threads)
        return cls(geometry, spatial, spectral)

    @property
    def dtype(self) -> np.dtype:
        return self.spatial.dtype

    def image(self, band: int) -> FpaImage:
        return FpaImage(self.geometry, self.spatial[band])

    def astype(self, dtype) -> KernelSet:
        """Same kernels with spectra recomputed in ``dtype``."""
        if np.dtype(dtype) == self.spatial.dtype:
            return self
        return KernelSet.from_spatial(self.geometry, self.spatial.astype(dtype))

    def subset(self, w: int) -> KernelSet:
        """The first ``w`` bands."""
        geometry = self.geometry.with_bands(w)
        return KernelSet(geometry, self.spatial[:w], self.spectral[:w])


@dataclass(frozen=True, eq=False)
class ColumnSums:
    """``h_j = sum_i H_ij``, constant within each band block."""

    geometry: SystemGeometry
    data: np.ndarray


def kernel_support_wraps(geometry: SystemGeometry, kernel: np.ndarray) -> bool:
    """True if the kernel's support, shifted by (a-1, alpha-1), leaves the FPA."""
    img = np.asarray(kernel).reshape((geometry.gamma, geometry.xi), order="F")
    rows, cols = np.nonzero(img)
    if rows.size == 0:
        return False
    return bool(
        rows.max() + geometry.a - 1 >= geometry.gamma
        or cols.max() + geometry.alpha - 1 >= geometry.xi
    )


def build_kernel_set(
    images: Sequence[FpaImage],
    geometry: SystemGeometry | None = None,
    workers: int | None = None,
) -> KernelSet:
    """Kernel set from ``w`` calibration images, used as-is (no background
    subtraction or normalisation)."""
    if geometry is None:
        if not images:
            raise CountMismatch("no calibration images given")
        geometry = images[0].geometry
    if len(images) != geometry.w:
        raise CountMismatch(f"{len(images)} calibration images for w={geometry.w} bands")

    for band, image in enumerate(images):
        check_geometry(geometry, image)
        validate_nonnegative(image)
        if kernel_support_wraps(geometry, image.data):
            logger.warning(
                "Band %d calibration support can wrap when shifted across the field stop; "
                "the circulant model is not physical at the FPA edges",
                band,
            )

    dtype = np.result_type(*(img.data.dtype for img in images))
    spatial = np.stack([img.data for img in images]).astype(dtype, copy=False)
    return KernelSet.from_spatial(geometry, spatial, workers=workers)


def column_sums(kernels: KernelSet) -> ColumnSums:
    """Every column of ``H_i = C_i E`` is a cyclic shift of ``c_i``, so each
    block of ``h`` is the constant ``sum(c_i)``."""
    sums = kernels.spatial.sum(axis=1)
    dead = np.flatnonzero(sums <= 0)
    if dead.size:
        raise ZeroColumnError(f"band {dead[0]} kernel sums to {sums[dead[0]]}; dead band")
    data = np.repeat(sums, kernels.geometry.ell)
    return ColumnSums(kernels.geometry, data)


# ---------------------------------------------------------------------------
# Synthetic kernels
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SpotSpec:
    """Diffraction-order layout for synthetic calibration images.

    One zeroth-order spot at ``center`` plus ``orders`` first-order spots on
    a ring whose radius grows by ``dispersion`` pixels per band index.
    """

    orders: int = 8
    radius: float = 6.0
    dispersion: float = 1.0
    sigma: float = 0.8
    amplitude: float = 1.0
    zeroth: float = 1.0
    jitter: float = 0.0
    center: tuple[float, float] | None = None

    def __post_init__(self) -> None:
        if self.orders < 0:
            raise ConfigError("orders must be >= 0")
        if self.sigma <= 0:
            raise ConfigError("sigma must be > 0")
        if self.radius < 0 or self.dispersion < 0:
            raise ConfigError("radius and dispersion must be >= 0")
        if self.amplitude < 0 or self.zeroth < 0:
            raise ConfigError("amplitudes must be >= 0")
        if not 0 <= self.jitter < 1:
            raise ConfigError("jitter must be in [0, 1)")
        if self.zeroth == 0 and (self.orders == 0 or self.amplitude == 0):
            raise ConfigError("spot spec renders no light")

    @classmethod
    def parse(cls, text: str) -> SpotSpec:
        """Parse ``"orders=8,radius=6,...,center=row:col"``."""
        kwargs: dict[str, object] = {}
        for item in (p.strip() for p in text.split(",")):
            if not item:
                continue
            key, sep, value = item.partition("=")
            key = key.strip()
            if not sep:
                raise ConfigError(f"spot spec item {item!r} is not key=value")
            try:
                if key == "orders":
                    kwargs[key] = int(value)
                elif key == "center":
                    row, col = value.split(":")
                    kwargs[key] = (float(row), float(col))
                elif key in ("radius", "dispersion", "sigma", "amplitude", "zeroth", "jitter"):
                    kwargs[key] = float(value)
                else:
                    raise ConfigError(f"unknown spot spec key {key!r}")
            except ValueError as exc:
                raise ConfigError(f"bad value for {key}: {value!r}") from exc
        return cls(**kwargs)


def spot_centers(
    geometry: SystemGeometry,
    spec: SpotSpec,
    band: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Analytic ``(row, col)`` centers and nominal amplitudes for one band."""
    if spec.center is not None:
        cr, cc = spec.center
    else:
        cr = (geometry.gamma - geometry.a) / 2.0
        cc = (geometry.xi - geometry.alpha) / 2.0

    centers: list[tuple[float, float]] = []
    amps: list[float] = []
    if spec.zeroth > 0:
        centers.append((cr, cc))
        amps.append(spec.zeroth)
    if spec.amplitude > 0:
        r = spec.radius + spec.dispersion * band
        for k in range(spec.orders):
            theta = 2.0 * math.pi * k / spec.orders
            centers.append((cr + r * math.sin(theta), cc + r * math.cos(theta)))
            amps.append(spec.amplitude)
    return np.array(centers, dtype=np.float64).reshape(-1, 2), np.array(amps)


def _footprint(center: float, half: float) -> tuple[int, int]:
    return math.ceil(center - half), math.floor(center + half)


def _render_spot(
    img: np.ndarray, row: float, col: float, amplitude: float, sigma: float
) -> None:
    half = TRUNCATE_SIGMAS * sigma
    r0, r1 = _footprint(row, half)
    c0, c1 = _footprint(col, half)
    rr, cc = np.meshgrid(np.arange(r0, r1 + 1), np.arange(c0, c1 + 1), indexing="ij")
    d2 = (rr - row) ** 2 + (cc - col) ** 2
    blob = amplitude / (2.0 * math.pi * sigma**2) * np.exp(-d2 / (2.0 * sigma**2))
    blob[d2 > half**2] = 0.0
    img[r0 : r1 + 1, c0 : c1 + 1] += blob


def synth_kernels(
    geometry: SystemGeometry,
    spec: SpotSpec,
    seed: int = 0,
    workers: int | None = None,
) -> KernelSet:
    """Deterministic blob kernels whose shifted support never wraps."""
    rng = np.random.default_rng(seed)
    half = TRUNCATE_SIGMAS * spec.sigma
    spatial = np.zeros((geometry.w, geometry.n), dtype=np.float64)

    for band in range(geometry.w):
        centers, amps = spot_centers(geometry, spec, band)
        img = np.zeros((geometry.gamma, geometry.xi), dtype=np.float64)
        for (row, col), amp in zip(centers, amps):
            r0, r1 = _footprint(row, half)
            c0, c1 = _footprint(col, half)
            if r0 < 0 or c0 < 0 or r1 + geometry.a - 1 >= geometry.gamma or (
                c1 + geometry.alpha - 1 >= geometry.xi
            ):
                raise SpotOutOfBounds(
                    f"band {band} spot at ({row:.2f}, {col:.2f}) covers rows {r0}..{r1}, "
                    f"cols {c0}..{c1}; shifted by ({geometry.a - 1}, {geometry.alpha - 1}) "
                    f"it leaves the {geometry.gamma}x{geometry.xi} FPA"
                )
            if spec.jitter:
                amp = amp * (1.0 + spec.jitter * rng.uniform(-1.0, 1.0))
            _render_spot(img, row, col, amp, spec.sigma)
        spatial[band] = img.ravel(order="F")

    logger.info(
        "Synthesised %d kernels (%d spots/band, seed=%d) for %s",
        geometry.w,
        len(spot_centers(geometry, spec, 0)[0]),
        seed,
        geometry.describe(),
    )
    return KernelSet.from_spatial(geometry, spatial, workers=workers)


# ---------------------------------------------------------------------------
# Synthetic scenes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SceneKind:
    """``constant:V`` | ``rgb:PATH`` | ``random:SEED``."""

    kind: str
    value: float = 0.0
    path: Path | None = None
    seed: int = 0

    @classmethod
    def parse(cls, text: str) -> SceneKind:
        kind, _, arg = text.partition(":")
        try:
            if kind == "constant":
                value = float(arg or 0.0)
                if not math.isfinite(value):
                    raise ConfigError(f"constant scene value must be finite, got {arg!r}")
                return cls("constant", value=value)
            if kind == "random":
                return cls("random", seed=int(arg or 0))
        except ValueError as exc:
            raise ConfigError(f"bad scene argument in {text!r}") from exc
        if kind == "rgb":
            if not arg:
                raise ConfigError("rgb scene needs a path: rgb:PATH")
            return cls("rgb", path=Path(arg))
        raise ConfigError(f"unknown scene kind {text!r}")


def _load_rgb(geometry: SystemGeometry, path: Path) -> np.ndarray:
    with Image.open(path) as im:
        rgb = im.convert("RGB")
        if rgb.size != (geometry.alpha, geometry.a):
            logger.warning(
                "Resizing %s from %dx%d to the %dx%d field stop",
                path, rgb.size[0], rgb.size[1], geometry.alpha, geometry.a,
            )
            rgb = rgb.resize((geometry.alpha, geometry.a), Image.Resampling.BILINEAR)
        pixels = np.asarray(rgb, dtype=np.float64)  # (a, alpha, 3), 0..255
    return pixels.transpose(2, 0, 1)


def synth_scene(geometry: SystemGeometry, kind: SceneKind) -> Datacube:
    if kind.kind == "constant":
        if not math.isfinite(kind.value):
            raise NonFiniteError(f"constant scene value {kind.value} is not finite")
        return Datacube.full(geometry, kind.value)
    if kind.kind == "random":
        rng = np.random.default_rng(kind.seed)
        return Datacube(geometry, rng.uniform(0.0, 100.0, size=geometry.m))
    if kind.kind == "rgb":
        if geometry.w != 3:
            raise BandMismatch(f"rgb scenes need w=3, geometry has w={geometry.w}")
        return Datacube.from_array(geometry, _load_rgb(geometry, kind.path))
    raise ConfigError(f"unknown scene kind {kind.kind!r}")
