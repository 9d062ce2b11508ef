"""Matrix-free forward and backward projection.

Forward::

    g = F^-1( sum_i d_i * F(v_i) ),   v = (I_w (x) E) f

Backward (conjugate-spectrum form, half spectra only)::

    z_i = F^-1( conj(d_i) * F(u) ),   H^T u = (I_w (x) E)^T z

``F`` is the unnormalised real-to-complex transform of length ``n`` keeping
``beta = n//2 + 1`` bins; ``F^-1`` applies the ``1/n``.  Per-band transforms
run batched over a ``(w, n)`` array.  With a single worker ``numpy.fft``
writes straight into the workspace buffers; with more, ``scipy.fft`` worker
threads compute the batch and the result is copied into the same buffers.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.fft

from ctis.config import settings
from ctis.errors import DimensionError
from ctis.models import (
    Datacube,
    EmbeddedStack,
    FpaImage,
    SystemGeometry,
    check_geometry,
)
from ctis.services.calibration import KernelSet
from ctis.services.index_map import embed, extract

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ProjectorWorkspace:
    """Reusable buffers for one in-flight projection at a time."""

    geometry: SystemGeometry
    v: np.ndarray  # n*w, embedded datacube
    spectra: np.ndarray  # (w, beta), per-band products
    acc: np.ndarray  # beta, forward accumulator
    U: np.ndarray  # beta, spectrum of u
    z: np.ndarray  # n*w, adjoint-side stack

    @classmethod
    def for_geometry(cls, geometry: SystemGeometry, dtype=np.float64) -> ProjectorWorkspace:
        real = np.dtype(dtype)
        cplx = np.result_type(real, np.complex64)
        size = geometry.n * geometry.w
        return cls(
            geometry=geometry,
            v=np.zeros(size, dtype=real),
            spectra=np.zeros((geometry.w, geometry.beta), dtype=cplx),
            acc=np.zeros(geometry.beta, dtype=cplx),
            U=np.zeros(geometry.beta, dtype=cplx),
            z=np.zeros(size, dtype=real),
        )

    @property
    def dtype(self) -> np.dtype:
        return self.v.dtype

    @property
    def nbytes(self) -> int:
        return sum(b.nbytes for b in (self.v, self.spectra, self.acc, self.U, self.z))


def _workspace_for(kernels: KernelSet, ws: ProjectorWorkspace | None) -> ProjectorWorkspace:
    if ws is None:
        return ProjectorWorkspace.for_geometry(kernels.geometry, kernels.dtype)
    check_geometry(kernels.geometry, ws)
    return ws


def _output(shape: int, dtype: np.dtype, out: np.ndarray | None) -> np.ndarray:
    if out is None:
        return np.empty(shape, dtype=dtype)
    if out.shape != (shape,):
        raise DimensionError(f"output buffer shape {out.shape} != {(shape,)}")
    return out


def _rfft_rows(x: np.ndarray, out: np.ndarray, workers: int) -> np.ndarray:
    """Row-wise half-spectrum transform of ``x`` written into ``out``."""
    if workers > 1 and x.ndim > 1 and x.shape[0] > 1:
        # threaded transforms come from scipy.fft, which has no out=
        np.copyto(out, scipy.fft.rfft(x, axis=-1, workers=workers), casting="same_kind")
    else:
        np.fft.rfft(x, axis=-1, out=out)
    return out


def _irfft_rows(x: np.ndarray, n: int, out: np.ndarray, workers: int) -> np.ndarray:
    if workers > 1 and x.ndim > 1 and x.shape[0] > 1:
        np.copyto(out, scipy.fft.irfft(x, n=n, axis=-1, workers=workers), casting="same_kind")
    else:
        np.fft.irfft(x, n=n, axis=-1, out=out)
    return out


def forward(
    kernels: KernelSet,
    f: Datacube,
    ws: ProjectorWorkspace | None = None,
    workers: int | None = None,
    out: np.ndarray | None = None,
) -> FpaImage:
    """``g = H f``."""
    g = kernels.geometry
    check_geometry(g, f)
    ws = _workspace_for(kernels, ws)
    workers = workers or settings.threads
    image = _output(g.n, ws.dtype, out)

    v = embed(f, out=ws.v)
    _rfft_rows(v.planes(), ws.spectra, workers)
    np.multiply(ws.spectra, kernels.spectral, out=ws.spectra)
    # band-major reduction into a single accumulator
    np.copyto(ws.acc, ws.spectra[0])
    for band in range(1, g.w):
        np.add(ws.acc, ws.spectra[band], out=ws.acc)
    np.fft.irfft(ws.acc, n=g.n, out=image)
    return FpaImage(g, image)


def backward(
    kernels: KernelSet,
    u: FpaImage,
    ws: ProjectorWorkspace | None = None,
    workers: int | None = None,
    out: np.ndarray | None = None,
) -> Datacube:
    """``H^T u``; ``F(u)`` is computed once and shared by every band."""
    g = kernels.geometry
    check_geometry(g, u)
    ws = _workspace_for(kernels, ws)
    workers = workers or settings.threads

    np.fft.rfft(u.data.astype(ws.dtype, copy=False), out=ws.U)
    np.conjugate(kernels.spectral, out=ws.spectra)
    np.multiply(ws.spectra, ws.U, out=ws.spectra)
    _irfft_rows(ws.spectra, g.n, ws.z.reshape(g.w, g.n), workers)
    return extract(EmbeddedStack(g, ws.z), out=out)


def full_spectrum_planes(
    kernels: KernelSet,
    u: FpaImage,
    workers: int | None = None,
) -> np.ndarray:
    """Complex ``(w, n)`` planes ``F D_i F^-1 u`` before the real cast.

    Uses full-length complex transforms in the operator order of the
    circulant-transpose identity; kept as a cross-check for :func:`backward`.
    """
    g = kernels.geometry
    check_geometry(g, u)
    workers = workers or settings.threads
    d_full = scipy.fft.fft(kernels.spatial, axis=-1, workers=workers)
    u_inv = scipy.fft.ifft(u.data, workers=workers)
    return scipy.fft.fft(d_full * u_inv, axis=-1, workers=workers)


def full_spectrum_backward(
    kernels: KernelSet,
    u: FpaImage,
    ws: ProjectorWorkspace | None = None,
    workers: int | None = None,
    out: np.ndarray | None = None,
) -> Datacube:
    """Same contract as :func:`backward`, computed with full complex spectra."""
    g = kernels.geometry
    ws = _workspace_for(kernels, ws)
    planes = full_spectrum_planes(kernels, u, workers=workers)
    if settings.debug_checks:
        residue = imaginary_residue(planes)
        if residue > settings.imag_residue_budget:
            logger.warning("Imaginary residue %.3e exceeds budget before real cast", residue)
    np.copyto(ws.z.reshape(g.w, g.n), planes.real, casting="same_kind")
    return extract(EmbeddedStack(g, ws.z), out=out)


def imaginary_residue(planes: np.ndarray) -> float:
    """``||Im|| / ||Re||`` of complex projector output (0 for all-zero output)."""
    real_norm = float(np.linalg.norm(planes.real))
    imag_norm = float(np.linalg.norm(planes.imag))
    return imag_norm / real_norm if real_norm > 0 else imag_norm
