"""Explicit system matrix and brute-force projections.

Column ``j`` of ``H`` (band ``s = j // ell``) is the kernel ``c_s`` cyclically
shifted by the embed index of ``j`` within its block, i.e. ``H_s = C_s E``.
This is the ground truth the spectral projector is checked against and the
"bf" arm of the benchmarks.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse

from ctis.config import settings
from ctis.errors import SizeCapExceeded
from ctis.models import Datacube, FpaImage, SystemGeometry, check_geometry
from ctis.services.calibration import ColumnSums, KernelSet
from ctis.services.solver import em_ratio, em_update

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class DenseSystemMatrix:
    """``n x m`` matrix, dense ndarray or CSC sparse array."""

    geometry: SystemGeometry
    matrix: np.ndarray | scipy.sparse.csc_array

    @property
    def is_sparse(self) -> bool:
        return scipy.sparse.issparse(self.matrix)

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    @property
    def nbytes(self) -> int:
        if self.is_sparse:
            m = self.matrix
            return m.data.nbytes + m.indices.nbytes + m.indptr.nbytes
        return self.matrix.nbytes

    def column_sums(self) -> np.ndarray:
        return np.asarray(self.matrix.sum(axis=0)).ravel()

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray() if self.is_sparse else np.asarray(self.matrix)


def build_dense_h(
    kernels: KernelSet,
    cap: int | None = None,
    dense_max_n: int | None = None,
) -> DenseSystemMatrix:
    """Assemble ``H`` column by column from cyclic shifts of the kernels."""
    g = kernels.geometry
    cap = settings.oracle_cap if cap is None else cap
    dense_max_n = settings.dense_max_n if dense_max_n is None else dense_max_n
    if g.n * g.w > cap:
        raise SizeCapExceeded(f"n*w = {g.n * g.w} exceeds the oracle cap {cap}")

    offsets = g.embed_indices[: g.ell]
    block_cols = np.arange(g.ell)
    rows_all, cols_all, vals_all = [], [], []
    for s in range(g.w):
        kernel = kernels.spatial[s]
        support = np.flatnonzero(kernel)
        rows = (support[None, :] + offsets[:, None]) % g.n
        cols = np.broadcast_to((s * g.ell + block_cols)[:, None], rows.shape)
        vals = np.broadcast_to(kernel[support][None, :], rows.shape)
        rows_all.append(rows.ravel())
        cols_all.append(cols.ravel())
        vals_all.append(vals.ravel())

    rows = np.concatenate(rows_all)
    cols = np.concatenate(cols_all)
    vals = np.concatenate(vals_all)
    if g.n <= dense_max_n:
        matrix = np.zeros((g.n, g.m), dtype=kernels.dtype)
        matrix[rows, cols] = vals
    else:
        matrix = scipy.sparse.csc_array((vals, (rows, cols)), shape=(g.n, g.m))

    h = DenseSystemMatrix(g, matrix)
    logger.info(
        "Built %s system matrix %dx%d (%.1f MiB) for %s",
        "sparse" if h.is_sparse else "dense", g.n, g.m, h.nbytes / 2**20, g.describe(),
    )
    return h


def bf_forward(H: DenseSystemMatrix, f: Datacube) -> FpaImage:
    check_geometry(H.geometry, f)
    return FpaImage(H.geometry, H.matrix @ f.data)


def bf_backward(H: DenseSystemMatrix, u: FpaImage) -> Datacube:
    check_geometry(H.geometry, u)
    return Datacube(H.geometry, H.matrix.T @ u.data)


def bf_em_step(
    H: DenseSystemMatrix,
    h: ColumnSums,
    f: Datacube,
    g: FpaImage,
    epsilon: float | None = None,
) -> Datacube:
    """One literal EM update with the solver's zero-division policy."""
    check_geometry(H.geometry, h, f, g)
    if epsilon is None:
        epsilon = settings.epsilon_for("f32" if f.data.dtype == np.float32 else "f64")
    projected = np.maximum(H.matrix @ f.data, 0)
    ratio = em_ratio(g.data, projected, epsilon)
    zeta = H.matrix.T @ ratio
    return Datacube(H.geometry, em_update(f.data, h.data, zeta))


def shifted_calibration_image(kernels: KernelSet, band: int, row: int, col: int) -> np.ndarray:
    """Band kernel image moved ``(row, col)`` pixels on the FPA, zero-filled.

    Equals the matching column of ``H`` whenever the kernel support does not
    wrap.
    """
    g = kernels.geometry
    img = kernels.spatial[band].reshape((g.gamma, g.xi), order="F")
    out = np.zeros_like(img)
    out[row:, col:] = img[: g.gamma - row, : g.xi - col]
    return out
