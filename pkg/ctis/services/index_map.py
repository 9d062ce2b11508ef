"""Multiplication by ``(I_w (x) E)`` and its transpose as pure data movement.

``E`` places an ``a x alpha`` field-stop block into the top-left corner of
the ``gamma x xi`` FPA.  With column-major vectors, voxel ``j`` of band
``s`` lands at::

    i = j - s*ell + (gamma - a) * ((j - s*ell) // a) + s*n

The map is injective, so both directions are a single gather/scatter over
``geometry.embed_indices`` with no arithmetic on the values.
"""

from __future__ import annotations

import numpy as np

from ctis.errors import DimensionError
from ctis.models import Datacube, EmbeddedStack, SystemGeometry


def embed_index(geometry: SystemGeometry, j: int) -> int:
    """Scalar form of the forward map, for callers that need one index."""
    if not 0 <= j < geometry.m:
        raise DimensionError(f"voxel index {j} outside 0..{geometry.m - 1}")
    s, r = divmod(j, geometry.ell)
    return r + (geometry.gamma - geometry.a) * (r // geometry.a) + s * geometry.n


def embed(f: Datacube, out: np.ndarray | None = None) -> EmbeddedStack:
    """``v = (I_w (x) E) f``.

    ``out`` may be a reusable length ``n*w`` buffer; it is zero-filled on
    every call before the scatter.
    """
    g = f.geometry
    size = g.n * g.w
    if out is None:
        out = np.zeros(size, dtype=f.data.dtype)
    else:
        if out.shape != (size,):
            raise DimensionError(f"embed buffer has shape {out.shape}, need ({size},)")
        out.fill(0)
    out[g.embed_indices] = f.data
    return EmbeddedStack(g, out)


def extract(z: EmbeddedStack, out: np.ndarray | None = None) -> Datacube:
    """``zeta = (I_w (x) E)^T z``: gather the ``m`` field-stop positions."""
    g = z.geometry
    if out is None:
        out = np.empty(g.m, dtype=z.data.dtype)
    elif out.shape != (g.m,):
        raise DimensionError(f"extract buffer has shape {out.shape}, need ({g.m},)")
    # indices are always in range
    np.take(z.data, g.embed_indices, out=out, mode="clip")
    return Datacube(g, out)


def embedding_matrix(geometry: SystemGeometry) -> np.ndarray:
    """Dense ``n x ell`` matrix ``E = [I_alpha (x) Q; 0]`` with ``Q = [I_a; 0]``.

    Built literally from the block definitions, for cross-checking the maps
    on small geometries.
    """
    q = np.zeros((geometry.gamma, geometry.a))
    q[: geometry.a, : geometry.a] = np.eye(geometry.a)
    top = np.kron(np.eye(geometry.alpha), q)
    e = np.zeros((geometry.n, geometry.ell))
    e[: top.shape[0], :] = top
    return e
