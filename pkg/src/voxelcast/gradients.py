"""Discrete gradient operators used as surface normal estimators.

All operators sample the field with trilinear interpolation at unit
voxel offsets around the query position and return a normalized
direction.  Gradients whose magnitude falls below EPS_GRADIENT collapse
to the zero vector, which downstream shading treats as unlit.
"""

from __future__ import annotations

import enum

import numpy as np

from . import _kernels as _k
from .volume import Volume

EPS_GRADIENT = _k.GRAD_EPS

# Transverse smoothing plane shared by the three Sobel3D masks.  The
# mask for axis a weights offset o with o_a * SOBEL_SMOOTH[o_b][o_c],
# i.e. each mask is the x mask rotated onto its own axis; the
# differentiation direction always runs along the mask's axis.
SOBEL_SMOOTH = np.array([[1, 3, 1], [3, 6, 3], [1, 3, 1]], dtype=np.float64)


class OperatorKind(enum.Enum):
    CENTRAL_DIFFERENCE = "central"
    SOBEL3D = "sobel3d"
    ZUCKER_HUMMEL = "zucker-hummel"

    @property
    def code(self) -> int:
        return _OP_CODES[self]


_OP_CODES = {
    OperatorKind.CENTRAL_DIFFERENCE: _k.OP_CENTRAL,
    OperatorKind.SOBEL3D: _k.OP_SOBEL3D,
    OperatorKind.ZUCKER_HUMMEL: _k.OP_ZUCKER_HUMMEL,
}


def sobel3d_mask(axis: int) -> np.ndarray:
    """3x3x3 Sobel weights for one axis, indexed [di+1, dj+1, dk+1]."""
    if axis not in (0, 1, 2):
        raise ValueError(f"axis must be 0, 1 or 2, got {axis}")
    m = np.zeros((3, 3, 3))
    for i in (-1, 0, 1):
        for j in (-1, 0, 1):
            for k in (-1, 0, 1):
                o = (i, j, k)
                others = [o[a] for a in range(3) if a != axis]
                m[i + 1, j + 1, k + 1] = o[axis] * SOBEL_SMOOTH[others[0] + 1, others[1] + 1]
    return m


def zucker_hummel_mask(axis: int) -> np.ndarray:
    """3x3x3 Zucker-Hummel weights: offset component over offset length."""
    if axis not in (0, 1, 2):
        raise ValueError(f"axis must be 0, 1 or 2, got {axis}")
    m = np.zeros((3, 3, 3))
    for i in (-1, 0, 1):
        for j in (-1, 0, 1):
            for k in (-1, 0, 1):
                if i == j == k == 0:
                    continue
                norm = np.sqrt(i * i + j * j + k * k)
                m[i + 1, j + 1, k + 1] = (i, j, k)[axis] / norm
    return m


def normalize_gradient(d) -> np.ndarray:
    """Unit vector along d, or zeros when |d| <= EPS_GRADIENT."""
    dx, dy, dz = (float(c) for c in d)
    return np.array(_k.normalize3(dx, dy, dz, EPS_GRADIENT))


def _query(volume: Volume, p, op_code: int) -> np.ndarray:
    x, y, z = (float(c) for c in p)
    nx, ny, nz = volume.dims
    g = _k.grad_raw(volume.data, nx, ny, nz, x, y, z, op_code)
    return np.array(_k.normalize3(g[0], g[1], g[2], EPS_GRADIENT))


def central_difference(volume: Volume, p) -> np.ndarray:
    """Normalized two-point difference, +-1 voxel per axis."""
    return _query(volume, p, _k.OP_CENTRAL)


def sobel3d(volume: Volume, p) -> np.ndarray:
    """Normalized 26-neighbor Sobel gradient."""
    return _query(volume, p, _k.OP_SOBEL3D)


def zucker_hummel(volume: Volume, p) -> np.ndarray:
    """Normalized 26-neighbor Zucker-Hummel gradient."""
    return _query(volume, p, _k.OP_ZUCKER_HUMMEL)


def gradient(volume: Volume, p, kind: OperatorKind) -> np.ndarray:
    """Dispatch to the named operator."""
    kind = OperatorKind(kind) if not isinstance(kind, OperatorKind) else kind
    return _query(volume, p, kind.code)
