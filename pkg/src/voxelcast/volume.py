"""Voxel dataset handling: raw slice stacks, synthetic phantoms, sampling.

A dataset is a dense grid of unsigned 16-bit scalars (CT reconstructions
use the low 12 bits).  Grid index (i, j, k) sits at world position
((i + 0.5) * spacing_x, ...) so the volume occupies the box from the
origin to dims * spacing.  Continuous sample positions are given in
voxel coordinates, i.e. world / spacing - 0.5.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels as _k

MAX_12BIT = 4095


class InterpolationMode(enum.Enum):
    NEAREST = "nearest"
    LINEAR = "linear"
    TRILINEAR = "trilinear"

    @property
    def code(self) -> int:
        return _INTERP_CODES[self]


_INTERP_CODES = {
    InterpolationMode.NEAREST: _k.INTERP_NEAREST,
    InterpolationMode.LINEAR: _k.INTERP_LINEAR,
    InterpolationMode.TRILINEAR: _k.INTERP_TRILINEAR,
}


class PhantomKind(enum.Enum):
    SOLID_SPHERE = "sphere"
    SPHERICAL_SHELL = "shell"
    AXIS_RAMP = "ramp"
    EMPTY = "empty"


@dataclass(frozen=True)
class Volume:
    """Immutable voxel grid.

    data is flat uint16 with x fastest, then y, then z:
    value(i, j, k) = data[i + dims[0] * (j + dims[1] * k)].
    """

    dims: tuple[int, int, int]
    data: np.ndarray
    value_min: int
    value_max: int
    spacing: tuple[float, float, float] = (1.0, 1.0, 1.0)

    @classmethod
    def from_array(cls, arr: np.ndarray, spacing=(1.0, 1.0, 1.0)) -> "Volume":
        """Build from a 3-d array indexed [z, y, x]."""
        if arr.ndim != 3:
            raise ValueError(f"expected a 3-d array, got shape {arr.shape}")
        if arr.size == 0:
            raise ValueError("volume must contain at least one voxel")
        sx, sy, sz = (float(s) for s in spacing)
        if sx <= 0 or sy <= 0 or sz <= 0:
            raise ValueError(f"spacing must be positive, got {spacing}")
        data = np.array(arr, dtype=np.uint16, order="C", copy=True).ravel()
        data.setflags(write=False)
        nz, ny, nx = arr.shape
        return cls(
            dims=(int(nx), int(ny), int(nz)),
            data=data,
            value_min=int(data.min()),
            value_max=int(data.max()),
            spacing=(sx, sy, sz),
        )

    def as_array(self) -> np.ndarray:
        """Read-only [z, y, x] view of the grid."""
        nx, ny, nz = self.dims
        return self.data.reshape(nz, ny, nx)

    @property
    def extent(self) -> tuple[float, float, float]:
        """World-space size of the volume box."""
        return tuple(n * s for n, s in zip(self.dims, self.spacing))

    def value_at(self, i: int, j: int, k: int) -> int:
        nx, ny, nz = self.dims
        if not (0 <= i < nx and 0 <= j < ny and 0 <= k < nz):
            raise IndexError(f"voxel index {(i, j, k)} outside dims {self.dims}")
        return int(self.data[i + nx * (j + ny * k)])


def lerp(f0: float, f1: float, t: float) -> float:
    """Linear blend f0 + (f1 - f0) * t."""
    return float(_k.lerp(float(f0), float(f1), float(t)))


def sample(volume: Volume, p, mode: InterpolationMode = InterpolationMode.TRILINEAR) -> float:
    """Field value at voxel-space position p; outside the lattice it is 0."""
    x, y, z = (float(c) for c in p)
    if not (math.isfinite(x) and math.isfinite(y) and math.isfinite(z)):
        raise ValueError(f"sample position must be finite, got {p!r}")
    nx, ny, nz = volume.dims
    return float(_k.sample_any(volume.data, nx, ny, nz, x, y, z, mode.code))


def make_phantom(kind, dims, **params) -> Volume:
    """Synthesize a test dataset.

    Kinds and their parameters:
      sphere: radius, value (default 1000)
      shell:  r_inner, r_outer, value (default 1000)
      ramp:   axis (default 0), scale (default 1.0), values floor(scale * index)
      empty:  no parameters
    """
    kind = PhantomKind(kind) if not isinstance(kind, PhantomKind) else kind
    if isinstance(dims, int):
        dims = (dims, dims, dims)
    nx, ny, nz = (int(d) for d in dims)
    if nx <= 0 or ny <= 0 or nz <= 0:
        raise ValueError(f"phantom dims must be positive, got {dims}")
    spacing = params.pop("spacing", (1.0, 1.0, 1.0))

    zi, yi, xi = np.meshgrid(
        np.arange(nz, dtype=np.float64),
        np.arange(ny, dtype=np.float64),
        np.arange(nx, dtype=np.float64),
        indexing="ij",
    )
    cx, cy, cz = (nx - 1) / 2.0, (ny - 1) / 2.0, (nz - 1) / 2.0

    if kind is PhantomKind.EMPTY:
        _reject_extra(params, kind)
        arr = np.zeros((nz, ny, nx), np.uint16)
    elif kind is PhantomKind.SOLID_SPHERE:
        radius = float(params.pop("radius"))
        value = _quantized_value(params.pop("value", 1000))
        _reject_extra(params, kind)
        if radius <= 0:
            raise ValueError(f"radius must be positive, got {radius}")
        if radius > (min(nx, ny, nz) - 1) / 2.0:
            raise ValueError(f"radius {radius} does not fit inside dims {dims}")
        r2 = (xi - cx) ** 2 + (yi - cy) ** 2 + (zi - cz) ** 2
        arr = np.where(r2 <= radius * radius, value, 0).astype(np.uint16)
    elif kind is PhantomKind.SPHERICAL_SHELL:
        r_inner = float(params.pop("r_inner"))
        r_outer = float(params.pop("r_outer"))
        value = _quantized_value(params.pop("value", 1000))
        _reject_extra(params, kind)
        if not 0 < r_inner < r_outer:
            raise ValueError(f"need 0 < r_inner < r_outer, got {r_inner}, {r_outer}")
        if r_outer > (min(nx, ny, nz) - 1) / 2.0:
            raise ValueError(f"r_outer {r_outer} does not fit inside dims {dims}")
        r2 = (xi - cx) ** 2 + (yi - cy) ** 2 + (zi - cz) ** 2
        mask = (r2 >= r_inner * r_inner) & (r2 <= r_outer * r_outer)
        arr = np.where(mask, value, 0).astype(np.uint16)
    else:
        axis = int(params.pop("axis", 0))
        scale = float(params.pop("scale", 1.0))
        _reject_extra(params, kind)
        if axis not in (0, 1, 2):
            raise ValueError(f"ramp axis must be 0, 1 or 2, got {axis}")
        if scale <= 0:
            raise ValueError(f"ramp scale must be positive, got {scale}")
        coord = (xi, yi, zi)[axis]
        arr = np.clip(np.floor(scale * coord), 0, MAX_12BIT).astype(np.uint16)

    return Volume.from_array(arr, spacing=spacing)


def _quantized_value(v) -> int:
    iv = int(round(float(v)))
    if not 0 <= iv <= MAX_12BIT:
        raise ValueError(f"voxel value {v} outside [0, {MAX_12BIT}]")
    return iv


def _reject_extra(params: dict, kind: PhantomKind) -> None:
    if params:
        raise ValueError(f"unknown {kind.value} phantom parameters: {sorted(params)}")


def _slice_path(pattern: str, index: int) -> str:
    try:
        path = pattern.format(index=index)
    except (KeyError, IndexError, ValueError) as exc:
        raise ValueError(f"bad slice pattern {pattern!r}: {exc}") from exc
    return path


def load_raw_slices(
    pattern: str,
    slice_width: int,
    slice_height: int,
    slice_count: int,
    endianness: str = "little",
    *,
    first_index: int = 0,
    strict_12bit: bool = False,
    spacing=(1.0, 1.0, 1.0),
) -> Volume:
    """Load a stack of headerless uint16 slice files into one volume.

    pattern must contain an ``{index}`` placeholder (format-style, e.g.
    ``ct.vol.{index:03d}``).  Each file holds slice_width * slice_height
    little- or big-endian uint16 values, row-major with x fastest.  Slice
    k of the volume comes from index first_index + k.
    """
    if slice_width <= 0 or slice_height <= 0 or slice_count <= 0:
        raise ValueError(
            f"slice geometry must be positive, got {slice_width}x{slice_height}x{slice_count}"
        )
    if endianness not in ("little", "big"):
        raise ValueError(f"endianness must be 'little' or 'big', got {endianness!r}")
    if slice_count > 1 and _slice_path(pattern, first_index) == _slice_path(pattern, first_index + 1):
        raise ValueError(f"slice pattern {pattern!r} has no {{index}} placeholder")

    dtype = np.dtype("<u2" if endianness == "little" else ">u2")
    expected = slice_width * slice_height * 2
    arr = np.empty((slice_count, slice_height, slice_width), np.uint16)
    for k in range(slice_count):
        path = _slice_path(pattern, first_index + k)
        with open(path, "rb") as fh:
            raw = fh.read(expected + 1)
        if len(raw) != expected:
            raise OSError(
                f"{path}: expected {expected} bytes "
                f"({slice_width}x{slice_height} uint16), found {len(raw)}"
            )
        arr[k] = np.frombuffer(raw, dtype=dtype).reshape(slice_height, slice_width)

    if strict_12bit and arr.max() > MAX_12BIT:
        raise ValueError(
            f"dataset contains value {int(arr.max())} above 12-bit maximum {MAX_12BIT}"
        )
    return Volume.from_array(arr, spacing=spacing)


def save_raw_slices(
    volume: Volume,
    pattern: str,
    endianness: str = "little",
    *,
    first_index: int = 0,
) -> list[str]:
    """Write one headerless uint16 file per z-slice; returns the paths."""
    if endianness not in ("little", "big"):
        raise ValueError(f"endianness must be 'little' or 'big', got {endianness!r}")
    nx, ny, nz = volume.dims
    if nz > 1 and _slice_path(pattern, first_index) == _slice_path(pattern, first_index + 1):
        raise ValueError(f"slice pattern {pattern!r} has no {{index}} placeholder")
    dtype = np.dtype("<u2" if endianness == "little" else ">u2")
    arr = volume.as_array()
    paths = []
    for k in range(nz):
        path = _slice_path(pattern, first_index + k)
        arr[k].astype(dtype).tofile(path)
        paths.append(path)
    return paths
