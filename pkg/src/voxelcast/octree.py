"""Min/max octree over the voxel grid for empty-space skipping.

Each node covers a half-open voxel box [lo, hi) and stores two value
ranges: (vmin, vmax) over exactly its own voxels and (smin, smax) over
the box padded by one voxel on every side.  Interpolated samples taken
inside a node's world box can read neighbor voxels across its faces, so
skip and detail decisions use the padded range; the exact range is what
subdivision and clients reason about.

Nodes split in half per axis (2 to 8 children) until the block is
uniform, reaches min_block voxels on its longest side, or hits
max_depth.  Build and traversal both use explicit stacks.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels as _k
from .volume import Volume


@dataclass
class OctreeNode:
    lo: tuple[int, int, int]
    hi: tuple[int, int, int]
    vmin: int
    vmax: int
    smin: int
    smax: int
    depth: int
    children: list["OctreeNode"] = field(default_factory=list)

    @property
    def is_leaf(self) -> bool:
        return not self.children


@dataclass
class Octree:
    root: OctreeNode
    volume_dims: tuple[int, int, int]
    value_range: tuple[int, int]
    min_block: int
    max_depth: int
    node_count: int
    _flat: tuple | None = None


def build_octree(volume: Volume, min_block: int = 4, max_depth: int = 8) -> Octree:
    """Top-down subdivision of the full grid."""
    if min_block < 1:
        raise ValueError(f"min_block must be >= 1, got {min_block}")
    if not 0 <= max_depth <= 16:
        raise ValueError(f"max_depth must be within [0, 16], got {max_depth}")
    arr = volume.as_array()
    nx, ny, nz = volume.dims

    def ranges(lo, hi):
        block = arr[lo[2]:hi[2], lo[1]:hi[1], lo[0]:hi[0]]
        vmin, vmax = int(block.min()), int(block.max())
        pad = arr[
            max(lo[2] - 1, 0):min(hi[2] + 1, nz),
            max(lo[1] - 1, 0):min(hi[1] + 1, ny),
            max(lo[0] - 1, 0):min(hi[0] + 1, nx),
        ]
        return vmin, vmax, int(pad.min()), int(pad.max())

    root = OctreeNode((0, 0, 0), (nx, ny, nz), *ranges((0, 0, 0), (nx, ny, nz)), depth=0)
    count = 1
    stack = [root]
    while stack:
        node = stack.pop()
        ext = tuple(h - l for l, h in zip(node.lo, node.hi))
        if node.vmin == node.vmax or max(ext) <= min_block or node.depth >= max_depth:
            continue
        cuts = []
        for a in range(3):
            if ext[a] >= 2:
                cuts.append((node.lo[a], node.lo[a] + ext[a] // 2, node.hi[a]))
            else:
                cuts.append((node.lo[a], node.hi[a], None))
        for zc in _spans(cuts[2]):
            for yc in _spans(cuts[1]):
                for xc in _spans(cuts[0]):
                    lo = (xc[0], yc[0], zc[0])
                    hi = (xc[1], yc[1], zc[1])
                    child = OctreeNode(lo, hi, *ranges(lo, hi), depth=node.depth + 1)
                    node.children.append(child)
                    count += 1
                    stack.append(child)
    return Octree(
        root=root,
        volume_dims=volume.dims,
        value_range=(volume.value_min, volume.value_max),
        min_block=min_block,
        max_depth=max_depth,
        node_count=count,
    )


def _spans(cut):
    lo, mid, hi = cut
    if hi is None:
        return [(lo, mid)]
    return [(lo, mid), (mid, hi)]


def flat_arrays(tree: Octree):
    """Array form consumed by the traversal kernels: per-node voxel
    bounds, exact ranges, padded ranges, and child indices (-1 padded)."""
    if tree._flat is not None:
        return tree._flat
    nodes: list[OctreeNode] = []
    stack = [tree.root]
    while stack:
        n = stack.pop()
        nodes.append(n)
        stack.extend(n.children)
    index = {id(n): i for i, n in enumerate(nodes)}
    cnt = len(nodes)
    nbounds = np.empty((cnt, 6), np.int32)
    vminmax = np.empty((cnt, 2), np.float64)
    sminmax = np.empty((cnt, 2), np.float64)
    nchildren = np.full((cnt, 8), -1, np.int32)
    for i, n in enumerate(nodes):
        nbounds[i, :3] = n.lo
        nbounds[i, 3:] = n.hi
        vminmax[i] = (n.vmin, n.vmax)
        sminmax[i] = (n.smin, n.smax)
        for c, ch in enumerate(n.children):
            nchildren[i, c] = index[id(ch)]
    tree._flat = (nbounds, vminmax, sminmax, nchildren)
    return tree._flat


def skip_empty(ray, tree: Octree, window, interval, spacing=(1.0, 1.0, 1.0)) -> list[tuple[float, float]]:
    """Merged, ascending t-intervals of leaves whose padded value range
    overlaps the window, clipped to interval."""
    nbounds, _vm, sminmax, nchildren = flat_arrays(tree)
    org = np.ascontiguousarray(ray.origin, np.float64)
    dirv = np.ascontiguousarray(ray.direction, np.float64)
    sp = np.array(spacing, np.float64)
    stack = np.empty(512, np.int32)
    seg0 = np.empty(4096, np.float64)
    seg1 = np.empty(4096, np.float64)
    nseg = _k.collect_segments(
        nbounds, sminmax, nchildren, sp, org, dirv,
        float(interval[0]), float(interval[1]),
        float(window.low), float(window.high),
        stack, seg0, seg1,
    )
    return [(float(seg0[i]), float(seg1[i])) for i in range(nseg)]


def adaptive_step(
    tree: Octree,
    position,
    base_step: float,
    coarse_factor: int = 4,
    detail_epsilon: float | None = None,
) -> float:
    """Step length at a voxel-space position: base_step in detailed
    regions, coarse_factor times that inside low-variation leaves."""
    if base_step <= 0:
        raise ValueError(f"base_step must be positive, got {base_step}")
    if coarse_factor < 1:
        raise ValueError(f"coarse_factor must be >= 1, got {coarse_factor}")
    if detail_epsilon is None:
        detail_epsilon = 0.01 * max(1, tree.value_range[1] - tree.value_range[0])
    nbounds, _vm, sminmax, nchildren = flat_arrays(tree)
    nx, ny, nz = tree.volume_dims
    ix = min(max(int(np.floor(position[0])), 0), nx - 1)
    iy = min(max(int(np.floor(position[1])), 0), ny - 1)
    iz = min(max(int(np.floor(position[2])), 0), nz - 1)
    leaf = int(_k.leaf_for_point(nbounds, nchildren, ix, iy, iz))
    if sminmax[leaf, 1] - sminmax[leaf, 0] < detail_epsilon:
        return float(base_step * coarse_factor)
    return float(base_step)
