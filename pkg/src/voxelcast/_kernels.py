"""Compiled kernels shared by the sampling API and the tile renderer.

Scalar field fetches, gradient stencils, slab clipping, surface marching,
hit refinement and the per-tile render loop live here so the public
wrappers and the renderer run the exact same arithmetic.  Everything is
float64, fastmath stays off, results are bitwise reproducible.
"""

import math

import numpy as np
from numba import njit

INTERP_NEAREST = 0
INTERP_LINEAR = 1
INTERP_TRILINEAR = 2

OP_CENTRAL = 0
OP_SOBEL3D = 1
OP_ZUCKER_HUMMEL = 2

MODE_SURFACE = 0
MODE_COMPOSITED = 1

GRAD_EPS = 1e-8
OPAQUE_ALPHA = 1.0 - 1e-6
MIN_REMAINING = 0.01

# volume fetches per gradient evaluation, indexed by operator code
GRAD_SAMPLES = (6, 26, 26)

_JIT = {"cache": True, "nogil": True}


@njit(**_JIT)
def lerp(f0, f1, t):
    return f0 + (f1 - f0) * t


@njit(**_JIT)
def _fetch(data, nx, ny, i, j, k):
    return float(data[(k * ny + j) * nx + i])


@njit(**_JIT)
def _round_half_away(x):
    if x >= 0.0:
        return math.floor(x + 0.5)
    return math.ceil(x - 0.5)


@njit(**_JIT)
def _cell(v, n):
    # lower corner of the interpolation cell, clamped so v == n-1 still
    # has a full cell and n == 1 degenerates to a single corner
    i0 = int(math.floor(v))
    if i0 > n - 2:
        i0 = n - 2
    if i0 < 0:
        i0 = 0
    i1 = i0 + 1
    if i1 > n - 1:
        i1 = n - 1
    return i0, i1, v - i0


@njit(**_JIT)
def sample_nearest(data, nx, ny, nz, x, y, z):
    i = int(_round_half_away(x))
    j = int(_round_half_away(y))
    k = int(_round_half_away(z))
    return _fetch(data, nx, ny, i, j, k)


@njit(**_JIT)
def sample_linear(data, nx, ny, nz, x, y, z):
    # interpolate along the axis farthest from its lattice plane,
    # round the other two; ties resolve x before y before z
    fx = abs(x - _round_half_away(x))
    fy = abs(y - _round_half_away(y))
    fz = abs(z - _round_half_away(z))
    if fy > fx and fy >= fz:
        axis = 1
    elif fz > fx and fz > fy:
        axis = 2
    else:
        axis = 0
    if axis == 0:
        j = int(_round_half_away(y))
        k = int(_round_half_away(z))
        i0, i1, f = _cell(x, nx)
        return lerp(_fetch(data, nx, ny, i0, j, k), _fetch(data, nx, ny, i1, j, k), f)
    if axis == 1:
        i = int(_round_half_away(x))
        k = int(_round_half_away(z))
        j0, j1, f = _cell(y, ny)
        return lerp(_fetch(data, nx, ny, i, j0, k), _fetch(data, nx, ny, i, j1, k), f)
    i = int(_round_half_away(x))
    j = int(_round_half_away(y))
    k0, k1, f = _cell(z, nz)
    return lerp(_fetch(data, nx, ny, i, j, k0), _fetch(data, nx, ny, i, j, k1), f)


@njit(**_JIT)
def sample_trilinear(data, nx, ny, nz, x, y, z):
    i0, i1, fx = _cell(x, nx)
    j0, j1, fy = _cell(y, ny)
    k0, k1, fz = _cell(z, nz)
    x00 = lerp(_fetch(data, nx, ny, i0, j0, k0), _fetch(data, nx, ny, i1, j0, k0), fx)
    x10 = lerp(_fetch(data, nx, ny, i0, j1, k0), _fetch(data, nx, ny, i1, j1, k0), fx)
    x01 = lerp(_fetch(data, nx, ny, i0, j0, k1), _fetch(data, nx, ny, i1, j0, k1), fx)
    x11 = lerp(_fetch(data, nx, ny, i0, j1, k1), _fetch(data, nx, ny, i1, j1, k1), fx)
    y0 = lerp(x00, x10, fy)
    y1 = lerp(x01, x11, fy)
    return lerp(y0, y1, fz)


@njit(**_JIT)
def sample_any(data, nx, ny, nz, x, y, z, interp):
    # positions outside the index range read as empty space
    if x < 0.0 or x > nx - 1 or y < 0.0 or y > ny - 1 or z < 0.0 or z > nz - 1:
        return 0.0
    if interp == INTERP_TRILINEAR:
        return sample_trilinear(data, nx, ny, nz, x, y, z)
    if interp == INTERP_LINEAR:
        return sample_linear(data, nx, ny, nz, x, y, z)
    return sample_nearest(data, nx, ny, nz, x, y, z)


@njit(**_JIT)
def _smooth_weight(u, v):
    # transverse smoothing plane [[1,3,1],[3,6,3],[1,3,1]]
    if u == 0 and v == 0:
        return 6.0
    if u == 0 or v == 0:
        return 3.0
    return 1.0


@njit(**_JIT)
def grad_raw(data, nx, ny, nz, x, y, z, op):
    """Unnormalized gradient; neighbor taps are trilinear."""
    gx = 0.0
    gy = 0.0
    gz = 0.0
    if op == OP_CENTRAL:
        gx = sample_any(data, nx, ny, nz, x + 1.0, y, z, 2) - sample_any(
            data, nx, ny, nz, x - 1.0, y, z, 2
        )
        gy = sample_any(data, nx, ny, nz, x, y + 1.0, z, 2) - sample_any(
            data, nx, ny, nz, x, y - 1.0, z, 2
        )
        gz = sample_any(data, nx, ny, nz, x, y, z + 1.0, 2) - sample_any(
            data, nx, ny, nz, x, y, z - 1.0, 2
        )
    elif op == OP_SOBEL3D:
        for i in range(-1, 2):
            for j in range(-1, 2):
                for k in range(-1, 2):
                    if i == 0 and j == 0 and k == 0:
                        continue
                    v = sample_any(data, nx, ny, nz, x + i, y + j, z + k, 2)
                    gx += i * _smooth_weight(j, k) * v
                    gy += j * _smooth_weight(i, k) * v
                    gz += k * _smooth_weight(i, j) * v
    else:
        for i in range(-1, 2):
            for j in range(-1, 2):
                for k in range(-1, 2):
                    if i == 0 and j == 0 and k == 0:
                        continue
                    v = sample_any(data, nx, ny, nz, x + i, y + j, z + k, 2)
                    inv = 1.0 / math.sqrt(float(i * i + j * j + k * k))
                    gx += i * inv * v
                    gy += j * inv * v
                    gz += k * inv * v
    return gx, gy, gz


@njit(**_JIT)
def normalize3(gx, gy, gz, eps):
    n = math.sqrt(gx * gx + gy * gy + gz * gz)
    if n <= eps:
        return 0.0, 0.0, 0.0
    return gx / n, gy / n, gz / n


@njit(**_JIT)
def slab_interval(org, dirv, lo, hi):
    """Ray/box parameter range.  Axes with zero direction reject rays
    whose origin lies outside the slab."""
    tmin = -1e300
    tmax = 1e300
    for a in range(3):
        o = org[a]
        d = dirv[a]
        if d == 0.0:
            if o < lo[a] or o > hi[a]:
                return False, 0.0, 0.0
        else:
            inv = 1.0 / d
            ta = (lo[a] - o) * inv
            tb = (hi[a] - o) * inv
            if ta > tb:
                ta, tb = tb, ta
            if ta > tmin:
                tmin = ta
            if tb < tmax:
                tmax = tb
    if tmin > tmax:
        return False, 0.0, 0.0
    return True, tmin, tmax


@njit(**_JIT)
def box_interval(org, dirv, lo, hi):
    """Clipped marching interval: misses behind the origin are rejected
    and an interior origin starts the interval at zero."""
    hit, t0, t1 = slab_interval(org, dirv, lo, hi)
    if not hit or t1 < 0.0:
        return False, 0.0, 0.0
    if t0 < 0.0:
        t0 = 0.0
    return True, t0, t1


@njit(**_JIT)
def _node_interval(nbounds, idx, spacing, org, dirv):
    lo0 = nbounds[idx, 0] * spacing[0]
    lo1 = nbounds[idx, 1] * spacing[1]
    lo2 = nbounds[idx, 2] * spacing[2]
    hi0 = nbounds[idx, 3] * spacing[0]
    hi1 = nbounds[idx, 4] * spacing[1]
    hi2 = nbounds[idx, 5] * spacing[2]
    tmin = -1e300
    tmax = 1e300
    for a in range(3):
        if a == 0:
            lo = lo0
            hi = hi0
        elif a == 1:
            lo = lo1
            hi = hi1
        else:
            lo = lo2
            hi = hi2
        o = org[a]
        d = dirv[a]
        if d == 0.0:
            if o < lo or o > hi:
                return False, 0.0, 0.0
        else:
            inv = 1.0 / d
            ta = (lo - o) * inv
            tb = (hi - o) * inv
            if ta > tb:
                ta, tb = tb, ta
            if ta > tmin:
                tmin = ta
            if tb < tmax:
                tmax = tb
    if tmin > tmax:
        return False, 0.0, 0.0
    return True, tmin, tmax


@njit(**_JIT)
def collect_segments(
    nbounds,
    sminmax,
    nchildren,
    spacing,
    org,
    dirv,
    tray0,
    tray1,
    t_low,
    t_high,
    stack,
    seg0,
    seg1,
):
    """Depth-first near-to-far walk emitting merged t-intervals of leaves
    whose padded value range overlaps the threshold window."""
    nseg = 0
    sp = 0
    stack[sp] = 0
    sp += 1
    child_t = np.empty(8, np.float64)
    child_i = np.empty(8, np.int32)
    while sp > 0:
        sp -= 1
        idx = stack[sp]
        hit, a0, b0 = _node_interval(nbounds, idx, spacing, org, dirv)
        if not hit:
            continue
        if a0 < tray0:
            a0 = tray0
        if b0 > tray1:
            b0 = tray1
        if b0 < a0:
            continue
        if nchildren[idx, 0] < 0:
            if sminmax[idx, 0] <= t_high and sminmax[idx, 1] >= t_low:
                if nseg > 0 and a0 <= seg1[nseg - 1] + 1e-9:
                    if b0 > seg1[nseg - 1]:
                        seg1[nseg - 1] = b0
                elif nseg < seg0.shape[0]:
                    seg0[nseg] = a0
                    seg1[nseg] = b0
                    nseg += 1
                else:
                    # buffer exhausted: widen the last segment, extra
                    # coverage only adds out-of-window samples
                    seg1[nseg - 1] = b0
        else:
            cnt = 0
            for c in range(8):
                ci = nchildren[idx, c]
                if ci < 0:
                    break
                chit, ca, cb = _node_interval(nbounds, ci, spacing, org, dirv)
                if not chit or cb < tray0 or ca > tray1:
                    continue
                child_t[cnt] = ca
                child_i[cnt] = ci
                cnt += 1
            # insertion sort, farthest entry first so nearest pops first
            for a in range(1, cnt):
                tv = child_t[a]
                iv = child_i[a]
                b = a - 1
                while b >= 0 and child_t[b] < tv:
                    child_t[b + 1] = child_t[b]
                    child_i[b + 1] = child_i[b]
                    b -= 1
                child_t[b + 1] = tv
                child_i[b + 1] = iv
            for a in range(cnt):
                stack[sp] = child_i[a]
                sp += 1
    return nseg


@njit(**_JIT)
def leaf_for_point(nbounds, nchildren, ix, iy, iz):
    idx = 0
    while nchildren[idx, 0] >= 0:
        nxt = idx
        for c in range(8):
            ci = nchildren[idx, c]
            if ci < 0:
                break
            if (
                nbounds[ci, 0] <= ix < nbounds[ci, 3]
                and nbounds[ci, 1] <= iy < nbounds[ci, 4]
                and nbounds[ci, 2] <= iz < nbounds[ci, 5]
            ):
                nxt = ci
                break
        if nxt == idx:
            break
        idx = nxt
    return idx


@njit(**_JIT)
def first_hit(
    data,
    nx,
    ny,
    nz,
    spacing,
    org,
    dirv,
    t_enter,
    t_exit,
    seg0,
    seg1,
    nseg,
    coarse,
    fine,
    t_low,
    t_high,
    interp,
    use_adaptive,
    adapt_jump,
    detail_eps,
    nbounds,
    sminmax,
    nchildren,
    counter,
):
    """March the coarse lattice t_enter + k*coarse through the given
    segments; on the first in-window sample scan backward in fine steps.

    Returns (found, t_hit, t_before, has_bracket).  t_hit is the last
    in-window position, t_before the first out-of-window one behind it
    when a bracket exists.
    """
    k = 0
    for si in range(nseg):
        s0 = seg0[si]
        s1 = seg1[si]
        if s1 > t_exit:
            s1 = t_exit
        kk = int(math.floor((s0 - t_enter) / coarse))
        if kk > k:
            k = kk
        while True:
            t = t_enter + k * coarse
            if t > s1 + 1e-12 or t > t_exit + 1e-12:
                break
            px = (org[0] + t * dirv[0]) / spacing[0] - 0.5
            py = (org[1] + t * dirv[1]) / spacing[1] - 0.5
            pz = (org[2] + t * dirv[2]) / spacing[2] - 0.5
            counter[0] += 1
            v = sample_any(data, nx, ny, nz, px, py, pz, interp)
            if t_low <= v <= t_high:
                j = 1
                while True:
                    tb = t - j * fine
                    if tb < t_enter - 1e-12:
                        th = t - (j - 1) * fine
                        return True, th, th, False
                    bx = (org[0] + tb * dirv[0]) / spacing[0] - 0.5
                    by = (org[1] + tb * dirv[1]) / spacing[1] - 0.5
                    bz = (org[2] + tb * dirv[2]) / spacing[2] - 0.5
                    counter[0] += 1
                    vb = sample_any(data, nx, ny, nz, bx, by, bz, interp)
                    if vb < t_low or vb > t_high:
                        # report the exact parameter whose sample was
                        # tested in-window, not tb + fine (fp differs)
                        th = t - (j - 1) * fine
                        return True, th, tb, True
                    j += 1
            step_k = 1
            if use_adaptive != 0:
                ix = int(math.floor(px))
                iy = int(math.floor(py))
                iz = int(math.floor(pz))
                if ix < 0:
                    ix = 0
                if iy < 0:
                    iy = 0
                if iz < 0:
                    iz = 0
                if ix > nx - 1:
                    ix = nx - 1
                if iy > ny - 1:
                    iy = ny - 1
                if iz > nz - 1:
                    iz = nz - 1
                leaf = leaf_for_point(nbounds, nchildren, ix, iy, iz)
                if sminmax[leaf, 1] - sminmax[leaf, 0] < detail_eps:
                    lhit, la, lb = _node_interval(nbounds, leaf, spacing, org, dirv)
                    if lhit:
                        step_k = adapt_jump
                        kex = int(math.floor((lb - t_enter) / coarse)) + 1
                        if kex - k < step_k:
                            step_k = kex - k
                        if step_k < 1:
                            step_k = 1
            k += step_k
    return False, 0.0, 0.0, False


@njit(**_JIT)
def bisect_window(
    data, nx, ny, nz, spacing, org, dirv, t_before, t_after, t_low, t_high, iters, interp, counter
):
    """Halve [t_before, t_after] iters times, keeping the in-window end
    at t_after.  Returns the refined in-window parameter."""
    tb = t_before
    ta = t_after
    for _ in range(iters):
        tm = 0.5 * (tb + ta)
        px = (org[0] + tm * dirv[0]) / spacing[0] - 0.5
        py = (org[1] + tm * dirv[1]) / spacing[1] - 0.5
        pz = (org[2] + tm * dirv[2]) / spacing[2] - 0.5
        counter[0] += 1
        v = sample_any(data, nx, ny, nz, px, py, pz, interp)
        if t_low <= v <= t_high:
            ta = tm
        else:
            tb = tm
    return ta


@njit(**_JIT)
def lut_eval(lut_hu, lut_rgba, hu):
    n = lut_hu.shape[0]
    if hu <= lut_hu[0]:
        return lut_rgba[0, 0], lut_rgba[0, 1], lut_rgba[0, 2], lut_rgba[0, 3]
    if hu >= lut_hu[n - 1]:
        return (
            lut_rgba[n - 1, 0],
            lut_rgba[n - 1, 1],
            lut_rgba[n - 1, 2],
            lut_rgba[n - 1, 3],
        )
    i = 0
    while i + 1 < n - 1 and lut_hu[i + 1] <= hu:
        i += 1
    t = (hu - lut_hu[i]) / (lut_hu[i + 1] - lut_hu[i])
    return (
        lerp(lut_rgba[i, 0], lut_rgba[i + 1, 0], t),
        lerp(lut_rgba[i, 1], lut_rgba[i + 1, 1], t),
        lerp(lut_rgba[i, 2], lut_rgba[i + 1, 2], t),
        lerp(lut_rgba[i, 3], lut_rgba[i + 1, 3], t),
    )


@njit(**_JIT)
def _clamp01(v):
    if v < 0.0:
        return 0.0
    if v > 1.0:
        return 1.0
    return v


@njit(**_JIT)
def _quant(v):
    return np.uint8(int(_clamp01(v) * 255.0 + 0.5))


@njit(**_JIT)
def _shade_sample(
    data,
    nx,
    ny,
    nz,
    spacing,
    org,
    dirv,
    t,
    interp,
    op,
    light_pos,
    light_col,
    lut_hu,
    lut_rgba,
    mu_water,
    counter,
):
    """Evaluate one contributing sample: lit material color and opacity."""
    wx = org[0] + t * dirv[0]
    wy = org[1] + t * dirv[1]
    wz = org[2] + t * dirv[2]
    px = wx / spacing[0] - 0.5
    py = wy / spacing[1] - 0.5
    pz = wz / spacing[2] - 0.5
    counter[0] += 1
    v = sample_any(data, nx, ny, nz, px, py, pz, interp)
    gx, gy, gz = grad_raw(data, nx, ny, nz, px, py, pz, op)
    counter[0] += GRAD_SAMPLES[op]
    ux, uy, uz = normalize3(gx, gy, gz, GRAD_EPS)
    # field values rise toward the interior, the surface normal points
    # the other way
    snx = -ux
    sny = -uy
    snz = -uz
    lx = light_pos[0] - wx
    ly = light_pos[1] - wy
    lz = light_pos[2] - wz
    ln = math.sqrt(lx * lx + ly * ly + lz * lz)
    illum = 0.0
    if ln > 0.0:
        illum = (lx * snx + ly * sny + lz * snz) / ln
    illum = _clamp01(illum)
    hu = (v - mu_water) / mu_water * 1000.0
    mr, mg, mb, ma = lut_eval(lut_hu, lut_rgba, hu)
    return (
        _clamp01(illum * light_col[0] * mr),
        _clamp01(illum * light_col[1] * mg),
        _clamp01(illum * light_col[2] * mb),
        ma,
    )


@njit(**_JIT)
def render_tile(
    data,
    nx,
    ny,
    nz,
    spacing,
    eye,
    right,
    upv,
    fwd,
    half_w,
    half_h,
    width,
    height,
    clip_lo,
    clip_hi,
    light_pos,
    light_col,
    t_low,
    t_high,
    lut_hu,
    lut_rgba,
    mu_water,
    op,
    interp,
    mode,
    coarse,
    fine,
    refine_iters,
    bg,
    use_octree,
    nbounds,
    sminmax,
    nchildren,
    use_adaptive,
    adapt_jump,
    detail_eps,
    y0,
    y1,
    out,
    counter,
    stack,
    seg0,
    seg1,
):
    """Render scanline rows [y0, y1) into out."""
    bgr = _quant(bg[0])
    bgg = _quant(bg[1])
    bgb = _quant(bg[2])
    bga = _quant(bg[3])
    org = np.empty(3, np.float64)
    dirv = np.empty(3, np.float64)
    org[0] = eye[0]
    org[1] = eye[1]
    org[2] = eye[2]
    for pyx in range(y0, y1):
        v_ndc = 1.0 - 2.0 * (pyx + 0.5) / height
        for pxx in range(width):
            u_ndc = 2.0 * (pxx + 0.5) / width - 1.0
            dx = fwd[0] + u_ndc * half_w * right[0] + v_ndc * half_h * upv[0]
            dy = fwd[1] + u_ndc * half_w * right[1] + v_ndc * half_h * upv[1]
            dz = fwd[2] + u_ndc * half_w * right[2] + v_ndc * half_h * upv[2]
            dn = math.sqrt(dx * dx + dy * dy + dz * dz)
            dirv[0] = dx / dn
            dirv[1] = dy / dn
            dirv[2] = dz / dn
            hit, t_enter, t_exit = box_interval(org, dirv, clip_lo, clip_hi)
            if not hit:
                out[pyx, pxx, 0] = bgr
                out[pyx, pxx, 1] = bgg
                out[pyx, pxx, 2] = bgb
                out[pyx, pxx, 3] = bga
                continue
            if use_octree != 0:
                nseg = collect_segments(
                    nbounds,
                    sminmax,
                    nchildren,
                    spacing,
                    org,
                    dirv,
                    t_enter,
                    t_exit,
                    t_low,
                    t_high,
                    stack,
                    seg0,
                    seg1,
                )
            else:
                seg0[0] = t_enter
                seg1[0] = t_exit
                nseg = 1
            found, t_in, t_before, has_bracket = first_hit(
                data,
                nx,
                ny,
                nz,
                spacing,
                org,
                dirv,
                t_enter,
                t_exit,
                seg0,
                seg1,
                nseg,
                coarse,
                fine,
                t_low,
                t_high,
                interp,
                use_adaptive,
                adapt_jump,
                detail_eps,
                nbounds,
                sminmax,
                nchildren,
                counter,
            )
            if not found:
                out[pyx, pxx, 0] = bgr
                out[pyx, pxx, 1] = bgg
                out[pyx, pxx, 2] = bgb
                out[pyx, pxx, 3] = bga
                continue
            t_star = t_in
            if has_bracket and refine_iters > 0:
                t_star = bisect_window(
                    data,
                    nx,
                    ny,
                    nz,
                    spacing,
                    org,
                    dirv,
                    t_before,
                    t_in,
                    t_low,
                    t_high,
                    refine_iters,
                    interp,
                    counter,
                )
            cr, cg, cb, ca = _shade_sample(
                data,
                nx,
                ny,
                nz,
                spacing,
                org,
                dirv,
                t_star,
                interp,
                op,
                light_pos,
                light_col,
                lut_hu,
                lut_rgba,
                mu_water,
                counter,
            )
            if mode == MODE_SURFACE:
                out[pyx, pxx, 0] = _quant(cr)
                out[pyx, pxx, 1] = _quant(cg)
                out[pyx, pxx, 2] = _quant(cb)
                out[pyx, pxx, 3] = np.uint8(255)
                continue
            acc_r = ca * cr
            acc_g = ca * cg
            acc_b = ca * cb
            remain = 1.0 - ca
            if ca < OPAQUE_ALPHA and remain >= MIN_REMAINING:
                m = 1
                while True:
                    t = t_star + m * coarse
                    if t > t_exit + 1e-12:
                        break
                    px = (org[0] + t * dirv[0]) / spacing[0] - 0.5
                    py = (org[1] + t * dirv[1]) / spacing[1] - 0.5
                    pz = (org[2] + t * dirv[2]) / spacing[2] - 0.5
                    counter[0] += 1
                    v = sample_any(data, nx, ny, nz, px, py, pz, interp)
                    if t_low <= v <= t_high:
                        sr, sg, sb, sa = _shade_sample(
                            data,
                            nx,
                            ny,
                            nz,
                            spacing,
                            org,
                            dirv,
                            t,
                            interp,
                            op,
                            light_pos,
                            light_col,
                            lut_hu,
                            lut_rgba,
                            mu_water,
                            counter,
                        )
                        acc_r += remain * sa * sr
                        acc_g += remain * sa * sg
                        acc_b += remain * sa * sb
                        remain *= 1.0 - sa
                        if sa >= OPAQUE_ALPHA or remain < MIN_REMAINING:
                            break
                    m += 1
            acc_r += remain * bg[0]
            acc_g += remain * bg[1]
            acc_b += remain * bg[2]
            out[pyx, pxx, 0] = _quant(acc_r)
            out[pyx, pxx, 1] = _quant(acc_g)
            out[pyx, pxx, 2] = _quant(acc_b)
            out[pyx, pxx, 3] = np.uint8(255)
