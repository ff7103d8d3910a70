"""Per-pixel ray marching of voxel datasets.

The pipeline per ray: clip against the volume (or a user clip box),
march a coarse lattice until a sample falls inside the threshold
window, walk backward in fine steps to the last in-window position,
refine the crossing by bisection, then shade with a gradient normal
and map the value through a Hounsfield transfer lookup.  Compositing
mode keeps marching and accumulates translucent samples front to back.

Rows of the output image are rendered as independent tiles on a thread
pool; tiling is fixed by the settings, never by worker count, so images
are bitwise identical for any number of workers.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels as _k
from .gradients import OperatorKind
from .octree import Octree, build_octree, flat_arrays
from .volume import InterpolationMode, Volume

EARLY_TERMINATION = _k.MIN_REMAINING
OPAQUE_ALPHA = _k.OPAQUE_ALPHA
MAX_ELEVATION = 89.9


class RenderMode:
    SURFACE = "surface"
    COMPOSITED = "composited"

    ALL = (SURFACE, COMPOSITED)


@dataclass(frozen=True)
class Ray:
    origin: np.ndarray
    direction: np.ndarray


@dataclass
class Camera:
    """Pinhole camera with an orbit offset applied on top of the pose.

    azimuth rotates the eye about the world y axis through the target,
    elevation tilts it toward the pole (clamped short of +-90 degrees),
    zoom divides the eye-target distance.  All angles in degrees;
    azimuth = elevation = 0 and zoom = 1 reproduce the stored pose.
    """

    eye: tuple[float, float, float]
    target: tuple[float, float, float]
    up: tuple[float, float, float] = (0.0, 1.0, 0.0)
    fov_y: float = 60.0
    azimuth: float = 0.0
    elevation: float = 0.0
    zoom: float = 1.0

    def __post_init__(self):
        if np.allclose(self.eye, self.target):
            raise ValueError("camera eye and target coincide")
        if not 0.0 < self.fov_y < 180.0:
            raise ValueError(f"fov_y must be in (0, 180), got {self.fov_y}")
        if self.zoom <= 0.0:
            raise ValueError(f"zoom must be positive, got {self.zoom}")
        if abs(self.elevation) > 180.0:
            raise ValueError(f"elevation must stay within +-180, got {self.elevation}")


@dataclass(frozen=True)
class CameraBasis:
    eye: np.ndarray
    right: np.ndarray
    up: np.ndarray
    forward: np.ndarray
    half_w: float
    half_h: float


@dataclass
class ClipBox:
    """Axis-aligned world-space box; rendering intersects it with the
    volume box."""

    lo: tuple[float, float, float]
    hi: tuple[float, float, float]

    def __post_init__(self):
        if any(l > h for l, h in zip(self.lo, self.hi)):
            raise ValueError(f"clip box lo {self.lo} exceeds hi {self.hi}")


@dataclass
class Light:
    """Point light; color channels in [0, 1]."""

    position: tuple[float, float, float]
    color: tuple[float, float, float] = (1.0, 1.0, 1.0)

    def __post_init__(self):
        if any(not 0.0 <= c <= 1.0 for c in self.color):
            raise ValueError(f"light color must be within [0, 1], got {self.color}")


@dataclass
class ThresholdWindow:
    """Raw-value window [low, high]; samples inside it are renderable."""

    low: float
    high: float

    def __post_init__(self):
        if self.low > self.high:
            raise ValueError(f"threshold window low {self.low} above high {self.high}")

    def contains(self, v: float) -> bool:
        return self.low <= v <= self.high


@dataclass
class TransferFunction:
    """Piecewise-linear RGBA over Hounsfield units, clamped at the ends.

    mu_water scales raw attenuation values onto the Hounsfield axis;
    with the default 1000 a raw value of 1000 maps to 0 HU.
    """

    points: list[tuple[float, tuple[float, float, float, float]]]
    mu_water: float = 1000.0

    def __post_init__(self):
        if not self.points:
            raise ValueError("transfer function needs at least one breakpoint")
        hus = [p[0] for p in self.points]
        if any(b <= a for a, b in zip(hus, hus[1:])):
            raise ValueError(f"transfer breakpoints must strictly increase, got {hus}")
        for _, rgba in self.points:
            if len(rgba) != 4 or any(not 0.0 <= c <= 1.0 for c in rgba):
                raise ValueError(f"transfer RGBA must be 4 channels in [0, 1], got {rgba}")
        if self.mu_water <= 0:
            raise ValueError(f"mu_water must be positive, got {self.mu_water}")

    def tables(self) -> tuple[np.ndarray, np.ndarray]:
        hu = np.array([p[0] for p in self.points], np.float64)
        rgba = np.array([p[1] for p in self.points], np.float64)
        return hu, rgba

    @classmethod
    def default_ct(cls) -> "TransferFunction":
        return cls(
            points=[
                (-1000.0, (0.0, 0.0, 0.0, 0.0)),
                (-100.0, (0.80, 0.30, 0.25, 0.35)),
                (500.0, (0.95, 0.93, 0.88, 1.0)),
                (1500.0, (1.0, 1.0, 1.0, 1.0)),
            ]
        )


@dataclass
class Scene:
    camera: Camera
    light: Light
    window: ThresholdWindow = field(default_factory=lambda: ThresholdWindow(500.0, 4095.0))
    transfer: TransferFunction = field(default_factory=TransferFunction.default_ct)
    clip: ClipBox | None = None


@dataclass
class RenderSettings:
    width: int = 640
    height: int = 480
    operator: OperatorKind = OperatorKind.CENTRAL_DIFFERENCE
    interpolation: InterpolationMode = InterpolationMode.TRILINEAR
    mode: str = RenderMode.SURFACE
    coarse_step: float = 1.0
    fine_step: float = 0.125
    refine_iters: int = 6
    background: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 1.0)
    use_octree: bool = True
    use_adaptive: bool = False
    adaptive_factor: int = 4
    detail_epsilon: float | None = None
    octree_min_block: int = 4
    octree_max_depth: int = 8
    tile_rows: int = 16

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"image size must be positive, got {self.width}x{self.height}")
        if self.coarse_step <= 0 or self.fine_step <= 0:
            raise ValueError(
                f"steps must be positive, got coarse {self.coarse_step} fine {self.fine_step}"
            )
        if self.fine_step > self.coarse_step:
            raise ValueError(
                f"fine step {self.fine_step} exceeds coarse step {self.coarse_step}"
            )
        if self.refine_iters < 0:
            raise ValueError(f"refine_iters must be >= 0, got {self.refine_iters}")
        if self.mode not in RenderMode.ALL:
            raise ValueError(f"mode must be one of {RenderMode.ALL}, got {self.mode!r}")
        if self.adaptive_factor < 1:
            raise ValueError(f"adaptive_factor must be >= 1, got {self.adaptive_factor}")
        if len(self.background) != 4 or any(not 0.0 <= c <= 1.0 for c in self.background):
            raise ValueError(f"background must be RGBA in [0, 1], got {self.background}")
        if self.tile_rows < 1:
            raise ValueError(f"tile_rows must be >= 1, got {self.tile_rows}")


@dataclass(frozen=True)
class Hit:
    t: float
    position: np.ndarray
    value: float
    bracket: tuple[float, float] | None


@dataclass
class FrameBuffer:
    width: int
    height: int
    pixels: np.ndarray
    render_ms: float
    sample_count: int

    def rgb(self) -> np.ndarray:
        return self.pixels[:, :, :3]


def camera_basis(camera: Camera, width: int, height: int) -> CameraBasis:
    """Effective orbit pose plus the screen-plane basis vectors."""
    eye = np.asarray(camera.eye, np.float64)
    target = np.asarray(camera.target, np.float64)
    offset = eye - target
    if camera.azimuth == 0.0 and camera.elevation == 0.0 and camera.zoom == 1.0:
        eye_eff = eye.copy()  # identity orbit reproduces the pose exactly
    else:
        r0 = float(np.linalg.norm(offset))
        az = math.atan2(offset[0], offset[2]) + math.radians(camera.azimuth)
        el = math.asin(max(-1.0, min(1.0, offset[1] / r0))) + math.radians(camera.elevation)
        el = max(-math.radians(MAX_ELEVATION), min(math.radians(MAX_ELEVATION), el))
        dist = r0 / camera.zoom
        eye_eff = target + dist * np.array(
            [math.cos(el) * math.sin(az), math.sin(el), math.cos(el) * math.cos(az)]
        )
    forward = target - eye_eff
    forward /= np.linalg.norm(forward)
    up = np.asarray(camera.up, np.float64)
    right = np.cross(forward, up)
    rn = np.linalg.norm(right)
    if rn < 1e-12:
        # view parallel to up, pick any transverse axis
        alt = np.array([1.0, 0.0, 0.0]) if abs(forward[0]) < 0.9 else np.array([0.0, 0.0, 1.0])
        right = np.cross(forward, alt)
        rn = np.linalg.norm(right)
    right /= rn
    up_cam = np.cross(right, forward)
    half_h = math.tan(math.radians(camera.fov_y) / 2.0)
    half_w = half_h * width / height
    return CameraBasis(eye_eff, right, up_cam, forward, half_w, half_h)


def generate_ray(camera: Camera, px: int, py: int, width: int, height: int) -> Ray:
    """Ray through the center of pixel (px, py); px runs right, py down."""
    if not (0 <= px < width and 0 <= py < height):
        raise ValueError(f"pixel ({px}, {py}) outside {width}x{height}")
    basis = camera_basis(camera, width, height)
    u = 2.0 * (px + 0.5) / width - 1.0
    v = 1.0 - 2.0 * (py + 0.5) / height
    d = basis.forward + u * basis.half_w * basis.right + v * basis.half_h * basis.up
    d = d / np.linalg.norm(d)
    return Ray(origin=basis.eye.copy(), direction=d)


def intersect_clipbox(ray: Ray, lo, hi) -> tuple[float, float] | None:
    """Entry/exit parameters of the ray inside the box, entry clamped to
    zero for interior origins; None for misses or boxes fully behind."""
    org = np.ascontiguousarray(ray.origin, np.float64)
    dirv = np.ascontiguousarray(ray.direction, np.float64)
    lo = np.ascontiguousarray(lo, np.float64)
    hi = np.ascontiguousarray(hi, np.float64)
    hit, t0, t1 = _k.box_interval(org, dirv, lo, hi)
    if not hit:
        return None
    return float(t0), float(t1)


def hounsfield(mu_tissue: float, mu_water: float = 1000.0) -> float:
    """Attenuation relative to water on the conventional 1000-per-water
    scale: water maps to 0, vacuum to -1000."""
    if mu_water <= 0:
        raise ValueError(f"mu_water must be positive, got {mu_water}")
    return (float(mu_tissue) - float(mu_water)) / float(mu_water) * 1000.0


def transfer(tf: TransferFunction, hu: float) -> np.ndarray:
    """RGBA for a Hounsfield value, clamped to the first/last breakpoint."""
    lut_hu, lut_rgba = tf.tables()
    return np.array(_k.lut_eval(lut_hu, lut_rgba, float(hu)))


def composite_step(c_in, c_sample, alpha: float) -> np.ndarray:
    """One back-to-front blend: c_in * (1 - alpha) + c_sample * alpha."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be within [0, 1], got {alpha}")
    c_in = np.asarray(c_in, np.float64)
    c_sample = np.asarray(c_sample, np.float64)
    return c_in * (1.0 - alpha) + c_sample * alpha


def shade(position, normal, light: Light) -> np.ndarray:
    """Diffuse intensity times light color; facing away shades to zero."""
    pos = np.asarray(position, np.float64)
    n = np.asarray(normal, np.float64)
    livec = np.asarray(light.position, np.float64) - pos
    ln = np.linalg.norm(livec)
    if ln == 0.0:
        return np.zeros(3)
    illum = float(np.dot(livec / ln, n))
    illum = min(1.0, max(0.0, illum))
    return illum * np.asarray(light.color, np.float64)


def march_surface(
    ray: Ray,
    volume: Volume,
    window: ThresholdWindow,
    interval: tuple[float, float],
    coarse_step: float,
    fine_step: float,
    interpolation: InterpolationMode = InterpolationMode.TRILINEAR,
) -> Hit | None:
    """First renderable surface sample along the ray, or None.

    Marches t = interval[0] + k * coarse_step until a sample enters the
    window, then steps backward by fine_step while still inside it.  The
    returned hit carries the bracketing (outside, inside) parameters
    when the backward walk crossed the window boundary.
    """
    if coarse_step <= 0 or fine_step <= 0 or fine_step > coarse_step:
        raise ValueError(
            f"need 0 < fine_step <= coarse_step, got {fine_step}, {coarse_step}"
        )
    t0, t1 = float(interval[0]), float(interval[1])
    if t1 < t0:
        raise ValueError(f"empty marching interval ({t0}, {t1})")
    org = np.ascontiguousarray(ray.origin, np.float64)
    dirv = np.ascontiguousarray(ray.direction, np.float64)
    spacing = np.array(volume.spacing, np.float64)
    seg0 = np.array([t0], np.float64)
    seg1 = np.array([t1], np.float64)
    counter = np.zeros(1, np.int64)
    dummy_b, dummy_s, dummy_c = _dummy_tree()
    nx, ny, nz = volume.dims
    found, t_hit, t_before, bracket = _k.first_hit(
        volume.data, nx, ny, nz, spacing, org, dirv,
        t0, t1, seg0, seg1, 1,
        float(coarse_step), float(fine_step), float(window.low), float(window.high),
        interpolation.code, 0, 1, 0.0, dummy_b, dummy_s, dummy_c, counter,
    )
    if not found:
        return None
    pos = org + t_hit * dirv
    value = _k.sample_any(
        volume.data, nx, ny, nz,
        pos[0] / spacing[0] - 0.5, pos[1] / spacing[1] - 0.5, pos[2] / spacing[2] - 0.5,
        interpolation.code,
    )
    return Hit(
        t=float(t_hit),
        position=pos,
        value=float(value),
        bracket=(float(t_before), float(t_hit)) if bracket else None,
    )


def refine_hitpoint(
    ray: Ray,
    t_before: float,
    t_after: float,
    volume: Volume,
    window: ThresholdWindow,
    iters: int = 6,
    interpolation: InterpolationMode = InterpolationMode.TRILINEAR,
) -> float:
    """Bisect the window crossing between an outside and an inside
    parameter; each iteration halves the bracket."""
    if iters < 0:
        raise ValueError(f"iters must be >= 0, got {iters}")
    if t_after < t_before:
        raise ValueError(f"t_after {t_after} precedes t_before {t_before}")
    org = np.ascontiguousarray(ray.origin, np.float64)
    dirv = np.ascontiguousarray(ray.direction, np.float64)
    spacing = np.array(volume.spacing, np.float64)
    counter = np.zeros(1, np.int64)
    nx, ny, nz = volume.dims
    return float(
        _k.bisect_window(
            volume.data, nx, ny, nz, spacing, org, dirv,
            float(t_before), float(t_after), float(window.low), float(window.high),
            int(iters), interpolation.code, counter,
        )
    )


def _dummy_tree():
    nb = np.zeros((1, 6), np.int32)
    sm = np.zeros((1, 2), np.float64)
    ch = np.full((1, 8), -1, np.int32)
    return nb, sm, ch


def default_scene(volume: Volume) -> Scene:
    """Head-on view framing the volume with a headlight at the eye."""
    ext = volume.extent
    center = tuple(e / 2.0 for e in ext)
    dist = 1.1 * max(ext) / 2.0  # just outside the box, filling the frame
    eye = (center[0], center[1], center[2] - dist)
    cam = Camera(eye=eye, target=center)
    return Scene(camera=cam, light=Light(position=eye))


def render_frame(
    volume: Volume,
    scene: Scene,
    settings: RenderSettings | None = None,
    *,
    workers: int | None = None,
    octree: Octree | None = None,
) -> FrameBuffer:
    """Render one frame; returns pixels plus timing and the number of
    volume fetches spent on marching, refinement and shading."""
    settings = settings or RenderSettings()
    nx, ny, nz = volume.dims
    spacing = np.array(volume.spacing, np.float64)
    ext = volume.extent

    basis = camera_basis(scene.camera, settings.width, settings.height)

    clip_lo = np.zeros(3)
    clip_hi = np.array(ext, np.float64)
    if scene.clip is not None:
        clip_lo = np.maximum(clip_lo, np.asarray(scene.clip.lo, np.float64))
        clip_hi = np.minimum(clip_hi, np.asarray(scene.clip.hi, np.float64))

    lut_hu, lut_rgba = scene.transfer.tables()
    need_tree = settings.use_octree or settings.use_adaptive
    if need_tree:
        if octree is None:
            octree = build_octree(
                volume,
                min_block=settings.octree_min_block,
                max_depth=settings.octree_max_depth,
            )
        nbounds, _vminmax, sminmax, nchildren = flat_arrays(octree)
    else:
        nbounds, sminmax, nchildren = _dummy_tree()

    detail_eps = settings.detail_epsilon
    if detail_eps is None:
        detail_eps = 0.01 * max(1, volume.value_max - volume.value_min)

    pixels = np.zeros((settings.height, settings.width, 4), np.uint8)
    bg = np.array(settings.background, np.float64)
    light_pos = np.array(scene.light.position, np.float64)
    light_col = np.array(scene.light.color, np.float64)

    bands = [
        (y, min(y + settings.tile_rows, settings.height))
        for y in range(0, settings.height, settings.tile_rows)
    ]
    counters = [np.zeros(1, np.int64) for _ in bands]

    def run_band(i: int) -> None:
        y0, y1 = bands[i]
        _k.render_tile(
            volume.data, nx, ny, nz, spacing,
            basis.eye, basis.right, basis.up, basis.forward,
            basis.half_w, basis.half_h, settings.width, settings.height,
            clip_lo, clip_hi, light_pos, light_col,
            float(scene.window.low), float(scene.window.high),
            lut_hu, lut_rgba, float(scene.transfer.mu_water),
            settings.operator.code, settings.interpolation.code,
            _k.MODE_SURFACE if settings.mode == RenderMode.SURFACE else _k.MODE_COMPOSITED,
            float(settings.coarse_step), float(settings.fine_step),
            int(settings.refine_iters), bg,
            1 if settings.use_octree else 0, nbounds, sminmax, nchildren,
            1 if settings.use_adaptive else 0, int(settings.adaptive_factor),
            float(detail_eps),
            y0, y1, pixels, counters[i],
            np.empty(512, np.int32), np.empty(4096, np.float64), np.empty(4096, np.float64),
        )

    nworkers = workers if workers is not None else (os.cpu_count() or 1)
    start = time.perf_counter()
    with ThreadPoolExecutor(max_workers=max(1, nworkers)) as pool:
        list(pool.map(run_band, range(len(bands))))
    render_ms = (time.perf_counter() - start) * 1000.0

    return FrameBuffer(
        width=settings.width,
        height=settings.height,
        pixels=pixels,
        render_ms=render_ms,
        sample_count=int(sum(int(c[0]) for c in counters)),
    )
