"""Command-line front end: offline rendering, benchmark runs, the
interactive service, and phantom dataset generation.

Exit codes: 0 success, 1 usage error, 2 I/O failure, 3 internal error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, replace

from .bench import DEFAULT_RESOLUTIONS, BenchMatrix, run_benchmark, write_csv
from .gradients import OperatorKind
from .image_io import write_png, write_ppm
from .raycast import (
    ClipBox,
    Light,
    RenderMode,
    RenderSettings,
    Scene,
    ThresholdWindow,
    default_scene,
    render_frame,
)
from .volume import InterpolationMode, Volume, load_raw_slices, make_phantom, save_raw_slices


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); usage errors are 1
        raise UsageError(message)


@dataclass
class RunConfig:
    command: str
    ns: argparse.Namespace


def _triple(text: str) -> tuple[float, float, float]:
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected x,y,z — got {text!r}")
    return tuple(float(p) for p in parts)


def _quad(text: str) -> tuple[float, float, float, float]:
    parts = text.split(",")
    if len(parts) != 4:
        raise argparse.ArgumentTypeError(f"expected r,g,b,a — got {text!r}")
    return tuple(float(p) for p in parts)


def _sextuple(text: str) -> tuple[float, ...]:
    parts = text.split(",")
    if len(parts) != 6:
        raise argparse.ArgumentTypeError(f"expected x0,y0,z0,x1,y1,z1 — got {text!r}")
    return tuple(float(p) for p in parts)


def _dims(text: str) -> tuple[int, int, int]:
    parts = text.lower().split("x")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected WxHxN — got {text!r}")
    return tuple(int(p) for p in parts)


def _resolution_list(text: str) -> tuple[tuple[int, int], ...]:
    out = []
    for item in text.split(","):
        parts = item.lower().split("x")
        if len(parts) != 2:
            raise argparse.ArgumentTypeError(f"expected WxH entries — got {item!r}")
        out.append((int(parts[0]), int(parts[1])))
    return tuple(out)


def _operator_list(text: str) -> tuple[OperatorKind, ...]:
    try:
        return tuple(OperatorKind(name.strip()) for name in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


# converters re-applied to string values arriving via --config
_CONFIG_CONVERTERS = {
    "spacing": _triple,
    "light": _triple,
    "background": _quad,
    "clip": _sextuple,
    "raw_dims": _dims,
}


def _dataset_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("dataset")
    g.add_argument("--phantom", choices=("sphere", "shell", "ramp", "empty"),
                   help="synthetic dataset kind (default: sphere when no raw data given)")
    g.add_argument("--size", type=int, default=128, help="phantom cube edge in voxels")
    g.add_argument("--radius", type=float, help="sphere radius (default: 0.35*size)")
    g.add_argument("--r-inner", type=float, help="shell inner radius (default: 0.25*size)")
    g.add_argument("--r-outer", type=float, help="shell outer radius (default: 0.35*size)")
    g.add_argument("--ramp-axis", choices=("x", "y", "z"), default="x",
                   help="ramp gradient direction")
    g.add_argument("--ramp-scale", type=float, default=1.0, help="ramp value per voxel")
    g.add_argument("--raw-pattern", help="slice path pattern with {index}, e.g. ct_{index:04d}.raw")
    g.add_argument("--raw-dims", type=_dims, metavar="WxHxN",
                   help="slice width x height x slice count")
    g.add_argument("--raw-endianness", choices=("little", "big"), default="little",
                   help="byte order of the raw slices")
    g.add_argument("--raw-first-index", type=int, default=0,
                   help="index of the first slice file")
    g.add_argument("--spacing", type=_triple, default=(1.0, 1.0, 1.0), metavar="SX,SY,SZ",
                   help="voxel spacing in world units")


def build_parser() -> _Parser:
    parser = _Parser(prog="voxelcast",
                     description="CPU volume raycaster for 12-bit scalar grids",
                     formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    render = sub.add_parser("render", help="render one image offline",
                            formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    _dataset_flags(render)
    render.add_argument("--out", default="render.png", help="output image (.png or .ppm)")
    render.add_argument("--width", type=int, default=640, help="image width in pixels")
    render.add_argument("--height", type=int, default=480, help="image height in pixels")
    render.add_argument("--operator", choices=[o.value for o in OperatorKind],
                        default="central", help="gradient operator for shading")
    render.add_argument("--interpolation", choices=[i.value for i in InterpolationMode],
                        default="trilinear", help="volume reconstruction filter")
    render.add_argument("--mode", choices=RenderMode.ALL, default=RenderMode.SURFACE,
                        help="first-hit shading or alpha compositing")
    render.add_argument("--t-low", type=float, default=500.0, help="window lower threshold")
    render.add_argument("--t-high", type=float, default=4095.0, help="window upper threshold")
    render.add_argument("--coarse-step", type=float, default=1.0,
                        help="forward march step in world units")
    render.add_argument("--fine-step", type=float, default=0.125,
                        help="backward scan step in world units")
    render.add_argument("--refine-iters", type=int, default=6,
                        help="bisection iterations per hit")
    render.add_argument("--background", type=_quad, default=(0.0, 0.0, 0.0, 1.0),
                        metavar="R,G,B,A")
    render.add_argument("--no-octree", action="store_true",
                        help="march the full box instead of skipping empty space")
    render.add_argument("--adaptive", action="store_true",
                        help="stride through low-variation regions")
    render.add_argument("--adaptive-factor", type=int, default=4,
                        help="stride multiplier inside flat regions")
    render.add_argument("--azimuth", type=float, default=0.0, help="orbit angle, degrees")
    render.add_argument("--elevation", type=float, default=0.0, help="orbit tilt, degrees")
    render.add_argument("--zoom", type=float, default=1.0, help="dolly factor, >1 closer")
    render.add_argument("--fov", type=float, default=60.0, help="vertical field of view, degrees")
    render.add_argument("--light", type=_triple, metavar="X,Y,Z",
                        help="light position (default: at the eye)")
    render.add_argument("--clip", type=_sextuple, metavar="X0,Y0,Z0,X1,Y1,Z1",
                        help="world-space clip box")
    render.add_argument("--workers", type=int, help="render threads (default: CPU count)")
    render.add_argument("--config", help="flat JSON file with the same keys as these flags")

    bench = sub.add_parser("bench", help="benchmark a dataset x operator x resolution matrix",
                           formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    _dataset_flags(bench)
    bench.add_argument("--operators", type=_operator_list, default="central",
                       help="comma-separated operator list")
    bench.add_argument("--resolutions", type=_resolution_list,
                       default=",".join(f"{w}x{h}" for w, h in DEFAULT_RESOLUTIONS),
                       help="comma-separated WxH list")
    bench.add_argument("--warmup", type=int, default=3, help="discarded lead-in frames")
    bench.add_argument("--frames", type=int, default=20, help="measured frames per cell")
    bench.add_argument("--csv", default="bench.csv", help="report output path")
    bench.add_argument("--workers", type=int, help="render threads (default: CPU count)")

    serve = sub.add_parser("serve", help="start the interactive rendering service",
                           formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    _dataset_flags(serve)
    serve.add_argument("--host", default="127.0.0.1", help="bind address")
    serve.add_argument("--port", type=int, default=8000, help="bind port")
    serve.add_argument("--serve-width", type=int, default=480, help="initial frame width")
    serve.add_argument("--serve-height", type=int, default=360, help="initial frame height")
    serve.add_argument("--ui", help="directory of static viewer files mounted at /ui")

    phantom = sub.add_parser("phantom", help="write a synthetic dataset as raw slices",
                             formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    _dataset_flags(phantom)
    phantom.add_argument("--out-pattern", required=True,
                         help="slice path pattern with {index}, e.g. ball_{index:03d}.raw")
    phantom.add_argument("--endianness", choices=("little", "big"), default="little",
                         help="byte order of the written slices")
    parser.subcommands = {"render": render, "bench": bench, "serve": serve, "phantom": phantom}
    return parser


def parse_args(argv) -> RunConfig:
    parser = build_parser()
    ns = parser.parse_args(argv)
    if ns.command == "render" and ns.config:
        _apply_config_file(parser.subcommands["render"], ns)
        ns = parser.parse_args(argv)
    if getattr(ns, "raw_pattern", None) and not getattr(ns, "raw_dims", None):
        raise UsageError("--raw-pattern requires --raw-dims WxHxN")
    if ns.command == "bench":
        # argparse leaves declared defaults unconverted
        if isinstance(ns.operators, str):
            ns.operators = _operator_list(ns.operators)
        if isinstance(ns.resolutions, str):
            ns.resolutions = _resolution_list(ns.resolutions)
    return RunConfig(command=ns.command, ns=ns)


def _apply_config_file(subparser, ns) -> None:
    try:
        with open(ns.config) as fh:
            cfg = json.load(fh)
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {ns.config}: invalid JSON ({exc})")
    if not isinstance(cfg, dict):
        raise UsageError(f"config {ns.config}: expected a flat JSON object")
    allowed = set(vars(ns)) - {"command", "config"}
    defaults = {}
    for key, value in cfg.items():
        dest = key.replace("-", "_")
        if dest not in allowed:
            raise UsageError(f"config {ns.config}: unknown key {key!r}")
        if isinstance(value, str) and dest in _CONFIG_CONVERTERS:
            try:
                value = _CONFIG_CONVERTERS[dest](value)
            except argparse.ArgumentTypeError as exc:
                raise UsageError(f"config {ns.config}: key {key!r}: {exc}")
        defaults[dest] = value
    subparser.set_defaults(**defaults)


def build_volume(ns) -> tuple[str, Volume]:
    if ns.raw_pattern:
        w, h, n = ns.raw_dims
        vol = load_raw_slices(ns.raw_pattern, w, h, n, ns.raw_endianness,
                              first_index=ns.raw_first_index, spacing=ns.spacing)
        return "raw", vol
    kind = ns.phantom or "sphere"
    size = ns.size
    if kind == "sphere":
        radius = ns.radius if ns.radius is not None else 0.35 * size
        vol = make_phantom("sphere", size, radius=radius, spacing=ns.spacing)
    elif kind == "shell":
        r_outer = ns.r_outer if ns.r_outer is not None else 0.35 * size
        r_inner = ns.r_inner if ns.r_inner is not None else 0.25 * size
        vol = make_phantom("shell", size, r_inner=r_inner, r_outer=r_outer, spacing=ns.spacing)
    elif kind == "ramp":
        axis = "xyz".index(ns.ramp_axis)
        vol = make_phantom("ramp", size, axis=axis, scale=ns.ramp_scale, spacing=ns.spacing)
    else:
        vol = make_phantom("empty", size, spacing=ns.spacing)
    return kind, vol


def _render_scene(ns, volume) -> Scene:
    scene = default_scene(volume)
    cam = replace(scene.camera, azimuth=ns.azimuth, elevation=ns.elevation,
                  zoom=ns.zoom, fov_y=ns.fov)
    light = Light(position=ns.light) if ns.light else scene.light
    clip = ClipBox(lo=tuple(ns.clip[:3]), hi=tuple(ns.clip[3:])) if ns.clip else None
    return Scene(camera=cam, light=light, window=ThresholdWindow(ns.t_low, ns.t_high),
                 clip=clip)


def _render_settings(ns) -> RenderSettings:
    return RenderSettings(
        width=ns.width,
        height=ns.height,
        operator=OperatorKind(ns.operator),
        interpolation=InterpolationMode(ns.interpolation),
        mode=ns.mode,
        coarse_step=ns.coarse_step,
        fine_step=ns.fine_step,
        refine_iters=ns.refine_iters,
        background=ns.background,
        use_octree=not ns.no_octree,
        use_adaptive=ns.adaptive,
        adaptive_factor=ns.adaptive_factor,
    )


def _cmd_render(ns) -> int:
    _, volume = build_volume(ns)
    out = ns.out
    if not out.lower().endswith((".png", ".ppm")):
        raise UsageError(f"--out must end in .png or .ppm, got {out!r}")
    fb = render_frame(volume, _render_scene(ns, volume), _render_settings(ns),
                      workers=ns.workers)
    if out.lower().endswith(".ppm"):
        write_ppm(out, fb.pixels)
    else:
        write_png(out, fb.pixels)
    print(f"wrote {out} in {fb.render_ms:.2f} ms")
    return 0


def _cmd_bench(ns) -> int:
    name, volume = build_volume(ns)
    matrix = BenchMatrix(
        datasets=((name, volume),),
        operators=ns.operators,
        resolutions=ns.resolutions,
        warmup=ns.warmup,
        frames=ns.frames,
        workers=ns.workers,
    )
    report = run_benchmark(matrix)
    write_csv(report, ns.csv)
    for row in report.rows:
        print(f"{row.dataset} {row.operator} {row.width}x{row.height}: {row.fps:.2f} fps")
    print(f"wrote {ns.csv}")
    return 0


def _cmd_serve(ns) -> int:
    from .service import serve

    if ns.raw_pattern:
        name, volume = build_volume(ns)
        volumes = {name: volume}
    elif ns.phantom:
        name, volume = build_volume(ns)
        volumes = {name: volume}
    else:
        demo = ns.size if ns.size != 128 else 64
        volumes = {
            "ball": make_phantom("sphere", demo, radius=0.35 * demo),
            "shell": make_phantom("shell", demo, r_inner=0.25 * demo, r_outer=0.35 * demo),
        }
    settings = RenderSettings(width=ns.serve_width, height=ns.serve_height)
    print(f"serving {list(volumes)} on {ns.host}:{ns.port}")
    serve(volumes, host=ns.host, port=ns.port, settings=settings, ui_dir=ns.ui)
    return 0


def _cmd_phantom(ns) -> int:
    if ns.raw_pattern:
        raise UsageError("phantom generation takes --phantom, not --raw-pattern")
    kind, volume = build_volume(ns)
    save_raw_slices(volume, ns.out_pattern, endianness=ns.endianness)
    print(f"wrote {volume.dims[2]} slices of {kind} to {ns.out_pattern}")
    return 0


_COMMANDS = {
    "render": _cmd_render,
    "bench": _cmd_bench,
    "serve": _cmd_serve,
    "phantom": _cmd_phantom,
}


def main(config: RunConfig) -> int:
    return _COMMANDS[config.command](config.ns)


def run(argv=None) -> int:
    try:
        config = parse_args(sys.argv[1:] if argv is None else argv)
        return main(config)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        return 130
    except Exception as exc:  # noqa: BLE001 - map anything else to exit 3
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
