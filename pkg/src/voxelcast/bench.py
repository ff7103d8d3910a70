"""Throughput measurement: frames per second over a matrix of datasets,
gradient operators and image resolutions, with a least-squares check that
mean frame time grows affinely with pixel count."""

from __future__ import annotations

import csv
import io
import platform
import time
from dataclasses import dataclass, field, replace

from .gradients import OperatorKind
from .octree import build_octree
from .raycast import RenderSettings, default_scene, render_frame
from .volume import Volume

# 4:3 sizes spanning a 4x pixel-count range, enough spread for the affine fit
DEFAULT_RESOLUTIONS = ((512, 384), (640, 480), (800, 600), (1024, 768))

CSV_HEADER = ("dataset", "operator", "width", "height", "frames", "total_seconds", "fps")


@dataclass(frozen=True)
class BenchRow:
    dataset: str
    operator: str
    width: int
    height: int
    frames: int
    total_seconds: float
    fps: float

    def __post_init__(self):
        if self.frames < 1:
            raise ValueError(f"frames must be >= 1, got {self.frames}")
        if self.total_seconds <= 0:
            raise ValueError(f"total_seconds must be positive, got {self.total_seconds}")
        want = self.frames / self.total_seconds
        if abs(self.fps - want) > 1e-9 * max(abs(want), 1.0):
            raise ValueError(f"fps {self.fps} does not equal frames/total_seconds {want}")

    @classmethod
    def make(cls, dataset, operator, width, height, frames, total_seconds):
        if total_seconds <= 0:
            raise ValueError(f"total_seconds must be positive, got {total_seconds}")
        return cls(dataset, operator, width, height, frames, total_seconds,
                   frames / total_seconds)

    @property
    def pixels(self) -> int:
        return self.width * self.height

    @property
    def mean_frame_seconds(self) -> float:
        return self.total_seconds / self.frames


@dataclass
class BenchReport:
    rows: list[BenchRow] = field(default_factory=list)
    metadata: dict[str, str] = field(default_factory=dict)


@dataclass
class BenchMatrix:
    """One benchmark run: every dataset is rendered with every operator at
    every resolution."""

    datasets: tuple[tuple[str, Volume], ...]
    operators: tuple[OperatorKind, ...] = (OperatorKind.CENTRAL_DIFFERENCE,)
    resolutions: tuple[tuple[int, int], ...] = DEFAULT_RESOLUTIONS
    warmup: int = 3
    frames: int = 20
    settings: RenderSettings | None = None
    workers: int | None = None

    def __post_init__(self):
        if not self.datasets:
            raise ValueError("at least one dataset is required")
        if not self.operators:
            raise ValueError("at least one operator is required")
        if not self.resolutions:
            raise ValueError("at least one resolution is required")
        if self.warmup < 0:
            raise ValueError(f"warmup must be >= 0, got {self.warmup}")
        if self.frames < 1:
            raise ValueError(f"measured frame count must be >= 1, got {self.frames}")


def run_benchmark(matrix: BenchMatrix) -> BenchReport:
    """Render warmup frames (discarded), then time the measured frames.
    The camera orbits one degree per frame so no two frames repeat."""
    base = matrix.settings or RenderSettings()
    report = BenchReport(metadata={
        "timing": "pure render time, no display or encode overhead",
        "python": platform.python_version(),
        "machine": platform.machine(),
        "warmup": str(matrix.warmup),
    })
    for name, volume in matrix.datasets:
        scene = default_scene(volume)
        tree = None
        if base.use_octree or base.use_adaptive:  # built once, not per frame
            tree = build_octree(volume, min_block=base.octree_min_block,
                                max_depth=base.octree_max_depth)
        for op in matrix.operators:
            for width, height in matrix.resolutions:
                settings = replace(base, operator=op, width=width, height=height)
                angle = 0.0

                def frame():
                    nonlocal angle
                    cam = replace(scene.camera, azimuth=angle)
                    render_frame(volume, replace(scene, camera=cam), settings,
                                 workers=matrix.workers, octree=tree)
                    angle += 1.0

                for _ in range(matrix.warmup):
                    frame()
                start = time.perf_counter()
                for _ in range(matrix.frames):
                    frame()
                total = time.perf_counter() - start
                report.rows.append(BenchRow.make(
                    name, op.value, width, height, matrix.frames, total))
    return report


def fit_time_vs_pixels(report: BenchReport, dataset: str | None = None,
                       operator: str | None = None) -> tuple[float, float, float]:
    """Least-squares fit of mean frame time against pixel count for one
    (dataset, operator) group.  Returns (slope, intercept, r2)."""
    rows = [r for r in report.rows
            if (dataset is None or r.dataset == dataset)
            and (operator is None or r.operator == operator)]
    groups = {(r.dataset, r.operator) for r in rows}
    if len(groups) > 1:
        raise ValueError(f"rows span {len(groups)} (dataset, operator) groups; select one")
    if len(rows) < 3:
        raise ValueError(f"need at least 3 resolutions to fit, got {len(rows)}")
    xs = [float(r.pixels) for r in rows]
    ys = [r.mean_frame_seconds for r in rows]
    n = len(xs)
    xm = sum(xs) / n
    ym = sum(ys) / n
    sxx = sum((x - xm) ** 2 for x in xs)
    if sxx == 0.0:
        raise ValueError("all rows share one pixel count; cannot fit")
    slope = sum((x - xm) * (y - ym) for x, y in zip(xs, ys)) / sxx
    intercept = ym - slope * xm
    ss_res = sum((y - (slope * x + intercept)) ** 2 for x, y in zip(xs, ys))
    ss_tot = sum((y - ym) ** 2 for y in ys)
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return slope, intercept, r2


def write_csv(report: BenchReport, path) -> None:
    """`# key=value` metadata comments, then the fixed header and rows."""
    with open(path, "w", newline="") as fh:
        _write(report, fh)


def csv_text(report: BenchReport) -> str:
    buf = io.StringIO()
    _write(report, buf)
    return buf.getvalue()


def _write(report, fh):
    for key in sorted(report.metadata):
        if "\n" in key or "\n" in report.metadata[key] or "=" in key:
            raise ValueError(f"metadata entry {key!r} cannot be encoded on a comment line")
        fh.write(f"# {key}={report.metadata[key]}\n")
    writer = csv.writer(fh)
    writer.writerow(CSV_HEADER)
    for r in report.rows:
        writer.writerow([r.dataset, r.operator, r.width, r.height, r.frames,
                         repr(r.total_seconds), repr(r.fps)])


def read_csv(path) -> BenchReport:
    with open(path, "r", newline="") as fh:
        return parse_csv(fh.read())


def parse_csv(text: str) -> BenchReport:
    metadata = {}
    lines = []
    for line in text.splitlines():
        if line.startswith("#"):
            key, sep, value = line[1:].strip().partition("=")
            if not sep:
                raise ValueError(f"malformed metadata comment: {line!r}")
            metadata[key.strip()] = value
        elif line.strip():
            lines.append(line)
    if not lines:
        raise ValueError("report has no header row")
    reader = csv.reader(io.StringIO("\n".join(lines)))
    header = tuple(next(reader))
    if header != CSV_HEADER:
        raise ValueError(f"unexpected header {header!r}")
    rows = []
    for rec in reader:
        if len(rec) != len(CSV_HEADER):
            raise ValueError(f"row has {len(rec)} fields, expected {len(CSV_HEADER)}: {rec!r}")
        rows.append(BenchRow(rec[0], rec[1], int(rec[2]), int(rec[3]), int(rec[4]),
                             float(rec[5]), float(rec[6])))
    return BenchReport(rows=rows, metadata=metadata)
