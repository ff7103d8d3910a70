"""Interactive rendering service.

One WebSocket channel per viewer: the client sends JSON control messages
(absolute set-style updates), the server answers each with a freshly
rendered frame as a binary message [8-byte frame id BE][4-byte length BE]
[PNG bytes] followed by a JSON metadata message.  All state changes and
render launches are serialized through one lock, so concurrent clients
see a single consistent session.
"""

from __future__ import annotations

import asyncio
import json
import math
import struct
from dataclasses import dataclass, replace
from typing import Mapping

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from . import __version__
from .gradients import OperatorKind
from .image_io import png_bytes
from .octree import Octree, build_octree
from .raycast import (
    ClipBox,
    RenderMode,
    RenderSettings,
    Scene,
    ThresholdWindow,
    default_scene,
    render_frame,
)
from .volume import Volume

MAX_DIMENSION = 4096


class ControlError(ValueError):
    """Rejected control message; session state stays as it was."""


@dataclass(frozen=True)
class SessionState:
    dataset: str
    datasets: tuple[str, ...]
    scene: Scene
    settings: RenderSettings
    frame_counter: int = 0
    last_render_ms: float = 0.0


def initial_state(volumes: Mapping[str, Volume], dataset: str | None = None,
                  settings: RenderSettings | None = None,
                  scene: Scene | None = None) -> SessionState:
    if not volumes:
        raise ValueError("at least one dataset is required")
    names = tuple(volumes)
    dataset = dataset if dataset is not None else names[0]
    if dataset not in volumes:
        raise ValueError(f"unknown dataset {dataset!r}; have {list(names)}")
    return SessionState(
        dataset=dataset,
        datasets=names,
        scene=scene if scene is not None else default_scene(volumes[dataset]),
        settings=settings if settings is not None else RenderSettings(),
    )


def _number(msg, key):
    v = msg.get(key)
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ControlError(f"field {key!r} must be a finite number, got {v!r}")
    return float(v)


def _triple(msg, key):
    v = msg.get(key)
    if not isinstance(v, (list, tuple)) or len(v) != 3:
        raise ControlError(f"field {key!r} must be a list of 3 numbers, got {v!r}")
    out = []
    for c in v:
        if isinstance(c, bool) or not isinstance(c, (int, float)) or not math.isfinite(c):
            raise ControlError(f"field {key!r} must contain finite numbers, got {c!r}")
        out.append(float(c))
    return tuple(out)


def _expect_keys(msg, *keys):
    extra = set(msg) - {"type", *keys}
    if extra:
        raise ControlError(f"unexpected fields for {msg.get('type')!r}: {sorted(extra)}")


def apply_control(state: SessionState, msg: Mapping) -> SessionState:
    """Validated state transition; raises ControlError and leaves the
    state untouched on any invalid payload."""
    if not isinstance(msg, Mapping):
        raise ControlError("control message must be a JSON object")
    mtype = msg.get("type")
    try:
        if mtype == "set_orbit":
            _expect_keys(msg, "azimuth", "elevation")
            cam = replace(state.scene.camera, azimuth=_number(msg, "azimuth"),
                          elevation=_number(msg, "elevation"))
            return replace(state, scene=replace(state.scene, camera=cam))
        if mtype == "set_zoom":
            _expect_keys(msg, "z")
            cam = replace(state.scene.camera, zoom=_number(msg, "z"))
            return replace(state, scene=replace(state.scene, camera=cam))
        if mtype == "set_light":
            _expect_keys(msg, "x", "y", "z")
            pos = (_number(msg, "x"), _number(msg, "y"), _number(msg, "z"))
            light = replace(state.scene.light, position=pos)
            return replace(state, scene=replace(state.scene, light=light))
        if mtype == "set_clip_box":
            _expect_keys(msg, "lo", "hi")
            clip = ClipBox(lo=_triple(msg, "lo"), hi=_triple(msg, "hi"))
            return replace(state, scene=replace(state.scene, clip=clip))
        if mtype == "set_thresholds":
            _expect_keys(msg, "t_low", "t_high")
            window = ThresholdWindow(_number(msg, "t_low"), _number(msg, "t_high"))
            return replace(state, scene=replace(state.scene, window=window))
        if mtype == "set_operator":
            _expect_keys(msg, "name")
            op = OperatorKind(msg.get("name"))
            return replace(state, settings=replace(state.settings, operator=op))
        if mtype == "set_resolution":
            _expect_keys(msg, "w", "h")
            w = _number(msg, "w")
            h = _number(msg, "h")
            if w != int(w) or h != int(h):
                raise ControlError("resolution must be whole pixels")
            if not (1 <= w <= MAX_DIMENSION and 1 <= h <= MAX_DIMENSION):
                raise ControlError(f"resolution out of range 1..{MAX_DIMENSION}")
            return replace(state, settings=replace(state.settings, width=int(w), height=int(h)))
        if mtype == "set_dataset":
            _expect_keys(msg, "id")
            name = msg.get("id")
            if name not in state.datasets:
                raise ControlError(f"unknown dataset {name!r}; have {list(state.datasets)}")
            # scene is kept as-is: controls are absolute and a dataset
            # switch must not yank the camera the viewer just placed
            return replace(state, dataset=name)
        if mtype == "set_mode":
            _expect_keys(msg, "mode")
            mode = msg.get("mode")
            if mode not in RenderMode.ALL:
                raise ControlError(f"unknown mode {mode!r}; have {list(RenderMode.ALL)}")
            return replace(state, settings=replace(state.settings, mode=mode))
    except ControlError:
        raise
    except ValueError as exc:
        raise ControlError(str(exc)) from exc
    raise ControlError(f"unknown control message type {mtype!r}")


class Session:
    """Owner of the mutable state plus per-dataset octree cache."""

    def __init__(self, volumes: Mapping[str, Volume], state: SessionState):
        self.volumes = dict(volumes)
        self.state = state
        self.lock = asyncio.Lock()
        self._trees: dict[str, Octree] = {}

    def octree(self, name: str) -> Octree:
        tree = self._trees.get(name)
        if tree is None:
            tree = build_octree(self.volumes[name],
                                min_block=self.state.settings.octree_min_block,
                                max_depth=self.state.settings.octree_max_depth)
            self._trees[name] = tree
        return tree

    def commit(self, new: SessionState) -> None:
        self.state = new

    def render(self) -> tuple[bytes, dict]:
        """Render the current state, bump the frame counter, and return
        (png, metadata).  Callers hold the session lock."""
        st = self.state
        volume = self.volumes[st.dataset]
        tree = self.octree(st.dataset) if (st.settings.use_octree or st.settings.use_adaptive) else None
        fb = render_frame(volume, st.scene, st.settings, octree=tree)
        fid = st.frame_counter + 1
        self.state = replace(st, frame_counter=fid, last_render_ms=fb.render_ms)
        meta = {
            "type": "metadata",
            "frame_id": fid,
            "render_ms": fb.render_ms,
            "fps": 1000.0 / fb.render_ms if fb.render_ms > 0 else 0.0,
            "operator": st.settings.operator.value,
            "width": st.settings.width,
            "height": st.settings.height,
        }
        return png_bytes(fb.pixels), meta


def frame_packet(frame_id: int, png: bytes) -> bytes:
    return struct.pack(">QI", frame_id, len(png)) + png


def create_app(volumes: Mapping[str, Volume], *, dataset: str | None = None,
               settings: RenderSettings | None = None, scene: Scene | None = None,
               ui_dir=None) -> FastAPI:
    app = FastAPI(title="voxelcast", version=__version__)
    session = Session(volumes, initial_state(volumes, dataset, settings, scene))
    app.state.session = session

    @app.get("/healthz")
    def healthz():
        # dims let a client scale clip-box controls in world units
        return {
            "status": "ok",
            "version": __version__,
            "datasets": list(session.volumes),
            "dims": {name: list(v.dims) for name, v in session.volumes.items()},
        }

    async def send_frame(sock: WebSocket) -> None:
        loop = asyncio.get_running_loop()
        png, meta = await loop.run_in_executor(None, session.render)
        await sock.send_bytes(frame_packet(meta["frame_id"], png))
        await sock.send_text(json.dumps(meta))

    @app.websocket("/ws")
    async def ws(sock: WebSocket):
        await sock.accept()
        try:
            async with session.lock:
                await send_frame(sock)
            while True:
                text = await sock.receive_text()
                try:
                    msg = json.loads(text)
                    if not isinstance(msg, dict):
                        raise ValueError("control message must be a JSON object")
                except ValueError as exc:
                    await sock.send_text(json.dumps({"type": "error", "message": f"bad JSON: {exc}"}))
                    continue
                async with session.lock:
                    if msg.get("type") == "request_frame":
                        await send_frame(sock)
                        continue
                    try:
                        session.commit(apply_control(session.state, msg))
                    except ControlError as exc:
                        await sock.send_text(json.dumps({"type": "error", "message": str(exc)}))
                        continue
                    await send_frame(sock)
        except WebSocketDisconnect:
            return

    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")
    return app


def serve(volumes: Mapping[str, Volume], host: str = "127.0.0.1", port: int = 8000,
          **kwargs) -> None:
    """Blocks until shutdown."""
    import uvicorn

    uvicorn.run(create_app(volumes, **kwargs), host=host, port=port, log_level="warning")
