import { ViewerClient, type Status } from "./client.js";
import { FrameSequencer } from "./frames.js";
import {
  httpOrigin,
  serviceUrl,
  setClipBox,
  setDataset,
  setLight,
  setMode,
  setOperator,
  setOrbit,
  setResolution,
  setThresholds,
  setZoom,
  VALUE_MAX,
} from "./protocol.js";
import {
  clipToWorld,
  dragToOrbit,
  initialState,
  MODES,
  OPERATORS,
  ORBIT_SENSITIVITY,
  RESOLUTIONS,
  wheelZoom,
  type ViewerState,
} from "./ui.js";

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
};

const canvas = $<HTMLCanvasElement>("frame");
const ctx = canvas.getContext("2d");
if (!ctx) throw new Error("2d canvas unavailable");
const readout = $<HTMLSpanElement>("readout");
const statusLine = $<HTMLSpanElement>("status");
const notice = $<HTMLSpanElement>("notice");

const url = serviceUrl(window.location.href);
const state: ViewerState = initialState(480, 360);
canvas.width = state.width;
canvas.height = state.height;

// dims of the selected dataset, for scaling clip fractions to world units
let dims: [number, number, number] = [1, 1, 1];
const allDims = new Map<string, [number, number, number]>();

const seq = new FrameSequencer();

const client = new ViewerClient(url, {
  frame(p) {
    if (!seq.accept(p.frameId)) return; // stale: an older render overtaken on the wire
    const id = p.frameId;
    const blob = new Blob([p.png.slice().buffer as ArrayBuffer], { type: "image/png" });
    void createImageBitmap(blob).then((bmp) => {
      if (seq.shownId !== id) return; // a newer frame landed while decoding
      if (canvas.width !== bmp.width || canvas.height !== bmp.height) {
        canvas.width = bmp.width;
        canvas.height = bmp.height;
      }
      ctx.drawImage(bmp, 0, 0);
      bmp.close();
    });
  },
  metadata(m) {
    if (!seq.onMetadata(m)) return; // readout must describe the shown frame only
    readout.textContent =
      `${m.fps.toFixed(1)} fps · ${m.render_ms.toFixed(1)} ms · ` +
      `${m.operator} · ${m.width}×${m.height}`;
    const select = $<HTMLSelectElement>("operator");
    if (select.value !== m.operator) select.value = m.operator;
  },
  error(message) {
    notice.textContent = message;
  },
  status(s: Status, detail?: string) {
    statusLine.textContent = detail ? `${s} (${detail})` : s;
    statusLine.className = s;
    if (s === "connected") seq.reset(); // server restarts renumber frames from 1
  },
});

function sendState(): void {
  client.control(setOrbit(state.azimuth, state.elevation));
}

// --- canvas: drag orbits, wheel zooms -------------------------------------

let dragging = false;
let lastX = 0;
let lastY = 0;

canvas.addEventListener("pointerdown", (ev) => {
  dragging = true;
  lastX = ev.clientX;
  lastY = ev.clientY;
  canvas.setPointerCapture(ev.pointerId);
});

canvas.addEventListener("pointermove", (ev) => {
  if (!dragging) return;
  const next = dragToOrbit(state.azimuth, state.elevation, ev.clientX - lastX, ev.clientY - lastY);
  lastX = ev.clientX;
  lastY = ev.clientY;
  state.azimuth = next.azimuth;
  state.elevation = next.elevation;
  sendState();
});

canvas.addEventListener("pointerup", () => {
  dragging = false;
});

canvas.addEventListener("wheel", (ev) => {
  ev.preventDefault();
  state.zoom = wheelZoom(state.zoom, ev.deltaY);
  client.control(setZoom(state.zoom));
});

window.addEventListener("keydown", (ev) => {
  const step = 5 / ORBIT_SENSITIVITY; // five degrees per key press
  const moves: Record<string, [number, number]> = {
    ArrowLeft: [-step, 0],
    ArrowRight: [step, 0],
    ArrowUp: [0, step],
    ArrowDown: [0, -step],
  };
  const move = moves[ev.key];
  if (!move) return;
  const next = dragToOrbit(state.azimuth, state.elevation, move[0], move[1]);
  state.azimuth = next.azimuth;
  state.elevation = next.elevation;
  sendState();
});

// --- control panel ---------------------------------------------------------

function slider(id: string, min: number, max: number, step: number, value: number,
                oninput: (v: number) => void): void {
  const el = $<HTMLInputElement>(id);
  el.min = String(min);
  el.max = String(max);
  el.step = String(step);
  el.value = String(value);
  el.addEventListener("input", () => oninput(Number(el.value)));
}

for (const [axis, idx] of [["x", 0], ["y", 1], ["z", 2]] as const) {
  slider(`light-${axis}`, -200, 200, 1, 0, (v) => {
    state.light[idx] = v;
    client.control(setLight(...state.light));
  });
  slider(`clip-lo-${axis}`, 0, 1, 0.01, 0, (v) => {
    state.clipLo[idx] = Math.min(v, state.clipHi[idx]);
    sendClip();
  });
  slider(`clip-hi-${axis}`, 0, 1, 0.01, 1, (v) => {
    state.clipHi[idx] = Math.max(v, state.clipLo[idx]);
    sendClip();
  });
}

function sendClip(): void {
  client.control(setClipBox(clipToWorld(state.clipLo, dims), clipToWorld(state.clipHi, dims)));
}

slider("t-low", 0, VALUE_MAX, 1, state.tLow, (v) => {
  state.tLow = v;
  sendThresholds();
});
slider("t-high", 0, VALUE_MAX, 1, state.tHigh, (v) => {
  state.tHigh = v;
  sendThresholds();
});

function sendThresholds(): void {
  const msg = setThresholds(state.tLow, state.tHigh);
  if (msg) {
    notice.textContent = "";
    client.control(msg);
  } else {
    notice.textContent = "threshold low exceeds high; not sent";
  }
}

function fillSelect(id: string, options: readonly string[], value: string,
                    onchange: (v: string) => void): HTMLSelectElement {
  const el = $<HTMLSelectElement>(id);
  el.replaceChildren(
    ...options.map((name) => new Option(name, name, false, name === value)),
  );
  el.addEventListener("change", () => onchange(el.value));
  return el;
}

fillSelect("operator", OPERATORS, state.operator, (v) => {
  state.operator = v;
  client.control(setOperator(v));
});

fillSelect("mode", MODES, state.mode, (v) => {
  state.mode = v;
  client.control(setMode(v));
});

fillSelect(
  "resolution",
  RESOLUTIONS.map(([w, h]) => `${w}×${h}`),
  `${state.width}×${state.height}`,
  (v) => {
    const [w, h] = v.split("×").map(Number);
    state.width = w ?? state.width;
    state.height = h ?? state.height;
    client.control(setResolution(state.width, state.height));
  },
);

// dataset list comes from the health endpoint, which also carries the dims
// needed to scale clip-box fractions into world units
void fetch(`${httpOrigin(url)}/healthz`)
  .then((resp) => resp.json())
  .then((body: { datasets: string[]; dims?: Record<string, number[]> }) => {
    for (const name of body.datasets) {
      const d = body.dims?.[name];
      if (d && d.length === 3) allDims.set(name, [d[0]!, d[1]!, d[2]!]);
    }
    state.dataset = body.datasets[0] ?? "";
    dims = allDims.get(state.dataset) ?? dims;
    fillSelect("dataset", body.datasets, state.dataset, (v) => {
      state.dataset = v;
      dims = allDims.get(v) ?? dims;
      client.control(setDataset(v));
    });
  })
  .catch(() => {
    notice.textContent = "health endpoint unreachable; dataset list unavailable";
  });

client.connect();
