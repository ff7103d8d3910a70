// View-model half of the control panel: the mirrored control state and the
// pure input mappings. DOM wiring lives in main.ts; everything here is
// testable without a browser.

export interface ViewerState {
  azimuth: number;
  elevation: number;
  zoom: number;
  light: [number, number, number];
  clipLo: [number, number, number];
  clipHi: [number, number, number];
  tLow: number;
  tHigh: number;
  operator: string;
  width: number;
  height: number;
  dataset: string;
  mode: string;
}

export const OPERATORS = ["central", "sobel3d", "zucker-hummel"] as const;
export const MODES = ["surface", "composited"] as const;
export const RESOLUTIONS: ReadonlyArray<[number, number]> = [
  [320, 240],
  [480, 360],
  [640, 480],
  [800, 600],
];

/** Degrees of orbit per pixel of drag. */
export const ORBIT_SENSITIVITY = 0.5;

const ELEVATION_LIMIT = 89;
const ZOOM_MIN = 0.2;
const ZOOM_MAX = 10;

function clamp(v: number, lo: number, hi: number): number {
  return Math.min(hi, Math.max(lo, v));
}

/**
 * Absolute orbit after a drag of (dx, dy) pixels. Dragging right swings the
 * camera right (azimuth grows), dragging up tilts toward the top pole;
 * elevation is clamped short of the poles where the orbit basis degenerates.
 */
export function dragToOrbit(
  azimuth: number,
  elevation: number,
  dx: number,
  dy: number,
): { azimuth: number; elevation: number } {
  return {
    azimuth: azimuth + dx * ORBIT_SENSITIVITY,
    elevation: clamp(elevation + dy * ORBIT_SENSITIVITY, -ELEVATION_LIMIT, ELEVATION_LIMIT),
  };
}

/** Exponential zoom from wheel deltas, clamped to sane magnification. */
export function wheelZoom(zoom: number, deltaY: number): number {
  return clamp(zoom * Math.exp(-deltaY * 0.0015), ZOOM_MIN, ZOOM_MAX);
}

/** Starting state mirroring the service's defaults for a fresh session. */
export function initialState(width: number, height: number): ViewerState {
  return {
    azimuth: 0,
    elevation: 0,
    zoom: 1,
    light: [0, 0, 0],
    clipLo: [0, 0, 0],
    clipHi: [1, 1, 1],
    tLow: 500,
    tHigh: 4095,
    operator: "central",
    width,
    height,
    dataset: "",
    mode: "surface",
  };
}

/**
 * Clip sliders run in fractions of the volume extent so they survive dataset
 * switches; the wire wants world units.
 */
export function clipToWorld(
  frac: [number, number, number],
  dims: [number, number, number],
): [number, number, number] {
  return [frac[0] * dims[0], frac[1] * dims[1], frac[2] * dims[2]];
}
