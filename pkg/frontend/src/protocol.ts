// Wire types for the render service. Client-to-server messages are JSON
// control objects; server-to-client traffic is a binary frame packet
// [8-byte frame id BE][4-byte PNG length BE][PNG bytes] followed by a JSON
// metadata message for that frame. Invalid controls come back as
// {"type": "error"} without closing the channel.

export interface FrameMetadata {
  type: "metadata";
  frame_id: number;
  render_ms: number;
  fps: number;
  operator: string;
  width: number;
  height: number;
}

export interface ErrorReply {
  type: "error";
  message: string;
}

export type ServerText = FrameMetadata | ErrorReply;

export type Control =
  | { type: "set_orbit"; azimuth: number; elevation: number }
  | { type: "set_zoom"; z: number }
  | { type: "set_light"; x: number; y: number; z: number }
  | { type: "set_clip_box"; lo: [number, number, number]; hi: [number, number, number] }
  | { type: "set_thresholds"; t_low: number; t_high: number }
  | { type: "set_operator"; name: string }
  | { type: "set_resolution"; w: number; h: number }
  | { type: "set_dataset"; id: string }
  | { type: "set_mode"; mode: string }
  | { type: "request_frame" };

export const HEADER_BYTES = 12;

/** Stored sample ceiling on the server (12-bit data in 16-bit words). */
export const VALUE_MAX = 4095;

export interface FramePacket {
  frameId: bigint;
  png: Uint8Array;
}

export function decodeFramePacket(buf: ArrayBuffer): FramePacket {
  if (buf.byteLength < HEADER_BYTES) {
    throw new Error(`frame packet too short: ${buf.byteLength} bytes`);
  }
  const view = new DataView(buf);
  const frameId = view.getBigUint64(0);
  const length = view.getUint32(8);
  if (buf.byteLength !== HEADER_BYTES + length) {
    throw new Error(
      `frame length field says ${length}, packet carries ${buf.byteLength - HEADER_BYTES}`,
    );
  }
  return { frameId, png: new Uint8Array(buf, HEADER_BYTES, length) };
}

export function parseServerText(text: string): ServerText {
  const msg = JSON.parse(text) as Record<string, unknown>;
  if (msg === null || typeof msg !== "object") {
    throw new Error("server text message is not an object");
  }
  if (msg.type === "metadata" || msg.type === "error") {
    return msg as unknown as ServerText;
  }
  throw new Error(`unknown server message type ${String(msg.type)}`);
}

export const setOrbit = (azimuth: number, elevation: number): Control => ({
  type: "set_orbit",
  azimuth,
  elevation,
});

export const setZoom = (z: number): Control => ({ type: "set_zoom", z });

export const setLight = (x: number, y: number, z: number): Control => ({
  type: "set_light",
  x,
  y,
  z,
});

export const setClipBox = (
  lo: [number, number, number],
  hi: [number, number, number],
): Control => ({ type: "set_clip_box", lo, hi });

export const setOperator = (name: string): Control => ({ type: "set_operator", name });

export const setResolution = (w: number, h: number): Control => ({
  type: "set_resolution",
  w,
  h,
});

export const setDataset = (id: string): Control => ({ type: "set_dataset", id });

export const setMode = (mode: string): Control => ({ type: "set_mode", mode });

export const requestFrame = (): Control => ({ type: "request_frame" });

function clamp(v: number, lo: number, hi: number): number {
  return Math.min(hi, Math.max(lo, v));
}

/**
 * Threshold window builder. Returns null for an inverted window (low > high)
 * so slider handlers can simply skip sending instead of surfacing a server
 * rejection the user cannot act on.
 */
export function setThresholds(low: number, high: number): Control | null {
  const lo = clamp(low, 0, VALUE_MAX);
  const hi = clamp(high, 0, VALUE_MAX);
  if (lo > hi) return null;
  return { type: "set_thresholds", t_low: lo, t_high: hi };
}

/**
 * Service endpoint for a given page address: an explicit `?service=` query
 * parameter wins, otherwise the page's own host with the /ws path.
 */
export function serviceUrl(href: string): string {
  const page = new URL(href);
  const explicit = page.searchParams.get("service");
  if (explicit) return explicit;
  const proto = page.protocol === "https:" ? "wss:" : "ws:";
  return `${proto}//${page.host}/ws`;
}

/** The websocket URL's HTTP sibling, for /healthz and static asset fetches. */
export function httpOrigin(wsUrl: string): string {
  const u = new URL(wsUrl);
  u.protocol = u.protocol === "wss:" ? "https:" : "http:";
  u.pathname = "";
  u.search = "";
  return u.origin;
}
