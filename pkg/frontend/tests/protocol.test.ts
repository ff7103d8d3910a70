import { describe, expect, it } from "vitest";
import {
  decodeFramePacket,
  HEADER_BYTES,
  httpOrigin,
  parseServerText,
  serviceUrl,
  setOrbit,
  setResolution,
  setThresholds,
  VALUE_MAX,
} from "../src/protocol.js";

function packet(frameId: bigint, png: Uint8Array, lengthField?: number): ArrayBuffer {
  const buf = new ArrayBuffer(HEADER_BYTES + png.byteLength);
  const view = new DataView(buf);
  view.setBigUint64(0, frameId);
  view.setUint32(8, lengthField ?? png.byteLength);
  new Uint8Array(buf, HEADER_BYTES).set(png);
  return buf;
}

describe("decodeFramePacket", () => {
  it("splits header and payload", () => {
    const png = new Uint8Array([0x89, 0x50, 0x4e, 0x47, 1, 2, 3]);
    const out = decodeFramePacket(packet(7n, png));
    expect(out.frameId).toBe(7n);
    expect([...out.png]).toEqual([...png]);
  });

  it("keeps ids beyond 32 bits intact", () => {
    const out = decodeFramePacket(packet(0x1_0000_0001n, new Uint8Array([9])));
    expect(out.frameId).toBe(0x1_0000_0001n);
  });

  it("rejects truncated packets and wrong length fields", () => {
    expect(() => decodeFramePacket(new ArrayBuffer(4))).toThrow(/too short/);
    const bad = packet(1n, new Uint8Array([1, 2, 3]), 5);
    expect(() => decodeFramePacket(bad)).toThrow(/length field says 5/);
  });
});

describe("parseServerText", () => {
  it("passes metadata and error through, rejects anything else", () => {
    const meta = parseServerText(
      '{"type":"metadata","frame_id":3,"render_ms":10.5,"fps":95.2,"operator":"central","width":64,"height":48}',
    );
    expect(meta.type).toBe("metadata");
    const err = parseServerText('{"type":"error","message":"nope"}');
    expect(err).toEqual({ type: "error", message: "nope" });
    expect(() => parseServerText('{"type":"frame"}')).toThrow(/unknown server message/);
    expect(() => parseServerText("[1,2]")).toThrow();
  });
});

describe("control builders", () => {
  it("emit snake_case wire shapes with no extra fields", () => {
    expect(setOrbit(30, -10)).toEqual({ type: "set_orbit", azimuth: 30, elevation: -10 });
    expect(setResolution(640, 480)).toEqual({ type: "set_resolution", w: 640, h: 480 });
  });

  it("thresholds clamp to the 12-bit range and refuse inversion", () => {
    expect(setThresholds(500, 9999)).toEqual({
      type: "set_thresholds",
      t_low: 500,
      t_high: VALUE_MAX,
    });
    expect(setThresholds(-5, 100)).toEqual({ type: "set_thresholds", t_low: 0, t_high: 100 });
    expect(setThresholds(800, 700)).toBeNull();
    expect(setThresholds(700, 700)).not.toBeNull(); // single-value window is legal
  });
});

describe("url helpers", () => {
  it("derives the socket url from the page, query parameter wins", () => {
    expect(serviceUrl("http://localhost:8000/ui/")).toBe("ws://localhost:8000/ws");
    expect(serviceUrl("https://viewer.example/ui/index.html")).toBe("wss://viewer.example/ws");
    expect(serviceUrl("http://anyhost/?service=ws://10.0.0.5:9100/ws")).toBe(
      "ws://10.0.0.5:9100/ws",
    );
  });

  it("maps the socket url back to its http origin", () => {
    expect(httpOrigin("ws://localhost:9100/ws")).toBe("http://localhost:9100");
    expect(httpOrigin("wss://viewer.example/ws")).toBe("https://viewer.example");
  });
});
