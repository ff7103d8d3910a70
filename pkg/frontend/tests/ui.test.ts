import { describe, expect, it } from "vitest";
import {
  clipToWorld,
  dragToOrbit,
  initialState,
  ORBIT_SENSITIVITY,
  wheelZoom,
} from "../src/ui.js";

describe("dragToOrbit", () => {
  it("maps horizontal pixels to azimuth at the advertised sensitivity", () => {
    const out = dragToOrbit(10, 0, 40, 0);
    expect(out.azimuth).toBe(10 + 40 * ORBIT_SENSITIVITY);
    expect(out.elevation).toBe(0);
  });

  it("clamps elevation short of the poles", () => {
    expect(dragToOrbit(0, 85, 0, 1000).elevation).toBe(89);
    expect(dragToOrbit(0, -85, 0, -1000).elevation).toBe(-89);
  });
});

describe("wheelZoom", () => {
  it("zooms in on scroll-up, out on scroll-down, within limits", () => {
    expect(wheelZoom(1, -120)).toBeGreaterThan(1);
    expect(wheelZoom(1, 120)).toBeLessThan(1);
    expect(wheelZoom(10, -10_000)).toBe(10);
    expect(wheelZoom(0.2, 10_000)).toBe(0.2);
  });
});

describe("state helpers", () => {
  it("starts from the service defaults", () => {
    const s = initialState(480, 360);
    expect([s.azimuth, s.elevation, s.zoom]).toEqual([0, 0, 1]);
    expect([s.tLow, s.tHigh]).toEqual([500, 4095]);
    expect(s.operator).toBe("central");
    expect(s.mode).toBe("surface");
  });

  it("scales clip fractions by the dataset dims", () => {
    expect(clipToWorld([0.5, 0.25, 1], [64, 64, 32])).toEqual([32, 16, 32]);
  });
});
