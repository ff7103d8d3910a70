// End-to-end checks against a live render service: the happy path a user
// actually exercises (connect, drag, switch operator), plus failure modes
// (dead endpoint, server restart mid-session).

import { spawn, type ChildProcess } from "node:child_process";
import { afterAll, beforeAll, describe, expect, it } from "vitest";
import WebSocket from "ws";
import { ViewerClient, type SocketLike, type Status } from "../src/client.js";
import { FrameSequencer } from "../src/frames.js";
import { setOperator, setOrbit, type FrameMetadata, type FramePacket } from "../src/protocol.js";

const PORT = 18000 + (process.pid % 2000);
const URL_WS = `ws://127.0.0.1:${PORT}/ws`;

const wsFactory = (url: string): SocketLike => {
  const sock = new WebSocket(url);
  sock.binaryType = "arraybuffer";
  return sock as unknown as SocketLike;
};

function startService(): ChildProcess {
  return spawn(
    "python3",
    ["-m", "voxelcast", "serve", "--port", String(PORT),
     "--phantom", "sphere", "--size", "24",
     "--serve-width", "64", "--serve-height", "48"],
    { stdio: ["ignore", "ignore", "inherit"] },
  );
}

async function waitHealthy(timeoutMs = 60_000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    try {
      const resp = await fetch(`http://127.0.0.1:${PORT}/healthz`);
      if (resp.ok) return;
    } catch {
      // not up yet
    }
    await sleep(250);
  }
  throw new Error("service did not come up");
}

const sleep = (ms: number) => new Promise((r) => setTimeout(r, ms));

async function waitUntil(pred: () => boolean, timeoutMs: number, what: string): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    if (pred()) return;
    await sleep(10);
  }
  throw new Error(`timed out waiting for ${what}`);
}

interface Harness {
  client: ViewerClient;
  seq: FrameSequencer;
  frames: FramePacket[];
  metas: FrameMetadata[];
  statuses: Status[];
  errors: string[];
}

function openViewer(): Harness {
  const seq = new FrameSequencer();
  const frames: FramePacket[] = [];
  const metas: FrameMetadata[] = [];
  const statuses: Status[] = [];
  const errors: string[] = [];
  const client = new ViewerClient(
    URL_WS,
    {
      frame(p) {
        if (seq.accept(p.frameId)) frames.push(p);
      },
      metadata(m) {
        if (seq.onMetadata(m)) metas.push(m);
      },
      error(m) {
        errors.push(m);
      },
      status(s) {
        statuses.push(s);
        if (s === "connected") seq.reset();
      },
    },
    wsFactory,
  );
  client.connect();
  return { client, seq, frames, metas, statuses, errors };
}

describe("viewer against a live service", () => {
  let service: ChildProcess;

  beforeAll(async () => {
    service = startService();
    await waitHealthy();
  }, 90_000);

  afterAll(() => {
    service.kill();
  });

  it("shows a first frame, orbits within the latency budget, echoes the operator", async () => {
    const h = openViewer();
    try {
      await waitUntil(() => h.frames.length >= 1 && h.metas.length >= 1, 15_000, "first frame");
      expect(h.frames[0]!.png.slice(0, 4)).toEqual(new Uint8Array([0x89, 0x50, 0x4e, 0x47]));
      // the readout always describes the frame on screen
      expect(h.metas.at(-1)!.frame_id).toBe(Number(h.seq.shownId));
      expect(h.metas[0]!.width).toBe(64);

      // a drag produces an updated frame quickly enough to feel live
      const before = h.frames.length;
      const t0 = Date.now();
      h.client.control(setOrbit(40, 10));
      await waitUntil(() => h.frames.length > before, 5_000, "orbit frame");
      expect(Date.now() - t0).toBeLessThan(500);
      expect(h.frames.at(-1)!.png).not.toEqual(h.frames[before - 1]!.png);

      // operator switch is confirmed by the very next metadata
      h.client.control(setOperator("zucker-hummel"));
      await waitUntil(
        () => h.metas.at(-1)?.operator === "zucker-hummel",
        5_000,
        "operator echo",
      );
      expect(h.errors).toEqual([]);
    } finally {
      h.client.close();
    }
  }, 30_000);

  it("keeps fps readout and shown frame paired under a burst of controls", async () => {
    const h = openViewer();
    try {
      await waitUntil(() => h.metas.length >= 1, 15_000, "first frame");
      for (let i = 0; i < 20; i++) h.client.control(setOrbit(i * 3, 5));
      await sleep(1500);
      await waitUntil(
        () => h.seq.readout !== null && BigInt(h.seq.readout.frame_id) === h.seq.shownId,
        5_000,
        "readout catching up",
      );
      for (const m of h.metas) {
        expect(m.fps).toBeCloseTo(1000 / m.render_ms, 3);
      }
    } finally {
      h.client.close();
    }
  }, 30_000);

  it("survives a service restart by reconnecting and resuming frames", async () => {
    const h = openViewer();
    try {
      await waitUntil(() => h.frames.length >= 1, 15_000, "first frame");
      service.kill();
      await waitUntil(() => h.statuses.includes("disconnected"), 10_000, "disconnect notice");

      service = startService();
      await waitHealthy();
      const seen = h.frames.length;
      await waitUntil(() => h.frames.length > seen, 30_000, "frames after restart");
      expect(h.statuses.at(-1)).toBe("connected");
    } finally {
      h.client.close();
    }
  }, 120_000);
});

describe("viewer against a dead endpoint", () => {
  it("reports disconnected within five seconds and keeps retrying", async () => {
    const seen: Status[] = [];
    const client = new ViewerClient(
      "ws://127.0.0.1:9/ws", // discard port: nothing listens there
      { status: (s) => seen.push(s) },
      wsFactory,
    );
    const t0 = Date.now();
    client.connect();
    try {
      await waitUntil(() => seen.includes("disconnected"), 5_000, "disconnected status");
      expect(Date.now() - t0).toBeLessThan(5_000);
    } finally {
      client.close();
    }
  }, 10_000);
});
