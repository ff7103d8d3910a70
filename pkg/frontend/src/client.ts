import { Coalescer } from "./coalesce.js";
import {
  decodeFramePacket,
  parseServerText,
  requestFrame,
  type Control,
  type FrameMetadata,
  type FramePacket,
} from "./protocol.js";

export type Status = "connecting" | "connected" | "disconnected";

// Structural subset of both the browser WebSocket and the ws package's
// client, so the node test suite can drive the client with real sockets.
export interface SocketLike {
  binaryType: string;
  readyState: number;
  onopen: ((ev?: unknown) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  send(data: string): void;
  close(): void;
}

export type SocketFactory = (url: string) => SocketLike;

export interface ClientEvents {
  frame(p: FramePacket): void;
  metadata(m: FrameMetadata): void;
  error(message: string): void;
  status(s: Status, detail?: string): void;
}

const OPEN = 1;
const RETRY_START_MS = 500;
const RETRY_CAP_MS = 5000;

export class ViewerClient {
  private sock: SocketLike | null = null;
  private retryMs = RETRY_START_MS;
  private retryTimer: ReturnType<typeof setTimeout> | null = null;
  private stopped = false;
  private readonly queue: Coalescer;

  constructor(
    readonly url: string,
    private readonly events: Partial<ClientEvents>,
    private readonly factory: SocketFactory = (u) =>
      new WebSocket(u) as unknown as SocketLike,
  ) {
    this.queue = new Coalescer((c) => this.sock?.send(JSON.stringify(c)), {
      ready: () => this.sock?.readyState === OPEN,
    });
  }

  connect(): void {
    this.stopped = false;
    this.events.status?.("connecting");
    const sock = this.factory(this.url);
    this.sock = sock;
    sock.binaryType = "arraybuffer";
    sock.onopen = () => {
      this.retryMs = RETRY_START_MS;
      this.events.status?.("connected");
      this.queue.flush(); // anything the user did while offline, newest values only
    };
    sock.onmessage = (ev) => this.dispatch(ev.data);
    sock.onerror = () => {
      // close always follows; reconnect is scheduled there
    };
    sock.onclose = () => {
      if (this.sock !== sock) return; // superseded by a newer connect
      this.sock = null;
      if (this.stopped) return;
      this.events.status?.("disconnected", `retrying in ${this.retryMs} ms`);
      this.scheduleReconnect();
    };
  }

  close(): void {
    this.stopped = true;
    if (this.retryTimer !== null) {
      clearTimeout(this.retryTimer);
      this.retryTimer = null;
    }
    this.sock?.close();
    this.sock = null;
  }

  /** Coalesced control path for anything driven by pointer or slider. */
  control(c: Control): void {
    this.queue.push(c);
  }

  /** Immediate re-render request; no state change, so never coalesced. */
  requestFrame(): void {
    if (this.sock?.readyState === OPEN) {
      this.sock.send(JSON.stringify(requestFrame()));
    }
  }

  get queuedControls(): number {
    return this.queue.pendingCount;
  }

  private scheduleReconnect(): void {
    if (this.retryTimer !== null) return;
    this.retryTimer = setTimeout(() => {
      this.retryTimer = null;
      if (!this.stopped) this.connect();
    }, this.retryMs);
    this.retryMs = Math.min(this.retryMs * 2, RETRY_CAP_MS);
  }

  private dispatch(data: unknown): void {
    if (typeof data === "string") {
      let msg;
      try {
        msg = parseServerText(data);
      } catch (exc) {
        this.events.error?.(`unparseable server message: ${exc}`);
        return;
      }
      if (msg.type === "metadata") this.events.metadata?.(msg);
      else this.events.error?.(msg.message);
      return;
    }
    const buf = toArrayBuffer(data);
    if (buf === null) {
      this.events.error?.("unexpected binary payload type");
      return;
    }
    try {
      this.events.frame?.(decodeFramePacket(buf));
    } catch (exc) {
      this.events.error?.(String(exc));
    }
  }
}

function toArrayBuffer(data: unknown): ArrayBuffer | null {
  if (data instanceof ArrayBuffer) return data;
  if (ArrayBuffer.isView(data)) {
    return data.buffer.slice(data.byteOffset, data.byteOffset + data.byteLength) as ArrayBuffer;
  }
  return null;
}
