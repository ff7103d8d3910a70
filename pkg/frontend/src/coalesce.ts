import type { Control } from "./protocol.js";

export interface CoalescerOptions {
  maxPerSecond?: number;
  /** Gate: deliveries are held (and kept pending) while this is false. */
  ready?: () => boolean;
}

/**
 * Latest-wins send queue. Scrubbing a slider emits hundreds of identical
 * control types per second; the renderer only ever needs the newest value,
 * at most maxPerSecond times a second. One slot per control type, so a drag
 * and a slider scrub in flight together both get through.
 */
export class Coalescer {
  private pending = new Map<string, Control>();
  private timer: ReturnType<typeof setTimeout> | null = null;
  private lastSend = -Infinity;
  private readonly intervalMs: number;
  private readonly ready: () => boolean;

  constructor(
    private readonly send: (c: Control) => void,
    opts: CoalescerOptions = {},
  ) {
    this.intervalMs = 1000 / (opts.maxPerSecond ?? 30);
    this.ready = opts.ready ?? (() => true);
  }

  push(c: Control): void {
    this.pending.set(c.type, c);
    this.schedule();
  }

  /** Number of messages waiting (queued during disconnects). */
  get pendingCount(): number {
    return this.pending.size;
  }

  /** Deliver everything pending now; used when a connection (re)opens. */
  flush(): void {
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
    this.deliver();
  }

  private schedule(): void {
    if (this.timer !== null) return;
    // timers have millisecond resolution; round up so the gap between
    // deliveries never undercuts the interval
    const wait = Math.max(0, Math.ceil(this.lastSend + this.intervalMs - Date.now()));
    this.timer = setTimeout(() => {
      this.timer = null;
      this.deliver();
    }, wait);
  }

  private deliver(): void {
    if (this.pending.size === 0) return;
    if (!this.ready()) return; // hold until flush() after reconnect
    this.lastSend = Date.now();
    const batch = [...this.pending.values()];
    this.pending.clear();
    for (const c of batch) this.send(c);
  }
}
