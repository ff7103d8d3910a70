import type { FrameMetadata } from "./protocol.js";

/**
 * Orders frame display by id and keeps the fps/render-time readout in
 * lockstep with the frame actually on screen. Binary packets and their
 * metadata arrive as separate messages, and frames can land out of order
 * around a reconnect; a packet older than the shown frame is dropped, and
 * metadata only updates the readout when it belongs to the shown frame.
 */
export class FrameSequencer {
  private shown = 0n;
  private meta: FrameMetadata | null = null;

  /** True when the packet is newer than the shown frame (then it becomes it). */
  accept(frameId: bigint): boolean {
    if (frameId <= this.shown) return false;
    this.shown = frameId;
    this.meta = null; // readout is stale until this frame's metadata lands
    return true;
  }

  /** True when the metadata matches the shown frame and the readout moved. */
  onMetadata(meta: FrameMetadata): boolean {
    if (BigInt(meta.frame_id) !== this.shown) return false;
    this.meta = meta;
    return true;
  }

  get shownId(): bigint {
    return this.shown;
  }

  get readout(): FrameMetadata | null {
    return this.meta;
  }

  /** A restarted server numbers frames from 1 again; call on reconnect. */
  reset(): void {
    this.shown = 0n;
    this.meta = null;
  }
}
