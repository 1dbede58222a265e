/**
 * Part dragging: pointer moves in, at most `rateHz` drag_part messages
 * out, latest position wins.
 *
 * Every message is one complete drag_part edit, so the host reroutes
 * the part's incident edges at each step and the traces push tells us
 * exactly what to repaint.  Pointer samples between send windows
 * coalesce; a pointer that leaves the mesh sends nothing at all, which
 * parks the part at the last anchor the host accepted.
 */

import type { Anchor } from "./protocol.js";
import { SessionClient } from "./protocol.js";
import type { DesignStore } from "./store.js";
import type { TraceRecord } from "./protocol.js";

export interface DragClock {
  now(): number;
  setTimeout(fn: () => void, ms: number): unknown;
  clearTimeout(handle: unknown): void;
}

const realClock: DragClock = {
  now: () => Date.now(),
  setTimeout: (fn, ms) => setTimeout(fn, ms),
  clearTimeout: (h) => clearTimeout(h as Parameters<typeof clearTimeout>[0]),
};

export interface DragOptions {
  rateHz?: number;
  clock?: DragClock;
  /** called once after end(), when design truth should be re-fetched */
  onEnd?: (partId: string) => Promise<void> | void;
}

export class DragController {
  readonly rateHz: number;
  /** anchors actually sent, oldest first (tests count these) */
  readonly sentAnchors: Anchor[] = [];
  lastError: Error | null = null;

  private clock: DragClock;
  private onEnd?: DragOptions["onEnd"];
  private partId: string | null = null;
  private lastPart: string | null = null;
  private pending: Anchor | null = null;
  private lastSend = -Infinity;
  private timer: unknown = null;
  private inFlight: Promise<unknown>[] = [];

  constructor(
    private client: SessionClient,
    private store: DesignStore,
    opts: DragOptions = {},
  ) {
    this.rateHz = opts.rateHz ?? 30;
    this.clock = opts.clock ?? realClock;
    this.onEnd = opts.onEnd;
  }

  private get interval(): number {
    return 1000 / this.rateHz;
  }

  get active(): boolean {
    return this.partId !== null;
  }

  begin(partId: string): void {
    if (this.partId) throw new Error(`drag of ${this.partId} still active`);
    const part = this.store.part(partId);
    if (!part) throw new Error(`no part ${partId}`);
    if (!part.placement) throw new Error(`part ${partId} is not placed`);
    this.partId = partId;
    this.lastPart = partId;
    this.lastError = null;
  }

  /**
   * Feed one pointer sample.  null means the pointer ray missed the
   * mesh; the drag pauses and the part holds its last valid anchor.
   */
  moveTo(anchor: Anchor | null): void {
    if (!this.partId) throw new Error("no active drag");
    if (anchor === null) return;
    this.pending = anchor;
    this.pump();
  }

  private pump(): void {
    if (this.timer !== null || this.pending === null) return;
    const wait = this.lastSend + this.interval - this.clock.now();
    if (wait <= 0) {
      this.sendNow();
    } else {
      this.timer = this.clock.setTimeout(() => {
        this.timer = null;
        if (this.pending !== null && this.partId !== null) this.sendNow();
      }, wait);
    }
  }

  private sendNow(): void {
    const partId = this.partId!;
    const anchor = this.pending!;
    this.pending = null;
    this.lastSend = this.clock.now();
    this.sentAnchors.push(anchor);
    this.store.applyLocalAnchor(partId, anchor);
    const p = this.client
      .edit("drag_part", { part_id: partId, anchor })
      .catch((err: Error) => {
        this.lastError = err;
      });
    this.inFlight.push(p);
  }

  /**
   * Finish the gesture: flush the trailing sample (still inside the
   * rate cap), wait for every reply, then hand off to onEnd so the
   * caller can re-sync design truth from the host.
   */
  async end(): Promise<void> {
    if (!this.partId) return;
    if (this.timer !== null) {
      this.clock.clearTimeout(this.timer);
      this.timer = null;
    }
    while (this.pending !== null) {
      const wait = this.lastSend + this.interval - this.clock.now();
      if (wait <= 0) {
        this.sendNow();
      } else {
        await new Promise<void>((res) => this.clock.setTimeout(res, wait));
      }
    }
    const partId = this.partId;
    this.partId = null;
    const flights = this.inFlight;
    this.inFlight = [];
    await Promise.all(flights);
    await this.onEnd?.(partId);
  }

  /** Failed traces on the dragged part, the pane's failure annotation. */
  failures(): TraceRecord[] {
    const pid = this.partId ?? this.lastPart;
    return pid ? this.store.failedTraces(pid) : [];
  }
}
