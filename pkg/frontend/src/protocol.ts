/**
 * Wire types and the request/reply client for the editing session.
 *
 * Every frame on the wire is one JSON object.  Requests carry a
 * client-chosen id; the matching reply echoes it.  Pushes have no id,
 * only a "type" ("traces" or "highlight").  The host broadcasts pushes
 * to every connected client, including the one whose request caused
 * them, so all state updates flow through the push handlers and a
 * second client window stays consistent for free.
 */

import { z } from "zod";

export type Vec3 = [number, number, number];
export type Vec2 = [number, number];

/** Barycentric surface position: face index plus three weights. */
export interface Anchor {
  face: number;
  bary: [number, number, number];
}

/** (net name, edge id) names one routed connection. */
export type EdgeKey = [string, number];

export function edgeKeyOf(net: string, edge: number): string {
  return `${net}#${edge}`;
}

/** ["pin", partId, pinIndex] or ["junction", junctionId]. */
export type Terminal = ["pin", string, number] | ["junction", string];

export interface TraceRecord {
  net: string;
  edge: number;
  /** null means the edge exists but has never been routed. */
  status: "routed" | "failed" | null;
  failure_reason?: string | null;
  length_mm?: number | null;
  points?: Vec3[];
}

export interface Placement {
  anchor: Anchor;
  anchor_xyz: Vec3;
  rotation: number;
  pin_xyz: Vec3[];
}

export interface PartRow {
  id: string;
  name: string;
  pins: { name: string; role: string }[];
  offsets: Vec2[];
  drill_diameter: number;
  /** schematic position, abstract 2D units */
  pos: Vec2;
  placement: Placement | null;
}

export interface NetRow {
  name: string;
  terminals: Terminal[];
  /** [edge id, terminal a, terminal b] */
  edges: [number, Terminal, Terminal][];
  junction_pos: Record<string, Vec2>;
  junction_anchors: Record<string, Anchor & { xyz: Vec3 }>;
}

export interface Snapshot {
  mesh_ref: string;
  clearance: number;
  parts: PartRow[];
  nets: NetRow[];
  waypoints: Record<string, Record<string, Anchor[]>>;
  traces: TraceRecord[];
}

export interface MeshData {
  vertices: Vec3[];
  faces: [number, number, number][];
}

export interface ClearanceRow {
  a: string[];
  b: string[];
  distance: number;
  point_a: Vec3;
  point_b: Vec3;
}

export interface ReportRow {
  net: string;
  edge: number;
  length_mm: number | null;
  resistance_ohm: number | null;
  drop_v: number | null;
  routed: boolean;
}

export interface DesignReport {
  rows: ReportRow[];
  total_length_mm: number;
  worst_drop_v: number;
  text: string;
}

export interface PrintableReport {
  ok: boolean;
  watertight: boolean;
  boundary_edge_count: number;
  nonmanifold_edge_count: number;
  mixed_winding_count: number;
  signed_volume: number;
  self_intersection_count: number;
  text: string;
}

export interface ExportResult {
  stl_base64: string;
  holes: unknown[];
  report: PrintableReport;
}

export type SelectTarget =
  | { kind: "part"; part: string }
  | { kind: "net"; net: string }
  | { kind: "trace"; net: string; edge: number };

export interface TracesPush {
  type: "traces";
  changed: TraceRecord[];
  removed: EdgeKey[];
}

export interface HighlightPush {
  type: "highlight";
  target: SelectTarget | null;
}

/** Result of an edit request: op return value plus the re-routed keys. */
export interface EditResult<T = unknown> {
  result: T;
  changed: EdgeKey[];
  removed: EdgeKey[];
}

// Only the envelope is schema-checked; payloads are typed by the
// request that asked for them.
const replyFrame = z.looseObject({
  id: z.union([z.number(), z.string(), z.null()]),
  ok: z.boolean(),
});
const pushFrame = z.looseObject({ type: z.string() });

export class SessionError extends Error {
  readonly kind: string;
  readonly extra: Record<string, unknown>;

  constructor(kind: string, message: string, extra: Record<string, unknown> = {}) {
    super(message);
    this.name = "SessionError";
    this.kind = kind;
    this.extra = extra;
  }
}

/**
 * Transport the client drives.  Browser WebSocket and the node "ws"
 * package both adapt to this in a few lines (see sockets.ts); tests
 * plug in a loopback fake.
 */
export interface SessionSocket {
  send(text: string): void;
  close(): void;
  onMessage(handler: (text: string) => void): void;
  onClose(handler: () => void): void;
}

interface PendingEntry {
  resolve: (frame: Record<string, unknown>) => void;
  reject: (err: Error) => void;
}

export class SessionClient {
  private nextId = 1;
  private pending = new Map<number, PendingEntry>();
  private tracesHandlers: ((push: TracesPush) => void)[] = [];
  private highlightHandlers: ((push: HighlightPush) => void)[] = [];
  private protocolErrors: string[] = [];
  private closed = false;

  constructor(private socket: SessionSocket) {
    socket.onMessage((text) => this.dispatch(text));
    socket.onClose(() => this.fail(new SessionError("closed", "session socket closed")));
  }

  /** Frames that did not parse as a reply or a known push. */
  get badFrames(): readonly string[] {
    return this.protocolErrors;
  }

  close(): void {
    this.socket.close();
    this.fail(new SessionError("closed", "client closed"));
  }

  onTraces(handler: (push: TracesPush) => void): () => void {
    this.tracesHandlers.push(handler);
    return () => {
      this.tracesHandlers = this.tracesHandlers.filter((h) => h !== handler);
    };
  }

  onHighlight(handler: (push: HighlightPush) => void): () => void {
    this.highlightHandlers.push(handler);
    return () => {
      this.highlightHandlers = this.highlightHandlers.filter((h) => h !== handler);
    };
  }

  /** Send one raw request frame; resolves with the whole reply frame. */
  request(type: string, fields: Record<string, unknown> = {}): Promise<Record<string, unknown>> {
    if (this.closed) {
      return Promise.reject(new SessionError("closed", "session socket closed"));
    }
    const id = this.nextId++;
    const frame = JSON.stringify({ id, type, ...fields });
    return new Promise((resolve, reject) => {
      this.pending.set(id, { resolve, reject });
      try {
        this.socket.send(frame);
      } catch (err) {
        this.pending.delete(id);
        reject(err instanceof Error ? err : new Error(String(err)));
      }
    });
  }

  private async result<T>(type: string, fields: Record<string, unknown> = {}): Promise<T> {
    const frame = await this.request(type, fields);
    return frame.result as T;
  }

  ping(): Promise<string> {
    return this.result("ping");
  }

  snapshot(): Promise<Snapshot> {
    return this.result("snapshot");
  }

  mesh(): Promise<MeshData> {
    return this.result("mesh");
  }

  /** Ask the host to highlight a target everywhere; null clears. */
  select(target: SelectTarget | null): Promise<null> {
    return this.result("select", { target });
  }

  async routeAll(): Promise<EdgeKey[]> {
    const r = await this.result<{ changed: EdgeKey[] }>("route_all");
    return r.changed;
  }

  clearance(): Promise<ClearanceRow[]> {
    return this.result("clearance");
  }

  report(opts: { conductor?: string; current_ma?: number } = {}): Promise<DesignReport> {
    return this.result("report", opts);
  }

  exportStl(opts: { force?: boolean } = {}): Promise<ExportResult> {
    return this.result("export", opts.force ? { force: true } : {});
  }

  /**
   * One document operation, one message.  The reply's changed/removed
   * keys mirror the "traces" push the host broadcasts right after.
   */
  async edit<T = unknown>(op: string, args: Record<string, unknown>): Promise<EditResult<T>> {
    const frame = await this.request(op, { args });
    return {
      result: frame.result as T,
      changed: (frame.changed ?? []) as EdgeKey[],
      removed: (frame.removed ?? []) as EdgeKey[],
    };
  }

  private dispatch(text: string): void {
    let data: unknown;
    try {
      data = JSON.parse(text);
    } catch {
      this.protocolErrors.push(text);
      return;
    }
    const reply = replyFrame.safeParse(data);
    if (reply.success && "id" in (data as object)) {
      this.settle(reply.data as Record<string, unknown>);
      return;
    }
    const push = pushFrame.safeParse(data);
    if (push.success) {
      const frame = push.data as Record<string, unknown>;
      if (frame.type === "traces") {
        const p = frame as unknown as TracesPush;
        for (const h of this.tracesHandlers) h(p);
        return;
      }
      if (frame.type === "highlight") {
        const p = frame as unknown as HighlightPush;
        for (const h of this.highlightHandlers) h(p);
        return;
      }
    }
    this.protocolErrors.push(text);
  }

  private settle(frame: Record<string, unknown>): void {
    const id = frame.id;
    if (typeof id !== "number") {
      // id null: host could not even read our id, nothing to correlate
      this.protocolErrors.push(JSON.stringify(frame));
      return;
    }
    const entry = this.pending.get(id);
    if (!entry) {
      this.protocolErrors.push(JSON.stringify(frame));
      return;
    }
    this.pending.delete(id);
    if (frame.ok) {
      entry.resolve(frame);
    } else {
      const err = (frame.error ?? {}) as Record<string, unknown>;
      const { kind, message, ...extra } = err;
      entry.reject(
        new SessionError(
          typeof kind === "string" ? kind : "unknown",
          typeof message === "string" ? message : "unspecified session error",
          extra,
        ),
      );
    }
  }

  private fail(err: SessionError): void {
    if (this.closed) return;
    this.closed = true;
    for (const entry of this.pending.values()) entry.reject(err);
    this.pending.clear();
  }
}
