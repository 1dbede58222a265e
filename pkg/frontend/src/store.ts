/**
 * Client-side state.  Design truth lives in the host; this store only
 * mirrors the last snapshot plus every traces push since, and holds the
 * ephemeral view state (selection, camera) that dies with the window.
 *
 * Selection is mirrored into view state synchronously, before the
 * protocol round trip, so both panes highlight the same object in the
 * frame the click happened in.  The host's highlight push lands later
 * and is recorded separately; the two only disagree for the moment a
 * stale frame is in flight, or when another client selects something.
 */

import type {
  Anchor,
  EdgeKey,
  MeshData,
  NetRow,
  PartRow,
  SelectTarget,
  Snapshot,
  TraceRecord,
  TracesPush,
  Vec3,
} from "./protocol.js";
import { edgeKeyOf } from "./protocol.js";

export interface CameraPose {
  target: Vec3;
  distance: number;
}

export interface ViewState {
  selection: SelectTarget | null;
  /** last highlight push from the host (other clients select too) */
  remoteHighlight: SelectTarget | null;
  camera: CameraPose;
}

export type StoreEvent =
  | { kind: "snapshot" }
  | { kind: "mesh" }
  | { kind: "traces"; keys: string[] }
  | { kind: "selection" }
  | { kind: "camera" };

type Listener = (ev: StoreEvent) => void;

export class DesignStore {
  snapshot: Snapshot | null = null;
  mesh: MeshData | null = null;
  /** live trace state keyed "net#edge", updated by every traces push */
  readonly traces = new Map<string, TraceRecord>();
  readonly view: ViewState = {
    selection: null,
    remoteHighlight: null,
    camera: { target: [0, 0, 0], distance: 250 },
  };

  private listeners: Listener[] = [];

  subscribe(fn: Listener): () => void {
    this.listeners.push(fn);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== fn);
    };
  }

  private emit(ev: StoreEvent): void {
    for (const fn of [...this.listeners]) fn(ev);
  }

  loadSnapshot(s: Snapshot): void {
    this.snapshot = s;
    this.traces.clear();
    for (const t of s.traces) this.traces.set(edgeKeyOf(t.net, t.edge), t);
    this.emit({ kind: "snapshot" });
  }

  loadMesh(m: MeshData): void {
    this.mesh = m;
    this.emit({ kind: "mesh" });
  }

  applyTraces(push: TracesPush): string[] {
    const keys: string[] = [];
    for (const t of push.changed) {
      const key = edgeKeyOf(t.net, t.edge);
      this.traces.set(key, t);
      keys.push(key);
    }
    for (const [net, edge] of push.removed) {
      const key = edgeKeyOf(net, edge);
      this.traces.delete(key);
      keys.push(key);
    }
    this.emit({ kind: "traces", keys });
    return keys;
  }

  setSelection(sel: SelectTarget | null): void {
    this.view.selection = sel;
    this.emit({ kind: "selection" });
  }

  setRemoteHighlight(sel: SelectTarget | null): void {
    this.view.remoteHighlight = sel;
    this.emit({ kind: "selection" });
  }

  setCamera(pose: CameraPose): void {
    this.view.camera = pose;
    this.emit({ kind: "camera" });
  }

  /**
   * Optimistic placement update while a drag is in flight.  The anchor
   * is what we just sent; pin positions and anchor_xyz stay stale until
   * the next snapshot refresh, which the drag controller requests when
   * the gesture ends.
   */
  applyLocalAnchor(partId: string, anchor: Anchor): void {
    const part = this.part(partId);
    if (part?.placement) part.placement.anchor = anchor;
  }

  part(id: string): PartRow | undefined {
    return this.snapshot?.parts.find((p) => p.id === id);
  }

  net(name: string): NetRow | undefined {
    return this.snapshot?.nets.find((n) => n.name === name);
  }

  trace(net: string, edge: number): TraceRecord | undefined {
    return this.traces.get(edgeKeyOf(net, edge));
  }

  /** Edges whose route depends on where this part sits. */
  incidentEdges(partId: string): EdgeKey[] {
    const out: EdgeKey[] = [];
    for (const net of this.snapshot?.nets ?? []) {
      for (const [eid, a, b] of net.edges) {
        const hit = [a, b].some((t) => t[0] === "pin" && t[1] === partId);
        if (hit) out.push([net.name, eid]);
      }
    }
    return out;
  }

  /** Trace keys the current selection covers, for pane highlighting. */
  selectedTraceKeys(): Set<string> {
    const sel = this.view.selection;
    const keys = new Set<string>();
    if (!sel) return keys;
    if (sel.kind === "trace") {
      keys.add(edgeKeyOf(sel.net, sel.edge));
    } else if (sel.kind === "net") {
      const net = this.net(sel.net);
      for (const [eid] of net?.edges ?? []) keys.add(edgeKeyOf(sel.net, eid));
    } else {
      for (const [net, eid] of this.incidentEdges(sel.part)) {
        keys.add(edgeKeyOf(net, eid));
      }
    }
    return keys;
  }

  /** Failed traces touching a part; the drag failure annotation. */
  failedTraces(partId: string): TraceRecord[] {
    const out: TraceRecord[] = [];
    for (const [net, eid] of this.incidentEdges(partId)) {
      const t = this.trace(net, eid);
      if (t && t.status === "failed") out.push(t);
    }
    return out;
  }
}
