/** Shared test plumbing: a loopback socket and a small canned design. */

import type { MeshData, SessionSocket, Snapshot } from "../src/protocol.js";

type Frame = Record<string, unknown>;

/**
 * In-memory SessionSocket.  Tests script the host side by assigning
 * `respond`; whatever frames it returns are delivered back through the
 * message handlers in order, synchronously.
 */
export class FakeSocket implements SessionSocket {
  sent: Frame[] = [];
  closed = false;
  respond: ((frame: Frame) => unknown[]) | null = null;

  private messageHandlers: ((text: string) => void)[] = [];
  private closeHandlers: (() => void)[] = [];

  send(text: string): void {
    const frame = JSON.parse(text) as Frame;
    this.sent.push(frame);
    if (this.respond) {
      for (const out of this.respond(frame)) this.pushFrame(out);
    }
  }

  pushFrame(frame: unknown): void {
    this.pushText(JSON.stringify(frame));
  }

  pushText(text: string): void {
    for (const h of [...this.messageHandlers]) h(text);
  }

  close(): void {
    this.closed = true;
    for (const h of [...this.closeHandlers]) h();
  }

  onMessage(handler: (text: string) => void): void {
    this.messageHandlers.push(handler);
  }

  onClose(handler: () => void): void {
    this.closeHandlers.push(handler);
  }
}

/** Echo host: replies ok to everything, result null, no pushes. */
export function okResponder(frame: Frame): unknown[] {
  return [{ id: frame.id, ok: true, result: null }];
}

export function sampleMesh(): MeshData {
  return {
    vertices: [
      [0, 0, 0],
      [1, 0, 0],
      [1, 1, 0],
      [0, 1, 0],
    ],
    faces: [
      [0, 1, 2],
      [0, 2, 3],
    ],
  };
}

/** Chain R1-a-R2-b-R3-c-R4, R4 unplaced, b#0 failed, c#0 never routed. */
export function sampleSnapshot(): Snapshot {
  const resistor = (id: string, x: number, placed: boolean, pins: [number, number, number][]) => ({
    id,
    name: "resistor",
    pins: [
      { name: "1", role: "passive" },
      { name: "2", role: "passive" },
    ],
    offsets: [
      [-1.27, 0],
      [1.27, 0],
    ] as [number, number][],
    drill_diameter: 0.8,
    pos: [x, 0] as [number, number],
    placement: placed
      ? {
          anchor: { face: 0, bary: [1, 0, 0] as [number, number, number] },
          anchor_xyz: pins[0],
          rotation: 0,
          pin_xyz: pins,
        }
      : null,
  });
  return {
    mesh_ref: "sample.stl",
    clearance: 1.0,
    parts: [
      resistor("R1", -20, true, [[0.1, 0.1, 0], [0.4, 0.1, 0]]),
      resistor("R2", 0, true, [[0.6, 0.2, 0], [0.8, 0.2, 0]]),
      resistor("R3", 20, true, [[0.2, 0.8, 0], [0.5, 0.8, 0]]),
      resistor("R4", 40, false, [[0, 0, 0], [0, 0, 0]]),
    ],
    nets: [
      {
        name: "a",
        terminals: [["pin", "R1", 1], ["pin", "R2", 0]],
        edges: [[0, ["pin", "R1", 1], ["pin", "R2", 0]]],
        junction_pos: {},
        junction_anchors: {},
      },
      {
        name: "b",
        terminals: [["pin", "R2", 1], ["pin", "R3", 0]],
        edges: [[0, ["pin", "R2", 1], ["pin", "R3", 0]]],
        junction_pos: {},
        junction_anchors: {},
      },
      {
        name: "c",
        terminals: [["pin", "R3", 1], ["pin", "R4", 0]],
        edges: [[0, ["pin", "R3", 1], ["pin", "R4", 0]]],
        junction_pos: {},
        junction_anchors: {},
      },
    ],
    waypoints: {},
    traces: [
      {
        net: "a",
        edge: 0,
        status: "routed",
        failure_reason: null,
        length_mm: 0.224,
        points: [
          [0.4, 0.1, 0],
          [0.6, 0.2, 0],
        ],
      },
      {
        net: "b",
        edge: 0,
        status: "failed",
        failure_reason: "degenerate",
        length_mm: null,
        points: [
          [0.8, 0.2, 0],
          [0.2, 0.8, 0],
        ],
      },
      { net: "c", edge: 0, status: null },
    ],
  };
}
