/**
 * Schematic pane: parts as boxes, nets as wires between terminals.
 *
 * layoutSchematic is a pure function of the store, returning a display
 * list in schematic coordinates; drawSchematic paints one onto a 2D
 * canvas and hitTestSchematic maps a point back to a selection target.
 * Keeping the scene plain data is what lets the tests assert highlight
 * state without a DOM.
 */

import type { DesignStore } from "./store.js";
import type { SelectTarget, Terminal, Vec2 } from "./protocol.js";
import { edgeKeyOf } from "./protocol.js";

export const PART_W = 16;
export const PART_H = 8;
const WIRE_PICK_TOL = 2.0;

export interface SchematicPart {
  id: string;
  name: string;
  x: number;
  y: number;
  w: number;
  h: number;
  placed: boolean;
  highlighted: boolean;
  pinDots: { index: number; x: number; y: number }[];
}

export interface SchematicWire {
  net: string;
  edge: number;
  from: Vec2;
  to: Vec2;
  status: "routed" | "failed" | null;
  highlighted: boolean;
}

export interface SchematicScene {
  parts: SchematicPart[];
  wires: SchematicWire[];
  junctions: { net: string; id: string; x: number; y: number }[];
  bounds: { minX: number; minY: number; maxX: number; maxY: number };
}

function pinDot(part: { pos: Vec2; offsets: Vec2[] }, index: number): Vec2 {
  // pins spread evenly along the bottom edge, in footprint order
  const n = part.offsets.length;
  const x = part.pos[0] - PART_W / 2 + ((index + 1) * PART_W) / (n + 1);
  return [x, part.pos[1] + PART_H / 2];
}

export function layoutSchematic(store: DesignStore): SchematicScene {
  const snap = store.snapshot;
  const scene: SchematicScene = {
    parts: [],
    wires: [],
    junctions: [],
    bounds: { minX: 0, minY: 0, maxX: 0, maxY: 0 },
  };
  if (!snap) return scene;

  const sel = store.view.selection;
  const selectedKeys = store.selectedTraceKeys();
  const byId = new Map(snap.parts.map((p) => [p.id, p]));

  for (const p of snap.parts) {
    scene.parts.push({
      id: p.id,
      name: p.name,
      x: p.pos[0],
      y: p.pos[1],
      w: PART_W,
      h: PART_H,
      placed: p.placement !== null,
      highlighted: sel?.kind === "part" && sel.part === p.id,
      pinDots: p.offsets.map((_, i) => {
        const [x, y] = pinDot(p, i);
        return { index: i, x, y };
      }),
    });
  }

  const terminalPos = (net: string, t: Terminal): Vec2 | null => {
    if (t[0] === "pin") {
      const part = byId.get(t[1]);
      return part ? pinDot(part, t[2]) : null;
    }
    const jp = snap.nets.find((n) => n.name === net)?.junction_pos[t[1]];
    return jp ? [jp[0], jp[1]] : null;
  };

  for (const net of snap.nets) {
    for (const [eid, a, b] of net.edges) {
      const from = terminalPos(net.name, a);
      const to = terminalPos(net.name, b);
      if (!from || !to) continue;
      const trace = store.trace(net.name, eid);
      scene.wires.push({
        net: net.name,
        edge: eid,
        from,
        to,
        status: trace?.status ?? null,
        highlighted: selectedKeys.has(edgeKeyOf(net.name, eid)),
      });
    }
    for (const [jid, pos] of Object.entries(net.junction_pos)) {
      scene.junctions.push({ net: net.name, id: jid, x: pos[0], y: pos[1] });
    }
  }

  const xs = scene.parts.map((p) => p.x).concat(scene.wires.flatMap((w) => [w.from[0], w.to[0]]));
  const ys = scene.parts.map((p) => p.y).concat(scene.wires.flatMap((w) => [w.from[1], w.to[1]]));
  if (xs.length) {
    scene.bounds = {
      minX: Math.min(...xs) - PART_W,
      minY: Math.min(...ys) - PART_H,
      maxX: Math.max(...xs) + PART_W,
      maxY: Math.max(...ys) + PART_H,
    };
  }
  return scene;
}

function segDist(p: Vec2, a: Vec2, b: Vec2): number {
  const dx = b[0] - a[0];
  const dy = b[1] - a[1];
  const len2 = dx * dx + dy * dy;
  const t = len2 === 0 ? 0 : Math.max(0, Math.min(1, ((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2));
  return Math.hypot(p[0] - (a[0] + t * dx), p[1] - (a[1] + t * dy));
}

/** Parts win over wires; wires pick as traces so one edge of a multi-edge
 * net can be inspected on its own.  Returns null on empty space. */
export function hitTestSchematic(scene: SchematicScene, x: number, y: number): SelectTarget | null {
  for (const p of scene.parts) {
    if (Math.abs(x - p.x) <= p.w / 2 && Math.abs(y - p.y) <= p.h / 2) {
      return { kind: "part", part: p.id };
    }
  }
  let best: SchematicWire | null = null;
  let bestD = WIRE_PICK_TOL;
  for (const w of scene.wires) {
    const d = segDist([x, y], w.from, w.to);
    if (d <= bestD) {
      best = w;
      bestD = d;
    }
  }
  return best ? { kind: "trace", net: best.net, edge: best.edge } : null;
}

/** Mapping between scene coordinates and pane pixels, shared by the
 * painter and the pointer handlers so clicks land where pixels do. */
export function schematicTransform(scene: SchematicScene, width: number, height: number) {
  const b = scene.bounds;
  const spanX = Math.max(b.maxX - b.minX, 1);
  const spanY = Math.max(b.maxY - b.minY, 1);
  const scale = Math.min(width / spanX, height / spanY);
  return {
    scale,
    toPx: (x: number, y: number): Vec2 => [(x - b.minX) * scale, (y - b.minY) * scale],
    toScene: (px: number, py: number): Vec2 => [px / scale + b.minX, py / scale + b.minY],
  };
}

/** Paint onto a canvas 2D context.  Pure function of the scene. */
export function drawSchematic(
  ctx: CanvasRenderingContext2D,
  scene: SchematicScene,
  width: number,
  height: number,
): void {
  ctx.clearRect(0, 0, width, height);
  const { scale, toPx } = schematicTransform(scene, width, height);

  for (const w of scene.wires) {
    ctx.beginPath();
    ctx.strokeStyle = w.status === "failed" ? "#d33" : w.highlighted ? "#06c" : "#444";
    ctx.lineWidth = w.highlighted ? 3 : 1.5;
    ctx.setLineDash(w.status === "failed" ? [4, 3] : []);
    ctx.moveTo(...toPx(w.from[0], w.from[1]));
    ctx.lineTo(...toPx(w.to[0], w.to[1]));
    ctx.stroke();
  }
  ctx.setLineDash([]);

  for (const p of scene.parts) {
    const [px, py] = toPx(p.x, p.y);
    const w = p.w * scale;
    const h = p.h * scale;
    ctx.fillStyle = p.highlighted ? "#cde4ff" : p.placed ? "#eee" : "#fff4d6";
    ctx.strokeStyle = p.highlighted ? "#06c" : "#333";
    ctx.fillRect(px - w / 2, py - h / 2, w, h);
    ctx.strokeRect(px - w / 2, py - h / 2, w, h);
    ctx.fillStyle = "#222";
    ctx.font = `${Math.max(10, 4 * scale)}px sans-serif`;
    ctx.textAlign = "center";
    ctx.fillText(p.id, px, py);
    for (const dot of p.pinDots) {
      const [dx, dy] = toPx(dot.x, dot.y);
      ctx.beginPath();
      ctx.arc(dx, dy, 2.5, 0, Math.PI * 2);
      ctx.fill();
    }
  }

  for (const j of scene.junctions) {
    const [jx, jy] = toPx(j.x, j.y);
    ctx.beginPath();
    ctx.fillStyle = "#06c";
    ctx.arc(jx, jy, 3, 0, Math.PI * 2);
    ctx.fill();
  }
}
