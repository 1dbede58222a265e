/**
 * Browser entry point.  Wires the editor to a real websocket, a 2D
 * canvas for the schematic pane and a WebGL canvas for the 3D pane.
 *
 * Gestures: click selects in either pane, drag on a pin marker moves
 * that part along the surface, shift-drag rotates it in place, wheel
 * dollies, drag on empty surface orbits.  Rotation picks one message
 * per gesture (sent on release); translation streams through the
 * drag controller's rate cap.
 */

import * as THREE from "three";
import { Editor } from "./editor.js";
import { SessionClient } from "./protocol.js";
import { fromBrowserWebSocket } from "./sockets.js";
import { drawSchematic, schematicTransform } from "./schematicPane.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  style: Partial<CSSStyleDeclaration> = {},
  parent?: HTMLElement,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  Object.assign(node.style, style);
  (parent ?? document.body).appendChild(node);
  return node;
}

async function boot(): Promise<void> {
  const url = new URLSearchParams(location.search).get("ws") ?? "ws://127.0.0.1:8765";
  const ws = new WebSocket(url);
  await new Promise<void>((res, rej) => {
    ws.addEventListener("open", () => res());
    ws.addEventListener("error", () => rej(new Error(`cannot reach ${url}`)));
  });

  const client = new SessionClient(fromBrowserWebSocket(ws));
  document.body.style.margin = "0";
  const banner = el("div", {
    display: "none",
    padding: "6px 12px",
    background: "#ffd54d",
    font: "14px sans-serif",
  });
  const bar = el("div", { padding: "4px", background: "#222", color: "#eee" });
  const row = el("div", { display: "flex", height: "calc(100vh - 70px)" });
  const schemCanvas = el("canvas", { flex: "1", background: "#fafafa" }, row);
  const glCanvas = el("canvas", { flex: "2" }, row);

  const showBanner = (text: string | null) => {
    banner.style.display = text ? "block" : "none";
    banner.textContent = text ?? "";
  };

  const printBtn = el("button", { marginRight: "8px" }, bar);
  printBtn.textContent = "print";
  const forceBtn = el("button", {}, bar);
  forceBtn.textContent = "print anyway";

  const editor = new Editor(client, glCanvas.clientWidth / Math.max(glCanvas.clientHeight, 1));
  await editor.open();

  const renderer = new THREE.WebGLRenderer({ canvas: glCanvas, antialias: true });
  const ctx = schemCanvas.getContext("2d")!;

  const resize = () => {
    schemCanvas.width = schemCanvas.clientWidth;
    schemCanvas.height = schemCanvas.clientHeight;
    renderer.setSize(glCanvas.clientWidth, glCanvas.clientHeight, false);
    editor.viewport.setAspect(glCanvas.clientWidth / Math.max(glCanvas.clientHeight, 1));
  };
  window.addEventListener("resize", resize);
  resize();

  const frame = () => {
    drawSchematic(ctx, editor.schematicScene(), schemCanvas.width, schemCanvas.height);
    renderer.render(editor.viewport.scene, editor.viewport.camera);
    requestAnimationFrame(frame);
  };
  requestAnimationFrame(frame);

  schemCanvas.addEventListener("click", (ev) => {
    const scene = editor.schematicScene();
    const { toScene } = schematicTransform(scene, schemCanvas.width, schemCanvas.height);
    const [x, y] = toScene(ev.offsetX, ev.offsetY);
    editor.clickSchematic(x, y);
  });

  const ndc = (ev: PointerEvent | WheelEvent): [number, number] => [
    (ev.offsetX / glCanvas.clientWidth) * 2 - 1,
    -((ev.offsetY / glCanvas.clientHeight) * 2 - 1),
  ];

  let drag: ReturnType<Editor["beginDrag"]> | null = null;
  let rotating: { part: string; base: number; startX: number } | null = null;
  let orbiting = false;
  let moved = false;

  glCanvas.addEventListener("pointerdown", (ev) => {
    moved = false;
    const [nx, ny] = ndc(ev);
    const part = editor.viewport.pickPart(nx, ny);
    if (part && ev.shiftKey) {
      const base = editor.store.part(part)?.placement?.rotation ?? 0;
      rotating = { part, base, startX: ev.offsetX };
    } else if (part) {
      drag = editor.beginDrag(part);
      showBanner(null);
    } else {
      orbiting = true;
    }
    glCanvas.setPointerCapture(ev.pointerId);
  });

  glCanvas.addEventListener("pointermove", (ev) => {
    if (ev.buttons === 0) return;
    moved = true;
    const [nx, ny] = ndc(ev);
    if (drag) {
      drag.moveTo(editor.viewport.pickSurface(nx, ny)?.anchor ?? null);
    } else if (rotating) {
      // live preview would need local re-walk of the pins; just show the angle
      showBanner(`rotation ${(rotating.base + (ev.offsetX - rotating.startX) / 60).toFixed(2)} rad`);
    } else if (orbiting) {
      editor.viewport.orbit(-ev.movementX * 0.008, ev.movementY * 0.008);
    }
  });

  glCanvas.addEventListener("pointerup", async (ev) => {
    const [nx, ny] = ndc(ev);
    if (drag) {
      const d = drag;
      drag = null;
      await d.end();
      const failed = d.failures();
      showBanner(
        failed.length
          ? `${failed.length} trace(s) failed: ${failed
              .map((t) => `${t.net}#${t.edge} (${t.failure_reason})`)
              .join(", ")}`
          : null,
      );
      if (!moved) editor.clickViewport(d.sentAnchors.length ? null : pickTarget(nx, ny));
    } else if (rotating) {
      const r = rotating;
      rotating = null;
      showBanner(null);
      await editor.rotatePart(r.part, r.base + (ev.offsetX - r.startX) / 60);
      await editor.refresh();
    } else {
      orbiting = false;
      if (!moved) editor.clickViewport(pickTarget(nx, ny));
    }
  });

  const pickTarget = (nx: number, ny: number) => {
    const part = editor.viewport.pickPart(nx, ny);
    if (part) return { kind: "part", part } as const;
    const trace = editor.viewport.pickTrace(nx, ny);
    return trace ? ({ kind: "trace", ...trace } as const) : null;
  };

  glCanvas.addEventListener("wheel", (ev) => {
    ev.preventDefault();
    editor.viewport.dolly(ev.deltaY > 0 ? 1.1 : 0.9);
  });

  const runPrint = async (force: boolean) => {
    const outcome = await editor.print({ force });
    if (outcome.kind === "refused") {
      showBanner(`cannot print: ${outcome.message}`);
      return;
    }
    showBanner(outcome.warning);
    const blob = new Blob([outcome.stl.slice().buffer], { type: "model/stl" });
    const a = document.createElement("a");
    a.href = URL.createObjectURL(blob);
    a.download = "board.stl";
    a.click();
    URL.revokeObjectURL(a.href);
  };
  printBtn.addEventListener("click", () => void runPrint(false));
  forceBtn.addEventListener("click", () => void runPrint(true));

  document.body.prepend(bar);
  document.body.prepend(banner);
}

void boot().catch((err) => {
  document.body.textContent = String(err);
});
