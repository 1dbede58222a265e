import { describe, expect, test } from "vitest";

import { Editor } from "../src/editor.js";
import { SessionClient } from "../src/protocol.js";
import { FakeSocket, sampleMesh, sampleSnapshot } from "./support.js";

function setup(overrides: Partial<Record<string, (f: Record<string, unknown>) => unknown[]>> = {}) {
  const sock = new FakeSocket();
  sock.respond = (f) => {
    const custom = overrides[f.type as string];
    if (custom) return custom(f);
    if (f.type === "snapshot") return [{ id: f.id, ok: true, result: sampleSnapshot() }];
    if (f.type === "mesh") return [{ id: f.id, ok: true, result: sampleMesh() }];
    if (f.type === "select") {
      return [
        { id: f.id, ok: true, result: null },
        { type: "highlight", target: f.target },
      ];
    }
    return [{ id: f.id, ok: true, result: null }];
  };
  const client = new SessionClient(sock);
  const editor = new Editor(client);
  return { sock, client, editor };
}

describe("open", () => {
  test("builds both panes from design truth", async () => {
    const { editor } = setup();
    await editor.open();
    expect(editor.store.snapshot?.parts).toHaveLength(4);
    expect(editor.viewport.traceKeys()).toEqual(["a#0", "b#0"]);
    expect(editor.schematicScene().wires).toHaveLength(3);
  });
});

describe("cross-pane selection", () => {
  test("both panes show the selection in the same tick as the click", async () => {
    const { editor } = setup();
    await editor.open();

    // no await between the select call and the assertions: this is the
    // within-one-frame guarantee, not an eventual consistency check
    const pending = editor.select({ kind: "net", net: "a" });
    const schematic = editor.schematicScene();
    expect(schematic.wires.find((w) => w.net === "a")?.highlighted).toBe(true);
    expect(schematic.wires.find((w) => w.net === "b")?.highlighted).toBe(false);
    expect(editor.viewport.highlightedKeys()).toEqual(["a#0"]);

    await pending;
    expect(editor.store.view.remoteHighlight).toEqual({ kind: "net", net: "a" });
  });

  test("a part picked in the 3D pane highlights its schematic box", async () => {
    const { editor } = setup();
    await editor.open();
    editor.clickViewport({ kind: "part", part: "R2" });
    const scene = editor.schematicScene();
    expect(scene.parts.find((p) => p.id === "R2")?.highlighted).toBe(true);
    // and the part's traces light up in 3D
    expect(editor.viewport.highlightedKeys()).toEqual(["a#0"]);
  });

  test("host rejection rolls the local mirror back", async () => {
    const { editor } = setup({
      select: (f) => [
        { id: f.id, ok: false, error: { kind: "bad_target", message: "no part 'ghost'" } },
      ],
    });
    await editor.open();
    await expect(editor.select({ kind: "part", part: "ghost" })).rejects.toMatchObject({
      kind: "bad_target",
    });
    expect(editor.store.view.selection).toBeNull();
  });

  test("schematic clicks resolve through hit testing", async () => {
    const { sock, editor } = setup();
    await editor.open();
    const target = editor.clickSchematic(-20, 0);
    expect(target).toEqual({ kind: "part", part: "R1" });
    expect(sock.sent.at(-1)).toMatchObject({ type: "select", target });
  });
});

describe("push handling", () => {
  test("a traces push repaints only the keys it names", async () => {
    const { sock, editor } = setup();
    await editor.open();
    expect(editor.viewport.tracePointCount("a#0")).toBe(2);
    sock.pushFrame({
      type: "traces",
      changed: [
        {
          net: "a",
          edge: 0,
          status: "routed",
          length_mm: 2,
          points: [[0, 0, 0], [0.5, 0.1, 0], [1, 0, 0]],
        },
      ],
      removed: [],
    });
    expect(editor.viewport.tracePointCount("a#0")).toBe(3);
    expect(editor.viewport.tracePointCount("b#0")).toBe(2);
  });

  test("a highlight push from another client lands in view state", async () => {
    const { sock, editor } = setup();
    await editor.open();
    sock.pushFrame({ type: "highlight", target: { kind: "part", part: "R3" } });
    expect(editor.store.view.remoteHighlight).toEqual({ kind: "part", part: "R3" });
  });
});

describe("print", () => {
  test("a refusal zooms the 3D pane to the first problem", async () => {
    const { editor } = setup({
      export: (f) => [
        {
          id: f.id,
          ok: false,
          error: {
            kind: "export_invalid",
            message: "1 failed traces, 0 clearance violations",
            failed_edges: [["b", 0]],
          },
        },
      ],
      clearance: (f) => [{ id: f.id, ok: true, result: [] }],
    });
    await editor.open();
    const outcome = await editor.print();
    expect(outcome.kind).toBe("refused");
    // midpoint of b#0's annotation, straight from the store
    expect(editor.store.view.camera.target).toEqual([0.5, 0.5, 0]);
  });
});
