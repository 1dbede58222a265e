import { describe, expect, test } from "vitest";

import { DesignStore, type StoreEvent } from "../src/store.js";
import { sampleSnapshot } from "./support.js";

function loaded(): DesignStore {
  const store = new DesignStore();
  store.loadSnapshot(sampleSnapshot());
  return store;
}

describe("trace bookkeeping", () => {
  test("snapshot load fills the trace map", () => {
    const store = loaded();
    expect([...store.traces.keys()].sort()).toEqual(["a#0", "b#0", "c#0"]);
    expect(store.trace("b", 0)?.failure_reason).toBe("degenerate");
  });

  test("traces push upserts and removes", () => {
    const store = loaded();
    const keys = store.applyTraces({
      type: "traces",
      changed: [{ net: "b", edge: 0, status: "routed", length_mm: 2, points: [[0, 0, 0], [1, 0, 0]] }],
      removed: [["c", 0]],
    });
    expect(keys.sort()).toEqual(["b#0", "c#0"]);
    expect(store.trace("b", 0)?.status).toBe("routed");
    expect(store.trace("c", 0)).toBeUndefined();
  });

  test("events fire synchronously with the mutation", () => {
    const store = loaded();
    const seen: StoreEvent[] = [];
    store.subscribe((ev) => seen.push(ev));
    store.setSelection({ kind: "part", part: "R1" });
    expect(seen).toEqual([{ kind: "selection" }]);
  });
});

describe("design queries", () => {
  test("incident edges of a mid-chain part", () => {
    const store = loaded();
    expect(store.incidentEdges("R2")).toEqual([
      ["a", 0],
      ["b", 0],
    ]);
    expect(store.incidentEdges("R1")).toEqual([["a", 0]]);
    expect(store.incidentEdges("nope")).toEqual([]);
  });

  test("selection expands to trace keys per target kind", () => {
    const store = loaded();
    store.setSelection(null);
    expect(store.selectedTraceKeys().size).toBe(0);
    store.setSelection({ kind: "trace", net: "a", edge: 0 });
    expect([...store.selectedTraceKeys()]).toEqual(["a#0"]);
    store.setSelection({ kind: "net", net: "b" });
    expect([...store.selectedTraceKeys()]).toEqual(["b#0"]);
    store.setSelection({ kind: "part", part: "R2" });
    expect([...store.selectedTraceKeys()].sort()).toEqual(["a#0", "b#0"]);
  });

  test("failed traces incident to a part", () => {
    const store = loaded();
    expect(store.failedTraces("R2").map((t) => t.net)).toEqual(["b"]);
    expect(store.failedTraces("R1")).toEqual([]);
  });

  test("local anchor override touches only the placement anchor", () => {
    const store = loaded();
    store.applyLocalAnchor("R2", { face: 1, bary: [0.2, 0.3, 0.5] });
    expect(store.part("R2")?.placement?.anchor.face).toBe(1);
    // unplaced parts are ignored rather than invented
    store.applyLocalAnchor("R4", { face: 1, bary: [1, 0, 0] });
    expect(store.part("R4")?.placement).toBeNull();
  });
});
