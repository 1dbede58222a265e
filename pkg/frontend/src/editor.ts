/**
 * Glue: one session client, one store, both panes.
 *
 * Selection flow (both directions): a click in either pane resolves to
 * a target, the store mirrors it synchronously so the other pane's next
 * render already shows it, and the select message goes out in the same
 * tick.  The host's highlight push then confirms (or carries another
 * client's selection).
 */

import { DragController, type DragOptions } from "./drag.js";
import { SessionClient, type SelectTarget } from "./protocol.js";
import { layoutSchematic, hitTestSchematic, type SchematicScene } from "./schematicPane.js";
import { printAction, type PrintOutcome } from "./printAction.js";
import { DesignStore } from "./store.js";
import { Viewport3d } from "./viewport3d.js";

export class Editor {
  readonly store = new DesignStore();
  readonly viewport: Viewport3d;

  constructor(readonly client: SessionClient, aspect?: number) {
    this.viewport = new Viewport3d(this.store, aspect);
    client.onTraces((push) => {
      const keys = this.store.applyTraces(push);
      this.viewport.syncTraces(keys);
    });
    client.onHighlight((push) => this.store.setRemoteHighlight(push.target));
    this.store.subscribe((ev) => {
      if (ev.kind === "selection") this.viewport.applyHighlight();
    });
  }

  /** Fetch design truth and the mesh, then build both panes. */
  async open(): Promise<void> {
    const [snap, mesh] = await Promise.all([this.client.snapshot(), this.client.mesh()]);
    this.store.loadSnapshot(snap);
    this.store.loadMesh(mesh);
    this.viewport.loadMesh(mesh);
    this.viewport.syncTraces();
    this.viewport.syncPins();
  }

  /** Re-pull the snapshot after edits that move geometry. */
  async refresh(): Promise<void> {
    this.store.loadSnapshot(await this.client.snapshot());
    this.viewport.syncTraces();
    this.viewport.syncPins();
  }

  /**
   * Select a target: local mirror now, protocol message now, reply
   * later.  A host rejection (stale id) rolls the local mirror back.
   */
  select(target: SelectTarget | null): Promise<null> {
    this.store.setSelection(target);
    return this.client.select(target).catch((err) => {
      this.store.setSelection(null);
      throw err;
    });
  }

  schematicScene(): SchematicScene {
    return layoutSchematic(this.store);
  }

  /** Click in the schematic pane, in scene coordinates. */
  clickSchematic(x: number, y: number): SelectTarget | null {
    const target = hitTestSchematic(this.schematicScene(), x, y);
    void this.select(target).catch(() => {});
    return target;
  }

  /** Click on a trace line or pin in the 3D pane. */
  clickViewport(target: SelectTarget | null): SelectTarget | null {
    void this.select(target).catch(() => {});
    return target;
  }

  beginDrag(partId: string, opts: Omit<DragOptions, "onEnd"> = {}): DragController {
    const drag = new DragController(this.client, this.store, {
      ...opts,
      onEnd: () => this.refresh(),
    });
    drag.begin(partId);
    return drag;
  }

  rotatePart(partId: string, rotation: number): Promise<unknown> {
    return this.client.edit("rotate_part", { part_id: partId, rotation });
  }

  /**
   * Print: on refusal the camera jumps to the first problem spot so
   * the user sees what the host is objecting to.
   */
  async print(opts: { force?: boolean } = {}): Promise<PrintOutcome> {
    const outcome = await printAction(this.client, this.store, opts);
    if (outcome.kind === "refused" && outcome.zoomTargets.length > 0) {
      this.viewport.focusOn(outcome.zoomTargets[0].point);
    }
    return outcome;
  }
}
