/**
 * 3D pane: the printed part's mesh plus every trace polyline.
 *
 * Owns a three.js scene graph but no renderer; the browser shell passes
 * the scene/camera pair to WebGLRenderer while tests inspect the graph
 * and drive picking directly.  Routed traces render as polylines along
 * the surface; failed traces render as a straight dashed annotation
 * line between the two endpoints, deliberately cutting through space so
 * the eye catches the gap that needs a waypoint or a move.
 */

import * as THREE from "three";
import type { Anchor, MeshData, TraceRecord, Vec3 } from "./protocol.js";
import { edgeKeyOf } from "./protocol.js";
import type { DesignStore } from "./store.js";

const MESH_COLOR = 0xb9c4cc;
const TRACE_COLOR = 0x1a7a2a;
const TRACE_HILITE = 0x0066cc;
const FAILED_COLOR = 0xd32f2f;
const PIN_COLOR = 0x8833aa;

export interface SurfaceHit {
  anchor: Anchor;
  point: Vec3;
  distance: number;
}

function barycentric(p: THREE.Vector3, a: Vec3, b: Vec3, c: Vec3): [number, number, number] {
  const v0 = new THREE.Vector3(b[0] - a[0], b[1] - a[1], b[2] - a[2]);
  const v1 = new THREE.Vector3(c[0] - a[0], c[1] - a[1], c[2] - a[2]);
  const v2 = new THREE.Vector3(p.x - a[0], p.y - a[1], p.z - a[2]);
  const d00 = v0.dot(v0);
  const d01 = v0.dot(v1);
  const d11 = v1.dot(v1);
  const d20 = v2.dot(v0);
  const d21 = v2.dot(v1);
  const denom = d00 * d11 - d01 * d01;
  const v = (d11 * d20 - d01 * d21) / denom;
  const w = (d00 * d21 - d01 * d20) / denom;
  // clamp float noise so the host's validity check always accepts the pick
  const clamped = [1 - v - w, v, w].map((x) => Math.max(0, x));
  const sum = clamped[0] + clamped[1] + clamped[2];
  return [clamped[0] / sum, clamped[1] / sum, clamped[2] / sum];
}

export class Viewport3d {
  readonly scene = new THREE.Scene();
  readonly camera: THREE.PerspectiveCamera;
  meshObject: THREE.Mesh | null = null;
  /** world-space slack for picking trace lines; mm on real meshes */
  linePickThreshold = 0.8;
  /** pin marker sphere radius, in mesh units */
  pinMarkerRadius = 0.6;

  private meshData: MeshData | null = null;
  private traceLines = new Map<string, THREE.Line>();
  private traceGroup = new THREE.Group();
  private pinGroup = new THREE.Group();
  private raycaster = new THREE.Raycaster();
  private azimuth = Math.PI / 4;
  private elevation = Math.PI / 5;

  constructor(private store: DesignStore, aspect = 4 / 3) {
    this.camera = new THREE.PerspectiveCamera(50, aspect, 0.1, 5000);
    this.scene.add(new THREE.AmbientLight(0xffffff, 0.7));
    const sun = new THREE.DirectionalLight(0xffffff, 0.8);
    sun.position.set(1, 1, 2);
    this.scene.add(sun);
    this.scene.add(this.traceGroup);
    this.scene.add(this.pinGroup);
    this.updateCamera();
  }

  loadMesh(data: MeshData): void {
    if (this.meshObject) this.scene.remove(this.meshObject);
    this.meshData = data;
    const geo = new THREE.BufferGeometry();
    const pos = new Float32Array(data.vertices.length * 3);
    data.vertices.forEach((v, i) => pos.set(v, i * 3));
    geo.setAttribute("position", new THREE.BufferAttribute(pos, 3));
    geo.setIndex(data.faces.flat());
    geo.computeVertexNormals();
    const mat = new THREE.MeshLambertMaterial({ color: MESH_COLOR });
    this.meshObject = new THREE.Mesh(geo, mat);
    this.meshObject.name = "surface";
    this.scene.add(this.meshObject);

    const box = new THREE.Box3().setFromObject(this.meshObject);
    const center = box.getCenter(new THREE.Vector3());
    const size = box.getSize(new THREE.Vector3()).length();
    this.store.setCamera({
      target: [center.x, center.y, center.z],
      distance: Math.max(size * 1.4, 1),
    });
    this.updateCamera();
  }

  /** Rebuild the line objects for the given keys (all traces if omitted). */
  syncTraces(keys?: Iterable<string>): void {
    const wanted = keys ? [...keys] : [...this.store.traces.keys()];
    for (const key of wanted) {
      const old = this.traceLines.get(key);
      if (old) {
        this.traceGroup.remove(old);
        old.geometry.dispose();
        this.traceLines.delete(key);
      }
      const record = this.store.traces.get(key);
      if (!record) continue; // removed edge
      const line = this.buildLine(record);
      if (line) {
        this.traceLines.set(key, line);
        this.traceGroup.add(line);
      }
    }
    this.applyHighlight();
  }

  private buildLine(t: TraceRecord): THREE.Line | null {
    const pts = t.points ?? [];
    if (pts.length < 2) return null;
    const failed = t.status === "failed";
    // a failed trace draws as one straight annotation segment, not a path
    const used: Vec3[] = failed ? [pts[0], pts[pts.length - 1]] : pts;
    const geo = new THREE.BufferGeometry().setFromPoints(
      used.map((p) => new THREE.Vector3(p[0], p[1], p[2])),
    );
    const mat = failed
      ? new THREE.LineDashedMaterial({ color: FAILED_COLOR, dashSize: 1.5, gapSize: 1.0 })
      : new THREE.LineBasicMaterial({ color: TRACE_COLOR });
    const line = new THREE.Line(geo, mat);
    if (failed) line.computeLineDistances();
    line.name = edgeKeyOf(t.net, t.edge);
    line.userData = {
      net: t.net,
      edge: t.edge,
      failed,
      failureReason: t.failure_reason ?? null,
    };
    return line;
  }

  /** Purple markers on every placed pin; rebuilt after snapshot loads. */
  syncPins(): void {
    this.pinGroup.clear();
    for (const part of this.store.snapshot?.parts ?? []) {
      if (!part.placement) continue;
      for (const xyz of part.placement.pin_xyz) {
        const dot = new THREE.Mesh(
          new THREE.SphereGeometry(this.pinMarkerRadius, 8, 8),
          new THREE.MeshLambertMaterial({ color: PIN_COLOR }),
        );
        dot.position.set(xyz[0], xyz[1], xyz[2]);
        dot.userData = { part: part.id };
        this.pinGroup.add(dot);
      }
    }
  }

  /** Recolor trace lines to match the store's selection. */
  applyHighlight(): void {
    const keys = this.store.selectedTraceKeys();
    for (const [key, line] of this.traceLines) {
      if (line.userData.failed) continue; // failure red always wins
      const mat = line.material as THREE.LineBasicMaterial;
      mat.color.setHex(keys.has(key) ? TRACE_HILITE : TRACE_COLOR);
    }
  }

  /** Keys of trace lines currently drawn in the highlight color. */
  highlightedKeys(): string[] {
    const out: string[] = [];
    for (const [key, line] of this.traceLines) {
      const mat = line.material as THREE.LineBasicMaterial;
      if (!line.userData.failed && mat.color.getHex() === TRACE_HILITE) out.push(key);
    }
    return out.sort();
  }

  /** Sorted keys of every trace line in the scene. */
  traceKeys(): string[] {
    return [...this.traceLines.keys()].sort();
  }

  /** Point count of one trace line's geometry, for repaint checks. */
  tracePointCount(key: string): number {
    const line = this.traceLines.get(key);
    return line ? line.geometry.getAttribute("position").count : 0;
  }

  /** Keys rendered as failure annotations, with their reasons. */
  failureAnnotations(): { key: string; reason: string | null }[] {
    const out: { key: string; reason: string | null }[] = [];
    for (const [key, line] of this.traceLines) {
      if (line.userData.failed) out.push({ key, reason: line.userData.failureReason });
    }
    return out.sort((a, b) => (a.key < b.key ? -1 : 1));
  }

  /**
   * Cast a ray from normalized device coordinates (-1..1) and return
   * the nearest surface hit as a barycentric anchor, or null when the
   * pointer misses the part entirely.
   */
  pickSurface(ndcX: number, ndcY: number): SurfaceHit | null {
    if (!this.meshObject || !this.meshData) return null;
    this.camera.updateMatrixWorld();
    this.raycaster.setFromCamera(new THREE.Vector2(ndcX, ndcY), this.camera);
    const hits = this.raycaster.intersectObject(this.meshObject, false);
    const hit = hits[0]; // three sorts by distance: nearest intersection wins
    if (!hit || hit.faceIndex == null) return null;
    const face = this.meshData.faces[hit.faceIndex];
    const [a, b, c] = face.map((vi) => this.meshData!.vertices[vi]);
    const bary = barycentric(hit.point, a, b, c);
    return {
      anchor: { face: hit.faceIndex, bary },
      point: [hit.point.x, hit.point.y, hit.point.z],
      distance: hit.distance,
    };
  }

  /** Part id of the pin marker under the pointer, if any is closer
   * than the surface itself. */
  pickPart(ndcX: number, ndcY: number): string | null {
    // no renderer in headless use, so nothing else refreshes matrices
    this.scene.updateMatrixWorld();
    this.camera.updateMatrixWorld();
    this.raycaster.setFromCamera(new THREE.Vector2(ndcX, ndcY), this.camera);
    const pins = this.raycaster.intersectObjects(this.pinGroup.children, false);
    if (!pins.length) return null;
    const surface = this.meshObject
      ? this.raycaster.intersectObject(this.meshObject, false)
      : [];
    // pins sit on the surface; occluded markers on the far side lose
    if (surface.length && surface[0].distance + 1.2 * this.pinMarkerRadius < pins[0].distance) {
      return null;
    }
    return (pins[0].object.userData.part as string) ?? null;
  }

  /** Trace line under the pointer, as a selection target. */
  pickTrace(ndcX: number, ndcY: number): { net: string; edge: number } | null {
    this.camera.updateMatrixWorld();
    this.raycaster.setFromCamera(new THREE.Vector2(ndcX, ndcY), this.camera);
    this.raycaster.params.Line = { threshold: this.linePickThreshold };
    const hits = this.raycaster.intersectObjects([...this.traceLines.values()], false);
    if (!hits.length) return null;
    const { net, edge } = hits[0].object.userData;
    return { net, edge };
  }

  /** Aim the camera at a world point, optionally pulling in closer. */
  focusOn(point: Vec3, distance?: number): void {
    const pose = this.store.view.camera;
    this.store.setCamera({
      target: point,
      distance: distance ?? Math.min(pose.distance, 40),
    });
    this.updateCamera();
  }

  orbit(dAzimuth: number, dElevation: number): void {
    this.azimuth += dAzimuth;
    this.elevation = Math.max(
      -Math.PI / 2 + 0.05,
      Math.min(Math.PI / 2 - 0.05, this.elevation + dElevation),
    );
    this.updateCamera();
  }

  dolly(factor: number): void {
    const pose = this.store.view.camera;
    this.store.setCamera({ ...pose, distance: Math.max(1, pose.distance * factor) });
    this.updateCamera();
  }

  setAspect(aspect: number): void {
    this.camera.aspect = aspect;
    this.camera.updateProjectionMatrix();
  }

  updateCamera(): void {
    const { target, distance } = this.store.view.camera;
    const ce = Math.cos(this.elevation);
    this.camera.position.set(
      target[0] + distance * ce * Math.cos(this.azimuth),
      target[1] + distance * ce * Math.sin(this.azimuth),
      target[2] + distance * Math.sin(this.elevation),
    );
    this.camera.up.set(0, 0, 1);
    this.camera.lookAt(target[0], target[1], target[2]);
    this.camera.updateMatrixWorld();
  }
}
