/**
 * The print button.  Asks the host for the final STL; a host refusal
 * (failed routes or clearance violations) comes back as a structured
 * outcome with world positions to zoom at, never a thrown error.
 * Forcing past a refusal succeeds but carries a warning banner.
 */

import type { ClearanceRow, EdgeKey, ExportResult, Vec3 } from "./protocol.js";
import { SessionClient, SessionError, edgeKeyOf } from "./protocol.js";
import type { DesignStore } from "./store.js";

export interface ZoomTarget {
  label: string;
  point: Vec3;
}

export type PrintOutcome =
  | {
      kind: "exported";
      stl: Uint8Array;
      holes: unknown[];
      reportText: string;
      /** non-null only when the export was forced past a refusal */
      warning: string | null;
    }
  | {
      kind: "refused";
      message: string;
      failedEdges: EdgeKey[];
      violations: ClearanceRow[];
      zoomTargets: ZoomTarget[];
    };

function b64ToBytes(b64: string): Uint8Array {
  if (typeof Buffer !== "undefined") {
    return new Uint8Array(Buffer.from(b64, "base64"));
  }
  const raw = atob(b64);
  const out = new Uint8Array(raw.length);
  for (let i = 0; i < raw.length; i++) out[i] = raw.charCodeAt(i);
  return out;
}

function midpoint(a: Vec3, b: Vec3): Vec3 {
  return [(a[0] + b[0]) / 2, (a[1] + b[1]) / 2, (a[2] + b[2]) / 2];
}

export async function printAction(
  client: SessionClient,
  store: DesignStore,
  opts: { force?: boolean } = {},
): Promise<PrintOutcome> {
  let result: ExportResult;
  let warning: string | null = null;
  try {
    // always validate first, so a forced print of a clean design stays
    // banner-free and a dirty one names what it is overriding
    result = await client.exportStl();
  } catch (err) {
    if (!(err instanceof SessionError) || err.kind !== "export_invalid") throw err;
    if (!opts.force) {
      const failedEdges = (err.extra.failed_edges ?? []) as EdgeKey[];
      const violations = await client.clearance();
      const zoomTargets: ZoomTarget[] = [];
      for (const [net, edge] of failedEdges) {
        const t = store.trace(net, edge);
        const pts = t?.points ?? [];
        if (pts.length >= 2) {
          zoomTargets.push({
            label: `failed ${edgeKeyOf(net, edge)}`,
            point: midpoint(pts[0], pts[pts.length - 1]),
          });
        }
      }
      for (const v of violations) {
        zoomTargets.push({
          label: `clearance ${v.a.join("/")} vs ${v.b.join("/")} at ${v.distance.toFixed(2)}mm`,
          point: midpoint(v.point_a, v.point_b),
        });
      }
      return {
        kind: "refused",
        message: err.message,
        failedEdges,
        violations,
        zoomTargets,
      };
    }
    result = await client.exportStl({ force: true });
    warning = `forced past validation: ${err.message}; printed traces may be unusable`;
  }
  return {
    kind: "exported",
    stl: b64ToBytes(result.stl_base64),
    holes: result.holes,
    reportText: result.report.text,
    warning,
  };
}
