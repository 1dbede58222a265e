"""A ready-made design: a 21-part LED chain wound around a cone.

One battery clip plus ten resistor/LED stages, placed along a spiral on
the lateral surface and chained by twenty two-terminal nets.  Everything
is expressed as an edit log replayed through :func:`meshwire.replay`, so
the same fixture exercises op dispatch, placement, routing, and file
round-trips at a realistic size (10k triangles, 21 parts, 20 traces).

Run ``python3 -m meshwire.demo OUTDIR`` to write ``cone.stl`` plus a
routed ``demo.json`` ready for the CLI.
"""

from __future__ import annotations

import math

from .document import Document, replay
from .geometry import SurfacePoint, TriMesh
from .layout import tangent_frame
from .primitives import make_cone

CONE_RADIUS = 30.0
CONE_HEIGHT = 120.0


def demo_mesh() -> TriMesh:
    return make_cone(CONE_RADIUS, CONE_HEIGHT, segments=80, rings=62)


def _spiral_anchor(mesh: TriMesh, k: int) -> SurfacePoint:
    # 21 stops from z=10 up to z=80, winding ~2.5 turns; the cone narrows
    # with height so the pitch stays comfortably above pin clearance
    z = 10.0 + 3.5 * k
    theta = k * (2.0 * math.pi / 8.4)
    r = CONE_RADIUS * (1.0 - z / CONE_HEIGHT)
    return mesh.surface_point_near((r * math.cos(theta), r * math.sin(theta), z))


def _point_arg(sp: SurfacePoint) -> dict:
    return {"face": int(sp.face), "bary": [float(b) for b in sp.bary]}


def _chain_rotation(mesh: TriMesh, sp: SurfacePoint, toward: SurfacePoint) -> float:
    """Rotation that points the part's +x pin axis at a neighbor anchor.

    Keeps each trace leaving its pin along the chain instead of sideways
    across the part body, which is what keeps the layout clearance-clean.
    """
    e1, e2 = tangent_frame(mesh, sp)
    d = mesh.embed(toward) - mesh.embed(sp)
    return math.atan2(float(d @ e2), float(d @ e1))


def demo_oplog(mesh: TriMesh) -> list:
    """Edit log that builds the whole design on ``mesh`` from scratch."""
    parts = ["BAT"] + [f"{kind}{i}" for i in range(1, 11) for kind in ("R", "D")]
    defs = {"BAT": "battery_clip", "R": "resistor", "D": "led"}
    ops = []
    for k, pid in enumerate(parts):
        ops.append(
            {
                "op": "add_part",
                "args": {
                    "part": defs[pid[0]] if pid != "BAT" else defs["BAT"],
                    "part_id": pid,
                    "pos": [15.0 * k, 0.0],
                },
            }
        )
    anchors = [_spiral_anchor(mesh, k) for k in range(len(parts))]
    for k, pid in enumerate(parts):
        nxt = anchors[k + 1] if k + 1 < len(parts) else anchors[k - 1]
        rot = _chain_rotation(mesh, anchors[k], nxt)
        if k + 1 == len(parts):
            rot += math.pi  # last part aimed via its predecessor
        if pid == "BAT":
            rot += math.pi  # the chain hangs off pin 0 ("+"), not pin 1
        ops.append(
            {
                "op": "place_part",
                "args": {
                    "part_id": pid,
                    "anchor": _point_arg(anchors[k]),
                    "rotation": rot,
                },
            }
        )
    # chain: BAT.0 - R1.0, R1.1 - D1.0, D1.1 - R2.0, ...
    for k, (a, b) in enumerate(zip(parts, parts[1:]), start=1):
        pin_a = 0 if a == "BAT" else 1
        ops.append(
            {
                "op": "add_net",
                "args": {
                    "name": f"n{k:02d}",
                    "terminals": [["pin", a, pin_a], ["pin", b, 0]],
                },
            }
        )
    return ops


def build_demo() -> tuple:
    """(mesh, routed document) for the cone chain."""
    mesh = demo_mesh()
    return mesh, replay(mesh, demo_oplog(mesh))


def main(argv=None) -> int:
    import argparse
    from pathlib import Path

    from .designfile import save_design
    from .meshio import save_mesh

    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("outdir", type=Path)
    args = ap.parse_args(argv)
    args.outdir.mkdir(parents=True, exist_ok=True)

    mesh, doc = build_demo()
    (args.outdir / "cone.stl").write_bytes(save_mesh(mesh))
    save_design(args.outdir / "demo.json", doc, "cone.stl")
    routed = sum(1 for t in doc.layout.traces.values() if t.routed)
    print(f"wrote {args.outdir / 'cone.stl'} ({mesh.n_faces} faces)")
    print(f"wrote {args.outdir / 'demo.json'} ({routed}/{len(doc.layout.traces)} traces routed)")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
