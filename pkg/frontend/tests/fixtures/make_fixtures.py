#!/usr/bin/env python3
"""Builds the integration-test fixtures.

Two designs, written into generated/:

* sphere: four resistors on an icosphere.  R1's second pin sits on a
  vertex; the drag path for R2 passes through a pose that lands its
  first pin where the inward surface-normal ray from R1's pin exits the
  far side, so the chord between the pins is parallel to the normal and
  routing must fail deterministically.
* plane: two parallel traces 0.5 mm apart under a 1.0 mm clearance
  rule, so export must refuse until forced.

Every pose is computed on the mesh as reloaded from the saved STL, not
on the generating mesh: binary STL stores float32 and reloading rebuilds
the vertex welds in a different order, which moves points by ~1e-4 mm.
That is fatal here, because the degeneracy margin we rely on is about
1e-5 mm over a 100 mm chord.  Building on the reloaded mesh makes the
fixture's floats bit-identical to what the host process computes.

The script replays the drag path through a load_design() round trip and
asserts every expected status before writing anything, so a stale
fixture can never make the client tests pass vacuously.
"""

import json
import math
import sys
from pathlib import Path

import numpy as np

from meshwire.document import Document
from meshwire.designfile import load_design, save_design
from meshwire.geometry import SurfacePoint
from meshwire.layout import tangent_frame, wrap_rotation
from meshwire.meshio import load_mesh, save_mesh
from meshwire.primitives import make_icosphere, make_slab
from meshwire.routing import walk_on_surface

OUT = Path(__file__).parent / "generated"


def roundtripped(mesh, path):
    path.write_bytes(save_mesh(mesh))
    return load_mesh(path)


def vertex_point(mesh, vid):
    face = int(np.nonzero((mesh.faces == vid).any(axis=1))[0][0])
    bary = (mesh.faces[face] == vid).astype(float)
    return SurfacePoint(face, bary)


def far_intersection(mesh, origin, direction):
    """Farthest intersection of a ray with the mesh, as a SurfacePoint.

    Vectorized Moller-Trumbore over every face; t > 1 mm skips the faces
    around the origin itself.
    """
    tri = mesh.vertices[mesh.faces]
    e1 = tri[:, 1] - tri[:, 0]
    e2 = tri[:, 2] - tri[:, 0]
    d = np.asarray(direction, dtype=np.float64)
    pv = np.cross(d, e2)
    det = np.einsum("ij,ij->i", e1, pv)
    safe = np.where(np.abs(det) > 1e-12, det, 1.0)
    s = np.asarray(origin, dtype=np.float64) - tri[:, 0]
    u = np.einsum("ij,ij->i", s, pv) / safe
    qv = np.cross(s, e1)
    v = (qv @ d) / safe
    t = np.einsum("ij,ij->i", e2, qv) / safe
    hit = (np.abs(det) > 1e-12) & (u >= 0.0) & (v >= 0.0) & (u + v <= 1.0) & (t > 1.0)
    assert hit.any(), "ray missed the far side"
    f = int(np.flatnonzero(hit)[np.argmax(t[hit])])
    bary = np.array([1.0 - u[f] - v[f], u[f], v[f]])
    bary = np.clip(bary, 0.0, None)
    return SurfacePoint(f, bary / bary.sum())


def pose_landing_pin_on(mesh, target_sp, offset):
    """(anchor, rotation) placing a pin with footprint offset ``offset``
    exactly at ``target_sp``.

    Walk from the target outward by |offset|; the anchor is where that
    walk ends, and the rotation aims the part's pin walk straight back
    along the reversed, parallel-transported direction.
    """
    tri = mesh.vertices[mesh.faces[target_sp.face]]
    seed = tri.mean(axis=0) - mesh.embed(target_sp)  # interior of the start face
    dist = math.hypot(*offset)
    anchor, arrive = walk_on_surface(mesh, target_sp, seed, dist)
    back = -arrive.dir
    e1, e2 = tangent_frame(mesh, anchor)
    rot = math.atan2(float(back @ e2), float(back @ e1)) - math.atan2(offset[1], offset[0])
    return anchor, wrap_rotation(rot)


def sp_json(sp):
    return {"face": int(sp.face), "bary": [float(b) for b in sp.bary]}


def build_sphere_fixture():
    mesh = roundtripped(make_icosphere(3, 50.0), OUT / "sphere.stl")

    vi = 7  # arbitrary vertex of the reloaded mesh
    r1_anchor, r1_rot = pose_landing_pin_on(mesh, vertex_point(mesh, vi), (1.27, 0.0))

    doc = Document(mesh)
    for pid, pos in [("R1", (-30, 0)), ("R2", (-10, 0)), ("R3", (10, 0)), ("R4", (30, 0))]:
        doc.apply("add_part", {"part": "resistor", "part_id": pid, "pos": pos})
    doc.apply("add_net", {"name": "a", "terminals": [["pin", "R1", 1], ["pin", "R2", 0]]})
    doc.apply("add_net", {"name": "b", "terminals": [["pin", "R2", 1], ["pin", "R3", 0]]})
    doc.apply("add_net", {"name": "c", "terminals": [["pin", "R3", 1], ["pin", "R4", 0]]})

    doc.apply("place_part", {"part_id": "R1", "anchor": sp_json(r1_anchor), "rotation": r1_rot})

    # measure where the fixed pin actually landed (walks that graze a
    # vertex are nudged 1e-6 mm along an edge) and shoot the inward
    # normal ray from there; its far-side exit is the degenerate target
    pin_sp = doc.pin_points("R1")[1]
    p = mesh.embed(pin_sp)
    assert np.linalg.norm(p - mesh.vertices[vi]) < 5e-6, p
    n = mesh.normal_at(pin_sp)
    target = far_intersection(mesh, p, -n)
    magic_anchor, magic_rot = pose_landing_pin_on(mesh, target, (-1.27, 0.0))

    # drag waypoints bracket the degenerate pose a couple of mm out
    e1, _ = tangent_frame(mesh, magic_anchor)
    before, _ = walk_on_surface(mesh, magic_anchor, e1, 2.0)
    after, _ = walk_on_surface(mesh, magic_anchor, -e1, 2.0)
    start, _ = walk_on_surface(mesh, magic_anchor, e1, 5.0)

    doc.apply("place_part", {"part_id": "R2", "anchor": sp_json(start), "rotation": magic_rot})
    doc.apply("place_part", {"part_id": "R3",
                             "anchor": sp_json(mesh.surface_point_near([10.0, 3.0, 48.0]))})
    doc.apply("place_part", {"part_id": "R4",
                             "anchor": sp_json(mesh.surface_point_near([-10.0, 3.0, 48.0]))})

    save_design(OUT / "sphere_design.json", doc, mesh_ref="sphere.stl")

    # replay the drag path on a fresh load of the saved files, exactly
    # as the host process will see them, and pin down what it must say
    doc, _ = load_design(OUT / "sphere_design.json")
    doc.route_all()
    steps = []
    for anchor, want_status, want_reason in [
        (before, "routed", None),
        (magic_anchor, "failed", "degenerate"),
        (after, "routed", None),
    ]:
        _, changed, _ = doc.apply("drag_part", {"part_id": "R2", "anchor": sp_json(anchor)})
        assert sorted(changed) == [("a", 0), ("b", 0)], changed
        ta = doc.layout.traces[("a", 0)]
        tb = doc.layout.traces[("b", 0)]
        assert ta.status == want_status, (ta.status, ta.failure_reason)
        assert ta.failure_reason == want_reason, ta.failure_reason
        assert tb.status == "routed", (tb.status, tb.failure_reason)
        if want_status == "failed":
            # the chord must be normal to the surface with a wide margin,
            # not sit on the router's 1e-7 knife edge
            q = mesh.embed(doc.pin_points("R2")[0])
            chord = q - p
            tang = chord - (chord @ n) * n
            ratio = np.linalg.norm(tang) / np.linalg.norm(chord)
            assert ratio < 5e-8, ratio
        steps.append({
            "anchor": sp_json(anchor),
            "expect": {"a#0": want_status, "b#0": "routed"},
            "failure_reason": want_reason,
        })
    pin0 = mesh.embed(doc.pin_points("R2")[0])  # at the "after" pose now
    assert np.linalg.norm(pin0 - mesh.embed(target)) > 1.0

    return {
        "design": "sphere_design.json",
        "mesh": "sphere.stl",
        "part": "R2",
        "incident": [["a", 0], ["b", 0]],
        "spectator": ["c", 0],
        "degenerate_step": 1,
        "steps": steps,
    }


def build_plane_fixture():
    # a slab, not an open sheet: the host refuses meshes with boundary
    # edges, and export needs a printable solid anyway
    mesh = roundtripped(make_slab(100.0, 100.0, 3.0, 40, 40), OUT / "plane.stl")
    doc = Document(mesh)
    for pid, pos in [("R1", (-30, 10)), ("R2", (30, 10)), ("R3", (-30, -10)), ("R4", (30, -10))]:
        doc.apply("add_part", {"part": "resistor", "part_id": pid, "pos": pos})
    doc.apply("add_net", {"name": "a", "terminals": [["pin", "R1", 1], ["pin", "R2", 0]]})
    doc.apply("add_net", {"name": "b", "terminals": [["pin", "R3", 1], ["pin", "R4", 0]]})
    doc.apply("set_clearance", {"value": 1.0})

    # rotation 0 on the flat top maps pin offsets straight into world
    # XY, so these anchors give two 80 mm traces 0.5 mm apart
    for pid, (x, y) in [("R1", (-41.27, 0.25)), ("R2", (41.27, 0.25)),
                        ("R3", (-41.27, -0.25)), ("R4", (41.27, -0.25))]:
        doc.apply("place_part",
                  {"part_id": pid, "anchor": sp_json(mesh.surface_point_near([x, y, 3.0]))})

    save_design(OUT / "plane_design.json", doc, mesh_ref="plane.stl")

    doc, _ = load_design(OUT / "plane_design.json")
    doc.route_all()
    assert all(t.routed for t in doc.layout.traces.values())
    violations = doc.check_clearance()
    assert violations, "fixture must violate clearance"

    return {
        "design": "plane_design.json",
        "mesh": "plane.stl",
        "violation_count": len(violations),
    }


def main():
    OUT.mkdir(exist_ok=True)
    fixture = {
        "sphere": build_sphere_fixture(),
        "plane": build_plane_fixture(),
    }
    (OUT / "fixture.json").write_text(json.dumps(fixture, indent=2))
    print(f"fixtures written to {OUT}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
