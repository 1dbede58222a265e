"""Surface placement: part anchors, pin footprints, traces, clearance.

The 3D half of the editor state.  A part sits at a surface anchor with a
rotation about the local normal; its pin positions come from walking the
footprint offsets along the surface (a discrete exponential map), so on a
flat region the footprint is reproduced exactly and on curved regions the
pins stay a true 2.54 mm apart along the surface.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BoundaryHit, PlacementError
from .geometry import SurfacePoint, TriMesh
from .routing import polyline_min_distance_witness, walk_on_surface

TWO_PI = 2.0 * math.pi

#: 2.54 mm pitch minus 1.5 mm tape width leaves about 1 mm of wall
DEFAULT_CLEARANCE = 1.0


def wrap_rotation(angle: float) -> float:
    a = math.fmod(float(angle), TWO_PI)
    return a + TWO_PI if a < 0 else a


@dataclass
class PartPlacement:
    anchor: SurfacePoint
    rotation: float = 0.0

    def __post_init__(self):
        self.rotation = wrap_rotation(self.rotation)


@dataclass
class Layout:
    """Placements plus everything derived from them that the editor keeps.

    ``waypoints`` and ``traces`` are keyed by ``(net_name, edge_id)``;
    ``junction_anchors`` by ``(net_name, junction_id)``.
    """

    placements: dict = field(default_factory=dict)
    junction_anchors: dict = field(default_factory=dict)
    waypoints: dict = field(default_factory=dict)
    traces: dict = field(default_factory=dict)
    clearance: float = DEFAULT_CLEARANCE


def tangent_frame(mesh: TriMesh, point: SurfacePoint):
    """Orthonormal (e1, e2) spanning the face plane at ``point``.

    e1 is the world +X axis projected onto the face; where the face normal
    is (anti)parallel to X, world +Y takes over.  Using the face normal
    (not the smoothed vertex normal) keeps footprint angles exact in the
    plane the walk starts in, and gives rotation 0 a stable, reproducible
    meaning across edits and file reloads.
    """
    n = mesh.face_normals[point.face]
    e1 = np.array([1.0, 0.0, 0.0]) - n[0] * n
    if np.linalg.norm(e1) < 1e-6:
        e1 = np.array([0.0, 1.0, 0.0]) - n[1] * n
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(n, e1)
    e2 /= np.linalg.norm(e2)
    return e1, e2


def pin_surface_points(mesh: TriMesh, placement: PartPlacement, part_def) -> list:
    """Surface positions for each footprint pin of a placed part.

    Each offset (x, y) maps to a straight surface walk from the anchor:
    direction rotated by ``rotation + atan2(y, x)`` in the tangent frame,
    length hypot(x, y).  Walking off the mesh boundary means the part
    overhangs a hole or rim, which is a placement error.
    """
    e1, e2 = tangent_frame(mesh, placement.anchor)
    out = []
    for (x, y) in part_def.footprint.offsets:
        dist = math.hypot(x, y)
        if dist == 0.0:
            out.append(placement.anchor)
            continue
        ang = placement.rotation + math.atan2(y, x)
        direction = math.cos(ang) * e1 + math.sin(ang) * e2
        try:
            end, _ = walk_on_surface(mesh, placement.anchor, direction, dist)
        except BoundaryHit as bh:
            raise PlacementError(
                f"{part_def.name}: pin offset ({x}, {y}) walks off the surface"
                f" after {bh.traveled:.3f} of {dist:.3f} mm"
            ) from None
        out.append(end)
    return out


@dataclass(frozen=True)
class ClearanceViolation:
    a: tuple  # ("trace", net, edge_id) or ("pad", part_id, pin_index)
    b: tuple
    distance: float
    point_a: tuple
    point_b: tuple

    def __str__(self):
        return (
            f"{_element_label(self.a)} vs {_element_label(self.b)}:"
            f" {self.distance:.3f} mm"
        )


def _element_label(el) -> str:
    if el[0] == "trace":
        return f"trace {el[1]}#{el[2]}"
    return f"pad {el[1]}.{el[2]}"


def check_clearance(mesh: TriMesh, layout: Layout, schematic,
                    pin_points: dict) -> list:
    """All element pairs closer than ``layout.clearance``.

    Elements are routed trace polylines and pin pads (points).  A pair is
    exempt when the two elements share a net terminal: a trace touches its
    own endpoint pads by construction, and consecutive tree edges meet at
    their shared terminal.  Failed traces carry no geometry and are skipped.

    ``pin_points`` maps part_id -> list of pin SurfacePoints (the caller
    owns placement resolution and caching).
    """
    elements = []  # (id_tuple, points (n,3), terminal set)
    for key, trace in layout.traces.items():
        if not trace.routed or len(trace.points) == 0:
            continue
        net_name, edge_id = key
        net = schematic.nets.get(net_name)
        terms = set()
        if net is not None and edge_id in net.edges:
            # junction ids are net-local; qualify them so equal names on
            # different nets cannot fake adjacency
            terms = {
                (net_name, t) if t[0] == "junction" else t
                for t in net.edges[edge_id]
            }
        elements.append((("trace",) + key, trace.points, terms))
    for part_id, pts in pin_points.items():
        for idx, sp in enumerate(pts):
            term = ("pin", part_id, idx)
            elements.append(
                (("pad", part_id, idx), mesh.embed(sp)[None, :], {term})
            )

    limit = layout.clearance
    out = []
    for i in range(len(elements)):
        id_a, pts_a, terms_a = elements[i]
        for j in range(i + 1, len(elements)):
            id_b, pts_b, terms_b = elements[j]
            if terms_a & terms_b:
                continue
            d, pa, pb = polyline_min_distance_witness(pts_a, pts_b)
            if d < limit:
                out.append(
                    ClearanceViolation(id_a, id_b, d, tuple(pa), tuple(pb))
                )
    out.sort(key=lambda v: v.distance)
    return out


def export_valid(layout: Layout, violations: list) -> bool:
    """No Failed traces and no clearance violations."""
    return not violations and all(t.routed for t in layout.traces.values())
