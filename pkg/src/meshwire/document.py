"""One editable circuit document: mesh + schematic + layout + routing state.

Single-writer model.  Every mutation goes through :meth:`Document.apply`,
which takes an operation name and a JSON-friendly argument dict.  Direct
API use, edit-log replay, and the interactive session protocol all funnel
through this one dispatcher, so they cannot drift apart: replaying a log
of the ops applied to one document reproduces its traces bit for bit.

Trace bookkeeping: each net tree edge owns one trace entry.  An edit
re-routes only the edges it touches (new polyline objects); every other
trace keeps its identity, which tests rely on to pin down locality.
"""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from .engrave import ChannelProfile, drill_holes, engrave_channels
from .errors import PlacementError, SchematicError
from .geometry import SurfacePoint, TriMesh
from .layout import (
    Layout,
    PartPlacement,
    check_clearance,
    pin_surface_points,
    wrap_rotation,
)
from .partlib import PART_LIBRARY
from .routing import (
    FAILED,
    REASON_UNPLACED,
    ROUTED,
    RoutingParams,
    SurfacePolyline,
    route_trace,
)
from .schematic import PartDef, Schematic, junction, normalize_terminal, pin


class Document:
    def __init__(self, mesh: TriMesh, schematic: Schematic | None = None,
                 layout: Layout | None = None,
                 params: RoutingParams | None = None,
                 profile: ChannelProfile | None = None):
        self.mesh = mesh
        self.schematic = schematic if schematic is not None else Schematic()
        self.layout = layout if layout is not None else Layout()
        self.params = params if params is not None else RoutingParams()
        self.profile = profile if profile is not None else ChannelProfile()
        self._pin_cache: dict = {}

    # -- geometry resolution ---------------------------------------------------

    def as_surface_point(self, value) -> SurfacePoint:
        """Accepts a SurfacePoint, {"face": f, "bary": [...]}, or (face, bary)."""
        if isinstance(value, SurfacePoint):
            sp = value
        elif isinstance(value, dict):
            sp = SurfacePoint(int(value["face"]), value["bary"])
        else:
            face, bary = value
            sp = SurfacePoint(int(face), bary)
        self.mesh.check_point(sp)
        return sp

    def pin_points(self, part_id: str) -> list:
        """Pin SurfacePoints of a placed part, cached until moved."""
        pts = self._pin_cache.get(part_id)
        if pts is None:
            placement = self.layout.placements[part_id]
            part = self.schematic.part(part_id)
            pts = pin_surface_points(self.mesh, placement, part.part)
            self._pin_cache[part_id] = pts
        return pts

    def terminal_anchor(self, net_name: str, term) -> SurfacePoint | None:
        """3D anchor of a terminal, or None while it has no placement."""
        if term[0] == "pin":
            _, part_id, idx = term
            if part_id not in self.layout.placements:
                return None
            return self.pin_points(part_id)[idx]
        return self.layout.junction_anchors.get((net_name, term[1]))

    # -- routing -----------------------------------------------------------------

    def route_edge_segments(self, net_name: str, edge_id: int):
        """Route one net edge as per-leg polylines through its waypoints.

        Returns a list of SurfacePolylines (anchor, waypoints..., anchor legs)
        or None when an endpoint has no placement yet.
        """
        net = self.schematic.net(net_name)
        term_a, term_b = net.edges[edge_id]
        a = self.terminal_anchor(net_name, term_a)
        b = self.terminal_anchor(net_name, term_b)
        if a is None or b is None:
            return None
        stops = [a, *self.layout.waypoints.get((net_name, edge_id), ()), b]
        return [
            route_trace(self.mesh, p, q, self.params)
            for p, q in zip(stops, stops[1:])
        ]

    def reroute_edge(self, net_name: str, edge_id: int) -> SurfacePolyline:
        segments = self.route_edge_segments(net_name, edge_id)
        if segments is None:
            trace = self._unplaced_annotation(net_name, edge_id)
        elif all(s.routed for s in segments):
            trace = _merge_segments(segments)
        else:
            bad = next(s for s in segments if not s.routed)
            ends = (segments[0].samples[0], segments[-1].samples[-1])
            trace = SurfacePolyline(
                samples=list(ends),
                points=self.mesh.embed_many(list(ends)),
                status=FAILED,
                endpoints=ends,
                failure_reason=bad.failure_reason,
            )
        self.layout.traces[(net_name, edge_id)] = trace
        return trace

    def _unplaced_annotation(self, net_name, edge_id) -> SurfacePolyline:
        net = self.schematic.net(net_name)
        known = [
            sp
            for t in net.edges[edge_id]
            if (sp := self.terminal_anchor(net_name, t)) is not None
        ]
        return SurfacePolyline(
            samples=list(known),
            points=(
                self.mesh.embed_many(known) if known else np.zeros((0, 3))
            ),
            status=FAILED,
            endpoints=None,
            failure_reason=REASON_UNPLACED,
        )

    def route_all(self) -> list:
        changed = []
        for net_name, net in self.schematic.nets.items():
            for edge_id in net.edges:
                self.reroute_edge(net_name, edge_id)
                changed.append((net_name, edge_id))
        return sorted(changed)

    def incident_edges(self, part_id: str) -> list:
        out = []
        for net_name, net in self.schematic.nets.items():
            for edge_id, (a, b) in net.edges.items():
                if (a[0] == "pin" and a[1] == part_id) or (
                    b[0] == "pin" and b[1] == part_id
                ):
                    out.append((net_name, edge_id))
        return sorted(out)

    def check_clearance(self) -> list:
        pin_pts = {pid: self.pin_points(pid) for pid in self.layout.placements}
        return check_clearance(self.mesh, self.layout, self.schematic, pin_pts)

    def traces_sorted(self):
        """(key, trace) pairs in stable (net, edge_id) order."""
        for key in sorted(self.layout.traces):
            yield key, self.layout.traces[key]

    def build_printable(self):
        """Carve every routed trace, then drill every placed pin.

        Returns (mesh, hole_reports); hole report rows are
        {"part", "pin", "ok"} plus "error" on the ones that were skipped.
        Pins are grouped by footprint drill diameter, and their surface
        references resolve against the design mesh: the carved mesh has
        fresh face ids.
        """
        traces = [t for _, t in self.traces_sorted() if t.routed]
        current = engrave_channels(self.mesh, traces, self.profile).mesh
        groups: dict = {}
        for pid in sorted(self.layout.placements):
            d = self.schematic.part(pid).part.footprint.drill_diameter
            for idx, sp in enumerate(self.pin_points(pid)):
                groups.setdefault(d, []).append((pid, idx, sp))
        holes = []
        for d in sorted(groups):
            rows = groups[d]
            res = drill_holes(
                current,
                [sp for _, _, sp in rows],
                replace(self.profile, hole_diameter=d),
                source_mesh=self.mesh,
            )
            current = res.mesh
            for (pid, idx, _), rec in zip(rows, res.report["holes"]):
                entry = {"part": pid, "pin": idx, "ok": rec["ok"]}
                if not rec["ok"]:
                    entry["error"] = rec["error"]
                holes.append(entry)
        return current, holes

    # -- trace bookkeeping helpers -------------------------------------------------

    def _drop_edge_state(self, net_name: str, edge_id: int):
        self.layout.traces.pop((net_name, edge_id), None)
        self.layout.waypoints.pop((net_name, edge_id), None)

    def _sync_net_traces(self, net_name: str) -> list:
        """After a tree rewrite: drop state of edges that no longer exist,
        route edges that gained ids.  Surviving edge ids keep their traces."""
        net = self.schematic.nets.get(net_name)
        live = set(net.edges) if net is not None else set()
        for key in [k for k in self.layout.traces if k[0] == net_name]:
            if key[1] not in live:
                self._drop_edge_state(*key)
        if net is None:
            for key in [k for k in self.layout.junction_anchors
                        if k[0] == net_name]:
                del self.layout.junction_anchors[key]
            return []
        changed = []
        for edge_id in net.edges:
            if (net_name, edge_id) not in self.layout.traces:
                self.reroute_edge(net_name, edge_id)
                changed.append((net_name, edge_id))
        return changed

    # -- operations ---------------------------------------------------------------
    # Each _op_* returns (json_result, changed_edge_keys).

    def _op_add_part(self, part: str, part_id=None, pos=(0.0, 0.0)):
        part_def = PART_LIBRARY.get(part)
        if part_def is None:
            raise SchematicError(f"unknown part {part!r}")
        return self.schematic.add_part(part_def, part_id, tuple(pos)), []

    def _op_remove_part(self, part_id: str):
        deleted, changed_nets = self.schematic.remove_part(part_id)
        self.layout.placements.pop(part_id, None)
        self._pin_cache.pop(part_id, None)
        changed = []
        for name in deleted + changed_nets:
            changed += self._sync_net_traces(name)
        return {"deleted_nets": deleted, "changed_nets": changed_nets}, changed

    def _op_add_net(self, name: str, terminals, edges=None):
        net = self.schematic.add_net(name, terminals, edges)
        changed = []
        for edge_id in net.edges:
            self.reroute_edge(name, edge_id)
            changed.append((name, edge_id))
        return {"edges": sorted(net.edges)}, changed

    def _op_connect(self, terminal, net: str, attach_to=None):
        eid = self.schematic.connect(terminal, net, attach_to)
        self.reroute_edge(net, eid)
        return eid, [(net, eid)]

    def _op_add_junction(self, net: str, edge_id: int, pos=(0.0, 0.0)):
        old_trace = self.layout.traces.get((net, int(edge_id)))
        jid, (e1, e2) = self.schematic.add_junction(net, int(edge_id), pos)
        # default 3D anchor: middle sample of the trace being split, when
        # there is one to split
        if old_trace is not None and old_trace.routed:
            mid = old_trace.samples[len(old_trace.samples) // 2]
            self.layout.junction_anchors[(net, jid)] = mid
        self._drop_edge_state(net, int(edge_id))
        changed = []
        for eid in (e1, e2):
            self.reroute_edge(net, eid)
            changed.append((net, eid))
        return {"junction": jid, "edges": [e1, e2]}, changed

    def _op_delete_junction(self, net: str, junction_id: str):
        sch_net = self.schematic.net(net)
        stale = sch_net.edges_at(junction(junction_id))
        merged = self.schematic.delete_junction(net, junction_id)
        self.layout.junction_anchors.pop((net, junction_id), None)
        for eid in stale:
            self._drop_edge_state(net, eid)
        changed = []
        if merged is not None:
            self.reroute_edge(net, merged)
            changed.append((net, merged))
        if net not in self.schematic.nets:
            self._sync_net_traces(net)
        return merged, changed

    def _op_reconnect(self, net: str, remove_edge: int, a, b):
        eid = self.schematic.reconnect(net, int(remove_edge), a, b)
        self._drop_edge_state(net, int(remove_edge))
        self.reroute_edge(net, eid)
        return eid, [(net, eid)]

    def _place(self, part_id: str, placement: PartPlacement):
        # validate before committing so a failed placement changes nothing
        part = self.schematic.part(part_id)
        pts = pin_surface_points(self.mesh, placement, part.part)
        self.layout.placements[part_id] = placement
        self._pin_cache[part_id] = pts
        changed = []
        for net_name, edge_id in self.incident_edges(part_id):
            self.reroute_edge(net_name, edge_id)
            changed.append((net_name, edge_id))
        return None, changed

    def _op_place_part(self, part_id: str, anchor, rotation=0.0):
        sp = self.as_surface_point(anchor)
        return self._place(part_id, PartPlacement(sp, float(rotation)))

    def _op_drag_part(self, part_id: str, anchor):
        old = self.layout.placements.get(part_id)
        if old is None:
            raise PlacementError(f"part {part_id!r} is not placed yet")
        sp = self.as_surface_point(anchor)
        return self._place(part_id, PartPlacement(sp, old.rotation))

    def _op_rotate_part(self, part_id: str, rotation: float):
        old = self.layout.placements.get(part_id)
        if old is None:
            raise PlacementError(f"part {part_id!r} is not placed yet")
        return self._place(
            part_id, PartPlacement(old.anchor, wrap_rotation(float(rotation)))
        )

    def _op_set_junction_anchor(self, net: str, junction_id: str, anchor):
        sch_net = self.schematic.net(net)
        jterm = junction(junction_id)
        if jterm not in sch_net.terminals:
            raise SchematicError(f"net {net!r} has no junction {junction_id!r}")
        self.layout.junction_anchors[(net, junction_id)] = (
            self.as_surface_point(anchor)
        )
        changed = []
        for eid in sch_net.edges_at(jterm):
            self.reroute_edge(net, eid)
            changed.append((net, eid))
        return None, changed

    def _op_add_waypoint(self, net: str, edge_id: int, point, index=None):
        key = (net, int(edge_id))
        if key[1] not in self.schematic.net(net).edges:
            raise SchematicError(f"net {net!r} has no edge {edge_id}")
        sp = self.as_surface_point(point)
        wps = self.layout.waypoints.setdefault(key, [])
        idx = len(wps) if index is None else int(index)
        wps.insert(idx, sp)
        self.reroute_edge(*key)
        return idx, [key]

    def _op_delete_waypoint(self, net: str, edge_id: int, index: int):
        key = (net, int(edge_id))
        wps = self.layout.waypoints.get(key)
        if not wps or not 0 <= int(index) < len(wps):
            raise SchematicError(f"no waypoint {index} on edge {key}")
        wps.pop(int(index))
        if not wps:
            del self.layout.waypoints[key]
        self.reroute_edge(*key)
        return None, [key]

    def _op_set_clearance(self, value: float):
        value = float(value)
        if value <= 0:
            raise ValueError("clearance must be positive")
        self.layout.clearance = value
        return None, []

    _OPS = {
        "add_part": _op_add_part,
        "remove_part": _op_remove_part,
        "add_net": _op_add_net,
        "connect": _op_connect,
        "add_junction": _op_add_junction,
        "delete_junction": _op_delete_junction,
        "reconnect": _op_reconnect,
        "place_part": _op_place_part,
        "drag_part": _op_drag_part,
        "rotate_part": _op_rotate_part,
        "set_junction_anchor": _op_set_junction_anchor,
        "add_waypoint": _op_add_waypoint,
        "delete_waypoint": _op_delete_waypoint,
        "set_clearance": _op_set_clearance,
    }

    def apply(self, op: str, args: dict | None = None):
        """Run one named operation.

        Returns (result, changed, removed): the op's JSON-friendly result,
        the (net, edge_id) keys re-routed by this op, and the trace keys
        that stopped existing.  Failed ops leave the document unchanged.
        """
        fn = self._OPS.get(op)
        if fn is None:
            raise ValueError(f"unknown operation {op!r}")
        before = set(self.layout.traces)
        result, changed = fn(self, **(args or {}))
        removed = sorted(before - set(self.layout.traces))
        return result, sorted(changed), removed


def _merge_segments(segments) -> SurfacePolyline:
    """Concatenate routed legs, dropping each joint's duplicate sample."""
    samples = list(segments[0].samples)
    points = [segments[0].points]
    for seg in segments[1:]:
        samples.extend(seg.samples[1:])
        points.append(seg.points[1:])
    return SurfacePolyline(
        samples=samples,
        points=np.vstack(points),
        status=ROUTED,
        endpoints=(samples[0], samples[-1]),
    )


def replay(mesh: TriMesh, oplog, params: RoutingParams | None = None,
           profile: ChannelProfile | None = None) -> Document:
    """Rebuild a document by applying an edit log to a fresh one."""
    doc = Document(mesh, params=params, profile=profile)
    for entry in oplog:
        doc.apply(entry["op"], entry.get("args", {}))
    return doc
