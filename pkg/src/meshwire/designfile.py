"""Design file I/O: the whole editable state of a board as one JSON document.

A design file stands alone except for the mesh, which stays in its own
STL/OBJ file and is referenced by (usually relative) path.  Everything
else is inlined: part definitions, net trees with their edge ids and id
counters, placements, waypoints, clearance, routing knobs, and the last
computed traces.  Counters are stored verbatim so ids handed out after a
reload never collide with ids already in the file.

Serialization is deterministic: keys are sorted, floats use repr (which
round-trips doubles exactly), and saving a freshly loaded document
reproduces the input byte for byte.  Trace samples are stored as flat
``[face, b0, b1, b2]`` rows; their 3D embeddings are re-derived on load
rather than stored.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .document import Document
from .engrave import ChannelProfile
from .errors import DesignError, SchematicError
from .geometry import SurfacePoint, TriMesh
from .layout import PartPlacement
from .meshio import load_mesh
from .routing import FAILED, ROUTED, RoutingParams, SurfacePolyline
from .schematic import (
    Footprint,
    Net,
    PartDef,
    PartInstance,
    PinDef,
    Schematic,
    junction,
    normalize_terminal,
)

FORMAT_VERSION = 1

_PROFILE_FIELDS = (
    "channel_width",
    "channel_depth",
    "hole_diameter",
    "hole_depth",
    "falloff_width",
)


# -- writing -------------------------------------------------------------------


def design_to_dict(doc: Document, mesh_ref: str) -> dict:
    sch = doc.schematic
    layout = doc.layout
    p = doc.params

    junction_anchors: dict = {}
    for (net_name, jid), sp in layout.junction_anchors.items():
        junction_anchors.setdefault(net_name, {})[jid] = _point_obj(sp)
    waypoints: dict = {}
    for (net_name, eid), pts in layout.waypoints.items():
        waypoints.setdefault(net_name, {})[str(int(eid))] = [
            _point_obj(sp) for sp in pts
        ]
    routes: dict = {}
    for (net_name, eid), trace in layout.traces.items():
        routes.setdefault(net_name, {})[str(int(eid))] = _trace_obj(trace)

    return {
        "version": FORMAT_VERSION,
        "mesh": str(mesh_ref),
        "params": {
            "step_length": float(p.step_length),
            "max_steps": int(p.max_steps),
            "meet_tolerance": (
                None if p.meet_tolerance is None else float(p.meet_tolerance)
            ),
            "degeneracy_threshold": float(p.degeneracy_threshold),
        },
        "profile": {f: float(getattr(doc.profile, f)) for f in _PROFILE_FIELDS},
        "schematic": {
            "part_counter": int(sch._part_counter),
            # parts and nets are arrays, not objects: the file keeps the
            # document's insertion order while sort_keys reorders object keys
            "parts": [
                {
                    "id": inst.id,
                    "pos": [float(inst.pos[0]), float(inst.pos[1])],
                    "def": _partdef_obj(inst.part),
                }
                for inst in sch.parts.values()
            ],
            "nets": [_net_obj(net) for net in sch.nets.values()],
        },
        "layout": {
            "clearance": float(layout.clearance),
            "placements": {
                pid: {
                    "anchor": _point_obj(pl.anchor),
                    "rotation": float(pl.rotation),
                }
                for pid, pl in layout.placements.items()
            },
            "junction_anchors": junction_anchors,
            "waypoints": waypoints,
        },
        "routes": routes,
    }


def _point_obj(sp: SurfacePoint) -> dict:
    return {"face": int(sp.face), "bary": [float(b) for b in sp.bary]}


def _sample_row(sp: SurfacePoint) -> list:
    return [int(sp.face)] + [float(b) for b in sp.bary]


def _partdef_obj(pd: PartDef) -> dict:
    return {
        "name": pd.name,
        "pins": [{"name": pin.name, "role": pin.role} for pin in pd.pins],
        "footprint": {
            "offsets": [[float(x), float(y)] for x, y in pd.footprint.offsets],
            "drill_diameter": float(pd.footprint.drill_diameter),
        },
    }


def _net_obj(net: Net) -> dict:
    return {
        "name": net.name,
        "terminals": [list(t) for t in net.terminals],
        # edge order matters: tree-healing edits chain neighbors in
        # edges.values() order, so a reloaded net must iterate identically
        "edges": [
            [int(eid), list(a), list(b)] for eid, (a, b) in net.edges.items()
        ],
        "junction_pos": {
            jid: [float(x), float(y)] for jid, (x, y) in net.junction_pos.items()
        },
        "next_edge": int(net._next_edge),
        "next_junction": int(net._next_junction),
    }


def _trace_obj(trace: SurfacePolyline) -> dict:
    return {
        "status": trace.status,
        "failure_reason": trace.failure_reason,
        "samples": [_sample_row(sp) for sp in trace.samples],
        "endpoints": (
            None
            if trace.endpoints is None
            else [_sample_row(sp) for sp in trace.endpoints]
        ),
    }


def dumps_design(doc: Document, mesh_ref: str) -> str:
    return json.dumps(design_to_dict(doc, mesh_ref), sort_keys=True, indent=2) + "\n"


def save_design(path, doc: Document, mesh_ref: str):
    Path(path).write_text(dumps_design(doc, mesh_ref), encoding="utf-8")


# -- reading -------------------------------------------------------------------


def _need(obj, key: str, where: str):
    try:
        return obj[key]
    except (KeyError, TypeError, IndexError):
        raise DesignError(f"{where}: missing {key!r}") from None


def design_from_dict(data, mesh: TriMesh) -> Document:
    if not isinstance(data, dict):
        raise DesignError("design root must be a JSON object")
    version = _need(data, "version", "design")
    if version != FORMAT_VERSION:
        raise DesignError(
            f"design format version {version!r} not supported"
            f" (this reader handles {FORMAT_VERSION})"
        )
    params = _params_from(_need(data, "params", "design"))
    profile = _profile_from(_need(data, "profile", "design"))
    schematic = _schematic_from(_need(data, "schematic", "design"))
    doc = Document(mesh, schematic=schematic, params=params, profile=profile)
    _layout_into(doc, _need(data, "layout", "design"), mesh)
    _routes_into(doc, data.get("routes", {}), mesh)
    return doc


def _params_from(obj) -> RoutingParams:
    mt = obj.get("meet_tolerance") if isinstance(obj, dict) else None
    try:
        return RoutingParams(
            step_length=float(_need(obj, "step_length", "params")),
            max_steps=int(_need(obj, "max_steps", "params")),
            meet_tolerance=None if mt is None else float(mt),
            degeneracy_threshold=float(
                _need(obj, "degeneracy_threshold", "params")
            ),
        )
    except DesignError:
        raise
    except (TypeError, ValueError) as e:
        raise DesignError(f"params: {e}") from None


def _profile_from(obj) -> ChannelProfile:
    try:
        return ChannelProfile(
            **{f: float(_need(obj, f, "profile")) for f in _PROFILE_FIELDS}
        )
    except DesignError:
        raise
    except (TypeError, ValueError) as e:
        raise DesignError(f"profile: {e}") from None


def _schematic_from(obj) -> Schematic:
    sch = Schematic()
    for entry in _need(obj, "parts", "schematic"):
        pid = str(_need(entry, "id", "part"))
        where = f"part {pid!r}"
        if pid in sch.parts:
            raise DesignError(f"{where}: duplicate id")
        part_def = _partdef_from(_need(entry, "def", where), where)
        pos = entry.get("pos", (0.0, 0.0))
        try:
            sch.parts[pid] = PartInstance(
                pid, part_def, (float(pos[0]), float(pos[1]))
            )
        except (TypeError, ValueError, IndexError) as e:
            raise DesignError(f"{where}: bad sheet position ({e})") from None
    try:
        sch._part_counter = int(_need(obj, "part_counter", "schematic"))
    except (TypeError, ValueError) as e:
        raise DesignError(f"schematic: bad part_counter ({e})") from None
    for entry in _need(obj, "nets", "schematic"):
        _net_into(sch, entry)
    return sch


def _partdef_from(obj, where: str) -> PartDef:
    try:
        pins = tuple(
            PinDef(str(p["name"]), str(p.get("role", "io")))
            for p in _need(obj, "pins", where)
        )
        fp = _need(obj, "footprint", where)
        footprint = Footprint(
            tuple((x, y) for x, y in _need(fp, "offsets", where)),
            float(fp.get("drill_diameter", 1.7)),
        )
        return PartDef(str(_need(obj, "name", where)), pins, footprint)
    except DesignError:
        raise
    except KeyError as e:
        raise DesignError(f"{where}: missing {e.args[0]!r}") from None
    except (TypeError, ValueError) as e:
        raise DesignError(f"{where}: {e}") from None


def _net_into(sch: Schematic, entry):
    name = str(_need(entry, "name", "net"))
    where = f"net {name!r}"
    if name in sch.nets:
        raise DesignError(f"{where}: duplicate name")
    net = Net(name)
    try:
        net.terminals = [
            normalize_terminal(t) for t in _need(entry, "terminals", where)
        ]
        for eid, a, b in _need(entry, "edges", where):
            eid = int(eid)
            if eid in net.edges:
                raise DesignError(f"{where}: duplicate edge id {eid}")
            net.edges[eid] = (normalize_terminal(a), normalize_terminal(b))
        net.junction_pos = {
            str(jid): (float(x), float(y))
            for jid, (x, y) in _need(entry, "junction_pos", where).items()
        }
        net._next_edge = int(_need(entry, "next_edge", where))
        net._next_junction = int(_need(entry, "next_junction", where))
    except DesignError:
        raise
    except (TypeError, ValueError) as e:
        raise DesignError(f"{where}: {e}") from None
    if net.edges and net._next_edge <= max(net.edges):
        raise DesignError(
            f"{where}: next_edge {net._next_edge} collides with"
            f" edge id {max(net.edges)}"
        )
    try:
        net.check_tree()
        for t in net.terminals:
            if t[0] == "pin":
                owner = sch.net_of_pin(t)
                if owner is not None:
                    raise SchematicError(
                        f"pin {t} is already on net {owner!r}"
                    )
                sch._check_terminal_exists(t)
    except SchematicError as e:
        raise DesignError(f"{where}: {e}") from None
    sch.nets[name] = net


def _point_from(obj, mesh: TriMesh, where: str) -> SurfacePoint:
    try:
        sp = SurfacePoint(int(_need(obj, "face", where)), _need(obj, "bary", where))
    except DesignError:
        raise
    except (TypeError, ValueError) as e:
        raise DesignError(f"{where}: bad surface point ({e})") from None
    return _checked(sp, mesh, where)


def _sample_from(row, mesh: TriMesh, where: str) -> SurfacePoint:
    try:
        face, b0, b1, b2 = row
        sp = SurfacePoint(int(face), (float(b0), float(b1), float(b2)))
    except (TypeError, ValueError) as e:
        raise DesignError(f"{where}: bad sample row ({e})") from None
    return _checked(sp, mesh, where)


def _checked(sp: SurfacePoint, mesh: TriMesh, where: str) -> SurfacePoint:
    try:
        mesh.check_point(sp)
    except ValueError as e:
        raise DesignError(f"{where}: {e}") from None
    return sp


def _layout_into(doc: Document, obj, mesh: TriMesh):
    layout = doc.layout
    try:
        layout.clearance = float(_need(obj, "clearance", "layout"))
    except DesignError:
        raise
    except (TypeError, ValueError) as e:
        raise DesignError(f"layout: bad clearance ({e})") from None
    if layout.clearance <= 0:
        raise DesignError("layout: clearance must be positive")

    for pid, pl in _need(obj, "placements", "layout").items():
        where = f"placement of {pid!r}"
        if pid not in doc.schematic.parts:
            raise DesignError(f"{where}: no such part")
        anchor = _point_from(_need(pl, "anchor", where), mesh, where)
        try:
            rotation = float(_need(pl, "rotation", where))
        except DesignError:
            raise
        except (TypeError, ValueError) as e:
            raise DesignError(f"{where}: bad rotation ({e})") from None
        layout.placements[pid] = PartPlacement(anchor, rotation)

    for net_name, anchors in _need(obj, "junction_anchors", "layout").items():
        net = doc.schematic.nets.get(net_name)
        for jid, pt in anchors.items():
            where = f"junction anchor {net_name}/{jid}"
            if net is None or junction(jid) not in net.terminals:
                raise DesignError(f"{where}: no such junction")
            layout.junction_anchors[(net_name, str(jid))] = _point_from(
                pt, mesh, where
            )

    for net_name, by_edge in _need(obj, "waypoints", "layout").items():
        net = doc.schematic.nets.get(net_name)
        for eid_s, pts in by_edge.items():
            where = f"waypoints on {net_name}#{eid_s}"
            eid = _edge_id(eid_s, net, where)
            layout.waypoints[(net_name, eid)] = [
                _point_from(p, mesh, where) for p in pts
            ]


def _edge_id(eid_s, net, where: str) -> int:
    try:
        eid = int(eid_s)
    except (TypeError, ValueError):
        raise DesignError(f"{where}: edge ids must be integers") from None
    if net is None or eid not in net.edges:
        raise DesignError(f"{where}: no such edge")
    return eid


def _routes_into(doc: Document, obj, mesh: TriMesh):
    for net_name, by_edge in obj.items():
        net = doc.schematic.nets.get(net_name)
        for eid_s, rec in by_edge.items():
            where = f"route {net_name}#{eid_s}"
            eid = _edge_id(eid_s, net, where)
            doc.layout.traces[(net_name, eid)] = _trace_from(rec, mesh, where)


def _trace_from(rec, mesh: TriMesh, where: str) -> SurfacePolyline:
    status = _need(rec, "status", where)
    if status not in (ROUTED, FAILED):
        raise DesignError(f"{where}: unknown status {status!r}")
    reason = rec.get("failure_reason")
    if status == FAILED and reason is None:
        raise DesignError(f"{where}: failed trace needs a failure_reason")
    samples = [
        _sample_from(row, mesh, where) for row in _need(rec, "samples", where)
    ]
    ends = rec.get("endpoints")
    endpoints = None
    if ends is not None:
        if len(ends) != 2:
            raise DesignError(f"{where}: endpoints must be a pair")
        endpoints = tuple(_sample_from(r, mesh, where) for r in ends)
    if status == ROUTED:
        if len(samples) < 2:
            raise DesignError(f"{where}: a routed trace needs at least 2 samples")
        if endpoints is None:
            endpoints = (samples[0], samples[-1])
    points = mesh.embed_many(samples) if samples else np.zeros((0, 3))
    return SurfacePolyline(
        samples=samples,
        points=points,
        status=status,
        endpoints=endpoints,
        failure_reason=reason,
    )


def load_design(path, mesh: TriMesh | None = None):
    """Read a design file; returns (document, mesh_ref).

    When ``mesh`` is None the referenced mesh file is loaded, resolved
    relative to the design file's directory (absolute references stay
    absolute).  Pass a mesh to skip that and bind the design to it.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise DesignError(f"cannot read {path}: {e}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise DesignError(f"{path}: not valid JSON ({e})") from None
    if not isinstance(data, dict):
        raise DesignError("design root must be a JSON object")
    mesh_ref = _need(data, "mesh", "design")
    if not isinstance(mesh_ref, str):
        raise DesignError("design: mesh reference must be a string")
    if mesh is None:
        mesh_path = Path(mesh_ref)
        if not mesh_path.is_absolute():
            mesh_path = path.parent / mesh_path
        try:
            mesh = load_mesh(mesh_path)
        except OSError as e:
            raise DesignError(f"cannot read mesh {mesh_path}: {e}") from None
    return design_from_dict(data, mesh), mesh_ref
