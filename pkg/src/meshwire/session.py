"""Live editing session: one authoritative document behind a message API.

Every frame on the wire is one JSON object.
  request:  {"id": n, "type": <name>, ...}
  reply:    {"id": n, "ok": true, "result": ...}
            {"id": n, "ok": false, "error": {"kind": ..., "message": ...}}
  push:     {"type": "traces", "changed": [trace...], "removed": [[net, edge]...]}
            {"type": "highlight", "target": ...}

Request types are the document operation names (``add_part``,
``drag_part``, ... with their arguments under "args") plus the session
built-ins: snapshot, mesh, select, route_all, clearance, report, export,
ping.  Edit replies list the re-routed edge keys; the matching ``traces``
push carries the new polylines, and nothing else, so a client repaints
exactly what changed.

:class:`SessionHost` is transport-free (handle one dict, get the reply
and pushes back); :func:`serve_forever` puts it behind a local websocket.
A bad frame gets an error reply and the session carries on.
"""

from __future__ import annotations

import base64
import json

from .document import Document
from .electrical import NAMED_CONDUCTORS, design_report
from .engrave import validate_printable
from .layout import export_valid
from .meshio import save_mesh


class SessionHost:
    def __init__(self, doc: Document, mesh_ref: str = ""):
        self.doc = doc
        self.mesh_ref = mesh_ref

    # -- one message in, reply plus pushes out ---------------------------------

    def handle(self, message) -> tuple:
        """Returns (reply, notifications) for one decoded frame."""
        mid = message.get("id") if isinstance(message, dict) else None
        if not isinstance(message, dict) or not isinstance(
            message.get("type"), str
        ):
            return _err(mid, "malformed", "frame must be an object with a string 'type'"), []
        kind = message["type"]
        if kind in Document._OPS:
            return self._edit(mid, kind, message.get("args") or {})
        builtin = getattr(self, f"_msg_{kind}", None)
        if builtin is None:
            return _err(mid, "unknown_type", f"no such message type {kind!r}"), []
        try:
            return builtin(mid, message)
        except (ValueError, KeyError, TypeError) as e:
            return _err(mid, type(e).__name__, str(e)), []

    def _edit(self, mid, op: str, args):
        if not isinstance(args, dict):
            return _err(mid, "malformed", "'args' must be an object"), []
        try:
            result, changed, removed = self.doc.apply(op, args)
        except (ValueError, TypeError, KeyError) as e:
            return _err(mid, type(e).__name__, str(e)), []
        reply = {
            "id": mid,
            "ok": True,
            "result": result,
            "changed": [list(k) for k in changed],
            "removed": [list(k) for k in removed],
        }
        notes = []
        if changed or removed:
            notes.append(
                {
                    "type": "traces",
                    "changed": [self._trace_record(k) for k in changed],
                    "removed": [list(k) for k in removed],
                }
            )
        return reply, notes

    # -- built-ins ---------------------------------------------------------------

    def _msg_ping(self, mid, message):
        return {"id": mid, "ok": True, "result": "pong"}, []

    def _msg_snapshot(self, mid, message):
        return {"id": mid, "ok": True, "result": self.snapshot()}, []

    def _msg_mesh(self, mid, message):
        m = self.doc.mesh
        result = {
            "vertices": m.vertices.tolist(),
            "faces": m.faces.tolist(),
        }
        return {"id": mid, "ok": True, "result": result}, []

    def _msg_select(self, mid, message):
        target = message.get("target")
        err = self._bad_target(target)
        if err:
            return _err(mid, "bad_target", err), []
        return (
            {"id": mid, "ok": True, "result": None},
            [{"type": "highlight", "target": target}],
        )

    def _bad_target(self, target):
        if target is None:
            return None  # clearing the selection is always fine
        if not isinstance(target, dict) or "kind" not in target:
            return "target must be null or an object with 'kind'"
        kind = target["kind"]
        if kind == "part":
            if target.get("part") not in self.doc.schematic.parts:
                return f"no part {target.get('part')!r}"
        elif kind in ("net", "trace"):
            net = self.doc.schematic.nets.get(target.get("net"))
            if net is None:
                return f"no net {target.get('net')!r}"
            if kind == "trace" and target.get("edge") not in net.edges:
                return f"no edge {target.get('edge')!r} on net {target.get('net')!r}"
        else:
            return f"unknown target kind {kind!r}"
        return None

    def _msg_route_all(self, mid, message):
        changed = self.doc.route_all()
        reply = {
            "id": mid,
            "ok": True,
            "result": {"changed": [list(k) for k in changed]},
        }
        note = {
            "type": "traces",
            "changed": [self._trace_record(k) for k in changed],
            "removed": [],
        }
        return reply, [note]

    def _msg_clearance(self, mid, message):
        rows = [
            {
                "a": list(v.a),
                "b": list(v.b),
                "distance": v.distance,
                "point_a": list(v.point_a),
                "point_b": list(v.point_b),
            }
            for v in self.doc.check_clearance()
        ]
        return {"id": mid, "ok": True, "result": rows}, []

    def _msg_report(self, mid, message):
        name = message.get("conductor", "copper_tape")
        spec = NAMED_CONDUCTORS.get(name)
        if spec is None:
            return _err(mid, "bad_conductor", f"no conductor {name!r}"), []
        current_a = float(message.get("current_ma", 2.0)) / 1000.0
        rep = design_report(self.doc, spec, current_a)
        result = {
            "rows": [
                {
                    "net": r.net,
                    "edge": r.edge,
                    "length_mm": r.length_mm,
                    "resistance_ohm": r.resistance_ohm,
                    "drop_v": r.drop_v,
                    "routed": r.routed,
                }
                for r in rep.rows
            ],
            "total_length_mm": rep.total_length_mm,
            "worst_drop_v": rep.worst_drop_v,
            "text": rep.format_text(),
        }
        return {"id": mid, "ok": True, "result": result}, []

    def _msg_export(self, mid, message):
        violations = self.doc.check_clearance()
        if not export_valid(self.doc.layout, violations) and not message.get(
            "force"
        ):
            failed = [
                list(k) for k, t in self.doc.traces_sorted() if not t.routed
            ]
            return (
                _err(
                    mid,
                    "export_invalid",
                    f"{len(failed)} failed traces,"
                    f" {len(violations)} clearance violations",
                    failed_edges=failed,
                ),
                [],
            )
        mesh, holes = self.doc.build_printable()
        report = validate_printable(mesh)
        result = {
            "stl_base64": base64.b64encode(save_mesh(mesh)).decode("ascii"),
            "holes": holes,
            "report": {
                "ok": report.ok,
                "watertight": report.watertight,
                "boundary_edge_count": report.boundary_edge_count,
                "nonmanifold_edge_count": report.nonmanifold_edge_count,
                "mixed_winding_count": report.mixed_winding_count,
                "signed_volume": report.signed_volume,
                "self_intersection_count": report.self_intersection_count,
                "text": report.format_text(),
            },
        }
        return {"id": mid, "ok": True, "result": result}, []

    # -- state serialization -------------------------------------------------------

    def _trace_record(self, key) -> dict:
        net_name, eid = key
        t = self.doc.layout.traces.get((net_name, eid))
        if t is None:
            return {"net": net_name, "edge": eid, "status": None}
        return {
            "net": net_name,
            "edge": eid,
            "status": t.status,
            "failure_reason": t.failure_reason,
            "length_mm": t.length if t.routed else None,
            "points": t.points.tolist(),
        }

    def snapshot(self) -> dict:
        doc = self.doc
        parts = []
        for pid, inst in doc.schematic.parts.items():
            row = {
                "id": pid,
                "name": inst.part.name,
                "pins": [{"name": p.name, "role": p.role} for p in inst.part.pins],
                "offsets": [list(o) for o in inst.part.footprint.offsets],
                "drill_diameter": inst.part.footprint.drill_diameter,
                "pos": list(inst.pos),
                "placement": None,
            }
            pl = doc.layout.placements.get(pid)
            if pl is not None:
                row["placement"] = {
                    "anchor": _point_json(pl.anchor),
                    "anchor_xyz": doc.mesh.embed(pl.anchor).tolist(),
                    "rotation": pl.rotation,
                    "pin_xyz": [
                        doc.mesh.embed(sp).tolist() for sp in doc.pin_points(pid)
                    ],
                }
            parts.append(row)
        nets = []
        for name, net in doc.schematic.nets.items():
            anchors = {}
            for (net_name, jid), sp in doc.layout.junction_anchors.items():
                if net_name == name:
                    anchors[jid] = dict(
                        _point_json(sp), xyz=doc.mesh.embed(sp).tolist()
                    )
            nets.append(
                {
                    "name": name,
                    "terminals": [list(t) for t in net.terminals],
                    "edges": [
                        [eid, list(a), list(b)]
                        for eid, (a, b) in net.edges.items()
                    ],
                    "junction_pos": {
                        j: list(xy) for j, xy in net.junction_pos.items()
                    },
                    "junction_anchors": anchors,
                }
            )
        waypoints = {}
        for (net_name, eid), pts in doc.layout.waypoints.items():
            waypoints.setdefault(net_name, {})[str(eid)] = [
                _point_json(p) for p in pts
            ]
        return {
            "mesh_ref": self.mesh_ref,
            "clearance": doc.layout.clearance,
            "parts": parts,
            "nets": nets,
            "waypoints": waypoints,
            "traces": [self._trace_record(k) for k in sorted(doc.layout.traces)],
        }


def _point_json(sp) -> dict:
    return {"face": int(sp.face), "bary": [float(b) for b in sp.bary]}


def _err(mid, kind: str, message: str, **extra) -> dict:
    return {"id": mid, "ok": False, "error": dict(extra, kind=kind, message=message)}


# -- websocket transport ---------------------------------------------------------


async def serve_session(doc: Document, port: int = 8765, mesh_ref: str = ""):
    """Run the websocket host until cancelled; prints the bound address."""
    import asyncio

    from websockets.asyncio.server import serve

    host = SessionHost(doc, mesh_ref)
    clients = set()

    async def handler(ws):
        clients.add(ws)
        try:
            async for raw in ws:
                try:
                    msg = json.loads(raw)
                except json.JSONDecodeError as e:
                    await ws.send(
                        json.dumps(_err(None, "parse", f"bad JSON: {e}"))
                    )
                    continue
                reply, notes = host.handle(msg)
                await ws.send(json.dumps(reply, sort_keys=True))
                for note in notes:
                    frame = json.dumps(note, sort_keys=True)
                    for peer in list(clients):
                        try:
                            await peer.send(frame)
                        except Exception:
                            clients.discard(peer)
        finally:
            clients.discard(ws)

    async with serve(handler, "127.0.0.1", port) as server:
        bound = server.sockets[0].getsockname()[1]
        print(f"listening on ws://127.0.0.1:{bound}", flush=True)
        await asyncio.get_running_loop().create_future()


def serve_forever(doc: Document, port: int = 8765, mesh_ref: str = ""):
    import asyncio

    try:
        asyncio.run(serve_session(doc, port, mesh_ref))
    except KeyboardInterrupt:
        pass
