import math

import numpy as np
import pytest

from meshwire.document import Document, replay
from meshwire.errors import PlacementError, SchematicError
from meshwire.geometry import SurfacePoint
from meshwire.routing import RoutingParams


def _place_args(mesh, xyz, rotation=0.0):
    sp = mesh.surface_point_near(xyz)
    return {"anchor": {"face": sp.face, "bary": list(sp.bary)}, "rotation": rotation}


@pytest.fixture
def doc(plane100):
    d = Document(plane100)
    d.apply("add_part", {"part": "resistor", "part_id": "R1"})
    d.apply("add_part", {"part": "resistor", "part_id": "R2"})
    d.apply("add_part", {"part": "resistor", "part_id": "R3"})
    d.apply(
        "add_net",
        {"name": "a", "terminals": [["pin", "R1", 1], ["pin", "R2", 0]]},
    )
    d.apply(
        "add_net",
        {"name": "b", "terminals": [["pin", "R2", 1], ["pin", "R3", 0]]},
    )
    d.apply("place_part", {"part_id": "R1", **_place_args(plane100, [-30, 0, 0])})
    d.apply("place_part", {"part_id": "R2", **_place_args(plane100, [0, 0, 0])})
    d.apply("place_part", {"part_id": "R3", **_place_args(plane100, [30, 0, 0])})
    return d


def test_unplaced_then_placed(plane100):
    d = Document(plane100)
    d.apply("add_part", {"part": "resistor", "part_id": "R1"})
    d.apply("add_part", {"part": "resistor", "part_id": "R2"})
    d.apply(
        "add_net",
        {"name": "a", "terminals": [["pin", "R1", 1], ["pin", "R2", 0]]},
    )
    t = d.layout.traces[("a", 0)]
    assert not t.routed and t.failure_reason == "unplaced"
    assert len(t.points) == 0

    d.apply("place_part", {"part_id": "R1", **_place_args(plane100, [-30, 0, 0])})
    t = d.layout.traces[("a", 0)]
    assert t.failure_reason == "unplaced"
    assert len(t.points) == 1  # one known anchor to annotate

    _, changed, removed = d.apply(
        "place_part", {"part_id": "R2", **_place_args(plane100, [30, 0, 0])}
    )
    assert changed == [("a", 0)] and removed == []
    assert d.layout.traces[("a", 0)].routed


def test_every_edge_has_a_trace(doc):
    for net_name, net in doc.schematic.nets.items():
        for eid in net.edges:
            assert (net_name, eid) in doc.layout.traces
    assert all(t.routed for t in doc.layout.traces.values())


def test_straight_trace_between_pins(doc, plane100):
    t = doc.layout.traces[("a", 0)]
    p0 = plane100.embed(doc.pin_points("R1")[1])
    p1 = plane100.embed(doc.pin_points("R2")[0])
    assert np.allclose(t.points[0], p0, atol=1e-9)
    assert np.allclose(t.points[-1], p1, atol=1e-9)
    assert t.length == pytest.approx(np.linalg.norm(p1 - p0), rel=1e-9)


def test_drag_locality(doc, plane100):
    # dragging R1 may only touch net "a"; net "b" keeps its very object
    before_b = doc.layout.traces[("b", 0)]
    before_a = doc.layout.traces[("a", 0)]
    _, changed, removed = doc.apply(
        "drag_part", {"part_id": "R1", **{"anchor": _place_args(plane100, [-30, 10, 0])["anchor"]}}
    )
    assert changed == [("a", 0)] and removed == []
    assert doc.layout.traces[("b", 0)] is before_b
    assert doc.layout.traces[("a", 0)] is not before_a
    assert doc.layout.traces[("a", 0)].routed


def test_drag_preserves_rotation(doc, plane100):
    doc.apply("rotate_part", {"part_id": "R1", "rotation": 1.0})
    doc.apply(
        "drag_part",
        {"part_id": "R1", "anchor": _place_args(plane100, [-25, 5, 0])["anchor"]},
    )
    assert doc.layout.placements["R1"].rotation == 1.0


def test_rotate_reroutes_incident_only(doc):
    before_b = doc.layout.traces[("b", 0)]
    _, changed, _ = doc.apply("rotate_part", {"part_id": "R1", "rotation": math.pi})
    assert changed == [("a", 0)]
    assert doc.layout.traces[("b", 0)] is before_b


def test_failed_placement_changes_nothing(doc, plane100):
    placement_before = doc.layout.placements["R1"]
    trace_before = doc.layout.traces[("a", 0)]
    with pytest.raises(PlacementError):
        doc.apply(
            "drag_part",
            {"part_id": "R1", "anchor": _place_args(plane100, [49.9, 0, 0])["anchor"]},
        )
    assert doc.layout.placements["R1"] is placement_before
    assert doc.layout.traces[("a", 0)] is trace_before


def test_remove_part_drops_layout_state(doc):
    _, changed, removed = doc.apply("remove_part", {"part_id": "R2"})
    # both nets lost their only edge terminal pair; each net had 2 terminals
    # so both nets die entirely
    assert doc.schematic.nets == {}
    assert doc.layout.traces == {}
    assert removed == [("a", 0), ("b", 0)]
    assert "R2" not in doc.layout.placements


def test_remove_mid_part_bridges(doc, plane100):
    # connect R2 pin0 into net "b" too, making b a 3-terminal net, then
    # remove R3: "b" keeps R2's pins bridged
    doc.apply(
        "connect", {"terminal": ["pin", "R1", 0], "net": "b", "attach_to": ["pin", "R3", 0]}
    )
    res, changed, removed = doc.apply("remove_part", {"part_id": "R3"})
    assert res["deleted_nets"] == []
    assert res["changed_nets"] == ["b"]
    net = doc.schematic.nets["b"]
    net.check_tree()
    for eid in net.edges:
        assert doc.layout.traces[("b", eid)].routed


def test_junction_split_inherits_midpoint(doc):
    t = doc.layout.traces[("a", 0)]
    mid = t.samples[len(t.samples) // 2]
    res, changed, removed = doc.apply("add_junction", {"net": "a", "edge_id": 0})
    jid = res["junction"]
    assert doc.layout.junction_anchors[("a", jid)] == mid
    assert removed == [("a", 0)]
    assert sorted(changed) == [("a", e) for e in sorted(res["edges"])]
    for eid in res["edges"]:
        assert doc.layout.traces[("a", eid)].routed
    # the two halves together span the old trace within a step of slack
    total = sum(doc.layout.traces[("a", e)].length for e in res["edges"])
    assert total == pytest.approx(t.length, abs=1.0)


def test_delete_junction_restores(doc):
    res, _, _ = doc.apply("add_junction", {"net": "a", "edge_id": 0})
    before = doc.layout.traces[("a", res["edges"][0])]
    merged, changed, removed = doc.apply(
        "delete_junction", {"net": "a", "junction_id": res["junction"]}
    )
    assert set(removed) == {("a", e) for e in res["edges"]}
    assert changed == [("a", merged)]
    assert doc.layout.traces[("a", merged)].routed
    assert ("a", res["junction"]) not in doc.layout.junction_anchors


def test_junction_net_routing(plane100):
    # nets made of junctions alone route once both ends get anchors
    d = Document(plane100)
    d.apply(
        "add_net",
        {"name": "n", "terminals": [["junction", "p"], ["junction", "q"]]},
    )
    assert d.layout.traces[("n", 0)].failure_reason == "unplaced"
    pa = plane100.surface_point_near([-10, 3, 0])
    qa = plane100.surface_point_near([25, -8, 0])
    d.apply(
        "set_junction_anchor",
        {"net": "n", "junction_id": "p", "anchor": {"face": pa.face, "bary": list(pa.bary)}},
    )
    _, changed, _ = d.apply(
        "set_junction_anchor",
        {"net": "n", "junction_id": "q", "anchor": {"face": qa.face, "bary": list(qa.bary)}},
    )
    assert changed == [("n", 0)]
    t = d.layout.traces[("n", 0)]
    assert t.routed
    assert t.length == pytest.approx(
        np.linalg.norm(plane100.embed(pa) - plane100.embed(qa)), rel=1e-6
    )


class TestWaypoints:
    def test_antipodal_fix(self, sphere50):
        m = sphere50
        anti = int(np.argmin(np.linalg.norm(m.vertices + m.vertices[0], axis=1)))
        f0 = int(np.nonzero((m.faces == 0).any(axis=1))[0][0])
        f1 = int(np.nonzero((m.faces == anti).any(axis=1))[0][0])
        p = SurfacePoint(f0, (m.faces[f0] == 0).astype(float))
        q = SurfacePoint(f1, (m.faces[f1] == anti).astype(float))

        d = Document(m)
        d.apply(
            "add_net",
            {"name": "n", "terminals": [["junction", "p"], ["junction", "q"]]},
        )
        d.apply("set_junction_anchor", {"net": "n", "junction_id": "p", "anchor": p})
        d.apply("set_junction_anchor", {"net": "n", "junction_id": "q", "anchor": q})
        t = d.layout.traces[("n", 0)]
        assert not t.routed and t.failure_reason == "degenerate"

        # one waypoint on the equator of the p-q axis
        axis = m.vertices[0] / np.linalg.norm(m.vertices[0])
        equ = np.cross(axis, [0.0, 0.0, 1.0])
        if np.linalg.norm(equ) < 1e-6:
            equ = np.cross(axis, [0.0, 1.0, 0.0])
        w = m.surface_point_near(50.0 * equ / np.linalg.norm(equ))
        d.apply("add_waypoint", {"net": "n", "edge_id": 0, "point": w})

        halves = d.route_edge_segments("n", 0)
        assert len(halves) == 2
        assert halves[0].routed  # p -> equator quarter arc
        assert halves[1].routed  # equator -> q quarter arc
        merged = d.layout.traces[("n", 0)]
        assert merged.routed
        # two quarter arcs: full half-circumference, within routing slack
        assert merged.length == pytest.approx(math.pi * 50.0, rel=0.02)

    def test_add_delete_waypoint_roundtrip(self, doc, plane100):
        before = doc.layout.traces[("a", 0)].length
        w = plane100.surface_point_near([-14, 9, 0])
        idx, _, _ = doc.apply("add_waypoint", {"net": "a", "edge_id": 0, "point": w})
        detour = doc.layout.traces[("a", 0)].length
        assert detour > before * 1.05
        doc.apply("delete_waypoint", {"net": "a", "edge_id": 0, "index": idx})
        after = doc.layout.traces[("a", 0)].length
        assert after == pytest.approx(before, rel=1e-6)

    def test_waypoint_on_trace_changes_little(self, sphere50):
        d = Document(sphere50)
        d.apply(
            "add_net",
            {"name": "n", "terminals": [["junction", "p"], ["junction", "q"]]},
        )
        p = sphere50.surface_point_near([0, -35, 35])
        q = sphere50.surface_point_near([0, 35, 35])
        d.apply("set_junction_anchor", {"net": "n", "junction_id": "p", "anchor": p})
        d.apply("set_junction_anchor", {"net": "n", "junction_id": "q", "anchor": q})
        t = d.layout.traces[("n", 0)]
        assert t.routed
        mid = t.samples[len(t.samples) // 2]
        d.apply("add_waypoint", {"net": "n", "edge_id": 0, "point": mid})
        t2 = d.layout.traces[("n", 0)]
        assert t2.routed
        assert abs(t2.length - t.length) / t.length < 0.01

    def test_waypoint_validation(self, doc):
        with pytest.raises(SchematicError):
            doc.apply(
                "add_waypoint",
                {"net": "a", "edge_id": 99, "point": {"face": 0, "bary": [1, 0, 0]}},
            )
        with pytest.raises(SchematicError):
            doc.apply("delete_waypoint", {"net": "a", "edge_id": 0, "index": 0})


def test_reconnect_reroutes(doc):
    doc.apply(
        "connect",
        {"terminal": ["pin", "R1", 0], "net": "b", "attach_to": ["pin", "R3", 0]},
    )
    net = doc.schematic.nets["b"]
    target = next(
        e for e, (x, y) in net.edges.items() if ("pin", "R1", 0) in (x, y)
    )
    eid, changed, removed = doc.apply(
        "reconnect",
        {
            "net": "b",
            "remove_edge": target,
            "a": ["pin", "R1", 0],
            "b": ["pin", "R2", 1],
        },
    )
    assert removed == [("b", target)]
    assert changed == [("b", eid)]
    assert doc.layout.traces[("b", eid)].routed


def test_set_clearance(doc):
    doc.apply("set_clearance", {"value": 2.5})
    assert doc.layout.clearance == 2.5
    with pytest.raises(ValueError):
        doc.apply("set_clearance", {"value": 0.0})
    with pytest.raises(ValueError):
        doc.apply("no_such_op", {})


def test_clearance_through_document(doc, plane100):
    # drag R3 across to the far side so net b's trace skims past R2's other
    # pad (net a territory) at ~0.12 mm
    doc.apply(
        "drag_part",
        {"part_id": "R3", "anchor": _place_args(plane100, [-10, 0.6, 0])["anchor"]},
    )
    violations = doc.check_clearance()
    assert violations
    assert all(v.distance < 1.0 for v in violations)
    doc.apply("set_clearance", {"value": 0.01})
    assert doc.check_clearance() == []


# -- replay -------------------------------------------------------------------


def _edit_log(mesh):
    def place(xyz, rotation=0.0):
        sp = mesh.surface_point_near(xyz)
        return {"face": sp.face, "bary": list(sp.bary)}, rotation

    a1, r1 = place([-30, 0, 0])
    a2, r2 = place([0, 0, 0], 0.5)
    a3, r3 = place([30, 0, 0])
    a3b, _ = place([28, -6, 0])
    w = mesh.surface_point_near([-12, 7, 0])
    return [
        {"op": "add_part", "args": {"part": "resistor", "part_id": "R1"}},
        {"op": "add_part", "args": {"part": "resistor", "part_id": "R2"}},
        {"op": "add_part", "args": {"part": "dip8", "part_id": "U1"}},
        {"op": "add_net", "args": {"name": "a", "terminals": [["pin", "R1", 1], ["pin", "R2", 0]]}},
        {"op": "add_net", "args": {"name": "b", "terminals": [["pin", "R2", 1], ["pin", "U1", 0], ["pin", "U1", 7]]}},
        {"op": "place_part", "args": {"part_id": "R1", "anchor": a1, "rotation": r1}},
        {"op": "place_part", "args": {"part_id": "R2", "anchor": a2, "rotation": r2}},
        {"op": "place_part", "args": {"part_id": "U1", "anchor": a3, "rotation": r3}},
        {"op": "rotate_part", "args": {"part_id": "R1", "rotation": 1.25}},
        {"op": "add_junction", "args": {"net": "b", "edge_id": 0}},
        {"op": "add_waypoint", "args": {"net": "a", "edge_id": 0, "point": {"face": w.face, "bary": list(w.bary)}}},
        {"op": "connect", "args": {"terminal": ["pin", "U1", 3], "net": "a", "attach_to": ["pin", "R1", 1]}},
        {"op": "drag_part", "args": {"part_id": "U1", "anchor": a3b}},
        {"op": "delete_waypoint", "args": {"net": "a", "edge_id": 0, "index": 0}},
        {"op": "remove_part", "args": {"part_id": "R2"}},
        {"op": "set_clearance", "args": {"value": 1.5}},
    ]


def test_replay_equivalence(plane100):
    log = _edit_log(plane100)
    live = Document(plane100)
    for entry in log:
        live.apply(entry["op"], entry["args"])
    again = replay(plane100, log)

    assert sorted(live.layout.traces) == sorted(again.layout.traces)
    for key, t in live.layout.traces.items():
        u = again.layout.traces[key]
        assert t.status == u.status
        assert t.failure_reason == u.failure_reason
        np.testing.assert_array_equal(t.points, u.points)
    assert live.layout.placements.keys() == again.layout.placements.keys()
    for pid, pl in live.layout.placements.items():
        assert pl.rotation == again.layout.placements[pid].rotation
        assert pl.anchor == again.layout.placements[pid].anchor
    assert live.layout.clearance == again.layout.clearance


def test_replay_twice_is_bitwise_stable(plane100):
    log = _edit_log(plane100)
    one = replay(plane100, log)
    two = replay(plane100, log)
    for key, t in one.layout.traces.items():
        np.testing.assert_array_equal(t.points, two.layout.traces[key].points)
