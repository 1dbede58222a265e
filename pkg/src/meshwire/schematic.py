"""Schematic model: parts, pins, and nets.

A net is stored as a spanning tree over its terminals (pins and named
junctions): connected, acyclic, exactly ``len(terminals) - 1`` edges.
Each tree edge is one physical trace on the surface, so the wiring a net
needs is explicit and editable, not implied.

Terminals are value tuples: ``("pin", part_id, pin_index)`` or
``("junction", junction_id)``.  Edges carry terminal values (not indices)
and have stable per-net integer ids so layout data keyed by edge survives
unrelated edits.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import SchematicError

PIN_PITCH = 2.54  # mm, 1/10 inch: the usual through-hole pin interval


@dataclass(frozen=True)
class PinDef:
    name: str
    role: str = "io"


@dataclass(frozen=True)
class Footprint:
    """Flat pin pattern: xy offsets (mm) in part-local coordinates, plus the
    drill diameter its pins need."""

    offsets: tuple  # ((x, y), ...) mm
    drill_diameter: float = 1.7

    def __post_init__(self):
        object.__setattr__(
            self, "offsets", tuple((float(x), float(y)) for x, y in self.offsets)
        )
        if self.drill_diameter >= PIN_PITCH:
            raise SchematicError(
                f"drill diameter {self.drill_diameter} must stay under the"
                f" {PIN_PITCH} mm pin pitch"
            )
        pts = np.array(self.offsets, dtype=float)
        for i in range(len(pts)):
            for j in range(i + 1, len(pts)):
                d = float(np.hypot(*(pts[i] - pts[j])))
                if d < PIN_PITCH - 1e-9:
                    raise SchematicError(
                        f"pins {i} and {j} are {d:.3f} mm apart;"
                        f" minimum is {PIN_PITCH} mm"
                    )


@dataclass(frozen=True)
class PartDef:
    name: str
    pins: tuple  # (PinDef, ...)
    footprint: Footprint

    def __post_init__(self):
        object.__setattr__(self, "pins", tuple(self.pins))
        if len(self.pins) < 1:
            raise SchematicError("a part needs at least one pin")
        if len(self.pins) != len(self.footprint.offsets):
            raise SchematicError(
                f"{self.name}: {len(self.pins)} pins but"
                f" {len(self.footprint.offsets)} footprint offsets"
            )


@dataclass
class PartInstance:
    id: str
    part: PartDef
    pos: tuple = (0.0, 0.0)  # schematic-sheet position, cosmetic


def pin(part_id: str, index: int) -> tuple:
    return ("pin", part_id, int(index))


def junction(jid: str) -> tuple:
    return ("junction", jid)


def normalize_terminal(t) -> tuple:
    t = tuple(t)
    if len(t) == 3 and t[0] == "pin":
        return ("pin", str(t[1]), int(t[2]))
    if len(t) == 2 and t[0] == "junction":
        return ("junction", str(t[1]))
    raise SchematicError(f"malformed terminal {t!r}")


class Net:
    def __init__(self, name: str):
        self.name = name
        self.terminals: list = []
        self.edges: dict = {}  # edge_id -> (terminal, terminal)
        self.junction_pos: dict = {}  # junction_id -> (x, y) on the sheet
        self._next_edge = 0
        self._next_junction = 0

    # -- bookkeeping -----------------------------------------------------------

    def new_edge(self, a, b) -> int:
        eid = self._next_edge
        self._next_edge += 1
        self.edges[eid] = (a, b)
        return eid

    def new_junction_id(self) -> str:
        self._next_junction += 1
        return f"j{self._next_junction}"

    def degree(self, term) -> int:
        return sum(1 for a, b in self.edges.values() if a == term or b == term)

    def neighbors(self, term) -> list:
        out = []
        for a, b in self.edges.values():
            if a == term:
                out.append(b)
            elif b == term:
                out.append(a)
        return out

    def edges_at(self, term) -> list:
        return [e for e, (a, b) in self.edges.items() if a == term or b == term]

    # -- validation --------------------------------------------------------------

    def check_tree(self):
        """Spanning-tree invariant: connected, acyclic, |E| = |T| - 1."""
        terms = self.terminals
        if len(set(terms)) != len(terms):
            raise SchematicError(f"net {self.name}: duplicate terminals")
        if len(terms) < 2:
            raise SchematicError(f"net {self.name}: needs at least 2 terminals")
        if len(self.edges) != len(terms) - 1:
            raise SchematicError(
                f"net {self.name}: {len(self.edges)} edges for"
                f" {len(terms)} terminals (tree needs {len(terms) - 1})"
            )
        parent = {t: t for t in terms}

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for a, b in self.edges.values():
            if a not in parent or b not in parent:
                raise SchematicError(
                    f"net {self.name}: edge references unknown terminal"
                )
            ra, rb = find(a), find(b)
            if ra == rb:
                raise SchematicError(f"net {self.name}: edges form a cycle")
            parent[ra] = rb
        roots = {find(t) for t in terms}
        if len(roots) != 1:
            raise SchematicError(f"net {self.name}: terminals are disconnected")


class Schematic:
    """Parts plus nets; all mutations keep every net a valid spanning tree."""

    def __init__(self):
        self.parts: dict = {}  # part_id -> PartInstance (insertion order kept)
        self.nets: dict = {}  # name -> Net
        self._part_counter = 0

    # -- lookups -----------------------------------------------------------------

    def net_of_pin(self, term) -> str | None:
        for name, net in self.nets.items():
            if term in net.terminals:
                return name
        return None

    def part(self, part_id: str) -> PartInstance:
        try:
            return self.parts[part_id]
        except KeyError:
            raise SchematicError(f"no part {part_id!r}") from None

    def net(self, name: str) -> Net:
        try:
            return self.nets[name]
        except KeyError:
            raise SchematicError(f"no net {name!r}") from None

    def _check_terminal_exists(self, term):
        if term[0] == "pin":
            _, pid, idx = term
            part = self.part(pid)
            if not 0 <= idx < len(part.part.pins):
                raise SchematicError(f"part {pid} has no pin {idx}")

    # -- operations --------------------------------------------------------------

    def add_part(self, part_def: PartDef, part_id: str | None = None,
                 pos=(0.0, 0.0)) -> str:
        if part_id is None:
            self._part_counter += 1
            part_id = f"P{self._part_counter}"
        if part_id in self.parts:
            raise SchematicError(f"part id {part_id!r} already in use")
        self.parts[part_id] = PartInstance(part_id, part_def, tuple(pos))
        return part_id

    def remove_part(self, part_id: str):
        """Remove a part, detaching its pins from any nets.

        A detached terminal of degree k is healed by chaining its neighbors
        (n1-n2, n2-n3, ...), keeping the tree intact.  Nets left with fewer
        than 2 terminals are deleted.  Returns (deleted_nets, changed_nets).
        """
        part = self.part(part_id)
        deleted, changed = [], []
        terms = [pin(part_id, i) for i in range(len(part.part.pins))]
        for name in list(self.nets):
            net = self.nets[name]
            hit = [t for t in terms if t in net.terminals]
            if not hit:
                continue
            for t in hit:
                self._detach_terminal(net, t)
            if len(net.terminals) < 2:
                del self.nets[name]
                deleted.append(name)
            else:
                net.check_tree()
                changed.append(name)
        del self.parts[part_id]
        return deleted, changed

    def _detach_terminal(self, net: Net, term):
        nbrs = net.neighbors(term)
        for e in net.edges_at(term):
            del net.edges[e]
        net.terminals.remove(term)
        for a, b in zip(nbrs, nbrs[1:]):
            net.new_edge(a, b)
        if term[0] == "junction":
            net.junction_pos.pop(term[1], None)

    def add_net(self, name: str, terminals, edges=None) -> Net:
        if name in self.nets:
            raise SchematicError(f"net {name!r} already exists")
        terms = [normalize_terminal(t) for t in terminals]
        for t in terms:
            self._check_terminal_exists(t)
            if t[0] == "pin":
                used = self.net_of_pin(t)
                if used is not None:
                    raise SchematicError(f"pin {t} is already on net {used!r}")
        net = Net(name)
        net.terminals = terms
        if edges is None:
            for a, b in zip(terms, terms[1:]):
                net.new_edge(a, b)
        else:
            for a, b in edges:
                net.new_edge(normalize_terminal(a), normalize_terminal(b))
        net.check_tree()
        self.nets[name] = net
        return net

    def connect(self, term, net_name: str, attach_to=None) -> int:
        """Attach a pin (or fresh junction) to a net with one new tree edge.

        ``attach_to`` picks the existing terminal to wire to; defaults to
        the net's first terminal.  Returns the new edge id.
        """
        net = self.net(net_name)
        term = normalize_terminal(term)
        self._check_terminal_exists(term)
        if term in net.terminals:
            raise SchematicError(f"{term} is already on net {net_name!r}")
        if term[0] == "pin":
            used = self.net_of_pin(term)
            if used is not None:
                raise SchematicError(f"pin {term} is already on net {used!r}")
        anchor = (
            normalize_terminal(attach_to)
            if attach_to is not None
            else net.terminals[0]
        )
        if anchor not in net.terminals:
            raise SchematicError(f"attach point {anchor} is not on net {net_name!r}")
        net.terminals.append(term)
        eid = net.new_edge(anchor, term)
        net.check_tree()
        return eid

    def add_junction(self, net_name: str, edge_id: int, pos=(0.0, 0.0)):
        """Split an edge with a junction terminal.

        Returns (junction_id, (edge_a, edge_b)); the original edge id is
        retired.
        """
        net = self.net(net_name)
        if edge_id not in net.edges:
            raise SchematicError(f"net {net_name!r} has no edge {edge_id}")
        a, b = net.edges.pop(edge_id)
        jid = net.new_junction_id()
        jterm = junction(jid)
        net.terminals.append(jterm)
        net.junction_pos[jid] = tuple(pos)
        e1 = net.new_edge(a, jterm)
        e2 = net.new_edge(jterm, b)
        net.check_tree()
        return jid, (e1, e2)

    def delete_junction(self, net_name: str, junction_id: str):
        """Remove a junction of degree <= 2, merging its edges; refuse at
        degree >= 3 (that would tear the tree apart)."""
        net = self.net(net_name)
        jterm = junction(junction_id)
        if jterm not in net.terminals:
            raise SchematicError(f"net {net_name!r} has no junction {junction_id!r}")
        deg = net.degree(jterm)
        if deg >= 3:
            raise SchematicError(
                f"junction {junction_id!r} joins {deg} edges; detach branches first"
            )
        nbrs = net.neighbors(jterm)
        for e in net.edges_at(jterm):
            del net.edges[e]
        net.terminals.remove(jterm)
        net.junction_pos.pop(junction_id, None)
        merged = None
        if len(nbrs) == 2:
            merged = net.new_edge(nbrs[0], nbrs[1])
        if len(net.terminals) >= 2:
            net.check_tree()
        else:
            del self.nets[net_name]
        return merged

    def reconnect(self, net_name: str, remove_edge: int, new_a, new_b) -> int:
        """Swap one tree edge for another that reconnects the two halves."""
        net = self.net(net_name)
        if remove_edge not in net.edges:
            raise SchematicError(f"net {net_name!r} has no edge {remove_edge}")
        a, b = normalize_terminal(new_a), normalize_terminal(new_b)
        for t in (a, b):
            if t not in net.terminals:
                raise SchematicError(f"{t} is not on net {net_name!r}")
        old = net.edges.pop(remove_edge)
        eid = net.new_edge(a, b)
        try:
            net.check_tree()
        except SchematicError:
            del net.edges[eid]
            net.edges[remove_edge] = old
            raise
        return eid
