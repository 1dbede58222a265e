"""Surface trace routing.

A trace between two surface points is grown from both ends at once: each
front repeatedly takes a fixed-length step along the surface aimed at the
other front, and the trace closes when the fronts come within the meet
tolerance (chord distance).  The result hugs the surface and approximates
a shortest path well on smooth regions without paying for true geodesics.

Failure is a value, not an exception: a trace that cannot close (direction
degenerates against the surface normal, step budget exhausted, or an open
boundary blocks the way) is returned with ``status == "failed"`` and its
endpoints kept, so callers can draw the attempted connection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from weakref import WeakKeyDictionary

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from . import kernels
from .errors import BoundaryHit
from .geometry import DEGENERACY_EPS, SurfacePoint, TangentVector, TriMesh

ROUTED = "routed"
FAILED = "failed"

# reasons carried by failed polylines
REASON_DEGENERATE = "degenerate"
REASON_MAX_STEPS = "max_steps"
REASON_BOUNDARY = "boundary"
REASON_UNPLACED = "unplaced"

_STATUS_REASON = {
    1: REASON_DEGENERATE,
    2: REASON_MAX_STEPS,
    3: REASON_BOUNDARY,
}


@dataclass
class RoutingParams:
    """Knobs for the trace march.

    ``meet_tolerance`` defaults to ``step_length`` when left ``None``:
    fronts advancing by one step cannot jump past each other by more than
    one step, so that is the natural closing distance.
    """

    step_length: float = 1.0
    max_steps: int = 10000
    meet_tolerance: float | None = None
    degeneracy_threshold: float = DEGENERACY_EPS

    def __post_init__(self):
        if self.step_length <= 0:
            raise ValueError("step_length must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be at least 1")
        if self.meet_tolerance is not None and self.meet_tolerance <= 0:
            raise ValueError("meet_tolerance must be positive")
        if not 0 < self.degeneracy_threshold < 1:
            raise ValueError("degeneracy_threshold must be in (0, 1)")

    @property
    def resolved_meet_tolerance(self) -> float:
        return self.step_length if self.meet_tolerance is None else self.meet_tolerance


@dataclass
class SurfacePolyline:
    """A polyline of surface points with embedded 3D positions.

    For routed traces, consecutive samples are at most one step apart and
    lie on a common face or across one shared edge, so the chord-length sum
    ``length`` measures the on-surface path.  Failed traces keep their
    endpoints (drawn as a straight annotation line) and a reason.
    """

    samples: list  # list[SurfacePoint]
    points: np.ndarray  # (n, 3) mm
    status: str
    endpoints: tuple | None = None  # (SurfacePoint, SurfacePoint)
    failure_reason: str | None = None
    _length: float | None = field(default=None, repr=False, compare=False)

    @property
    def routed(self) -> bool:
        return self.status == ROUTED

    @property
    def length(self) -> float:
        """Chord-length sum over consecutive samples, mm."""
        if self._length is None:
            if len(self.points) < 2:
                self._length = 0.0
            else:
                seg = np.diff(self.points, axis=0)
                self._length = float(np.linalg.norm(seg, axis=1).sum())
        return self._length

    def reversed(self) -> "SurfacePolyline":
        ep = None if self.endpoints is None else (self.endpoints[1], self.endpoints[0])
        return SurfacePolyline(
            samples=list(reversed(self.samples)),
            points=self.points[::-1].copy(),
            status=self.status,
            endpoints=ep,
            failure_reason=self.failure_reason,
        )


def _failed(mesh: TriMesh, p0, q0, reason: str) -> SurfacePolyline:
    pts = (
        np.array([mesh.embed(p0), mesh.embed(q0)])
        if p0 is not None and q0 is not None
        else np.zeros((0, 3))
    )
    samples = [p0, q0] if p0 is not None and q0 is not None else []
    return SurfacePolyline(
        samples=samples,
        points=pts,
        status=FAILED,
        endpoints=(p0, q0),
        failure_reason=reason,
    )


def _sample_key(p: SurfacePoint):
    return (p.face, p.bary[0], p.bary[1], p.bary[2])


def route_trace(
    mesh: TriMesh,
    p0: SurfacePoint,
    q0: SurfacePoint,
    params: RoutingParams | None = None,
    normal_mode: str = "vertex",
) -> SurfacePolyline:
    """Route a surface trace between two points.

    Swapping the endpoints yields the same geometry reversed: the march
    always runs on a canonical internal ordering of the endpoints, so the
    computation is literally identical either way.
    """
    params = params or RoutingParams()
    mesh.check_point(p0)
    mesh.check_point(q0)
    if normal_mode not in ("vertex", "face"):
        raise ValueError(f"unknown normal mode {normal_mode!r}")

    if p0.face == q0.face and np.array_equal(p0.bary, q0.bary):
        return SurfacePolyline(
            samples=[p0],
            points=mesh.embed(p0)[None, :],
            status=ROUTED,
            endpoints=(p0, q0),
        )

    swapped = _sample_key(q0) < _sample_key(p0)
    a, b = (q0, p0) if swapped else (p0, q0)

    status, faces, barys = kernels.march(
        mesh.vertices,
        mesh.faces,
        mesh.face_adjacency,
        mesh.face_normals,
        mesh.vertex_normals,
        a.face, a.bary[0], a.bary[1], a.bary[2],
        b.face, b.bary[0], b.bary[1], b.bary[2],
        params.step_length,
        params.max_steps,
        params.resolved_meet_tolerance,
        params.degeneracy_threshold,
        normal_mode == "vertex",
    )
    if status != 0:
        return _failed(mesh, p0, q0, _STATUS_REASON[status])

    samples = [SurfacePoint(f, bb) for f, bb in zip(faces, barys)]
    if swapped:
        samples.reverse()
    points = mesh.embed_many(samples)
    return SurfacePolyline(
        samples=samples, points=points, status=ROUTED, endpoints=(p0, q0)
    )


def walk_on_surface(
    mesh: TriMesh,
    start: SurfacePoint,
    direction,
    distance: float,
) -> tuple[SurfacePoint, TangentVector]:
    """Walk a distance along the surface from ``start``.

    ``direction`` is a :class:`TangentVector` on ``start``'s face or any
    3-vector (projected into the face plane).  Returns the end point and
    the parallel-transported direction there.  Raises :class:`BoundaryHit`
    (carrying the distance traveled) if an open boundary interrupts the
    walk; a walk grazing a mesh vertex is nudged 1e-6 mm along the edge and
    continues.
    """
    mesh.check_point(start)
    if distance < 0:
        raise ValueError("distance must be non-negative")
    if isinstance(direction, TangentVector):
        if direction.face != start.face:
            raise ValueError("direction lives on a different face than start")
        d = direction.dir
    else:
        d = np.asarray(direction, dtype=np.float64)
        fn = mesh.face_normals[start.face]
        d = d - (d @ fn) * fn
        n = np.linalg.norm(d)
        if n < 1e-12:
            raise ValueError("direction has no tangential component")
        d = d / n
    if distance == 0:
        return start, TangentVector(start.face, d)

    status, face, bary, out_dir, traveled, _faces, _barys = kernels.walk(
        mesh.vertices,
        mesh.faces,
        mesh.face_adjacency,
        mesh.face_normals,
        start.face, start.bary[0], start.bary[1], start.bary[2],
        d[0], d[1], d[2],
        distance,
    )
    end = SurfacePoint(face, np.array(bary))
    if status == 3:
        raise BoundaryHit(traveled, end)
    return end, TangentVector(face, np.array(out_dir))


# -- reference geodesic upper bound -------------------------------------------

_oracle_cache: "WeakKeyDictionary[TriMesh, dict]" = WeakKeyDictionary()


def _unfold_across_edge(va, vb, p, q):
    """Exact surface distance from p to q across the edge (va, vb).

    p lies on one adjoining face, q on the other; both faces are flat, so
    unfolding the second about the edge makes the shortest path a straight
    planar segment.  Returns (distance, bend point on the edge), or
    (inf, None) when the straight line misses the edge segment and the
    true path bends around a vertex instead (the vertex node already sits
    in the graph, so that case needs no extra link).
    """
    e = vb - va
    length = float(np.linalg.norm(e))
    e = e / length
    dp = p - va
    xp = float(dp @ e)
    yp = float(np.linalg.norm(dp - xp * e))
    dq = q - va
    xq = float(dq @ e)
    yq = float(np.linalg.norm(dq - xq * e))
    if yp + yq < 1e-12:
        return abs(xp - xq), None
    xc = xp + (yp / (yp + yq)) * (xq - xp)
    if 0.0 <= xc <= length:
        return math.hypot(xp - xq, yp + yq), va + xc * e
    return np.inf, None


class _SteinerGraph:
    """Shortest-path graph over mesh vertices plus extra nodes spread along
    every edge, with all-pairs links inside each face.  Path lengths are an
    upper bound on the true geodesic that tightens as refinement grows.

    Query endpoints link into their own face directly and into the three
    edge-adjacent faces through an exact unfold about the shared edge.
    Without the unfolded links every path would enter the lattice at a
    node right next to the endpoint, and on short paths that quantization
    does not amortize; a bend sample on the crossed edge keeps the
    returned polyline's chord length equal to the reported distance."""

    def __init__(self, mesh: TriMesh, refinement: int):
        self.mesh = mesh
        self.refinement = refinement
        v, f = mesh.vertices, mesh.faces

        edges = {}
        for face in range(len(f)):
            for i in range(3):
                a, b = int(f[face][(i + 1) % 3]), int(f[face][(i + 2) % 3])
                edges.setdefault((min(a, b), max(a, b)), None)
        edge_list = sorted(edges)

        pos = [v]
        node_of_edge = {}
        next_id = len(v)
        k = refinement
        for a, b in edge_list:
            ids = list(range(next_id, next_id + k))
            node_of_edge[(a, b)] = ids
            next_id += k
            if k:
                t = (np.arange(1, k + 1) / (k + 1))[:, None]
                pos.append(v[a] * (1 - t) + v[b] * t)
        self.positions = np.vstack(pos) if k else v.copy()
        self.n_nodes = next_id

        rows, cols = [], []
        self.face_nodes = []
        for face in range(len(f)):
            nodes = [int(f[face][0]), int(f[face][1]), int(f[face][2])]
            for i in range(3):
                a, b = int(f[face][(i + 1) % 3]), int(f[face][(i + 2) % 3])
                nodes += node_of_edge[(min(a, b), max(a, b))]
            self.face_nodes.append(nodes)
            arr = np.array(nodes)
            iu, ju = np.triu_indices(len(arr), k=1)
            rows.append(arr[iu])
            cols.append(arr[ju])
        rows = np.concatenate(rows)
        cols = np.concatenate(cols)
        key = rows.astype(np.int64) * self.n_nodes + cols
        _, idx = np.unique(key, return_index=True)
        self.rows = rows[idx]
        self.cols = cols[idx]
        d = self.positions[self.rows] - self.positions[self.cols]
        self.weights = np.linalg.norm(d, axis=1)

    def _attach(self, point, face):
        """Links from one query endpoint: {node: (weight, bend or None)}."""
        mesh = self.mesh
        v, f = mesh.vertices, mesh.faces
        best = {}
        for n in self.face_nodes[face]:
            best[n] = (float(np.linalg.norm(self.positions[n] - point)), None)
        for i in range(3):
            g = int(mesh.face_adjacency[face, i])
            if g < 0:
                continue
            va = v[f[face, (i + 1) % 3]]
            vb = v[f[face, (i + 2) % 3]]
            for n in self.face_nodes[g]:
                w, bend = _unfold_across_edge(va, vb, point, self.positions[n])
                cur = best.get(n)
                if cur is None or w < cur[0]:
                    best[n] = (w, bend)
        return best

    def query(self, p0: SurfacePoint, q0: SurfacePoint):
        mesh = self.mesh
        v, f = mesh.vertices, mesh.faces
        pp, qp = mesh.embed(p0), mesh.embed(q0)
        pid, qid = self.n_nodes, self.n_nodes + 1
        ar, ac, aw = [], [], []
        bends = {}
        for nid, point, face in ((pid, pp, p0.face), (qid, qp, q0.face)):
            for n, (w, bend) in sorted(self._attach(point, face).items()):
                ar.append(nid)
                ac.append(n)
                aw.append(w)
                if bend is not None:
                    bends[(nid, n)] = (bend, face)
        direct = np.linalg.norm(pp - qp) if p0.face == q0.face else np.inf
        if p0.face != q0.face:
            for i in range(3):
                if int(mesh.face_adjacency[p0.face, i]) != q0.face:
                    continue
                va = v[f[p0.face, (i + 1) % 3]]
                vb = v[f[p0.face, (i + 2) % 3]]
                w, bend = _unfold_across_edge(va, vb, pp, qp)
                if w < direct:
                    direct = w
                    if bend is not None:
                        bends[(pid, qid)] = (bend, p0.face)
        ar.append(pid)
        ac.append(qid)
        aw.append(direct)

        rows = np.concatenate([self.rows, np.array(ar, dtype=np.int64)])
        cols = np.concatenate([self.cols, np.array(ac, dtype=np.int64)])
        data = np.concatenate([self.weights, np.array(aw)])
        finite = np.isfinite(data)
        n = self.n_nodes + 2
        graph = csr_matrix((data[finite], (rows[finite], cols[finite])), shape=(n, n))
        dist, pred = dijkstra(
            graph, directed=False, indices=pid, return_predecessors=True
        )
        if not np.isfinite(dist[qid]):
            raise ValueError("no surface path between the query points")
        path = [qid]
        while path[-1] != pid:
            path.append(int(pred[path[-1]]))
        path.reverse()
        entries = []
        for i, node in enumerate(path):
            pos = pp if node == pid else qp if node == qid else self.positions[node]
            entries.append((pos, node, -1))
            if i + 1 < len(path):
                hop = bends.get((node, path[i + 1]))
                if hop is None:
                    hop = bends.get((path[i + 1], node))
                if hop is not None:
                    entries.append((hop[0], -1, hop[1]))
        return float(dist[qid]), entries


def geodesic_oracle(
    mesh: TriMesh, p0: SurfacePoint, q0: SurfacePoint, refinement: int = 8
) -> SurfacePolyline:
    """Reference shortest-path upper bound through an edge-refined graph.

    At refinement 0 this is the plain vertex-graph path.  Sample spacing is
    whatever the graph gives; the marching-specific spacing guarantees of
    :func:`route_trace` do not apply here.
    """
    mesh.check_point(p0)
    mesh.check_point(q0)
    if refinement < 0:
        raise ValueError("refinement must be non-negative")
    cache = _oracle_cache.setdefault(mesh, {})
    if refinement not in cache:
        cache[refinement] = _SteinerGraph(mesh, refinement)
    graph = cache[refinement]
    length, entries = graph.query(p0, q0)

    samples = []
    for pos, node, face_hint in entries:
        if node == graph.n_nodes:
            samples.append(p0)
        elif node == graph.n_nodes + 1:
            samples.append(q0)
        else:
            face = face_hint if node < 0 else _any_face_for_node(graph, node)
            samples.append(SurfacePoint(face, _bary_on_face(mesh, face, pos)))
    poly = SurfacePolyline(
        samples=samples,
        points=np.array([pos for pos, _, _ in entries]),
        status=ROUTED,
        endpoints=(p0, q0),
    )
    assert abs(poly.length - length) <= 1e-6 * max(1.0, length)
    return poly


def _any_face_for_node(graph: _SteinerGraph, node: int) -> int:
    mesh = graph.mesh
    if node < mesh.n_vertices:
        return int(np.nonzero((mesh.faces == node).any(axis=1))[0][0])
    for face, nodes in enumerate(graph.face_nodes):
        if node in nodes[3:]:
            return face
    raise ValueError(f"node {node} not on any face")


def _bary_on_face(mesh: TriMesh, face: int, point) -> np.ndarray:
    tri = mesh.vertices[mesh.faces[face]]
    e1 = tri[1] - tri[0]
    e2 = tri[2] - tri[0]
    r = np.asarray(point) - tri[0]
    g = np.array([[e1 @ e1, e1 @ e2], [e1 @ e2, e2 @ e2]])
    u, w = np.linalg.solve(g, np.array([r @ e1, r @ e2]))
    b = np.clip(np.array([1 - u - w, u, w]), 0.0, None)
    return b / b.sum()


# -- polyline proximity --------------------------------------------------------


def _as_points(poly) -> np.ndarray:
    if isinstance(poly, SurfacePolyline):
        return poly.points
    return np.asarray(poly, dtype=np.float64)


def _segment_pairs_min(p0, p1, q0, q1):
    """Min distance between two segment sets, all pairs, vectorized.

    Standard clamped closest-point computation; inputs are (n, 3) and
    (m, 3) starts/ends.  Returns (min distance, point on P, point on Q).
    """
    d1 = (p1 - p0)[:, None, :]
    d2 = (q1 - q0)[None, :, :]
    r = p0[:, None, :] - q0[None, :, :]
    a = np.einsum("ijk,ijk->ij", d1, d1)
    e = np.einsum("ijk,ijk->ij", d2, d2)
    f = np.einsum("ijk,ijk->ij", d2, r)
    c = np.einsum("ijk,ijk->ij", d1, r)
    b = np.einsum("ijk,ijk->ij", d1, d2)
    denom = a * e - b * b

    s = np.where(denom > 1e-300, (b * f - c * e) / np.maximum(denom, 1e-300), 0.0)
    s = np.clip(s, 0.0, 1.0)
    t = np.where(e > 1e-300, (b * s + f) / np.maximum(e, 1e-300), 0.0)
    t_clamped = np.clip(t, 0.0, 1.0)
    # when t was clamped, recompute s against the clamped t
    s2 = np.where(a > 1e-300, (b * t_clamped - c) / np.maximum(a, 1e-300), 0.0)
    s = np.where(t != t_clamped, np.clip(s2, 0.0, 1.0), s)
    t = t_clamped

    cp = p0[:, None, :] + s[..., None] * d1
    cq = q0[None, :, :] + t[..., None] * d2
    diff = cp - cq
    dist2 = np.einsum("ijk,ijk->ij", diff, diff)
    idx = np.unravel_index(np.argmin(dist2), dist2.shape)
    return float(np.sqrt(dist2[idx])), cp[idx], cq[idx]


def polyline_min_distance_witness(a, b):
    """(distance, closest point on a, closest point on b) between two
    polylines, measured by 3D chord."""
    pa = _as_points(a)
    pb = _as_points(b)
    if len(pa) == 0 or len(pb) == 0:
        raise ValueError("empty polyline")
    if len(pa) == 1:
        pa = np.vstack([pa, pa])
    if len(pb) == 1:
        pb = np.vstack([pb, pb])

    best = (np.inf, None, None)
    block = 256
    sa0, sa1 = pa[:-1], pa[1:]
    sb0, sb1 = pb[:-1], pb[1:]
    for i in range(0, len(sa0), block):
        for j in range(0, len(sb0), block):
            d, cp, cq = _segment_pairs_min(
                sa0[i : i + block], sa1[i : i + block],
                sb0[j : j + block], sb1[j : j + block],
            )
            if d < best[0]:
                best = (d, cp, cq)
    return best


def polyline_min_distance(a, b) -> float:
    """Minimum 3D distance between two polylines."""
    return polyline_min_distance_witness(a, b)[0]
