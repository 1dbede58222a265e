"""Triangle-mesh substrate: meshes, surface points, tangent directions.

All coordinates are millimetres.  A mesh is an oriented triangle surface;
closed solids and open sheets are both representable, but walks refuse to
cross open boundaries (see :mod:`meshwire.routing`).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateDirection, MeshError, NonManifoldError

BARY_ATOL = 1e-9          # barycentric validity tolerance
PLANE_ATOL = 1e-6         # mm: embedded point must sit on its face plane
MIN_FACE_AREA = 1e-12     # mm^2
DEGENERACY_EPS = 1e-7     # relative tangential norm below which projection fails


def _unit_rows(a, eps=0.0):
    n = np.linalg.norm(a, axis=-1, keepdims=True)
    if eps:
        n = np.maximum(n, eps)
    return a / n


@dataclass(frozen=True)
class SurfacePoint:
    """A point on a mesh: face index plus barycentric coordinates.

    Coordinates are clamped to be non-negative and renormalized to sum to
    exactly 1; inputs violating those constraints beyond 1e-9 are rejected.
    """

    face: int
    bary: np.ndarray = field(repr=False)

    def __init__(self, face: int, bary):
        b = np.asarray(bary, dtype=np.float64)
        if b.shape != (3,):
            raise ValueError(f"barycentric coordinates must have shape (3,), got {b.shape}")
        if np.any(b < -BARY_ATOL):
            raise ValueError(f"negative barycentric coordinate in {b.tolist()}")
        s = float(b.sum())
        if abs(s - 1.0) > BARY_ATOL:
            raise ValueError(f"barycentric coordinates sum to {s}, expected 1")
        b = np.clip(b, 0.0, None)
        # idempotent projection: the sum must land on exactly 1.0 so that
        # coordinates written to a file rebuild to themselves bit for bit
        for _ in range(4):
            s = float(b.sum())
            if s == 1.0:
                break
            b = b / s
            b[2] = max(0.0, 1.0 - float(b[0] + b[1]))
        b.flags.writeable = False
        object.__setattr__(self, "face", int(face))
        object.__setattr__(self, "bary", b)

    def __eq__(self, other):
        if not isinstance(other, SurfacePoint):
            return NotImplemented
        return self.face == other.face and np.array_equal(self.bary, other.bary)

    def __hash__(self):
        return hash((self.face, self.bary.tobytes()))

    def __repr__(self):
        b = ", ".join(f"{x:.6g}" for x in self.bary)
        return f"SurfacePoint(face={self.face}, bary=({b}))"


@dataclass(frozen=True)
class TangentVector:
    """A unit direction lying in the plane of one face."""

    face: int
    dir: np.ndarray = field(repr=False)

    def __init__(self, face: int, dir):
        d = np.asarray(dir, dtype=np.float64)
        if d.shape != (3,):
            raise ValueError(f"direction must have shape (3,), got {d.shape}")
        n = np.linalg.norm(d)
        if n == 0.0:
            raise ValueError("zero tangent direction")
        d = d / n
        d.flags.writeable = False
        object.__setattr__(self, "face", int(face))
        object.__setattr__(self, "dir", d)

    def __repr__(self):
        d = ", ".join(f"{x:.6g}" for x in self.dir)
        return f"TangentVector(face={self.face}, dir=({d}))"


class TriMesh:
    """Immutable oriented triangle surface.

    Faces wind counter-clockwise seen from outside.  Edge ``i`` of a face is
    the edge *opposite* local vertex ``i``, i.e. it joins local vertices
    ``(i+1) % 3`` and ``(i+2) % 3``; ``face_adjacency[f, i]`` is the face
    across that edge, or -1 on an open boundary.  This pairing lets a
    barycentric coordinate hitting zero name the crossed edge directly.
    """

    def __init__(self, vertices, faces, validate: bool = True):
        v = np.ascontiguousarray(vertices, dtype=np.float64)
        f = np.ascontiguousarray(faces, dtype=np.int32)
        if v.ndim != 2 or v.shape[1] != 3:
            raise MeshError(f"vertices must be (n, 3), got {v.shape}")
        if f.ndim != 2 or f.shape[1] != 3:
            raise MeshError(f"faces must be (m, 3), got {f.shape}")
        if len(v) == 0 or len(f) == 0:
            raise MeshError("empty mesh")
        if not np.all(np.isfinite(v)):
            raise MeshError("non-finite vertex coordinate")
        self.vertices = v
        self.faces = f
        v.flags.writeable = False
        f.flags.writeable = False

        if validate:
            if f.min() < 0 or f.max() >= len(v):
                raise MeshError("face references a vertex out of range")
            same = (f[:, 0] == f[:, 1]) | (f[:, 1] == f[:, 2]) | (f[:, 2] == f[:, 0])
            if np.any(same):
                bad = np.nonzero(same)[0][:8].tolist()
                raise MeshError(f"faces with repeated vertices: {bad}")

        tri = v[f]
        cross = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
        norms = np.linalg.norm(cross, axis=1)
        self.face_areas = 0.5 * norms
        if validate and np.any(self.face_areas <= MIN_FACE_AREA):
            bad = np.nonzero(self.face_areas <= MIN_FACE_AREA)[0][:8].tolist()
            raise MeshError(f"degenerate faces (area <= {MIN_FACE_AREA} mm^2): {bad}")
        self.face_normals = cross / np.maximum(norms, 1e-300)[:, None]
        self.face_normals.flags.writeable = False

        self.face_adjacency, self.boundary_edges = self._build_adjacency(validate)
        self.vertex_normals = self._angle_weighted_vertex_normals()
        self.vertex_normals.flags.writeable = False

    # -- construction helpers -------------------------------------------------

    def _build_adjacency(self, validate):
        f = self.faces.astype(np.int64)
        n_f = len(f)
        # directed edge i of face k runs from local vertex (i+1)%3 to (i+2)%3
        src = np.stack([f[:, 1], f[:, 2], f[:, 0]], axis=1).ravel()
        dst = np.stack([f[:, 2], f[:, 0], f[:, 1]], axis=1).ravel()
        lo = np.minimum(src, dst)
        hi = np.maximum(src, dst)
        key = lo * len(self.vertices) + hi
        order = np.argsort(key, kind="stable")
        k_sorted = key[order]
        uniq, start, counts = np.unique(k_sorted, return_index=True, return_counts=True)

        if validate and np.any(counts > 2):
            idx = start[counts > 2]
            edges = [(int(lo[order[i]]), int(hi[order[i]])) for i in idx]
            raise NonManifoldError("edges shared by more than two faces", edges)

        adj = np.full((n_f, 3), -1, dtype=np.int32)
        boundary = []
        two = np.nonzero(counts == 2)[0]
        a_idx = order[start[two]]
        b_idx = order[start[two] + 1]
        if validate:
            # opposite winding means the two directed copies disagree
            bad = src[a_idx] == src[b_idx]
            if np.any(bad):
                edges = [
                    (int(lo[a_idx[i]]), int(hi[a_idx[i]]))
                    for i in np.nonzero(bad)[0]
                ]
                raise NonManifoldError("edges with inconsistent winding", edges)
        adj[a_idx // 3, a_idx % 3] = b_idx // 3
        adj[b_idx // 3, b_idx % 3] = a_idx // 3
        one = np.nonzero(counts == 1)[0]
        for i in order[start[one]]:
            boundary.append((int(lo[i]), int(hi[i])))
        adj.flags.writeable = False
        return adj, sorted(boundary)

    def _angle_weighted_vertex_normals(self):
        v, f = self.vertices, self.faces
        tri = v[f]
        out = np.zeros_like(v)
        for i in range(3):
            e1 = tri[:, (i + 1) % 3] - tri[:, i]
            e2 = tri[:, (i + 2) % 3] - tri[:, i]
            ang = np.arctan2(
                np.linalg.norm(np.cross(e1, e2), axis=1),
                np.einsum("ij,ij->i", e1, e2),
            )
            np.add.at(out, f[:, i], ang[:, None] * self.face_normals)
        return _unit_rows(out, eps=1e-300)

    # -- queries ---------------------------------------------------------------

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    @property
    def is_closed(self) -> bool:
        return not self.boundary_edges

    def check_point(self, point: SurfacePoint):
        if not 0 <= point.face < self.n_faces:
            raise ValueError(f"face {point.face} out of range (mesh has {self.n_faces})")

    def embed(self, point: SurfacePoint) -> np.ndarray:
        """Barycentric point to 3D position (mm)."""
        self.check_point(point)
        return point.bary @ self.vertices[self.faces[point.face]]

    def embed_many(self, points) -> np.ndarray:
        faces = np.fromiter((p.face for p in points), dtype=np.int64, count=len(points))
        barys = np.array([p.bary for p in points], dtype=np.float64)
        tri = self.vertices[self.faces[faces]]
        return np.einsum("ij,ijk->ik", barys, tri)

    def normal_at(self, point: SurfacePoint, mode: str = "vertex") -> np.ndarray:
        """Unit surface normal at a point.

        ``face`` mode returns the flat face normal; ``vertex`` mode
        interpolates angle-weighted vertex normals barycentrically and
        renormalizes, which varies smoothly across edges.
        """
        self.check_point(point)
        if mode == "face":
            return self.face_normals[point.face].copy()
        if mode == "vertex":
            n = point.bary @ self.vertex_normals[self.faces[point.face]]
            ln = np.linalg.norm(n)
            if ln < 1e-12:
                # opposing vertex normals cancelled; fall back to the face
                return self.face_normals[point.face].copy()
            return n / ln
        raise ValueError(f"unknown normal mode {mode!r}")

    def project_to_tangent(
        self,
        at: SurfacePoint,
        toward,
        normal_mode: str = "vertex",
        degeneracy_threshold: float = DEGENERACY_EPS,
    ) -> TangentVector:
        """Unit in-plane direction at ``at`` pointing as straight toward
        ``toward`` (a 3D position) as the surface allows.

        The offset vector is flattened against the chosen surface normal and
        then re-projected into the exact face plane so the result is walkable.
        Raises :class:`DegenerateDirection` when the tangential component is
        smaller than ``degeneracy_threshold`` times the full offset norm.
        """
        pos = self.embed(at)
        v = np.asarray(toward, dtype=np.float64) - pos
        full = np.linalg.norm(v)
        if full == 0.0:
            raise DegenerateDirection("target coincides with the source point")
        n = self.normal_at(at, normal_mode)
        t = v - (v @ n) * n
        if np.linalg.norm(t) < degeneracy_threshold * full:
            raise DegenerateDirection(
                f"tangential component below {degeneracy_threshold:g} of offset norm"
            )
        fn = self.face_normals[at.face]
        t = t - (t @ fn) * fn
        if np.linalg.norm(t) < degeneracy_threshold * full:
            raise DegenerateDirection(
                f"tangential component below {degeneracy_threshold:g} of offset norm"
            )
        return TangentVector(at.face, t)

    def surface_point_near(self, xyz) -> SurfacePoint:
        """Closest surface point to an arbitrary 3D position.

        Brute force over faces (vectorized); meant for picking and fixture
        construction, not inner loops.
        """
        p = np.asarray(xyz, dtype=np.float64)
        tri = self.vertices[self.faces]
        bary, dist2 = _closest_point_barycentric(tri, p)
        f = int(np.argmin(dist2))
        b = np.clip(bary[f], 0.0, None)
        return SurfacePoint(f, b / b.sum())


def _closest_point_barycentric(tri, p):
    """Closest point on each triangle to p, as clamped barycentrics.

    Standard region walk (Ericson), vectorized over triangles.  Returns
    (barycentrics (m,3), squared distances (m,)).
    """
    a, b, c = tri[:, 0], tri[:, 1], tri[:, 2]
    ab = b - a
    ac = c - a
    ap = p - a
    d1 = np.einsum("ij,ij->i", ab, ap)
    d2 = np.einsum("ij,ij->i", ac, ap)
    bp = p - b
    d3 = np.einsum("ij,ij->i", ab, bp)
    d4 = np.einsum("ij,ij->i", ac, bp)
    cp = p - c
    d5 = np.einsum("ij,ij->i", ab, cp)
    d6 = np.einsum("ij,ij->i", ac, cp)

    m = len(tri)
    u = np.zeros(m)
    v = np.zeros(m)
    done = np.zeros(m, dtype=bool)

    reg = (d1 <= 0) & (d2 <= 0)                      # vertex a
    done |= reg
    reg = ~done & (d3 >= 0) & (d4 <= d3)             # vertex b
    u[reg] = 1.0
    done |= reg
    reg = ~done & (d6 >= 0) & (d5 <= d6)             # vertex c
    v[reg] = 1.0
    done |= reg

    vc = d1 * d4 - d3 * d2
    reg = ~done & (vc <= 0) & (d1 >= 0) & (d3 <= 0)  # edge ab
    t = d1 / np.where(d1 - d3 == 0, 1, d1 - d3)
    u[reg] = t[reg]
    done |= reg
    vb = d5 * d2 - d1 * d6
    reg = ~done & (vb <= 0) & (d2 >= 0) & (d6 <= 0)  # edge ac
    t = d2 / np.where(d2 - d6 == 0, 1, d2 - d6)
    v[reg] = t[reg]
    done |= reg
    va = d3 * d6 - d5 * d4
    reg = ~done & (va <= 0) & (d4 - d3 >= 0) & (d5 - d6 >= 0)  # edge bc
    denom = (d4 - d3) + (d5 - d6)
    t = (d4 - d3) / np.where(denom == 0, 1, denom)
    u[reg] = 1.0 - t[reg]
    v[reg] = t[reg]
    done |= reg

    denom = va + vb + vc                              # interior
    denom = np.where(denom == 0, 1, denom)
    reg = ~done
    u[reg] = (vb / denom)[reg]
    v[reg] = (vc / denom)[reg]

    closest = a + u[:, None] * ab + v[:, None] * ac
    d = closest - p
    bary = np.stack([1.0 - u - v, u, v], axis=1)
    return bary, np.einsum("ij,ij->i", d, d)
