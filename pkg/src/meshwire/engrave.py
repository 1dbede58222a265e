"""Turn routed traces into printable geometry: channels and pin holes.

The printed artifact needs a V-section groove under every trace (copper
tape beds into it) and a drilled hole under every pin.  Channel and hole
sizes default to the tape/lead dimensions plus one FDM clearance step;
everything must stay under the 2.54 mm pin pitch or neighboring pads
would merge.

Channel mechanics: only a band of faces around each trace is touched.
The trace polyline (resampled to the refinement target) is inserted into
the band as real vertices, the band is refined by conforming edge
bisection until edges fit the groove, and vertices are pushed inward
along their normals by a V-profile of their distance to the nearest
trace.  Displacement is exactly zero from half the channel width
outward, so a full pitch between traces always leaves an untouched
ridge; everything outside the band keeps its bits.

Holes are subtracted, not displaced: edges crossing the drill cylinder
are split exactly on the circle, the disk is removed, and a wall ring
plus bottom cap (or a second rim for a through hole) closes the surface
again.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EngraveError
from .geometry import TriMesh
from .schematic import PIN_PITCH

_SNAP_MM = 1e-3  # inserted points this close to a vertex/edge reuse it


@dataclass(frozen=True)
class ChannelProfile:
    """Engraving dimensions, mm.

    ``falloff_width`` is extra margin beyond the channel's half-width that
    the mesher refines but leaves at zero displacement, so the groove wall
    blends into clean geometry; it adds nothing to the groove's footprint.
    """

    channel_width: float = 1.7
    channel_depth: float = 1.0
    hole_diameter: float = 1.7
    hole_depth: float = 4.0
    falloff_width: float = 0.5

    def __post_init__(self):
        if min(self.channel_width, self.channel_depth, self.hole_diameter,
               self.hole_depth) <= 0:
            raise ValueError("profile dimensions must be positive")
        if self.falloff_width < 0:
            raise ValueError("falloff_width cannot be negative")
        if self.channel_width >= PIN_PITCH:
            raise ValueError(
                f"channel width {self.channel_width} must stay under the"
                f" {PIN_PITCH} mm pin pitch"
            )
        if self.hole_diameter >= PIN_PITCH:
            raise ValueError(
                f"hole diameter {self.hole_diameter} must stay under the"
                f" {PIN_PITCH} mm pin pitch"
            )


@dataclass
class EngraveResult:
    mesh: TriMesh
    displaced_vertex_count: int
    report: dict


# -- distance field ------------------------------------------------------------


def _segment_distances(points, seg_a, seg_b, block=512):
    """Min distance from each point to any segment, plus the segment index."""
    points = np.asarray(points, dtype=np.float64)
    d = np.asarray(seg_b, dtype=np.float64) - seg_a
    dd = np.einsum("ij,ij->i", d, d)
    dd = np.maximum(dd, 1e-300)
    best = np.full(len(points), np.inf)
    best_idx = np.zeros(len(points), dtype=np.int64)
    for lo in range(0, len(points), block):
        p = points[lo:lo + block]
        w = p[:, None, :] - seg_a[None, :, :]
        t = np.clip(np.einsum("pse,se->ps", w, d) / dd, 0.0, 1.0)
        closest = seg_a[None, :, :] + t[:, :, None] * d[None, :, :]
        dist = np.linalg.norm(p[:, None, :] - closest, axis=2)
        idx = dist.argmin(axis=1)
        best[lo:lo + block] = dist[np.arange(len(p)), idx]
        best_idx[lo:lo + block] = idx
    return best, best_idx


def _bary_batch(mesh, fids, pts):
    """Barycentric coordinates of pts[k] in face fids[k], vectorized."""
    tri = mesh.vertices[mesh.faces[fids]]
    e0 = tri[:, 1] - tri[:, 0]
    e1 = tri[:, 2] - tri[:, 0]
    e2 = pts - tri[:, 0]
    d00 = np.einsum("ij,ij->i", e0, e0)
    d01 = np.einsum("ij,ij->i", e0, e1)
    d11 = np.einsum("ij,ij->i", e1, e1)
    d20 = np.einsum("ij,ij->i", e2, e0)
    d21 = np.einsum("ij,ij->i", e2, e1)
    denom = np.maximum(d00 * d11 - d01 * d01, 1e-300)
    v = (d11 * d20 - d01 * d21) / denom
    w = (d00 * d21 - d01 * d20) / denom
    return np.stack([1.0 - v - w, v, w], axis=1)


def _trace_segments(mesh, trace):
    """(seg_a, seg_b, face_per_segment) for one routed polyline.

    Each chord between consecutive samples lies in one of the two samples'
    faces, but which one depends on march direction (crossing samples carry
    the face being entered, and half of a two-front trace is reversed), so
    the owner is picked geometrically: whichever candidate contains both
    endpoints best.
    """
    pts = trace.points
    faces = np.array([s.face for s in trace.samples], dtype=np.int64)
    keep = np.linalg.norm(np.diff(pts, axis=0), axis=1) > 1e-12
    a, b = pts[:-1][keep], pts[1:][keep]
    fa, fb = faces[:-1][keep], faces[1:][keep]
    score_a = np.minimum(
        _bary_batch(mesh, fa, a).min(axis=1), _bary_batch(mesh, fa, b).min(axis=1)
    )
    score_b = np.minimum(
        _bary_batch(mesh, fb, a).min(axis=1), _bary_batch(mesh, fb, b).min(axis=1)
    )
    return a, b, np.where(score_a >= score_b, fa, fb)


def _resample(seg_a, seg_b, seg_face, step):
    """Subdivide chords to at most ``step`` so inserted apex points are as
    dense as the refined mesh around them."""
    out_pts, out_face = [], []
    for a, b, f in zip(seg_a, seg_b, seg_face):
        n = max(1, int(math.ceil(np.linalg.norm(b - a) / step)))
        for i in range(n):
            out_pts.append(a + (b - a) * (i / n))
            out_face.append(f)
    out_pts.append(seg_b[-1])
    out_face.append(seg_face[-1])
    pts = np.array(out_pts)
    face = np.array(out_face, dtype=np.int64)
    # marching nudges crossings 1e-6 off mesh vertices, leaving point pairs a
    # micron apart; inserting both would build micro-triangles
    keep = np.ones(len(pts), dtype=bool)
    last = 0
    for i in range(1, len(pts)):
        if np.linalg.norm(pts[i] - pts[last]) < 1e-4:
            keep[i] = False
        else:
            last = i
    return pts[keep], face[keep]


# -- band patch ----------------------------------------------------------------


class _Patch:
    """A mutable submesh: band faces lifted out of the mesh for carving.

    Boundary edges (shared with faces left behind) are frozen; they are
    never split, so the patch drops back in conformally.

    Every vertex carries the smooth normal of the base mesh, interpolated
    through splits.  Displacing along these instead of recomputed patch
    normals matters: patch normals pick up triangulation noise, and depth
    times that noise is enough lateral drift to fold the groove walls
    into each other.
    """

    def __init__(self, mesh: TriMesh, face_ids):
        self.mesh = mesh
        self.face_ids = np.asarray(sorted(face_ids), dtype=np.int64)
        used = np.unique(mesh.faces[self.face_ids])
        self.global_vids = used
        gmap = {int(g): i for i, g in enumerate(used)}
        self.n_orig_verts = len(used)
        self.pos = [mesh.vertices[g].copy() for g in used]
        self.nrm = [mesh.vertex_normals[g].copy() for g in used]
        self.faces = {}
        self.face_root = {}
        self.root_faces = {}
        self.edge_faces = {}
        self._next_fid = 0
        in_band = set(int(f) for f in self.face_ids)
        self.frozen = set()
        for g in self.face_ids:
            tri = tuple(gmap[int(v)] for v in mesh.faces[g])
            fid = self._add_face(tri, root=int(g))
            self.root_faces.setdefault(int(g), set()).add(fid)
            for k in range(3):
                nb = int(mesh.face_adjacency[g, k])
                if nb == -1 or nb not in in_band:
                    a, b = tri[(k + 1) % 3], tri[(k + 2) % 3]
                    self.frozen.add(self._ekey(a, b))

    @staticmethod
    def _ekey(a, b):
        return (a, b) if a < b else (b, a)

    def _add_face(self, tri, root):
        fid = self._next_fid
        self._next_fid += 1
        self.faces[fid] = tri
        self.face_root[fid] = root
        for i in range(3):
            k = self._ekey(tri[i], tri[(i + 1) % 3])
            self.edge_faces.setdefault(k, set()).add(fid)
        return fid

    def _remove_face(self, fid):
        tri = self.faces.pop(fid)
        root = self.face_root.pop(fid)
        self.root_faces[root].discard(fid)
        for i in range(3):
            k = self._ekey(tri[i], tri[(i + 1) % 3])
            s = self.edge_faces.get(k)
            if s is not None:
                s.discard(fid)
                if not s:
                    del self.edge_faces[k]
        return root

    def _register(self, tri, root):
        fid = self._add_face(tri, root)
        self.root_faces[root].add(fid)
        return fid

    def add_vertex(self, p, n) -> int:
        self.pos.append(np.asarray(p, dtype=np.float64))
        self.nrm.append(_unit(n))
        return len(self.pos) - 1

    def _bary_in(self, fid, p):
        a, b, c = (self.pos[v] for v in self.faces[fid])
        v0, v1, v2 = b - a, c - a, p - a
        d00 = v0 @ v0
        d01 = v0 @ v1
        d11 = v1 @ v1
        d20 = v2 @ v0
        d21 = v2 @ v1
        den = d00 * d11 - d01 * d01
        if den <= 0:
            return None
        v = (d11 * d20 - d01 * d21) / den
        w = (d00 * d21 - d01 * d20) / den
        return np.array([1.0 - v - w, v, w])

    def locate(self, p, root):
        """Containing face among the current faces covering ``root``."""
        best, best_bary, best_min = None, None, -np.inf
        for fid in self.root_faces[root]:
            bary = self._bary_in(fid, p)
            if bary is None:
                continue
            m = bary.min()
            if m > best_min:
                best, best_bary, best_min = fid, bary, m
        if best is None or best_min < -1e-6:
            raise EngraveError("trace point falls outside its face band")
        return best, best_bary

    def insert_point(self, p, root) -> int:
        """Insert a trace point as a patch vertex; returns its vid.

        Snap zones are metric, not barycentric: a point closer than
        _SNAP_MM to a vertex reuses it, closer than that to an edge splits
        the edge at the projection.  Fanning such points instead would
        build sliver faces that fold over once displaced.  Interior points
        fan their face into three.
        """
        fid, bary = self.locate(p, root)
        tri = self.faces[fid]
        corners = [self.pos[v] for v in tri]
        dv = [float(np.linalg.norm(p - q)) for q in corners]
        nearest = int(np.argmin(dv))
        if dv[nearest] < _SNAP_MM:
            return tri[nearest]
        best = None
        for i in range(3):
            u, v = tri[(i + 1) % 3], tri[(i + 2) % 3]
            a, b = self.pos[u], self.pos[v]
            ab = b - a
            t = float((p - a) @ ab / max(ab @ ab, 1e-300))
            if not 0.0 < t < 1.0:
                continue
            q = a + t * ab
            d = float(np.linalg.norm(p - q))
            if best is None or d < best[0]:
                best = (d, u, v, q, t)
        if best is not None and best[0] < _SNAP_MM:
            return self._split_edge(best[1], best[2], best[3], best[4])
        n = sum(w * self.nrm[v] for w, v in zip(bary, tri))
        w = self.add_vertex(p, n)
        a, b, c = tri
        root = self._remove_face(fid)
        for child in ((a, b, w), (b, c, w), (c, a, w)):
            self._register(child, root)
        return w

    def _split_edge(self, u, v, p, t=0.5) -> int:
        k = self._ekey(u, v)
        if k in self.frozen:
            raise EngraveError("trace reaches the edge of its face band")
        w = self.add_vertex(p, (1.0 - t) * self.nrm[u] + t * self.nrm[v])
        for fid in list(self.edge_faces.get(k, ())):
            tri = self.faces[fid]
            root = self._remove_face(fid)
            # rotate so the split edge leads in face order
            for r in range(3):
                a, b, c = tri[r], tri[(r + 1) % 3], tri[(r + 2) % 3]
                if {a, b} == {u, v}:
                    self._register((a, w, c), root)
                    self._register((w, b, c), root)
                    break
            else:
                raise EngraveError("edge bookkeeping out of sync")
        return w

    def arrays(self):
        verts = np.array(self.pos)
        faces = np.array([self.faces[f] for f in sorted(self.faces)], dtype=np.int64)
        return verts, faces

    def normal_array(self):
        return np.array(self.nrm)


def _unit(v):
    v = np.asarray(v, dtype=np.float64)
    n = np.linalg.norm(v)
    if n < 1e-300:
        raise EngraveError("zero-length normal")
    return v / n


def _conforming_refine(verts, faces, frozen, need_split, vnorms=None, max_passes=12):
    """Bisect edges of flagged faces until they fit, keeping conformity.

    ``need_split(verts, faces) -> (face_mask, edge_limit)`` decides which
    faces still need work and the target edge length.  Frozen edges are
    never split.  ``vnorms``, when given, is carried along by midpoint
    interpolation.  Returns (verts, faces[, vnorms]) as grown arrays.
    """
    pos = list(verts)
    nrm = None if vnorms is None else list(vnorms)
    for _ in range(max_passes):
        V = np.array(pos)
        mask, limit = need_split(V, faces)
        if not mask.any():
            break
        tri = V[faces]
        elen = np.stack(
            [
                np.linalg.norm(tri[:, 1] - tri[:, 0], axis=1),
                np.linalg.norm(tri[:, 2] - tri[:, 1], axis=1),
                np.linalg.norm(tri[:, 0] - tri[:, 2], axis=1),
            ],
            axis=1,
        )
        mids = {}
        for f in np.nonzero(mask)[0]:
            for e in range(3):
                if elen[f, e] <= limit:
                    continue
                a, b = faces[f, e], faces[f, (e + 1) % 3]
                k = (a, b) if a < b else (b, a)
                if k in frozen or k in mids:
                    continue
                pos.append(0.5 * (pos[a] + pos[b]))
                if nrm is not None:
                    nrm.append(_unit(nrm[a] + nrm[b]))
                mids[k] = len(pos) - 1
        if not mids:
            break
        faces = _apply_pattern_split(np.array(pos), faces, mids)
    if nrm is None:
        return np.array(pos), faces
    return np.array(pos), faces, np.array(nrm)


def _apply_pattern_split(verts, faces, mids):
    def mid(a, b):
        return mids.get((a, b) if a < b else (b, a))

    out = []
    for a, b, c in faces:
        m = (mid(a, b), mid(b, c), mid(c, a))
        n = sum(x is not None for x in m)
        if n == 0:
            out.append((a, b, c))
        elif n == 3:
            out += [
                (a, m[0], m[2]), (m[0], b, m[1]),
                (m[2], m[1], c), (m[0], m[1], m[2]),
            ]
        else:
            # rotate so edge (a, b) is split; for two splits, (b, c) too
            for _ in range(3):
                if m[0] is not None and (n == 1 or m[1] is not None):
                    break
                a, b, c = b, c, a
                m = (m[1], m[2], m[0])
            if n == 1:
                out += [(a, m[0], c), (m[0], b, c)]
            else:
                # quad (a, m0, m1, c) split along its shorter diagonal
                if np.linalg.norm(verts[a] - verts[m[1]]) <= np.linalg.norm(
                    verts[m[0]] - verts[c]
                ):
                    out += [(m[0], b, m[1]), (a, m[0], m[1]), (a, m[1], c)]
                else:
                    out += [(m[0], b, m[1]), (a, m[0], c), (m[0], m[1], c)]
    return np.array(out, dtype=np.int64)


# -- channels ------------------------------------------------------------------


def _band_faces(mesh: TriMesh, seg_a, seg_b, reach):
    """Faces that can possibly matter: any vertex within reach plus the
    face's own longest edge.  Cheap per-vertex bounding-box prefilter keeps
    the exact distance pass small on big meshes."""
    V = mesh.vertices
    tri = V[mesh.faces]
    elen = np.stack(
        [
            np.linalg.norm(tri[:, 1] - tri[:, 0], axis=1),
            np.linalg.norm(tri[:, 2] - tri[:, 1], axis=1),
            np.linalg.norm(tri[:, 0] - tri[:, 2], axis=1),
        ],
        axis=1,
    )
    longest = elen.max(axis=1)
    vmax = np.zeros(len(V))
    for e in range(3):
        np.maximum.at(vmax, mesh.faces[:, e], longest)

    lo = np.minimum(seg_a.min(axis=0), seg_b.min(axis=0))
    hi = np.maximum(seg_a.max(axis=0), seg_b.max(axis=0))
    margin = (reach + 2.0 * vmax)[:, None]
    box = np.maximum(lo[None, :] - margin - V, 0) + np.maximum(
        V - hi[None, :] - margin, 0
    )
    candidate = np.nonzero((box == 0).all(axis=1))[0]

    vdist = np.full(len(V), np.inf)
    if len(candidate):
        vdist[candidate], _ = _segment_distances(V[candidate], seg_a, seg_b)
    fmin = np.minimum.reduce([vdist[mesh.faces[:, k]] for k in range(3)])
    return np.nonzero(fmin <= reach + longest)[0], vdist


def engrave_channels(mesh: TriMesh, traces, profile: ChannelProfile) -> EngraveResult:
    """Carve a V-groove under every routed trace.

    Depth profile over distance d to the nearest trace:
    ``depth * (1 - d / (width/2))`` for d below width/2, exactly zero
    beyond.  Vertices outside the band keep their exact bits.
    """
    traces = list(traces)
    for t in traces:
        if not t.routed:
            raise EngraveError("only routed traces can be engraved")
        for s in t.samples:
            mesh.check_point(s)
    if not traces:
        return EngraveResult(mesh, 0, {"traces": []})

    half = profile.channel_width / 2.0
    reach = half + profile.falloff_width
    target = profile.channel_width / 4.0

    seg_a, seg_b, seg_face, seg_trace = [], [], [], []
    for i, t in enumerate(traces):
        a, b, f = _trace_segments(mesh, t)
        seg_a.append(a)
        seg_b.append(b)
        seg_face.append(f)
        seg_trace.append(np.full(len(a), i, dtype=np.int64))
    seg_a = np.vstack(seg_a)
    seg_b = np.vstack(seg_b)
    seg_face = np.concatenate(seg_face)
    seg_trace = np.concatenate(seg_trace)
    if len(seg_a) == 0:
        return EngraveResult(mesh, 0, {"traces": [0.0] * len(traces)})
    seg_normal = mesh.face_normals[seg_face]

    band, _ = _band_faces(mesh, seg_a, seg_b, reach)
    patch = _Patch(mesh, band)

    # make every trace point a real vertex so the groove floor hits full depth
    pts, roots = _resample(seg_a, seg_b, seg_face, target)
    for p, r in zip(pts, roots):
        patch.insert_point(p, int(r))

    verts, faces = patch.arrays()

    # vertices never move during refinement, so distances accumulate
    dcache = {"d": np.zeros(0), "i": np.zeros(0, dtype=np.int64)}

    def vert_dist(V):
        done = len(dcache["d"])
        if done < len(V):
            nd, ni = _segment_distances(V[done:], seg_a, seg_b)
            dcache["d"] = np.concatenate([dcache["d"], nd])
            dcache["i"] = np.concatenate([dcache["i"], ni])
        return dcache["d"]

    def need_split(V, F):
        d = vert_dist(V)
        fmin = np.minimum.reduce([d[F[:, k]] for k in range(3)])
        tri = V[F]
        longest = np.maximum.reduce(
            [
                np.linalg.norm(tri[:, 1] - tri[:, 0], axis=1),
                np.linalg.norm(tri[:, 2] - tri[:, 1], axis=1),
                np.linalg.norm(tri[:, 0] - tri[:, 2], axis=1),
            ]
        )
        return (fmin <= reach) & (longest > target), target

    verts, faces, vnorms = _conforming_refine(
        verts, faces, patch.frozen, need_split, vnorms=patch.normal_array()
    )

    vert_dist(verts)
    dist, seg_idx = dcache["d"], dcache["i"]
    same_side = np.einsum("ij,ij->i", vnorms, seg_normal[seg_idx]) > 0.0
    depth = np.where(
        (dist < half) & same_side,
        profile.channel_depth * (1.0 - dist / half),
        0.0,
    )
    moved = depth > 0.0
    verts = verts - depth[:, None] * vnorms

    if _self_intersection_count(verts, faces) > 0:
        raise EngraveError(
            "channel displacement self-intersects; reduce channel_depth"
        )

    per_trace = [0.0] * len(traces)
    for ti in range(len(traces)):
        sel = moved & (seg_trace[seg_idx] == ti)
        if sel.any():
            per_trace[ti] = float(depth[sel].max())

    out = _merge_patch(mesh, patch, verts, faces)
    return EngraveResult(out, int(moved.sum()), {"traces": per_trace})


def _merge_patch(mesh: TriMesh, patch: _Patch, verts, faces) -> TriMesh:
    """Drop the carved patch back into the untouched remainder."""
    n_mesh = mesh.n_vertices
    new_verts = np.vstack([mesh.vertices, verts[patch.n_orig_verts:]])
    new_verts[patch.global_vids] = verts[: patch.n_orig_verts]

    local_to_global = np.concatenate(
        [
            patch.global_vids,
            np.arange(n_mesh, n_mesh + len(verts) - patch.n_orig_verts),
        ]
    )
    keep = np.ones(mesh.n_faces, dtype=bool)
    keep[patch.face_ids] = False
    new_faces = np.vstack([mesh.faces[keep], local_to_global[faces]])
    return TriMesh(new_verts, new_faces.astype(np.int32))


# -- holes ---------------------------------------------------------------------


def drill_holes(
    mesh: TriMesh, pin_points, profile: ChannelProfile, source_mesh=None
) -> EngraveResult:
    """Subtract a cylinder under every pin point.

    Blind by default (``hole_depth``); drills through when the solid is
    thinner than that along the hole axis.  Holes are applied one at a
    time; a hole that fails on local geometry is reported and skipped
    while the rest still apply.

    ``pin_points`` are face/bary references.  When drilling geometry
    derived from the design surface (e.g. after carving channels), pass
    the design surface as ``source_mesh``: face ids do not survive the
    rebuild, so the points must be resolved against the mesh they were
    made on.
    """
    if source_mesh is None:
        source_mesh = mesh
    pin_points = list(pin_points)
    report = []
    current = mesh
    for i, sp in enumerate(pin_points):
        try:
            current = _drill_one(current, sp, source_mesh, profile)
            report.append({"pin": i, "ok": True})
        except EngraveError as e:
            report.append({"pin": i, "ok": False, "error": str(e)})
    return EngraveResult(current, 0, {"holes": report})


def _drill_one(mesh: TriMesh, sp, source_mesh, profile: ChannelProfile) -> TriMesh:
    center = source_mesh.embed(sp)
    axis = source_mesh.normal_at(sp, mode="vertex")
    r = profile.hole_diameter / 2.0

    through, depth = _probe_depth(mesh, center, axis, r, profile.hole_depth)

    patches = []
    patch, rim = _cut_disk(mesh, center, axis, r, facing=axis)
    patches.append(patch)
    if through:
        patch2, rim2 = _cut_disk(
            mesh,
            center - axis * depth,
            axis,
            r,
            facing=-axis,
            exclude=patch.face_ids,
        )
        patches.append(patch2)
    verts, faces = _merge_patch_faces(mesh, patches)
    rim_g = patch.local_to_global[rim]
    if through:
        extra, wall = _zipper_walls(
            verts, rim_g, patches[1].local_to_global[rim2], center, axis
        )
    else:
        extra, wall = _blind_walls(verts, rim_g, axis, depth)
    all_verts = np.vstack([verts, extra]) if len(extra) else verts
    all_faces = np.vstack([faces, wall])
    return TriMesh(all_verts, all_faces.astype(np.int32))


def _probe_depth(mesh, center, axis, r, hole_depth):
    """Cast down the hole axis to find the exit surface, if any is nearer
    than the requested depth."""
    o = center - axis * (r * 0.1)
    d = -axis
    tri = mesh.vertices[mesh.faces]
    hit_t = _ray_triangles(o, d, tri)
    facing = (mesh.face_normals @ d) > 0.1
    ok = np.isfinite(hit_t) & facing & (hit_t > r * 0.5)
    if not ok.any():
        return False, hole_depth
    t = float(hit_t[ok].min())
    if t <= hole_depth:
        return True, t
    return False, hole_depth


def _ray_triangles(o, d, tri):
    """Ray/triangle hit distances (inf where missed)."""
    e1 = tri[:, 1] - tri[:, 0]
    e2 = tri[:, 2] - tri[:, 0]
    p = np.cross(d[None, :], e2)
    det = np.einsum("ij,ij->i", e1, p)
    t = np.full(len(tri), np.inf)
    ok = np.abs(det) > 1e-12
    inv = np.where(ok, 1.0 / np.where(ok, det, 1.0), 0.0)
    s = o[None, :] - tri[:, 0]
    u = np.einsum("ij,ij->i", s, p) * inv
    q = np.cross(s, e1)
    v = (q @ d) * inv
    tt = np.einsum("ij,ij->i", e2, q) * inv
    hit = ok & (u >= -1e-9) & (v >= -1e-9) & (u + v <= 1 + 1e-9) & (tt > 1e-9)
    t[hit] = tt[hit]
    return t


def _grow_selection(faces, seed, zone):
    """Flood ``seed`` across shared edges onto every reachable ``zone``
    face. The flood never leaves ``zone``, so faces elsewhere stay put."""
    pool = np.nonzero(seed | zone)[0]
    if len(pool) == 0:
        return seed.copy()
    sub = faces[pool]
    n = int(sub.max()) + 1
    ea = sub.ravel()
    eb = sub[:, [1, 2, 0]].ravel()
    key = np.minimum(ea, eb).astype(np.int64) * n + np.maximum(ea, eb)
    order = np.argsort(key, kind="stable")
    k = key[order]
    f = np.repeat(np.arange(len(sub)), 3)[order]
    same = k[1:] == k[:-1]
    pa, pb = f[:-1][same], f[1:][same]
    s = seed[pool].copy()
    z = zone[pool]
    while True:
        ga = s[pa] & ~s[pb] & z[pb]
        gb = s[pb] & ~s[pa] & z[pa]
        if not (ga.any() or gb.any()):
            break
        s[pb[ga]] = True
        s[pa[gb]] = True
    out = seed.copy()
    out[pool] = s
    return out


def _cut_disk(mesh: TriMesh, center, axis, r, facing, exclude=None):
    """Open a circular hole: split crossing edges exactly on the cylinder,
    drop inside faces, return (patch, rim loop of directed vertices).

    ``facing`` selects which side of the solid to cut (entry vs exit
    surface of a through hole)."""
    axis = axis / np.linalg.norm(axis)

    def radial(P):
        w = P - center
        w = w - np.outer(w @ axis, axis)
        return np.linalg.norm(w, axis=1)

    V = mesh.vertices
    rad = radial(V)
    along = (V - center) @ axis
    tri = V[mesh.faces]
    longest = np.maximum.reduce(
        [
            np.linalg.norm(tri[:, 1] - tri[:, 0], axis=1),
            np.linalg.norm(tri[:, 2] - tri[:, 1], axis=1),
            np.linalg.norm(tri[:, 0] - tri[:, 2], axis=1),
        ]
    )
    frad = np.minimum.reduce([rad[mesh.faces[:, k]] for k in range(3)])
    falong = np.minimum.reduce(
        [np.abs(along[mesh.faces[:, k]]) for k in range(3)]
    )
    zone = (frad < 4.0 * r + longest) & (falong < 2.0 * r + longest)
    fsel = zone & ((mesh.face_normals @ facing) > 0.1)
    # the facing test separates entry from exit surface, but a steep face
    # (a carved channel wall under the pin) can fail it while sitting in
    # the middle of the bore; grow the patch across shared edges so every
    # such face joins the cut.  eligible faces are exactly those dipping
    # inside the cylinder: anything looser (e.g. a radius bound padded by
    # edge length) swallows the neighbouring pin's fresh bore walls and
    # the refiner grinds them to dust
    zone_ids = np.nonzero(zone)[0]
    w = V - center
    w = w - np.outer(w @ axis, axis)
    zf = mesh.faces[zone_ids]
    dmin = np.full(len(zone_ids), np.inf)
    for k in range(3):
        A = w[zf[:, k]]
        D = w[zf[:, (k + 1) % 3]] - A
        dd = np.einsum("ij,ij->i", D, D)
        t = -np.einsum("ij,ij->i", A, D) / np.maximum(dd, 1e-300)
        P = A + np.clip(t, 0.0, 1.0)[:, None] * D
        dmin = np.minimum(dmin, np.linalg.norm(P, axis=1))
    ztri = V[zf]
    pierced = np.isfinite(_ray_triangles(center, axis, ztri)) | np.isfinite(
        _ray_triangles(center, -axis, ztri)
    )
    grow = np.zeros(len(mesh.faces), dtype=bool)
    grow[zone_ids[(dmin < r * 1.02) | pierced]] = True
    fsel = _grow_selection(mesh.faces, fsel, grow)
    face_ids = np.nonzero(fsel)[0]
    if exclude is not None:
        face_ids = np.setdiff1d(face_ids, exclude)
    if len(face_ids) == 0:
        raise EngraveError("no surface under the pin")
    patch = _Patch(mesh, face_ids)

    verts, faces = patch.arrays()

    def need_split(Vp, Fp):
        tri = Vp[Fp]
        cen = tri.mean(axis=1)
        longest = np.maximum.reduce(
            [
                np.linalg.norm(tri[:, 1] - tri[:, 0], axis=1),
                np.linalg.norm(tri[:, 2] - tri[:, 1], axis=1),
                np.linalg.norm(tri[:, 0] - tri[:, 2], axis=1),
            ]
        )
        return (radial(cen) < 2.0 * r) & (longest > r / 4.0), r / 4.0

    verts, faces = _conforming_refine(verts, faces, patch.frozen, need_split)
    verts, faces = _split_on_circle(verts, faces, patch.frozen, center, axis, r)

    rad = radial(verts)
    tri_cen = verts[faces].mean(axis=1)
    inside = radial(tri_cen) < r
    if not inside.any():
        raise EngraveError("hole does not intersect the surface")
    kept = faces[~inside]
    dropped = faces[inside]

    rim = _boundary_loop(kept, dropped)
    if rim is None:
        raise EngraveError("hole rim is not a single loop")
    if np.any(np.abs(rad[rim] - r) > r * 0.2):
        raise EngraveError("hole rim strays off the drill circle")
    # every dropped edge must be rimmed by a kept face or another dropped
    # one; an edge with neither twin borders a face outside the patch and
    # removing it would tear the surface open
    dropped_edges = {(a, b) for a, b, c in dropped for a, b in ((a, b), (b, c), (c, a))}
    kept_edges = {(a, b) for a, b, c in kept for a, b in ((a, b), (b, c), (c, a))}
    for u, v in dropped_edges:
        if (v, u) not in dropped_edges and (v, u) not in kept_edges:
            raise EngraveError("drill region leaks outside the selected patch")

    patch.final_verts = verts
    patch.final_faces = kept
    return patch, rim


def _split_on_circle(verts, faces, frozen, center, axis, r, max_rounds=6):
    """Split every edge where it crosses the drill cylinder; crossing
    points come from the exact quadratic, so rim vertices sit on the
    circle to machine precision."""
    pos = list(verts)
    for _ in range(max_rounds):
        V = np.array(pos)
        w = V - center
        w = w - np.outer(w @ axis, axis)
        mids = {}
        for a, b, c in faces:
            for u, v in ((a, b), (b, c), (c, a)):
                k = (u, v) if u < v else (v, u)
                if k in mids or k in frozen:
                    continue
                t = _circle_crossing(w[u], w[v], r)
                if t is None:
                    continue
                pos.append(pos[u] + t * (np.asarray(pos[v]) - pos[u]))
                mids[k] = len(pos) - 1
        if not mids:
            break
        faces = _apply_pattern_split(np.array(pos), faces, mids)
    return np.array(pos), faces


def _circle_crossing(qu, qv, r):
    """First parameter t in (0,1) where the radial component crosses r.

    Crossings within 1e-5 mm of either endpoint are ignored: near-tangent
    edges otherwise re-split a micron from the previous round's vertex and
    collapse a triangle.
    """
    d = qv - qu
    a = d @ d
    if a < 1e-300:
        return None
    b = 2.0 * (qu @ d)
    c = qu @ qu - r * r
    disc = b * b - 4 * a * c
    if disc <= 0:
        return None
    s = math.sqrt(disc)
    eps = 1e-5 / math.sqrt(a)
    if eps >= 0.5:
        return None
    for t in sorted(((-b - s) / (2 * a), (-b + s) / (2 * a))):
        if eps < t < 1.0 - eps:
            return t
    return None


def _boundary_loop(kept, dropped):
    """Directed rim loop: edges of kept faces whose twin got dropped."""
    dropped_edges = set()
    for a, b, c in dropped:
        dropped_edges |= {(a, b), (b, c), (c, a)}
    nxt = {}
    for a, b, c in kept:
        for u, v in ((a, b), (b, c), (c, a)):
            if (v, u) in dropped_edges:
                if u in nxt:
                    return None
                nxt[u] = v
    if not nxt:
        return None
    start = min(nxt)
    loop = [start]
    while True:
        cur = nxt.get(loop[-1])
        if cur is None:
            return None
        if cur == start:
            break
        loop.append(cur)
        if len(loop) > len(nxt):
            return None
    if len(loop) != len(nxt):
        return None  # more than one loop
    return np.array(loop, dtype=np.int64)


def _merge_patch_faces(mesh, patches):
    """Rebuild full-mesh arrays with each patch's final faces swapped in.

    Returns (verts, faces, offsets) where offsets map each patch's local
    vertex ids into the rebuilt arrays.
    """
    keep = np.ones(mesh.n_faces, dtype=bool)
    parts_f = []
    new_verts = [mesh.vertices]
    base = mesh.n_vertices
    maps = []
    for p in patches:
        keep[p.face_ids] = False
        n_new = len(p.final_verts) - p.n_orig_verts
        local_to_global = np.concatenate(
            [p.global_vids, np.arange(base, base + n_new)]
        )
        new_verts.append(p.final_verts[p.n_orig_verts:])
        base += n_new
        parts_f.append(local_to_global[p.final_faces])
        maps.append(local_to_global)
    verts = np.vstack(new_verts)
    for p, m in zip(patches, maps):
        verts[p.global_vids] = p.final_verts[: p.n_orig_verts]
        p.local_to_global = m
    faces = np.vstack([mesh.faces[keep]] + parts_f)
    return verts, faces


def _blind_walls(verts, rim, axis, depth):
    """Wall ring plus bottom cap for a blind hole.

    The rim loop from kept faces runs clockwise seen from outside along
    the hole axis, so (rim_i, bot_i, bot_j) walls face the bore and the
    cap fan (center, bot_j, bot_i) faces up out of the material.
    """
    n = len(rim)
    base = len(verts)
    bottom = verts[rim] - axis * depth
    centroid = bottom.mean(axis=0, keepdims=True)
    extra = np.vstack([bottom, centroid])
    cvid = base + n
    tris = []
    for i in range(n):
        j = (i + 1) % n
        tris.append((rim[i], base + i, base + j))
        tris.append((rim[i], base + j, rim[j]))
        tris.append((cvid, base + j, base + i))
    return extra, np.array(tris, dtype=np.int64)


def _zipper_walls(verts, rim_top, rim_bot, center, axis):
    """Tube wall between the entry and exit rims of a through hole.

    Both rims arrive clockwise as seen from outside their own surface;
    the exit rim is reversed so both advance the same way around the
    axis, then a two-pointer sweep over unwrapped angles emits the strip.
    """
    rim_bot = rim_bot[::-1]
    e1 = np.array([1.0, 0.0, 0.0]) - axis[0] * axis
    if np.linalg.norm(e1) < 1e-6:
        e1 = np.array([0.0, 1.0, 0.0]) - axis[1] * axis
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(axis, e1)

    def unwrapped(loop):
        w = verts[loop] - center
        th = np.arctan2(w @ e2, w @ e1)
        # clockwise from +axis means decreasing angle; unwrap accordingly
        out = [th[0]]
        for t in th[1:]:
            while t > out[-1]:
                t -= 2.0 * math.pi
            out.append(t)
        return np.array(out)

    # start both loops at their angular maximum so the sweeps align
    def rotate_to_max(loop):
        w = verts[loop] - center
        th = np.arctan2(w @ e2, w @ e1)
        k = int(np.argmax(th))
        return np.roll(loop, -k)

    top = rotate_to_max(rim_top)
    bot = rotate_to_max(rim_bot)
    ta = unwrapped(top)
    tb = unwrapped(bot)

    tris = []
    i = j = 0
    while i < len(top) - 1 or j < len(bot) - 1:
        advance_top = j >= len(bot) - 1 or (
            i < len(top) - 1 and ta[i + 1] >= tb[j + 1]
        )
        if advance_top:
            tris.append((top[i], bot[j], top[i + 1]))
            i += 1
        else:
            tris.append((top[i], bot[j], bot[j + 1]))
            j += 1
    tris.append((top[-1], bot[-1], top[0]))
    tris.append((top[0], bot[-1], bot[0]))
    return np.zeros((0, 3)), np.array(tris, dtype=np.int64)


# -- validation ----------------------------------------------------------------


@dataclass
class PrintReport:
    boundary_edge_count: int
    nonmanifold_edge_count: int
    mixed_winding_count: int
    signed_volume: float
    self_intersection_count: int

    @property
    def watertight(self) -> bool:
        return self.boundary_edge_count == 0

    @property
    def ok(self) -> bool:
        return (
            self.watertight
            and self.nonmanifold_edge_count == 0
            and self.mixed_winding_count == 0
            and self.signed_volume > 0
            and self.self_intersection_count == 0
        )

    def format_text(self) -> str:
        flags = [
            ("watertight", self.watertight),
            ("manifold", self.nonmanifold_edge_count == 0),
            ("consistent winding", self.mixed_winding_count == 0),
            ("outward oriented", self.signed_volume > 0),
            ("intersection free", self.self_intersection_count == 0),
        ]
        lines = [
            f"  {'PASS' if good else 'FAIL'}  {name}" for name, good in flags
        ]
        lines.append(f"  volume {self.signed_volume:.1f} mm^3")
        return "\n".join(lines)


def validate_printable(mesh) -> PrintReport:
    """Printability report; accepts defective meshes (validate=False)."""
    V, F = mesh.vertices, mesh.faces
    i, j, k = F[:, 0], F[:, 1], F[:, 2]
    ea = np.concatenate([i, j, k]).astype(np.int64)
    eb = np.concatenate([j, k, i]).astype(np.int64)
    n = len(V)
    lo, hi = np.minimum(ea, eb), np.maximum(ea, eb)
    key = lo * n + hi
    dkey = ea * n + eb
    uniq, counts = np.unique(key, return_counts=True)
    boundary = int((counts == 1).sum())
    nonmanifold = int((counts > 2).sum())
    # paired edges traversed the same direction mean inconsistent winding
    duniq, dcounts = np.unique(dkey, return_counts=True)
    mixed = int((dcounts > 1).sum())

    vol = float(
        np.einsum("ij,ij->i", V[i], np.cross(V[j], V[k])).sum() / 6.0
    )
    crossings = _self_intersection_count(V, F)
    return PrintReport(boundary, nonmanifold, mixed, vol, crossings)


def _cell_rows(lo, hi, ids, gmin, cell):
    """(cell key, face id) rows covering each box, without a python loop."""
    ilo = np.floor((lo[ids] - gmin) / cell).astype(np.int64)
    ihi = np.floor((hi[ids] - gmin) / cell).astype(np.int64)
    span = ihi - ilo + 1
    tot = span.prod(axis=1)
    rid = np.repeat(np.arange(len(ids)), tot)
    off = np.arange(int(tot.sum()), dtype=np.int64)
    off -= np.repeat(np.cumsum(tot) - tot, tot)
    sy = span[rid, 1]
    sz = span[rid, 2]
    cx = ilo[rid, 0] + off // (sz * sy)
    cy = ilo[rid, 1] + (off // sz) % sy
    cz = ilo[rid, 2] + off % sz
    # interleave enough bits that distinct cells get distinct keys
    key = (cx << 42) ^ (cy << 21) ^ cz
    order = np.argsort(key, kind="stable")
    return key[order], ids[rid[order]]


def _group_bounds(keys):
    starts = np.flatnonzero(np.r_[True, keys[1:] != keys[:-1]])
    return starts, np.diff(np.r_[starts, len(keys)])


def _triu_pairs(keys, vals):
    """All unordered val pairs sharing a key, batched by group size."""
    starts, sizes = _group_bounds(keys)
    parts = []
    for m in np.unique(sizes):
        if m < 2:
            continue
        s = starts[sizes == m]
        ii, jj = np.triu_indices(int(m), 1)
        parts.append((vals[s[:, None] + ii].ravel(), vals[s[:, None] + jj].ravel()))
    if not parts:
        return np.empty(0, np.int64), np.empty(0, np.int64)
    return (np.concatenate([a for a, _ in parts]),
            np.concatenate([b for _, b in parts]))


def _product_pairs(keys_a, vals_a, keys_b, vals_b):
    """All (a, b) val pairs where a row of A and a row of B share a key."""
    sa, ca = _group_bounds(keys_a)
    sb, cb = _group_bounds(keys_b)
    common, ia, ib = np.intersect1d(
        keys_a[sa], keys_b[sb], return_indices=True
    )
    if len(common) == 0:
        return np.empty(0, np.int64), np.empty(0, np.int64)
    na, nb = ca[ia], cb[ib]
    tot = na * nb
    blk = np.repeat(np.arange(len(common)), tot)
    off = np.arange(int(tot.sum()), dtype=np.int64)
    off -= np.repeat(np.cumsum(tot) - tot, tot)
    a = vals_a[sa[ia][blk] + off // nb[blk]]
    b = vals_b[sb[ib][blk] + off % nb[blk]]
    return a, b


def _box_candidate_pairs(lo, hi):
    """Index pairs whose boxes share a spatial-hash cell.

    Faces hash at the power-of-two level matching their own size, so a
    handful of large faces over a sea of refined ones cannot blow up the
    table (a single shared grid does, in rows or in group sizes,
    whichever way the cell size is picked).  A pair meets at the coarser
    member's level: both boxes cover the cell holding any shared point.
    """
    ext = (hi - lo).max(axis=1)
    base = max(float(np.median(ext)), 1e-9)
    lvl = np.ceil(np.log2(np.maximum(ext / base, 1e-12))).astype(np.int64)
    lvl = np.maximum(lvl, 0)
    gmin = lo.min(axis=0)
    for L in np.unique(lvl):
        cell = base * float(2 ** int(L))
        owners = np.nonzero(lvl == L)[0]
        ok, of = _cell_rows(lo, hi, owners, gmin, cell)
        yield _triu_pairs(ok, of)
        finer = np.nonzero(lvl < L)[0]
        if len(finer):
            vk, vf = _cell_rows(lo, hi, finer, gmin, cell)
            yield _product_pairs(ok, of, vk, vf)


def _self_intersection_count(verts, faces, eps=1e-9) -> int:
    """Pairs of non-adjacent triangles that truly cross (coplanar contact
    and shared vertices do not count)."""
    tri = verts[faces]
    lo = tri.min(axis=1)
    hi = tri.max(axis=1)
    keep = []
    for pa, pb in _box_candidate_pairs(lo, hi):
        # AABB overlap cut before the exact test, batch by batch so the
        # candidate flood never sits in memory all at once
        ok = ((lo[pa] <= hi[pb] + eps) & (lo[pb] <= hi[pa] + eps)).all(axis=1)
        pa, pb = pa[ok], pb[ok]
        # adjacency: any shared vertex id exempts the pair
        shared = np.zeros(len(pa), dtype=bool)
        for x in range(3):
            for y in range(3):
                shared |= faces[pa, x] == faces[pb, y]
        pa, pb = pa[~shared], pb[~shared]
        if len(pa):
            keep.append(np.minimum(pa, pb) * len(faces) + np.maximum(pa, pb))
    if not keep:
        return 0
    pkey = np.unique(np.concatenate(keep))
    pa = pkey // len(faces)
    pb = pkey % len(faces)
    return int(_tri_tri_overlap(tri[pa], tri[pb], eps).sum())


def _tri_tri_overlap(T1, T2, eps):
    """Vectorized triangle-triangle intersection (interval method)."""
    n2 = np.cross(T2[:, 1] - T2[:, 0], T2[:, 2] - T2[:, 0])
    d1 = np.einsum("nij,nj->ni", T1 - T2[:, 0:1], n2)
    n1 = np.cross(T1[:, 1] - T1[:, 0], T1[:, 2] - T1[:, 0])
    d2 = np.einsum("nij,nj->ni", T2 - T1[:, 0:1], n1)

    sep1 = (d1 > eps).all(axis=1) | (d1 < -eps).all(axis=1)
    sep2 = (d2 > eps).all(axis=1) | (d2 < -eps).all(axis=1)
    coplanar = (np.abs(d1) <= eps).all(axis=1)
    candidate = ~(sep1 | sep2 | coplanar)

    result = np.zeros(len(T1), dtype=bool)
    idx = np.nonzero(candidate)[0]
    if len(idx):
        result[idx] = _interval_overlap(
            T1[idx], d1[idx], T2[idx], d2[idx], n1[idx], n2[idx], eps
        )
    return result


def _line_interval(proj, d, eps):
    """Span of a triangle's crossing points along the intersection line.

    ``proj`` are vertex projections on the line, ``d`` signed distances to
    the other plane; edges whose endpoints sit strictly one side contribute
    nothing."""
    a = (0, 1, 2)
    b = (1, 2, 0)
    da, db = d[:, a], d[:, b]
    denom = da - db
    crossing = ~(((da > eps) & (db > eps)) | ((da < -eps) & (db < -eps)))
    crossing &= np.abs(denom) >= 1e-14
    s = da / np.where(np.abs(denom) < 1e-14, 1.0, denom)
    crossing &= (s >= 0.0) & (s <= 1.0)
    val = proj[:, a] + s * (proj[:, b] - proj[:, a])
    usable = crossing.sum(axis=1) >= 2
    lo = np.where(crossing, val, np.inf).min(axis=1)
    hi = np.where(crossing, val, -np.inf).max(axis=1)
    return lo, hi, usable


def _interval_overlap(T1, d1, T2, d2, n1, n2, eps):
    line = np.cross(n2, n1)
    norm = np.linalg.norm(line, axis=1)
    fine = norm >= 1e-14
    line = line / np.where(fine, norm, 1.0)[:, None]
    lo1, hi1, u1 = _line_interval(np.einsum("nij,nj->ni", T1, line), d1, eps)
    lo2, hi2, u2 = _line_interval(np.einsum("nij,nj->ni", T2, line), d2, eps)
    span = np.minimum(hi1, hi2) - np.maximum(lo1, lo2)
    return fine & u1 & u2 & (span > eps)


def plane_section(mesh, origin, normal):
    """Segments where faces cross the plane; for profile measurements."""
    normal = np.asarray(normal, dtype=np.float64)
    normal = normal / np.linalg.norm(normal)
    V, F = mesh.vertices, mesh.faces
    d = (V - origin) @ normal
    dv = d[F]
    crossing = ~((dv > 0).all(axis=1) | (dv < 0).all(axis=1))
    segs = []
    for f in np.nonzero(crossing)[0]:
        pts = []
        for a, b in ((0, 1), (1, 2), (2, 0)):
            da, db = dv[f, a], dv[f, b]
            if da == 0.0 and db == 0.0:
                continue
            if (da > 0) == (db > 0) and da != 0 and db != 0:
                continue
            if da == db:
                continue
            s = da / (da - db)
            if 0.0 <= s <= 1.0:
                pts.append(V[F[f, a]] + s * (V[F[f, b]] - V[F[f, a]]))
        if len(pts) >= 2:
            segs.append((pts[0], pts[1]))
    return np.array(segs) if segs else np.zeros((0, 2, 3))
