"""Mesh file I/O: binary STL and ASCII OBJ (v/f records only).

STL carries an unindexed triangle soup, so loading welds vertices on a
1e-5 mm grid and rebuilds shared topology.  STL promises a closed solid;
open boundaries there are reported as defects.  OBJ is indexed and may
describe open sheets.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import MeshError, NonManifoldError
from .geometry import TriMesh

WELD_TOLERANCE = 1e-5  # mm

_STL_RECORD = np.dtype(
    [("normal", "<f4", (3,)), ("verts", "<f4", (3, 3)), ("attr", "<u2")]
)


def load_mesh(source, allow_boundary: bool | None = None) -> TriMesh:
    """Load a mesh from a path or raw bytes; the format is sniffed.

    ``allow_boundary`` overrides the per-format default (STL: closed
    required, OBJ: open sheets accepted).  Boundary violations and
    non-manifold edges raise :class:`NonManifoldError` listing the edges.
    """
    if isinstance(source, (str, Path)):
        data = Path(source).read_bytes()
    elif isinstance(source, (bytes, bytearray)):
        data = bytes(source)
    else:
        raise TypeError(f"expected path or bytes, got {type(source).__name__}")

    if _looks_like_obj(data):
        mesh = _load_obj(data)
        closed_required = False if allow_boundary is None else not allow_boundary
    elif _looks_like_stl(data):
        mesh = _load_stl(data)
        closed_required = True if allow_boundary is None else not allow_boundary
    else:
        raise MeshError("unrecognized mesh format (expected binary STL or ASCII OBJ)")

    if closed_required and mesh.boundary_edges:
        raise NonManifoldError(
            f"mesh is not closed: {len(mesh.boundary_edges)} boundary edges",
            mesh.boundary_edges,
        )
    return mesh


def save_mesh(mesh: TriMesh, format: str = "stl") -> bytes:
    """Serialize a mesh; round-trips through :func:`load_mesh` are stable
    to within the weld tolerance."""
    if mesh.n_faces == 0:
        raise MeshError("refusing to save an empty mesh")
    if format == "stl":
        return _save_stl(mesh)
    if format == "obj":
        return _save_obj(mesh)
    raise ValueError(f"unknown mesh format {format!r}")


# -- format sniffing ----------------------------------------------------------


def _looks_like_obj(data: bytes) -> bool:
    try:
        head = data[:4096].decode("utf-8")
    except UnicodeDecodeError:
        return False
    for line in head.splitlines():
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        return s.split(None, 1)[0] in ("v", "vn", "vt", "f", "o", "g", "s", "mtllib", "usemtl")
    return False


def _looks_like_stl(data: bytes) -> bool:
    if len(data) < 84:
        return False
    (count,) = struct.unpack_from("<I", data, 80)
    return len(data) == 84 + 50 * count


# -- STL ----------------------------------------------------------------------


def _load_stl(data: bytes) -> TriMesh:
    (count,) = struct.unpack_from("<I", data, 80)
    if count == 0:
        raise MeshError("empty mesh")
    records = np.frombuffer(data, dtype=_STL_RECORD, count=count, offset=84)
    soup = records["verts"].astype(np.float64).reshape(-1, 3)
    verts, faces = weld_vertices(soup)
    return TriMesh(verts, faces)


def weld_vertices(soup: np.ndarray, tolerance: float = WELD_TOLERANCE):
    """Merge positions that agree within ``tolerance`` by snapping to a grid.

    Returns canonical (grid-snapped) vertices and an index triple per input
    triangle.  Input is a flat (3n, 3) soup, three rows per triangle.
    """
    key = np.round(soup / tolerance).astype(np.int64)
    uniq, inverse = np.unique(key, axis=0, return_inverse=True)
    verts = uniq.astype(np.float64) * tolerance
    faces = inverse.reshape(-1, 3).astype(np.int32)
    return verts, faces


def _save_stl(mesh: TriMesh) -> bytes:
    header = b"meshwire binary STL" + b"\0" * 61
    records = np.zeros(mesh.n_faces, dtype=_STL_RECORD)
    records["normal"] = mesh.face_normals.astype(np.float32)
    records["verts"] = mesh.vertices[mesh.faces].astype(np.float32)
    return header + struct.pack("<I", mesh.n_faces) + records.tobytes()


# -- OBJ ----------------------------------------------------------------------


def _load_obj(data: bytes) -> TriMesh:
    verts = []
    faces = []
    for ln, raw in enumerate(data.decode("utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if parts[0] == "v":
            if len(parts) < 4:
                raise MeshError(f"OBJ line {ln}: vertex needs 3 coordinates")
            verts.append([float(x) for x in parts[1:4]])
        elif parts[0] == "f":
            idx = []
            for tok in parts[1:]:
                i = int(tok.split("/")[0])
                if i < 0:
                    i = len(verts) + 1 + i
                idx.append(i - 1)
            if len(idx) != 3:
                raise MeshError(f"OBJ line {ln}: only triangles are supported")
            faces.append(idx)
        # vn/vt/o/g/s/usemtl/mtllib records are ignored
    if not verts or not faces:
        raise MeshError("empty mesh")
    return TriMesh(np.array(verts, dtype=np.float64), np.array(faces, dtype=np.int32))


def _save_obj(mesh: TriMesh) -> bytes:
    out = []
    for x, y, z in mesh.vertices.tolist():
        out.append(f"v {x!r} {y!r} {z!r}")
    for a, b, c in mesh.faces:
        out.append(f"f {a + 1} {b + 1} {c + 1}")
    out.append("")
    return "\n".join(out).encode("utf-8")
