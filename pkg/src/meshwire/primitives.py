"""Procedural meshes used as substrates and test fixtures."""

from __future__ import annotations

import numpy as np

from .geometry import TriMesh


def make_plane(width: float, height: float, nx: int = 10, ny: int = 10) -> TriMesh:
    """Open rectangular sheet in the z=0 plane, centred on the origin.

    (nx+1)*(ny+1) vertices, 2*nx*ny faces, normals +z.
    """
    xs = np.linspace(-width / 2, width / 2, nx + 1)
    ys = np.linspace(-height / 2, height / 2, ny + 1)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    verts = np.stack([gx.ravel(), gy.ravel(), np.zeros(gx.size)], axis=1)

    faces = []
    for i in range(nx):
        for j in range(ny):
            a = i * (ny + 1) + j
            b = (i + 1) * (ny + 1) + j
            # split each cell along the same diagonal; +z winding
            faces.append((a, b, b + 1))
            faces.append((a, b + 1, a + 1))
    return TriMesh(verts, np.array(faces, dtype=np.int32))


def make_icosphere(subdivisions: int = 3, radius: float = 1.0) -> TriMesh:
    """Geodesic sphere from a subdivided icosahedron.

    Vertex/face counts follow 10*4^n + 2 and 20*4^n.  The vertex set is
    centrally symmetric: every vertex has an exact antipode.
    """
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    verts = np.array(
        [
            (-1, phi, 0), (1, phi, 0), (-1, -phi, 0), (1, -phi, 0),
            (0, -1, phi), (0, 1, phi), (0, -1, -phi), (0, 1, -phi),
            (phi, 0, -1), (phi, 0, 1), (-phi, 0, -1), (-phi, 0, 1),
        ],
        dtype=np.float64,
    )
    verts /= np.linalg.norm(verts[0])
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]

    verts = [v for v in verts]
    for _ in range(subdivisions):
        midpoint = {}

        def mid(a, b):
            key = (a, b) if a < b else (b, a)
            if key not in midpoint:
                m = verts[a] + verts[b]
                m /= np.linalg.norm(m)
                midpoint[key] = len(verts)
                verts.append(m)
            return midpoint[key]

        nxt = []
        for a, b, c in faces:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            nxt += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = nxt

    v = np.array(verts) * radius
    return TriMesh(v, np.array(faces, dtype=np.int32))


def make_slab(
    width: float, depth: float, thickness: float, nx: int = 10, ny: int = 10
) -> TriMesh:
    """Closed box with gridded top (z=thickness) and bottom (z=0) faces.

    The top grid is what gets engraved in tests; side walls are one quad
    strip per boundary cell.  Watertight by construction.
    """
    xs = np.linspace(-width / 2, width / 2, nx + 1)
    ys = np.linspace(-depth / 2, depth / 2, ny + 1)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    n_grid = gx.size
    top = np.stack([gx.ravel(), gy.ravel(), np.full(n_grid, thickness)], axis=1)
    bot = np.stack([gx.ravel(), gy.ravel(), np.zeros(n_grid)], axis=1)
    verts = np.vstack([top, bot])

    def vid(i, j, bottom=False):
        return i * (ny + 1) + j + (n_grid if bottom else 0)

    faces = []
    for i in range(nx):
        for j in range(ny):
            a, b = vid(i, j), vid(i + 1, j)
            faces.append((a, b, b + 1))          # top, +z
            faces.append((a, b + 1, a + 1))
            a, b = vid(i, j, True), vid(i + 1, j, True)
            faces.append((a, b + 1, b))          # bottom, -z
            faces.append((a, a + 1, b + 1))
    for i in range(nx):  # y- and y+ walls
        a, b = vid(i, 0), vid(i + 1, 0)
        faces.append((a, vid(i, 0, True), vid(i + 1, 0, True)))
        faces.append((a, vid(i + 1, 0, True), b))
        a, b = vid(i, ny), vid(i + 1, ny)
        faces.append((a, vid(i + 1, ny, True), vid(i, ny, True)))
        faces.append((a, b, vid(i + 1, ny, True)))
    for j in range(ny):  # x- and x+ walls
        a, b = vid(0, j), vid(0, j + 1)
        faces.append((a, vid(0, j + 1, True), vid(0, j, True)))
        faces.append((a, b, vid(0, j + 1, True)))
        a, b = vid(nx, j), vid(nx, j + 1)
        faces.append((a, vid(nx, j, True), vid(nx, j + 1, True)))
        faces.append((a, vid(nx, j + 1, True), b))
    return TriMesh(verts, np.array(faces, dtype=np.int32))


def make_box(width: float, depth: float, height: float) -> TriMesh:
    """Minimal 12-triangle closed box: xy-centred, z in [0, height]."""
    return make_slab(width, depth, height, nx=1, ny=1)


def make_cone(
    radius: float = 30.0,
    height: float = 120.0,
    segments: int = 72,
    rings: int = 60,
) -> TriMesh:
    """Closed cone, base on z=0, apex on the +z axis.

    Lateral surface is a segments x rings grid collapsing to an apex fan;
    the base is a centre fan.  Roughly 2*segments*rings triangles.
    """
    verts = [np.array([0.0, 0.0, height]), np.array([0.0, 0.0, 0.0])]
    ring_start = []
    for k in range(1, rings + 1):
        t = k / rings
        r = radius * t
        z = height * (1.0 - t)
        ring_start.append(len(verts))
        for s in range(segments):
            a = 2.0 * np.pi * s / segments
            verts.append(np.array([r * np.cos(a), r * np.sin(a), z]))

    faces = []
    first = ring_start[0]
    for s in range(segments):
        faces.append((0, first + s, first + (s + 1) % segments))
    for k in range(rings - 1):
        ra, rb = ring_start[k], ring_start[k + 1]
        for s in range(segments):
            s2 = (s + 1) % segments
            faces.append((ra + s, rb + s, rb + s2))
            faces.append((ra + s, rb + s2, ra + s2))
    base = ring_start[-1]
    for s in range(segments):
        faces.append((1, base + (s + 1) % segments, base + s))
    return TriMesh(np.array(verts), np.array(faces, dtype=np.int32))


def make_fold(angle_deg: float = 60.0, size: float = 10.0) -> TriMesh:
    """Two triangles sharing an edge on the y axis, folded by the given
    dihedral angle.  Small fixture for transport-across-edge tests."""
    a = np.deg2rad(angle_deg)
    verts = np.array(
        [
            (0.0, -size, 0.0),
            (0.0, size, 0.0),
            (-size, 0.0, 0.0),
            (size * np.cos(a), 0.0, size * np.sin(a)),
        ]
    )
    faces = np.array([(0, 1, 2), (0, 3, 1)], dtype=np.int32)
    return TriMesh(verts, faces)
