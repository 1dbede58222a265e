import numpy as np
import pytest

from meshwire.errors import DegenerateDirection, MeshError, NonManifoldError
from meshwire.geometry import SurfacePoint, TangentVector, TriMesh
from meshwire.primitives import (
    make_box,
    make_cone,
    make_fold,
    make_icosphere,
    make_plane,
    make_slab,
)

from conftest import random_surface_points


class TestTriMeshConstruction:
    def test_counts_plane(self):
        m = make_plane(10, 10, 4, 4)
        assert m.n_vertices == 25
        assert m.n_faces == 32

    @pytest.mark.parametrize("n,nv,nf", [(0, 12, 20), (1, 42, 80), (2, 162, 320), (3, 642, 1280)])
    def test_counts_icosphere(self, n, nv, nf):
        # subdividing quadruples faces; V = 10 * 4^n + 2 by Euler's formula
        m = make_icosphere(n, 25.0)
        assert m.n_vertices == nv
        assert m.n_faces == nf
        assert m.is_closed
        np.testing.assert_allclose(np.linalg.norm(m.vertices, axis=1), 25.0, atol=1e-9)

    def test_box_is_minimal(self):
        m = make_box(2, 3, 4)
        assert m.n_vertices == 8
        assert m.n_faces == 12
        assert m.is_closed

    def test_cone_closed(self):
        m = make_cone(radius=20, height=60, segments=24, rings=10)
        assert m.is_closed

    def test_empty_rejected(self):
        with pytest.raises(MeshError, match="empty"):
            TriMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int32))

    def test_out_of_range_face(self):
        v = np.eye(3)
        with pytest.raises(MeshError, match="out of range"):
            TriMesh(v, [[0, 1, 5]])

    def test_repeated_vertex_in_face(self):
        v = np.eye(3)
        with pytest.raises(MeshError, match="repeated"):
            TriMesh(v, [[0, 1, 1]])

    def test_degenerate_area(self):
        v = np.array([[0, 0, 0], [1, 0, 0], [2, 0, 0]], dtype=float)
        with pytest.raises(MeshError, match="degenerate"):
            TriMesh(v, [[0, 1, 2]])

    def test_nonmanifold_three_faces_on_edge(self):
        v = np.array(
            [[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1]], dtype=float
        )
        f = [[0, 1, 2], [1, 0, 3], [0, 1, 4]]
        with pytest.raises(NonManifoldError) as ei:
            TriMesh(v, f)
        assert (0, 1) in ei.value.edges

    def test_inconsistent_winding(self):
        v = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0]], dtype=float)
        f = [[0, 1, 2], [1, 3, 2]]  # consistent
        TriMesh(v, f)
        f = [[0, 1, 2], [1, 2, 3]]  # second face flipped
        with pytest.raises(NonManifoldError, match="winding"):
            TriMesh(v, f)

    def test_adjacency_convention(self, sphere50):
        # face_adjacency[f, i] shares exactly the edge opposite local vertex i
        m = sphere50
        for f in (0, 17, 555):
            for i in range(3):
                g = m.face_adjacency[f, i]
                assert g >= 0 and g != f
                edge = {int(m.faces[f, (i + 1) % 3]), int(m.faces[f, (i + 2) % 3])}
                assert edge < set(m.faces[g].tolist())

    def test_boundary_edges_plane(self):
        m = make_plane(10, 10, 5, 5)
        # 5 cells a side -> 20 boundary segments
        assert len(m.boundary_edges) == 20
        assert not m.is_closed


class TestNormals:
    def test_face_normals_unit(self, sphere50):
        n = np.linalg.norm(sphere50.face_normals, axis=1)
        np.testing.assert_allclose(n, 1.0, atol=1e-9)

    def test_vertex_normals_unit(self, sphere50):
        n = np.linalg.norm(sphere50.vertex_normals, axis=1)
        np.testing.assert_allclose(n, 1.0, atol=1e-9)

    def test_sphere_vertex_normals_radial(self, sphere50):
        radial = sphere50.vertices / 50.0
        dots = np.einsum("ij,ij->i", radial, sphere50.vertex_normals)
        assert dots.min() > 0.9999

    def test_box_corner_normals_symmetric(self):
        # angle weighting gives (+-1,+-1,+-1)/sqrt(3) at every box corner even
        # though the corner's incident triangle count differs per face
        m = make_box(2, 2, 2)
        expect = np.sign(m.vertices - np.array([0.0, 0.0, 1.0])) / np.sqrt(3.0)
        np.testing.assert_allclose(m.vertex_normals, expect, atol=1e-12)

    def test_plane_normals(self):
        m = make_plane(10, 10, 3, 3)
        np.testing.assert_allclose(m.face_normals, [[0, 0, 1]] * m.n_faces, atol=1e-12)
        np.testing.assert_allclose(m.vertex_normals, [[0, 0, 1]] * m.n_vertices, atol=1e-12)


class TestSurfacePoint:
    def test_validation(self):
        SurfacePoint(0, [0.2, 0.3, 0.5])
        with pytest.raises(ValueError, match="negative"):
            SurfacePoint(0, [-0.1, 0.6, 0.5])
        with pytest.raises(ValueError, match="sum"):
            SurfacePoint(0, [0.5, 0.5, 0.5])
        with pytest.raises(ValueError, match="shape"):
            SurfacePoint(0, [0.5, 0.5])

    def test_tiny_negative_clamped(self):
        p = SurfacePoint(0, [1.0 + 5e-10, -5e-10, 0.0])
        assert p.bary[1] == 0.0
        assert p.bary.sum() == 1.0

    def test_immutable_and_hashable(self):
        p = SurfacePoint(3, [0.25, 0.25, 0.5])
        q = SurfacePoint(3, [0.25, 0.25, 0.5])
        assert p == q
        assert hash(p) == hash(q)
        with pytest.raises(ValueError):
            p.bary[0] = 0.9

    def test_embed_matches_combination(self, sphere50, rng):
        for p in random_surface_points(sphere50, rng, 50):
            tri = sphere50.vertices[sphere50.faces[p.face]]
            np.testing.assert_allclose(sphere50.embed(p), p.bary @ tri, atol=1e-12)

    def test_embed_on_face_plane(self, sphere50, rng):
        # embedded points sit on their face's plane to well under 1e-6 mm
        for p in random_surface_points(sphere50, rng, 100):
            tri = sphere50.vertices[sphere50.faces[p.face]]
            n = sphere50.face_normals[p.face]
            assert abs((sphere50.embed(p) - tri[0]) @ n) < 1e-9

    def test_embed_many(self, sphere50, rng):
        pts = random_surface_points(sphere50, rng, 20)
        batch = sphere50.embed_many(pts)
        single = np.array([sphere50.embed(p) for p in pts])
        np.testing.assert_allclose(batch, single, atol=0)


class TestTangentVector:
    def test_unit_enforced(self):
        t = TangentVector(0, [3.0, 4.0, 0.0])
        assert abs(np.linalg.norm(t.dir) - 1.0) < 1e-9
        with pytest.raises(ValueError, match="zero"):
            TangentVector(0, [0.0, 0.0, 0.0])


class TestProjectToTangent:
    def test_plane_straight(self, plane100):
        p = plane100.surface_point_near([3.3, -7.1, 0])
        t = plane100.project_to_tangent(p, [40.0, 20.0, 55.0])
        assert abs(np.linalg.norm(t.dir) - 1.0) < 1e-9
        assert abs(t.dir @ np.array([0.0, 0.0, 1.0])) < 1e-12
        want = np.array([40.0 - 3.3, 20.0 + 7.1, 0.0])
        np.testing.assert_allclose(t.dir, want / np.linalg.norm(want), atol=1e-9)

    def test_in_face_plane(self, sphere50, rng):
        target = np.array([12.0, 80.0, -5.0])
        for p in random_surface_points(sphere50, rng, 40):
            try:
                t = sphere50.project_to_tangent(p, target)
            except DegenerateDirection:
                continue
            assert abs(t.dir @ sphere50.face_normals[p.face]) < 1e-9
            assert abs(np.linalg.norm(t.dir) - 1.0) < 1e-9

    def test_degenerate_normal_aim(self, plane100):
        p = plane100.surface_point_near([1.0, 2.0, 0])
        pos = plane100.embed(p)
        with pytest.raises(DegenerateDirection):
            plane100.project_to_tangent(p, pos + np.array([0.0, 0.0, 9.0]))

    def test_degenerate_zero_offset(self, plane100):
        p = plane100.surface_point_near([1.0, 2.0, 0])
        with pytest.raises(DegenerateDirection):
            plane100.project_to_tangent(p, plane100.embed(p))

    def test_threshold_respected(self, plane100):
        p = plane100.surface_point_near([0.4, 0.9, 0])
        pos = plane100.embed(p)
        # tangential part 1e-6 of the norm: above the 1e-7 default
        target = pos + np.array([1e-6, 0.0, 1.0])
        t = plane100.project_to_tangent(p, target)
        np.testing.assert_allclose(t.dir, [1, 0, 0], atol=1e-9)
        with pytest.raises(DegenerateDirection):
            plane100.project_to_tangent(p, pos + np.array([1e-8, 0.0, 1.0]))

    def test_normal_modes_differ_on_curved(self, sphere50):
        # off-center in a face, the interpolated normal tilts the projection
        p = SurfacePoint(100, [0.6, 0.3, 0.1])
        target = np.array([0.0, 0.0, 90.0])
        tv = sphere50.project_to_tangent(p, target, normal_mode="vertex")
        tf = sphere50.project_to_tangent(p, target, normal_mode="face")
        assert not np.allclose(tv.dir, tf.dir, atol=1e-9)
        # both stay in the face plane regardless of the normal used
        n = sphere50.face_normals[100]
        assert abs(tv.dir @ n) < 1e-9
        assert abs(tf.dir @ n) < 1e-9

    def test_unknown_mode(self, sphere50):
        p = SurfacePoint(0, [1.0, 0.0, 0.0])
        with pytest.raises(ValueError, match="normal mode"):
            sphere50.normal_at(p, "banana")


class TestSurfacePointNear:
    def test_recovers_interior_point(self, sphere50):
        target = np.array([10.0, 20.0, 42.0])
        p = sphere50.surface_point_near(target)
        pos = sphere50.embed(p)
        # the found point is on the sphere and close to the ray direction
        assert abs(np.linalg.norm(pos) - 50.0) < 0.6
        cos = pos @ target / (np.linalg.norm(pos) * np.linalg.norm(target))
        assert cos > 0.999

    def test_exact_on_plane(self, plane100):
        p = plane100.surface_point_near([12.3, -4.56, 0.0])
        np.testing.assert_allclose(plane100.embed(p), [12.3, -4.56, 0.0], atol=1e-12)
