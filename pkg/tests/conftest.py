import numpy as np
import pytest

from meshwire.geometry import TriMesh
from meshwire.primitives import make_icosphere, make_plane, make_slab


@pytest.fixture(scope="session")
def plane100():
    """100 x 100 mm open sheet, 2.5 mm grid cells."""
    return make_plane(100.0, 100.0, 40, 40)


@pytest.fixture(scope="session")
def sphere50():
    """Radius-50 icosphere, 3 subdivisions (642 vertices, 1280 faces)."""
    return make_icosphere(3, 50.0)


@pytest.fixture(scope="session")
def slab_small():
    return make_slab(60.0, 60.0, 10.0, 30, 30)


@pytest.fixture(scope="session")
def holed_plane():
    """Plane with a 12 mm-radius hole: straight routes across it must fail."""
    base = make_plane(100.0, 100.0, 40, 40)
    cent = base.vertices[base.faces].mean(axis=1)
    keep = np.linalg.norm(cent[:, :2], axis=1) > 12.0
    return TriMesh(base.vertices, base.faces[keep])


@pytest.fixture
def rng():
    return np.random.default_rng(424242)


def random_surface_points(mesh, rng, n):
    """Uniform-ish random points: random face (area-weighted), random bary."""
    areas = mesh.face_areas / mesh.face_areas.sum()
    faces = rng.choice(mesh.n_faces, size=n, p=areas)
    r1 = rng.random(n)
    r2 = rng.random(n)
    # uniform barycentric via the square-root trick
    s = np.sqrt(r1)
    bary = np.stack([1 - s, s * (1 - r2), s * r2], axis=1)
    from meshwire.geometry import SurfacePoint

    return [SurfacePoint(int(f), b) for f, b in zip(faces, bary)]
