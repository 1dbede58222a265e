"""Exception types shared across the package."""


class MeshError(ValueError):
    """Invalid mesh topology or geometry."""


class NonManifoldError(MeshError):
    """Edge structure unsuitable for surface walking.

    Covers both true non-manifold defects (an edge shared by more than two
    faces, or by two faces with the same winding) and open boundaries in a
    format that promises a closed solid.  ``edges`` lists the offending
    (vertex, vertex) index pairs.
    """

    def __init__(self, message: str, edges=()):
        self.edges = [tuple(int(v) for v in e) for e in edges]
        if self.edges:
            shown = ", ".join(f"({a}, {b})" for a, b in self.edges[:8])
            more = "" if len(self.edges) <= 8 else f", ... {len(self.edges) - 8} more"
            message = f"{message}: {shown}{more}"
        super().__init__(message)


class DegenerateDirection(ValueError):
    """Target direction is numerically parallel to the surface normal."""


class BoundaryHit(Exception):
    """A surface walk ran off an open boundary edge.

    ``traveled`` is the distance covered before the hit; ``point`` is the
    surface point on the boundary edge where the walk stopped.
    """

    def __init__(self, traveled: float, point=None):
        super().__init__(f"walk hit an open mesh boundary after {traveled:.6g} mm")
        self.traveled = traveled
        self.point = point


class PlacementError(ValueError):
    """A part footprint cannot be realized at the requested anchor."""


class SchematicError(ValueError):
    """Connectivity edit would violate the schematic model."""


class EngraveError(ValueError):
    """Mesh carving failed or produced an unusable surface."""


class DesignError(ValueError):
    """Design file is malformed or internally inconsistent."""
