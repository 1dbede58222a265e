"""meshwire: circuit traces on curved surfaces.

Route copper-tape trails between component pins directly on a triangle
mesh, engrave guide channels and pin holes into the solid, and export a
print-ready STL.
"""

from .designfile import (
    FORMAT_VERSION,
    design_from_dict,
    design_to_dict,
    dumps_design,
    load_design,
    save_design,
)
from .document import Document, replay
from .electrical import (
    ConductorSpec,
    NAMED_CONDUCTORS,
    design_report,
    trace_resistance,
    voltage_drop,
)
from .engrave import (
    ChannelProfile,
    EngraveResult,
    PrintReport,
    drill_holes,
    engrave_channels,
    plane_section,
    validate_printable,
)
from .errors import (
    BoundaryHit,
    DegenerateDirection,
    DesignError,
    EngraveError,
    MeshError,
    NonManifoldError,
    PlacementError,
    SchematicError,
)
from .geometry import SurfacePoint, TangentVector, TriMesh
from .layout import (
    ClearanceViolation,
    Layout,
    PartPlacement,
    check_clearance,
    pin_surface_points,
    tangent_frame,
)
from .meshio import load_mesh, save_mesh
from .partlib import PART_LIBRARY
from .routing import (
    RoutingParams,
    SurfacePolyline,
    geodesic_oracle,
    polyline_min_distance,
    route_trace,
    walk_on_surface,
)
from .schematic import Footprint, Net, PartDef, PinDef, Schematic, junction, pin
from .session import SessionHost

__version__ = "0.1.0"

__all__ = [
    "BoundaryHit",
    "ChannelProfile",
    "ClearanceViolation",
    "ConductorSpec",
    "DegenerateDirection",
    "DesignError",
    "Document",
    "EngraveError",
    "EngraveResult",
    "FORMAT_VERSION",
    "Footprint",
    "Layout",
    "MeshError",
    "NAMED_CONDUCTORS",
    "Net",
    "NonManifoldError",
    "PART_LIBRARY",
    "PartDef",
    "PartPlacement",
    "PinDef",
    "PlacementError",
    "PrintReport",
    "RoutingParams",
    "Schematic",
    "SchematicError",
    "SessionHost",
    "SurfacePoint",
    "SurfacePolyline",
    "TangentVector",
    "TriMesh",
    "check_clearance",
    "design_from_dict",
    "design_report",
    "design_to_dict",
    "drill_holes",
    "dumps_design",
    "engrave_channels",
    "geodesic_oracle",
    "junction",
    "load_design",
    "load_mesh",
    "pin",
    "pin_surface_points",
    "plane_section",
    "replay",
    "route_trace",
    "save_design",
    "save_mesh",
    "tangent_frame",
    "trace_resistance",
    "validate_printable",
    "voltage_drop",
    "walk_on_surface",
    "__version__",
]
