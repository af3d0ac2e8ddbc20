"""Flow-channel routing between manifold ports and its loss surrogate."""

from .bspline import (
    BSplineCurve,
    basis_matrix,
    bspline_basis,
    bspline_eval,
    bspline_tangent,
    clamped_uniform_knots,
)
from .export import export_route, tube_mesh, write_centerline_csv
from .losses import (
    MITER_K,
    CurvatureProfile,
    LossEstimate,
    arc_length,
    bend_coefficient,
    curvature_profile,
    flow_for_velocity,
    pressure_loss_estimate,
    sharp_corners,
)
from .routes import (
    PRESET_LAYOUTS,
    ROUTE_KINDS,
    Capsule,
    ClearanceResult,
    Port,
    Route,
    Sphere,
    arc_fillet_route,
    bezier3_route,
    build_route,
    check_clearance,
    manhattan_polyline,
    preset_ports,
    route_channel,
    straight_route,
)

__all__ = [name for name in dir() if not name.startswith("_")]
