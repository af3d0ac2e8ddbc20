"""Implicit P-surface lattices, field booleans and density targeting."""

from .demo import (
    ChannelSpec,
    DemoBlock,
    LatticeConfig,
    build_demo_block,
    interior_subgrid,
    load_lattice_config,
    solve_demo,
)
from .grid import (
    ScalarGrid,
    evaluate_on_grid,
    grid_axes,
    grid_points,
    marching_cubes,
    sample_grid,
    volume_fraction,
)
from .implicit import (
    EVERYWHERE,
    NOWHERE,
    ImplicitSolid,
    boolean_intersect,
    boolean_subtract,
    boolean_union,
    box_solid,
    complement,
    constant_solid,
    shell_solid,
    sphere_solid,
)
from .period import PeriodField, eval_period_field, fit_period_field, wendland_c2
from .pipes import CenterlineSet, bore_solid, distance_to_centerlines, pipe_wall_solid
from .tpms import (
    MIN_WALL,
    DensitySolution,
    DensityTargetError,
    SheetSolid,
    WallBelowFloorError,
    fill_region,
    phi_p,
    solve_thickness_for_density,
    thicken_tpms,
)

__all__ = [name for name in dir() if not name.startswith("_")]
