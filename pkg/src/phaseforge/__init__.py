"""Fringe projection profilometry simulation and learned fringe-to-fringe
phase retrieval."""

from .fringe import (
    AbsolutePhaseMap,
    FringeImage,
    FringeSet,
    FrequencyLadder,
    PhaseMap,
    RenderParams,
    SystemGeometry,
    height_from_phase,
    order_error,
    render_fringe,
    render_set,
    restricted_depth,
    restricted_depth_sim,
    unwrap_ladder,
    unwrap_step,
    wrap,
    wrapped_phase,
)
from .surface import Surface, SurfaceGenConfig, add_noise, generate_surface, render_scene
from .network import (
    NetworkSpec,
    Variant,
    build_network,
    infer,
    select_variant,
    validate_fl_choice,
    variant_c,
    variant_u,
)
from .training import TrainConfig, train

__version__ = "0.1.0"
