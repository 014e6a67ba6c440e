from .backend import BACKEND, COMPILED_AVAILABLE
from .scheme import (
    Discretization,
    FlowState,
    Ghosts,
    PositivityError,
    SolverError,
    SolverParams,
    StepInfo,
    apply_boundary,
    boundary_mass_fluxes,
    convective_fluxes,
    face_divergence,
    periodic_rhs,
    stable_dt,
    step,
    viscous_and_pressure,
)
