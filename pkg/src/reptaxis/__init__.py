"""Finite-difference simulator for a susceptible-infected model with
repellent taxis and degenerate cross diffusion."""

from .grid import Grid, InitialConditionSpec, build_grid, synthesize_initials
from .kinetics import ModelParams, chi, reaction_f, reaction_g, removed_update
from .stencils import central_gradient, neumann_laplacian, upwind_taxis_divergence
from .timestepper import (
    NumericalFailure,
    SimState,
    StepControl,
    epsilon_continuation,
    rates,
    run,
    stable_dt,
    step,
)

__all__ = [
    "Grid",
    "InitialConditionSpec",
    "ModelParams",
    "NumericalFailure",
    "SimState",
    "StepControl",
    "build_grid",
    "central_gradient",
    "chi",
    "epsilon_continuation",
    "neumann_laplacian",
    "rates",
    "reaction_f",
    "reaction_g",
    "removed_update",
    "run",
    "stable_dt",
    "step",
    "synthesize_initials",
    "upwind_taxis_divergence",
]
