"""Explicit time integration of the (regularised) susceptible-infected system.

    dS/dt = div(grad S + chi(S) S grad I) + f(S, I)
    dI/dt = (eps + S) Lap I + g(S, I)
    dR/dt = mu_I I

All three are advanced by forward Euler with a step chosen by
:func:`stable_dt`.  ``eps = 0`` gives the degenerate system, where the
infected equation reduces to pure reaction wherever ``S = 0``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .diagnostics import DiagnosticsRecord, TestFunctionFamily, record_sample, trajectory_distance
from .grid import Grid
from .kinetics import ModelParams, reaction_f, reaction_g, removed_update
from .stencils import max_taxis_speed, neumann_laplacian, upwind_taxis_divergence

log = logging.getLogger(__name__)


class NumericalFailure(RuntimeError):
    """A step produced a non-finite value or was asked for an unstable dt."""

    def __init__(self, message, time=None, node=None):
        super().__init__(message)
        self.time = time
        self.node = node


@dataclass(frozen=True)
class SimState:
    t: float
    S: np.ndarray
    I: np.ndarray
    R: np.ndarray
    clamp_events: int = 0

    @classmethod
    def initial(cls, S0, I0, R0=None):
        S0 = np.asarray(S0, dtype=float)
        R0 = np.zeros_like(S0) if R0 is None else np.asarray(R0, dtype=float)
        return cls(0.0, S0, np.asarray(I0, dtype=float), R0)


@dataclass(frozen=True)
class StepControl:
    safety: float = 0.5
    dt_max: float = math.inf
    clamp: bool = False

    def __post_init__(self):
        if not 0 < self.safety <= 1:
            raise ValueError(f"safety must lie in (0, 1], got {self.safety}")
        if not self.dt_max > 0:
            raise ValueError(f"dt_max must be positive, got {self.dt_max}")


def stable_dt(state: SimState, params: ModelParams, grid: Grid, control: StepControl) -> float:
    """Step size from the diffusion, taxis-advection and reaction limits.

    ``safety * min(h^2 / (2 dim D), h / (dim v), 1 / L)`` capped by
    ``dt_max``, where ``D = max(1, eps + max S)``, ``v`` is the largest face
    taxis speed and ``L`` the summed kinetic rates.
    """
    h = min(grid.spacing)
    d_eff = max(1.0, params.eps_reg + float(np.max(state.S)))
    bounds = [h * h / (2 * grid.dim * d_eff)]
    v = max_taxis_speed(state.S, state.I, params.K, grid, params.chi_mode)
    if v > 0:
        bounds.append(h / (grid.dim * v))
    if params.reaction_bound > 0:
        bounds.append(1.0 / params.reaction_bound)
    return min(control.safety * min(bounds), control.dt_max)


def rates(state: SimState, params: ModelParams, grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    """Right-hand sides ``(dS/dt, dI/dt)`` of the semi-discrete system."""
    S, I = state.S, state.I
    dS = (
        neumann_laplacian(S, grid)
        + upwind_taxis_divergence(S, I, params.K, grid, params.chi_mode)
        + reaction_f(S, I, params)
    )
    # nondivergence form: coefficient times stencil, nodewise
    dI = (params.eps_reg + S) * neumann_laplacian(I, grid) + reaction_g(S, I, params)
    return dS, dI


def _check_finite(name, values, t):
    bad = ~np.isfinite(values)
    if bad.any():
        node = tuple(int(i) for i in np.unravel_index(int(np.argmax(bad)), values.shape))
        raise NumericalFailure(f"non-finite {name} at node {node}, t={t:.6g}", time=t, node=node)


def step(
    state: SimState,
    params: ModelParams,
    grid: Grid,
    dt: float,
    control: StepControl | None = None,
    check_dt: bool = True,
) -> SimState:
    """Advance one forward-Euler step of size ``dt``.

    ``dt`` is checked against the unsafetied stability bound unless
    ``check_dt`` is False (the run loop already derived it from that bound).
    """
    control = control or StepControl()
    if check_dt:
        hard = stable_dt(state, params, grid, StepControl(safety=1.0))
        if dt > hard * (1 + 1e-12):
            raise NumericalFailure(f"dt={dt:.6g} exceeds stability bound {hard:.6g}", time=state.t)
    dS, dI = rates(state, params, grid)
    S = state.S + dt * dS
    I = state.I + dt * dI
    R = removed_update(state.R, state.I, params.mu_I, dt)
    t = state.t + dt
    _check_finite("S", S, t)
    _check_finite("I", I, t)
    clamps = state.clamp_events
    if control.clamp:
        clamps += int(np.count_nonzero((S < 0) | (S > 1)) + np.count_nonzero(I < 0))
        S = np.clip(S, 0.0, 1.0)
        I = np.maximum(I, 0.0)
    return SimState(t, S, I, R, clamps)


@dataclass
class RunResult:
    final: SimState
    snapshots: list[SimState] = field(default_factory=list)
    record: DiagnosticsRecord = field(default_factory=DiagnosticsRecord)
    steps: int = 0
    min_S: float = math.inf  # over every step, not only samples


def run(
    state0: SimState,
    params: ModelParams,
    grid: Grid,
    control: StepControl,
    t_end: float,
    sample_times: Sequence[float] = (),
    family: TestFunctionFamily | None = None,
) -> RunResult:
    """Integrate from ``state0.t`` to ``t_end``, landing exactly on every sample time.

    Snapshots and diagnostics rows are taken at each sample time.  The
    diagnostics use the last step before the sample for time derivatives;
    a sample at the initial time uses the instantaneous rates instead.
    """
    samples = [float(s) for s in sample_times]
    if any(b < a for a, b in zip(samples, samples[1:])):
        raise ValueError("sample_times must be sorted")
    if samples and (samples[0] < state0.t or samples[-1] > t_end):
        raise ValueError(f"sample_times must lie within [{state0.t}, {t_end}]")
    if t_end < state0.t:
        raise ValueError("t_end lies before the initial time")

    result = RunResult(final=state0, min_S=float(np.min(state0.S)))
    if t_end == state0.t:
        result.snapshots = [state0 for s in samples if s == state0.t]
        return result

    family = family or TestFunctionFamily.hat_lattice(grid)
    pending = list(samples)
    while pending and pending[0] == state0.t:
        pending.pop(0)
        result.snapshots.append(state0)
        result.record.append(
            record_sample(None, state0, 0.0, grid, params, family, rates=rates(state0, params, grid))
        )

    state = state0
    prev, dt = None, 0.0
    targets = pending + ([t_end] if not pending or pending[-1] != t_end else [])
    for target in targets:
        while state.t < target:
            dt = stable_dt(state, params, grid, control)
            landing = state.t + dt >= target * (1 - 1e-14)
            if landing:
                dt = target - state.t
            prev = state
            try:
                state = step(state, params, grid, dt, control, check_dt=False)
            except NumericalFailure:
                log.error("run failed at t=%.6g", state.t)
                raise
            if landing:
                state = replace(state, t=target)
            result.steps += 1
            result.min_S = min(result.min_S, float(np.min(state.S)))
        while pending and target == pending[0]:
            pending.pop(0)
            result.snapshots.append(state)
            result.record.append(record_sample(prev, state, dt, grid, params, family))
    result.final = state
    return result


class ContinuationError(RuntimeError):
    def __init__(self, eps, cause):
        super().__init__(f"continuation run failed at eps={eps}: {cause}")
        self.eps = eps


@dataclass
class ContinuationStep:
    eps: float
    final: SimState
    distance_to_previous: float | None
    result: RunResult


def epsilon_continuation(
    state0: SimState,
    params: ModelParams,
    grid: Grid,
    control: StepControl,
    t_end: float,
    eps_list: Sequence[float],
    sample_times: Sequence[float],
) -> list[ContinuationStep]:
    """Run every regularisation in ``eps_list`` and measure successive distances.

    Distances are the discrete L2(0, T; L2) norms of the differences of
    consecutive ``(S, I)`` trajectories, sampled at ``sample_times``.
    """
    eps_list = [float(e) for e in eps_list]
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("eps_list must be strictly decreasing")
    out: list[ContinuationStep] = []
    previous = None
    for eps in eps_list:
        try:
            res = run(state0, replace(params, eps_reg=eps), grid, control, t_end, sample_times)
        except NumericalFailure as exc:
            raise ContinuationError(eps, exc) from exc
        dist = None if previous is None else trajectory_distance(previous.snapshots, res.snapshots, grid)
        out.append(ContinuationStep(eps, res.final, dist, res))
        previous = res
    return out
