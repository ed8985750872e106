"""Runtime monitors for the a priori estimates, the supersolution inequality
and manufactured-solution convergence studies.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.sparse.linalg import LinearOperator, cg

from .grid import Grid, build_grid
from .kinetics import ModelParams, reaction_g
from .stencils import central_gradient, neumann_laplacian, upwind_taxis_divergence

COLUMNS = (
    "t",
    "dt",
    "grad_I_L2",
    "I_L2",
    "sqrt_S_lap_I_L2",
    "sqrt_eps_lap_I_L2",
    "dt_I_L2",
    "grad_S_L2",
    "dt_S_dual",
    "min_S",
    "max_S",
    "max_I",
    "mass_S",
    "mass_I",
    "mass_R",
    "clamp_events",
    "supersolution_slack",
)

# the seven quantities bounded by the a priori estimates
ESTIMATE_COLUMNS = (
    "grad_I_L2",
    "I_L2",
    "sqrt_S_lap_I_L2",
    "sqrt_eps_lap_I_L2",
    "dt_I_L2",
    "grad_S_L2",
    "dt_S_dual",
)


@dataclass
class DiagnosticsRecord:
    rows: list[dict] = field(default_factory=list)

    def append(self, row: dict) -> None:
        self.rows.append(row)

    def __len__(self):
        return len(self.rows)

    def column(self, name: str) -> np.ndarray:
        return np.array([row[name] for row in self.rows], dtype=float)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(COLUMNS)
            for row in self.rows:
                writer.writerow(
                    str(row[c]) if c == "clamp_events" else f"{row[c]:.17g}" for c in COLUMNS
                )


@dataclass(frozen=True)
class TestFunctionFamily:
    """Nonnegative discrete test functions, stacked as ``(k, *grid.shape)``."""

    __test__ = False  # not a pytest class

    functions: np.ndarray

    def __post_init__(self):
        if np.any(self.functions < 0):
            raise ValueError("test functions must be nonnegative")

    @classmethod
    def hat_lattice(cls, grid: Grid, per_axis: int = 5, include_constant: bool = True):
        """Tensor-product hats on a ``per_axis``-point coarse lattice, plus 1."""
        xs = grid.coords()
        hats = []
        centers_1d = [np.linspace(0.0, e, per_axis) for e in grid.extents]
        widths = [e / (per_axis - 1) for e in grid.extents]
        for idx in np.ndindex(*([per_axis] * grid.dim)):
            psi = np.ones(grid.shape)
            for ax, i in enumerate(idx):
                psi = psi * np.maximum(0.0, 1.0 - np.abs(xs[ax] - centers_1d[ax][i]) / widths[ax])
            hats.append(psi)
        if include_constant:
            hats.append(np.ones(grid.shape))
        return cls(np.stack(hats))

    def __len__(self):
        return self.functions.shape[0]


def gradient_l2(u: np.ndarray, grid: Grid) -> float:
    g = central_gradient(u, grid)
    return float(np.sqrt(grid.integrate(np.sum(g * g, axis=0))))


class DualNormError(RuntimeError):
    def __init__(self, residual, iterations):
        super().__init__(f"CG did not converge: relative residual {residual:.3e} after {iterations} iterations")
        self.residual = residual


def dual_norm_proxy(values: np.ndarray, grid: Grid, rtol: float = 1e-8, maxiter: int | None = None) -> float:
    """Dual (H^1)' norm of ``values`` via its Riesz representative.

    Solves ``(id - Lap_h) w = values`` with Neumann boundaries and returns the
    discrete H^1 norm of ``w``.  The operator is symmetric in the
    trapezoid-weighted inner product, so CG runs on ``W (id - Lap_h)``.
    """
    values = np.asarray(values, dtype=float)
    if not np.any(values):
        return 0.0
    weights = grid.cell_volumes().ravel()
    shape = grid.shape

    def apply(w):
        w = w.reshape(shape)
        return weights * (w - neumann_laplacian(w, grid)).ravel()

    op = LinearOperator((grid.size, grid.size), matvec=apply, dtype=float)
    rhs = weights * values.ravel()
    maxiter = maxiter or 10 * grid.size
    iterations = 0

    def count(_):
        nonlocal iterations
        iterations += 1

    w, info = cg(op, rhs, rtol=rtol, atol=0.0, maxiter=maxiter, callback=count)
    if info != 0:
        residual = np.linalg.norm(rhs - op.matvec(w)) / np.linalg.norm(rhs)
        raise DualNormError(residual, iterations)
    return float(math.sqrt(max(float(np.dot(w, apply(w))), 0.0)))


def supersolution_residual(
    state_prev,
    state,
    dt: float,
    grid: Grid,
    params: ModelParams,
    family: TestFunctionFamily,
    rates=None,
) -> float:
    """Smallest slack of the weak supersolution inequality over ``family``.

    ``slack_k = int dI/dt psi_k - int(-grad I . grad(psi_k S) + g psi_k)``;
    nonnegative slack means the inequality holds for ``psi_k``.

    The backward difference is paired with the spatial terms of
    ``state_prev``, the level at which the explicit update holds exactly, so
    the slack measures the spatial defect only.  With ``rates`` given the
    instantaneous ``dI/dt`` of ``state`` is used instead.
    """
    if rates is not None:
        dI_dt = rates[1]
    else:
        dI_dt = (state.I - state_prev.I) / dt
        state = state_prev
    S, I = state.S, state.I
    grad_I = central_gradient(I, grid)
    g = reaction_g(S, I, params)
    vol = grid.cell_volumes()
    slacks = []
    for psi in family.functions:
        grad_psiS = central_gradient(psi * S, grid)
        integrand = dI_dt * psi + np.sum(grad_I * grad_psiS, axis=0) - g * psi
        slacks.append(float(np.sum(vol * integrand)))
    return min(slacks)


def record_sample(state_prev, state, dt, grid: Grid, params: ModelParams, family=None, rates=None) -> dict:
    """One diagnostics row for ``state``.

    Time derivatives are backward differences against ``state_prev``; pass
    ``rates=(dS/dt, dI/dt)`` instead when no previous state exists.
    """
    S, I = state.S, state.I
    if rates is not None:
        dS_dt, dI_dt = rates
    else:
        dS_dt = (S - state_prev.S) / dt
        dI_dt = (I - state_prev.I) / dt
    lap_I = neumann_laplacian(I, grid)
    family = family or TestFunctionFamily.hat_lattice(grid)
    return {
        "t": float(state.t),
        "dt": float(dt),
        "grad_I_L2": gradient_l2(I, grid),
        "I_L2": grid.l2_norm(I),
        "sqrt_S_lap_I_L2": grid.l2_norm(np.sqrt(np.maximum(S, 0.0)) * lap_I),
        "sqrt_eps_lap_I_L2": math.sqrt(params.eps_reg) * grid.l2_norm(lap_I),
        "dt_I_L2": grid.l2_norm(dI_dt),
        "grad_S_L2": gradient_l2(S, grid),
        "dt_S_dual": dual_norm_proxy(dS_dt, grid),
        "min_S": float(np.min(S)),
        "max_S": float(np.max(S)),
        "max_I": float(np.max(I)),
        "mass_S": grid.integrate(S),
        "mass_I": grid.integrate(I),
        "mass_R": grid.integrate(state.R),
        "clamp_events": int(state.clamp_events),
        "supersolution_slack": supersolution_residual(state_prev, state, dt, grid, params, family, rates),
    }


def trajectory_distance(snaps_a, snaps_b, grid: Grid) -> float:
    """Discrete L2(0, T; L2) distance of two ``(S, I)`` trajectories.

    Trapezoidal in time over the shared snapshot times, cell-volume weighted
    in space.
    """
    times = np.array([s.t for s in snaps_a])
    if len(snaps_a) != len(snaps_b) or not np.array_equal(times, [s.t for s in snaps_b]):
        raise ValueError("trajectories must be sampled at identical times")
    sq = np.array([grid.integrate((a.S - b.S) ** 2 + (a.I - b.I) ** 2) for a, b in zip(snaps_a, snaps_b)])
    if len(times) < 2:
        return float(np.sqrt(sq.sum()))
    return float(np.sqrt(np.trapezoid(sq, times)))


def stabilization_check(times: Sequence[float], values: Sequence[float], factor: float = 10.0):
    """Compare the run maximum of a monitor with its first-quarter maximum.

    Returns ``(ok, run_max, first_quarter_max)``; ``ok`` requires finite
    values and ``run_max <= factor * first_quarter_max``.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    cutoff = times[0] + 0.25 * (times[-1] - times[0])
    quarter = float(np.max(values[times <= cutoff]))
    total = float(np.max(values))
    ok = bool(np.all(np.isfinite(values)) and total <= factor * quarter)
    return ok, total, quarter


def slack_constant(record: DiagnosticsRecord, grid: Grid) -> float:
    """Smallest ``C`` with ``slack >= -(dt + h^2) C`` on every recorded row."""
    h2 = min(grid.spacing) ** 2
    slack = record.column("supersolution_slack")
    dts = record.column("dt")
    return float(max(0.0, np.max(-slack / (dts + h2))))


# ---------------------------------------------------------------------------
# manufactured solutions

MMS_OPERATORS = ("laplacian", "gradient", "taxis")


def _cos_product(grid: Grid, wave: int):
    xs = grid.coords()
    ks = [wave * math.pi / e for e in grid.extents]
    c = np.ones(grid.shape)
    for x, k in zip(xs, ks):
        c = c * np.cos(k * x)
    grads = []
    for ax, (x, k) in enumerate(zip(xs, ks)):
        g = np.ones(grid.shape)
        for bx, (y, m) in enumerate(zip(xs, ks)):
            g = g * (-m * np.sin(m * y) if bx == ax else np.cos(m * y))
        grads.append(g)
    lap = -sum(k * k for k in ks) * c
    return c, np.stack(grads), lap


def manufactured_case(operator_id: str, grid: Grid, K: float = 1.0):
    """Discrete and analytic values of ``operator_id`` on smooth Neumann fields."""
    if operator_id == "laplacian":
        f, _, lap = _cos_product(grid, 1)
        return neumann_laplacian(f, grid), lap
    if operator_id == "gradient":
        f, grad, _ = _cos_product(grid, 1)
        return central_gradient(f, grid), grad
    if operator_id == "taxis":
        c1, g1, _ = _cos_product(grid, 1)
        c2, g2, l2 = _cos_product(grid, 2)
        S, grad_S = 0.5 + 0.3 * c1, 0.3 * g1
        I, grad_I, lap_I = 0.2 + 0.15 * c2, 0.15 * g2, 0.15 * l2
        q = K * (1.0 - S) * S
        grad_q = K * (1.0 - 2.0 * S) * grad_S
        exact = np.sum(grad_q * grad_I, axis=0) + q * lap_I
        return upwind_taxis_divergence(S, I, K, grid), exact
    raise ValueError(f"unknown operator {operator_id!r}; expected one of {MMS_OPERATORS}")


def nested_grids(dim: int, extents: Sequence[float], nodes: Sequence[int]) -> list[Grid]:
    return [build_grid(dim, extents, [n] * dim) for n in nodes]


def mms_convergence_study(operator_id: str, grid_sequence: Sequence[Grid]):
    """Max-norm errors and pairwise observed orders ``log2(e_h / e_{h/2})``.

    Returns a list of ``(h, error, order)``; ``order`` is None for the
    coarsest grid.
    """
    if len(grid_sequence) < 3:
        raise ValueError("need at least three grids")
    for a, b in zip(grid_sequence, grid_sequence[1:]):
        if a.dim != b.dim or a.extents != b.extents or any(
            nb - 1 != 2 * (na - 1) for na, nb in zip(a.nodes, b.nodes)
        ):
            raise ValueError(f"grids {a.nodes} -> {b.nodes} are not nested by halving")
    out = []
    prev_err = None
    for grid in grid_sequence:
        discrete, exact = manufactured_case(operator_id, grid)
        err = float(np.max(np.abs(discrete - exact)))
        order = None if prev_err is None else math.log2(prev_err / err)
        out.append((min(grid.spacing), err, order))
        prev_err = err
    return out
