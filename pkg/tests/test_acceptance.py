"""Acceptance criteria, each printed as one PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v``; the verdicts are repeated in
the terminal summary under "acceptance criteria".
"""
import json
import time
from dataclasses import replace

import numpy as np
import pytest

from fields import cosine_series
from reptaxis.config import RunConfig
from reptaxis.diagnostics import (
    ESTIMATE_COLUMNS,
    mms_convergence_study,
    nested_grids,
    slack_constant,
    stabilization_check,
)
from reptaxis.grid import build_grid, synthesize_initials
from reptaxis.kinetics import ModelParams
from reptaxis.modes import execute, positivity_problem
from reptaxis.stencils import neumann_laplacian, upwind_taxis_divergence
from reptaxis.timestepper import SimState, StepControl, epsilon_continuation, run

# Measured once on the 33x33 default problem (samples every 0.25 up to t=10)
# with slack_constant and frozen here.
C_CAL = 0.12345495523885319

DENSE_SAMPLES = tuple(np.linspace(0.0, 10.0, 41))


def default_problem(nodes):
    grid = build_grid(2, (10.0, 10.0), (nodes, nodes))
    S0, I0 = synthesize_initials(grid, RunConfig().initial)
    return grid, SimState.initial(S0, I0)


def timed(fn, *args, **kwargs):
    t0 = time.perf_counter()
    out = fn(*args, **kwargs)
    return out, time.perf_counter() - t0


@pytest.fixture(scope="session")
def default_run():
    grid, state0 = default_problem(65)
    result, seconds = timed(run, state0, ModelParams(), grid, StepControl(clamp=False), 10.0, DENSE_SAMPLES)
    return grid, state0, result, seconds


@pytest.fixture(scope="session")
def figure1_runs(tmp_path_factory):
    cfg = replace(RunConfig(), mode="figure1-pair")
    outs = []
    for k in range(2):
        out = tmp_path_factory.mktemp(f"figure1_{k}")
        summary, seconds = timed(execute, cfg, out)
        outs.append((out, summary, seconds))
    return outs


@pytest.fixture(scope="session")
def continuation():
    grid, state0 = default_problem(33)
    steps, seconds = timed(
        epsilon_continuation,
        state0,
        ModelParams(),
        grid,
        StepControl(),
        5.0,
        (0.5, 0.25, 0.125, 0.0625, 0.0),
        tuple(np.linspace(0.0, 5.0, 21)),
    )
    return [s.distance_to_previous for s in steps[1:]], seconds


# 1
def test_disease_free_fixed_point(report):
    grid = build_grid(2, (10.0, 10.0), (65, 65))
    state0 = SimState.initial(np.ones(grid.shape), np.zeros(grid.shape))
    result, seconds = timed(run, state0, ModelParams(), grid, StepControl(), 10.0)
    final = result.final
    err = max(float(np.max(np.abs(final.S - 1))), float(np.max(np.abs(final.I))), float(np.max(np.abs(final.R))))
    ok = err <= 1e-12 and seconds < 10 and final.t == 10.0
    report("1 disease-free fixed point", ok, f"max deviation {err:.3g}, {result.steps} steps, {seconds:.1f}s")


# 2
def test_range_preservation(report, default_run):
    grid, state0, result, seconds = default_run
    snaps = result.snapshots
    min_S = min(float(np.min(s.S)) for s in snaps)
    max_S = max(float(np.max(s.S)) for s in snaps)
    min_I = min(float(np.min(s.I)) for s in snaps)
    repeat = run(state0, ModelParams(), grid, StepControl(clamp=True), 10.0, (10.0,))
    ok = (
        len(snaps) == len(DENSE_SAMPLES)
        and min_S >= -1e-10
        and result.min_S >= -1e-10
        and max_S <= 1 + 1e-10
        and min_I >= -1e-10
        and repeat.final.clamp_events == 0
        and seconds < 120
    )
    detail = (
        f"min S {min_S:.6g}, max S {max_S:.17g}, min I {min_I:.3g}, "
        f"clamp events {repeat.final.clamp_events}, {seconds:.1f}s"
    )
    report("2 range preservation", ok, detail)


# 3
def test_figure1_infected_ordering(report, figure1_runs):
    _, summary, seconds = figure1_runs[0]
    I15, I0 = summary["mass_I"]
    margin = (I15 - I0) / abs(I0)
    ok = margin >= 1e-4 and seconds < 300
    report("3a infected mass K=15 > K=0 at t=10", ok, f"{I15:.6g} vs {I0:.6g}, margin {margin:.3g}, {seconds:.1f}s")


def test_figure1_susceptible_ordering(report, figure1_runs):
    _, summary, seconds = figure1_runs[0]
    S15, S0 = summary["mass_S"]
    margin = (S15 - S0) / abs(S0)
    ok = margin >= 1e-4 and seconds < 300
    report("3b susceptible mass K=15 > K=0 at t=10", ok, f"{S15:.6g} vs {S0:.6g}, margin {margin:.3g}")


# 4
def test_continuation_distances_decrease(report, continuation):
    d, seconds = continuation
    ok = all(b < a for a, b in zip(d, d[1:])) and seconds < 300
    report("4a eps-continuation distances strictly decrease", ok, ", ".join(f"{x:.4g}" for x in d))


def test_continuation_last_below_half_first(report, continuation):
    d, seconds = continuation
    ok = d[-1] < 0.5 * d[0] and seconds < 300
    report("4b last distance < 0.5 x first", ok, f"{d[-1]:.4g} vs {0.5 * d[0]:.4g}, {seconds:.1f}s")


# 5
def test_positivity_1d(report):
    cfg = RunConfig()
    grid, state0 = positivity_problem(cfg)
    assert grid.dim == 1 and grid.nodes == (257,)
    assert float(np.min(state0.S)) >= 0.2 - 1e-15 and float(np.max(state0.S)) <= 1.0
    result, seconds = timed(run, state0, ModelParams(), grid, StepControl(), 10.0, (0.0, 10.0))
    ok = result.min_S > 0 and seconds < 30
    report("5 1D positivity", ok, f"floor {result.min_S:.4g}, {result.steps} steps, {seconds:.1f}s")


# 6
@pytest.mark.parametrize("operator, lo, hi", [("laplacian", 1.7, 2.3), ("gradient", 1.7, 2.3), ("taxis", 0.7, 1.5)])
def test_mms_orders(report, operator, lo, hi):
    grids = nested_grids(2, (10.0, 10.0), (33, 65, 129))
    rows, seconds = timed(mms_convergence_study, operator, grids)
    orders = [order for _, _, order in rows[1:]]
    ok = all(lo <= o <= hi for o in orders) and seconds < 60
    report(f"6 MMS order {operator}", ok, ", ".join(f"{o:.4f}" for o in orders) + f" in [{lo}, {hi}]")


# 7
def test_discrete_conservation(report):
    grid = build_grid(2, (10.0, 10.0), (65, 65))
    w = grid.cell_volumes()
    t0 = time.perf_counter()
    worst = 0.0
    for k in range(100):
        u = cosine_series(grid, k)
        S = 0.5 + 0.45 * np.tanh(u)
        I = 0.5 + 0.5 * np.tanh(cosine_series(grid, k + 100))
        worst = max(
            worst,
            abs(float(np.sum(w * neumann_laplacian(u, grid)))),
            abs(float(np.sum(w * upwind_taxis_divergence(S, I, 15.0, grid)))),
        )
    seconds = time.perf_counter() - t0
    ok = worst <= 1e-12 * grid.size and seconds < 10
    report("7 discrete conservation", ok, f"max |sum| {worst:.3g} <= {1e-12 * grid.size:.3g}, {seconds:.1f}s")


# 8
def test_supersolution_calibration_reproducible():
    grid, state0 = default_problem(33)
    result = run(state0, ModelParams(), grid, StepControl(), 10.0, DENSE_SAMPLES)
    assert slack_constant(result.record, grid) == pytest.approx(C_CAL, rel=1e-9)


def test_supersolution_slack(report, default_run):
    grid, _, result, _ = default_run
    h2 = min(grid.spacing) ** 2
    slack = result.record.column("supersolution_slack")
    bound = -(result.record.column("dt") + h2) * C_CAL
    ok = bool(np.all(slack >= bound))
    report("8 supersolution slack", ok, f"min slack {slack.min():.4g}, worst bound {bound.min():.4g}, C_cal {C_CAL:.6g}")


# 9
@pytest.mark.parametrize("column", ESTIMATE_COLUMNS)
def test_estimate_stabilization(report, default_run, column):
    _, _, result, _ = default_run
    ok, total, quarter = stabilization_check(result.record.column("t"), result.record.column(column))
    report(f"9 stabilization {column}", ok, f"run max {total:.4g}, first-quarter max {quarter:.4g}")


# 10
def test_determinism(report, figure1_runs):
    (a, sa, _), (b, sb, _) = figure1_runs
    ma, mb = (a / "manifest.json").read_bytes(), (b / "manifest.json").read_bytes()
    n = len(json.loads(ma)["artifacts"])
    report("10 determinism", ma == mb and sa == sb, f"{n} artifacts, manifests {'identical' if ma == mb else 'differ'}")
