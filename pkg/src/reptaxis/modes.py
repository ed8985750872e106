"""The five run modes exposed by the ``simulate`` command."""
from __future__ import annotations

import csv
import json
import logging
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import RunConfig, emit_config
from .diagnostics import MMS_OPERATORS, mms_convergence_study, nested_grids
from .grid import build_grid, synthesize_initials
from .output import snapshot_stem, write_manifest, write_snapshot
from .timestepper import NumericalFailure, RunResult, SimState, epsilon_continuation, run

log = logging.getLogger(__name__)


class BranchFailure(NumericalFailure):
    def __init__(self, branch, cause):
        super().__init__(f"branch {branch}: {cause}", getattr(cause, "time", None), getattr(cause, "node", None))
        self.branch = branch


def _initial_state(cfg: RunConfig, grid=None) -> SimState:
    S0, I0 = synthesize_initials(grid or cfg.grid, cfg.initial)
    return SimState.initial(S0, I0)


def _write_run(result: RunResult, grid, directory: Path) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    for snap in result.snapshots:
        for name in ("S", "I", "R"):
            write_snapshot(getattr(snap, name), grid, snapshot_stem(directory / "fields", name, snap.t))
    result.record.to_csv(directory / "diagnostics.csv")


def _finish(out: Path, cfg: RunConfig, summary: dict) -> dict:
    (out / "config.txt").write_text(emit_config(cfg))
    with open(out / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=1, sort_keys=True)
        fh.write("\n")
    write_manifest(out)
    return summary


def run_single(cfg: RunConfig, out: Path) -> dict:
    result = run(_initial_state(cfg), cfg.params, cfg.grid, cfg.control, cfg.t_end, cfg.sample_times)
    _write_run(result, cfg.grid, out)
    final = result.final
    summary = {
        "mode": "single",
        "steps": result.steps,
        "t_end": final.t,
        "mass_S": cfg.grid.integrate(final.S),
        "mass_I": cfg.grid.integrate(final.I),
        "mass_R": cfg.grid.integrate(final.R),
        "min_S": result.min_S,
        "clamp_events": final.clamp_events,
    }
    return _finish(out, cfg, summary)


def run_figure1(cfg: RunConfig, out: Path) -> dict:
    """Two runs that differ only in K; per-snapshot comparison table."""
    state0 = _initial_state(cfg)
    grid = cfg.grid
    results = []
    names = []
    for i, K in enumerate(cfg.figure1_K):
        name = f"branch{i}_K{K:g}"
        try:
            res = run(state0, replace(cfg.params, K=K), grid, cfg.control, cfg.t_end, cfg.sample_times)
        except NumericalFailure as exc:
            raise BranchFailure(name, exc) from exc
        _write_run(res, grid, out / name)
        results.append(res)
        names.append(name)

    with open(out / "comparison.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["branch", "K", "t", "mass_I", "mass_S", "min_S"])
        for name, K, res in zip(names, cfg.figure1_K, results):
            for snap in res.snapshots:
                writer.writerow(
                    [name, f"{K:.17g}", f"{snap.t:.17g}", f"{grid.integrate(snap.I):.17g}",
                     f"{grid.integrate(snap.S):.17g}", f"{float(np.min(snap.S)):.17g}"]
                )

    a, b = (r.final for r in results)
    mass_I = [grid.integrate(a.I), grid.integrate(b.I)]
    mass_S = [grid.integrate(a.S), grid.integrate(b.S)]
    summary = {
        "mode": "figure1-pair",
        "branches": names,
        "K": list(cfg.figure1_K),
        "t_end": a.t,
        "mass_I": mass_I,
        "mass_S": mass_S,
        "infected_relative_margin": (mass_I[0] - mass_I[1]) / abs(mass_I[1]) if mass_I[1] else None,
        "susceptible_relative_margin": (mass_S[0] - mass_S[1]) / abs(mass_S[1]) if mass_S[1] else None,
        "infected_higher_in_first": mass_I[0] > mass_I[1],
        "susceptible_higher_in_first": mass_S[0] > mass_S[1],
    }
    return _finish(out, cfg, summary)


def run_eps_continuation(cfg: RunConfig, out: Path) -> dict:
    steps = epsilon_continuation(
        _initial_state(cfg), cfg.params, cfg.grid, cfg.control, cfg.t_end, cfg.eps_list, cfg.sample_times
    )
    with open(out / "continuation.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["eps", "distance_to_previous"])
        for s in steps:
            writer.writerow([f"{s.eps:.17g}", "" if s.distance_to_previous is None else f"{s.distance_to_previous:.17g}"])
    for s in steps:
        _write_run(s.result, cfg.grid, out / f"eps_{s.eps:g}")
    distances = [s.distance_to_previous for s in steps[1:]]
    summary = {
        "mode": "eps-continuation",
        "eps": [s.eps for s in steps],
        "distances": distances,
        "strictly_decreasing": all(b < a for a, b in zip(distances, distances[1:])),
    }
    return _finish(out, cfg, summary)


def positivity_problem(cfg: RunConfig):
    """1D grid and initial state for the lower-bound study."""
    grid = build_grid(1, cfg.grid.extents[:1], [cfg.positivity_nodes])
    initial = replace(cfg.initial, susceptible_floor=cfg.positivity_floor)
    S0, I0 = synthesize_initials(grid, initial)
    return grid, SimState.initial(S0, I0)


def run_positivity_1d(cfg: RunConfig, out: Path) -> dict:
    grid, state0 = positivity_problem(cfg)
    result = run(state0, cfg.params, grid, cfg.control, cfg.t_end, cfg.sample_times)
    _write_run(result, grid, out)
    summary = {
        "mode": "positivity-1d",
        "nodes": cfg.positivity_nodes,
        "initial_min_S": float(np.min(state0.S)),
        "floor": result.min_S,
        "strictly_positive": result.min_S > 0,
    }
    return _finish(out, cfg, summary)


def run_mms(cfg: RunConfig, out: Path) -> dict:
    grids = nested_grids(cfg.grid.dim, cfg.grid.extents, cfg.mms_nodes)
    summary = {"mode": "mms", "operators": {}}
    with open(out / "mms.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["operator", "h", "error", "order"])
        for op in MMS_OPERATORS:
            rows = mms_convergence_study(op, grids)
            summary["operators"][op] = [order for _, _, order in rows[1:]]
            for h, err, order in rows:
                writer.writerow([op, f"{h:.17g}", f"{err:.17g}", "" if order is None else f"{order:.17g}"])
    return _finish(out, cfg, summary)


RUNNERS = {
    "single": run_single,
    "figure1-pair": run_figure1,
    "eps-continuation": run_eps_continuation,
    "positivity-1d": run_positivity_1d,
    "mms": run_mms,
}


def execute(cfg: RunConfig, out_dir=None) -> dict:
    out = Path(out_dir or cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    log.info("running mode %s into %s", cfg.mode, out)
    return RUNNERS[cfg.mode](cfg, out)
