"""Batch simulation driver: the operator-split time loop.

Per step: flow projection, temperature, species transport, then the
invariant report.  A StepRejected from any stage halves the step size and
retries, up to MAX_HALVINGS times, after which the run aborts; the halved
step is kept for the remainder of the run.  Output: a CSV time series
(one InvariantReport row per accepted step), periodic snapshots when
requested, and a final-state snapshot.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from .config import (
    RunConfig,
    build_grid,
    build_initial_fields,
    build_model,
    build_regularization,
    build_species,
)
from .diagnostics import GibbsParams, InvariantReport, invariant_report
from .errors import StepRejected
from .hydro import step_flow, step_temperature
from .rd_solver import stable_dt, step_species
from .output import TimeSeriesWriter, write_snapshot

MAX_HALVINGS = 10


@dataclass
class RunResult:
    config: RunConfig
    steps: int
    time: float
    wall_time: float
    initial_mass: np.ndarray
    final_mass: np.ndarray
    reports: list
    field: object
    state: object
    output_dir: Path | None
    series_path: Path | None = None
    snapshot_paths: list = dc_field(default_factory=list)


def run_simulation(
    cfg: RunConfig,
    output_dir: str | Path | None = None,
    t_end: float | None = None,
    dt: float | None = None,
    write_outputs: bool = True,
) -> RunResult:
    """Run a configured simulation to t_end; returns the final state and monitors."""
    species = build_species(cfg)
    grid = build_grid(cfg)
    model = build_model(cfg)
    reg = build_regularization(cfg)
    field, state = build_initial_fields(cfg)
    gibbs = GibbsParams(eta=cfg.eta)
    mode = cfg.boundaries

    t_stop = cfg.t_end if t_end is None else float(t_end)
    dt_current = cfg.dt if dt is None else float(dt)
    if dt_current <= 0 or t_stop <= 0:
        raise ValueError("dt and t_end must be positive")

    out_dir = None
    series = None
    snapshot_paths = []
    if write_outputs:
        out_dir = Path(output_dir if output_dir is not None else cfg.output_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        series = TimeSeriesWriter(out_dir / f"{cfg.label}_series.csv")

    area = grid.cell_area
    initial_mass = field.Y.sum(axis=(1, 2)) * area
    reports: list[InvariantReport] = []
    t = 0.0
    steps = 0
    wall_start = time.perf_counter()
    try:
        quiescent = not cfg.evolve_flow and np.abs(state.u).max() == 0.0 and np.abs(state.w).max() == 0.0
        while t < t_stop - 1e-12 * t_stop:
            dt_bound = stable_dt(
                grid, model, reg, dt_current,
                u=state.u, w=state.w,
                field=field if reg.epsilon > 0 else None,
                mode=mode,
            )
            dt_step = min(dt_bound, t_stop - t)
            for attempt in range(MAX_HALVINGS + 1):
                try:
                    new_state = state
                    if cfg.evolve_flow:
                        new_state = step_flow(grid, new_state, dt_step)
                    if cfg.evolve_temperature:
                        new_state = step_temperature(grid, model, new_state, field, dt_step)
                    new_field = step_species(
                        grid, species, model, field,
                        None if quiescent else new_state.u,
                        None if quiescent else new_state.w,
                        new_state.theta, dt_step, reg, mode,
                    )
                    break
                except StepRejected:
                    if attempt == MAX_HALVINGS:
                        raise
                    dt_step *= 0.5
                    dt_current *= 0.5
            state, field = new_state, new_field
            t += dt_step
            steps += 1
            report = invariant_report(grid, species, state, field, gibbs, mode)
            reports.append(report)
            if series is not None:
                series.write(report)
            if (
                out_dir is not None
                and cfg.snapshot_interval > 0
                and steps % cfg.snapshot_interval == 0
            ):
                snap = out_dir / f"{cfg.label}_{steps:06d}.vtk"
                write_snapshot(snap, grid, state, field)
                snapshot_paths.append(snap)
    finally:
        if series is not None:
            series.close()

    if out_dir is not None:
        snap = out_dir / f"{cfg.label}_final.vtk"
        write_snapshot(snap, grid, state, field)
        snapshot_paths.append(snap)

    return RunResult(
        config=cfg,
        steps=steps,
        time=t,
        wall_time=time.perf_counter() - wall_start,
        initial_mass=initial_mass,
        final_mass=field.Y.sum(axis=(1, 2)) * area,
        reports=reports,
        field=field,
        state=state,
        output_dir=out_dir,
        series_path=None if out_dir is None else out_dir / f"{cfg.label}_series.csv",
        snapshot_paths=snapshot_paths,
    )
