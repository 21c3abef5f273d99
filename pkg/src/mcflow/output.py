"""Snapshot and time-series output.

Snapshots are VTK legacy STRUCTURED_POINTS text files holding the
cell-centered fields (temperature, pressure, the velocity averaged to
cell centers, and every mass fraction) as point data on the cell-center
lattice.  Values are printed with 17 significant digits so a re-read
reproduces the doubles bit for bit.  The time series is a CSV file whose
columns are exactly the InvariantReport fields, one row per step.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .diagnostics import InvariantReport
from .hydro import FlowState
from .rd_solver import Grid, SpeciesField

FLOAT_FMT = "%.17g"


def _vtk_order(values: np.ndarray) -> np.ndarray:
    # VTK expects x varying fastest; our arrays are (nx, nz)
    return values.T.reshape(-1)


def _write_scalar(handle, name: str, values: np.ndarray) -> None:
    handle.write(f"SCALARS {name} double 1\n")
    handle.write("LOOKUP_TABLE default\n")
    for v in _vtk_order(values):
        handle.write(FLOAT_FMT % v + "\n")


def write_snapshot(path, grid: Grid, state: FlowState, field: SpeciesField) -> Path:
    """Write one VTK legacy snapshot; returns the path written."""
    path = Path(path)
    ucell = 0.5 * (state.u[1:, :] + state.u[:-1, :])
    wcell = 0.5 * (state.w[:, 1:] + state.w[:, :-1])
    with open(path, "w") as handle:
        handle.write("# vtk DataFile Version 3.0\n")
        handle.write("mcflow channel snapshot\n")
        handle.write("ASCII\n")
        handle.write("DATASET STRUCTURED_POINTS\n")
        handle.write(f"DIMENSIONS {grid.nx} {grid.nz} 1\n")
        handle.write(
            "ORIGIN " + FLOAT_FMT % (0.5 * grid.dx) + " " + FLOAT_FMT % (0.5 * grid.dz) + " 0\n"
        )
        handle.write(
            "SPACING " + FLOAT_FMT % grid.dx + " " + FLOAT_FMT % grid.dz + " 1\n"
        )
        handle.write(f"POINT_DATA {grid.nx * grid.nz}\n")
        _write_scalar(handle, "theta", state.theta)
        _write_scalar(handle, "pressure", state.p)
        for i in range(field.n_species):
            _write_scalar(handle, f"Y_{i + 1}", field.Y[i])
        handle.write("VECTORS velocity double\n")
        for vx, vz in zip(_vtk_order(ucell), _vtk_order(wcell)):
            handle.write(FLOAT_FMT % vx + " " + FLOAT_FMT % vz + " 0\n")
    return path


def read_snapshot(path) -> dict:
    """Parse a snapshot written by write_snapshot back into arrays.

    Returns a dict with the scalar fields as (nx, nz) arrays and
    "velocity" as an (nx, nz, 3) array.
    """
    lines = Path(path).read_text().splitlines()
    dims = None
    out: dict = {}
    i = 0
    while i < len(lines):
        line = lines[i]
        if line.startswith("DIMENSIONS"):
            _, nx, nz, _ = line.split()
            dims = (int(nx), int(nz))
        elif line.startswith("SCALARS"):
            name = line.split()[1]
            count = dims[0] * dims[1]
            values = np.array([float(v) for v in lines[i + 2 : i + 2 + count]])
            out[name] = values.reshape(dims[1], dims[0]).T
            i += 1 + count
        elif line.startswith("VECTORS"):
            count = dims[0] * dims[1]
            rows = [[float(v) for v in lines[i + 1 + k].split()] for k in range(count)]
            vec = np.array(rows).reshape(dims[1], dims[0], 3)
            out["velocity"] = np.swapaxes(vec, 0, 1)
            i += count
        i += 1
    return out


class TimeSeriesWriter:
    """CSV writer with one InvariantReport row per accepted step."""

    def __init__(self, path):
        self.path = Path(path)
        self._handle = open(self.path, "w")
        self._handle.write(",".join(InvariantReport.field_names()) + "\n")

    def write(self, report: InvariantReport) -> None:
        row = []
        for name in InvariantReport.field_names():
            value = getattr(report, name)
            if isinstance(value, bool):
                row.append(str(int(value)))
            else:
                row.append(FLOAT_FMT % value)
        self._handle.write(",".join(row) + "\n")

    def close(self) -> None:
        self._handle.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False


def read_time_series(path) -> dict:
    """Read a time-series CSV into a dict of column arrays."""
    lines = Path(path).read_text().splitlines()
    names = lines[0].split(",")
    data = np.array([[float(v) for v in line.split(",")] for line in lines[1:]])
    if data.size == 0:
        data = np.zeros((0, len(names)))
    return {name: data[:, k] for k, name in enumerate(names)}
