"""Finite-volume discretization and time stepping of the species system.

Grid layout (uniform, staggered):

    cell centers   (i + 1/2) dx, (k + 1/2) dz    scalars, mass fractions
    x-faces        i dx                           horizontal velocity u
    z-faces        k dz                           vertical velocity w

``x`` runs across the channel (width ``lx``), ``z`` runs along it (height
``lz``); the inlet is the bottom boundary z = 0, the outlet the top.
Species arrays have shape ``(N, nx, nz)``.

Scheme, per step of size dt:

    * advection: first-order upwind, explicit;
    * reaction: explicit, clipped rates;
    * multicomponent diffusion: conservative two-point face fluxes with
      the full N x N coupling, treated implicitly with the coefficient
      matrices frozen ("lagged") at the old time level;
    * optional q-Laplacian regularization: explicit.

Because the flux-coefficient columns sum to zero at every face and the
reaction rates sum to zero, the cellwise total sum(Y) obeys a pure
advection equation with inlet value one; the conservative face fluxes
telescope, so a closed box conserves each species' total mass.  Both
properties hold to roundoff and are monitored after every step: a step
leaving min(Y) below -TOL_POS or carrying |sum(Y) - 1| above TOL_SUM is
rejected rather than repaired.

Boundary handling (``mode``):

    "channel"   Dirichlet Y = Y_inlet at z = 0 (ghost reflection through
                the face value), zero normal diffusive flux at the top and
                the lateral walls;
    "closed"    zero normal diffusive flux everywhere.

Zero normal flux is imposed through a zero normal gradient of every
species, which kills the flux for any coefficient matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import StepRejected
from .kinetics import RateModel, extended_rates
from .mixture import SpeciesSet
from .stefan_maxwell import flux_coefficients

TOL_POS = 1e-10
TOL_SUM = 1e-8
MODES = ("channel", "closed")


@dataclass(frozen=True)
class Grid:
    """Uniform Cartesian channel grid, nx cells across by nz cells along."""

    nx: int
    nz: int
    lx: float = 1.0
    lz: float = 1.0

    def __post_init__(self):
        if self.nx < 2 or self.nz < 2:
            raise ValueError("grid needs at least 2 cells per direction")
        if self.lx <= 0 or self.lz <= 0:
            raise ValueError("domain extents must be positive")

    @property
    def dx(self) -> float:
        return self.lx / self.nx

    @property
    def dz(self) -> float:
        return self.lz / self.nz

    @property
    def n_cells(self) -> int:
        return self.nx * self.nz

    @property
    def cell_area(self) -> float:
        return self.dx * self.dz

    def cell_centers(self):
        x = (np.arange(self.nx) + 0.5) * self.dx
        z = (np.arange(self.nz) + 0.5) * self.dz
        return np.meshgrid(x, z, indexing="ij")


@dataclass
class SpeciesField:
    """Mass fractions on the grid plus the (constant) inlet composition."""

    Y: np.ndarray  # (N, nx, nz)
    inlet: np.ndarray  # (N,)

    def __post_init__(self):
        self.Y = np.asarray(self.Y, dtype=float)
        self.inlet = np.asarray(self.inlet, dtype=float)
        if self.Y.ndim != 3 or self.Y.shape[0] != self.inlet.size:
            raise ValueError("Y must have shape (N, nx, nz) matching the inlet vector")
        if np.any(self.inlet <= 0) or abs(self.inlet.sum() - 1.0) > 1e-12:
            raise ValueError("inlet composition must be strictly positive and sum to one")

    @property
    def n_species(self) -> int:
        return self.inlet.size

    def copy(self) -> "SpeciesField":
        return SpeciesField(self.Y.copy(), self.inlet.copy())


@dataclass(frozen=True)
class RegularizationParams:
    """q-Laplacian regularization knobs; epsilon = 0 recovers the physics."""

    epsilon: float = 0.0
    q: float = 4.0

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError("epsilon must be nonnegative")
        if not self.q > 2:
            raise ValueError("q must exceed 2")


def apply_species_bcs(grid: Grid, field: SpeciesField, mode: str = "channel") -> np.ndarray:
    """Ghost-padded mass fractions, shape (N, nx+2, nz+2).

    The inlet ghost reflects through the face so the face average equals
    the inlet composition exactly; all other ghosts copy the interior
    value (zero normal gradient, hence zero normal flux termwise).
    """
    if mode not in MODES:
        raise ValueError(f"unknown boundary mode {mode!r}")
    n, nx, nz = field.Y.shape
    padded = np.empty((n, nx + 2, nz + 2))
    padded[:, 1:-1, 1:-1] = field.Y
    padded[:, 0, 1:-1] = field.Y[:, 0, :]
    padded[:, -1, 1:-1] = field.Y[:, -1, :]
    padded[:, 1:-1, -1] = field.Y[:, :, -1]
    if mode == "channel":
        padded[:, 1:-1, 0] = 2.0 * field.inlet[:, None] - field.Y[:, :, 0]
    else:
        padded[:, 1:-1, 0] = field.Y[:, :, 0]
    # corners are never read; fill for hygiene
    padded[:, 0, 0] = padded[:, 1, 0]
    padded[:, -1, 0] = padded[:, -2, 0]
    padded[:, 0, -1] = padded[:, 1, -1]
    padded[:, -1, -1] = padded[:, -2, -1]
    return padded


def _face_coefficients(species: SpeciesSet, field: SpeciesField, mode: str):
    """Flux-coefficient matrices at interior faces (and the inlet face).

    Face compositions are arithmetic means of the adjacent cells; the
    inlet face composition is exactly the inlet vector.
    """
    Yl = np.moveaxis(field.Y, 0, -1)  # (nx, nz, N)
    ax = flux_coefficients(species, 0.5 * (Yl[1:, :, :] + Yl[:-1, :, :]))
    az = flux_coefficients(species, 0.5 * (Yl[:, 1:, :] + Yl[:, :-1, :]))
    a_inlet = flux_coefficients(species, field.inlet) if mode == "channel" else None
    return ax, az, a_inlet


def flux_divergence(
    grid: Grid, species: SpeciesSet, field: SpeciesField, mode: str = "channel"
) -> np.ndarray:
    """div F_i per cell from conservative two-point face fluxes, (N, nx, nz)."""
    if mode not in MODES:
        raise ValueError(f"unknown boundary mode {mode!r}")
    nx, nz = grid.nx, grid.nz
    n = field.n_species
    Yl = np.moveaxis(field.Y, 0, -1)
    ax, az, a_inlet = _face_coefficients(species, field, mode)

    Fx = np.zeros((nx + 1, nz, n))
    dYx = (Yl[1:, :, :] - Yl[:-1, :, :]) / grid.dx
    Fx[1:-1] = -np.einsum("xzij,xzj->xzi", ax, dYx)

    Fz = np.zeros((nx, nz + 1, n))
    dYz = (Yl[:, 1:, :] - Yl[:, :-1, :]) / grid.dz
    Fz[:, 1:-1] = -np.einsum("xzij,xzj->xzi", az, dYz)
    if mode == "channel":
        dY_in = 2.0 * (Yl[:, 0, :] - field.inlet) / grid.dz
        Fz[:, 0] = -np.einsum("ij,xj->xi", a_inlet, dY_in)

    div = (Fx[1:] - Fx[:-1]) / grid.dx + (Fz[:, 1:] - Fz[:, :-1]) / grid.dz
    return np.moveaxis(div, -1, 0)


def cell_velocity(u: np.ndarray, w: np.ndarray):
    """Average staggered face velocities to cell centers."""
    return 0.5 * (u[1:, :] + u[:-1, :]), 0.5 * (w[:, 1:] + w[:, :-1])


def upwind_advection(grid: Grid, ucell: np.ndarray, wcell: np.ndarray, padded: np.ndarray) -> np.ndarray:
    """First-order upwind (v . grad) of one or more ghost-padded scalars.

    ``padded`` has shape (..., nx+2, nz+2); the result drops the ghosts.
    """
    c = padded[..., 1:-1, 1:-1]
    dxm = (c - padded[..., :-2, 1:-1]) / grid.dx
    dxp = (padded[..., 2:, 1:-1] - c) / grid.dx
    dzm = (c - padded[..., 1:-1, :-2]) / grid.dz
    dzp = (padded[..., 1:-1, 2:] - c) / grid.dz
    up = np.maximum(ucell, 0.0)
    un = np.minimum(ucell, 0.0)
    wp = np.maximum(wcell, 0.0)
    wn = np.minimum(wcell, 0.0)
    return up * dxm + un * dxp + wp * dzm + wn * dzp


def advection_term(
    grid: Grid, u: np.ndarray, w: np.ndarray, field: SpeciesField, mode: str = "channel"
) -> np.ndarray:
    """(v . grad) Y_i per cell with upwind differences, (N, nx, nz)."""
    ucell, wcell = cell_velocity(u, w)
    padded = apply_species_bcs(grid, field, mode)
    return upwind_advection(grid, ucell, wcell, padded)


def _face_gradients(grid: Grid, padded: np.ndarray):
    """Normal and averaged-transverse gradients at interior faces.

    Returns (gx_n, gx_t) on x-faces and (gz_n, gz_t) on z-faces, each with
    the species axis first.  Boundary-face normal gradients implied by the
    ghosts are used in the transverse averages.
    """
    # one-sided differences across every face, including boundary faces
    gx_all = (padded[:, 1:, 1:-1] - padded[:, :-1, 1:-1]) / grid.dx  # (N, nx+1, nz)
    gz_all = (padded[:, 1:-1, 1:] - padded[:, 1:-1, :-1]) / grid.dz  # (N, nx, nz+1)
    gx_n = gx_all[:, 1:-1, :]  # interior x-faces
    gz_n = gz_all[:, :, 1:-1]  # interior z-faces
    # transverse component by four-point averaging
    gz_at_cell = 0.5 * (gz_all[:, :, 1:] + gz_all[:, :, :-1])  # (N, nx, nz)
    gx_t = 0.5 * (gz_at_cell[:, 1:, :] + gz_at_cell[:, :-1, :])
    gx_at_cell = 0.5 * (gx_all[:, 1:, :] + gx_all[:, :-1, :])
    gz_t = 0.5 * (gx_at_cell[:, :, 1:] + gx_at_cell[:, :, :-1])
    return gx_n, gx_t, gz_n, gz_t


def q_laplacian_term(
    grid: Grid, field: SpeciesField, reg: RegularizationParams, mode: str = "closed"
) -> np.ndarray:
    """epsilon * div(|grad Y|^(q-2) grad Y_i) per cell, (N, nx, nz).

    The gradient norm couples all species: |grad Y|^2 = sum_j |grad Y_j|^2,
    evaluated facewise with averaged transverse differences.  Boundary
    faces carry no regularization flux (its normal gradient vanishes with
    the ghost construction on zero-flux boundaries).
    """
    n, nx, nz = field.Y.shape
    if reg.epsilon == 0.0:
        return np.zeros((n, nx, nz))
    padded = apply_species_bcs(grid, field, mode)
    gx_n, gx_t, gz_n, gz_t = _face_gradients(grid, padded)
    p = 0.5 * (reg.q - 2.0)
    coef_x = reg.epsilon * ((gx_n**2 + gx_t**2).sum(axis=0)) ** p
    coef_z = reg.epsilon * ((gz_n**2 + gz_t**2).sum(axis=0)) ** p
    Fx = np.zeros((n, nx + 1, nz))
    Fx[:, 1:-1, :] = coef_x * gx_n
    Fz = np.zeros((n, nx, nz + 1))
    Fz[:, :, 1:-1] = coef_z * gz_n
    if mode == "channel":
        # inlet face: the Dirichlet ghost supplies the normal gradient
        gz_b = (padded[:, 1:-1, 1] - padded[:, 1:-1, 0]) / grid.dz
        coef_b = reg.epsilon * ((gz_b**2).sum(axis=0)) ** p
        Fz[:, :, 0] = coef_b * gz_b
    return (Fx[:, 1:, :] - Fx[:, :-1, :]) / grid.dx + (Fz[:, :, 1:] - Fz[:, :, :-1]) / grid.dz


# ---------------------------------------------------------------------------
# implicit diffusion operator
# ---------------------------------------------------------------------------

_PATTERN_CACHE: dict = {}


def _assembly_pattern(grid: Grid, n: int):
    """Block-sparse (BSR) layout of the step matrix, computed once per grid.

    Unknowns are cell-major (index = cell * N + species) and cells are
    x-major (cell = i * nz + k), so each block row holds at most five N x N
    blocks with already-sorted block columns: west (cell - nz), south
    (cell - 1), diagonal, north (cell + 1), east (cell + nz).  The cached
    plan stores the BSR indptr/indices plus the slot position of every
    block type, so a step only scatters freshly computed blocks into a
    data array.
    """
    key = (grid, n)
    cached = _PATTERN_CACHE.get(key)
    if cached is not None:
        return cached
    nx, nz = grid.nx, grid.nz
    nc = nx * nz
    i_idx, k_idx = np.meshgrid(np.arange(nx), np.arange(nz), indexing="ij")
    has_w = (i_idx > 0).reshape(-1)
    has_s = (k_idx > 0).reshape(-1)
    has_n = (k_idx < nz - 1).reshape(-1)
    has_e = (i_idx < nx - 1).reshape(-1)
    counts = 1 + has_w + has_s + has_n + has_e
    indptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int32)
    base = indptr[:-1]
    pos_w = base
    pos_s = base + has_w
    pos_d = base + has_w + has_s
    pos_n = pos_d + 1
    pos_e = pos_n + has_n
    cells = np.arange(nc)
    nnzb = int(indptr[-1])
    indices = np.empty(nnzb, dtype=np.int32)
    indices[pos_d] = cells
    indices[pos_w[has_w]] = cells[has_w] - nz
    indices[pos_s[has_s]] = cells[has_s] - 1
    indices[pos_n[has_n]] = cells[has_n] + 1
    indices[pos_e[has_e]] = cells[has_e] + nz
    cached = {
        "indptr": indptr,
        "indices": indices,
        "nnzb": nnzb,
        "pos_d": pos_d,
        "pos_w": pos_w[has_w],
        "pos_s": pos_s[has_s],
        "pos_n": pos_n[has_n],
        "pos_e": pos_e[has_e],
        "has": (has_w, has_s, has_n, has_e),
    }
    _PATTERN_CACHE[key] = cached
    return cached


def _assemble_step_matrix(grid: Grid, dt: float, ax, az, a_inlet, pattern):
    """BSR matrix of I + dt * Ddiff with the given lagged face coefficients."""
    n = ax.shape[-1]
    nx, nz = grid.nx, grid.nz
    nc = nx * nz
    cx = dt / grid.dx**2
    cz = dt / grid.dz**2
    # zero-padded face blocks: index [i] is the face left/below cell column i
    ax_full = np.zeros((nx + 1, nz, n, n))
    np.multiply(cx, ax, out=ax_full[1:-1])
    az_full = np.zeros((nx, nz + 1, n, n))
    np.multiply(cz, az, out=az_full[:, 1:-1])
    diag = np.add(ax_full[:-1], ax_full[1:])
    diag += az_full[:, :-1]
    diag += az_full[:, 1:]
    if a_inlet is not None:
        diag[:, 0] += (2.0 * cz) * a_inlet
    idx = np.arange(n)
    diag[:, :, idx, idx] += 1.0

    data = np.empty((pattern["nnzb"], n, n))
    data[pattern["pos_d"]] = diag.reshape(nc, n, n)
    has_w, has_s, has_n, has_e = pattern["has"]
    west = -ax_full[1:-1].reshape(-1, n, n)  # face between columns i-1, i
    data[pattern["pos_w"]] = west
    data[pattern["pos_e"]] = west
    south = -az_full[:, 1:-1].reshape(-1, n, n)
    data[pattern["pos_s"]] = south
    data[pattern["pos_n"]] = south
    return sp.bsr_matrix(
        (data, pattern["indices"], pattern["indptr"]),
        shape=(nc * n, nc * n),
    )


def _solve_step_system(matrix, rhs, warm_start):
    """Iterative solve with a direct fallback; verifies the residual."""
    x, info = spla.bicgstab(matrix, rhs, x0=warm_start, rtol=1e-12, atol=0.0, maxiter=1000)
    scale = np.abs(rhs).max()
    if info != 0 or np.abs(matrix @ x - rhs).max() > 1e-10 * max(scale, 1e-300):
        x = spla.splu(matrix.tocsc(), permc_spec="MMD_AT_PLUS_A").solve(rhs)
    return x


def stable_dt(
    grid: Grid,
    model: RateModel,
    reg: RegularizationParams,
    dt_request: float,
    u: np.ndarray | None = None,
    w: np.ndarray | None = None,
    field: SpeciesField | None = None,
    mode: str = "channel",
) -> float:
    """Largest admissible step not exceeding the request.

    Bounds: advective CFL 0.5 * min(dx, dz) / max|v|, reaction
    1 / lipschitz, and for epsilon > 0 the explicit regularization bound
    0.25 * min(dx, dz)^2 / (epsilon * max|grad Y|^(q-2)).
    """
    dt = dt_request
    h = min(grid.dx, grid.dz)
    if u is not None and w is not None:
        vmax = max(np.abs(u).max(), np.abs(w).max())
        if vmax > 0:
            dt = min(dt, 0.5 * h / vmax)
    if model.lipschitz > 0:
        dt = min(dt, 1.0 / model.lipschitz)
    if reg.epsilon > 0 and field is not None:
        padded = apply_species_bcs(grid, field, mode)
        gx_n, gx_t, gz_n, gz_t = _face_gradients(grid, padded)
        gmax2 = max(
            ((gx_n**2 + gx_t**2).sum(axis=0)).max(initial=0.0),
            ((gz_n**2 + gz_t**2).sum(axis=0)).max(initial=0.0),
        )
        coef = reg.epsilon * gmax2 ** (0.5 * (reg.q - 2.0))
        if coef > 0:
            dt = min(dt, 0.25 * h**2 / coef)
    return dt


def step_species(
    grid: Grid,
    species: SpeciesSet,
    model: RateModel,
    field: SpeciesField,
    u: np.ndarray | None,
    w: np.ndarray | None,
    theta: np.ndarray | None,
    dt: float,
    reg: RegularizationParams = RegularizationParams(),
    mode: str = "channel",
) -> SpeciesField:
    """Advance all mass fractions by one step of size dt.

    Velocity may be None (quiescent runs); theta may be None when the rate
    model is temperature-independent in the inert sense (it is passed to
    the rates as zero).  Raises StepRejected when the new state violates
    the positivity or sum-to-one tolerances.
    """
    if mode not in MODES:
        raise ValueError(f"unknown boundary mode {mode!r}")
    n, nx, nz = field.Y.shape
    Yl = np.moveaxis(field.Y, 0, -1)  # (nx, nz, N)

    explicit = np.zeros((nx, nz, n))
    if u is not None and w is not None:
        adv = advection_term(grid, u, w, field, mode)
        explicit -= np.moveaxis(adv, 0, -1)
    th = np.zeros((nx, nz)) if theta is None else theta
    if model.bound > 0:
        explicit += extended_rates(model, th, Yl)
    if reg.epsilon > 0:
        explicit += np.moveaxis(q_laplacian_term(grid, field, reg, mode), 0, -1)

    ax, az, a_inlet = _face_coefficients(species, field, mode)
    pattern = _assembly_pattern(grid, n)
    matrix = _assemble_step_matrix(grid, dt, ax, az, a_inlet, pattern)

    rhs = (Yl + dt * explicit).reshape(-1).copy()
    if a_inlet is not None:
        # constant part of the inlet flux: + dt * (2/dz^2) * a(Yu) Yu per bottom cell
        inlet_src = (2.0 * dt / grid.dz**2) * (a_inlet @ field.inlet)
        bottom = (np.arange(nx) * nz + 0) * n
        for i in range(n):
            rhs[bottom + i] += inlet_src[i]

    x = _solve_step_system(matrix, rhs, warm_start=Yl.reshape(-1))
    Y_new = np.moveaxis(x.reshape(nx, nz, n), -1, 0)

    if Y_new.min() < -TOL_POS:
        raise StepRejected(f"mass fraction undershoot {Y_new.min():.3e} below -{TOL_POS:.0e}")
    sum_dev = np.abs(Y_new.sum(axis=0) - 1.0).max()
    if sum_dev > TOL_SUM:
        raise StepRejected(f"sum-to-one deviation {sum_dev:.3e} above {TOL_SUM:.0e}")
    return SpeciesField(Y_new, field.inlet.copy())
