"""Incompressible flow with buoyancy and the temperature equation.

Staggered (MAC) layout; see rd_solver for the grid conventions.  The
x-velocity u lives on x-faces (nx+1, nz), the vertical velocity w on
z-faces (nx, nz+1), pressure and temperature at cell centers.

Boundary conditions (channel with inflow at the bottom, outflow at the top):

    u = 0 on the whole boundary (walls and inlet/outlet),
    w = 1 on bottom and top, dw/dx = 0 on the lateral walls,
    theta = 0 at the inlet, zero normal gradient elsewhere.

Time stepping is an incremental pressure-correction projection: a
provisional velocity with upwind advection, implicit Prandtl-scaled
viscosity, the old pressure gradient and the buoyancy source, followed by
a pressure-increment Poisson solve and a divergence-free correction.  On
the MAC grid the discrete divergence of the corrected velocity vanishes to
solver precision.  The uniform ascending flow (u, w) = (0, 1) with zero
temperature is an exact fixed point.

The implicit operators and the Poisson matrix are built from 1-D second
difference operators via Kronecker sums and their LU factorizations are
cached per (grid, coefficient); the pure-Neumann pressure system is pinned
at one cell and the result is shifted to zero mean.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import PoissonSolveFailed, StepRejected
from .kinetics import RateModel, heat_release
from .rd_solver import Grid, SpeciesField, cell_velocity, upwind_advection

THETA_TOL = 1e-10
DIV_TOL = 1e-10


@dataclass
class FlowState:
    """Staggered velocity, pressure and temperature with the two flow constants."""

    u: np.ndarray  # (nx+1, nz)
    w: np.ndarray  # (nx, nz+1)
    p: np.ndarray  # (nx, nz)
    theta: np.ndarray  # (nx, nz)
    prandtl: float = 1.0
    buoyancy: float = 1.0

    def copy(self) -> "FlowState":
        return FlowState(
            self.u.copy(), self.w.copy(), self.p.copy(), self.theta.copy(),
            self.prandtl, self.buoyancy,
        )


def inlet_flow_state(grid: Grid, prandtl: float = 1.0, buoyancy: float = 1.0) -> FlowState:
    """The uniform ascending state v = e_n, theta = 0, p = 0."""
    return FlowState(
        u=np.zeros((grid.nx + 1, grid.nz)),
        w=np.ones((grid.nx, grid.nz + 1)),
        p=np.zeros((grid.nx, grid.nz)),
        theta=np.zeros((grid.nx, grid.nz)),
        prandtl=prandtl,
        buoyancy=buoyancy,
    )


def divergence(grid: Grid, u: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Discrete divergence at cell centers."""
    return (u[1:, :] - u[:-1, :]) / grid.dx + (w[:, 1:] - w[:, :-1]) / grid.dz


# ---------------------------------------------------------------------------
# 1-D second-difference operators and cached factorizations
# ---------------------------------------------------------------------------


def _second_difference(m: int, h: float, lo: str, hi: str) -> sp.csr_matrix:
    """Tridiagonal d^2/dx^2 with one of three boundary closures per end.

    "value"  : Dirichlet with the boundary value located at a face of the
               unknown lattice (the known neighbor moves to the rhs);
    "ghost0" : homogeneous Dirichlet half a cell outside (ghost = -center);
    "mirror" : zero normal gradient (ghost = center).
    """
    main = np.full(m, -2.0)
    off = np.ones(m - 1)
    closure = {"value": -2.0, "ghost0": -3.0, "mirror": -1.0}
    main[0] = closure[lo]
    main[-1] = closure[hi]
    return sp.diags([off, main, off], [-1, 0, 1], format="csr") / h**2


_FACTOR_CACHE: dict = {}


def _factorized(key, build):
    got = _FACTOR_CACHE.get(key)
    if got is None:
        got = spla.splu(build().tocsc())
        _FACTOR_CACHE[key] = got
    return got


def _helmholtz_lu(grid: Grid, coef: float, kind: str):
    """LU of I - coef * Laplacian for the u, w or theta unknown layout."""

    def build():
        if kind == "u":
            lxx = _second_difference(grid.nx - 1, grid.dx, "value", "value")
            lzz = _second_difference(grid.nz, grid.dz, "ghost0", "ghost0")
            nxu, nzu = grid.nx - 1, grid.nz
        elif kind == "w":
            lxx = _second_difference(grid.nx, grid.dx, "mirror", "mirror")
            lzz = _second_difference(grid.nz - 1, grid.dz, "value", "value")
            nxu, nzu = grid.nx, grid.nz - 1
        elif kind == "theta":
            lxx = _second_difference(grid.nx, grid.dx, "mirror", "mirror")
            lzz = _second_difference(grid.nz, grid.dz, "ghost0", "mirror")
            nxu, nzu = grid.nx, grid.nz
        else:
            raise ValueError(kind)
        lap = sp.kron(lxx, sp.eye(nzu)) + sp.kron(sp.eye(nxu), lzz)
        return (sp.eye(nxu * nzu) - coef * lap).tocsr()

    return _factorized((grid, round(coef, 16), kind), build)


def _poisson_operator(grid: Grid):
    """Pure-Neumann Laplacian (singular) and its pinned LU factorization."""
    key = (grid, "poisson")
    got = _FACTOR_CACHE.get(key)
    if got is None:
        lxx = _second_difference(grid.nx, grid.dx, "mirror", "mirror")
        lzz = _second_difference(grid.nz, grid.dz, "mirror", "mirror")
        lap = (sp.kron(lxx, sp.eye(grid.nz)) + sp.kron(sp.eye(grid.nx), lzz)).tocsr()
        pinned = lap.tolil()
        pinned[0, :] = 0.0
        pinned[0, 0] = 1.0
        got = (lap, spla.splu(pinned.tocsc()))
        _FACTOR_CACHE[key] = got
    return got


def solve_pressure_poisson(grid: Grid, rhs: np.ndarray) -> np.ndarray:
    """Solve lap(p) = rhs with Neumann walls; mean-zero result.

    The singular system is pinned at one cell; for compatible data the
    pinned solution solves every row, which is verified against the full
    operator and reported as PoissonSolveFailed otherwise.
    """
    lap, lu = _poisson_operator(grid)
    b = rhs.reshape(-1).copy()
    b[0] = 0.0
    p = lu.solve(b)
    residual = np.abs(lap @ p - rhs.reshape(-1)).max()
    scale = max(np.abs(rhs).max(), 1e-300)
    if residual > 1e-10 * scale:
        raise PoissonSolveFailed(
            f"pressure residual {residual:.3e} above 1e-10 * {scale:.3e} "
            "(incompatible boundary data?)"
        )
    p = p.reshape(grid.nx, grid.nz)
    return p - p.mean()


# ---------------------------------------------------------------------------
# temperature
# ---------------------------------------------------------------------------


def _pad_theta(theta: np.ndarray) -> np.ndarray:
    """Ghost-padded temperature: Dirichlet 0 at the inlet, mirror elsewhere."""
    nx, nz = theta.shape
    padded = np.empty((nx + 2, nz + 2))
    padded[1:-1, 1:-1] = theta
    padded[0, 1:-1] = theta[0, :]
    padded[-1, 1:-1] = theta[-1, :]
    padded[1:-1, 0] = -theta[:, 0]
    padded[1:-1, -1] = theta[:, -1]
    padded[0, 0] = padded[1, 0]
    padded[-1, 0] = padded[-2, 0]
    padded[0, -1] = padded[1, -1]
    padded[-1, -1] = padded[-2, -1]
    return padded


def step_temperature(
    grid: Grid, model: RateModel, state: FlowState, field: SpeciesField, dt: float
) -> FlowState:
    """Advance theta: explicit upwind advection and heat release, implicit diffusion.

    The implicit operator is an M-matrix and the source is nonnegative
    wherever theta <= 0, so the discrete minimum cannot dip below zero
    beyond roundoff; a violation raises StepRejected.
    """
    ucell, wcell = cell_velocity(state.u, state.w)
    adv = upwind_advection(grid, ucell, wcell, _pad_theta(state.theta))
    source = heat_release(model, state.theta, np.moveaxis(field.Y, 0, -1))
    rhs = state.theta + dt * (source - adv)
    lu = _helmholtz_lu(grid, dt, "theta")
    theta_new = lu.solve(rhs.reshape(-1)).reshape(grid.nx, grid.nz)
    if theta_new.min() < -THETA_TOL:
        raise StepRejected(
            f"temperature undershoot {theta_new.min():.3e} below -{THETA_TOL:.0e}"
        )
    out = state.copy()
    out.theta = theta_new
    return out


# ---------------------------------------------------------------------------
# flow
# ---------------------------------------------------------------------------


def _advection_u(grid: Grid, u: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Upwind (v . grad) u at interior x-faces, shape (nx-1, nz)."""
    uc = u[1:-1, :]
    dxm = (uc - u[:-2, :]) / grid.dx
    dxp = (u[2:, :] - uc) / grid.dx
    up = np.empty((grid.nx - 1, grid.nz + 2))
    up[:, 1:-1] = uc
    up[:, 0] = -uc[:, 0]  # u = 0 on the bottom wall plane
    up[:, -1] = -uc[:, -1]  # and on the top
    dzm = (uc - up[:, :-2]) / grid.dz
    dzp = (up[:, 2:] - uc) / grid.dz
    # w columns i-1 and i around interior face i, z-faces k and k+1 around height k
    w_at_u = 0.25 * (w[:-1, :-1] + w[:-1, 1:] + w[1:, :-1] + w[1:, 1:])
    return (
        np.maximum(uc, 0) * dxm
        + np.minimum(uc, 0) * dxp
        + np.maximum(w_at_u, 0) * dzm
        + np.minimum(w_at_u, 0) * dzp
    )


def _advection_w(grid: Grid, u: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Upwind (v . grad) w at interior z-faces, shape (nx, nz-1)."""
    wc = w[:, 1:-1]
    dzm = (wc - w[:, :-2]) / grid.dz
    dzp = (w[:, 2:] - wc) / grid.dz
    wp = np.empty((grid.nx + 2, grid.nz - 1))
    wp[1:-1, :] = wc
    wp[0, :] = wc[0, :]  # dw/dx = 0 at the lateral walls
    wp[-1, :] = wc[-1, :]
    dxm = (wc - wp[:-2, :]) / grid.dx
    dxp = (wp[2:, :] - wc) / grid.dx
    u_at_w = 0.25 * (u[:-1, :-1] + u[:-1, 1:] + u[1:, :-1] + u[1:, 1:])
    return (
        np.maximum(u_at_w, 0) * dxm
        + np.minimum(u_at_w, 0) * dxp
        + np.maximum(wc, 0) * dzm
        + np.minimum(wc, 0) * dzp
    )


def step_flow(grid: Grid, state: FlowState, dt: float) -> FlowState:
    """One incremental projection step; returns a divergence-free state.

    (i) provisional velocity with upwind advection, implicit viscosity,
    the old pressure gradient and the buoyancy source sigma * theta on
    vertical faces; (ii) pressure-increment Poisson solve; (iii) correction
    of the interior faces.  Boundary faces keep their prescribed values.
    """
    pr = state.prandtl
    nu_dt = pr * dt

    adv_u = _advection_u(grid, state.u, state.w)
    rhs_u = state.u[1:-1, :] + dt * (
        -adv_u - (state.p[1:, :] - state.p[:-1, :]) / grid.dx
    )
    u_star = state.u.copy()
    u_star[1:-1, :] = (
        _helmholtz_lu(grid, nu_dt, "u").solve(rhs_u.reshape(-1)).reshape(grid.nx - 1, grid.nz)
    )
    u_star[0, :] = 0.0
    u_star[-1, :] = 0.0

    adv_w = _advection_w(grid, state.u, state.w)
    theta_face = 0.5 * (state.theta[:, :-1] + state.theta[:, 1:])
    rhs_w = state.w[:, 1:-1] + dt * (
        -adv_w
        - (state.p[:, 1:] - state.p[:, :-1]) / grid.dz
        + state.buoyancy * theta_face
    )
    # known boundary faces (w = 1) enter the implicit z-stencil
    rhs_w[:, 0] += nu_dt / grid.dz**2 * state.w[:, 0]
    rhs_w[:, -1] += nu_dt / grid.dz**2 * state.w[:, -1]
    w_star = state.w.copy()
    w_star[:, 1:-1] = (
        _helmholtz_lu(grid, nu_dt, "w").solve(rhs_w.reshape(-1)).reshape(grid.nx, grid.nz - 1)
    )

    div_star = divergence(grid, u_star, w_star)
    phi = solve_pressure_poisson(grid, div_star / dt)

    u_new = u_star
    w_new = w_star
    u_new[1:-1, :] -= dt * (phi[1:, :] - phi[:-1, :]) / grid.dx
    w_new[:, 1:-1] -= dt * (phi[:, 1:] - phi[:, :-1]) / grid.dz

    out = state.copy()
    out.u = u_new
    out.w = w_new
    out.p = state.p + phi
    out.p -= out.p.mean()
    return out
