"""Acceptance verification suites.

Each check exercises one verifiable property of the toolkit at its stated
tolerance and returns a CheckResult; ``run_suite`` prints one PASS/FAIL
line per check.  Monte Carlo checks use fixed seeds so a suite run is
reproducible; simulation checks run the shipped presets at full scale and
include their wall-clock budgets.
"""

from __future__ import annotations

import sys
import time
from dataclasses import dataclass

import numpy as np

from .config import build_grid, build_species, load_config
from .errors import RateModelInvalid
from .hydro import inlet_flow_state, step_flow
from .kinetics import (
    ChainConversion,
    NoReaction,
    RateModel,
    SingleStepConversion,
    validate_rate_model,
)
from .mixture import SpeciesSet
from .rd_solver import Grid, SpeciesField, flux_divergence, step_species
from .run import run_simulation
from .stefan_maxwell import (
    assemble,
    dissipation_rate,
    generalized_fluxes,
    solve_fluxes,
    three_species_fluxes,
)


@dataclass
class CheckResult:
    name: str
    passed: bool
    details: str

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.details}"


def _verification_species() -> SpeciesSet:
    return build_species(load_config("diffusion_box"))


def _simplex_with_faces(rng, n_samples, n_species, face_fraction=0.25):
    Y = rng.dirichlet(np.ones(n_species), size=n_samples)
    n_face = int(n_samples * face_fraction)
    which = rng.integers(0, n_species, n_face)
    Y[np.arange(n_face), which] = 0.0
    Y[:n_face] /= Y[:n_face].sum(-1, keepdims=True)
    return Y


def _zero_sum(rng, shape):
    P = rng.standard_normal(shape)
    return P - P.mean(axis=-2, keepdims=True)


def check_oracle_equivalence(n_samples: int = 10_000, seed: int = 101) -> CheckResult:
    """Criterion 1: general flux solve vs the three-species closed form."""
    species = _verification_species()
    rng = np.random.default_rng(seed)
    start = time.perf_counter()
    Y = _simplex_with_faces(rng, n_samples, 3)
    P = _zero_sum(rng, (n_samples, 3, 2))
    F_general = solve_fluxes(species, Y, P).F
    F_closed = three_species_fluxes(species, Y, P)
    scale = np.abs(F_closed).max(axis=(-2, -1))
    rel = np.abs(F_general - F_closed).max(axis=(-2, -1)) / np.maximum(scale, 1e-300)
    elapsed = time.perf_counter() - start
    worst = float(rel.max())
    passed = worst <= 1e-10 and elapsed <= 5.0
    return CheckResult(
        "oracle equivalence (closed-form three-species)",
        passed,
        f"max rel err {worst:.2e} (tol 1e-10), {elapsed:.2f}s (limit 5s), n={n_samples}",
    )


def check_flux_conservation(n_samples: int = 10_000, seed: int = 202) -> CheckResult:
    """Criterion 2: generalized fluxes sum to zero for arbitrary gradients."""
    species = _verification_species()
    rng = np.random.default_rng(seed)
    Y = rng.uniform(0.0, 1.2, size=(n_samples, 3)) + 0.02
    grad_Y = rng.standard_normal((n_samples, 3, 2))  # column sums nonzero
    out = generalized_fluxes(species, Y, grad_Y)
    worst = float(np.abs(out.F.sum(axis=-2)).max())
    passed = worst <= 1e-12
    return CheckResult(
        "flux conservation (sum of generalized fluxes)",
        passed,
        f"max |sum_i F_i| = {worst:.2e} (tol 1e-12), gradients unconstrained",
    )


def check_matrix_structure(n_samples: int = 10_000, seed: int = 303) -> CheckResult:
    """Criterion 3: symmetry, zero sums, quadratic form, coercivity."""
    species = _verification_species()
    rng = np.random.default_rng(seed)
    Y = rng.uniform(0.0, 1.0, size=(n_samples, 3))
    sm = assemble(species, Y)
    sym = float(np.abs(sm.B - np.swapaxes(sm.B, -1, -2)).max())
    row = float(np.abs(sm.B.sum(axis=-1)).max())
    col = float(np.abs(sm.B.sum(axis=-2)).max())
    V = rng.standard_normal((n_samples, 3, 2))
    quad = np.einsum("sij,sjd,sid->s", sm.B, V, V)
    dp = species.d_prime
    ref = np.zeros(n_samples)
    for i in range(3):
        for j in range(i + 1, 3):
            ref += dp[i, j] * Y[:, i] * Y[:, j] * ((V[:, i] - V[:, j]) ** 2).sum(-1)
    quad_err = float(np.abs(quad - ref).max())
    Yp = rng.uniform(1e-4, 1.0, size=(n_samples, 3))
    Cp = assemble(species, Yp).C
    lhs = np.einsum("sij,sjd,sid->s", Cp, V, V)
    bound = species.gamma * Yp.sum(-1) * np.einsum("si,sid,sid->s", Yp, V, V)
    coercive = bool(np.all(lhs >= bound * (1 - 1e-12) - 1e-13))
    passed = sym == 0.0 and row <= 1e-14 and col <= 1e-14 and quad_err <= 1e-12 and coercive
    return CheckResult(
        "matrix structure (symmetry, null sums, coercivity)",
        passed,
        f"sym {sym:.1e}, row/col sums {max(row, col):.1e} (tol 1e-14), "
        f"quadratic identity {quad_err:.1e} (tol 1e-12), coercivity {'ok' if coercive else 'violated'}",
    )


def check_dissipation(n_samples: int = 100_000, seed: int = 404) -> CheckResult:
    """Criterion 4: nonnegative dissipation with a positive empirical floor."""
    species = _verification_species()
    mins = []
    nonneg = True
    for s in (seed, seed + 1):
        rng = np.random.default_rng(s)
        Y = rng.dirichlet(np.ones(3), size=n_samples)
        g = _zero_sum(rng, (n_samples, 3, 2))
        rate = dissipation_rate(species, Y, g)
        nonneg = nonneg and bool(rate.min() >= 0.0)
        mins.append(float((rate / (g**2).sum(axis=(-2, -1))).min()))
    stable = max(mins) / min(mins) < 5.0 if min(mins) > 0 else False
    passed = nonneg and min(mins) > 0.0 and stable
    return CheckResult(
        "dissipation nonnegativity and empirical constant",
        passed,
        f"min rate >= 0: {nonneg}; empirical c1 ~ {mins[0]:.3e} / {mins[1]:.3e} "
        f"(two seeds, n={n_samples} each)",
    )


def _run_preset(name: str, output_dir):
    cfg = load_config(name)
    if output_dir is not None:
        return run_simulation(cfg, output_dir=output_dir)
    import tempfile

    with tempfile.TemporaryDirectory() as tmp:
        return run_simulation(cfg, output_dir=tmp)


def check_diffusion_box(output_dir=None) -> CheckResult:
    """Criterion 5: closed-box run keeps every monitored invariant."""
    res = _run_preset("diffusion_box", output_dir)
    r = res.reports
    min_y = min(x.min_y for x in r)
    sum_dev = max(x.max_sum_deviation for x in r)
    drift = float(np.abs(res.final_mass / res.initial_mass - 1.0).max())
    g = [x.gibbs_energy for x in r]
    max_inc = max(g[i + 1] - g[i] for i in range(len(g) - 1))
    passed = (
        res.steps == 2000
        and min_y >= -1e-10
        and sum_dev <= 1e-8
        and drift <= 1e-8
        and max_inc <= 1e-8
        and res.wall_time <= 60.0
    )
    return CheckResult(
        "closed-box species run (64x64, 2000 steps)",
        passed,
        f"min Y {min_y:.2e} (>= -1e-10), max |sum-1| {sum_dev:.2e} (<= 1e-8), "
        f"mass drift {drift:.2e} (<= 1e-8), max Gibbs increment {max_inc:.2e} (<= 1e-8), "
        f"{res.wall_time:.1f}s (limit 60s)",
    )


def check_flame_channel(output_dir=None) -> CheckResult:
    """Criterion 6: fully coupled run satisfies every report tolerance."""
    res = _run_preset("flame_channel", output_dir)
    r = res.reports
    min_y = min(x.min_y for x in r)
    sum_dev = max(x.max_sum_deviation for x in r)
    min_theta = min(x.min_theta for x in r)
    max_div = max(x.max_div_v for x in r)
    accepted = all(x.step_accepted for x in r)
    passed = (
        res.steps == 1000
        and min_y >= -1e-10
        and sum_dev <= 1e-8
        and min_theta >= -1e-10
        and max_div <= 1e-10
        and accepted
        and res.wall_time <= 120.0
    )
    return CheckResult(
        "coupled flame channel run (64x64, 1000 steps)",
        passed,
        f"min Y {min_y:.2e}, max |sum-1| {sum_dev:.2e}, min theta {min_theta:.2e} "
        f"(>= -1e-10), max div v {max_div:.2e} (<= 1e-10), {res.wall_time:.1f}s (limit 120s)",
    )


def _fick_exact_field(grid, t, dprime, amplitude=0.25):
    X, Z = grid.cell_centers()
    lam = (np.pi**2 / grid.lx**2 + np.pi**2 / grid.lz**2) / dprime
    mode = np.cos(np.pi * X / grid.lx) * np.cos(np.pi * Z / grid.lz)
    return 0.5 + amplitude * np.exp(-lam * t) * mode


def check_binary_fick() -> CheckResult:
    """Criterion 7: exact Fick reduction and manufactured-solution order."""
    cfg = load_config("binary_fick")
    species = build_species(cfg)
    dprime = species.d_prime[0, 1]
    # (a) operator identity on a random sum-to-one field
    grid = build_grid(cfg)
    rng = np.random.default_rng(505)
    base = 0.5 + 0.2 * np.sin(
        2 * np.pi * grid.cell_centers()[0] / grid.lx
    ) * np.cos(np.pi * grid.cell_centers()[1] / grid.lz) + 0.05 * rng.standard_normal(
        (grid.nx, grid.nz)
    )
    field = SpeciesField(np.stack([base, 1.0 - base]), np.array([0.5, 0.5]))
    div = flux_divergence(grid, species, field, "closed")
    padded = np.pad(base, 1, mode="edge")
    lap = (padded[2:, 1:-1] - 2 * base + padded[:-2, 1:-1]) / grid.dx**2 + (
        padded[1:-1, 2:] - 2 * base + padded[1:-1, :-2]
    ) / grid.dz**2
    op_err = float(np.abs(div[0] + lap / dprime).max())

    # (b) manufactured cosine mode, first-order-in-time implicit stepping with
    # dt ~ dx^2 so the total error scales at second order in dx
    errors = {}
    t_end = 0.05
    for cells, dt in ((32, 4e-4), (64, 1e-4)):
        g = Grid(cells, cells, 1.0, 1.0)
        Y0 = _fick_exact_field(g, 0.0, dprime)
        f = SpeciesField(np.stack([Y0, 1.0 - Y0]), np.array([0.5, 0.5]))
        steps = round(t_end / dt)
        for _ in range(steps):
            f = step_species(g, species, NoReaction(2), f, None, None, None, dt, mode="closed")
        exact = _fick_exact_field(g, t_end, dprime)
        errors[cells] = float(
            np.sqrt(((f.Y[0] - exact) ** 2).sum() * g.cell_area)
        )
    order = float(np.log2(errors[32] / errors[64]))
    passed = op_err <= 1e-12 and order >= 1.8
    return CheckResult(
        "binary Fick reduction and convergence order",
        passed,
        f"operator mismatch {op_err:.2e} (tol 1e-12); L2 errors {errors[32]:.3e} -> "
        f"{errors[64]:.3e}, order {order:.2f} (>= 1.8)",
    )


def check_epsilon_study() -> CheckResult:
    """Criterion 8: the regularized runs converge to the unregularized one."""
    cfg = load_config("epsilon_study")
    finals = {}
    for eps in (0.0, 1e-4, 1e-3, 1e-2):
        cfg.epsilon = eps
        res = run_simulation(cfg, write_outputs=False)
        finals[eps] = res.field.Y.copy()
    area = build_grid(cfg).cell_area
    diffs = {
        eps: float(np.sqrt(((finals[eps] - finals[0.0]) ** 2).sum() * area))
        for eps in (1e-4, 1e-3, 1e-2)
    }
    passed = diffs[1e-2] > diffs[1e-3] > diffs[1e-4] > 0.0
    return CheckResult(
        "q-Laplacian regularization study",
        passed,
        "L2 differences vs eps=0: "
        + ", ".join(f"eps={eps:g}: {diffs[eps]:.3e}" for eps in (1e-2, 1e-3, 1e-4))
        + (" (monotone)" if passed else " (NOT monotone)"),
    )


class _BrokenNegativeAlpha(RateModel):
    """Gate probe: production rate dips negative on the domain."""

    name = "broken_negative_alpha"

    def __init__(self):
        self.heats = np.array([1.0, 0.0])
        self.bound = 1.0
        self.lipschitz = 1.0

    def alpha(self, theta, Y):
        Y = np.asarray(Y, dtype=float)
        out = np.zeros_like(Y)
        out[..., 0] = Y[..., 1] - 0.5
        return out

    def beta(self, theta, Y):
        return np.zeros_like(np.asarray(Y, dtype=float))


def check_kinetics_gate(n_samples: int = 100_000) -> CheckResult:
    """Criterion 9: shipped models pass the assumption checks, broken ones fail."""
    shipped = [NoReaction(3), SingleStepConversion(), ChainConversion()]
    failures = []
    for model in shipped:
        try:
            validate_rate_model(model, n_samples=n_samples)
        except RateModelInvalid as exc:
            failures.append(str(exc))
    rejected = False
    try:
        validate_rate_model(_BrokenNegativeAlpha(), n_samples=1000)
    except RateModelInvalid:
        rejected = True
    passed = not failures and rejected
    return CheckResult(
        "kinetics assumption gate",
        passed,
        f"{len(shipped)} shipped models pass on {n_samples} samples; "
        f"negative-alpha model rejected: {rejected}"
        + (f"; failures: {failures}" if failures else ""),
    )


def check_hydro_fixed_point(n_steps: int = 100) -> CheckResult:
    """Criterion 10: the uniform ascending flow is a fixed point of the projection."""
    grid = Grid(32, 32)
    state = inlet_flow_state(grid)
    for _ in range(n_steps):
        state = step_flow(grid, state, dt=5e-3)
    u_dev = float(np.abs(state.u).max())
    w_dev = float(np.abs(state.w - 1.0).max())
    p_dev = float(np.abs(state.p).max())
    worst = max(u_dev, w_dev, p_dev)
    passed = worst <= 1e-12
    return CheckResult(
        "uniform ascending flow fixed point",
        passed,
        f"after {n_steps} steps: max |u| {u_dev:.2e}, max |w-1| {w_dev:.2e}, "
        f"max |p| {p_dev:.2e} (tol 1e-12)",
    )


SUITES = {
    "oracle": [check_oracle_equivalence],
    "conservation": [check_flux_conservation],
    "matrix": [check_matrix_structure],
    "dissipation": [check_dissipation],
    "diffusion_box": [check_diffusion_box],
    "flame_channel": [check_flame_channel],
    "binary_fick": [check_binary_fick],
    "epsilon_study": [check_epsilon_study],
    "kinetics": [check_kinetics_gate],
    "hydro": [check_hydro_fixed_point],
}
SUITES["algebra"] = (
    SUITES["oracle"] + SUITES["conservation"] + SUITES["matrix"] + SUITES["dissipation"]
)
SUITES["all"] = [
    check_oracle_equivalence,
    check_flux_conservation,
    check_matrix_structure,
    check_dissipation,
    check_diffusion_box,
    check_flame_channel,
    check_binary_fick,
    check_epsilon_study,
    check_kinetics_gate,
    check_hydro_fixed_point,
]


def run_suite(name: str, stream=None, output_dir=None) -> bool:
    """Run one named suite, printing a PASS/FAIL line per check."""
    stream = stream if stream is not None else sys.stdout
    try:
        checks = SUITES[name]
    except KeyError:
        raise ValueError(f"unknown suite {name!r}; available: {', '.join(sorted(SUITES))}")
    ok = True
    for check in checks:
        if check in (check_diffusion_box, check_flame_channel):
            result = check(output_dir=output_dir)
        else:
            result = check()
        stream.write(result.line() + "\n")
        stream.flush()
        ok = ok and result.passed
    return ok
