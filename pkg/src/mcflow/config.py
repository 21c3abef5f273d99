"""Run configuration: TOML loading, validation, and object builders.

A run file is a nested TOML document with the blocks species, kinetics,
grid, physics, numerics and output; every physical constant of a run
lives here, none are hard-coded.  ``load_config`` parses and validates a
file (or one of the shipped presets by name) into a RunConfig; the
``build_*`` helpers turn a RunConfig into solver objects, rejecting
anything that violates the module preconditions with ConfigInvalid.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigInvalid, McflowError
from .hydro import FlowState, inlet_flow_state
from .kinetics import RateModel, build_rate_model
from .mixture import SpeciesSet
from .rd_solver import MODES, Grid, RegularizationParams, SpeciesField

PRESETS = ("diffusion_box", "binary_fick", "three_species_oracle", "flame_channel", "epsilon_study")

SPECIES_PROFILES = ("inlet", "blob")
THETA_PROFILES = ("zero", "hot_band", "hot_kernel")
FLOW_PROFILES = ("ascending", "rest")


@dataclass
class InitialConditions:
    species_profile: str = "inlet"
    blob_amplitude: float = 0.1
    blob_width: float = 0.02
    theta_profile: str = "zero"
    band_center: float = 0.25
    band_width: float = 0.05
    band_amplitude: float = 1.0
    flow_profile: str = "ascending"


@dataclass
class RunConfig:
    molar_mass: list
    binary_diffusion: list
    kappa: float
    model_name: str
    model_params: dict
    nx: int
    nz: int
    lx: float
    lz: float
    prandtl: float
    buoyancy: float
    inlet: list
    boundaries: str
    evolve_flow: bool
    evolve_temperature: bool
    initial: InitialConditions
    dt: float
    t_end: float
    epsilon: float
    q: float
    eta: float
    output_dir: str
    snapshot_interval: int
    label: str = "run"


def _require(table: dict, key: str, where: str):
    if key not in table:
        raise ConfigInvalid(f"missing {where}.{key}")
    return table[key]


def config_from_dict(doc: dict, label: str = "run") -> RunConfig:
    """Build and validate a RunConfig from a parsed TOML document."""
    try:
        sp = _require(doc, "species", "config")
        ki = _require(doc, "kinetics", "config")
        gr = _require(doc, "grid", "config")
        ph = _require(doc, "physics", "config")
        nu = _require(doc, "numerics", "config")
        out = doc.get("output", {})
        init_raw = ph.get("initial", {})
        init = InitialConditions(
            species_profile=init_raw.get("species", "inlet"),
            blob_amplitude=float(init_raw.get("blob_amplitude", 0.1)),
            blob_width=float(init_raw.get("blob_width", 0.02)),
            theta_profile=init_raw.get("theta", "zero"),
            band_center=float(init_raw.get("band_center", 0.25)),
            band_width=float(init_raw.get("band_width", 0.05)),
            band_amplitude=float(init_raw.get("band_amplitude", 1.0)),
            flow_profile=init_raw.get("flow", "ascending"),
        )
        cfg = RunConfig(
            molar_mass=_require(sp, "molar_mass", "species"),
            binary_diffusion=_require(sp, "binary_diffusion", "species"),
            kappa=float(sp.get("kappa", 1.0)),
            model_name=_require(ki, "model", "kinetics"),
            model_params=dict(ki.get("params", {})),
            nx=int(_require(gr, "nx", "grid")),
            nz=int(_require(gr, "nz", "grid")),
            lx=float(gr.get("lx", 1.0)),
            lz=float(gr.get("lz", 1.0)),
            prandtl=float(ph.get("prandtl", 1.0)),
            buoyancy=float(ph.get("buoyancy", 1.0)),
            inlet=_require(ph, "inlet", "physics"),
            boundaries=ph.get("boundaries", "channel"),
            evolve_flow=bool(ph.get("evolve_flow", True)),
            evolve_temperature=bool(ph.get("evolve_temperature", True)),
            initial=init,
            dt=float(_require(nu, "dt", "numerics")),
            t_end=float(_require(nu, "t_end", "numerics")),
            epsilon=float(nu.get("epsilon", 0.0)),
            q=float(nu.get("q", 4.0)),
            eta=float(nu.get("eta", 1e-8)),
            output_dir=out.get("directory", "out"),
            snapshot_interval=int(out.get("snapshot_interval", 0)),
            label=label,
        )
    except (TypeError, ValueError) as exc:
        raise ConfigInvalid(f"malformed configuration value: {exc}") from exc
    validate_config(cfg)
    return cfg


def validate_config(cfg: RunConfig) -> None:
    inlet = np.asarray(cfg.inlet, dtype=float)
    if np.any(inlet <= 0) or abs(inlet.sum() - 1.0) > 1e-12:
        raise ConfigInvalid("physics.inlet must be strictly positive and sum to one")
    if len(cfg.molar_mass) != inlet.size:
        raise ConfigInvalid("species.molar_mass and physics.inlet disagree on N")
    if cfg.boundaries not in MODES:
        raise ConfigInvalid(f"physics.boundaries must be one of {MODES}")
    if cfg.initial.species_profile not in SPECIES_PROFILES:
        raise ConfigInvalid(f"initial species profile must be one of {SPECIES_PROFILES}")
    if cfg.initial.theta_profile not in THETA_PROFILES:
        raise ConfigInvalid(f"initial theta profile must be one of {THETA_PROFILES}")
    if cfg.initial.flow_profile not in FLOW_PROFILES:
        raise ConfigInvalid(f"initial flow profile must be one of {FLOW_PROFILES}")
    if cfg.dt <= 0 or cfg.t_end <= 0:
        raise ConfigInvalid("numerics.dt and numerics.t_end must be positive")
    if cfg.epsilon < 0 or not cfg.q > 2:
        raise ConfigInvalid("numerics.epsilon must be >= 0 and numerics.q > 2")
    if not 0 < cfg.eta < 1:
        raise ConfigInvalid("numerics.eta must lie in (0, 1)")
    if cfg.snapshot_interval < 0:
        raise ConfigInvalid("output.snapshot_interval must be >= 0")
    try:
        build_species(cfg)
        build_grid(cfg)
    except (ValueError, McflowError) as exc:
        raise ConfigInvalid(str(exc)) from exc


def load_config(source: str | Path) -> RunConfig:
    """Load a TOML run file; a bare preset name loads the shipped preset."""
    name = str(source)
    if name in PRESETS:
        text = resources.files("mcflow").joinpath(f"presets/{name}.toml").read_text()
        label = name
    else:
        path = Path(source)
        if not path.exists():
            raise ConfigInvalid(f"no such config file or preset: {source}")
        text = path.read_text()
        label = path.stem
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigInvalid(f"TOML parse error in {source}: {exc}") from exc
    return config_from_dict(doc, label=label)


# ---------------------------------------------------------------------------
# builders
# ---------------------------------------------------------------------------


def build_species(cfg: RunConfig) -> SpeciesSet:
    try:
        return SpeciesSet(
            molar_mass=np.asarray(cfg.molar_mass, dtype=float),
            binary_diffusion=np.asarray(cfg.binary_diffusion, dtype=float),
            kappa=cfg.kappa,
        )
    except ValueError as exc:
        raise ConfigInvalid(f"species block invalid: {exc}") from exc


def build_grid(cfg: RunConfig) -> Grid:
    try:
        return Grid(nx=cfg.nx, nz=cfg.nz, lx=cfg.lx, lz=cfg.lz)
    except ValueError as exc:
        raise ConfigInvalid(f"grid block invalid: {exc}") from exc


def build_model(cfg: RunConfig) -> RateModel:
    """Instantiate and validate the rate model (load-time assumption gate)."""
    n = np.asarray(cfg.inlet).size
    params = dict(cfg.model_params)
    if cfg.model_name == "none":
        params.setdefault("n", n)
    try:
        model = build_rate_model(cfg.model_name, **params)
    except (TypeError, ValueError) as exc:
        raise ConfigInvalid(f"kinetics block invalid: {exc}") from exc
    if model.n_species != n:
        raise ConfigInvalid(
            f"rate model {cfg.model_name!r} is for {model.n_species} species, config has {n}"
        )
    return model


def build_regularization(cfg: RunConfig) -> RegularizationParams:
    return RegularizationParams(epsilon=cfg.epsilon, q=cfg.q)


def build_initial_fields(cfg: RunConfig) -> tuple[SpeciesField, FlowState]:
    """Initial species field and flow state from the named profiles."""
    grid = build_grid(cfg)
    inlet = np.asarray(cfg.inlet, dtype=float)
    X, Z = grid.cell_centers()
    Y = np.tile(inlet[:, None, None], (1, grid.nx, grid.nz)).astype(float)
    init = cfg.initial
    if init.species_profile == "blob":
        bump = init.blob_amplitude * np.exp(
            -((X - 0.5 * grid.lx) ** 2 + (Z - 0.5 * grid.lz) ** 2) / init.blob_width
        )
        Y[0] += bump
        Y[1] -= bump
        if Y.min() <= 0:
            raise ConfigInvalid("blob initial condition drives a species nonpositive")
    field = SpeciesField(Y, inlet)

    state = inlet_flow_state(grid, prandtl=cfg.prandtl, buoyancy=cfg.buoyancy)
    if init.flow_profile == "rest":
        state.u[:] = 0.0
        state.w[:] = 0.0
    if init.theta_profile == "hot_band":
        state.theta = init.band_amplitude * np.exp(
            -(((Z - init.band_center * cfg.lz) / (init.band_width * cfg.lz)) ** 2)
        )
    elif init.theta_profile == "hot_kernel":
        r2 = (X - 0.5 * cfg.lx) ** 2 + (Z - init.band_center * cfg.lz) ** 2
        state.theta = init.band_amplitude * np.exp(-r2 / (init.band_width * cfg.lz) ** 2)
    return field, state
