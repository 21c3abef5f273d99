"""Multicomponent Stefan-Maxwell diffusion and premixed-flame channel toolkit."""

from .config import RunConfig, load_config
from .diagnostics import (
    GibbsParams,
    InvariantReport,
    dissipation_integral,
    gibbs_energy,
    invariant_report,
)
from .errors import (
    ConfigInvalid,
    DegenerateComposition,
    McflowError,
    NotStrictlyPositive,
    PoissonSolveFailed,
    RateModelInvalid,
    StepRejected,
)
from .hydro import FlowState, divergence, inlet_flow_state, step_flow, step_temperature
from .kinetics import (
    ChainConversion,
    NoReaction,
    RateModel,
    SingleStepConversion,
    build_rate_model,
    extended_rates,
    heat_release,
    rates,
    validate_rate_model,
)
from .mixture import (
    DELTA,
    MoleData,
    SpeciesSet,
    grad_mole_from_mass,
    mass_from_mole,
    mole_fractions,
)
from .output import TimeSeriesWriter, read_snapshot, read_time_series, write_snapshot
from .rd_solver import (
    Grid,
    RegularizationParams,
    SpeciesField,
    advection_term,
    apply_species_bcs,
    flux_divergence,
    q_laplacian_term,
    stable_dt,
    step_species,
)
from .run import RunResult, run_simulation
from .stefan_maxwell import (
    FluxSolve,
    SMMatrix,
    assemble,
    dissipation_rate,
    driving_vectors,
    flux_coefficients,
    generalized_fluxes,
    solve_fluxes,
    solve_velocities,
    three_species_fluxes,
)

__version__ = "0.1.0"
