"""1D reaction-diffusion laboratory for a mass-conserving activator system.

The model tracks four fields: substrate u, activator v, product p, and a
storage species y. Reactions are built so that every conversion moves mass
between tracked pools, which makes the total a conserved quantity and gives
the dynamics an energy that decreases along trajectories. Setting the
reverse-rate parameter eps to zero recovers the familiar two-species
substrate-depletion system as a special case.
"""

from .analysis import (
    Direction,
    FrontTrack,
    NAMED_DIRECTIONS,
    OscillationReport,
    PersistenceResult,
    ScanCurve,
    autocat_shift,
    detect_oscillations,
    fit_scaling,
    landscape_scan,
    named_direction,
    pattern_amplitude,
    persistence_time,
    removal_shift,
    scan_derivatives_at,
    storage_shift,
    track_front,
)
from .config import ConfigError, ScenarioConfig, parse_config, serialize_config
from .grid import Grid, integrate, laplacian_neumann
from .integrator import (
    DivergenceError,
    StepperConfig,
    Trajectory,
    simulate,
    simulate_classical,
    step_classical,
    step_variational,
)
from .model import (
    Params,
    SigmaGauge,
    State,
    chemical_potentials,
    free_energy,
    make_sigma,
    reaction_rates,
    rhs_classical,
    rhs_variational,
    total_mass,
)
from .steady import (
    NewtonError,
    UniformSteadyState,
    classical_residual,
    count_pulses,
    gaussian_bump_ic,
    generate_pattern_library,
    load_library,
    load_profile,
    newton_steady_classical,
    save_library,
    stability_probe,
    uniform_steady_states,
)

__version__ = "0.1.0"

__all__ = [
    "Direction",
    "FrontTrack",
    "NAMED_DIRECTIONS",
    "OscillationReport",
    "PersistenceResult",
    "ScanCurve",
    "autocat_shift",
    "detect_oscillations",
    "fit_scaling",
    "landscape_scan",
    "named_direction",
    "pattern_amplitude",
    "persistence_time",
    "removal_shift",
    "scan_derivatives_at",
    "storage_shift",
    "track_front",
    "ConfigError",
    "ScenarioConfig",
    "parse_config",
    "serialize_config",
    "Grid",
    "integrate",
    "laplacian_neumann",
    "DivergenceError",
    "StepperConfig",
    "Trajectory",
    "simulate",
    "simulate_classical",
    "step_classical",
    "step_variational",
    "Params",
    "SigmaGauge",
    "State",
    "chemical_potentials",
    "free_energy",
    "make_sigma",
    "reaction_rates",
    "rhs_classical",
    "rhs_variational",
    "total_mass",
    "NewtonError",
    "UniformSteadyState",
    "classical_residual",
    "count_pulses",
    "gaussian_bump_ic",
    "generate_pattern_library",
    "load_library",
    "load_profile",
    "newton_steady_classical",
    "save_library",
    "stability_probe",
    "uniform_steady_states",
    "__version__",
]
