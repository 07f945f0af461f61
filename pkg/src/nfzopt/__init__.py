"""Minimum-volume no-fly zones for drones sharing airspace with a satellite ground station."""

from .errors import CapabilityError, ConfigError, GeometryError, InfeasibleBudgetError, NfzError
from .field import (
    Cell,
    GeneralField,
    HemisphericalRegion,
    HomogeneousField,
    PiecewiseField,
    eliminated_interference,
    expected_interference,
    interference_variance,
    banded_field,
)
from .montecarlo import run_replications, sample_ppp, simulate_interference
from .nfz import (
    Budget,
    NfzSurface,
    best_cylinder_of_volume,
    build_optimal_nfz,
    compare_shapes,
    cylinder_surface,
    dome_of_volume,
    markov_tail_bound,
    optimal_nfz_of_volume,
    optimal_radius,
    solve_multiplier,
    surface_volume,
)
from .quadrature import AngularGrid, default_breaks
from .radio import (
    BoundedPowerLaw,
    ConstantPattern,
    Direction,
    TabulatedPattern,
    UlaPattern,
    inverse_path_loss,
    path_loss,
    ula_gain,
)
from .spectrum import (
    EmissionMask,
    SpectrumPlan,
    average_emission_power,
    block_emission_power,
    default_mask,
    guard_band_sweep,
)

__version__ = "0.1.0"
