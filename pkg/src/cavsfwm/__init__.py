"""Cavity-enhanced spontaneous four-wave mixing in fibers.

Joint spectral and temporal amplitudes, cavity mode structure and
photon-pair flux for degenerate-pump SFWM in Fabry-Perot or ring cavities.
"""
__version__ = "0.1.0"

from .config import RunConfig, parse_config, serialize
from .design import (
    DesignReport,
    TransitionTarget,
    design_report,
    phasematch_solve,
    r2_from_finesse,
    required_finesse,
)
from .dispersion import (
    DispersionSample,
    FiberSpec,
    WavenumberTable,
    effective_index,
    group_slowness,
    nonlinear_coefficient,
    silica_index,
    wavenumber,
)
from .errors import (
    CavsfwmError,
    ConfigError,
    ContractError,
    DomainError,
    InfeasibleDesignError,
    ModeCutoffError,
    NumericalError,
)
from .flux import (
    FluxResult,
    GeomModelInputs,
    flux_cw,
    flux_pulsed,
    flux_ratio_sweep,
    geom_model,
    zone_boundaries,
)
from .spectral import (
    CavitySpec,
    FilterSpec,
    PumpSpec,
    SpectralGrid,
    airy,
    finesse_coefficient,
    free_spectral_range,
    jsa_grid,
    jsa_no_cavity,
    jsi,
    mode_filter,
    mode_spacing,
    mode_width,
    phase_mismatch,
    pump_envelope,
    resonance_phase_offset,
    tune_cavity,
)
from .temporal import (
    ClosedFormParams,
    ModeAmplitudeMatrix,
    TemporalGrid,
    jta_numeric,
    jti_closed_form,
    jti_numeric,
    mode_amplitudes,
    rotate_to_sum_diff,
    round_trip_time,
    time_difference_marginal,
)
