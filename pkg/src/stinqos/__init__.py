"""Statistical QoS metrics for satellite-terrestrial links under finite
blocklength coding: peak-AoI and delay violation bounds from Mellin-transform
network calculus, error-rate QoS exponents, and the Monte Carlo simulators
that cross-validate them.
"""

from .aoi import (
    ArrivalModel,
    ServiceModel,
    UpdateTrace,
    build_trace,
    cumulative_interarrival,
    cumulative_service,
    departure_times,
    empirical_violation,
    peak_aoi,
    simulate_trace,
    sojourn_times,
)
from .channel import (
    InterfererField,
    LinkBudget,
    Scenario,
    ShadowedRicianParams,
    aggregate_interference,
    hyp1f1_integer,
    pathloss_factor,
    place_interferers,
    sample_channel_gain,
    shadowed_rician_pdf,
    sinr,
)
from .errors import (
    ConfigError,
    DomainError,
    NumericError,
    StabilityError,
    StinQosError,
)
from .fbc import (
    CodingSpec,
    ErrorModel,
    average_error,
    capacity_nats,
    conditional_error,
    dispersion,
    error_exponent,
    error_exponent_closed_form,
    gallager_e0,
    q_function,
)
from .experiments import SweepSpec, cu_to_seconds, default_scenario, run_sweep
from .reports import QoSExponent, QoSReport
from .snc import (
    constant_rate_arrival,
    delay_bound,
    delay_kernel,
    mellin_cumulative_service,
    mellin_interarrival,
    mellin_service_process,
    optimize_paoi_bound,
    paoi_bound,
    paoi_kernel,
    poisson_batch_arrival,
    stability_check,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
