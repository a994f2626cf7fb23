"""Discrete-time simulator and policy library for single-server
multi-queue systems with switching overhead."""

from .capacity import (
    CapacityResult,
    ConflictSpec,
    calibrate_arrivals,
    enumerate_maximal_schedules,
    lp_oracle,
    utilization_factor,
)
from .engine import Trace, job_delay, simulate
from .metrics import (
    SimReport,
    fairness_ratio,
    finalize,
    interval_bound_check,
    little_consistency,
    lyapunov_interval_drift,
    lyapunov_q,
    lyapunov_w,
    stability_slope,
)
from .model import (
    PolicySpec,
    PolicyVariant,
    Schedule,
    SystemConfig,
    schedule_weight,
    validate_config,
)
from .scenarios import PRESET_NAMES, preset
from .traffic import (
    Bernoulli,
    Deterministic,
    FiniteDiscrete,
    TrafficSpec,
    interarrival_bound,
    mean_rates,
)

__version__ = "0.1.0"

__all__ = [
    "Bernoulli",
    "CapacityResult",
    "ConflictSpec",
    "Deterministic",
    "FiniteDiscrete",
    "PolicySpec",
    "PolicyVariant",
    "PRESET_NAMES",
    "Schedule",
    "SimReport",
    "SystemConfig",
    "Trace",
    "TrafficSpec",
    "calibrate_arrivals",
    "enumerate_maximal_schedules",
    "fairness_ratio",
    "finalize",
    "interarrival_bound",
    "interval_bound_check",
    "job_delay",
    "little_consistency",
    "lp_oracle",
    "lyapunov_interval_drift",
    "lyapunov_q",
    "lyapunov_w",
    "mean_rates",
    "preset",
    "schedule_weight",
    "simulate",
    "stability_slope",
    "utilization_factor",
    "validate_config",
]
