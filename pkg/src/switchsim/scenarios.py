"""The eight named experiment presets.

S1/S2 are fixed polling setups whose utilization factor is 0.95; S3-S8
take a target utilization and scale a base arrival pattern onto it via
the covering LP, so the resulting config hits the target exactly.

S7/S8 model a four-way signalized intersection (queues 1..8 are the
left/through lanes of the four approaches). The six phase schedules are
not uniquely determined by the constraint count alone; the default set
below (opposing throughs, opposing lefts, and two protected same-approach
phases) covers all lanes and is overridable, and any quantity derived
from S7/S8 is conditional on that choice.
"""

from __future__ import annotations

import numpy as np

from .capacity import ConflictSpec, calibrate_arrivals, enumerate_maximal_schedules
from .model import Schedule, SystemConfig
from .traffic import Bernoulli, Deterministic, TrafficSpec

__all__ = ["PRESET_NAMES", "preset", "preset_description"]

PRESET_NAMES = ("S1", "S2", "S3", "S4", "S5", "S6", "S7", "S8")

_SINGLETONS_4 = tuple(Schedule.of([q]) for q in (1, 2, 3, 4))

# 4-beam topology: queues 1/2 conflict, queues 3/4 conflict.
_BEAM_SCHEDULES = tuple(
    enumerate_maximal_schedules(ConflictSpec.of(6, 4, [(1, 2), (3, 4)]))
)

DEFAULT_INTERSECTION_SCHEDULES = tuple(
    Schedule.of(m) for m in ((2, 4), (1, 3), (6, 8), (5, 7), (1, 2), (5, 6))
)

# name -> (n_queues, schedules, arrival pattern, service rates,
#          fixed beta or None, deterministic unit service?)
_PRESETS = {
    "S1": (4, _SINGLETONS_4, (0.125, 0.125, 0.125, 0.125),
           (0.5, 0.5, 0.5, 0.5), 0.95, False),
    "S2": (4, _SINGLETONS_4, (0.08, 0.25, 0.09, 0.01),
           (0.8, 0.5, 0.3, 0.2), "literal", False),
    "S3": (4, _SINGLETONS_4, (0.125, 0.125, 0.125, 0.125),
           (0.5, 0.5, 0.5, 0.5), None, False),
    "S4": (4, _SINGLETONS_4, (0.25, 0.15, 0.075, 0.025),
           (0.5, 0.5, 0.5, 0.5), None, False),
    "S5": (6, _BEAM_SCHEDULES, (0.18, 0.16, 0.25, 0.3, 0.9, 0.8),
           (0.3, 0.4, 0.5, 0.6, 0.9, 0.8), None, False),
    "S6": (6, _BEAM_SCHEDULES, (0.35, 0.15, 0.3, 0.2, 0.5, 0.5),
           (0.5, 0.5, 0.5, 0.5, 0.5, 0.5), None, False),
    "S7": (8, DEFAULT_INTERSECTION_SCHEDULES,
           (0.1, 0.5, 0.1, 0.3, 0.1, 0.5, 0.1, 0.3),
           (1.0,) * 8, None, True),
    "S8": (8, DEFAULT_INTERSECTION_SCHEDULES,
           (0.02, 0.26, 0.24, 0.48, 0.24, 0.48, 0.02, 0.26),
           (1.0,) * 8, None, True),
}

_DESCRIPTIONS = {
    "S1": "4-queue polling, symmetric rates, utilization fixed at 0.95",
    "S2": "4-queue polling, asymmetric rates, utilization fixed at 0.95",
    "S3": "4-queue polling, symmetric pattern, target utilization knob",
    "S4": "4-queue polling, asymmetric pattern, target utilization knob",
    "S5": "6-queue 4-beam system with two conflict pairs, asymmetric service",
    "S6": "6-queue 4-beam system with two conflict pairs, uniform service",
    "S7": "8-queue signalized intersection, deterministic unit service",
    "S8": "8-queue signalized intersection, heavier cross traffic",
}


def preset_description(name: str) -> str:
    return _DESCRIPTIONS[name]


def preset(
    name: str,
    beta_star: float | None = None,
    switch_overhead: int = 1,
    schedules: tuple[Schedule, ...] | None = None,
) -> SystemConfig:
    """Build the named scenario's SystemConfig.

    beta_star is required for S3-S8 and must be omitted for S1-S2 (their
    utilization is part of the definition). `schedules` overrides the
    preset's schedule set; the arrival calibration then runs against the
    override.
    """
    if name not in _PRESETS:
        raise ValueError(f"unknown scenario {name!r}; choose one of {PRESET_NAMES}")
    n, default_scheds, pattern, mu, fixed, det_service = _PRESETS[name]
    scheds = tuple(schedules) if schedules is not None else default_scheds

    if fixed is not None:
        if beta_star is not None:
            raise ValueError(f"{name} has a fixed utilization; beta_star must be omitted")
        if fixed == "literal":
            lam = np.asarray(pattern, dtype=np.float64)
        else:
            lam = calibrate_arrivals(pattern, mu, scheds, fixed)
    else:
        if beta_star is None:
            raise ValueError(f"{name} needs a target beta_star in (0, 1)")
        lam = calibrate_arrivals(pattern, mu, scheds, beta_star)

    traffic = []
    for lam_i, mu_i in zip(lam, mu):
        service = Deterministic(1) if det_service else Bernoulli(float(mu_i))
        traffic.append(TrafficSpec(arrival=Bernoulli(float(lam_i)), service=service))
    return SystemConfig(
        n_queues=n,
        schedules=scheds,
        switch_overhead=switch_overhead,
        traffic=tuple(traffic),
    )
