"""Domain types shared by every other module: schedules, system
configuration, and policy selection.

Queue ids are 1-based everywhere a user sees them (configs, schedules,
reports); modules are free to index however they like internally.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING, Iterable, Sequence

from .traffic import TrafficSpec

if TYPE_CHECKING:  # pragma: no cover
    from .capacity import ConflictSpec

__all__ = [
    "Schedule",
    "SystemConfig",
    "PolicyVariant",
    "PolicySpec",
    "validate_config",
    "schedule_weight",
]


@dataclass(frozen=True)
class Schedule:
    """A set of queues the server may serve simultaneously."""

    members: frozenset[int]

    @classmethod
    def of(cls, members: Iterable[int]) -> "Schedule":
        return cls(frozenset(int(q) for q in members))

    @property
    def sorted_members(self) -> tuple[int, ...]:
        return tuple(sorted(self.members))

    def __len__(self) -> int:
        return len(self.members)

    def __contains__(self, queue: int) -> bool:
        return queue in self.members

    def __repr__(self) -> str:
        return "Schedule({%s})" % ", ".join(str(q) for q in self.sorted_members)


class PolicyVariant(Enum):
    QBMW = "QBMW"
    WBMW = "WBMW"
    VFMW = "VFMW"
    MAXWEIGHT = "MaxWeight"


@dataclass(frozen=True)
class PolicySpec:
    """Which scheduling rule to run, plus its bias/frame exponent.

    alpha must lie strictly inside (0, 1); it is ignored by MaxWeight.
    """

    variant: PolicyVariant
    alpha: float = 0.5

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0):
            raise ValueError(f"alpha must be in (0, 1), got {self.alpha}")


@dataclass(frozen=True)
class SystemConfig:
    """Immutable description of one queueing system.

    Safe to share read-only across concurrent replications once validated.
    """

    n_queues: int
    schedules: tuple[Schedule, ...]
    switch_overhead: int
    traffic: tuple[TrafficSpec, ...]

    @property
    def max_concurrency(self) -> int:
        """Largest number of queues any single schedule serves."""
        return max((len(s) for s in self.schedules), default=0)

    @property
    def arrival_rates(self) -> tuple[float, ...]:
        return tuple(spec.arrival.mean() for spec in self.traffic)

    @property
    def service_rates(self) -> tuple[float, ...]:
        return tuple(spec.service.mean() for spec in self.traffic)

    @property
    def loads(self) -> tuple[float, ...]:
        """Normalized per-queue loads (arrival mean / service mean)."""
        return tuple(l / m for l, m in zip(self.arrival_rates, self.service_rates))


def schedule_weight(schedule: Schedule, state: Sequence[float]) -> float:
    """Sum of the state entries of the schedule's member queues.

    `state` is indexed by queue order (entry 0 is queue 1).
    """
    n = len(state)
    for q in schedule.members:
        if not (1 <= q <= n):
            raise ValueError(f"queue {q} out of range for state of length {n}")
    return float(sum(state[q - 1] for q in schedule.members))


def validate_config(
    cfg: SystemConfig, conflicts: "ConflictSpec | None" = None
) -> list[str]:
    """Collect every invariant violation of a system configuration.

    Violations are returned as data, not raised; an empty list means the
    config is usable. Passing the conflict structure additionally checks
    each schedule against the conflict pairs and the concurrency cap,
    which pure set inspection cannot decide.
    """
    out: list[str] = []
    if cfg.n_queues < 1:
        out.append(f"n_queues must be positive, got {cfg.n_queues}")
        return out
    if cfg.switch_overhead < 1:
        out.append(
            f"switch overhead must be at least 1 slot, got {cfg.switch_overhead}"
        )
    if len(cfg.traffic) != cfg.n_queues:
        out.append(
            f"traffic specs for {len(cfg.traffic)} queues, expected {cfg.n_queues}"
        )
    for i, spec in enumerate(cfg.traffic, start=1):
        out.extend(f"queue {i}: {v}" for v in spec.violations())

    if not cfg.schedules:
        out.append("no schedules configured")
        return out
    for sched in cfg.schedules:
        if not sched.members:
            out.append("empty schedule")
        for q in sched.members:
            if not (1 <= q <= cfg.n_queues):
                out.append(f"schedule {sched!r} references unknown queue {q}")

    seen = set()
    for sched in cfg.schedules:
        if sched.members in seen:
            out.append(f"duplicate schedule {sched!r}")
        seen.add(sched.members)
    for a in cfg.schedules:
        for b in cfg.schedules:
            if a.members < b.members:
                out.append(f"non-maximal schedule {a!r} (strict subset of {b!r})")

    covered = set().union(*(s.members for s in cfg.schedules))
    for q in range(1, cfg.n_queues + 1):
        if q not in covered:
            out.append(f"queue {q} uncovered by any schedule")

    if conflicts is not None:
        if conflicts.n_queues != cfg.n_queues:
            out.append(
                f"conflict spec is for {conflicts.n_queues} queues, config has {cfg.n_queues}"
            )
        else:
            from .capacity import schedule_set_violations

            out.extend(schedule_set_violations(cfg.schedules, conflicts))
    return out
