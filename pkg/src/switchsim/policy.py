"""Per-slot scheduling decisions.

Each decide function is pure: given the observable state it returns the
0-based index of the schedule to switch to, or None to stay. The biased
rules compare the incumbent schedule's weight, inflated by
(1 + T_s / bias), against the best available weight; the bias denominator
is frozen at the start of the current service interval, never recomputed
mid-interval.

Tie-breaking everywhere: the current schedule wins ties, then the lowest
schedule index. A triggered switch whose (tie-broken) best schedule is the
incumbent is suppressed, so the server never pays overhead to "switch" to
itself (all-empty systems sit still).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

from .model import Schedule, schedule_weight

__all__ = [
    "Mode",
    "ServerState",
    "Decision",
    "bias_denominator",
    "frame_length",
    "qbmw_decide",
    "wbmw_decide",
    "vfmw_decide",
    "maxweight_decide",
    "begin_switch",
    "on_switch_complete",
]

# None = stay with the current schedule; an int is the 0-based index of
# the switch target (always different from the current schedule).
Decision = Optional[int]


class Mode(Enum):
    ACTIVE = "ACTIVE"
    SWITCH = "SWITCH"


@dataclass
class ServerState:
    """Server mode machine plus interval bookkeeping.

    Owned by exactly one engine instance; decide functions only read it.
    """

    current: int = 0  # 0-based schedule index
    mode: Mode = Mode.ACTIVE
    switch_remaining: int = 0
    switch_target: int = 0
    interval_start: int = 0  # t_k of the interval in progress
    frozen_bias: float = 1.0  # bias denominator fixed at interval start
    frame_end: int = 1  # first slot after the current frame (VFMW only)
    pending_bias: float = 1.0  # bias to install when the switch completes
    trigger_slot: int = 0  # slot at which the pending switch fired
    intervals_log: list[tuple[int, int]] = field(default_factory=list)


def bias_denominator(state_sum: float, alpha: float) -> float:
    """max(1, state_sum^alpha): maps total backlog/waiting into [1, inf)."""
    if state_sum < 0:
        raise ValueError("state sum must be nonnegative")
    return max(1.0, float(state_sum) ** alpha)


def frame_length(state_sum: float, alpha: float) -> int:
    """Frame size used by the variable-frame rule, at least one slot."""
    if state_sum < 0:
        raise ValueError("state sum must be nonnegative")
    return max(1, math.floor(float(state_sum) ** alpha))


def _weights(state: Sequence[float], schedules: Sequence[Schedule]) -> list[float]:
    return [schedule_weight(s, state) for s in schedules]


def _best_schedule(weights: Sequence[float], current: int) -> int:
    """Index of the max-weight schedule; ties prefer current, then lowest."""
    best = max(weights)
    if weights[current] >= best:
        return current
    for j, w in enumerate(weights):
        if w >= best:
            return j
    raise AssertionError("unreachable")


def _biased_decide(
    state: Sequence[float],
    server: ServerState,
    schedules: Sequence[Schedule],
    switch_overhead: int,
) -> Decision:
    if server.mode is not Mode.ACTIVE:
        raise ValueError("switching decisions are only evaluated in ACTIVE mode")
    if len(state) == 0:
        raise ValueError("empty state vector")
    weights = _weights(state, schedules)
    best = max(weights)
    lhs = (1.0 + switch_overhead / server.frozen_bias) * weights[server.current]
    if lhs > best:
        return None
    target = _best_schedule(weights, server.current)
    return None if target == server.current else target


def qbmw_decide(
    queue_lengths: Sequence[float],
    server: ServerState,
    schedules: Sequence[Schedule],
    switch_overhead: int,
) -> Decision:
    """Queue-length-based biased max-weight switching condition."""
    return _biased_decide(queue_lengths, server, schedules, switch_overhead)


def wbmw_decide(
    hol_waits: Sequence[float],
    server: ServerState,
    schedules: Sequence[Schedule],
    switch_overhead: int,
) -> Decision:
    """Head-of-line-waiting-time-based variant; identical comparison."""
    return _biased_decide(hol_waits, server, schedules, switch_overhead)


def vfmw_decide(
    queue_lengths: Sequence[float],
    server: ServerState,
    schedules: Sequence[Schedule],
    switch_overhead: int,
    t: int,
) -> Decision:
    """Variable-frame max-weight: re-select only at frame boundaries.

    The engine owns frame_end updates (new frame length comes from
    `frame_length` on the boundary-slot backlog); switching overhead slots
    precede the frame and are not charged against it.
    """
    if server.mode is not Mode.ACTIVE:
        raise ValueError("switching decisions are only evaluated in ACTIVE mode")
    if t < server.frame_end:
        return None
    weights = _weights(queue_lengths, schedules)
    target = _best_schedule(weights, server.current)
    return None if target == server.current else target


def maxweight_decide(
    queue_lengths: Sequence[float],
    server: ServerState,
    schedules: Sequence[Schedule],
) -> Decision:
    """Unbiased baseline: chase the max-weight schedule every slot."""
    if server.mode is not Mode.ACTIVE:
        raise ValueError("switching decisions are only evaluated in ACTIVE mode")
    weights = _weights(queue_lengths, schedules)
    target = _best_schedule(weights, server.current)
    return None if target == server.current else target


def begin_switch(
    server: ServerState,
    t: int,
    target: int,
    switch_overhead: int,
    pending_bias: float,
) -> None:
    """Enter SWITCH mode at slot t; the target is fixed now, not re-chosen."""
    if server.mode is not Mode.ACTIVE:
        raise ValueError("cannot trigger a switch while one is in progress")
    if target == server.current:
        raise ValueError("self-switches are suppressed at decision time")
    server.mode = Mode.SWITCH
    server.switch_remaining = switch_overhead
    server.switch_target = target
    server.trigger_slot = t
    server.pending_bias = pending_bias


def on_switch_complete(server: ServerState, t: int) -> ServerState:
    """Land on the target schedule and roll the interval bookkeeping.

    Records (previous t_k, T_k) in the interval log; the new interval is
    anchored at the trigger slot and its bias denominator is the one
    evaluated from the state at that slot.
    """
    if server.mode is not Mode.SWITCH or server.switch_remaining != 0:
        raise ValueError("on_switch_complete requires SWITCH mode with 0 slots remaining")
    server.intervals_log.append(
        (server.interval_start, server.trigger_slot - server.interval_start)
    )
    server.interval_start = server.trigger_slot
    server.frozen_bias = server.pending_bias
    server.current = server.switch_target
    server.mode = Mode.ACTIVE
    return server
