"""Turn traces into reported quantities and diagnostic checks.

Delay statistics cover jobs that both arrive and depart inside the
measurement window; time averages cover every slot in it. Undefined
quantities (no completed jobs) are reported as None, never as 0.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .engine import Trace
from .model import PolicyVariant, SystemConfig
from .traffic import interarrival_bound

__all__ = [
    "IntervalStats",
    "SimReport",
    "finalize",
    "little_consistency",
    "lyapunov_q",
    "lyapunov_w",
    "lyapunov_interval_drift",
    "interval_bound_check",
    "stability_slope",
    "fairness_ratio",
]


@dataclass(frozen=True)
class IntervalStats:
    """Completed-interval statistics; the horizon-censored tail interval
    is excluded so the mean is not biased downward."""

    count: int
    mean_length: float | None
    min_length: int | None
    max_length: int | None


@dataclass(frozen=True)
class SimReport:
    total_avg_delay: float | None
    per_queue_avg_delay: tuple[float | None, ...]
    time_avg_total_queue: float
    time_avg_queue: tuple[float, ...]
    powered_queue_mean: float  # time average of (total backlog)^(1-alpha)
    switch_fraction: float
    interval_stats: IntervalStats
    diverged: bool
    jobs_counted: int
    little_ratio: float | None
    wc_violations: int
    seed: int


def _window_delays(trace: Trace, queue: int) -> np.ndarray:
    arr, dep = trace.queue_jobs(queue)
    mask = (dep >= 0) & (arr >= trace.warmup)
    return (dep[mask] - arr[mask] + 1).astype(np.int64)


def finalize(trace: Trace, alpha: float | None = None,
             window: tuple[int, int] | None = None) -> SimReport:
    """Compute a SimReport over the trace's measurement window.

    alpha defaults to the policy's exponent. The window argument, if
    given, must match the window the trace was accumulated over
    ([warmup, end_slot)); traces do not retain enough per-slot state to
    re-window after the fact.
    """
    if alpha is None:
        alpha = trace.policy.alpha
    actual = (trace.warmup, trace.end_slot)
    if window is not None and tuple(window) != actual:
        raise ValueError(f"trace was measured over {actual}, not {tuple(window)}")
    n = trace.config.n_queues
    slots = trace.window_slots

    per_queue_delays = [_window_delays(trace, q) for q in range(1, n + 1)]
    all_delays = np.concatenate(per_queue_delays) if per_queue_delays else np.zeros(0)
    jobs = int(all_delays.shape[0])
    total_delay = float(all_delays.mean()) if jobs else None
    per_queue_avg = tuple(
        float(d.mean()) if d.shape[0] else None for d in per_queue_delays
    )

    if slots > 0:
        time_avg_queue = tuple(float(s) / slots for s in trace.window_queue_sum)
        time_avg_total = float(trace.window_queue_sum.sum()) / slots
        measured = trace.total_queue[trace.warmup : trace.end_slot].astype(np.float64)
        powered = float(np.mean(measured ** (1.0 - alpha)))
        switch_fraction = trace.window_switch_slots / slots
    else:
        time_avg_queue = tuple(float("nan") for _ in range(n))
        time_avg_total = float("nan")
        powered = float("nan")
        switch_fraction = float("nan")

    nc = trace.n_complete_intervals
    lengths = trace.interval_length[:nc]
    starts = trace.interval_start[:nc]
    in_window = lengths[(starts >= trace.warmup)]
    if in_window.shape[0]:
        istats = IntervalStats(
            count=int(in_window.shape[0]),
            mean_length=float(in_window.mean()),
            min_length=int(in_window.min()),
            max_length=int(in_window.max()),
        )
    else:
        istats = IntervalStats(0, None, None, None)

    lam_total = float(sum(trace.config.arrival_rates))
    if total_delay is not None and lam_total > 0 and slots > 0:
        little = time_avg_total / (lam_total * total_delay)
    else:
        little = None

    return SimReport(
        total_avg_delay=total_delay,
        per_queue_avg_delay=per_queue_avg,
        time_avg_total_queue=time_avg_total,
        time_avg_queue=time_avg_queue,
        powered_queue_mean=powered,
        switch_fraction=switch_fraction,
        interval_stats=istats,
        diverged=trace.diverged,
        jobs_counted=jobs,
        little_ratio=little,
        wc_violations=trace.wc_violations,
        seed=trace.seed,
    )


def little_consistency(report: SimReport, lambda_total: float) -> float:
    """Backlog / (arrival rate x delay); near 1 means the accounting is sane."""
    if report.jobs_counted == 0 or report.total_avg_delay is None:
        raise ValueError("no completed jobs in window; delay undefined")
    return report.time_avg_total_queue / (lambda_total * report.total_avg_delay)


def lyapunov_q(queue_lengths, service_rates) -> float:
    """Quadratic backlog potential sum_i Q_i^2 / mu_i."""
    total = 0.0
    for q, mu in zip(queue_lengths, service_rates, strict=True):
        if mu <= 0:
            raise ValueError("service rates must be positive")
        total += float(q) * float(q) / mu
    return total


def lyapunov_w(hol_waits, loads) -> float:
    """Quadratic waiting-time potential sum_i rho_i W_i^2."""
    total = 0.0
    for w, rho in zip(hol_waits, loads, strict=True):
        total += rho * float(w) * float(w)
    return total


def lyapunov_interval_drift(trace: Trace, min_total_queue: int = 0):
    """Mean change of the backlog potential across consecutive interval
    starts whose initial total backlog is at least the threshold.

    Diagnostic only (reported, not asserted): negative values for large
    thresholds are the empirical signature of stabilizing drift.
    """
    mu = trace.config.service_rates
    starts = trace.interval_queue  # state at every interval start
    drifts = []
    for k in range(trace.n_intervals - 1):
        if int(starts[k].sum()) >= min_total_queue:
            drifts.append(
                lyapunov_q(starts[k + 1], mu) - lyapunov_q(starts[k], mu)
            )
    if not drifts:
        return None, 0
    return float(np.mean(drifts)), len(drifts)


def interval_bound_check(
    trace: Trace,
    config: SystemConfig | None = None,
    alpha: float | None = None,
    variant: PolicyVariant | None = None,
) -> list[dict]:
    """Per-interval lower-bound check on switching interval lengths.

    Every completed interval k must satisfy
    T_k >= C * (total state at t_k) / bias(state at t_k), where for the
    queue-based rule C = T_s / (N K (A_max + (1+T_s) S_max)) and for the
    waiting-time rule C = T_s / (N K (1 + (1+T_s) S_max V_max)), V_max
    finite. Returns the violating intervals; a conformant trace returns
    an empty list.
    """
    config = config or trace.config
    alpha = alpha if alpha is not None else trace.policy.alpha
    variant = variant or trace.policy.variant
    if variant is not trace.policy.variant:
        raise ValueError(
            f"trace was produced by {trace.policy.variant.value}, not {variant.value}"
        )
    n = config.n_queues
    k_cap = config.max_concurrency
    ts = config.switch_overhead
    s_max = max(spec.service_bound for spec in config.traffic)

    if variant is PolicyVariant.QBMW:
        a_max = max(spec.arrival_bound for spec in config.traffic)
        coeff = ts / (n * k_cap * (a_max + (1 + ts) * s_max))
        state = trace.interval_queue
    elif variant is PolicyVariant.WBMW:
        bounds = [interarrival_bound(spec) for spec in config.traffic]
        if any(b is None for b in bounds):
            raise ValueError(
                "interval bound for the waiting-time rule needs a finite "
                "inter-arrival bound on every queue"
            )
        v_max = max(bounds)
        coeff = ts / (n * k_cap * (1 + (1 + ts) * s_max * v_max))
        state = trace.interval_wait
    else:
        raise ValueError(f"no interval bound applies to {variant.value}")

    out = []
    nc = trace.n_complete_intervals
    for k in range(nc):
        total = float(state[k].sum())
        bias = max(1.0, total ** alpha)
        bound = coeff * total / bias
        t_k = int(trace.interval_length[k])
        if t_k < bound - 1e-9:
            out.append(
                {"interval": k, "start": int(trace.interval_start[k]),
                 "length": t_k, "bound": bound}
            )
    return out


def stability_slope(trace: Trace) -> float:
    """Least-squares growth rate of total backlog over the trace's second
    half, in jobs per slot. Near zero for stable runs."""
    end = trace.end_slot
    if end < 10_000:
        raise ValueError("stability slope needs at least 10^4 simulated slots")
    half = end // 2
    t = np.arange(half, end, dtype=np.float64)
    y = trace.total_queue[half:end].astype(np.float64)
    return float(np.polyfit(t, y, 1)[0])


def fairness_ratio(report: SimReport) -> float:
    """Max over min per-queue average delay; 1 is perfectly even."""
    defined = [d for d in report.per_queue_avg_delay if d is not None]
    if len(defined) < len(report.per_queue_avg_delay):
        if not defined:
            raise ValueError("no queue has a defined average delay")
        warnings.warn(
            "queues with no completed jobs excluded from fairness ratio",
            stacklevel=2,
        )
    return max(defined) / min(defined)
