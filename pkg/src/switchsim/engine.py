"""Slot-by-slot simulation: policy consultation, mode transitions,
service, and exact job accounting via arrival timestamps.

Within one slot the phases are, in order: decide (ACTIVE only, on the
pre-service state), serve (unless switching), append arrivals (countable
from the next slot), then advance any switch in progress. A switch
triggered at slot t occupies slots t .. t+T_s-1 with no service; the new
schedule first serves at t+T_s.

Two interchangeable execution paths produce bit-identical traces: `step`
(pure Python, the readable reference) and the compiled loop in _kernel.
simulate() defaults to the compiled one.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import _kernel, policy as _policy
from .model import PolicySpec, PolicyVariant, Schedule, SystemConfig, validate_config
from .policy import Mode, ServerState
from .traffic import stream

__all__ = [
    "QueueState",
    "World",
    "Trace",
    "TraceRows",
    "step",
    "simulate",
    "job_delay",
    "materialize_traffic",
]

DEFAULT_QUEUE_CEILING = 10_000_000

_POLICY_CODES = {
    PolicyVariant.QBMW: _kernel.POL_QBMW,
    PolicyVariant.WBMW: _kernel.POL_WBMW,
    PolicyVariant.VFMW: _kernel.POL_VFMW,
    PolicyVariant.MAXWEIGHT: _kernel.POL_MAXWEIGHT,
}


class QueueState:
    """One queue: backlog counter plus a FIFO of arrival timestamps.

    The FIFO stores (arrival_slot, count) runs, so memory is bounded by
    the number of distinct arrival slots still backlogged. Backlog always
    equals the sum of the run counts.
    """

    __slots__ = ("backlog", "fifo", "served_count")

    def __init__(self):
        self.backlog = 0
        self.fifo: deque[list[int]] = deque()
        self.served_count = 0

    def hol_wait(self, t: int) -> int:
        """Slots the head-of-line job has waited; 0 for an empty queue."""
        if self.backlog == 0:
            return 0
        return t - self.fifo[0][0]

    def push(self, arrival_slot: int, count: int) -> None:
        if count > 0:
            self.fifo.append([arrival_slot, count])
            self.backlog += count

    def serve(self, amount: int, t: int, departures: list[int]) -> int:
        """Complete up to `amount` jobs at slot t, oldest first."""
        done = 0
        while done < amount and self.fifo:
            head = self.fifo[0]
            take = min(head[1], amount - done)
            departures.extend([t] * take)
            head[1] -= take
            done += take
            if head[1] == 0:
                self.fifo.popleft()
        self.backlog -= done
        self.served_count += done
        return done


@dataclass
class _Collector:
    """Trace material accumulated by the Python reference path."""

    warmup: int
    n_queues: int
    total_queue: list[int] = field(default_factory=list)
    interval_start: list[int] = field(default_factory=list)
    interval_queue: list[list[int]] = field(default_factory=list)
    interval_wait: list[list[int]] = field(default_factory=list)
    departures: list[list[int]] = field(default_factory=list)  # per queue
    window_queue_sum: list[int] = field(default_factory=list)
    window_switch_slots: int = 0
    window_slots: int = 0
    wc_violations: int = 0
    idle_run: int = 0
    rows: list[tuple] = field(default_factory=list)

    def __post_init__(self):
        self.departures = [[] for _ in range(self.n_queues)]
        self.window_queue_sum = [0] * self.n_queues
        self.interval_start.append(0)
        self.interval_queue.append([0] * self.n_queues)
        self.interval_wait.append([0] * self.n_queues)


@dataclass
class World:
    """Everything `step` needs: system, policy, traffic, and live state."""

    config: SystemConfig
    policy: PolicySpec
    arrivals: np.ndarray  # [n_queues, horizon] counts, from seeded streams
    services: np.ndarray
    queues: list[QueueState]
    server: ServerState
    collect: _Collector
    record_stride: int = 0
    queue_ceiling: int = DEFAULT_QUEUE_CEILING
    diverged: bool = False
    end_slot: int | None = None


@dataclass
class TraceRows:
    """Per-slot snapshots at a configurable stride."""

    t: np.ndarray
    queue: np.ndarray  # backlog vector at slot start
    wait: np.ndarray  # HOL waits at slot start
    mode: np.ndarray  # 1 = serving, 0 = switching
    schedule: np.ndarray  # 0-based index of the held schedule
    service_used: np.ndarray


@dataclass
class Trace:
    config: SystemConfig
    policy: PolicySpec
    seed: int
    horizon: int
    warmup: int
    end_slot: int
    diverged: bool
    total_queue: np.ndarray  # 1'Q(t) for every simulated slot
    interval_start: np.ndarray  # t_k, first entry always 0
    interval_length: np.ndarray  # T_k; the last interval is horizon-censored
    interval_queue: np.ndarray  # Q(t_k)
    interval_wait: np.ndarray  # W(t_k)
    job_offsets: np.ndarray  # per-queue slices into the flat job arrays
    job_arrival: np.ndarray  # arrival slot of every job in [0, horizon)
    job_departure: np.ndarray  # departure slot, -1 if never served
    window_queue_sum: np.ndarray
    window_switch_slots: int
    window_slots: int
    wc_violations: int
    rows: TraceRows | None = None

    @property
    def n_intervals(self) -> int:
        return len(self.interval_start)

    @property
    def n_complete_intervals(self) -> int:
        """Intervals closed by an actual switch (the last one never is)."""
        return self.n_intervals - 1

    def queue_jobs(self, queue: int) -> tuple[np.ndarray, np.ndarray]:
        """(arrival slots, departure slots) of one queue's jobs; 1-based id."""
        lo, hi = self.job_offsets[queue - 1], self.job_offsets[queue]
        return self.job_arrival[lo:hi], self.job_departure[lo:hi]


def job_delay(arrival_slot: int, departure_slot: int) -> int:
    """Delay in slots; a job served the slot it becomes countable has delay 1."""
    if departure_slot < arrival_slot:
        raise ValueError("job departs before it arrives")
    return departure_slot - arrival_slot + 1


def materialize_traffic(
    config: SystemConfig, seed: int, horizon: int
) -> tuple[np.ndarray, np.ndarray]:
    """Arrival and service count arrays for [0, horizon).

    Service counts are drawn for every queue at every slot whether or not
    the queue is served, so the same seed yields the same traffic under
    any policy (common random numbers).
    """
    n = config.n_queues
    A = np.empty((n, horizon), dtype=np.int16)
    S = np.empty((n, horizon), dtype=np.int16)
    for i, spec in enumerate(config.traffic, start=1):
        A[i - 1] = stream(seed, i, "arrival", spec.arrival).sample_range(0, horizon)
        S[i - 1] = stream(seed, i, "service", spec.service).sample_range(0, horizon)
    return A, S


def _job_arrays(A: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Flat per-job arrival slots; arrivals of slot t become countable at t+1."""
    n = A.shape[0]
    parts = []
    offsets = np.zeros(n + 1, dtype=np.int64)
    for i in range(n):
        slots = np.flatnonzero(A[i])
        parts.append(np.repeat(slots.astype(np.int64) + 1, A[i, slots]))
        offsets[i + 1] = offsets[i] + parts[-1].shape[0]
    flat = np.concatenate(parts) if parts else np.zeros(0, dtype=np.int64)
    return offsets, flat


def _schedule_matrix(config: SystemConfig) -> np.ndarray:
    mat = np.zeros((len(config.schedules), config.n_queues), dtype=np.int8)
    for j, sched in enumerate(config.schedules):
        for q in sched.members:
            mat[j, q - 1] = 1
    return mat


def step(world: World, t: int) -> World:
    """Advance the world by one slot. This is the reference semantics."""
    cfg, spec, server = world.config, world.policy, world.server
    queues = world.queues
    col = world.collect
    n = cfg.n_queues
    ts = cfg.switch_overhead

    backlog = [q.backlog for q in queues]
    tq = sum(backlog)
    col.total_queue.append(tq)
    if t >= col.warmup:
        col.window_slots += 1
        for i in range(n):
            col.window_queue_sum[i] += backlog[i]

    rec = world.record_stride > 0 and t % world.record_stride == 0
    waits = [q.hol_wait(t) for q in queues]
    row_q = list(backlog) if rec else None

    if server.mode is Mode.ACTIVE:
        if spec.variant is PolicyVariant.QBMW:
            decision = _policy.qbmw_decide(backlog, server, cfg.schedules, ts)
        elif spec.variant is PolicyVariant.WBMW:
            decision = _policy.wbmw_decide(waits, server, cfg.schedules, ts)
        elif spec.variant is PolicyVariant.VFMW:
            decision = _policy.vfmw_decide(backlog, server, cfg.schedules, ts, t)
            if decision is None and t >= server.frame_end:
                server.frame_end = t + _policy.frame_length(float(tq), spec.alpha)
        else:
            decision = _policy.maxweight_decide(backlog, server, cfg.schedules)

        if decision is not None:
            if spec.variant is PolicyVariant.QBMW:
                pending = _policy.bias_denominator(float(tq), spec.alpha)
            elif spec.variant is PolicyVariant.WBMW:
                pending = _policy.bias_denominator(float(sum(waits)), spec.alpha)
            else:
                pending = 1.0
            if spec.variant is PolicyVariant.VFMW:
                server.frame_end = t + ts + _policy.frame_length(float(tq), spec.alpha)
            _policy.begin_switch(server, t, decision, ts, pending)
            col.interval_start.append(t)
            col.interval_queue.append(list(backlog))
            col.interval_wait.append(list(waits))

    service_used = [0] * n
    if server.mode is Mode.ACTIVE:
        members = world.config.schedules[server.current].members
        # Idling with backlog elsewhere only counts against work
        # conservation once it outlasts the T_s reaction latency.
        if sum(backlog[q - 1] for q in members) == 0 and tq > 0:
            col.idle_run += 1
            if col.idle_run > ts:
                col.wc_violations += 1
        else:
            col.idle_run = 0
        for q in sorted(members):
            i = q - 1
            offered = int(world.services[i, t])
            service_used[i] = queues[i].serve(
                min(offered, queues[i].backlog), t, col.departures[i]
            )
    else:
        col.idle_run = 0
        if t >= col.warmup:
            col.window_switch_slots += 1

    if rec:
        col.rows.append(
            (t, row_q, list(waits),
             1 if server.mode is Mode.ACTIVE else 0, server.current, service_used)
        )

    for i in range(n):
        queues[i].push(t + 1, int(world.arrivals[i, t]))

    if server.mode is Mode.SWITCH:
        server.switch_remaining -= 1
        if server.switch_remaining == 0:
            _policy.on_switch_complete(server, t + 1)

    if sum(q.backlog for q in queues) > world.queue_ceiling:
        world.diverged = True
        world.end_slot = t + 1
    return world


def _simulate_python(config, spec, horizon, warmup, seed, stride, ceiling) -> Trace:
    A, S = materialize_traffic(config, seed, horizon)
    world = World(
        config=config,
        policy=spec,
        arrivals=A,
        services=S,
        queues=[QueueState() for _ in range(config.n_queues)],
        server=ServerState(),
        collect=_Collector(warmup=warmup, n_queues=config.n_queues),
        record_stride=stride,
        queue_ceiling=ceiling,
    )
    for t in range(horizon):
        step(world, t)
        if world.diverged:
            break
    end = world.end_slot if world.end_slot is not None else horizon
    col = world.collect

    offsets, job_arr = _job_arrays(A)
    job_dep = np.full(job_arr.shape[0], -1, dtype=np.int64)
    for i in range(config.n_queues):
        deps = col.departures[i]
        job_dep[offsets[i] : offsets[i] + len(deps)] = deps

    starts = np.asarray(col.interval_start, dtype=np.int64)
    lengths = np.empty_like(starts)
    lengths[:-1] = np.diff(starts)
    lengths[-1] = end - starts[-1]

    rows = None
    if stride > 0:
        rows = TraceRows(
            t=np.asarray([r[0] for r in col.rows], dtype=np.int64),
            queue=np.asarray([r[1] for r in col.rows], dtype=np.int32).reshape(-1, config.n_queues),
            wait=np.asarray([r[2] for r in col.rows], dtype=np.int32).reshape(-1, config.n_queues),
            mode=np.asarray([r[3] for r in col.rows], dtype=np.int8),
            schedule=np.asarray([r[4] for r in col.rows], dtype=np.int32),
            service_used=np.asarray([r[5] for r in col.rows], dtype=np.int16).reshape(-1, config.n_queues),
        )

    return Trace(
        config=config,
        policy=spec,
        seed=seed,
        horizon=horizon,
        warmup=warmup,
        end_slot=end,
        diverged=world.diverged,
        total_queue=np.asarray(col.total_queue, dtype=np.int64),
        interval_start=starts,
        interval_length=lengths,
        interval_queue=np.asarray(col.interval_queue, dtype=np.int32).reshape(-1, config.n_queues),
        interval_wait=np.asarray(col.interval_wait, dtype=np.int32).reshape(-1, config.n_queues),
        job_offsets=offsets,
        job_arrival=job_arr,
        job_departure=job_dep,
        window_queue_sum=np.asarray(col.window_queue_sum, dtype=np.int64),
        window_switch_slots=col.window_switch_slots,
        window_slots=col.window_slots,
        wc_violations=col.wc_violations,
        rows=rows,
    )


def _simulate_kernel(config, spec, horizon, warmup, seed, stride, ceiling) -> Trace:
    A, S = materialize_traffic(config, seed, horizon)
    offsets, job_arr = _job_arrays(A)
    (end, diverged, total_q, istart, ilen, iq, iw, dep,
     wqsum, wswitch, wslots, wc_viol,
     row_t, row_q, row_w, row_mode, row_sched, row_shat) = _kernel.run_slots(
        A, S, _schedule_matrix(config),
        _POLICY_CODES[spec.variant], float(spec.alpha), int(config.switch_overhead),
        int(horizon), int(warmup), int(ceiling),
        offsets, job_arr, int(stride),
    )
    rows = None
    if stride > 0:
        keep = row_t < end
        rows = TraceRows(row_t[keep], row_q[keep], row_w[keep],
                         row_mode[keep], row_sched[keep], row_shat[keep])
    return Trace(
        config=config, policy=spec, seed=seed, horizon=horizon, warmup=warmup,
        end_slot=int(end), diverged=bool(diverged), total_queue=total_q,
        interval_start=istart, interval_length=ilen,
        interval_queue=iq, interval_wait=iw,
        job_offsets=offsets, job_arrival=job_arr, job_departure=dep,
        window_queue_sum=wqsum, window_switch_slots=int(wswitch),
        window_slots=int(wslots), wc_violations=int(wc_viol), rows=rows,
    )


def simulate(
    config: SystemConfig,
    spec: PolicySpec,
    horizon: int,
    warmup: int = 0,
    seed: int = 0,
    *,
    record_stride: int = 0,
    queue_ceiling: int = DEFAULT_QUEUE_CEILING,
    kernel: str = "compiled",
) -> Trace:
    """Run one replication and return its trace.

    Metrics are accumulated over [warmup, horizon). If total backlog ever
    exceeds queue_ceiling the run stops early and the trace is marked
    diverged instead of erroring (the unbiased baseline is expected to
    blow up under load). kernel="python" selects the reference stepper.
    """
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    if not (0 <= warmup < horizon):
        raise ValueError("warmup must lie in [0, horizon)")
    problems = validate_config(config)
    if problems:
        raise ValueError("invalid config: " + "; ".join(problems))
    if kernel == "python":
        return _simulate_python(config, spec, horizon, warmup, seed,
                                record_stride, queue_ceiling)
    if kernel == "compiled":
        return _simulate_kernel(config, spec, horizon, warmup, seed,
                                record_stride, queue_ceiling)
    raise ValueError(f"unknown kernel {kernel!r}")
