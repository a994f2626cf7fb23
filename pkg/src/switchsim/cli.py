"""Command-line driver: single runs, sweeps, capacity queries, and the
self-validation suite.

Subcommands: run, sweep, capacity, validate. Configs are JSON with a
strict schema (unknown keys are rejected and emit/parse round-trips
exactly); results go out as CSV or JSON with no timestamps, so identical
inputs produce byte-identical data files. Run metadata lives in a
sidecar next to --out, never inside the data.

Exit codes: 0 ok, 1 usage or config error, 2 at least one run diverged,
3 validation failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__, capacity, engine, metrics, scenarios
from .model import PolicySpec, PolicyVariant, Schedule, SystemConfig, validate_config
from .traffic import Bernoulli, Deterministic, FiniteDiscrete, TrafficSpec

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DIVERGED = 2
EXIT_VALIDATION = 3

_POLICY_ALIASES = {
    "qbmw": PolicyVariant.QBMW,
    "wbmw": PolicyVariant.WBMW,
    "vfmw": PolicyVariant.VFMW,
    "maxweight": PolicyVariant.MAXWEIGHT,
    "mw": PolicyVariant.MAXWEIGHT,
}


class ConfigError(ValueError):
    """Bad config file or flag combination; maps to exit code 1."""


def _take(raw: dict, allowed: set[str], context: str) -> None:
    unknown = set(raw) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) {sorted(unknown)} in {context}")


# ---------------------------------------------------------------------------
# config schema


@dataclass(frozen=True)
class PresetRef:
    scenario: str
    beta_star: float | None = None
    switch_overhead: int = 1
    schedules: tuple[tuple[int, ...], ...] | None = None


@dataclass(frozen=True)
class InlineSystem:
    n_queues: int
    schedules: tuple[tuple[int, ...], ...]
    switch_overhead: int
    traffic: tuple[TrafficSpec, ...]


@dataclass(frozen=True)
class Seeds:
    explicit: tuple[int, ...] | None = None
    base: int | None = None
    count: int | None = None

    def expand(self) -> tuple[int, ...]:
        if self.explicit is not None:
            return self.explicit
        return tuple(range(self.base, self.base + self.count))


@dataclass(frozen=True)
class OutputSpec:
    path: str
    format: str  # csv | json


@dataclass(frozen=True)
class RunConfig:
    system: PresetRef | InlineSystem
    policy: PolicySpec
    horizon: int
    warmup: int
    seeds: Seeds
    output: OutputSpec | None = None
    queue_ceiling: int = engine.DEFAULT_QUEUE_CEILING


def _parse_distribution(raw: dict, context: str):
    _take(raw, {"kind", "p", "value", "values", "probs"}, context)
    kind = raw.get("kind")
    if kind == "bernoulli":
        _take(raw, {"kind", "p"}, context)
        return Bernoulli(float(raw["p"]))
    if kind == "deterministic":
        _take(raw, {"kind", "value"}, context)
        return Deterministic(int(raw["value"]))
    if kind == "finite":
        _take(raw, {"kind", "values", "probs"}, context)
        return FiniteDiscrete(tuple(int(v) for v in raw["values"]),
                              tuple(float(p) for p in raw["probs"]))
    raise ConfigError(f"unknown distribution kind {kind!r} in {context}")


def _emit_distribution(dist) -> dict:
    if isinstance(dist, Bernoulli):
        return {"kind": "bernoulli", "p": dist.p}
    if isinstance(dist, Deterministic):
        return {"kind": "deterministic", "value": dist.value}
    return {"kind": "finite", "values": list(dist.values), "probs": list(dist.probs)}


def _parse_system(raw: dict) -> PresetRef | InlineSystem:
    if "scenario" in raw:
        _take(raw, {"scenario", "beta_star", "switch_overhead", "schedules"}, "system")
        scheds = raw.get("schedules")
        return PresetRef(
            scenario=str(raw["scenario"]),
            beta_star=float(raw["beta_star"]) if "beta_star" in raw else None,
            switch_overhead=int(raw.get("switch_overhead", 1)),
            schedules=tuple(tuple(int(q) for q in s) for s in scheds) if scheds else None,
        )
    _take(raw, {"n_queues", "schedules", "switch_overhead", "traffic"}, "system")
    try:
        traffic = []
        for i, entry in enumerate(raw["traffic"], start=1):
            _take(entry, {"arrival", "service", "a_max", "s_max"}, f"traffic[{i}]")
            traffic.append(TrafficSpec(
                arrival=_parse_distribution(entry["arrival"], f"traffic[{i}].arrival"),
                service=_parse_distribution(entry["service"], f"traffic[{i}].service"),
                a_max=int(entry["a_max"]) if "a_max" in entry else None,
                s_max=int(entry["s_max"]) if "s_max" in entry else None,
            ))
        return InlineSystem(
            n_queues=int(raw["n_queues"]),
            schedules=tuple(tuple(int(q) for q in s) for s in raw["schedules"]),
            switch_overhead=int(raw["switch_overhead"]),
            traffic=tuple(traffic),
        )
    except KeyError as exc:
        raise ConfigError(f"system config missing field {exc}") from None


def _emit_system(system: PresetRef | InlineSystem) -> dict:
    if isinstance(system, PresetRef):
        out: dict = {"scenario": system.scenario}
        if system.beta_star is not None:
            out["beta_star"] = system.beta_star
        out["switch_overhead"] = system.switch_overhead
        if system.schedules is not None:
            out["schedules"] = [list(s) for s in system.schedules]
        return out
    return {
        "n_queues": system.n_queues,
        "schedules": [list(s) for s in system.schedules],
        "switch_overhead": system.switch_overhead,
        "traffic": [
            {
                "arrival": _emit_distribution(spec.arrival),
                "service": _emit_distribution(spec.service),
                **({"a_max": spec.a_max} if spec.a_max is not None else {}),
                **({"s_max": spec.s_max} if spec.s_max is not None else {}),
            }
            for spec in system.traffic
        ],
    }


def parse_run_config(raw: dict) -> RunConfig:
    _take(raw, {"system", "policy", "horizon", "warmup", "seeds", "output",
                "queue_ceiling"}, "run config")
    try:
        pol = raw["policy"]
        _take(pol, {"variant", "alpha"}, "policy")
        variant = _POLICY_ALIASES.get(str(pol["variant"]).lower())
        if variant is None:
            raise ConfigError(f"unknown policy variant {pol['variant']!r}")
        policy = PolicySpec(variant=variant, alpha=float(pol.get("alpha", 0.5)))

        seeds_raw = raw["seeds"]
        if isinstance(seeds_raw, list):
            seeds = Seeds(explicit=tuple(int(s) for s in seeds_raw))
        else:
            _take(seeds_raw, {"base", "count", "list"}, "seeds")
            if "list" in seeds_raw:
                seeds = Seeds(explicit=tuple(int(s) for s in seeds_raw["list"]))
            else:
                seeds = Seeds(base=int(seeds_raw["base"]), count=int(seeds_raw["count"]))

        output = None
        if "output" in raw:
            _take(raw["output"], {"path", "format"}, "output")
            fmt = str(raw["output"].get("format", "csv"))
            if fmt not in ("csv", "json"):
                raise ConfigError(f"unknown output format {fmt!r}")
            output = OutputSpec(path=str(raw["output"]["path"]), format=fmt)

        return RunConfig(
            system=_parse_system(raw["system"]),
            policy=policy,
            horizon=int(raw["horizon"]),
            warmup=int(raw["warmup"]),
            seeds=seeds,
            output=output,
            queue_ceiling=int(raw.get("queue_ceiling", engine.DEFAULT_QUEUE_CEILING)),
        )
    except KeyError as exc:
        raise ConfigError(f"run config missing field {exc}") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None


def emit_run_config(cfg: RunConfig) -> dict:
    out: dict = {
        "system": _emit_system(cfg.system),
        "policy": {"variant": cfg.policy.variant.value, "alpha": cfg.policy.alpha},
        "horizon": cfg.horizon,
        "warmup": cfg.warmup,
    }
    if cfg.seeds.explicit is not None:
        out["seeds"] = {"list": list(cfg.seeds.explicit)}
    else:
        out["seeds"] = {"base": cfg.seeds.base, "count": cfg.seeds.count}
    if cfg.output is not None:
        out["output"] = {"path": cfg.output.path, "format": cfg.output.format}
    if cfg.queue_ceiling != engine.DEFAULT_QUEUE_CEILING:
        out["queue_ceiling"] = cfg.queue_ceiling
    return out


def resolve_system(system: PresetRef | InlineSystem) -> tuple[SystemConfig, str]:
    """Materialize a SystemConfig plus the scenario label for reports."""
    if isinstance(system, PresetRef):
        if system.scenario not in scenarios.PRESET_NAMES:
            raise ConfigError(f"unknown scenario {system.scenario!r}")
        override = None
        if system.schedules is not None:
            override = tuple(Schedule.of(s) for s in system.schedules)
        try:
            cfg = scenarios.preset(
                system.scenario,
                beta_star=system.beta_star,
                switch_overhead=system.switch_overhead,
                schedules=override,
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        return cfg, system.scenario
    cfg = SystemConfig(
        n_queues=system.n_queues,
        schedules=tuple(Schedule.of(s) for s in system.schedules),
        switch_overhead=system.switch_overhead,
        traffic=system.traffic,
    )
    problems = validate_config(cfg)
    if problems:
        raise ConfigError("; ".join(problems))
    return cfg, "inline"


# ---------------------------------------------------------------------------
# result serialization


def _fmt(value) -> str:
    if value is None:
        return "nan"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def csv_header(n_queues: int) -> list[str]:
    return (
        ["scenario", "policy", "alpha", "beta_star", "T_s", "seed",
         "total_avg_delay"]
        + [f"per_queue_delay_{i}" for i in range(1, n_queues + 1)]
        + ["time_avg_total_queue", "powered_queue_mean", "switch_fraction",
           "mean_Tk", "diverged", "little_ratio"]
    )


def csv_row(scenario: str, policy: PolicySpec, beta_star: float, ts: int,
            seed, report: metrics.SimReport, n_queues: int) -> list[str]:
    cells = [scenario, policy.variant.value, _fmt(policy.alpha),
             _fmt(beta_star), str(ts), str(seed),
             _fmt(report.total_avg_delay)]
    cells += [_fmt(d) for d in report.per_queue_avg_delay]
    cells += [_fmt(report.time_avg_total_queue), _fmt(report.powered_queue_mean),
              _fmt(report.switch_fraction), _fmt(report.interval_stats.mean_length),
              _fmt(report.diverged), _fmt(report.little_ratio)]
    return cells


def render_csv(header: list[str], rows: list[list[str]]) -> str:
    lines = [",".join(header)]
    lines.extend(",".join(row) for row in rows)
    return "\n".join(lines) + "\n"


def report_json_dict(report: metrics.SimReport) -> dict:
    stats = report.interval_stats
    return {
        "seed": report.seed,
        "total_avg_delay": report.total_avg_delay,
        "per_queue_avg_delay": list(report.per_queue_avg_delay),
        "time_avg_total_queue": report.time_avg_total_queue,
        "time_avg_queue": list(report.time_avg_queue),
        "powered_queue_mean": report.powered_queue_mean,
        "switch_fraction": report.switch_fraction,
        "interval_stats": {
            "count": stats.count,
            "mean_length": stats.mean_length,
            "min_length": stats.min_length,
            "max_length": stats.max_length,
        },
        "diverged": report.diverged,
        "jobs_counted": report.jobs_counted,
        "little_ratio": report.little_ratio,
        "wc_violations": report.wc_violations,
    }


def _aggregate(values: list[float | None]) -> tuple[float | None, float | None]:
    """(mean, standard error) over seeds; None if any seed is undefined."""
    if any(v is None for v in values) or not values:
        return None, None
    arr = np.asarray(values, dtype=np.float64)
    mean = float(arr.mean())
    stderr = float(arr.std(ddof=1) / np.sqrt(len(arr))) if len(arr) > 1 else 0.0
    return mean, stderr


def _write_output(text: str, output: OutputSpec | None, meta: dict) -> None:
    if output is None:
        sys.stdout.write(text)
        return
    path = Path(output.path)
    path.write_text(text, encoding="utf-8")
    sidecar = path.with_name(path.name + ".meta.json")
    sidecar.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n",
                       encoding="utf-8")


# ---------------------------------------------------------------------------
# subcommands


def _run_batch(cfg: SystemConfig, policy: PolicySpec, horizon: int, warmup: int,
               seeds, ceiling: int, workers: int):
    """Simulate seeds concurrently; results come back in seed order."""

    def one(seed: int) -> metrics.SimReport:
        trace = engine.simulate(cfg, policy, horizon, warmup, seed,
                                queue_ceiling=ceiling)
        return metrics.finalize(trace)

    if workers <= 1 or len(seeds) <= 1:
        return [one(s) for s in seeds]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, seeds))


_AGGREGATE_FIELDS = (
    "total_avg_delay", "time_avg_total_queue", "powered_queue_mean",
    "switch_fraction", "little_ratio",
)


def cmd_run(cfg: RunConfig, workers: int) -> int:
    system, label = resolve_system(cfg.system)
    if cfg.warmup >= cfg.horizon:
        raise ConfigError("warmup exceeds horizon")
    beta = capacity.utilization_factor(system.loads, system.schedules).beta_star
    seeds = cfg.seeds.expand()
    reports = _run_batch(system, cfg.policy, cfg.horizon, cfg.warmup, seeds,
                         cfg.queue_ceiling, workers)

    n = system.n_queues
    ts = system.switch_overhead
    rows = [csv_row(label, cfg.policy, beta, ts, seed, rep, n)
            for seed, rep in zip(seeds, reports)]
    agg_mean, agg_err = {}, {}
    for fname in _AGGREGATE_FIELDS:
        agg_mean[fname], agg_err[fname] = _aggregate(
            [getattr(r, fname) for r in reports]
        )
    per_queue_mean = [
        _aggregate([r.per_queue_avg_delay[i] for r in reports])[0] for i in range(n)
    ]
    rows.append(
        [label, cfg.policy.variant.value, _fmt(cfg.policy.alpha), _fmt(beta),
         str(ts), "mean", _fmt(agg_mean["total_avg_delay"])]
        + [_fmt(d) for d in per_queue_mean]
        + [_fmt(agg_mean["time_avg_total_queue"]),
           _fmt(agg_mean["powered_queue_mean"]), _fmt(agg_mean["switch_fraction"]),
           "nan", _fmt(any(r.diverged for r in reports)),
           _fmt(agg_mean["little_ratio"])]
    )
    rows.append(
        [label, cfg.policy.variant.value, _fmt(cfg.policy.alpha), _fmt(beta),
         str(ts), "stderr", _fmt(agg_err["total_avg_delay"])]
        + ["nan"] * n
        + [_fmt(agg_err["time_avg_total_queue"]),
           _fmt(agg_err["powered_queue_mean"]), _fmt(agg_err["switch_fraction"]),
           "nan", "false", _fmt(agg_err["little_ratio"])]
    )

    meta = {"command": "run", "config": emit_run_config(cfg),
            "version": __version__}
    if cfg.output is not None and cfg.output.format == "json":
        payload = {
            "scenario": label, "beta_star": beta, "T_s": ts,
            "policy": {"variant": cfg.policy.variant.value, "alpha": cfg.policy.alpha},
            "runs": [report_json_dict(r) for r in reports],
            "aggregate": {
                "mean": {k: agg_mean[k] for k in _AGGREGATE_FIELDS},
                "stderr": {k: agg_err[k] for k in _AGGREGATE_FIELDS},
            },
        }
        _write_output(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                      cfg.output, meta)
    else:
        _write_output(render_csv(csv_header(n), rows), cfg.output, meta)
    return EXIT_DIVERGED if any(r.diverged for r in reports) else EXIT_OK


def _sweep_value_config(cfg: RunConfig, axis: str, value: float):
    """RunConfig variant for one sweep point."""
    if axis == "alpha":
        if cfg.policy.variant is PolicyVariant.MAXWEIGHT:
            raise ConfigError("alpha sweeps do not apply to MaxWeight")
        return cfg.system, PolicySpec(cfg.policy.variant, float(value))
    if axis == "ts":
        ts = int(value)
        if isinstance(cfg.system, PresetRef):
            system = PresetRef(cfg.system.scenario, cfg.system.beta_star, ts,
                               cfg.system.schedules)
        else:
            system = InlineSystem(cfg.system.n_queues, cfg.system.schedules, ts,
                                  cfg.system.traffic)
        return system, cfg.policy
    if axis == "beta_star":
        if isinstance(cfg.system, PresetRef):
            if cfg.system.scenario in ("S1", "S2"):
                raise ConfigError(
                    f"{cfg.system.scenario} has a fixed utilization; "
                    "beta_star sweeps need S3-S8 or an inline config"
                )
            system = PresetRef(cfg.system.scenario, float(value),
                               cfg.system.switch_overhead, cfg.system.schedules)
            return system, cfg.policy
        # Inline systems: treat the configured arrival means as the pattern.
        base, _ = resolve_system(cfg.system)
        lam = capacity.calibrate_arrivals(
            np.asarray(base.arrival_rates), np.asarray(base.service_rates),
            base.schedules, float(value))
        traffic = tuple(
            TrafficSpec(arrival=Bernoulli(float(l)), service=spec.service,
                        a_max=spec.a_max, s_max=spec.s_max)
            for l, spec in zip(lam, cfg.system.traffic)
        )
        system = InlineSystem(cfg.system.n_queues, cfg.system.schedules,
                              cfg.system.switch_overhead, traffic)
        return system, cfg.policy
    raise ConfigError(f"unknown sweep axis {axis!r}")


def cmd_sweep(cfg: RunConfig, axis: str, values: list[float], workers: int) -> int:
    if cfg.warmup >= cfg.horizon:
        raise ConfigError("warmup exceeds horizon")
    seeds = cfg.seeds.expand()
    rows: list[list[str]] = []
    n_queues = None
    any_diverged = False
    for value in values:
        system_ref, policy = _sweep_value_config(cfg, axis, value)
        system, label = resolve_system(system_ref)
        if n_queues is None:
            n_queues = system.n_queues
        beta = capacity.utilization_factor(system.loads, system.schedules).beta_star
        reports = _run_batch(system, policy, cfg.horizon, cfg.warmup, seeds,
                             cfg.queue_ceiling, workers)
        any_diverged = any_diverged or any(r.diverged for r in reports)
        for seed, rep in zip(seeds, reports):
            rows.append(csv_row(label, policy, beta, system.switch_overhead,
                                seed, rep, n_queues))
    meta = {"command": "sweep", "axis": axis, "values": values,
            "config": emit_run_config(cfg), "version": __version__}
    _write_output(render_csv(csv_header(n_queues), rows), cfg.output, meta)
    return EXIT_DIVERGED if any_diverged else EXIT_OK


def cmd_capacity(system_ref: PresetRef | InlineSystem,
                 output: OutputSpec | None) -> int:
    system, label = resolve_system(system_ref)
    result = capacity.utilization_factor(system.loads, system.schedules)
    payload = {
        "scenario": label,
        "schedules": [list(s.sorted_members) for s in system.schedules],
        "beta_star": result.beta_star,
        "epsilon_star": result.epsilon_star,
        "weights": list(result.weights),
        "feasible": result.feasible,
    }
    _write_output(json.dumps(payload, indent=2, sort_keys=True) + "\n", output,
                  {"command": "capacity", "version": __version__})
    return EXIT_OK


# ---------------------------------------------------------------------------
# validation suite


def _check_conservation(seed: int) -> dict:
    cfg = scenarios.preset("S2")
    trace = engine.simulate(cfg, PolicySpec(PolicyVariant.QBMW, 0.2),
                            horizon=20_000, warmup=0, seed=seed)
    A, _ = engine.materialize_traffic(cfg, seed, trace.horizon)
    end = trace.end_slot
    slots = np.arange(1, end)
    arrived = A.astype(np.int64).sum(axis=0).cumsum()[slots - 1]  # countable by t
    dep_sorted = np.sort(trace.job_departure[trace.job_departure >= 0])
    departed = np.searchsorted(dep_sorted, slots, side="left")
    bad = int(np.count_nonzero(arrived - departed != trace.total_queue[slots]))
    return {"pass": bad == 0, "slots_checked": end - 1, "mismatches": bad}


def _check_fifo(seed: int) -> dict:
    cfg = scenarios.preset("S2")
    trace = engine.simulate(cfg, PolicySpec(PolicyVariant.WBMW, 0.2),
                            horizon=20_000, warmup=0, seed=seed)
    ok = True
    for q in range(1, cfg.n_queues + 1):
        arr, dep = trace.queue_jobs(q)
        done = dep[dep >= 0]
        served = int(done.shape[0])
        if np.any(np.diff(done) < 0):  # departures follow arrival order
            ok = False
        if np.any(dep[:served] < 0):  # no job overtaken by a later one
            ok = False
        if np.any(done < arr[:served]):
            ok = False
    return {"pass": ok}


def _check_work_conservation(seed: int) -> dict:
    viol = {}
    for variant in (PolicyVariant.QBMW, PolicyVariant.WBMW):
        cfg = scenarios.preset("S1")
        trace = engine.simulate(cfg, PolicySpec(variant, 0.001),
                                horizon=200_000, warmup=0, seed=seed)
        viol[variant.value] = trace.wc_violations
    return {"pass": all(v == 0 for v in viol.values()), "violations": viol}


def _check_interval_bounds(seed: int) -> dict:
    cfg = scenarios.preset("S2")
    trace = engine.simulate(cfg, PolicySpec(PolicyVariant.QBMW, 0.001),
                            horizon=200_000, warmup=0, seed=seed)
    violations = metrics.interval_bound_check(trace)
    # Negative control: a corrupted interval log must be caught.
    idx = next(
        (k for k in range(trace.n_complete_intervals)
         if trace.interval_queue[k].sum() > 0), None)
    detector_fires = False
    if idx is not None:
        corrupted = trace.interval_length.copy()
        corrupted[idx] = 0
        original = trace.interval_length
        trace.interval_length = corrupted
        detector_fires = len(metrics.interval_bound_check(trace)) >= 1
        trace.interval_length = original
    return {
        "pass": len(violations) == 0 and detector_fires,
        "violations": len(violations),
        "negative_control_detected": detector_fires,
    }


def _check_lp_oracle(seed: int, cases: int = 200) -> dict:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(cases):
        n = int(rng.integers(2, 7))
        k = int(rng.integers(1, n + 1))
        pairs = []
        for a in range(1, n + 1):
            for b in range(a + 1, n + 1):
                if rng.random() < 0.3:
                    pairs.append((a, b))
        spec = capacity.ConflictSpec.of(n, k, pairs)
        scheds = capacity.enumerate_maximal_schedules(spec)
        if not scheds or len(scheds) > 12:
            continue
        rho = rng.random(n) * rng.choice([0.0, 1.0], size=n, p=[0.2, 0.8])
        fast = capacity.utilization_factor(rho, scheds)
        slow = capacity.lp_oracle(rho, scheds)
        if fast.feasible != slow.feasible:
            return {"pass": False, "detail": "feasibility mismatch"}
        if fast.feasible:
            worst = max(worst, abs(fast.beta_star - slow.beta_star))
    return {"pass": worst <= 1e-9, "max_abs_gap": worst, "cases": cases}


def _check_littles_law(seed: int) -> dict:
    cfg = scenarios.preset("S1")
    trace = engine.simulate(cfg, PolicySpec(PolicyVariant.QBMW, 0.001),
                            horizon=1_000_000, warmup=100_000, seed=seed)
    report = metrics.finalize(trace)
    ratio = metrics.little_consistency(report, sum(cfg.arrival_rates))
    return {"pass": 0.9 <= ratio <= 1.1, "ratio": ratio}


def _check_determinism(seed: int) -> dict:
    cfg = scenarios.preset("S2")
    policy = PolicySpec(PolicyVariant.WBMW, 0.001)
    t1 = engine.simulate(cfg, policy, horizon=50_000, warmup=5_000, seed=seed)
    t2 = engine.simulate(cfg, policy, horizon=50_000, warmup=5_000, seed=seed)
    same = (
        np.array_equal(t1.total_queue, t2.total_queue)
        and np.array_equal(t1.job_departure, t2.job_departure)
        and np.array_equal(t1.interval_start, t2.interval_start)
    )
    r1, r2 = metrics.finalize(t1), metrics.finalize(t2)
    rows1 = render_csv(csv_header(4), [csv_row("S2", policy, 0.95, 1, seed, r1, 4)])
    rows2 = render_csv(csv_header(4), [csv_row("S2", policy, 0.95, 1, seed, r2, 4)])
    return {"pass": same and rows1 == rows2, "trace_equal": same,
            "csv_equal": rows1 == rows2}


def cmd_validate(seed: int, output: OutputSpec | None) -> int:
    checks = {
        "conservation": _check_conservation,
        "fifo": _check_fifo,
        "work_conservation": _check_work_conservation,
        "interval_bounds": _check_interval_bounds,
        "lp_vs_oracle": _check_lp_oracle,
        "littles_law": _check_littles_law,
        "determinism": _check_determinism,
    }
    results = {name: fn(seed) for name, fn in checks.items()}
    all_pass = all(r["pass"] for r in results.values())
    payload = {"seed": seed, "all_pass": all_pass, "checks": results}
    _write_output(json.dumps(payload, indent=2, sort_keys=True, default=float) + "\n",
                  output, {"command": "validate", "version": __version__})
    return EXIT_OK if all_pass else EXIT_VALIDATION


# ---------------------------------------------------------------------------
# argument parsing


def _parse_seeds_flag(text: str) -> Seeds:
    if "@" in text:
        count, base = text.split("@", 1)
        return Seeds(base=int(base), count=int(count))
    return Seeds(explicit=tuple(int(s) for s in text.split(",")))


def _system_from_flags(args) -> PresetRef:
    if not args.scenario:
        raise ConfigError("either --config or --scenario is required")
    return PresetRef(
        scenario=args.scenario,
        beta_star=args.beta_star,
        switch_overhead=args.ts,
        schedules=None,
    )


def _runconfig_from_args(args) -> RunConfig:
    if args.config:
        raw = json.loads(Path(args.config).read_text(encoding="utf-8"))
        cfg = parse_run_config(raw)
        if args.out:
            cfg = RunConfig(cfg.system, cfg.policy, cfg.horizon, cfg.warmup,
                            cfg.seeds, OutputSpec(args.out, args.format),
                            cfg.queue_ceiling)
        return cfg
    if not args.policy:
        raise ConfigError("either --config or --policy is required")
    variant = _POLICY_ALIASES.get(args.policy.lower())
    if variant is None:
        raise ConfigError(f"unknown policy {args.policy!r}")
    output = OutputSpec(args.out, args.format) if args.out else None
    return RunConfig(
        system=_system_from_flags(args),
        policy=PolicySpec(variant, args.alpha),
        horizon=args.horizon,
        warmup=args.warmup,
        seeds=_parse_seeds_flag(args.seeds),
        output=output,
        queue_ceiling=args.queue_ceiling,
    )


def _add_run_flags(sub) -> None:
    sub.add_argument("--config", help="JSON run config file")
    sub.add_argument("--scenario", choices=scenarios.PRESET_NAMES)
    sub.add_argument("--policy", help="qbmw | wbmw | vfmw | maxweight")
    sub.add_argument("--alpha", type=float, default=0.001)
    sub.add_argument("--beta-star", dest="beta_star", type=float, default=None)
    sub.add_argument("--ts", type=int, default=1, help="switching overhead in slots")
    sub.add_argument("--horizon", type=int, default=2_000_000)
    sub.add_argument("--warmup", type=int, default=200_000)
    sub.add_argument("--seeds", default="10@1",
                     help="comma list ('1,2,3') or COUNT@BASE ('10@1')")
    sub.add_argument("--out", help="output path (default: stdout)")
    sub.add_argument("--format", choices=("csv", "json"), default="csv")
    sub.add_argument("--workers", type=int, default=2)
    sub.add_argument("--queue-ceiling", dest="queue_ceiling", type=int,
                     default=engine.DEFAULT_QUEUE_CEILING)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="switchsim",
        description="Simulate scheduling policies for multi-queue systems "
                    "with switching overhead.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    subs = parser.add_subparsers(dest="command", required=True)

    run = subs.add_parser("run", help="simulate one configuration over seeds")
    _add_run_flags(run)

    sweep = subs.add_parser("sweep", help="sweep alpha, beta_star, or ts")
    _add_run_flags(sweep)
    sweep.add_argument("--axis", required=True, choices=("alpha", "beta_star", "ts"))
    sweep.add_argument("--values", required=True,
                       help="comma-separated axis values")

    cap = subs.add_parser("capacity", help="schedules and utilization factor")
    cap.add_argument("--config", help="JSON run config file")
    cap.add_argument("--scenario", choices=scenarios.PRESET_NAMES)
    cap.add_argument("--beta-star", dest="beta_star", type=float, default=None)
    cap.add_argument("--ts", type=int, default=1)
    cap.add_argument("--out")
    cap.add_argument("--format", choices=("csv", "json"), default="json")

    val = subs.add_parser("validate", help="run the invariant self-checks")
    val.add_argument("--seed", type=int, default=20240001)
    val.add_argument("--out")

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(_runconfig_from_args(args), args.workers)
        if args.command == "sweep":
            values = [float(v) for v in args.values.split(",")]
            return cmd_sweep(_runconfig_from_args(args), args.axis, values,
                             args.workers)
        if args.command == "capacity":
            if args.config:
                raw = json.loads(Path(args.config).read_text(encoding="utf-8"))
                system = parse_run_config(raw).system
            else:
                system = _system_from_flags(args)
            output = OutputSpec(args.out, "json") if args.out else None
            return cmd_capacity(system, output)
        if args.command == "validate":
            output = OutputSpec(args.out, "json") if args.out else None
            return cmd_validate(args.seed, output)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
