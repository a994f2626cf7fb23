"""Seeded, reproducible per-queue arrival and service processes.

Every sample is a pure function of (master_seed, stream id, slot index), so
two simulations that share a seed see identical traffic regardless of which
policy consumes it, and regardless of the order streams are consulted in.
This is what makes policy comparisons on common random numbers exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Bernoulli",
    "Deterministic",
    "FiniteDiscrete",
    "Distribution",
    "TrafficSpec",
    "StreamHandle",
    "mean_rates",
    "interarrival_bound",
]

# Samples are produced block-wise; block b of a stream is generated by a
# fresh PCG64 keyed on (master_seed, queue, role, b), which gives O(1)
# random access to any slot without replaying the stream.
_BLOCK = 1 << 16

_ROLE_CODES = {"arrival": 0, "service": 1}


@dataclass(frozen=True)
class Bernoulli:
    """0/1 counts per slot with P(1) = p."""

    p: float

    def mean(self) -> float:
        return self.p

    def max_value(self) -> int:
        return 1

    def violations(self) -> list[str]:
        if not (0.0 <= self.p <= 1.0):
            return [f"Bernoulli rate {self.p} out of [0, 1]"]
        return []

    def from_uniforms(self, u: np.ndarray) -> np.ndarray:
        return (u < self.p).astype(np.int16)


@dataclass(frozen=True)
class Deterministic:
    """The same count c every slot."""

    value: int

    def mean(self) -> float:
        return float(self.value)

    def max_value(self) -> int:
        return self.value

    def violations(self) -> list[str]:
        if self.value < 0 or self.value != int(self.value):
            return [f"Deterministic value {self.value} is not a nonnegative integer"]
        return []

    def from_uniforms(self, u: np.ndarray) -> np.ndarray:
        return np.full(u.shape, self.value, dtype=np.int16)


@dataclass(frozen=True)
class FiniteDiscrete:
    """Counts drawn from an explicit finite support via inverse CDF."""

    values: tuple[int, ...]
    probs: tuple[float, ...]

    def mean(self) -> float:
        return float(sum(v * p for v, p in zip(self.values, self.probs)))

    def max_value(self) -> int:
        return max(self.values)

    def violations(self) -> list[str]:
        out = []
        if len(self.values) != len(self.probs) or not self.values:
            out.append("FiniteDiscrete values/probs length mismatch or empty")
            return out
        if any(v < 0 or v != int(v) for v in self.values):
            out.append("FiniteDiscrete support must be nonnegative integers")
        if any(p < 0 for p in self.probs):
            out.append("FiniteDiscrete probabilities must be nonnegative")
        if abs(sum(self.probs) - 1.0) > 1e-12:
            out.append(f"FiniteDiscrete probabilities sum to {sum(self.probs)!r}, not 1")
        return out

    def from_uniforms(self, u: np.ndarray) -> np.ndarray:
        cum = np.cumsum(np.asarray(self.probs, dtype=np.float64))
        cum[-1] = 1.0  # guard against round-off at the top
        idx = np.searchsorted(cum, u, side="right")
        return np.asarray(self.values, dtype=np.int16)[idx]


Distribution = Bernoulli | Deterministic | FiniteDiscrete


@dataclass(frozen=True)
class TrafficSpec:
    """Per-queue arrival and service distributions with declared bounds.

    a_max / s_max default to the distribution's own support maximum (at
    least 1, the bounds are declared as positive integers).
    """

    arrival: Distribution
    service: Distribution
    a_max: int | None = None
    s_max: int | None = None

    @property
    def arrival_bound(self) -> int:
        return self.a_max if self.a_max is not None else max(1, self.arrival.max_value())

    @property
    def service_bound(self) -> int:
        return self.s_max if self.s_max is not None else max(1, self.service.max_value())

    def violations(self) -> list[str]:
        out = []
        out.extend(self.arrival.violations())
        out.extend(self.service.violations())
        if out:
            return out
        if self.arrival.max_value() > self.arrival_bound:
            out.append(
                f"arrival support max {self.arrival.max_value()} exceeds declared bound {self.arrival_bound}"
            )
        if self.service.max_value() > self.service_bound:
            out.append(
                f"service support max {self.service.max_value()} exceeds declared bound {self.service_bound}"
            )
        if self.arrival_bound < 1 or self.service_bound < 1:
            out.append("declared bounds must be positive integers")
        if self.service.mean() <= 0.0:
            out.append("mean service rate must be positive")
        return out


def mean_rates(spec: TrafficSpec) -> tuple[float, float]:
    """Exact analytic (arrival mean, service mean) of a traffic spec."""
    return spec.arrival.mean(), spec.service.mean()


def interarrival_bound(spec: TrafficSpec) -> int | None:
    """Largest possible gap (in slots) between consecutive job arrivals.

    Finite only when the arrival distribution produces at least one job
    every slot; otherwise the gap is geometric-tailed and the bound is
    None ("unbounded"). Waiting-time-based scheduling guarantees assume a
    finite bound; the simulator runs either way, this is advisory.
    """
    a = spec.arrival
    if isinstance(a, Deterministic):
        return 1 if a.value >= 1 else None
    if isinstance(a, Bernoulli):
        return 1 if a.p >= 1.0 else None
    if isinstance(a, FiniteDiscrete):
        zero_mass = sum(p for v, p in zip(a.values, a.probs) if v == 0)
        return 1 if zero_mass == 0.0 else None
    raise TypeError(f"unknown distribution {a!r}")


@dataclass
class StreamHandle:
    """Random-access sampling stream for one (queue, role) pair.

    The underlying uniforms depend only on (master_seed, queue, role, t);
    the bound distribution maps each uniform to a count through its
    inverse CDF. Distinct stream ids get statistically independent
    uniforms by SeedSequence spawn-key construction.
    """

    master_seed: int
    queue: int  # 1-based, matching user-facing queue ids
    role: str  # "arrival" | "service"
    dist: Distribution
    _cache_block: int = field(default=-1, repr=False)
    _cache: np.ndarray | None = field(default=None, repr=False)

    def _uniform_block(self, block: int) -> np.ndarray:
        ss = np.random.SeedSequence(
            entropy=self.master_seed,
            spawn_key=(self.queue, _ROLE_CODES[self.role], block),
        )
        return np.random.Generator(np.random.PCG64(ss)).random(_BLOCK)

    def sample(self, t: int) -> int:
        """Count for slot t; repeated calls always agree."""
        if t < 0:
            raise ValueError("slot index must be nonnegative")
        block, off = divmod(t, _BLOCK)
        if block != self._cache_block:
            self._cache = self._uniform_block(block)
            self._cache_block = block
        return int(self.dist.from_uniforms(self._cache[off : off + 1])[0])

    def sample_range(self, t0: int, t1: int) -> np.ndarray:
        """Counts for slots [t0, t1) as an int16 array."""
        if t0 < 0 or t1 < t0:
            raise ValueError("invalid slot range")
        n = t1 - t0
        u = np.empty(n, dtype=np.float64)
        pos = 0
        t = t0
        while t < t1:
            block, off = divmod(t, _BLOCK)
            take = min(_BLOCK - off, t1 - t)
            u[pos : pos + take] = self._uniform_block(block)[off : off + take]
            pos += take
            t += take
        return self.dist.from_uniforms(u)


def stream(master_seed: int, queue: int, role: str, dist: Distribution) -> StreamHandle:
    if role not in _ROLE_CODES:
        raise ValueError(f"role must be one of {sorted(_ROLE_CODES)}")
    return StreamHandle(master_seed, queue, role, dist)


def distribution_variance(dist: Distribution) -> float:
    m = dist.mean()
    if isinstance(dist, Bernoulli):
        return dist.p * (1.0 - dist.p)
    if isinstance(dist, Deterministic):
        return 0.0
    if isinstance(dist, FiniteDiscrete):
        return float(sum(p * (v - m) ** 2 for v, p in zip(dist.values, dist.probs)))
    raise TypeError(f"unknown distribution {dist!r}")
