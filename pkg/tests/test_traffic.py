import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from switchsim.traffic import (
    Bernoulli,
    Deterministic,
    FiniteDiscrete,
    TrafficSpec,
    distribution_variance,
    interarrival_bound,
    mean_rates,
    stream,
)


class TestSampling:
    def test_bernoulli_zero_is_always_zero(self):
        s = stream(42, 1, "arrival", Bernoulli(0.0))
        assert all(s.sample(t) == 0 for t in (0, 1, 17, 10_000, 123_456))

    def test_deterministic_one_every_slot(self):
        s = stream(42, 3, "service", Deterministic(1))
        assert all(s.sample(t) == 1 for t in range(50))

    def test_bernoulli_half_empirical_mean(self):
        s = stream(7, 2, "arrival", Bernoulli(0.5))
        counts = s.sample_range(0, 1_000_000)
        assert abs(counts.mean() - 0.5) <= 0.002  # 3-sigma binomial bound ~0.0015

    def test_repeated_calls_agree(self):
        s = stream(1, 1, "arrival", Bernoulli(0.3))
        values = [s.sample(t) for t in (5, 70_000, 5, 70_000)]
        assert values[0] == values[2] and values[1] == values[3]

    def test_fresh_handle_reproduces(self):
        a = stream(9, 4, "service", FiniteDiscrete((0, 1, 3), (0.2, 0.5, 0.3)))
        b = stream(9, 4, "service", FiniteDiscrete((0, 1, 3), (0.2, 0.5, 0.3)))
        assert np.array_equal(a.sample_range(0, 5000), b.sample_range(0, 5000))

    def test_sample_matches_sample_range(self):
        s = stream(11, 2, "arrival", Bernoulli(0.4))
        rng = s.sample_range(65_000, 66_000)  # spans a block boundary
        assert [s.sample(t) for t in range(65_000, 66_000)] == list(rng)

    def test_distinct_streams_differ(self):
        a = stream(5, 1, "arrival", Bernoulli(0.5)).sample_range(0, 2000)
        b = stream(5, 2, "arrival", Bernoulli(0.5)).sample_range(0, 2000)
        c = stream(5, 1, "service", Bernoulli(0.5)).sample_range(0, 2000)
        assert not np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_samples_within_declared_bound(self):
        dist = FiniteDiscrete((0, 2, 4), (0.5, 0.25, 0.25))
        counts = stream(3, 1, "arrival", dist).sample_range(0, 10_000)
        assert counts.min() >= 0 and counts.max() <= dist.max_value()

    def test_negative_slot_rejected(self):
        with pytest.raises(ValueError):
            stream(1, 1, "arrival", Bernoulli(0.5)).sample(-1)

    def test_unknown_role_rejected(self):
        with pytest.raises(ValueError):
            stream(1, 1, "departure", Bernoulli(0.5))


class TestMeanRates:
    def test_scenario_rates(self):
        lam, mu = mean_rates(TrafficSpec(Bernoulli(0.119), Bernoulli(0.5)))
        assert (lam, mu) == (0.119, 0.5)

    def test_deterministic_service(self):
        _, mu = mean_rates(TrafficSpec(Bernoulli(0.1), Deterministic(1)))
        assert mu == 1.0

    def test_finite_discrete_expectation(self):
        lam, _ = mean_rates(
            TrafficSpec(FiniteDiscrete((0, 2), (0.5, 0.5)), Bernoulli(0.5))
        )
        assert lam == 1.0

    @given(
        values=st.lists(st.integers(0, 6), min_size=1, max_size=5, unique=True),
        raw=st.lists(st.floats(0.01, 1.0), min_size=5, max_size=5),
    )
    def test_finite_discrete_mean_is_dot_product(self, values, raw):
        weights = raw[: len(values)]
        total = sum(weights)
        probs = tuple(w / total for w in weights)
        dist = FiniteDiscrete(tuple(values), probs)
        assert dist.mean() == pytest.approx(
            sum(v * p for v, p in zip(values, probs))
        )


class TestInterarrivalBound:
    def test_deterministic_arrival_every_slot(self):
        assert interarrival_bound(TrafficSpec(Deterministic(1), Bernoulli(0.5))) == 1

    def test_bernoulli_is_unbounded(self):
        assert interarrival_bound(TrafficSpec(Bernoulli(0.5), Bernoulli(0.5))) is None

    def test_finite_discrete_without_zero_mass(self):
        spec = TrafficSpec(FiniteDiscrete((1, 2), (0.5, 0.5)), Bernoulli(0.5))
        assert interarrival_bound(spec) == 1

    def test_finite_discrete_with_zero_mass(self):
        spec = TrafficSpec(FiniteDiscrete((0, 2), (0.5, 0.5)), Bernoulli(0.5))
        assert interarrival_bound(spec) is None

    def test_saturated_bernoulli_is_bounded(self):
        assert interarrival_bound(TrafficSpec(Bernoulli(1.0), Bernoulli(0.5))) == 1


class TestSpecValidation:
    def test_probs_must_sum_to_one(self):
        spec = TrafficSpec(FiniteDiscrete((0, 1), (0.5, 0.6)), Bernoulli(0.5))
        assert any("sum" in v for v in spec.violations())

    def test_support_must_fit_declared_bound(self):
        spec = TrafficSpec(Bernoulli(0.5), FiniteDiscrete((0, 9), (0.5, 0.5)), s_max=3)
        assert any("exceeds declared bound" in v for v in spec.violations())

    def test_default_bounds_from_support(self):
        spec = TrafficSpec(Bernoulli(0.5), FiniteDiscrete((0, 3), (0.5, 0.5)))
        assert spec.arrival_bound == 1 and spec.service_bound == 3

    def test_clean_spec(self):
        assert TrafficSpec(Bernoulli(0.25), Deterministic(1)).violations() == []


def test_empirical_means_converge():
    # 4-sigma band should hold for at least 99% of independent streams.
    dist = Bernoulli(0.3)
    horizon = 20_000
    band = 4 * math.sqrt(distribution_variance(dist) / horizon)
    hits = 0
    for queue in range(1, 101):
        mean = stream(1234, queue, "arrival", dist).sample_range(0, horizon).mean()
        hits += abs(mean - dist.mean()) <= band
    assert hits >= 99
