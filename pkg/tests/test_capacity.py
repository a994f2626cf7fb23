import itertools

import numpy as np
import pytest

from switchsim.capacity import (
    ConflictSpec,
    calibrate_arrivals,
    enumerate_maximal_schedules,
    lp_oracle,
    utilization_factor,
)
from switchsim.model import Schedule

SINGLETONS = tuple(Schedule.of([q]) for q in (1, 2, 3, 4))
SCENARIO_V = tuple(Schedule.of(m) for m in
                   ((1, 3, 5, 6), (1, 4, 5, 6), (2, 3, 5, 6), (2, 4, 5, 6)))


def brute_force_maximal(spec: ConflictSpec) -> set[frozenset[int]]:
    """Definition-level enumeration over all 2^n subsets."""
    queues = range(1, spec.n_queues + 1)
    def ok(s):
        return (0 < len(s) <= spec.max_concurrency
                and all(frozenset(p) not in spec.conflicts
                        for p in itertools.combinations(s, 2)))
    feasible = [frozenset(s)
                for r in range(1, spec.n_queues + 1)
                for s in itertools.combinations(queues, r) if ok(s)]
    return {s for s in feasible
            if not any(s < t for t in feasible)}


def random_instance(rng):
    n = int(rng.integers(2, 7))
    k = int(rng.integers(1, n + 1))
    pairs = [(a, b)
             for a in range(1, n + 1) for b in range(a + 1, n + 1)
             if rng.random() < 0.3]
    spec = ConflictSpec.of(n, k, pairs)
    scheds = enumerate_maximal_schedules(spec)
    rho = rng.random(n) * rng.choice([0.0, 1.0], size=n, p=[0.2, 0.8])
    return rho, scheds


class TestEnumeration:
    def test_singletons(self):
        spec = ConflictSpec.of(4, 1)
        assert enumerate_maximal_schedules(spec) == list(SINGLETONS)

    def test_four_beam_topology(self):
        spec = ConflictSpec.of(6, 4, [(1, 2), (3, 4)])
        assert enumerate_maximal_schedules(spec) == list(SCENARIO_V)

    def test_three_queues_one_conflict(self):
        spec = ConflictSpec.of(3, 2, [(1, 2)])
        got = enumerate_maximal_schedules(spec)
        assert got == [Schedule.of([1, 3]), Schedule.of([2, 3])]
        assert {s.members for s in got} == brute_force_maximal(spec)

    def test_matches_brute_force_on_random_instances(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            n = int(rng.integers(2, 8))
            k = int(rng.integers(1, n + 1))
            pairs = [(a, b)
                     for a in range(1, n + 1) for b in range(a + 1, n + 1)
                     if rng.random() < 0.35]
            spec = ConflictSpec.of(n, k, pairs)
            got = {s.members for s in enumerate_maximal_schedules(spec)}
            assert got == brute_force_maximal(spec)

    def test_outputs_pairwise_incomparable(self):
        spec = ConflictSpec.of(7, 3, [(1, 2), (2, 3), (4, 5)])
        scheds = [s.members for s in enumerate_maximal_schedules(spec)]
        for a in scheds:
            for b in scheds:
                assert not a < b

    def test_lexicographic_order(self):
        spec = ConflictSpec.of(5, 2, [(1, 2)])
        got = [s.sorted_members for s in enumerate_maximal_schedules(spec)]
        assert got == sorted(got)

    def test_size_guard(self):
        with pytest.raises(ValueError, match="at most 24"):
            enumerate_maximal_schedules(ConflictSpec.of(25, 2))

    def test_conflict_pair_validation(self):
        with pytest.raises(ValueError):
            ConflictSpec.of(4, 2, [(2, 2)])
        with pytest.raises(ValueError):
            ConflictSpec.of(4, 2, [(1, 9)])


class TestUtilizationFactor:
    def test_asymmetric_polling_load(self):
        rho = (0.1, 0.5, 0.3, 0.05)
        result = utilization_factor(rho, SINGLETONS)
        assert result.feasible
        assert result.beta_star == pytest.approx(0.95, abs=1e-9)
        assert result.epsilon_star == pytest.approx(0.05, abs=1e-9)

    def test_zero_load(self):
        result = utilization_factor((0.0, 0.0, 0.0, 0.0), SINGLETONS)
        assert result.beta_star == 0.0 and result.epsilon_star == 1.0

    def test_four_beam_load_against_oracle(self):
        rho = 0.9 * np.asarray([0.6, 0.4, 0.5, 0.5, 1.0, 1.0])
        fast = utilization_factor(rho, SCENARIO_V)
        slow = lp_oracle(rho, SCENARIO_V)
        assert fast.beta_star == pytest.approx(0.9, abs=1e-9)
        assert fast.beta_star == pytest.approx(slow.beta_star, abs=1e-9)

    def test_singleton_loads_separate(self):
        rho = (0.2, 0.3, 0.1, 0.15)
        result = utilization_factor(rho, SINGLETONS)
        assert result.beta_star == pytest.approx(sum(rho), abs=1e-9)

    def test_result_invariants(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            rho, scheds = random_instance(rng)
            result = utilization_factor(rho, scheds)
            if not result.feasible:
                continue
            weights = np.asarray(result.weights)
            mat = np.zeros((len(rho), len(scheds)))
            for j, s in enumerate(scheds):
                for q in s.members:
                    mat[q - 1, j] = 1.0
            assert weights.min(initial=0.0) >= -1e-9
            assert abs(weights.sum() - result.beta_star) <= 1e-9
            assert np.all(mat @ weights >= rho - 1e-9)

    def test_uncovered_positive_load_infeasible(self):
        result = utilization_factor((0.1, 0.2), (Schedule.of([1]),))
        assert not result.feasible
        oracle = lp_oracle((0.1, 0.2), (Schedule.of([1]),))
        assert not oracle.feasible

    def test_dimension_validation(self):
        with pytest.raises(ValueError):
            utilization_factor(np.zeros((2, 2)), SINGLETONS)
        with pytest.raises(ValueError):
            utilization_factor((-0.1, 0.2, 0.1, 0.1), SINGLETONS)


class TestSimplexAgainstOracle:
    def test_two_hundred_random_instances(self):
        rng = np.random.default_rng(20240811)
        checked = 0
        while checked < 200:
            rho, scheds = random_instance(rng)
            if not scheds or len(scheds) > 12:
                continue
            fast = utilization_factor(rho, scheds)
            slow = lp_oracle(rho, scheds)
            assert fast.feasible == slow.feasible
            if fast.feasible:
                assert fast.beta_star == pytest.approx(slow.beta_star, abs=1e-9)
            checked += 1

    def test_homogeneity(self):
        rng = np.random.default_rng(5)
        for _ in range(30):
            rho, scheds = random_instance(rng)
            if not utilization_factor(rho, scheds).feasible:
                continue
            base = utilization_factor(rho, scheds).beta_star
            for c in (0.0, 0.25, 2.0):
                scaled = utilization_factor(c * rho, scheds).beta_star
                assert scaled == pytest.approx(c * base, abs=1e-9)

    def test_monotonicity(self):
        rng = np.random.default_rng(6)
        for _ in range(30):
            rho, scheds = random_instance(rng)
            if not utilization_factor(rho, scheds).feasible:
                continue
            smaller = rho * rng.random(len(rho))
            lo = utilization_factor(smaller, scheds).beta_star
            hi = utilization_factor(rho, scheds).beta_star
            assert lo <= hi + 1e-9

    def test_oracle_size_guard(self):
        rho = np.full(13, 0.01)
        scheds = tuple(Schedule.of([q]) for q in range(1, 14))
        with pytest.raises(ValueError, match="12"):
            lp_oracle(rho, scheds)


class TestCalibration:
    def test_symmetric_polling_pattern(self):
        lam = calibrate_arrivals(
            (0.125, 0.125, 0.125, 0.125), (0.5, 0.5, 0.5, 0.5), SINGLETONS, 0.95
        )
        assert np.allclose(lam, 0.95 * 0.125, atol=1e-15)

    @pytest.mark.parametrize("target", [0.0, 1.0, -0.5, 1.3])
    def test_target_outside_open_interval_rejected(self, target):
        with pytest.raises(ValueError):
            calibrate_arrivals((0.1,), (0.5,), (Schedule.of([1]),), target)

    def test_four_beam_pattern_lands_on_target(self):
        pattern = np.asarray([0.18, 0.16, 0.25, 0.3, 0.9, 0.8])
        mu = np.asarray([0.3, 0.4, 0.5, 0.6, 0.9, 0.8])
        # The pattern itself saturates capacity exactly (oracle-checked).
        assert lp_oracle(pattern / mu, SCENARIO_V).beta_star == pytest.approx(1.0, abs=1e-9)
        lam = calibrate_arrivals(pattern, mu, SCENARIO_V, 0.9)
        assert np.allclose(lam, 0.9 * pattern, atol=1e-12)
        assert utilization_factor(lam / mu, SCENARIO_V).beta_star == pytest.approx(
            0.9, abs=1e-9
        )

    def test_uncoverable_pattern_rejected(self):
        with pytest.raises(ValueError, match="coverable"):
            calibrate_arrivals((0.1, 0.1), (0.5, 0.5), (Schedule.of([1]),), 0.9)
