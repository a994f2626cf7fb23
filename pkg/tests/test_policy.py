import math

import pytest
from hypothesis import given, strategies as st

from switchsim.model import Schedule
from switchsim.policy import (
    Mode,
    ServerState,
    begin_switch,
    bias_denominator,
    frame_length,
    maxweight_decide,
    on_switch_complete,
    qbmw_decide,
    vfmw_decide,
    wbmw_decide,
)

TWO_SINGLETONS = (Schedule.of([1]), Schedule.of([2]))
FOUR_SINGLETONS = tuple(Schedule.of([q]) for q in (1, 2, 3, 4))


def active_server(current=0, frozen_bias=1.0, frame_end=1):
    return ServerState(current=current, frozen_bias=frozen_bias, frame_end=frame_end)


class TestBiasDenominator:
    def test_zero_sum_clamps_to_one(self):
        assert bias_denominator(0.0, 0.5) == 1.0

    def test_unit_sum_is_one(self):
        assert bias_denominator(1.0, 0.123) == 1.0

    def test_fourteen_to_the_milli(self):
        assert bias_denominator(14.0, 0.001) == pytest.approx(
            math.exp(0.001 * math.log(14.0))
        )
        assert bias_denominator(14.0, 0.001) == pytest.approx(1.0026426, abs=1e-6)

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            bias_denominator(-1.0, 0.5)


class TestQbmwDecide:
    def test_empty_current_queue_triggers_switch(self):
        # Work conservation: an idle server with backlog elsewhere moves.
        assert qbmw_decide((0, 3), active_server(), TWO_SINGLETONS, 1) == 1

    def test_inflated_incumbent_wins(self):
        server = active_server(frozen_bias=bias_denominator(14.0, 0.001))
        # (1 + 1/1.0026426) * 5 = 9.98682... > 9
        assert qbmw_decide((5, 9), server, TWO_SINGLETONS, 1) is None

    def test_challenger_clears_the_bias(self):
        server = active_server(frozen_bias=bias_denominator(14.0, 0.001))
        # 9.98682... <= 10
        assert qbmw_decide((5, 10), server, TWO_SINGLETONS, 1) == 1

    def test_all_empty_stays(self):
        assert qbmw_decide((0, 0), active_server(), TWO_SINGLETONS, 1) is None

    def test_requires_active_mode(self):
        server = active_server()
        server.mode = Mode.SWITCH
        with pytest.raises(ValueError):
            qbmw_decide((1, 2), server, TWO_SINGLETONS, 1)

    def test_tie_among_others_picks_lowest_index(self):
        server = active_server(current=2)
        assert qbmw_decide((9, 9, 0, 1), server, FOUR_SINGLETONS, 1) == 0

    @given(
        q=st.lists(st.integers(0, 100), min_size=4, max_size=4),
        c=st.integers(1, 20),
    )
    def test_scale_invariance_with_frozen_bias(self, q, c):
        server = active_server(frozen_bias=1.7)
        scaled = [c * x for x in q]
        assert qbmw_decide(q, server, FOUR_SINGLETONS, 2) == qbmw_decide(
            scaled, server, FOUR_SINGLETONS, 2
        )

    @given(
        q=st.lists(st.integers(0, 50), min_size=4, max_size=4),
        current=st.integers(0, 3),
    )
    def test_work_conservation_predicate(self, q, current):
        q = list(q)
        q[current] = 0
        server = active_server(current=current)
        if sum(q) > 0:
            assert qbmw_decide(q, server, FOUR_SINGLETONS, 3) is not None
            assert wbmw_decide(q, server, FOUR_SINGLETONS, 3) is not None


class TestWbmwDecide:
    def test_idle_with_waiting_elsewhere_switches(self):
        assert wbmw_decide((0, 4), active_server(), TWO_SINGLETONS, 1) == 1

    def test_frozen_bias_keeps_incumbent(self):
        server = active_server(frozen_bias=bias_denominator(17.0, 0.001))
        # (1 + 1/1.00284) * 6 = 11.983 > 11
        assert wbmw_decide((6, 11), server, TWO_SINGLETONS, 1) is None

    def test_all_zero_waits_stay(self):
        assert wbmw_decide((0, 0), active_server(), TWO_SINGLETONS, 1) is None


class TestFrozenBiasSemantics:
    def test_decision_tracks_interval_start_not_current_state(self):
        # At the interval start the backlog was tiny (bias 1); it has since
        # grown to 40 jobs. Recomputing the bias from the current state
        # (40^0.5 ~ 6.3) would release the incumbent; the frozen value
        # must keep holding it.
        schedules = TWO_SINGLETONS
        q_now = (16, 24)  # frozen: (1 + 3/1)*16 = 64 > 24 -> stay
        frozen = active_server(frozen_bias=1.0)
        assert qbmw_decide(q_now, frozen, schedules, 3) is None
        recomputed = active_server(frozen_bias=bias_denominator(40.0, 0.5))
        # (1 + 3/6.32)*16 = 23.6 <= 24 -> a recomputing bug would switch
        assert qbmw_decide(q_now, recomputed, schedules, 3) == 1


class TestVfmwDecide:
    def test_mid_frame_always_stays(self):
        server = active_server(frame_end=10)
        assert vfmw_decide((0, 99), server, TWO_SINGLETONS, 1, t=5) is None

    def test_boundary_switch_and_frame_length(self):
        server = active_server(frame_end=5)
        assert vfmw_decide((0, 100), server, TWO_SINGLETONS, 1, t=5) == 1
        assert frame_length(100.0, 0.5) == 10

    def test_zero_backlog_frame_clamps_to_one(self):
        server = active_server(frame_end=5)
        assert vfmw_decide((0, 0), server, TWO_SINGLETONS, 1, t=7) is None
        assert frame_length(0.0, 0.7) == 1

    def test_floor_of_fourteen_to_099(self):
        assert frame_length(14.0, 0.99) == 13  # 14^0.99 = 13.64

    def test_boundary_stay_when_incumbent_still_best(self):
        server = active_server(current=1, frame_end=5)
        assert vfmw_decide((3, 7), server, TWO_SINGLETONS, 1, t=9) is None


class TestMaxweightDecide:
    def test_tie_prefers_current(self):
        assert maxweight_decide((3, 3), active_server(), TWO_SINGLETONS) is None

    def test_strictly_larger_weight_switches(self):
        assert maxweight_decide((3, 4), active_server(), TWO_SINGLETONS) == 1

    def test_all_zero_stays(self):
        assert maxweight_decide((0, 0), active_server(), TWO_SINGLETONS) is None

    @given(q=st.lists(st.integers(0, 20), min_size=2, max_size=2))
    def test_deterministic(self, q):
        a = maxweight_decide(q, active_server(), TWO_SINGLETONS)
        b = maxweight_decide(q, active_server(), TWO_SINGLETONS)
        assert a == b


class TestSwitchBookkeeping:
    def test_interval_log_entry_on_completion(self):
        server = active_server()
        begin_switch(server, t=10, target=1, switch_overhead=2, pending_bias=1.5)
        assert server.mode is Mode.SWITCH and server.switch_remaining == 2
        server.switch_remaining = 0
        on_switch_complete(server, t=12)
        assert server.mode is Mode.ACTIVE
        assert server.current == 1
        assert server.frozen_bias == 1.5
        assert server.interval_start == 10
        assert server.intervals_log == [(0, 10)]

    def test_first_switch_interval_is_trigger_time(self):
        server = active_server()
        begin_switch(server, t=4, target=1, switch_overhead=1, pending_bias=1.0)
        server.switch_remaining = 0
        on_switch_complete(server, t=5)
        assert server.intervals_log == [(0, 4)]

    def test_consecutive_triggers(self):
        server = active_server()
        for trigger, target in ((10, 1), (17, 0)):
            begin_switch(server, trigger, target, 1, 1.0)
            server.switch_remaining = 0
            on_switch_complete(server, trigger + 1)
        assert server.intervals_log == [(0, 10), (10, 7)]

    def test_complete_in_wrong_mode_rejected(self):
        with pytest.raises(ValueError):
            on_switch_complete(active_server(), t=3)
        server = active_server()
        begin_switch(server, 1, 1, 2, 1.0)
        with pytest.raises(ValueError):  # still one slot remaining
            on_switch_complete(server, t=2)

    def test_self_switch_rejected(self):
        with pytest.raises(ValueError):
            begin_switch(active_server(current=1), 5, 1, 1, 1.0)

    def test_double_trigger_rejected(self):
        server = active_server()
        begin_switch(server, 1, 1, 2, 1.0)
        with pytest.raises(ValueError):
            begin_switch(server, 2, 0, 2, 1.0)
