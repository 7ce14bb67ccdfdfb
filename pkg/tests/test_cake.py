"""Cake cutting: partitions, existence, greedy scheduling, welfare."""

import random
from fractions import Fraction as F

import pytest

from caei.cake import (
    Partition,
    ScheduledJob,
    allocation_for_price_curve,
    greedy_contiguous,
    max_welfare_fixed_agents,
    price_curve_for_allocation,
    refine_partition,
    solve_existence,
)
from caei.model import CakeInstance, PriceCurve, bundle_price, piece_length
from caei.verify import oracle_caei_search, verify_caei


def interval_instance(*spans):
    return CakeInstance(tuple(((F(a), F(b)),) for a, b in spans))


@pytest.fixture
def schedule_demo():
    # two abutting demands plus one spanning the whole cake
    return interval_instance((0, F(1, 2)), (F(1, 2), 1), (0, 1))


# --- partitions ------------------------------------------------------------


def test_partition_validation():
    with pytest.raises(ValueError):
        Partition((F(0), F(1, 2)))
    with pytest.raises(ValueError):
        Partition((F(0), F(1, 2), F(1, 2), F(1)))
    assert Partition((F(0), F(1))).cells == ((F(0), F(1)),)


def test_refine_midpoints_splits_each_demand():
    part = refine_partition(interval_instance((0, 1)), (), "midpoints")
    assert part.breakpoints == (F(0), F(1, 2), F(1))


def test_refine_none_keeps_endpoints():
    part = refine_partition(interval_instance((F(1, 4), F(3, 4))), (), "none")
    assert part.breakpoints == (F(0), F(1, 4), F(3, 4), F(1))


def test_refine_per_demander_count():
    inst = interval_instance((0, F(3, 5)), (F(3, 10), 1))
    part = refine_partition(inst, (), "per_demander_count")
    # the doubly-demanded middle cell splits in two, the others stay
    assert part.breakpoints == (F(0), F(3, 10), F(9, 20), F(3, 5), F(1))


def test_refine_rejects_bad_input():
    inst = interval_instance((0, 1))
    with pytest.raises(ValueError):
        refine_partition(inst, (F(3, 2),), "none")
    with pytest.raises(ValueError):
        refine_partition(inst, (), "thirds")


def test_refine_accepts_extra_points():
    part = refine_partition(interval_instance((0, 1)), (F(1, 3),), "none")
    assert F(1, 3) in part.breakpoints


# --- existence -------------------------------------------------------------


def test_existence_single_agent_gets_everything():
    sol = solve_existence(CakeInstance((((F(1, 5), F(2, 5)),),)))
    assert sol.welfare == 1
    assert piece_length(sol.allocation[0]) == 1


def test_existence_identical_twins_split_the_cells():
    sol = solve_existence(interval_instance((0, 1), (0, 1)))
    assert sol.welfare == 0
    assert sol.allocation == (
        ((F(0), F(1, 2)),),
        ((F(1, 2), F(1)),),
    )


def test_existence_is_always_a_full_partition(schedule_demo):
    sol = solve_existence(schedule_demo)
    assert verify_caei(schedule_demo, sol).is_caei
    total = sum(piece_length(piece) for piece in sol.allocation)
    assert total == 1


def test_existence_random_sweep():
    rng = random.Random(47)
    for _ in range(15):
        n = rng.randint(1, 4)
        demands = []
        for _ in range(n):
            cuts = sorted(rng.sample(range(1, 12), 2))
            demands.append(((F(cuts[0], 12), F(cuts[1], 12)),))
        inst = CakeInstance(tuple(demands))
        sol = solve_existence(inst)
        assert verify_caei(inst, sol).is_caei


# --- greedy scheduling -----------------------------------------------------


def test_greedy_three_agent_run(schedule_demo):
    sol = greedy_contiguous(schedule_demo)
    assert sol.welfare == 2
    assert sol.served == frozenset({0, 1})
    assert sol.provenance == "greedy_contiguous"
    assert sol.trace == (
        ScheduledJob(0, F(0), F(1, 2), 1),
        ScheduledJob(1, F(1, 2), F(1), 2),
    )
    # the spanning agent is priced out exactly
    assert bundle_price(sol.prices, schedule_demo.demands[2]) == 2


def test_greedy_budgets_close_exactly(schedule_demo):
    sol = greedy_contiguous(schedule_demo)
    for i in sol.served:
        assert bundle_price(sol.prices, sol.allocation[i]) == 1


def test_greedy_latest_start_tie_rule():
    # both finish at 1/2; the later start wins, the earlier is a loser
    inst = interval_instance((0, F(1, 2)), (F(1, 4), F(1, 2)))
    sol = greedy_contiguous(inst)
    assert sol.served == frozenset({1})


def test_greedy_identical_pair_steps_aside():
    inst = interval_instance((0, F(1, 2)), (0, F(1, 2)), (F(1, 2), 1))
    sol = greedy_contiguous(inst)
    assert sol.welfare == 1
    assert sol.served == frozenset({2})
    assert sol.provenance == "greedy_contiguous"
    # the identical pair exhausts its budgets on consolation slivers
    for i in (0, 1):
        assert bundle_price(sol.prices, sol.allocation[i]) == 1
    oracle = oracle_caei_search(inst)
    assert oracle.welfare == 1


def test_greedy_falls_back_when_slivers_cannot_price_out():
    # the identical pair's demand would stay free: the LP route takes over
    inst = interval_instance((F(1, 2), 1), (F(1, 2), 1), (0, F(1, 4)))
    sol = greedy_contiguous(inst)
    assert sol.provenance == "greedy_contiguous (lp fallback)"
    assert sol.welfare == 1
    assert verify_caei(inst, sol).is_caei


def test_greedy_rejects_noncontiguous():
    inst = CakeInstance((((F(0), F(1, 4)), (F(1, 2), F(3, 4))),))
    with pytest.raises(ValueError):
        greedy_contiguous(inst)


def test_greedy_unserved_strictly_priced_out():
    rng = random.Random(53)
    for _ in range(15):
        n = rng.randint(2, 5)
        spans = set()
        while len(spans) < n:
            cuts = sorted(rng.sample(range(0, 13), 2))
            spans.add((F(cuts[0], 12), F(cuts[1], 12)))
        inst = interval_instance(*sorted(spans))
        sol = greedy_contiguous(inst)
        assert verify_caei(inst, sol).is_caei
        for i in range(n):
            if i not in sol.served:
                assert bundle_price(sol.prices, inst.demands[i]) > 1


# --- welfare maximization --------------------------------------------------


def test_fixed_agents_three_agent_run(schedule_demo):
    sol = max_welfare_fixed_agents(schedule_demo)
    assert sol.welfare == 2
    assert sol.served == frozenset({0, 1})
    assert bundle_price(sol.prices, schedule_demo.demands[2]) == 2


def test_fixed_agents_disjoint_demands_all_served():
    inst = interval_instance((0, F(3, 10)), (F(1, 2), F(9, 10)))
    sol = max_welfare_fixed_agents(inst)
    assert sol.welfare == 2


def test_fixed_agents_noncontiguous_overlap():
    inst = CakeInstance(
        (
            ((F(0), F(3, 5)), (F(4, 5), F(1))),
            ((F(2, 5), F(9, 10)),),
        )
    )
    sol = max_welfare_fixed_agents(inst)
    assert sol.welfare == 1


def test_fixed_agents_matches_greedy_on_contiguous():
    rng = random.Random(61)
    for _ in range(6):
        n = rng.randint(2, 4)
        spans = set()
        while len(spans) < n:
            cuts = sorted(rng.sample(range(0, 5), 2))
            spans.add((F(cuts[0], 4), F(cuts[1], 4)))
        inst = interval_instance(*sorted(spans))
        greedy = greedy_contiguous(inst)
        exact = max_welfare_fixed_agents(inst)
        assert greedy.welfare == exact.welfare


# --- completion problems ---------------------------------------------------


def test_curve_for_allocation_recovers_uniform_two(schedule_demo):
    allocation = (((F(0), F(1, 2)),), ((F(1, 2), F(1)),), ())
    curve = price_curve_for_allocation(schedule_demo, allocation)
    assert curve == PriceCurve((F(0), F(1, 2), F(1)), (F(2), F(2)))


def test_curve_for_allocation_envy_free_but_unsupportable():
    inst = interval_instance((0, F(2, 5)), (F(2, 5), 1))
    allocation = (
        ((F(0), F(1, 5)), (F(2, 5), F(7, 10))),
        ((F(1, 5), F(2, 5)), (F(7, 10), F(1))),
    )
    assert price_curve_for_allocation(inst, allocation) is None


def test_curve_for_allocation_rejects_bad_input(schedule_demo):
    with pytest.raises(ValueError):
        price_curve_for_allocation(schedule_demo, ((), ()))
    with pytest.raises(ValueError):
        # overlapping pieces are not a partition
        price_curve_for_allocation(
            schedule_demo,
            (((F(0), F(3, 5)),), ((F(1, 2), F(1)),), ()),
        )


def test_allocation_for_curve_uniform_two(schedule_demo):
    curve = PriceCurve((F(0), F(1)), (F(2),))
    allocation = allocation_for_price_curve(schedule_demo, curve)
    assert allocation == (((F(0), F(1, 2)),), ((F(1, 2), F(1)),), ())


def test_allocation_for_curve_zero_prices():
    overlapping = interval_instance((0, F(3, 5)), (F(2, 5), 1))
    free = PriceCurve((F(0), F(1)), (F(0),))
    assert allocation_for_price_curve(overlapping, free) is None
    disjoint = interval_instance((0, F(2, 5)), (F(3, 5), 1))
    assert allocation_for_price_curve(disjoint, free) is not None


def test_completion_roundtrip(schedule_demo):
    sol = greedy_contiguous(schedule_demo)
    curve = price_curve_for_allocation(schedule_demo, sol.allocation)
    assert curve is not None
    back = allocation_for_price_curve(schedule_demo, curve)
    assert back is not None
