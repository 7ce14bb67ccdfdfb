"""Discrete goods: existence, the pricing algorithm, relaxed welfare."""

import random
from fractions import Fraction as F

import pytest

from caei.discrete import (
    caei_exists,
    max_welfare_relaxed,
    prices_for_allocation_discrete,
    solve_caei,
)
from caei.model import DiscreteInstance
from caei.verify import is_envy_free, oracle_caei_search, verify_caei


@pytest.fixture
def five_agents():
    # quantities (2,4,2,3,2); items 0 and 2 end up over-demanded
    return DiscreteInstance(
        (2, 4, 2, 3, 2),
        (
            frozenset({0}),
            frozenset({0, 1}),
            frozenset({0, 2}),
            frozenset({1, 2, 3}),
            frozenset({1, 2, 3, 4}),
        ),
    )


@pytest.fixture
def three_three():
    # enough items for everyone, but the unit counts rule out exhausting
    # all budgets: a CAEI that is not a CEEI
    return DiscreteInstance(
        (3, 3),
        (frozenset({1}), frozenset({0, 1}), frozenset({0, 1}), frozenset({0})),
    )


# --- existence -------------------------------------------------------------


def test_exists_singleton_demand_within_supply(five_agents):
    assert caei_exists(five_agents)


def test_exists_fails_on_singleton_over_demand():
    # three singleton demands for two copies of item 0
    inst = DiscreteInstance(
        (2, 4),
        (frozenset({0}), frozenset({0}), frozenset({0}), frozenset({0, 1})),
    )
    assert not caei_exists(inst)
    assert solve_caei(inst) is None


def test_exists_counts_per_item():
    inst = DiscreteInstance(
        (1, 2),
        (frozenset({1}), frozenset({1}), frozenset({0}), frozenset({0, 1})),
    )
    assert caei_exists(inst)


# --- the pricing algorithm -------------------------------------------------


def test_five_agent_run(five_agents):
    sol = solve_caei(five_agents)
    eps = F(1, 14)
    assert sol.prices == (1, eps, 1, eps, eps)
    assert sol.served == frozenset({0})
    assert sol.trace == (
        ("unit_price", 0, (0, 1)),
        ("unit_price", 2, (2, 3)),
        ("remainder", (1, 3, 4), eps),
    )


def test_five_agent_allocation(five_agents):
    sol = solve_caei(five_agents)
    # the last active agent sweeps up all remaining copies
    assert sol.allocation[4] == (0, 4, 0, 3, 2)
    assert sol.allocation[0] == (1, 0, 0, 0, 0)
    assert verify_caei(five_agents, sol).is_caei


def test_all_served_at_sliver_prices(three_three):
    sol = solve_caei(three_three)
    assert sol.welfare == 4
    assert sol.prices == (F(1, 7), F(1, 7))
    report = verify_caei(three_three, sol)
    assert report.is_caei
    assert not report.is_ceei


def test_priced_item_is_not_revisited():
    # five demanders of item 0 but only two copies: one unit-price round,
    # then the remaining demanders move on
    inst = DiscreteInstance(
        (2, 3),
        (
            frozenset({0}),
            frozenset({0}),
            frozenset({0, 1}),
            frozenset({0, 1}),
            frozenset({0, 1}),
        ),
    )
    sol = solve_caei(inst)
    assert sol.trace[0] == ("unit_price", 0, (0, 1))
    assert sum(row[0] for row in sol.allocation) == 2
    assert verify_caei(inst, sol).is_caei


def test_solutions_are_exact(five_agents):
    assert solve_caei(five_agents).exact


def test_random_instances_verify():
    rng = random.Random(23)
    checked = 0
    for _ in range(40):
        n = rng.randint(1, 5)
        m = rng.randint(1, 3)
        quantities = tuple(rng.randint(1, 3) for _ in range(m))
        demands = tuple(
            frozenset(j for j in range(m) if rng.random() < 0.6) for _ in range(n)
        )
        try:
            inst = DiscreteInstance(quantities, demands)
        except ValueError:
            continue
        sol = solve_caei(inst)
        assert (sol is not None) == caei_exists(inst)
        if sol is not None:
            assert verify_caei(inst, sol).is_caei
            checked += 1
    assert checked > 5


# --- relaxed welfare maximization ------------------------------------------


def test_relaxed_welfare_beats_full_run(five_agents):
    sol = max_welfare_relaxed(five_agents)
    assert sol.welfare == 4
    assert verify_caei(five_agents, sol, relaxed=True).is_caei


def test_relaxed_welfare_integral_and_affordable(five_agents):
    sol = max_welfare_relaxed(five_agents)
    for i, row in enumerate(sol.allocation):
        for j, count in enumerate(row):
            assert count == int(count)
            assert 0 <= count <= five_agents.quantities[j]
        spend = sum(sol.prices[j] * row[j] for j in range(len(row)))
        assert spend <= 1


def test_relaxed_welfare_supply(five_agents):
    sol = max_welfare_relaxed(five_agents)
    for j in range(5):
        assert sum(row[j] for row in sol.allocation) <= five_agents.quantities[j]


def test_relaxed_welfare_small_oracle_agreement():
    rng = random.Random(31)
    checked = 0
    for _ in range(30):
        n = rng.randint(1, 4)
        m = rng.randint(1, 3)
        quantities = tuple(rng.randint(1, 2) for _ in range(m))
        demands = tuple(
            frozenset(j for j in range(m) if rng.random() < 0.6) for _ in range(n)
        )
        try:
            inst = DiscreteInstance(quantities, demands)
        except ValueError:
            continue
        relaxed = max_welfare_relaxed(inst)
        full = oracle_caei_search(inst)
        # dropping the clearing requirement can only help
        if full is not None:
            assert relaxed.welfare >= full.welfare
        checked += 1
    assert checked > 5


# --- supporting prices for a fixed allocation ------------------------------


def test_completion_prices_cover_algorithm_output(three_three):
    sol = solve_caei(three_three)
    prices = prices_for_allocation_discrete(three_three, sol.allocation)
    assert prices is not None


def test_completion_envy_free_but_unsupportable():
    inst = DiscreteInstance(
        (1, 1, 1, 1), (frozenset({0, 1}), frozenset({2, 3}))
    )
    allocation = ((1, 0, 1, 0), (0, 1, 0, 1))
    assert is_envy_free(inst, allocation)
    assert prices_for_allocation_discrete(inst, allocation) is None


def test_completion_rejects_bad_allocations(three_three):
    with pytest.raises(ValueError):
        prices_for_allocation_discrete(three_three, ((1, 0), (0, 1)))
    with pytest.raises(ValueError):
        # over-allocates item 0
        prices_for_allocation_discrete(
            three_three, ((0, 1), (2, 1), (1, 1), (2, 0))
        )
    with pytest.raises(ValueError):
        # leaves a copy of item 0 unsold
        prices_for_allocation_discrete(
            three_three, ((0, 1), (1, 1), (1, 1), (0, 0))
        )
