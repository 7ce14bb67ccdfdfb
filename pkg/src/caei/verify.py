"""Verification and ground-truth oracles.

`verify_caei` re-derives everything from the instance and the priced
allocation: it trusts nothing in the solution record beyond the raw
numbers.  The oracles are deliberately brute-force and kept on
desk-scale guards; they exist to give the solvers something
independent to be measured against.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

from .exactmath import GREATER_EQUAL, LESS_EQUAL, LinearProgram, OPTIMAL, simplex_solve
from .model import (
    CaeiSolution,
    CakeInstance,
    DiscreteInstance,
    DivisibleInstance,
    Instance,
    PriceCurve,
    bundle_price,
    canonicalize_piece,
    compute_served,
    demand_bundle,
    piece_contains,
    piece_intersection,
    piece_length,
    single_minded_utility,
)


class OracleGuardError(ValueError):
    """Instance too large for a brute-force oracle."""


@dataclass(frozen=True)
class Violation:
    subject: str
    condition: str
    magnitude: object = None


@dataclass(frozen=True)
class CaeiReport:
    partition_ok: bool
    budgets_ok: bool
    optimal_bundles_ok: bool
    is_caei: bool
    is_ceei: bool
    violations: tuple[Violation, ...]


def verify_caei(
    instance: Instance, solution: CaeiSolution, tolerance=0, relaxed: bool = False
) -> CaeiReport:
    """Check a priced allocation against the competitive conditions.

    The three conditions: (a) the allocation is a partition of the
    resources (with ``relaxed=True``, goods may go partly unsold but
    never over-sold); (b) nobody spends more than the unit budget;
    (c) every unsatisfied agent is genuinely priced out, i.e. its
    demand costs more than 1.  ``is_ceei`` additionally requires every
    agent to spend the budget exactly.  ``tolerance`` loosens every
    numeric comparison for inexact solutions; leave it 0 for exact ones.
    """
    violations: list[Violation] = []
    allocation = solution.allocation
    prices = solution.prices
    n = instance.num_agents
    if len(allocation) != n:
        raise ValueError(f"allocation covers {len(allocation)} of {n} agents")

    partition_ok = _check_partition(instance, allocation, tolerance, relaxed, violations)

    spends = []
    budgets_ok = True
    for i in range(n):
        spend = bundle_price(prices, allocation[i])
        spends.append(spend)
        if spend > 1 + tolerance:
            budgets_ok = False
            violations.append(Violation(f"agent {i}", "overspends", spend - 1))

    optimal_bundles_ok = True
    label_ok = True
    for i in range(n):
        covered = _covers_demand(instance, i, allocation[i], tolerance)
        if (i in solution.served) != covered:
            label_ok = False
            violations.append(Violation(f"agent {i}", "served label mismatch"))
        if i not in solution.served and not covered:
            cost = bundle_price(prices, demand_bundle(instance, i))
            if not cost > 1 - tolerance:
                optimal_bundles_ok = False
                violations.append(
                    Violation(f"agent {i}", "affordable unserved demand", 1 - cost)
                )

    is_caei = partition_ok and budgets_ok and optimal_bundles_ok and label_ok
    is_ceei = is_caei and all(abs(s - 1) <= tolerance for s in spends)
    return CaeiReport(
        partition_ok, budgets_ok, optimal_bundles_ok, is_caei, is_ceei, tuple(violations)
    )


def _covers_demand(instance, agent: int, bundle, tolerance) -> bool:
    """Does the bundle contain the agent's demand, up to the tolerance?"""
    if tolerance == 0:
        return single_minded_utility(instance, agent, bundle) == 1
    if isinstance(instance, DivisibleInstance):
        demand = instance.demands[agent]
        return all(x >= v - tolerance for x, v in zip(bundle, demand))
    if isinstance(instance, CakeInstance):
        demand = instance.demands[agent]
        held = piece_intersection(canonicalize_piece(bundle), demand)
        return piece_length(demand) - piece_length(held) <= tolerance
    return single_minded_utility(instance, agent, bundle) == 1


def _check_partition(instance, allocation, tolerance, relaxed, violations):
    ok = True
    if isinstance(instance, DivisibleInstance):
        for i, row in enumerate(allocation):
            for j, x in enumerate(row):
                if x < -tolerance:
                    ok = False
                    violations.append(Violation(f"agent {i}", "negative quantity", -x))
        for j in range(instance.num_goods):
            total = sum(row[j] for row in allocation)
            short = 1 - total if not relaxed else 0
            if total > 1 + tolerance or short > tolerance:
                ok = False
                violations.append(Violation(f"good {j}", "not cleared", total - 1))
    elif isinstance(instance, CakeInstance):
        pieces = [canonicalize_piece(p) for p in allocation]
        covered = Fraction(0)
        for piece in pieces:
            covered += piece_length(piece)
        for i, j in itertools.combinations(range(len(pieces)), 2):
            overlap = piece_length(piece_intersection(pieces[i], pieces[j]))
            if overlap > tolerance:
                ok = False
                violations.append(Violation(f"agents {i},{j}", "overlapping pieces", overlap))
        short = 1 - covered if not relaxed else 0
        if covered > 1 + tolerance or short > tolerance:
            ok = False
            violations.append(Violation("cake", "not fully allocated", covered - 1))
    elif isinstance(instance, DiscreteInstance):
        for i, row in enumerate(allocation):
            for j, c in enumerate(row):
                if c != int(c) or c < 0:
                    ok = False
                    violations.append(Violation(f"agent {i}", "bad copy count", c))
        for j, q in enumerate(instance.quantities):
            total = sum(row[j] for row in allocation)
            if total > q or (not relaxed and total != q):
                ok = False
                violations.append(Violation(f"item {j}", "not cleared", total - q))
    else:
        raise TypeError(f"unknown instance type {type(instance).__name__}")
    return ok


def is_envy_free(instance: Instance, allocation) -> bool:
    """No unsatisfied agent sees its full demand sitting in someone
    else's bundle.  Satisfied agents never envy: utility is 0/1."""
    for i in range(instance.num_agents):
        if single_minded_utility(instance, i, allocation[i]) == 1:
            continue
        demand = instance.demands[i]
        for k in range(instance.num_agents):
            if k == i:
                continue
            if isinstance(instance, DivisibleInstance):
                fits = all(x >= d for x, d in zip(allocation[k], demand))
            elif isinstance(instance, CakeInstance):
                fits = piece_contains(allocation[k], demand)
            else:
                fits = all(allocation[k][j] >= 1 for j in demand)
            if fits:
                return False
    return True


# ---------------------------------------------------------------------------
# brute-force oracles


def oracle_max_satisfiable(instance: Instance) -> tuple[int, tuple[int, ...]]:
    """Largest set of agents whose demands fit simultaneously, ignoring
    prices entirely.  Returns (size, lexicographically smallest witness).
    """
    n = instance.num_agents
    if n > 20:
        raise OracleGuardError(f"max-satisfiable oracle capped at 20 agents, got {n}")

    if isinstance(instance, CakeInstance):
        conflict = [0] * n
        for i, k in itertools.combinations(range(n), 2):
            overlap = piece_length(
                piece_intersection(instance.demands[i], instance.demands[k])
            )
            if overlap > 0:
                conflict[i] |= 1 << k
                conflict[k] |= 1 << i

        def feasible(subset):
            mask = 0
            for i in subset:
                mask |= 1 << i
            return all(conflict[i] & mask == 0 for i in subset)

    elif isinstance(instance, DivisibleInstance):

        def feasible(subset):
            return all(
                sum(instance.demands[i][j] for i in subset) <= 1
                for j in range(instance.num_goods)
            )

    elif isinstance(instance, DiscreteInstance):

        def feasible(subset):
            return all(
                sum(1 for i in subset if j in instance.demands[i]) <= q
                for j, q in enumerate(instance.quantities)
            )

    else:
        raise TypeError(f"unknown instance type {type(instance).__name__}")

    for size in range(n, -1, -1):
        for subset in itertools.combinations(range(n), size):
            if feasible(subset):
                return size, subset
    return 0, ()


def oracle_caei_search(instance: Instance) -> CaeiSolution | None:
    """Maximum-welfare price-supportable outcome, by brute force.

    Works from first principles in a formulation independent of the
    production solvers: agent subsets with a price-space LP for the
    continuous models, full allocation enumeration for discrete items.
    Returns None when no priced allocation satisfies the definition.
    """
    if isinstance(instance, DivisibleInstance):
        _guard_continuous(instance)
        return _search_divisible(instance)
    if isinstance(instance, CakeInstance):
        _guard_continuous(instance)
        return _search_cake(instance)
    if isinstance(instance, DiscreteInstance):
        if (
            instance.num_agents > 4
            or instance.num_items > 3
            or max(instance.quantities) > 2
        ):
            raise OracleGuardError(
                "discrete search oracle capped at 4 agents, 3 item types, 2 copies"
            )
        return _search_discrete(instance)
    raise TypeError(f"unknown instance type {type(instance).__name__}")


def _guard_continuous(instance):
    if instance.num_agents > 6:
        raise OracleGuardError(
            f"search oracle capped at 6 agents, got {instance.num_agents}"
        )


def _subsets_by_welfare(n):
    for size in range(n, -1, -1):
        yield from itertools.combinations(range(n), size)


def _supporting_prices(costs, served, budget_cap, num_prices):
    """Shared LP core: price vectors under which exactly the served
    agents afford their demands.

    ``costs[i]`` maps price-variable index -> coefficient such that
    sum(c * p) is the cost of agent i's demand.  Returns the price
    list, or None.  ``budget_cap`` bounds the total price of all
    resources (full clearing against unit budgets makes more money
    than the agents hold impossible to collect).
    """
    lp = LinearProgram(sense="max")
    for k in range(num_prices):
        lp.add_variable(f"p{k}")
    lp.add_variable("eps", upper=1)
    lp.set_objective({"eps": 1})
    for i, cost in enumerate(costs):
        if not cost:
            # a free demand can never be priced out, and is always afforded
            if i not in served:
                return None
            continue
        if i in served:
            lp.add_constraint(cost, LESS_EQUAL, 1)
        else:
            lp.add_constraint({**cost, "eps": -1}, GREATER_EQUAL, 1)
    lp.add_constraint({f"p{k}": 1 for k in range(num_prices)}, LESS_EQUAL, budget_cap)
    out = simplex_solve(lp)
    if out.status != OPTIMAL or out.objective_value <= 0:
        return None
    return [out.assignment[f"p{k}"] for k in range(num_prices)]


def _search_divisible(instance):
    n, m = instance.num_agents, instance.num_goods
    v = instance.demands
    for subset in _subsets_by_welfare(n):
        served = set(subset)
        leftovers = [1 - sum(v[i][j] for i in served) for j in range(m)]
        if any(r < 0 for r in leftovers):
            continue
        costs = [
            {f"p{j}": v[i][j] for j in range(m) if v[i][j]} for i in range(n)
        ]
        prices = _supporting_prices(costs, served, n, m)
        if prices is None:
            continue
        allocation = [
            [v[i][j] if i in served else Fraction(0) for j in range(m)]
            for i in range(n)
        ]
        spends = [
            sum(prices[j] * allocation[i][j] for j in range(m)) for i in range(n)
        ]
        for j in range(m):
            remaining = leftovers[j]
            if not remaining:
                continue
            if prices[j] == 0:
                allocation[0][j] += remaining
                continue
            for i in range(n):
                if remaining == 0:
                    break
                take = min(remaining, (1 - spends[i]) / prices[j])
                if take > 0:
                    allocation[i][j] += take
                    spends[i] += take * prices[j]
                    remaining -= take
            assert remaining == 0, "budget water-fill must absorb all leftovers"
        allocation = tuple(tuple(row) for row in allocation)
        return CaeiSolution(
            allocation,
            tuple(prices),
            frozenset(served),
            len(served),
            provenance="oracle_caei_search",
        )
    return None


def _search_cake(instance):
    n = instance.num_agents
    points = sorted({p for piece in instance.demands for lo, hi in piece for p in (lo, hi)} | {Fraction(0), Fraction(1)})
    cells = [((lo, hi),) for lo, hi in zip(points, points[1:])]
    wants = [
        [piece_contains(instance.demands[i], cell) for cell in cells]
        for i in range(n)
    ]
    for subset in _subsets_by_welfare(n):
        served = set(subset)
        if any(
            sum(1 for i in served if wants[i][k]) > 1 for k in range(len(cells))
        ):
            continue
        costs = [
            {f"p{k}": 1 for k in range(len(cells)) if wants[i][k]} for i in range(n)
        ]
        prices = _supporting_prices(costs, served, n, len(cells))
        if prices is None:
            continue
        pieces: list[list] = [[] for _ in range(n)]
        spends = [
            sum(prices[k] for k in range(len(cells)) if wants[i][k])
            if i in served
            else Fraction(0)
            for i in range(n)
        ]
        for k, cell in enumerate(cells):
            owner = next((i for i in served if wants[i][k]), None)
            if owner is not None:
                pieces[owner].append(cell[0])
                continue
            (lo, hi) = cell[0]
            length = hi - lo
            if prices[k] == 0:
                pieces[0].append((lo, hi))
                continue
            cursor = lo
            for i in range(n):
                if cursor == hi:
                    break
                share = min(hi - cursor, (1 - spends[i]) / prices[k] * length)
                if share > 0:
                    pieces[i].append((cursor, cursor + share))
                    spends[i] += prices[k] * share / length
                    cursor += share
            assert cursor == hi, "budget water-fill must absorb the whole cell"
        breakpoints = tuple(points)
        curve = PriceCurve(
            breakpoints,
            tuple(
                prices[k] / (hi - lo)
                for k, (lo, hi) in enumerate(zip(points, points[1:]))
            ),
        )
        allocation = tuple(canonicalize_piece(p) for p in pieces)
        return CaeiSolution(
            allocation,
            curve,
            frozenset(served),
            len(served),
            provenance="oracle_caei_search",
        )
    return None


def _search_discrete(instance):
    from .discrete import prices_for_allocation_discrete

    n, m = instance.num_agents, instance.num_items
    singleton_agents = [i for i in range(n) if len(instance.demands[i]) == 1]

    def compositions(total, parts):
        if parts == 1:
            yield (total,)
            return
        for first in range(total + 1):
            for rest in compositions(total - first, parts - 1):
                yield (first,) + rest

    best: CaeiSolution | None = None
    per_item = [list(compositions(q, n)) for q in instance.quantities]
    for columns in itertools.product(*per_item):
        allocation = tuple(
            tuple(columns[j][i] for j in range(m)) for i in range(n)
        )
        served = compute_served(instance, allocation)
        if best is not None and len(served) <= best.welfare:
            continue
        # An allocation leaving a singleton-demand agent unserved is never
        # supportable: pricing the lone item out of reach makes every
        # holder of a copy overspend.
        if any(i not in served for i in singleton_agents):
            continue
        prices = prices_for_allocation_discrete(instance, allocation)
        if prices is None:
            continue
        best = CaeiSolution(
            allocation,
            prices,
            served,
            len(served),
            provenance="oracle_caei_search",
        )
        if best.welfare == n:
            break
    return best
