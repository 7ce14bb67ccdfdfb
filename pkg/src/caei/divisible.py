"""Divisible goods: equilibrium computation and welfare maximization.

Two routes to a competitive allocation from equal incomes:

* ``solve_eg`` reduces the market to the Eisenberg-Gale convex program
  for Leontief-style buyers (utility = how many times over a bundle
  covers the demand vector, capped at need) and solves it numerically;
  competitive prices are the multipliers on the goods constraints.
  Fast, but floating point: results carry ``exact=False``.

* ``subset_caei_lp`` fixes who is to be satisfied and asks an exact
  rational LP for supporting prices and a money flow; enumerating
  subsets from large to small (``max_welfare_caei``) then maximizes
  the number of satisfied agents exactly.

``prices_for_allocation`` and ``allocation_for_prices`` complete a
half-specified outcome: given one side, find the other or report that
none exists.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .exactmath import (
    EQUAL,
    GREATER_EQUAL,
    LESS_EQUAL,
    LinearProgram,
    OPTIMAL,
    as_fraction,
    simplex_solve,
    solve_linear_system,
)
from .model import (
    CaeiSolution,
    DivisibleInstance,
    bundle_price,
    compute_served,
    group_types,
    validate_price_vector,
)
from .verify import verify_caei


class EgConvergenceError(RuntimeError):
    """The numeric equilibrium search did not reach the tolerance."""


@dataclass(frozen=True)
class EgProgram:
    """Solved reduced program: utilities, unit budgets, good multipliers."""

    utilities: tuple[float, ...]
    budgets: tuple[float, ...]
    duals: tuple[float, ...]
    iterations: int
    residual: float


def solve_eg(instance: DivisibleInstance, tolerance: float = 1e-9) -> CaeiSolution:
    """Numeric competitive equilibrium via the reduced convex program.

    Maximizes sum(log u_i) subject to the goods constraints
    sum_i u_i * demand[i][j] <= 1; the duals of those constraints are
    the prices.  The search runs projected gradient on the duals
    (whose gradient is exactly the excess demand) with backtracking,
    plus Newton refinement on the binding set through the exact linear
    solver.  Raises EgConvergenceError instead of returning a bad
    answer.
    """
    program = solve_reduced_program(instance, tolerance)
    n, m = instance.num_agents, instance.num_goods
    v = [[float(x) for x in row] for row in instance.demands]
    snap = max(tolerance * 100, 1e-7)
    utilities = [1.0 if abs(u - 1) <= snap else u for u in program.utilities]
    served = frozenset(i for i in range(n) if utilities[i] >= 1)

    # agents sitting exactly at utility 1 get their demand row verbatim
    # (exact rationals), so containment checks cannot lose to rounding
    allocation = [
        list(instance.demands[i])
        if utilities[i] == 1.0
        else [utilities[i] * v[i][j] if v[i][j] else 0.0 for j in range(m)]
        for i in range(n)
    ]
    loose = [i for i in range(n) if utilities[i] != 1.0]
    for j in range(m):
        if loose:
            residual = 1.0 - math.fsum(float(allocation[i][j]) for i in range(n))
            if residual > 0:
                allocation[loose[0]][j] += residual
        else:
            residual = 1 - sum(allocation[i][j] for i in range(n))
            if residual > 0:
                allocation[0][j] += residual
    return CaeiSolution(
        tuple(tuple(row) for row in allocation),
        program.duals,
        served,
        len(served),
        exact=False,
        provenance="solve_eg (numeric)",
    )


def solve_reduced_program(
    instance: DivisibleInstance, tolerance: float = 1e-9, max_iterations: int = 10**6
) -> EgProgram:
    n, m = instance.num_agents, instance.num_goods
    v = [[float(x) for x in row] for row in instance.demands]
    target = tolerance / 10

    def dual_value(lam):
        total = math.fsum(lam)
        for row in v:
            s = math.fsum(lam[j] * row[j] for j in range(m))
            if s <= 0:
                return math.inf
            total -= math.log(s)
        return total

    def excess_demand(lam):
        inverse_costs = []
        for row in v:
            s = math.fsum(lam[j] * row[j] for j in range(m))
            inverse_costs.append(1.0 / s)
        return [
            math.fsum(v[i][j] * inverse_costs[i] for i in range(n)) - 1.0
            for j in range(m)
        ], inverse_costs

    def residual_of(lam, excess):
        res = 0.0
        for j in range(m):
            res = max(res, excess[j], lam[j] * abs(excess[j]))
        return res

    lam = [float(n) / m] * m
    value = dual_value(lam)
    step = 1.0
    iterations = 0
    while iterations < max_iterations:
        iterations += 1
        excess, _ = excess_demand(lam)
        res = residual_of(lam, excess)
        if res < target:
            break
        if res < 1e-2:
            polished = _newton_polish(v, lam, target)
            if polished is not None:
                lam = polished
                break
        # projected gradient ascent on prices: raise over-demanded,
        # cut under-demanded, clip at zero, backtrack on the dual value
        moved = False
        while step > 1e-18:
            candidate = [max(0.0, lam[j] + step * excess[j]) for j in range(m)]
            drop = math.fsum((candidate[j] - lam[j]) ** 2 for j in range(m))
            cand_value = dual_value(candidate)
            if cand_value <= value - 1e-4 * drop / max(step, 1e-18):
                lam, value = candidate, cand_value
                step *= 1.5
                moved = True
                break
            step *= 0.5
        if not moved:
            polished = _newton_polish(v, lam, target)
            if polished is not None:
                lam = polished
                break
            raise EgConvergenceError(
                f"stalled at residual {res:.3e} after {iterations} iterations"
            )
    else:
        raise EgConvergenceError(
            f"no convergence within {max_iterations} iterations"
        )

    lam = [x if x > 1e-12 else 0.0 for x in lam]
    excess, inverse_costs = excess_demand(lam)
    res = residual_of(lam, excess)
    if not res < target * 10:
        raise EgConvergenceError(f"final residual {res:.3e} above tolerance")
    return EgProgram(
        tuple(inverse_costs),
        tuple(1.0 for _ in range(n)),
        tuple(lam),
        iterations,
        res,
    )


def _newton_polish(v, lam, target, rounds: int = 60):
    """Solve market clearing on the binding goods by Newton steps.

    The clearing system and its Jacobian are evaluated in floats but
    each step's linear system is solved exactly, which keeps the
    refinement deterministic.
    """
    n, m = len(v), len(lam)
    lam = list(lam)
    for _ in range(rounds):
        costs = [math.fsum(lam[j] * v[i][j] for j in range(m)) for i in range(n)]
        if any(c <= 0 for c in costs):
            return None
        excess = [
            math.fsum(v[i][j] / costs[i] for i in range(n)) - 1.0 for j in range(m)
        ]
        support = [j for j in range(m) if lam[j] > 1e-10 or excess[j] > 0]
        res = max(
            [abs(excess[j]) for j in support]
            + [max(excess[j], 0.0) for j in range(m)]
            + [0.0]
        )
        if res < target:
            return lam
        if not support:
            return lam
        jacobian = [
            [
                Fraction(
                    math.fsum(
                        -v[i][a] * v[i][b] / (costs[i] * costs[i]) for i in range(n)
                    )
                )
                for b in support
            ]
            for a in support
        ]
        rhs = [Fraction(-excess[j]) for j in support]
        delta = solve_linear_system(jacobian, rhs)
        if delta is None:
            return None
        scale = 1.0
        for k, j in enumerate(support):
            move = float(delta[k])
            if lam[j] + move < 0 and move < 0:
                scale = min(scale, -lam[j] / move * 0.9 if move else 1.0)
        for k, j in enumerate(support):
            lam[j] = max(0.0, lam[j] + scale * float(delta[k]))
    return None


# ---------------------------------------------------------------------------
# exact LP route


def subset_caei_lp(
    instance: DivisibleInstance,
    served,
    require_full_clearing: bool = True,
) -> CaeiSolution | None:
    """Exact supporting prices and allocation for a fixed served set.

    Builds the money-flow LP: prices p, per-agent-per-good spending m,
    and a slack eps by which every unserved agent's demand overshoots
    the budget.  Feasible with eps > 0 means the served set is exactly
    supportable; the allocation is spending divided by price.  A second
    solve at the optimal eps maximizes the total cost of the served
    demands, which pins the returned prices deterministically against
    the many vertices the slack stage usually has.
    """
    n, m = instance.num_agents, instance.num_goods
    served = frozenset(served)
    if any(i < 0 or i >= n for i in served):
        raise ValueError(f"served set {sorted(served)} out of range")
    v = instance.demands
    for j in range(m):
        if sum(v[i][j] for i in served) > 1:
            return None

    def build():
        lp = LinearProgram(sense="max")
        for j in range(m):
            lp.add_variable(f"p{j}")
        for i in range(n):
            for j in range(m):
                lp.add_variable(f"m{i}_{j}")
        lp.add_variable("eps", upper=1)
        for i in range(n):
            cost = {f"p{j}": v[i][j] for j in range(m) if v[i][j]}
            if i in served:
                lp.add_constraint(cost, LESS_EQUAL, 1)
                for j in range(m):
                    if v[i][j]:
                        lp.add_constraint(
                            {f"m{i}_{j}": 1, f"p{j}": -v[i][j]}, GREATER_EQUAL, 0
                        )
            else:
                lp.add_constraint({**cost, "eps": -1}, GREATER_EQUAL, 1)
        for j in range(m):
            spending = {f"m{i}_{j}": 1 for i in range(n)}
            relation = EQUAL if require_full_clearing else LESS_EQUAL
            lp.add_constraint({**spending, f"p{j}": -1}, relation, 0)
        for i in range(n):
            lp.add_constraint({f"m{i}_{j}": 1 for j in range(m)}, LESS_EQUAL, 1)
        return lp

    stage1 = build()
    stage1.set_objective({"eps": 1})
    out1 = simplex_solve(stage1)
    if out1.status != OPTIMAL or out1.objective_value <= 0:
        return None

    stage2 = build()
    stage2.add_constraint({"eps": 1}, EQUAL, out1.objective_value)
    stage2.set_objective(
        {
            f"p{j}": total
            for j in range(m)
            if (total := sum((v[i][j] for i in served), Fraction(0)))
        }
    )
    out2 = simplex_solve(stage2)
    assert out2.status == OPTIMAL, "stage 2 restricts a nonempty bounded region"

    prices = tuple(out2.assignment[f"p{j}"] for j in range(m))
    allocation = [[Fraction(0)] * m for _ in range(n)]
    for j in range(m):
        if prices[j] > 0:
            for i in range(n):
                allocation[i][j] = out2.assignment[f"m{i}_{j}"] / prices[j]
        else:
            for i in served:
                allocation[i][j] = v[i][j]
            if require_full_clearing:
                allocation[0][j] += 1 - sum(allocation[i][j] for i in range(n))

    solution = CaeiSolution(
        tuple(tuple(row) for row in allocation),
        prices,
        served,
        len(served),
        provenance="subset_caei_lp",
    )
    report = verify_caei(instance, solution, relaxed=not require_full_clearing)
    assert report.is_caei, f"subset LP produced an invalid outcome: {report.violations}"
    return solution


def max_welfare_caei(
    instance: DivisibleInstance,
    grouping: str = "by_types",
    require_full_clearing: bool = True,
) -> CaeiSolution | None:
    """Maximum-satisfaction competitive outcome by subset enumeration.

    ``grouping="by_types"`` keeps identical agents together (they are
    interchangeable: one served while its twin is priced out can never
    happen); ``"by_agents"`` enumerates raw agent subsets.  Candidate
    sets are tried from most agents to fewest, ties in lexicographic
    order, so the first supportable one is the answer.
    """
    if grouping == "by_types":
        units = [list(members) for members in group_types(instance).members]
    elif grouping == "by_agents":
        units = [[i] for i in range(instance.num_agents)]
    else:
        raise ValueError(f"unknown grouping {grouping!r}")

    candidates = []
    for mask in range(1 << len(units)):
        agents = sorted(
            i for k, unit in enumerate(units) if mask >> k & 1 for i in unit
        )
        candidates.append((-len(agents), tuple(agents)))
    candidates.sort()
    for _, agents in candidates:
        solution = subset_caei_lp(instance, agents, require_full_clearing)
        if solution is not None:
            return solution
    return None


# ---------------------------------------------------------------------------
# completion problems


def prices_for_allocation(instance: DivisibleInstance, allocation):
    """Supporting prices for a fixed partition of the goods, or None.

    Prices must let everyone afford what they hold while every agent
    whose bundle misses its demand is strictly priced out of it.
    """
    n, m = instance.num_agents, instance.num_goods
    if len(allocation) != n:
        raise ValueError(f"allocation covers {len(allocation)} of {n} agents")
    rows = tuple(tuple(as_fraction(x) for x in row) for row in allocation)
    for i, row in enumerate(rows):
        if len(row) != m:
            raise ValueError(f"agent {i} has {len(row)} of {m} quantities")
        if any(x < 0 for x in row):
            raise ValueError(f"agent {i} holds a negative quantity")
    for j in range(m):
        total = sum(row[j] for row in rows)
        if total != 1:
            raise ValueError(f"good {j} allocates {total}, not 1")

    served = compute_served(instance, rows)
    lp = LinearProgram(sense="max")
    for j in range(m):
        lp.add_variable(f"p{j}")
    lp.add_variable("eps", upper=1)
    lp.set_objective({"eps": 1})
    for i in range(n):
        held = {f"p{j}": rows[i][j] for j in range(m) if rows[i][j]}
        if held:
            lp.add_constraint(held, LESS_EQUAL, 1)
        if i not in served:
            cost = {f"p{j}": instance.demands[i][j] for j in range(m) if instance.demands[i][j]}
            lp.add_constraint({**cost, "eps": -1}, GREATER_EQUAL, 1)
    out = simplex_solve(lp)
    if out.status != OPTIMAL or out.objective_value <= 0:
        return None
    return tuple(out.assignment[f"p{j}"] for j in range(m))


def allocation_for_prices(instance: DivisibleInstance, prices):
    """A partition compatible with fixed prices, or None.

    Whoever can afford its demand at these prices must be satisfied;
    everyone must afford its own bundle; every good must be handed
    out fully.
    """
    m = instance.num_goods
    n = instance.num_agents
    prices = validate_price_vector(tuple(as_fraction(p) for p in prices), m)
    served = frozenset(
        i
        for i in range(n)
        if bundle_price(prices, instance.demands[i]) <= 1
    )
    lp = LinearProgram(sense="max")
    for i in range(n):
        for j in range(m):
            lp.add_variable(f"x{i}_{j}")
    lp.set_objective({})
    for i in range(n):
        spend = {f"x{i}_{j}": prices[j] for j in range(m) if prices[j]}
        if spend:
            lp.add_constraint(spend, LESS_EQUAL, 1)
        if i in served:
            for j in range(m):
                if instance.demands[i][j]:
                    lp.add_constraint(
                        {f"x{i}_{j}": 1}, GREATER_EQUAL, instance.demands[i][j]
                    )
    for j in range(m):
        lp.add_constraint({f"x{i}_{j}": 1 for i in range(n)}, EQUAL, 1)
    out = simplex_solve(lp)
    if out.status != OPTIMAL:
        return None
    return tuple(
        tuple(out.assignment[f"x{i}_{j}"] for j in range(m)) for i in range(n)
    )
