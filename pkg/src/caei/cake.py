"""Cake cutting with single-minded agents.

The cake [0,1] is priced by a piecewise-constant density curve.  Four
routes produce competitive outcomes:

* ``solve_existence`` discretizes the cake at demand midpoints and
  runs the discrete-goods pricing algorithm on the resulting cells.
  Always succeeds, but makes no welfare promise.

* ``greedy_contiguous`` handles single-interval demands through the
  earliest-finish-time schedule, pricing each scheduled interval with
  a cheap prefix and an expensive suffix so that every budget closes
  at exactly 1.  The pricing certificate is re-verified and falls
  back to the exact LP search if the construction misses.

* ``max_welfare_fixed_agents`` enumerates served sets over a refined
  cell partition and lets the exact subset LP decide supportability.
  Exponential in the number of agents, exact in everything else.

* completion: ``price_curve_for_allocation`` / ``allocation_for_price_curve``
  recover the missing half of an outcome through the divisible-goods
  reductions on the induced cell partition.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction

from .discrete import solve_caei
from .divisible import allocation_for_prices, prices_for_allocation, subset_caei_lp
from .model import (
    CaeiSolution,
    CakeInstance,
    DiscreteInstance,
    DivisibleInstance,
    PriceCurve,
    canonicalize_piece,
    piece_contains,
    piece_intersection,
    piece_difference,
    piece_length,
)
from .verify import verify_caei


@dataclass(frozen=True)
class Partition:
    """Sorted breakpoints 0 = q_0 < ... < q_K = 1 delimiting cake cells."""

    breakpoints: tuple[Fraction, ...]

    def __post_init__(self):
        b = self.breakpoints
        if len(b) < 2 or b[0] != 0 or b[-1] != 1:
            raise ValueError("breakpoints must span [0, 1]")
        if any(x >= y for x, y in zip(b, b[1:])):
            raise ValueError("breakpoints must be strictly increasing")

    @property
    def cells(self) -> tuple[tuple[Fraction, Fraction], ...]:
        b = self.breakpoints
        return tuple((b[k], b[k + 1]) for k in range(len(b) - 1))


@dataclass(frozen=True)
class ScheduledJob:
    """One agent's interval in the greedy schedule, 1-based order."""

    agent: int
    start: Fraction
    finish: Fraction
    order: int


def refine_partition(
    instance: CakeInstance, extra_points=(), split_rule: str = "none"
) -> Partition:
    """Cut points induced by the demands, optionally refined.

    ``midpoints`` adds the midpoint of every demanded interval (each
    demand then spans at least two cells); ``per_demander_count``
    splits each induced cell into as many equal cells as it has
    demanders; ``none`` keeps the raw endpoints.
    """
    points = {Fraction(0), Fraction(1)}
    for extra in extra_points:
        extra = Fraction(extra)
        if not 0 <= extra <= 1:
            raise ValueError(f"extra point {extra} outside the cake")
        points.add(extra)
    for piece in instance.demands:
        for lo, hi in piece:
            points.update((lo, hi))
            if split_rule == "midpoints":
                points.add((lo + hi) / 2)
    if split_rule == "per_demander_count":
        base = sorted(points)
        for lo, hi in zip(base, base[1:]):
            demanders = sum(
                1 for piece in instance.demands if piece_contains(piece, ((lo, hi),))
            )
            for t in range(1, demanders):
                points.add(lo + (hi - lo) * t / demanders)
    elif split_rule not in ("midpoints", "none"):
        raise ValueError(f"unknown split rule {split_rule!r}")
    return Partition(tuple(sorted(points)))


def _cell_goods(instance: CakeInstance, partition: Partition) -> DivisibleInstance:
    # each cell becomes a divisible good wanted fully or not at all
    cells = partition.cells
    rows = tuple(
        tuple(
            Fraction(1) if piece_contains(piece, (cell,)) else Fraction(0)
            for cell in cells
        )
        for piece in instance.demands
    )
    return DivisibleInstance(rows)


def _carve_cells(cells, shares):
    """Left-to-right sub-intervals of each cell, in agent-index order."""
    n = len(shares)
    pieces = [[] for _ in range(n)]
    for k, (lo, hi) in enumerate(cells):
        cursor = lo
        for i in range(n):
            width = shares[i][k] * (hi - lo)
            if width > 0:
                pieces[i].append((cursor, cursor + width))
                cursor += width
        assert cursor <= hi, "cell shares exceed the cell"
    return tuple(canonicalize_piece(tuple(p)) for p in pieces)


def _cell_curve(partition: Partition, cell_prices) -> PriceCurve:
    densities = tuple(
        price / (hi - lo)
        for price, (lo, hi) in zip(cell_prices, partition.cells)
    )
    return PriceCurve(partition.breakpoints, densities)


def solve_existence(instance: CakeInstance) -> CaeiSolution:
    """A competitive outcome for any demand structure.

    Splitting every demanded interval at its midpoint leaves no agent
    demanding a single cell, which is exactly the regime where the
    discrete pricing algorithm always succeeds on unit-quantity cells.
    Cell prices spread uniformly over their interval; undemanded cells
    are free and go to agent 0.
    """
    partition = refine_partition(instance, (), "midpoints")
    cells = partition.cells
    wanted = [
        [piece_contains(piece, (cell,)) for cell in cells]
        for piece in instance.demands
    ]
    items = [k for k in range(len(cells)) if any(row[k] for row in wanted)]
    reduced = DiscreteInstance(
        (1,) * len(items),
        tuple(
            frozenset(t for t, k in enumerate(items) if row[k])
            for row in wanted
        ),
    )
    inner = solve_caei(reduced)
    assert inner is not None, "midpoint split leaves no singleton demands"

    n = instance.num_agents
    pieces = [[] for _ in range(n)]
    prices = [Fraction(0)] * len(cells)
    for t, k in enumerate(items):
        prices[k] = inner.prices[t]
        owner = next(i for i in range(n) if inner.allocation[i][t])
        pieces[owner].append(cells[k])
    for k in range(len(cells)):
        if k not in items:
            pieces[0].append(cells[k])

    solution = CaeiSolution(
        tuple(canonicalize_piece(tuple(p)) for p in pieces),
        _cell_curve(partition, prices),
        inner.served,
        inner.welfare,
        provenance="solve_existence",
    )
    report = verify_caei(instance, solution)
    assert report.is_caei, f"existence construction broke: {report.violations}"
    return solution


def greedy_contiguous(instance: CakeInstance) -> CaeiSolution:
    """Welfare-maximizing outcome for single-interval demands.

    Earliest finish first, ties to the latest start; a tie among
    identical (start, finish) agents retires the whole group onto
    equal shares of a tiny interval priced at 1 per member.  The k-th
    scheduled agent pays k*eps for a prefix sliver and 1 - k*eps for a
    suffix sliver of its interval.  Unserved distinct agents with
    unallocated demand get a sliver priced at 1.  The certificate is
    checked exactly; if the sliver geometry fails to price someone
    out, the exact subset search takes over and the provenance says
    so.
    """
    if not instance.is_contiguous():
        raise ValueError("greedy scheduling needs single-interval demands")
    n = instance.num_agents
    spans = [piece[0] for piece in instance.demands]
    base = refine_partition(instance, (), "none")
    shortest = min(hi - lo for lo, hi in base.cells)
    delta = shortest / 4
    eps = Fraction(1, 2 * n + 2)

    active = set(range(n))
    winners: list[int] = []
    groups: list[tuple[int, ...]] = []
    while active:
        finish = min(spans[i][1] for i in active)
        start = max(spans[i][0] for i in active if spans[i][1] == finish)
        front = sorted(i for i in active if spans[i] == (start, finish))
        if len(front) >= 2:
            groups.append(tuple(front))
            active -= set(front)
            continue
        winner = front[0]
        winners.append(winner)
        active -= {
            i
            for i in active
            if max(spans[i][0], start) < min(spans[i][1], finish)
        }

    pieces = [[] for _ in range(n)]
    regions = []
    remaining = ((Fraction(0), Fraction(1)),)

    def sliver_at(point, run_end):
        next_bp = min(b for b in base.breakpoints if b > point)
        return min(delta, run_end - point, next_bp - point)

    feasible = True
    for order, w in enumerate(winners, start=1):
        s, f = spans[w]
        pieces[w].append((s, f))
        regions.append((s, s + delta, order * eps))
        regions.append((s + delta, f - delta, Fraction(0)))
        regions.append((f - delta, f, 1 - order * eps))
        remaining = piece_difference(remaining, ((s, f),))
    for members in groups:
        if not remaining:
            feasible = False
            break
        lo, run_end = remaining[0]
        width = sliver_at(lo, run_end)
        share = width / len(members)
        for t, agent in enumerate(members):
            cut = (lo + t * share, lo + (t + 1) * share)
            pieces[agent].append(cut)
            regions.append((*cut, Fraction(1)))
        remaining = piece_difference(remaining, ((lo, lo + width),))
    if feasible:
        retired = set(winners)
        for members in groups:
            retired |= set(members)
        for i in sorted(set(range(n)) - retired):
            available = piece_intersection(instance.demands[i], remaining)
            if not available:
                continue
            lo, run_end = available[0]
            width = sliver_at(lo, run_end)
            pieces[i].append((lo, lo + width))
            regions.append((lo, lo + width, Fraction(1)))
            remaining = piece_difference(remaining, ((lo, lo + width),))
        for lo, hi in remaining:
            pieces[0].append((lo, hi))
            regions.append((lo, hi, Fraction(0)))

        regions.sort()
        assert regions[0][0] == 0 and regions[-1][1] == 1
        assert all(a[1] == b[0] for a, b in zip(regions, regions[1:]))
        breakpoints = (Fraction(0),) + tuple(hi for _, hi, _ in regions)
        densities = tuple(price / (hi - lo) for lo, hi, price in regions)
        solution = CaeiSolution(
            tuple(canonicalize_piece(tuple(p)) for p in pieces),
            PriceCurve(breakpoints, densities),
            frozenset(winners),
            len(winners),
            provenance="greedy_contiguous",
            trace=tuple(
                ScheduledJob(w, spans[w][0], spans[w][1], k)
                for k, w in enumerate(winners, start=1)
            ),
        )
        if verify_caei(instance, solution).is_caei:
            return solution

    fallback = max_welfare_fixed_agents(instance)
    return replace(fallback, provenance="greedy_contiguous (lp fallback)")


def max_welfare_fixed_agents(instance: CakeInstance) -> CaeiSolution:
    """Exact maximum-satisfaction outcome by served-set enumeration.

    Cells of the demander-count refinement act as divisible goods; a
    served set is supportable iff the money-flow LP on those goods is.
    Subsets run from largest to smallest, ties lexicographic, so the
    first hit is optimal.  Exponential in agents by design.
    """
    n = instance.num_agents
    partition = refine_partition(instance, (), "per_demander_count")
    goods = _cell_goods(instance, partition)

    candidates = []
    for mask in range(1 << n):
        agents = tuple(i for i in range(n) if mask >> i & 1)
        candidates.append((-len(agents), agents))
    candidates.sort()
    for _, agents in candidates:
        inner = subset_caei_lp(goods, agents)
        if inner is None:
            continue
        solution = CaeiSolution(
            _carve_cells(partition.cells, inner.allocation),
            _cell_curve(partition, inner.prices),
            inner.served,
            inner.welfare,
            provenance="max_welfare_fixed_agents",
        )
        report = verify_caei(instance, solution)
        assert report.is_caei, f"cell LP mapped badly: {report.violations}"
        return solution
    raise AssertionError("some served set is always supportable on cake")


def price_curve_for_allocation(instance: CakeInstance, allocation):
    """A supporting price curve for a fixed partition of the cake.

    None when every curve either overcharges an owner or leaves an
    unserved agent able to afford its demand.
    """
    if len(allocation) != instance.num_agents:
        raise ValueError(
            f"allocation covers {len(allocation)} of {instance.num_agents} agents"
        )
    pieces = tuple(canonicalize_piece(tuple(piece)) for piece in allocation)
    endpoints = [point for piece in pieces for pair in piece for point in pair]
    partition = refine_partition(instance, endpoints, "none")
    cells = partition.cells
    shares = tuple(
        tuple(
            piece_length(piece_intersection(piece, (cell,))) / (cell[1] - cell[0])
            for cell in cells
        )
        for piece in pieces
    )
    prices = prices_for_allocation(_cell_goods(instance, partition), shares)
    if prices is None:
        return None
    return _cell_curve(partition, prices)


def allocation_for_price_curve(instance: CakeInstance, curve: PriceCurve):
    """A partition of the cake compatible with fixed prices, or None."""
    partition = refine_partition(instance, curve.breakpoints, "none")
    cell_prices = [curve.piece_price((cell,)) for cell in partition.cells]
    shares = allocation_for_prices(_cell_goods(instance, partition), cell_prices)
    if shares is None:
        return None
    return _carve_cells(partition.cells, shares)
