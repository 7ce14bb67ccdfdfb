"""Shared data model: instances, bundles, price systems, solutions.

Three resource models share one story.  Agents are single-minded:
agent i is satisfied (utility 1) exactly when its bundle contains its
demand, and gets utility 0 otherwise.  Everyone has the same unit
budget, so a price system decides who can afford what.

Conventions: agents and items are 0-indexed everywhere; the cake is
the interval [0, 1]; all exact quantities are `fractions.Fraction`
(the numeric EG path hands back floats and is flagged inexact).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .exactmath import as_fraction

ZERO = Fraction(0)
ONE = Fraction(1)

# ---------------------------------------------------------------------------
# pieces of cake

Interval = tuple[Fraction, Fraction]
Piece = tuple[Interval, ...]


def canonicalize_piece(intervals) -> Piece:
    """Sort, merge and validate a list of intervals into a canonical piece.

    Overlapping or touching intervals are merged, zero-length ones are
    dropped, and the result is a tuple of disjoint intervals in
    increasing order inside [0, 1].
    """
    cleaned = []
    for lo, hi in intervals:
        lo = as_fraction(lo)
        hi = as_fraction(hi)
        if lo > hi:
            raise ValueError(f"interval [{lo}, {hi}] has negative length")
        if not (0 <= lo and hi <= 1):
            raise ValueError(f"interval [{lo}, {hi}] leaves the cake [0, 1]")
        if lo < hi:
            cleaned.append((lo, hi))
    cleaned.sort()
    merged: list[list[Fraction]] = []
    for lo, hi in cleaned:
        if merged and lo <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], hi)
        else:
            merged.append([lo, hi])
    return tuple((lo, hi) for lo, hi in merged)


def piece_length(piece: Piece) -> Fraction:
    return sum((hi - lo for lo, hi in piece), ZERO)


def piece_intersection(a: Piece, b: Piece) -> Piece:
    out = []
    for lo1, hi1 in a:
        for lo2, hi2 in b:
            lo, hi = max(lo1, lo2), min(hi1, hi2)
            if lo < hi:
                out.append((lo, hi))
    return canonicalize_piece(out)


def piece_difference(a: Piece, b: Piece) -> Piece:
    """The part of `a` not covered by `b`."""
    out = []
    for lo, hi in a:
        segments = [(lo, hi)]
        for blo, bhi in b:
            next_segments = []
            for slo, shi in segments:
                if bhi <= slo or blo >= shi:
                    next_segments.append((slo, shi))
                    continue
                if slo < blo:
                    next_segments.append((slo, blo))
                if bhi < shi:
                    next_segments.append((bhi, shi))
            segments = next_segments
        out.extend(segments)
    return canonicalize_piece(out)


def piece_union(a: Piece, b: Piece) -> Piece:
    return canonicalize_piece(list(a) + list(b))


def piece_contains(outer: Piece, inner: Piece) -> bool:
    """Containment up to measure zero (shared endpoints don't matter)."""
    return piece_length(piece_intersection(outer, inner)) == piece_length(inner)


# ---------------------------------------------------------------------------
# instances


@dataclass(frozen=True)
class DivisibleInstance:
    """n agents, m divisible goods, one unit of each on offer.

    ``demands[i][j]`` is the fraction of good j that agent i needs;
    the agent is satisfied only by a bundle carrying at least that
    much of every good.
    """

    demands: tuple[tuple[Fraction, ...], ...]

    def __init__(self, demands):
        rows = tuple(tuple(as_fraction(v) for v in row) for row in demands)
        if not rows:
            raise ValueError("instance needs at least one agent")
        width = len(rows[0])
        for i, row in enumerate(rows):
            if len(row) != width:
                raise ValueError("all demand rows must have the same number of goods")
            if not row or all(v == 0 for v in row):
                raise ValueError(f"agent {i} demands nothing")
            for j, v in enumerate(row):
                if not (0 <= v <= 1):
                    raise ValueError(f"demand[{i}][{j}] = {v} outside [0, 1]")
        object.__setattr__(self, "demands", rows)

    @property
    def num_agents(self) -> int:
        return len(self.demands)

    @property
    def num_goods(self) -> int:
        return len(self.demands[0])


@dataclass(frozen=True)
class CakeInstance:
    """n agents demanding pieces of the cake [0, 1]."""

    demands: tuple[Piece, ...]

    def __init__(self, demands):
        pieces = []
        for i, raw in enumerate(demands):
            piece = canonicalize_piece(raw)
            if not piece:
                raise ValueError(f"agent {i} demands a null piece")
            pieces.append(piece)
        if not pieces:
            raise ValueError("instance needs at least one agent")
        object.__setattr__(self, "demands", tuple(pieces))

    @property
    def num_agents(self) -> int:
        return len(self.demands)

    def is_contiguous(self) -> bool:
        return all(len(piece) == 1 for piece in self.demands)


@dataclass(frozen=True)
class DiscreteInstance:
    """n agents, m item types with ``quantities[j]`` identical copies each."""

    quantities: tuple[int, ...]
    demands: tuple[frozenset[int], ...]

    def __init__(self, quantities, demands):
        qs = tuple(int(q) for q in quantities)
        if not qs:
            raise ValueError("instance needs at least one item type")
        if any(q < 1 for q in qs):
            raise ValueError("every item type needs at least one copy")
        sets = []
        for i, d in enumerate(demands):
            items = frozenset(int(j) for j in d)
            if not items:
                raise ValueError(f"agent {i} demands no items")
            if any(j < 0 or j >= len(qs) for j in items):
                raise ValueError(f"agent {i} demands an unknown item")
            sets.append(items)
        if not sets:
            raise ValueError("instance needs at least one agent")
        undemanded = set(range(len(qs))) - set().union(*sets)
        if undemanded:
            raise ValueError(f"items {sorted(undemanded)} are demanded by no agent")
        object.__setattr__(self, "quantities", qs)
        object.__setattr__(self, "demands", tuple(sets))

    @property
    def num_agents(self) -> int:
        return len(self.demands)

    @property
    def num_items(self) -> int:
        return len(self.quantities)


Instance = DivisibleInstance | CakeInstance | DiscreteInstance

# ---------------------------------------------------------------------------
# price systems


@dataclass(frozen=True)
class PriceCurve:
    """Piecewise-constant price density on the cake.

    ``breakpoints`` runs from 0 to 1; cell k spans
    [breakpoints[k], breakpoints[k+1]] and costs
    ``densities[k]`` per unit of length.
    """

    breakpoints: tuple[Fraction, ...]
    densities: tuple[Fraction, ...]

    def __init__(self, breakpoints, densities):
        bps = tuple(as_fraction(b) for b in breakpoints)
        dens = tuple(as_fraction(d) for d in densities)
        if len(bps) < 2 or bps[0] != 0 or bps[-1] != 1:
            raise ValueError("breakpoints must run from 0 to 1")
        if any(a >= b for a, b in zip(bps, bps[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        if len(dens) != len(bps) - 1:
            raise ValueError("need one density per cell")
        if any(d < 0 for d in dens):
            raise ValueError("negative price density")
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "densities", dens)

    def piece_price(self, piece: Piece):
        total = ZERO
        for k, density in enumerate(self.densities):
            if density:
                lo, hi = self.breakpoints[k], self.breakpoints[k + 1]
                overlap = piece_intersection(piece, ((lo, hi),))
                total += density * piece_length(overlap)
        return total


def validate_price_vector(prices, length: int) -> tuple:
    prices = tuple(prices)
    if len(prices) != length:
        raise ValueError(f"expected {length} prices, got {len(prices)}")
    if any(p < 0 for p in prices):
        raise ValueError("negative price")
    return prices


# ---------------------------------------------------------------------------
# bundles, utilities, prices


def single_minded_utility(instance: Instance, agent: int, bundle) -> int:
    """1 if the bundle contains the agent's demand, else 0."""
    if isinstance(instance, DivisibleInstance):
        demand = instance.demands[agent]
        if len(bundle) != instance.num_goods:
            raise ValueError("bundle has the wrong number of goods")
        return int(all(x >= d for x, d in zip(bundle, demand)))
    if isinstance(instance, CakeInstance):
        return int(piece_contains(bundle, instance.demands[agent]))
    if isinstance(instance, DiscreteInstance):
        if len(bundle) != instance.num_items:
            raise ValueError("bundle has the wrong number of item types")
        return int(all(bundle[j] >= 1 for j in instance.demands[agent]))
    raise TypeError(f"unknown instance type {type(instance).__name__}")


def bundle_price(prices, bundle):
    """Price of a bundle under a price vector or price curve.

    For divisible goods the bundle is a quantity vector and prices are
    per unit; for discrete items the bundle is a copy-count vector and
    prices are per copy; for cake the bundle is a piece.
    """
    if isinstance(prices, PriceCurve):
        return prices.piece_price(bundle)
    if len(bundle) != len(prices):
        raise ValueError("bundle and price vector differ in length")
    return sum((p * x for p, x in zip(prices, bundle)), ZERO)


def demand_bundle(instance: Instance, agent: int):
    """The agent's demand in bundle form (for pricing queries)."""
    if isinstance(instance, DivisibleInstance):
        return instance.demands[agent]
    if isinstance(instance, CakeInstance):
        return instance.demands[agent]
    if isinstance(instance, DiscreteInstance):
        return tuple(
            1 if j in instance.demands[agent] else 0 for j in range(instance.num_items)
        )
    raise TypeError(f"unknown instance type {type(instance).__name__}")


# ---------------------------------------------------------------------------
# agent types


@dataclass(frozen=True)
class TypePartition:
    """Agents grouped by identical demands, in order of first appearance."""

    type_of: tuple[int, ...]
    members: tuple[tuple[int, ...], ...]

    @property
    def num_types(self) -> int:
        return len(self.members)


def group_types(instance: Instance) -> TypePartition:
    seen: dict = {}
    type_of = []
    members: list[list[int]] = []
    for i in range(instance.num_agents):
        key = instance.demands[i]
        if key not in seen:
            seen[key] = len(members)
            members.append([])
        t = seen[key]
        type_of.append(t)
        members[t].append(i)
    return TypePartition(tuple(type_of), tuple(tuple(g) for g in members))


# ---------------------------------------------------------------------------
# solutions


@dataclass(frozen=True)
class CaeiSolution:
    """A priced allocation: who got what, at what prices, who is satisfied.

    ``allocation`` is model-specific: a quantity matrix (divisible), a
    tuple of pieces (cake), or a copy-count matrix (discrete).
    ``exact`` is False only for the numeric EG path, whose output is
    validated to a tolerance rather than exactly.  ``provenance`` names
    the code path that produced the solution; discrete solves attach
    their round-by-round ``trace``.
    """

    allocation: tuple
    prices: tuple | PriceCurve
    served: frozenset[int]
    welfare: int
    exact: bool = True
    provenance: str = ""
    trace: tuple = ()

    def __post_init__(self):
        if self.welfare != len(self.served):
            raise ValueError("welfare must equal the number of served agents")


def compute_served(instance: Instance, allocation) -> frozenset[int]:
    return frozenset(
        i
        for i in range(instance.num_agents)
        if single_minded_utility(instance, i, allocation[i]) == 1
    )
