"""Instances, valuations and truthful demand queries.

Every amount is a :class:`fractions.Fraction`; nothing in the package touches
floating point on the money path.  A bundle is a sorted tuple of item indices,
which doubles as its canonical key: tuples compare lexicographically, so the
canonical bundle order is plain tuple order.
"""
from __future__ import annotations

import itertools
from math import comb
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence, Union

Money = Fraction
Bundle = tuple[int, ...]
Prices = tuple[Fraction, ...]

ZERO = Fraction(0)

# Cap on the number of subsets an additive demand query may enumerate.
MAX_ADDITIVE_CANDIDATES = 200_000


class InputError(ValueError):
    """Raised for malformed instances, bundles, or price vectors."""


def money(x: Union[int, str, Fraction]) -> Fraction:
    """Parse ``x`` into an exact amount.  Accepts ints, ``"num/den"`` strings and Fractions."""
    if isinstance(x, float):
        raise InputError(f"refusing float amount {x!r}; use an int, Fraction or 'num/den'")
    return Fraction(x)


def bundle(items: Iterable[int]) -> Bundle:
    """Canonical bundle from an iterable of item indices."""
    out = tuple(sorted(set(items)))
    if out and out[0] < 0:
        raise InputError(f"negative item index in {out}")
    return out


def check_bundle(s: Bundle, m: int) -> None:
    if any(j < 0 or j >= m for j in s):
        raise InputError(f"bundle {s} has items outside [0, {m})")


def disjoint(a: Bundle, b: Bundle) -> bool:
    return not set(a).intersection(b)


def pairwise_disjoint(bundles: Iterable[Bundle]) -> bool:
    seen: set[int] = set()
    for s in bundles:
        for j in s:
            if j in seen:
                return False
            seen.add(j)
    return True


def price_of(s: Bundle, prices: Sequence[Fraction]) -> Fraction:
    return sum((prices[j] for j in s), ZERO)


@dataclass(frozen=True)
class TieBreakRule:
    """Deterministic preference among equal-utility bundles.

    ``kind`` is one of ``lowest_index``, ``lowest_value``, ``highest_value`` or
    ``explicit``.  For ``explicit`` the bundles listed in ``priority`` come
    first, in order; everything else follows.  Canonical bundle order is the
    final fallback for every kind, so the induced order is always strict.
    """

    kind: str = "lowest_index"
    priority: tuple[Bundle, ...] = ()

    KINDS = ("lowest_index", "lowest_value", "highest_value", "explicit")

    def __post_init__(self) -> None:
        if self.kind not in self.KINDS:
            raise InputError(f"unknown tie-break rule {self.kind!r}")
        if self.priority and self.kind != "explicit":
            raise InputError("a priority list only applies to the explicit rule")

    def key(self, s: Bundle, value: Fraction) -> tuple:
        if self.kind == "lowest_value":
            return (value, s)
        if self.kind == "highest_value":
            return (-value, s)
        if self.kind == "explicit":
            try:
                rank = self.priority.index(s)
            except ValueError:
                rank = len(self.priority)
            return (rank, s)
        return (s,)


LOWEST_INDEX = TieBreakRule("lowest_index")
LOWEST_VALUE = TieBreakRule("lowest_value")
HIGHEST_VALUE = TieBreakRule("highest_value")


@dataclass(frozen=True)
class BundleEntry:
    """One XOR atom.  ``bid_at_zero`` overrides the valuation-wide flag for this entry."""

    bundle: Bundle
    value: Fraction
    bid_at_zero: bool | None = None


@dataclass(frozen=True)
class Valuation:
    """Common fields.  Use one of the three concrete subclasses."""

    tie_break: TieBreakRule = field(default=LOWEST_INDEX, kw_only=True)
    bid_at_zero_utility: bool = field(default=False, kw_only=True)

    kind = "abstract"

    def value(self, s: Bundle) -> Fraction:
        raise NotImplementedError

    def candidates(self, prices: Sequence[Fraction]) -> Iterator[tuple[Bundle, Fraction, bool]]:
        """Yield ``(bundle, value, may_bid_at_zero)`` for every bundle that can be demanded."""
        raise NotImplementedError

    def items(self) -> set[int]:
        """Items that appear anywhere in the valuation's support."""
        raise NotImplementedError

    def values(self) -> list[Fraction]:
        raise NotImplementedError


@dataclass(frozen=True)
class UnitDemand(Valuation):
    """``v(S) = max_{j in S} v_j``.  Bids are restricted to singletons."""

    item_values: Mapping[int, Fraction] = field(default_factory=dict)

    kind = "unit"

    def value(self, s: Bundle) -> Fraction:
        return max((self.item_values.get(j, ZERO) for j in s), default=ZERO)

    def candidates(self, prices):
        for j, v in self.item_values.items():
            if v > 0:
                yield (j,), v, self.bid_at_zero_utility

    def items(self):
        return set(self.item_values)

    def values(self):
        return list(self.item_values.values())


@dataclass(frozen=True)
class Additive(Valuation):
    """Sum of the ``demand_cap`` highest item values in S (uncapped when ``None``)."""

    item_values: Mapping[int, Fraction] = field(default_factory=dict)
    demand_cap: int | None = None

    kind = "additive"

    def value(self, s: Bundle) -> Fraction:
        vals = sorted((self.item_values.get(j, ZERO) for j in s), reverse=True)
        if self.demand_cap is not None:
            vals = vals[: self.demand_cap]
        return sum(vals, ZERO)

    def candidates(self, prices):
        # An optimal bundle holds at most cap items, each worth at least its price.
        useful = sorted(j for j, v in self.item_values.items() if v > 0 and v >= prices[j])
        cap = len(useful) if self.demand_cap is None else min(self.demand_cap, len(useful))
        total = sum(comb(len(useful), r) for r in range(1, cap + 1))
        if total > MAX_ADDITIVE_CANDIDATES:
            raise InputError(f"additive demand query would enumerate {total} bundles")
        for r in range(1, cap + 1):
            for s in itertools.combinations(useful, r):
                yield s, sum((self.item_values[j] for j in s), ZERO), self.bid_at_zero_utility

    def items(self):
        return set(self.item_values)

    def values(self):
        return list(self.item_values.values())


@dataclass(frozen=True)
class BundleList(Valuation):
    """XOR bids: ``v(S)`` is the best entry whose bundle is contained in S."""

    entries: tuple[BundleEntry, ...] = ()

    kind = "xor"

    def value(self, s: Bundle) -> Fraction:
        have = set(s)
        return max((e.value for e in self.entries if have.issuperset(e.bundle)), default=ZERO)

    def candidates(self, prices):
        seen: set[Bundle] = set()
        for e in self.entries:
            if e.value <= 0 or e.bundle in seen:
                continue
            seen.add(e.bundle)
            zero_ok = self.bid_at_zero_utility if e.bid_at_zero is None else e.bid_at_zero
            # A contained entry may be worth more than this one.
            yield e.bundle, self.value(e.bundle), zero_ok

    def items(self):
        return {j for e in self.entries for j in e.bundle}

    def values(self):
        return [e.value for e in self.entries]


@dataclass(frozen=True)
class Bid:
    """A package bid: ``bundle`` at total ``price`` (the bundle's clock price in ``round``)."""

    bidder: int
    bundle: Bundle
    price: Fraction
    round: int = 0


@dataclass(frozen=True)
class Instance:
    m: int
    valuations: tuple[Valuation, ...]
    cap: int = 1
    scale_w: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "valuations", tuple(self.valuations))
        if self.m < 1 or not self.valuations:
            raise InputError("need at least one item and one bidder")
        if not 1 <= self.cap <= self.m:
            raise InputError(f"cap {self.cap} outside [1, {self.m}]")
        for i, val in enumerate(self.valuations):
            if any(j < 0 or j >= self.m for j in val.items()):
                raise InputError(f"bidder {i} values items outside [0, {self.m})")
            if any(v < 0 for v in val.values()):
                raise InputError(f"bidder {i} has a negative value")
            if isinstance(val, BundleList) and any(len(e.bundle) > self.cap for e in val.entries):
                raise InputError(f"bidder {i} has an entry larger than cap {self.cap}")
            if self.scale_w is not None and any(v % self.scale_w for v in val.values()):
                raise InputError(f"bidder {i} has a value that is not a multiple of W={self.scale_w}")

    @property
    def n(self) -> int:
        return len(self.valuations)

    def zero_prices(self) -> Prices:
        return (ZERO,) * self.m

    def max_value(self) -> Fraction:
        return max((max(v.values(), default=ZERO) for v in self.valuations), default=ZERO)


def value_of(val: Valuation, s: Bundle, m: int | None = None) -> Fraction:
    if m is not None:
        check_bundle(s, m)
    elif any(j < 0 for j in s):
        raise InputError(f"negative item index in {s}")
    return val.value(s)


def utility(val: Valuation, s: Bundle, prices: Sequence[Fraction]) -> Fraction:
    check_bundle(s, len(prices))
    if any(p < 0 for p in prices):
        raise InputError("prices must be non-negative")
    return val.value(s) - price_of(s, prices)


def demand_query(val: Valuation, prices: Sequence[Fraction]) -> Bundle | None:
    """Truthful bid at ``prices``, or ``None`` when the bidder drops out.

    The search runs over the valuation's support: singletons for unit demand,
    entry bundles for XOR lists, and cap-bounded subsets of items worth their
    price for additive values.  Zero utility counts as a bid only where the
    bundle (or the whole valuation) allows it.
    """
    best_u: Fraction | None = None
    pool: list[tuple[Bundle, Fraction, bool]] = []
    for s, v, zero_ok in val.candidates(prices):
        u = v - price_of(s, prices)
        if best_u is None or u > best_u:
            best_u, pool = u, [(s, v, zero_ok)]
        elif u == best_u:
            pool.append((s, v, zero_ok))
    if best_u is None or best_u < 0:
        return None
    if best_u == 0:
        pool = [c for c in pool if c[2]]
        if not pool:
            return None
    s, _, _ = min(pool, key=lambda c: val.tie_break.key(c[0], c[1]))
    return s


def max_utility(val: Valuation, prices: Sequence[Fraction]) -> Fraction:
    """``max_S v(S) - p(S)`` over the support, floored at 0 by the empty bundle."""
    best = ZERO
    for s, v, _ in val.candidates(prices):
        best = max(best, v - price_of(s, prices))
    return best


def brute_force_max_utility(
    val: Valuation, prices: Sequence[Fraction], max_size: int | None = None, items: Iterable[int] | None = None
) -> Fraction:
    """Maximum utility over every bundle of at most ``max_size`` items drawn from ``items`` (default: all).

    Passing ``items=val.items()`` loses nothing: values ignore items outside
    the support and prices are non-negative.
    """
    pool = sorted(range(len(prices)) if items is None else set(items))
    top = len(pool) if max_size is None else min(max_size, len(pool))
    best = ZERO
    for r in range(1, top + 1):
        for s in itertools.combinations(pool, r):
            best = max(best, val.value(s) - price_of(s, prices))
    return best
