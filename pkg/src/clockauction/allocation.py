"""Winner determination, optimal welfare, and the greedy allocation proxies."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import networkx as nx

from .model import ZERO, Additive, Bid, Bundle, InputError, Instance, UnitDemand, Valuation

DEFAULT_NODE_BUDGET = 2_000_000


@dataclass(frozen=True)
class Assignment:
    bundle: Bundle
    payment: Fraction
    round: int | None = None


@dataclass
class Allocation:
    """Disjoint bidder -> bundle assignment with per-bidder payments."""

    assignments: dict[int, Assignment] = field(default_factory=dict)

    def __post_init__(self) -> None:
        used: set[int] = set()
        for i, a in self.assignments.items():
            if used.intersection(a.bundle):
                raise InputError(f"bidder {i}'s bundle {a.bundle} overlaps another assignment")
            used.update(a.bundle)

    @classmethod
    def from_bids(cls, bids: Iterable[Bid]) -> "Allocation":
        out: dict[int, Assignment] = {}
        for b in bids:
            if b.bidder in out:
                raise InputError(f"bidder {b.bidder} accepted twice")
            out[b.bidder] = Assignment(b.bundle, b.price, b.round)
        return cls(dict(sorted(out.items())))

    @property
    def revenue(self) -> Fraction:
        return sum((a.payment for a in self.assignments.values()), ZERO)

    def welfare(self, instance: Instance) -> Fraction:
        return sum(
            (instance.valuations[i].value(a.bundle) for i, a in self.assignments.items()),
            ZERO,
        )

    def bidder_values(self, instance: Instance) -> dict[int, Fraction]:
        return {i: instance.valuations[i].value(a.bundle) for i, a in self.assignments.items()}

    def winners(self) -> list[int]:
        return sorted(self.assignments)

    def __len__(self) -> int:
        return len(self.assignments)


@dataclass
class OptResult:
    opt_value: Fraction
    allocation: Allocation
    values: dict[int, Fraction] = field(default_factory=dict)
    exact: bool = True
    nodes: int = 0


class OptUnknown(RuntimeError):
    """The exact search hit its node budget; ``lower_bound`` is the best allocation found."""

    def __init__(self, lower_bound: Fraction, nodes: int):
        super().__init__(f"node budget exhausted after {nodes} nodes; OPT >= {lower_bound}")
        self.lower_bound = lower_bound
        self.nodes = nodes


def dominant_bids(bids: Iterable[Bid]) -> list[Bid]:
    """Keep the highest-priced bid per (bidder, bundle); the earliest one on ties."""
    best: dict[tuple[int, Bundle], Bid] = {}
    for b in bids:
        key = (b.bidder, b.bundle)
        cur = best.get(key)
        if cur is None or b.price > cur.price:
            best[key] = b
    return list(best.values())


def _search_order(bids: Sequence[Bid]) -> list[Bid]:
    # Price density first; original position breaks ties.
    indexed = list(enumerate(bids))
    indexed.sort(key=lambda ib: (-_density(ib[1].price, ib[1].bundle), ib[0]))
    return [b for _, b in indexed]


def _density(value: Fraction, s: Bundle) -> Fraction:
    return value / len(s) if s else value


def winner_determination(bids: Iterable[Bid]) -> Allocation:
    """Revenue-maximising selection of at most one bid per bidder with disjoint bundles.

    Exact depth-first branch and bound over the dominance-filtered bids in
    price-density order.  Children are tried include-first, so among
    revenue-optimal selections the result is the first one in that order; in
    particular no compatible zero-price bid is ever left out.
    """
    order = _search_order(dominant_bids(bids))
    n_bids = len(order)
    best_value = Fraction(-1)
    best_set: tuple[int, ...] = ()

    def bound(pos: int, used_bidders: set[int], used_items: set[int]) -> Fraction:
        per_bidder: dict[int, Fraction] = {}
        per_item: dict[int, Fraction] = {}
        for q in range(pos, n_bids):
            b = order[q]
            if b.bidder in used_bidders or used_items.intersection(b.bundle):
                continue
            if b.price > per_bidder.get(b.bidder, ZERO):
                per_bidder[b.bidder] = b.price
            d = _density(b.price, b.bundle)
            for j in b.bundle:
                if d > per_item.get(j, ZERO):
                    per_item[j] = d
        return min(sum(per_bidder.values(), ZERO), sum(per_item.values(), ZERO))

    def visit(pos: int, chosen: list[int], value: Fraction, used_bidders: set[int], used_items: set[int]) -> None:
        nonlocal best_value, best_set
        if value + bound(pos, used_bidders, used_items) <= best_value:
            return
        for q in range(pos, n_bids):
            b = order[q]
            if b.bidder in used_bidders or used_items.intersection(b.bundle):
                continue
            chosen.append(q)
            used_bidders.add(b.bidder)
            used_items.update(b.bundle)
            visit(q + 1, chosen, value + b.price, used_bidders, used_items)
            chosen.pop()
            used_bidders.discard(b.bidder)
            used_items.difference_update(b.bundle)
            if value + bound(q + 1, used_bidders, used_items) <= best_value:
                break
        if value > best_value:
            best_value = value
            best_set = tuple(chosen)

    visit(0, [], ZERO, set(), set())
    return Allocation.from_bids(order[q] for q in best_set)


def brute_force_wd(bids: Sequence[Bid]) -> Fraction:
    """Best revenue over every subset of ``bids`` (exponential; a test oracle)."""
    best = ZERO
    n = len(bids)
    for mask in range(1 << n):
        bidders: set[int] = set()
        items: set[int] = set()
        total = ZERO
        ok = True
        for q in range(n):
            if mask >> q & 1:
                b = bids[q]
                if b.bidder in bidders or items.intersection(b.bundle):
                    ok = False
                    break
                bidders.add(b.bidder)
                items.update(b.bundle)
                total += b.price
        if ok and total > best:
            best = total
    return best


# --------------------------------------------------------------------------
# Optimal social welfare


def welfare_candidates(val: Valuation) -> list[tuple[Bundle, Fraction]]:
    """Bundles a bidder could usefully receive in a welfare-maximising allocation."""
    # At zero prices every positively valued item is worth taking.
    free = [ZERO] * (max(val.items(), default=-1) + 1) if isinstance(val, Additive) else ()
    cands = [(s, v) for s, v, _ in val.candidates(free)]
    cands.sort(key=lambda c: (-c[1], c[0]))
    return cands


def optimal_welfare(instance: Instance, node_budget: int = DEFAULT_NODE_BUDGET) -> OptResult:
    """Exact maximum social welfare by branch and bound over per-bidder candidates.

    Returns ``exact=False`` with the best allocation found when the node budget
    runs out; callers that need OPT should go through :func:`require_exact`.
    All-unit-demand instances are solved as a weighted bipartite matching.
    """
    if instance.n and all(isinstance(v, UnitDemand) for v in instance.valuations):
        return unit_demand_opt(instance)
    cands = [welfare_candidates(v) for v in instance.valuations]
    bidders = [i for i in range(instance.n) if cands[i]]
    bidders.sort(key=lambda i: (-cands[i][0][1], i))
    depth = len(bidders)

    best_value = Fraction(-1)
    best_pick: dict[int, Bundle] = {}
    pick: dict[int, Bundle] = {}
    nodes = 0
    exhausted = False

    def bound(level: int, used: set[int]) -> Fraction:
        by_bidder = ZERO
        per_item: dict[int, Fraction] = {}
        for i in bidders[level:]:
            top = None
            for s, v in cands[i]:
                if used.intersection(s):
                    continue
                if top is None:
                    top = v
                d = v / len(s)
                for j in s:
                    if d > per_item.get(j, ZERO):
                        per_item[j] = d
            if top is not None:
                by_bidder += top
        return min(by_bidder, sum(per_item.values(), ZERO))

    def visit(level: int, value: Fraction, used: set[int]) -> None:
        nonlocal best_value, best_pick, nodes, exhausted
        nodes += 1
        if nodes > node_budget:
            exhausted = True
            return
        if level == depth:
            if value > best_value:
                best_value, best_pick = value, dict(pick)
            return
        if value + bound(level, used) <= best_value:
            return
        i = bidders[level]
        for s, v in cands[i]:
            if used.intersection(s):
                continue
            pick[i] = s
            used.update(s)
            visit(level + 1, value + v, used)
            used.difference_update(s)
            del pick[i]
            if exhausted:
                return
        visit(level + 1, value, used)

    visit(0, ZERO, set())
    if best_value < 0:
        best_value = ZERO
    alloc = Allocation({i: Assignment(s, ZERO) for i, s in sorted(best_pick.items())})
    values = {i: instance.valuations[i].value(s) for i, s in sorted(best_pick.items())}
    return OptResult(best_value, alloc, values, exact=not exhausted, nodes=nodes)


def unit_demand_opt(instance: Instance) -> OptResult:
    """Exact OPT for unit-demand bidders via maximum-weight matching.

    Weights are scaled to integers so networkx stays on its integer-only path.
    """
    edges = [(i, j, v) for i, val in enumerate(instance.valuations) for j, v in val.item_values.items() if v > 0]
    scale = math.lcm(*(v.denominator for _, _, v in edges)) if edges else 1
    g = nx.Graph()
    for i, j, v in edges:
        g.add_edge(("b", i), ("j", j), weight=int(v * scale))
    pick: dict[int, Bundle] = {}
    for a, b in nx.max_weight_matching(g):
        (_, i), (_, j) = (a, b) if a[0] == "b" else (b, a)
        pick[i] = (j,)
    alloc = Allocation({i: Assignment(s, ZERO) for i, s in sorted(pick.items())})
    values = {i: instance.valuations[i].value(s) for i, s in sorted(pick.items())}
    return OptResult(sum(values.values(), ZERO), alloc, values)


def require_exact(opt: OptResult) -> Fraction:
    if not opt.exact:
        raise OptUnknown(opt.opt_value, opt.nodes)
    return opt.opt_value


def brute_force_unit_welfare(instance: Instance) -> Fraction:
    """Best welfare over all partial injections bidder -> item (unit demand only)."""
    n, m = instance.n, instance.m
    best = ZERO
    slots = list(range(m)) + [None] * n
    seen: set[tuple] = set()
    for perm in itertools.permutations(slots, n):
        if perm in seen:
            continue
        seen.add(perm)
        total = ZERO
        for i, j in enumerate(perm):
            if j is not None:
                total += instance.valuations[i].value((j,))
        best = max(best, total)
    return best


def brute_force_welfare(instance: Instance) -> Fraction:
    """Best welfare over every map item -> owner-or-nobody (``(n+1)**m`` maps; a test oracle)."""
    n, m = instance.n, instance.m
    best = ZERO
    for owners in itertools.product(range(n + 1), repeat=m):
        held: list[list[int]] = [[] for _ in range(n)]
        for j, o in enumerate(owners):
            if o < n:
                held[o].append(j)
        total = sum((instance.valuations[i].value(tuple(s)) for i, s in enumerate(held) if s), ZERO)
        if total > best:
            best = total
    return best


# --------------------------------------------------------------------------
# Greedy proxies


def _greedy(bids: Iterable[Bid], threshold: Fraction, *, unit: bool) -> Allocation:
    pool = list(bids)
    if unit:
        for b in pool:
            if len(b.bundle) != 1:
                raise InputError(f"unit-demand greedy needs singleton bids, got {b.bundle}")
    # highest price first, then (bidder, bundle, round); two stable sorts avoid negating Fractions
    pool.sort(key=lambda b: (b.bidder, b.bundle, b.round))
    pool.sort(key=lambda b: b.price, reverse=True)
    accepted: list[Bid] = []
    taken_bidders: set[int] = set()
    taken_items: set[int] = set()
    for b in pool:
        if b.bidder in taken_bidders or taken_items.intersection(b.bundle):
            continue
        if b.price < threshold:
            break
        accepted.append(b)
        taken_bidders.add(b.bidder)
        taken_items.update(b.bundle)
    return Allocation.from_bids(accepted)


def greedy_unit(bids: Iterable[Bid], threshold: Fraction) -> Allocation:
    """Highest bid first down to ``threshold``; a winner's other bids and rival bids on her item go."""
    return _greedy(bids, Fraction(threshold), unit=True)


def greedy_general(bids: Iterable[Bid], threshold: Fraction) -> Allocation:
    """Bundle version of :func:`greedy_unit`: accepted bundles knock out every intersecting bid."""
    return _greedy(bids, Fraction(threshold), unit=False)


def value_buckets(opt: OptResult, n: int) -> tuple[set[int], Fraction]:
    """Group OPT's winners into geometric value bins and return the heaviest bin with its base value.

    Bin ``i`` (``1 <= i <= 2*ceil(log2 n)``) holds bidders whose value lies in
    ``(OPT/2**i, OPT/2**(i-1)]``; anything smaller falls in a last bin that is
    never selected.  Returns ``(bidders, v_star)`` with ``v_star = OPT/2**i``,
    so every selected bidder's value sits in ``[v_star, 2*v_star]``.
    """
    if n < 2:
        raise InputError("value buckets need n >= 2")
    total = opt.opt_value
    if total <= 0:
        return set(), ZERO
    n_bins = 2 * (n - 1).bit_length()  # 2 * ceil(log2 n)
    bins: dict[int, set[int]] = {}
    weights: dict[int, Fraction] = {}
    for i, v in opt.values.items():
        if v <= 0:
            continue
        k = 1
        while total / 2**k >= v:
            k += 1
        if k > n_bins:
            continue
        bins.setdefault(k, set()).add(i)
        weights[k] = weights.get(k, ZERO) + v
    if not bins:
        return set(), ZERO
    k = max(sorted(weights), key=lambda b: weights[b])
    return bins[k], total / 2**k
