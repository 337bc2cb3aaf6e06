"""Lower-bound instance families and seeded random instances.

Each family constructor returns a :class:`Scenario`: the instance, the auction
configuration the construction is meant to run under, the closed-form outcome
where one is known, and the item layout so tests can inspect the trace.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction

from .allocation import Allocation, Assignment
from .mechanism import DISJOINT, FIXED, PORTER, PROPORTIONAL, AuctionConfig, IncrementPolicy
from .model import (
    HIGHEST_VALUE,
    LOWEST_INDEX,
    LOWEST_VALUE,
    Additive,
    BundleEntry,
    BundleList,
    InputError,
    Instance,
    TieBreakRule,
    UnitDemand,
    bundle,
)

HALF = Fraction(1, 2)


@dataclass
class Scenario:
    family: str
    params: dict
    instance: Instance
    config: AuctionConfig
    expected_welfare: Fraction | None = None
    expected_opt: Fraction | None = None
    opt_lower: Allocation | None = None
    # free-form layout: item classes, bidder roles
    layout: dict = field(default_factory=dict)

    def __iter__(self):
        # unpacks as (instance, config)
        return iter((self.instance, self.config))


def u_sequence(k: int, length: int, *, literal: bool = False) -> list[int]:
    """Class sizes for the unit-demand family: ``u[p] = k * sum(u[:p]) + 1``.

    Each class must be exactly as large as all higher-valued items together,
    the extra top item included, hence the ``+ 1``.  ``literal=True`` drops it
    from ``p = 2`` on (``1, k+1, k*(k+2), ...``); that variant desynchronises
    the block pairs from the top pair once ``l >= 3``.
    """
    u = [1]
    while len(u) < length:
        u.append(k * sum(u) + (0 if literal and len(u) >= 2 else 1))
    return u[:length]


def u_sequence_gadget(k: int, length: int, cap: int) -> list[int]:
    h = k * (cap - 1) // 2
    u = [1]
    while len(u) < length:
        u.append(h * sum(u) + 1)
    return u[:length]


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise InputError(msg)


def gen_unit_demand_lb(k: int, l: int, *, literal_u: bool = False) -> Scenario:
    """Unit-demand family whose CCA welfare is exactly ``2l + 2k``.

    Item 0 is the extra value-``l`` item that the two top bidders prefer.
    Blocks follow in bidder order; inside block ``i`` the classes run from
    value ``l`` down to 1 with ``u[l-v]`` items of value ``v``.  Bidders are
    ``s0, s0', s1, s1', ..., sk, sk'``.  ``literal_u`` switches to the
    class sizes without the extra item (see :func:`u_sequence`).
    """
    _require(k >= 2, "k must be at least 2")
    _require(l >= 2, "l must be at least 2")
    u = u_sequence(k, l, literal=literal_u)
    classes: dict[tuple[int, int], list[int]] = {}  # (block, value) -> items
    nxt = 1
    for i in range(1, k + 1):
        for v in range(l, 0, -1):
            classes[i, v] = list(range(nxt, nxt + u[l - v]))
            nxt += u[l - v]
    m = nxt

    top_values = {0: Fraction(l)}
    for (i, v), items in classes.items():
        top_values.update({j: Fraction(v) for j in items})
    top = UnitDemand(top_values, tie_break=HIGHEST_VALUE, bid_at_zero_utility=True)
    vals = [top, top]
    for i in range(1, k + 1):
        own = {j: Fraction(v) for (b, v), items in classes.items() if b == i for j in items}
        block = UnitDemand(own, tie_break=LOWEST_VALUE, bid_at_zero_utility=True)
        vals += [block, block]
    inst = Instance(m, tuple(vals), cap=1)
    cfg = AuctionConfig(IncrementPolicy(PROPORTIONAL, HALF), PORTER)

    # s0 and every si take a value-l item; s0' and every si' a value-(l-1) item.
    zero = Fraction(0)
    lower = {0: Assignment((0,), zero), 1: Assignment((classes[1, l - 1][1],), zero)}
    for i in range(1, k + 1):
        lower[2 * i] = Assignment((classes[i, l][0],), zero)
        lower[2 * i + 1] = Assignment((classes[i, l - 1][0],), zero)
    opt_lower = Allocation(lower)
    return Scenario(
        "thm41",
        {"k": k, "l": l},
        inst,
        cfg,
        expected_welfare=Fraction(2 * l + 2 * k),
        opt_lower=opt_lower,
        layout={"classes": classes, "extra": 0, "u": u, "block_bidders": list(range(2, 2 * k + 2))},
    )


def gadget_edges(cap: int) -> list[tuple[int, int]]:
    return [(a, b) for a in range(cap) for b in range(a + 1, cap)]


def gen_gadget_lb(k: int, l: int, cap: int, *, vertex_scale: int | None = None) -> Scenario:
    """Bundle family built from clique gadgets; CCA welfare ``2*C*l + k*C/2``.

    Items: the ``C`` fresh top items first, then gadgets (block by block, value
    ``l`` down to 1, ``C choose 2`` items each, one item per clique edge), then
    the special items ``r_j^i`` and finally ``r_0``.  Bidders: ``s0, s0'``
    followed by ``s_1^i .. s_C^i`` for each block ``i``.

    A vertex bundle holds ``C - 1`` items and is worth ``(C - 1) * v`` inside a
    value-``v`` gadget, so its per-item value matches the top bidders' chunks.
    ``vertex_scale`` overrides the ``C - 1`` multiplier; with ``C`` the block
    bidders start bidding on the top gadgets at positive prices.
    """
    _require(k >= 2, "k must be at least 2")
    _require(l >= 2, "l must be at least 2")
    _require(cap >= 3 and cap % 2 == 1, "C must be an odd integer >= 3")
    scale = cap - 1 if vertex_scale is None else vertex_scale
    u = u_sequence_gadget(k, l, cap)
    edges = gadget_edges(cap)
    per_gadget = len(edges)
    fresh = list(range(cap))
    nxt = cap
    gadgets: dict[tuple[int, int], list[list[int]]] = {}
    for i in range(1, k + 1):
        for v in range(l, 0, -1):
            gs = []
            for _ in range(u[l - v]):
                gs.append(list(range(nxt, nxt + per_gadget)))
                nxt += per_gadget
            gadgets[i, v] = gs
    specials: dict[tuple[int, int], int] = {}
    for i in range(1, k + 1):
        for j in range(cap):
            specials[i, j] = nxt
            nxt += 1
    r0 = nxt
    m = nxt + 1

    def vertex_bundle(g: list[int], vertex: int) -> tuple[int, ...]:
        return bundle(g[e] for e, (a, b) in enumerate(edges) if vertex in (a, b))

    top_entries = [BundleEntry(tuple(fresh), Fraction(cap * l))]
    for (i, v), gs in gadgets.items():
        for g in gs:
            for c in range(0, per_gadget, cap):
                top_entries.append(BundleEntry(tuple(g[c : c + cap]), Fraction(cap * v)))
    top_entries.append(BundleEntry((r0,), HALF))
    top = BundleList(tuple(top_entries), tie_break=HIGHEST_VALUE)
    vals = [top, top]
    for i in range(1, k + 1):
        for j in range(cap):
            entries = [
                BundleEntry(vertex_bundle(g, j), Fraction(scale * v))
                for v in range(l, 0, -1)
                for g in gadgets[i, v]
            ]
            entries.append(BundleEntry((specials[i, j],), HALF, bid_at_zero=True))
            vals.append(BundleList(tuple(entries), tie_break=LOWEST_VALUE))
    inst = Instance(m, tuple(vals), cap=cap)
    cfg = AuctionConfig(IncrementPolicy(PROPORTIONAL, HALF), PORTER)

    lower: dict[int, Assignment] = {}
    for i in range(1, k + 1):
        base = 2 + (i - 1) * cap
        lower[base] = Assignment(vertex_bundle(gadgets[i, l][0], 0), Fraction(0))
        for j in range(1, cap):
            lower[base + j] = Assignment(vertex_bundle(gadgets[i, l - 1][j - 1], j), Fraction(0))
    return Scenario(
        "thm42",
        {"k": k, "l": l, "C": cap},
        inst,
        cfg,
        expected_welfare=Fraction(2 * cap * l) + Fraction(k * cap, 2),
        opt_lower=Allocation(lower),
        layout={
            "gadgets": gadgets,
            "fresh": fresh,
            "specials": specials,
            "r0": r0,
            "u": u,
            "block_bidders": list(range(2, 2 + k * cap)),
        },
    )


def gen_fixed_increment_unit(n: int, V: int | Fraction) -> Scenario:
    """Unit-demand instance where a demand-blind increment loses a sqrt(n) factor."""
    r = math.isqrt(n)
    _require(r * r == n and r >= 2, "n must be a perfect square >= 4")
    V = Fraction(V)
    _require(V > 0, "V must be positive")
    t = r + 1
    vals: list = []
    for i in range(1, n + 1):
        vals.append(UnitDemand({0: t * V, i: V}, tie_break=LOWEST_INDEX))
    blocks = []
    for b in range(r):
        h = list(range(b * r + 1, (b + 1) * r + 1))
        blocks.append(h)
        pair = UnitDemand({j: V for j in h}, tie_break=LOWEST_INDEX)
        vals += [pair, pair]
    inst = Instance(n + 1, tuple(vals), cap=1)
    cfg = AuctionConfig(IncrementPolicy(FIXED, Fraction(1)), PORTER)
    return Scenario(
        "fixed_unit",
        {"n": n, "V": V},
        inst,
        cfg,
        expected_welfare=(3 * r + 1) * V,
        expected_opt=(n + r + 1) * V,
        layout={"blocks": blocks, "t": t},
    )


def gen_fixed_increment_pairs(n: int, V: int | Fraction) -> Scenario:
    """Two bidders per type i wanting items {0, i}; only one bid can ever win."""
    _require(n >= 2, "n must be at least 2")
    V = Fraction(V)
    _require(V > 0, "V must be positive")
    vals = []
    for i in range(1, n + 1):
        v = Additive({0: V, i: V}, 2, tie_break=HIGHEST_VALUE, bid_at_zero_utility=True)
        vals += [v, v]
    inst = Instance(n + 1, tuple(vals), cap=2)
    cfg = AuctionConfig(IncrementPolicy(FIXED, Fraction(1)), PORTER)
    return Scenario(
        "fixed_pairs",
        {"n": n, "V": V},
        inst,
        cfg,
        expected_welfare=2 * V,
        expected_opt=(n + 1) * V,
    )


def gen_smra_stop(c: int, V: int | Fraction) -> Scenario:
    """Three additive bidders on four items; stopping on disjoint bids gives welfare 6V.

    Items 0..3 here are items 1..4 of the usual statement.
    """
    _require(c > 2, "c must exceed 2")
    V = Fraction(V)
    _require(V > c, "V must exceed c")
    v1 = Additive({0: V, 1: 2 * V}, tie_break=HIGHEST_VALUE, bid_at_zero_utility=True)
    v2 = Additive({3: V, 2: 2 * V}, tie_break=HIGHEST_VALUE, bid_at_zero_utility=True)
    v3 = Additive({1: c * V, 2: c * V}, tie_break=HIGHEST_VALUE, bid_at_zero_utility=True)
    inst = Instance(4, (v1, v2, v3), cap=2)
    cfg = AuctionConfig(IncrementPolicy(PROPORTIONAL, Fraction(1)), DISJOINT)
    return Scenario(
        "smra_stop",
        {"c": c, "V": V},
        inst,
        cfg,
        expected_welfare=6 * V,
        expected_opt=2 * (c + 1) * V,
    )


def gen_random(
    kind: str,
    n: int,
    m: int,
    cap: int = 1,
    value_range: tuple[int, int] = (1, 4),
    seed: int = 0,
    *,
    entries: int = 3,
) -> Instance:
    """Seeded random instance; every value is a multiple of ``W = n**3 * m**2``.

    ``kind="unit"`` gives unit-demand bidders over random item subsets;
    ``kind="xor"`` gives up to ``entries`` XOR atoms per bidder, each of at
    most ``cap`` items.  Tie-break rules and zero-utility flags are drawn too.
    """
    _require(kind in ("unit", "xor"), f"unknown random kind {kind!r}")
    _require(n >= 1 and m >= 1, "need n, m >= 1")
    _require(1 <= cap <= m, "cap must lie in [1, m]")
    lo, hi = value_range
    _require(1 <= lo <= hi, "value range must satisfy 1 <= lo <= hi")
    rng = random.Random(seed)
    w = n**3 * m**2
    rules = [LOWEST_INDEX, LOWEST_VALUE, HIGHEST_VALUE]
    vals = []
    for _ in range(n):
        rule: TieBreakRule = rng.choice(rules)
        zero = rng.random() < 0.5
        if kind == "unit":
            items = rng.sample(range(m), rng.randint(1, m))
            iv = {j: Fraction(w * rng.randint(lo, hi)) for j in sorted(items)}
            vals.append(UnitDemand(iv, tie_break=rule, bid_at_zero_utility=zero))
        else:
            atoms = []
            for _ in range(rng.randint(1, entries)):
                s = bundle(rng.sample(range(m), rng.randint(1, cap)))
                atoms.append(BundleEntry(s, Fraction(w * rng.randint(lo, hi) * len(s))))
            vals.append(BundleList(tuple(atoms), tie_break=rule, bid_at_zero_utility=zero))
    return Instance(m, tuple(vals), cap=1 if kind == "unit" else cap, scale_w=w)


FAMILIES = {
    "thm41": gen_unit_demand_lb,
    "thm42": gen_gadget_lb,
    "fixed_unit": gen_fixed_increment_unit,
    "fixed_pairs": gen_fixed_increment_pairs,
    "smra_stop": gen_smra_stop,
}
