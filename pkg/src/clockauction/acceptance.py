"""The acceptance criteria as runnable checks, grouped into suites.

Each criterion returns one or more :class:`CriterionResult` rows.  Expensive
runs (the family replays and the 500-cell random sweep) are cached so the
suites can share them within one process.
"""
from __future__ import annotations

import random
import time
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable

from .allocation import (
    Allocation,
    brute_force_unit_welfare,
    brute_force_wd,
    greedy_general,
    optimal_welfare,
    winner_determination,
)
from .formats import dumps_trace
from .generators import (
    Scenario,
    gen_fixed_increment_pairs,
    gen_fixed_increment_unit,
    gen_gadget_lb,
    gen_random,
    gen_smra_stop,
    gen_unit_demand_lb,
)
from .harness import mixed_cells, records_to_csv, sweep, sweep_cells, threshold_presets, welfare_ratio
from .mechanism import PORTER, AuctionConfig, AuctionResult, conflicts, run_cca
from .model import Bid, Instance, bundle

MIXED_RUNS = 500
MIXED_SEED = 2024
THM41_GRID = [(k, l) for k in (2, 3) for l in (2, 3, 4)]


@dataclass
class CriterionResult:
    name: str
    passed: bool
    detail: str = ""
    seconds: float = 0.0


def _timed(fn: Callable, *args):
    t0 = time.perf_counter()
    out = fn(*args)
    return out, time.perf_counter() - t0


@lru_cache(maxsize=None)
def replay(family: str, *params) -> tuple[Scenario, AuctionResult, float]:
    gen = {
        "thm41": gen_unit_demand_lb,
        "thm42": gen_gadget_lb,
        "fixed_unit": gen_fixed_increment_unit,
        "fixed_pairs": gen_fixed_increment_pairs,
        "smra_stop": gen_smra_stop,
    }[family]
    t0 = time.perf_counter()
    sc = gen(*params)
    res = run_cca(sc.instance, sc.config)
    return sc, res, time.perf_counter() - t0


def _alloc_value(inst: Instance, alloc: Allocation) -> Fraction:
    return alloc.welfare(inst)


# --------------------------------------------------------------------------
# 1-5: closed-form replays


def criterion_1() -> list[CriterionResult]:
    t0 = time.perf_counter()
    bad_welfare, bad_claim, bad_lower = [], [], []
    ratios: dict[int, list[Fraction]] = {}
    for k, l in THM41_GRID:
        sc, res, _ = replay("thm41", k, l)
        inst = sc.instance
        w = res.welfare(inst)
        if w != 2 * l + 2 * k:
            bad_welfare.append(f"(k={k},l={l}) welfare {w}")
        x1 = {j for (i, v), items in sc.layout["classes"].items() if v == 1 for j in items}
        blocks = set(sc.layout["block_bidders"])
        for b in res.trace.history():
            if b.bidder in blocks and (b.price >= 2 or (b.price == 1 and not set(b.bundle) <= x1)):
                bad_claim.append(f"(k={k},l={l}) bidder {b.bidder} bid {b.bundle}@{b.price} in round {b.round}")
                break
        lower = _alloc_value(inst, sc.opt_lower)
        if lower != (k + 1) * (2 * l - 1) or (l >= 3 and not lower > w):
            bad_lower.append(f"(k={k},l={l}) lower {lower} vs welfare {w}")
        ratios.setdefault(k, []).append(lower / w)
    increasing = all(all(a < b for a, b in zip(r, r[1:])) for r in ratios.values())
    dt = time.perf_counter() - t0
    return [
        CriterionResult("1a thm41 welfare 2l+2k", not bad_welfare, "; ".join(bad_welfare) or "all 6 cells exact", dt),
        CriterionResult(
            "1b thm41 block bids below 2, price-1 bids on X_1", not bad_claim, "; ".join(bad_claim) or "no violations"
        ),
        CriterionResult(
            "1c thm41 lower bound (k+1)(2l-1) beats welfare, ratio increasing",
            not bad_lower and increasing,
            "; ".join(bad_lower) or "ratios " + ", ".join(f"k={k}: {[str(x) for x in r]}" for k, r in ratios.items()),
        ),
        CriterionResult("1d thm41 runtime < 30 s", dt < 30, f"{dt:.2f} s", dt),
    ]


def criterion_2() -> list[CriterionResult]:
    k, l, cap = 2, 2, 3
    t0 = time.perf_counter()
    sc, res, _ = replay("thm42", k, l, cap)
    inst = sc.instance
    w = res.welfare(inst)
    specials = set(sc.layout["specials"].values())
    blocks = set(sc.layout["block_bidders"])
    stray = [
        b
        for b in res.trace.history()
        if b.bidder in blocks and b.price > 0 and not (len(b.bundle) == 1 and b.bundle[0] in specials and b.price == Fraction(1, 2))
    ]
    target = k * (cap * l + (cap - 1) * cap * (l - 1))
    lower = sc.opt_lower
    feasible = all(
        any(e.bundle == a.bundle for e in inst.valuations[i].entries) for i, a in lower.assignments.items()
    ) and len(lower) == len(blocks)
    value = _alloc_value(inst, lower)
    dt = time.perf_counter() - t0
    return [
        CriterionResult("2a thm42 welfare 2Cl+kC/2 = 15", w == 15, f"welfare {w}", dt),
        CriterionResult(
            "2b thm42 block bidders bid positively only on specials at 1/2",
            not stray,
            f"{len(stray)} stray bids" + (f", first {stray[0]}" if stray else ""),
        ),
        CriterionResult("2c thm42 constructive allocation feasible", feasible, f"{len(lower)} disjoint vertex bundles"),
        CriterionResult(
            "2d thm42 constructive allocation valued k(Cl+(C-1)C(l-1)) = 24",
            value == target,
            f"valued {value}, expected {target}",
        ),
        CriterionResult("2e thm42 runtime < 30 s", dt < 30, f"{dt:.2f} s", dt),
    ]


def criterion_3() -> list[CriterionResult]:
    t0 = time.perf_counter()
    sc, res, _ = replay("fixed_unit", 16, 100)
    opt = optimal_welfare(sc.instance)
    w = res.welfare(sc.instance)
    ratio = welfare_ratio(sc.instance, res, opt)
    dt = time.perf_counter() - t0
    ok = w == 1300 and opt.exact and opt.opt_value == 2100 and ratio == Fraction(21, 13)
    return [
        CriterionResult("3 fixed-increment unit n=16: 1300 vs OPT 2100", ok, f"welfare {w}, OPT {opt.opt_value}, ratio {ratio}", dt),
        CriterionResult("3 runtime < 10 s", dt < 10, f"{dt:.2f} s", dt),
    ]


def criterion_4() -> list[CriterionResult]:
    t0 = time.perf_counter()
    sc, res, _ = replay("fixed_pairs", 8, 100)
    opt = optimal_welfare(sc.instance)
    w = res.welfare(sc.instance)
    ratio = welfare_ratio(sc.instance, res, opt)
    dt = time.perf_counter() - t0
    ok = w == 200 and opt.exact and opt.opt_value == 900 and ratio == Fraction(9, 2)
    return [
        CriterionResult("4 fixed-increment pairs n=8: 200 vs OPT 900", ok, f"welfare {w}, OPT {opt.opt_value}, ratio {ratio}", dt),
        CriterionResult("4 runtime < 5 s", dt < 5, f"{dt:.2f} s", dt),
    ]


def smra_porter_round(c: int = 10, V: int = 100) -> tuple[AuctionResult, list[Bid], Allocation, bool]:
    """Porter run of the disjoint-stop instance: round V+1's bids, the WD allocation then, and whether they conflict."""
    sc, _, _ = replay("smra_stop", c, V)
    cfg = AuctionConfig(sc.config.policy, PORTER, sc.config.max_rounds)
    res = run_cca(sc.instance, cfg)
    rec = res.trace.rounds[V + 1]
    history = [b for r in res.trace.rounds[: V + 2] for b in r.bids]
    alloc = winner_determination(history)
    return res, list(rec.bids), alloc, conflicts(rec.bids, alloc)


def criterion_5() -> list[CriterionResult]:
    c, V = 10, 100
    sc, res, dt = replay("smra_stop", c, V)
    opt = optimal_welfare(sc.instance)
    w = res.welfare(sc.instance)
    first = CriterionResult(
        "5a disjoint stop c=10 V=100: 600 vs OPT 2200",
        w == 600 and opt.opt_value == 2200 and res.trace.final_round == V + 1,
        f"welfare {w}, OPT {opt.opt_value}, stopped in round {res.trace.final_round}",
        dt,
    )
    porter, bids, alloc, clash = smra_porter_round(c, V)
    live = next((b for b in bids if b.bidder == 2), None)
    winners = {j for a in alloc.assignments.values() for j in a.bundle}
    ok = (
        porter.trace.final_round > V + 1
        and clash
        and live is not None
        and live.bundle == (1, 2)
        and bool(winners.intersection(live.bundle))
    )
    second = CriterionResult(
        "5b Porter rule does not stop at round V+1",
        ok,
        f"bidder 3 bids {live.bundle if live else None} in round {V + 1}; "
        f"WD winners {sorted(alloc.assignments)}; Porter stops in round {porter.trace.final_round} "
        f"with welfare {porter.welfare(sc.instance)}",
    )
    return [first, second]


# --------------------------------------------------------------------------
# 6: oracles


def random_bid_set(seed: int) -> list[Bid]:
    rng = random.Random(seed)
    n, m = rng.randint(1, 5), rng.randint(1, 6)
    bids = []
    for t in range(rng.randint(1, 14)):
        s = bundle(rng.sample(range(m), rng.randint(1, m)))
        bids.append(Bid(rng.randrange(n), s, Fraction(rng.randint(0, 12), rng.randint(1, 3)), t))
    return bids


def criterion_6() -> list[CriterionResult]:
    t0 = time.perf_counter()
    wd_bad, dom_bad = [], []
    for seed in range(200):
        bids = random_bid_set(seed)
        alloc = winner_determination(bids)
        want = brute_force_wd(bids)
        if alloc.revenue != want:
            wd_bad.append(f"seed {seed}: {alloc.revenue} != {want}")
        n = 1 + max(b.bidder for b in bids)
        for thr in (Fraction(0), Fraction(n * n)):
            if greedy_general(bids, thr).revenue > alloc.revenue:
                dom_bad.append(f"seed {seed} b={thr}")
    opt_bad = []
    for seed in range(100):
        rng = random.Random(10_000 + seed)
        inst = gen_random("unit", rng.randint(1, 7), rng.randint(1, 7), 1, (1, 5), seed)
        got = optimal_welfare(inst)
        want = brute_force_unit_welfare(inst)
        if not got.exact or got.opt_value != want:
            opt_bad.append(f"seed {seed}: {got.opt_value} != {want}")
    dt = time.perf_counter() - t0
    return [
        CriterionResult("6a WD equals subset brute force on 200 bid sets", not wd_bad, "; ".join(wd_bad[:3]) or "200/200", dt),
        CriterionResult("6b OPT equals injection brute force on 100 unit instances", not opt_bad, "; ".join(opt_bad[:3]) or "100/100"),
        CriterionResult("6c WD revenue dominates greedy on every bid set", not dom_bad, "; ".join(dom_bad[:3]) or "400/400"),
        CriterionResult("6d runtime < 60 s", dt < 60, f"{dt:.2f} s", dt),
    ]


# --------------------------------------------------------------------------
# 7-9: sweeps


@lru_cache(maxsize=None)
def mixed_records() -> tuple[dict, ...]:
    return tuple(sweep_cells(mixed_cells(MIXED_RUNS), seed=MIXED_SEED))


def _is_porter(rec: dict) -> bool:
    return '"stop": "porter"' in rec["params"]


def criterion_7() -> list[CriterionResult]:
    t0 = time.perf_counter()
    recs = mixed_records()
    bad = [r for r in recs if r["audit_ok"] is not True]
    truncated = sum(1 for r in recs if r["reason"] == "truncated")
    unit = sum(1 for r in recs if r["family"] == "random_unit")
    return [
        CriterionResult(
            "7 audits clean on 500 random runs",
            not bad and len(recs) == MIXED_RUNS,
            f"{len(recs)} runs ({unit} unit, {len(recs) - unit} xor), {truncated} stalled or truncated"
            + (f"; first failure cell {bad[0]['cell']}: {bad[0]['error']}" if bad else ""),
            time.perf_counter() - t0,
        )
    ]


def criterion_8() -> list[CriterionResult]:
    recs = [r for r in mixed_records() if _is_porter(r) and r["reason"] != "truncated"]
    bad = [r for r in recs if r["bound_holds"] is not True]
    return [
        CriterionResult(
            "8 revenue/welfare disjunction on W-scaled Porter runs",
            not bad and bool(recs),
            f"{len(recs)} runs checked" + (f"; first failure cell {bad[0]['cell']}" if bad else ""),
        )
    ]


def replay_dominance() -> list[str]:
    """Families replayed above: WD revenue beats both greedy presets, welfare beats revenue."""
    bad = []
    runs = [("thm41", k, l) for k, l in THM41_GRID] + [
        ("thm42", 2, 2, 3),
        ("fixed_unit", 16, 100),
        ("fixed_pairs", 8, 100),
        ("smra_stop", 10, 100),
    ]
    for key in runs:
        sc, res, _ = replay(*key)
        opt = optimal_welfare(sc.instance, node_budget=200_000)
        if res.welfare(sc.instance) < res.revenue:
            bad.append(f"{key}: welfare < revenue")
        if not opt.exact:
            continue
        for name, b in threshold_presets(sc.instance, opt).items():
            if greedy_general(res.trace.history(), b).revenue > res.revenue:
                bad.append(f"{key}: greedy {name} beats WD")
    return bad


def criterion_9() -> list[CriterionResult]:
    recs = [r for r in mixed_records() if r["reason"] != "truncated"]
    bad = [f"cell {r['cell']}" for r in recs if r["dominance_ok"] is not True] + replay_dominance()
    return [
        CriterionResult(
            "9 revenue dominance and welfare >= revenue",
            not bad,
            "; ".join(bad[:3]) or f"{len(recs)} random runs and 10 replays",
        )
    ]


# --------------------------------------------------------------------------
# 10: determinism


def determinism_outputs() -> tuple[str, ...]:
    outs = [records_to_csv(sweep_cells(mixed_cells(16), seed=MIXED_SEED))]
    outs.append(records_to_csv(sweep("thm41", {"k": [2, 3], "l": [2, 3]}, seed=1)))
    for key in (("thm41", 2, 3), ("thm42", 2, 2, 3), ("smra_stop", 10, 100)):
        gen = {"thm41": gen_unit_demand_lb, "thm42": gen_gadget_lb, "smra_stop": gen_smra_stop}[key[0]]
        sc = gen(*key[1:])
        res = run_cca(sc.instance, sc.config)
        outs.append(dumps_trace(res.trace, res))
    return tuple(outs)


def criterion_10() -> list[CriterionResult]:
    t0 = time.perf_counter()
    a, b = determinism_outputs(), determinism_outputs()
    same = [x == y for x, y in zip(a, b)]
    return [
        CriterionResult(
            "10 repeated runs give byte-identical CSV and traces",
            all(same),
            f"{sum(same)}/{len(same)} outputs identical",
            time.perf_counter() - t0,
        )
    ]


CRITERIA: dict[int, Callable[[], list[CriterionResult]]] = {
    1: criterion_1,
    2: criterion_2,
    3: criterion_3,
    4: criterion_4,
    5: criterion_5,
    6: criterion_6,
    7: criterion_7,
    8: criterion_8,
    9: criterion_9,
    10: criterion_10,
}

SUITES: dict[str, tuple[int, ...]] = {
    "paper_replays": (1, 2, 3, 4, 5),
    "oracles": (6,),
    "facts": (7, 8, 9),
    "determinism": (10,),
    "all": tuple(CRITERIA),
}


def run_suite(name: str) -> list[CriterionResult]:
    out: list[CriterionResult] = []
    for cid in SUITES[name]:
        out.extend(CRITERIA[cid]())
    return out
