"""Trace audits, welfare metrics, bound checks and parameter sweeps."""
from __future__ import annotations

import csv
import io
import itertools
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterable, Sequence

from .allocation import (
    OptResult,
    OptUnknown,
    greedy_general,
    optimal_welfare,
    require_exact,
    value_buckets,
)
from .generators import FAMILIES, Scenario, gen_random
from .mechanism import (
    PORTER,
    AuctionConfig,
    AuctionResult,
    AuctionTrace,
    AuctionTruncated,
    IncrementPolicy,
    apply_increments,
    run_cca,
)
from .model import ZERO, InputError, Instance, max_utility, price_of

BRUTE_FORCE_MAX_ITEMS = 12
# threshold from the general-bidder analysis: b = v* / (8 * C * log2 m)
THRESHOLD_C1 = 8


@dataclass
class Check:
    name: str
    passed: bool = True
    skipped: bool = False
    witness: str = ""

    def fail(self, witness: str) -> None:
        if self.passed:
            self.passed = False
            self.witness = witness


@dataclass
class AuditReport:
    checks: dict[str, Check] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks.values())

    def violations(self) -> list[Check]:
        return [c for c in self.checks.values() if not c.passed]

    def summary(self) -> str:
        parts = []
        for c in self.checks.values():
            state = "skip" if c.skipped else ("ok" if c.passed else f"FAIL({c.witness})")
            parts.append(f"{c.name}={state}")
        return " ".join(parts)


class SubsetOracle:
    """Best utility by enumerating every non-empty subset of a bidder's support.

    Subset values are tabulated once; each price vector is then scaled to a
    common denominator so the per-round scan runs on integers.
    """

    def __init__(self, val, max_items: int = BRUTE_FORCE_MAX_ITEMS):
        support = sorted(val.items())
        if len(support) > max_items:
            raise InputError(f"support of {len(support)} items is too large to enumerate")
        self.table = [
            (s, val.value(s)) for r in range(1, len(support) + 1) for s in itertools.combinations(support, r)
        ]
        self.den = math.lcm(1, *(v.denominator for _, v in self.table))

    def __call__(self, prices: Sequence[Fraction]) -> Fraction:
        d = math.lcm(self.den, *(p.denominator for p in prices))
        ip = [p.numerator * (d // p.denominator) for p in prices]
        best = 0
        for s, v in self.table:
            u = v.numerator * (d // v.denominator) - sum(ip[j] for j in s)
            if u > best:
                best = u
        return Fraction(best, d)


def utilities_by_round(instance: Instance, trace: AuctionTrace) -> list[list[Fraction]]:
    """Each bidder's best achievable utility at every recorded price vector.

    Supports of at most 12 items are enumerated exhaustively; larger ones
    fall back to the demand-query candidate set.
    """
    oracles = []
    for v in instance.valuations:
        if len(v.items()) <= BRUTE_FORCE_MAX_ITEMS:
            oracles.append(SubsetOracle(v))
        else:
            oracles.append(lambda prices, v=v: max_utility(v, prices))
    return [[o(rec.prices) for o in oracles] for rec in trace.rounds]


def audit_trace(
    instance: Instance,
    trace: AuctionTrace,
    result: AuctionResult | None,
    config: AuctionConfig,
) -> AuditReport:
    """Re-derive every per-round invariant of a run from its trace.

    ``result`` may be ``None`` for a truncated run; the allocation and
    final-round checks are then skipped.
    """
    if any(len(r.prices) != instance.m for r in trace.rounds):
        raise InputError("trace price vectors do not match the instance")
    if any(b.bidder >= instance.n for r in trace.rounds for b in r.bids):
        raise InputError("trace mentions a bidder the instance does not have")

    names = ["monotone", "increments", "bid_prices", "fact1", "fact2", "fact3", "feasible"]
    rep = AuditReport({n: Check(n) for n in names})
    c = rep.checks
    rounds = trace.rounds
    successors = [r.prices for r in rounds[1:]] + ([trace.final_prices] if trace.final_prices else [])

    for rec, nxt in zip(rounds, successors):
        for j, (p, q) in enumerate(zip(rec.prices, nxt)):
            if q < p:
                c["monotone"].fail(f"item {j} fell from {p} to {q} entering round {rec.round + 1}")
        if tuple(nxt) != apply_increments(rec.prices, rec.bids, config.policy):
            c["increments"].fail(f"round {rec.round}")
    for rec in rounds:
        for b in rec.bids:
            if b.price != price_of(b.bundle, rec.prices) or b.round != rec.round:
                c["bid_prices"].fail(f"round {rec.round} bidder {b.bidder}")

    best = utilities_by_round(instance, trace)
    for i in range(instance.n):
        for t in range(1, len(rounds)):
            if best[t][i] > best[t - 1][i]:
                c["fact1"].fail(f"round {rounds[t].round} bidder {i}: {best[t - 1][i]} -> {best[t][i]}")

    # A bid is a best response, so v(S) - u = price >= 0; strict whenever the bundle is priced.
    for t, rec in enumerate(rounds):
        for b in rec.bids:
            v = instance.valuations[b.bidder].value(b.bundle)
            u = best[t][b.bidder]
            if v - b.price != u or v < u or (rec.round > 0 and b.price > 0 and not v > u):
                c["fact2"].fail(f"round {rec.round} bidder {b.bidder}: v={v} u={u}")
            if rec.utilities.get(b.bidder) != v - b.price:
                c["fact2"].fail(f"round {rec.round} bidder {b.bidder}: recorded utility mismatch")

    if result is None:
        c["fact3"].skipped = c["feasible"].skipped = True
        return rep
    alloc = result.allocation
    if config.stop != PORTER or not rounds:
        c["fact3"].skipped = True
    else:
        last = rounds[-1]
        for b in last.bids:
            got = alloc.assignments.get(b.bidder)
            value = instance.valuations[b.bidder].value(got.bundle) if got else ZERO
            if value < best[-1][b.bidder]:
                c["fact3"].fail(f"bidder {b.bidder}: value {value} < utility {best[-1][b.bidder]}")

    offered = {(b.bidder, b.bundle, b.price) for r in rounds for b in r.bids}
    seen: set[int] = set()
    for i, a in alloc.assignments.items():
        if (i, a.bundle, a.payment) not in offered:
            c["feasible"].fail(f"bidder {i} assigned {a.bundle}@{a.payment}, never bid")
        if seen.intersection(a.bundle):
            c["feasible"].fail(f"bidder {i} overlaps")
        seen.update(a.bundle)
    return rep


INFINITE = math.inf


def welfare_ratio(instance: Instance, result: AuctionResult, opt: OptResult | None = None) -> Fraction | float:
    """OPT over achieved welfare; ``math.inf`` when the auction allocates no value but OPT > 0."""
    opt = opt if opt is not None else optimal_welfare(instance)
    best = require_exact(opt)
    got = result.welfare(instance)
    if got == 0:
        return Fraction(1) if best == 0 else INFINITE
    return best / got


def _log2_clamped(x: int) -> Fraction:
    # irrational in general; the float is converted exactly and used only for thresholds
    return Fraction(math.log2(max(x, 2)))


@dataclass
class BoundVerdict:
    revenue: Fraction
    welfare: Fraction
    opt: Fraction
    revenue_threshold: Fraction
    welfare_threshold: Fraction

    @property
    def disjunction_holds(self) -> bool:
        return self.revenue >= self.revenue_threshold or self.welfare >= self.welfare_threshold


def theorem_bound_check(
    instance: Instance, result: AuctionResult, cap: int, opt: OptResult | None = None
) -> BoundVerdict:
    """Revenue >= OPT/(480 C^2 log n log^2 m) or welfare >= OPT/(24 log n), logs base 2 clamped at 2."""
    for b in result.trace.history():
        if len(b.bundle) > cap:
            raise InputError(f"bid on {b.bundle} exceeds cardinality {cap}")
    opt = opt if opt is not None else optimal_welfare(instance)
    best = require_exact(opt)
    ln, lm = _log2_clamped(instance.n), _log2_clamped(instance.m)
    return BoundVerdict(
        revenue=result.revenue,
        welfare=result.welfare(instance),
        opt=best,
        revenue_threshold=best / (480 * cap * cap * ln * lm * lm),
        welfare_threshold=best / (24 * ln),
    )


def threshold_presets(instance: Instance, opt: OptResult) -> dict[str, Fraction]:
    """Greedy thresholds used by the analysis: ``n**2`` and ``v*/(8 C log2 m)``."""
    out = {"n_squared": Fraction(instance.n**2)}
    if instance.n >= 2:
        _, v_star = value_buckets(opt, instance.n)
        out["value_scaled"] = v_star / (THRESHOLD_C1 * instance.cap * _log2_clamped(instance.m))
    return out


# --------------------------------------------------------------------------
# Sweeps

CSV_COLUMNS = [
    "family",
    "cell",
    "params",
    "n",
    "m",
    "rounds",
    "reason",
    "welfare",
    "revenue",
    "opt",
    "opt_exact",
    "ratio",
    "expected_welfare",
    "audit_ok",
    "dominance_ok",
    "bound_holds",
    "error",
]

RANDOM_FAMILIES = ("random_unit", "random_xor")


def fmt(x: Any) -> str:
    """Render a cell: Fractions as ``num/den``, booleans as 0/1, ``None`` as empty."""
    if x is None:
        return ""
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}"
    if isinstance(x, float) and math.isinf(x):
        return "inf"
    return str(x)


def build_cell(family: str, params: dict, seed: int) -> Scenario:
    """Instantiate one sweep cell.  Random families read n, m, C, policy, stop, epsilon from ``params``; C means cap everywhere."""
    if family in FAMILIES:
        p = {("cap" if key == "C" else key): v for key, v in params.items()}
        return FAMILIES[family](**p)
    if family in RANDOM_FAMILIES:
        kind = family.split("_", 1)[1]
        p = dict(params)
        inst = gen_random(
            kind,
            p.get("n", 3),
            p.get("m", 4),
            p.get("C", 1 if kind == "unit" else 2),
            tuple(p.get("values", (1, 3))),
            seed,
        )
        cfg = AuctionConfig(
            IncrementPolicy(p.get("policy", "proportional"), Fraction(p.get("epsilon", 1))),
            p.get("stop", PORTER),
            p.get("max_rounds", 20_000),
        )
        return Scenario(family, params, inst, cfg)
    raise InputError(f"unknown family {family!r}")


def run_cell(family: str, index: int, params: dict, seed: int, node_budget: int = 2_000_000) -> dict:
    rec: dict[str, Any] = {c: None for c in CSV_COLUMNS}
    rec.update(family=family, cell=index, params=json.dumps(params, sort_keys=True, default=str))
    try:
        sc = build_cell(family, params, seed + index)
    except InputError as exc:
        rec["error"] = f"params: {exc}"
        return rec
    inst = sc.instance
    rec.update(n=inst.n, m=inst.m, expected_welfare=sc.expected_welfare)
    try:
        res = run_cca(inst, sc.config)
    except AuctionTruncated as exc:
        rec.update(rounds=len(exc.trace.rounds), reason="truncated", error="truncated")
        rec["audit_ok"] = audit_trace(inst, exc.trace, None, sc.config).ok
        return rec
    rep = audit_trace(inst, res.trace, res, sc.config)
    welfare, revenue = res.welfare(inst), res.revenue
    rec.update(rounds=res.rounds, reason=res.trace.reason, welfare=welfare, revenue=revenue, audit_ok=rep.ok)
    if not rep.ok:
        rec["error"] = "audit: " + "; ".join(f"{c.name} {c.witness}" for c in rep.violations())
    opt = optimal_welfare(inst, node_budget)
    rec["opt_exact"] = opt.exact
    rec["opt"] = opt.opt_value
    history = res.trace.history()
    dominance = welfare >= revenue
    for b in threshold_presets(inst, opt).values():
        dominance = dominance and revenue >= greedy_general(history, b).revenue
    rec["dominance_ok"] = dominance
    if opt.exact:
        rec["ratio"] = welfare_ratio(inst, res, opt)
        if all(len(b.bundle) <= inst.cap for b in history):
            rec["bound_holds"] = theorem_bound_check(inst, res, inst.cap, opt).disjunction_holds
    return rec


def _run_cell_args(args: tuple) -> dict:
    return run_cell(*args)


def sweep_cells(
    cells: Sequence[tuple[str, dict]], seed: int = 0, workers: int = 1, node_budget: int = 2_000_000
) -> list[dict]:
    """Run ``(family, params)`` cells; cell ``i`` draws its randomness from ``seed + i``.

    Per-cell failures are recorded, never raised.  Output order follows the
    input regardless of ``workers``.
    """
    jobs = [(fam, i, p, seed, node_budget) for i, (fam, p) in enumerate(cells)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(workers) as pool:
            return list(pool.map(_run_cell_args, jobs))
    return [_run_cell_args(j) for j in jobs]


def sweep(
    family: str,
    grid: Sequence[dict] | dict[str, Iterable],
    seed: int = 0,
    workers: int = 1,
    node_budget: int = 2_000_000,
) -> list[dict]:
    """Run every grid cell of one family.

    ``grid`` is a list of parameter dicts or a dict of value lists that is
    expanded as a cartesian product.
    """
    return sweep_cells([(family, p) for p in expand_grid(grid)], seed, workers, node_budget)


def mixed_cells(count: int) -> list[tuple[str, dict]]:
    """Random cells cycling through both kinds, both policies, both stopping rules and small sizes."""
    out = []
    for i in range(count):
        family = RANDOM_FAMILIES[i % 2]
        m = 2 + (i // 24) % 3
        params = {
            "n": 2 + (i // 8) % 3,
            "m": m,
            "C": 1 if family == "random_unit" else min(m, 1 + (i // 96) % 3),
            "policy": ("proportional", "fixed")[(i // 2) % 2],
            "stop": (PORTER, "disjoint")[(i // 4) % 2],
            "epsilon": 1,
            "values": (1, 3),
        }
        out.append((family, params))
    return out


def expand_grid(grid: Sequence[dict] | dict[str, Iterable]) -> list[dict]:
    if isinstance(grid, dict):
        keys = list(grid)
        if not keys:
            return []
        return [dict(zip(keys, combo)) for combo in itertools.product(*(list(grid[k]) for k in keys))]
    return [dict(p) for p in grid]


def records_to_csv(records: Iterable[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in records:
        w.writerow([fmt(r.get(c)) for c in CSV_COLUMNS])
    return buf.getvalue()


__all__ = [
    "AuditReport",
    "BoundVerdict",
    "CSV_COLUMNS",
    "Check",
    "OptUnknown",
    "audit_trace",
    "expand_grid",
    "records_to_csv",
    "run_cell",
    "mixed_cells",
    "sweep",
    "sweep_cells",
    "theorem_bound_check",
    "threshold_presets",
    "welfare_ratio",
]
