"""Instance files, trace CSV and result documents.

Instance files are canonical JSON: keys sorted, two-space indent, every amount
written as a ``"num/den"`` string.  ``dumps_instance(loads_instance(text))``
returns ``text`` unchanged for anything this module wrote.
"""
from __future__ import annotations

import csv
import io
import json
from fractions import Fraction
from typing import Any

from .mechanism import AuctionConfig, AuctionResult, AuctionTrace, IncrementPolicy
from .model import (
    Additive,
    BundleEntry,
    BundleList,
    InputError,
    Instance,
    TieBreakRule,
    UnitDemand,
    Valuation,
    bundle,
)

FORMAT_VERSION = 1
TRACE_COLUMNS = ["round", "event", "bidder", "item_or_bundle", "amount"]


def rat(x: Fraction) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def parse_rat(s: Any) -> Fraction:
    if isinstance(s, bool) or not isinstance(s, (str, int)):
        raise InputError(f"expected an exact amount, got {s!r}")
    try:
        return Fraction(s)
    except (ValueError, ZeroDivisionError) as exc:
        raise InputError(f"bad amount {s!r}") from exc


def join_bundle(s: tuple[int, ...]) -> str:
    return ";".join(str(j) for j in s)


def split_bundle(s: str) -> tuple[int, ...]:
    return bundle(int(x) for x in s.split(";")) if s else ()


def _valuation_doc(v: Valuation) -> dict:
    doc: dict[str, Any] = {
        "kind": v.kind,
        "tie_break": v.tie_break.kind,
        "bid_at_zero_utility": v.bid_at_zero_utility,
    }
    if v.tie_break.priority:
        doc["priority"] = [list(s) for s in v.tie_break.priority]
    if isinstance(v, (UnitDemand, Additive)):
        doc["values"] = {str(j): rat(x) for j, x in sorted(v.item_values.items())}
        if isinstance(v, Additive) and v.demand_cap is not None:
            doc["demand_cap"] = v.demand_cap
    elif isinstance(v, BundleList):
        entries = []
        for e in v.entries:
            ed: dict[str, Any] = {"bundle": list(e.bundle), "value": rat(e.value)}
            if e.bid_at_zero is not None:
                ed["bid_at_zero"] = e.bid_at_zero
            entries.append(ed)
        doc["entries"] = entries
    else:
        raise InputError(f"cannot serialise valuation of kind {v.kind!r}")
    return doc


def _parse_valuation(doc: dict) -> Valuation:
    try:
        kind = doc["kind"]
        rule = TieBreakRule(doc.get("tie_break", "lowest_index"), tuple(bundle(s) for s in doc.get("priority", ())))
        common = {"tie_break": rule, "bid_at_zero_utility": bool(doc.get("bid_at_zero_utility", False))}
        if kind in ("unit", "additive"):
            values = {int(j): parse_rat(x) for j, x in doc["values"].items()}
            if kind == "unit":
                return UnitDemand(values, **common)
            return Additive(values, doc.get("demand_cap"), **common)
        if kind == "xor":
            entries = tuple(
                BundleEntry(bundle(e["bundle"]), parse_rat(e["value"]), e.get("bid_at_zero"))
                for e in doc["entries"]
            )
            return BundleList(entries, **common)
    except (KeyError, TypeError, AttributeError, ValueError) as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(f"malformed bidder block: {exc!r}") from exc
    raise InputError(f"unknown valuation kind {kind!r}")


def config_doc(cfg: AuctionConfig) -> dict:
    return {
        "epsilon": rat(cfg.policy.epsilon),
        "policy": cfg.policy.kind,
        "stop": cfg.stop,
        "max_rounds": cfg.max_rounds,
    }


def parse_config(doc: dict) -> AuctionConfig:
    try:
        return AuctionConfig(
            IncrementPolicy(doc.get("policy", "proportional"), parse_rat(doc.get("epsilon", "1/1"))),
            doc.get("stop", "porter"),
            int(doc.get("max_rounds", 100_000)),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(f"malformed config block: {exc!r}") from exc


def instance_doc(inst: Instance, config: AuctionConfig | None = None) -> dict:
    doc: dict[str, Any] = {
        "format": FORMAT_VERSION,
        "n": inst.n,
        "m": inst.m,
        "cap": inst.cap,
        "bidders": [_valuation_doc(v) for v in inst.valuations],
    }
    if inst.scale_w is not None:
        doc["W"] = inst.scale_w
    if config is not None:
        doc["config"] = config_doc(config)
    return doc


def dumps_instance(inst: Instance, config: AuctionConfig | None = None) -> str:
    return json.dumps(instance_doc(inst, config), sort_keys=True, indent=2) + "\n"


def loads_instance(text: str) -> tuple[Instance, AuctionConfig | None]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"instance file is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or not isinstance(doc.get("bidders"), list):
        raise InputError("instance file needs a 'bidders' list")
    vals = tuple(_parse_valuation(b) for b in doc["bidders"])
    try:
        inst = Instance(int(doc["m"]), vals, int(doc.get("cap", 1)), doc.get("W"))
    except (KeyError, TypeError) as exc:
        raise InputError(f"malformed header: {exc!r}") from exc
    if "n" in doc and doc["n"] != inst.n:
        raise InputError(f"header says n={doc['n']} but {inst.n} bidders follow")
    cfg = parse_config(doc["config"]) if "config" in doc else None
    return inst, cfg


# --------------------------------------------------------------------------
# Traces


def trace_rows(trace: AuctionTrace, result: AuctionResult | None = None) -> list[list[str]]:
    """Rows in event order: prices, bids, utilities per round, then one stop row per winner."""
    rows = []
    for rec in trace.rounds:
        t = str(rec.round)
        for j, p in enumerate(rec.prices):
            rows.append([t, "price", "", str(j), rat(p)])
        for b in rec.bids:
            rows.append([t, "bid", str(b.bidder), join_bundle(b.bundle), rat(b.price)])
        for i in sorted(rec.utilities):
            rows.append([t, "utility", str(i), "", rat(rec.utilities[i])])
    if result is not None:
        t = str(trace.final_round)
        winners = sorted(result.allocation.assignments.items())
        if not winners:
            rows.append([t, "stop", "", "", rat(Fraction(0))])
        for i, a in winners:
            rows.append([t, "stop", str(i), join_bundle(a.bundle), rat(a.payment)])
    return rows


def dumps_trace(trace: AuctionTrace, result: AuctionResult | None = None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_COLUMNS)
    w.writerows(trace_rows(trace, result))
    return buf.getvalue()


def loads_trace(text: str) -> list[dict]:
    """Parse trace CSV into dicts with exact amounts; rejects decreasing rounds."""
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames != TRACE_COLUMNS:
        raise InputError(f"trace header must be {TRACE_COLUMNS}")
    out = []
    last = -1
    for row in reader:
        r = int(row["round"])
        if r < last:
            raise InputError(f"round {r} after round {last}")
        last = r
        out.append(
            {
                "round": r,
                "event": row["event"],
                "bidder": int(row["bidder"]) if row["bidder"] else None,
                "bundle": split_bundle(row["item_or_bundle"]),
                "amount": parse_rat(row["amount"]),
            }
        )
    return out


def result_doc(inst: Instance, result: AuctionResult) -> dict:
    return {
        "allocation": {
            str(i): {"bundle": list(a.bundle), "payment": rat(a.payment)}
            for i, a in sorted(result.allocation.assignments.items())
        },
        "welfare": rat(result.welfare(inst)),
        "revenue": rat(result.revenue),
        "rounds": result.rounds,
        "reason": result.trace.reason,
        "final_prices": [rat(p) for p in result.prices],
    }


def dumps_result(inst: Instance, result: AuctionResult) -> str:
    return json.dumps(result_doc(inst, result), sort_keys=True, indent=2) + "\n"
