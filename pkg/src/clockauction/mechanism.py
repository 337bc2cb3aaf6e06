"""The combinatorial clock auction as a round-by-round state machine."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .allocation import Allocation, winner_determination
from .model import (
    Bid,
    Bundle,
    InputError,
    Instance,
    Prices,
    demand_query,
    pairwise_disjoint,
    price_of,
)

log = logging.getLogger(__name__)

PROPORTIONAL = "proportional"
FIXED = "fixed"
PORTER = "porter"
DISJOINT = "disjoint"


@dataclass(frozen=True)
class IncrementPolicy:
    """``proportional``: +epsilon per bid containing the item.  ``fixed``: +epsilon iff two or more bids do."""

    kind: str = PROPORTIONAL
    epsilon: Fraction = Fraction(1)

    def __post_init__(self) -> None:
        if self.kind not in (PROPORTIONAL, FIXED):
            raise InputError(f"unknown increment policy {self.kind!r}")
        object.__setattr__(self, "epsilon", Fraction(self.epsilon))
        if self.epsilon <= 0:
            raise InputError("epsilon must be positive")


@dataclass(frozen=True)
class AuctionConfig:
    policy: IncrementPolicy = IncrementPolicy()
    stop: str = PORTER
    max_rounds: int = 100_000

    def __post_init__(self) -> None:
        if self.stop not in (PORTER, DISJOINT):
            raise InputError(f"unknown stopping rule {self.stop!r}")
        if self.max_rounds < 1:
            raise InputError("max_rounds must be at least 1")


@dataclass(frozen=True)
class RoundRecord:
    round: int
    prices: Prices
    bids: tuple[Bid, ...]
    utilities: dict[int, Fraction]
    active: tuple[int, ...]


@dataclass
class AuctionTrace:
    rounds: list[RoundRecord] = field(default_factory=list)
    final_prices: Prices = ()
    reason: str = ""

    @property
    def final_round(self) -> int:
        return self.rounds[-1].round if self.rounds else -1

    def history(self) -> list[Bid]:
        return [b for r in self.rounds for b in r.bids]


@dataclass
class AuctionResult:
    allocation: Allocation
    prices: Prices
    trace: AuctionTrace
    rounds: int

    @property
    def revenue(self) -> Fraction:
        return self.allocation.revenue

    def welfare(self, instance: Instance) -> Fraction:
        return self.allocation.welfare(instance)


class AuctionTruncated(RuntimeError):
    """Raised when ``max_rounds`` elapse without the stopping rule firing.

    Also raised early, with ``trace.reason == "stalled"``, once a round leaves
    prices and the active set unchanged, since the state then repeats forever.
    """

    def __init__(self, trace: AuctionTrace):
        super().__init__(f"auction did not stop within {len(trace.rounds)} rounds")
        self.trace = trace


def collect_bids(
    instance: Instance, prices: Sequence[Fraction], active: Iterable[int], round_: int = 0
) -> tuple[list[Bid], list[int]]:
    """One truthful bid per active bidder; bidders with nothing worth bidding on drop out."""
    bids: list[Bid] = []
    still: list[int] = []
    for i in active:
        s = demand_query(instance.valuations[i], prices)
        if s is None:
            continue
        still.append(i)
        bids.append(Bid(i, s, price_of(s, prices), round_))
    return bids, still


def apply_increments(prices: Sequence[Fraction], bids: Iterable[Bid], policy: IncrementPolicy) -> Prices:
    demand = [0] * len(prices)
    for b in bids:
        for j in b.bundle:
            demand[j] += 1
    if policy.kind == PROPORTIONAL:
        return tuple(p + policy.epsilon * d for p, d in zip(prices, demand))
    return tuple(p + policy.epsilon if d >= 2 else p for p, d in zip(prices, demand))


def conflicts(round_bids: Iterable[Bid], allocation: Allocation) -> bool:
    """True if some current bid shares an item with a bundle allocated to a different bidder."""
    owner: dict[int, int] = {}
    for i, a in allocation.assignments.items():
        for j in a.bundle:
            owner[j] = i
    return any(owner.get(j, b.bidder) != b.bidder for b in round_bids for j in b.bundle)


def check_stop(round_bids: Sequence[Bid], history: Sequence[Bid], rule: str) -> Allocation | None:
    """The allocation to output if the auction stops after this round, else ``None``."""
    if not pairwise_disjoint(b.bundle for b in round_bids):
        return None
    alloc = winner_determination(history)
    if rule == PORTER and conflicts(round_bids, alloc):
        return None
    return alloc


def run_cca(instance: Instance, config: AuctionConfig = AuctionConfig()) -> AuctionResult:
    prices = instance.zero_prices()
    active = list(range(instance.n))
    # Incremental form of dominant_bids(history): same keys, same order, same winners.
    best: dict[tuple[int, Bundle], Bid] = {}
    trace = AuctionTrace()
    for t in range(config.max_rounds):
        bids, active = collect_bids(instance, prices, active, t)
        utils = {b.bidder: instance.valuations[b.bidder].value(b.bundle) - b.price for b in bids}
        trace.rounds.append(RoundRecord(t, prices, tuple(bids), utils, tuple(active)))
        for b in bids:
            cur = best.get((b.bidder, b.bundle))
            if cur is None or b.price > cur.price:
                best[b.bidder, b.bundle] = b
        new_prices = apply_increments(prices, bids, config.policy)
        if not bids:
            alloc = winner_determination(list(best.values()))
            reason = "all_dropped"
        else:
            alloc = check_stop(bids, list(best.values()), config.stop)
            reason = "stopped"
        if alloc is not None:
            trace.final_prices = new_prices
            trace.reason = reason
            log.debug("auction ended in round %d (%s)", t, reason)
            return AuctionResult(alloc, new_prices, trace, t + 1)
        if t > 0 and new_prices == prices and trace.rounds[-2].active == tuple(active):
            # Same prices and bidders as last round: every later round repeats this one.
            trace.final_prices = prices
            trace.reason = "stalled"
            raise AuctionTruncated(trace)
        prices = new_prices
    trace.final_prices = prices
    trace.reason = "truncated"
    raise AuctionTruncated(trace)


def bids_on(trace: AuctionTrace, bidder: int) -> list[Bid]:
    return [b for r in trace.rounds for b in r.bids if b.bidder == bidder]


def bundle_prices(trace: AuctionTrace, s: Bundle) -> list[Fraction]:
    return [price_of(s, r.prices) for r in trace.rounds]


__all__ = [
    "AuctionConfig",
    "AuctionResult",
    "AuctionTrace",
    "AuctionTruncated",
    "Bid",
    "IncrementPolicy",
    "RoundRecord",
    "apply_increments",
    "check_stop",
    "collect_bids",
    "conflicts",
    "run_cca",
    "DISJOINT",
    "FIXED",
    "PORTER",
    "PROPORTIONAL",
]
