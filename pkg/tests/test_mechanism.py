from __future__ import annotations

from dataclasses import replace
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from clockauction.allocation import Allocation, Assignment, winner_determination
from clockauction.generators import gen_random
from clockauction.mechanism import (
    DISJOINT,
    FIXED,
    PORTER,
    PROPORTIONAL,
    AuctionConfig,
    AuctionTruncated,
    IncrementPolicy,
    apply_increments,
    check_stop,
    collect_bids,
    conflicts,
    run_cca,
)
from clockauction.model import (
    HIGHEST_VALUE,
    LOWEST_INDEX,
    Bid,
    BundleEntry,
    BundleList,
    InputError,
    Instance,
    UnitDemand,
    price_of,
)

F = Fraction


def test_config_validation():
    with pytest.raises(InputError):
        IncrementPolicy("double")
    with pytest.raises(InputError):
        IncrementPolicy(PROPORTIONAL, F(0))
    with pytest.raises(InputError):
        AuctionConfig(stop="never")
    with pytest.raises(InputError):
        AuctionConfig(max_rounds=0)


def test_proportional_increment_counts_bids():
    bids = [Bid(0, (0, 1), F(0)), Bid(1, (1,), F(0))]
    got = apply_increments((F(0), F(0), F(0)), bids, IncrementPolicy(PROPORTIONAL, F(1, 2)))
    assert got == (F(1, 2), F(1), F(0))


def test_fixed_increment_needs_excess_demand():
    bids = [Bid(0, (0, 1), F(0)), Bid(1, (1,), F(0))]
    got = apply_increments((F(0), F(0), F(0)), bids, IncrementPolicy(FIXED, F(1)))
    assert got == (F(0), F(1), F(0))


def test_conflicts():
    alloc = Allocation({0: Assignment((0,), F(1))})
    assert conflicts([Bid(1, (0, 1), F(1))], alloc)
    assert not conflicts([Bid(0, (0,), F(1)), Bid(1, (1,), F(0))], alloc)


def test_check_stop_rules_differ():
    # old high bid by 0 on item 0 still wins WD, but 1 now bids on item 0 alone
    history = [Bid(0, (0,), F(5), 0), Bid(1, (1,), F(1), 0), Bid(0, (1,), F(2), 1), Bid(1, (0,), F(2), 1)]
    current = history[2:]
    assert check_stop(current, history, DISJOINT) is not None
    assert check_stop(current, history, PORTER) is None


def test_single_bidder_wins_at_price_zero():
    inst = Instance(2, (UnitDemand({0: F(3), 1: F(5)}),))
    res = run_cca(inst)
    assert res.rounds == 1
    assert res.allocation.assignments[0].bundle == (1,)
    assert res.revenue == 0
    assert res.welfare(inst) == 5


def test_two_bidders_one_item_price_path():
    inst = Instance(1, (UnitDemand({0: F(3)}), UnitDemand({0: F(5)})))
    res = run_cca(inst, AuctionConfig(IncrementPolicy(PROPORTIONAL, F(1))))
    prices = [r.prices[0] for r in res.trace.rounds]
    # both bid while the price is below 3, each adding 1
    assert prices[:3] == [0, 2, 4]
    assert res.allocation.winners() == [1]
    assert res.welfare(inst) == 5


def test_everyone_drops_out():
    inst = Instance(1, (UnitDemand({0: F(1)}), UnitDemand({0: F(1)})))
    res = run_cca(inst, AuctionConfig(IncrementPolicy(PROPORTIONAL, F(1))))
    assert res.trace.reason == "all_dropped"
    assert res.trace.rounds[-1].bids == ()
    assert len(res.allocation) == 1


def test_truncation_raises_with_trace():
    inst = Instance(1, (UnitDemand({0: F(100)}), UnitDemand({0: F(100)})))
    with pytest.raises(AuctionTruncated) as exc:
        run_cca(inst, AuctionConfig(IncrementPolicy(PROPORTIONAL, F(1)), max_rounds=5))
    assert len(exc.value.trace.rounds) == 5
    assert exc.value.trace.reason == "truncated"


def test_stall_is_reported_early():
    inst = gen_random("unit", 3, 3, 1, (1, 3), seed=126)
    with pytest.raises(AuctionTruncated) as exc:
        run_cca(inst, AuctionConfig(IncrementPolicy(FIXED, F(1)), PORTER, 100_000))
    tr = exc.value.trace
    assert tr.reason == "stalled"
    a, b = tr.rounds[-2], tr.rounds[-1]
    assert b.active == a.active
    # the last round raised nothing, so the next would repeat it
    assert apply_increments(b.prices, b.bids, IncrementPolicy(FIXED, F(1))) == b.prices
    # and the stopping rule does fail there
    assert check_stop(b.bids, tr.history(), PORTER) is None


def test_collect_bids_records_prices():
    inst = Instance(2, (UnitDemand({0: F(3)}, tie_break=LOWEST_INDEX), UnitDemand({1: F(1)}, tie_break=HIGHEST_VALUE)))
    bids, active = collect_bids(inst, (F(1), F(1)), [0, 1], 4)
    assert bids == [Bid(0, (0,), F(1), 4)]
    assert active == [0]


# ---------------------------------------------------------------- properties

configs = st.builds(
    AuctionConfig,
    st.builds(IncrementPolicy, st.sampled_from([PROPORTIONAL, FIXED]), st.sampled_from([F(1), F(1, 2), F(2)])),
    st.sampled_from([PORTER, DISJOINT]),
    st.just(3000),
)


@given(
    kind=st.sampled_from(["unit", "xor"]),
    n=st.integers(1, 4),
    m=st.integers(1, 4),
    seed=st.integers(0, 10_000),
    cfg=configs,
)
@settings(max_examples=60, deadline=None)
def test_run_invariants(kind, n, m, seed, cfg):
    raw = gen_random(kind, n, m, min(m, 2), (1, 2), seed)
    # divide W back out so runs stay short
    inst = Instance(raw.m, tuple(_shrink(v, raw.scale_w) for v in raw.valuations), raw.cap)
    try:
        res = run_cca(inst, cfg)
    except AuctionTruncated as exc:
        trace, res = exc.trace, None
    else:
        trace = res.trace
    rounds = trace.rounds
    assert rounds[0].prices == inst.zero_prices()
    for a, b in zip(rounds, rounds[1:]):
        assert all(q >= p for p, q in zip(a.prices, b.prices))
        assert b.prices == apply_increments(a.prices, a.bids, cfg.policy)
    for r in rounds:
        assert len({b.bidder for b in r.bids}) == len(r.bids)
        for b in r.bids:
            assert b.price == price_of(b.bundle, r.prices)
            assert inst.valuations[b.bidder].value(b.bundle) >= b.price
    if res is not None:
        assert res.welfare(inst) >= res.revenue
        # the incremental dominance filter agrees with WD over the raw history
        assert res.allocation == winner_determination(trace.history())
        assert res.rounds == len(rounds)


def _shrink(val, w):
    if isinstance(val, BundleList):
        return replace(val, entries=tuple(BundleEntry(e.bundle, e.value / w, e.bid_at_zero) for e in val.entries))
    return replace(val, item_values={j: v / w for j, v in val.item_values.items()})
