from __future__ import annotations

import itertools
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from clockauction.model import (
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
    brute_force_max_utility,
    bundle,
    demand_query,
    max_utility,
    money,
    pairwise_disjoint,
    utility,
    value_of,
)

F = Fraction


def all_bundles(m):
    for r in range(1, m + 1):
        yield from itertools.combinations(range(m), r)


def oracle_demand(val, prices):
    """Enumerate every bundle; keep the max-utility ones that are actually biddable."""
    m = len(prices)
    scored = [(s, val.value(s) - sum(prices[j] for j in s)) for s in all_bundles(m)]
    best = max((u for _, u in scored), default=F(-1))
    return best, {s for s, u in scored if u == best}


# ---------------------------------------------------------------- basics


def test_money_rejects_float():
    with pytest.raises(InputError):
        money(0.5)
    assert money("3/4") == F(3, 4)
    assert money(2) == F(2)


def test_bundle_is_sorted_and_deduplicated():
    assert bundle([3, 1, 3]) == (1, 3)
    with pytest.raises(InputError):
        bundle([-1, 2])


def test_pairwise_disjoint():
    assert pairwise_disjoint([(0, 1), (2,), ()])
    assert not pairwise_disjoint([(0, 1), (1, 2)])


def test_unit_demand_value_is_max():
    v = UnitDemand({0: F(3), 2: F(5)})
    assert v.value((0, 2)) == 5
    assert v.value((1,)) == 0
    assert v.value(()) == 0


def test_additive_with_cap_takes_best_items():
    v = Additive({0: F(1), 1: F(4), 2: F(2)}, demand_cap=2)
    assert v.value((0, 1, 2)) == 6
    assert Additive({0: F(1), 1: F(4)}).value((0, 1)) == 5


def test_xor_value_uses_best_contained_entry():
    v = BundleList((BundleEntry((0, 1), F(5)), BundleEntry((1,), F(3)), BundleEntry((2,), F(4))))
    assert v.value((0, 1)) == 5
    assert v.value((1, 2)) == 4
    assert v.value((0,)) == 0
    assert v.value((0, 1, 2)) == 5


def test_value_of_checks_range():
    v = UnitDemand({0: F(1)})
    with pytest.raises(InputError):
        value_of(v, (3,), m=2)


def test_utility_rejects_negative_prices():
    with pytest.raises(InputError):
        utility(UnitDemand({0: F(1)}), (0,), (F(-1),))
    assert utility(UnitDemand({0: F(3)}), (0,), (F(1),)) == 2


def test_instance_validation():
    with pytest.raises(InputError):
        Instance(2, (UnitDemand({5: F(1)}),))
    with pytest.raises(InputError):
        Instance(2, (UnitDemand({0: F(-1)}),))
    with pytest.raises(InputError):
        Instance(2, (BundleList((BundleEntry((0, 1), F(1)),)),), cap=1)
    with pytest.raises(InputError):
        Instance(2, (UnitDemand({0: F(3)}),), scale_w=2)
    with pytest.raises(InputError):
        Instance(2, ())
    assert Instance(2, (UnitDemand({0: F(4)}),), scale_w=2).n == 1


def test_tie_break_rules():
    with pytest.raises(InputError):
        TieBreakRule("random")
    with pytest.raises(InputError):
        TieBreakRule("lowest_index", ((0,),))
    rule = TieBreakRule("explicit", ((2,), (0,)))
    assert sorted([(0,), (1,), (2,)], key=lambda s: rule.key(s, F(0))) == [(2,), (0,), (1,)]


# ---------------------------------------------------------------- demand queries


def test_demand_query_tie_rules():
    vals = {0: F(2), 1: F(3)}
    prices = (F(0), F(1))  # both utilities 2
    assert demand_query(UnitDemand(vals, tie_break=LOWEST_INDEX), prices) == (0,)
    assert demand_query(UnitDemand(vals, tie_break=LOWEST_VALUE), prices) == (0,)
    assert demand_query(UnitDemand(vals, tie_break=HIGHEST_VALUE), prices) == (1,)


def test_zero_utility_flag():
    prices = (F(2),)
    assert demand_query(UnitDemand({0: F(2)}), prices) is None
    assert demand_query(UnitDemand({0: F(2)}, bid_at_zero_utility=True), prices) == (0,)
    assert demand_query(UnitDemand({0: F(1)}, bid_at_zero_utility=True), prices) is None


def test_per_entry_zero_flag_overrides_valuation():
    v = BundleList((BundleEntry((0,), F(1)), BundleEntry((1,), F(1), bid_at_zero=True)))
    assert demand_query(v, (F(1), F(1))) == (1,)


def test_single_item_bidder_at_zero_prices():
    assert demand_query(UnitDemand({0: F(5)}), (F(0),)) == (0,)


def test_additive_guard_on_enumeration():
    v = Additive({j: F(1) for j in range(40)})
    with pytest.raises(InputError):
        demand_query(v, (F(0),) * 40)


rationals = st.fractions(min_value=0, max_value=6, max_denominator=3)


@st.composite
def valuation_and_prices(draw):
    m = draw(st.integers(1, 4))
    kind = draw(st.sampled_from(["unit", "additive", "xor"]))
    rule = draw(st.sampled_from([LOWEST_INDEX, LOWEST_VALUE, HIGHEST_VALUE]))
    zero = draw(st.booleans())
    if kind == "unit":
        vals = draw(st.dictionaries(st.integers(0, m - 1), rationals, min_size=1))
        val = UnitDemand(vals, tie_break=rule, bid_at_zero_utility=zero)
    elif kind == "additive":
        vals = draw(st.dictionaries(st.integers(0, m - 1), rationals, min_size=1))
        cap = draw(st.one_of(st.none(), st.integers(1, m)))
        val = Additive(vals, cap, tie_break=rule, bid_at_zero_utility=zero)
    else:
        entries = draw(
            st.lists(
                st.builds(
                    BundleEntry,
                    st.lists(st.integers(0, m - 1), min_size=1, max_size=m).map(bundle),
                    rationals,
                ),
                min_size=1,
                max_size=4,
            )
        )
        val = BundleList(tuple(entries), tie_break=rule, bid_at_zero_utility=zero)
    prices = tuple(draw(st.lists(rationals, min_size=m, max_size=m)))
    return val, prices


@given(valuation_and_prices())
def test_demand_query_is_utility_maximising(vp):
    val, prices = vp
    best, argmax = oracle_demand(val, prices)
    got = demand_query(val, prices)
    if got is None:
        # dropping out is only allowed when nothing has positive utility
        assert best <= 0
    else:
        u = val.value(got) - sum(prices[j] for j in got)
        assert u == max(best, F(0))
        if u == 0:
            assert val.bid_at_zero_utility or isinstance(val, BundleList)


@given(valuation_and_prices())
def test_max_utility_matches_brute_force(vp):
    val, prices = vp
    best, _ = oracle_demand(val, prices)
    assert max_utility(val, prices) == max(best, F(0))
    assert brute_force_max_utility(val, prices) == max(best, F(0))
    assert brute_force_max_utility(val, prices, items=val.items()) == max(best, F(0))


@given(valuation_and_prices())
def test_positive_utility_never_drops_out(vp):
    val, prices = vp
    best, _ = oracle_demand(val, prices)
    if best > 0:
        assert demand_query(val, prices) is not None
