from datetime import date

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blockscope.bankstrat import (
    CATEGORIES,
    categorize,
    daily_net_balance,
    group_by_quarter,
    inventory,
    transition_matrix,
)
from blockscope.errors import ContractError
from blockscope.netcore import DIRECTED_WEIGHTED, AggregatedNetwork


def day_net(w, nodes):
    return AggregatedNetwork(tuple(nodes), np.asarray(w, dtype=float), DIRECTED_WEIGHTED)


def single_loan_day(lender, borrower, volume, roster):
    n = len(roster)
    w = np.zeros((n, n))
    idx = {b: i for i, b in enumerate(roster)}
    w[idx[lender], idx[borrower]] = volume
    return day_net(w, roster)


# --- daily net balance -----------------------------------------------------


def test_net_balance_lend_minus_borrow():
    net = day_net([[0, 10, 0], [0, 0, 0], [4, 0, 0]], ["A", "B", "C"])
    assert daily_net_balance(net, "A") == 6.0


def test_net_balance_inactive_bank_zero():
    net = day_net([[0, 1], [0, 0]], ["A", "B"])
    assert daily_net_balance(net, "ZZZ") == 0.0


def test_net_balance_matches_row_column_oracle():
    rng = np.random.default_rng(3)
    w = rng.uniform(0, 5, (5, 5)) * (rng.random((5, 5)) < 0.6)
    np.fill_diagonal(w, 0)
    roster = [f"b{i}" for i in range(5)]
    net = day_net(w, roster)
    for i, bank in enumerate(roster):
        want = w[i, :].sum() - w[:, i].sum()
        assert daily_net_balance(net, bank) == pytest.approx(want, abs=1e-12)


def test_net_balances_sum_to_zero_exactly():
    rng = np.random.default_rng(5)
    for _ in range(20):
        w = rng.uniform(0, 9, (6, 6)) * (rng.random((6, 6)) < 0.5)
        np.fill_diagonal(w, 0)
        roster = [f"b{i}" for i in range(6)]
        net = day_net(w, roster)
        total = sum(daily_net_balance(net, b) for b in roster)
        assert abs(total) < 1e-9


# --- inventory ----------------------------------------------------------------


def test_inventory_steady_lender():
    roster = ["L", "B"]
    days = [single_loan_day("L", "B", 5.0, roster) for _ in range(3)]
    series = inventory(days, "L")
    assert series.cumulative == (5.0, 10.0, 15.0)
    assert series.normalizer == 15.0
    assert series.normalized == pytest.approx((1 / 3, 2 / 3, 1.0))


def test_inventory_borrow_then_lend():
    roster = ["X", "Y"]
    days = [single_loan_day("Y", "X", 5.0, roster), single_loan_day("X", "Y", 5.0, roster)]
    series = inventory(days, "X")
    assert series.cumulative == (-5.0, 0.0)
    assert series.normalizer == 5.0
    assert series.normalized == (-1.0, 0.0)


def test_inventory_inactive_bank_flagged():
    roster = ["A", "B", "C"]
    days = [single_loan_day("A", "B", 1.0, roster)]
    series = inventory(days, "C")
    assert not series.active
    assert series.normalizer is None
    assert series.normalized == (0.0,)


def test_inventory_matches_recomputation_oracle():
    rng = np.random.default_rng(11)
    roster = [f"b{i}" for i in range(4)]
    days = []
    for _ in range(10):
        w = rng.uniform(0, 4, (4, 4)) * (rng.random((4, 4)) < 0.5)
        np.fill_diagonal(w, 0)
        days.append(day_net(w, roster))
    series = inventory(days, "b1")
    running = 0.0
    for delta, cum in zip(series.daily_delta, series.cumulative):
        running += delta
        assert cum == pytest.approx(running, abs=1e-9)
    assert all(-1.0 - 1e-12 <= x <= 1.0 + 1e-12 for x in series.normalized)
    if series.active and series.normalizer:
        assert max(abs(x) for x in series.normalized) == pytest.approx(1.0)


# --- categorization -------------------------------------------------------------


def test_categorize_median_splits():
    # target balances P=-10, Q=-2, R=+7, S=+1, T inactive; bank W (not in the
    # categorized roster) absorbs the imbalance so every loan nets out
    roster = ["P", "Q", "R", "S", "T"]
    everyone = roster + ["W"]
    w = np.zeros((6, 6))
    idx = {b: i for i, b in enumerate(everyone)}
    w[idx["R"], idx["P"]] = 7.0
    w[idx["W"], idx["P"]] = 3.0
    w[idx["W"], idx["Q"]] = 2.0
    w[idx["S"], idx["W"]] = 1.0
    day = day_net(w, everyone)
    balances = {b: daily_net_balance(day, b) for b in roster}
    assert balances == {"P": -10.0, "Q": -2.0, "R": 7.0, "S": 1.0, "T": 0.0}
    cats = categorize([day], roster)
    assert cats == {"P": "BB", "Q": "SB", "R": "BL", "S": "SL", "T": "NA"}


def test_categorize_all_inactive():
    roster = ["A", "B"]
    day = day_net(np.zeros((2, 2)), roster)
    assert categorize([day], roster) == {"A": "NA", "B": "NA"}


def test_categorize_matches_sort_split_oracle():
    rng = np.random.default_rng(13)
    roster = [f"b{i:02d}" for i in range(20)]
    days = []
    for _ in range(15):
        w = rng.uniform(0, 6, (20, 20)) * (rng.random((20, 20)) < 0.15)
        np.fill_diagonal(w, 0)
        days.append(day_net(w, roster))
    cats = categorize(days, roster)
    balances = {
        b: sum(daily_net_balance(d, b) for d in days) for b in roster
    }
    borrowers = sorted(abs(v) for b, v in balances.items() if v < 0)
    lenders = sorted(abs(v) for b, v in balances.items() if v >= 0)
    med_b = float(np.median(borrowers)) if borrowers else 0.0
    med_l = float(np.median(lenders)) if lenders else 0.0
    for bank, v in balances.items():
        if v < 0:
            assert cats[bank] == ("BB" if abs(v) > med_b else "SB")
        else:
            assert cats[bank] == ("BL" if abs(v) > med_l else "SL")


def test_categorize_partitions_roster():
    rng = np.random.default_rng(17)
    roster = [f"b{i}" for i in range(12)]
    w = rng.uniform(0, 3, (12, 12)) * (rng.random((12, 12)) < 0.2)
    np.fill_diagonal(w, 0)
    cats = categorize([day_net(w, roster)], roster)
    assert set(cats) == set(roster)
    assert set(cats.values()) <= set(CATEGORIES)


def test_balance_at_median_is_small_category():
    roster = ["A", "B", "C", "X", "Y", "Z"]
    w = np.zeros((6, 6))
    idx = {b: i for i, b in enumerate(roster)}
    # lenders A=4, B=2, C=2 borrow side X,Y,Z; medians: lenders 2 -> B,C small
    w[idx["A"], idx["X"]] = 4.0
    w[idx["B"], idx["Y"]] = 2.0
    w[idx["C"], idx["Z"]] = 2.0
    cats = categorize([day_net(w, roster)], roster)
    assert cats["A"] == "BL"
    assert cats["B"] == "SL" and cats["C"] == "SL"


# --- transitions ----------------------------------------------------------------


def test_transition_identity():
    cats = {"A": "BB", "B": "SL", "C": "NA"}
    tm = transition_matrix(cats, cats)
    for i, cat in enumerate(CATEGORIES):
        present = sum(1 for v in cats.values() if v == cat)
        if present:
            assert tm.percentages[i, i] == 100.0
    assert tm.row_counts == (1, 0, 1, 0, 1)


def test_transition_single_switch():
    before = {"A": "BB"}
    after = {"A": "BL"}
    tm = transition_matrix(before, after)
    assert tm.percentages[0].tolist() == [0.0, 0.0, 0.0, 100.0, 0.0]


def test_transition_matches_hand_count():
    before = {"A": "BB", "B": "BB", "C": "SL", "D": "NA", "E": "BL"}
    after = {"A": "SB", "B": "BB", "C": "NA", "D": "NA", "E": "SL"}
    tm = transition_matrix(before, after)
    assert tm.percentages[0, 0] == 50.0 and tm.percentages[0, 1] == 50.0
    assert tm.percentages[2, 4] == 100.0  # SL -> NA
    assert tm.percentages[3, 2] == 100.0  # BL -> SL
    assert tm.percentages[4, 4] == 100.0  # NA stays NA
    for i in range(5):
        if tm.row_counts[i]:
            assert abs(tm.percentages[i].sum() - 100.0) <= 1.0


def test_transition_requires_shared_roster():
    with pytest.raises(ContractError):
        transition_matrix({"A": "BB"}, {"B": "BB"})


def test_transition_csv_shape():
    cats = {"A": "BB", "B": "SB", "C": "SL", "D": "BL", "E": "NA"}
    text = transition_matrix(cats, cats).to_csv()
    lines = text.strip().splitlines()
    assert lines[0] == "from,BB,SB,SL,BL,NA,n_banks"
    assert len(lines) == 6
    assert lines[1].startswith("BB,100.0")


def test_group_by_quarter():
    roster = ["A", "B"]
    pairs = [
        (date(2011, 1, 10), single_loan_day("A", "B", 1.0, roster)),
        (date(2011, 2, 10), single_loan_day("A", "B", 1.0, roster)),
        (date(2011, 4, 1), single_loan_day("B", "A", 1.0, roster)),
    ]
    groups = group_by_quarter(pairs)
    assert set(groups) == {(2011, 1), (2011, 2)}
    assert len(groups[(2011, 1)]) == 2


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=25, deadline=None)
def test_conservation_property(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 9))
    w = rng.uniform(0, 100, (n, n)) * (rng.random((n, n)) < 0.5)
    np.fill_diagonal(w, 0)
    roster = [f"b{i}" for i in range(n)]
    net = day_net(w, roster)
    assert abs(sum(daily_net_balance(net, b) for b in roster)) < 1e-9
