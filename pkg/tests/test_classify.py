from datetime import date

import numpy as np
import pytest

from blockscope.classify import (
    BIPARTITE,
    CORE_PERIPHERY,
    MODULAR,
    RANDOM,
    align_lender_borrower,
    label_from_affinity,
    rank_test,
    structure_census,
)
from blockscope.errors import ContractError, UnsupportedStructureError
from blockscope.inference import InferenceConfig, select_model
from blockscope.rng import spawn_seed
from blockscope.sbm import BERNOULLI, AffinityMatrix, BlockAssignment, sample


def test_label_weekly_average_affinity_is_bipartite():
    # observed weekly percentages: cross mean (0.20 + 23) / 2 = 11.6 beats both diagonals
    p = np.array([[1.16, 0.20], [23.0, 3.70]])
    assert label_from_affinity(p, 2).value == BIPARTITE


def test_label_modular():
    p = np.array([[0.9, 0.1], [0.1, 0.8]])
    assert label_from_affinity(p, 2).value == MODULAR


def test_label_core_periphery_block_one():
    p = np.array([[0.9, 0.5], [0.5, 0.1]])
    lab = label_from_affinity(p, 2)
    assert lab.value == CORE_PERIPHERY
    assert lab.core_block == 0


def test_label_core_periphery_block_two():
    p = np.array([[0.1, 0.5], [0.5, 0.9]])
    assert label_from_affinity(p, 2).core_block == 1


def test_label_random_for_one_block():
    assert label_from_affinity(np.array([[0.5]]), 1).value == RANDOM


def test_label_rejects_three_blocks():
    with pytest.raises(UnsupportedStructureError):
        label_from_affinity(np.eye(3), 3)


def test_label_scale_invariant():
    rng = np.random.default_rng(3)
    for _ in range(30):
        p = rng.uniform(0.01, 0.9, (2, 2))
        base = label_from_affinity(p, 2)
        scaled = label_from_affinity(p * 7.3, 2)
        assert base == scaled


def test_label_relabel_invariant():
    rng = np.random.default_rng(5)
    for _ in range(30):
        p = rng.uniform(0.01, 0.9, (2, 2))
        a = label_from_affinity(p, 2)
        b = label_from_affinity(p[::-1, ::-1], 2)
        assert a.value == b.value
        if a.core_block is not None:
            assert b.core_block == 1 - a.core_block


def test_label_ties_resolve_to_modular():
    assert label_from_affinity(np.array([[0.5, 0.5], [0.5, 0.5]]), 2).value == MODULAR
    assert label_from_affinity(np.array([[0.5, 0.3], [0.3, 0.3]]), 2).value == MODULAR
    # x equal to the larger diagonal: not strictly between, not above max
    assert label_from_affinity(np.array([[0.5, 0.5], [0.5, 0.2]]), 2).value == MODULAR


# --- rank test ----------------------------------------------------------------


def planted_aligned_affinities(n_windows, seed):
    entries = np.array([[0.0116, 0.0020], [0.2300, 0.0370]])
    truth = BlockAssignment(tuple([0] * 45 + [1] * 30), 2)
    p = AffinityMatrix(entries, BERNOULLI)
    cfg = InferenceConfig(seed=spawn_seed(seed, 1))
    mats = []
    for i in range(n_windows):
        net = sample(truth, p, seed=spawn_seed(seed, 2, i))
        res = select_model(net, cfg)
        assert res.effective_blocks == 2
        mats.append(align_lender_borrower(net, res))
    return mats


def test_rank_test_recovers_planted_ordering():
    mats = planted_aligned_affinities(20, seed=11)
    result = rank_test(mats)
    assert result.ordering == ("LB", "LL", "BB", "BL")
    assert all(p < 1e-6 for p in result.p_values)


def test_rank_test_identical_matrices_degenerate():
    m = np.array([[0.2, 0.1], [0.6, 0.3]])
    result = rank_test([m, m, m])
    assert result.ordering == ("LB", "LL", "BB", "BL")
    assert result.p_values == (0.0, 0.0, 0.0)


def test_rank_test_opposite_orderings_pvalue_one():
    a = np.array([[0.2, 0.1], [0.6, 0.3]])
    b = np.array([[0.2, 0.6], [0.1, 0.3]])  # BL and LB swapped
    result = rank_test([a, b])
    # LB and BL tie on the mean, so the adjacent comparison carries no evidence
    tied_pair_ps = [
        p
        for (hi, lo), p in zip(zip(result.ordering, result.ordering[1:]), result.p_values)
        if {hi, lo} == {"LB", "BL"}
    ]
    assert tied_pair_ps and tied_pair_ps[0] == 1.0


def test_rank_test_needs_two_samples():
    with pytest.raises(ContractError):
        rank_test([np.array([[0.1, 0.2], [0.3, 0.4]])])


def test_align_lender_borrower_puts_lenders_second():
    entries = np.array([[0.0116, 0.0020], [0.2300, 0.0370]])
    truth = BlockAssignment(tuple([0] * 45 + [1] * 30), 2)
    net = sample(truth, AffinityMatrix(entries, BERNOULLI), seed=9)
    res = select_model(net, InferenceConfig(seed=13))
    aligned = align_lender_borrower(net, res)
    # lenders fire most links, so the LB cell must dominate after alignment
    assert aligned.entries[1, 0] == aligned.entries.max()


# --- census -------------------------------------------------------------------


class _FakeResult:
    def __init__(self, label_value):
        if label_value == RANDOM:
            self.effective_blocks = 1
            self.affinity = AffinityMatrix(np.array([[0.5]]), BERNOULLI)
        else:
            self.effective_blocks = 2
            table = {
                BIPARTITE: [[0.1, 0.6], [0.6, 0.1]],
                MODULAR: [[0.6, 0.1], [0.1, 0.6]],
                CORE_PERIPHERY: [[0.6, 0.3], [0.3, 0.1]],
            }
            self.affinity = AffinityMatrix(np.array(table[label_value]), BERNOULLI)


def windows(n, span=5, year=2010):
    from blockscope.netcore import build_schedule

    return build_schedule(date(year, 1, 4), date(year, 12, 31), span)[:n]


def test_census_all_bipartite():
    rows = [(w, _FakeResult(BIPARTITE)) for w in windows(10)]
    table = structure_census(rows)
    ((year, scale, pct, count),) = table.rows
    assert (year, scale, count) == (2010, "week", 10)
    assert pct == {"B": 100.0, "C": 0.0, "M": 0.0, "R": 0.0}


def test_census_half_and_half():
    ws = windows(4)
    rows = [
        (ws[0], _FakeResult(BIPARTITE)),
        (ws[1], _FakeResult(BIPARTITE)),
        (ws[2], _FakeResult(RANDOM)),
        (ws[3], _FakeResult(RANDOM)),
    ]
    ((_, _, pct, _),) = structure_census(rows).rows
    assert pct == {"B": 50.0, "C": 0.0, "M": 0.0, "R": 50.0}


def test_census_rows_sum_to_hundred():
    rng = np.random.default_rng(7)
    ws = windows(12, span=20) + windows(9, span=5)
    labels = [BIPARTITE, RANDOM, MODULAR, CORE_PERIPHERY]
    rows = [(w, _FakeResult(labels[int(rng.integers(4))])) for w in ws]
    table = structure_census(rows)
    assert len(table.rows) == 2
    for _, _, pct, _ in table.rows:
        assert abs(sum(pct.values()) - 100.0) <= 1.0


def test_census_csv_layout():
    rows = [(w, _FakeResult(BIPARTITE)) for w in windows(3)]
    csv_text = structure_census(rows).to_csv()
    lines = csv_text.strip().splitlines()
    assert lines[0] == "year,scale,B,C,M,R"
    assert lines[1] == "2010,week,100.0,0.0,0.0,0.0"


@pytest.mark.slow
def test_census_planted_bipartite_year():
    # a 52-week year of planted bipartite draws at the observed weekly
    # affinities should census as overwhelmingly bipartite
    entries = np.array([[0.0116, 0.0020], [0.2300, 0.0370]])
    truth = BlockAssignment(tuple([0] * 45 + [1] * 30), 2)
    p = AffinityMatrix(entries, BERNOULLI)
    ws = windows(52)
    rows = []
    for i, w in enumerate(ws):
        net = sample(truth, p, seed=spawn_seed(71, i))
        rows.append((w, select_model(net, InferenceConfig(seed=spawn_seed(72, i)))))
    ((year, scale, pct, count),) = structure_census(rows).rows
    assert (year, scale, count) == (2010, "week", 52)
    assert pct["B"] >= 90.0
