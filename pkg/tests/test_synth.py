import numpy as np
import pytest

from blockscope.classify import BIPARTITE, RANDOM, label_structure
from blockscope.errors import ContractError
from blockscope.inference import InferenceConfig, select_model
from blockscope.knockout import (
    make_pair,
    mutation_path,
    restrict_common,
    restrict_common_negative,
    substituted_network,
)
from blockscope.netcore import DIRECTED_BINARY, AggregatedNetwork
from blockscope.rng import spawn
from blockscope.sbm import BERNOULLI, AffinityMatrix, BlockAssignment
from blockscope.synth import (
    BIPARTITE_WEEKLY_AFFINITY,
    KnockoutSuite,
    PlantedScenario,
    build_knockout_suite,
    default_removal_scenario,
    generate_scenario,
    load_suite,
    removal_experiment,
    save_suite,
    two_block_scenario,
)

CFG = InferenceConfig(restarts=3, sweeps_per_restart=40, seed=99)


def test_scenario_checks_label_consistency():
    labels = tuple([0] * 5 + [1] * 5)
    bipartite_p = AffinityMatrix(np.array([[0.05, 0.6], [0.6, 0.05]]), BERNOULLI)
    with pytest.raises(ContractError):
        PlantedScenario(BlockAssignment(labels, 2), bipartite_p, 3, 0, RANDOM)
    ok = PlantedScenario(BlockAssignment(labels, 2), bipartite_p, 3, 0, BIPARTITE)
    assert ok.truth_label == BIPARTITE


def test_generate_zero_affinity_empty_networks():
    s = two_block_scenario((4, 4), np.array([[0.0, 1e-9], [1e-9, 0.0]]), 3, seed=1)
    # degenerate all-but-zero affinity: essentially empty draws
    for net in generate_scenario(s):
        assert net.weights.sum() <= 2


def test_generate_deterministic_per_seed():
    s = default_removal_scenario(n_networks=3, seed=7)
    first = generate_scenario(s)
    second = generate_scenario(s)
    for a, b in zip(first, second):
        assert np.array_equal(a.weights, b.weights)


def test_generate_cross_block_density_matches_affinity():
    s = default_removal_scenario(n_networks=100, seed=3)
    lab = np.array(s.assignment.labels)
    lb_pairs = 30 * 45
    bl_pairs = 45 * 30
    lb_total = bl_total = 0.0
    for net in generate_scenario(s):
        w = net.weights
        lb_total += w[np.ix_(lab == 1, lab == 0)].sum()
        bl_total += w[np.ix_(lab == 0, lab == 1)].sum()
    n_draws = 100
    for total, pairs, p in ((lb_total, lb_pairs, 0.23), (bl_total, bl_pairs, 0.0020)):
        freq = total / (n_draws * pairs)
        se = np.sqrt(p * (1 - p) / (n_draws * pairs))
        assert abs(freq - p) <= 3 * se


# --- removal experiment ---------------------------------------------------------


def test_removal_no_deletion_always_recovers():
    s = default_removal_scenario(seed=21)
    report = removal_experiment(s, target_n=75, replications=40, seed=5, cfg=CFG)
    assert report.success_fraction == 1.0


def test_removal_down_to_two_banks_goes_random():
    s = default_removal_scenario(seed=23)
    report = removal_experiment(s, target_n=2, replications=30, seed=6, cfg=CFG)
    assert report.label_counts.get(RANDOM, 0) >= 29
    assert report.success_fraction <= 1 / 30


def test_removal_rejects_bad_target():
    s = default_removal_scenario(seed=2)
    with pytest.raises(ContractError):
        removal_experiment(s, target_n=80, replications=2, seed=3)


def test_removal_thread_count_does_not_change_results():
    s = default_removal_scenario(seed=29)
    a = removal_experiment(s, target_n=60, replications=12, seed=8, cfg=CFG, threads=1)
    b = removal_experiment(s, target_n=60, replications=12, seed=8, cfg=CFG, threads=4)
    assert a == b


def test_removal_pilot_success():
    s = default_removal_scenario(seed=31)
    report = removal_experiment(s, target_n=60, replications=60, seed=9, cfg=CFG)
    assert report.success_fraction >= 0.98


# --- knockout suite ---------------------------------------------------------------


def test_suite_satisfies_own_preconditions():
    suite = build_knockout_suite(n_pairs=2, n_critical=2, seed=11)
    for pair in suite.pairs:
        c = restrict_common(pair)
        d = restrict_common_negative(pair)
        res_c = select_model(c, InferenceConfig(restarts=4, seed=1))
        res_d = select_model(d, InferenceConfig(restarts=4, seed=1))
        assert label_structure(res_c).value == BIPARTITE
        assert label_structure(res_d).value == RANDOM


def test_suite_single_critical_bank():
    suite = build_knockout_suite(n_pairs=2, n_critical=1, seed=13)
    assert suite.critical_banks == ("H00",)
    for pair in suite.pairs:
        assert mutation_path(pair, CFG) == ("H00",)


def test_suite_fully_resampled_negative_flips_eventually():
    # degenerate variant with every bank's links redrawn: the path must flip at
    # some prefix and land exactly on the negative network after full substitution
    suite = build_knockout_suite(n_pairs=1, n_critical=2, seed=17)
    pair = suite.pairs[0]
    c = restrict_common(pair)
    rng = spawn(123, 5)
    rho = np.count_nonzero(c.weights) / (c.n * (c.n - 1))
    fresh = (rng.random((c.n, c.n)) < rho).astype(float)
    np.fill_diagonal(fresh, 0.0)
    resampled = AggregatedNetwork(c.nodes, fresh, DIRECTED_BINARY)
    degenerate = make_pair(c, resampled)
    critical = mutation_path(degenerate, CFG)
    assert 1 <= len(critical) <= len(degenerate.common)
    d = restrict_common_negative(degenerate)
    full = substituted_network(
        restrict_common(degenerate), d, degenerate.common
    )
    assert np.array_equal(full.weights, d.weights)


def test_suite_save_load_round_trip(tmp_path):
    suite = build_knockout_suite(n_pairs=2, n_critical=2, seed=19)
    manifest = save_suite(suite, tmp_path / "suite")
    back = load_suite(manifest)
    assert isinstance(back, KnockoutSuite)
    assert back.critical_banks == suite.critical_banks
    assert back.seed == suite.seed
    for p1, p2 in zip(suite.pairs, back.pairs):
        assert p1.common == p2.common
        assert np.array_equal(p1.a.weights, p2.a.weights)
        assert np.array_equal(p1.b.weights, p2.b.weights)


def test_suite_rejects_bad_geometry():
    with pytest.raises(ContractError):
        build_knockout_suite(n_pairs=1, n_critical=0, seed=1)
    with pytest.raises(ContractError):
        build_knockout_suite(n_pairs=1, n_critical=2, seed=1, n_borrowers=4)


def test_weekly_affinity_orders_as_bipartite():
    p = BIPARTITE_WEEKLY_AFFINITY
    x = (p[0, 1] + p[1, 0]) / 2
    assert x > max(p[0, 0], p[1, 1])


def test_scenario_dict_round_trip():
    s = default_removal_scenario(n_networks=4, seed=77)
    back = PlantedScenario.from_dict(s.to_dict())
    assert back == s
