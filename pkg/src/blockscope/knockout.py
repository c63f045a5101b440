"""Knock-out experiments: degree mutations, critical sets, structural scores.

Each experiment pairs a structure-positive monthly network (labelled
Bipartite) with a structure-negative one (labelled Random).  Working on the
banks active in both, banks are substituted one at a time in decreasing order
of their degree change Delta-k; substituting a bank replaces both its
out-row and in-column with the negative network's values, so once either
endpoint of an edge has been substituted the edge carries the negative
network's value and substituting every bank reproduces the negative network
exactly.  The critical set is the shortest prefix that flips the inferred
label to Random; a bank's structural score is the fraction of pairs whose
critical set contains it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .classify import RANDOM, BIPARTITE, label_structure
from .errors import ContractError, DegenerateInputError, PairPreconditionError
from .inference import InferenceConfig, select_model
from .netcore import AggregatedNetwork, BankId, induced_subnetwork
from .parallel import parallel_map
from .rng import spawn_seed


@dataclass(frozen=True)
class NetworkPair:
    """A structure-positive network ``a``, a structure-negative ``b``, and the
    banks active (non-zero total degree) in both."""

    a: AggregatedNetwork
    b: AggregatedNetwork
    common: tuple[BankId, ...]


def make_pair(a: AggregatedNetwork, b: AggregatedNetwork) -> NetworkPair:
    def active(net: AggregatedNetwork) -> set[BankId]:
        totals = net.weights.sum(axis=0) + net.weights.sum(axis=1)
        return {bank for bank, tot in zip(net.nodes, totals) if tot > 0}

    common = tuple(sorted(active(a) & active(b)))
    return NetworkPair(a, b, common)


def restrict_common(pair: NetworkPair) -> AggregatedNetwork:
    """The positive network induced on the common active banks."""
    if not pair.common:
        raise DegenerateInputError("network pair has no common active banks")
    return induced_subnetwork(pair.a, pair.common)


def restrict_common_negative(pair: NetworkPair) -> AggregatedNetwork:
    if not pair.common:
        raise DegenerateInputError("network pair has no common active banks")
    return induced_subnetwork(pair.b, pair.common)


def delta_k(a: AggregatedNetwork, b: AggregatedNetwork, bank: BankId) -> float:
    """Euclidean distance between the bank's (in-degree, out-degree) in the two networks."""
    if bank not in a.nodes or bank not in b.nodes:
        raise ContractError(f"bank {bank!r} is not present in both networks")
    ia, ib = a.index(bank), b.index(bank)
    kin_a = float(np.count_nonzero(a.weights[:, ia]))
    kout_a = float(np.count_nonzero(a.weights[ia]))
    kin_b = float(np.count_nonzero(b.weights[:, ib]))
    kout_b = float(np.count_nonzero(b.weights[ib]))
    return math.hypot(kin_a - kin_b, kout_a - kout_b)


def substitution_order(pair: NetworkPair) -> tuple[BankId, ...]:
    """Common banks by decreasing degree change, ties broken by bank id."""
    return tuple(
        sorted(pair.common, key=lambda bank: (-delta_k(pair.a, pair.b, bank), bank))
    )


def _substitute(current: np.ndarray, target: np.ndarray, idx: int) -> None:
    current[idx, :] = target[idx, :]
    current[:, idx] = target[:, idx]


def substituted_network(c: AggregatedNetwork, d: AggregatedNetwork, banks) -> AggregatedNetwork:
    """``c`` with the given banks' out-rows and in-columns taken from ``d``.

    Order-independent for a fixed set of banks: an edge carries ``d``'s value
    as soon as either endpoint is substituted.
    """
    if c.nodes != d.nodes:
        raise ContractError("substitution needs networks over the same roster")
    current = c.weights.copy()
    for bank in banks:
        _substitute(current, d.weights, c.index(bank))
    return AggregatedNetwork(c.nodes, current, c.kind, c.window)


def _path_config(cfg: InferenceConfig, pair_seed: int) -> InferenceConfig:
    # fixed seed per pair; at least 3 restarts to guard against optimizer flakes
    return replace(cfg, seed=pair_seed, restarts=max(cfg.restarts, 3))


def check_pair(pair: NetworkPair, cfg: InferenceConfig) -> tuple[AggregatedNetwork, AggregatedNetwork]:
    """Verify the pair qualifies: the restriction of ``a`` labels Bipartite and
    the restriction of ``b`` labels Random.  Returns the two restrictions."""
    c = restrict_common(pair)
    d = restrict_common_negative(pair)
    label_c = label_structure(select_model(c, cfg)).value
    if label_c != BIPARTITE:
        raise PairPreconditionError(f"positive side labels {label_c}, not Bipartite")
    label_d = label_structure(select_model(d, cfg)).value
    if label_d != RANDOM:
        raise PairPreconditionError(f"negative side labels {label_d}, not Random")
    return c, d


def mutation_path(pair: NetworkPair, cfg: InferenceConfig) -> tuple[BankId, ...]:
    """Shortest prefix of the Delta-k order whose substitution flips the label
    to Random.  Raises :class:`PairPreconditionError` for non-qualifying pairs."""
    path_cfg = _path_config(cfg, cfg.seed)
    c, d = check_pair(pair, path_cfg)
    order = substitution_order(pair)
    current = c.weights.copy()
    target = d.weights
    index = {bank: i for i, bank in enumerate(c.nodes)}
    for step, bank in enumerate(order, start=1):
        _substitute(current, target, index[bank])
        net = AggregatedNetwork(c.nodes, current.copy(), c.kind, c.window)
        label = label_structure(select_model(net, path_cfg)).value
        if label == RANDOM:
            return order[:step]
    raise ContractError("full substitution failed to reproduce the negative network's label")


@dataclass(frozen=True)
class KnockoutReport:
    scores: dict[BankId, float]
    critical_sets: tuple[tuple[int, tuple[BankId, ...]], ...]
    n_valid_pairs: int
    skipped_pairs: tuple[int, ...]
    absent_banks: tuple[BankId, ...]

    def to_dict(self) -> dict:
        return {
            "scores": {b: self.scores[b] for b in sorted(self.scores)},
            "critical_sets": [
                {"pair": idx, "banks": list(banks)} for idx, banks in self.critical_sets
            ],
            "n_valid_pairs": self.n_valid_pairs,
            "skipped_pairs": list(self.skipped_pairs),
            "absent_banks": list(self.absent_banks),
        }


def structural_score(pairs, cfg: InferenceConfig, threads: int = 1) -> KnockoutReport:
    """Per-bank fraction of qualifying pairs whose critical set contains the bank.

    Pairs failing their preconditions are skipped and excluded from the
    denominator.  Banks never active in any pair's common set score 0 and are
    flagged absent.  Pairs are independent, so they may run on worker threads
    without changing the result.
    """
    pairs = list(pairs)
    roster: set[BankId] = set()
    ever_common: set[BankId] = set()
    for pair in pairs:
        roster.update(pair.a.nodes)
        roster.update(pair.b.nodes)
        ever_common.update(pair.common)

    def one(item):
        idx, pair = item
        pair_cfg = replace(cfg, seed=spawn_seed(cfg.seed, 31, idx))
        try:
            return idx, mutation_path(pair, pair_cfg)
        except PairPreconditionError:
            return idx, None

    outcomes = parallel_map(one, enumerate(pairs), threads)
    critical_sets = [(idx, banks) for idx, banks in outcomes if banks is not None]
    skipped = [idx for idx, banks in outcomes if banks is None]
    n_valid = len(critical_sets)
    if n_valid == 0:
        raise DegenerateInputError("no qualifying pairs: every pair failed its preconditions")
    hits: dict[BankId, int] = {b: 0 for b in roster}
    for _, banks in critical_sets:
        for b in banks:
            hits[b] += 1
    scores = {b: hits[b] / n_valid for b in roster}
    absent = tuple(sorted(roster - ever_common))
    return KnockoutReport(scores, tuple(critical_sets), n_valid, tuple(skipped), absent)


def score_histogram(report: KnockoutReport, bins: int = 10) -> tuple[tuple[float, float, int], ...]:
    """(bin_low, bin_high, count) triples over the score range [0, 1]."""
    edges = np.linspace(0.0, 1.0, bins + 1)
    counts, _ = np.histogram(list(report.scores.values()), bins=edges)
    return tuple(
        (float(edges[i]), float(edges[i + 1]), int(counts[i])) for i in range(bins)
    )


def histogram_csv(report: KnockoutReport, bins: int = 10) -> str:
    # one row per uniform bin over [0, 1], identified by its centre
    lines = ["score_bin,count"]
    for lo, hi, count in score_histogram(report, bins):
        lines.append(f"{(lo + hi) / 2.0!r},{count}")
    return "\n".join(lines) + "\n"


def score_ordered_validation(
    pairs, report: KnockoutReport, cfg: InferenceConfig, threads: int = 1
) -> tuple[tuple[int, int], ...]:
    """For every qualifying pair, how many highest-score banks must be
    substituted (highest structural score first, ties by bank id) before the
    label flips to Random."""
    order_all = sorted(report.scores, key=lambda b: (-report.scores[b], b))
    valid = {idx for idx, _ in report.critical_sets}

    def one(item):
        idx, pair = item
        pair_cfg = _path_config(cfg, spawn_seed(cfg.seed, 31, idx))
        c = restrict_common(pair)
        d = restrict_common_negative(pair)
        current = c.weights.copy()
        index = {bank: i for i, bank in enumerate(c.nodes)}
        count = 0
        for bank in order_all:
            if bank not in index:
                continue
            _substitute(current, d.weights, index[bank])
            count += 1
            net = AggregatedNetwork(c.nodes, current.copy(), c.kind, c.window)
            if label_structure(select_model(net, pair_cfg)).value == RANDOM:
                return idx, count
        raise ContractError("substituting every common bank failed to flip the label")

    items = [(idx, pair) for idx, pair in enumerate(pairs) if idx in valid]
    return tuple(parallel_map(one, items, threads))
