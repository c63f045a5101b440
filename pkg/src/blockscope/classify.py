"""Structure labels, affinity-ranking significance tests, and census tables.

A two-block affinity matrix is labelled by comparing its diagonal entries
d1, d2 against the symmetric cross term x = (p12 + p21) / 2:

    Modular        min(d1, d2) > x
    Bipartite      x > max(d1, d2)
    CorePeriphery  x strictly between the diagonals (core = denser block)

Exact ties never yield Bipartite or CorePeriphery: anything not strictly
ordered falls back to Modular, which keeps the rule deterministic.  One
effective block always means Random.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import t as student_t

from .errors import ContractError, UnsupportedStructureError
from .inference import InferenceResult
from .netcore import SPAN_NAMES, AggregatedNetwork, AggregationWindow
from .sbm import AffinityMatrix

BIPARTITE = "Bipartite"
CORE_PERIPHERY = "CorePeriphery"
MODULAR = "Modular"
RANDOM = "Random"
LABELS = (BIPARTITE, CORE_PERIPHERY, MODULAR, RANDOM)
LABEL_COLUMNS = {"B": BIPARTITE, "C": CORE_PERIPHERY, "M": MODULAR, "R": RANDOM}

# aligned 2x2 affinity entry names: index 0 = borrower block, 1 = lender block
ENTRY_KEYS = ("BB", "BL", "LB", "LL")
_ENTRY_INDEX = {"BB": (0, 0), "BL": (0, 1), "LB": (1, 0), "LL": (1, 1)}


@dataclass(frozen=True)
class StructureLabel:
    value: str
    core_block: int | None = None

    def __post_init__(self):
        if self.value not in LABELS:
            raise ContractError(f"unknown structure label {self.value!r}")
        if (self.core_block is not None) != (self.value == CORE_PERIPHERY):
            raise ContractError("core_block is set exactly for CorePeriphery labels")


def label_from_affinity(entries: np.ndarray, effective_blocks: int) -> StructureLabel:
    """Label a (possibly rate-valued) affinity matrix; scale invariant."""
    if effective_blocks == 1:
        return StructureLabel(RANDOM)
    if effective_blocks != 2:
        raise UnsupportedStructureError(
            f"two-block taxonomy cannot label {effective_blocks} blocks"
        )
    p = np.asarray(entries, dtype=float)
    d1, d2 = float(p[0, 0]), float(p[1, 1])
    x = (float(p[0, 1]) + float(p[1, 0])) / 2.0
    if x > max(d1, d2):
        return StructureLabel(BIPARTITE)
    if min(d1, d2) > x:
        return StructureLabel(MODULAR)
    if min(d1, d2) < x < max(d1, d2):
        return StructureLabel(CORE_PERIPHERY, core_block=0 if d1 > d2 else 1)
    return StructureLabel(MODULAR)


def label_structure(result: InferenceResult) -> StructureLabel:
    """Map an inference result to its structure label."""
    return label_from_affinity(result.affinity.entries, result.effective_blocks)


def align_lender_borrower(net: AggregatedNetwork, result: InferenceResult) -> AffinityMatrix:
    """Reorder a two-block affinity so index 0 is the borrower block, 1 the lender.

    The lender block is the one with the larger total out-strength; on a tie
    the lower block index plays lender.
    """
    if result.assignment.m != 2:
        raise ContractError("alignment is defined for two-block assignments")
    lab = np.asarray(result.assignment.labels)
    out_strength = net.weights.sum(axis=1)
    s0 = float(out_strength[lab == 0].sum()) if (lab == 0).any() else 0.0
    s1 = float(out_strength[lab == 1].sum()) if (lab == 1).any() else 0.0
    lender = 0 if s0 >= s1 else 1
    borrower = 1 - lender
    perm = [borrower, lender]
    entries = result.affinity.entries[np.ix_(perm, perm)]
    return AffinityMatrix(entries, result.affinity.mode)


@dataclass(frozen=True)
class RankTestResult:
    ordering: tuple[str, ...]
    p_values: tuple[float, ...]
    means: dict[str, float]


def _paired_one_sided_p(diffs: np.ndarray) -> float:
    # p-value for "mean difference > 0"; degenerate conventions:
    # zero variance -> 0 (certain ordering), zero mean -> 1 (no evidence)
    n = len(diffs)
    if np.all(diffs == diffs[0]):
        return 0.0 if diffs[0] > 0 else 1.0
    mean = float(diffs.mean())
    if mean == 0.0:
        return 1.0
    sd = float(diffs.std(ddof=1))
    stat = mean / (sd / math.sqrt(n))
    return float(student_t.sf(stat, df=n - 1))


def rank_test(affinities) -> RankTestResult:
    """Order the four aligned affinity entries by mean and t-test each adjacent pair.

    Takes 2x2 matrices with block identities already aligned (see
    :func:`align_lender_borrower`).  Each p-value is a paired one-sided
    Student t test that the left entry of the adjacent pair exceeds the right.
    """
    mats = [np.asarray(a.entries if isinstance(a, AffinityMatrix) else a, dtype=float) for a in affinities]
    if len(mats) < 2:
        raise ContractError("rank test needs at least two affinity matrices")
    for a in mats:
        if a.shape != (2, 2):
            raise ContractError("rank test is defined for 2x2 affinities")
    series = {k: np.array([a[_ENTRY_INDEX[k]] for a in mats]) for k in ENTRY_KEYS}
    means = {k: float(v.mean()) for k, v in series.items()}
    ordering = tuple(sorted(ENTRY_KEYS, key=lambda k: (-means[k], k)))
    p_values = tuple(
        _paired_one_sided_p(series[hi] - series[lo])
        for hi, lo in zip(ordering, ordering[1:])
    )
    return RankTestResult(ordering, p_values, means)


@dataclass(frozen=True)
class CensusTable:
    """Percentages of inferred structures per (year, timescale) group."""

    rows: tuple[tuple[int, str, dict[str, float], int], ...]

    def to_csv(self) -> str:
        lines = ["year,scale,B,C,M,R"]
        for year, scale, pct, _count in self.rows:
            cells = ",".join(f"{pct[c]:.1f}" for c in ("B", "C", "M", "R"))
            lines.append(f"{year},{scale},{cells}")
        return "\n".join(lines) + "\n"


_SCALE_ORDER = {name: i for i, name in enumerate(SPAN_NAMES.values())}


def structure_census(results) -> CensusTable:
    """Tabulate label percentages per (year, timescale) over (window, result) pairs."""
    groups: dict[tuple[int, str], dict[str, int]] = {}
    for window, result in results:
        if not isinstance(window, AggregationWindow):
            raise ContractError("census rows need an AggregationWindow")
        key = (window.start.year, window.scale)
        counts = groups.setdefault(key, {c: 0 for c in LABEL_COLUMNS})
        label = label_structure(result).value
        for col, name in LABEL_COLUMNS.items():
            if name == label:
                counts[col] += 1
    rows = []
    for (year, scale) in sorted(groups, key=lambda k: (k[0], _SCALE_ORDER[k[1]])):
        counts = groups[(year, scale)]
        total = sum(counts.values())
        pct = {c: 100.0 * counts[c] / total for c in counts}
        rows.append((year, scale, pct, total))
    return CensusTable(tuple(rows))
