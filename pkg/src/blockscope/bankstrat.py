"""Bank inventory dynamics and strategy categorization.

A bank's daily net balance is what it lent minus what it borrowed that day;
the inventory is the running sum, and the normalized inventory divides by the
largest absolute inventory ever reached so every active bank lives in
[-1, 1].  Per period, banks split into big/small borrowers and lenders at the
median absolute net balance of their own side (strictly greater means big),
with inactive banks in their own category.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import date

import numpy as np

from .errors import ContractError
from .netcore import AggregatedNetwork, BankId

CATEGORIES = ("BB", "SB", "SL", "BL", "NA")


@dataclass(frozen=True)
class InventorySeries:
    bank: BankId
    daily_delta: tuple[float, ...]
    cumulative: tuple[float, ...]
    normalizer: float | None
    normalized: tuple[float, ...]
    active: bool


@dataclass(frozen=True)
class TransitionMatrix:
    """Row-stochastic (x100) movement between strategy categories."""

    percentages: np.ndarray  # 5 x 5, rows = category before, columns = after
    row_counts: tuple[int, ...]

    def __post_init__(self):
        p = np.array(self.percentages, dtype=np.float64)
        if p.shape != (5, 5):
            raise ContractError("transition matrix must be 5x5")
        p.setflags(write=False)
        object.__setattr__(self, "percentages", p)

    def to_csv(self) -> str:
        lines = ["from," + ",".join(CATEGORIES) + ",n_banks"]
        for i, cat in enumerate(CATEGORIES):
            cells = ",".join(f"{self.percentages[i, j]:.1f}" for j in range(5))
            lines.append(f"{cat},{cells},{self.row_counts[i]}")
        return "\n".join(lines) + "\n"


def daily_net_balance(net: AggregatedNetwork, bank: BankId) -> float:
    """Lending minus borrowing for the day; zero for banks absent that day.

    Summed exactly (fsum) so the market-wide balance identity holds to the
    last bit whenever the individual balances are representable.
    """
    if bank not in net.nodes:
        return 0.0
    i = net.index(bank)
    row = net.weights[i]
    col = net.weights[:, i]
    return math.fsum(row.tolist() + [-x for x in col.tolist()])


def inventory(days, bank: BankId) -> InventorySeries:
    """Daily deltas, their prefix sums, and the max-|inventory| normalization.

    A bank that never trades gets an all-zero series with ``normalizer`` None
    and the ``active`` flag cleared.
    """
    deltas = tuple(daily_net_balance(net, bank) for net in days)
    cumulative = tuple(np.cumsum(deltas)) if deltas else ()
    cumulative = tuple(float(x) for x in cumulative)
    traded = any(
        bank in net.nodes
        and (net.weights[net.index(bank)].sum() + net.weights[:, net.index(bank)].sum()) > 0
        for net in days
    )
    if not traded:
        return InventorySeries(bank, deltas, cumulative, None, tuple(0.0 for _ in deltas), False)
    normalizer = max(abs(x) for x in cumulative)
    if normalizer == 0.0:
        # traded but perfectly netted every day; report raw zeros
        return InventorySeries(bank, deltas, cumulative, None, tuple(0.0 for _ in deltas), True)
    normalized = tuple(x / normalizer for x in cumulative)
    return InventorySeries(bank, deltas, cumulative, normalizer, normalized, True)


def _median(values: list[float]) -> float:
    return float(np.median(values))


def categorize(period_networks, roster) -> dict[BankId, str]:
    """Strategy category per bank over one period of daily networks.

    Period balance is the sum of daily net balances.  Inactive banks are NA;
    borrowers (negative balance) split at the median absolute balance among
    borrowers into BB (strictly above) and SB; lenders likewise into BL/SL.
    Active banks netting exactly to zero count as small lenders.
    """
    balances: dict[BankId, float] = {}
    active: dict[BankId, bool] = {}
    for bank in roster:
        total = 0.0
        traded = False
        for net in period_networks:
            total += daily_net_balance(net, bank)
            if bank in net.nodes:
                i = net.index(bank)
                if net.weights[i].sum() + net.weights[:, i].sum() > 0:
                    traded = True
        balances[bank] = total
        active[bank] = traded
    borrowers = [abs(b) for bank, b in balances.items() if active[bank] and b < 0]
    lenders = [abs(b) for bank, b in balances.items() if active[bank] and b >= 0]
    med_b = _median(borrowers) if borrowers else 0.0
    med_l = _median(lenders) if lenders else 0.0
    out: dict[BankId, str] = {}
    for bank in roster:
        if not active[bank]:
            out[bank] = "NA"
        elif balances[bank] < 0:
            out[bank] = "BB" if abs(balances[bank]) > med_b else "SB"
        else:
            out[bank] = "BL" if abs(balances[bank]) > med_l else "SL"
    return out


def transition_matrix(cat_before: dict[BankId, str], cat_after: dict[BankId, str]) -> TransitionMatrix:
    """Percentage of banks moving from each category to each other category."""
    if set(cat_before) != set(cat_after):
        raise ContractError("transition matrix needs a shared bank roster")
    idx = {c: i for i, c in enumerate(CATEGORIES)}
    counts = np.zeros((5, 5))
    for bank, before in cat_before.items():
        counts[idx[before], idx[cat_after[bank]]] += 1
    row_totals = counts.sum(axis=1)
    pct = np.zeros((5, 5))
    for i in range(5):
        if row_totals[i] > 0:
            pct[i] = 100.0 * counts[i] / row_totals[i]
    return TransitionMatrix(pct, tuple(int(x) for x in row_totals))


def quarter_of(day: date) -> tuple[int, int]:
    return day.year, (day.month - 1) // 3 + 1


def group_by_quarter(days_with_networks) -> dict[tuple[int, int], list[AggregatedNetwork]]:
    """Bucket (date, daily network) pairs into calendar quarters."""
    groups: dict[tuple[int, int], list[AggregatedNetwork]] = {}
    for day, net in days_with_networks:
        groups.setdefault(quarter_of(day), []).append(net)
    return groups
