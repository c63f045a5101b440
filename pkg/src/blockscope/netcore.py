"""Interbank transaction records, temporal aggregation, and network transforms.

Data model
----------
A :class:`Transaction` is one overnight loan (date, lender, borrower, volume
in Euros).  Transactions aggregated over a window of trading days form an
:class:`AggregatedNetwork`: a directed weighted adjacency matrix whose entry
``W[i, j]`` is the total volume lent by bank ``i`` to bank ``j`` inside the
window.  The transforms below (binarize / symmetrize / discretize) change the
``kind`` tag and keep everything else immutable.

File formats
------------
Transactions CSV: header ``date,lender_id,borrower_id,volume_eur,domestic``,
ISO-8601 dates, decimal Euro volumes, domestic flag in {0,1}.

Network edge list: ``#``-prefixed header lines carrying the kind, the
optional window and the node roster, followed by ``i j w`` lines with
zero-based node indices.  Weights are written with ``repr`` so the file
round-trips float64 values exactly.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from datetime import date, timedelta
from math import floor, log
from pathlib import Path

import numpy as np

from .errors import ContractError, DegenerateInputError, ParseError, RejectedRowError

BankId = str

SPAN_DAYS = {"day": 1, "week": 5, "month": 20, "quarter": 60}
SPAN_NAMES = {1: "day", 5: "week", 20: "month", 60: "quarter"}

DIRECTED_WEIGHTED = "directed-weighted"
DIRECTED_BINARY = "directed-binary"
UNDIRECTED_WEIGHTED = "undirected-weighted"
UNDIRECTED_BINARY = "undirected-binary"
KINDS = (DIRECTED_WEIGHTED, DIRECTED_BINARY, UNDIRECTED_WEIGHTED, UNDIRECTED_BINARY)

CSV_HEADER = ("date", "lender_id", "borrower_id", "volume_eur", "domestic")


@dataclass(frozen=True)
class Transaction:
    """One interbank loan: ``lender`` lends ``volume`` Euros to ``borrower`` on ``day``."""

    day: date
    lender: BankId
    borrower: BankId
    volume: float
    domestic: bool = True

    def __post_init__(self):
        if self.volume <= 0:
            raise ContractError(f"transaction volume must be positive, got {self.volume}")
        if self.lender == self.borrower:
            raise ContractError(f"self-loan not allowed (bank {self.lender!r})")


def trading_days(start: date, count: int) -> tuple[date, ...]:
    """The ``count`` weekdays starting at ``start`` (weekends skipped, no holiday calendar)."""
    days = []
    d = start
    while len(days) < count:
        if d.weekday() < 5:
            days.append(d)
        d += timedelta(days=1)
    return tuple(days)


@dataclass(frozen=True)
class AggregationWindow:
    """A span of consecutive trading days; ``span`` is 1, 5, 20 or 60 (day..quarter)."""

    start: date
    span: int

    def __post_init__(self):
        if self.span not in SPAN_NAMES:
            raise ContractError(f"span must be one of {sorted(SPAN_NAMES)}, got {self.span}")
        if self.start.weekday() >= 5:
            raise ContractError(f"window must start on a trading day, got {self.start}")

    @property
    def scale(self) -> str:
        return SPAN_NAMES[self.span]

    def days(self) -> tuple[date, ...]:
        return trading_days(self.start, self.span)

    def contains(self, d: date) -> bool:
        days = self.days()
        return days[0] <= d <= days[-1] and d.weekday() < 5

    @property
    def end(self) -> date:
        return self.days()[-1]


def build_schedule(first: date, last: date, span: int) -> tuple[AggregationWindow, ...]:
    """Non-overlapping contiguous windows of ``span`` trading days covering [first, last]."""
    windows = []
    d = first
    while d.weekday() >= 5:
        d += timedelta(days=1)
    while d <= last:
        w = AggregationWindow(d, span)
        windows.append(w)
        d = w.end + timedelta(days=1)
        while d.weekday() >= 5:
            d += timedelta(days=1)
    return tuple(windows)


@dataclass(frozen=True)
class AggregatedNetwork:
    """Directed or undirected network over an ordered bank roster.

    ``weights`` is an N x N float64 matrix with a zero diagonal; binary kinds
    hold entries in {0, 1} and undirected kinds are exactly symmetric.  The
    matrix is frozen after construction.
    """

    nodes: tuple[BankId, ...]
    weights: np.ndarray
    kind: str
    window: AggregationWindow | None = None

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64)
        n = len(self.nodes)
        if w.shape != (n, n):
            raise ContractError(f"weights shape {w.shape} does not match {n} nodes")
        if len(set(self.nodes)) != n:
            raise ContractError("duplicate bank ids in node roster")
        if n and np.any(np.diagonal(w) != 0.0):
            raise ContractError("self-loops are not allowed (nonzero diagonal)")
        if np.any(w < 0.0):
            raise ContractError("negative weights are not allowed")
        if self.kind not in KINDS:
            raise ContractError(f"unknown network kind {self.kind!r}")
        if self.kind.endswith("binary") and not np.all((w == 0.0) | (w == 1.0)):
            raise ContractError("binary network has entries outside {0, 1}")
        if self.kind.startswith("undirected") and not np.array_equal(w, w.T):
            raise ContractError("undirected network must have symmetric weights")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "nodes", tuple(self.nodes))

    def __eq__(self, other):
        if not isinstance(other, AggregatedNetwork):
            return NotImplemented
        return (
            self.nodes == other.nodes
            and self.kind == other.kind
            and self.window == other.window
            and np.array_equal(self.weights, other.weights)
        )

    def __hash__(self):
        return hash((self.nodes, self.kind, self.window, self.weights.tobytes()))

    @property
    def n(self) -> int:
        return len(self.nodes)

    @property
    def directed(self) -> bool:
        return self.kind.startswith("directed")

    def index(self, bank: BankId) -> int:
        try:
            return self.nodes.index(bank)
        except ValueError:
            raise ContractError(f"bank {bank!r} not in network") from None

    def link_count(self) -> int:
        nnz = int(np.count_nonzero(self.weights))
        return nnz if self.directed else nnz // 2

    def total_weight(self) -> float:
        s = float(self.weights.sum())
        return s if self.directed else s / 2.0

    def has_integer_weights(self) -> bool:
        return bool(np.all(self.weights == np.floor(self.weights)))


# ---------------------------------------------------------------------------
# ingestion and aggregation


def ingest(path: str | Path, domestic_only: bool = False) -> tuple[Transaction, ...]:
    """Read a transactions CSV, returning records sorted by date.

    Rows failing to parse raise :class:`ParseError` with their line number;
    rows with non-positive volume or equal counterparties raise
    :class:`RejectedRowError`.  With ``domestic_only`` set, non-domestic rows
    are dropped entirely, so banks appearing only on dropped rows never enter
    any downstream roster.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file, expected header", line=1) from None
        if tuple(h.strip() for h in header) != CSV_HEADER:
            raise ParseError(
                f"{path}: line 1: expected header {','.join(CSV_HEADER)}", line=1
            )
        txs: list[Transaction] = []
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 5:
                raise ParseError(f"{path}: line {lineno}: expected 5 fields, got {len(row)}", line=lineno)
            raw_date, lender, borrower, raw_volume, raw_domestic = (f.strip() for f in row)
            try:
                day = date.fromisoformat(raw_date)
            except ValueError:
                raise ParseError(f"{path}: line {lineno}: bad date {raw_date!r}", line=lineno) from None
            try:
                volume = float(raw_volume)
            except ValueError:
                raise ParseError(f"{path}: line {lineno}: bad volume {raw_volume!r}", line=lineno) from None
            if raw_domestic not in ("0", "1"):
                raise ParseError(
                    f"{path}: line {lineno}: domestic flag must be 0 or 1, got {raw_domestic!r}",
                    line=lineno,
                )
            if volume <= 0:
                raise RejectedRowError(
                    f"{path}: line {lineno}: non-positive volume {volume}", line=lineno
                )
            if not lender or not borrower:
                raise ParseError(f"{path}: line {lineno}: empty bank id", line=lineno)
            if lender == borrower:
                raise RejectedRowError(
                    f"{path}: line {lineno}: lender equals borrower ({lender!r})", line=lineno
                )
            domestic = raw_domestic == "1"
            if domestic_only and not domestic:
                continue
            txs.append(Transaction(day, lender, borrower, volume, domestic))
    txs.sort(key=lambda t: t.day)
    return tuple(txs)


def aggregate(txs, window: AggregationWindow) -> AggregatedNetwork:
    """Sum loan volumes lender -> borrower over the window.

    The node roster is exactly the banks active inside the window, sorted by
    id.  A transaction dated outside the window violates the contract.
    """
    for t in txs:
        if not window.contains(t.day):
            raise ContractError(f"transaction on {t.day} outside window {window.start}+{window.span}")
    banks = sorted({t.lender for t in txs} | {t.borrower for t in txs})
    idx = {b: i for i, b in enumerate(banks)}
    w = np.zeros((len(banks), len(banks)))
    for t in txs:
        w[idx[t.lender], idx[t.borrower]] += t.volume
    return AggregatedNetwork(tuple(banks), w, DIRECTED_WEIGHTED, window)


def slice_transactions(txs, window: AggregationWindow):
    """The subsequence of ``txs`` dated inside ``window``."""
    return tuple(t for t in txs if window.contains(t.day))


# ---------------------------------------------------------------------------
# transforms


def _binary_kind(kind: str) -> str:
    return DIRECTED_BINARY if kind.startswith("directed") else UNDIRECTED_BINARY


def binarize(net: AggregatedNetwork) -> AggregatedNetwork:
    """Indicator transform: entry 1 wherever the weight is positive."""
    a = (net.weights > 0).astype(np.float64)
    return AggregatedNetwork(net.nodes, a, _binary_kind(net.kind), net.window)


def symmetrize(net: AggregatedNetwork) -> AggregatedNetwork:
    """Undirect the network: binary by OR of the two directions, weighted by W + W^T."""
    if net.kind.endswith("binary"):
        w = ((net.weights + net.weights.T) > 0).astype(np.float64)
        kind = UNDIRECTED_BINARY
    else:
        w = net.weights + net.weights.T
        kind = UNDIRECTED_WEIGHTED
    return AggregatedNetwork(net.nodes, w, kind, net.window)


def discretize_weights(net: AggregatedNetwork) -> AggregatedNetwork:
    """Log-discretize volumes: W = floor(log_c(1 + V)) with c = 1 + min positive V.

    Zeros stay zero and every minimal positive volume maps to weight 1.  The
    tiny epsilon inside the floor keeps exact powers of c from landing one
    notch low due to float rounding.
    """
    if net.kind.endswith("binary"):
        raise ContractError("discretize expects a weighted network")
    positive = net.weights[net.weights > 0]
    if positive.size == 0:
        raise DegenerateInputError("cannot discretize an all-zero network (base undefined)")
    c = 1.0 + float(positive.min())
    out = np.zeros_like(net.weights)
    mask = net.weights > 0
    out[mask] = np.floor(np.log1p(net.weights[mask]) / log(c) + 1e-12)
    return AggregatedNetwork(net.nodes, out, net.kind, net.window)


def density(net: AggregatedNetwork) -> float:
    """Links divided by possible links; needs at least two banks."""
    if net.n < 2:
        raise DegenerateInputError(f"density undefined for {net.n} nodes")
    possible = net.n * (net.n - 1)
    if not net.directed:
        possible //= 2
    return net.link_count() / possible


def volume_per_link(net: AggregatedNetwork) -> float:
    """Total weight divided by the number of links; needs at least one link."""
    nnz = int(np.count_nonzero(net.weights))
    if nnz == 0:
        raise DegenerateInputError("volume per link undefined on an empty network")
    return float(net.weights.sum()) / nnz


def induced_subnetwork(net: AggregatedNetwork, banks) -> AggregatedNetwork:
    """The subgraph induced on ``banks`` (sorted by id), keeping kind and window."""
    keep = sorted(set(banks))
    idx = [net.index(b) for b in keep]
    w = net.weights[np.ix_(idx, idx)].copy()
    return AggregatedNetwork(tuple(keep), w, net.kind, net.window)


# ---------------------------------------------------------------------------
# edge-list serialization


def write_edge_list(net: AggregatedNetwork, path: str | Path) -> None:
    """Write the exact-round-trip edge list format described in the module docstring."""
    for b in net.nodes:
        if not b or any(ch.isspace() for ch in b) or b.startswith("#"):
            raise ContractError(f"bank id {b!r} cannot be written to an edge list")
    lines = ["# blockscope network v1", f"# kind: {net.kind}"]
    if net.window is not None:
        lines.append(f"# window: {net.window.start.isoformat()} {net.window.span}")
    lines.append("# nodes: " + " ".join(net.nodes))
    ii, jj = np.nonzero(net.weights)
    for i, j in zip(ii.tolist(), jj.tolist()):
        lines.append(f"{i} {j} {float(net.weights[i, j])!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_edge_list(path: str | Path) -> AggregatedNetwork:
    """Parse a file produced by :func:`write_edge_list`."""
    path = Path(path)
    kind = None
    window = None
    nodes: tuple[BankId, ...] | None = None
    entries: list[tuple[int, int, float]] = []
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("kind:"):
                kind = body[len("kind:"):].strip()
            elif body.startswith("window:"):
                parts = body[len("window:"):].split()
                if len(parts) != 2:
                    raise ParseError(f"{path}: line {lineno}: bad window directive", line=lineno)
                window = AggregationWindow(date.fromisoformat(parts[0]), int(parts[1]))
            elif body.startswith("nodes:"):
                nodes = tuple(body[len("nodes:"):].split())
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ParseError(f"{path}: line {lineno}: expected 'i j w'", line=lineno)
        try:
            entries.append((int(parts[0]), int(parts[1]), float(parts[2])))
        except ValueError:
            raise ParseError(f"{path}: line {lineno}: bad edge entry", line=lineno) from None
    if kind is None or nodes is None:
        raise ParseError(f"{path}: missing kind or nodes header")
    w = np.zeros((len(nodes), len(nodes)))
    for i, j, v in entries:
        if not (0 <= i < len(nodes) and 0 <= j < len(nodes)):
            raise ParseError(f"{path}: edge ({i}, {j}) outside node range")
        w[i, j] = v
    return AggregatedNetwork(nodes, w, kind, window)
