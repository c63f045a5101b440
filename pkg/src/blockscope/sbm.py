"""Two flavours of stochastic block model over directed networks.

Bernoulli: each ordered pair (i, j), i != j, carries a link with probability
p[g_i, g_j].  Poisson: the integer weight W_ij is drawn with mean p[g_i, g_j],
which treats a weighted link as that many parallel links.

The microcanonical entropy of an assignment is

    S = sum_rs  pairs_rs * H(e_rs / pairs_rs),   H(x) = -x ln x - (1-x) ln(1-x)

with pairs_rs = n_r * n_s off the diagonal and n_r * (n_r - 1) on it (ordered
pairs without self-loops).  S equals the negative profile log-likelihood of
the Bernoulli model, which is why minimizing it is maximum likelihood.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, xlogy

from .errors import ContractError
from .netcore import (
    DIRECTED_BINARY,
    DIRECTED_WEIGHTED,
    UNDIRECTED_BINARY,
    AggregatedNetwork,
    BankId,
)
from .rng import spawn

BERNOULLI = "bernoulli-probability"
POISSON = "poisson-rate"


@dataclass(frozen=True)
class BlockAssignment:
    """Zero-based block label per node plus the block count ``m``."""

    labels: tuple[int, ...]
    m: int

    def __post_init__(self):
        if self.m < 1:
            raise ContractError(f"need at least one block, got m={self.m}")
        if any(not 0 <= g < self.m for g in self.labels):
            raise ContractError("block label out of range")
        object.__setattr__(self, "labels", tuple(int(g) for g in self.labels))

    @property
    def n(self) -> int:
        return len(self.labels)

    def sizes(self) -> np.ndarray:
        return np.bincount(np.asarray(self.labels), minlength=self.m)

    def swapped(self, r: int, s: int) -> "BlockAssignment":
        rel = {r: s, s: r}
        return BlockAssignment(tuple(rel.get(g, g) for g in self.labels), self.m)


@dataclass(frozen=True)
class AffinityMatrix:
    """m x m block-to-block link probabilities (Bernoulli) or rates (Poisson)."""

    entries: np.ndarray
    mode: str

    def __post_init__(self):
        e = np.array(self.entries, dtype=np.float64)
        if e.ndim != 2 or e.shape[0] != e.shape[1]:
            raise ContractError(f"affinity matrix must be square, got {e.shape}")
        if self.mode == BERNOULLI:
            if np.any(e < 0) or np.any(e > 1):
                raise ContractError("Bernoulli affinities must lie in [0, 1]")
        elif self.mode == POISSON:
            if np.any(e < 0):
                raise ContractError("Poisson rates must be non-negative")
        else:
            raise ContractError(f"unknown affinity mode {self.mode!r}")
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)

    @property
    def m(self) -> int:
        return self.entries.shape[0]

    def __eq__(self, other):
        if not isinstance(other, AffinityMatrix):
            return NotImplemented
        return self.mode == other.mode and np.array_equal(self.entries, other.entries)

    def __hash__(self):
        return hash((self.mode, self.entries.tobytes()))

    def to_dict(self) -> dict:
        return {"entries": [list(map(float, row)) for row in self.entries], "mode": self.mode}

    @staticmethod
    def from_dict(d: dict) -> "AffinityMatrix":
        return AffinityMatrix(np.array(d["entries"], dtype=np.float64), d["mode"])


@dataclass(frozen=True)
class EdgeCounts:
    """Directed block-to-block edge (or multi-edge) totals and ordered pair counts."""

    e: np.ndarray
    pair_counts: np.ndarray

    def __post_init__(self):
        e = np.array(self.e, dtype=np.float64)
        p = np.array(self.pair_counts, dtype=np.float64)
        if e.shape != p.shape or e.ndim != 2:
            raise ContractError("edge and pair count matrices must share a square shape")
        if np.any(e < 0):
            raise ContractError("edge counts must be non-negative")
        e.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "e", e)
        object.__setattr__(self, "pair_counts", p)


def _check_dims(net: AggregatedNetwork, g: BlockAssignment, p: AffinityMatrix | None = None):
    if g.n != net.n:
        raise ContractError(f"assignment covers {g.n} nodes, network has {net.n}")
    if p is not None and p.m != g.m:
        raise ContractError(f"affinity is {p.m}x{p.m} but assignment has m={g.m}")


def _offdiag_mask(n: int) -> np.ndarray:
    return ~np.eye(n, dtype=bool)


def bernoulli_loglik(net: AggregatedNetwork, g: BlockAssignment, p: AffinityMatrix) -> float:
    """log P(A | g, p) = sum over ordered pairs of A ln p + (1 - A) ln(1 - p).

    Uses the 0 * ln 0 = 0 convention; an observation impossible under a hard
    0/1 affinity yields -inf rather than an error.
    """
    if p.mode != BERNOULLI:
        raise ContractError("bernoulli_loglik needs a Bernoulli-mode affinity")
    _check_dims(net, g, p)
    a = net.weights
    if not np.all((a == 0) | (a == 1)):
        raise ContractError("bernoulli_loglik expects a binary network")
    lab = np.asarray(g.labels)
    pm = p.entries[lab[:, None], lab[None, :]]
    mask = _offdiag_mask(net.n)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = xlogy(a, pm) + xlogy(1.0 - a, 1.0 - pm)
    return float(terms[mask].sum())


def poisson_loglik(net: AggregatedNetwork, g: BlockAssignment, p: AffinityMatrix) -> float:
    """log P(W | g, p) = sum over ordered pairs of W ln r - r - ln W!."""
    if p.mode != POISSON:
        raise ContractError("poisson_loglik needs a Poisson-mode affinity")
    _check_dims(net, g, p)
    w = net.weights
    if np.any(w < 0) or not net.has_integer_weights():
        raise ContractError("poisson_loglik expects non-negative integer weights")
    lab = np.asarray(g.labels)
    rates = p.entries[lab[:, None], lab[None, :]]
    mask = _offdiag_mask(net.n)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = xlogy(w, rates) - rates - gammaln(w + 1.0)
    return float(terms[mask].sum())


def edge_counts(net: AggregatedNetwork, g: BlockAssignment) -> EdgeCounts:
    """Block-to-block totals e_rs and ordered pair counts for the assignment."""
    _check_dims(net, g)
    lab = np.asarray(g.labels)
    m = g.m
    e = np.zeros((m, m))
    np.add.at(e, (lab[:, None], lab[None, :]), net.weights)
    # the diagonal of the weights is zero, so self-pairs contribute nothing
    sizes = g.sizes().astype(np.float64)
    pairs = np.outer(sizes, sizes)
    np.fill_diagonal(pairs, sizes * (sizes - 1))
    return EdgeCounts(e, pairs)


def mle_affinity(net: AggregatedNetwork, g: BlockAssignment) -> AffinityMatrix:
    """Maximum-likelihood affinity: edge (or weight) totals over pair counts.

    Blocks with zero ordered pairs get affinity 0 by convention.
    """
    counts = edge_counts(net, g)
    with np.errstate(divide="ignore", invalid="ignore"):
        p = np.where(counts.pair_counts > 0, counts.e / np.where(counts.pair_counts > 0, counts.pair_counts, 1.0), 0.0)
    binary = net.kind.endswith("binary")
    return AffinityMatrix(p, BERNOULLI if binary else POISSON)


def _h(x: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        return -(xlogy(x, x) + xlogy(1.0 - x, 1.0 - x))


def entropy(counts: EdgeCounts) -> float:
    """Microcanonical entropy S = sum pairs * H(e / pairs), with H(0) = H(1) = 0."""
    e, pairs = counts.e, counts.pair_counts
    if np.any(e > pairs):
        raise ContractError("edge count exceeds available ordered pairs")
    x = np.where(pairs > 0, e / np.where(pairs > 0, pairs, 1.0), 0.0)
    return float((pairs * _h(x)).sum())


def poisson_objective(counts: EdgeCounts, log_factorial_sum: float = 0.0) -> float:
    """Negative maximized Poisson log-likelihood, the weighted analogue of S.

    At the MLE rates e/pairs the profile log-likelihood collapses to
    sum_rs [e ln(e/pairs) - e] minus the data-only ln W! term, passed in as
    ``log_factorial_sum``.
    """
    e, pairs = counts.e, counts.pair_counts
    with np.errstate(divide="ignore", invalid="ignore"):
        lam = np.where(pairs > 0, e / np.where(pairs > 0, pairs, 1.0), 0.0)
        terms = e - xlogy(e, lam)
    return float(terms.sum()) + log_factorial_sum


def log_factorial_sum(net: AggregatedNetwork) -> float:
    """sum over ordered pairs of ln(W_ij!), the assignment-independent Poisson term."""
    return float(gammaln(net.weights + 1.0).sum())


def sample(
    g: BlockAssignment,
    p: AffinityMatrix,
    seed: int,
    nodes: tuple[BankId, ...] | None = None,
) -> AggregatedNetwork:
    """Draw one directed network from the model; bit-reproducible given the seed.

    Bernoulli mode links each ordered pair independently; Poisson mode draws
    an integer weight with the block rate as mean.
    """
    if p.m != g.m:
        raise ContractError(f"affinity is {p.m}x{p.m} but assignment has m={g.m}")
    n = g.n
    if nodes is None:
        nodes = tuple(f"n{i:03d}" for i in range(n))
    if len(nodes) != n:
        raise ContractError("node roster length does not match assignment")
    lab = np.asarray(g.labels)
    params = p.entries[lab[:, None], lab[None, :]]
    rng = spawn(seed, 0)
    if p.mode == BERNOULLI:
        w = (rng.random((n, n)) < params).astype(np.float64)
        kind = DIRECTED_BINARY
    else:
        w = rng.poisson(params).astype(np.float64)
        kind = DIRECTED_WEIGHTED
    np.fill_diagonal(w, 0.0)
    return AggregatedNetwork(nodes, w, kind)


def sample_undirected(
    g: BlockAssignment,
    p: AffinityMatrix,
    seed: int,
    nodes: tuple[BankId, ...] | None = None,
) -> AggregatedNetwork:
    """Undirected Bernoulli draw: each unordered pair linked once, then mirrored."""
    if p.mode != BERNOULLI:
        raise ContractError("undirected sampling is defined for Bernoulli mode")
    if p.m != g.m:
        raise ContractError(f"affinity is {p.m}x{p.m} but assignment has m={g.m}")
    n = g.n
    if nodes is None:
        nodes = tuple(f"n{i:03d}" for i in range(n))
    lab = np.asarray(g.labels)
    params = p.entries[lab[:, None], lab[None, :]]
    rng = spawn(seed, 1)
    upper = np.triu(rng.random((n, n)) < params, k=1).astype(np.float64)
    w = upper + upper.T
    return AggregatedNetwork(tuple(nodes), w, UNDIRECTED_BINARY)
