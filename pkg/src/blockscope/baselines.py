"""Score-based core-periphery detectors and the expected-score bias experiment.

Four detectors, for head-to-head comparison with block-model labels:

* discrete: minimize Z(S) = missing links inside the candidate core S plus
  present links inside the periphery.  The minimum is always attained by a
  prefix of the descending-degree order (swapping any core member for a
  higher-degree outsider never increases Z), so the detector scans prefixes.
* symmetric continuous: least-squares rank-one fit  min_u sum_{i!=j} (A_ij - u_i u_j)^2.
* asymmetric continuous: min_{u,v} sum_{i!=j} (A_ij - u_i v_j)^2, separating
  out-coreness u from in-coreness v.
* tiering: directed core of intermediaries.  The error charges missing
  ordered links inside the core, present ordered links inside the periphery,
  and 1 per core node lacking any in-link or any out-link.  Because a flip's
  error change is 2s - deg + penalty regardless of which nodes are already in
  the core, the error separates per node and the exact minimizer is again a
  sorted prefix scan; no local search is needed.

The bias experiment samples planted core-periphery graphs and averages Z
along the expected-degree nesting (planted core first), reporting where the
mean curve bottoms out relative to the true core size.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError, ConvergenceError
from .netcore import AggregatedNetwork
from .rng import spawn, spawn_seed
from .sbm import BERNOULLI, AffinityMatrix, BlockAssignment, sample_undirected

ALS_MAX_SWEEPS = 10_000
ALS_TOL = 1e-10


@dataclass(frozen=True)
class CoreAssignment:
    core: frozenset[int]
    score: float


@dataclass(frozen=True)
class CorenessVectors:
    u: np.ndarray
    v: np.ndarray | None
    objective: float


def _require_undirected_binary(net: AggregatedNetwork):
    if not net.kind == "undirected-binary":
        raise ContractError(f"expected an undirected binary network, got {net.kind}")


def _require_directed_binary(net: AggregatedNetwork):
    if not net.kind == "directed-binary":
        raise ContractError(f"expected a directed binary network, got {net.kind}")


def discrete_cp_score(net: AggregatedNetwork, core) -> int:
    """Z = missing links among core pairs + present links among periphery pairs."""
    _require_undirected_binary(net)
    a = net.weights
    c = np.zeros(net.n, dtype=bool)
    c[list(core)] = True
    iu = np.triu_indices(net.n, 1)
    in_core = c[iu[0]] & c[iu[1]]
    in_per = ~c[iu[0]] & ~c[iu[1]]
    present = a[iu] > 0
    return int(np.sum(in_core & ~present) + np.sum(in_per & present))


def _prefix_scores(degrees: np.ndarray, total_links: int) -> np.ndarray:
    # Z along nested prefixes of a fixed order: Z(s) = Z(s-1) + (s-1) - k_s
    n = len(degrees)
    z = np.empty(n + 1)
    z[0] = total_links
    for s in range(1, n + 1):
        z[s] = z[s - 1] + (s - 1) - degrees[s - 1]
    return z


def discrete_cp_degree_sort(net: AggregatedNetwork) -> CoreAssignment:
    """Best prefix of the descending-degree order under Z (ties toward smaller cores).

    Sorting by degree is exact: the optimal prefix length is the last s with
    k_s >= s - 1, which the scan below finds without relying on the closed
    form.
    """
    _require_undirected_binary(net)
    deg = net.weights.sum(axis=1)
    order = sorted(range(net.n), key=lambda i: (-deg[i], i))
    z = _prefix_scores(deg[order], net.link_count())
    best = int(np.argmin(z))  # argmin takes the first minimum: the smallest core
    return CoreAssignment(frozenset(order[:best]), float(z[best]))


# ---------------------------------------------------------------------------
# continuous coreness fits


def _symmetric_als(a: np.ndarray, u0: np.ndarray):
    u = u0.astype(np.float64).copy()
    n = len(u)

    def objective(vec):
        r = a - np.outer(vec, vec)
        np.fill_diagonal(r, 0.0)
        return float((r * r).sum())

    prev = objective(u)
    for _ in range(ALS_MAX_SWEEPS):
        s2 = float(u @ u)
        for i in range(n):
            denom = s2 - u[i] * u[i]
            new = float(a[i] @ u) / denom if denom > 1e-300 else 0.0
            s2 += new * new - u[i] * u[i]
            u[i] = new
        cur = objective(u)
        if abs(prev - cur) < ALS_TOL:
            return u, cur, True
        prev = cur
    return u, prev, False


def symmetric_continuous(net: AggregatedNetwork) -> CorenessVectors:
    """Rank-one symmetric fit by alternating least squares.

    Starts from the scaled leading eigenvector, a degree-based vector and a
    handful of seeded random vectors, and keeps the best local optimum.  The
    sign is fixed so the corenesses sum to a non-negative value.
    """
    _require_undirected_binary(net)
    a = net.weights
    n = net.n
    if n == 0 or a.sum() == 0:
        return CorenessVectors(np.zeros(n), None, 0.0)
    starts = []
    vals, vecs = np.linalg.eigh(a)
    lead = vecs[:, -1] * np.sqrt(max(vals[-1], 0.0))
    starts.append(lead)
    deg = a.sum(axis=1)
    starts.append(deg / max(np.sqrt(deg.sum()), 1.0))
    rng = spawn(0xB105, n, int(a.sum()))
    for _ in range(4):
        starts.append(rng.random(n))
    best = None
    for u0 in starts:
        u, obj, converged = _symmetric_als(a, u0)
        if best is None or obj < best[1]:
            best = (u, obj, converged)
    u, obj, converged = best
    if not converged:
        raise ConvergenceError(
            f"symmetric coreness fit did not converge in {ALS_MAX_SWEEPS} sweeps",
            best=CorenessVectors(u, None, obj),
        )
    if u.sum() < 0:
        u = -u
    return CorenessVectors(u, None, obj)


def _asymmetric_als(a: np.ndarray, u0: np.ndarray, v0: np.ndarray):
    u = u0.astype(np.float64).copy()
    v = v0.astype(np.float64).copy()
    n = len(u)

    def objective(uu, vv):
        r = a - np.outer(uu, vv)
        np.fill_diagonal(r, 0.0)
        return float((r * r).sum())

    prev = objective(u, v)
    for _ in range(ALS_MAX_SWEEPS):
        s2v = float(v @ v)
        for i in range(n):
            denom = s2v - v[i] * v[i]
            u[i] = float(a[i] @ v) / denom if denom > 1e-300 else 0.0
        s2u = float(u @ u)
        for j in range(n):
            denom = s2u - u[j] * u[j]
            v[j] = float(a[:, j] @ u) / denom if denom > 1e-300 else 0.0
        cur = objective(u, v)
        if abs(prev - cur) < ALS_TOL:
            return u, v, cur, True
        prev = cur
    return u, v, prev, False


def asymmetric_continuous(net: AggregatedNetwork) -> CorenessVectors:
    """Rank-one directed fit separating out-coreness u from in-coreness v.

    The scale gauge is fixed by ||u|| = ||v|| and the sign by sum(u) >= 0,
    neither of which changes the objective.
    """
    _require_directed_binary(net)
    a = net.weights
    n = net.n
    if n == 0 or a.sum() == 0:
        return CorenessVectors(np.zeros(n), np.zeros(n), 0.0)
    uu, sv, vv = np.linalg.svd(a, full_matrices=False)
    scale = np.sqrt(max(sv[0], 0.0))
    starts = [(uu[:, 0] * scale, vv[0] * scale)]
    starts.append((a.sum(axis=1) / max(np.sqrt(a.sum()), 1.0), a.sum(axis=0) / max(np.sqrt(a.sum()), 1.0)))
    rng = spawn(0xAB105, n, int(a.sum()))
    for _ in range(4):
        starts.append((rng.random(n), rng.random(n)))
    best = None
    for u0, v0 in starts:
        u, v, obj, converged = _asymmetric_als(a, u0, v0)
        if best is None or obj < best[2]:
            best = (u, v, obj, converged)
    u, v, obj, converged = best
    if not converged:
        raise ConvergenceError(
            f"asymmetric coreness fit did not converge in {ALS_MAX_SWEEPS} sweeps",
            best=CorenessVectors(u, v, obj),
        )
    nu, nv = float(np.linalg.norm(u)), float(np.linalg.norm(v))
    if nu > 0 and nv > 0:
        s = np.sqrt(nv / nu)
        u, v = u * s, v / s
    if u.sum() < 0:
        u, v = -u, -v
    return CorenessVectors(u, v, obj)


# ---------------------------------------------------------------------------
# tiering model


def tiering_error(net: AggregatedNetwork, core) -> int:
    """Missing ordered links in the core + present ordered links in the
    periphery + 1 per core node without any in-link and per core node without
    any out-link."""
    _require_directed_binary(net)
    a = net.weights
    c = np.zeros(net.n, dtype=bool)
    c[list(core)] = True
    core_pairs = np.outer(c, c)
    per_pairs = np.outer(~c, ~c)
    np.fill_diagonal(core_pairs, False)
    np.fill_diagonal(per_pairs, False)
    missing_core = int(np.sum(core_pairs & (a == 0)))
    present_per = int(np.sum(per_pairs & (a > 0)))
    no_in = (a.sum(axis=0) == 0) & c
    no_out = (a.sum(axis=1) == 0) & c
    return missing_core + present_per + int(no_in.sum()) + int(no_out.sum())


def tiering_cp(net: AggregatedNetwork) -> CoreAssignment:
    """Exact tiering core: best prefix of nodes ordered by total degree minus
    penalty.  Flipping node v into a core of size s changes the error by
    2s - deg(v) + pen(v), independent of the core's composition, so the error
    separates per node and a prefix scan finds the global minimum."""
    _require_directed_binary(net)
    a = net.weights
    deg = a.sum(axis=0) + a.sum(axis=1)
    pen = ((a.sum(axis=0) == 0).astype(int) + (a.sum(axis=1) == 0).astype(int))
    value = deg - pen
    order = sorted(range(net.n), key=lambda i: (-value[i], i))
    total_ordered_links = int(np.count_nonzero(a))
    z = np.empty(net.n + 1)
    z[0] = total_ordered_links
    for s in range(1, net.n + 1):
        v = order[s - 1]
        z[s] = z[s - 1] + 2 * (s - 1) - value[v]
    best = int(np.argmin(z))
    core = frozenset(order[:best])
    score = tiering_error(net, core)
    return CoreAssignment(core, float(score))


# ---------------------------------------------------------------------------
# expected-score bias experiment


@dataclass(frozen=True)
class BiasCurve:
    """Mean Z against candidate core size along the expected-degree nesting."""

    sizes: tuple[int, ...]
    mean_z: tuple[float, ...]
    stderr_z: tuple[float, ...]
    argmin_size: int
    true_core_size: int

    def to_csv(self) -> str:
        lines = ["candidate_size,mean_Z,stderr_Z"]
        for k, mz, se in zip(self.sizes, self.mean_z, self.stderr_z):
            lines.append(f"{k},{mz!r},{se!r}")
        return "\n".join(lines) + "\n"


def _prefix_z_all(a: np.ndarray) -> np.ndarray:
    # Z(k) for every prefix of the natural node order, O(E + N)
    n = len(a)
    ii, jj = np.nonzero(np.triu(a, 1))
    total = len(ii)
    hi = np.maximum(ii, jj) + 1
    lo = np.minimum(ii, jj) + 1
    in_core = np.cumsum(np.bincount(hi, minlength=n + 2)[: n + 1])
    in_per = total - np.cumsum(np.bincount(lo, minlength=n + 2)[: n + 1])
    ks = np.arange(n + 1, dtype=np.int64)
    return ks * (ks - 1) // 2 - in_core + in_per


def expected_z_bias(
    n: int,
    core_size: int,
    p_cc: float,
    p_cp: float,
    p_pp: float,
    samples: int,
    seed: int,
) -> BiasCurve:
    """Average Z over sampled planted core-periphery graphs for each nested
    candidate core, nesting in expected-degree order (planted core first)."""
    if not p_cc > p_cp > p_pp:
        raise ContractError("bias experiment needs p_cc > p_cp > p_pp")
    if not 0 < core_size < n:
        raise ContractError("core size must lie strictly between 0 and n")
    labels = tuple([0] * core_size + [1] * (n - core_size))
    g = BlockAssignment(labels, 2)
    p = AffinityMatrix(np.array([[p_cc, p_cp], [p_cp, p_pp]]), BERNOULLI)
    acc = np.zeros(n + 1)
    acc2 = np.zeros(n + 1)
    for rep in range(samples):
        net = sample_undirected(g, p, spawn_seed(seed, 7, rep))
        z = _prefix_z_all(net.weights)
        acc += z
        acc2 += z * z
    mean = acc / samples
    var = np.maximum(acc2 / samples - mean * mean, 0.0)
    stderr = np.sqrt(var / samples)
    return BiasCurve(
        sizes=tuple(range(n + 1)),
        mean_z=tuple(float(x) for x in mean),
        stderr_z=tuple(float(x) for x in stderr),
        argmin_size=int(np.argmin(mean)),
        true_core_size=core_size,
    )
