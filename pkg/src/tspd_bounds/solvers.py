"""Exact and heuristic TSP / TSPD solvers.

The TSPD solvers are built on one primitive: given a fixed cyclic node order
anchored at position 0, a dynamic program finds the minimum-makespan chain of
rings over consecutive positions, choosing each ring's span and drone node.
The exact solver runs that DP over every node ordering (vectorized across
permutations); the heuristic improves a 2-opt tour by re-partitioning after
random segment reversals, Or-opt relocations, and anchor rotations.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numba import njit
from scipy.spatial import cKDTree

from .geometry import Instance, MetricPair, TruckNorm, derive_seed, substream
from .ringmodel import Ring, TspdSolution, makespan, normalize_no_straight, validate

_EPS = 1e-12

_KEY_TSP = 11
_KEY_IMPROVE = 12


@njit(cache=True)
def _chain_tables(order, T, E, alpha, max_gap):
    """Forward and backward chain-value arrays for incremental move checks.

    F[j] = best chain cost over positions 0..j, B[i] = best over i..n; both
    use rings of span <= max_gap. Valid only when max_gap < n, which keeps
    the forbidden full-circle single ring out of reach."""
    n = order.shape[0]
    inf = 1e300
    cd = np.empty(n)
    for p in range(n):
        cd[p] = T[order[p], order[(p + 1) % n]]
    pre = np.empty(n + 1)
    pre[0] = 0.0
    for p in range(n):
        pre[p + 1] = pre[p] + cd[p]

    f = np.empty(n + 1)
    f[0] = 0.0
    b = np.empty(n + 1)
    b[n] = 0.0
    for j in range(1, n + 1):
        best = inf
        g_hi = max_gap if max_gap < j else j
        for g in range(1, g_hi + 1):
            i = j - g
            base = pre[j] - pre[i]
            c = base
            if g >= 2:
                ia = order[i]
                ib = order[j % n]
                for t in range(1, g):
                    d = i + t
                    od = order[d]
                    skip = base - cd[d - 1] - cd[d] + T[order[d - 1], order[(d + 1) % n]]
                    fly = (E[ia, od] + E[od, ib]) / alpha
                    cand = skip if skip > fly else fly
                    if cand < c:
                        c = cand
            v = f[i] + c
            if v < best:
                best = v
        f[j] = best
    for i in range(n - 1, -1, -1):
        best = inf
        g_hi = max_gap if max_gap < n - i else n - i
        for g in range(1, g_hi + 1):
            j = i + g
            base = pre[j] - pre[i]
            c = base
            if g >= 2:
                ia = order[i]
                ib = order[j % n]
                for t in range(1, g):
                    d = i + t
                    od = order[d]
                    skip = base - cd[d - 1] - cd[d] + T[order[d - 1], order[(d + 1) % n]]
                    fly = (E[ia, od] + E[od, ib]) / alpha
                    cand = skip if skip > fly else fly
                    if cand < c:
                        c = cand
            v = c + b[j]
            if v < best:
                best = v
        b[i] = best
    return f, b


@njit(cache=True)
def _bridge_value(order, T, E, alpha, max_gap, f_old, b_old, a, bchg):
    """Chain value of `order` when only positions [a, bchg] differ from the
    order that produced f_old/b_old. Requires 1 <= a <= bchg <= n-1 and
    max_gap < n."""
    n = order.shape[0]
    inf = 1e300
    lo = a - max_gap
    if lo < 0:
        lo = 0
    hi = bchg + max_gap
    if hi > n:
        hi = n
    m = hi - lo  # number of window edges (positions lo..hi-1)
    cdw = np.empty(m)
    for p in range(lo, hi):
        cdw[p - lo] = T[order[p], order[(p + 1) % n]]
    prew = np.empty(m + 1)
    prew[0] = 0.0
    for q in range(m):
        prew[q + 1] = prew[q] + cdw[q]

    d = np.full(hi - lo + 1, inf)
    for x in range(lo, a):
        d[x - lo] = f_old[x]
    best_total = inf
    for j in range(a, hi + 1):
        best = inf
        g_hi = max_gap if max_gap < j - lo else j - lo
        for g in range(1, g_hi + 1):
            i = j - g
            prev = d[i - lo]
            if prev >= inf:
                continue
            base = prew[j - lo] - prew[i - lo]
            c = base
            if g >= 2:
                ia = order[i]
                ib = order[j % n]
                for t in range(1, g):
                    p = i + t
                    op = order[p]
                    skip = base - cdw[p - 1 - lo] - cdw[p - lo] \
                        + T[order[p - 1], order[(p + 1) % n]]
                    fly = (E[ia, op] + E[op, ib]) / alpha
                    cand = skip if skip > fly else fly
                    if cand < c:
                        c = cand
            v = prev + c
            if v < best:
                best = v
        d[j - lo] = best
        if j > bchg:
            total = best + b_old[j]
            if total < best_total:
                best_total = total
    return best_total


@njit(cache=True)
def _chain_value(order, T, E, alpha, max_gap, forbid_straight):
    """Minimum ring-chain makespan over the anchored cyclic order.

    Same recursion as _PartitionContext.solve, compiled for the heuristic's
    inner loop. Returns inf when no feasible chain exists (forbid_straight
    with n == 3)."""
    n = order.shape[0]
    inf = 1e300
    cd = np.empty(n)
    for p in range(n):
        cd[p] = T[order[p], order[(p + 1) % n]]
    pre = np.empty(n + 1)
    pre[0] = 0.0
    for p in range(n):
        pre[p + 1] = pre[p] + cd[p]
    f = np.empty(n + 1)
    f[0] = 0.0
    for j in range(1, n + 1):
        best = inf
        lo_i = 1 if j == n else 0  # a single ring may not close on itself
        g_hi = max_gap if max_gap < j else j
        for g in range(1, g_hi + 1):
            i = j - g
            if i < lo_i:
                break
            base = pre[j] - pre[i]
            if g == 1:
                c = inf if forbid_straight else base
            else:
                c = base
                ia = order[i]
                ib = order[j % n]
                for t in range(1, g):
                    d = i + t
                    od = order[d]
                    skip = base - cd[d - 1] - cd[d] + T[order[d - 1], order[(d + 1) % n]]
                    fly = (E[ia, od] + E[od, ib]) / alpha
                    cand = skip if skip > fly else fly
                    if cand < c:
                        c = cand
            v = f[i] + c
            if v < best:
                best = v
        f[j] = best
    return f[n]


@dataclass(frozen=True)
class Tour:
    order: tuple[int, ...]
    length: float


@dataclass(frozen=True)
class SolveReport:
    solution: TspdSolution
    makespan: float
    method: str
    elapsed: float
    seed: Optional[int] = None


@dataclass(frozen=True)
class HeuristicConfig:
    restarts: int = 5
    patience: int = 20
    moves_per_round: Optional[int] = None  # default: max(48, n)
    or_opt_lengths: tuple[int, ...] = (1, 2, 3)
    max_ring: int = 8
    tsp_restarts: int = 2
    anchor_tries: int = 2
    max_rounds: int = 100_000


def truck_matrix(coords: np.ndarray, norm: TruckNorm) -> np.ndarray:
    d = coords[:, None, :] - coords[None, :, :]
    if norm == TruckNorm.RECTILINEAR:
        return np.abs(d).sum(axis=2)
    return np.sqrt((d ** 2).sum(axis=2))


def euclid_matrix(coords: np.ndarray) -> np.ndarray:
    return truck_matrix(coords, TruckNorm.EUCLIDEAN)


def tour_length(order, dist: np.ndarray) -> float:
    o = np.asarray(order)
    return float(dist[o, np.roll(o, -1)].sum())


# ---------------------------------------------------------------------------
# TSP

def tsp_exact(inst: Instance, norm: TruckNorm) -> Tour:
    """Optimal closed tour by dynamic programming over subsets (n <= 15)."""
    n = inst.n
    if not 2 <= n <= 15:
        raise ValueError(f"tsp_exact supports 2 <= n <= 15, got {n}")
    dist = truck_matrix(inst.coords(), norm)
    if n == 2:
        return Tour(order=(0, 1), length=2.0 * float(dist[0, 1]))

    # dp[mask][j]: best path 0 -> ... -> j+1 visiting exactly the nodes of
    # mask (over nodes 1..n-1).
    m = n - 1
    size = 1 << m
    inf = float("inf")
    dp = [[inf] * m for _ in range(size)]
    parent = [[-1] * m for _ in range(size)]
    for j in range(m):
        dp[1 << j][j] = float(dist[0, j + 1])
    for mask in range(1, size):
        row = dp[mask]
        for last in range(m):
            cur = row[last]
            if cur == inf or not mask & (1 << last):
                continue
            drow = dist[last + 1]
            for nxt in range(m):
                bit = 1 << nxt
                if mask & bit:
                    continue
                cand = cur + float(drow[nxt + 1])
                if cand < dp[mask | bit][nxt]:
                    dp[mask | bit][nxt] = cand
                    parent[mask | bit][nxt] = last
    full = size - 1
    best = inf
    best_last = -1
    for last in range(m):
        cand = dp[full][last] + float(dist[last + 1, 0])
        if cand < best:
            best, best_last = cand, last
    order = [0]
    mask, last = full, best_last
    chain = []
    while last != -1:
        chain.append(last + 1)
        mask, last = mask & ~(1 << last), parent[mask][last]
    order.extend(reversed(chain))
    return Tour(order=tuple(order), length=best)


def _nn_tour_small(dist: np.ndarray, start: int) -> np.ndarray:
    n = dist.shape[0]
    visited = np.zeros(n, dtype=bool)
    order = np.empty(n, dtype=np.int64)
    order[0] = start
    visited[start] = True
    cur = start
    for i in range(1, n):
        row = np.where(visited, np.inf, dist[cur])
        cur = int(np.argmin(row))
        order[i] = cur
        visited[cur] = True
    return order


def _nn_tour_large(coords: np.ndarray, tree: cKDTree, p: float, start: int) -> np.ndarray:
    n = coords.shape[0]
    visited = np.zeros(n, dtype=bool)
    order = np.empty(n, dtype=np.int64)
    order[0] = start
    visited[start] = True
    cur = start
    k = min(64, n)
    for i in range(1, n):
        nxt = -1
        _, idx = tree.query(coords[cur], k=k, p=p)
        for c in np.atleast_1d(idx):
            if not visited[c]:
                nxt = int(c)
                break
        if nxt < 0:
            rest = np.flatnonzero(~visited)
            d = coords[rest] - coords[cur]
            if p == 1:
                vals = np.abs(d).sum(axis=1)
            else:
                vals = (d ** 2).sum(axis=1)
            nxt = int(rest[np.argmin(vals)])
        order[i] = nxt
        visited[nxt] = True
        cur = nxt
    return order


def _two_opt_full(order: np.ndarray, dist: np.ndarray) -> np.ndarray:
    """2-opt to a local optimum with full move scans (dense matrix)."""
    n = order.size
    t = order.copy()
    improved = True
    while improved:
        improved = False
        for i in range(1, n - 1):
            a, b = t[i - 1], t[i]
            js = np.arange(i + 1, n)
            c = t[js]
            d = t[(js + 1) % n]
            delta = dist[a, c] + dist[b, d] - dist[a, b] - dist[c, d]
            j_rel = int(np.argmin(delta))
            if delta[j_rel] < -_EPS:
                j = i + 1 + j_rel
                t[i:j + 1] = t[i:j + 1][::-1]
                improved = True
    return t


def _or_opt_full(order: np.ndarray, dist: np.ndarray) -> np.ndarray:
    """Relocate segments of length 1..3 (either orientation) while it helps."""
    n = order.size
    t = order.copy()
    if n < 5:
        return t
    arange_cache = np.arange(n)
    improved = True
    while improved:
        improved = False
        for length in (1, 2, 3):
            if n - length < 4:
                continue
            for s in range(1, n - length):
                seg = t[s:s + length]
                a, b = t[s - 1], t[(s + length) % n]
                gain = dist[a, seg[0]] + dist[seg[-1], b] - dist[a, b]
                if gain <= _EPS:
                    continue
                rest = np.concatenate([t[:s], t[s + length:]])
                m = rest.size
                u = rest
                v = rest[(arange_cache[:m] + 1) % m]
                add_f = dist[u, seg[0]] + dist[seg[-1], v] - dist[u, v]
                add_r = dist[u, seg[-1]] + dist[seg[0], v] - dist[u, v]
                jf = int(np.argmin(add_f))
                jr = int(np.argmin(add_r))
                if add_r[jr] < add_f[jf]:
                    j, cost, piece = jr, add_r[jr], seg[::-1]
                else:
                    j, cost, piece = jf, add_f[jf], seg
                if cost < gain - _EPS:
                    t = np.concatenate([rest[:j + 1], piece, rest[j + 1:]])
                    improved = True
    return t


def _or_opt_neighbors(order: np.ndarray, coords: np.ndarray, p: float,
                      neighbors: np.ndarray) -> np.ndarray:
    """Or-opt restricted to reinsertion next to geometric neighbors."""
    n = order.size
    if n < 5:
        return order.copy()

    def d(a, b):
        v = coords[a] - coords[b]
        if p == 1:
            return abs(v[0]) + abs(v[1])
        return math.hypot(v[0], v[1])

    t = order.copy()
    pos = np.empty(n, dtype=np.int64)
    pos[t] = np.arange(n)
    improved = True
    while improved:
        improved = False
        for s in range(1, n - 3):
            for length in (1, 2, 3):
                seg = t[s:s + length]
                a, b = t[s - 1], t[(s + length) % n]
                gain = d(a, seg[0]) + d(seg[-1], b) - d(a, b)
                if gain <= _EPS:
                    continue
                best = None
                for c in neighbors[seg[0]]:
                    j = int(pos[c])
                    if s - 1 <= j <= s + length:
                        continue
                    v = t[(j + 1) % n]
                    if v == seg[0]:
                        continue
                    fwd = d(c, seg[0]) + d(seg[-1], v) - d(c, v)
                    rev = d(c, seg[-1]) + d(seg[0], v) - d(c, v)
                    cost, flip = (fwd, False) if fwd <= rev else (rev, True)
                    if cost < gain - _EPS and (best is None or cost < best[0]):
                        best = (cost, j, flip)
                if best is not None:
                    _, j, flip = best
                    piece = seg[::-1] if flip else seg
                    rest = np.concatenate([t[:s], t[s + length:]])
                    jj = j + 1 if j < s else j - length + 1
                    t = np.concatenate([rest[:jj], piece, rest[jj:]])
                    pos[t] = np.arange(n)
                    improved = True
                    break
    return t


def _greedy_edge_tour(coords: np.ndarray, tree: cKDTree, p: float, k: int = 10) -> np.ndarray:
    """Greedy edge-matching construction over k-nearest-neighbor candidates."""
    n = coords.shape[0]
    k = min(k, n - 1)
    dd, nb = tree.query(coords, k=k + 1, p=p)
    cand = []
    for i in range(n):
        for s in range(1, k + 1):
            j = int(nb[i, s])
            if i < j:
                cand.append((float(dd[i, s]), i, j))
    cand.sort()

    parent = list(range(n))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    deg = [0] * n
    adj: list[list[int]] = [[] for _ in range(n)]
    accepted = 0

    def connect(i: int, j: int) -> None:
        nonlocal accepted
        parent[find(i)] = find(j)
        adj[i].append(j)
        adj[j].append(i)
        deg[i] += 1
        deg[j] += 1
        accepted += 1

    for _, i, j in cand:
        if accepted == n - 1:
            break
        if deg[i] >= 2 or deg[j] >= 2 or find(i) == find(j):
            continue
        connect(i, j)
    while accepted < n - 1:
        ends = [i for i in range(n) if deg[i] < 2]
        i = ends[0]
        best = None
        for j in ends[1:]:
            if find(i) == find(j):
                continue
            v = coords[i] - coords[j]
            w = abs(v[0]) + abs(v[1]) if p == 1 else math.hypot(v[0], v[1])
            if best is None or w < best[0]:
                best = (w, j)
        connect(i, best[1])
    ends = [i for i in range(n) if deg[i] < 2]
    adj[ends[0]].append(ends[1])
    adj[ends[1]].append(ends[0])

    order = np.empty(n, dtype=np.int64)
    order[0] = 0
    prev, cur = -1, 0
    for q in range(1, n):
        nxt = adj[cur][0] if adj[cur][0] != prev else adj[cur][1]
        order[q] = nxt
        prev, cur = cur, nxt
    return order


def _two_opt_neighbors(order: np.ndarray, coords: np.ndarray, p: float,
                       neighbors: np.ndarray) -> np.ndarray:
    """2-opt restricted to candidate neighbor pairs, with don't-look bits."""
    n = order.size

    def d(a, b):
        v = coords[a] - coords[b]
        if p == 1:
            return abs(v[0]) + abs(v[1])
        return math.hypot(v[0], v[1])

    t = order.copy()
    pos = np.empty(n, dtype=np.int64)
    pos[t] = np.arange(n)
    dont_look = np.zeros(n, dtype=bool)
    queue = list(t)
    in_queue = np.ones(n, dtype=bool)
    while queue:
        a = queue.pop()
        in_queue[a] = False
        if dont_look[a]:
            continue
        improved_any = False
        for direction in (0, 1):
            i = pos[a]
            if direction == 0:
                b = t[(i + 1) % n]
            else:
                b = t[(i - 1) % n]
            dab = d(a, b)
            for c in neighbors[a]:
                if c == a or c == b:
                    continue
                dac = d(a, c)
                if dac >= dab:
                    break  # neighbor lists are sorted by distance
                j = pos[c]
                if direction == 0:
                    e = t[(j + 1) % n]
                else:
                    e = t[(j - 1) % n]
                if e == a:
                    continue
                delta = dac + d(b, e) - dab - d(c, e)
                if delta < -_EPS:
                    # Reverse the span between b and c (successor case) or
                    # c and b (predecessor case), in positions.
                    if direction == 0:
                        lo, hi = (i + 1) % n, j
                    else:
                        lo, hi = j, (i - 1) % n
                    if lo <= hi:
                        t[lo:hi + 1] = t[lo:hi + 1][::-1]
                        pos[t[lo:hi + 1]] = np.arange(lo, hi + 1)
                    else:
                        seg = np.concatenate([t[lo:], t[:hi + 1]])[::-1]
                        t[lo:] = seg[: n - lo]
                        t[:hi + 1] = seg[n - lo:]
                        pos[t[lo:]] = np.arange(lo, n)
                        pos[t[:hi + 1]] = np.arange(hi + 1)
                    improved_any = True
                    for v in (int(a), int(b), int(c), int(e)):
                        dont_look[v] = False
                        if not in_queue[v]:
                            queue.append(v)
                            in_queue[v] = True
                    break
            if improved_any:
                break
        if not improved_any:
            dont_look[a] = True
    return t


_DENSE_LIMIT = 2500


def tsp_heuristic(inst: Instance, norm: TruckNorm, seed: int, restarts: int = 5,
                  greedy_candidate: bool = True) -> Tour:
    """Best local-search tour over `restarts` nearest-neighbor random starts.

    Each start is improved by alternating 2-opt and Or-opt passes until
    neither helps. A deterministic greedy-edge construction is tried as one
    extra candidate (it usually wins on large instances); pass
    greedy_candidate=False for seed-diverse tours. Deterministic given seed.
    """
    n = inst.n
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    if restarts < 1:
        raise ValueError(f"need restarts >= 1, got {restarts}")
    coords = inst.coords()
    p = 1.0 if norm == TruckNorm.RECTILINEAR else 2.0
    dense = n <= _DENSE_LIMIT
    if dense:
        dist = truck_matrix(coords, norm)
        tree = cKDTree(coords) if greedy_candidate and n >= 5 else None
        neighbors = None
    else:
        dist = None
        tree = cKDTree(coords)
        k = min(16, n - 1)
        _, nb = tree.query(coords, k=k + 1, p=p)
        neighbors = np.ascontiguousarray(nb[:, 1:])

    def cycle_length(order: np.ndarray) -> float:
        if dense:
            return tour_length(order, dist)
        diffs = coords[order] - coords[np.roll(order, -1, axis=0)]
        if p == 1:
            return float(np.abs(diffs).sum())
        return float(np.sqrt((diffs ** 2).sum(axis=1)).sum())

    def local_search(order: np.ndarray) -> np.ndarray:
        best = cycle_length(order)
        while True:
            if dense:
                order = _two_opt_full(order, dist)
                order = _or_opt_full(order, dist)
            else:
                order = _two_opt_neighbors(order, coords, p, neighbors)
                order = _or_opt_neighbors(order, coords, p, neighbors)
            length = cycle_length(order)
            if length >= best - 1e-9:
                return order
            best = length

    starts = []
    if greedy_candidate and n >= 5:
        starts.append(_greedy_edge_tour(coords, tree, p))
    for r in range(restarts):
        rng = substream(seed, _KEY_TSP, r)
        first = int(rng.integers(n))
        if dense:
            starts.append(_nn_tour_small(dist, first))
        else:
            starts.append(_nn_tour_large(coords, tree, p, first))

    best_order = None
    best_len = float("inf")
    for order in starts:
        order = local_search(order)
        length = cycle_length(order)
        if length < best_len - _EPS:
            best_len = length
            best_order = order
    return Tour(order=tuple(int(v) for v in best_order), length=best_len)


# ---------------------------------------------------------------------------
# Ring-partition dynamic programming over a fixed anchored order

class _PartitionContext:
    """Per-instance matrices for repeated partition evaluations."""

    def __init__(self, coords: np.ndarray, m: MetricPair, max_ring: Optional[int] = None):
        self.n = coords.shape[0]
        self.alpha = m.alpha
        self.truck = truck_matrix(coords, m.truck_norm)
        self.euclid = self.truck if m.truck_norm == TruckNorm.EUCLIDEAN \
            else euclid_matrix(coords)
        self.max_ring = self.n if max_ring is None else max_ring

    def _tables(self, order: np.ndarray, min_gap: int = 1):
        """Best ring cost (and drone pick) per start position for each span."""
        n = self.n
        T, E, alpha = self.truck, self.euclid, self.alpha
        o = np.concatenate([order, order[:1]])
        cd = T[o[:-1], o[1:]]
        pre = np.concatenate([[0.0], np.cumsum(cd)])
        max_gap = min(self.max_ring - 1, n - 1)
        costs: dict[int, np.ndarray] = {}
        picks: dict[int, np.ndarray] = {}
        if min_gap <= 1:
            costs[1] = cd
            picks[1] = np.full(n, -1, dtype=np.int64)
        for g in range(max(2, min_gap), max_gap + 1):
            w = n - g + 1  # rings may wrap only through position n
            base = pre[g:g + w] - pre[:w]
            best = base.copy()
            pick = np.full(w, -1, dtype=np.int64)
            for t in range(1, g):
                skip = base - cd[t - 1:t - 1 + w] - cd[t:t + w] \
                    + T[o[t - 1:t - 1 + w], o[t + 1:t + 1 + w]]
                fly = (E[o[:w], o[t:t + w]] + E[o[t:t + w], o[g:g + w]]) / alpha
                cand = np.maximum(skip, fly)
                take = cand < best
                best[take] = cand[take]
                pick[take] = t
            costs[g] = best
            picks[g] = pick
        return costs, picks, pre

    def value(self, order: np.ndarray, min_gap: int = 1) -> float:
        """Minimum chain makespan for this anchored order (value only)."""
        max_gap = min(self.max_ring - 1, self.n - 1)
        return float(_chain_value(order, self.truck, self.euclid, self.alpha,
                                  max_gap, min_gap > 1))

    def solve(self, order: np.ndarray, min_gap: int = 1):
        """DP with backtracking; ties prefer fewer rings, then the no-drone /
        smallest drone pick already encoded in the cost tables."""
        n = self.n
        costs, picks, _ = self._tables(order, min_gap)
        spans = sorted(costs.keys())
        inf = float("inf")
        v = [inf] * (n + 1)
        nrings = [10 ** 9] * (n + 1)
        par = [-1] * (n + 1)
        v[0] = 0.0
        nrings[0] = 0
        for j in range(1, n + 1):
            lo_i = 1 if j == n else 0
            for g in spans:
                i = j - g
                if i < lo_i or i >= costs[g].shape[0]:
                    continue
                cand = v[i] + costs[g][i]
                if cand < v[j] or (cand == v[j] and nrings[i] + 1 < nrings[j]):
                    v[j] = cand
                    nrings[j] = nrings[i] + 1
                    par[j] = i
        if v[n] == inf:
            raise ValueError("no feasible ring chain (min_gap too large for n)")
        bounds = [n]
        j = n
        while j > 0:
            j = par[j]
            bounds.append(j)
        bounds.reverse()
        rings = []
        for i, j in zip(bounds, bounds[1:]):
            g = j - i
            t = int(picks[g][i])
            drone = int(order[i + t]) if t >= 0 else None
            interior = tuple(int(order[q]) for q in range(i + 1, j) if q != (i + t if t >= 0 else -1))
            rings.append(Ring(start=int(order[i]), end=int(order[j % n]),
                              truck_interior=interior, drone_node=drone))
        return v[n], TspdSolution(rings=tuple(rings), instance_n=n)


def partition_dp(tour: Tour, inst: Instance, m: MetricPair, max_ring: int = 8) -> TspdSolution:
    """Exact minimum-makespan ring chain over the cyclic order anchored at
    tour position 0; ring spans are capped at max_ring points."""
    if max_ring < 2:
        raise ValueError(f"max_ring must be >= 2, got {max_ring}")
    order = np.asarray(tour.order, dtype=np.int64)
    if sorted(tour.order) != list(range(inst.n)):
        raise ValueError("tour is not a permutation of the instance nodes")
    ctx = _PartitionContext(inst.coords(), m, max_ring)
    _, sol = ctx.solve(order)
    problems = validate(sol, inst)
    assert not problems, problems
    return sol


# ---------------------------------------------------------------------------
# Exact TSPD by enumeration of anchored orders

_PERM_CACHE: dict[int, np.ndarray] = {}


def _perms(n: int) -> np.ndarray:
    got = _PERM_CACHE.get(n)
    if got is None:
        got = np.array(list(itertools.permutations(range(n))), dtype=np.int64)
        _PERM_CACHE[n] = got
    return got


def _exact_best_order(coords: np.ndarray, m: MetricPair, no_straight: bool) -> np.ndarray:
    """Best anchored order over all n! permutations (partition DP on each,
    vectorized across permutations)."""
    n = coords.shape[0]
    T = truck_matrix(coords, m.truck_norm)
    E = T if m.truck_norm == TruckNorm.EUCLIDEAN else euclid_matrix(coords)
    alpha = m.alpha
    P = _perms(n)
    M = P.shape[0]
    O = np.concatenate([P, P[:, :1]], axis=1)
    cd = T[O[:, :-1], O[:, 1:]]
    pre = np.concatenate([np.zeros((M, 1)), np.cumsum(cd, axis=1)], axis=1)

    inf = float("inf")
    cost: dict[tuple[int, int], np.ndarray] = {}
    for i in range(n):
        for j in range(i + 1, n + 1):
            if i == 0 and j == n:
                continue  # a single ring may not close on itself
            g = j - i
            if g == 1:
                cost[(i, j)] = np.full(M, inf) if no_straight and n > 2 else cd[:, i]
                continue
            base = pre[:, j] - pre[:, i]
            best = base.copy()
            for t in range(1, g):
                d = i + t
                skip = base - cd[:, d - 1] - cd[:, d] + T[O[:, d - 1], O[:, d + 1]]
                fly = (E[O[:, i], O[:, d]] + E[O[:, d], O[:, j]]) / alpha
                np.minimum(best, np.maximum(skip, fly), out=best)
            cost[(i, j)] = best

    v = np.full((M, n + 1), inf)
    v[:, 0] = 0.0
    for j in range(1, n + 1):
        lo_i = 1 if j == n else 0
        for i in range(lo_i, j):
            np.minimum(v[:, j], v[:, i] + cost[(i, j)], out=v[:, j])
    return P[int(np.argmin(v[:, n]))]


def tspd_exact(inst: Instance, m: MetricPair, no_straight: bool = False) -> SolveReport:
    """Global optimum for 2 <= n <= 8 by enumerating all anchored orders.

    Every ring chain appears, linearized at one of its combined nodes, as
    some ordering, so the enumeration is exhaustive. With no_straight=True
    the optimum is restricted to solutions without straight rings (n >= 4).
    """
    n = inst.n
    if not 2 <= n <= 8:
        raise ValueError(f"tspd_exact supports 2 <= n <= 8, got {n}")
    if no_straight and n < 4:
        raise ValueError("no-straight optimum needs n >= 4")
    t0 = time.perf_counter()
    order = _exact_best_order(inst.coords(), m, no_straight)
    ctx = _PartitionContext(inst.coords(), m, max_ring=None)
    value, sol = ctx.solve(order, min_gap=2 if no_straight else 1)
    problems = validate(sol, inst)
    assert not problems, problems
    return SolveReport(solution=sol, makespan=value, method="exact",
                       elapsed=time.perf_counter() - t0, seed=None)


# ---------------------------------------------------------------------------
# Heuristic TSPD

def _propose(order: np.ndarray, pos: np.ndarray, neighbors: np.ndarray,
             rng: np.random.Generator, cfg: HeuristicConfig):
    """One random order perturbation, keeping the anchor at position 0.

    Move mix: short-biased segment reversal, Or-opt relocation of a short
    segment to just after a geometric neighbor of its head, and a swap of a
    node with one of its neighbors. Returns (candidate, a, b) with [a, b]
    the changed position range, or None for a degenerate draw."""
    n = order.size
    if n < 4:
        return None
    roll = rng.random()
    if roll < 0.4:
        span = 2 + int(rng.exponential(6.0))
        span = min(span, n - 2)
        i = 1 + int(rng.integers(n - 1 - span))
        cand = order.copy()
        cand[i:i + span] = cand[i:i + span][::-1]
        return cand, i, i + span - 1
    if roll < 0.8:
        length = min(int(rng.choice(cfg.or_opt_lengths)), n - 3)
        s = 1 + int(rng.integers(n - 1 - length))
        head = order[s]
        nb = int(neighbors[head, rng.integers(neighbors.shape[1])])
        qpos = int(pos[nb])
        if s <= qpos < s + length:
            return None
        seg = order[s:s + length].copy()
        rest = np.concatenate([order[:s], order[s + length:]])
        q = qpos + 1 if qpos < s else qpos - length + 1
        if q == s or not 1 <= q <= rest.size - 1:
            return None
        cand = np.concatenate([rest[:q], seg, rest[q:]])
        return cand, min(s, q), max(s, q) + length - 1
    i = 1 + int(rng.integers(n - 1))
    j = int(pos[int(neighbors[order[i], rng.integers(neighbors.shape[1])])])
    if j == i or j == 0:
        return None
    cand = order.copy()
    cand[i], cand[j] = cand[j], cand[i]
    return cand, min(i, j), max(i, j)


def tspd_heuristic(inst: Instance, m: MetricPair, seed: int,
                   config: Optional[HeuristicConfig] = None) -> SolveReport:
    """Tour-then-partition heuristic with an accept-only-improving loop."""
    cfg = config or HeuristicConfig()
    n = inst.n
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    t0 = time.perf_counter()
    ctx = _PartitionContext(inst.coords(), m, cfg.max_ring)
    moves_per_round = cfg.moves_per_round or max(48, n)
    if n > 2:
        k = min(8, n - 1)
        p = 1.0 if m.truck_norm == TruckNorm.RECTILINEAR else 2.0
        _, nb = cKDTree(inst.coords()).query(inst.coords(), k=k + 1, p=p)
        neighbors = np.ascontiguousarray(nb[:, 1:])

    max_gap = min(cfg.max_ring, n) - 1
    best_val = float("inf")
    best_order = None
    for r in range(cfg.restarts):
        tour = tsp_heuristic(inst, m.truck_norm, derive_seed(seed, _KEY_TSP, r),
                             restarts=cfg.tsp_restarts, greedy_candidate=(r == 0))
        order = np.asarray(tour.order, dtype=np.int64)
        val = ctx.value(order)
        fwd, bwd = _chain_tables(order, ctx.truck, ctx.euclid, ctx.alpha, max_gap)
        rng = substream(seed, _KEY_IMPROVE, r)
        pos = np.empty(n, dtype=np.int64)
        pos[order] = np.arange(n)
        stall = 0
        rounds = 0
        while stall < cfg.patience and rounds < cfg.max_rounds and n >= 3:
            improved = False
            for _ in range(moves_per_round):
                proposal = _propose(order, pos, neighbors, rng, cfg)
                if proposal is None:
                    continue
                cand, a, b = proposal
                cval = _bridge_value(cand, ctx.truck, ctx.euclid, ctx.alpha,
                                     max_gap, fwd, bwd, a, b)
                if cval < val - _EPS:
                    order, val = cand, cval
                    fwd, bwd = _chain_tables(order, ctx.truck, ctx.euclid,
                                             ctx.alpha, max_gap)
                    pos[order] = np.arange(n)
                    improved = True
            if cfg.anchor_tries > 0:
                # Re-anchor at another combined node of the current chain;
                # the current chain stays representable, so this never hurts.
                _, cur = ctx.solve(order)
                starts = [rg.start for rg in cur.rings if rg.start != order[0]]
                for _ in range(min(cfg.anchor_tries, len(starts))):
                    node = int(starts[int(rng.integers(len(starts)))])
                    cand = np.roll(order, -int(pos[node]))
                    cval = ctx.value(cand)
                    if cval < val - _EPS:
                        order, val = cand, cval
                        fwd, bwd = _chain_tables(order, ctx.truck, ctx.euclid,
                                                 ctx.alpha, max_gap)
                        pos[order] = np.arange(n)
                        improved = True
                        break
            stall = 0 if improved else stall + 1
            rounds += 1
        if val < best_val - _EPS:
            best_val, best_order = val, order

    _, sol = ctx.solve(best_order)
    sol = normalize_no_straight(sol, inst, m)
    ms = makespan(sol, inst, m)
    return SolveReport(solution=sol, makespan=ms, method="heuristic",
                       elapsed=time.perf_counter() - t0, seed=seed)


def scaled_makespan(report: SolveReport, n: int) -> float:
    """Makespan scaled by sqrt(n), the quantity with an asymptotic limit."""
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    return report.makespan / math.sqrt(n)
