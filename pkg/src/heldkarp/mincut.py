"""Exact global minimum cuts and brute-force cut enumeration (the oracles)."""

from __future__ import annotations

from dataclasses import dataclass
from typing import FrozenSet, List, Sequence, Tuple

import numpy as np
from numba import njit

from .graph import Graph

MAX_ENUMERATE_N = 20


@dataclass(frozen=True)
class CutSide:
    """One side of a cut: the vertex set, the crossing edges and their weight."""

    vertices: FrozenSet[int]
    edges: Tuple[int, ...]
    weight: float


def adjacency_matrix(g: Graph, weights: Sequence[float] | None = None) -> np.ndarray:
    w = g.cap if weights is None else np.asarray(weights, dtype=np.float64)
    a = np.zeros((g.n, g.n))
    np.add.at(a, (g.u_arr, g.v_arr), w)
    return a + a.T


def global_mincut(g: Graph, weights: Sequence[float] | None = None) -> Tuple[float, List[bool]]:
    """Exact global minimum cut.  Returns ``(value, side)``.

    ``side`` is a boolean membership vector of one shore.  Stoer-Wagner
    phases on adjacency lists with a heap; after each phase every edge
    whose scan connectivity reached the best cut so far is contracted
    (such an edge crosses no smaller cut), which only saves phases.
    Deterministic: the heap breaks ties toward the lowest index.
    """
    w = g.cap if weights is None else np.asarray(weights, dtype=np.float64)
    if w.shape != (g.m,):
        raise ValueError("need one value per edge")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValueError("edge values must be finite and non-negative")
    value, side = _sw_sparse(g.n, g.u_arr, g.v_arr, w, np.inf)
    return float(value), side.tolist()


def mincut_at_least(g: Graph, weights: np.ndarray, tau: float) -> bool:
    """Exact test of ``mincut >= tau``, usually much cheaper than the value.

    The same phases as :func:`global_mincut`, but edges are contracted
    once their scan connectivity reaches ``tau``, the search stops at the
    first cut below ``tau``, and the contracted graph is rebuilt compact
    as it shrinks.
    """
    w = np.asarray(weights, dtype=np.float64)
    deg = np.bincount(g.u_arr, w, g.n) + np.bincount(g.v_arr, w, g.n)
    if deg.min() < tau:
        return False
    return bool(_sw_bounded(g.n, g.u_arr, g.v_arr, w, float(tau)) >= tau)


@njit(cache=True)
def _heap_push(hk, hv, size, key, v):
    i = size
    hk[i] = key
    hv[i] = v
    while i > 0:
        p = (i - 1) >> 1
        # max-heap on key, ties toward the smaller vertex
        if hk[p] > hk[i] or (hk[p] == hk[i] and hv[p] < hv[i]):
            break
        hk[p], hk[i] = hk[i], hk[p]
        hv[p], hv[i] = hv[i], hv[p]
        i = p
    return size + 1


@njit(cache=True)
def _heap_pop(hk, hv, size):
    key = hk[0]
    v = hv[0]
    size -= 1
    hk[0] = hk[size]
    hv[0] = hv[size]
    i = 0
    while True:
        l = 2 * i + 1
        if l >= size:
            break
        c = l
        r = l + 1
        if r < size and (hk[r] > hk[l] or (hk[r] == hk[l] and hv[r] < hv[l])):
            c = r
        if hk[i] > hk[c] or (hk[i] == hk[c] and hv[i] < hv[c]):
            break
        hk[c], hk[i] = hk[i], hk[c]
        hv[c], hv[i] = hv[i], hv[c]
        i = c
    return key, v, size


@njit(cache=True)
def _find_root(uf, x):
    while uf[x] != x:
        uf[x] = uf[uf[x]]
        x = uf[x]
    return x


@njit(cache=True)
def _sw_sparse(n, us, vs, w, tau):
    best, side, _, _ = _sw_run(n, us, vs, w, tau, 1)
    return best, side


@njit(cache=True)
def _sw_run(n, us, vs, w, tau, stop):
    """Stoer-Wagner phases until at most ``stop`` groups are left.

    Returns the best phase cut, its side, the group root of every vertex
    and the number of groups.
    """
    m = len(us)
    ptr = np.zeros(n + 1, dtype=np.int64)
    for e in range(m):
        ptr[us[e] + 1] += 1
        ptr[vs[e] + 1] += 1
    for i in range(n):
        ptr[i + 1] += ptr[i]
    fill = ptr[:-1].copy()
    adj = np.empty(2 * m, dtype=np.int64)
    for e in range(m):
        adj[fill[us[e]]] = e
        fill[us[e]] += 1
        adj[fill[vs[e]]] = e
        fill[vs[e]] += 1
    rep = np.arange(n)
    head = np.arange(n)
    tail = np.arange(n)
    nxt = -np.ones(n, dtype=np.int64)
    alive = np.ones(n, dtype=np.bool_)
    n_alive = n
    conn = np.zeros(n)
    seen = np.zeros(n, dtype=np.int64)
    hk = np.empty(n + 2 * m + 1)
    hv = np.empty(n + 2 * m + 1, dtype=np.int64)
    qa = np.empty(2 * m + 1, dtype=np.int64)
    qb = np.empty(2 * m + 1, dtype=np.int64)
    qq = np.empty(2 * m + 1)
    uf = np.arange(n)
    best = np.inf
    side = np.zeros(n, dtype=np.bool_)
    phase = 0
    while n_alive > stop:
        phase += 1
        size = 0
        for v in range(n):
            if alive[v]:
                conn[v] = 0.0
                size = _heap_push(hk, hv, size, 0.0, v)
        nq = 0
        last = -1
        while size > 0:
            key, v, size = _heap_pop(hk, hv, size)
            if seen[v] == phase or key != conn[v]:
                continue
            seen[v] = phase
            last = v
            x = head[v]
            while x >= 0:
                for i in range(ptr[x], ptr[x + 1]):
                    e = adj[i]
                    y = rep[us[e] + vs[e] - x]
                    if y == v or seen[y] == phase:
                        continue
                    conn[y] += w[e]
                    size = _heap_push(hk, hv, size, conn[y], y)
                    qa[nq] = v
                    qb[nq] = y
                    qq[nq] = conn[y]
                    nq += 1
                x = nxt[x]
        cut = conn[last]
        if cut < best:
            best = cut
            side[:] = False
            x = head[last]
            while x >= 0:
                side[x] = True
                x = nxt[x]
        if best < tau < np.inf:
            # a bounded query only asks whether some cut is below tau
            return best, side, rep, n_alive
        lim = min(best, tau)
        contracted = False
        for i in range(nq):
            if qq[i] >= lim:
                a = _find_root(uf, qa[i])
                b = _find_root(uf, qb[i])
                if a != b:
                    if a < b:
                        uf[b] = a
                    else:
                        uf[a] = b
                    contracted = True
        if not contracted:
            # graph with a zero-weight edge to the last vertex only
            a = _find_root(uf, last)
            for v in range(n):
                if alive[v] and v != last:
                    b = _find_root(uf, v)
                    if a < b:
                        uf[b] = a
                    else:
                        uf[a] = b
                    break
        for v in range(n):
            if alive[v]:
                r = _find_root(uf, v)
                if r != v:
                    nxt[tail[r]] = head[v]
                    tail[r] = tail[v]
                    x = head[v]
                    while x >= 0:
                        rep[x] = r
                        x = nxt[x]
                    alive[v] = False
                    n_alive -= 1
    return best, side, rep, n_alive


@njit(cache=True)
def _compact(n, us, vs, w, rep):
    """The graph with every group merged, parallel edges summed, loops dropped."""
    ids = -np.ones(n, dtype=np.int64)
    k = 0
    for v in range(n):
        if rep[v] == v:
            ids[v] = k
            k += 1
    keys = np.empty(len(us), dtype=np.int64)
    vals = np.empty(len(us))
    c = 0
    for e in range(len(us)):
        a = ids[rep[us[e]]]
        b = ids[rep[vs[e]]]
        if a == b:
            continue
        if a > b:
            a, b = b, a
        keys[c] = a * k + b
        vals[c] = w[e]
        c += 1
    order = np.argsort(keys[:c], kind="mergesort")
    nu = np.empty(c, dtype=np.int64)
    nv = np.empty(c, dtype=np.int64)
    nw = np.empty(c)
    j = -1
    last = -1
    for i in order:
        if keys[i] != last:
            j += 1
            last = keys[i]
            nu[j] = last // k
            nv[j] = last % k
            nw[j] = 0.0
        nw[j] += vals[i]
    return k, nu[: j + 1], nv[: j + 1], nw[: j + 1]


@njit(cache=True)
def _sw_bounded(n, us, vs, w, tau):
    """Smallest phase cut, or the first one found below ``tau``.

    The graph is rebuilt smaller whenever a quarter of its groups have
    merged, so late phases scan only the contracted graph.
    """
    best = np.inf
    while n > 1:
        cut, _, rep, left = _sw_run(n, us, vs, w, tau, max(1, (3 * n) // 4))
        best = min(best, cut)
        if best < tau or left <= 1:
            break
        n, us, vs, w = _compact(n, us, vs, w, rep)
    return best


def mincut_dense(a: np.ndarray) -> Tuple[float, List[bool]]:
    """Textbook Stoer-Wagner on a dense symmetric matrix (kept as a reference)."""
    n = a.shape[0]
    a = a.copy()
    groups = [[i] for i in range(n)]
    active = list(range(n))
    best = np.inf
    best_side: List[int] = []
    while len(active) > 1:
        idx = np.asarray(active)
        b = a[np.ix_(idx, idx)]
        k = len(active)
        conn = b[0].copy()
        used = np.zeros(k, dtype=bool)
        used[0] = True
        prev = last = 0
        phase_cut = 0.0
        for _ in range(k - 1):
            masked = np.where(used, -np.inf, conn)
            nxt = int(np.argmax(masked))
            used[nxt] = True
            prev, last = last, nxt
            phase_cut = conn[nxt]
            conn += b[nxt]
        p, l = active[prev], active[last]
        if phase_cut < best:
            best = float(phase_cut)
            best_side = list(groups[l])
        a[p, :] += a[l, :]
        a[:, p] += a[:, l]
        a[p, p] = 0.0
        groups[p].extend(groups[l])
        active.pop(last)
    side = [False] * n
    for x in best_side:
        side[x] = True
    return best, side


def cut_table(g: Graph, weights: Sequence[float] | None = None) -> Tuple[np.ndarray, np.ndarray]:
    """Weights of all ``2^(n-1) - 1`` cuts.

    Shore ``S`` is encoded as a bitmask over vertices ``0..n-2``; vertex
    ``n-1`` is always outside, so each cut appears once.
    """
    if g.n > MAX_ENUMERATE_N:
        raise ValueError(f"enumeration limited to n <= {MAX_ENUMERATE_N}")
    w = g.cap if weights is None else np.asarray(weights, dtype=np.float64)
    masks = np.arange(1, 1 << (g.n - 1), dtype=np.int64)
    vals = np.zeros(masks.shape[0])
    for e in range(g.m):
        a, b = g.u[e], g.v[e]
        ba = (masks >> a) & 1 if a < g.n - 1 else 0
        bb = (masks >> b) & 1 if b < g.n - 1 else 0
        vals += w[e] * (ba ^ bb)
    return masks, vals


def enumerate_cuts(g: Graph, weights: Sequence[float] | None = None) -> List[CutSide]:
    masks, vals = cut_table(g, weights)
    out = []
    for mask, val in zip(masks.tolist(), vals.tolist()):
        verts = frozenset(i for i in range(g.n - 1) if mask >> i & 1)
        crossing = tuple(e for e in range(g.m) if (g.u[e] in verts) != (g.v[e] in verts))
        out.append(CutSide(verts, crossing, val))
    return out


def brute_mincut(g: Graph, weights: Sequence[float] | None = None) -> float:
    return float(cut_table(g, weights)[1].min())
