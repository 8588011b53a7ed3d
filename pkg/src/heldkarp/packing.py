"""Approximate maximum spanning-tree packing and tree sampling.

The packing runs the same time-based multiplicative-weights scheme as
the main solver, with a minimum spanning tree as the oracle: edge
lengths are ``exp(eta * load_e / c_e) / c_e``, each step routes
``zeta * gamma / eta`` units along the current tree (``gamma`` its
bottleneck capacity), and the final loads are scaled down uniformly to
feasibility.  A tree is reused while its length stays within ``1 + zeta``
of the minimum it had when computed; lengths only grow, so it remains
a ``(1 + zeta)``-approximate oracle answer.  The run also stops early
once the packing is certified within ``1 - zeta`` of the dual bound
``<l, c> / mst(l)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np
from numba import njit

from .graph import Graph, WeightState


class PackingError(RuntimeError):
    pass


@dataclass
class TreePacking:
    trees: List[Tuple[int, ...]]
    mu: List[float]
    value: float
    upper_bound: float
    oracle_calls: int = 0
    steps: int = 0
    graph: Graph | None = field(default=None, repr=False)
    _parents: Dict[int, List[int]] = field(default_factory=dict, repr=False)

    def parent(self, i: int) -> List[int]:
        """Parent array of tree ``i`` rooted at vertex 0 (built on demand)."""
        par = self._parents.get(i)
        if par is None:
            par = tree_parent(self.graph, self.trees[i])
            self._parents[i] = par
        return par

    def loads(self, m: int) -> np.ndarray:
        out = np.zeros(m)
        for tr, mu in zip(self.trees, self.mu):
            out[list(tr)] += mu
        return out


def _logsumexp(x: np.ndarray) -> float:
    mx = float(x.max())
    return mx + math.log(float(np.exp(x - mx).sum()))


@njit(cache=True)
def _lse(x):
    mx = x.max()
    s = 0.0
    for v in x:
        s += math.exp(v - mx)
    return mx + math.log(s)


@njit(cache=True)
def _find(parent, a):
    while parent[a] != a:
        parent[a] = parent[parent[a]]
        a = parent[a]
    return a


@njit(cache=True)
def _kruskal(n, us, vs, key):
    order = np.argsort(key, kind="mergesort")
    parent = np.arange(n)
    out = np.empty(n - 1, dtype=np.int64)
    k = 0
    for e in order:
        if k == n - 1:
            break
        a = _find(parent, us[e])
        b = _find(parent, vs[e])
        if a != b:
            parent[a] = b
            out[k] = e
            k += 1
    if k != n - 1:
        return out[:0]
    return np.sort(out)


@njit(cache=True)
def _pack(n, us, vs, c, zeta, eta, cap_calls, target):
    m = len(c)
    lnc = np.log(c)
    load = np.zeros(m)
    logl = -lnc
    t = 0.0
    total = 0.0
    best_ub = np.inf
    calls = 0
    steps = 0
    store = np.empty((16, n - 1), dtype=np.int64)
    amounts = np.zeros(16)
    k = 0
    while t < 1.0:
        if calls >= cap_calls:
            return store[:0], amounts[:0], load, best_ub, -1, steps
        tree = _kruskal(n, us, vs, logl)
        calls += 1
        if len(tree) == 0:
            return store[:0], amounts[:0], load, best_ub, -2, steps
        log_lc = _lse(eta * load / c)
        log_lt0 = _lse(logl[tree])
        best_ub = min(best_ub, math.exp(log_lc - log_lt0))
        if total > 0:
            over = (load / c).max()
            if total / over >= (1.0 - zeta) * min(best_ub, target):
                break
        gamma = c[tree].min()
        if k == store.shape[0]:
            bigger = np.empty((2 * k, n - 1), dtype=np.int64)
            bigger[:k] = store
            store = bigger
            more = np.zeros(2 * k)
            more[:k] = amounts
            amounts = more
        store[k] = tree
        limit = log_lt0 + math.log1p(zeta)
        log_lt = log_lt0
        while True:
            beta = math.exp(log_lc - log_lt)
            dt = zeta * gamma / (eta * beta)
            amount = zeta * gamma / eta
            if t + dt >= 1.0:
                amount *= (1.0 - t) / dt
                dt = 1.0 - t
            amounts[k] += amount
            total += amount
            for e in tree:
                load[e] += amount
                logl[e] = eta * load[e] / c[e] - lnc[e]
            t += dt
            steps += 1
            if t >= 1.0:
                break
            log_lt = _lse(logl[tree])
            if log_lt > limit:
                break
            log_lc = _lse(eta * load / c)
        k += 1
    return store[:k], amounts[:k], load, best_ub, calls, steps


def minimum_spanning_tree(g: Graph, key: np.ndarray) -> List[int]:
    """Kruskal; ties broken by edge id.  Returns sorted edge ids."""
    out = _kruskal(g.n, g.u_arr, g.v_arr, np.asarray(key, dtype=np.float64))
    if len(out) != g.n - 1:
        raise PackingError("graph is not connected")
    return out.tolist()


def tree_parent(g: Graph, edges: Sequence[int], root: int = 0) -> List[int]:
    adj: List[List[int]] = [[] for _ in range(g.n)]
    for e in edges:
        adj[g.u[e]].append(g.v[e])
        adj[g.v[e]].append(g.u[e])
    parent = [-2] * g.n
    parent[root] = -1
    stack = [root]
    while stack:
        x = stack.pop()
        for y in adj[x]:
            if parent[y] == -2:
                parent[y] = x
                stack.append(y)
    return parent


def _log_capacities(weights) -> np.ndarray:
    if isinstance(weights, WeightState):
        return np.asarray(weights.logw_apx, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    if np.any(w <= 0):
        raise ValueError("packing capacities must be positive")
    return np.log(w)


def greedy_tree_packing(g: Graph, weights, zeta: float = 0.1, target: float | None = None) -> TreePacking:
    """Spanning-tree packing into capacities ``weights`` (array or WeightState).

    Without ``target`` the result is within ``1 - zeta`` of the maximum.
    With it, the run also stops once the value reaches ``(1 - zeta) target``;
    ``target = mincut / 2`` is all the tree sampling needs.
    """
    if not 0 < zeta <= 0.5:
        raise ValueError("zeta must lie in (0, 1/2]")
    logc = _log_capacities(weights)
    m = g.m
    norm = float(logc.max())
    # capacities relative to the largest, floored away from zero
    c = np.maximum(np.exp(logc - norm), 1e-300)
    eta = math.log(max(m, 3)) / zeta
    cap_calls = math.ceil(10 * math.log(max(m, 3)) / zeta ** 2) * m
    goal = math.inf if target is None else target / math.exp(norm)
    store, amounts, load, best_ub, calls, steps = _pack(
        g.n, g.u_arr, g.v_arr, c, zeta, eta, cap_calls, goal)
    if calls == -1:
        raise PackingError("tree packing exceeded its iteration cap")
    if calls == -2:
        raise PackingError("graph is not connected")
    over = float((load / c).max()) * (1.0 + 1e-12)
    unit = math.exp(norm)
    mu: Dict[Tuple[int, ...], float] = {}
    for row, amt in zip(store.tolist(), amounts.tolist()):
        key = tuple(row)
        mu[key] = mu.get(key, 0.0) + amt
    trees = list(mu)
    mus = [mu[k] / over * unit for k in trees]
    return TreePacking(
        trees=trees,
        mu=mus,
        value=float(sum(mus)),
        upper_bound=float(best_ub) * unit,
        oracle_calls=int(calls),
        steps=int(steps),
        graph=g,
    )


def sample_trees(p: TreePacking, h: int, rng: np.random.Generator) -> List[List[int]]:
    """``h`` i.i.d. trees drawn proportionally to their packing weight."""
    if not p.trees or p.value <= 0:
        raise ValueError("empty packing")
    if h < 1:
        raise ValueError("h must be at least 1")
    prob = np.asarray(p.mu) / float(np.sum(p.mu))
    picks = rng.choice(len(p.trees), size=h, p=prob)
    return [list(p.parent(i)) for i in picks.tolist()]


def sample_count(n: int, eps: float, c1: float = 3.0) -> int:
    return max(1, math.ceil(c1 * math.log(n / eps)))


def refresh_packing(g: Graph, p: TreePacking, weights, zeta: float = 0.1,
                    target: float | None = None) -> TreePacking | None:
    """Re-certify an old packing against grown capacities, or return None.

    Capacities only grow during a run, so an old packing stays feasible;
    scaled up until some edge is tight, it is kept if it is within
    ``1 - zeta`` of the dual bound given by lengths ``exp(eta load/c)/c``,
    or of ``target`` when that is smaller.
    """
    logc = _log_capacities(weights)
    m = g.m
    norm = float(logc.max())
    unit = math.exp(norm)
    c = np.maximum(np.exp(logc - norm), 1e-300)
    load = p.loads(m) / unit
    over = float((load / c).max())
    if not over > 0:
        return None
    load /= over
    eta = math.log(max(m, 3)) / zeta
    logl = eta * load / c - np.log(c)
    tree = minimum_spanning_tree(g, logl)
    ub = math.exp(_logsumexp(eta * load / c) - _logsumexp(logl[np.asarray(tree)]))
    value = p.value / unit / over
    goal = ub if target is None else min(ub, target / unit)
    if value < (1.0 - zeta) * goal:
        return None
    return TreePacking(
        trees=p.trees,
        mu=[x / over for x in p.mu],
        value=value * unit,
        upper_bound=ub * unit,
        oracle_calls=1,
        steps=0,
        graph=g,
        _parents=p._parents,
    )
