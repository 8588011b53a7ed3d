"""Finding every cut that 1- or 2-respects a tree and is below a threshold.

Notation: ``D(v)`` is the subtree of ``v`` and ``a(v) = w~(boundary D(v))``.
For incomparable ``s, t``::

    cut(D(s) + D(t)) = a(s) + a(t) - 2 w(D(s), D(t))

and for ``s`` strictly below ``t``::

    cut(D(t) - D(s)) = a(t) - a(s) + 2 w(D(s), D(t) - D(s))

``a`` lives in a Fenwick-backed path-add structure (forest A).  The
2-respecting passes contract the tree leaf-path by leaf-path in
O(log n) phases; in each phase a link-cut forest B over the original
tree starts from ``a`` and, while marching up a leaf path ``s_1, s_2, ...``,
holds ``a(t) -/+ 2 w(D(s_i), ...)`` so a single path-minimum query finds
the best partner ``t``.  Every emitted cut is reported to the caller,
which may raise weights (``apply``) before the search continues.

Optionally a dense check (one ``n x n`` product per pass) rules out
passes, leaf paths and vertices that cannot yield a cut below the
threshold.  Weights only grow during a pass, so nothing below the
threshold is missed; 2-cut partners may come out in a different order.
"""

from __future__ import annotations

import math
from typing import Callable, List, Sequence

import numpy as np
from numba import njit

from .dyntree import INF, LcaIndex, LinkCutForest, PathAddForest, RootedTree
from .dyntree import _MA, _MB, _MV, _access, _apply, _fw_add, _fw_value, _lc_edge
from .euler import INCOMPARABLE, NESTED, ONE, CutDescriptor
from .graph import Graph, WeightState

_HALF_INF = INF / 2
# the dense check keeps anything within this relative margin of the threshold
_SCREEN_SLACK = 1e-9

Emit = Callable[[CutDescriptor, float], bool]


@njit(cache=True)
def _sweep(I, F, cnt, order, a, b, ptr, adj, us, vs, pm, w, elca, lo, hi, plo, phi, nested,
           und_n, und_v, und_b, k):
    """Path-adds for the edges of ``order[a:b]`` in adjacency order; logs the undo.

    Incomparable pass: ``-2 w_e`` at the far endpoint of each edge leaving
    ``[lo, hi]``.  Nested pass: ``+2 w_e`` at the edge LCA for edges
    leaving ``[lo, hi]``, and ``-2 w_e`` for those ending in ``[plo, phi]``.
    """
    for idx in range(a, b):
        x = order[idx]
        for j in range(ptr[x], ptr[x + 1]):
            e = adj[j]
            z = us[e] ^ vs[e] ^ x
            pz = pm[z]
            d = 2.0 * w[e]
            if lo <= pz <= hi:
                if not nested or not plo <= pz <= phi:
                    continue
                node = elca[e]
                d = -d
            elif nested:
                node = elca[e]
            else:
                node = z
                d = -d
            _access(I, F, cnt, node)
            _apply(I, F, node, d, 0)
            und_n[k] = node
            und_v[k] = -d
            und_b[k] = 0
            k += 1
    return k


@njit(cache=True)
def _sweep_step(I, F, cnt, order, pre, size, pm, pp, ptr, adj, us, vs, w, elca, s, prev, nested,
                und_n, und_v, und_b, k):
    """Sweep the vertices that join the march at ``s``.

    After contraction these are ``D(s)`` minus ``D(prev)``, or all of
    ``D(s)`` on the first step: one or two preorder ranges.
    """
    a, b = pre[s], pre[s] + size[s]
    lo, hi = pm[s], pp[s]
    if prev < 0:
        return _sweep(I, F, cnt, order, a, b, ptr, adj, us, vs, pm, w, elca, lo, hi, 1, 0, nested,
                      und_n, und_v, und_b, k)
    c, d = pre[prev], pre[prev] + size[prev]
    plo, phi = pm[prev], pp[prev]
    k = _sweep(I, F, cnt, order, a, c, ptr, adj, us, vs, pm, w, elca, lo, hi, plo, phi, nested,
               und_n, und_v, und_b, k)
    return _sweep(I, F, cnt, order, d, b, ptr, adj, us, vs, pm, w, elca, lo, hi, plo, phi, nested,
                  und_n, und_v, und_b, k)


# march state slots
_I, _J, _NYS, _NOUT, _PREV, _NUND, _Q, _T = range(8)


@njit(cache=True)
def _incomparable_march(I, F, cnt, bit, base, order, pre, size, pm, pp, ptr, adj, us, vs, w, elca,
                        path, cand, low, thr, st, stf, ys, outside, und_n, und_v, und_b):
    """Run or resume one incomparable march.

    Returns 1 when ``path[st[_I]]`` pairs with ``st[_T]`` in a cut of value
    ``stf[1]`` below ``thr`` (the caller emits and calls again), 0 at the end.
    ``stf[0]`` is a lower bound on every pair already certified.
    """
    i, j, nys, nout, prev, k, q = st[_I], st[_J], st[_NYS], st[_NOUT], st[_PREV], st[_NUND], st[_Q]
    lb = stf[0]
    res = 0
    while True:
        if j < 0:
            if i >= len(path):
                break
            s = path[i]
            lo, hi = pm[s], pp[s]
            k0 = k
            k = _sweep_step(I, F, cnt, order, pre, size, pm, pp, ptr, adj, us, vs, w, elca, s, prev, False,
                            und_n, und_v, und_b, k)
            if prev >= 0 and lb < np.inf:
                lb = lb + _fw_value(bit, base, pre, size, s) - _fw_value(bit, base, pre, size, prev)
            if lb < thr:
                # everything still outside D(s) is rescanned
                kept = 0
                for r in range(nout):
                    y = outside[r]
                    if not lo <= pm[y] <= hi:
                        outside[kept] = y
                        kept += 1
                nout = kept
                start = 0
                lb = np.inf
            else:
                start = nout
            for r in range(k0, k):
                outside[nout] = und_n[r]
                nout += 1
            prev = s
            if not cand[s]:
                # nothing below the threshold pairs with s; the screen bounds it
                lb = max(lb, low[s]) if lb < np.inf else low[s]
                i += 1
                continue
            # ascending ids: the order cannot depend on how much was rescanned
            u = np.unique(outside[start:nout])
            nys = len(u)
            ys[:nys] = u
            j = 0
        s = path[i]
        a_s = _fw_value(bit, base, pre, size, s)
        while j < nys:
            y = ys[j]
            _access(I, F, cnt, y)
            q += 1
            b = I[_MB, y]
            if b > 0:
                j += 1
                continue
            cut = a_s + F[_MV, y] if b == 0 else -INF
            if cut < thr:
                stf[1] = cut
                st[_T] = I[_MA, y]
                res = 1
                break
            if cut < lb:
                lb = cut
            j += 1
        if res:
            break
        if low[s] > lb:
            lb = low[s]
        i += 1
        j = -1
    st[_I], st[_J], st[_NYS], st[_NOUT], st[_PREV], st[_NUND], st[_Q] = i, j, nys, nout, prev, k, q
    stf[0] = lb
    return res


@njit(cache=True)
def _nested_march(I, F, cnt, bit, base, order, pre, size, pm, pp, parent, ptr, adj, us, vs, w, elca,
                  path, cand, thr, st, stf, und_n, und_v, und_b):
    """Run or resume one nested march; same protocol as the incomparable one."""
    i, j, prev, k, q = st[_I], st[_J], st[_PREV], st[_NUND], st[_Q]
    res = 0
    while i < len(path):
        s = path[i]
        if j < 0:
            k = _sweep_step(I, F, cnt, order, pre, size, pm, pp, ptr, adj, us, vs, w, elca, s, prev, True,
                            und_n, und_v, und_b, k)
            prev = s
            if not cand[s]:
                i += 1
                continue
            j = 0
        p = parent[s]
        _access(I, F, cnt, p)
        q += 1
        b = I[_MB, p]
        val = INF if b > 0 else (-INF if b < 0 else F[_MV, p])
        cut = val - _fw_value(bit, base, pre, size, s)
        if cut < thr:
            stf[1] = cut
            st[_T] = I[_MA, p]
            res = 1
            break
        i += 1
        j = -1
    st[_I], st[_J], st[_PREV], st[_NUND], st[_Q] = i, j, prev, k, q
    return res


@njit(cache=True)
def _apply_edges(es, dws, us, vs, elca, pm, bit, point, pre, mode, s_lo, s_hi, I, F, cnt,
                 und_n, und_v, und_b, k):
    """Weight increases ``dws`` on edges ``es`` in both forests.

    ``mode`` 0: forest A only; 1: forest B too; 2, 3: B during an
    incomparable / nested march at a vertex spanning ``[s_lo, s_hi]``,
    with the extra terms for edges leaving it logged for undo.
    """
    for r in range(len(es)):
        e = es[r]
        dw = dws[r]
        x, y, l = us[e], vs[e], elca[e]
        _fw_add(bit, point, pre, x, dw)
        _fw_add(bit, point, pre, y, dw)
        _fw_add(bit, point, pre, l, -2.0 * dw)
        if mode == 0:
            continue
        z, dz = -1, 0.0
        if mode >= 2:
            inx = s_lo <= pm[x] <= s_hi
            iny = s_lo <= pm[y] <= s_hi
            if inx != iny:
                if mode == 2:
                    z = y if inx else x
                    dz = -2.0 * dw
                else:
                    z = l
                    dz = 2.0 * dw
                und_n[k] = z
                und_v[k] = -dz
                und_b[k] = 0
                k += 1
        _lc_edge(I, F, cnt, x, y, l, dw, z, dz)
    return k


@njit(cache=True)
def _undo(I, F, cnt, und_n, und_v, und_b, k):
    for r in range(k - 1, -1, -1):
        _access(I, F, cnt, und_n[r])
        _apply(I, F, und_n[r], und_v[r], und_b[r])


class SearchStopped(Exception):
    """Raised through the search when the emit callback asks to stop."""


class TreeInfo:
    """Static data of one spanning tree, reusable across searches."""

    def __init__(self, g: Graph, parent: Sequence[int]):
        self.g = g
        self.tree = tr = RootedTree(parent)
        self.lca = LcaIndex(tr)
        self.elca_arr = self.lca.lca_many(g.u_arr, g.v_arr)
        self.elca: List[int] = self.elca_arr.tolist()
        self.pm_arr = tr.pm_arr
        self._pmat = None
        self._masks = None
        self.family = None

    @property
    def pmat(self) -> np.ndarray:
        if self._pmat is None:
            self._pmat = self.tree.descendant_matrix()
        return self._pmat

    def masks(self):
        """(incomparable pairs, strict ancestor pairs) as boolean matrices."""
        if self._masks is None:
            p = self.pmat > 0
            comparable = p | p.T
            strict = p.copy()
            np.fill_diagonal(strict, False)
            self._masks = (~comparable, strict)
        return self._masks

    def a_values(self, w: np.ndarray) -> np.ndarray:
        g = self.g
        deg = np.bincount(g.u_arr, w, g.n) + np.bincount(g.v_arr, w, g.n)
        inner = np.bincount(self.elca_arr, w, g.n)
        return np.asarray(self.tree.subtree_sums((deg - 2.0 * inner).tolist()))

    def dense(self, w: np.ndarray):
        """``a`` and ``wm[s, t] = w(D(s), D(t))`` by two matrix products."""
        g = self.g
        p = self.pmat
        adj = np.zeros((g.n, g.n))
        np.add.at(adj, (g.u_arr, g.v_arr), w)
        adj += adj.T
        wm = p.T @ adj @ p
        a = p.T @ adj.sum(axis=1) - np.diag(wm)
        return a, wm

    def screen(self, w: np.ndarray, threshold: float) -> bool:
        """False if provably no 1- or 2-respecting cut is below ``threshold``."""
        a, wm = self.dense(w)
        lim = threshold * (1.0 + _SCREEN_SLACK)
        root = self.tree.root
        a1 = a.copy()
        a1[root] = np.inf
        if a1.min() < lim:
            return True
        incomp, strict = self.masks()
        vals = a[:, None] + a[None, :] - 2.0 * wm
        if vals[incomp].min(initial=np.inf) < lim:
            return True
        d = np.diag(wm)
        vals = a[None, :] - a[:, None] + 2.0 * (wm - d[:, None])
        return bool(vals[strict].min(initial=np.inf) < lim)


class CutSearch:
    def __init__(self, g: Graph, parent: Sequence[int] | TreeInfo, ws: WeightState,
                 threshold: float, emit: Emit, prescreen: bool = True):
        self.g = g
        self.ws = ws
        self.threshold = threshold
        self.emit = emit
        info = parent if isinstance(parent, TreeInfo) else TreeInfo(g, parent)
        self.info = info
        self.tree = tr = info.tree
        self.lca = info.lca
        self.elca = info.elca
        self.A = PathAddForest(tr, info.a_values(np.asarray(ws.w)))
        self.B: LinkCutForest | None = None
        self.mode = None
        self.cur_s = -1
        self.prescreen = prescreen
        self.emitted = 0
        self.queries = 0
        # undo log of forest B during a march: node, value, block count
        cap = 2 * g.m + 16
        self._und_n = np.empty(cap, dtype=np.int64)
        self._und_v = np.empty(cap)
        self._und_b = np.empty(cap, dtype=np.int64)
        self._nund = 0
        self._ys = np.empty(2 * g.m + 1, dtype=np.int64)
        self._outside = np.empty(2 * g.m + 1, dtype=np.int64)
        self._noB = LinkCutForest([-1], [0.0])

    # -- weight changes -------------------------------------------------

    def _reserve(self, extra: int) -> None:
        need = self._nund + extra
        if need > len(self._und_n):
            cap = max(need, 2 * len(self._und_n))
            for name in ("_und_n", "_und_v", "_und_b"):
                old = getattr(self, name)
                new = np.empty(cap, dtype=old.dtype)
                new[: self._nund] = old[: self._nund]
                setattr(self, name, new)

    def apply(self, e: int, dw: float) -> None:
        """Account for ``w~_e`` having grown by ``dw``."""
        self.apply_many(np.array([e], dtype=np.int64), np.array([dw]))

    def apply_many(self, es: np.ndarray, dws: np.ndarray) -> None:
        """``apply`` for each pair in order."""
        g, A, tr = self.g, self.A, self.tree
        B = self.B
        if B is None:
            mode, lo, hi = 0, 0, -1
            B = self._noB
        elif self.cur_s < 0:
            mode, lo, hi = 1, 0, -1
        else:
            mode = 2 if self.mode == INCOMPARABLE else 3
            lo, hi = tr.pm[self.cur_s], tr.pp[self.cur_s]
        self._reserve(len(es))
        self._nund = _apply_edges(es, dws, g.u_arr, g.v_arr, self.info.elca_arr, tr.pm_arr, A.bit, A.point,
                                  tr.pre_arr, mode, lo, hi, B.I, B.F, B._cnt,
                                  self._und_n, self._und_v, self._und_b, self._nund)

    def _emit(self, cd: CutDescriptor, value: float) -> None:
        self.emitted += 1
        if not self.emit(cd, value):
            raise SearchStopped

    # -- driver ---------------------------------------------------------

    def process_tree(self) -> bool:
        """Run all three passes.  Returns False if the callback stopped it."""
        try:
            self.process_one_cuts()
            self.process_incomparable()
            self.process_nested()
        except SearchStopped:
            return False
        return True

    def process_one_cuts(self) -> None:
        tr = self.tree
        thr = self.threshold
        A = self.A
        # a(v) only grows, so vertices clear of the threshold now stay clear
        vals = A.values_arr()
        lim = thr * (1.0 + _SCREEN_SLACK)
        cand = [v for v in np.flatnonzero(vals < lim).tolist() if v != tr.root]
        for v in cand:
            while True:
                val = A.value(v)
                if val >= thr:
                    break
                self._emit(CutDescriptor(ONE, v), val)

    # -- dense screen ---------------------------------------------------

    def screen_incomparable(self) -> np.ndarray:
        """Per vertex, its smallest incomparable 2-cut right now."""
        a, wm = self.info.dense(np.asarray(self.ws.w))
        incomp, _ = self.info.masks()
        vals = a[:, None] + a[None, :] - 2.0 * wm
        vals[~incomp] = np.inf
        return vals.min(axis=1)

    def screen_nested(self) -> np.ndarray:
        """Per vertex ``s``, the smallest ``cut(D(t) - D(s))`` over strict ancestors ``t``."""
        a, wm = self.info.dense(np.asarray(self.ws.w))
        _, strict = self.info.masks()
        d = np.diag(wm)
        vals = a[None, :] - a[:, None] + 2.0 * (wm - d[:, None])
        vals[~strict] = np.inf
        return vals.min(axis=1)

    # -- contraction phases ---------------------------------------------

    def _phases(self):
        """Yield the leaf paths of each phase, contracting after each phase.

        A path lists a leaf and its ancestors up to, not including, the
        first vertex with another live child (or the root).
        """
        tr = self.tree
        n, root, parent = tr.n, tr.root, tr.parent
        alive_children = [len(c) for c in tr.children]
        alive = [True] * n
        while True:
            paths = []
            for v in range(n):
                if not alive[v] or v == root or alive_children[v]:
                    continue
                path = [v]
                x = v
                while True:
                    p = parent[x]
                    if p == root or alive_children[p] != 1:
                        break
                    path.append(p)
                    x = p
                paths.append(path)
            if not paths:
                return
            yield paths
            for path in paths:
                alive_children[parent[path[-1]]] -= 1
                for x in path:
                    alive[x] = False

    def _new_forest(self) -> None:
        self.B = LinkCutForest(self.tree.parent, self.A.values_arr())

    def _undo_all(self) -> None:
        B = self.B
        _undo(B.I, B.F, B._cnt, self._und_n, self._und_v, self._und_b, self._nund)
        self._nund = 0
        self.cur_s = -1

    def _end_pass(self) -> None:
        self.B = None
        self.mode = None
        self.cur_s = -1
        self._nund = 0

    def _passes(self, cand, march) -> None:
        for paths in self._phases():
            built = False
            for path in paths:
                last = max((i for i, s in enumerate(path) if cand[s]), default=-1)
                if last < 0:
                    continue
                if not built:
                    self._new_forest()
                    built = True
                march(path[: last + 1])
            self.B = None

    def _march(self, path, cand, kind, kernel) -> None:
        i0 = next(i for i, s in enumerate(path) if cand[s])
        st = np.zeros(8, dtype=np.int64)
        st[_I], st[_J], st[_PREV] = i0, -1, -1
        stf = np.array([math.inf, 0.0])
        p = np.asarray(path, dtype=np.int64)
        while True:
            self._reserve(2 * self.g.m + 2)
            st[_NUND] = self._nund
            found = kernel(p, st, stf)
            self._nund = int(st[_NUND])
            if not found:
                break
            s = path[int(st[_I])]
            self.cur_s = s
            self._emit(CutDescriptor(kind, s, int(st[_T])), float(stf[1]))
        self.queries += int(st[_Q])
        self._undo_all()

    def process_incomparable(self) -> None:
        tr = self.tree
        thr = self.threshold
        if self.prescreen:
            low = self.screen_incomparable()
            cand = low < thr * (1.0 + _SCREEN_SLACK)
            if not cand.any():
                return
            low = low * (1.0 - _SCREEN_SLACK)
        else:
            low = np.full(tr.n, -np.inf)
            cand = np.ones(tr.n, dtype=np.bool_)
        g, info, A = self.g, self.info, self.A
        ys, outside = self._ys, self._outside

        def kernel(p, st, stf):
            B = self.B
            return _incomparable_march(B.I, B.F, B._cnt, A.bit, A.base, tr.order_arr, tr.pre_arr, tr.size_arr,
                                       tr.pm_arr, tr.pp_arr, g.adj_ptr, g.adj_edge, g.u_arr, g.v_arr,
                                       self.ws.w_arr, info.elca_arr, p, cand, low, thr, st, stf, ys, outside,
                                       self._und_n, self._und_v, self._und_b)

        def march(path):
            # the first candidate's partners lie outside its subtree
            B = self.B
            i0 = next(i for i, s in enumerate(path) if cand[s])
            B.path_add(path[i0], INF)
            self._reserve(1)
            self._und_n[self._nund], self._und_v[self._nund], self._und_b[self._nund] = path[i0], 0.0, -1
            self._nund += 1
            self._march(path, cand, INCOMPARABLE, kernel)

        self.mode = INCOMPARABLE
        try:
            self._passes(cand, march)
        finally:
            self._end_pass()

    def process_nested(self) -> None:
        tr = self.tree
        thr = self.threshold
        if self.prescreen:
            low = self.screen_nested()
            cand = low < thr * (1.0 + _SCREEN_SLACK)
            if not cand.any():
                return
        else:
            cand = np.ones(tr.n, dtype=np.bool_)
        g, info, A = self.g, self.info, self.A

        def kernel(p, st, stf):
            B = self.B
            return _nested_march(B.I, B.F, B._cnt, A.bit, A.base, tr.order_arr, tr.pre_arr, tr.size_arr,
                                 tr.pm_arr, tr.pp_arr, tr.parent_arr, g.adj_ptr, g.adj_edge, g.u_arr, g.v_arr,
                                 self.ws.w_arr, info.elca_arr, p, cand, thr, st, stf,
                                 self._und_n, self._und_v, self._und_b)

        self.mode = NESTED
        try:
            self._passes(cand, lambda path: self._march(path, cand, NESTED, kernel))
        finally:
            self._end_pass()
