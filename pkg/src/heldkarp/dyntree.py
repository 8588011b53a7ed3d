"""Rooted spanning trees and the path structures the cut search runs on.

``LinkCutForest`` is a splay-based link-cut tree over a fixed rooted
tree.  It supports adding a constant along the path from a node to the
root and asking for the minimum on such a path.  Values equal to
``+-INF`` are handled symbolically: each node carries an integer block
count next to its real value, and keys compare as ``(blocks, value)``.
Adding ``INF`` and later ``-INF`` therefore restores the real value
exactly, which the per-leaf-path undo in the cut search relies on.
"""

from __future__ import annotations

from typing import List, Sequence, Tuple

import numpy as np
from numba import njit

INF = 1e300
_HALF_INF = INF / 2


class RootedTree:
    """A spanning tree given by parent pointers (``parent[root] == -1``).

    Children are visited in ascending id order.  Each vertex gets two
    slots in a sequence of length ``2n``: ``pm[v]`` on entry and ``pp[v]``
    on exit, so ``x`` lies in the subtree ``D(v)`` iff
    ``pm[v] <= pm[x] <= pp[v]``.
    """

    def __init__(self, parent: Sequence[int]):
        n = len(parent)
        self.n = n
        self.parent = [int(p) for p in parent]
        roots = [v for v in range(n) if self.parent[v] < 0]
        if len(roots) != 1:
            raise ValueError("parent array must describe exactly one root")
        self.root = root = roots[0]
        children: List[List[int]] = [[] for _ in range(n)]
        for v in range(n):
            if v != root:
                children[self.parent[v]].append(v)
        self.children = children
        depth = [0] * n
        pm = [0] * n
        pp = [0] * n
        first = [0] * n
        order = [root]
        tour = [root]
        it = [0] * n
        stack = [root]
        pos = 1
        while stack:
            x = stack[-1]
            ch = children[x]
            i = it[x]
            if i < len(ch):
                it[x] = i + 1
                c = ch[i]
                depth[c] = depth[x] + 1
                pm[c] = pos
                pos += 1
                first[c] = len(tour)
                tour.append(c)
                order.append(c)
                stack.append(c)
            else:
                pp[x] = pos
                pos += 1
                stack.pop()
                if stack:
                    tour.append(stack[-1])
        if len(order) != n:
            raise ValueError("parent array does not describe a spanning tree")
        self.depth = depth
        self.pm = pm
        self.pp = pp
        self.order = order
        self.tour = tour
        self.first = first
        pre = [0] * n
        for i, v in enumerate(order):
            pre[v] = i
        self.pre = pre
        size = [1] * n
        for v in reversed(order):
            p = self.parent[v]
            if p >= 0:
                size[p] += size[v]
        self.size = size
        # int64 copies for compiled code
        self.parent_arr = np.asarray(self.parent, dtype=np.int64)
        self.pre_arr = np.asarray(pre, dtype=np.int64)
        self.size_arr = np.asarray(size, dtype=np.int64)
        self.order_arr = np.asarray(order, dtype=np.int64)
        self.pm_arr = np.asarray(pm, dtype=np.int64)
        self.pp_arr = np.asarray(pp, dtype=np.int64)

    def is_descendant(self, x: int, v: int) -> bool:
        """True if ``x`` lies in ``D(v)`` (``x == v`` included)."""
        return self.pm[v] <= self.pm[x] <= self.pp[v]

    def subtree_sums(self, vals: Sequence[float]) -> List[float]:
        acc = list(vals)
        par = self.parent
        for v in reversed(self.order):
            p = par[v]
            if p >= 0:
                acc[p] += acc[v]
        return acc

    def descendant_matrix(self) -> np.ndarray:
        """``P[x, s] = 1`` iff ``x`` is in ``D(s)``."""
        pm = np.asarray(self.pm)
        pp = np.asarray(self.pp)
        return ((pm[:, None] >= pm[None, :]) & (pm[:, None] <= pp[None, :])).astype(np.float64)


class LcaIndex:
    """Euler tour plus sparse table: O(n log n) build, O(1) queries."""

    def __init__(self, tree: RootedTree):
        self.tree = tree
        depth = np.asarray(tree.depth, dtype=np.int64)
        tour = np.asarray(tree.tour, dtype=np.int64)
        self._depth = depth
        self._first = np.asarray(tree.first, dtype=np.int64)
        levels = [tour]
        k = 1
        while 2 * k <= len(tour):
            prev = levels[-1]
            a = prev[: len(prev) - k]
            b = prev[k:]
            levels.append(np.where(depth[a] <= depth[b], a, b))
            k *= 2
        self._levels = levels
        self._lists = [lv.tolist() for lv in levels]

    def lca(self, u: int, v: int) -> int:
        first = self.tree.first
        l, r = first[u], first[v]
        if l > r:
            l, r = r, l
        k = (r - l + 1).bit_length() - 1
        lv = self._lists[k]
        a, b = lv[l], lv[r - (1 << k) + 1]
        d = self.tree.depth
        return a if d[a] <= d[b] else b

    def lca_many(self, us: np.ndarray, vs: np.ndarray) -> np.ndarray:
        l = self._first[us]
        r = self._first[vs]
        lo = np.minimum(l, r)
        hi = np.maximum(l, r)
        span = hi - lo + 1
        k = np.floor(np.log2(span)).astype(np.int64)
        # guard against log2 rounding at exact powers of two
        k = np.where((1 << (k + 1)) <= span, k + 1, k)
        k = np.where((1 << k) > span, k - 1, k)
        out = np.empty(len(us), dtype=np.int64)
        for kk in np.unique(k).tolist():
            sel = k == kk
            lv = self._levels[kk]
            a = lv[lo[sel]]
            b = lv[hi[sel] - (1 << kk) + 1]
            out[sel] = np.where(self._depth[a] <= self._depth[b], a, b)
        return out


@njit(cache=True)
def _fw_add(bit, point, pre, v, alpha):
    point[v] += alpha
    i = pre[v] + 1
    n = len(bit) - 1
    while i <= n:
        bit[i] += alpha
        i += i & -i


@njit(cache=True)
def _fw_prefix(bit, i):
    s = 0.0
    while i > 0:
        s += bit[i]
        i -= i & -i
    return s


@njit(cache=True)
def _fw_value(bit, base, pre, size, v):
    lo = pre[v]
    return base[v] + _fw_prefix(bit, lo + size[v]) - _fw_prefix(bit, lo)


@njit(cache=True)
def _fw_values(base, point, order, parent):
    acc = point.copy()
    for i in range(len(order) - 1, -1, -1):
        v = order[i]
        p = parent[v]
        if p >= 0:
            acc[p] += acc[v]
    return base + acc


class PathAddForest:
    """Path-add from a node to the root, point query of a node's value.

    Adding along ``v -> root`` is a point update at ``v`` for the subtree
    sums, so a Fenwick tree over preorder answers both in O(log n).  The
    arrays are public so compiled callers can share them.
    """

    def __init__(self, tree: RootedTree, init: Sequence[float]):
        self.tree = tree
        self.n = tree.n
        self.base = np.array(init, dtype=np.float64)
        self.bit = np.zeros(self.n + 1)
        self.point = np.zeros(self.n)

    def path_add(self, v: int, alpha: float) -> None:
        _fw_add(self.bit, self.point, self.tree.pre_arr, v, alpha)

    def value(self, v: int) -> float:
        tr = self.tree
        return float(_fw_value(self.bit, self.base, tr.pre_arr, tr.size_arr, v))

    def values_arr(self) -> np.ndarray:
        tr = self.tree
        return _fw_values(self.base, self.point, tr.order_arr, tr.parent_arr)

    def values(self) -> List[float]:
        return self.values_arr().tolist()


# Row layout of the link-cut state.  Integer rows: splay children,
# parent (splay parent or path-parent), own block count, pending block
# add, subtree min block count, subtree argmin, scratch stack.  Float
# rows: own value, pending value add, subtree min value.
_L, _R, _P, _BLK, _LZB, _MB, _MA, _STK = range(8)
_VAL, _LZV, _MV = range(3)


@njit(cache=True)
def _apply(I, F, x, dv, db):
    F[_VAL, x] += dv
    F[_MV, x] += dv
    F[_LZV, x] += dv
    if db != 0:
        I[_BLK, x] += db
        I[_MB, x] += db
        I[_LZB, x] += db


@njit(cache=True)
def _push(I, F, x):
    dv = F[_LZV, x]
    db = I[_LZB, x]
    if dv != 0.0 or db != 0:
        l = I[_L, x]
        r = I[_R, x]
        if l >= 0:
            _apply(I, F, l, dv, db)
        if r >= 0:
            _apply(I, F, r, dv, db)
        F[_LZV, x] = 0.0
        I[_LZB, x] = 0


@njit(cache=True)
def _pull(I, F, x):
    bb = I[_BLK, x]
    bv = F[_VAL, x]
    ba = x
    l = I[_L, x]
    if l >= 0:
        lb = I[_MB, l]
        lv = F[_MV, l]
        if lb < bb or (lb == bb and lv < bv):
            bb = lb
            bv = lv
            ba = I[_MA, l]
    r = I[_R, x]
    if r >= 0:
        rb = I[_MB, r]
        rv = F[_MV, r]
        # ties go right, i.e. deeper
        if rb < bb or (rb == bb and rv <= bv):
            bb = rb
            bv = rv
            ba = I[_MA, r]
    I[_MB, x] = bb
    F[_MV, x] = bv
    I[_MA, x] = ba


@njit(cache=True)
def _not_root(I, x):
    p = I[_P, x]
    return p >= 0 and (I[_L, p] == x or I[_R, p] == x)


@njit(cache=True)
def _rotate(I, F, x):
    p = I[_P, x]
    g = I[_P, p]
    if I[_L, p] == x:
        b = I[_R, x]
        I[_L, p] = b
        I[_R, x] = p
    else:
        b = I[_L, x]
        I[_R, p] = b
        I[_L, x] = p
    if b >= 0:
        I[_P, b] = p
    if g >= 0:
        if I[_L, g] == p:
            I[_L, g] = x
        elif I[_R, g] == p:
            I[_R, g] = x
    I[_P, p] = x
    I[_P, x] = g
    _pull(I, F, p)
    _pull(I, F, x)


@njit(cache=True)
def _splay(I, F, cnt, x):
    top = 0
    I[_STK, 0] = x
    y = x
    while _not_root(I, y):
        y = I[_P, y]
        top += 1
        I[_STK, top] = y
    while top >= 0:
        _push(I, F, I[_STK, top])
        top -= 1
    while _not_root(I, x):
        p = I[_P, x]
        if _not_root(I, p):
            g = I[_P, p]
            if (I[_L, g] == p) == (I[_L, p] == x):
                _rotate(I, F, p)
            else:
                _rotate(I, F, x)
            cnt[0] += 1
        _rotate(I, F, x)
        cnt[0] += 1


@njit(cache=True)
def _access(I, F, cnt, v):
    last = -1
    x = v
    while x >= 0:
        _splay(I, F, cnt, x)
        I[_R, x] = last
        _pull(I, F, x)
        last = x
        x = I[_P, x]
    _splay(I, F, cnt, v)


@njit(cache=True)
def _lc_add(I, F, cnt, v, dv, db):
    _access(I, F, cnt, v)
    _apply(I, F, v, dv, db)


@njit(cache=True)
def _lc_add_many(I, F, cnt, nodes, dvs, dbs):
    for i in range(len(nodes)):
        _access(I, F, cnt, nodes[i])
        _apply(I, F, nodes[i], dvs[i], dbs[i])


@njit(cache=True)
def _lc_edge(I, F, cnt, x, y, l, dw, z, dz):
    _access(I, F, cnt, x)
    _apply(I, F, x, dw, 0)
    _access(I, F, cnt, y)
    _apply(I, F, y, dw, 0)
    _access(I, F, cnt, l)
    _apply(I, F, l, -2.0 * dw, 0)
    if z >= 0:
        _access(I, F, cnt, z)
        _apply(I, F, z, dz, 0)


@njit(cache=True)
def _lc_min(I, F, cnt, v):
    _access(I, F, cnt, v)
    return I[_MB, v], F[_MV, v], I[_MA, v]


@njit(cache=True)
def _lc_value(I, F, cnt, v):
    _access(I, F, cnt, v)
    return I[_BLK, v], F[_VAL, v]


def _split(alpha: float) -> Tuple[float, int]:
    if alpha >= _HALF_INF:
        return 0.0, 1
    if alpha <= -_HALF_INF:
        return 0.0, -1
    return float(alpha), 0


class LinkCutForest:
    """Splay-tree link-cut structure on a static rooted tree.

    Nodes are ``0..n-1``.  In each splay tree, left means shallower.
    ``path_min`` breaks ties toward the deepest node.  The splay
    routines are compiled with numba; the state lives in two arrays.
    """

    def __init__(self, parent: Sequence[int], init: Sequence[float]):
        n = len(parent)
        self.n = n
        I = np.full((8, n), -1, dtype=np.int64)
        I[_P] = np.asarray(parent, dtype=np.int64)
        I[_BLK] = 0
        I[_LZB] = 0
        I[_MB] = 0
        I[_MA] = np.arange(n)
        F = np.zeros((3, n))
        F[_VAL] = np.asarray(init, dtype=np.float64)
        F[_MV] = F[_VAL]
        self.I = I
        self.F = F
        self._cnt = np.zeros(1, dtype=np.int64)

    @property
    def rotations(self) -> int:
        return int(self._cnt[0])

    def path_add(self, v: int, alpha: float) -> None:
        """Add ``alpha`` to every node on the path ``v -> root``."""
        dv, db = _split(alpha)
        _lc_add(self.I, self.F, self._cnt, v, dv, db)

    def path_add_many(self, nodes: Sequence[int], alphas: Sequence[float]) -> None:
        """Several ``path_add`` calls, applied in order."""
        if not len(nodes):
            return
        a = np.asarray(alphas, dtype=np.float64)
        db = np.where(a >= _HALF_INF, 1, np.where(a <= -_HALF_INF, -1, 0)).astype(np.int64)
        dv = np.where(db != 0, 0.0, a)
        _lc_add_many(self.I, self.F, self._cnt, np.asarray(nodes, dtype=np.int64), dv, db)

    def edge_delta(self, x: int, y: int, l: int, dw: float, z: int = -1, dz: float = 0.0) -> None:
        """``path_add`` of ``dw`` at ``x`` and ``y``, ``-2 dw`` at ``l``, then ``dz`` at ``z``."""
        _lc_edge(self.I, self.F, self._cnt, x, y, l, dw, z, dz)

    def path_min(self, v: int) -> Tuple[float, int]:
        """Minimum value on ``v -> root`` and the deepest node attaining it."""
        b, val, arg = _lc_min(self.I, self.F, self._cnt, v)
        return _reveal(b, val), int(arg)

    def value(self, v: int) -> float:
        b, val = _lc_value(self.I, self.F, self._cnt, v)
        return _reveal(b, val)


def _reveal(blocks: int, val: float) -> float:
    if blocks > 0:
        return INF
    if blocks < 0:
        return -INF
    return float(val)


def forest_build(parent: Sequence[int], init: Sequence[float]) -> LinkCutForest:
    """Link-cut forest over ``parent``; raises ``ValueError`` unless it is a rooted tree."""
    tree = RootedTree(parent)
    if len(init) != tree.n:
        raise ValueError("need one initial value per node")
    return LinkCutForest(tree.parent, init)
