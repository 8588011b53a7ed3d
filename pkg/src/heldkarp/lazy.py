"""Lazily propagated increments to groups of counters.

A ``LazyIncs`` instance owns counters ``i`` with rates ``r_i``.  Each
``inc(g)`` conceptually adds ``g * r_i`` to every counter, but a counter
only hears about it once its pending amount reaches a fixed granule.
Counters are bucketed by rate (bucket ``j`` holds rates in
``(R/2^(j+1), R/2^j]``) so one accumulator serves a whole bucket; an
increment touches O(1 + #counters released) state per bucket.
"""

from __future__ import annotations

import math
from typing import Dict, List, Sequence, Tuple

import numpy as np
from numba import njit

from .dyntree import RootedTree
from .euler import CanonicalFamily, CutDescriptor
from .graph import Graph, WeightState


class LazyIncs:
    """Counters sharing one lazy increment stream.

    ``counters`` are ``(id, rate)`` pairs sorted by non-increasing rate.
    Emitted amounts are in counter units: counter ``i`` receives
    ``k * r_i / (R 2^-j)`` when the bucket accumulator crosses ``k``
    granules.
    """

    __slots__ = ("buckets", "total")

    def __init__(self, counters: Sequence[Tuple[int, float]]):
        items = list(counters)
        for (_, r0), (_, r1) in zip(items, items[1:]):
            if r1 > r0:
                raise ValueError("counters must be sorted by non-increasing rate")
        self.buckets: List[list] = []
        self.total = 0.0
        if not items:
            return
        top = items[0][1]
        cur_j = None
        for cid, rate in items:
            if not rate > 0:
                raise ValueError("rates must be positive")
            j = int(math.floor(math.log2(top / rate)))
            # floating log2 can land one off near powers of two
            while j > 0 and rate > top * 2.0 ** -j:
                j -= 1
            while rate <= top * 2.0 ** -(j + 1):
                j += 1
            if j != cur_j:
                scale = top * 2.0 ** -j
                # [scale, accumulated T, released count n, ids, ratios]
                self.buckets.append([scale, 0.0, 0.0, [], []])
                cur_j = j
            b = self.buckets[-1]
            b[3].append(cid)
            b[4].append(rate / b[0])

    @classmethod
    def from_layout(cls, layout: List[tuple]) -> "LazyIncs":
        """Fresh accumulators over a layout taken from :meth:`layout`."""
        inst = cls.__new__(cls)
        inst.buckets = [[scale, 0.0, 0.0, ids, ratios] for scale, ids, ratios in layout]
        inst.total = 0.0
        return inst

    def layout(self) -> List[tuple]:
        return [(b[0], b[3], b[4]) for b in self.buckets]

    def inc(self, g: float) -> List[Tuple[int, float]]:
        """Add ``g`` units of time; returns the released ``(id, amount)`` pairs."""
        self.total += g
        out = []
        for b in self.buckets:
            t = b[1] + g * b[0]
            b[1] = t
            f = math.floor(t)
            k = f - b[2]
            if k >= 1:
                b[2] = f
                for cid, ratio in zip(b[3], b[4]):
                    out.append((cid, k * ratio))
        return out

    def flush(self) -> List[Tuple[int, float]]:
        out = []
        for b in self.buckets:
            res = b[1] - b[2]
            if res > 0:
                for cid, ratio in zip(b[3], b[4]):
                    out.append((cid, res * ratio))
            b[1] = 0.0
            b[2] = 0.0
        self.total = 0.0
        return out

    def pending(self) -> Dict[int, float]:
        """Amounts owed but not yet emitted, per counter."""
        out = {}
        for b in self.buckets:
            res = b[1] - b[2]
            for cid, ratio in zip(b[3], b[4]):
                out[cid] = res * ratio
        return out


class _FamilyBuckets:
    """Bucket layouts of the canonical cuts of a family, as flat arrays.

    Canonical cut ``k`` owns buckets ``first[k]..first[k+1]-1``; bucket
    ``b`` has scale ``scale[b]`` and counters ``ids[starts[b]:starts[b+1]]``
    with ratios ``ratio[...]``.  ``extend`` appends the cuts a lazily built
    family has gained since; arrays keep spare room at the end.
    """

    def __init__(self, scale: float):
        self.rate_scale = scale
        self.done = 0
        self.nb = 0
        self.nc = 0
        self.ids = np.empty(0, dtype=np.int64)
        self.ratio = np.empty(0)
        self.starts = np.zeros(1, dtype=np.int64)
        self.scale = np.empty(0)
        self.first = np.zeros(1, dtype=np.int64)

    def layout(self, k: int) -> List[tuple]:
        st = self.starts
        return [(float(self.scale[b]), self.ids[st[b]:st[b + 1]].tolist(), self.ratio[st[b]:st[b + 1]].tolist())
                for b in range(self.first[k], self.first[k + 1])]

    def extend(self, family, g: Graph) -> None:
        k0, k1 = self.done, len(family)
        if k1 == k0:
            return
        fs = family.starts
        lo, hi = fs[k0], fs[k1]
        eid = np.asarray(family.edge_ids[lo:hi], dtype=np.int64)
        gs = np.asarray(fs[k0:k1 + 1], dtype=np.int64) - lo
        bstart, bscale, first, ratio = _bucket_rows(eid, gs, g.cap, self.rate_scale)
        nb, nc = self.nb, self.nc
        self.ids = _put(self.ids, nc, eid)
        self.ratio = _put(self.ratio, nc, ratio)
        self.starts = _put(self.starts, nb + 1, bstart[1:] + nc)
        self.scale = _put(self.scale, nb, bscale)
        self.first = _put(self.first, k0 + 1, first[1:] + nb)
        self.nb = nb + len(bscale)
        self.nc = nc + len(eid)
        self.done = k1


def _put(arr: np.ndarray, at: int, vals: np.ndarray) -> np.ndarray:
    """``arr[at:at+len(vals)] = vals``, growing ``arr`` geometrically."""
    need = at + len(vals)
    if need > len(arr):
        grown = np.zeros(max(need, 2 * len(arr)), dtype=arr.dtype)
        grown[:at] = arr[:at]
        arr = grown
    arr[at:need] = vals
    return arr


def _bucket_rows(eid: np.ndarray, gs: np.ndarray, cap: np.ndarray, scale: float):
    """Buckets of consecutive cuts ``eid[gs[k]:gs[k+1]]`` with rates ``scale / c_e``.

    Edges of a canonical cut are stored by ascending capacity, hence by
    descending rate, so the buckets are runs of equal ``j``; the
    arithmetic matches ``LazyIncs.__init__`` exactly.
    """
    nk = len(gs) - 1
    if len(eid) == 0:
        return np.zeros(1, dtype=np.int64), np.zeros(0), np.zeros(nk + 1, dtype=np.int64), np.zeros(0)
    rate = scale / cap[eid]
    group = np.repeat(np.arange(nk), np.diff(gs))
    top = rate[gs[:-1]][group]
    j = np.floor(np.log2(top / rate)).astype(np.int64)
    for _ in range(2):
        j -= (j > 0) & (rate > top * np.exp2(-j))
        j += rate <= top * np.exp2(-(j + 1))
    new = np.ones(len(eid), dtype=bool)
    new[1:] = (group[1:] != group[:-1]) | (j[1:] != j[:-1])
    bstart = np.flatnonzero(new)
    bscale = top[bstart] * np.exp2(-j[bstart])
    ratio = rate / np.repeat(bscale, np.diff(np.append(bstart, len(eid))))
    first = np.searchsorted(bstart, gs).astype(np.int64)
    return np.append(bstart, len(eid)).astype(np.int64), bscale, first, ratio


def family_buckets(family, g: Graph, scale: float) -> _FamilyBuckets:
    """Vectorised :class:`LazyIncs` layouts for rates ``scale / c_e``, for every cut built so far."""
    fb = _FamilyBuckets(scale)
    fb.extend(family, g)
    return fb


@njit(cache=True)
def _inc_parts(parts, gamma, first, starts, scale, ids, ratio, T, R, gains, seen, out):
    """``LazyIncs.inc(gamma)`` on each canonical cut in ``parts``.

    Released amounts are summed into ``gains``; edges seen for the first
    time are listed in ``out``.  Returns how many were listed.
    """
    c = 0
    for p in range(len(parts)):
        k = parts[p]
        for b in range(first[k], first[k + 1]):
            t = T[b] + gamma * scale[b]
            T[b] = t
            f = math.floor(t)
            kk = f - R[b]
            if kk >= 1:
                R[b] = f
                for i in range(starts[b], starts[b + 1]):
                    e = ids[i]
                    if not seen[e]:
                        seen[e] = True
                        gains[e] = 0.0
                        out[c] = e
                        c += 1
                    gains[e] += kk * ratio[i]
    return c


@njit(cache=True)
def _flush_parts(parts, first, starts, ids, ratio, T, R, gains, seen, out):
    c = 0
    for p in range(len(parts)):
        k = parts[p]
        for b in range(first[k], first[k + 1]):
            res = T[b] - R[b]
            if res > 0:
                for i in range(starts[b], starts[b + 1]):
                    e = ids[i]
                    if not seen[e]:
                        seen[e] = True
                        gains[e] = 0.0
                        out[c] = e
                        c += 1
                    gains[e] += res * ratio[i]
            T[b] = 0.0
            R[b] = 0.0
    return c


class LazyCutWeights:
    """Lazy multiplicative updates of the edge weights of tree-induced cuts.

    Canonical cut ``k`` acts as a ``LazyIncs`` over its edges with rates
    ``S / c_e``; all of them share flat accumulator arrays.  Incrementing
    a cut by ``gamma`` feeds ``gamma`` to each of its canonical cuts; an
    emitted amount ``d`` raises ``log w~_e`` by ``eps * d / S``.  A full
    increment thus multiplies ``w_e`` by ``exp(eps * gamma / c_e)``, and
    ``w~`` trails ``w`` by less than a factor ``exp(eps)``.
    """

    def __init__(self, g: Graph, tree: RootedTree, ws: WeightState, eps: float,
                 scale: float, cap_rank: np.ndarray | None = None,
                 family: CanonicalFamily | None = None):
        self.g = g
        self.ws = ws
        self.eps = eps
        self.scale = scale
        fam = family if family is not None else CanonicalFamily(g, tree, cap_rank)
        self.family = fam
        fb = fam.buckets
        if fb is None or fb.rate_scale != scale:
            fb = fam.buckets = _FamilyBuckets(scale)
        self.fb: _FamilyBuckets = fb
        self.T = np.zeros(0)
        self.R = np.zeros(0)
        # canonical cuts touched so far, in order
        self.touched: Dict[int, None] = {}
        self._gains = np.zeros(g.m)
        self._seen = np.zeros(g.m, dtype=np.bool_)
        self._out = np.empty(g.m, dtype=np.int64)
        self.increments = 0
        self.edge_increments: Dict[int, int] = {}
        self._last: Tuple[tuple, List[int], float] | None = None

    def layout(self, k: int) -> List[tuple]:
        """Bucket layout of canonical cut ``k``, as ``LazyIncs.layout`` gives it."""
        return self.fb.layout(k)

    def decompose(self, cd: CutDescriptor) -> Tuple[List[int], float]:
        key = cd.key()
        if self._last is not None and self._last[0] == key:
            return self._last[1], self._last[2]
        parts = self.family.decompose(cd)
        fb = self.fb
        fb.extend(self.family, self.g)
        if len(self.T) < fb.nb:
            # accumulators for buckets added since, zero as if untouched
            extra = np.zeros(len(fb.scale) - len(self.T))
            self.T = np.concatenate((self.T, extra))
            self.R = np.concatenate((self.R, extra))
        gam = self.family.gamma
        gamma = min(gam[k] for k in parts) if parts else math.inf
        self._last = (key, parts, gamma)
        return parts, gamma

    def min_capacity(self, cd: CutDescriptor) -> float:
        return self.decompose(cd)[1]

    def inc_cut(self, cd: CutDescriptor, gamma: float | None = None) -> List[Tuple[int, float]]:
        """Feed one MWU step on ``cd``; returns ``(edge, change of linear w~)``."""
        parts, gmin = self.decompose(cd)
        if gamma is None:
            gamma = gmin
        if not parts:
            return []
        touched = self.touched
        for k in parts:
            touched[k] = None
        fb = self.fb
        c = _inc_parts(np.asarray(parts, dtype=np.int64), gamma, fb.first, fb.starts, fb.scale,
                       fb.ids, fb.ratio, self.T, self.R, self._gains, self._seen, self._out)
        return self._apply(c, count=True)

    def flush(self) -> List[Tuple[int, float]]:
        fb = self.fb
        c = 0
        if self.touched:
            c = _flush_parts(np.fromiter(self.touched, dtype=np.int64, count=len(self.touched)),
                             fb.first, fb.starts, fb.ids, fb.ratio, self.T, self.R,
                             self._gains, self._seen, self._out)
        out = self._apply(c, count=False)
        # nothing is pending anymore, so every approximate weight is exact
        self.ws.sync_true()
        return out

    def _apply(self, c: int, count: bool) -> List[Tuple[int, float]]:
        f = self.eps / self.scale
        edges = np.sort(self._out[:c])
        self._seen[edges] = False
        gains = self._gains[edges].tolist()
        edges = edges.tolist()
        ws = self.ws
        out = [(e, ws.add_log(e, f * d)) for e, d in zip(edges, gains)]
        if count and out:
            self.increments += len(out)
            ec = self.edge_increments
            for e in edges:
                ec[e] = ec.get(e, 0) + 1
        return out

    def pending_log_gain(self) -> Dict[int, float]:
        """Per edge, how far ``log w`` is ahead of ``log w~`` right now."""
        f = self.eps / self.scale
        fb = self.fb
        out: Dict[int, float] = {}
        for k in self.touched:
            for b in range(fb.first[k], fb.first[k + 1]):
                res = self.T[b] - self.R[b]
                for i in range(fb.starts[b], fb.starts[b + 1]):
                    e = int(fb.ids[i])
                    out[e] = out.get(e, 0.0) + f * (res * fb.ratio[i])
        return out


def scale_factor(n: int) -> int:
    """``ceil(log2(2n))^2``, the number of canonical cuts an edge can sit in."""
    return max(1, (2 * n - 1).bit_length()) ** 2
