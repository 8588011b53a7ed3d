"""Tree cuts as position intervals, and their canonical decomposition.

Every vertex ``v`` owns positions ``pm[v] < pp[v]`` in ``0..2n-1``.  An
edge is represented by the entry positions of its endpoints, and a cut
induced by the tree by one, two or three position intervals.  A padded
binary range tree over the positions splits such a cut into
"canonical cuts": pairs ``(I, J)`` of disjoint range-tree nodes, where
the cut ``(I, J)`` holds every edge with one entry position in ``I`` and
the other in ``J``.  A 1- or 2-respecting cut is the disjoint union of
O(log^2 n) canonical cuts.
"""

from __future__ import annotations

from typing import Dict, List, NamedTuple, Tuple

import numpy as np
from numba import njit

from .dyntree import RootedTree
from .graph import Graph

ONE = "one"
INCOMPARABLE = "incomparable"
NESTED = "nested"


class CutDescriptor(NamedTuple):
    """A cut defined by tree vertices.

    ``one``: shore ``D(s)``.  ``incomparable``: shore ``D(s) + D(t)``
    for incomparable ``s, t``.  ``nested``: shore ``D(t) - D(s)`` for
    ``s`` a strict descendant of ``t``.
    """

    kind: str
    s: int
    t: int = -1

    def key(self) -> Tuple[str, int, int]:
        return (self.kind, self.s, self.t)


def validate(tree: RootedTree, cd: CutDescriptor) -> None:
    n = tree.n
    if not 0 <= cd.s < n:
        raise ValueError(f"vertex {cd.s} out of range")
    if cd.kind == ONE:
        if cd.s == tree.root:
            raise ValueError("the root does not define a cut")
        return
    if not 0 <= cd.t < n:
        raise ValueError(f"vertex {cd.t} out of range")
    if cd.kind == INCOMPARABLE:
        if tree.is_descendant(cd.s, cd.t) or tree.is_descendant(cd.t, cd.s):
            raise ValueError(f"{cd.s} and {cd.t} are comparable")
    elif cd.kind == NESTED:
        if cd.s == cd.t or not tree.is_descendant(cd.s, cd.t):
            raise ValueError(f"{cd.s} is not a strict descendant of {cd.t}")
        if cd.t == tree.root:
            # shore V - D(s): same cut as the 1-cut of s
            return
    else:
        raise ValueError(f"unknown cut kind {cd.kind!r}")


def shore_intervals(tree: RootedTree, cd: CutDescriptor) -> List[Tuple[int, int]]:
    """Closed position intervals covering the shore of ``cd``."""
    pm, pp = tree.pm, tree.pp
    s = cd.s
    if cd.kind == ONE:
        return [(pm[s], pp[s])]
    t = cd.t
    if cd.kind == INCOMPARABLE:
        return sorted([(pm[s], pp[s]), (pm[t], pp[t])])
    out = []
    if pm[t] <= pm[s] - 1:
        out.append((pm[t], pm[s] - 1))
    if pp[s] + 1 <= pp[t]:
        out.append((pp[s] + 1, pp[t]))
    return out


def complement_intervals(ivs: List[Tuple[int, int]], total: int) -> List[Tuple[int, int]]:
    out = []
    cur = 0
    for lo, hi in sorted(ivs):
        if cur <= lo - 1:
            out.append((cur, lo - 1))
        cur = hi + 1
    if cur <= total - 1:
        out.append((cur, total - 1))
    return out


def shore_mask(tree: RootedTree, cd: CutDescriptor) -> np.ndarray:
    """Boolean vertex membership of the shore, straight from positions."""
    pm = np.asarray(tree.pm)
    mask = np.zeros(tree.n, dtype=bool)
    for lo, hi in shore_intervals(tree, cd):
        mask |= (pm >= lo) & (pm <= hi)
    return mask


def cut_edges(g: Graph, tree: RootedTree, cd: CutDescriptor) -> np.ndarray:
    mask = shore_mask(tree, cd)
    return np.flatnonzero(mask[g.u_arr] != mask[g.v_arr])


class CanonicalFamily:
    """All non-empty canonical cuts of one tree, with their edges.

    Edges inside a canonical cut are listed by ascending capacity (ties
    by edge id); ``gamma[k]`` is the smallest capacity in cut ``k``.
    """

    def __init__(self, g: Graph, tree: RootedTree, cap_rank: np.ndarray | None = None):
        self.tree = tree
        n2 = 2 * tree.n
        height = max(1, (n2 - 1).bit_length())
        size = 1 << height
        self.size = size
        self.height = height
        if cap_rank is None:
            cap_rank = capacity_rank(g)
        pm = np.asarray(tree.pm, dtype=np.int64)
        a = pm[g.u_arr]
        b = pm[g.v_arr]
        lo = np.minimum(a, b) + size
        hi = np.maximum(a, b) + size
        depth_below = np.zeros(g.m, dtype=np.int64)
        x = lo ^ hi
        for k in range(height + 1):
            depth_below += (x >> k) > 0
        keys = []
        eids = []
        eidx = np.arange(g.m, dtype=np.int64)
        for k1 in range(height):
            left = lo >> k1
            for k2 in range(height):
                sel = depth_below > max(k1, k2)
                if not sel.any():
                    continue
                keys.append((left[sel] << (height + 1)) | (hi[sel] >> k2))
                eids.append(eidx[sel])
        if keys:
            key = np.concatenate(keys)
            eid = np.concatenate(eids)
        else:
            key = np.zeros(0, dtype=np.int64)
            eid = np.zeros(0, dtype=np.int64)
        order = np.lexsort((cap_rank[eid], key))
        key = key[order]
        eid = eid[order]
        uniq, starts = np.unique(key, return_index=True)
        self.keys = uniq
        self.starts = np.append(starts, len(key)).tolist()
        self.edge_ids = eid.tolist()
        self.gamma = g.cap[eid[starts]].tolist() if len(starts) else []
        self.index: Dict[int, int] = dict(zip(uniq.tolist(), range(len(uniq))))
        # lo_of[node]: first position spanned by range-tree node
        lo_of = [0] * (2 * size)
        for node in range(1, 2 * size):
            h = height - (node.bit_length() - 1)
            lo_of[node] = (node << h) - size
        self._lo_of = lo_of
        # (scale, bucket layouts) of the lazy counters, set by their first user
        self.buckets = None

    def __len__(self) -> int:
        return len(self.keys)

    @property
    def slots(self) -> int:
        return len(self.edge_ids)

    def edges_of(self, k: int) -> List[int]:
        return self.edge_ids[self.starts[k]:self.starts[k + 1]]

    def node_intervals(self, ivs: List[Tuple[int, int]]) -> List[int]:
        size = self.size
        out = []
        for lo, hi in ivs:
            l = lo + size
            r = hi + size + 1
            while l < r:
                if l & 1:
                    out.append(l)
                    l += 1
                if r & 1:
                    r -= 1
                    out.append(r)
                l >>= 1
                r >>= 1
        return out

    def decompose(self, cd: CutDescriptor) -> List[int]:
        """Indices of the non-empty canonical cuts making up ``cd``."""
        tree = self.tree
        ivs = shore_intervals(tree, cd)
        side_a = self.node_intervals(ivs)
        # the complement runs to the padded end: no edge sits there, and a
        # suffix of the range tree needs at most ``height`` nodes
        side_b = self.node_intervals(complement_intervals(ivs, self.size))
        lo_of = self._lo_of
        index = self.index
        shift = self.height + 1
        out = []
        for x in side_a:
            lx = lo_of[x]
            for y in side_b:
                if lx < lo_of[y]:
                    k = index.get((x << shift) | y)
                else:
                    k = index.get((y << shift) | x)
                if k is not None:
                    out.append(k)
        out.sort()
        return out


@njit(cache=True)
def _nonempty_pairs(side_a, side_b, lo_of, hi_of, nstart, by_hi, shift):
    """Non-empty canonical cuts among ``side_a x side_b``, by ascending key.

    Returns keys, and the start and length of each cut's slice of the
    left node's edge list (ordered by right position).
    """
    cap = len(side_a) * len(side_b)
    keys = np.empty(cap, dtype=np.int64)
    st = np.empty(cap, dtype=np.int64)
    cnt = np.empty(cap, dtype=np.int64)
    c = 0
    for x in side_a:
        for y in side_b:
            if lo_of[x] < lo_of[y]:
                a, b = x, y
            else:
                a, b = y, x
            s0 = nstart[a]
            s1 = nstart[a + 1]
            if s0 == s1:
                continue
            i = s0 + np.searchsorted(by_hi[s0:s1], lo_of[b])
            j = s0 + np.searchsorted(by_hi[s0:s1], hi_of[b], side="right")
            if j > i:
                keys[c] = (a << shift) | b
                st[c] = i
                cnt[c] = j - i
                c += 1
    order = np.argsort(keys[:c])
    return keys[:c][order], st[:c][order], cnt[:c][order]


class LazyFamily:
    """The canonical cuts of :class:`CanonicalFamily`, built on first use.

    Each range-tree node lists the edges whose left position it spans,
    ordered by right position (O(m log n) entries), so the edges of a
    canonical cut are one slice of its left node's list.  A cut gets its
    index when a decomposition first meets it; ``decompose`` still lists
    parts by ascending key, as the eager family does.
    """

    def __init__(self, g: Graph, tree: RootedTree, cap_rank: np.ndarray | None = None):
        self.tree = tree
        n2 = 2 * tree.n
        height = max(1, (n2 - 1).bit_length())
        size = 1 << height
        self.size = size
        self.height = height
        self.cap = g.cap
        self.cap_rank = capacity_rank(g) if cap_rank is None else cap_rank
        pm = np.asarray(tree.pm, dtype=np.int64)
        a = pm[g.u_arr]
        b = pm[g.v_arr]
        lo = np.minimum(a, b) + size
        hi = np.maximum(a, b)
        node = np.concatenate([lo >> k for k in range(height + 1)])
        his = np.tile(hi, height + 1)
        order = np.lexsort((his, node))
        self.by_hi = his[order]
        self.by_eid = np.tile(np.arange(g.m, dtype=np.int64), height + 1)[order]
        self.nstart = np.searchsorted(node[order], np.arange(2 * size + 1)).astype(np.int64)
        nodes = np.arange(2 * size)
        bits = np.zeros(2 * size, dtype=np.int64)
        for k in range(height + 1):
            bits += (nodes >> k) > 0
        h = height - (bits - 1)
        self._lo_of = (nodes << h) - size
        self._hi_of = ((nodes + 1) << h) - size - 1
        self.index: Dict[int, int] = {}
        self._ids = np.empty(max(16, g.m), dtype=np.int64)
        self.starts: List[int] = [0]
        self.gamma: List[float] = []
        self.buckets = None

    def __len__(self) -> int:
        return len(self.gamma)

    @property
    def edge_ids(self) -> np.ndarray:
        return self._ids[:self.starts[-1]]

    @property
    def slots(self) -> int:
        return len(self.by_eid) + self.starts[-1]

    def edges_of(self, k: int) -> List[int]:
        return self._ids[self.starts[k]:self.starts[k + 1]].tolist()

    node_intervals = CanonicalFamily.node_intervals

    def _add(self, start: int, count: int) -> int:
        e = self.by_eid[start:start + count]
        e = e[np.argsort(self.cap_rank[e])]
        end = self.starts[-1]
        if end + count > len(self._ids):
            grown = np.empty(max(2 * len(self._ids), end + count), dtype=np.int64)
            grown[:end] = self._ids[:end]
            self._ids = grown
        self._ids[end:end + count] = e
        self.starts.append(end + count)
        self.gamma.append(float(self.cap[e[0]]))
        return len(self.gamma) - 1

    def decompose(self, cd: CutDescriptor) -> List[int]:
        """Indices of the non-empty canonical cuts making up ``cd``, by key."""
        ivs = shore_intervals(self.tree, cd)
        side_a = self.node_intervals(ivs)
        side_b = self.node_intervals(complement_intervals(ivs, self.size))
        if not side_a or not side_b:
            return []
        keys, st, cnt = _nonempty_pairs(np.asarray(side_a, dtype=np.int64), np.asarray(side_b, dtype=np.int64),
                                        self._lo_of, self._hi_of, self.nstart, self.by_hi, self.height + 1)
        index = self.index
        out = []
        for key, s0, c in zip(keys.tolist(), st.tolist(), cnt.tolist()):
            k = index.get(key)
            if k is None:
                k = index[key] = self._add(s0, c)
            out.append(k)
        return out


def capacity_rank(g: Graph) -> np.ndarray:
    order = np.lexsort((np.arange(g.m), g.cap))
    rank = np.empty(g.m, dtype=np.int64)
    rank[order] = np.arange(g.m)
    return rank
