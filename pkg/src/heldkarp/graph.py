"""Undirected capacitated multigraphs and the mutable weight state of a run."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, List, Sequence, Tuple

import numpy as np


class GraphFormatError(ValueError):
    """Base class for input rejections. ``line`` is 1-based, 0 if not line-specific."""

    def __init__(self, message: str, line: int = 0):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


class MalformedLineError(GraphFormatError):
    pass


class SelfLoopError(GraphFormatError):
    pass


class CapacityError(GraphFormatError):
    pass


class DisconnectedGraphError(GraphFormatError):
    pass


class Graph:
    """Multigraph on vertices ``0..n-1`` with positive edge capacities.

    Edge ``e`` joins ``u[e]`` and ``v[e]``.  Plain lists are kept next to
    the numpy arrays because the hot loops index single elements.
    """

    def __init__(self, n: int, edges: Iterable[Tuple[int, int, float]]):
        us, vs, cs = [], [], []
        for a, b, c in edges:
            us.append(int(a))
            vs.append(int(b))
            cs.append(float(c))
        self.n = int(n)
        self.m = len(us)
        self.u: List[int] = us
        self.v: List[int] = vs
        self.c: List[float] = cs
        self.u_arr = np.asarray(us, dtype=np.int64)
        self.v_arr = np.asarray(vs, dtype=np.int64)
        self.cap = np.asarray(cs, dtype=np.float64)
        self.incident: List[List[int]] = [[] for _ in range(self.n)]
        for e in range(self.m):
            self.incident[us[e]].append(e)
            self.incident[vs[e]].append(e)
        # the same adjacency as flat arrays, for compiled loops
        deg = np.fromiter((len(x) for x in self.incident), dtype=np.int64, count=self.n)
        self.adj_ptr = np.concatenate(([0], np.cumsum(deg))).astype(np.int64)
        self.adj_edge = np.fromiter((e for x in self.incident for e in x), dtype=np.int64,
                                    count=2 * self.m)
        self._check()

    def _check(self) -> None:
        if self.n < 2:
            raise GraphFormatError("graph needs at least 2 vertices")
        for e in range(self.m):
            a, b, c = self.u[e], self.v[e], self.c[e]
            if not (0 <= a < self.n and 0 <= b < self.n):
                raise MalformedLineError(f"edge {e} has an endpoint out of range")
            if a == b:
                raise SelfLoopError(f"edge {e} is a self-loop at vertex {a + 1}")
            if not (c > 0 and math.isfinite(c)):
                raise CapacityError(f"edge {e} has non-positive capacity {c!r}")
        if not self.is_connected():
            raise DisconnectedGraphError("graph is not connected")

    def is_connected(self) -> bool:
        seen = [False] * self.n
        seen[0] = True
        stack = [0]
        count = 1
        while stack:
            x = stack.pop()
            for e in self.incident[x]:
                y = self.u[e] ^ self.v[e] ^ x
                if not seen[y]:
                    seen[y] = True
                    count += 1
                    stack.append(y)
        return count == self.n

    def other(self, e: int, x: int) -> int:
        return self.u[e] ^ self.v[e] ^ x

    def edges(self) -> List[Tuple[int, int, float]]:
        return list(zip(self.u, self.v, self.c))

    def cut_value(self, side: Sequence[bool], weights: Sequence[float] | None = None) -> float:
        """Total weight (capacity by default) of edges with one endpoint in ``side``."""
        wt = self.cap if weights is None else np.asarray(weights, dtype=np.float64)
        mask = np.asarray(side, dtype=bool)
        cross = mask[self.u_arr] != mask[self.v_arr]
        return float(wt[cross].sum())

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, m={self.m})"


def _parse_number(tok: str, lineno: int, what: str, integer: bool):
    try:
        return int(tok) if integer else float(tok)
    except ValueError:
        raise MalformedLineError(f"cannot read {what} from {tok!r}", lineno) from None


def parse_graph(text: str) -> Graph:
    """Parse the DIMACS-like edge list format.

    ``p <n> <m>`` (``p edge <n> <m>`` also accepted), then ``m`` lines
    ``e <u> <v> <c>`` with 1-based endpoints.  Lines starting with ``c``
    and blank lines are ignored.
    """
    n = m = None
    edges = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        toks = raw.split()
        if not toks or toks[0] == "c":
            continue
        kind = toks[0]
        if kind == "p":
            if n is not None:
                raise MalformedLineError("duplicate problem line", lineno)
            rest = toks[1:]
            if len(rest) == 3 and not rest[0].lstrip("-").isdigit():
                rest = rest[1:]
            if len(rest) != 2:
                raise MalformedLineError("expected 'p <n> <m>'", lineno)
            n = _parse_number(rest[0], lineno, "vertex count", True)
            m = _parse_number(rest[1], lineno, "edge count", True)
            if n < 2 or m < 0:
                raise MalformedLineError(f"bad sizes n={n} m={m}", lineno)
        elif kind == "e":
            if n is None:
                raise MalformedLineError("edge before problem line", lineno)
            if len(toks) != 4:
                raise MalformedLineError("expected 'e <u> <v> <c>'", lineno)
            a = _parse_number(toks[1], lineno, "endpoint", True)
            b = _parse_number(toks[2], lineno, "endpoint", True)
            c = _parse_number(toks[3], lineno, "capacity", False)
            if not (1 <= a <= n and 1 <= b <= n):
                raise MalformedLineError(f"endpoint out of range 1..{n}", lineno)
            if a == b:
                raise SelfLoopError(f"self-loop at vertex {a}", lineno)
            if not (c > 0 and math.isfinite(c)):
                raise CapacityError(f"non-positive or non-finite capacity {toks[3]}", lineno)
            edges.append((a - 1, b - 1, c))
        else:
            raise MalformedLineError(f"unknown line type {kind!r}", lineno)
    if n is None:
        raise MalformedLineError("missing problem line")
    if len(edges) != m:
        raise MalformedLineError(f"header announces {m} edges, found {len(edges)}")
    return Graph(n, edges)


def read_graph(path: str) -> Graph:
    with open(path, encoding="utf-8") as fh:
        return parse_graph(fh.read())


def serialize_graph(g: Graph) -> str:
    """Inverse of :func:`parse_graph`; capacities round-trip exactly via ``repr``."""
    lines = [f"p {g.n} {g.m}"]
    for a, b, c in g.edges():
        cs = repr(c)
        if cs.endswith(".0"):
            cs = cs[:-2]
        lines.append(f"e {a + 1} {b + 1} {cs}")
    return "\n".join(lines) + "\n"


@dataclass
class WeightState:
    """Multiplicative weights of a run, kept in the log domain.

    ``logw`` holds the true log-weights as of the last flush of lazy
    increments, ``logw_apx`` the approximate ones the search sees.  The
    linear view ``w`` is ``exp(logw_apx - shift)``; a run moves ``shift``
    along with the current threshold so that cut values stay near 1.
    """

    g: Graph
    logw: np.ndarray = field(init=False)
    logw_apx: np.ndarray = field(init=False)
    shift: float = 0.0
    w: List[float] = field(init=False)
    w_arr: np.ndarray = field(init=False)
    wc_sum: float = 0.0

    def __post_init__(self) -> None:
        self.logw = -np.log(self.g.cap)
        self.logw_apx = self.logw.copy()
        self.set_shift(0.0)

    def set_shift(self, shift: float) -> None:
        self.shift = float(shift)
        self.refresh()

    def refresh(self) -> None:
        lin = np.exp(self.logw_apx - self.shift)
        self.w = lin.tolist()
        self.w_arr = lin
        self.wc_sum = float(lin @ self.g.cap)

    def add_log(self, e: int, gain: float) -> float:
        """Raise log w~_e by ``gain``; returns the change of the linear weight."""
        la = self.logw_apx[e] + gain
        self.logw_apx[e] = la
        nw = math.exp(la - self.shift)
        dw = nw - self.w[e]
        self.w[e] = nw
        self.w_arr[e] = nw
        self.wc_sum += dw * self.g.c[e]
        return dw

    def sync_true(self, edges: Iterable[int] | None = None) -> None:
        """Declare the approximate weights exact (after a flush)."""
        if edges is None:
            self.logw[:] = self.logw_apx
        else:
            idx = np.fromiter(edges, dtype=np.int64)
            self.logw[idx] = self.logw_apx[idx]

    def linear(self) -> np.ndarray:
        return np.exp(self.logw_apx - self.shift)


def weighted_degree(g: Graph, weights: Sequence[float], v: int) -> float:
    return float(sum(weights[e] for e in g.incident[v]))
