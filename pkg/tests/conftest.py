import numpy as np
import pytest
from hypothesis import settings

from heldkarp.graph import Graph

settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile("default")


def random_graph(rng, n, m=None, cmax=100, integer=True):
    """Connected multigraph: a random spanning tree plus extra random edges."""
    if m is None:
        m = n - 1 + int(rng.integers(0, n + 1))
    edges = []
    for i in range(1, n):
        edges.append((i, int(rng.integers(0, i)), _cap(rng, cmax, integer)))
    while len(edges) < m:
        a, b = rng.integers(0, n, 2)
        if a != b:
            edges.append((int(a), int(b), _cap(rng, cmax, integer)))
    perm = rng.permutation(n)
    return Graph(n, [(int(perm[a]), int(perm[b]), c) for a, b, c in edges])


def _cap(rng, cmax, integer):
    if integer:
        return float(rng.integers(1, cmax + 1))
    return float(rng.uniform(1.0, cmax))


def cycle(n, c=1.0):
    return Graph(n, [(i, (i + 1) % n, c) for i in range(n)])


def complete(n, c=1.0):
    return Graph(n, [(i, j, c) for i in range(n) for j in range(i + 1, n)])


def star(k, c=1.0):
    return Graph(k + 1, [(0, i, c) for i in range(1, k + 1)])


def random_parent(rng, n):
    """Random rooted tree on 0..n-1 with root 0 (vertex labels shuffled)."""
    perm = [0] + list(rng.permutation(np.arange(1, n)))
    parent = [-1] * n
    for i in range(1, n):
        parent[perm[i]] = perm[int(rng.integers(0, i))]
    return parent


def brute_cut(g, side, w):
    return sum(w[e] for e in range(g.m) if side[g.u[e]] != side[g.v[e]])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
