import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import random_parent
from heldkarp.dyntree import INF, LcaIndex, LinkCutForest, PathAddForest, RootedTree, forest_build


class NaiveForest:
    """Per-node replay oracle; +-INF kept as integer block counts."""

    def __init__(self, parent, init):
        self.parent = list(parent)
        self.val = [float(x) for x in init]
        self.blk = [0] * len(parent)

    def path_add(self, v, alpha):
        while v >= 0:
            if alpha >= INF / 2:
                self.blk[v] += 1
            elif alpha <= -INF / 2:
                self.blk[v] -= 1
            else:
                self.val[v] += alpha
            v = self.parent[v]

    def key(self, v):
        return (self.blk[v], self.val[v])

    def path_min(self, v):
        best, arg = None, -1
        while v >= 0:
            # walking upward, strict comparison keeps the deepest minimum
            if best is None or self.key(v) < best:
                best, arg = self.key(v), v
            v = self.parent[v]
        return best, arg


def reveal(key):
    b, v = key
    return INF if b > 0 else (-INF if b < 0 else v)


def parent_walk_lca(parent, u, v):
    anc = set()
    while u >= 0:
        anc.add(u)
        u = parent[u]
    while v not in anc:
        v = parent[v]
    return v


def test_single_node():
    f = forest_build([-1], [7.0])
    assert f.value(0) == 7
    assert f.path_min(0) == (7, 0)


def test_path_examples():
    f = forest_build([-1, 0, 1], [0.0, 0.0, 0.0])
    assert [f.value(v) for v in range(3)] == [0, 0, 0]
    f.path_add(2, 1.0)
    assert [f.value(v) for v in range(3)] == [1, 1, 1]
    f.path_add(2, 1.0)
    assert [f.value(v) for v in range(3)] == [2, 2, 2]


def test_path_min_example():
    f = forest_build([-1, 0, 1], [5.0, 2.0, 9.0])
    assert f.path_min(2) == (2.0, 1)


def test_ties_go_to_deepest():
    f = forest_build([-1, 0, 1, 2], [1.0, 1.0, 1.0, 3.0])
    assert f.path_min(3) == (1.0, 2)
    assert f.path_min(1) == (1.0, 1)


def test_infinite_block_and_undo():
    f = forest_build([-1, 0, 1], [5.0, 2.0, 9.0])
    f.path_add(1, INF)
    assert f.path_min(1) == (INF, 1)
    assert f.path_min(2) == (9.0, 2)
    f.path_add(1, -INF)
    assert f.path_min(2) == (2.0, 1)
    assert f.value(0) == 5.0


def test_cyclic_parent_rejected():
    with pytest.raises(ValueError):
        forest_build([1, 0], [0.0, 0.0])
    with pytest.raises(ValueError):
        forest_build([-1, 2, 1], [0.0, 0.0, 0.0])


@given(st.integers(1, 64), st.integers(0, 2**32 - 1))
def test_build_values(n, seed):
    rng = np.random.default_rng(seed)
    parent = random_parent(rng, n) if n > 1 else [-1]
    init = rng.normal(size=n).tolist()
    f = forest_build(parent, init)
    assert [f.value(v) for v in range(n)] == init


def run_ops(rng, n, ops, integer_values=False):
    parent = random_parent(rng, n) if n > 1 else [-1]
    init = (rng.integers(-3, 4, n).astype(float) if integer_values else rng.normal(size=n)).tolist()
    f = LinkCutForest(parent, init)
    g = NaiveForest(parent, init)
    blocks = []
    checks = 0
    for _ in range(ops):
        r = rng.random()
        v = int(rng.integers(0, n))
        if r < 0.4:
            a = float(rng.integers(-3, 4)) if integer_values else float(rng.normal())
            f.path_add(v, a)
            g.path_add(v, a)
        elif r < 0.47:
            f.path_add(v, INF)
            g.path_add(v, INF)
            blocks.append(v)
        elif r < 0.54 and blocks:
            u = blocks.pop(int(rng.integers(0, len(blocks))))
            f.path_add(u, -INF)
            g.path_add(u, -INF)
        elif r < 0.8:
            val, arg = f.path_min(v)
            key, garg = g.path_min(v)
            assert arg == garg
            assert val == pytest.approx(reveal(key), rel=1e-9, abs=1e-9)
            checks += 1
        else:
            assert f.value(v) == pytest.approx(reveal(g.key(v)), rel=1e-9, abs=1e-9)
            checks += 1
    return checks


@given(st.integers(1, 64), st.integers(0, 2**32 - 1), st.booleans())
def test_matches_naive_replay(n, seed, integer_values):
    run_ops(np.random.default_rng(seed), n, 300, integer_values)


def test_rotation_count_reported(rng):
    parent = random_parent(rng, 64)
    f = LinkCutForest(parent, [0.0] * 64)
    for _ in range(2000):
        f.path_add(int(rng.integers(0, 64)), 1.0)
    # amortised O(log n) per operation; the constant is only reported
    assert 0 < f.rotations < 2000 * 64


def test_path_add_many_equals_sequence(rng):
    parent = random_parent(rng, 30)
    a = LinkCutForest(parent, [0.0] * 30)
    b = LinkCutForest(parent, [0.0] * 30)
    nodes = rng.integers(0, 30, 50).tolist()
    alphas = rng.normal(size=50).tolist()
    alphas[3] = INF
    for v, x in zip(nodes, alphas):
        a.path_add(v, x)
    b.path_add_many(nodes, alphas)
    assert [a.path_min(v) for v in range(30)] == [b.path_min(v) for v in range(30)]


def test_edge_delta_equals_three_adds(rng):
    parent = random_parent(rng, 20)
    a = LinkCutForest(parent, [0.0] * 20)
    b = LinkCutForest(parent, [0.0] * 20)
    a.path_add(4, 0.5)
    a.path_add(7, 0.5)
    a.path_add(0, -1.0)
    a.path_add(9, 2.0)
    b.edge_delta(4, 7, 0, 0.5, 9, 2.0)
    assert [a.value(v) for v in range(20)] == [b.value(v) for v in range(20)]


def test_lca_examples():
    tree = RootedTree([-1, 0, 0, 1])
    ix = LcaIndex(tree)
    assert all(ix.lca(v, v) == v for v in range(4))
    assert ix.lca(1, 2) == 0
    assert ix.lca(3, 2) == 0
    assert ix.lca(3, 1) == 1


@given(st.integers(2, 64), st.integers(0, 2**32 - 1))
def test_lca_matches_parent_walk(n, seed):
    rng = np.random.default_rng(seed)
    parent = random_parent(rng, n)
    ix = LcaIndex(RootedTree(parent))
    us = rng.integers(0, n, 200)
    vs = rng.integers(0, n, 200)
    expect = [parent_walk_lca(parent, int(u), int(v)) for u, v in zip(us, vs)]
    assert [ix.lca(int(u), int(v)) for u, v in zip(us, vs)] == expect
    assert ix.lca_many(us, vs).tolist() == expect


def test_euler_order_example():
    # r=0 with children a=1, b=2; b with children c=3, d=4
    tree = RootedTree([-1, 0, 0, 2, 2])
    seq = sorted([(tree.pm[v], f"{v}-") for v in range(5)] + [(tree.pp[v], f"{v}+") for v in range(5)])
    assert [s for _, s in seq] == ["0-", "1-", "1+", "2-", "3-", "3+", "4-", "4+", "2+", "0+"]


def test_euler_single_edge():
    tree = RootedTree([-1, 0])
    assert (tree.pm[0], tree.pp[0]) == (0, 3)


@given(st.integers(2, 64), st.integers(0, 2**32 - 1))
def test_euler_laminarity(n, seed):
    rng = np.random.default_rng(seed)
    parent = random_parent(rng, n)
    tree = RootedTree(parent)
    assert tree.pm[tree.root] == 0 and tree.pp[tree.root] == 2 * n - 1
    assert sorted(tree.pm + tree.pp) == list(range(2 * n))
    for u in range(n):
        v = u
        while v >= 0:
            assert tree.pm[v] <= tree.pm[u] < tree.pp[u] <= tree.pp[v]
            if v != u:
                assert tree.pm[v] < tree.pm[u] and tree.pp[u] < tree.pp[v]
            assert tree.is_descendant(u, v)
            v = parent[v]


@given(st.integers(2, 64), st.integers(0, 2**32 - 1))
def test_fenwick_path_add(n, seed):
    rng = np.random.default_rng(seed)
    parent = random_parent(rng, n)
    tree = RootedTree(parent)
    init = rng.normal(size=n).tolist()
    f = PathAddForest(tree, init)
    g = NaiveForest(parent, init)
    for _ in range(100):
        v = int(rng.integers(0, n))
        a = float(rng.normal())
        f.path_add(v, a)
        g.path_add(v, a)
    assert f.values() == pytest.approx(g.val, rel=1e-9, abs=1e-9)
    assert [f.value(v) for v in range(n)] == pytest.approx(g.val, rel=1e-9, abs=1e-9)
