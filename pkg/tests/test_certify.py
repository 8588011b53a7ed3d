import dataclasses

import numpy as np
import pytest

from conftest import cycle, random_graph
from heldkarp.certify import CertificateError, dual_loads, verify
from heldkarp.graph import Graph
from heldkarp.solver import DualSolution, PrimalSolution, SolverConfig, held_karp_bound


@pytest.fixture(scope="module")
def c5():
    g = cycle(5)
    dual, primal, _ = held_karp_bound(g, SolverConfig(eps=0.05, seed=1))
    return g, dual, primal


def test_two_vertex_optimal_pair():
    g = Graph(2, [(0, 1, 2.0)])
    dual = DualSolution([(0, "one", 1, -1, 2.0)], {0: [-1, 0]}, 2.0, 1.0, 4.0)
    primal = PrimalSolution([1.0], 4.0, 0, 1.0)
    cert = verify(g, dual, primal, 0.1, mode="explicit")
    assert cert.gap_ratio == 1.0
    assert cert.dual_max_overload == 1.0
    assert cert.passed and cert.weak_duality


def test_cycle_passes(c5):
    g, dual, primal = c5
    for mode in ("fast", "explicit"):
        cert = verify(g, dual, primal, 0.05, mode=mode)
        assert cert.passed
        assert 1.0 - 1e-9 <= cert.gap_ratio <= 1.25
        assert cert.primal_mincut == pytest.approx(1.0, rel=1e-9)
    assert cert.dual_max_overload <= 1.0 + 1e-9


def test_halved_primal_edge_fails(c5):
    g, dual, primal = c5
    y = list(primal.y)
    y[2] /= 2
    cert = verify(g, dual, dataclasses.replace(primal, y=y), 0.05)
    assert cert.primal_mincut < 1.0
    assert not cert.passed


def test_overloaded_dual_fails(c5):
    g, dual, primal = c5
    bad = dataclasses.replace(dual, scale=dual.scale / 2, value=dual.value * 2)
    cert = verify(g, bad, primal, 0.05, mode="explicit")
    assert cert.dual_max_overload > 1.0
    assert not cert.passed
    # fast mode does not expand the dual, but the gap now breaks weak duality
    assert not verify(g, bad, primal, 0.05).weak_duality


def test_tampered_value_is_rejected(c5):
    g, dual, primal = c5
    with pytest.raises(CertificateError):
        verify(g, dataclasses.replace(dual, value=dual.value * 1.01), primal, 0.05, mode="explicit")


def test_corrupt_entries():
    g = cycle(4)
    base = dict(trees={0: [-1, 0, 1, 2]}, raw_total=1.0, scale=1.0, value=2.0)
    for entry in [(0, "one", 0, -1, 1.0),          # root cut
                  (0, "incomparable", 1, 2, 1.0),  # comparable pair
                  (0, "one", 1, -1, -1.0),         # negative coefficient
                  (3, "one", 1, -1, 1.0)]:         # unknown tree
        with pytest.raises(CertificateError):
            dual_loads(g, DualSolution([entry], **base))


def test_primal_shape_and_mode_checks(c5):
    g, dual, primal = c5
    with pytest.raises(CertificateError):
        verify(g, dual, dataclasses.replace(primal, y=[1.0]), 0.05)
    with pytest.raises(ValueError):
        verify(g, dual, primal, 0.05, mode="sloppy")
    big = random_graph(np.random.default_rng(1), 60, 201)
    fake = PrimalSolution([1.0] * big.m, 0.0, 0, 0.0)
    with pytest.raises(ValueError):
        verify(big, dual, fake, 0.05, mode="explicit")


def test_loose_tolerance_reported(c5):
    g, dual, primal = c5
    cert = verify(g, dual, primal, 0.05, c_tot=0.0)
    assert cert.gap_ratio > 1.0
    assert not cert.passed
