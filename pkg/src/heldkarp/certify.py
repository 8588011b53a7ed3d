"""Independent checks of a solver result.

The primal is checked by an exact minimum cut of ``y``.  In explicit
mode every dual entry is expanded to its edge set by the position test
on its tree, and the summed loads are compared with the capacities.
Neither check reuses the solver's incremental structures.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Dict, Optional

import numpy as np

from .dyntree import RootedTree
from .euler import CutDescriptor, cut_edges, validate
from .graph import Graph
from .mincut import global_mincut
from .solver import DualSolution, PrimalSolution

EXPLICIT_MAX_M = 200
FEAS_TOL = 1e-9


class CertificateError(ValueError):
    """A dual entry that does not describe a valid tree cut."""


@dataclass
class Certificate:
    primal_cost: float
    dual_value: float
    gap_ratio: float
    primal_mincut: float
    dual_max_overload: Optional[float]
    weak_duality: bool
    passed: bool

    def as_dict(self) -> dict:
        return asdict(self)


def dual_loads(g: Graph, dual: DualSolution) -> np.ndarray:
    """Per-edge load of the scaled dual, expanded cut by cut."""
    trees: Dict[int, RootedTree] = {}
    load = np.zeros(g.m)
    for idx, kind, s, t, coef in dual.entries:
        tree = trees.get(idx)
        if tree is None:
            parent = dual.trees.get(idx)
            if parent is None:
                raise CertificateError(f"entry refers to unknown tree {idx}")
            tree = RootedTree(parent)
            trees[idx] = tree
        cd = CutDescriptor(kind, s, t)
        try:
            validate(tree, cd)
        except ValueError as exc:
            raise CertificateError(str(exc)) from None
        if not coef > 0:
            raise CertificateError("non-positive dual coefficient")
        load[cut_edges(g, tree, cd)] += coef
    return load / dual.scale


def verify(g: Graph, dual: DualSolution, primal: PrimalSolution, eps: float,
           mode: str = "fast", c_tot: float = 5.0) -> Certificate:
    if mode not in ("fast", "explicit"):
        raise ValueError(f"unknown mode {mode!r}")
    y = np.asarray(primal.y, dtype=np.float64)
    if y.shape != (g.m,) or np.any(y < 0):
        raise CertificateError("primal vector has wrong shape or negative entries")
    mincut, _ = global_mincut(g, y)
    cost = float(2.0 * (y @ g.cap))
    overload = None
    ok = mincut >= 1.0 - FEAS_TOL
    if mode == "explicit":
        if g.m > EXPLICIT_MAX_M:
            raise ValueError(f"explicit mode needs m <= {EXPLICIT_MAX_M}")
        overload = float((dual_loads(g, dual) / g.cap).max())
        total = math.fsum(e[4] for e in dual.entries)
        if not math.isclose(2.0 * total / dual.scale, dual.value, rel_tol=1e-9):
            raise CertificateError("dual value does not match its entries")
        ok = ok and overload <= 1.0 + FEAS_TOL
    gap = cost / dual.value if dual.value > 0 else math.inf
    weak = gap >= 1.0 - FEAS_TOL
    ok = ok and gap <= 1.0 + c_tot * eps
    return Certificate(cost, dual.value, gap, float(mincut), overload, weak, bool(ok))
