"""The multiplicative-weights driver for the Held-Karp bound.

The LP solved is ``min <c, y>`` subject to ``y(C) >= 1`` for every cut
``C``; the Held-Karp value is twice its optimum.  Its dual packs cuts
into the capacities.  The driver keeps a weight ``w_e`` per edge
(initially ``1/c_e``), and in epochs with a threshold ``lambda`` that
grows by ``1 + eps`` per epoch it finds cuts of weight below
``(1 + eps) lambda`` via sampled spanning trees.  Each such cut ``C``
with bottleneck capacity ``gamma`` receives dual mass ``eps gamma / eta``
and its edges get ``w_e *= exp(eps gamma / c_e)``; the run time
``t`` advances by ``eps gamma / (eta beta)`` with
``beta = <w, c> / w(C)``, and the run stops at ``t = 1``.

Because a cut's dual mass and its weight update are tied by
``log(w_e c_e) = eta load_e / c_e``, the final weights give exact edge
loads, and dividing by the worst one makes the dual feasible.  The
primal comes from the weights at the step with the smallest ``beta``,
recovered by replaying the epoch that holds it from a checkpoint, and
scaled by an exact minimum cut.
"""

from __future__ import annotations

import copy
import math
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .euler import CutDescriptor, LazyFamily, capacity_rank
from .graph import Graph, WeightState
from .lazy import LazyCutWeights, scale_factor
from .mincut import global_mincut, mincut_at_least
from .packing import TreePacking, greedy_tree_packing, refresh_packing, sample_count, sample_trees
from .search import CutSearch, TreeInfo


class SolverError(RuntimeError):
    pass


@dataclass
class SolverConfig:
    eps: float = 0.1
    seed: int = 0
    zeta: float = 0.1
    tree_const: float = 3.0
    max_iterations: Optional[int] = None
    # dense screening needs n x n matrices; off above this size
    prescreen_max_n: int = 400
    # reuse the previous epoch's packing when it is still certified
    reuse_packing: bool = True
    # skip the rest of an epoch once the minimum cut clears the threshold
    global_screen: bool = True
    # pack trees only up to the fraction of lambda that sampling needs
    packing_target: bool = True
    c_tot: float = 5.0

    def validate(self) -> None:
        if not 0.0 < self.eps < 0.5:
            raise ValueError(f"epsilon must lie in (0, 1/2), got {self.eps}")
        if not 0.0 < self.zeta <= 0.5:
            raise ValueError(f"zeta must lie in (0, 1/2], got {self.zeta}")
        if not self.tree_const > 0:
            raise ValueError("tree constant must be positive")

    def iteration_cap(self, m: int) -> int:
        if self.max_iterations is not None:
            return self.max_iterations
        return math.ceil(40 * m * math.log(max(m, 3)) / self.eps ** 2)

    def as_dict(self) -> dict:
        return {
            "eps": self.eps,
            "seed": self.seed,
            "zeta": self.zeta,
            "tree_const": self.tree_const,
            "c_tot": self.c_tot,
        }


@dataclass
class DualSolution:
    """Cut packing.  ``entries`` hold ``(tree, kind, s, t, coefficient)``
    before scaling; ``trees`` maps tree indices to parent arrays."""

    entries: List[Tuple[int, str, int, int, float]]
    trees: Dict[int, List[int]]
    raw_total: float
    scale: float
    value: float

    def scaled(self):
        for tree, kind, s, t, coef in self.entries:
            yield tree, CutDescriptor(kind, s, t), coef / self.scale


@dataclass
class PrimalSolution:
    y: List[float]
    cost: float
    iteration: int
    ratio: float


@dataclass
class RunStats:
    iterations: int = 0
    epochs: int = 0
    trees_sampled: int = 0
    trees_searched: int = 0
    increments: int = 0
    max_edge_increments: int = 0
    t: float = 0.0
    log_lambda: List[float] = field(default_factory=list)
    best_iteration: int = -1
    best_ratio: float = math.inf
    packings: int = 0
    packings_reused: int = 0
    max_lag: float = 0.0
    global_screens: int = 0

    def constants(self, n: int, m: int, eps: float) -> dict:
        lm = math.log(max(m, 3))
        ln3 = max(math.log(n), 1.0) ** 3
        return {
            "c4": self.iterations * eps ** 2 / (m * lm),
            "c5": self.max_edge_increments * eps ** 2 / ln3,
            "c6": self.epochs * eps ** 2 / lm,
        }


class MWUState:
    """Run time, dual accumulator and best-ratio tracking."""

    def __init__(self, m: int, eps: float):
        self.eps = eps
        self.eta = math.log(max(m, 3)) / eps
        self.t = 0.0
        self.iterations = 0
        self.coef: Dict[tuple, float] = {}
        self.total = 0.0
        self.best_ratio = math.inf
        self.best_iteration = -1

    def step(self, key: tuple, beta: float, gamma: float) -> Tuple[float, float]:
        """One step on the cut ``key``.  Returns ``(coefficient, fraction)``.

        ``fraction < 1`` only on the last step, which is cut short so
        that ``t`` lands exactly on 1.
        """
        if beta < self.best_ratio:
            self.best_ratio = beta
            self.best_iteration = self.iterations
        coef = self.eps * gamma / self.eta
        dt = coef / beta
        frac = 1.0
        if self.t + dt >= 1.0:
            frac = (1.0 - self.t) / dt
            coef *= frac
            self.t = 1.0
        else:
            self.t += dt
        self.coef[key] = self.coef.get(key, 0.0) + coef
        self.total += coef
        self.iterations += 1
        return coef, frac


def mwu_step(state: MWUState, key: tuple, wc_sum: float, w_cut: float, gamma: float) -> float:
    """Step taking the raw weights: ``beta = wc_sum / w_cut``.  Returns the coefficient credited."""
    return state.step(key, wc_sum / w_cut, gamma)[0]


_CACHE_TREES = 1024
_CACHE_SLOTS = 4_000_000


def _cached_size(info: TreeInfo) -> int:
    size = info.g.n
    if info._pmat is not None:
        size += info.g.n ** 2 // 4
    if info.family is not None:
        size += 4 * info.family.slots
    return size


class _Captured(Exception):
    def __init__(self, logw: np.ndarray):
        self.logw = logw


@dataclass
class Checkpoint:
    """Run state at the start of an epoch; lazy counters are empty there."""

    epochs: int
    trees_sampled: int
    iterations: int
    t: float
    log_lam: float
    logw: np.ndarray
    rng_state: dict
    packing: Optional[TreePacking]


class _Run:
    def __init__(self, g: Graph, cfg: SolverConfig, stop_at: int | None = None):
        cfg.validate()
        self.g = g
        self.cfg = cfg
        self.stop_at = stop_at
        self.ws = WeightState(g)
        self.state = MWUState(g.m, cfg.eps)
        self.stats = RunStats()
        self.scale = scale_factor(g.n)
        self.cap_rank = capacity_rank(g)
        self.rng = np.random.default_rng(cfg.seed)
        self.h = sample_count(g.n, cfg.eps, cfg.tree_const)
        self.prescreen = g.n <= cfg.prescreen_max_n
        self.cache: OrderedDict = OrderedDict()
        self.trees: Dict[int, List[int]] = {}
        self.edge_incs = np.zeros(g.m, dtype=np.int64)
        self.cap = cfg.iteration_cap(g.m)
        # checkpoint of the epoch holding the best step so far
        self.best_checkpoint: Checkpoint | None = None
        # optional observer ``audit(event, info, lic, cd, w_cut)`` for tests;
        # event is "emit" before each step and "tree" before each flush
        self.audit = None

    def tree_info(self, parent: List[int]) -> TreeInfo:
        key = tuple(parent)
        cache = self.cache
        info = cache.get(key)
        if info is None:
            info = TreeInfo(self.g, parent)
            cache[key] = info
            # bounded both in entries and in stored family slots
            while len(cache) > 1 and (len(cache) > _CACHE_TREES or
                                      sum(_cached_size(x) for x in cache.values()) > _CACHE_SLOTS):
                cache.popitem(last=False)
        else:
            cache.move_to_end(key)
        return info

    def checkpoint(self, log_lam: float, packing: TreePacking | None) -> Checkpoint:
        st = self.stats
        return Checkpoint(st.epochs, st.trees_sampled, self.state.iterations, self.state.t,
                          log_lam, self.ws.logw.copy(),
                          copy.deepcopy(self.rng.bit_generator.state), packing)

    def restore(self, ck: Checkpoint) -> Tuple[float, TreePacking | None]:
        ws, state, st = self.ws, self.state, self.stats
        st.epochs = ck.epochs
        st.trees_sampled = ck.trees_sampled
        state.iterations = ck.iterations
        state.t = ck.t
        ws.logw = ck.logw.copy()
        ws.logw_apx = ck.logw.copy()
        self.rng.bit_generator.state = copy.deepcopy(ck.rng_state)
        return ck.log_lam, ck.packing

    def run(self, start: Checkpoint | None = None) -> None:
        g, cfg, ws, state, stats = self.g, self.cfg, self.ws, self.state, self.stats
        if start is None:
            kappa, _ = global_mincut(g, ws.linear())
            log_lam = math.log(kappa)
            packing: TreePacking | None = None
        else:
            log_lam, packing = self.restore(start)
        eps = cfg.eps
        epoch_cap = math.ceil(100 * math.log(max(g.m, 3)) / eps ** 2) + 100
        while state.t < 1.0:
            if stats.epochs >= epoch_cap:
                raise SolverError("epoch cap exceeded")
            ck = self.checkpoint(log_lam, packing)
            stats.epochs += 1
            stats.log_lambda.append(log_lam)
            ws.set_shift(log_lam)
            # enough for average crossing <= 2.5 on cuts up to (1+eps) lambda;
            # packings see the unshifted weights
            frac = max(0.5, (1.0 + cfg.eps) / 2.5)
            target = frac * math.exp(ws.shift) if cfg.packing_target else None
            fresh = None
            if packing is not None and cfg.reuse_packing:
                fresh = refresh_packing(g, packing, ws, cfg.zeta, target)
            if fresh is None:
                fresh = greedy_tree_packing(g, ws, cfg.zeta, target)
            else:
                stats.packings_reused += 1
            packing = fresh
            stats.packings += 1
            clear = self.clears()
            stale = False
            for parent in sample_trees(packing, self.h, self.rng):
                idx = stats.trees_sampled
                stats.trees_sampled += 1
                if stale:
                    clear = self.clears()
                    stale = False
                if clear:
                    # no cut at all is below the threshold; weights are
                    # unchanged until a tree emits, so neither is any tree cut
                    continue
                before = state.iterations
                if not self.search_tree(idx, parent):
                    break
                stale = state.iterations != before
            if state.best_iteration >= ck.iterations:
                self.best_checkpoint = ck
            log_lam += math.log1p(eps)
        stats.t = state.t
        stats.iterations = state.iterations
        stats.best_iteration = state.best_iteration
        stats.best_ratio = state.best_ratio
        stats.max_edge_increments = int(self.edge_incs.max()) if g.m else 0

    def clears(self) -> bool:
        """True if no cut at all is below the threshold of the epoch.

        Weights are exact between trees, so this rules out every tree cut.
        """
        if not self.cfg.global_screen:
            return False
        self.ws.refresh()
        self.stats.global_screens += 1
        return mincut_at_least(self.g, self.ws.w_arr, (1.0 + self.cfg.eps) * (1.0 + 1e-9))

    def search_tree(self, idx: int, parent: List[int]) -> bool:
        g, ws, state, cfg = self.g, self.ws, self.state, self.cfg
        ws.refresh()
        info = self.tree_info(parent)
        thr = 1.0 + cfg.eps
        if self.prescreen and not info.screen(np.asarray(ws.w), thr):
            return True
        self.stats.trees_searched += 1
        lic: LazyCutWeights | None = None
        cs: CutSearch

        def emit(cd: CutDescriptor, w_cut: float) -> bool:
            nonlocal lic
            if lic is None:
                if info.family is None:
                    info.family = LazyFamily(g, info.tree, self.cap_rank)
                lic = LazyCutWeights(g, info.tree, ws, cfg.eps, self.scale, family=info.family)
            _, gamma = lic.decompose(cd)
            if self.audit is not None:
                self.audit("emit", info, lic, cd, w_cut)
            if self.stop_at is not None and state.iterations == self.stop_at:
                lic.flush()
                raise _Captured(ws.logw.copy())
            if state.iterations >= self.cap:
                raise SolverError("iteration cap exceeded")
            _, frac = state.step((idx, cd), ws.wc_sum / w_cut, gamma)
            out = lic.inc_cut(cd, gamma * frac)
            if out:
                es, dws = zip(*out)
                cs.apply_many(np.array(es, dtype=np.int64), np.array(dws))
            return state.t < 1.0

        cs = CutSearch(g, info, ws, thr, emit, prescreen=self.prescreen)
        cs.process_tree()
        if self.audit is not None:
            self.audit("tree", info, lic, None, None)
        if lic is not None:
            lag = max(lic.pending_log_gain().values(), default=0.0)
            self.stats.max_lag = max(self.stats.max_lag, lag)
            lic.flush()
            self.stats.increments += lic.increments
            for e, k in lic.edge_increments.items():
                self.edge_incs[e] += k
            self.trees[idx] = list(parent)
        return state.t < 1.0

    def dual(self) -> DualSolution:
        g, ws, state = self.g, self.ws, self.state
        gain = ws.logw + np.log(g.cap)
        scale = float(gain.max()) / state.eta * (1.0 + 1e-12)
        entries = []
        used = set()
        for (idx, cd), coef in state.coef.items():
            entries.append((idx, cd.kind, cd.s, cd.t, coef))
            used.add(idx)
        trees = {i: self.trees[i] for i in sorted(used)}
        return DualSolution(entries, trees, state.total, scale, 2.0 * state.total / scale)


def primal_from_logw(g: Graph, logw: np.ndarray, iteration: int = -1, ratio: float = math.nan) -> PrimalSolution:
    lin = np.exp(logw - logw.max())
    value, _ = global_mincut(g, lin)
    y = lin / value
    return PrimalSolution(y.tolist(), float(2.0 * (y @ g.cap)), iteration, ratio)


def run_epochs(g: Graph, cfg: SolverConfig) -> _Run:
    run = _Run(g, cfg)
    run.run()
    return run


def recover_primal(g: Graph, cfg: SolverConfig, i_star: int, ratio: float = math.nan,
                   start: Checkpoint | None = None) -> PrimalSolution:
    """Replay the seeded run up to step ``i_star`` and scale its weights.

    With ``start`` the replay begins at that epoch checkpoint instead of
    the beginning; the run is deterministic, so the result is the same.
    """
    run = _Run(g, cfg, stop_at=i_star)
    try:
        run.run(start)
    except _Captured as cap:
        return primal_from_logw(g, cap.logw, i_star, ratio)
    raise SolverError(f"replay ended before step {i_star}; the run is not deterministic")


def held_karp_bound(g: Graph, cfg: SolverConfig) -> Tuple[DualSolution, PrimalSolution, RunStats]:
    run = run_epochs(g, cfg)
    dual = run.dual()
    primal = recover_primal(g, cfg, run.stats.best_iteration, run.stats.best_ratio,
                            start=run.best_checkpoint)
    return dual, primal, run.stats
