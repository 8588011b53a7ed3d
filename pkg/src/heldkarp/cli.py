"""Command-line front end: ``solve``, ``verify`` and ``oracle``.

Exit codes: 0 when the certificate passes, 1 when it still fails after
the seed retries (or a record does not reproduce), 2 on input errors.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from typing import Optional, Sequence, Tuple

from . import __version__
from .certify import EXPLICIT_MAX_M, Certificate, verify
from .graph import Graph, GraphFormatError, parse_graph
from .mincut import MAX_ENUMERATE_N, cut_table, global_mincut
from .solver import DualSolution, PrimalSolution, RunStats, SolverConfig, SolverError, held_karp_bound

EXIT_OK = 0
EXIT_CERT = 1
EXIT_INPUT = 2


class InputError(Exception):
    pass


def _load(path: str) -> Tuple[Graph, str]:
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None
    try:
        g = parse_graph(raw.decode("utf-8"))
    except UnicodeDecodeError:
        raise InputError(f"{path}: not UTF-8 text") from None
    except GraphFormatError as exc:
        raise InputError(f"{path}: {exc}") from None
    return g, hashlib.sha256(raw).hexdigest()


def build_record(input_hash: str, cfg: SolverConfig, dual: DualSolution, primal: PrimalSolution,
                 stats: RunStats, cert: Certificate, g: Graph, attempts: int) -> dict:
    """Deterministic summary of one solve (no wall-clock fields)."""
    return {
        "input_hash": input_hash,
        "n": g.n,
        "m": g.m,
        "config": cfg.as_dict(),
        "seed": cfg.seed,
        "attempts": attempts,
        "dual_value": dual.value,
        "primal_cost": primal.cost,
        "gap": cert.gap_ratio,
        "certificate": cert.as_dict(),
        "stats": {
            "iterations": stats.iterations,
            "epochs": stats.epochs,
            "trees_sampled": stats.trees_sampled,
            "trees_searched": stats.trees_searched,
            "increments": stats.increments,
            "max_edge_increments": stats.max_edge_increments,
            "packings": stats.packings,
            "packings_reused": stats.packings_reused,
            "best_iteration": stats.best_iteration,
            "best_ratio": stats.best_ratio,
            "max_lag": stats.max_lag,
            "dual_entries": len(dual.entries),
        },
        "constants": stats.constants(g.n, g.m, cfg.eps),
        "lambda": [math.exp(x) for x in stats.log_lambda],
    }


def solve_graph(g: Graph, input_hash: str, cfg: SolverConfig, mode: str = "fast",
                retries: int = 3) -> Tuple[int, dict, PrimalSolution]:
    """Solve with up to ``retries`` fresh seeds.  Returns (exit code, record, primal)."""
    base = cfg.seed
    for attempt in range(retries + 1):
        cur = SolverConfig(**{**cfg.__dict__, "seed": base + attempt})
        dual, primal, stats = held_karp_bound(g, cur)
        cert = verify(g, dual, primal, cur.eps, mode=mode, c_tot=cur.c_tot)
        rec = build_record(input_hash, cur, dual, primal, stats, cert, g, attempt + 1)
        if cert.passed:
            return EXIT_OK, rec, primal
    return EXIT_CERT, rec, primal


def _config(args) -> SolverConfig:
    cfg = SolverConfig(eps=args.epsilon, seed=args.seed, zeta=args.zeta, tree_const=args.tree_const)
    try:
        cfg.validate()
    except ValueError as exc:
        raise InputError(str(exc)) from None
    return cfg


def _solve_one(path: str, cfg: SolverConfig, mode: str, retries: int) -> Tuple[int, Optional[dict], list, str]:
    """Worker for one input file; returns (code, record, primal y, report text)."""
    try:
        g, digest = _load(path)
        if mode == "explicit" and g.m > EXPLICIT_MAX_M:
            raise InputError(f"{path}: explicit verification needs m <= {EXPLICIT_MAX_M}")
    except InputError as exc:
        return EXIT_INPUT, None, [], f"error: {exc}"
    t0 = time.perf_counter()
    try:
        code, rec, primal = solve_graph(g, digest, cfg, mode, retries)
    except SolverError as exc:
        return EXIT_CERT, None, [], f"error: {path}: {exc}"
    wall = time.perf_counter() - t0
    cert = rec["certificate"]
    lines = [
        f"instance     {path}",
        f"vertices     {g.n}",
        f"edges        {g.m}",
        f"dual         {rec['dual_value']:.10g}",
        f"primal       {rec['primal_cost']:.10g}",
        f"gap          {rec['gap']:.6f}",
        f"iterations   {rec['stats']['iterations']}",
        f"epochs       {rec['stats']['epochs']}",
        f"seed         {rec['seed']} (attempt {rec['attempts']})",
        f"wall_time    {wall:.3f}s",
        f"certificate  {'pass' if cert['passed'] else 'FAIL'} ({mode})",
    ]
    return code, rec, primal.y, "\n".join(lines)


def _write_json(path: str, doc) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_solve(args) -> int:
    try:
        cfg = _config(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    paths = args.inputs
    if args.emit_primal and len(paths) > 1:
        print("error: --emit-primal takes a single input", file=sys.stderr)
        return EXIT_INPUT
    jobs = [(p, cfg, args.verify, args.retries) for p in paths]
    if args.jobs > 1 and len(paths) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            results = list(ex.map(_solve_one, *zip(*jobs)))
    else:
        results = [_solve_one(*j) for j in jobs]
    code = EXIT_OK
    records = []
    for rc, rec, y, text in results:
        print(text, file=sys.stderr if rec is None else sys.stdout)
        code = max(code, rc)
        if rec is not None:
            records.append(rec)
    if args.record and records:
        _write_json(args.record, records[0] if len(paths) == 1 else records)
    if args.emit_primal and results[0][1] is not None:
        with open(args.emit_primal, "w", encoding="utf-8") as fh:
            fh.writelines(f"{v!r}\n" for v in results[0][2])
    return code


def cmd_verify(args) -> int:
    """Re-run a recorded solve and check that it reproduces and certifies."""
    try:
        g, digest = _load(args.input)
        with open(args.record, encoding="utf-8") as fh:
            rec = json.load(fh)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (OSError, ValueError) as exc:
        print(f"error: {args.record}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if not isinstance(rec, dict) or rec.get("input_hash") != digest:
        print("error: record does not belong to this input", file=sys.stderr)
        return EXIT_INPUT
    c = rec["config"]
    cfg = SolverConfig(eps=c["eps"], seed=c["seed"], zeta=c["zeta"], tree_const=c["tree_const"], c_tot=c["c_tot"])
    mode = args.mode
    if mode == "explicit" and g.m > EXPLICIT_MAX_M:
        print(f"error: explicit verification needs m <= {EXPLICIT_MAX_M}", file=sys.stderr)
        return EXIT_INPUT
    dual, primal, stats = held_karp_bound(g, cfg)
    cert = verify(g, dual, primal, cfg.eps, mode=mode, c_tot=cfg.c_tot)
    again = build_record(digest, cfg, dual, primal, stats, cert, g, rec.get("attempts", 1))
    # the certificate may differ only through the mode
    same = all(again[k] == rec.get(k) for k in again if k != "certificate")
    print(f"reproduced   {'yes' if same else 'NO'}")
    print(f"gap          {cert.gap_ratio:.6f}")
    if cert.dual_max_overload is not None:
        print(f"overload     {cert.dual_max_overload:.12g}")
    print(f"primal_cut   {cert.primal_mincut:.12g}")
    print(f"certificate  {'pass' if cert.passed else 'FAIL'} ({mode})")
    return EXIT_OK if same and cert.passed else EXIT_CERT


def cmd_oracle(args) -> int:
    try:
        g, _ = _load(args.input)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if args.enumerate and g.n > MAX_ENUMERATE_N:
        print(f"error: enumeration needs n <= {MAX_ENUMERATE_N}", file=sys.stderr)
        return EXIT_INPUT
    value, side = global_mincut(g)
    shore = [v + 1 for v in range(g.n) if side[v]]
    print(f"mincut {value!r}")
    print("side " + " ".join(map(str, shore)))
    if args.enumerate:
        # shores never contain the last vertex, as in enumerate_cuts
        masks, vals = cut_table(g)
        out = sys.stdout
        for mask, val in zip(masks.tolist(), vals.tolist()):
            verts = " ".join(str(i + 1) for i in range(g.n - 1) if mask >> i & 1)
            out.write(f"cut {verts} {val!r}\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="heldkarp", description="Approximate Held-Karp bounds with certificates.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("solve", help="approximate the Held-Karp bound of graph files")
    sp.add_argument("inputs", nargs="+")
    sp.add_argument("--epsilon", type=float, default=0.1)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--zeta", type=float, default=0.1)
    sp.add_argument("--tree-const", type=float, default=3.0)
    sp.add_argument("--verify", choices=("fast", "explicit"), default="fast")
    sp.add_argument("--emit-primal", metavar="PATH")
    sp.add_argument("--record", metavar="PATH")
    sp.add_argument("--retries", type=int, default=3)
    sp.add_argument("--jobs", type=int, default=1)
    sp.set_defaults(func=cmd_solve)

    vp = sub.add_parser("verify", help="re-run a recorded solve and re-check its certificate")
    vp.add_argument("input")
    vp.add_argument("record")
    vp.add_argument("--mode", choices=("fast", "explicit"), default="fast")
    vp.set_defaults(func=cmd_verify)

    op = sub.add_parser("oracle", help="exact minimum cut, optionally all cuts")
    op.add_argument("input")
    op.add_argument("--enumerate", action="store_true")
    op.set_defaults(func=cmd_oracle)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "retries", 0) < 0 or getattr(args, "jobs", 1) < 1:
        print("error: --retries must be >= 0 and --jobs >= 1", file=sys.stderr)
        return EXIT_INPUT
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
