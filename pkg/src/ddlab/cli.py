"""Command-line front end: single-cell reports and parameter sweeps.

Every subcommand builds a map from --b/--c (or --h-file), runs one analysis
pipeline, and writes a JSON or CSV report.  Reports are byte-reproducible:
keys are sorted, floats go through repr, and sweep cells are seeded by
hashing their own coordinates so the worker count never shows in the output.

Exit codes: 0 on success, 1 on usage errors, 2 on numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import errors, geometry, renorm
from .dissipation import entropy_estimate, gamma_dissipation_check, pesin_constants
from .manifolds import (build_chain_graph, curves_to_csv, decoration_test,
                        grow_stable, grow_unstable)
from .maps import Extension1DMap, HenonMap, PlaneMap, SampledEndomorphism
from .orbits import find_periodic, henon_fixed_points, orbits_to_csv

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERIC = 2


# ---------------------------------------------------------------------------
# argument plumbing


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems via exception, not SystemExit."""

    def error(self, message):
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="ddlab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="subcommand")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--b", type=float, default=None, help="Jacobian parameter")
    common.add_argument("--c", type=float, default=None, help="quadratic parameter")
    common.add_argument("--h-file", type=str, default=None,
                        help="breakpoint file (x h hp per line) for a 1d extension map")
    common.add_argument("--max-period", type=int, default=8)
    common.add_argument("--grid", type=int, default=24, help="census grid per axis")
    common.add_argument("--out", type=str, default=None, help="output path (default stdout)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol-newton", type=float, default=1e-12)
    common.add_argument("--epsilon-accumulate", type=float, default=1e-3)
    fm = common.add_mutually_exclusive_group()
    fm.add_argument("--json", dest="fmt", action="store_const", const="json")
    fm.add_argument("--csv", dest="fmt", action="store_const", const="csv")
    names = ["fixed", "orbits", "manifolds", "trap", "pixton", "cascade",
             "entropy", "dissipation", "decorate", "chains", "quadritomie",
             "sweep", "odometer"]
    for name in names:
        p = sub.add_parser(name, parents=[common])
        if name == "sweep":
            p.add_argument("--c-from", type=float, required=True)
            p.add_argument("--c-to", type=float, required=True)
            p.add_argument("--c-step", type=float, required=True)
    return parser


def _require(args, *fields):
    for f in fields:
        if getattr(args, f, None) is None:
            raise _UsageError(f"--{f.replace('_', '-')} is required for this subcommand")


def _build_map(args) -> PlaneMap:
    if args.h_file is not None:
        _require(args, "b")
        h = SampledEndomorphism.from_file(args.h_file)
        return Extension1DMap(h, args.b)
    _require(args, "b", "c")
    return HenonMap(args.b, args.c)


def _cell_seed(b: float, c: float, seed: int) -> int:
    """Order-independent per-cell seed hashed from the cell coordinates."""
    key = f"{b:.17g}|{c:.17g}|{seed}".encode()
    return int.from_bytes(hashlib.sha256(key).digest()[:8], "big")


def _json_safe(obj):
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _json_safe(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if hasattr(obj, "to_dict"):
        return _json_safe(obj.to_dict())
    return obj


def _emit(args, payload, text: str | None = None) -> None:
    """Write the report: JSON by default, preformatted text for --csv."""
    if text is None:
        text = json.dumps(_json_safe(payload), sort_keys=True, indent=2) + "\n"
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _orbit_dict(rec) -> dict:
    return {
        "period": rec.period,
        "type": rec.type.name,
        "index": rec.index,
        "warning": bool(rec.warning),
        "multipliers": [[m.real, m.imag] for m in rec.multipliers],
        "points": [[float(x), float(y)] for x, y in rec.points],
    }


# ---------------------------------------------------------------------------
# subcommands


def _cmd_fixed(args) -> None:
    _require(args, "b", "c")
    recs = henon_fixed_points(args.b, args.c)
    _emit(args, {"b": args.b, "c": args.c,
                 "fixed_points": [_orbit_dict(r) for r in recs]})


def _cmd_orbits(args) -> None:
    f = _build_map(args)
    recs = find_periodic(f, args.max_period, grid=args.grid)
    if args.fmt == "csv":
        _emit(args, None, text=orbits_to_csv(recs))
        return
    _emit(args, {"b": args.b, "c": args.c, "max_period": args.max_period,
                 "grid": args.grid, "orbits": [_orbit_dict(r) for r in recs]})


def _grow_saddle_curves(f, max_period, grid):
    recs = find_periodic(f, max_period, grid=grid)
    curves = []
    for rec in recs:
        if not rec.is_saddle:
            continue
        for sign in (-1, 1):
            for kind, grower, length in (("unstable", grow_unstable, 20.0),
                                         ("stable", grow_stable, 10.0)):
                try:
                    curves.append(grower(f, rec, sign, target_length=length,
                                         allow_escape=True))
                except errors.DdlabError:
                    continue
    return recs, curves


def _cmd_manifolds(args) -> None:
    f = _build_map(args)
    recs, curves = _grow_saddle_curves(f, args.max_period, args.grid)
    if not curves:
        raise errors.CannotCertify("no saddle branch could be grown")
    if args.fmt == "csv":
        _emit(args, None, text=curves_to_csv(curves))
        return
    _emit(args, {"b": args.b, "c": args.c, "curves": [
        {"kind": cur.kind, "branch": cur.branch_sign,
         "base_period": cur.base_orbit.period,
         "arc_length": float(cur.arc_length),
         "escaped": bool(cur.escaped),
         "n_vertices": int(len(cur.polyline.vertices))}
        for cur in curves]})


def _cmd_trap(args) -> None:
    f = _build_map(args)
    cert, _ = renorm.root_trap(f, max_period=args.max_period, grid=args.grid)
    _emit(args, {"b": args.b, "c": args.c, "certificate": cert.to_dict()})


def _cmd_pixton(args) -> None:
    f = _build_map(args)
    recs = find_periodic(f, 1, grid=args.grid)
    saddles = sorted([r for r in recs if r.is_saddle],
                     key=lambda r: -r.points[0, 0])
    if not saddles:
        raise errors.NoAccumulationPoint("no saddle fixed point")
    last = None
    for rec in saddles:
        for us in (-1, 1):
            for ss in (-1, 1):
                try:
                    un = grow_unstable(f, rec, us, target_length=40.0,
                                       allow_escape=True)
                    st = grow_stable(f, rec, ss, target_length=10.0,
                                     allow_escape=True)
                    disc = renorm.assemble_pixton_disc(
                        un, st, eps=args.epsilon_accumulate, map=f)
                except errors.DdlabError as exc:
                    last = exc
                    continue
                v = disc.vertices
                stride = max(1, len(v) // 1024)
                _emit(args, {"b": args.b, "c": args.c,
                             "eps": args.epsilon_accumulate,
                             "saddle": [float(rec.points[0, 0]),
                                        float(rec.points[0, 1])],
                             "branches": [us, ss],
                             "n_vertices": int(len(v)),
                             "area": float(disc.shapely.area),
                             "vertices": v[::stride]})
                return
    raise last if last is not None else errors.NoAccumulationPoint(
        "no branch pairing admits a closing segment")


def _cmd_cascade(args) -> None:
    f = _build_map(args)
    cert, _ = renorm.root_trap(f, max_period=min(args.max_period, 8),
                               grid=args.grid)
    tree = renorm.cascade(f, cert, max_period=args.max_period,
                          grid=min(args.grid, 20))
    periods = sorted({n["period_abs"] for n in _walk_tree(tree.to_dict())}
                     | {o.period * n.absolute_period
                        for n in _walk_nodes(tree) for o in n.orbits})
    summary = renorm.period_set_summary(periods)
    _emit(args, {"b": args.b, "c": args.c, "max_period": args.max_period,
                 "depth": tree.depth(), "tree": tree.to_dict(),
                 "period_set": summary.to_dict()})


def _walk_tree(d):
    yield d
    for ch in d["children"]:
        yield from _walk_tree(ch)


def _walk_nodes(node):
    yield node
    for ch in node.children:
        yield from _walk_nodes(ch)


def _seed_curve(f, grid):
    recs = find_periodic(f, 1, grid=grid)
    for rec in sorted([r for r in recs if r.is_saddle],
                      key=lambda r: -r.points[0, 0]):
        for sign in (-1, 1):
            try:
                return grow_unstable(f, rec, sign, target_length=30.0,
                                     allow_escape=True)
            except errors.DdlabError:
                continue
    raise errors.CannotCertify("no saddle branch to seed the estimator")


def _cmd_entropy(args) -> None:
    f = _build_map(args)
    cur = _seed_curve(f, args.grid)
    est = entropy_estimate(f, cur, n=16)
    _emit(args, {"b": args.b, "c": args.c, "value": est.value,
                 "method": est.method, "n_used": est.n_used,
                 "eps_used": est.eps_used})


def _bounded_sample(f, args) -> np.ndarray:
    """A bounded forward-orbit tail to serve as the sampled invariant set."""
    recs = henon_fixed_points(args.b, args.c) if f.kind == "henon" else \
        find_periodic(f, 1, grid=args.grid)
    rng = np.random.default_rng(_cell_seed(args.b, args.c or 0.0, args.seed))
    for rec in recs:
        z = rec.points[0] + 1e-3 * rng.standard_normal(2)
        tail = []
        ok = True
        for i in range(1200):
            z = f.evaluate(z)
            if not np.isfinite(z).all() or abs(z[0]) > 1e8:
                ok = False
                break
            if i >= 1000:
                tail.append(z.copy())
        if ok:
            return np.array(tail)
    raise errors.CannotCertify("every probe orbit escapes")


def _cmd_dissipation(args) -> None:
    f = _build_map(args)
    K = _bounded_sample(f, args)
    holds, n = gamma_dissipation_check(f, K, gamma=0.5)
    pes = pesin_constants(f, K, alpha=0.5, gamma=0.5)
    _emit(args, {"b": args.b, "c": args.c, "gamma": 0.5,
                 "holds": bool(holds), "n_witness": n,
                 "n_sample": int(len(K)), "pesin": pes.to_dict()})


def _cmd_decorate(args) -> None:
    f = _build_map(args)
    try:
        cert, recs = renorm.root_trap(f, max_period=args.max_period,
                                      grid=args.grid)
        disc = cert.disc
    except errors.CannotCertify:
        dom = renorm.reduction_domain(args.b, args.c)
        disc = dom.union_polygon()
        recs = find_periodic(f, args.max_period, grid=args.grid)
    targets = sorted([r for r in recs if not r.is_sink],
                     key=lambda r: (r.period, r.points[0, 0]))
    if not targets:
        raise errors.CannotCertify("no non-sink orbit to decorate")
    rec = targets[0]
    verdict = decoration_test(f, rec, disc)
    _emit(args, {"b": args.b, "c": args.c, "orbit_period": rec.period,
                 "decorated": verdict.decorated,
                 "stabilized": verdict.stabilized,
                 "stabilizing_fixed_point": verdict.stabilizing_fixed_point})


def _cmd_chains(args) -> None:
    f = _build_map(args)
    recs = find_periodic(f, args.max_period, grid=args.grid)
    graph = build_chain_graph(f, recs, eps=args.epsilon_accumulate)
    _emit(args, {"b": args.b, "c": args.c,
                 "eps": graph.eps,
                 "orbits": [_orbit_dict(r) for r in recs],
                 "nodes": graph.nodes,
                 "edges": [list(e) for e in graph.edges],
                 "cycles": graph.cycles,
                 "dot": graph.to_dot()})


def _cmd_quadritomie(args) -> None:
    _require(args, "b", "c")
    verdict = renorm.quadritomie(args.b, args.c)
    _emit(args, verdict.to_dict())


def _cmd_odometer(args) -> None:
    f = _build_map(args)
    cert, _ = renorm.root_trap(f, max_period=min(args.max_period, 8),
                               grid=args.grid)
    tree = renorm.cascade(f, cert, max_period=args.max_period,
                          grid=min(args.grid, 20))
    node = tree
    while node.children:
        node = node.children[0]
    z = node.certificate.disc.vertices.mean(axis=0)
    for _ in range(2000):                     # settle onto the attractor
        z = f.evaluate(z)
    record = renorm.odometer_itinerary(f, tree, z, steps=512)
    record.pop("orbit", None)
    _emit(args, {"b": args.b, "c": args.c, "probe": [float(z[0]), float(z[1])],
                 **record})


# ---------------------------------------------------------------------------
# sweep


SWEEP_COLUMNS = ["b", "c", "seed", "case", "attractor_period",
                 "entropy", "cascade_depth", "error"]


def _sweep_cell(b: float, c: float, seed: int) -> dict:
    row = {"b": repr(b), "c": repr(c), "seed": str(_cell_seed(b, c, seed)),
           "case": "", "attractor_period": "", "entropy": "",
           "cascade_depth": "", "error": ""}
    try:
        verdict = renorm.quadritomie(b, c, fast=True)
        row["case"] = verdict.case
        period = verdict.evidence.get("attractor_period", "")
        if verdict.case == "UnboundedInvariantCurve":
            period = 1               # the branch graph ends at a fixed sink
        row["attractor_period"] = str(period)
        lam = verdict.evidence.get("lyapunov")
        if lam is None and period not in ("", 0) and verdict.case in (
                "TrappedDisc", "UnboundedInvariantCurve"):
            lam = 0.0                # attracting periodic regime
        if verdict.case == "HomoclinicPositiveEntropy" and lam is None:
            f = HenonMap(b, c)
            fx = henon_fixed_points(b, c)
            q = max(fx, key=lambda r: r.points[0, 0])
            try:
                cur = grow_unstable(f, q, -1, target_length=30.0,
                                    allow_escape=True)
                est = entropy_estimate(f, cur, n=12)
                lam = est.value
            except errors.DdlabError:
                lam = ""
        row["entropy"] = repr(max(0.0, lam)) if isinstance(lam, float) else ""
        # doubling depth proxy: each certified level halves the return period
        if isinstance(period, int) and period >= 1 and \
                period & (period - 1) == 0:
            row["cascade_depth"] = str(period.bit_length())
    except errors.DdlabError as exc:
        row["case"] = "Error"
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def _cmd_sweep(args) -> None:
    _require(args, "b")
    if args.c_step <= 0:
        raise _UsageError("--c-step must be positive")
    n = int(math.floor((args.c_to - args.c_from) / args.c_step + 1e-9)) + 1
    if n < 1:
        raise _UsageError("empty sweep range")
    cs = [args.c_from + i * args.c_step for i in range(n)]
    workers = max(1, int(os.environ.get("DDLAB_THREADS", "1")))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        rows = list(pool.map(lambda c: _sweep_cell(args.b, c, args.seed), cs))
    rows.sort(key=lambda r: float(r["c"]))     # order-independent output
    if args.fmt == "json":
        _emit(args, {"b": args.b, "columns": SWEEP_COLUMNS, "cells": rows})
        return
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=SWEEP_COLUMNS, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    _emit(args, None, text=buf.getvalue())


_COMMANDS = {
    "fixed": _cmd_fixed, "orbits": _cmd_orbits, "manifolds": _cmd_manifolds,
    "trap": _cmd_trap, "pixton": _cmd_pixton, "cascade": _cmd_cascade,
    "entropy": _cmd_entropy, "dissipation": _cmd_dissipation,
    "decorate": _cmd_decorate, "chains": _cmd_chains,
    "quadritomie": _cmd_quadritomie, "sweep": _cmd_sweep,
    "odometer": _cmd_odometer,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise _UsageError("a subcommand is required")
    except _UsageError as exc:
        print(f"ddlab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    warnings.filterwarnings("ignore", category=RuntimeWarning)
    try:
        with np.errstate(over="ignore", invalid="ignore"):
            _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(f"ddlab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except errors.DdlabError as exc:
        print(f"ddlab: numerical failure: {type(exc).__name__}: {exc}",
              file=sys.stderr)
        return EXIT_NUMERIC
    except (FileNotFoundError, ValueError) as exc:
        print(f"ddlab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
