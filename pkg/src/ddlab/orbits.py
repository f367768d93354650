"""Detection, refinement and classification of periodic orbits.

Periodic points of period n are zeros of F(p) = f^n(p) - p, found by damped
Newton from a grid of seeds, deduplicated up to cyclic shift and reduced to
their minimal period.  Types and indices follow the planar fixed-point
taxonomy: sink / saddle with or without reflexion / saddle-node, with index
+1 / +1 / -1 / 0 respectively.
"""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass, field

import numpy as np

from . import geometry
from .errors import InvalidSample
from .maps import HenonMap, PlaneMap, Rectangle, orbit_differential

NEWTON_TOL = 1e-12
NEWTON_MAX_ITER = 60
RESIDUAL_TOL = 1e-10
DEDUP_TOL = 1e-6
SADDLE_NODE_TOL = 1e-6


class OrbitType(enum.Enum):
    SINK = "Sink"
    SADDLE_NO_REFLEXION = "SaddleNoReflexion"
    SADDLE_WITH_REFLEXION = "SaddleWithReflexion"
    SADDLE_NODE = "SaddleNode"
    INDIFFERENT_FOCUS = "IndifferentFocus"  # folded into SINK by classify


@dataclass
class OrbitRecord:
    points: np.ndarray          # (n, 2), f(points[i]) = points[i+1 mod n]
    period: int                 # minimal
    multipliers: tuple[complex, complex]  # |lambda-| <= |lambda+|
    type: OrbitType
    index: int
    warning: bool = False       # multiplier within tol of +-1 but not a declared saddle-node

    @property
    def is_saddle(self) -> bool:
        return self.type in (OrbitType.SADDLE_NO_REFLEXION, OrbitType.SADDLE_WITH_REFLEXION)

    @property
    def is_sink(self) -> bool:
        return self.type == OrbitType.SINK


@dataclass
class LefschetzReport:
    orbit_ids: list[int]
    sum_of_indices: int
    region: geometry.Polygon
    warning: bool = False


@dataclass
class CensusDiagnostics:
    seeds: int = 0
    converged: int = 0
    diverged: int = 0


def classify(map: PlaneMap, points: np.ndarray, tol: float = SADDLE_NODE_TOL) -> OrbitRecord:
    """Classify a numerically periodic cycle by the multipliers of Df^n."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    n = len(points)
    jac = orbit_differential(map, points)
    eig = np.linalg.eigvals(jac)
    eig = eig[np.argsort(np.abs(eig))]
    lam_minus, lam_plus = complex(eig[0]), complex(eig[1])
    warning = False
    if abs(lam_plus.imag) > 1e-12:
        # complex pair; dissipation forces |lambda| = sqrt(|b|^n) < 1
        otype, index = OrbitType.SINK, 1
    else:
        lp = lam_plus.real
        if lp <= -1.0:
            otype, index = OrbitType.SADDLE_WITH_REFLEXION, 1
        elif abs(lp - 1.0) <= tol:
            otype, index = OrbitType.SADDLE_NODE, 0
        elif abs(lp) < 1.0:
            otype, index = OrbitType.SINK, 1
            if abs(lp + 1.0) <= tol:
                warning = True
        else:
            otype, index = OrbitType.SADDLE_NO_REFLEXION, -1
            if abs(lp - 1.0) <= 10 * tol:
                warning = True
    return OrbitRecord(points=points, period=n, multipliers=(lam_minus, lam_plus),
                       type=otype, index=index, warning=warning)


def henon_fixed_points(b: float, c: float) -> list[OrbitRecord]:
    """Closed-form fixed points of the Henon map from x^2 + c - (1+b)x = 0."""
    if not abs(b) < 1:
        raise ValueError("|b| < 1 required")
    half = (1.0 + b) / 2.0
    disc = half * half - c
    if disc < 0:
        return []
    map = HenonMap(b, c)
    xs = [half + np.sqrt(disc)] if disc == 0 else [half - np.sqrt(disc), half + np.sqrt(disc)]
    return [classify(map, np.array([[x, -b * x]])) for x in xs]


def _newton_batch(map: PlaneMap, seeds: np.ndarray, n: int,
                  tol: float = NEWTON_TOL, max_iter: int = NEWTON_MAX_ITER):
    """Damped Newton on f^n - id for a batch of seeds; returns points + converged mask."""
    pts = np.array(seeds, dtype=float)
    m = len(pts)
    active = np.ones(m, dtype=bool)
    eye = np.eye(2)

    def f_and_jac(p):
        jac = np.broadcast_to(eye, (len(p), 2, 2)).copy()
        q = p.copy()
        with np.errstate(over="ignore", invalid="ignore"):
            for _ in range(n):
                jac = map.differential_many(q) @ jac
                q = map.evaluate_many(q)
        return q - p, jac - eye

    def resid_norm(p):
        with np.errstate(over="ignore", invalid="ignore"):
            q = p.copy()
            for _ in range(n):
                q = map.evaluate_many(q)
        r = q - p
        r = np.where(np.isfinite(r), r, np.inf)
        return np.max(np.abs(r), axis=1)

    for _ in range(max_iter):
        if not active.any():
            break
        idx = np.flatnonzero(active)
        fvals, jacs = f_and_jac(pts[idx])
        bad = ~np.isfinite(fvals).all(axis=1) | ~np.isfinite(jacs).all(axis=(1, 2))
        det = jacs[:, 0, 0] * jacs[:, 1, 1] - jacs[:, 0, 1] * jacs[:, 1, 0]
        bad |= np.abs(det) < 1e-300
        active[idx[bad]] = False
        good = ~bad
        if not good.any():
            break
        gi = idx[good]
        j = jacs[good]
        fv = fvals[good]
        inv = np.empty_like(j)
        d = det[good]
        inv[:, 0, 0] = j[:, 1, 1] / d
        inv[:, 0, 1] = -j[:, 0, 1] / d
        inv[:, 1, 0] = -j[:, 1, 0] / d
        inv[:, 1, 1] = j[:, 0, 0] / d
        step = -(inv @ fv[:, :, None])[:, :, 0]
        old_res = np.max(np.abs(fv), axis=1)
        scale = np.ones(len(gi))
        new_pts = pts[gi] + step
        # damping: halve the step while the residual increases
        for _ in range(6):
            new_res = resid_norm(new_pts)
            worse = new_res > old_res
            if not worse.any():
                break
            scale[worse] *= 0.5
            new_pts[worse] = pts[gi[worse]] + scale[worse, None] * step[worse]
        moved = np.max(np.abs(new_pts - pts[gi]), axis=1)
        pts[gi] = new_pts
        done = moved < tol
        active[gi[done]] = False

    res = resid_norm(pts)
    converged = np.isfinite(pts).all(axis=1) & (res < RESIDUAL_TOL)
    return pts, converged


def refine_periodic(map: PlaneMap, point, n: int, extra_steps: int = 20):
    """A few more Newton steps from an already-converged root."""
    pts, conv = _newton_batch(map, np.asarray(point, dtype=float)[None, :], n,
                              max_iter=extra_steps)
    return pts[0], bool(conv[0])


def _orbit_of(map: PlaneMap, p: np.ndarray, n: int) -> np.ndarray:
    out = np.empty((n, 2))
    out[0] = p
    for i in range(1, n):
        out[i] = map.evaluate(out[i - 1])
    return out


def _same_orbit(points: np.ndarray, rec: OrbitRecord, tol: float = DEDUP_TOL) -> bool:
    # sup-norm distance of the whole cycle under the best cyclic shift
    if len(points) != rec.period:
        return False
    a, b_ = points, rec.points
    for s in range(len(b_)):
        if np.max(np.abs(a - np.roll(b_, -s, axis=0))) < tol:
            return True
    return False


def divisors(n: int) -> list[int]:
    return [d for d in range(1, n) if n % d == 0]


def find_periodic(map: PlaneMap, max_period: int, grid: int = 24,
                  domain: Rectangle | None = None,
                  diagnostics: CensusDiagnostics | None = None) -> list[OrbitRecord]:
    """Grid-seeded Newton census of periodic orbits up to max_period.

    Converged roots are deduplicated by orbit, assigned their minimal period
    and classified.  Roots fixed by a proper divisor iterate are rejected at
    the larger period (they are already reported at the divisor).
    """
    if max_period < 1:
        raise ValueError("max_period >= 1 required")
    if domain is None:
        domain = _census_domain(map)
    seeds = domain.grid(grid, grid)
    records: list[OrbitRecord] = []
    diag = diagnostics if diagnostics is not None else CensusDiagnostics()
    for n in range(1, max_period + 1):
        pts, conv = _newton_batch(map, seeds, n)
        diag.seeds += len(seeds)
        diag.converged += int(conv.sum())
        diag.diverged += int((~conv).sum())
        cand = pts[conv]
        if len(cand) == 0:
            continue
        # deduplicate raw roots first to keep the divisor checks cheap
        uniq: list[np.ndarray] = []
        for p in cand:
            if not domain.contains(p, tol=1e-6):
                continue
            if any(np.max(np.abs(p - q)) < DEDUP_TOL for q in uniq):
                continue
            uniq.append(p)
        for p in uniq:
            # minimal period: reject if fixed by a proper divisor iterate
            minimal = True
            q = p.copy()
            for k in range(1, n):
                q = map.evaluate(q)
                if n % k == 0 and np.max(np.abs(q - p)) < 1e-8:
                    minimal = False
                    break
            if not minimal:
                continue
            orbit = _orbit_of(map, p, n)
            if any(_same_orbit(orbit, r) for r in records if r.period == n):
                continue
            records.append(classify(map, orbit))
    records.sort(key=lambda r: (r.period, r.points[0, 0], r.points[0, 1]))
    return records


def _census_domain(map: PlaneMap) -> Rectangle:
    if isinstance(map, HenonMap):
        # bounded orbits live in the square part of the reduction rectangle
        r = max(2.0, (1 + abs(map.b)) / 2 + np.sqrt(max((1 + abs(map.b)) ** 2 / 4 + abs(map.c), 0.0)) + 0.5)
        s = max(np.sqrt(abs(map.b)) * r, 0.2)
        return Rectangle(-r, r, -s, s)
    return map.domain


def lefschetz_sum(orbits: list[OrbitRecord], region: geometry.Polygon) -> LefschetzReport:
    """Sum of fixed-point indices over period-1 records inside the region."""
    ids = []
    total = 0
    warning = False
    for i, rec in enumerate(orbits):
        if rec.period != 1:
            continue
        if geometry.contains(region, rec.points[0]):
            ids.append(i)
            total += rec.index
            lp = rec.multipliers[1]
            if abs(lp.imag) < 1e-12 and rec.type != OrbitType.SADDLE_NODE:
                if min(abs(lp.real - 1.0), abs(lp.real + 1.0)) <= SADDLE_NODE_TOL:
                    warning = True
    return LefschetzReport(orbit_ids=ids, sum_of_indices=total, region=region,
                           warning=warning)


def closing_scan(map: PlaneMap, sample, radius: float,
                 max_return: int = 64) -> list[OrbitRecord]:
    """Launch Newton at approximate recurrence times of a long orbit.

    For every recurrence ||f^n(x) - x|| < radius along the sample, Newton on
    f^n - id is started from x; converged periodic orbits are returned.
    """
    if getattr(sample, "escaped", False):
        raise InvalidSample("closing scan requires a non-escaping sample")
    pts = np.asarray(sample.points, dtype=float)
    found: list[OrbitRecord] = []
    seeds_by_n: dict[int, list[np.ndarray]] = {}
    m = len(pts)
    for n in range(1, min(max_return, m - 1) + 1):
        d = np.max(np.abs(pts[n:] - pts[:-n]), axis=1)
        hits = np.flatnonzero(d < radius)
        if len(hits):
            # a handful of seeds per return time is enough
            for t in hits[:: max(1, len(hits) // 8)][:8]:
                seeds_by_n.setdefault(n, []).append(pts[t])
    for n, seeds in sorted(seeds_by_n.items()):
        roots, conv = _newton_batch(map, np.array(seeds), n)
        for p in roots[conv]:
            minimal = True
            q = p.copy()
            for k in range(1, n):
                q = map.evaluate(q)
                if n % k == 0 and np.max(np.abs(q - p)) < 1e-8:
                    minimal = False
                    break
            if not minimal:
                continue
            orbit = _orbit_of(map, p, n)
            if any(_same_orbit(orbit, r) for r in found if r.period == n):
                continue
            found.append(classify(map, orbit))
    return found


CSV_HEADER = ["period", "x0", "y0", "lambda_minus_re", "lambda_minus_im",
              "lambda_plus_re", "lambda_plus_im", "type", "index"]


def orbits_to_csv(orbits: list[OrbitRecord]) -> str:
    """Orbit table in the exchange format used by the CLI."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for rec in orbits:
        lm, lp = rec.multipliers
        w.writerow([rec.period, repr(float(rec.points[0, 0])), repr(float(rec.points[0, 1])),
                    repr(lm.real), repr(lm.imag), repr(lp.real), repr(lp.imag),
                    rec.type.value, rec.index])
    return buf.getvalue()
