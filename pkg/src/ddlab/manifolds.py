"""Stable/unstable curves, accumulation sets, decoration and chain graphs.

Unstable branches are grown by iterating a fundamental domain seeded on the
unstable eigenvector, with adaptive midpoint refinement so consecutive image
vertices stay within a gap threshold.  Stable branches of saddles use the
same scheme under the explicit inverse; stable curves through aperiodic
sample points follow the most-contracted singular direction of Df^n.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import networkx as nx
import numpy as np
from shapely.geometry import LineString

from . import geometry
from .errors import (EndpointNotOnBoundary, EscapedDomain, InvalidSample,
                     NoContractedDirection, NotASaddle, NotConverged,
                     SinkMeasure, StableCurveNotSeparating)
from .geometry import Polygon, Polyline
from .maps import PlaneMap, Rectangle, orbit_differential
from .orbits import OrbitRecord, OrbitType

DEFAULT_GAP = 1e-3
SEED_OFFSET = 1e-5
ACCUM_EPS = 1e-3


class InverseMap(PlaneMap):
    """f^{-1} with the PlaneMap surface (requires a closed-form inverse)."""

    def __init__(self, base: PlaneMap):
        self.base = base
        self.kind = f"{base.kind}^-1"
        self.b = base.b
        self.domain = base.domain

    def evaluate(self, p):
        return self.base.inverse(p)

    def evaluate_many(self, pts):
        return self.base.inverse_many(pts)

    def differential(self, p):
        pre = self.base.inverse(p)
        return np.linalg.inv(self.base.differential(pre))


@dataclass
class CurveSegment:
    kind: str                    # 'unstable' | 'stable'
    base_orbit: OrbitRecord | None
    branch_sign: int
    polyline: Polyline           # connected arc up to the first domain exit
    arc_length: float            # total in-box arc length over all pieces
    escaped: bool
    seed: np.ndarray             # fundamental-domain vertices
    step_map: PlaneMap | None    # the iterate used to grow (None for field curves)
    box: Rectangle
    piece_lengths: list[float] = field(default_factory=list)
    piece_clouds: list[np.ndarray] = field(default_factory=list)

    def cloud(self, skip_length: float = 0.0) -> np.ndarray:
        """In-box vertices, optionally dropping the initial stretch of arc."""
        out, cum = [], 0.0
        for L, pts in zip(self.piece_lengths, self.piece_clouds):
            if cum >= skip_length and len(pts):
                out.append(pts)
            cum += L
        if not out:
            return np.empty((0, 2))
        return np.vstack(out)


@dataclass
class AccumulationSet:
    points: np.ndarray
    generator: CurveSegment
    tail_start: int


@dataclass
class ChainGraph:
    nodes: list[int]
    edges: list[tuple[int, int, int]]   # (source orbit, branch sign, target orbit)
    eps: float
    cycles: list[list[int]]

    def to_dot(self) -> str:
        lines = ["digraph chains {"]
        for n in self.nodes:
            lines.append(f"  o{n};")
        for s, sign, t in self.edges:
            lbl = "+" if sign > 0 else "-"
            lines.append(f'  o{s} -> o{t} [label="{lbl}"];')
        lines.append("}")
        return "\n".join(lines)


@dataclass
class DecorationVerdict:
    decorated: bool
    stabilized: bool
    stabilizing_fixed_point: int | None = None
    decorated_region: Polygon | None = None


def saddle_frame(map: PlaneMap, rec: OrbitRecord):
    """Return-map power, effective multipliers and eigenvectors at points[0].

    Flip saddles (negative multipliers) are grown under the squared return
    map so a branch stays on one side.
    """
    jac = orbit_differential(map, rec.points)
    eigval, eigvec = np.linalg.eig(jac)
    if np.abs(eigval.imag).max() > 1e-10:
        raise NotASaddle("complex multipliers")
    eigval = eigval.real
    order = np.argsort(np.abs(eigval))
    lam_minus, lam_plus = eigval[order[0]], eigval[order[1]]
    v_minus = eigvec[:, order[0]].real
    v_plus = eigvec[:, order[1]].real
    v_minus = v_minus / np.linalg.norm(v_minus)
    v_plus = v_plus / np.linalg.norm(v_plus)
    return lam_minus, lam_plus, v_minus, v_plus


def _refined_image(g: PlaneMap, src: np.ndarray, gap: float, box: Rectangle,
                   max_points: int = 60000) -> np.ndarray:
    """Image of a polyline under g with midpoint refinement of the source.

    Only gaps whose image endpoints stay near the box are refined, so a
    segment shooting off to infinity does not trigger endless subdivision.
    """
    src = np.asarray(src, dtype=float)
    wx, wy = box.x_max - box.x_min, box.y_max - box.y_min
    near = Rectangle(box.x_min - 0.5 * wx, box.x_max + 0.5 * wx,
                     box.y_min - 0.5 * wy, box.y_max + 0.5 * wy)
    with np.errstate(over="ignore", invalid="ignore"):
        img = g.evaluate_many(src)
    for _ in range(24):
        if len(src) >= max_points:
            break
        seg = img[1:] - img[:-1]
        finite = np.isfinite(seg).all(axis=1)
        gaps = np.where(finite, np.hypot(seg[:, 0], seg[:, 1]), 0.0)
        relevant = np.zeros(len(seg), dtype=bool)
        relevant[finite] = (near.contains_many(img[:-1][finite])
                            | near.contains_many(img[1:][finite]))
        need = np.flatnonzero((gaps > gap) & relevant)
        if len(need) == 0:
            break
        mids = 0.5 * (src[need] + src[need + 1])
        with np.errstate(over="ignore", invalid="ignore"):
            mid_img = g.evaluate_many(mids)
        order = np.argsort(np.concatenate([np.arange(len(src)), need + 0.5]))
        src = np.concatenate([src, mids])[order]
        img = np.concatenate([img, mid_img])[order]
    return img


def _inside_length(pts: np.ndarray, inside: np.ndarray) -> float:
    if len(pts) < 2:
        return 0.0
    ok = inside[:-1] & inside[1:]
    seg = pts[1:] - pts[:-1]
    with np.errstate(invalid="ignore"):
        d = np.where(ok, np.hypot(seg[:, 0], seg[:, 1]), 0.0)
    return float(np.nansum(d))


def _grow(g: PlaneMap, p0: np.ndarray, evec: np.ndarray, lam_eff: float,
          target_length: float, gap: float, delta0: float, box: Rectangle,
          allow_escape: bool, max_pieces: int, max_vertices: int):
    """Iterate a fundamental domain [delta0, lam_eff*delta0] along evec.

    Growth continues past domain exits (points far outside are masked out),
    so the in-box vertex clouds keep tracking the branch after folds leave
    and re-enter the window.
    """
    n_seed = 16
    ts = np.linspace(delta0, lam_eff * delta0, n_seed)
    seed = p0 + ts[:, None] * evec
    inside0 = box.contains_many(seed)
    connected = [seed]
    piece_lengths = [_inside_length(seed, inside0)]
    piece_clouds = [seed[inside0]]
    total = piece_lengths[0]
    escaped = False
    n_vertices = len(seed)
    cur = seed
    for _ in range(max_pieces):
        if total >= target_length:
            break
        img = _refined_image(g, cur, gap, box)
        finite = np.isfinite(img).all(axis=1)
        inside = np.zeros(len(img), dtype=bool)
        inside[finite] = box.contains_many(img[finite])
        if not inside.all() and not allow_escape:
            raise EscapedDomain("branch leaves the disc model")
        if not escaped:
            if inside.all():
                connected.append(img)
            else:
                escaped = True
                first_out = int(np.argmin(inside))
                cut = img[:max(first_out + 1, 2)]
                # the first outside point may have overflowed to inf in a
                # single step; the polyline keeps finite vertices only
                connected.append(cut[np.isfinite(cut).all(axis=1)])
        # mask runaway points so the next image does not overflow
        far = np.zeros(len(img), dtype=bool)
        far[finite] = ~Rectangle(box.x_min - 10, box.x_max + 10,
                                 box.y_min - 10, box.y_max + 10
                                 ).contains_many(img[finite])
        img = img.copy()
        img[far | ~finite] = np.nan
        piece_len = _inside_length(img, inside)
        piece_lengths.append(piece_len)
        piece_clouds.append(img[inside])
        total += piece_len
        n_vertices += len(img)
        if n_vertices > max_vertices:
            break
        if piece_len < 1e-11 or not inside.any():
            break
        cur = img
    poly = np.vstack([np.asarray([p0])] + connected)
    return poly, seed, total, escaped, piece_lengths, piece_clouds


def grow_unstable(map: PlaneMap, rec: OrbitRecord, branch: int, target_length: float,
                  gap: float = DEFAULT_GAP, delta0: float = SEED_OFFSET,
                  box: Rectangle | None = None, allow_escape: bool = False,
                  max_pieces: int = 80, max_vertices: int = 400000) -> CurveSegment:
    """Grow one unstable branch of a saddle orbit up to a target arc length."""
    lam_minus, lam_plus, v_minus, v_plus = saddle_frame(map, rec)
    if abs(lam_plus) <= 1:
        raise NotASaddle(f"|lambda+| = {abs(lam_plus):.4g} <= 1")
    flip = lam_plus < 0
    power = rec.period * (2 if flip else 1)
    lam_eff = lam_plus * lam_plus if flip else lam_plus
    g = map.power(power)
    if box is None:
        box = map.domain
    evec = branch * v_plus
    poly, seed, total, escaped, plens, pclouds = _grow(
        g, rec.points[0], evec, lam_eff, target_length, gap, delta0, box,
        allow_escape, max_pieces, max_vertices)
    return CurveSegment(kind="unstable", base_orbit=rec, branch_sign=branch,
                        polyline=Polyline(poly), arc_length=total, escaped=escaped,
                        seed=seed, step_map=g, box=box,
                        piece_lengths=plens, piece_clouds=pclouds)


def grow_stable(map: PlaneMap, rec: OrbitRecord, branch: int, target_length: float,
                gap: float = DEFAULT_GAP, delta0: float = SEED_OFFSET,
                box: Rectangle | None = None, allow_escape: bool = False,
                max_pieces: int = 80, max_vertices: int = 400000) -> CurveSegment:
    """Grow one stable branch of a saddle under the explicit inverse."""
    lam_minus, lam_plus, v_minus, v_plus = saddle_frame(map, rec)
    if not (abs(lam_minus) < 1 < abs(lam_plus)):
        raise NotASaddle("stable branch growth requires a saddle")
    # under f^-1 the stable multiplier becomes 1/lambda-
    flip = lam_minus < 0
    power = rec.period * (2 if flip else 1)
    lam_eff = (1.0 / lam_minus) ** (2 if flip else 1)
    g = _power_inverse(map, power)
    if box is None:
        box = map.domain
    evec = branch * v_minus
    poly, seed, total, escaped, plens, pclouds = _grow(
        g, rec.points[0], evec, lam_eff, target_length, gap, delta0, box,
        allow_escape, max_pieces, max_vertices)
    return CurveSegment(kind="stable", base_orbit=rec, branch_sign=branch,
                        polyline=Polyline(poly), arc_length=total, escaped=escaped,
                        seed=seed, step_map=g, box=box,
                        piece_lengths=plens, piece_clouds=pclouds)


def _power_inverse(map: PlaneMap, power: int) -> PlaneMap:
    return InverseMap(map).power(power) if power > 1 else InverseMap(map)


def accumulation_set(curve: CurveSegment, tol: float = ACCUM_EPS,
                     max_tail: int = 400, window: int = 16) -> AccumulationSet:
    """Tail cloud of the iterated fundamental domain of an unstable branch.

    Windows of consecutive tail clouds are compared in Hausdorff distance so
    that attractors of period up to the window size register as converged.
    """
    if curve.escaped and curve.kind == "unstable":
        pass  # points that stay in the box still generate the accumulation set
    g = curve.step_map
    if g is None:
        raise InvalidSample("curve carries no growth map")
    box = curve.box
    cloud = geometry.resample_polyline(curve.seed, spacing=max(tol / 4, 1e-7),
                                       max_points=800)
    tails = []
    prev_union = None
    for k in range(max_tail):
        with np.errstate(over="ignore", invalid="ignore"):
            cloud = g.evaluate_many(cloud)
        finite = np.isfinite(cloud).all(axis=1)
        cloud = cloud[finite]
        cloud = cloud[box.contains_many(cloud)]
        if len(cloud) == 0:
            raise NotConverged("every tail point escaped")
        tails.append(cloud.copy())
        if len(tails) >= 2 * window:
            cur_union = np.vstack(tails[-window:])
            prev_union = np.vstack(tails[-2 * window:-window])
            if geometry.hausdorff(cur_union, prev_union) < tol:
                return AccumulationSet(points=cur_union, generator=curve,
                                       tail_start=k - window + 1)
    raise NotConverged(f"tail clouds did not stabilize within {max_tail} iterations")


def contracted_directions(map: PlaneMap, pts: np.ndarray, n: int = 30):
    """Most-contracted unit directions of Df^n at a batch of points.

    Cocycle products are renormalized each step; orbits that blow up keep
    their partial product.  Returns (directions (m,2), valid mask); a point
    is invalid when the singular values are too close to define a direction.
    """
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    m = len(pts)
    P = np.repeat(np.eye(2)[None], m, axis=0)
    q = pts.copy()
    alive = np.isfinite(q).all(axis=1)
    for _ in range(n):
        if not alive.any():
            break
        idx = np.flatnonzero(alive)
        A = map.differential_many(q[idx])
        Pn = A @ P[idx]
        nrm = np.sqrt(np.sum(Pn * Pn, axis=(1, 2)))
        good = np.isfinite(nrm) & (nrm > 0)
        P[idx[good]] = Pn[good] / nrm[good, None, None]
        with np.errstate(over="ignore", invalid="ignore"):
            qn = map.evaluate_many(q[idx])
        ok = np.isfinite(qn).all(axis=1) & (np.max(np.abs(qn), axis=1) < 1e8)
        q[idx[ok]] = qn[ok]
        alive[idx[~(good & ok)]] = False
    _, s, vt = np.linalg.svd(P)
    valid = (s[:, 0] > 0) & (s[:, 1] <= 0.9 * s[:, 0]) & np.isfinite(s).all(axis=1)
    return vt[:, 1, :], valid


def contracted_direction(map: PlaneMap, z, n: int = 30):
    """Unit vector most contracted by Df^n(z), or None when ill-separated."""
    d, valid = contracted_directions(map, np.asarray(z, dtype=float)[None, :], n)
    return d[0] if valid[0] else None


def _field_half_curves(map: PlaneMap, starts: np.ndarray, dirs: np.ndarray,
                       region: Polygon, n: int, step: float, max_steps: int):
    """Integrate the contracted-direction field for a batch of points.

    All curves advance in lockstep (Heun scheme with orientation
    continuation) until they leave the region.  Returns a list of vertex
    arrays; entries are None for curves that stalled inside.
    """
    m = len(starts)
    paths = [[starts[i].copy()] for i in range(m)]
    Z = starts.copy()
    D = dirs.copy()
    active = np.ones(m, dtype=bool)
    done_ok = np.zeros(m, dtype=bool)
    for _ in range(max_steps):
        idx = np.flatnonzero(active)
        if len(idx) == 0:
            break
        d1, v1 = contracted_directions(map, Z[idx], n)
        flip = np.sum(d1 * D[idx], axis=1) < 0
        d1[flip] = -d1[flip]
        d2, v2 = contracted_directions(map, Z[idx] + step * d1, n)
        flip2 = np.sum(d2 * d1, axis=1) < 0
        d2[flip2] = -d2[flip2]
        d2[~v2] = d1[~v2]
        znew = Z[idx] + step * 0.5 * (d1 + d2)
        move = znew - Z[idx]
        nd = np.hypot(move[:, 0], move[:, 1])
        stalled = ~v1 | (nd < 1e-14)
        for k, i in enumerate(idx):
            if stalled[k]:
                active[i] = False
                continue
            paths[i].append(znew[k])
            Z[i] = znew[k]
            D[i] = move[k] / nd[k]
        live = idx[~stalled]
        if len(live):
            exited = ~geometry.contains_many(region, Z[live], tol=0.0)
            for i in live[exited]:
                active[i] = False
                done_ok[i] = True
    return [np.array(paths[i]) if done_ok[i] else None for i in range(m)]


def stable_curves_through(map: PlaneMap, points: np.ndarray, region: Polygon,
                          n: int = 30, step: float = 0.01,
                          max_steps: int = 5000) -> list[Polyline | None]:
    """Spanning stable curves of the contracted-direction field, batched."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    d0, valid = contracted_directions(map, pts, n)
    results: list[Polyline | None] = [None] * len(pts)
    ok = np.flatnonzero(valid)
    if len(ok) == 0:
        return results
    half_plus = _field_half_curves(map, pts[ok], d0[ok], region, n, step, max_steps)
    half_minus = _field_half_curves(map, pts[ok], -d0[ok], region, n, step, max_steps)
    for k, i in enumerate(ok):
        hp, hm = half_plus[k], half_minus[k]
        if hp is None or hm is None or len(hp) + len(hm) < 4:
            continue
        full = np.vstack([hm[::-1], hp[1:]])
        results[i] = clip_spanning_curve(full, region)
    return results


def stable_curve_through(map: PlaneMap, point, region: Polygon, n: int = 30,
                         step: float = 0.01, max_steps: int = 5000) -> Polyline | None:
    """Integral curve of the contracted-direction field through a point.

    Both half-curves are extended until they leave the region; returns the
    spanning polyline clipped at the region boundary, or None when the field
    is undefined or a half-curve fails to reach the boundary.
    """
    return stable_curves_through(map, np.asarray(point, dtype=float)[None, :],
                                 region, n=n, step=step, max_steps=max_steps)[0]


def clip_spanning_curve(vertices: np.ndarray, region: Polygon) -> Polyline | None:
    """Trim a curve that exits a region on both ends to exact boundary hits."""
    inside = np.array([geometry.contains(region, v, tol=0.0) for v in vertices])
    idx = np.flatnonzero(inside)
    if len(idx) == 0:
        return None
    i0, i1 = idx[0], idx[-1]
    if i0 == 0 or i1 == len(vertices) - 1:
        return None  # an end never left the region
    ring = LineString(region.closed_vertices())

    def crossing(a, b):
        seg = LineString([a, b])
        hit = seg.intersection(ring)
        if hit.is_empty:
            return None
        pt = hit.geoms[0] if hasattr(hit, "geoms") else hit
        if pt.geom_type != "Point":
            pt = pt.representative_point()
        return np.array([pt.x, pt.y])

    start = crossing(vertices[i0 - 1], vertices[i0])
    end = crossing(vertices[i1 + 1], vertices[i1])
    if start is None or end is None:
        return None
    mid = vertices[i0:i1 + 1]
    return Polyline(np.vstack([[start], mid, [end]]))


def _detect_periodic_sample(points: np.ndarray, max_period: int = 64,
                            tol: float = 1e-9) -> bool:
    pts = np.asarray(points, dtype=float)
    m = len(pts)
    for k in range(1, min(max_period, m - 1) + 1):
        if np.max(np.abs(pts[k:] - pts[:-k])) < tol:
            return True
    return False


def mild_dissipation_test(map: PlaneMap, sample, disc: Polygon, count: int,
                          n: int = 30, step: float = 0.01) -> float:
    """Fraction of sampled points whose local stable curve separates the disc."""
    if getattr(sample, "escaped", False):
        raise InvalidSample("sample escaped")
    pts = np.asarray(sample.points, dtype=float)
    if _detect_periodic_sample(pts):
        raise SinkMeasure("sample is supported on a periodic orbit")
    idx = np.unique(np.linspace(0, len(pts) - 1, count).astype(int))
    chosen = pts[idx]
    chosen = chosen[geometry.contains_many(disc, chosen, tol=0.0)]
    if len(chosen) == 0:
        raise NoContractedDirection("no sample point inside the disc")
    curves = stable_curves_through(map, chosen, disc, n=n, step=step)
    hits = 0
    for curve in curves:
        if curve is None:
            continue
        mid = curve.vertices[len(curve.vertices) // 2]
        nxt = curve.vertices[len(curve.vertices) // 2 + 1]
        t = nxt - mid
        nrm = np.array([-t[1], t[0]]) / max(np.hypot(*t), 1e-30)
        probes = [mid + 1e-4 * nrm, mid - 1e-4 * nrm]
        try:
            verdict = geometry.curve_separates(curve, disc, probes, tol=1e-5)
        except (EndpointNotOnBoundary, ValueError):
            # a curve that recrosses the boundary can split the disc into
            # non-simple pieces; count it as not separating
            continue
        if verdict.separates:
            hits += 1
    return hits / len(chosen)


def stable_spanning_curve(map: PlaneMap, rec: OrbitRecord, disc: Polygon,
                          base_index: int = 0, gap: float = DEFAULT_GAP) -> Polyline:
    """Full stable curve of one orbit point, clipped to span the disc."""
    pts = np.roll(rec.points, -base_index, axis=0)
    rec_i = OrbitRecord(points=pts, period=rec.period, multipliers=rec.multipliers,
                        type=rec.type, index=rec.index)
    diam = float(np.max(disc.vertices.max(axis=0) - disc.vertices.min(axis=0)))
    lo = disc.vertices.min(axis=0) - 0.2 * diam
    hi = disc.vertices.max(axis=0) + 0.2 * diam
    box = Rectangle(lo[0], hi[0], lo[1], hi[1])
    halves = []
    for sign in (-1, 1):
        cur = grow_stable(map, rec_i, sign, target_length=6 * diam, gap=gap,
                          box=box, allow_escape=True, max_pieces=200)
        v = cur.polyline.vertices
        outside = np.flatnonzero(~np.array([geometry.contains(disc, q, tol=0.0) for q in v]))
        if len(outside) == 0:
            raise StableCurveNotSeparating(
                f"stable branch {sign:+d} of point {base_index} stays inside the disc")
        halves.append(v[:outside[0] + 1])
    full = np.vstack([halves[0][::-1], halves[1][1:]])
    clipped = clip_spanning_curve(full, disc)
    if clipped is None:
        raise StableCurveNotSeparating("stable curve could not be clipped to the disc")
    return clipped


def decoration_test(map: PlaneMap, rec: OrbitRecord, disc: Polygon,
                    fixed_points: list[OrbitRecord] | None = None,
                    eps: float = ACCUM_EPS) -> DecorationVerdict:
    """Decoration and stabilization of a non-sink periodic orbit.

    Decorated: for every orbit point, the rest of the orbit lies in a single
    component of disc minus that point's stable curve.  Stabilized: a branch
    accumulation set meets an eps-ball of a fixed point, or the orbit is a
    fixed point with multiplier <= -1.
    """
    if rec.is_sink:
        raise InvalidSample("decoration is defined for non-sink orbits")
    decorated = True
    region_for_first = None
    pieces_first = None
    for i in range(rec.period):
        curve = stable_spanning_curve(map, rec, disc, base_index=i)
        left, right = geometry.split_region(curve, disc, tol=1e-5)
        others = [rec.points[j] for j in range(rec.period) if j != i]
        if others:
            in_left = [geometry.contains(left, q, tol=0.0) for q in others]
            if any(in_left) and not all(in_left):
                decorated = False
        if i == 0:
            pieces_first = (left, right)
    stabilized = False
    stabilizer = None
    lam_plus = rec.multipliers[1]
    if rec.period == 1 and abs(lam_plus.imag) < 1e-12 and lam_plus.real <= -1.0:
        stabilized = True
        stabilizer = 0
    else:
        if fixed_points is None:
            from .orbits import henon_fixed_points
            fixed_points = ([] if map.kind != "henon"
                            else henon_fixed_points(map.b, map.c))
        for sign in (-1, 1):
            if stabilized:
                break
            try:
                cur = grow_unstable(map, rec, sign, target_length=20.0,
                                    allow_escape=True)
                cloud = accumulation_set(cur, tol=eps).points
            except (NotConverged, NotASaddle, EscapedDomain):
                continue
            for fi, fp in enumerate(fixed_points):
                d = np.min(np.hypot(cloud[:, 0] - fp.points[0, 0],
                                    cloud[:, 1] - fp.points[0, 1]))
                if d <= eps:
                    stabilized = True
                    stabilizer = fi
                    break
    region = None
    if decorated and pieces_first is not None:
        left, right = pieces_first
        # the decorated region is the piece away from the rest of the orbit
        # (or away from the stabilizing point for a fixed flip saddle)
        ref = rec.points[1] if rec.period > 1 else None
        if ref is None and stabilized and fixed_points:
            pass
        if ref is not None:
            region = right if geometry.contains(left, ref, tol=0.0) else left
        else:
            region = left
    return DecorationVerdict(decorated=decorated, stabilized=stabilized,
                             stabilizing_fixed_point=stabilizer,
                             decorated_region=region)


def build_chain_graph(map: PlaneMap, orbits: list[OrbitRecord], eps: float = ACCUM_EPS,
                      target_length: float = 60.0) -> ChainGraph:
    """One edge per saddle branch whose accumulation set meets an orbit."""
    edges = []
    for i, rec in enumerate(orbits):
        if not rec.is_saddle:
            continue
        for sign in (-1, 1):
            try:
                cur = grow_unstable(map, rec, sign, target_length=target_length,
                                    allow_escape=True, max_pieces=120,
                                    max_vertices=1_000_000)
            except NotASaddle:
                continue
            try:
                cloud = accumulation_set(cur, tol=eps).points
            except NotConverged:
                # chaotic tails never settle; use the grown branch itself,
                # skipping the initial stretch so proximity to the base
                # point only counts when the branch genuinely folds back
                cloud = cur.cloud(skip_length=1.0)
                if len(cloud) == 0:
                    continue
            for j, tgt in enumerate(orbits):
                dmin = np.inf
                for q in tgt.points:
                    d = np.min(np.hypot(cloud[:, 0] - q[0], cloud[:, 1] - q[1]))
                    dmin = min(dmin, float(d))
                if dmin <= eps:
                    edges.append((i, sign, j))
    g = nx.DiGraph()
    g.add_nodes_from(range(len(orbits)))
    g.add_edges_from((s, t) for s, _, t in edges)
    cycles = [c for c in nx.simple_cycles(g)]
    return ChainGraph(nodes=list(range(len(orbits))), edges=edges, eps=eps,
                      cycles=cycles)


def curves_to_csv(curves: list[CurveSegment]) -> str:
    """Polylines in a flat CSV exchange format."""
    lines = ["curve_id,kind,branch,vertex,x,y"]
    for ci, cur in enumerate(curves):
        for vi, (x, y) in enumerate(cur.polyline.vertices):
            lines.append(f"{ci},{cur.kind},{cur.branch_sign},{vi},{x!r},{y!r}")
    return "\n".join(lines) + "\n"
