"""Trapping discs, renormalization cascades, and the disc reduction.

A trap is certified by boundary sampling: every sample must map k steps
strictly inside with a minimum margin, and intermediate iterates must stay
disjoint from the disc.  Two construction routes are used: a Lyapunov-metric
ellipse around an attracting orbit, and a union of forward polygon images of
a fattened invariant cloud (a diffeomorphism maps a polygon's boundary to
the image polygon's boundary, so images are computed exactly up to
refinement of the boundary polyline).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import shapely
from scipy.linalg import solve_discrete_lyapunov

from . import geometry
from .dissipation import curve_growth_estimate
from .errors import (CannotCertify, ClosingArcCrossesImage, ConeNotInvariant,
                     NoAccumulationPoint, NoValidR, NumericOverflow,
                     ProbeEscapesTree, Unclassified)
from .manifolds import AccumulationSet, CurveSegment, _refined_image, grow_stable, \
    grow_unstable
from .maps import EscapeCones, HenonMap, PlaneMap, Rectangle, orbit_differential
from .orbits import OrbitRecord, OrbitType, find_periodic, henon_fixed_points, \
    refine_periodic

DELTA_MIN = 1e-4
MAX_DISC_VERTICES = 4096


# ---------------------------------------------------------------------------
# disc reduction


@dataclass
class ReductionDomain:
    D1: Rectangle
    D2: Rectangle
    R: int
    residual: float

    def union_polygon(self) -> geometry.Polygon:
        """The reduction region D1 ∪ D2 as a single rectangle-union polygon."""
        d1, d2 = self.D1, self.D2
        return geometry.Polygon(np.array([
            [d1.x_min, d1.y_min], [d2.x_max, d1.y_min],
            [d2.x_max, d1.y_max], [d1.x_min, d1.y_max]]))


def reduction_domain(b: float, c: float, samples: int = 1000,
                     margin: float = 1e-6) -> ReductionDomain:
    """Smallest integer half-width R whose rectangle pair absorbs f(D1).

    D1 = [-R,R] x [-sqrt|b| R, sqrt|b| R] and D2 = [R, 2R^2] x (same strip);
    boundary samples of D1 (plus the shared edge) must land strictly inside
    the union.
    """
    if not (0.0 < abs(b) < 1.0):
        raise ValueError("reduction requires 0 < |b| < 1")
    f = HenonMap(b, c)
    for R in range(2, 65):
        s = math.sqrt(abs(b)) * R
        D1 = Rectangle(-R, R, -s, s)
        D2 = Rectangle(R, 2 * R * R, -s, s)
        union = shapely.Polygon([(-R, -s), (2 * R * R, -s),
                                 (2 * R * R, s), (-R, s)])
        pts = np.vstack([D1.sample_boundary(samples),
                         np.column_stack([np.full(64, R),
                                          np.linspace(-s, s, 64)])])
        with np.errstate(over="ignore", invalid="ignore"):
            img = f.evaluate_many(pts)
        if not np.isfinite(img).all():
            continue
        P = shapely.points(img)
        inside = shapely.contains(union, P)
        if not inside.all():
            continue
        residual = float(np.min(shapely.distance(union.exterior, P)))
        if residual > margin:
            return ReductionDomain(D1=D1, D2=D2, R=R, residual=residual)
    raise NoValidR(f"no reduction rectangle certifies up to R=64 (b={b}, c={c})")


def escape_cones(b: float, R: float, c: float = 0.0,
                 samples: int = 256) -> EscapeCones:
    """Forward/backward escape cones outside |x| < R, sample-verified.

    Forward cone U+: |x| >= R, |y| <= sqrt|b||x|, with |x'| > 2|x| under f.
    Backward cone U-: |x| >= R, |y| >= sqrt|b||x|, with |y'| > 2|y| under
    f^-1.
    """
    if not (0.0 < abs(b) < 1.0):
        raise ValueError("cones require 0 < |b| < 1")
    f = HenonMap(b, c)
    slope = math.sqrt(abs(b))
    cones = EscapeCones(R=float(R), slope=slope)
    rs = np.linspace(R, 4.0 * R, max(8, samples // 8))
    xs = np.repeat(np.concatenate([rs, -rs]), 5)
    ratios = np.tile(np.linspace(-1.0, 1.0, 5), 2 * len(rs))
    pts = np.column_stack([xs, ratios * slope * np.abs(xs)])
    with np.errstate(over="ignore", invalid="ignore"):
        img = f.evaluate_many(pts)
    in_fwd = (np.abs(img[:, 0]) >= R) & \
        (np.abs(img[:, 1]) <= slope * np.abs(img[:, 0]))
    if not (in_fwd & (np.abs(img[:, 0]) > 2 * np.abs(pts[:, 0]))).all():
        raise ConeNotInvariant(f"forward cone not invariant at R={R}")
    ratios_b = np.tile(np.array([1.0, 2.0, 4.0, 8.0, 16.0]), 2 * len(rs))
    signs = np.tile(np.array([1.0, -1.0, 1.0, -1.0, 1.0]), 2 * len(rs))
    pts_b = np.column_stack([xs, signs * ratios_b * slope * np.abs(xs)])
    with np.errstate(over="ignore", invalid="ignore"):
        pre = f.inverse_many(pts_b)
    in_bwd = (np.abs(pre[:, 0]) >= R) & \
        (np.abs(pre[:, 1]) >= slope * np.abs(pre[:, 0]))
    if not (in_bwd & (np.abs(pre[:, 1]) > 2 * np.abs(pts_b[:, 1]))).all():
        raise ConeNotInvariant(f"backward cone not invariant at R={R}")
    return cones


def reduction_fixed_points(map: HenonMap, dom: ReductionDomain) -> list[OrbitRecord]:
    """Fixed points inside the reduction region, plus the escape sink.

    Orbits leaving through the forward cone drift right along the strip; the
    disc model closes them off with one artificial attracting fixed point at
    the far end of D2 (index +1).
    """
    recs = [r for r in henon_fixed_points(map.b, map.c)
            if dom.D1.contains(r.points[0]) or dom.D2.contains(r.points[0])]
    p0 = np.array([[dom.D2.x_max, 0.0]])
    recs.append(OrbitRecord(points=p0, period=1, multipliers=(0j, 0j),
                            type=OrbitType.SINK, index=1))
    return recs


def reduction_lefschetz(map: HenonMap, dom: ReductionDomain) -> int:
    return sum(r.index for r in reduction_fixed_points(map, dom))


# ---------------------------------------------------------------------------
# trap certification


@dataclass
class TrapCertificate:
    disc: geometry.Polygon
    period: int
    inward_margin: float
    disjointness: float            # +inf when period == 1
    n_boundary: int
    certified: bool

    def to_dict(self) -> dict:
        return {
            "period": self.period,
            "inward_margin": self.inward_margin,
            "disjointness": None if math.isinf(self.disjointness)
            else self.disjointness,
            "n_boundary": self.n_boundary,
            "certified": self.certified,
            "polygon": [[float(x), float(y)] for x, y in self.disc.vertices],
        }


def certify_trap(map: PlaneMap, disc: geometry.Polygon, k: int,
                 n_samples: int = 512, delta_min: float = DELTA_MIN) -> TrapCertificate:
    """Boundary-sampled certificate that f^k maps the disc strictly inside."""
    poly = disc.shapely
    pts = disc.sample_boundary(n_samples)
    cur = pts
    disjoint = math.inf
    ok = True
    for _ in range(1, k):
        with np.errstate(over="ignore", invalid="ignore"):
            cur = map.evaluate_many(cur)
        if not np.isfinite(cur).all():
            ok = False
            break
        P = shapely.points(cur)
        d = np.where(shapely.contains(poly, P), -1.0, shapely.distance(poly, P))
        disjoint = min(disjoint, float(np.min(d)))
    if ok:
        with np.errstate(over="ignore", invalid="ignore"):
            cur = map.evaluate_many(cur)
        ok = bool(np.isfinite(cur).all())
    if not ok:
        return TrapCertificate(disc=disc, period=k, inward_margin=-math.inf,
                               disjointness=disjoint, n_boundary=n_samples,
                               certified=False)
    P = shapely.points(cur)
    d = shapely.distance(poly.exterior, P)
    signed = np.where(shapely.contains(poly, P), d, -d)
    margin = float(np.min(signed))
    certified = margin >= delta_min and (k == 1 or disjoint > 0.0)
    return TrapCertificate(disc=disc, period=k, inward_margin=margin,
                           disjointness=disjoint, n_boundary=n_samples,
                           certified=certified)


def reverify(map: PlaneMap, cert: TrapCertificate,
             delta_min: float = DELTA_MIN / 2) -> TrapCertificate:
    """Re-run certification at doubled boundary resolution.

    The margin bar drops to half of delta_min: the finer sampling can only
    reveal boundary points between the original samples, whose images sit
    within the sampling gap of already-checked ones."""
    return certify_trap(map, cert.disc, cert.period,
                        n_samples=2 * cert.n_boundary, delta_min=delta_min)


def _largest_polygon(geom):
    if geom.geom_type == "Polygon":
        return geom
    if geom.geom_type in ("MultiPolygon", "GeometryCollection"):
        polys = [g for g in geom.geoms if g.geom_type == "Polygon"]
        if polys:
            return max(polys, key=lambda g: g.area)
    return None


def _cap_vertices(poly, tol):
    while len(poly.exterior.coords) > MAX_DISC_VERTICES:
        poly = poly.simplify(tol)
        tol *= 2
    return poly


def _ellipse_polygon(center: np.ndarray, A: np.ndarray, r: float,
                     n: int = 128) -> geometry.Polygon:
    """Level set of a Lyapunov quadratic form adapted to a contraction A.

    The form is built for A/gamma with gamma between the spectral radius
    and 1, so the level set maps into its gamma-scaled copy and the trap
    margin is a definite fraction of the ellipse size."""
    rho = float(np.max(np.abs(np.linalg.eigvals(A))))
    gamma = max(0.5, math.sqrt(rho))
    M = solve_discrete_lyapunov((A / gamma).T, np.eye(2))
    w, V = np.linalg.eigh(M)
    th = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
    ring = (V @ np.diag(1.0 / np.sqrt(w)) @ np.vstack([np.cos(th), np.sin(th)])).T
    return geometry.Polygon(center + r * ring)


def _sink_ellipse_trap(map: PlaneMap, rec: OrbitRecord, k: int,
                       delta_min: float = DELTA_MIN,
                       within=None) -> TrapCertificate | None:
    if k % rec.period != 0:
        return None
    pts = [rec.points[0]]
    for _ in range(k - 1):
        pts.append(map.evaluate(pts[-1]))
    pts = np.array(pts)
    A = np.eye(2)
    for j in range(k):
        A = map.differential(pts[j]) @ A
    if np.max(np.abs(np.linalg.eigvals(A))) >= 1.0:
        return None
    for r in (1e-3, 3e-3, 1e-2, 3e-2, 1e-1):
        try:
            disc = _ellipse_polygon(rec.points[0], A, r)
        except (ValueError, np.linalg.LinAlgError):
            return None
        if within is not None and not within.contains(disc.shapely):
            continue
        cert = certify_trap(map, disc, k, delta_min=delta_min)
        if cert.certified:
            return cert
    return None


def _grid_thin(pts: np.ndarray, resolution: float,
               occupied: set | None = None) -> np.ndarray:
    """One representative per resolution-sized grid cell, skipping cells
    already present in `occupied` (which is updated in place)."""
    key = np.round(pts / resolution).astype(np.int64)
    _, first = np.unique(key, axis=0, return_index=True)
    first = np.sort(first)
    if occupied is None:
        return pts[first]
    out = []
    for i in first:
        cell = (int(key[i, 0]), int(key[i, 1]))
        if cell not in occupied:
            occupied.add(cell)
            out.append(pts[i])
    return np.array(out) if out else np.empty((0, 2))


def _saturate_cloud(g: PlaneMap, cloud: np.ndarray, box: Rectangle,
                    resolution: float, max_points: int = 60000,
                    max_rounds: int = 80) -> np.ndarray:
    """Forward-saturate a point cloud under g at a merge resolution.

    Image points landing in grid cells not yet occupied are appended until
    the cloud stabilizes (or caps out)."""
    near = Rectangle(box.x_min - 2, box.x_max + 2, box.y_min - 2, box.y_max + 2)
    pts = cloud[near.contains_many(cloud)]
    if len(pts) == 0:
        return pts
    occupied: set = set()
    pts = _grid_thin(pts, resolution, occupied)
    frontier = pts
    for _ in range(max_rounds):
        with np.errstate(over="ignore", invalid="ignore"):
            img = g.evaluate_many(frontier)
        img = img[np.isfinite(img).all(axis=1)]
        img = img[near.contains_many(img)]
        if len(img) == 0:
            break
        fresh = _grid_thin(img, resolution, occupied)
        if len(fresh) == 0:
            break
        pts = np.vstack([pts, fresh])
        frontier = fresh
        if len(pts) > max_points:
            break
    return pts


def _settled_union(map: PlaneMap, g: PlaneMap, cloud: np.ndarray, k: int,
                   eps: float):
    """Union of forward g-images of the eps-tube of the cloud, run until the
    next image is contained in the union."""
    box = map.domain
    sub = cloud[::max(1, len(cloud) // 4000)]
    with np.errstate(over="ignore", invalid="ignore"):
        U = shapely.union_all(shapely.buffer(shapely.points(sub), eps,
                                             quad_segs=8))
    U = _largest_polygon(U)
    if U is None:
        return None
    S = shapely.Polygon(U.exterior).simplify(1e-5)
    P = S
    for _ in range(40):
        bverts = np.array(P.exterior.coords)
        with np.errstate(over="ignore", invalid="ignore"):
            img = _refined_image(g, bverts, eps / 10, box)
        img = img[np.isfinite(img).all(axis=1)]
        if len(img) < 4:
            return None
        Pn = shapely.Polygon(img)
        if not Pn.is_valid:
            with np.errstate(over="ignore", invalid="ignore"):
                Pn = _largest_polygon(shapely.make_valid(Pn))
            if Pn is None:
                return None
        if S.contains(Pn):
            return S
        merged = _largest_polygon(shapely.union_all([S, Pn]))
        if merged is None:
            return None
        S = _cap_vertices(shapely.Polygon(merged.exterior).simplify(1e-5),
                          1e-4)
        P = Pn
    return None


def _invariant_cloud_trap(map: PlaneMap, cloud: np.ndarray, k: int,
                          delta_min: float = DELTA_MIN,
                          eps_ladder=(0.05, 0.1, 0.2),
                          within=None) -> TrapCertificate | None:
    """Trapping disc around an invariant cloud via image unions + patching.

    An eps-tube around the cloud is forward-unioned until it absorbs its
    own image.  The union alone has margin ~0 along chains of image caps,
    so the boundary is then patched adaptively: wherever a boundary
    sample's k-step image lands within 3*delta_min of the boundary, a small
    disc around that image is unioned in.  Strong dissipation makes the
    clearance grow along each cap chain, so patching settles quickly.
    """
    cloud = np.asarray(cloud, dtype=float)
    cloud = cloud[np.isfinite(cloud).all(axis=1)]
    near = Rectangle(map.domain.x_min - 2, map.domain.x_max + 2,
                     map.domain.y_min - 2, map.domain.y_max + 2)
    cloud = cloud[near.contains_many(cloud)]
    if len(cloud) < 1:
        return None
    g = map.power(k) if k > 1 else map

    def clip(poly):
        if within is None:
            return poly
        cut = _largest_polygon(poly.intersection(within))
        if cut is None:
            return None
        return _cap_vertices(shapely.Polygon(cut.exterior).simplify(1e-5),
                             1e-4)

    target = 10 * delta_min
    for eps in eps_ladder:
        S = _settled_union(map, g, cloud, k, eps)
        if S is not None:
            S = clip(S)
        if S is None:
            continue
        for _ in range(30):
            try:
                disc = geometry.Polygon(np.array(S.exterior.coords)[:-1])
            except ValueError:
                break
            # validate at 4x the certification resolution: the equal-arc
            # grids nest under doubling, so re-verification at 2x cannot
            # discover boundary points the patch loop has not checked
            bp = disc.sample_boundary(4096)
            with np.errstate(over="ignore", invalid="ignore"):
                im = bp
                for _j in range(k):
                    im = map.evaluate_many(im)
            if not np.isfinite(im).all():
                break
            P = shapely.points(im)
            d = np.where(shapely.contains(S, P),
                         shapely.distance(S.exterior, P),
                         -shapely.distance(S.exterior, P))
            # near a clipped parent boundary the margin may stall below the
            # target; accept as soon as certification clears delta_min
            if np.min(d) >= 1.2 * delta_min:
                cert = certify_trap(map, disc, k, delta_min=delta_min)
                if cert.certified:
                    cert2 = reverify(map, cert)
                    if cert2.certified:
                        return cert2
                if np.min(d) >= target:
                    break
            bad = im[d < target]
            shortfall = max(0.0, -float(np.min(d)))
            r = shortfall + target
            patch = shapely.union_all(shapely.buffer(shapely.points(bad), r,
                                                     quad_segs=8))
            merged = _largest_polygon(shapely.union_all([S, patch]))
            if merged is None:
                break
            S2 = clip(_cap_vertices(
                shapely.Polygon(merged.exterior).simplify(1e-5), 1e-4))
            if S2 is None or S2.equals(S):
                break
            S = S2
    return None


def find_trapped_disc(map: PlaneMap, seed, k: int,
                      delta_min: float = DELTA_MIN,
                      within=None) -> TrapCertificate:
    """Certified disc trapped by f^k around a seed orbit or point cloud."""
    if isinstance(seed, OrbitRecord):
        if seed.is_sink:
            cert = _sink_ellipse_trap(map, seed, k, delta_min, within=within)
            if cert is not None:
                return cert
            # weakly attracting sinks (multiplier near the unit circle)
            # defeat the ellipse construction; fall back to the cloud route
            cert = _invariant_cloud_trap(map, seed.points, k, delta_min,
                                         within=within)
            if cert is None:
                raise CannotCertify(f"no attracting disc certifies at k={k}")
            return cert
        # a saddle supplies its local unstable branches as the cloud
        parts = [seed.points]
        for sign in (-1, 1):
            try:
                cur = grow_unstable(map, seed, sign, target_length=30.0,
                                    allow_escape=True)
                parts.append(cur.cloud())
            except Exception:
                continue
        cloud = np.vstack(parts)
    elif isinstance(seed, AccumulationSet):
        cloud = seed.points
    else:
        cloud = np.asarray(seed, dtype=float)
    cert = _invariant_cloud_trap(map, cloud, k, delta_min, within=within)
    if cert is None:
        raise CannotCertify(f"cloud tube does not certify at period {k}")
    return cert


# ---------------------------------------------------------------------------
# Pixton discs


def assemble_pixton_disc(unstable: CurveSegment, stable: CurveSegment,
                         eps: float = 1e-3, map: PlaneMap | None = None) -> \
        geometry.Polygon:
    """Jordan disc bounded by an unstable arc, a stable arc, and a short
    closing segment at a point where the unstable branch returns onto the
    stable curve.

    Both arcs emanate from the same periodic point; the closing segment
    meets the stable curve only at the accumulation point, and its forward
    image (minus that endpoint) must fall inside the disc.
    """
    from shapely.geometry import LineString, Point
    uv = unstable.polyline.vertices
    sv = stable.polyline.vertices
    if len(uv) < 3 or len(sv) < 2:
        raise NoAccumulationPoint("degenerate input curves")
    line_s = LineString(sv)
    d = shapely.distance(shapely.points(uv), line_s)
    away = np.flatnonzero(d > 10 * eps)
    if len(away) == 0:
        raise NoAccumulationPoint("unstable branch never leaves the stable curve")
    candidates = np.flatnonzero((np.arange(len(uv)) > away[0]) & (d < eps))
    if len(candidates) == 0:
        raise NoAccumulationPoint(f"no return within eps={eps:g}")
    g = map if map is not None else unstable.step_map
    last_error = None
    # successive close approaches serve as the perturbation attempts
    for j in [int(candidates[0])] + [int(v) for v in
                                     candidates[1:: max(1, len(candidates) // 8)][:8]]:
        u_star = uv[j]
        s_arc = line_s.project(Point(u_star))
        x = np.array(line_s.interpolate(s_arc).coords[0])
        # stable subarc from the base to the foot point x
        cum = np.concatenate([[0.0], np.cumsum(
            np.linalg.norm(np.diff(sv, axis=0), axis=1))])
        cut = int(np.searchsorted(cum, s_arc))
        sigma = np.vstack([sv[:cut], x])
        ring = np.vstack([uv[:j + 1], x, sigma[::-1]])
        ring = ring[np.concatenate([[True],
                                    np.linalg.norm(np.diff(ring, axis=0),
                                                   axis=1) > 1e-12])]
        if len(ring) < 3:
            continue
        P = shapely.Polygon(ring)
        if not P.is_valid:
            P = _largest_polygon(shapely.make_valid(P))
            if P is None:
                continue
        ts = np.linspace(1.0, 0.05, 12)[:, None]
        delta_pts = x + ts * (u_star - x)
        with np.errstate(over="ignore", invalid="ignore"):
            img = g.evaluate_many(delta_pts)
        if not np.isfinite(img).all():
            continue
        if LineString([u_star, x]).intersects(LineString(img)):
            last_error = ClosingArcCrossesImage(
                "closing segment meets its forward image")
            continue
        if not shapely.contains(P, shapely.points(img)).all():
            last_error = ClosingArcCrossesImage(
                "image of the closing segment leaves the disc")
            continue
        return geometry.Polygon(np.array(P.exterior.coords)[:-1])
    if last_error is not None:
        raise last_error
    raise NoAccumulationPoint("no admissible closing segment found")


# ---------------------------------------------------------------------------
# cascades


@dataclass
class RenormNode:
    certificate: TrapCertificate
    relative_period: int
    absolute_period: int
    orbit_ids: list[int] = field(default_factory=list)
    orbits: list[OrbitRecord] = field(default_factory=list)
    children: list["RenormNode"] = field(default_factory=list)

    def depth(self) -> int:
        return 1 + max((ch.depth() for ch in self.children), default=0)

    def to_dict(self) -> dict:
        return {
            "period_rel": self.relative_period,
            "period_abs": self.absolute_period,
            "polygon": [[float(x), float(y)]
                        for x, y in self.certificate.disc.vertices],
            "margin": self.certificate.inward_margin,
            "orbit_periods": sorted(o.period * self.absolute_period
                                    for o in self.orbits),
            "children": [ch.to_dict() for ch in self.children],
        }


def _bbox_of(disc: geometry.Polygon, pad: float = 0.05) -> Rectangle:
    lo = disc.vertices.min(axis=0)
    hi = disc.vertices.max(axis=0)
    w = np.maximum(hi - lo, 1e-3)
    return Rectangle(lo[0] - pad * w[0], hi[0] + pad * w[0],
                     lo[1] - pad * w[1], hi[1] + pad * w[1])


def root_trap(map: PlaneMap, max_period: int = 8,
              grid: int = 24) -> tuple[TrapCertificate, list[OrbitRecord]]:
    """Period-1 trap around the bounded attracting structure, if any."""
    orbits = find_periodic(map, max_period, grid=grid)
    sinks = [o for o in orbits if o.is_sink]
    flips = [o for o in orbits if o.period == 1
             and abs(o.multipliers[1].imag) < 1e-9
             and o.multipliers[1].real <= -1.0]
    if not sinks and not flips:
        raise CannotCertify("no attracting structure detected")
    if sinks and sinks[0].period == 1 and not flips:
        cert = _sink_ellipse_trap(map, sinks[0], 1)
        if cert is not None:
            return cert, orbits
    # seed with the attracting structure only: the closure of the unstable
    # branches of the flip saddle, plus any sink orbits (basin-boundary
    # saddles must stay outside the trap)
    parts = [o.points for o in sinks] + [o.points for o in flips]
    for rec in flips:
        for sign in (-1, 1):
            try:
                cur = grow_unstable(map, rec, sign, target_length=30.0,
                                    allow_escape=True)
                parts.append(cur.cloud())
            except Exception:
                continue
    cert = _invariant_cloud_trap(map, np.vstack(parts), 1)
    if cert is None:
        raise CannotCertify("no period-1 trap certifies")
    return cert, orbits


def cascade(map: PlaneMap, root: TrapCertificate, max_depth: int = 6,
            max_period: int = 32, grid: int = 20) -> RenormNode:
    """Nested certified traps inside a root trap, one child per level."""
    return _expand_node(map, root, 1, max_depth, max_period, grid)


def _expand_node(map: PlaneMap, cert: TrapCertificate, k_abs: int,
                 max_depth: int, max_period: int, grid: int) -> RenormNode:
    node = RenormNode(certificate=cert, relative_period=cert.period // k_abs
                      if cert.period % k_abs == 0 else cert.period,
                      absolute_period=cert.period)
    g = map.power(cert.period)
    max_rel = max(1, max_period // cert.period)
    try:
        census = find_periodic(g, min(max_rel, 8), grid=grid,
                               domain=_bbox_of(cert.disc))
    except NumericOverflow:
        census = []
    inside = [o for o in census
              if geometry.contains(cert.disc, o.points[0], tol=0.0)]
    node.orbits = inside
    node.orbit_ids = list(range(len(inside)))
    if max_depth <= 1:
        return node
    candidates = sorted({o.period for o in inside if o.period > 1})
    for r in candidates:
        if cert.period * r > max_period:
            break
        recs = sorted([o for o in inside if o.period == r],
                      key=lambda o: (not o.is_sink,))
        inner = cert.disc.shapely.buffer(-2 * DELTA_MIN)
        child_cert = None
        for rec in recs:
            try:
                child_cert = find_trapped_disc(
                    map, _lift_orbit(map, g, rec), cert.period * r,
                    within=inner)
            except CannotCertify:
                child_cert = None
            if child_cert is not None:
                break
        if child_cert is None:
            continue
        if not all(geometry.contains(cert.disc, v, tol=1e-9)
                   for v in child_cert.disc.vertices[::8]):
            continue
        child = _expand_node(map, child_cert, cert.period * r,
                             max_depth - 1, max_period, grid)
        child.relative_period = r
        node.children.append(child)
        break
    return node


def _lift_orbit(map: PlaneMap, g: PlaneMap, rec: OrbitRecord):
    """Seed for a child trap: the orbit itself, or its branch cloud."""
    if rec.is_sink:
        return rec
    # one orbit component only: the trap at the full period must be
    # disjoint from its intermediate iterates
    parts = [rec.points[:1]]
    for sign in (-1, 1):
        try:
            cur = grow_unstable(g, rec, sign, target_length=10.0,
                                allow_escape=True)
            parts.append(cur.cloud())
        except Exception:
            continue
    return np.vstack(parts)


# ---------------------------------------------------------------------------
# period sets


@dataclass
class PeriodSetSummary:
    finite_part: set[int]
    doubling_families: list[tuple[int, int]]   # (base m, max j observed)

    def regenerate(self) -> set[int]:
        out = set(self.finite_part)
        for m, jmax in self.doubling_families:
            out.update(m * 2 ** j for j in range(jmax + 1))
        return out

    def to_dict(self) -> dict:
        return {"finite_part": sorted(self.finite_part),
                "doubling_families": [list(f) for f in self.doubling_families]}


def period_set_summary(orbits) -> PeriodSetSummary:
    """Greedy dyadic factorization of the census period set.

    Maximal chains p, 2p, 4p, ... with at least three members (two observed
    doublings) become families; everything else stays in the finite part.
    """
    periods = {o.period for o in orbits} if orbits and isinstance(
        orbits[0], OrbitRecord) else set(orbits)
    remaining = set(periods)
    families = []
    while True:
        best = None
        for p in sorted(remaining):
            if p % 2 == 0 and p // 2 in remaining:
                continue   # not a chain head
            j = 0
            while p * 2 ** (j + 1) in remaining:
                j += 1
            if j + 1 >= 3 and (best is None or j > best[1]):
                best = (p, j)
        if best is None:
            break
        m, jmax = best
        for j in range(jmax + 1):
            remaining.discard(m * 2 ** j)
        families.append((m, jmax))
    families.sort()
    return PeriodSetSummary(finite_part=remaining, doubling_families=families)


# ---------------------------------------------------------------------------
# quadritomie


@dataclass
class QuadritomieVerdict:
    case: str     # NoFixedPoint | UnboundedInvariantCurve | TrappedDisc |
    #               HomoclinicPositiveEntropy
    evidence: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        ev = {}
        for key, val in self.evidence.items():
            if isinstance(val, TrapCertificate):
                ev[key] = val.to_dict()
            elif isinstance(val, np.ndarray):
                ev[key] = [float(v) for v in np.ravel(val)]
            else:
                ev[key] = val
        return {"case": self.case, "evidence": ev}


def _attractor_probe(f: HenonMap, z0: np.ndarray, transient: int = 4000,
                     max_period: int = 256, tol: float = 1e-6):
    """(period, orbit points) of the attractor reached from z0; period 0 means
    aperiodic at this resolution, None means the orbit escapes."""
    z = np.asarray(z0, dtype=float)
    for _ in range(transient):
        x, y = z
        z = np.array([x * x + f.c + y, -f.b * x])
        if not np.isfinite(z).all() or abs(z[0]) > 1e8:
            return None, None
    tail = np.empty((4 * max_period, 2))
    for t in range(len(tail)):
        tail[t] = z
        x, y = z
        z = np.array([x * x + f.c + y, -f.b * x])
        if not np.isfinite(z).all() or abs(z[0]) > 1e8:
            return None, None
    for k in range(1, max_period + 1):
        if np.max(np.abs(tail[k:] - tail[:-k])) < tol:
            return k, tail[:k]
    return 0, tail


def _left_branch_is_graph(f: HenonMap, q: OrbitRecord, p_x: float) -> \
        tuple[bool, np.ndarray | None]:
    """Does the left unstable branch of q stay an x-graph down to x = p_x?"""
    try:
        lam, lam_plus, _, v_plus = _saddle_data(f, q)
        sign = -1 if v_plus[0] > 0 else 1   # branch heading toward smaller x
        cur = grow_unstable(f, q, sign, target_length=8.0 * (q.points[0, 0] - p_x
                                                             + 1.0),
                            allow_escape=True, max_pieces=120)
    except Exception:
        return False, None
    v = cur.polyline.vertices
    dx = np.diff(v[:, 0])
    reach = np.flatnonzero(v[:, 0] <= p_x + 1e-6)
    if len(reach) == 0:
        return False, None
    upto = reach[0]
    # allow refinement noise well below the fundamental-domain scale
    graph = bool(np.all(dx[:upto] < 1e-5))
    return graph, v[:upto + 1]


def _saddle_data(f, rec):
    from .manifolds import saddle_frame
    lam_minus, lam_plus, v_minus, v_plus = saddle_frame(f, rec)
    return lam_minus, lam_plus, v_minus, v_plus


def _homoclinic_crossing(f: HenonMap, rec: OrbitRecord,
                         target: float = 40.0) -> np.ndarray | None:
    """First transversal-looking crossing of W^u(rec) with W^s(rec)."""
    from shapely.geometry import LineString
    base = rec.points[0]
    stables = []
    for sign in (-1, 1):
        try:
            st = grow_stable(f, rec, sign, target_length=10.0,
                             allow_escape=True, max_pieces=40)
            stables.append(st.polyline.vertices)
        except Exception:
            continue
    if not stables:
        return None
    s_lines = [LineString(v) for v in stables if len(v) >= 2]
    for sign in (-1, 1):
        try:
            un = grow_unstable(f, rec, sign, target_length=target,
                               allow_escape=True, max_pieces=100)
        except Exception:
            continue
        verts = un.polyline.vertices
        # intersect in short chunks: a branch that wraps an attractor makes
        # the global overlay explode, and chunking yields hits in arc order
        chunk = 512
        for i in range(0, max(len(verts) - 1, 1), chunk):
            piece = verts[i:i + chunk + 1]
            if len(piece) < 2:
                continue
            u_line = LineString(piece)
            for sl in s_lines:
                try:
                    hit = u_line.intersection(sl)
                except Exception:
                    continue
                if hit.is_empty:
                    continue
                pts = []
                if hit.geom_type == "Point":
                    pts = [hit]
                elif hasattr(hit, "geoms"):
                    pts = [g for g in hit.geoms if g.geom_type == "Point"]
                for p in pts:
                    z = np.array([p.x, p.y])
                    if np.hypot(*(z - base)) > 1e-3:
                        return z
    return None


def _top_lyapunov(f: PlaneMap, z0, n: int = 2000,
                  transient: int = 100) -> float | None:
    """Largest Lyapunov exponent along the forward orbit of z0.

    Returns None when the orbit blows up before the average settles.
    """
    z = np.asarray(z0, dtype=float)
    v = np.array([1.0, 0.0])
    total = 0.0
    count = 0
    for i in range(transient + n):
        v = f.differential(z) @ v
        nv = float(np.hypot(v[0], v[1]))
        if not np.isfinite(nv) or nv == 0.0:
            return None
        v /= nv
        if i >= transient:
            total += math.log(nv)
            count += 1
        z = f.evaluate(z)
        if not np.isfinite(z).all() or abs(z[0]) > 1e8:
            return None
    return total / count


def quadritomie(b: float, c: float, fast: bool = False) -> QuadritomieVerdict:
    """One of four regimes for the orientation-preserving Henon map.

    (a) no fixed point; (d) homoclinic crossing of the right saddle (or the
    flipped fixed point); (b) left unstable branch of the saddle is a graph
    down to the second fixed point; (c) a certified trapped disc otherwise.

    In fast mode (parameter sweeps) the verdict rests on the attractor
    probe and the graph test alone: no trapping disc is constructed for
    case (c) and no manifold crossing is located for case (d).
    """
    if not (0.0 < b < 1.0):
        raise ValueError("quadritomie covers b in (0,1)")
    disc = (1.0 + b) ** 2 / 4.0 - c
    if disc < 0.0:
        return QuadritomieVerdict(case="NoFixedPoint",
                                  evidence={"discriminant": disc})
    f = HenonMap(b, c)
    fixed = henon_fixed_points(b, c)
    q = max(fixed, key=lambda r: r.points[0, 0])
    p = min(fixed, key=lambda r: r.points[0, 0])
    offset = 1e-3 * np.array([1.0, 0.0])
    period, tail = _attractor_probe(f, p.points[0] + offset)
    if period is None:
        period, tail = _attractor_probe(f, q.points[0] - offset)
    if not fast:
        # full mode honors the case priority: homoclinic crossings first
        for rec in sorted(fixed, key=lambda r: -r.points[0, 0]):
            if rec.is_saddle and _homoclinic_crossing(f, rec) is not None:
                return QuadritomieVerdict(
                    case="HomoclinicPositiveEntropy",
                    evidence={"saddle": rec.points[0]})
    if period is not None and period > 0:
        # an invariant graph ending at p needs real (node-like) multipliers
        # there: a focus rolls the branch into a spiral
        node_like = (period == 1
                     and np.linalg.norm(tail[0] - p.points[0]) < 1e-6
                     and abs(p.multipliers[1].imag) < 1e-9
                     and abs(p.multipliers[0].imag) < 1e-9)
        graph, curve = (_left_branch_is_graph(f, q, p.points[0, 0])
                        if node_like else (False, None))
        if graph:
            return QuadritomieVerdict(
                case="UnboundedInvariantCurve",
                evidence={"graph_to": p.points[0], "curve_points": len(curve)})
        if fast:
            return QuadritomieVerdict(case="TrappedDisc",
                                      evidence={"attractor_period": period})
        root, conv = refine_periodic(f, tail[0], period)
        if not conv:
            root = tail[0]
        orbit = np.empty((period, 2))
        orbit[0] = root
        for i in range(1, period):
            orbit[i] = f.evaluate(orbit[i - 1])
        from .orbits import classify
        rec = classify(f, orbit)
        try:
            cert = find_trapped_disc(f, rec, period)
        except CannotCertify:
            raise Unclassified(f"attractor found but no trap certifies "
                               f"(b={b}, c={c})")
        return QuadritomieVerdict(case="TrappedDisc",
                                  evidence={"trap": cert,
                                            "attractor_period": period})
    if fast:
        if period == 0:
            # bounded aperiodic orbits near the doubling accumulation are
            # still trapped (infinitely renormalizable); only genuine
            # stretching makes this case (d)
            lam = _top_lyapunov(f, tail[-1])
            if lam is not None and lam <= 0.1:
                return QuadritomieVerdict(
                    case="TrappedDisc",
                    evidence={"attractor_period": 0, "lyapunov": lam})
            return QuadritomieVerdict(
                case="HomoclinicPositiveEntropy",
                evidence={"probe": "aperiodic",
                          "lyapunov": lam})
        return QuadritomieVerdict(case="HomoclinicPositiveEntropy",
                                  evidence={"probe": "escaping"})
    # chaotic or escaping dynamics: look for a homoclinic crossing
    for rec in sorted(fixed, key=lambda r: -r.points[0, 0]):
        if not rec.is_saddle:
            continue
        z = _homoclinic_crossing(f, rec)
        if z is not None:
            return QuadritomieVerdict(case="HomoclinicPositiveEntropy",
                                      evidence={"crossing_point": z,
                                                "saddle": rec.points[0]})
    # resolution tiebreak: measure curve growth of the saddle's branch
    for rec in sorted(fixed, key=lambda r: -r.points[0, 0]):
        if not rec.is_saddle:
            continue
        try:
            cur = grow_unstable(f, rec, -1, target_length=30.0,
                                allow_escape=True)
        except Exception:
            continue
        slope, _ = curve_growth_estimate(f, cur.polyline.vertices, f.domain,
                                         n=10, gap=5e-3, max_vertices=30000)
        if slope > 0.1:
            return QuadritomieVerdict(case="HomoclinicPositiveEntropy",
                                      evidence={"crossing_point": None,
                                                "growth_rate": slope})
        try:
            cert = _invariant_cloud_trap(f, cur.cloud(), 1)
        except Exception:
            cert = None
        if cert is not None:
            return QuadritomieVerdict(case="TrappedDisc",
                                      evidence={"trap": cert,
                                                "attractor_period": 0})
    raise Unclassified(f"no case resolves at resolution limits (b={b}, c={c})")


# ---------------------------------------------------------------------------
# odometer itineraries


def odometer_itinerary(map: PlaneMap, tree: RenormNode, probe,
                       steps: int = 512) -> dict:
    """Per-level disc visitation record of a probe orbit through a cascade tree.

    At each level the probe must return to the level's disc every k steps
    exactly (the adding-machine factor); reports the deepest level at which
    this cyclicity is confirmed.
    """
    z = np.asarray(probe, dtype=float)
    chain = []
    node = tree
    while node is not None:
        if not geometry.contains(node.certificate.disc, z, tol=0.0):
            break
        chain.append(node)
        node = node.children[0] if node.children else None
    if not chain:
        raise ProbeEscapesTree("probe is outside the root disc")
    orbit = np.empty((steps, 2))
    cur = z
    for t in range(steps):
        orbit[t] = cur
        with np.errstate(over="ignore", invalid="ignore"):
            cur = map.evaluate(cur)
        if not np.isfinite(cur).all():
            raise ProbeEscapesTree(f"probe orbit blew up at step {t}")
    levels = []
    deepest = 0
    for li, node in enumerate(chain):
        k = node.absolute_period
        inside = geometry.contains_many(node.certificate.disc, orbit, tol=0.0)
        visits = np.flatnonzero(inside)
        cyclic = (len(visits) >= 2 and visits[0] == 0
                  and bool(np.all(np.diff(visits) == k)))
        levels.append({"period": k, "cyclic": cyclic,
                       "visits": int(len(visits))})
        if cyclic:
            deepest = li + 1
    return {"levels": levels, "deepest_cyclic_level": deepest,
            "steps": steps}
