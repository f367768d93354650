"""Planar primitives shared by all analyses.

Polygons are simple, counterclockwise, and tolerance-based: boundary points
within 1e-12 count as inside, curve endpoints count as on the boundary within
1e-6 (the same tolerance used when clipping manifolds against a disc model).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import shapely
from scipy.spatial.distance import directed_hausdorff
from shapely.geometry import LineString

from .errors import CurvesIntersect, EmptySet, EndpointNotOnBoundary

BOUNDARY_TOL = 1e-6
CONTAIN_TOL = 1e-12


class Polygon:
    """Simple polygon, stored counterclockwise (auto-reoriented)."""

    def __init__(self, vertices):
        v = np.asarray(vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
            raise ValueError("need at least three plane points")
        if np.allclose(v[0], v[-1]):
            v = v[:-1]
        if len(v) < 3:
            raise ValueError("need at least three distinct vertices")
        if signed_area(v) < 0:
            v = v[::-1].copy()
        self.vertices = v
        self._shapely = shapely.Polygon(v)
        if not self._shapely.is_valid:
            raise ValueError("polygon is not simple")

    @property
    def area(self) -> float:
        return signed_area(self.vertices)

    @property
    def shapely(self):
        return self._shapely

    def closed_vertices(self) -> np.ndarray:
        return np.vstack([self.vertices, self.vertices[:1]])

    def boundary_distance(self, p) -> float:
        return float(self._shapely.exterior.distance(shapely.Point(p)))

    def sample_boundary(self, n: int) -> np.ndarray:
        """n points equally spaced in arc length along the boundary."""
        ring = self.closed_vertices()
        seg = np.diff(ring, axis=0)
        lens = np.hypot(seg[:, 0], seg[:, 1])
        cum = np.concatenate([[0.0], np.cumsum(lens)])
        total = cum[-1]
        t = np.linspace(0.0, total, n, endpoint=False)
        idx = np.searchsorted(cum, t, side="right") - 1
        idx = np.clip(idx, 0, len(lens) - 1)
        frac = (t - cum[idx]) / lens[idx]
        return ring[idx] + frac[:, None] * seg[idx]

    def __repr__(self):
        return f"Polygon(<{len(self.vertices)} vertices>)"


@dataclass
class Polyline:
    """Oriented polyline with distinct consecutive vertices."""

    vertices: np.ndarray
    closed: bool = False

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or len(v) < 2:
            raise ValueError("need at least two plane points")
        if not np.isfinite(v).all():
            raise ValueError("non-finite vertex")
        keep = np.ones(len(v), dtype=bool)
        keep[1:] = np.any(v[1:] != v[:-1], axis=1)
        self.vertices = v[keep]

    @property
    def length(self) -> float:
        seg = np.diff(self.vertices, axis=0)
        return float(np.hypot(seg[:, 0], seg[:, 1]).sum())


@dataclass
class SeparationVerdict:
    separates: bool
    side_counts: tuple[int, int]


def signed_area(v: np.ndarray) -> float:
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def contains(poly: Polygon, p, tol: float = CONTAIN_TOL) -> bool:
    """Winding-number point-in-polygon test; boundary points count as inside."""
    v = poly.vertices
    a = v
    b = np.roll(v, -1, axis=0)
    px, py = float(p[0]), float(p[1])
    # boundary proximity
    ab = b - a
    ap = np.column_stack([px - a[:, 0], py - a[:, 1]])
    denom = np.einsum("ij,ij->i", ab, ab)
    t = np.clip(np.einsum("ij,ij->i", ap, ab) / denom, 0.0, 1.0)
    closest = a + t[:, None] * ab
    d2 = (closest[:, 0] - px) ** 2 + (closest[:, 1] - py) ** 2
    if d2.min() <= tol * tol:
        return True
    wind = 0
    cross = ab[:, 0] * (py - a[:, 1]) - (px - a[:, 0]) * ab[:, 1]
    up = (a[:, 1] <= py) & (b[:, 1] > py) & (cross > 0)
    dn = (a[:, 1] > py) & (b[:, 1] <= py) & (cross < 0)
    wind = int(up.sum()) - int(dn.sum())
    return wind != 0


def contains_many(poly: Polygon, pts: np.ndarray, tol: float = CONTAIN_TOL) -> np.ndarray:
    geoms = shapely.points(pts)
    inside = shapely.contains(poly.shapely, geoms)
    near = shapely.dwithin(poly.shapely.exterior, geoms, tol)
    return inside | near


def _boundary_param(poly: Polygon, p) -> float:
    """Arc-length parameter of the boundary point closest to p."""
    ring = poly.closed_vertices()
    seg = np.diff(ring, axis=0)
    lens = np.hypot(seg[:, 0], seg[:, 1])
    cum = np.concatenate([[0.0], np.cumsum(lens)])
    ap = np.asarray(p, dtype=float) - ring[:-1]
    denom = lens ** 2
    t = np.clip(np.einsum("ij,ij->i", ap, seg) / denom, 0.0, 1.0)
    closest = ring[:-1] + t[:, None] * seg
    d2 = np.einsum("ij,ij->i", closest - np.asarray(p), closest - np.asarray(p))
    i = int(np.argmin(d2))
    return float(cum[i] + t[i] * lens[i])


def _boundary_arc(poly: Polygon, s_from: float, s_to: float) -> np.ndarray:
    """Boundary vertices walked forward (ccw) from parameter s_from to s_to."""
    ring = poly.closed_vertices()
    seg = np.diff(ring, axis=0)
    lens = np.hypot(seg[:, 0], seg[:, 1])
    cum = np.concatenate([[0.0], np.cumsum(lens)])
    total = cum[-1]

    def point_at(s):
        s = s % total
        i = min(int(np.searchsorted(cum, s, side="right")) - 1, len(lens) - 1)
        return ring[i] + (s - cum[i]) / lens[i] * seg[i]

    target = (s_to - s_from) % total
    inner = sorted((float((cum[i] - s_from) % total), i) for i in range(len(lens)))
    pts = [point_at(s_from)]
    pts.extend(ring[i] for r, i in inner if 1e-12 < r < target - 1e-12)
    pts.append(point_at(s_to))
    return np.array(pts)


def split_region(curve: Polyline, region: Polygon, tol: float = BOUNDARY_TOL):
    """Split a region by a spanning curve into its two closed pieces.

    The curve endpoints must lie on the region boundary (within tol) and the
    curve interior must stay inside.  Returns (left_piece, right_piece) as
    Polygons, where "left" is to the left of the curve orientation.
    """
    v = curve.vertices
    d0 = region.boundary_distance(v[0])
    d1 = region.boundary_distance(v[-1])
    if d0 > tol or d1 > tol:
        raise EndpointNotOnBoundary(
            f"curve endpoints at distance ({d0:.2g}, {d1:.2g}) from boundary")
    for q in v[1:-1]:
        if not contains(region, q, tol=tol):
            raise EndpointNotOnBoundary("curve interior leaves the region")
    s0 = _boundary_param(region, v[0])
    s1 = _boundary_param(region, v[-1])
    # piece A: curve then boundary walked ccw from end back to start
    arc_a = _boundary_arc(region, s1, s0)
    piece_a = Polygon(np.vstack([v, arc_a[1:-1]])) if len(arc_a) > 2 else Polygon(v)
    arc_b = _boundary_arc(region, s0, s1)
    piece_b = Polygon(np.vstack([v[::-1], arc_b[1:-1]])) if len(arc_b) > 2 else Polygon(v[::-1])
    # orient: the ccw walk from curve-end to curve-start closes the piece on
    # the left of the curve iff the assembled ring is ccw before reorientation
    mid = v[len(v) // 2]
    nxt = v[min(len(v) // 2 + 1, len(v) - 1)]
    tang = nxt - mid
    normal = np.array([-tang[1], tang[0]])
    scale = max(np.hypot(*tang), 1e-30)
    probe_left = mid + 1e-7 * normal / scale
    if contains(piece_a, probe_left, tol=0.0):
        return piece_a, piece_b
    return piece_b, piece_a


def curve_separates(curve: Polyline, region: Polygon, probes,
                    tol: float = BOUNDARY_TOL) -> SeparationVerdict:
    """Does the curve separate the probe set inside the region?"""
    left, right = split_region(curve, region, tol=tol)
    n_left = 0
    n_right = 0
    for p in np.asarray(probes, dtype=float):
        if contains(left, p, tol=0.0):
            n_left += 1
        elif contains(right, p, tol=0.0):
            n_right += 1
    return SeparationVerdict(separates=(n_left > 0 and n_right > 0),
                             side_counts=(n_left, n_right))


def parallel_triple(c1: Polyline, c2: Polyline, c3: Polyline, region: Polygon,
                    tol: float = BOUNDARY_TOL):
    """Index (1..3) of the curve separating the other two, or None.

    This is the predicate behind "parallel" families of spanning curves:
    among any three pairwise disjoint spanning curves of a parallel family,
    one separates the other two; a decorated configuration has none.
    """
    curves = [c1, c2, c3]
    lines = [LineString(c.vertices) for c in curves]
    for i in range(3):
        for j in range(i + 1, 3):
            if lines[i].distance(lines[j]) == 0.0:
                raise CurvesIntersect(f"curves {i + 1} and {j + 1} intersect")
    for i in range(3):
        others = [k for k in range(3) if k != i]
        left, right = split_region(curves[i], region, tol=tol)
        sides = []
        for k in others:
            pts = curves[k].vertices
            mid = pts[len(pts) // 2]
            sides.append(0 if contains(left, mid, tol=0.0) else 1)
        if sides[0] != sides[1]:
            return i + 1
    return None


def hausdorff(a, b) -> float:
    """Symmetric Hausdorff distance between two finite point sets."""
    a = np.asarray(a, dtype=float).reshape(-1, 2)
    b = np.asarray(b, dtype=float).reshape(-1, 2)
    if len(a) == 0 or len(b) == 0:
        raise EmptySet("hausdorff of an empty point set")
    d_ab = directed_hausdorff(a, b)[0]
    d_ba = directed_hausdorff(b, a)[0]
    return float(max(d_ab, d_ba))


def resample_polyline(vertices: np.ndarray, spacing: float,
                      max_points: int | None = None) -> np.ndarray:
    """Points equally spaced in arc length along a polyline."""
    v = np.asarray(vertices, dtype=float)
    seg = np.diff(v, axis=0)
    lens = np.hypot(seg[:, 0], seg[:, 1])
    total = lens.sum()
    if total == 0:
        return v[:1].copy()
    n = max(2, int(np.ceil(total / spacing)) + 1)
    if max_points is not None:
        n = min(n, max_points)
    cum = np.concatenate([[0.0], np.cumsum(lens)])
    t = np.linspace(0.0, total, n)
    idx = np.clip(np.searchsorted(cum, t, side="right") - 1, 0, len(lens) - 1)
    frac = np.where(lens[idx] > 0, (t - cum[idx]) / np.where(lens[idx] > 0, lens[idx], 1.0), 0.0)
    return v[idx] + frac[:, None] * seg[idx]
