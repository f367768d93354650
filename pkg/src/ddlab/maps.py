"""Map families under study: the Henon family and 1D-endomorphism extensions.

All maps expose the same surface: ``evaluate``, ``inverse``, ``differential``
and bounded-domain ``iterate`` with escape detection.  Coordinates are plain
numpy arrays of shape (2,); batched variants take arrays of shape (N, 2).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .errors import NotInvertible, NumericOverflow

OVERFLOW_LIMIT = 1e12


@dataclass(frozen=True)
class Rectangle:
    """Axis-aligned rectangle in plane units."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError("degenerate rectangle")

    def contains(self, p, tol: float = 0.0) -> bool:
        return (self.x_min - tol <= p[0] <= self.x_max + tol
                and self.y_min - tol <= p[1] <= self.y_max + tol)

    def contains_many(self, pts: np.ndarray, tol: float = 0.0) -> np.ndarray:
        return ((pts[:, 0] >= self.x_min - tol) & (pts[:, 0] <= self.x_max + tol)
                & (pts[:, 1] >= self.y_min - tol) & (pts[:, 1] <= self.y_max + tol))

    def corners(self) -> np.ndarray:
        return np.array([[self.x_min, self.y_min], [self.x_max, self.y_min],
                         [self.x_max, self.y_max], [self.x_min, self.y_max]])

    def sample_boundary(self, n: int) -> np.ndarray:
        """n points distributed along the boundary, proportional to edge length."""
        c = self.corners()
        edges = [(c[i], c[(i + 1) % 4]) for i in range(4)]
        lengths = np.array([np.hypot(*(b - a)) for a, b in edges])
        counts = np.maximum(1, np.round(n * lengths / lengths.sum()).astype(int))
        pts = []
        for (a, b), m in zip(edges, counts):
            t = np.linspace(0.0, 1.0, m, endpoint=False)[:, None]
            pts.append(a + t * (b - a))
        return np.vstack(pts)

    def grid(self, nx: int, ny: int) -> np.ndarray:
        xs = np.linspace(self.x_min, self.x_max, nx)
        ys = np.linspace(self.y_min, self.y_max, ny)
        gx, gy = np.meshgrid(xs, ys)
        return np.column_stack([gx.ravel(), gy.ravel()])


@dataclass(frozen=True)
class EscapeCones:
    """Forward/backward escape cones |x| >= R, |y| <=/>= slope*|x|."""

    R: float
    slope: float  # sqrt(|b|)

    def in_forward(self, p) -> bool:
        return abs(p[0]) >= self.R and abs(p[1]) <= self.slope * abs(p[0])

    def in_backward(self, p) -> bool:
        return abs(p[0]) >= self.R and abs(p[1]) >= self.slope * abs(p[0])


@dataclass
class OrbitSample:
    """A stretch of forward orbit, possibly cut short by escape."""

    points: np.ndarray  # (m, 2)
    escaped: bool
    escape_step: int | None = None


class SampledEndomorphism:
    """A C^2 interval map stored as breakpoint samples (x, h(x), h'(x)).

    Evaluation uses cubic Hermite interpolation between breakpoints, so an
    arbitrary smooth endomorphism can be loaded from a plain text file with
    one ``x h hp`` triple per line, ascending in x.
    """

    def __init__(self, x: np.ndarray, h: np.ndarray, hp: np.ndarray):
        x = np.asarray(x, dtype=float)
        h = np.asarray(h, dtype=float)
        hp = np.asarray(hp, dtype=float)
        if x.ndim != 1 or len(x) < 2:
            raise ValueError("need at least two breakpoints")
        if np.any(np.diff(x) <= 0):
            raise ValueError("breakpoints must be strictly increasing in x")
        if not (np.isfinite(h).all() and np.isfinite(hp).all()):
            raise ValueError("non-finite breakpoint data")
        self.x = x
        self.h = h
        self.hp = hp
        self._spline = CubicHermiteSpline(x, h, hp)
        self._dspline = self._spline.derivative()

    @property
    def interval(self) -> tuple[float, float]:
        return float(self.x[0]), float(self.x[-1])

    def __call__(self, x):
        return self._spline(x)

    def derivative(self, x):
        return self._dspline(x)

    @classmethod
    def from_file(cls, path) -> "SampledEndomorphism":
        data = np.loadtxt(path, ndmin=2)
        if data.shape[1] != 3:
            raise ValueError("expected three columns: x h(x) h'(x)")
        return cls(data[:, 0], data[:, 1], data[:, 2])

    @classmethod
    def from_callable(cls, h, dh, interval, n: int = 257) -> "SampledEndomorphism":
        xs = np.linspace(interval[0], interval[1], n)
        return cls(xs, np.array([h(x) for x in xs]), np.array([dh(x) for x in xs]))


class PlaneMap:
    """Common surface of the plane maps; concrete families subclass this."""

    kind: str
    b: float
    domain: Rectangle

    def evaluate(self, p) -> np.ndarray:
        raise NotImplementedError

    def evaluate_many(self, pts: np.ndarray) -> np.ndarray:
        return np.array([self.evaluate(p) for p in pts])

    def inverse(self, p) -> np.ndarray:
        raise NotInvertible(f"{self.kind} has no closed-form inverse")

    def inverse_many(self, pts: np.ndarray) -> np.ndarray:
        return np.array([self.inverse(p) for p in pts])

    def differential(self, p) -> np.ndarray:
        raise NotImplementedError

    def differential_many(self, pts: np.ndarray) -> np.ndarray:
        return np.array([self.differential(p) for p in pts])

    def __call__(self, p):
        return self.evaluate(p)

    def iterate(self, p, n: int, cones: EscapeCones | None = None) -> OrbitSample:
        """Up to n forward steps; stops early on leaving the domain or
        entering the forward escape cone."""
        if n < 0:
            raise ValueError("n must be >= 0")
        p = np.asarray(p, dtype=float)
        pts = [p.copy()]
        escaped = False
        escape_step = None
        for k in range(n):
            p = self.evaluate(p)
            if np.max(np.abs(p)) > OVERFLOW_LIMIT:
                raise NumericOverflow(f"iterate exceeded {OVERFLOW_LIMIT:g} at step {k + 1}")
            pts.append(p.copy())
            if not self.domain.contains(p) or (cones is not None and cones.in_forward(p)):
                escaped = True
                escape_step = k + 1
                break
        return OrbitSample(points=np.array(pts), escaped=escaped, escape_step=escape_step)

    def power(self, m: int) -> "PlaneMap":
        return IteratedMap(self, m)


def _default_henon_domain(b: float, c: float) -> Rectangle:
    # generous box past both fixed points and the escape cone apex
    r = max(2.0, (1 + abs(b)) / 2 + np.sqrt((1 + abs(b)) ** 2 / 4 + abs(c)) + 1.0)
    s = np.sqrt(abs(b)) * r
    return Rectangle(-r, 2 * r * r, -max(s, 1.0), max(s, 1.0))


class HenonMap(PlaneMap):
    """f(x, y) = (x^2 + c + y, -b x); the Jacobian determinant is b everywhere."""

    kind = "henon"

    def __init__(self, b: float, c: float, domain: Rectangle | None = None):
        if not abs(b) < 1:
            raise ValueError("dissipation requires |b| < 1")
        self.b = float(b)
        self.c = float(c)
        self.domain = domain if domain is not None else _default_henon_domain(b, c)

    def evaluate(self, p):
        x, y = p[0], p[1]
        out = np.array([x * x + self.c + y, -self.b * x])
        if not np.isfinite(out).all():
            raise NumericOverflow("non-finite image")
        return out

    def evaluate_many(self, pts):
        x, y = pts[:, 0], pts[:, 1]
        return np.column_stack([x * x + self.c + y, -self.b * x])

    def inverse(self, p):
        if self.b == 0:
            raise NotInvertible("b = 0")
        x, y = p[0], p[1]
        return np.array([-y / self.b, x - (y / self.b) ** 2 - self.c])

    def inverse_many(self, pts):
        if self.b == 0:
            raise NotInvertible("b = 0")
        x, y = pts[:, 0], pts[:, 1]
        u = -y / self.b
        return np.column_stack([u, x - u * u - self.c])

    def differential(self, p):
        return np.array([[2.0 * p[0], 1.0], [-self.b, 0.0]])

    def differential_many(self, pts):
        n = len(pts)
        out = np.empty((n, 2, 2))
        out[:, 0, 0] = 2.0 * pts[:, 0]
        out[:, 0, 1] = 1.0
        out[:, 1, 0] = -self.b
        out[:, 1, 1] = 0.0
        return out

    def __repr__(self):
        return f"HenonMap(b={self.b}, c={self.c})"


class Extension1DMap(PlaneMap):
    """Planar extension of a 1D endomorphism h on the strip I x (-eps, eps).

    Two variants are supported:
      * ``intro``: f(x, y) = (h(x) + y, -b x)
      * ``cp``:    f(x, y) = (h(x) + y, b (h(x) - x + y))
    Both have constant Jacobian determinant b.
    """

    kind = "extension1d"

    def __init__(self, h: SampledEndomorphism, b: float, variant: str = "intro",
                 eps: float | None = None):
        if not abs(b) < 1:
            raise ValueError("dissipation requires |b| < 1")
        if variant not in ("intro", "cp"):
            raise ValueError("variant must be 'intro' or 'cp'")
        self.h = h
        self.b = float(b)
        self.variant = variant
        lo, hi = h.interval
        # the strip half-height is not pinned down by the construction;
        # default to 5% of the interval length
        if eps is None:
            eps = 0.05 * (hi - lo)
        self.eps = float(eps)
        self.domain = Rectangle(lo, hi, -eps, eps)

    def evaluate(self, p):
        x, y = p[0], p[1]
        hx = float(self.h(x))
        if self.variant == "intro":
            out = np.array([hx + y, -self.b * x])
        else:
            out = np.array([hx + y, self.b * (hx - x + y)])
        if not np.isfinite(out).all():
            raise NumericOverflow("non-finite image")
        return out

    def evaluate_many(self, pts):
        x, y = pts[:, 0], pts[:, 1]
        hx = self.h(x)
        if self.variant == "intro":
            return np.column_stack([hx + y, -self.b * x])
        return np.column_stack([hx + y, self.b * (hx - x + y)])

    def differential(self, p):
        hp = float(self.h.derivative(p[0]))
        if self.variant == "intro":
            return np.array([[hp, 1.0], [-self.b, 0.0]])
        return np.array([[hp, 1.0], [self.b * (hp - 1.0), self.b]])

    def differential_many(self, pts):
        hp = self.h.derivative(pts[:, 0])
        n = len(pts)
        out = np.empty((n, 2, 2))
        out[:, 0, 0] = hp
        out[:, 0, 1] = 1.0
        if self.variant == "intro":
            out[:, 1, 0] = -self.b
            out[:, 1, 1] = 0.0
        else:
            out[:, 1, 0] = self.b * (hp - 1.0)
            out[:, 1, 1] = self.b
        return out

    def __repr__(self):
        return f"Extension1DMap(b={self.b}, variant={self.variant!r})"


class IteratedMap(PlaneMap):
    """f^m as a map with the same surface (used for return maps)."""

    def __init__(self, base: PlaneMap, m: int):
        if m < 1:
            raise ValueError("m must be >= 1")
        self.base = base
        self.m = m
        self.kind = f"{base.kind}^{m}"
        self.b = base.b ** m
        self.domain = base.domain

    def evaluate(self, p):
        for _ in range(self.m):
            p = self.base.evaluate(p)
        return p

    def evaluate_many(self, pts):
        for _ in range(self.m):
            pts = self.base.evaluate_many(pts)
        return pts

    def inverse(self, p):
        for _ in range(self.m):
            p = self.base.inverse(p)
        return p

    def inverse_many(self, pts):
        for _ in range(self.m):
            pts = self.base.inverse_many(pts)
        return pts

    def differential(self, p):
        jac = np.eye(2)
        for _ in range(self.m):
            jac = self.base.differential(p) @ jac
            p = self.base.evaluate(p)
        return jac

    def differential_many(self, pts):
        n = len(pts)
        jac = np.broadcast_to(np.eye(2), (n, 2, 2)).copy()
        for _ in range(self.m):
            jac = self.base.differential_many(pts) @ jac
            pts = self.base.evaluate_many(pts)
        return jac


def orbit_differential(map: PlaneMap, points: np.ndarray) -> np.ndarray:
    """Product of Df along a cycle, Df(p_{n-1})...Df(p_0)."""
    jac = np.eye(2)
    for p in points:
        jac = map.differential(p) @ jac
    return jac
