"""Quantitative dissipation diagnostics and entropy estimation.

Two entropy estimators are provided: growth rate of the arc length of an
iterated curve, and growth rate of greedy (n,eps)-separated orbit counts
seeded on that curve.  Both are reported as least-squares slopes in log
scale so that transient spatial capacity does not pollute the estimate;
the headline value is the larger of the two.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import CurveEscaped, InvalidAlpha, InvalidGamma
from .manifolds import CurveSegment, _inside_length, _refined_image
from .maps import PlaneMap, Rectangle


@dataclass
class PesinConstants:
    D_sup: float
    m_inf: float
    sigma_tilde: float
    rho_tilde: float
    sigma: float
    rho: float
    alpha: float
    gamma: float
    condition_holds: bool
    fraction_bounds: tuple[float, float]

    def to_dict(self) -> dict:
        return {
            "D_sup": self.D_sup, "m_inf": self.m_inf,
            "sigma_tilde": self.sigma_tilde, "rho_tilde": self.rho_tilde,
            "sigma": self.sigma, "rho": self.rho, "alpha": self.alpha,
            "gamma": self.gamma, "pesin_condition_holds": self.condition_holds,
            "fraction_bounds": list(self.fraction_bounds),
        }


@dataclass
class EntropyEstimate:
    value: float
    method: str                  # 'CurveGrowth' | 'SeparatedOrbits'
    n_used: int
    eps_used: float
    details: dict = field(default_factory=dict)


def _cocycle_products(map: PlaneMap, pts: np.ndarray, n: int):
    """log|det Df^n| and log s_min, log s_max of Df^n at each point."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    m = len(pts)
    P = np.repeat(np.eye(2)[None], m, axis=0)
    log_scale = np.zeros(m)
    log_det = np.zeros(m)
    q = pts.copy()
    for _ in range(n):
        A = map.differential_many(q)
        log_det += np.log(np.abs(A[:, 0, 0] * A[:, 1, 1] - A[:, 0, 1] * A[:, 1, 0]))
        P = A @ P
        nrm = np.sqrt(np.sum(P * P, axis=(1, 2)))
        P /= nrm[:, None, None]
        log_scale += np.log(nrm)
        with np.errstate(over="ignore", invalid="ignore"):
            q = map.evaluate_many(q)
        if not np.isfinite(q).all():
            raise CurveEscaped("sample orbit left the bounded region")
    s = np.linalg.svd(P, compute_uv=False)
    log_smax = np.log(s[:, 0]) + log_scale
    log_smin = np.log(np.maximum(s[:, 1], 1e-300)) + log_scale
    return log_det, log_smin, log_smax


def gamma_dissipation_check(map: PlaneMap, K: np.ndarray, gamma: float,
                            n_max: int = 64, margin: float = 1e-12):
    """Least n with |det Df^n(y)| < |Df^n(x)u|^gamma across all sampled pairs.

    u is the most-contracted unit vector at x, so |Df^n(x)u| is the smallest
    singular value of the n-step cocycle.
    """
    if not (0.0 < gamma < 1.0):
        raise InvalidGamma(f"gamma={gamma} outside (0,1)")
    K = np.atleast_2d(np.asarray(K, dtype=float))
    for n in range(1, n_max + 1):
        log_det, log_smin, _ = _cocycle_products(map, K, n)
        lhs = np.exp(np.max(log_det))
        rhs = np.exp(gamma * np.min(log_smin))
        if rhs - lhs >= margin:
            return True, n
    return False, None


def pesin_constants(map: PlaneMap, K: np.ndarray, alpha: float,
                    gamma: float = 0.5) -> PesinConstants:
    """Hyperbolic-block constants from one-step extremes over a sample."""
    if not (0.0 < alpha <= 1.0):
        raise InvalidAlpha(f"alpha={alpha} outside (0,1]")
    K = np.atleast_2d(np.asarray(K, dtype=float))
    A = map.differential_many(K)
    dets = np.abs(A[:, 0, 0] * A[:, 1, 1] - A[:, 0, 1] * A[:, 1, 0])
    s = np.linalg.svd(A, compute_uv=False)
    D = float(np.max(dets))
    m = float(np.min(s[:, 1]))   # inf of 1/|Df^-1| = smallest singular value
    return pesin_constants_from(D, m, alpha, gamma)


def pesin_constants_from(D: float, m: float, alpha: float,
                         gamma: float = 0.5) -> PesinConstants:
    """Constants and Pliss-fraction bounds from given one-step extremes."""
    if not (0.0 < alpha <= 1.0):
        raise InvalidAlpha(f"alpha={alpha} outside (0,1]")
    sigma_tilde = m
    rho_tilde = m * m / D
    sigma = D ** (1.0 - alpha / 3.0)
    rho = sigma
    condition = (rho_tilde * sigma_tilde) / (rho * sigma) > sigma ** alpha
    logD, logm = np.log(D), np.log(m)
    frac1 = (-alpha / 3.0 * logD) / ((1.0 - alpha / 3.0) * logD - logm)
    frac2 = (-alpha / 3.0 * logD) / ((2.0 - alpha / 3.0) * logD - 2.0 * logm)
    return PesinConstants(D_sup=D, m_inf=m, sigma_tilde=sigma_tilde,
                          rho_tilde=rho_tilde, sigma=sigma, rho=rho, alpha=alpha,
                          gamma=gamma, condition_holds=bool(condition),
                          fraction_bounds=(float(frac1), float(frac2)))


def small_jacobian_constants(h_sup_derivative: float, b: float,
                             L_factor: float = 100.0) -> dict:
    """Constants for the strongly dissipative extension regime.

    K bounds the 1D derivative; L is taken as a fixed multiple of K (the
    required separation is qualitative, the factor is configurable).
    """
    K = max(1.0, float(h_sup_derivative))
    L = L_factor * K
    return {"K": K, "L": L, "sigma": L * abs(b)}


def _tail_slope(ks: np.ndarray, logs: np.ndarray) -> float:
    """LSQ slope over the later half of a log-growth sequence."""
    if len(ks) < 3:
        return 0.0
    half = len(ks) // 2
    k, y = ks[half:], logs[half:]
    if len(k) < 2:
        return 0.0
    return float(np.polyfit(k, y, 1)[0])


def curve_growth_estimate(map: PlaneMap, vertices: np.ndarray, box: Rectangle,
                          n: int, gap: float = 2e-3,
                          max_vertices: int = 400000) -> tuple[float, dict]:
    """Arc-length growth rate of an iterated curve clipped to a window."""
    cur = np.asarray(vertices, dtype=float)
    inside = box.contains_many(cur)
    lengths = [_inside_length(cur, inside)]
    for _ in range(n):
        img = _refined_image(map, cur, gap, box, max_points=max_vertices)
        finite = np.isfinite(img).all(axis=1)
        inside = np.zeros(len(img), dtype=bool)
        inside[finite] = box.contains_many(img[finite])
        far = np.zeros(len(img), dtype=bool)
        far[finite] = ~Rectangle(box.x_min - 10, box.x_max + 10,
                                 box.y_min - 10, box.y_max + 10
                                 ).contains_many(img[finite])
        img = img.copy()
        img[far | ~finite] = np.nan
        lengths.append(_inside_length(img, inside))
        if len(img) >= max_vertices or lengths[-1] == 0.0:
            break
        cur = img
    L = np.array(lengths)
    ok = L > 0
    ks = np.flatnonzero(ok)
    slope = _tail_slope(ks, np.log(L[ok]))
    return max(0.0, slope), {"lengths": [float(v) for v in L]}


def separated_orbit_estimate(map: PlaneMap, points: np.ndarray, box: Rectangle,
                             n: int, eps: float,
                             max_pool: int = 4096) -> tuple[float, dict]:
    """Growth rate of greedy (k,eps)-separated orbit counts, k = 1..n.

    Orbits are followed until they leave a neighborhood of the window; two
    orbits count as separated when their positions differ by more than eps
    before the common escape horizon, or when their escape times within the
    horizon differ (distinct itineraries).
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if len(pts) > max_pool:
        stride = int(np.ceil(len(pts) / max_pool))
        pts = pts[::stride]
    near = Rectangle(box.x_min - 1, box.x_max + 1, box.y_min - 1, box.y_max + 1)
    m = len(pts)
    orbits = np.full((m, n, 2), np.nan)
    T = np.full(m, n)            # escape step (n = survived the horizon)
    q = pts.copy()
    alive = np.ones(m, dtype=bool)
    for j in range(n):
        orbits[alive, j] = q[alive]
        with np.errstate(over="ignore", invalid="ignore"):
            qn = map.evaluate_many(q[alive])
        ok = np.isfinite(qn).all(axis=1)
        ok[ok] = near.contains_many(qn[ok])
        idx = np.flatnonzero(alive)
        q[idx[ok]] = qn[ok]
        T[idx[~ok]] = j + 1
        alive[idx[~ok]] = False
    if T.max() < 1:
        raise CurveEscaped("no seed orbit survives a single step")
    counts = []
    ks = sorted(set(list(range(1, n + 1, 2)) + [n]))
    for k in ks:
        kept_orb = np.empty((0, k, 2))
        kept_T = np.empty(0, dtype=int)
        steps = np.arange(k)
        for i in range(m):
            Ti = min(T[i], k)
            if len(kept_orb) == 0:
                kept_orb = orbits[i, None, :k]
                kept_T = np.array([Ti])
                continue
            kT = np.minimum(kept_T, k)
            sep = kT != Ti
            h = np.minimum(kT, Ti)          # common horizon per kept orbit
            d2 = ((kept_orb - orbits[i, None, :k]) ** 2).sum(axis=2)
            d2 = np.where(steps[None, :] < h[:, None], d2, -1.0)
            sep |= d2.max(axis=1) > eps * eps
            if sep.all():
                kept_orb = np.concatenate([kept_orb, orbits[i, None, :k]])
                kept_T = np.concatenate([kept_T, [Ti]])
        counts.append(len(kept_orb))
    counts = np.array(counts, dtype=float)
    # fit only while the greedy count is still resolving new orbits
    usable = counts < 0.5 * m
    if usable.sum() >= 3:
        slope = _tail_slope(np.array(ks)[usable], np.log(counts[usable]))
    else:
        slope = _tail_slope(np.array(ks), np.log(counts))
    return max(0.0, slope), {"ks": ks, "counts": [int(c) for c in counts],
                             "pool": int(m)}


def entropy_estimate(map: PlaneMap, seed_curve: CurveSegment, n: int = 16,
                     eps: float = 1e-2) -> EntropyEstimate:
    """Topological entropy estimate from an unstable seed curve.

    Both estimators are lower-bound flavored; the headline is the larger.
    """
    verts = seed_curve.polyline.vertices
    if len(verts) < 2:
        raise CurveEscaped("seed curve has no length")
    box = seed_curve.box
    cg, cg_info = curve_growth_estimate(map, verts, box, n)
    from .geometry import resample_polyline
    pool = resample_polyline(verts, spacing=max(eps / 4, 1e-6), max_points=4096)
    cloud = seed_curve.cloud()
    if len(cloud) > len(pool):
        # deep folds of the branch supply orbits that survive the horizon
        stride = max(1, len(cloud) // 8192)
        pool = np.vstack([pool, cloud[::stride]])
    so, so_info = separated_orbit_estimate(map, pool, box, n, eps)
    if cg >= so:
        return EntropyEstimate(value=cg, method="CurveGrowth", n_used=n,
                               eps_used=eps, details={"curve_growth": cg_info,
                                                      "separated": so_info,
                                                      "other_value": so})
    return EntropyEstimate(value=so, method="SeparatedOrbits", n_used=n,
                           eps_used=eps, details={"curve_growth": cg_info,
                                                  "separated": so_info,
                                                  "other_value": cg})
