import math

import numpy as np
import pytest

from ddlab.dissipation import (curve_growth_estimate, entropy_estimate,
                               gamma_dissipation_check, pesin_constants,
                               pesin_constants_from, separated_orbit_estimate,
                               small_jacobian_constants)
from ddlab.errors import InvalidAlpha, InvalidGamma
from ddlab.manifolds import grow_unstable
from ddlab.maps import HenonMap, PlaneMap, Rectangle
from ddlab.orbits import henon_fixed_points


class LinearMap(PlaneMap):
    """Constant-differential map for closed-form checks."""

    kind = "linear"

    def __init__(self, A):
        self.A = np.asarray(A, dtype=float)
        self.b = float(np.linalg.det(self.A))
        self.domain = Rectangle(-10, 10, -10, 10)

    def evaluate(self, p):
        return self.A @ np.asarray(p, dtype=float)

    def differential(self, p):
        return self.A.copy()


def test_pesin_constants_from_synthetic_values():
    D, m, alpha = 0.5, 0.1, 0.6
    pc = pesin_constants_from(D, m, alpha)
    assert pc.sigma_tilde == pytest.approx(m, abs=1e-12)
    assert pc.rho_tilde == pytest.approx(m * m / D, abs=1e-12)
    assert pc.sigma == pytest.approx(D ** (1 - alpha / 3), abs=1e-12)
    assert pc.rho == pytest.approx(pc.sigma, abs=1e-12)
    lhs = (pc.rho_tilde * pc.sigma_tilde) / (pc.rho * pc.sigma)
    assert pc.condition_holds == (lhs > pc.sigma ** alpha)
    f1 = (-alpha / 3 * math.log(D)) / \
        ((1 - alpha / 3) * math.log(D) - math.log(m))
    f2 = (-alpha / 3 * math.log(D)) / \
        ((2 - alpha / 3) * math.log(D) - 2 * math.log(m))
    assert pc.fraction_bounds[0] == pytest.approx(f1, abs=1e-12)
    assert pc.fraction_bounds[1] == pytest.approx(f2, abs=1e-12)


def test_pesin_condition_truth_table():
    # strong contraction with a mild stable direction: condition holds
    assert pesin_constants_from(1e-3, 0.5, 0.9).condition_holds
    # near-conservative with a tiny singular value: condition fails
    assert not pesin_constants_from(0.9, 1e-3, 0.9).condition_holds


def test_pesin_constants_on_constant_matrix():
    A = np.array([[0.9, 0.0], [0.0, 0.05]])
    f = LinearMap(A)
    K = np.random.default_rng(0).uniform(-1, 1, (30, 2))
    pc = pesin_constants(f, K, alpha=0.5)
    ref = pesin_constants_from(abs(np.linalg.det(A)), 0.05, 0.5)
    assert pc.D_sup == pytest.approx(ref.D_sup, abs=1e-12)
    assert pc.m_inf == pytest.approx(ref.m_inf, abs=1e-12)
    assert pc.condition_holds == ref.condition_holds


def test_pesin_rejects_bad_alpha():
    with pytest.raises(InvalidAlpha):
        pesin_constants_from(0.5, 0.1, 0.0)
    with pytest.raises(InvalidAlpha):
        pesin_constants_from(0.5, 0.1, 1.5)


def test_gamma_dissipation_on_linear_map():
    # |det A^n| = 0.045^n, smallest singular value 0.05^n:
    # 0.045^n < (0.05^n)^0.5 holds from n = 1
    f = LinearMap(np.diag([0.9, 0.05]))
    ok, n = gamma_dissipation_check(f, np.zeros((4, 2)), gamma=0.5)
    assert ok and n == 1


def test_gamma_dissipation_rejects_bad_gamma():
    with pytest.raises(InvalidGamma):
        gamma_dissipation_check(LinearMap(np.eye(2) * 0.5),
                                np.zeros((1, 2)), gamma=1.5)


def test_gamma_dissipation_on_henon_orbit():
    f = HenonMap(0.1, -1.3)
    K = f.iterate([0.1, 0.0], 300).points[200:]
    ok, n = gamma_dissipation_check(f, K, gamma=0.5, n_max=64)
    assert ok and n <= 64


def test_small_jacobian_constants():
    out = small_jacobian_constants(4.0, b=0.01)
    assert out["K"] == 4.0
    assert out["L"] == 400.0
    assert out["sigma"] == pytest.approx(4.0)


def test_curve_growth_zero_for_contracting_map():
    f = LinearMap(np.diag([0.5, 0.5]))
    xs = np.linspace(-1, 1, 200)
    verts = np.column_stack([xs, 0 * xs])
    h, info = curve_growth_estimate(f, verts, f.domain, n=8)
    assert h <= 1e-6


def test_curve_growth_positive_for_horseshoe():
    f = HenonMap(0.1, -3.0)
    q = max(henon_fixed_points(0.1, -3.0), key=lambda r: r.points[0, 0])
    cur = grow_unstable(f, q, -1, target_length=2.0, allow_escape=True)
    h, info = curve_growth_estimate(f, cur.polyline.vertices, cur.box, n=8,
                                    max_vertices=60000)
    assert h > 0.4


def test_separated_orbit_estimate_bounded():
    f = HenonMap(0.1, -1.3)
    pts = f.iterate([0.1, 0.0], 200).points[100:]
    h, info = separated_orbit_estimate(f, pts, f.domain, n=16, eps=1e-2)
    assert 0.0 <= h < 0.2


def test_entropy_estimate_reports_method():
    f = HenonMap(0.1, -3.0)
    q = max(henon_fixed_points(0.1, -3.0), key=lambda r: r.points[0, 0])
    cur = grow_unstable(f, q, -1, target_length=2.0, allow_escape=True)
    est = entropy_estimate(f, cur, n=8)
    assert est.method in ("CurveGrowth", "SeparatedOrbits")
    assert est.value > 0.4
