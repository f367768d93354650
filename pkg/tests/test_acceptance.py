"""End-to-end behavioral guarantees, each with an explicit runtime budget."""
import time

import numpy as np
import pytest

from ddlab import errors, geometry, renorm
from ddlab.dissipation import (curve_growth_estimate, entropy_estimate,
                               gamma_dissipation_check, pesin_constants,
                               pesin_constants_from)
from ddlab.manifolds import (build_chain_graph, grow_unstable,
                             mild_dissipation_test)
from ddlab.maps import HenonMap, OrbitSample
from ddlab.orbits import find_periodic, henon_fixed_points, refine_periodic

from conftest import CASCADE_B, CASCADE_CS


def test_1_fixed_point_formulas_match_newton():
    t0 = time.time()
    rng = np.random.default_rng(20260826)
    for _ in range(100):
        b = rng.uniform(0.01, 0.99)
        c_max = (1 + b) ** 2 / 4
        c = rng.uniform(-3.0, c_max - 0.01)
        recs = henon_fixed_points(b, c)
        assert len(recs) == 2
        f = HenonMap(b, c)
        for rec in recs:
            seed = rec.points[0] + rng.uniform(-1e-6, 1e-6, 2)
            root, ok = refine_periodic(f, seed, 1)
            assert ok
            assert np.max(np.abs(root - rec.points[0])) < 1e-10
        x_q = max(r.points[0, 0] for r in recs)
        assert abs(x_q - ((1 + b) / 2 + np.sqrt(c_max - c))) < 1e-12
    assert time.time() - t0 < 1.0


def test_2_index_sum_is_one_in_absorbing_region():
    t0 = time.time()
    pairs = [(b, c) for b in (0.05, 0.1, 0.15, 0.2, 0.25)
             for c in (-1.0, -0.5, 0.0, 0.2)]
    assert len(pairs) == 20
    for b, c in pairs:
        f = HenonMap(b, c)
        dom = renorm.reduction_domain(b, c)
        assert renorm.reduction_lefschetz(f, dom) == 1
    assert time.time() - t0 < 10.0


def test_3_first_doubling_threshold_by_bisection():
    t0 = time.time()

    def lam_plus(b, c):
        p = min(henon_fixed_points(b, c), key=lambda r: r.points[0, 0])
        return p.multipliers[1].real

    for b in (0.05, 0.1, 0.2):
        lo, hi = -1.2, -0.5              # lam_plus(lo) < -1 < lam_plus(hi)
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if lam_plus(b, mid) < -1.0:
                lo = mid
            else:
                hi = mid
        c1 = 0.5 * (lo + hi)
        assert abs(c1 - (-0.75 * (1 + b) ** 2)) < 1e-9
    assert time.time() - t0 < 5.0


def _walk(node):
    yield node
    for ch in node.children:
        yield from _walk(ch)


def test_4_doubling_cascades_certify(cascade_trees):
    t0 = time.time()
    assert len(cascade_trees) == 10
    for f, tree, orbits in cascade_trees:
        assert tree.depth() >= 2
        for node in _walk(tree):
            if node is not tree:
                assert node.relative_period == 2
        periods = {o.period for o in orbits if o.period <= 32}
        assert all(p & (p - 1) == 0 for p in periods)
    assert time.time() - t0 < 300.0


def test_5_certificates_survive_reverification(cascade_trees):
    for f, tree, _ in cascade_trees:
        t0 = time.time()
        for node in _walk(tree):
            cert = node.certificate
            assert cert.certified
            rv = renorm.reverify(f, cert)
            assert rv.certified
            assert rv.inward_margin >= renorm.DELTA_MIN / 2
            if cert.period > 1:
                assert rv.disjointness > 0.0
        assert time.time() - t0 < 60.0


@pytest.mark.parametrize("b,bar", [(0.1, 0.95), (0.24, 0.90)])
def test_6_stable_segments_separate_the_disc(b, bar):
    t0 = time.time()
    c = -1.3
    f = HenonMap(b, c)
    cert, orbits = renorm.root_trap(f)
    flip = next(o for o in orbits
                if o.period == 1 and o.multipliers[1].real <= -1)
    cur = grow_unstable(f, flip, 1, target_length=30.0, allow_escape=True)
    sample = OrbitSample(points=cur.cloud(), escaped=False)
    frac = mild_dissipation_test(f, sample, cert.disc, count=200)
    assert frac >= bar
    assert time.time() - t0 < 120.0


def test_7_dissipation_inequality_and_block_constants():
    t0 = time.time()
    # the uniform inequality holds with a short witness on sampled orbits
    for c in CASCADE_CS[::4]:
        f = HenonMap(CASCADE_B, c)
        K = f.iterate([0.1, 0.0], 400).points[300:]
        holds, n = gamma_dissipation_check(f, K, gamma=0.5, n_max=64)
        assert holds and n <= 64
    # closed-form constants from synthetic one-step extremes
    for D, m, alpha in [(0.5, 0.1, 0.6), (0.1, 0.3, 1.0), (0.9, 1e-3, 0.9)]:
        pc = pesin_constants_from(D, m, alpha)
        assert pc.sigma_tilde == pytest.approx(m, abs=1e-12)
        assert pc.rho_tilde == pytest.approx(m * m / D, abs=1e-12)
        assert pc.sigma == pytest.approx(D ** (1 - alpha / 3), abs=1e-12)
        lhs = (m * m / D) * m / (pc.sigma * pc.sigma)
        assert pc.condition_holds == (lhs > pc.sigma ** alpha)
    # sampled version agrees with the closed form on a constant matrix
    class Diag:
        kind = "linear"
        b = 0.045

        def differential_many(self, pts):
            return np.repeat(np.diag([0.9, 0.05])[None], len(pts), axis=0)

    pc = pesin_constants(Diag(), np.zeros((8, 2)), alpha=0.5)
    ref = pesin_constants_from(0.045, 0.05, 0.5)
    assert pc.D_sup == pytest.approx(ref.D_sup, abs=1e-12)
    assert pc.m_inf == pytest.approx(ref.m_inf, abs=1e-12)
    assert pc.condition_holds == ref.condition_holds
    assert time.time() - t0 < 30.0


def test_8_entropy_dichotomy_and_chain_cycles():
    t0 = time.time()
    # vanishing estimates across the doubling window
    for c in CASCADE_CS:
        f = HenonMap(CASCADE_B, c)
        p = min(henon_fixed_points(CASCADE_B, c), key=lambda r: r.points[0, 0])
        cur = grow_unstable(f, p, 1, target_length=30.0, allow_escape=True)
        est = entropy_estimate(f, cur, n=32, eps=1e-2)
        assert est.value < 0.02
    # a definite positive estimate at horseshoe parameters
    f = HenonMap(0.1, -3.0)
    q = max(henon_fixed_points(0.1, -3.0), key=lambda r: r.points[0, 0])
    cur = grow_unstable(f, q, -1, target_length=30.0, allow_escape=True)
    est = entropy_estimate(f, cur, n=12)
    assert est.value >= 0.6
    # chain cycles appear exactly on the high-entropy cell
    for b, c, expect_cycles in [(0.1, -3.0, True), (0.1, -1.3, False)]:
        f = HenonMap(b, c)
        orbits = find_periodic(f, 2)
        g = build_chain_graph(f, orbits, target_length=40.0)
        assert (len(g.cycles) > 0) == expect_cycles
    assert time.time() - t0 < 180.0


def test_9_four_cases_partition_the_parameter_grid():
    t0 = time.time()
    bs = np.linspace(0.05, 0.45, 50)
    cs = np.linspace(-3.0, 1.0, 50)
    names = {"NoFixedPoint", "UnboundedInvariantCurve", "TrappedDisc",
             "HomoclinicPositiveEntropy"}
    positive_cells = []
    for b in bs:
        for c in cs:
            b_, c_ = float(b), float(c)
            v = renorm.quadritomie(b_, c_, fast=True)
            assert v.case in names
            disc = (1 + b_) ** 2 / 4 - c_
            assert (v.case == "NoFixedPoint") == (disc < 0)
            if v.case == "HomoclinicPositiveEntropy":
                positive_cells.append((b_, c_, v.evidence))
    assert len(positive_cells) > 0
    for b, c, ev in positive_cells:
        h = ev.get("lyapunov")
        if h is None:
            f = HenonMap(b, c)
            q = max(henon_fixed_points(b, c), key=lambda r: r.points[0, 0])
            cur = grow_unstable(f, q, -1, target_length=2.0,
                                allow_escape=True)
            h, _ = curve_growth_estimate(f, cur.polyline.vertices, cur.box,
                                         n=8, max_vertices=60000)
        assert h > 0.1
    assert time.time() - t0 < 600.0


def test_10_outputs_are_byte_reproducible(tmp_path, monkeypatch):
    from ddlab import cli
    argv = ["sweep", "--b", "0.1", "--c-from", "-1.44", "--c-to", "-0.84",
            "--c-step", "0.12", "--seed", "3", "--csv"]
    outs = []
    for name, threads in [("a.csv", "1"), ("b.csv", "2"), ("c.csv", "4")]:
        monkeypatch.setenv("DDLAB_THREADS", threads)
        path = tmp_path / name
        assert cli.main(argv + ["--out", str(path)]) == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1] == outs[2]
    # a single-cell report re-runs byte-identically as well
    for name in ("q1.json", "q2.json"):
        assert cli.main(["quadritomie", "--b", "0.1", "--c", "-1.3",
                         "--out", str(tmp_path / name)]) == 0
    assert (tmp_path / "q1.json").read_bytes() == \
        (tmp_path / "q2.json").read_bytes()
