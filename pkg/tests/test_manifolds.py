import numpy as np
import pytest

from ddlab import geometry, renorm
from ddlab.errors import NotASaddle
from ddlab.manifolds import (build_chain_graph, clip_spanning_curve,
                             contracted_direction, curves_to_csv,
                             grow_stable, grow_unstable,
                             mild_dissipation_test, saddle_frame,
                             stable_curve_through, accumulation_set)
from ddlab.maps import HenonMap, OrbitSample
from ddlab.orbits import find_periodic, henon_fixed_points


@pytest.fixture(scope="module")
def doubling_map():
    return HenonMap(0.1, -1.3)


@pytest.fixture(scope="module")
def saddle_q(doubling_map):
    recs = henon_fixed_points(doubling_map.b, doubling_map.c)
    return max(recs, key=lambda r: r.points[0, 0])


def test_saddle_frame_eigen_directions(doubling_map, saddle_q):
    lam_s, lam_u, v_s, v_u = saddle_frame(doubling_map, saddle_q)
    J = doubling_map.differential(saddle_q.points[0])
    assert abs(lam_s) < 1 < abs(lam_u)
    assert np.allclose(J @ v_u, lam_u * v_u, atol=1e-9)
    assert np.allclose(J @ v_s, lam_s * v_s, atol=1e-9)


def test_saddle_frame_rejects_sinks(doubling_map):
    sink = next(r for r in find_periodic(doubling_map, 2) if r.is_sink)
    with pytest.raises(NotASaddle):
        saddle_frame(doubling_map, sink)


def test_unstable_branch_starts_at_saddle(doubling_map, saddle_q):
    cur = grow_unstable(doubling_map, saddle_q, -1, target_length=5.0,
                        allow_escape=True)
    assert cur.kind == "unstable"
    assert np.allclose(cur.polyline.vertices[0], saddle_q.points[0], atol=1e-4)
    assert cur.arc_length > 1.0


def test_unstable_branch_invariance(doubling_map, saddle_q):
    # the image of the branch stays within a hair of the branch itself
    cur = grow_unstable(doubling_map, saddle_q, -1, target_length=3.0,
                        allow_escape=True)
    pts = cur.polyline.vertices[::10]
    img = doubling_map.evaluate_many(pts)
    d = np.array([np.min(np.hypot(cur.polyline.vertices[:, 0] - p[0],
                                  cur.polyline.vertices[:, 1] - p[1]))
                  for p in img])
    assert np.quantile(d, 0.95) < 5e-3


def test_stable_branch_contracts_back(doubling_map, saddle_q):
    cur = grow_stable(doubling_map, saddle_q, 1, target_length=1.0,
                      allow_escape=True)
    p = cur.polyline.vertices[min(50, len(cur.polyline.vertices) - 1)]
    q = p.copy()
    for _ in range(12):
        q = doubling_map(q)
    assert np.linalg.norm(q - saddle_q.points[0]) < \
        np.linalg.norm(p - saddle_q.points[0]) + 1e-12


def test_contracted_direction_is_most_contracted(doubling_map):
    z = np.array([0.3, -0.05])
    v = contracted_direction(doubling_map, z, n=20)
    assert np.isclose(np.linalg.norm(v), 1.0)
    J = np.eye(2)
    q = z.copy()
    for _ in range(20):
        J = doubling_map.differential(q) @ J
        q = doubling_map(q)
    w = np.array([-v[1], v[0]])
    assert np.linalg.norm(J @ v) < 1e-3 * np.linalg.norm(J @ w)


def test_accumulation_set_of_sink_bound_branch(doubling_map, saddle_q):
    cur = grow_unstable(doubling_map, saddle_q, -1, target_length=40.0,
                        allow_escape=True, max_pieces=80)
    acc = accumulation_set(cur)
    sink = next(r for r in find_periodic(doubling_map, 2) if r.is_sink)
    d = min(np.min(np.hypot(acc.points[:, 0] - s[0], acc.points[:, 1] - s[1]))
            for s in sink.points)
    assert d < 1e-2


def test_stable_curve_spans_trap_disc(doubling_map):
    cert, orbits = renorm.root_trap(doubling_map)
    sink = next(r for r in orbits if r.is_sink)
    curve = stable_curve_through(doubling_map, sink.points[0], cert.disc)
    assert curve is not None
    v = curve.vertices
    assert cert.disc.boundary_distance(v[0]) < 1e-3
    assert cert.disc.boundary_distance(v[-1]) < 1e-3


def test_mild_dissipation_fraction_in_unit_interval(doubling_map):
    cert, orbits = renorm.root_trap(doubling_map)
    flip = next(o for o in orbits
                if o.period == 1 and o.multipliers[1].real <= -1)
    cur = grow_unstable(doubling_map, flip, 1, target_length=10.0,
                        allow_escape=True)
    sample = OrbitSample(points=cur.cloud(), escaped=False)
    frac = mild_dissipation_test(doubling_map, sample, cert.disc, count=20)
    assert 0.0 <= frac <= 1.0


def test_chain_graph_acyclic_in_doubling_regime(doubling_map):
    orbits = find_periodic(doubling_map, 2)
    g = build_chain_graph(doubling_map, orbits, target_length=40.0)
    assert g.cycles == []
    assert any(t == 2 for _, _, t in g.edges)   # branches feed the sink
    dot = g.to_dot()
    assert dot.startswith("digraph") and "->" in dot


def test_clip_spanning_curve():
    square = geometry.Polygon([[0, 0], [1, 0], [1, 1], [0, 1]])
    xs = np.linspace(-0.5, 1.5, 101)
    curve = np.column_stack([xs, 0.4 + 0.0 * xs])
    clipped = clip_spanning_curve(curve, square)
    assert clipped is not None
    v = clipped.vertices
    assert v[:, 0].min() >= -1e-9 and v[:, 0].max() <= 1 + 1e-9
    assert np.isclose(clipped.length, 1.0, atol=1e-6)


def test_curves_to_csv(doubling_map, saddle_q):
    cur = grow_unstable(doubling_map, saddle_q, -1, target_length=2.0,
                        allow_escape=True)
    text = curves_to_csv([cur])
    lines = text.strip().splitlines()
    assert lines[0].startswith("curve_id")
    assert len(lines) > 10
