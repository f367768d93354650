import numpy as np
import pytest

from ddlab import geometry, orbits
from ddlab.maps import HenonMap, OrbitSample
from ddlab.orbits import (OrbitType, classify, divisors, find_periodic,
                          henon_fixed_points, lefschetz_sum, orbits_to_csv,
                          refine_periodic, closing_scan)


def test_fixed_points_closed_form():
    # x^2 - (1+b)x + c = 0 at b=0.25, c=0: roots 0 and 1.25
    recs = henon_fixed_points(0.25, 0.0)
    xs = sorted(r.points[0, 0] for r in recs)
    assert np.allclose(xs, [0.0, 1.25], atol=1e-14)
    for r in recs:
        assert np.allclose(r.points[0, 1], -0.25 * r.points[0, 0])


def test_fixed_points_empty_above_saddle_node():
    assert henon_fixed_points(0.1, 0.35) == []


def test_fixed_point_classification():
    recs = henon_fixed_points(0.1, 0.0)
    by_x = {round(r.points[0, 0], 6): r for r in recs}
    assert by_x[0.0].type == OrbitType.SINK and by_x[0.0].index == 1
    assert by_x[1.1].type == OrbitType.SADDLE_NO_REFLEXION
    assert by_x[1.1].index == -1


def test_flip_saddle_past_first_doubling():
    # at c below -(3/4)(1+b)^2 the inner fixed point has multiplier < -1
    recs = henon_fixed_points(0.1, -1.0)
    p = min(recs, key=lambda r: r.points[0, 0])
    assert p.type == OrbitType.SADDLE_WITH_REFLEXION
    assert p.multipliers[1].real < -1


def test_classify_residual_consistency():
    f = HenonMap(0.1, -1.3)
    recs = find_periodic(f, 4)
    for r in recs:
        img = r.points[0]
        for _ in range(r.period):
            img = f(img)
        assert np.max(np.abs(img - r.points[0])) < 1e-8


def test_find_periodic_census_at_doubling_parameters():
    f = HenonMap(0.1, -1.3)
    recs = find_periodic(f, 4)
    periods = sorted(r.period for r in recs)
    assert periods == [1, 1, 2]   # two fixed points and the period-2 sink
    sink = next(r for r in recs if r.period == 2)
    assert sink.is_sink
    assert len(sink.points) == 2
    assert np.allclose(f(sink.points[0]), sink.points[1], atol=1e-9)


def test_minimal_period_not_double_counted():
    f = HenonMap(0.1, -1.3)
    recs = find_periodic(f, 2)
    fixed = [r for r in recs if r.period == 1]
    assert len(fixed) == 2       # fixed points are not re-reported at period 2


def test_refine_periodic_converges():
    f = HenonMap(0.2, -0.7)
    rec = henon_fixed_points(0.2, -0.7)[0]
    noisy = rec.points[0] + 1e-5
    refined, ok = refine_periodic(f, noisy, 1)
    assert ok and np.max(np.abs(refined - rec.points[0])) < 1e-10


def test_lefschetz_sum_counts_indices():
    recs = henon_fixed_points(0.1, -0.5)
    box = geometry.Polygon([[-5, -5], [5, -5], [5, 5], [-5, 5]])
    rep = lefschetz_sum(recs, box)
    assert rep.sum_of_indices == sum(r.index for r in recs) == 0


def test_closing_scan_recovers_sink():
    f = HenonMap(0.1, -1.3)
    tail = f.iterate([0.1, 0.0], 400).points[300:]
    found = closing_scan(f, OrbitSample(points=tail, escaped=False),
                         radius=1e-3)
    assert any(r.period == 2 and r.is_sink for r in found)


def test_divisors():
    assert divisors(12) == [1, 2, 3, 4, 6, 12]
    assert divisors(1) == [1]


def test_orbits_to_csv_layout():
    recs = henon_fixed_points(0.1, -0.5)
    text = orbits_to_csv(recs)
    lines = text.strip().splitlines()
    assert lines[0].split(",") == orbits.CSV_HEADER
    assert len(lines) == 1 + len(recs)


def test_classify_complex_pair_is_sink():
    f = HenonMap(0.3, 0.0)
    rec = classify(f, np.array([[0.0, 0.0]]))
    assert rec.type == OrbitType.SINK
    assert abs(rec.multipliers[0]) == pytest.approx(np.sqrt(0.3), abs=1e-12)
