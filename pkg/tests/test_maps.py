"""Circle arithmetic, the map families, and orbit evaluation."""
import math

import numpy as np
import pytest

from circle_lab import maps

from conftest import GOLDEN, OMEGA


def test_reduce_mod1_wraps():
    assert maps.reduce_mod1(1.25) == 0.25
    assert maps.reduce_mod1(-0.25) == 0.75
    assert maps.reduce_mod1(3.0) == 0.0
    out = maps.reduce_mod1(np.array([0.5, 1.5, -0.5]))
    assert np.allclose(out, [0.5, 0.5, 0.5], atol=0)


def test_circle_distance_is_shortest_arc():
    assert maps.circle_distance(0.1, 0.9) == pytest.approx(0.2, abs=1e-15)
    assert maps.circle_distance(0.9, 0.1) == pytest.approx(0.2, abs=1e-15)
    assert maps.circle_distance(0.0, 0.5) == pytest.approx(0.5, abs=1e-15)
    assert maps.circle_distance(0.3, 0.3) == 0.0


def test_arc_length_and_containment_wrap():
    # the arc from 0.9 forward to 0.1 has length 0.2 and crosses zero
    assert maps.arc_length(0.9, 0.1) == pytest.approx(0.2, abs=1e-15)
    assert maps.arc_contains(0.9, 0.1, 0.05)
    assert not maps.arc_contains(0.9, 0.1, 0.5)
    assert maps.arc_contains(0.2, 0.4, 0.3)


def test_rigid_rotation_lift():
    rot = maps.rigid_rotation(GOLDEN)
    assert rot.lift(0.3) - 0.3 == pytest.approx(GOLDEN, abs=0)
    assert float(rot.deriv(0.123)) == 1.0
    assert rot.critical_points == ()


def test_sine_family_shape(sine_map):
    m = sine_map
    # cubic critical point at the origin, derivative 1 - cos elsewhere
    assert m.critical_points == ((0.0, 3.0),)
    assert float(m.deriv(0.0)) == 0.0
    assert float(m.deriv(0.5)) == pytest.approx(2.0, abs=1e-15)
    xs = np.linspace(0.0, 1.0, 2001)
    assert np.all(np.asarray(m.deriv(xs)) >= 0.0)
    lifted = np.asarray(m.lift(xs))
    assert np.all(np.diff(lifted) >= 0.0)
    assert m.lift(1.3) - m.lift(0.3) == pytest.approx(1.0, abs=1e-15)


def test_critical_value_is_image_of_critical_point(sine_map):
    # f(0) = omega for this family
    assert maps.critical_value(sine_map) == pytest.approx(OMEGA, abs=1e-15)


def test_eval_orbit_rotation():
    rot = maps.rigid_rotation(GOLDEN)
    tr = maps.eval_orbit(rot, 0.0, 10)
    expected = np.mod(np.arange(11) * GOLDEN, 1.0)
    assert np.allclose(tr.points, expected, atol=1e-12)
    assert np.allclose(tr.log_derivs, 0.0, atol=0)
    assert tr.length == 10


def test_eval_orbit_accumulates_log_derivative(sine_map):
    """log_derivs[j] is the log derivative of the j-th iterate at the start."""
    tr = maps.eval_orbit(sine_map, 0.3, 6)
    assert tr.log_derivs[0] == 0.0
    acc = 0.0
    for j in range(6):
        acc += math.log(float(sine_map.deriv(tr.points[j])))
        assert tr.log_derivs[j + 1] == pytest.approx(acc, abs=1e-12)


def test_invert_step_round_trip(sine_map):
    for y in np.linspace(0.013, 0.987, 61):
        x = maps.invert_step(sine_map, float(y))
        assert maps.circle_distance(maps.reduce_mod1(sine_map.lift(x)), y) <= 1e-12


def test_critical_preimage_maps_forward_to_critical_point(sine_map):
    for depth in (10, 20):
        x = maps.critical_preimage(sine_map, depth)
        tr = maps.eval_orbit(sine_map, x, depth)
        assert maps.circle_distance(tr.points[-1], 0.0) <= 1e-12


def test_nonflat_audit_recovers_cubic_degree(sine_map):
    rep = maps.verify_nonflat(sine_map, 0.0, 1e-2)
    assert rep.degree_estimate == pytest.approx(3.0, abs=5e-3)
    assert rep.max_bound_ratio <= 1.0


def test_nonflat_audit_rejects_unlisted_point(sine_map):
    with pytest.raises(ValueError):
        maps.verify_nonflat(sine_map, 0.3, 1e-2)


def test_map_spec_round_trip(sine_map):
    xs = np.linspace(0.0, 1.0, 31)
    for m in (sine_map, maps.rigid_rotation(0.375)):
        rebuilt = maps.map_from_spec(m.to_spec())
        assert np.allclose(rebuilt.lift(xs), m.lift(xs), atol=0)
        assert np.allclose(rebuilt.deriv(xs), m.deriv(xs), atol=0)


def test_custom_map_wrapper():
    m = maps.custom_map(lambda x: x + 0.25, lambda x: np.ones_like(np.asarray(x)))
    tr = maps.eval_orbit(m, 0.0, 4)
    assert tr.points[-1] == pytest.approx(0.0, abs=1e-15)
