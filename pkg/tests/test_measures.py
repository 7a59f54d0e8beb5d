"""Weighted orbit measures, the transfer solver, and derived statistics."""
import math

import mpmath as mp
import numpy as np
import pytest

from circle_lab import maps, measures

from conftest import OMEGA

# level-15 orbit measure at s=1 from x=0.5: weight normalizer frozen from
# a run that agreed with the extended-precision recomputation below
ORBIT_S = 3082.9921433440127

LYAP_VALUE = 0.00019856041089425853   # level-18 estimate from the critical value
C1HAT_4096 = 3.2973951075454107       # return derivative envelope, 4096-point grid

SIGMA_PREIMAGE_FINAL = 112.42055555418712


def orbit_weights_extended(x0, q):
    """Orbit weights for s=1 recomputed at 50 significant digits."""
    mp.mp.dps = 50
    om = mp.mpf(OMEGA)          # exact binary value of the parameter
    two_pi = 2 * mp.pi
    x, w = mp.mpf(x0), mp.mpf(1)
    weights = []
    for _ in range(q):
        weights.append(w)
        w = w * (1 - mp.cos(two_pi * x))
        x = (x + om - mp.sin(two_pi * x) / two_pi) % 1
    return weights


def test_uniform_and_interval_mass():
    u = measures.uniform_measure(1024)
    assert u.kind == "grid"
    assert u.total_mass == pytest.approx(1.0, abs=1e-14)
    assert measures.interval_mass(u, 0.25, 0.5) == pytest.approx(0.5, abs=1e-12)
    # interval wrapping through zero
    assert measures.interval_mass(u, 0.9, 0.2) == pytest.approx(0.2, abs=1e-12)


def test_l1_distance_requires_common_grid():
    a = measures.atomic_measure([0.2, 0.7], [0.5, 0.5])
    b = measures.atomic_measure([0.2, 0.7], [0.25, 0.75])
    with pytest.raises(ValueError):
        measures.l1_distance(a, b)
    d = measures.l1_distance(measures.binned(a, 64), measures.binned(b, 64))
    assert d == pytest.approx(0.5, abs=1e-14)
    u = measures.uniform_measure(64)
    assert measures.l1_distance(u, u) == 0.0


def test_binned_conserves_mass(sine_map, golden_cf):
    osm = measures.orbit_sum_measure(sine_map, 0.5, 1.0, 12, golden_cf)
    nb = measures.binned(osm.measure, 64)
    assert nb.kind == "grid"
    assert nb.bins == 64
    assert nb.total_mass == pytest.approx(1.0, abs=1e-12)


def test_transfer_step_fixes_lebesgue_under_rotation(golden_rotation):
    u = measures.uniform_measure(512)
    stepped = measures.transfer_step(u, golden_rotation, 1.0)
    assert measures.l1_distance(stepped, u) <= 1e-14


def test_orbit_weights_match_extended_precision(sine_map, golden_cf):
    osm = measures.orbit_sum_measure(sine_map, 0.5, 1.0, 15, golden_cf)
    assert osm.q == 987
    exact = orbit_weights_extended(0.5, 987)
    S = sum(exact)
    assert osm.S == pytest.approx(float(S), rel=1e-7)
    assert osm.S == pytest.approx(ORBIT_S, rel=1e-12)
    worst = max(abs(float(w / S) - got) / float(w / S)
                for w, got in zip(exact, osm.measure.weights))
    assert worst <= 1e-9


def test_orbit_measure_bookkeeping(sine_map, golden_cf):
    osm = measures.orbit_sum_measure(sine_map, 0.5, 1.0, 15, golden_cf)
    assert osm.measure.weights.sum() == pytest.approx(1.0, abs=1e-12)
    assert osm.level == 15 and osm.exponent == 1.0 and osm.base_point == 0.5
    assert not osm.flagged_critical_hit
    assert osm.log_S == pytest.approx(math.log(osm.S), abs=1e-12)


def test_telescoping_identity_at_level_12(sine_map, golden_cf):
    """The measure defect equals the orbit boundary terms to rounding."""
    base = maps.critical_value(sine_map)
    tests = measures.TestFunctionSet.trig()
    for s in (0.5, 1.0, 2.0):
        osm = measures.orbit_sum_measure(sine_map, base, s, 12, golden_cf)
        defect = measures.automorphic_defect(osm.measure, sine_map, s, tests)
        for phi in tests:
            closed = measures.telescoped_defect_bound(osm, phi)
            assert abs(defect.per_function[phi.name] - closed) <= 1e-12


def test_automorphic_defect_of_lebesgue_under_rotation(golden_rotation):
    d = measures.automorphic_defect(measures.uniform_measure(2048),
                                    golden_rotation, 1.0)
    assert d.max_defect <= 1e-14


def test_solver_returns_lebesgue_for_unit_exponent(sine_map):
    sol = measures.solve_automorphic(sine_map, 1.0, bins=16384, iters=3000,
                                     tol=1e-7)
    assert sol.converged and not sol.flagged_nonconverging
    assert sol.iterations <= 64
    assert sol.defect <= 1e-7
    u = measures.uniform_measure(16384)
    assert measures.l1_distance(sol.measure, u) <= 1e-6


def test_solver_reports_nonconvergence_honestly(sine_map):
    # the squared-derivative weight mixes too slowly to converge this fast
    sol = measures.solve_automorphic(sine_map, 2.0, bins=1024, iters=300,
                                     tol=1e-7)
    assert not sol.converged
    assert sol.iterations == 300
    assert len(sol.cesaro_deltas) == 300


def test_lyapunov_estimate_from_critical_value(sine_map, golden_cf):
    base = maps.critical_value(sine_map)
    osm = measures.orbit_sum_measure(sine_map, base, 0.0, 18, golden_cf)
    qs = [int(q) for q in golden_cf.denominators[2:19]]
    bounds = measures.return_derivative_bounds(sine_map, qs, grid_size=4096)
    c1hat = max(hi for _, hi in bounds.values())
    assert c1hat == pytest.approx(C1HAT_4096, rel=1e-9)
    est = measures.lyapunov_integral(sine_map, osm, c1hat=c1hat)
    assert est.q == 4181
    assert est.value == pytest.approx(LYAP_VALUE, rel=1e-9)
    assert abs(est.value) <= est.bound
    assert est.bound == pytest.approx(math.log(c1hat) / 4181, rel=1e-12)


def test_return_derivative_envelope_is_grid_stable(sine_map):
    coarse = measures.max_return_derivative(sine_map, [34, 233], grid_size=2048)
    fine = measures.max_return_derivative(sine_map, [34, 233], grid_size=8192)
    assert fine >= coarse
    assert fine - coarse <= 0.01 * fine


def test_sigma_series_plateaus_at_critical_preimage(sine_map):
    x = maps.critical_preimage(sine_map, 20)
    ser = measures.sigma_partial(sine_map, x, 1.0, 200)
    # after the orbit hits the critical point every further weight vanishes
    assert ser.partials[-1] == ser.partials[21]
    assert ser.partials[-1] == pytest.approx(SIGMA_PREIMAGE_FINAL, rel=1e-9)


def test_sigma_series_grows_at_generic_point(sine_map):
    ser = measures.sigma_partial(sine_map, 0.37, 1.0, 2000)
    assert ser.partials[-1] / ser.partials[200] >= 2.0
    assert not ser.saturated


def test_sigma_series_counts_rotation_steps(golden_rotation):
    # unit derivative makes every weight one
    ser = measures.sigma_partial(golden_rotation, 0.3, 1.0, 500)
    assert ser.partials[0] == 1.0
    assert ser.partials[-1] == 501.0


def test_omega_ratio_scan_on_rotation(golden_rotation, golden_cf):
    from circle_lab import partition
    P = partition.build_partition(golden_rotation, 0.0, 6, golden_cf)
    osm = measures.orbit_sum_measure(golden_rotation, 0.0, 1.0, 14, golden_cf)
    scan = measures.omega_ratio_scan(osm.measure, P, 1.0)
    assert scan.skipped == 0
    assert scan.same_type_ratio == pytest.approx(1.0, abs=1e-9)
    assert scan.short_to_long_ratio == pytest.approx(1.0, abs=5e-3)


def test_test_function_set():
    tests = measures.TestFunctionSet.trig()
    assert [f.name for f in tests] == ["one", "cos1", "sin1", "cos2", "sin2",
                                       "cos3", "sin3"]
    sin1 = next(f for f in tests if f.name == "sin1")
    assert sin1(0.25) == pytest.approx(1.0, abs=1e-15)
    assert sin1.deriv(0.0) == pytest.approx(2 * math.pi, abs=1e-12)
    assert sin1.sup_norm == 1.0
