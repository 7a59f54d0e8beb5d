"""Continued fractions, closest returns, rotation numbers, and tuning."""
import numpy as np
import pytest

from circle_lab import maps, rotation

from conftest import GOLDEN, OMEGA

FIB = [1, 1, 2, 3, 5, 8, 13, 21, 34, 55, 89, 144, 233]

# |q_n rho - p_n| for the golden mean, computed independently at 40
# significant digits from (sqrt(5) - 1) / 2.
GOLDEN_RETURN_DIST = {
    4: 0.09016994374947424,
    8: 0.013155617496424838,
    12: 0.0019193787254996317,
    18: 0.00010696331036034338,
}


def test_golden_continued_fraction(golden_cf):
    cf = golden_cf
    assert list(cf.denominators[:13]) == FIB
    assert all(a == 1 for a in cf.partial_quotients[:12])
    # numerators lag the denominators by one index for this number
    assert list(cf.numerators[:13]) == [0] + FIB[:12]
    assert cf.value == GOLDEN


def test_golden_convergents_have_known_distances(golden_cf):
    cf = golden_cf
    for n, expected in GOLDEN_RETURN_DIST.items():
        q, p = int(cf.denominators[n]), int(cf.numerators[n])
        assert abs(q * GOLDEN - p) == pytest.approx(expected, abs=1e-12)


def test_rational_continued_fraction_terminates():
    # 3/8: convergents 0/1, 1/2, 1/3, 2/5, 3/8, checked by hand
    cf = rotation.continued_fraction(0.375, 8)
    assert list(cf.partial_quotients) == [2, 1, 1, 1]
    assert cf.truncated
    assert list(cf.numerators) == [0, 1, 1, 2, 3]
    assert list(cf.denominators) == [1, 2, 3, 5, 8]


def test_continued_fraction_denominators_increase(golden_cf):
    q = np.asarray(golden_cf.denominators)
    assert np.all(q[2:] > q[1:-1])
    assert not golden_cf.truncated


def test_closest_returns_of_golden_rotation_are_fibonacci(golden_rotation):
    ret = rotation.closest_returns(golden_rotation, 0.0, 100)
    assert ret.times.tolist() == [1, 2, 3, 5, 8, 13, 21, 34, 55, 89]
    for q, d in zip(ret.times, ret.distances):
        expected = abs(q * GOLDEN - round(q * GOLDEN))
        assert d == pytest.approx(expected, abs=1e-13)
    assert not ret.hit_precision_floor


def test_rotation_number_of_tuned_sine_map(sine_map):
    est = rotation.rotation_number(sine_map)
    assert est.converged
    assert not est.is_rational
    assert est.error_bound <= 1e-9
    assert abs(est.value - GOLDEN) <= est.error_bound


def test_rotation_number_detects_rational():
    est = rotation.rotation_number(maps.rigid_rotation(0.375))
    assert est.is_rational
    assert (est.numerator, est.denominator, est.period) == (3, 8, 8)
    assert est.value == 0.375


def test_named_irrationals():
    assert GOLDEN == pytest.approx((5 ** 0.5 - 1) / 2, abs=1e-15)
    assert rotation.named_irrational("silver") == pytest.approx(2 ** 0.5 - 1,
                                                                abs=1e-15)
    with pytest.raises(ValueError):
        rotation.named_irrational("nope")


def test_tuned_parameter_matches_frozen_constant():
    """Re-derives the frozen omega; the one deliberately slow unit test."""
    res = rotation.tune_omega(lambda w: maps.k_critical_sine(1, w), GOLDEN,
                              tol=1e-10)
    assert abs(res.omega - OMEGA) <= 1e-10
    assert abs(res.achieved_rho - GOLDEN) <= 1e-9
    assert res.evaluations <= 220
