"""Rotation numbers, continued fractions, closest returns, parameter tuning."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from .maps import CircleMapLift, k_critical_sine

GOLDEN_MEAN = (math.sqrt(5.0) - 1.0) / 2.0
SILVER_MEAN = math.sqrt(2.0) - 1.0

MAX_CF_DEPTH = 40
# Once denominators pass this, float64 input resolution (~1e-16) no longer
# supports the next digit: |rho - p/q| < 1/q^2 is at rounding scale.
MAX_CF_DENOMINATOR = 10 ** 7
RETURN_PRECISION_FLOOR = 1e-14


@dataclass(frozen=True)
class ContinuedFraction:
    """Expansion rho = 1/(a0 + 1/(a1 + ...)) with convergent tables.

    numerators/denominators hold p_0..p_depth and q_0..q_depth under
    q_0 = 1, q_1 = a_0, q_{n+1} = a_n q_n + q_{n-1} (p_0 = 0, p_1 = 1 with
    the same recurrence), so p_n / q_n -> rho alternately from below and
    above with |rho - p_n/q_n| < 1/(q_n q_{n+1}).
    """

    value: float
    partial_quotients: tuple
    numerators: tuple
    denominators: tuple
    truncated: bool

    @property
    def depth(self) -> int:
        return len(self.partial_quotients)

    def convergent(self, n: int):
        return self.numerators[n], self.denominators[n]


def continued_fraction(rho: float, depth: int) -> ContinuedFraction:
    """Expand rho in (0,1) to the requested depth (at most 40 digits).

    Stops early, with the truncated flag set, when the Gauss-map remainder
    falls below 1e-15 (rational to float precision) or when the next
    denominator would outrun the resolution of the float input.
    """
    rho = float(rho)
    if not 0.0 < rho < 1.0:
        raise ValueError("rho must lie strictly between 0 and 1")
    depth = int(depth)
    if not 1 <= depth <= MAX_CF_DEPTH:
        raise ValueError(f"depth must be in 1..{MAX_CF_DEPTH}")
    digits: list[int] = []
    p = [0, 1]
    q = [1]
    y = rho
    truncated = False
    for _ in range(depth):
        if y < 1e-15:
            truncated = True
            break
        inv = 1.0 / y
        a = max(int(math.floor(inv)), 1)
        q_next = a if len(q) == 1 else a * q[-1] + q[-2]
        if q_next > MAX_CF_DENOMINATOR:
            truncated = True
            break
        if digits:  # digit a_n with n >= 1 creates p_{n+1}; a_0 only sets q_1
            p.append(a * p[-1] + p[-2])
        digits.append(a)
        q.append(q_next)
        y = inv - a
    if not digits:
        raise ValueError("no continued-fraction digits resolvable at this precision")
    return ContinuedFraction(
        value=rho,
        partial_quotients=tuple(digits),
        numerators=tuple(p),
        denominators=tuple(q),
        truncated=truncated,
    )


@dataclass(frozen=True)
class ClosestReturns:
    """Strictly improving return times of an orbit to its start point.

    windings[i] is the nearest integer to the lift displacement at the
    return time: for an irrational rotation number these are exactly the
    convergent numerators matching times[i] as denominators.
    """

    times: np.ndarray
    distances: np.ndarray
    windings: np.ndarray
    hit_precision_floor: bool
    steps: int
    raw_mean: float  # (F^n(x0) - x0)/n over the full probed range


def closest_returns(m: CircleMapLift, x0: float, q_max: int) -> ClosestReturns:
    """Scan j = 1..q_max for times with d(f^j x0, x0) below all earlier ones.

    The lift displacement is tracked as an exact integer floor count plus
    the reduced coordinate, so no precision is lost to a growing lift.
    Distances at or below 1e-14 terminate the scan (precision floor).
    """
    q_max = int(q_max)
    if q_max < 1:
        raise ValueError("q_max must be >= 1")
    F = m.scalar_lift or m.lift
    x0 = float(x0) % 1.0
    x = x0
    floors = 0
    best = math.inf
    times, dists, winds = [], [], []
    floor_hit = False
    j = 0
    for j in range(1, q_max + 1):
        z = float(F(x))
        k = math.floor(z)
        x = z - k
        floors += k
        d = x - x0
        if d < 0.0:
            d = -d
        if d > 0.5:
            d = 1.0 - d
        if d < best:
            best = d
            times.append(j)
            dists.append(d)
            winds.append(round(floors + (x - x0)))
            if d <= RETURN_PRECISION_FLOOR:
                floor_hit = True
                break
    raw = (floors + (x - x0)) / j if j else 0.0
    return ClosestReturns(
        times=np.asarray(times, dtype=np.int64),
        distances=np.asarray(dists, dtype=float),
        windings=np.asarray(winds, dtype=np.int64),
        hit_precision_floor=floor_hit,
        steps=j,
        raw_mean=raw,
    )


@dataclass(frozen=True)
class RotationNumberEstimate:
    value: float
    error_bound: float
    is_rational: bool
    period: Optional[int]
    numerator: int
    denominator: int
    converged: bool
    raw_mean: float
    return_times: tuple


def rotation_number(m: CircleMapLift, x0: float = 0.0, budget: int = 10 ** 5,
                    tol: float = 1e-9) -> RotationNumberEstimate:
    """Rotation number via closest returns, snapped to a convergent.

    The deepest observed return (q, p) gives the estimate p/q with the
    convergent bound |rho - p/q| < 1/q^2.  A return distance at the
    precision floor is reported as an exact rational with its period.
    The raw displacement mean is kept as a cross-check; disagreement
    beyond its own resolution flags the estimate as non-converged.
    """
    budget = int(budget)
    if budget < 1000:
        raise ValueError("budget must be >= 1000")
    cr = closest_returns(m, x0, budget)
    if cr.times.size == 0:
        raise ValueError("no return observed inside the budget")
    q = int(cr.times[-1])
    p = int(cr.windings[-1])
    if cr.hit_precision_floor:
        g = math.gcd(p, q) or 1
        return RotationNumberEstimate(
            value=p / q,
            error_bound=0.0,
            is_rational=True,
            period=q,
            numerator=p // g,
            denominator=q // g,
            converged=True,
            raw_mean=cr.raw_mean,
            return_times=tuple(int(t) for t in cr.times),
        )
    value = p / q
    err = 1.0 / (q * q)
    consistent = abs(cr.raw_mean - value) <= err + 3.0 / cr.steps
    return RotationNumberEstimate(
        value=value,
        error_bound=err,
        is_rational=False,
        period=None,
        numerator=p,
        denominator=q,
        converged=consistent and err <= tol,
        raw_mean=cr.raw_mean,
        return_times=tuple(int(t) for t in cr.times),
    )


@dataclass(frozen=True)
class TuneResult:
    omega: float
    achieved_rho: float
    error_bound: float
    evaluations: int
    budget_used: int


def tune_omega(family: Callable[[float], CircleMapLift], target_rho: float,
               tol: float = 1e-10, bracket=None, budget_cap: int = 10 ** 6,
               base_point: float = 0.0, max_iters: int = 220) -> TuneResult:
    """Bisect the family parameter until the rotation number hits target_rho.

    family maps omega to a CircleMapLift; its rotation number must be
    monotone in omega over the bracket.  The orbit budget grows adaptively:
    cheap estimates steer early bisection steps, and success requires the
    certified bound |rho(f_omega) - target| <= tol.  Raises when the
    initial bracket does not straddle the target.
    """
    target = float(target_rho)
    if not 0.0 < target < 1.0:
        raise ValueError("target_rho must lie in (0,1)")
    if bracket is None:
        lo, hi = target - 0.25, target + 0.25
    else:
        lo, hi = float(bracket[0]), float(bracket[1])
    budget = 4000
    evaluations = 0

    def estimate(w, b):
        nonlocal evaluations
        evaluations += 1
        return rotation_number(family(w), base_point, budget=b, tol=tol)

    r_lo = estimate(lo, budget)
    r_hi = estimate(hi, budget)
    if not (r_lo.value - r_lo.error_bound <= target <= r_hi.value + r_hi.error_bound):
        raise ValueError(
            f"bracket failure: rho({lo:.6g}) ~ {r_lo.value:.6g}, "
            f"rho({hi:.6g}) ~ {r_hi.value:.6g} do not straddle {target:.6g}"
        )
    best = None
    for _ in range(max_iters):
        mid = 0.5 * (lo + hi)
        est = estimate(mid, budget)
        if est.error_bound <= 0.5 * tol and abs(est.value - target) <= 0.5 * tol:
            best = (mid, est)
            break
        gap = abs(est.value - target)
        if est.error_bound >= gap and not est.is_rational and budget < budget_cap:
            budget = min(budget * 4, budget_cap)
            continue
        if est.value < target:
            lo = mid
        else:
            hi = mid
        if hi - lo < 4.0 * np.finfo(float).eps * max(1.0, abs(hi)):
            break
    if best is None:
        mid = 0.5 * (lo + hi)
        est = estimate(mid, budget_cap)
        if not (abs(est.value - target) + est.error_bound <= tol):
            raise RuntimeError(
                f"tuning stalled: |rho - target| ~ {abs(est.value - target):.3g} "
                f"+/- {est.error_bound:.3g} > tol {tol:.3g}"
            )
        best = (mid, est)
    omega, est = best
    return TuneResult(
        omega=omega,
        achieved_rho=est.value,
        error_bound=est.error_bound,
        evaluations=evaluations,
        budget_used=budget,
    )


@lru_cache(maxsize=32)
def tuned_k_critical_sine(k: int, target_rho: float, tol: float = 1e-10) -> CircleMapLift:
    """Sine-family map with the requested rotation number (cached)."""
    res = tune_omega(lambda w: k_critical_sine(k, w), target_rho, tol=tol)
    return k_critical_sine(k, res.omega)


def named_irrational(name) -> float:
    """Accept 'golden' / 'silver' or a numeric rotation number."""
    if isinstance(name, str):
        table = {"golden": GOLDEN_MEAN, "silver": SILVER_MEAN}
        if name not in table:
            raise ValueError(f"unknown rotation-number name {name!r}")
        return table[name]
    return float(name)
