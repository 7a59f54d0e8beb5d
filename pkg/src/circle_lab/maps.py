"""Lifts of circle homeomorphisms: map families, orbits, critical-point audits."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

TWO_PI = 2.0 * math.pi

# |cumulative log-derivative| beyond this is flagged: exp() of it under/overflows
# once an exponent >= 1 multiplies it, so downstream weights degrade.
LOG_SATURATION = 700.0


def reduce_mod1(x):
    """Branchless reduction to [0, 1); works on scalars and arrays."""
    return x - np.floor(x)


def circle_distance(a, b):
    """Shortest arc distance on R/Z."""
    d = np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)) % 1.0
    return np.minimum(d, 1.0 - d)


def arc_length(start, end):
    """Length of the positively oriented arc from start to end."""
    return (np.asarray(end, dtype=float) - np.asarray(start, dtype=float)) % 1.0


def arc_contains(start, end, t, closed=False):
    """Whether t lies on the positively oriented arc from start to end."""
    span = (end - start) % 1.0
    off = (t - start) % 1.0
    if closed:
        return off <= span
    return 0.0 < off < span


@dataclass(frozen=True, eq=False)
class CircleMapLift:
    """Lift F of an orientation-preserving circle homeomorphism.

    lift / deriv are vectorized (numpy in, numpy out).  scalar_lift and
    scalar_deriv, when present, are plain-float fast paths for sequential
    orbit loops; they must agree with the vectorized pair.
    critical_points lists (c, degree) with degree > 1; deriv must vanish
    exactly there and nowhere else.
    """

    lift: Callable
    deriv: Callable
    critical_points: tuple
    family_tag: str
    parameters: dict
    scalar_lift: Optional[Callable] = None
    scalar_deriv: Optional[Callable] = None

    def step(self, x):
        return reduce_mod1(self.lift(x))

    def to_spec(self) -> dict:
        return {
            "family": self.family_tag,
            "parameters": dict(self.parameters),
            "critical_points": [[float(c), float(d)] for c, d in self.critical_points],
        }


def rigid_rotation(rho: float) -> CircleMapLift:
    """x -> x + rho. No critical points."""
    rho = float(rho)

    def lift(x):
        return np.asarray(x, dtype=float) + rho

    def deriv(x):
        return np.ones_like(np.asarray(x, dtype=float))

    return CircleMapLift(
        lift=lift,
        deriv=deriv,
        critical_points=(),
        family_tag="rotation",
        parameters={"rho": rho},
        scalar_lift=lambda x: x + rho,
        scalar_deriv=lambda x: 1.0,
    )


def k_critical_sine(k: int, omega: float) -> CircleMapLift:
    """x -> x + omega - sin(2 pi k x)/(2 pi k).

    Derivative 1 - cos(2 pi k x) vanishes to second order at j/k, so every
    one of the k critical points has degree 3.
    """
    k = int(k)
    if k < 1:
        raise ValueError("k must be a positive integer")
    omega = float(omega)
    amp = 1.0 / (TWO_PI * k)

    def lift(x):
        x = np.asarray(x, dtype=float)
        return x + omega - amp * np.sin(TWO_PI * k * x)

    def deriv(x):
        x = np.asarray(x, dtype=float)
        return 1.0 - np.cos(TWO_PI * k * x)

    def slift(x):
        return x + omega - amp * math.sin(TWO_PI * k * x)

    def sderiv(x):
        return 1.0 - math.cos(TWO_PI * k * x)

    return CircleMapLift(
        lift=lift,
        deriv=deriv,
        critical_points=tuple((j / k, 3.0) for j in range(k)),
        family_tag="k_critical_sine",
        parameters={"k": k, "omega": omega},
        scalar_lift=slift,
        scalar_deriv=sderiv,
    )


def custom_map(lift, deriv, critical_points=(), parameters=None, family_tag="custom"):
    return CircleMapLift(
        lift=lift,
        deriv=deriv,
        critical_points=tuple(critical_points),
        family_tag=family_tag,
        parameters=dict(parameters or {}),
    )


def map_from_spec(spec: dict) -> CircleMapLift:
    """Rebuild a map from its serialized {family, parameters, ...} record."""
    family = spec["family"]
    params = spec.get("parameters", {})
    if family == "rotation":
        return rigid_rotation(params["rho"])
    if family == "k_critical_sine":
        return k_critical_sine(params["k"], params["omega"])
    raise ValueError(f"family {family!r} cannot be rebuilt from a serialized record")


@dataclass(frozen=True, eq=False)
class OrbitTrace:
    """Orbit of a single point with cumulative log-derivatives.

    points[i] = f^i(x0) reduced to [0,1); log_derivs[i] = log Df^i(x0)
    (log-space, compensated sum; -inf after an exact critical hit);
    saturated[i] flags |log| beyond the overflow threshold or a hit.
    """

    points: np.ndarray
    log_derivs: np.ndarray
    saturated: np.ndarray
    length: int

    @property
    def first_saturation(self) -> Optional[int]:
        idx = np.nonzero(self.saturated)[0]
        return int(idx[0]) if idx.size else None


def eval_orbit(m: CircleMapLift, x0: float, n: int) -> OrbitTrace:
    """Iterate the map n times from x0, tracking positions and log Df^i."""
    n = int(n)
    if n < 1:
        raise ValueError("orbit length must be >= 1")
    F = m.scalar_lift or m.lift
    DF = m.scalar_deriv or m.deriv
    pts = np.empty(n + 1)
    logs = np.empty(n + 1)
    sat = np.zeros(n + 1, dtype=bool)
    x = float(x0) % 1.0
    pts[0] = x
    logs[0] = 0.0
    acc = 0.0
    comp = 0.0  # Kahan compensation for the running log sum
    for i in range(n):
        d = float(DF(x))
        if d <= 0.0 or math.isinf(acc):
            acc = -math.inf
            comp = 0.0
        else:
            y = math.log(d) - comp
            t = acc + y
            comp = (t - acc) - y
            acc = t
        x = float(F(x))
        x -= math.floor(x)
        pts[i + 1] = x
        logs[i + 1] = acc
        sat[i + 1] = math.isinf(acc) or abs(acc) > LOG_SATURATION
    return OrbitTrace(points=pts, log_derivs=logs, saturated=sat, length=n)


def invert_step(m: CircleMapLift, y: float, iters: int = 90) -> float:
    """Unique x in [0,1) with f(x) = y (mod 1). Bisection on the lift."""
    F = m.scalar_lift or m.lift
    base = float(F(0.0))
    t = (float(y) - base) % 1.0  # solve F(x) = base + t with x in [0,1)
    lo, hi = 0.0, 1.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if float(F(mid)) - base < t:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def critical_value(m: CircleMapLift, which: int = 0) -> float:
    """Image of the chosen critical point.

    Orbits started here make the best-conditioned weighted orbit sums:
    the derivative weights along this orbit keep the normalizer growing
    with the orbit length instead of collapsing onto a few atoms.
    """
    if not m.critical_points:
        raise ValueError("map has no critical points")
    c = float(m.critical_points[which][0])
    return float(np.asarray(m.step(np.asarray(c))))


def critical_preimage(m: CircleMapLift, depth: int, which: int = 0) -> float:
    """Point x with f^depth(x) = c for the chosen critical point."""
    if not m.critical_points:
        raise ValueError("map has no critical points")
    y = float(m.critical_points[which][0])
    for _ in range(int(depth)):
        y = invert_step(m, y)
    return y


@dataclass(frozen=True)
class NonflatReport:
    degree_estimate: float
    log_slope: float
    max_bound_ratio: float
    window: float
    fit_points: int


def verify_nonflat(m: CircleMapLift, c: float, window: float, fit_points: int = 240) -> NonflatReport:
    """Audit a listed critical point.

    Fits the slope of log Df against log distance on both sides of c (the
    slope estimates degree - 1) and checks the derivative bound
    Df(x) <= 3 d |f(J)| / |J| on a sample of subintervals J of the window
    containing x.  Rejects points not listed and windows touching another
    critical point.
    """
    if window <= 0.0:
        raise ValueError("window must be positive")
    listed = None
    for cc, dd in m.critical_points:
        if circle_distance(cc, c) <= 1e-12:
            listed = (float(cc), float(dd))
            break
    if listed is None:
        raise ValueError(f"{c} is not a listed critical point of {m.family_tag}")
    c, degree = listed
    for cc, _ in m.critical_points:
        if abs(cc - c) > 1e-12 and circle_distance(cc, c) <= window:
            raise ValueError("window overlaps another critical point")

    offs = np.geomspace(window * 1e-3, window, fit_points // 2)
    xs = np.concatenate([c - offs[::-1], c + offs])
    dists = np.concatenate([offs[::-1], offs])
    dfs = np.asarray(m.deriv(reduce_mod1(xs)), dtype=float)
    mask = dfs > 0.0
    slope, _ = np.polyfit(np.log(dists[mask]), np.log(dfs[mask]), 1)

    # derivative bound on nested and offset subintervals J = [a, b] around c
    F = m.lift
    worst = 0.0
    for u in np.geomspace(0.02, 1.0, 14):
        for (la, lb) in ((u, u), (u, 0.35 * u), (0.35 * u, u)):
            a, b = c - la * window, c + lb * window
            fa, fb = float(F(a)), float(F(b))
            image = fb - fa
            if image <= 0.0:
                continue
            xg = np.linspace(a, b, 33)[1:-1]
            dg = np.asarray(m.deriv(reduce_mod1(xg)), dtype=float)
            ratio = float(np.max(dg)) * (b - a) / (3.0 * degree * image)
            worst = max(worst, ratio)
    return NonflatReport(
        degree_estimate=float(slope) + 1.0,
        log_slope=float(slope),
        max_bound_ratio=worst,
        window=window,
        fit_points=int(np.count_nonzero(mask)),
    )


def lift_invariant_report(m: CircleMapLift, samples: int = 4096, seed: int = 0) -> dict:
    """Numbers behind the basic lift checks: periodicity, monotonicity,
    finite-difference agreement of deriv away from critical points."""
    rng = np.random.default_rng(seed)
    xs = rng.uniform(0.0, 1.0, samples)
    period_defect = float(np.max(np.abs(m.lift(xs + 1.0) - m.lift(xs) - 1.0)))
    dfs = np.asarray(m.deriv(xs), dtype=float)
    h = 1e-6
    fd = (np.asarray(m.lift(xs + h)) - np.asarray(m.lift(xs - h))) / (2.0 * h)
    safe = dfs > 0.1
    fd_rel = float(np.max(np.abs(fd[safe] - dfs[safe]) / dfs[safe])) if safe.any() else 0.0
    return {
        "periodicity_defect": period_defect,
        "min_deriv": float(np.min(dfs)),
        "fd_relative_error": fd_rel,
    }
