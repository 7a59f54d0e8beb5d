"""Weighted orbit measures, the weighted transfer operator, and diagnostics.

A measure nu on the circle is 'automorphic of exponent s' for a map f when
integrating phi against nu equals integrating (phi o f) (Df)^s against nu
for every test function phi.  s = 0 is ordinary invariance; s = 1 singles
out Lebesgue for any C^1 circle map by change of variables.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .maps import CircleMapLift, eval_orbit, reduce_mod1, OrbitTrace
from .rotation import ContinuedFraction

DEFAULT_BINS = 2 ** 14
DEFAULT_TRIG_FREQ = 3
MASS_TOL = 1e-12

GAUSS3_NODES = np.array([-math.sqrt(0.6), 0.0, math.sqrt(0.6)])
GAUSS3_WEIGHTS = np.array([5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0])


# ---------------------------------------------------------------------------
# discrete measures

@dataclass(eq=False)
class DiscreteMeasure:
    """Probability measure as weighted atoms or a piecewise-constant density.

    kind 'atomic': points/weights arrays, weights summing to 1.
    kind 'grid': values[] are density values on uniform bins (mean 1).
    """

    kind: str
    points: Optional[np.ndarray] = None
    weights: Optional[np.ndarray] = None
    values: Optional[np.ndarray] = None

    @property
    def bins(self) -> int:
        return 0 if self.values is None else int(self.values.size)

    @property
    def total_mass(self) -> float:
        if self.kind == "atomic":
            return float(self.weights.sum())
        return float(self.values.mean())


def atomic_measure(points, weights) -> DiscreteMeasure:
    points = reduce_mod1(np.asarray(points, dtype=float))
    weights = np.asarray(weights, dtype=float)
    if points.shape != weights.shape:
        raise ValueError("points and weights must have matching shapes")
    if np.any(weights < 0.0):
        raise ValueError("weights must be nonnegative")
    tot = weights.sum()
    if not tot > 0.0:
        raise ValueError("measure has no mass")
    if abs(tot - 1.0) > MASS_TOL:
        weights = weights / tot
    return DiscreteMeasure(kind="atomic", points=points, weights=weights)


def grid_measure(values) -> DiscreteMeasure:
    values = np.asarray(values, dtype=float)
    if np.any(values < 0.0):
        raise ValueError("density values must be nonnegative")
    mean = values.mean()
    if not mean > 0.0:
        raise ValueError("measure has no mass")
    if abs(mean - 1.0) > MASS_TOL:
        values = values / mean
    return DiscreteMeasure(kind="grid", values=values)


def uniform_measure(bins: int = DEFAULT_BINS) -> DiscreteMeasure:
    return DiscreteMeasure(kind="grid", values=np.ones(int(bins)))


def binned(nu: DiscreteMeasure, bins: int) -> DiscreteMeasure:
    """Project onto `bins` uniform bins (atomic: histogram; grid: downbin)."""
    bins = int(bins)
    if nu.kind == "atomic":
        idx = np.floor(nu.points * bins).astype(np.int64) % bins
        hist = np.bincount(idx, weights=nu.weights, minlength=bins)
        return DiscreteMeasure(kind="grid", values=hist * bins)
    B = nu.bins
    if B % bins != 0:
        raise ValueError(f"cannot downbin {B} -> {bins}: not a divisor")
    vals = nu.values.reshape(bins, B // bins).mean(axis=1)
    return DiscreteMeasure(kind="grid", values=vals)


def l1_distance(a: DiscreteMeasure, b: DiscreteMeasure) -> float:
    if a.kind != "grid" or b.kind != "grid" or a.bins != b.bins:
        raise ValueError("L1 distance needs two grid measures on the same bins")
    return float(np.abs(a.values - b.values).mean())


def interval_mass(nu: DiscreteMeasure, start: float, length: float) -> float:
    """Mass of the arc [start, start+length), half-open at the right."""
    start = float(start) % 1.0
    length = float(length)
    if not 0.0 <= length <= 1.0:
        raise ValueError("length must lie in [0,1]")
    if nu.kind == "atomic":
        off = (nu.points - start) % 1.0
        return float(nu.weights[off < length].sum())
    vals = nu.values
    B = vals.size
    prefix = np.concatenate([[0.0], np.cumsum(vals)]) / B

    def cdf(t):  # mass of [0, t)
        pos = t * B
        j = min(int(math.floor(pos)), B)
        frac = pos - j
        out = prefix[j]
        if j < B:
            out += frac * vals[j] / B
        return out

    end = start + length
    if end <= 1.0:
        return cdf(end) - cdf(start)
    return (prefix[-1] - cdf(start)) + cdf(end - 1.0)


# ---------------------------------------------------------------------------
# test functions

@dataclass(frozen=True, eq=False)
class TestFunction:
    name: str
    value: Callable
    deriv: Callable
    sup_norm: float

    def __call__(self, x):
        return self.value(x)


@dataclass(frozen=True, eq=False)
class TestFunctionSet:
    functions: tuple

    @classmethod
    def trig(cls, max_frequency: int = DEFAULT_TRIG_FREQ) -> "TestFunctionSet":
        """Constant plus cos/sin pairs up to the requested frequency."""
        fns = [TestFunction(
            name="one",
            value=lambda x: np.ones_like(np.asarray(x, dtype=float)),
            deriv=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
            sup_norm=1.0,
        )]
        for j in range(1, int(max_frequency) + 1):
            w = 2.0 * math.pi * j
            fns.append(TestFunction(
                name=f"cos{j}",
                value=(lambda x, w=w: np.cos(w * np.asarray(x, dtype=float))),
                deriv=(lambda x, w=w: -w * np.sin(w * np.asarray(x, dtype=float))),
                sup_norm=1.0,
            ))
            fns.append(TestFunction(
                name=f"sin{j}",
                value=(lambda x, w=w: np.sin(w * np.asarray(x, dtype=float))),
                deriv=(lambda x, w=w: w * np.cos(w * np.asarray(x, dtype=float))),
                sup_norm=1.0,
            ))
        return cls(functions=tuple(fns))

    def __iter__(self):
        return iter(self.functions)


# ---------------------------------------------------------------------------
# orbit-sum measures

def _logsumexp(a: np.ndarray) -> float:
    finite = a[np.isfinite(a)]
    if finite.size == 0:
        return -math.inf
    m = float(finite.max())
    return m + math.log(np.exp(a - m).sum())


@dataclass(eq=False)
class OrbitSumMeasure:
    """Orbit of x to the level-n return time, weighted by (Df^i)^s.

    The normalizer S is the plain sum of the weights before scaling; the
    trace is kept so telescoped quantities (f^{q_n} x, Df^{q_n} x) reuse
    the exact same floats.
    """

    measure: DiscreteMeasure
    S: float
    log_S: float
    q: int
    level: int
    exponent: float
    base_point: float
    flagged_critical_hit: bool
    trace: OrbitTrace


def orbit_sum_measure(m: CircleMapLift, x: float, s: float, n: int,
                      cf: ContinuedFraction) -> OrbitSumMeasure:
    """Weighted orbit measure at level n: atoms f^i(x), weights (Df^i(x))^s.

    Negative exponents are outside the supported theory and rejected here.
    An exact critical hit zeroes all subsequent weights (flagged); s = 0
    gives uniform weights regardless of derivative values.
    """
    s = float(s)
    if s < 0.0:
        raise ValueError("exponent s must be >= 0")
    if n >= len(cf.denominators):
        raise ValueError("level beyond the available return times")
    q = int(cf.denominators[n])
    trace = eval_orbit(m, x, q)
    if s == 0.0:
        lw = np.zeros(q)
    else:
        lw = s * trace.log_derivs[:q]
    log_S = _logsumexp(lw)
    weights = np.exp(lw - log_S)
    nu = DiscreteMeasure(kind="atomic", points=trace.points[:q], weights=weights)
    return OrbitSumMeasure(
        measure=nu,
        S=math.exp(log_S),
        log_S=log_S,
        q=q,
        level=int(n),
        exponent=s,
        base_point=float(x) % 1.0,
        flagged_critical_hit=bool(trace.saturated[:q].any()),
        trace=trace,
    )


def telescoped_defect_bound(osm: OrbitSumMeasure, phi: TestFunction) -> float:
    """Closed form |phi(x) - phi(f^q x) (Df^q x)^s| / S for the orbit measure."""
    tr = osm.trace
    q = osm.q
    x0 = tr.points[0]
    xq = tr.points[q]
    if osm.exponent == 0.0:
        dpow = 1.0
    else:
        dpow = math.exp(osm.exponent * tr.log_derivs[q]) if np.isfinite(tr.log_derivs[q]) else 0.0
    val = float(phi.value(x0)) - float(phi.value(xq)) * dpow
    return abs(val) / osm.S


# ---------------------------------------------------------------------------
# automorphic defect

@dataclass(frozen=True)
class AutomorphicDefect:
    max_defect: float
    per_function: dict


def automorphic_defect(nu: DiscreteMeasure, m: CircleMapLift, s: float,
                       test_set: Optional[TestFunctionSet] = None) -> AutomorphicDefect:
    """max over the test set of |int phi d nu - int (phi o f)(Df)^s d nu|.

    Atomic measures are evaluated exactly; grid measures by midpoint
    quadrature per bin.
    """
    s = float(s)
    if s < 0.0:
        raise ValueError("exponent s must be >= 0")
    test_set = test_set or TestFunctionSet.trig()
    if nu.kind == "atomic":
        pts = nu.points
        w = nu.weights
    else:
        B = nu.bins
        pts = (np.arange(B) + 0.5) / B
        w = nu.values / B
    fx = m.step(pts)
    if s == 0.0:
        dpow = np.ones_like(pts)
    else:
        d = np.asarray(m.deriv(pts), dtype=float)
        dpow = np.where(d > 0.0, d, 0.0) ** s
    per = {}
    worst = 0.0
    for phi in test_set:
        lhs = float(np.dot(w, phi.value(pts)))
        rhs = float(np.dot(w, phi.value(fx) * dpow))
        per[phi.name] = abs(lhs - rhs)
        worst = max(worst, per[phi.name])
    return AutomorphicDefect(max_defect=worst, per_function=per)


# ---------------------------------------------------------------------------
# transfer operator

class TransferOperator:
    """One-step pushforward of a binned density with weight (Df)^s.

    Bin masses density * int_bin (Df)^s dx are spread over the image
    interval of the bin proportionally to overlap (the map is monotone, so
    images are intervals); the result is renormalized to mass one.  All
    geometry (bin weights, image spans, overlap fractions) depends only on
    (map, s, bins) and is precomputed, so repeated steps are cheap.
    Bins containing a critical point get 3-point Gauss quadrature for the
    weight: the integrand has a high-order zero and the midpoint value
    alone badly underestimates the mass.
    """

    def __init__(self, m: CircleMapLift, s: float, bins: int = DEFAULT_BINS):
        s = float(s)
        if s < 0.0:
            raise ValueError("exponent s must be >= 0")
        self.map = m
        self.s = s
        self.bins = B = int(bins)
        h = 1.0 / B
        edges = np.arange(B + 1) * h
        mids = edges[:-1] + 0.5 * h
        if s == 0.0:
            w = np.full(B, h)
        else:
            d = np.asarray(m.deriv(mids), dtype=float)
            w = np.where(d > 0.0, d, 0.0) ** s * h
            for c, _ in m.critical_points:
                j = int(math.floor((c % 1.0) * B)) % B
                a = edges[j]
                nodes = a + 0.5 * h * (1.0 + GAUSS3_NODES)
                dv = np.asarray(m.deriv(nodes), dtype=float)
                dv = np.where(dv > 0.0, dv, 0.0) ** s
                w[j] = 0.5 * h * float(GAUSS3_WEIGHTS @ dv)
        self.weight = w

        al = np.asarray(m.lift(edges[:-1]), dtype=float)
        ar = np.asarray(m.lift(edges[1:]), dtype=float)
        lengths = np.maximum(ar - al, 1e-300)
        a0 = al % 1.0
        j0 = np.floor(a0 * B).astype(np.int64)
        j1 = np.floor((a0 + lengths) * B).astype(np.int64)
        span = int(np.max(j1 - j0)) + 1
        self._idx = []
        self._frac = []
        for t in range(span):
            j = j0 + t
            lo = np.maximum(a0, j * h)
            hi = np.minimum(a0 + lengths, (j + 1) * h)
            ov = np.clip(hi - lo, 0.0, None)
            self._idx.append((j % B).astype(np.int64))
            self._frac.append(ov / lengths)

    def step(self, values: np.ndarray) -> np.ndarray:
        """Push a density (mean 1) one step; returns a density (mean 1)."""
        mass = values * self.weight
        total = mass.sum()
        if not total > 1e-300:
            raise ValueError("weighted mass underflow in transfer step")
        out = np.zeros(self.bins)
        for idx, frac in zip(self._idx, self._frac):
            out += np.bincount(idx, weights=mass * frac, minlength=self.bins)
        return out * (self.bins / out.sum())


def transfer_step(nu: DiscreteMeasure, m: CircleMapLift, s: float) -> DiscreteMeasure:
    """Single application of the weighted transfer operator to a grid measure."""
    if nu.kind != "grid":
        raise ValueError("transfer_step needs a grid measure")
    op = TransferOperator(m, s, nu.bins)
    return DiscreteMeasure(kind="grid", values=op.step(nu.values))


@dataclass(eq=False)
class SolveResult:
    measure: DiscreteMeasure
    residual: float
    defect: float
    iterations: int
    converged: bool
    flagged_nonconverging: bool
    cesaro_deltas: np.ndarray


def solve_automorphic(m: CircleMapLift, s: float, bins: int = DEFAULT_BINS,
                      iters: int = 3000, tol: float = 1e-7,
                      min_iters: int = 32,
                      test_set: Optional[TestFunctionSet] = None) -> SolveResult:
    """Cesaro averages of transfer iterates started from the uniform density.

    Stops when successive Cesaro averages differ by at most tol in L1 or
    when the iteration budget runs out; either way the current average is
    returned together with its one-step residual and automorphic defect.
    A non-decreasing delta series over the final quarter of the run flags
    the iteration as non-converging.
    """
    op = TransferOperator(m, s, bins)
    v = np.ones(int(bins))
    avg = v.copy()
    deltas = []
    converged = False
    k = 0
    for k in range(1, int(iters) + 1):
        v = op.step(v)
        new_avg = avg + (v - avg) / (k + 1.0)
        d = float(np.abs(new_avg - avg).mean())
        deltas.append(d)
        avg = new_avg
        if k >= min_iters and d <= tol:
            converged = True
            break
    residual = float(np.abs(op.step(avg) - avg).mean())
    nu = DiscreteMeasure(kind="grid", values=avg)
    defect = automorphic_defect(nu, m, s, test_set).max_defect
    deltas = np.asarray(deltas)
    tail = deltas[-max(4, deltas.size // 4):]
    flagged = bool(tail.size >= 4 and np.all(np.diff(tail) >= 0.0))
    return SolveResult(
        measure=nu,
        residual=residual,
        defect=defect,
        iterations=k,
        converged=converged,
        flagged_nonconverging=flagged,
        cesaro_deltas=deltas,
    )


# ---------------------------------------------------------------------------
# derivative bounds, Lyapunov exponent, divergence series

def return_derivative_bounds(m: CircleMapLift, return_times,
                             grid_size: int = 2 ** 13,
                             extra_points=None) -> dict:
    """Empirical range of Df^q over a grid, per return time q.

    The sup across all probed times is the derivative bound governing the
    geometry and converges under grid refinement.  The inf is reported for
    diagnosis only: on a map with critical points it drops to zero as the
    grid resolves critical preimages, so it supports no lower bound.
    """
    qs = sorted(set(int(q) for q in return_times))
    if not qs:
        raise ValueError("need at least one return time")
    xs = np.arange(grid_size) / grid_size
    if extra_points is not None:
        xs = np.concatenate([xs, reduce_mod1(np.asarray(extra_points, dtype=float))])
    qset = set(qs)
    logcum = np.zeros_like(xs)
    out = {}
    for i in range(1, qs[-1] + 1):
        d = np.asarray(m.deriv(xs), dtype=float)
        logcum = logcum + np.log(np.maximum(d, 1e-300))
        xs = m.step(xs)
        if i in qset:
            out[i] = (math.exp(float(logcum.min())), math.exp(float(logcum.max())))
    return out


def max_return_derivative(m: CircleMapLift, return_times, grid_size: int = 2 ** 13,
                          extra_points=None) -> float:
    """Empirical sup over a grid of Df^q across the given return times."""
    bounds = return_derivative_bounds(m, return_times, grid_size, extra_points)
    return max(hi for _, hi in bounds.values())


@dataclass(frozen=True)
class LyapunovEstimate:
    value: float
    bound: Optional[float]
    q: Optional[int]
    c1hat: Optional[float]


def lyapunov_integral(m: CircleMapLift, mu, c1hat: Optional[float] = None) -> LyapunovEstimate:
    """Integral of log Df against an invariant-measure approximation.

    For an orbit-sum measure (exponent 0) this collapses to the exact
    closed form log Df^{q}(x) / q; the expected bound log(c1hat)/q is
    attached when a derivative bound is supplied.  Grid measures are
    integrated by midpoint quadrature.
    """
    if isinstance(mu, OrbitSumMeasure):
        if mu.exponent != 0.0:
            raise ValueError("lyapunov_integral expects the exponent-0 measure")
        q = mu.q
        value = float(mu.trace.log_derivs[q]) / q
        bound = math.log(c1hat) / q if c1hat is not None else None
        return LyapunovEstimate(value=value, bound=bound, q=q, c1hat=c1hat)
    if isinstance(mu, DiscreteMeasure) and mu.kind == "grid":
        B = mu.bins
        mids = (np.arange(B) + 0.5) / B
        d = np.maximum(np.asarray(m.deriv(mids), dtype=float), 1e-300)
        value = float(np.mean(mu.values * np.log(d)))
        return LyapunovEstimate(value=value, bound=None, q=None, c1hat=c1hat)
    raise ValueError("unsupported measure type for lyapunov_integral")


@dataclass(frozen=True)
class SigmaSeries:
    partials: np.ndarray
    saturated: bool


def sigma_partial(m: CircleMapLift, x: float, s: float, N: int) -> SigmaSeries:
    """Partial sums of the weight series sum_n (Df^n(x))^s, n = 0..N.

    Divergence of this series is what makes x a usable base point for
    exponent-s orbit measures; a critical preimage truncates it to a
    finite sum (the tail weights are exactly zero).
    """
    s = float(s)
    if s < 0.0:
        raise ValueError("exponent s must be >= 0")
    N = int(N)
    if not 1 <= N <= 10 ** 6:
        raise ValueError("N must be in 1..10^6")
    F = m.scalar_lift or m.lift
    DF = m.scalar_deriv or m.deriv
    x = float(x) % 1.0
    partials = np.empty(N + 1)
    total = 1.0
    partials[0] = 1.0
    acc = 0.0
    saturated = False
    for n in range(1, N + 1):
        d = float(DF(x))
        if d <= 0.0 or math.isinf(acc):
            acc = -math.inf
        else:
            acc += math.log(d)
        z = float(F(x))
        x = z - math.floor(z)
        if s == 0.0:
            term = 1.0
        elif math.isinf(acc):
            term = 0.0
        else:
            e = s * acc
            if e > 709.0:
                term = 1e308
                saturated = True
            else:
                term = math.exp(e)
        total += term
        partials[n] = total
    return SigmaSeries(partials=partials, saturated=saturated)


# ---------------------------------------------------------------------------
# measure-to-length ratio scan on a partition

@dataclass(eq=False)
class OmegaRatioScan:
    level: int
    exponent: float
    ratios: np.ndarray
    kinds: np.ndarray
    skipped: int
    long_max: float
    long_min: float
    short_max: float
    short_min: float
    same_type_ratio: float
    short_to_long_ratio: float


def omega_ratio_scan(nu: DiscreteMeasure, P, s: float) -> OmegaRatioScan:
    """Per-atom ratio nu(atom) / |atom|^s over a dynamical partition.

    Comparability of these ratios across atoms of the same kind, and a
    one-sided bound of short against long, is the quantitative signature
    of an exponent-s automorphic measure.  Atoms carrying zero mass (an
    under-resolved nu) are skipped and counted.
    """
    s = float(s)
    masses = np.array([interval_mass(nu, st, ln) for st, ln in zip(P.starts, P.lengths)])
    with np.errstate(divide="ignore"):
        denom = P.lengths ** s if s != 0.0 else np.ones_like(P.lengths)
    ratios = np.where(masses > 0.0, masses / denom, np.nan)
    valid = masses > 0.0
    skipped = int(np.count_nonzero(~valid))
    is_long = (P.kinds == 0) & valid
    is_short = (P.kinds == 1) & valid
    if not is_long.any() or not is_short.any():
        raise ValueError("measure resolves no atoms of one kind; refine nu or lower the level")
    lmax, lmin = float(np.nanmax(ratios[is_long])), float(np.nanmin(ratios[is_long]))
    smax, smin = float(np.nanmax(ratios[is_short])), float(np.nanmin(ratios[is_short]))
    return OmegaRatioScan(
        level=P.level,
        exponent=s,
        ratios=ratios,
        kinds=P.kinds,
        skipped=skipped,
        long_max=lmax,
        long_min=lmin,
        short_max=smax,
        short_min=smin,
        same_type_ratio=max(lmax / lmin, smax / smin),
        short_to_long_ratio=smax / lmin,
    )
