"""Approximate coboundaries and return-time deviation diagnostics.

Two quantitative stories live here.  First: for a circle map with return
times q_k, the averaged derivative sums give an explicit function w_k with

    (w_k o f) Df - w_k  =  (Df - 1) + (1/q_k)(1 - Df^{q_k}),

so Df - 1 is a coboundary up to an error whose sup norm decays like 1/q_k
whenever the return derivatives Df^{q_k} stay bounded.  Second: Birkhoff
sums of a test function over a return time q_n, recentered by q_n times
the invariant mean, stay bounded by the variation classically; for the
map families studied here the recentered sums actually decay along
levels, and dk_improved_series measures that decay with explicit
uncertainty tracking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .maps import CircleMapLift, reduce_mod1
from .rotation import ContinuedFraction

DEFAULT_VARIATION_SAMPLES = 2 ** 16


# ---------------------------------------------------------------------------
# sampled functions

@dataclass(eq=False)
class SampledFunction:
    """A circle function known on a uniform grid, optionally exactly.

    When value_fn is present it is used for evaluation and refinement;
    otherwise evaluation linearly interpolates the stored samples.
    """

    values: np.ndarray
    value_fn: Optional[Callable] = None
    deriv_fn: Optional[Callable] = None
    name: str = ""

    @classmethod
    def from_callable(cls, fn: Callable, samples: int = 2 ** 13,
                      deriv: Optional[Callable] = None, name: str = "") -> "SampledFunction":
        xs = np.arange(int(samples)) / int(samples)
        return cls(values=np.asarray(fn(xs), dtype=float), value_fn=fn,
                   deriv_fn=deriv, name=name)

    @property
    def samples(self) -> int:
        return int(self.values.size)

    def __call__(self, x):
        if self.value_fn is not None:
            return self.value_fn(x)
        xs = reduce_mod1(np.asarray(x, dtype=float))
        M = self.samples
        pos = xs * M
        j = np.floor(pos).astype(np.int64) % M
        t = pos - np.floor(pos)
        v = self.values
        return (1.0 - t) * v[j] + t * v[(j + 1) % M]

    def mean(self) -> float:
        return float(self.values.mean())

    def variation(self, samples: int = DEFAULT_VARIATION_SAMPLES) -> float:
        """Total variation around the circle.

        Dyadic sums of |increments| underestimate by O(h^2) for smooth
        functions; one Richardson step removes the leading term.
        """
        if self.value_fn is None:
            v = self.values
            return float(np.abs(np.diff(np.concatenate([v, v[:1]]))).sum())
        coarse = self._variation_at(samples // 2)
        fine = self._variation_at(samples)
        return fine + (fine - coarse) / 3.0

    def _variation_at(self, M: int) -> float:
        xs = np.arange(M + 1) / M
        v = np.asarray(self.value_fn(xs), dtype=float)
        return float(np.abs(np.diff(v)).sum())


# ---------------------------------------------------------------------------
# coboundary approximation

def _transfer_sums(m: CircleMapLift, x, q: int):
    """Running products along orbits: sum_{j<q} Df^j(x) and Df^q(x)."""
    xs = reduce_mod1(np.asarray(x, dtype=float))
    prod = np.ones_like(xs)
    total = np.ones_like(xs)
    for j in range(q):
        prod = prod * np.asarray(m.deriv(xs), dtype=float)
        xs = m.step(xs)
        if j < q - 1:
            total = total + prod
    return total, prod


@dataclass(eq=False)
class CoboundaryApproximation:
    """w_k = 1 - (1/q_k) sum_{j<q_k} Df^j, tabulated on a uniform grid."""

    level: int
    q: int
    grid: np.ndarray
    values: np.ndarray
    return_deriv: np.ndarray
    map: CircleMapLift

    @property
    def sup_norm(self) -> float:
        return float(np.abs(self.values).max())

    @property
    def lebesgue_mean(self) -> float:
        # each Df^j has unit integral around the circle, so the exact
        # Lebesgue mean of w_k is zero; this reports the quadrature value
        return float(self.values.mean())

    def evaluate(self, x):
        total, _ = _transfer_sums(self.map, x, self.q)
        return 1.0 - total / self.q


def w_hat(m: CircleMapLift, level: int, cf: ContinuedFraction,
          grid_size: int = 2 ** 13) -> CoboundaryApproximation:
    if level >= len(cf.denominators):
        raise ValueError("level beyond the available return times")
    q = int(cf.denominators[level])
    grid = np.arange(int(grid_size)) / int(grid_size)
    total, prod = _transfer_sums(m, grid, q)
    return CoboundaryApproximation(
        level=int(level), q=q, grid=grid,
        values=1.0 - total / q, return_deriv=prod, map=m,
    )


@dataclass(frozen=True)
class CoboundaryReport:
    level: int
    q: int
    defect_sup: float
    route_agreement: float
    lebesgue_mean: float
    sup_norm: float
    expected_bound: Optional[float]


def coboundary_defect(m: CircleMapLift, level: int, cf: ContinuedFraction,
                      grid_size: int = 2 ** 13,
                      c1hat: Optional[float] = None) -> CoboundaryReport:
    """Check the coboundary identity by two independent evaluation routes.

    Route one assembles (w o f) Df - w - (Df - 1) from fresh orbit sums at
    the grid points and at their images.  Route two evaluates the closed
    form (1/q)(1 - Df^q) from a single running product.  The two must
    agree to rounding; their common size is the defect, expected to be at
    most (1 + c1hat)/q when a return-derivative bound is available.
    """
    approx = w_hat(m, level, cf, grid_size)
    xs = approx.grid
    q = approx.q
    fx = m.step(xs)
    w_at_fx = approx.evaluate(fx)
    w_at_x = approx.values
    df = np.asarray(m.deriv(xs), dtype=float)
    lhs = w_at_fx * df - w_at_x - (df - 1.0)
    rhs = (1.0 - approx.return_deriv) / q
    agreement = float(np.abs(lhs - rhs).max())
    bound = (1.0 + c1hat) / q if c1hat is not None else None
    return CoboundaryReport(
        level=int(level), q=q,
        defect_sup=float(np.abs(rhs).max()),
        route_agreement=agreement,
        lebesgue_mean=approx.lebesgue_mean,
        sup_norm=approx.sup_norm,
        expected_bound=bound,
    )


# ---------------------------------------------------------------------------
# Birkhoff deviations at return times

def birkhoff_sums(m: CircleMapLift, phi: Callable, points, q: int) -> np.ndarray:
    """sum_{i<q} phi(f^i x) for each starting point, advanced in lockstep."""
    xs = reduce_mod1(np.asarray(points, dtype=float))
    acc = np.zeros_like(xs)
    for _ in range(q):
        acc = acc + np.asarray(phi(xs), dtype=float)
        xs = m.step(xs)
    return acc


def invariant_mean(m: CircleMapLift, phi: Callable, q: int, x0: float = 0.0,
                   variation: Optional[float] = None):
    """Invariant-measure mean of phi from one Birkhoff average.

    Over a genuine return time q the average is within variation(phi)/q of
    the integral against the unique invariant measure; the bound is
    returned alongside.  Spending a long orbit here is what makes the
    deviation series downstream trustworthy.
    """
    total = float(birkhoff_sums(m, phi, np.array([x0]), q)[0])
    mean = total / q
    err = (variation / q) if variation is not None else None
    return mean, err


@dataclass(eq=False)
class DeviationSample:
    level: int
    q: int
    max_abs: float
    uncertainty: float
    values: np.ndarray


def dk_deviation(m: CircleMapLift, phi: Callable, mean: float, level: int,
                 cf: ContinuedFraction, points,
                 mean_err: float = 0.0) -> DeviationSample:
    """Worst recentered Birkhoff sum |S_q phi - q mean| over sample points."""
    if level >= len(cf.denominators):
        raise ValueError("level beyond the available return times")
    q = int(cf.denominators[level])
    sums = birkhoff_sums(m, phi, points, q)
    vals = np.abs(sums - q * mean)
    return DeviationSample(level=int(level), q=q, max_abs=float(vals.max()),
                           uncertainty=q * float(mean_err), values=vals)


@dataclass(eq=False)
class DeviationSeriesReport:
    levels: tuple
    qs: tuple
    deviations: np.ndarray
    uncertainties: np.ndarray
    base: float
    base_uncertainty: float
    top: float
    top_uncertainty: float
    verdict: str


def dk_improved_series(m: CircleMapLift, phi: Callable, cf: ContinuedFraction,
                       mean: float, mean_err: float,
                       base_levels: Sequence[int] = (4, 5, 6),
                       top_level: int = 11,
                       points=None, n_points: int = 32,
                       seed: int = 7) -> DeviationSeriesReport:
    """Decay test for recentered Birkhoff sums along return levels.

    Levels are compared with their uncertainties (q times the mean error):
    the top level passes when its deviation provably sits at or below half
    the base plateau, fails when it provably exceeds it, and is otherwise
    inconclusive.  A top uncertainty as large as the top deviation itself
    also refuses a verdict.
    """
    if points is None:
        rng = np.random.default_rng(seed)
        points = np.sort(rng.random(int(n_points)))
    levels = tuple(sorted(set(int(b) for b in base_levels))) + (int(top_level),)
    if len(set(levels)) != len(levels):
        raise ValueError("top level must not be one of the base levels")
    devs = []
    uncs = []
    qs = []
    for lv in levels:
        samp = dk_deviation(m, phi, mean, lv, cf, points, mean_err)
        devs.append(samp.max_abs)
        uncs.append(samp.uncertainty)
        qs.append(samp.q)
    devs = np.asarray(devs)
    uncs = np.asarray(uncs)
    nb = len(levels) - 1
    base = float(devs[:nb].max())
    base_unc = float(uncs[:nb].max())
    top = float(devs[-1])
    top_unc = float(uncs[-1])
    if top_unc >= top:
        verdict = "inconclusive"
    elif top + top_unc <= 0.5 * (base - base_unc):
        verdict = "pass"
    elif top - top_unc > 0.5 * (base + base_unc):
        verdict = "fail"
    else:
        verdict = "inconclusive"
    return DeviationSeriesReport(
        levels=levels, qs=tuple(qs), deviations=devs, uncertainties=uncs,
        base=base, base_uncertainty=base_unc, top=top, top_uncertainty=top_unc,
        verdict=verdict,
    )
