"""Finite Denjoy-type blow-up of an irrational rotation.

Each orbit point theta_j = {j rho}, |j| <= N, is replaced by an interval
I_j whose length decays polynomially in |j|; the lengths are normalized so
the inserted intervals carry total mass exactly one half, and the old
coordinate keeps the other half.  The map sends I_j affinely onto I_{j+1}
and moves the leftover (gap) points by the rotation in the collapsed
coordinate.  The truncation is closed up by sending I_N onto I_{-N}; the
two have equal length, so the gluing is an isometry, and all the weight
bookkeeping below telescopes exactly around the cycle.  The price of
truncation is localized at that seam and is measured, not hidden: the
junction interval carries mass on the order of N^{-3 s} for exponent-s
weights, below the tail of the ideal infinite construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .maps import CircleMapLift, reduce_mod1, circle_distance, custom_map
from .measures import DiscreteMeasure, TestFunction, TestFunctionSet, automorphic_defect, AutomorphicDefect

DEFAULT_LENGTH_EXPONENT = 3.0


def power_tail(a: int, p: float, head: int = 2000) -> float:
    """sum_{m >= a} m^{-p} for p > 1: exact head plus Euler-Maclaurin tail."""
    if p <= 1.0:
        raise ValueError("power_tail needs p > 1")
    a = int(a)
    if a < 1:
        raise ValueError("power_tail needs a >= 1")
    b = a + int(head)
    ms = np.arange(a, b, dtype=float)
    partial = float((ms ** (-p)).sum())
    x = float(b)
    tail = x ** (1.0 - p) / (p - 1.0) + 0.5 * x ** (-p) + p * x ** (-p - 1.0) / 12.0
    return partial + tail


@dataclass(eq=False)
class DenjoyMap:
    """Piecewise description of the blown-up circle, sorted by position.

    All per-interval arrays are indexed by sorted circle position; `succ`
    gives the sorted index of the dynamical successor interval, and
    `seam_index` marks the junction interval I_N whose ideal successor
    fell outside the truncation.
    """

    rho: float
    N: int
    length_exponent: float
    normalizer: float
    offsets: np.ndarray
    thetas: np.ndarray
    lengths: np.ndarray
    lefts: np.ndarray
    rights: np.ndarray
    cum_lengths: np.ndarray
    succ: np.ndarray
    position_of_offset: np.ndarray
    seam_index: int

    @property
    def interval_count(self) -> int:
        return int(self.offsets.size)

    def sorted_index(self, offset: int) -> int:
        return int(self.position_of_offset[int(offset) + self.N])

    def locate(self, x):
        """Sorted interval index left of each point and an inside mask."""
        x = reduce_mod1(np.asarray(x, dtype=float))
        k = np.searchsorted(self.lefts, x, side="right") - 1
        inside = (k >= 0) & (x < self.rights[np.maximum(k, 0)])
        return k, inside

    def step_points(self, x):
        xs = reduce_mod1(np.asarray(x, dtype=float))
        scalar = xs.ndim == 0
        xs = np.atleast_1d(xs)
        k, inside = self.locate(xs)
        out = np.empty_like(xs)
        ki = k[inside]
        t = (xs[inside] - self.lefts[ki]) / self.lengths[ki]
        ko = self.succ[ki]
        out[inside] = self.lefts[ko] + t * self.lengths[ko]
        gap = ~inside
        kg = k[gap]
        y = 2.0 * (xs[gap] - self.cum_lengths[kg + 1])
        y = (np.clip(y, 0.0, 1.0) + self.rho) % 1.0
        m = np.searchsorted(self.thetas, y)
        out[gap] = 0.5 * y + self.cum_lengths[m]
        return float(out[0]) if scalar else out

    def deriv_points(self, x):
        xs = reduce_mod1(np.asarray(x, dtype=float))
        scalar = xs.ndim == 0
        xs = np.atleast_1d(xs)
        k, inside = self.locate(xs)
        out = np.ones_like(xs)
        ki = k[inside]
        out[inside] = self.lengths[self.succ[ki]] / self.lengths[ki]
        return float(out[0]) if scalar else out

    def collapse(self, x):
        """Semiconjugacy onto the base rotation: intervals to their theta."""
        xs = reduce_mod1(np.asarray(x, dtype=float))
        scalar = xs.ndim == 0
        xs = np.atleast_1d(xs)
        k, inside = self.locate(xs)
        out = np.empty_like(xs)
        out[inside] = self.thetas[k[inside]]
        kg = k[~inside]
        out[~inside] = np.clip(2.0 * (xs[~inside] - self.cum_lengths[kg + 1]), 0.0, 1.0) % 1.0
        return float(out[0]) if scalar else out

    def expand(self, y):
        """Right inverse of collapse: base coordinate to the blown-up circle."""
        ys = reduce_mod1(np.asarray(y, dtype=float))
        scalar = ys.ndim == 0
        ys = np.atleast_1d(ys)
        m = np.searchsorted(self.thetas, ys)
        out = 0.5 * ys + self.cum_lengths[m]
        return float(out[0]) if scalar else out


def build_denjoy(rho: float, N: int, length_exponent: float = DEFAULT_LENGTH_EXPONENT) -> DenjoyMap:
    """Blow up the orbit segment {j rho}, |j| <= N, into intervals.

    Lengths are c (|j|+2)^{-p} with c chosen so they sum to exactly one
    half; p > 1 is required for the ideal infinite construction to have
    finite total length.  Raises if two orbit points collide at this
    truncation depth (rho too close to rational).
    """
    rho = float(rho)
    if not 0.0 < rho < 1.0:
        raise ValueError("rho must lie strictly between 0 and 1")
    N = int(N)
    if N < 2:
        raise ValueError("need N >= 2")
    p = float(length_exponent)
    if p <= 1.0:
        raise ValueError("length exponent must exceed 1")
    offs = np.arange(-N, N + 1)
    theta = (offs * rho) % 1.0
    raw = (np.abs(offs) + 2.0) ** (-p)
    c = 0.5 / raw.sum()
    ell = c * raw
    order = np.argsort(theta)
    th_s = theta[order]
    len_s = ell[order]
    off_s = offs[order]
    cum = np.concatenate([[0.0], np.cumsum(len_s)])
    lefts = 0.5 * th_s + cum[:-1]
    rights = lefts + len_s
    gaps = np.diff(lefts) - len_s[:-1]
    wrap_gap = lefts[0] + 1.0 - rights[-1]
    if min(gaps.min(initial=np.inf), wrap_gap) <= 0.0:
        raise ValueError("orbit points collide at this depth; intervals overlap")
    pos_of = np.empty(2 * N + 1, dtype=np.int64)
    pos_of[off_s + N] = np.arange(2 * N + 1)
    nxt = np.where(off_s == N, -N, off_s + 1)
    succ = pos_of[nxt + N]
    return DenjoyMap(
        rho=rho, N=N, length_exponent=p, normalizer=c,
        offsets=off_s, thetas=th_s, lengths=len_s,
        lefts=lefts, rights=rights, cum_lengths=cum,
        succ=succ, position_of_offset=pos_of,
        seam_index=int(pos_of[N + N]),
    )


def as_circle_map(dm: DenjoyMap) -> CircleMapLift:
    """Adapter exposing the blow-up through the circle-map interface.

    Pointwise evaluation (step, deriv) is faithful everywhere.  The lift
    is monotone except across the truncation seam, where the interval
    branch wraps while its neighborhood flows ideally, so orbit machinery
    that relies on global monotonicity should stay away from that seam.
    """
    base = dm.step_points(0.0)

    def lift(x):
        xs = np.asarray(x, dtype=float)
        fl = np.floor(xs)
        img = dm.step_points(xs - fl)
        out = fl + np.where(np.asarray(img) < base, np.asarray(img) + 1.0, img)
        return out if xs.ndim else float(out)

    def deriv(x):
        return dm.deriv_points(np.asarray(x, dtype=float) % 1.0)

    return custom_map(
        lift=lift, deriv=deriv, critical_points=(),
        family_tag="denjoy_blowup",
        parameters={"rho": dm.rho, "N": dm.N, "length_exponent": dm.length_exponent},
    )


# ---------------------------------------------------------------------------
# certificates

@dataclass(frozen=True)
class WanderingCertificate:
    interval_count: int
    min_gap: float
    total_blown_mass: float
    orbit_alignment_max: float
    disjoint: bool


def wandering_certificate(dm: DenjoyMap) -> WanderingCertificate:
    """Exact disjointness and orbit bookkeeping for the interval family.

    min_gap is the smallest slack between consecutive intervals (wrap
    included); orbit_alignment_max checks that each left endpoint maps
    bitwise onto the successor's left endpoint.
    """
    gaps = np.diff(dm.lefts) - dm.lengths[:-1]
    wrap_gap = dm.lefts[0] + 1.0 - dm.rights[-1]
    min_gap = float(min(gaps.min(initial=np.inf), wrap_gap))
    imgs = dm.step_points(dm.lefts)
    align = float(np.abs(imgs - dm.lefts[dm.succ]).max())
    return WanderingCertificate(
        interval_count=dm.interval_count,
        min_gap=min_gap,
        total_blown_mass=float(dm.lengths.sum()),
        orbit_alignment_max=align,
        disjoint=bool(min_gap > 0.0),
    )


@dataclass(eq=False)
class RotationTable:
    mesh: np.ndarray
    defects: np.ndarray
    max_defect: float
    seam_mismatch: float
    seam_offset: int


def degenerate_rotation_table(dm: DenjoyMap, gap_samples: int = 64,
                              seed: int = 3) -> RotationTable:
    """Semiconjugacy audit: collapse(f(x)) against rotated collapse(x).

    Checked on all interval endpoints plus random gap points.  Points of
    the seam interval are excluded from the headline defect because the
    wrap is exactly the place the finite model departs from the ideal
    rotation; that departure is reported separately as seam_mismatch.
    """
    rng = np.random.default_rng(seed)
    ys = rng.random(int(gap_samples))
    mesh = np.concatenate([dm.lefts, dm.rights, dm.expand(ys)])
    k, inside = dm.locate(mesh)
    on_seam = inside & (k == dm.seam_index)
    down_of_image = dm.collapse(dm.step_points(mesh))
    rotated = (dm.collapse(mesh) + dm.rho) % 1.0
    defects = circle_distance(down_of_image, rotated)
    max_defect = float(defects[~on_seam].max())
    seam_theta = dm.thetas[dm.seam_index]
    seam_mismatch = float(circle_distance((seam_theta + dm.rho) % 1.0,
                                          dm.thetas[dm.succ[dm.seam_index]]))
    return RotationTable(
        mesh=mesh, defects=defects, max_defect=max_defect,
        seam_mismatch=seam_mismatch, seam_offset=dm.N,
    )


# ---------------------------------------------------------------------------
# atomic measures on the interval orbit

@dataclass(eq=False)
class DenjoyMeasure:
    measure: DiscreteMeasure
    exponent: float
    relative_position: float
    S: float
    seam_mass: float
    ideal_tail: Optional[float]


def ideal_tail_mass(N: int, length_exponent: float, s: float) -> Optional[float]:
    """Weight the ideal infinite construction puts beyond |j| = N.

    Ideal exponent-s weights are proportional to (|j|+2)^{-p s}; the tail
    is only defined when p s > 1.
    """
    ps = float(length_exponent) * float(s)
    if ps <= 1.0:
        return None
    Z = 2.0 ** (-ps) + 2.0 * power_tail(3, ps)
    return 2.0 * power_tail(int(N) + 3, ps) / Z


def denjoy_atomic_measure(dm: DenjoyMap, s: float,
                          relative_position: float = 0.5) -> DenjoyMeasure:
    """One atom per interval at a shared relative position, weighted by length^s.

    The affine dynamics preserves relative position, so this atom family
    is carried exactly onto itself and the exponent-s defect under the
    built map is pure rounding noise.  The seam interval's weight bounds
    how far the truncated measure can sit from the ideal infinite one.
    """
    s = float(s)
    if s < 0.0:
        raise ValueError("exponent s must be >= 0")
    t = float(relative_position)
    if not 0.0 < t < 1.0:
        raise ValueError("relative position must lie strictly inside (0,1)")
    atoms = dm.lefts + t * dm.lengths
    raw = dm.lengths ** s if s != 0.0 else np.ones_like(dm.lengths)
    S = float(raw.sum())
    nu = DiscreteMeasure(kind="atomic", points=atoms, weights=raw / S)
    return DenjoyMeasure(
        measure=nu, exponent=s, relative_position=t, S=S,
        seam_mass=float(raw[dm.seam_index] / S),
        ideal_tail=ideal_tail_mass(dm.N, dm.length_exponent, s),
    )


def invariance_defect(dm: DenjoyMap, nu: DiscreteMeasure, s: float,
                      test_set: Optional[TestFunctionSet] = None) -> AutomorphicDefect:
    """Exponent-s defect of a measure under the blown-up map."""
    return automorphic_defect(nu, as_circle_map(dm), s, test_set)


# ---------------------------------------------------------------------------
# bump functions and order-one distributions

def bump_function(center: float, width: float, name: str = "bump") -> TestFunction:
    """Smooth bump supported on the arc of given width around center."""
    center = float(center) % 1.0
    width = float(width)
    if not 0.0 < width < 1.0:
        raise ValueError("width must lie in (0,1)")

    def _rel(x):
        xs = np.asarray(x, dtype=float)
        return (((xs - center + 0.5) % 1.0) - 0.5) * (2.0 / width)

    def value(x):
        t = _rel(x)
        out = np.zeros_like(t)
        m = np.abs(t) < 1.0
        with np.errstate(divide="ignore", over="ignore"):
            out[m] = np.exp(1.0 - 1.0 / (1.0 - t[m] ** 2))
        return out

    def deriv(x):
        t = _rel(x)
        out = np.zeros_like(t)
        m = np.abs(t) < 1.0
        tm = t[m]
        with np.errstate(divide="ignore", over="ignore"):
            out[m] = np.exp(1.0 - 1.0 / (1.0 - tm ** 2)) * (-2.0 * tm / (1.0 - tm ** 2) ** 2)
        out[m] *= 2.0 / width
        return out

    return TestFunction(name=name, value=value, deriv=deriv, sup_norm=1.0)


def interval_bump(dm: DenjoyMap, offset: int, center_rel: float = 0.35,
                  width_rel: float = 0.5) -> TestFunction:
    """Bump supported strictly inside the interval at the given offset."""
    k = dm.sorted_index(offset)
    if not (0.0 < center_rel - width_rel / 2.0 and center_rel + width_rel / 2.0 < 1.0):
        raise ValueError("bump support must stay inside the interval")
    center = dm.lefts[k] + center_rel * dm.lengths[k]
    return bump_function(center, width_rel * dm.lengths[k], name=f"bump@{offset}")


@dataclass(frozen=True)
class DistributionPairing:
    value: float
    closed_form: Optional[float]
    S: float
    exponent: float


def distribution_pairing(dm: DenjoyMap, s: float, u: TestFunction,
                         relative_position: float = 0.5,
                         support_offset: Optional[int] = None) -> DistributionPairing:
    """Pair the order-one automorphic distribution with a smooth function.

    The exponent-s automorphic object beyond measures is a weighted sum of
    derivative evaluations: weights length^{s+1}, one sample point per
    interval.  For a test function supported inside a single interval the
    whole sum collapses to one term, returned as closed_form; the two
    routes must agree to rounding.
    """
    s = float(s)
    if s < 0.0:
        raise ValueError("exponent s must be >= 0")
    t = float(relative_position)
    atoms = dm.lefts + t * dm.lengths
    wts = dm.lengths ** (s + 1.0)
    S = float(wts.sum())
    value = float(np.dot(wts, np.asarray(u.deriv(atoms), dtype=float))) / S
    closed = None
    if support_offset is not None:
        k = dm.sorted_index(support_offset)
        closed = float(wts[k] * float(np.asarray(u.deriv(atoms[k:k + 1]))[0])) / S
    return DistributionPairing(value=value, closed_form=closed, S=S, exponent=s)


def distribution_defect(dm: DenjoyMap, s: float, u: TestFunction,
                        relative_position: float = 0.5) -> float:
    """Automorphy defect of the order-one distribution on affine pieces.

    Pairing with (u o f) Df^s uses the chain rule, so the comparison sum
    reweights by the successor length ratio to power s+1; around the full
    cycle the reindexing is exact and the defect is rounding noise.
    """
    s = float(s)
    t = float(relative_position)
    atoms = dm.lefts + t * dm.lengths
    wts = dm.lengths ** (s + 1.0)
    S = float(wts.sum())
    plain = float(np.dot(wts, np.asarray(u.deriv(atoms), dtype=float))) / S
    images = dm.step_points(atoms)
    ratio = dm.lengths[dm.succ] / dm.lengths
    composite = np.asarray(u.deriv(images), dtype=float) * ratio ** (s + 1.0)
    pushed = float(np.dot(wts, composite)) / S
    return abs(pushed - plain)


# ---------------------------------------------------------------------------
# gap orbits

@dataclass(eq=False)
class GapOrbitAverage:
    average: float
    steps: int
    start: float
    points: np.ndarray


def orbit_average_on_gaps(dm: DenjoyMap, fn: Callable, steps: int,
                          upstairs_start: Optional[float] = None) -> GapOrbitAverage:
    """Birkhoff average of fn along an orbit that never enters an interval.

    The start is given in the collapsed coordinate and must avoid the
    blown-up orbit {j rho}; its forward orbit then stays in the gap set,
    so any function supported inside interval interiors averages to
    exactly zero.
    """
    steps = int(steps)
    if steps < 1:
        raise ValueError("need at least one step")
    if upstairs_start is None:
        upstairs_start = (dm.rho / 2.0 + 0.12345678910111213) % 1.0
    x = dm.expand(float(upstairs_start))
    _, inside = dm.locate(np.array([x]))
    if inside[0]:
        raise ValueError("start collides with a blown-up orbit point")
    pts = np.empty(steps)
    for i in range(steps):
        pts[i] = x
        x = dm.step_points(x)
    avg = float(np.mean(np.asarray(fn(pts), dtype=float)))
    return GapOrbitAverage(average=avg, steps=steps, start=float(upstairs_start), points=pts)
