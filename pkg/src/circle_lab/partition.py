"""Dynamical partitions from closest-return times, and interval combinatorics."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .maps import CircleMapLift, eval_orbit, rigid_rotation
from .rotation import ContinuedFraction

ENDPOINT_FLOOR = 1e-13
PARTITION_TOL = 1e-10


@dataclass(eq=False)
class DynamicalPartition:
    """Level-n partition of the circle by two blocks of orbit arcs.

    q_low iterates of the level-(n+1) base arc and q_high iterates of the
    level-n base arc tile the circle; atoms are stored sorted by left
    endpoint as positively oriented arcs [start, end).  kinds: 0 for the
    q_high long atoms, 1 for the q_low short ones; indices holds the
    iterate number of each atom and start_idx/end_idx the orbit indices
    of its endpoints, so images of atoms can be formed exactly.
    """

    level: int
    base_point: float
    q_low: int
    q_high: int
    starts: np.ndarray
    ends: np.ndarray
    lengths: np.ndarray
    kinds: np.ndarray
    indices: np.ndarray
    start_idx: np.ndarray
    end_idx: np.ndarray
    orbit: np.ndarray

    @property
    def atom_count(self) -> int:
        return int(self.starts.size)


def build_partition(m: CircleMapLift, x: float, n: int,
                    cf: ContinuedFraction) -> DynamicalPartition:
    """Assemble the level-n dynamical partition based at x.

    Needs return times q_n..q_{n+2}, so the expansion must reach depth
    n+2; a rational rotation number whose expansion terminates earlier is
    rejected.  The base arc from x to f^{q_n}(x) is oriented by which side
    contains f^{q_{n+2}}(x); the level-(n+1) arc sits on the opposite side
    (return sides alternate).
    """
    n = int(n)
    if n < 0:
        raise ValueError("level must be >= 0")
    if len(cf.denominators) <= n + 2:
        raise ValueError(
            "return times q_n..q_{n+2} unavailable: expansion too shallow "
            "(rational rotation number or insufficient depth)"
        )
    q_n = int(cf.denominators[n])
    q_n1 = int(cf.denominators[n + 1])
    q_n2 = int(cf.denominators[n + 2])
    n_orbit = max(q_n + 2 * q_n1, q_n2)
    trace = eval_orbit(m, x, n_orbit)
    pts = trace.points

    endpoints = np.sort(pts[: q_n + q_n1])
    gaps = np.diff(endpoints)
    min_gap = min(gaps.min() if gaps.size else 1.0,
                  1.0 - endpoints[-1] + endpoints[0])
    if min_gap < ENDPOINT_FLOOR:
        raise ValueError(
            f"endpoint separation {min_gap:.3e} below the precision floor; "
            "level too deep for float64"
        )

    # orientation of the level-n base arc: the side holding f^{q_{n+2}}(x)
    span = (pts[q_n] - pts[0]) % 1.0
    off = (pts[q_n2] - pts[0]) % 1.0
    long_positive = off < span
    short_positive = not long_positive

    count = q_n + q_n1
    starts = np.empty(count)
    ends = np.empty(count)
    kinds = np.empty(count, dtype=np.int8)
    indices = np.empty(count, dtype=np.int64)
    s_idx = np.empty(count, dtype=np.int64)
    e_idx = np.empty(count, dtype=np.int64)

    for i in range(q_n1):  # long atoms: iterates of the level-n arc
        a, b = (i, i + q_n) if long_positive else (i + q_n, i)
        starts[i] = pts[a]
        ends[i] = pts[b]
        kinds[i] = 0
        indices[i] = i
        s_idx[i] = a
        e_idx[i] = b
    for j in range(q_n):  # short atoms: iterates of the level-(n+1) arc
        a, b = (j, j + q_n1) if short_positive else (j + q_n1, j)
        row = q_n1 + j
        starts[row] = pts[a]
        ends[row] = pts[b]
        kinds[row] = 1
        indices[row] = j
        s_idx[row] = a
        e_idx[row] = b

    order = np.argsort(starts)
    starts = starts[order]
    ends = ends[order]
    lengths = (ends - starts) % 1.0
    return DynamicalPartition(
        level=n,
        base_point=float(x) % 1.0,
        q_low=q_n,
        q_high=q_n1,
        starts=starts,
        ends=ends,
        lengths=lengths,
        kinds=kinds[order],
        indices=indices[order],
        start_idx=s_idx[order],
        end_idx=e_idx[order],
        orbit=pts,
    )


@dataclass(frozen=True)
class PartitionCheck:
    count_ok: bool
    covering_defect: float
    overlap_defect: float
    length_sum_defect: float
    passed: bool


def verify_partition(P: DynamicalPartition, tol: float = PARTITION_TOL) -> PartitionCheck:
    """Audit the tiling: atom count, hole mass, overlap mass, total length."""
    count_ok = P.atom_count == P.q_low + P.q_high
    nxt = np.roll(P.starts, -1)
    g = ((nxt - P.ends + 0.5) % 1.0) - 0.5
    covering = float(np.sum(np.maximum(g, 0.0)))
    overlap = float(np.sum(np.maximum(-g, 0.0)))
    total = float(abs(P.lengths.sum() - 1.0))
    passed = count_ok and covering <= tol and overlap <= tol and total <= tol
    return PartitionCheck(count_ok, covering, overlap, total, passed)


def refines(P_fine: DynamicalPartition, P_coarse: DynamicalPartition,
            tol: float = PARTITION_TOL) -> bool:
    """Every fine atom sits inside a single coarse atom (up to tol)."""
    cs = P_coarse.starts
    A = cs.size
    for s, ln in zip(P_fine.starts, P_fine.lengths):
        ip = int(np.searchsorted(cs, s))
        ok = False
        for cand in ((ip - 1) % A, ip % A):
            off = ((s - cs[cand] + 0.5) % 1.0) - 0.5
            if -tol <= off and off + ln <= P_coarse.lengths[cand] + tol:
                ok = True
                break
        if not ok:
            return False
    return True


@dataclass(frozen=True)
class RealBoundsScan:
    levels: tuple
    max_ratios: np.ndarray
    comparability_bound: float
    contrast_max_ratios: Optional[np.ndarray]


def real_bounds_scan(m: CircleMapLift, x: float, cf: ContinuedFraction,
                     n_min: int, n_max: int, contrast: bool = True,
                     contrast_base: float = 0.0) -> RealBoundsScan:
    """Worst adjacent-atom length ratio per level, plus a rotation contrast.

    The contrast scan runs the rigid rotation with the same rotation
    number and base levels, making visible how unbounded partial
    quotients would break comparability there.
    """
    levels = tuple(range(int(n_min), int(n_max) + 1))
    ratios = np.empty(len(levels))
    for i, n in enumerate(levels):
        P = build_partition(m, x, n, cf)
        ratios[i] = _max_adjacent_ratio(P)
    contrast_ratios = None
    if contrast:
        rot = rigid_rotation(cf.value)
        contrast_ratios = np.empty(len(levels))
        for i, n in enumerate(levels):
            P = build_partition(rot, contrast_base, n, cf)
            contrast_ratios[i] = _max_adjacent_ratio(P)
    return RealBoundsScan(
        levels=levels,
        max_ratios=ratios,
        comparability_bound=float(ratios.max()),
        contrast_max_ratios=contrast_ratios,
    )


def _max_adjacent_ratio(P: DynamicalPartition) -> float:
    ln = P.lengths
    nxt = np.roll(ln, -1)
    r = ln / nxt
    return float(np.max(np.maximum(r, 1.0 / r)))


def no_growth_trend(values, window: int = 5, factor: float = 1.25):
    """True when the last `window` values set no record above factor * history.

    Bounded oscillation passes; steady geometric growth across the tail
    fails.  Returns (ok, tail_max / head_max).
    """
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        return True, 1.0
    w = min(window, v.size - 1)
    head = float(v[:-w].max())
    tail = float(v[-w:].max())
    return bool(tail <= factor * head), tail / head


def multiplicity(intervals) -> int:
    """Maximum number of arcs covering a single interior point.

    Arcs are (start, end) pairs, positively oriented; endpoint-only
    contact does not count (sweep resolves ties as close-before-open),
    matching sampling away from endpoints.  Exact for families whose
    endpoints are separated.
    """
    base = 0
    events = []
    for s, e in intervals:
        s = float(s) % 1.0
        ln = (float(e) - s) % 1.0
        if ln <= 0.0:
            raise ValueError("arcs must have positive length")
        t = s + ln
        if t <= 1.0:
            events.append((s, 1))
            events.append((t, -1))
        else:
            base += 1
            events.append((t - 1.0, -1))
            events.append((s, 1))
    events.sort()
    best = cur = base
    for _, delta in events:
        cur += delta
        if cur > best:
            best = cur
    return best


@dataclass(frozen=True)
class NeighborhoodFamily:
    half_width: int
    requested_half_width: int
    wrapped: bool
    max_multiplicity: int


def atom_neighborhood_arc(P: DynamicalPartition, sorted_index: int, half_width: int):
    """Arc of 2*half_width+1 consecutive atoms centred on the given atom,
    with the orbit indices of its endpoints."""
    A = P.atom_count
    lo = (sorted_index - half_width) % A
    hi = (sorted_index + half_width) % A
    return (P.starts[lo], P.ends[hi], int(P.start_idx[lo]), int(P.end_idx[hi]))


def arc_image_family(P: DynamicalPartition, start_orbit_idx: int,
                     end_orbit_idx: int, count: int):
    """Images f^k(arc), k = 0..count-1, formed from exact orbit points."""
    if max(start_orbit_idx, end_orbit_idx) + count - 1 >= P.orbit.size:
        raise ValueError("orbit table too short for the requested image family")
    ks = np.arange(count)
    return list(zip(P.orbit[start_orbit_idx + ks], P.orbit[end_orbit_idx + ks]))


def neighborhood_family_multiplicity(P: DynamicalPartition, half_width: int,
                                     count: Optional[int] = None) -> NeighborhoodFamily:
    """Worst multiplicity over all atoms of the image family of their
    (2*half_width+1)-atom neighborhood, pushed count times.

    When the partition has too few atoms the neighborhood would wrap all
    the way around; the half width is then capped and flagged.
    """
    A = P.atom_count
    requested = int(half_width)
    capped = min(requested, (A - 1) // 2)
    wrapped = capped < requested
    count = P.q_high if count is None else int(count)
    worst = 0
    for j in range(A):
        s, e, si, ei = atom_neighborhood_arc(P, j, capped)
        fam = arc_image_family(P, si, ei, count)
        worst = max(worst, multiplicity(fam))
    return NeighborhoodFamily(
        half_width=capped,
        requested_half_width=requested,
        wrapped=wrapped,
        max_multiplicity=worst,
    )
