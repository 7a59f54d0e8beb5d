"""Command-line laboratory: named experiments over the library.

Each experiment validates its configuration against a declared option
schema (unknown config keys are usage errors), resolves values with
precedence flags > config file > defaults, runs deterministically for a
fixed seed, and writes a report.json plus versioned CSV tables into the
output directory.  The process exits 0 exactly when no verdict failed.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from . import cohomology, denjoy, maps, measures, partition, rotation

REPORT_SCHEMA = "circle-lab report v1"
CSV_SCHEMA = "circle-lab csv v1"


# ---------------------------------------------------------------------------
# option schema

@dataclass(frozen=True)
class Option:
    name: str
    kind: str  # int | float | str | bool | ints | floats
    default: object
    help: str
    choices: Optional[tuple] = None


def _parse_bool(text):
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def _parse_ints(text):
    if isinstance(text, (list, tuple)):
        return [int(v) for v in text]
    return [int(v) for v in str(text).split(",") if v.strip()]


def _parse_floats(text):
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    return [float(v) for v in str(text).split(",") if v.strip()]


_CONVERTERS = {
    "int": int,
    "float": float,
    "str": str,
    "bool": _parse_bool,
    "ints": _parse_ints,
    "floats": _parse_floats,
}


def _coerce(opt: Option, value):
    if value is None:
        return None
    conv = _CONVERTERS[opt.kind]
    try:
        out = conv(value)
    except (TypeError, ValueError, argparse.ArgumentTypeError) as exc:
        raise SystemExit(f"circle-lab: invalid value for {opt.name}: {value!r} ({exc})")
    if opt.choices is not None and out not in opt.choices:
        raise SystemExit(
            f"circle-lab: {opt.name} must be one of {', '.join(map(str, opt.choices))}")
    return out


MAP_OPTIONS = (
    Option("family", "str", "sine", "map family", choices=("sine", "rotation")),
    Option("k", "int", 1, "number of critical points for the sine family"),
    Option("rho", "str", "golden", "target rotation number: golden, silver, or a float"),
    Option("omega", "float", None, "explicit translation parameter (skips tuning)"),
    Option("tune_tol", "float", 1e-10, "rotation-number tolerance when tuning"),
)

SEED_OPTION = Option("seed", "int", 0, "rng seed for any sampled quantities")


def _resolve_rho(spec) -> float:
    try:
        return float(spec)
    except (TypeError, ValueError):
        return rotation.named_irrational(spec)


def _resolve_map(cfg):
    """Build the configured map; returns (map, nominal rotation number)."""
    rho = _resolve_rho(cfg["rho"])
    if cfg["family"] == "rotation":
        return maps.rigid_rotation(rho), rho
    if cfg["omega"] is not None:
        return maps.k_critical_sine(cfg["k"], cfg["omega"]), rho
    m = rotation.tuned_k_critical_sine(cfg["k"], rho, tol=cfg["tune_tol"])
    return m, rho


def _resolve_base(spec, m) -> float:
    """Orbit base point: 'critical' means the critical value when one exists."""
    if str(spec) == "critical":
        return maps.critical_value(m) if m.critical_points else 0.0
    return float(spec)


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)
    if isinstance(v, Path):
        return str(v)
    return v


def _verdict(name, status, value=None, threshold=None):
    return {"name": name, "status": status, "value": _jsonable(value),
            "threshold": _jsonable(threshold)}


def _check(name, ok, value=None, threshold=None):
    return _verdict(name, "pass" if ok else "fail", value, threshold)


def _pool_map(fn, items):
    workers = int(os.environ.get("CIRCLE_LAB_THREADS", "1") or "1")
    items = list(items)
    if workers > 1 and len(items) > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(it) for it in items]


def _continued_fraction_for(cfg, rho, depth=32):
    return rotation.continued_fraction(rho, depth)


def _decimate(arr, cap=2000):
    arr = np.asarray(arr)
    if arr.size <= cap:
        return np.arange(arr.size), arr
    idx = np.unique(np.linspace(0, arr.size - 1, cap).astype(np.int64))
    return idx, arr[idx]


# ---------------------------------------------------------------------------
# experiment runners: each returns (results, verdicts, csv tables)

def run_rotnum(cfg):
    m, _ = _resolve_map(cfg)
    est = rotation.rotation_number(m, x0=cfg["x0"], budget=cfg["budget"], tol=cfg["tol"])
    ret = rotation.closest_returns(m, cfg["x0"], cfg["budget"])
    results = {
        "map": m.to_spec(),
        "value": est.value,
        "error_bound": est.error_bound,
        "raw_mean": est.raw_mean,
        "is_rational": est.is_rational,
        "period": est.period,
        "converged": est.converged,
        "return_times": list(est.return_times),
    }
    verdicts = [_check("rotation_number_converged", est.converged, est.value, cfg["tol"])]
    rows = list(zip(ret.times.tolist(), ret.distances.tolist(), ret.windings.tolist()))
    return results, verdicts, [("returns", ["time", "distance", "winding"], rows)]


def run_partition(cfg):
    m, rho = _resolve_map(cfg)
    cf = _continued_fraction_for(cfg, rho, depth=cfg["depth"])
    P = partition.build_partition(m, cfg["base_point"], cfg["level"], cf)
    chk = partition.verify_partition(P, cfg["tol"])
    fine_ok = None
    if cfg["level"] + 3 < cf.depth:
        P_fine = partition.build_partition(m, cfg["base_point"], cfg["level"] + 1, cf)
        fine_ok = partition.refines(P_fine, P, cfg["tol"])
    fam3 = partition.neighborhood_family_multiplicity(P, 1)
    fam7 = partition.neighborhood_family_multiplicity(P, 3)
    results = {
        "map": m.to_spec(),
        "level": P.level,
        "atom_count": P.atom_count,
        "q_low": P.q_low,
        "q_high": P.q_high,
        "covering_defect": chk.covering_defect,
        "overlap_defect": chk.overlap_defect,
        "length_sum_defect": chk.length_sum_defect,
        "refines_next_level": fine_ok,
        "triple_family_multiplicity": fam3.max_multiplicity,
        "seven_family_multiplicity": fam7.max_multiplicity,
    }
    verdicts = [
        _check("tiling", chk.passed, chk.covering_defect, cfg["tol"]),
        _check("triple_multiplicity", fam3.max_multiplicity <= 3,
               fam3.max_multiplicity, 3),
        _check("seven_multiplicity", fam7.max_multiplicity <= 8,
               fam7.max_multiplicity, 8),
    ]
    if fine_ok is not None:
        verdicts.append(_check("refinement", fine_ok))
    rows = list(zip(P.starts.tolist(), P.lengths.tolist(), P.kinds.tolist(),
                    P.indices.tolist()))
    return results, verdicts, [("atoms", ["start", "length", "kind", "iterate"], rows)]


def run_realbounds(cfg):
    m, rho = _resolve_map(cfg)
    cf = _continued_fraction_for(cfg, rho, depth=cfg["n_max"] + 6)
    scan = partition.real_bounds_scan(m, cfg["base_point"], cf, cfg["n_min"], cfg["n_max"],
                                      contrast=cfg["contrast"])
    ok, trend = partition.no_growth_trend(scan.max_ratios, window=cfg["window"],
                                          factor=cfg["factor"])
    results = {
        "map": m.to_spec(),
        "levels": list(scan.levels),
        "max_ratios": scan.max_ratios,
        "comparability_bound": scan.comparability_bound,
        "trend_ratio": trend,
        "contrast_max_ratios": scan.contrast_max_ratios,
    }
    verdicts = [_check("bounded_geometry", ok, trend, cfg["factor"])]
    contrast = (scan.contrast_max_ratios if scan.contrast_max_ratios is not None
                else np.full(len(scan.levels), np.nan))
    rows = list(zip(scan.levels, scan.max_ratios.tolist(), contrast.tolist()))
    return results, verdicts, [("ratios", ["level", "max_ratio", "rotation_contrast"], rows)]


def run_automorphic(cfg):
    m, rho = _resolve_map(cfg)
    s = cfg["s"]
    cf = _continued_fraction_for(cfg, rho)
    base = _resolve_base(cfg["base_point"], m)
    sol = measures.solve_automorphic(m, s, bins=cfg["bins"], iters=cfg["iters"],
                                     tol=cfg["solver_tol"])
    osm = measures.orbit_sum_measure(m, base, s, cfg["orbit_level"], cf)
    tests = measures.TestFunctionSet.trig()
    orbit_defect = measures.automorphic_defect(osm.measure, m, s, tests)
    identity_gap = 0.0
    for phi in tests:
        closed = measures.telescoped_defect_bound(osm, phi)
        identity_gap = max(identity_gap, abs(orbit_defect.per_function[phi.name] - closed))
    cb = cfg["compare_bins"]
    l1_orbit_solver = measures.l1_distance(measures.binned(osm.measure, cb),
                                           measures.binned(sol.measure, cb))
    results = {
        "map": m.to_spec(),
        "exponent": s,
        "solver": {
            "iterations": sol.iterations,
            "converged": sol.converged,
            "residual": sol.residual,
            "defect": sol.defect,
            "flagged_nonconverging": sol.flagged_nonconverging,
        },
        "orbit": {
            "level": osm.level,
            "q": osm.q,
            "normalizer": osm.S,
            "defect": orbit_defect.max_defect,
            "telescoping_identity_gap": identity_gap,
            "critical_hit": osm.flagged_critical_hit,
        },
        "l1_orbit_vs_solver": l1_orbit_solver,
    }
    verdicts = [
        _check("telescoping_identity", identity_gap <= cfg["identity_tol"],
               identity_gap, cfg["identity_tol"]),
        _check("solver_defect", sol.defect <= cfg["defect_tol"], sol.defect,
               cfg["defect_tol"]),
        _check("orbit_vs_solver_l1", l1_orbit_solver <= cfg["l1_tol"],
               l1_orbit_solver, cfg["l1_tol"]),
    ]
    if s == 1.0:
        uni = measures.uniform_measure(cb)
        l1_u = measures.l1_distance(measures.binned(osm.measure, cb), uni)
        results["l1_orbit_vs_uniform"] = l1_u
        verdicts.append(_check("orbit_vs_uniform_l1", l1_u <= cfg["l1_tol"],
                               l1_u, cfg["l1_tol"]))
    B = sol.measure.bins
    centers = ((np.arange(B) + 0.5) / B)
    dens_rows = list(zip(centers.tolist(), sol.measure.values.tolist()))
    it_idx, deltas = _decimate(sol.cesaro_deltas)
    delta_rows = list(zip((it_idx + 1).tolist(), deltas.tolist()))
    return results, verdicts, [
        ("density", ["bin_center", "density"], dens_rows),
        ("cesaro_deltas", ["iteration", "delta_l1"], delta_rows),
    ]


def run_agreement(cfg):
    """Per-exponent consistency between independent routes to the same measure.

    The weighted orbit sum at two depths must stabilize for every
    exponent; the grid solver is compared against the orbit route only up
    to solver_max_s, because the binned-transfer iteration mixes too
    slowly for large exponents to serve as a reference.
    """
    m, rho = _resolve_map(cfg)
    exponents = cfg["exponents"]
    cf = _continued_fraction_for(cfg, rho, depth=cfg["level"] + 6)
    base = _resolve_base(cfg["base_point"], m)
    cb = cfg["compare_bins"]

    def probe(s):
        shallow = measures.orbit_sum_measure(m, base, s, cfg["level"], cf)
        deep = measures.orbit_sum_measure(m, base, s, cfg["level"] + 2, cf)
        stability = measures.l1_distance(measures.binned(shallow.measure, cb),
                                         measures.binned(deep.measure, cb))
        deep_defect = measures.automorphic_defect(deep.measure, m, s).max_defect
        entry = {"exponent": s, "q_shallow": shallow.q, "q_deep": deep.q,
                 "depth_stability_l1": stability, "deep_defect": deep_defect,
                 "solver_l1": None}
        if s <= cfg["solver_max_s"]:
            sol = measures.solve_automorphic(m, s, bins=cfg["bins"],
                                             iters=cfg["iters"],
                                             tol=cfg["solver_tol"])
            entry["solver_l1"] = measures.l1_distance(
                measures.binned(deep.measure, cb), measures.binned(sol.measure, cb))
            entry["solver_defect"] = sol.defect
        return entry

    entries = _pool_map(probe, exponents)
    worst_stab = max(e["depth_stability_l1"] for e in entries)
    solver_l1s = [e["solver_l1"] for e in entries if e["solver_l1"] is not None]
    results = {
        "map": m.to_spec(),
        "exponents": exponents,
        "per_exponent": entries,
        "worst_depth_stability": worst_stab,
        "worst_solver_l1": max(solver_l1s) if solver_l1s else None,
    }
    verdicts = [_check("depth_stability", worst_stab <= cfg["tol"],
                       worst_stab, cfg["tol"])]
    if solver_l1s:
        verdicts.append(_check("solver_vs_orbit", max(solver_l1s) <= cfg["tol"],
                               max(solver_l1s), cfg["tol"]))
    rows = [(e["exponent"], e["q_shallow"], e["q_deep"], e["depth_stability_l1"],
             e["deep_defect"], e["solver_l1"]) for e in entries]
    return results, verdicts, [("agreement",
                                ["exponent", "q_shallow", "q_deep",
                                 "depth_stability_l1", "deep_defect", "solver_l1"],
                                rows)]


def run_lyapunov(cfg):
    """Return-time derivative products stay bounded, so the exponent is zero.

    The envelope constant is the empirical maximum of sup Df^q over all
    return times up to the probed level; every random base point must then
    have |log Df^q(x)| within log of that constant.  The grid minimum of
    Df^q is reported but never asserted: it is genuinely zero for a
    critical map (the grid eventually lands near critical preimages).
    """
    m, rho = _resolve_map(cfg)
    cf = _continued_fraction_for(cfg, rho)
    level = cfg["level"]
    qs = [int(q) for q in cf.denominators[2:level + 1]]
    bounds = measures.return_derivative_bounds(m, qs, grid_size=cfg["grid"])
    c1hat = max(hi for _, hi in bounds.values())
    q_top = qs[-1]
    rng = np.random.default_rng(cfg["seed"])
    points = rng.random(cfg["sample_points"])
    ests = []
    for x in points:
        osm = measures.orbit_sum_measure(m, float(x), 0.0, level, cf)
        ests.append(measures.lyapunov_integral(m, osm, c1hat=c1hat))
    values = np.array([e.value for e in ests])
    bound = math.log(c1hat) / q_top
    spread = float(values.max() - values.min())
    results = {
        "map": m.to_spec(),
        "level": level,
        "q": q_top,
        "c1hat": c1hat,
        "bound": bound,
        "values": values.tolist(),
        "worst_abs_value": float(np.abs(values).max()),
        "base_point_spread": spread,
        "grid_sup_top": bounds[q_top][1],
        "grid_inf_top": bounds[q_top][0],
        "per_q_sup": {str(q): hi for q, (_, hi) in bounds.items()},
    }
    verdicts = [
        _check("lyapunov_within_bound", bool(np.all(np.abs(values) <= bound)),
               float(np.abs(values).max()), bound),
        _check("base_points_agree", spread <= 2.0 * bound, spread, 2.0 * bound),
    ]
    rows = [(float(x), float(v), bound) for x, v in zip(points, values)]
    tables = [("estimates", ["base_point", "value", "bound"], rows),
              ("return_derivatives", ["q", "grid_min", "grid_max"],
               [(q, lo, hi) for q, (lo, hi) in bounds.items()])]
    return results, verdicts, tables


def run_sigma(cfg):
    m, _ = _resolve_map(cfg)
    s, N = cfg["s"], cfg["N"]
    rng = np.random.default_rng(cfg["seed"])
    points = rng.random(cfg["n_points"])
    series = _pool_map(lambda x: measures.sigma_partial(m, float(x), s, N), points)
    growths = np.array([ser.partials[-1] / ser.partials[N // 10] for ser in series])
    finals = np.array([ser.partials[-1] for ser in series])
    diverging = bool(np.all(growths >= cfg["growth_factor"]))
    results = {
        "map": m.to_spec(),
        "exponent": s,
        "N": N,
        "points": points.tolist(),
        "partial_finals": finals.tolist(),
        "growth_over_last_decade": growths.tolist(),
        "min_growth": float(growths.min()),
        "saturated": any(ser.saturated for ser in series),
    }
    verdicts = [_check("generic_points_diverge", diverging, float(growths.min()),
                       cfg["growth_factor"])]
    tables = []
    idx, part = _decimate(series[0].partials)
    tables.append(("partials_generic", ["n", "partial_sum"],
                   list(zip(idx.tolist(), part.tolist()))))
    if cfg["preimage_depth"] > 0 and m.critical_points:
        d = cfg["preimage_depth"]
        xc = maps.critical_preimage(m, d)
        ser2 = measures.sigma_partial(m, xc, s, N)
        settle = ser2.partials[min(d + 1, N)]
        plateau_gap = (ser2.partials[-1] - settle) / ser2.partials[-1]
        results["preimage"] = {
            "depth": d,
            "point": xc,
            "partial_final": ser2.partials[-1],
            "plateau_gap": plateau_gap,
        }
        verdicts.append(_check("critical_preimage_plateaus",
                               plateau_gap <= cfg["plateau_tol"],
                               plateau_gap, cfg["plateau_tol"]))
        idx2, part2 = _decimate(ser2.partials)
        tables.append(("partials_preimage", ["n", "partial_sum"],
                       list(zip(idx2.tolist(), part2.tolist()))))
    return results, verdicts, tables


def run_omega_scan(cfg):
    m, rho = _resolve_map(cfg)
    s = cfg["s"]
    cf = _continued_fraction_for(cfg, rho)
    base = _resolve_base(cfg["base_point"], m)
    P = partition.build_partition(m, base, cfg["level"], cf)
    if cfg["measure"] == "solver":
        nu = measures.solve_automorphic(m, s, bins=cfg["bins"], iters=cfg["iters"],
                                        tol=cfg["solver_tol"]).measure
    else:
        nu = measures.orbit_sum_measure(m, base, s, cfg["orbit_level"], cf).measure
    scan = measures.omega_ratio_scan(nu, P, s)
    results = {
        "map": m.to_spec(),
        "exponent": s,
        "level": scan.level,
        "skipped_atoms": scan.skipped,
        "long_ratio_range": [scan.long_min, scan.long_max],
        "short_ratio_range": [scan.short_min, scan.short_max],
        "same_type_ratio": scan.same_type_ratio,
        "short_to_long_ratio": scan.short_to_long_ratio,
    }
    verdicts = [
        _check("same_type_comparable", scan.same_type_ratio <= cfg["ratio_bound"],
               scan.same_type_ratio, cfg["ratio_bound"]),
        _check("no_skipped_atoms", scan.skipped == 0, scan.skipped, 0),
    ]
    rows = list(zip(P.starts.tolist(), P.lengths.tolist(), P.kinds.tolist(),
                    scan.ratios.tolist()))
    return results, verdicts, [("ratios", ["start", "length", "kind", "ratio"], rows)]


def run_cobound(cfg):
    m, rho = _resolve_map(cfg)
    cf = _continued_fraction_for(cfg, rho, depth=max(cfg["levels"]) + 4)
    qs = [int(cf.denominators[lv]) for lv in cfg["levels"]]
    c1hat = measures.max_return_derivative(m, qs, grid_size=cfg["grid"])
    reports = [cohomology.coboundary_defect(m, lv, cf, grid_size=cfg["grid"],
                                            c1hat=c1hat) for lv in cfg["levels"]]
    worst_route = max(r.route_agreement for r in reports)
    bounded = all(r.defect_sup <= r.expected_bound for r in reports)
    decaying = all(reports[i + 1].defect_sup < reports[i].defect_sup
                   for i in range(len(reports) - 1))
    results = {
        "map": m.to_spec(),
        "c1hat": c1hat,
        "levels": [{"level": r.level, "q": r.q, "defect_sup": r.defect_sup,
                    "route_agreement": r.route_agreement,
                    "lebesgue_mean": r.lebesgue_mean,
                    "sup_norm": r.sup_norm,
                    "expected_bound": r.expected_bound} for r in reports],
        "decaying": decaying,
    }
    verdicts = [
        _check("route_agreement", worst_route <= cfg["route_tol"], worst_route,
               cfg["route_tol"]),
        _check("defect_within_bound", bounded),
        _check("defect_decays", decaying),
    ]
    rows = [(r.level, r.q, r.defect_sup, r.route_agreement, r.expected_bound)
            for r in reports]
    return results, verdicts, [("defects",
                                ["level", "q", "defect_sup", "route_agreement",
                                 "expected_bound"], rows)]


def run_dk(cfg):
    m, rho = _resolve_map(cfg)
    cf = _continued_fraction_for(cfg, rho)
    tests = measures.TestFunctionSet.trig(1)
    phi = next(f for f in tests if f.name == cfg["phi"])
    sampled = cohomology.SampledFunction.from_callable(phi.value, deriv=phi.deriv,
                                                       name=phi.name)
    variation = sampled.variation()
    if cfg["exact_mean"] is not None:
        mean, err = cfg["exact_mean"], 0.0
    elif cfg["family"] == "rotation":
        # Lebesgue is invariant and every nonconstant trig mode averages to 0
        mean, err = 0.0, 0.0
    else:
        est = rotation.rotation_number(m, x0=cfg["x0"], budget=cfg["mean_budget"])
        q_star = max(est.return_times)
        mean, err = cohomology.invariant_mean(m, phi.value, q_star, x0=cfg["x0"],
                                              variation=variation)
    rep = cohomology.dk_improved_series(m, phi.value, cf, mean, err,
                                        base_levels=cfg["base_levels"],
                                        top_level=cfg["top_level"],
                                        n_points=cfg["points"], seed=cfg["seed"])
    results = {
        "map": m.to_spec(),
        "phi": phi.name,
        "variation": variation,
        "mean": mean,
        "mean_error_bound": err,
        "levels": list(rep.levels),
        "qs": list(rep.qs),
        "deviations": rep.deviations,
        "uncertainties": rep.uncertainties,
        "base": rep.base,
        "top": rep.top,
        "verdict": rep.verdict,
    }
    verdicts = [_verdict("deviation_decay", rep.verdict, rep.top, 0.5 * rep.base)]
    rows = list(zip(rep.levels, rep.qs, rep.deviations.tolist(),
                    rep.uncertainties.tolist()))
    return results, verdicts, [("deviations",
                                ["level", "q", "deviation", "uncertainty"], rows)]


def run_denjoy(cfg):
    rho = _resolve_rho(cfg["rho"])
    s = cfg["s"]
    dm = denjoy.build_denjoy(rho, cfg["N"], cfg["length_exponent"])
    cert = denjoy.wandering_certificate(dm)
    table = denjoy.degenerate_rotation_table(dm, seed=cfg["seed"])
    dmes = denjoy.denjoy_atomic_measure(dm, s)
    defect = denjoy.invariance_defect(dm, dmes.measure, s)
    bump = denjoy.interval_bump(dm, 0)
    pairing = denjoy.distribution_pairing(dm, s, bump, support_offset=0)
    pairing_gap = abs(pairing.value - pairing.closed_form)
    dist_defect = denjoy.distribution_defect(dm, s, bump)
    gap_avg = denjoy.orbit_average_on_gaps(dm, bump.value, steps=cfg["gap_steps"])
    dm2 = denjoy.build_denjoy(rho, 2 * cfg["N"], cfg["length_exponent"])
    seam2 = denjoy.denjoy_atomic_measure(dm2, s).seam_mass
    seam_ratio = dmes.seam_mass / seam2
    results = {
        "rho": rho,
        "N": cfg["N"],
        "length_exponent": cfg["length_exponent"],
        "exponent": s,
        "interval_count": cert.interval_count,
        "min_gap": cert.min_gap,
        "total_blown_mass": cert.total_blown_mass,
        "orbit_alignment_max": cert.orbit_alignment_max,
        "semiconjugacy_defect": table.max_defect,
        "seam_mismatch": table.seam_mismatch,
        "invariance_defect": defect.max_defect,
        "seam_mass": dmes.seam_mass,
        "ideal_tail": dmes.ideal_tail,
        "seam_mass_decay_on_doubling": seam_ratio,
        "distribution_pairing": pairing.value,
        "distribution_pairing_gap": pairing_gap,
        "distribution_defect": dist_defect,
        "gap_orbit_average": gap_avg.average,
    }
    verdicts = [
        _check("intervals_disjoint", cert.disjoint, cert.min_gap, 0.0),
        _check("orbit_alignment", cert.orbit_alignment_max == 0.0,
               cert.orbit_alignment_max, 0.0),
        _check("semiconjugacy", table.max_defect <= cfg["conjugacy_tol"],
               table.max_defect, cfg["conjugacy_tol"]),
        _check("invariance_defect", defect.max_defect <= cfg["defect_tol"],
               defect.max_defect, cfg["defect_tol"]),
        _check("distribution_two_route", pairing_gap <= cfg["defect_tol"],
               pairing_gap, cfg["defect_tol"]),
        _check("distribution_defect", dist_defect <= cfg["defect_tol"],
               dist_defect, cfg["defect_tol"]),
        _check("gap_average_vanishes", gap_avg.average == 0.0,
               gap_avg.average, 0.0),
    ]
    if dmes.ideal_tail is not None:
        verdicts.append(_check("seam_below_ideal_tail",
                               dmes.seam_mass <= dmes.ideal_tail,
                               dmes.seam_mass, dmes.ideal_tail))
        lo, hi = cfg["decay_window"]
        verdicts.append(_check("seam_decay_on_doubling",
                               lo <= seam_ratio <= hi, seam_ratio, [lo, hi]))
    rows = list(zip(dm.offsets.tolist(), dm.thetas.tolist(), dm.lefts.tolist(),
                    dm.lengths.tolist()))
    return results, verdicts, [("intervals", ["offset", "theta", "left", "length"], rows)]


# ---------------------------------------------------------------------------
# registry

@dataclass(frozen=True)
class Experiment:
    name: str
    help: str
    options: tuple
    runner: Callable


def _exp(name, help_text, runner, *options, with_map=True):
    opts = (SEED_OPTION,) + (MAP_OPTIONS if with_map else ()) + options
    return Experiment(name=name, help=help_text, options=opts, runner=runner)


EXPERIMENTS = {e.name: e for e in [
    _exp("rotnum", "rotation number via closest returns", run_rotnum,
         Option("x0", "float", 0.0, "orbit base point"),
         Option("budget", "int", 100000, "maximum orbit steps"),
         Option("tol", "float", 1e-9, "requested accuracy")),
    _exp("partition", "dynamical partition tiling and multiplicity audit", run_partition,
         Option("base_point", "float", 0.0, "partition base point"),
         Option("level", "int", 8, "partition level"),
         Option("depth", "int", 30, "continued fraction depth"),
         Option("tol", "float", 1e-10, "tiling tolerance")),
    _exp("realbounds", "adjacent-atom comparability across levels", run_realbounds,
         Option("base_point", "float", 0.0, "partition base point"),
         Option("n_min", "int", 2, "first level"),
         Option("n_max", "int", 9, "last level"),
         Option("window", "int", 4, "trend window (levels)"),
         Option("factor", "float", 1.25, "allowed tail growth factor"),
         Option("contrast", "bool", True, "also scan the rigid rotation")),
    _exp("automorphic", "solve for a weighted invariant density and cross-check "
         "against the weighted orbit measure", run_automorphic,
         Option("s", "float", 1.0, "weight exponent"),
         Option("base_point", "str", "critical",
                "orbit base point ('critical' = image of the critical point)"),
         Option("orbit_level", "int", 18, "orbit measure level"),
         Option("bins", "int", 4096, "solver resolution"),
         Option("iters", "int", 1500, "solver iteration cap"),
         Option("solver_tol", "float", 1e-7, "solver stopping tolerance"),
         Option("compare_bins", "int", 64, "comparison resolution"),
         Option("identity_tol", "float", 1e-12, "telescoping identity tolerance"),
         Option("defect_tol", "float", 5e-3, "solver defect tolerance"),
         Option("l1_tol", "float", 0.05, "binned L1 tolerance")),
    _exp("agreement", "per-exponent agreement between measure routes", run_agreement,
         Option("exponents", "floats", [0.0, 1.0, 2.0], "comma-separated exponents"),
         Option("base_point", "str", "critical",
                "orbit base point ('critical' = image of the critical point)"),
         Option("level", "int", 22, "shallow orbit level (deep level adds two)"),
         Option("compare_bins", "int", 64, "comparison resolution"),
         Option("solver_max_s", "float", 1.0,
                "largest exponent the grid solver is used for"),
         Option("bins", "int", 8192, "solver resolution"),
         Option("iters", "int", 4000, "solver iteration cap"),
         Option("solver_tol", "float", 1e-7, "solver stopping tolerance"),
         Option("tol", "float", 0.05, "binned L1 tolerance")),
    _exp("lyapunov", "zero Lyapunov exponent and two-sided return derivatives",
         run_lyapunov,
         Option("base_point", "str", "critical",
                "orbit base point ('critical' = image of the critical point)"),
         Option("level", "int", 18, "deepest return level"),
         Option("grid", "int", 4096, "derivative scan grid"),
         Option("sample_points", "int", 10, "extra random scan points")),
    _exp("sigma", "divergence of the weight series at generic points", run_sigma,
         Option("s", "float", 1.0, "weight exponent"),
         Option("n_points", "int", 10, "random base points"),
         Option("N", "int", 20000, "series length"),
         Option("growth_factor", "float", 1.05, "required growth over the last decade"),
         Option("preimage_depth", "int", 20, "critical preimage depth (0 disables)"),
         Option("plateau_tol", "float", 1e-12, "relative plateau tolerance")),
    _exp("omega-scan", "measure-to-length ratios over partition atoms", run_omega_scan,
         Option("s", "float", 1.0, "weight exponent"),
         Option("base_point", "str", "critical",
                "partition and orbit base point ('critical' = image of the "
                "critical point)"),
         Option("level", "int", 6, "partition level"),
         Option("measure", "str", "solver", "measure source", choices=("solver", "orbit")),
         Option("orbit_level", "int", 14, "orbit measure level (orbit source)"),
         Option("bins", "int", 8192, "solver resolution"),
         Option("iters", "int", 1200, "solver iteration cap"),
         Option("solver_tol", "float", 1e-7, "solver stopping tolerance"),
         Option("ratio_bound", "float", 1e3, "allowed same-type ratio spread")),
    _exp("cobound", "approximate coboundary identity and defect decay", run_cobound,
         Option("levels", "ints", [8, 10, 12], "return levels to probe"),
         Option("grid", "int", 4096, "evaluation grid"),
         Option("route_tol", "float", 1e-10, "two-route agreement tolerance")),
    _exp("dk", "decay of recentered Birkhoff sums at return times", run_dk,
         Option("x0", "float", 0.0, "orbit base point for the mean"),
         Option("phi", "str", "sin1", "test function", choices=("cos1", "sin1")),
         Option("exact_mean", "float", None, "known invariant mean (skips estimation)"),
         Option("mean_budget", "int", 1500000, "orbit budget for the mean"),
         Option("base_levels", "ints", [4, 5, 6], "reference levels"),
         Option("top_level", "int", 11, "probed deep level"),
         Option("points", "int", 16, "sample points per level")),
    _exp("denjoy", "blown-up rotation: certificates, measures, distributions",
         run_denjoy,
         Option("rho", "str", "golden", "base rotation number"),
         Option("N", "int", 2000, "orbit truncation radius"),
         Option("length_exponent", "float", 3.0, "interval length decay power"),
         Option("s", "float", 1.0, "weight exponent"),
         Option("gap_steps", "int", 500, "gap orbit length"),
         Option("conjugacy_tol", "float", 1e-10, "semiconjugacy tolerance"),
         Option("defect_tol", "float", 1e-12, "exact-bookkeeping tolerance"),
         Option("decay_window", "floats", [5.0, 11.0],
                "allowed seam mass ratio when doubling N"),
         with_map=False),
]}


# ---------------------------------------------------------------------------
# wiring

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="circle-lab",
        description="numerical laboratory for circle-map ergodic experiments",
    )
    sub = p.add_subparsers(dest="experiment", metavar="experiment", required=True)
    for exp in EXPERIMENTS.values():
        sp = sub.add_parser(exp.name, help=exp.help)
        sp.add_argument("--config", type=Path, default=None,
                        help="JSON file with option values")
        sp.add_argument("--out", type=Path, default=None,
                        help="output directory (default circle-lab-out/<experiment>)")
        for opt in exp.options:
            flag = "--" + opt.name.replace("_", "-")
            sp.add_argument(flag, dest=opt.name, default=None, metavar="V",
                            help=f"{opt.help} (default: {opt.default})")
    return p


def resolve_config(exp: Experiment, args: argparse.Namespace) -> dict:
    cfg = {opt.name: opt.default for opt in exp.options}
    by_name = {opt.name: opt for opt in exp.options}
    if args.config is not None:
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise SystemExit(f"circle-lab: cannot read config {args.config}: {exc}")
        if not isinstance(data, dict):
            raise SystemExit("circle-lab: config file must hold a JSON object")
        unknown = sorted(set(data) - set(cfg))
        if unknown:
            raise SystemExit(
                f"circle-lab: unknown config key(s) for {exp.name}: "
                f"{', '.join(unknown)}; valid keys: {', '.join(sorted(cfg))}")
        for key, value in data.items():
            cfg[key] = _coerce(by_name[key], value)
    for opt in exp.options:
        given = getattr(args, opt.name)
        if given is not None:
            cfg[opt.name] = _coerce(opt, given)
    return cfg


def _write_outputs(outdir: Path, exp_name: str, cfg: dict, results: dict,
                   verdicts: list, tables: list, elapsed: float) -> Path:
    outdir.mkdir(parents=True, exist_ok=True)
    csv_files = []
    for name, columns, rows in tables:
        path = outdir / f"{name}.csv"
        with open(path, "w", newline="") as fh:
            fh.write(f"# {CSV_SCHEMA} {exp_name}/{name}\n")
            writer = csv.writer(fh)
            writer.writerow(columns)
            for row in rows:
                writer.writerow([_jsonable(v) for v in row])
        csv_files.append(path.name)
    report = {
        "schema": REPORT_SCHEMA,
        "experiment": exp_name,
        "config": _jsonable(cfg),
        "results": _jsonable(results),
        "verdicts": verdicts,
        "csv_files": csv_files,
        "elapsed_seconds": round(elapsed, 3),
    }
    report_path = outdir / "report.json"
    report_path.write_text(json.dumps(report, indent=2, sort_keys=False) + "\n")
    return report_path


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    exp = EXPERIMENTS[args.experiment]
    cfg = resolve_config(exp, args)
    outdir = args.out if args.out is not None else Path("circle-lab-out") / exp.name
    t0 = time.perf_counter()
    results, verdicts, tables = exp.runner(cfg)
    elapsed = time.perf_counter() - t0
    report_path = _write_outputs(outdir, exp.name, cfg, results, verdicts,
                                 tables, elapsed)
    for v in verdicts:
        print(f"{exp.name}: {v['name']}: {v['status']}")
    failed = [v for v in verdicts if v["status"] == "fail"]
    print(f"{exp.name}: wrote {report_path} ({len(verdicts)} checks, "
          f"{len(failed)} failed, {elapsed:.2f}s)")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
