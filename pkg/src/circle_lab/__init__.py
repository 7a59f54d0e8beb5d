"""circle-lab: a numerical laboratory for circle-map ergodic theory.

Builds critically tame circle maps, finds their rotation numbers and
dynamical partitions, solves for derivative-weighted invariant measures,
checks approximate-coboundary identities and Birkhoff-sum decay, and
constructs finite Denjoy-type counterexamples with exact certificates.
"""

from .maps import (
    CircleMapLift,
    OrbitTrace,
    arc_contains,
    arc_length,
    circle_distance,
    critical_preimage,
    critical_value,
    custom_map,
    eval_orbit,
    invert_step,
    k_critical_sine,
    lift_invariant_report,
    map_from_spec,
    reduce_mod1,
    rigid_rotation,
    verify_nonflat,
)
from .rotation import (
    GOLDEN_MEAN,
    SILVER_MEAN,
    ContinuedFraction,
    ClosestReturns,
    RotationNumberEstimate,
    TuneResult,
    closest_returns,
    continued_fraction,
    named_irrational,
    rotation_number,
    tune_omega,
    tuned_k_critical_sine,
)
from .partition import (
    DynamicalPartition,
    NeighborhoodFamily,
    PartitionCheck,
    RealBoundsScan,
    build_partition,
    multiplicity,
    neighborhood_family_multiplicity,
    no_growth_trend,
    real_bounds_scan,
    refines,
    verify_partition,
)
from .measures import (
    AutomorphicDefect,
    DiscreteMeasure,
    LyapunovEstimate,
    OmegaRatioScan,
    OrbitSumMeasure,
    SigmaSeries,
    SolveResult,
    TestFunction,
    TestFunctionSet,
    TransferOperator,
    atomic_measure,
    automorphic_defect,
    binned,
    grid_measure,
    interval_mass,
    l1_distance,
    lyapunov_integral,
    max_return_derivative,
    omega_ratio_scan,
    orbit_sum_measure,
    return_derivative_bounds,
    sigma_partial,
    solve_automorphic,
    telescoped_defect_bound,
    transfer_step,
    uniform_measure,
)
from .cohomology import (
    CoboundaryApproximation,
    CoboundaryReport,
    DeviationSample,
    DeviationSeriesReport,
    SampledFunction,
    birkhoff_sums,
    coboundary_defect,
    dk_deviation,
    dk_improved_series,
    invariant_mean,
    w_hat,
)
from .denjoy import (
    DenjoyMap,
    DenjoyMeasure,
    WanderingCertificate,
    as_circle_map,
    build_denjoy,
    bump_function,
    degenerate_rotation_table,
    denjoy_atomic_measure,
    distribution_defect,
    distribution_pairing,
    ideal_tail_mass,
    interval_bump,
    invariance_defect,
    orbit_average_on_gaps,
    wandering_certificate,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
