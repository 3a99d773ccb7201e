"""Bounds and estimates for the asymptotic constant of truck-and-drone routing.

A truck and a drone jointly serve points drawn uniformly in the unit square;
the optimal makespan divided by sqrt(n) converges to a constant depending on
the truck norm and the drone speed ratio. This package computes Monte Carlo
strip-construction upper bounds, closed-form parametric lower bounds, and
empirical estimates from exact and heuristic solvers on random instances.
"""

__version__ = "0.1.0"

from .geometry import (
    GENERATOR_ID,
    Instance,
    MetricPair,
    Point,
    TruckNorm,
    derive_seed,
    drone_dist,
    generate_instance,
    load_instance,
    save_instance,
    substream,
    truck_dist,
)
from .lowerbound import (
    BETA_PRESETS,
    NormKind,
    lb_param,
    lb_ratio,
    nn_expectation,
    nn_pdf,
    rho_star,
    sample_nn_distances,
    tsp_nn_lower_constant,
)
from .ringmodel import (
    Ring,
    TspdSolution,
    makespan,
    normalize_no_straight,
    ring_cost,
    validate,
)
from .solvers import (
    HeuristicConfig,
    SolveReport,
    Tour,
    partition_dp,
    scaled_makespan,
    tsp_exact,
    tsp_heuristic,
    tspd_exact,
    tspd_heuristic,
)
from .stripbound import (
    BoundEstimate,
    PatternKind,
    StripBlock,
    UnsupportedFeatureError,
    cost_five,
    cost_quartet,
    cost_straight,
    cost_triangle,
    estimate_bound,
    optimize_h,
    optimize_then_estimate,
    pair_length,
    sample_block,
)

__all__ = [name for name in dir() if not name.startswith("_")]
