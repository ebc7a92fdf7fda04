"""Concentration of order-2 chaos under sampling without replacement:
samplers, exact oracles, tail bounds, Monte Carlo checks and the two-sample
permutation test."""

from .bounds import (
    BoundConstants,
    BoundReport,
    default_delta,
    hoeffding_T_bound,
    optimize_delta,
    prop1_probability,
    prop1_threshold,
    rademacher_tail,
    term_breakdown,
    theorem1_bound,
)
from .chaos import eval_chaos, eval_chaos_batch
from .coeff import (
    CoefficientMatrix,
    TruncatedNorms,
    from_dense,
    max_abs,
    sigma,
    symmetric_part,
    truncated_norms,
)
from .montecarlo import (
    CalibrationReport,
    ComparisonRow,
    MonteCarloEstimate,
    calibrate_c,
    calibrate_kappa,
    compare_bounds,
    mc_quantile,
    mc_tail,
)
from .oracle import (
    DiscreteLaw,
    EnumerationCapError,
    coupled_law,
    enumerate_balanced,
    exact_chaos_law,
    exact_mean,
    exact_T_law,
    exact_tail,
    tv_distance,
)
from .samplers import (
    CoupledDraw,
    RademacherPath,
    RngSpec,
    SignVector,
    couple,
    draw_coupled,
    draw_iid,
    draw_without_replacement,
    stopping_time,
)
from .two_sample import Kernel, PermTestResult, TwoSampleDataset, kernel_matrix, load_dataset, perm_test, u_statistic

__version__ = "0.1.0"
