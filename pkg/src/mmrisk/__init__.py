"""Desk-scale laboratory for excess-risk bounds of first-order methods whose
gradients arrive through frozen-data oracles."""

from .bounds import (
    BoundReport,
    Divergences,
    bayes_risk_closed_form,
    divergences,
    excess_upper_envelope,
    ipm,
    mixture_ipm,
    table1_bounds,
    two_point_lower,
    wasserstein,
)
from .estimators import (
    Estimator,
    FilterConfig,
    GuaranteeVoidWarning,
    bayes_two_point,
    fd_bnd_estimator,
    fd_lip_estimator,
    fl_weighted_mean,
    optimal_fl_weights,
    robust_filter_mean,
    sample_mean,
    voronoi_masses,
)
from .harness import (
    ExperimentConfig,
    ExperimentResult,
    config_from_obj,
    fit_loglog,
    fit_rate,
    load_config,
    run_scenario,
    verify_suite,
)
from .optimizer import (
    OptimizerConfig,
    Trajectory,
    batch_schedule,
    estimator_gd,
    fixed_batch_schedule,
    minibatch_gd_warmup,
    warmup_length,
)
from .oracles import (
    Observation,
    OracleSample,
    Seed,
    draw_fl,
    draw_rl,
    draw_sl,
    draw_tl,
    fixed_data,
    observe,
)
from .problems import (
    DiscreteDistribution,
    FunctionClassSpec,
    GaussianDistribution,
    GradientField,
    PLInstance,
    QuadraticInstance,
    hard_instance_bnd,
    pl_example,
    population_grad,
    population_loss,
    sup_variance,
)

__version__ = "0.1.0"
