//! Generalized Pareto tail machinery and the noise-model abstraction.

mod fit;
mod gpd;
mod noise;
mod tail;

pub use fit::{
    fit_gpd, gpd_log_likelihood, mean_excess_curve, pwm_estimates, qq_points, select_threshold,
    GpdFit, MeanExcessPoint, Threshold, DEFAULT_THRESHOLD_QUANTILE, MIN_GPD_SAMPLE,
    MIN_MEAN_EXCESS_COUNT, MIN_RECOMMENDED_EXCEEDANCES,
};
pub use gpd::{excess_cdf, GpdParams, XI_ZERO};
pub use noise::{
    kappa_by_quadrature, moment_check, BodyMode, MomentCheck, NoiseModel, SplicedNoise,
    StandardNormalNoise, MOMENT_CHECK_DRAWS, MOMENT_CHECK_TOL,
};
pub use tail::TailModel;
