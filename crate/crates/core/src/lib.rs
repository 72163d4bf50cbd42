//! Multivariate normal approximation to the Dirichlet density.
//!
//! The crate evaluates the log-ratio of a `Dirichlet(N alpha, N beta)`
//! density to the Gaussian with the same mean and covariance, its two
//! correction terms in powers of `eps^{1/2}` with `eps = 1/(N (||alpha||_1 + beta))`,
//! the total variation between the two laws, closed-form central moments
//! and the pointwise variance of the Dirichlet kernel density estimator.
//! Monte Carlo routines are seeded and reproduce bit for bit under any
//! thread count.

#![allow(clippy::excessive_precision)]

pub mod densities;
pub mod distance;
pub mod error;
pub mod expansion;
pub mod kde;
pub mod model;
pub mod moments;
pub mod quadrature;
pub mod sampling;
pub mod special;
pub mod stats;

pub use densities::{
    dirichlet_log_pdf, log_ratio, matched_normal_log_pdf, DirichletDensity, LogDensity, LogRatio,
};
pub use distance::{
    bulk_escape_bound, bulk_escape_frequency, tv_bound_scale, tv_monte_carlo, tv_quadrature,
    tv_rate_slope, tv_rate_sweep, TvEstimate, TvMethod, TvSweepMethod,
};
pub use error::{Error, Result};
pub use expansion::{
    correction_t1, correction_t2, error_sup, expansion_prediction, exponent_sweep, log_spaced,
    BulkRegion, ExpansionErrors, Order,
};
pub use kde::{
    kde_evaluate, variance_experiment, variance_theory, KdeConfig, KdeVarianceReport, TrueDensity,
};
pub use model::{
    make_matched_gaussian, DeltaVector, DirichletParams, MatchedGaussian, SimplexPoint,
};
pub use moments::{
    central_moment_closed_form, central_moment_oracle, restricted_moment_check, CentralMoment,
    Event, MomentSpec, RestrictedMomentReport,
};
pub use sampling::{sample_dirichlet, sample_standard_normal, RngStream, DEFAULT_SEED};
