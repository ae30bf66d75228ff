//! Bayesian wavelet shrinkage in the Gaussian sequence model.
//!
//! The library works with dyadic trees of wavelet coefficients. A true tree
//! `beta0` is observed through white noise, `X_jk = beta0_jk + z_jk / sqrt(n)`,
//! and a prior over coefficient trees (spike-and-slab or a sieve of finite
//! Gaussian models) yields a closed-form posterior per coefficient. On top of
//! the model the crate provides
//!
//! * Besov sequence norms, ball membership, and Besov-ball truth generators
//!   ([`besov`]),
//! * a periodized orthonormal wavelet transform for moving between sampled
//!   signals and coefficient trees ([`dwt`]),
//! * conjugate posterior computations: means, medians, exact draws, and
//!   posterior mass outside an `l2` ball ([`posterior`]),
//! * a Monte Carlo lab that measures how fast posteriors contract around the
//!   truth as `n` grows, plus the supporting theoretical rates, prior
//!   small-ball probes, and incomplete-gamma bounds ([`rate`], [`prior`],
//!   [`gamma`]).
//!
//! All randomness flows through counter-based streams ([`rng`]): every draw is
//! addressed by `(seed, purpose, indices...)`, so results are reproducible
//! bit-for-bit regardless of thread count or evaluation order.

#![forbid(unsafe_code)]

pub mod besov;
pub mod dwt;
pub mod gamma;
pub mod posterior;
pub mod prior;
pub mod rate;
pub mod rng;
pub mod sequence;
pub mod tree;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A constructor or function argument violated a documented constraint.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// A coefficient tree had levels of the wrong width or non-finite entries.
    #[error("invalid coefficient tree: {0}")]
    InvalidTree(String),
    /// A Besov index outside the admissible range.
    #[error("invalid Besov index: {0}")]
    InvalidBesovIndex(String),
    /// Prior hyperparameters outside the admissible range.
    #[error("invalid prior: {0}")]
    InvalidPrior(String),
    /// A sampled signal with an unusable length or non-finite samples.
    #[error("invalid signal: {0}")]
    InvalidSignal(String),
    /// A truth specification whose target norm cannot be reached.
    #[error("unreachable truth target: {0}")]
    UnreachableTarget(String),
    /// An importance-sampling estimate too degenerate to report.
    #[error("effective sample size {ess:.1} below required {min:.0}; increase n_mc or widen the ball")]
    LowEffectiveSampleSize { ess: f64, min: f64 },
    /// A text-format parse failure (coefficient trees, signal files).
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    /// An underlying I/O failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Library-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

pub use besov::{
    besov_norm, in_ball, level_embedding_bound, level_lp_norm, make_truth, projected_norm_bound,
    tail_energy, BesovIndex, TruthKind, TruthSpec,
};
pub use dwt::{forward_dwt, inverse_dwt, standard_signal, FilterKind, SampledSignal, SignalName, WaveletFilter};
pub use gamma::{
    gamma_tail_bound_ratio, ln_lower_incomplete_gamma_regularized,
    lower_incomplete_gamma_regularized,
};
pub use posterior::{
    coefficient_posterior, complement_from_distances, posterior_ball_complement_mass,
    posterior_distance_samples, posterior_mean, posterior_median, posterior_tree,
    sample_coefficient, sieve_posterior, CoefficientPosterior, ComplementMass, PosteriorDraws,
    PosteriorTree, SievePosterior,
};
pub use prior::{
    choose_alpha, prior_mass_probe, sample_sieve, sample_spike_slab, sieve_weights, MassEstimate,
    Prior, SievePrior, SpikeSlabPrior,
};
pub use rate::{
    fit_rate_slope, prior_tail_report, run_contraction_experiment,
    run_contraction_experiment_with_truth, theoretical_rate, ExperimentConfig, MassPoint,
    PriorKind, PriorSettings, RateExperimentResult, RatePoint, RateQuantities, SlopeFit,
    TailReportRow, RADIUS_SWEEP,
};
pub use rng::{derive_seed, CounterRng};
pub use sequence::{simulate_observation, simulate_observation_with, ObservationOptions, SequenceObservation};
pub use tree::{l2_distance_sq, CoefficientTree};
