//! The Gaussian sequence model.
//!
//! A true coefficient tree `beta0` is observed as `X_jk = beta0_jk + z_jk /
//! sqrt(n)` with independent standard Gaussian noise. The observation extends
//! to the resolution `J_data = ceil(log2 n)`, mirroring the number of
//! coefficients available from `n` equispaced samples. The scaling
//! coefficient is observed exactly by default, since shrinkage acts on detail
//! coefficients only; an option adds noise to it as well.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::rng::{tag, CounterRng};
use crate::tree::CoefficientTree;
use crate::{Error, Result};

/// Noisy coefficients together with the noise scale they carry.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceObservation {
    data: CoefficientTree,
    n: u64,
    sigma_n: f64,
}

impl SequenceObservation {
    /// The observed coefficient tree.
    pub fn data(&self) -> &CoefficientTree {
        &self.data
    }

    /// Nominal sample size behind the observation.
    pub fn n(&self) -> u64 {
        self.n
    }

    /// Per-coefficient noise standard deviation, `1 / sqrt(n)`.
    pub fn sigma_n(&self) -> f64 {
        self.sigma_n
    }

    /// Per-coefficient noise variance, `1 / n`.
    pub fn sigma_sq(&self) -> f64 {
        self.sigma_n * self.sigma_n
    }

    /// Wraps an existing tree as an observation at sample size `n`, for data
    /// that arrived through a transform rather than simulation.
    pub fn from_tree(data: CoefficientTree, n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("sample size n must be positive".into()));
        }
        Ok(SequenceObservation {
            data,
            n,
            sigma_n: 1.0 / (n as f64).sqrt(),
        })
    }
}

/// Tuning knobs for [`simulate_observation_with`].
#[derive(Debug, Clone, Copy, Default)]
pub struct ObservationOptions {
    /// Overrides the observation resolution; `None` uses `ceil(log2 n)`.
    pub j_max: Option<usize>,
    /// Also perturbs the scaling coefficient with `z / sqrt(n)` noise.
    pub noisy_alpha00: bool,
}

/// Observation resolution implied by a sample size: `ceil(log2 n)`.
pub(crate) fn ceil_log2(n: u64) -> usize {
    debug_assert!(n >= 1);
    (64 - (n - 1).leading_zeros() as usize).min(63)
}

/// Draws one observation of `truth` at sample size `n` with default options.
pub fn simulate_observation(truth: &CoefficientTree, n: u64, seed: u64) -> Result<SequenceObservation> {
    simulate_observation_with(truth, n, seed, ObservationOptions::default())
}

/// Draws one observation of `truth` at sample size `n`.
///
/// Noise draws are addressed per coefficient, so the observation at `(seed,
/// n)` is a deterministic function of those values alone.
pub fn simulate_observation_with(
    truth: &CoefficientTree,
    n: u64,
    seed: u64,
    opts: ObservationOptions,
) -> Result<SequenceObservation> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample size n must be positive".into()));
    }
    let j_data = opts.j_max.unwrap_or_else(|| ceil_log2(n));
    if j_data >= 40 {
        return Err(Error::InvalidArgument(format!(
            "observation resolution {j_data} would allocate 2^{} coefficients; cap it with ObservationOptions::j_max",
            j_data + 1
        )));
    }
    let sigma_n = 1.0 / (n as f64).sqrt();
    let levels = (0..=j_data)
        .map(|j| {
            (0..1usize << j)
                .map(|k| {
                    let mut rng = CounterRng::new(seed, &[tag::OBSERVATION, j as u64, k as u64]);
                    let z: f64 = rng.sample(StandardNormal);
                    truth.coeff(j, k) + sigma_n * z
                })
                .collect()
        })
        .collect();
    let alpha00 = if opts.noisy_alpha00 {
        let mut rng = CounterRng::new(seed, &[tag::OBSERVATION_SCALING]);
        let z: f64 = rng.sample(StandardNormal);
        truth.alpha00() + sigma_n * z
    } else {
        truth.alpha00()
    };
    let data = CoefficientTree::new(alpha00, levels)?;
    Ok(SequenceObservation { data, n, sigma_n })
}
