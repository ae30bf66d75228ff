//! Closed-form posteriors in the Gaussian sequence model.
//!
//! Under the spike-and-slab prior each coefficient posterior is again a
//! two-part mixture: weight `omega` on `N(m, v)` and `1 - omega` on the point
//! mass at zero, with
//!
//! ```text
//! m = a^2 X / (a^2 + sigma^2),       v = a^2 sigma^2 / (a^2 + sigma^2),
//! omega / (1 - omega) = pi N(X; 0, a^2 + sigma^2) / ((1 - pi) N(X; 0, sigma^2)).
//! ```
//!
//! Mixture odds are evaluated in log scale so extreme observations saturate
//! cleanly instead of overflowing. Under the sieve prior the posterior is a
//! mixture over model indices of products of Gaussian shrinkage posteriors.
//!
//! All posterior summaries here are exact computations, not Monte Carlo —
//! except the ball-complement mass, which is a Monte Carlo average over exact
//! posterior draws.

use rand::Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::prior::{sieve_weights, SievePrior, SpikeSlabPrior};
use crate::rng::{derive_seed, tag, CounterRng};
use crate::sequence::SequenceObservation;
use crate::tree::CoefficientTree;

/// Marginal posterior of one detail coefficient: a spike-and-slab mixture.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientPosterior {
    omega: f64,
    mean: f64,
    variance: f64,
}

impl CoefficientPosterior {
    /// Posterior slab weight `omega = P(coefficient != 0 | X)`.
    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// Mean `m` of the slab component.
    pub fn slab_mean(&self) -> f64 {
        self.mean
    }

    /// Variance `v` of the slab component.
    pub fn slab_variance(&self) -> f64 {
        self.variance
    }

    /// Posterior second moment `omega (m^2 + v)`.
    pub fn second_moment(&self) -> f64 {
        self.omega * (self.mean * self.mean + self.variance)
    }

    /// Full posterior variance `omega (m^2 + v) - (omega m)^2`.
    pub fn variance(&self) -> f64 {
        self.second_moment() - (self.omega * self.mean).powi(2)
    }
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("standard normal parameters are valid")
}

/// Exact conjugate update of one coefficient.
///
/// Preconditions (panics otherwise): `x` finite, `sigma_sq > 0`, `a_sq > 0`,
/// `pi` in `[0, 1]`.
pub fn coefficient_posterior(x: f64, sigma_sq: f64, pi: f64, a_sq: f64) -> CoefficientPosterior {
    assert!(x.is_finite(), "observation must be finite, got {x}");
    assert!(sigma_sq.is_finite() && sigma_sq > 0.0, "noise variance must be positive, got {sigma_sq}");
    assert!(a_sq.is_finite() && a_sq > 0.0, "slab variance must be positive, got {a_sq}");
    assert!((0.0..=1.0).contains(&pi), "inclusion probability must lie in [0, 1], got {pi}");
    let total = a_sq + sigma_sq;
    let mean = a_sq * x / total;
    let variance = a_sq * sigma_sq / total;
    let omega = if pi == 0.0 {
        0.0
    } else if pi == 1.0 {
        1.0
    } else {
        // log odds of slab vs spike; the common -x^2/2 and -ln(2 pi)/2 cancel.
        let log_slab = pi.ln() - 0.5 * total.ln() - x * x / (2.0 * total);
        let log_spike = (1.0 - pi).ln() - 0.5 * sigma_sq.ln() - x * x / (2.0 * sigma_sq);
        let diff = log_slab - log_spike;
        if diff >= 0.0 {
            1.0 / (1.0 + (-diff).exp())
        } else {
            let e = diff.exp();
            e / (1.0 + e)
        }
    };
    CoefficientPosterior { omega, mean, variance }
}

/// Posterior mean `omega * m`.
pub fn posterior_mean(cp: &CoefficientPosterior) -> f64 {
    cp.omega * cp.mean
}

/// Exact posterior median.
///
/// The mixture CDF jumps by `1 - omega` at zero, so the median is zero unless
/// one side of the origin carries more than half the mass; in that case it
/// solves `omega Phi((t - m) / sqrt(v)) (+ (1 - omega)) = 1/2` in closed form,
/// polished by a few Newton steps on the exact CDF. The map `X -> median` is
/// a thresholding rule: exactly zero on an interval of observations around
/// the origin.
pub fn posterior_median(cp: &CoefficientPosterior) -> f64 {
    let (omega, m, v) = (cp.omega, cp.mean, cp.variance);
    if omega == 0.0 {
        return 0.0;
    }
    let s = v.sqrt();
    debug_assert!(s > 0.0, "slab variance must stay positive");
    let normal = std_normal();
    let mass_below = omega * normal.cdf(-m / s);
    let mass_above = omega * normal.cdf(m / s);
    // `atom_cdf` is the CDF contribution of the point mass on the branch the
    // median lives on: included for t > 0, not yet for t < 0.
    let (seed_quantile, atom_cdf) = if mass_below > 0.5 {
        (0.5 / omega, 0.0)
    } else if mass_above > 0.5 {
        (1.0 - 0.5 / omega, 1.0 - omega)
    } else {
        return 0.0;
    };
    let mut t = m + s * normal.inverse_cdf(seed_quantile);
    // Newton on G(t) = omega Phi((t - m)/s) + atom_cdf - 1/2.
    for _ in 0..4 {
        let z = (t - m) / s;
        let g = omega * normal.cdf(z) + atom_cdf - 0.5;
        if g.abs() <= 1e-16 {
            break;
        }
        let density = omega * (-0.5 * z * z).exp() / (s * (2.0 * std::f64::consts::PI).sqrt());
        if !(density.is_finite() && density > 0.0) {
            break;
        }
        let step = g / density;
        if !step.is_finite() {
            break;
        }
        t -= step;
    }
    t
}

/// Draws one value from the mixture posterior.
pub fn sample_coefficient(cp: &CoefficientPosterior, seed: u64) -> f64 {
    let mut rng = CounterRng::new(seed, &[tag::POSTERIOR_DRAW]);
    sample_with_rng(cp, &mut rng)
}

fn sample_with_rng(cp: &CoefficientPosterior, rng: &mut CounterRng) -> f64 {
    let u: f64 = rng.random();
    if u < cp.omega {
        let z: f64 = rng.sample(StandardNormal);
        cp.mean + cp.variance.sqrt() * z
    } else {
        0.0
    }
}

/// Factorized posterior over a whole observed tree under a spike-and-slab
/// prior. The exactly observed scaling coefficient is carried through as a
/// point mass.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorTree {
    alpha00: f64,
    levels: Vec<Vec<CoefficientPosterior>>,
}

impl PosteriorTree {
    /// Point-mass location of the scaling coefficient.
    pub fn alpha00(&self) -> f64 {
        self.alpha00
    }

    /// Number of detail levels covered by the posterior.
    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    /// Marginal posterior of coefficient `(j, k)`.
    pub fn coefficient(&self, j: usize, k: usize) -> &CoefficientPosterior {
        &self.levels[j][k]
    }

    /// Marginals of one level.
    pub fn level(&self, j: usize) -> &[CoefficientPosterior] {
        &self.levels[j]
    }

    /// Tree of posterior means.
    pub fn mean_tree(&self) -> CoefficientTree {
        self.map_tree(posterior_mean)
    }

    /// Tree of posterior medians.
    pub fn median_tree(&self) -> CoefficientTree {
        self.map_tree(posterior_median)
    }

    fn map_tree(&self, f: impl Fn(&CoefficientPosterior) -> f64) -> CoefficientTree {
        let levels = self
            .levels
            .iter()
            .map(|level| level.iter().map(&f).collect())
            .collect();
        CoefficientTree::new(self.alpha00, levels).expect("posterior summaries are finite")
    }

    /// Total posterior variance, summed over coefficients.
    pub fn total_variance(&self) -> f64 {
        self.levels
            .iter()
            .flat_map(|level| level.iter())
            .map(CoefficientPosterior::variance)
            .sum()
    }

    /// Exact joint draw: coefficients are independent given the data.
    pub fn draw_tree(&self, seed: u64) -> CoefficientTree {
        let levels = self
            .levels
            .iter()
            .enumerate()
            .map(|(j, level)| {
                level
                    .iter()
                    .enumerate()
                    .map(|(k, cp)| {
                        let mut rng =
                            CounterRng::new(seed, &[tag::POSTERIOR_DRAW, j as u64, k as u64]);
                        sample_with_rng(cp, &mut rng)
                    })
                    .collect()
            })
            .collect();
        CoefficientTree::new(self.alpha00, levels).expect("posterior draws are finite")
    }
}

/// Anything that can draw from a posterior and report the squared distance of
/// the draw to a fixed center, without materializing the draw.
pub trait PosteriorDraws {
    /// Squared `l2` distance between the draw addressed by `seed` and
    /// `center`, matching `l2_distance_sq(draw_tree(seed), center)` bit for
    /// bit where a `draw_tree` exists.
    fn draw_distance_sq(&self, center: &CoefficientTree, seed: u64) -> f64;
}

impl PosteriorDraws for PosteriorTree {
    fn draw_distance_sq(&self, center: &CoefficientTree, seed: u64) -> f64 {
        let d0 = self.alpha00 - center.alpha00();
        let mut total = d0 * d0;
        let depth = self.levels.len().max(center.num_levels());
        for j in 0..depth {
            let mut sub = 0.0;
            for k in 0..1usize << j {
                let drawn = match self.levels.get(j) {
                    Some(level) => {
                        let mut rng =
                            CounterRng::new(seed, &[tag::POSTERIOR_DRAW, j as u64, k as u64]);
                        sample_with_rng(&level[k], &mut rng)
                    }
                    None => 0.0,
                };
                let d = drawn - center.coeff(j, k);
                sub += d * d;
            }
            total += sub;
        }
        total
    }
}

/// Computes the factorized posterior of every observed detail coefficient.
///
/// Levels deeper than the prior's declared depth reuse the prior's defining
/// formula, treating it as an infinite product measure.
pub fn posterior_tree(obs: &SequenceObservation, prior: &SpikeSlabPrior) -> PosteriorTree {
    let sigma_sq = obs.sigma_sq();
    let levels = obs
        .data()
        .iter_levels()
        .enumerate()
        .map(|(j, level)| {
            let (pi, a_sq) = prior.extended_level_params(j);
            level
                .iter()
                .map(|&x| coefficient_posterior(x, sigma_sq, pi, a_sq))
                .collect()
        })
        .collect();
    PosteriorTree {
        alpha00: obs.data().alpha00(),
        levels,
    }
}

/// Posterior under the sieve prior: model weights plus shrinkage summaries.
#[derive(Debug, Clone, PartialEq)]
pub struct SievePosterior {
    weights: Vec<f64>,
    alpha: f64,
    sigma_sq: f64,
    data: CoefficientTree,
}

impl SievePosterior {
    /// Posterior model probabilities, indexed by model `m = 0..=m_max`.
    pub fn model_weights(&self) -> &[f64] {
        &self.weights
    }

    /// `P(model index >= j)`: the probability a level-`j` coefficient is live.
    pub fn inclusion_probability(&self, j: usize) -> f64 {
        if j >= self.weights.len() {
            return 0.0;
        }
        self.weights[j..].iter().sum()
    }

    fn shrink(&self, j: usize) -> f64 {
        let tau_sq = (-self.alpha * j as f64).exp2();
        tau_sq / (tau_sq + self.sigma_sq)
    }

    fn slab_variance(&self, j: usize) -> f64 {
        let tau_sq = (-self.alpha * j as f64).exp2();
        tau_sq * self.sigma_sq / (tau_sq + self.sigma_sq)
    }

    /// Marginal posterior of coefficient `(j, k)`: conditional on any model
    /// containing level `j` the coefficient is Gaussian shrinkage with
    /// level-only parameters, so the marginal is again a spike-and-slab
    /// mixture with slab weight `P(m >= j)`.
    pub fn marginal(&self, j: usize, k: usize) -> CoefficientPosterior {
        CoefficientPosterior {
            omega: self.inclusion_probability(j),
            mean: self.shrink(j) * self.data.coeff(j, k),
            variance: self.slab_variance(j),
        }
    }

    /// Tree of posterior means: `X_jk * shrink_j * P(m >= j)`.
    pub fn mean_tree(&self) -> CoefficientTree {
        self.map_tree(posterior_mean)
    }

    /// Tree of exact marginal posterior medians.
    pub fn median_tree(&self) -> CoefficientTree {
        self.map_tree(posterior_median)
    }

    fn map_tree(&self, f: impl Fn(&CoefficientPosterior) -> f64) -> CoefficientTree {
        let levels = self
            .data
            .iter_levels()
            .enumerate()
            .map(|(j, level)| (0..level.len()).map(|k| f(&self.marginal(j, k))).collect())
            .collect();
        CoefficientTree::new(self.data.alpha00(), levels).expect("summaries are finite")
    }

    /// Total marginal posterior variance, summed over observed coefficients.
    /// (Coefficients are dependent through the model index, so this is the
    /// sum of marginal variances, which is what the `l2` risk decomposition
    /// uses.)
    pub fn total_variance(&self) -> f64 {
        let mut total = 0.0;
        for (j, level) in self.data.iter_levels().enumerate() {
            for k in 0..level.len() {
                total += self.marginal(j, k).variance();
            }
        }
        total
    }

    /// Exact joint draw: first a model index, then independent Gaussian
    /// shrinkage draws inside the model, zeros above it.
    pub fn draw_tree(&self, seed: u64) -> CoefficientTree {
        let u: f64 = CounterRng::new(seed, &[tag::POSTERIOR_MODEL]).random();
        let m = draw_index(&self.weights, u);
        let levels = self
            .data
            .iter_levels()
            .enumerate()
            .map(|(j, level)| {
                if j > m {
                    return vec![0.0; level.len()];
                }
                let shrink = self.shrink(j);
                let sd = self.slab_variance(j).sqrt();
                level
                    .iter()
                    .enumerate()
                    .map(|(k, &x)| {
                        let mut rng =
                            CounterRng::new(seed, &[tag::POSTERIOR_DRAW, j as u64, k as u64]);
                        let z: f64 = rng.sample(StandardNormal);
                        shrink * x + sd * z
                    })
                    .collect()
            })
            .collect();
        CoefficientTree::new(self.data.alpha00(), levels).expect("draws are finite")
    }
}

impl PosteriorDraws for SievePosterior {
    fn draw_distance_sq(&self, center: &CoefficientTree, seed: u64) -> f64 {
        let u: f64 = CounterRng::new(seed, &[tag::POSTERIOR_MODEL]).random();
        let m = draw_index(&self.weights, u);
        let d0 = self.data.alpha00() - center.alpha00();
        let mut total = d0 * d0;
        let depth = self.data.num_levels().max(center.num_levels());
        for j in 0..depth {
            let live = j <= m && j < self.data.num_levels();
            let shrink = if live { self.shrink(j) } else { 0.0 };
            let sd = if live { self.slab_variance(j).sqrt() } else { 0.0 };
            let mut sub = 0.0;
            for k in 0..1usize << j {
                let drawn = if live {
                    let mut rng = CounterRng::new(seed, &[tag::POSTERIOR_DRAW, j as u64, k as u64]);
                    let z: f64 = rng.sample(StandardNormal);
                    shrink * self.data.coeff(j, k) + sd * z
                } else {
                    0.0
                };
                let d = drawn - center.coeff(j, k);
                sub += d * d;
            }
            total += sub;
        }
        total
    }
}

fn draw_index(weights: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.len() - 1
}

/// Computes the sieve posterior: prior model weights times marginal
/// likelihoods, normalized in log scale.
///
/// For model `m`, level `j` coefficients are marginally
/// `N(0, 2^{-alpha j} 1{j <= m} + sigma^2)` i.i.d., so the log marginal
/// likelihood needs only per-level sums of squares.
pub fn sieve_posterior(obs: &SequenceObservation, prior: &SievePrior) -> SievePosterior {
    let sigma_sq = obs.sigma_sq();
    let level_sum_sq: Vec<f64> = obs
        .data()
        .iter_levels()
        .map(|level| level.iter().map(|x| x * x).sum())
        .collect();
    let prior_weights = sieve_weights(prior);
    let two_pi = 2.0 * std::f64::consts::PI;
    let log_posts: Vec<f64> = (0..=prior.m_max())
        .map(|m| {
            let mut log_post = prior_weights[m].ln();
            for (j, &s_j) in level_sum_sq.iter().enumerate() {
                let var = if j <= m { prior.level_variance(j) } else { 0.0 } + sigma_sq;
                let n_j = (1u64 << j) as f64;
                log_post += -0.5 * (n_j * (two_pi * var).ln() + s_j / var);
            }
            log_post
        })
        .collect();
    let max = log_posts.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let unnorm: Vec<f64> = log_posts.iter().map(|lp| (lp - max).exp()).collect();
    let total: f64 = unnorm.iter().sum();
    SievePosterior {
        weights: unnorm.into_iter().map(|w| w / total).collect(),
        alpha: prior.alpha(),
        sigma_sq,
        data: obs.data().clone(),
    }
}

/// Monte Carlo estimate of posterior mass outside an `l2` ball.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplementMass {
    /// Fraction of posterior draws with squared distance above the radius.
    pub estimate: f64,
    /// Binomial standard error of the estimate.
    pub std_err: f64,
    /// Draws that exceeded the radius.
    pub exceed: u64,
    /// Total draws.
    pub draws: u64,
}

/// Squared distances of `n_samples` independent posterior draws to `center`.
/// Draw `i` uses the derived stream `(seed, i)`, so subsets of samples are
/// stable under changes of `n_samples`.
pub fn posterior_distance_samples(
    post: &impl PosteriorDraws,
    center: &CoefficientTree,
    n_samples: usize,
    seed: u64,
) -> Vec<f64> {
    (0..n_samples)
        .map(|i| post.draw_distance_sq(center, derive_seed(seed, &[tag::MASS, i as u64])))
        .collect()
}

/// Estimates `P(||draw - center||^2 > radius_sq | data)` by Monte Carlo.
pub fn posterior_ball_complement_mass(
    post: &impl PosteriorDraws,
    center: &CoefficientTree,
    radius_sq: f64,
    n_samples: usize,
    seed: u64,
) -> ComplementMass {
    assert!(n_samples > 0, "need at least one posterior draw");
    assert!(radius_sq >= 0.0, "squared radius must be nonnegative");
    let distances = posterior_distance_samples(post, center, n_samples, seed);
    complement_from_distances(&distances, radius_sq)
}

/// Evaluates the complement-mass estimate on precomputed distances, so one
/// set of draws can serve several radii.
pub fn complement_from_distances(distances_sq: &[f64], radius_sq: f64) -> ComplementMass {
    let draws = distances_sq.len() as u64;
    let exceed = distances_sq.iter().filter(|d| **d > radius_sq).count() as u64;
    let p = exceed as f64 / draws as f64;
    ComplementMass {
        estimate: p,
        std_err: (p * (1.0 - p) / draws as f64).sqrt(),
        exceed,
        draws,
    }
}
