//! Theoretical contraction rates and the Monte Carlo contraction lab.
//!
//! The lab simulates the sequence model along a grid of sample sizes, forms
//! the posterior at each replicate, and records three summaries against the
//! truth: squared `l2` loss of the posterior mean, of the posterior median,
//! and the posterior mass outside the ball of squared radius `M * eps_n^2`.
//! Fitting `log(loss)` against `log(n)` turns the asymptotic rate statement
//! into a slope that can be compared with the theoretical exponent.

use rayon::prelude::*;

use crate::besov::{make_truth, tail_energy, BesovIndex, TruthSpec};
use crate::posterior::{posterior_distance_samples, posterior_tree, sieve_posterior};
use crate::prior::{choose_alpha, SievePrior, SpikeSlabPrior};
use crate::rng::{derive_seed, tag};
use crate::sequence::{ceil_log2, simulate_observation_with, ObservationOptions};
use crate::tree::{l2_distance_sq, CoefficientTree};
use crate::{Error, Result};

/// Rate quantities at one sample size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateQuantities {
    /// Squared contraction radius target `(ln n)^2 * n^{-exponent}`.
    pub eps_n_sq: f64,
    /// Bias scale of the truncated estimator; asymptotically negligible
    /// against `eps_n`.
    pub tau_n: f64,
    /// Resolution cutoff `floor(log2(n) / alpha)` with `alpha` chosen from
    /// the ball geometry.
    pub j_cut: usize,
    /// Decay exponent `e` in `eps_n_sq = (ln n)^2 * n^{-e}` (a positive
    /// number; the loss slope should approach `-e`).
    pub exponent: f64,
}

/// Computes the contraction rate targets for a Besov ball at sample size `n`.
///
/// Panics if `n < 2`.
pub fn theoretical_rate(idx: &BesovIndex, n: u64) -> RateQuantities {
    assert!(n >= 2, "rates need n >= 2, got {n}");
    let s = idx.s();
    let p = idx.p();
    let nf = n as f64;
    let (exponent, tau_exponent) = if p >= 2.0 {
        (2.0 * s / (2.0 * s + 1.0), (s + 0.5 - 1.0 / p.min(f64::MAX)) / (2.0 * s + 1.0))
    } else {
        let denom = 2.0 * s + 2.0 - 2.0 / p;
        ((2.0 * s + 1.0 - 2.0 / p) / denom, s / denom)
    };
    let tau_exponent = if p.is_infinite() {
        (s + 0.5) / (2.0 * s + 1.0)
    } else {
        tau_exponent
    };
    let log_n = nf.ln();
    let eps_n_sq = log_n * log_n * nf.powf(-exponent);
    let tau_n = nf.powf(-tau_exponent);
    let alpha = choose_alpha(s, p);
    let j_cut = (nf.log2() / alpha).floor() as usize;
    RateQuantities { eps_n_sq, tau_n, j_cut, exponent }
}

/// Ordinary least-squares fit of `log(loss)` on `log(n)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the fit in log space.
    pub residual_rms: f64,
}

/// Fits a power law through positive losses along a sample-size grid.
pub fn fit_rate_slope(ns: &[u64], losses: &[f64]) -> Result<SlopeFit> {
    if ns.len() != losses.len() {
        return Err(Error::InvalidArgument(format!(
            "grid and losses disagree in length: {} vs {}",
            ns.len(),
            losses.len()
        )));
    }
    if ns.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "need at least 3 points for a slope, got {}",
            ns.len()
        )));
    }
    if let Some(bad) = losses.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "losses must be positive and finite, got {bad}"
        )));
    }
    if ns.contains(&0) {
        return Err(Error::InvalidArgument("sample sizes must be positive".into()));
    }
    let xs: Vec<f64> = ns.iter().map(|n| (*n as f64).ln()).collect();
    let ys: Vec<f64> = losses.iter().map(|l| l.ln()).collect();
    let n = xs.len() as f64;
    let x_mean = xs.iter().sum::<f64>() / n;
    let y_mean = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - x_mean) * (x - x_mean)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument(
            "sample sizes are all equal; slope is undefined".into(),
        ));
    }
    let sxy: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - x_mean) * (y - y_mean))
        .sum();
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    Ok(SlopeFit {
        slope,
        intercept,
        residual_rms: (ss_res / n).sqrt(),
    })
}

/// Which prior family the experiment runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PriorKind {
    SpikeSlab,
    Sieve,
}

/// Prior hyperparameters for the experiment. `alpha = None` defers to
/// [`choose_alpha`] on the configured Besov index; `m_max = None` lets the
/// sieve extend to the observation resolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorSettings {
    pub alpha: Option<f64>,
    pub gamma: f64,
    pub c_a: f64,
    pub c_pi: f64,
    pub mu: f64,
    pub m_max: Option<usize>,
}

impl Default for PriorSettings {
    fn default() -> Self {
        PriorSettings {
            alpha: None,
            gamma: 0.5,
            c_a: 1.0,
            c_pi: 1.0,
            mu: 1.0,
            m_max: None,
        }
    }
}

/// Full contraction-experiment configuration.
///
/// `besov` is the ball the analyst assumes: it drives the theoretical rate,
/// the default prior calibration, and the contraction radii. `truth`
/// describes the data-generating tree and normally carries the same index,
/// but may differ to study misspecification.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub besov: BesovIndex,
    pub truth: TruthSpec,
    pub n_grid: Vec<u64>,
    pub replicates: usize,
    /// Contraction radius multiplier `M`; the monitored ball has squared
    /// radius `M * eps_n^2`.
    pub radius_multiplier: f64,
    /// Posterior draws per replicate for the complement-mass estimate.
    pub posterior_samples: usize,
    pub prior_kind: PriorKind,
    pub prior: PriorSettings,
    pub seed: u64,
    /// Also observe the scaling coefficient with noise.
    pub noisy_alpha00: bool,
}

impl ExperimentConfig {
    fn validate(&self) -> Result<()> {
        if self.n_grid.is_empty() {
            return Err(Error::InvalidArgument("n_grid must not be empty".into()));
        }
        if self.n_grid.iter().any(|n| *n < 2) {
            return Err(Error::InvalidArgument("every n must be at least 2".into()));
        }
        if !self.n_grid.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidArgument("n_grid must be strictly increasing".into()));
        }
        if self.replicates == 0 {
            return Err(Error::InvalidArgument("replicates must be at least 1".into()));
        }
        if self.posterior_samples == 0 {
            return Err(Error::InvalidArgument("posterior_samples must be at least 1".into()));
        }
        if !(self.radius_multiplier.is_finite() && self.radius_multiplier > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "radius multiplier M must be positive, got {}",
                self.radius_multiplier
            )));
        }
        Ok(())
    }

    /// The slab-decay exponent actually used: the override, or the matched
    /// choice for the configured ball.
    pub fn effective_alpha(&self) -> f64 {
        self.prior
            .alpha
            .unwrap_or_else(|| choose_alpha(self.besov.s(), self.besov.p()))
    }
}

/// Radius multipliers always included in the complement-mass sweep, since
/// "sufficiently large constant" is not quantified by the theory.
pub const RADIUS_SWEEP: [f64; 4] = [0.5, 1.0, 2.0, 4.0];

/// Complement mass at one sweep multiplier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassPoint {
    pub multiplier: f64,
    pub mean: f64,
    pub std_err: f64,
}

/// Aggregated results at one sample size.
#[derive(Debug, Clone, PartialEq)]
pub struct RatePoint {
    pub n: u64,
    pub eps_n_sq: f64,
    /// Observation resolution `ceil(log2 n)`.
    pub j_data: usize,
    /// Theoretical resolution cutoff at this `n`.
    pub j_cut: usize,
    /// Mean over replicates of the posterior-mean squared loss.
    pub loss_mean: f64,
    pub loss_mean_se: f64,
    /// Mean over replicates of the posterior-median squared loss.
    pub loss_median: f64,
    pub loss_median_se: f64,
    /// Mean posterior mass outside the ball of squared radius `M * eps_n^2`.
    pub complement_mass: f64,
    pub complement_mass_se: f64,
    /// The same mass across the standard multiplier sweep.
    pub sweep: Vec<MassPoint>,
    /// True when the truth's energy beyond the observation resolution
    /// exceeds `eps_n^2 / 10`: losses at this `n` carry visible truncation
    /// bias that no estimator on the observed window can remove.
    pub truncation_biased: bool,
}

/// Full experiment output.
#[derive(Debug, Clone, PartialEq)]
pub struct RateExperimentResult {
    pub points: Vec<RatePoint>,
    /// OLS slope of `log(mean loss)` vs `log n`.
    pub slope: f64,
    pub intercept: f64,
    pub residual_rms: f64,
    /// The positive exponent `e`; contraction predicts slope near `-e`.
    pub theoretical_exponent: f64,
    /// The truth the experiment ran against.
    pub truth: CoefficientTree,
}

/// Per-replicate summaries, aggregated in replicate order.
struct Replicate {
    loss_mean: f64,
    loss_median: f64,
    complement: f64,
    sweep: [f64; RADIUS_SWEEP.len()],
}

fn mean_and_se(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    if n < 2.0 {
        return (mean, 0.0);
    }
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Generates the truth from the config and runs the experiment.
pub fn run_contraction_experiment(cfg: &ExperimentConfig) -> Result<RateExperimentResult> {
    let truth = make_truth(&cfg.truth, cfg.seed)?;
    run_contraction_experiment_with_truth(cfg, &truth)
}

/// Runs the experiment against an explicit truth tree.
///
/// Replicates are embarrassingly parallel; every random draw is addressed by
/// `(seed, n, replicate, ...)` streams and aggregation happens in replicate
/// order, so results are identical for any worker count.
pub fn run_contraction_experiment_with_truth(
    cfg: &ExperimentConfig,
    truth: &CoefficientTree,
) -> Result<RateExperimentResult> {
    cfg.validate()?;
    let alpha = cfg.effective_alpha();
    let mut points = Vec::with_capacity(cfg.n_grid.len());
    let mut exponent = 0.0;
    for &n in &cfg.n_grid {
        let rq = theoretical_rate(&cfg.besov, n);
        exponent = rq.exponent;
        let j_data = ceil_log2(n);
        let radius_sq = cfg.radius_multiplier * rq.eps_n_sq;
        let sweep_radii: Vec<f64> = RADIUS_SWEEP.iter().map(|m| m * rq.eps_n_sq).collect();
        let replicates: Vec<Replicate> = (0..cfg.replicates)
            .into_par_iter()
            .map(|r| {
                run_replicate(cfg, truth, n, r as u64, alpha, j_data, radius_sq, &sweep_radii)
            })
            .collect::<Result<Vec<_>>>()?;
        let (loss_mean, loss_mean_se) = mean_and_se(replicates.iter().map(|r| r.loss_mean));
        let (loss_median, loss_median_se) = mean_and_se(replicates.iter().map(|r| r.loss_median));
        let (complement_mass, complement_mass_se) =
            mean_and_se(replicates.iter().map(|r| r.complement));
        let sweep = RADIUS_SWEEP
            .iter()
            .enumerate()
            .map(|(i, &multiplier)| {
                let (mean, std_err) = mean_and_se(replicates.iter().map(|r| r.sweep[i]));
                MassPoint { multiplier, mean, std_err }
            })
            .collect();
        points.push(RatePoint {
            n,
            eps_n_sq: rq.eps_n_sq,
            j_data,
            j_cut: rq.j_cut,
            loss_mean,
            loss_mean_se,
            loss_median,
            loss_median_se,
            complement_mass,
            complement_mass_se,
            sweep,
            truncation_biased: tail_energy(truth, j_data as i64) > rq.eps_n_sq / 10.0,
        });
    }
    let losses: Vec<f64> = points.iter().map(|p| p.loss_mean).collect();
    let fit = fit_rate_slope(&cfg.n_grid, &losses)?;
    Ok(RateExperimentResult {
        points,
        slope: fit.slope,
        intercept: fit.intercept,
        residual_rms: fit.residual_rms,
        theoretical_exponent: exponent,
        truth: truth.clone(),
    })
}

#[allow(clippy::too_many_arguments)]
fn run_replicate(
    cfg: &ExperimentConfig,
    truth: &CoefficientTree,
    n: u64,
    replicate: u64,
    alpha: f64,
    j_data: usize,
    radius_sq: f64,
    sweep_radii: &[f64],
) -> Result<Replicate> {
    let rep_seed = derive_seed(cfg.seed, &[tag::REPLICATE, n, replicate]);
    let opts = ObservationOptions {
        j_max: None,
        noisy_alpha00: cfg.noisy_alpha00,
    };
    let obs = simulate_observation_with(truth, n, rep_seed, opts)?;
    let (loss_mean, loss_median, distances) = match cfg.prior_kind {
        PriorKind::SpikeSlab => {
            let prior =
                SpikeSlabPrior::new(alpha, cfg.prior.gamma, cfg.prior.c_a, cfg.prior.c_pi, j_data)?;
            let post = posterior_tree(&obs, &prior);
            (
                l2_distance_sq(&post.mean_tree(), truth),
                l2_distance_sq(&post.median_tree(), truth),
                posterior_distance_samples(&post, truth, cfg.posterior_samples, rep_seed),
            )
        }
        PriorKind::Sieve => {
            let m_max = cfg.prior.m_max.unwrap_or(j_data);
            let prior = SievePrior::new(cfg.prior.mu, alpha, m_max)?;
            let post = sieve_posterior(&obs, &prior);
            (
                l2_distance_sq(&post.mean_tree(), truth),
                l2_distance_sq(&post.median_tree(), truth),
                posterior_distance_samples(&post, truth, cfg.posterior_samples, rep_seed),
            )
        }
    };
    let frac_above = |r: f64| {
        distances.iter().filter(|d| **d > r).count() as f64 / distances.len() as f64
    };
    let mut sweep = [0.0; RADIUS_SWEEP.len()];
    for (slot, &r) in sweep.iter_mut().zip(sweep_radii) {
        *slot = frac_above(r);
    }
    Ok(Replicate {
        loss_mean,
        loss_median,
        complement: frac_above(radius_sq),
        sweep,
    })
}

/// One row of the prior tail-mass report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailReportRow {
    pub n: u64,
    /// Cutoff `floor(log2(n) / alpha)` using the prior's own `alpha`.
    pub j_cut: usize,
    pub eps_n_sq: f64,
    /// Exact expected prior energy above the cutoff.
    pub expected_tail: f64,
    /// `8 * expected_tail / eps_n_sq`; contraction arguments need this to
    /// vanish along the grid.
    pub ratio: f64,
    /// Truth energy above the cutoff, when a truth is supplied.
    pub truth_tail: Option<f64>,
    /// Whether the truth tail fits under `eps_n_sq / 8`.
    pub truth_tail_ok: Option<bool>,
}

/// Tabulates, per sample size, the exact prior tail expectation above the
/// resolution cutoff against the contraction target, plus the same check for
/// an optional truth tree. (The signature takes the truth explicitly because
/// the prior alone cannot know the truth's tail energy.)
pub fn prior_tail_report(
    prior: &SpikeSlabPrior,
    idx: &BesovIndex,
    n_grid: &[u64],
    truth: Option<&CoefficientTree>,
) -> Vec<TailReportRow> {
    n_grid
        .iter()
        .map(|&n| {
            let rq = theoretical_rate(idx, n);
            let j_cut = ((n as f64).log2() / prior.alpha()).floor() as usize;
            let expected_tail = prior.expected_tail_energy(j_cut as i64);
            let truth_tail = truth.map(|t| tail_energy(t, j_cut as i64));
            TailReportRow {
                n,
                j_cut,
                eps_n_sq: rq.eps_n_sq,
                expected_tail,
                ratio: 8.0 * expected_tail / rq.eps_n_sq,
                truth_tail,
                truth_tail_ok: truth_tail.map(|t| t <= rq.eps_n_sq / 8.0),
            }
        })
        .collect()
}
