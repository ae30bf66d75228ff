//! Subcommand implementations. Each run reads its parameters from the
//! resolved [`LabConfig`], performs the computation through the library, and
//! persists results with the emit layer; everything a run produces is a
//! deterministic function of (config, seed).

use std::path::Path;

use anyhow::Context;
use serde_json::json;
use waveshrink::{
    besov_norm, fit_rate_slope, forward_dwt, gamma_tail_bound_ratio, inverse_dwt,
    lower_incomplete_gamma_regularized, make_truth, posterior_tree, prior_mass_probe,
    prior_tail_report, run_contraction_experiment, sieve_posterior, sieve_weights,
    simulate_observation_with, standard_signal, theoretical_rate, CoefficientTree, FilterKind,
    ObservationOptions, Prior, SampledSignal, SequenceObservation, SpikeSlabPrior, TruthKind,
    TruthSpec, WaveletFilter,
};

use crate::config::LabConfig;
use crate::emit::{
    config_json, prior_mass_csv, rate_csv, tail_report_csv, to_json_text, write_outputs,
    OutputFile,
};

/// Which posterior summary the denoiser writes back.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Estimator {
    Mean,
    Median,
}

fn print_written(paths: &[std::path::PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

/// `simulate`: build the configured truth, observe it at sample size `n`,
/// and write both trees in the text format.
pub fn run_simulate(cfg: &LabConfig, out_dir: &Path) -> anyhow::Result<()> {
    let spec = cfg.truth_spec()?;
    let seed = cfg.experiment.seed;
    let n = cfg.experiment.n;
    let truth = make_truth(&spec, seed)?;
    let obs = simulate_observation_with(
        &truth,
        n,
        seed,
        ObservationOptions { j_max: None, noisy_alpha00: cfg.experiment.noisy_alpha00 },
    )?;
    let besov = cfg.besov_index()?;
    let summary = json!({
        "config": config_json(cfg),
        "n": n,
        "seed": seed,
        "sigma_n": obs.sigma_n(),
        "j_data": obs.data().num_levels().saturating_sub(1),
        "truth_besov_norm": besov_norm(&truth, &besov),
    });
    let paths = write_outputs(
        out_dir,
        cfg,
        vec![
            OutputFile { name: "truth.txt", contents: truth.render_text() },
            OutputFile { name: "observation.txt", contents: obs.data().render_text() },
            OutputFile { name: "summary.json", contents: to_json_text(&summary) },
        ],
    )?;
    print_written(&paths);
    Ok(())
}

/// `denoise`: read a line-per-value signal, shrink its wavelet coefficients
/// through the configured posterior, and write the reconstruction in the
/// same format.
///
/// A sampled signal of length `n` with unit-variance noise corresponds to
/// the sequence model through `theta = c / sqrt(n)`: the rescaled
/// coefficients carry noise of exactly `sigma_n = n^{-1/2}` and sit on the
/// `O(1)` scale the priors are calibrated for. The posterior summary is
/// mapped back with the inverse scaling before reconstruction.
pub fn run_denoise(
    cfg: &LabConfig,
    input: &Path,
    estimator: Estimator,
    out_dir: &Path,
) -> anyhow::Result<()> {
    let text = std::fs::read_to_string(input)
        .with_context(|| format!("reading signal {}", input.display()))?;
    let signal = SampledSignal::parse_text(&text)
        .with_context(|| format!("parsing signal {}", input.display()))?;
    let filter = WaveletFilter::new(cfg.truth.wavelet);
    let tree = forward_dwt(&signal, &filter)?;
    let n = signal.len() as u64;
    let root_n = (n as f64).sqrt();
    let coefficient_energy_in = tree.l2_norm_sq();
    let obs = SequenceObservation::from_tree(tree.scaled(1.0 / root_n), n)?;
    let shrunk = match cfg.prior.kind.as_str() {
        "sieve" => {
            let m_max_default = obs.data().num_levels().saturating_sub(1);
            let post = sieve_posterior(&obs, &cfg.sieve_prior(m_max_default)?);
            match estimator {
                Estimator::Mean => post.mean_tree(),
                Estimator::Median => post.median_tree(),
            }
        }
        _ => {
            let prior = cfg.spike_slab_prior(obs.data().num_levels().saturating_sub(1))?;
            let post = posterior_tree(&obs, &prior);
            match estimator {
                Estimator::Mean => post.mean_tree(),
                Estimator::Median => post.median_tree(),
            }
        }
    }
    .scaled(root_n);
    let denoised = inverse_dwt(&shrunk, &filter)?;
    let summary = json!({
        "config": config_json(cfg),
        "estimator": match estimator { Estimator::Mean => "mean", Estimator::Median => "median" },
        "input": input.display().to_string(),
        "n": n,
        "sigma_n": obs.sigma_n(),
        "coefficient_energy_in": coefficient_energy_in,
        "coefficient_energy_out": shrunk.l2_norm_sq(),
    });
    let paths = write_outputs(
        out_dir,
        cfg,
        vec![
            OutputFile { name: "denoised.txt", contents: denoised.render_text() },
            OutputFile { name: "summary.json", contents: to_json_text(&summary) },
        ],
    )?;
    print_written(&paths);
    Ok(())
}

/// `rate`: the full contraction experiment, CSV per sample size plus a JSON
/// summary carrying the slope verdict.
pub fn run_rate(cfg: &LabConfig, out_dir: &Path) -> anyhow::Result<()> {
    let experiment = cfg.experiment_config()?;
    let result = run_contraction_experiment(&experiment)?;
    let theoretical = -result.theoretical_exponent;
    let pass = (result.slope - theoretical).abs() <= cfg.experiment.slope_tolerance;
    let summary = json!({
        "config": config_json(cfg),
        "slope": result.slope,
        "intercept": result.intercept,
        "residual_rms": result.residual_rms,
        "exponent_theoretical": result.theoretical_exponent,
        "slope_theoretical": theoretical,
        "slope_tolerance": cfg.experiment.slope_tolerance,
        "pass": pass,
        "points": result.points.len(),
        "truncation_biased_points": result.points.iter().filter(|p| p.truncation_biased).count(),
    });
    let paths = write_outputs(
        out_dir,
        cfg,
        vec![
            OutputFile { name: "rate.csv", contents: rate_csv(&result) },
            OutputFile { name: "summary.json", contents: to_json_text(&summary) },
        ],
    )?;
    println!(
        "slope {:.4} vs theoretical {:.4} (tolerance {}): {}",
        result.slope,
        theoretical,
        cfg.experiment.slope_tolerance,
        if pass { "pass" } else { "FAIL" }
    );
    print_written(&paths);
    if pass {
        Ok(())
    } else {
        anyhow::bail!("fitted slope misses the theoretical rate")
    }
}

/// `prior-mass`: probe the small-ball mass at every grid point and emit the
/// table together with the deterministic tail report.
pub fn run_prior_mass(cfg: &LabConfig, out_dir: &Path) -> anyhow::Result<()> {
    let spec = cfg.truth_spec()?;
    let truth = make_truth(&spec, cfg.experiment.seed)?;
    let besov = cfg.besov_index()?;
    let is_sieve = cfg.prior.kind == "sieve";
    let m_max_default = cfg.truth.j_max;
    let prior = if is_sieve {
        Prior::Sieve(cfg.sieve_prior(m_max_default)?)
    } else {
        Prior::SpikeSlab(cfg.spike_slab_prior(cfg.truth.j_max)?)
    };
    let mut rows = Vec::new();
    for &n in &cfg.experiment.n_grid {
        let rq = theoretical_rate(&besov, n);
        let est = prior_mass_probe(
            &prior,
            &truth,
            rq.eps_n_sq,
            rq.j_cut,
            cfg.experiment.n_mc,
            cfg.experiment.seed,
        )
        .with_context(|| format!("probing prior mass at n = {n}"))?;
        rows.push((n, rq, est));
    }
    let ratios: Vec<f64> =
        rows.iter().map(|(n, rq, est)| -est.log_mass / (*n as f64 * rq.eps_n_sq)).collect();
    let max = ratios.iter().copied().fold(f64::MIN, f64::max);
    let min = ratios.iter().copied().fold(f64::MAX, f64::min);
    let min_ess = rows.iter().map(|(_, _, est)| est.ess).fold(f64::MAX, f64::min);
    let mut files = vec![OutputFile { name: "prior_mass.csv", contents: prior_mass_csv(&rows) }];
    if !is_sieve {
        let spike = cfg.spike_slab_prior(cfg.truth.j_max)?;
        let report = prior_tail_report(&spike, &besov, &cfg.experiment.n_grid, Some(&truth));
        files.push(OutputFile { name: "tail_report.csv", contents: tail_report_csv(&report) });
    }
    let summary = json!({
        "config": config_json(cfg),
        "ratio_max": max,
        "ratio_min": min,
        "ratio_spread": max / min,
        "min_ess": min_ess,
        "points": rows.len(),
    });
    files.push(OutputFile { name: "summary.json", contents: to_json_text(&summary) });
    let paths = write_outputs(out_dir, cfg, files)?;
    println!(
        "-log mass / (n eps^2) in [{min:.4}, {max:.4}] over {} points, min ESS {min_ess:.0}",
        rows.len()
    );
    print_written(&paths);
    Ok(())
}

/// One fast self-check: a name and a verdict.
fn check(name: &'static str, result: Result<(), String>) -> (&'static str, Result<(), String>) {
    (name, result)
}

fn approx(got: f64, want: f64, tol: f64, what: &str) -> Result<(), String> {
    if (got - want).abs() <= tol {
        Ok(())
    } else {
        Err(format!("{what}: got {got}, want {want} within {tol}"))
    }
}

/// `check`: a table of desk-speed internal consistency checks; the process
/// exits nonzero when any row fails.
pub fn run_check() -> anyhow::Result<()> {
    let mut results = Vec::new();

    for kind in [FilterKind::Haar, FilterKind::Daubechies4] {
        let filter = WaveletFilter::new(kind);
        let mut worst = 0.0f64;
        let mut energy_gap = 0.0f64;
        let outcome = (|| -> Result<(), String> {
            for name in ["blocks", "bumps", "doppler", "heavisine"] {
                let signal =
                    standard_signal(name.parse().map_err(|e| format!("{e}"))?, 512)
                        .map_err(|e| format!("{e}"))?;
                let tree = forward_dwt(&signal, &filter).map_err(|e| format!("{e}"))?;
                let back = inverse_dwt(&tree, &filter).map_err(|e| format!("{e}"))?;
                for (x, y) in signal.values().iter().zip(back.values()) {
                    worst = worst.max((x - y).abs());
                }
                let energy: f64 = signal.values().iter().map(|v| v * v).sum();
                energy_gap = energy_gap.max((energy - tree.l2_norm_sq()).abs() / (1.0 + energy));
            }
            if worst > 1e-10 || energy_gap > 1e-10 {
                return Err(format!("round trip {worst:.2e}, Parseval gap {energy_gap:.2e}"));
            }
            Ok(())
        })();
        let name: &'static str = match kind {
            FilterKind::Haar => "dwt-round-trip-haar",
            FilterKind::Daubechies4 => "dwt-round-trip-d4",
        };
        results.push(check(name, outcome));
    }

    results.push(check("posterior-shrinkage", {
        let mut outcome = Ok(());
        'outer: for &x in &[-6.0, -1.0, 0.0, 0.5, 3.0, 10.0] {
            for &a_sq in &[0.01, 1.0, 25.0] {
                let cp = waveshrink::coefficient_posterior(x, 1.0, 0.4, a_sq);
                let mean = waveshrink::posterior_mean(&cp);
                if !(0.0..=1.0).contains(&cp.omega())
                    || mean.abs() > x.abs()
                    || mean * x < -1e-12
                {
                    outcome = Err(format!("x={x}, a^2={a_sq}: omega {}, mean {mean}", cp.omega()));
                    break 'outer;
                }
            }
        }
        outcome
    }));

    results.push(check("gamma-cdf-monotone", {
        let mut outcome = Ok(());
        let mut prev = 0.0;
        for i in 0..=100 {
            let b = i as f64 * 0.5;
            let f = lower_incomplete_gamma_regularized(b, 3.5);
            if !(0.0..=1.0).contains(&f) || f + 1e-14 < prev {
                outcome = Err(format!("F({b}; 3.5) = {f} after {prev}"));
                break;
            }
            prev = f;
        }
        outcome
    }));

    results.push(check("gamma-bound-ratio", {
        let mut min_ratio = f64::INFINITY;
        for &a in &[0.5, 2.0, 10.0, 100.0] {
            for i in 0..50 {
                let b = 0.1 + i as f64;
                min_ratio = min_ratio.min(gamma_tail_bound_ratio(b, a));
            }
        }
        if min_ratio > 0.2 {
            Ok(())
        } else {
            Err(format!("minimum ratio {min_ratio}"))
        }
    }));

    results.push(check("truth-norm-target", (|| {
        let cfg = LabConfig::default();
        let spec = cfg.truth_spec().map_err(|e| format!("{e}"))?;
        let truth = make_truth(&spec, 0).map_err(|e| format!("{e}"))?;
        let besov = cfg.besov_index().map_err(|e| format!("{e}"))?;
        approx(
            besov_norm(&truth, &besov),
            (1.0 - cfg.truth.margin) * cfg.truth.radius,
            1e-8,
            "truth norm",
        )
    })()));

    results.push(check("slope-fit-recovery", {
        let ns: Vec<u64> = (4..10).map(|e| 1 << e).collect();
        let losses: Vec<f64> = ns.iter().map(|&n| 3.0 * (n as f64).powf(-0.75)).collect();
        fit_rate_slope(&ns, &losses)
            .map_err(|e| format!("{e}"))
            .and_then(|fit| approx(fit.slope, -0.75, 1e-9, "recovered slope"))
    }));

    results.push(check("probe-whole-space", (|| {
        let prior = Prior::SpikeSlab(
            SpikeSlabPrior::new(3.0, 0.5, 1.0, 1.0, 4).map_err(|e| format!("{e}"))?,
        );
        let truth = CoefficientTree::zero(4);
        prior_mass_probe(&prior, &truth, 1e9, 3, 500, 0)
            .map_err(|e| format!("{e}"))
            .and_then(|est| approx(est.log_mass, 0.0, 0.0, "log mass of everything"))
    })()));

    results.push(check("sieve-weights-normalized", (|| {
        let prior = waveshrink::SievePrior::new(1.0, 3.0, 2).map_err(|e| format!("{e}"))?;
        let w = sieve_weights(&prior);
        approx(w.iter().sum::<f64>(), 1.0, 1e-14, "weight total")
            .and_then(|()| approx(w[0], 4.0 / 7.0, 1e-14, "lambda_0"))
    })()));

    results.push(check("observation-determinism", (|| {
        let besov =
            waveshrink::BesovIndex::new(1.0, 2.0, 2.0, 8.0).map_err(|e| format!("{e}"))?;
        let spec = TruthSpec {
            kind: TruthKind::LevelUniform,
            besov,
            margin: 0.5,
            j_max: 6,
            decay: 0.0,
        };
        let truth = make_truth(&spec, 1).map_err(|e| format!("{e}"))?;
        let a = simulate_observation_with(&truth, 128, 7, ObservationOptions::default())
            .map_err(|e| format!("{e}"))?;
        let b = simulate_observation_with(&truth, 128, 7, ObservationOptions::default())
            .map_err(|e| format!("{e}"))?;
        if a.data() == b.data() {
            Ok(())
        } else {
            Err("same seed produced different observations".into())
        }
    })()));

    let mut failed = 0;
    for (name, outcome) in &results {
        match outcome {
            Ok(()) => println!("check {name:<28} ok"),
            Err(why) => {
                failed += 1;
                println!("check {name:<28} FAIL: {why}");
            }
        }
    }
    if failed > 0 {
        anyhow::bail!("{failed} of {} checks failed", results.len());
    }
    println!("all {} checks passed", results.len());
    Ok(())
}
