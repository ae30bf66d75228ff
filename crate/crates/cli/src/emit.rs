//! Result persistence: RFC-4180 CSV tables, a JSON summary with sorted keys,
//! and the resolved configuration echoed in its own input format.
//!
//! Every writer is a pure `value -> String` function so determinism is
//! testable without touching the filesystem; [`write_outputs`] is the only
//! I/O path and overwrites idempotently.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde_json::{json, Value};
use waveshrink::{MassEstimate, RateExperimentResult, RateQuantities, TailReportRow};

use crate::config::{render_config, LabConfig};

/// Formats one CSV field per RFC 4180: quote only when the text contains a
/// comma, a quote, or a line break; double any embedded quotes.
fn csv_field(text: &str) -> String {
    if text.contains(',') || text.contains('"') || text.contains('\n') {
        format!("\"{}\"", text.replace('"', "\"\""))
    } else {
        text.into()
    }
}

fn csv_row(fields: &[String]) -> String {
    fields.iter().map(|f| csv_field(f)).collect::<Vec<_>>().join(",")
}

/// One row per sample size of a rate experiment, sweep masses inlined.
pub fn rate_csv(result: &RateExperimentResult) -> String {
    let mut header = vec![
        "n".to_string(),
        "eps_n_sq".into(),
        "j_data".into(),
        "j_cut".into(),
        "loss_mean".into(),
        "loss_mean_se".into(),
        "loss_median".into(),
        "loss_median_se".into(),
        "complement_mass".into(),
        "complement_mass_se".into(),
    ];
    if let Some(first) = result.points.first() {
        for m in &first.sweep {
            header.push(format!("mass_M{}", m.multiplier));
        }
    }
    header.push("truncation_biased".into());
    let mut out = csv_row(&header);
    out.push('\n');
    for p in &result.points {
        let mut row = vec![
            p.n.to_string(),
            format!("{}", p.eps_n_sq),
            p.j_data.to_string(),
            p.j_cut.to_string(),
            format!("{}", p.loss_mean),
            format!("{}", p.loss_mean_se),
            format!("{}", p.loss_median),
            format!("{}", p.loss_median_se),
            format!("{}", p.complement_mass),
            format!("{}", p.complement_mass_se),
        ];
        for m in &p.sweep {
            row.push(format!("{}", m.mean));
        }
        row.push(p.truncation_biased.to_string());
        out.push_str(&csv_row(&row));
        out.push('\n');
    }
    out
}

/// One row per sample size of a prior-mass probe run.
pub fn prior_mass_csv(rows: &[(u64, RateQuantities, MassEstimate)]) -> String {
    let mut out = "n,eps_n_sq,j_cut,log_mass,std_err,ess,hits,draws,ratio\n".to_string();
    for (n, rq, est) in rows {
        let ratio = -est.log_mass / (*n as f64 * rq.eps_n_sq);
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            n, rq.eps_n_sq, rq.j_cut, est.log_mass, est.std_err, est.ess, est.hits, est.draws,
            ratio
        );
    }
    out
}

/// The deterministic prior tail-energy table.
pub fn tail_report_csv(rows: &[TailReportRow]) -> String {
    let mut out = "n,j_cut,eps_n_sq,expected_tail,ratio,truth_tail,truth_tail_ok\n".to_string();
    for r in rows {
        let truth_tail = r.truth_tail.map_or(String::new(), |t| format!("{t}"));
        let truth_ok = r.truth_tail_ok.map_or(String::new(), |t| t.to_string());
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.n, r.j_cut, r.eps_n_sq, r.expected_tail, r.ratio, truth_tail, truth_ok
        );
    }
    out
}

/// The resolved configuration as a JSON object (keys sorted by serde_json's
/// map representation), echoed into every summary.
pub fn config_json(cfg: &LabConfig) -> Value {
    // Infinite p/q cannot ride through JSON numbers; mirror the text form.
    let jf = |v: f64| -> Value {
        if v.is_infinite() {
            json!("inf")
        } else {
            json!(v)
        }
    };
    json!({
        "truth": {
            "kind": cfg.truth.kind,
            "s": jf(cfg.truth.s),
            "p": jf(cfg.truth.p),
            "q": jf(cfg.truth.q),
            "B": jf(cfg.truth.radius),
            "margin": jf(cfg.truth.margin),
            "J_max": cfg.truth.j_max,
            "decay": jf(cfg.truth.decay),
            "signal-name": cfg.truth.signal.to_string(),
            "wavelet": cfg.truth.wavelet.to_string(),
        },
        "prior": {
            "kind": cfg.prior.kind,
            "alpha": cfg.prior.alpha.map_or(json!("auto"), |v| json!(v)),
            "alpha_effective": cfg.effective_alpha(),
            "gamma": jf(cfg.prior.gamma),
            "c_a": jf(cfg.prior.c_a),
            "c_pi": jf(cfg.prior.c_pi),
            "mu": jf(cfg.prior.mu),
            "m_max": cfg.prior.m_max.map_or(json!("auto"), |v| json!(v)),
        },
        "experiment": {
            "n": cfg.experiment.n,
            "n_grid": cfg.experiment.n_grid,
            "replicates": cfg.experiment.replicates,
            "M": jf(cfg.experiment.radius_multiplier),
            "posterior_samples": cfg.experiment.posterior_samples,
            "n_mc": cfg.experiment.n_mc,
            "seed": cfg.experiment.seed,
            "noisy_alpha00": cfg.experiment.noisy_alpha00,
            "slope_tolerance": jf(cfg.experiment.slope_tolerance),
        },
    })
}

/// A named output file with fully rendered contents.
pub struct OutputFile {
    pub name: &'static str,
    pub contents: String,
}

/// Writes each file under `dir` (created if missing), overwriting previous
/// runs. Always appends the resolved `config.txt` alongside the results.
pub fn write_outputs(
    dir: &Path,
    cfg: &LabConfig,
    files: Vec<OutputFile>,
) -> anyhow::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut written = Vec::new();
    let config_echo = OutputFile { name: "config.txt", contents: render_config(cfg) };
    for file in files.into_iter().chain([config_echo]) {
        let path = dir.join(file.name);
        std::fs::write(&path, file.contents)
            .with_context(|| format!("writing {}", path.display()))?;
        written.push(path);
    }
    Ok(written)
}

/// Serializes a summary with 2-space indentation and a trailing newline;
/// serde_json maps iterate in sorted key order, so output is stable.
pub fn to_json_text(value: &Value) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("JSON summaries are finite");
    text.push('\n');
    text
}
