//! Flat text configuration: `[section]` headers and `key = value` lines.
//!
//! Three sections — `[truth]`, `[prior]`, `[experiment]` — cover every
//! experiment parameter; command-line flags carry only paths, the seed, and
//! ad-hoc overrides. Unknown sections and keys are rejected by name, every
//! diagnostic cites where the offending value came from (a line number or a
//! `--set` argument), and [`render_config`] emits a text form that parses
//! back to an identical configuration.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;
use waveshrink::{
    BesovIndex, ExperimentConfig, FilterKind, PriorKind, PriorSettings, SievePrior, SignalName,
    SpikeSlabPrior, TruthKind, TruthSpec,
};

/// Configuration diagnostics. `place` is `line N` for file input or
/// `--set key=value` for command-line overrides.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{place}: unknown section `[{name}]`; expected [truth], [prior], or [experiment]")]
    UnknownSection { place: String, name: String },
    #[error("{place}: unknown key `{key}` in [{section}]; known keys: {known}")]
    UnknownKey { place: String, section: String, key: String, known: &'static str },
    #[error("{place}: `{key}` appears before any section header")]
    KeyOutsideSection { place: String, key: String },
    #[error("{place}: expected `key = value`, got `{text}`")]
    Malformed { place: String, text: String },
    #[error("{place}: key `{key}`: {message}")]
    BadValue { place: String, key: String, message: String },
    #[error("{place}: {message}")]
    Range { place: String, message: String },
}

/// The `[truth]` section: the Besov ball and the tree generated inside it.
#[derive(Debug, Clone, PartialEq)]
pub struct TruthSection {
    pub kind: String,
    pub s: f64,
    pub p: f64,
    pub q: f64,
    pub radius: f64,
    pub margin: f64,
    pub j_max: usize,
    pub decay: f64,
    pub signal: SignalName,
    pub wavelet: FilterKind,
}

/// The `[prior]` section.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorSection {
    pub kind: String,
    pub alpha: Option<f64>,
    pub gamma: f64,
    pub c_a: f64,
    pub c_pi: f64,
    pub mu: f64,
    pub m_max: Option<usize>,
}

/// The `[experiment]` section.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSection {
    pub n: u64,
    pub n_grid: Vec<u64>,
    pub replicates: usize,
    pub radius_multiplier: f64,
    pub posterior_samples: usize,
    pub n_mc: usize,
    pub seed: u64,
    pub noisy_alpha00: bool,
    pub slope_tolerance: f64,
}

/// Fully typed configuration with defaults for every field.
#[derive(Debug, Clone, PartialEq)]
pub struct LabConfig {
    pub truth: TruthSection,
    pub prior: PriorSection,
    pub experiment: ExperimentSection,
}

impl Default for LabConfig {
    fn default() -> Self {
        LabConfig {
            truth: TruthSection {
                kind: "level-uniform".into(),
                s: 1.0,
                p: 2.0,
                q: 2.0,
                radius: 8.0,
                margin: 0.5,
                j_max: 12,
                decay: 0.0,
                signal: SignalName::Blocks,
                wavelet: FilterKind::Haar,
            },
            prior: PriorSection {
                kind: "spike-slab".into(),
                alpha: None,
                gamma: 0.5,
                c_a: 1.0,
                c_pi: 1.0,
                mu: 1.0,
                m_max: None,
            },
            experiment: ExperimentSection {
                n: 1024,
                n_grid: (8..=18).map(|e| 1 << e).collect(),
                replicates: 20,
                radius_multiplier: 1.0,
                posterior_samples: 64,
                n_mc: 400_000,
                seed: 0,
                noisy_alpha00: false,
                slope_tolerance: 0.12,
            },
        }
    }
}

const TRUTH_KEYS: &str =
    "kind, s, p, q, B, margin, J_max, decay, signal-name, wavelet";
const PRIOR_KEYS: &str = "kind, alpha, gamma, c_a, c_pi, mu, m_max";
const EXPERIMENT_KEYS: &str =
    "n, n_grid, replicates, M, posterior_samples, n_mc, seed, noisy_alpha00, slope_tolerance";

fn bad(place: &str, key: &str, message: String) -> ConfigError {
    ConfigError::BadValue { place: place.into(), key: key.into(), message }
}

fn parse_f64(place: &str, key: &str, value: &str) -> Result<f64, ConfigError> {
    match value {
        "inf" | "infinity" => Ok(f64::INFINITY),
        _ => value
            .parse()
            .map_err(|_| bad(place, key, format!("cannot parse `{value}` as a number"))),
    }
}

fn parse_u64(place: &str, key: &str, value: &str) -> Result<u64, ConfigError> {
    value
        .parse()
        .map_err(|_| bad(place, key, format!("cannot parse `{value}` as a nonnegative integer")))
}

fn parse_usize(place: &str, key: &str, value: &str) -> Result<usize, ConfigError> {
    value
        .parse()
        .map_err(|_| bad(place, key, format!("cannot parse `{value}` as a nonnegative integer")))
}

fn parse_bool(place: &str, key: &str, value: &str) -> Result<bool, ConfigError> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(bad(place, key, format!("expected `true` or `false`, got `{value}`"))),
    }
}

fn parse_grid(place: &str, key: &str, value: &str) -> Result<Vec<u64>, ConfigError> {
    value
        .split(',')
        .map(|part| parse_u64(place, key, part.trim()))
        .collect()
}

/// Assigns one `section.key = value` triple, type-checking the value.
fn assign(
    cfg: &mut LabConfig,
    section: &str,
    key: &str,
    value: &str,
    place: &str,
) -> Result<(), ConfigError> {
    let unknown = |known: &'static str| ConfigError::UnknownKey {
        place: place.into(),
        section: section.into(),
        key: key.into(),
        known,
    };
    match section {
        "truth" => match key {
            "kind" => match value {
                "level-uniform" | "level-sparse" | "dwt-of-signal" => {
                    cfg.truth.kind = value.into();
                }
                _ => {
                    return Err(bad(
                        place,
                        key,
                        format!(
                            "unknown truth kind `{value}`; expected level-uniform, level-sparse, or dwt-of-signal"
                        ),
                    ))
                }
            },
            "s" => cfg.truth.s = parse_f64(place, key, value)?,
            "p" => cfg.truth.p = parse_f64(place, key, value)?,
            "q" => cfg.truth.q = parse_f64(place, key, value)?,
            "B" => cfg.truth.radius = parse_f64(place, key, value)?,
            "margin" => cfg.truth.margin = parse_f64(place, key, value)?,
            "J_max" => cfg.truth.j_max = parse_usize(place, key, value)?,
            "decay" => cfg.truth.decay = parse_f64(place, key, value)?,
            "signal-name" => {
                cfg.truth.signal =
                    value.parse().map_err(|e| bad(place, key, format!("{e}")))?;
            }
            "wavelet" => {
                cfg.truth.wavelet =
                    value.parse().map_err(|e| bad(place, key, format!("{e}")))?;
            }
            _ => return Err(unknown(TRUTH_KEYS)),
        },
        "prior" => match key {
            "kind" => match value {
                "spike-slab" | "sieve" => cfg.prior.kind = value.into(),
                _ => {
                    return Err(bad(
                        place,
                        key,
                        format!("unknown prior kind `{value}`; expected spike-slab or sieve"),
                    ))
                }
            },
            "alpha" => {
                cfg.prior.alpha = match value {
                    "auto" => None,
                    _ => Some(parse_f64(place, key, value)?),
                }
            }
            "gamma" => cfg.prior.gamma = parse_f64(place, key, value)?,
            "c_a" => cfg.prior.c_a = parse_f64(place, key, value)?,
            "c_pi" => cfg.prior.c_pi = parse_f64(place, key, value)?,
            "mu" => cfg.prior.mu = parse_f64(place, key, value)?,
            "m_max" => {
                cfg.prior.m_max = match value {
                    "auto" => None,
                    _ => Some(parse_usize(place, key, value)?),
                }
            }
            _ => return Err(unknown(PRIOR_KEYS)),
        },
        "experiment" => match key {
            "n" => cfg.experiment.n = parse_u64(place, key, value)?,
            "n_grid" => cfg.experiment.n_grid = parse_grid(place, key, value)?,
            "replicates" => cfg.experiment.replicates = parse_usize(place, key, value)?,
            "M" => cfg.experiment.radius_multiplier = parse_f64(place, key, value)?,
            "posterior_samples" => {
                cfg.experiment.posterior_samples = parse_usize(place, key, value)?
            }
            "n_mc" => cfg.experiment.n_mc = parse_usize(place, key, value)?,
            "seed" => cfg.experiment.seed = parse_u64(place, key, value)?,
            "noisy_alpha00" => cfg.experiment.noisy_alpha00 = parse_bool(place, key, value)?,
            "slope_tolerance" => cfg.experiment.slope_tolerance = parse_f64(place, key, value)?,
            _ => return Err(unknown(EXPERIMENT_KEYS)),
        },
        _ => unreachable!("section names are checked at the header"),
    }
    Ok(())
}

/// Parses the flat text format into `cfg`, recording where each key was set.
fn parse_into(
    cfg: &mut LabConfig,
    text: &str,
    places: &mut BTreeMap<String, String>,
) -> Result<(), ConfigError> {
    let mut section: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let place = format!("line {}", i + 1);
        let stripped = raw.split('#').next().unwrap_or("").trim();
        if stripped.is_empty() {
            continue;
        }
        if let Some(rest) = stripped.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or_else(|| ConfigError::Malformed {
                place: place.clone(),
                text: stripped.into(),
            })?;
            if !matches!(name, "truth" | "prior" | "experiment") {
                return Err(ConfigError::UnknownSection { place, name: name.into() });
            }
            section = Some(name.into());
            continue;
        }
        let (key, value) = stripped.split_once('=').ok_or_else(|| ConfigError::Malformed {
            place: place.clone(),
            text: stripped.into(),
        })?;
        let (key, value) = (key.trim(), value.trim());
        let section = section.as_deref().ok_or_else(|| ConfigError::KeyOutsideSection {
            place: place.clone(),
            key: key.into(),
        })?;
        assign(cfg, section, key, value, &place)?;
        places.insert(format!("{section}.{key}"), place);
    }
    Ok(())
}

/// Applies one `--set section.key=value` override.
fn apply_override(
    cfg: &mut LabConfig,
    arg: &str,
    places: &mut BTreeMap<String, String>,
) -> Result<(), ConfigError> {
    let place = format!("--set {arg}");
    let (path, value) = arg.split_once('=').ok_or_else(|| ConfigError::Malformed {
        place: place.clone(),
        text: arg.into(),
    })?;
    let (section, key) = path.trim().split_once('.').ok_or_else(|| ConfigError::Malformed {
        place: place.clone(),
        text: arg.into(),
    })?;
    if !matches!(section, "truth" | "prior" | "experiment") {
        return Err(ConfigError::UnknownSection { place, name: section.into() });
    }
    assign(cfg, section, key.trim(), value.trim(), &place)?;
    places.insert(format!("{section}.{key}"), place);
    Ok(())
}

/// Where a key was set, for diagnostics; defaults say so explicitly.
fn place_of(places: &BTreeMap<String, String>, key: &str) -> String {
    places.get(key).cloned().unwrap_or_else(|| format!("default for `{key}`"))
}

/// Picks which config key a library error message is about: the messages all
/// open with the offending parameter's name.
fn blame(
    message: &str,
    candidates: &[(&'static str, &'static str)],
    fallback: &'static str,
) -> &'static str {
    candidates
        .iter()
        .find(|(name, _)| message.contains(&format!("{name} must")))
        .map(|(_, key)| *key)
        .unwrap_or(fallback)
}

/// Cross-field validation, reusing the library's own range checks so the
/// diagnostics quote the real constraints.
fn validate(cfg: &LabConfig, places: &BTreeMap<String, String>) -> Result<(), ConfigError> {
    let range = |key: &str, message: String| ConfigError::Range {
        place: place_of(places, key),
        message,
    };
    cfg.besov_index().map_err(|e| {
        let message = e.to_string();
        let key = blame(
            &message,
            &[("p", "truth.p"), ("q", "truth.q"), ("radius", "truth.B")],
            "truth.s",
        );
        range(key, message)
    })?;
    if !(cfg.truth.margin > 0.0 && cfg.truth.margin < 1.0) {
        return Err(range(
            "truth.margin",
            format!("margin must lie in (0, 1), got {}", cfg.truth.margin),
        ));
    }
    if !(cfg.truth.decay >= 0.0 && cfg.truth.decay.is_finite()) {
        return Err(range(
            "truth.decay",
            format!("decay must be a finite value >= 0, got {}", cfg.truth.decay),
        ));
    }
    let blame_prior = |e: waveshrink::Error| {
        let message = e.to_string();
        let key = blame(
            &message,
            &[
                ("c_pi", "prior.c_pi"),
                ("c_a", "prior.c_a"),
                ("gamma", "prior.gamma"),
                ("mu", "prior.mu"),
            ],
            "prior.alpha",
        );
        range(key, message)
    };
    match cfg.prior.kind.as_str() {
        "spike-slab" => {
            cfg.spike_slab_prior(cfg.truth.j_max).map_err(blame_prior)?;
        }
        "sieve" => {
            cfg.sieve_prior(cfg.truth.j_max).map_err(blame_prior)?;
        }
        _ => unreachable!("prior kinds are checked at assignment"),
    }
    if cfg.experiment.n < 2 {
        return Err(range(
            "experiment.n",
            format!("n must be at least 2, got {}", cfg.experiment.n),
        ));
    }
    let grid = &cfg.experiment.n_grid;
    if grid.is_empty() || grid.iter().any(|n| *n < 2) || !grid.windows(2).all(|w| w[0] < w[1]) {
        return Err(range(
            "experiment.n_grid",
            "n_grid must be a strictly increasing list of integers >= 2".into(),
        ));
    }
    for (key, v) in [
        ("experiment.replicates", cfg.experiment.replicates),
        ("experiment.posterior_samples", cfg.experiment.posterior_samples),
        ("experiment.n_mc", cfg.experiment.n_mc),
    ] {
        if v == 0 {
            return Err(range(key, format!("{key} must be at least 1")));
        }
    }
    if !(cfg.experiment.radius_multiplier.is_finite() && cfg.experiment.radius_multiplier > 0.0) {
        return Err(range(
            "experiment.M",
            format!("M must be positive, got {}", cfg.experiment.radius_multiplier),
        ));
    }
    if !(cfg.experiment.slope_tolerance.is_finite() && cfg.experiment.slope_tolerance > 0.0) {
        return Err(range(
            "experiment.slope_tolerance",
            format!("slope_tolerance must be positive, got {}", cfg.experiment.slope_tolerance),
        ));
    }
    Ok(())
}

/// Parses a config file (possibly empty: all defaults) plus `--set`
/// overrides, then validates the combined result.
pub fn parse_config(text: &str, overrides: &[String]) -> Result<LabConfig, ConfigError> {
    let mut cfg = LabConfig::default();
    let mut places = BTreeMap::new();
    parse_into(&mut cfg, text, &mut places)?;
    for arg in overrides {
        apply_override(&mut cfg, arg, &mut places)?;
    }
    validate(&cfg, &places)?;
    Ok(cfg)
}

fn show_f64(v: f64) -> String {
    if v.is_infinite() {
        "inf".into()
    } else {
        format!("{v}")
    }
}

fn show_grid(grid: &[u64]) -> String {
    grid.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(",")
}

/// Renders the resolved configuration in the exact input format; parsing the
/// result reproduces the configuration field for field.
pub fn render_config(cfg: &LabConfig) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "[truth]");
    let _ = writeln!(out, "kind = {}", cfg.truth.kind);
    let _ = writeln!(out, "s = {}", show_f64(cfg.truth.s));
    let _ = writeln!(out, "p = {}", show_f64(cfg.truth.p));
    let _ = writeln!(out, "q = {}", show_f64(cfg.truth.q));
    let _ = writeln!(out, "B = {}", show_f64(cfg.truth.radius));
    let _ = writeln!(out, "margin = {}", show_f64(cfg.truth.margin));
    let _ = writeln!(out, "J_max = {}", cfg.truth.j_max);
    let _ = writeln!(out, "decay = {}", show_f64(cfg.truth.decay));
    let _ = writeln!(out, "signal-name = {}", cfg.truth.signal);
    let _ = writeln!(out, "wavelet = {}", cfg.truth.wavelet);
    let _ = writeln!(out);
    let _ = writeln!(out, "[prior]");
    let _ = writeln!(out, "kind = {}", cfg.prior.kind);
    let alpha = cfg.prior.alpha.map_or("auto".into(), show_f64);
    let _ = writeln!(out, "alpha = {alpha}");
    let _ = writeln!(out, "gamma = {}", show_f64(cfg.prior.gamma));
    let _ = writeln!(out, "c_a = {}", show_f64(cfg.prior.c_a));
    let _ = writeln!(out, "c_pi = {}", show_f64(cfg.prior.c_pi));
    let _ = writeln!(out, "mu = {}", show_f64(cfg.prior.mu));
    let m_max = cfg.prior.m_max.map_or("auto".into(), |m| m.to_string());
    let _ = writeln!(out, "m_max = {m_max}");
    let _ = writeln!(out);
    let _ = writeln!(out, "[experiment]");
    let _ = writeln!(out, "n = {}", cfg.experiment.n);
    let _ = writeln!(out, "n_grid = {}", show_grid(&cfg.experiment.n_grid));
    let _ = writeln!(out, "replicates = {}", cfg.experiment.replicates);
    let _ = writeln!(out, "M = {}", show_f64(cfg.experiment.radius_multiplier));
    let _ = writeln!(out, "posterior_samples = {}", cfg.experiment.posterior_samples);
    let _ = writeln!(out, "n_mc = {}", cfg.experiment.n_mc);
    let _ = writeln!(out, "seed = {}", cfg.experiment.seed);
    let _ = writeln!(out, "noisy_alpha00 = {}", cfg.experiment.noisy_alpha00);
    let _ = writeln!(out, "slope_tolerance = {}", show_f64(cfg.experiment.slope_tolerance));
    out
}

impl LabConfig {
    /// The configured Besov ball.
    pub fn besov_index(&self) -> waveshrink::Result<BesovIndex> {
        BesovIndex::new(self.truth.s, self.truth.p, self.truth.q, self.truth.radius)
    }

    /// The configured truth recipe.
    pub fn truth_spec(&self) -> waveshrink::Result<TruthSpec> {
        let besov = self.besov_index()?;
        let kind = match self.truth.kind.as_str() {
            "level-uniform" => TruthKind::LevelUniform,
            "level-sparse" => TruthKind::LevelSparse,
            _ => TruthKind::DwtOfSignal { signal: self.truth.signal, wavelet: self.truth.wavelet },
        };
        Ok(TruthSpec {
            kind,
            besov,
            margin: self.truth.margin,
            j_max: self.truth.j_max,
            decay: self.truth.decay,
        })
    }

    /// The slab-decay exponent in effect (resolving `auto`).
    pub fn effective_alpha(&self) -> f64 {
        self.prior
            .alpha
            .unwrap_or_else(|| waveshrink::choose_alpha(self.truth.s, self.truth.p))
    }

    /// Spike-and-slab prior with hyperparameters from `[prior]`.
    pub fn spike_slab_prior(&self, j_max: usize) -> waveshrink::Result<SpikeSlabPrior> {
        SpikeSlabPrior::new(
            self.effective_alpha(),
            self.prior.gamma,
            self.prior.c_a,
            self.prior.c_pi,
            j_max,
        )
    }

    /// Sieve prior with hyperparameters from `[prior]`; `auto` caps the model
    /// list at `fallback_m_max`.
    pub fn sieve_prior(&self, fallback_m_max: usize) -> waveshrink::Result<SievePrior> {
        SievePrior::new(
            self.prior.mu,
            self.effective_alpha(),
            self.prior.m_max.unwrap_or(fallback_m_max),
        )
    }

    /// The full contraction-experiment configuration for the core library.
    pub fn experiment_config(&self) -> waveshrink::Result<ExperimentConfig> {
        Ok(ExperimentConfig {
            besov: self.besov_index()?,
            truth: self.truth_spec()?,
            n_grid: self.experiment.n_grid.clone(),
            replicates: self.experiment.replicates,
            radius_multiplier: self.experiment.radius_multiplier,
            posterior_samples: self.experiment.posterior_samples,
            prior_kind: match self.prior.kind.as_str() {
                "sieve" => PriorKind::Sieve,
                _ => PriorKind::SpikeSlab,
            },
            prior: PriorSettings {
                alpha: self.prior.alpha,
                gamma: self.prior.gamma,
                c_a: self.prior.c_a,
                c_pi: self.prior.c_pi,
                mu: self.prior.mu,
                m_max: self.prior.m_max,
            },
            seed: self.experiment.seed,
            noisy_alpha00: self.experiment.noisy_alpha00,
        })
    }
}
