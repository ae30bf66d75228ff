//! Periodized orthonormal discrete wavelet transform.
//!
//! Signals of dyadic length `2^{J+1}` map to coefficient trees with detail
//! levels `0..=J` plus one scaling coefficient. Filters are the classic
//! orthonormal pairs (Haar and Daubechies-4) with the quadrature-mirror
//! highpass `g[k] = (-1)^k h[L-1-k]`; circular indexing makes every stage an
//! orthogonal map, so the transform preserves the `l2` norm exactly.

use std::fmt;
use std::str::FromStr;

use crate::tree::CoefficientTree;
use crate::{Error, Result};

/// Supported orthonormal filters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FilterKind {
    Haar,
    Daubechies4,
}

impl FilterKind {
    /// Canonical lowercase name, as accepted by [`FromStr`].
    pub fn as_str(&self) -> &'static str {
        match self {
            FilterKind::Haar => "haar",
            FilterKind::Daubechies4 => "d4",
        }
    }
}

impl fmt::Display for FilterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FilterKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "haar" => Ok(FilterKind::Haar),
            "d4" | "daubechies4" => Ok(FilterKind::Daubechies4),
            other => Err(Error::InvalidArgument(format!(
                "unknown wavelet `{other}`, expected `haar` or `d4`"
            ))),
        }
    }
}

/// An orthonormal analysis filter pair.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletFilter {
    kind: FilterKind,
    lowpass: Vec<f64>,
    highpass: Vec<f64>,
}

impl WaveletFilter {
    /// Builds the standard filter of the given kind.
    pub fn new(kind: FilterKind) -> Self {
        let lowpass: Vec<f64> = match kind {
            FilterKind::Haar => {
                let r = 0.5f64.sqrt();
                vec![r, r]
            }
            FilterKind::Daubechies4 => {
                let s3 = 3.0f64.sqrt();
                let norm = 4.0 * 2.0f64.sqrt();
                vec![
                    (1.0 + s3) / norm,
                    (3.0 + s3) / norm,
                    (3.0 - s3) / norm,
                    (1.0 - s3) / norm,
                ]
            }
        };
        let len = lowpass.len();
        let highpass = (0..len)
            .map(|k| {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                sign * lowpass[len - 1 - k]
            })
            .collect();
        WaveletFilter { kind, lowpass, highpass }
    }

    /// Which standard filter this is.
    pub fn kind(&self) -> FilterKind {
        self.kind
    }

    /// Analysis lowpass taps.
    pub fn lowpass(&self) -> &[f64] {
        &self.lowpass
    }

    /// Analysis highpass taps (quadrature mirror of the lowpass).
    pub fn highpass(&self) -> &[f64] {
        &self.highpass
    }
}

/// A real signal sampled on a dyadic grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSignal {
    values: Vec<f64>,
}

impl SampledSignal {
    /// Wraps samples, requiring a power-of-two length and finite values.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || !values.len().is_power_of_two() {
            return Err(Error::InvalidSignal(format!(
                "length must be a positive power of two, got {}",
                values.len()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidSignal(format!("non-finite sample {bad}")));
        }
        Ok(SampledSignal { values })
    }

    /// The samples.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Number of samples.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Always false: construction rejects empty signals.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Renders one sample per line; values round-trip exactly.
    pub fn render_text(&self) -> String {
        let mut out = String::with_capacity(self.values.len() * 8);
        for v in &self.values {
            out.push_str(&format!("{v}\n"));
        }
        out
    }

    /// Parses the one-value-per-line form.
    pub fn parse_text(text: &str) -> Result<Self> {
        let mut values = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            let v: f64 = trimmed.parse().map_err(|_| Error::Parse {
                line: i + 1,
                message: format!("cannot parse `{trimmed}` as a number"),
            })?;
            values.push(v);
        }
        SampledSignal::new(values)
    }
}

/// One analysis stage: length-`2m` input to `m` approximations and `m` details.
fn analyze_stage(input: &[f64], filter: &WaveletFilter, approx: &mut Vec<f64>, detail: &mut Vec<f64>) {
    let n = input.len();
    let half = n / 2;
    approx.clear();
    detail.clear();
    for i in 0..half {
        let mut a = 0.0;
        let mut d = 0.0;
        for (k, (&h, &g)) in filter.lowpass.iter().zip(&filter.highpass).enumerate() {
            let x = input[(2 * i + k) % n];
            a += h * x;
            d += g * x;
        }
        approx.push(a);
        detail.push(d);
    }
}

/// One synthesis stage: adjoint of [`analyze_stage`].
fn synthesize_stage(approx: &[f64], detail: &[f64], filter: &WaveletFilter, output: &mut Vec<f64>) {
    let half = approx.len();
    let n = 2 * half;
    output.clear();
    output.resize(n, 0.0);
    for i in 0..half {
        for (k, (&h, &g)) in filter.lowpass.iter().zip(&filter.highpass).enumerate() {
            output[(2 * i + k) % n] += h * approx[i] + g * detail[i];
        }
    }
}

/// Full decomposition of a signal of length `2^{J+1}` into a tree with detail
/// levels `0..=J`. Rejects signals shorter than 2 samples.
pub fn forward_dwt(signal: &SampledSignal, filter: &WaveletFilter) -> Result<CoefficientTree> {
    if signal.len() < 2 {
        return Err(Error::InvalidSignal(
            "signal must have at least 2 samples to decompose".into(),
        ));
    }
    let mut current = signal.values.clone();
    let mut levels_rev: Vec<Vec<f64>> = Vec::new();
    let mut approx = Vec::new();
    let mut detail = Vec::new();
    while current.len() > 1 {
        analyze_stage(&current, filter, &mut approx, &mut detail);
        levels_rev.push(detail.clone());
        std::mem::swap(&mut current, &mut approx);
    }
    levels_rev.reverse();
    CoefficientTree::new(current[0], levels_rev)
}

/// Full reconstruction. The tree must have at least one detail level; the
/// output length is `2^{num_levels}`.
pub fn inverse_dwt(tree: &CoefficientTree, filter: &WaveletFilter) -> Result<SampledSignal> {
    if tree.num_levels() == 0 {
        return Err(Error::InvalidTree(
            "tree has no detail levels; nothing to reconstruct".into(),
        ));
    }
    let mut current = vec![tree.alpha00()];
    let mut output = Vec::new();
    for level in tree.iter_levels() {
        synthesize_stage(&current, level, filter, &mut output);
        std::mem::swap(&mut current, &mut output);
    }
    SampledSignal::new(current)
}

/// The classic test signals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SignalName {
    Blocks,
    Bumps,
    Doppler,
    HeaviSine,
}

impl SignalName {
    /// Canonical lowercase name, as accepted by [`FromStr`].
    pub fn as_str(&self) -> &'static str {
        match self {
            SignalName::Blocks => "blocks",
            SignalName::Bumps => "bumps",
            SignalName::Doppler => "doppler",
            SignalName::HeaviSine => "heavisine",
        }
    }
}

impl fmt::Display for SignalName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SignalName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "blocks" => Ok(SignalName::Blocks),
            "bumps" => Ok(SignalName::Bumps),
            "doppler" => Ok(SignalName::Doppler),
            "heavisine" => Ok(SignalName::HeaviSine),
            other => Err(Error::InvalidArgument(format!(
                "unknown signal `{other}`, expected blocks, bumps, doppler, or heavisine"
            ))),
        }
    }
}

const JUMP_TIMES: [f64; 11] = [0.1, 0.13, 0.15, 0.23, 0.25, 0.40, 0.44, 0.65, 0.76, 0.78, 0.81];
const BLOCK_HEIGHTS: [f64; 11] = [4.0, -5.0, 3.0, -4.0, 5.0, -4.2, 2.1, 4.3, -3.1, 2.1, -4.2];
const BUMP_HEIGHTS: [f64; 11] = [4.0, 5.0, 3.0, 4.0, 5.0, 4.2, 2.1, 4.3, 3.1, 5.1, 4.2];
const BUMP_WIDTHS: [f64; 11] = [
    0.005, 0.005, 0.006, 0.01, 0.01, 0.03, 0.01, 0.01, 0.005, 0.008, 0.005,
];

fn signum(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn signal_value(name: SignalName, t: f64) -> f64 {
    match name {
        SignalName::Blocks => JUMP_TIMES
            .iter()
            .zip(&BLOCK_HEIGHTS)
            .map(|(&tj, &hj)| hj * (1.0 + signum(t - tj)) / 2.0)
            .sum(),
        SignalName::Bumps => JUMP_TIMES
            .iter()
            .zip(BUMP_HEIGHTS.iter().zip(&BUMP_WIDTHS))
            .map(|(&tj, (&hj, &wj))| hj * (1.0 + ((t - tj) / wj).abs()).powi(-4))
            .sum(),
        SignalName::Doppler => {
            (t * (1.0 - t)).max(0.0).sqrt()
                * (2.0 * std::f64::consts::PI * 1.05 / (t + 0.05)).sin()
        }
        SignalName::HeaviSine => {
            4.0 * (4.0 * std::f64::consts::PI * t).sin() - signum(t - 0.3) - signum(0.72 - t)
        }
    }
}

/// Samples a named test signal on the grid `t_i = i / length`.
pub fn standard_signal(name: SignalName, length: usize) -> Result<SampledSignal> {
    if length == 0 || !length.is_power_of_two() {
        return Err(Error::InvalidSignal(format!(
            "length must be a positive power of two, got {length}"
        )));
    }
    let values = (0..length)
        .map(|i| signal_value(name, i as f64 / length as f64))
        .collect();
    SampledSignal::new(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    use crate::rng::CounterRng;

    fn filters() -> [WaveletFilter; 2] {
        [
            WaveletFilter::new(FilterKind::Haar),
            WaveletFilter::new(FilterKind::Daubechies4),
        ]
    }

    #[test]
    fn filters_are_orthonormal_with_unit_dc_gain() {
        for f in filters() {
            let h = f.lowpass();
            let g = f.highpass();
            let sum: f64 = h.iter().sum();
            assert!((sum - 2.0f64.sqrt()).abs() < 1e-15, "{:?}", f.kind());
            let energy: f64 = h.iter().map(|v| v * v).sum();
            assert!((energy - 1.0).abs() < 1e-15);
            let g_sum: f64 = g.iter().sum();
            assert!(g_sum.abs() < 1e-15, "highpass must kill constants");
            // Lowpass and highpass are orthogonal.
            let dot: f64 = h.iter().zip(g).map(|(a, b)| a * b).sum();
            assert!(dot.abs() < 1e-15);
        }
        // Shift-by-two self-orthogonality for the 4-tap filter.
        let d4 = WaveletFilter::new(FilterKind::Daubechies4);
        let h = d4.lowpass();
        let shifted: f64 = h[0] * h[2] + h[1] * h[3];
        assert!(shifted.abs() < 1e-15);
    }

    #[test]
    fn haar_analysis_of_alternating_signal_by_hand() {
        let signal = SampledSignal::new(vec![1.0, -1.0, 1.0, -1.0]).unwrap();
        let tree = forward_dwt(&signal, &WaveletFilter::new(FilterKind::Haar)).unwrap();
        assert_eq!(tree.j_max(), 1);
        assert!(tree.alpha00().abs() < 1e-15);
        assert!(tree.level(0)[0].abs() < 1e-15);
        let r2 = std::f64::consts::SQRT_2;
        assert!((tree.level(1)[0] - r2).abs() < 1e-15);
        assert!((tree.level(1)[1] - r2).abs() < 1e-15);
    }

    #[test]
    fn haar_analysis_of_constant_signal_by_hand() {
        let signal = SampledSignal::new(vec![1.0; 4]).unwrap();
        let tree = forward_dwt(&signal, &WaveletFilter::new(FilterKind::Haar)).unwrap();
        assert!((tree.alpha00() - 2.0).abs() < 1e-15);
        for level in tree.iter_levels() {
            for v in level {
                assert!(v.abs() < 1e-15);
            }
        }
    }

    #[test]
    fn constant_signals_concentrate_in_the_scaling_coefficient_for_all_filters() {
        for f in filters() {
            let n = 64;
            let signal = SampledSignal::new(vec![3.0; n]).unwrap();
            let tree = forward_dwt(&signal, &f).unwrap();
            assert!((tree.alpha00() - 3.0 * (n as f64).sqrt()).abs() < 1e-12);
            for level in tree.iter_levels() {
                for v in level {
                    assert!(v.abs() < 1e-12, "{:?}", f.kind());
                }
            }
        }
    }

    #[test]
    fn round_trip_is_exact_for_random_signals() {
        for f in filters() {
            for exp in 1..=10 {
                let n = 1usize << exp;
                let mut rng = CounterRng::new(exp as u64, &[0xd]);
                let values: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
                let signal = SampledSignal::new(values).unwrap();
                let tree = forward_dwt(&signal, &f).unwrap();
                assert_eq!(tree.num_levels(), exp);
                let back = inverse_dwt(&tree, &f).unwrap();
                let err = signal
                    .values()
                    .iter()
                    .zip(back.values())
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0f64, f64::max);
                assert!(err < 1e-11, "{:?} length {n}: max err {err}", f.kind());
            }
        }
    }

    #[test]
    fn transform_preserves_energy() {
        for f in filters() {
            let signal = standard_signal(SignalName::HeaviSine, 512).unwrap();
            let tree = forward_dwt(&signal, &f).unwrap();
            let sig_energy: f64 = signal.values().iter().map(|v| v * v).sum();
            assert!((tree.l2_norm_sq() - sig_energy).abs() < 1e-9 * sig_energy);
        }
    }

    #[test]
    fn inverse_of_pure_scaling_tree_is_constant() {
        let tree = CoefficientTree::new(2.0, vec![vec![0.0], vec![0.0, 0.0]]).unwrap();
        let signal = inverse_dwt(&tree, &WaveletFilter::new(FilterKind::Haar)).unwrap();
        for v in signal.values() {
            assert!((v - 1.0).abs() < 1e-15);
        }
        let zero = CoefficientTree::zero(3);
        let flat = inverse_dwt(&zero, &WaveletFilter::new(FilterKind::Daubechies4)).unwrap();
        assert!(flat.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn degenerate_inputs_are_rejected() {
        let f = WaveletFilter::new(FilterKind::Haar);
        assert!(SampledSignal::new(vec![1.0, 2.0, 3.0]).is_err());
        assert!(SampledSignal::new(vec![]).is_err());
        assert!(SampledSignal::new(vec![f64::NAN, 0.0]).is_err());
        let single = SampledSignal::new(vec![1.0]).unwrap();
        assert!(forward_dwt(&single, &f).is_err());
        let bare = CoefficientTree::new(1.0, vec![]).unwrap();
        assert!(inverse_dwt(&bare, &f).is_err());
    }

    #[test]
    fn filter_names_parse_and_print() {
        assert_eq!("haar".parse::<FilterKind>().unwrap(), FilterKind::Haar);
        assert_eq!("d4".parse::<FilterKind>().unwrap(), FilterKind::Daubechies4);
        assert_eq!("daubechies4".parse::<FilterKind>().unwrap(), FilterKind::Daubechies4);
        assert!("sym8".parse::<FilterKind>().is_err());
        assert_eq!(FilterKind::Daubechies4.to_string(), "d4");
    }

    #[test]
    fn signal_names_parse_and_print() {
        for name in ["blocks", "bumps", "doppler", "heavisine"] {
            let parsed: SignalName = name.parse().unwrap();
            assert_eq!(parsed.to_string(), name);
        }
        assert!("ramp".parse::<SignalName>().is_err());
    }

    #[test]
    fn standard_signals_have_hand_checked_values() {
        let blocks = standard_signal(SignalName::Blocks, 8).unwrap();
        assert_eq!(blocks.values()[0], 0.0);
        // t = 0.5: jumps at 0.1, .13, .15, .23, .25, .40, .44 have fired.
        let want = 4.0 - 5.0 + 3.0 - 4.0 + 5.0 - 4.2 + 2.1;
        assert!((blocks.values()[4] - want).abs() < 1e-12);

        let doppler = standard_signal(SignalName::Doppler, 8).unwrap();
        assert_eq!(doppler.values()[0], 0.0);

        let heavi = standard_signal(SignalName::HeaviSine, 8).unwrap();
        // t = 0: 4 sin 0 - sgn(-0.3) - sgn(0.72) = 1 - 1 = 0.
        assert!(heavi.values()[0].abs() < 1e-12);
        // t = 0.5: 4 sin(2 pi) - 1 - 1 = -2.
        assert!((heavi.values()[4] + 2.0).abs() < 1e-12);

        let bumps = standard_signal(SignalName::Bumps, 64).unwrap();
        assert!(bumps.values().iter().all(|v| *v > 0.0));
    }

    #[test]
    fn standard_signals_are_deterministic() {
        let a = standard_signal(SignalName::Doppler, 256).unwrap();
        let b = standard_signal(SignalName::Doppler, 256).unwrap();
        assert_eq!(a, b);
        assert!(standard_signal(SignalName::Doppler, 100).is_err());
        assert!(standard_signal(SignalName::Doppler, 0).is_err());
    }

    #[test]
    fn blocks_under_haar_is_level_sparse() {
        // A piecewise-constant signal with 11 jumps has at most 11 nonzero
        // Haar details per level once intervals are short enough to isolate
        // the jumps.
        let signal = standard_signal(SignalName::Blocks, 4096).unwrap();
        let tree = forward_dwt(&signal, &WaveletFilter::new(FilterKind::Haar)).unwrap();
        for j in 6..tree.num_levels() {
            let nonzero = tree.level(j).iter().filter(|v| v.abs() > 1e-12).count();
            assert!(nonzero <= 11, "level {j} has {nonzero} nonzeros");
        }
    }

    #[test]
    fn signal_text_round_trip() {
        let signal = standard_signal(SignalName::Bumps, 32).unwrap();
        let text = signal.render_text();
        let back = SampledSignal::parse_text(&text).unwrap();
        assert_eq!(signal, back);
        let err = SampledSignal::parse_text("1.0\nnope\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }
}
