//! Dyadic trees of wavelet coefficients.
//!
//! A [`CoefficientTree`] holds the scaling coefficient `alpha00` and detail
//! levels `j = 0, 1, ..., J_max`, where level `j` has exactly `2^j` entries.
//! Trees of different depths compare and subtract as if padded with zeros:
//! a finite tree is always the prefix of an infinite sequence.

use std::fmt::Write as _;
use std::ops::{Add, Sub};

use crate::{Error, Result};

/// A finite dyadic coefficient tree.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTree {
    alpha00: f64,
    levels: Vec<Vec<f64>>,
}

impl CoefficientTree {
    /// Builds a tree, checking that level `j` has `2^j` finite entries and
    /// that the scaling coefficient is finite.
    pub fn new(alpha00: f64, levels: Vec<Vec<f64>>) -> Result<Self> {
        if !alpha00.is_finite() {
            return Err(Error::InvalidTree(format!(
                "scaling coefficient must be finite, got {alpha00}"
            )));
        }
        for (j, level) in levels.iter().enumerate() {
            let want = 1usize << j;
            if level.len() != want {
                return Err(Error::InvalidTree(format!(
                    "level {j} has {} entries, expected {want}",
                    level.len()
                )));
            }
            if let Some(bad) = level.iter().find(|v| !v.is_finite()) {
                return Err(Error::InvalidTree(format!(
                    "level {j} contains non-finite entry {bad}"
                )));
            }
        }
        Ok(CoefficientTree { alpha00, levels })
    }

    /// An all-zero tree with detail levels `0..num_levels`.
    pub fn zero(num_levels: usize) -> Self {
        let levels = (0..num_levels).map(|j| vec![0.0; 1 << j]).collect();
        CoefficientTree { alpha00: 0.0, levels }
    }

    /// The scaling coefficient.
    pub fn alpha00(&self) -> f64 {
        self.alpha00
    }

    /// Returns a copy with a different scaling coefficient.
    pub fn with_alpha00(&self, alpha00: f64) -> Result<Self> {
        if !alpha00.is_finite() {
            return Err(Error::InvalidTree(format!(
                "scaling coefficient must be finite, got {alpha00}"
            )));
        }
        Ok(CoefficientTree {
            alpha00,
            levels: self.levels.clone(),
        })
    }

    /// Number of stored detail levels (`J_max + 1`).
    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    /// Index of the deepest stored detail level, `-1` if none are stored.
    pub fn j_max(&self) -> i64 {
        self.levels.len() as i64 - 1
    }

    /// Detail level `j`. Panics if the level is not stored.
    pub fn level(&self, j: usize) -> &[f64] {
        &self.levels[j]
    }

    /// Iterates over stored detail levels in order.
    pub fn iter_levels(&self) -> impl Iterator<Item = &[f64]> {
        self.levels.iter().map(Vec::as_slice)
    }

    /// Coefficient `(j, k)` under zero padding: levels beyond `J_max` read 0.
    pub fn coeff(&self, j: usize, k: usize) -> f64 {
        match self.levels.get(j) {
            Some(level) => level[k],
            None => 0.0,
        }
    }

    /// Squared `l2` norm: `alpha00^2` plus the sum of all squared details.
    pub fn l2_norm_sq(&self) -> f64 {
        let details: f64 = self
            .levels
            .iter()
            .flat_map(|level| level.iter())
            .map(|v| v * v)
            .sum();
        self.alpha00 * self.alpha00 + details
    }

    /// The tree scaled by `c` (including the scaling coefficient).
    pub fn scaled(&self, c: f64) -> Self {
        let levels = self
            .levels
            .iter()
            .map(|level| level.iter().map(|v| c * v).collect())
            .collect();
        CoefficientTree {
            alpha00: c * self.alpha00,
            levels,
        }
    }

    /// Keeps levels `j <= j_keep` and drops the rest. `j_keep = -1` drops all
    /// detail levels; a `j_keep` at or beyond `J_max` is a no-op copy.
    pub fn truncate(&self, j_keep: i64) -> Self {
        let keep = usize::try_from(j_keep + 1).unwrap_or(0).min(self.levels.len());
        CoefficientTree {
            alpha00: self.alpha00,
            levels: self.levels[..keep].to_vec(),
        }
    }

    /// Sum of squared entries on levels strictly deeper than `j`.
    pub fn energy_above(&self, j: i64) -> f64 {
        self.levels
            .iter()
            .enumerate()
            .filter(|(lvl, _)| *lvl as i64 > j)
            .flat_map(|(_, level)| level.iter())
            .map(|v| v * v)
            .sum()
    }

    /// Renders the text form: a header line `J_max alpha00`, then one line of
    /// space-separated coefficients per level. Values round-trip exactly.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {}", self.j_max(), self.alpha00);
        for level in &self.levels {
            let mut first = true;
            for v in level {
                if !first {
                    out.push(' ');
                }
                let _ = write!(out, "{v}");
                first = false;
            }
            out.push('\n');
        }
        out
    }

    /// Parses the text form produced by [`render_text`](Self::render_text).
    pub fn parse_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::Parse {
                line: 1,
                message: "empty input, expected header `J_max alpha00`".into(),
            })?;
        let mut parts = header.split_whitespace();
        let j_max: i64 = parse_field(parts.next(), 1, "J_max")?;
        let alpha00: f64 = parse_field(parts.next(), 1, "alpha00")?;
        if parts.next().is_some() {
            return Err(Error::Parse {
                line: 1,
                message: "header has trailing fields, expected `J_max alpha00`".into(),
            });
        }
        if j_max < -1 {
            return Err(Error::Parse {
                line: 1,
                message: format!("J_max must be >= -1, got {j_max}"),
            });
        }
        let num_levels = (j_max + 1) as usize;
        let mut levels = Vec::with_capacity(num_levels);
        for j in 0..num_levels {
            let (idx, line) = lines.next().ok_or_else(|| Error::Parse {
                line: num_levels + 1,
                message: format!("missing line for level {j}"),
            })?;
            let values: Vec<f64> = line
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<f64>().map_err(|_| Error::Parse {
                        line: idx + 1,
                        message: format!("cannot parse `{tok}` as a number"),
                    })
                })
                .collect::<Result<_>>()?;
            if values.len() != 1 << j {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: format!("level {j} has {} entries, expected {}", values.len(), 1 << j),
                });
            }
            levels.push(values);
        }
        if let Some((idx, line)) = lines.next() {
            if !line.trim().is_empty() {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: "trailing content after last level".into(),
                });
            }
        }
        CoefficientTree::new(alpha00, levels)
    }
}

fn parse_field<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| Error::Parse {
        line,
        message: format!("missing {what}"),
    })?;
    tok.parse().map_err(|_| Error::Parse {
        line,
        message: format!("cannot parse {what} from `{tok}`"),
    })
}

/// Squared `l2` distance between two trees under zero padding.
///
/// Accumulates a per-level subtotal and adds the subtotals in level order;
/// streaming consumers reproduce the same float result by following the same
/// shape.
pub fn l2_distance_sq(a: &CoefficientTree, b: &CoefficientTree) -> f64 {
    let d0 = a.alpha00 - b.alpha00;
    let mut total = d0 * d0;
    let depth = a.num_levels().max(b.num_levels());
    for j in 0..depth {
        let mut level = 0.0;
        for k in 0..1usize << j {
            let d = a.coeff(j, k) - b.coeff(j, k);
            level += d * d;
        }
        total += level;
    }
    total
}

fn zip_levels(a: &CoefficientTree, b: &CoefficientTree, f: impl Fn(f64, f64) -> f64) -> CoefficientTree {
    let depth = a.num_levels().max(b.num_levels());
    let levels = (0..depth)
        .map(|j| {
            (0..1usize << j)
                .map(|k| f(a.coeff(j, k), b.coeff(j, k)))
                .collect()
        })
        .collect();
    CoefficientTree {
        alpha00: f(a.alpha00, b.alpha00),
        levels,
    }
}

impl Add for &CoefficientTree {
    type Output = CoefficientTree;

    fn add(self, rhs: Self) -> CoefficientTree {
        zip_levels(self, rhs, |x, y| x + y)
    }
}

impl Sub for &CoefficientTree {
    type Output = CoefficientTree;

    fn sub(self, rhs: Self) -> CoefficientTree {
        zip_levels(self, rhs, |x, y| x - y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_tree() -> CoefficientTree {
        CoefficientTree::new(0.5, vec![vec![3.0], vec![1.0, -1.0], vec![0.25, 0.0, -0.5, 2.0]])
            .unwrap()
    }

    #[test]
    fn construction_rejects_wrong_level_width() {
        let err = CoefficientTree::new(0.0, vec![vec![1.0, 2.0]]).unwrap_err();
        assert!(matches!(err, Error::InvalidTree(_)), "{err}");
        let err = CoefficientTree::new(0.0, vec![vec![1.0], vec![2.0]]).unwrap_err();
        assert!(err.to_string().contains("level 1"), "{err}");
    }

    #[test]
    fn construction_rejects_non_finite_entries() {
        assert!(CoefficientTree::new(f64::NAN, vec![]).is_err());
        assert!(CoefficientTree::new(0.0, vec![vec![f64::INFINITY]]).is_err());
    }

    #[test]
    fn zero_tree_has_requested_depth_and_no_energy() {
        let t = CoefficientTree::zero(4);
        assert_eq!(t.j_max(), 3);
        assert_eq!(t.level(3).len(), 8);
        assert_eq!(t.l2_norm_sq(), 0.0);
        assert_eq!(CoefficientTree::zero(0).j_max(), -1);
    }

    #[test]
    fn coeff_reads_zero_beyond_stored_levels() {
        let t = sample_tree();
        assert_eq!(t.coeff(1, 1), -1.0);
        assert_eq!(t.coeff(7, 100), 0.0);
    }

    #[test]
    fn l2_norm_matches_direct_sum() {
        let t = sample_tree();
        let want = 0.25 + 9.0 + 2.0 + (0.0625 + 0.25 + 4.0);
        assert!((t.l2_norm_sq() - want).abs() < 1e-14);
    }

    #[test]
    fn distance_pads_shorter_tree_with_zeros() {
        let a = sample_tree();
        let b = a.truncate(1);
        let tail: f64 = a.level(2).iter().map(|v| v * v).sum();
        assert!((l2_distance_sq(&a, &b) - tail).abs() < 1e-14);
        assert_eq!(l2_distance_sq(&a, &a), 0.0);
        // Symmetric in its arguments.
        assert_eq!(l2_distance_sq(&a, &b), l2_distance_sq(&b, &a));
    }

    #[test]
    fn distance_between_singletons_is_squared_difference() {
        let a = CoefficientTree::new(1.0, vec![]).unwrap();
        let b = CoefficientTree::new(-2.0, vec![]).unwrap();
        assert!((l2_distance_sq(&a, &b) - 9.0).abs() < 1e-15);
    }

    #[test]
    fn truncate_keeps_prefix_and_energy_splits() {
        let t = sample_tree();
        let kept = t.truncate(1);
        assert_eq!(kept.j_max(), 1);
        assert_eq!(kept.alpha00(), t.alpha00());
        // Energy splits between kept part and dropped tail.
        let dropped = t.energy_above(1);
        assert!((kept.l2_norm_sq() + dropped - t.l2_norm_sq()).abs() < 1e-14);
        // Truncating at or beyond the depth is the identity.
        assert_eq!(t.truncate(2), t);
        assert_eq!(t.truncate(99), t);
        // -1 drops everything but the scaling coefficient.
        let bare = t.truncate(-1);
        assert_eq!(bare.num_levels(), 0);
        assert_eq!(bare.alpha00(), 0.5);
    }

    #[test]
    fn truncate_is_idempotent() {
        let t = sample_tree();
        assert_eq!(t.truncate(1).truncate(1), t.truncate(1));
    }

    #[test]
    fn energy_above_matches_brute_force() {
        let t = sample_tree();
        let all: f64 = t.l2_norm_sq() - 0.25;
        assert!((t.energy_above(-1) - all).abs() < 1e-14);
        assert_eq!(t.energy_above(2), 0.0);
    }

    #[test]
    fn add_and_sub_zero_pad() {
        let a = sample_tree();
        let b = a.truncate(0);
        let diff = &a - &b;
        assert_eq!(diff.alpha00(), 0.0);
        assert_eq!(diff.level(0)[0], 0.0);
        assert_eq!(diff.level(2), a.level(2));
        let sum = &diff + &b;
        assert_eq!(sum, a);
    }

    #[test]
    fn text_round_trip_is_exact() {
        let t = CoefficientTree::new(
            0.1 + 0.2, // deliberately non-representable sum
            vec![vec![std::f64::consts::PI], vec![1e-300, -3.5e200]],
        )
        .unwrap();
        let text = t.render_text();
        let back = CoefficientTree::parse_text(&text).unwrap();
        assert_eq!(t, back);
    }

    #[test]
    fn text_round_trip_of_bare_tree() {
        let t = CoefficientTree::new(2.25, vec![]).unwrap();
        let text = t.render_text();
        assert!(text.starts_with("-1 2.25"));
        assert_eq!(CoefficientTree::parse_text(&text).unwrap(), t);
    }

    #[test]
    fn parse_reports_line_numbers() {
        let err = CoefficientTree::parse_text("1 0.0\n1.0\n2.0\n").unwrap_err();
        match err {
            Error::Parse { line, message } => {
                assert_eq!(line, 3);
                assert!(message.contains("level 1"), "{message}");
            }
            other => panic!("unexpected error {other}"),
        }
        let err = CoefficientTree::parse_text("0 0.0\nabc\n").unwrap_err();
        match err {
            Error::Parse { line, message } => {
                assert_eq!(line, 2);
                assert!(message.contains("abc"), "{message}");
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn parse_rejects_missing_levels_and_trailing_content() {
        assert!(CoefficientTree::parse_text("1 0.0\n1.0\n").is_err());
        assert!(CoefficientTree::parse_text("-1 0.0\nextra\n").is_err());
        assert!(CoefficientTree::parse_text("").is_err());
    }
}
