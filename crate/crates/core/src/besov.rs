//! Besov sequence norms and Besov-ball truth generators.
//!
//! For a coefficient tree the Besov `(s, p, q)` sequence norm is
//!
//! ```text
//! |alpha00| + ( sum_j ( 2^{j(s + 1/2 - 1/p)} ||beta_{j.}||_p )^q )^{1/q}
//! ```
//!
//! with the usual sup/max conventions when `q` or `p` is infinite. Indices
//! are restricted to `s > max(0, 1/p - 1/2)` so that the balls embed into
//! `l2` and the minimax theory applies.

use rand::Rng;

use crate::dwt::{forward_dwt, standard_signal, FilterKind, SignalName, WaveletFilter};
use crate::rng::{tag, CounterRng};
use crate::tree::CoefficientTree;
use crate::{Error, Result};

/// Smoothness/integrability indices of a Besov ball together with its radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesovIndex {
    s: f64,
    p: f64,
    q: f64,
    radius: f64,
}

fn recip(p: f64) -> f64 {
    if p.is_infinite() {
        0.0
    } else {
        1.0 / p
    }
}

impl BesovIndex {
    /// Validates and builds an index. Requires `p, q >= 1` (infinity allowed),
    /// a finite positive radius, and `s > max(0, 1/p - 1/2)`.
    pub fn new(s: f64, p: f64, q: f64, radius: f64) -> Result<Self> {
        if !s.is_finite() {
            return Err(Error::InvalidBesovIndex(format!("s must be finite, got {s}")));
        }
        for (name, v) in [("p", p), ("q", q)] {
            if v.is_nan() || v < 1.0 {
                return Err(Error::InvalidBesovIndex(format!(
                    "{name} must satisfy {name} >= 1 (infinity allowed), got {v}"
                )));
            }
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidBesovIndex(format!(
                "radius must be positive and finite, got {radius}"
            )));
        }
        let floor = (recip(p) - 0.5).max(0.0);
        if s <= floor {
            return Err(Error::InvalidBesovIndex(format!(
                "s must exceed max(0, 1/p - 1/2) = {floor} for p = {p}, got s = {s}"
            )));
        }
        Ok(BesovIndex { s, p, q, radius })
    }

    /// Smoothness index `s`.
    pub fn s(&self) -> f64 {
        self.s
    }

    /// Integrability index `p` (possibly infinite).
    pub fn p(&self) -> f64 {
        self.p
    }

    /// Summability index `q` (possibly infinite).
    pub fn q(&self) -> f64 {
        self.q
    }

    /// Ball radius.
    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// The level weight exponent `s + 1/2 - 1/p`.
    pub fn smoothness_exponent(&self) -> f64 {
        self.s + 0.5 - recip(self.p)
    }
}

/// `l_p` norm of one detail level; `p` may be infinite (max of absolutes).
pub fn level_lp_norm(level: &[f64], p: f64) -> f64 {
    debug_assert!(p >= 1.0);
    if p.is_infinite() {
        level.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    } else if p == 1.0 {
        level.iter().map(|v| v.abs()).sum()
    } else if p == 2.0 {
        level.iter().map(|v| v * v).sum::<f64>().sqrt()
    } else {
        level
            .iter()
            .map(|v| v.abs().powf(p))
            .sum::<f64>()
            .powf(1.0 / p)
    }
}

/// Besov sequence norm of a tree.
pub fn besov_norm(tree: &CoefficientTree, idx: &BesovIndex) -> f64 {
    let w = idx.smoothness_exponent();
    let terms = tree
        .iter_levels()
        .enumerate()
        .map(|(j, level)| (w * j as f64).exp2() * level_lp_norm(level, idx.p));
    let detail = if idx.q.is_infinite() {
        terms.fold(0.0f64, f64::max)
    } else if idx.q == 1.0 {
        terms.sum()
    } else {
        terms.map(|t| t.powf(idx.q)).sum::<f64>().powf(1.0 / idx.q)
    };
    tree.alpha00().abs() + detail
}

/// Whether the tree lies strictly inside the ball (`norm < radius`).
pub fn in_ball(tree: &CoefficientTree, idx: &BesovIndex) -> bool {
    besov_norm(tree, idx) < idx.radius
}

/// Sum of squared coefficients on levels strictly deeper than `j`.
pub fn tail_energy(tree: &CoefficientTree, j: i64) -> f64 {
    tree.energy_above(j)
}

/// Factor `F(p, j)` with `||x||_p <= F * ||x||_2` on a level of width `2^j`:
/// `1` for `p >= 2` and `2^{j(1/p - 1/2)}` for `p < 2`.
pub fn level_embedding_bound(p: f64, j: usize) -> f64 {
    if p >= 2.0 {
        1.0
    } else {
        ((recip(p) - 0.5) * j as f64).exp2()
    }
}

/// Factor `C(J)` bounding the Besov norm of a detail-only tree supported on
/// levels `0..=J` by `C(J)` times its `l2` norm:
/// `2^{J max(s, s + 1/2 - 1/p)} * (J + 1)^{max(1/q - 1/2, 0)}`.
pub fn projected_norm_bound(idx: &BesovIndex, j: usize) -> f64 {
    let exponent = idx.s.max(idx.smoothness_exponent());
    let count_power = (recip(idx.q) - 0.5).max(0.0);
    (exponent * j as f64).exp2() * ((j + 1) as f64).powf(count_power)
}

/// Shape of a synthetic truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TruthKind {
    /// Every coefficient at level `j` equals the same level-dependent value.
    LevelUniform,
    /// One seeded nonzero position per level.
    LevelSparse,
    /// Wavelet coefficients of a named test signal, details rescaled into the
    /// ball while the scaling coefficient is kept.
    DwtOfSignal { signal: SignalName, wavelet: FilterKind },
}

/// Recipe for a truth inside a Besov ball.
#[derive(Debug, Clone, PartialEq)]
pub struct TruthSpec {
    pub kind: TruthKind,
    pub besov: BesovIndex,
    /// Fraction of the radius left unused: the truth lands at norm
    /// `(1 - margin) * radius`. Must lie in `(0, 1)`.
    pub margin: f64,
    /// Deepest detail level of the generated tree.
    pub j_max: usize,
    /// Extra per-level geometric decay exponent; level `j` contributes a
    /// Besov term proportional to `2^{-j * decay}`.
    pub decay: f64,
}

/// Deepest truth level the generator will allocate (`2^{j+1}` coefficients).
const MAX_TRUTH_LEVELS: usize = 22;

/// Builds a deterministic truth tree of norm `(1 - margin) * radius`.
///
/// The detail part of a base tree is scaled by a constant found by bisection
/// until the norm matches the target within `1e-9 * radius`. The scaling
/// coefficient is left untouched (it is zero for the synthetic kinds), so a
/// base whose scaling coefficient alone exceeds the target is rejected.
pub fn make_truth(spec: &TruthSpec, seed: u64) -> Result<CoefficientTree> {
    if !(spec.margin > 0.0 && spec.margin < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "margin must lie in (0, 1), got {}",
            spec.margin
        )));
    }
    if !(spec.decay >= 0.0 && spec.decay.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "decay must be a finite value >= 0, got {}",
            spec.decay
        )));
    }
    if spec.j_max > MAX_TRUTH_LEVELS {
        return Err(Error::InvalidArgument(format!(
            "J_max = {} exceeds the supported maximum {MAX_TRUTH_LEVELS}",
            spec.j_max
        )));
    }
    let idx = &spec.besov;
    let target = (1.0 - spec.margin) * idx.radius();
    let base = base_tree(spec, seed)?;
    let alpha00 = base.alpha00();
    // besov_norm(scale_details(base, c)) = |alpha00| + c * detail_norm.
    let detail_norm = besov_norm(&base, idx) - alpha00.abs();
    if alpha00.abs() > target {
        return Err(Error::UnreachableTarget(format!(
            "scaling coefficient magnitude {} already exceeds the target norm {target}; increase the radius",
            alpha00.abs()
        )));
    }
    if detail_norm == 0.0 && alpha00.abs() < target {
        return Err(Error::UnreachableTarget(
            "base tree has no detail energy to scale toward the target norm".into(),
        ));
    }
    let tol = 1e-9 * idx.radius();
    let norm_at = |c: f64| -> f64 { alpha00.abs() + c * detail_norm };
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    while norm_at(hi) < target {
        hi *= 2.0;
        if hi > 1e300 {
            return Err(Error::UnreachableTarget(
                "scaling the base tree cannot reach the target norm".into(),
            ));
        }
    }
    let mut c = hi;
    for _ in 0..200 {
        c = 0.5 * (lo + hi);
        let norm = norm_at(c);
        if (norm - target).abs() <= tol {
            break;
        }
        if norm < target {
            lo = c;
        } else {
            hi = c;
        }
    }
    let scaled = scale_details(&base, c);
    debug_assert!((besov_norm(&scaled, idx) - target).abs() <= 2.0 * tol.max(f64::EPSILON * target));
    Ok(scaled)
}

fn scale_details(tree: &CoefficientTree, c: f64) -> CoefficientTree {
    let mut scaled = tree.scaled(c);
    scaled = scaled
        .with_alpha00(tree.alpha00())
        .expect("finite scaling coefficient");
    scaled
}

fn base_tree(spec: &TruthSpec, seed: u64) -> Result<CoefficientTree> {
    let idx = &spec.besov;
    let w = idx.smoothness_exponent();
    match spec.kind {
        TruthKind::LevelUniform => {
            // Per-coefficient value whose level l_p norm is 2^{-j(w + decay)},
            // making the level Besov term 2^{-j decay}.
            let levels = (0..=spec.j_max)
                .map(|j| {
                    let jf = j as f64;
                    let value = (-jf * (w + recip(idx.p) + spec.decay)).exp2();
                    vec![value; 1 << j]
                })
                .collect();
            CoefficientTree::new(0.0, levels)
        }
        TruthKind::LevelSparse => {
            let levels = (0..=spec.j_max)
                .map(|j| {
                    let mut level = vec![0.0; 1 << j];
                    let mut rng = CounterRng::new(seed, &[tag::TRUTH, j as u64]);
                    let k = rng.random_range(0..level.len());
                    level[k] = (-(j as f64) * (w + spec.decay)).exp2();
                    level
                })
                .collect();
            CoefficientTree::new(0.0, levels)
        }
        TruthKind::DwtOfSignal { signal, wavelet } => {
            let length = 1usize << (spec.j_max + 1);
            let sampled = standard_signal(signal, length)?;
            forward_dwt(&sampled, &WaveletFilter::new(wavelet))
        }
    }
}
