//! Shared helpers for the integration suites: an adaptive-quadrature oracle
//! and seeded random generators for trees and signals.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use waveshrink::CoefficientTree;

/// Adaptive Simpson quadrature with Richardson extrapolation.
///
/// `tol` is an absolute tolerance on the whole interval; the recursion halves
/// it with each split, which keeps the global error near `tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
        h / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, m - a);
        let right = simpson(fm, frm, fb, b - m);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let fa = f(a);
    let fm = f(0.5 * (a + b));
    let fb = f(b);
    let whole = simpson(fa, fm, fb, b - a);
    recurse(f, a, b, fa, fm, fb, whole, tol, 60)
}

/// Seeded generator for the suites; all randomness in the integration tests
/// flows through this.
pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// Random tree with `depth` detail levels and level-`j` coefficients drawn as
/// `N(0, scale^2 * 4^{-j})`; the geometric decay keeps norms finite across
/// the Besov indices the suites probe.
pub fn random_tree(r: &mut StdRng, depth: usize, scale: f64) -> CoefficientTree {
    let alpha00 = scale * r.sample::<f64, _>(StandardNormal);
    let levels = (0..depth)
        .map(|j| {
            let sd = scale * 0.25f64.powi(j as i32 / 2);
            (0..1usize << j)
                .map(|_| sd * r.sample::<f64, _>(StandardNormal))
                .collect()
        })
        .collect();
    CoefficientTree::new(alpha00, levels).unwrap()
}

/// Random signal values of a given power-of-two length.
pub fn random_signal_values(r: &mut StdRng, len: usize) -> Vec<f64> {
    (0..len).map(|_| r.sample::<f64, _>(StandardNormal)).collect()
}
