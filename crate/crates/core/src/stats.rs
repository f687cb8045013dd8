//! Statistical kernels: Pearson correlation, linear-interpolation quantiles,
//! five-number summaries, and histogram overlap coefficients.

use crate::scalar::{real, Scalar};

/// Default bin count for [`overlap_coefficient`].
pub const DEFAULT_OVERLAP_BINS: usize = 64;

/// Pearson correlation of two equally long samples.
///
/// Returns `None` when fewer than two points are given or either sample has
/// zero variance; both cases leave the coefficient undefined.
pub fn pearson<S: Scalar>(x: &[S], y: &[S]) -> Option<S> {
    assert_eq!(x.len(), y.len(), "pearson requires equally long samples");
    let n = x.len();
    if n < 2 {
        return None;
    }
    let nf = real::<S>(n as f64);
    let mean_x = x.iter().fold(S::zero(), |a, &v| a + v) / nf;
    let mean_y = y.iter().fold(S::zero(), |a, &v| a + v) / nf;
    let mut cov = S::zero();
    let mut var_x = S::zero();
    let mut var_y = S::zero();
    for (&xi, &yi) in x.iter().zip(y) {
        let dx = xi - mean_x;
        let dy = yi - mean_y;
        cov = cov + dx * dy;
        var_x = var_x + dx * dx;
        var_y = var_y + dy * dy;
    }
    if var_x <= S::zero() || var_y <= S::zero() {
        return None;
    }
    Some(cov / (var_x * var_y).sqrt())
}

/// Quantile of an ascending-sorted sample by linear interpolation.
///
/// Uses the `h = (n − 1)p` position convention: the result interpolates
/// between the two order statistics bracketing `h`, matching the default of
/// the common numerical environments. Requires a non-empty sample and
/// `0 ≤ p ≤ 1`.
pub fn quantile_sorted<S: Scalar>(sorted: &[S], p: S) -> S {
    assert!(!sorted.is_empty(), "quantile of an empty sample");
    debug_assert!(
        p >= S::zero() && p <= S::one(),
        "quantile order must lie in [0, 1]"
    );
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = real::<S>((n - 1) as f64) * p;
    let lo = h.floor();
    let idx = lo.to_usize().unwrap_or(0).min(n - 1);
    let hi = (idx + 1).min(n - 1);
    sorted[idx] + (h - lo) * (sorted[hi] - sorted[idx])
}

/// Five-number summary: minimum, lower quartile, median, upper quartile,
/// maximum.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FiveNumber<S> {
    pub min: S,
    pub q1: S,
    pub median: S,
    pub q3: S,
    pub max: S,
}

/// Five-number summary of an unsorted sample; `None` when empty.
pub fn five_number<S: Scalar>(samples: &[S]) -> Option<FiveNumber<S>> {
    if samples.is_empty() {
        return None;
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("samples must not contain NaN"));
    Some(FiveNumber {
        min: sorted[0],
        q1: quantile_sorted(&sorted, real(0.25)),
        median: quantile_sorted(&sorted, real(0.5)),
        q3: quantile_sorted(&sorted, real(0.75)),
        max: sorted[sorted.len() - 1],
    })
}

/// Histogram overlap coefficient of two samples.
///
/// Both samples are binned into `bins` equal-width bins spanning their
/// combined range; the result is `Σ min(p_i, q_i)` over the normalized bin
/// masses, in `[0, 1]`. Returns `None` when either sample is empty. Two
/// samples concentrated on one identical point overlap fully.
pub fn overlap_coefficient<S: Scalar>(a: &[S], b: &[S], bins: usize) -> Option<S> {
    assert!(bins > 0, "overlap requires at least one bin");
    if a.is_empty() || b.is_empty() {
        return None;
    }
    let mut lo = S::infinity();
    let mut hi = S::neg_infinity();
    for &v in a.iter().chain(b) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if lo >= hi {
        return Some(S::one());
    }
    let width = hi - lo;
    let nbins = real::<S>(bins as f64);
    let index = |v: S| -> usize {
        let raw = ((v - lo) / width * nbins).floor();
        raw.to_usize().unwrap_or(0).min(bins - 1)
    };
    let mut mass_a = vec![S::zero(); bins];
    let mut mass_b = vec![S::zero(); bins];
    let inc_a = S::one() / real::<S>(a.len() as f64);
    let inc_b = S::one() / real::<S>(b.len() as f64);
    for &v in a {
        mass_a[index(v)] = mass_a[index(v)] + inc_a;
    }
    for &v in b {
        mass_b[index(v)] = mass_b[index(v)] + inc_b;
    }
    let mut overlap = S::zero();
    for (pa, pb) in mass_a.iter().zip(&mass_b) {
        overlap = overlap + pa.min(*pb);
    }
    Some(overlap)
}
