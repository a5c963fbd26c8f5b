//! Maximum-likelihood power-law fitting.
//!
//! The samples are the frequencies of distinct items (each n-gram
//! contributes its count once). For a threshold `x_min` the continuous
//! estimator over the tail `{x >= x_min}` is
//!
//! ```text
//! alpha = 1 + n / sum(ln(x_i / x_min))
//! ```
//!
//! and goodness of fit is the Kolmogorov-Smirnov distance between the tail's
//! empirical CDF and `P(x) = 1 - (x / x_min)^(1 - alpha)`. The empirical CDF
//! is compared at the upper value of each step, i.e. `S(x) = #{x_j <= x} / n`
//! evaluated at every distinct tail value.
//!
//! `x_min` itself is chosen by scanning the distinct sample values and keeping
//! the fit with the smallest KS distance (smaller `x_min` wins ties).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_MIN_TAIL: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub alpha: f64,
    /// Rank-frequency (Zipf) exponent, always `alpha - 1`.
    pub eta: f64,
    pub x_min: f64,
    pub ks: f64,
    pub n_tail: usize,
}

impl PowerLawFit {
    fn new(alpha: f64, x_min: f64, ks: f64, n_tail: usize) -> Self {
        PowerLawFit {
            alpha,
            eta: alpha - 1.0,
            x_min,
            ks,
            n_tail,
        }
    }
}

/// Controls the `x_min` scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct XminSearch {
    /// Candidates leaving fewer tail samples than this are skipped.
    pub min_tail: usize,
    /// When set, at most this many candidates are evaluated, spread evenly
    /// over the sorted distinct values (the smallest is always included).
    pub max_candidates: Option<usize>,
}

impl Default for XminSearch {
    fn default() -> Self {
        XminSearch {
            min_tail: DEFAULT_MIN_TAIL,
            max_candidates: None,
        }
    }
}

fn check_samples(freqs: &[f64]) -> Result<()> {
    match freqs.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
        Some(&value) => Err(Error::InvalidSample { value }),
        None => Ok(()),
    }
}

fn check_xmin(x_min: f64) -> Result<()> {
    if x_min.is_finite() && x_min > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidSample { value: x_min })
    }
}

fn sorted_tail(freqs: &[f64], x_min: f64) -> Vec<f64> {
    let mut tail: Vec<f64> = freqs.iter().copied().filter(|&x| x >= x_min).collect();
    tail.sort_unstable_by(f64::total_cmp);
    tail
}

/// MLE on an ascending tail whose values are all `>= x_min`.
fn alpha_on_sorted_tail(tail: &[f64], x_min: f64) -> Result<f64> {
    if tail.is_empty() {
        return Err(Error::EmptyTail { x_min });
    }
    let log_sum: f64 = tail.iter().map(|&x| (x / x_min).ln()).sum();
    if log_sum <= 0.0 {
        return Err(Error::DegenerateTail { x_min });
    }
    Ok(1.0 + tail.len() as f64 / log_sum)
}

fn ks_on_sorted_tail(tail: &[f64], alpha: f64, x_min: f64) -> f64 {
    let n = tail.len() as f64;
    let exponent = alpha - 1.0;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < tail.len() {
        let x = tail[i];
        let mut j = i + 1;
        while j < tail.len() && tail[j] == x {
            j += 1;
        }
        let empirical = j as f64 / n;
        let model = 1.0 - (x / x_min).powf(-exponent);
        d = d.max((empirical - model).abs());
        i = j;
    }
    d.min(1.0)
}

pub fn fit_alpha_mle(freqs: &[f64], x_min: f64) -> Result<f64> {
    check_samples(freqs)?;
    check_xmin(x_min)?;
    alpha_on_sorted_tail(&sorted_tail(freqs, x_min), x_min)
}

pub fn ks_distance(freqs: &[f64], alpha: f64, x_min: f64) -> Result<f64> {
    check_samples(freqs)?;
    check_xmin(x_min)?;
    let tail = sorted_tail(freqs, x_min);
    if tail.is_empty() {
        return Err(Error::EmptyTail { x_min });
    }
    Ok(ks_on_sorted_tail(&tail, alpha, x_min))
}

/// Fits with a caller-chosen threshold.
pub fn fit_with_xmin(freqs: &[f64], x_min: f64) -> Result<PowerLawFit> {
    check_samples(freqs)?;
    check_xmin(x_min)?;
    let tail = sorted_tail(freqs, x_min);
    let alpha = alpha_on_sorted_tail(&tail, x_min)?;
    Ok(PowerLawFit::new(
        alpha,
        x_min,
        ks_on_sorted_tail(&tail, alpha, x_min),
        tail.len(),
    ))
}

pub fn select_xmin(freqs: &[f64], search: &XminSearch) -> Result<PowerLawFit> {
    check_samples(freqs)?;
    let mut sorted = freqs.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let min_tail = search.min_tail.max(1);

    // first index of every distinct value whose tail is long enough
    let mut candidates: Vec<usize> = Vec::new();
    for (i, &x) in sorted.iter().enumerate() {
        if sorted.len() - i < min_tail {
            break;
        }
        if i == 0 || sorted[i - 1] != x {
            candidates.push(i);
        }
    }
    if let Some(limit) = search.max_candidates {
        candidates = thin_evenly(&candidates, limit.max(1));
    }

    let best = candidates
        .par_iter()
        .filter_map(|&start| {
            let x_min = sorted[start];
            let tail = &sorted[start..];
            let alpha = alpha_on_sorted_tail(tail, x_min).ok()?;
            Some(PowerLawFit::new(
                alpha,
                x_min,
                ks_on_sorted_tail(tail, alpha, x_min),
                tail.len(),
            ))
        })
        .reduce_with(|a, b| {
            let a_first = match a.ks.total_cmp(&b.ks) {
                std::cmp::Ordering::Less => true,
                std::cmp::Ordering::Greater => false,
                std::cmp::Ordering::Equal => a.x_min <= b.x_min,
            };
            if a_first {
                a
            } else {
                b
            }
        });
    best.ok_or(Error::InsufficientTail { required: min_tail })
}

fn thin_evenly(items: &[usize], limit: usize) -> Vec<usize> {
    if items.len() <= limit {
        return items.to_vec();
    }
    if limit == 1 {
        return vec![items[0]];
    }
    let last = items.len() - 1;
    let mut out: Vec<usize> = (0..limit)
        .map(|k| items[(k * last + (limit - 1) / 2) / (limit - 1)])
        .collect();
    out.dedup();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_evaluated_alpha() {
        let alpha = fit_alpha_mle(&[2.0, 4.0, 8.0], 2.0).unwrap();
        let expected = 1.0 + 3.0 / (1f64.ln() + 2f64.ln() + 4f64.ln());
        assert!((alpha - expected).abs() < 1e-12);
        assert!((alpha - 2.442695).abs() < 1e-6);
    }

    #[test]
    fn degenerate_and_empty_tails() {
        assert!(matches!(
            fit_alpha_mle(&[2.0, 2.0, 2.0], 2.0),
            Err(Error::DegenerateTail { .. })
        ));
        assert!(matches!(
            fit_alpha_mle(&[1.0, 1.5], 2.0),
            Err(Error::EmptyTail { .. })
        ));
        assert!(matches!(
            ks_distance(&[1.0], 2.5, 2.0),
            Err(Error::EmptyTail { .. })
        ));
        assert!(matches!(
            fit_alpha_mle(&[0.0, 2.0], 1.0),
            Err(Error::InvalidSample { .. })
        ));
    }

    #[test]
    fn hand_evaluated_ks() {
        let alpha = 2.442695;
        let d = ks_distance(&[2.0, 4.0, 8.0], alpha, 2.0).unwrap();
        let p = |x: f64| 1.0 - (x / 2.0f64).powf(-(alpha - 1.0));
        let oracle = [
            (1.0 / 3.0 - p(2.0)).abs(),
            (2.0 / 3.0 - p(4.0)).abs(),
            (1.0 - p(8.0)).abs(),
        ]
        .into_iter()
        .fold(0.0, f64::max);
        assert!((d - oracle).abs() < 1e-12);
        assert!((d - 0.33333).abs() < 1e-5);
    }

    #[test]
    fn single_point_tail_is_maximal() {
        assert_eq!(ks_distance(&[3.0], 2.0, 3.0).unwrap(), 1.0);
    }

    #[test]
    fn ks_vanishes_on_quantile_sample() {
        // x_i at the model's (i - 0.5)/n quantiles: every step misses by exactly 1/(2n)
        let alpha = 2.5;
        for n in [10usize, 100, 10_000] {
            let pts: Vec<f64> = (1..=n)
                .map(|i| (1.0 - (i as f64 - 0.5) / n as f64).powf(-1.0 / (alpha - 1.0)))
                .collect();
            let d = ks_distance(&pts, alpha, 1.0).unwrap();
            assert!((d - 0.5 / n as f64).abs() < 1e-9, "n={n} d={d}");
        }
    }

    #[test]
    fn ties_compare_at_upper_step() {
        // tail {1,1,2}: S(1)=2/3, S(2)=1
        let d = ks_distance(&[1.0, 1.0, 2.0], 2.0, 1.0).unwrap();
        let oracle = (2.0f64 / 3.0 - 0.0).abs().max((1.0f64 - 0.5).abs());
        assert!((d - oracle).abs() < 1e-12);
    }

    #[test]
    fn insufficient_tail() {
        let data = [1.0, 2.0, 3.0, 4.0, 5.0];
        let err = select_xmin(&data, &XminSearch::default()).unwrap_err();
        assert!(matches!(err, Error::InsufficientTail { required: 10 }));
    }

    #[test]
    fn eta_tracks_alpha() {
        let data: Vec<f64> = (1..=50).map(|i| (1000.0 / i as f64).round()).collect();
        let fit = select_xmin(&data, &XminSearch::default()).unwrap();
        assert_eq!(fit.eta, fit.alpha - 1.0);
        assert!(fit.n_tail >= 10);
        assert!((0.0..=1.0).contains(&fit.ks));
    }

    #[test]
    fn thinning_keeps_ends() {
        let items: Vec<usize> = (0..100).collect();
        let t = thin_evenly(&items, 5);
        assert_eq!(t.first(), Some(&0));
        assert_eq!(t.last(), Some(&99));
        assert_eq!(t.len(), 5);
        assert_eq!(thin_evenly(&items[..3], 5), vec![0, 1, 2]);
    }
}
