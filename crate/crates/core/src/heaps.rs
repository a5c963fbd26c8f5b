//! Vocabulary growth and the `V(m) = K * m^beta` fit.

use std::collections::HashSet;
use std::hash::Hash;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_GROWTH_SAMPLES: usize = 200;

/// How prefix positions are chosen along the sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Spacing {
    /// Geometric spacing from m = 1 up to the full length.
    #[default]
    Log,
    /// Evenly spaced prefix lengths ending at the full length.
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrowthPoint {
    pub m: u64,
    #[serde(rename = "V")]
    pub v: u64,
}

/// Distinct-item counts at increasing prefix lengths.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GrowthCurve {
    points: Vec<GrowthPoint>,
}

impl GrowthCurve {
    pub fn points(&self) -> &[GrowthPoint] {
        &self.points
    }

    pub fn as_f64_pairs(&self) -> Vec<(f64, f64)> {
        self.points
            .iter()
            .map(|p| (p.m as f64, p.v as f64))
            .collect()
    }

    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "m,V")?;
        for p in &self.points {
            writeln!(out, "{},{}", p.m, p.v)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeapsFit {
    #[serde(rename = "K")]
    pub k: f64,
    pub beta: f64,
    pub rmse_log: f64,
}

/// Prefix lengths at which the curve is sampled; always ends at `len`.
pub fn sample_positions(len: usize, n_samples: usize, spacing: Spacing) -> Vec<usize> {
    if len == 0 || n_samples == 0 {
        return Vec::new();
    }
    if n_samples >= len {
        return (1..=len).collect();
    }
    let mut out: Vec<usize> = match spacing {
        Spacing::Linear => (1..=n_samples)
            .map(|k| (k * len).div_ceil(n_samples))
            .collect(),
        Spacing::Log if n_samples == 1 => vec![len],
        Spacing::Log => {
            let top = (len as f64).ln();
            (0..n_samples)
                .map(|k| {
                    let m = (top * k as f64 / (n_samples - 1) as f64).exp().round() as usize;
                    m.clamp(1, len)
                })
                .collect()
        }
    };
    out.dedup();
    if out.last() != Some(&len) {
        out.push(len);
    }
    out
}

/// Counts distinct items over growing prefixes in a single pass.
pub fn vocab_growth<T: Hash + Eq>(
    items: &[T],
    n_samples: usize,
    spacing: Spacing,
) -> Result<GrowthCurve> {
    if items.is_empty() {
        return Err(Error::EmptySequence);
    }
    if n_samples == 0 {
        return Err(Error::TooFewPoints { need: 1, got: 0 });
    }
    let positions = sample_positions(items.len(), n_samples, spacing);
    let mut seen: HashSet<&T> = HashSet::new();
    let mut points = Vec::with_capacity(positions.len());
    let mut next = positions.iter().peekable();
    for (i, item) in items.iter().enumerate() {
        seen.insert(item);
        if next.peek() == Some(&&(i + 1)) {
            next.next();
            points.push(GrowthPoint {
                m: (i + 1) as u64,
                v: seen.len() as u64,
            });
        }
    }
    Ok(GrowthCurve { points })
}

/// Ordinary least squares of `ln V` on `ln m`.
pub fn fit_log_log(points: &[(f64, f64)]) -> Result<HeapsFit> {
    if points.len() < 2 {
        return Err(Error::TooFewPoints {
            need: 2,
            got: points.len(),
        });
    }
    if let Some(&(m, v)) = points.iter().find(|(m, v)| !(*m > 0.0 && *v > 0.0)) {
        return Err(Error::NonPositivePoint { m, v });
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mean_x).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::ZeroVariance("log m"));
    }
    let sxy: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - mean_x) * (y - mean_y))
        .sum();
    let beta = sxy / sxx;
    let intercept = mean_y - beta * mean_x;
    let sse: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - (intercept + beta * x)).powi(2))
        .sum();
    Ok(HeapsFit {
        k: intercept.exp(),
        beta,
        rmse_log: (sse / n).sqrt(),
    })
}

pub fn fit_heaps(curve: &GrowthCurve) -> Result<HeapsFit> {
    fit_log_log(&curve.as_f64_pairs())
}
