//! Correlating per-configuration token statistics with benchmark metrics.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus_io::{BenchmarkRecord, Metric};
use crate::error::{Error, Result};

pub const MIN_PAIRS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Statistic {
    #[serde(rename = "alpha")]
    Alpha,
    #[serde(rename = "eta")]
    Eta,
    #[serde(rename = "ks")]
    Ks,
    #[serde(rename = "K")]
    K,
    #[serde(rename = "beta")]
    Beta,
    #[serde(rename = "H")]
    H,
    #[serde(rename = "L")]
    L,
    #[serde(rename = "R")]
    R,
    #[serde(rename = "bit_reduction")]
    BitReduction,
}

impl Statistic {
    pub const ALL: [Statistic; 9] = [
        Statistic::Alpha,
        Statistic::Eta,
        Statistic::Ks,
        Statistic::K,
        Statistic::Beta,
        Statistic::H,
        Statistic::L,
        Statistic::R,
        Statistic::BitReduction,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Statistic::Alpha => "alpha",
            Statistic::Eta => "eta",
            Statistic::Ks => "ks",
            Statistic::K => "K",
            Statistic::Beta => "beta",
            Statistic::H => "H",
            Statistic::L => "L",
            Statistic::R => "R",
            Statistic::BitReduction => "bit_reduction",
        }
    }
}

impl fmt::Display for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Statistic {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Statistic::ALL
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| format!("unknown statistic {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatPoint {
    pub config_id: String,
    pub n: usize,
    pub statistic: Statistic,
    pub value: f64,
}

fn moments(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64, f64, f64)> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            left: xs.len(),
            right: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(Error::TooFewPoints {
            need: 2,
            got: xs.len(),
        });
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        let dx = x - mx;
        let dy = y - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 {
        return Err(Error::ZeroVariance("x"));
    }
    if syy == 0.0 {
        return Err(Error::ZeroVariance("y"));
    }
    Ok((mx, my, sxx, syy, sxy))
}

/// Pearson product-moment correlation.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    let (_, _, sxx, syy, sxy) = moments(xs, ys)?;
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Trendline {
    pub slope: f64,
    pub intercept: f64,
}

impl Trendline {
    pub fn predict(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }
}

/// Least-squares line of `ys` on `xs`.
pub fn trendline(xs: &[f64], ys: &[f64]) -> Result<Trendline> {
    let (mx, my, sxx, _, sxy) = moments(xs, ys)?;
    let slope = sxy / sxx;
    Ok(Trendline {
        slope,
        intercept: my - slope * mx,
    })
}

/// Euclidean distance of each point to `reference` after z-scoring both
/// coordinates over the pool `points + [reference]` (population std).
pub fn zscore_distance(points: &[(f64, f64)], reference: (f64, f64)) -> Result<Vec<f64>> {
    if points.is_empty() {
        return Err(Error::TooFewPoints { need: 2, got: 1 });
    }
    let n = (points.len() + 1) as f64;
    let pool = || points.iter().copied().chain(std::iter::once(reference));
    let mean = |f: fn((f64, f64)) -> f64| pool().map(f).sum::<f64>() / n;
    let std = |f: fn((f64, f64)) -> f64, m: f64| {
        (pool().map(|p| (f(p) - m).powi(2)).sum::<f64>() / n).sqrt()
    };
    let (m0, m1) = (mean(|p| p.0), mean(|p| p.1));
    let (s0, s1) = (std(|p| p.0, m0), std(|p| p.1, m1));
    if s0 == 0.0 {
        return Err(Error::ZeroVariance("first coordinate"));
    }
    if s1 == 0.0 {
        return Err(Error::ZeroVariance("second coordinate"));
    }
    let z = |p: (f64, f64)| ((p.0 - m0) / s0, (p.1 - m1) / s1);
    let zr = z(reference);
    Ok(points
        .iter()
        .map(|&p| {
            let zp = z(p);
            (zp.0 - zr.0).hypot(zp.1 - zr.1)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterPoint {
    pub config_id: String,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub statistic: Statistic,
    pub metric: Metric,
    pub n: usize,
    pub pairs: Vec<ScatterPoint>,
    pub r: f64,
    pub slope: f64,
    pub intercept: f64,
    /// Configs present on only one side of the join.
    pub excluded: Vec<String>,
}

impl CorrelationReport {
    pub fn write_scatter_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "config_id,x,y")?;
        for p in &self.pairs {
            writeln!(out, "{},{},{}", p.config_id, p.x, p.y)?;
        }
        Ok(())
    }
}

/// Inner-joins statistic values at order `n` with benchmark values on
/// `config_id` and correlates them.
pub fn correlate_metric(
    stats: &[StatPoint],
    records: &[BenchmarkRecord],
    statistic: Statistic,
    metric: Metric,
    n: usize,
) -> Result<CorrelationReport> {
    let xs: BTreeMap<&str, f64> = stats
        .iter()
        .filter(|p| p.statistic == statistic && p.n == n)
        .map(|p| (p.config_id.as_str(), p.value))
        .collect();
    let ys: BTreeMap<&str, f64> = records
        .iter()
        .filter(|r| r.metric == metric)
        .map(|r| (r.config_id.as_str(), r.value))
        .collect();

    let pairs: Vec<ScatterPoint> = xs
        .iter()
        .filter_map(|(&id, &x)| {
            ys.get(id).map(|&y| ScatterPoint {
                config_id: id.to_string(),
                x,
                y,
            })
        })
        .collect();
    let x_ids: BTreeSet<&str> = xs.keys().copied().collect();
    let y_ids: BTreeSet<&str> = ys.keys().copied().collect();
    let excluded: Vec<String> = x_ids
        .symmetric_difference(&y_ids)
        .map(|s| s.to_string())
        .collect();

    if pairs.len() < MIN_PAIRS {
        return Err(Error::InsufficientPairs {
            statistic: statistic.to_string(),
            metric: metric.to_string(),
            n,
            need: MIN_PAIRS,
            got: pairs.len(),
        });
    }
    let px: Vec<f64> = pairs.iter().map(|p| p.x).collect();
    let py: Vec<f64> = pairs.iter().map(|p| p.y).collect();
    let r = pearson(&px, &py)?;
    let line = trendline(&px, &py)?;
    Ok(CorrelationReport {
        statistic,
        metric,
        n,
        pairs,
        r,
        slope: line.slope,
        intercept: line.intercept,
        excluded,
    })
}
