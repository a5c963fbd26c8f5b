//! End-to-end analysis of a corpus: flatten, count n-grams, fit the laws.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coding::{self, CodingStats, FixedBaseline};
use crate::corpus_io::{CodecCorpus, CodecUtterance, TokenSequence};
use crate::correlate::{StatPoint, Statistic};
use crate::error::{Error, Result};
use crate::heaps::{self, GrowthCurve, HeapsFit, Spacing, DEFAULT_GROWTH_SAMPLES};
use crate::ngram::{self, NGramSpec, RankedDistribution};
use crate::powerlaw::{self, PowerLawFit, XminSearch};
use crate::preprocess::{self, FlattenScheme};

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisOptions {
    pub orders: Vec<NGramSpec>,
    /// Collapse runs inside each codec dimension before flattening.
    pub dedup: bool,
    /// Drop n-gram windows that contain a dimension marker.
    pub exclude_marker_windows: bool,
    pub growth_samples: usize,
    pub spacing: Spacing,
    pub xmin: XminSearch,
    pub baseline: FixedBaseline,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            orders: [1, 2, 3, 4, 6]
                .into_iter()
                .map(|n| NGramSpec::new(n).unwrap())
                .collect(),
            dedup: true,
            exclude_marker_windows: false,
            growth_samples: DEFAULT_GROWTH_SAMPLES,
            spacing: Spacing::Log,
            xmin: XminSearch::default(),
            baseline: FixedBaseline::Observed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceKind {
    Codec,
    Text,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderAnalysis {
    pub n: usize,
    /// Number of n-gram windows counted.
    pub grams: u64,
    /// Distinct n-grams.
    pub distinct: usize,
    pub zipf: PowerLawFit,
    pub heaps: HeapsFit,
    pub coding: CodingStats,
    #[serde(skip)]
    pub ranked: RankedDistribution,
    #[serde(skip)]
    pub growth: GrowthCurve,
}

/// Zipf and coding figures for the dimension-pooled token distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanTokenAnalysis {
    pub zipf: PowerLawFit,
    pub coding: CodingStats,
    #[serde(skip)]
    pub ranked: RankedDistribution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigAnalysis {
    pub config_id: String,
    pub source: SourceKind,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub n_dims: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub codebook_size: Option<u32>,
    pub utterances: usize,
    /// Length of all flattened sequences together.
    pub tokens: u64,
    pub orders: Vec<OrderAnalysis>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mean_token: Option<MeanTokenAnalysis>,
}

impl ConfigAnalysis {
    pub fn stat_points(&self) -> Vec<StatPoint> {
        let mut out = Vec::with_capacity(self.orders.len() * Statistic::ALL.len());
        for order in &self.orders {
            for statistic in Statistic::ALL {
                let value = match statistic {
                    Statistic::Alpha => order.zipf.alpha,
                    Statistic::Eta => order.zipf.eta,
                    Statistic::Ks => order.zipf.ks,
                    Statistic::K => order.heaps.k,
                    Statistic::Beta => order.heaps.beta,
                    Statistic::H => order.coding.entropy,
                    Statistic::L => order.coding.avg_length,
                    Statistic::R => order.coding.redundancy,
                    Statistic::BitReduction => order.coding.bit_reduction,
                };
                out.push(StatPoint {
                    config_id: self.config_id.clone(),
                    n: order.n,
                    statistic,
                    value,
                });
            }
        }
        out
    }
}

pub fn stat_points(analyses: &[ConfigAnalysis]) -> Vec<StatPoint> {
    analyses
        .iter()
        .flat_map(ConfigAnalysis::stat_points)
        .collect()
}

fn fit_distribution(
    ranked: &RankedDistribution,
    opts: &AnalysisOptions,
) -> Result<(PowerLawFit, CodingStats)> {
    let freqs = ranked.frequencies();
    let zipf = powerlaw::select_xmin(&freqs, &opts.xmin).map_err(|e| e.context("zipf fit"))?;
    let coding =
        coding::coding_stats_with(&freqs, opts.baseline).map_err(|e| e.context("coding stats"))?;
    Ok((zipf, coding))
}

fn analyze_order<F>(
    seqs: &[&[u32]],
    n: NGramSpec,
    is_marker: Option<F>,
    opts: &AnalysisOptions,
) -> Result<OrderAnalysis>
where
    F: Fn(u32) -> bool + Copy,
{
    // windows never cross utterance boundaries
    let grams: Vec<&[u32]> = match is_marker {
        Some(f) => seqs
            .iter()
            .flat_map(|s| ngram::extract_ngrams_filtered(s, n, f))
            .collect(),
        None => seqs
            .iter()
            .flat_map(|s| ngram::extract_ngrams(s, n))
            .collect(),
    };
    let growth = heaps::vocab_growth(&grams, opts.growth_samples, opts.spacing)
        .map_err(|e| e.context("vocabulary growth"))?;
    let heaps_fit = heaps::fit_heaps(&growth).map_err(|e| e.context("heaps fit"))?;
    let ranked = ngram::count_frequencies(grams.iter().copied());
    let (zipf, coding) = fit_distribution(&ranked, opts)?;
    Ok(OrderAnalysis {
        n: n.n(),
        grams: grams.len() as u64,
        distinct: ranked.len(),
        zipf,
        heaps: heaps_fit,
        coding,
        ranked,
        growth,
    })
}

fn analyze_orders<F>(
    label: &str,
    seqs: &[&[u32]],
    is_marker: Option<F>,
    opts: &AnalysisOptions,
) -> Result<Vec<OrderAnalysis>>
where
    F: Fn(u32) -> bool + Copy + Send + Sync,
{
    opts.orders
        .par_iter()
        .map(|&n| {
            analyze_order(seqs, n, is_marker, opts)
                .map_err(|e| e.context(format!("{label}, n = {}", n.n())))
        })
        .collect()
}

/// Analyses the utterances of one codec configuration.
pub fn analyze_codec_config(
    config_id: &str,
    utts: &[&CodecUtterance],
    opts: &AnalysisOptions,
) -> Result<ConfigAnalysis> {
    let first = utts.first().ok_or_else(|| Error::InvalidConfig {
        config_id: config_id.to_string(),
        message: "no utterances".into(),
    })?;
    let scheme = FlattenScheme::for_utterance(first)
        .map_err(|e| e.context(format!("config {config_id}")))?;
    let flat: Vec<TokenSequence> = utts
        .iter()
        .map(|u| {
            preprocess::flatten(u, &scheme, opts.dedup).map_err(|e| {
                e.context(format!(
                    "config {config_id}, utterance {}, flatten",
                    u.utterance_id
                ))
            })
        })
        .collect::<Result<_>>()?;
    let seqs: Vec<&[u32]> = flat.iter().map(TokenSequence::items).collect();
    let tokens = seqs.iter().map(|s| s.len() as u64).sum();

    let marker_filter = opts
        .exclude_marker_windows
        .then_some(move |id: u32| scheme.is_marker(id));
    let label = format!("config {config_id}");
    let orders = analyze_orders(&label, &seqs, marker_filter, opts)?;

    let pooled = preprocess::mean_token_counts(utts.iter().copied(), &scheme, opts.dedup)
        .map_err(|e| e.context(format!("{label}, mean token")))?;
    let mean_token = if pooled.is_empty() {
        None
    } else {
        let ranked =
            RankedDistribution::from_weights(pooled.into_iter().map(|(id, w)| (vec![id], w)));
        let (zipf, coding) = fit_distribution(&ranked, opts)
            .map_err(|e| e.context(format!("{label}, mean token")))?;
        Some(MeanTokenAnalysis {
            zipf,
            coding,
            ranked,
        })
    };

    Ok(ConfigAnalysis {
        config_id: config_id.to_string(),
        source: SourceKind::Codec,
        n_dims: Some(scheme.n_dims()),
        codebook_size: Some(scheme.codebook_size()),
        utterances: utts.len(),
        tokens,
        orders,
        mean_token,
    })
}

/// Analyses every configuration in the corpus, ordered by config_id.
pub fn analyze_codec_corpus(
    corpus: &CodecCorpus,
    opts: &AnalysisOptions,
) -> Result<Vec<ConfigAnalysis>> {
    let groups: BTreeMap<&str, Vec<&CodecUtterance>> = corpus.by_config();
    let groups: Vec<(&str, Vec<&CodecUtterance>)> = groups.into_iter().collect();
    groups
        .par_iter()
        .map(|(id, utts)| analyze_codec_config(id, utts, opts))
        .collect()
}

/// Analyses a word sequence (the natural-language baseline). No dedup or
/// marker handling applies.
pub fn analyze_text(
    label: &str,
    seq: &TokenSequence,
    opts: &AnalysisOptions,
) -> Result<ConfigAnalysis> {
    if seq.is_empty() {
        return Err(Error::EmptySequence.context(format!("text {label}")));
    }
    let seqs = [seq.items()];
    let orders = analyze_orders(
        &format!("text {label}"),
        &seqs,
        None::<fn(u32) -> bool>,
        opts,
    )?;
    Ok(ConfigAnalysis {
        config_id: label.to_string(),
        source: SourceKind::Text,
        n_dims: None,
        codebook_size: None,
        utterances: 1,
        tokens: seq.len() as u64,
        orders,
        mean_token: None,
    })
}
