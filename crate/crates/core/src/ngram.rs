//! N-gram extraction and rank-frequency tables.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::io::Write;

use crate::error::{Error, Result};

/// Gram order, at least 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NGramSpec(usize);

impl NGramSpec {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidOrder);
        }
        Ok(NGramSpec(n))
    }

    pub fn n(self) -> usize {
        self.0
    }
}

/// Sliding windows of length `n` with stride 1.
pub fn extract_ngrams(seq: &[u32], spec: NGramSpec) -> std::slice::Windows<'_, u32> {
    seq.windows(spec.n())
}

/// Like [`extract_ngrams`] but drops every window containing an ID for which
/// `is_marker` holds.
pub fn extract_ngrams_filtered<'a, F>(
    seq: &'a [u32],
    spec: NGramSpec,
    is_marker: F,
) -> impl Iterator<Item = &'a [u32]>
where
    F: Fn(u32) -> bool + 'a,
{
    seq.windows(spec.n())
        .filter(move |w| !w.iter().any(|&id| is_marker(id)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedEntry {
    pub gram: Vec<u32>,
    pub frequency: f64,
}

/// Frequencies sorted descending, ties broken by the gram's lexicographic order.
/// Rank `r` is the 1-based position in `entries`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RankedDistribution {
    entries: Vec<RankedEntry>,
    total_mass: f64,
}

impl RankedDistribution {
    /// Builds a ranking from (gram, weight) pairs. Grams must be distinct and
    /// weights positive.
    pub fn from_weights(items: impl IntoIterator<Item = (Vec<u32>, f64)>) -> Self {
        let mut entries: Vec<RankedEntry> = items
            .into_iter()
            .map(|(gram, frequency)| RankedEntry { gram, frequency })
            .collect();
        debug_assert!(entries.iter().all(|e| e.frequency > 0.0));
        entries.sort_unstable_by(|a, b| match b.frequency.total_cmp(&a.frequency) {
            Ordering::Equal => a.gram.cmp(&b.gram),
            ord => ord,
        });
        let total_mass = entries.iter().map(|e| e.frequency).sum();
        RankedDistribution {
            entries,
            total_mass,
        }
    }

    pub fn entries(&self) -> &[RankedEntry] {
        &self.entries
    }

    /// Frequency at 1-based rank `r`.
    pub fn frequency_at(&self, rank: usize) -> Option<f64> {
        rank.checked_sub(1)
            .and_then(|i| self.entries.get(i))
            .map(|e| e.frequency)
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.frequency).collect()
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    /// Number of distinct grams.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Writes `rank,frequency` rows.
    pub fn write_rank_frequency_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "rank,frequency")?;
        for (i, e) in self.entries.iter().enumerate() {
            writeln!(out, "{},{}", i + 1, e.frequency)?;
        }
        Ok(())
    }

    /// Writes `rank,frequency,ngram` rows; `label` renders one token.
    pub fn write_gram_csv<F>(&self, mut out: impl Write, label: F) -> std::io::Result<()>
    where
        F: Fn(u32) -> String,
    {
        writeln!(out, "rank,frequency,ngram")?;
        for (i, e) in self.entries.iter().enumerate() {
            let gram: Vec<String> = e.gram.iter().map(|&t| label(t)).collect();
            let gram = gram.join(" ");
            let gram = if gram.contains([',', '"', '\n']) {
                format!("\"{}\"", gram.replace('"', "\"\""))
            } else {
                gram
            };
            writeln!(out, "{},{},{}", i + 1, e.frequency, gram)?;
        }
        Ok(())
    }
}

/// Exact multiset counts of grams, mergeable across utterances.
#[derive(Debug, Clone, Default)]
pub struct NGramCounts {
    counts: HashMap<Box<[u32]>, u64>,
    total: u64,
}

impl NGramCounts {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, gram: &[u32]) {
        self.total += 1;
        if let Some(c) = self.counts.get_mut(gram) {
            *c += 1;
        } else {
            self.counts.insert(gram.into(), 1);
        }
    }

    pub fn extend<'a>(&mut self, grams: impl IntoIterator<Item = &'a [u32]>) {
        for g in grams {
            self.add(g);
        }
    }

    pub fn merge(&mut self, other: NGramCounts) {
        self.total += other.total;
        for (gram, c) in other.counts {
            *self.counts.entry(gram).or_insert(0) += c;
        }
    }

    pub fn count(&self, gram: &[u32]) -> u64 {
        self.counts.get(gram).copied().unwrap_or(0)
    }

    /// Number of grams added.
    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    pub fn into_ranked(self) -> RankedDistribution {
        RankedDistribution::from_weights(
            self.counts
                .into_iter()
                .map(|(g, c)| (g.into_vec(), c as f64)),
        )
    }
}

pub fn count_frequencies<'a>(grams: impl IntoIterator<Item = &'a [u32]>) -> RankedDistribution {
    let mut counts = NGramCounts::new();
    counts.extend(grams);
    counts.into_ranked()
}
