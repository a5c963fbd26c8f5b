//! Entropy, Huffman code lengths and the redundancy figures derived from them.
//!
//! Symbols are indices into a weight slice. Weights may be fractional.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_weights(weights: &[f64]) -> Result<f64> {
    if let Some(&w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
        return Err(Error::InvalidWeight(w));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::EmptyDistribution);
    }
    Ok(total)
}

/// Shannon entropy in bits of the normalised weights.
pub fn entropy(weights: &[f64]) -> Result<f64> {
    let total = check_weights(weights)?;
    // p is tested after division: a subnormal weight can still round to 0
    let h: f64 = weights
        .iter()
        .map(|&w| w / total)
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.log2())
        .sum();
    Ok(h.max(0.0))
}

/// Code length per symbol of a Huffman code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HuffmanCode {
    lengths: Vec<u32>,
}

impl HuffmanCode {
    pub fn lengths(&self) -> &[u32] {
        &self.lengths
    }

    pub fn len(&self) -> usize {
        self.lengths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lengths.is_empty()
    }

    pub fn max_length(&self) -> u32 {
        self.lengths.iter().copied().max().unwrap_or(0)
    }

    /// Canonical codewords as '0'/'1' strings, indexed by symbol. Codes are
    /// assigned in order of (length, symbol).
    pub fn canonical_codewords(&self) -> Vec<String> {
        let mut order: Vec<usize> = (0..self.lengths.len()).collect();
        order.sort_by_key(|&s| (self.lengths[s], s));
        let mut words = vec![String::new(); self.lengths.len()];
        // code as a growing bit vector, MSB first
        let mut code: Vec<bool> = Vec::new();
        for (i, &sym) in order.iter().enumerate() {
            let len = self.lengths[sym] as usize;
            if i > 0 {
                // increment
                let mut k = code.len();
                while k > 0 {
                    k -= 1;
                    if code[k] {
                        code[k] = false;
                    } else {
                        code[k] = true;
                        break;
                    }
                }
            }
            code.resize(len, false);
            words[sym] = code.iter().map(|&b| if b { '1' } else { '0' }).collect();
        }
        words
    }

    pub fn kraft_sum(&self) -> f64 {
        self.lengths.iter().map(|&l| 0.5f64.powi(l as i32)).sum()
    }

    pub fn write_csv(&self, mut out: impl std::io::Write) -> std::io::Result<()> {
        writeln!(out, "symbol,length")?;
        for (s, l) in self.lengths.iter().enumerate() {
            writeln!(out, "{s},{l}")?;
        }
        Ok(())
    }
}

/// Builds Huffman code lengths.
///
/// Uses the two-queue construction: leaves sorted by (weight, symbol), merged
/// nodes appended in creation order. On equal weights a leaf is taken before
/// a merged node, and among leaves the lower symbol goes first. A single
/// symbol gets a 1-bit code.
pub fn build_huffman(weights: &[f64]) -> Result<HuffmanCode> {
    check_weights(weights)?;
    let v = weights.len();
    if v == 1 {
        return Ok(HuffmanCode { lengths: vec![1] });
    }

    let mut leaves: Vec<usize> = (0..v).collect();
    leaves.sort_by(|&a, &b| weights[a].total_cmp(&weights[b]).then(a.cmp(&b)));

    // nodes 0..v are leaves, v.. are merged nodes
    let mut parent = vec![usize::MAX; 2 * v - 1];
    let mut merged_weight: Vec<f64> = Vec::with_capacity(v - 1);
    let mut li = 0;
    let mut mi = 0;

    let take = |merged_weight: &Vec<f64>, li: &mut usize, mi: &mut usize| -> (usize, f64) {
        let leaf = leaves.get(*li).map(|&s| weights[s]);
        let node = merged_weight.get(*mi).copied();
        match (leaf, node) {
            (Some(lw), Some(nw)) if nw < lw => {
                *mi += 1;
                (v + *mi - 1, nw)
            }
            (Some(lw), _) => {
                *li += 1;
                (leaves[*li - 1], lw)
            }
            (None, Some(nw)) => {
                *mi += 1;
                (v + *mi - 1, nw)
            }
            (None, None) => unreachable!("queue exhausted before the root"),
        }
    };

    for _ in 0..v - 1 {
        let (a, wa) = take(&merged_weight, &mut li, &mut mi);
        let (b, wb) = take(&merged_weight, &mut li, &mut mi);
        let id = v + merged_weight.len();
        parent[a] = id;
        parent[b] = id;
        merged_weight.push(wa + wb);
    }

    // merged nodes are created after their children, so depths resolve top-down
    let root = 2 * v - 2;
    let mut depth = vec![0u32; 2 * v - 1];
    for node in (0..root).rev() {
        depth[node] = depth[parent[node]] + 1;
    }
    Ok(HuffmanCode {
        lengths: depth[..v].to_vec(),
    })
}

/// Reference length of a fixed-length code, used for the bit reduction rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FixedBaseline {
    /// `max(1, ceil(log2 V))` over the observed support.
    #[default]
    Observed,
    /// `max(1, ceil(log2 size))` for a nominal alphabet size.
    Nominal(u64),
}

impl FixedBaseline {
    pub fn bits(self, support: usize) -> u32 {
        let size = match self {
            FixedBaseline::Observed => support as u64,
            FixedBaseline::Nominal(size) => size,
        };
        ceil_log2(size).max(1)
    }
}

fn ceil_log2(x: u64) -> u32 {
    if x <= 1 {
        0
    } else {
        64 - (x - 1).leading_zeros()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CodingStats {
    /// Entropy in bits.
    #[serde(rename = "H")]
    pub entropy: f64,
    /// Average Huffman code length in bits.
    #[serde(rename = "L")]
    pub avg_length: f64,
    /// `(L - H) / L`.
    #[serde(rename = "R")]
    pub redundancy: f64,
    /// `(L_fixed - L) / L_fixed`.
    pub bit_reduction: f64,
    /// Support size.
    #[serde(rename = "V")]
    pub support: usize,
}

impl CodingStats {
    /// A one-symbol source has a 1-bit code and no information,
    /// so its redundancy is 1.
    pub fn is_degenerate(&self) -> bool {
        self.support < 2
    }
}

pub fn coding_stats(weights: &[f64]) -> Result<CodingStats> {
    coding_stats_with(weights, FixedBaseline::Observed)
}

pub fn coding_stats_with(weights: &[f64], baseline: FixedBaseline) -> Result<CodingStats> {
    let total = check_weights(weights)?;
    let code = build_huffman(weights)?;
    let h = entropy(weights)?;
    let l: f64 = weights
        .iter()
        .zip(code.lengths())
        .map(|(&w, &len)| w / total * f64::from(len))
        .sum();
    let support = weights.iter().filter(|&&w| w > 0.0).count();
    let fixed = f64::from(baseline.bits(support));
    Ok(CodingStats {
        entropy: h,
        avg_length: l,
        redundancy: if l > 0.0 { (l - h) / l } else { 0.0 },
        bit_reduction: (fixed - l) / fixed,
        support,
    })
}
