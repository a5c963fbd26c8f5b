//! Turning codec token matrices into flat analysis sequences.
//!
//! Dimension `d` of a codec with codebook size `C` is mapped onto the ID
//! range `[d*C, (d+1)*C)`. Each dimension block is wrapped in a start and an
//! end marker placed above every payload range:
//!
//! ```text
//! start(d) = n_dims*C + 2d
//! end(d)   = n_dims*C + 2d + 1
//! ```

use std::collections::BTreeMap;

use crate::corpus_io::{CodecUtterance, TokenSequence};
use crate::error::{Error, Result};

/// Offset-and-marker layout for one codec shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlattenScheme {
    n_dims: usize,
    codebook_size: u32,
    marker_base: u32,
}

/// Decoded meaning of one flat ID.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlatToken {
    Payload { dim: usize, token: u32 },
    Start(usize),
    End(usize),
}

impl FlattenScheme {
    pub fn new(n_dims: usize, codebook_size: u32) -> Result<Self> {
        if n_dims == 0 {
            return Err(Error::InvalidScheme("n_dims must be at least 1".into()));
        }
        if codebook_size == 0 {
            return Err(Error::InvalidScheme(
                "codebook_size must be positive".into(),
            ));
        }
        let marker_base = (n_dims as u64) * u64::from(codebook_size);
        let top = marker_base + 2 * n_dims as u64;
        if top > u64::from(u32::MAX) {
            return Err(Error::InvalidScheme(format!(
                "{n_dims} dims x {codebook_size} codes overflows 32-bit token IDs"
            )));
        }
        Ok(FlattenScheme {
            n_dims,
            codebook_size,
            marker_base: marker_base as u32,
        })
    }

    pub fn for_utterance(utt: &CodecUtterance) -> Result<Self> {
        Self::new(utt.n_dims(), utt.codebook_size)
    }

    pub fn n_dims(&self) -> usize {
        self.n_dims
    }

    pub fn codebook_size(&self) -> u32 {
        self.codebook_size
    }

    pub fn marker_base(&self) -> u32 {
        self.marker_base
    }

    pub fn start_marker(&self, dim: usize) -> u32 {
        debug_assert!(dim < self.n_dims);
        self.marker_base + 2 * dim as u32
    }

    pub fn end_marker(&self, dim: usize) -> u32 {
        self.start_marker(dim) + 1
    }

    pub fn payload_id(&self, dim: usize, token: u32) -> u32 {
        debug_assert!(dim < self.n_dims && token < self.codebook_size);
        dim as u32 * self.codebook_size + token
    }

    /// Exclusive upper bound on every ID this scheme emits.
    pub fn alphabet_bound(&self) -> u32 {
        self.marker_base + 2 * self.n_dims as u32
    }

    pub fn is_marker(&self, id: u32) -> bool {
        id >= self.marker_base && id < self.alphabet_bound()
    }

    pub fn decode(&self, id: u32) -> Option<FlatToken> {
        if id < self.marker_base {
            Some(FlatToken::Payload {
                dim: (id / self.codebook_size) as usize,
                token: id % self.codebook_size,
            })
        } else if id < self.alphabet_bound() {
            let offset = id - self.marker_base;
            let dim = (offset / 2) as usize;
            Some(if offset.is_multiple_of(2) {
                FlatToken::Start(dim)
            } else {
                FlatToken::End(dim)
            })
        } else {
            None
        }
    }
}

/// Collapses each run of equal adjacent items to its first element.
pub fn dedup(items: &[u32]) -> Vec<u32> {
    let mut out = items.to_vec();
    out.dedup();
    out
}

pub fn dedup_sequence(seq: &TokenSequence) -> TokenSequence {
    TokenSequence::new_unchecked(dedup(seq.items()), seq.alphabet_bound())
}

/// Serialises a token matrix into one flat sequence of offset IDs with
/// per-dimension start/end markers. With `dedup_rows`, runs are collapsed
/// inside each dimension before offsetting.
pub fn flatten(
    utt: &CodecUtterance,
    scheme: &FlattenScheme,
    dedup_rows: bool,
) -> Result<TokenSequence> {
    if utt.n_dims() != scheme.n_dims {
        return Err(Error::DimensionMismatch {
            expected: scheme.n_dims,
            found: utt.n_dims(),
        });
    }
    let payload: usize = utt.tokens.iter().map(Vec::len).sum();
    let mut out = Vec::with_capacity(payload + 2 * scheme.n_dims);
    for (dim, row) in utt.tokens.iter().enumerate() {
        if let Some(frame) = row.iter().position(|&t| t >= scheme.codebook_size) {
            return Err(Error::TokenOutOfRange {
                utterance_id: utt.utterance_id.clone(),
                row: dim,
                frame,
                token: row[frame],
                codebook_size: scheme.codebook_size,
            });
        }
        out.push(scheme.start_marker(dim));
        let mut prev = None;
        for &token in row {
            if dedup_rows && prev == Some(token) {
                continue;
            }
            prev = Some(token);
            out.push(scheme.payload_id(dim, token));
        }
        out.push(scheme.end_marker(dim));
    }
    assert!(
        out.iter().all(|&id| id < scheme.alphabet_bound()),
        "flattened ID escaped the scheme's alphabet"
    );
    Ok(TokenSequence::new_unchecked(out, scheme.alphabet_bound()))
}

/// Inverse of [`flatten`]: recovers the per-dimension rows.
pub fn unflatten(seq: &[u32], scheme: &FlattenScheme) -> Result<Vec<Vec<u32>>> {
    let malformed =
        |position: usize, message: String| Error::MalformedFlatSequence { position, message };
    let mut rows = Vec::with_capacity(scheme.n_dims);
    let mut current: Option<(usize, Vec<u32>)> = None;
    for (pos, &id) in seq.iter().enumerate() {
        match scheme.decode(id) {
            None => return Err(malformed(pos, format!("ID {id} outside the scheme"))),
            Some(FlatToken::Start(dim)) => {
                if current.is_some() {
                    return Err(malformed(pos, "start marker inside an open block".into()));
                }
                if dim != rows.len() {
                    return Err(malformed(
                        pos,
                        format!("expected block {}, found {dim}", rows.len()),
                    ));
                }
                current = Some((dim, Vec::new()));
            }
            Some(FlatToken::End(dim)) => match current.take() {
                Some((open, row)) if open == dim => rows.push(row),
                _ => {
                    return Err(malformed(
                        pos,
                        format!("unmatched end marker for dimension {dim}"),
                    ))
                }
            },
            Some(FlatToken::Payload { dim, token }) => match current.as_mut() {
                Some((open, row)) if *open == dim => row.push(token),
                _ => {
                    return Err(malformed(
                        pos,
                        format!("payload of dimension {dim} outside its block"),
                    ))
                }
            },
        }
    }
    if current.is_some() {
        return Err(malformed(seq.len(), "unterminated block".into()));
    }
    if rows.len() != scheme.n_dims {
        return Err(Error::DimensionMismatch {
            expected: scheme.n_dims,
            found: rows.len(),
        });
    }
    Ok(rows)
}

/// Pools payload counts across dimensions by codebook index and divides by
/// the number of dimensions. Only indices that occur are present.
pub fn mean_token_counts<'a, I>(
    utts: I,
    scheme: &FlattenScheme,
    dedup_rows: bool,
) -> Result<BTreeMap<u32, f64>>
where
    I: IntoIterator<Item = &'a CodecUtterance>,
{
    let mut raw: BTreeMap<u32, u64> = BTreeMap::new();
    for utt in utts {
        if utt.n_dims() != scheme.n_dims {
            return Err(Error::DimensionMismatch {
                expected: scheme.n_dims,
                found: utt.n_dims(),
            });
        }
        for row in &utt.tokens {
            let mut prev = None;
            for &token in row {
                if token >= scheme.codebook_size {
                    return Err(Error::TokenAboveBound {
                        token,
                        bound: scheme.codebook_size,
                    });
                }
                if dedup_rows && prev == Some(token) {
                    continue;
                }
                prev = Some(token);
                *raw.entry(token).or_insert(0) += 1;
            }
        }
    }
    let dims = scheme.n_dims as f64;
    Ok(raw
        .into_iter()
        .map(|(id, c)| (id, c as f64 / dims))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn utt(tokens: Vec<Vec<u32>>, codebook_size: u32) -> CodecUtterance {
        CodecUtterance {
            utterance_id: "u".into(),
            config_id: "c".into(),
            codebook_size,
            tokens,
        }
    }

    #[test]
    fn dedup_runs() {
        assert_eq!(dedup(&[5, 5, 7, 7, 5]), vec![5, 7, 5]);
        assert_eq!(dedup(&[]), Vec::<u32>::new());
        assert_eq!(dedup(&[3, 3, 3, 3]), vec![3]);
    }

    #[test]
    fn flatten_two_dims() {
        let scheme = FlattenScheme::new(2, 1024).unwrap();
        let flat = flatten(&utt(vec![vec![10, 11], vec![10, 11]], 1024), &scheme, false).unwrap();
        assert_eq!(flat.items(), &[2048, 10, 11, 2049, 2050, 1034, 1035, 2051]);
        assert_eq!(flat.alphabet_bound(), 2052);
    }

    #[test]
    fn flatten_one_dim() {
        let scheme = FlattenScheme::new(1, 4).unwrap();
        let flat = flatten(&utt(vec![vec![0, 1, 2]], 4), &scheme, false).unwrap();
        assert_eq!(flat.items(), &[4, 0, 1, 2, 5]);
    }

    #[test]
    fn flatten_dimension_mismatch() {
        let scheme = FlattenScheme::new(2, 4).unwrap();
        let err = flatten(&utt(vec![vec![0], vec![0], vec![0]], 4), &scheme, false).unwrap_err();
        assert!(matches!(
            err,
            Error::DimensionMismatch {
                expected: 2,
                found: 3
            }
        ));
    }

    #[test]
    fn flatten_rejects_out_of_codebook() {
        let scheme = FlattenScheme::new(1, 4).unwrap();
        let err = flatten(&utt(vec![vec![4]], 8), &scheme, false).unwrap_err();
        assert!(matches!(err, Error::TokenOutOfRange { token: 4, .. }));
    }

    #[test]
    fn flatten_with_dedup_per_dimension() {
        let scheme = FlattenScheme::new(2, 4).unwrap();
        let flat = flatten(&utt(vec![vec![1, 1, 2], vec![3, 3, 3]], 4), &scheme, true).unwrap();
        assert_eq!(flat.items(), &[8, 1, 2, 9, 10, 7, 11]);
        assert_eq!(
            unflatten(flat.items(), &scheme).unwrap(),
            vec![vec![1, 2], vec![3]]
        );
    }

    #[test]
    fn unflatten_rejects_garbage() {
        let scheme = FlattenScheme::new(1, 4).unwrap();
        assert!(unflatten(&[4, 0, 1], &scheme).is_err());
        assert!(unflatten(&[0, 4, 5], &scheme).is_err());
        assert!(unflatten(&[4, 5, 4, 5], &scheme).is_err());
        assert!(unflatten(&[4, 9, 5], &scheme).is_err());
    }

    #[test]
    fn decode_markers() {
        let scheme = FlattenScheme::new(3, 10).unwrap();
        assert_eq!(scheme.decode(30), Some(FlatToken::Start(0)));
        assert_eq!(scheme.decode(35), Some(FlatToken::End(2)));
        assert_eq!(
            scheme.decode(17),
            Some(FlatToken::Payload { dim: 1, token: 7 })
        );
        assert_eq!(scheme.decode(36), None);
        assert!(scheme.is_marker(30) && !scheme.is_marker(29) && !scheme.is_marker(36));
    }

    #[test]
    fn mean_tokens_pool_by_residue() {
        let scheme = FlattenScheme::new(2, 8).unwrap();
        let u = utt(
            vec![vec![5, 1, 5, 1, 5, 1, 5], vec![5, 2, 5, 2, 2, 2, 2]],
            8,
        );
        let pooled = mean_token_counts([&u], &scheme, false).unwrap();
        assert_eq!(pooled[&5], 3.0);
        assert_eq!(pooled[&1], 1.5);
        assert_eq!(pooled[&2], 2.5);
    }

    #[test]
    fn mean_tokens_identity_and_empty() {
        let scheme = FlattenScheme::new(1, 8).unwrap();
        let u = utt(vec![vec![1, 1, 3]], 8);
        let pooled = mean_token_counts([&u], &scheme, false).unwrap();
        assert_eq!(
            pooled.into_iter().collect::<Vec<_>>(),
            vec![(1, 2.0), (3, 1.0)]
        );

        let empty = utt(vec![vec![]], 8);
        assert!(mean_token_counts([&empty], &scheme, false)
            .unwrap()
            .is_empty());
        assert!(mean_token_counts(std::iter::empty(), &scheme, false)
            .unwrap()
            .is_empty());
    }
}
