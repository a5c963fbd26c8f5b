//! Statistical-law analysis of discrete token sequences.
//!
//! Measures how closely token streams, in particular neural audio codec
//! tokens, follow the regularities of natural language: Zipf's
//! rank-frequency law (fitted by maximum likelihood), Heaps' vocabulary
//! growth, and entropy/Huffman redundancy. Per-configuration statistics can
//! then be correlated with externally computed benchmark scores.
//!
//! The modules mirror the analysis pipeline:
//!
//! - [`corpus_io`]: load codec token matrices, text and benchmark tables
//! - [`preprocess`]: dedup, flatten with dimension offsets and markers, pooling
//! - [`ngram`]: n-gram windows and rank-frequency tables
//! - [`powerlaw`]: MLE exponent, KS distance and `x_min` selection
//! - [`heaps`]: vocabulary growth curves and `V = K m^beta` fits
//! - [`coding`]: entropy, Huffman lengths, redundancy, bit reduction
//! - [`correlate`]: Pearson r, trendlines, z-score distances
//! - [`synth`]: seeded generators for validation corpora
//! - [`pipeline`]: all of the above over a whole corpus

pub mod coding;
pub mod corpus_io;
pub mod correlate;
pub mod error;
pub mod heaps;
pub mod ngram;
pub mod pipeline;
pub mod powerlaw;
pub mod preprocess;
pub mod synth;

pub use error::{Error, ErrorKind, Result};
