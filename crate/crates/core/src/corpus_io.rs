//! Loading of token corpora and benchmark tables.
//!
//! Codec corpora are described by a JSON Lines manifest, one
//! `{"path": ..., "config_id": ...}` object per line. Each referenced file
//! holds a single utterance:
//!
//! ```text
//! {"utterance_id": "u1", "config_id": "E3", "codebook_size": 1024,
//!  "tokens": [[10, 11], [20, 21]]}
//! ```
//!
//! with one inner array per codec dimension. Relative paths in a manifest are
//! resolved against the manifest's directory.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Static description of one codec configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodecConfig {
    pub config_id: String,
    pub model_name: String,
    pub n_dims: usize,
    pub codebook_size: u32,
    pub sample_rate_hz: u32,
    pub kbps: f64,
}

impl CodecConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |message: &str| {
            Err(Error::InvalidConfig {
                config_id: self.config_id.clone(),
                message: message.to_string(),
            })
        };
        if self.config_id.is_empty() {
            return fail("empty config_id");
        }
        if self.n_dims < 1 {
            return fail("n_dims must be at least 1");
        }
        if self.codebook_size < 2 {
            return fail("codebook_size must be at least 2");
        }
        if self.sample_rate_hz == 0 {
            return fail("sample_rate_hz must be positive");
        }
        if !(self.kbps.is_finite() && self.kbps > 0.0) {
            return fail("kbps must be positive");
        }
        Ok(())
    }
}

/// Loads a JSON array of [`CodecConfig`] objects.
pub fn load_config_table(path: impl AsRef<Path>) -> Result<Vec<CodecConfig>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let configs: Vec<CodecConfig> = serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        line: None,
        source,
    })?;
    let mut seen = std::collections::HashSet::new();
    for config in &configs {
        config.validate()?;
        if !seen.insert(config.config_id.as_str()) {
            return Err(Error::DuplicateConfig(config.config_id.clone()));
        }
    }
    Ok(configs)
}

/// A dims x frames token matrix from one codec pass over one utterance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodecUtterance {
    pub utterance_id: String,
    pub config_id: String,
    pub codebook_size: u32,
    pub tokens: Vec<Vec<u32>>,
}

impl CodecUtterance {
    pub fn n_dims(&self) -> usize {
        self.tokens.len()
    }

    pub fn n_frames(&self) -> usize {
        self.tokens.first().map_or(0, Vec::len)
    }

    /// Checks the row-length and codebook-bound invariants.
    pub fn validate(&self) -> Result<()> {
        if self.tokens.is_empty() {
            return Err(Error::InvalidUtterance {
                utterance_id: self.utterance_id.clone(),
                message: "token matrix has no dimensions".into(),
            });
        }
        if self.codebook_size < 2 {
            return Err(Error::InvalidUtterance {
                utterance_id: self.utterance_id.clone(),
                message: format!("codebook_size {} is below 2", self.codebook_size),
            });
        }
        let expected = self.tokens[0].len();
        for (row, tokens) in self.tokens.iter().enumerate() {
            if tokens.len() != expected {
                return Err(Error::RaggedMatrix {
                    utterance_id: self.utterance_id.clone(),
                    row,
                    expected,
                    found: tokens.len(),
                });
            }
            if let Some(frame) = tokens.iter().position(|&t| t >= self.codebook_size) {
                return Err(Error::TokenOutOfRange {
                    utterance_id: self.utterance_id.clone(),
                    row,
                    frame,
                    token: tokens[frame],
                    codebook_size: self.codebook_size,
                });
            }
        }
        Ok(())
    }
}

/// A flat sequence of token IDs, each below `alphabet_bound`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSequence {
    items: Vec<u32>,
    alphabet_bound: u32,
}

impl TokenSequence {
    pub fn new(items: Vec<u32>, alphabet_bound: u32) -> Result<Self> {
        if let Some(&token) = items.iter().find(|&&t| t >= alphabet_bound) {
            return Err(Error::TokenAboveBound {
                token,
                bound: alphabet_bound,
            });
        }
        Ok(TokenSequence {
            items,
            alphabet_bound,
        })
    }

    pub(crate) fn new_unchecked(items: Vec<u32>, alphabet_bound: u32) -> Self {
        debug_assert!(items.iter().all(|&t| t < alphabet_bound));
        TokenSequence {
            items,
            alphabet_bound,
        }
    }

    pub fn items(&self) -> &[u32] {
        &self.items
    }

    pub fn into_items(self) -> Vec<u32> {
        self.items
    }

    pub fn alphabet_bound(&self) -> u32 {
        self.alphabet_bound
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

/// Word <-> dense ID mapping in first-appearance order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VocabMap {
    words: Vec<String>,
    ids: HashMap<String, u32>,
}

impl VocabMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the ID of `word`, assigning the next free one if unseen.
    pub fn intern(&mut self, word: &str) -> u32 {
        if let Some(&id) = self.ids.get(word) {
            return id;
        }
        let id = self.words.len() as u32;
        self.words.push(word.to_string());
        self.ids.insert(word.to_string(), id);
        id
    }

    pub fn id(&self, word: &str) -> Option<u32> {
        self.ids.get(word).copied()
    }

    pub fn word(&self, id: u32) -> Option<&str> {
        self.words.get(id as usize).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }
}

/// Splits `text` on whitespace runs and numbers words by first appearance.
pub fn tokenize_str(text: &str) -> (TokenSequence, VocabMap) {
    let mut vocab = VocabMap::new();
    let items: Vec<u32> = text.split_whitespace().map(|w| vocab.intern(w)).collect();
    let bound = vocab.len() as u32;
    (TokenSequence::new_unchecked(items, bound), vocab)
}

pub fn tokenize_text(path: impl AsRef<Path>) -> Result<(TokenSequence, VocabMap)> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(tokenize_str(&text))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub config_id: String,
}

/// Shape shared by every utterance of one configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CorpusShape {
    pub n_dims: usize,
    pub codebook_size: u32,
}

/// Utterances in manifest order plus the shape of each configuration seen.
#[derive(Debug, Clone)]
pub struct CodecCorpus {
    pub utterances: Vec<CodecUtterance>,
    pub configs: BTreeMap<String, CorpusShape>,
}

impl CodecCorpus {
    /// Groups utterances by configuration, preserving manifest order within each group.
    pub fn by_config(&self) -> BTreeMap<&str, Vec<&CodecUtterance>> {
        let mut groups: BTreeMap<&str, Vec<&CodecUtterance>> = BTreeMap::new();
        for utt in &self.utterances {
            groups.entry(utt.config_id.as_str()).or_default().push(utt);
        }
        groups
    }
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<ManifestEntry>> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut entries = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let entry: ManifestEntry = serde_json::from_str(&line).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            line: Some(idx + 1),
            source,
        })?;
        entries.push(entry);
    }
    Ok(entries)
}

pub fn read_utterance(path: impl AsRef<Path>) -> Result<CodecUtterance> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let utt: CodecUtterance = serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        line: None,
        source,
    })?;
    utt.validate()?;
    Ok(utt)
}

/// Loads every utterance named in a manifest.
///
/// Files are parsed in parallel; the result keeps manifest order, and when
/// several entries are bad the first one in manifest order is reported.
pub fn load_codec_utterances(manifest_path: impl AsRef<Path>) -> Result<CodecCorpus> {
    let manifest_path = manifest_path.as_ref();
    let entries = read_manifest(manifest_path)?;
    if entries.is_empty() {
        return Err(Error::NoUtterances {
            path: manifest_path.to_path_buf(),
        });
    }
    let base = manifest_path.parent().unwrap_or(Path::new(""));
    let loaded: Vec<Result<CodecUtterance>> = entries
        .par_iter()
        .map(|entry| {
            let path = base.join(&entry.path);
            let utt = read_utterance(&path)?;
            if utt.config_id != entry.config_id {
                return Err(Error::InvalidUtterance {
                    utterance_id: utt.utterance_id,
                    message: format!(
                        "config_id {} does not match manifest entry {}",
                        utt.config_id, entry.config_id
                    ),
                });
            }
            Ok(utt)
        })
        .collect();

    let mut utterances = Vec::with_capacity(loaded.len());
    let mut configs: BTreeMap<String, CorpusShape> = BTreeMap::new();
    for utt in loaded {
        let utt = utt?;
        let shape = CorpusShape {
            n_dims: utt.n_dims(),
            codebook_size: utt.codebook_size,
        };
        match configs.get(&utt.config_id) {
            Some(existing) if *existing != shape => {
                return Err(Error::InvalidUtterance {
                    utterance_id: utt.utterance_id,
                    message: format!(
                        "shape {} dims x codebook {} differs from earlier utterances of config {} ({} x {})",
                        shape.n_dims,
                        shape.codebook_size,
                        utt.config_id,
                        existing.n_dims,
                        existing.codebook_size
                    ),
                });
            }
            Some(_) => {}
            None => {
                configs.insert(utt.config_id.clone(), shape);
            }
        }
        utterances.push(utt);
    }
    Ok(CodecCorpus {
        utterances,
        configs,
    })
}

pub fn write_utterance(path: impl AsRef<Path>, utt: &CodecUtterance) -> Result<()> {
    let path = path.as_ref();
    let json = serde_json::to_string(utt).expect("utterance serialises");
    fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
}

pub fn write_manifest(path: impl AsRef<Path>, entries: &[ManifestEntry]) -> Result<()> {
    let path = path.as_ref();
    let mut out = Vec::new();
    for entry in entries {
        serde_json::to_writer(&mut out, entry).expect("manifest entry serialises");
        out.push(b'\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Benchmark metric computed outside this crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Metric {
    #[serde(rename = "WER")]
    Wer,
    #[serde(rename = "CER")]
    Cer,
    #[serde(rename = "UTMOS")]
    Utmos,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Wer, Metric::Cer, Metric::Utmos];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Wer => "WER",
            Metric::Cer => "CER",
            Metric::Utmos => "UTMOS",
        }
    }

    /// WER and CER are fractions that may exceed 1; UTMOS lives on [1, 5].
    pub fn accepts(self, value: f64) -> bool {
        match self {
            Metric::Wer | Metric::Cer => value.is_finite() && value >= 0.0,
            Metric::Utmos => (1.0..=5.0).contains(&value),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "WER" => Ok(Metric::Wer),
            "CER" => Ok(Metric::Cer),
            "UTMOS" => Ok(Metric::Utmos),
            other => Err(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkRecord {
    pub config_id: String,
    pub metric: Metric,
    pub value: f64,
}

#[derive(Deserialize)]
struct RawBenchmarkRow {
    config_id: String,
    metric: String,
    value: f64,
}

/// Parses benchmark CSV text with header `config_id,metric,value`.
pub fn parse_benchmarks(reader: impl std::io::Read, path: &Path) -> Result<Vec<BenchmarkRecord>> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers().map_err(csv_err)?.clone();
    if headers.iter().collect::<Vec<_>>() != ["config_id", "metric", "value"] {
        return Err(Error::Csv {
            path: path.to_path_buf(),
            source: csv::Error::from(std::io::Error::new(
                std::io::ErrorKind::InvalidData,
                "expected header config_id,metric,value",
            )),
        });
    }
    let mut seen = std::collections::HashSet::new();
    let mut records = Vec::new();
    for (idx, row) in rdr.deserialize::<RawBenchmarkRow>().enumerate() {
        let row = row.map_err(csv_err)?;
        // header is line 1
        let line = idx + 2;
        let metric: Metric = row
            .metric
            .parse()
            .map_err(|name| Error::UnknownMetric { line, name })?;
        if !metric.accepts(row.value) {
            return Err(Error::MetricOutOfRange {
                config_id: row.config_id,
                metric: metric.to_string(),
                value: row.value,
            });
        }
        if !seen.insert((row.config_id.clone(), metric)) {
            return Err(Error::DuplicateBenchmark {
                config_id: row.config_id,
                metric: metric.to_string(),
            });
        }
        records.push(BenchmarkRecord {
            config_id: row.config_id,
            metric,
            value: row.value,
        });
    }
    Ok(records)
}

pub fn load_benchmarks(csv_path: impl AsRef<Path>) -> Result<Vec<BenchmarkRecord>> {
    let path = csv_path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_benchmarks(file, path)
}

pub fn write_benchmarks(
    mut writer: impl Write,
    records: &[BenchmarkRecord],
) -> std::io::Result<()> {
    writeln!(writer, "config_id,metric,value")?;
    for rec in records {
        writeln!(writer, "{},{},{}", rec.config_id, rec.metric, rec.value)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn utt(tokens: Vec<Vec<u32>>, codebook_size: u32) -> CodecUtterance {
        CodecUtterance {
            utterance_id: "u1".into(),
            config_id: "E3".into(),
            codebook_size,
            tokens,
        }
    }

    #[test]
    fn tokenize_first_appearance() {
        let (seq, vocab) = tokenize_str("the cat the");
        assert_eq!(seq.items(), &[0, 1, 0]);
        assert_eq!(vocab.len(), 2);
        assert_eq!(seq.alphabet_bound(), 2);

        let (seq, vocab) = tokenize_str("a b c a");
        assert_eq!(seq.items(), &[0, 1, 2, 0]);
        assert_eq!(vocab.len(), 3);
        assert_eq!(vocab.word(2), Some("c"));
        assert_eq!(vocab.id("a"), Some(0));
    }

    #[test]
    fn tokenize_empty_and_whitespace_runs() {
        let (seq, vocab) = tokenize_str("");
        assert!(seq.is_empty());
        assert!(vocab.is_empty());

        let (seq, _) = tokenize_str("  x\t\tY \n x  y ");
        assert_eq!(seq.items(), &[0, 1, 0, 2]);
    }

    #[test]
    fn ragged_and_out_of_range() {
        let err = utt(vec![vec![1, 2, 3], vec![1, 2]], 1024)
            .validate()
            .unwrap_err();
        assert!(matches!(
            err,
            Error::RaggedMatrix {
                row: 1,
                expected: 3,
                found: 2,
                ..
            }
        ));
        assert!(err.to_string().contains("u1"));

        let err = utt(vec![vec![1, 1024]], 1024).validate().unwrap_err();
        assert!(matches!(
            err,
            Error::TokenOutOfRange {
                token: 1024,
                row: 0,
                frame: 1,
                ..
            }
        ));
        utt(vec![vec![1023]], 1024).validate().unwrap();
    }

    #[test]
    fn token_sequence_bound() {
        assert!(TokenSequence::new(vec![0, 3], 4).is_ok());
        assert!(matches!(
            TokenSequence::new(vec![4], 4),
            Err(Error::TokenAboveBound { token: 4, bound: 4 })
        ));
    }

    #[test]
    fn benchmark_rows() {
        let p = Path::new("bench.csv");
        let recs = parse_benchmarks(
            "config_id,metric,value\r\nE3,UTMOS,3.8\r\nE3,WER,1.3\n".as_bytes(),
            p,
        )
        .unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0].metric, Metric::Utmos);
        assert_eq!(recs[0].value, 3.8);

        let err =
            parse_benchmarks("config_id,metric,value\nE3,UTMOS,9.0\n".as_bytes(), p).unwrap_err();
        assert!(matches!(err, Error::MetricOutOfRange { .. }));

        let err =
            parse_benchmarks("config_id,metric,value\nE3,MOS,3.0\n".as_bytes(), p).unwrap_err();
        assert!(matches!(err, Error::UnknownMetric { line: 2, .. }));

        let err =
            parse_benchmarks("config_id,metric,value\nE3,WER,-0.1\n".as_bytes(), p).unwrap_err();
        assert!(matches!(err, Error::MetricOutOfRange { .. }));

        let err = parse_benchmarks(
            "config_id,metric,value\nE3,CER,0.1\nE3,CER,0.2\n".as_bytes(),
            p,
        )
        .unwrap_err();
        assert!(matches!(err, Error::DuplicateBenchmark { .. }));

        let err = parse_benchmarks("id,metric,value\nE3,CER,0.1\n".as_bytes(), p).unwrap_err();
        assert!(matches!(err, Error::Csv { .. }));
    }

    #[test]
    fn config_validation() {
        let mut cfg = CodecConfig {
            config_id: "E3".into(),
            model_name: "EnCodec".into(),
            n_dims: 8,
            codebook_size: 1024,
            sample_rate_hz: 24000,
            kbps: 6.0,
        };
        cfg.validate().unwrap();
        cfg.codebook_size = 1;
        assert!(cfg.validate().is_err());
        cfg.codebook_size = 1024;
        cfg.n_dims = 0;
        assert!(cfg.validate().is_err());
    }
}
