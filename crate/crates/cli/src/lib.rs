//! Command implementations behind the `tokstat` binary.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use tokstat::coding::FixedBaseline;
use tokstat::corpus_io::{self, BenchmarkRecord, CodecConfig, Metric, TokenSequence};
use tokstat::correlate::{self, CorrelationReport, StatPoint, Statistic};
use tokstat::ngram::{self, NGramSpec};
use tokstat::pipeline::{self, AnalysisOptions, ConfigAnalysis};
use tokstat::powerlaw::XminSearch;
use tokstat::preprocess::{self, FlatToken, FlattenScheme};
use tokstat::synth::{self, CorpusLayout, GeneratorKind, GeneratorSpec};
use tokstat::ErrorKind;

pub mod output;

use output::OutputTree;

#[derive(Debug)]
pub enum CliError {
    Core(tokstat::Error),
    Usage(String),
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    /// 1 for input/validation problems, 2 for numerical/degenerate data.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.kind() == ErrorKind::Numerical => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Usage(m) => f.write_str(m),
            CliError::Io { path, source } => write!(f, "{}: {source}", path.display()),
        }
    }
}

impl std::error::Error for CliError {}

impl From<tokstat::Error> for CliError {
    fn from(e: tokstat::Error) -> Self {
        CliError::Core(e)
    }
}

pub type CliResult<T> = Result<T, CliError>;

fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Usage(msg.into()))
}

#[derive(Debug, Parser)]
#[command(
    name = "tokstat",
    version,
    about = "Zipf, Heaps and entropy statistics for discrete token corpora"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit Zipf, Heaps and coding statistics per configuration and n-gram order
    Analyze(AnalyzeArgs),
    /// Correlate analysis statistics with benchmark metrics
    Correlate(CorrelateArgs),
    /// Generate a seeded synthetic codec corpus
    Synth(SynthArgs),
    /// Dump ranked n-gram tables
    NgramDump(NgramDumpArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct InputArgs {
    /// JSON Lines manifest of codec utterance files
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Whitespace-tokenised text (word baseline)
    #[arg(long)]
    pub text: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    /// N-gram orders
    #[arg(long = "n", value_delimiter = ',', default_value = "1,2,3,4,6")]
    pub orders: Vec<usize>,
    /// Collapse repeated adjacent tokens inside each dimension (default)
    #[arg(long, overrides_with = "no_dedup")]
    pub dedup: bool,
    #[arg(long = "no-dedup", overrides_with = "dedup")]
    pub no_dedup: bool,
    /// Drop n-gram windows containing dimension markers
    #[arg(long)]
    pub exclude_marker_windows: bool,
}

impl PipelineArgs {
    fn orders(&self) -> CliResult<Vec<NGramSpec>> {
        if self.orders.is_empty() {
            return usage("--n needs at least one order");
        }
        self.orders
            .iter()
            .map(|&n| NGramSpec::new(n).map_err(CliError::from))
            .collect()
    }

    fn dedup(&self) -> bool {
        !self.no_dedup
    }
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    /// Name used for the text baseline in reports
    #[arg(long, default_value = "text")]
    pub label: String,
    /// Optional JSON table of codec configurations to check and carry into the report
    #[arg(long)]
    pub configs: Option<PathBuf>,
    /// Minimum tail size for the power-law fit
    #[arg(long, default_value_t = tokstat::powerlaw::DEFAULT_MIN_TAIL)]
    pub min_tail: usize,
    /// Cap on x_min candidates evaluated (all distinct values when absent)
    #[arg(long)]
    pub max_xmin_candidates: Option<usize>,
    /// Number of prefix positions on each growth curve
    #[arg(long, default_value_t = tokstat::heaps::DEFAULT_GROWTH_SAMPLES)]
    pub growth_samples: usize,
    /// Measure bit reduction against a nominal alphabet of this size instead of the observed support
    #[arg(long)]
    pub nominal_codebook: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct CorrelateArgs {
    /// Output directory of a previous `analyze` run
    #[arg(long)]
    pub analysis: PathBuf,
    /// Benchmark CSV with header config_id,metric,value
    #[arg(long)]
    pub benchmarks: PathBuf,
    /// Orders to correlate (default: every order in the analysis)
    #[arg(long = "n", value_delimiter = ',')]
    pub orders: Vec<usize>,
    /// Statistics to correlate (default: all)
    #[arg(long, value_delimiter = ',')]
    pub statistics: Vec<String>,
    /// Metrics to correlate (default: every metric in the benchmark file)
    #[arg(long, value_delimiter = ',')]
    pub metrics: Vec<String>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Zipf,
    Uniform,
    Markov,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum)]
    pub kind: Kind,
    #[arg(long)]
    pub vocab: u32,
    /// Frames per dimension per utterance
    #[arg(long)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Zipf exponent s in p(k) ~ k^-s
    #[arg(long, default_value_t = 1.0)]
    pub exponent: f64,
    /// JSON file holding the Markov transition matrix (array of rows)
    #[arg(long)]
    pub transitions: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub utterances: usize,
    #[arg(long, default_value_t = 1)]
    pub dims: usize,
    /// Defaults to the vocabulary size
    #[arg(long)]
    pub codebook_size: Option<u32>,
    #[arg(long, default_value = "synth")]
    pub config_id: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct NgramDumpArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[arg(long, default_value = "text")]
    pub label: String,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Analyze(args) => cmd_analyze(&args),
        Command::Correlate(args) => cmd_correlate(&args),
        Command::Synth(args) => cmd_synth(&args),
        Command::NgramDump(args) => cmd_ngram_dump(&args),
    }
}

fn to_json<T: serde::Serialize + ?Sized>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("report serialises");
    out.push(b'\n');
    out
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Vec<u8> {
    let mut buf = Vec::new();
    f(&mut buf).expect("writing to memory");
    buf
}

/// File-system safe form of a config id.
fn safe_name(id: &str) -> String {
    id.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') {
                c
            } else {
                '_'
            }
        })
        .collect()
}

pub const SUMMARY_FILE: &str = "summary.json";
pub const STATS_FILE: &str = "stats.csv";

pub fn analysis_options(args: &AnalyzeArgs) -> CliResult<AnalysisOptions> {
    if args.growth_samples == 0 {
        return usage("--growth-samples must be at least 1");
    }
    Ok(AnalysisOptions {
        orders: args.pipeline.orders()?,
        dedup: args.pipeline.dedup(),
        exclude_marker_windows: args.pipeline.exclude_marker_windows,
        growth_samples: args.growth_samples,
        xmin: XminSearch {
            min_tail: args.min_tail,
            max_candidates: args.max_xmin_candidates,
        },
        baseline: args
            .nominal_codebook
            .map_or(FixedBaseline::Observed, FixedBaseline::Nominal),
        ..AnalysisOptions::default()
    })
}

fn check_config_table(configs: &[CodecConfig], corpus: &corpus_io::CodecCorpus) -> CliResult<()> {
    for (id, shape) in &corpus.configs {
        let Some(cfg) = configs.iter().find(|c| &c.config_id == id) else {
            return usage(format!("config {id} is missing from the config table"));
        };
        if cfg.n_dims != shape.n_dims || cfg.codebook_size != shape.codebook_size {
            return usage(format!(
                "config {id}: table says {} dims x {} codes, corpus has {} x {}",
                cfg.n_dims, cfg.codebook_size, shape.n_dims, shape.codebook_size
            ));
        }
    }
    Ok(())
}

pub fn cmd_analyze(args: &AnalyzeArgs) -> CliResult<()> {
    let opts = analysis_options(args)?;
    let mut tree = OutputTree::new(&args.out)?;

    let analyses = if let Some(manifest) = &args.input.manifest {
        let corpus = corpus_io::load_codec_utterances(manifest)?;
        if let Some(path) = &args.configs {
            let table = corpus_io::load_config_table(path)?;
            check_config_table(&table, &corpus)?;
            let used: Vec<&CodecConfig> = table
                .iter()
                .filter(|c| corpus.configs.contains_key(&c.config_id))
                .collect();
            tree.add("configs.json", to_json(&used));
        }
        pipeline::analyze_codec_corpus(&corpus, &opts)?
    } else {
        let path = args.input.text.as_ref().expect("clap enforces one input");
        let (seq, _) = corpus_io::tokenize_text(path)?;
        vec![pipeline::analyze_text(&args.label, &seq, &opts)?]
    };

    write_analysis(&mut tree, &analyses, args.format);
    tree.commit()?;
    Ok(())
}

pub fn write_analysis(tree: &mut OutputTree, analyses: &[ConfigAnalysis], format: Format) {
    match format {
        Format::Json => tree.add(SUMMARY_FILE, to_json(analyses)),
        Format::Csv => {
            let points = pipeline::stat_points(analyses);
            tree.add(STATS_FILE, csv_bytes(|b| write_stat_points(b, &points)));
        }
    }
    for a in analyses {
        let base = PathBuf::from(safe_name(&a.config_id));
        for order in &a.orders {
            let dir = base.join(format!("n{}", order.n));
            if format == Format::Json {
                tree.add(dir.join("zipf.json"), to_json(&order.zipf));
                tree.add(dir.join("heaps.json"), to_json(&order.heaps));
                tree.add(dir.join("coding.json"), to_json(&order.coding));
            }
            tree.add(
                dir.join("rank_frequency.csv"),
                csv_bytes(|b| order.ranked.write_rank_frequency_csv(b)),
            );
            tree.add(
                dir.join("growth.csv"),
                csv_bytes(|b| order.growth.write_csv(b)),
            );
        }
        if let Some(mean) = &a.mean_token {
            let dir = base.join("mean_token");
            match format {
                Format::Json => {
                    tree.add(dir.join("zipf.json"), to_json(&mean.zipf));
                    tree.add(dir.join("coding.json"), to_json(&mean.coding));
                }
                Format::Csv => {
                    let rows = [
                        ("alpha", mean.zipf.alpha),
                        ("eta", mean.zipf.eta),
                        ("ks", mean.zipf.ks),
                        ("H", mean.coding.entropy),
                        ("L", mean.coding.avg_length),
                        ("R", mean.coding.redundancy),
                        ("bit_reduction", mean.coding.bit_reduction),
                    ];
                    let body: String = std::iter::once("statistic,value\n".to_string())
                        .chain(rows.iter().map(|(k, v)| format!("{k},{v}\n")))
                        .collect();
                    tree.add(dir.join("stats.csv"), body.into_bytes());
                }
            }
            tree.add(
                dir.join("rank_frequency.csv"),
                csv_bytes(|b| mean.ranked.write_rank_frequency_csv(b)),
            );
        }
    }
}

pub fn write_stat_points(out: &mut Vec<u8>, points: &[StatPoint]) -> std::io::Result<()> {
    use std::io::Write;
    writeln!(out, "config_id,n,statistic,value")?;
    for p in points {
        writeln!(out, "{},{},{},{}", p.config_id, p.n, p.statistic, p.value)?;
    }
    Ok(())
}

/// Reads the statistics written by `analyze`, in either format.
pub fn read_analysis(dir: &Path) -> CliResult<Vec<StatPoint>> {
    let summary = dir.join(SUMMARY_FILE);
    if summary.exists() {
        let text = fs::read_to_string(&summary).map_err(|e| io_err(&summary, e))?;
        let analyses: Vec<ConfigAnalysis> = serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("{}: {e}", summary.display())))?;
        return Ok(pipeline::stat_points(&analyses));
    }
    let stats = dir.join(STATS_FILE);
    if !stats.exists() {
        return usage(format!(
            "{}: no {SUMMARY_FILE} or {STATS_FILE} found; run `tokstat analyze` first",
            dir.display()
        ));
    }
    let text = fs::read_to_string(&stats).map_err(|e| io_err(&stats, e))?;
    let mut points = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        let bad = || CliError::Usage(format!("{}:{}: malformed row", stats.display(), i + 1));
        let fields: Vec<&str> = line.rsplitn(4, ',').collect();
        let [value, statistic, n, config_id] = fields[..] else {
            return Err(bad());
        };
        points.push(StatPoint {
            config_id: config_id.to_string(),
            n: n.parse().map_err(|_| bad())?,
            statistic: statistic.parse().map_err(|_| bad())?,
            value: value.parse().map_err(|_| bad())?,
        });
    }
    Ok(points)
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io {
        path: path.to_path_buf(),
        source: e,
    }
}

pub fn correlate_all(
    points: &[StatPoint],
    records: &[BenchmarkRecord],
    statistics: &[Statistic],
    metrics: &[Metric],
    orders: &[usize],
) -> CliResult<Vec<CorrelationReport>> {
    let mut reports = Vec::new();
    for &n in orders {
        for &statistic in statistics {
            for &metric in metrics {
                reports.push(correlate::correlate_metric(
                    points, records, statistic, metric, n,
                )?);
            }
        }
    }
    Ok(reports)
}

pub fn cmd_correlate(args: &CorrelateArgs) -> CliResult<()> {
    let records = corpus_io::load_benchmarks(&args.benchmarks)?;
    let points = read_analysis(&args.analysis)?;

    let statistics: Vec<Statistic> = if args.statistics.is_empty() {
        Statistic::ALL.to_vec()
    } else {
        args.statistics
            .iter()
            .map(|s| s.parse().map_err(CliError::Usage))
            .collect::<CliResult<_>>()?
    };
    let metrics: Vec<Metric> = if args.metrics.is_empty() {
        let present: std::collections::BTreeSet<Metric> =
            records.iter().map(|r| r.metric).collect();
        present.into_iter().collect()
    } else {
        args.metrics
            .iter()
            .map(|s| {
                s.parse()
                    .map_err(|m| CliError::Usage(format!("unknown metric {m:?}")))
            })
            .collect::<CliResult<_>>()?
    };
    let orders: Vec<usize> = if args.orders.is_empty() {
        let present: std::collections::BTreeSet<usize> = points.iter().map(|p| p.n).collect();
        present.into_iter().collect()
    } else {
        args.orders.clone()
    };
    if metrics.is_empty() {
        return usage(format!("{}: no benchmark rows", args.benchmarks.display()));
    }

    let reports = correlate_all(&points, &records, &statistics, &metrics, &orders)?;
    let mut tree = OutputTree::new(&args.out)?;
    match args.format {
        Format::Json => tree.add("correlations.json", to_json(&reports)),
        Format::Csv => {
            let mut body = String::from("statistic,metric,n,pairs,r,slope,intercept\n");
            for r in &reports {
                body.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    r.statistic,
                    r.metric,
                    r.n,
                    r.pairs.len(),
                    r.r,
                    r.slope,
                    r.intercept
                ));
            }
            tree.add("correlations.csv", body.into_bytes());
        }
    }
    for r in &reports {
        let name = format!("{}_{}_n{}.csv", r.statistic, r.metric, r.n);
        tree.add(
            Path::new("scatter").join(name),
            csv_bytes(|b| r.write_scatter_csv(b)),
        );
    }
    tree.commit()?;
    Ok(())
}

pub fn generator_spec(args: &SynthArgs) -> CliResult<GeneratorSpec> {
    let kind = match args.kind {
        Kind::Zipf => GeneratorKind::Zipf {
            exponent: args.exponent,
        },
        Kind::Uniform => GeneratorKind::Uniform,
        Kind::Markov => {
            let Some(path) = &args.transitions else {
                return usage("--kind markov needs --transitions FILE");
            };
            let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
            let transitions: Vec<Vec<f64>> = serde_json::from_str(&text)
                .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            GeneratorKind::Markov { transitions }
        }
    };
    let spec = GeneratorSpec {
        kind,
        vocab: args.vocab,
        count: args.count,
        seed: args.seed,
    };
    spec.validate()?;
    Ok(spec)
}

pub fn cmd_synth(args: &SynthArgs) -> CliResult<()> {
    let spec = generator_spec(args)?;
    let utterances = synth::synth_utterances(
        &spec,
        &CorpusLayout {
            config_id: args.config_id.clone(),
            utterances: args.utterances,
            n_dims: args.dims,
            codebook_size: args.codebook_size,
        },
    )?;
    let mut tree = OutputTree::new(&args.out)?;
    synth::write_corpus(tree.staging_dir(), &utterances)?;
    tree.add("generator.json", to_json(&spec));
    tree.commit()?;
    Ok(())
}

fn flat_label(scheme: &FlattenScheme, id: u32) -> String {
    match scheme.decode(id) {
        Some(FlatToken::Payload { dim, token }) => format!("d{dim}:{token}"),
        Some(FlatToken::Start(d)) => format!("<s{d}>"),
        Some(FlatToken::End(d)) => format!("</s{d}>"),
        None => id.to_string(),
    }
}

pub fn cmd_ngram_dump(args: &NgramDumpArgs) -> CliResult<()> {
    let orders = args.pipeline.orders()?;
    let mut tree = OutputTree::new(&args.out)?;
    if let Some(manifest) = &args.input.manifest {
        let corpus = corpus_io::load_codec_utterances(manifest)?;
        for (id, utts) in corpus.by_config() {
            let scheme = FlattenScheme::for_utterance(utts[0])?;
            let flat: Vec<TokenSequence> = utts
                .iter()
                .map(|u| preprocess::flatten(u, &scheme, args.pipeline.dedup()))
                .collect::<Result<_, _>>()?;
            for &n in &orders {
                let mut counts = ngram::NGramCounts::new();
                for seq in &flat {
                    if args.pipeline.exclude_marker_windows {
                        counts.extend(ngram::extract_ngrams_filtered(seq.items(), n, |t| {
                            scheme.is_marker(t)
                        }));
                    } else {
                        counts.extend(ngram::extract_ngrams(seq.items(), n));
                    }
                }
                let ranked = counts.into_ranked();
                tree.add(
                    format!("{}_n{}.csv", safe_name(id), n.n()),
                    csv_bytes(|b| ranked.write_gram_csv(b, |t| flat_label(&scheme, t))),
                );
            }
        }
    } else {
        let path = args.input.text.as_ref().expect("clap enforces one input");
        let (seq, vocab) = corpus_io::tokenize_text(path)?;
        for &n in &orders {
            let ranked = ngram::count_frequencies(ngram::extract_ngrams(seq.items(), n));
            tree.add(
                format!("{}_n{}.csv", safe_name(&args.label), n.n()),
                csv_bytes(|b| {
                    ranked.write_gram_csv(b, |t| vocab.word(t).unwrap_or("?").to_string())
                }),
            );
        }
    }
    tree.commit()?;
    Ok(())
}
