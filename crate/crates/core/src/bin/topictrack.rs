//! `topictrack` command-line tool.
//!
//! * `track` links the topics of two slices and writes a JSON report.
//! * `bench` runs the synthetic drift benchmark.
//! * `validate` checks topic and vector files without tracking.
//!
//! Exit codes: 0 success, 1 input or validation error, 2 internal error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use topictrack::bench::{
    results_tsv, synthetic_store, BenchError, Benchmark, DriftConfig, SyntheticStoreConfig,
    Thresholds, DEFAULT_WORDS_PER_TOPIC,
};
use topictrack::corpus::{parse_topic_slices, CorpusError, TopicSlice, DEFAULT_MAX_LEVEL};
use topictrack::divergence::score_matrix;
use topictrack::embedding::{load_vectors_file, EmbeddingError, EmbeddingStore};
use topictrack::report::{BenchReport, TrackReport};
use topictrack::tracker::{
    prepare_topics, track, MethodSelection, TrackConfig, TrackError, DEFAULT_JS_THRESHOLD,
    DEFAULT_SD_THRESHOLD, DEFAULT_TOP_ENTITIES, DEFAULT_TOP_WORDS,
};

#[derive(Parser, Debug)]
#[command(name = "topictrack", version, about = "Link topics across time slices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Link topics of one slice to the next and write a report
    Track(TrackArgs),
    /// Run the synthetic lexical-drift benchmark
    Bench(BenchArgs),
    /// Check topic and vector files
    Validate(ValidateArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum CliMethod {
    Js,
    Sd,
    Both,
}

impl From<CliMethod> for MethodSelection {
    fn from(m: CliMethod) -> Self {
        match m {
            CliMethod::Js => MethodSelection::Js,
            CliMethod::Sd => MethodSelection::Sd,
            CliMethod::Both => MethodSelection::Both,
        }
    }
}

#[derive(Args, Debug)]
struct ThresholdArgs {
    /// Links need a JS divergence strictly below this
    #[arg(long, default_value_t = DEFAULT_JS_THRESHOLD)]
    js_threshold: f64,

    /// Links need a semantic divergence strictly below this
    #[arg(long, default_value_t = DEFAULT_SD_THRESHOLD)]
    sd_threshold: f64,
}

#[derive(Args, Debug)]
struct TrackArgs {
    /// Topic-slice JSON file
    #[arg(long)]
    topics: PathBuf,

    /// Word vectors in text format (required for sd and both)
    #[arg(long)]
    embeddings: Option<PathBuf>,

    /// Distance measure(s) to track with
    #[arg(long, value_enum, default_value_t = CliMethod::Both)]
    method: CliMethod,

    #[command(flatten)]
    thresholds: ThresholdArgs,

    /// Words kept per topic
    #[arg(long, default_value_t = DEFAULT_TOP_WORDS)]
    top_words: usize,

    /// Entities kept per topic
    #[arg(long, default_value_t = DEFAULT_TOP_ENTITIES)]
    top_entities: usize,

    /// Deepest topic-tree level that is tracked
    #[arg(long, default_value_t = DEFAULT_MAX_LEVEL)]
    max_level: u32,

    /// Label of the earlier slice (default: first slice in the file)
    #[arg(long)]
    from: Option<String>,

    /// Label of the later slice (default: the slice after --from)
    #[arg(long)]
    to: Option<String>,

    /// Report file (default: stdout)
    #[arg(long, short)]
    output: Option<PathBuf>,

    /// Also write the score matrices as JSON to this file
    #[arg(long)]
    matrices: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum TableFormat {
    Json,
    Tsv,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Word vectors in text format (default: built-in clustered synthetic vectors)
    #[arg(long)]
    embeddings: Option<PathBuf>,

    /// Drift rates to run, comma-separated or repeated
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.0, 0.3, 1.0])]
    drift: Vec<f64>,

    /// Number of synthetic topics
    #[arg(long, default_value_t = 50)]
    n: usize,

    /// Words per synthetic topic
    #[arg(long, default_value_t = DEFAULT_WORDS_PER_TOPIC)]
    words_per_topic: usize,

    /// Multiplicative weight jitter
    #[arg(long, default_value_t = 0.1)]
    weight_noise: f64,

    #[arg(long, default_value_t = 7)]
    seed: u64,

    #[command(flatten)]
    thresholds: ThresholdArgs,

    #[arg(long, value_enum, default_value_t = TableFormat::Json)]
    format: TableFormat,

    /// Results file (default: stdout)
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    /// Topic-slice JSON file
    #[arg(long)]
    topics: Option<PathBuf>,

    /// Word vectors in text format
    #[arg(long)]
    embeddings: Option<PathBuf>,
}

#[derive(Debug)]
enum CliError {
    Input(String),
    Internal(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::Internal(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) | CliError::Internal(m) => f.write_str(m),
        }
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<EmbeddingError> for CliError {
    fn from(e: EmbeddingError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<TrackError> for CliError {
    fn from(e: TrackError) -> Self {
        match e {
            TrackError::Config(_) => CliError::Input(e.to_string()),
            other => CliError::Internal(other.to_string()),
        }
    }
}

impl From<BenchError> for CliError {
    fn from(e: BenchError) -> Self {
        match e {
            BenchError::Config(_) => CliError::Input(e.to_string()),
            BenchError::Track(t) => t.into(),
        }
    }
}

fn read_topics(path: &Path) -> Result<Vec<TopicSlice>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read `{}`: {e}", path.display())))?;
    parse_topic_slices(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn read_store(path: &Path) -> Result<EmbeddingStore, CliError> {
    load_vectors_file(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn write_output(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text)
            .map_err(|e| CliError::Internal(format!("cannot write `{}`: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn pick_slices<'a>(
    slices: &'a [TopicSlice],
    from: Option<&str>,
    to: Option<&str>,
) -> Result<(&'a TopicSlice, &'a TopicSlice), CliError> {
    let position = |label: &str| {
        slices
            .iter()
            .position(|s| s.label() == label)
            .ok_or_else(|| CliError::Input(format!("no slice labelled `{label}`")))
    };
    let a = match from {
        Some(l) => position(l)?,
        None => 0,
    };
    let b = match to {
        Some(l) => position(l)?,
        None => a + 1,
    };
    if slices.len() < 2 {
        return Err(CliError::Input(format!(
            "tracking needs at least 2 slices, the file has {}",
            slices.len()
        )));
    }
    if b >= slices.len() {
        return Err(CliError::Input(format!(
            "slice `{}` has no successor; pass --to",
            slices[a].label()
        )));
    }
    if a == b {
        return Err(CliError::Input(
            "--from and --to name the same slice".into(),
        ));
    }
    Ok((&slices[a], &slices[b]))
}

fn cmd_track(args: TrackArgs) -> Result<(), CliError> {
    let config = TrackConfig {
        methods: args.method.into(),
        js_threshold: args.thresholds.js_threshold,
        sd_threshold: args.thresholds.sd_threshold,
        top_words: args.top_words,
        top_entities: args.top_entities,
        max_level: args.max_level,
    };
    config.validate()?;
    if config.methods.needs_embeddings() && args.embeddings.is_none() {
        return Err(CliError::Input(
            "--method sd and --method both need --embeddings".into(),
        ));
    }

    let slices = read_topics(&args.topics)?;
    let (slice_a, slice_b) = pick_slices(&slices, args.from.as_deref(), args.to.as_deref())?;
    let store = match (&args.embeddings, config.methods.needs_embeddings()) {
        (Some(p), true) => Some(read_store(p)?),
        _ => None,
    };

    let outcome = track(slice_a, slice_b, &config, store.as_ref())?;
    let report = TrackReport::new(&config, &outcome);
    write_output(args.output.as_deref(), &report.to_json())?;

    if let Some(path) = &args.matrices {
        let topics_a = prepare_topics(slice_a, &config);
        let topics_b = prepare_topics(slice_b, &config);
        let mut matrices = Vec::new();
        for &method in config.methods.methods() {
            matrices.push(
                score_matrix(&topics_a, &topics_b, method, store.as_ref())
                    .map_err(|e| CliError::Internal(e.to_string()))?,
            );
        }
        let text = serde_json::to_string_pretty(&matrices)
            .map_err(|e| CliError::Internal(e.to_string()))?;
        write_output(Some(path), &text)?;
    }
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<(), CliError> {
    let (store, source) = match &args.embeddings {
        Some(p) => (read_store(p)?, p.display().to_string()),
        None => (
            synthetic_store(&SyntheticStoreConfig::default()),
            "builtin-synthetic".to_string(),
        ),
    };
    let bench = Benchmark {
        n_topics: args.n,
        words_per_topic: args.words_per_topic,
        thresholds: Thresholds {
            js: args.thresholds.js_threshold,
            sd: args.thresholds.sd_threshold,
        },
    };
    if !(bench.thresholds.js > 0.0 && bench.thresholds.sd > 0.0) {
        return Err(CliError::Input("thresholds must be positive".into()));
    }
    let mut results = Vec::new();
    for &rate in &args.drift {
        let cfg = DriftConfig::new(rate, args.weight_noise, args.seed)?;
        results.extend(bench.run(&cfg, &store)?);
    }
    let text = match args.format {
        TableFormat::Tsv => results_tsv(&results),
        TableFormat::Json => BenchReport {
            schema_version: topictrack::report::SCHEMA_VERSION,
            kind: "bench",
            seed: args.seed,
            benchmark: &bench,
            embeddings: &source,
            results: &results,
        }
        .to_json(),
    };
    write_output(args.output.as_deref(), &text)
}

fn cmd_validate(args: ValidateArgs) -> Result<(), CliError> {
    if args.topics.is_none() && args.embeddings.is_none() {
        return Err(CliError::Input(
            "nothing to validate; pass --topics and/or --embeddings".into(),
        ));
    }
    if let Some(path) = &args.topics {
        let slices = read_topics(path)?;
        println!("{}: {} slice(s)", path.display(), slices.len());
        for s in &slices {
            let tracked = s
                .topics()
                .iter()
                .filter(|t| t.level() <= DEFAULT_MAX_LEVEL)
                .count();
            println!(
                "  {}: {} topic(s), {} at level <= {}",
                s.label(),
                s.len(),
                tracked,
                DEFAULT_MAX_LEVEL
            );
        }
    }
    if let Some(path) = &args.embeddings {
        let store = read_store(path)?;
        println!(
            "{}: {} vector(s) of dimension {}",
            path.display(),
            store.len(),
            store.dimension()
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Track(args) => cmd_track(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Validate(args) => cmd_validate(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
