//! `tempotok` command-line tool.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.
//! Every failure prints one line to stderr starting with `error[usage]:`,
//! `error[data]:` or `error[internal]:`.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use tempotok::bench::{analyze, compare};
use tempotok::dataset::write_dataset;
use tempotok::synthetic::{gen_synthetic, Shape, SyntheticConfig};
use tempotok::template::{read_token_streams, write_token_streams};
use tempotok::{
    build_manifest, dataset_stats, load_dataset, load_spec, parse_stream, render_sequence, save_spec,
    validate_consistency, Dataset, KMeansEngine, LloydConfig, Resolution, Scale, StrategyConfig, TemplateOrder,
    TimeInput, TimeUnit, TokenizerSpec, FORMAT_VERSION,
};

#[derive(Parser)]
#[command(name = "tempotok", about = "Temporal tokenization for event sequences", disable_version_flag = true)]
struct Cli {
    /// Print the spec-file format version and exit.
    #[arg(short = 'V', long)]
    version: bool,

    /// Worker threads for per-sequence work (default: all cores).
    #[arg(long, global = true, value_parser = clap::value_parser!(u32).range(1..))]
    threads: Option<u32>,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a tokenizer on the train split and write its spec file.
    Fit(FitArgs),
    /// Render every sequence of a dataset as a token stream.
    Encode(EncodeArgs),
    /// Parse token streams back into event types and times.
    Decode(DecodeArgs),
    /// Linear and log histograms of inter-event intervals.
    Analyze(AnalyzeArgs),
    /// Compare strategies by token cost and reconstruction error.
    Bench(BenchArgs),
    /// Generate a synthetic dataset.
    Gen(GenArgs),
    /// Dataset summary and interval/timestamp consistency check.
    Stats(StatsArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Numeric,
    Byte,
    CalAbs,
    CalRel,
    Bin,
    Rsq,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScaleArg {
    Linear,
    Log,
}

impl From<ScaleArg> for Scale {
    fn from(s: ScaleArg) -> Self {
        match s {
            ScaleArg::Linear => Scale::Linear,
            ScaleArg::Log => Scale::log10(),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ResolutionArg {
    Day,
    Hour,
    Minute,
    Second,
}

impl From<ResolutionArg> for Resolution {
    fn from(r: ResolutionArg) -> Self {
        match r {
            ResolutionArg::Day => Resolution::Day,
            ResolutionArg::Hour => Resolution::Hour,
            ResolutionArg::Minute => Resolution::Minute,
            ResolutionArg::Second => Resolution::Second,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum OrderArg {
    TypeTime,
    TimeType,
}

impl From<OrderArg> for TemplateOrder {
    fn from(o: OrderArg) -> Self {
        match o {
            OrderArg::TypeTime => TemplateOrder::TypeTime,
            OrderArg::TimeType => TemplateOrder::TimeType,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum UnitArg {
    Second,
    Hour,
    Day,
    Week,
    Month,
}

impl From<UnitArg> for TimeUnit {
    fn from(u: UnitArg) -> Self {
        match u {
            UnitArg::Second => TimeUnit::Second,
            UnitArg::Hour => TimeUnit::Hour,
            UnitArg::Day => TimeUnit::Day,
            UnitArg::Week => TimeUnit::Week,
            UnitArg::Month => TimeUnit::Month,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    Exact,
    Lloyd,
}

#[derive(Clone, Copy, ValueEnum)]
enum ShapeArg {
    Lognormal,
    Spiky,
    Mixed,
    Uniform,
}

/// Comma-separated codebook sizes.
#[derive(Clone, Debug)]
struct Levels(Vec<usize>);

fn parse_levels(s: &str) -> Result<Levels, String> {
    s.split(',')
        .map(|part| match part.trim().parse::<usize>() {
            Ok(0) => Err("every level needs at least one centroid".to_string()),
            Ok(k) => Ok(k),
            Err(_) => Err(format!("`{part}` is not a positive integer")),
        })
        .collect::<Result<_, _>>()
        .map(Levels)
}

fn parse_bins(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("need at least one bin".to_string()),
        Ok(k) => Ok(k),
        Err(_) => Err(format!("`{s}` is not a positive integer")),
    }
}

#[derive(Args)]
struct StrategyFlags {
    #[arg(long, value_enum)]
    strategy: StrategyArg,
    /// Quantization space for bin and rsq.
    #[arg(long, value_enum, default_value = "linear")]
    scale: ScaleArg,
    #[arg(long, value_parser = parse_bins, default_value = "256")]
    bins: usize,
    /// Codebook sizes per RSQ level, e.g. 64,64,64,64.
    #[arg(long, value_parser = parse_levels, default_value = "256")]
    levels: Levels,
    #[arg(long, value_enum, default_value = "second")]
    resolution: ResolutionArg,
    /// Fractional digits for the numeric strategy.
    #[arg(long, default_value_t = 6, value_parser = clap::value_parser!(u32).range(0..=17))]
    precision: u32,
    /// K-means engine for rsq.
    #[arg(long, value_enum, default_value = "exact")]
    engine: EngineArg,
    /// Seed for the Lloyd engine.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl StrategyFlags {
    fn config(&self) -> StrategyConfig {
        match self.strategy {
            StrategyArg::Numeric => StrategyConfig::Numeric {
                precision: self.precision,
            },
            StrategyArg::Byte => StrategyConfig::Byte,
            StrategyArg::CalAbs => StrategyConfig::CalAbs {
                resolution: self.resolution.into(),
                year_margin: tempotok::tokenizer::DEFAULT_YEAR_MARGIN,
            },
            StrategyArg::CalRel => StrategyConfig::CalRel {
                resolution: self.resolution.into(),
            },
            StrategyArg::Bin => StrategyConfig::ScaleBin {
                scale: self.scale.into(),
                bins: self.bins,
            },
            StrategyArg::Rsq => StrategyConfig::Rsq {
                scale: self.scale.into(),
                levels: self.levels.0.clone(),
                engine: match self.engine {
                    EngineArg::Exact => KMeansEngine::Exact,
                    EngineArg::Lloyd => KMeansEngine::Lloyd(LloydConfig {
                        seed: self.seed,
                        ..LloydConfig::default()
                    }),
                },
            },
        }
    }
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    strategy: StrategyFlags,
    #[arg(long, value_enum)]
    unit: UnitArg,
    #[arg(long)]
    data: PathBuf,
    /// Spec file to write.
    #[arg(long)]
    out: PathBuf,
    /// Also write the vocabulary manifest here.
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Args)]
struct EncodeArgs {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value = "type-time")]
    order: OrderArg,
    /// Defaults to the unit stored in the spec file; must agree with it.
    #[arg(long, value_enum)]
    unit: Option<UnitArg>,
    /// Token-stream JSONL to write (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DecodeArgs {
    #[arg(long)]
    spec: PathBuf,
    /// Token-stream JSONL.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value = "type-time")]
    order: OrderArg,
    /// Decoded JSONL to write (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum)]
    unit: UnitArg,
    #[arg(long, value_parser = parse_bins, default_value = "50")]
    bins: usize,
    /// Directory for `hist_linear.csv` and `hist_log.csv`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum)]
    unit: UnitArg,
    /// Benchmark this strategy only (default: the standard presets).
    #[arg(long, value_enum)]
    strategy: Option<StrategyArg>,
    #[arg(long, value_enum, default_value = "linear")]
    scale: ScaleArg,
    #[arg(long, value_parser = parse_bins, default_value = "256")]
    bins: usize,
    #[arg(long, value_parser = parse_levels, default_value = "256")]
    levels: Levels,
    #[arg(long, value_enum, default_value = "second")]
    resolution: ResolutionArg,
    #[arg(long, default_value_t = 6, value_parser = clap::value_parser!(u32).range(0..=17))]
    precision: u32,
    #[arg(long, value_enum, default_value = "exact")]
    engine: EngineArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// CSV report to write.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum, default_value = "lognormal")]
    shape: ShapeArg,
    #[arg(long, default_value_t = 100)]
    sequences: usize,
    #[arg(long, default_value_t = 20)]
    length: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "hour")]
    unit: UnitArg,
    /// Dataset JSONL to write (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum)]
    unit: UnitArg,
    /// Interval/timestamp disagreement tolerance, in dataset units.
    #[arg(long, default_value_t = 1e-3)]
    tol: f64,
}

/// Failure classes, in exit-code order.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Data(String),
    Internal(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Internal(_) => 3,
        }
    }

    fn line(&self) -> String {
        let (tag, msg) = match self {
            Failure::Usage(m) => ("usage", m),
            Failure::Data(m) => ("data", m),
            Failure::Internal(m) => ("internal", m),
        };
        format!("error[{tag}]: {}", msg.replace('\n', " "))
    }
}

/// The error chain joined with `: `, skipping causes whose text the
/// previous link already includes.
fn chain_message(err: &anyhow::Error) -> String {
    let mut msg = String::new();
    for cause in err.chain() {
        let text = cause.to_string();
        if !msg.ends_with(&text) {
            if !msg.is_empty() {
                msg.push_str(": ");
            }
            msg.push_str(&text);
        }
    }
    msg
}

fn classify(err: anyhow::Error) -> Failure {
    let msg = chain_message(&err);
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<tempotok::Error>() {
            return match e {
                tempotok::Error::InvalidParameter(_) => Failure::Usage(msg),
                tempotok::Error::Internal(_) => Failure::Internal(msg),
                _ => Failure::Data(msg),
            };
        }
        if cause.downcast_ref::<io::Error>().is_some() {
            return Failure::Data(msg);
        }
    }
    Failure::Internal(msg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            let rendered = e.render().to_string();
            // clap puts details (e.g. missing arguments) on indented lines
            let detail: Vec<&str> = rendered
                .lines()
                .take_while(|l| !l.starts_with("Usage:") && !l.starts_with("For more information"))
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .collect();
            let message = detail.join(" ");
            eprintln!("{}", Failure::Usage(message.trim_start_matches("error: ").to_string()).line());
            let usage = rendered
                .lines()
                .find(|l| l.starts_with("Usage:"))
                .map(str::to_string)
                .unwrap_or_else(|| Cli::command().render_usage().to_string());
            eprintln!("{usage}");
            eprintln!("For more information, try '--help'.");
            return ExitCode::from(1);
        }
    };
    if cli.version {
        println!("tempotok {} (spec format {FORMAT_VERSION})", env!("CARGO_PKG_VERSION"));
        return ExitCode::SUCCESS;
    }
    let Some(command) = cli.command else {
        eprintln!("{}", Failure::Usage("a subcommand is required".into()).line());
        eprintln!("{}", Cli::command().render_usage());
        return ExitCode::from(1);
    };
    let result = match cli.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n as usize)
            .build()
            .map_err(|e| anyhow!(tempotok::Error::Internal(e.to_string())))
            .and_then(|pool| pool.install(|| run(command))),
        None => run(command),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let failure = classify(e);
            eprintln!("{}", failure.line());
            ExitCode::from(failure.code())
        }
    }
}

fn run(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Fit(a) => fit(a),
        Command::Encode(a) => encode(a),
        Command::Decode(a) => decode(a),
        Command::Analyze(a) => analyze_cmd(a),
        Command::Bench(a) => bench(a),
        Command::Gen(a) => gen(a),
        Command::Stats(a) => stats(a),
    }
}

fn read_dataset(path: &Path, unit: TimeUnit) -> anyhow::Result<Dataset> {
    load_dataset(path, unit).with_context(|| format!("reading {}", path.display()))
}

/// Buffered writer to `path`, or stdout.
fn output(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn fit(a: FitArgs) -> anyhow::Result<()> {
    let d = read_dataset(&a.data, a.unit.into())?;
    if d.train.is_empty() {
        bail!(tempotok::Error::EmptyInput("train split"));
    }
    let spec = a.strategy.config().fit(&d.train, d.unit)?;
    save_spec(&spec, &a.out).with_context(|| format!("writing {}", a.out.display()))?;
    let manifest = build_manifest(&spec)?;
    if let Some(path) = &a.manifest {
        manifest.save(path).with_context(|| format!("writing {}", path.display()))?;
    }
    println!(
        "fitted {} on {} train sequences: {} tokens per value, {} special tokens",
        spec.label(),
        d.train.len(),
        spec.tokens_per_value(),
        manifest.len()
    );
    Ok(())
}

fn encode(a: EncodeArgs) -> anyhow::Result<()> {
    let spec = load_spec(&a.spec).with_context(|| format!("reading {}", a.spec.display()))?;
    if let Some(unit) = a.unit.map(TimeUnit::from) {
        if unit != spec.unit {
            bail!(tempotok::Error::UnitMismatch {
                spec: spec.unit.to_string(),
                dataset: unit.to_string(),
            });
        }
    }
    let d = read_dataset(&a.data, spec.unit)?;
    let order = a.order.into();
    let seqs: Vec<_> = d.sequences().map(|(_, s)| s).collect();
    let streams = seqs
        .par_iter()
        .enumerate()
        .map(|(i, s)| render_sequence(s, &spec, order).with_context(|| format!("sequence {i}")))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let mut out = output(a.out.as_deref())?;
    write_token_streams(&streams, &mut out)?;
    out.flush()?;
    Ok(())
}

/// One decoded sequence. Absolute-calendar specs recover timestamps, all
/// others recover intervals in dataset units.
#[derive(Serialize)]
struct DecodedLine {
    type_text: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    timestamp: Option<Vec<i64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    interval: Option<Vec<f64>>,
}

fn decoded_line(spec: &TokenizerSpec, stream: &[String], order: TemplateOrder) -> tempotok::Result<DecodedLine> {
    let events = parse_stream(stream, spec, order)?;
    let type_text = events.iter().map(|e| e.type_text.clone()).collect();
    let spu = spec.unit.seconds_per_unit();
    Ok(match spec.input() {
        TimeInput::Timestamp => DecodedLine {
            type_text,
            timestamp: Some(events.iter().map(|e| e.time.round() as i64).collect()),
            interval: None,
        },
        TimeInput::DeltaSeconds => DecodedLine {
            type_text,
            timestamp: None,
            interval: Some(events.iter().map(|e| e.time / spu).collect()),
        },
        TimeInput::Interval => DecodedLine {
            type_text,
            timestamp: None,
            interval: Some(events.iter().map(|e| e.time).collect()),
        },
    })
}

fn decode(a: DecodeArgs) -> anyhow::Result<()> {
    let spec = load_spec(&a.spec).with_context(|| format!("reading {}", a.spec.display()))?;
    let file = File::open(&a.data).with_context(|| format!("reading {}", a.data.display()))?;
    let streams = read_token_streams(BufReader::new(file))?;
    let order = a.order.into();
    let lines = streams
        .par_iter()
        .enumerate()
        .map(|(i, s)| decoded_line(&spec, s, order).with_context(|| format!("stream {}", i + 1)))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let mut out = output(a.out.as_deref())?;
    for line in &lines {
        serde_json::to_writer(&mut out, line)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

fn analyze_cmd(a: AnalyzeArgs) -> anyhow::Result<()> {
    let d = read_dataset(&a.data, a.unit.into())?;
    let (lin, log) = analyze(&d, a.bins)?;
    for h in [&lin, &log] {
        let j = h.modal_bin();
        println!(
            "{:<7} {} intervals, {} bins over [{}, {}], modal bin {} [{}, {}] holds {}",
            h.scale.name(),
            h.total(),
            h.counts.len(),
            h.edges[0],
            h.edges[h.counts.len()],
            j,
            h.edges[j],
            h.edges[j + 1],
            h.counts[j]
        );
    }
    if let Some(dir) = &a.out {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for (name, h) in [("hist_linear.csv", &lin), ("hist_log.csv", &log)] {
            let path = dir.join(name);
            let mut w = BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?);
            h.write_csv(&mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn bench(a: BenchArgs) -> anyhow::Result<()> {
    let d = read_dataset(&a.data, a.unit.into())?;
    d.require_all_splits()?;
    let configs = match a.strategy {
        None => StrategyConfig::presets(),
        Some(strategy) => vec![StrategyFlags {
            strategy,
            scale: a.scale,
            bins: a.bins,
            levels: a.levels.clone(),
            resolution: a.resolution,
            precision: a.precision,
            engine: a.engine,
            seed: a.seed,
        }
        .config()],
    };
    let specs = configs
        .par_iter()
        .map(|c| c.fit(&d.train, d.unit))
        .collect::<tempotok::Result<Vec<_>>>()?;
    let report = compare(&specs, &d)?;
    print!("{report}");
    if let Some(path) = &a.out {
        let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
        report.write_csv(&mut w)?;
        w.flush()?;
    }
    Ok(())
}

fn gen(a: GenArgs) -> anyhow::Result<()> {
    let shape = match a.shape {
        ShapeArg::Lognormal => Shape::lognormal(),
        ShapeArg::Spiky => Shape::spiky(),
        ShapeArg::Mixed => Shape::mixed(),
        ShapeArg::Uniform => Shape::preset("uniform")?,
    };
    let mut cfg = SyntheticConfig::new(shape, a.sequences, a.length, a.seed);
    cfg.unit = a.unit.into();
    let d = gen_synthetic(&cfg)?;
    let mut out = output(a.out.as_deref())?;
    write_dataset(&d, &mut out)?;
    out.flush()?;
    Ok(())
}

fn stats(a: StatsArgs) -> anyhow::Result<()> {
    let d = read_dataset(&a.data, a.unit.into())?;
    println!("{}", dataset_stats(&d));
    let mut warnings = 0;
    for (split, seq) in d.sequences() {
        for w in validate_consistency(seq, d.unit, a.tol) {
            log::warn!("{} sequence: {w}", split.as_str());
            warnings += 1;
        }
    }
    println!("consistency      {warnings} interval(s) disagree with timestamps beyond {}", a.tol);
    Ok(())
}
