//! `patsig`: staged command-line pipeline from patent abstracts to
//! similarity graphs, indicators and validation reports.

mod artifacts;
mod stages;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use patsig_core::ann::{INDEX_MAGIC, INDEX_VERSION};
use patsig_core::embedding::{STORE_MAGIC, STORE_VERSION};
use patsig_core::synth::CorpusSpec;
use patsig_core::{Error, PipelineConfig};

use artifacts::{CliError, Workspace};

#[derive(Parser, Debug)]
#[command(name = "patsig", about = "Technological signatures for patent corpora", disable_version_flag = true)]
struct Cli {
    /// Directory holding the pipeline's artifacts.
    #[arg(long, global = true, default_value = ".")]
    dir: PathBuf,
    /// TOML config file; environment and flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Run every stage on a single thread.
    #[arg(long, global = true)]
    deterministic: bool,
    /// Seed for every randomized stage.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override any config value by dotted path, e.g. `embedding.dim=100`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Print the tool and artifact format versions.
    #[arg(long)]
    version: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Filter a JSONL corpus, detect bigrams and cache tokens.
    Ingest {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        min_year: Option<i32>,
        #[arg(long)]
        max_year: Option<i32>,
        /// Keep applications that were never granted.
        #[arg(long)]
        include_ungranted: bool,
        /// Keep filings that are not the priority filing of their family.
        #[arg(long)]
        include_non_priority: bool,
        #[arg(long)]
        bigram_threshold: Option<u64>,
    },
    /// Train word vectors and TF-IDF weights on the token cache.
    Train {
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        window: Option<usize>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        negatives: Option<usize>,
        #[arg(long)]
        min_count: Option<u64>,
    },
    /// Compute a signature for every patent.
    Vectorize,
    /// Build the nearest-neighbor index over the signatures.
    Index {
        #[arg(long)]
        trees: Option<usize>,
        #[arg(long)]
        leaf_capacity: Option<usize>,
    },
    /// Rank indexed patents by similarity to free text.
    Query {
        text: String,
        #[arg(long, default_value_t = 10)]
        k: usize,
    },
    /// Build the thresholded patent-to-patent similarity graph.
    Edges {
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long)]
        breadth: Option<usize>,
    },
    /// Past/future similarity per patent and as yearly series.
    Indicators {
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long)]
        lambda: Option<f64>,
        /// `mean` or `sum`.
        #[arg(long)]
        normalization: Option<String>,
    },
    /// Country-to-country knowledge flows.
    Flows {
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long)]
        lambda: Option<f64>,
        /// Inclusive source-year range, e.g. `1990-1999`.
        #[arg(long)]
        period: Option<String>,
        #[arg(long)]
        dedup_pairs: bool,
    },
    /// Predict first-listed IPC subclasses from signatures.
    EvalClassify {
        #[arg(long)]
        holdout: Option<f64>,
        #[arg(long)]
        epochs: Option<usize>,
        /// Pair each training vector with the next observation's label.
        #[arg(long)]
        placebo: bool,
    },
    /// Compare similarity of pairs sharing an attribute with random pairs.
    EvalRelational {
        /// Comma-separated, e.g. `shared_ipc_subclass,citation`.
        #[arg(long)]
        conditions: Option<String>,
        #[arg(long)]
        pairs: Option<usize>,
    },
    /// Write a seeded synthetic corpus.
    Synth {
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = 1000)]
        records: usize,
    },
    /// Print the resolved configuration.
    Config,
}

fn text<T: ToString>(v: &Option<T>) -> Option<String> {
    v.as_ref().map(T::to_string)
}

fn overrides(cli: &Cli) -> Result<Vec<(String, String)>> {
    let mut out: Vec<(String, String)> = Vec::new();
    for s in &cli.set {
        let (k, v) = s.split_once('=').ok_or_else(|| CliError::Usage(format!("--set expects KEY=VALUE, got {s:?}")))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    let mut put = |path: &str, v: Option<String>| {
        if let Some(v) = v {
            out.push((path.to_string(), v));
        }
    };
    put("seed", text(&cli.seed));
    if cli.deterministic {
        put("deterministic", Some("true".into()));
    }
    match &cli.command {
        Some(Command::Ingest {
            min_year, max_year, include_ungranted, include_non_priority, bigram_threshold, ..
        }) => {
            put("corpus.min_year", text(min_year));
            put("corpus.max_year", text(max_year));
            put("corpus.bigram_threshold", text(bigram_threshold));
            if *include_ungranted {
                put("corpus.granted_only", Some("false".into()));
            }
            if *include_non_priority {
                put("corpus.priority_only", Some("false".into()));
            }
        }
        Some(Command::Train { dim, window, epochs, negatives, min_count }) => {
            put("embedding.dim", text(dim));
            put("embedding.window", text(window));
            put("embedding.epochs", text(epochs));
            put("embedding.negatives", text(negatives));
            put("corpus.min_count", text(min_count));
        }
        Some(Command::Index { trees, leaf_capacity }) => {
            put("index.n_trees", text(trees));
            put("index.leaf_capacity", text(leaf_capacity));
        }
        Some(Command::Edges { k, threshold, breadth }) => {
            put("similarity.k", text(k));
            put("similarity.threshold", threshold.map(|v| format!("{v:?}")));
            put("similarity.search_breadth", text(breadth));
        }
        Some(Command::Indicators { tau, lambda, normalization }) => {
            put("indicators.tau", tau.map(|v| format!("{v:?}")));
            put("indicators.lambda", lambda.map(|v| format!("{v:?}")));
            put("indicators.normalization", normalization.clone());
        }
        Some(Command::Flows { tau, lambda, period, dedup_pairs }) => {
            put("indicators.tau", tau.map(|v| format!("{v:?}")));
            put("indicators.lambda", lambda.map(|v| format!("{v:?}")));
            if let Some(p) = period {
                let bad = || CliError::Usage(format!("--period expects START-END, got {p:?}"));
                let (a, b) = p.split_once('-').ok_or_else(bad)?;
                let a: i32 = a.trim().parse().map_err(|_| bad())?;
                let b: i32 = b.trim().parse().map_err(|_| bad())?;
                put("flows.period", Some(format!("[{a}, {b}]")));
            }
            if *dedup_pairs {
                put("flows.dedup_pairs", Some("true".into()));
            }
        }
        Some(Command::EvalClassify { holdout, epochs, .. }) => {
            put("eval.holdout", holdout.map(|v| format!("{v:?}")));
            put("eval.mlp.epochs", text(epochs));
        }
        Some(Command::EvalRelational { conditions, pairs }) => {
            if let Some(c) = conditions {
                let list: Vec<String> = c.split(',').map(|x| format!("{:?}", x.trim())).collect();
                put("eval.conditions", Some(format!("[{}]", list.join(", "))));
            }
            put("eval.pairs", text(pairs));
        }
        _ => {}
    }
    Ok(out)
}

fn resolve_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(p) if !p.is_file() => return Err(CliError::MissingInput(p.clone()).into()),
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    cfg.apply_env(std::env::vars())?;
    let flags = overrides(cli)?;
    cfg.set_all(flags.iter().map(|(k, v)| (k.as_str(), v.as_str())))?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    if cli.version {
        println!("patsig {}", env!("CARGO_PKG_VERSION"));
        println!("vector store {} v{STORE_VERSION}", String::from_utf8_lossy(&STORE_MAGIC));
        println!("index {} v{INDEX_VERSION}", String::from_utf8_lossy(&INDEX_MAGIC));
        return Ok(());
    }
    let cfg = resolve_config(&cli)?;
    if cfg.deterministic {
        // fails only if a pool already exists, which cannot happen here
        let _ = rayon::ThreadPoolBuilder::new().num_threads(1).build_global();
    }
    let Some(command) = &cli.command else {
        return Err(CliError::Usage("no subcommand given; see --help".into()).into());
    };
    if let Command::Synth { output, records } = command {
        let spec = CorpusSpec {
            records: *records,
            seed: cli.seed.unwrap_or(CorpusSpec::default().seed),
            ..Default::default()
        };
        return stages::synth(&spec, output);
    }
    if let Command::Config = command {
        print!("{}", cfg.to_toml());
        return Ok(());
    }
    let ws = Workspace::new(cli.dir.clone())?;
    match command {
        Command::Ingest { input, .. } => stages::ingest(&ws, &cfg, input),
        Command::Train { .. } => stages::train(&ws, &cfg),
        Command::Vectorize => stages::vectorize(&ws, &cfg),
        Command::Index { .. } => stages::index(&ws, &cfg),
        Command::Query { text, k } => stages::query(&ws, &cfg, text, *k),
        Command::Edges { .. } => stages::edges(&ws, &cfg),
        Command::Indicators { .. } => stages::indicators(&ws, &cfg),
        Command::Flows { .. } => stages::flows(&ws, &cfg),
        Command::EvalClassify { placebo, .. } => stages::eval_classify(&ws, &cfg, *placebo),
        Command::EvalRelational { .. } => stages::eval_relational(&ws, &cfg),
        Command::Synth { .. } | Command::Config => unreachable!("handled above"),
    }
}

/// Exit codes. Each failure class gets its own code.
mod exit {
    pub const INTERNAL: u8 = 1;
    pub const USAGE: u8 = 2;
    pub const MISSING_INPUT: u8 = 3;
    pub const BAD_ARTIFACT: u8 = 4;
    pub const STALE: u8 = 5;
    pub const BAD_DATA: u8 = 6;
}

fn classify_core(e: &Error) -> (&'static str, u8) {
    match e {
        Error::Item { source, .. } => classify_core(source),
        Error::Config(_) => ("config", exit::USAGE),
        Error::Io(io) if io.kind() == std::io::ErrorKind::NotFound => ("missing_input", exit::MISSING_INPUT),
        Error::Io(_) => ("io", exit::INTERNAL),
        Error::BadMagic { .. }
        | Error::Version { .. }
        | Error::Truncated { .. }
        | Error::Checksum { .. }
        | Error::Format { .. }
        | Error::DimensionMismatch { .. }
        | Error::VocabularyMismatch { .. } => ("bad_artifact", exit::BAD_ARTIFACT),
        _ => ("bad_data", exit::BAD_DATA),
    }
}

fn classify(err: &anyhow::Error) -> (&'static str, u8) {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<CliError>() {
            return match e {
                CliError::Usage(_) => ("usage", exit::USAGE),
                CliError::MissingInput(_) => ("missing_input", exit::MISSING_INPUT),
                CliError::Stale(_) => ("stale_input", exit::STALE),
            };
        }
        if let Some(e) = cause.downcast_ref::<Error>() {
            return classify_core(e);
        }
        if let Some(e) = cause.downcast_ref::<std::io::Error>() {
            if e.kind() == std::io::ErrorKind::NotFound {
                return ("missing_input", exit::MISSING_INPUT);
            }
        }
    }
    ("internal", exit::INTERNAL)
}

/// One line: `error kind=<kind> exit=<code> msg=<text>`.
fn report(kind: &str, code: u8, msg: &str) -> ExitCode {
    let flat: String = msg.split_whitespace().collect::<Vec<_>>().join(" ");
    eprintln!("error kind={kind} exit={code} msg={flat}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            return report("usage", exit::USAGE, first);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (kind, code) = classify(&e);
            report(kind, code, &format!("{e:#}"))
        }
    }
}
