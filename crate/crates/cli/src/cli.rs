//! Command-line front end. Exit codes: 0 success, 1 invalid input or
//! workflow, 2 failure while executing.

use std::fmt::Write as _;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;
use topicflow_core::corpus::{build_dictionary, BowCorpus, DictionaryFilter};
use topicflow_core::eval::{coherence_sweep, CoherenceMetric, SweepResult, DEFAULT_TOP_M};
use topicflow_core::lda::{LdaParams, DEFAULT_BETA, DEFAULT_ITERATIONS};
use topicflow_core::text::{tokenize_all, TokenizerOptions};
use topicflow_workflow::sources::{ResolvedSource, SourceContent};
use topicflow_workflow::{
    execute, figure1_template, validate, ExecuteError, ExecuteOptions, NodeKind, SourceDescriptor,
    SourceResolver, Workflow, ENGINE_VERSION,
};
use tracing::info;

use crate::service::{self, ServiceConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_FAILED: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "topicflow", version = ENGINE_VERSION, about = "Topic modelling workflows")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate and execute a workflow file.
    Run(RunArgs),
    /// Check a workflow file and print its diagnostics.
    Validate {
        workflow: PathBuf,
    },
    /// Train one model per K and report coherence and perplexity.
    Sweep(SweepArgs),
    /// Start the HTTP service.
    Serve(ServeArgs),
    /// Print the standard workflow template.
    Template,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    pub workflow: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Replace a data node's source: `NODE=PATH`. Directories are read as
    /// text directories, other files as delimited (tab for `.tsv`).
    #[arg(long = "corpus", value_name = "NODE=PATH")]
    pub corpus: Vec<String>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// File, directory or `builtin:sample-abstracts`.
    #[arg(long, default_value = "builtin:sample-abstracts")]
    pub input: String,
    /// `delimited` or `txt-dir`; guessed from the input when omitted.
    #[arg(long)]
    pub format: Option<String>,
    #[arg(long)]
    pub delimiter: Option<String>,
    #[arg(long)]
    pub id_column: Option<String>,
    #[arg(long)]
    pub text_column: Option<String>,
    /// Stopword file, `builtin:stopwords-en` or `none`.
    #[arg(long, default_value = "builtin:stopwords-en")]
    pub stopwords: String,
    /// `2..8`, `2..=8` (both inclusive) or `2,3,5`.
    #[arg(long, default_value = "2..8")]
    pub k_list: String,
    #[arg(long, default_value = "umass")]
    pub metric: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_ITERATIONS)]
    pub iterations: usize,
    /// Defaults to 50/K.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_BETA)]
    pub beta: f64,
    #[arg(long, default_value_t = DEFAULT_TOP_M)]
    pub top_m: usize,
    /// Also write the table as CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    #[arg(long, default_value = "topicflow-data")]
    pub data_dir: PathBuf,
    /// Directory of web UI assets.
    #[arg(long)]
    pub ui_dir: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => EXIT_INVALID,
            CliError::Failed(_) => EXIT_FAILED,
        }
    }
}

/// Parses `2..8`, `2..=8` or a comma list into distinct positive integers.
pub fn parse_k_list(s: &str) -> Result<Vec<usize>, String> {
    let num = |t: &str| {
        t.trim()
            .parse::<usize>()
            .map_err(|_| format!("'{}' is not a positive integer", t.trim()))
    };
    let mut ks: Vec<usize> = if let Some((a, b)) = s.split_once("..") {
        let b = b.strip_prefix('=').unwrap_or(b);
        let (lo, hi) = (num(a)?, num(b)?);
        if lo > hi {
            return Err(format!("empty range {s}"));
        }
        (lo..=hi).collect()
    } else {
        s.split(',').map(num).collect::<Result<_, _>>()?
    };
    if ks.contains(&0) {
        return Err("K must be at least 1".into());
    }
    let n = ks.len();
    ks.sort_unstable();
    ks.dedup();
    if ks.len() != n {
        return Err(format!("K list '{s}' repeats a value"));
    }
    Ok(ks)
}

fn read_workflow(path: &Path) -> Result<Workflow, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Invalid(format!("cannot read {}: {e}", path.display())))?;
    Workflow::from_bytes(&bytes).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))
}

fn print_diagnostics(path: &Path, diagnostics: &[topicflow_workflow::Diagnostic]) {
    for d in diagnostics {
        eprintln!("{}: {d}", path.display());
    }
}

/// Applies `NODE=PATH` overrides to data nodes.
pub fn apply_overrides(workflow: &mut Workflow, overrides: &[String]) -> Result<(), CliError> {
    for o in overrides {
        let (node, path) = o
            .split_once('=')
            .ok_or_else(|| CliError::Invalid(format!("--corpus expects NODE=PATH, got '{o}'")))?;
        let spec = workflow
            .node_mut(node)
            .filter(|n| n.kind == NodeKind::Data)
            .ok_or_else(|| CliError::Invalid(format!("--corpus: '{node}' is not a data node")))?;
        let p = Path::new(path);
        let abs = std::path::absolute(p).unwrap_or_else(|_| p.to_path_buf());
        let mut src = SourceDescriptor::new(abs.to_string_lossy(), if p.is_dir() { "txt-dir" } else { "delimited" });
        if let Some(old) = &spec.source {
            if src.format == "delimited" {
                src.id_column = old.id_column.clone();
                src.text_column = old.text_column.clone();
                src.metadata_columns = old.metadata_columns.clone();
            }
        }
        if path.to_ascii_lowercase().ends_with(".tsv") {
            src.delimiter = Some("\t".into());
        }
        spec.source = Some(src);
    }
    Ok(())
}

pub fn cmd_run(args: &RunArgs) -> Result<(), CliError> {
    let mut workflow = read_workflow(&args.workflow)?;
    apply_overrides(&mut workflow, &args.corpus)?;
    let base = args.workflow.parent().map(Path::to_path_buf).unwrap_or_default();
    let opts = ExecuteOptions::new(args.seed, &args.out, SourceResolver::new(base));
    match execute(&workflow, &opts) {
        Ok(m) => {
            println!(
                "{} artifacts written to {} (workflow {}, seed {})",
                m.artifacts.len(),
                args.out.display(),
                &m.workflow_hash[..12],
                m.seed
            );
            Ok(())
        }
        Err(ExecuteError::Invalid(d)) => {
            print_diagnostics(&args.workflow, &d);
            Err(CliError::Invalid(format!("{} diagnostic(s)", d.len())))
        }
        Err(e) => Err(CliError::Failed(e.to_string())),
    }
}

pub fn cmd_validate(path: &Path) -> Result<(), CliError> {
    let workflow = read_workflow(path)?;
    let d = validate(&workflow);
    if d.is_empty() {
        println!("{}: valid ({} nodes, {} edges)", path.display(), workflow.nodes.len(), workflow.edges.len());
        Ok(())
    } else {
        print_diagnostics(path, &d);
        Err(CliError::Invalid(format!("{} diagnostic(s)", d.len())))
    }
}

fn resolve(resolver: &SourceResolver, src: &SourceDescriptor) -> Result<ResolvedSource, CliError> {
    resolver.resolve(src).map_err(CliError::Failed)
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<SweepResult, CliError> {
    let ks = parse_k_list(&args.k_list).map_err(CliError::Invalid)?;
    let metric: CoherenceMetric = args.metric.parse().map_err(|e: topicflow_core::eval::EvalError| CliError::Invalid(e.to_string()))?;
    let format = args.format.clone().unwrap_or_else(|| {
        if Path::new(&args.input).is_dir() { "txt-dir" } else { "delimited" }.to_string()
    });
    if format != "txt-dir" && format != "delimited" {
        return Err(CliError::Invalid(format!("--format must be delimited or txt-dir, got '{format}'")));
    }
    let mut src = SourceDescriptor::new(args.input.clone(), format);
    src.delimiter = args.delimiter.clone().or_else(|| args.input.to_ascii_lowercase().ends_with(".tsv").then(|| "\t".into()));
    src.id_column = args.id_column.clone();
    src.text_column = args.text_column.clone();
    let resolver = SourceResolver::new(std::env::current_dir().unwrap_or_default());
    let docs = match resolve(&resolver, &src)?.content {
        SourceContent::Documents(d) => d,
        SourceContent::Stopwords(_) => unreachable!("document formats resolve to documents"),
    };
    let stopwords = if args.stopwords == "none" {
        Default::default()
    } else {
        match resolve(&resolver, &SourceDescriptor::new(args.stopwords.clone(), "stopwords"))?.content {
            SourceContent::Stopwords(s) => s,
            SourceContent::Documents(_) => unreachable!("stopword format resolves to stopwords"),
        }
    };
    let tokens = tokenize_all(&docs, &stopwords, &TokenizerOptions::default());
    let dict = build_dictionary(&tokens, &DictionaryFilter::default()).map_err(|e| CliError::Failed(e.to_string()))?;
    let corpus = BowCorpus::build(&tokens, &dict);
    let params = LdaParams {
        alpha: args.alpha,
        beta: args.beta,
        iterations: args.iterations,
        burn_in: 0,
        seed: args.seed,
    };
    info!(docs = docs.len(), vocabulary = dict.len(), ks = ?ks, "sweep started");
    let result = coherence_sweep(&corpus, &dict, &tokens, &ks, &params, args.top_m, metric)
        .map_err(|e| CliError::Failed(e.to_string()))?;
    if let Some(out) = &args.out {
        std::fs::write(out, result.to_csv()).map_err(|e| CliError::Failed(format!("cannot write {}: {e}", out.display())))?;
    }
    Ok(result)
}

pub fn format_sweep_table(r: &SweepResult) -> String {
    let mut s = format!("{:>4}  {:>16}  {:>12}  {}\n", "K", format!("coherence_{}", r.metric), "perplexity", "seed");
    for row in &r.rows {
        let _ = writeln!(s, "{:>4}  {:>16.6}  {:>12.3}  {}", row.k, row.coherence_mean, row.perplexity, row.seed);
    }
    s
}

pub fn cmd_serve(args: &ServeArgs) -> Result<(), CliError> {
    let addr: SocketAddr = format!("{}:{}", args.host, args.port)
        .parse()
        .map_err(|e| CliError::Invalid(format!("bad address: {e}")))?;
    let config = ServiceConfig {
        data_dir: args.data_dir.clone(),
        ui_dir: args.ui_dir.clone(),
    };
    let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::Failed(e.to_string()))?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .map_err(|e| CliError::Failed(format!("cannot bind {addr}: {e}")))?;
        eprintln!("serving on http://{}", listener.local_addr().map_err(|e| CliError::Failed(e.to_string()))?);
        service::serve(listener, config, async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| CliError::Failed(format!("{e:#}")))
    })
}

/// Runs one parsed command and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Validate { workflow } => cmd_validate(workflow),
        Command::Sweep(a) => cmd_sweep(a).map(|r| print!("{}", format_sweep_table(&r))),
        Command::Serve(a) => cmd_serve(a),
        Command::Template => {
            let bytes = figure1_template().to_canonical_bytes();
            print!("{}", String::from_utf8_lossy(&bytes));
            Ok(())
        }
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
