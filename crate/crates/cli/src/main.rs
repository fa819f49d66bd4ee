use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fastforward::eval::{Metric, DEFAULT_MIN_GRADE};
use fastforward::{Bm25Params, PassageSplitter};
use fastforward_cli::commands::{self, Encoder, IndexOptions};
use fastforward_cli::{CliError, CliResult, Config, Mode};

#[derive(Parser)]
#[command(
    name = "fastforward",
    version,
    about = "Sparse retrieval with fast-forward dense re-scoring"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the sparse index and the forward index from a corpus.
    Index(IndexArgs),
    /// Compress a forward index by sequential coalescing.
    Coalesce(CoalesceArgs),
    /// Retrieve and re-score queries, writing a TREC run file.
    Search(SearchArgs),
    /// Score a run file against relevance judgments.
    Evaluate(EvaluateArgs),
    /// Measure per-query re-scoring latency.
    Bench(BenchArgs),
}

#[derive(Args)]
struct IndexArgs {
    /// Corpus file: `.jsonl` for JSON lines, anything else for TSV.
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    sparse_out: PathBuf,
    #[arg(long)]
    forward_out: PathBuf,
    /// `toy` for the built-in hashing encoder, or a vector JSONL file.
    #[arg(long, default_value = "toy")]
    encoder: String,
    #[arg(long, default_value_t = 64)]
    dimension: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = Bm25Params::PASSAGE.k1)]
    k1: f64,
    #[arg(long, default_value_t = Bm25Params::PASSAGE.b)]
    b: f64,
    /// Passage window in tokens for the toy encoder.
    #[arg(long, default_value_t = 200)]
    window: usize,
    #[arg(long, default_value_t = 200)]
    stride: usize,
}

#[derive(Args)]
struct CoalesceArgs {
    #[arg(long)]
    index: PathBuf,
    /// Cosine-distance threshold.
    #[arg(long, allow_negative_numbers = true)]
    delta: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated thresholds to sweep instead of writing an index.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    sweep: Vec<f64>,
    /// Write the sweep report here instead of stdout.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct SearchArgs {
    /// `key = value` file; flags override its settings.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    sparse: Option<PathBuf>,
    #[arg(long)]
    forward: Option<PathBuf>,
    /// Queries as `qid<TAB>text`.
    #[arg(long)]
    queries: Option<PathBuf>,
    /// Query vectors as `qid<TAB>f,f,...`; the toy encoder is used otherwise.
    #[arg(long)]
    query_vectors: Option<PathBuf>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    #[arg(long, allow_negative_numbers = true)]
    alpha: Option<f64>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    ks: Option<usize>,
    #[arg(long)]
    kd: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Early stopping with the true dense maximum as its bound.
    #[arg(long)]
    sd_oracle: bool,
    /// Output run file.
    #[arg(long)]
    run: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    run: PathBuf,
    #[arg(long)]
    qrels: PathBuf,
    /// Comma-separated metrics such as `ndcg@10,ap@1000,recall@1000,rr@10`.
    #[arg(long, value_delimiter = ',', default_value = "ndcg@10")]
    metrics: Vec<String>,
    /// Lowest grade counted as relevant by AP, recall and RR.
    #[arg(long, default_value_t = DEFAULT_MIN_GRADE)]
    min_grade: u32,
    #[arg(long)]
    per_query: bool,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    search: SearchArgs,
    #[arg(long, default_value_t = 3)]
    rounds: usize,
    #[arg(long, default_value_t = 1)]
    warmup: usize,
    /// Write the per-query CSV here; a table goes to stdout.
    #[arg(long)]
    csv: Option<PathBuf>,
}

impl SearchArgs {
    fn into_config(self) -> CliResult<Config> {
        let mut c = Config::default();
        if let Some(path) = &self.config {
            c.apply_file(path)?;
        }
        macro_rules! over {
            ($($field:ident => $target:expr),* $(,)?) => {
                $(if let Some(v) = self.$field { $target = v; })*
            };
        }
        over!(alpha => c.alpha, k => c.k, ks => c.k_s, kd => c.k_d, seed => c.seed, mode => c.mode);
        macro_rules! path {
            ($($field:ident),*) => { $(if self.$field.is_some() { c.$field = self.$field; })* };
        }
        path!(sparse, forward, queries, query_vectors, run);
        if self.sd_oracle {
            c.sd_oracle = true;
        }
        c.validate()?;
        Ok(c)
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let mut out = io::stdout().lock();
    let io_err = |e: io::Error| CliError::Input(e.to_string());
    match cli.command {
        Command::Index(a) => {
            let bm25 = Bm25Params::new(a.k1, a.b)?;
            let encoder = if a.encoder == "toy" {
                Encoder::Toy {
                    dimension: a.dimension,
                    seed: a.seed,
                    splitter: PassageSplitter::new(a.window, a.stride)?,
                }
            } else {
                Encoder::Interchange(PathBuf::from(a.encoder))
            };
            let summary = commands::cmd_index(&IndexOptions {
                corpus: a.corpus,
                sparse_out: a.sparse_out,
                forward_out: a.forward_out,
                encoder,
                bm25,
            })?;
            writeln!(
                out,
                "indexed {} docs, {} vectors of dimension {}",
                summary.docs, summary.vectors, summary.dimension
            )
            .map_err(io_err)?;
        }
        Command::Coalesce(a) => {
            if !a.sweep.is_empty() {
                let rows = commands::cmd_sweep(&a.index, &a.sweep, a.csv.as_deref())?;
                if a.csv.is_none() {
                    fastforward::coalesce::write_sweep_csv(&mut out, &rows)?;
                }
                return Ok(());
            }
            let delta = a.delta.ok_or_else(|| CliError::Usage("--delta is required".into()))?;
            let target = a.out.ok_or_else(|| CliError::Usage("--out is required".into()))?;
            let stats = commands::cmd_coalesce(&a.index, delta, &target)?;
            writeln!(
                out,
                "coalesced {} vectors into {} (ratio {:.4}) at delta {delta}",
                stats.input_vectors,
                stats.output_vectors,
                stats.compression_ratio()
            )
            .map_err(io_err)?;
        }
        Command::Search(a) => {
            let config = a.into_config()?;
            let run = commands::cmd_search(&config)?;
            if config.run.is_none() {
                run.write(&mut out)?;
            }
        }
        Command::Evaluate(a) => {
            let metrics = a
                .metrics
                .iter()
                .map(|m| m.parse::<Metric>())
                .collect::<Result<Vec<_>, _>>()?;
            let e = commands::cmd_evaluate(&a.run, &a.qrels, &metrics, a.min_grade)?;
            e.write_table(&mut out, a.per_query)?;
        }
        Command::Bench(a) => {
            let config = a.search.into_config()?;
            let report = commands::cmd_bench(&config, a.warmup, a.rounds)?;
            match &a.csv {
                Some(path) => {
                    commands::write_latency_csv(&report, path)?;
                    report.write_table(&mut out)?;
                }
                None => report.write_csv(&mut out)?,
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
