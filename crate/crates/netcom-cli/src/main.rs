mod bench;
mod pipeline;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Exit code for a missing or unreadable input file.
const EXIT_IO: u8 = 2;
/// Exit code for invalid flags or flag combinations.
const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(
    name = "netcom",
    version,
    about = "Community detection on complex networks via nearest-neighbor search in a metric embedding"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline: parse, embed, detect communities, score.
    Detect(DetectArgs),
    /// Run the pipeline once per backend and compare counters and quality.
    Bench(BenchArgs),
}

#[derive(Args)]
struct DetectArgs {
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Comma-separated backends to compare.
    #[arg(long, default_value = "exact,mtree,lsh")]
    backends: String,
    /// Nearest-neighbor queries sampled for the index workload.
    #[arg(long, default_value_t = 256)]
    queries: usize,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Edge-list file: '#' comments, two integer tokens per data line.
    #[arg(long)]
    input: PathBuf,

    /// Mark the input as directed. Direction is discarded either way; every
    /// edge is symmetrized.
    #[arg(long)]
    directed: bool,

    /// Diagonal weight, or "auto": 2 for sparse graphs (mean degree < 4),
    /// 1 for moderate (up to 50), 0 for dense.
    #[arg(long, default_value = "1")]
    lambda: String,

    /// Row similarity.
    #[arg(long, value_enum, default_value_t = SigmaArg::Cosine)]
    sigma: SigmaArg,

    /// Similarity-to-distance map ("linear" is 1 - sigma).
    #[arg(long, value_enum, default_value_t = PhiArg::Arccos)]
    phi: PhiArg,

    /// Community count, or "auto" for the farthest-first radius-drop rule.
    #[arg(long, default_value = "auto")]
    k: String,

    /// Nearest-center machinery for the assignment passes.
    #[arg(long, value_enum, default_value_t = BackendArg::Exact)]
    backend: BackendArg,

    /// Bits per LSH table.
    #[arg(long = "lsh-bits", default_value_t = 8)]
    lsh_bits: u32,

    /// Number of LSH tables.
    #[arg(long = "lsh-tables", default_value_t = 4)]
    lsh_tables: u32,

    /// M-tree leaf capacity.
    #[arg(long = "leaf-capacity", default_value_t = 16)]
    leaf_capacity: usize,

    #[arg(long, default_value_t = 42)]
    seed: u64,

    #[arg(long = "max-iters", default_value_t = 100)]
    max_iters: u32,

    /// Write the report here instead of stdout. Required for --format csv.
    #[arg(long)]
    output: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    format: FormatArg,

    /// Worker thread cap (default: available parallelism). The env var
    /// NETCOM_THREADS overrides this flag. Results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SigmaArg {
    Cosine,
    Pearson,
    Spearman,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PhiArg {
    Arccos,
    Linear,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BackendArg {
    Exact,
    Mtree,
    Lsh,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };

    let result = match cli.command {
        Command::Detect(args) => pipeline::run_detect(&args.common),
        Command::Bench(args) => bench::run_bench(&args.common, &args.backends, args.queries),
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("netcom: {e:#}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn exit_code_for(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<UsageError>().is_some() {
        EXIT_USAGE
    } else if e.downcast_ref::<std::io::Error>().is_some() {
        EXIT_IO
    } else {
        1
    }
}

/// A bad flag value or combination, distinct from runtime failures.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for UsageError {}
