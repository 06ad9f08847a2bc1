mod commands;
mod report;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "normality-lab", version, about = "Toeplitz digit sequences and normality statistics")]
struct Cli {
    /// Cap on worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    report: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Split n into its P-smooth and P-free parts and rank the free part.
    Decompose(DecomposeArgs),
    /// Apply the Toeplitz transform to a DSEQ file, or extract its free digits.
    Transform(TransformArgs),
    /// Draw a digit sequence from the uniform measure on T_P (or i.i.d.).
    Sample(SampleArgs),
    /// Block-frequency statistics of a DSEQ file.
    Stats(StatsArgs),
    /// Normalized Weyl sum |Σ e(r^n h x)| / N of a DSEQ file.
    Weyl(WeylArgs),
    /// Gaps between consecutive equivalent integers.
    GapScan(GapScanArgs),
    /// Generate the counterexample process and report per-level drift.
    Counterexample(CounterexampleArgs),
    /// Joint block frequency of a word family at arithmetic positions.
    Condii(CondiiArgs),
    /// Check the block identity for removal sets on random inputs.
    Lemma5(Lemma5Args),
    /// Exponential-sum bounds.
    Bounds(BoundsArgs),
}

#[derive(Args, Debug, Serialize)]
struct DecomposeArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    primes: Vec<u64>,
    /// One or more positive integers.
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<u64>,
}

#[derive(Args, Debug, Serialize)]
struct TransformArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    primes: Vec<u64>,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Output length; required unless --extract.
    #[arg(long, required_unless_present = "extract")]
    len: Option<usize>,
    /// Extract the free digits of a Toeplitz sequence instead.
    #[arg(long)]
    extract: bool,
}

#[derive(Args, Debug, Serialize)]
struct SampleArgs {
    #[arg(long, value_delimiter = ',', required_unless_present = "iid")]
    primes: Vec<u64>,
    #[arg(long)]
    base: u32,
    #[arg(long)]
    len: usize,
    #[arg(long)]
    seed: u64,
    /// Independent uniform digits instead of a Toeplitz sample.
    #[arg(long, conflicts_with = "primes")]
    iid: bool,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct StatsArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 3)]
    kmax: usize,
    /// Also include the full counts for this block mode.
    #[arg(long, value_enum)]
    counts: Option<Mode>,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Mode {
    Aligned,
    Sliding,
}

#[derive(Args, Debug, Serialize)]
struct WeylArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    r: u64,
    #[arg(long, default_value_t = 1)]
    h: u64,
    #[arg(long)]
    n: u64,
}

#[derive(Args, Debug, Serialize)]
struct GapScanArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    primes: Vec<u64>,
    #[arg(long)]
    bound: u64,
    /// Pairs below this index are left out of the minimum ratio.
    #[arg(long, default_value_t = 1)]
    floor: u64,
    /// Also certify that every window [n, n + ⌊2√n⌋] with floor ≤ n ≤ bound holds distinct ranks.
    #[arg(long)]
    certify: bool,
}

#[derive(Args, Debug, Serialize)]
struct CounterexampleArgs {
    #[arg(long, default_value_t = 2)]
    base: u32,
    #[arg(long = "big-k", default_value_t = 1)]
    big_k: u64,
    #[arg(long)]
    seed: u64,
    /// Number of dyadic levels (digits 1 to 2^levels - 1).
    #[arg(long, default_value_t = 16)]
    levels: u32,
    /// Digit whose frequency drift is reported.
    #[arg(long, default_value_t = 0)]
    digit: u8,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct CondiiArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    p1: u64,
    #[arg(long)]
    p2: u64,
    /// JSON file holding {"k": .., "words": [[..]], "offsets": [[..]]}.
    #[arg(long)]
    query: PathBuf,
    #[arg(long)]
    n: u64,
}

#[derive(Args, Debug, Serialize)]
struct Lemma5Args {
    #[arg(long)]
    p1: u64,
    #[arg(long)]
    p2: u64,
    #[arg(long)]
    k: u32,
    #[arg(long, default_value_t = 100)]
    trials: u64,
    #[arg(long, default_value_t = 100)]
    windows: usize,
    #[arg(long, default_value_t = 2)]
    base: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug, Serialize)]
struct BoundsArgs {
    #[command(subcommand)]
    which: Bounds,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum Bounds {
    /// ∫ |Σ_{j=m+1}^{m+k} e(r^j h x)|² dμ on T_{2} truncated to ℓ digits.
    L2(L2Args),
    /// Sweep of Riesz-product sums over N.
    Riesz(RieszArgs),
    /// The weight M_q as an exact fraction.
    Mq(MqArgs),
}

#[derive(Args, Debug, Serialize)]
struct L2Args {
    #[arg(long, default_value_t = 2)]
    base: u32,
    #[arg(long, default_value_t = 3)]
    r: u64,
    #[arg(long, default_value_t = 1)]
    h: u64,
    #[arg(long)]
    m: u64,
    #[arg(long)]
    k: u64,
    /// Truncation length; defaults to the smallest admissible value.
    #[arg(long)]
    ell: Option<usize>,
    /// Sample instead of enumerating; the value is the number of samples.
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Enumeration budget.
    #[arg(long, env = "NORMALITY_LAB_BUDGET", default_value_t = normality_lab::toeplitz::DEFAULT_BUDGET)]
    budget: u64,
}

#[derive(Args, Debug, Serialize)]
struct RieszArgs {
    #[arg(long, default_value_t = 2)]
    base: u32,
    #[arg(long, default_value_t = 3)]
    r: u64,
    /// Decimal integer L.
    #[arg(long, default_value = "1024")]
    l: String,
    /// Products run over odd q above this cutoff.
    #[arg(long, default_value_t = 10)]
    cutoff: u64,
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<u64>,
    #[arg(long, default_value_t = 1e-9)]
    tail_tol: f64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug, Serialize)]
struct MqArgs {
    #[arg(long)]
    base: u32,
    #[arg(long)]
    ell: u64,
    #[arg(long)]
    q: u64,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            return report::fail(&report::CliError::usage(text.trim().trim_start_matches("error: ")));
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            return report::fail(&report::CliError::usage("--threads must be positive"));
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            return report::fail(&report::CliError::usage(e.to_string()));
        }
    }
    match commands::dispatch(&cli.command).and_then(|out| report::emit(&out, cli.report.as_deref())) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report::fail(&e),
    }
}
