use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use futurefill::generate::TokenMap;
use futurefill::EngineKind;

#[derive(Debug, Parser)]
#[command(name = "futurefill", version, about = "Exact online convolution: verification, benchmarks and generation")]
pub struct Cli {
    /// Seed for every random draw of the run.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Write the primary output here instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Emit JSON reports instead of human-readable text.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the oracle suites; exits 1 if any suite fails.
    Verify(VerifyArgs),
    /// Time generation runs and write one CSV row per measured trial.
    Bench(BenchArgs),
    /// Fit log2(metric) against log2(L) from a bench CSV.
    Slope(SlopeArgs),
    /// Generate a sequence from scratch or from a prompt file.
    Gen(GenArgs),
    /// Export a spectral filter bank as CSV.
    Filters(FiltersArgs),
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Largest horizon covered exhaustively by the engine suites.
    #[arg(long = "max-len", default_value_t = 256)]
    pub max_len: usize,
    #[arg(long, hide = true, value_enum)]
    pub inject_fault: Option<Fault>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Fault {
    /// Shift the FutureFill slice of the full convolution by one position.
    FuturefillOffByOne,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Scratch,
    Prompt,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Scratch => "scratch",
            Mode::Prompt => "prompt",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FilterSource {
    Random,
    Spectral,
    File,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Comma-separated engines: naive, epoched, epoched:K, continuous, or all.
    #[arg(long, default_value = "all", value_parser = parse_engines)]
    pub engines: EngineList,
    /// Comma-separated generation lengths, ascending; `2^n` is accepted.
    #[arg(long, value_parser = parse_lengths)]
    pub lengths: LengthList,
    #[arg(long, value_enum, default_value_t = Mode::Scratch)]
    pub mode: Mode,
    /// Prompt length in prompt mode.
    #[arg(long = "prompt-len", default_value_t = 0)]
    pub prompt_len: usize,
    /// Epoch length for every epoched engine, overriding the optimal one.
    #[arg(long)]
    pub epoch: Option<usize>,
    /// Independent single-channel filters run per trial.
    #[arg(long, default_value_t = 1)]
    pub channels: usize,
    #[arg(long, default_value_t = 3)]
    pub trials: usize,
    #[arg(long, default_value_t = 1)]
    pub warmup: usize,
    /// Filter taps: uniform random or top Hankel eigenvectors.
    #[arg(long, value_enum, default_value_t = FilterSource::Random)]
    pub filter: FilterSource,
    /// Map from outputs to fed-back tokens.
    #[arg(long = "token-map", default_value = "clamp:1", value_parser = parse_token_map)]
    pub token_map: TokenMap,
    /// Run channels on separate threads inside a trial.
    #[arg(long = "parallel-channels")]
    pub parallel_channels: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Metric {
    #[value(name = "mac_count")]
    MacCount,
    #[value(name = "ff_cost")]
    FfCost,
    #[value(name = "total_cost")]
    TotalCost,
    #[value(name = "wall_ns")]
    WallNs,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::MacCount => "mac_count",
            Metric::FfCost => "ff_cost",
            Metric::TotalCost => "total_cost",
            Metric::WallNs => "wall_ns",
        }
    }
}

#[derive(Debug, Args)]
pub struct SlopeArgs {
    /// Bench CSV to fit.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = Metric::TotalCost)]
    pub metric: Metric,
    /// Only fit this engine (as named in the CSV).
    #[arg(long)]
    pub engine: Option<String>,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, value_enum, default_value_t = Mode::Scratch)]
    pub mode: Mode,
    /// Prompt sequence file (prompt mode).
    #[arg(long)]
    pub prompt: Option<PathBuf>,
    /// Number of tokens to generate.
    #[arg(long)]
    pub length: usize,
    #[arg(long, default_value = "continuous")]
    pub engine: EngineKind,
    #[arg(long, value_enum, default_value_t = FilterSource::Random)]
    pub filter: FilterSource,
    /// Taps file for `--filter file`, one value per line; zero-extended.
    #[arg(long = "filter-file")]
    pub filter_file: Option<PathBuf>,
    /// First token of scratch generation.
    #[arg(long = "seed-token", default_value_t = 1.0, allow_negative_numbers = true)]
    pub seed_token: f64,
    #[arg(long = "token-map", default_value = "identity", value_parser = parse_token_map)]
    pub token_map: TokenMap,
}

#[derive(Debug, Args)]
pub struct FiltersArgs {
    /// Filter length.
    #[arg(long)]
    pub len: usize,
    /// Number of filters.
    #[arg(long)]
    pub k: usize,
}

#[derive(Debug, Clone)]
pub struct EngineList(pub Vec<EngineKind>);

#[derive(Debug, Clone)]
pub struct LengthList(pub Vec<usize>);

fn parse_engines(s: &str) -> Result<EngineList, String> {
    if s.trim() == "all" {
        return Ok(EngineList(EngineKind::ALL.to_vec()));
    }
    let kinds = s
        .split(',')
        .map(|p| p.trim().parse::<EngineKind>().map_err(|e| e.to_string()))
        .collect::<Result<Vec<_>, _>>()?;
    if kinds.is_empty() {
        return Err("no engines given".into());
    }
    Ok(EngineList(kinds))
}

fn parse_length(s: &str) -> Result<usize, String> {
    let s = s.trim();
    let n = match s.strip_prefix("2^") {
        Some(exp) => {
            let e: u32 = exp.parse().map_err(|_| format!("bad exponent in `{s}`"))?;
            1usize.checked_shl(e).filter(|_| e < usize::BITS).ok_or_else(|| format!("`{s}` overflows"))?
        }
        None => s.parse().map_err(|_| format!("bad length `{s}`"))?,
    };
    if n == 0 {
        return Err("lengths must be positive".into());
    }
    Ok(n)
}

fn parse_lengths(s: &str) -> Result<LengthList, String> {
    let lens = s.split(',').map(parse_length).collect::<Result<Vec<_>, _>>()?;
    if lens.windows(2).any(|w| w[0] >= w[1]) {
        return Err("lengths must be strictly ascending".into());
    }
    Ok(LengthList(lens))
}

fn parse_token_map(s: &str) -> Result<TokenMap, String> {
    s.parse::<TokenMap>().map_err(|e| e.to_string())
}
