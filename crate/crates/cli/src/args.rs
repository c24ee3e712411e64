use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub const SIEVE_LIMIT_ENV: &str = "KFREE_SIEVE_LIMIT";

#[derive(Debug, Parser)]
#[command(name = "kfree", version, about = "Diffraction intensity of the k-free integers near the origin")]
pub struct Cli {
    /// Largest sieve any command may build.
    #[arg(long, global = true, env = SIEVE_LIMIT_ENV, default_value_t = 100_000_000)]
    pub sieve_limit: u64,

    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Output format; each command has its own default.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// Write output here instead of stdout.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Table,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// xi_k, gamma_k and c_k with rigorous tails.
    Constants(ConstantsArgs),
    /// One intensity value: Z_k(eps), Z~_k(N) or z_k(c).
    Intensity(IntensityArgs),
    /// Z_k(eps) over a grid of epsilons, with a power-law fit.
    Scan(ScanArgs),
    /// Run the identity suites and report pass/fail.
    Verify(VerifyArgs),
    /// Squarefree counts against x / zeta(2) over a grid.
    Walfisz(WalfiszArgs),
    /// Weighted squarefree sums S_k(u) against gamma_k u.
    Weighted(WeightedArgs),
    /// z_k(c) against its leading asymptotic term.
    Decay(DecayArgs),
}

#[derive(Debug, Args)]
pub struct ConstantsArgs {
    #[arg(long)]
    pub k: u32,
    /// Largest tail accepted on each constant.
    #[arg(long, default_value_t = 1e-20)]
    pub tail: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    /// Bragg sum over denominators (needs --eps)
    Direct,
    /// q-sum defining Z~_k(N) (needs --n)
    Definition,
    /// Z~_k(N) as a sum of z_k(Nb) (needs --n)
    ViaZk,
    /// z_k(c) as a squarefree tail sum (needs --c)
    Factorised,
    /// z_k(c) from its double sum (needs --c)
    ZkDefinition,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("point").required(true).args(["eps", "n", "c"])))]
pub struct IntensityArgs {
    #[arg(long)]
    pub k: u32,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long)]
    pub c: Option<u64>,
    /// Defaults to direct for --eps, definition for --n, factorised for --c.
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    #[arg(long)]
    pub q_max: Option<u64>,
    #[arg(long)]
    pub t_max: Option<u64>,
    #[arg(long)]
    pub b_max: Option<u64>,
    #[arg(long)]
    pub r_max: Option<u64>,
    #[arg(long)]
    pub d_max: Option<u64>,
    /// Grow the cutoffs until the tail is at most this.
    #[arg(long)]
    pub tail: Option<f64>,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    /// Force log spacing.
    #[arg(long, conflicts_with = "lin")]
    pub log: bool,
    /// Force linear spacing.
    #[arg(long)]
    pub lin: bool,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[arg(long)]
    pub k: u32,
    /// start:stop:points[:log|lin]
    #[arg(long)]
    pub eps: String,
    #[command(flatten)]
    pub spacing: GridArgs,
    #[arg(long)]
    pub q_max: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Level {
    Quick,
    Full,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value_t = Level::Quick)]
    pub level: Level,
}

#[derive(Debug, Args)]
pub struct WalfiszArgs {
    /// start:stop:points[:log|lin]
    #[arg(long, default_value = "1e3:1e8:21")]
    pub x: String,
    #[command(flatten)]
    pub spacing: GridArgs,
    /// Count only integers coprime to this.
    #[arg(long, default_value_t = 1)]
    pub coprime_to: u64,
}

#[derive(Debug, Args)]
pub struct WeightedArgs {
    #[arg(long)]
    pub k: u32,
    /// start:stop:points[:log|lin]
    #[arg(long, default_value = "1e3:1e7:17")]
    pub u: String,
    #[command(flatten)]
    pub spacing: GridArgs,
}

#[derive(Debug, Args)]
pub struct DecayArgs {
    #[arg(long)]
    pub k: u32,
    /// start:stop:points[:log|lin]
    #[arg(long, default_value = "1e2:1e6:9")]
    pub c: String,
    #[command(flatten)]
    pub spacing: GridArgs,
}
