mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use acs_core::Error;
use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "acs",
    version,
    about = "Adaptive cluster sampling versus simple random sampling on gridded count populations"
)]
struct Cli {
    /// Directory for output files.
    #[arg(long, global = true, env = "ACS_OUTPUT_DIR", default_value = ".")]
    out: PathBuf,

    /// Worker threads for replicate runs (default: all cores).
    #[arg(long, global = true, env = "ACS_THREADS")]
    threads: Option<usize>,

    /// Report written files on stderr.
    #[arg(short, long, global = true, action = ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a population and write it as CSV/JSON (and optionally SVG).
    Generate(GenerateArgs),
    /// Draw ACS and/or SRS samples from a population file.
    Sample(SampleArgs),
    /// Draw samples and write their estimates as CSV.
    Estimate(SampleArgs),
    /// Population-level efficiency of ACS against SRS.
    Efficiency(EfficiencyArgs),
    /// Run a replicated experiment described by a TOML config.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Frame size as WIDTHxHEIGHT.
    #[arg(long, default_value = "20x20", value_parser = parse_grid)]
    pub grid: (usize, usize),
    /// Number of cluster centers.
    #[arg(long, default_value_t = 5)]
    pub centers: usize,
    /// Points scattered around each center.
    #[arg(long, default_value_t = 50)]
    pub points: usize,
    /// Spread (normal SD) of points around their center; several values
    /// separated by commas write one population each. Fractions like 2/3
    /// are accepted.
    #[arg(long, value_delimiter = ',', value_parser = parse_number, default_value = "1")]
    pub sd: Vec<f64>,
    /// Generate an independent count field of this family instead of
    /// clustered points.
    #[arg(long, value_parser = parse_family)]
    pub family: Option<acs_core::Family>,
    /// Target mean count per cell (count fields).
    #[arg(long, default_value_t = 2.0, requires = "family")]
    pub mean: f64,
    /// Target variance-to-mean ratio (count fields).
    #[arg(long, default_value_t = 1.0, requires = "family")]
    pub vmr: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Base name of the written files.
    #[arg(long, default_value = "population")]
    pub name: String,
    /// File formats to write.
    #[arg(long, value_delimiter = ',', default_value = "csv,json")]
    pub formats: Vec<FormatArg>,
    /// Also write a scatter plot of the point field coloured by cluster.
    #[arg(long)]
    pub svg: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DesignArg {
    Acs,
    Srs,
    Both,
    Cluster,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    /// Population file (.csv or .json).
    #[arg(long)]
    pub population: PathBuf,
    #[arg(long, value_enum, default_value = "both")]
    pub design: DesignArg,
    /// Initial ACS sample size.
    #[arg(long, default_value_t = 10)]
    pub n1: usize,
    /// SRS sample size (default: n1). ACS and SRS share their initial units.
    #[arg(long)]
    pub m: Option<usize>,
    /// Condition to adapt: cells with a count above this trigger expansion.
    #[arg(long, default_value_t = 0.0)]
    pub condition: f64,
    /// Neighbourhood degree, 4 or 8.
    #[arg(long, default_value_t = 4)]
    pub neighborhood: u8,
    /// Block size WIDTHxHEIGHT defining the clusters (cluster design).
    #[arg(long, default_value = "5x5", value_parser = parse_grid)]
    pub block: (usize, usize),
    /// Number of clusters sampled (cluster design).
    #[arg(long, default_value_t = 2)]
    pub clusters: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct EfficiencyArgs {
    /// Population file (.csv or .json).
    #[arg(long)]
    pub population: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub n1: usize,
    /// SRS comparison size.
    #[arg(long, conflicts_with = "equal_sizes")]
    pub m: Option<usize>,
    /// Compare at m = n1.
    #[arg(long)]
    pub equal_sizes: bool,
    #[arg(long, default_value_t = 0.0)]
    pub condition: f64,
    #[arg(long, default_value_t = 4)]
    pub neighborhood: u8,
    /// Also write the feasible-region plot.
    #[arg(long)]
    pub svg: bool,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// TOML experiment config.
    #[arg(long)]
    pub config: PathBuf,
    /// Override the config's base seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override the config's replicate count.
    #[arg(long)]
    pub replicates: Option<usize>,
}

fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected WIDTHxHEIGHT, got `{s}`"))?;
    let side = |v: &str| -> Result<usize, String> {
        match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(format!("`{v}` is not a positive integer in grid spec `{s}`")),
        }
    };
    Ok((side(w)?, side(h)?))
}

fn parse_number(s: &str) -> Result<f64, String> {
    let bad = || format!("`{s}` is not a number or fraction");
    let v = match s.split_once('/') {
        Some((a, b)) => {
            let (a, b): (f64, f64) = (
                a.trim().parse().map_err(|_| bad())?,
                b.trim().parse().map_err(|_| bad())?,
            );
            a / b
        }
        None => s.trim().parse().map_err(|_| bad())?,
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(bad())
    }
}

fn parse_family(s: &str) -> Result<acs_core::Family, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// 2 usage/config, 3 degenerate input, 4 IO.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io { .. } | Error::Format { .. } => 4,
        e if e.is_degenerate() => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads.filter(|&t| t > 0) {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("acs: cannot configure {t} threads: {e}");
            return ExitCode::from(2);
        }
    }
    let ctx = commands::Context {
        out: cli.out,
        verbose: cli.verbose,
    };
    let result = match cli.command {
        Command::Generate(a) => commands::generate(&ctx, &a),
        Command::Sample(a) => commands::sample(&ctx, &a),
        Command::Estimate(a) => commands::estimate(&ctx, &a),
        Command::Efficiency(a) => commands::efficiency(&ctx, &a),
        Command::Experiment(a) => commands::experiment(&ctx, &a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("acs: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
