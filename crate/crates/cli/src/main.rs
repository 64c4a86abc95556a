use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;

/// Separation of spherical vector fields into internal, external and toroidal parts.
#[derive(Debug, Parser)]
#[command(name = "sphsep", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Bin scattered measurements onto an equiangular grid with Huber averaging.
    Ingest {
        /// CSV with columns colat_deg,lon_deg,radius_km,v1,v2,v3.
        input: PathBuf,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Generate a field from ỹ basis terms together with its ground truth.
    Synthesize {
        /// Term `i,n,k,amplitude`; repeatable. Defaults to 1,2,1,1 + 2,3,2,1 + 3,4,3,1.
        #[arg(long = "term", value_parser = parse_term)]
        terms: Vec<sphsep::SyntheticTerm>,
        /// Sphere radius stored with the field.
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        #[arg(long, value_parser = parse_grid, default_value = "128x128")]
        grid: (usize, usize),
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Separate a gridded or scattered field into its three parts.
    Separate {
        input: PathBuf,
        #[command(flatten)]
        scales: ScaleArgs,
        #[command(flatten)]
        grid: GridArgs,
        /// Ground-truth manifest written by `synthesize`; found next to the input by default.
        #[arg(long)]
        truth: Option<PathBuf>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Write the scaling approximations P_J and wavelet details R_J for every scale.
    Pyramid {
        input: PathBuf,
        #[command(flatten)]
        scales: ScaleArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Tabulate a kernel profile and its first two derivatives.
    KernelTable {
        #[arg(long, value_enum, default_value_t = KernelChoice::Green)]
        kernel: KernelChoice,
        /// Regularize with ρ = 2^-J; omit for the singular kernel.
        #[arg(long)]
        scale: Option<u32>,
        /// Taylor order of the regularization.
        #[arg(long, default_value_t = 2)]
        order: usize,
        #[arg(long, default_value_t = 201)]
        samples: usize,
        #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
        t_min: f64,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        t_max: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Compare the multiscale separation with a spectral projection onto the ỹ basis.
    OracleCompare {
        input: PathBuf,
        #[command(flatten)]
        scales: ScaleArgs,
        /// Highest degree of the projection; defaults to min(declared degree / 2, 12).
        #[arg(long)]
        lmax: Option<u32>,
        #[arg(long)]
        truth: Option<PathBuf>,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KernelChoice {
    Green,
    SingleLayer,
    DinvGreen,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
struct OutputArgs {
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Debug, Clone, Args)]
struct ScaleArgs {
    #[arg(long, default_value_t = 2)]
    j0: u32,
    #[arg(long, default_value_t = 9)]
    jmax: u32,
    #[arg(long, default_value_t = 2)]
    green_order: usize,
    #[arg(long, default_value_t = 1)]
    single_layer_order: usize,
    /// Minimum grid nodes inside the cap 1 − ξ·η < 2^-(J−1).
    #[arg(long, default_value_t = 9)]
    min_cap_nodes: usize,
    /// Radial-mean tolerance factor, multiplied by ‖b‖_sup·4π.
    #[arg(long, default_value_t = 1e-6)]
    radial_tol: f64,
}

/// Binning parameters used when the input holds scattered records.
#[derive(Debug, Clone, Args)]
struct GridArgs {
    #[arg(long, value_parser = parse_grid, default_value = "180x180")]
    grid: (usize, usize),
    #[arg(long, default_value_t = 2.5)]
    bin_deg: f64,
    #[arg(long, default_value_t = 1.345)]
    huber_c: f64,
}

fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected NxM, got {s:?}"))?;
    let n = a.trim().parse().map_err(|e| format!("{a:?}: {e}"))?;
    let m = b.trim().parse().map_err(|e| format!("{b:?}: {e}"))?;
    Ok((n, m))
}

fn parse_term(s: &str) -> Result<sphsep::SyntheticTerm, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 4 {
        return Err(format!("expected i,n,k,amplitude, got {s:?}"));
    }
    let int = |x: &str| x.parse::<u32>().map_err(|e| format!("{x:?}: {e}"));
    let kind = int(parts[0])?;
    Ok(sphsep::SyntheticTerm::new(
        u8::try_from(kind).map_err(|e| e.to_string())?,
        int(parts[1])?,
        int(parts[2])?,
        parts[3].parse().map_err(|e| format!("{:?}: {e}", parts[3]))?,
    ))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
