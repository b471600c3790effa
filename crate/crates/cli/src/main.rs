//! `horizon-lab`: ergospheres, horizons and characteristic coordinates from
//! the command line.
//!
//! Exit codes: 0 success, 1 usage or runtime error, 2 unsupported input
//! (a mixed ergosphere, or a horizon request on a Schwarzschild-type metric).

mod commands;
mod source;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "horizon-lab", version, about = "Ergospheres, event horizons and characteristic coordinates of stationary metrics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Trace and classify the ergosphere; writes ergosphere.csv and summary.json.
    Ergosphere(ErgoArgs),
    /// Classify the ergosphere; writes summary.json only.
    Classify(ErgoArgs),
    /// Integrate one null geodesic; writes trajectory.csv and run.json.
    Geodesic(GeodesicArgs),
    /// Find the event horizon as a limit cycle; writes horizon.csv and report.json.
    Horizon(HorizonArgs),
    /// Build S± and the half-plane map; writes field.csv and report.json.
    Charcoords(CharArgs),
    /// Trace both Kerr ergosurfaces; writes kerr_outer.csv, kerr_inner.csv and report.json.
    Kerr(KerrArgs),
}

#[derive(Args, Debug, Clone)]
pub struct MetricArgs {
    /// Builtin metric: minkowski | acoustic | schwarzschild | gordon_radial | kerr
    #[arg(long, conflicts_with = "config", required_unless_present = "config")]
    pub builtin: Option<String>,
    /// TOML metric document.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long = "A", allow_hyphen_values = true)]
    pub a_upper: Option<f64>,
    #[arg(long = "B", allow_hyphen_values = true)]
    pub b_upper: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub m: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    #[arg(long = "n-index", allow_hyphen_values = true)]
    pub n_index: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub c: Option<f64>,
}

#[derive(Args, Debug, Clone)]
pub struct OutputArgs {
    /// Output directory (created if missing).
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Also write an SVG drawing of the curves.
    #[arg(long)]
    pub svg: bool,
}

#[derive(Args, Debug, Clone)]
pub struct ErgoArgs {
    #[command(flatten)]
    pub metric: MetricArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Point inside the ergoregion the ergosphere is star-shaped about.
    #[arg(long, default_value = "0:0", allow_hyphen_values = true)]
    pub seed: String,
    #[arg(long, default_value_t = 256)]
    pub rays: usize,
    /// Root tolerance along each ray.
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    /// Threshold on the normalized characteristic form.
    #[arg(long = "char-tol", default_value_t = 1e-6)]
    pub char_tol: f64,
}

#[derive(Args, Debug, Clone)]
pub struct GeodesicArgs {
    #[command(flatten)]
    pub metric: MetricArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Start point; use with --xi.
    #[arg(long, allow_hyphen_values = true)]
    pub x: Option<String>,
    /// Spatial covector at the start point.
    #[arg(long, default_value = "1:0", allow_hyphen_values = true)]
    pub xi: String,
    /// Launch from the ergosphere at this angle about the seed, with ξ₀ = 0.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "x")]
    pub launch: Option<f64>,
    #[arg(long, default_value = "0:0", allow_hyphen_values = true)]
    pub seed: String,
    /// plus | minus
    #[arg(long, default_value = "plus")]
    pub family: String,
    /// forward | backward
    #[arg(long, default_value = "forward")]
    pub direction: String,
    #[arg(long, default_value_t = 10.0)]
    pub time: f64,
    /// Relative integration tolerance.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, default_value_t = 256)]
    pub rays: usize,
}

#[derive(Args, Debug, Clone)]
pub struct HorizonArgs {
    #[command(flatten)]
    pub metric: MetricArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[arg(long, default_value = "0:0", allow_hyphen_values = true)]
    pub seed: String,
    /// Section angle θ* about the seed.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub section: f64,
    /// Distances from the seed bracketing the fixed point, lo:hi.
    #[arg(long)]
    pub bracket: Option<String>,
    /// Fixed-point tolerance |P(ρ) − ρ|.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    /// Ergosphere rays.
    #[arg(long, default_value_t = 256)]
    pub rays: usize,
    /// Angles sampled on the horizon.
    #[arg(long, default_value_t = 256)]
    pub samples: usize,
    /// Bracket subintervals scanned for further fixed points (0 = off).
    #[arg(long, default_value_t = 8)]
    pub scan: usize,
}

#[derive(Args, Debug, Clone)]
pub struct CharArgs {
    #[command(flatten)]
    pub horizon: HorizonArgs,
    #[arg(long = "n-rho", default_value_t = 256)]
    pub n_rho: usize,
    #[arg(long = "n-theta", default_value_t = 256)]
    pub n_theta: usize,
}

#[derive(Args, Debug, Clone)]
pub struct KerrArgs {
    #[arg(long, default_value_t = 1.0)]
    pub m: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub a: f64,
    /// Samples per surface.
    #[arg(long, default_value_t = 256)]
    pub samples: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

fn configure_threads() -> Result<(), String> {
    if let Ok(v) = std::env::var("HORIZON_LAB_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| format!("HORIZON_LAB_THREADS must be a positive integer, got {v:?}"))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
