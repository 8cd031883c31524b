use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub const DEFAULT_SEED: u64 = 0xC0FFEE;

fn parse_seed(s: &str) -> Result<u64, String> {
    let s = s.trim();
    let r = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => s.parse(),
    };
    r.map_err(|e| format!("invalid seed {s:?}: {e}"))
}

fn parse_pair(s: &str) -> Result<[f64; 2], String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("expected two comma-separated numbers, got {s:?}"));
    }
    let a = parts[0].trim().parse::<f64>().map_err(|e| e.to_string())?;
    let b = parts[1].trim().parse::<f64>().map_err(|e| e.to_string())?;
    Ok([a, b])
}

/// Dynamic tomography over level curves.
#[derive(Debug, Parser)]
#[command(name = "curvetomo", version, about)]
pub struct Cli {
    /// Seed for every random draw (decimal or 0x-prefixed hex).
    #[arg(long, global = true, default_value_t = DEFAULT_SEED, value_parser = parse_seed)]
    pub seed: u64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render an ellipse phantom and its boundary wavefront samples.
    Phantom(PhantomArgs),
    /// Apply the forward operator to an image.
    Forward(ForwardArgs),
    /// Dot-product test of the forward operator against its adjoint.
    AdjointTest(AdjointTestArgs),
    /// Local, semi-global and canonical-relation checks of the phase.
    CheckBolker(CheckBolkerArgs),
    /// Directions seen at given points, or at phantom edges.
    Visibility(VisibilityArgs),
    /// Principal symbol of the normal operator at one covector.
    Symbol(SymbolArgs),
    /// Apply the localized normal operator to an image.
    Normal(NormalArgs),
    /// Solve the normal equations for a sinogram.
    Reconstruct(ReconstructArgs),
    /// Empirical stability ratios over a motion family.
    Stability(StabilityArgs),
    /// Operator change under small perturbations of motion and weight.
    PerturbSweep(PerturbArgs),
    /// Rebin fan-beam data to parallel coordinates.
    FanbeamConvert(FanConvertArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PhantomArgs {
    /// Geometry config supplying the image grid; defaults apply when omitted.
    #[arg(long, visible_alias = "geometry")]
    pub config: Option<PathBuf>,
    /// JSON list of ellipses; the built-in fixture when omitted.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long, default_value_t = 64)]
    pub n_per_ellipse: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ForwardMode {
    /// Integrals over the level curves of the configured phase.
    Levelset,
    /// Straight lines through the moving object.
    Lagrangian,
    /// Fan-beam rays over (gamma, t).
    Fanbeam,
}

#[derive(Debug, Args)]
pub struct ForwardArgs {
    /// Geometry config (JSON).
    #[arg(long, visible_alias = "geometry")]
    pub config: PathBuf,
    #[arg(long)]
    pub image: PathBuf,
    #[arg(long, value_enum, default_value_t = ForwardMode::Levelset)]
    pub mode: ForwardMode,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackprojectorArg {
    Formula,
    Transpose,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LocalizationArg {
    Paper,
    Symmetric,
}

#[derive(Debug, Args)]
pub struct AdjointTestArgs {
    /// Geometry config (JSON).
    #[arg(long, visible_alias = "geometry")]
    pub config: PathBuf,
    /// Image used as one extra test pair together with --data.
    #[arg(long)]
    pub image: Option<PathBuf>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    pub pairs: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub threshold: f64,
    #[arg(long, value_enum, default_value_t = BackprojectorArg::Formula)]
    pub backprojector: BackprojectorArg,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct CheckBolkerArgs {
    /// Geometry config (JSON).
    #[arg(long, visible_alias = "geometry")]
    pub config: PathBuf,
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    /// Points checked for the semi-global condition.
    #[arg(long, default_value_t = 8)]
    pub curve_points: usize,
    /// Side of the |h| heatmap at the first time sample; 0 skips it.
    #[arg(long, default_value_t = 64)]
    pub map_n: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct VisibilityArgs {
    /// Geometry config (JSON).
    #[arg(long, visible_alias = "geometry")]
    pub config: PathBuf,
    /// Point `x,y`; may be repeated.
    #[arg(long = "point", value_parser = parse_pair)]
    pub points: Vec<[f64; 2]>,
    /// Phantom spec whose edges are audited (built-in fixture with --default-phantom).
    #[arg(long)]
    pub phantom: Option<PathBuf>,
    #[arg(long)]
    pub default_phantom: bool,
    #[arg(long, default_value_t = 72)]
    pub directions: usize,
    #[arg(long, default_value_t = 64)]
    pub n_per_ellipse: usize,
    /// Side of the visible-direction count heatmap; 0 skips it.
    #[arg(long, default_value_t = 32)]
    pub map_n: usize,
    /// Directions tested per heatmap pixel.
    #[arg(long, default_value_t = 36)]
    pub map_directions: usize,
    /// Exit with status 4 if any direction or edge sample is invisible.
    #[arg(long)]
    pub strict: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct SymbolArgs {
    /// Geometry config (JSON).
    #[arg(long, visible_alias = "geometry")]
    pub config: PathBuf,
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    pub x: [f64; 2],
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    pub xi: [f64; 2],
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct NormalArgs {
    /// Geometry config (JSON).
    #[arg(long, visible_alias = "geometry")]
    pub config: PathBuf,
    #[arg(long)]
    pub image: PathBuf,
    #[arg(long, value_enum, default_value_t = LocalizationArg::Paper)]
    pub localization: LocalizationArg,
    #[arg(long, value_enum, default_value_t = BackprojectorArg::Formula)]
    pub backprojector: BackprojectorArg,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Cr,
    Cg,
    Landweber,
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    /// Geometry config (JSON).
    #[arg(long, visible_alias = "geometry")]
    pub config: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 50)]
    pub iters: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, default_value_t = 0.0)]
    pub tikhonov: f64,
    #[arg(long, value_enum, default_value_t = MethodArg::Cr)]
    pub method: MethodArg,
    /// Ground truth image for the error report.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Breathing,
    Rotation,
}

#[derive(Debug, Args)]
pub struct StabilityArgs {
    #[arg(long, value_enum, default_value_t = FamilyArg::Breathing)]
    pub family: FamilyArg,
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.0, 0.02, 0.05])]
    pub amplitudes: Vec<f64>,
    #[arg(long, default_value_t = 50)]
    pub samples: usize,
    #[arg(long, default_value_t = 64)]
    pub n: usize,
    #[arg(long, default_value_t = 90)]
    pub nt: usize,
    #[arg(long, default_value_t = 12)]
    pub lanczos: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct PerturbArgs {
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.0, 1e-3, 3e-3, 1e-2, 3e-2])]
    pub deltas: Vec<f64>,
    #[arg(long, default_value_t = 96)]
    pub n: usize,
    #[arg(long, default_value_t = 180)]
    pub nt: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct FanConvertArgs {
    /// Config with the fanbeam phase that produced the data.
    /// Geometry config (JSON).
    #[arg(long, visible_alias = "geometry")]
    pub config: PathBuf,
    /// Fan data over (gamma, t).
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 129)]
    pub ns: usize,
    #[arg(long, default_value_t = 180)]
    pub nt: usize,
    /// Offset range `lo,hi` of the parallel grid; the fan's reach by default.
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    pub s_range: Option<[f64; 2]>,
    /// Keep uncovered cells as NaN instead of failing.
    #[arg(long)]
    pub lenient: bool,
    #[command(flatten)]
    pub common: Common,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_and_pairs() {
        assert_eq!(parse_seed("0xC0FFEE").unwrap(), 12648430);
        assert_eq!(parse_seed("17").unwrap(), 17);
        assert!(parse_seed("x").is_err());
        assert_eq!(parse_pair("0.5,-1").unwrap(), [0.5, -1.0]);
        assert!(parse_pair("1").is_err());
    }

    #[test]
    fn cli_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
