use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "cpd", version, about = "Critical exponents, growth indicators and spectral bounds for discrete matrix groups")]
pub struct Cli {
    /// `key = value` file; every key mirrors a long flag, and flags given on
    /// the command line win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    pub threads: Option<u16>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Enumerate a word ball of a matrix group and write its Cartan projections.
    Enumerate(EnumerateArgs),
    /// Sample a synthetic orbit point cloud from a growth profile.
    Synth(SynthArgs),
    /// Estimate growth rates from a dataset.
    Estimate(EstimateArgs),
    /// Evaluate the spectral formulas and condition flags.
    Spectrum(SpectrumArgs),
    /// Run the built-in self-check suites.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DedupArg {
    Exact,
    Float,
}

/// A positive record count or `unlimited`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(into = "String")]
pub struct RecordCap(pub u64);

impl From<RecordCap> for String {
    fn from(c: RecordCap) -> String {
        if c.0 == u64::MAX {
            "unlimited".into()
        } else {
            c.0.to_string()
        }
    }
}

fn parse_record_cap(s: &str) -> Result<RecordCap, String> {
    if s == "unlimited" {
        return Ok(RecordCap(u64::MAX));
    }
    match s.parse::<u64>() {
        Ok(n) if n > 0 => Ok(RecordCap(n)),
        _ => Err(format!("expected a positive integer or `unlimited`, got `{s}`")),
    }
}

fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if x > 0.0 && x.is_finite() => Ok(x),
        _ => Err(format!("expected a positive number, got `{s}`")),
    }
}

fn fraction(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if x > 0.0 && x <= 1.0 => Ok(x),
        _ => Err(format!("expected a number in (0, 1], got `{s}`")),
    }
}

#[derive(Debug, Args, Serialize)]
pub struct EnumerateArgs {
    /// Group descriptor such as `sl2`, `sl3` or `sl2xsl2`.
    #[arg(long)]
    pub group: String,
    /// Generator file.
    #[arg(long, value_name = "FILE")]
    pub gens: PathBuf,
    /// Largest word length.
    #[arg(long)]
    pub maxlen: u32,
    #[arg(long, value_enum, default_value = "exact")]
    pub dedup: DedupArg,
    /// Refuse runs whose worst-case ball size exceeds this.
    #[arg(long, default_value = "10000000", value_parser = parse_record_cap)]
    pub record_cap: RecordCap,
    /// Checkpoint written after every sphere.
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    pub checkpoint: Option<PathBuf>,
    /// Continue from the checkpoint when it exists.
    #[arg(long, requires = "checkpoint")]
    #[serde(skip)]
    pub resume: bool,
    #[arg(short, long, value_name = "FILE")]
    #[serde(skip)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    /// `<phi, H>`, with `phi` from `--phi` or `--phi-scale` times rho.
    Linear,
    /// Minimum of the linear forms given by repeated `--phi`.
    MinLinear,
    /// `phi-scale * |H|` on the cap `--cap-axis`, `--half-angle`.
    Cap,
    /// `phi-scale * |H|` on the whole chamber.
    Radial,
}

#[derive(Debug, Args, Serialize)]
pub struct ModelArgs {
    #[arg(long, value_enum)]
    pub model: Option<ModelKind>,
    /// Multiple of rho (linear) or of the norm (cap, radial).
    #[arg(long, allow_negative_numbers = true)]
    pub phi_scale: Option<f64>,
    /// Comma-separated ambient coordinates of a linear form; repeatable.
    #[arg(long, value_name = "COORDS", allow_hyphen_values = true)]
    pub phi: Vec<String>,
    /// Comma-separated ambient coordinates of the cap axis (default: rho).
    #[arg(long, value_name = "COORDS", allow_hyphen_values = true)]
    pub cap_axis: Option<String>,
    /// Cap half-angle in radians; also restricts linear models to the cap.
    #[arg(long, value_parser = positive)]
    pub half_angle: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    #[arg(long, default_value = "sl3")]
    pub group: String,
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    /// Direction grid size (rank 2: grid points; rank >= 3: point count).
    #[arg(long, default_value_t = 33)]
    pub resolution: usize,
    #[arg(long, default_value_t = 12.0, value_parser = positive)]
    pub rmax: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Angular jitter as a fraction of the grid spacing.
    #[arg(long, default_value_t = 0.0)]
    pub jitter: f64,
    #[arg(long, default_value = "10000000", value_parser = parse_record_cap)]
    pub record_cap: RecordCap,
    #[arg(short, long, value_name = "FILE")]
    #[serde(skip)]
    pub output: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct EstimateArgs {
    /// Dataset written by `enumerate` or `synth`.
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,
    /// Estimate file: summary lines and the per-direction table.
    #[arg(short, long, value_name = "FILE")]
    #[serde(skip)]
    pub output: PathBuf,
    /// Regression window: the top fraction of the covered radius range.
    #[arg(long, default_value_t = 0.4, value_parser = fraction)]
    pub window_fraction: f64,
    /// Direction grid for the growth indicator.
    #[arg(long, default_value_t = 33)]
    pub resolution: usize,
    /// Comma-separated, strictly decreasing cone half-angles in radians.
    #[arg(long, value_name = "ANGLES")]
    pub cone_angles: Option<String>,
    /// Report the smallest-cone slope instead of extrapolating to zero angle.
    #[arg(long)]
    pub no_extrapolate: bool,
    /// Plot table: radius against log-count for both gauges.
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    pub curve_csv: Option<PathBuf>,
    #[arg(long, default_value_t = 256)]
    pub curve_points: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceArg {
    Analytic,
    Dataset,
}

#[derive(Debug, Args, Serialize)]
pub struct SpectrumArgs {
    /// Estimate file written by `estimate`.
    #[arg(long, value_name = "FILE", conflicts_with = "model")]
    pub estimate: Option<PathBuf>,
    /// Group for analytic or manual input.
    #[arg(long)]
    pub group: Option<String>,
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    /// Critical exponent, overriding the estimate.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Modified critical exponent, overriding the estimate.
    #[arg(long)]
    pub delta_tilde: Option<f64>,
    /// Whether the group is a lattice (recorded, never computed).
    #[arg(long)]
    pub lattice: Option<bool>,
    /// Whether the quotient is tempered (recorded, never computed).
    #[arg(long)]
    pub tempered: Option<bool>,
    /// Tolerance regime (default: dataset for `--estimate`, else analytic).
    #[arg(long, value_enum)]
    pub source: Option<SourceArg>,
    /// key=value report (default: standard output).
    #[arg(short, long, value_name = "FILE")]
    #[serde(skip)]
    pub output: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SuiteArg {
    Analytic,
    Estimators,
    All,
}

#[derive(Debug, Args, Serialize)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value = "all")]
    pub suite: SuiteArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(short, long, value_name = "FILE")]
    #[serde(skip)]
    pub output: Option<PathBuf>,
}
