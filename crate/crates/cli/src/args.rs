//! Command-line definitions.

use std::f64::consts::PI;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sfflab::curve::GridKind;
use sfflab::knsff::TransformMode;
use sfflab::{EnsembleKind, TimeGrid};

use crate::usage;

#[derive(Parser, Debug, Serialize)]
#[command(name = "sfflab", version, about = "k-th neighbor spectral form factors of random spectra")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Sample raw spectra from an ensemble.
    Sample(SampleArgs),
    /// Sample and unfold spectra, reporting unfolding quality.
    Unfold(UnfoldArgs),
    /// k-th neighbor level spacing histograms against the surmise.
    Knls(KnlsArgs),
    /// Monte-Carlo and closed-form k-th neighbor SFFs.
    Knsff(KnsffArgs),
    /// Full SFF, Monte-Carlo and closed form.
    Sff(SffArgs),
    /// Partial SFF with a neighbor cutoff K.
    Partial(PartialArgs),
    /// Dip and Thouless times of partial SFFs.
    Timescales(TimescalesArgs),
    /// Even and odd neighbor sums.
    Evenodd(EvenOddArgs),
    /// Neighbor order with the deepest knSFF minimum.
    Kstar(KstarArgs),
    /// Relative variance of knSFFs and its plateau average.
    Selfavg(SelfavgArgs),
    /// Disordered XXZ chain pipeline.
    Xxz(XxzArgs),
    /// SFF of the nearest-neighbor-only toy model.
    Toy(ToyArgs),
    /// Autocorrelation function split into neighbor contributions.
    Autocorr(AutocorrArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Sample(_) => "sample",
            Self::Unfold(_) => "unfold",
            Self::Knls(_) => "knls",
            Self::Knsff(_) => "knsff",
            Self::Sff(_) => "sff",
            Self::Partial(_) => "partial",
            Self::Timescales(_) => "timescales",
            Self::Evenodd(_) => "evenodd",
            Self::Kstar(_) => "kstar",
            Self::Selfavg(_) => "selfavg",
            Self::Xxz(_) => "xxz",
            Self::Toy(_) => "toy",
            Self::Autocorr(_) => "autocorr",
        }
    }
}

fn parse_kind(s: &str) -> Result<EnsembleKind, String> {
    s.parse().map_err(|e| format!("{e}"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct OutArgs {
    /// Output directory. Not echoed into the manifest so that runs into
    /// different directories stay byte-identical.
    #[arg(long, default_value = "out")]
    #[serde(skip)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct EnsembleArgs {
    #[arg(long, value_parser = parse_kind)]
    pub ensemble: EnsembleKind,
    /// Matrix dimension N.
    #[arg(long)]
    pub dim: usize,
    #[arg(long, default_value_t = 1000)]
    pub realizations: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GridChoice {
    Log,
    Linear,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct GridArgs {
    /// Grid spacing; the default depends on the command.
    #[arg(long, value_enum)]
    pub grid: Option<GridChoice>,
    #[arg(long)]
    pub t_min: Option<f64>,
    #[arg(long)]
    pub t_max: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
}

impl GridArgs {
    /// Resolve against a command default; switching the kind switches its defaults.
    pub fn resolve(&self, default: TimeGrid) -> anyhow::Result<TimeGrid> {
        let base = match (self.grid, default.kind) {
            (Some(GridChoice::Log), GridKind::Linear) => TimeGrid::default_log(),
            (Some(GridChoice::Linear), GridKind::Logarithmic) => TimeGrid::default_linear(),
            _ => default,
        };
        TimeGrid::new(
            base.kind,
            self.t_min.unwrap_or(base.t_min),
            self.t_max.unwrap_or(base.t_max),
            self.points.unwrap_or(base.n_points),
        )
        .map_err(|e| usage(format!("invalid grid: {e}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    Exact,
    Approx,
    Auto,
}

impl From<ModeArg> for TransformMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Exact => TransformMode::Exact,
            ModeArg::Approx => TransformMode::Approx,
            ModeArg::Auto => TransformMode::Auto,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceArg {
    Analytic,
    Numeric,
}

#[derive(Args, Debug, Serialize)]
pub struct SampleArgs {
    #[command(flatten)]
    pub ens: EnsembleArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum UnfoldMethodArg {
    /// Semicircle for Gaussian ensembles, identity for Poisson.
    Auto,
    Analytic,
    Polynomial,
    Identity,
}

#[derive(Args, Debug, Serialize)]
pub struct UnfoldArgs {
    #[command(flatten)]
    pub ens: EnsembleArgs,
    #[arg(long, value_enum, default_value_t = UnfoldMethodArg::Auto)]
    pub method: UnfoldMethodArg,
    /// Polynomial degree for the staircase fit.
    #[arg(long, default_value_t = 3)]
    pub eta: usize,
    #[arg(long, default_value_t = 50)]
    pub bins: usize,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct KnlsArgs {
    #[command(flatten)]
    pub ens: EnsembleArgs,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub k: Vec<usize>,
    #[arg(long, default_value_t = 50)]
    pub bins: usize,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct KnsffArgs {
    #[command(flatten)]
    pub ens: EnsembleArgs,
    #[arg(long, value_delimiter = ',', default_value = "1,5,20,40")]
    pub k: Vec<usize>,
    #[arg(long, value_enum, default_value_t = ModeArg::Auto)]
    pub mode: ModeArg,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct SffArgs {
    #[command(flatten)]
    pub ens: EnsembleArgs,
    #[arg(long, value_enum, default_value_t = ModeArg::Auto)]
    pub mode: ModeArg,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct PartialArgs {
    #[command(flatten)]
    pub ens: EnsembleArgs,
    /// Neighbor cutoff K.
    #[arg(long)]
    pub cutoff: usize,
    #[arg(long, value_enum, default_value_t = SourceArg::Analytic)]
    pub source: SourceArg,
    #[arg(long, value_enum, default_value_t = ModeArg::Auto)]
    pub mode: ModeArg,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct TimescalesArgs {
    #[command(flatten)]
    pub ens: EnsembleArgs,
    /// One or more neighbor cutoffs K.
    #[arg(long, value_delimiter = ',', required = true)]
    pub kmax: Vec<usize>,
    /// Thouless tolerance; 0.1 for GOE/GUE and 0.25 for GSE by default.
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long, value_enum, default_value_t = SourceArg::Analytic)]
    pub source: SourceArg,
    #[arg(long, value_enum, default_value_t = ModeArg::Auto)]
    pub mode: ModeArg,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct EvenOddArgs {
    #[command(flatten)]
    pub ens: EnsembleArgs,
    #[arg(long, value_enum, default_value_t = SourceArg::Analytic)]
    pub source: SourceArg,
    #[arg(long, value_enum, default_value_t = ModeArg::Auto)]
    pub mode: ModeArg,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum KstarMethod {
    /// Large-N expansion.
    Expansion,
    /// Root of the stationarity cubic.
    Cubic,
    /// Argmin of the predicted minimum depth over k.
    Argmin,
    /// Argmin over Monte-Carlo knSFF minima.
    MonteCarlo,
}

#[derive(Args, Debug, Serialize)]
pub struct KstarArgs {
    #[arg(long, value_parser = parse_kind)]
    pub ensemble: EnsembleKind,
    #[arg(long)]
    pub dim: usize,
    #[arg(long, value_enum, default_value_t = KstarMethod::Expansion)]
    pub method: KstarMethod,
    #[arg(long, default_value_t = 200)]
    pub realizations: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Largest k scanned by the Monte-Carlo method (default N/2).
    #[arg(long)]
    pub kscan: Option<usize>,
    /// Points per minimum search window.
    #[arg(long, default_value_t = 120)]
    pub scan_points: usize,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct SelfavgArgs {
    #[command(flatten)]
    pub ens: EnsembleArgs,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub k: Vec<usize>,
    /// Start of the averaging window.
    #[arg(long, default_value_t = 2.0 * PI)]
    pub t_start: f64,
    /// Length of the averaging window.
    #[arg(long, default_value_t = 20.0 * PI)]
    pub window: f64,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct XxzArgs {
    /// Number of sites L (even).
    #[arg(long)]
    pub length: usize,
    #[arg(long, default_value_t = 1.0)]
    pub jz: f64,
    /// Disorder width W.
    #[arg(long)]
    pub disorder: f64,
    /// Levels kept per realization.
    #[arg(long, default_value_t = 200)]
    pub window: usize,
    #[arg(long, default_value_t = 150)]
    pub realizations: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, value_delimiter = ',', default_value = "1,10,30")]
    pub k: Vec<usize>,
    #[arg(long, default_value_t = 0.2)]
    pub epsilon: f64,
    /// Open instead of periodic boundary conditions.
    #[arg(long)]
    pub open: bool,
    /// Largest k scanned for the deepest minimum (default window/2).
    #[arg(long)]
    pub kscan: Option<usize>,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct ToyArgs {
    #[arg(long, value_parser = parse_kind)]
    pub ensemble: EnsembleKind,
    #[arg(long)]
    pub dim: usize,
    /// Tolerance of the connected-SFF band check.
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OperatorArg {
    Identity,
    /// Ones on the first off-diagonals.
    Neighbor,
    /// Symmetric matrix with standard normal entries.
    Random,
    /// Read from --operator-file.
    File,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AutocorrSourceArg {
    Spectra,
    Ensemble,
}

#[derive(Args, Debug, Serialize)]
pub struct AutocorrArgs {
    #[command(flatten)]
    pub ens: EnsembleArgs,
    #[arg(long, value_enum, default_value_t = OperatorArg::Neighbor)]
    pub operator: OperatorArg,
    /// CSV file with N rows of N values (no header).
    #[arg(long)]
    pub operator_file: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = AutocorrSourceArg::Spectra)]
    pub source: AutocorrSourceArg,
    #[arg(long, value_enum, default_value_t = ModeArg::Auto)]
    pub mode: ModeArg,
    /// Neighbor orders whose curves are exported.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    pub k: Vec<usize>,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub out: OutArgs,
}
