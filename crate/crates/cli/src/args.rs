//! Command-line grammar and the conversion of raw flags into library types.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use fapchan::capacity::{SweepVar, Units};
use fapchan::channel::normalize_drift;
use fapchan::mcsim::{CrossingMode, Drift, GridAxis, Normalization, SimConfig, DEFAULT_MAX_STEPS};
use fapchan::validate::Thresholds;
use serde::Serialize;

use crate::output::Format;

#[derive(Parser, Debug)]
#[command(name = "fapchan", version, about = "First-arrival-position channel toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Evaluate the FAP density on a grid.
    Density(DensityArgs),
    /// Characteristic function of the VDFAP law at a point or on a grid.
    Cf(CfArgs),
    /// Differential entropy of the VDFAP law.
    Entropy(EntropyArgs),
    /// Lower and upper capacity bounds.
    Capacity(CapacityArgs),
    /// Capacity bounds along one parameter.
    Sweep(SweepArgs),
    /// First-passage Monte Carlo simulation.
    Simulate(SimulateArgs),
    /// Goodness-of-fit checks of samples against the closed forms.
    Validate(ValidateArgs),
    /// Run the acceptance suite.
    Selftest(SelftestArgs),
}

#[derive(Args, Debug, Clone, Default, Serialize)]
pub struct DriftArgs {
    /// Normalized drift u (1/μm): one value (vertical) or all d+1 components, comma-separated.
    #[arg(long, allow_hyphen_values = true)]
    pub u: Option<String>,
    /// Physical drift velocity v (μm/s), converted once to u = v/(2 D).
    #[arg(long, allow_hyphen_values = true, conflicts_with = "u", requires = "d_coef")]
    pub v: Option<String>,
    /// Diffusion coefficient D (μm²/s).
    #[arg(long = "D-coef")]
    #[serde(rename = "D-coef")]
    pub d_coef: Option<f64>,
}

impl DriftArgs {
    /// The drift as given, normalized; `None` when neither flag was set.
    pub fn normalized(&self) -> Result<Option<Vec<f64>>> {
        if let Some(u) = &self.u {
            return Ok(Some(parse_list(u).context("--u")?));
        }
        if let Some(v) = &self.v {
            let d = self.d_coef.context("--v needs --D-coef")?;
            return Ok(Some(normalize_drift(&parse_list(v).context("--v")?, d)?));
        }
        Ok(None)
    }

    /// Full `d+1`-vector; a single value is the vertical component.
    pub fn full(&self, d: usize, default: &[f64]) -> Result<Vec<f64>> {
        let u = self.normalized()?.unwrap_or_else(|| default.to_vec());
        expand(u, d)
    }

    /// Vertical drift of a VDFAP law; parallel components must vanish.
    pub fn vertical(&self, d: usize, default: f64) -> Result<f64> {
        let u = self.full(d, &[default])?;
        if u[..d].iter().any(|&x| x != 0.0) {
            bail!("this command needs a purely vertical drift (VDFAP); got u = {u:?}");
        }
        Ok(u[d])
    }
}

pub fn expand(u: Vec<f64>, d: usize) -> Result<Vec<f64>> {
    if u.len() == 1 {
        let mut full = vec![0.0; d + 1];
        full[d] = u[0];
        Ok(full)
    } else if u.len() == d + 1 {
        Ok(u)
    } else {
        bail!("drift has {} components; expected 1 or d+1 = {}", u.len(), d + 1)
    }
}

pub fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|x| x.trim().parse::<f64>().with_context(|| format!("`{x}` is not a number")))
        .collect()
}

/// `lo:hi:bins` per axis, comma-separated.
pub fn parse_grid(s: &str) -> Result<Vec<GridAxis>> {
    s.split(',')
        .map(|ax| {
            let parts: Vec<&str> = ax.split(':').collect();
            let [lo, hi, bins] = parts[..] else {
                bail!("grid axis `{ax}` is not lo:hi:bins");
            };
            let lo: f64 = lo.trim().parse().with_context(|| format!("grid axis `{ax}`"))?;
            let hi: f64 = hi.trim().parse().with_context(|| format!("grid axis `{ax}`"))?;
            let bins: usize = bins.trim().parse().with_context(|| format!("grid axis `{ax}`"))?;
            Ok(GridAxis::new(lo, hi, bins)?)
        })
        .collect()
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct OutArgs {
    /// Output file; stdout when absent. A `<out>.manifest.json` sidecar is written next to it.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum NormArg {
    #[default]
    Density,
    RelativeFrequency,
}

impl From<NormArg> for Normalization {
    fn from(n: NormArg) -> Self {
        match n {
            NormArg::Density => Normalization::Density,
            NormArg::RelativeFrequency => Normalization::RelativeFrequency,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum UnitsArg {
    #[default]
    Nats,
    Bits,
}

impl From<UnitsArg> for Units {
    fn from(u: UnitsArg) -> Self {
        match u {
            UnitsArg::Nats => Units::Nats,
            UnitsArg::Bits => Units::Bits,
        }
    }
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct DensityArgs {
    /// Receiver dimension.
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub drift: DriftArgs,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub lambda: f64,
    /// Cells as `lo:hi:bins` per axis; values are taken at cell centers.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: String,
    #[arg(long, value_enum, default_value_t)]
    pub normalization: NormArg,
    /// Zero out values below 1e-3, as in figure output.
    #[arg(long)]
    pub truncate: bool,
    #[command(flatten)]
    #[serde(flatten)]
    pub out: OutArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct CfArgs {
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub drift: DriftArgs,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub lambda: f64,
    /// Single frequency; prints value, gradient, Hessian and moments as JSON.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "grid", required_unless_present = "grid")]
    pub omega: Option<String>,
    /// Frequency grid as `lo:hi:bins` per axis.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
    #[command(flatten)]
    #[serde(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize, Default, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum EntropyMethod {
    /// Closed form where one exists, quadrature otherwise.
    #[default]
    Auto,
    Closed,
    Quadrature,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct EntropyArgs {
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub drift: DriftArgs,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub lambda: f64,
    #[arg(long, value_enum, default_value_t)]
    pub method: EntropyMethod,
    #[arg(long, value_enum, default_value_t)]
    pub units: UnitsArg,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct CapacityArgs {
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub drift: DriftArgs,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub lambda: f64,
    /// Second-moment budget of the input.
    #[arg(long = "P", allow_negative_numbers = true)]
    #[serde(rename = "P")]
    pub p: f64,
    #[arg(long, value_enum, default_value_t)]
    pub units: UnitsArg,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepVarArg {
    #[value(name = "P")]
    #[serde(rename = "P")]
    P,
    Lambda,
    /// Drift magnitude |u|.
    U,
}

impl From<SweepVarArg> for SweepVar {
    fn from(v: SweepVarArg) -> Self {
        match v {
            SweepVarArg::P => SweepVar::P,
            SweepVarArg::Lambda => SweepVar::Lambda,
            SweepVarArg::U => SweepVar::U,
        }
    }
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub vary: SweepVarArg,
    #[arg(long, allow_negative_numbers = true)]
    pub from: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub to: f64,
    #[arg(long, default_value_t = 100)]
    pub steps: usize,
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    /// Drift when it is not the swept variable (default −1).
    #[command(flatten)]
    #[serde(flatten)]
    pub drift: DriftArgs,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub lambda: f64,
    #[arg(long = "P", default_value_t = 1.0, allow_negative_numbers = true)]
    #[serde(rename = "P")]
    pub p: f64,
    #[arg(long, value_enum, default_value_t)]
    pub units: UnitsArg,
    #[command(flatten)]
    #[serde(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CrossingArg {
    /// Position at the first step below the plane.
    Step,
    /// Interpolated crossing with Brownian-bridge detection.
    Bridge,
}

#[derive(Args, Debug, Clone, Default, Serialize)]
pub struct SimArgs {
    /// `paper-fig1` (zero drift) or `paper-fig2` (u = [2,−3,−1]).
    #[arg(long)]
    pub preset: Option<String>,
    /// Number of trajectories.
    #[arg(long = "M")]
    #[serde(rename = "M")]
    pub m: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub drift: DriftArgs,
    /// Steps after which a trajectory counts as escaped.
    #[arg(long)]
    pub max_steps: Option<u64>,
    #[arg(long, value_enum)]
    pub crossing: Option<CrossingArg>,
}

impl SimArgs {
    pub fn config(&self) -> Result<SimConfig> {
        let mut cfg = match &self.preset {
            Some(name) => SimConfig::preset(name)?,
            None => {
                if self.drift.u.is_none() && self.drift.v.is_none() {
                    bail!("a simulation needs --preset or a drift (--u, or --v with --D-coef)");
                }
                SimConfig {
                    ambient_dim: 3,
                    d_coef: 840.0,
                    drift: Drift::Normalized(vec![0.0; 3]),
                    dt: 1e-5,
                    lambda: 1.0,
                    m: 100_000,
                    seed: 0,
                    max_steps: DEFAULT_MAX_STEPS,
                    crossing_mode: CrossingMode::StepAfterCrossing,
                }
            }
        };
        if let Some(d) = self.drift.d_coef {
            cfg.d_coef = d;
        }
        if let Some(u) = self.drift.normalized()? {
            let u = if u.len() == 1 { expand(u, 2)? } else { u };
            cfg.ambient_dim = u.len();
            cfg.drift = Drift::Normalized(u);
        }
        if let Some(m) = self.m {
            cfg.m = m;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(dt) = self.dt {
            cfg.dt = dt;
        }
        if let Some(l) = self.lambda {
            cfg.lambda = l;
        }
        if let Some(n) = self.max_steps {
            cfg.max_steps = n;
        }
        if let Some(c) = self.crossing {
            cfg.crossing_mode = match c {
                CrossingArg::Step => CrossingMode::StepAfterCrossing,
                CrossingArg::Bridge => CrossingMode::BridgeCorrected,
            };
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub sim: SimArgs,
    /// Emit a histogram on this grid instead of the raw samples.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
    #[arg(long, value_enum, default_value_t)]
    pub normalization: NormArg,
    /// Zero out histogram values below 1e-3 (always on for presets).
    #[arg(long)]
    pub truncate: bool,
    #[command(flatten)]
    #[serde(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ValidateKind {
    /// Histogram against the density at cell centers (max-abs ≤ k/√M).
    Density,
    /// One-sample KS of radii against the VDFAP radial law.
    Ks,
    /// z-tests of the mean and second moment.
    Moments,
    /// Two-sample KS of simulator radii against exact draws.
    TwoSample,
    /// KS test of N₁ + N₂ against VDFAP(u, λ₁ + λ₂).
    Stability,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize, Default, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum SourceArg {
    #[default]
    Sim,
    Exact,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ThresholdArgs {
    #[arg(long, default_value_t = Thresholds::default().k)]
    pub k: f64,
    #[arg(long, default_value_t = Thresholds::default().alpha)]
    pub alpha: f64,
    #[arg(long, default_value_t = Thresholds::default().z)]
    pub z: f64,
    #[arg(long, default_value_t = Thresholds::default().min_samples)]
    pub min_samples: u64,
}

impl From<&ThresholdArgs> for Thresholds {
    fn from(t: &ThresholdArgs) -> Self {
        Thresholds { k: t.k, alpha: t.alpha, z: t.z, min_samples: t.min_samples }
    }
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ValidateArgs {
    #[arg(long, value_enum)]
    pub kind: ValidateKind,
    #[command(flatten)]
    #[serde(flatten)]
    pub sim: SimArgs,
    /// Where samples come from when --samples is absent.
    #[arg(long, value_enum, default_value_t)]
    pub source: SourceArg,
    /// Sample CSV written by `simulate`; the drift and λ flags describe its law.
    #[arg(long, conflicts_with = "source")]
    pub samples: Option<PathBuf>,
    /// Receiver dimension for exact or file samples.
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    #[arg(long, allow_hyphen_values = true, default_value = "-3:3:60,-3:3:60")]
    pub grid: String,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub lambda1: f64,
    #[arg(long, default_value_t = 2.0)]
    pub lambda2: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub thresholds: ThresholdArgs,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SelftestArgs {
    /// Comma-separated criterion numbers; all when absent.
    #[arg(long)]
    pub only: Option<String>,
}
