//! First-passage Monte Carlo for a drifted Brownian particle above an
//! absorbing hyperplane, an exact sampler for the FAP law, and histogramming.
//!
//! Trajectory `i` draws from its own ChaCha8 stream (`seed`, stream `i`), so
//! results do not depend on how rayon schedules the work.
//!
//! The coordinates are independent, so only the vertical one is stepped. Once
//! the crossing step `k` is known, the parallel coordinates are drawn in one
//! go from their exact law at step `k − 1` plus one increment, which is the
//! same distribution the full Euler–Maruyama walk would produce.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{InverseGaussian, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{PlanarChannelParams, VdfapParams};
use crate::error::{FapError, Result};

/// Stream offset for the second draw of a paired sampling experiment.
pub const SEED_SPLIT: u64 = 0x9E37_79B9_7F4A_7C15;

const BRIDGE_STREAM: u64 = 1 << 63;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum CrossingMode {
    /// Record the position at the first step whose vertical coordinate is negative.
    #[default]
    StepAfterCrossing,
    /// Interpolate the crossing point linearly and also detect crossings
    /// between steps with the Brownian-bridge probability
    /// `exp(−2 y₀ y₁ / (σ² dt))`.
    BridgeCorrected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Drift {
    /// Velocity `v` in μm/s.
    Physical(Vec<f64>),
    /// `u = v/σ²` in μm⁻¹.
    Normalized(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub ambient_dim: usize,
    pub d_coef: f64,
    pub drift: Drift,
    pub dt: f64,
    pub lambda: f64,
    pub m: u64,
    pub seed: u64,
    pub max_steps: u64,
    pub crossing_mode: CrossingMode,
}

pub const DEFAULT_MAX_STEPS: u64 = 10_000_000;

impl SimConfig {
    /// Desk-scale versions of the zero-drift (`paper-fig1`) and drifted
    /// (`paper-fig2`) verification runs: `D = 840`, `dt = 1e−5`, `M = 1e5`.
    pub fn preset(name: &str) -> Result<Self> {
        let drift = match name {
            "paper-fig1" => vec![0.0, 0.0, 0.0],
            "paper-fig2" => vec![2.0, -3.0, -1.0],
            other => return Err(FapError::param(format!("unknown preset '{other}'"))),
        };
        Ok(SimConfig {
            ambient_dim: 3,
            d_coef: 840.0,
            drift: Drift::Normalized(drift),
            dt: 1e-5,
            lambda: 1.0,
            m: 100_000,
            seed: 0,
            max_steps: DEFAULT_MAX_STEPS,
            crossing_mode: CrossingMode::StepAfterCrossing,
        })
    }

    pub fn receiver_dim(&self) -> usize {
        self.ambient_dim - 1
    }

    pub fn sigma2(&self) -> f64 {
        2.0 * self.d_coef
    }

    pub fn validate(&self) -> Result<()> {
        if self.ambient_dim < 2 {
            return Err(FapError::param(format!("ambient dimension must be >= 2, got {}", self.ambient_dim)));
        }
        if !(self.d_coef > 0.0) || !self.d_coef.is_finite() {
            return Err(FapError::param(format!("D_coef must be finite and > 0, got {}", self.d_coef)));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(FapError::param(format!("dt must be finite and > 0, got {}", self.dt)));
        }
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(FapError::param(format!("lambda must be finite and > 0, got {}", self.lambda)));
        }
        if self.m >= BRIDGE_STREAM {
            return Err(FapError::param("trajectory count must be below 2^63"));
        }
        if self.max_steps == 0 {
            return Err(FapError::param("max_steps must be >= 1"));
        }
        let v = match &self.drift {
            Drift::Physical(v) | Drift::Normalized(v) => v,
        };
        if v.len() != self.ambient_dim {
            return Err(FapError::Dimension { expected: self.ambient_dim, got: v.len() });
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(FapError::param("drift must be finite"));
        }
        Ok(())
    }

    pub fn normalized_drift(&self) -> Vec<f64> {
        match &self.drift {
            Drift::Normalized(u) => u.clone(),
            Drift::Physical(v) => v.iter().map(|x| x / self.sigma2()).collect(),
        }
    }

    pub fn velocity(&self) -> Vec<f64> {
        match &self.drift {
            Drift::Physical(v) => v.clone(),
            Drift::Normalized(u) => u.iter().map(|x| x * self.sigma2()).collect(),
        }
    }

    /// The FAP law this configuration approximates as `dt → 0`.
    pub fn channel(&self) -> Result<PlanarChannelParams> {
        self.validate()?;
        PlanarChannelParams::new(self.receiver_dim(), self.normalized_drift(), self.lambda)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleSource {
    Simulated(SimConfig),
    Exact { params: PlanarChannelParams, seed: u64 },
    Derived(String),
}

/// Absorbed first-arrival positions, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FapSampleSet {
    dim: usize,
    data: Vec<f64>,
    pub absorbed: u64,
    pub escaped: u64,
    pub source: SampleSource,
    pub wall_time: f64,
    pub warnings: Vec<String>,
}

impl FapSampleSet {
    pub fn new(dim: usize, data: Vec<f64>, escaped: u64, source: SampleSource) -> Result<Self> {
        if dim == 0 || !data.len().is_multiple_of(dim) {
            return Err(FapError::Dimension { expected: dim, got: data.len() });
        }
        let absorbed = (data.len() / dim) as u64;
        let mut warnings = Vec::new();
        if absorbed == 0 && escaped > 0 {
            warnings.push(format!("all {escaped} trajectories escaped; no samples"));
        }
        Ok(FapSampleSet { dim, data, absorbed, escaped, source, wall_time: 0.0, warnings })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Trajectories attempted, `absorbed + escaped`.
    pub fn total(&self) -> u64 {
        self.absorbed + self.escaped
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn flat(&self) -> &[f64] {
        &self.data
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn radii(&self) -> Vec<f64> {
        self.points().map(|p| p.iter().map(|x| x * x).sum::<f64>().sqrt()).collect()
    }

    pub fn all_escaped(&self) -> bool {
        self.absorbed == 0 && self.escaped > 0
    }
}

struct Stepper {
    sd: f64,
    vert_step: f64,
    v_par: Vec<f64>,
    dt: f64,
    sigma2: f64,
    lambda: f64,
    max_steps: u64,
    bridge: bool,
}

impl Stepper {
    fn run(&self, seed: u64, index: u64) -> Option<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        // Bridge uniforms come from a separate stream so that both crossing
        // modes see the same Gaussian path for a given seed.
        let mut aux = ChaCha8Rng::seed_from_u64(seed);
        aux.set_stream(index | BRIDGE_STREAM);
        let mut y = self.lambda;
        let bridge_scale = -2.0 / (self.sigma2 * self.dt);
        for k in 1..=self.max_steps {
            let z: f64 = rng.sample(StandardNormal);
            let y_new = y + self.vert_step + self.sd * z;
            if y_new < 0.0 {
                let alpha = if self.bridge { y / (y - y_new) } else { 1.0 };
                return Some(self.parallel(&mut rng, k, alpha));
            }
            if self.bridge {
                let expo = bridge_scale * y * y_new;
                if expo > -40.0 && aux.random::<f64>() < expo.exp() {
                    let alpha = y / (y + y_new);
                    return Some(self.parallel(&mut rng, k, alpha));
                }
            }
            y = y_new;
        }
        None
    }

    // Parallel coordinates at time (k − 1 + α)·dt, interpolated linearly
    // between steps k − 1 and k.
    fn parallel(&self, rng: &mut ChaCha8Rng, k: u64, alpha: f64) -> Vec<f64> {
        let t_prev = (k - 1) as f64 * self.dt;
        let sd_prev = (self.sigma2 * t_prev).sqrt();
        self.v_par
            .iter()
            .map(|&v| {
                let z0: f64 = rng.sample(StandardNormal);
                let z1: f64 = rng.sample(StandardNormal);
                let prev = v * t_prev + sd_prev * z0;
                let inc = v * self.dt + self.sd * z1;
                prev + alpha * inc
            })
            .collect()
    }
}

/// Run `M` trajectories from `[0, …, 0, λ]` until the vertical coordinate
/// goes negative or `max_steps` is reached.
pub fn simulate_fap(config: &SimConfig) -> Result<FapSampleSet> {
    config.validate()?;
    let start = Instant::now();
    let v = config.velocity();
    let d = config.receiver_dim();
    let stepper = Stepper {
        sd: (config.sigma2() * config.dt).sqrt(),
        vert_step: v[d] * config.dt,
        v_par: v[..d].to_vec(),
        dt: config.dt,
        sigma2: config.sigma2(),
        lambda: config.lambda,
        max_steps: config.max_steps,
        bridge: config.crossing_mode == CrossingMode::BridgeCorrected,
    };
    let hits: Vec<Option<Vec<f64>>> = (0..config.m)
        .into_par_iter()
        .map(|i| stepper.run(config.seed, i))
        .collect();
    let mut data = Vec::with_capacity(hits.len() * d);
    let mut escaped = 0;
    for h in hits {
        match h {
            Some(p) => data.extend_from_slice(&p),
            None => escaped += 1,
        }
    }
    let mut set = FapSampleSet::new(d, data, escaped, SampleSource::Simulated(config.clone()))?;
    set.wall_time = start.elapsed().as_secs_f64();
    Ok(set)
}

/// Exact draws from the (possibly defective) planar FAP law.
///
/// In units where `σ² = 1` the vertical hitting time is inverse Gaussian with
/// mean `λ/|u_D|` and shape `λ²` (Lévy when `u_D = 0`), and the parallel
/// position at that time is `u_par T + sqrt(T) Z`. For `u_D > 0` the particle
/// is absorbed with probability `e^{−2 u_D λ}` and, given absorption, behaves
/// as if the drift were reversed.
pub fn sample_planar_exact(params: &PlanarChannelParams, m: u64, seed: u64) -> Result<FapSampleSet> {
    let start = Instant::now();
    let d = params.d();
    let lambda = params.lambda();
    let ud = params.u_vertical();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ig = if ud != 0.0 {
        Some(InverseGaussian::new(lambda / ud.abs(), lambda * lambda).map_err(|e| FapError::param(e.to_string()))?)
    } else {
        None
    };
    let mass = crate::channel::absorption_mass(params);
    let mut data = Vec::with_capacity(m as usize * d);
    let mut escaped = 0;
    for _ in 0..m {
        if ud > 0.0 && rng.random::<f64>() >= mass {
            escaped += 1;
            continue;
        }
        let t = match &ig {
            Some(ig) => rng.sample(ig),
            None => {
                let z: f64 = rng.sample(StandardNormal);
                lambda * lambda / (z * z)
            }
        };
        let st = t.sqrt();
        for &up in params.u_par() {
            let z: f64 = rng.sample(StandardNormal);
            data.push(up * t + st * z);
        }
    }
    let mut set = FapSampleSet::new(d, data, escaped, SampleSource::Exact { params: params.clone(), seed })?;
    set.wall_time = start.elapsed().as_secs_f64();
    Ok(set)
}

/// `M` exact VDFAP draws; no discretization bias.
pub fn sample_vdfap_exact(params: &VdfapParams, m: u64, seed: u64) -> Result<FapSampleSet> {
    sample_planar_exact(&params.to_planar(), m, seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridAxis {
    pub lo: f64,
    pub hi: f64,
    pub bins: usize,
}

impl GridAxis {
    pub fn new(lo: f64, hi: f64, bins: usize) -> Result<Self> {
        let a = GridAxis { lo, hi, bins };
        a.validate()?;
        Ok(a)
    }

    pub fn validate(&self) -> Result<()> {
        if self.bins == 0 || !(self.hi > self.lo) || !self.lo.is_finite() || !self.hi.is_finite() {
            return Err(FapError::param(format!(
                "grid axis needs lo < hi and bins >= 1, got {}:{}:{}",
                self.lo, self.hi, self.bins
            )));
        }
        if !(self.width() > 0.0) {
            return Err(FapError::param("zero-width bins"));
        }
        Ok(())
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.bins as f64
    }

    pub fn center(&self, i: usize) -> f64 {
        self.lo + (i as f64 + 0.5) * self.width()
    }

    /// Bin of `x`; bins are half-open except the last, which includes `hi`.
    pub fn index(&self, x: f64) -> Option<usize> {
        if !(x >= self.lo && x <= self.hi) {
            return None;
        }
        let i = ((x - self.lo) / self.width()) as usize;
        Some(i.min(self.bins - 1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    RelativeFrequency,
    Density,
}

/// Values on a rectangular grid, row-major with the first axis slowest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityGrid {
    pub axes: Vec<GridAxis>,
    pub values: Vec<f64>,
    pub normalization: Normalization,
    /// Trajectories the counts were divided by; 0 for theory grids.
    pub total: u64,
    pub out_of_grid: u64,
    pub truncated: bool,
}

/// Values below this are hidden by [`DensityGrid::truncate_below`] in figure output.
pub const DISPLAY_TRUNCATION: f64 = 1e-3;

impl DensityGrid {
    pub fn cell_count(&self) -> usize {
        self.axes.iter().map(|a| a.bins).product()
    }

    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(GridAxis::width).product()
    }

    pub fn cell_center(&self, flat: usize) -> Vec<f64> {
        let mut idx = flat;
        let mut c = vec![0.0; self.axes.len()];
        for (k, a) in self.axes.iter().enumerate().rev() {
            c[k] = a.center(idx % a.bins);
            idx /= a.bins;
        }
        c
    }

    /// Probability mass represented by the grid.
    pub fn mass(&self) -> f64 {
        let s: f64 = self.values.iter().sum();
        match self.normalization {
            Normalization::Density => s * self.cell_volume(),
            Normalization::RelativeFrequency => s,
        }
    }

    /// Evaluate a density at cell centers.
    pub fn from_fn<F>(axes: Vec<GridAxis>, normalization: Normalization, mut f: F) -> Result<Self>
    where
        F: FnMut(&[f64]) -> Result<f64>,
    {
        for a in &axes {
            a.validate()?;
        }
        let mut grid = DensityGrid { axes, values: Vec::new(), normalization, total: 0, out_of_grid: 0, truncated: false };
        let vol = grid.cell_volume();
        let scale = match normalization {
            Normalization::Density => 1.0,
            Normalization::RelativeFrequency => vol,
        };
        grid.values = (0..grid.cell_count())
            .map(|i| Ok(f(&grid.cell_center(i))? * scale))
            .collect::<Result<_>>()?;
        Ok(grid)
    }

    /// Copy with values below `threshold` set to zero.
    pub fn truncate_below(&self, threshold: f64) -> Self {
        let mut g = self.clone();
        for v in &mut g.values {
            if *v < threshold {
                *v = 0.0;
            }
        }
        g.truncated = true;
        g
    }
}

/// Bin samples; counts are divided by the number of trajectories (escaped
/// ones included), and additionally by the cell volume for `Density`.
pub fn build_histogram(
    samples: &FapSampleSet,
    axes: &[GridAxis],
    normalization: Normalization,
) -> Result<DensityGrid> {
    if axes.len() != samples.dim() {
        return Err(FapError::Dimension { expected: samples.dim(), got: axes.len() });
    }
    for a in axes {
        a.validate()?;
    }
    let mut grid = DensityGrid {
        axes: axes.to_vec(),
        values: Vec::new(),
        normalization,
        total: samples.total(),
        out_of_grid: 0,
        truncated: false,
    };
    let mut counts = vec![0u64; grid.cell_count()];
    'points: for p in samples.points() {
        let mut flat = 0;
        for (x, a) in p.iter().zip(axes) {
            match a.index(*x) {
                Some(i) => flat = flat * a.bins + i,
                None => {
                    grid.out_of_grid += 1;
                    continue 'points;
                }
            }
        }
        counts[flat] += 1;
    }
    let denom = match normalization {
        Normalization::RelativeFrequency => grid.total as f64,
        Normalization::Density => grid.total as f64 * grid.cell_volume(),
    };
    grid.values = counts
        .iter()
        .map(|&c| if grid.total == 0 { 0.0 } else { c as f64 / denom })
        .collect();
    Ok(grid)
}
