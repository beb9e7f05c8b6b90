//! Goodness-of-fit checks of samples against the closed-form laws.

use serde::{Deserialize, Serialize};

use crate::channel::{fap_pdf_plane, PlanarChannelParams, VdfapParams};
use crate::entropy::radial_mass;
use crate::error::{FapError, Result};
use crate::mcsim::{
    sample_vdfap_exact, DensityGrid, Drift, FapSampleSet, Normalization, SampleSource, SEED_SPLIT,
};
use crate::spectral::convolve_params;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// Grid comparison passes iff `max_abs_err ≤ k/√M`.
    pub k: f64,
    /// KS significance level.
    pub alpha: f64,
    /// Moment tests pass iff every `|z| < z`.
    pub z: f64,
    /// Below this sample size the statistical tests report low power.
    pub min_samples: u64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds { k: 5.0, alpha: 0.01, z: 3.0, min_samples: 50 }
    }
}

impl Thresholds {
    /// Asymptotic one-sample KS critical value `sqrt(−ln(α/2)/2)/√n`.
    pub fn ks_critical(&self, n: usize) -> f64 {
        (-(self.alpha / 2.0).ln() / 2.0).sqrt() / (n as f64).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    LowPower,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub max_abs_err: Option<f64>,
    pub rmse: Option<f64>,
    pub tv_distance: Option<f64>,
    pub ks_statistic: Option<f64>,
    /// The bound the deciding metric was held to.
    pub critical_value: Option<f64>,
    pub z_scores: Vec<f64>,
    pub n: u64,
    pub verdict: Verdict,
    pub pass: bool,
    pub thresholds: Thresholds,
}

impl FitReport {
    fn new(n: u64, thresholds: Thresholds) -> Self {
        FitReport {
            max_abs_err: None,
            rmse: None,
            tv_distance: None,
            ks_statistic: None,
            critical_value: None,
            z_scores: Vec::new(),
            n,
            verdict: Verdict::Fail,
            pass: false,
            thresholds,
        }
    }

    // Grid comparisons have no sample-size gate; the statistical tests do.
    fn decide(mut self, ok: bool) -> Self {
        let statistical = self.ks_statistic.is_some() || !self.z_scores.is_empty();
        self.verdict = if statistical && self.n < self.thresholds.min_samples {
            Verdict::LowPower
        } else if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        self.pass = self.verdict == Verdict::Pass;
        self
    }
}

/// Compare a density histogram with `fap_pdf_plane` at cell centers.
pub fn compare_density(
    empirical: &DensityGrid,
    params: &PlanarChannelParams,
    thresholds: Thresholds,
) -> Result<FitReport> {
    if empirical.normalization != Normalization::Density {
        return Err(FapError::param("compare_density needs a density-normalized grid"));
    }
    if empirical.axes.len() != params.d() {
        return Err(FapError::Dimension { expected: params.d(), got: empirical.axes.len() });
    }
    let vol = empirical.cell_volume();
    let mut max_abs: f64 = 0.0;
    let mut sq = 0.0;
    let mut l1 = 0.0;
    for (i, &e) in empirical.values.iter().enumerate() {
        let t = fap_pdf_plane(&empirical.cell_center(i), params)?;
        let diff = (e - t).abs();
        max_abs = max_abs.max(diff);
        sq += diff * diff;
        l1 += diff * vol;
    }
    let cells = empirical.values.len().max(1) as f64;
    let mut r = FitReport::new(empirical.total, thresholds);
    let limit = thresholds.k / (empirical.total as f64).sqrt();
    r.max_abs_err = Some(max_abs);
    r.rmse = Some((sq / cells).sqrt());
    r.tv_distance = Some((0.5 * l1).min(1.0));
    r.critical_value = Some(limit);
    Ok(r.decide(max_abs <= limit))
}

/// Radial CDF `F(r_i)` at increasing radii, accumulated interval by interval.
pub fn radial_cdf_sorted(radii: &[f64], params: &VdfapParams) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(radii.len());
    let mut acc = 0.0;
    let mut prev = 0.0;
    for &r in radii {
        if r < prev {
            return Err(FapError::domain("radii must be sorted"));
        }
        if r > prev {
            acc += radial_mass(params, prev, r)?;
            prev = r;
        }
        out.push(acc.min(1.0));
    }
    Ok(out)
}

/// One-sample KS statistic of `‖N‖` against the VDFAP radial law.
pub fn ks_radial(samples: &FapSampleSet, params: &VdfapParams, thresholds: Thresholds) -> Result<FitReport> {
    if samples.dim() != params.d() {
        return Err(FapError::Dimension { expected: params.d(), got: samples.dim() });
    }
    if samples.is_empty() {
        return Err(FapError::param("KS test needs at least one sample"));
    }
    let mut radii = samples.radii();
    radii.sort_by(f64::total_cmp);
    let cdf = radial_cdf_sorted(&radii, params)?;
    let n = radii.len() as f64;
    let stat = cdf
        .iter()
        .enumerate()
        .map(|(i, &f)| ((i as f64 + 1.0) / n - f).max(f - i as f64 / n))
        .fold(0.0, f64::max);
    let crit = thresholds.ks_critical(radii.len());
    let mut r = FitReport::new(radii.len() as u64, thresholds);
    r.ks_statistic = Some(stat);
    r.critical_value = Some(crit);
    Ok(r.decide(stat <= crit))
}

/// Two-sample KS test at level `alpha`.
pub fn ks_two_sample(a: &[f64], b: &[f64], thresholds: Thresholds) -> Result<FitReport> {
    if a.is_empty() || b.is_empty() {
        return Err(FapError::param("KS test needs non-empty samples"));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut stat: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        stat = stat.max((i as f64 / na - j as f64 / nb).abs());
    }
    let c = (-(thresholds.alpha / 2.0).ln() / 2.0).sqrt();
    let crit = c * ((na + nb) / (na * nb)).sqrt();
    let mut r = FitReport::new(a.len().min(b.len()) as u64, thresholds);
    r.ks_statistic = Some(stat);
    r.critical_value = Some(crit);
    Ok(r.decide(stat <= crit))
}

/// Draw `N₁ ~ a` and `N₂ ~ b` independently and KS-test `N₁ + N₂` against `reference`.
pub fn sum_test(
    a: &VdfapParams,
    b: &VdfapParams,
    reference: &VdfapParams,
    m: u64,
    seed: u64,
    thresholds: Thresholds,
) -> Result<FitReport> {
    if a.d() != b.d() {
        return Err(FapError::Dimension { expected: a.d(), got: b.d() });
    }
    let s1 = sample_vdfap_exact(a, m, seed)?;
    let s2 = sample_vdfap_exact(b, m, seed ^ SEED_SPLIT)?;
    let sum: Vec<f64> = s1.flat().iter().zip(s2.flat()).map(|(x, y)| x + y).collect();
    let set = FapSampleSet::new(a.d(), sum, 0, SampleSource::Derived("sum of independent draws".into()))?;
    ks_radial(&set, reference, thresholds)
}

/// Empirical check of closure under convolution at fixed drift.
pub fn weak_stability_test(
    u: f64,
    lambda1: f64,
    lambda2: f64,
    d: usize,
    m: u64,
    seed: u64,
    thresholds: Thresholds,
) -> Result<FitReport> {
    let a = VdfapParams::new(u, lambda1, d)?;
    let b = VdfapParams::new(u, lambda2, d)?;
    let reference = convolve_params(&a, &b)?;
    sum_test(&a, &b, &reference, m, seed, thresholds)
}

fn source_vertical_drift(source: &SampleSource) -> Option<f64> {
    match source {
        SampleSource::Simulated(c) => {
            let v = match &c.drift {
                Drift::Physical(v) | Drift::Normalized(v) => v,
            };
            v.last().copied()
        }
        SampleSource::Exact { params, .. } => Some(params.u_vertical()),
        SampleSource::Derived(_) => None,
    }
}

fn mean_sd(xs: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, var.sqrt(), n)
}

fn z_score(mean: f64, target: f64, sd: f64, n: f64) -> f64 {
    let se = sd / n.sqrt();
    if se > 0.0 {
        (mean - target) / se
    } else if mean == target {
        0.0
    } else {
        f64::INFINITY
    }
}

/// z-tests of each coordinate mean against 0 and of `E‖N‖²` against `λd/|u|`.
pub fn moment_test(samples: &FapSampleSet, params: &VdfapParams, thresholds: Thresholds) -> Result<FitReport> {
    if samples.dim() != params.d() {
        return Err(FapError::Dimension { expected: params.d(), got: samples.dim() });
    }
    if samples.is_empty() {
        return Err(FapError::param("moment test needs at least one sample"));
    }
    if let Some(ud) = source_vertical_drift(&samples.source) {
        if ud >= 0.0 {
            return Err(FapError::param(
                "samples were drawn without drift towards the receiver; the second moment is infinite",
            ));
        }
    }
    let d = samples.dim();
    let mut z = Vec::with_capacity(d + 1);
    for k in 0..d {
        let (m, sd, n) = mean_sd(&samples.points().map(|p| p[k]).collect::<Vec<_>>());
        z.push(z_score(m, 0.0, sd, n));
    }
    let target = params.lambda() * d as f64 / params.abs_u();
    let (m2, sd2, n) = mean_sd(
        &samples.points().map(|p| p.iter().map(|x| x * x).sum::<f64>()).collect::<Vec<_>>(),
    );
    z.push(z_score(m2, target, sd2, n));
    let ok = z.iter().all(|v| v.abs() < thresholds.z);
    let mut r = FitReport::new(samples.len() as u64, thresholds);
    r.z_scores = z;
    r.critical_value = Some(thresholds.z);
    Ok(r.decide(ok))
}
