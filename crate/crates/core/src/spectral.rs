//! Characteristic function of the VDFAP law and what follows from it.
//!
//! `Φ(ω) = exp(−λ(sqrt(‖ω‖² + u²) − |u|))` is real because the density is
//! radially symmetric. Derivatives at the origin give the moments, and the
//! product rule `Φ_{λ₁} Φ_{λ₂} = Φ_{λ₁+λ₂}` gives closure under convolution.

use serde::{Deserialize, Serialize};

use crate::channel::VdfapParams;
use crate::error::{FapError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreqPoint {
    pub omega: Vec<f64>,
}

impl FreqPoint {
    pub fn new(omega: Vec<f64>) -> Result<Self> {
        if omega.iter().any(|w| !w.is_finite()) {
            return Err(FapError::domain("frequency components must be finite"));
        }
        Ok(FreqPoint { omega })
    }

    pub fn norm_sq(&self) -> f64 {
        self.omega.iter().map(|w| w * w).sum()
    }
}

impl From<&[f64]> for FreqPoint {
    fn from(w: &[f64]) -> Self {
        FreqPoint { omega: w.to_vec() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentSummary {
    pub mean: Vec<f64>,
    pub correlation: Vec<Vec<f64>>,
    pub second_moment: f64,
}

fn check(omega: &FreqPoint, params: &VdfapParams) -> Result<()> {
    if omega.omega.len() != params.d() {
        return Err(FapError::Dimension { expected: params.d(), got: omega.omega.len() });
    }
    if omega.omega.iter().any(|w| !w.is_finite()) {
        return Err(FapError::domain("frequency components must be finite"));
    }
    Ok(())
}

// Returns (Φ, q) with q = sqrt(‖ω‖² + u²). The exponent is written as
// w²/(q + |u|) so small ‖ω‖ does not cancel.
fn phi_and_q(omega: &FreqPoint, params: &VdfapParams) -> (f64, f64) {
    let w2 = omega.norm_sq();
    let a = params.abs_u();
    let q = (w2 + a * a).sqrt();
    let phi = (-params.lambda() * w2 / (q + a)).exp();
    (phi, q)
}

/// `Φ(ω)`, in `(0, 1]`.
pub fn vdfap_cf(omega: &FreqPoint, params: &VdfapParams) -> Result<f64> {
    check(omega, params)?;
    Ok(phi_and_q(omega, params).0)
}

/// `∇Φ(ω) = −λΦ(ω)/q · ω`.
pub fn vdfap_cf_gradient(omega: &FreqPoint, params: &VdfapParams) -> Result<Vec<f64>> {
    check(omega, params)?;
    let (phi, q) = phi_and_q(omega, params);
    let c = -params.lambda() * phi / q;
    Ok(omega.omega.iter().map(|w| c * w).collect())
}

/// `∇²Φ(ω) = −λΦ/q · I + λΦ(1 + λq)/q³ · ωωᵀ`.
pub fn vdfap_cf_hessian(omega: &FreqPoint, params: &VdfapParams) -> Result<Vec<Vec<f64>>> {
    check(omega, params)?;
    let (phi, q) = phi_and_q(omega, params);
    let lambda = params.lambda();
    let diag = -lambda * phi / q;
    let outer = lambda * phi * (1.0 + lambda * q) / (q * q * q);
    let w = &omega.omega;
    Ok((0..w.len())
        .map(|i| {
            (0..w.len())
                .map(|j| outer * (w[i] * w[j]) + if i == j { diag } else { 0.0 })
                .collect()
        })
        .collect())
}

/// Mean 0, correlation `(λ/|u|) I`, second moment `λd/|u|`.
pub fn vdfap_moments(params: &VdfapParams) -> MomentSummary {
    let d = params.d();
    let c = params.lambda() / params.abs_u();
    let correlation = (0..d)
        .map(|i| (0..d).map(|j| if i == j { c } else { 0.0 }).collect())
        .collect();
    MomentSummary {
        mean: vec![0.0; d],
        correlation,
        second_moment: c * d as f64,
    }
}

/// Law of `N₁ + N₂` for independent `N₁ ~ VDFAP(u, λ₁)`, `N₂ ~ VDFAP(u, λ₂)`.
pub fn convolve_params(a: &VdfapParams, b: &VdfapParams) -> Result<VdfapParams> {
    if a.u() != b.u() {
        return Err(FapError::StabilityViolation(format!(
            "drifts differ ({} vs {}); VDFAP is closed under convolution only at equal drift",
            a.u(),
            b.u()
        )));
    }
    if a.d() != b.d() {
        return Err(FapError::StabilityViolation(format!(
            "dimensions differ ({} vs {})",
            a.d(),
            b.d()
        )));
    }
    VdfapParams::new(a.u(), a.lambda() + b.lambda(), a.d())
}
