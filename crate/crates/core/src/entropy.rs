//! Differential entropy of VDFAP laws.
//!
//! With `E1s(t) = e^t E₁(t)` the two ancillary functions are
//!
//! ```text
//! g(s)  = s e^{s+1} Ei(−1−s) − 3 s e^s Ei(−s) = 3 s E1s(s) − s E1s(s+1)
//! h0(s) = 2 ln s − ln(1+s) − g(s)
//! ```
//!
//! and the `d = 2` entropy is `h = h0(|u|λ) + ln(2πe³) − 2 ln|u|`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::channel::{vdfap_log_pdf_radial, VdfapParams};
use crate::error::{FapError, Result};
use crate::quad::{integrate, integrate_with_breaks, QuadOptions};
use crate::specfun::{bessel_k_scaled, expint_e1_scaled, expint_ei, BesselOrder, EULER_GAMMA};

const SMALL_S: f64 = 1e-4;

/// Density floor defining the truncation radius of the quadrature oracle.
const LN_DENSITY_FLOOR: f64 = -690.0;

fn check_s(s: f64) -> Result<()> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(FapError::domain(format!("s must be finite and > 0, got {s}")));
    }
    Ok(())
}

/// `g(s)`; always below 2.
pub fn g(s: f64) -> Result<f64> {
    check_s(s)?;
    Ok(3.0 * s * expint_e1_scaled(s)? - s * expint_e1_scaled(s + 1.0)?)
}

/// `h0(s) = 2 ln s − ln(1+s) − g(s)`, strictly increasing.
pub fn h0(s: f64) -> Result<f64> {
    check_s(s)?;
    if s < SMALL_S {
        // Expand E1(s) = −γ − ln s − Σ (−s)^k/(k·k!) and collect the ln s terms.
        let mut term = 1.0;
        let mut series = 0.0;
        for k in 1..8 {
            let kf = f64::from(k);
            term *= -s / kf;
            series += term / kf;
        }
        let w = 3.0 * s * s.exp();
        return Ok(s.ln() * (2.0 + w) + w * (EULER_GAMMA + series) - s.ln_1p()
            + s * expint_e1_scaled(1.0 + s)?);
    }
    Ok(2.0 * s.ln() - s.ln_1p() - g(s)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct H0Derivatives {
    pub g_prime: f64,
    pub h0_prime: f64,
}

/// `g'(s) = ((s+1)/s) g(s) + s/(s+1) − 3` and `h0'(s) = ((s+1)/s)(2 − g(s))`.
pub fn h0_derivatives(s: f64) -> Result<H0Derivatives> {
    let gs = g(s)?;
    let ratio = (s + 1.0) / s;
    Ok(H0Derivatives {
        g_prime: ratio * gs + s / (s + 1.0) - 3.0,
        h0_prime: ratio * (2.0 - gs),
    })
}

/// Closed-form differential entropy (nats) of the `d = 2` VDFAP law.
pub fn vdfap_entropy_2d(u: f64, lambda: f64) -> Result<f64> {
    let p = VdfapParams::new(u, lambda, 2)?;
    let s = p.abs_u() * p.lambda();
    Ok((2.0 * PI).ln() + 3.0 + 2.0 * lambda.ln() - s.ln_1p() - g(s)?)
}

/// Closed form of `∫_a^∞ (K_{3/2}(ρ)/ρ^{1/2}) ln(K_{3/2}(ρ)/ρ^{3/2}) dρ`.
pub fn entropy_tail_integral(a: f64) -> Result<f64> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(FapError::domain(format!("a must be finite and > 0, got {a}")));
    }
    let ema = (-a).exp();
    let bracket = 6.0 * a.ln() - 2.0 * a.ln_1p() + 6.0 + (2.0 / PI).ln();
    Ok((PI / 2.0).sqrt()
        * (std::f64::consts::E * expint_ei(-1.0 - a)? - 3.0 * expint_ei(-a)? - ema
            - ema / (2.0 * a) * bracket))
}

/// Integrand of [`entropy_tail_integral`], evaluated in log space.
pub fn entropy_tail_integrand(rho: f64) -> Result<f64> {
    let order = BesselOrder::from_twice(3)?;
    let ln_k = bessel_k_scaled(order, rho)?.ln() - rho;
    let ln_ratio = ln_k - 1.5 * rho.ln();
    Ok((ln_k - 0.5 * rho.ln()).exp() * ln_ratio)
}

/// Direct quadrature of the tail integral; the oracle for [`entropy_tail_integral`].
pub fn entropy_tail_quadrature(a: f64) -> Result<f64> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(FapError::domain(format!("a must be finite and > 0, got {a}")));
    }
    // Integrand decays like ρ² e^{−ρ}; ρ = a + 800 is far past underflow.
    let mut breaks = vec![a];
    let mut b = a + 1.0;
    while b < a + 800.0 {
        breaks.push(b);
        b = a + 2.0 * (b - a);
    }
    breaks.push(a + 800.0);
    let mut err = None;
    let r = integrate_with_breaks(
        |rho| match entropy_tail_integrand(rho) {
            Ok(v) => v,
            Err(e) => {
                err.get_or_insert(e);
                0.0
            }
        },
        &breaks,
        QuadOptions::with_tol(1e-14, 1e-13),
    )?;
    if let Some(e) = err {
        return Err(e);
    }
    Ok(r.value)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyEstimate {
    pub nats: f64,
    pub abs_error: f64,
    pub truncation_radius: f64,
}

/// Surface area of the unit sphere in `ℝ^d` (`2`, `2π`, `4π`, …).
pub fn unit_sphere_area(d: usize) -> f64 {
    let half = d as f64 / 2.0;
    2.0 * PI.powf(half) / crate::specfun::gamma_half_integer(d as u32)
}

/// `−∫ f ln f` by radial quadrature, truncated where `f < 1e−300`.
pub fn entropy_quadrature(params: &VdfapParams) -> Result<EntropyEstimate> {
    let d = params.d();
    if d > 2 {
        return Err(FapError::Unsupported(format!(
            "entropy quadrature is provided for d in {{1, 2}}, got {d}"
        )));
    }
    let area = unit_sphere_area(d);
    let lambda = params.lambda();
    let mut breaks = vec![0.0];
    let mut r = 0.25 * lambda;
    loop {
        breaks.push(r);
        if vdfap_log_pdf_radial(r, params)? < LN_DENSITY_FLOOR {
            break;
        }
        r *= 2.0;
    }
    let truncation_radius = r;
    let mut err = None;
    let res = integrate_with_breaks(
        |r| match vdfap_log_pdf_radial(r, params) {
            Ok(lf) => -area * r.powi(d as i32 - 1) * lf.exp() * lf,
            Err(e) => {
                err.get_or_insert(e);
                0.0
            }
        },
        &breaks,
        QuadOptions::with_tol(1e-10, 1e-12),
    )?;
    if let Some(e) = err {
        return Err(e);
    }
    Ok(EntropyEstimate {
        nats: res.value,
        abs_error: res.abs_error,
        truncation_radius,
    })
}

/// Differential entropy of any supported VDFAP law: closed form for `d = 2`,
/// quadrature for `d = 1`.
pub fn vdfap_entropy(params: &VdfapParams) -> Result<f64> {
    match params.d() {
        2 => vdfap_entropy_2d(params.u(), params.lambda()),
        1 => Ok(entropy_quadrature(params)?.nats),
        d => Err(FapError::Unsupported(format!("no entropy evaluator for d = {d}"))),
    }
}

/// Integral of `f` over `[0, r]` for the radial density; used by the KS CDF.
pub(crate) fn radial_mass(params: &VdfapParams, r0: f64, r1: f64) -> Result<f64> {
    let area = unit_sphere_area(params.d());
    let d = params.d() as i32;
    let mut err = None;
    let res = integrate(
        |r| match vdfap_log_pdf_radial(r, params) {
            Ok(lf) => area * r.powi(d - 1) * lf.exp(),
            Err(e) => {
                err.get_or_insert(e);
                0.0
            }
        },
        r0,
        r1,
        QuadOptions::with_tol(1e-14, 1e-12),
    )?;
    if let Some(e) = err {
        return Err(e);
    }
    Ok(res.value)
}
