//! Closed-form FAP densities.
//!
//! A molecule released at height `λ` above an absorbing hyperplane in
//! `ℝ^{d+1}` drifts with normalized velocity `u = v/σ²` (`σ² = 2D`). The
//! position `n ∈ ℝ^d` where it first touches the plane has density
//!
//! ```text
//! f(n) = 2λ ‖u‖^ν / (2π)^ν · exp(u_parᵀn − u_D λ) · K_ν(‖u‖ρ) / ρ^ν,
//! ν = (d+1)/2,  ρ = sqrt(‖n‖² + λ²).
//! ```
//!
//! When `u_D > 0` the drift points away from the receiver and the law is
//! defective; see [`absorption_mass`].

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{FapError, Result};
use crate::specfun::{bessel_k_scaled, gamma_half_integer, BesselOrder, MAX_TWICE_ORDER};

/// Below this value of `‖u‖ρ` the zero-drift Cauchy form is used.
pub const CAUCHY_SWITCH: f64 = 1e-8;

/// Largest supported receiver dimension.
pub const MAX_DIM: usize = (MAX_TWICE_ORDER - 1) as usize;

fn check_dim(d: usize) -> Result<()> {
    if d == 0 || d > MAX_DIM {
        return Err(FapError::Unsupported(format!(
            "receiver dimension d = {d} (supported: 1..={MAX_DIM})"
        )));
    }
    Ok(())
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(FapError::param(format!("lambda must be finite and > 0, got {lambda}")));
    }
    Ok(())
}

fn check_point(n: &[f64], d: usize) -> Result<()> {
    if n.len() != d {
        return Err(FapError::Dimension { expected: d, got: n.len() });
    }
    if n.iter().any(|x| !x.is_finite()) {
        return Err(FapError::domain("evaluation point must be finite"));
    }
    Ok(())
}

/// Planar receiver with arbitrary constant drift.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanarChannelParams {
    d: usize,
    u: Vec<f64>,
    lambda: f64,
}

impl PlanarChannelParams {
    /// `u` holds the `d` parallel components followed by the vertical one.
    pub fn new(d: usize, u: Vec<f64>, lambda: f64) -> Result<Self> {
        check_dim(d)?;
        if u.len() != d + 1 {
            return Err(FapError::Dimension { expected: d + 1, got: u.len() });
        }
        if u.iter().any(|x| !x.is_finite()) {
            return Err(FapError::param("drift must be finite"));
        }
        check_lambda(lambda)?;
        Ok(PlanarChannelParams { d, u, lambda })
    }

    /// Build from a physical drift velocity (μm/s) and diffusion coefficient (μm²/s).
    pub fn from_physical(d: usize, v: &[f64], d_coef: f64, lambda: f64) -> Result<Self> {
        Self::new(d, normalize_drift(v, d_coef)?, lambda)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn u_par(&self) -> &[f64] {
        &self.u[..self.d]
    }

    pub fn u_vertical(&self) -> f64 {
        self.u[self.d]
    }

    pub fn u_norm(&self) -> f64 {
        self.u.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

/// Vertically drifted FAP: drift `[0, …, 0, u]` with `u < 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VdfapParams {
    u: f64,
    lambda: f64,
    d: usize,
}

impl VdfapParams {
    pub fn new(u: f64, lambda: f64, d: usize) -> Result<Self> {
        check_dim(d)?;
        if !(u < 0.0) || !u.is_finite() {
            return Err(FapError::param(format!(
                "VDFAP drift must be finite and < 0 (towards the receiver), got {u}"
            )));
        }
        check_lambda(lambda)?;
        Ok(VdfapParams { u, lambda, d })
    }

    pub fn u(&self) -> f64 {
        self.u
    }

    pub fn abs_u(&self) -> f64 {
        self.u.abs()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn to_planar(&self) -> PlanarChannelParams {
        let mut u = vec![0.0; self.d + 1];
        u[self.d] = self.u;
        PlanarChannelParams { d: self.d, u, lambda: self.lambda }
    }
}

/// `u = v / (2 D)`.
pub fn normalize_drift(v: &[f64], d_coef: f64) -> Result<Vec<f64>> {
    if !(d_coef > 0.0) || !d_coef.is_finite() {
        return Err(FapError::param(format!("D_coef must be finite and > 0, got {d_coef}")));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(FapError::param("drift velocity must be finite"));
    }
    Ok(v.iter().map(|x| x / (2.0 * d_coef)).collect())
}

// ln(x^ν K_ν(x)) evaluated through the scaled Bessel function.
fn ln_xnu_k(order: BesselOrder, x: f64) -> Result<f64> {
    Ok(order.value() * x.ln() + bessel_k_scaled(order, x)?.ln() - x)
}

fn ln_cauchy_const(d: usize) -> f64 {
    let nu = (d as f64 + 1.0) / 2.0;
    gamma_half_integer(d as u32 + 1).ln() - nu * PI.ln()
}

/// Natural log of [`fap_pdf_plane`]; finite even where the density underflows.
pub fn fap_log_pdf_plane(n: &[f64], params: &PlanarChannelParams) -> Result<f64> {
    let d = params.d;
    check_point(n, d)?;
    let order = BesselOrder::for_receiver_dim(d)?;
    let nu = order.value();
    let lambda = params.lambda;
    let rho2 = n.iter().map(|x| x * x).sum::<f64>() + lambda * lambda;
    let ln_rho = 0.5 * rho2.ln();
    let rho = rho2.sqrt();
    let tilt: f64 = params.u_par().iter().zip(n).map(|(a, b)| a * b).sum::<f64>()
        - params.u_vertical() * lambda;
    let x = params.u_norm() * rho;
    if x < CAUCHY_SWITCH {
        return Ok(ln_cauchy_const(d) + lambda.ln() - 2.0 * nu * ln_rho + tilt);
    }
    Ok((2.0 * lambda).ln() - nu * (2.0 * PI).ln() + tilt + ln_xnu_k(order, x)? - 2.0 * nu * ln_rho)
}

/// FAP density on a planar receiver (μm^{-d}).
pub fn fap_pdf_plane(n: &[f64], params: &PlanarChannelParams) -> Result<f64> {
    Ok(fap_log_pdf_plane(n, params)?.exp())
}

/// Line receiver (`d = 1`) with vertical drift given in physical units.
pub fn fap_pdf_line_physical(xi: f64, x1: f64, v2: f64, d_coef: f64, lambda: f64) -> Result<f64> {
    let params = PlanarChannelParams::from_physical(1, &[0.0, v2], d_coef, lambda)?;
    fap_pdf_plane(&[xi - x1], &params)
}

/// Log-density of VDFAP at radius `r = ‖n‖`.
pub fn vdfap_log_pdf_radial(r: f64, params: &VdfapParams) -> Result<f64> {
    if !r.is_finite() || r < 0.0 {
        return Err(FapError::domain(format!("radius must be finite and >= 0, got {r}")));
    }
    let d = params.d;
    let order = BesselOrder::for_receiver_dim(d)?;
    let nu = order.value();
    let a = params.abs_u();
    let lambda = params.lambda;
    let rho = r.hypot(lambda);
    let x = a * rho;
    if x < CAUCHY_SWITCH {
        return Ok(ln_cauchy_const(d) + lambda.ln() - 2.0 * nu * rho.ln() + a * lambda);
    }
    let ks = bessel_k_scaled(order, x)?;
    Ok((2.0 * lambda).ln() + 2.0 * nu * (a.ln() - 0.5 * (2.0 * PI).ln()) + a * lambda + ks.ln()
        - x
        - nu * x.ln())
}

pub fn vdfap_pdf_radial(r: f64, params: &VdfapParams) -> Result<f64> {
    Ok(vdfap_log_pdf_radial(r, params)?.exp())
}

pub fn vdfap_log_pdf(n: &[f64], params: &VdfapParams) -> Result<f64> {
    check_point(n, params.d)?;
    let r = n.iter().map(|x| x * x).sum::<f64>().sqrt();
    vdfap_log_pdf_radial(r, params)
}

/// VDFAP density `2λ(|u|/√(2π))^{d+1} e^{λ|u|} K_ν(|u|ρ)/(|u|ρ)^ν`.
pub fn vdfap_pdf(n: &[f64], params: &VdfapParams) -> Result<f64> {
    Ok(vdfap_log_pdf(n, params)?.exp())
}

/// Centered multivariate Cauchy density with scale `λ`.
pub fn cauchy_pdf(n: &[f64], lambda: f64, d: usize) -> Result<f64> {
    check_dim(d)?;
    check_lambda(lambda)?;
    check_point(n, d)?;
    let rho2 = n.iter().map(|x| x * x).sum::<f64>() + lambda * lambda;
    let nu = (d as f64 + 1.0) / 2.0;
    Ok((ln_cauchy_const(d) + lambda.ln() - nu * rho2.ln()).exp())
}

/// Total mass of the FAP law: the probability that the molecule is ever absorbed.
pub fn absorption_mass(params: &PlanarChannelParams) -> f64 {
    (-2.0 * params.u_vertical().max(0.0) * params.lambda).exp()
}

/// Source at `(r, θ, φ)` outside an absorbing sphere of radius `R`, evaluated
/// at surface angles `(θ₀, φ₀)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphereQuery {
    pub radius: f64,
    pub r: f64,
    pub theta: f64,
    pub phi: f64,
    pub theta0: f64,
    pub phi0: f64,
}

impl SphereQuery {
    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0) || !self.radius.is_finite() {
            return Err(FapError::domain(format!("sphere radius must be > 0, got {}", self.radius)));
        }
        if !(self.r > self.radius) || !self.r.is_finite() {
            return Err(FapError::domain(format!(
                "source distance r = {} must exceed the sphere radius {}",
                self.r, self.radius
            )));
        }
        for (name, t) in [("theta", self.theta), ("theta0", self.theta0)] {
            if !(0.0..=PI).contains(&t) {
                return Err(FapError::domain(format!("{name} = {t} outside [0, pi]")));
            }
        }
        for (name, p) in [("phi", self.phi), ("phi0", self.phi0)] {
            if !(0.0..=2.0 * PI).contains(&p) {
                return Err(FapError::domain(format!("{name} = {p} outside [0, 2pi]")));
            }
        }
        Ok(())
    }

    /// Cosine of the angle between the source direction and the evaluation point.
    pub fn kappa(&self) -> f64 {
        self.theta.cos() * self.theta0.cos()
            + self.theta.sin() * self.theta0.sin() * (self.phi - self.phi0).cos()
    }
}

/// Angular hitting density on an absorbing sphere (per steradian).
///
/// The raw kernel has total mass `R/r`, the probability of ever hitting the
/// sphere. With `normalized` set the result is conditioned on hitting.
pub fn sphere_angular_density(q: &SphereQuery, normalized: bool) -> Result<f64> {
    q.validate()?;
    let (big_r, r) = (q.radius, q.r);
    let denom = r * r - 2.0 * r * big_r * q.kappa() + big_r * big_r;
    let kernel = big_r / (4.0 * PI) * (r * r - big_r * big_r) / denom.powf(1.5);
    Ok(if normalized { kernel * r / big_r } else { kernel })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::{E, FRAC_1_PI};

    #[test]
    fn peak_values() {
        let p = PlanarChannelParams::new(2, vec![0.0, 0.0, -1.0], 1.0).unwrap();
        assert_relative_eq!(fap_pdf_plane(&[0.0, 0.0], &p).unwrap(), FRAC_1_PI, max_relative = 1e-14);
        let p0 = PlanarChannelParams::new(2, vec![0.0; 3], 1.0).unwrap();
        assert_relative_eq!(fap_pdf_plane(&[0.0, 0.0], &p0).unwrap(), 0.5 * FRAC_1_PI, max_relative = 1e-14);
        let p1 = PlanarChannelParams::new(1, vec![0.0; 2], 1.0).unwrap();
        assert_relative_eq!(fap_pdf_plane(&[0.0], &p1).unwrap(), FRAC_1_PI, max_relative = 1e-14);
    }

    #[test]
    fn line_physical() {
        assert_relative_eq!(
            fap_pdf_line_physical(0.3, 0.3, 0.0, 420.0, 1.0).unwrap(),
            FRAC_1_PI,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            fap_pdf_line_physical(0.0, 0.0, -1680.0, 840.0, 1.0).unwrap(),
            E / PI * 0.601_907_230_197_234_6,
            max_relative = 1e-13
        );
        assert!(fap_pdf_line_physical(0.0, 0.0, 1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn vdfap_matches_planar() {
        let v = VdfapParams::new(-1.3, 0.7, 2).unwrap();
        let p = v.to_planar();
        for n in [[0.0, 0.0], [0.5, -1.0], [3.0, 4.0]] {
            assert_relative_eq!(
                vdfap_pdf(&n, &v).unwrap(),
                fap_pdf_plane(&n, &p).unwrap(),
                max_relative = 1e-13
            );
        }
        let v1 = VdfapParams::new(-1.0, 1.0, 1).unwrap();
        assert_relative_eq!(vdfap_pdf(&[0.0], &v1).unwrap(), 0.520_803_8, max_relative = 1e-7);
    }

    #[test]
    fn cauchy_values() {
        assert_relative_eq!(cauchy_pdf(&[0.0, 0.0], 1.0, 2).unwrap(), 0.5 * FRAC_1_PI, max_relative = 1e-14);
        assert_relative_eq!(cauchy_pdf(&[1.0], 1.0, 1).unwrap(), 0.5 * FRAC_1_PI, max_relative = 1e-14);
    }

    #[test]
    fn tiny_drift_approaches_cauchy() {
        let p = PlanarChannelParams::new(2, vec![0.0, 0.0, -1e-10], 1.5).unwrap();
        for n in [[0.0, 0.0], [2.0, -1.0], [10.0, 3.0]] {
            assert_relative_eq!(
                fap_pdf_plane(&n, &p).unwrap(),
                cauchy_pdf(&n, 1.5, 2).unwrap(),
                max_relative = 1e-6
            );
        }
    }

    #[test]
    fn switch_is_continuous() {
        // Just either side of the Cauchy switch the two branches must agree.
        let lambda = 1.0;
        for factor in [0.999, 1.001] {
            let p = PlanarChannelParams::new(1, vec![0.0, -CAUCHY_SWITCH * factor], lambda).unwrap();
            let v = fap_pdf_plane(&[0.0], &p).unwrap();
            assert_relative_eq!(v, FRAC_1_PI, max_relative = 1e-7);
        }
    }

    #[test]
    fn far_tail_underflows_gracefully() {
        let p = PlanarChannelParams::new(2, vec![0.0, 0.0, -5.0], 1.0).unwrap();
        let ln = fap_log_pdf_plane(&[300.0, 0.0], &p).unwrap();
        assert!(ln < -1400.0 && ln.is_finite());
        assert_eq!(fap_pdf_plane(&[300.0, 0.0], &p).unwrap(), 0.0);
    }

    #[test]
    fn parameter_errors() {
        assert!(matches!(PlanarChannelParams::new(2, vec![0.0; 3], 0.0), Err(FapError::Parameter(_))));
        assert!(matches!(
            PlanarChannelParams::new(2, vec![0.0; 2], 1.0),
            Err(FapError::Dimension { expected: 3, got: 2 })
        ));
        let p = PlanarChannelParams::new(2, vec![0.0; 3], 1.0).unwrap();
        assert!(matches!(fap_pdf_plane(&[f64::NAN, 0.0], &p), Err(FapError::Domain(_))));
        assert!(matches!(fap_pdf_plane(&[0.0], &p), Err(FapError::Dimension { .. })));
        assert!(VdfapParams::new(0.0, 1.0, 2).is_err());
        assert!(VdfapParams::new(1.0, 1.0, 2).is_err());
        assert!(PlanarChannelParams::new(MAX_DIM + 1, vec![0.0; MAX_DIM + 2], 1.0).is_err());
    }

    #[test]
    fn absorption_mass_cases() {
        let mass = |ud: f64, l: f64| {
            absorption_mass(&PlanarChannelParams::new(2, vec![0.0, 0.0, ud], l).unwrap())
        };
        assert_eq!(mass(-1.0, 1.0), 1.0);
        assert_eq!(mass(0.0, 1.0), 1.0);
        assert_relative_eq!(mass(1.0, 1.0), (-2.0f64).exp(), max_relative = 1e-15);
    }

    #[test]
    fn sphere_kernel_poles() {
        let q = SphereQuery { radius: 1.0, r: 2.0, theta: 0.0, phi: 0.0, theta0: 0.0, phi0: 0.0 };
        assert_relative_eq!(sphere_angular_density(&q, false).unwrap(), 3.0 / (4.0 * PI), max_relative = 1e-14);
        assert_relative_eq!(sphere_angular_density(&q, true).unwrap(), 6.0 / (4.0 * PI), max_relative = 1e-14);
        let south = SphereQuery { theta0: PI, ..q };
        assert_relative_eq!(sphere_angular_density(&south, false).unwrap(), 1.0 / (36.0 * PI), max_relative = 1e-12);
        let inside = SphereQuery { r: 0.5, ..q };
        assert!(sphere_angular_density(&inside, false).is_err());
    }
}
