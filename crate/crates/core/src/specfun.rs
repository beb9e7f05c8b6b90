//! Special-function kernel: modified Bessel functions of the second kind for
//! integer and half-integer order, and the exponential integral on the
//! negative real axis.
//!
//! Half-integer orders are built from the elementary form
//! `K_{1/2}(x) = sqrt(π/(2x)) e^{-x}` and the upward recurrence
//! `K_{ν+1}(x) = K_{ν-1}(x) + (2ν/x) K_ν(x)` (with `K_{-1/2} = K_{1/2}`).
//! Integer orders start from `K_0` and `K_1`, which are evaluated by the
//! ascending series for `x ≤ 2`, by the trapezoidal rule applied to
//! `K_ν(x) = ∫_0^∞ e^{-x cosh t} cosh(νt) dt` for `2 < x < 25`, and by the
//! Hankel asymptotic expansion beyond that.
//!
//! Everything is computed in exponentially scaled form `e^x K_ν(x)` first so
//! callers working in log space never see spurious underflow.

use std::f64::consts::PI;

use crate::error::{FapError, Result};

/// Euler–Mascheroni constant γ.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Highest supported `2ν`. Covers `K_{(d+1)/2}` for receiver dimensions `d ≤ 20`.
pub const MAX_TWICE_ORDER: u32 = 21;

const SERIES_LIMIT: f64 = 2.0;
const ASYMPTOTIC_LIMIT: f64 = 25.0;

/// Order of a modified Bessel function stored as twice its value, so that
/// `0, 1/2, 1, 3/2, …` are all exactly representable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BesselOrder(u32);

impl BesselOrder {
    pub fn from_twice(twice_order: u32) -> Result<Self> {
        if twice_order > MAX_TWICE_ORDER {
            return Err(FapError::Unsupported(format!(
                "Bessel order {}/2 exceeds the supported maximum {}/2",
                twice_order, MAX_TWICE_ORDER
            )));
        }
        Ok(BesselOrder(twice_order))
    }

    /// The order `(d+1)/2` appearing in the `d`-dimensional planar FAP density.
    pub fn for_receiver_dim(d: usize) -> Result<Self> {
        let twice = u32::try_from(d + 1).map_err(|_| FapError::Unsupported(format!("d = {d}")))?;
        Self::from_twice(twice)
    }

    pub fn twice(self) -> u32 {
        self.0
    }

    pub fn value(self) -> f64 {
        f64::from(self.0) / 2.0
    }

    pub fn is_half_integer(self) -> bool {
        self.0 % 2 == 1
    }
}

/// Value of `K_ν(x)` together with an underflow flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KValue {
    pub value: f64,
    /// Set when the true value is positive but below the smallest normal `f64`.
    pub underflow: bool,
}

/// `K_ν(x)` for `x > 0`.
///
/// Relative accuracy is at the level of a few ulps for half-integer orders and
/// better than `1e-13` for integer orders on `[1e-8, 700]`. When `K_ν(x)`
/// underflows (roughly `x > 700`) the value is returned as zero with
/// `underflow` set rather than as an error.
pub fn bessel_k(order: BesselOrder, x: f64) -> Result<KValue> {
    let scaled = bessel_k_scaled(order, x)?;
    let value = scaled * (-x).exp();
    Ok(KValue {
        value,
        underflow: value < f64::MIN_POSITIVE,
    })
}

/// Exponentially scaled Bessel function `e^x K_ν(x)`.
pub fn bessel_k_scaled(order: BesselOrder, x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(FapError::domain(format!("K_nu(x) requires finite x > 0, got {x}")));
    }
    let (mut prev, mut cur, mut nu) = if order.is_half_integer() {
        let k_half = (PI / (2.0 * x)).sqrt();
        // K_{-1/2} = K_{1/2}
        (k_half, k_half, 0.5)
    } else {
        if order.twice() == 0 {
            return Ok(k0_scaled(x));
        }
        (k0_scaled(x), k1_scaled(x), 1.0)
    };
    let target = order.value();
    while nu < target {
        let next = prev + (2.0 * nu / x) * cur;
        prev = cur;
        cur = next;
        nu += 1.0;
    }
    Ok(cur)
}

/// `ln K_ν(x)`; finite even where `K_ν(x)` itself underflows.
pub fn ln_bessel_k(order: BesselOrder, x: f64) -> Result<f64> {
    Ok(bessel_k_scaled(order, x)?.ln() - x)
}

fn k0_scaled(x: f64) -> f64 {
    if x <= SERIES_LIMIT {
        k0_series(x) * x.exp()
    } else if x < ASYMPTOTIC_LIMIT {
        k_integral_scaled(0.0, x)
    } else {
        k_asymptotic_scaled(0.0, x)
    }
}

fn k1_scaled(x: f64) -> f64 {
    if x <= SERIES_LIMIT {
        k1_series(x) * x.exp()
    } else if x < ASYMPTOTIC_LIMIT {
        k_integral_scaled(1.0, x)
    } else {
        k_asymptotic_scaled(1.0, x)
    }
}

// K_0(x) = -(ln(x/2) + γ) I_0(x) + Σ_{k≥1} (x²/4)^k / (k!)² H_k
fn k0_series(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let log_term = (0.5 * x).ln() + EULER_GAMMA;
    let mut term = 1.0; // (x²/4)^k / (k!)²
    let mut harmonic = 0.0;
    let mut i0 = 1.0;
    let mut tail = 0.0;
    for k in 1..=25 {
        let kf = f64::from(k);
        term *= q / (kf * kf);
        harmonic += 1.0 / kf;
        i0 += term;
        tail += term * harmonic;
        if term < 1e-18 * i0 {
            break;
        }
    }
    -log_term * i0 + tail
}

// K_1(x) = 1/x + (x/2) Σ_{k≥0} t_k [ln(x/2) - (ψ(k+1) + ψ(k+2))/2],
// t_k = (x²/4)^k / (k! (k+1)!), ψ(k+1) = -γ + H_k.
fn k1_series(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let log_half = (0.5 * x).ln();
    let mut term = 1.0;
    let mut h_k = 0.0;
    let mut h_k1 = 1.0;
    let mut sum = term * (log_half - 0.5 * (h_k + h_k1 - 2.0 * EULER_GAMMA));
    for k in 1..=25 {
        let kf = f64::from(k);
        term *= q / (kf * (kf + 1.0));
        h_k += 1.0 / kf;
        h_k1 += 1.0 / (kf + 1.0);
        let contrib = term * (log_half - 0.5 * (h_k + h_k1 - 2.0 * EULER_GAMMA));
        sum += contrib;
        if term < 1e-18 {
            break;
        }
    }
    1.0 / x + 0.5 * x * sum
}

// e^x K_ν(x) = ∫_0^∞ exp(-x (cosh t - 1)) cosh(νt) dt. The integrand is entire
// and decays double-exponentially, so the trapezoidal rule converges
// geometrically in 1/h.
fn k_integral_scaled(nu: f64, x: f64) -> f64 {
    let h = (0.5 / x.sqrt()).min(0.1);
    let mut sum = 0.5;
    let mut k = 1.0;
    loop {
        let t = k * h;
        let term = (-x * (t.cosh() - 1.0)).exp() * (nu * t).cosh();
        sum += term;
        if term < 1e-18 * sum {
            break;
        }
        k += 1.0;
    }
    sum * h
}

// e^x K_ν(x) ~ sqrt(π/(2x)) Σ_k a_k(ν) / x^k
fn k_asymptotic_scaled(nu: f64, x: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..60 {
        let kf = f64::from(k);
        let odd = 2.0 * kf - 1.0;
        let next = term * (mu - odd * odd) / (8.0 * kf * x);
        if next.abs() >= term.abs() {
            break;
        }
        term = next;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    (PI / (2.0 * x)).sqrt() * sum
}

/// Exponential integral `Ei(x) = -∫_{-x}^∞ e^{-t}/t dt` for `x < 0`.
///
/// Uses the convergent series `γ + ln|x| + Σ x^k/(k·k!)` for `|x| ≤ 1` and a
/// continued fraction for `E_1(-x) = -Ei(x)` beyond.
pub fn expint_ei(x: f64) -> Result<f64> {
    if !(x < 0.0) || !x.is_finite() {
        return Err(FapError::domain(format!(
            "Ei(x) is only provided for finite x < 0, got {x}"
        )));
    }
    let t = -x;
    if t <= 1.0 {
        Ok(ei_series(x))
    } else {
        Ok(-e1_continued_fraction_scaled(t) * x.exp())
    }
}

/// Scaled exponential integral `e^t E_1(t) = -e^t Ei(-t)` for `t > 0`.
///
/// Finite and smooth for all `t > 0` (it tends to `1/t` as `t → ∞`), which is
/// what the entropy formulas actually need.
pub fn expint_e1_scaled(t: f64) -> Result<f64> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(FapError::domain(format!("E1(t) requires finite t > 0, got {t}")));
    }
    if t <= 1.0 {
        Ok(-ei_series(-t) * t.exp())
    } else {
        Ok(e1_continued_fraction_scaled(t))
    }
}

fn ei_series(x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 0.0;
    for k in 1..60 {
        let kf = f64::from(k);
        term *= x / kf;
        let contrib = term / kf;
        sum += contrib;
        if contrib.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    EULER_GAMMA + (-x).ln() + sum
}

// Modified Lentz evaluation of e^t E_1(t) = 1/(t+1- 1/(t+3- 4/(t+5- ...))).
fn e1_continued_fraction_scaled(t: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = t + 1.0;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..1000 {
        let fi = f64::from(i);
        let an = -fi * fi;
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h
}

/// `Γ(n/2)` for a positive integer `n`, exact up to rounding.
pub fn gamma_half_integer(twice: u32) -> f64 {
    assert!(twice > 0, "Gamma(0) is undefined");
    let (mut value, mut arg) = if twice.is_multiple_of(2) {
        (1.0, 1.0)
    } else {
        (PI.sqrt(), 0.5)
    };
    let target = f64::from(twice) / 2.0;
    while arg < target {
        value *= arg;
        arg += 1.0;
    }
    value
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn k(twice: u32, x: f64) -> f64 {
        bessel_k(BesselOrder::from_twice(twice).unwrap(), x).unwrap().value
    }

    #[test]
    fn half_integer_values() {
        assert_relative_eq!(k(3, 1.0), 0.922_137_008_895_789_5, max_relative = 1e-14);
        assert_relative_eq!(
            k(1, 2.0),
            PI.sqrt() / 2.0 * (-2.0f64).exp(),
            max_relative = 1e-14
        );
        assert_relative_eq!(k(5, 1.0), k(1, 1.0) + 3.0 * k(3, 1.0), max_relative = 1e-14);
        assert_relative_eq!(k(5, 1.0), 3.227_479_531_135_262, max_relative = 1e-12);
    }

    #[test]
    fn integer_reference_values() {
        // Abramowitz & Stegun table 9.8
        assert_relative_eq!(k(0, 1.0), 0.421_024_438_240_708_3, max_relative = 1e-14);
        assert_relative_eq!(k(2, 1.0), 0.601_907_230_197_234_6, max_relative = 1e-14);
        assert_relative_eq!(k(0, 0.1), 2.427_069_024_702_017, max_relative = 1e-13);
        assert_relative_eq!(k(2, 5.0), 4.044_613_445_452_164e-3, max_relative = 1e-13);
        assert_relative_eq!(k(0, 10.0), 1.778_006_231_616_918_4e-5, max_relative = 1e-13);
        assert_relative_eq!(k(2, 50.0), 3.444_102_226_717_556e-23, max_relative = 1e-12);
    }

    #[test]
    fn integer_branches_agree_with_integral_form() {
        // The trapezoidal integral holds for every x > 0; use it to check the
        // series and asymptotic branches away from their switch points.
        for &x in &[0.3, 1.0, 1.9, 2.0, 30.0, 80.0, 400.0] {
            for &nu in &[0.0, 1.0] {
                let direct = if nu == 0.0 { k0_scaled(x) } else { k1_scaled(x) };
                assert_relative_eq!(direct, k_integral_scaled(nu, x), max_relative = 2e-14);
            }
        }
    }

    #[test]
    fn integral_form_reproduces_half_integer_closed_form() {
        for &x in &[2.5, 7.0, 24.0] {
            let closed = (PI / (2.0 * x)).sqrt();
            assert_relative_eq!(k_integral_scaled(0.5, x), closed, max_relative = 1e-14);
        }
    }

    #[test]
    fn small_argument_limit() {
        let x = 1e-8;
        assert_relative_eq!(x * k(2, x), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn underflow_is_flagged_not_raised() {
        let v = bessel_k(BesselOrder::from_twice(3).unwrap(), 800.0).unwrap();
        assert_eq!(v.value, 0.0);
        assert!(v.underflow);
        let ln = ln_bessel_k(BesselOrder::from_twice(3).unwrap(), 800.0).unwrap();
        assert!(ln.is_finite() && ln < -800.0);
        assert!(!bessel_k(BesselOrder::from_twice(3).unwrap(), 1.0).unwrap().underflow);
    }

    #[test]
    fn bad_arguments() {
        let o = BesselOrder::from_twice(2).unwrap();
        assert!(bessel_k(o, 0.0).is_err());
        assert!(bessel_k(o, -1.0).is_err());
        assert!(bessel_k(o, f64::NAN).is_err());
        assert!(BesselOrder::from_twice(MAX_TWICE_ORDER + 1).is_err());
        assert!(expint_ei(0.0).is_err());
        assert!(expint_ei(1.0).is_err());
        assert!(expint_e1_scaled(0.0).is_err());
    }

    #[test]
    fn ei_reference_values() {
        assert_relative_eq!(expint_ei(-1.0).unwrap(), -0.219_383_934_395_520_27, max_relative = 1e-14);
        assert_relative_eq!(expint_ei(-2.0).unwrap(), -0.048_900_510_708_061_12, max_relative = 1e-13);
        assert_relative_eq!(expint_ei(-0.5).unwrap(), -0.559_773_594_776_160_8, max_relative = 1e-14);
        assert_relative_eq!(expint_ei(-10.0).unwrap(), -4.156_968_929_685_324e-6, max_relative = 1e-13);
        assert!(expint_ei(-800.0).unwrap() <= 0.0);
        assert!(expint_ei(-800.0).unwrap() > -1e-300);
    }

    #[test]
    fn ei_branches_meet() {
        let below = ei_series(-1.0);
        let above = -e1_continued_fraction_scaled(1.0) * (-1.0f64).exp();
        assert_relative_eq!(below, above, max_relative = 1e-14);
    }

    #[test]
    fn e1_scaled_large_argument() {
        // e^t E1(t) ~ 1/t (1 - 1/t + 2/t² - ...)
        let t = 1e4;
        let asym = (1.0 - 1.0 / t + 2.0 / (t * t)) / t;
        assert_relative_eq!(expint_e1_scaled(t).unwrap(), asym, max_relative = 1e-11);
    }

    #[test]
    fn e1_scaled_derivative_identity() {
        // d/dx[e^x E1(x)] = e^x E1(x) - 1/x
        for &x in &[0.5, 1.0, 3.0] {
            let h = 1e-5;
            let fd = (expint_e1_scaled(x + h).unwrap() - expint_e1_scaled(x - h).unwrap()) / (2.0 * h);
            let analytic = expint_e1_scaled(x).unwrap() - 1.0 / x;
            assert!((fd - analytic).abs() < 1e-6, "x={x}: {fd} vs {analytic}");
        }
    }

    #[test]
    fn gamma_at_half_integers() {
        assert_relative_eq!(gamma_half_integer(1), PI.sqrt(), max_relative = 1e-15);
        assert_relative_eq!(gamma_half_integer(2), 1.0);
        assert_relative_eq!(gamma_half_integer(3), PI.sqrt() / 2.0, max_relative = 1e-15);
        assert_relative_eq!(gamma_half_integer(10), 24.0);
    }
}
