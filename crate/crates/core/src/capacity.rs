//! Bounds on the capacity of the additive VDFAP noise channel
//! `Y = X + N` under the input constraint `E‖X‖² ≤ P`.
//!
//! The lower bound feeds a VDFAP-distributed input, which keeps the output in
//! the VDFAP family by weak stability. The upper bound replaces the output
//! entropy by that of a Gaussian with the same second moment
//! `Q = P + λd/|u|`. All values are computed in nats.

use std::f64::consts::{LOG2_E, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::VdfapParams;
use crate::entropy::{g, h0, vdfap_entropy};
use crate::error::{FapError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    Nats,
    Bits,
}

impl Units {
    pub fn from_nats(self, nats: f64) -> f64 {
        match self {
            Units::Nats => nats,
            Units::Bits => nats * LOG2_E,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacityQuery {
    d: usize,
    u: f64,
    lambda: f64,
    p: f64,
}

impl CapacityQuery {
    pub fn new(d: usize, u: f64, lambda: f64, p: f64) -> Result<Self> {
        VdfapParams::new(u, lambda, d)?;
        if !(p > 0.0) || !p.is_finite() {
            return Err(FapError::param(format!("power budget P must be finite and > 0, got {p}")));
        }
        Ok(CapacityQuery { d, u, lambda, p })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn u(&self) -> f64 {
        self.u
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn power(&self) -> f64 {
        self.p
    }

    pub fn noise(&self) -> VdfapParams {
        VdfapParams::new(self.u, self.lambda, self.d).expect("validated at construction")
    }

    /// Output second moment `P + λd/|u|`.
    pub fn output_power(&self) -> f64 {
        self.p + self.lambda * self.d as f64 / self.u.abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacityResult {
    pub lower: f64,
    pub upper: f64,
    pub units: Units,
}

fn require_2d(q: &CapacityQuery) -> Result<()> {
    if q.d != 2 {
        return Err(FapError::Dimension { expected: 2, got: q.d });
    }
    Ok(())
}

/// `h0(|u|(λ + |u|P/2)) − h0(|u|λ)`.
pub fn lower_bound_2d(q: &CapacityQuery) -> Result<f64> {
    require_2d(q)?;
    let a = q.u.abs();
    Ok(h0(a * (q.lambda + a * q.p / 2.0))? - h0(a * q.lambda)?)
}

/// `ln(P/(2λ²) + 1/(λ|u|)) + ln(1+λ|u|) − 2 + g(λ|u|)`.
pub fn upper_bound_2d(q: &CapacityQuery) -> Result<f64> {
    require_2d(q)?;
    let s = q.u.abs() * q.lambda;
    Ok((q.p / (2.0 * q.lambda * q.lambda) + 1.0 / s).ln() + s.ln_1p() - 2.0 + g(s)?)
}

/// `sup_{0 < λ' ≤ |u|P/d} h(VDFAP(u, λ+λ')) − h(VDFAP(u, λ))`.
///
/// For `d = 2` the entropy is increasing in `λ'` and the supremum sits at the
/// right end. For `d = 1` a golden-section search is run on quadrature
/// entropies and compared with the endpoint.
pub fn lower_bound_general(q: &CapacityQuery) -> Result<f64> {
    let noise = q.noise();
    let h_noise = vdfap_entropy(&noise)?;
    let hi = q.u.abs() * q.p / q.d as f64;
    let gain = |lp: f64| -> Result<f64> {
        Ok(vdfap_entropy(&VdfapParams::new(q.u, q.lambda + lp, q.d)?)? - h_noise)
    };
    match q.d {
        2 => gain(hi),
        1 => {
            let (_, best) = golden_section_max(&gain, 0.0, hi, 1e-6)?;
            Ok(best.max(gain(hi)?))
        }
        d => Err(FapError::Unsupported(format!("no capacity bound for d = {d}"))),
    }
}

/// `(d/2) ln(2πe(P/d + λ/|u|)) − h(VDFAP(u, λ))`.
pub fn upper_bound_general(q: &CapacityQuery) -> Result<f64> {
    if q.d > 2 {
        return Err(FapError::Unsupported(format!("no capacity bound for d = {}", q.d)));
    }
    let d = q.d as f64;
    let h = vdfap_entropy(&q.noise())?;
    Ok(d / 2.0 * (2.0 * PI * std::f64::consts::E * q.output_power() / d).ln() - h)
}

/// Both bounds in the requested units (closed forms when `d = 2`).
pub fn capacity_bounds(q: &CapacityQuery, units: Units) -> Result<CapacityResult> {
    let (lower, upper) = if q.d == 2 {
        (lower_bound_2d(q)?, upper_bound_2d(q)?)
    } else {
        (lower_bound_general(q)?, upper_bound_general(q)?)
    };
    Ok(CapacityResult {
        lower: units.from_nats(lower),
        upper: units.from_nats(upper),
        units,
    })
}

// Maximize a unimodal function on [lo, hi] to relative tolerance `rel_tol`
// on the abscissa.
fn golden_section_max<F>(f: &F, lo: f64, hi: f64, rel_tol: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64>,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while (b - a) > rel_tol * hi.abs().max(f64::MIN_POSITIVE) {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc > fd { (c, fc) } else { (d, fd) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepVar {
    P,
    Lambda,
    /// Sweeps the drift magnitude `|u|`; the drift itself is `−x`.
    U,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub x: f64,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub error: Option<String>,
}

impl SweepRow {
    pub fn gap(&self) -> Option<f64> {
        Some(self.upper? - self.lower?)
    }
}

/// Abscissae of a sweep. When `lo` is zero (the singular end of every swept
/// parameter) the grid starts half a step in, so that `hi` is still included.
pub fn sweep_points(lo: f64, hi: f64, steps: usize) -> Result<Vec<f64>> {
    if steps < 2 {
        return Err(FapError::param("a sweep needs at least 2 steps"));
    }
    if !(lo.is_finite() && hi.is_finite() && hi > lo) {
        return Err(FapError::param(format!("invalid sweep range [{lo}, {hi}]")));
    }
    let n = steps as f64;
    Ok(if lo == 0.0 {
        let h = (hi - lo) / (n - 0.5);
        (0..steps).map(|i| lo + h * (i as f64 + 0.5)).collect()
    } else {
        let h = (hi - lo) / (n - 1.0);
        (0..steps).map(|i| if i + 1 == steps { hi } else { lo + h * i as f64 }).collect()
    })
}

/// One-parameter sweep of both bounds. Rows that fail are flagged and the
/// sweep continues.
pub fn capacity_sweep(
    vary: SweepVar,
    lo: f64,
    hi: f64,
    steps: usize,
    fixed: &CapacityQuery,
    units: Units,
) -> Result<Vec<SweepRow>> {
    let xs = sweep_points(lo, hi, steps)?;
    Ok(xs
        .par_iter()
        .map(|&x| {
            let q = match vary {
                SweepVar::P => CapacityQuery::new(fixed.d, fixed.u, fixed.lambda, x),
                SweepVar::Lambda => CapacityQuery::new(fixed.d, fixed.u, x, fixed.p),
                SweepVar::U => CapacityQuery::new(fixed.d, -x, fixed.lambda, fixed.p),
            };
            match q.and_then(|q| capacity_bounds(&q, units)) {
                Ok(r) => SweepRow { x, lower: Some(r.lower), upper: Some(r.upper), error: None },
                Err(e) => SweepRow { x, lower: None, upper: None, error: Some(e.to_string()) },
            }
        })
        .collect())
}
