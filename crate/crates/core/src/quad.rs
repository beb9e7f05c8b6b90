//! Globally adaptive 15-point Gauss–Kronrod quadrature.
//!
//! The interval with the largest error estimate is bisected until the summed
//! error estimate meets `max(abs_tol, rel_tol·|I|)`. Error rescaling follows
//! QUADPACK's `qk15`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{FapError, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            max_intervals: 2000,
        }
    }
}

impl QuadOptions {
    pub fn with_tol(abs_tol: f64, rel_tol: f64) -> Self {
        QuadOptions {
            abs_tol,
            rel_tol,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error: f64,
    pub intervals: usize,
    /// False when `max_intervals` was exhausted before the tolerance was met.
    pub converged: bool,
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn qk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_g = fc * WG[3];
    let mut res_k = fc * WGK[7];
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let x = half * XGK[j];
        let f1 = f(center - x);
        let f2 = f(center + x);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let result = res_k * half;
    let res_abs = res_abs * half.abs();
    let res_asc = res_asc * half.abs();
    let mut err = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    (result, err)
}

/// Integrate `f` over `[a, b]`.
pub fn integrate<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, opts: QuadOptions) -> Result<QuadResult> {
    integrate_with_breaks(f, &[a, b], opts)
}

/// Integrate over `[points[0], points[last]]`, seeding the adaptive partition
/// with the supplied breakpoints (which must be increasing).
pub fn integrate_with_breaks<F: FnMut(f64) -> f64>(
    mut f: F,
    points: &[f64],
    opts: QuadOptions,
) -> Result<QuadResult> {
    if points.len() < 2 {
        return Err(FapError::domain("quadrature needs at least two points"));
    }
    if points.iter().any(|p| !p.is_finite()) || points.windows(2).any(|w| w[1] < w[0]) {
        return Err(FapError::domain("quadrature breakpoints must be finite and increasing"));
    }
    let mut heap = BinaryHeap::new();
    for w in points.windows(2) {
        if w[1] > w[0] {
            let (value, error) = qk15(&mut f, w[0], w[1]);
            heap.push(Segment { a: w[0], b: w[1], value, error });
        }
    }
    let totals = |heap: &BinaryHeap<Segment>| {
        heap.iter()
            .fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.error))
    };
    loop {
        let (value, error) = totals(&heap);
        if !value.is_finite() || !error.is_finite() {
            return Err(FapError::Numerical("non-finite integrand value".into()));
        }
        let target = opts.abs_tol.max(opts.rel_tol * value.abs());
        if error <= target || heap.len() >= opts.max_intervals {
            return Ok(QuadResult {
                value,
                abs_error: error,
                intervals: heap.len(),
                converged: error <= target,
            });
        }
        let worst = heap.pop().expect("heap is non-empty while error exceeds target");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval can no longer be split in floating point.
            heap.push(worst);
            let (value, error) = totals(&heap);
            return Ok(QuadResult {
                value,
                abs_error: error,
                intervals: heap.len(),
                converged: false,
            });
        }
        let (v1, e1) = qk15(&mut f, worst.a, mid);
        let (v2, e2) = qk15(&mut f, mid, worst.b);
        heap.push(Segment { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Segment { a: mid, b: worst.b, value: v2, error: e2 });
    }
}

/// Integrate `f` over `[a, ∞)` via `x = a + scale·t/(1-t)`.
///
/// `scale` should be of the order of the integrand's decay length.
pub fn integrate_semi_infinite<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    scale: f64,
    opts: QuadOptions,
) -> Result<QuadResult> {
    if !(scale > 0.0) {
        return Err(FapError::domain("semi-infinite map needs scale > 0"));
    }
    let g = |t: f64| {
        let one_minus = 1.0 - t;
        let x = a + scale * t / one_minus;
        let v = f(x);
        if v == 0.0 {
            0.0
        } else {
            v * scale / (one_minus * one_minus)
        }
    };
    integrate_with_breaks(g, &[0.0, 0.5, 0.75, 0.875, 1.0], opts)
}
