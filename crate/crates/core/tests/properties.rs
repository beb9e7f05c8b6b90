use std::f64::consts::PI;

use fapchan::capacity::{
    capacity_sweep, lower_bound_2d, lower_bound_general, upper_bound_2d, upper_bound_general,
    CapacityQuery, SweepVar, Units,
};
use fapchan::channel::{
    cauchy_pdf, fap_pdf_line_physical, fap_pdf_plane, vdfap_pdf, PlanarChannelParams, VdfapParams,
};
use fapchan::entropy::{g, h0, h0_derivatives, vdfap_entropy_2d};
use fapchan::specfun::{bessel_k, expint_ei, BesselOrder};
use fapchan::spectral::{
    convolve_params, vdfap_cf, vdfap_cf_gradient, vdfap_cf_hessian, FreqPoint,
};
use proptest::prelude::*;

fn k(twice: u32, x: f64) -> f64 {
    bessel_k(BesselOrder::from_twice(twice).unwrap(), x).unwrap().value
}

fn k32_closed(x: f64) -> f64 {
    (PI / 2.0).sqrt() * (-x).exp() * (1.0 + x) / x.powf(1.5)
}

#[test]
fn k32_elementary_form_on_log_grid() {
    for i in 0..200 {
        let x = 10f64.powf(-4.0 + 6.0 * i as f64 / 199.0);
        let rel = (k(3, x) / k32_closed(x) - 1.0).abs();
        assert!(rel <= 1e-14, "x={x}: rel {rel}");
    }
}

#[test]
fn bessel_monotone_in_x() {
    for twice in 0..=21 {
        let mut prev = f64::INFINITY;
        for i in 0..300 {
            let x = 10f64.powf(-2.0 + 4.5 * i as f64 / 299.0);
            let v = k(twice, x);
            assert!(v < prev, "order {twice}/2 not decreasing at x={x}");
            prev = v;
        }
    }
}

proptest! {
    #[test]
    fn half_integer_recurrence(x in 0.01f64..50.0, step in 0u32..9) {
        let twice = 2 * step + 1;
        let lhs = k(twice + 2, x);
        let rhs = k(twice.saturating_sub(2).max(1), x) + (twice as f64 / x) * k(twice, x);
        // For twice = 1 the lower neighbour is K_{-1/2} = K_{1/2}.
        prop_assert!((lhs / rhs - 1.0).abs() < 1e-13);
    }

    #[test]
    fn ei_negative_and_monotone(a in -700.0f64..-1e-6, frac in 0.01f64..0.99) {
        // Ei'(x) = e^x/x < 0 on the negative axis.
        let b = a * frac;
        let (ea, eb) = (expint_ei(a).unwrap(), expint_ei(b).unwrap());
        prop_assert!(ea <= 0.0 && eb < 0.0);
        prop_assert!(ea > eb);
    }

    #[test]
    fn d2_matches_explicit_form(n1 in -20.0f64..20.0, n2 in -20.0f64..20.0,
                                up in prop::array::uniform2(-3.0f64..3.0), ud in -3.0f64..1.0,
                                lambda in 0.05f64..5.0) {
        let p = PlanarChannelParams::new(2, vec![up[0], up[1], ud], lambda).unwrap();
        let r = (n1 * n1 + n2 * n2 + lambda * lambda).sqrt();
        let un = p.u_norm();
        let explicit = lambda / (2.0 * PI) * (up[0] * n1 + up[1] * n2 - ud * lambda - un * r).exp()
            * (1.0 + un * r) / r.powi(3);
        let got = fap_pdf_plane(&[n1, n2], &p).unwrap();
        prop_assert!((got / explicit - 1.0).abs() < 1e-12, "{} vs {}", got, explicit);
    }

    #[test]
    fn line_physical_agrees_with_plane(xi in -10.0f64..10.0, v2 in -5000.0f64..5000.0,
                                       d_coef in 10.0f64..2000.0, lambda in 0.1f64..5.0) {
        let a = fap_pdf_line_physical(xi, 0.0, v2, d_coef, lambda).unwrap();
        let p = PlanarChannelParams::new(1, vec![0.0, v2 / (2.0 * d_coef)], lambda).unwrap();
        let b = fap_pdf_plane(&[xi], &p).unwrap();
        if b > 1e-300 {
            prop_assert!((a / b - 1.0).abs() < 1e-12);
        } else {
            prop_assert!(a <= 1e-300);
        }
    }

    #[test]
    fn vdfap_radially_symmetric(n in prop::array::uniform2(-10.0f64..10.0), u in -4.0f64..-0.01, l in 0.1f64..4.0) {
        let p = VdfapParams::new(u, l, 2).unwrap();
        let a = vdfap_pdf(&n, &p).unwrap();
        let b = vdfap_pdf(&[-n[0], -n[1]], &p).unwrap();
        let c = vdfap_pdf(&[n[1], -n[0]], &p).unwrap();
        prop_assert!(a > 0.0);
        prop_assert!((a - b).abs() <= 1e-15 * a && (a - c).abs() <= 1e-14 * a);
    }

    #[test]
    fn near_zero_drift_is_cauchy(n in prop::array::uniform2(-50.0f64..50.0), l in 0.1f64..5.0) {
        let p = PlanarChannelParams::new(2, vec![0.0, 0.0, -1e-10], l).unwrap();
        let a = fap_pdf_plane(&n, &p).unwrap();
        let b = cauchy_pdf(&n, l, 2).unwrap();
        prop_assert!((a / b - 1.0).abs() < 1e-6);
    }

    #[test]
    fn cf_in_unit_interval_and_decreasing(w in 0.0f64..20.0, dw in 0.001f64..5.0,
                                         u in -5.0f64..-0.01, l in 0.01f64..5.0) {
        let p = VdfapParams::new(u, l, 1).unwrap();
        let a = vdfap_cf(&FreqPoint::new(vec![w]).unwrap(), &p).unwrap();
        let b = vdfap_cf(&FreqPoint::new(vec![w + dw]).unwrap(), &p).unwrap();
        prop_assert!(a > 0.0 && a <= 1.0);
        prop_assert!(b < a || b == 0.0);
    }

    #[test]
    fn cf_product_law(w in prop::array::uniform2(-5.0f64..5.0), u in -3.0f64..-0.1,
                      l1 in 0.01f64..3.0, l2 in 0.01f64..3.0) {
        let a = VdfapParams::new(u, l1, 2).unwrap();
        let b = VdfapParams::new(u, l2, 2).unwrap();
        let c = convolve_params(&a, &b).unwrap();
        let fp = FreqPoint::new(w.to_vec()).unwrap();
        let lhs = vdfap_cf(&fp, &a).unwrap() * vdfap_cf(&fp, &b).unwrap();
        let rhs = vdfap_cf(&fp, &c).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-14);
    }

    #[test]
    fn convolution_commutes_and_associates(u in -3.0f64..-0.1, l in prop::array::uniform3(0.01f64..3.0)) {
        let p: Vec<_> = l.iter().map(|&x| VdfapParams::new(u, x, 2).unwrap()).collect();
        let ab = convolve_params(&p[0], &p[1]).unwrap();
        let ba = convolve_params(&p[1], &p[0]).unwrap();
        prop_assert_eq!(ab, ba);
        let left = convolve_params(&ab, &p[2]).unwrap();
        let right = convolve_params(&p[0], &convolve_params(&p[1], &p[2]).unwrap()).unwrap();
        prop_assert!((left.lambda() - right.lambda()).abs() < 1e-15 * left.lambda());
    }

    #[test]
    fn gradient_and_hessian_match_differences(w in prop::array::uniform2(-3.0f64..3.0),
                                             u in -3.0f64..-0.2, l in 0.1f64..3.0) {
        let p = VdfapParams::new(u, l, 2).unwrap();
        let h = 1e-5;
        let cf = |x: [f64; 2]| vdfap_cf(&FreqPoint::new(x.to_vec()).unwrap(), &p).unwrap();
        let grad = vdfap_cf_gradient(&FreqPoint::new(w.to_vec()).unwrap(), &p).unwrap();
        let hess = vdfap_cf_hessian(&FreqPoint::new(w.to_vec()).unwrap(), &p).unwrap();
        for i in 0..2 {
            let mut a = w; a[i] += h;
            let mut b = w; b[i] -= h;
            prop_assert!(((cf(a) - cf(b)) / (2.0 * h) - grad[i]).abs() < 1e-6);
            prop_assert_eq!(hess[i][1 - i], hess[1 - i][i]);
        }
        let hh = 1e-4;
        for i in 0..2 {
            for j in 0..2 {
                let mut pp = w; pp[i] += hh; pp[j] += hh;
                let mut pm = w; pm[i] += hh; pm[j] -= hh;
                let mut mp = w; mp[i] -= hh; mp[j] += hh;
                let mut mm = w; mm[i] -= hh; mm[j] -= hh;
                let fd = (cf(pp) - cf(pm) - cf(mp) + cf(mm)) / (4.0 * hh * hh);
                prop_assert!((fd - hess[i][j]).abs() < 1e-5, "{} vs {}", fd, hess[i][j]);
            }
        }
    }

    #[test]
    fn entropy_identity(u in -10.0f64..-0.01, l in 0.01f64..10.0) {
        let h = vdfap_entropy_2d(u, l).unwrap();
        let s = u.abs() * l;
        let rhs = h0(s).unwrap() + (2.0 * PI).ln() + 3.0 - 2.0 * u.abs().ln();
        prop_assert!((h - rhs).abs() < 1e-12);
    }

    #[test]
    fn entropy_function_inequalities(s in 1e-3f64..1e3) {
        let gs = g(s).unwrap();
        let mid = (2.0 * s + 3.0) / (s + 2.0);
        prop_assert!(gs < mid && mid < 2.0);
        prop_assert!(h0_derivatives(s).unwrap().h0_prime > 0.0);
    }

    #[test]
    fn bounds_are_ordered(u in -10.0f64..-0.05, l in 0.05f64..10.0, p in 0.01f64..50.0) {
        let q = CapacityQuery::new(2, u, l, p).unwrap();
        let lo = lower_bound_2d(&q).unwrap();
        let hi = upper_bound_2d(&q).unwrap();
        prop_assert!(lo > 0.0 && lo <= hi, "lower {} upper {}", lo, hi);
        prop_assert!((lower_bound_general(&q).unwrap() - lo).abs() < 1e-12 * lo.abs().max(1.0));
        prop_assert!((upper_bound_general(&q).unwrap() - hi).abs() < 1e-12 * hi.abs().max(1.0));
    }
}

#[test]
fn entropy_monotone_in_parameters() {
    let mut prev = f64::NEG_INFINITY;
    for i in 1..50 {
        let h = vdfap_entropy_2d(-1.0, 0.2 * i as f64).unwrap();
        assert!(h > prev);
        prev = h;
    }
    let mut prev = f64::INFINITY;
    for i in 1..50 {
        let h = vdfap_entropy_2d(-0.2 * i as f64, 1.0).unwrap();
        assert!(h < prev);
        prev = h;
    }
}

#[test]
fn upper_bound_trends() {
    let at = |u: f64, l: f64, p: f64| upper_bound_2d(&CapacityQuery::new(2, u, l, p).unwrap()).unwrap();
    for i in 0..20 {
        let l = 0.5 + 0.05 * i as f64;
        assert!(at(-1.0, l + 0.05, 1.0) < at(-1.0, l, 1.0));
        let p = 0.5 + 0.05 * i as f64;
        assert!(at(-1.0, 1.0, p + 0.05) > at(-1.0, 1.0, p));
    }
}

#[test]
fn upper_bound_grows_logarithmically_in_power() {
    let at = |p: f64| upper_bound_general(&CapacityQuery::new(2, -1.0, 1.0, p).unwrap()).unwrap();
    // Each factor of 10 in P adds ln 10 once P dominates.
    let step = at(1e8) - at(1e7);
    assert!((step - 10f64.ln()).abs() < 1e-6, "{step}");
}

#[test]
fn sweep_gaps_shrink_past_crossover() {
    let fixed = CapacityQuery::new(2, -1.0, 1.0, 1.0).unwrap();
    for (var, lo, hi, from) in [(SweepVar::P, 0.0, 10.0, 2.0), (SweepVar::Lambda, 0.0, 10.0, 2.0), (SweepVar::U, 0.5, 10.0, 0.5)] {
        let rows = capacity_sweep(var, lo, hi, 60, &fixed, Units::Bits).unwrap();
        let gaps: Vec<f64> = rows.iter().filter(|r| r.x >= from).map(|r| r.gap().unwrap()).collect();
        assert!(gaps.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{var:?}: {gaps:?}");
    }
}
