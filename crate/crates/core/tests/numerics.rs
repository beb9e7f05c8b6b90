//! Quadrature cross-checks of the closed forms.

use std::f64::consts::PI;

use fapchan::channel::{
    absorption_mass, fap_pdf_plane, sphere_angular_density, vdfap_pdf, vdfap_pdf_radial,
    PlanarChannelParams, SphereQuery, VdfapParams,
};
use fapchan::entropy::{entropy_quadrature, entropy_tail_integral, entropy_tail_quadrature, vdfap_entropy_2d};
use fapchan::quad::{integrate, integrate_semi_infinite, QuadOptions};
use fapchan::spectral::{vdfap_cf, vdfap_moments, FreqPoint};

fn opts() -> QuadOptions {
    QuadOptions::with_tol(1e-11, 1e-10)
}

fn mass_1d(p: &PlanarChannelParams) -> f64 {
    let l = p.lambda();
    let f = |x: f64| fap_pdf_plane(&[x], p).unwrap();
    let right = integrate_semi_infinite(f, 0.0, l, opts()).unwrap().value;
    let left = integrate_semi_infinite(|x| f(-x), 0.0, l, opts()).unwrap().value;
    left + right
}

fn mass_2d(p: &PlanarChannelParams) -> f64 {
    let ring = |r: f64| {
        r * integrate(|t| fap_pdf_plane(&[r * t.cos(), r * t.sin()], p).unwrap(), 0.0, 2.0 * PI, opts())
            .unwrap()
            .value
    };
    integrate_semi_infinite(ring, 0.0, p.lambda(), opts()).unwrap().value
}

#[test]
fn normalization_small_grid() {
    for (u, l) in [(vec![0.0, -1.0], 1.0), (vec![0.3, -0.4], 0.25), (vec![0.0, 1.0], 1.0)] {
        let p = PlanarChannelParams::new(1, u, l).unwrap();
        let m = mass_1d(&p);
        assert!((m - absorption_mass(&p)).abs() < 1e-6, "{p:?}: {m}");
    }
    for (u, l) in [(vec![0.0, 0.0, 0.0], 1.0), (vec![0.6, 0.0, -0.8], 1.0), (vec![0.0, 0.0, 1.0], 0.25)] {
        let p = PlanarChannelParams::new(2, u, l).unwrap();
        let m = mass_2d(&p);
        assert!((m - absorption_mass(&p)).abs() < 1e-6, "{p:?}: {m}");
    }
}

#[test]
fn three_dimensional_receiver_normalizes() {
    // d = 3: integrate the radial VDFAP law with the 4πr² shell area.
    let p = VdfapParams::new(-0.7, 1.3, 3).unwrap();
    let m = integrate_semi_infinite(
        |r| 4.0 * PI * r * r * vdfap_pdf_radial(r, &p).unwrap(),
        0.0,
        1.0,
        opts(),
    )
    .unwrap()
    .value;
    assert!((m - 1.0).abs() < 1e-8, "{m}");
}

#[test]
fn drift_tilts_the_mode() {
    let p = PlanarChannelParams::new(2, vec![2.0, -3.0, -1.0], 1.0).unwrap();
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    for i in 0..121 {
        for j in 0..121 {
            let (x, y) = (-3.0 + 0.05 * i as f64, -3.0 + 0.05 * j as f64);
            let v = fap_pdf_plane(&[x, y], &p).unwrap();
            if v > best.0 {
                best = (v, x, y);
            }
        }
    }
    assert!(2.0 * best.1 - 3.0 * best.2 > 0.0, "mode at ({}, {})", best.1, best.2);
}

#[test]
fn sphere_kernel_mass() {
    for normalized in [false, true] {
        let q0 = SphereQuery { radius: 1.0, r: 2.0, theta: 0.7, phi: 1.1, theta0: 0.0, phi0: 0.0 };
        let total = integrate(
            |t0| {
                t0.sin()
                    * integrate(
                        |p0| sphere_angular_density(&SphereQuery { theta0: t0, phi0: p0, ..q0 }, normalized).unwrap(),
                        0.0,
                        2.0 * PI,
                        opts(),
                    )
                    .unwrap()
                    .value
            },
            0.0,
            PI,
            opts(),
        )
        .unwrap()
        .value;
        let expect = if normalized { 1.0 } else { 0.5 };
        assert!((total - expect).abs() < 1e-7, "normalized={normalized}: {total}");
    }
}

fn bessel_j0(x: f64) -> f64 {
    integrate(|t| (x * t.cos()).cos(), 0.0, PI, opts()).unwrap().value / PI
}

#[test]
fn cf_is_fourier_transform_of_pdf() {
    for (u, l) in [(-1.0f64, 1.0f64), (-2.0, 0.5)] {
        for w in [0.5, 1.0, 2.0] {
            let cutoff = 12.0 * (l / -u).sqrt();
            let p1 = VdfapParams::new(u, l, 1).unwrap();
            let f1 = 2.0
                * integrate(|x| vdfap_pdf(&[x], &p1).unwrap() * (w * x).cos(), 0.0, cutoff, opts())
                    .unwrap()
                    .value;
            let cf1 = vdfap_cf(&FreqPoint::new(vec![w]).unwrap(), &p1).unwrap();
            assert!((f1 - cf1).abs() < 1e-3, "d=1 u={u} l={l} w={w}: {f1} vs {cf1}");

            let p2 = VdfapParams::new(u, l, 2).unwrap();
            let f2 = integrate(
                |r| 2.0 * PI * r * vdfap_pdf_radial(r, &p2).unwrap() * bessel_j0(w * r),
                0.0,
                cutoff,
                opts(),
            )
            .unwrap()
            .value;
            let cf2 = vdfap_cf(&FreqPoint::new(vec![w, 0.0]).unwrap(), &p2).unwrap();
            assert!((f2 - cf2).abs() < 1e-3, "d=2 u={u} l={l} w={w}: {f2} vs {cf2}");
        }
    }
}

#[test]
fn second_moment_by_quadrature() {
    for (u, l, d) in [(-1.0, 1.0, 2), (-2.0, 3.0, 1), (-0.5, 0.5, 2)] {
        let p = VdfapParams::new(u, l, d).unwrap();
        let area = if d == 1 { 2.0 } else { 2.0 * PI };
        let m2 = integrate_semi_infinite(
            |r| area * r.powi(d as i32 + 1) * vdfap_pdf_radial(r, &p).unwrap(),
            0.0,
            l,
            opts(),
        )
        .unwrap()
        .value;
        let exact = vdfap_moments(&p).second_moment;
        assert!((m2 / exact - 1.0).abs() < 1e-6, "{m2} vs {exact}");
    }
}

#[test]
fn components_uncorrelated_but_dependent() {
    let p = VdfapParams::new(-1.0, 1.0, 2).unwrap();
    let marginal = |x: f64| {
        let f = |y: f64| vdfap_pdf(&[x, y], &p).unwrap();
        2.0 * integrate_semi_infinite(f, 0.0, 1.0, opts()).unwrap().value
    };
    let joint = vdfap_pdf(&[1.0, 1.0], &p).unwrap();
    let product = marginal(1.0) * marginal(1.0);
    assert!((joint - product).abs() > 1e-3 * joint, "{joint} vs {product}");
}

#[test]
fn entropy_quadrature_agrees() {
    for (u, l) in [(-1.0, 0.25), (-1.0, 1.0), (-1.0, 4.0), (-0.5, 0.5)] {
        let p = VdfapParams::new(u, l, 2).unwrap();
        let q = entropy_quadrature(&p).unwrap();
        assert!(q.abs_error <= 1e-5);
        assert!((q.nats - vdfap_entropy_2d(u, l).unwrap()).abs() < 1e-8);
    }
    let q1 = entropy_quadrature(&VdfapParams::new(-1.0, 1.0, 1).unwrap()).unwrap();
    assert!(q1.nats.is_finite() && q1.abs_error <= 1e-5);
}

#[test]
fn tail_integral_closed_form() {
    for a in [0.5, 1.0, 2.0, 5.0] {
        let closed = entropy_tail_integral(a).unwrap();
        let quad = entropy_tail_quadrature(a).unwrap();
        assert!((closed - quad).abs() < 1e-10, "a={a}: {closed} vs {quad}");
    }
}
