//! Closed-form and independently computed reference values.

mod common;

use std::f64::consts::PI;

use approx::assert_relative_eq;
use common::d;
use potential_lab::fields;
use potential_lab::geometry::{ball_volume, cap_surface_measure, sphere_area, SphereSpec, SphericalCap};
use potential_lab::inequality::{
    cap_bound_constant, cap_bound_constant_pointwise, harnack_factor, sphere_factor_half, sphere_factor_limit,
    sphere_factor_t,
};
use potential_lab::liouville::recurrence_factor;
use potential_lab::quadrature::{
    ball_mean, cap_integral, composite_gauss, gauss_legendre, sphere_mean, union_measure, QuadratureScheme,
};
use statrs::function::gamma::gamma;

#[test]
fn areas_match_gamma_oracle() {
    for m in 1..=8usize {
        let mf = m as f64;
        for r in [0.3f64, 1.0, 2.5] {
            let b = PI.powf(mf / 2.0) / gamma(mf / 2.0 + 1.0) * r.powf(mf);
            assert_relative_eq!(ball_volume(d(m), r), b, max_relative = 1e-12);
            assert_relative_eq!(
                sphere_area(d(m), r),
                2.0 * PI.powf(mf / 2.0) / gamma(mf / 2.0) * r.powf(mf - 1.0),
                max_relative = 1e-12
            );
        }
    }
}

#[test]
fn hemisphere_cap_by_simpson() {
    // sigma(theta) = s_{m-2} r^{m-1} int_0^theta sin^{m-2}; at theta = pi/2 it is half the sphere
    for m in 2..=7usize {
        let s = SphereSpec::centered(d(m), 1.7).unwrap();
        let mut axis = vec![0.0; m];
        axis[m - 1] = 1.0;
        let cap = SphericalCap::new(s.clone(), axis.clone(), PI / 2.0).unwrap();
        assert_relative_eq!(cap_surface_measure(&cap), 0.5 * s.area(), max_relative = 1e-12);

        let theta = 0.9;
        let n = 20_000;
        let h = theta / n as f64;
        let f = |t: f64| t.sin().powi(m as i32 - 2);
        let simpson: f64 = (0..=n)
            .map(|i| {
                let w = if i == 0 || i == n {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                w * f(i as f64 * h)
            })
            .sum::<f64>()
            * h
            / 3.0;
        let lower = if m == 2 { 2.0 } else { sphere_area(d(m - 1), 1.0) };
        let want = lower * 1.7f64.powi(m as i32 - 1) * simpson;
        let cap = SphericalCap::new(s, axis, theta).unwrap();
        assert_relative_eq!(cap_surface_measure(&cap), want, max_relative = 1e-10);
    }
}

#[test]
fn gauss_legendre_integrates_polynomials() {
    for n in [2usize, 5, 8, 16] {
        let (x, w) = gauss_legendre(n);
        for p in 0..2 * n {
            let got: f64 = x.iter().zip(&w).map(|(a, b)| b * a.powi(p as i32)).sum();
            let want = if p % 2 == 0 { 2.0 / (p + 1) as f64 } else { 0.0 };
            assert!((got - want).abs() < 1e-13, "n = {n}, p = {p}: {got} vs {want}");
        }
    }
    let (x, w) = composite_gauss(0.0, PI, 8, 6);
    let got: f64 = x.iter().zip(&w).map(|(a, b)| b * a.sin()).sum();
    assert_relative_eq!(got, 2.0, max_relative = 1e-12);
}

#[test]
fn radial_power_means_closed_form() {
    // S_{|x|^2}(0, r) = r^2 and B_{|x|^2}(0, r) = m r^2 / (m + 2)
    for m in [2usize, 3] {
        let v = fields::radial_power(vec![0.0; m], 2.0).unwrap();
        let scheme = QuadratureScheme::default_for(d(m));
        let o = vec![0.0; m];
        let s = sphere_mean(&v, &o, 1.5, &scheme).unwrap();
        assert_relative_eq!(s.value, 2.25, max_relative = 1e-12);
        let b = ball_mean(&v, &o, 1.5, &scheme).unwrap();
        assert_relative_eq!(b.value, m as f64 * 2.25 / (m as f64 + 2.0), max_relative = 1e-10);
    }
    // off-centre: S_{|x|^2}(x, r) = |x|^2 + r^2
    let v = fields::radial_power(vec![0.0; 3], 2.0).unwrap();
    let s = sphere_mean(&v, &[0.3, -0.4, 1.2], 0.7, &QuadratureScheme::default_for(d(3))).unwrap();
    assert_relative_eq!(s.value, 0.09 + 0.16 + 1.44 + 0.49, max_relative = 1e-12);
}

#[test]
fn jensen_formula_for_log_modulus() {
    // S_{ln|z - a|}(0, r) = ln max(r, |a|)
    let v = fields::log_distance([0.6, 0.0]).unwrap();
    let scheme = QuadratureScheme::default_for(d(2));
    let s = sphere_mean(&v, &[0.0, 0.0], 1.0, &scheme).unwrap();
    assert!((s.value - 0.0).abs() < 1e-8, "{}", s.value);
    let s = sphere_mean(&v, &[0.0, 0.0], 0.3, &scheme).unwrap();
    assert!((s.value - 0.6f64.ln()).abs() < 1e-8, "{}", s.value);
}

#[test]
fn cap_integral_of_height() {
    // int over the cap {x_3 >= r cos theta} of x_3 dsigma = pi r^3 sin^2 theta on S^2(r)
    let r = 1.3;
    let theta = 0.8;
    let s = SphereSpec::centered(d(3), r).unwrap();
    let cap = SphericalCap::new(s, vec![0.0, 0.0, 1.0], theta).unwrap();
    let v = fields::affine(vec![0.0, 0.0, 1.0], 0.0).unwrap();
    let got = cap_integral(&v, &cap, &QuadratureScheme::default_for(d(3))).unwrap();
    assert_relative_eq!(got.value, PI * r.powi(3) * theta.sin().powi(2), max_relative = 1e-9);
}

#[test]
fn union_of_antipodal_hemispheres() {
    let s = SphereSpec::centered(d(3), 2.0).unwrap();
    let a = SphericalCap::new(s.clone(), vec![1.0, 0.0, 0.0], PI / 2.0).unwrap();
    let b = SphericalCap::new(s.clone(), vec![-1.0, 0.0, 0.0], PI / 2.0).unwrap();
    let u = union_measure(&[a, b], &QuadratureScheme::default_for(d(3))).unwrap();
    assert_relative_eq!(u.value, s.area(), max_relative = 1e-9);
}

#[test]
fn factor_hand_values() {
    // m = 2, r = 1, R = 3
    assert_relative_eq!(sphere_factor_limit(d(2), 1.0, 3.0), 6.0, max_relative = 1e-15);
    assert_relative_eq!(sphere_factor_half(d(2), 1.0, 3.0), 12.0, max_relative = 1e-15);
    assert_relative_eq!(sphere_factor_t(d(2), 1.0, 3.0, 1.0), 12.0, max_relative = 1e-15);
    assert_relative_eq!(cap_bound_constant(d(2), 1.0, 3.0), 1.5 * 3.0, max_relative = 1e-15);
    assert_relative_eq!(
        cap_bound_constant_pointwise(d(2), 1.0, 3.0),
        1.5 * 1.5,
        max_relative = 1e-15
    );
    // min{4, .} switches once r/(R - r) >= 3
    assert_relative_eq!(cap_bound_constant(d(2), 3.0, 3.5), 4.0 * 14.0, max_relative = 1e-15);
    // (1 + 1/2)(2)^2 for m = 3, |x| = 1, R = 2
    assert_relative_eq!(harnack_factor(d(3), 1.0, 2.0).unwrap(), 6.0, max_relative = 1e-15);
    // 4 / (2 pi) * 2 * 0.5
    assert_relative_eq!(recurrence_factor(d(2), 2.0, 0.5), 2.0 / PI, max_relative = 1e-15);
}
