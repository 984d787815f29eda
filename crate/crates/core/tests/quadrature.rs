use std::f64::consts::PI;

use approx::assert_relative_eq;
use num_complex::Complex64;
use qfilter::quadrature::{integrate_frequency, nested_double, nested_triple, IntegrationSettings, TimeGrid};

#[test]
fn free_evolution_kernel_integrates_to_pi_tau() {
    // ∫₀^∞ 4 sin²(ωτ/2)/ω² dω = πτ; head [0, lo] ≈ τ² lo, tail beyond hi ≈ 2/hi
    let tau = 1.7;
    let (lo, hi) = (1e-6, 1e3);
    let f = |w: f64| 4.0 * (0.5 * w * tau).sin().powi(2) / (w * w);
    let body = integrate_frequency(f, lo, hi, &IntegrationSettings { rtol: 1e-8, ..Default::default() }).unwrap();
    let total = body + tau * tau * lo + 2.0 / hi;
    assert_relative_eq!(total, PI * tau, max_relative = 1e-5);
}

fn nested_closed_form(a: f64, b: f64, tau: f64) -> Complex64 {
    // ∫₀^τ e^{iat} ∫₀^t e^{ibt'} dt' dt
    let i = Complex64::i();
    let e = |x: f64| if x == 0.0 { Complex64::new(tau, 0.0) } else { ((i * x * tau).exp() - 1.0) / (i * x) };
    (e(a + b) - e(a)) / (i * b)
}

#[test]
fn nested_double_matches_closed_form_with_second_order_convergence() {
    let (a, b, tau) = (7.0, -3.0, 1.3);
    let exact = nested_closed_form(a, b, tau);
    let err = |m: usize| {
        let g = TimeGrid::uniform(tau, m).unwrap();
        let ones = vec![1.0; g.len()];
        (nested_double(&ones, &ones, a, b, &g) - exact).norm()
    };
    let (e1, e2) = (err(200), err(400));
    assert!(e2 < 1e-4 * exact.norm());
    let order = (e1 / e2).log2();
    assert!((order - 2.0).abs() < 0.1, "order {order}");
}

#[test]
fn nested_double_matches_dense_sum() {
    let (a, b, tau) = (4.0, 2.5, 1.0);
    let fa = |t: f64| (3.0 * t).cos();
    let fb = |t: f64| t * t - 0.4;
    let m = 256;
    let h = tau / m as f64;
    let mut dense = Complex64::new(0.0, 0.0);
    for i in 0..m {
        let ti = (i as f64 + 0.5) * h;
        for j in 0..=i {
            let tj = (j as f64 + 0.5) * h;
            let w = if i == j { 0.5 } else { 1.0 };
            dense += w * fa(ti) * fb(tj) * Complex64::from_polar(h * h, a * ti + b * tj);
        }
    }
    let g = TimeGrid::uniform(tau, 4096).unwrap();
    let va: Vec<f64> = g.nodes().iter().map(|&t| fa(t)).collect();
    let vb: Vec<f64> = g.nodes().iter().map(|&t| fb(t)).collect();
    let fast = nested_double(&va, &vb, a, b, &g);
    assert!((fast - dense).norm() < 1e-4 * dense.norm().max(1e-3), "{fast} vs {dense}");
}

#[test]
fn nested_triple_of_constants_is_simplex_volume() {
    let g = TimeGrid::uniform(2.0, 64).unwrap();
    let ones = vec![1.0; g.len()];
    let v = nested_triple([&ones, &ones, &ones], [0.0; 3], &g);
    // product-average rule, second order in h
    assert_relative_eq!(v.re, 8.0 / 6.0, max_relative = 1e-3);
    assert!(v.im.abs() < 1e-14);
}

#[test]
fn settings_validation() {
    let bad = IntegrationSettings { rtol: 0.0, ..Default::default() };
    assert!(integrate_frequency(|w| w, 1.0, 2.0, &bad).is_err());
}
