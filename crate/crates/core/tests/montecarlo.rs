use std::f64::consts::PI;

use approx::assert_relative_eq;
use qfilter::control::{preset_by_name, PresetParams};
use qfilter::geometry::{Mat2, X_HAT, Z_HAT};
use qfilter::montecarlo::{entanglement_fidelity, error_vector_of, propagate, NoiseTrajectory, SynthesisPlan};
use qfilter::{ensemble_fidelity, McSettings, NoiseSpectrum, PresetName};

fn free(tau: f64) -> qfilter::ControlSequence {
    preset_by_name(PresetName::Free, &PresetParams::tau(tau)).unwrap().sequence
}

#[test]
fn synthesised_variance_matches_spectrum() {
    let spec = NoiseSpectrum::white_cutoff(2.0, 50.0).unwrap();
    let plan = SynthesisPlan::new(&spec, 50.0, 1024).unwrap();
    assert_relative_eq!(plan.variance(), spec.variance().unwrap(), max_relative = 1e-12);

    // ensemble variance of η at a few times over 2000 trajectories
    let n = 2000;
    let mut sum_sq = 0.0;
    let mut count = 0;
    for i in 0..n {
        let tr = plan.trajectory(1.0, 0.01, 9, i);
        for v in tr.samples(0.37, 8) {
            sum_sq += v * v;
            count += 1;
        }
    }
    let var = sum_sq / count as f64;
    assert_relative_eq!(var, spec.variance().unwrap(), max_relative = 0.03);
}

#[test]
fn synthesised_correlation_matches_autocorrelation() {
    let spec = NoiseSpectrum::power_law(1.0, 2.0, Some(0.5), Some(40.0)).unwrap();
    let plan = SynthesisPlan::new(&spec, 40.0, 1024).unwrap();
    let var = spec.variance().unwrap();
    let lags = [0.0, 0.05, 0.2, 0.5, 1.5];
    let mut acc = [0.0; 5];
    let n = 4000;
    for i in 0..n {
        let tr = plan.trajectory(2.0, 0.01, 3, i);
        let x0 = tr.value(0.3);
        for (a, lag) in acc.iter_mut().zip(lags) {
            *a += x0 * tr.value(0.3 + lag);
        }
    }
    for (a, lag) in acc.iter().zip(lags) {
        let est = a / n as f64;
        let exact = spec.autocorrelation(lag).unwrap();
        assert!((est - exact).abs() < 0.05 * var, "lag {lag}: {est} vs {exact}");
    }
}

#[test]
fn synthesised_noise_is_gaussian() {
    let spec = NoiseSpectrum::white_cutoff(1.0, 20.0).unwrap();
    let plan = SynthesisPlan::new(&spec, 20.0, 1024).unwrap();
    let xs: Vec<f64> = (0..5000).map(|i| plan.trajectory(1.0, 0.01, 21, i).value(0.5)).collect();
    let m2 = xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64;
    let m4 = xs.iter().map(|x| x.powi(4)).sum::<f64>() / xs.len() as f64;
    let k = m4 / (m2 * m2);
    assert!((2.8..=3.2).contains(&k), "kurtosis {k}");
}

#[test]
fn constant_noise_free_evolution_is_a_rotation() {
    let (tau, eta) = (1.3, 0.8);
    let tr = NoiseTrajectory { tau, dt: 0.01, frequencies: vec![0.0], amplitudes: vec![eta], phases: vec![0.0] };
    let u = propagate(&free(tau), &tr).unwrap();
    let f = entanglement_fidelity(&u, &Mat2::IDENTITY).unwrap();
    assert_relative_eq!(f, (0.5 * eta * tau).cos().powi(2), max_relative = 1e-12);
    let a = error_vector_of(&u, &Mat2::IDENTITY).unwrap();
    assert_relative_eq!(a.a[2], 0.5 * eta * tau, max_relative = 1e-12);
    assert!(!a.at_branch);
}

#[test]
fn fidelity_and_error_vector_examples() {
    let x = Mat2::rotation(&X_HAT, PI);
    assert_relative_eq!(entanglement_fidelity(&x, &x).unwrap(), 1.0, max_relative = 1e-15);
    assert!(entanglement_fidelity(&x, &Mat2::IDENTITY).unwrap() < 1e-15);
    let z = Mat2::rotation(&Z_HAT, 0.2);
    let e = error_vector_of(&z, &Mat2::IDENTITY).unwrap();
    assert_relative_eq!(e.a[2], 0.1, max_relative = 1e-12);
    let f = entanglement_fidelity(&z, &Mat2::IDENTITY).unwrap();
    assert_relative_eq!(f, 0.5 * ((2.0 * e.norm()).cos() + 1.0), max_relative = 1e-14);
    let half_turn = Mat2::rotation(&Z_HAT, PI);
    assert!(error_vector_of(&half_turn, &Mat2::IDENTITY).unwrap().at_branch);
}

#[test]
fn step_refinement_barely_moves_the_fidelity() {
    let s = preset_by_name(PresetName::PrimitiveX, &PresetParams::rate(PI)).unwrap().sequence;
    let spec = NoiseSpectrum::white_cutoff(0.01, 20.0).unwrap();
    let settings = |dt| McSettings { trajectories: 50, dt: Some(dt), seed: 4, ..Default::default() };
    let a = ensemble_fidelity(&s, &spec, &settings(0.005)).unwrap();
    let b = ensemble_fidelity(&s, &spec, &settings(0.0025)).unwrap();
    assert!((a.mean_fidelity - b.mean_fidelity).abs() < 1e-6, "{}", a.mean_fidelity - b.mean_fidelity);
}

#[test]
fn ensemble_is_seeded_and_retains_on_request() {
    let s = free(1.0);
    let spec = NoiseSpectrum::white_cutoff(0.2, 30.0).unwrap();
    let base = McSettings { trajectories: 40, seed: 7, retain: true, ..Default::default() };
    let a = ensemble_fidelity(&s, &spec, &base).unwrap();
    let b = ensemble_fidelity(&s, &spec, &base).unwrap();
    assert_eq!(a.to_json(), b.to_json());
    assert_eq!(a.fidelities.as_ref().unwrap().len(), 40);
    let c = ensemble_fidelity(&s, &spec, &McSettings { seed: 8, ..base }).unwrap();
    assert_ne!(a.mean_fidelity, c.mean_fidelity);
    let d = ensemble_fidelity(&s, &spec, &McSettings { retain: false, ..base }).unwrap();
    assert!(d.fidelities.is_none() && d.error_vectors.is_none());
    assert_eq!(d.mean_fidelity, a.mean_fidelity);
}

#[test]
fn dt_too_coarse_for_the_band_is_rejected() {
    let s = free(1.0);
    let spec = NoiseSpectrum::white_cutoff(0.2, 1000.0).unwrap();
    let settings = McSettings { trajectories: 4, dt: Some(0.01), ..Default::default() };
    assert!(ensemble_fidelity(&s, &spec, &settings).is_err());
}
