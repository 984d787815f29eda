//! Built-in invariant suite: bounds and closed-form oracles at reduced sizes.

use std::f64::consts::PI;

use anyhow::Result;
use qfilter::control::{preset_by_name, PresetParams};
use qfilter::fidelity::{moment_a1, moment_a1_time_domain};
use qfilter::filters::{f1, y1_closed_form, y1_numeric, F2Grid, RESONANCE_EPS};
use qfilter::quadrature::IntegrationSettings;
use qfilter::{
    ensemble_fidelity, fidelity, Axis, ControlSegment, ControlSequence, FidelitySettings, McSettings, NoiseSpectrum,
    Order, PresetName,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Debug, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

fn check(name: &'static str, f: impl FnOnce() -> Result<(bool, String)>) -> Check {
    match f() {
        Ok((pass, detail)) => Check { name, pass, detail },
        Err(e) => Check { name, pass: false, detail: format!("error: {e:#}") },
    }
}

fn random_pi_sequence(rng: &mut ChaCha8Rng) -> ControlSequence {
    let n = rng.random_range(1..=6);
    let segs = (0..n)
        .map(|_| match rng.random_range(0..4) {
            0 => ControlSegment::idle(rng.random_range(0.05..0.5)).unwrap(),
            k => {
                let axis = [Axis::X, Axis::Y, Axis::Z][k - 1];
                let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                ControlSegment::by_angle(axis, sign * PI, PI * rng.random_range(1.0..20.0)).unwrap()
            }
        })
        .collect();
    ControlSequence::new(segs).unwrap()
}

fn random_sequence(rng: &mut ChaCha8Rng) -> ControlSequence {
    let n = rng.random_range(1..=4);
    let segs = (0..n)
        .map(|_| {
            let axis = [Axis::Identity, Axis::X, Axis::Y, Axis::Z][rng.random_range(0..4)];
            let rate = if axis == Axis::Identity { 0.0 } else { rng.random_range(-12.0..12.0) };
            ControlSegment::new(axis, rate, rng.random_range(0.1..0.6)).unwrap()
        })
        .collect();
    ControlSequence::new(segs).unwrap()
}

fn with_xi(s: &NoiseSpectrum, tau: f64, xi: f64) -> Result<NoiseSpectrum> {
    let s = s.resolved(tau);
    let v = s.variance()?;
    Ok(s.scaled((2.0 * xi / tau).powi(2) / v))
}

fn free(tau: f64) -> Result<ControlSequence> {
    Ok(preset_by_name(PresetName::Free, &PresetParams::tau(tau))?.sequence)
}

pub fn run() -> Vec<Check> {
    let integration = IntegrationSettings::default();
    vec![
        check("closed-form y1 matches numeric y1", || {
            let mut rng = ChaCha8Rng::seed_from_u64(1);
            let mut worst: f64 = 0.0;
            for _ in 0..50 {
                let seq = random_pi_sequence(&mut rng);
                for _ in 0..20 {
                    let w = 10f64.powf(rng.random_range(-2.0..3.0)) / seq.tau();
                    let resonant = seq
                        .segments()
                        .iter()
                        .any(|s| s.rate != 0.0 && (w * w - s.rate * s.rate).abs() < RESONANCE_EPS * s.rate * s.rate);
                    if !resonant {
                        let (a, b) = (y1_closed_form(&seq, w)?, y1_numeric(&seq, w)?);
                        worst = worst.max(a.distance(&b) / b.norm());
                    }
                }
            }
            Ok((worst <= 1e-8, format!("worst relative {worst:.2e}")))
        }),
        check("free evolution filter is 4 sin^2(wt/2)", || {
            let s = free(1.0)?;
            let mut worst: f64 = 0.0;
            for k in 1..=100 {
                let w = 0.1 * k as f64;
                let exact = 4.0 * (0.5 * w).sin().powi(2);
                worst = worst.max((f1(&s, w)?.total - exact).abs() / exact);
            }
            Ok((worst < 1e-10, format!("worst relative {worst:.2e}")))
        }),
        check("white-noise dephasing chi = alpha tau / 2", || {
            let spec = NoiseSpectrum::white_cutoff(0.02, 1e4)?;
            let chi = moment_a1(&free(1.0)?, &spec, &integration)?.chi();
            let rel = (chi - 0.01).abs() / 0.01;
            Ok((rel < 1e-3, format!("relative {rel:.2e}")))
        }),
        check("fast echo approaches 16 sin^4(wt/4)", || {
            let s = preset_by_name(PresetName::HahnEcho, &PresetParams::rate_tau(2e4 * PI, 1.0))?.sequence;
            let mut worst: f64 = 0.0;
            for k in 1..=100 {
                let w = 0.1 * k as f64;
                let ideal = 16.0 * (0.25 * w).sin().powi(4);
                worst = worst.max((f1(&s, w)?.total - ideal).abs() / ideal);
            }
            Ok((worst <= 0.01, format!("worst relative {worst:.2e}")))
        }),
        check("corrected gates roll off faster at low frequency", || {
            let slope = |name| -> Result<f64> {
                let s = preset_by_name(name, &PresetParams::rate(PI))?.sequence;
                let (a, b) = (1e-3 / s.tau(), 1e-2 / s.tau());
                Ok((f1(&s, b)?.total / f1(&s, a)?.total).log10())
            };
            let (p, c) = (slope(PresetName::PrimitiveX)?, slope(PresetName::CorrectedX)?);
            Ok(((p - 2.0).abs() <= 0.1 && c >= 3.5, format!("primitive {p:.3}, corrected {c:.3}")))
        }),
        check("time- and frequency-domain first-order moments agree", || {
            let s = preset_by_name(PresetName::PrimitiveX, &PresetParams::rate(PI))?.sequence;
            let spec = NoiseSpectrum::white_cutoff(0.2, 30.0)?;
            let f = moment_a1(&s, &spec, &integration)?;
            let t = moment_a1_time_domain(&s, &spec, 64)?;
            let d = (0..9).map(|k| (f.matrix[k / 3][k % 3] - t[k / 3][k % 3]).abs()).fold(0.0, f64::max) / f.trace();
            Ok((d <= 1e-3, format!("max deviation / trace {d:.2e}")))
        }),
        check("moment bounds at xi = 0.5", || {
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            let settings = FidelitySettings { f2_points: 32, ..Default::default() };
            let spectra =
                [NoiseSpectrum::white_cutoff(1.0, 50.0)?, NoiseSpectrum::power_law(1.0, 2.0, Some(1e-3), Some(100.0))?];
            let mut worst: f64 = 0.0;
            for _ in 0..8 {
                let seq = random_sequence(&mut rng);
                let grid = F2Grid::compute_default(&seq, settings.f2_points, &settings.f2)?;
                for s in &spectra {
                    let r = fidelity(&seq, &with_xi(s, seq.tau(), 0.5)?, Order::Fourth, &settings, Some(&grid))?;
                    let f = r.fourth.expect("fourth order");
                    let (x2, x4) = (0.25, 0.0625);
                    for i in 0..3 {
                        for j in 0..3 {
                            worst = worst.max(r.moments_a1[i][j].abs() / x2).max(f.a1sq_a1sq[i][j] / (3.0 * x4));
                        }
                        worst = worst.max(f.a2_sq[i] / (0.75 * x4)).max(f.a1_a3[i].abs() / (0.25 * x4));
                    }
                }
            }
            Ok((worst <= 1.05, format!("largest moment / bound {worst:.3}")))
        }),
        check("Monte-Carlo free evolution matches the exact Gaussian result", || {
            let s = free(1.0)?;
            let spec = NoiseSpectrum::white_cutoff(0.5, 50.0)?;
            let chi = moment_a1(&s, &spec, &integration)?.chi();
            let expected = 0.5 * ((-chi).exp() + 1.0);
            let mc = ensemble_fidelity(&s, &spec, &McSettings { trajectories: 1000, seed: 2, ..Default::default() })?;
            let z = (mc.mean_fidelity - expected).abs() / mc.std_error;
            Ok((z <= 2.0, format!("{:.5} vs {expected:.5}, {z:.2} standard errors", mc.mean_fidelity)))
        }),
        check("Monte-Carlo dephasing angle is Gaussian", || {
            let s = free(1.0)?;
            let spec = NoiseSpectrum::white_cutoff(0.1, 50.0)?;
            let mc = ensemble_fidelity(&s, &spec, &McSettings { trajectories: 2000, seed: 3, ..Default::default() })?;
            let k = mc.moments.fourth[2][2] / mc.moments.second[2][2].powi(2);
            Ok(((2.7..=3.3).contains(&k), format!("kurtosis {k:.3}")))
        }),
        check("Monte-Carlo is reproducible from its seed", || {
            let s = preset_by_name(PresetName::XDcg, &PresetParams::rate(PI))?.sequence;
            let spec = NoiseSpectrum::white_cutoff(0.5, 20.0)?;
            let settings = McSettings { trajectories: 32, seed: 7, ..Default::default() };
            let a = ensemble_fidelity(&s, &spec, &settings)?.to_json();
            let b = ensemble_fidelity(&s, &spec, &settings)?.to_json();
            Ok((a == b, "two runs compared byte for byte".into()))
        }),
    ]
}
