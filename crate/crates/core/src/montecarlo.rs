//! Brute-force trajectory simulation.
//!
//! Noise is a sum of cosines `η(t) = Σ_k A_k cos(ω_k t + φ_k)` with `A_k² = 2P_k/π`,
//! `P_k` the exact spectral power in cell `k`, so the ensemble variance is `(1/π)∫S`.
//! Each trajectory is propagated with exact 2×2 exponentials over sub-steps aligned to
//! the segment boundaries, with `η` sampled at step midpoints.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::control::{ControlSequence, TargetGate};
use crate::error::{Error, Result};
use crate::geometry::{Mat2, Vec3};
use crate::quadrature::pairwise_sum;
use crate::spectra::NoiseSpectrum;

pub const DEFAULT_COMPONENTS: usize = 1024;
/// Unitarity tolerance for inputs to the fidelity and error-vector extraction.
pub const UNITARITY_TOL: f64 = 1e-8;

/// The deterministic part of the synthesis: cell frequencies and amplitudes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthesisPlan {
    pub frequencies: Vec<f64>,
    pub amplitudes: Vec<f64>,
    /// Upper edge of the synthesised band.
    pub omega_hi: f64,
}

impl SynthesisPlan {
    /// Cells are the union of a log-spaced and a uniform partition of the support (up to
    /// `omega_hi`), split at spectral breakpoints; each cell contributes one cosine at its
    /// power-weighted mean frequency.
    pub fn new(spectrum: &NoiseSpectrum, omega_hi: f64, components: usize) -> Result<Self> {
        let (lo, hi) = spectrum.support()?;
        let hi = hi.min(omega_hi);
        if !(hi > lo) {
            return Err(Error::InvalidSpectrum(format!("spectrum has no support below {omega_hi}")));
        }
        if components < 16 {
            return Err(Error::InvalidConfig(format!("need at least 16 components, got {components}")));
        }
        if spectrum.is_zero() {
            return Ok(SynthesisPlan { frequencies: vec![], amplitudes: vec![], omega_hi: hi });
        }
        let half = components / 2;
        let log_lo = if lo > 0.0 { lo } else { hi * 1e-6 };
        let mut edges: Vec<f64> = (0..=half).map(|k| lo + (hi - lo) * k as f64 / half as f64).collect();
        let (a, b) = (log_lo.ln(), hi.ln());
        edges.extend((0..=half).map(|k| (a + (b - a) * k as f64 / half as f64).exp()));
        edges.extend(spectrum.breakpoints(lo, hi));
        edges.push(lo);
        edges.push(hi);
        edges.retain(|x| *x >= lo && *x <= hi);
        edges.sort_by(f64::total_cmp);
        edges.dedup_by(|x, y| (*x - *y).abs() <= 1e-12 * y.abs().max(1e-300));
        let mut frequencies = Vec::with_capacity(edges.len());
        let mut amplitudes = Vec::with_capacity(edges.len());
        for e in edges.windows(2) {
            let p = spectrum.band_power(e[0], e[1])?;
            if p > 0.0 {
                let centroid = spectrum.first_moment(e[0], e[1])? / p;
                frequencies.push(centroid.clamp(e[0], e[1]));
                amplitudes.push((2.0 * p / PI).sqrt());
            }
        }
        Ok(SynthesisPlan { frequencies, amplitudes, omega_hi: hi })
    }

    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    /// `Σ A_k²/2`, the variance of the synthesised process.
    pub fn variance(&self) -> f64 {
        let v: Vec<f64> = self.amplitudes.iter().map(|a| 0.5 * a * a).collect();
        pairwise_sum(&v)
    }

    /// Draw phases for trajectory `index` of the ensemble seeded by `master_seed`.
    pub fn trajectory(&self, tau: f64, dt: f64, master_seed: u64, index: u64) -> NoiseTrajectory {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(index);
        let phases = (0..self.len()).map(|_| 2.0 * PI * rng.random::<f64>()).collect();
        NoiseTrajectory {
            tau,
            dt,
            frequencies: self.frequencies.clone(),
            amplitudes: self.amplitudes.clone(),
            phases,
        }
    }
}

/// One noise realisation on `[0, τ]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseTrajectory {
    pub tau: f64,
    /// Largest propagation step.
    pub dt: f64,
    pub frequencies: Vec<f64>,
    pub amplitudes: Vec<f64>,
    pub phases: Vec<f64>,
}

impl NoiseTrajectory {
    pub fn value(&self, t: f64) -> f64 {
        let v: Vec<f64> = (0..self.frequencies.len())
            .map(|k| self.amplitudes[k] * (self.frequencies[k] * t + self.phases[k]).cos())
            .collect();
        pairwise_sum(&v)
    }

    /// `η(t₀ + (m + ½)h)` for `m < steps` by phasor recurrence.
    pub fn midpoints(&self, t0: f64, h: f64, steps: usize) -> Vec<f64> {
        let mut z: Vec<Complex64> = (0..self.frequencies.len())
            .map(|k| Complex64::from_polar(self.amplitudes[k], self.frequencies[k] * (t0 + 0.5 * h) + self.phases[k]))
            .collect();
        let r: Vec<Complex64> = self.frequencies.iter().map(|w| Complex64::from_polar(1.0, w * h)).collect();
        let mut out = Vec::with_capacity(steps);
        for _ in 0..steps {
            out.push(z.iter().map(|c| c.re).sum());
            for (c, r) in z.iter_mut().zip(&r) {
                *c *= r;
            }
        }
        out
    }

    /// Samples on the uniform grid `t_m = m·Δ`, `m < n`.
    pub fn samples(&self, spacing: f64, n: usize) -> Vec<f64> {
        self.midpoints(-0.5 * spacing, spacing, n)
    }
}

/// Largest `dt` allowed for a spectrum cut at `omega_hi` and a sequence.
pub fn max_dt(seq: &ControlSequence, omega_hi: f64) -> f64 {
    let by_noise = if omega_hi.is_finite() && omega_hi > 0.0 { PI / (10.0 * omega_hi) } else { f64::INFINITY };
    by_noise.min(seq.min_duration() / 10.0)
}

fn synthesis_band(spectrum: &NoiseSpectrum, dt: f64) -> Result<f64> {
    let (_, hi) = spectrum.support()?;
    let resolvable = PI / (10.0 * dt);
    if hi.is_finite() {
        if hi > resolvable * (1.0 + 1e-12) {
            return Err(Error::InvalidConfig(format!(
                "dt = {dt} resolves frequencies up to π/(10 dt) = {resolvable}, the spectrum extends to {hi}"
            )));
        }
        Ok(hi)
    } else {
        Ok(resolvable)
    }
}

/// A single trajectory from `seed` with [`DEFAULT_COMPONENTS`] cells. Spectra without an
/// upper cutoff are cut at `π/(10 dt)`.
pub fn synthesize_trajectory(spectrum: &NoiseSpectrum, tau: f64, dt: f64, seed: u64) -> Result<NoiseTrajectory> {
    if !(tau > 0.0) || !(dt > 0.0) {
        return Err(Error::InvalidConfig(format!("tau and dt must be positive, got {tau}, {dt}")));
    }
    let spectrum = spectrum.resolved(tau);
    let plan = SynthesisPlan::new(&spectrum, synthesis_band(&spectrum, dt)?, DEFAULT_COMPONENTS)?;
    Ok(plan.trajectory(tau, dt, seed, 0))
}

/// Time-ordered product of `exp(−i h(½η σ_z + ½Ω σ_axis))` over steps of at most `dt`.
pub fn propagate(seq: &ControlSequence, trajectory: &NoiseTrajectory) -> Result<Mat2> {
    if trajectory.tau + 1e-12 * seq.tau() < seq.tau() {
        return Err(Error::InvalidConfig(format!(
            "trajectory covers [0, {}] but the sequence lasts {}",
            trajectory.tau,
            seq.tau()
        )));
    }
    let b = seq.boundaries();
    let mut u = Mat2::IDENTITY;
    for (j, seg) in seq.segments().iter().enumerate() {
        let steps = (seg.duration / trajectory.dt * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        let h = seg.duration / steps as f64;
        let drive: Vec3 = match seg.axis.unit() {
            Some(n) => [n[0] * seg.rate, n[1] * seg.rate, n[2] * seg.rate],
            None => [0.0; 3],
        };
        for eta in trajectory.midpoints(b[j], h, steps) {
            let v = [0.5 * h * drive[0], 0.5 * h * drive[1], 0.5 * h * (drive[2] + eta)];
            u = Mat2::exp_pauli(&v).mul(&u);
        }
    }
    u.check_unitary(1e-10)?;
    Ok(u)
}

/// `|Tr(Q†U)|²/4`.
pub fn entanglement_fidelity(u: &Mat2, q: &Mat2) -> Result<f64> {
    u.check_unitary(UNITARITY_TOL)?;
    q.check_unitary(UNITARITY_TOL)?;
    let t = q.adjoint().mul(u).trace().norm();
    Ok((t * t / 4.0).min(1.0))
}

/// `a⃗` with `Q†U = e^{iθ} exp(−i a⃗·σ⃗)`, `|a⃗| ∈ [0, π/2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorVector {
    pub a: Vec3,
    /// `|a⃗|` within `10⁻⁹` of `π/2`, where the sign of `a⃗` is ambiguous.
    pub at_branch: bool,
}

impl ErrorVector {
    pub fn norm(&self) -> f64 {
        crate::geometry::norm(&self.a)
    }
}

pub fn error_vector_of(u: &Mat2, q: &Mat2) -> Result<ErrorVector> {
    u.check_unitary(UNITARITY_TOL)?;
    q.check_unitary(UNITARITY_TOL)?;
    let v = q.adjoint().mul(u);
    // Strip the global phase; of the two square roots keep the one with Re Tr ≥ 0.
    let det = v.0[0][0] * v.0[1][1] - v.0[0][1] * v.0[1][0];
    let mut v = v.scale(Complex64::from_polar(1.0, -0.5 * det.arg()));
    if v.trace().re < 0.0 {
        v = v.scale(Complex64::new(-1.0, 0.0));
    }
    let m = &v.0;
    let c = 0.5 * v.trace().re;
    let sv = [-0.5 * (m[0][1] + m[1][0]).im, 0.5 * (m[1][0] - m[0][1]).re, 0.5 * (m[1][1].im - m[0][0].im)];
    let s = crate::geometry::norm(&sv);
    let angle = s.atan2(c);
    let a = if s > 0.0 { sv.map(|x| x * angle / s) } else { [0.0; 3] };
    Ok(ErrorVector { a, at_branch: (angle - 0.5 * PI).abs() < 1e-9 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McSettings {
    pub trajectories: usize,
    /// Largest step; `None` picks [`max_dt`].
    pub dt: Option<f64>,
    pub seed: u64,
    pub components: usize,
    /// Keep per-trajectory fidelities and error vectors in the result.
    pub retain: bool,
}

impl Default for McSettings {
    fn default() -> Self {
        McSettings { trajectories: 200, dt: None, seed: 0, components: DEFAULT_COMPONENTS, retain: false }
    }
}

/// Sample moments of the extracted error vectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorMoments {
    pub mean_norm: f64,
    /// `⟨aᵢaⱼ⟩`
    pub second: [[f64; 3]; 3],
    /// `⟨aᵢ²aⱼ²⟩`
    pub fourth: [[f64; 3]; 3],
    /// Trajectories whose error vector sat on the `|a⃗| = π/2` branch.
    pub at_branch: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleResult {
    pub trajectories: usize,
    pub seed: u64,
    pub dt: f64,
    pub components: usize,
    pub mean_fidelity: f64,
    pub mean_error: f64,
    /// Sample standard deviation of the per-trajectory fidelities.
    pub std_dev: f64,
    /// `std_dev / √n`.
    pub std_error: f64,
    pub moments: ErrorMoments,
    pub fidelities: Option<Vec<f64>>,
    pub error_vectors: Option<Vec<Vec3>>,
}

impl EnsembleResult {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("result serialises")
    }
}

/// The step size and synthesis band used for `seq` under `settings`.
pub fn resolve_dt(seq: &ControlSequence, spectrum: &NoiseSpectrum, dt: Option<f64>) -> Result<f64> {
    let (_, hi) = spectrum.support()?;
    let band = if hi.is_finite() { hi } else { 100.0 * seq.max_rate().max(2.0 * PI / seq.tau()) };
    let limit = max_dt(seq, band);
    match dt {
        None => Ok(limit),
        Some(dt) if dt > 0.0 && dt <= limit * (1.0 + 1e-12) => Ok(dt),
        Some(dt) => Err(Error::InvalidConfig(format!(
            "dt = {dt} exceeds min(π/(10 ω_max), shortest segment/10) = {limit}"
        ))),
    }
}

/// Average `|Tr(Q†U)|²/4` over independent trajectories. Trajectory `i` draws its phases
/// from stream `i` of `seed`, and all reductions run in index order, so the result does
/// not depend on the thread count.
pub fn ensemble_fidelity(seq: &ControlSequence, spectrum: &NoiseSpectrum, settings: &McSettings) -> Result<EnsembleResult> {
    let n = settings.trajectories;
    if n < 2 {
        return Err(Error::InvalidConfig(format!("need at least 2 trajectories, got {n}")));
    }
    let tau = seq.tau();
    let spectrum = spectrum.resolved(tau);
    spectrum.validate()?;
    let dt = resolve_dt(seq, &spectrum, settings.dt)?;
    let plan = SynthesisPlan::new(&spectrum, synthesis_band(&spectrum, dt)?, settings.components)?;
    let q: TargetGate = seq.target_gate();
    let results: Vec<(f64, ErrorVector)> = (0..n as u64)
        .into_par_iter()
        .map(|i| -> Result<(f64, ErrorVector)> {
            let traj = plan.trajectory(tau, dt, settings.seed, i);
            let u = propagate(seq, &traj)?;
            Ok((entanglement_fidelity(&u, q.matrix())?, error_vector_of(&u, q.matrix())?))
        })
        .collect::<Result<_>>()?;

    let fids: Vec<f64> = results.iter().map(|r| r.0).collect();
    let mean = pairwise_sum(&fids) / n as f64;
    let dev: Vec<f64> = fids.iter().map(|f| (f - mean) * (f - mean)).collect();
    let std_dev = (pairwise_sum(&dev) / (n - 1) as f64).sqrt();
    let avg = |f: &dyn Fn(&ErrorVector) -> f64| {
        let v: Vec<f64> = results.iter().map(|r| f(&r.1)).collect();
        pairwise_sum(&v) / n as f64
    };
    let moments = ErrorMoments {
        mean_norm: avg(&|e| e.norm()),
        second: std::array::from_fn(|i| std::array::from_fn(|j| avg(&|e| e.a[i] * e.a[j]))),
        fourth: std::array::from_fn(|i| std::array::from_fn(|j| avg(&|e| e.a[i] * e.a[i] * e.a[j] * e.a[j]))),
        at_branch: results.iter().filter(|r| r.1.at_branch).count(),
    };
    Ok(EnsembleResult {
        trajectories: n,
        seed: settings.seed,
        dt,
        components: plan.len(),
        mean_fidelity: mean,
        mean_error: 1.0 - mean,
        std_dev,
        std_error: std_dev / (n as f64).sqrt(),
        moments,
        fidelities: settings.retain.then(|| fids.clone()),
        error_vectors: settings.retain.then(|| results.iter().map(|r| r.1.a).collect()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::{preset, PresetParams};

    #[test]
    fn zero_noise_reproduces_the_target() {
        let s = preset("corrected_x", &PresetParams::rate(PI)).unwrap().sequence;
        let r = ensemble_fidelity(&s, &NoiseSpectrum::zero(), &McSettings { trajectories: 4, ..Default::default() })
            .unwrap();
        assert!((r.mean_fidelity - 1.0).abs() < 1e-9);
        assert!(r.std_error < 1e-9);
    }

    #[test]
    fn error_vector_roundtrip() {
        let q = Mat2::rotation(&[1.0, 0.0, 0.0], PI);
        for a in [[0.1, -0.2, 0.3], [0.0, 0.0, 1.2], [-0.7, 0.4, 0.0]] {
            let u = q.mul(&Mat2::exp_pauli(&a)).scale(Complex64::from_polar(1.0, 0.3));
            let e = error_vector_of(&u, &q).unwrap();
            for k in 0..3 {
                assert!((e.a[k] - a[k]).abs() < 1e-12);
            }
            let f = entanglement_fidelity(&u, &q).unwrap();
            assert!((f - e.norm().cos().powi(2)).abs() < 1e-12);
        }
    }

    #[test]
    fn same_seed_same_trajectory() {
        let spec = NoiseSpectrum::white_cutoff(1.0, 10.0).unwrap();
        let a = synthesize_trajectory(&spec, 1.0, 0.01, 7).unwrap();
        let b = synthesize_trajectory(&spec, 1.0, 0.01, 7).unwrap();
        let c = synthesize_trajectory(&spec, 1.0, 0.01, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.phases, c.phases);
    }
}
