//! Average gate fidelity under Gaussian dephasing noise.
//!
//! Second order: `χ = (1/2π) ∫ F₁ S/ω² dω` and `⟨F⟩₂ = ½(e^{−χ} + 1)`.
//! Fourth order: `⟨F⟩₄ = 1 − Σ⟨a₁ᵢ²⟩ − Σ⟨a₂ᵢ²⟩ − 2Σ⟨a₁ᵢa₃ᵢ⟩ + ⅓Σᵢⱼ⟨a₁ᵢ²a₁ⱼ²⟩`.
//!
//! Moments of `a⃗₁` are 1-D frequency integrals refined to `rtol`. The `a₂`, `a₁a₃`
//! moments are 2-D sums over an [`F2Grid`] with exact hat-function weights from the
//! spectrum. `⟨a₁ᵢ²a₁ⱼ²⟩` is assembled from the converged `⟨a₁a₁⟩` matrix through the
//! Gaussian moment theorem; the grid value is kept as a diagnostic.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::control::{preset_by_name, ControlSequence, PresetName, PresetParams};
use crate::error::{Error, Result};
use crate::filters::{control_transform, F2Grid, F2Settings, F2_DEFAULT_POINTS};
use crate::quadrature::{integrate_frequency_n, pairwise_sum, IntegrationSettings};
use crate::spectra::NoiseSpectrum;

/// Lower edge of the 1-D window in units of `1/τ` when the support reaches `ω = 0`.
pub const WINDOW_LO_TAU: f64 = 1e-3;
/// Upper edge of the 1-D window as a multiple of `max(Ω_max, 2π/τ)`.
pub const WINDOW_HI_FACTOR: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FidelitySettings {
    pub integration: IntegrationSettings,
    pub f2: F2Settings,
    /// Log-spaced nodes of the fourth-order grid when none is supplied.
    pub f2_points: usize,
    /// Turn quadrature non-convergence into an error instead of a flag.
    pub strict: bool,
}

impl Default for FidelitySettings {
    fn default() -> Self {
        FidelitySettings {
            integration: IntegrationSettings::default(),
            f2: F2Settings::default(),
            f2_points: F2_DEFAULT_POINTS,
            strict: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Order {
    Second,
    Fourth,
}

/// The part of `[0, ∞)` integrated numerically; the rest is handled by the head
/// trapezoid on `[0, lo]` and the asymptotic tail beyond `hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrequencyWindow {
    pub lo: f64,
    pub hi: f64,
    pub support_lo: f64,
    pub support_hi: f64,
}

pub fn frequency_window(seq: &ControlSequence, spectrum: &NoiseSpectrum) -> Result<FrequencyWindow> {
    let tau = seq.tau();
    let (support_lo, support_hi) = spectrum.support()?;
    let scale = seq.max_rate().max(2.0 * PI / tau);
    // A positive infrared edge is integrated from exactly; a support reaching ω = 0 gets
    // a trapezoid head on [0, lo], where the integrand S|ȳ|² is smooth.
    let lo = if support_lo > 0.0 {
        support_lo
    } else if support_hi.is_finite() {
        (WINDOW_LO_TAU / tau).min(support_hi * 1e-3)
    } else {
        WINDOW_LO_TAU / tau
    };
    let hi = (WINDOW_HI_FACTOR * scale).min(support_hi);
    Ok(FrequencyWindow { lo, hi, support_lo, support_hi })
}

/// `⟨a₁ᵢ a₁ⱼ⟩ = (1/4π) ∫ S(ω)/ω² Re[y₁ᵢ y₁ⱼ*] dω`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentA1 {
    pub matrix: [[f64; 3]; 3],
    pub window: FrequencyWindow,
    /// Largest interval count used on any piece of the window.
    pub intervals: usize,
    pub converged: bool,
}

impl MomentA1 {
    pub fn trace(&self) -> f64 {
        self.matrix[0][0] + self.matrix[1][1] + self.matrix[2][2]
    }

    /// `χ = 2 Σᵢ⟨a₁ᵢ²⟩`.
    pub fn chi(&self) -> f64 {
        2.0 * self.trace()
    }

    /// `⟨a₁ᵢ²a₁ⱼ²⟩ = ⟨a₁ᵢ²⟩⟨a₁ⱼ²⟩ + 2⟨a₁ᵢa₁ⱼ⟩²`.
    pub fn gaussian_fourth(&self) -> [[f64; 3]; 3] {
        let m = &self.matrix;
        std::array::from_fn(|i| std::array::from_fn(|j| m[i][i] * m[j][j] + 2.0 * m[i][j] * m[i][j]))
    }
}

const PAIRS: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)];

fn moment_integrand(seq: &ControlSequence, spectrum: &NoiseSpectrum, omega: f64) -> [f64; 6] {
    let s = spectrum.eval(omega);
    if s == 0.0 {
        return [0.0; 6];
    }
    // S/ω² Re[yᵢyⱼ*] = S Re[ȳᵢȳⱼ*] with ȳ = ∫ s₁ e^{iωt} dt.
    let t = control_transform(seq, omega);
    PAIRS.map(|(i, j)| s * (t[i] * t[j].conj()).re / (4.0 * PI))
}

/// Integrate `f` over `[lo, hi]` split at the spectrum's breakpoints.
fn integrate_pieces<const N: usize>(
    f: &impl Fn(f64) -> [f64; N],
    spectrum: &NoiseSpectrum,
    window: &FrequencyWindow,
    settings: &IntegrationSettings,
) -> Result<([f64; N], usize, bool)> {
    let mut edges = vec![window.lo];
    edges.extend(spectrum.breakpoints(window.lo, window.hi));
    edges.push(window.hi);
    let span = (window.hi / window.lo).ln();
    let mut total = [0.0; N];
    let mut intervals = 0;
    let mut converged = true;
    for e in edges.windows(2) {
        let frac = (e[1] / e[0]).ln() / span;
        let init = ((settings.initial_intervals as f64 * frac).ceil() as usize).max(16);
        let piece = IntegrationSettings { initial_intervals: init, max_intervals: settings.max_intervals.max(init), ..*settings };
        let out = integrate_frequency_n(f, e[0], e[1], &piece)?;
        for (t, v) in total.iter_mut().zip(out.value) {
            *t += v;
        }
        intervals = intervals.max(out.intervals);
        converged &= out.converged;
    }
    Ok((total, intervals, converged))
}

/// [`MomentA1`] from the frequency-domain integral.
pub fn moment_a1(seq: &ControlSequence, spectrum: &NoiseSpectrum, settings: &IntegrationSettings) -> Result<MomentA1> {
    let spectrum = spectrum.resolved(seq.tau());
    spectrum.validate()?;
    let window = frequency_window(seq, &spectrum)?;
    let f = |w: f64| moment_integrand(seq, &spectrum, w);
    let mut total = [0.0; 6];
    let mut intervals = 0;
    let mut converged = true;
    if window.hi > window.lo && !spectrum.is_zero() {
        let (v, n, ok) = integrate_pieces(&f, &spectrum, &window, settings)?;
        total = v;
        intervals = n;
        converged = ok;
        if window.support_lo < window.lo {
            let (a, b) = (f(window.support_lo), f(window.lo));
            for k in 0..6 {
                total[k] += 0.5 * (a[k] + b[k]) * (window.lo - window.support_lo);
            }
        }
        if window.support_hi > window.hi {
            // |ȳᵢȳⱼ| → (sᵢ(0)sⱼ(0) + sᵢ(τ)sⱼ(τ))/ω² once the phase averages out.
            let (s0, s1) = (seq.control_vector(0.0)?, seq.control_vector(seq.tau())?);
            let tail = spectrum.inverse_square_moment(window.hi, window.support_hi)?;
            for (k, &(i, j)) in PAIRS.iter().enumerate() {
                total[k] += tail * (s0[i] * s0[j] + s1[i] * s1[j]) / (4.0 * PI);
            }
        }
    }
    let mut matrix = [[0.0; 3]; 3];
    for (k, &(i, j)) in PAIRS.iter().enumerate() {
        matrix[i][j] = total[k];
        matrix[j][i] = total[k];
    }
    Ok(MomentA1 { matrix, window, intervals, converged })
}

/// `⟨a₁ᵢa₁ⱼ⟩ = ¼ ∫∫ s₁ᵢ(t₂) s₁ⱼ(t₁) g(t₂ − t₁) dt₁ dt₂` by tensor Gauss–Legendre over the
/// segments. `panels_per_segment` must resolve both the control and the correlation time.
pub fn moment_a1_time_domain(
    seq: &ControlSequence,
    spectrum: &NoiseSpectrum,
    panels_per_segment: usize,
) -> Result<[[f64; 3]; 3]> {
    let spectrum = spectrum.resolved(seq.tau());
    let gp = crate::quadrature::GaussPanels::new(8);
    let b = seq.boundaries();
    let mut nodes = Vec::new();
    for j in 0..seq.len() {
        nodes.extend(gp.rule(b[j], b[j + 1], panels_per_segment.max(1)));
    }
    let s: Vec<[f64; 3]> = nodes.iter().map(|(t, _)| seq.control_vector(*t)).collect::<Result<_>>()?;
    let rows: Vec<[[f64; 3]; 3]> = (0..nodes.len())
        .into_par_iter()
        .map(|p| -> Result<[[f64; 3]; 3]> {
            let mut acc = [[0.0; 3]; 3];
            for q in 0..nodes.len() {
                let g = spectrum.autocorrelation((nodes[p].0 - nodes[q].0).abs())?;
                let w = nodes[p].1 * nodes[q].1 * g;
                for i in 0..3 {
                    for j in 0..3 {
                        acc[i][j] += w * s[p][i] * s[q][j];
                    }
                }
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let mut m = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let col: Vec<f64> = rows.iter().map(|r| r[i][j]).collect();
            m[i][j] = 0.25 * pairwise_sum(&col);
        }
    }
    Ok(m)
}

/// `χ(τ)`.
pub fn chi(seq: &ControlSequence, spectrum: &NoiseSpectrum, settings: &IntegrationSettings) -> Result<f64> {
    let m = moment_a1(seq, spectrum, settings)?;
    if !m.converged {
        return Err(Error::NoConvergence { points: m.intervals + 1, previous: f64::NAN, last: m.chi() });
    }
    Ok(m.chi())
}

/// Fourth-order moments: `⟨a₂ᵢ²⟩`, `⟨a₁ᵢa₃ᵢ⟩` and `⟨a₁ᵢ²a₁ⱼ²⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FourthOrderMoments {
    pub a2_sq: [f64; 3],
    pub a1_a3: [f64; 3],
    /// From the Gaussian moment theorem applied to the converged `⟨a₁a₁⟩`.
    pub a1sq_a1sq: [[f64; 3]; 3],
    /// The same quantity summed directly over the grid.
    pub a1sq_a1sq_grid: [[f64; 3]; 3],
}

/// `(⟨a₂ᵢ²⟩, ⟨a₁ᵢa₃ᵢ⟩, ⟨a₁ᵢ²a₁ⱼ²⟩)` as summed over an F₂ grid.
pub type GridMoments = ([f64; 3], [f64; 3], [[f64; 3]; 3]);

/// 2-D grid sums `(1/4π)² Σ_kl w_k w_l K(ω_k, ω_l)` for all three kernel families.
pub fn grid_moments(grid: &F2Grid, spectrum: &NoiseSpectrum) -> Result<GridMoments> {
    let spectrum = spectrum.resolved(grid.tau());
    let w = spectrum.hat_weights(grid.nodes())?;
    let n = grid.len();
    let mut terms_a: [Vec<f64>; 3] = Default::default();
    let mut terms_b: [Vec<f64>; 3] = Default::default();
    let mut terms_c: [[Vec<f64>; 3]; 3] = Default::default();
    for k in 0..n {
        if w[k] == 0.0 {
            continue;
        }
        for l in 0..n {
            if w[l] == 0.0 {
                continue;
            }
            let wt = w[k] * w[l];
            let kk = grid.kernel(k, l);
            for i in 0..3 {
                terms_a[i].push(wt * kk.a[i]);
                terms_b[i].push(wt * kk.b[i]);
                for j in 0..3 {
                    terms_c[i][j].push(wt * kk.c[i][j]);
                }
            }
        }
    }
    let pre = 1.0 / (16.0 * PI * PI);
    Ok((
        std::array::from_fn(|i| pre * pairwise_sum(&terms_a[i])),
        std::array::from_fn(|i| pre * pairwise_sum(&terms_b[i])),
        std::array::from_fn(|i| std::array::from_fn(|j| pre * pairwise_sum(&terms_c[i][j]))),
    ))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct ReportFlags {
    /// `ξ ≥ 1`.
    pub xi_warning: bool,
    /// A frequency integral stopped at its interval cap.
    pub unconverged: bool,
    /// A fidelity fell outside `[½, 1]`, where the truncated series has no meaning.
    pub out_of_regime: bool,
}

impl ReportFlags {
    /// `;`-joined names of the raised flags, empty when none is set.
    pub fn describe(&self) -> String {
        let mut v = Vec::new();
        if self.xi_warning {
            v.push("xi_warning");
        }
        if self.unconverged {
            v.push("unconverged");
        }
        if self.out_of_regime {
            v.push("out_of_regime");
        }
        v.join(";")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FidelityReport {
    pub tau: f64,
    pub variance: f64,
    pub xi: f64,
    pub chi: f64,
    pub fidelity_2nd: f64,
    pub error_2nd: f64,
    pub fidelity_4th: Option<f64>,
    pub error_4th: Option<f64>,
    /// `fidelity_4th − fidelity_2nd`.
    pub difference: Option<f64>,
    pub moments_a1: [[f64; 3]; 3],
    pub fourth: Option<FourthOrderMoments>,
    pub window: FrequencyWindow,
    pub intervals: usize,
    pub f2_points: Option<usize>,
    pub flags: ReportFlags,
}

impl FidelityReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }
}

/// Full report at the requested order. A supplied `grid` must belong to `seq`; without
/// one a default grid is built.
pub fn fidelity(
    seq: &ControlSequence,
    spectrum: &NoiseSpectrum,
    order: Order,
    settings: &FidelitySettings,
    grid: Option<&F2Grid>,
) -> Result<FidelityReport> {
    let tau = seq.tau();
    let spectrum = spectrum.resolved(tau);
    let strength = spectrum.strength(tau)?;
    let m = moment_a1(seq, &spectrum, &settings.integration)?;
    if settings.strict && !m.converged {
        return Err(Error::NoConvergence { points: m.intervals + 1, previous: f64::NAN, last: m.chi() });
    }
    let chi = m.chi();
    let fidelity_2nd = 0.5 * ((-chi).exp() + 1.0);
    let mut flags = ReportFlags { xi_warning: strength.xi_warning, unconverged: !m.converged, out_of_regime: false };
    let in_regime = |f: f64| (0.5..=1.0).contains(&f);
    flags.out_of_regime = !in_regime(fidelity_2nd);

    let (fourth, fidelity_4th, f2_points) = match order {
        Order::Second => (None, None, None),
        Order::Fourth => {
            let owned;
            let grid = match grid {
                Some(g) => {
                    g.check_sequence(seq)?;
                    g
                }
                None => {
                    owned = F2Grid::compute_default(seq, settings.f2_points, &settings.f2)?;
                    &owned
                }
            };
            let (a2_sq, a1_a3, c_grid) = grid_moments(grid, &spectrum)?;
            let fm = FourthOrderMoments { a2_sq, a1_a3, a1sq_a1sq: m.gaussian_fourth(), a1sq_a1sq_grid: c_grid };
            let f4 = 1.0 - m.trace() - a2_sq.iter().sum::<f64>() - 2.0 * a1_a3.iter().sum::<f64>()
                + fm.a1sq_a1sq.iter().flatten().sum::<f64>() / 3.0;
            flags.out_of_regime |= !in_regime(f4);
            (Some(fm), Some(f4), Some(grid.len()))
        }
    };
    Ok(FidelityReport {
        tau,
        variance: strength.variance,
        xi: strength.xi,
        chi,
        fidelity_2nd,
        error_2nd: 1.0 - fidelity_2nd,
        fidelity_4th,
        error_4th: fidelity_4th.map(|f| 1.0 - f),
        difference: fidelity_4th.map(|f| f - fidelity_2nd),
        moments_a1: m.matrix,
        fourth,
        window: m.window,
        intervals: m.intervals,
        f2_points,
        flags,
    })
}

pub fn fidelity_second_order(seq: &ControlSequence, spectrum: &NoiseSpectrum) -> Result<FidelityReport> {
    fidelity(seq, spectrum, Order::Second, &FidelitySettings::default(), None)
}

pub fn fidelity_fourth_order(
    seq: &ControlSequence,
    spectrum: &NoiseSpectrum,
    grid: Option<&F2Grid>,
) -> Result<FidelityReport> {
    fidelity(seq, spectrum, Order::Fourth, &FidelitySettings::default(), grid)
}

/// A sweep over the π-pulse time `τ_x`: every variant runs at `Ω = π/τ_x`, and presets
/// that need a duration get `τ = tau_ratio · τ_x`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub variants: Vec<PresetName>,
    pub tau_x: Vec<f64>,
    pub tau_ratio: f64,
    pub order: Order,
    pub settings: FidelitySettings,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub variant: PresetName,
    pub tau_x: f64,
    pub tau: f64,
    pub xi: f64,
    pub chi: f64,
    pub error_2nd: f64,
    pub error_4th: Option<f64>,
    pub flags: ReportFlags,
}

/// Rows ordered by variant, then by `τ_x` as given. The fourth-order grid of each
/// variant is computed once and rescaled to every other `τ_x`.
pub fn error_sweep(config: &SweepConfig, spectrum: &NoiseSpectrum) -> Result<Vec<SweepRow>> {
    if config.tau_x.is_empty() {
        return Err(Error::InvalidConfig("sweep needs at least one tau_x".into()));
    }
    if let Some(t) = config.tau_x.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
        return Err(Error::InvalidConfig(format!("tau_x must be positive, got {t}")));
    }
    let mut rows = Vec::new();
    for &variant in &config.variants {
        let t0 = config.tau_x[0];
        let base = preset_by_name(variant, &PresetParams::rate_tau(PI / t0, config.tau_ratio * t0))?.sequence;
        let grid = match config.order {
            Order::Fourth => Some(F2Grid::compute_default(&base, config.settings.f2_points, &config.settings.f2)?),
            Order::Second => None,
        };
        let variant_rows: Vec<SweepRow> = config
            .tau_x
            .par_iter()
            .map(|&tx| -> Result<SweepRow> {
                let factor = tx / t0;
                let seq = base.time_scaled(factor)?;
                let scaled = grid.as_ref().map(|g| g.rescaled(&seq, factor)).transpose()?;
                let r = fidelity(&seq, spectrum, config.order, &config.settings, scaled.as_ref())?;
                Ok(SweepRow {
                    variant,
                    tau_x: tx,
                    tau: r.tau,
                    xi: r.xi,
                    chi: r.chi,
                    error_2nd: r.error_2nd,
                    error_4th: r.error_4th,
                    flags: r.flags,
                })
            })
            .collect::<Result<_>>()?;
        rows.extend(variant_rows);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::preset;

    #[test]
    fn zero_spectrum_gives_unit_fidelity() {
        let s = preset("corrected_x", &PresetParams::rate(PI)).unwrap().sequence;
        let r = fidelity_fourth_order(&s, &NoiseSpectrum::zero(), None).unwrap();
        assert_eq!(r.fidelity_2nd, 1.0);
        assert_eq!(r.fidelity_4th, Some(1.0));
    }

    #[test]
    fn white_noise_chi_is_half_alpha_tau() {
        let s = preset("free", &PresetParams::tau(2.0)).unwrap().sequence;
        let spec = NoiseSpectrum::white_cutoff(0.01, 1e5).unwrap();
        let c = chi(&s, &spec, &IntegrationSettings::default()).unwrap();
        assert!((c - 0.01).abs() < 1e-5 * 0.01, "{c}");
    }

    #[test]
    fn grid_mismatch_is_rejected() {
        let a = preset("primitive_x", &PresetParams::rate(PI)).unwrap().sequence;
        let b = preset("primitive_y", &PresetParams::rate(PI)).unwrap().sequence;
        let nodes = [0.0, 1.0, 2.0];
        let g = F2Grid::compute(&a, &nodes, &F2Settings::default()).unwrap();
        let spec = NoiseSpectrum::white_cutoff(0.01, 10.0).unwrap();
        assert!(matches!(fidelity_fourth_order(&b, &spec, Some(&g)), Err(Error::GridMismatch(_))));
    }
}
