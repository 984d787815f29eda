//! One-sided noise power spectral densities.
//!
//! Convention: `g(Δt) = ⟨η(t)η(t+Δt)⟩ = (1/π) ∫₀^∞ S(ω) cos(ωΔt) dω`, so the variance
//! is `Δη² = (1/π) ∫₀^∞ S(ω) dω`. Every prefactor downstream follows from this.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{pairwise_sum, GaussPanels};

/// Default infrared cutoff for power-law spectra, in units of `1/τ`.
pub const DEFAULT_OMEGA_MIN_TAU: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum NoiseSpectrum {
    /// `α/ω^p` on `[ω_min, ω_max]`. A missing `ω_min` is filled from `τ` by
    /// [`NoiseSpectrum::resolved`]; a missing `ω_max` means no upper cutoff.
    PowerLaw {
        alpha: f64,
        exponent: f64,
        omega_min: Option<f64>,
        omega_max: Option<f64>,
    },
    /// `α Θ(ω_c − ω)`.
    WhiteCutoff { alpha: f64, omega_c: f64 },
    /// Linear interpolation between `(ω, S)` points, zero outside.
    Tabulated { points: Vec<[f64; 2]> },
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum SpectrumFile {
    PowerLaw {
        alpha: f64,
        exponent: f64,
        #[serde(default)]
        omega_min: Option<f64>,
        #[serde(default)]
        omega_max: Option<f64>,
    },
    WhiteCutoff {
        alpha: f64,
        omega_c: f64,
    },
    Tabulated {
        #[serde(default)]
        points: Option<Vec<[f64; 2]>>,
        #[serde(default)]
        csv: Option<String>,
    },
}

/// `Δη²`, `Δη` and `ξ = Δη τ/2` for a given duration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoiseStrength {
    pub variance: f64,
    pub rms: f64,
    pub xi: f64,
    /// Set when `ξ ≥ 1`, where the perturbative series is not expected to converge.
    pub xi_warning: bool,
}

impl NoiseSpectrum {
    pub fn power_law(alpha: f64, exponent: f64, omega_min: Option<f64>, omega_max: Option<f64>) -> Result<Self> {
        let s = NoiseSpectrum::PowerLaw { alpha, exponent, omega_min, omega_max };
        s.validate()?;
        Ok(s)
    }

    pub fn white_cutoff(alpha: f64, omega_c: f64) -> Result<Self> {
        let s = NoiseSpectrum::WhiteCutoff { alpha, omega_c };
        s.validate()?;
        Ok(s)
    }

    pub fn tabulated(points: Vec<[f64; 2]>) -> Result<Self> {
        let s = NoiseSpectrum::Tabulated { points };
        s.validate()?;
        Ok(s)
    }

    /// The zero spectrum.
    pub fn zero() -> Self {
        NoiseSpectrum::WhiteCutoff { alpha: 0.0, omega_c: 1.0 }
    }

    /// Parse the spectrum JSON schema. A tabulated `csv` path is resolved against `base`.
    pub fn from_json(text: &str, base: Option<&Path>) -> Result<Self> {
        let file: SpectrumFile =
            serde_json::from_str(text).map_err(|e| Error::InvalidSpectrum(format!("bad spectrum JSON: {e}")))?;
        match file {
            SpectrumFile::PowerLaw { alpha, exponent, omega_min, omega_max } => {
                Self::power_law(alpha, exponent, omega_min, omega_max)
            }
            SpectrumFile::WhiteCutoff { alpha, omega_c } => Self::white_cutoff(alpha, omega_c),
            SpectrumFile::Tabulated { points: Some(p), csv: None } => Self::tabulated(p),
            SpectrumFile::Tabulated { points: None, csv: Some(path) } => {
                let path = match base {
                    Some(b) => b.join(path),
                    None => path.into(),
                };
                Self::from_csv_path(&path)
            }
            SpectrumFile::Tabulated { .. } => {
                Err(Error::InvalidSpectrum("tabulated spectrum needs exactly one of `points` or `csv`".into()))
            }
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("spectrum serialises")
    }

    pub fn from_csv_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidSpectrum(format!("cannot read {}: {e}", path.display())))?;
        Self::from_csv_str(&text)
    }

    /// Two-column `omega,S` table. `#` comments and one non-numeric header line are skipped.
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut points = Vec::new();
        let mut header_seen = false;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split([',', ';', '\t', ' ']).filter(|c| !c.is_empty()).collect();
            if cols.len() < 2 {
                return Err(Error::InvalidSpectrum(format!("line {}: expected two columns", lineno + 1)));
            }
            match (cols[0].parse::<f64>(), cols[1].parse::<f64>()) {
                (Ok(w), Ok(s)) => points.push([w, s]),
                _ if !header_seen && points.is_empty() => header_seen = true,
                _ => return Err(Error::InvalidSpectrum(format!("line {}: not numeric", lineno + 1))),
            }
        }
        Self::tabulated(points)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSpectrum(m));
        match self {
            NoiseSpectrum::PowerLaw { alpha, exponent, omega_min, omega_max } => {
                if !(alpha.is_finite() && *alpha >= 0.0) {
                    return bad(format!("power_law alpha must be finite and ≥ 0, got {alpha}"));
                }
                if !exponent.is_finite() {
                    return bad("power_law exponent must be finite".into());
                }
                if let Some(lo) = omega_min {
                    if !(lo.is_finite() && *lo >= 0.0) {
                        return bad(format!("omega_min must be finite and ≥ 0, got {lo}"));
                    }
                    if *lo == 0.0 && *exponent > 0.0 {
                        return bad("power_law with positive exponent needs omega_min > 0".into());
                    }
                }
                if let Some(hi) = omega_max {
                    if !(hi.is_finite() && *hi > omega_min.unwrap_or(0.0)) {
                        return bad(format!("omega_max must be finite and above omega_min, got {hi}"));
                    }
                }
                Ok(())
            }
            NoiseSpectrum::WhiteCutoff { alpha, omega_c } => {
                if !(alpha.is_finite() && *alpha >= 0.0) {
                    return bad(format!("white_cutoff alpha must be finite and ≥ 0, got {alpha}"));
                }
                if !(omega_c.is_finite() && *omega_c > 0.0) {
                    return bad(format!("white_cutoff omega_c must be positive, got {omega_c}"));
                }
                Ok(())
            }
            NoiseSpectrum::Tabulated { points } => {
                if points.len() < 2 {
                    return bad("tabulated spectrum needs at least two points".into());
                }
                for p in points {
                    if !(p[0].is_finite() && p[0] >= 0.0 && p[1].is_finite() && p[1] >= 0.0) {
                        return bad(format!("tabulated point ({}, {}) must be finite and non-negative", p[0], p[1]));
                    }
                }
                if points.windows(2).any(|w| !(w[1][0] > w[0][0])) {
                    return bad("tabulated frequencies must be strictly increasing".into());
                }
                Ok(())
            }
        }
    }

    /// Fill a missing power-law infrared cutoff with `10⁻³/τ`.
    pub fn resolved(&self, tau: f64) -> Self {
        match self {
            NoiseSpectrum::PowerLaw { alpha, exponent, omega_min: None, omega_max } if *exponent > 0.0 => {
                NoiseSpectrum::PowerLaw {
                    alpha: *alpha,
                    exponent: *exponent,
                    omega_min: Some(DEFAULT_OMEGA_MIN_TAU / tau),
                    omega_max: *omega_max,
                }
            }
            other => other.clone(),
        }
    }

    /// Same shape with the amplitude multiplied by `factor ≥ 0`.
    pub fn scaled(&self, factor: f64) -> Self {
        match self {
            NoiseSpectrum::PowerLaw { alpha, exponent, omega_min, omega_max } => NoiseSpectrum::PowerLaw {
                alpha: alpha * factor,
                exponent: *exponent,
                omega_min: *omega_min,
                omega_max: *omega_max,
            },
            NoiseSpectrum::WhiteCutoff { alpha, omega_c } => {
                NoiseSpectrum::WhiteCutoff { alpha: alpha * factor, omega_c: *omega_c }
            }
            NoiseSpectrum::Tabulated { points } => {
                NoiseSpectrum::Tabulated { points: points.iter().map(|p| [p[0], p[1] * factor]).collect() }
            }
        }
    }

    /// True when `S ≡ 0`.
    pub fn is_zero(&self) -> bool {
        match self {
            NoiseSpectrum::PowerLaw { alpha, .. } | NoiseSpectrum::WhiteCutoff { alpha, .. } => *alpha == 0.0,
            NoiseSpectrum::Tabulated { points } => points.iter().all(|p| p[1] == 0.0),
        }
    }

    fn missing_cutoff() -> Error {
        Error::Divergent(
            "power-law spectrum without omega_min; set an infrared cutoff (default 1e-3/τ is applied when τ is known)"
                .into(),
        )
    }

    /// `[lo, hi]` outside which `S = 0`; `hi` may be infinite.
    pub fn support(&self) -> Result<(f64, f64)> {
        match self {
            NoiseSpectrum::PowerLaw { exponent, omega_min, omega_max, .. } => {
                let lo = match omega_min {
                    Some(lo) => *lo,
                    None if *exponent > 0.0 => return Err(Self::missing_cutoff()),
                    None => 0.0,
                };
                Ok((lo, omega_max.unwrap_or(f64::INFINITY)))
            }
            NoiseSpectrum::WhiteCutoff { omega_c, .. } => Ok((0.0, *omega_c)),
            NoiseSpectrum::Tabulated { points } => Ok((points[0][0], points[points.len() - 1][0])),
        }
    }

    /// `S(ω)`; zero outside the support.
    pub fn evaluate(&self, omega: f64) -> Result<f64> {
        if omega < 0.0 || omega.is_nan() {
            return Err(Error::NegativeFrequency(omega));
        }
        Ok(self.eval(omega))
    }

    /// [`Self::evaluate`] for callers that already guarantee `ω ≥ 0`.
    pub fn eval(&self, omega: f64) -> f64 {
        match self {
            NoiseSpectrum::PowerLaw { alpha, exponent, omega_min, omega_max } => {
                let lo = omega_min.unwrap_or(0.0);
                if omega < lo || omega_max.is_some_and(|hi| omega > hi) {
                    return 0.0;
                }
                if *exponent == 0.0 {
                    *alpha
                } else if omega == 0.0 {
                    // only reachable when exponent < 0
                    0.0
                } else {
                    alpha * omega.powf(-exponent)
                }
            }
            NoiseSpectrum::WhiteCutoff { alpha, omega_c } => {
                if omega <= *omega_c {
                    *alpha
                } else {
                    0.0
                }
            }
            NoiseSpectrum::Tabulated { points } => {
                let n = points.len();
                if omega < points[0][0] || omega > points[n - 1][0] {
                    return 0.0;
                }
                let k = points.partition_point(|p| p[0] <= omega).clamp(1, n - 1);
                let ([w0, s0], [w1, s1]) = (points[k - 1], points[k]);
                s0 + (s1 - s0) * (omega - w0) / (w1 - w0)
            }
        }
    }

    /// Exact `∫_a^b S(ω) dω` (clipped to the support).
    pub fn band_power(&self, a: f64, b: f64) -> Result<f64> {
        if a < 0.0 {
            return Err(Error::NegativeFrequency(a));
        }
        if !(b > a) {
            return Ok(0.0);
        }
        let (lo, hi) = self.support()?;
        let (a, b) = (a.max(lo), b.min(hi));
        if !(b > a) {
            return Ok(0.0);
        }
        match self {
            NoiseSpectrum::PowerLaw { alpha, exponent, .. } => {
                if *alpha == 0.0 {
                    return Ok(0.0);
                }
                let p = *exponent;
                if b.is_infinite() {
                    if p <= 1.0 {
                        return Err(Error::Divergent(format!(
                            "∫S dω diverges at high frequency for exponent {p} ≤ 1 without omega_max"
                        )));
                    }
                    return Ok(alpha * a.powf(1.0 - p) / (p - 1.0));
                }
                if (p - 1.0).abs() < 1e-12 {
                    Ok(alpha * (b / a).ln())
                } else {
                    Ok(alpha * (b.powf(1.0 - p) - a.powf(1.0 - p)) / (1.0 - p))
                }
            }
            NoiseSpectrum::WhiteCutoff { alpha, .. } => Ok(alpha * (b - a)),
            NoiseSpectrum::Tabulated { points } => {
                let mut total = Vec::new();
                for w in points.windows(2) {
                    let (x0, x1) = (w[0][0].max(a), w[1][0].min(b));
                    if x1 > x0 {
                        let (s0, s1) = (self.eval(x0), self.eval(x1));
                        total.push(0.5 * (s0 + s1) * (x1 - x0));
                    }
                }
                Ok(pairwise_sum(&total))
            }
        }
    }

    /// Exact `∫_a^b ω S(ω) dω`.
    pub fn first_moment(&self, a: f64, b: f64) -> Result<f64> {
        if a < 0.0 {
            return Err(Error::NegativeFrequency(a));
        }
        let (lo, hi) = self.support()?;
        let (a, b) = (a.max(lo), b.min(hi));
        if !(b > a) {
            return Ok(0.0);
        }
        if b.is_infinite() {
            return Err(Error::Divergent("first moment over an unbounded band".into()));
        }
        match self {
            NoiseSpectrum::PowerLaw { alpha, exponent, .. } => {
                let q = 2.0 - exponent;
                if q.abs() < 1e-12 {
                    Ok(alpha * (b / a).ln())
                } else {
                    Ok(alpha * (b.powf(q) - a.powf(q)) / q)
                }
            }
            NoiseSpectrum::WhiteCutoff { alpha, .. } => Ok(0.5 * alpha * (b * b - a * a)),
            NoiseSpectrum::Tabulated { points } => {
                let mut total = Vec::new();
                for w in points.windows(2) {
                    let (x0, x1) = (w[0][0].max(a), w[1][0].min(b));
                    if x1 > x0 {
                        let (s0, s1) = (self.eval(x0), self.eval(x1));
                        // ∫ ω S over a linear piece
                        total.push((x1 - x0) * (s0 * (2.0 * x0 + x1) + s1 * (x0 + 2.0 * x1)) / 6.0);
                    }
                }
                Ok(pairwise_sum(&total))
            }
        }
    }

    /// Exact `∫_a^b S(ω)/ω² dω` for `a > 0`; `b` may be infinite.
    pub fn inverse_square_moment(&self, a: f64, b: f64) -> Result<f64> {
        if !(a > 0.0) {
            return Err(Error::InvalidConfig(format!("inverse square moment needs a > 0, got {a}")));
        }
        let (lo, hi) = self.support()?;
        let (a, b) = (a.max(lo), b.min(hi));
        if !(b > a) {
            return Ok(0.0);
        }
        match self {
            NoiseSpectrum::PowerLaw { alpha, exponent, .. } => {
                let q = exponent + 1.0;
                if b.is_infinite() {
                    if q <= 0.0 {
                        return Err(Error::Divergent(format!("∫S/ω² diverges for exponent {exponent}")));
                    }
                    return Ok(alpha * a.powf(-q) / q);
                }
                if q.abs() < 1e-12 {
                    Ok(alpha * (b / a).ln())
                } else {
                    Ok(alpha * (a.powf(-q) - b.powf(-q)) / q)
                }
            }
            NoiseSpectrum::WhiteCutoff { alpha, .. } => Ok(alpha * (1.0 / a - 1.0 / b)),
            NoiseSpectrum::Tabulated { points } => {
                let mut total = Vec::new();
                for w in points.windows(2) {
                    let (x0, x1) = (w[0][0].max(a), w[1][0].min(b));
                    if x1 > x0 {
                        let (s0, s1) = (self.eval(x0), self.eval(x1));
                        let m = (s1 - s0) / (x1 - x0);
                        let c = s0 - m * x0;
                        total.push(c * (1.0 / x0 - 1.0 / x1) + m * (x1 / x0).ln());
                    }
                }
                Ok(pairwise_sum(&total))
            }
        }
    }

    /// Weights `w_k = ∫ S(ω) φ_k(ω) dω` for the piecewise-linear hat functions on
    /// increasing `nodes`, so `∫ S K dω ≈ Σ w_k K(ω_k)` is exact in `S` and second order
    /// in `K`. Power beyond the last node is dropped.
    pub fn hat_weights(&self, nodes: &[f64]) -> Result<Vec<f64>> {
        let mut w = vec![0.0; nodes.len()];
        for k in 0..nodes.len().saturating_sub(1) {
            let (x0, x1) = (nodes[k], nodes[k + 1]);
            let p = self.band_power(x0, x1)?;
            if p == 0.0 {
                continue;
            }
            let q = self.first_moment(x0, x1)?;
            let d = x1 - x0;
            w[k] += ((x1 * p - q) / d).max(0.0);
            w[k + 1] += ((q - x0 * p) / d).max(0.0);
        }
        Ok(w)
    }

    /// Frequencies where `S` or its slope jumps, inside `(lo, hi)`.
    pub fn breakpoints(&self, lo: f64, hi: f64) -> Vec<f64> {
        let raw: Vec<f64> = match self {
            NoiseSpectrum::PowerLaw { omega_min, omega_max, .. } => {
                omega_min.iter().chain(omega_max.iter()).copied().collect()
            }
            NoiseSpectrum::WhiteCutoff { omega_c, .. } => vec![*omega_c],
            NoiseSpectrum::Tabulated { points } => points.iter().map(|p| p[0]).collect(),
        };
        raw.into_iter().filter(|&x| x > lo && x < hi).collect()
    }

    /// `Δη² = (1/π) ∫₀^∞ S dω`.
    pub fn variance(&self) -> Result<f64> {
        if self.is_zero() {
            return Ok(0.0);
        }
        Ok(self.band_power(0.0, f64::INFINITY)? / PI)
    }

    pub fn strength(&self, tau: f64) -> Result<NoiseStrength> {
        let variance = self.variance()?;
        let rms = variance.sqrt();
        let xi = rms * tau / 2.0;
        Ok(NoiseStrength { variance, rms, xi, xi_warning: xi >= 1.0 })
    }

    /// `ξ = Δη τ/2`.
    pub fn xi(&self, tau: f64) -> Result<f64> {
        Ok(self.strength(tau)?.xi)
    }

    /// Breakpoints of the support used to place quadrature panels.
    fn panel_breaks(&self, lag: f64) -> Result<Vec<f64>> {
        let (lo, hi) = self.support()?;
        let hi = if hi.is_finite() {
            hi
        } else {
            // Truncate where the remaining power is negligible.
            let NoiseSpectrum::PowerLaw { exponent, .. } = self else { unreachable!() };
            let p = *exponent;
            if p <= 1.0 {
                return Err(Error::Divergent(format!("autocorrelation undefined for exponent {p} ≤ 1 without omega_max")));
            }
            lo.max(1e-300) * 1e12f64.powf(1.0 / (p - 1.0))
        };
        let mut breaks = match self {
            NoiseSpectrum::Tabulated { points } => points.iter().map(|p| p[0]).collect(),
            NoiseSpectrum::PowerLaw { .. } if lo > 0.0 => {
                let mut v = vec![lo];
                let mut w = lo;
                while w * 2.0 < hi {
                    w *= 2.0;
                    v.push(w);
                }
                v.push(hi);
                v
            }
            _ => vec![lo, hi],
        };
        // Keep each panel under ~2 rad of phase.
        let mut refined = vec![breaks[0]];
        for w in breaks.windows(2) {
            let pieces = ((w[1] - w[0]) * lag / 2.0).ceil().max(1.0) as usize;
            let h = (w[1] - w[0]) / pieces as f64;
            for k in 1..pieces {
                refined.push(w[0] + h * k as f64);
            }
            refined.push(w[1]);
        }
        breaks = refined;
        Ok(breaks)
    }

    /// `g(Δt) = (1/π) ∫₀^∞ S(ω) cos(ωΔt) dω`; closed form for white cutoff, Gauss–Legendre
    /// panels otherwise.
    pub fn autocorrelation(&self, lag: f64) -> Result<f64> {
        if self.is_zero() {
            return Ok(0.0);
        }
        let lag = lag.abs();
        if let NoiseSpectrum::WhiteCutoff { alpha, omega_c } = self {
            return Ok(if lag * omega_c < 1e-8 {
                alpha * omega_c / PI * (1.0 - (lag * omega_c).powi(2) / 6.0)
            } else {
                alpha / PI * (omega_c * lag).sin() / lag
            });
        }
        let breaks = self.panel_breaks(lag)?;
        let gp = GaussPanels::new(16);
        let mut parts = Vec::with_capacity(breaks.len());
        for w in breaks.windows(2) {
            parts.push(gp.integrate(w[0], w[1], 1, |x| self.eval(x) * (x * lag).cos()));
        }
        Ok(pairwise_sum(&parts) / PI)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn white_cutoff_values() {
        let s = NoiseSpectrum::white_cutoff(2.0, 5.0).unwrap();
        assert_eq!(s.evaluate(1.0).unwrap(), 2.0);
        assert_eq!(s.evaluate(6.0).unwrap(), 0.0);
        assert!(matches!(s.evaluate(-1.0), Err(Error::NegativeFrequency(_))));
        assert!((s.variance().unwrap() - 10.0 / PI).abs() < 1e-15);
    }

    #[test]
    fn power_law_values() {
        let s = NoiseSpectrum::power_law(3.0, 2.0, Some(0.1), Some(10.0)).unwrap();
        assert!((s.evaluate(2.0).unwrap() - 0.75).abs() < 1e-15);
        assert_eq!(s.evaluate(0.05).unwrap(), 0.0);
        let expect = 3.0 / PI * (1.0 / 0.1 - 1.0 / 10.0);
        assert!((s.variance().unwrap() - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn power_law_needs_infrared_cutoff() {
        assert!(NoiseSpectrum::power_law(1.0, 2.0, Some(0.0), None).is_err());
        let s = NoiseSpectrum::power_law(1.0, 2.0, None, None).unwrap();
        assert!(matches!(s.variance(), Err(Error::Divergent(_))));
        let r = s.resolved(10.0);
        assert!((r.variance().unwrap() - 1.0 / PI / 1e-4).abs() < 1e-6);
        let flat = NoiseSpectrum::power_law(1.0, 0.5, Some(1.0), None).unwrap();
        assert!(matches!(flat.variance(), Err(Error::Divergent(_))));
    }

    #[test]
    fn tabulated_interpolates() {
        let s = NoiseSpectrum::tabulated(vec![[1.0, 2.0], [3.0, 6.0]]).unwrap();
        assert!((s.evaluate(2.0).unwrap() - 4.0).abs() < 1e-15);
        assert_eq!(s.evaluate(0.5).unwrap(), 0.0);
        assert_eq!(s.evaluate(3.5).unwrap(), 0.0);
        assert!((s.band_power(0.0, 10.0).unwrap() - 8.0).abs() < 1e-14);
        assert!(NoiseSpectrum::tabulated(vec![[1.0, 2.0], [1.0, 6.0]]).is_err());
        assert!(NoiseSpectrum::tabulated(vec![[1.0, -2.0], [2.0, 6.0]]).is_err());
    }

    #[test]
    fn zero_spectrum() {
        let s = NoiseSpectrum::zero();
        assert_eq!(s.variance().unwrap(), 0.0);
        assert_eq!(s.xi(3.0).unwrap(), 0.0);
        assert_eq!(s.autocorrelation(0.4).unwrap(), 0.0);
    }

    #[test]
    fn xi_boundary_and_linearity() {
        // αω_c/π = 4
        let s = NoiseSpectrum::white_cutoff(4.0 * PI, 1.0).unwrap();
        let st = s.strength(1.0).unwrap();
        assert!((st.xi - 1.0).abs() < 1e-15);
        assert!(st.xi_warning);
        assert!((s.xi(2.0).unwrap() - 2.0 * s.xi(1.0).unwrap()).abs() < 1e-15);
        assert!(!s.strength(0.5).unwrap().xi_warning);
    }

    #[test]
    fn json_and_csv() {
        let s = NoiseSpectrum::from_json(r#"{"type":"white_cutoff","alpha":1.5,"omega_c":20}"#, None).unwrap();
        assert_eq!(s, NoiseSpectrum::white_cutoff(1.5, 20.0).unwrap());
        assert_eq!(NoiseSpectrum::from_json(&s.to_json(), None).unwrap(), s);
        let p = NoiseSpectrum::from_json(r#"{"type":"power_law","alpha":1,"exponent":2,"omega_min":0.01}"#, None).unwrap();
        assert_eq!(NoiseSpectrum::from_json(&p.to_json(), None).unwrap(), p);
        let t = NoiseSpectrum::from_csv_str("# comment\nomega,S\n0,1\n1,1\n2,0\n").unwrap();
        assert!((t.variance().unwrap() - 1.5 / PI).abs() < 1e-15);
        assert!(NoiseSpectrum::from_json(r#"{"type":"pink"}"#, None).is_err());
        assert!(NoiseSpectrum::from_json(r#"{"type":"tabulated"}"#, None).is_err());
    }

    #[test]
    fn autocorrelation_zero_lag_is_variance() {
        let specs = [
            NoiseSpectrum::power_law(1.0, 2.0, Some(0.5), Some(40.0)).unwrap(),
            NoiseSpectrum::power_law(2.0, 1.0, Some(0.1), Some(10.0)).unwrap(),
            NoiseSpectrum::tabulated(vec![[0.0, 1.0], [2.0, 3.0], [5.0, 0.0]]).unwrap(),
            NoiseSpectrum::white_cutoff(1.0, 7.0).unwrap(),
        ];
        for s in &specs {
            let g0 = s.autocorrelation(0.0).unwrap();
            let v = s.variance().unwrap();
            assert!((g0 - v).abs() < 1e-6 * v, "{s:?}: {g0} vs {v}");
        }
    }

    #[test]
    fn autocorrelation_white_closed_form_vs_quadrature() {
        // Same spectrum as a two-point table: the quadrature route must reproduce sin(ω_cΔ)/Δ.
        let (alpha, wc) = (1.3, 9.0);
        let table = NoiseSpectrum::tabulated(vec![[0.0, alpha], [wc, alpha]]).unwrap();
        let white = NoiseSpectrum::white_cutoff(alpha, wc).unwrap();
        for &lag in &[0.05, 0.3, 1.0, 2.7] {
            let oracle = alpha / PI * (wc * lag).sin() / lag;
            let q = table.autocorrelation(lag).unwrap();
            let c = white.autocorrelation(lag).unwrap();
            assert!((q - oracle).abs() < 1e-6 * oracle.abs().max(1e-3), "{lag}");
            assert!((c - oracle).abs() < 1e-12);
        }
    }

    #[test]
    fn first_moment_matches_quadrature() {
        let specs = [
            NoiseSpectrum::power_law(2.0, 1.0, Some(0.1), Some(50.0)).unwrap(),
            NoiseSpectrum::power_law(2.0, 2.0, Some(0.1), Some(50.0)).unwrap(),
            NoiseSpectrum::white_cutoff(3.0, 7.0).unwrap(),
            NoiseSpectrum::tabulated(vec![[0.0, 1.0], [2.0, 3.0], [5.0, 0.5]]).unwrap(),
        ];
        let gp = GaussPanels::new(16);
        for s in &specs {
            let (a, b) = (0.3, 4.5);
            let brk = s.breakpoints(a, b);
            let mut edges = vec![a];
            edges.extend(brk);
            edges.push(b);
            let q: f64 = edges.windows(2).map(|e| gp.integrate(e[0], e[1], 64, |w| w * s.eval(w))).sum();
            let exact = s.first_moment(a, b).unwrap();
            assert!((q - exact).abs() < 1e-12 * exact.abs(), "{s:?}: {q} vs {exact}");
            let q: f64 = edges.windows(2).map(|e| gp.integrate(e[0], e[1], 64, |w| s.eval(w) / (w * w))).sum();
            let exact = s.inverse_square_moment(a, b).unwrap();
            assert!((q - exact).abs() < 1e-12 * exact.abs(), "{s:?}: {q} vs {exact}");
        }
    }

    #[test]
    fn hat_weights_integrate_linear_kernels_exactly() {
        let s = NoiseSpectrum::tabulated(vec![[0.0, 1.0], [2.0, 3.0], [5.0, 0.5]]).unwrap();
        let nodes = [0.0, 0.7, 1.9, 3.3, 5.0];
        let w = s.hat_weights(&nodes).unwrap();
        // K(ω) = 2 − 0.3ω is linear, so Σ w_k K_k = ∫ S K.
        let lhs: f64 = w.iter().zip(&nodes).map(|(w, x)| w * (2.0 - 0.3 * x)).sum();
        let rhs = 2.0 * s.band_power(0.0, 5.0).unwrap() - 0.3 * s.first_moment(0.0, 5.0).unwrap();
        assert!((lhs - rhs).abs() < 1e-12);
        assert!(w.iter().all(|x| *x >= 0.0));
    }
}
