//! First- and fourth-order filter functions.
//!
//! `y₁,ₗ(ω) = −iω ∫₀^τ s₁,ₗ(t) e^{iωt} dt` and `F₁ = Σₗ |y₁,ₗ|²`. Three routes
//! compute `y₁`:
//!
//! * [`y1_closed_form`]: the piecewise π-pulse sums with parity signs;
//! * [`y1_segmentwise`]: exact per-segment Fourier integrals of the harmonic form of
//!   `s₁`, valid for any rotation angle;
//! * [`y1_numeric`]: Gauss–Legendre quadrature of `s₁` built from rotation matrices,
//!   used as the independent reference.
//!
//! The fourth-order terms `y₂`, `y₃` are products of nested time integrals evaluated
//! by cumulative transforms on a segment-aligned grid, with one Richardson step.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::control::{Axis, ControlSequence};
use crate::error::{Error, Result};
use crate::geometry::Z_HAT;
use crate::quadrature::{phase_ratio, FrequencyGrid, GaussPanels, TimeGrid};

/// Relative half-width of the window `|ω² − Ω²| < ε Ω²` where the closed form switches
/// to its resonant limit.
pub const RESONANCE_EPS: f64 = 1e-6;

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

fn check_omega(omega: f64) -> Result<()> {
    if omega < 0.0 || omega.is_nan() {
        return Err(Error::NegativeFrequency(omega));
    }
    Ok(())
}

/// `y⃗₁(ω)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Y1 {
    pub omega: f64,
    pub components: [Complex64; 3],
}

impl Y1 {
    pub fn f1(&self) -> F1 {
        let components = self.components.map(|c| c.norm_sqr());
        F1 { omega: self.omega, total: components.iter().sum(), components }
    }

    pub fn conj(&self) -> Y1 {
        Y1 { omega: -self.omega, components: self.components.map(|c| c.conj()) }
    }

    /// Euclidean distance between two complex 3-vectors.
    pub fn distance(&self, other: &Y1) -> f64 {
        self.components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn norm(&self) -> f64 {
        self.components.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// `F₁(ω)` and its Cartesian parts `F₁,ₗ = |y₁,ₗ|²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct F1 {
    pub omega: f64,
    pub total: f64,
    pub components: [f64; 3],
}

/// Exact `∫₀^τ s⃗₁(t) e^{iωt} dt` from the per-segment harmonic form. Any sign of `ω`.
pub fn control_transform(seq: &ControlSequence, omega: f64) -> [Complex64; 3] {
    let mut out = [ZERO; 3];
    for h in seq.harmonics() {
        let d = h.duration;
        let phase = Complex64::from_polar(1.0, omega * h.start);
        let e0 = phase_ratio(omega * d) * d;
        let (ecos, esin) = if h.rate == 0.0 {
            (e0, ZERO)
        } else {
            let ep = phase_ratio((omega + h.rate) * d);
            let em = phase_ratio((omega - h.rate) * d);
            ((ep + em) * (0.5 * d), (ep - em) * (0.5 * d) / I)
        };
        for l in 0..3 {
            out[l] += phase * (e0 * h.a[l] + ecos * h.b[l] + esin * h.c[l]);
        }
    }
    out
}

/// `y⃗₁` from exact per-segment integrals; valid for arbitrary segment angles.
pub fn y1_segmentwise(seq: &ControlSequence, omega: f64) -> Result<Y1> {
    check_omega(omega)?;
    Ok(y1_signed(seq, omega))
}

/// [`y1_segmentwise`] without the sign check, so `y⃗₁(−ω)` can be evaluated too.
pub fn y1_signed(seq: &ControlSequence, omega: f64) -> Y1 {
    let t = control_transform(seq, omega);
    Y1 { omega, components: t.map(|c| -I * omega * c) }
}

/// The π-pulse closed form. Rejects sequences with a driven segment that is not ±π.
pub fn y1_closed_form(seq: &ControlSequence, omega: f64) -> Result<Y1> {
    check_omega(omega)?;
    if let Some((j, seg)) = seq.segments().iter().enumerate().find(|(_, s)| s.is_driven() && !s.is_pi_rotation()) {
        return Err(Error::UnsupportedSequence(format!(
            "segment {j} rotates by {} rad, the closed form needs ±π",
            seg.net_angle()
        )));
    }
    let parity = seq.parity_counts();
    let b = seq.boundaries();
    let mut y = [ZERO; 3];
    for (j, seg) in seq.segments().iter().enumerate() {
        let [sx, sy, sz] = parity.signs(j);
        let e_prev = Complex64::from_polar(1.0, omega * b[j]);
        let e_next = Complex64::from_polar(1.0, omega * b[j + 1]);
        if !seg.is_driven() || seg.axis == Axis::Z {
            y[2] += (e_prev - e_next) * sz;
            continue;
        }
        let rate = seg.rate;
        let (sin_part, cos_part) = if (omega * omega - rate * rate).abs() < RESONANCE_EPS * rate * rate {
            // −iω e^{iωt_{j-1}} ∫₀^d e^{iωu} {sin, cos}(Ωu) du via phasors; no 0/0.
            let d = seg.duration;
            let ep = phase_ratio((omega + rate) * d);
            let em = phase_ratio((omega - rate) * d);
            let pre = -I * omega * e_prev * (0.5 * d);
            (pre * (ep - em) / I, pre * (ep + em))
        } else {
            let den = omega * omega - rate * rate;
            let sum = e_next + e_prev;
            (I * omega * rate / den * sum, sum * (omega * omega / den))
        };
        match seg.axis {
            Axis::X => {
                y[1] += sin_part * sy;
                y[2] += cos_part * sz;
            }
            Axis::Y => {
                y[0] -= sin_part * sx;
                y[2] += cos_part * sz;
            }
            Axis::Z | Axis::Identity => unreachable!(),
        }
    }
    Ok(Y1 { omega, components: y })
}

/// `y⃗₁` by composite 16-point Gauss–Legendre quadrature of `s₁` evaluated through the
/// cumulative rotation matrices (panels of at most one radian of phase).
pub fn y1_numeric(seq: &ControlSequence, omega: f64) -> Result<Y1> {
    check_omega(omega)?;
    let gp = GaussPanels::new(16);
    let b = seq.boundaries();
    let mut acc = [ZERO; 3];
    for (j, seg) in seq.segments().iter().enumerate() {
        let phase = (omega + seg.rate.abs()) * seg.duration;
        let panels = phase.ceil().max(1.0) as usize;
        let start = seq.start_rotation(j);
        for (t, w) in gp.rule(b[j], b[j + 1], panels) {
            let r = seg.partial_rotation(t - b[j]).compose(&start);
            let s = r.apply_transpose(&Z_HAT);
            let e = Complex64::from_polar(w, omega * t);
            for l in 0..3 {
                acc[l] += e * s[l];
            }
        }
    }
    Ok(Y1 { omega, components: acc.map(|c| -I * omega * c) })
}

/// Best available `y⃗₁`: closed form for π sequences, exact segmentwise integrals otherwise.
pub fn y1(seq: &ControlSequence, omega: f64) -> Result<Y1> {
    if seq.is_pi_sequence() {
        y1_closed_form(seq, omega)
    } else {
        y1_segmentwise(seq, omega)
    }
}

pub fn f1(seq: &ControlSequence, omega: f64) -> Result<F1> {
    Ok(y1(seq, omega)?.f1())
}

// ---------------------------------------------------------------------------
// Fourth order
// ---------------------------------------------------------------------------

/// Knobs for the nested time integrals behind `y₂`, `y₃`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct F2Settings {
    /// Lower bound on grid intervals per segment (≥ 8).
    pub min_points_per_segment: usize,
    /// Grid intervals per radian of `(|ω| + |ω′| + |Ω_j|)·d_j`.
    pub points_per_radian: f64,
    pub max_points_per_segment: usize,
    /// Combine grids `M` and `2M` as `(4·I₂ₘ − Iₘ)/3`.
    pub richardson: bool,
    /// Allowed imaginary residue of the ± sums relative to the summed term magnitudes.
    pub imag_rtol: f64,
}

impl Default for F2Settings {
    fn default() -> Self {
        F2Settings {
            min_points_per_segment: 12,
            points_per_radian: 2.5,
            max_points_per_segment: 1 << 14,
            richardson: true,
            imag_rtol: 1e-8,
        }
    }
}

impl F2Settings {
    pub fn validate(&self) -> Result<()> {
        if self.min_points_per_segment < TimeGrid::MIN_PER_SEGMENT {
            return Err(Error::InvalidConfig(format!(
                "time-points-per-segment must be at least {}",
                TimeGrid::MIN_PER_SEGMENT
            )));
        }
        if !(self.points_per_radian > 0.0) || self.max_points_per_segment < self.min_points_per_segment {
            return Err(Error::InvalidConfig("invalid time-grid resolution".into()));
        }
        if !(self.imag_rtol > 0.0) {
            return Err(Error::InvalidConfig("imag_rtol must be positive".into()));
        }
        Ok(())
    }

    fn counts(&self, seq: &ControlSequence, omega: f64, omega_p: f64) -> Vec<usize> {
        seq.segments()
            .iter()
            .map(|s| {
                let rad = (omega.abs() + omega_p.abs() + s.rate.abs()) * s.duration;
                ((self.points_per_radian * rad).ceil() as usize)
                    .clamp(self.min_points_per_segment, self.max_points_per_segment)
            })
            .collect()
    }
}

/// `s⃗₁` sampled on a segment-aligned grid.
struct Sampled {
    grid: TimeGrid,
    s: [Vec<f64>; 3],
}

/// `s_k e^{iαt}` on the grid, its running integral and total.
struct Phased {
    g: [Vec<Complex64>; 3],
    p: [Vec<Complex64>; 3],
}

impl Sampled {
    fn new(seq: &ControlSequence, counts: &[usize]) -> Result<Self> {
        let grid = TimeGrid::with_counts(seq, counts)?;
        let b = seq.boundaries();
        let mut s = [Vec::with_capacity(grid.len()), Vec::with_capacity(grid.len()), Vec::with_capacity(grid.len())];
        let mut j = 0;
        for &t in grid.nodes() {
            // Left-closed segments, except the final node which belongs to the last one.
            while j + 1 < seq.len() && t >= b[j + 1] {
                j += 1;
            }
            let h = &seq.harmonics()[j];
            let v = h.eval(t - h.start);
            for l in 0..3 {
                s[l].push(v[l]);
            }
        }
        Ok(Sampled { grid, s })
    }

    fn phased(&self, alpha: f64) -> Phased {
        let e = self.grid.phasors(alpha);
        let g: [Vec<Complex64>; 3] =
            std::array::from_fn(|l| self.s[l].iter().zip(&e).map(|(&x, e)| e * x).collect());
        let p = std::array::from_fn(|l| self.grid.cumulative(&g[l]));
        Phased { g, p }
    }

    /// `N_ab = ∫dt s_a e^{iα_o t} ∫^t dt′ s_b e^{iα_i t′}` and its Levi-Civita contraction
    /// `C_i = ε_ijk N_jk`.
    fn cross_pair(&self, outer: &Phased, inner: &Phased) -> [Complex64; 3] {
        let n = |a: usize, b: usize| self.grid.integrate_product(&outer.g[a], &inner.p[b]);
        [n(1, 2) - n(2, 1), n(2, 0) - n(0, 2), n(0, 1) - n(1, 0)]
    }

    /// `Σⱼ [2T_{jij} − T_{ijj} − T_{jji}]` with `T_abc = ∭_{t₁<t₂<t₃} s_a s_b s_c e^{i(α₁t₁+α₂t₂+α₃t₃)}`.
    fn s3_contraction(&self, p1: &Phased, p2: &Phased, p3: &Phased) -> [Complex64; 3] {
        let mut t = [[[ZERO; 3]; 3]; 3];
        for a in 0..3 {
            for b in 0..3 {
                let q = self.grid.cumulative_product(&p2.g[b], &p1.p[a]);
                for c in 0..3 {
                    t[a][b][c] = self.grid.integrate_product(&p3.g[c], &q);
                }
            }
        }
        std::array::from_fn(|i| (0..3).map(|j| 2.0 * t[j][i][j] - t[i][j][j] - t[j][j][i]).sum())
    }
}

/// Bare (prefactor-free) `y₂`, `y₃` for the four sign combinations
/// `(+ω,+ω′), (+ω,−ω′), (−ω,+ω′), (−ω,−ω′)`.
struct BareFourth {
    y2: [[Complex64; 3]; 4],
    y3: [[Complex64; 3]; 4],
}

const SIGNS: [(f64, f64); 4] = [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)];

fn mul3(a: [Complex64; 3], b: [Complex64; 3]) -> [Complex64; 3] {
    [a[0] * b[0], a[1] * b[1], a[2] * b[2]]
}

fn add3(a: [Complex64; 3], b: [Complex64; 3]) -> [Complex64; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn bare_fourth_on(sm: &Sampled, omega: f64, omega_p: f64, combos: &[usize]) -> BareFourth {
    // Phase sets for +ω, −ω, +ω′, −ω′.
    let sets = [sm.phased(omega), sm.phased(-omega), sm.phased(omega_p), sm.phased(-omega_p)];
    let total = |p: &Phased| -> [Complex64; 3] { std::array::from_fn(|l| *p.p[l].last().expect("non-empty")) };
    let mut out = BareFourth { y2: [[ZERO; 3]; 4], y3: [[ZERO; 3]; 4] };
    for &c in combos {
        let (sw, swp) = SIGNS[c];
        let (w, mw) = if sw > 0.0 { (&sets[0], &sets[1]) } else { (&sets[1], &sets[0]) };
        let (wp, mwp) = if swp > 0.0 { (&sets[2], &sets[3]) } else { (&sets[3], &sets[2]) };
        // Pairings as (t₄, t₃ | t₂, t₁).
        let p1 = mul3(sm.cross_pair(wp, mwp), sm.cross_pair(w, mw));
        let p2 = mul3(sm.cross_pair(wp, w), sm.cross_pair(mwp, mw));
        let p3 = mul3(sm.cross_pair(w, wp), sm.cross_pair(mwp, mw));
        out.y2[c] = add3(add3(p1, p2), p3);
        // t₄ free; (α₁, α₂, α₃) on the ordered simplex.
        let q1 = mul3(total(wp), sm.s3_contraction(mw, w, mwp));
        let q2 = mul3(total(wp), sm.s3_contraction(mw, mwp, w));
        let q3 = mul3(total(w), sm.s3_contraction(mw, mwp, wp));
        out.y3[c] = add3(add3(q1, q2), q3);
    }
    out
}

fn bare_fourth(
    seq: &ControlSequence,
    omega: f64,
    omega_p: f64,
    settings: &F2Settings,
    combos: &[usize],
) -> Result<BareFourth> {
    settings.validate()?;
    let counts = settings.counts(seq, omega, omega_p);
    let coarse = bare_fourth_on(&Sampled::new(seq, &counts)?, omega, omega_p, combos);
    if !settings.richardson {
        return Ok(coarse);
    }
    let doubled: Vec<usize> = counts.iter().map(|c| 2 * c).collect();
    let fine = bare_fourth_on(&Sampled::new(seq, &doubled)?, omega, omega_p, combos);
    let extrap = |f: &[[Complex64; 3]; 4], c: &[[Complex64; 3]; 4]| -> [[Complex64; 3]; 4] {
        std::array::from_fn(|k| std::array::from_fn(|i| (4.0 * f[k][i] - c[k][i]) / 3.0))
    };
    Ok(BareFourth { y2: extrap(&fine.y2, &coarse.y2), y3: extrap(&fine.y3, &coarse.y3) })
}

/// Sum of the four ± terms; errors if the imaginary part is not negligible.
fn real_sum(terms: &[[Complex64; 3]; 4], rtol: f64, name: &'static str) -> Result<[f64; 3]> {
    let sum: [Complex64; 3] = std::array::from_fn(|i| terms.iter().map(|t| t[i]).sum());
    let magnitude: f64 = terms.iter().flat_map(|t| t.iter()).map(|z| z.norm()).sum();
    let residue = sum.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    if residue > rtol * magnitude && residue > 1e-300 {
        return Err(Error::ImaginaryResidue { term: name, residue, magnitude });
    }
    Ok(sum.map(|z| z.re))
}

fn check_pair(omega: f64, omega_p: f64) -> Result<()> {
    if !(omega.is_finite() && omega_p.is_finite()) {
        return Err(Error::InvalidConfig("frequencies must be finite".into()));
    }
    Ok(())
}

/// `y₂,ᵢ(ω, ω′)`, including the `ω²ω′²/4` prefactor. Either sign of each frequency.
pub fn y2(seq: &ControlSequence, omega: f64, omega_p: f64, settings: &F2Settings) -> Result<[Complex64; 3]> {
    check_pair(omega, omega_p)?;
    let b = bare_fourth(seq, omega.abs(), omega_p.abs(), settings, &[combo_index(omega, omega_p)])?;
    let pre = omega * omega * omega_p * omega_p / 4.0;
    Ok(b.y2[combo_index(omega, omega_p)].map(|z| z * pre))
}

/// `y₃,ᵢ(ω, ω′)`, including the `ω²ω′²/6` prefactor. Either sign of each frequency.
pub fn y3(seq: &ControlSequence, omega: f64, omega_p: f64, settings: &F2Settings) -> Result<[Complex64; 3]> {
    check_pair(omega, omega_p)?;
    let b = bare_fourth(seq, omega.abs(), omega_p.abs(), settings, &[combo_index(omega, omega_p)])?;
    let pre = omega * omega * omega_p * omega_p / 6.0;
    Ok(b.y3[combo_index(omega, omega_p)].map(|z| z * pre))
}

fn combo_index(omega: f64, omega_p: f64) -> usize {
    match (omega >= 0.0, omega_p >= 0.0) {
        (true, true) => 0,
        (true, false) => 1,
        (false, true) => 2,
        (false, false) => 3,
    }
}

/// The three fourth-order filter terms at one frequency pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct F2Terms {
    pub omega: f64,
    pub omega_prime: f64,
    /// `F₂ₐ,ᵢ`
    pub a: [f64; 3],
    /// `F₂ᵦ,ᵢ`
    pub b: [f64; 3],
    /// `F₂𝒸,ᵢⱼ`
    pub c: [[f64; 3]; 3],
}

impl F2Terms {
    pub fn a_sum(&self) -> f64 {
        self.a.iter().sum()
    }

    pub fn b_sum(&self) -> f64 {
        self.b.iter().sum()
    }

    pub fn c_sum(&self) -> f64 {
        self.c.iter().flatten().sum()
    }

    /// `Σᵢ(F₂ₐ,ᵢ + 2F₂ᵦ,ᵢ) − ⅓Σᵢⱼ F₂𝒸,ᵢⱼ`.
    pub fn total(&self) -> f64 {
        self.a_sum() + 2.0 * self.b_sum() - self.c_sum() / 3.0
    }
}

/// `F₂𝒸,ᵢⱼ` from `y⃗₁` at the two frequencies.
pub fn f2_c_from(y: &[Complex64; 3], yp: &[Complex64; 3]) -> [[f64; 3]; 3] {
    std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            let cross = (y[i] * y[j].conj()).re * (yp[i] * yp[j].conj()).re;
            y[i].norm_sqr() * yp[j].norm_sqr() + 2.0 * cross
        })
    })
}

pub fn f2_c(seq: &ControlSequence, omega: f64, omega_p: f64) -> Result<[[f64; 3]; 3]> {
    let y = y1(seq, omega)?;
    let yp = y1(seq, omega_p)?;
    Ok(f2_c_from(&y.components, &yp.components))
}

pub fn f2_a(seq: &ControlSequence, omega: f64, omega_p: f64, settings: &F2Settings) -> Result<[f64; 3]> {
    Ok(f2_terms(seq, omega, omega_p, settings)?.a)
}

pub fn f2_b(seq: &ControlSequence, omega: f64, omega_p: f64, settings: &F2Settings) -> Result<[f64; 3]> {
    Ok(f2_terms(seq, omega, omega_p, settings)?.b)
}

pub fn f2_total(seq: &ControlSequence, omega: f64, omega_p: f64, settings: &F2Settings) -> Result<f64> {
    Ok(f2_terms(seq, omega, omega_p, settings)?.total())
}

pub fn f2_terms(seq: &ControlSequence, omega: f64, omega_p: f64, settings: &F2Settings) -> Result<F2Terms> {
    check_omega(omega)?;
    check_omega(omega_p)?;
    let k = f2_kernel(seq, omega, omega_p, settings)?;
    let pre = omega * omega * omega_p * omega_p;
    Ok(F2Terms {
        omega,
        omega_prime: omega_p,
        a: k.a.map(|v| v * pre),
        b: k.b.map(|v| v * pre),
        c: k.c.map(|r| r.map(|v| v * pre)),
    })
}

/// `F₂ / (ω²ω′²)`: finite at zero frequency, which lets frequency rules include `ω = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct F2Kernel {
    pub a: [f64; 3],
    pub b: [f64; 3],
    pub c: [[f64; 3]; 3],
}

impl F2Kernel {
    pub fn total(&self) -> f64 {
        let a: f64 = self.a.iter().sum();
        let b: f64 = self.b.iter().sum();
        let c: f64 = self.c.iter().flatten().sum();
        a + 2.0 * b - c / 3.0
    }

    fn scaled(&self, f: f64) -> F2Kernel {
        F2Kernel { a: self.a.map(|v| v * f), b: self.b.map(|v| v * f), c: self.c.map(|r| r.map(|v| v * f)) }
    }
}

fn c_kernel(t: &[Complex64; 3], tp: &[Complex64; 3]) -> [[f64; 3]; 3] {
    // |y|² = ω²|ȳ|² and Re[yᵢyⱼ*] = ω² Re[ȳᵢȳⱼ*] with ȳ the plain transform.
    f2_c_from(t, tp)
}

fn ab_kernel(seq: &ControlSequence, omega: f64, omega_p: f64, settings: &F2Settings) -> Result<([f64; 3], [f64; 3])> {
    let b = bare_fourth(seq, omega, omega_p, settings, &[0, 1, 2, 3])?;
    let a = real_sum(&b.y2, settings.imag_rtol, "F2_a")?.map(|v| v / 4.0);
    let bb = real_sum(&b.y3, settings.imag_rtol, "F2_b")?.map(|v| v / 6.0);
    Ok((a, bb))
}

/// `F₂ / (ω²ω′²)` at one pair of non-negative frequencies.
pub fn f2_kernel(seq: &ControlSequence, omega: f64, omega_p: f64, settings: &F2Settings) -> Result<F2Kernel> {
    check_omega(omega)?;
    check_omega(omega_p)?;
    let (a, b) = ab_kernel(seq, omega, omega_p, settings)?;
    let c = c_kernel(&control_transform(seq, omega), &control_transform(seq, omega_p));
    Ok(F2Kernel { a, b, c })
}

/// Tabulated `F₂/(ω²ω′²)` on the tensor product of a set of frequency nodes.
///
/// The nodes depend only on the sequence, so one grid serves every spectrum; the
/// spectrum enters through exact hat-function weights at integration time.
/// [`F2Grid::rescaled`] maps a grid onto the time-scaled sequence without recomputation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct F2Grid {
    nodes: Vec<f64>,
    tau: f64,
    fingerprint: String,
    kernels: Vec<F2Kernel>,
}

/// Canonical description of a sequence used to match a grid to its sequence.
pub fn sequence_fingerprint(seq: &ControlSequence) -> String {
    seq.segments()
        .iter()
        .map(|s| format!("{}:{:.10e}:{:.10e}", s.axis, s.rate, s.duration))
        .collect::<Vec<_>>()
        .join("|")
}

/// Upper edge of the default fourth-order window as a multiple of `max(Ω_max, 2π/τ)`.
pub const F2_WINDOW_FACTOR: f64 = 10.0;
/// Lowest non-zero default node, in units of `1/τ`.
pub const F2_WINDOW_LO: f64 = 1e-3;
/// Default number of log-spaced nodes (an `ω = 0` node is added).
pub const F2_DEFAULT_POINTS: usize = 64;

impl F2Grid {
    /// `0` followed by `points` log-spaced nodes on `[10⁻³/τ, 10·max(Ω_max, 2π/τ)]`.
    pub fn default_nodes(seq: &ControlSequence, points: usize) -> Result<Vec<f64>> {
        let tau = seq.tau();
        let hi = F2_WINDOW_FACTOR * seq.max_rate().max(2.0 * std::f64::consts::PI / tau);
        let grid = FrequencyGrid::log_spaced(F2_WINDOW_LO / tau, hi, points)?;
        let mut nodes = vec![0.0];
        nodes.extend_from_slice(grid.nodes());
        Ok(nodes)
    }

    /// Evaluate every node pair (rows in parallel, contents independent of scheduling).
    pub fn compute(seq: &ControlSequence, nodes: &[f64], settings: &F2Settings) -> Result<Self> {
        settings.validate()?;
        if let Some(&w) = nodes.iter().find(|w| !(**w >= 0.0)) {
            return Err(Error::NegativeFrequency(w));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidConfig("F2 grid nodes must be strictly increasing".into()));
        }
        let transforms: Vec<[Complex64; 3]> = nodes.iter().map(|&w| control_transform(seq, w)).collect();
        let n = nodes.len();
        let rows: Result<Vec<Vec<F2Kernel>>> = (0..n)
            .into_par_iter()
            .map(|k| {
                (0..n)
                    .map(|l| {
                        let (a, b) = ab_kernel(seq, nodes[k], nodes[l], settings)?;
                        Ok(F2Kernel { a, b, c: c_kernel(&transforms[k], &transforms[l]) })
                    })
                    .collect()
            })
            .collect();
        let kernels = rows?.into_iter().flatten().collect();
        Ok(F2Grid { nodes: nodes.to_vec(), tau: seq.tau(), fingerprint: sequence_fingerprint(seq), kernels })
    }

    pub fn compute_default(seq: &ControlSequence, points: usize, settings: &F2Settings) -> Result<Self> {
        Self::compute(seq, &Self::default_nodes(seq, points)?, settings)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// `F₂/(ω_k² ω_l²)`.
    pub fn kernel(&self, k: usize, l: usize) -> &F2Kernel {
        &self.kernels[k * self.nodes.len() + l]
    }

    /// Full filter terms at node pair `(k, l)`.
    pub fn terms(&self, k: usize, l: usize) -> F2Terms {
        let (w, wp) = (self.nodes[k], self.nodes[l]);
        let kk = self.kernel(k, l).scaled(w * w * wp * wp);
        F2Terms { omega: w, omega_prime: wp, a: kk.a, b: kk.b, c: kk.c }
    }

    pub fn check_sequence(&self, seq: &ControlSequence) -> Result<()> {
        let fp = sequence_fingerprint(seq);
        if fp != self.fingerprint {
            return Err(Error::GridMismatch(format!(
                "grid was built for sequence [{}], evaluation uses [{fp}]",
                self.fingerprint
            )));
        }
        Ok(())
    }

    /// The grid for `seq.time_scaled(factor)`: frequencies divide by `factor`, kernels
    /// (dimension time⁴) multiply by `factor⁴`.
    pub fn rescaled(&self, scaled_seq: &ControlSequence, factor: f64) -> Result<Self> {
        if !(factor > 0.0) || !factor.is_finite() {
            return Err(Error::InvalidConfig(format!("rescale factor must be positive, got {factor}")));
        }
        if (scaled_seq.tau() - self.tau * factor).abs() > 1e-9 * scaled_seq.tau() {
            return Err(Error::GridMismatch("rescaled sequence duration does not match".into()));
        }
        let f4 = factor.powi(4);
        Ok(F2Grid {
            nodes: self.nodes.iter().map(|w| w / factor).collect(),
            tau: scaled_seq.tau(),
            fingerprint: sequence_fingerprint(scaled_seq),
            kernels: self.kernels.iter().map(|k| k.scaled(f4)).collect(),
        })
    }
}
