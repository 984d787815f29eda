//! Piecewise-constant control sequences and the control vector.
//!
//! During segment `j` the control Hamiltonian is `½ Ω_j σ_{l_j}` with `l_j` one of
//! `I, x, y, z`. The control propagator is the ordered product of the segment
//! rotations, and the control vector `s₁(t)` is the image of `ẑ` under the inverse
//! of its SO(3) adjoint, i.e. `U_c†(t) σ_z U_c(t) = s₁(t)·σ`.
//!
//! Inside a segment the control vector is an exact trigonometric polynomial,
//! `s₁(t_{j-1} + u) = A + B cos(Ω u) + C sin(Ω u)`; [`SegmentHarmonics`] stores
//! those coefficients so downstream kernels never integrate an ODE.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, Mat2, Rotation3, Vec3, X_HAT, Y_HAT, Z_HAT};

/// Relative tolerance for deciding that a driven segment is a whole π rotation.
pub const PI_ANGLE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    #[serde(rename = "i", alias = "I", alias = "identity")]
    Identity,
    #[serde(rename = "x", alias = "X")]
    X,
    #[serde(rename = "y", alias = "Y")]
    Y,
    #[serde(rename = "z", alias = "Z")]
    Z,
}

impl Axis {
    /// Unit vector of the rotation axis; `None` for the identity.
    pub fn unit(self) -> Option<Vec3> {
        match self {
            Axis::Identity => None,
            Axis::X => Some(X_HAT),
            Axis::Y => Some(Y_HAT),
            Axis::Z => Some(Z_HAT),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Axis::Identity => "i",
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// One constant-control interval: rotation about `axis` at signed angular rate
/// `rate` for `duration`. A negative rate is the π-phase-shifted drive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlSegment {
    pub axis: Axis,
    pub rate: f64,
    pub duration: f64,
}

impl ControlSegment {
    pub fn new(axis: Axis, rate: f64, duration: f64) -> Result<Self> {
        let seg = ControlSegment { axis, rate, duration };
        seg.validate()?;
        Ok(seg)
    }

    pub fn idle(duration: f64) -> Result<Self> {
        Self::new(Axis::Identity, 0.0, duration)
    }

    /// A segment that rotates by exactly `angle` (sign included) at speed `speed > 0`.
    pub fn by_angle(axis: Axis, angle: f64, speed: f64) -> Result<Self> {
        if !(speed > 0.0) || !speed.is_finite() {
            return Err(Error::InvalidSequence(format!("rotation speed must be positive, got {speed}")));
        }
        Self::new(axis, speed * angle.signum(), angle.abs() / speed)
    }

    fn validate(&self) -> Result<()> {
        if !(self.duration > 0.0) || !self.duration.is_finite() {
            return Err(Error::InvalidSequence(format!(
                "segment duration must be positive and finite, got {}",
                self.duration
            )));
        }
        if !self.rate.is_finite() {
            return Err(Error::InvalidSequence("segment rate must be finite".into()));
        }
        if self.axis == Axis::Identity && self.rate != 0.0 {
            return Err(Error::InvalidSequence(format!(
                "identity segment must have zero rate, got {}",
                self.rate
            )));
        }
        Ok(())
    }

    /// Signed rotation angle `rate × duration`.
    pub fn net_angle(&self) -> f64 {
        self.rate * self.duration
    }

    pub fn is_driven(&self) -> bool {
        self.axis != Axis::Identity && self.rate != 0.0
    }

    /// True when the segment is a rotation through ±π (identity segments never are).
    pub fn is_pi_rotation(&self) -> bool {
        self.is_driven() && (self.net_angle().abs() - PI).abs() <= PI_ANGLE_TOL * PI
    }

    /// SO(3) image of the segment propagator after elapsed time `u`.
    pub fn partial_rotation(&self, u: f64) -> Rotation3 {
        match self.axis.unit() {
            Some(n) if self.rate != 0.0 => Rotation3::from_axis_angle(&n, self.rate * u),
            _ => Rotation3::IDENTITY,
        }
    }

    /// Spin-½ propagator `exp(-i rate u σ_axis / 2)`.
    pub fn partial_unitary(&self, u: f64) -> Mat2 {
        match self.axis.unit() {
            Some(n) => Mat2::rotation(&n, self.rate * u),
            None => Mat2::IDENTITY,
        }
    }
}

/// Coefficients of `s₁(t_{j-1}+u) = a + b cos(rate·u) + c sin(rate·u)` on one segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentHarmonics {
    pub start: f64,
    pub duration: f64,
    pub rate: f64,
    pub a: Vec3,
    pub b: Vec3,
    pub c: Vec3,
}

impl SegmentHarmonics {
    #[inline]
    pub fn eval(&self, u: f64) -> Vec3 {
        let (s, c) = (self.rate * u).sin_cos();
        [
            self.a[0] + self.b[0] * c + self.c[0] * s,
            self.a[1] + self.b[1] * c + self.c[1] * s,
            self.a[2] + self.b[2] * c + self.c[2] * s,
        ]
    }

    /// Exact `∫₀^d s₁ du` over the segment.
    pub fn integral(&self) -> Vec3 {
        let d = self.duration;
        let w = self.rate;
        let (sin_term, one_minus_cos) = if w == 0.0 {
            (d, 0.0)
        } else {
            let (s, c) = (w * d).sin_cos();
            (s / w, (1.0 - c) / w)
        };
        [
            self.a[0] * d + self.b[0] * sin_term + self.c[0] * one_minus_cos,
            self.a[1] * d + self.b[1] * sin_term + self.c[1] * one_minus_cos,
            self.a[2] * d + self.b[2] * sin_term + self.c[2] * one_minus_cos,
        ]
    }
}

#[derive(Debug, Clone, Deserialize)]
struct SequenceFile {
    segments: Vec<ControlSegment>,
}

#[derive(Serialize)]
struct SequenceFileRef<'a> {
    segments: &'a [ControlSegment],
}

/// An ordered, validated list of control segments.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSequence {
    segments: Vec<ControlSegment>,
    boundaries: Vec<f64>,
    start_rotations: Vec<Rotation3>,
    harmonics: Vec<SegmentHarmonics>,
}

impl ControlSequence {
    pub fn new(segments: Vec<ControlSegment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::InvalidSequence("a sequence needs at least one segment".into()));
        }
        for seg in &segments {
            seg.validate()?;
        }
        let mut boundaries = Vec::with_capacity(segments.len() + 1);
        boundaries.push(0.0);
        let mut t = 0.0;
        for seg in &segments {
            t += seg.duration;
            boundaries.push(t);
        }
        if boundaries.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidSequence("segment boundaries must strictly increase".into()));
        }

        let mut start_rotations = Vec::with_capacity(segments.len());
        let mut harmonics = Vec::with_capacity(segments.len());
        let mut r = Rotation3::IDENTITY;
        for (seg, &start) in segments.iter().zip(&boundaries) {
            start_rotations.push(r);
            harmonics.push(segment_harmonics(seg, &r, start));
            r = seg.partial_rotation(seg.duration).compose(&r);
        }

        Ok(ControlSequence { segments, boundaries, start_rotations, harmonics })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: SequenceFile =
            serde_json::from_str(text).map_err(|e| Error::InvalidSequence(format!("bad sequence JSON: {e}")))?;
        Self::new(file.segments)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&SequenceFileRef { segments: &self.segments }).expect("segments serialise")
    }

    pub fn segments(&self) -> &[ControlSegment] {
        &self.segments
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// `t₀ = 0 < t₁ < … < t_k = τ`.
    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    pub fn tau(&self) -> f64 {
        *self.boundaries.last().expect("non-empty")
    }

    pub fn harmonics(&self) -> &[SegmentHarmonics] {
        &self.harmonics
    }

    /// Cumulative rotation at the start of segment `j` (0-based).
    pub fn start_rotation(&self, j: usize) -> Rotation3 {
        self.start_rotations[j]
    }

    /// Largest |rate| over all segments.
    pub fn max_rate(&self) -> f64 {
        self.segments.iter().map(|s| s.rate.abs()).fold(0.0, f64::max)
    }

    pub fn min_duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).fold(f64::INFINITY, f64::min)
    }

    /// True when every driven segment is a whole ±π rotation, i.e. the closed-form
    /// first-order filter applies.
    pub fn is_pi_sequence(&self) -> bool {
        self.segments.iter().all(|s| !s.is_driven() || s.is_pi_rotation())
    }

    /// `t` clamped to `[0, τ]`; overshoots of a few ulps from grid arithmetic are accepted.
    fn check_time(&self, t: f64) -> Result<f64> {
        let tau = self.tau();
        let slack = 1e-12 * tau;
        if !(-slack..=tau + slack).contains(&t) {
            return Err(Error::TimeOutOfRange { t, tau });
        }
        Ok(t.clamp(0.0, tau))
    }

    /// Index of the segment containing `t` (the later one at an interior boundary).
    pub fn segment_index(&self, t: f64) -> usize {
        let k = self.segments.len();
        // boundaries[1..k] are the interior breakpoints
        let idx = self.boundaries[1..k].partition_point(|&b| b <= t);
        idx.min(k - 1)
    }

    /// SO(3) adjoint of `U_c(t)`.
    pub fn cumulative_rotation(&self, t: f64) -> Result<Rotation3> {
        let t = self.check_time(t)?;
        let j = self.segment_index(t);
        let u = t - self.boundaries[j];
        Ok(self.segments[j].partial_rotation(u).compose(&self.start_rotations[j]))
    }

    /// Control vector `s₁(t)`, a unit vector.
    pub fn control_vector(&self, t: f64) -> Result<Vec3> {
        let t = self.check_time(t)?;
        Ok(self.control_vector_unchecked(t))
    }

    #[inline]
    pub(crate) fn control_vector_unchecked(&self, t: f64) -> Vec3 {
        let j = self.segment_index(t);
        let h = &self.harmonics[j];
        h.eval(t - h.start)
    }

    /// `s₂(t₁, t₂) = s₁(t₂) × s₁(t₁)`.
    pub fn s2(&self, t1: f64, t2: f64) -> Result<Vec3> {
        Ok(geometry::cross(&self.control_vector(t2)?, &self.control_vector(t1)?))
    }

    /// `s₃(t₁,t₂,t₃) = s₁(t₃)×(s₁(t₂)×s₁(t₁)) + (s₁(t₃)×s₁(t₂))×s₁(t₁)`.
    pub fn s3(&self, t1: f64, t2: f64, t3: f64) -> Result<Vec3> {
        let a = self.control_vector(t1)?;
        let b = self.control_vector(t2)?;
        let c = self.control_vector(t3)?;
        Ok(s3_cross(&a, &b, &c))
    }

    /// Same quantity as [`Self::s3`] via the dot-product expansion.
    pub fn s3_expanded(&self, t1: f64, t2: f64, t3: f64) -> Result<Vec3> {
        let a = self.control_vector(t1)?;
        let b = self.control_vector(t2)?;
        let c = self.control_vector(t3)?;
        Ok(s3_dot(&a, &b, &c))
    }

    /// Exact `∫₀^τ s₁(t) dt`.
    pub fn control_vector_integral(&self) -> Vec3 {
        self.harmonics
            .iter()
            .fold([0.0; 3], |acc, h| geometry::add(&acc, &h.integral()))
    }

    /// Noise-free propagator: ordered product of the segment unitaries.
    pub fn target_gate(&self) -> TargetGate {
        let u = self
            .segments
            .iter()
            .fold(Mat2::IDENTITY, |acc, seg| seg.partial_unitary(seg.duration).mul(&acc));
        TargetGate(u)
    }

    /// Parity counts under the strictly-before convention.
    pub fn parity_counts(&self) -> ParityCounts {
        let k = self.segments.len();
        let mut counts = ParityCounts {
            xy: Vec::with_capacity(k),
            xz: Vec::with_capacity(k),
            yz: Vec::with_capacity(k),
        };
        let (mut nx, mut ny, mut nz) = (0u32, 0u32, 0u32);
        for seg in &self.segments {
            counts.xy.push(nx + ny);
            counts.xz.push(nx + nz);
            counts.yz.push(ny + nz);
            if seg.is_driven() {
                match seg.axis {
                    Axis::X => nx += 1,
                    Axis::Y => ny += 1,
                    Axis::Z => nz += 1,
                    Axis::Identity => {}
                }
            }
        }
        counts
    }

    /// Same sequence with every duration multiplied by `factor` and every rate divided by it.
    pub fn time_scaled(&self, factor: f64) -> Result<Self> {
        let segs = self
            .segments
            .iter()
            .map(|s| ControlSegment { axis: s.axis, rate: s.rate / factor, duration: s.duration * factor })
            .collect();
        Self::new(segs)
    }
}

fn segment_harmonics(seg: &ControlSegment, start_rotation: &Rotation3, start: f64) -> SegmentHarmonics {
    // s₁(t) = R_startᵀ · R_partial(u)ᵀ ẑ, and R_partial(u)ᵀ ẑ = n n_z + (ẑ − n n_z) cos θ − (n×ẑ) sin θ.
    let (a_local, b_local, c_local) = match seg.axis.unit() {
        Some(n) if seg.rate != 0.0 => {
            let nz = n[2];
            let a = geometry::scale(&n, nz);
            let b = geometry::sub(&Z_HAT, &a);
            let c = geometry::scale(&geometry::cross(&n, &Z_HAT), -1.0);
            (a, b, c)
        }
        _ => (Z_HAT, [0.0; 3], [0.0; 3]),
    };
    SegmentHarmonics {
        start,
        duration: seg.duration,
        rate: seg.rate,
        a: start_rotation.apply_transpose(&a_local),
        b: start_rotation.apply_transpose(&b_local),
        c: start_rotation.apply_transpose(&c_local),
    }
}

/// `c×(b×a) + (c×b)×a` for `a = s₁(t₁)`, `b = s₁(t₂)`, `c = s₁(t₃)`.
pub fn s3_cross(a: &Vec3, b: &Vec3, c: &Vec3) -> Vec3 {
    let first = geometry::cross(c, &geometry::cross(b, a));
    let second = geometry::cross(&geometry::cross(c, b), a);
    geometry::add(&first, &second)
}

/// `2(c·a) b − (c·b) a − (a·b) c`, algebraically equal to [`s3_cross`].
pub fn s3_dot(a: &Vec3, b: &Vec3, c: &Vec3) -> Vec3 {
    let ca = geometry::dot(c, a);
    let cb = geometry::dot(c, b);
    let ab = geometry::dot(a, b);
    [
        2.0 * ca * b[0] - cb * a[0] - ab * c[0],
        2.0 * ca * b[1] - cb * a[1] - ab * c[1],
        2.0 * ca * b[2] - cb * a[2] - ab * c[2],
    ]
}

/// Per-segment counts of driven π rotations that precede the segment.
///
/// `xy[j]` counts x or y rotations before segment `j` (0-based), and so on.
/// The sign of `s₁` on segment `j` along x, y, z is `(−1)^{yz[j]}`, `(−1)^{xz[j]}`,
/// `(−1)^{xy[j]}` respectively.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParityCounts {
    pub xy: Vec<u32>,
    pub xz: Vec<u32>,
    pub yz: Vec<u32>,
}

impl ParityCounts {
    /// Diagonal sign pattern of the cumulative rotation at the start of segment `j`.
    pub fn signs(&self, j: usize) -> Vec3 {
        let sign = |n: u32| if n.is_multiple_of(2) { 1.0 } else { -1.0 };
        [sign(self.yz[j]), sign(self.xz[j]), sign(self.xy[j])]
    }
}

/// The ideal (noise-free) gate `Q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetGate(pub Mat2);

impl TargetGate {
    pub fn new(u: Mat2) -> Result<Self> {
        u.check_unitary(1e-12)?;
        Ok(TargetGate(u))
    }

    pub fn identity() -> Self {
        TargetGate(Mat2::IDENTITY)
    }

    /// `exp(-i angle n·σ/2)`.
    pub fn from_axis_angle(axis: &Vec3, angle: f64) -> Self {
        TargetGate(Mat2::rotation(axis, angle))
    }

    pub fn matrix(&self) -> &Mat2 {
        &self.0
    }

    /// `|Tr(Q†U)|/2`, which is 1 iff the two agree up to a global phase.
    pub fn overlap(&self, other: &Mat2) -> f64 {
        self.0.adjoint().mul(other).trace().norm() / 2.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PresetName {
    Free,
    PrimitiveX,
    PrimitiveY,
    PrimitiveZ,
    HahnEcho,
    CorrectedX,
    XDcg,
}

impl Serialize for PresetName {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl PresetName {
    pub const ALL: [PresetName; 7] = [
        PresetName::Free,
        PresetName::PrimitiveX,
        PresetName::PrimitiveY,
        PresetName::PrimitiveZ,
        PresetName::HahnEcho,
        PresetName::CorrectedX,
        PresetName::XDcg,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PresetName::Free => "free",
            PresetName::PrimitiveX => "primitive_x",
            PresetName::PrimitiveY => "primitive_y",
            PresetName::PrimitiveZ => "primitive_z",
            PresetName::HahnEcho => "hahn_echo",
            PresetName::CorrectedX => "corrected_x",
            PresetName::XDcg => "x_dcg",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            PresetName::Free => "free evolution for --tau (identity gate)",
            PresetName::PrimitiveX => "single π rotation about x at --rate",
            PresetName::PrimitiveY => "single π rotation about y at --rate",
            PresetName::PrimitiveZ => "single π rotation about z at --rate",
            PresetName::HahnEcho => "idle τ/2 – X(π) – idle τ/2, total --tau, pulse at --rate",
            PresetName::CorrectedX => "x-only first-order corrected X: angles (π/3, −5π/3, 7π/3) at --rate",
            PresetName::XDcg => "X(π) at Ω then X(π), X⁻(π) at 2Ω; first-order corrected X",
        }
    }
}

impl FromStr for PresetName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PresetName::ALL
            .into_iter()
            .find(|p| p.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownPreset(s.to_string()))
    }
}

impl fmt::Display for PresetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Parameters shared by all presets; each preset reads what it needs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PresetParams {
    pub rate: Option<f64>,
    pub tau: Option<f64>,
}

impl PresetParams {
    pub fn rate(rate: f64) -> Self {
        PresetParams { rate: Some(rate), tau: None }
    }

    pub fn tau(tau: f64) -> Self {
        PresetParams { rate: None, tau: Some(tau) }
    }

    pub fn rate_tau(rate: f64, tau: f64) -> Self {
        PresetParams { rate: Some(rate), tau: Some(tau) }
    }

    fn require_rate(&self, name: PresetName) -> Result<f64> {
        match self.rate {
            Some(r) if r > 0.0 && r.is_finite() => Ok(r),
            Some(r) => Err(Error::InvalidPresetParam(format!("{name}: rate must be positive, got {r}"))),
            None => Err(Error::InvalidPresetParam(format!("{name}: missing rate"))),
        }
    }

    fn require_tau(&self, name: PresetName) -> Result<f64> {
        match self.tau {
            Some(t) if t > 0.0 && t.is_finite() => Ok(t),
            Some(t) => Err(Error::InvalidPresetParam(format!("{name}: tau must be positive, got {t}"))),
            None => Err(Error::InvalidPresetParam(format!("{name}: missing tau"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Preset {
    pub name: PresetName,
    pub sequence: ControlSequence,
    pub target: TargetGate,
}

/// Build a named preset. See [`PresetName::description`] for what each one is.
pub fn preset(name: &str, params: &PresetParams) -> Result<Preset> {
    let name: PresetName = name.parse()?;
    preset_by_name(name, params)
}

pub fn preset_by_name(name: PresetName, params: &PresetParams) -> Result<Preset> {
    let segments = match name {
        PresetName::Free => vec![ControlSegment::idle(params.require_tau(name)?)?],
        PresetName::PrimitiveX | PresetName::PrimitiveY | PresetName::PrimitiveZ => {
            let axis = match name {
                PresetName::PrimitiveX => Axis::X,
                PresetName::PrimitiveY => Axis::Y,
                _ => Axis::Z,
            };
            vec![ControlSegment::by_angle(axis, PI, params.require_rate(name)?)?]
        }
        PresetName::HahnEcho => {
            let rate = params.require_rate(name)?;
            let tau = params.require_tau(name)?;
            let pulse = PI / rate;
            if !(tau > pulse) {
                return Err(Error::InvalidPresetParam(format!(
                    "hahn_echo: tau {tau} must exceed the π-pulse duration {pulse}"
                )));
            }
            let idle = 0.5 * (tau - pulse);
            vec![
                ControlSegment::idle(idle)?,
                ControlSegment::new(Axis::X, rate, pulse)?,
                ControlSegment::idle(idle)?,
            ]
        }
        PresetName::CorrectedX => {
            let rate = params.require_rate(name)?;
            // α = π/3, β = 5π/3, γ = 7π/3 solve e^{iα} − e^{i(α−β)} = 1 with α − β + γ = π.
            vec![
                ControlSegment::by_angle(Axis::X, PI / 3.0, rate)?,
                ControlSegment::by_angle(Axis::X, -5.0 * PI / 3.0, rate)?,
                ControlSegment::by_angle(Axis::X, 7.0 * PI / 3.0, rate)?,
            ]
        }
        PresetName::XDcg => {
            let rate = params.require_rate(name)?;
            vec![
                ControlSegment::by_angle(Axis::X, PI, rate)?,
                ControlSegment::by_angle(Axis::X, PI, 2.0 * rate)?,
                ControlSegment::by_angle(Axis::X, -PI, 2.0 * rate)?,
            ]
        }
    };
    let sequence = ControlSequence::new(segments)?;
    if matches!(name, PresetName::CorrectedX | PresetName::XDcg) {
        check_first_order_corrected(&sequence)?;
    }
    let target = sequence.target_gate();
    Ok(Preset { name, sequence, target })
}

/// Reject a sequence whose first-order error vector does not vanish for static noise.
pub fn check_first_order_corrected(seq: &ControlSequence) -> Result<()> {
    let residual = geometry::norm(&seq.control_vector_integral());
    if residual > 1e-9 * seq.tau() {
        return Err(Error::InvalidSequence(format!(
            "sequence is not first-order corrected: |∫s₁dt| = {residual:e} (τ = {})",
            seq.tau()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::norm;
    use num_complex::Complex64;

    fn seq(segs: &[(Axis, f64, f64)]) -> ControlSequence {
        ControlSequence::new(segs.iter().map(|&(a, r, d)| ControlSegment::new(a, r, d).unwrap()).collect()).unwrap()
    }

    #[test]
    fn rotation_at_zero_is_identity() {
        let s = seq(&[(Axis::X, 1.3, 2.0), (Axis::Y, -0.7, 1.0)]);
        assert_eq!(s.cumulative_rotation(0.0).unwrap(), Rotation3::IDENTITY);
        assert_eq!(s.control_vector(0.0).unwrap(), Z_HAT);
    }

    #[test]
    fn x_pi_rotation_is_diag_one_minus_one_minus_one() {
        let omega = 2.0;
        let s = seq(&[(Axis::X, omega, PI / omega)]);
        let r = s.cumulative_rotation(PI / omega).unwrap();
        let expect = Rotation3([[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, -1.0]]);
        assert!(r.max_abs_diff(&expect) < 1e-15);
    }

    #[test]
    fn composition_over_a_boundary() {
        let s = seq(&[(Axis::X, 1.1, 0.9), (Axis::Y, 0.4, 1.7), (Axis::Z, -2.0, 0.3)]);
        let t1 = s.boundaries()[1];
        let t2 = t1 + 0.6;
        let r1 = s.cumulative_rotation(t1).unwrap();
        let r2 = s.cumulative_rotation(t2).unwrap();
        let partial = s.segments()[1].partial_rotation(t2 - t1);
        assert!(r2.max_abs_diff(&partial.compose(&r1)) < 1e-14);
    }

    #[test]
    fn x_drive_control_vector() {
        let omega = 1.7;
        let s = seq(&[(Axis::X, omega, 3.0)]);
        for &t in &[0.0, 0.3, 1.1, 2.9] {
            let v = s.control_vector(t).unwrap();
            let expect = [0.0, (omega * t).sin(), (omega * t).cos()];
            assert!(norm(&geometry::sub(&v, &expect)) < 1e-14, "t={t}");
        }
    }

    #[test]
    fn idle_after_x_pi_points_down() {
        let s = seq(&[(Axis::X, 1.0, PI), (Axis::Identity, 0.0, 2.0)]);
        let v = s.control_vector(PI + 1.0).unwrap();
        assert!(norm(&geometry::sub(&v, &[0.0, 0.0, -1.0])) < 1e-15);
    }

    #[test]
    fn harmonics_agree_with_rotation_matrices() {
        let s = seq(&[(Axis::Y, 0.8, 1.2), (Axis::X, -1.9, 0.7), (Axis::Z, 2.5, 0.4), (Axis::Identity, 0.0, 0.5)]);
        for i in 0..=40 {
            let t = s.tau() * i as f64 / 40.0;
            let via_matrix = s.cumulative_rotation(t).unwrap().apply_transpose(&Z_HAT);
            let via_harmonics = s.control_vector(t).unwrap();
            assert!(norm(&geometry::sub(&via_matrix, &via_harmonics)) < 1e-14);
        }
    }

    #[test]
    fn time_out_of_range() {
        let s = seq(&[(Axis::X, 1.0, 1.0)]);
        assert!(matches!(s.control_vector(1.5), Err(Error::TimeOutOfRange { .. })));
        assert!(matches!(s.cumulative_rotation(-0.1), Err(Error::TimeOutOfRange { .. })));
    }

    #[test]
    fn invalid_segments_rejected() {
        assert!(ControlSegment::new(Axis::Identity, 1.0, 1.0).is_err());
        assert!(ControlSegment::new(Axis::X, 1.0, 0.0).is_err());
        assert!(ControlSegment::new(Axis::X, 1.0, -2.0).is_err());
        assert!(ControlSequence::new(vec![]).is_err());
    }

    #[test]
    fn s2_s3_free_evolution_vanish() {
        let s = seq(&[(Axis::Identity, 0.0, 2.0)]);
        assert_eq!(s.s2(0.3, 1.2).unwrap(), [0.0; 3]);
        assert_eq!(s.s3(0.1, 0.5, 1.5).unwrap(), [0.0; 3]);
        assert_eq!(s.s3_expanded(0.1, 0.5, 1.5).unwrap(), [0.0; 3]);
    }

    #[test]
    fn s2_s3_orthogonal_triad() {
        let (a, b, c) = (X_HAT, Y_HAT, Z_HAT);
        assert_eq!(geometry::cross(&b, &a), [0.0, 0.0, -1.0]);
        assert_eq!(s3_cross(&a, &b, &c), [0.0; 3]);
        assert_eq!(s3_dot(&a, &b, &c), [0.0; 3]);
    }

    #[test]
    fn x_only_s2_is_along_x() {
        let s = seq(&[(Axis::X, 1.0, 1.0), (Axis::X, -2.0, 0.8), (Axis::Identity, 0.0, 0.4)]);
        for &(t1, t2) in &[(0.1, 0.9), (0.5, 1.7), (1.9, 0.2)] {
            let v = s.s2(t1, t2).unwrap();
            assert!(v[1].abs() < 1e-15 && v[2].abs() < 1e-15);
        }
    }

    #[test]
    fn parity_counts_strictly_before() {
        let s = seq(&[(Axis::X, 1.0, PI), (Axis::Y, 1.0, PI), (Axis::X, 1.0, PI)]);
        let p = s.parity_counts();
        assert_eq!(p.yz[2], 1);
        assert_eq!((p.xy[0], p.xz[0], p.yz[0]), (0, 0, 0));
        let idle = seq(&[(Axis::Identity, 0.0, 1.0), (Axis::Identity, 0.0, 1.0)]);
        let p = idle.parity_counts();
        assert_eq!(p.xy, vec![0, 0]);
        assert_eq!(p.yz, vec![0, 0]);
    }

    #[test]
    fn presets_basic() {
        let p = preset("primitive_x", &PresetParams::rate(2.0)).unwrap();
        assert_eq!(p.sequence.len(), 1);
        assert_eq!(p.sequence.segments()[0].axis, Axis::X);
        assert!((p.sequence.tau() - PI / 2.0).abs() < 1e-15);
        let minus_i_x = Mat2::pauli_x().scale(Complex64::new(0.0, -1.0));
        assert!(p.target.matrix().max_abs_diff(&minus_i_x) < 1e-15);

        let f = preset("free", &PresetParams::tau(3.0)).unwrap();
        assert!(f.target.matrix().max_abs_diff(&Mat2::IDENTITY) < 1e-15);

        assert!(matches!(preset("nope", &PresetParams::rate(1.0)), Err(Error::UnknownPreset(_))));
        assert!(preset("primitive_x", &PresetParams::rate(-1.0)).is_err());
        assert!(preset("primitive_x", &PresetParams::rate(0.0)).is_err());
    }

    #[test]
    fn corrected_x_cancels_first_order_and_implements_x() {
        let p = preset("corrected_x", &PresetParams::rate(1.0)).unwrap();
        let angles: Vec<f64> = p.sequence.segments().iter().map(|s| s.net_angle()).collect();
        for (got, want) in angles.iter().zip([PI / 3.0, -5.0 * PI / 3.0, 7.0 * PI / 3.0]) {
            assert!((got - want).abs() < 1e-14);
        }
        assert!(norm(&p.sequence.control_vector_integral()) < 1e-12);
        let x = TargetGate::from_axis_angle(&X_HAT, PI);
        assert!((x.overlap(p.target.matrix()) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn x_dcg_validates() {
        let p = preset("x_dcg", &PresetParams::rate(1.0)).unwrap();
        assert!(p.sequence.is_pi_sequence());
        assert!(norm(&p.sequence.control_vector_integral()) < 1e-12);
        let x = TargetGate::from_axis_angle(&X_HAT, PI);
        assert!((x.overlap(p.target.matrix()) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn uncorrected_sequence_fails_check() {
        let p = preset("primitive_x", &PresetParams::rate(1.0)).unwrap();
        assert!(check_first_order_corrected(&p.sequence).is_err());
    }

    #[test]
    fn json_round_trip() {
        let text = r#"{"segments":[{"axis":"x","rate":2.0,"duration":1.5},{"axis":"i","rate":0,"duration":0.5}]}"#;
        let s = ControlSequence::from_json(text).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(ControlSequence::from_json(&s.to_json()).unwrap(), s);
        assert!(ControlSequence::from_json(r#"{"segments":[{"axis":"i","rate":1,"duration":1}]}"#).is_err());
    }
}
