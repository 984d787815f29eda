//! Reference implementations shared by the integration tests. Everything here is
//! brute force and deliberately independent of the library's fast paths: control
//! vectors come from 2×2 propagators, and multi-dimensional integrals are dense sums.
#![allow(dead_code)]

use num_complex::Complex64;
use qfilter::geometry::Mat2;
use qfilter::ControlSequence;

/// `s₁,ₗ(t) = ½ Tr(U_c†(t) σ_z U_c(t) σ_l)` from the spin-½ propagator.
pub fn control_vector_su2(seq: &ControlSequence, t: f64) -> [f64; 3] {
    let b = seq.boundaries();
    let mut u = Mat2::IDENTITY;
    for (j, seg) in seq.segments().iter().enumerate() {
        if t <= b[j] {
            break;
        }
        let dt = (t.min(b[j + 1])) - b[j];
        u = seg.partial_unitary(dt).mul(&u);
    }
    let rotated = u.adjoint().mul(&Mat2::pauli_z()).mul(&u);
    let paulis = [Mat2::pauli_x(), Mat2::pauli_y(), Mat2::pauli_z()];
    std::array::from_fn(|l| 0.5 * rotated.mul(&paulis[l]).trace().re)
}

pub fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Midpoint samples of `s₁` on `m` equal cells.
pub fn midpoint_samples(seq: &ControlSequence, m: usize) -> (f64, Vec<f64>, Vec<[f64; 3]>) {
    let h = seq.tau() / m as f64;
    let t: Vec<f64> = (0..m).map(|i| (i as f64 + 0.5) * h).collect();
    let s = t.iter().map(|&t| control_vector_su2(seq, t)).collect();
    (h, t, s)
}

/// Dense 4-D midpoint evaluation of `F₂ₐ,ᵢ`, `F₂ᵦ,ᵢ` and `F₂𝒸,ᵢⱼ` from their real
/// time-domain forms:
///
/// * `F₂ₐ,ᵢ = ω²ω′² ∫_{t₁<t₂} ∫_{t₃<t₄} s₂ᵢ(t₁,t₂) s₂ᵢ(t₃,t₄) K`
/// * `F₂ᵦ,ᵢ = ⅔ ω²ω′² ∫_{t₁<t₂<t₃} ∫ s₁ᵢ(t₄) s₃ᵢ(t₁,t₂,t₃) K`
/// * `F₂𝒸,ᵢⱼ = ω²ω′² ∫⁴ s₁ᵢ(t₄)s₁ᵢ(t₃)s₁ⱼ(t₂)s₁ⱼ(t₁) K𝒸`
///
/// with `K = cos ω(t₂−t₁) cos ω′(t₄−t₃) + cos ω(t₃−t₁) cos ω′(t₄−t₂) + cos ω(t₄−t₁) cos ω′(t₃−t₂)`
/// and `K𝒸` the same pairings with `ω` attached to `t₄`. Cells on a simplex diagonal get
/// the fraction of their volume inside the simplex.
pub struct DenseF2 {
    pub a: [f64; 3],
    pub b: [f64; 3],
    pub c: [[f64; 3]; 3],
}

pub fn dense_f2(seq: &ControlSequence, w: f64, wp: f64, m: usize) -> DenseF2 {
    let (h, t, s) = midpoint_samples(seq, m);
    let cw: Vec<Vec<f64>> = (0..m).map(|i| (0..m).map(|j| (w * (t[i] - t[j])).cos()).collect()).collect();
    let cwp: Vec<Vec<f64>> = (0..m).map(|i| (0..m).map(|j| (wp * (t[i] - t[j])).cos()).collect()).collect();
    let pre = w * w * wp * wp;
    let diag2 = |i: usize, j: usize| if i == j { 0.5 } else { 1.0 };

    // s₂(t₁,t₂) = s₁(t₂)×s₁(t₁) for t₁ ≤ t₂
    let mut a = [0.0; 3];
    for i1 in 0..m {
        for i2 in i1..m {
            let s2a = cross(&s[i2], &s[i1]);
            let wa = diag2(i1, i2);
            for i3 in 0..m {
                for i4 in i3..m {
                    let s2b = cross(&s[i4], &s[i3]);
                    let k = cw[i2][i1] * cwp[i4][i3] + cw[i3][i1] * cwp[i4][i2] + cw[i4][i1] * cwp[i3][i2];
                    let wt = wa * diag2(i3, i4) * k;
                    for c in 0..3 {
                        a[c] += wt * s2a[c] * s2b[c];
                    }
                }
            }
        }
    }
    let vol = h.powi(4);
    let a = a.map(|v| v * pre * vol);

    let mut b = [0.0; 3];
    for i1 in 0..m {
        for i2 in i1..m {
            for i3 in i2..m {
                let frac = match (i1 == i2, i2 == i3) {
                    (true, true) => 1.0 / 6.0,
                    (false, false) => 1.0,
                    _ => 0.5,
                };
                let (x, y, z) = (&s[i1], &s[i2], &s[i3]);
                // 2(z·x) y − (z·y) x − (x·y) z
                let (zx, zy, xy) = (dot(z, x), dot(z, y), dot(x, y));
                let s3: [f64; 3] = std::array::from_fn(|c| 2.0 * zx * y[c] - zy * x[c] - xy * z[c]);
                for i4 in 0..m {
                    let k = cw[i2][i1] * cwp[i4][i3] + cw[i3][i1] * cwp[i4][i2] + cw[i4][i1] * cwp[i3][i2];
                    let wt = frac * k;
                    for c in 0..3 {
                        b[c] += wt * s[i4][c] * s3[c];
                    }
                }
            }
        }
    }
    let b = b.map(|v| v * pre * vol * 2.0 / 3.0);

    let mut c = [[0.0; 3]; 3];
    for i1 in 0..m {
        for i2 in 0..m {
            for i3 in 0..m {
                for i4 in 0..m {
                    let k = cw[i4][i3] * cwp[i2][i1] + cw[i4][i2] * cwp[i3][i1] + cw[i4][i1] * cwp[i3][i2];
                    for i in 0..3 {
                        let si = s[i4][i] * s[i3][i] * k;
                        for j in 0..3 {
                            c[i][j] += si * s[i2][j] * s[i1][j];
                        }
                    }
                }
            }
        }
    }
    let c = c.map(|r| r.map(|v| v * pre * vol));
    DenseF2 { a, b, c }
}

/// `y⃗₁(ω)` by a dense midpoint sum over the SU(2)-derived control vector.
pub fn y1_midpoint(seq: &ControlSequence, w: f64, m: usize) -> [Complex64; 3] {
    let (h, t, s) = midpoint_samples(seq, m);
    let mut acc = [Complex64::new(0.0, 0.0); 3];
    for (ti, si) in t.iter().zip(&s) {
        let e = Complex64::from_polar(h, w * ti);
        for l in 0..3 {
            acc[l] += e * si[l];
        }
    }
    acc.map(|z| Complex64::new(0.0, -w) * z)
}

/// Random sequence of ±π rotations about x, y, z mixed with idle periods, total
/// duration near 1.
pub fn random_pi_sequence(rng: &mut impl rand::Rng, max_segments: usize) -> ControlSequence {
    use qfilter::{Axis, ControlSegment};
    let n = rng.random_range(1..=max_segments);
    let segs = (0..n)
        .map(|_| match rng.random_range(0..4) {
            0 => ControlSegment::idle(rng.random_range(0.05..0.5)).unwrap(),
            k => {
                let axis = [Axis::X, Axis::Y, Axis::Z][k - 1];
                let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                let speed = std::f64::consts::PI * rng.random_range(1.0..20.0);
                ControlSegment::by_angle(axis, sign * std::f64::consts::PI, speed).unwrap()
            }
        })
        .collect();
    ControlSequence::new(segs).unwrap()
}

/// Random sequence with arbitrary rotation angles.
pub fn random_sequence(rng: &mut impl rand::Rng, max_segments: usize) -> ControlSequence {
    use qfilter::{Axis, ControlSegment};
    let n = rng.random_range(1..=max_segments);
    let segs = (0..n)
        .map(|_| {
            let axis = [Axis::Identity, Axis::X, Axis::Y, Axis::Z][rng.random_range(0..4)];
            let rate = if axis == Axis::Identity { 0.0 } else { rng.random_range(-12.0..12.0) };
            ControlSegment::new(axis, rate, rng.random_range(0.1..0.6)).unwrap()
        })
        .collect();
    ControlSequence::new(segs).unwrap()
}

/// `S` rescaled so that `ξ = Δη τ/2` takes the given value.
pub fn with_xi(spectrum: &qfilter::NoiseSpectrum, tau: f64, xi: f64) -> qfilter::NoiseSpectrum {
    let s = spectrum.resolved(tau);
    let v = s.variance().unwrap();
    s.scaled((2.0 * xi / tau).powi(2) / v)
}

/// Prints the one-line verdict for an acceptance criterion and returns it.
pub fn verdict(id: u32, title: &str, pass: bool, detail: &str) -> bool {
    println!("{} criterion {id}: {title} | {detail}", if pass { "PASS" } else { "FAIL" });
    pass
}
