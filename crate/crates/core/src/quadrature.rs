//! Integration kernels.
//!
//! * frequency integrals on log-spaced grids (trapezoid with doubling refinement,
//!   or fixed Simpson rules for tensor-product double integrals);
//! * cumulative (prefix-sum) trapezoid transforms on segment-aligned time grids,
//!   which turn the nested simplex integrals of the fourth-order filters into
//!   O(M) passes;
//! * composite Gauss–Legendre panels for smooth oscillatory integrals.
//!
//! All sums that feed a reported number use [`pairwise_sum`] so results do not
//! depend on evaluation order.

use num_complex::Complex64;

use crate::control::ControlSequence;
use crate::error::{Error, Result};

/// Recursive pairwise summation (fixed topology, deterministic).
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if values.len() <= BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

pub fn pairwise_sum_complex(values: &[Complex64]) -> Complex64 {
    const BLOCK: usize = 32;
    if values.len() <= BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum_complex(&values[..mid]) + pairwise_sum_complex(&values[mid..])
}

/// `(e^{ix} − 1)/(ix)`, evaluated stably near `x = 0`.
#[inline]
pub fn phase_ratio(x: f64) -> Complex64 {
    if x.abs() < 1e-4 {
        // 1 + ix/2 − x²/6 − ix³/24 + x⁴/120
        let x2 = x * x;
        Complex64::new(1.0 - x2 / 6.0 + x2 * x2 / 120.0, x / 2.0 - x * x2 / 24.0)
    } else {
        let half = (0.5 * x).sin();
        Complex64::new(x.sin() / x, 2.0 * half * half / x)
    }
}

/// Pairwise sum of `term(0..n)` without materialising the terms.
pub fn pairwise_by(n: usize, term: &impl Fn(usize) -> Complex64) -> Complex64 {
    fn rec(lo: usize, hi: usize, term: &impl Fn(usize) -> Complex64) -> Complex64 {
        if hi - lo <= 32 {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in lo..hi {
                acc += term(k);
            }
            return acc;
        }
        let mid = lo + (hi - lo) / 2;
        rec(lo, mid, term) + rec(mid, hi, term)
    }
    rec(0, n, term)
}

// ---------------------------------------------------------------------------
// Frequency grids and integration
// ---------------------------------------------------------------------------

/// Log-spaced frequency nodes `ω₁ < … < ω_N` on `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    nodes: Vec<f64>,
    lo: f64,
    hi: f64,
}

impl FrequencyGrid {
    pub const MIN_POINTS: usize = 16;

    pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(lo > 0.0) || !(hi > lo) || !hi.is_finite() {
            return Err(Error::InvalidConfig(format!("frequency grid needs 0 < lo < hi, got [{lo}, {hi}]")));
        }
        if n < Self::MIN_POINTS {
            return Err(Error::InvalidConfig(format!(
                "frequency grid needs at least {} points, got {n}",
                Self::MIN_POINTS
            )));
        }
        let (a, b) = (lo.ln(), hi.ln());
        let step = (b - a) / (n - 1) as f64;
        let mut nodes: Vec<f64> = (0..n).map(|k| (a + step * k as f64).exp()).collect();
        nodes[0] = lo;
        nodes[n - 1] = hi;
        Ok(FrequencyGrid { nodes, lo, hi })
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

    pub fn bounds(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }
}

/// Nodes and weights of a fixed 1-D rule: `∫ f dω ≈ Σ w_k f(ω_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl FrequencyRule {
    /// Composite Simpson in `u = ln ω` on `[lo, hi]` with `intervals` (rounded up to even)
    /// sub-intervals. When `with_origin` is set a node at `ω = 0` is prepended and the
    /// head `[0, lo]` is covered by a trapezoid.
    pub fn log_simpson(lo: f64, hi: f64, intervals: usize, with_origin: bool) -> Result<Self> {
        if !(lo > 0.0) || !(hi > lo) || !hi.is_finite() {
            return Err(Error::InvalidConfig(format!("frequency rule needs 0 < lo < hi, got [{lo}, {hi}]")));
        }
        let n = intervals.max(FrequencyGrid::MIN_POINTS);
        let n = n + n % 2;
        let (a, b) = (lo.ln(), hi.ln());
        let h = (b - a) / n as f64;
        let mut nodes = Vec::with_capacity(n + 2);
        let mut weights = Vec::with_capacity(n + 2);
        if with_origin {
            nodes.push(0.0);
            weights.push(0.5 * lo);
        }
        for k in 0..=n {
            let omega = if k == 0 {
                lo
            } else if k == n {
                hi
            } else {
                (a + h * k as f64).exp()
            };
            let simpson = if k == 0 || k == n {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            // dω = ω du
            let mut w = simpson * h / 3.0 * omega;
            if with_origin && k == 0 {
                w += 0.5 * lo;
            }
            nodes.push(omega);
            weights.push(w);
        }
        Ok(FrequencyRule { nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        let terms: Vec<f64> = self.nodes.iter().zip(&self.weights).map(|(&w, &wt)| wt * f(w)).collect();
        pairwise_sum(&terms)
    }
}

/// Knobs for [`integrate_frequency`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationSettings {
    /// Relative change between successive refinements that counts as converged.
    pub rtol: f64,
    /// Number of log-grid intervals at the first level.
    pub initial_intervals: usize,
    /// Refinement stops with an error beyond this many intervals.
    pub max_intervals: usize,
}

impl Default for IntegrationSettings {
    fn default() -> Self {
        IntegrationSettings { rtol: 1e-6, initial_intervals: 1024, max_intervals: 1 << 20 }
    }
}

impl IntegrationSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0) {
            return Err(Error::InvalidConfig(format!("rtol must be positive, got {}", self.rtol)));
        }
        if self.initial_intervals < FrequencyGrid::MIN_POINTS || self.max_intervals < self.initial_intervals {
            return Err(Error::InvalidConfig("interval counts out of order".into()));
        }
        Ok(())
    }
}

/// Outcome of a refined integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integrated<const N: usize> {
    pub value: [f64; N],
    pub intervals: usize,
    pub converged: bool,
    pub previous: [f64; N],
}

/// `∫_lo^hi f(ω) dω` by composite trapezoid in `ln ω` with one Richardson step, doubling
/// the node count until the relative change drops below `rtol`. Vector-valued so several integrals can share
/// one sweep of an expensive integrand; convergence is judged on the max-norm.
/// Returns the last estimate with `converged = false` instead of an error so callers
/// can choose to flag rather than fail.
pub fn integrate_frequency_n<const N: usize>(
    f: impl Fn(f64) -> [f64; N],
    lo: f64,
    hi: f64,
    settings: &IntegrationSettings,
) -> Result<Integrated<N>> {
    settings.validate()?;
    if !(lo > 0.0) || !(hi > lo) || !hi.is_finite() {
        return Err(Error::InvalidConfig(format!("integration window needs 0 < lo < hi, got [{lo}, {hi}]")));
    }
    let (a, b) = (lo.ln(), hi.ln());
    // End nodes use `lo`, `hi` exactly so a band edge is not pushed across by rounding.
    let g = |u: f64| {
        let omega = if u == a {
            lo
        } else if u == b {
            hi
        } else {
            u.exp()
        };
        let mut v = f(omega);
        for x in v.iter_mut() {
            *x *= omega;
        }
        v
    };

    let mut n = settings.initial_intervals;
    let mut h = (b - a) / n as f64;
    // Level 0: full trapezoid.
    let mut cols: Vec<Vec<f64>> = vec![Vec::with_capacity(n + 1); N];
    for k in 0..=n {
        let u = if k == n { b } else { a + h * k as f64 };
        let v = g(u);
        let end = k == 0 || k == n;
        for (c, x) in cols.iter_mut().zip(v) {
            c.push(if end { 0.5 * x } else { x });
        }
    }
    let mut estimate = [0.0; N];
    for (e, c) in estimate.iter_mut().zip(&cols) {
        *e = h * pairwise_sum(c);
    }

    // One Richardson step on the trapezoid sequence; convergence is judged between
    // successive extrapolated values.
    let mut extrapolated: Option<[f64; N]> = None;
    let mut before: Option<[f64; N]> = None;
    loop {
        if n * 2 > settings.max_intervals {
            let value = extrapolated.unwrap_or(estimate);
            let previous = before.unwrap_or([f64::NAN; N]);
            return Ok(Integrated { value, intervals: n, converged: false, previous });
        }
        // Add midpoints.
        let mut mids: Vec<Vec<f64>> = vec![Vec::with_capacity(n); N];
        for k in 0..n {
            let v = g(a + h * (k as f64 + 0.5));
            for (c, x) in mids.iter_mut().zip(v) {
                c.push(x);
            }
        }
        let coarse = estimate;
        for (e, c) in estimate.iter_mut().zip(&mids) {
            *e = 0.5 * *e + 0.5 * h * pairwise_sum(c);
        }
        n *= 2;
        h *= 0.5;
        let r: [f64; N] = std::array::from_fn(|i| (4.0 * estimate[i] - coarse[i]) / 3.0);
        if let Some(previous) = extrapolated {
            let scale = r.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
            let change = r.iter().zip(&previous).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
            if change <= settings.rtol * scale || scale == 0.0 {
                return Ok(Integrated { value: r, intervals: n, converged: true, previous });
            }
        }
        before = extrapolated;
        extrapolated = Some(r);
    }
}

/// Scalar wrapper over [`integrate_frequency_n`] that turns non-convergence into an error.
pub fn integrate_frequency(f: impl Fn(f64) -> f64, lo: f64, hi: f64, settings: &IntegrationSettings) -> Result<f64> {
    let out = integrate_frequency_n(|w| [f(w)], lo, hi, settings)?;
    if !out.converged {
        return Err(Error::NoConvergence { points: out.intervals + 1, previous: out.previous[0], last: out.value[0] });
    }
    Ok(out.value[0])
}

// ---------------------------------------------------------------------------
// Time grids and cumulative transforms
// ---------------------------------------------------------------------------

/// Time nodes `0 = u₀ < … < u_M = τ` containing every segment boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    nodes: Vec<f64>,
    /// Trapezoid weights for the full integral.
    weights: Vec<f64>,
}

impl TimeGrid {
    pub const MIN_PER_SEGMENT: usize = 8;

    /// Uniform sub-grid with `counts[j]` intervals inside segment `j`.
    pub fn with_counts(seq: &ControlSequence, counts: &[usize]) -> Result<Self> {
        if counts.len() != seq.len() {
            return Err(Error::InvalidConfig("one interval count per segment required".into()));
        }
        if let Some(&c) = counts.iter().find(|&&c| c < Self::MIN_PER_SEGMENT) {
            return Err(Error::InvalidConfig(format!(
                "time grid needs at least {} intervals per segment, got {c}",
                Self::MIN_PER_SEGMENT
            )));
        }
        let b = seq.boundaries();
        let total: usize = counts.iter().sum();
        let mut nodes = Vec::with_capacity(total + 1);
        nodes.push(0.0);
        for (j, &m) in counts.iter().enumerate() {
            let (t0, t1) = (b[j], b[j + 1]);
            let h = (t1 - t0) / m as f64;
            for k in 1..m {
                nodes.push(t0 + h * k as f64);
            }
            nodes.push(t1);
        }
        Ok(Self::from_sorted_nodes(nodes))
    }

    pub fn aligned(seq: &ControlSequence, per_segment: usize) -> Result<Self> {
        Self::with_counts(seq, &vec![per_segment; seq.len()])
    }

    fn from_sorted_nodes(nodes: Vec<f64>) -> Self {
        let m = nodes.len();
        let mut weights = vec![0.0; m];
        for k in 0..m - 1 {
            let h = nodes[k + 1] - nodes[k];
            weights[k] += 0.5 * h;
            weights[k + 1] += 0.5 * h;
        }
        TimeGrid { nodes, weights }
    }

    /// Plain uniform grid on `[0, tau]`, used by tests that do not need alignment.
    pub fn uniform(tau: f64, intervals: usize) -> Result<Self> {
        if !(tau > 0.0) || intervals < Self::MIN_PER_SEGMENT {
            return Err(Error::InvalidConfig("uniform grid needs tau > 0 and enough intervals".into()));
        }
        let h = tau / intervals as f64;
        let mut nodes: Vec<f64> = (0..=intervals).map(|k| h * k as f64).collect();
        nodes[intervals] = tau;
        Ok(Self::from_sorted_nodes(nodes))
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `e^{iωt}` at every node.
    pub fn phasors(&self, omega: f64) -> Vec<Complex64> {
        self.nodes
            .iter()
            .map(|&t| {
                let (s, c) = (omega * t).sin_cos();
                Complex64::new(c, s)
            })
            .collect()
    }

    /// Trapezoid `∫ g dt` of sampled values.
    pub fn integrate(&self, values: &[Complex64]) -> Complex64 {
        let w = &self.weights;
        pairwise_by(values.len(), &|k| values[k] * w[k])
    }

    /// `∫ a·P dt` where `P` is a prefix integral, using cell averages of both factors:
    /// `Σ (h/4)(a_m + a_{m+1})(P_m + P_{m+1})`. Second order like the trapezoid, and it
    /// obeys discrete summation by parts, so `∫f·P_g + ∫g·P_f = (∫f)(∫g)` holds to
    /// rounding.
    pub fn integrate_product(&self, a: &[Complex64], p: &[Complex64]) -> Complex64 {
        let t = &self.nodes;
        pairwise_by(a.len() - 1, &|k| (a[k] + a[k + 1]) * (p[k] + p[k + 1]) * (0.25 * (t[k + 1] - t[k])))
    }

    /// Prefix values of [`Self::integrate_product`].
    pub fn cumulative_product(&self, a: &[Complex64], p: &[Complex64]) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(a.len());
        let mut acc = Complex64::new(0.0, 0.0);
        out.push(acc);
        for k in 0..a.len() - 1 {
            acc += (a[k] + a[k + 1]) * (p[k] + p[k + 1]) * (0.25 * (self.nodes[k + 1] - self.nodes[k]));
            out.push(acc);
        }
        out
    }

    /// Prefix trapezoid values `P(u_m) = ∫₀^{u_m} g dt`, `P(0) = 0`.
    pub fn cumulative(&self, values: &[Complex64]) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(values.len());
        let mut acc = Complex64::new(0.0, 0.0);
        out.push(acc);
        for k in 0..values.len() - 1 {
            let h = self.nodes[k + 1] - self.nodes[k];
            acc += (values[k] + values[k + 1]) * (0.5 * h);
            out.push(acc);
        }
        out
    }
}

/// Prefix values of `∫₀^{u_m} f(t) e^{iωt} dt` for real samples `f` on `grid`.
#[derive(Debug, Clone, PartialEq)]
pub struct CumulativeTransform {
    pub omega: f64,
    pub values: Vec<Complex64>,
}

impl CumulativeTransform {
    pub fn last(&self) -> Complex64 {
        *self.values.last().expect("non-empty grid")
    }
}

pub fn cumulative_transform(f: &[f64], omega: f64, grid: &TimeGrid) -> CumulativeTransform {
    let g: Vec<Complex64> = f.iter().zip(grid.phasors(omega)).map(|(&x, e)| e * x).collect();
    CumulativeTransform { omega, values: grid.cumulative(&g) }
}

/// `∫₀^τ f_A(t) e^{iω_A t} [∫₀^t f_B(t') e^{iω_B t'} dt'] dt` in O(M).
pub fn nested_double(fa: &[f64], fb: &[f64], omega_a: f64, omega_b: f64, grid: &TimeGrid) -> Complex64 {
    let inner = cumulative_transform(fb, omega_b, grid);
    let outer: Vec<Complex64> = fa.iter().zip(grid.phasors(omega_a)).map(|(&x, e)| e * x).collect();
    grid.integrate_product(&outer, &inner.values)
}

/// `∫₀^τ dt₃ f₃ e^{iα₃t₃} ∫₀^{t₃} dt₂ f₂ e^{iα₂t₂} ∫₀^{t₂} dt₁ f₁ e^{iα₁t₁}` in O(M).
pub fn nested_triple(f: [&[f64]; 3], alpha: [f64; 3], grid: &TimeGrid) -> Complex64 {
    let p1 = cumulative_transform(f[0], alpha[0], grid);
    let g2: Vec<Complex64> = f[1].iter().zip(grid.phasors(alpha[1])).map(|(&x, e)| e * x).collect();
    let p2 = grid.cumulative_product(&g2, &p1.values);
    let g3: Vec<Complex64> = f[2].iter().zip(grid.phasors(alpha[2])).map(|(&x, e)| e * x).collect();
    grid.integrate_product(&g3, &p2)
}

// ---------------------------------------------------------------------------
// Gauss–Legendre
// ---------------------------------------------------------------------------

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss–Legendre needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// A fixed-order Gauss–Legendre rule applied on sub-panels.
#[derive(Debug, Clone)]
pub struct GaussPanels {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussPanels {
    pub fn new(order: usize) -> Self {
        let (nodes, weights) = gauss_legendre(order);
        GaussPanels { nodes, weights }
    }

    /// Absolute nodes and weights covering `[a, b]` with `panels` equal panels.
    pub fn rule(&self, a: f64, b: f64, panels: usize) -> impl Iterator<Item = (f64, f64)> + '_ {
        let panels = panels.max(1);
        let h = (b - a) / panels as f64;
        (0..panels).flat_map(move |p| {
            let lo = a + h * p as f64;
            let mid = lo + 0.5 * h;
            self.nodes.iter().zip(&self.weights).map(move |(&x, &w)| (mid + 0.5 * h * x, 0.5 * h * w))
        })
    }

    pub fn integrate(&self, a: f64, b: f64, panels: usize, f: impl Fn(f64) -> f64) -> f64 {
        let terms: Vec<f64> = self.rule(a, b, panels).map(|(t, w)| w * f(t)).collect();
        pairwise_sum(&terms)
    }
}
