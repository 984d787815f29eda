//! Filter-function toolkit for single-qubit gates under classical Gaussian dephasing noise.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod control;
pub mod error;
pub mod fidelity;
pub mod filters;
pub mod geometry;
pub mod montecarlo;
pub mod quadrature;
pub mod spectra;

pub use control::{Axis, ControlSegment, ControlSequence, ParityCounts, Preset, PresetName, PresetParams, TargetGate};
pub use error::{Error, Result};
pub use fidelity::{fidelity, FidelityReport, FidelitySettings, MomentA1, Order};
pub use filters::{F2Grid, F2Settings};
pub use montecarlo::{ensemble_fidelity, EnsembleResult, McSettings};
pub use spectra::{NoiseSpectrum, NoiseStrength};
