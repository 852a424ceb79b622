//! Numerical laboratory for open quantum maps.
//!
//! The crate is split along the natural pipeline:
//!
//! * [`classical`] — open baker maps on the torus, their trapped sets, box
//!   dimension, unstable Jacobian and topological pressure. These are exact
//!   for the piecewise-linear family and act as oracles for the quantum side.
//! * [`quantize`] — matrix quantizations (baker, cat), coherent states,
//!   Husimi densities and a direct quadrature of the one-dimensional Fourier
//!   integral operator with a phase-space transport check.
//! * [`spectra`] — dense non-Hermitian spectra, eigenvalue counting, Weyl
//!   exponent fits, spectral-gap reports and decay curves.
//!
//! Data-parallel loops run on rayon when the `parallel` feature is enabled
//! (the default) and fall back to plain iterators otherwise. Every reduction
//! has a fixed order, so results are bit-identical across thread counts.

pub mod classical;
pub mod exec;
pub mod fit;
pub mod linalg;
pub mod quantize;
pub mod spectra;

pub use num_complex::Complex64;

pub use classical::{
    ClassicalError, DimensionEstimate, MapStep, OpenBakerSpec, PhasePoint, PressureResult,
    DEFAULT_ENUMERATION_CAP,
};
pub use exec::Execution;
pub use quantize::{
    CatSpec, HoleInterval, LineGrid, LineState, MapModel, PlanckParameter, QuantizeError,
    QuantumMap, TorusState,
};

pub use spectra::{GapReport, SpectralError, SpectrumResult, WeylFit};
