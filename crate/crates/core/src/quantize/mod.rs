//! Quantum transfer operators.
//!
//! Torus models ([`torus`]) give finite matrices `M(T, h)` with
//! `h = 1/(2πN)`; the line model ([`fio`]) integrates the oscillatory kernel
//! `a(x₁,ξ₀)·exp(i(W(x₁,ξ₀) − ξ₀x₀)/h)` directly on a grid.

use std::io::{self, Read, Write};

use faer::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::classical::OpenBakerSpec;
use crate::linalg::{self, CMatrix};

pub mod coherent;
pub mod fio;
pub mod torus;

pub use coherent::{husimi, husimi_peak, line_coherent_state, torus_coherent_state, HusimiGrid, LineGrid, LineState, TorusState};
pub use fio::{
    fio_apply, solve_map_from_generating, transport_check, GeneratingFunction, QuadraticGenerator,
    SmoothBoxSymbol, SupportBox, SymbolFunction, TransportReport,
};
pub use torus::{dft_matrix, quantize_closed_baker, quantize_open_baker, quantize_open_cat, CatSpec, HoleInterval};

/// Default phase convention θ for the baker family (antiperiodic).
pub const DEFAULT_THETA: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QuantizeError {
    #[error("dimension must be at least 1")]
    InvalidDimension,
    #[error("dim not divisible by base: {dim} mod {base} != 0")]
    DimensionNotDivisible { dim: usize, base: u32 },
    #[error("cat matrix is not hyperbolic: |trace| = {trace} <= 2")]
    NotHyperbolic { trace: i64 },
    #[error("cat matrix determinant is {det}, expected 1")]
    BadDeterminant { det: i64 },
    #[error("phase convention cannot be satisfied for N = {dim}: {reason}")]
    ConventionUnsatisfiable { dim: usize, reason: String },
    #[error("hole interval [{start}, {end}) is not inside [0, 1]")]
    InvalidHole { start: f64, end: f64 },
    #[error("grid must have positive spacing and at least two nodes")]
    InvalidGrid,
    #[error("grid spacing {spacing} exceeds the limit {limit}")]
    GridTooCoarse { spacing: f64, limit: f64 },
    #[error("grid [{start}, {end}] does not cover [{need_start}, {need_end}]")]
    GridTooNarrow { start: f64, end: f64, need_start: f64, need_end: f64 },
    #[error("{grid} grid spacing {spacing} violates the phase-resolution limit {limit}")]
    PhaseResolutionViolated { grid: &'static str, spacing: f64, limit: f64 },
    #[error("symbol support does not meet the output grid")]
    SupportNotCovered,
    #[error("Newton iteration did not converge after {iterations} steps")]
    NoConvergence { iterations: usize },
    #[error("mixed derivative of the generating function vanishes at x1 = {x1}")]
    DegenerateJacobian { x1: f64 },
    #[error("empty input")]
    EmptyInput,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Effective Planck constant of a torus quantization, `h = 1/(2πN)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PlanckParameter {
    dim: usize,
}

impl PlanckParameter {
    pub fn new(dim: usize) -> Result<Self, QuantizeError> {
        if dim == 0 {
            return Err(QuantizeError::InvalidDimension);
        }
        Ok(PlanckParameter { dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn h(&self) -> f64 {
        1.0 / (2.0 * std::f64::consts::PI * self.dim as f64)
    }
}

/// How a [`QuantumMap`] was built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum MapModel {
    Baker { spec: OpenBakerSpec, theta: f64 },
    Cat { spec: CatSpec, hole: HoleInterval },
}

impl MapModel {
    /// True when no part of phase space is removed.
    pub fn is_closed(&self) -> bool {
        match self {
            MapModel::Baker { spec, .. } => spec.is_closed(),
            MapModel::Cat { hole, .. } => hole.is_empty(),
        }
    }
}

/// A finite quantum map `M(T, h)` acting on `ℂᴺ`.
#[derive(Debug, Clone)]
pub struct QuantumMap {
    pub planck: PlanckParameter,
    pub matrix: CMatrix,
    pub model: MapModel,
}

const MATRIX_MAGIC: &[u8; 4] = b"OQM1";

impl QuantumMap {
    pub fn dim(&self) -> usize {
        self.planck.dim()
    }

    pub fn max_singular_value(&self) -> Result<f64, linalg::LinalgError> {
        Ok(linalg::singular_values(self.matrix.as_ref())?
            .first()
            .copied()
            .unwrap_or(0.0))
    }

    /// `max |M*M − I|`.
    pub fn unitarity_defect(&self) -> f64 {
        linalg::unitarity_defect(self.matrix.as_ref())
    }

    pub fn apply(&self, amplitudes: &[Complex64]) -> Vec<Complex64> {
        linalg::mat_vec(self.matrix.as_ref(), amplitudes)
    }

    /// Raw export: `OQM1`, little-endian `u64` N, then N² entries row-major as
    /// `(re, im)` little-endian `f64` pairs.
    pub fn write_binary<W: Write>(&self, mut out: W) -> io::Result<()> {
        write_matrix_binary(&self.matrix, &mut out)
    }
}

pub fn write_matrix_binary<W: Write>(m: &CMatrix, out: &mut W) -> io::Result<()> {
    let n = m.nrows();
    out.write_all(MATRIX_MAGIC)?;
    out.write_all(&(n as u64).to_le_bytes())?;
    let mut row = Vec::with_capacity(16 * n);
    for i in 0..n {
        row.clear();
        for j in 0..n {
            let z = m[(i, j)];
            row.extend_from_slice(&z.re.to_le_bytes());
            row.extend_from_slice(&z.im.to_le_bytes());
        }
        out.write_all(&row)?;
    }
    Ok(())
}

pub fn read_matrix_binary<R: Read>(input: &mut R) -> io::Result<CMatrix> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != MATRIX_MAGIC {
        return Err(io::Error::new(io::ErrorKind::InvalidData, "bad matrix magic"));
    }
    let mut word = [0u8; 8];
    input.read_exact(&mut word)?;
    let n = u64::from_le_bytes(word) as usize;
    let mut data = vec![0u8; n * n * 16];
    input.read_exact(&mut data)?;
    let f = |k: usize| f64::from_le_bytes(data[8 * k..8 * k + 8].try_into().unwrap());
    Ok(Mat::from_fn(n, n, |i, j| {
        let k = 2 * (i * n + j);
        Complex64::new(f(k), f(k + 1))
    }))
}
