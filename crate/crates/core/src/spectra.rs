//! Resonance spectra of quantum maps and the experiments built on them:
//! eigenvalue counting and Weyl-exponent fits, spectral radius against the
//! pressure bound, and norm decay under iteration.

use std::io::{self, BufRead, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::classical::{ClassicalError, OpenBakerSpec, DEFAULT_ENUMERATION_CAP};
use crate::exec::Execution;
use crate::fit::fit_line;
use crate::linalg::{self, pairwise_sum, CMatrix, LinalgError};
use crate::quantize::{quantize_open_baker, PlanckParameter, QuantizeError, QuantumMap, TorusState};

/// Largest matrix dimension accepted by [`eigenvalues`] unless overridden.
pub const DEFAULT_MAX_DIM: usize = 4096;
/// Relative factor of the trace-residual accuracy contract.
pub const TRACE_TOLERANCE: f64 = 1e-8;
pub const DEFAULT_EPSILON: f64 = 0.5;
pub const DEFAULT_GAP_MARGIN: f64 = 0.1;
/// Slack allowed when checking that norms never grow under iteration.
pub const NORM_SLACK: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpectralError {
    #[error(transparent)]
    Quantize(#[from] QuantizeError),
    #[error(transparent)]
    Classical(#[from] ClassicalError),
    #[error("matrix dimension {dim} exceeds the limit {max}")]
    DimensionTooLarge { dim: usize, max: usize },
    #[error("eigensolver did not converge")]
    NoConvergence,
    #[error("trace residual {residual:e} exceeds the accuracy bound {bound:e}")]
    AccuracyContract { residual: f64, bound: f64 },
    #[error("threshold {0} is not in (0, 1)")]
    InvalidThreshold(f64),
    #[error("a Weyl fit needs at least 3 dimensions, got {0}")]
    TooFewDims(usize),
    #[error("no eigenvalue above the threshold at N = {dim}; cannot take a logarithm")]
    EmptyCount { dim: usize },
    #[error("state dimension {state} does not match map dimension {map}")]
    DimensionMismatch { state: usize, map: usize },
    #[error("step count must be at least 1")]
    InvalidSteps,
    #[error("malformed spectrum CSV: {0}")]
    Format(String),
}

impl From<LinalgError> for SpectralError {
    fn from(_: LinalgError) -> Self {
        SpectralError::NoConvergence
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenOptions {
    pub max_dim: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            max_dim: DEFAULT_MAX_DIM,
        }
    }
}

/// Full eigenvalue multiset of a quantum map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult {
    pub planck: PlanckParameter,
    /// Exactly N values, repeated according to multiplicity.
    pub eigenvalues: Vec<Complex64>,
    /// `|tr M − Σλ|`.
    pub trace_residual: f64,
    /// `|tr M² − Σλ²|`.
    pub trace2_residual: f64,
}

impl SpectrumResult {
    pub fn dim(&self) -> usize {
        self.planck.dim()
    }
}

/// Splits off indices whose row or column is identically zero.
///
/// With such an index `j` moved last, `M` is block triangular with a zero
/// diagonal entry, so `j` contributes the eigenvalue 0 and the rest of the
/// spectrum is that of `M` with row and column `j` deleted. Repeats until no
/// such index remains and returns the surviving indices.
fn structural_core(m: &CMatrix) -> Vec<usize> {
    let zero = Complex64::new(0.0, 0.0);
    let mut alive: Vec<usize> = (0..m.nrows()).collect();
    loop {
        let before = alive.len();
        let snapshot = alive.clone();
        alive.retain(|&j| {
            let col_zero = snapshot.iter().all(|&i| m[(i, j)] == zero);
            let row_zero = snapshot.iter().all(|&k| m[(j, k)] == zero);
            !(col_zero || row_zero)
        });
        if alive.len() == before {
            return alive;
        }
    }
}

pub fn eigenvalues(map: &QuantumMap) -> Result<SpectrumResult, SpectralError> {
    eigenvalues_with(map, EigenOptions::default())
}

pub fn eigenvalues_with(map: &QuantumMap, options: EigenOptions) -> Result<SpectrumResult, SpectralError> {
    let (eigenvalues, trace_residual, trace2_residual) = matrix_eigenvalues(&map.matrix, options)?;
    Ok(SpectrumResult {
        planck: map.planck,
        eigenvalues,
        trace_residual,
        trace2_residual,
    })
}

/// Eigenvalues of an arbitrary square matrix with the trace-residual check.
/// Returns `(eigenvalues, |tr M − Σλ|, |tr M² − Σλ²|)`.
pub fn matrix_eigenvalues(m: &CMatrix, options: EigenOptions) -> Result<(Vec<Complex64>, f64, f64), SpectralError> {
    let n = m.nrows();
    if n > options.max_dim {
        return Err(SpectralError::DimensionTooLarge { dim: n, max: options.max_dim });
    }
    if (0..n).any(|j| m.col(j).iter().any(|z| !z.re.is_finite() || !z.im.is_finite())) {
        return Err(SpectralError::NoConvergence);
    }
    let core = structural_core(m);
    let reduced = CMatrix::from_fn(core.len(), core.len(), |i, j| m[(core[i], core[j])]);
    let mut values = linalg::dense_eigenvalues(reduced.as_ref())?;
    values.resize(n, Complex64::new(0.0, 0.0));

    let diag: Vec<Complex64> = (0..n).map(|j| m[(j, j)]).collect();
    let trace = pairwise_sum(&diag);
    let trace2_terms: Vec<Complex64> = (0..n)
        .flat_map(|j| (0..n).map(move |k| (j, k)))
        .map(|(j, k)| m[(j, k)] * m[(k, j)])
        .collect();
    let trace2 = pairwise_sum(&trace2_terms);
    let squares: Vec<Complex64> = values.iter().map(|z| z * z).collect();
    let r1 = (trace - pairwise_sum(&values)).norm();
    let r2 = (trace2 - pairwise_sum(&squares)).norm();
    let bound = TRACE_TOLERANCE * n as f64 * linalg::max_abs(m.as_ref());
    let worst = r1.max(r2);
    if worst > bound {
        return Err(SpectralError::AccuracyContract { residual: worst, bound });
    }
    Ok((values, r1, r2))
}

/// `max |λ|`.
pub fn spectral_radius(result: &SpectrumResult) -> f64 {
    result.eigenvalues.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `#{λ : |λ| > ε}`, each computed eigenvalue counted once.
pub fn count_above(result: &SpectrumResult, epsilon: f64) -> Result<usize, SpectralError> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(SpectralError::InvalidThreshold(epsilon));
    }
    Ok(result.eigenvalues.iter().filter(|z| z.norm() > epsilon).count())
}

/// Quantizes and diagonalizes the open baker at each dimension.
pub fn baker_spectra(
    spec: &OpenBakerSpec,
    dims: &[usize],
    theta: f64,
    exec: Execution,
) -> Result<Vec<SpectrumResult>, SpectralError> {
    for &n in dims {
        if n % spec.base() as usize != 0 {
            return Err(QuantizeError::DimensionNotDivisible { dim: n, base: spec.base() }.into());
        }
        if n > DEFAULT_MAX_DIM {
            return Err(SpectralError::DimensionTooLarge { dim: n, max: DEFAULT_MAX_DIM });
        }
    }
    exec.map_slice(dims, |&n| {
        let map = quantize_open_baker(spec, n, theta)?;
        eigenvalues(&map)
    })
    .into_iter()
    .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeylFit {
    pub epsilon: f64,
    pub dims: Vec<usize>,
    pub counts: Vec<usize>,
    /// Slope of `log count` against `log N`.
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// `d_M / 2` from the classical box dimension.
    pub predicted_exponent: f64,
}

/// Box dimension of the trapped set at the deepest level the cap allows.
fn classical_dimension(spec: &OpenBakerSpec) -> Result<f64, ClassicalError> {
    let k = spec.kept_count() as u128;
    let mut depth = 2;
    while depth < 6 && k.pow(2 * (depth + 1)) <= DEFAULT_ENUMERATION_CAP as u128 {
        depth += 1;
    }
    Ok(spec.minkowski_dimension(depth, DEFAULT_ENUMERATION_CAP)?.slope)
}

/// Fits the Weyl exponent from precomputed spectra.
pub fn fit_weyl(spec: &OpenBakerSpec, spectra: &[SpectrumResult], epsilon: f64) -> Result<WeylFit, SpectralError> {
    if spectra.len() < 3 {
        return Err(SpectralError::TooFewDims(spectra.len()));
    }
    let dims: Vec<usize> = spectra.iter().map(SpectrumResult::dim).collect();
    let counts = spectra
        .iter()
        .map(|s| count_above(s, epsilon))
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(i) = counts.iter().position(|&c| c == 0) {
        return Err(SpectralError::EmptyCount { dim: dims[i] });
    }
    let xs: Vec<f64> = dims.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = counts.iter().map(|&c| (c as f64).ln()).collect();
    let fit = fit_line(&xs, &ys).ok_or(SpectralError::TooFewDims(dims.len()))?;
    Ok(WeylFit {
        epsilon,
        dims,
        counts,
        slope: fit.slope,
        intercept: fit.intercept,
        r_squared: fit.r_squared,
        predicted_exponent: classical_dimension(spec)? / 2.0,
    })
}

pub fn weyl_fit(spec: &OpenBakerSpec, dims: &[usize], epsilon: f64, theta: f64) -> Result<WeylFit, SpectralError> {
    weyl_fit_with(spec, dims, epsilon, theta, Execution::default())
}

pub fn weyl_fit_with(
    spec: &OpenBakerSpec,
    dims: &[usize],
    epsilon: f64,
    theta: f64,
    exec: Execution,
) -> Result<WeylFit, SpectralError> {
    if dims.len() < 3 {
        return Err(SpectralError::TooFewDims(dims.len()));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(SpectralError::InvalidThreshold(epsilon));
    }
    let spectra = baker_spectra(spec, dims, theta, exec)?;
    fit_weyl(spec, &spectra, epsilon)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub spec: OpenBakerSpec,
    /// `P(½φᵘ)`.
    pub pressure_half: f64,
    /// `exp(P(½φᵘ))`.
    pub gamma: f64,
    /// `(N, spectral radius)` in the order the dimensions were given.
    pub radii: Vec<(usize, f64)>,
    pub pass_margin: f64,
    /// Radius at the largest N is at most `gamma + pass_margin`.
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Word length used for the cycle-sum pressure in gap reports.
const GAP_WORD_LENGTH: u32 = 6;

pub fn gap_from_spectra(spec: &OpenBakerSpec, spectra: &[SpectrumResult], margin: f64) -> Result<GapReport, SpectralError> {
    if spectra.is_empty() {
        return Err(SpectralError::TooFewDims(0));
    }
    let mut length = GAP_WORD_LENGTH;
    while length > 1 && (spec.kept_count() as u128).pow(length) > DEFAULT_ENUMERATION_CAP as u128 {
        length -= 1;
    }
    let pressure_half = spec.topological_pressure(0.5, length, DEFAULT_ENUMERATION_CAP)?.value;
    let gamma = pressure_half.exp();
    let radii: Vec<(usize, f64)> = spectra.iter().map(|s| (s.dim(), spectral_radius(s))).collect();
    let largest = radii.iter().max_by_key(|(n, _)| *n).map(|&(_, r)| r).unwrap_or(0.0);
    let note = if pressure_half >= 0.0 {
        Some("theorem inapplicable: pressure P(phi_u/2) is nonnegative".to_string())
    } else {
        None
    };
    Ok(GapReport {
        spec: spec.clone(),
        pressure_half,
        gamma,
        radii,
        pass_margin: margin,
        pass: largest <= gamma + margin,
        note,
    })
}

pub fn gap_experiment(spec: &OpenBakerSpec, dims: &[usize], theta: f64) -> Result<GapReport, SpectralError> {
    gap_experiment_with(spec, dims, theta, DEFAULT_GAP_MARGIN, Execution::default())
}

pub fn gap_experiment_with(
    spec: &OpenBakerSpec,
    dims: &[usize],
    theta: f64,
    margin: f64,
    exec: Execution,
) -> Result<GapReport, SpectralError> {
    // the pressure is cheap and validates the spec before any diagonalization
    let _ = spec.topological_pressure(0.5, 1, DEFAULT_ENUMERATION_CAP)?;
    let spectra = baker_spectra(spec, dims, theta, exec)?;
    gap_from_spectra(spec, &spectra, margin)
}

/// Norms `‖Mᵏψ‖` for `k = 0..=steps`.
pub fn iterate(map: &QuantumMap, state: &TorusState, steps: usize) -> Result<Vec<f64>, SpectralError> {
    if steps < 1 {
        return Err(SpectralError::InvalidSteps);
    }
    if state.amplitudes.len() != map.dim() {
        return Err(SpectralError::DimensionMismatch {
            state: state.amplitudes.len(),
            map: map.dim(),
        });
    }
    let mut current = state.amplitudes.clone();
    let mut norms = Vec::with_capacity(steps + 1);
    norms.push(linalg::vec_norm(&current));
    for _ in 0..steps {
        current = map.apply(&current);
        norms.push(linalg::vec_norm(&current));
    }
    Ok(norms)
}

/// Spectrum CSV: header `N,index,re,im,abs`, 17 significant digits.
pub fn write_spectrum_csv<W: Write>(results: &[SpectrumResult], mut out: W) -> io::Result<()> {
    writeln!(out, "N,index,re,im,abs")?;
    for r in results {
        for (i, z) in r.eigenvalues.iter().enumerate() {
            writeln!(out, "{},{},{:.16e},{:.16e},{:.16e}", r.dim(), i, z.re, z.im, z.norm())?;
        }
    }
    Ok(())
}

/// Reads a spectrum CSV back as `(N, eigenvalues)` groups in file order.
pub fn read_spectrum_csv<R: BufRead>(input: R) -> Result<Vec<(usize, Vec<Complex64>)>, SpectralError> {
    let bad = |m: &str| SpectralError::Format(m.to_string());
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| bad("empty file"))?
        .map_err(|e| bad(&e.to_string()))?;
    if header.trim() != "N,index,re,im,abs" {
        return Err(bad("unexpected header"));
    }
    let mut groups: Vec<(usize, Vec<Complex64>)> = Vec::new();
    for line in lines {
        let line = line.map_err(|e| bad(&e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(bad("expected 5 columns"));
        }
        let n: usize = fields[0].parse().map_err(|_| bad("bad N"))?;
        let re: f64 = fields[2].parse().map_err(|_| bad("bad re"))?;
        let im: f64 = fields[3].parse().map_err(|_| bad("bad im"))?;
        match groups.last_mut() {
            Some((last, values)) if *last == n => values.push(Complex64::new(re, im)),
            _ => groups.push((n, vec![Complex64::new(re, im)])),
        }
    }
    Ok(groups)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::PhasePoint;
    use crate::quantize::{quantize_closed_baker, torus_coherent_state, MapModel};
    use faer::Mat;

    fn raw_map(matrix: CMatrix) -> QuantumMap {
        QuantumMap {
            planck: PlanckParameter::new(matrix.nrows()).unwrap(),
            matrix,
            model: MapModel::Baker {
                spec: OpenBakerSpec::closed(2).unwrap(),
                theta: 0.5,
            },
        }
    }

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn identity_spectrum() {
        let map = raw_map(Mat::from_fn(5, 5, |i, j| if i == j { c(1.0) } else { c(0.0) }));
        let s = eigenvalues(&map).unwrap();
        assert_eq!(s.eigenvalues.len(), 5);
        assert!(s.eigenvalues.iter().all(|z| (z - c(1.0)).norm() < 1e-12));
        assert!((spectral_radius(&s) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_and_nilpotent_matrices() {
        let zero = eigenvalues(&raw_map(Mat::zeros(4, 4))).unwrap();
        assert_eq!(spectral_radius(&zero), 0.0);
        assert_eq!(count_above(&zero, 0.5).unwrap(), 0);
        let nil = raw_map(Mat::from_fn(2, 2, |i, j| if i == 0 && j == 1 { c(1.0) } else { c(0.0) }));
        let s = eigenvalues(&nil).unwrap();
        assert!(spectral_radius(&s) < 1e-8);
    }

    #[test]
    fn deflation_keeps_nonzero_part() {
        // column 1 and row 2 are zero; the core is {0, 3}
        let m = Mat::from_fn(4, 4, |i, j| match (i, j) {
            (_, 1) | (2, _) => c(0.0),
            (0, 0) => c(2.0),
            (3, 3) => c(-1.0),
            (0, 3) => c(1.0),
            _ => c(0.25),
        });
        assert_eq!(structural_core(&m), vec![0, 3]);
        let (values, r1, r2) = matrix_eigenvalues(&m, EigenOptions::default()).unwrap();
        assert_eq!(values.len(), 4);
        assert!(r1 < 1e-12 && r2 < 1e-12);
        // characteristic polynomial of the core: (2 − λ)(−1 − λ) − 0.25
        let disc: f64 = (1.0f64 + 4.0 * (2.0 + 0.25)).sqrt();
        let mut expect = [(1.0 + disc) / 2.0, (1.0 - disc) / 2.0];
        expect.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut got: Vec<f64> = values[..2].iter().map(|z| z.re).collect();
        got.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((got[0] - expect[0]).abs() < 1e-12 && (got[1] - expect[1]).abs() < 1e-12);
    }

    #[test]
    fn dimension_limit() {
        let map = raw_map(Mat::zeros(8, 8));
        assert_eq!(
            eigenvalues_with(&map, EigenOptions { max_dim: 4 }),
            Err(SpectralError::DimensionTooLarge { dim: 8, max: 4 })
        );
    }

    #[test]
    fn counting() {
        let map = quantize_closed_baker(3, 27, 0.5).unwrap();
        let s = eigenvalues(&map).unwrap();
        assert_eq!(count_above(&s, 0.5).unwrap(), 27);
        assert!(count_above(&s, 0.0).is_err());
        assert!(count_above(&s, 1.0).is_err());
        let open = quantize_open_baker(&OpenBakerSpec::new(3, vec![0, 2]).unwrap(), 81, 0.5).unwrap();
        let s = eigenvalues(&open).unwrap();
        let mut last = usize::MAX;
        for k in 1..100 {
            let n = count_above(&s, k as f64 / 100.0).unwrap();
            assert!(n <= last);
            last = n;
        }
    }

    #[test]
    fn weyl_fit_requires_three_dims() {
        let spec = OpenBakerSpec::new(3, vec![0, 2]).unwrap();
        assert_eq!(weyl_fit(&spec, &[9, 27], 0.5, 0.5), Err(SpectralError::TooFewDims(2)));
    }

    #[test]
    fn closed_weyl_fit_is_exact() {
        let spec = OpenBakerSpec::closed(3).unwrap();
        let fit = weyl_fit(&spec, &[9, 27, 81], 0.5, 0.5).unwrap();
        assert_eq!(fit.counts, vec![9, 27, 81]);
        assert!((fit.slope - 1.0).abs() < 1e-6);
        assert!((fit.predicted_exponent - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gap_report_flags() {
        let closed = gap_experiment(&OpenBakerSpec::closed(3).unwrap(), &[27, 81], 0.5).unwrap();
        // nothing escapes, so the spectrum sits on the unit circle while the
        // half-pressure bound is sqrt(D)
        assert!((closed.gamma - 3f64.sqrt()).abs() < 1e-12);
        assert!(closed.radii.iter().all(|&(_, r)| (r - 1.0).abs() < 1e-8));
        assert!(closed.note.is_some());
        let positive = gap_experiment(&OpenBakerSpec::new(3, vec![0, 2]).unwrap(), &[27, 81], 0.5).unwrap();
        assert!(positive.note.as_deref().unwrap().contains("theorem inapplicable"));
        let negative = gap_experiment(&OpenBakerSpec::new(5, vec![0, 2]).unwrap(), &[25, 125], 0.5).unwrap();
        assert!(negative.note.is_none());
        assert!((negative.gamma - 2.0 / 5f64.sqrt()).abs() < 1e-12);
        assert_eq!(negative.radii.len(), 2);
    }

    #[test]
    fn iterate_examples() {
        let unitary = quantize_closed_baker(3, 27, 0.5).unwrap();
        let psi = torus_coherent_state(unitary.planck, 0.5, PhasePoint::new(0.2, 0.6));
        let norms = iterate(&unitary, &psi, 5).unwrap();
        assert!(norms.iter().all(|n| (n - 1.0).abs() < 1e-10));
        let zero = raw_map(Mat::zeros(27, 27));
        assert_eq!(iterate(&zero, &psi, 3).unwrap(), vec![norms[0], 0.0, 0.0, 0.0]);
        assert_eq!(iterate(&zero, &psi, 0), Err(SpectralError::InvalidSteps));
    }

    #[test]
    fn spectrum_csv_round_trip() {
        let map = quantize_open_baker(&OpenBakerSpec::new(3, vec![0, 2]).unwrap(), 9, 0.5).unwrap();
        let s = eigenvalues(&map).unwrap();
        let mut buf = Vec::new();
        write_spectrum_csv(std::slice::from_ref(&s), &mut buf).unwrap();
        let groups = read_spectrum_csv(buf.as_slice()).unwrap();
        assert_eq!(groups.len(), 1);
        assert_eq!(groups[0].0, 9);
        assert_eq!(groups[0].1, s.eigenvalues);
        assert!(read_spectrum_csv("bad\n".as_bytes()).is_err());
    }
}
