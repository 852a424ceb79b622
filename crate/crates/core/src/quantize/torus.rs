//! Matrix quantizations of torus maps.

use std::f64::consts::PI;

use faer::{Accum, Mat, Par};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{MapModel, PlanckParameter, QuantizeError, QuantumMap};
use crate::classical::OpenBakerSpec;
use crate::linalg::{self, CMatrix};

/// Tolerance of the construction-time unitarity check for cat maps.
const CAT_UNITARITY_TOL: f64 = 1e-8;

fn unit_phase(turns: f64) -> Complex64 {
    let (s, c) = (2.0 * PI * turns).sin_cos();
    Complex64::new(c, s)
}

/// Discrete Fourier kernel `F[j,k] = N^(−1/2)·exp(−2πi(j+θ)(k+θ)/N)`.
pub fn dft_matrix(n: usize, theta: f64) -> CMatrix {
    let nf = n as f64;
    let scale = 1.0 / nf.sqrt();
    Mat::from_fn(n, n, |j, k| {
        // exact for half-integer θ while the product stays below 2^53
        let p = (j as f64 + theta) * (k as f64 + theta);
        unit_phase(-p.rem_euclid(nf) / nf) * scale
    })
}

/// Closed `D`-baker: `B = F_N⁻¹ · blockdiag(F_{N/D}, …, F_{N/D})`.
pub fn quantize_closed_baker(base: u32, dim: usize, theta: f64) -> Result<QuantumMap, QuantizeError> {
    let spec = OpenBakerSpec::closed(base).map_err(|e| QuantizeError::InvalidParameter(e.to_string()))?;
    quantize_open_baker(&spec, dim, theta)
}

/// Open baker: the closed block form with the blocks of removed branches set
/// to zero, i.e. `B_closed · Π` with `Π` the position projector on kept strips.
pub fn quantize_open_baker(spec: &OpenBakerSpec, dim: usize, theta: f64) -> Result<QuantumMap, QuantizeError> {
    let planck = PlanckParameter::new(dim)?;
    let base = spec.base();
    if !dim.is_multiple_of(base as usize) {
        return Err(QuantizeError::DimensionNotDivisible { dim, base });
    }
    if !theta.is_finite() {
        return Err(QuantizeError::InvalidParameter(format!("theta = {theta}")));
    }
    let block = dim / base as usize;
    let inverse_big = linalg::adjoint(dft_matrix(dim, theta).as_ref());
    let small = dft_matrix(block, theta);
    let mut matrix = Mat::<Complex64>::zeros(dim, dim);
    for &branch in spec.kept() {
        let start = branch as usize * block;
        faer::linalg::matmul::matmul(
            matrix.as_mut().subcols_mut(start, block),
            Accum::Replace,
            inverse_big.as_ref().subcols(start, block),
            small.as_ref(),
            Complex64::new(1.0, 0.0),
            Par::Seq,
        );
    }
    Ok(QuantumMap {
        planck,
        matrix,
        model: MapModel::Baker { spec: spec.clone(), theta },
    })
}

/// Integer symplectic matrix `[[a, b], [c, d]]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CatSpec {
    pub a: i64,
    pub b: i64,
    pub c: i64,
    pub d: i64,
}

impl CatSpec {
    pub fn new(a: i64, b: i64, c: i64, d: i64) -> Result<Self, QuantizeError> {
        let det = a * d - b * c;
        if det != 1 {
            return Err(QuantizeError::BadDeterminant { det });
        }
        let trace = a + d;
        if trace.abs() <= 2 {
            return Err(QuantizeError::NotHyperbolic { trace });
        }
        // det = 1 with |a + d| > 2 already forces b != 0
        Ok(CatSpec { a, b, c, d })
    }

    /// Periodic (θ = 0) quantization is consistent when `ab` and `cd` are
    /// even, or otherwise only for even N.
    pub fn admits_dim(&self, dim: usize) -> bool {
        let checkerboard = (self.a * self.b) % 2 == 0 && (self.c * self.d) % 2 == 0;
        checkerboard || dim.is_multiple_of(2)
    }
}

/// Half-open position interval `[start, end)` removed by the projector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HoleInterval {
    pub start: f64,
    pub end: f64,
}

impl HoleInterval {
    pub fn new(start: f64, end: f64) -> Result<Self, QuantizeError> {
        if !(0.0..=1.0).contains(&start) || !(0.0..=1.0).contains(&end) || start > end {
            return Err(QuantizeError::InvalidHole { start, end });
        }
        Ok(HoleInterval { start, end })
    }

    pub fn empty() -> Self {
        HoleInterval { start: 0.0, end: 0.0 }
    }

    pub fn is_empty(&self) -> bool {
        self.start >= self.end
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.start && x < self.end
    }
}

/// Open cat map: periodic Hannay–Berry kernel
/// `U[j',j] = (N|b|)^(−1/2) Σ_ν exp[(iπ/(Nb))(a j² − 2j(j'+νN) + d(j'+νN)²)]`,
/// `ν = 0..|b|−1`, followed on the right by the projector removing positions
/// `j/N` inside the hole.
pub fn quantize_open_cat(spec: &CatSpec, hole: HoleInterval, dim: usize) -> Result<QuantumMap, QuantizeError> {
    let planck = PlanckParameter::new(dim)?;
    let spec = CatSpec::new(spec.a, spec.b, spec.c, spec.d)?;
    let hole = HoleInterval::new(hole.start, hole.end)?;
    if !spec.admits_dim(dim) {
        return Err(QuantizeError::ConventionUnsatisfiable {
            dim,
            reason: "ab or cd is odd, so N must be even".into(),
        });
    }
    let n = dim as i128;
    let (a, b, d) = (spec.a as i128, spec.b as i128, spec.d as i128);
    let nb = n * b;
    let period = 2 * nb.abs();
    let copies = b.unsigned_abs() as usize;
    let scale = 1.0 / ((dim * copies) as f64).sqrt();
    let closed = Mat::from_fn(dim, dim, |row, col| {
        let (jp, j) = (row as i128, col as i128);
        let mut acc = Complex64::new(0.0, 0.0);
        for nu in 0..copies as i128 {
            let s = jp + nu * n;
            // exp(iπ q/(Nb)) with q reduced modulo 2N|b|
            let q = (a * j * j - 2 * j * s + d * s * s).rem_euclid(period);
            let q = if nb < 0 { (period - q) % period } else { q };
            acc += unit_phase(q as f64 / period as f64);
        }
        acc * scale
    });
    let defect = linalg::unitarity_defect(closed.as_ref());
    if !(defect <= CAT_UNITARITY_TOL) {
        return Err(QuantizeError::ConventionUnsatisfiable {
            dim,
            reason: format!("closed kernel unitarity defect {defect:e}"),
        });
    }
    let mut matrix = closed;
    for col in 0..dim {
        if hole.contains(col as f64 / dim as f64) {
            matrix.col_mut(col).fill(Complex64::new(0.0, 0.0));
        }
    }
    Ok(QuantumMap {
        planck,
        matrix,
        model: MapModel::Cat { spec, hole },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs, singular_values};

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn dft_small_cases() {
        let one = dft_matrix(1, 0.0);
        assert!(close(one[(0, 0)], Complex64::new(1.0, 0.0), 1e-15));
        let two = dft_matrix(2, 0.0);
        let r = 1.0 / 2f64.sqrt();
        assert!(close(two[(0, 0)], Complex64::new(r, 0.0), 1e-15));
        assert!(close(two[(0, 1)], Complex64::new(r, 0.0), 1e-15));
        assert!(close(two[(1, 1)], Complex64::new(-r, 0.0), 1e-15));
    }

    #[test]
    fn dft_is_unitary() {
        for &(n, theta) in &[(7, 0.5), (64, 0.0), (243, 0.5), (1000, 0.25)] {
            let f = dft_matrix(n, theta);
            assert!(linalg::unitarity_defect(f.as_ref()) < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn closed_baker_is_unitary() {
        let b = quantize_closed_baker(2, 2, 0.5).unwrap();
        assert!(b.unitarity_defect() < 1e-12);
        let b = quantize_closed_baker(3, 81, 0.5).unwrap();
        assert!(b.unitarity_defect() < 1e-12);
    }

    #[test]
    fn open_baker_with_everything_kept_is_the_closed_map() {
        let spec = OpenBakerSpec::new(3, vec![0, 1, 2]).unwrap();
        let open = quantize_open_baker(&spec, 27, 0.5).unwrap();
        let closed = quantize_closed_baker(3, 27, 0.5).unwrap();
        assert_eq!(open.matrix, closed.matrix);
    }

    #[test]
    fn open_baker_factorizes_through_the_projector() {
        let spec = OpenBakerSpec::new(3, vec![0, 2]).unwrap();
        let n = 27;
        let open = quantize_open_baker(&spec, n, 0.5).unwrap();
        let closed = quantize_closed_baker(3, n, 0.5).unwrap();
        for j in 0..n {
            let branch = (3.0 * (j as f64 + 0.5) / n as f64).floor() as u32;
            let keep = spec.is_kept(branch);
            for i in 0..n {
                let expect = if keep { closed.matrix[(i, j)] } else { Complex64::new(0.0, 0.0) };
                assert!(close(open.matrix[(i, j)], expect, 1e-12));
            }
        }
    }

    #[test]
    fn open_baker_rank_and_singular_values() {
        let spec = OpenBakerSpec::new(3, vec![0, 2]).unwrap();
        let open = quantize_open_baker(&spec, 9, 0.5).unwrap();
        let s = singular_values(open.matrix.as_ref()).unwrap();
        let rank = s.iter().filter(|&&x| x > 1e-10).count();
        assert!(rank <= 6);
        assert!(s.iter().all(|&x| x <= 1.0 + 1e-10));
    }

    #[test]
    fn divisibility_is_checked() {
        assert_eq!(
            quantize_closed_baker(3, 80, 0.5).unwrap_err(),
            QuantizeError::DimensionNotDivisible { dim: 80, base: 3 }
        );
    }

    #[test]
    fn cat_validation() {
        assert_eq!(CatSpec::new(2, 1, 1, 2), Err(QuantizeError::BadDeterminant { det: 3 }));
        assert_eq!(CatSpec::new(1, 1, 0, 1), Err(QuantizeError::NotHyperbolic { trace: 2 }));
        assert!(CatSpec::new(2, 1, 3, 2).is_ok());
    }

    #[test]
    fn closed_cat_is_unitary() {
        let spec = CatSpec::new(2, 1, 3, 2).unwrap();
        for n in [1, 2, 7, 30, 101] {
            let m = quantize_open_cat(&spec, HoleInterval::empty(), n).unwrap();
            assert!(m.unitarity_defect() < 1e-8, "n = {n}");
        }
        let wide = CatSpec::new(3, 2, 4, 3).unwrap();
        let m = quantize_open_cat(&wide, HoleInterval::empty(), 25).unwrap();
        assert!(m.unitarity_defect() < 1e-8);
        let negative = CatSpec::new(2, -1, -3, 2).unwrap();
        let m = quantize_open_cat(&negative, HoleInterval::empty(), 17).unwrap();
        assert!(m.unitarity_defect() < 1e-8);
    }

    #[test]
    fn cat_parity_condition() {
        let spec = CatSpec::new(2, 1, 1, 1).unwrap();
        assert!(matches!(
            quantize_open_cat(&spec, HoleInterval::empty(), 9),
            Err(QuantizeError::ConventionUnsatisfiable { dim: 9, .. })
        ));
        assert!(quantize_open_cat(&spec, HoleInterval::empty(), 10).is_ok());
    }

    #[test]
    fn full_hole_kills_everything() {
        let spec = CatSpec::new(2, 1, 3, 2).unwrap();
        let m = quantize_open_cat(&spec, HoleInterval::new(0.0, 1.0).unwrap(), 12).unwrap();
        assert_eq!(max_abs(m.matrix.as_ref()), 0.0);
    }

    #[test]
    fn open_cat_is_subunitary() {
        let spec = CatSpec::new(2, 1, 3, 2).unwrap();
        let m = quantize_open_cat(&spec, HoleInterval::new(0.3, 0.55).unwrap(), 40).unwrap();
        assert!(m.max_singular_value().unwrap() <= 1.0 + 1e-10);
        assert!(HoleInterval::new(0.6, 0.2).is_err());
    }
}
