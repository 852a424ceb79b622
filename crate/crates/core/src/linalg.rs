//! Thin dense complex linear algebra layer over `faer`.
//!
//! All calls run with `Par::Seq` so a given matrix always produces the same
//! bits regardless of the surrounding thread pool.

use faer::linalg::evd::{self, ComputeEigenvectors};
use faer::linalg::svd::{self, ComputeSvdVectors};
use faer::{Accum, Mat, MatRef, Par};
use faer::dyn_stack::{MemBuffer, MemStack};
use num_complex::Complex64;

/// Dense complex matrix, column-major, indexed `m[(row, col)]`.
pub type CMatrix = Mat<Complex64>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinalgError {
    #[error("eigenvalue iteration did not converge")]
    EigenNoConvergence,
    #[error("singular value iteration did not converge")]
    SvdNoConvergence,
}

/// Pairwise (cascade) summation with a fixed split pattern.
pub fn pairwise_sum(values: &[Complex64]) -> Complex64 {
    const LEAF: usize = 16;
    if values.len() <= LEAF {
        let mut acc = Complex64::new(0.0, 0.0);
        for v in values {
            acc += v;
        }
        return acc;
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Real-valued counterpart of [`pairwise_sum`].
pub fn pairwise_sum_real(values: &[f64]) -> f64 {
    const LEAF: usize = 16;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum_real(&values[..mid]) + pairwise_sum_real(&values[mid..])
}

pub fn matmul(lhs: MatRef<'_, Complex64>, rhs: MatRef<'_, Complex64>) -> CMatrix {
    let mut out = Mat::zeros(lhs.nrows(), rhs.ncols());
    faer::linalg::matmul::matmul(
        out.as_mut(),
        Accum::Replace,
        lhs,
        rhs,
        Complex64::new(1.0, 0.0),
        Par::Seq,
    );
    out
}

pub fn adjoint(m: MatRef<'_, Complex64>) -> CMatrix {
    m.adjoint().to_owned()
}

/// `max_{jk} |(M* M − I)_{jk}|`.
pub fn unitarity_defect(m: MatRef<'_, Complex64>) -> f64 {
    let gram = matmul(adjoint(m).as_ref(), m);
    let n = gram.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram[(i, j)] - target).norm());
        }
    }
    worst
}

/// Largest entry modulus.
pub fn max_abs(m: MatRef<'_, Complex64>) -> f64 {
    let mut worst = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            worst = worst.max(m[(i, j)].norm());
        }
    }
    worst
}

pub fn mat_vec(m: MatRef<'_, Complex64>, v: &[Complex64]) -> Vec<Complex64> {
    assert_eq!(m.ncols(), v.len());
    let mut out = vec![Complex64::new(0.0, 0.0); m.nrows()];
    for (k, &vk) in v.iter().enumerate() {
        if vk == Complex64::new(0.0, 0.0) {
            continue;
        }
        let col = m.col(k);
        for (o, &mjk) in out.iter_mut().zip(col.iter()) {
            *o += mjk * vk;
        }
    }
    out
}

pub fn vec_norm(v: &[Complex64]) -> f64 {
    let sq: Vec<f64> = v.iter().map(|z| z.norm_sqr()).collect();
    pairwise_sum_real(&sq).sqrt()
}

/// Singular values, nonincreasing.
pub fn singular_values(m: MatRef<'_, Complex64>) -> Result<Vec<f64>, LinalgError> {
    let size = m.nrows().min(m.ncols());
    if size == 0 {
        return Ok(Vec::new());
    }
    let mut s = faer::diag::Diag::<Complex64>::zeros(size);
    let par = Par::Seq;
    let req = svd::svd_scratch::<Complex64>(
        m.nrows(),
        m.ncols(),
        ComputeSvdVectors::No,
        ComputeSvdVectors::No,
        par,
        Default::default(),
    );
    let mut buf = MemBuffer::new(req);
    svd::svd(
        m,
        s.as_mut(),
        None,
        None,
        par,
        MemStack::new(&mut buf),
        Default::default(),
    )
    .map_err(|_| LinalgError::SvdNoConvergence)?;
    Ok(s.column_vector().iter().map(|z| z.re).collect())
}

/// All eigenvalues of a dense complex square matrix (Hessenberg + multishift QR).
pub fn dense_eigenvalues(m: MatRef<'_, Complex64>) -> Result<Vec<Complex64>, LinalgError> {
    let n = m.nrows();
    assert_eq!(n, m.ncols());
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut s = faer::diag::Diag::<Complex64>::zeros(n);
    let par = Par::Seq;
    let req = evd::evd_scratch::<Complex64>(
        n,
        ComputeEigenvectors::No,
        ComputeEigenvectors::No,
        par,
        Default::default(),
    );
    let mut buf = MemBuffer::new(req);
    evd::evd_cplx(
        m,
        s.as_mut(),
        None,
        None,
        par,
        MemStack::new(&mut buf),
        Default::default(),
    )
    .map_err(|_| LinalgError::EigenNoConvergence)?;
    Ok(s.column_vector().iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_naive_on_small_input() {
        let v: Vec<Complex64> = (0..40).map(|i| Complex64::new(i as f64, -(i as f64))).collect();
        let s = pairwise_sum(&v);
        assert_eq!(s, Complex64::new(780.0, -780.0));
    }

    #[test]
    fn eigenvalues_of_triangular_matrix_are_its_diagonal() {
        let m = Mat::from_fn(4, 4, |i, j| {
            if i == j {
                Complex64::new(i as f64 + 1.0, 0.5)
            } else if i < j {
                Complex64::new(0.3, -0.1)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let mut ev = dense_eigenvalues(m.as_ref()).unwrap();
        ev.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        for (i, z) in ev.iter().enumerate() {
            assert!((z - Complex64::new(i as f64 + 1.0, 0.5)).norm() < 1e-12);
        }
    }

    #[test]
    fn singular_values_of_scaled_identity() {
        let m = Mat::from_fn(3, 3, |i, j| {
            if i == j {
                Complex64::new(0.0, 2.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let s = singular_values(m.as_ref()).unwrap();
        assert!(s.iter().all(|x| (x - 2.0).abs() < 1e-12));
    }
}
