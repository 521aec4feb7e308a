//! Small dense complex linear-algebra helpers shared across modules.
//!
//! Matrices are `nalgebra` dynamic matrices over `Complex<f64>`; signals are
//! plain `Vec<Complex64>` slices, which keeps the DSP-facing APIs free of
//! matrix types.

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;

/// Dense N×N (or N×M) complex matrix.
pub type CMatrix = DMatrix<Complex64>;

/// `m · v` for a slice-backed vector.
pub fn matvec(m: &CMatrix, v: &[Complex64]) -> Vec<Complex64> {
    assert_eq!(m.ncols(), v.len(), "matvec dimension mismatch");
    let mut out = vec![Complex64::ZERO; m.nrows()];
    for (j, &vj) in v.iter().enumerate() {
        if vj == Complex64::ZERO {
            continue;
        }
        let col = m.column(j);
        for (i, o) in out.iter_mut().enumerate() {
            *o += col[i] * vj;
        }
    }
    out
}

/// Frobenius norm of `m - I`.
pub fn identity_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            let t = if i == j {
                m[(i, j)] - Complex64::ONE
            } else {
                m[(i, j)]
            };
            acc += t.norm_sqr();
        }
    }
    acc.sqrt()
}

/// Maximum absolute entry-wise difference between two vectors.
pub fn max_abs_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Squared Euclidean norm of a complex vector.
pub fn norm_sqr(v: &[Complex64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum()
}

/// Inverse of `m` together with the Frobenius condition estimate
/// `‖m‖_F · ‖m⁻¹‖_F` (an upper bound on the 2-norm condition number).
pub fn invert_with_condition(m: &CMatrix) -> Result<(CMatrix, f64)> {
    let norm_m = m.norm();
    let inv = m.clone().try_inverse().ok_or_else(|| Error::Numerical {
        message: "matrix inversion failed (singular to working precision)".into(),
        cond_estimate: f64::INFINITY,
    })?;
    let cond = norm_m * inv.norm();
    if !cond.is_finite() {
        return Err(Error::Numerical {
            message: "matrix inversion produced non-finite entries".into(),
            cond_estimate: f64::INFINITY,
        });
    }
    Ok((inv, cond))
}
