//! Dense eigen/singular value helpers. Decompositions go through faer, whose
//! iterations are bounded and report failure instead of spinning.

use faer::{Mat, Side};
use nalgebra::{DMatrix, DVector};

fn to_faer(m: &DMatrix<f64>) -> Mat<f64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Eigenvalues of the symmetric part of `m`, ascending. NaN-filled if the solver fails.
pub(crate) fn sym_eigenvalues(m: &DMatrix<f64>) -> DVector<f64> {
    let n = m.nrows();
    let s = Mat::from_fn(n, n, |i, j| 0.5 * (m[(i, j)] + m[(j, i)]));
    match s.self_adjoint_eigenvalues(Side::Lower) {
        Ok(v) => DVector::from_vec(v),
        Err(_) => DVector::from_element(n, f64::NAN),
    }
}

/// Largest real part over the eigenvalues of `m`; `+∞` if the solver fails.
pub(crate) fn spectral_abscissa(m: &DMatrix<f64>) -> f64 {
    match to_faer(m).eigenvalues() {
        Ok(v) => v.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max),
        Err(_) => f64::INFINITY,
    }
}

/// Singular values, descending.
pub(crate) fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    to_faer(m)
        .singular_values()
        .unwrap_or_else(|_| vec![f64::NAN; m.nrows().min(m.ncols())])
}

/// Full SVD `m = U diag(s) Vᵀ`, singular values descending.
pub(crate) fn svd(m: &DMatrix<f64>) -> Option<(DMatrix<f64>, DVector<f64>, DMatrix<f64>)> {
    let d = to_faer(m).svd().ok()?;
    let (u, s, v) = (d.U(), d.S().column_vector(), d.V());
    Some((
        DMatrix::from_fn(u.nrows(), u.ncols(), |i, j| u[(i, j)]),
        DVector::from_fn(s.nrows(), |i, _| s[i]),
        DMatrix::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, j)]),
    ))
}

pub(crate) fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// `wᵀP⁻¹w` through a Cholesky solve; `None` when `P` is not numerically PD.
pub(crate) fn cholesky_quadratic_inverse(p: &DMatrix<f64>, w: &DVector<f64>) -> Option<f64> {
    let chol = p.clone().cholesky()?;
    // ‖L⁻¹w‖²
    let mut z = w.clone();
    if !chol.l_dirty().solve_lower_triangular_mut(&mut z) {
        return None;
    }
    Some(z.norm_squared())
}

/// `vᵀPv`
pub(crate) fn quadratic_form(p: &DMatrix<f64>, v: &DVector<f64>) -> f64 {
    (v.transpose() * p * v)[(0, 0)]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn abscissa_of_rotation_and_diagonal() {
        let rot = DMatrix::from_row_slice(2, 2, &[-0.5, 2.0, -2.0, -0.5]);
        assert!((spectral_abscissa(&rot) + 0.5).abs() < 1e-12);
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![-3.0, 1.0, -7.0]));
        assert!((spectral_abscissa(&d) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn symmetric_and_singular_values() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let e = sym_eigenvalues(&m);
        assert!((e[0] - 1.0).abs() < 1e-12 && (e[1] - 3.0).abs() < 1e-12);
        let s = singular_values(&DMatrix::from_row_slice(2, 2, &[0.0, 3.0, -2.0, 0.0]));
        assert!((s[0] - 3.0).abs() < 1e-12 && (s[1] - 2.0).abs() < 1e-12);
    }
}
