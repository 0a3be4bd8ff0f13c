//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::{Error, Result};

/// Eigen-decomposition of a symmetric matrix with eigenvalues ascending and
/// eigenvectors as the matching columns.
pub fn sorted_symmetric_eigen(m: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(eig.eigenvectors.nrows(), order.len(), |r, c| {
        eig.eigenvectors[(r, order[c])]
    });
    (vals, vecs)
}

/// Moore–Penrose pseudoinverse of a symmetric PSD matrix; eigenvalues below
/// `rel_tol · λ_max` are treated as zero.
pub fn psd_pseudoinverse(m: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let n = m.nrows();
    let eig = SymmetricEigen::new(m.clone());
    let max = eig.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let cutoff = rel_tol * max.max(f64::MIN_POSITIVE);
    let mut out = DMatrix::zeros(n, n);
    for (i, &lam) in eig.eigenvalues.iter().enumerate() {
        if lam > cutoff {
            let v = eig.eigenvectors.column(i);
            out += (v * v.transpose()) / lam;
        }
    }
    out
}

/// Solves `a·x = b` for symmetric positive-definite `a`.
pub fn spd_solve(a: DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let chol = a.cholesky().ok_or(Error::NotPositiveDefinite)?;
    Ok(chol.solve(b))
}

/// Inverse of a symmetric positive-definite matrix.
pub fn spd_inverse(a: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let chol = a.cholesky().ok_or(Error::NotPositiveDefinite)?;
    Ok(chol.inverse())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn eigen_is_sorted() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let (vals, vecs) = sorted_symmetric_eigen(m.clone());
        assert_abs_diff_eq!(vals[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(vals[1], 3.0, epsilon = 1e-12);
        let v0 = vecs.column(0);
        assert_abs_diff_eq!((&m * v0 - v0 * 1.0).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn pseudoinverse_of_path_laplacian() {
        // L of a unit edge is [[1,-1],[-1,1]]; L⁺ = L/4.
        let l = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]);
        let p = psd_pseudoinverse(&l, 1e-12);
        assert_abs_diff_eq!((p - &l / 4.0).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn spd_solve_rejects_indefinite() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(spd_solve(a, &DVector::from_vec(vec![1.0, 0.0])).is_err());
    }
}
