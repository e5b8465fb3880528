//! Dense Hermitian eigendecomposition.
//!
//! `ndarray-linalg` hands row-major complex input to LAPACK as if it were
//! column-major, which diagonalizes the conjugate matrix. Copying into
//! Fortran order first gives the eigenvectors of the matrix itself.

use ndarray::{Array1, Array2, ShapeBuilder};
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Eigenvalues ascending and eigenvectors as columns.
pub(crate) fn hermitian_eigen(h: &Array2<Complex64>) -> Result<(Array1<f64>, Array2<Complex64>)> {
    let mut f = Array2::<Complex64>::zeros(h.dim().f());
    f.assign(h);
    f.eigh(UPLO::Lower).map_err(|e| Error::NumericalFailure(format!("eigendecomposition failed: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigenvectors_satisfy_the_eigen_equation() {
        let c = Complex64::new;
        let h = ndarray::array![
            [c(1.0, 0.0), c(0.3, 1.0), c(0.0, 0.5)],
            [c(0.3, -1.0), c(2.0, 0.0), c(0.1, 0.2)],
            [c(0.0, -0.5), c(0.1, -0.2), c(-1.0, 0.0)]
        ];
        let (w, v) = hermitian_eigen(&h).unwrap();
        let resid = h.dot(&v) - &v * &w.mapv(|x| c(x, 0.0));
        assert!(resid.iter().all(|z| z.norm() < 1e-14));
    }
}
