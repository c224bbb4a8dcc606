use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use super::matrix::ComplexMatrix;
use super::tol;
use crate::error::{Error, Result};

/// Spectral decomposition `H = V diag(λ) V†` of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    /// Eigenvalues in descending order.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as columns, aligned with `values`.
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    pub fn max(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn min(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// Rebuilds `Σ f(λ_k) |v_k⟩⟨v_k|`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let v = self.vectors.as_dmatrix();
        let mut scaled = v.clone();
        for (k, &lam) in self.values.iter().enumerate() {
            let s = f(lam);
            scaled.column_mut(k).iter_mut().for_each(|z| *z *= s);
        }
        ComplexMatrix::wrap(scaled * v.adjoint())
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.reconstruct_with(|x| x)
    }
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues sorted descending.
pub fn hermitian_eig(h: &ComplexMatrix) -> Result<HermitianEigen> {
    h.require_hermitian(tol::HERMITIAN)?;
    let herm = h.hermitian_part().into_dmatrix();
    let n = herm.nrows();
    let eig = SymmetricEigen::try_new(herm, f64::EPSILON * 0.5, 0).ok_or(Error::NoConvergence)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let cols: Vec<_> = order.iter().map(|&k| eig.eigenvectors.column(k).into_owned()).collect();
    let vectors = ComplexMatrix::wrap(DMatrix::from_columns(&cols));
    Ok(HermitianEigen { values, vectors })
}

/// Minimum eigenvalue at least `-tol * max(1, λ_max)`.
pub fn is_psd(h: &ComplexMatrix, tol: f64) -> Result<bool> {
    let eig = hermitian_eig(h)?;
    Ok(eig.min() >= -tol * eig.max().max(1.0))
}

/// Principal square root of a positive semidefinite matrix.
pub fn matrix_sqrt_psd(h: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = hermitian_eig(h)?;
    if eig.min() < -tol::PSD * eig.max().max(1.0) {
        return Err(Error::Positivity { min_eigenvalue: eig.min() });
    }
    Ok(eig.reconstruct_with(|x| x.max(0.0).sqrt()).hermitian_part())
}

/// `½‖A − B‖₁` for Hermitian `A`, `B`.
pub fn trace_distance(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    if a.nrows() != b.nrows() || a.ncols() != b.ncols() {
        return Err(Error::shape("trace distance of differently sized matrices"));
    }
    let eig = hermitian_eig(&(a - b))?;
    Ok(0.5 * eig.values.iter().map(|x| x.abs()).sum::<f64>())
}

/// `Tr[A B]`, real part.
pub fn trace_product(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    let (a, b) = (a.as_dmatrix(), b.as_dmatrix());
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc.re
}

/// Spectral norm of a Hermitian matrix, `max |λ|`.
pub fn hermitian_norm(h: &ComplexMatrix) -> Result<f64> {
    let eig = hermitian_eig(h)?;
    Ok(eig.max().abs().max(eig.min().abs()))
}
