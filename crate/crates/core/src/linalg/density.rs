use serde::{Deserialize, Serialize};

use super::decomp::{hermitian_eig, HermitianEigen};
use super::matrix::{ComplexMatrix, ComplexVector};
use super::tol;
use crate::error::{Error, Result};

/// Hermitian, positive semidefinite, unit-trace matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ComplexMatrix", into = "ComplexMatrix")]
pub struct DensityMatrix(ComplexMatrix);

impl DensityMatrix {
    /// Validates Hermiticity, positivity and trace against the default tolerances.
    pub fn new(mat: ComplexMatrix) -> Result<Self> {
        mat.require_hermitian(tol::HERMITIAN)?;
        let eig = hermitian_eig(&mat)?;
        if eig.min() < -tol::PSD * eig.max().max(1.0) {
            return Err(Error::Positivity { min_eigenvalue: eig.min() });
        }
        let tr = mat.trace();
        if (tr.re - 1.0).abs() > tol::TRACE || tr.im.abs() > tol::TRACE {
            return Err(Error::InvalidValue(format!("density matrix trace {tr} is not 1")));
        }
        Ok(Self(mat.hermitian_part()))
    }

    /// Normalizes a nonzero PSD matrix to unit trace.
    pub fn normalized(mat: ComplexMatrix) -> Result<Self> {
        let tr = mat.trace().re;
        if !(tr > 0.0) {
            return Err(Error::ImpossibleOutcome);
        }
        Self::new(mat.scale(1.0 / tr))
    }

    pub(crate) fn from_trusted(mat: ComplexMatrix) -> Self {
        Self(mat.hermitian_part())
    }

    /// `|ψ⟩⟨ψ| / ⟨ψ|ψ⟩`
    pub fn pure(psi: &ComplexVector) -> Result<Self> {
        let n = psi.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::InvalidValue("zero or non-finite state vector".into()));
        }
        Ok(Self::from_trusted(ComplexMatrix::projector(&psi.map(|z| z / n))))
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self(ComplexMatrix::identity(d).scale(1.0 / d as f64))
    }

    pub fn diagonal(probs: &[f64]) -> Result<Self> {
        Self::new(ComplexMatrix::from_diagonal(probs))
    }

    /// Computational basis state `|k⟩⟨k|`.
    pub fn basis(d: usize, k: usize) -> Result<Self> {
        if k >= d {
            return Err(Error::Index(format!("basis state {k} in dimension {d}")));
        }
        let mut p = vec![0.0; d];
        p[k] = 1.0;
        Self::diagonal(&p)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    pub fn eig(&self) -> HermitianEigen {
        hermitian_eig(&self.0).expect("density matrix is Hermitian")
    }

    pub fn purity(&self) -> f64 {
        super::decomp::trace_product(&self.0, &self.0)
    }

    pub fn trace_distance(&self, other: &Self) -> Result<f64> {
        super::decomp::trace_distance(&self.0, &other.0)
    }
}

impl TryFrom<ComplexMatrix> for DensityMatrix {
    type Error = Error;

    fn try_from(m: ComplexMatrix) -> Result<Self> {
        Self::new(m)
    }
}

impl From<DensityMatrix> for ComplexMatrix {
    fn from(d: DensityMatrix) -> Self {
        d.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::matrix::c;

    #[test]
    fn validation() {
        assert!(DensityMatrix::diagonal(&[0.5, 0.5]).is_ok());
        assert!(matches!(DensityMatrix::diagonal(&[1.2, -0.2]), Err(Error::Positivity { .. })));
        assert!(matches!(DensityMatrix::diagonal(&[0.5, 0.6]), Err(Error::InvalidValue(_))));
        let nonherm = ComplexMatrix::new(2, 2, vec![c(0.5, 0.0), c(0.1, 0.0), c(0.2, 0.0), c(0.5, 0.0)]).unwrap();
        assert!(matches!(DensityMatrix::new(nonherm), Err(Error::Hermiticity { .. })));
    }

    #[test]
    fn pure_state_is_normalized() {
        let psi = ComplexVector::from_vec(vec![c(1.0, 0.0), c(0.0, 1.0)]);
        let rho = DensityMatrix::pure(&psi).unwrap();
        assert!((rho.matrix().trace().re - 1.0).abs() < 1e-15);
        assert!((rho.purity() - 1.0).abs() < 1e-14);
        assert!((rho.matrix().get(0, 1) - c(0.0, -0.5)).norm() < 1e-15);
    }
}
