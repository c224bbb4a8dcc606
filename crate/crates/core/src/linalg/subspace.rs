use super::decomp::hermitian_eig;
use super::density::DensityMatrix;
use super::matrix::{ComplexMatrix, ComplexVector};
use super::tol;
use crate::error::{Error, Result};

/// Subspace of `C^d` carried by an orthonormal basis (possibly empty).
#[derive(Clone, Debug, PartialEq)]
pub struct Subspace {
    ambient_dim: usize,
    /// `ambient_dim × dim` matrix with orthonormal columns.
    basis: ComplexMatrix,
}

impl Subspace {
    /// Wraps vectors that must already be orthonormal within `tol::ORTHONORMAL`.
    pub fn from_orthonormal(ambient_dim: usize, vectors: &[ComplexVector]) -> Result<Self> {
        if vectors.iter().any(|v| v.len() != ambient_dim) {
            return Err(Error::shape("basis vector length differs from ambient dimension"));
        }
        if vectors.len() > ambient_dim {
            return Err(Error::shape("more basis vectors than ambient dimension"));
        }
        let basis = ComplexMatrix::from_columns(ambient_dim, vectors);
        let s = Self { ambient_dim, basis };
        if s.dim() > 0 {
            let gram = &s.basis.adjoint() * &s.basis;
            let dev = gram.max_abs_diff(&ComplexMatrix::identity(s.dim()));
            if dev > tol::ORTHONORMAL {
                return Err(Error::InvalidValue(format!("basis not orthonormal (deviation {dev:.3e})")));
            }
        }
        Ok(s)
    }

    /// Orthonormalizes an arbitrary spanning set (modified Gram-Schmidt, dropping
    /// vectors whose residual norm falls below `tol`).
    pub fn span(ambient_dim: usize, vectors: &[ComplexVector], tol: f64) -> Result<Self> {
        let mut basis: Vec<ComplexVector> = Vec::new();
        for v in vectors {
            if v.len() != ambient_dim {
                return Err(Error::shape("vector length differs from ambient dimension"));
            }
            let mut w = v.clone();
            for _ in 0..2 {
                for b in &basis {
                    let overlap = b.dotc(&w);
                    w -= b * overlap;
                }
            }
            let n = w.norm();
            if n > tol * v.norm().max(1.0) {
                basis.push(w.map(|z| z / n));
            }
        }
        Ok(Self { ambient_dim, basis: ComplexMatrix::from_columns(ambient_dim, &basis) })
    }

    pub fn empty(ambient_dim: usize) -> Self {
        Self { ambient_dim, basis: ComplexMatrix::from_columns(ambient_dim, &[]) }
    }

    pub fn full(ambient_dim: usize) -> Self {
        Self { ambient_dim, basis: ComplexMatrix::identity(ambient_dim) }
    }

    #[allow(dead_code)]
    pub(crate) fn from_basis_matrix(basis: ComplexMatrix) -> Self {
        Self { ambient_dim: basis.nrows(), basis }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.dim() == 0
    }

    pub fn basis_matrix(&self) -> &ComplexMatrix {
        &self.basis
    }

    pub fn vectors(&self) -> Vec<ComplexVector> {
        (0..self.dim()).map(|k| self.basis.column(k)).collect()
    }

    /// Orthogonal projector onto the subspace.
    pub fn projector(&self) -> ComplexMatrix {
        if self.is_empty() {
            return ComplexMatrix::zeros(self.ambient_dim, self.ambient_dim);
        }
        &self.basis * &self.basis.adjoint()
    }

    /// `‖(I − P) v‖ / ‖v‖`
    pub fn residual(&self, v: &ComplexVector) -> f64 {
        let n = v.norm();
        if n == 0.0 {
            return 0.0;
        }
        let proj = self.projector().apply(v);
        (v - proj).norm() / n
    }

    /// Largest residual of the other subspace's basis vectors; zero iff `other ⊆ self`.
    pub fn containment_residual(&self, other: &Subspace) -> f64 {
        other.vectors().iter().map(|v| self.residual(v)).fold(0.0, f64::max)
    }

    /// Trace of `M` lying outside the subspace, `Tr[(I − P) M (I − P)]`, for PSD `M`.
    pub fn trace_outside(&self, m: &ComplexMatrix) -> f64 {
        let q = &ComplexMatrix::identity(self.ambient_dim) - &self.projector();
        (&(&q * m) * &q).trace().re
    }

    /// Same span, checked by mutual containment.
    pub fn same_span(&self, other: &Subspace, tol: f64) -> bool {
        self.dim() == other.dim()
            && self.containment_residual(other) < tol
            && other.containment_residual(self) < tol
    }
}

/// Span of the eigenvectors of `rho` whose eigenvalue exceeds `tol · λ_max`.
pub fn support(rho: &DensityMatrix, tol: f64) -> Subspace {
    let eig = rho.eig();
    let cut = tol * eig.max();
    let keep: Vec<ComplexVector> = eig
        .values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > cut)
        .map(|(k, _)| eig.vectors.column(k))
        .collect();
    Subspace { ambient_dim: rho.dim(), basis: ComplexMatrix::from_columns(rho.dim(), &keep) }
}

/// Intersection of two subspaces.
///
/// `P_U + P_V` has eigenvalue `1 + cos θ` on each pair of principal vectors
/// at angle `θ`, so the eigenvectors of `2I − P_U − P_V` with eigenvalue below
/// `tol` (cosine above `1 − tol`) span the shared directions.
pub fn subspace_intersection(u: &Subspace, v: &Subspace, tol: f64) -> Result<Subspace> {
    if u.ambient_dim != v.ambient_dim {
        return Err(Error::shape(format!(
            "ambient dimensions differ: {} vs {}",
            u.ambient_dim, v.ambient_dim
        )));
    }
    if u.is_empty() || v.is_empty() {
        return Ok(Subspace::empty(u.ambient_dim));
    }
    let d = u.ambient_dim;
    let gap = &ComplexMatrix::identity(d).scale(2.0) - &(&u.projector() + &v.projector());
    let eig = hermitian_eig(&gap.hermitian_part())?;
    let shared: Vec<ComplexVector> = eig
        .values
        .iter()
        .enumerate()
        .filter(|(_, &x)| x < tol)
        .map(|(k, _)| eig.vectors.column(k))
        .collect();
    // Eigenvectors are orthonormal already; re-span to absorb round-off.
    Subspace::span(d, &shared, 1e-8)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::matrix::c;

    fn ket(v: &[f64]) -> ComplexVector {
        ComplexVector::from_iterator(v.len(), v.iter().map(|&x| c(x, 0.0)))
    }

    fn span_of(d: usize, vs: &[&[f64]]) -> Subspace {
        let vs: Vec<_> = vs.iter().map(|v| ket(v)).collect();
        Subspace::span(d, &vs, 1e-12).unwrap()
    }

    #[test]
    fn support_examples() {
        let half = DensityMatrix::maximally_mixed(2);
        assert_eq!(support(&half, 1e-9).dim(), 2);
        let zero = DensityMatrix::basis(2, 0).unwrap();
        let s = support(&zero, 1e-9);
        assert_eq!(s.dim(), 1);
        assert!(s.residual(&ket(&[1.0, 0.0])) < 1e-14);
        let eps = 1e-15;
        let nearly = DensityMatrix::diagonal(&[1.0 - eps, eps]).unwrap();
        assert_eq!(support(&nearly, 1e-9).dim(), 1);
    }

    #[test]
    fn intersection_examples() {
        let z = span_of(2, &[&[1.0, 0.0]]);
        let o = span_of(2, &[&[0.0, 1.0]]);
        assert_eq!(subspace_intersection(&z, &z, 1e-9).unwrap().dim(), 1);
        assert!(subspace_intersection(&z, &o, 1e-9).unwrap().is_empty());

        let a = span_of(3, &[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]]);
        let b = span_of(3, &[&[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]]);
        let i = subspace_intersection(&a, &b, 1e-9).unwrap();
        assert_eq!(i.dim(), 1);
        assert!(i.residual(&ket(&[0.0, 1.0, 0.0])) < 1e-12);
    }

    #[test]
    fn intersection_of_tilted_planes() {
        // Two planes in C^3 sharing the direction (1,1,0)/√2.
        let a = span_of(3, &[&[1.0, 1.0, 0.0], &[0.0, 0.0, 1.0]]);
        let b = span_of(3, &[&[1.0, 1.0, 0.0], &[1.0, -1.0, 1.0]]);
        let i = subspace_intersection(&a, &b, 1e-9).unwrap();
        assert_eq!(i.dim(), 1);
        assert!(i.residual(&ket(&[1.0, 1.0, 0.0])) < 1e-12);
        let j = subspace_intersection(&b, &a, 1e-9).unwrap();
        assert!(i.same_span(&j, 1e-10));
    }

    #[test]
    fn intersection_of_random_coordinate_spans() {
        use crate::haar::random_unitary;
        use crate::montecarlo::stream_rng;
        let mut rng = stream_rng(1, 0);
        for d in 2..=5 {
            for k in 0..d - 1 {
                let u = random_unitary(d, &mut rng);
                let cols = |r: std::ops::Range<usize>| -> Vec<ComplexVector> { r.map(|j| u.column(j)).collect() };
                let a = Subspace::span(d, &cols(0..k + 1), 1e-12).unwrap();
                let b = Subspace::span(d, &cols(k..d), 1e-12).unwrap();
                let i = subspace_intersection(&a, &b, 1e-9).unwrap();
                assert_eq!(i.dim(), 1);
                assert!(i.residual(&u.column(k)) < 1e-10);
            }
        }
    }

    #[test]
    fn ambient_mismatch() {
        let a = Subspace::full(2);
        let b = Subspace::full(3);
        assert!(matches!(subspace_intersection(&a, &b, 1e-9), Err(Error::Shape(_))));
    }

    #[test]
    fn orthonormal_constructor_checks() {
        assert!(Subspace::from_orthonormal(2, &[ket(&[1.0, 0.0]), ket(&[1.0, 0.0])]).is_err());
        assert!(Subspace::from_orthonormal(2, &[ket(&[1.0, 0.0]), ket(&[0.0, 1.0])]).is_ok());
    }
}
