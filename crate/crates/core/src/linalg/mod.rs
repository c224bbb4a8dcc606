//! Dense complex linear algebra for small Hermitian problems.
//!
//! Subsystem 0 is always the most significant tensor factor.

mod decomp;
mod density;
mod matrix;
mod subspace;
mod tensor;

pub use decomp::{hermitian_eig, hermitian_norm, is_psd, matrix_sqrt_psd, trace_distance, trace_product, HermitianEigen};
pub use density::DensityMatrix;
pub use matrix::{c, vector_literal, ComplexMatrix, ComplexVector, MatrixLiteral};
pub use subspace::{subspace_intersection, support, Subspace};
pub use tensor::{partial_trace, tensor, tensor_power};

pub(crate) use tensor::digits;

/// Default numerical tolerances, relative to the largest magnitude involved.
pub mod tol {
    pub const HERMITIAN: f64 = 1e-9;
    pub const TRACE: f64 = 1e-9;
    pub const PSD: f64 = 1e-9;
    pub const ORTHONORMAL: f64 = 1e-10;
    /// Relative eigenvalue cutoff for supports.
    pub const RANK: f64 = 1e-9;
}
