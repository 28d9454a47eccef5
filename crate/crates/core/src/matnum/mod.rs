//! Dense matrix kernel, polynomials and Gauss–Legendre quadrature.

mod linalg;
mod mat;
mod poly;
mod quad;

pub use linalg::{
    cholesky, inverse, null_space, rank, solve, spectral_norm, sym_eig, Lu, SymEig, ABS_FLOOR,
};
pub use mat::{add_vec, axpy, dot, norm2, sub_vec, Mat};
pub use poly::Poly1;
pub use quad::{quad_integrate, QuadRule};

pub use quad::legendre_with_derivative;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MatError {
    #[error("matrix has a zero dimension")]
    EmptyMatrix,
    #[error("matrix entries must be finite")]
    NonFinite,
    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("matrix must be square, got {0:?}")]
    NotSquare((usize, usize)),
    #[error("matrix not symmetric: deviation {deviation:e} exceeds {tolerance:e}")]
    NotSymmetric { deviation: f64, tolerance: f64 },
    #[error("Jacobi iteration did not converge after {iterations} sweeps")]
    NoConvergence { iterations: usize },
    #[error("matrix is singular: pivot {pivot:e} below {threshold:e}")]
    Singular { pivot: f64, threshold: f64 },
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
}
