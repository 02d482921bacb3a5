//! Small dense complex linear algebra for p × p problems (p ≤ a few dozen).

mod hermitian;
mod matrix;
mod tridiagonal;

pub use hermitian::{hermitian_eigen, HermitianEigen};
pub use matrix::CMatrix;
pub use tridiagonal::symmetric_tridiagonal_eigenvalues;
