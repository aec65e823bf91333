//! Dense linear algebra, quadrature and root finding.

mod quad;
mod roots;
mod sym;
mod tridiag;

pub use quad::{
    gauss_fixed, gauss_legendre, integrate_adaptive, log_diag_entry, log_diag_weight, neighbour_log_correction,
};
pub use roots::{brent_root, expand_upward, Bracket, DEFAULT_ROOT_TOL, ROOT_ITERATION_CAP};
pub use sym::{sym_eig_top, sym_eigvals, EigenPair, SymMatrix, EIGEN_SWEEP_CAP};
pub use tridiag::SymTridiagonal;
