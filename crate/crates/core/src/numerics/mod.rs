//! Special functions, quadrature and dense linear algebra.

pub mod bessel;
pub mod matrix;
pub mod quadrature;

pub use bessel::{
    bessel_i0_complex, bessel_i0_real, bessel_i0e_complex, bessel_i0e_real, ln_bessel_i0_real,
};
pub use matrix::{cholesky_psd, cholesky_psd_toeplitz, Cholesky, Matrix, SymmetricToeplitz};
pub use quadrature::{
    gauss_legendre, integrate, integrate_doubling, QuadratureSpec, Rule, DEFAULT_CLOSED_NODES,
    DEFAULT_SEMI_INFINITE_NODES,
};
