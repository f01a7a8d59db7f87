//! Numerical kernels: tridiagonal eigensolvers and solvers, Lanczos, FFT
//! multipliers, dense Hermitian helpers.

pub mod dense;
pub mod fourier;
pub mod lanczos;
pub mod tridiag;

pub use num_complex::Complex64 as C64;
