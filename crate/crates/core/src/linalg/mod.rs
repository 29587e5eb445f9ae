//! Linear algebra kernels.
//!
//! [`band_ldlt`] is the workhorse: it counts eigenvalues below a shift from
//! the signs of an LDLᵀ factorization. [`tridiag`] and [`dense`] compute
//! spectra explicitly and serve as oracles and as the eigensolvers behind the
//! trace formulas.

pub mod band_ldlt;
pub mod dense;
pub mod tridiag;
