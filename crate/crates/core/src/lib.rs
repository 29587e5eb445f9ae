//! Numerical laboratory for finite- and infinite-volume spectral shift
//! functions of Dirichlet Schrödinger operators `-Δ/2 + V₀ (+ V)`.
//!
//! The crate is organised bottom-up:
//!
//! * [`potentials`] — background and compactly supported perturbation potentials.
//! * [`operator`] — finite-difference Dirichlet Hamiltonians on a box grid.
//! * [`linalg`] — banded LDLᵀ inertia, tridiagonal and dense eigensolvers.
//! * [`counting`] — eigenvalue counting, the finite-volume SSF and trace identities.
//! * [`pathint`] — Brownian-bridge Feynman–Kac Monte Carlo estimators.
//! * [`birman_solomyak`] — coupling-constant trace formula on discretized operators.
//! * [`limits`] — thermodynamic-limit experiments built on the above.
//!
//! Data-parallel loops (energy grids, Monte Carlo paths, coupling nodes,
//! length sweeps) go through [`par`], which uses rayon when the `parallel`
//! feature is enabled and plain iterators otherwise. Results are identical
//! either way.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod birman_solomyak;
pub mod counting;
pub mod csv;
mod error;
pub mod limits;
pub mod linalg;
pub mod operator;
pub mod par;
pub mod pathint;
pub mod potentials;
pub mod quadrature;

pub use error::{Error, Result};
