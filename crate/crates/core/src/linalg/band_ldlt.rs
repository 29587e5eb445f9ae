//! Banded LDLᵀ factorization of `A - σI` without pivoting.
//!
//! By Sylvester's law of inertia the number of negative entries of `D`
//! equals the number of eigenvalues of `A` below `σ`. The factorization
//! works on a dense lower band of half-width `w`, so the cost is `O(n·w²)`
//! and the storage `n·(w+1)`; for a lexicographically ordered 2D grid
//! `w = m`.
//!
//! A pivot with `|d| < pivot_tol` means `σ` sits (numerically) on an
//! eigenvalue of a leading block; the factorization stops with
//! [`Error::NearSingularShift`] and the caller moves the shift.

use crate::operator::SparseSymmetric;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inertia {
    pub negative: usize,
    pub positive: usize,
    /// Smallest `|d_j|` seen.
    pub min_abs_pivot: f64,
}

/// Inertia of `a - shift·I`.
pub fn shifted_inertia(a: &SparseSymmetric, shift: f64, pivot_tol: f64) -> Result<Inertia> {
    let n = a.order();
    let w = a.bandwidth();
    let stride = w + 1;
    let mut band = vec![0.0; n * stride];
    for r in 0..n {
        for (c, v) in a.row(r) {
            if c <= r {
                band[c * stride + (r - c)] = v;
            }
        }
        band[r * stride] -= shift;
    }

    let mut negative = 0;
    let mut min_abs_pivot = f64::INFINITY;
    let mut col = vec![0.0; w];
    for j in 0..n {
        let (head, tail) = band.split_at_mut((j + 1) * stride);
        let cj = &head[j * stride..];
        let pivot = cj[0];
        if !pivot.is_finite() {
            return Err(Error::FactorizationFailure(format!(
                "non-finite pivot at column {j} (shift {shift})"
            )));
        }
        let abs = pivot.abs();
        min_abs_pivot = min_abs_pivot.min(abs);
        if abs < pivot_tol {
            return Err(Error::NearSingularShift { shift, pivot: abs });
        }
        if pivot < 0.0 {
            negative += 1;
        }
        let reach = w.min(n - 1 - j);
        col[..reach].copy_from_slice(&cj[1..=reach]);
        // Schur update of the trailing band: A[i][j+k] -= a_ij · a_{j+k,j} / d_j
        for k in 1..=reach {
            let f = col[k - 1] / pivot;
            if f == 0.0 {
                continue;
            }
            let target = &mut tail[(k - 1) * stride..(k - 1) * stride + (reach - k + 1)];
            for (t, &aij) in target.iter_mut().zip(&col[k - 1..reach]) {
                *t -= aij * f;
            }
        }
    }
    Ok(Inertia {
        negative,
        positive: n - negative,
        min_abs_pivot,
    })
}
