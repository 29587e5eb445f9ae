//! Dense symmetric eigensolves (nalgebra), used as oracles and for small operators.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::{Error, Result};

const MAX_ITER: usize = 10_000;

fn decompose(a: &DMatrix<f64>) -> Result<SymmetricEigen<f64, nalgebra::Dyn>> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            found: a.ncols(),
        });
    }
    SymmetricEigen::try_new(a.clone(), f64::EPSILON, MAX_ITER)
        .ok_or_else(|| Error::EigensolveFailure(format!("no convergence for order {}", a.nrows())))
}

/// Ascending eigenvalues.
pub fn eigenvalues(a: &DMatrix<f64>) -> Result<Vec<f64>> {
    let mut ev: Vec<f64> = decompose(a)?.eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

/// Ascending eigenvalues with unit eigenvectors as matching columns.
pub fn eigh(a: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let eig = decompose(a)?;
    let mut order: Vec<usize> = (0..a.nrows()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(a.nrows(), a.nrows(), |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

/// `f(A)` for symmetric `A` through its spectral decomposition.
pub fn spectral_map(a: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> Result<DMatrix<f64>> {
    let eig = decompose(a)?;
    let q = &eig.eigenvectors;
    let fd = DMatrix::from_diagonal(&eig.eigenvalues.map(f));
    Ok(q * fd * q.transpose())
}

/// Number of entries of an ascending list that are `<= e`.
pub fn count_leq(sorted: &[f64], e: f64) -> usize {
    sorted.partition_point(|&v| v <= e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigh_is_sorted_and_orthonormal() {
        let a = DMatrix::from_row_slice(3, 3, &[2.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 2.0]);
        let (vals, vecs) = eigh(&a).unwrap();
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        let qtq = vecs.transpose() * &vecs;
        assert!((qtq - DMatrix::identity(3, 3)).norm() < 1e-12);
        let rebuilt = &vecs * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vals)) * vecs.transpose();
        assert!((rebuilt - a).norm() < 1e-12);
    }

    #[test]
    fn count_leq_is_closed() {
        assert_eq!(count_leq(&[0.0, 1.0, 1.0, 2.0], 1.0), 3);
        assert_eq!(count_leq(&[0.0, 1.0], -1.0), 0);
    }
}
