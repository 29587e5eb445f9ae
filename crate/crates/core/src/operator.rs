//! Finite-difference Dirichlet Schrödinger operators on `Λ_L = (-L/2, L/2)ᵈ`.
//!
//! Nodes sit at `-L/2 + (i+1)·h`, `i = 0..m`, with `h = L/(m+1)`; boundary
//! nodes are excluded, which imposes the Dirichlet condition. Unknowns are
//! ordered lexicographically with axis 0 fastest, so the half-bandwidth of
//! the matrix is `m^{d-1}`.
//!
//! The kinetic term is `-Δ/2`: off-diagonals `-1/(2h²)`, diagonal `d/h²`.
//! Comparisons with references that use `-Δ` must rescale energies by 2.

use std::f64::consts::PI;
use std::io::{self, Write};

use nalgebra::DMatrix;

use crate::potentials::Potential;
use crate::{Error, Result};

/// Uniform interior grid of a Dirichlet box.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxGrid {
    dim: usize,
    side_length: f64,
    points_per_axis: usize,
}

impl BoxGrid {
    /// Grid with `m = round(L/h) - 1` interior points per axis.
    ///
    /// The effective spacing is `L/(m+1)`, which equals `h` whenever `L/h` is
    /// an integer.
    pub fn new(dim: usize, side_length: f64, spacing: f64) -> Result<Self> {
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "grid spacing must be > 0, got {spacing}"
            )));
        }
        if !(side_length > 0.0 && side_length.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "side length must be > 0, got {side_length}"
            )));
        }
        let cells = (side_length / spacing).round();
        let m = if cells >= 1.0 { cells as usize - 1 } else { 0 };
        Self::with_points(dim, side_length, m)
    }

    pub fn with_points(dim: usize, side_length: f64, points_per_axis: usize) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::InvalidParameter(format!(
                "matrix grids support d in {{1, 2}}, got {dim}"
            )));
        }
        if !(side_length > 0.0 && side_length.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "side length must be > 0, got {side_length}"
            )));
        }
        if points_per_axis < 2 {
            return Err(Error::GridTooCoarse {
                interior: points_per_axis,
            });
        }
        Ok(Self {
            dim,
            side_length,
            points_per_axis,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn side_length(&self) -> f64 {
        self.side_length
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn spacing(&self) -> f64 {
        self.side_length / (self.points_per_axis + 1) as f64
    }

    /// Total number of unknowns `m^d`.
    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Volume element `h^d` attached to each node.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    pub fn coordinate(&self, axis_index: usize) -> f64 {
        -self.side_length / 2.0 + (axis_index + 1) as f64 * self.spacing()
    }

    /// Position of the node with flat index `index`.
    pub fn node(&self, index: usize) -> Vec<f64> {
        let m = self.points_per_axis;
        let mut rest = index;
        (0..self.dim)
            .map(|_| {
                let i = rest % m;
                rest /= m;
                self.coordinate(i)
            })
            .collect()
    }

    /// Potential values at every node, in flat order.
    pub fn sample(&self, potential: &dyn Potential) -> Result<Vec<f64>> {
        if potential.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: potential.dim(),
            });
        }
        Ok((0..self.len()).map(|i| potential.value(&self.node(i))).collect())
    }
}

/// Symmetric sparse matrix in compressed-row form holding both triangles.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSymmetric {
    order: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSymmetric {
    /// Builds from `(row, col, value)` entries of the lower triangle (`col <= row`).
    /// Duplicate entries are summed.
    pub fn from_lower_triplets(order: usize, lower: &[(usize, usize, f64)]) -> Result<Self> {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); order];
        for &(r, c, v) in lower {
            if r >= order || c > r {
                return Err(Error::InvalidParameter(format!(
                    "entry ({r}, {c}) is not in the lower triangle of an order-{order} matrix"
                )));
            }
            rows[r].push((c, v));
            if c != r {
                rows[c].push((r, v));
            }
        }
        let mut row_ptr = Vec::with_capacity(order + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            let mut merged: Vec<(usize, f64)> = Vec::with_capacity(row.len());
            for (c, v) in row {
                match merged.last_mut() {
                    Some(last) if last.0 == c => last.1 += v,
                    _ => merged.push((c, v)),
                }
            }
            for (c, v) in merged {
                col_idx.push(c);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        Ok(Self {
            order,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Symmetric matrix from a dense one; only the lower triangle is read.
    pub fn from_dense(a: &DMatrix<f64>) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::DimensionMismatch {
                expected: a.nrows(),
                found: a.ncols(),
            });
        }
        let n = a.nrows();
        let mut lower = Vec::new();
        for r in 0..n {
            for c in 0..=r {
                let v = a[(r, c)];
                if v != 0.0 || r == c {
                    lower.push((r, c, v));
                }
            }
        }
        Self::from_lower_triplets(n, &lower)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.row(r).find(|&(j, _)| j == c).map_or(0.0, |(_, v)| v)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.order).map(|i| self.get(i, i)).collect()
    }

    /// Largest `|r - c|` over stored entries.
    pub fn bandwidth(&self) -> usize {
        (0..self.order)
            .flat_map(|r| self.row(r).map(move |(c, _)| r.abs_diff(c)))
            .max()
            .unwrap_or(0)
    }

    /// Maximum absolute row sum.
    pub fn inf_norm(&self) -> f64 {
        (0..self.order)
            .map(|r| self.row(r).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.order).all(|r| self.row(r).all(|(c, v)| self.get(c, r) == v))
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.order, self.order);
        for r in 0..self.order {
            for (c, v) in self.row(r) {
                a[(r, c)] = v;
            }
        }
        a
    }

    /// Diagonal and first off-diagonal when the matrix is tridiagonal.
    pub fn tridiagonal(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        if self.bandwidth() > 1 {
            return None;
        }
        let diag = self.diagonal();
        let off = (1..self.order).map(|i| self.get(i, i - 1)).collect();
        Some((diag, off))
    }

    /// Adds `shift` to every diagonal entry.
    pub fn shifted(&self, shift: f64) -> Self {
        let mut out = self.clone();
        for r in 0..self.order {
            for k in out.row_ptr[r]..out.row_ptr[r + 1] {
                if out.col_idx[k] == r {
                    out.values[k] += shift;
                }
            }
        }
        out
    }

    /// Writes `row col value` lines (0-based) for every stored entry.
    pub fn write_triplets<W: Write>(&self, mut w: W) -> io::Result<()> {
        for r in 0..self.order {
            for (c, v) in self.row(r) {
                writeln!(w, "{r} {c} {v}")?;
            }
        }
        Ok(())
    }
}

/// `-Δ_L/2 + V₀ + λV` on a [`BoxGrid`].
#[derive(Debug, Clone)]
pub struct DiscreteHamiltonian {
    pub grid: BoxGrid,
    pub matrix: SparseSymmetric,
    pub potential_label: String,
}

impl DiscreteHamiltonian {
    pub fn order(&self) -> usize {
        self.matrix.order()
    }
}

/// Assembles the `(2d+1)`-point stencil of `-Δ/2 + V₀ + λV`.
pub fn assemble(
    grid: &BoxGrid,
    background: &dyn Potential,
    perturbation: &dyn Potential,
    coupling: f64,
) -> Result<DiscreteHamiltonian> {
    if !(0.0..=1.0).contains(&coupling) {
        return Err(Error::InvalidParameter(format!(
            "coupling must lie in [0, 1], got {coupling}"
        )));
    }
    let v0 = grid.sample(background)?;
    let v1 = grid.sample(perturbation)?;
    let potential: Vec<f64> = v0.iter().zip(&v1).map(|(a, b)| a + coupling * b).collect();
    let matrix = stencil_matrix(grid, &potential);
    let label = if coupling == 0.0 {
        format!("H0[{}]", background.label())
    } else {
        format!("H0[{}] + {}*[{}]", background.label(), coupling, perturbation.label())
    };
    Ok(DiscreteHamiltonian {
        grid: grid.clone(),
        matrix,
        potential_label: label,
    })
}

/// Stencil matrix with an explicit vector of node potentials.
pub fn stencil_matrix(grid: &BoxGrid, potential: &[f64]) -> SparseSymmetric {
    let h = grid.spacing();
    let m = grid.points_per_axis();
    let d = grid.dim();
    let n = grid.len();
    debug_assert_eq!(potential.len(), n);
    let diag = d as f64 / (h * h);
    let off = -0.5 / (h * h);
    let mut lower = Vec::with_capacity(n * (d + 1));
    for (i, v) in potential.iter().enumerate() {
        let mut stride = 1;
        let mut rest = i;
        for _ in 0..d {
            if rest % m > 0 {
                lower.push((i, i - stride, off));
            }
            rest /= m;
            stride *= m;
        }
        lower.push((i, i, diag + v));
    }
    SparseSymmetric::from_lower_triplets(n, &lower).expect("stencil entries are lower-triangular")
}

/// Exact eigenvalue `(1 - cos(nπ/(m+1)))/h²` of the 1D discrete `-Δ/2` with `m` interior nodes.
pub fn discrete_free_level_1d(points_per_axis: usize, spacing: f64, n: usize) -> f64 {
    let theta = n as f64 * PI / (2.0 * (points_per_axis + 1) as f64);
    2.0 * theta.sin().powi(2) / (spacing * spacing)
}

/// Number of ordered tuples `(n₁..n_d)`, `nᵢ ≥ 1`, with `Σ nᵢ² = s`.
pub fn lattice_multiplicity(dim: usize, s: u64) -> usize {
    if dim == 0 {
        return usize::from(s == 0);
    }
    let mut count = 0;
    let mut n: u64 = 1;
    while n * n <= s {
        count += lattice_multiplicity(dim - 1, s - n * n);
        n += 1;
    }
    count
}

/// Free Dirichlet levels `π²|n|²/(2L²) ≤ E_max` with their multiplicities.
pub fn analytic_free_levels(dim: usize, side_length: f64, e_max: f64) -> Vec<(f64, usize)> {
    if dim == 0 || !(side_length > 0.0) || !(e_max > 0.0) {
        return Vec::new();
    }
    let unit = PI * PI / (2.0 * side_length * side_length);
    let s_max = (e_max / unit).floor() as u64;
    let mut counts = vec![0usize; s_max as usize + 1];
    let n_max = (s_max as f64).sqrt().floor() as u64 + 1;
    let mut tuple = vec![1u64; dim];
    'outer: loop {
        let s: u64 = tuple.iter().map(|n| n * n).sum();
        if s <= s_max {
            counts[s as usize] += 1;
        }
        for n in tuple.iter_mut() {
            *n += 1;
            if *n <= n_max {
                continue 'outer;
            }
            *n = 1;
        }
        break;
    }
    counts
        .iter()
        .enumerate()
        .filter(|&(s, &c)| c > 0 && unit * s as f64 <= e_max)
        .map(|(s, &c)| (unit * s as f64, c))
        .collect()
}
