//! Eigenvalue counting and the finite-volume spectral shift function
//! `ξ_L(E) = N₀(E) − N₁(E)`.
//!
//! Counts come from matrix inertia ([`crate::linalg::band_ldlt`]), never
//! from eigenvalues, so they are exact integers at any energy that is not
//! numerically on top of an eigenvalue. The explicit-spectrum routines here
//! (`spectrum`, [`StepFunction`], the trace identities) are the oracles the
//! inertia counts are checked against.

use std::collections::BTreeMap;
use std::sync::Mutex;

use nalgebra::DMatrix;

use crate::csv::CsvTable;
use crate::linalg::{band_ldlt, dense, tridiag};
use crate::operator::{assemble, BoxGrid, SparseSymmetric};
use crate::potentials::Potential;
use crate::{csv_row, par, Error, Result};

/// Largest order handled by the dense eigensolver oracle.
pub const DENSE_ORACLE_MAX: usize = 3000;

/// Relative pivot threshold: pivots below `1e-10 · ‖H‖_∞` signal a shift collision.
pub const PIVOT_RELATIVE_TOL: f64 = 1e-10;

const MAX_SHIFT_RETRIES: usize = 8;

fn pivot_tolerance(matrix: &SparseSymmetric) -> f64 {
    PIVOT_RELATIVE_TOL * matrix.inf_norm().max(f64::MIN_POSITIVE)
}

/// The energy used after a shift collision at `energy`.
pub fn perturbed_energy(energy: f64) -> f64 {
    energy + 1e-8 * (1.0 + energy.abs())
}

/// `#{eigenvalues of H ≤ E}` from the inertia of `H − E·I`; a single attempt.
pub fn count_below(matrix: &SparseSymmetric, energy: f64) -> Result<usize> {
    if !energy.is_finite() {
        return Err(Error::InvalidParameter(format!("energy must be finite, got {energy}")));
    }
    let inertia = band_ldlt::shifted_inertia(matrix, energy, pivot_tolerance(matrix))?;
    Ok(inertia.negative)
}

/// A count together with the energy at which it was actually taken.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftedCount {
    pub count: usize,
    pub energy: f64,
}

/// Counts at `energy`, moving the shift upward on collisions.
pub fn count_below_retrying(matrix: &SparseSymmetric, energy: f64) -> Result<ShiftedCount> {
    counts_retrying(&[matrix], energy).map(|(c, e)| ShiftedCount { count: c[0], energy: e })
}

/// Counts several matrices at one common energy; a collision in any of them
/// moves the shared shift so the counts stay comparable.
fn counts_retrying(matrices: &[&SparseSymmetric], energy: f64) -> Result<(Vec<usize>, f64)> {
    let mut e = energy;
    for attempt in 0..=MAX_SHIFT_RETRIES {
        match matrices.iter().map(|m| count_below(m, e)).collect::<Result<Vec<_>>>() {
            Ok(counts) => return Ok((counts, e)),
            Err(err @ Error::NearSingularShift { .. }) => {
                if attempt == MAX_SHIFT_RETRIES {
                    return Err(err);
                }
                log::debug!("shift collision at E = {e}: {err}; retrying");
                e = perturbed_energy(e);
            }
            Err(err) => return Err(err),
        }
    }
    unreachable!("retry loop returns on its last attempt")
}

/// `E ↦ N(E)` for one operator, memoising every energy it has been asked about.
pub struct CountingFunction<'a> {
    matrix: &'a SparseSymmetric,
    cache: Mutex<BTreeMap<u64, usize>>,
}

impl<'a> CountingFunction<'a> {
    pub fn new(matrix: &'a SparseSymmetric) -> Self {
        Self {
            matrix,
            cache: Mutex::new(BTreeMap::new()),
        }
    }

    pub fn count(&self, energy: f64) -> Result<usize> {
        let key = energy.to_bits();
        if let Some(&c) = self.cache.lock().expect("cache lock").get(&key) {
            return Ok(c);
        }
        let c = count_below_retrying(self.matrix, energy)?.count;
        self.cache.lock().expect("cache lock").insert(key, c);
        Ok(c)
    }

    /// Counts on a whole grid, in parallel.
    pub fn counts(&self, energies: &[f64]) -> Result<Vec<usize>> {
        par::try_map_slice(energies, |&e| self.count(e))
    }

    /// All cached `(E, N(E))` pairs in increasing energy.
    pub fn cached(&self) -> Vec<(f64, usize)> {
        let mut pairs: Vec<(f64, usize)> = self
            .cache
            .lock()
            .expect("cache lock")
            .iter()
            .map(|(&k, &c)| (f64::from_bits(k), c))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        pairs
    }
}

/// Sampled `ξ_L` on an energy grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SsfCurve {
    pub energies: Vec<f64>,
    pub values: Vec<i64>,
    pub side_length: f64,
    pub spacing: f64,
}

impl SsfCurve {
    pub fn to_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(&["E", "xi_L", "L", "h"]);
        for (e, v) in self.energies.iter().zip(&self.values) {
            t.push(csv_row![*e, *v, self.side_length, self.spacing]);
        }
        t
    }

    /// Right-continuous step function holding `ξ(E_i)` on `[E_i, E_{i+1})`,
    /// covering `[E_0, E_last]`.
    pub fn as_step(&self) -> StepFunction {
        let n = self.energies.len();
        let mut steps = StepFunction {
            breakpoints: self.energies.clone(),
            values: self.values.clone(),
            coverage: (
                self.energies.first().copied().unwrap_or(0.0),
                self.energies.last().copied().unwrap_or(0.0),
            ),
        };
        if n > 0 {
            steps.values.pop();
        }
        steps
    }

    pub fn is_nonnegative(&self) -> bool {
        self.values.iter().all(|&v| v >= 0)
    }
}

fn check_sorted(energies: &[f64]) -> Result<()> {
    if energies.windows(2).any(|w| !(w[0] < w[1])) || energies.iter().any(|e| !e.is_finite()) {
        return Err(Error::InvalidParameter(
            "energy grid must be finite and strictly increasing".into(),
        ));
    }
    Ok(())
}

/// `ξ_L(E_i) = N₀(E_i) − N₁(E_i)` for `H₀ = −Δ/2 + V₀` and `H₁ = H₀ + V`.
pub fn ssf_finite_volume(
    grid: &BoxGrid,
    background: &dyn Potential,
    perturbation: &dyn Potential,
    energies: &[f64],
) -> Result<SsfCurve> {
    check_sorted(energies)?;
    let h0 = assemble(grid, background, perturbation, 0.0)?;
    let h1 = assemble(grid, background, perturbation, 1.0)?;
    let values = ssf_from_matrices(&h0.matrix, &h1.matrix, energies)?;
    Ok(SsfCurve {
        energies: energies.to_vec(),
        values,
        side_length: grid.side_length(),
        spacing: grid.spacing(),
    })
}

/// `N₀(E) − N₁(E)` on a grid for an explicit matrix pair.
pub fn ssf_from_matrices(h0: &SparseSymmetric, h1: &SparseSymmetric, energies: &[f64]) -> Result<Vec<i64>> {
    if h0.order() != h1.order() {
        return Err(Error::DimensionMismatch {
            expected: h0.order(),
            found: h1.order(),
        });
    }
    par::try_map_slice(energies, |&e| {
        let (c, _) = counts_retrying(&[h0, h1], e)?;
        Ok(c[0] as i64 - c[1] as i64)
    })
}

/// Full ascending spectrum: QL for tridiagonal matrices, dense otherwise.
pub fn spectrum(matrix: &SparseSymmetric) -> Result<Vec<f64>> {
    if let Some((d, e)) = matrix.tridiagonal() {
        return tridiag::eigenvalues(&d, &e);
    }
    if matrix.order() > DENSE_ORACLE_MAX {
        return Err(Error::InvalidParameter(format!(
            "order {} exceeds the dense oracle limit {DENSE_ORACLE_MAX}",
            matrix.order()
        )));
    }
    dense::eigenvalues(&matrix.to_dense())
}

/// Exact piecewise-constant function: `values[k]` on `[breakpoints[k], breakpoints[k+1])`,
/// zero outside `[breakpoints[0], breakpoints[last])`, defined on `coverage`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction {
    pub breakpoints: Vec<f64>,
    pub values: Vec<i64>,
    pub coverage: (f64, f64),
}

impl StepFunction {
    /// `ξ(E) = #{E⁰ₙ ≤ E} − #{E¹ₙ ≤ E}` from two ascending spectra.
    pub fn from_spectra(e0: &[f64], e1: &[f64]) -> Self {
        let mut breakpoints: Vec<f64> = e0.iter().chain(e1).copied().collect();
        breakpoints.sort_by(f64::total_cmp);
        breakpoints.dedup();
        let values = breakpoints
            .iter()
            .take(breakpoints.len().saturating_sub(1))
            .map(|&b| dense::count_leq(e0, b) as i64 - dense::count_leq(e1, b) as i64)
            .collect();
        Self {
            breakpoints,
            values,
            coverage: (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    /// Step function with the given breakpoints whose value on each interval
    /// is `value_at(midpoint)`.
    pub fn from_sampler(breakpoints: Vec<f64>, value_at: impl Fn(f64) -> Result<i64> + Sync) -> Result<Self> {
        let mids: Vec<f64> = breakpoints.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let values = par::try_map_slice(&mids, |&m| value_at(m))?;
        Ok(Self {
            breakpoints,
            values,
            coverage: (f64::NEG_INFINITY, f64::INFINITY),
        })
    }

    pub fn value(&self, e: f64) -> i64 {
        let k = self.breakpoints.partition_point(|&b| b <= e);
        if k == 0 || k > self.values.len() {
            0
        } else {
            self.values[k - 1]
        }
    }

    /// `Σₖ vₖ · G(aₖ, bₖ)` over the pieces clipped to `[lo, hi)`, where
    /// `G(a, b)` is the integral of the weight over `[a, b)`.
    pub fn integrate_with(&self, lo: f64, hi: f64, weight_integral: impl Fn(f64, f64) -> f64) -> Result<f64> {
        if lo < self.coverage.0 || hi > self.coverage.1 {
            return Err(Error::OutsideCoverage {
                lo,
                hi,
                min: self.coverage.0,
                max: self.coverage.1,
            });
        }
        let terms: Vec<f64> = self
            .values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0)
            .filter_map(|(k, &v)| {
                let a = self.breakpoints[k].max(lo);
                let b = self.breakpoints[k + 1].min(hi);
                (a < b).then(|| v as f64 * weight_integral(a, b))
            })
            .collect();
        Ok(par::pairwise_sum(&terms))
    }

    /// `∫_lo^hi ξ(E) dE`.
    pub fn integral(&self, lo: f64, hi: f64) -> Result<f64> {
        self.integrate_with(lo, hi, |a, b| b - a)
    }

    /// `∫ e^{−tE} ξ(E) dE` over the whole real line.
    pub fn laplace(&self, t: f64) -> Result<f64> {
        self.integrate_with(f64::NEG_INFINITY, f64::INFINITY, |a, b| {
            ((-t * a).exp() - (-t * b).exp()) / t
        })
    }
}

fn check_t(t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("t must be > 0, got {t}")));
    }
    Ok(())
}

/// `(1/t) Σₙ (e^{−tE⁰ₙ} − e^{−tE¹ₙ})` from two ascending spectra of equal length.
pub fn laplace_from_spectra(e0: &[f64], e1: &[f64], t: f64) -> Result<f64> {
    check_t(t)?;
    if e0.len() != e1.len() {
        return Err(Error::DimensionMismatch {
            expected: e0.len(),
            found: e1.len(),
        });
    }
    let terms: Vec<f64> = e0
        .iter()
        .zip(e1)
        .map(|(a, b)| (-t * a).exp() - (-t * b).exp())
        .collect();
    Ok(par::pairwise_sum(&terms) / t)
}

/// `ξ̃_L(t) = (1/t) tr(e^{−tH₀} − e^{−tH₁})`.
pub fn laplace_transform_spectral(h0: &SparseSymmetric, h1: &SparseSymmetric, t: f64) -> Result<f64> {
    check_t(t)?;
    let e0 = spectrum(h0)?;
    let e1 = spectrum(h1)?;
    laplace_from_spectra(&e0, &e1, t)
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvarianceReport {
    pub energies_checked: usize,
    /// Largest `|ξ(E; A₁, A₀) − ξ_φ(E)|` over the test energies.
    pub max_discrepancy: i64,
}

fn check_pair(a0: &DMatrix<f64>, a1: &DMatrix<f64>) -> Result<()> {
    if a0.shape() != a1.shape() || a0.nrows() != a0.ncols() {
        return Err(Error::DimensionMismatch {
            expected: a0.nrows(),
            found: a1.nrows(),
        });
    }
    Ok(())
}

/// Compares `N₀(E) − N₁(E)` with the counting SSF of the semigroup pair
/// `(e^{−tA₁}, e^{−tA₀})` evaluated at `e^{−tE}`, with the sign flip of the
/// decreasing map `E ↦ e^{−tE}`.
pub fn invariance_principle_check(
    a0: &DMatrix<f64>,
    a1: &DMatrix<f64>,
    t: f64,
    energies: &[f64],
) -> Result<InvarianceReport> {
    check_t(t)?;
    check_pair(a0, a1)?;
    let s0 = dense::eigenvalues(a0)?;
    let s1 = dense::eigenvalues(a1)?;
    let mut p0 = dense::eigenvalues(&dense::spectral_map(a0, |x| (-t * x).exp())?)?;
    let mut p1 = dense::eigenvalues(&dense::spectral_map(a1, |x| (-t * x).exp())?)?;
    p0.sort_by(f64::total_cmp);
    p1.sort_by(f64::total_cmp);
    let max_discrepancy = energies
        .iter()
        .map(|&e| {
            let direct = dense::count_leq(&s0, e) as i64 - dense::count_leq(&s1, e) as i64;
            let eta = (-t * e).exp();
            // ξ(η; φ(A₁), φ(A₀)) = Ñ₀(η) − Ñ₁(η); φ' < 0 flips the sign
            let mapped = -(dense::count_leq(&p0, eta) as i64 - dense::count_leq(&p1, eta) as i64);
            (direct - mapped).abs()
        })
        .max()
        .unwrap_or(0);
    Ok(InvarianceReport {
        energies_checked: energies.len(),
        max_discrepancy,
    })
}

/// `(∫ |ξ(E)| t e^{−tE} dE, ‖e^{−tA₁} − e^{−tA₀}‖_tr)`; the first never exceeds the second.
pub fn l1_bound_check(a0: &DMatrix<f64>, a1: &DMatrix<f64>, t: f64) -> Result<(f64, f64)> {
    check_t(t)?;
    check_pair(a0, a1)?;
    let s0 = dense::eigenvalues(a0)?;
    let s1 = dense::eigenvalues(a1)?;
    let xi = StepFunction::from_spectra(&s0, &s1);
    let abs_xi = StepFunction {
        values: xi.values.iter().map(|v| v.abs()).collect(),
        ..xi
    };
    let lhs = abs_xi.integrate_with(f64::NEG_INFINITY, f64::INFINITY, |a, b| (-t * a).exp() - (-t * b).exp())?;
    let diff = dense::spectral_map(a1, |x| (-t * x).exp())? - dense::spectral_map(a0, |x| (-t * x).exp())?;
    // symmetric, so singular values are |eigenvalues|
    let rhs: f64 = dense::eigenvalues(&diff)?.iter().map(|v| v.abs()).sum();
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::analytic_free_levels;
    use crate::potentials::PotentialSpec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn diag(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(v))
    }

    #[test]
    fn free_box_counts() {
        let z1 = PotentialSpec::zero(1);
        let g1 = BoxGrid::new(1, PI, PI / 1024.0).unwrap();
        let h = assemble(&g1, &z1, &z1, 0.0).unwrap();
        assert_eq!(count_below(&h.matrix, 1.0).unwrap(), 1);
        let z2 = PotentialSpec::zero(2);
        let g2 = BoxGrid::new(2, PI, PI / 64.0).unwrap();
        let h = assemble(&g2, &z2, &z2, 0.0).unwrap();
        assert_eq!(count_below(&h.matrix, 3.0).unwrap(), 3);
        assert_eq!(count_below(&h.matrix, 1.5).unwrap(), 1);
    }

    #[test]
    fn random_dense_matrix_matches_oracle_at_median() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let b = DMatrix::from_fn(50, 50, |_, _| rng.random_range(-1.0..1.0));
        let a = &b + b.transpose();
        let ev = dense::eigenvalues(&a).unwrap();
        let e = 0.5 * (ev[24] + ev[25]) + 1e-3 * (ev[25] - ev[24]);
        let sparse = SparseSymmetric::from_dense(&a).unwrap();
        assert_eq!(count_below(&sparse, e).unwrap(), dense::count_leq(&ev, e));
    }

    #[test]
    fn collisions_are_retried_upward() {
        let a = SparseSymmetric::from_lower_triplets(3, &[(0, 0, 1.0), (1, 1, 2.0), (2, 2, 3.0)]).unwrap();
        assert!(matches!(count_below(&a, 2.0), Err(Error::NearSingularShift { .. })));
        let c = count_below_retrying(&a, 2.0).unwrap();
        assert_eq!(c.count, 2);
        assert!(c.energy > 2.0);
    }

    #[test]
    fn counting_function_caches_and_is_monotone() {
        let g = BoxGrid::new(1, 8.0, 8.0 / 128.0).unwrap();
        let z = PotentialSpec::zero(1);
        let bump = PotentialSpec::square_bump(10.0, 0.5, vec![0.0]);
        let h = assemble(&g, &z, &bump, 1.0).unwrap();
        let n = CountingFunction::new(&h.matrix);
        let grid: Vec<f64> = (0..50).map(|i| -1.0 + 0.3 * i as f64).collect();
        let counts = n.counts(&grid).unwrap();
        assert!(counts.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(n.cached().len(), grid.len());
        assert_eq!(n.count(1e9).unwrap(), h.order());
    }

    #[test]
    fn zero_perturbation_gives_zero_ssf() {
        let g = BoxGrid::new(2, 4.0, 0.25).unwrap();
        let z = PotentialSpec::zero(2);
        let energies: Vec<f64> = (1..40).map(|i| 0.1 * i as f64).collect();
        let ssf = ssf_finite_volume(&g, &z, &z, &energies).unwrap();
        assert!(ssf.values.iter().all(|&v| v == 0));
    }

    #[test]
    fn tiny_perturbation_gives_zero_ssf() {
        let g = BoxGrid::new(1, 8.0, 8.0 / 256.0).unwrap();
        let z = PotentialSpec::zero(1);
        let bump = PotentialSpec::square_bump(1e-8, 0.5, vec![0.0]);
        let energies: Vec<f64> = (0..200).map(|i| 0.01 + 0.02 * i as f64).collect();
        let ssf = ssf_finite_volume(&g, &z, &bump, &energies).unwrap();
        assert!(ssf.values.iter().all(|&v| v == 0));
    }

    #[test]
    fn bump_ssf_matches_dense_oracle() {
        let g = BoxGrid::new(1, 8.0, 8.0 / 256.0).unwrap();
        let z = PotentialSpec::zero(1);
        let bump = PotentialSpec::square_bump(10.0, 0.5, vec![0.0]);
        let energies: Vec<f64> = (0..400).map(|i| 0.005 + 0.01 * i as f64).collect();
        let ssf = ssf_finite_volume(&g, &z, &bump, &energies).unwrap();
        let e0 = dense::eigenvalues(&assemble(&g, &z, &bump, 0.0).unwrap().matrix.to_dense()).unwrap();
        let e1 = dense::eigenvalues(&assemble(&g, &z, &bump, 1.0).unwrap().matrix.to_dense()).unwrap();
        for (e, v) in energies.iter().zip(&ssf.values) {
            assert_eq!(*v, dense::count_leq(&e0, *e) as i64 - dense::count_leq(&e1, *e) as i64);
        }
        assert!(ssf.is_nonnegative());
        assert!(ssf.values.iter().any(|&v| v > 0));
        assert_eq!(ssf.values[0], 0);
    }

    #[test]
    fn ssf_csv_has_contract_columns() {
        let curve = SsfCurve {
            energies: vec![0.5, 1.0],
            values: vec![0, 1],
            side_length: 8.0,
            spacing: 0.03125,
        };
        assert_eq!(curve.to_csv().render(), "E,xi_L,L,h\n0.5,0,8,0.03125\n1,1,8,0.03125\n");
    }

    #[test]
    fn laplace_of_diagonal_pair() {
        let a0 = SparseSymmetric::from_lower_triplets(2, &[(0, 0, 0.0), (1, 1, 1.0)]).unwrap();
        let a1 = SparseSymmetric::from_lower_triplets(2, &[(0, 0, 1.0), (1, 1, 1.0)]).unwrap();
        let v = laplace_transform_spectral(&a0, &a1, 1.0).unwrap();
        assert!((v - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
        assert_eq!(laplace_transform_spectral(&a0, &a0, 0.7).unwrap(), 0.0);
        assert!(laplace_transform_spectral(&a0, &a1, 0.0).is_err());
        let step = StepFunction::from_spectra(&[0.0, 1.0], &[1.0, 1.0]);
        assert!((step.laplace(1.0).unwrap() - v).abs() < 1e-15);
    }

    #[test]
    fn step_function_window_integrals() {
        let step = StepFunction::from_spectra(&[0.0, 1.0], &[1.0, 1.0]);
        assert_eq!(step.value(0.5), 1);
        assert_eq!(step.value(1.0), 0);
        assert_eq!(step.value(-1.0), 0);
        assert!((step.integral(0.2, 0.7).unwrap() - 0.5).abs() < 1e-15);
        let zero = StepFunction::from_spectra(&[0.0, 1.0], &[0.0, 1.0]);
        assert_eq!(zero.integral(-5.0, 5.0).unwrap(), 0.0);
    }

    #[test]
    fn sampled_curve_rejects_uncovered_windows() {
        let curve = SsfCurve {
            energies: vec![0.0, 1.0, 2.0],
            values: vec![1, 2, 0],
            side_length: 1.0,
            spacing: 0.1,
        };
        let step = curve.as_step();
        assert!((step.integral(0.5, 1.5).unwrap() - 1.5).abs() < 1e-15);
        assert!(matches!(step.integral(-1.0, 1.0), Err(Error::OutsideCoverage { .. })));
    }

    #[test]
    fn invariance_principle_small_cases() {
        let a0 = diag(&[0.0, 1.0]);
        let a1 = diag(&[1.0, 1.0]);
        let r = invariance_principle_check(&a0, &a1, 1.0, &[0.5, -3.0, 0.25, 0.99]).unwrap();
        assert_eq!(r.max_discrepancy, 0);
    }

    #[test]
    fn l1_bound_saturates_for_commuting_pair() {
        let a0 = diag(&[0.0, 1.0]);
        let a1 = diag(&[1.0, 1.0]);
        let (lhs, rhs) = l1_bound_check(&a0, &a1, 1.0).unwrap();
        let expected = 1.0 - (-1.0f64).exp();
        assert!((lhs - expected).abs() < 1e-14);
        assert!((rhs - expected).abs() < 1e-14);
        assert_eq!(l1_bound_check(&a0, &a0, 1.0).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn counts_agree_with_analytic_free_levels() {
        let z = PotentialSpec::zero(2);
        let g = BoxGrid::new(2, PI, PI / 48.0).unwrap();
        let h = assemble(&g, &z, &z, 0.0).unwrap();
        let levels = analytic_free_levels(2, PI, 12.0);
        // probe midway between consecutive analytic levels
        for w in levels.windows(2) {
            let probe = 0.5 * (w[0].0 + w[1].0);
            let expected: usize = levels.iter().filter(|(e, _)| *e <= probe).map(|(_, m)| m).sum();
            assert_eq!(count_below(&h.matrix, probe).unwrap(), expected, "E = {probe}");
        }
    }
}
