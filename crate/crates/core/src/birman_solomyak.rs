//! Both sides of the Birman–Solomyak formula
//! `∫_B ξ(E) dE = ∫₀¹ dλ tr[V^{1/2} χ_B(H_λ) V^{1/2}]`, `H_λ = H₀ + λV`,
//! for discretized operators and explicit matrices.
//!
//! On a grid with unit eigenvectors `u_n(λ)` the trace is
//! `Σ_{E_n(λ) ∈ B} Σ_i V(x_i) u_n(x_i)²`. As a function of `λ` it jumps
//! whenever an eigenvalue crosses an endpoint of `B`. Since `V ≥ 0` every
//! `E_n(λ)` is nondecreasing, so the count of eigenvalues below an endpoint
//! only drops; those drops are located by bisection on inertia counts and
//! the λ-integral is split there before applying Gauss–Legendre per piece.

use nalgebra::DMatrix;

use crate::counting::{count_below_retrying, StepFunction, DENSE_ORACLE_MAX};
use crate::csv::CsvTable;
use crate::linalg::{dense, tridiag};
use crate::operator::{stencil_matrix, BoxGrid, SparseSymmetric};
use crate::potentials::Potential;
use crate::quadrature::CouplingQuadrature;
use crate::{csv_row, par, Error, Result};

/// Crossings closer than this in `λ` are merged.
const CROSSING_TOL: f64 = 1e-12;
/// Window endpoints closer than this to an eigenvalue at a node trigger a retry.
const ENDPOINT_TOL: f64 = 1e-10;

/// Finite union of disjoint half-open intervals `[a_i, b_i)`, sorted.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralWindow {
    intervals: Vec<(f64, f64)>,
}

impl SpectralWindow {
    pub fn new(mut intervals: Vec<(f64, f64)>) -> Result<Self> {
        if intervals
            .iter()
            .any(|&(a, b)| !(a < b) || !a.is_finite() || !b.is_finite())
        {
            return Err(Error::InvalidParameter(
                "window intervals must be finite with a < b".into(),
            ));
        }
        intervals.sort_by(|x, y| x.0.total_cmp(&y.0));
        if intervals.windows(2).any(|w| w[0].1 > w[1].0) {
            return Err(Error::InvalidParameter("window intervals must be disjoint".into()));
        }
        Ok(Self { intervals })
    }

    pub fn interval(a: f64, b: f64) -> Result<Self> {
        Self::new(vec![(a, b)])
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn contains(&self, e: f64) -> bool {
        self.intervals.iter().any(|&(a, b)| a <= e && e < b)
    }

    pub fn sup(&self) -> f64 {
        self.intervals.last().map_or(f64::NEG_INFINITY, |w| w.1)
    }

    pub fn endpoints(&self) -> Vec<f64> {
        self.intervals.iter().flat_map(|&(a, b)| [a, b]).collect()
    }

    fn shifted(&self, by: f64) -> Self {
        Self {
            intervals: self.intervals.iter().map(|&(a, b)| (a + by, b + by)).collect(),
        }
    }
}

/// Energy weights `f` for the weighted form `∫ f ξ dE`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TestFunction {
    /// Triangle on `[lo, hi]` peaking at 1 in the middle.
    Hat { lo: f64, hi: f64 },
    /// `χ_{[lo, hi)}`.
    Indicator { lo: f64, hi: f64 },
    /// `e^{−rate·E}`; not compactly supported, so only usable with full spectra.
    Exponential { rate: f64 },
}

impl TestFunction {
    pub fn eval(&self, e: f64) -> f64 {
        match *self {
            TestFunction::Hat { lo, hi } => {
                let mid = 0.5 * (lo + hi);
                let half = 0.5 * (hi - lo);
                (1.0 - (e - mid).abs() / half).max(0.0)
            }
            TestFunction::Indicator { lo, hi } => f64::from(u8::from(lo <= e && e < hi)),
            TestFunction::Exponential { rate } => (-rate * e).exp(),
        }
    }

    /// Energies where `f` is not smooth.
    pub fn kinks(&self) -> Vec<f64> {
        match *self {
            TestFunction::Hat { lo, hi } => vec![lo, 0.5 * (lo + hi), hi],
            TestFunction::Indicator { lo, hi } => vec![lo, hi],
            TestFunction::Exponential { .. } => Vec::new(),
        }
    }

    /// Closed support `[lo, hi]`, if compact.
    pub fn support(&self) -> Option<(f64, f64)> {
        match *self {
            TestFunction::Hat { lo, hi } | TestFunction::Indicator { lo, hi } => Some((lo, hi)),
            TestFunction::Exponential { .. } => None,
        }
    }

    /// Exact `∫_a^b f(E) dE`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        match *self {
            TestFunction::Hat { lo, hi } => {
                let mid = 0.5 * (lo + hi);
                let half = 0.5 * (hi - lo);
                // antiderivative of the hat, constant outside [lo, hi]
                let prim = |e: f64| -> f64 {
                    let e = e.clamp(lo, hi);
                    if e <= mid {
                        let u = e - lo;
                        u * u / (2.0 * half)
                    } else {
                        let u = hi - e;
                        half - u * u / (2.0 * half)
                    }
                };
                prim(b) - prim(a)
            }
            TestFunction::Indicator { lo, hi } => (b.min(hi) - a.max(lo)).max(0.0),
            TestFunction::Exponential { rate } => ((-rate * a).exp() - (-rate * b).exp()) / rate,
        }
    }

    /// `∫ f ξ dE` against an exact step function.
    pub fn integrate_step(&self, step: &StepFunction) -> Result<f64> {
        let (lo, hi) = self.support().unwrap_or((f64::NEG_INFINITY, f64::INFINITY));
        step.integrate_with(lo, hi, |a, b| self.integral(a, b))
    }
}

/// Eigenvalues up to the cutoff at one coupling, with `⟨u_n, V u_n⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSpectrum {
    pub values: Vec<f64>,
    pub weights: Vec<f64>,
}

/// The coupling family `H_λ = H₀ + λ diag(V)`.
#[derive(Debug, Clone)]
pub struct CouplingProblem {
    h0: SparseSymmetric,
    v: Vec<f64>,
}

impl CouplingProblem {
    pub fn from_grid(grid: &BoxGrid, background: &dyn Potential, perturbation: &dyn Potential) -> Result<Self> {
        let v0 = grid.sample(background)?;
        let v = grid.sample(perturbation)?;
        Self::new(stencil_matrix(grid, &v0), v)
    }

    /// Explicit `H₀` (lower triangle read) and diagonal `V ≥ 0`.
    pub fn from_dense(h0: &DMatrix<f64>, v: Vec<f64>) -> Result<Self> {
        Self::new(SparseSymmetric::from_dense(h0)?, v)
    }

    pub fn new(h0: SparseSymmetric, v: Vec<f64>) -> Result<Self> {
        if h0.order() != v.len() {
            return Err(Error::DimensionMismatch {
                expected: h0.order(),
                found: v.len(),
            });
        }
        if v.iter().any(|&x| !(x >= 0.0)) {
            return Err(Error::InvalidParameter("V must be nonnegative".into()));
        }
        Ok(Self { h0, v })
    }

    pub fn order(&self) -> usize {
        self.h0.order()
    }

    pub fn perturbation(&self) -> &[f64] {
        &self.v
    }

    pub fn h0(&self) -> &SparseSymmetric {
        &self.h0
    }

    /// `H_λ` as a sparse matrix.
    pub fn at(&self, coupling: f64) -> SparseSymmetric {
        let n = self.order();
        let mut lower: Vec<(usize, usize, f64)> = Vec::with_capacity(self.h0.nnz());
        for r in 0..n {
            for (c, val) in self.h0.row(r) {
                if c < r {
                    lower.push((r, c, val));
                } else if c == r {
                    lower.push((r, r, val + coupling * self.v[r]));
                }
            }
        }
        SparseSymmetric::from_lower_triplets(n, &lower).expect("lower triangle of a valid matrix")
    }

    /// Eigenpairs of `H_λ` with eigenvalue `<= cutoff` (all of them for an infinite cutoff).
    pub fn spectrum_at(&self, coupling: f64, cutoff: f64) -> Result<NodeSpectrum> {
        let h = self.at(coupling);
        if let (Some((d, e)), true) = (h.tridiagonal(), cutoff.is_finite()) {
            let (values, vectors) = tridiag::eigenpairs_below(&d, &e, cutoff)?;
            let weights = vectors.iter().map(|u| self.expectation(u)).collect();
            return Ok(NodeSpectrum { values, weights });
        }
        if h.order() > DENSE_ORACLE_MAX {
            return Err(Error::InvalidParameter(format!(
                "order {} exceeds the dense eigensolver limit {DENSE_ORACLE_MAX}",
                h.order()
            )));
        }
        let (values, vectors) = dense::eigh(&h.to_dense())?;
        let keep = values.partition_point(|&v| v <= cutoff);
        let weights = (0..keep)
            .map(|k| self.expectation(vectors.column(k).as_slice()))
            .collect();
        Ok(NodeSpectrum {
            values: values[..keep].to_vec(),
            weights,
        })
    }

    fn expectation(&self, u: &[f64]) -> f64 {
        u.iter().zip(&self.v).map(|(a, v)| v * a * a).sum()
    }

    fn count_at(&self, coupling: f64, energy: f64) -> Result<usize> {
        Ok(count_below_retrying(&self.at(coupling), energy)?.count)
    }

    /// Couplings in `(0, 1)` where some eigenvalue crosses one of `energies`.
    pub fn crossings(&self, energies: &[f64]) -> Result<Vec<f64>> {
        let per_energy = par::try_map_slice(energies, |&e| {
            let mut found = Vec::new();
            let c0 = self.count_at(0.0, e)?;
            let c1 = self.count_at(1.0, e)?;
            self.bisect_drops(e, (0.0, c0), (1.0, c1), &mut found)?;
            Ok::<_, Error>(found)
        })?;
        let mut all: Vec<f64> = per_energy.into_iter().flatten().collect();
        all.sort_by(f64::total_cmp);
        all.dedup_by(|a, b| (*a - *b).abs() < CROSSING_TOL);
        Ok(all)
    }

    fn bisect_drops(&self, e: f64, lo: (f64, usize), hi: (f64, usize), out: &mut Vec<f64>) -> Result<()> {
        // counts below e are nonincreasing in λ, so equal counts mean no crossing
        if lo.1 == hi.1 {
            return Ok(());
        }
        if hi.0 - lo.0 < CROSSING_TOL {
            out.push(0.5 * (lo.0 + hi.0));
            return Ok(());
        }
        let mid = 0.5 * (lo.0 + hi.0);
        let cm = self.count_at(mid, e)?;
        self.bisect_drops(e, lo, (mid, cm), out)?;
        self.bisect_drops(e, (mid, cm), hi, out)
    }
}

/// How the λ-integral is discretized.
#[derive(Debug, Clone)]
pub struct CouplingIntegrator {
    pub quad: CouplingQuadrature,
    /// Split `[0, 1]` at eigenvalue crossings of the relevant energies.
    pub adaptive: bool,
}

impl CouplingIntegrator {
    pub fn adaptive(quad: CouplingQuadrature) -> Self {
        Self { quad, adaptive: true }
    }

    pub fn plain(quad: CouplingQuadrature) -> Self {
        Self { quad, adaptive: false }
    }
}

/// Quadrature nodes with their spectra.
#[derive(Debug, Clone)]
pub struct CouplingSamples {
    pub couplings: Vec<f64>,
    pub weights: Vec<f64>,
    pub spectra: Vec<NodeSpectrum>,
    pub pieces: usize,
}

impl CouplingSamples {
    /// Samples `H_λ` on a quadrature over `[0, 1]`, split at crossings of `breakpoints` when adaptive.
    pub fn collect(
        problem: &CouplingProblem,
        integrator: &CouplingIntegrator,
        breakpoints: &[f64],
        cutoff: f64,
    ) -> Result<Self> {
        let mut cuts = vec![0.0];
        if integrator.adaptive && !breakpoints.is_empty() {
            cuts.extend(problem.crossings(breakpoints)?);
        }
        cuts.push(1.0);
        cuts.dedup_by(|a, b| (*a - *b).abs() < CROSSING_TOL);
        let mut couplings = Vec::new();
        let mut weights = Vec::new();
        for w in cuts.windows(2) {
            for (x, wt) in integrator.quad.mapped(w[0], w[1]) {
                couplings.push(x);
                weights.push(wt);
            }
        }
        let spectra = par::try_map_slice(&couplings, |&l| problem.spectrum_at(l, cutoff))?;
        Ok(Self {
            couplings,
            weights,
            spectra,
            pieces: cuts.len() - 1,
        })
    }

    /// `Σ_j w_j Σ_n g(E_n(λ_j)) ⟨u_n, V u_n⟩`, accumulated in node order.
    pub fn integrate(&self, g: impl Fn(f64) -> f64) -> f64 {
        let terms: Vec<f64> = self
            .spectra
            .iter()
            .zip(&self.weights)
            .map(|(s, w)| w * s.values.iter().zip(&s.weights).map(|(&e, &v)| g(e) * v).sum::<f64>())
            .collect();
        par::pairwise_sum(&terms)
    }

    fn min_distance_to(&self, energies: &[f64]) -> f64 {
        self.spectra
            .iter()
            .flat_map(|s| s.values.iter())
            .flat_map(|&v| energies.iter().map(move |&e| (v - e).abs()))
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone)]
pub struct BsTrace {
    pub value: f64,
    /// `(λ, tr[V^{1/2} χ_B(H_λ) V^{1/2}])` at every quadrature node.
    pub node_traces: Vec<(f64, f64)>,
    pub pieces: usize,
    /// Window actually used after endpoint perturbation, if any was needed.
    pub window: SpectralWindow,
}

impl BsTrace {
    pub fn to_csv(&self, lhs: f64) -> CsvTable {
        let mut t = CsvTable::new(&["lambda", "trace_in_window"]);
        for &(l, tr) in &self.node_traces {
            t.push(csv_row![l, tr]);
        }
        t.push(csv_row!["lhs", "rhs"]);
        t.push(csv_row![lhs, self.value]);
        t.push(csv_row!["abs_diff", ""]);
        t.push(csv_row![(lhs - self.value).abs(), ""]);
        t
    }
}

/// Right side: `∫₀¹ dλ tr[V^{1/2} χ_B(H_λ) V^{1/2}]`.
pub fn bs_rhs(problem: &CouplingProblem, window: &SpectralWindow, integrator: &CouplingIntegrator) -> Result<BsTrace> {
    let mut window = window.clone();
    for attempt in 0..4 {
        let ends = window.endpoints();
        let samples = CouplingSamples::collect(problem, integrator, &ends, window.sup())?;
        if samples.min_distance_to(&ends) < ENDPOINT_TOL && attempt < 3 {
            log::warn!("window endpoint within {ENDPOINT_TOL:e} of an eigenvalue; perturbing the window");
            window = window.shifted(1e-9);
            continue;
        }
        let node_traces = samples
            .couplings
            .iter()
            .zip(&samples.spectra)
            .map(|(&l, s)| {
                let tr = s
                    .values
                    .iter()
                    .zip(&s.weights)
                    .filter(|(e, _)| window.contains(**e))
                    .map(|(_, w)| w)
                    .sum::<f64>();
                (l, tr)
            })
            .collect();
        let value = samples.integrate(|e| f64::from(u8::from(window.contains(e))));
        return Ok(BsTrace {
            value,
            node_traces,
            pieces: samples.pieces,
            window,
        });
    }
    unreachable!("the last attempt always returns")
}

/// [`bs_rhs`] for many windows at once, sharing one set of coupling samples.
pub fn bs_rhs_many(
    problem: &CouplingProblem,
    windows: &[SpectralWindow],
    integrator: &CouplingIntegrator,
) -> Result<Vec<f64>> {
    let mut windows = windows.to_vec();
    let cutoff = windows
        .iter()
        .map(SpectralWindow::sup)
        .fold(f64::NEG_INFINITY, f64::max);
    for attempt in 0..4 {
        let mut ends: Vec<f64> = windows.iter().flat_map(SpectralWindow::endpoints).collect();
        ends.sort_by(f64::total_cmp);
        ends.dedup();
        let samples = CouplingSamples::collect(problem, integrator, &ends, cutoff + 1e-8)?;
        if samples.min_distance_to(&ends) < ENDPOINT_TOL && attempt < 3 {
            log::warn!("window endpoint within {ENDPOINT_TOL:e} of an eigenvalue; perturbing all windows");
            windows = windows.iter().map(|w| w.shifted(1e-9)).collect();
            continue;
        }
        return Ok(windows
            .iter()
            .map(|w| samples.integrate(|e| f64::from(u8::from(w.contains(e)))))
            .collect());
    }
    unreachable!("the last attempt always returns")
}

/// Left side: exact `∫_B ξ(E) dE` for a step function.
pub fn bs_lhs(step: &StepFunction, window: &SpectralWindow) -> Result<f64> {
    window.intervals().iter().map(|&(a, b)| step.integral(a, b)).sum()
}

/// `∫₀¹ dλ tr[V^{1/2} f(H_λ) V^{1/2}]`, equal to `∫ f ξ dE` for the pair `(H₀ + V, H₀)`.
pub fn bs_weighted(problem: &CouplingProblem, f: &TestFunction, integrator: &CouplingIntegrator) -> Result<f64> {
    let cutoff = f.support().map_or(f64::INFINITY, |s| s.1);
    let samples = CouplingSamples::collect(problem, integrator, &f.kinks(), cutoff)?;
    Ok(samples.integrate(|e| f.eval(e)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counting::spectrum;
    use crate::operator::assemble;
    use crate::potentials::PotentialSpec;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn toy() -> CouplingProblem {
        let h0 = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]);
        CouplingProblem::from_dense(&h0, vec![1.0, 0.0]).unwrap()
    }

    fn gl(n: usize) -> CouplingIntegrator {
        CouplingIntegrator::adaptive(CouplingQuadrature::gauss_legendre(n).unwrap())
    }

    #[test]
    fn window_validation() {
        assert!(SpectralWindow::new(vec![(0.0, 1.0), (0.5, 2.0)]).is_err());
        assert!(SpectralWindow::new(vec![(1.0, 1.0)]).is_err());
        let w = SpectralWindow::new(vec![(2.0, 3.0), (0.0, 1.0)]).unwrap();
        assert_eq!(w.intervals(), &[(0.0, 1.0), (2.0, 3.0)]);
        assert!(w.contains(0.0) && !w.contains(1.0) && w.contains(2.5));
    }

    #[test]
    fn diagonal_toy_projection_trace() {
        let w = SpectralWindow::interval(0.2, 0.7).unwrap();
        let rhs = bs_rhs(&toy(), &w, &gl(8)).unwrap();
        assert!((rhs.value - 0.5).abs() < 1e-12, "{}", rhs.value);
        let step = StepFunction::from_spectra(&[0.0, 1.0], &[1.0, 1.0]);
        assert!((bs_lhs(&step, &w).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn diagonal_toy_weighted() {
        let f = TestFunction::Exponential { rate: 1.0 };
        let v = bs_weighted(&toy(), &f, &gl(16)).unwrap();
        assert!((v - (1.0 - (-1.0f64).exp())).abs() < 1e-14);
    }

    #[test]
    fn zero_perturbation_and_zero_weight_vanish() {
        let g = BoxGrid::new(1, 8.0, 0.125).unwrap();
        let z = PotentialSpec::zero(1);
        let p = CouplingProblem::from_grid(&g, &z, &z).unwrap();
        let w = SpectralWindow::interval(0.0, 2.0).unwrap();
        assert_eq!(bs_rhs(&p, &w, &gl(8)).unwrap().value, 0.0);
        let bump = PotentialSpec::square_bump(10.0, 0.5, vec![0.0]);
        let p = CouplingProblem::from_grid(&g, &z, &bump).unwrap();
        let window_far = SpectralWindow::interval(-5.0, -1.0).unwrap();
        assert_eq!(bs_rhs(&p, &window_far, &gl(8)).unwrap().value, 0.0);
    }

    #[test]
    fn hat_integral_is_exact() {
        let f = TestFunction::Hat { lo: 0.0, hi: 2.0 };
        assert!((f.integral(-1.0, 3.0) - 1.0).abs() < 1e-15);
        assert!((f.integral(0.0, 1.0) - 0.5).abs() < 1e-15);
        assert!((f.integral(0.5, 1.5) - 0.75).abs() < 1e-15);
        assert_eq!(f.eval(1.0), 1.0);
        assert_eq!(f.eval(2.0), 0.0);
    }

    #[test]
    fn one_dimensional_bump_matches_step_integral() {
        let g = BoxGrid::new(1, 8.0, 8.0 / 256.0).unwrap();
        let z = PotentialSpec::zero(1);
        let bump = PotentialSpec::square_bump(10.0, 0.5, vec![0.0]);
        let p = CouplingProblem::from_grid(&g, &z, &bump).unwrap();
        let e0 = spectrum(&assemble(&g, &z, &bump, 0.0).unwrap().matrix).unwrap();
        let e1 = spectrum(&assemble(&g, &z, &bump, 1.0).unwrap().matrix).unwrap();
        let step = StepFunction::from_spectra(&e0, &e1);
        let w = SpectralWindow::interval(0.0, 2.0).unwrap();
        let rhs = bs_rhs(&p, &w, &gl(64)).unwrap();
        let lhs = bs_lhs(&step, &w).unwrap();
        assert!(rhs.pieces > 1);
        assert!((lhs - rhs.value).abs() < 1e-6, "lhs {lhs} rhs {}", rhs.value);
        let f = TestFunction::Hat { lo: 0.0, hi: 2.0 };
        let weighted = bs_weighted(&p, &f, &gl(64)).unwrap();
        let oracle = f.integrate_step(&step).unwrap();
        assert!((weighted - oracle).abs() < 1e-6 * oracle.abs().max(1.0));
    }

    #[test]
    fn plain_quadrature_error_shrinks_with_refinement() {
        let g = BoxGrid::new(1, 6.0, 6.0 / 64.0).unwrap();
        let z = PotentialSpec::zero(1);
        let bump = PotentialSpec::square_bump(8.0, 0.5, vec![0.3]);
        let p = CouplingProblem::from_grid(&g, &z, &bump).unwrap();
        let e0 = spectrum(&assemble(&g, &z, &bump, 0.0).unwrap().matrix).unwrap();
        let e1 = spectrum(&assemble(&g, &z, &bump, 1.0).unwrap().matrix).unwrap();
        let w = SpectralWindow::interval(0.1, 1.9).unwrap();
        let lhs = bs_lhs(&StepFunction::from_spectra(&e0, &e1), &w).unwrap();
        let err = |n| {
            let rhs = bs_rhs(
                &p,
                &w,
                &CouplingIntegrator::plain(
                    CouplingQuadrature::new(crate::quadrature::QuadratureRule::Midpoint, n).unwrap(),
                ),
            )
            .unwrap();
            (rhs.value - lhs).abs()
        };
        let coarse = err(16);
        let fine = err(1024);
        assert!(fine < coarse, "{fine} !< {coarse}");
        let adaptive = (bs_rhs(&p, &w, &gl(16)).unwrap().value - lhs).abs();
        assert!(adaptive < 1e-9);
    }

    fn random_problem(rng: &mut ChaCha8Rng, n: usize) -> CouplingProblem {
        let b = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let h0 = &b + b.transpose();
        let v = (0..n)
            .map(|_| {
                if rng.random_bool(0.5) {
                    rng.random_range(0.0..2.0)
                } else {
                    0.0
                }
            })
            .collect();
        CouplingProblem::from_dense(&h0, v).unwrap()
    }

    #[test]
    fn random_matrix_pairs_satisfy_the_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..10 {
            let p = random_problem(&mut rng, 12);
            let e0 = dense::eigenvalues(&p.h0().to_dense()).unwrap();
            let e1 = dense::eigenvalues(&p.at(1.0).to_dense()).unwrap();
            let step = StepFunction::from_spectra(&e0, &e1);
            let a = rng.random_range(-3.0..0.0);
            let w = SpectralWindow::new(vec![(a, a + 1.3), (a + 2.0, a + 3.5)]).unwrap();
            let rhs = bs_rhs(&p, &w, &gl(64)).unwrap().value;
            let lhs = bs_lhs(&step, &w).unwrap();
            assert!((lhs - rhs).abs() < 1e-6, "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn shared_samples_match_single_windows() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let p = random_problem(&mut rng, 10);
        let windows: Vec<SpectralWindow> = (0..6)
            .map(|i| SpectralWindow::interval(-2.0 + 0.5 * i as f64, -1.2 + 0.5 * i as f64).unwrap())
            .collect();
        let many = bs_rhs_many(&p, &windows, &gl(32)).unwrap();
        for (w, v) in windows.iter().zip(&many) {
            let single = bs_rhs(&p, w, &gl(32)).unwrap().value;
            assert!((single - v).abs() < 1e-9, "{single} vs {v}");
        }
    }

    #[test]
    fn node_csv_has_summary_rows() {
        let w = SpectralWindow::interval(0.2, 0.7).unwrap();
        let rhs = bs_rhs(&toy(), &w, &gl(4)).unwrap();
        let text = rhs.to_csv(0.5).render();
        assert!(text.starts_with("lambda,trace_in_window\n"));
        assert!(text.contains("lhs,rhs\n"));
        assert!(text.contains("abs_diff,"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn rhs_is_positive_and_monotone_in_window(seed in 0u64..10_000, a in -3.0..1.0f64, len in 0.1..2.0f64, grow in 0.0..1.5f64) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = random_problem(&mut rng, 8);
            let inner = SpectralWindow::interval(a, a + len).unwrap();
            let outer = SpectralWindow::interval(a - grow, a + len + grow).unwrap();
            let ri = bs_rhs(&p, &inner, &gl(16)).unwrap().value;
            let ro = bs_rhs(&p, &outer, &gl(16)).unwrap().value;
            prop_assert!(ri >= -1e-12);
            prop_assert!(ro >= ri - 1e-9);
        }
    }
}
