//! Brownian-bridge Feynman–Kac estimators.
//!
//! Every path is a pure function of `(seed, path index)`: path `k` draws its
//! Gaussian increments from ChaCha stream `k` of the seed, and the starting
//! point of path `k` from stream `k` of a derived seed. Per-path values are
//! collected in index order and reduced with [`par::pairwise_sum`], so
//! estimates are bit-identical for any thread count.
//!
//! Time integrals `∫₀ᵗ U(b(s)) ds` use the midpoint rule on the discretized
//! path. The Dirichlet functional `χ_Λ(b)` only checks path nodes, which
//! slightly overestimates survival near the walls.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::csv::CsvTable;
use crate::potentials::{Potential, SupportBox};
use crate::quadrature::CouplingQuadrature;
use crate::{csv_row, par, Error, Result};

/// Default dilation of the support box in bridge standard deviations `√t`.
pub const DEFAULT_REACH: f64 = 5.0;

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleParams {
    pub n_paths: usize,
    pub n_steps: usize,
    pub master_seed: u64,
    /// Dilation of `supp V` in units of `√t` when sampling starting points.
    pub reach: f64,
}

impl EnsembleParams {
    pub fn new(n_paths: usize, n_steps: usize, master_seed: u64) -> Self {
        Self {
            n_paths,
            n_steps,
            master_seed,
            reach: DEFAULT_REACH,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_paths < 2 {
            return Err(Error::InvalidParameter("need at least 2 paths".into()));
        }
        if self.n_steps < 2 {
            return Err(Error::InvalidParameter("need at least 2 time steps".into()));
        }
        if !(self.reach > 0.0 && self.reach.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "reach must be > 0, got {}",
                self.reach
            )));
        }
        Ok(())
    }
}

/// A seeded family of bridges from `start` to `end` over `[0, horizon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BridgeEnsemble {
    pub dim: usize,
    pub horizon: f64,
    pub n_steps: usize,
    pub n_paths: usize,
    pub master_seed: u64,
    pub start: Vec<f64>,
    pub end: Vec<f64>,
}

impl BridgeEnsemble {
    pub fn path(&self, k: usize) -> Result<BridgePath> {
        sample_bridge(
            self.master_seed,
            k as u64,
            self.dim,
            self.horizon,
            self.n_steps,
            &self.start,
            &self.end,
        )
    }
}

/// Node positions `b(s_j)`, `s_j = j·t/n`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct BridgePath {
    pub dim: usize,
    pub horizon: f64,
    pub points: Vec<f64>,
}

impl BridgePath {
    pub fn n_steps(&self) -> usize {
        self.points.len() / self.dim - 1
    }

    pub fn node(&self, j: usize) -> &[f64] {
        &self.points[j * self.dim..(j + 1) * self.dim]
    }

    fn translate(&mut self, x: &[f64]) {
        for p in self.points.chunks_mut(self.dim) {
            p.iter_mut().zip(x).for_each(|(a, b)| *a += b);
        }
    }

    /// Midpoint-rule `∫₀ᵗ U(b(s)) ds`.
    pub fn time_integral(&self, potential: &dyn Potential, scratch: &mut [f64]) -> f64 {
        let n = self.n_steps();
        let ds = self.horizon / n as f64;
        let mut acc = 0.0;
        for j in 0..n {
            let a = self.node(j);
            let b = self.node(j + 1);
            scratch
                .iter_mut()
                .zip(a.iter().zip(b))
                .for_each(|(m, (p, q))| *m = 0.5 * (p + q));
            acc += potential.value(scratch);
        }
        acc * ds
    }

    /// `χ_Λ(b)` on the nodes for the cube `(-L/2, L/2)ᵈ`.
    pub fn stays_in_cube(&self, side: f64) -> bool {
        let half = side / 2.0;
        self.points.iter().all(|v| v.abs() < half)
    }
}

/// splitmix64 finaliser, used to derive independent seeds.
fn mix(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn stream(seed: u64, k: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k);
    rng
}

/// Path `k` of the bridge ensemble with the given seed:
/// `b(s) = x + W(s) − (s/t)(W(t) − (y − x))` from a standard Brownian walk `W`.
pub fn sample_bridge(
    seed: u64,
    k: u64,
    dim: usize,
    t: f64,
    n_steps: usize,
    x: &[f64],
    y: &[f64],
) -> Result<BridgePath> {
    if n_steps < 2 {
        return Err(Error::InvalidParameter("need at least 2 time steps".into()));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("horizon must be > 0, got {t}")));
    }
    if x.len() != dim || y.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: if x.len() != dim { x.len() } else { y.len() },
        });
    }
    let mut rng = stream(seed, k);
    let ds = t / n_steps as f64;
    let sd = ds.sqrt();
    let mut walk = vec![0.0; (n_steps + 1) * dim];
    for j in 1..=n_steps {
        for i in 0..dim {
            let z: f64 = rng.sample(StandardNormal);
            walk[j * dim + i] = walk[(j - 1) * dim + i] + sd * z;
        }
    }
    let mut points = vec![0.0; (n_steps + 1) * dim];
    for j in 0..=n_steps {
        let frac = j as f64 / n_steps as f64;
        for i in 0..dim {
            let w_end = walk[n_steps * dim + i];
            points[j * dim + i] = x[i] + walk[j * dim + i] - frac * (w_end - (y[i] - x[i]));
        }
    }
    points[..dim].copy_from_slice(x);
    points[n_steps * dim..].copy_from_slice(y);
    Ok(BridgePath {
        dim,
        horizon: t,
        points,
    })
}

/// Normalized bridge marginal `ρ_{x,x}^{0,t}(s; y)` for a loop based at `x`.
pub fn bridge_density(x: &[f64], t: f64, s: f64, y: &[f64]) -> Result<f64> {
    if !(s > 0.0 && s < t) {
        return Err(Error::InvalidParameter(format!("s = {s} must lie in (0, {t})")));
    }
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    let d = x.len() as f64 / 2.0;
    let r2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    let first = (-r2 / (2.0 * s)).exp() / (2.0 * PI * s).powf(d);
    let second = (-r2 / (2.0 * (t - s))).exp() / (2.0 * PI * (t - s)).powf(d);
    Ok((2.0 * PI * t).powf(d) * first * second)
}

#[derive(Debug, Clone, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_paths: usize,
    pub n_steps: usize,
    pub seed: u64,
    pub horizon: f64,
    pub estimator_label: String,
    /// Bound on the contribution of starting points outside the sampling box.
    pub tail_bound: f64,
}

impl McEstimate {
    pub fn csv_header() -> CsvTable {
        CsvTable::new(&["t", "estimate", "std_error", "n_paths", "n_steps", "seed", "estimator"])
    }

    pub fn csv_row(&self) -> Vec<String> {
        csv_row![
            self.horizon,
            self.mean,
            self.std_error,
            self.n_paths,
            self.n_steps,
            self.seed,
            self.estimator_label.as_str()
        ]
    }
}

/// Mean and standard error of `values`, both reduced in fixed order.
fn mean_and_error(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = par::pairwise_sum(values) / n;
    let sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = par::pairwise_sum(&sq) / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn check_t(t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("t must be > 0, got {t}")));
    }
    Ok(())
}

fn check_dims(background: &dyn Potential, perturbation: &dyn Potential) -> Result<usize> {
    let d = perturbation.dim();
    if background.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: background.dim(),
        });
    }
    if !(1..=3).contains(&d) {
        return Err(Error::InvalidParameter(format!(
            "path integrals support d in 1..=3, got {d}"
        )));
    }
    Ok(d)
}

/// Gaussian-tail bound on the part of `∫ dx` left out by the sampling box:
/// a loop of duration `t` started at sup-distance `r` from `supp V` reaches
/// it with probability at most `2 e^{−2r²/t}`.
fn truncation_tail(support: &SupportBox, reach: f64, t: f64, background_inf: f64) -> f64 {
    let SupportBox::Bounded { lo, hi } = support else {
        return 0.0;
    };
    let widths: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| b - a).collect();
    let d = widths.len();
    let shell = |r: f64| -> f64 {
        (0..d)
            .map(|i| {
                2.0 * widths
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, w)| w + 2.0 * r)
                    .product::<f64>()
            })
            .sum()
    };
    let span = 12.0 * t.sqrt();
    let quad = CouplingQuadrature::gauss_legendre(64).expect("64 > 0");
    let integral = quad.integrate(reach, reach + span, |r| 2.0 * (-2.0 * r * r / t).exp() * shell(r));
    let growth = (t * (-background_inf).max(0.0)).exp();
    growth * integral / (t * (2.0 * PI * t).powf(d as f64 / 2.0))
}

fn sampling_box(perturbation: &dyn Potential, t: f64, reach: f64, side: Option<f64>) -> Result<Option<SupportBox>> {
    let support = perturbation.support();
    match support {
        SupportBox::Empty => Ok(None),
        SupportBox::Unbounded => Err(Error::InvalidParameter("perturbation must have compact support".into())),
        SupportBox::Bounded { .. } => {
            let dilated = support.dilate(reach * t.sqrt());
            let clipped = match side {
                Some(l) => dilated.clip_to_cube(l),
                None => dilated,
            };
            if clipped.is_empty() {
                return Err(Error::EmptySamplingBox);
            }
            Ok(Some(clipped))
        }
    }
}

fn laplace_mc(
    side: Option<f64>,
    t: f64,
    background: &dyn Potential,
    perturbation: &dyn Potential,
    params: &EnsembleParams,
    label: &str,
) -> Result<McEstimate> {
    check_t(t)?;
    params.validate()?;
    let d = check_dims(background, perturbation)?;
    if let Some(l) = side {
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::InvalidParameter(format!("box side must be > 0, got {l}")));
        }
    }
    let mut estimate = McEstimate {
        mean: 0.0,
        std_error: 0.0,
        n_paths: params.n_paths,
        n_steps: params.n_steps,
        seed: params.master_seed,
        horizon: t,
        estimator_label: label.to_string(),
        tail_bound: 0.0,
    };
    let Some(sbox) = sampling_box(perturbation, t, params.reach, side)? else {
        return Ok(estimate);
    };
    let SupportBox::Bounded { lo, hi } = &sbox else {
        unreachable!("sampling boxes are bounded")
    };
    let volume = sbox.volume();
    let origin = vec![0.0; d];
    let start_seed = mix(params.master_seed, 0x0053_5441_5254);
    let values = par::map_range(params.n_paths, |k| {
        let mut path = sample_bridge(params.master_seed, k as u64, d, t, params.n_steps, &origin, &origin)
            .expect("parameters validated above");
        let mut rng = stream(start_seed, k as u64);
        let x: Vec<f64> = lo
            .iter()
            .zip(hi)
            .map(|(a, b)| a + (b - a) * rng.random::<f64>())
            .collect();
        path.translate(&x);
        if let Some(l) = side {
            if !path.stays_in_cube(l) {
                return 0.0;
            }
        }
        let mut scratch = vec![0.0; d];
        let v = path.time_integral(perturbation, &mut scratch);
        if v == 0.0 {
            return 0.0;
        }
        let v0 = path.time_integral(background, &mut scratch);
        let value = (-v0).exp() * -(-v).exp_m1();
        debug_assert!(value >= 0.0, "negative integrand {value}");
        volume * value
    });
    let (mean, se) = mean_and_error(&values);
    let prefactor = 1.0 / (t * (2.0 * PI * t).powf(d as f64 / 2.0));
    estimate.mean = prefactor * mean;
    estimate.std_error = prefactor * se;
    estimate.tail_bound = truncation_tail(
        &perturbation.support(),
        params.reach * t.sqrt(),
        t,
        background.infimum(),
    );
    Ok(estimate)
}

/// Monte Carlo estimate of `ξ̃_L(t) = ∫ e^{−tE} ξ_L(E) dE` through the
/// Feynman–Kac representation on the Dirichlet box of side `L`.
pub fn laplace_finite_volume_mc(
    side: f64,
    t: f64,
    background: &dyn Potential,
    perturbation: &dyn Potential,
    params: &EnsembleParams,
) -> Result<McEstimate> {
    laplace_mc(Some(side), t, background, perturbation, params, "finite_volume")
}

/// Monte Carlo estimate of the infinite-volume `ξ̃(t)`.
pub fn laplace_infinite_volume_mc(
    t: f64,
    background: &dyn Potential,
    perturbation: &dyn Potential,
    params: &EnsembleParams,
) -> Result<McEstimate> {
    laplace_mc(None, t, background, perturbation, params, "infinite_volume")
}

/// `ξ̃(t)` through the coupling-integrated form
/// `(2πt)^{−d/2} ∫₀¹ dλ ∫ dx ∫₀ᵗ ds/t 𝔼_{x,x}[V(b(s)) 𝒰_t(b)]`,
/// with the λ-integral done by `quad` on each path.
pub fn laplace_infinite_volume_coupling_mc(
    t: f64,
    background: &dyn Potential,
    perturbation: &dyn Potential,
    params: &EnsembleParams,
    quad: &CouplingQuadrature,
) -> Result<McEstimate> {
    check_t(t)?;
    params.validate()?;
    let d = check_dims(background, perturbation)?;
    let Some(sbox) = sampling_box(perturbation, t, params.reach, None)? else {
        return Ok(McEstimate {
            mean: 0.0,
            std_error: 0.0,
            n_paths: params.n_paths,
            n_steps: params.n_steps,
            seed: params.master_seed,
            horizon: t,
            estimator_label: "coupling_integrated".into(),
            tail_bound: 0.0,
        });
    };
    let SupportBox::Bounded { lo, hi } = &sbox else {
        unreachable!("sampling boxes are bounded")
    };
    let volume = sbox.volume();
    let origin = vec![0.0; d];
    let start_seed = mix(params.master_seed, 0x0053_5441_5254);
    let values = par::map_range(params.n_paths, |k| {
        let mut path = sample_bridge(params.master_seed, k as u64, d, t, params.n_steps, &origin, &origin)
            .expect("parameters validated above");
        let mut rng = stream(start_seed, k as u64);
        let x: Vec<f64> = lo
            .iter()
            .zip(hi)
            .map(|(a, b)| a + (b - a) * rng.random::<f64>())
            .collect();
        path.translate(&x);
        let mut scratch = vec![0.0; d];
        let v = path.time_integral(perturbation, &mut scratch);
        let v0 = path.time_integral(background, &mut scratch);
        let inner: f64 = quad
            .nodes
            .iter()
            .zip(&quad.weights)
            .map(|(lambda, w)| w * (v / t) * (-(v0 + lambda * v)).exp())
            .sum();
        volume * inner
    });
    let (mean, se) = mean_and_error(&values);
    let prefactor = 1.0 / (2.0 * PI * t).powf(d as f64 / 2.0);
    Ok(McEstimate {
        mean: prefactor * mean,
        std_error: prefactor * se,
        n_paths: params.n_paths,
        n_steps: params.n_steps,
        seed: params.master_seed,
        horizon: t,
        estimator_label: "coupling_integrated".into(),
        tail_bound: truncation_tail(
            &perturbation.support(),
            params.reach * t.sqrt(),
            t,
            background.infimum(),
        ),
    })
}

/// `U_λ = V₀ + λV`.
struct CoupledPotential<'a> {
    background: &'a dyn Potential,
    perturbation: &'a dyn Potential,
    coupling: f64,
}

impl Potential for CoupledPotential<'_> {
    fn dim(&self) -> usize {
        self.perturbation.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.background.value(x) + self.coupling * self.perturbation.value(x)
    }

    fn support(&self) -> SupportBox {
        SupportBox::Unbounded
    }

    fn label(&self) -> String {
        format!(
            "{} + {}*{}",
            self.background.label(),
            self.coupling,
            self.perturbation.label()
        )
    }

    fn infimum(&self) -> f64 {
        self.background.infimum() + self.coupling * self.perturbation.infimum()
    }
}

/// `𝔼_{x,y}^{0,t}[𝒰_t(b)]` by direct sampling; returns `(mean, std_error)`.
fn bridge_expectation(
    potential: &dyn Potential,
    seed: u64,
    n_paths: usize,
    n_steps: usize,
    t: f64,
    x: &[f64],
    y: &[f64],
) -> Result<(f64, f64)> {
    let d = x.len();
    let values = par::try_map_slice(&(0..n_paths as u64).collect::<Vec<_>>(), |&k| {
        let path = sample_bridge(seed, k, d, t, n_steps, x, y)?;
        let mut scratch = vec![0.0; d];
        Ok((-path.time_integral(potential, &mut scratch)).exp())
    })?;
    Ok(mean_and_error(&values))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarkovReport {
    pub lhs: f64,
    pub lhs_std_error: f64,
    pub rhs: f64,
    pub rhs_std_error: f64,
    /// `|lhs − rhs|` in units of the combined standard error (0 when both errors vanish and the sides agree).
    pub discrepancy_sigmas: f64,
}

/// Checks the Markov splitting of a loop at time `t − s`:
/// `𝔼_{x,x}^{0,t}[𝒰_t] = ∫ dy ρ_{x,x}^{0,t}(t−s; y) 𝔼_{x,y}^{0,t−s}[𝒰_{t−s}] 𝔼_{y,x}^{0,s}[𝒰_s]`
/// in `d = 1`, with Gauss–Legendre quadrature over `y` and independent
/// bridge ensembles for every quadrature node.
#[allow(clippy::too_many_arguments)]
pub fn markov_identity_check(
    t: f64,
    s: f64,
    x: f64,
    coupling: f64,
    background: &dyn Potential,
    perturbation: &dyn Potential,
    params: &EnsembleParams,
    y_nodes: usize,
) -> Result<MarkovReport> {
    check_t(t)?;
    params.validate()?;
    if !(s > 0.0 && s < t) {
        return Err(Error::InvalidParameter(format!("s = {s} must lie in (0, {t})")));
    }
    if check_dims(background, perturbation)? != 1 {
        return Err(Error::InvalidParameter("the Markov check runs in d = 1".into()));
    }
    let u = CoupledPotential {
        background,
        perturbation,
        coupling,
    };
    let steps_for = |duration: f64| ((params.n_steps as f64 * duration / t).round() as usize).max(2);

    let (lhs, lhs_se) = bridge_expectation(&u, params.master_seed, params.n_paths, params.n_steps, t, &[x], &[x])?;

    // ρ(t−s; ·) is Gaussian with variance s(t−s)/t
    let sigma = (s * (t - s) / t).sqrt();
    let half_width = 8.0 * sigma;
    let quad = CouplingQuadrature::gauss_legendre(y_nodes.max(2))?;
    let nodes: Vec<(usize, (f64, f64))> = quad.mapped(x - half_width, x + half_width).enumerate().collect();
    let terms = par::try_map_slice(&nodes, |&(j, (y, w))| {
        let rho = bridge_density(&[x], t, t - s, &[y])?;
        let seed_a = mix(params.master_seed, 2 * j as u64 + 1);
        let seed_b = mix(params.master_seed, 2 * j as u64 + 2);
        let (a, sa) = bridge_expectation(&u, seed_a, params.n_paths, steps_for(t - s), t - s, &[x], &[y])?;
        let (b, sb) = bridge_expectation(&u, seed_b, params.n_paths, steps_for(s), s, &[y], &[x])?;
        let c = w * rho;
        Ok::<_, Error>((
            c * a * b,
            c * c * (a * a * sb * sb + b * b * sa * sa + sa * sa * sb * sb),
        ))
    })?;
    let rhs = par::pairwise_sum(&terms.iter().map(|p| p.0).collect::<Vec<_>>());
    let rhs_var = par::pairwise_sum(&terms.iter().map(|p| p.1).collect::<Vec<_>>());
    let combined = (lhs_se * lhs_se + rhs_var).sqrt();
    let gap = (lhs - rhs).abs();
    let discrepancy_sigmas = if combined > 0.0 {
        gap / combined
    } else if gap == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(MarkovReport {
        lhs,
        lhs_std_error: lhs_se,
        rhs,
        rhs_std_error: rhs_var.sqrt(),
        discrepancy_sigmas,
    })
}
