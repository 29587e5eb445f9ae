//! Limit experiments along sequences of box lengths: vague convergence of
//! `ξ_L dE`, smoothed pointwise limits, Cesàro means, Kirsch divergence scans
//! and decay under scaled perturbations.
//!
//! Every experiment holds the grid spacing fixed in physical units across
//! lengths. Independent lengths run concurrently; reports keep length order.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::birman_solomyak::{
    bs_rhs, bs_rhs_many, bs_weighted, CouplingIntegrator, CouplingProblem, SpectralWindow, TestFunction,
};
use crate::counting::{spectrum, ssf_finite_volume, StepFunction};
use crate::csv::CsvTable;
use crate::operator::{assemble, lattice_multiplicity, BoxGrid};
use crate::potentials::{Potential, PotentialKind, PotentialSpec, ScaledPerturbation};
use crate::{csv_row, par, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SequenceRule {
    Arithmetic,
    Geometric,
    Golden,
    TunedToDegeneracy,
    Explicit,
}

/// Strictly increasing box lengths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthSequence {
    values: Vec<f64>,
    rule: SequenceRule,
}

impl LengthSequence {
    pub fn new(values: Vec<f64>, rule: SequenceRule) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter("length sequence is empty".into()));
        }
        if values.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
            return Err(Error::InvalidParameter("lengths must be finite and > 0".into()));
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter("lengths must be strictly increasing".into()));
        }
        Ok(Self { values, rule })
    }

    pub fn explicit(values: Vec<f64>) -> Result<Self> {
        Self::new(values, SequenceRule::Explicit)
    }

    pub fn arithmetic(start: f64, step: f64, count: usize) -> Result<Self> {
        Self::new(
            (0..count).map(|j| start + step * j as f64).collect(),
            SequenceRule::Arithmetic,
        )
    }

    pub fn geometric(start: f64, ratio: f64, count: usize) -> Result<Self> {
        Self::new(
            (0..count).map(|j| start * ratio.powi(j as i32)).collect(),
            SequenceRule::Geometric,
        )
    }

    /// `L_j = start + φ·j`; the irrational step keeps `√(2E)·L_j/π` from locking in phase.
    pub fn golden(start: f64, count: usize) -> Result<Self> {
        let phi = 0.5 * (1.0 + 5f64.sqrt());
        Self::new(
            (0..count).map(|j| start + phi * j as f64).collect(),
            SequenceRule::Golden,
        )
    }

    /// Rounds every length to a multiple of `spacing`.
    pub fn snapped(&self, spacing: f64) -> Result<Self> {
        Self::new(
            self.values.iter().map(|l| (l / spacing).round() * spacing).collect(),
            self.rule,
        )
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn rule(&self) -> SequenceRule {
        self.rule
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn largest(&self) -> f64 {
        *self.values.last().expect("sequence is nonempty")
    }

    /// Every length must exceed the diameter of the support of `v`.
    pub fn check_against(&self, v: &dyn Potential) -> Result<()> {
        let support = v.support();
        if support.is_empty() {
            return Ok(());
        }
        let diameter = 2.0
            * support
                .sup_extent()
                .ok_or_else(|| Error::InvalidParameter("perturbation must have bounded support".into()))?;
        match self.values.iter().find(|&&l| l <= diameter) {
            Some(l) => Err(Error::InvalidParameter(format!(
                "length {l} does not exceed the support diameter {diameter}"
            ))),
            None => Ok(()),
        }
    }
}

/// Dimension, spacing and the potential pair shared by all lengths of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxSetup {
    pub dim: usize,
    pub spacing: f64,
    pub background: PotentialSpec,
    pub perturbation: PotentialSpec,
}

impl BoxSetup {
    /// `d = 1`, `h = 1/32`, `V₀ = 0`, `V = 10·χ_{[-1/2, 1/2]}`.
    pub fn standard_1d() -> Self {
        Self {
            dim: 1,
            spacing: 1.0 / 32.0,
            background: PotentialSpec::zero(1),
            perturbation: PotentialSpec::square_bump(10.0, 0.5, vec![0.0]),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.background.dim() != self.dim || self.perturbation.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: if self.background.dim() != self.dim {
                    self.background.dim()
                } else {
                    self.perturbation.dim()
                },
            });
        }
        if !(self.spacing > 0.0 && self.spacing.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "spacing must be > 0, got {}",
                self.spacing
            )));
        }
        self.background.validate()?;
        self.perturbation.validate_perturbation()
    }

    pub fn grid(&self, side_length: f64) -> Result<BoxGrid> {
        BoxGrid::new(self.dim, side_length, self.spacing)
    }

    /// Exact step function `N₀ − N₁` from full spectra.
    pub fn step_function(&self, side_length: f64) -> Result<StepFunction> {
        let g = self.grid(side_length)?;
        let e0 = spectrum(&assemble(&g, &self.background, &self.perturbation, 0.0)?.matrix)?;
        let e1 = spectrum(&assemble(&g, &self.background, &self.perturbation, 1.0)?.matrix)?;
        Ok(StepFunction::from_spectra(&e0, &e1))
    }

    /// `ξ_L` at the given energies by inertia counting.
    pub fn ssf(&self, side_length: f64, energies: &[f64]) -> Result<Vec<i64>> {
        Ok(ssf_finite_volume(&self.grid(side_length)?, &self.background, &self.perturbation, energies)?.values)
    }

    pub fn coupling_problem(&self, side_length: f64) -> Result<CouplingProblem> {
        CouplingProblem::from_grid(&self.grid(side_length)?, &self.background, &self.perturbation)
    }
}

/// Named pass/fail outcome inside a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub passed: bool,
}

fn verdict(name: &str, passed: bool) -> Verdict {
    Verdict {
        name: name.to_string(),
        passed,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub lengths: Vec<f64>,
    pub functionals: Vec<f64>,
    pub reference: f64,
    /// Box used for the reference.
    pub reference_length: f64,
    /// `|reference(L_ref) − reference(L_ref')|` for a smaller second box.
    pub proxy_error: f64,
    pub gaps: Vec<f64>,
    pub verdicts: Vec<Verdict>,
}

impl ConvergenceReport {
    pub fn relative_gaps(&self) -> Vec<f64> {
        let scale = self.reference.abs().max(f64::MIN_POSITIVE);
        self.gaps.iter().map(|g| g / scale).collect()
    }

    pub fn verdict(&self, name: &str) -> Option<bool> {
        self.verdicts.iter().find(|v| v.name == name).map(|v| v.passed)
    }

    pub fn to_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(&["L", "functional", "reference", "gap"]);
        for ((l, f), g) in self.lengths.iter().zip(&self.functionals).zip(&self.gaps) {
            t.push(csv_row![*l, *f, self.reference, *g]);
        }
        t
    }
}

/// Options for [`vague_convergence_experiment`].
#[derive(Debug, Clone)]
pub struct VagueOptions {
    pub reference_length: f64,
    /// Second box for the proxy-error estimate.
    pub secondary_length: f64,
    pub integrator: CouplingIntegrator,
    /// Relative tolerance on the last gap.
    pub final_relative_tol: f64,
    /// Envelope check applies from this length on.
    pub envelope_from: f64,
    pub envelope_factor: f64,
}

impl VagueOptions {
    pub fn new(reference_length: f64, integrator: CouplingIntegrator) -> Self {
        Self {
            reference_length,
            secondary_length: 0.75 * reference_length,
            integrator,
            final_relative_tol: 0.02,
            envelope_from: 8.0,
            envelope_factor: 1.5,
        }
    }
}

/// `∫ f ξ_{L_j} dE` against the Birman–Solomyak weighted trace on a large box.
pub fn vague_convergence_experiment(
    f: &TestFunction,
    seq: &LengthSequence,
    setup: &BoxSetup,
    opts: &VagueOptions,
) -> Result<ConvergenceReport> {
    setup.validate()?;
    seq.check_against(&setup.perturbation)?;
    if f.support().is_none() {
        return Err(Error::InvalidParameter(
            "vague convergence needs a compactly supported weight".into(),
        ));
    }
    let functionals = par::try_map_slice(seq.values(), |&l| f.integrate_step(&setup.step_function(l)?))?;
    let reference = bs_weighted(&setup.coupling_problem(opts.reference_length)?, f, &opts.integrator)?;
    let secondary = bs_weighted(&setup.coupling_problem(opts.secondary_length)?, f, &opts.integrator)?;
    let gaps: Vec<f64> = functionals.iter().map(|v| (v - reference).abs()).collect();
    let scale = reference.abs().max(f64::MIN_POSITIVE);
    let decreasing = gaps.windows(2).all(|w| w[1] < w[0]);
    let mut envelope_ok = true;
    let mut running_min = f64::INFINITY;
    for (l, g) in seq.values().iter().zip(&gaps) {
        if *l >= opts.envelope_from {
            if running_min.is_finite() && *g > opts.envelope_factor * running_min {
                envelope_ok = false;
            }
            running_min = running_min.min(*g);
        }
    }
    let last = *gaps.last().expect("sequence is nonempty");
    let final_ok = if reference == 0.0 {
        last == 0.0
    } else {
        last / scale < opts.final_relative_tol
    };
    Ok(ConvergenceReport {
        lengths: seq.values().to_vec(),
        functionals,
        reference,
        reference_length: opts.reference_length,
        proxy_error: (reference - secondary).abs(),
        gaps,
        verdicts: vec![
            verdict("gaps_strictly_decreasing", decreasing),
            verdict("decreasing_envelope", envelope_ok),
            verdict("final_gap_below_tolerance", final_ok),
        ],
    })
}

/// Window averages `(1/δ)∫_E^{E+δ} ξ_L` over a δ-ladder and a length sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothedReport {
    pub energy: f64,
    pub deltas: Vec<f64>,
    pub lengths: Vec<f64>,
    /// `values[i][j]` for `deltas[i]`, `lengths[j]`.
    pub values: Vec<Vec<f64>>,
    /// `bs_rhs` over `[E, E + δ_min)` divided by `δ_min` on the reference box.
    pub reference: f64,
}

impl SmoothedReport {
    pub fn to_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(&["delta", "L", "value", "reference"]);
        for (d, row) in self.deltas.iter().zip(&self.values) {
            for (l, v) in self.lengths.iter().zip(row) {
                t.push(csv_row![*d, *l, *v, self.reference]);
            }
        }
        t
    }

    /// The reversed order: `δ ↓ 0` at fixed `L` returns the integer `ξ_L(E)`.
    pub fn at_length(&self, length_index: usize) -> Vec<f64> {
        self.values.iter().map(|row| row[length_index]).collect()
    }
}

pub fn smoothed_pointwise(
    energy: f64,
    deltas: &[f64],
    seq: &LengthSequence,
    setup: &BoxSetup,
    reference_length: f64,
    integrator: &CouplingIntegrator,
) -> Result<SmoothedReport> {
    setup.validate()?;
    if deltas.is_empty() || deltas.iter().any(|&d| !(d > 0.0)) {
        return Err(Error::InvalidParameter("window widths must be > 0".into()));
    }
    let steps = par::try_map_slice(seq.values(), |&l| setup.step_function(l))?;
    let values = deltas
        .iter()
        .map(|&d| {
            steps
                .iter()
                .map(|s| Ok(s.integral(energy, energy + d)? / d))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let finest = deltas.iter().copied().fold(f64::INFINITY, f64::min);
    let window = SpectralWindow::interval(energy, energy + finest)?;
    let reference = bs_rhs(&setup.coupling_problem(reference_length)?, &window, integrator)?.value / finest;
    Ok(SmoothedReport {
        energy,
        deltas: deltas.to_vec(),
        lengths: seq.values().to_vec(),
        values,
        reference,
    })
}

/// Options for [`cesaro_experiment`].
#[derive(Debug, Clone)]
pub struct CesaroOptions {
    pub delta: f64,
    pub tol: f64,
    pub reference_length: f64,
    pub integrator: CouplingIntegrator,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CesaroReport {
    pub energies: Vec<f64>,
    pub lengths: Vec<f64>,
    /// `averages[K-1][i] = (1/K) Σ_{k≤K} ξ_{L_k}(E_i)`.
    pub averages: Vec<Vec<f64>>,
    pub reference: Vec<f64>,
    pub tol: f64,
    pub bounded_fraction: f64,
}

impl CesaroReport {
    pub fn final_averages(&self) -> &[f64] {
        self.averages.last().expect("at least one length")
    }

    pub fn to_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(&["E", "K", "cesaro_avg", "reference"]);
        for (i, e) in self.energies.iter().enumerate() {
            for (k, row) in self.averages.iter().enumerate() {
                t.push(csv_row![*e, k + 1, row[i], self.reference[i]]);
            }
        }
        t
    }
}

pub fn cesaro_experiment(
    energies: &[f64],
    seq: &LengthSequence,
    setup: &BoxSetup,
    opts: &CesaroOptions,
) -> Result<CesaroReport> {
    setup.validate()?;
    seq.check_against(&setup.perturbation)?;
    if seq.len() < 10 {
        return Err(Error::InvalidParameter(format!(
            "Cesàro runs need at least 10 lengths, got {}",
            seq.len()
        )));
    }
    if !(opts.delta > 0.0) {
        return Err(Error::InvalidParameter("window width must be > 0".into()));
    }
    let per_length = par::try_map_slice(seq.values(), |&l| setup.ssf(l, energies))?;
    let mut sums = vec![0i64; energies.len()];
    let mut averages = Vec::with_capacity(seq.len());
    for (k, row) in per_length.iter().enumerate() {
        sums.iter_mut().zip(row).for_each(|(s, v)| *s += v);
        averages.push(sums.iter().map(|&s| s as f64 / (k + 1) as f64).collect::<Vec<f64>>());
    }
    let windows = energies
        .iter()
        .map(|&e| SpectralWindow::interval(e, e + opts.delta))
        .collect::<Result<Vec<_>>>()?;
    let reference: Vec<f64> = bs_rhs_many(
        &setup.coupling_problem(opts.reference_length)?,
        &windows,
        &opts.integrator,
    )?
    .into_iter()
    .map(|v| v / opts.delta)
    .collect();
    let last = averages.last().expect("at least ten lengths");
    let bounded = last
        .iter()
        .zip(&reference)
        .filter(|(a, r)| **a <= **r + opts.tol)
        .count();
    Ok(CesaroReport {
        energies: energies.to_vec(),
        lengths: seq.values().to_vec(),
        bounded_fraction: bounded as f64 / energies.len().max(1) as f64,
        averages,
        reference,
        tol: opts.tol,
    })
}

/// Options for [`kirsch_scan`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KirschOptions {
    pub l_min: f64,
    pub l_max: f64,
    pub l_step: f64,
    pub spacing: f64,
    /// Targeted levels lie in `(E − eps_tune, E]`.
    pub eps_tune: f64,
    /// Tuned levels are placed at `E − eps_tune·f` for each fraction `f` in `[0, 1)`.
    pub tune_fractions: Vec<f64>,
    pub min_multiplicity: usize,
    /// Upper end of the exhaustive multiplicity enumeration.
    pub s_max: u64,
}

impl Default for KirschOptions {
    fn default() -> Self {
        Self {
            l_min: 4.0,
            l_max: 40.0,
            l_step: 0.25,
            spacing: 0.25,
            eps_tune: 0.02,
            tune_fractions: vec![0.0, 0.25, 0.5, 0.75],
            min_multiplicity: 3,
            s_max: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KirschRow {
    pub side_length: f64,
    pub xi: i64,
    pub tuned: bool,
    /// Analytic level `π²s/(2L²)` targeted at this length.
    pub target_level: Option<f64>,
    pub multiplicity: Option<usize>,
    pub lattice_index: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KirschScan {
    pub energy: f64,
    pub rows: Vec<KirschRow>,
}

impl KirschScan {
    pub fn uniform(&self) -> impl Iterator<Item = &KirschRow> {
        self.rows.iter().filter(|r| !r.tuned)
    }

    pub fn tuned(&self) -> impl Iterator<Item = &KirschRow> {
        self.rows.iter().filter(|r| r.tuned)
    }

    /// Lower median of `ξ_L(E)` over the uniform scan.
    pub fn uniform_median(&self) -> i64 {
        let mut v: Vec<i64> = self.uniform().map(|r| r.xi).collect();
        v.sort_unstable();
        if v.is_empty() {
            0
        } else {
            v[(v.len() - 1) / 2]
        }
    }

    pub fn uniform_max(&self) -> i64 {
        self.uniform().map(|r| r.xi).max().unwrap_or(0)
    }

    /// Tuned row with the largest `ξ_L(E)` (first one on ties).
    pub fn tuned_argmax(&self) -> Option<&KirschRow> {
        self.tuned().fold(None, |best: Option<&KirschRow>, r| match best {
            Some(b) if b.xi >= r.xi => Some(b),
            _ => Some(r),
        })
    }

    pub fn to_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(&["L", "xi_L", "tuned_flag", "target_level", "multiplicity"]);
        for r in &self.rows {
            let level = r.target_level.map_or(String::new(), |v| v.to_string());
            let mult = r.multiplicity.map_or(String::new(), |v| v.to_string());
            t.push(csv_row![r.side_length, r.xi, usize::from(r.tuned), level, mult]);
        }
        t
    }
}

/// Lengths `L` with a free level `π²s/(2L²)` of multiplicity `≥ min_multiplicity`
/// placed in `(E − eps_tune, E]`, as `(L, s, level, multiplicity)`, sorted by `L`.
pub fn tuned_lengths(energy: f64, opts: &KirschOptions) -> Vec<(f64, u64, f64, usize)> {
    let mut out = Vec::new();
    for s in 1..=opts.s_max {
        let mult = lattice_multiplicity(2, s);
        if mult < opts.min_multiplicity {
            continue;
        }
        for &frac in &opts.tune_fractions {
            let level = energy - opts.eps_tune * frac;
            let l = PI * (s as f64 / (2.0 * level)).sqrt();
            if l >= opts.l_min && l <= opts.l_max {
                out.push((l, s, PI * PI * s as f64 / (2.0 * l * l), mult));
            }
        }
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// `ξ_L(E)` for `d = 2`, `V₀ = 0` over a uniform scan plus degeneracy-tuned lengths.
pub fn kirsch_scan(energy: f64, perturbation: &PotentialSpec, opts: &KirschOptions) -> Result<KirschScan> {
    if !(energy > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "Kirsch scans need E > 0, got {energy}"
        )));
    }
    if perturbation.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: perturbation.dim(),
        });
    }
    perturbation.validate_perturbation()?;
    if !(opts.l_min > 0.0 && opts.l_max >= opts.l_min && opts.l_step > 0.0) {
        return Err(Error::InvalidParameter("invalid length range".into()));
    }
    let n = ((opts.l_max - opts.l_min) / opts.l_step + 1e-9).floor() as usize + 1;
    let mut rows: Vec<KirschRow> = (0..n)
        .map(|j| KirschRow {
            side_length: opts.l_min + opts.l_step * j as f64,
            xi: 0,
            tuned: false,
            target_level: None,
            multiplicity: None,
            lattice_index: None,
        })
        .collect();
    rows.extend(
        tuned_lengths(energy, opts)
            .into_iter()
            .map(|(l, s, level, mult)| KirschRow {
                side_length: l,
                xi: 0,
                tuned: true,
                target_level: Some(level),
                multiplicity: Some(mult),
                lattice_index: Some(s),
            }),
    );
    let background = PotentialSpec::zero(2);
    let values = par::try_map_slice(&rows, |r| {
        let g = BoxGrid::new(2, r.side_length, opts.spacing)?;
        Ok::<_, Error>(ssf_finite_volume(&g, &background, perturbation, &[energy])?.values[0])
    })?;
    rows.iter_mut().zip(values).for_each(|(r, v)| r.xi = v);
    Ok(KirschScan { energy, rows })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaledReport {
    pub exponent_k: f64,
    pub energies: Vec<f64>,
    pub lengths: Vec<f64>,
    /// `xi_bar[j][i]` at `lengths[j]`, `energies[i]`.
    pub xi_bar: Vec<Vec<i64>>,
}

impl ScaledReport {
    /// Number of grid energies with nonzero `ξ̄_L`, per length.
    pub fn support_sizes(&self) -> Vec<usize> {
        self.xi_bar
            .iter()
            .map(|row| row.iter().filter(|&&v| v != 0).count())
            .collect()
    }

    pub fn support_nonincreasing(&self) -> bool {
        self.support_sizes().windows(2).all(|w| w[1] <= w[0])
    }

    /// Smallest length from which `ξ̄_L ≡ 0` on the grid for every later length.
    pub fn collapse_length(&self) -> Option<f64> {
        let sizes = self.support_sizes();
        let first_zero_tail = sizes.iter().rposition(|&s| s != 0).map_or(0, |i| i + 1);
        self.lengths.get(first_zero_tail).copied()
    }

    pub fn to_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(&["L", "E", "xi_bar"]);
        for (l, row) in self.lengths.iter().zip(&self.xi_bar) {
            for (e, v) in self.energies.iter().zip(row) {
                t.push(csv_row![*l, *e, *v]);
            }
        }
        t
    }
}

/// `ξ̄_L(E)` for the pair `(H₀ + L^{−k}V, H₀)` along the sequence.
pub fn scaled_perturbation_experiment(
    energies: &[f64],
    seq: &LengthSequence,
    setup: &BoxSetup,
    exponent_k: f64,
) -> Result<ScaledReport> {
    setup.validate()?;
    if !(exponent_k > (setup.dim + 1) as f64) {
        return Err(Error::InvalidParameter(format!(
            "scaling exponent must exceed d + 1 = {}, got {exponent_k}",
            setup.dim + 1
        )));
    }
    if setup.perturbation.kind == PotentialKind::Zero {
        log::info!("scaled experiment with V = 0 is identically zero");
    }
    let xi_bar = par::try_map_slice(seq.values(), |&l| {
        let scaled = ScaledPerturbation::new(setup.perturbation.clone(), exponent_k, l)?;
        Ok::<_, Error>(ssf_finite_volume(&setup.grid(l)?, &setup.background, &scaled, energies)?.values)
    })?;
    Ok(ScaledReport {
        exponent_k,
        energies: energies.to_vec(),
        lengths: seq.values().to_vec(),
        xi_bar,
    })
}
