//! Run configuration, read from TOML.

use serde::{Deserialize, Serialize};
use ssf_core::birman_solomyak::TestFunction;
use ssf_core::limits::{BoxSetup, SequenceRule};
use ssf_core::potentials::{PotentialKind, PotentialSpec};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub domain: Domain,
    #[serde(default)]
    pub background: Option<PotentialSection>,
    #[serde(default)]
    pub perturbation: Option<PotentialSection>,
    #[serde(default)]
    pub experiment: Experiment,
    #[serde(default)]
    pub mc: Mc,
    #[serde(default)]
    pub tolerances: Tolerances,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Domain {
    pub dim: usize,
    #[serde(default = "default_side")]
    pub side_length: f64,
    #[serde(default = "default_spacing")]
    pub spacing: f64,
}

fn default_side() -> f64 {
    8.0
}

fn default_spacing() -> f64 {
    1.0 / 32.0
}

/// A [`PotentialSpec`] whose center defaults to the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSection {
    pub kind: PotentialKind,
    #[serde(default)]
    pub amplitude: f64,
    #[serde(default)]
    pub support_radius: Option<f64>,
    #[serde(default)]
    pub center: Option<Vec<f64>>,
    #[serde(default)]
    pub period: Option<f64>,
}

impl PotentialSection {
    fn to_spec(&self, dim: usize) -> PotentialSpec {
        PotentialSpec {
            kind: self.kind,
            amplitude: self.amplitude,
            support_radius: self.support_radius.unwrap_or(f64::INFINITY),
            center: self.center.clone().unwrap_or_else(|| vec![0.0; dim]),
            period: self.period.unwrap_or(1.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightKind {
    Hat,
    Indicator,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    FiniteVolume,
    InfiniteVolume,
}

/// Experiment parameters; each subcommand reads the keys it needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Experiment {
    pub energies: Option<Vec<f64>>,
    pub e_min: f64,
    pub e_max: f64,
    pub n_energies: usize,
    pub lengths: Option<Vec<f64>>,
    pub sequence_rule: Option<SequenceRule>,
    pub sequence_start: f64,
    pub sequence_step: f64,
    pub sequence_count: usize,
    pub horizons: Vec<f64>,
    pub estimator: Estimator,
    pub windows: Vec<[f64; 2]>,
    pub weight: WeightKind,
    pub weight_lo: f64,
    pub weight_hi: f64,
    pub reference_length: Option<f64>,
    pub quadrature_nodes: usize,
    pub delta: f64,
    pub energy: f64,
    pub l_min: f64,
    pub l_max: f64,
    pub l_step: f64,
    pub eps_tune: f64,
    pub tune_fractions: Vec<f64>,
    pub min_multiplicity: usize,
    pub exponent_k: f64,
}

impl Default for Experiment {
    fn default() -> Self {
        Self {
            energies: None,
            e_min: 0.0,
            e_max: 4.0,
            n_energies: 200,
            lengths: None,
            sequence_rule: None,
            sequence_start: 8.0,
            sequence_step: 1.0,
            sequence_count: 20,
            horizons: vec![1.0],
            estimator: Estimator::FiniteVolume,
            windows: vec![[0.0, 2.0]],
            weight: WeightKind::Hat,
            weight_lo: 0.0,
            weight_hi: 2.0,
            reference_length: None,
            quadrature_nodes: 64,
            delta: 0.25,
            energy: 1.0,
            l_min: 4.0,
            l_max: 40.0,
            l_step: 0.25,
            eps_tune: 0.02,
            tune_fractions: vec![0.0, 0.25, 0.5, 0.75],
            min_multiplicity: 3,
            exponent_k: 3.0,
        }
    }
}

impl Experiment {
    /// Explicit energies, or `n_energies` points evenly spaced on `[e_min, e_max]`.
    pub fn energy_grid(&self) -> Vec<f64> {
        if let Some(e) = &self.energies {
            return e.clone();
        }
        let n = self.n_energies;
        if n == 1 {
            return vec![self.e_min];
        }
        (0..n)
            .map(|i| self.e_min + (self.e_max - self.e_min) * i as f64 / (n - 1) as f64)
            .collect()
    }

    pub fn weight_function(&self) -> TestFunction {
        match self.weight {
            WeightKind::Hat => TestFunction::Hat {
                lo: self.weight_lo,
                hi: self.weight_hi,
            },
            WeightKind::Indicator => TestFunction::Indicator {
                lo: self.weight_lo,
                hi: self.weight_hi,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Mc {
    pub n_paths: usize,
    pub n_steps: usize,
    pub master_seed: u64,
    pub reach: f64,
}

impl Default for Mc {
    fn default() -> Self {
        Self {
            n_paths: 100_000,
            n_steps: 256,
            master_seed: 0,
            reach: ssf_core::pathint::DEFAULT_REACH,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub bs_abs: f64,
    pub vague_final_rel: f64,
    pub cesaro_tol: f64,
    pub cesaro_fraction: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            bs_abs: 1e-6,
            vague_final_rel: 0.02,
            cesaro_tol: 0.2,
            cesaro_fraction: 0.95,
        }
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: Config = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn background(&self) -> PotentialSpec {
        self.background
            .as_ref()
            .map_or_else(|| PotentialSpec::zero(self.domain.dim), |p| p.to_spec(self.domain.dim))
    }

    pub fn perturbation(&self) -> PotentialSpec {
        self.perturbation
            .as_ref()
            .map_or_else(|| PotentialSpec::zero(self.domain.dim), |p| p.to_spec(self.domain.dim))
    }

    pub fn setup(&self) -> BoxSetup {
        BoxSetup {
            dim: self.domain.dim,
            spacing: self.domain.spacing,
            background: self.background(),
            perturbation: self.perturbation(),
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        let d = &self.domain;
        if !(1..=3).contains(&d.dim) {
            return bad(format!("domain.dim must be 1, 2 or 3, got {}", d.dim));
        }
        if !(d.side_length > 0.0 && d.side_length.is_finite()) {
            return bad(format!("domain.side_length must be > 0, got {}", d.side_length));
        }
        if !(d.spacing > 0.0 && d.spacing < d.side_length) {
            return bad(format!(
                "domain.spacing must lie in (0, side_length), got {}",
                d.spacing
            ));
        }
        self.background()
            .validate()
            .map_err(|e| CliError::Config(format!("background: {e}")))?;
        self.perturbation()
            .validate_perturbation()
            .map_err(|e| CliError::Config(format!("perturbation: {e}")))?;
        let x = &self.experiment;
        if x.energies.is_none() && (x.n_energies == 0 || !(x.e_max >= x.e_min)) {
            return bad("experiment energy grid is empty".into());
        }
        if x.horizons.iter().any(|t| !(*t > 0.0)) {
            return bad("experiment.horizons must be > 0".into());
        }
        if x.windows.iter().any(|w| !(w[0] < w[1])) {
            return bad("experiment.windows need lo < hi".into());
        }
        if !(x.weight_lo < x.weight_hi) {
            return bad("experiment.weight_lo must be < weight_hi".into());
        }
        if x.quadrature_nodes == 0 {
            return bad("experiment.quadrature_nodes must be > 0".into());
        }
        if !(x.delta > 0.0) {
            return bad("experiment.delta must be > 0".into());
        }
        if let Some(l) = &x.lengths {
            if l.is_empty() || l.windows(2).any(|w| w[0] >= w[1]) || l.iter().any(|v| !(*v > 0.0)) {
                return bad("experiment.lengths must be positive and strictly increasing".into());
            }
        }
        if self.mc.n_paths < 2 || self.mc.n_steps < 2 {
            return bad("mc.n_paths and mc.n_steps must be at least 2".into());
        }
        if !(self.mc.reach > 0.0) {
            return bad("mc.reach must be > 0".into());
        }
        Ok(())
    }
}
