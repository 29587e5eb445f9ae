//! Background potentials `V₀` and compactly supported perturbations `V`.
//!
//! All potentials are bounded. Compact kinds have exact support geometry:
//! [`PotentialKind::SquareBump`] is supported on the closed sup-norm box of
//! half-width `support_radius`, [`PotentialKind::SmoothBump`] on the open
//! Euclidean ball of that radius. Evaluation outside returns exactly `0.0`.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialKind {
    Zero,
    SquareBump,
    SmoothBump,
    /// `amplitude · Σᵢ cos(2π (xᵢ − cᵢ) / period)`.
    Cosine,
    /// Square wells of half-width `period / 4` (sup norm) on the lattice `c + period·ℤᵈ`.
    WellLattice,
}

impl PotentialKind {
    pub fn is_compact(self) -> bool {
        matches!(self, Self::Zero | Self::SquareBump | Self::SmoothBump)
    }
}

/// Parametric description of a potential; immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub kind: PotentialKind,
    #[serde(default)]
    pub amplitude: f64,
    #[serde(default = "infinite")]
    pub support_radius: f64,
    pub center: Vec<f64>,
    #[serde(default = "unit")]
    pub period: f64,
}

fn infinite() -> f64 {
    f64::INFINITY
}

fn unit() -> f64 {
    1.0
}

/// Axis-aligned bounding box of the set where a potential is nonzero.
#[derive(Debug, Clone, PartialEq)]
pub enum SupportBox {
    Empty,
    Bounded { lo: Vec<f64>, hi: Vec<f64> },
    Unbounded,
}

impl SupportBox {
    pub fn is_empty(&self) -> bool {
        matches!(self, SupportBox::Empty)
    }

    /// Largest distance from the origin to the box in the sup norm, if bounded.
    pub fn sup_extent(&self) -> Option<f64> {
        match self {
            SupportBox::Empty => Some(0.0),
            SupportBox::Bounded { lo, hi } => Some(lo.iter().chain(hi.iter()).fold(0.0_f64, |acc, v| acc.max(v.abs()))),
            SupportBox::Unbounded => None,
        }
    }

    /// Dilates every face outward by `reach`.
    pub fn dilate(&self, reach: f64) -> SupportBox {
        match self {
            SupportBox::Bounded { lo, hi } => SupportBox::Bounded {
                lo: lo.iter().map(|v| v - reach).collect(),
                hi: hi.iter().map(|v| v + reach).collect(),
            },
            other => other.clone(),
        }
    }

    /// Intersection with the centred cube `(-L/2, L/2)ᵈ`.
    pub fn clip_to_cube(&self, side: f64) -> SupportBox {
        match self {
            SupportBox::Bounded { lo, hi } => {
                let half = side / 2.0;
                let lo: Vec<f64> = lo.iter().map(|v| v.max(-half)).collect();
                let hi: Vec<f64> = hi.iter().map(|v| v.min(half)).collect();
                if lo.iter().zip(&hi).any(|(a, b)| a >= b) {
                    SupportBox::Empty
                } else {
                    SupportBox::Bounded { lo, hi }
                }
            }
            // dimension is unknown here; callers only clip bounded boxes
            SupportBox::Unbounded => SupportBox::Unbounded,
            SupportBox::Empty => SupportBox::Empty,
        }
    }

    pub fn volume(&self) -> f64 {
        match self {
            SupportBox::Empty => 0.0,
            SupportBox::Bounded { lo, hi } => lo.iter().zip(hi).map(|(a, b)| b - a).product(),
            SupportBox::Unbounded => f64::INFINITY,
        }
    }
}

/// Anything that can be sampled on a grid or along a path.
pub trait Potential: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn support(&self) -> SupportBox;
    fn label(&self) -> String;
    /// A lower bound for the potential over all of space.
    fn infimum(&self) -> f64;
}

impl PotentialSpec {
    pub fn zero(dim: usize) -> Self {
        Self {
            kind: PotentialKind::Zero,
            amplitude: 0.0,
            support_radius: 0.0,
            center: vec![0.0; dim],
            period: 1.0,
        }
    }

    pub fn square_bump(amplitude: f64, radius: f64, center: Vec<f64>) -> Self {
        Self {
            kind: PotentialKind::SquareBump,
            amplitude,
            support_radius: radius,
            center,
            period: 1.0,
        }
    }

    pub fn smooth_bump(amplitude: f64, radius: f64, center: Vec<f64>) -> Self {
        Self {
            kind: PotentialKind::SmoothBump,
            amplitude,
            support_radius: radius,
            center,
            period: 1.0,
        }
    }

    pub fn cosine(amplitude: f64, period: f64, center: Vec<f64>) -> Self {
        Self {
            kind: PotentialKind::Cosine,
            amplitude,
            support_radius: f64::INFINITY,
            center,
            period,
        }
    }

    pub fn well_lattice(amplitude: f64, period: f64, center: Vec<f64>) -> Self {
        Self {
            kind: PotentialKind::WellLattice,
            amplitude,
            support_radius: f64::INFINITY,
            center,
            period,
        }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// Checks the parameters that make the spec well formed in any role.
    pub fn validate(&self) -> Result<()> {
        if self.center.is_empty() {
            return Err(Error::InvalidParameter(
                "potential center must have at least one coordinate".into(),
            ));
        }
        if self.center.iter().any(|c| !c.is_finite()) || !self.amplitude.is_finite() {
            return Err(Error::InvalidParameter(
                "potential center and amplitude must be finite".into(),
            ));
        }
        match self.kind {
            PotentialKind::SquareBump | PotentialKind::SmoothBump => {
                if !(self.support_radius.is_finite() && self.support_radius >= 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "{:?} needs a finite support_radius >= 0, got {}",
                        self.kind, self.support_radius
                    )));
                }
            }
            PotentialKind::Cosine | PotentialKind::WellLattice => {
                if !(self.period.is_finite() && self.period > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "period must be > 0, got {}",
                        self.period
                    )));
                }
            }
            PotentialKind::Zero => {}
        }
        Ok(())
    }

    /// Checks the extra conditions on a perturbation: `V ≥ 0` with compact support.
    pub fn validate_perturbation(&self) -> Result<()> {
        self.validate()?;
        if !self.kind.is_compact() {
            return Err(Error::InvalidParameter(format!(
                "{:?} has unbounded support and cannot be used as a perturbation",
                self.kind
            )));
        }
        if self.amplitude < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "perturbation amplitude must be >= 0, got {}",
                self.amplitude
            )));
        }
        Ok(())
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.center.len());
        let a = self.amplitude;
        let r = self.support_radius;
        match self.kind {
            PotentialKind::Zero => 0.0,
            PotentialKind::SquareBump => {
                let inside = x.iter().zip(&self.center).all(|(xi, ci)| (xi - ci).abs() <= r);
                if inside {
                    a
                } else {
                    0.0
                }
            }
            PotentialKind::SmoothBump => {
                if r <= 0.0 {
                    return 0.0;
                }
                let q: f64 = x
                    .iter()
                    .zip(&self.center)
                    .map(|(xi, ci)| (xi - ci) * (xi - ci))
                    .sum::<f64>()
                    / (r * r);
                if q < 1.0 {
                    a * (1.0 - 1.0 / (1.0 - q)).exp()
                } else {
                    0.0
                }
            }
            PotentialKind::Cosine => {
                let k = std::f64::consts::TAU / self.period;
                a * x
                    .iter()
                    .zip(&self.center)
                    .map(|(xi, ci)| (k * (xi - ci)).cos())
                    .sum::<f64>()
            }
            PotentialKind::WellLattice => {
                let p = self.period;
                let inside = x.iter().zip(&self.center).all(|(xi, ci)| {
                    let u = (xi - ci) / p;
                    (u - u.round()).abs() * p <= p / 4.0
                });
                if inside {
                    a
                } else {
                    0.0
                }
            }
        }
    }

    pub fn support_box(&self) -> SupportBox {
        if self.kind == PotentialKind::Zero || self.amplitude == 0.0 {
            return SupportBox::Empty;
        }
        match self.kind {
            PotentialKind::SquareBump | PotentialKind::SmoothBump => {
                let r = self.support_radius;
                if self.kind == PotentialKind::SmoothBump && r <= 0.0 {
                    return SupportBox::Empty;
                }
                SupportBox::Bounded {
                    lo: self.center.iter().map(|c| c - r).collect(),
                    hi: self.center.iter().map(|c| c + r).collect(),
                }
            }
            _ => SupportBox::Unbounded,
        }
    }
}

impl Potential for PotentialSpec {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.evaluate(x)
    }

    fn support(&self) -> SupportBox {
        self.support_box()
    }

    fn label(&self) -> String {
        format!(
            "{:?}(a={}, r={}, c={:?})",
            self.kind, self.amplitude, self.support_radius, self.center
        )
    }

    fn infimum(&self) -> f64 {
        match self.kind {
            PotentialKind::Zero => 0.0,
            PotentialKind::Cosine => -self.amplitude.abs() * self.dim() as f64,
            _ => self.amplitude.min(0.0),
        }
    }
}

/// `L^{-k} · V`, the perturbation that shrinks as the box grows.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledPerturbation {
    pub base: PotentialSpec,
    pub exponent_k: f64,
    pub length: f64,
    factor: f64,
}

impl ScaledPerturbation {
    /// Requires `k > d + 1` and `L > 0`.
    pub fn new(base: PotentialSpec, exponent_k: f64, length: f64) -> Result<Self> {
        base.validate_perturbation()?;
        let d = base.dim() as f64;
        if !(exponent_k > d + 1.0) {
            return Err(Error::InvalidParameter(format!(
                "exponent k = {exponent_k} must exceed d + 1 = {}",
                d + 1.0
            )));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidParameter(format!("length must be > 0, got {length}")));
        }
        Ok(Self {
            base,
            exponent_k,
            length,
            factor: length.powf(-exponent_k),
        })
    }

    pub fn factor(&self) -> f64 {
        self.factor
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.factor * self.base.evaluate(x)
    }
}

impl Potential for ScaledPerturbation {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.evaluate(x)
    }

    fn support(&self) -> SupportBox {
        self.base.support_box()
    }

    fn label(&self) -> String {
        format!("L^-{} * {}", self.exponent_k, self.base.label())
    }

    fn infimum(&self) -> f64 {
        self.factor * self.base.infimum()
    }
}
