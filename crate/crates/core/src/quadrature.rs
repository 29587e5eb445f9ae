//! Fixed rules on `[0, 1]` for the coupling-constant integral and for
//! piecewise-smooth energy integrals.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureRule {
    GaussLegendre,
    Midpoint,
}

/// Nodes and weights on `[0, 1]`; weights are positive and sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingQuadrature {
    pub rule: QuadratureRule,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl CouplingQuadrature {
    pub fn new(rule: QuadratureRule, n_nodes: usize) -> Result<Self> {
        if n_nodes == 0 {
            return Err(Error::InvalidParameter("quadrature needs at least one node".into()));
        }
        let (nodes, weights) = match rule {
            QuadratureRule::GaussLegendre => {
                let (x, w) = gauss_legendre(n_nodes);
                (
                    x.iter().map(|t| 0.5 * (t + 1.0)).collect(),
                    w.iter().map(|w| 0.5 * w).collect(),
                )
            }
            QuadratureRule::Midpoint => {
                let h = 1.0 / n_nodes as f64;
                ((0..n_nodes).map(|i| (i as f64 + 0.5) * h).collect(), vec![h; n_nodes])
            }
        };
        Ok(Self { rule, nodes, weights })
    }

    pub fn gauss_legendre(n_nodes: usize) -> Result<Self> {
        Self::new(QuadratureRule::GaussLegendre, n_nodes)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped affinely onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let len = b - a;
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (a + len * x, len * w))
    }

    /// `∫_a^b f` with this rule.
    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, ascending nodes.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let half = n.div_ceil(2);
    for i in 0..half {
        // Tricomi initial guess for the i-th largest root
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        let weight = 2.0 / ((1.0 - z * z) * dp * dp);
        x[n - 1 - i] = z;
        x[i] = -z;
        w[n - 1 - i] = weight;
        w[i] = weight;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}
