//! Regression-based directional dependence `ρ = 12·∫ r(z)² dz − 3`, where
//! `r(z) = 1 − ∫₀¹ C(x | z) dx` is the copula regression of the dependent
//! coordinate on the conditioning coordinate `z`.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

use super::{Conditioning, Direction};
use crate::error::{Error, Result};
use crate::numeric::{UnitQuadrature, DEFAULT_NODES};

/// Smallest node count accepted per axis.
pub const MIN_NODES: usize = 64;

/// Nested quadrature settings. Convergence is judged by comparing the
/// estimate at `nodes` against the estimate at `nodes / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub nodes: usize,
    pub tolerance: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            nodes: DEFAULT_NODES,
            tolerance: 1e-6,
        }
    }
}

impl QuadratureConfig {
    pub fn new(nodes: usize, tolerance: f64) -> Result<Self> {
        if nodes < MIN_NODES {
            return Err(Error::Domain(format!(
                "quadrature needs at least {MIN_NODES} nodes, got {nodes}"
            )));
        }
        if !(tolerance > 0.0) {
            return Err(Error::Domain(format!("tolerance {tolerance} must be positive")));
        }
        Ok(QuadratureConfig { nodes, tolerance })
    }
}

fn rho_at(cond: &impl Fn(f64, f64) -> f64, nodes: usize) -> f64 {
    let q = UnitQuadrature::graded(nodes);
    let second_moment = q.integrate(|z| {
        let r = 1.0 - q.integrate(|x| cond(x, z));
        r * r
    });
    12.0 * second_moment - 3.0
}

/// Directional dependence from a conditional CDF `cond(x, z) = P(X ≤ x | Z = z)`.
///
/// Returns `Error::Quadrature` when halving the node count moves the
/// estimate by more than the configured tolerance.
pub fn directional_rho_numeric(
    cond: impl Fn(f64, f64) -> f64,
    quad: &QuadratureConfig,
) -> Result<f64> {
    if quad.nodes < MIN_NODES {
        return Err(Error::Domain(format!(
            "quadrature needs at least {MIN_NODES} nodes, got {}",
            quad.nodes
        )));
    }
    let coarse_nodes = quad.nodes / 2;
    let fine = rho_at(&cond, quad.nodes);
    let coarse = rho_at(&cond, coarse_nodes);
    if !fine.is_finite() || (fine - coarse).abs() > quad.tolerance {
        return Err(Error::Quadrature {
            nodes: quad.nodes,
            coarse_nodes,
            fine,
            coarse,
        });
    }
    Ok(fine)
}

fn std_normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + erf(x / std::f64::consts::SQRT_2))
}

/// Kernel estimate of a conditional copula from paired observations in
/// `(0, 1)²`: Gaussian weights in the conditioning coordinate and a
/// Gaussian-smoothed indicator in the other, both at Silverman's bandwidth.
#[derive(Debug, Clone)]
pub struct EmpiricalConditional {
    /// Coordinate whose law is estimated.
    x: Vec<f64>,
    /// Conditioning coordinate.
    z: Vec<f64>,
    h_x: f64,
    h_z: f64,
}

fn silverman(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (1.06 * var.sqrt() * n.powf(-0.2)).max(1e-3)
}

impl EmpiricalConditional {
    /// `OnV` estimates `C_{U|V}`; `OnU` estimates `C_{V|U}`.
    pub fn new(pairs: &[(f64, f64)], conditioning: Conditioning) -> Result<Self> {
        if pairs.len() < 2 {
            return Err(Error::DegenerateInput(
                "empirical conditional needs at least two pairs".into(),
            ));
        }
        let (x, z): (Vec<f64>, Vec<f64>) = match conditioning {
            Conditioning::OnV => pairs.iter().copied().unzip(),
            Conditioning::OnU => pairs.iter().map(|&(u, v)| (v, u)).unzip(),
        };
        let (h_x, h_z) = (silverman(&x), silverman(&z));
        Ok(EmpiricalConditional { x, z, h_x, h_z })
    }

    /// Estimate of `P(X ≤ x | Z = z)`.
    pub fn cdf(&self, x: f64, z: f64) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for (&xi, &zi) in self.x.iter().zip(&self.z) {
            let d = (z - zi) / self.h_z;
            let w = (-0.5 * d * d).exp();
            num += w * std_normal_cdf((x - xi) / self.h_x);
            den += w;
        }
        if den > 0.0 {
            num / den
        } else {
            x
        }
    }
}

/// Directional dependence of paired observations in the given direction.
pub fn directional_rho_empirical(
    pairs: &[(f64, f64)],
    direction: Direction,
    quad: &QuadratureConfig,
) -> Result<f64> {
    let conditioning = match direction {
        Direction::VToU => Conditioning::OnV,
        Direction::UToV => Conditioning::OnU,
    };
    let est = EmpiricalConditional::new(pairs, conditioning)?;
    directional_rho_numeric(|x, z| est.cdf(x, z), quad)
}
