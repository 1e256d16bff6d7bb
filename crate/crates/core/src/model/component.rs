//! Gaussian clusters with a per-feature Normal–Inverse-Gamma base measure.
//!
//! Features are independent given the cluster. For one feature with prior
//! `μ | σ² ~ N(μ₀, σ²/κ₀)`, `σ² ~ IG(a₀, b₀)` and `n` members with sum `s`
//! and sum of squares `q`:
//!
//! ```text
//! κₙ = κ₀ + n        μₙ = (κ₀μ₀ + s) / κₙ        aₙ = a₀ + n/2
//! bₙ = b₀ + (q − s²/n)/2 + κ₀ n (s/n − μ₀)² / (2κₙ)
//! ```
//!
//! The posterior predictive is Student-t with `2aₙ` degrees of freedom,
//! location `μₙ` and squared scale `bₙ(κₙ + 1)/(aₙκₙ)`.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

const LN_PI: f64 = 1.144_729_885_849_400_2;
const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Base-measure hyperparameters for one view.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NigPrior {
    pub mu0: Vec<f64>,
    pub kappa0: f64,
    pub a0: f64,
    pub b0: Vec<f64>,
}

impl NigPrior {
    pub fn new(mu0: Vec<f64>, kappa0: f64, a0: f64, b0: Vec<f64>) -> Result<Self> {
        if mu0.len() != b0.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} prior means, {} prior scales",
                mu0.len(),
                b0.len()
            )));
        }
        if !(kappa0 > 0.0) || !(a0 > 0.0) || b0.iter().any(|b| !(*b > 0.0)) {
            return Err(Error::InvalidConfig(
                "kappa0, a0 and every b0 must be positive".into(),
            ));
        }
        if mu0.iter().any(|m| !m.is_finite()) {
            return Err(Error::InvalidConfig("prior means must be finite".into()));
        }
        Ok(NigPrior { mu0, kappa0, a0, b0 })
    }

    /// Empirical-Bayes defaults: per-feature mean and variance of `data`.
    /// Zero-variance features fall back to a unit scale.
    pub fn from_data(data: &Matrix, kappa0: f64, a0: f64) -> Result<Self> {
        let n = data.rows() as f64;
        let mut mu0 = Vec::with_capacity(data.cols());
        let mut b0 = Vec::with_capacity(data.cols());
        for c in 0..data.cols() {
            let col = data.column(c);
            let mean = col.iter().sum::<f64>() / n;
            let var = col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
            mu0.push(mean);
            b0.push(if var > 0.0 { var } else { 1.0 });
        }
        Self::new(mu0, kappa0, a0, b0)
    }

    pub fn dim(&self) -> usize {
        self.mu0.len()
    }
}

/// Sufficient statistics of one cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterStats {
    pub count: usize,
    pub sum: Vec<f64>,
    pub sum_sq: Vec<f64>,
}

impl ClusterStats {
    pub fn empty(dim: usize) -> Self {
        ClusterStats {
            count: 0,
            sum: vec![0.0; dim],
            sum_sq: vec![0.0; dim],
        }
    }

    pub fn from_rows<'a>(dim: usize, rows: impl IntoIterator<Item = &'a [f64]>) -> Self {
        let mut s = Self::empty(dim);
        for r in rows {
            s.insert(r);
        }
        s
    }

    pub fn insert(&mut self, x: &[f64]) {
        self.count += 1;
        for (d, &v) in x.iter().enumerate() {
            self.sum[d] += v;
            self.sum_sq[d] += v * v;
        }
    }

    pub fn remove(&mut self, x: &[f64]) {
        debug_assert!(self.count > 0);
        self.count -= 1;
        if self.count == 0 {
            self.sum.iter_mut().for_each(|v| *v = 0.0);
            self.sum_sq.iter_mut().for_each(|v| *v = 0.0);
            return;
        }
        for (d, &v) in x.iter().enumerate() {
            self.sum[d] -= v;
            self.sum_sq[d] -= v * v;
        }
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }
}

struct Posterior {
    kappa: f64,
    mu: f64,
    a: f64,
    b: f64,
}

fn posterior(prior: &NigPrior, d: usize, n: usize, sum: f64, sum_sq: f64) -> Posterior {
    let (k0, m0) = (prior.kappa0, prior.mu0[d]);
    let nf = n as f64;
    let kappa = k0 + nf;
    let mu = (k0 * m0 + sum) / kappa;
    let a = prior.a0 + 0.5 * nf;
    let b = if n == 0 {
        prior.b0[d]
    } else {
        let mean = sum / nf;
        let ss = (sum_sq - sum * mean).max(0.0);
        prior.b0[d] + 0.5 * ss + k0 * nf * (mean - m0).powi(2) / (2.0 * kappa)
    };
    Posterior { kappa, mu, a, b }
}

/// Log posterior-predictive density of `x` given the cluster's members.
pub fn log_predictive(x: &[f64], stats: &ClusterStats, prior: &NigPrior) -> f64 {
    let mut total = 0.0;
    let mut cached: Option<(f64, f64)> = None;
    for (d, &xd) in x.iter().enumerate() {
        let p = posterior(prior, d, stats.count, stats.sum[d], stats.sum_sq[d]);
        let nu = 2.0 * p.a;
        let scale2 = p.b * (p.kappa + 1.0) / (p.a * p.kappa);
        // The gamma-function term depends on the count only.
        let lg = match cached {
            Some((a, v)) if a == p.a => v,
            _ => {
                let v = ln_gamma(0.5 * (nu + 1.0)) - ln_gamma(0.5 * nu);
                cached = Some((p.a, v));
                v
            }
        };
        let z2 = (xd - p.mu).powi(2) / (nu * scale2);
        total += lg - 0.5 * (nu.ln() + LN_PI + scale2.ln()) - 0.5 * (nu + 1.0) * z2.ln_1p();
    }
    total
}

/// Log marginal likelihood of the cluster's members.
pub fn log_marginal(stats: &ClusterStats, prior: &NigPrior) -> f64 {
    if stats.count == 0 {
        return 0.0;
    }
    let nf = stats.count as f64;
    let mut total = 0.0;
    for d in 0..prior.dim() {
        let p = posterior(prior, d, stats.count, stats.sum[d], stats.sum_sq[d]);
        total += ln_gamma(p.a) - ln_gamma(prior.a0) + prior.a0 * prior.b0[d].ln()
            - p.a * p.b.ln()
            + 0.5 * (prior.kappa0.ln() - p.kappa.ln())
            - 0.5 * nf * LN_2PI;
    }
    total
}

/// Log marginal likelihood of the cluster's members together with `x`.
pub fn log_marginal_with(x: &[f64], stats: &ClusterStats, prior: &NigPrior) -> f64 {
    let mut s = stats.clone();
    s.insert(x);
    log_marginal(&s, prior)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::UnitQuadrature;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn prior1(mu0: f64, kappa0: f64, a0: f64, b0: f64) -> NigPrior {
        NigPrior::new(vec![mu0], kappa0, a0, vec![b0]).unwrap()
    }

    /// Marginal likelihood of 1-D data by integrating the precision `τ`
    /// numerically against its Gamma(a₀, b₀) prior, with the Gaussian mean
    /// integrated in closed form for each `τ`.
    fn marginal_by_quadrature(xs: &[f64], mu0: f64, kappa0: f64, a0: f64, b0: f64) -> f64 {
        let n = xs.len() as f64;
        let (ss, shrink) = if xs.is_empty() {
            (0.0, 0.0)
        } else {
            let mean = xs.iter().sum::<f64>() / n;
            (
                xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>(),
                kappa0 * n * (mean - mu0).powi(2) / (kappa0 + n),
            )
        };
        let ln_prior_norm = a0 * b0.ln() - ln_gamma(a0);
        let q = UnitQuadrature::graded(4096);
        // τ = λs / (1 − s) maps (0, 1) onto (0, ∞), centred near the bulk.
        let lambda = (a0 + 0.5 * n) / (b0 + 0.5 * (ss + shrink));
        q.integrate(|s| {
            let tau = lambda * s / (1.0 - s);
            let jac = lambda / (1.0 - s).powi(2);
            let ln_prior = ln_prior_norm + (a0 - 1.0) * tau.ln() - b0 * tau;
            let ln_lik = 0.5 * n * (tau / (2.0 * std::f64::consts::PI)).ln()
                + 0.5 * (kappa0 / (kappa0 + n)).ln()
                - 0.5 * tau * (ss + shrink);
            (ln_prior + ln_lik).exp() * jac
        })
    }

    #[test]
    fn empty_cluster_prior_predictive_matches_quadrature() {
        let prior = prior1(0.0, 1.0, 1.0, 1.0);
        let lp = log_predictive(&[0.0], &ClusterStats::empty(1), &prior);
        let oracle = marginal_by_quadrature(&[0.0], 0.0, 1.0, 1.0, 1.0).ln();
        assert!((lp - oracle).abs() < 1e-8, "{lp} vs {oracle}");
        // Student-t with 2 degrees of freedom and squared scale 2 at its mode.
        let t2 = ln_gamma(1.5) - ln_gamma(1.0) - 0.5 * (2.0f64 * std::f64::consts::PI * 2.0).ln();
        assert!((lp - t2).abs() < 1e-12);
    }

    #[test]
    fn predictive_matches_quadrature_on_random_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..10 {
            let mu0 = rng.random_range(-2.0..2.0);
            let kappa0 = rng.random_range(0.05..3.0);
            let a0 = rng.random_range(1.0..4.0);
            let b0 = rng.random_range(0.3..3.0);
            let n = rng.random_range(0..6);
            let xs: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
            let x = rng.random_range(-3.0..3.0);
            let prior = prior1(mu0, kappa0, a0, b0);
            let stats = ClusterStats::from_rows(1, xs.iter().map(std::slice::from_ref));
            let lp = log_predictive(&[x], &stats, &prior);
            let mut with = xs.clone();
            with.push(x);
            let oracle = (marginal_by_quadrature(&with, mu0, kappa0, a0, b0)
                / marginal_by_quadrature(&xs, mu0, kappa0, a0, b0))
            .ln();
            assert!((lp - oracle).abs() < 1e-8, "{lp} vs {oracle}");
            let lm = log_marginal(&stats, &prior);
            let lm_oracle = marginal_by_quadrature(&xs, mu0, kappa0, a0, b0).ln();
            assert!((lm - lm_oracle).abs() < 1e-8);
        }
    }

    #[test]
    fn adding_a_point_at_the_mean_raises_its_score() {
        let prior = prior1(0.0, 0.01, 2.0, 1.0);
        let rows = [[1.0], [1.4], [0.6]];
        let stats = ClusterStats::from_rows(1, rows.iter().map(|r| &r[..]));
        let x = [1.0];
        let before = log_predictive(&x, &stats, &prior);
        let mut with = stats.clone();
        with.insert(&x);
        assert!(log_predictive(&x, &with, &prior) > before);
    }

    #[test]
    fn predictive_is_ratio_of_marginals() {
        let prior = NigPrior::new(vec![0.5, -1.0], 0.3, 2.5, vec![1.2, 0.7]).unwrap();
        let rows = [[0.1, -0.4], [1.3, -2.0], [0.7, 0.2]];
        let stats = ClusterStats::from_rows(2, rows.iter().map(|r| &r[..]));
        let x = [0.4, -0.9];
        let lhs = log_predictive(&x, &stats, &prior);
        let rhs = log_marginal_with(&x, &stats, &prior) - log_marginal(&stats, &prior);
        assert!((lhs - rhs).abs() < 1e-10);
    }

    #[test]
    fn prior_validation() {
        assert!(NigPrior::new(vec![0.0], 0.0, 1.0, vec![1.0]).is_err());
        assert!(NigPrior::new(vec![0.0], 1.0, 1.0, vec![1.0, 2.0]).is_err());
        let m = Matrix::from_rows(&[vec![1.0, 5.0], vec![3.0, 5.0]]).unwrap();
        let p = NigPrior::from_data(&m, 0.01, 2.0).unwrap();
        assert_eq!(p.mu0, vec![2.0, 5.0]);
        assert_eq!(p.b0, vec![1.0, 1.0]);
    }

    proptest! {
        #[test]
        fn remove_then_insert_restores_stats(
            rows in prop::collection::vec(prop::collection::vec(-10.0f64..10.0, 3), 1..10),
            pick in 0usize..10,
        ) {
            let stats = ClusterStats::from_rows(3, rows.iter().map(|r| &r[..]));
            let x = &rows[pick % rows.len()];
            let mut s = stats.clone();
            s.remove(x);
            s.insert(x);
            prop_assert_eq!(s.count, stats.count);
            for d in 0..3 {
                prop_assert!((s.sum[d] - stats.sum[d]).abs() <= 1e-12 * (1.0 + stats.sum[d].abs()));
                prop_assert!((s.sum_sq[d] - stats.sum_sq[d]).abs() <= 1e-12 * (1.0 + stats.sum_sq[d]));
            }
        }
    }
}
