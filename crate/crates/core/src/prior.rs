//! Data-driven prior on the directional dependence strength of a view pair.
//!
//! Each object contributes closed-form shape estimates from its matched
//! features. Their averages give the closed-form dependence as a multiple of
//! `ϑ²`, and a Gaussian on `ϑ` whose three-sigma range is the tightest
//! per-object admissibility bound turns that into a Gamma prior.

use serde::{Deserialize, Serialize};

use crate::copula::{admissibility_bound, rluf_shape_mle, EPS_U};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// How the Gamma rate on the dependence strength is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PriorMode {
    /// `4(2+ᾱ)²(1+2β̄) / (2ᾱ²β̄²(b/3)²)`.
    #[default]
    Paper,
    /// `(2+ᾱ)²(1+2β̄) / (6ᾱ²β̄²(b/3)²)`, the exact law of `ρ` under the
    /// Gaussian association prior. Always one twelfth of `Paper`.
    Derived,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaPrior {
    pub shape: f64,
    pub rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianPrior {
    pub mean: f64,
    pub sd: f64,
}

impl GaussianPrior {
    pub fn variance(&self) -> f64 {
        self.sd * self.sd
    }
}

/// Copula fit for an ordered view pair `(source, target)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CopulaPairFit {
    pub source: String,
    pub target: String,
    /// Per-object estimates from the source view; `NaN` for degenerate rows.
    pub per_object_alpha: Vec<f64>,
    pub per_object_beta: Vec<f64>,
    /// Objects with both estimates above one.
    pub retained: Vec<bool>,
    pub alpha_bar: f64,
    pub beta_bar: f64,
    pub b: f64,
    pub prior_mode: PriorMode,
    pub prior_shape: f64,
    pub prior_rate: f64,
}

/// Summary written to the run report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairFitSummary {
    pub source: String,
    pub target: String,
    pub alpha_bar: f64,
    pub beta_bar: f64,
    pub b: f64,
    pub prior_mode: PriorMode,
    pub prior_shape: f64,
    pub prior_rate: f64,
    pub objects: usize,
    pub excluded: usize,
}

impl CopulaPairFit {
    pub fn with_names(mut self, source: impl Into<String>, target: impl Into<String>) -> Self {
        self.source = source.into();
        self.target = target.into();
        self
    }

    /// Switches the prior mode and recomputes the rate.
    pub fn with_mode(mut self, mode: PriorMode) -> Self {
        let prior = prior_for_rho(&self, mode);
        self.prior_mode = mode;
        self.prior_shape = prior.shape;
        self.prior_rate = prior.rate;
        self
    }

    pub fn excluded(&self) -> usize {
        self.retained.iter().filter(|r| !**r).count()
    }

    pub fn prior(&self) -> GammaPrior {
        GammaPrior {
            shape: self.prior_shape,
            rate: self.prior_rate,
        }
    }

    pub fn summary(&self) -> PairFitSummary {
        PairFitSummary {
            source: self.source.clone(),
            target: self.target.clone(),
            alpha_bar: self.alpha_bar,
            beta_bar: self.beta_bar,
            b: self.b,
            prior_mode: self.prior_mode,
            prior_shape: self.prior_shape,
            prior_rate: self.prior_rate,
            objects: self.retained.len(),
            excluded: self.excluded(),
        }
    }
}

/// Column-wise rank transform `rank / (N + 1)` with average ranks for ties.
pub fn pseudo_observations(view: &Matrix) -> Result<Matrix> {
    let missing = view.missing_cells();
    if !missing.is_empty() {
        return Err(Error::MissingValues(missing));
    }
    if view.cols() == 0 || view.rows() == 0 {
        return Err(Error::DegenerateInput("table has no cells".into()));
    }
    let n = view.rows();
    let mut out = Matrix::zeros(n, view.cols());
    let mut order: Vec<usize> = (0..n).collect();
    for c in 0..view.cols() {
        let col = view.column(c);
        order.sort_by(|&a, &b| col[a].total_cmp(&col[b]));
        let mut start = 0;
        while start < n {
            let mut end = start + 1;
            while end < n && col[order[end]] == col[order[start]] {
                end += 1;
            }
            // Ranks start..end (1-based start+1..=end) share their mean.
            let rank = (start + 1 + end) as f64 / 2.0;
            for &i in &order[start..end] {
                out.set(i, c, rank / (n + 1) as f64);
            }
            start = end;
        }
    }
    Ok(out)
}

fn object_estimate(row: &[f64]) -> f64 {
    if row.iter().all(|&x| x <= EPS_U || x >= 1.0 - EPS_U) {
        return f64::NAN;
    }
    let clamped: Vec<f64> = row.iter().map(|&x| x.clamp(EPS_U, 1.0 - EPS_U)).collect();
    rluf_shape_mle(&clamped).unwrap_or(f64::NAN)
}

/// Fits per-object shape estimates over matched features and fills the
/// averages, bound and prior (in the default mode).
pub fn per_object_copula_fit(view_u: &Matrix, view_v: &Matrix) -> Result<CopulaPairFit> {
    if view_u.rows() != view_v.rows() || view_u.cols() != view_v.cols() {
        return Err(Error::DimensionMismatch(format!(
            "views are {}x{} and {}x{}",
            view_u.rows(),
            view_u.cols(),
            view_v.rows(),
            view_v.cols()
        )));
    }
    if view_u.cols() < 2 {
        return Err(Error::DegenerateInput(format!(
            "per-object fitting needs at least 2 matched features, got {}",
            view_u.cols()
        )));
    }
    let n = view_u.rows();
    let alpha: Vec<f64> = (0..n).map(|i| object_estimate(view_u.row(i))).collect();
    let beta: Vec<f64> = (0..n).map(|i| object_estimate(view_v.row(i))).collect();
    if let Some(i) = (0..n).find(|&i| alpha[i].is_nan() || beta[i].is_nan()) {
        return Err(Error::DegenerateInput(format!(
            "object {i} has no usable feature after clamping"
        )));
    }
    fit_from_estimates(alpha, beta)
}

/// Builds a fit from per-object estimates, excluding objects with an
/// estimate at or below one.
pub fn fit_from_estimates(alpha: Vec<f64>, beta: Vec<f64>) -> Result<CopulaPairFit> {
    if alpha.len() != beta.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} source estimates, {} target estimates",
            alpha.len(),
            beta.len()
        )));
    }
    let retained: Vec<bool> = alpha
        .iter()
        .zip(&beta)
        .map(|(&a, &b)| admissibility_bound(a, b).is_ok())
        .collect();
    let kept = retained.iter().filter(|r| **r).count();
    if kept == 0 {
        return Err(Error::EmptyRetention {
            excluded: alpha.len(),
        });
    }
    let mean = |xs: &[f64]| {
        xs.iter()
            .zip(&retained)
            .filter(|(_, r)| **r)
            .map(|(x, _)| x)
            .sum::<f64>()
            / kept as f64
    };
    let mut fit = CopulaPairFit {
        source: "u".into(),
        target: "v".into(),
        alpha_bar: mean(&alpha),
        beta_bar: mean(&beta),
        per_object_alpha: alpha,
        per_object_beta: beta,
        retained,
        b: 0.0,
        prior_mode: PriorMode::default(),
        prior_shape: 0.5,
        prior_rate: 0.0,
    };
    fit.b = bound_b(&fit)?;
    Ok(fit.with_mode(PriorMode::default()))
}

/// Minimum admissibility bound over objects with both estimates above one.
pub fn bound_b(fit: &CopulaPairFit) -> Result<f64> {
    let mut b = f64::INFINITY;
    let mut excluded = 0;
    for (&a, &c) in fit.per_object_alpha.iter().zip(&fit.per_object_beta) {
        match admissibility_bound(a, c) {
            Ok(x) => b = b.min(x),
            Err(_) => excluded += 1,
        }
    }
    if b.is_finite() {
        Ok(b)
    } else {
        Err(Error::EmptyRetention { excluded })
    }
}

/// `3ᾱ²β̄² / ((2+ᾱ)²(1+2β̄))`, the factor multiplying `ϑ²`.
pub fn rho_scale(alpha_bar: f64, beta_bar: f64) -> f64 {
    3.0 * alpha_bar.powi(2) * beta_bar.powi(2) / ((2.0 + alpha_bar).powi(2) * (1.0 + 2.0 * beta_bar))
}

/// Maps an association value to its directional dependence.
pub fn rho_from_theta(theta: f64, alpha_bar: f64, beta_bar: f64) -> f64 {
    rho_scale(alpha_bar, beta_bar) * theta * theta
}

pub fn prior_for_rho(fit: &CopulaPairFit, mode: PriorMode) -> GammaPrior {
    let s2 = (fit.b / 3.0).powi(2);
    let derived = 1.0 / (2.0 * rho_scale(fit.alpha_bar, fit.beta_bar) * s2);
    let rate = match mode {
        PriorMode::Derived => derived,
        PriorMode::Paper => {
            let (a, b) = (fit.alpha_bar, fit.beta_bar);
            4.0 * (2.0 + a).powi(2) * (1.0 + 2.0 * b) / (2.0 * a * a * b * b * s2)
        }
    };
    GammaPrior { shape: 0.5, rate }
}

/// `N(0, (b/3)²)`.
pub fn association_theta_prior(fit: &CopulaPairFit) -> GaussianPrior {
    GaussianPrior {
        mean: 0.0,
        sd: fit.b / 3.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::ks_two_sample;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Gamma, Normal};

    fn synthetic_fit(alpha_bar: f64, beta_bar: f64, b: f64) -> CopulaPairFit {
        CopulaPairFit {
            source: "u".into(),
            target: "v".into(),
            per_object_alpha: vec![alpha_bar],
            per_object_beta: vec![beta_bar],
            retained: vec![true],
            alpha_bar,
            beta_bar,
            b,
            prior_mode: PriorMode::Paper,
            prior_shape: 0.5,
            prior_rate: 1.0,
        }
    }

    #[test]
    fn pseudo_observation_examples() {
        let m = Matrix::column_vector(&[3.0, 1.0, 2.0]);
        assert_eq!(pseudo_observations(&m).unwrap().column(0), vec![0.75, 0.25, 0.5]);
        let m = Matrix::column_vector(&[5.0, 5.0, 5.0]);
        assert_eq!(pseudo_observations(&m).unwrap().column(0), vec![0.5, 0.5, 0.5]);
        let m = Matrix::from_rows(&[vec![1.0, f64::NAN], vec![2.0, 3.0]]).unwrap();
        match pseudo_observations(&m) {
            Err(Error::MissingValues(cells)) => assert_eq!(cells, vec![(0, 1)]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn per_object_examples() {
        let row = [0.5, 1.0 - (-1f64).exp()];
        let u = Matrix::from_rows(&[row.to_vec()]).unwrap();
        let v = Matrix::from_rows(&[vec![0.3, 0.6]]).unwrap();
        let fit = per_object_copula_fit(&u, &v).unwrap();
        // Direct evaluation of the two-term ratio.
        let num = 0.5 * 0.5f64.ln() - 0.5 - (-1f64).exp() - (1.0 - (-1f64).exp());
        let den = 0.5 * 0.5f64.ln() - (1.0 - (-1f64).exp());
        assert!((fit.per_object_alpha[0] - num / den).abs() < 1e-12);
        assert!((fit.per_object_alpha[0] - 1.8867729).abs() < 1e-6);

        let fit = per_object_copula_fit(&u, &u).unwrap();
        assert_eq!(fit.per_object_alpha, fit.per_object_beta);

        let one = Matrix::column_vector(&[0.5]);
        assert!(matches!(per_object_copula_fit(&one, &one), Err(Error::DegenerateInput(_))));
        let w = Matrix::from_rows(&[vec![0.3, 0.6, 0.2]]).unwrap();
        assert!(matches!(per_object_copula_fit(&u, &w), Err(Error::DimensionMismatch(_))));
        let edge = Matrix::from_rows(&[vec![0.0, 1.0]]).unwrap();
        assert!(matches!(per_object_copula_fit(&edge, &v), Err(Error::DegenerateInput(_))));
    }

    #[test]
    fn bound_examples() {
        let fit = fit_from_estimates(vec![3.0, 3.0], vec![3.0, 3.0]).unwrap();
        assert!((bound_b(&fit).unwrap() - 4.0).abs() < 1e-14);
        let fit = fit_from_estimates(vec![3.0, 2.0], vec![3.0, 2.0]).unwrap();
        assert!((fit.b - 3.0).abs() < 1e-14);
        let fit = fit_from_estimates(vec![2.0], vec![3.0]).unwrap();
        assert!((fit.b - 3.0).abs() < 1e-14);
    }

    #[test]
    fn exclusions_are_counted() {
        let fit = fit_from_estimates(vec![0.5, 2.0, 3.0], vec![2.0, 2.0, 0.9]).unwrap();
        assert_eq!(fit.excluded(), 2);
        assert_eq!(fit.alpha_bar, 2.0);
        assert!(matches!(
            fit_from_estimates(vec![0.5], vec![2.0]),
            Err(Error::EmptyRetention { excluded: 1 })
        ));
    }

    #[test]
    fn prior_rate_examples() {
        let fit = synthetic_fit(2.0, 2.0, 3.0);
        let paper = prior_for_rho(&fit, PriorMode::Paper);
        let derived = prior_for_rho(&fit, PriorMode::Derived);
        assert!((paper.rate - 10.0).abs() < 1e-12);
        assert!((derived.rate - 5.0 / 6.0).abs() < 1e-12);
        assert_eq!(paper.shape, 0.5);
        assert_eq!(derived.shape, 0.5);
    }

    #[test]
    fn theta_prior_examples() {
        assert_eq!(association_theta_prior(&synthetic_fit(2.0, 2.0, 3.0)).sd, 1.0);
        let g = association_theta_prior(&synthetic_fit(2.0, 2.0, 4.0));
        assert!((g.variance() - 16.0 / 9.0).abs() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let normal = Normal::new(g.mean, g.sd).unwrap();
        let inside = (0..100_000).filter(|_| normal.sample(&mut rng).abs() <= 4.0).count();
        let frac = inside as f64 / 1e5;
        assert!((0.995..=0.999).contains(&frac), "{frac}");
    }

    #[test]
    fn mapped_association_follows_derived_gamma() {
        let fit = synthetic_fit(2.4, 1.7, 2.6);
        let prior = prior_for_rho(&fit, PriorMode::Derived);
        let theta = association_theta_prior(&fit);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let normal = Normal::new(0.0, theta.sd).unwrap();
        let gamma = Gamma::new(prior.shape, 1.0 / prior.rate).unwrap();
        let mapped: Vec<f64> = (0..100_000)
            .map(|_| rho_from_theta(normal.sample(&mut rng), fit.alpha_bar, fit.beta_bar))
            .collect();
        let direct: Vec<f64> = (0..100_000).map(|_| gamma.sample(&mut rng)).collect();
        assert!(ks_two_sample(&mapped, &direct).p_value > 0.01);
    }

    proptest! {
        #[test]
        fn modes_differ_by_twelve(a in 1.01f64..20.0, b in 1.01f64..20.0, bound in 0.5f64..10.0) {
            let fit = synthetic_fit(a, b, bound);
            let ratio = prior_for_rho(&fit, PriorMode::Paper).rate / prior_for_rho(&fit, PriorMode::Derived).rate;
            prop_assert!((ratio - 12.0).abs() < 1e-10);
        }

        #[test]
        fn bound_is_a_minimum(est in prop::collection::vec((1.01f64..10.0, 1.01f64..10.0), 1..20)) {
            let (a, b): (Vec<f64>, Vec<f64>) = est.iter().copied().unzip();
            let fit = fit_from_estimates(a.clone(), b.clone()).unwrap();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!(fit.b <= admissibility_bound(*x, *y).unwrap());
            }
        }

        #[test]
        fn ranks_ignore_monotone_transforms(xs in prop::collection::vec(-5.0f64..5.0, 1..30)) {
            let m = Matrix::column_vector(&xs);
            let t: Vec<f64> = xs.iter().map(|x| x.exp() * 3.0 + 1.0).collect();
            let a = pseudo_observations(&m).unwrap();
            let b = pseudo_observations(&Matrix::column_vector(&t)).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
