//! Synthetic two-view data: mixture margins coupled by a copula.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::copula::{Bb1Params, Copula, TawnParams};
use crate::dataset::{MultiViewDataset, View};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::numeric::solve_increasing;

const QUANTILE_TOL: f64 = 1e-10;
const WEIGHT_TOL: f64 = 1e-9;

/// Copula family and parameters for the generated pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum CopulaSpec {
    Tawn1 { psi1: f64, theta: f64 },
    Tawn2 { psi2: f64, theta: f64 },
    Bb1 { theta: f64, delta: f64 },
}

impl CopulaSpec {
    pub fn kendall_tau(&self) -> Result<f64> {
        Ok(match *self {
            CopulaSpec::Tawn1 { psi1, theta } => TawnParams::type1(psi1, theta)?.kendall_tau(),
            CopulaSpec::Tawn2 { psi2, theta } => TawnParams::type2(psi2, theta)?.kendall_tau(),
            CopulaSpec::Bb1 { theta, delta } => Bb1Params::new(theta, delta)?.kendall_tau(),
        })
    }

    /// `n` pairs `(u, v)`.
    pub fn sample(&self, n: usize, rng: &mut ChaCha8Rng) -> Result<Vec<(f64, f64)>> {
        match *self {
            CopulaSpec::Tawn1 { psi1, theta } => TawnParams::type1(psi1, theta)?.sample(n, rng),
            CopulaSpec::Tawn2 { psi2, theta } => TawnParams::type2(psi2, theta)?.sample(n, rng),
            CopulaSpec::Bb1 { theta, delta } => Bb1Params::new(theta, delta)?.sample(n, rng),
        }
    }
}

/// Tawn Type 2 and BB1 parameters with the same Kendall tau as `tau`.
/// Tawn Type 2 keeps `theta` and solves for its asymmetry weight.
pub fn tau_matched(tau: f64, theta: f64) -> Result<(CopulaSpec, CopulaSpec)> {
    let psi2 = solve_increasing(
        |p| TawnParams::type2(p, theta).map_or(f64::NAN, |t| t.kendall_tau()),
        tau,
        0.0,
        1.0,
        1e-10,
        200,
    )
    .map_err(|_| Error::Domain(format!("no Tawn Type 2 weight reaches tau = {tau}")))?;
    let bb1 = Bb1Params::with_kendall_tau(tau)?;
    Ok((
        CopulaSpec::Tawn2 { psi2, theta },
        CopulaSpec::Bb1 {
            theta: bb1.theta(),
            delta: bb1.delta(),
        },
    ))
}

/// Univariate Gaussian mixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mixture {
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Mixture {
    pub fn validate(&self) -> Result<()> {
        let k = self.means.len();
        if k == 0 || self.sds.len() != k || self.weights.len() != k {
            return Err(Error::InvalidConfig(format!(
                "mixture needs matching means, sds and weights, got {}, {} and {}",
                k,
                self.sds.len(),
                self.weights.len()
            )));
        }
        if self.sds.iter().any(|s| !(*s > 0.0 && s.is_finite())) || self.means.iter().any(|m| !m.is_finite()) {
            return Err(Error::InvalidConfig("mixture sds must be positive and means finite".into()));
        }
        let total: f64 = self.weights.iter().sum();
        if self.weights.iter().any(|w| !(*w >= 0.0)) || (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::InvalidConfig(format!(
                "mixture weights must be nonnegative and sum to 1, got {total}"
            )));
        }
        Ok(())
    }

    fn components(&self) -> impl Iterator<Item = (f64, Normal)> + '_ {
        self.weights
            .iter()
            .zip(self.means.iter().zip(&self.sds))
            .map(|(&w, (&m, &s))| (w, Normal::new(m, s).expect("validated mixture")))
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.components().map(|(w, n)| w * n.cdf(x)).sum()
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.components().map(|(w, n)| w * n.pdf(x)).sum()
    }

    pub fn quantile(&self, q: f64) -> Result<f64> {
        let lo = self
            .means
            .iter()
            .zip(&self.sds)
            .map(|(m, s)| m - 40.0 * s)
            .fold(f64::INFINITY, f64::min);
        let hi = self
            .means
            .iter()
            .zip(&self.sds)
            .map(|(m, s)| m + 40.0 * s)
            .fold(f64::NEG_INFINITY, f64::max);
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::Inversion { quantile: q });
        }
        solve_increasing(|x| self.cdf(x), q, lo, hi, QUANTILE_TOL * (hi - lo).max(1.0) * 1e-2, 300)
            .map_err(|_| Error::Inversion { quantile: q })
    }

    /// Component with the largest posterior responsibility for `x`.
    pub fn classify(&self, x: f64) -> usize {
        let mut best = (f64::NEG_INFINITY, 0);
        for (k, (w, n)) in self.components().enumerate() {
            let score = w.ln() + n.ln_pdf(x);
            if score > best.0 {
                best = (score, k);
            }
        }
        best.1
    }
}

/// Which edge a fit declares between the two views.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeclaredDirection {
    True,
    None,
    Reversed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioView {
    pub name: String,
    pub mixture: Mixture,
}

/// Two mixture views coupled by a copula.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub copula: CopulaSpec,
    pub views: Vec<ScenarioView>,
    pub n: usize,
    /// `(source, target)` view names.
    pub true_direction: (String, String),
    pub declared_direction: DeclaredDirection,
    pub seed: u64,
    /// Replicated feature columns per view.
    #[serde(default = "default_features")]
    pub features: usize,
}

fn default_features() -> usize {
    1
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let mixture = |means: [f64; 2], sds: [f64; 2]| Mixture {
            means: means.to_vec(),
            sds: sds.to_vec(),
            weights: vec![0.5, 0.5],
        };
        ScenarioConfig {
            copula: CopulaSpec::Tawn1 { psi1: 0.5, theta: 30.0 },
            views: vec![
                ScenarioView {
                    name: "U".into(),
                    mixture: mixture([0.0, 3.0], [1.0, 0.5]),
                },
                ScenarioView {
                    name: "V".into(),
                    mixture: mixture([0.0, 3.0], [1.0, 0.5]),
                },
            ],
            n: 500,
            true_direction: ("V".into(), "U".into()),
            declared_direction: DeclaredDirection::True,
            seed: 0,
            features: default_features(),
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.views.len() != 2 {
            return Err(Error::InvalidConfig(format!("scenarios have 2 views, got {}", self.views.len())));
        }
        if self.views[0].name == self.views[1].name {
            return Err(Error::InvalidConfig("view names must differ".into()));
        }
        for v in &self.views {
            v.mixture.validate()?;
        }
        if self.n < 2 {
            return Err(Error::InvalidConfig("n must be at least 2".into()));
        }
        if self.features == 0 {
            return Err(Error::InvalidConfig("features must be at least 1".into()));
        }
        self.source_target()?;
        self.copula.kendall_tau()?;
        Ok(())
    }

    /// Indices of the true-direction source and target views.
    pub fn source_target(&self) -> Result<(usize, usize)> {
        let idx = |name: &str| {
            self.views
                .iter()
                .position(|v| v.name == name)
                .ok_or_else(|| Error::InvalidConfig(format!("direction names unknown view {name}")))
        };
        let (s, t) = (idx(&self.true_direction.0)?, idx(&self.true_direction.1)?);
        if s == t {
            return Err(Error::InvalidConfig("direction source and target coincide".into()));
        }
        Ok((s, t))
    }

    /// Graph edges implied by the declared direction.
    pub fn declared_edges(&self) -> Result<Vec<(usize, usize)>> {
        let (s, t) = self.source_target()?;
        Ok(match self.declared_direction {
            DeclaredDirection::True => vec![(s, t)],
            DeclaredDirection::None => vec![],
            DeclaredDirection::Reversed => vec![(t, s)],
        })
    }

    /// The target view, whose clustering is scored.
    pub fn final_view(&self) -> Result<usize> {
        Ok(self.source_target()?.1)
    }
}

/// Generated data with ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub dataset: MultiViewDataset,
    pub truth: Vec<u32>,
    /// Copula draws `(u, v)`: `u` drives the target view, `v` the source.
    pub uniforms: Vec<(f64, f64)>,
}

pub fn generate(config: &ScenarioConfig) -> Result<Scenario> {
    config.validate()?;
    let (source, target) = config.source_target()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let uniforms = config.copula.sample(config.n, &mut rng)?;
    let mut columns: Vec<Vec<f64>> = (0..2).map(|_| Vec::with_capacity(config.n)).collect();
    for &(u, v) in &uniforms {
        columns[target].push(config.views[target].mixture.quantile(u)?);
        columns[source].push(config.views[source].mixture.quantile(v)?);
    }
    let target_mixture = &config.views[target].mixture;
    let truth = columns[target].iter().map(|&x| target_mixture.classify(x) as u32).collect();
    let width = config.n.to_string().len();
    let object_ids = (1..=config.n).map(|i| format!("obj{i:0width$}")).collect();
    let d = config.features;
    let views = config
        .views
        .iter()
        .zip(&columns)
        .map(|(spec, col)| {
            let data = col.iter().flat_map(|&x| std::iter::repeat_n(x, d)).collect();
            Ok(View {
                name: spec.name.clone(),
                feature_names: (1..=d).map(|j| format!("f{j}")).collect(),
                data: Matrix::new(config.n, d, data)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Scenario {
        dataset: MultiViewDataset::new(object_ids, views)?,
        truth,
        uniforms,
    })
}

/// One of the three declared-direction cases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioCase {
    pub name: String,
    pub config: ScenarioConfig,
}

/// Cases (i) true direction, (ii) no edge, (iii) reversed, sharing data and seed.
pub fn scenario_battery(base: &ScenarioConfig) -> Result<Vec<ScenarioCase>> {
    base.validate()?;
    Ok([
        ("i", DeclaredDirection::True),
        ("ii", DeclaredDirection::None),
        ("iii", DeclaredDirection::Reversed),
    ]
    .into_iter()
    .map(|(name, declared_direction)| ScenarioCase {
        name: name.into(),
        config: ScenarioConfig {
            declared_direction,
            ..base.clone()
        },
    })
    .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::copula::{directional_rho_empirical, Direction, QuadratureConfig};
    use crate::diagnostics::ks_one_sample;

    #[test]
    fn quantile_round_trip() {
        let m = ScenarioConfig::default().views[0].mixture.clone();
        for i in 1..=99 {
            let q = i as f64 / 100.0;
            let x = m.quantile(q).unwrap();
            assert!((m.cdf(x) - q).abs() < 1e-8, "q = {q}");
        }
        for q in [1e-12, 1.0 - 1e-12] {
            assert!((m.cdf(m.quantile(q).unwrap()) - q).abs() < 1e-8);
        }
        assert!(matches!(m.quantile(1.0), Err(Error::Inversion { .. })));
    }

    #[test]
    fn default_scenario_is_balanced() {
        let s = generate(&ScenarioConfig::default()).unwrap();
        assert_eq!(s.dataset.objects(), 500);
        assert_eq!(s.dataset.views[0].data.cols(), 1);
        let ones = s.truth.iter().filter(|&&t| t == 1).count() as f64;
        let sd = (500.0f64 * 0.25).sqrt();
        assert!((ones - 250.0).abs() < 3.0 * sd, "{ones}");
        assert_eq!(s, generate(&ScenarioConfig::default()).unwrap());
    }

    #[test]
    fn margins_follow_the_mixtures() {
        let cfg = ScenarioConfig {
            n: 10_000,
            seed: 3,
            ..Default::default()
        };
        let s = generate(&cfg).unwrap();
        for (view, spec) in s.dataset.views.iter().zip(&cfg.views) {
            let r = ks_one_sample(&view.data.column(0), |x| spec.mixture.cdf(x));
            assert!(r.p_value > 0.01, "{}: p = {}", view.name, r.p_value);
        }
    }

    #[test]
    fn independent_views_are_uncorrelated() {
        let cfg = ScenarioConfig {
            copula: CopulaSpec::Tawn1 { psi1: 0.0, theta: 2.0 },
            n: 2000,
            seed: 4,
            ..Default::default()
        };
        let s = generate(&cfg).unwrap();
        let a = s.dataset.views[0].data.column(0);
        let b = s.dataset.views[1].data.column(0);
        let mean = |x: &[f64]| x.iter().sum::<f64>() / x.len() as f64;
        let (ma, mb) = (mean(&a), mean(&b));
        let cov: f64 = a.iter().zip(&b).map(|(x, y)| (x - ma) * (y - mb)).sum();
        let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
        let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
        assert!((cov / (va * vb).sqrt()).abs() < 0.1);
    }

    #[test]
    fn true_direction_dominates_on_average() {
        // Single seeds at n = 500 are too noisy to order reliably; the mean
        // over seeds is not.
        let quad = QuadratureConfig::default();
        let (mut forward, mut reverse) = (0.0, 0.0);
        for seed in 0..10 {
            let s = generate(&ScenarioConfig { seed, ..Default::default() }).unwrap();
            forward += directional_rho_empirical(&s.uniforms, Direction::VToU, &quad).unwrap();
            reverse += directional_rho_empirical(&s.uniforms, Direction::UToV, &quad).unwrap();
        }
        assert!(forward > reverse, "{forward} vs {reverse}");
    }

    #[test]
    fn truth_is_affine_invariant() {
        let cfg = ScenarioConfig::default();
        let s = generate(&cfg).unwrap();
        let m = &cfg.views[0].mixture;
        let (a, b) = (2.5, -7.0);
        let scaled = Mixture {
            means: m.means.iter().map(|x| a * x + b).collect(),
            sds: m.sds.iter().map(|x| a * x).collect(),
            weights: m.weights.clone(),
        };
        let col = s.dataset.views[0].data.column(0);
        let relabeled: Vec<u32> = col.iter().map(|&x| scaled.classify(a * x + b) as u32).collect();
        assert_eq!(relabeled, s.truth);
    }

    #[test]
    fn battery_shares_data() {
        let cases = scenario_battery(&ScenarioConfig::default()).unwrap();
        let edges: Vec<_> = cases.iter().map(|c| c.config.declared_edges().unwrap()).collect();
        assert_eq!(edges, vec![vec![(1, 0)], vec![], vec![(0, 1)]]);
        let data: Vec<_> = cases.iter().map(|c| generate(&c.config).unwrap().dataset).collect();
        assert!(data.windows(2).all(|w| w[0] == w[1]));
        assert!(cases.iter().all(|c| c.config.final_view().unwrap() == 0));
    }

    #[test]
    fn validation() {
        let mut cfg = ScenarioConfig::default();
        cfg.views[1].mixture.weights = vec![0.5, 0.6];
        assert!(generate(&cfg).is_err());
        let mut cfg = ScenarioConfig::default();
        cfg.views[0].mixture.sds[0] = 0.0;
        assert!(cfg.validate().is_err());
        let cfg = ScenarioConfig {
            true_direction: ("V".into(), "W".into()),
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        let json = serde_json::to_string(&ScenarioConfig::default()).unwrap();
        assert_eq!(serde_json::from_str::<ScenarioConfig>(&json).unwrap(), ScenarioConfig::default());
    }

    #[test]
    fn ablation_families_match_tau() {
        let base = CopulaSpec::Tawn1 { psi1: 0.5, theta: 30.0 };
        let tau = base.kendall_tau().unwrap();
        let (t2, bb1) = tau_matched(tau, 30.0).unwrap();
        assert!((t2.kendall_tau().unwrap() - tau).abs() < 0.02);
        assert!((bb1.kendall_tau().unwrap() - tau).abs() < 0.02);
        if let CopulaSpec::Tawn2 { psi2, .. } = t2 {
            assert!((psi2 - 0.5).abs() < 1e-6);
        }
    }
}
