//! Gibbs sampling for the coupled mixture.

mod config;
mod init;
mod sampler;
mod trace;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub use config::{ModelConfig, SamplerConfig};
pub use init::{align_labels, farthest_point_labels};
pub use sampler::{GammaConditional, Sampler};
pub use trace::ChainTrace;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::model::{AllocationState, DirectionalGraph, NigPrior};
use crate::prior::{per_object_copula_fit, pseudo_observations, CopulaPairFit, PriorMode};

/// Default cap on the number of clusters seeded at initialization.
pub const DEFAULT_INIT_CLUSTERS: usize = 10;

/// Everything a chain needs besides its settings.
#[derive(Debug, Clone)]
pub struct Problem {
    pub views: Vec<Matrix>,
    pub view_names: Vec<String>,
    pub graph: DirectionalGraph,
    /// View whose labels form the consensus clustering.
    pub final_view: usize,
    pub priors: Vec<NigPrior>,
    /// Dirichlet mass per view.
    pub alpha: Vec<f64>,
    /// One copula fit per graph edge, in edge order.
    pub fits: Vec<CopulaPairFit>,
}

impl Problem {
    /// Validates the views, fits one copula prior per edge and builds the
    /// base measures. `alpha_overrides[m]` replaces the shared mass for view `m`.
    pub fn new(
        views: Vec<Matrix>,
        view_names: Vec<String>,
        graph: DirectionalGraph,
        final_view: usize,
        model: &ModelConfig,
        alpha_overrides: &[Option<f64>],
    ) -> Result<Self> {
        let m = graph.views();
        if views.len() != m || view_names.len() != m {
            return Err(Error::DimensionMismatch(format!(
                "{} views and {} names for a {m}-view graph",
                views.len(),
                view_names.len()
            )));
        }
        if final_view >= m {
            return Err(Error::InvalidConfig(format!("final view {final_view} is not one of {m} views")));
        }
        let n = views[0].rows();
        if n == 0 {
            return Err(Error::DegenerateInput("no objects".into()));
        }
        for (v, x) in views.iter().enumerate() {
            if x.rows() != n {
                return Err(Error::DimensionMismatch(format!(
                    "view {} has {} objects, expected {n}",
                    view_names[v],
                    x.rows()
                )));
            }
            if x.cols() == 0 {
                return Err(Error::DegenerateInput(format!("view {} has no features", view_names[v])));
            }
            let missing = x.missing_cells();
            if !missing.is_empty() {
                return Err(Error::MissingValues(missing));
            }
        }
        let alpha: Vec<f64> = (0..m)
            .map(|v| alpha_overrides.get(v).copied().flatten().unwrap_or(model.alpha))
            .collect();
        if alpha.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
            return Err(Error::InvalidConfig("Dirichlet masses must be positive".into()));
        }
        let priors = views
            .iter()
            .map(|x| {
                let base = NigPrior::from_data(x, model.kappa0, model.a0)?;
                let d = base.dim();
                NigPrior::new(
                    model.mu0.map_or(base.mu0, |v| vec![v; d]),
                    model.kappa0,
                    model.a0,
                    model.b0.map_or(base.b0, |v| vec![v; d]),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let fits = prepare_fits(&views, &view_names, &graph)?;
        Ok(Problem {
            views,
            view_names,
            graph,
            final_view,
            priors,
            alpha,
            fits,
        })
    }

    pub fn objects(&self) -> usize {
        self.views[0].rows()
    }
}

fn replicated(single: &Matrix) -> Matrix {
    let data = single.as_slice().iter().flat_map(|&x| [x, x]).collect();
    Matrix::new(single.rows(), 2, data).expect("shape")
}

/// Copula fit for every edge `source → target`, with the target as the
/// first copula coordinate. Single-feature views enter the fit as two
/// replicated columns.
pub fn prepare_fits(views: &[Matrix], names: &[String], graph: &DirectionalGraph) -> Result<Vec<CopulaPairFit>> {
    let mut pseudo: Vec<Option<Matrix>> = vec![None; views.len()];
    let mut fits = Vec::with_capacity(graph.edges().len());
    for &(source, target) in graph.edges() {
        for v in [source, target] {
            if pseudo[v].is_none() {
                let p = pseudo_observations(&views[v])?;
                pseudo[v] = Some(if p.cols() == 1 { replicated(&p) } else { p });
            }
        }
        let (u, v) = (pseudo[target].as_ref().expect("set"), pseudo[source].as_ref().expect("set"));
        let fit = per_object_copula_fit(u, v).map_err(|e| match e {
            Error::DimensionMismatch(msg) => Error::DimensionMismatch(format!(
                "copula pair {} -> {}: {msg}",
                names[source], names[target]
            )),
            other => other,
        })?;
        fits.push(fit.with_names(names[source].clone(), names[target].clone()));
    }
    Ok(fits)
}

fn initial_state<R: Rng + ?Sized>(config: &SamplerConfig, problem: &Problem, k: usize, rng: &mut R) -> AllocationState {
    let seeds = config.init_clusters.unwrap_or(DEFAULT_INIT_CLUSTERS).min(k);
    let mut labels: Vec<Vec<usize>> = problem
        .views
        .iter()
        .map(|x| farthest_point_labels(x, seeds, rng))
        .collect();
    let reference = labels[problem.final_view].clone();
    for (v, l) in labels.iter_mut().enumerate() {
        if v != problem.final_view {
            align_labels(&reference, l, k);
        }
    }
    let log_gamma = labels
        .iter()
        .zip(&problem.alpha)
        .map(|(l, a)| {
            let mut counts = vec![0.0; k];
            for &c in l {
                counts[c] += 1.0;
            }
            counts.iter().map(|c| (c + a / k as f64).ln()).collect()
        })
        .collect();
    let rho = problem
        .fits
        .iter()
        .map(|f| {
            let p = f.clone().with_mode(config.prior_mode).prior();
            p.shape / p.rate
        })
        .collect();
    AllocationState {
        k,
        labels,
        log_gamma,
        rho,
        alpha: problem.alpha.clone(),
        xi: 1.0,
    }
}

/// Prior rate of every edge strength under `mode`.
pub fn rho_rates(fits: &[CopulaPairFit], mode: PriorMode) -> Vec<f64> {
    fits.iter().map(|f| f.clone().with_mode(mode).prior().rate).collect()
}

/// Runs one chain with `config.seed`.
pub fn run_chain(config: &SamplerConfig, problem: &Problem) -> Result<ChainTrace> {
    let k = config.validate(problem.objects())?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let state = initial_state(config, problem, k, &mut rng);
    let mut sampler = Sampler::new(
        problem.views.clone(),
        problem.graph.clone(),
        problem.priors.clone(),
        rho_rates(&problem.fits, config.prior_mode),
        config.likelihood_form,
        state,
        rng.random(),
    )?;
    let mut trace = ChainTrace {
        seed: config.seed,
        k,
        view_names: problem.view_names.clone(),
        final_view: problem.final_view,
        edges: problem.graph.edges().to_vec(),
        draws: Vec::with_capacity(config.retained_count()),
        log_joint: Vec::with_capacity(config.sweeps),
        rho: Vec::with_capacity(config.sweeps),
        occupied: Vec::with_capacity(config.sweeps),
    };
    let views = problem.views.len();
    for s in 1..=config.sweeps {
        trace.log_joint.push(sampler.sweep());
        trace.rho.push(sampler.state().rho.clone());
        trace.occupied.push((0..views).map(|m| sampler.occupied(m)).collect());
        if config.keeps(s) {
            trace.draws.push(
                sampler
                    .state()
                    .labels
                    .iter()
                    .map(|l| l.iter().map(|&c| c as u32).collect())
                    .collect(),
            );
        }
    }
    Ok(trace)
}

/// Runs `config.chains` chains in parallel; chain `c` uses seed `config.seed + c`.
pub fn run_chains(config: &SamplerConfig, problem: &Problem) -> Result<Vec<ChainTrace>> {
    config.validate(problem.objects())?;
    (0..config.chains as u64)
        .into_par_iter()
        .map(|c| {
            let cfg = SamplerConfig {
                seed: config.seed.wrapping_add(c),
                ..config.clone()
            };
            run_chain(&cfg, problem)
        })
        .collect()
}
