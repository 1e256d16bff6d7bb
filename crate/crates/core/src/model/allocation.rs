//! Coupled allocation prior across views.
//!
//! For one object with labels `(L₁, …, L_M)` the unnormalized prior weight is
//! `∏ₘ γ_{m,Lₘ} · ∏_{(m→k) ∈ E} (1 + ρ_{m→k}·1{Lₘ = Lₖ})`. Expanding the edge
//! product over subsets `S ⊆ E` gives the normalizing constant
//!
//! ```text
//! Z = Σ_S ∏_{e∈S} ρ_e · ∏_{c ∈ components(S)} Σ_j ∏_{k∈c} γ_{kj}
//! ```
//!
//! in `O(2^|E|·M·K)`. Every quantity here is computed on the log scale.

use serde::{Deserialize, Serialize};

use super::graph::DirectionalGraph;
use crate::error::{Error, Result};
use crate::numeric::{log_add_exp, log_sum_exp};

/// Labels, weights and coupling strengths of the allocation model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationState {
    /// Cluster upper bound.
    pub k: usize,
    /// `labels[m][i]` in `0..k`.
    pub labels: Vec<Vec<usize>>,
    /// `log_gamma[m][j] = ln γ_{mj}`.
    pub log_gamma: Vec<Vec<f64>>,
    /// One strength per graph edge, in edge order.
    pub rho: Vec<f64>,
    /// Dirichlet mass per view.
    pub alpha: Vec<f64>,
    /// Latent rate variable.
    pub xi: f64,
}

impl AllocationState {
    pub fn views(&self) -> usize {
        self.labels.len()
    }

    pub fn objects(&self) -> usize {
        self.labels.first().map_or(0, Vec::len)
    }

    /// Checks shapes and ranges against `graph`.
    pub fn validate(&self, graph: &DirectionalGraph) -> Result<()> {
        let m = graph.views();
        if self.labels.len() != m || self.log_gamma.len() != m || self.alpha.len() != m {
            return Err(Error::DimensionMismatch(format!(
                "state carries {} label rows, {} weight rows and {} masses for {m} views",
                self.labels.len(),
                self.log_gamma.len(),
                self.alpha.len()
            )));
        }
        if self.rho.len() != graph.edges().len() {
            return Err(Error::DimensionMismatch(format!(
                "{} strengths for {} edges",
                self.rho.len(),
                graph.edges().len()
            )));
        }
        let n = self.objects();
        for v in 0..m {
            if self.labels[v].len() != n {
                return Err(Error::DimensionMismatch(format!("view {v} has a ragged label row")));
            }
            if let Some(&l) = self.labels[v].iter().find(|&&l| l >= self.k) {
                return Err(Error::Domain(format!("label {l} out of range in view {v}")));
            }
            if self.log_gamma[v].len() != self.k || self.log_gamma[v].iter().any(|g| g.is_nan() || *g == f64::INFINITY) {
                return Err(Error::Domain(format!("view {v} weights must be {} positive reals", self.k)));
            }
            if !(self.alpha[v] > 0.0) {
                return Err(Error::Domain(format!("mass for view {v} must be positive")));
            }
        }
        if self.rho.iter().any(|r| !(*r >= 0.0) || !r.is_finite()) {
            return Err(Error::Domain("strengths must be finite and nonnegative".into()));
        }
        Ok(())
    }

    /// `π_{mj} = γ_{mj} / Σ_k γ_{mk}`.
    pub fn mixture_weights(&self, view: usize) -> Vec<f64> {
        let total = log_sum_exp(&self.log_gamma[view]);
        self.log_gamma[view].iter().map(|g| (g - total).exp()).collect()
    }
}

/// How the normalizing constant is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZMethod {
    /// Enumerates all `K^M` label tuples.
    Brute,
    /// Edge-subset expansion.
    Factorized,
}

/// `ln` of the unnormalized prior weight of one label tuple.
pub fn log_allocation_prior_weight(labels: &[usize], state: &AllocationState, graph: &DirectionalGraph) -> f64 {
    let mut w: f64 = labels
        .iter()
        .enumerate()
        .map(|(m, &l)| state.log_gamma[m][l])
        .sum();
    for (e, &(a, b)) in graph.edges().iter().enumerate() {
        if labels[a] == labels[b] {
            w += state.rho[e].ln_1p();
        }
    }
    w
}

pub fn allocation_prior_weight(labels: &[usize], state: &AllocationState, graph: &DirectionalGraph) -> f64 {
    log_allocation_prior_weight(labels, state, graph).exp()
}

fn for_each_tuple(views: usize, k: usize, mut f: impl FnMut(&[usize])) {
    let mut tuple = vec![0usize; views];
    loop {
        f(&tuple);
        let mut pos = 0;
        loop {
            if pos == views {
                return;
            }
            tuple[pos] += 1;
            if tuple[pos] < k {
                break;
            }
            tuple[pos] = 0;
            pos += 1;
        }
    }
}

/// `ln Σ_j exp(Σ_{k∈members} ln γ_{kj})` with `pinned` fixing the label.
fn log_component_sum(state: &AllocationState, members: &[usize], pinned: Option<usize>) -> f64 {
    match pinned {
        Some(j) => members.iter().map(|&v| state.log_gamma[v][j]).sum(),
        None => {
            let terms: Vec<f64> = (0..state.k)
                .map(|j| members.iter().map(|&v| state.log_gamma[v][j]).sum())
                .collect();
            log_sum_exp(&terms)
        }
    }
}

/// Shared driver for the factorized sums.
///
/// `skip_edge` drops that edge's strength (and restricts to subsets that
/// contain it); `pin` fixes view `m` to label `j` and removes `γ_{mj}`.
fn log_factorized(
    state: &AllocationState,
    graph: &DirectionalGraph,
    skip_edge: Option<usize>,
    pin: Option<(usize, usize)>,
) -> f64 {
    let edges = graph.edges().len();
    let log_rho: Vec<f64> = state.rho.iter().map(|r| r.ln()).collect();
    let mut terms = Vec::with_capacity(graph.subset_count());
    let mut members: Vec<Vec<usize>> = Vec::new();
    for mask in 0..graph.subset_count() {
        if let Some(e) = skip_edge {
            if mask >> e & 1 == 0 {
                continue;
            }
        }
        let mut t = 0.0;
        for (e, lr) in log_rho.iter().enumerate().take(edges) {
            if mask >> e & 1 == 1 && Some(e) != skip_edge {
                t += lr;
            }
        }
        if t == f64::NEG_INFINITY {
            continue;
        }
        let (comp, count) = graph.subset_components(mask);
        members.iter_mut().for_each(Vec::clear);
        members.resize(count, Vec::new());
        for (v, &c) in comp.iter().enumerate() {
            if pin.map(|(m, _)| m) != Some(v) {
                members[c].push(v);
            }
        }
        for (c, mem) in members.iter().enumerate() {
            let pinned = pin.and_then(|(m, j)| (comp[m] == c).then_some(j));
            t += log_component_sum(state, mem, pinned);
        }
        terms.push(t);
    }
    log_sum_exp(&terms)
}

/// `ln Z`.
pub fn log_normalizing_z(state: &AllocationState, graph: &DirectionalGraph, method: ZMethod) -> f64 {
    match method {
        ZMethod::Factorized => log_factorized(state, graph, None, None),
        ZMethod::Brute => {
            let mut terms = Vec::new();
            for_each_tuple(graph.views(), state.k, |t| {
                terms.push(log_allocation_prior_weight(t, state, graph));
            });
            log_sum_exp(&terms)
        }
    }
}

pub fn normalizing_z(state: &AllocationState, graph: &DirectionalGraph, method: ZMethod) -> f64 {
    log_normalizing_z(state, graph, method).exp()
}

/// `ln ∂Z/∂γ_{mj}` for every `j`: the sum over label tuples with view `m`
/// pinned to `j` and its weight factor removed. Independent of `γ_{m·}`.
pub fn log_z_gamma_restricted(state: &AllocationState, graph: &DirectionalGraph, m: usize) -> Vec<f64> {
    let mut acc = vec![f64::NEG_INFINITY; state.k];
    let mut members: Vec<Vec<usize>> = Vec::new();
    for mask in 0..graph.subset_count() {
        let mut t: f64 = state
            .rho
            .iter()
            .enumerate()
            .filter(|(e, _)| mask >> e & 1 == 1)
            .map(|(_, r)| r.ln())
            .sum();
        if t == f64::NEG_INFINITY {
            continue;
        }
        let (comp, count) = graph.subset_components(mask);
        members.iter_mut().for_each(Vec::clear);
        members.resize(count, Vec::new());
        for (v, &c) in comp.iter().enumerate() {
            if v != m {
                members[c].push(v);
            }
        }
        for (c, mem) in members.iter().enumerate() {
            if c != comp[m] {
                t += log_component_sum(state, mem, None);
            }
        }
        let pinned = &members[comp[m]];
        for (j, a) in acc.iter_mut().enumerate() {
            let lg: f64 = pinned.iter().map(|&v| state.log_gamma[v][j]).sum();
            *a = log_add_exp(*a, t + lg);
        }
    }
    acc
}

/// Single-entry form of [`log_z_gamma_restricted`].
pub fn log_z_gamma_restricted_at(state: &AllocationState, graph: &DirectionalGraph, m: usize, j: usize) -> f64 {
    log_factorized(state, graph, None, Some((m, j)))
}

/// `ln ∂Z/∂ρ_e`: the sum over tuples whose endpoints of `e` agree, with
/// the factor `(1 + ρ_e)` removed.
pub fn log_z_rho_restricted(state: &AllocationState, graph: &DirectionalGraph, edge: usize) -> f64 {
    log_factorized(state, graph, Some(edge), None)
}

/// Brute-force counterparts of the restricted sums, for verification.
pub fn log_z_gamma_restricted_brute(state: &AllocationState, graph: &DirectionalGraph, m: usize, j: usize) -> f64 {
    let mut terms = Vec::new();
    for_each_tuple(graph.views(), state.k, |t| {
        if t[m] == j {
            terms.push(log_allocation_prior_weight(t, state, graph) - state.log_gamma[m][j]);
        }
    });
    log_sum_exp(&terms)
}

pub fn log_z_rho_restricted_brute(state: &AllocationState, graph: &DirectionalGraph, edge: usize) -> f64 {
    let (a, b) = graph.edges()[edge];
    let mut terms = Vec::new();
    for_each_tuple(graph.views(), state.k, |t| {
        if t[a] == t[b] {
            terms.push(log_allocation_prior_weight(t, state, graph) - state.rho[edge].ln_1p());
        }
    });
    log_sum_exp(&terms)
}

/// `Σ_i ln w(L_{·i}) − N ln Z`.
pub fn joint_allocation_log_density(state: &AllocationState, graph: &DirectionalGraph) -> f64 {
    let n = state.objects();
    let mut tuple = vec![0; state.views()];
    let mut total = 0.0;
    for i in 0..n {
        for (m, t) in tuple.iter_mut().enumerate() {
            *t = state.labels[m][i];
        }
        total += log_allocation_prior_weight(&tuple, state, graph);
    }
    total - n as f64 * log_normalizing_z(state, graph, ZMethod::Factorized)
}
