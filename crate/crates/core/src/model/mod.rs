//! Copula-coupled Dirichlet mixture model.

pub mod allocation;
pub mod component;
pub mod graph;

use serde::{Deserialize, Serialize};

pub use allocation::{
    allocation_prior_weight, joint_allocation_log_density, log_allocation_prior_weight,
    log_normalizing_z, log_z_gamma_restricted, log_z_gamma_restricted_at, log_z_rho_restricted, normalizing_z,
    AllocationState, ZMethod,
};
pub use component::{log_marginal, log_marginal_with, log_predictive, ClusterStats, NigPrior};
pub use graph::{DirectionalGraph, MAX_EDGES};

/// Likelihood term used when scoring a candidate label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LikelihoodForm {
    /// Posterior predictive of the observation given the cluster's members.
    #[default]
    Conditional,
    /// Marginal likelihood of the cluster with the observation added.
    Joint,
}
