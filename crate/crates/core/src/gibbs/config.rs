use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::LikelihoodForm;
use crate::prior::PriorMode;

/// Settings for one or more Gibbs chains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerConfig {
    /// Cluster upper bound; `⌈N/2⌉` when absent.
    pub k: Option<usize>,
    pub sweeps: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    pub chains: usize,
    pub prior_mode: PriorMode,
    pub likelihood_form: LikelihoodForm,
    /// Number of seeded clusters per view at start; `min(K, 10)` when absent.
    pub init_clusters: Option<usize>,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            k: None,
            sweeps: 2000,
            burn_in: 1000,
            thin: 1,
            seed: 0,
            chains: 1,
            prior_mode: PriorMode::default(),
            likelihood_form: LikelihoodForm::default(),
            init_clusters: None,
        }
    }
}

impl SamplerConfig {
    /// Validates the settings for `n` objects and returns the resolved `K`.
    pub fn validate(&self, n: usize) -> Result<usize> {
        if self.burn_in >= self.sweeps {
            return Err(Error::InvalidConfig(format!(
                "burn_in ({}) must be smaller than sweeps ({})",
                self.burn_in, self.sweeps
            )));
        }
        if self.thin == 0 {
            return Err(Error::InvalidConfig("thin must be at least 1".into()));
        }
        if self.chains == 0 {
            return Err(Error::InvalidConfig("chains must be at least 1".into()));
        }
        if self.init_clusters == Some(0) {
            return Err(Error::InvalidConfig("init_clusters must be at least 1".into()));
        }
        let k = self.k.unwrap_or(n.div_ceil(2));
        if k < 2 {
            return Err(Error::InvalidConfig(format!("K = {k} must be at least 2")));
        }
        Ok(k)
    }

    /// Number of draws kept per chain.
    pub fn retained_count(&self) -> usize {
        (self.sweeps - self.burn_in) / self.thin
    }

    pub(crate) fn keeps(&self, sweep: usize) -> bool {
        sweep > self.burn_in && (sweep - self.burn_in).is_multiple_of(self.thin)
    }
}

/// Base-measure and Dirichlet settings shared by all views.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    /// Dirichlet mass per view unless a view overrides it.
    pub alpha: f64,
    pub kappa0: f64,
    pub a0: f64,
    /// Prior mean for every feature; per-feature data means when absent.
    pub mu0: Option<f64>,
    /// Prior scale for every feature; per-feature data variances when absent.
    pub b0: Option<f64>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            alpha: 2.0,
            kappa0: 0.01,
            a0: 2.0,
            mu0: None,
            b0: None,
        }
    }
}
