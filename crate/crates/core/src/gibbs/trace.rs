use serde::{Deserialize, Serialize};

/// Output of one chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainTrace {
    pub seed: u64,
    pub k: usize,
    pub view_names: Vec<String>,
    pub final_view: usize,
    pub edges: Vec<(usize, usize)>,
    /// Retained label draws, indexed `[draw][view][object]`.
    pub draws: Vec<Vec<Vec<u32>>>,
    /// Log joint density after every sweep.
    pub log_joint: Vec<f64>,
    /// Edge strengths after every sweep, indexed `[sweep][edge]`.
    pub rho: Vec<Vec<f64>>,
    /// Occupied cluster counts after every sweep, indexed `[sweep][view]`.
    pub occupied: Vec<Vec<usize>>,
}

impl ChainTrace {
    pub fn views(&self) -> usize {
        self.view_names.len()
    }

    pub fn objects(&self) -> usize {
        self.draws
            .first()
            .and_then(|d| d.first())
            .map_or(0, Vec::len)
    }

    pub fn retained(&self) -> usize {
        self.draws.len()
    }

    /// Label vectors of `view` across retained draws.
    pub fn view_draws(&self, view: usize) -> impl Iterator<Item = &[u32]> + '_ {
        self.draws.iter().map(move |d| d[view].as_slice())
    }
}
