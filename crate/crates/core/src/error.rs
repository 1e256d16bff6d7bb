use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the clustering pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("root finding failed after {iterations} iterations (u = {u}, w = {w})")]
    RootFinding { u: f64, w: f64, iterations: usize },

    #[error("mixture inversion failed at quantile {quantile}")]
    Inversion { quantile: f64 },

    #[error("quadrature did not converge: {nodes} nodes give {fine}, {coarse_nodes} give {coarse}")]
    Quadrature {
        nodes: usize,
        coarse_nodes: usize,
        fine: f64,
        coarse: f64,
    },

    #[error("no objects retained for the admissibility bound ({excluded} excluded)")]
    EmptyRetention { excluded: usize },

    #[error("missing values at {}", format_cells(.0))]
    MissingValues(Vec<(usize, usize)>),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("object identifiers differ between views: {}", .0.join(", "))]
    IdentifierMismatch(Vec<String>),

    #[error("{path}: non-numeric cell at row {row}, column {column}: {value:?}")]
    NonNumeric {
        path: PathBuf,
        row: usize,
        column: usize,
        value: String,
    },

    #[error("trace is empty")]
    EmptyTrace,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

fn format_cells(cells: &[(usize, usize)]) -> String {
    const SHOWN: usize = 20;
    let mut out: Vec<String> = cells
        .iter()
        .take(SHOWN)
        .map(|(r, c)| format!("({r}, {c})"))
        .collect();
    if cells.len() > SHOWN {
        out.push(format!("... {} more", cells.len() - SHOWN));
    }
    out.join(", ")
}
