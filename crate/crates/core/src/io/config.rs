use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gibbs::{ModelConfig, SamplerConfig};
use crate::model::DirectionalGraph;

/// Environment variable naming the root for outputs without an explicit path.
pub const OUTPUT_ROOT_ENV: &str = "DMVC_OUTPUT_ROOT";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ViewSpec {
    pub name: String,
    pub path: PathBuf,
    /// Marks the view whose clustering is the consensus.
    #[serde(default, rename = "final")]
    pub is_final: bool,
    /// Overrides the shared Dirichlet mass for this view.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

/// A directed edge between two named views.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeSpec {
    pub source: String,
    pub target: String,
}

/// Settings for `fit`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub views: Vec<ViewSpec>,
    #[serde(default)]
    pub edges: Vec<EdgeSpec>,
    #[serde(default)]
    pub sampler: SamplerConfig,
    #[serde(default)]
    pub model: ModelConfig,
    /// Output directory; defaults to `$DMVC_OUTPUT_ROOT/<config name>`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let c: RunConfig = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    /// Reads a config file. Relative view and output paths are taken
    /// relative to the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = Self::from_json(&text)?;
        if let Some(base) = path.parent() {
            for v in &mut config.views {
                v.path = base.join(&v.path);
            }
            if let Some(out) = config.output.as_mut() {
                *out = base.join(&*out);
            }
        }
        Ok(config)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.views.is_empty() {
            return Err(Error::InvalidConfig("at least one view is required".into()));
        }
        for (i, v) in self.views.iter().enumerate() {
            if self.views[..i].iter().any(|w| w.name == v.name) {
                return Err(Error::InvalidConfig(format!("duplicate view name {}", v.name)));
            }
        }
        let finals = self.views.iter().filter(|v| v.is_final).count();
        if finals != 1 {
            return Err(Error::InvalidConfig(format!("exactly one view must be final, found {finals}")));
        }
        self.graph()?;
        Ok(())
    }

    pub fn view_index(&self, name: &str) -> Result<usize> {
        self.views
            .iter()
            .position(|v| v.name == name)
            .ok_or_else(|| Error::InvalidConfig(format!("edge names undeclared view {name}")))
    }

    pub fn graph(&self) -> Result<DirectionalGraph> {
        let edges = self
            .edges
            .iter()
            .map(|e| Ok((self.view_index(&e.source)?, self.view_index(&e.target)?)))
            .collect::<Result<Vec<_>>>()?;
        DirectionalGraph::new(self.views.len(), edges)
    }

    pub fn final_view(&self) -> usize {
        self.views.iter().position(|v| v.is_final).expect("validated")
    }

    /// The configured output directory, or one named after `config_path`
    /// under the output root.
    pub fn output_dir(&self, config_path: &Path) -> PathBuf {
        self.output.clone().unwrap_or_else(|| default_output(config_path))
    }
}

/// `$DMVC_OUTPUT_ROOT/<file stem>`, or `./<file stem>` when unset.
pub fn default_output(config_path: &Path) -> PathBuf {
    let stem = config_path
        .file_stem()
        .map_or_else(|| "run".into(), |s| s.to_string_lossy().into_owned());
    let root = std::env::var_os(OUTPUT_ROOT_ENV).map_or_else(|| PathBuf::from("."), PathBuf::from);
    root.join(stem)
}
