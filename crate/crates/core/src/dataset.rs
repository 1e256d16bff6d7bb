use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// One data view: an objects × features table.
#[derive(Debug, Clone, PartialEq)]
pub struct View {
    pub name: String,
    pub feature_names: Vec<String>,
    pub data: Matrix,
}

/// Views measured on a shared, ordered set of objects.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiViewDataset {
    pub object_ids: Vec<String>,
    pub views: Vec<View>,
}

impl MultiViewDataset {
    pub fn new(object_ids: Vec<String>, views: Vec<View>) -> Result<Self> {
        let ds = MultiViewDataset { object_ids, views };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        if self.views.is_empty() {
            return Err(Error::DegenerateInput("dataset has no views".into()));
        }
        for v in &self.views {
            if v.data.rows() != self.object_ids.len() {
                return Err(Error::DimensionMismatch(format!(
                    "view {} has {} rows for {} objects",
                    v.name,
                    v.data.rows(),
                    self.object_ids.len()
                )));
            }
            if v.feature_names.len() != v.data.cols() {
                return Err(Error::DimensionMismatch(format!(
                    "view {} names {} features but has {} columns",
                    v.name,
                    v.feature_names.len(),
                    v.data.cols()
                )));
            }
        }
        for (i, v) in self.views.iter().enumerate() {
            if self.views[..i].iter().any(|w| w.name == v.name) {
                return Err(Error::InvalidConfig(format!("duplicate view name {}", v.name)));
            }
        }
        Ok(())
    }

    pub fn objects(&self) -> usize {
        self.object_ids.len()
    }

    pub fn view_index(&self, name: &str) -> Option<usize> {
        self.views.iter().position(|v| v.name == name)
    }

    pub fn names(&self) -> Vec<String> {
        self.views.iter().map(|v| v.name.clone()).collect()
    }

    pub fn matrices(&self) -> Vec<Matrix> {
        self.views.iter().map(|v| v.data.clone()).collect()
    }
}
