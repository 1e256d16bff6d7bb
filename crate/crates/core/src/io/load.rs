use std::collections::{BTreeSet, HashMap};

use super::config::RunConfig;
use super::table::{read_table, Table};
use crate::dataset::{MultiViewDataset, View};
use crate::error::{Error, Result};

/// Aligns tables to the first table's object order and checks shapes.
/// `pairs` lists view index pairs that must share a feature count.
pub fn align_tables(names: &[String], tables: Vec<Table>, pairs: &[(usize, usize)]) -> Result<MultiViewDataset> {
    let reference = tables
        .first()
        .ok_or_else(|| Error::DegenerateInput("no views to load".into()))?
        .object_ids
        .clone();
    let reference_set: BTreeSet<&str> = reference.iter().map(String::as_str).collect();
    let mut views = Vec::with_capacity(tables.len());
    for (name, table) in names.iter().zip(tables) {
        let ids: BTreeSet<&str> = table.object_ids.iter().map(String::as_str).collect();
        let diff: Vec<String> = reference_set
            .symmetric_difference(&ids)
            .map(|s| (*s).to_owned())
            .collect();
        if !diff.is_empty() {
            return Err(Error::IdentifierMismatch(diff));
        }
        let position: HashMap<&str, usize> = table
            .object_ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.as_str(), i))
            .collect();
        let order: Vec<usize> = reference.iter().map(|id| position[id.as_str()]).collect();
        let data = table.data.select_rows(&order);
        let missing = data.missing_cells();
        if !missing.is_empty() {
            return Err(Error::MissingValues(missing));
        }
        views.push(View {
            name: name.clone(),
            feature_names: table.feature_names,
            data,
        });
    }
    for &(a, b) in pairs {
        let (da, db) = (views[a].data.cols(), views[b].data.cols());
        if da != db {
            return Err(Error::DimensionMismatch(format!(
                "views {} ({da} features) and {} ({db} features) are linked by an edge and must match",
                views[a].name, views[b].name
            )));
        }
    }
    MultiViewDataset::new(reference, views)
}

/// Reads every view of `config`, aligned to the first view's object order.
pub fn load_multiview(config: &RunConfig) -> Result<MultiViewDataset> {
    config.validate()?;
    let tables = config
        .views
        .iter()
        .map(|v| read_table(&v.path))
        .collect::<Result<Vec<_>>>()?;
    let names: Vec<String> = config.views.iter().map(|v| v.name.clone()).collect();
    let graph = config.graph()?;
    align_tables(&names, tables, graph.edges())
}
