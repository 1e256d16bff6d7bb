use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// An objects × features table read from CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub object_ids: Vec<String>,
    pub feature_names: Vec<String>,
    pub data: Matrix,
}

fn is_missing(cell: &str) -> bool {
    matches!(cell, "" | "NA" | "na" | "NaN" | "nan")
}

/// Parses a CSV whose first column holds object identifiers and whose
/// header row names the features. Missing cells become NaN.
pub fn parse_table(reader: impl Read, path: &Path) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.len() < 2 {
        return Err(Error::DegenerateInput(format!(
            "{}: need an identifier column and at least one feature",
            path.display()
        )));
    }
    let feature_names: Vec<String> = header.iter().skip(1).map(str::to_owned).collect();
    let d = feature_names.len();
    let mut object_ids = Vec::new();
    let mut data = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        // Line 1 is the header.
        let line = r + 2;
        if record.len() != d + 1 {
            return Err(Error::DimensionMismatch(format!(
                "{}: line {line} has {} cells, header has {}",
                path.display(),
                record.len(),
                d + 1
            )));
        }
        object_ids.push(record[0].to_owned());
        for (c, cell) in record.iter().enumerate().skip(1) {
            let x = if is_missing(cell) {
                f64::NAN
            } else {
                match cell.parse::<f64>() {
                    Ok(x) if x.is_finite() => x,
                    _ => {
                        return Err(Error::NonNumeric {
                            path: path.to_path_buf(),
                            row: line,
                            column: c + 1,
                            value: cell.to_owned(),
                        })
                    }
                }
            };
            data.push(x);
        }
    }
    if object_ids.is_empty() {
        return Err(Error::DegenerateInput(format!("{}: no data rows", path.display())));
    }
    let mut seen = std::collections::HashSet::new();
    if let Some(dup) = object_ids.iter().find(|id| !seen.insert(id.as_str())) {
        return Err(Error::InvalidConfig(format!("{}: duplicate object identifier {dup}", path.display())));
    }
    let rows = object_ids.len();
    Ok(Table {
        object_ids,
        feature_names,
        data: Matrix::new(rows, d, data)?,
    })
}

pub fn read_table(path: &Path) -> Result<Table> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_table(BufReader::new(file), path)
}

/// Writes `table` in the format [`read_table`] accepts.
pub fn write_table(out: impl Write, id_header: &str, table: &Table) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec![id_header.to_owned()];
    header.extend(table.feature_names.iter().cloned());
    w.write_record(&header)?;
    for (r, id) in table.object_ids.iter().enumerate() {
        let mut row = vec![id.clone()];
        row.extend(table.data.row(r).iter().map(|x| x.to_string()));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

/// Reads an `id,label` CSV.
pub fn read_labels(path: &Path) -> Result<(Vec<String>, Vec<u32>)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(BufReader::new(file));
    let mut ids = Vec::new();
    let mut labels = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        if record.len() < 2 {
            return Err(Error::DimensionMismatch(format!("{}: line {} needs id and label", path.display(), r + 2)));
        }
        ids.push(record[0].to_owned());
        labels.push(record[1].parse::<u32>().map_err(|_| Error::NonNumeric {
            path: path.to_path_buf(),
            row: r + 2,
            column: 2,
            value: record[1].to_owned(),
        })?);
    }
    Ok((ids, labels))
}

pub fn write_labels(out: impl Write, ids: &[String], labels: &[u32]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["id", "label"])?;
    for (id, l) in ids.iter().zip(labels) {
        w.write_record([id.as_str(), &l.to_string()])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}
