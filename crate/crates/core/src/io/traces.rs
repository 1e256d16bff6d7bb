use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use flate2::read::GzDecoder;
use flate2::{Compression, GzBuilder};
use serde::{Deserialize, Serialize};

use super::config::{EdgeSpec, RunConfig};
use crate::error::{Error, Result};
use crate::gibbs::ChainTrace;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const PAIR_FITS_FILE: &str = "pair_fits.json";
pub const TIMINGS_FILE: &str = "timings.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewSummary {
    pub name: String,
    pub features: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainFiles {
    pub seed: u64,
    pub labels: String,
    pub diagnostics: String,
    pub retained: usize,
}

/// Everything needed to reread a fit, minus timings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub config: RunConfig,
    pub object_ids: Vec<String>,
    pub views: Vec<ViewSummary>,
    pub edges: Vec<EdgeSpec>,
    pub final_view: String,
    pub k: usize,
    pub chains: Vec<ChainFiles>,
}

/// Wall-clock seconds, kept apart from the reproducible outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub pair_fits_seconds: f64,
    pub chain_seconds: f64,
    pub total_seconds: f64,
}

pub(crate) fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?))
}

/// Gzip writer with a zero timestamp so identical content gives identical bytes.
pub(crate) fn create_gz(path: &Path) -> Result<impl Write> {
    Ok(GzBuilder::new().mtime(0).write(create(path)?, Compression::default()))
}

fn open_gz(path: &Path) -> Result<impl Read> {
    Ok(GzDecoder::new(BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?)))
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

pub(crate) fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

fn finish(path: &Path, w: csv::Writer<impl Write>) -> Result<()> {
    w.into_inner()
        .map_err(|e| Error::io(path, std::io::Error::other(e.to_string())))?
        .flush()
        .map_err(|e| Error::io(path, e))
}

/// Labels as `draw,view,<object ids…>` rows, 1-based labels.
pub fn write_label_trace(path: &Path, trace: &ChainTrace, object_ids: &[String]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create_gz(path)?);
    let mut header = vec!["draw".to_owned(), "view".to_owned()];
    header.extend(object_ids.iter().cloned());
    w.write_record(&header)?;
    for (d, draw) in trace.draws.iter().enumerate() {
        for (v, labels) in draw.iter().enumerate() {
            let mut row = vec![d.to_string(), trace.view_names[v].clone()];
            row.extend(labels.iter().map(|l| (l + 1).to_string()));
            w.write_record(&row)?;
        }
    }
    finish(path, w)
}

/// Per-sweep log joint, edge strengths and occupied counts.
pub fn write_diagnostics(path: &Path, trace: &ChainTrace) -> Result<()> {
    let mut w = csv::Writer::from_writer(create_gz(path)?);
    let mut header = vec!["sweep".to_owned(), "log_joint".to_owned()];
    header.extend(
        trace
            .edges
            .iter()
            .map(|&(a, b)| format!("rho:{}->{}", trace.view_names[a], trace.view_names[b])),
    );
    header.extend(trace.view_names.iter().map(|n| format!("occupied:{n}")));
    w.write_record(&header)?;
    for s in 0..trace.log_joint.len() {
        let mut row = vec![(s + 1).to_string(), trace.log_joint[s].to_string()];
        row.extend(trace.rho[s].iter().map(|r| r.to_string()));
        row.extend(trace.occupied[s].iter().map(|c| c.to_string()));
        w.write_record(&row)?;
    }
    finish(path, w)
}

fn parse<T: std::str::FromStr>(path: &Path, row: usize, column: usize, cell: &str) -> Result<T> {
    cell.parse().map_err(|_| Error::NonNumeric {
        path: path.to_path_buf(),
        row,
        column,
        value: cell.to_owned(),
    })
}

/// Rebuilds a chain from its two trace files.
pub fn read_chain(dir: &Path, manifest: &RunManifest, files: &ChainFiles) -> Result<ChainTrace> {
    let names: Vec<String> = manifest.views.iter().map(|v| v.name.clone()).collect();
    let view_of = |name: &str| names.iter().position(|n| n == name);
    let edges = manifest
        .edges
        .iter()
        .map(|e| match (view_of(&e.source), view_of(&e.target)) {
            (Some(a), Some(b)) => Ok((a, b)),
            _ => Err(Error::InvalidConfig(format!("manifest edge {} -> {} names an unknown view", e.source, e.target))),
        })
        .collect::<Result<Vec<_>>>()?;
    let n = manifest.object_ids.len();
    let m = names.len();

    let path = dir.join(&files.labels);
    let mut rdr = csv::Reader::from_reader(open_gz(&path)?);
    let header = rdr.headers()?.clone();
    if header.len() != n + 2 || header.iter().skip(2).ne(manifest.object_ids.iter().map(String::as_str)) {
        return Err(Error::DimensionMismatch(format!("{}: object columns differ from the manifest", path.display())));
    }
    let mut draws: Vec<Vec<Vec<u32>>> = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = r + 2;
        let d: usize = parse(&path, line, 1, &rec[0])?;
        let v = view_of(&rec[1]).ok_or_else(|| Error::InvalidConfig(format!("{}: unknown view {}", path.display(), &rec[1])))?;
        if d == draws.len() {
            draws.push(vec![Vec::new(); m]);
        }
        if d + 1 != draws.len() || !draws[d][v].is_empty() {
            return Err(Error::InvalidConfig(format!("{}: rows out of order at line {line}", path.display())));
        }
        let labels = rec
            .iter()
            .enumerate()
            .skip(2)
            .map(|(c, cell)| parse::<u32>(&path, line, c + 1, cell).map(|l| l.saturating_sub(1)))
            .collect::<Result<Vec<u32>>>()?;
        draws[d][v] = labels;
    }
    if draws.iter().any(|d| d.iter().any(|l| l.len() != n)) {
        return Err(Error::DimensionMismatch(format!("{}: incomplete draw", path.display())));
    }

    let path = dir.join(&files.diagnostics);
    let mut rdr = csv::Reader::from_reader(open_gz(&path)?);
    let e = edges.len();
    let (mut log_joint, mut rho, mut occupied) = (Vec::new(), Vec::new(), Vec::new());
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = r + 2;
        if rec.len() != 2 + e + m {
            return Err(Error::DimensionMismatch(format!("{}: line {line} has {} cells", path.display(), rec.len())));
        }
        log_joint.push(parse(&path, line, 2, &rec[1])?);
        rho.push((0..e).map(|j| parse(&path, line, 3 + j, &rec[2 + j])).collect::<Result<Vec<f64>>>()?);
        occupied.push((0..m).map(|j| parse(&path, line, 3 + e + j, &rec[2 + e + j])).collect::<Result<Vec<usize>>>()?);
    }
    Ok(ChainTrace {
        seed: files.seed,
        k: manifest.k,
        view_names: names.clone(),
        final_view: view_of(&manifest.final_view)
            .ok_or_else(|| Error::InvalidConfig("manifest final view is not a view".into()))?,
        edges,
        draws,
        log_joint,
        rho,
        occupied,
    })
}

/// A fit directory read back from disk.
#[derive(Debug, Clone)]
pub struct TraceBundle {
    pub manifest: RunManifest,
    pub chains: Vec<ChainTrace>,
}

pub fn read_trace_dir(dir: &Path) -> Result<TraceBundle> {
    let manifest_path = dir.join(MANIFEST_FILE);
    if !manifest_path.exists() {
        return Err(Error::EmptyTrace);
    }
    let manifest: RunManifest = read_json(&manifest_path)?;
    let chains = manifest
        .chains
        .iter()
        .map(|f| read_chain(dir, &manifest, f))
        .collect::<Result<Vec<_>>>()?;
    if chains.iter().all(|c| c.draws.is_empty()) {
        return Err(Error::EmptyTrace);
    }
    Ok(TraceBundle { manifest, chains })
}
