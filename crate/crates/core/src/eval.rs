//! Posterior summaries and clustering metrics.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pairwise co-clustering frequencies, row-major `N × N`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SimilarityMatrix {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }
}

/// Fraction of `draws` in which each pair shares a label.
pub fn similarity_matrix<'a>(draws: impl IntoIterator<Item = &'a [u32]>) -> Result<SimilarityMatrix> {
    let mut counts: Vec<u32> = Vec::new();
    let mut n = 0;
    let mut total = 0u32;
    for labels in draws {
        if total == 0 {
            n = labels.len();
            counts = vec![0; n * n];
        } else if labels.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "draw of length {} in a trace of {n} objects",
                labels.len()
            )));
        }
        total += 1;
        for i in 0..n {
            counts[i * n + i] += 1;
            for j in i + 1..n {
                if labels[i] == labels[j] {
                    counts[i * n + j] += 1;
                    counts[j * n + i] += 1;
                }
            }
        }
    }
    if total == 0 {
        return Err(Error::EmptyTrace);
    }
    let t = f64::from(total);
    Ok(SimilarityMatrix {
        n,
        data: counts.into_iter().map(|c| f64::from(c) / t).collect(),
    })
}

fn squared_loss(labels: &[u32], sim: &SimilarityMatrix) -> f64 {
    let n = labels.len();
    let mut loss = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let same = if labels[i] == labels[j] { 1.0 } else { 0.0 };
            loss += (same - sim.get(i, j)).powi(2);
        }
    }
    loss
}

/// The draw closest to `sim` in squared distance; ties go to the earliest.
pub fn consensus_labels<'a>(
    draws: impl IntoIterator<Item = &'a [u32]>,
    sim: &SimilarityMatrix,
) -> Result<Vec<u32>> {
    let mut best: Option<(f64, &[u32])> = None;
    for d in draws {
        let loss = squared_loss(d, sim);
        if best.is_none_or(|(l, _)| loss < l) {
            best = Some((loss, d));
        }
    }
    best.map(|(_, d)| d.to_vec()).ok_or(Error::EmptyTrace)
}

/// Renumbers labels 0, 1, ... in order of first appearance.
pub fn relabel(labels: &[u32]) -> Vec<u32> {
    let mut seen: Vec<u32> = Vec::new();
    labels
        .iter()
        .map(|l| match seen.iter().position(|s| s == l) {
            Some(p) => p as u32,
            None => {
                seen.push(*l);
                (seen.len() - 1) as u32
            }
        })
        .collect()
}

/// Maximum-weight assignment of rows to columns on a rectangular table.
/// Returns the matched column of each row, `None` for rows left over.
pub fn max_weight_assignment(weights: &[Vec<f64>]) -> Vec<Option<usize>> {
    let rows = weights.len();
    let cols = weights.first().map_or(0, Vec::len);
    let size = rows.max(cols);
    if size == 0 {
        return Vec::new();
    }
    let top = weights
        .iter()
        .flatten()
        .fold(0.0f64, |a, &b| a.max(b));
    let cost = |i: usize, j: usize| -> f64 {
        if i < rows && j < cols {
            top - weights[i][j]
        } else {
            top
        }
    };
    // Shortest augmenting paths with potentials, 1-based with a virtual column 0.
    let mut u = vec![0.0; size + 1];
    let mut v = vec![0.0; size + 1];
    let mut owner = vec![0usize; size + 1];
    let mut way = vec![0usize; size + 1];
    for i in 1..=size {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; size + 1];
        let mut used = vec![false; size + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=size {
                if !used[j] {
                    let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=size {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut out = vec![None; rows];
    for j in 1..=size {
        let i = owner[j];
        if i >= 1 && i <= rows && j <= cols {
            out[i - 1] = Some(j - 1);
        }
    }
    out
}

fn compact(labels: &[u32]) -> (Vec<usize>, usize) {
    let mut ids = BTreeMap::new();
    for &l in labels {
        let next = ids.len();
        ids.entry(l).or_insert(next);
    }
    (labels.iter().map(|l| ids[l]).collect(), ids.len())
}

fn check_lengths(a: &[u32], b: &[u32]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "label vectors of length {} and {}",
            a.len(),
            b.len()
        )));
    }
    Ok(())
}

/// Cross-tabulation of two labelings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionTable {
    /// Distinct truth labels, ascending.
    pub truth_labels: Vec<u32>,
    /// Distinct estimated labels, ascending.
    pub estimated_labels: Vec<u32>,
    /// `counts[t][e]`: objects with truth `truth_labels[t]` and estimate `estimated_labels[e]`.
    pub counts: Vec<Vec<usize>>,
}

pub fn confusion_table(est: &[u32], truth: &[u32]) -> Result<ConfusionTable> {
    check_lengths(est, truth)?;
    let mut truth_labels: Vec<u32> = truth.to_vec();
    truth_labels.sort_unstable();
    truth_labels.dedup();
    let mut estimated_labels: Vec<u32> = est.to_vec();
    estimated_labels.sort_unstable();
    estimated_labels.dedup();
    let mut counts = vec![vec![0; estimated_labels.len()]; truth_labels.len()];
    for (e, t) in est.iter().zip(truth) {
        let ti = truth_labels.binary_search(t).expect("present");
        let ei = estimated_labels.binary_search(e).expect("present");
        counts[ti][ei] += 1;
    }
    Ok(ConfusionTable {
        truth_labels,
        estimated_labels,
        counts,
    })
}

/// Matched fraction under the best one-to-one mapping of estimated to truth labels.
pub fn best_permutation_accuracy(est: &[u32], truth: &[u32]) -> Result<f64> {
    check_lengths(est, truth)?;
    if est.is_empty() {
        return Ok(1.0);
    }
    let table = confusion_table(est, truth)?;
    // Rows are estimated labels.
    let weights: Vec<Vec<f64>> = (0..table.estimated_labels.len())
        .map(|e| table.counts.iter().map(|row| row[e] as f64).collect())
        .collect();
    let matched: usize = max_weight_assignment(&weights)
        .iter()
        .enumerate()
        .filter_map(|(e, t)| t.map(|t| table.counts[t][e]))
        .sum();
    Ok(matched as f64 / est.len() as f64)
}

/// Fraction of object pairs on which two partitions agree.
pub fn rand_index(a: &[u32], b: &[u32]) -> Result<f64> {
    check_lengths(a, b)?;
    let n = a.len();
    if n < 2 {
        return Err(Error::DegenerateInput("Rand index needs at least two objects".into()));
    }
    let (a, _) = compact(a);
    let (b, _) = compact(b);
    let mut agree = 0u64;
    for i in 0..n {
        for j in i + 1..n {
            if (a[i] == a[j]) == (b[i] == b[j]) {
                agree += 1;
            }
        }
    }
    Ok(agree as f64 / (n * (n - 1) / 2) as f64)
}

/// Distribution of the number of distinct labels per draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterCountSummary {
    /// `(count, draws)` pairs, ascending by count.
    pub histogram: Vec<(usize, usize)>,
    pub mode: usize,
    pub mean: f64,
}

pub fn cluster_count_summary<'a>(draws: impl IntoIterator<Item = &'a [u32]>) -> Result<ClusterCountSummary> {
    let mut hist: BTreeMap<usize, usize> = BTreeMap::new();
    for d in draws {
        *hist.entry(compact(d).1).or_default() += 1;
    }
    let total: usize = hist.values().sum();
    if total == 0 {
        return Err(Error::EmptyTrace);
    }
    let mode = hist
        .iter()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
        .map(|(&c, _)| c)
        .expect("nonempty");
    let mean = hist.iter().map(|(&c, &k)| (c * k) as f64).sum::<f64>() / total as f64;
    Ok(ClusterCountSummary {
        histogram: hist.into_iter().collect(),
        mode,
        mean,
    })
}

/// Object order for display: by `labels`, then by index.
pub fn display_order(labels: &[u32]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..labels.len()).collect();
    order.sort_by_key(|&i| (labels[i], i));
    order
}

/// Binary PGM (P5) image of `sim`, rows and columns in `order`;
/// 0 maps to black and 1 to white.
pub fn similarity_pgm(sim: &SimilarityMatrix, order: &[usize]) -> Vec<u8> {
    let n = order.len();
    let mut out = format!("P5\n{n} {n}\n255\n").into_bytes();
    out.reserve(n * n);
    for &i in order {
        for &j in order {
            out.push((sim.get(i, j) * 255.0).round().clamp(0.0, 255.0) as u8);
        }
    }
    out
}
