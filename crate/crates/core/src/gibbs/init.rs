use rand::Rng;

use crate::eval::max_weight_assignment;
use crate::matrix::Matrix;

fn standardized(data: &Matrix) -> Matrix {
    let mut out = data.clone();
    let n = data.rows() as f64;
    for c in 0..data.cols() {
        let col = data.column(c);
        let mean = col.iter().sum::<f64>() / n;
        let sd = (col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
        let scale = if sd > 0.0 { sd } else { 1.0 };
        for (r, x) in col.iter().enumerate() {
            out.set(r, c, (x - mean) / scale);
        }
    }
    out
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

fn nearest(x: &[f64], centres: &[Vec<f64>]) -> usize {
    let mut best = (f64::INFINITY, 0);
    for (c, centre) in centres.iter().enumerate() {
        let d = sq_dist(x, centre);
        if d < best.0 {
            best = (d, c);
        }
    }
    best.1
}

/// Farthest-point seeding of up to `clusters` centres on standardized
/// features, followed by one nearest-centroid pass. Labels are `0..clusters`.
pub fn farthest_point_labels<R: Rng + ?Sized>(data: &Matrix, clusters: usize, rng: &mut R) -> Vec<usize> {
    let n = data.rows();
    if n == 0 {
        return Vec::new();
    }
    let z = standardized(data);
    let first = rng.random_range(0..n);
    let mut seeds = vec![first];
    let mut dist: Vec<f64> = (0..n).map(|i| sq_dist(z.row(i), z.row(first))).collect();
    while seeds.len() < clusters.min(n) {
        let (far, d) = dist
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, &d)| if d > acc.1 { (i, d) } else { acc });
        if d <= 0.0 {
            break;
        }
        seeds.push(far);
        for (i, di) in dist.iter_mut().enumerate() {
            *di = di.min(sq_dist(z.row(i), z.row(far)));
        }
    }
    let centres: Vec<Vec<f64>> = seeds.iter().map(|&s| z.row(s).to_vec()).collect();
    let labels: Vec<usize> = (0..n).map(|i| nearest(z.row(i), &centres)).collect();

    let d = z.cols();
    let mut sums = vec![vec![0.0; d]; centres.len()];
    let mut counts = vec![0usize; centres.len()];
    for (i, &l) in labels.iter().enumerate() {
        counts[l] += 1;
        for (s, x) in sums[l].iter_mut().zip(z.row(i)) {
            *s += x;
        }
    }
    let centroids: Vec<Vec<f64>> = sums
        .into_iter()
        .zip(&counts)
        .zip(&centres)
        .map(|((s, &c), seed)| {
            if c == 0 {
                seed.clone()
            } else {
                s.into_iter().map(|x| x / c as f64).collect()
            }
        })
        .collect();
    (0..n).map(|i| nearest(z.row(i), &centroids)).collect()
}

/// Relabels `labels` so they overlap `reference` as much as possible. Both
/// must take values in `0..k`.
pub fn align_labels(reference: &[usize], labels: &mut [usize], k: usize) {
    let mut overlap = vec![vec![0.0; k]; k];
    for (&l, &r) in labels.iter().zip(reference) {
        overlap[l][r] += 1.0;
    }
    let assignment = max_weight_assignment(&overlap);
    let map: Vec<usize> = assignment.iter().enumerate().map(|(l, a)| a.unwrap_or(l)).collect();
    for l in labels.iter_mut() {
        *l = map[*l];
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn separates_obvious_groups() {
        let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![if i < 20 { 0.0 } else { 10.0 } + (i % 5) as f64 * 0.1]).collect();
        let m = Matrix::from_rows(&rows).unwrap();
        let l = farthest_point_labels(&m, 2, &mut ChaCha8Rng::seed_from_u64(1));
        assert!(l[..20].iter().all(|&x| x == l[0]));
        assert!(l[20..].iter().all(|&x| x == l[20]));
        assert_ne!(l[0], l[20]);
        let constant = Matrix::column_vector(&[1.0; 6]);
        let l = farthest_point_labels(&constant, 4, &mut ChaCha8Rng::seed_from_u64(1));
        assert!(l.iter().all(|&x| x == 0));
    }

    #[test]
    fn alignment_undoes_permutation() {
        let reference = [0, 0, 1, 1, 2, 2];
        let mut labels = [2, 2, 0, 0, 1, 1];
        align_labels(&reference, &mut labels, 3);
        assert_eq!(labels, reference);
    }
}
