//! Label grouping by normalized spectral clustering of the label columns.
//!
//! Affinity between labels is a heat kernel with locally scaled bandwidth
//! (`sigma_i * sigma_j`, `sigma_i` being the distance to the `nn`-th nearest
//! other label). The top eigenvectors of `D^-1/2 A D^-1/2` embed the labels,
//! rows are normalized and k-means assigns groups.

use std::cmp::Ordering;

use nalgebra::SymmetricEigen;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[derive(Debug, Clone, PartialEq)]
pub struct AffinityMatrix {
    pub a: Matrix,
    pub local_scales: Vec<f64>,
}

/// Assignment of each label to one of `k` groups.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupPartition {
    pub assignment: Vec<usize>,
    pub k: usize,
}

impl GroupPartition {
    /// Validates that every group in `0..k` is used.
    pub fn new(assignment: Vec<usize>, k: usize) -> Result<Self> {
        let mut used = vec![false; k];
        for &g in &assignment {
            if g >= k {
                return Err(Error::InvalidParameter(format!(
                    "group index {g} out of range for k = {k}"
                )));
            }
            used[g] = true;
        }
        if let Some(g) = used.iter().position(|u| !u) {
            return Err(Error::InvalidParameter(format!("group {g} has no labels")));
        }
        Ok(GroupPartition { assignment, k })
    }

    pub fn single(n_labels: usize) -> Self {
        GroupPartition {
            assignment: vec![0; n_labels],
            k: 1,
        }
    }

    pub fn n_labels(&self) -> usize {
        self.assignment.len()
    }

    /// Column indices of each group, ascending.
    pub fn groups(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.k];
        for (label, &g) in self.assignment.iter().enumerate() {
            groups[g].push(label);
        }
        groups
    }

    /// Renames groups by order of first appearance.
    pub fn canonical(&self) -> Self {
        let mut map = vec![usize::MAX; self.k];
        let mut next = 0;
        let assignment = self
            .assignment
            .iter()
            .map(|&g| {
                if map[g] == usize::MAX {
                    map[g] = next;
                    next += 1;
                }
                map[g]
            })
            .collect();
        GroupPartition { assignment, k: self.k }
    }

    /// True when both partitions group labels identically up to renaming.
    pub fn equivalent(&self, other: &Self) -> bool {
        self.k == other.k && self.canonical() == other.canonical()
    }

    /// `label_name,group_index` rows with a header.
    pub fn to_csv(&self, label_names: &[String]) -> Result<String> {
        if label_names.len() != self.n_labels() {
            return Err(Error::Dimension(format!(
                "{} label names for a partition of {} labels",
                label_names.len(),
                self.n_labels()
            )));
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["label_name", "group_index"])?;
        for (name, g) in label_names.iter().zip(&self.assignment) {
            w.write_record([name.as_str(), &g.to_string()])?;
        }
        Ok(String::from_utf8(w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?).expect("utf-8"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupingOptions {
    /// Neighbor order for the local scale; clamped to `L - 1`.
    pub nn: usize,
    pub restarts: usize,
    pub max_iterations: usize,
}

impl Default for GroupingOptions {
    fn default() -> Self {
        GroupingOptions {
            nn: 7,
            restarts: 10,
            max_iterations: 300,
        }
    }
}

fn column_sq_distances(y: &Matrix) -> Matrix {
    let l = y.ncols();
    let mut d = Matrix::zeros(l, l);
    for i in 0..l {
        for j in (i + 1)..l {
            let v = (y.column(i) - y.column(j)).norm_squared();
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    d
}

/// Heat-kernel affinity between the columns of `y` with self-tuned scales.
pub fn self_tuning_affinity(y: &Matrix, nn: usize) -> Result<AffinityMatrix> {
    let l = y.ncols();
    if l < 2 {
        return Err(Error::TooFewLabels(l));
    }
    if nn == 0 || nn > l - 1 {
        return Err(Error::InvalidParameter(format!(
            "neighbor order {nn} must lie in 1..={}",
            l - 1
        )));
    }
    let dist2 = column_sq_distances(y);
    let mut scales: Vec<f64> = (0..l)
        .map(|i| {
            let mut others: Vec<f64> = (0..l).filter(|&j| j != i).map(|j| dist2[(i, j)]).collect();
            others.sort_by(f64::total_cmp);
            others[nn - 1].sqrt()
        })
        .collect();
    let fallback = scales
        .iter()
        .copied()
        .filter(|&s| s > 0.0)
        .min_by(f64::total_cmp)
        .unwrap_or(1.0);
    for s in &mut scales {
        if *s == 0.0 {
            *s = fallback;
        }
    }

    let mut a = Matrix::identity(l, l);
    for i in 0..l {
        for j in (i + 1)..l {
            let v = (-dist2[(i, j)] / (scales[i] * scales[j]))
                .exp()
                .max(f64::MIN_POSITIVE);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    Ok(AffinityMatrix {
        a,
        local_scales: scales,
    })
}

/// `D^-1/2 A D^-1/2` with `D` the row sums of `a`.
pub fn normalized_affinity(a: &Matrix) -> Result<Matrix> {
    let degrees: Vec<f64> = a.row_iter().map(|r| r.sum()).collect();
    if let Some(i) = degrees.iter().position(|&d| !(d > 0.0)) {
        return Err(Error::DisconnectedLabel(i));
    }
    let inv_sqrt: Vec<f64> = degrees.iter().map(|d| 1.0 / d.sqrt()).collect();
    Ok(Matrix::from_fn(a.nrows(), a.ncols(), |i, j| {
        a[(i, j)] * (inv_sqrt[i] * inv_sqrt[j])
    }))
}

/// Eigenvectors of the `k` largest eigenvalues as columns, rows rescaled to unit length.
pub fn spectral_embedding(m: &Matrix, k: usize) -> Result<Matrix> {
    let l = m.nrows();
    if m.ncols() != l {
        return Err(Error::Dimension("affinity must be square".into()));
    }
    if k == 0 || k > l {
        return Err(Error::InvalidParameter(format!("k = {k} must lie in 1..={l}")));
    }
    let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, 10_000)
        .ok_or_else(|| Error::NumericalFailure("symmetric eigensolver did not converge".into()))?;
    if eig.eigenvalues.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericalFailure("non-finite eigenvalue".into()));
    }
    let mut order: Vec<usize> = (0..l).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[j]
            .total_cmp(&eig.eigenvalues[i])
            .then(i.cmp(&j))
    });

    let mut emb = Matrix::zeros(l, k);
    for (c, &idx) in order.iter().take(k).enumerate() {
        let mut v = eig.eigenvectors.column(idx).clone_owned();
        // Eigenvector signs are arbitrary; fix them so the embedding is reproducible.
        let sum = v.sum();
        let flip = if sum.abs() > 1e-10 * v.norm() {
            sum < 0.0
        } else {
            let pivot = v.iamax();
            v[pivot] < 0.0
        };
        if flip {
            v.neg_mut();
        }
        emb.set_column(c, &v);
    }
    for mut row in emb.row_iter_mut() {
        let n = row.norm();
        if n > 0.0 {
            row /= n;
        }
    }
    Ok(emb)
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

struct KMeansRun {
    assignment: Vec<usize>,
    inertia: f64,
}

fn kmeans_plus_plus(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut chosen = vec![rng.gen_range(0..n)];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &points[chosen[0]])).collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut pick = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if w > 0.0 {
                    if target < w {
                        pick = i;
                        break;
                    }
                    target -= w;
                    pick = i;
                }
            }
            pick
        } else {
            let free: Vec<usize> = (0..n).filter(|i| !chosen.contains(i)).collect();
            if free.is_empty() {
                rng.gen_range(0..n)
            } else {
                free[rng.gen_range(0..free.len())]
            }
        };
        chosen.push(next);
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(p, &points[next]));
        }
    }
    chosen.iter().map(|&i| points[i].clone()).collect()
}

fn centroids_of(points: &[Vec<f64>], assignment: &[usize], k: usize) -> Vec<Vec<f64>> {
    let dim = points[0].len();
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &c) in points.iter().zip(assignment) {
        counts[c] += 1;
        for (s, v) in sums[c].iter_mut().zip(p) {
            *s += v;
        }
    }
    for (s, &c) in sums.iter_mut().zip(&counts) {
        if c > 0 {
            s.iter_mut().for_each(|v| *v /= c as f64);
        }
    }
    sums
}

fn nearest(p: &[f64], centroids: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (c, centroid) in centroids.iter().enumerate() {
        let d = sq_dist(p, centroid);
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    best
}

/// Moves the point farthest from its centroid into each empty cluster.
fn repair_empty(points: &[Vec<f64>], assignment: &mut [usize], centroids: &[Vec<f64>], k: usize) {
    loop {
        let mut counts = vec![0usize; k];
        for &c in assignment.iter() {
            counts[c] += 1;
        }
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            return;
        };
        let far = (0..points.len())
            .filter(|&i| counts[assignment[i]] > 1)
            .max_by(|&i, &j| {
                sq_dist(&points[i], &centroids[assignment[i]])
                    .total_cmp(&sq_dist(&points[j], &centroids[assignment[j]]))
                    .then(j.cmp(&i))
            })
            .expect("k <= number of points");
        assignment[far] = empty;
    }
}

fn lloyd(points: &[Vec<f64>], k: usize, max_iterations: usize, rng: &mut ChaCha8Rng) -> KMeansRun {
    let mut centroids = kmeans_plus_plus(points, k, rng);
    let mut assignment: Vec<usize> = points.iter().map(|p| nearest(p, &centroids)).collect();
    repair_empty(points, &mut assignment, &centroids, k);
    for _ in 0..max_iterations {
        centroids = centroids_of(points, &assignment, k);
        let mut next: Vec<usize> = points.iter().map(|p| nearest(p, &centroids)).collect();
        repair_empty(points, &mut next, &centroids, k);
        if next == assignment {
            break;
        }
        assignment = next;
    }
    let centroids = centroids_of(points, &assignment, k);
    let inertia = points
        .iter()
        .zip(&assignment)
        .map(|(p, &c)| sq_dist(p, &centroids[c]))
        .sum();
    KMeansRun { assignment, inertia }
}

/// Seeded k-means++ / Lloyd clustering of the rows of `points`; best of
/// `restarts` runs by within-cluster sum of squares.
///
/// Rows are visited in lexicographic order so the result does not depend on
/// the input row order. Groups are numbered by first appearance.
pub fn kmeans_assign(
    points: &Matrix,
    k: usize,
    seed: u64,
    restarts: usize,
    max_iterations: usize,
) -> Result<GroupPartition> {
    let n = points.nrows();
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!(
            "cluster count {k} must lie in 1..={n}"
        )));
    }
    let rows: Vec<Vec<f64>> = points.row_iter().map(|r| r.iter().copied().collect()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        rows[i]
            .iter()
            .zip(&rows[j])
            .map(|(a, b)| a.total_cmp(b))
            .find(|o| *o != Ordering::Equal)
            .unwrap_or(Ordering::Equal)
            .then(i.cmp(&j))
    });
    let sorted: Vec<Vec<f64>> = order.iter().map(|&i| rows[i].clone()).collect();

    let mut best: Option<KMeansRun> = None;
    for r in 0..restarts.max(1) as u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(r.wrapping_mul(0x9E37_79B9_7F4A_7C15)));
        let run = lloyd(&sorted, k, max_iterations, &mut rng);
        if best.as_ref().map_or(true, |b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    let best = best.expect("at least one restart");
    let mut assignment = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        assignment[i] = best.assignment[pos];
    }
    Ok(GroupPartition { assignment, k }.canonical())
}

/// Within-cluster sum of squared distances of `partition` over the rows of `points`.
pub fn within_cluster_ss(points: &Matrix, partition: &GroupPartition) -> f64 {
    let rows: Vec<Vec<f64>> = points.row_iter().map(|r| r.iter().copied().collect()).collect();
    let centroids = centroids_of(&rows, &partition.assignment, partition.k);
    rows.iter()
        .zip(&partition.assignment)
        .map(|(p, &c)| sq_dist(p, &centroids[c]))
        .sum()
}

/// Groups the label columns of `y` into `k` groups.
pub fn group_labels(
    y: &Matrix,
    k: usize,
    seed: u64,
    options: &GroupingOptions,
) -> Result<GroupPartition> {
    let l = y.ncols();
    if k == 0 || k > l {
        return Err(Error::InvalidParameter(format!(
            "group count {k} must lie in 1..={l}"
        )));
    }
    if k == 1 {
        return Ok(GroupPartition::single(l));
    }
    let nn = options.nn.clamp(1, l - 1);
    let affinity = self_tuning_affinity(y, nn)?;
    let normalized = normalized_affinity(&affinity.a)?;
    let embedding = spectral_embedding(&normalized, k)?;
    kmeans_assign(&embedding, k, seed, options.restarts, options.max_iterations)
}
