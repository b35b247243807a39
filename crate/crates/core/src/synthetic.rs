//! Seeded synthetic datasets with known generating structure.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dataset::MultiLabelDataset;
use crate::error::Result;
use crate::linalg::Matrix;
use crate::predictor::decide;

fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

fn names(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

/// Flips the sign of the smallest-magnitude score so a label column is never
/// constant.
fn ensure_both_signs(scores: &Matrix, y: &mut Matrix) {
    for j in 0..y.ncols() {
        let pos = y.column(j).iter().filter(|&&v| v > 0.0).count();
        if pos == 0 || pos == y.nrows() {
            let i = scores.column(j).iamin();
            y[(i, j)] = -y[(i, j)];
        }
    }
}

/// `Y = sign(X W)` for Gaussian `X` (n x d) and a sparse planted `W` with
/// three nonzero features per label.
pub fn planted_linear(n: usize, d: usize, l: usize, seed: u64) -> Result<MultiLabelDataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = gaussian(&mut rng, n, d);
    let mut w = Matrix::zeros(d, l);
    let features: Vec<usize> = (0..d).collect();
    for j in 0..l {
        for &f in features.choose_multiple(&mut rng, 3.min(d)) {
            w[(f, j)] = rng.sample(StandardNormal);
        }
    }
    let scores = &x * &w;
    let mut y = decide(&scores);
    ensure_both_signs(&scores, &mut y);
    MultiLabelDataset::new("planted", x, y, names("x", d), names("y", l))
}

/// Two label groups of `per_group` labels each. Group `g` is driven only by
/// latent factors `3g..3g+3`; features are a noisy linear mix of all six.
pub fn two_group_factors(n: usize, per_group: usize, seed: u64) -> Result<MultiLabelDataset> {
    const FACTORS: usize = 6;
    const FEATURES: usize = 12;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f = gaussian(&mut rng, n, FACTORS);
    let l = 2 * per_group;
    let mut b = Matrix::zeros(FACTORS, l);
    for j in 0..l {
        let g = j / per_group;
        for r in 3 * g..3 * g + 3 {
            b[(r, j)] = rng.sample(StandardNormal);
        }
    }
    let scores = &f * &b;
    let mut y = decide(&scores);
    ensure_both_signs(&scores, &mut y);
    let mix = gaussian(&mut rng, FACTORS, FEATURES);
    let x = &f * mix + gaussian(&mut rng, n, FEATURES) * 0.1;
    MultiLabelDataset::new("two-group", x, y, names("x", FEATURES), names("y", l))
}

/// The bundled smoke-test dataset: 50 instances, 12 features, 12 labels in
/// three correlated blocks.
pub fn synthetic50() -> Result<MultiLabelDataset> {
    const N: usize = 50;
    const D: usize = 12;
    const L: usize = 12;
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    let f = gaussian(&mut rng, N, 3);
    let mut b = Matrix::zeros(3, L);
    for j in 0..L {
        b[(j / 4, j)] = 1.0 + rng.gen::<f64>();
        b[((j / 4 + 1) % 3, j)] = 0.3 * rng.sample::<f64, _>(StandardNormal);
    }
    let thresholds = Matrix::from_fn(N, L, |_, j| 0.3 * (j % 4) as f64);
    let scores = &f * &b - thresholds;
    let mut y = decide(&scores);
    ensure_both_signs(&scores, &mut y);
    let mix = gaussian(&mut rng, 3, D);
    let x = (&f * mix + gaussian(&mut rng, N, D) * 0.3).map(|v| (v * 1e4).round() / 1e4);
    MultiLabelDataset::new("synthetic50", x, y, names("f", D), names("label", L))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planted_shapes_and_balance() {
        let ds = planted_linear(200, 20, 8, 1).unwrap();
        assert_eq!((ds.n_instances(), ds.n_features(), ds.n_labels()), (200, 20, 8));
        for j in 0..8 {
            let pos = ds.y.column(j).iter().filter(|&&v| v > 0.0).count();
            assert!(pos > 0 && pos < 200);
        }
    }

    #[test]
    fn generators_are_seeded() {
        assert_eq!(two_group_factors(40, 3, 9).unwrap(), two_group_factors(40, 3, 9).unwrap());
        assert_ne!(two_group_factors(40, 3, 9).unwrap(), two_group_factors(40, 3, 10).unwrap());
    }

    #[test]
    fn every_label_has_both_values() {
        let ds = synthetic50().unwrap();
        for j in 0..ds.n_labels() {
            let pos = ds.y.column(j).iter().filter(|&&v| v > 0.0).count();
            assert!(pos > 0 && pos < ds.n_instances(), "label {j}");
        }
    }
}
