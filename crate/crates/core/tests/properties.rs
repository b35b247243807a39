use nalgebra::DMatrix;
use proptest::prelude::*;
use proptest::sample::subsequence;

use grople::feature_embed::{correlation_penalty, correlation_term, fit_feature_map, soft_threshold};
use grople::grouping::{group_labels, normalized_affinity, self_tuning_affinity, GroupPartition, GroupingOptions};
use grople::label_embed::{lipschitz_constant, objective, row_shrinkage, update_basis};
use grople::apg::ApgSettings;
use grople::metrics::{accuracy, average_ranks, example_f1, macro_f1, micro_f1};
use grople::predictor::decide;
use grople::Matrix;

fn reals(rows: usize, cols: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(-3.0..3.0f64, rows * cols).prop_map(move |v| DMatrix::from_vec(rows, cols, v))
}

fn labels(rows: usize, cols: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(any::<bool>(), rows * cols)
        .prop_map(move |v| DMatrix::from_fn(rows, cols, |i, j| if v[i + rows * j] { 1.0 } else { -1.0 }))
}

fn label_pair() -> impl Strategy<Value = (Matrix, Matrix)> {
    (1usize..8, 1usize..8).prop_flat_map(|(n, l)| (labels(n, l), labels(n, l)))
}

fn all_metrics(y: &Matrix, p: &Matrix) -> [f64; 4] {
    [
        accuracy(y, p).unwrap(),
        example_f1(y, p).unwrap(),
        macro_f1(y, p).unwrap(),
        micro_f1(y, p).unwrap(),
    ]
}

fn permute_columns(m: &Matrix, perm: &[usize]) -> Matrix {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, perm[j])])
}

/// One positive per row, at the given column.
fn one_hot(cols: &[usize], l: usize) -> Matrix {
    DMatrix::from_fn(cols.len(), l, |i, j| if cols[i] == j { 1.0 } else { -1.0 })
}

proptest! {
    #[test]
    fn metrics_ignore_label_order((y, p) in label_pair(), seed in any::<u64>()) {
        let mut perm: Vec<usize> = (0..y.ncols()).collect();
        use rand::{seq::SliceRandom, SeedableRng};
        perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(all_metrics(&y, &p), all_metrics(&permute_columns(&y, &perm), &permute_columns(&p, &perm)));
    }

    #[test]
    fn metrics_lie_in_unit_interval((y, p) in label_pair()) {
        for v in all_metrics(&y, &p) {
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn perfect_prediction_scores_one(y in (2usize..8, 2usize..8).prop_flat_map(|(n, l)| labels(n, l))) {
        // Force a positive in every row and every column.
        let mut y = y;
        let (n, l) = y.shape();
        for i in 0..n.max(l) {
            y[(i % n, i % l)] = 1.0;
        }
        prop_assert_eq!(all_metrics(&y, &y), [1.0; 4]);
    }

    #[test]
    fn single_positive_example_f1_is_accuracy(
        (l, truth, guess) in (2usize..6, 1usize..10).prop_flat_map(|(l, n)| {
            (Just(l), prop::collection::vec(0..l, n), prop::collection::vec(0..l, n))
        })
    ) {
        let y = one_hot(&truth, l);
        let p = one_hot(&guess, l);
        prop_assert_eq!(example_f1(&y, &p).unwrap(), accuracy(&y, &p).unwrap());
    }

    #[test]
    fn rank_sums_are_exact(
        scores in (2usize..7, 1usize..6).prop_flat_map(|(k, n)| {
            // Few distinct values so ties are common.
            prop::collection::vec(prop::collection::vec((0..4u8).prop_map(|v| Some(v as f64 / 4.0)), n), k)
        }),
        higher in any::<bool>(),
    ) {
        let table = average_ranks(&scores, higher).unwrap();
        let k = table.n_methods as f64;
        for d in 0..table.n_datasets {
            let sum: f64 = (0..table.n_methods).map(|m| table.ranks[m][d]).sum();
            prop_assert_eq!(sum, k * (k + 1.0) / 2.0);
        }
    }

    #[test]
    fn decide_ignores_positive_scale(s in reals(4, 5), c in 1e-6..1e6f64) {
        let d = decide(&s);
        prop_assert_eq!(decide(&(&s * c)), d.clone());
        prop_assert!(d.iter().all(|&v| v == 1.0 || v == -1.0));
    }

    #[test]
    fn correlation_trace_identity(z in reals(4, 5), u in reals(6, 5), alpha in 0.0..10.0f64) {
        let r = correlation_penalty(&u).unwrap();
        let mut naive = 0.0;
        for i in 0..5 {
            for j in 0..5 {
                naive += r[(i, j)] * z.column(i).dot(&z.column(j));
            }
        }
        naive *= alpha;
        let fast = correlation_term(&z, &r, alpha);
        prop_assert!((fast - naive).abs() <= 1e-10 * naive.abs().max(1.0));
    }

    #[test]
    fn penalty_matrix_shape(u in reals(5, 4)) {
        let r = correlation_penalty(&u).unwrap();
        prop_assert_eq!(&r, &r.transpose());
        prop_assert!(r.diagonal().iter().all(|&v| v == 0.0));
        prop_assert!(r.iter().all(|&v| (-1e-12..=2.0 + 1e-12).contains(&v)));
    }

    #[test]
    fn affinity_invariants(y in (2usize..10, 2usize..8).prop_flat_map(|(n, l)| labels(n, l)), nn in 1usize..8) {
        let nn = nn.min(y.ncols() - 1);
        let a = self_tuning_affinity(&y, nn).unwrap().a;
        prop_assert_eq!(&a, &a.transpose());
        prop_assert!(a.iter().all(|&v| v > 0.0 && v <= 1.0));
        prop_assert!(a.diagonal().iter().all(|&v| v == 1.0));
        let m = normalized_affinity(&a).unwrap();
        prop_assert!((&m - m.transpose()).amax() <= 1e-15);
    }

    #[test]
    fn partitions_cover_every_group(y in (4usize..12, 2usize..9).prop_flat_map(|(n, l)| labels(n, l)), k in 1usize..5, seed in any::<u64>()) {
        let k = k.min(y.ncols());
        let p = group_labels(&y, k, seed, &GroupingOptions::default()).unwrap();
        prop_assert_eq!(p.assignment.len(), y.ncols());
        for g in 0..k {
            prop_assert!(p.assignment.contains(&g));
        }
        prop_assert_eq!(p.clone(), group_labels(&y, k, seed, &GroupingOptions::default()).unwrap());
    }

    #[test]
    fn objective_is_partition_consistent(
        (y, u, v, groups) in (2usize..6, 1usize..4, 2usize..7).prop_flat_map(|(n, d, l)| {
            (labels(n, l), reals(n, d), reals(d, l), prop::collection::vec(0usize..2, l))
        }),
        lambda1 in 0.0..2.0f64,
        lambda2 in 0.0..2.0f64,
    ) {
        let mut assignment = groups;
        assignment[0] = 0;
        assignment[1] = 1;
        let p = GroupPartition::new(assignment, 2).unwrap();
        let got = objective(&y, &p, &u, &v, lambda1, lambda2).unwrap();
        let mut l21 = 0.0;
        for block in p.groups() {
            for r in 0..v.nrows() {
                l21 += block.iter().map(|&j| v[(r, j)].powi(2)).sum::<f64>().sqrt();
            }
        }
        let want = (&y - &u * &v).norm_squared() + lambda1 * u.norm_squared() + lambda2 * l21;
        prop_assert!((got - want).abs() <= 1e-12 * want.max(1.0));
    }

    #[test]
    fn shrinkage_meets_subgradient_condition(m in reals(5, 3), t in 0.0..4.0f64) {
        let w = row_shrinkage(&m, t);
        for (mr, wr) in m.row_iter().zip(w.row_iter()) {
            let n = wr.norm();
            let resid = if n == 0.0 {
                ((mr - wr).norm() - t).max(0.0)
            } else {
                (mr - wr - wr * (t / n)).norm()
            };
            prop_assert!(resid < 1e-9);
        }
    }

    #[test]
    fn soft_threshold_meets_subgradient_condition(m in reals(4, 4), t in 0.0..4.0f64) {
        let w = soft_threshold(&m, t);
        for (a, b) in m.iter().zip(w.iter()) {
            let resid = if *b == 0.0 { (a.abs() - t).max(0.0) } else { (a - b - t * b.signum()).abs() };
            prop_assert!(resid < 1e-9);
        }
    }

    #[test]
    fn lipschitz_scales_quadratically(u in reals(4, 3), c in 0.1..10.0f64) {
        let base = lipschitz_constant(&u);
        prop_assert!((lipschitz_constant(&(&u * c)) - c * c * base).abs() <= 1e-12 * (c * c * base).max(1.0));
    }

    #[test]
    fn basis_update_is_stationary(
        (y, v) in (1usize..10, 1usize..10, 1usize..10).prop_flat_map(|(n, d, l)| (labels(n, l), reals(d, l))),
        lambda1 in 1e-3..10.0f64,
    ) {
        let u = update_basis(&y, &v, lambda1).unwrap();
        let resid = ((&y - &u * &v) * (-v.transpose()) + &u * lambda1) * 2.0;
        prop_assert!(resid.norm() < 1e-8 * (1.0 + y.norm()));
    }

    #[test]
    fn subsequence_metrics_match_rows((y, p) in label_pair(), keep in subsequence((0..7).collect::<Vec<usize>>(), 1..7)) {
        // Accuracy is a mean over rows: the full value is the row-weighted
        // mean of any split into kept and dropped rows.
        let rows: Vec<usize> = keep.into_iter().filter(|&r| r < y.nrows()).collect();
        prop_assume!(!rows.is_empty() && rows.len() < y.nrows());
        let rest: Vec<usize> = (0..y.nrows()).filter(|r| !rows.contains(r)).collect();
        let sel = |m: &Matrix, r: &[usize]| grople::linalg::select_rows(m, r);
        let a = accuracy(&sel(&y, &rows), &sel(&p, &rows)).unwrap() * rows.len() as f64;
        let b = accuracy(&sel(&y, &rest), &sel(&p, &rest)).unwrap() * rest.len() as f64;
        prop_assert!(((a + b) / y.nrows() as f64 - accuracy(&y, &p).unwrap()).abs() < 1e-12);
    }
}

#[test]
fn uncoupled_penalty_leaves_the_map_unchanged() {
    // All columns of U perfectly correlated: R = 0, so alpha has no effect.
    let base = [0.3, -1.2, 0.8, 2.0, -0.5, 1.1];
    let u = DMatrix::from_fn(6, 3, |i, j| base[i] * (1.0 + j as f64) + j as f64);
    assert!(correlation_penalty(&u).unwrap().iter().all(|&v| v.abs() < 1e-15));
    let x = DMatrix::from_fn(6, 4, |i, j| ((i * 7 + j * 3) % 5) as f64 - 2.0 + 0.1 * i as f64);
    let r0 = fit_feature_map(&x, &u, 0.0, 0.05, &ApgSettings::default()).unwrap();
    let r5 = fit_feature_map(&x, &u, 5.0, 0.05, &ApgSettings::default()).unwrap();
    if correlation_penalty(&u).unwrap().iter().all(|&v| v == 0.0) {
        assert_eq!(r0.z, r5.z);
    } else {
        assert!((r0.z - r5.z).amax() < 1e-9);
    }
}
