use std::path::Path;

use nalgebra::DMatrix;

use grople::apg::ApgSettings;
use grople::baseline::{fit_ridge_br, RidgeBrModel};
use grople::dataset::MultiLabelDataset;
use grople::feature_embed::{correlation_penalty, feature_objective, fit_feature_map, initial_map};
use grople::grouping::GroupPartition;
use grople::label_embed::{apg_fit_group, fit_label_embedding, group_objective, LabelEmbeddingSettings};
use grople::metrics::micro_f1;
use grople::model_file::Model;
use grople::predictor::{GropleClassifier, Hyperparameters};
use grople::synthetic::{planted_linear, synthetic50};
use grople::{Error, Matrix};

fn small_lambdas() -> Hyperparameters {
    Hyperparameters {
        latent_dim: 8,
        n_groups: 2,
        lambda1: 1e-3,
        lambda2: 1e-3,
        alpha: 1e-3,
        beta: 1e-3,
        ..Hyperparameters::default()
    }
}

fn assert_monotone(h: &[f64]) {
    let tol = 1e-10 * (1.0 + h[0]);
    for w in h.windows(2) {
        assert!(w[1] <= w[0] + tol, "objective rose: {} -> {}", w[0], w[1]);
    }
}

#[test]
fn planted_model_is_learned() {
    let ds = planted_linear(200, 20, 8, 1).unwrap();
    let model = GropleClassifier::fit(&ds, &small_lambdas()).unwrap();
    assert_monotone(&model.objective_history);
    let f1 = micro_f1(&ds.y, &model.predict(&ds.x).unwrap()).unwrap();
    assert!(f1 >= 0.95, "train micro-F1 {f1}");
}

#[test]
fn planted_ridge_baseline() {
    let ds = planted_linear(200, 20, 8, 2).unwrap();
    let model = RidgeBrModel::fit(&ds, 1.0, false, false).unwrap();
    let f1 = micro_f1(&ds.y, &model.predict(&ds.x).unwrap()).unwrap();
    assert!(f1 >= 0.9, "train micro-F1 {f1}");
}

#[test]
fn ridge_is_stationary() {
    let ds = planted_linear(50, 7, 4, 3).unwrap();
    for lambda in [1e-3, 1.0, 100.0] {
        let w = fit_ridge_br(&ds.x, &ds.y, lambda).unwrap();
        let grad = (ds.x.transpose() * (&ds.x * &w - &ds.y) + &w * lambda) * 2.0;
        assert!(grad.norm() < 1e-8 * (1.0 + ds.y.norm()), "lambda {lambda}: {}", grad.norm());
    }
}

#[test]
fn ridge_identity_limit() {
    let y = DMatrix::from_row_slice(3, 2, &[1., -1., -1., 1., 1., 1.]);
    let w = fit_ridge_br(&Matrix::identity(3, 3), &y, 1e-12).unwrap();
    assert!((w - &y).amax() < 1e-10);
}

#[test]
fn group_count_above_label_count_is_rejected() {
    let ds = synthetic50().unwrap();
    let hp = Hyperparameters { n_groups: 13, ..Hyperparameters::default() };
    assert!(matches!(GropleClassifier::fit(&ds, &hp), Err(Error::InvalidParameter(_))));
}

#[test]
fn default_hyperparameters_are_accepted() {
    let hp = Hyperparameters::default();
    assert_eq!((hp.latent_dim, hp.n_groups, hp.lambda1, hp.lambda2), (100, 10, 0.001, 1.0));
    let model = GropleClassifier::fit(&synthetic50().unwrap(), &hp).unwrap();
    model.check().unwrap();
    assert_eq!((model.z.ncols(), model.v.nrows(), model.v.ncols()), (100, 100, 12));
}

#[test]
fn empty_test_matrix() {
    let ds = synthetic50().unwrap();
    let model = GropleClassifier::fit(&ds, &small_lambdas()).unwrap();
    let p = model.predict(&Matrix::zeros(0, 12)).unwrap();
    assert_eq!(p.shape(), (0, 12));
    assert!(matches!(model.predict(&Matrix::zeros(2, 11)), Err(Error::Dimension(_))));
}

fn round_trip(model: &Model, x: &Matrix) {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    model.save(&path).unwrap();
    let back = Model::load(&path).unwrap();
    let (a, b) = (model.predict(x).unwrap(), back.predict(x).unwrap());
    assert_eq!(a.as_slice(), b.as_slice());
    // Scores survive bit for bit as well.
    let (sa, sb) = (model.score(x).unwrap(), back.score(x).unwrap());
    assert!(sa.iter().zip(sb.iter()).all(|(p, q)| p.to_bits() == q.to_bits()));
}

#[test]
fn saved_models_predict_identically() {
    let ds = synthetic50().unwrap();
    let test = planted_linear(30, 12, 3, 4).unwrap().x;
    let plain = GropleClassifier::fit(&ds, &small_lambdas()).unwrap();
    round_trip(&Model::Grople(plain), &test);
    let hp = Hyperparameters {
        standardize: true,
        bias: true,
        keep_u: true,
        calibrate_thresholds: true,
        ..small_lambdas()
    };
    let full = GropleClassifier::fit(&ds, &hp).unwrap();
    assert!(full.u.is_some() && full.thresholds.is_some());
    round_trip(&Model::Grople(full), &test);
    round_trip(&Model::RidgeBr(RidgeBrModel::fit(&ds, 0.5, true, true).unwrap()), &test);
}

#[test]
fn sparsity_export() {
    let ds = synthetic50().unwrap();
    let fit = |lambda2| {
        let hp = Hyperparameters { lambda2, n_groups: 3, latent_dim: 10, ..small_lambdas() };
        Model::Grople(GropleClassifier::fit(&ds, &hp).unwrap())
    };
    let share = |m: &Model| {
        let mask = m.sparsity().unwrap();
        mask.iter().filter(|e| e.is_nonzero).count() as f64 / mask.len() as f64
    };
    let dense = fit(0.0);
    assert_eq!(share(&dense), 1.0);
    let sparse = fit(50.0);
    assert!(share(&sparse) < 0.5, "nonzero share {}", share(&sparse));

    // One section per group, each with one line per latent row.
    let csv = grople::label_embed::sparsity_mask_csv(&dense.sparsity().unwrap()).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("group_index,row_index,is_nonzero"));
    let groups: std::collections::BTreeSet<&str> = lines.map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(groups.len(), 3);
    assert_eq!(csv.lines().count(), 1 + 3 * 10);

    let ridge = Model::RidgeBr(RidgeBrModel::fit(&ds, 1.0, false, false).unwrap());
    assert!(matches!(ridge.sparsity(), Err(Error::InvalidModel(_))));
}

#[test]
fn all_negative_labels_under_heavy_shrinkage() {
    let y = DMatrix::from_element(6, 4, -1.0);
    let p = GroupPartition::single(4);
    let mut previous = usize::MAX;
    for lambda2 in [0.0, 0.1, 1.0, 10.0, 100.0] {
        let m = fit_label_embedding(&y, &p, 3, 0.01, lambda2, &LabelEmbeddingSettings::default(), 0).unwrap();
        assert_monotone(&m.objective_history);
        let nonzero = m.v.row_iter().filter(|r| r.norm() > 1e-8).count();
        assert!(nonzero <= previous, "lambda2 {lambda2}: {nonzero} > {previous}");
        previous = nonzero;
        if lambda2 > 0.0 {
            // Y is rank one, so at most one direction carries it.
            assert!(nonzero <= 1, "lambda2 {lambda2}: {nonzero} nonzero rows");
        }
    }
}

fn instance(seed: u64) -> (Matrix, Matrix) {
    let ds = planted_linear(20, 6, 5, seed).unwrap();
    let u = DMatrix::from_fn(20, 4, |i, j| ds.x[(i, j)] + 0.3 * ds.x[(i, j + 2)]);
    (u, ds.y)
}

#[test]
fn huge_group_penalty_zeroes_the_block() {
    let (u, yk) = instance(5);
    let row_max = (u.transpose() * &yk).row_iter().map(|r| r.norm()).fold(0.0, f64::max);
    let v = apg_fit_group(&u, &yk, 10.0 * 2.0 * row_max, &ApgSettings::default()).unwrap();
    assert!(v.iter().all(|&x| x == 0.0));
}

#[test]
fn group_solver_descends_from_its_start() {
    for seed in 0..5 {
        let (u, yk) = instance(seed);
        for lambda2 in [0.0, 0.5, 5.0] {
            let gamma = 0.1;
            let settings = ApgSettings { gamma: Some(gamma), ..ApgSettings::default() };
            let v = apg_fit_group(&u, &yk, lambda2, &settings).unwrap();
            let mut a = u.transpose() * &u;
            for i in 0..a.nrows() {
                a[(i, i)] += gamma;
            }
            let v0 = a.lu().solve(&(u.transpose() * &yk)).unwrap();
            assert!(group_objective(&u, &yk, &v, lambda2) <= group_objective(&u, &yk, &v0, lambda2) + 1e-10);
        }
    }
}

#[test]
fn huge_l1_penalty_zeroes_the_map() {
    let ds = planted_linear(30, 6, 4, 6).unwrap();
    let u = &ds.y * 0.5;
    let beta = 10.0 * (ds.x.transpose() * &u).amax();
    let fm = fit_feature_map(&ds.x, &u, 0.3, beta, &ApgSettings::default()).unwrap();
    assert!(fm.z.iter().all(|&v| v == 0.0));
    assert_eq!(fm.zero_count, fm.z.len());
}

#[test]
fn feature_solver_descends_and_sparsifies_with_beta() {
    let ds = planted_linear(60, 10, 5, 7).unwrap();
    let stage = grople::predictor::fit_label_stage(&ds.y, &Hyperparameters { latent_dim: 5, n_groups: 2, ..Hyperparameters::default() }).unwrap();
    let u = stage.embedding.u;
    let r = correlation_penalty(&u).unwrap();
    let z0 = initial_map(&(ds.x.transpose() * &ds.x), &(ds.x.transpose() * &u)).unwrap();
    let mut previous = usize::MAX;
    for beta in [0.0, 0.01, 0.1, 1.0, 10.0, 100.0, 1000.0] {
        let fm = fit_feature_map(&ds.x, &u, 0.5, beta, &ApgSettings::default()).unwrap();
        assert_eq!(fm.zero_count, fm.z.iter().filter(|&&v| v == 0.0).count());
        let nonzero = fm.z.len() - fm.zero_count;
        assert!(nonzero <= previous, "beta {beta}: {nonzero} > {previous}");
        previous = nonzero;
        let f = feature_objective(&ds.x, &u, &fm.z, &r, 0.5, beta);
        assert!(f <= feature_objective(&ds.x, &u, &z0, &r, 0.5, beta) + 1e-10);
    }
    assert_eq!(previous, 0);
}

#[test]
fn bundled_dataset_loads_through_the_cache() {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let a = MultiLabelDataset::load_cached(&data.join("synthetic50.arff"), &data.join("synthetic50.xml"), &cache).unwrap();
    assert!(cache.join("features.csv").is_file());
    let b = MultiLabelDataset::load_cached(Path::new("/nonexistent.arff"), Path::new("/nonexistent.xml"), &cache).unwrap();
    assert_eq!(a.x, b.x);
    assert_eq!(a.y, b.y);
    assert_eq!(a.label_names, b.label_names);
}
