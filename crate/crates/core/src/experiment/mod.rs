//! Cross-validation and grid-search harness.

mod config;
mod report;

use std::collections::BTreeMap;

use rayon::prelude::*;

pub use config::{decade_grid, DatasetSource, ExperimentConfig, Method, OneOrMany};
pub use report::{
    DatasetReport, EvaluationReport, FoldReport, MethodReport, RankingRecord, ReportMode, Summary,
    REPORT_FORMAT_VERSION,
};

use crate::baseline::RidgeBrModel;
use crate::dataset::{holdout_split, k_fold_split, MultiLabelDataset};
use crate::error::{Error, Result};
use crate::metrics::{accuracy_with, MetricReport};
use crate::predictor::{fit_label_stage, GropleClassifier, Hyperparameters};

/// Runs `f` on a pool of `workers` threads (the global pool when `None`).
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidParameter(format!("worker pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// A grid cell for either method.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Cell {
    Grople(Hyperparameters),
    Ridge { lambda: f64 },
}

impl Cell {
    fn params(&self) -> BTreeMap<String, f64> {
        let pairs: Vec<(&str, f64)> = match self {
            Cell::Grople(hp) => vec![
                ("latent_dim", hp.latent_dim as f64),
                ("n_groups", hp.n_groups as f64),
                ("lambda1", hp.lambda1),
                ("lambda2", hp.lambda2),
                ("alpha", hp.alpha),
                ("beta", hp.beta),
            ],
            Cell::Ridge { lambda } => vec![("lambda", *lambda)],
        };
        pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }

    /// Cells sharing this key share a label stage.
    fn label_key(&self) -> Option<(usize, usize, u64, u64)> {
        match self {
            Cell::Grople(hp) => Some((
                hp.latent_dim,
                hp.n_groups,
                hp.lambda1.to_bits(),
                hp.lambda2.to_bits(),
            )),
            Cell::Ridge { .. } => None,
        }
    }
}

fn cells(cfg: &ExperimentConfig, method: Method) -> Vec<Cell> {
    match method {
        Method::Grople => cfg.grople_cells().into_iter().map(Cell::Grople).collect(),
        Method::RidgeBr => cfg
            .ridge_lambda
            .values()
            .into_iter()
            .map(|lambda| Cell::Ridge { lambda })
            .collect(),
    }
}

/// Predictions on `eval` of every cell fitted on `train`, in cell order.
/// GroPLE cells with equal label parameters reuse one label embedding.
fn predict_cells(
    cfg: &ExperimentConfig,
    cells: &[Cell],
    train: &MultiLabelDataset,
    eval: &MultiLabelDataset,
) -> Result<Vec<crate::linalg::Matrix>> {
    let mut runs: Vec<(usize, usize)> = Vec::new();
    for (i, c) in cells.iter().enumerate() {
        match runs.last_mut() {
            Some((start, end)) if c.label_key().is_some() && cells[*start].label_key() == c.label_key() => {
                *end = i + 1
            }
            _ => runs.push((i, i + 1)),
        }
    }
    let per_run: Vec<Vec<crate::linalg::Matrix>> = runs
        .par_iter()
        .map(|&(start, end)| -> Result<Vec<_>> {
            let run = &cells[start..end];
            match run[0] {
                Cell::Grople(hp) => {
                    let stage = fit_label_stage(&train.y, &hp)?;
                    run.par_iter()
                        .map(|c| {
                            let Cell::Grople(hp) = c else { unreachable!() };
                            GropleClassifier::fit_with_label_stage(train, hp, &stage)?
                                .predict(&eval.x)
                        })
                        .collect()
                }
                Cell::Ridge { .. } => run
                    .par_iter()
                    .map(|c| {
                        let Cell::Ridge { lambda } = c else { unreachable!() };
                        RidgeBrModel::fit(train, *lambda, cfg.standardize, cfg.bias)?
                            .predict(&eval.x)
                    })
                    .collect(),
            }
        })
        .collect::<Result<_>>()?;
    Ok(per_run.into_iter().flatten().collect())
}

fn fit_cell(cfg: &ExperimentConfig, cell: &Cell, train: &MultiLabelDataset, test: &MultiLabelDataset) -> Result<MetricReport> {
    let pred = predict_cells(cfg, std::slice::from_ref(cell), train, test)?.remove(0);
    MetricReport::compute(&test.y, &pred, &cfg.conventions)
}

/// Seed of the inner holdout of `fold`.
fn inner_seed(seed: u64, fold: usize) -> u64 {
    seed ^ (fold as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Picks the cell with the best inner-holdout accuracy (first on ties).
fn select_cell(
    cfg: &ExperimentConfig,
    cells: &[Cell],
    train: &MultiLabelDataset,
    fold: usize,
) -> Result<(Cell, Option<f64>)> {
    if cells.len() == 1 {
        return Ok((cells[0], None));
    }
    let all: Vec<usize> = (0..train.n_instances()).collect();
    let (fit_idx, val_idx) = holdout_split(&all, cfg.validation_fraction, inner_seed(cfg.seed, fold));
    let fit = train.subset(&fit_idx)?;
    let val = train.subset(&val_idx)?;
    let preds = predict_cells(cfg, cells, &fit, &val)?;
    let mut best: Option<(usize, f64)> = None;
    for (i, p) in preds.iter().enumerate() {
        let acc = accuracy_with(&val.y, p, &cfg.conventions)?;
        if best.map_or(true, |(_, b)| acc > b) {
            best = Some((i, acc));
        }
    }
    let (i, acc) = best.expect("at least one cell");
    Ok((cells[i], Some(acc)))
}

fn cv_dataset(cfg: &ExperimentConfig, ds: &MultiLabelDataset) -> Result<DatasetReport> {
    let plan = k_fold_split(ds.n_instances(), cfg.folds, cfg.seed)?;
    let splits: Vec<(MultiLabelDataset, MultiLabelDataset)> = (0..cfg.folds)
        .map(|f| Ok((ds.subset(&plan.train_indices(f))?, ds.subset(&plan.test_indices(f))?)))
        .collect::<Result<_>>()?;
    let methods = cfg
        .methods
        .iter()
        .map(|&method| -> Result<MethodReport> {
            let grid = cells(cfg, method);
            let folds: Vec<FoldReport> = splits
                .par_iter()
                .enumerate()
                .map(|(f, (train, test))| -> Result<FoldReport> {
                    let (cell, validation_accuracy) = select_cell(cfg, &grid, train, f)?;
                    log::info!("{} fold {f} {}: selected {:?}", ds.name, method.name(), cell.params());
                    Ok(FoldReport {
                        fold: f,
                        n_train: train.n_instances(),
                        selected: cell.params(),
                        validation_accuracy,
                        metrics: fit_cell(cfg, &cell, train, test)?,
                    })
                })
                .collect::<Result<_>>()?;
            Ok(MethodReport::new(method.name(), None, folds))
        })
        .collect::<Result<_>>()?;
    Ok(DatasetReport {
        name: ds.name.clone(),
        n_instances: ds.n_instances(),
        n_features: ds.n_features(),
        n_labels: ds.n_labels(),
        methods,
    })
}

fn grid_dataset(cfg: &ExperimentConfig, ds: &MultiLabelDataset) -> Result<DatasetReport> {
    let plan = k_fold_split(ds.n_instances(), cfg.folds, cfg.seed)?;
    let mut methods = Vec::new();
    for &method in &cfg.methods {
        let grid = cells(cfg, method);
        // fold-major: per_fold[f][cell]
        let per_fold: Vec<Vec<FoldReport>> = (0..cfg.folds)
            .into_par_iter()
            .map(|f| -> Result<Vec<FoldReport>> {
                let train = ds.subset(&plan.train_indices(f))?;
                let test = ds.subset(&plan.test_indices(f))?;
                predict_cells(cfg, &grid, &train, &test)?
                    .iter()
                    .zip(&grid)
                    .map(|(pred, cell)| {
                        Ok(FoldReport {
                            fold: f,
                            n_train: train.n_instances(),
                            selected: cell.params(),
                            validation_accuracy: None,
                            metrics: MetricReport::compute(&test.y, pred, &cfg.conventions)?,
                        })
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        for c in 0..grid.len() {
            let folds = per_fold.iter().map(|row| row[c].clone()).collect();
            methods.push(MethodReport::new(method.name(), Some(c), folds));
        }
    }
    Ok(DatasetReport {
        name: ds.name.clone(),
        n_instances: ds.n_instances(),
        n_features: ds.n_features(),
        n_labels: ds.n_labels(),
        methods,
    })
}

fn run(cfg: &ExperimentConfig, datasets: &[MultiLabelDataset], mode: ReportMode) -> Result<EvaluationReport> {
    let mut checked = cfg.clone();
    if checked.datasets.is_empty() {
        // datasets supplied in memory
        checked.datasets.push(DatasetSource {
            cache: Some(".".into()),
            ..Default::default()
        });
    }
    checked.validate()?;
    let reports = with_workers(cfg.workers, || {
        datasets
            .iter()
            .map(|ds| match mode {
                ReportMode::Cv => cv_dataset(cfg, ds),
                ReportMode::Grid => grid_dataset(cfg, ds),
            })
            .collect::<Result<Vec<_>>>()
    })??;
    Ok(EvaluationReport {
        format_version: REPORT_FORMAT_VERSION,
        mode,
        seed: cfg.seed,
        folds: cfg.folds,
        conventions: cfg.conventions,
        datasets: reports,
    })
}

fn load_all(cfg: &ExperimentConfig) -> Result<Vec<MultiLabelDataset>> {
    cfg.validate()?;
    cfg.datasets.iter().map(DatasetSource::load).collect()
}

/// k-fold cross-validation of every method, selecting grid cells per fold
/// by inner-holdout accuracy.
pub fn run_cv(cfg: &ExperimentConfig) -> Result<EvaluationReport> {
    run(cfg, &load_all(cfg)?, ReportMode::Cv)
}

/// [`run_cv`] on datasets already in memory (`cfg.datasets` is ignored).
pub fn run_cv_on(cfg: &ExperimentConfig, datasets: &[MultiLabelDataset]) -> Result<EvaluationReport> {
    run(cfg, datasets, ReportMode::Cv)
}

/// k-fold cross-validation of every grid cell separately.
pub fn run_grid(cfg: &ExperimentConfig) -> Result<EvaluationReport> {
    run(cfg, &load_all(cfg)?, ReportMode::Grid)
}

pub fn run_grid_on(cfg: &ExperimentConfig, datasets: &[MultiLabelDataset]) -> Result<EvaluationReport> {
    run(cfg, datasets, ReportMode::Grid)
}

/// Writes `report.json`, `metrics.csv` and, with two or more method entries,
/// `ranks_<metric>.csv` and `cd_<metric>.json` under `dir`.
pub fn write_outputs(report: &EvaluationReport, cd_alpha: f64, dir: &std::path::Path) -> Result<Vec<std::path::PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files: Vec<(String, String)> = vec![
        ("report.json".into(), report.to_json()?),
        ("metrics.csv".into(), report.to_csv()?),
    ];
    let n_entries = report.datasets.first().map_or(0, |d| d.methods.len());
    if n_entries >= 2 {
        for metric in MetricReport::NAMES {
            let ranking = report.ranking(metric, cd_alpha)?;
            files.push((format!("ranks_{metric}.csv"), ranking.ranks_csv()?));
            files.push((format!("cd_{metric}.json"), ranking.cd_json()?));
        }
    }
    let mut written = Vec::new();
    for (name, text) in files {
        let path = dir.join(name);
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}
