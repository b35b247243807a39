use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::apg::ApgSettings;
use crate::dataset::MultiLabelDataset;
use crate::error::{Error, Result};
use crate::grouping::GroupingOptions;
use crate::label_embed::LabelEmbeddingSettings;
use crate::metrics::MetricConventions;
use crate::predictor::Hyperparameters;

/// A scalar or a list of grid values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn values(&self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            OneOrMany::One(_) => 1,
            OneOrMany::Many(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// `1e-4, 1e-3, ..., 1e4`.
pub fn decade_grid() -> Vec<f64> {
    (-4..=4).map(|e| format!("1e{e}").parse().expect("literal")).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Grople,
    RidgeBr,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Grople => "grople",
            Method::RidgeBr => "ridge-br",
        }
    }
}

/// A MULAN pair, a CSV cache directory, or both (cache filled on first load).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSource {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arff: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xml: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cache: Option<PathBuf>,
}

impl DatasetSource {
    pub fn violations(&self, field: &str) -> Vec<String> {
        match (&self.arff, &self.xml, &self.cache) {
            (Some(_), Some(_), _) | (None, None, Some(_)) => vec![],
            (Some(_), None, _) => vec![format!("{field}.xml is required with arff")],
            (None, Some(_), _) => vec![format!("{field}.arff is required with xml")],
            (None, None, None) => vec![format!("{field} needs arff + xml or cache")],
        }
    }

    /// Relative paths are taken relative to `base`.
    pub fn resolve(&mut self, base: &Path) {
        for p in [&mut self.arff, &mut self.xml, &mut self.cache].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }

    pub fn load(&self) -> Result<MultiLabelDataset> {
        let mut ds = match (&self.arff, &self.xml, &self.cache) {
            (Some(a), Some(x), Some(c)) => MultiLabelDataset::load_cached(a, x, c)?,
            (Some(a), Some(x), None) => MultiLabelDataset::load_mulan(a, x)?,
            (None, None, Some(c)) => MultiLabelDataset::read_cache(c)?,
            _ => return Err(Error::Config(self.violations("dataset"))),
        };
        if let Some(name) = &self.name {
            ds.name = name.clone();
        }
        Ok(ds)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub datasets: Vec<DatasetSource>,
    pub methods: Vec<Method>,
    pub latent_dim: OneOrMany<usize>,
    pub n_groups: OneOrMany<usize>,
    pub lambda1: OneOrMany<f64>,
    pub lambda2: OneOrMany<f64>,
    pub alpha: OneOrMany<f64>,
    pub beta: OneOrMany<f64>,
    pub ridge_lambda: OneOrMany<f64>,
    pub folds: usize,
    pub seed: u64,
    /// Fraction of each training split held out to select grid cells.
    pub validation_fraction: f64,
    pub standardize: bool,
    pub bias: bool,
    pub keep_u: bool,
    pub calibrate_thresholds: bool,
    pub conventions: MetricConventions,
    /// Parallel worker count; `None` uses every core.
    pub workers: Option<usize>,
    pub grouping: GroupingOptions,
    pub label_embedding: LabelEmbeddingSettings,
    pub feature_apg: ApgSettings,
    /// Significance level for the critical difference (0.05 or 0.10).
    pub cd_alpha: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let hp = Hyperparameters::default();
        ExperimentConfig {
            datasets: Vec::new(),
            methods: vec![Method::Grople, Method::RidgeBr],
            latent_dim: OneOrMany::One(hp.latent_dim),
            n_groups: OneOrMany::One(hp.n_groups),
            lambda1: OneOrMany::One(hp.lambda1),
            lambda2: OneOrMany::One(hp.lambda2),
            alpha: OneOrMany::Many(decade_grid()),
            beta: OneOrMany::Many(decade_grid()),
            ridge_lambda: OneOrMany::Many(decade_grid()),
            folds: 5,
            seed: 0,
            validation_fraction: 0.2,
            standardize: false,
            bias: false,
            keep_u: false,
            calibrate_thresholds: false,
            conventions: MetricConventions::default(),
            workers: None,
            grouping: hp.grouping,
            label_embedding: hp.label_embedding,
            feature_apg: hp.feature_apg,
            cd_alpha: 0.05,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Reads a config file; dataset paths resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_json(&text).map_err(|e| e.in_file(path))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for d in &mut cfg.datasets {
            d.resolve(base);
        }
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Every violated constraint, each naming its field.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.datasets.is_empty() {
            v.push("datasets must list at least one dataset".into());
        }
        for (i, d) in self.datasets.iter().enumerate() {
            v.extend(d.violations(&format!("datasets[{i}]")));
        }
        if self.methods.is_empty() {
            v.push("methods must be nonempty".into());
        }
        let mut methods = self.methods.clone();
        methods.sort();
        methods.dedup();
        if methods.len() != self.methods.len() {
            v.push("methods must not repeat".into());
        }
        if self.folds < 2 {
            v.push(format!("folds must be >= 2, got {}", self.folds));
        }
        for (name, grid) in [("latent_dim", &self.latent_dim), ("n_groups", &self.n_groups)] {
            if grid.is_empty() {
                v.push(format!("{name} grid is empty"));
            }
            if grid.values().contains(&0) {
                v.push(format!("{name} values must be >= 1"));
            }
        }
        for (name, grid) in [
            ("lambda1", &self.lambda1),
            ("lambda2", &self.lambda2),
            ("alpha", &self.alpha),
            ("beta", &self.beta),
        ] {
            if grid.is_empty() {
                v.push(format!("{name} grid is empty"));
            }
            if grid.values().iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
                v.push(format!("{name} values must be finite and >= 0"));
            }
        }
        if self.ridge_lambda.is_empty() {
            v.push("ridge_lambda grid is empty".into());
        }
        if self.ridge_lambda.values().iter().any(|x| !(*x > 0.0) || !x.is_finite()) {
            v.push("ridge_lambda values must be finite and > 0".into());
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            v.push("validation_fraction must lie in (0, 1)".into());
        }
        if self.workers == Some(0) {
            v.push("workers must be >= 1".into());
        }
        if crate::metrics::studentized_range_q(2, self.cd_alpha).is_none() {
            v.push("cd_alpha must be 0.05 or 0.10".into());
        }
        let hp = self.base_hyperparameters();
        for (name, s) in [
            ("label_embedding.apg", &hp.label_embedding.apg),
            ("feature_apg", &hp.feature_apg),
        ] {
            if let Err(e) = s.validate() {
                v.push(format!("{name}: {e}"));
            }
        }
        if hp.label_embedding.outer_max_iterations == 0 {
            v.push("label_embedding.outer_max_iterations must be >= 1".into());
        }
        if !(hp.label_embedding.outer_tolerance > 0.0) {
            v.push("label_embedding.outer_tolerance must be > 0".into());
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(v))
        }
    }

    /// Hyperparameters with every grid at its first value.
    pub fn base_hyperparameters(&self) -> Hyperparameters {
        let first = |g: &OneOrMany<f64>, d: f64| g.values().first().copied().unwrap_or(d);
        let defaults = Hyperparameters::default();
        Hyperparameters {
            latent_dim: self.latent_dim.values().first().copied().unwrap_or(defaults.latent_dim),
            n_groups: self.n_groups.values().first().copied().unwrap_or(defaults.n_groups),
            lambda1: first(&self.lambda1, defaults.lambda1),
            lambda2: first(&self.lambda2, defaults.lambda2),
            alpha: first(&self.alpha, defaults.alpha),
            beta: first(&self.beta, defaults.beta),
            seed: self.seed,
            standardize: self.standardize,
            bias: self.bias,
            keep_u: self.keep_u,
            calibrate_thresholds: self.calibrate_thresholds,
            grouping: self.grouping,
            label_embedding: self.label_embedding,
            feature_apg: self.feature_apg,
        }
    }

    /// Grid cells in canonical order: latent_dim, n_groups, lambda1, lambda2
    /// vary slowest, then alpha, then beta.
    pub fn grople_cells(&self) -> Vec<Hyperparameters> {
        let base = self.base_hyperparameters();
        let mut cells = Vec::new();
        for &latent_dim in &self.latent_dim.values() {
            for &n_groups in &self.n_groups.values() {
                for &lambda1 in &self.lambda1.values() {
                    for &lambda2 in &self.lambda2.values() {
                        for &alpha in &self.alpha.values() {
                            for &beta in &self.beta.values() {
                                cells.push(Hyperparameters {
                                    latent_dim,
                                    n_groups,
                                    lambda1,
                                    lambda2,
                                    alpha,
                                    beta,
                                    ..base
                                });
                            }
                        }
                    }
                }
            }
        }
        cells
    }
}
