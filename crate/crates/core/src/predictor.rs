//! End-to-end classifier: label grouping, label embedding, feature map and
//! sign decoding.

use serde::{Deserialize, Serialize};

use crate::apg::ApgSettings;
use crate::dataset::{FeatureTransform, MultiLabelDataset};
use crate::error::{Error, Result};
use crate::feature_embed::{fit_feature_map, FeatureMap};
use crate::grouping::{group_labels, GroupPartition, GroupingOptions};
use crate::label_embed::{fit_label_embedding, LabelEmbeddingModel, LabelEmbeddingSettings};
use crate::linalg::{check_cols, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparameters {
    pub latent_dim: usize,
    pub n_groups: usize,
    pub lambda1: f64,
    pub lambda2: f64,
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
    pub standardize: bool,
    pub bias: bool,
    /// Keep the training embedding `U` in the fitted model.
    pub keep_u: bool,
    /// Tune one decision threshold per label on the training scores.
    pub calibrate_thresholds: bool,
    pub grouping: GroupingOptions,
    pub label_embedding: LabelEmbeddingSettings,
    pub feature_apg: ApgSettings,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Hyperparameters {
            latent_dim: 100,
            n_groups: 10,
            lambda1: 0.001,
            lambda2: 1.0,
            alpha: 0.1,
            beta: 0.1,
            seed: 0,
            standardize: false,
            bias: false,
            keep_u: false,
            calibrate_thresholds: false,
            grouping: GroupingOptions::default(),
            label_embedding: LabelEmbeddingSettings::default(),
            feature_apg: ApgSettings::default(),
        }
    }
}

impl Hyperparameters {
    /// Every violated constraint, one message each.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.latent_dim == 0 {
            v.push("latent_dim must be >= 1".to_string());
        }
        if self.n_groups == 0 {
            v.push("n_groups must be >= 1".to_string());
        }
        for (name, value) in [
            ("lambda1", self.lambda1),
            ("lambda2", self.lambda2),
            ("alpha", self.alpha),
            ("beta", self.beta),
        ] {
            if !(value >= 0.0) || !value.is_finite() {
                v.push(format!("{name} must be a finite value >= 0, got {value}"));
            }
        }
        for (name, s) in [
            ("label_embedding.apg", &self.label_embedding.apg),
            ("feature_apg", &self.feature_apg),
        ] {
            if let Err(e) = s.validate() {
                v.push(format!("{name}: {e}"));
            }
        }
        if self.label_embedding.outer_max_iterations == 0 {
            v.push("label_embedding.outer_max_iterations must be >= 1".to_string());
        }
        if !(self.label_embedding.outer_tolerance > 0.0) {
            v.push("label_embedding.outer_tolerance must be > 0".to_string());
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
}

/// Output of the label side of training, reusable across feature-map settings.
#[derive(Debug, Clone)]
pub struct LabelStage {
    pub partition: GroupPartition,
    pub embedding: LabelEmbeddingModel,
}

/// Groups labels and fits the label embedding.
pub fn fit_label_stage(y: &Matrix, hp: &Hyperparameters) -> Result<LabelStage> {
    let l = y.ncols();
    if hp.n_groups > l {
        return Err(Error::InvalidParameter(format!(
            "n_groups = {} exceeds the number of labels ({l})",
            hp.n_groups
        )));
    }
    hp.validate()?;
    let partition = group_labels(y, hp.n_groups, hp.seed, &hp.grouping)?;
    let embedding = fit_label_embedding(
        y,
        &partition,
        hp.latent_dim,
        hp.lambda1,
        hp.lambda2,
        &hp.label_embedding,
        hp.seed,
    )?;
    Ok(LabelStage {
        partition,
        embedding,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GropleClassifier {
    pub hyperparameters: Hyperparameters,
    pub label_names: Vec<String>,
    pub feature_names: Vec<String>,
    pub partition: GroupPartition,
    /// Feature map, (D [+1 with bias]) x d.
    pub z: Matrix,
    /// Decoding matrix, d x L.
    pub v: Matrix,
    pub transform: FeatureTransform,
    pub thresholds: Option<Vec<f64>>,
    pub u: Option<Matrix>,
    pub objective_history: Vec<f64>,
    pub zero_count: usize,
}

impl GropleClassifier {
    pub fn fit(train: &MultiLabelDataset, hp: &Hyperparameters) -> Result<Self> {
        let stage = fit_label_stage(&train.y, hp)?;
        Self::fit_with_label_stage(train, hp, &stage)
    }

    /// Fits the feature map against an already fitted label stage.
    pub fn fit_with_label_stage(
        train: &MultiLabelDataset,
        hp: &Hyperparameters,
        stage: &LabelStage,
    ) -> Result<Self> {
        hp.validate()?;
        let transform = FeatureTransform::fit(&train.x, hp.standardize, hp.bias);
        let x = transform.apply(&train.x)?;
        let FeatureMap { z, zero_count, .. } =
            fit_feature_map(&x, &stage.embedding.u, hp.alpha, hp.beta, &hp.feature_apg)?;
        let mut model = GropleClassifier {
            hyperparameters: *hp,
            label_names: train.label_names.clone(),
            feature_names: train.feature_names.clone(),
            partition: stage.partition.clone(),
            z,
            v: stage.embedding.v.clone(),
            transform,
            thresholds: None,
            u: hp.keep_u.then(|| stage.embedding.u.clone()),
            objective_history: stage.embedding.objective_history.clone(),
            zero_count,
        };
        if hp.calibrate_thresholds {
            let scores = model.score(&train.x)?;
            model.thresholds = Some(calibrate_thresholds(&scores, &train.y));
        }
        Ok(model)
    }

    pub fn n_labels(&self) -> usize {
        self.v.ncols()
    }

    /// `X Z V` after the stored input transform.
    pub fn score(&self, x: &Matrix) -> Result<Matrix> {
        let xt = self.transform.apply(x)?;
        check_cols("transformed features", &xt, self.z.nrows())?;
        Ok((xt * &self.z) * &self.v)
    }

    pub fn predict(&self, x: &Matrix) -> Result<Matrix> {
        let scores = self.score(x)?;
        Ok(match &self.thresholds {
            Some(t) => decide_with_thresholds(&scores, t),
            None => decide(&scores),
        })
    }

    /// Checks the shape invariants of a deserialized model.
    pub fn check(&self) -> Result<()> {
        if self.z.ncols() != self.v.nrows() {
            return Err(Error::InvalidModel(format!(
                "Z has {} columns but V has {} rows",
                self.z.ncols(),
                self.v.nrows()
            )));
        }
        if self.v.ncols() != self.label_names.len() || self.partition.n_labels() != self.v.ncols() {
            return Err(Error::InvalidModel(
                "V width, label names and partition disagree".into(),
            ));
        }
        if self.z.nrows() != self.transform.output_dim() {
            return Err(Error::InvalidModel(format!(
                "Z has {} rows, input transform yields {}",
                self.z.nrows(),
                self.transform.output_dim()
            )));
        }
        if let Some(t) = &self.thresholds {
            if t.len() != self.v.ncols() {
                return Err(Error::InvalidModel("one threshold per label required".into()));
            }
        }
        Ok(())
    }
}

/// Entrywise sign with `sign(0) = -1`.
pub fn decide(scores: &Matrix) -> Matrix {
    scores.map(|s| if s > 0.0 { 1.0 } else { -1.0 })
}

/// `+1` where the score exceeds the label's threshold.
pub fn decide_with_thresholds(scores: &Matrix, thresholds: &[f64]) -> Matrix {
    Matrix::from_fn(scores.nrows(), scores.ncols(), |i, j| {
        if scores[(i, j)] > thresholds[j] {
            1.0
        } else {
            -1.0
        }
    })
}

/// Per label, the threshold among 0 and up to 100 score quantiles that
/// maximizes that label's training F1; ties go to the smallest |threshold|.
pub fn calibrate_thresholds(scores: &Matrix, y: &Matrix) -> Vec<f64> {
    (0..scores.ncols())
        .map(|j| {
            let col: Vec<f64> = scores.column(j).iter().copied().collect();
            let truth: Vec<bool> = y.column(j).iter().map(|&v| v > 0.0).collect();
            let mut sorted = col.clone();
            sorted.sort_by(f64::total_cmp);
            let mut candidates = vec![0.0];
            let n = sorted.len();
            let steps = n.min(100);
            for q in 0..steps {
                let i = q * n / steps;
                // Threshold just below sorted[i], i.e. midway to its predecessor.
                let t = if i == 0 {
                    sorted[0] - 1.0
                } else {
                    0.5 * (sorted[i - 1] + sorted[i])
                };
                candidates.push(t);
            }
            let f1 = |t: f64| {
                let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
                for (&s, &pos) in col.iter().zip(&truth) {
                    match (pos, s > t) {
                        (true, true) => tp += 1,
                        (false, true) => fp += 1,
                        (true, false) => fn_ += 1,
                        _ => {}
                    }
                }
                let d = 2 * tp + fp + fn_;
                if d == 0 {
                    1.0
                } else {
                    2.0 * tp as f64 / d as f64
                }
            };
            let mut best = (f1(0.0), 0.0_f64);
            for &t in &candidates[1..] {
                let v = f1(t);
                if v > best.0 || (v == best.0 && t.abs() < best.1.abs()) {
                    best = (v, t);
                }
            }
            best.1
        })
        .collect()
}
