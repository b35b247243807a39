//! JSON envelope shared by every fitted model, tagged by method.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::baseline::RidgeBrModel;
use crate::dataset::{FeatureTransform, Standardizer};
use crate::error::{Error, Result};
use crate::grouping::GroupPartition;
use crate::label_embed::{sparsity_mask, MaskEntry};
use crate::linalg::{Matrix, MatrixRecord};
use crate::predictor::{GropleClassifier, Hyperparameters};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Grople(GropleClassifier),
    RidgeBr(RidgeBrModel),
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
enum ModelRecord {
    Grople(GropleRecord),
    RidgeBr(RidgeRecord),
}

#[derive(Serialize, Deserialize)]
struct GropleRecord {
    format_version: u32,
    hyperparameters: Hyperparameters,
    seed: u64,
    label_names: Vec<String>,
    feature_names: Vec<String>,
    partition: GroupPartition,
    #[serde(rename = "Z")]
    z: MatrixRecord,
    #[serde(rename = "V")]
    v: MatrixRecord,
    standardization: Option<Standardizer>,
    bias: bool,
    n_features: usize,
    zero_count: usize,
    objective_history: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    thresholds: Option<Vec<f64>>,
    #[serde(rename = "U", default, skip_serializing_if = "Option::is_none")]
    u: Option<MatrixRecord>,
}

#[derive(Serialize, Deserialize)]
struct RidgeRecord {
    format_version: u32,
    lambda: f64,
    label_names: Vec<String>,
    feature_names: Vec<String>,
    #[serde(rename = "W")]
    w: MatrixRecord,
    standardization: Option<Standardizer>,
    bias: bool,
    n_features: usize,
}

fn check_version(v: u32) -> Result<()> {
    if v != FORMAT_VERSION {
        return Err(Error::InvalidModel(format!(
            "unsupported format_version {v}, expected {FORMAT_VERSION}"
        )));
    }
    Ok(())
}

impl Model {
    pub fn method(&self) -> &'static str {
        match self {
            Model::Grople(_) => "grople",
            Model::RidgeBr(_) => "ridge-br",
        }
    }

    pub fn label_names(&self) -> &[String] {
        match self {
            Model::Grople(m) => &m.label_names,
            Model::RidgeBr(m) => &m.label_names,
        }
    }

    pub fn n_features(&self) -> usize {
        match self {
            Model::Grople(m) => m.transform.n_features,
            Model::RidgeBr(m) => m.transform.n_features,
        }
    }

    pub fn score(&self, x: &Matrix) -> Result<Matrix> {
        match self {
            Model::Grople(m) => m.score(x),
            Model::RidgeBr(m) => m.score(x),
        }
    }

    pub fn predict(&self, x: &Matrix) -> Result<Matrix> {
        match self {
            Model::Grople(m) => m.predict(x),
            Model::RidgeBr(m) => m.predict(x),
        }
    }

    /// Per-group nonzero-row mask of `V`; only defined for grople models.
    pub fn sparsity(&self) -> Result<Vec<MaskEntry>> {
        match self {
            Model::Grople(m) => sparsity_mask(&m.v, &m.partition),
            Model::RidgeBr(_) => Err(Error::InvalidModel(
                "ridge-br models carry no V matrix".into(),
            )),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let record = match self {
            Model::Grople(m) => ModelRecord::Grople(GropleRecord {
                format_version: FORMAT_VERSION,
                hyperparameters: m.hyperparameters,
                seed: m.hyperparameters.seed,
                label_names: m.label_names.clone(),
                feature_names: m.feature_names.clone(),
                partition: m.partition.clone(),
                z: (&m.z).into(),
                v: (&m.v).into(),
                standardization: m.transform.standardization.clone(),
                bias: m.transform.bias,
                n_features: m.transform.n_features,
                zero_count: m.zero_count,
                objective_history: m.objective_history.clone(),
                thresholds: m.thresholds.clone(),
                u: m.u.as_ref().map(Into::into),
            }),
            Model::RidgeBr(m) => ModelRecord::RidgeBr(RidgeRecord {
                format_version: FORMAT_VERSION,
                lambda: m.lambda,
                label_names: m.label_names.clone(),
                feature_names: m.feature_names.clone(),
                w: (&m.w).into(),
                standardization: m.transform.standardization.clone(),
                bias: m.transform.bias,
                n_features: m.transform.n_features,
            }),
        };
        Ok(serde_json::to_string_pretty(&record)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let record: ModelRecord = serde_json::from_str(text)?;
        let model = match record {
            ModelRecord::Grople(r) => {
                check_version(r.format_version)?;
                let partition = GroupPartition::new(r.partition.assignment, r.partition.k)
                    .map_err(|e| Error::InvalidModel(e.to_string()))?;
                let mut hyperparameters = r.hyperparameters;
                hyperparameters.seed = r.seed;
                let m = GropleClassifier {
                    hyperparameters,
                    label_names: r.label_names,
                    feature_names: r.feature_names,
                    partition,
                    z: Matrix::try_from(&r.z)?,
                    v: Matrix::try_from(&r.v)?,
                    transform: FeatureTransform {
                        standardization: r.standardization,
                        bias: r.bias,
                        n_features: r.n_features,
                    },
                    thresholds: r.thresholds,
                    u: r.u.as_ref().map(Matrix::try_from).transpose()?,
                    objective_history: r.objective_history,
                    zero_count: r.zero_count,
                };
                m.check()?;
                Model::Grople(m)
            }
            ModelRecord::RidgeBr(r) => {
                check_version(r.format_version)?;
                let m = RidgeBrModel {
                    w: Matrix::try_from(&r.w)?,
                    lambda: r.lambda,
                    label_names: r.label_names,
                    feature_names: r.feature_names,
                    transform: FeatureTransform {
                        standardization: r.standardization,
                        bias: r.bias,
                        n_features: r.n_features,
                    },
                };
                m.check()?;
                Model::RidgeBr(m)
            }
        };
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| e.in_file(path))
    }
}
