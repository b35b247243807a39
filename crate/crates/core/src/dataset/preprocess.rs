use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::{check_cols, Matrix};

/// Per-column z-scoring with the population standard deviation.
/// Zero-variance columns are centered but not scaled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &Matrix) -> Self {
        let n = x.nrows().max(1) as f64;
        let mut mean = Vec::with_capacity(x.ncols());
        let mut scale = Vec::with_capacity(x.ncols());
        for col in x.column_iter() {
            let m = col.sum() / n;
            let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
            let sd = var.sqrt();
            mean.push(m);
            scale.push(if sd > 0.0 { sd } else { 1.0 });
        }
        Standardizer { mean, scale }
    }

    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        check_cols("feature matrix", x, self.mean.len())?;
        Ok(Matrix::from_fn(x.nrows(), x.ncols(), |i, j| {
            (x[(i, j)] - self.mean[j]) / self.scale[j]
        }))
    }
}

/// Input transform fitted on training features and replayed at predict time.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FeatureTransform {
    pub standardization: Option<Standardizer>,
    pub bias: bool,
    pub n_features: usize,
}

impl FeatureTransform {
    pub fn fit(x: &Matrix, standardize: bool, bias: bool) -> Self {
        FeatureTransform {
            standardization: standardize.then(|| Standardizer::fit(x)),
            bias,
            n_features: x.ncols(),
        }
    }

    /// Column count after the transform.
    pub fn output_dim(&self) -> usize {
        self.n_features + usize::from(self.bias)
    }

    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        check_cols("feature matrix", x, self.n_features)?;
        let x = match &self.standardization {
            Some(s) => s.apply(x)?,
            None => x.clone(),
        };
        if !self.bias {
            return Ok(x);
        }
        Ok(x.insert_column(self.n_features, 1.0))
    }
}
