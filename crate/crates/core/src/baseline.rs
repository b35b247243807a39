//! Ridge binary relevance: one ridge regression per label, decoded by sign.

use crate::dataset::{FeatureTransform, MultiLabelDataset};
use crate::error::{Error, Result};
use crate::linalg::{add_diagonal, check_cols, solve_spd, Matrix};
use crate::predictor::decide;

#[derive(Debug, Clone, PartialEq)]
pub struct RidgeBrModel {
    /// D x L weights (one column per label).
    pub w: Matrix,
    pub lambda: f64,
    pub label_names: Vec<String>,
    pub feature_names: Vec<String>,
    pub transform: FeatureTransform,
}

/// `W = (X^T X + lambda I)^-1 X^T Y`.
pub fn fit_ridge_br(x: &Matrix, y: &Matrix, lambda: f64) -> Result<Matrix> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!("ridge lambda must be > 0, got {lambda}")));
    }
    if x.nrows() != y.nrows() {
        return Err(Error::Dimension("X and Y row counts differ".into()));
    }
    let mut a = x.tr_mul(x);
    add_diagonal(&mut a, lambda);
    let rhs = x.tr_mul(y);
    solve_spd(&a, &rhs)
        .or_else(|| a.lu().solve(&rhs))
        .ok_or_else(|| Error::NumericalFailure("ridge system is singular".into()))
}

impl RidgeBrModel {
    pub fn fit(train: &MultiLabelDataset, lambda: f64, standardize: bool, bias: bool) -> Result<Self> {
        let transform = FeatureTransform::fit(&train.x, standardize, bias);
        let x = transform.apply(&train.x)?;
        Ok(RidgeBrModel {
            w: fit_ridge_br(&x, &train.y, lambda)?,
            lambda,
            label_names: train.label_names.clone(),
            feature_names: train.feature_names.clone(),
            transform,
        })
    }

    pub fn score(&self, x: &Matrix) -> Result<Matrix> {
        let xt = self.transform.apply(x)?;
        check_cols("transformed features", &xt, self.w.nrows())?;
        Ok(xt * &self.w)
    }

    pub fn predict(&self, x: &Matrix) -> Result<Matrix> {
        Ok(decide(&self.score(x)?))
    }

    pub fn check(&self) -> Result<()> {
        if self.w.ncols() != self.label_names.len() {
            return Err(Error::InvalidModel("W width differs from label count".into()));
        }
        if self.w.nrows() != self.transform.output_dim() {
            return Err(Error::InvalidModel("W height differs from input width".into()));
        }
        Ok(())
    }
}
