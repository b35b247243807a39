//! Multi-label evaluation metrics over {-1,+1} label matrices, plus rank
//! aggregation for comparing methods across datasets.

mod ranking;

pub use ranking::{
    average_ranks, friedman_chi_square, friedman_statistic, nemenyi_cd, studentized_range_q,
    FriedmanStatistic, RankTable,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Handling of instances (or labels) whose actual and predicted positive
/// sets are both empty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DegenerateConvention {
    /// Use the fixed per-metric convention (1 for accuracy and example F1,
    /// 0 for a label in macro F1).
    #[default]
    Score,
    /// Leave degenerate instances/labels out of the average.
    Skip,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MetricConventions {
    pub degenerate: DegenerateConvention,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub accuracy: f64,
    pub example_f1: f64,
    pub macro_f1: f64,
    pub micro_f1: f64,
    pub n_test: usize,
    pub n_labels: usize,
}

impl MetricReport {
    pub const NAMES: [&'static str; 4] = ["accuracy", "example_f1", "macro_f1", "micro_f1"];

    pub fn compute(y: &Matrix, y_hat: &Matrix, conventions: &MetricConventions) -> Result<Self> {
        Ok(MetricReport {
            accuracy: accuracy_with(y, y_hat, conventions)?,
            example_f1: example_f1_with(y, y_hat, conventions)?,
            macro_f1: macro_f1_with(y, y_hat, conventions)?,
            micro_f1: micro_f1(y, y_hat)?,
            n_test: y.nrows(),
            n_labels: y.ncols(),
        })
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        match name {
            "accuracy" => Some(self.accuracy),
            "example_f1" => Some(self.example_f1),
            "macro_f1" => Some(self.macro_f1),
            "micro_f1" => Some(self.micro_f1),
            _ => None,
        }
    }

    pub fn values(&self) -> [f64; 4] {
        [self.accuracy, self.example_f1, self.macro_f1, self.micro_f1]
    }
}

fn check_shapes(y: &Matrix, y_hat: &Matrix) -> Result<()> {
    if y.shape() != y_hat.shape() {
        return Err(Error::Dimension(format!(
            "truth is {:?}, prediction is {:?}",
            y.shape(),
            y_hat.shape()
        )));
    }
    Ok(())
}

#[derive(Debug, Default, Clone, Copy)]
struct Counts {
    tp: usize,
    fp: usize,
    fn_: usize,
}

fn count<'a>(pairs: impl Iterator<Item = (&'a f64, &'a f64)>) -> Counts {
    let mut c = Counts::default();
    for (&t, &p) in pairs {
        match (t > 0.0, p > 0.0) {
            (true, true) => c.tp += 1,
            (false, true) => c.fp += 1,
            (true, false) => c.fn_ += 1,
            (false, false) => {}
        }
    }
    c
}

fn row_counts(y: &Matrix, y_hat: &Matrix) -> Vec<Counts> {
    (0..y.nrows())
        .map(|i| count(y.row(i).iter().zip(y_hat.row(i).iter())))
        .collect()
}

/// Summed in sorted order so the result does not depend on row or label order.
fn mean_of(values: impl Iterator<Item = Option<f64>>, empty: f64) -> f64 {
    let mut v: Vec<f64> = values.flatten().collect();
    if v.is_empty() {
        return empty;
    }
    v.sort_by(f64::total_cmp);
    v.iter().sum::<f64>() / v.len() as f64
}

/// Mean over instances of `|y and y_hat| / |y or y_hat|`.
pub fn accuracy(y: &Matrix, y_hat: &Matrix) -> Result<f64> {
    accuracy_with(y, y_hat, &MetricConventions::default())
}

pub fn accuracy_with(y: &Matrix, y_hat: &Matrix, conv: &MetricConventions) -> Result<f64> {
    check_shapes(y, y_hat)?;
    let per = row_counts(y, y_hat).into_iter().map(|c| {
        let union = c.tp + c.fp + c.fn_;
        match (union, conv.degenerate) {
            (0, DegenerateConvention::Score) => Some(1.0),
            (0, DegenerateConvention::Skip) => None,
            _ => Some(c.tp as f64 / union as f64),
        }
    });
    Ok(mean_of(per, 1.0))
}

/// Mean over instances of the harmonic mean of precision and recall.
pub fn example_f1(y: &Matrix, y_hat: &Matrix) -> Result<f64> {
    example_f1_with(y, y_hat, &MetricConventions::default())
}

pub fn example_f1_with(y: &Matrix, y_hat: &Matrix, conv: &MetricConventions) -> Result<f64> {
    check_shapes(y, y_hat)?;
    // 2pr/(p+r) = 2TP / (2TP + FP + FN) whenever p + r > 0.
    let per = row_counts(y, y_hat).into_iter().map(|c| {
        let denom = 2 * c.tp + c.fp + c.fn_;
        match (denom, conv.degenerate) {
            (0, DegenerateConvention::Score) => Some(1.0),
            (0, DegenerateConvention::Skip) => None,
            _ => Some(2.0 * c.tp as f64 / denom as f64),
        }
    });
    Ok(mean_of(per, 1.0))
}

/// Mean over labels of `2TP / (2TP + FP + FN)`.
pub fn macro_f1(y: &Matrix, y_hat: &Matrix) -> Result<f64> {
    macro_f1_with(y, y_hat, &MetricConventions::default())
}

pub fn macro_f1_with(y: &Matrix, y_hat: &Matrix, conv: &MetricConventions) -> Result<f64> {
    check_shapes(y, y_hat)?;
    let per = (0..y.ncols()).map(|j| {
        let c = count(y.column(j).iter().zip(y_hat.column(j).iter()));
        let denom = 2 * c.tp + c.fp + c.fn_;
        match (denom, conv.degenerate) {
            (0, DegenerateConvention::Score) => Some(0.0),
            (0, DegenerateConvention::Skip) => None,
            _ => Some(2.0 * c.tp as f64 / denom as f64),
        }
    });
    Ok(mean_of(per, 0.0))
}

/// `2 sum TP / (2 sum TP + sum FP + sum FN)` pooled over every cell; 1 when
/// there are no positives anywhere.
pub fn micro_f1(y: &Matrix, y_hat: &Matrix) -> Result<f64> {
    check_shapes(y, y_hat)?;
    let c = count(y.iter().zip(y_hat.iter()));
    let denom = 2 * c.tp + c.fp + c.fn_;
    Ok(if denom == 0 {
        1.0
    } else {
        2.0 * c.tp as f64 / denom as f64
    })
}

/// Mean and sample standard deviation (n - 1; 0 for a single value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}
