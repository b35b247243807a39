use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{
    average_ranks, friedman_chi_square, friedman_statistic, mean_std, nemenyi_cd,
    studentized_range_q, MetricConventions, MetricReport,
};

pub const REPORT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportMode {
    /// One entry per method; grid cells chosen per fold by inner holdout.
    Cv,
    /// One entry per (method, grid cell), no selection.
    Grid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub n_train: usize,
    /// Hyperparameters used for this fold.
    pub selected: BTreeMap<String, f64>,
    /// Inner-holdout accuracy of the selected cell (absent without a grid).
    pub validation_accuracy: Option<f64>,
    pub metrics: MetricReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    pub method: String,
    /// Grid cell index in grid mode.
    pub cell: Option<usize>,
    pub folds: Vec<FoldReport>,
    pub summary: BTreeMap<String, Summary>,
}

impl MethodReport {
    pub fn new(method: &str, cell: Option<usize>, folds: Vec<FoldReport>) -> Self {
        let summary = MetricReport::NAMES
            .iter()
            .map(|&name| {
                let values: Vec<f64> = folds
                    .iter()
                    .map(|f| f.metrics.get(name).expect("known metric"))
                    .collect();
                let (mean, std) = mean_std(&values);
                (name.to_string(), Summary { mean, std })
            })
            .collect();
        MethodReport {
            method: method.to_string(),
            cell,
            folds,
            summary,
        }
    }

    /// `method` or `method#cell`.
    pub fn label(&self) -> String {
        match self.cell {
            Some(c) => format!("{}#{c}", self.method),
            None => self.method.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetReport {
    pub name: String,
    pub n_instances: usize,
    pub n_features: usize,
    pub n_labels: usize,
    pub methods: Vec<MethodReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub format_version: u32,
    pub mode: ReportMode,
    pub seed: u64,
    pub folds: usize,
    pub conventions: MetricConventions,
    pub datasets: Vec<DatasetReport>,
}

impl EvaluationReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let r: EvaluationReport = serde_json::from_str(text)?;
        if r.format_version != REPORT_FORMAT_VERSION {
            return Err(Error::InvalidModel(format!(
                "unsupported report format_version {}",
                r.format_version
            )));
        }
        Ok(r)
    }

    /// Concatenates the datasets of several reports of the same mode.
    pub fn merge(reports: Vec<EvaluationReport>) -> Result<Self> {
        let mut it = reports.into_iter();
        let mut out = it
            .next()
            .ok_or_else(|| Error::InvalidParameter("no reports to merge".into()))?;
        for r in it {
            if r.mode != out.mode {
                return Err(Error::InvalidParameter("cannot merge cv and grid reports".into()));
            }
            out.datasets.extend(r.datasets);
        }
        Ok(out)
    }

    /// Flat `dataset,method,fold,metric,value` rows in report order.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["dataset", "method", "fold", "metric", "value"])?;
        for d in &self.datasets {
            for m in &d.methods {
                for f in &m.folds {
                    for (name, value) in MetricReport::NAMES.iter().zip(f.metrics.values()) {
                        w.write_record([
                            d.name.clone(),
                            m.label(),
                            f.fold.to_string(),
                            name.to_string(),
                            value.to_string(),
                        ])?;
                    }
                }
            }
        }
        csv_string(w)
    }

    /// Ranks every method entry by its mean `metric` on each dataset.
    pub fn ranking(&self, metric: &str, cd_alpha: f64) -> Result<RankingRecord> {
        if !MetricReport::NAMES.contains(&metric) {
            return Err(Error::InvalidParameter(format!("unknown metric `{metric}`")));
        }
        let first = self
            .datasets
            .first()
            .ok_or_else(|| Error::InvalidParameter("report has no datasets".into()))?;
        let methods: Vec<String> = first.methods.iter().map(MethodReport::label).collect();
        let scores: Vec<Vec<Option<f64>>> = methods
            .iter()
            .map(|label| {
                self.datasets
                    .iter()
                    .map(|d| {
                        d.methods
                            .iter()
                            .find(|m| &m.label() == label)
                            .map(|m| m.summary[metric].mean)
                    })
                    .collect()
            })
            .collect();
        let table = average_ranks(&scores, true)?;
        let q_alpha = studentized_range_q(table.n_methods, cd_alpha);
        let (friedman, note) = match friedman_statistic(&table) {
            Ok(f) => (Some(f), None),
            Err(e) => (None, Some(e.to_string())),
        };
        Ok(RankingRecord {
            metric: metric.to_string(),
            methods,
            datasets: self.datasets.iter().map(|d| d.name.clone()).collect(),
            average_ranks: table.average_ranks.clone(),
            n_methods: table.n_methods,
            n_datasets: table.n_datasets,
            alpha: cd_alpha,
            q_alpha,
            cd: q_alpha.map(|q| nemenyi_cd(table.n_methods, table.n_datasets, q)),
            chi_square: friedman_chi_square(&table).ok(),
            f_f: friedman.map(|f| f.f_f),
            note,
        })
    }
}

/// Average ranks with the Friedman statistics and Nemenyi critical difference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingRecord {
    pub metric: String,
    pub methods: Vec<String>,
    pub datasets: Vec<String>,
    pub average_ranks: Vec<f64>,
    pub n_methods: usize,
    pub n_datasets: usize,
    pub alpha: f64,
    /// Absent when no tabulated value exists for this method count.
    pub q_alpha: Option<f64>,
    pub cd: Option<f64>,
    pub chi_square: Option<f64>,
    pub f_f: Option<f64>,
    /// Why a statistic is absent.
    pub note: Option<String>,
}

impl RankingRecord {
    /// `method,avg_rank`.
    pub fn ranks_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["method", "avg_rank"])?;
        for (m, r) in self.methods.iter().zip(&self.average_ranks) {
            w.write_record([m.clone(), r.to_string()])?;
        }
        csv_string(w)
    }

    /// The scalar critical-difference record.
    pub fn cd_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct CdRecord<'a> {
            metric: &'a str,
            n_methods: usize,
            n_datasets: usize,
            alpha: f64,
            q_alpha: Option<f64>,
            cd: Option<f64>,
            chi_square: Option<f64>,
            f_f: Option<f64>,
            note: &'a Option<String>,
        }
        Ok(serde_json::to_string_pretty(&CdRecord {
            metric: &self.metric,
            n_methods: self.n_methods,
            n_datasets: self.n_datasets,
            alpha: self.alpha,
            q_alpha: self.q_alpha,
            cd: self.cd,
            chi_square: self.chi_square,
            f_f: self.f_f,
            note: &self.note,
        })? + "\n")
    }
}

fn csv_string(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fold(fold: usize, acc: f64) -> FoldReport {
        FoldReport {
            fold,
            n_train: 8,
            selected: BTreeMap::new(),
            validation_accuracy: None,
            metrics: MetricReport {
                accuracy: acc,
                example_f1: acc,
                macro_f1: acc,
                micro_f1: acc,
                n_test: 2,
                n_labels: 3,
            },
        }
    }

    fn report() -> EvaluationReport {
        let ds = |name: &str, a: f64, b: f64| DatasetReport {
            name: name.into(),
            n_instances: 10,
            n_features: 2,
            n_labels: 3,
            methods: vec![
                MethodReport::new("grople", None, vec![fold(0, a), fold(1, a)]),
                MethodReport::new("ridge-br", None, vec![fold(0, b), fold(1, b)]),
            ],
        };
        EvaluationReport {
            format_version: 1,
            mode: ReportMode::Cv,
            seed: 0,
            folds: 2,
            conventions: MetricConventions::default(),
            datasets: vec![ds("a", 0.9, 0.5), ds("b", 0.4, 0.6), ds("c", 0.8, 0.7)],
        }
    }

    #[test]
    fn summary_uses_sample_std() {
        let m = MethodReport::new("x", None, vec![fold(0, 1.0), fold(1, 0.0)]);
        assert_eq!(m.summary["accuracy"].mean, 0.5);
        assert_eq!(m.summary["accuracy"].std, 0.5f64.sqrt());
    }

    #[test]
    fn ranking_over_datasets() {
        let r = report().ranking("accuracy", 0.05).unwrap();
        assert_eq!(r.average_ranks, vec![4.0 / 3.0, 5.0 / 3.0]);
        assert_eq!(r.q_alpha, Some(1.960));
        assert!(r.ranks_csv().unwrap().starts_with("method,avg_rank\ngrople,1.3333"));
        assert!(r.f_f.is_some());
    }

    #[test]
    fn csv_layout() {
        let csv = report().to_csv().unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("dataset,method,fold,metric,value"));
        assert_eq!(lines.next(), Some("a,grople,0,accuracy,0.9"));
        assert_eq!(csv.lines().count(), 1 + 3 * 2 * 2 * 4);
    }

    #[test]
    fn json_round_trip() {
        let r = report();
        assert_eq!(EvaluationReport::from_json(&r.to_json().unwrap()).unwrap(), r);
    }
}
