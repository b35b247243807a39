//! Multi-label datasets: MULAN parsing, assembly, folds and a CSV cache.

mod arff;
mod folds;
mod labels_xml;
mod preprocess;

use std::collections::HashSet;
use std::fs;
use std::path::Path;

pub use arff::{parse_arff, Attribute, AttributeKind, DataTable};
pub use folds::{holdout_split, k_fold_split, FoldPlan};
pub use labels_xml::{parse_label_header, write_label_header};
pub use preprocess::{FeatureTransform, Standardizer};

use crate::error::{Error, Result};
use crate::linalg::{select_rows, Matrix};

/// Features `x` (N x D) with labels `y` (N x L, entries -1/+1).
#[derive(Debug, Clone, PartialEq)]
pub struct MultiLabelDataset {
    pub name: String,
    pub x: Matrix,
    pub y: Matrix,
    pub feature_names: Vec<String>,
    pub label_names: Vec<String>,
}

impl MultiLabelDataset {
    /// Checks shapes, label values and name uniqueness.
    pub fn new(
        name: impl Into<String>,
        x: Matrix,
        y: Matrix,
        feature_names: Vec<String>,
        label_names: Vec<String>,
    ) -> Result<Self> {
        let (n, d) = x.shape();
        let l = y.ncols();
        if n == 0 || d == 0 || l == 0 {
            return Err(Error::Dimension(format!(
                "dataset needs N, D, L >= 1 (got {n}, {d}, {l})"
            )));
        }
        if y.nrows() != n {
            return Err(Error::Dimension(format!(
                "label matrix has {} rows, feature matrix {n}",
                y.nrows()
            )));
        }
        if feature_names.len() != d || label_names.len() != l {
            return Err(Error::Dimension("name lists do not match matrix widths".into()));
        }
        if let Some(v) = y.iter().find(|&&v| v != 1.0 && v != -1.0) {
            return Err(Error::InvalidParameter(format!(
                "label entries must be -1 or +1, found {v}"
            )));
        }
        let mut seen = HashSet::new();
        for name in &label_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::DuplicateLabel(name.clone()));
            }
        }
        if let Some(f) = feature_names.iter().find(|f| seen.contains(f.as_str())) {
            return Err(Error::InvalidParameter(format!(
                "`{f}` is both a feature and a label"
            )));
        }
        Ok(MultiLabelDataset {
            name: name.into(),
            x,
            y,
            feature_names,
            label_names,
        })
    }

    pub fn n_instances(&self) -> usize {
        self.x.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.x.ncols()
    }

    pub fn n_labels(&self) -> usize {
        self.y.ncols()
    }

    /// Rows `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        MultiLabelDataset::new(
            self.name.clone(),
            select_rows(&self.x, indices),
            select_rows(&self.y, indices),
            self.feature_names.clone(),
            self.label_names.clone(),
        )
    }

    /// Column-wise z-scored copy (population standard deviation).
    pub fn standardized(&self) -> Self {
        let s = Standardizer::fit(&self.x);
        MultiLabelDataset {
            x: s.apply(&self.x).expect("widths match"),
            ..self.clone()
        }
    }

    /// Writes `features.csv` and `labels.csv` under `dir`.
    pub fn write_cache(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_matrix_csv(&dir.join(FEATURES_FILE), &self.feature_names, &self.x)?;
        write_matrix_csv(&dir.join(LABELS_FILE), &self.label_names, &self.y)?;
        Ok(())
    }

    /// Reads a directory produced by [`MultiLabelDataset::write_cache`].
    pub fn read_cache(dir: &Path) -> Result<Self> {
        let (feature_names, x) = read_matrix_csv(&dir.join(FEATURES_FILE))?;
        let (label_names, y) = read_matrix_csv(&dir.join(LABELS_FILE))?;
        let name = dir
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        MultiLabelDataset::new(name, x, y, feature_names, label_names)
            .map_err(|e| e.in_file(dir))
    }

    /// Loads a MULAN pair (ARFF data + XML label header).
    pub fn load_mulan(arff_path: &Path, xml_path: &Path) -> Result<Self> {
        let arff = fs::read_to_string(arff_path).map_err(|e| Error::io(arff_path, e))?;
        let xml = fs::read_to_string(xml_path).map_err(|e| Error::io(xml_path, e))?;
        let table = parse_arff(&arff).map_err(|e| e.in_file(arff_path))?;
        let labels = parse_label_header(&xml).map_err(|e| e.in_file(xml_path))?;
        let mut ds = assemble_dataset(&table, &labels).map_err(|e| e.in_file(arff_path))?;
        if ds.name.is_empty() {
            ds.name = arff_path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
        }
        Ok(ds)
    }

    /// ARFF text (features numeric, labels `{0,1}`) and matching XML header.
    pub fn to_mulan(&self) -> (String, String) {
        let mut attributes: Vec<Attribute> = self
            .feature_names
            .iter()
            .map(|n| Attribute {
                name: n.clone(),
                kind: AttributeKind::Numeric,
            })
            .collect();
        attributes.extend(self.label_names.iter().map(|n| Attribute {
            name: n.clone(),
            kind: AttributeKind::Nominal(vec!["0".into(), "1".into()]),
        }));
        let rows = (0..self.n_instances())
            .map(|i| {
                let mut r: Vec<f64> = self.x.row(i).iter().copied().collect();
                r.extend(self.y.row(i).iter().map(|&v| if v > 0.0 { 1.0 } else { 0.0 }));
                r
            })
            .collect();
        let table = DataTable {
            relation: self.name.clone(),
            attributes,
            rows,
        };
        (table.to_dense_arff(), write_label_header(&self.label_names))
    }

    /// Writes `<stem>.arff` and `<stem>.xml` under `dir`.
    pub fn write_mulan(&self, dir: &Path, stem: &str) -> Result<()> {
        let (arff, xml) = self.to_mulan();
        for (ext, text) in [("arff", arff), ("xml", xml)] {
            let path = dir.join(format!("{stem}.{ext}"));
            fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }

    /// Loads from `cache_dir` when it holds a cache, otherwise parses the
    /// MULAN pair and writes the cache.
    pub fn load_cached(arff_path: &Path, xml_path: &Path, cache_dir: &Path) -> Result<Self> {
        if cache_dir.join(FEATURES_FILE).is_file() && cache_dir.join(LABELS_FILE).is_file() {
            return Self::read_cache(cache_dir);
        }
        let ds = Self::load_mulan(arff_path, xml_path)?;
        ds.write_cache(cache_dir)?;
        Ok(ds)
    }
}

pub const FEATURES_FILE: &str = "features.csv";
pub const LABELS_FILE: &str = "labels.csv";

fn write_matrix_csv(path: &Path, header: &[String], m: &Matrix) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::from(e).in_file(path))?;
    w.write_record(header)?;
    for row in m.row_iter() {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

fn read_matrix_csv(path: &Path) -> Result<(Vec<String>, Matrix)> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::from(e).in_file(path))?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let mut data = Vec::new();
    let mut rows = 0;
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        for cell in rec.iter() {
            let v: f64 = cell.trim().parse().map_err(|_| {
                Error::parse(i + 2, format!("`{cell}` is not a number")).in_file(path)
            })?;
            data.push(v);
        }
        rows += 1;
    }
    Ok((header.clone(), Matrix::from_row_slice(rows, header.len(), &data)))
}

/// Splits `table` into features and {-1,+1} labels.
///
/// Each label must be a nominal attribute with exactly two values, one of
/// which is `"1"`; that value maps to +1 and the other to -1. All remaining
/// attributes become features in declaration order (nominal features keep
/// their value index).
pub fn assemble_dataset(table: &DataTable, labels: &[String]) -> Result<MultiLabelDataset> {
    let mut label_cols = Vec::with_capacity(labels.len());
    for name in labels {
        let idx = table
            .attribute_index(name)
            .ok_or_else(|| Error::MissingLabel(name.clone()))?;
        let positive = match &table.attributes[idx].kind {
            AttributeKind::Nominal(values) if values.len() == 2 => {
                values.iter().position(|v| v == "1")
            }
            _ => None,
        }
        .ok_or_else(|| Error::NonbinaryLabel(name.clone()))?;
        label_cols.push((idx, positive as f64));
    }
    let is_label: HashSet<usize> = label_cols.iter().map(|&(i, _)| i).collect();
    let feature_cols: Vec<usize> = (0..table.attributes.len())
        .filter(|i| !is_label.contains(i))
        .collect();

    let n = table.n_rows();
    let x = Matrix::from_fn(n, feature_cols.len(), |i, j| table.rows[i][feature_cols[j]]);
    let y = Matrix::from_fn(n, label_cols.len(), |i, j| {
        let (col, positive) = label_cols[j];
        if table.rows[i][col] == positive {
            1.0
        } else {
            -1.0
        }
    });
    MultiLabelDataset::new(
        table.relation.clone(),
        x,
        y,
        feature_cols
            .iter()
            .map(|&c| table.attributes[c].name.clone())
            .collect(),
        labels.to_vec(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> DataTable {
        parse_arff("@relation t\n@attribute a numeric\n@attribute c {0,1}\n@data\n1.5,1\n2.5,0\n")
            .unwrap()
    }

    #[test]
    fn assemble_maps_labels() {
        let ds = assemble_dataset(&table(), &["c".to_string()]).unwrap();
        assert_eq!(ds.x, Matrix::from_row_slice(2, 1, &[1.5, 2.5]));
        assert_eq!(ds.y, Matrix::from_row_slice(2, 1, &[1.0, -1.0]));
        assert_eq!(ds.feature_names, vec!["a"]);
    }

    #[test]
    fn minus_one_one_labels() {
        let t = parse_arff("@relation t\n@attribute a numeric\n@attribute c {-1,1}\n@data\n1,-1\n")
            .unwrap();
        let ds = assemble_dataset(&t, &["c".to_string()]).unwrap();
        assert_eq!(ds.y[(0, 0)], -1.0);
    }

    #[test]
    fn missing_label() {
        let err = assemble_dataset(&table(), &["z".to_string()]).unwrap_err();
        assert!(matches!(err, Error::MissingLabel(n) if n == "z"));
    }

    #[test]
    fn nonbinary_label() {
        let err = assemble_dataset(&table(), &["a".to_string()]).unwrap_err();
        assert!(matches!(err, Error::NonbinaryLabel(_)));
        let t = parse_arff("@relation t\n@attribute a numeric\n@attribute c {x,y}\n@data\n1,x\n")
            .unwrap();
        assert!(matches!(
            assemble_dataset(&t, &["c".to_string()]),
            Err(Error::NonbinaryLabel(_))
        ));
    }

    #[test]
    fn cache_round_trip() {
        let ds = assemble_dataset(&table(), &["c".to_string()]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t");
        ds.write_cache(&path).unwrap();
        let back = MultiLabelDataset::read_cache(&path).unwrap();
        assert_eq!(back.x, ds.x);
        assert_eq!(back.y, ds.y);
        assert_eq!(back.label_names, ds.label_names);
        assert_eq!(back.name, "t");
    }

    #[test]
    fn rejects_bad_labels() {
        let x = Matrix::zeros(1, 1);
        let y = Matrix::from_element(1, 1, 0.5);
        assert!(MultiLabelDataset::new("d", x, y, vec!["a".into()], vec!["b".into()]).is_err());
        let x = Matrix::zeros(1, 1);
        let y = Matrix::from_element(1, 1, 1.0);
        assert!(MultiLabelDataset::new("d", x, y, vec!["a".into()], vec!["a".into()]).is_err());
    }
}
