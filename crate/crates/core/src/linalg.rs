//! Dense helpers shared by the solvers.

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;

/// Solves `a * x = b` for symmetric positive definite `a` by Cholesky.
///
/// Returns `None` when `a` is not numerically positive definite, i.e. the
/// factorization fails or a pivot falls below `1e-12` of the largest one.
pub fn solve_spd(a: &Matrix, b: &Matrix) -> Option<Matrix> {
    let chol = Cholesky::new(a.clone())?;
    let l = chol.l_dirty();
    let diag = l.diagonal();
    let max = diag.iter().cloned().fold(0.0_f64, f64::max);
    let min = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(max > 0.0) || min <= 1e-12 * max {
        return None;
    }
    let x = chol.solve(b);
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Euclidean norm of every row.
pub fn row_norms(m: &Matrix) -> DVector<f64> {
    DVector::from_iterator(m.nrows(), m.row_iter().map(|r| r.norm()))
}

/// Sum of row norms (the l2,1 norm).
pub fn l21_norm(m: &Matrix) -> f64 {
    m.row_iter().map(|r| r.norm()).sum()
}

pub fn add_diagonal(m: &mut Matrix, value: f64) {
    for i in 0..m.nrows().min(m.ncols()) {
        m[(i, i)] += value;
    }
}

pub fn all_finite(m: &Matrix) -> bool {
    m.iter().all(|v| v.is_finite())
}

/// Gathers the listed columns of `m` in order.
pub fn select_columns(m: &Matrix, columns: &[usize]) -> Matrix {
    Matrix::from_fn(m.nrows(), columns.len(), |i, j| m[(i, columns[j])])
}

/// Gathers the listed rows of `m` in order.
pub fn select_rows(m: &Matrix, rows: &[usize]) -> Matrix {
    Matrix::from_fn(rows.len(), m.ncols(), |i, j| m[(rows[i], j)])
}

/// Writes the columns of `block` into the listed columns of `target`.
pub fn scatter_columns(target: &mut Matrix, columns: &[usize], block: &Matrix) {
    for (j, &c) in columns.iter().enumerate() {
        target.set_column(c, &block.column(j));
    }
}

pub(crate) fn check_rows(what: &str, m: &Matrix, rows: usize) -> Result<()> {
    if m.nrows() != rows {
        return Err(Error::Dimension(format!(
            "{what} has {} rows, expected {rows}",
            m.nrows()
        )));
    }
    Ok(())
}

pub(crate) fn check_cols(what: &str, m: &Matrix, cols: usize) -> Result<()> {
    if m.ncols() != cols {
        return Err(Error::Dimension(format!(
            "{what} has {} columns, expected {cols}",
            m.ncols()
        )));
    }
    Ok(())
}

/// Shape-annotated row-major storage used in every JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixRecord {
    pub shape: [usize; 2],
    pub data: Vec<f64>,
}

impl From<&Matrix> for MatrixRecord {
    fn from(m: &Matrix) -> Self {
        let data = m.row_iter().flat_map(|r| r.iter().copied().collect::<Vec<_>>()).collect();
        MatrixRecord {
            shape: [m.nrows(), m.ncols()],
            data,
        }
    }
}

impl TryFrom<&MatrixRecord> for Matrix {
    type Error = Error;

    fn try_from(r: &MatrixRecord) -> Result<Self> {
        let [rows, cols] = r.shape;
        if rows.checked_mul(cols) != Some(r.data.len()) {
            return Err(Error::InvalidModel(format!(
                "matrix of shape {rows}x{cols} carries {} values",
                r.data.len()
            )));
        }
        Ok(Matrix::from_row_slice(rows, cols, &r.data))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_is_row_major() {
        let m = Matrix::from_row_slice(2, 3, &[1., 2., 3., 4., 5., 6.]);
        let r = MatrixRecord::from(&m);
        assert_eq!(r.data, vec![1., 2., 3., 4., 5., 6.]);
        assert_eq!(Matrix::try_from(&r).unwrap(), m);
    }

    #[test]
    fn record_rejects_bad_shape() {
        let r = MatrixRecord {
            shape: [2, 2],
            data: vec![1.0],
        };
        assert!(Matrix::try_from(&r).is_err());
    }

    #[test]
    fn spd_solve_and_singular_detection() {
        let a = Matrix::from_row_slice(2, 2, &[4., 1., 1., 3.]);
        let b = Matrix::from_row_slice(2, 1, &[1., 2.]);
        let x = solve_spd(&a, &b).unwrap();
        assert!((&a * &x - &b).norm() < 1e-12);

        let s = Matrix::from_row_slice(2, 2, &[1., 1., 1., 1.]);
        assert!(solve_spd(&s, &b).is_none());
    }

    #[test]
    fn scatter_inverts_select() {
        let m = Matrix::from_row_slice(2, 4, &[1., 2., 3., 4., 5., 6., 7., 8.]);
        let cols = [3, 1];
        let block = select_columns(&m, &cols);
        let mut out = Matrix::zeros(2, 4);
        scatter_columns(&mut out, &cols, &block);
        assert_eq!(out[(0, 3)], 4.0);
        assert_eq!(out[(1, 1)], 6.0);
        assert_eq!(out[(0, 0)], 0.0);
    }
}
