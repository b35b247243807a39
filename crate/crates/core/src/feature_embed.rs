//! Sparse linear map from features onto the embedded points.
//!
//! Minimizes `|XZ - U|_F^2 + alpha * trace(R Z^T Z) + beta |Z|_1` where
//! `R = 1 - C` and `C` is the Pearson correlation between columns of `U`.

use crate::apg::{self, ApgSettings};
use crate::error::{Error, Result};
use crate::linalg::{add_diagonal, check_cols, check_rows, solve_spd, Matrix};

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    pub z: Matrix,
    pub alpha: f64,
    pub beta: f64,
    pub r: Matrix,
    /// Number of entries of `z` that are exactly zero.
    pub zero_count: usize,
}

impl FeatureMap {
    pub fn count_zeros(z: &Matrix) -> usize {
        z.iter().filter(|&&v| v == 0.0).count()
    }
}

/// `R = 1 - C` over the columns of `u`, with a zero diagonal.
///
/// A zero-variance column correlates 0 with every other column.
pub fn correlation_penalty(u: &Matrix) -> Result<Matrix> {
    let (n, d) = u.shape();
    if n < 2 {
        return Err(Error::InsufficientData(n));
    }
    let centered: Vec<Vec<f64>> = u
        .column_iter()
        .map(|c| {
            let mean = c.sum() / n as f64;
            c.iter().map(|v| v - mean).collect()
        })
        .collect();
    let norms: Vec<f64> = centered
        .iter()
        .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    let mut r = Matrix::zeros(d, d);
    for i in 0..d {
        for j in (i + 1)..d {
            let c = if norms[i] > 0.0 && norms[j] > 0.0 {
                let dot: f64 = centered[i].iter().zip(&centered[j]).map(|(a, b)| a * b).sum();
                (dot / (norms[i] * norms[j])).clamp(-1.0, 1.0)
            } else {
                0.0
            };
            r[(i, j)] = 1.0 - c;
            r[(j, i)] = 1.0 - c;
        }
    }
    Ok(r)
}

/// `alpha * trace(R Z^T Z)`, equal to `alpha * sum_ij R_ij <Z_i, Z_j>` over columns.
pub fn correlation_term(z: &Matrix, r: &Matrix, alpha: f64) -> f64 {
    alpha * (r * z.tr_mul(z)).trace()
}

/// Gradient of `|XZ - U|_F^2 + alpha * trace(R Z^T Z)` for symmetric `R`.
pub fn feature_smooth_gradient(
    x: &Matrix,
    u: &Matrix,
    z: &Matrix,
    r: &Matrix,
    alpha: f64,
) -> Result<Matrix> {
    check_rows("embedding U", u, x.nrows())?;
    check_rows("map Z", z, x.ncols())?;
    check_cols("map Z", z, u.ncols())?;
    check_rows("penalty R", r, u.ncols())?;
    check_cols("penalty R", r, u.ncols())?;
    Ok(x.tr_mul(&(x * z - u)) * 2.0 + (z * r) * (2.0 * alpha))
}

/// Elementwise `sign(m) max(|m| - t, 0)`.
pub fn soft_threshold(m: &Matrix, t: f64) -> Matrix {
    m.map(|v| soft_threshold_scalar(v, t))
}

fn soft_threshold_scalar(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Smooth part plus `beta |Z|_1`.
pub fn feature_objective(x: &Matrix, u: &Matrix, z: &Matrix, r: &Matrix, alpha: f64, beta: f64) -> f64 {
    (x * z - u).norm_squared() + correlation_term(z, r, alpha) + beta * z.abs().sum()
}

/// Ridge start `(X^T X + gamma I)^-1 X^T U` with `gamma = 1e-4 trace(X^T X) / D`.
pub fn initial_map(xtx: &Matrix, xtu: &Matrix) -> Result<Matrix> {
    let d = xtx.nrows();
    let mut gamma = (1e-4 * xtx.trace() / d as f64).max(f64::MIN_POSITIVE);
    for _ in 0..8 {
        let mut a = xtx.clone();
        add_diagonal(&mut a, gamma);
        if let Some(z) = solve_spd(&a, xtu) {
            return Ok(z);
        }
        gamma *= 100.0;
    }
    Err(Error::NumericalFailure("cannot initialize feature map".into()))
}

/// Fits `Z` by APG with soft-thresholding, step `1 / L_Z` where
/// `L_Z = 2 (|X^T X|_F + alpha |R|_F)`.
pub fn fit_feature_map(
    x: &Matrix,
    u: &Matrix,
    alpha: f64,
    beta: f64,
    settings: &ApgSettings,
) -> Result<FeatureMap> {
    check_rows("embedding U", u, x.nrows())?;
    if !(alpha >= 0.0) || !(beta >= 0.0) {
        return Err(Error::InvalidParameter("alpha and beta must be >= 0".into()));
    }
    settings.validate()?;
    let r = correlation_penalty(u)?;
    let xtx = x.tr_mul(x);
    let xtu = x.tr_mul(u);
    let lipschitz = 2.0 * (xtx.norm() + alpha * r.norm());
    if lipschitz == 0.0 {
        // X = 0 and no coupling: every Z fits equally, the l1 term picks zero.
        let z = Matrix::zeros(x.ncols(), u.ncols());
        let zero_count = z.len();
        return Ok(FeatureMap {
            z,
            alpha,
            beta,
            r,
            zero_count,
        });
    }
    let init = initial_map(&xtx, &xtu)?;
    let objective = |z: &Matrix| feature_objective(x, u, z, &r, alpha, beta);
    let out = apg::minimize(
        init,
        lipschitz,
        |z| (&xtx * z - &xtu) * 2.0 + (z * &r) * (2.0 * alpha),
        |mut m, step| {
            let t = beta * step;
            m.apply(|v| *v = soft_threshold_scalar(*v, t));
            m
        },
        Some(&objective),
        settings,
    )?;
    let zero_count = FeatureMap::count_zeros(&out.solution);
    Ok(FeatureMap {
        z: out.solution,
        alpha,
        beta,
        r,
        zero_count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn correlation_examples() {
        let u = Matrix::from_row_slice(3, 4, &[1., 1., 1., 5., 2., 2., 0., 5., 3., 3., -1., 5.]);
        let r = correlation_penalty(&u).unwrap();
        assert_abs_diff_eq!(r[(0, 1)], 0.0, epsilon = 1e-15);
        // column 2 is -(column 0) after centering
        assert_abs_diff_eq!(r[(0, 2)], 2.0, epsilon = 1e-15);
        // constant column
        assert_eq!(r[(3, 0)], 1.0);
        assert_eq!(r[(3, 2)], 1.0);
        assert!(r.diagonal().iter().all(|&v| v == 0.0));
        assert_eq!(r, r.transpose());
        assert!(matches!(correlation_penalty(&Matrix::zeros(1, 2)), Err(Error::InsufficientData(1))));
    }

    #[test]
    fn gradient_hand_value() {
        let one = Matrix::from_element(1, 1, 1.0);
        let g = feature_smooth_gradient(&one, &one, &Matrix::zeros(1, 1), &Matrix::zeros(1, 1), 0.0)
            .unwrap();
        assert_eq!(g[(0, 0)], -2.0);
    }

    #[test]
    fn gradient_vanishes_at_least_squares() {
        let x = Matrix::from_row_slice(3, 2, &[1., 0., 0., 1., 1., 1.]);
        let u = Matrix::from_row_slice(3, 1, &[1., 2., 2.]);
        let z = x.tr_mul(&x).lu().solve(&x.tr_mul(&u)).unwrap();
        let g = feature_smooth_gradient(&x, &u, &z, &Matrix::zeros(1, 1), 0.0).unwrap();
        assert!(g.norm() < 1e-12);
    }

    #[test]
    fn soft_threshold_examples() {
        let m = Matrix::from_row_slice(1, 3, &[3.0, -0.5, -4.0]);
        assert_eq!(soft_threshold(&m, 1.0), Matrix::from_row_slice(1, 3, &[2.0, 0.0, -3.0]));
        assert_eq!(soft_threshold(&m, 0.0), m);
    }

    #[test]
    fn zero_features_give_zero_map() {
        let x = Matrix::zeros(4, 2);
        let u = Matrix::from_row_slice(4, 2, &[1., 0., 0., 1., 1., 1., 0., 0.]);
        let fm = fit_feature_map(&x, &u, 0.0, 1.0, &ApgSettings::default()).unwrap();
        assert_eq!(fm.zero_count, 4);
    }
}
