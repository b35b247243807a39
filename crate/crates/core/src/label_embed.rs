//! Group-sparse label embedding.
//!
//! Minimizes
//!
//! ```text
//! sum_k |Y^k - U V^k|_F^2 + lambda1 |U|_F^2 + lambda2 sum_k |V^k|_{2,1}
//! ```
//!
//! by alternating a closed-form ridge update of `U` with an accelerated
//! proximal gradient solve of every block `V^k`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::apg::{self, ApgSettings};
use crate::error::{Error, Result};
use crate::grouping::GroupPartition;
use crate::linalg::{
    add_diagonal, check_cols, check_rows, l21_norm, scatter_columns, select_columns, solve_spd,
    Matrix, MatrixRecord,
};

/// Rows with an l2 norm at or below this are reported as zero in sparsity masks.
pub const NONZERO_ROW_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelEmbeddingSettings {
    pub apg: ApgSettings,
    pub outer_max_iterations: usize,
    pub outer_tolerance: f64,
    /// Standard deviation of the Gaussian entries of the initial `U`.
    pub u_init_scale: f64,
}

impl Default for LabelEmbeddingSettings {
    fn default() -> Self {
        LabelEmbeddingSettings {
            apg: ApgSettings::default(),
            outer_max_iterations: 50,
            outer_tolerance: 1e-5,
            u_init_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelEmbeddingModel {
    pub u: Matrix,
    pub v: Matrix,
    pub partition: GroupPartition,
    pub lambda1: f64,
    pub lambda2: f64,
    pub seed: u64,
    /// Objective after every outer iteration.
    pub objective_history: Vec<f64>,
    pub converged: bool,
}

impl LabelEmbeddingModel {
    pub fn latent_dim(&self) -> usize {
        self.u.ncols()
    }

    /// Coefficient block of group `k` (columns in label order).
    pub fn block(&self, k: usize) -> Matrix {
        select_columns(&self.v, &self.partition.groups()[k])
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&LabelEmbeddingRecord::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let r: LabelEmbeddingRecord = serde_json::from_str(text)?;
        r.try_into()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct LabelEmbeddingRecord {
    latent_dim: usize,
    lambda1: f64,
    lambda2: f64,
    seed: u64,
    partition: GroupPartition,
    u: MatrixRecord,
    v: MatrixRecord,
    objective_history: Vec<f64>,
    converged: bool,
}

impl From<&LabelEmbeddingModel> for LabelEmbeddingRecord {
    fn from(m: &LabelEmbeddingModel) -> Self {
        LabelEmbeddingRecord {
            latent_dim: m.latent_dim(),
            lambda1: m.lambda1,
            lambda2: m.lambda2,
            seed: m.seed,
            partition: m.partition.clone(),
            u: (&m.u).into(),
            v: (&m.v).into(),
            objective_history: m.objective_history.clone(),
            converged: m.converged,
        }
    }
}

impl TryFrom<LabelEmbeddingRecord> for LabelEmbeddingModel {
    type Error = Error;

    fn try_from(r: LabelEmbeddingRecord) -> Result<Self> {
        let u = Matrix::try_from(&r.u)?;
        let v = Matrix::try_from(&r.v)?;
        if u.ncols() != r.latent_dim || v.nrows() != r.latent_dim {
            return Err(Error::InvalidModel("U and V disagree with latent_dim".into()));
        }
        if v.ncols() != r.partition.n_labels() {
            return Err(Error::InvalidModel("V width differs from the partition size".into()));
        }
        let partition = GroupPartition::new(r.partition.assignment, r.partition.k)
            .map_err(|e| Error::InvalidModel(e.to_string()))?;
        Ok(LabelEmbeddingModel {
            u,
            v,
            partition,
            lambda1: r.lambda1,
            lambda2: r.lambda2,
            seed: r.seed,
            objective_history: r.objective_history,
            converged: r.converged,
        })
    }
}

/// Closed-form minimizer over `U` of `|Y - UV|_F^2 + lambda1 |U|_F^2`:
/// `U = Y V^T (V V^T + lambda1 I)^-1`, via a Cholesky solve.
pub fn update_basis(y: &Matrix, v: &Matrix, lambda1: f64) -> Result<Matrix> {
    check_cols("coefficient matrix V", v, y.ncols())?;
    if !(lambda1 >= 0.0) {
        return Err(Error::InvalidParameter("lambda1 must be >= 0".into()));
    }
    let mut gram = v * v.transpose();
    add_diagonal(&mut gram, lambda1);
    let rhs = v * y.transpose();
    match solve_spd(&gram, &rhs) {
        Some(ut) => Ok(ut.transpose()),
        None if lambda1 == 0.0 => Err(Error::SingularUpdate),
        None => gram
            .lu()
            .solve(&rhs)
            .filter(|x| x.iter().all(|v| v.is_finite()))
            .map(|ut| ut.transpose())
            .ok_or_else(|| Error::NumericalFailure("basis update system is singular".into())),
    }
}

/// `|2 U^T U|_F`, the Lipschitz bound of the smooth term's gradient.
pub fn lipschitz_constant(u: &Matrix) -> f64 {
    2.0 * u.tr_mul(u).norm()
}

/// Gradient of `|Y^k - U V^k|_F^2` with respect to `V^k`.
pub fn smooth_gradient(u: &Matrix, yk: &Matrix, vk: &Matrix) -> Result<Matrix> {
    check_rows("label block", yk, u.nrows())?;
    check_rows("coefficient block", vk, u.ncols())?;
    check_cols("coefficient block", vk, yk.ncols())?;
    let utu = u.tr_mul(u);
    Ok((utu * vk - u.tr_mul(yk)) * 2.0)
}

/// Row-wise shrinkage `v -> v (|v| - t)_+ / |v|`, the prox of `t |.|_{2,1}`.
pub fn row_shrinkage(m: &Matrix, t: f64) -> Matrix {
    let mut out = m.clone();
    shrink_rows_in_place(&mut out, t);
    out
}

fn shrink_rows_in_place(m: &mut Matrix, t: f64) {
    for mut row in m.row_iter_mut() {
        let n = row.norm();
        if n <= t || n == 0.0 {
            row.fill(0.0);
        } else {
            row *= (n - t) / n;
        }
    }
}

/// `|Y^k - U V^k|_F^2 + lambda2 |V^k|_{2,1}`.
pub fn group_objective(u: &Matrix, yk: &Matrix, vk: &Matrix, lambda2: f64) -> f64 {
    (yk - u * vk).norm_squared() + lambda2 * l21_norm(vk)
}

/// Ridge solution `(U^T U + gamma I)^-1 U^T Y^k`, escalating the ridge if the
/// system is numerically singular.
fn ridge_init(utu: &Matrix, uty: &Matrix, gamma: f64) -> Result<Matrix> {
    let d = utu.nrows();
    let scale = (utu.trace() / d as f64).max(f64::MIN_POSITIVE);
    let mut ridge = gamma;
    for _ in 0..8 {
        let mut a = utu.clone();
        add_diagonal(&mut a, ridge);
        if let Some(v) = solve_spd(&a, uty) {
            return Ok(v);
        }
        ridge = if ridge > 0.0 { ridge * 100.0 } else { 1e-10 * scale };
    }
    Err(Error::NumericalFailure("cannot initialize coefficient block".into()))
}

/// Solves one block `min_V |Y^k - U V|_F^2 + lambda2 |V|_{2,1}` by APG.
/// The initialization ridge is `settings.gamma` (0 when unset).
pub fn apg_fit_group(u: &Matrix, yk: &Matrix, lambda2: f64, settings: &ApgSettings) -> Result<Matrix> {
    check_rows("label block", yk, u.nrows())?;
    if !(lambda2 >= 0.0) {
        return Err(Error::InvalidParameter("lambda2 must be >= 0".into()));
    }
    settings.validate()?;
    let lg = lipschitz_constant(u);
    if lg == 0.0 {
        return Err(Error::DegenerateBasis);
    }
    if !lg.is_finite() {
        return Err(Error::NumericalFailure("basis has non-finite entries".into()));
    }
    let utu = u.tr_mul(u);
    let uty = u.tr_mul(yk);
    let init = ridge_init(&utu, &uty, settings.gamma.unwrap_or(0.0))?;
    let objective = |v: &Matrix| group_objective(u, yk, v, lambda2);
    let out = apg::minimize(
        init,
        lg,
        |g| (&utu * g - &uty) * 2.0,
        |mut m, step| {
            shrink_rows_in_place(&mut m, lambda2 * step);
            m
        },
        Some(&objective),
        settings,
    )?;
    Ok(out.solution)
}

/// Full objective with the coefficient blocks taken from `v` by `partition`.
pub fn objective(
    y: &Matrix,
    partition: &GroupPartition,
    u: &Matrix,
    v: &Matrix,
    lambda1: f64,
    lambda2: f64,
) -> Result<f64> {
    check_rows("basis U", u, y.nrows())?;
    check_rows("coefficients V", v, u.ncols())?;
    check_cols("coefficients V", v, y.ncols())?;
    if partition.n_labels() != y.ncols() {
        return Err(Error::Dimension(format!(
            "partition covers {} labels, Y has {}",
            partition.n_labels(),
            y.ncols()
        )));
    }
    let mut total = lambda1 * u.norm_squared();
    for cols in partition.groups() {
        let yk = select_columns(y, &cols);
        let vk = select_columns(v, &cols);
        total += group_objective(u, &yk, &vk, lambda2);
    }
    Ok(total)
}

/// Alternating minimization: every outer pass solves each block `V^k` by
/// APG, then updates `U` in closed form.
///
/// A block solve is only accepted when it does not raise that block's
/// objective, so the recorded history never increases.
pub fn fit_label_embedding(
    y: &Matrix,
    partition: &GroupPartition,
    latent_dim: usize,
    lambda1: f64,
    lambda2: f64,
    settings: &LabelEmbeddingSettings,
    seed: u64,
) -> Result<LabelEmbeddingModel> {
    if latent_dim == 0 {
        return Err(Error::InvalidParameter("latent dimension must be >= 1".into()));
    }
    if !(lambda1 >= 0.0) || !(lambda2 >= 0.0) {
        return Err(Error::InvalidParameter("lambda1 and lambda2 must be >= 0".into()));
    }
    if partition.n_labels() != y.ncols() {
        return Err(Error::Dimension(format!(
            "partition covers {} labels, Y has {}",
            partition.n_labels(),
            y.ncols()
        )));
    }
    settings.apg.validate()?;
    let apg_settings = ApgSettings {
        gamma: Some(settings.apg.gamma.unwrap_or(lambda1)),
        ..settings.apg
    };

    let n = y.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u = Matrix::from_fn(n, latent_dim, |_, _| {
        settings.u_init_scale * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)
    });
    let groups = partition.groups();
    let blocks: Vec<Matrix> = groups.iter().map(|cols| select_columns(y, cols)).collect();
    let mut v = Matrix::zeros(latent_dim, y.ncols());
    let mut history: Vec<f64> = Vec::new();
    let mut converged = false;

    for outer in 0..settings.outer_max_iterations.max(1) {
        let solved: Vec<Matrix> = groups
            .par_iter()
            .zip(blocks.par_iter())
            .map(|(cols, yk)| -> Result<Matrix> {
                if lipschitz_constant(&u) == 0.0 {
                    // U = 0: every block has the same fit, the penalty picks zero.
                    return Ok(Matrix::zeros(latent_dim, cols.len()));
                }
                let candidate = apg_fit_group(&u, yk, lambda2, &apg_settings)?;
                if outer == 0 {
                    return Ok(candidate);
                }
                let current = select_columns(&v, cols);
                if group_objective(&u, yk, &candidate, lambda2)
                    <= group_objective(&u, yk, &current, lambda2)
                {
                    Ok(candidate)
                } else {
                    Ok(current)
                }
            })
            .collect::<Result<_>>()?;
        for (cols, vk) in groups.iter().zip(&solved) {
            scatter_columns(&mut v, cols, vk);
        }
        u = update_basis(y, &v, lambda1)?;
        let f = objective(y, partition, &u, &v, lambda1, lambda2)?;
        if !f.is_finite() {
            return Err(Error::NumericalFailure("objective is not finite".into()));
        }
        let stop = history
            .last()
            .map(|&prev| (prev - f).abs() <= settings.outer_tolerance * prev.max(f64::MIN_POSITIVE));
        history.push(f);
        log::debug!("label embedding pass {outer}: objective {f:.6e}");
        if stop == Some(true) {
            converged = true;
            break;
        }
    }

    Ok(LabelEmbeddingModel {
        u,
        v,
        partition: partition.clone(),
        lambda1,
        lambda2,
        seed,
        objective_history: history,
        converged,
    })
}

/// One entry per (group, latent row): whether that row of `V^k` is nonzero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskEntry {
    pub group_index: usize,
    pub row_index: usize,
    pub is_nonzero: bool,
}

/// Row-sparsity pattern of every coefficient block.
pub fn sparsity_mask(v: &Matrix, partition: &GroupPartition) -> Result<Vec<MaskEntry>> {
    check_cols("coefficients V", v, partition.n_labels())?;
    let mut out = Vec::with_capacity(partition.k * v.nrows());
    for (g, cols) in partition.groups().iter().enumerate() {
        let block = select_columns(v, cols);
        for (r, row) in block.row_iter().enumerate() {
            out.push(MaskEntry {
                group_index: g,
                row_index: r,
                is_nonzero: row.norm() > NONZERO_ROW_THRESHOLD,
            });
        }
    }
    Ok(out)
}

/// `group_index,row_index,is_nonzero` CSV (`is_nonzero` as 0/1).
pub fn sparsity_mask_csv(mask: &[MaskEntry]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["group_index", "row_index", "is_nonzero"])?;
    for e in mask {
        w.write_record([
            e.group_index.to_string(),
            e.row_index.to_string(),
            u8::from(e.is_nonzero).to_string(),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?).expect("utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn basis_identity_case() {
        let y = Matrix::from_row_slice(2, 3, &[1., -1., 1., -1., -1., 1.]);
        let u = update_basis(&y, &Matrix::identity(3, 3), 0.0).unwrap();
        assert_abs_diff_eq!((u - &y).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn basis_scalar_case() {
        let u = update_basis(
            &Matrix::from_element(1, 1, 2.0),
            &Matrix::from_element(1, 1, 1.0),
            1.0,
        )
        .unwrap();
        assert_abs_diff_eq!(u[(0, 0)], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn basis_singular_without_ridge() {
        let y = Matrix::from_element(2, 2, 1.0);
        let v = Matrix::zeros(2, 2);
        assert!(matches!(update_basis(&y, &v, 0.0), Err(Error::SingularUpdate)));
        assert!(update_basis(&y, &v, 0.5).is_ok());
    }

    #[test]
    fn lipschitz_examples() {
        assert_eq!(lipschitz_constant(&Matrix::zeros(3, 2)), 0.0);
        assert_abs_diff_eq!(lipschitz_constant(&Matrix::identity(2, 2)), 2.0 * 2f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(lipschitz_constant(&Matrix::identity(2, 2)), 2.828427, epsilon = 1e-6);
        let u = Matrix::from_row_slice(2, 2, &[1., 2., -1., 0.5]);
        assert_abs_diff_eq!(
            lipschitz_constant(&(&u * 3.0)),
            9.0 * lipschitz_constant(&u),
            epsilon = 1e-12
        );
    }

    #[test]
    fn gradient_hand_value_and_stationarity() {
        let one = Matrix::from_element(1, 1, 1.0);
        let g = smooth_gradient(&one, &one, &Matrix::zeros(1, 1)).unwrap();
        assert_eq!(g[(0, 0)], -2.0);
        let u = Matrix::from_row_slice(3, 2, &[1., 0., 0., 1., 1., 1.]);
        let yk = Matrix::from_row_slice(3, 1, &[1., -1., 1.]);
        let vk = (u.tr_mul(&u)).lu().solve(&u.tr_mul(&yk)).unwrap();
        assert!(smooth_gradient(&u, &yk, &vk).unwrap().norm() < 1e-12);
        assert!(smooth_gradient(&u, &yk, &Matrix::zeros(3, 1)).is_err());
    }

    #[test]
    fn shrinkage_examples() {
        let m = Matrix::from_row_slice(2, 2, &[3., 4., 0., 0.]);
        let s = row_shrinkage(&m, 1.0);
        assert_abs_diff_eq!(s[(0, 0)], 2.4, epsilon = 1e-15);
        assert_abs_diff_eq!(s[(0, 1)], 3.2, epsilon = 1e-15);
        assert_eq!(s.row(1).norm(), 0.0);
        assert_eq!(row_shrinkage(&m, 5.0).norm(), 0.0);
        assert_eq!(row_shrinkage(&m, 0.0), m);
    }

    #[test]
    fn objective_examples() {
        let y = Matrix::from_row_slice(2, 2, &[1., -1., -1., 1.]);
        let p = GroupPartition::single(2);
        let f0 = objective(&y, &p, &Matrix::zeros(2, 1), &Matrix::zeros(1, 2), 1.0, 1.0).unwrap();
        assert_eq!(f0, 4.0);
        let u = Matrix::from_row_slice(2, 1, &[1., -1.]);
        let v = Matrix::from_row_slice(1, 2, &[1., -1.]);
        assert_eq!(objective(&y, &p, &u, &v, 0.0, 0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(
            objective(&y, &p, &u, &v, 1.0, 1.0).unwrap(),
            2.0 + 2f64.sqrt(),
            epsilon = 1e-15
        );
        assert!(objective(&y, &p, &u, &Matrix::zeros(2, 2), 0.0, 0.0).is_err());
    }

    #[test]
    fn apg_zero_basis() {
        let r = apg_fit_group(&Matrix::zeros(3, 2), &Matrix::zeros(3, 1), 1.0, &ApgSettings::default());
        assert!(matches!(r, Err(Error::DegenerateBasis)));
    }

    #[test]
    fn mask_csv_layout() {
        let v = Matrix::from_row_slice(2, 3, &[1., 0., 2., 0., 0., 1e-9]);
        let p = GroupPartition::new(vec![0, 1, 0], 2).unwrap();
        let mask = sparsity_mask(&v, &p).unwrap();
        let csv = sparsity_mask_csv(&mask).unwrap();
        assert_eq!(
            csv,
            "group_index,row_index,is_nonzero\n0,0,1\n0,1,0\n1,0,0\n1,1,0\n"
        );
    }

    #[test]
    fn json_round_trip() {
        let y = Matrix::from_row_slice(4, 3, &[1., -1., 1., -1., -1., 1., 1., 1., -1., -1., 1., 1.]);
        let m = fit_label_embedding(
            &y,
            &GroupPartition::new(vec![0, 1, 0], 2).unwrap(),
            2,
            0.01,
            0.001,
            &LabelEmbeddingSettings::default(),
            3,
        )
        .unwrap();
        let back = LabelEmbeddingModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
    }
}
