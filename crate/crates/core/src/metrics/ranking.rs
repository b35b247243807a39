use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Methods x datasets scores with per-dataset ranks (1 = best, ties share
/// the mean of their positions).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankTable {
    pub scores: Vec<Vec<f64>>,
    pub ranks: Vec<Vec<f64>>,
    pub average_ranks: Vec<f64>,
    pub n_methods: usize,
    pub n_datasets: usize,
}

/// Ranks methods within every dataset column and averages over datasets.
pub fn average_ranks(scores: &[Vec<Option<f64>>], higher_is_better: bool) -> Result<RankTable> {
    let k = scores.len();
    if k < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 methods to rank, got {k}"
        )));
    }
    let n = scores[0].len();
    if n == 0 {
        return Err(Error::InvalidParameter("need at least 1 dataset".into()));
    }
    let mut dense = vec![vec![0.0; n]; k];
    for (m, row) in scores.iter().enumerate() {
        if row.len() != n {
            return Err(Error::IncompleteTable {
                method: m,
                dataset: row.len().min(n),
            });
        }
        for (d, cell) in row.iter().enumerate() {
            dense[m][d] = cell
                .filter(|v| !v.is_nan())
                .ok_or(Error::IncompleteTable { method: m, dataset: d })?;
        }
    }

    let mut ranks = vec![vec![0.0; n]; k];
    for d in 0..n {
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| {
            let o = dense[a][d].total_cmp(&dense[b][d]);
            if higher_is_better {
                o.reverse()
            } else {
                o
            }
        });
        let mut start = 0;
        while start < k {
            let mut end = start;
            while end + 1 < k && dense[order[end + 1]][d] == dense[order[start]][d] {
                end += 1;
            }
            // positions start+1 ..= end+1 share their mean
            let mid = (start + end + 2) as f64 / 2.0;
            for &m in &order[start..=end] {
                ranks[m][d] = mid;
            }
            start = end + 1;
        }
    }
    let average_ranks = ranks
        .iter()
        .map(|r| r.iter().sum::<f64>() / n as f64)
        .collect();
    Ok(RankTable {
        scores: dense,
        ranks,
        average_ranks,
        n_methods: k,
        n_datasets: n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FriedmanStatistic {
    pub chi_square: f64,
    /// Iman-Davenport F statistic.
    pub f_f: f64,
}

/// `12N / (K(K+1)) [sum_j R_j^2 - K(K+1)^2 / 4]` over the average ranks.
pub fn friedman_chi_square(table: &RankTable) -> Result<f64> {
    let k = table.n_methods as f64;
    let n = table.n_datasets as f64;
    if table.n_methods < 2 || table.n_datasets < 1 {
        return Err(Error::DegenerateStatistic("need K >= 2 and N >= 1".into()));
    }
    let sum_sq: f64 = table.average_ranks.iter().map(|r| r * r).sum();
    Ok(12.0 * n / (k * (k + 1.0)) * (sum_sq - k * (k + 1.0).powi(2) / 4.0))
}

/// Friedman chi-square and `F_F = (N-1) chi2 / (N(K-1) - chi2)`.
pub fn friedman_statistic(table: &RankTable) -> Result<FriedmanStatistic> {
    if table.n_datasets < 2 {
        return Err(Error::DegenerateStatistic("F_F needs N >= 2 datasets".into()));
    }
    let chi_square = friedman_chi_square(table)?;
    let k = table.n_methods as f64;
    let n = table.n_datasets as f64;
    let denom = n * (k - 1.0) - chi_square;
    if denom.abs() <= 1e-12 * n * k {
        return Err(Error::DegenerateStatistic(
            "ranks are perfectly consistent across datasets; F_F is unbounded".into(),
        ));
    }
    Ok(FriedmanStatistic {
        chi_square,
        f_f: (n - 1.0) * chi_square / denom,
    })
}

/// Nemenyi critical difference `q * sqrt(K(K+1) / (6N))`.
pub fn nemenyi_cd(n_methods: usize, n_datasets: usize, q_alpha: f64) -> f64 {
    let k = n_methods as f64;
    q_alpha * (k * (k + 1.0) / (6.0 * n_datasets as f64)).sqrt()
}

/// Two-tailed Nemenyi critical values (studentized range / sqrt 2) for
/// K = 2..=10 methods at alpha = 0.05 and 0.10.
pub fn studentized_range_q(n_methods: usize, alpha: f64) -> Option<f64> {
    const Q05: [f64; 9] = [1.960, 2.343, 2.569, 2.728, 2.850, 2.949, 3.031, 3.102, 3.164];
    const Q10: [f64; 9] = [1.645, 2.052, 2.291, 2.459, 2.589, 2.693, 2.780, 2.855, 2.920];
    let table = if (alpha - 0.05).abs() < 1e-12 {
        &Q05
    } else if (alpha - 0.10).abs() < 1e-12 {
        &Q10
    } else {
        return None;
    };
    n_methods.checked_sub(2).and_then(|i| table.get(i)).copied()
}
