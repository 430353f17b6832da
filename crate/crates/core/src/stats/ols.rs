use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::{student_t_two_sided_p, StatsError};

/// OLS fit with CR1 cluster-robust inference.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegressionResult {
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    /// Absent where the standard error is 0.
    pub t_stats: Vec<Option<f64>>,
    pub p_values: Vec<Option<f64>>,
    pub n_obs: usize,
    pub n_clusters: usize,
    /// Degrees of freedom of the reference t distribution (`G - 1`).
    pub df: f64,
}

/// Regresses `y` on the columns of `x`, clustering residuals by `clusters`.
///
/// The sandwich `(X'X)^-1 (sum_g X_g' u_g u_g' X_g) (X'X)^-1` is scaled by
/// `G/(G-1) * (N-1)/(N-k)`.
pub fn cluster_robust_ols<K: Ord + Clone>(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    clusters: &[K],
) -> Result<RegressionResult, StatsError> {
    let (n, k) = x.shape();
    if y.len() != n || clusters.len() != n {
        return Err(StatsError::LengthMismatch(n, y.len().min(clusters.len())));
    }
    if n < k + 1 {
        return Err(StatsError::TooFewObservations { rows: n, cols: k });
    }
    if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let mut index: BTreeMap<K, Vec<usize>> = BTreeMap::new();
    for (i, c) in clusters.iter().enumerate() {
        index.entry(c.clone()).or_default().push(i);
    }
    let g = index.len();
    if g < 2 {
        return Err(StatsError::SingleCluster);
    }

    let xtx = x.transpose() * x;
    let qr = xtx.clone().col_piv_qr();
    let r = qr.r();
    let scale = r.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = scale * 1e-12 * k as f64;
    if scale == 0.0 || r.diagonal().iter().any(|v| v.abs() <= tol) {
        return Err(StatsError::RankDeficient);
    }
    let bread = qr.try_inverse().ok_or(StatsError::RankDeficient)?;
    let beta = &bread * (x.transpose() * y);
    let resid = y - x * &beta;

    let mut meat = DMatrix::<f64>::zeros(k, k);
    for rows in index.values() {
        let mut score = DVector::<f64>::zeros(k);
        for &i in rows {
            score += x.row(i).transpose() * resid[i];
        }
        meat += &score * score.transpose();
    }
    let factor = (g as f64 / (g - 1) as f64) * ((n - 1) as f64 / (n - k) as f64);
    let vcov = (&bread * meat * &bread) * factor;

    let df = (g - 1) as f64;
    let coefficients: Vec<f64> = beta.iter().copied().collect();
    let std_errors: Vec<f64> = (0..k).map(|j| vcov[(j, j)].max(0.0).sqrt()).collect();
    let t_stats: Vec<Option<f64>> = coefficients
        .iter()
        .zip(&std_errors)
        .map(|(b, se)| (*se > 0.0).then(|| b / se))
        .collect();
    let p_values = t_stats
        .iter()
        .map(|t| t.map(|t| student_t_two_sided_p(t, df)))
        .collect();
    Ok(RegressionResult {
        coefficients,
        std_errors,
        t_stats,
        p_values,
        n_obs: n,
        n_clusters: g,
        df,
    })
}
