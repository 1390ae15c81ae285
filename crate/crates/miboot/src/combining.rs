//! Rubin's rules: pooling point estimates, combining within- and
//! between-imputation covariance, degrees of freedom, fraction of missing
//! information, relative efficiency, and the t-based interval.

use alloc::vec;
use alloc::vec::Vec;

use crate::data::{Df, EstimateVector};
use crate::math::{norm_quantile, sqrt, t_quantile};
use crate::matrix::Mat;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CombineError {
    EmptySequence,
    RaggedLengths,
    MissingCovariance { index: usize },
    /// Between-imputation variance needs at least two imputations.
    BetweenVarianceUndefined,
    /// W and V both zero: fraction of missing information undefined.
    NoVariance,
}

impl core::fmt::Display for CombineError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            CombineError::EmptySequence => write!(f, "no estimates to pool"),
            CombineError::RaggedLengths => write!(f, "estimates have unequal lengths"),
            CombineError::MissingCovariance { index } => {
                write!(f, "estimate {index} carries no covariance")
            }
            CombineError::BetweenVarianceUndefined => {
                write!(f, "between-variance undefined for a single imputation")
            }
            CombineError::NoVariance => write!(f, "W and V are both zero"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for CombineError {}

/// Pooled estimate with Rubin-rule covariance decomposition.
#[derive(Clone, Debug, PartialEq)]
pub struct PooledEstimate {
    pub theta_bar: Vec<f64>,
    /// Average within-imputation covariance.
    pub w: Mat,
    /// Between-imputation covariance.
    pub v: Mat,
    /// W + ((M+1)/M) V.
    pub total_cov: Mat,
    /// Per-coordinate degrees of freedom.
    pub df: Vec<Df>,
    pub m: usize,
}

/// Coordinate-wise mean of the M point estimates.
pub fn pool_point(estimates: &[EstimateVector]) -> Result<Vec<f64>, CombineError> {
    let m = estimates.len();
    if m == 0 {
        return Err(CombineError::EmptySequence);
    }
    let k = estimates[0].len();
    if estimates.iter().any(|e| e.len() != k) {
        return Err(CombineError::RaggedLengths);
    }
    let mut theta = vec![0.0; k];
    for e in estimates {
        for (acc, &x) in theta.iter_mut().zip(&e.theta) {
            *acc += x;
        }
    }
    for x in &mut theta {
        *x /= m as f64;
    }
    Ok(theta)
}

/// Combine M estimates (each with covariance) by Rubin's rules.
pub fn pool_cov(estimates: &[EstimateVector]) -> Result<PooledEstimate, CombineError> {
    let m = estimates.len();
    if m < 2 {
        return Err(CombineError::BetweenVarianceUndefined);
    }
    let mut theta_bar = pool_point(estimates)?;
    let k = theta_bar.len();
    for (i, e) in estimates.iter().enumerate() {
        if e.cov.is_none() {
            return Err(CombineError::MissingCovariance { index: i });
        }
    }
    // coordinates on which every imputation agrees exactly have zero
    // between-variance by definition; pin them so round-off in the mean
    // cannot fake a tiny V
    for j in 0..k {
        let first = estimates[0].theta[j];
        if estimates.iter().all(|e| e.theta[j] == first) {
            theta_bar[j] = first;
        }
    }
    let mut w = Mat::zeros(k, k);
    let mut v = Mat::zeros(k, k);
    for e in estimates {
        let cov = e.cov.as_ref().unwrap();
        for i in 0..k {
            for j in 0..k {
                w.add_to(i, j, cov.get(i, j));
            }
        }
        for i in 0..k {
            let di = e.theta[i] - theta_bar[i];
            for j in 0..k {
                let dj = e.theta[j] - theta_bar[j];
                v.add_to(i, j, di * dj);
            }
        }
    }
    w.scale(1.0 / m as f64);
    v.scale(1.0 / (m as f64 - 1.0));
    let mut total_cov = Mat::zeros(k, k);
    let inflate = (m as f64 + 1.0) / m as f64;
    for i in 0..k {
        for j in 0..k {
            total_cov.set(i, j, w.get(i, j) + inflate * v.get(i, j));
        }
    }
    let df = (0..k).map(|j| barnard_rubin_df(w.get(j, j), v.get(j, j), m)).collect();
    Ok(PooledEstimate { theta_bar, w, v, total_cov, df, m })
}

/// Degrees of freedom R = (M-1) [1 + M W / ((M+1) V)]^2.
///
/// V = 0 means no between-imputation spread; normal quantiles apply
/// downstream and the df is reported as unbounded.
pub fn barnard_rubin_df(w_j: f64, v_j: f64, m: usize) -> Df {
    debug_assert!(m >= 2);
    debug_assert!(w_j >= 0.0 && v_j >= 0.0);
    if v_j == 0.0 {
        return Df::Unbounded;
    }
    let m = m as f64;
    let bracket = 1.0 + m * w_j / ((m + 1.0) * v_j);
    Df::Finite((m - 1.0) * bracket * bracket)
}

/// Fraction of missing information gamma = V / (W + V).
pub fn mi_fraction_missing(w_j: f64, v_j: f64) -> Result<f64, CombineError> {
    if w_j + v_j <= 0.0 {
        return Err(CombineError::NoVariance);
    }
    Ok(v_j / (w_j + v_j))
}

/// Relative efficiency (1 + gamma/M)^-1 of an M-imputation estimator.
pub fn relative_efficiency(gamma: f64, m: usize) -> f64 {
    debug_assert!((0.0..=1.0).contains(&gamma));
    debug_assert!(m >= 1);
    1.0 / (1.0 + gamma / m as f64)
}

/// Two-sided t interval: theta ± q_{1-alpha}(df) · sqrt(total_var).
pub fn t_interval(theta_bar_j: f64, total_var_j: f64, df_j: Df, alpha: f64) -> (f64, f64) {
    debug_assert!(total_var_j >= 0.0);
    debug_assert!(alpha > 0.0 && alpha < 0.5);
    let q = match df_j {
        Df::Unbounded => norm_quantile(1.0 - alpha),
        Df::Finite(df) => t_quantile(1.0 - alpha, df),
    };
    let half = q * sqrt(total_var_j);
    (theta_bar_j - half, theta_bar_j + half)
}
