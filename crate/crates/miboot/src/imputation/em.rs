//! EM for the multivariate normal with arbitrary missingness patterns.
//!
//! The E-step works on the augmented parameter matrix
//! `P = [[-1, mu'], [mu, sigma]]`: sweeping P on the observed coordinates
//! of a pattern exposes the regression of its missing coordinates on its
//! observed ones (intercept in row 0, coefficients in the observed rows,
//! residual covariance in the missing block). P is swept fully once per
//! iteration and each pattern reverse-sweeps only its missing
//! coordinates, which keeps the cost proportional to the amount of
//! missingness rather than to the number of observed columns.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use super::{ImputeError, MvnParams};
use crate::data::IncompleteDataset;
use crate::math::{ln, sqrt, LN_2PI};
use crate::matrix::{reverse_sweep, sweep, Mat};

/// Stopping rule and safeguards for [`em_fit`].
#[derive(Clone, Copy, Debug)]
pub struct EmOptions {
    /// Relative change in observed-data log-likelihood that stops EM.
    pub tol: f64,
    pub max_iter: usize,
    /// Diagonal ridge, relative to trace(sigma)/d, applied before sweeps.
    pub ridge_rel: f64,
    /// Pivot-ratio threshold treated as a singular covariance update.
    pub max_condition: f64,
}

impl Default for EmOptions {
    fn default() -> Self {
        EmOptions { tol: 1e-8, max_iter: 1000, ridge_rel: 1e-8, max_condition: 1e12 }
    }
}

/// Result of an EM fit.
#[derive(Clone, Debug)]
pub struct EmFit {
    pub params: MvnParams,
    /// Observed-data log-likelihood at the last E-step.
    pub loglik: f64,
    /// Number of E-steps performed.
    pub iterations: usize,
    /// False when max_iter was reached before the tolerance.
    pub converged: bool,
    /// Log-likelihood after each E-step; non-decreasing up to round-off.
    pub loglik_trace: Vec<f64>,
}

/// Rows grouped by missingness pattern.
pub struct PatternSet {
    d: usize,
    patterns: Vec<Pattern>,
}

pub struct Pattern {
    pub missing: Vec<usize>,
    pub observed: Vec<usize>,
    pub rows: Vec<usize>,
}

impl PatternSet {
    pub fn new(ds: &IncompleteDataset) -> Result<Self, ImputeError> {
        let d = ds.n_cols();
        let words = d.div_ceil(64);
        let mut map: BTreeMap<Vec<u64>, usize> = BTreeMap::new();
        let mut patterns: Vec<Pattern> = Vec::new();
        let mut key = vec![0u64; words];
        for row in 0..ds.n_rows() {
            key.iter_mut().for_each(|w| *w = 0);
            let (_, mask) = ds.row_values(row);
            for (j, &m) in mask.iter().enumerate() {
                if m {
                    key[j / 64] |= 1 << (j % 64);
                }
            }
            let idx = *map.entry(key.clone()).or_insert_with(|| {
                let missing: Vec<usize> = (0..d).filter(|&j| mask[j]).collect();
                let observed: Vec<usize> = (0..d).filter(|&j| !mask[j]).collect();
                patterns.push(Pattern { missing, observed, rows: Vec::new() });
                patterns.len() - 1
            });
            patterns[idx].rows.push(row);
        }
        // fully-missing rows are allowed: they contribute nothing to the
        // observed likelihood and get unconditional draws when imputed
        Ok(PatternSet { d, patterns })
    }

    pub fn patterns(&self) -> &[Pattern] {
        &self.patterns
    }

    pub fn dim(&self) -> usize {
        self.d
    }
}

/// The augmented parameter matrix swept on every variable coordinate.
pub(super) struct SweptParams {
    /// (d+1)x(d+1); index 0 is the constant, variable j sits at j+1.
    pub full: Mat,
    /// log det of the (ridged) covariance.
    pub log_det: f64,
    d: usize,
}

impl SweptParams {
    pub fn new(params: &MvnParams, opts: &EmOptions) -> Result<Self, ImputeError> {
        let d = params.dim();
        let mut p = Mat::zeros(d + 1, d + 1);
        p.set(0, 0, -1.0);
        for j in 0..d {
            p.set(0, j + 1, params.mu[j]);
            p.set(j + 1, 0, params.mu[j]);
        }
        let mut trace = 0.0;
        for i in 0..d {
            trace += params.sigma.get(i, i);
        }
        let ridge = opts.ridge_rel * trace / d as f64;
        for i in 0..d {
            for j in 0..d {
                p.set(i + 1, j + 1, params.sigma.get(i, j) + if i == j { ridge } else { 0.0 });
            }
        }
        let mut log_det = 0.0;
        let mut pivot_min = f64::INFINITY;
        let mut pivot_max = 0.0f64;
        for k in 1..=d {
            let pivot = p.get(k, k);
            if !(pivot > 0.0) {
                return Err(ImputeError::SingularCovariance { iteration: 0 });
            }
            pivot_min = pivot_min.min(pivot);
            pivot_max = pivot_max.max(pivot);
            log_det += ln(pivot);
            sweep(&mut p, k).map_err(|_| ImputeError::SingularCovariance { iteration: 0 })?;
        }
        if pivot_max / pivot_min > opts.max_condition {
            return Err(ImputeError::SingularCovariance { iteration: 0 });
        }
        Ok(SweptParams { full: p, log_det, d })
    }

    /// Conditional model of `missing` given the remaining coordinates,
    /// obtained by reverse-sweeping the missing coordinates.
    pub fn conditional(&self, missing: &[usize]) -> Result<PatternModel, ImputeError> {
        let mut w = self.full.clone();
        for &j in missing {
            reverse_sweep(&mut w, j + 1).map_err(|_| ImputeError::SingularObservedBlock)?;
        }
        let m = missing.len();
        let observed: Vec<usize> = (0..self.d).filter(|j| !missing.contains(j)).collect();
        let mut intercept = vec![0.0; m];
        let mut coef = Mat::zeros(observed.len(), m);
        let mut resid_cov = Mat::zeros(m, m);
        for (k, &j) in missing.iter().enumerate() {
            intercept[k] = w.get(0, j + 1);
            for (oi, &o) in observed.iter().enumerate() {
                coef.set(oi, k, w.get(o + 1, j + 1));
            }
            for (k2, &j2) in missing.iter().enumerate() {
                resid_cov.set(k, k2, w.get(j + 1, j2 + 1));
            }
        }
        let (chol, log_det_resid) = chol_psd(&resid_cov);
        Ok(PatternModel {
            missing: missing.to_vec(),
            observed,
            intercept,
            coef,
            resid_cov,
            resid_chol: chol,
            log_det_obs: self.log_det - log_det_resid,
        })
    }
}

/// Conditional normal of the missing coordinates given the observed ones.
pub(super) struct PatternModel {
    pub missing: Vec<usize>,
    pub observed: Vec<usize>,
    /// Intercept per missing coordinate.
    pub intercept: Vec<f64>,
    /// observed.len() x missing.len() regression coefficients.
    pub coef: Mat,
    /// Residual covariance of the missing block.
    pub resid_cov: Mat,
    /// PSD-clamped lower Cholesky factor of the residual covariance.
    pub resid_chol: Mat,
    /// log det of the observed-block covariance.
    pub log_det_obs: f64,
}

impl PatternModel {
    /// Conditional mean of the missing coordinates for one row.
    pub fn conditional_mean(&self, values: &[f64]) -> Vec<f64> {
        let mut mean = self.intercept.clone();
        for (oi, &o) in self.observed.iter().enumerate() {
            let x = values[o];
            for (k, mk) in mean.iter_mut().enumerate() {
                *mk += self.coef.get(oi, k) * x;
            }
        }
        mean
    }
}

/// Cholesky with zero-clamping for positive semi-definite matrices.
///
/// Degenerate directions get a zero column; returns the factor and the
/// log-determinant over the positive pivots.
fn chol_psd(a: &Mat) -> (Mat, f64) {
    let n = a.rows();
    let mut l = Mat::zeros(n, n);
    let mut log_det = 0.0;
    let mut scale = 0.0f64;
    for i in 0..n {
        scale = scale.max(a.get(i, i).abs());
    }
    let tol = 1e-12 * scale.max(1e-300);
    for j in 0..n {
        let mut d = a.get(j, j);
        for k in 0..j {
            let v = l.get(j, k);
            d -= v * v;
        }
        if d <= tol {
            l.set(j, j, 0.0);
            continue;
        }
        let dj = sqrt(d);
        log_det += ln(d);
        l.set(j, j, dj);
        for i in (j + 1)..n {
            let mut s = a.get(i, j);
            for k in 0..j {
                s -= l.get(i, k) * l.get(j, k);
            }
            l.set(i, j, s / dj);
        }
    }
    (l, log_det)
}

/// One E-step: completed-data sufficient statistics and the observed-data
/// log-likelihood under `params`.
fn e_step(
    ds: &IncompleteDataset,
    patterns: &PatternSet,
    params: &MvnParams,
    opts: &EmOptions,
    iteration: usize,
) -> Result<(Mat, f64), ImputeError> {
    let d = patterns.dim();
    let swept = SweptParams::new(params, opts).map_err(|e| match e {
        ImputeError::SingularCovariance { .. } => ImputeError::SingularCovariance { iteration },
        other => other,
    })?;
    let f = &swept.full;
    let mut t = Mat::zeros(d + 1, d + 1);
    let mut loglik = 0.0;
    let mut z = vec![0.0; d + 1];

    for pat in patterns.patterns() {
        let model = swept.conditional(&pat.missing)?;
        let o = pat.observed.len() as f64;
        let base = o * LN_2PI + model.log_det_obs;
        for &row in &pat.rows {
            let (values, _) = ds.row_values(row);
            z[0] = 1.0;
            for &j in &pat.observed {
                z[j + 1] = values[j];
            }
            if !pat.missing.is_empty() {
                let mean = model.conditional_mean(values);
                for (k, &j) in pat.missing.iter().enumerate() {
                    z[j + 1] = mean[k];
                }
            }
            // fused: accumulate [1,z][1,z]' and the bilinear form with F
            let mut bilinear = 0.0;
            for i in 0..=d {
                let zi = z[i];
                let frow = f.row(i);
                let trow = t.row_mut(i);
                let mut acc = frow[i] * zi * z[i];
                trow[i] += zi * z[i];
                for j in (i + 1)..=d {
                    let p = zi * z[j];
                    trow[j] += p;
                    acc += 2.0 * frow[j] * p;
                }
                bilinear += acc;
            }
            let q = -1.0 - bilinear;
            loglik += -0.5 * (base + q);
        }
        // conditional second moment of the missing block
        if !pat.missing.is_empty() {
            let np = pat.rows.len() as f64;
            for (k, &j) in pat.missing.iter().enumerate() {
                for (k2, &j2) in pat.missing.iter().enumerate() {
                    if j <= j2 {
                        t.add_to(j + 1, j2 + 1, np * model.resid_cov.get(k, k2));
                    }
                }
            }
        }
    }
    // mirror the upper triangle
    for i in 0..=d {
        for j in (i + 1)..=d {
            let v = t.get(i, j);
            t.set(j, i, v);
        }
    }
    Ok((t, loglik))
}

fn m_step(t: &Mat, n: usize, d: usize) -> MvnParams {
    let nf = n as f64;
    let mut mu = vec![0.0; d];
    for j in 0..d {
        mu[j] = t.get(0, j + 1) / nf;
    }
    let mut sigma = Mat::zeros(d, d);
    for i in 0..d {
        for j in i..d {
            let v = t.get(i + 1, j + 1) / nf - mu[i] * mu[j];
            sigma.set(i, j, v);
            sigma.set(j, i, v);
        }
    }
    MvnParams::new(mu, sigma)
}

/// Starting values: observed column means and a diagonal of observed
/// column variances.
fn starting_values(ds: &IncompleteDataset) -> MvnParams {
    let d = ds.n_cols();
    let mut mu = vec![0.0; d];
    let mut var = vec![0.0; d];
    for j in 0..d {
        let mut n = 0usize;
        let mut mean = 0.0;
        for i in 0..ds.n_rows() {
            if let Some(x) = ds.get(i, j) {
                n += 1;
                mean += x;
            }
        }
        mean /= n as f64;
        let mut v = 0.0;
        for i in 0..ds.n_rows() {
            if let Some(x) = ds.get(i, j) {
                v += (x - mean) * (x - mean);
            }
        }
        mu[j] = mean;
        var[j] = v / n as f64;
    }
    let mut sigma = Mat::zeros(d, d);
    for j in 0..d {
        sigma.set(j, j, var[j]);
    }
    MvnParams::new(mu, sigma)
}

/// Complete-data maximum likelihood (divisor n).
fn complete_data_mle(ds: &IncompleteDataset) -> MvnParams {
    let d = ds.n_cols();
    let n = ds.n_rows();
    let nf = n as f64;
    let mut mu = vec![0.0; d];
    for i in 0..n {
        let (values, _) = ds.row_values(i);
        for j in 0..d {
            mu[j] += values[j];
        }
    }
    for m in &mut mu {
        *m /= nf;
    }
    let mut sigma = Mat::zeros(d, d);
    for i in 0..n {
        let (values, _) = ds.row_values(i);
        for a in 0..d {
            let da = values[a] - mu[a];
            for b in a..d {
                sigma.add_to(a, b, da * (values[b] - mu[b]));
            }
        }
    }
    for a in 0..d {
        for b in a..d {
            let v = sigma.get(a, b) / nf;
            sigma.set(a, b, v);
            sigma.set(b, a, v);
        }
    }
    MvnParams::new(mu, sigma)
}

/// Maximum-likelihood multivariate normal fit under ignorable missingness.
///
/// `warm_start` seeds the iteration (bootstrap refits pass the fit of the
/// source data); otherwise observed moments are used.
pub fn em_fit(
    ds: &IncompleteDataset,
    opts: &EmOptions,
    warm_start: Option<&MvnParams>,
) -> Result<EmFit, ImputeError> {
    // bootstrap resamples can lose every observed value of a column
    for j in 0..ds.n_cols() {
        if (0..ds.n_rows()).all(|i| ds.is_missing(i, j)) {
            return Err(ImputeError::Data(crate::data::DataError::FullyMissingColumn {
                column: j,
            }));
        }
    }
    let patterns = PatternSet::new(ds)?;
    if ds.missing_cells() == 0 {
        let params = complete_data_mle(ds);
        let (_, loglik) = e_step(ds, &patterns, &params, opts, 1)?;
        return Ok(EmFit {
            params,
            loglik,
            iterations: 1,
            converged: true,
            loglik_trace: vec![loglik],
        });
    }

    let mut params = match warm_start {
        Some(p) => {
            debug_assert_eq!(p.dim(), ds.n_cols());
            p.clone()
        }
        None => starting_values(ds),
    };
    let mut trace = Vec::new();
    let mut prev_ll = f64::NEG_INFINITY;
    let mut converged = false;
    let mut iterations = 0;
    for it in 1..=opts.max_iter {
        let (t, ll) = e_step(ds, &patterns, &params, opts, it)?;
        params = m_step(&t, ds.n_rows(), ds.n_cols());
        trace.push(ll);
        iterations = it;
        if it >= 2 {
            let denom = prev_ll.abs().max(1.0);
            if (ll - prev_ll).abs() < opts.tol * denom {
                converged = true;
                break;
            }
        }
        prev_ll = ll;
    }
    Ok(EmFit { params, loglik: *trace.last().unwrap(), iterations, converged, loglik_trace: trace })
}

/// Observed-data log-likelihood of `params` for `ds`: the sum over rows of
/// the log-density of each observed sub-vector under the implied marginal.
pub fn observed_loglik(ds: &IncompleteDataset, params: &MvnParams) -> Result<f64, ImputeError> {
    let patterns = PatternSet::new(ds)?;
    let opts = EmOptions::default();
    let (_, ll) = e_step(ds, &patterns, params, &opts, 0)?;
    Ok(ll)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::ColumnMeta;
    use crate::rng::RngStream;
    use crate::sampling::{normal, standard_normal};

    fn cols(n: usize) -> Vec<ColumnMeta> {
        (0..n).map(|j| ColumnMeta::continuous(&format!("x{j}"))).collect()
    }

    #[test]
    fn complete_data_hits_mle_at_iteration_one() {
        let values = vec![1.0, 2.0, 2.0, 1.0, 3.0, 5.0, 4.0, 3.0];
        let ds = IncompleteDataset::complete(cols(2), values.clone()).unwrap();
        let fit = em_fit(&ds, &EmOptions::default(), None).unwrap();
        assert_eq!(fit.iterations, 1);
        assert!(fit.converged);
        let mean0 = (1.0 + 2.0 + 3.0 + 4.0) / 4.0;
        let mean1 = (2.0 + 1.0 + 5.0 + 3.0) / 4.0;
        assert!((fit.params.mu[0] - mean0).abs() < 1e-12);
        assert!((fit.params.mu[1] - mean1).abs() < 1e-12);
        // ML covariance with divisor n
        let var0: f64 = [1.0, 2.0, 3.0, 4.0].iter().map(|x| (x - mean0) * (x - mean0)).sum::<f64>() / 4.0;
        assert!((fit.params.sigma.get(0, 0) - var0).abs() < 1e-12);
    }

    #[test]
    fn univariate_mcar_recovers_observed_moments() {
        let values = vec![1.0, 2.0, 3.0, 4.0, 100.0, 200.0];
        let mask = vec![false, false, false, false, true, true];
        let ds = IncompleteDataset::new(cols(1), values, mask).unwrap();
        let fit = em_fit(&ds, &EmOptions::default(), None).unwrap();
        assert!((fit.params.mu[0] - 2.5).abs() < 1e-9);
        let ml_var = (1.5 * 1.5 + 0.5 * 0.5 + 0.5 * 0.5 + 1.5 * 1.5) / 4.0;
        assert!((fit.params.sigma.get(0, 0) - ml_var).abs() < 1e-7);
    }

    /// Anderson factorization oracle for bivariate monotone missingness:
    /// regress x2 on x1 among complete rows, reconstruct joint moments.
    fn monotone_mle(x1: &[f64], x2: &[Option<f64>]) -> MvnParams {
        let n = x1.len() as f64;
        let mu1 = x1.iter().sum::<f64>() / n;
        let s11 = x1.iter().map(|x| (x - mu1) * (x - mu1)).sum::<f64>() / n;
        let pairs: Vec<(f64, f64)> = x1
            .iter()
            .zip(x2)
            .filter_map(|(&a, b)| b.map(|b| (a, b)))
            .collect();
        let nc = pairs.len() as f64;
        let m1c = pairs.iter().map(|p| p.0).sum::<f64>() / nc;
        let m2c = pairs.iter().map(|p| p.1).sum::<f64>() / nc;
        let s11c = pairs.iter().map(|p| (p.0 - m1c) * (p.0 - m1c)).sum::<f64>() / nc;
        let s12c = pairs.iter().map(|p| (p.0 - m1c) * (p.1 - m2c)).sum::<f64>() / nc;
        let s22c = pairs.iter().map(|p| (p.1 - m2c) * (p.1 - m2c)).sum::<f64>() / nc;
        let beta = s12c / s11c;
        let alpha = m2c - beta * m1c;
        let resid = s22c - beta * beta * s11c;
        let mu2 = alpha + beta * mu1;
        let s12 = beta * s11;
        let s22 = resid + beta * beta * s11;
        MvnParams::new(
            vec![mu1, mu2],
            Mat::from_rows(&[&[s11, s12], &[s12, s22]]),
        )
    }

    #[test]
    fn bivariate_monotone_matches_anderson_factorization() {
        let mut stream = RngStream::from_seed(314);
        let n = 400;
        let mut x1 = Vec::new();
        let mut x2 = Vec::new();
        for i in 0..n {
            let a = standard_normal(&mut stream);
            let b = 1.0 + 0.8 * a + 0.5 * standard_normal(&mut stream);
            x1.push(a);
            // monotone pattern: x2 missing for a block of rows
            x2.push(if i % 3 == 0 { None } else { Some(b) });
        }
        let oracle = monotone_mle(&x1, &x2);

        let mut values = Vec::new();
        let mut mask = Vec::new();
        for (a, b) in x1.iter().zip(&x2) {
            values.push(*a);
            mask.push(false);
            values.push(b.unwrap_or(f64::NAN));
            mask.push(b.is_none());
        }
        let ds = IncompleteDataset::new(cols(2), values, mask).unwrap();
        let opts = EmOptions { tol: 1e-12, max_iter: 5000, ..EmOptions::default() };
        let fit = em_fit(&ds, &opts, None).unwrap();
        assert!(fit.converged);
        for j in 0..2 {
            assert!((fit.params.mu[j] - oracle.mu[j]).abs() < 1e-6, "mu[{j}]");
        }
        for i in 0..2 {
            for j in 0..2 {
                assert!(
                    (fit.params.sigma.get(i, j) - oracle.sigma.get(i, j)).abs() < 1e-6,
                    "sigma[{i}][{j}]: {} vs {}",
                    fit.params.sigma.get(i, j),
                    oracle.sigma.get(i, j)
                );
            }
        }
    }

    #[test]
    fn loglik_matches_hand_computed_univariate_normal() {
        let values = vec![0.5, -0.25, 1.0, 0.25];
        let ds = IncompleteDataset::complete(cols(1), values.clone()).unwrap();
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
        let params = MvnParams::new(vec![mean], Mat::from_rows(&[&[var]]));
        let ll = observed_loglik(&ds, &params).unwrap();
        let hand: f64 = values
            .iter()
            .map(|x| -0.5 * (LN_2PI + var.ln() + (x - mean) * (x - mean) / var))
            .sum();
        // ridge shifts the variance by 1e-8 relative; compare loosely
        assert!((ll - hand).abs() < 1e-5, "{ll} vs {hand}");
    }

    #[test]
    fn loglik_ignores_fully_unobserved_extra_coordinate() {
        let values = vec![0.5, -0.25, 1.0, 0.25];
        let ds1 = IncompleteDataset::complete(cols(1), values.clone()).unwrap();
        let params1 = MvnParams::new(vec![0.3], Mat::from_rows(&[&[0.9]]));
        let ll1 = observed_loglik(&ds1, &params1).unwrap();

        // same rows plus a second, never observed coordinate
        let mut values2 = Vec::new();
        let mut mask2 = Vec::new();
        for v in &values {
            values2.extend_from_slice(&[*v, 0.0]);
            mask2.extend_from_slice(&[false, true]);
        }
        let ds2 = IncompleteDataset::new_unchecked(cols(2), values2, mask2);
        let params2 = MvnParams::new(
            vec![0.3, 7.0],
            Mat::from_rows(&[&[0.9, 0.1], &[0.1, 2.0]]),
        );
        let ll2 = observed_loglik(&ds2, &params2).unwrap();
        assert!((ll1 - ll2).abs() < 1e-6, "{ll1} vs {ll2}");
    }

    #[test]
    fn loglik_trace_is_non_decreasing() {
        let mut stream = RngStream::from_seed(2718);
        for trial in 0..50 {
            let n = 60;
            let d = 3;
            let mut values = Vec::new();
            let mut mask = Vec::new();
            for _ in 0..n {
                let z = standard_normal(&mut stream);
                for j in 0..d {
                    let x = 0.5 * z + normal(&mut stream, j as f64, 1.0);
                    let miss = stream.next_f64() < 0.25;
                    values.push(x);
                    mask.push(miss);
                }
            }
            // ensure at least one observed per column: overwrite first row
            for j in 0..d {
                mask[j] = false;
            }
            let ds = IncompleteDataset::new(cols(d), values, mask).unwrap();
            let fit = em_fit(&ds, &EmOptions::default(), None).unwrap();
            for w in fit.loglik_trace.windows(2) {
                assert!(
                    w[1] >= w[0] - 1e-10 * w[0].abs().max(1.0),
                    "trial {trial}: loglik decreased from {} to {}",
                    w[0],
                    w[1]
                );
            }
        }
    }

    #[test]
    fn em_is_invariant_under_row_permutation() {
        let mut stream = RngStream::from_seed(99);
        let n = 80;
        let mut values = Vec::new();
        let mut mask = Vec::new();
        for _ in 0..n {
            let a = standard_normal(&mut stream);
            let b = 0.6 * a + 0.8 * standard_normal(&mut stream);
            values.push(a);
            mask.push(stream.next_f64() < 0.2);
            values.push(b);
            mask.push(stream.next_f64() < 0.2);
        }
        mask[0] = false;
        mask[1] = false;
        let ds = IncompleteDataset::new(cols(2), values, mask).unwrap();
        let perm: Vec<usize> = (0..n).rev().collect();
        let shuffled = ds.select_rows(&perm);
        let f1 = em_fit(&ds, &EmOptions::default(), None).unwrap();
        let f2 = em_fit(&shuffled, &EmOptions::default(), None).unwrap();
        for j in 0..2 {
            assert!((f1.params.mu[j] - f2.params.mu[j]).abs() < 1e-9);
            for i in 0..2 {
                assert!((f1.params.sigma.get(i, j) - f2.params.sigma.get(i, j)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn duplicate_columns_raise_singular_covariance() {
        let mut values = Vec::new();
        let mut mask = Vec::new();
        let mut stream = RngStream::from_seed(5);
        for _ in 0..40 {
            let a = standard_normal(&mut stream);
            values.extend_from_slice(&[a, a]);
            mask.extend_from_slice(&[false, stream.next_f64() < 0.3]);
        }
        mask[1] = false;
        let ds = IncompleteDataset::new(cols(2), values, mask).unwrap();
        let opts = EmOptions { ridge_rel: 0.0, ..EmOptions::default() };
        match em_fit(&ds, &opts, None) {
            Err(ImputeError::SingularCovariance { .. }) => {}
            other => panic!("expected singular covariance, got {other:?}"),
        }
    }
}
