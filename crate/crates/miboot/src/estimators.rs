//! Analysis-model estimators: OLS with analytic covariance, Cox
//! proportional hazards by Newton-Raphson on the Breslow partial
//! likelihood, and the sequential g-formula for longitudinal regimes.
//!
//! Every estimator is a pure function of a complete dataset; the
//! [`Estimator`] trait is what the interval constructors are generic
//! over.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::data::{EstimateVector, IncompleteDataset};
use crate::longitudinal::{LongitudinalDataset, LongitudinalError, Regime};
use crate::math::{exp, fabs, ln, log10};
use crate::matrix::{cholesky, solve_with_cholesky, Mat, MatrixError};

/// Estimator failures.
#[derive(Clone, Debug, PartialEq)]
pub enum EstimatorError {
    /// Design matrix numerically rank deficient.
    RankDeficient,
    TooFewRows { rows: usize, params: usize },
    NoEvents,
    NonPositiveTime { row: usize },
    /// Monotone partial likelihood: a coefficient diverged.
    Separation { coordinate: usize },
    NonConvergence,
    /// No rule-consistent subjects at a g-formula step.
    NoRuleConsistentSubjects { t: usize },
    Longitudinal(String),
    /// Dataset layout does not match what the estimator expects.
    Layout(String),
}

impl core::fmt::Display for EstimatorError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            EstimatorError::RankDeficient => write!(f, "design matrix rank deficient"),
            EstimatorError::TooFewRows { rows, params } => {
                write!(f, "{rows} rows cannot identify {params} parameters")
            }
            EstimatorError::NoEvents => write!(f, "no events in the survival data"),
            EstimatorError::NonPositiveTime { row } => {
                write!(f, "non-positive survival time at row {row}")
            }
            EstimatorError::Separation { coordinate } => {
                write!(f, "separation: coefficient {coordinate} diverges")
            }
            EstimatorError::NonConvergence => write!(f, "Newton-Raphson did not converge"),
            EstimatorError::NoRuleConsistentSubjects { t } => {
                write!(f, "no rule-consistent subjects at time {t}")
            }
            EstimatorError::Longitudinal(e) => write!(f, "longitudinal data error: {e}"),
            EstimatorError::Layout(e) => write!(f, "unexpected dataset layout: {e}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for EstimatorError {}

impl From<LongitudinalError> for EstimatorError {
    fn from(e: LongitudinalError) -> Self {
        EstimatorError::Longitudinal(alloc::format!("{e}"))
    }
}

/// Pivot-ratio bound treated as rank deficiency in least squares.
const OLS_MAX_CONDITION: f64 = 1e10;

/// Ordinary least squares on a design matrix that already carries its
/// intercept column: theta = (X'X)^-1 X'y, cov = s^2 (X'X)^-1 with
/// s^2 = RSS/(n-p).
pub fn ols_fit(x: &Mat, y: &[f64]) -> Result<EstimateVector, EstimatorError> {
    let n = x.rows();
    let p = x.cols();
    assert_eq!(y.len(), n);
    if n <= p {
        return Err(EstimatorError::TooFewRows { rows: n, params: p });
    }
    let mut xtx = Mat::zeros(p, p);
    let mut xty = vec![0.0; p];
    for i in 0..n {
        let row = x.row(i);
        for a in 0..p {
            let xa = row[a];
            xty[a] += xa * y[i];
            for b in a..p {
                xtx.add_to(a, b, xa * row[b]);
            }
        }
    }
    for a in 0..p {
        for b in (a + 1)..p {
            let v = xtx.get(a, b);
            xtx.set(b, a, v);
        }
    }
    let l = match cholesky(&xtx) {
        Ok(l) => l,
        Err(MatrixError::NotPositiveDefinite { .. }) => return Err(EstimatorError::RankDeficient),
        Err(_) => return Err(EstimatorError::RankDeficient),
    };
    // successive Cholesky pivots estimate the spread of X'X's spectrum
    let mut piv_min = f64::INFINITY;
    let mut piv_max = 0.0f64;
    for j in 0..p {
        let d = l.get(j, j) * l.get(j, j);
        piv_min = piv_min.min(d);
        piv_max = piv_max.max(d);
    }
    if piv_max / piv_min > OLS_MAX_CONDITION {
        return Err(EstimatorError::RankDeficient);
    }
    let theta = solve_with_cholesky(&l, &xty);
    let mut rss = 0.0;
    for i in 0..n {
        let row = x.row(i);
        let mut fit = 0.0;
        for (xa, ta) in row.iter().zip(&theta) {
            fit += xa * ta;
        }
        let r = y[i] - fit;
        rss += r * r;
    }
    let s2 = rss / (n - p) as f64;
    let mut e = vec![0.0; p];
    let mut cov = Mat::zeros(p, p);
    for j in 0..p {
        e.fill(0.0);
        e[j] = 1.0;
        let col = solve_with_cholesky(&l, &e);
        for i in 0..p {
            cov.set(i, j, s2 * col[i]);
        }
    }
    for i in 0..p {
        for j in (i + 1)..p {
            let v = 0.5 * (cov.get(i, j) + cov.get(j, i));
            cov.set(i, j, v);
            cov.set(j, i, v);
        }
    }
    Ok(EstimateVector::with_cov(theta, cov))
}

/// Cox proportional hazards fit: Breslow ties, Newton-Raphson with step
/// halving, convergence when the score's sup-norm falls below 1e-8.
pub fn cox_fit(
    times: &[f64],
    events: &[bool],
    x: &Mat,
) -> Result<EstimateVector, EstimatorError> {
    let n = times.len();
    let p = x.cols();
    assert_eq!(events.len(), n);
    assert_eq!(x.rows(), n);
    if !events.iter().any(|&e| e) {
        return Err(EstimatorError::NoEvents);
    }
    for (i, &t) in times.iter().enumerate() {
        if !(t > 0.0) {
            return Err(EstimatorError::NonPositiveTime { row: i });
        }
    }
    // descending time order; ties keep original order for determinism
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| times[b].partial_cmp(&times[a]).unwrap().then(a.cmp(&b)));

    let mut beta = vec![0.0; p];
    let mut loglik = f64::NEG_INFINITY;
    let max_iter = 50;
    for _ in 0..max_iter {
        let (ll, score, info) = cox_pass(times, events, x, &order, &beta);
        let sup = score.iter().fold(0.0f64, |m, s| m.max(fabs(*s)));
        if sup < 1e-8 {
            let cov = invert_info(&info)?;
            return Ok(EstimateVector::with_cov(beta, cov));
        }
        let l = cholesky(&info).map_err(|_| EstimatorError::RankDeficient)?;
        let delta = solve_with_cholesky(&l, &score);
        // step halving when the partial likelihood does not increase
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..=10 {
            let cand: Vec<f64> =
                beta.iter().zip(&delta).map(|(b, d)| b + step * d).collect();
            let (cand_ll, _, _) = cox_pass(times, events, x, &order, &cand);
            if cand_ll > ll || !loglik.is_finite() {
                beta = cand;
                loglik = cand_ll;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            // score nonzero but no ascent direction progress
            return Err(EstimatorError::NonConvergence);
        }
        for (j, b) in beta.iter().enumerate() {
            if fabs(*b) > 20.0 {
                return Err(EstimatorError::Separation { coordinate: j });
            }
        }
    }
    Err(EstimatorError::NonConvergence)
}

/// One scan of the Breslow partial likelihood: log-likelihood, score, and
/// observed information at `beta`.
fn cox_pass(
    times: &[f64],
    events: &[bool],
    x: &Mat,
    order: &[usize],
    beta: &[f64],
) -> (f64, Vec<f64>, Mat) {
    let p = beta.len();
    let mut s0 = 0.0;
    let mut s1 = vec![0.0; p];
    let mut s2 = Mat::zeros(p, p);
    let mut ll = 0.0;
    let mut score = vec![0.0; p];
    let mut info = Mat::zeros(p, p);
    let n = order.len();
    let mut pos = 0;
    while pos < n {
        let t = times[order[pos]];
        // admit everyone with this time into the risk set first
        let start = pos;
        while pos < n && times[order[pos]] == t {
            let i = order[pos];
            let row = x.row(i);
            let mut xb = 0.0;
            for (xa, ba) in row.iter().zip(beta) {
                xb += xa * ba;
            }
            let w = exp(xb);
            s0 += w;
            for a in 0..p {
                s1[a] += w * row[a];
                for b in a..p {
                    s2.add_to(a, b, w * row[a] * row[b]);
                }
            }
            pos += 1;
        }
        // then process the events at this time against the full risk set
        for &i in &order[start..pos] {
            if !events[i] {
                continue;
            }
            let row = x.row(i);
            let mut xb = 0.0;
            for (xa, ba) in row.iter().zip(beta) {
                xb += xa * ba;
            }
            ll += xb - ln(s0);
            for a in 0..p {
                let ma = s1[a] / s0;
                score[a] += row[a] - ma;
                for b in a..p {
                    info.add_to(a, b, s2.get(a, b) / s0 - ma * s1[b] / s0);
                }
            }
        }
    }
    for a in 0..p {
        for b in (a + 1)..p {
            let v = info.get(a, b);
            info.set(b, a, v);
            let v = s2.get(a, b);
            s2.set(b, a, v);
        }
    }
    (ll, score, info)
}

fn invert_info(info: &Mat) -> Result<Mat, EstimatorError> {
    crate::matrix::inverse_spd(info).map_err(|_| EstimatorError::RankDeficient)
}

/// Sequential g-formula (iterated conditional expectations, backwards in
/// time) for the mean outcome at `horizon` under a static regime combined
/// with the no-censoring intervention.
///
/// At every step the regression of the next-step pseudo-outcome is fit by
/// [`ols_fit`] among rule-consistent subjects still under follow-up, on
/// a design of the current and previous time-varying covariates plus the
/// baseline demographics; columns that are constant in the fitting sample
/// are dropped (under a static regime this removes the treatment-history
/// term, which the rule fixes anyway).
pub fn seq_gformula(
    data: &LongitudinalDataset,
    regime: Regime,
    horizon: usize,
) -> Result<EstimateVector, EstimatorError> {
    let n = data.subjects.len();
    assert!(horizon <= data.horizon, "horizon exceeds the data horizon");
    let target = regime.assignment(0);

    // q[i] = Some(pseudo outcome) exactly for subjects attending step t+1
    let mut q: Vec<Option<f64>> = data
        .subjects
        .iter()
        .map(|s| {
            if s.attends(horizon) {
                Some(s.visits[horizon].y.expect("complete data required"))
            } else {
                None
            }
        })
        .collect();

    for t in (0..=horizon).rev() {
        // regressors at time t for one subject
        let design_row = |s: &crate::longitudinal::SubjectPath| -> Vec<f64> {
            let mut row = vec![1.0, s.region, s.sex, s.age];
            let visit = &s.visits[t];
            for k in 0..crate::longitudinal::N_TDC {
                row.push(visit.l[k].expect("complete data required"));
            }
            if t >= 1 {
                let prev = &s.visits[t - 1];
                for k in 0..crate::longitudinal::N_TDC {
                    row.push(prev.l[k].expect("complete data required"));
                }
            }
            row
        };

        let consistent = |s: &crate::longitudinal::SubjectPath| -> bool {
            (0..=t).all(|u| s.visits[u].a == Some(target))
        };

        let mut fit_rows: Vec<Vec<f64>> = Vec::new();
        let mut fit_y: Vec<f64> = Vec::new();
        for (i, s) in data.subjects.iter().enumerate() {
            if let Some(qi) = q[i] {
                if consistent(s) {
                    fit_rows.push(design_row(s));
                    fit_y.push(qi);
                }
            }
        }
        if fit_rows.is_empty() {
            return Err(EstimatorError::NoRuleConsistentSubjects { t });
        }
        let width = fit_rows[0].len();
        // drop columns constant in the fitting sample (intercept stays)
        let keep: Vec<usize> = (0..width)
            .filter(|&j| {
                if j == 0 {
                    return true;
                }
                let first = fit_rows[0][j];
                fit_rows.iter().any(|r| r[j] != first)
            })
            .collect();
        let mut x = Mat::zeros(fit_rows.len(), keep.len());
        for (i, r) in fit_rows.iter().enumerate() {
            for (c, &j) in keep.iter().enumerate() {
                x.set(i, c, r[j]);
            }
        }
        let fit = ols_fit(&x, &fit_y)?;

        let mut next_q: Vec<Option<f64>> = vec![None; n];
        for (i, s) in data.subjects.iter().enumerate() {
            if !s.attends(t) {
                continue;
            }
            let full = design_row(s);
            let mut pred = 0.0;
            for (c, &j) in keep.iter().enumerate() {
                pred += fit.theta[c] * full[j];
            }
            next_q[i] = Some(pred);
        }
        q = next_q;
    }

    // everyone attends baseline, so q is fully populated
    let psi = q.iter().map(|v| v.expect("baseline attendance")).sum::<f64>() / n as f64;
    Ok(EstimateVector::point(vec![psi]))
}

/// Behavioral contract mapping a complete dataset to an estimate.
pub trait Estimator {
    fn estimate(&self, dataset: &IncompleteDataset) -> Result<EstimateVector, EstimatorError>;

    /// True when the estimate carries an analytic covariance.
    fn has_analytic_cov(&self) -> bool;
}

/// OLS of column 0 on all remaining columns plus an intercept.
///
/// The estimate is the full coefficient vector, intercept first.
#[derive(Clone, Copy, Debug, Default)]
pub struct OlsEstimator;

impl Estimator for OlsEstimator {
    fn estimate(&self, dataset: &IncompleteDataset) -> Result<EstimateVector, EstimatorError> {
        let n = dataset.n_rows();
        let p = dataset.n_cols(); // intercept + covariates
        let mut x = Mat::zeros(n, p);
        let mut y = vec![0.0; n];
        for i in 0..n {
            y[i] = dataset.get_complete(i, 0);
            x.set(i, 0, 1.0);
            for j in 1..p {
                x.set(i, j, dataset.get_complete(i, j));
            }
        }
        ols_fit(&x, &y)
    }

    fn has_analytic_cov(&self) -> bool {
        true
    }
}

/// Scale applied to a covariate on its way into the Cox design.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CovariateScale {
    Identity,
    Ln,
    Log10,
}

impl CovariateScale {
    fn apply(self, x: f64) -> f64 {
        match self {
            CovariateScale::Identity => x,
            CovariateScale::Ln => ln(x),
            CovariateScale::Log10 => log10(x),
        }
    }
}

/// Cox fit on the survival layout (time, event, covariates...).
#[derive(Clone, Debug)]
pub struct CoxEstimator {
    /// (column index, scale) per design column.
    pub covariates: Vec<(usize, CovariateScale)>,
}

impl CoxEstimator {
    /// The survival-setting analysis model: ln(X1) and log10(X2) from the
    /// (time, event, X1, X2) layout.
    pub fn survival_setting() -> Self {
        CoxEstimator {
            covariates: vec![(2, CovariateScale::Ln), (3, CovariateScale::Log10)],
        }
    }
}

impl Estimator for CoxEstimator {
    fn estimate(&self, dataset: &IncompleteDataset) -> Result<EstimateVector, EstimatorError> {
        let n = dataset.n_rows();
        let p = self.covariates.len();
        let mut times = vec![0.0; n];
        let mut events = vec![false; n];
        let mut x = Mat::zeros(n, p);
        for i in 0..n {
            times[i] = dataset.get_complete(i, 0);
            events[i] = dataset.get_complete(i, 1) != 0.0;
            for (c, &(col, scale)) in self.covariates.iter().enumerate() {
                x.set(i, c, scale.apply(dataset.get_complete(i, col)));
            }
        }
        cox_fit(&times, &events, &x)
    }

    fn has_analytic_cov(&self) -> bool {
        true
    }
}

/// Sequential g-formula on the wide longitudinal layout; returns one
/// coordinate per regime.
#[derive(Clone, Debug)]
pub struct SeqGEstimator {
    pub regimes: Vec<Regime>,
    pub horizon: usize,
}

impl SeqGEstimator {
    pub fn both_regimes(horizon: usize) -> Self {
        SeqGEstimator { regimes: vec![Regime::AlwaysTreat, Regime::NeverTreat], horizon }
    }

    pub fn single(regime: Regime, horizon: usize) -> Self {
        SeqGEstimator { regimes: vec![regime], horizon }
    }
}

impl Estimator for SeqGEstimator {
    fn estimate(&self, dataset: &IncompleteDataset) -> Result<EstimateVector, EstimatorError> {
        let data = LongitudinalDataset::from_wide_completed(dataset, self.horizon)?;
        let mut theta = Vec::with_capacity(self.regimes.len());
        for &r in &self.regimes {
            let est = seq_gformula(&data, r, self.horizon)?;
            theta.push(est.theta[0]);
        }
        Ok(EstimateVector::point(theta))
    }

    fn has_analytic_cov(&self) -> bool {
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::longitudinal::{SubjectPath, Visit};
    use crate::rng::RngStream;
    use crate::sampling::{bernoulli, standard_normal};

    #[test]
    fn ols_exact_fit_has_zero_covariance() {
        // y = 1 + 2x exactly
        let x = Mat::from_rows(&[&[1.0, 0.0], &[1.0, 1.0], &[1.0, 2.0], &[1.0, 3.0]]);
        let y = [1.0, 3.0, 5.0, 7.0];
        let est = ols_fit(&x, &y).unwrap();
        assert!((est.theta[0] - 1.0).abs() < 1e-12);
        assert!((est.theta[1] - 2.0).abs() < 1e-12);
        let cov = est.cov.unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!(cov.get(i, j).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn ols_intercept_only_closed_form() {
        let x = Mat::from_rows(&[&[1.0], &[1.0], &[1.0], &[1.0]]);
        let y = [2.0, 4.0, 6.0, 8.0];
        let est = ols_fit(&x, &y).unwrap();
        assert!((est.theta[0] - 5.0).abs() < 1e-12);
        // cov = var(y)/n with the unbiased variance
        let var: f64 = y.iter().map(|v| (v - 5.0) * (v - 5.0)).sum::<f64>() / 3.0;
        assert!((est.cov.unwrap().get(0, 0) - var / 4.0).abs() < 1e-12);
    }

    #[test]
    fn ols_matches_brute_force_normal_equations() {
        // independent oracle: explicit inversion of X'X
        let mut stream = RngStream::from_seed(42);
        let n = 500;
        let mut x = Mat::zeros(n, 3);
        let mut y = vec![0.0; n];
        for i in 0..n {
            let a = standard_normal(&mut stream);
            let b = standard_normal(&mut stream);
            x.set(i, 0, 1.0);
            x.set(i, 1, a);
            x.set(i, 2, b);
            y[i] = 0.5 + 1.5 * a - 2.0 * b + standard_normal(&mut stream);
        }
        let est = ols_fit(&x, &y).unwrap();
        // oracle
        let mut xtx = Mat::zeros(3, 3);
        let mut xty = vec![0.0; 3];
        for i in 0..n {
            for a in 0..3 {
                xty[a] += x.get(i, a) * y[i];
                for b in 0..3 {
                    xtx.add_to(a, b, x.get(i, a) * x.get(i, b));
                }
            }
        }
        let inv = crate::matrix::inverse_spd(&xtx).unwrap();
        let oracle = inv.matvec(&xty);
        for j in 0..3 {
            assert!((est.theta[j] - oracle[j]).abs() < 1e-9);
        }
    }

    #[test]
    fn ols_residual_orthogonality() {
        let mut stream = RngStream::from_seed(7);
        let n = 200;
        let mut x = Mat::zeros(n, 2);
        let mut y = vec![0.0; n];
        for i in 0..n {
            let a = standard_normal(&mut stream);
            x.set(i, 0, 1.0);
            x.set(i, 1, a);
            y[i] = 0.4 * a + standard_normal(&mut stream);
        }
        let est = ols_fit(&x, &y).unwrap();
        let mut xt_r = [0.0; 2];
        let mut xt_y = [0.0; 2];
        for i in 0..n {
            let fit = est.theta[0] + est.theta[1] * x.get(i, 1);
            for a in 0..2 {
                xt_r[a] += x.get(i, a) * (y[i] - fit);
                xt_y[a] += x.get(i, a) * y[i];
            }
        }
        let norm_y = (xt_y[0] * xt_y[0] + xt_y[1] * xt_y[1]).sqrt();
        let norm_r = (xt_r[0] * xt_r[0] + xt_r[1] * xt_r[1]).sqrt();
        assert!(norm_r <= 1e-8 * norm_y);
    }

    #[test]
    fn ols_rejects_duplicate_columns() {
        let x = Mat::from_rows(&[&[1.0, 2.0, 2.0], &[1.0, 3.0, 3.0], &[1.0, 4.0, 4.0], &[1.0, 5.0, 5.0]]);
        let y = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(ols_fit(&x, &y).unwrap_err(), EstimatorError::RankDeficient);
    }

    /// Grid-search oracle over the explicit Breslow partial likelihood.
    fn cox_grid_oracle(times: &[f64], events: &[bool], x: &[f64]) -> f64 {
        let pl = |beta: f64| -> f64 {
            let mut ll = 0.0;
            for i in 0..times.len() {
                if !events[i] {
                    continue;
                }
                let mut denom = 0.0;
                for j in 0..times.len() {
                    if times[j] >= times[i] {
                        denom += (beta * x[j]).exp();
                    }
                }
                ll += beta * x[i] - denom.ln();
            }
            ll
        };
        let mut best = (f64::NEG_INFINITY, 0.0);
        let mut b = -5.0;
        while b <= 5.0 {
            let v = pl(b);
            if v > best.0 {
                best = (v, b);
            }
            b += 1e-4;
        }
        best.1
    }

    #[test]
    fn cox_matches_grid_search_on_small_instance() {
        let times = [2.0, 5.0, 1.0, 7.0];
        let events = [true, true, true, false];
        let xcol = [1.0, 0.0, 0.0, 1.0];
        let x = Mat::from_rows(&[&[1.0], &[0.0], &[0.0], &[1.0]]);
        let est = cox_fit(&times, &events, &x).unwrap();
        let oracle = cox_grid_oracle(&times, &events, &xcol);
        assert!(
            (est.theta[0] - oracle).abs() < 1e-3,
            "newton {} vs grid {}",
            est.theta[0],
            oracle
        );
    }

    #[test]
    fn cox_null_covariate_is_within_three_se() {
        let mut stream = RngStream::from_seed(11);
        let n = 2000;
        let mut times = vec![0.0; n];
        let mut events = vec![false; n];
        let mut x = Mat::zeros(n, 1);
        for i in 0..n {
            // X independent of the exponential hazard
            x.set(i, 0, standard_normal(&mut stream));
            let y = -ln(stream.next_f64()) / 0.1;
            let c = -ln(stream.next_f64()) / 0.05;
            times[i] = y.min(c);
            events[i] = y <= c;
        }
        let est = cox_fit(&times, &events, &x).unwrap();
        let se = est.cov.unwrap().get(0, 0).sqrt();
        assert!(est.theta[0].abs() < 3.0 * se, "beta {} se {se}", est.theta[0]);
    }

    #[test]
    fn cox_invariant_to_shifting_late_censoring_times() {
        let times = [1.0, 2.0, 3.0, 9.0, 10.0];
        let events = [true, true, true, false, false];
        let x = Mat::from_rows(&[&[0.3], &[-0.2], &[1.0], &[0.5], &[-1.0]]);
        let base = cox_fit(&times, &events, &x).unwrap();
        // censored beyond the last event time, shifted by a constant
        let shifted = [1.0, 2.0, 3.0, 14.0, 15.0];
        let moved = cox_fit(&shifted, &events, &x).unwrap();
        assert_eq!(base.theta, moved.theta);
    }

    #[test]
    fn cox_rejects_degenerate_inputs() {
        let x = Mat::from_rows(&[&[1.0], &[0.0]]);
        assert_eq!(
            cox_fit(&[1.0, 2.0], &[false, false], &x).unwrap_err(),
            EstimatorError::NoEvents
        );
        assert_eq!(
            cox_fit(&[1.0, 0.0], &[true, true], &x).unwrap_err(),
            EstimatorError::NonPositiveTime { row: 1 }
        );
    }

    #[test]
    fn cox_detects_separation() {
        // perfect separation: events only in the x = 1 group, which also
        // fails earlier than every censoring time in the x = 0 group
        let times = [1.0, 1.5, 2.0, 8.0, 9.0, 10.0];
        let events = [true, true, true, false, false, false];
        let x = Mat::from_rows(&[&[1.0], &[1.0], &[1.0], &[0.0], &[0.0], &[0.0]]);
        match cox_fit(&times, &events, &x) {
            Err(EstimatorError::Separation { .. }) | Err(EstimatorError::NonConvergence) => {}
            other => panic!("expected separation, got {other:?}"),
        }
    }

    // ---- sequential g-formula ----

    fn uncensored_subject(
        region: f64,
        l1: &[f64],
        y: &[f64],
        a: &[f64],
    ) -> SubjectPath {
        let visits = (0..l1.len())
            .map(|t| Visit {
                l: [Some(l1[t]), Some(0.0), Some(0.0)],
                y: Some(y[t]),
                a: Some(a[t]),
                censored: false,
            })
            .collect();
        SubjectPath { region, sex: 0.0, age: 3.0, visits }
    }

    #[test]
    fn single_step_collapses_to_sample_mean() {
        // T = 0, everyone consistent with the regime: psi = mean(Y_0)
        // because OLS fitted values average to the response
        let mut subjects = Vec::new();
        let mut stream = RngStream::from_seed(5);
        let mut mean = 0.0;
        let n = 50;
        for _ in 0..n {
            let l = standard_normal(&mut stream);
            let y = 1.0 + 0.5 * l + 0.1 * standard_normal(&mut stream);
            mean += y;
            subjects.push(uncensored_subject(bernoulli(&mut stream, 0.5), &[l], &[y], &[1.0]));
        }
        mean /= n as f64;
        let data = LongitudinalDataset { horizon: 0, subjects };
        data.validate().unwrap();
        let est = seq_gformula(&data, Regime::AlwaysTreat, 0).unwrap();
        assert!((est.theta[0] - mean).abs() < 1e-10, "{} vs {mean}", est.theta[0]);
    }

    /// Brute-force stratified g-computation on a saturated T = 1 instance
    /// with one binary time-varying covariate and constant baseline.
    fn stratified_oracle(data: &LongitudinalDataset, regime: Regime) -> f64 {
        let d = regime.assignment(0);
        // stratified mean of Y_1 by L_1 among subjects consistent through 1
        let mut mean_y = [0.0; 2];
        for stratum in 0..2 {
            let ys: Vec<f64> = data
                .subjects
                .iter()
                .filter(|s| {
                    s.attends(1)
                        && s.visits[0].a == Some(d)
                        && s.visits[1].a == Some(d)
                        && s.visits[1].l[0] == Some(stratum as f64)
                })
                .map(|s| s.visits[1].y.unwrap())
                .collect();
            mean_y[stratum] = ys.iter().sum::<f64>() / ys.len() as f64;
        }
        // average over the L_1 distribution among subjects consistent at 0
        let pool: Vec<usize> = data
            .subjects
            .iter()
            .enumerate()
            .filter(|(_, s)| s.attends(1) && s.visits[0].a == Some(d))
            .map(|(i, _)| i)
            .collect();
        let psi_pool: f64 = pool
            .iter()
            .map(|&i| mean_y[data.subjects[i].visits[1].l[0].unwrap() as usize])
            .sum::<f64>()
            / pool.len() as f64;
        psi_pool
    }

    #[test]
    fn matches_brute_force_stratified_g_computation() {
        // binary L_1, constant everything else: the linear step-1 design
        // [1, l1_1] is saturated, so ICE must equal the stratified oracle
        let mut stream = RngStream::from_seed(17);
        let mut subjects = Vec::new();
        for _ in 0..400 {
            let a0 = bernoulli(&mut stream, 0.5);
            let l1 = bernoulli(&mut stream, if a0 > 0.0 { 0.7 } else { 0.3 });
            let a1 = if a0 > 0.0 { 1.0 } else { bernoulli(&mut stream, 0.4) };
            let y1 = 2.0 * l1 - 1.0 * a1 + 0.5
                + 0.3 * standard_normal(&mut stream);
            subjects.push(uncensored_subject(
                0.0,
                &[0.5, l1],
                &[0.0, y1],
                &[a0, a1],
            ));
        }
        let data = LongitudinalDataset { horizon: 1, subjects };
        data.validate().unwrap();
        for regime in [Regime::AlwaysTreat, Regime::NeverTreat] {
            let est = seq_gformula(&data, regime, 1).unwrap();
            let oracle = stratified_oracle(&data, regime);
            assert!(
                (est.theta[0] - oracle).abs() < 1e-8,
                "{regime}: ICE {} vs oracle {oracle}",
                est.theta[0]
            );
        }
    }

    #[test]
    fn errors_when_no_rule_consistent_subjects() {
        let subjects = alloc::vec![
            uncensored_subject(0.0, &[0.1, 0.4], &[0.0, 1.0], &[0.0, 0.0]),
            uncensored_subject(1.0, &[0.2, 0.3], &[0.0, 2.0], &[0.0, 1.0]),
        ];
        let data = LongitudinalDataset { horizon: 1, subjects };
        let err = seq_gformula(&data, Regime::AlwaysTreat, 1).unwrap_err();
        assert!(matches!(err, EstimatorError::NoRuleConsistentSubjects { .. }));
    }
}
