//! The six interval constructors that combine bootstrapping with
//! multiple imputation.
//!
//! Two nesting orders exist. MI Boot imputes first and bootstraps each
//! completed dataset (lanes keyed imputation-then-bootstrap); Boot MI
//! bootstraps the incomplete rows first and imputes every bootstrap
//! sample (lanes keyed bootstrap-then-imputation). Each order yields a
//! percentile variant over the pooled replicates and a variant that
//! reduces first (Rubin's rules over bootstrap variances, or averaging
//! within a bootstrap sample); `boot_mi_t` replaces the percentiles of
//! Boot MI with a t interval and `no_bootstrap` is the analytic
//! reference.
//!
//! Lane schema below a stream already keyed by (run, method):
//!
//! ```text
//! lane(1) imputation of the original data (or per-bootstrap imputation)
//! lane(2) bootstrap index draws
//! lane(3) the separate MI pass that produces the reported point estimate
//! ```

use alloc::vec;
use alloc::vec::Vec;

use crate::combining::{pool_cov, pool_point, t_interval, CombineError};
use crate::data::{Df, EstimateVector, IncompleteDataset, IntervalEstimate, MethodTag};
use crate::estimators::{Estimator, EstimatorError};
use crate::imputation::{ImputationEngine, ImputeError};
use crate::math::{sqrt, t_quantile};
use crate::rng::RngStream;
use crate::sampling::bootstrap_indices;

/// Lane label consumed by imputation of analysis data.
pub const LANE_IMPUTE: u64 = 1;
/// Lane label consumed by bootstrap index draws.
pub const LANE_BOOT: u64 = 2;
/// Lane label consumed by the point-estimate MI pass.
pub const LANE_POINT: u64 = 3;

/// Replicate failures charge against this fraction before aborting.
const MAX_FAILURE_FRACTION: f64 = 0.01;

/// Sizes and level for one interval construction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResamplingPlan {
    pub m: usize,
    pub b: usize,
    /// Per-tail level: alpha = 0.025 gives 95% intervals.
    pub alpha: f64,
    pub method: MethodTag,
}

impl ResamplingPlan {
    pub fn new(method: MethodTag, m: usize, b: usize, alpha: f64) -> Result<Self, IntervalError> {
        if !(alpha > 0.0 && alpha < 0.5) {
            return Err(IntervalError::Plan("alpha must lie in (0, 0.5)"));
        }
        if m == 0 {
            return Err(IntervalError::Plan("at least one imputation required"));
        }
        let tail_min = (1.0 / alpha) as usize + 1;
        match method {
            MethodTag::MiBootPooled | MethodTag::BootMiPooled => {
                if m * b < tail_min {
                    return Err(IntervalError::Plan(
                        "pooled percentile sample too small for the requested tail",
                    ));
                }
            }
            MethodTag::BootMi => {
                if b < tail_min {
                    return Err(IntervalError::Plan(
                        "bootstrap sample count too small for the requested tail",
                    ));
                }
            }
            MethodTag::BootMiT => {
                if b < 2 {
                    return Err(IntervalError::Plan("t interval needs at least two bootstraps"));
                }
            }
            MethodTag::MiBoot => {
                if m < 2 {
                    return Err(IntervalError::Plan("Rubin's rules need at least two imputations"));
                }
                if b < 2 {
                    return Err(IntervalError::Plan(
                        "bootstrap variance needs at least two replicates",
                    ));
                }
            }
            MethodTag::NoBootstrap => {
                if m < 2 {
                    return Err(IntervalError::Plan("Rubin's rules need at least two imputations"));
                }
            }
        }
        Ok(ResamplingPlan { m, b, alpha, method })
    }
}

/// Failures raised by interval construction.
#[derive(Clone, Debug, PartialEq)]
pub enum IntervalError {
    Plan(&'static str),
    /// Replicate failures exceeded the drop budget.
    TooManyFailures { failed: usize, total: usize },
    /// Imputation of the original data failed.
    Impute(ImputeError),
    /// Estimation on a completed original dataset failed.
    Estimate(EstimatorError),
    Combine(CombineError),
    EmptySample,
    /// Too few surviving replicates for the requested reduction.
    NotEnoughReplicates,
    /// `no_bootstrap` needs an estimator with analytic covariance.
    NoAnalyticCov,
}

impl core::fmt::Display for IntervalError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            IntervalError::Plan(msg) => write!(f, "invalid resampling plan: {msg}"),
            IntervalError::TooManyFailures { failed, total } => {
                write!(f, "{failed} of {total} replicates failed (budget is 1%)")
            }
            IntervalError::Impute(e) => write!(f, "imputation failed: {e}"),
            IntervalError::Estimate(e) => write!(f, "estimation failed: {e}"),
            IntervalError::Combine(e) => write!(f, "combination failed: {e}"),
            IntervalError::EmptySample => write!(f, "empty percentile sample"),
            IntervalError::NotEnoughReplicates => write!(f, "not enough surviving replicates"),
            IntervalError::NoAnalyticCov => {
                write!(f, "estimator provides no analytic covariance")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for IntervalError {}

impl From<ImputeError> for IntervalError {
    fn from(e: ImputeError) -> Self {
        IntervalError::Impute(e)
    }
}

impl From<crate::sampling::SampleError> for IntervalError {
    fn from(e: crate::sampling::SampleError) -> Self {
        IntervalError::Impute(ImputeError::Sample(e))
    }
}

impl From<CombineError> for IntervalError {
    fn from(e: CombineError) -> Self {
        IntervalError::Combine(e)
    }
}

/// Empirical percentile with linear interpolation between order
/// statistics: h = (N-1)p + 1 on the sorted sample.
pub fn percentile(sample: &[f64], p: f64) -> Result<f64, IntervalError> {
    if sample.is_empty() {
        return Err(IntervalError::EmptySample);
    }
    debug_assert!(p > 0.0 && p < 1.0);
    let mut sorted = sample.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    let h = (n as f64 - 1.0) * p + 1.0;
    let lo = h as usize; // floor, h >= 1
    let frac = h - lo as f64;
    let low = sorted[lo - 1];
    if frac == 0.0 || lo >= n {
        return Ok(low);
    }
    Ok(low + frac * (sorted[lo] - low))
}

fn check_failures(failed: usize, total: usize) -> Result<(), IntervalError> {
    if failed as f64 > MAX_FAILURE_FRACTION * total as f64 {
        return Err(IntervalError::TooManyFailures { failed, total });
    }
    Ok(())
}

/// Estimates on the M completions of the original data; failures abort.
fn base_estimates<E: ImputationEngine + ?Sized, S: Estimator + ?Sized>(
    data: &IncompleteDataset,
    engine: &E,
    estimator: &S,
    m: usize,
    stream: &RngStream,
) -> Result<Vec<EstimateVector>, IntervalError> {
    let completed = engine.impute(data, m, stream)?;
    completed
        .iter()
        .map(|ds| estimator.estimate(ds).map_err(IntervalError::Estimate))
        .collect()
}

fn percentile_interval(
    samples: &[Vec<f64>],
    point: Vec<f64>,
    plan: &ResamplingPlan,
    dropped: usize,
) -> Result<IntervalEstimate, IntervalError> {
    let mut lower = Vec::with_capacity(samples.len());
    let mut upper = Vec::with_capacity(samples.len());
    for coord in samples {
        lower.push(percentile(coord, plan.alpha)?);
        upper.push(percentile(coord, 1.0 - plan.alpha)?);
    }
    Ok(IntervalEstimate {
        lower,
        upper,
        point,
        method: plan.method,
        alpha: plan.alpha,
        m: plan.m,
        b: plan.b,
        df: None,
        se: None,
        dropped,
        assumes_normality: false,
    })
}

/// Method 1, MI Boot (pooled sample): impute M times, draw B bootstrap
/// samples inside every completed dataset, and take percentiles of the
/// pooled M·B replicate estimates. The reported point estimate is the
/// Rubin-rule pooling of the M original-data estimates.
pub fn mi_boot_pooled<E: ImputationEngine + ?Sized, S: Estimator + ?Sized>(
    data: &IncompleteDataset,
    engine: &E,
    estimator: &S,
    plan: &ResamplingPlan,
    stream: &RngStream,
) -> Result<IntervalEstimate, IntervalError> {
    debug_assert_eq!(plan.method, MethodTag::MiBootPooled);
    let completed = engine.impute(data, plan.m, &stream.lane(LANE_IMPUTE))?;
    let base: Vec<EstimateVector> = completed
        .iter()
        .map(|ds| estimator.estimate(ds).map_err(IntervalError::Estimate))
        .collect::<Result<_, _>>()?;
    let point = pool_point(&base)?;
    let k = point.len();

    let boot_root = stream.lane(LANE_BOOT);
    let mut samples = vec![Vec::with_capacity(plan.m * plan.b); k];
    let mut failed = 0usize;
    for (mi, ds) in completed.iter().enumerate() {
        let lane_m = boot_root.lane(mi as u64);
        for bi in 0..plan.b {
            let mut lane = lane_m.lane(bi as u64);
            let idx = bootstrap_indices(&mut lane, ds.n_rows())?;
            let boot = ds.select_rows(&idx);
            match estimator.estimate(&boot) {
                Ok(est) if est.theta.iter().all(|t| t.is_finite()) => {
                    for (j, s) in samples.iter_mut().enumerate() {
                        s.push(est.theta[j]);
                    }
                }
                _ => failed += 1,
            }
        }
    }
    check_failures(failed, plan.m * plan.b)?;
    percentile_interval(&samples, point, plan, failed)
}

/// Method 2, MI Boot: impute M times, estimate the covariance inside each
/// completed dataset from B bootstrap replicates (divisor B-1), combine
/// by Rubin's rules, and build t intervals.
pub fn mi_boot<E: ImputationEngine + ?Sized, S: Estimator + ?Sized>(
    data: &IncompleteDataset,
    engine: &E,
    estimator: &S,
    plan: &ResamplingPlan,
    stream: &RngStream,
) -> Result<IntervalEstimate, IntervalError> {
    debug_assert_eq!(plan.method, MethodTag::MiBoot);
    let completed = engine.impute(data, plan.m, &stream.lane(LANE_IMPUTE))?;
    let boot_root = stream.lane(LANE_BOOT);
    let mut failed = 0usize;
    let mut pooled_inputs = Vec::with_capacity(plan.m);
    for (mi, ds) in completed.iter().enumerate() {
        let theta_m = estimator.estimate(ds).map_err(IntervalError::Estimate)?.theta;
        let k = theta_m.len();
        let lane_m = boot_root.lane(mi as u64);
        let mut reps: Vec<Vec<f64>> = Vec::with_capacity(plan.b);
        for bi in 0..plan.b {
            let mut lane = lane_m.lane(bi as u64);
            let idx = bootstrap_indices(&mut lane, ds.n_rows())?;
            let boot = ds.select_rows(&idx);
            match estimator.estimate(&boot) {
                Ok(est) if est.theta.iter().all(|t| t.is_finite()) => reps.push(est.theta),
                _ => failed += 1,
            }
        }
        if reps.len() < 2 {
            return Err(IntervalError::NotEnoughReplicates);
        }
        let bn = reps.len() as f64;
        let mut mean = vec![0.0; k];
        for r in &reps {
            for (acc, &v) in mean.iter_mut().zip(r) {
                *acc += v;
            }
        }
        for v in &mut mean {
            *v /= bn;
        }
        let mut cov = crate::matrix::Mat::zeros(k, k);
        for r in &reps {
            for i in 0..k {
                let di = r[i] - mean[i];
                for j in i..k {
                    cov.add_to(i, j, di * (r[j] - mean[j]));
                }
            }
        }
        for i in 0..k {
            for j in i..k {
                let v = cov.get(i, j) / (bn - 1.0);
                cov.set(i, j, v);
                cov.set(j, i, v);
            }
        }
        pooled_inputs.push(EstimateVector::with_cov(theta_m, cov));
    }
    check_failures(failed, plan.m * plan.b)?;
    let pooled = pool_cov(&pooled_inputs)?;
    let k = pooled.theta_bar.len();
    let mut lower = Vec::with_capacity(k);
    let mut upper = Vec::with_capacity(k);
    let mut se = Vec::with_capacity(k);
    for j in 0..k {
        let var = pooled.total_cov.get(j, j);
        let (lo, hi) = t_interval(pooled.theta_bar[j], var, pooled.df[j], plan.alpha);
        lower.push(lo);
        upper.push(hi);
        se.push(sqrt(var));
    }
    Ok(IntervalEstimate {
        lower,
        upper,
        point: pooled.theta_bar,
        method: plan.method,
        alpha: plan.alpha,
        m: plan.m,
        b: plan.b,
        df: Some(pooled.df),
        se: Some(se),
        dropped: failed,
        assumes_normality: false,
    })
}

/// Raw Boot MI replicate table: per bootstrap sample, the estimates from
/// its M imputations (failures dropped and counted). Shared by methods 3,
/// 4, and the t variant so all three consume identical stream lanes.
fn boot_mi_replicates<E: ImputationEngine + ?Sized, S: Estimator + ?Sized>(
    data: &IncompleteDataset,
    engine: &E,
    estimator: &S,
    plan: &ResamplingPlan,
    stream: &RngStream,
) -> Result<(Vec<Vec<Vec<f64>>>, usize), IntervalError> {
    let boot_root = stream.lane(LANE_BOOT);
    let imp_root = stream.lane(LANE_IMPUTE);
    let mut table: Vec<Vec<Vec<f64>>> = Vec::with_capacity(plan.b);
    let mut failed = 0usize;
    for bi in 0..plan.b {
        let mut lane = boot_root.lane(bi as u64);
        let idx = bootstrap_indices(&mut lane, data.n_rows())?;
        let boot = data.select_rows(&idx);
        let mut cell: Vec<Vec<f64>> = Vec::with_capacity(plan.m);
        match engine.impute(&boot, plan.m, &imp_root.lane(bi as u64)) {
            Ok(sets) => {
                for ds in &sets {
                    match estimator.estimate(ds) {
                        Ok(est) if est.theta.iter().all(|t| t.is_finite()) => {
                            cell.push(est.theta)
                        }
                        _ => failed += 1,
                    }
                }
            }
            Err(_) => failed += plan.m,
        }
        table.push(cell);
    }
    check_failures(failed, plan.b * plan.m)?;
    Ok((table, failed))
}

/// Method 3, Boot MI (pooled sample): bootstrap the incomplete data,
/// impute every bootstrap sample M times, and take percentiles over all
/// B·M replicate estimates. The reported point estimate comes from one
/// MI pass over the original data.
pub fn boot_mi_pooled<E: ImputationEngine + ?Sized, S: Estimator + ?Sized>(
    data: &IncompleteDataset,
    engine: &E,
    estimator: &S,
    plan: &ResamplingPlan,
    stream: &RngStream,
) -> Result<IntervalEstimate, IntervalError> {
    debug_assert_eq!(plan.method, MethodTag::BootMiPooled);
    let base = base_estimates(data, engine, estimator, plan.m, &stream.lane(LANE_POINT))?;
    let point = pool_point(&base)?;
    let k = point.len();
    let (table, failed) = boot_mi_replicates(data, engine, estimator, plan, stream)?;
    let mut samples = vec![Vec::with_capacity(plan.b * plan.m); k];
    for cell in &table {
        for rep in cell {
            for (j, s) in samples.iter_mut().enumerate() {
                s.push(rep[j]);
            }
        }
    }
    percentile_interval(&samples, point, plan, failed)
}

/// Method 4, Boot MI: as Method 3 but the M estimates inside each
/// bootstrap sample are averaged first; percentiles are taken over the B
/// averaged values.
pub fn boot_mi<E: ImputationEngine + ?Sized, S: Estimator + ?Sized>(
    data: &IncompleteDataset,
    engine: &E,
    estimator: &S,
    plan: &ResamplingPlan,
    stream: &RngStream,
) -> Result<IntervalEstimate, IntervalError> {
    debug_assert_eq!(plan.method, MethodTag::BootMi);
    let base = base_estimates(data, engine, estimator, plan.m, &stream.lane(LANE_POINT))?;
    let point = pool_point(&base)?;
    let k = point.len();
    let (table, failed) = boot_mi_replicates(data, engine, estimator, plan, stream)?;
    let averaged = average_cells(&table, k);
    if averaged[0].is_empty() {
        return Err(IntervalError::NotEnoughReplicates);
    }
    percentile_interval(&averaged, point, plan, failed)
}

/// Per-coordinate means over each bootstrap cell; empty cells drop out.
fn average_cells(table: &[Vec<Vec<f64>>], k: usize) -> Vec<Vec<f64>> {
    let mut averaged = vec![Vec::with_capacity(table.len()); k];
    for cell in table {
        if cell.is_empty() {
            continue;
        }
        for (j, avg) in averaged.iter_mut().enumerate() {
            let s: f64 = cell.iter().map(|rep| rep[j]).sum();
            avg.push(s / cell.len() as f64);
        }
    }
    averaged
}

/// t-interval variant of Boot MI: the B within-sample averages supply a
/// variance estimate (divisor B-1) and a symmetric t interval around
/// their mean. Relies on approximate normality of the estimator, which
/// the result flags.
pub fn boot_mi_t<E: ImputationEngine + ?Sized, S: Estimator + ?Sized>(
    data: &IncompleteDataset,
    engine: &E,
    estimator: &S,
    plan: &ResamplingPlan,
    stream: &RngStream,
) -> Result<IntervalEstimate, IntervalError> {
    debug_assert_eq!(plan.method, MethodTag::BootMiT);
    let base = base_estimates(data, engine, estimator, plan.m, &stream.lane(LANE_POINT))?;
    let point = pool_point(&base)?;
    let k = point.len();
    let (table, failed) = boot_mi_replicates(data, engine, estimator, plan, stream)?;
    let averaged = average_cells(&table, k);
    let b_eff = averaged[0].len();
    if b_eff < 2 {
        return Err(IntervalError::NotEnoughReplicates);
    }
    let mut lower = Vec::with_capacity(k);
    let mut upper = Vec::with_capacity(k);
    let mut se = Vec::with_capacity(k);
    let mut df = Vec::with_capacity(k);
    let q = t_quantile(1.0 - plan.alpha, (b_eff - 1) as f64);
    for avg in &averaged {
        let n = avg.len() as f64;
        let mean = avg.iter().sum::<f64>() / n;
        let var = avg.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
        let sd = sqrt(var);
        lower.push(mean - q * sd);
        upper.push(mean + q * sd);
        se.push(sd);
        df.push(Df::Finite((b_eff - 1) as f64));
    }
    Ok(IntervalEstimate {
        lower,
        upper,
        point,
        method: plan.method,
        alpha: plan.alpha,
        m: plan.m,
        b: plan.b,
        df: Some(df),
        se: Some(se),
        dropped: failed,
        assumes_normality: true,
    })
}

/// Reference method without bootstrapping: analytic within-imputation
/// covariance combined by Rubin's rules and a t interval.
pub fn no_bootstrap<E: ImputationEngine + ?Sized, S: Estimator + ?Sized>(
    data: &IncompleteDataset,
    engine: &E,
    estimator: &S,
    plan: &ResamplingPlan,
    stream: &RngStream,
) -> Result<IntervalEstimate, IntervalError> {
    debug_assert_eq!(plan.method, MethodTag::NoBootstrap);
    if !estimator.has_analytic_cov() {
        return Err(IntervalError::NoAnalyticCov);
    }
    let base = base_estimates(data, engine, estimator, plan.m, &stream.lane(LANE_IMPUTE))?;
    let pooled = pool_cov(&base)?;
    let k = pooled.theta_bar.len();
    let mut lower = Vec::with_capacity(k);
    let mut upper = Vec::with_capacity(k);
    let mut se = Vec::with_capacity(k);
    for j in 0..k {
        let var = pooled.total_cov.get(j, j);
        let (lo, hi) = t_interval(pooled.theta_bar[j], var, pooled.df[j], plan.alpha);
        lower.push(lo);
        upper.push(hi);
        se.push(sqrt(var));
    }
    Ok(IntervalEstimate {
        lower,
        upper,
        point: pooled.theta_bar,
        method: plan.method,
        alpha: plan.alpha,
        m: plan.m,
        b: 0,
        df: Some(pooled.df),
        se: Some(se),
        dropped: 0,
        assumes_normality: false,
    })
}

/// Dispatch on the plan's method tag.
pub fn construct<E: ImputationEngine + ?Sized, S: Estimator + ?Sized>(
    data: &IncompleteDataset,
    engine: &E,
    estimator: &S,
    plan: &ResamplingPlan,
    stream: &RngStream,
) -> Result<IntervalEstimate, IntervalError> {
    match plan.method {
        MethodTag::MiBootPooled => mi_boot_pooled(data, engine, estimator, plan, stream),
        MethodTag::MiBoot => mi_boot(data, engine, estimator, plan, stream),
        MethodTag::BootMiPooled => boot_mi_pooled(data, engine, estimator, plan, stream),
        MethodTag::BootMi => boot_mi(data, engine, estimator, plan, stream),
        MethodTag::BootMiT => boot_mi_t(data, engine, estimator, plan, stream),
        MethodTag::NoBootstrap => no_bootstrap(data, engine, estimator, plan, stream),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::ColumnMeta;
    use crate::estimators::OlsEstimator;
    use crate::imputation::{EmbEngine, IdentityEngine};
    use crate::sampling::standard_normal;

    struct ConstEstimator(f64);

    impl Estimator for ConstEstimator {
        fn estimate(&self, _ds: &IncompleteDataset) -> Result<EstimateVector, EstimatorError> {
            Ok(EstimateVector::point(vec![self.0]))
        }
        fn has_analytic_cov(&self) -> bool {
            false
        }
    }

    struct MeanEstimator;

    impl Estimator for MeanEstimator {
        fn estimate(&self, ds: &IncompleteDataset) -> Result<EstimateVector, EstimatorError> {
            let n = ds.n_rows();
            let mean = (0..n).map(|i| ds.get_complete(i, 0)).sum::<f64>() / n as f64;
            Ok(EstimateVector::point(vec![mean]))
        }
        fn has_analytic_cov(&self) -> bool {
            false
        }
    }

    fn masked_dataset(n: usize, seed: u64) -> IncompleteDataset {
        let mut stream = RngStream::from_seed(seed);
        let mut values = Vec::new();
        let mut mask = Vec::new();
        for _ in 0..n {
            let x = standard_normal(&mut stream);
            let y = 0.4 * x + standard_normal(&mut stream);
            values.push(y);
            mask.push(false);
            values.push(x);
            mask.push(stream.next_f64() < 0.2);
        }
        mask[1] = false;
        IncompleteDataset::new(
            vec![ColumnMeta::continuous("y"), ColumnMeta::continuous("x1")],
            values,
            mask,
        )
        .unwrap()
    }

    fn complete_dataset(n: usize, seed: u64) -> IncompleteDataset {
        let mut stream = RngStream::from_seed(seed);
        let values: Vec<f64> = (0..n).map(|_| standard_normal(&mut stream)).collect();
        IncompleteDataset::complete(vec![ColumnMeta::continuous("y")], values).unwrap()
    }

    #[test]
    fn percentile_examples() {
        assert_eq!(percentile(&[5.0], 0.3).unwrap(), 5.0);
        assert_eq!(percentile(&[1.0, 2.0, 3.0, 4.0, 5.0], 0.5).unwrap(), 3.0);
        // h = 1.75 interpolates a quarter of the way
        assert_eq!(percentile(&[40.0, 10.0, 30.0, 20.0], 0.25).unwrap(), 17.5);
        assert_eq!(percentile(&[], 0.5), Err(IntervalError::EmptySample));
    }

    #[test]
    fn percentile_endpoints_stay_inside_sample_range() {
        let mut stream = RngStream::from_seed(3);
        for _ in 0..50 {
            let n = 1 + stream.next_index(40);
            let sample: Vec<f64> = (0..n).map(|_| standard_normal(&mut stream)).collect();
            let lo = sample.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = sample.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            for &p in &[0.01, 0.025, 0.5, 0.975, 0.99] {
                let v = percentile(&sample, p).unwrap();
                assert!(v >= lo && v <= hi);
            }
        }
    }

    #[test]
    fn percentile_interval_monotone_in_alpha() {
        let mut stream = RngStream::from_seed(4);
        let sample: Vec<f64> = (0..200).map(|_| standard_normal(&mut stream)).collect();
        let mut prev_width = f64::INFINITY;
        for &alpha in &[0.01, 0.025, 0.05, 0.1, 0.2] {
            let w = percentile(&sample, 1.0 - alpha).unwrap() - percentile(&sample, alpha).unwrap();
            assert!(w <= prev_width);
            prev_width = w;
        }
    }

    #[test]
    fn constant_estimator_gives_degenerate_interval() {
        let data = masked_dataset(60, 9);
        let plan = ResamplingPlan::new(MethodTag::MiBootPooled, 3, 40, 0.025).unwrap();
        let est = mi_boot_pooled(
            &data,
            &EmbEngine::new(),
            &ConstEstimator(2.5),
            &plan,
            &RngStream::from_seed(1),
        )
        .unwrap();
        assert_eq!(est.lower, vec![2.5]);
        assert_eq!(est.upper, vec![2.5]);
        assert_eq!(est.point, vec![2.5]);
        assert_eq!(est.dropped, 0);
    }

    #[test]
    fn mi_boot_degenerate_between_variance_uses_normal_quantile() {
        // identity engine on complete data: every imputation identical,
        // V = 0, so the interval is theta ± z * sqrt(bootstrap variance)
        let data = complete_dataset(80, 11);
        let plan = ResamplingPlan::new(MethodTag::MiBoot, 3, 60, 0.025).unwrap();
        let est = mi_boot(
            &data,
            &IdentityEngine,
            &MeanEstimator,
            &plan,
            &RngStream::from_seed(2),
        )
        .unwrap();
        assert_eq!(est.df.as_ref().unwrap()[0], Df::Unbounded);
        let se = est.se.as_ref().unwrap()[0];
        let z = crate::math::norm_quantile(0.975);
        assert!((est.upper[0] - (est.point[0] + z * se)).abs() < 1e-12);
        assert!((est.lower[0] - (est.point[0] - z * se)).abs() < 1e-12);
    }

    #[test]
    fn boot_mi_pooled_with_identity_engine_is_a_plain_percentile_bootstrap() {
        // no missing cells + identity engine + M = 1 collapses the
        // pipeline to the ordinary percentile bootstrap on the same lanes
        let data = complete_dataset(100, 21);
        let plan = ResamplingPlan::new(MethodTag::BootMiPooled, 1, 60, 0.025).unwrap();
        let stream = RngStream::from_seed(31);
        let est = boot_mi_pooled(&data, &IdentityEngine, &MeanEstimator, &plan, &stream).unwrap();

        // plain bootstrap consuming the same lane layout
        let boot_root = stream.lane(LANE_BOOT);
        let mut reps = Vec::new();
        for bi in 0..plan.b {
            let mut lane = boot_root.lane(bi as u64);
            let idx = bootstrap_indices(&mut lane, data.n_rows()).unwrap();
            let boot = data.select_rows(&idx);
            reps.push(MeanEstimator.estimate(&boot).unwrap().theta[0]);
        }
        let lo = percentile(&reps, plan.alpha).unwrap();
        let hi = percentile(&reps, 1.0 - plan.alpha).unwrap();
        assert_eq!(est.lower[0], lo);
        assert_eq!(est.upper[0], hi);
    }

    #[test]
    fn boot_mi_with_m_one_matches_pooled_replicates() {
        let data = masked_dataset(60, 33);
        let plan_avg = ResamplingPlan::new(MethodTag::BootMi, 1, 50, 0.025).unwrap();
        let plan_ps = ResamplingPlan::new(MethodTag::BootMiPooled, 1, 50, 0.025).unwrap();
        let stream = RngStream::from_seed(5);
        let avg = boot_mi(&data, &EmbEngine::new(), &OlsEstimator, &plan_avg, &stream).unwrap();
        let ps =
            boot_mi_pooled(&data, &EmbEngine::new(), &OlsEstimator, &plan_ps, &stream).unwrap();
        // averaging over a single imputation is the identity
        assert_eq!(avg.lower, ps.lower);
        assert_eq!(avg.upper, ps.upper);
    }

    #[test]
    fn boot_mi_variants_share_raw_replicates_and_differ_only_in_reduction() {
        let data = masked_dataset(50, 41);
        let plan = ResamplingPlan::new(MethodTag::BootMi, 3, 45, 0.025).unwrap();
        let stream = RngStream::from_seed(77);
        let (table, failed) =
            boot_mi_replicates(&data, &EmbEngine::new(), &OlsEstimator, &plan, &stream).unwrap();
        assert_eq!(failed, 0);

        // method 4 equals percentiles of the row means of the table
        let est = boot_mi(&data, &EmbEngine::new(), &OlsEstimator, &plan, &stream).unwrap();
        let averaged = average_cells(&table, 2);
        for j in 0..2 {
            assert_eq!(est.lower[j], percentile(&averaged[j], plan.alpha).unwrap());
            assert_eq!(est.upper[j], percentile(&averaged[j], 1.0 - plan.alpha).unwrap());
        }

        // method 3 equals percentiles of the flattened table
        let plan_ps = ResamplingPlan::new(MethodTag::BootMiPooled, 3, 45, 0.025).unwrap();
        let ps = boot_mi_pooled(&data, &EmbEngine::new(), &OlsEstimator, &plan_ps, &stream).unwrap();
        let mut flat = vec![Vec::new(); 2];
        for cell in &table {
            for rep in cell {
                for j in 0..2 {
                    flat[j].push(rep[j]);
                }
            }
        }
        for j in 0..2 {
            assert_eq!(ps.lower[j], percentile(&flat[j], plan.alpha).unwrap());
            assert_eq!(ps.upper[j], percentile(&flat[j], 1.0 - plan.alpha).unwrap());
        }
    }

    #[test]
    fn boot_mi_t_hand_example_and_symmetry() {
        // two replicate averages {-1, 1}: mean 0, sd sqrt(2), t(1) quantile
        struct AlternatingEstimator(core::cell::Cell<u32>);
        impl Estimator for AlternatingEstimator {
            fn estimate(&self, _ds: &IncompleteDataset) -> Result<EstimateVector, EstimatorError> {
                let k = self.0.get();
                self.0.set(k + 1);
                Ok(EstimateVector::point(vec![if k % 2 == 0 { -1.0 } else { 1.0 }]))
            }
            fn has_analytic_cov(&self) -> bool {
                false
            }
        }
        let data = complete_dataset(30, 51);
        let plan = ResamplingPlan::new(MethodTag::BootMiT, 1, 2, 0.025).unwrap();
        // the estimator alternates: point pass consumes one call, then the
        // two bootstrap cells give -1 and +1 in some order
        let est = boot_mi_t(
            &data,
            &IdentityEngine,
            &AlternatingEstimator(core::cell::Cell::new(1)),
            &plan,
            &RngStream::from_seed(6),
        )
        .unwrap();
        let center = 0.5 * (est.lower[0] + est.upper[0]);
        assert!(center.abs() < 1e-12);
        let expected_half = t_quantile(0.975, 1.0) * (2.0f64).sqrt();
        assert!((est.upper[0] - expected_half).abs() < 1e-9, "upper {}", est.upper[0]);
        assert!(est.assumes_normality);
        // symmetric by construction
        assert!(((est.upper[0] - center) - (center - est.lower[0])).abs() < 1e-12);
    }

    #[test]
    fn no_bootstrap_requires_analytic_covariance() {
        let data = masked_dataset(60, 61);
        let plan = ResamplingPlan::new(MethodTag::NoBootstrap, 3, 0, 0.025).unwrap();
        let err = no_bootstrap(
            &data,
            &EmbEngine::new(),
            &MeanEstimator,
            &plan,
            &RngStream::from_seed(7),
        )
        .unwrap_err();
        assert_eq!(err, IntervalError::NoAnalyticCov);
        let ok = no_bootstrap(
            &data,
            &EmbEngine::new(),
            &OlsEstimator,
            &plan,
            &RngStream::from_seed(7),
        )
        .unwrap();
        assert!(ok.lower[1] <= ok.upper[1]);
        assert_eq!(ok.b, 0);
    }

    #[test]
    fn all_constructors_return_ordered_intervals() {
        let data = masked_dataset(70, 71);
        let stream = RngStream::from_seed(8);
        for method in [
            MethodTag::MiBootPooled,
            MethodTag::MiBoot,
            MethodTag::BootMiPooled,
            MethodTag::BootMi,
            MethodTag::BootMiT,
            MethodTag::NoBootstrap,
        ] {
            let plan = ResamplingPlan::new(method, 3, 45, 0.025).unwrap();
            let est = construct(&data, &EmbEngine::new(), &OlsEstimator, &plan, &stream)
                .unwrap_or_else(|e| panic!("{method:?}: {e}"));
            for j in 0..est.lower.len() {
                assert!(est.lower[j] <= est.upper[j], "{method:?} coord {j}");
            }
            assert_eq!(est.method, method);
        }
    }

    #[test]
    fn failure_budget_aborts_loudly() {
        // estimator that fails on every bootstrap replicate (n-dependent:
        // succeeds only on the original row count via a marker column)
        struct FailingEstimator;
        impl Estimator for FailingEstimator {
            fn estimate(&self, ds: &IncompleteDataset) -> Result<EstimateVector, EstimatorError> {
                // bootstrap of a complete dataset keeps n, so fail by content:
                // any repeated first value marks a resample
                let v0 = ds.get_complete(0, 0);
                let repeats = (1..ds.n_rows()).filter(|&i| ds.get_complete(i, 0) == v0).count();
                if repeats > 0 {
                    Err(EstimatorError::RankDeficient)
                } else {
                    Ok(EstimateVector::point(vec![v0]))
                }
            }
            fn has_analytic_cov(&self) -> bool {
                false
            }
        }
        let data = complete_dataset(40, 81);
        let plan = ResamplingPlan::new(MethodTag::MiBootPooled, 2, 30, 0.025).unwrap();
        match mi_boot_pooled(
            &data,
            &IdentityEngine,
            &FailingEstimator,
            &plan,
            &RngStream::from_seed(9),
        ) {
            Err(IntervalError::TooManyFailures { failed, total }) => {
                assert_eq!(total, 60);
                assert!(failed > 0);
            }
            other => panic!("expected failure-budget abort, got {other:?}"),
        }
    }

    #[test]
    fn plan_validation_rejects_thin_tails() {
        assert!(ResamplingPlan::new(MethodTag::MiBootPooled, 2, 10, 0.025).is_err());
        assert!(ResamplingPlan::new(MethodTag::BootMi, 5, 20, 0.025).is_err());
        assert!(ResamplingPlan::new(MethodTag::MiBoot, 1, 50, 0.025).is_err());
        assert!(ResamplingPlan::new(MethodTag::NoBootstrap, 1, 0, 0.025).is_err());
        assert!(ResamplingPlan::new(MethodTag::BootMi, 5, 41, 0.025).is_ok());
    }

    #[test]
    fn dropped_replicate_count_is_reproducible() {
        // estimator failing deterministically on ~1% of replicates
        struct FlakyEstimator;
        impl Estimator for FlakyEstimator {
            fn estimate(&self, ds: &IncompleteDataset) -> Result<EstimateVector, EstimatorError> {
                let mean =
                    (0..ds.n_rows()).map(|i| ds.get_complete(i, 0)).sum::<f64>() / ds.n_rows() as f64;
                // fail in a thin, data-determined band
                if (mean * 1000.0).rem_euclid(97.0) < 0.8 {
                    Err(EstimatorError::RankDeficient)
                } else {
                    Ok(EstimateVector::point(vec![mean]))
                }
            }
            fn has_analytic_cov(&self) -> bool {
                false
            }
        }
        let data = complete_dataset(50, 91);
        let plan = ResamplingPlan::new(MethodTag::MiBootPooled, 2, 100, 0.025).unwrap();
        let run = || {
            mi_boot_pooled(
                &data,
                &IdentityEngine,
                &FlakyEstimator,
                &plan,
                &RngStream::from_seed(10),
            )
        };
        match (run(), run()) {
            (Ok(a), Ok(b)) => {
                assert_eq!(a.dropped, b.dropped);
                assert_eq!(a.lower, b.lower);
            }
            (Err(IntervalError::TooManyFailures { failed: f1, .. }),
             Err(IntervalError::TooManyFailures { failed: f2, .. })) => assert_eq!(f1, f2),
            other => panic!("inconsistent reruns: {other:?}"),
        }
    }
}
