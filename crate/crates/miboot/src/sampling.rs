//! Primitive samplers on top of [`RngStream`]: bootstrap resampling,
//! standard distributions, the Clayton copula, the truncated-normal
//! replacement scheme, and the survival-time generator.

use alloc::vec::Vec;

use crate::math::{cos, exp, ln, log10, norm_quantile, sqrt, PI};
use crate::rng::RngStream;

/// Errors raised by the samplers.
#[derive(Clone, Debug, PartialEq)]
pub enum SampleError {
    ZeroSampleSize,
    NonPositiveTheta,
    NonPositiveSigma,
    NonPositiveCovariate,
    BadTruncation,
}

impl core::fmt::Display for SampleError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            SampleError::ZeroSampleSize => write!(f, "sample size must be at least 1"),
            SampleError::NonPositiveTheta => write!(f, "copula parameter must be positive"),
            SampleError::NonPositiveSigma => write!(f, "sigma must be positive"),
            SampleError::NonPositiveCovariate => {
                write!(f, "covariate must be positive (logarithm undefined)")
            }
            SampleError::BadTruncation => write!(f, "truncation bounds out of order"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for SampleError {}

/// n indices drawn independently and uniformly with replacement from [0, n).
pub fn bootstrap_indices(stream: &mut RngStream, n: usize) -> Result<Vec<usize>, SampleError> {
    if n == 0 {
        return Err(SampleError::ZeroSampleSize);
    }
    Ok((0..n).map(|_| stream.next_index(n)).collect())
}

/// Standard normal draw (Box-Muller; two uniforms per draw).
#[inline]
pub fn standard_normal(stream: &mut RngStream) -> f64 {
    let u1 = stream.next_f64();
    let u2 = stream.next_f64();
    sqrt(-2.0 * ln(u1)) * cos(2.0 * PI * u2)
}

/// Normal draw with mean and standard deviation.
#[inline]
pub fn normal(stream: &mut RngStream, mean: f64, sd: f64) -> f64 {
    mean + sd * standard_normal(stream)
}

/// Unit-exponential draw.
#[inline]
pub fn exponential(stream: &mut RngStream) -> f64 {
    -ln(stream.next_f64())
}

/// Bernoulli draw returning 0.0 or 1.0.
#[inline]
pub fn bernoulli(stream: &mut RngStream, p: f64) -> f64 {
    if stream.next_f64() < p {
        1.0
    } else {
        0.0
    }
}

/// Uniform draw on [lo, hi].
#[inline]
pub fn uniform(stream: &mut RngStream, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * stream.next_f64()
}

/// Gamma(shape, 1) draw; Marsaglia-Tsang with the boost for shape < 1.
pub fn gamma(stream: &mut RngStream, shape: f64) -> f64 {
    debug_assert!(shape > 0.0);
    if shape < 1.0 {
        let g = gamma(stream, shape + 1.0);
        let u = stream.next_f64();
        return g * exp(ln(u) / shape);
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / sqrt(9.0 * d);
    loop {
        let x = standard_normal(stream);
        let t = 1.0 + c * x;
        if t <= 0.0 {
            continue;
        }
        let v = t * t * t;
        let u = stream.next_f64();
        if u < 1.0 - 0.0331 * x * x * x * x {
            return d * v;
        }
        if ln(u) < 0.5 * x * x + d * (1.0 - v + ln(v)) {
            return d * v;
        }
    }
}

/// Marginal distribution attached to a copula dimension.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Marginal {
    Uniform01,
    Normal { mean: f64, sd: f64 },
    LogNormal { mu_log: f64, sd_log: f64 },
    Bernoulli { p: f64 },
}

impl Marginal {
    /// Inverse CDF at u in (0,1).
    pub fn inverse_cdf(self, u: f64) -> f64 {
        match self {
            Marginal::Uniform01 => u,
            Marginal::Normal { mean, sd } => mean + sd * norm_quantile(u),
            Marginal::LogNormal { mu_log, sd_log } => exp(mu_log + sd_log * norm_quantile(u)),
            Marginal::Bernoulli { p } => {
                if u > 1.0 - p {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Clayton copula specification: dependence parameter plus marginals.
#[derive(Clone, Debug, PartialEq)]
pub struct ClaytonSpec {
    pub theta: f64,
    pub marginals: Vec<Marginal>,
}

impl ClaytonSpec {
    pub fn new(theta: f64, marginals: Vec<Marginal>) -> Result<Self, SampleError> {
        if theta <= 0.0 {
            return Err(SampleError::NonPositiveTheta);
        }
        debug_assert!(marginals.len() >= 2);
        Ok(ClaytonSpec { theta, marginals })
    }

    pub fn dim(&self) -> usize {
        self.marginals.len()
    }
}

/// One row from the Clayton copula by the gamma-frailty construction:
/// G ~ Gamma(1/theta, 1), U_j = (1 + E_j/G)^(-1/theta) with unit
/// exponentials E_j, then marginal inverse CDFs. Exact for any dimension.
pub fn sample_clayton_row(stream: &mut RngStream, spec: &ClaytonSpec) -> Vec<f64> {
    let g = gamma(stream, 1.0 / spec.theta);
    spec.marginals
        .iter()
        .map(|marg| {
            let e = exponential(stream);
            let u = exp(-ln(1.0 + e / g) / spec.theta);
            marg.inverse_cdf(u)
        })
        .collect()
}

/// n i.i.d. Clayton rows as a row-major matrix.
pub fn sample_clayton(
    stream: &mut RngStream,
    spec: &ClaytonSpec,
    n: usize,
) -> Result<Vec<Vec<f64>>, SampleError> {
    if n == 0 {
        return Err(SampleError::ZeroSampleSize);
    }
    Ok((0..n).map(|_| sample_clayton_row(stream, spec)).collect())
}

/// Truncation recipe for [`sample_truncated_normal`].
///
/// Draws below `a` are replaced by a Uniform(a1, a2) draw and draws above
/// `b` by a Uniform(b1, b2) draw; this replacement scheme (not rejection
/// sampling) is deliberate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Truncation {
    pub a: f64,
    pub b: f64,
    pub a1: f64,
    pub a2: f64,
    pub b1: f64,
    pub b2: f64,
}

impl Truncation {
    pub fn new(a: f64, b: f64, a1: f64, a2: f64, b1: f64, b2: f64) -> Result<Self, SampleError> {
        if a1 > a2 || b1 > b2 {
            return Err(SampleError::BadTruncation);
        }
        Ok(Truncation { a, b, a1, a2, b1, b2 })
    }
}

/// Truncated-normal draw with uniform replacement outside [a, b].
pub fn sample_truncated_normal(
    stream: &mut RngStream,
    mu: f64,
    sigma: f64,
    trunc: &Truncation,
) -> Result<f64, SampleError> {
    if sigma <= 0.0 {
        return Err(SampleError::NonPositiveSigma);
    }
    let x = normal(stream, mu, sigma);
    if x < trunc.a {
        Ok(uniform(stream, trunc.a1, trunc.a2))
    } else if x > trunc.b {
        Ok(uniform(stream, trunc.b1, trunc.b2))
    } else {
        Ok(x)
    }
}

/// Baseline hazard for the survival generator.
pub const SURVIVAL_BASE_HAZARD: f64 = 0.1;
/// Censoring hazard for the survival generator.
pub const SURVIVAL_CENSOR_RATE: f64 = 0.2;

/// Survival time and event indicator for one subject.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurvivalDraw {
    pub time: f64,
    pub event: bool,
}

/// Deterministic core of the survival generator given two uniforms.
///
/// y = -ln(u) / (h0 exp(xb)) with xb = -0.3 ln(x1) + 0.3 log10(x2),
/// censoring c = -ln(u_cens) / 0.2; returns (min(y, c), y <= c).
pub fn survival_from_uniforms(
    u: f64,
    u_cens: f64,
    x_row: [f64; 2],
) -> Result<SurvivalDraw, SampleError> {
    let [x1, x2] = x_row;
    if x1 <= 0.0 || x2 <= 0.0 {
        return Err(SampleError::NonPositiveCovariate);
    }
    let xb = -0.3 * ln(x1) + 0.3 * log10(x2);
    let y = -ln(u) / (SURVIVAL_BASE_HAZARD * exp(xb));
    let c = -ln(u_cens) / SURVIVAL_CENSOR_RATE;
    Ok(SurvivalDraw { time: if y <= c { y } else { c }, event: y <= c })
}

/// Streamed survival draw for one covariate row.
pub fn sample_survival_setting3(
    stream: &mut RngStream,
    x_row: [f64; 2],
) -> Result<SurvivalDraw, SampleError> {
    let u = stream.next_f64();
    let u_cens = stream.next_f64();
    survival_from_uniforms(u, u_cens, x_row)
}
