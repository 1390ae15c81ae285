//! Core dataset and estimate types shared by every other module.
//!
//! The central object is [`IncompleteDataset`]: a rectangular numeric
//! table plus a missingness mask. Masked cells carry NaN as an unreadable
//! payload; all computations consult the mask and never the payload, and
//! the NaN poisons any accidental arithmetic on a masked cell.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

/// Statistical kind of a column.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ColumnKind {
    Continuous,
    /// Stored as 0/1 reals; imputed on the latent normal scale and rounded.
    Binary,
    Count,
}

/// Scale transform applied before model fitting and inverted afterwards.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Transform {
    None,
    Log,
    Sqrt,
}

impl Transform {
    /// Forward transform of an observed value.
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Transform::None => x,
            Transform::Log => crate::math::ln(x),
            Transform::Sqrt => crate::math::sqrt(x),
        }
    }

    /// Inverse transform of a model-scale value.
    pub fn invert(self, x: f64) -> f64 {
        match self {
            Transform::None => x,
            Transform::Log => crate::math::exp(x),
            Transform::Sqrt => x * x,
        }
    }
}

/// Per-column metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct ColumnMeta {
    pub name: String,
    pub kind: ColumnKind,
    pub transform: Transform,
}

impl ColumnMeta {
    pub fn continuous(name: &str) -> Self {
        ColumnMeta { name: name.into(), kind: ColumnKind::Continuous, transform: Transform::None }
    }

    pub fn binary(name: &str) -> Self {
        ColumnMeta { name: name.into(), kind: ColumnKind::Binary, transform: Transform::None }
    }

    pub fn with_transform(mut self, t: Transform) -> Self {
        self.transform = t;
        self
    }
}

/// Violations reported by dataset construction and validation.
#[derive(Clone, Debug, PartialEq)]
pub enum DataError {
    DimensionMismatch { expected: usize, got: usize },
    FullyMissingColumn { column: usize },
    NonFiniteObservedValue { row: usize, column: usize },
    ColumnOutOfRange { column: usize },
}

impl core::fmt::Display for DataError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            DataError::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected} cells, got {got}")
            }
            DataError::FullyMissingColumn { column } => {
                write!(f, "fully-missing column {column}")
            }
            DataError::NonFiniteObservedValue { row, column } => {
                write!(f, "non-finite observed value at ({row}, {column})")
            }
            DataError::ColumnOutOfRange { column } => {
                write!(f, "column index {column} out of range")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for DataError {}

/// Rectangular numeric table with a missingness mask.
///
/// Row-major storage; one outcome column plus covariate columns by
/// convention, though nothing in this type privileges column 0.
#[derive(Clone, Debug, PartialEq)]
pub struct IncompleteDataset {
    n_rows: usize,
    n_cols: usize,
    values: Vec<f64>,
    mask: Vec<bool>,
    columns: Vec<ColumnMeta>,
}

impl IncompleteDataset {
    /// Build a dataset from row-major values and mask.
    ///
    /// Masked cells may hold any payload; it is replaced by NaN and never
    /// read again. Construction enforces every type invariant.
    pub fn new(
        columns: Vec<ColumnMeta>,
        values: Vec<f64>,
        mask: Vec<bool>,
    ) -> Result<Self, DataError> {
        let n_cols = columns.len();
        if n_cols == 0 || values.len() % n_cols != 0 {
            return Err(DataError::DimensionMismatch { expected: n_cols, got: values.len() });
        }
        let n_rows = values.len() / n_cols;
        if mask.len() != values.len() {
            return Err(DataError::DimensionMismatch { expected: values.len(), got: mask.len() });
        }
        let mut values = values;
        for (v, &m) in values.iter_mut().zip(&mask) {
            if m {
                *v = f64::NAN;
            }
        }
        let ds = IncompleteDataset { n_rows, n_cols, values, mask, columns };
        ds.validate()?;
        Ok(ds)
    }

    /// Build a complete dataset (no missing cells).
    pub fn complete(columns: Vec<ColumnMeta>, values: Vec<f64>) -> Result<Self, DataError> {
        let mask = vec![false; values.len()];
        IncompleteDataset::new(columns, values, mask)
    }

    /// Construct without the fully-missing-column check (payloads are
    /// still replaced by NaN). Intended for marginalization tests only.
    #[doc(hidden)]
    pub fn new_unchecked(columns: Vec<ColumnMeta>, values: Vec<f64>, mask: Vec<bool>) -> Self {
        let n_cols = columns.len();
        let n_rows = values.len() / n_cols;
        assert_eq!(values.len(), n_rows * n_cols);
        assert_eq!(mask.len(), values.len());
        let mut values = values;
        for (v, &m) in values.iter_mut().zip(&mask) {
            if m {
                *v = f64::NAN;
            }
        }
        IncompleteDataset { n_rows, n_cols, values, mask, columns }
    }

    /// Check all invariants; reports the first violation.
    pub fn validate(&self) -> Result<(), DataError> {
        if self.values.len() != self.n_rows * self.n_cols
            || self.mask.len() != self.values.len()
            || self.columns.len() != self.n_cols
        {
            return Err(DataError::DimensionMismatch {
                expected: self.n_rows * self.n_cols,
                got: self.values.len(),
            });
        }
        for j in 0..self.n_cols {
            let mut any_observed = false;
            for i in 0..self.n_rows {
                if !self.is_missing(i, j) {
                    any_observed = true;
                    if !self.values[i * self.n_cols + j].is_finite() {
                        return Err(DataError::NonFiniteObservedValue { row: i, column: j });
                    }
                }
            }
            if !any_observed {
                return Err(DataError::FullyMissingColumn { column: j });
            }
        }
        Ok(())
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn columns(&self) -> &[ColumnMeta] {
        &self.columns
    }

    #[inline]
    pub fn is_missing(&self, row: usize, col: usize) -> bool {
        self.mask[row * self.n_cols + col]
    }

    /// Observed value at a cell, or `None` when masked.
    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        if self.is_missing(row, col) {
            None
        } else {
            Some(self.values[row * self.n_cols + col])
        }
    }

    /// Value at a cell of a dataset known to be complete.
    ///
    /// Panics if the cell is masked; complete-data estimators use this.
    #[inline]
    pub fn get_complete(&self, row: usize, col: usize) -> f64 {
        debug_assert!(!self.is_missing(row, col), "read of a masked cell");
        self.values[row * self.n_cols + col]
    }

    /// True when no cell is masked.
    pub fn is_complete(&self) -> bool {
        self.mask.iter().all(|&m| !m)
    }

    /// Count of masked cells.
    pub fn missing_cells(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// Fraction of masked cells in a column.
    pub fn missing_fraction(&self, column: usize) -> Result<f64, DataError> {
        if column >= self.n_cols {
            return Err(DataError::ColumnOutOfRange { column });
        }
        let masked =
            (0..self.n_rows).filter(|&i| self.is_missing(i, column)).count();
        Ok(masked as f64 / self.n_rows as f64)
    }

    /// New dataset with the rows `idx` (repeats allowed, bootstrap style).
    pub fn select_rows(&self, idx: &[usize]) -> IncompleteDataset {
        let mut values = Vec::with_capacity(idx.len() * self.n_cols);
        let mut mask = Vec::with_capacity(idx.len() * self.n_cols);
        for &i in idx {
            let base = i * self.n_cols;
            values.extend_from_slice(&self.values[base..base + self.n_cols]);
            mask.extend_from_slice(&self.mask[base..base + self.n_cols]);
        }
        IncompleteDataset {
            n_rows: idx.len(),
            n_cols: self.n_cols,
            values,
            mask,
            columns: self.columns.clone(),
        }
    }

    /// Copy with one cell overwritten and unmasked (imputation writes).
    pub fn fill_cell(&mut self, row: usize, col: usize, value: f64) {
        self.values[row * self.n_cols + col] = value;
        self.mask[row * self.n_cols + col] = false;
    }

    /// Row view of observed flags and values for pattern grouping.
    pub fn row_values(&self, row: usize) -> (&[f64], &[bool]) {
        let base = row * self.n_cols;
        (&self.values[base..base + self.n_cols], &self.mask[base..base + self.n_cols])
    }
}

/// A k-dimensional parameter estimate with optional analytic covariance.
#[derive(Clone, Debug, PartialEq)]
pub struct EstimateVector {
    pub theta: Vec<f64>,
    pub cov: Option<crate::matrix::Mat>,
}

impl EstimateVector {
    pub fn point(theta: Vec<f64>) -> Self {
        EstimateVector { theta, cov: None }
    }

    pub fn with_cov(theta: Vec<f64>, cov: crate::matrix::Mat) -> Self {
        debug_assert_eq!(cov.rows(), theta.len());
        debug_assert_eq!(cov.cols(), theta.len());
        EstimateVector { theta, cov: Some(cov) }
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }
}

/// Which interval construction produced an estimate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MethodTag {
    /// Method 1: impute, bootstrap within imputations, pool all M·B.
    MiBootPooled,
    /// Method 2: impute, bootstrap variances, Rubin's rules, t interval.
    MiBoot,
    /// Method 3: bootstrap, impute within samples, pool all B·M.
    BootMiPooled,
    /// Method 4: bootstrap, impute, average within sample, percentiles.
    BootMi,
    /// t-interval variant of Method 4.
    BootMiT,
    /// Analytic within-imputation covariance, Rubin's rules only.
    NoBootstrap,
}

impl MethodTag {
    pub fn as_str(self) -> &'static str {
        match self {
            MethodTag::MiBootPooled => "mi-boot-ps",
            MethodTag::MiBoot => "mi-boot",
            MethodTag::BootMiPooled => "boot-mi-ps",
            MethodTag::BootMi => "boot-mi",
            MethodTag::BootMiT => "boot-mi-t",
            MethodTag::NoBootstrap => "no-boot",
        }
    }
}

/// Degrees of freedom for a t reference distribution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Df {
    Finite(f64),
    /// No between-imputation variance: normal quantiles apply.
    Unbounded,
}

/// Per-coordinate interval bounds plus method metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct IntervalEstimate {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Accompanying point estimate (Rubin-rule pooling on the original data).
    pub point: Vec<f64>,
    pub method: MethodTag,
    pub alpha: f64,
    pub m: usize,
    pub b: usize,
    /// Present for t-based methods.
    pub df: Option<Vec<Df>>,
    /// Pooled standard error per coordinate, for t-based methods.
    pub se: Option<Vec<f64>>,
    /// Replicates dropped under the failure policy.
    pub dropped: usize,
    /// Set when the interval relies on an approximate-normality assumption.
    pub assumes_normality: bool,
}

impl IntervalEstimate {
    /// Width per coordinate.
    pub fn widths(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(l, u)| u - l).collect()
    }

    /// True when every coordinate of `truth` lies inside its interval.
    pub fn covers(&self, truth: &[f64]) -> Vec<bool> {
        truth
            .iter()
            .enumerate()
            .map(|(j, t)| self.lower[j] <= *t && *t <= self.upper[j])
            .collect()
    }
}
