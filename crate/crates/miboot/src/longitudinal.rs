//! Subject-level longitudinal data: per-visit time-varying covariates,
//! treatment, censoring, and outcome, plus the conversion to and from the
//! wide rectangular layout that the imputation engines operate on.
//!
//! Wide layout (one row per subject, `T` the horizon):
//!
//! ```text
//! region, sex, age, dropout, then per t = 0..=T: l1_t, l2_t, l3_t, y_t, a_t
//! ```
//!
//! `dropout` is the censoring visit (T+1 when never censored) and is
//! always observed, so the censoring structure survives a round trip
//! through imputation; cells at and after the dropout visit are masked
//! and any values imputed for them are discarded on reconstruction.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::data::{ColumnMeta, DataError, IncompleteDataset};

/// Number of time-varying covariates per visit (CD4, CD4%, WAZ).
pub const N_TDC: usize = 3;
/// Wide columns per visit: the covariates, the outcome, the treatment flag.
const PER_VISIT: usize = N_TDC + 2;
/// Leading wide columns: region, sex, age, dropout.
const N_BASE: usize = 4;

/// One attended (or censoring) visit.
#[derive(Clone, Debug, PartialEq)]
pub struct Visit {
    /// Time-varying covariates; `None` = missing measurement.
    pub l: [Option<f64>; N_TDC],
    /// Outcome; `None` = missing measurement.
    pub y: Option<f64>,
    /// Treatment indicator (0/1); observed at every attended visit.
    pub a: Option<f64>,
    /// True on the final, empty record of a censored subject.
    pub censored: bool,
}

impl Visit {
    pub fn censoring_marker() -> Self {
        Visit { l: [None; N_TDC], y: None, a: None, censored: true }
    }
}

/// One subject: fully observed baseline demographics plus visits.
#[derive(Clone, Debug, PartialEq)]
pub struct SubjectPath {
    pub region: f64,
    pub sex: f64,
    pub age: f64,
    /// visits[t] is the record at time t; a censored subject ends with a
    /// censoring marker and has no later records.
    pub visits: Vec<Visit>,
}

impl SubjectPath {
    /// Index of the censoring visit, or horizon+1 when never censored.
    pub fn dropout(&self, horizon: usize) -> usize {
        match self.visits.iter().position(|v| v.censored) {
            Some(t) => t,
            None => horizon + 1,
        }
    }

    /// True when the subject attends visit t (has data there).
    pub fn attends(&self, t: usize) -> bool {
        t < self.visits.len() && !self.visits[t].censored
    }
}

/// Longitudinal dataset over a common horizon.
#[derive(Clone, Debug, PartialEq)]
pub struct LongitudinalDataset {
    pub horizon: usize,
    pub subjects: Vec<SubjectPath>,
}

/// Structural violations in a longitudinal dataset.
#[derive(Clone, Debug, PartialEq)]
pub enum LongitudinalError {
    EmptySubject { subject: usize },
    BaselineCensoring { subject: usize },
    RecordAfterCensoring { subject: usize },
    TooManyVisits { subject: usize },
    MissingTreatment { subject: usize, t: usize },
    Data(DataError),
    BadDropoutColumn { subject: usize },
}

impl core::fmt::Display for LongitudinalError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            LongitudinalError::EmptySubject { subject } => {
                write!(f, "subject {subject} has no visits")
            }
            LongitudinalError::BaselineCensoring { subject } => {
                write!(f, "subject {subject} is censored at baseline")
            }
            LongitudinalError::RecordAfterCensoring { subject } => {
                write!(f, "subject {subject} has records after censoring")
            }
            LongitudinalError::TooManyVisits { subject } => {
                write!(f, "subject {subject} has visits beyond the horizon")
            }
            LongitudinalError::MissingTreatment { subject, t } => {
                write!(f, "subject {subject} lacks a treatment value at visit {t}")
            }
            LongitudinalError::Data(e) => write!(f, "wide-format error: {e}"),
            LongitudinalError::BadDropoutColumn { subject } => {
                write!(f, "subject {subject} carries an invalid dropout value")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for LongitudinalError {}

impl LongitudinalDataset {
    /// Check the structural invariants.
    pub fn validate(&self) -> Result<(), LongitudinalError> {
        for (i, s) in self.subjects.iter().enumerate() {
            if s.visits.is_empty() {
                return Err(LongitudinalError::EmptySubject { subject: i });
            }
            if s.visits.len() > self.horizon + 1 {
                return Err(LongitudinalError::TooManyVisits { subject: i });
            }
            if s.visits[0].censored {
                return Err(LongitudinalError::BaselineCensoring { subject: i });
            }
            for (t, v) in s.visits.iter().enumerate() {
                if v.censored && t != s.visits.len() - 1 {
                    return Err(LongitudinalError::RecordAfterCensoring { subject: i });
                }
                if !v.censored && v.a.is_none() {
                    return Err(LongitudinalError::MissingTreatment { subject: i, t });
                }
            }
            if !s.visits.last().unwrap().censored && s.visits.len() != self.horizon + 1 {
                return Err(LongitudinalError::TooManyVisits { subject: i });
            }
        }
        Ok(())
    }

    /// Column metadata of the wide layout for horizon `t_max`.
    pub fn wide_columns(t_max: usize) -> Vec<ColumnMeta> {
        let mut cols = Vec::with_capacity(N_BASE + (t_max + 1) * PER_VISIT);
        cols.push(ColumnMeta::binary("region"));
        cols.push(ColumnMeta::binary("sex"));
        cols.push(ColumnMeta::continuous("age"));
        cols.push(ColumnMeta::continuous("dropout"));
        for t in 0..=t_max {
            for name in ["l1", "l2", "l3", "y"] {
                cols.push(ColumnMeta::continuous(&format!("{name}_{t}")));
            }
            cols.push(ColumnMeta::binary(&format!("a_{t}")));
        }
        cols
    }

    /// Index of a per-visit wide column.
    pub fn wide_col(slot: VisitSlot, t: usize) -> usize {
        N_BASE
            + t * PER_VISIT
            + match slot {
                VisitSlot::L(k) => k,
                VisitSlot::Y => N_TDC,
                VisitSlot::A => N_TDC + 1,
            }
    }

    /// Flatten to the wide rectangular layout.
    ///
    /// Cells at and after the dropout visit are masked; in-window
    /// measurement missingness carries over as masked cells.
    pub fn to_wide(&self) -> Result<IncompleteDataset, LongitudinalError> {
        let t_max = self.horizon;
        let width = N_BASE + (t_max + 1) * PER_VISIT;
        let n = self.subjects.len();
        let mut values = alloc::vec![f64::NAN; n * width];
        let mut mask = alloc::vec![true; n * width];
        for (i, s) in self.subjects.iter().enumerate() {
            let row = i * width;
            let dropout = s.dropout(t_max);
            for (slot, v) in
                [(0, s.region), (1, s.sex), (2, s.age), (3, dropout as f64)]
            {
                values[row + slot] = v;
                mask[row + slot] = false;
            }
            for (t, visit) in s.visits.iter().enumerate() {
                if visit.censored {
                    break;
                }
                for k in 0..N_TDC {
                    if let Some(x) = visit.l[k] {
                        let c = Self::wide_col(VisitSlot::L(k), t);
                        values[row + c] = x;
                        mask[row + c] = false;
                    }
                }
                if let Some(y) = visit.y {
                    let c = Self::wide_col(VisitSlot::Y, t);
                    values[row + c] = y;
                    mask[row + c] = false;
                }
                if let Some(a) = visit.a {
                    let c = Self::wide_col(VisitSlot::A, t);
                    values[row + c] = a;
                    mask[row + c] = false;
                }
            }
        }
        IncompleteDataset::new(Self::wide_columns(t_max), values, mask)
            .map_err(LongitudinalError::Data)
    }

    /// Reconstruct subject paths from a completed wide dataset.
    ///
    /// The censoring structure comes from the `dropout` column; completed
    /// values beyond the dropout visit are discarded.
    pub fn from_wide_completed(
        wide: &IncompleteDataset,
        horizon: usize,
    ) -> Result<LongitudinalDataset, LongitudinalError> {
        let width = N_BASE + (horizon + 1) * PER_VISIT;
        if wide.n_cols() != width {
            return Err(LongitudinalError::Data(DataError::DimensionMismatch {
                expected: width,
                got: wide.n_cols(),
            }));
        }
        let mut subjects = Vec::with_capacity(wide.n_rows());
        for i in 0..wide.n_rows() {
            let dropout_raw = wide.get_complete(i, 3);
            let dropout = dropout_raw as usize;
            if dropout_raw != dropout as f64 || dropout == 0 || dropout > horizon + 1 {
                return Err(LongitudinalError::BadDropoutColumn { subject: i });
            }
            let mut visits = Vec::with_capacity(dropout.min(horizon) + 1);
            for t in 0..dropout.min(horizon + 1) {
                visits.push(Visit {
                    l: core::array::from_fn(|k| {
                        Some(wide.get_complete(i, Self::wide_col(VisitSlot::L(k), t)))
                    }),
                    y: Some(wide.get_complete(i, Self::wide_col(VisitSlot::Y, t))),
                    a: Some(wide.get_complete(i, Self::wide_col(VisitSlot::A, t))),
                    censored: false,
                });
            }
            if dropout <= horizon {
                visits.push(Visit::censoring_marker());
            }
            subjects.push(SubjectPath {
                region: wide.get_complete(i, 0),
                sex: wide.get_complete(i, 1),
                age: wide.get_complete(i, 2),
                visits,
            });
        }
        let ds = LongitudinalDataset { horizon, subjects };
        ds.validate()?;
        Ok(ds)
    }
}

/// Which per-visit column.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VisitSlot {
    L(usize),
    Y,
    A,
}

/// Static treatment regimes paired with the no-censoring intervention.
///
/// The rule is a pure function of time and covariate history; both
/// regimes used here ignore the history.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    AlwaysTreat,
    NeverTreat,
}

impl Regime {
    /// Treatment assigned at time t (censoring is always intervened to 0).
    pub fn assignment(&self, _t: usize) -> f64 {
        match self {
            Regime::AlwaysTreat => 1.0,
            Regime::NeverTreat => 0.0,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::AlwaysTreat => "always",
            Regime::NeverTreat => "never",
        }
    }

    pub fn parse(s: &str) -> Option<Regime> {
        match s {
            "always" => Some(Regime::AlwaysTreat),
            "never" => Some(Regime::NeverTreat),
            _ => None,
        }
    }
}

impl core::fmt::Display for Regime {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}
