//! Multiple-imputation engines behind one behavioral contract.
//!
//! Two proper imputation engines are provided: [`EmbEngine`] (bootstrap
//! the incomplete rows, fit a multivariate normal by EM in each bootstrap
//! sample, draw imputations from the implied conditional normals through
//! the sweep operator) and [`AbbEngine`] (approximate Bayesian bootstrap:
//! two-stage hot-deck within strata). Both return M completed copies of
//! the input with every observed cell untouched.

mod abb;
mod draw;
mod em;
mod emb;

pub use abb::{abb_impute, AbbEngine};
pub use draw::conditional_draw;
pub use em::{em_fit, observed_loglik, EmFit, EmOptions, PatternSet};
pub use emb::{emb_impute, EmbEngine, EmbOptions};

use alloc::vec::Vec;

use crate::data::{DataError, IncompleteDataset};
use crate::matrix::Mat;
use crate::rng::RngStream;
use crate::sampling::SampleError;

/// Parameters of a multivariate normal imputation model.
#[derive(Clone, Debug, PartialEq)]
pub struct MvnParams {
    pub mu: Vec<f64>,
    pub sigma: Mat,
}

impl MvnParams {
    /// Construct, symmetrizing sigma and clipping tiny negative diagonals.
    pub fn new(mu: Vec<f64>, mut sigma: Mat) -> Self {
        let d = mu.len();
        assert_eq!(sigma.rows(), d);
        assert_eq!(sigma.cols(), d);
        for i in 0..d {
            for j in (i + 1)..d {
                let v = 0.5 * (sigma.get(i, j) + sigma.get(j, i));
                sigma.set(i, j, v);
                sigma.set(j, i, v);
            }
            let dii = sigma.get(i, i);
            debug_assert!(dii > -1e-8, "variance {dii} below PSD tolerance");
            if dii < 0.0 {
                sigma.set(i, i, 0.0);
            }
        }
        MvnParams { mu, sigma }
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }
}

/// Failures raised by the imputation engines.
#[derive(Clone, Debug, PartialEq)]
pub enum ImputeError {
    Data(DataError),
    Sample(SampleError),
    /// Covariance update became numerically singular inside EM.
    SingularCovariance { iteration: usize },
    /// Observed block of a row could not be swept.
    SingularObservedBlock,
    /// A row carries no observed coordinate.
    FullyMissingRow { row: usize },
    /// A stratum has no observed donor for a column that needs imputing.
    NoDonor { stratum: usize, column: usize },
    /// Identity engine invoked on data with missing cells.
    NotComplete,
}

impl core::fmt::Display for ImputeError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            ImputeError::Data(e) => write!(f, "invalid dataset: {e}"),
            ImputeError::Sample(e) => write!(f, "sampling failure: {e}"),
            ImputeError::SingularCovariance { iteration } => {
                write!(f, "singular covariance update at EM iteration {iteration}")
            }
            ImputeError::SingularObservedBlock => write!(f, "singular observed block"),
            ImputeError::FullyMissingRow { row } => {
                write!(f, "row {row} has no observed coordinate")
            }
            ImputeError::NoDonor { stratum, column } => {
                write!(f, "stratum {stratum} has no donor for column {column}")
            }
            ImputeError::NotComplete => write!(f, "identity engine requires complete data"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for ImputeError {}

impl From<DataError> for ImputeError {
    fn from(e: DataError) -> Self {
        ImputeError::Data(e)
    }
}

impl From<SampleError> for ImputeError {
    fn from(e: SampleError) -> Self {
        ImputeError::Sample(e)
    }
}

/// Behavioral contract: complete a dataset M times.
///
/// Implementations guarantee that observed cells are identical to the
/// input in every returned dataset and that no masked cells remain.
pub trait ImputationEngine {
    fn impute(
        &self,
        dataset: &IncompleteDataset,
        m: usize,
        stream: &RngStream,
    ) -> Result<Vec<IncompleteDataset>, ImputeError>;
}

/// Pass-through engine for complete data: returns M identical copies.
#[derive(Clone, Copy, Debug, Default)]
pub struct IdentityEngine;

impl ImputationEngine for IdentityEngine {
    fn impute(
        &self,
        dataset: &IncompleteDataset,
        m: usize,
        _stream: &RngStream,
    ) -> Result<Vec<IncompleteDataset>, ImputeError> {
        if !dataset.is_complete() {
            return Err(ImputeError::NotComplete);
        }
        Ok(alloc::vec![dataset.clone(); m])
    }
}
