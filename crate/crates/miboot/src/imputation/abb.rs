//! Approximate Bayesian bootstrap: two-stage hot-deck imputation.
//!
//! Within each stratum and for each column with missingness, the observed
//! donor values are first bootstrapped, then every missing cell is filled
//! by a uniform draw with replacement from that bootstrapped pool. The
//! first stage is what makes the imputation proper.

use alloc::vec::Vec;

use super::{ImputationEngine, ImputeError};
use crate::data::IncompleteDataset;
use crate::rng::RngStream;

/// M approximate-Bayesian-bootstrap imputations.
///
/// `strata` assigns a stratum label to every row; `None` treats the data
/// as a single stratum. Imputation m consumes lane `stream.lane(m)`.
pub fn abb_impute(
    ds: &IncompleteDataset,
    m: usize,
    stream: &RngStream,
    strata: Option<&[usize]>,
) -> Result<Vec<IncompleteDataset>, ImputeError> {
    let n = ds.n_rows();
    if let Some(labels) = strata {
        assert_eq!(labels.len(), n, "stratum labels must cover every row");
    }
    let max_label = strata.map_or(0, |s| s.iter().copied().max().unwrap_or(0));
    let mut stratum_rows: Vec<Vec<usize>> = alloc::vec![Vec::new(); max_label + 1];
    for row in 0..n {
        let s = strata.map_or(0, |labels| labels[row]);
        stratum_rows[s].push(row);
    }

    let mut out = Vec::with_capacity(m);
    for im in 0..m {
        let mut lane = stream.lane(im as u64);
        let mut result = ds.clone();
        for (s, rows) in stratum_rows.iter().enumerate() {
            for j in 0..ds.n_cols() {
                let recipients: Vec<usize> =
                    rows.iter().copied().filter(|&r| ds.is_missing(r, j)).collect();
                if recipients.is_empty() {
                    continue;
                }
                let donors: Vec<f64> =
                    rows.iter().filter_map(|&r| ds.get(r, j)).collect();
                if donors.is_empty() {
                    return Err(ImputeError::NoDonor { stratum: s, column: j });
                }
                // stage (a): bootstrap the donor pool
                let pool: Vec<f64> = (0..donors.len())
                    .map(|_| donors[lane.next_index(donors.len())])
                    .collect();
                // stage (b): fill each missing cell uniformly from the pool
                for r in recipients {
                    result.fill_cell(r, j, pool[lane.next_index(pool.len())]);
                }
            }
        }
        debug_assert!(result.is_complete());
        out.push(result);
    }
    Ok(out)
}

/// [`ImputationEngine`] wrapper around [`abb_impute`].
#[derive(Clone, Debug, Default)]
pub struct AbbEngine {
    /// Per-row stratum labels; empty means a single stratum.
    pub strata: Option<Vec<usize>>,
}

impl AbbEngine {
    pub fn new() -> Self {
        AbbEngine { strata: None }
    }

    pub fn with_strata(strata: Vec<usize>) -> Self {
        AbbEngine { strata: Some(strata) }
    }
}

impl ImputationEngine for AbbEngine {
    fn impute(
        &self,
        dataset: &IncompleteDataset,
        m: usize,
        stream: &RngStream,
    ) -> Result<Vec<IncompleteDataset>, ImputeError> {
        abb_impute(dataset, m, stream, self.strata.as_deref())
    }
}
