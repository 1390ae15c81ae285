//! EMB imputation: bootstrap the incomplete rows, fit the multivariate
//! normal by EM in each bootstrap sample, and complete the original data
//! by drawing from the conditional normals implied by that fit.
//!
//! Parameter uncertainty enters through the bootstrap (one EM fit per
//! imputation); the draws themselves add the residual noise. Column
//! transforms (log, sqrt) are applied before fitting and inverted on the
//! drawn values.

use alloc::vec::Vec;

use super::draw::round_binary;
use super::em::{em_fit, EmOptions, PatternSet, SweptParams};
use super::{ImputationEngine, ImputeError, MvnParams};
use crate::data::{ColumnKind, IncompleteDataset, Transform};
use crate::rng::RngStream;
use crate::sampling::bootstrap_indices;

/// Options for [`emb_impute`].
#[derive(Clone, Copy, Debug, Default)]
pub struct EmbOptions {
    pub em: EmOptions,
    /// Seed each bootstrap EM from the fit of the source data. Cuts the
    /// iteration count substantially on large imputation models.
    pub warm_start: bool,
}

impl EmbOptions {
    pub fn new() -> Self {
        EmbOptions { em: EmOptions::default(), warm_start: true }
    }
}

/// Dataset copy with column transforms applied to observed cells.
fn apply_transforms(ds: &IncompleteDataset) -> Result<IncompleteDataset, ImputeError> {
    if ds.columns().iter().all(|c| c.transform == Transform::None) {
        return Ok(ds.clone());
    }
    let d = ds.n_cols();
    let mut values = Vec::with_capacity(ds.n_rows() * d);
    let mut mask = Vec::with_capacity(ds.n_rows() * d);
    for i in 0..ds.n_rows() {
        for (j, meta) in ds.columns().iter().enumerate() {
            match ds.get(i, j) {
                Some(x) => {
                    values.push(meta.transform.apply(x));
                    mask.push(false);
                }
                None => {
                    values.push(f64::NAN);
                    mask.push(true);
                }
            }
        }
    }
    IncompleteDataset::new(ds.columns().to_vec(), values, mask).map_err(ImputeError::Data)
}

/// Complete `original` using conditional draws under `params` (which were
/// fit on the transformed scale).
fn complete_with(
    transformed: &IncompleteDataset,
    original: &IncompleteDataset,
    patterns: &PatternSet,
    params: &MvnParams,
    em_opts: &EmOptions,
    stream: &mut RngStream,
) -> Result<IncompleteDataset, ImputeError> {
    let mut result = original.clone();
    let swept = SweptParams::new(params, em_opts)?;
    for pat in patterns.patterns() {
        if pat.missing.is_empty() {
            continue;
        }
        let model = swept.conditional(&pat.missing)?;
        for &row in &pat.rows {
            let (tvalues, _) = transformed.row_values(row);
            let draws = model.draw(tvalues, stream);
            for (k, &j) in pat.missing.iter().enumerate() {
                let meta = &original.columns()[j];
                let v = match meta.kind {
                    ColumnKind::Binary => round_binary(draws[k]),
                    _ => meta.transform.invert(draws[k]),
                };
                result.fill_cell(row, j, v);
            }
        }
    }
    debug_assert!(result.is_complete());
    Ok(result)
}

/// M proper imputations of `ds` by the bootstrap-EM scheme.
///
/// Imputation m consumes the lane `stream.lane(m)`, so a prefix of the
/// imputations is reproducible independently of M.
pub fn emb_impute(
    ds: &IncompleteDataset,
    m: usize,
    stream: &RngStream,
    opts: &EmbOptions,
) -> Result<Vec<IncompleteDataset>, ImputeError> {
    let transformed = apply_transforms(ds)?;
    if ds.missing_cells() == 0 {
        return Ok(alloc::vec![ds.clone(); m]);
    }
    let patterns = PatternSet::new(&transformed)?;
    let warm = if opts.warm_start {
        Some(em_fit(&transformed, &opts.em, None)?.params)
    } else {
        None
    };
    let n = ds.n_rows();
    let mut out = Vec::with_capacity(m);
    for im in 0..m {
        let lane = stream.lane(im as u64);
        let idx = bootstrap_indices(&mut lane.lane(0), n)?;
        let boot = transformed.select_rows(&idx);
        let fit = em_fit(&boot, &opts.em, warm.as_ref())?;
        let mut draw_stream = lane.lane(1);
        out.push(complete_with(
            &transformed,
            ds,
            &patterns,
            &fit.params,
            &opts.em,
            &mut draw_stream,
        )?);
    }
    Ok(out)
}

/// [`ImputationEngine`] wrapper around [`emb_impute`].
#[derive(Clone, Copy, Debug, Default)]
pub struct EmbEngine {
    pub opts: EmbOptions,
}

impl EmbEngine {
    pub fn new() -> Self {
        EmbEngine { opts: EmbOptions::new() }
    }
}

impl ImputationEngine for EmbEngine {
    fn impute(
        &self,
        dataset: &IncompleteDataset,
        m: usize,
        stream: &RngStream,
    ) -> Result<Vec<IncompleteDataset>, ImputeError> {
        emb_impute(dataset, m, stream, &self.opts)
    }
}
