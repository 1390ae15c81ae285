//! Draws from the conditional normal of missing coordinates given
//! observed ones, computed through the sweep operator.

use alloc::vec::Vec;

use super::em::{EmOptions, PatternModel, SweptParams};
use super::{ImputeError, MvnParams};
use crate::data::ColumnKind;
use crate::rng::RngStream;
use crate::sampling::standard_normal;

impl PatternModel {
    /// One latent-scale draw of the missing coordinates for `values`.
    pub(super) fn draw(&self, values: &[f64], stream: &mut RngStream) -> Vec<f64> {
        let mut x = self.conditional_mean(values);
        let m = self.missing.len();
        let mut z = Vec::with_capacity(m);
        for _ in 0..m {
            z.push(standard_normal(stream));
        }
        // x += L z; zero columns of the clamped factor contribute nothing
        for i in 0..m {
            let mut acc = 0.0;
            for (k, zk) in z.iter().enumerate().take(i + 1) {
                acc += self.resid_chol.get(i, k) * zk;
            }
            x[i] += acc;
        }
        x
    }
}

/// Round a latent-scale value for a binary column: clamp to [0, 1], then
/// threshold at 0.5.
#[inline]
pub(super) fn round_binary(v: f64) -> f64 {
    let v = v.clamp(0.0, 1.0);
    if v >= 0.5 {
        1.0
    } else {
        0.0
    }
}

/// Complete one partially observed row by drawing its missing coordinates
/// from N(mu_mis + S_mo S_oo^-1 (x_obs - mu_obs), S_mm - S_mo S_oo^-1 S_om).
///
/// Observed coordinates pass through untouched; binary coordinates are
/// drawn on the latent scale and rounded.
pub fn conditional_draw(
    values: &[f64],
    mask: &[bool],
    params: &MvnParams,
    kinds: &[ColumnKind],
    stream: &mut RngStream,
) -> Result<Vec<f64>, ImputeError> {
    let d = params.dim();
    assert_eq!(values.len(), d);
    assert_eq!(mask.len(), d);
    assert_eq!(kinds.len(), d);
    let missing: Vec<usize> = (0..d).filter(|&j| mask[j]).collect();
    if missing.len() == d {
        return Err(ImputeError::FullyMissingRow { row: 0 });
    }
    let mut out = values.to_vec();
    if missing.is_empty() {
        return Ok(out);
    }
    let swept = SweptParams::new(params, &EmOptions::default())?;
    let model = swept.conditional(&missing)?;
    let draws = model.draw(values, stream);
    for (k, &j) in missing.iter().enumerate() {
        out[j] = match kinds[j] {
            ColumnKind::Binary => round_binary(draws[k]),
            _ => draws[k],
        };
    }
    Ok(out)
}
