//! Multiply-add accounting for one-stage versus two-stage alignment, with an
//! empirical candidate-count audit of the search itself.

use crate::dpbm::{align_burst_coarse_with_stats, OffsetGrid, SearchConfig};
use crate::error::{Error, Result};
use crate::synth::smooth_texture;

/// Parameters of the multiply-add model.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CostParams {
    /// Multiply-adds per candidate evaluation (structure-dependent factor).
    pub per_candidate: u64,
    /// One-stage receptive field side, in pixels.
    pub field: u64,
    /// Refinement receptive field side, in pixels.
    pub refine_field: u64,
    /// Patch side used by the coarse stage, in pixels.
    pub patch: u64,
    pub height: u64,
    pub width: u64,
}

impl Default for CostParams {
    fn default() -> Self {
        CostParams {
            per_candidate: 1,
            field: 28,
            refine_field: 2,
            patch: 16,
            height: 256,
            width: 256,
        }
    }
}

impl CostParams {
    pub fn validate(&self) -> Result<()> {
        if self.per_candidate == 0
            || self.field == 0
            || self.patch == 0
            || self.height == 0
            || self.width == 0
        {
            return Err(Error::parameter("cost parameters must be positive"));
        }
        if self.refine_field > self.field {
            return Err(Error::parameter(
                "refine field must not exceed the one-stage field",
            ));
        }
        Ok(())
    }
}

/// Multiply-adds of direct pixel-wise offset estimation: `F * D^2 * H * W`.
pub fn one_stage_cost(cp: &CostParams) -> u128 {
    let f = cp.per_candidate as u128;
    let d = cp.field as u128;
    f * d * d * cp.height as u128 * cp.width as u128
}

/// Multiply-adds of the split search: `F * (D^2/k^2 + D_s^2) * H * W`,
/// with the patch-level term integerized by exact division.
pub fn two_stage_cost(cp: &CostParams) -> u128 {
    let f = cp.per_candidate as u128;
    let d = cp.field as u128;
    let k = cp.patch as u128;
    let ds = cp.refine_field as u128;
    let factor = (d * d) / (k * k) + ds * ds;
    f * factor * cp.height as u128 * cp.width as u128
}

/// Measured vs closed-form candidate evaluation counts for one search pass.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CandidateAudit {
    pub patches: u64,
    pub measured: u64,
    pub closed_form: u64,
}

/// Run an instrumented coarse pass over one synthetic frame pair of the
/// given quarter-scale dimensions and compare the observed number of
/// distance evaluations with
/// `patches * ((floor(2*dp_cmax/s)+1)^2 + (2s-1)^2)`.
pub fn audit_candidates(cfg: &SearchConfig, height: usize, width: usize) -> Result<CandidateAudit> {
    cfg.validate(height, width)?;
    let reference = smooth_texture::<f64>(height, width, 0xC0FFEE);
    let target = smooth_texture::<f64>(height, width, 0xBEEF);
    let (_, stats) = align_burst_coarse_with_stats(&[reference, target], 0, cfg)?;
    let (rows, cols) = OffsetGrid::tiling(height, width, cfg.patch_k);
    let patches = (rows * cols) as u64;
    Ok(CandidateAudit {
        patches,
        measured: stats.candidate_evals,
        closed_form: patches * cfg.evals_per_patch(),
    })
}
