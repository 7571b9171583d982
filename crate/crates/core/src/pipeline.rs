//! End-to-end plumbing: quarter-scale coarse alignment, dense refinement,
//! warping and fusion, composed from the individual stages.

use crate::burst::Burst;
use crate::downsample::{downsample_quarter, pad_to_multiple};
use crate::dpbm::{
    align_burst_coarse_with_stats, apply_offsets, rescale_offsets, AlignStats, OffsetGrid,
    SearchConfig,
};
use crate::error::Result;
use crate::fusion::{reconstruct, robust_merge};
use crate::grid::Grid;
use crate::refine::{dense_refine, warp, warp_grid, FlowField};
use crate::rgb::RgbImage;
use crate::scalar::Scalar;

/// Knobs of the two-stage alignment.
#[derive(Clone, Copy, Debug)]
pub struct PipelineConfig {
    pub search: SearchConfig,
    /// Dense refinement radius in full-resolution pixels.
    pub refine_radius: i32,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            search: SearchConfig::default(),
            refine_radius: 2,
        }
    }
}

/// Everything the alignment stage produces.
#[derive(Clone, Debug)]
pub struct Alignment<T> {
    /// Quarter-scale per-patch offsets, one grid per frame.
    pub offsets_lr: Vec<OffsetGrid>,
    /// The same offsets rescaled to full resolution.
    pub offsets_full: Vec<OffsetGrid>,
    /// Fully aligned burst (coarse warp plus refined flow, variance maps
    /// warped along).
    pub aligned: Burst<T>,
    /// Per-frame refinement flows; the reference holds the identity flow.
    pub flows: Vec<FlowField<T>>,
    pub stats: AlignStats,
}

/// Quarter-scale planes of every frame (frames are mirror-padded to a
/// multiple of 4 first).
pub fn burst_to_quarter_scale<T: Scalar>(burst: &Burst<T>) -> Result<Vec<Grid<T>>> {
    burst
        .frames()
        .iter()
        .map(|f| downsample_quarter(&pad_to_multiple(f.plane(), 4)))
        .collect()
}

/// Run both alignment stages against the burst's reference frame.
pub fn align_burst<T: Scalar>(burst: &Burst<T>, cfg: &PipelineConfig) -> Result<Alignment<T>> {
    let lr = burst_to_quarter_scale(burst)?;
    let (offsets_lr, stats) = align_burst_coarse_with_stats(&lr, burst.ref_index(), &cfg.search)?;
    let offsets_full: Vec<OffsetGrid> = offsets_lr.iter().map(rescale_offsets).collect();
    let coarse = apply_offsets(burst, &offsets_full)?;
    refine_and_warp(coarse, offsets_lr, offsets_full, stats, burst, cfg)
}

/// Ablation baseline: skip the coarse stage and refine the raw burst only.
pub fn align_burst_refine_only<T: Scalar>(
    burst: &Burst<T>,
    cfg: &PipelineConfig,
) -> Result<Alignment<T>> {
    let h = burst.height();
    let w = burst.width();
    let (rows, cols) = OffsetGrid::tiling(h.div_ceil(4), w.div_ceil(4), cfg.search.patch_k);
    let zero_lr: Vec<OffsetGrid> = (0..burst.len())
        .map(|_| OffsetGrid::zeros(rows, cols, cfg.search.patch_k))
        .collect();
    let zero_full: Vec<OffsetGrid> = zero_lr.iter().map(rescale_offsets).collect();
    refine_and_warp(
        burst.clone(),
        zero_lr,
        zero_full,
        AlignStats::default(),
        burst,
        cfg,
    )
}

fn refine_and_warp<T: Scalar>(
    coarse: Burst<T>,
    offsets_lr: Vec<OffsetGrid>,
    offsets_full: Vec<OffsetGrid>,
    stats: AlignStats,
    original: &Burst<T>,
    cfg: &PipelineConfig,
) -> Result<Alignment<T>> {
    let ref_idx = original.ref_index();
    let reference = coarse.frame(ref_idx).clone();
    let var_ref = coarse.variance_map(ref_idx).clone();

    let mut flows = Vec::with_capacity(coarse.len());
    let mut frames = Vec::with_capacity(coarse.len());
    let mut maps = Vec::with_capacity(coarse.len());
    for t in 0..coarse.len() {
        if t == ref_idx {
            flows.push(FlowField::identity(coarse.height(), coarse.width()));
            frames.push(reference.clone());
            maps.push(var_ref.clone());
            continue;
        }
        let flow = dense_refine(coarse.frame(t), &reference, &var_ref, cfg.refine_radius)?;
        frames.push(warp(coarse.frame(t), &flow)?);
        maps.push(warp_grid(coarse.variance_map(t), &flow)?);
        flows.push(flow);
    }
    let aligned = Burst::new(frames, maps, ref_idx)?;
    Ok(Alignment {
        offsets_lr,
        offsets_full,
        aligned,
        flows,
        stats,
    })
}

/// Merge an aligned burst and reconstruct the full-color image.
pub fn fuse<T: Scalar>(alignment: &Alignment<T>) -> Result<RgbImage<T>> {
    let merged = robust_merge(&alignment.aligned, &alignment.flows)?;
    Ok(reconstruct(&merged))
}
