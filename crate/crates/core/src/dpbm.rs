//! Progressive block matching at quarter scale with temporal propagation of
//! search centers across the burst.
//!
//! Each patch search runs in two phases: a strided sweep over the full range
//! around the (propagated) search center picks an approximate position, then
//! a stride-1 sweep in a `(2s-1)`-wide window around it picks the final
//! match. Both phases always evaluate their full candidate lattice
//! (out-of-frame patches are mirror-extracted), so the evaluation count per
//! patch is exactly `(floor(2*dp_cmax/s)+1)^2 + (2s-1)^2`.

use rayon::prelude::*;

use crate::burst::Burst;
use crate::error::{Error, Result};
use crate::grid::{Grid, Shift};
use crate::matching::{hard_argmin, nma_distances, soft_match, CandidateSet, SoftMatch, NMA_EPS};
use crate::scalar::Scalar;

/// Selection mode for the final phase of each patch search.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SearchMode {
    /// Plain argmin selection.
    Hard,
    /// Argmin selection plus the relaxed match (weights, blended patch,
    /// expected offset) for the stride-1 phase.
    Soft,
}

/// Parameters of the progressive search at quarter scale.
#[derive(Clone, Copy, Debug)]
pub struct SearchConfig {
    /// Patch side in quarter-scale pixels.
    pub patch_k: usize,
    /// Maximum search range in quarter-scale pixels.
    pub dp_cmax: i32,
    /// Coarse-phase stride, >= 2.
    pub stride_s: i32,
    /// Temperature for soft mode.
    pub temperature: f64,
    pub mode: SearchMode,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            patch_k: 16,
            dp_cmax: 16,
            stride_s: 4,
            temperature: 1e-2,
            mode: SearchMode::Hard,
        }
    }
}

impl SearchConfig {
    /// Validate the configuration against the frame dimensions it will
    /// search over.
    pub fn validate(&self, height: usize, width: usize) -> Result<()> {
        if self.stride_s < 2 {
            return Err(Error::config("stride must be at least 2"));
        }
        if self.dp_cmax < self.stride_s {
            return Err(Error::config("search range must be at least the stride"));
        }
        if self.patch_k < 4 {
            return Err(Error::config("patch side must be at least 4"));
        }
        let min_dim = height.min(width);
        if self.dp_cmax as usize > min_dim / 2 {
            return Err(Error::config(format!(
                "search range {} exceeds half the frame dimension {}",
                self.dp_cmax, min_dim
            )));
        }
        if self.temperature <= 0.0 {
            return Err(Error::config("temperature must be positive"));
        }
        Ok(())
    }

    /// Phase-1 lattice per axis: `{-dp_cmax + i*s}` for `i` in
    /// `0..=floor(2*dp_cmax/s)`.
    fn coarse_axis(&self) -> Vec<i32> {
        let c = self.dp_cmax;
        let s = self.stride_s;
        (0..=(2 * c / s)).map(|i| -c + i * s).collect()
    }

    /// Closed-form number of distance evaluations per patch search.
    pub fn evals_per_patch(&self) -> u64 {
        let coarse = (2 * self.dp_cmax / self.stride_s + 1) as u64;
        let fine = (2 * self.stride_s - 1) as u64;
        coarse * coarse + fine * fine
    }
}

/// Per-patch integer displacement field at quarter scale for one frame.
#[derive(Clone, Debug, PartialEq)]
pub struct OffsetGrid {
    patch_rows: usize,
    patch_cols: usize,
    patch_size: usize,
    data: Vec<Shift>,
}

impl OffsetGrid {
    pub fn zeros(patch_rows: usize, patch_cols: usize, patch_size: usize) -> Self {
        OffsetGrid {
            patch_rows,
            patch_cols,
            patch_size,
            data: vec![Shift::ZERO; patch_rows * patch_cols],
        }
    }

    pub fn from_shifts(
        patch_rows: usize,
        patch_cols: usize,
        patch_size: usize,
        data: Vec<Shift>,
    ) -> Result<Self> {
        if data.len() != patch_rows * patch_cols {
            return Err(Error::dimension("offset grid data/shape mismatch"));
        }
        Ok(OffsetGrid {
            patch_rows,
            patch_cols,
            patch_size,
            data,
        })
    }

    /// Patch grid covering `height` x `width` with non-overlapping patches.
    pub fn tiling(height: usize, width: usize, patch_size: usize) -> (usize, usize) {
        (height.div_ceil(patch_size), width.div_ceil(patch_size))
    }

    pub fn patch_rows(&self) -> usize {
        self.patch_rows
    }

    pub fn patch_cols(&self) -> usize {
        self.patch_cols
    }

    pub fn patch_size(&self) -> usize {
        self.patch_size
    }

    pub fn get(&self, pr: usize, pc: usize) -> Shift {
        self.data[pr * self.patch_cols + pc]
    }

    pub fn set(&mut self, pr: usize, pc: usize, s: Shift) {
        self.data[pr * self.patch_cols + pc] = s;
    }

    pub fn shifts(&self) -> &[Shift] {
        &self.data
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&s| s == Shift::ZERO)
    }
}

/// Outcome of one progressive patch search.
#[derive(Clone, Debug)]
pub struct SearchOutcome<T> {
    /// Matched displacement relative to the patch position `p`
    /// (the propagated center shift is included).
    pub offset: Shift,
    /// Set when the match landed on or beyond the edge of the nominal
    /// `+/- dp_cmax` range around the search center; the caller may widen
    /// the search.
    pub at_boundary: bool,
    /// Relaxed match of the stride-1 phase (soft mode only). Its positions
    /// and expected offset are relative to the search center.
    pub soft: Option<SoftMatch<T>>,
    /// Number of candidate distance evaluations performed.
    pub evals: u64,
}

fn gather_candidates<T: Scalar>(
    tgt: &Grid<T>,
    center: Shift,
    deltas: &[Shift],
    p: (usize, usize),
    k: usize,
) -> (Vec<Grid<T>>, Vec<Shift>) {
    let mut patches = Vec::with_capacity(deltas.len());
    for d in deltas {
        let top = p.0 as isize + (center.dy + d.dy) as isize;
        let left = p.1 as isize + (center.dx + d.dx) as isize;
        patches.push(tgt.window_reflect(top, left, k));
    }
    (patches, deltas.to_vec())
}

/// Two-phase strided search for the patch at top-left corner `p` of the
/// reference frame, looking into `tgt` around `p + center_shift`.
pub fn progressive_search<T: Scalar>(
    ref_lr: &Grid<T>,
    tgt_lr: &Grid<T>,
    p: (usize, usize),
    center_shift: Shift,
    cfg: &SearchConfig,
) -> Result<SearchOutcome<T>> {
    if !ref_lr.same_dims(tgt_lr) {
        return Err(Error::dimension("reference and target frames must match"));
    }
    cfg.validate(ref_lr.height(), ref_lr.width())?;

    let k = cfg.patch_k;
    let ref_patch = ref_lr.window_reflect(p.0 as isize, p.1 as isize, k);

    // Phase 1: strided sweep over the full range.
    let axis = cfg.coarse_axis();
    let mut coarse_deltas = Vec::with_capacity(axis.len() * axis.len());
    for &dy in &axis {
        for &dx in &axis {
            coarse_deltas.push(Shift::new(dy, dx));
        }
    }
    let (patches, positions) = gather_candidates(tgt_lr, center_shift, &coarse_deltas, p, k);
    let cs = CandidateSet::new(ref_patch.clone(), patches, positions)?;
    let d = nma_distances(&cs, T::from_f64(NMA_EPS));
    let coarse_best = cs.positions()[hard_argmin(&d, cs.positions())];
    let mut evals = cs.len() as u64;

    // Phase 2: stride-1 sweep in a (2s-1)-wide window around the winner.
    let s = cfg.stride_s;
    let mut fine_deltas = Vec::with_capacity(((2 * s - 1) * (2 * s - 1)) as usize);
    for dy in -(s - 1)..=(s - 1) {
        for dx in -(s - 1)..=(s - 1) {
            fine_deltas.push(Shift::new(coarse_best.dy + dy, coarse_best.dx + dx));
        }
    }
    let (patches, positions) = gather_candidates(tgt_lr, center_shift, &fine_deltas, p, k);
    let cs = CandidateSet::new(ref_patch, patches, positions)?;
    let d = nma_distances(&cs, T::from_f64(NMA_EPS));
    evals += cs.len() as u64;
    let fine_best = cs.positions()[hard_argmin(&d, cs.positions())];

    let soft = match cfg.mode {
        SearchMode::Hard => None,
        SearchMode::Soft => Some(soft_match(&cs, T::from_f64(cfg.temperature))?),
    };

    let at_boundary =
        fine_best.dy.abs() >= cfg.dp_cmax || fine_best.dx.abs() >= cfg.dp_cmax;

    Ok(SearchOutcome {
        offset: Shift::new(center_shift.dy + fine_best.dy, center_shift.dx + fine_best.dx),
        at_boundary,
        soft,
        evals,
    })
}

/// Aggregate statistics of a coarse alignment pass.
#[derive(Clone, Copy, Debug, Default)]
pub struct AlignStats {
    pub candidate_evals: u64,
    pub boundary_hits: u64,
}

/// Coarse-align every frame of a quarter-scale burst against the reference.
///
/// Targets are processed outward from the reference in both temporal
/// directions; each patch's search center is the offset found for the same
/// patch in the previously processed frame of that direction (zero for the
/// first neighbor). The reference frame gets an all-zero grid.
pub fn align_burst_coarse<T: Scalar>(
    frames_lr: &[Grid<T>],
    ref_index: usize,
    cfg: &SearchConfig,
) -> Result<Vec<OffsetGrid>> {
    align_burst_coarse_with_stats(frames_lr, ref_index, cfg).map(|(grids, _)| grids)
}

pub fn align_burst_coarse_with_stats<T: Scalar>(
    frames_lr: &[Grid<T>],
    ref_index: usize,
    cfg: &SearchConfig,
) -> Result<(Vec<OffsetGrid>, AlignStats)> {
    if frames_lr.is_empty() {
        return Err(Error::parameter("empty burst"));
    }
    if ref_index >= frames_lr.len() {
        return Err(Error::parameter("ref_index out of range"));
    }
    let h = frames_lr[0].height();
    let w = frames_lr[0].width();
    for f in frames_lr {
        if f.height() != h || f.width() != w {
            return Err(Error::dimension("all frames must share dimensions"));
        }
    }
    cfg.validate(h, w)?;

    let (rows, cols) = OffsetGrid::tiling(h, w, cfg.patch_k);
    let mut grids: Vec<OffsetGrid> = (0..frames_lr.len())
        .map(|_| OffsetGrid::zeros(rows, cols, cfg.patch_k))
        .collect();
    let mut stats = AlignStats::default();

    let reference = &frames_lr[ref_index];
    // Forward then backward chain, each propagating its own centers.
    let forward: Vec<usize> = (ref_index + 1..frames_lr.len()).collect();
    let backward: Vec<usize> = (0..ref_index).rev().collect();
    for chain in [forward, backward] {
        let mut prev: Option<usize> = None;
        for t in chain {
            let centers: Vec<Shift> = match prev {
                None => vec![Shift::ZERO; rows * cols],
                Some(pt) => grids[pt].shifts().to_vec(),
            };
            let target = &frames_lr[t];
            let outcomes: Vec<(Shift, bool, u64)> = (0..rows * cols)
                .into_par_iter()
                .map(|idx| {
                    let pr = idx / cols;
                    let pc = idx % cols;
                    let p = (pr * cfg.patch_k, pc * cfg.patch_k);
                    let center = clamp_center(centers[idx], p, cfg.patch_k, h, w);
                    let out = progressive_search(reference, target, p, center, cfg)?;
                    Ok((out.offset, out.at_boundary, out.evals))
                })
                .collect::<Result<Vec<_>>>()?;
            let shifts: Vec<Shift> = outcomes.iter().map(|o| o.0).collect();
            stats.boundary_hits += outcomes.iter().filter(|o| o.1).count() as u64;
            stats.candidate_evals += outcomes.iter().map(|o| o.2).sum::<u64>();
            grids[t] = OffsetGrid::from_shifts(rows, cols, cfg.patch_k, shifts)?;
            prev = Some(t);
        }
    }
    Ok((grids, stats))
}

/// Keep a propagated search center inside the frame: the centered patch's
/// top-left corner is clamped to `[0, dim - k]`.
fn clamp_center(center: Shift, p: (usize, usize), k: usize, h: usize, w: usize) -> Shift {
    let clamp_axis = |pos: usize, shift: i32, dim: usize| -> i32 {
        let lo = -(pos as i64);
        let hi = (dim.saturating_sub(k)) as i64 - pos as i64;
        (shift as i64).clamp(lo, hi.max(lo)) as i32
    };
    Shift::new(
        clamp_axis(p.0, center.dy, h),
        clamp_axis(p.1, center.dx, w),
    )
}

/// Scale a quarter-resolution offset grid to full resolution: displacements
/// and patch tiling are both multiplied by 4.
pub fn rescale_offsets(grid: &OffsetGrid) -> OffsetGrid {
    OffsetGrid {
        patch_rows: grid.patch_rows,
        patch_cols: grid.patch_cols,
        patch_size: grid.patch_size * 4,
        data: grid.data.iter().map(|s| s.scaled(4)).collect(),
    }
}

/// Warp every non-reference frame patchwise by its full-resolution offsets.
///
/// Offsets are snapped to even parity (ties toward zero) before application
/// so CFA phase is preserved; out-of-frame reads mirror-reflect. Variance
/// maps are warped identically.
pub fn apply_offsets<T: Scalar>(burst: &Burst<T>, offsets: &[OffsetGrid]) -> Result<Burst<T>> {
    if offsets.len() != burst.len() {
        return Err(Error::dimension("one offset grid per frame is required"));
    }
    let h = burst.height();
    let w = burst.width();
    for g in offsets {
        if g.patch_rows * g.patch_size < h || g.patch_cols * g.patch_size < w {
            return Err(Error::dimension("offset grid does not cover the frame"));
        }
    }

    let mut frames = Vec::with_capacity(burst.len());
    let mut maps = Vec::with_capacity(burst.len());
    for (t, (frame, var)) in burst
        .frames()
        .iter()
        .zip(burst.variance_maps())
        .enumerate()
    {
        if t == burst.ref_index() {
            frames.push(frame.clone());
            maps.push(var.clone());
            continue;
        }
        let grid = &offsets[t];
        let warp_plane = |src: &Grid<T>| -> Grid<T> {
            let rows: Vec<Vec<T>> = (0..h)
                .into_par_iter()
                .map(|r| {
                    let pr = r / grid.patch_size;
                    let mut row = Vec::with_capacity(w);
                    for c in 0..w {
                        let pc = c / grid.patch_size;
                        let d = grid.get(pr, pc).snap_even();
                        row.push(src.get_reflect(
                            r as isize + d.dy as isize,
                            c as isize + d.dx as isize,
                        ));
                    }
                    row
                })
                .collect();
            Grid::from_vec(h, w, rows.concat()).expect("warp preserves dimensions")
        };
        let warped = warp_plane(frame.plane());
        frames.push(crate::bayer::BayerFrame::new(warped, frame.pattern())?);
        maps.push(warp_plane(var));
    }
    Burst::new(frames, maps, burst.ref_index())
}

/// Brute-force stride-1 argmin over the full `(2*range+1)^2` window around
/// `p`. Test oracle and verification path; not used by the pipeline.
pub fn exhaustive_search<T: Scalar>(
    ref_lr: &Grid<T>,
    tgt_lr: &Grid<T>,
    p: (usize, usize),
    range: i32,
    patch_k: usize,
) -> Result<Shift> {
    if !ref_lr.same_dims(tgt_lr) {
        return Err(Error::dimension("reference and target frames must match"));
    }
    let ref_patch = ref_lr.window_reflect(p.0 as isize, p.1 as isize, patch_k);
    let mut deltas = Vec::with_capacity(((2 * range + 1) * (2 * range + 1)) as usize);
    for dy in -range..=range {
        for dx in -range..=range {
            deltas.push(Shift::new(dy, dx));
        }
    }
    let (patches, positions) = gather_candidates(tgt_lr, Shift::ZERO, &deltas, p, patch_k);
    let cs = CandidateSet::new(ref_patch, patches, positions)?;
    let d = nma_distances(&cs, T::from_f64(NMA_EPS));
    Ok(cs.positions()[hard_argmin(&d, cs.positions())])
}
