//! Robust weighted merge of aligned frames and full-color reconstruction.

use rayon::prelude::*;

use crate::bayer::{demosaic_bilinear, BayerFrame};
use crate::burst::Burst;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::refine::FlowField;
use crate::rgb::RgbImage;
use crate::scalar::Scalar;

/// Guard against division by an exactly-zero variance.
const WEIGHT_EPS: f64 = 1e-12;

/// Minimum normalized weight the reference frame keeps, so collapsed
/// confidences can never exclude it.
const REF_WEIGHT_FLOOR: f64 = 0.1;

/// Per-pixel weighted mean of the aligned frames.
///
/// Frame `t`'s raw weight at a pixel is `confidence_t / (variance_t + eps)`;
/// weights are normalized per pixel and the reference keeps at least 10% of
/// the total. The output is accumulated as deviations from the reference, so
/// merging identical frames reproduces them bit-exactly.
pub fn robust_merge<T: Scalar>(
    aligned: &Burst<T>,
    flows: &[FlowField<T>],
) -> Result<BayerFrame<T>> {
    if flows.len() != aligned.len() {
        return Err(Error::dimension("one flow field per frame is required"));
    }
    let h = aligned.height();
    let w = aligned.width();
    for f in flows {
        if f.height() != h || f.width() != w {
            return Err(Error::dimension("flow fields must match the frames"));
        }
    }
    let ref_idx = aligned.ref_index();
    let n = aligned.len();

    let rows: Vec<Vec<T>> = (0..h)
        .into_par_iter()
        .map(|r| {
            let mut row = Vec::with_capacity(w);
            let mut weights = vec![0.0f64; n];
            for c in 0..w {
                let mut total = 0.0f64;
                for t in 0..n {
                    let conf = flows[t].confidence().get(r, c).to_f64();
                    let var = aligned.variance_map(t).get(r, c).to_f64();
                    let wt = conf / (var + WEIGHT_EPS);
                    weights[t] = wt;
                    total += wt;
                }
                let ref_val = aligned.frame(ref_idx).get(r, c);
                if total <= 0.0 {
                    row.push(ref_val);
                    continue;
                }
                for wt in weights.iter_mut() {
                    *wt /= total;
                }
                if weights[ref_idx] < REF_WEIGHT_FLOOR {
                    let scale = (1.0 - REF_WEIGHT_FLOOR) / (1.0 - weights[ref_idx]);
                    for (t, wt) in weights.iter_mut().enumerate() {
                        *wt = if t == ref_idx {
                            REF_WEIGHT_FLOOR
                        } else {
                            *wt * scale
                        };
                    }
                }
                let mut acc = T::zero();
                for t in 0..n {
                    if t == ref_idx {
                        continue;
                    }
                    let dev = aligned.frame(t).get(r, c) - ref_val;
                    acc += T::from_f64(weights[t]) * dev;
                }
                row.push(ref_val + acc);
            }
            row
        })
        .collect();

    let plane = Grid::from_vec(h, w, rows.concat())?;
    BayerFrame::new(plane, aligned.reference().pattern())
}

/// Demosaic the merged CFA frame and clip into `[0, 1]`.
pub fn reconstruct<T: Scalar>(merged: &BayerFrame<T>) -> RgbImage<T> {
    demosaic_bilinear(merged).clipped()
}
