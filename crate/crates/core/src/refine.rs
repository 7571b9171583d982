//! Dense pixel-level refinement of coarsely aligned frames.
//!
//! A small-radius exhaustive search per pixel on the interpolated green
//! plane: raw-domain differences across CFA phases are meaningless, so the
//! comparison runs on the phase-uniform green channel. Candidate
//! displacements are restricted to even parity so the resulting flow can be
//! applied to CFA data directly.

use rayon::prelude::*;

use crate::bayer::BayerFrame;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::scalar::Scalar;

/// Half-width of the SAD window; the window side is `2 * SAD_WINDOW + 1`.
const SAD_WINDOW: usize = 8;

/// Variance floor inside the confidence mapping.
const CONF_EPS: f64 = 1e-6;

/// Per-pixel integer displacement field with a matching confidence in
/// `[0, 1]`.
#[derive(Clone, Debug)]
pub struct FlowField<T> {
    dy: Grid<T>,
    dx: Grid<T>,
    confidence: Grid<T>,
}

impl<T: Scalar> FlowField<T> {
    pub fn new(dy: Grid<T>, dx: Grid<T>, confidence: Grid<T>) -> Result<Self> {
        if !dy.same_dims(&dx) || !dy.same_dims(&confidence) {
            return Err(Error::dimension("flow planes must share dimensions"));
        }
        Ok(FlowField { dy, dx, confidence })
    }

    /// Identity flow with full confidence (used for the reference frame).
    pub fn identity(height: usize, width: usize) -> Self {
        FlowField {
            dy: Grid::zeros(height, width),
            dx: Grid::zeros(height, width),
            confidence: Grid::filled(height, width, T::one()),
        }
    }

    pub fn height(&self) -> usize {
        self.dy.height()
    }

    pub fn width(&self) -> usize {
        self.dy.width()
    }

    pub fn dy(&self) -> &Grid<T> {
        &self.dy
    }

    pub fn dx(&self) -> &Grid<T> {
        &self.dx
    }

    pub fn confidence(&self) -> &Grid<T> {
        &self.confidence
    }

    /// Largest displacement magnitude component.
    pub fn max_abs(&self) -> T {
        self.dy
            .data()
            .iter()
            .chain(self.dx.data())
            .fold(T::zero(), |m, &v| m.max(v.abs()))
    }
}

/// Interpolated green plane: green samples pass through, red/blue sites take
/// the 4-neighbor cross average.
pub fn green_plane<T: Scalar>(frame: &BayerFrame<T>) -> Grid<T> {
    let pat = frame.pattern();
    let plane = frame.plane();
    let quarter = T::from_f64(0.25);
    Grid::from_fn(frame.height(), frame.width(), |r, c| {
        if pat.color_at(r, c) == crate::rgb::Channel::G {
            plane.get(r, c)
        } else {
            let ri = r as isize;
            let ci = c as isize;
            (plane.get_reflect(ri - 1, ci)
                + plane.get_reflect(ri + 1, ci)
                + plane.get_reflect(ri, ci - 1)
                + plane.get_reflect(ri, ci + 1))
                * quarter
        }
    })
}

/// Summed-area table over a mirror-extended plane, used to evaluate window
/// SADs in constant time per pixel.
struct WindowSums {
    sat: Vec<f64>,
    width: usize,
}

impl WindowSums {
    /// Build from the absolute difference of `a` shifted by `(dy, dx)`
    /// against `b`, extended by `pad` on every side.
    fn build<T: Scalar>(a: &Grid<T>, b: &Grid<T>, dy: i32, dx: i32, pad: usize) -> Self {
        let h = a.height() + 2 * pad;
        let w = a.width() + 2 * pad;
        let mut sat = vec![0.0f64; (h + 1) * (w + 1)];
        for r in 0..h {
            let mut row_acc = 0.0;
            for c in 0..w {
                let rr = r as isize - pad as isize;
                let cc = c as isize - pad as isize;
                let av = a
                    .get_reflect(rr + dy as isize, cc + dx as isize)
                    .to_f64();
                let bv = b.get_reflect(rr, cc).to_f64();
                row_acc += (av - bv).abs();
                sat[(r + 1) * (w + 1) + (c + 1)] = sat[r * (w + 1) + (c + 1)] + row_acc;
            }
        }
        WindowSums { sat, width: w + 1 }
    }

    /// Sum over rows `[r0, r1)` and cols `[c0, c1)` of the extended plane.
    fn rect(&self, r0: usize, c0: usize, r1: usize, c1: usize) -> f64 {
        self.sat[r1 * self.width + c1] + self.sat[r0 * self.width + c0]
            - self.sat[r0 * self.width + c1]
            - self.sat[r1 * self.width + c0]
    }
}

/// Estimate a per-pixel even-parity flow aligning `aligned` onto `reference`.
///
/// For each pixel the displacement minimizing the green-plane SAD over a
/// 17x17 window is selected among even offsets within `+/- radius`; ties
/// break toward zero motion. Confidence is
/// `exp(-sad / (window_area * (var_ref + eps)))`.
pub fn dense_refine<T: Scalar>(
    aligned: &BayerFrame<T>,
    reference: &BayerFrame<T>,
    var_ref: &Grid<T>,
    radius: i32,
) -> Result<FlowField<T>> {
    if !(1..=4).contains(&radius) {
        return Err(Error::config("refine radius must be in [1, 4]"));
    }
    if aligned.height() != reference.height() || aligned.width() != reference.width() {
        return Err(Error::dimension("frames must share dimensions"));
    }
    if !var_ref.same_dims(reference.plane()) {
        return Err(Error::dimension("variance map must match the frame"));
    }

    let g_al = green_plane(aligned);
    let g_ref = green_plane(reference);
    let h = g_ref.height();
    let w = g_ref.width();

    let mut candidates = Vec::new();
    let mut d = -radius;
    while d <= radius {
        if d % 2 == 0 {
            candidates.push(d);
        }
        d += 1;
    }
    let deltas: Vec<(i32, i32)> = candidates
        .iter()
        .flat_map(|&dy| candidates.iter().map(move |&dx| (dy, dx)))
        .collect();

    let pad = SAD_WINDOW + radius as usize;
    let sums: Vec<WindowSums> = deltas
        .par_iter()
        .map(|&(dy, dx)| WindowSums::build(&g_al, &g_ref, dy, dx, pad))
        .collect();

    let side = 2 * SAD_WINDOW + 1;
    let window_area = (side * side) as f64;
    let rows: Vec<(Vec<T>, Vec<T>, Vec<T>)> = (0..h)
        .into_par_iter()
        .map(|r| {
            let mut dy_row = Vec::with_capacity(w);
            let mut dx_row = Vec::with_capacity(w);
            let mut conf_row = Vec::with_capacity(w);
            for c in 0..w {
                let r0 = r + pad - SAD_WINDOW;
                let c0 = c + pad - SAD_WINDOW;
                let mut best = 0usize;
                let mut best_sad = f64::INFINITY;
                for i in 0..deltas.len() {
                    let sad = sums[i].rect(r0, c0, r0 + side, c0 + side);
                    if sad < best_sad
                        || (sad == best_sad && mag2(deltas[i]) < mag2(deltas[best]))
                    {
                        best = i;
                        best_sad = sad;
                    }
                }
                let (dy, dx) = deltas[best];
                let var = var_ref.get(r, c).to_f64();
                let conf = (-best_sad / (window_area * (var + CONF_EPS))).exp();
                dy_row.push(T::from_f64(dy as f64));
                dx_row.push(T::from_f64(dx as f64));
                conf_row.push(T::from_f64(conf));
            }
            (dy_row, dx_row, conf_row)
        })
        .collect();

    let mut dy_data = Vec::with_capacity(h * w);
    let mut dx_data = Vec::with_capacity(h * w);
    let mut conf_data = Vec::with_capacity(h * w);
    for (a, b, c) in rows {
        dy_data.extend(a);
        dx_data.extend(b);
        conf_data.extend(c);
    }
    FlowField::new(
        Grid::from_vec(h, w, dy_data)?,
        Grid::from_vec(h, w, dx_data)?,
        Grid::from_vec(h, w, conf_data)?,
    )
}

fn mag2(d: (i32, i32)) -> i64 {
    let (dy, dx) = d;
    (dy as i64) * (dy as i64) + (dx as i64) * (dx as i64)
}

/// Integer gather of a frame through a (parity-snapped) flow field, with
/// mirror reflection outside the frame.
pub fn warp<T: Scalar>(frame: &BayerFrame<T>, flow: &FlowField<T>) -> Result<BayerFrame<T>> {
    if flow.height() != frame.height() || flow.width() != frame.width() {
        return Err(Error::dimension("flow must match the frame"));
    }
    let plane = warp_grid(frame.plane(), flow)?;
    BayerFrame::new(plane, frame.pattern())
}

/// Same gather applied to an arbitrary grid (e.g. a variance map).
pub fn warp_grid<T: Scalar>(grid: &Grid<T>, flow: &FlowField<T>) -> Result<Grid<T>> {
    if !grid.same_dims(flow.dy()) {
        return Err(Error::dimension("flow must match the grid"));
    }
    let h = grid.height();
    let w = grid.width();
    let rows: Vec<Vec<T>> = (0..h)
        .into_par_iter()
        .map(|r| {
            let mut row = Vec::with_capacity(w);
            for c in 0..w {
                let dy = flow.dy().get(r, c).to_f64().round() as isize;
                let dx = flow.dx().get(r, c).to_f64().round() as isize;
                debug_assert!(dy % 2 == 0 && dx % 2 == 0, "flow must be parity-snapped");
                row.push(grid.get_reflect(r as isize + dy, c as isize + dx));
            }
            row
        })
        .collect();
    Grid::from_vec(h, w, rows.concat())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bayer::{mosaic, BayerPattern};
    use crate::synth::smooth_rgb_texture;

    fn textured_frame(seed: u64) -> BayerFrame<f64> {
        let rgb = smooth_rgb_texture::<f64>(64, 64, seed).unwrap();
        mosaic(&rgb, BayerPattern::Rggb).unwrap()
    }

    #[test]
    fn self_refine_is_zero_flow_full_confidence() {
        let f = textured_frame(5);
        let var = Grid::filled(64, 64, 1e-3_f64);
        let flow = dense_refine(&f, &f, &var, 2).unwrap();
        assert_eq!(flow.max_abs(), 0.0);
        assert!(flow.confidence().data().iter().all(|&c| c == 1.0));
    }

    #[test]
    fn recovers_even_residual_shift() {
        // Build a pair where `aligned` still lags the reference by (2, 0):
        // crops of the same master scene two rows apart.
        let master = smooth_rgb_texture::<f64>(96, 96, 8).unwrap();
        let a = mosaic(&master.crop_at(16, 16, 64, 64).unwrap(), BayerPattern::Rggb).unwrap();
        let b = mosaic(&master.crop_at(18, 16, 64, 64).unwrap(), BayerPattern::Rggb).unwrap();
        let var = Grid::filled(64, 64, 1e-3_f64);
        let flow = dense_refine(&b, &a, &var, 2).unwrap();
        // Interior pixels recover the exact residual; borders may reflect.
        for r in 8..56 {
            for c in 8..56 {
                assert_eq!(flow.dy().get(r, c), 2.0, "at ({r},{c})");
                assert_eq!(flow.dx().get(r, c), 0.0, "at ({r},{c})");
            }
        }
        let warped = warp(&b, &flow).unwrap();
        for r in 8..56 {
            for c in 8..56 {
                assert_eq!(warped.get(r, c), a.get(r, c));
            }
        }
    }

    #[test]
    fn flat_frames_tie_break_to_zero() {
        let flat = BayerFrame::new(Grid::filled(32, 32, 0.5_f64), BayerPattern::Rggb).unwrap();
        let var = Grid::filled(32, 32, 1e-4_f64);
        let flow = dense_refine(&flat, &flat, &var, 2).unwrap();
        assert_eq!(flow.max_abs(), 0.0);
    }

    #[test]
    fn rejects_bad_radius() {
        let f = textured_frame(2);
        let var = Grid::filled(64, 64, 1e-3_f64);
        assert!(dense_refine(&f, &f, &var, 0).is_err());
        assert!(dense_refine(&f, &f, &var, 5).is_err());
    }

    #[test]
    fn warp_zero_flow_is_identity() {
        let f = textured_frame(3);
        let flow = FlowField::identity(64, 64);
        let out = warp(&f, &flow).unwrap();
        assert_eq!(out.plane().data(), f.plane().data());
    }

    #[test]
    fn warp_uniform_flow_shifts_with_reflected_border() {
        let f = textured_frame(4);
        let flow = FlowField::new(
            Grid::filled(64, 64, 2.0_f64),
            Grid::zeros(64, 64),
            Grid::filled(64, 64, 1.0),
        )
        .unwrap();
        let out = warp(&f, &flow).unwrap();
        for r in 0..62 {
            for c in 0..64 {
                assert_eq!(out.get(r, c), f.get(r + 2, c));
            }
        }
        // Bottom border mirrors (parity preserved).
        assert_eq!(out.get(63, 0), f.get(63, 0));
        assert_eq!(out.get(62, 0), f.get(62, 0));
    }

    #[test]
    fn warp_matches_direct_gather_oracle() {
        let f = textured_frame(6);
        let mut dy = Grid::zeros(64, 64);
        let mut dx = Grid::zeros(64, 64);
        let mut state = 17_u64;
        for r in 0..64 {
            for c in 0..64 {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
                dy.set(r, c, (((state >> 33) % 3) as f64 - 1.0) * 2.0);
                dx.set(r, c, (((state >> 13) % 3) as f64 - 1.0) * 2.0);
            }
        }
        let flow = FlowField::new(dy.clone(), dx.clone(), Grid::filled(64, 64, 1.0)).unwrap();
        let out = warp(&f, &flow).unwrap();
        for r in 0..64 {
            for c in 0..64 {
                let want = f.plane().get_reflect(
                    r as isize + dy.get(r, c) as isize,
                    c as isize + dx.get(r, c) as isize,
                );
                assert_eq!(out.get(r, c), want);
            }
        }
    }

    #[test]
    fn warp_preserves_cfa_pattern() {
        // With even flows, the gathered sample always comes from a site of
        // the same color phase.
        let f = textured_frame(7);
        let flow = FlowField::new(
            Grid::filled(64, 64, -2.0_f64),
            Grid::filled(64, 64, 4.0),
            Grid::filled(64, 64, 1.0),
        )
        .unwrap();
        let out = warp(&f, &flow).unwrap();
        let pat = out.pattern();
        for r in 0..64usize {
            for c in 0..64usize {
                let src_r = (r as isize - 2).rem_euclid(2);
                let src_c = (c as isize + 4).rem_euclid(2);
                assert_eq!(
                    pat.color_at(r, c),
                    pat.color_at(src_r as usize, src_c as usize)
                );
            }
        }
    }
}
