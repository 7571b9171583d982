//! Seeded synthetic scenes and bursts for tests, benches and the CLI.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bayer::{mosaic, BayerPattern};
use crate::burst::Burst;
use crate::error::{Error, Result};
use crate::grid::{Grid, Shift};
use crate::noise::{add_noise, variance_map, NoiseParams};
use crate::rgb::RgbImage;
use crate::scalar::Scalar;

/// Band-limited random texture in `[0.02, 0.98]`: seeded uniform noise,
/// two 5x5 box-blur passes, then min-max rescale. Every 16x16 tile keeps a
/// sample variance well above 1e-4, which block matching needs.
pub fn smooth_texture<T: Scalar>(height: usize, width: usize, seed: u64) -> Grid<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tex = Grid::from_fn(height, width, |_, _| rng.random::<f64>());
    for _ in 0..2 {
        tex = box_blur5(&tex);
    }
    let (lo, hi) = tex
        .data()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let span = (hi - lo).max(1e-12);
    tex.map(|v| T::from_f64(0.02 + 0.96 * (v - lo) / span))
}

fn box_blur5(g: &Grid<f64>) -> Grid<f64> {
    let blur_axis = |src: &Grid<f64>, rows: bool| {
        Grid::from_fn(src.height(), src.width(), |r, c| {
            let mut acc = 0.0;
            for d in -2isize..=2 {
                acc += if rows {
                    src.get_reflect(r as isize + d, c as isize)
                } else {
                    src.get_reflect(r as isize, c as isize + d)
                };
            }
            acc / 5.0
        })
    };
    blur_axis(&blur_axis(g, true), false)
}

/// Smooth RGB scene with correlated channels, suitable as linear-light
/// ground truth.
pub fn smooth_rgb_texture<T: Scalar>(height: usize, width: usize, seed: u64) -> Result<RgbImage<T>> {
    let base = smooth_texture::<f64>(height, width, seed);
    let tint_r = smooth_texture::<f64>(height, width, seed.wrapping_add(1));
    let tint_b = smooth_texture::<f64>(height, width, seed.wrapping_add(2));
    RgbImage::from_fn(height, width, |r, c| {
        let l = base.get(r, c);
        let tr = tint_r.get(r, c);
        let tb = tint_b.get(r, c);
        [
            T::from_f64((0.75 * l + 0.25 * tr).clamp(0.0, 1.0)),
            T::from_f64(l),
            T::from_f64((0.75 * l + 0.25 * tb).clamp(0.0, 1.0)),
        ]
    })
}

/// A synthesized noisy burst together with its clean reference image and the
/// content shifts the aligner is expected to recover.
#[derive(Clone, Debug)]
pub struct SyntheticBurst<T> {
    pub burst: Burst<T>,
    pub truth: RgbImage<T>,
    pub shifts: Vec<Shift>,
}

/// Build a noisy CFA burst by cropping shifted windows out of a master
/// scene, mosaicking each crop and adding heteroscedastic noise
/// (frame `t` uses `seed + t`).
///
/// `shifts[t]` is the scene translation of frame `t` relative to the
/// reference frame (which must have shift zero); it is also the offset the
/// alignment stage should report for that frame.
pub fn synthesize_burst<T: Scalar>(
    master: &RgbImage<T>,
    out_height: usize,
    out_width: usize,
    shifts: &[Shift],
    ref_index: usize,
    pattern: BayerPattern,
    np: &NoiseParams<T>,
    seed: u64,
) -> Result<SyntheticBurst<T>> {
    if shifts.len() < 2 {
        return Err(Error::parameter("a burst needs at least 2 frames"));
    }
    if ref_index >= shifts.len() {
        return Err(Error::parameter("ref_index out of range"));
    }
    if shifts[ref_index] != Shift::ZERO {
        return Err(Error::parameter("the reference frame shift must be zero"));
    }
    let base_y = shifts.iter().map(|s| s.dy).max().unwrap().max(0) as usize;
    let base_x = shifts.iter().map(|s| s.dx).max().unwrap().max(0) as usize;

    let mut frames = Vec::with_capacity(shifts.len());
    let mut maps = Vec::with_capacity(shifts.len());
    let mut truth = None;
    for (t, s) in shifts.iter().enumerate() {
        let top = base_y as i64 - s.dy as i64;
        let left = base_x as i64 - s.dx as i64;
        if top < 0
            || left < 0
            || top as usize + out_height > master.height()
            || left as usize + out_width > master.width()
        {
            return Err(Error::dimension(format!(
                "shift {s:?} pushes the crop outside the {}x{} master",
                master.height(),
                master.width()
            )));
        }
        let crop = master.crop_at(top as usize, left as usize, out_height, out_width)?;
        let clean = mosaic(&crop, pattern)?;
        let noisy = add_noise(&clean, np, seed.wrapping_add(t as u64))?;
        maps.push(variance_map(&noisy, np)?);
        frames.push(noisy);
        if t == ref_index {
            truth = Some(crop);
        }
    }
    Ok(SyntheticBurst {
        burst: Burst::new(frames, maps, ref_index)?,
        truth: truth.expect("reference frame visited"),
        shifts: shifts.to_vec(),
    })
}
