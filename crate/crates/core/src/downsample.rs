//! Quarter-scale box downsampling for the coarse matching stage.

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::scalar::Scalar;

/// Mean-pool 4x4 blocks into one sample. For CFA planes this averages across
/// all four color phases, yielding a luma-like quarter-scale plane.
///
/// Dimensions must be divisible by 4; pad with [`pad_to_multiple`] first if
/// they are not.
pub fn downsample_quarter<T: Scalar>(frame: &Grid<T>) -> Result<Grid<T>> {
    let h = frame.height();
    let w = frame.width();
    if h % 4 != 0 || w % 4 != 0 {
        return Err(Error::dimension(format!(
            "quarter downsample needs dimensions divisible by 4, got {h}x{w}"
        )));
    }
    let inv16 = T::from_f64(1.0 / 16.0);
    Ok(Grid::from_fn(h / 4, w / 4, |r, c| {
        let mut acc = T::zero();
        for dr in 0..4 {
            for dc in 0..4 {
                acc += frame.get(4 * r + dr, 4 * c + dc);
            }
        }
        acc * inv16
    }))
}

/// Extend a grid on the bottom/right with mirror reflection until both
/// dimensions are multiples of `m`. With even input dims and even `m` the
/// padding is even, so CFA phase is preserved.
pub fn pad_to_multiple<T: Scalar>(frame: &Grid<T>, m: usize) -> Grid<T> {
    let h = frame.height();
    let w = frame.width();
    let ph = h.div_ceil(m) * m;
    let pw = w.div_ceil(m) * m;
    if ph == h && pw == w {
        return frame.clone();
    }
    Grid::from_fn(ph, pw, |r, c| frame.get_reflect(r as isize, c as isize))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_stays_constant() {
        let g = Grid::filled(8, 8, 0.25_f64);
        let d = downsample_quarter(&g).unwrap();
        assert_eq!(d.height(), 2);
        assert_eq!(d.width(), 2);
        assert!(d.data().iter().all(|&v| v == 0.25));
    }

    #[test]
    fn single_hot_pixel_boxes_to_mean() {
        let mut g = Grid::filled(4, 4, 0.0_f64);
        g.set(1, 2, 16.0);
        let d = downsample_quarter(&g).unwrap();
        assert_eq!(d.get(0, 0), 1.0);
    }

    #[test]
    fn matches_block_mean_oracle() {
        let mut v = 0.7;
        let g = Grid::from_fn(16, 16, |_, _| {
            v = (v * 3.9).fract();
            v
        });
        let d = downsample_quarter(&g).unwrap();
        for r in 0..4 {
            for c in 0..4 {
                let mut acc = 0.0;
                for dr in 0..4 {
                    for dc in 0..4 {
                        acc += g.get(4 * r + dr, 4 * c + dc);
                    }
                }
                assert_eq!(d.get(r, c), acc * (1.0 / 16.0));
            }
        }
    }

    #[test]
    fn rejects_non_divisible_dims() {
        assert!(downsample_quarter(&Grid::filled(6, 8, 0.0_f64)).is_err());
    }

    #[test]
    fn energy_preserved_up_to_box_factor() {
        let mut v = 0.2;
        let g = Grid::from_fn(8, 8, |_, _| {
            v = (v * 5.3).fract();
            v
        });
        let d = downsample_quarter(&g).unwrap();
        assert!((d.sum() * 16.0 - g.sum()).abs() < 1e-9);
    }

    #[test]
    fn pad_reflects_and_preserves_parity() {
        let g = Grid::from_fn(6, 6, |r, c| (r * 10 + c) as f64);
        let p = pad_to_multiple(&g, 4);
        assert_eq!(p.height(), 8);
        assert_eq!(p.width(), 8);
        // Row 6 mirrors row 4 (parity preserved), row 7 mirrors row 3.
        assert_eq!(p.get(6, 0), g.get(4, 0));
        assert_eq!(p.get(7, 2), g.get(3, 2));
        assert_eq!(p.get(0, 6), g.get(0, 4));
    }
}
