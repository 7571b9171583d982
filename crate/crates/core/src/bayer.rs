//! Bayer CFA mosaicking and bilinear demosaicking.

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::rgb::{check_even_dims, Channel, RgbImage};
use crate::scalar::Scalar;

/// 2x2 color filter array layout, named by the top-left quad reading order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BayerPattern {
    Rggb,
    Bggr,
    Grbg,
    Gbrg,
}

impl BayerPattern {
    /// Channel recorded at `(row, col)`, determined by the coordinate parity.
    #[inline]
    pub fn color_at(self, row: usize, col: usize) -> Channel {
        let quad = match self {
            BayerPattern::Rggb => [Channel::R, Channel::G, Channel::G, Channel::B],
            BayerPattern::Bggr => [Channel::B, Channel::G, Channel::G, Channel::R],
            BayerPattern::Grbg => [Channel::G, Channel::R, Channel::B, Channel::G],
            BayerPattern::Gbrg => [Channel::G, Channel::B, Channel::R, Channel::G],
        };
        quad[(row % 2) * 2 + col % 2]
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rggb" => Ok(BayerPattern::Rggb),
            "bggr" => Ok(BayerPattern::Bggr),
            "grbg" => Ok(BayerPattern::Grbg),
            "gbrg" => Ok(BayerPattern::Gbrg),
            other => Err(Error::parameter(format!("unknown bayer pattern: {other}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BayerPattern::Rggb => "rggb",
            BayerPattern::Bggr => "bggr",
            BayerPattern::Grbg => "grbg",
            BayerPattern::Gbrg => "gbrg",
        }
    }
}

/// Single-channel CFA mosaic with its pattern tag.
///
/// Samples are nominally in `[0, 1]`; noisy frames may carry values outside
/// that range until export (clipping would bias the noise statistics).
#[derive(Clone, Debug, PartialEq)]
pub struct BayerFrame<T> {
    pattern: BayerPattern,
    plane: Grid<T>,
}

impl<T: Scalar> BayerFrame<T> {
    pub fn new(plane: Grid<T>, pattern: BayerPattern) -> Result<Self> {
        check_even_dims(plane.height(), plane.width())?;
        Ok(BayerFrame { pattern, plane })
    }

    pub fn pattern(&self) -> BayerPattern {
        self.pattern
    }

    pub fn plane(&self) -> &Grid<T> {
        &self.plane
    }

    pub fn into_plane(self) -> Grid<T> {
        self.plane
    }

    pub fn height(&self) -> usize {
        self.plane.height()
    }

    pub fn width(&self) -> usize {
        self.plane.width()
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> T {
        self.plane.get(row, col)
    }
}

/// Keep, per pixel, the RGB channel selected by the CFA pattern.
pub fn mosaic<T: Scalar>(rgb: &RgbImage<T>, pattern: BayerPattern) -> Result<BayerFrame<T>> {
    check_even_dims(rgb.height(), rgb.width())?;
    let plane = Grid::from_fn(rgb.height(), rgb.width(), |r, c| {
        rgb.get(r, c, pattern.color_at(r, c))
    });
    BayerFrame::new(plane, pattern)
}

/// Fill the two missing channels at each pixel by bilinear interpolation of
/// the nearest same-color neighbors; recorded samples pass through unchanged.
/// Borders are mirror-reflected, which keeps neighbor colors on phase.
pub fn demosaic_bilinear<T: Scalar>(bayer: &BayerFrame<T>) -> RgbImage<T> {
    let h = bayer.height();
    let w = bayer.width();
    let pat = bayer.pattern();
    let plane = bayer.plane();
    let half = T::from_f64(0.5);
    let quarter = T::from_f64(0.25);

    let mut data = Vec::with_capacity(3 * h * w);
    for r in 0..h {
        for c in 0..w {
            let ri = r as isize;
            let ci = c as isize;
            let here = pat.color_at(r, c);
            for ch in [Channel::R, Channel::G, Channel::B] {
                if ch == here {
                    data.push(plane.get(r, c));
                    continue;
                }
                let horiz = pat.color_at(r, c + 1) == ch;
                let vert = pat.color_at(r + 1, c) == ch;
                let v = if horiz && vert {
                    // Green at a red/blue site: 4-neighbor cross.
                    (plane.get_reflect(ri, ci - 1)
                        + plane.get_reflect(ri, ci + 1)
                        + plane.get_reflect(ri - 1, ci)
                        + plane.get_reflect(ri + 1, ci))
                        * quarter
                } else if horiz {
                    (plane.get_reflect(ri, ci - 1) + plane.get_reflect(ri, ci + 1)) * half
                } else if vert {
                    (plane.get_reflect(ri - 1, ci) + plane.get_reflect(ri + 1, ci)) * half
                } else {
                    // Opposite corner color: 4 diagonals.
                    (plane.get_reflect(ri - 1, ci - 1)
                        + plane.get_reflect(ri - 1, ci + 1)
                        + plane.get_reflect(ri + 1, ci - 1)
                        + plane.get_reflect(ri + 1, ci + 1))
                        * quarter
                };
                data.push(v);
            }
        }
    }
    RgbImage::from_vec(h, w, data).expect("demosaic preserves dimensions")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pattern_list() -> [BayerPattern; 4] {
        [
            BayerPattern::Rggb,
            BayerPattern::Bggr,
            BayerPattern::Grbg,
            BayerPattern::Gbrg,
        ]
    }

    #[test]
    fn mosaic_constant_gray_is_constant() {
        let rgb = RgbImage::<f64>::filled(4, 6, [0.5, 0.5, 0.5]).unwrap();
        let frame = mosaic(&rgb, BayerPattern::Rggb).unwrap();
        assert!(frame.plane().data().iter().all(|&v| v == 0.5));
    }

    #[test]
    fn mosaic_pure_red_rggb_hits_even_even_sites() {
        let rgb = RgbImage::<f64>::filled(4, 4, [1.0, 0.0, 0.0]).unwrap();
        let frame = mosaic(&rgb, BayerPattern::Rggb).unwrap();
        for r in 0..4 {
            for c in 0..4 {
                let want = if r % 2 == 0 && c % 2 == 0 { 1.0 } else { 0.0 };
                assert_eq!(frame.get(r, c), want, "at ({r},{c})");
            }
        }
    }

    #[test]
    fn mosaic_matches_parity_lookup_oracle() {
        // Independent per-pixel oracle: the pattern quad indexed by parity.
        let mut v = 0.0;
        let rgb = RgbImage::<f64>::from_fn(8, 8, |_, _| {
            v += 0.001;
            [v, v + 0.3, v + 0.6]
        })
        .unwrap();
        for pat in pattern_list() {
            let frame = mosaic(&rgb, pat).unwrap();
            for r in 0..8 {
                for c in 0..8 {
                    let ch = pat.color_at(r, c);
                    assert_eq!(frame.get(r, c), rgb.get(r, c, ch));
                }
            }
        }
    }

    #[test]
    fn demosaic_constant_is_constant() {
        let plane = Grid::filled(6, 4, 0.37_f64);
        let frame = BayerFrame::new(plane, BayerPattern::Gbrg).unwrap();
        let rgb = demosaic_bilinear(&frame);
        assert!(rgb.data().iter().all(|&v| (v - 0.37).abs() < 1e-15));
    }

    #[test]
    fn demosaic_recovers_channel_constant_images() {
        let rgb = RgbImage::<f64>::filled(6, 6, [0.8, 0.4, 0.1]).unwrap();
        for pat in pattern_list() {
            let round = demosaic_bilinear(&mosaic(&rgb, pat).unwrap());
            for (a, b) in round.data().iter().zip(rgb.data()) {
                assert!((a - b).abs() < 1e-15, "{pat:?}");
            }
        }
    }

    /// Oracle: masked-channel convolution with the classic bilinear kernels
    /// KG = [[0,1,0],[1,4,1],[0,1,0]]/4 and KRB = [[1,2,1],[2,4,2],[1,2,1]]/4.
    fn demosaic_kernel_oracle(frame: &BayerFrame<f64>) -> Vec<f64> {
        let h = frame.height();
        let w = frame.width();
        let pat = frame.pattern();
        let kg = [[0.0, 1.0, 0.0], [1.0, 4.0, 1.0], [0.0, 1.0, 0.0]];
        let krb = [[1.0, 2.0, 1.0], [2.0, 4.0, 2.0], [1.0, 2.0, 1.0]];
        let masked = |ch: Channel| {
            Grid::from_fn(h, w, |r, c| {
                if pat.color_at(r, c) == ch {
                    frame.get(r, c)
                } else {
                    0.0
                }
            })
        };
        let mut out = vec![0.0; 3 * h * w];
        for ch in [Channel::R, Channel::G, Channel::B] {
            let kernel = if ch == Channel::G { kg } else { krb };
            let m = masked(ch);
            for r in 0..h as isize {
                for c in 0..w as isize {
                    let mut acc = 0.0;
                    for (dr, krow) in kernel.iter().enumerate() {
                        for (dc, &kv) in krow.iter().enumerate() {
                            if kv != 0.0 {
                                acc += kv * m.get_reflect(r + dr as isize - 1, c + dc as isize - 1);
                            }
                        }
                    }
                    out[3 * (r as usize * w + c as usize) + ch as usize] = acc / 4.0;
                }
            }
        }
        out
    }

    #[test]
    fn demosaic_matches_kernel_oracle() {
        let mut v = 0.13;
        let plane = Grid::from_fn(8, 8, |_, _| {
            v = (v * 7.13 + 0.31).fract();
            v
        });
        for pat in pattern_list() {
            let frame = BayerFrame::new(plane.clone(), pat).unwrap();
            let got = demosaic_bilinear(&frame);
            let want = demosaic_kernel_oracle(&frame);
            for (a, b) in got.data().iter().zip(&want) {
                assert!((a - b).abs() < 1e-12, "{pat:?}");
            }
        }
    }
}
