//! Linear-light RGB image storage.

use crate::error::{Error, Result};
use crate::grid::{reflect_index, Grid};
use crate::scalar::Scalar;

/// Color channel index into interleaved RGB data.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Channel {
    R = 0,
    G = 1,
    B = 2,
}

/// Linear-light RGB image, row-major interleaved, intensities nominally in
/// `[0, 1]`.
///
/// Dimensions must be even and at least 2 so that a whole number of Bayer
/// quads tiles the image. Intermediate pipeline results (e.g. demosaiced
/// noisy frames) may carry samples outside `[0, 1]`; clipping happens at
/// reconstruction or export, not here.
#[derive(Clone, Debug, PartialEq)]
pub struct RgbImage<T> {
    height: usize,
    width: usize,
    data: Vec<T>,
}

pub(crate) fn check_even_dims(height: usize, width: usize) -> Result<()> {
    if height < 2 || width < 2 || height % 2 != 0 || width % 2 != 0 {
        return Err(Error::dimension(format!(
            "dimensions must be even and >= 2, got {height}x{width}"
        )));
    }
    Ok(())
}

impl<T: Scalar> RgbImage<T> {
    /// Build from interleaved RGB data (`len == 3 * width * height`).
    /// Samples must be finite; range is the caller's responsibility.
    pub fn from_vec(height: usize, width: usize, data: Vec<T>) -> Result<Self> {
        check_even_dims(height, width)?;
        if data.len() != 3 * height * width {
            return Err(Error::dimension(format!(
                "rgb data length {} does not match 3x{}x{}",
                data.len(),
                height,
                width
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::parameter("rgb samples must be finite"));
        }
        Ok(RgbImage {
            height,
            width,
            data,
        })
    }

    pub fn from_fn(
        height: usize,
        width: usize,
        mut f: impl FnMut(usize, usize) -> [T; 3],
    ) -> Result<Self> {
        check_even_dims(height, width)?;
        let mut data = Vec::with_capacity(3 * height * width);
        for r in 0..height {
            for c in 0..width {
                data.extend_from_slice(&f(r, c));
            }
        }
        Ok(RgbImage {
            height,
            width,
            data,
        })
    }

    pub fn filled(height: usize, width: usize, rgb: [T; 3]) -> Result<Self> {
        Self::from_fn(height, width, |_, _| rgb)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize, ch: Channel) -> T {
        self.data[3 * (row * self.width + col) + ch as usize]
    }

    #[inline]
    pub fn pixel(&self, row: usize, col: usize) -> [T; 3] {
        let i = 3 * (row * self.width + col);
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn set_pixel(&mut self, row: usize, col: usize, rgb: [T; 3]) {
        let i = 3 * (row * self.width + col);
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    pub fn pixel_reflect(&self, row: isize, col: isize) -> [T; 3] {
        let r = reflect_index(row, self.height);
        let c = reflect_index(col, self.width);
        self.pixel(r, c)
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    /// Extract one color plane as a grid.
    pub fn plane(&self, ch: Channel) -> Grid<T> {
        Grid::from_fn(self.height, self.width, |r, c| self.get(r, c, ch))
    }

    /// BT.601 luma plane.
    pub fn luma(&self) -> Grid<T> {
        let wr = T::from_f64(0.299);
        let wg = T::from_f64(0.587);
        let wb = T::from_f64(0.114);
        Grid::from_fn(self.height, self.width, |r, c| {
            let [pr, pg, pb] = self.pixel(r, c);
            wr * pr + wg * pg + wb * pb
        })
    }

    /// Clamp every sample into `[0, 1]`.
    pub fn clipped(&self) -> RgbImage<T> {
        let one = T::one();
        let zero = T::zero();
        RgbImage {
            height: self.height,
            width: self.width,
            data: self
                .data
                .iter()
                .map(|&v| v.max(zero).min(one))
                .collect(),
        }
    }

    /// Crop to `height`x`width` starting at the top-left corner.
    pub fn crop(&self, height: usize, width: usize) -> Result<RgbImage<T>> {
        self.crop_at(0, 0, height, width)
    }

    /// Crop a `height`x`width` window whose top-left corner is `(top, left)`.
    pub fn crop_at(
        &self,
        top: usize,
        left: usize,
        height: usize,
        width: usize,
    ) -> Result<RgbImage<T>> {
        if top + height > self.height || left + width > self.width {
            return Err(Error::dimension("crop outside image".to_string()));
        }
        Self::from_fn(height, width, |r, c| self.pixel(top + r, left + c))
    }
}
