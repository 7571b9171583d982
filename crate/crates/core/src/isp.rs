//! Minimal ISP operator: white balance, color correction, gamma compression.

use crate::error::{Error, Result};
use crate::rgb::RgbImage;
use crate::scalar::Scalar;

/// Gamma exponent used for compression throughout the crate (metrics use the
/// same curve).
pub const GAMMA: f64 = 2.2;

/// White-balance gains and a row-stochastic 3x3 color correction matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IspConfig<T> {
    pub wb_gains: [T; 3],
    pub ccm: [[T; 3]; 3],
}

impl<T: Scalar> Default for IspConfig<T> {
    fn default() -> Self {
        let one = T::one();
        let zero = T::zero();
        IspConfig {
            wb_gains: [one; 3],
            ccm: [[one, zero, zero], [zero, one, zero], [zero, zero, one]],
        }
    }
}

impl<T: Scalar> IspConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.wb_gains.iter().any(|&g| g <= T::zero()) {
            return Err(Error::parameter("white balance gains must be positive"));
        }
        let tol = T::from_f64(1e-6);
        for row in &self.ccm {
            let sum = row[0] + row[1] + row[2];
            if (sum - T::one()).abs() > tol {
                return Err(Error::parameter(
                    "color correction matrix rows must sum to 1",
                ));
            }
        }
        Ok(())
    }
}

/// Apply gamma compression `v^(1/2.2)` to a nonnegative value.
#[inline]
pub fn gamma_compress<T: Scalar>(v: T) -> T {
    v.powf(T::from_f64(1.0 / GAMMA))
}

/// The ISP operator: per pixel, apply white-balance gains, multiply by the
/// CCM, clip to `[0, 1]`, then gamma-compress.
pub fn isp_gamma<T: Scalar>(x: &RgbImage<T>, cfg: &IspConfig<T>) -> Result<RgbImage<T>> {
    cfg.validate()?;
    let one = T::one();
    let zero = T::zero();
    let mut out = x.clone();
    let data = out.data_mut();
    for px in data.chunks_exact_mut(3) {
        let balanced = [
            px[0] * cfg.wb_gains[0],
            px[1] * cfg.wb_gains[1],
            px[2] * cfg.wb_gains[2],
        ];
        for ch in 0..3 {
            let row = &cfg.ccm[ch];
            let v = row[0] * balanced[0] + row[1] * balanced[1] + row[2] * balanced[2];
            px[ch] = gamma_compress(v.max(zero).min(one));
        }
    }
    Ok(out)
}
