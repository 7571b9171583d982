//! The training-loss terms as pure, gradient-checkable functions, plus the
//! temperature annealing helper.
//!
//! Norms are reduced by means over elements so magnitudes stay
//! resolution-independent. Every term with a published analytic gradient is
//! verified against central finite differences in the tests and by the
//! `grad-check` CLI command.

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::isp::{isp_gamma, IspConfig};
use crate::rgb::RgbImage;
use crate::scalar::Scalar;

/// Weights of the combined loss and the Charbonnier constant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossWeights<T> {
    /// Weight of the interpolation term.
    pub beta: T,
    /// Weight of the one-hot penalty.
    pub rho: T,
    /// Weight of the matching-guidance term.
    pub eta: T,
    /// Charbonnier constant.
    pub epsilon: T,
}

impl<T: Scalar> Default for LossWeights<T> {
    fn default() -> Self {
        LossWeights {
            beta: T::one(),
            rho: T::from_f64(1e5),
            eta: T::from_f64(1e3),
            epsilon: T::from_f64(1e-3),
        }
    }
}

impl<T: Scalar> LossWeights<T> {
    pub fn validate(&self) -> Result<()> {
        if self.beta < T::zero() || self.rho < T::zero() || self.eta < T::zero() {
            return Err(Error::parameter("loss weights must be nonnegative"));
        }
        if self.epsilon <= T::zero() {
            return Err(Error::parameter("charbonnier epsilon must be positive"));
        }
        Ok(())
    }
}

/// Penalty driving a weight vector toward one-hot:
/// `|sum(w) - 1| + |msq(w) - 1/M|` with `msq(w) = (sum w_i^2) / M`.
///
/// The mean-of-squares statistic attains exactly `1/M` on one-hot vectors,
/// which is the stated target value; the central variance would not.
pub fn l_one_hot<T: Scalar>(w: &[T]) -> T {
    debug_assert!(!w.is_empty());
    let m = T::from_usize(w.len());
    let sum: T = w.iter().copied().sum();
    let msq: T = w.iter().map(|&v| v * v).sum::<T>() / m;
    (sum - T::one()).abs() + (msq - T::one() / m).abs()
}

/// Gradient of [`l_one_hot`]; zero subgradient at the absolute-value kinks.
pub fn l_one_hot_grad<T: Scalar>(w: &[T]) -> Vec<T> {
    let m = T::from_usize(w.len());
    let sum: T = w.iter().copied().sum();
    let msq: T = w.iter().map(|&v| v * v).sum::<T>() / m;
    let s1 = sign(sum - T::one());
    let s2 = sign(msq - T::one() / m);
    let two = T::from_f64(2.0);
    w.iter().map(|&v| s1 + s2 * two * v / m).collect()
}

fn sign<T: Scalar>(v: T) -> T {
    if v > T::zero() {
        T::one()
    } else if v < T::zero() {
        -T::one()
    } else {
        T::zero()
    }
}

/// Squared L2 distance between noisy and clean matching distances.
pub fn l_bm<T: Scalar>(d_noisy: &[T], d_clean: &[T]) -> Result<T> {
    if d_noisy.len() != d_clean.len() {
        return Err(Error::dimension("distance vectors must have equal length"));
    }
    Ok(d_noisy
        .iter()
        .zip(d_clean)
        .map(|(&a, &b)| (a - b) * (a - b))
        .sum())
}

/// Gradient of [`l_bm`] with respect to the noisy distances.
pub fn l_bm_grad<T: Scalar>(d_noisy: &[T], d_clean: &[T]) -> Result<Vec<T>> {
    if d_noisy.len() != d_clean.len() {
        return Err(Error::dimension("distance vectors must have equal length"));
    }
    let two = T::from_f64(2.0);
    Ok(d_noisy
        .iter()
        .zip(d_clean)
        .map(|(&a, &b)| two * (a - b))
        .collect())
}

/// Mean element-wise Charbonnier penalty `sqrt((a-b)^2 + eps^2)`.
pub fn charbonnier<T: Scalar>(a: &[T], b: &[T], eps: T) -> Result<T> {
    if a.len() != b.len() {
        return Err(Error::dimension("charbonnier operands must match"));
    }
    if a.is_empty() {
        return Err(Error::dimension("charbonnier needs at least one element"));
    }
    let acc: T = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = x - y;
            (d * d + eps * eps).sqrt()
        })
        .sum();
    Ok(acc / T::from_usize(a.len()))
}

/// Gradient of [`charbonnier`] with respect to `a`.
pub fn charbonnier_grad<T: Scalar>(a: &[T], b: &[T], eps: T) -> Result<Vec<T>> {
    if a.len() != b.len() {
        return Err(Error::dimension("charbonnier operands must match"));
    }
    let n = T::from_usize(a.len());
    Ok(a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = x - y;
            d / (n * (d * d + eps * eps).sqrt())
        })
        .collect())
}

/// Interpolation loss: mean Charbonnier penalty over the masked pixels
/// (all three channels of each). An empty mask yields zero.
pub fn l_ip<T: Scalar>(
    x_interp: &RgbImage<T>,
    x: &RgbImage<T>,
    mask: &Grid<bool>,
    eps: T,
) -> Result<T> {
    if x_interp.height() != x.height() || x_interp.width() != x.width() {
        return Err(Error::dimension("images must share dimensions"));
    }
    if mask.height() != x.height() || mask.width() != x.width() {
        return Err(Error::dimension("mask must match the images"));
    }
    let mut acc = T::zero();
    let mut count = 0usize;
    for r in 0..x.height() {
        for c in 0..x.width() {
            if !mask.get(r, c) {
                continue;
            }
            let pa = x_interp.pixel(r, c);
            let pb = x.pixel(r, c);
            for ch in 0..3 {
                let d = pa[ch] - pb[ch];
                acc += (d * d + eps * eps).sqrt();
                count += 1;
            }
        }
    }
    if count == 0 {
        return Ok(T::zero());
    }
    Ok(acc / T::from_usize(count))
}

/// Binary mask of high-frequency regions: one where the central-difference
/// luma gradient magnitude exceeds the threshold (default: the 75th
/// percentile of the image's own gradient magnitudes).
pub fn high_freq_mask<T: Scalar>(x: &RgbImage<T>, threshold: Option<T>) -> Grid<bool> {
    let luma = x.luma();
    let half = T::from_f64(0.5);
    let grad = Grid::from_fn(x.height(), x.width(), |r, c| {
        let ri = r as isize;
        let ci = c as isize;
        let gx = (luma.get_reflect(ri, ci + 1) - luma.get_reflect(ri, ci - 1)) * half;
        let gy = (luma.get_reflect(ri + 1, ci) - luma.get_reflect(ri - 1, ci)) * half;
        (gx * gx + gy * gy).sqrt()
    });
    let thr = threshold.unwrap_or_else(|| percentile(grad.data(), 0.75));
    grad.map(|g| g > thr)
}

/// Value at rank `floor(q * (n-1))` of the sorted samples.
pub fn percentile<T: Scalar>(samples: &[T], q: f64) -> T {
    debug_assert!(!samples.is_empty());
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));
    let idx = (q * (sorted.len() - 1) as f64).floor() as usize;
    sorted[idx.min(sorted.len() - 1)]
}

/// Reconstruction loss: Charbonnier penalty in linear light plus the same
/// penalty after the ISP operator.
pub fn l_r<T: Scalar>(
    x_hat: &RgbImage<T>,
    x: &RgbImage<T>,
    isp_cfg: &IspConfig<T>,
    eps: T,
) -> Result<T> {
    if x_hat.height() != x.height() || x_hat.width() != x.width() {
        return Err(Error::dimension("images must share dimensions"));
    }
    let linear = charbonnier(x_hat.data(), x.data(), eps)?;
    let gamma_hat = isp_gamma(x_hat, isp_cfg)?;
    let gamma_x = isp_gamma(x, isp_cfg)?;
    let compressed = charbonnier(gamma_hat.data(), gamma_x.data(), eps)?;
    Ok(linear + compressed)
}

/// The individual loss terms entering the weighted total.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossParts<T> {
    pub l_r: T,
    pub l_ip: T,
    pub l_one_hot: T,
    pub l_bm: T,
}

/// Weighted total: `l_r + beta * l_ip + rho * l_one_hot + eta * l_bm`.
pub fn total_loss<T: Scalar>(parts: &LossParts<T>, weights: &LossWeights<T>) -> T {
    parts.l_r
        + weights.beta * parts.l_ip
        + weights.rho * parts.l_one_hot
        + weights.eta * parts.l_bm
}

/// Temperature of the soft-to-hard schedule at `iter` of `total` steps:
/// log-linear from 1e-2 down to 1e-3, clamped past the end.
pub fn temperature_at(iter: u64, total: u64) -> f64 {
    if total == 0 {
        return 1e-3;
    }
    let frac = (iter.min(total) as f64) / total as f64;
    10f64.powf(-2.0 - frac)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gradcheck::{central_diff, max_rel_error};

    #[test]
    fn one_hot_vectors_score_zero() {
        for m in 1..=16 {
            for hot in 0..m {
                let mut w = vec![0.0f64; m];
                w[hot] = 1.0;
                assert_eq!(l_one_hot(&w), 0.0, "M={m} hot={hot}");
            }
        }
    }

    #[test]
    fn uniform_and_zero_vectors_scored() {
        let uniform = vec![0.25f64; 4];
        assert!((l_one_hot(&uniform) - 0.1875).abs() < 1e-15);
        let zeros = vec![0.0f64; 4];
        assert!((l_one_hot(&zeros) - 1.25).abs() < 1e-15);
    }

    #[test]
    fn l_bm_examples() {
        assert_eq!(l_bm(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), 0.0);
        assert_eq!(l_bm(&[0.0, 1.0], &[1.0, 0.0]).unwrap(), 2.0);
        assert!(l_bm(&[0.1], &[0.1, 0.2]).is_err());
        let a = [0.12, 0.9, 0.43];
        let b = [0.5, 0.1, 0.77];
        let direct: f64 = a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum();
        assert!((l_bm(&a, &b).unwrap() - direct).abs() < 1e-15);
    }

    #[test]
    fn charbonnier_examples() {
        let eps = 1e-3;
        assert!((charbonnier(&[0.4], &[0.4], eps).unwrap() - eps).abs() < 1e-18);
        let v = charbonnier(&[0.003], &[0.0], eps).unwrap();
        assert!((v - (9e-6 + 1e-6_f64).sqrt()).abs() < 1e-15);
        assert!((v - 3.1623e-3).abs() < 1e-7);
        // Large residuals behave like |a - b|.
        let big = charbonnier(&[10.0], &[0.0], eps).unwrap();
        assert!((big - 10.0).abs() < 1e-7);
    }

    #[test]
    fn charbonnier_symmetry_and_floor() {
        let a = [0.1, 0.5, 0.9];
        let b = [0.3, 0.5, 0.2];
        let eps = 1e-3;
        let ab = charbonnier(&a, &b, eps).unwrap();
        let ba = charbonnier(&b, &a, eps).unwrap();
        assert_eq!(ab, ba);
        assert!(ab >= eps);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let a = vec![0.31, 0.72, 0.15, 0.48];
        let b = vec![0.29, 0.55, 0.44, 0.62];
        let eps = 1e-3;

        let grad = charbonnier_grad(&a, &b, eps).unwrap();
        let fd = central_diff(|p| charbonnier(p, &b, eps).unwrap(), &a, 1e-6);
        assert!(max_rel_error(&grad, &fd, 1e-12) < 1e-6);

        let grad = l_bm_grad(&a, &b).unwrap();
        let fd = central_diff(|p| l_bm(p, &b).unwrap(), &a, 1e-6);
        assert!(max_rel_error(&grad, &fd, 1e-12) < 1e-6);

        let w = vec![0.4, 0.3, 0.2, 0.3];
        let grad = l_one_hot_grad(&w);
        let fd = central_diff(|p| l_one_hot(p), &w, 1e-6);
        assert!(max_rel_error(&grad, &fd, 1e-12) < 1e-6);
    }

    #[test]
    fn l_ip_examples() {
        let x = crate::synth::smooth_rgb_texture::<f64>(16, 16, 3).unwrap();
        let eps = 1e-3;
        let mask = Grid::filled(16, 16, true);
        assert!((l_ip(&x, &x, &mask, eps).unwrap() - eps).abs() < 1e-15);
        let empty = Grid::filled(16, 16, false);
        assert_eq!(l_ip(&x, &x, &empty, eps).unwrap(), 0.0);
    }

    #[test]
    fn l_ip_matches_masked_mean_oracle() {
        let a = crate::synth::smooth_rgb_texture::<f64>(16, 16, 5).unwrap();
        let b = crate::synth::smooth_rgb_texture::<f64>(16, 16, 6).unwrap();
        let mask = Grid::from_fn(16, 16, |r, c| (r + c) % 3 == 0);
        let eps = 1e-3;
        let mut acc = 0.0;
        let mut count = 0;
        for r in 0..16 {
            for c in 0..16 {
                if mask.get(r, c) {
                    for ch in 0..3 {
                        let d = a.pixel(r, c)[ch] - b.pixel(r, c)[ch];
                        acc += (d * d + eps * eps).sqrt();
                        count += 1;
                    }
                }
            }
        }
        let want = acc / count as f64;
        assert!((l_ip(&a, &b, &mask, eps).unwrap() - want).abs() < 1e-15);
    }

    #[test]
    fn high_freq_mask_flat_and_edge() {
        let flat = RgbImage::<f64>::filled(8, 8, [0.5; 3]).unwrap();
        let mask = high_freq_mask(&flat, None);
        assert!(mask.data().iter().all(|&m| !m));

        let edge = RgbImage::<f64>::from_fn(8, 8, |_, c| {
            let v = if c < 4 { 0.2 } else { 0.8 };
            [v; 3]
        })
        .unwrap();
        let mask = high_freq_mask(&edge, None);
        for r in 0..8 {
            assert!(mask.get(r, 3) && mask.get(r, 4), "edge columns at row {r}");
            assert!(!mask.get(r, 0) && !mask.get(r, 7));
        }
    }

    #[test]
    fn high_freq_mask_matches_threshold_oracle() {
        let x = crate::synth::smooth_rgb_texture::<f64>(16, 16, 8).unwrap();
        let thr = 0.004;
        let mask = high_freq_mask(&x, Some(thr));
        let luma = x.luma();
        for r in 0..16usize {
            for c in 0..16usize {
                let gx = (luma.get_reflect(r as isize, c as isize + 1)
                    - luma.get_reflect(r as isize, c as isize - 1))
                    / 2.0;
                let gy = (luma.get_reflect(r as isize + 1, c as isize)
                    - luma.get_reflect(r as isize - 1, c as isize))
                    / 2.0;
                assert_eq!(mask.get(r, c), (gx * gx + gy * gy).sqrt() > thr);
            }
        }
    }

    #[test]
    fn l_r_identity_and_gamma_asymmetry() {
        let cfg = IspConfig::default();
        let eps = 1e-3;
        let x = crate::synth::smooth_rgb_texture::<f64>(8, 8, 2).unwrap();
        let v = l_r(&x, &x, &cfg, eps).unwrap();
        assert!((v - 2.0 * eps).abs() < 1e-15);

        // The same linear offset costs more after gamma near black than near
        // white, because the compression slope is steeper near zero.
        let near_black = RgbImage::<f64>::filled(8, 8, [0.05; 3]).unwrap();
        let near_black_off = RgbImage::<f64>::filled(8, 8, [0.15; 3]).unwrap();
        let near_white = RgbImage::<f64>::filled(8, 8, [0.85; 3]).unwrap();
        let near_white_off = RgbImage::<f64>::filled(8, 8, [0.95; 3]).unwrap();
        let dark = l_r(&near_black_off, &near_black, &cfg, eps).unwrap();
        let bright = l_r(&near_white_off, &near_white, &cfg, eps).unwrap();
        assert!(dark > bright);
    }

    #[test]
    fn l_r_constant_offset_closed_form() {
        let cfg = IspConfig::default();
        let eps = 1e-3;
        let a = RgbImage::<f64>::filled(8, 8, [0.5; 3]).unwrap();
        let b = RgbImage::<f64>::filled(8, 8, [0.6; 3]).unwrap();
        let lin = (0.01_f64 + eps * eps).sqrt();
        let dg = 0.6_f64.powf(1.0 / 2.2) - 0.5_f64.powf(1.0 / 2.2);
        let gam = (dg * dg + eps * eps).sqrt();
        let v = l_r(&b, &a, &cfg, eps).unwrap();
        assert!((v - (lin + gam)).abs() < 1e-12);
    }

    #[test]
    fn total_loss_weighted_sum() {
        let w = LossWeights::<f64>::default();
        let parts = LossParts {
            l_r: 1.0,
            l_ip: 1.0,
            l_one_hot: 1.0,
            l_bm: 1.0,
        };
        assert_eq!(total_loss(&parts, &w), 101002.0);
        let zeros = LossParts {
            l_r: 0.0,
            l_ip: 0.0,
            l_one_hot: 0.0,
            l_bm: 0.0,
        };
        assert_eq!(total_loss(&zeros, &w), 0.0);
        let only_r = LossWeights {
            beta: 0.0,
            rho: 0.0,
            eta: 0.0,
            ..LossWeights::default()
        };
        assert_eq!(total_loss(&parts, &only_r), 1.0);
    }

    #[test]
    fn temperature_schedule_endpoints_and_midpoint() {
        assert_eq!(temperature_at(0, 100), 1e-2);
        assert!((temperature_at(100, 100) - 1e-3).abs() < 1e-18);
        assert!((temperature_at(50, 100) - 10f64.powf(-2.5)).abs() < 1e-12);
        assert!((temperature_at(250, 100) - 1e-3).abs() < 1e-18);
    }
}
