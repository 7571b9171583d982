//! Heteroscedastic shot/read noise synthesis and variance maps.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::bayer::BayerFrame;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::scalar::Scalar;

/// Shot and read noise scales of the raw sensor model
/// `n(x) ~ N(0, sigma_s * x + sigma_r^2)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseParams<T> {
    pub sigma_s: T,
    pub sigma_r: T,
}

impl<T: Scalar> NoiseParams<T> {
    pub fn new(sigma_s: T, sigma_r: T) -> Result<Self> {
        if sigma_s < T::zero() || sigma_r < T::zero() {
            return Err(Error::parameter("noise scales must be nonnegative"));
        }
        Ok(NoiseParams { sigma_s, sigma_r })
    }

    /// "Low" preset: sigma_s = 2.5e-3, sigma_r = 1e-2.
    pub fn low() -> Self {
        NoiseParams {
            sigma_s: T::from_f64(2.5e-3),
            sigma_r: T::from_f64(1e-2),
        }
    }

    /// "High" preset: sigma_s = 6.4e-3, sigma_r = 2e-2.
    pub fn high() -> Self {
        NoiseParams {
            sigma_s: T::from_f64(6.4e-3),
            sigma_r: T::from_f64(2e-2),
        }
    }

    /// Per-pixel noise variance for a clean (or clamped noisy) intensity.
    #[inline]
    pub fn variance_at(&self, signal: T) -> T {
        self.sigma_s * signal.max(T::zero()) + self.sigma_r * self.sigma_r
    }
}

/// Add signal-dependent Gaussian noise with per-pixel variance
/// `sigma_s * clean + sigma_r^2`.
///
/// Deterministic for a fixed seed: samples are drawn sequentially in raster
/// order from a counter-based stream cipher RNG, so the output is
/// bit-identical regardless of how callers parallelize around it. The output
/// is not clipped; clipping is an export-time choice.
pub fn add_noise<T: Scalar>(
    clean: &BayerFrame<T>,
    np: &NoiseParams<T>,
    seed: u64,
) -> Result<BayerFrame<T>> {
    if np.sigma_s < T::zero() || np.sigma_r < T::zero() {
        return Err(Error::parameter("noise scales must be nonnegative"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut noisy = clean.plane().clone();
    for v in noisy.data_mut().iter_mut() {
        let var = np.variance_at(*v).to_f64();
        let n: f64 = StandardNormal.sample(&mut rng);
        *v = *v + T::from_f64(n * var.sqrt());
    }
    BayerFrame::new(noisy, clean.pattern())
}

/// Per-pixel noise variance estimate `sigma_s * max(y, 0) + sigma_r^2`
/// derived from a (possibly noisy) frame. Strictly >= sigma_r^2.
pub fn variance_map<T: Scalar>(noisy: &BayerFrame<T>, np: &NoiseParams<T>) -> Result<Grid<T>> {
    if np.sigma_s == T::zero() && np.sigma_r == T::zero() {
        return Err(Error::parameter(
            "variance map needs a nonzero noise scale",
        ));
    }
    Ok(noisy.plane().map(|v| np.variance_at(v)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bayer::BayerPattern;

    fn constant_frame(h: usize, w: usize, v: f64) -> BayerFrame<f64> {
        BayerFrame::new(Grid::filled(h, w, v), BayerPattern::Rggb).unwrap()
    }

    #[test]
    fn zero_noise_is_identity() {
        let clean = constant_frame(8, 8, 0.42);
        let np = NoiseParams::new(0.0, 0.0).unwrap();
        let noisy = add_noise(&clean, &np, 7).unwrap();
        assert_eq!(noisy.plane().data(), clean.plane().data());
    }

    #[test]
    fn negative_sigma_rejected() {
        assert!(NoiseParams::<f64>::new(-1e-3, 0.0).is_err());
    }

    #[test]
    fn deterministic_per_seed() {
        let clean = constant_frame(16, 16, 0.5);
        let np = NoiseParams::low();
        let a = add_noise(&clean, &np, 123).unwrap();
        let b = add_noise(&clean, &np, 123).unwrap();
        let c = add_noise(&clean, &np, 124).unwrap();
        assert_eq!(a.plane().data(), b.plane().data());
        assert_ne!(a.plane().data(), c.plane().data());
    }

    #[test]
    fn empirical_variance_tracks_model_low_preset() {
        // Monte-Carlo check of the variance law at the "Low" preset on a
        // constant 0.5 frame: expect 2.5e-3 * 0.5 + 1e-4 = 1.35e-3 within 2%.
        let clean = constant_frame(1000, 1000, 0.5);
        let np = NoiseParams::low();
        let noisy = add_noise(&clean, &np, 42).unwrap();
        let var = empirical_variance(noisy.plane().data(), 0.5);
        let expect = 1.35e-3;
        assert!(
            (var - expect).abs() / expect < 0.02,
            "var {var} vs {expect}"
        );
    }

    #[test]
    fn empirical_variance_on_black_frame() {
        // sigma_s = 6.4e-3, sigma_r = 2e-2 on a zero frame: variance 4e-4.
        let clean = constant_frame(1000, 1000, 0.0);
        let np = NoiseParams::new(6.4e-3, 2e-2).unwrap();
        let noisy = add_noise(&clean, &np, 9).unwrap();
        let var = empirical_variance(noisy.plane().data(), 0.0);
        let expect = 4e-4;
        assert!(
            (var - expect).abs() / expect < 0.02,
            "var {var} vs {expect}"
        );
    }

    fn empirical_variance(samples: &[f64], mean: f64) -> f64 {
        samples.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / samples.len() as f64
    }

    #[test]
    fn variance_map_is_clamped_and_floored() {
        let np = NoiseParams::new(2.5e-3, 1e-2).unwrap();
        let mut plane = Grid::filled(4, 4, 0.5_f64);
        plane.set(1, 1, -0.3); // noise undershoot contributes sigma_r^2 only
        plane.set(2, 2, 0.0);
        let frame = BayerFrame::new(plane, BayerPattern::Rggb).unwrap();
        let m = variance_map(&frame, &np).unwrap();
        assert!((m.get(0, 0) - 1.35e-3).abs() < 1e-18);
        assert_eq!(m.get(1, 1), 1e-4);
        assert_eq!(m.get(2, 2), 1e-4);
        assert!(m.data().iter().all(|&v| v >= 1e-4));
    }

    #[test]
    fn variance_map_rejects_all_zero_params() {
        let frame = constant_frame(4, 4, 0.5);
        let np = NoiseParams { sigma_s: 0.0, sigma_r: 0.0 };
        assert!(variance_map(&frame, &np).is_err());
    }
}
