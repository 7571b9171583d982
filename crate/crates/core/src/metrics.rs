//! Gamma-corrected PSNR and SSIM.
//!
//! Both metrics compress the inputs with the same `v^(1/2.2)` curve the ISP
//! uses before comparing, matching how the restored images are evaluated.

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::isp::gamma_compress;
use crate::rgb::{Channel, RgbImage};
use crate::scalar::Scalar;

/// SSIM window side (11x11 Gaussian, sigma 1.5).
const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const SSIM_C1: f64 = 0.01 * 0.01;
const SSIM_C2: f64 = 0.03 * 0.03;

fn check_dims<T: Scalar>(a: &RgbImage<T>, b: &RgbImage<T>) -> Result<()> {
    if a.height() != b.height() || a.width() != b.width() {
        return Err(Error::dimension("metric operands must share dimensions"));
    }
    Ok(())
}

fn gamma_image<T: Scalar>(x: &RgbImage<T>) -> RgbImage<T> {
    let mut out = x.clipped();
    for v in out.data_mut() {
        *v = gamma_compress(*v);
    }
    out
}

/// Peak signal-to-noise ratio in decibels after gamma compression.
/// Identical images return positive infinity.
pub fn psnr_gamma<T: Scalar>(a: &RgbImage<T>, b: &RgbImage<T>) -> Result<T> {
    check_dims(a, b)?;
    let ga = gamma_image(a);
    let gb = gamma_image(b);
    let mut acc = 0.0f64;
    for (&x, &y) in ga.data().iter().zip(gb.data()) {
        let d = x.to_f64() - y.to_f64();
        acc += d * d;
    }
    let mse = acc / ga.data().len() as f64;
    if mse == 0.0 {
        return Ok(T::infinity());
    }
    Ok(T::from_f64(-10.0 * mse.log10()))
}

/// Mean structural similarity after gamma compression: 11x11 Gaussian
/// window (sigma 1.5), standard constants on the `[0, 1]` range, valid-window
/// positions only, averaged over channels.
pub fn ssim_gamma<T: Scalar>(a: &RgbImage<T>, b: &RgbImage<T>) -> Result<T> {
    check_dims(a, b)?;
    if a.height() < SSIM_WINDOW || a.width() < SSIM_WINDOW {
        return Err(Error::dimension(format!(
            "ssim needs at least {SSIM_WINDOW}x{SSIM_WINDOW} images"
        )));
    }
    let ga = gamma_image(a);
    let gb = gamma_image(b);
    let kernel = gaussian_kernel();

    let mut total = 0.0f64;
    for ch in [Channel::R, Channel::G, Channel::B] {
        let pa = ga.plane(ch).map(|v| v.to_f64());
        let pb = gb.plane(ch).map(|v| v.to_f64());
        total += ssim_plane(&pa, &pb, &kernel);
    }
    Ok(T::from_f64(total / 3.0))
}

fn gaussian_kernel() -> Vec<f64> {
    let half = (SSIM_WINDOW / 2) as isize;
    let mut k: Vec<f64> = (-half..=half)
        .map(|i| (-((i * i) as f64) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    for v in &mut k {
        *v /= sum;
    }
    k
}

/// Separable valid-mode convolution with a symmetric 1-D kernel.
fn valid_filter(src: &Grid<f64>, kernel: &[f64]) -> Grid<f64> {
    let k = kernel.len();
    let h = src.height();
    let w = src.width();
    let horiz = Grid::from_fn(h, w - k + 1, |r, c| {
        kernel
            .iter()
            .enumerate()
            .map(|(i, &kv)| kv * src.get(r, c + i))
            .sum()
    });
    Grid::from_fn(h - k + 1, w - k + 1, |r, c| {
        kernel
            .iter()
            .enumerate()
            .map(|(i, &kv)| kv * horiz.get(r + i, c))
            .sum()
    })
}

fn ssim_plane(a: &Grid<f64>, b: &Grid<f64>, kernel: &[f64]) -> f64 {
    let mu_a = valid_filter(a, kernel);
    let mu_b = valid_filter(b, kernel);
    let e_aa = valid_filter(&a.map(|v| v * v), kernel);
    let e_bb = valid_filter(&b.map(|v| v * v), kernel);
    let ab = Grid::from_fn(a.height(), a.width(), |r, c| a.get(r, c) * b.get(r, c));
    let e_ab = valid_filter(&ab, kernel);

    let mut acc = 0.0;
    for r in 0..mu_a.height() {
        for c in 0..mu_a.width() {
            let ma = mu_a.get(r, c);
            let mb = mu_b.get(r, c);
            let va = e_aa.get(r, c) - ma * ma;
            let vb = e_bb.get(r, c) - mb * mb;
            let cov = e_ab.get(r, c) - ma * mb;
            let num = (2.0 * ma * mb + SSIM_C1) * (2.0 * cov + SSIM_C2);
            let den = (ma * ma + mb * mb + SSIM_C1) * (va + vb + SSIM_C2);
            acc += num / den;
        }
    }
    acc / (mu_a.height() * mu_a.width()) as f64
}
