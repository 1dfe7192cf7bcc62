//! PSNR and SSIM on magnitude images. The data range is the peak magnitude
//! of the reference image.

use crate::error::{Error, Result};
use crate::numerics::ComplexImage;

/// Reported in place of +inf when the images match exactly.
pub const PSNR_CAP: f64 = 99.0;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

fn magnitudes(recon: &ComplexImage, truth: &ComplexImage) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    recon.ensure_same_shape(truth)?;
    let t = truth.magnitude();
    let range = t.iter().cloned().fold(0.0f64, f64::max);
    if range == 0.0 {
        return Err(Error::DegenerateReference);
    }
    Ok((recon.magnitude(), t, range))
}

/// `10 log10(range^2 / MSE)`, capped at [`PSNR_CAP`].
pub fn psnr(recon: &ComplexImage, truth: &ComplexImage) -> Result<f64> {
    let (r, t, range) = magnitudes(recon, truth)?;
    let mse = r.iter().zip(&t).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / r.len() as f64;
    if mse == 0.0 {
        return Ok(PSNR_CAP);
    }
    Ok((10.0 * (range * range / mse).log10()).min(PSNR_CAP))
}

fn gaussian_window() -> [f64; SSIM_WINDOW] {
    let mut w = [0.0; SSIM_WINDOW];
    let half = (SSIM_WINDOW / 2) as f64;
    for (i, v) in w.iter_mut().enumerate() {
        let d = i as f64 - half;
        *v = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= s);
    w
}

/// Separable Gaussian filter over positions where the window fits entirely.
fn filter_valid(img: &[f64], h: usize, w: usize, k: &[f64; SSIM_WINDOW]) -> (Vec<f64>, usize, usize) {
    let (oh, ow) = (h - SSIM_WINDOW + 1, w - SSIM_WINDOW + 1);
    let mut rows = vec![0.0; h * ow];
    for y in 0..h {
        for x in 0..ow {
            rows[y * ow + x] = (0..SSIM_WINDOW).map(|i| k[i] * img[y * w + x + i]).sum();
        }
    }
    let mut out = vec![0.0; oh * ow];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = (0..SSIM_WINDOW).map(|i| k[i] * rows[(y + i) * ow + x]).sum();
        }
    }
    (out, oh, ow)
}

/// Mean local SSIM with an 11x11 Gaussian window (sigma 1.5), K1 = 0.01,
/// K2 = 0.03, evaluated where the window fits inside the image.
pub fn ssim(recon: &ComplexImage, truth: &ComplexImage) -> Result<f64> {
    let (h, w) = truth.shape();
    if h < SSIM_WINDOW || w < SSIM_WINDOW {
        recon.ensure_same_shape(truth)?;
        return Err(Error::InvalidInput(format!(
            "SSIM needs images of at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {h}x{w}"
        )));
    }
    let (x, y, range) = magnitudes(recon, truth)?;
    let c1 = (SSIM_K1 * range).powi(2);
    let c2 = (SSIM_K2 * range).powi(2);
    let k = gaussian_window();
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a * b).collect();
    let (mu_x, _, _) = filter_valid(&x, h, w, &k);
    let (mu_y, _, _) = filter_valid(&y, h, w, &k);
    let (e_xx, _, _) = filter_valid(&xx, h, w, &k);
    let (e_yy, _, _) = filter_valid(&yy, h, w, &k);
    let (e_xy, oh, ow) = filter_valid(&xy, h, w, &k);
    let mut total = 0.0;
    for i in 0..oh * ow {
        let (mx, my) = (mu_x[i], mu_y[i]);
        let vx = e_xx[i] - mx * mx;
        let vy = e_yy[i] - my * my;
        let cov = e_xy[i] - mx * my;
        total += ((2.0 * mx * my + c1) * (2.0 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
    }
    Ok(total / (oh * ow) as f64)
}
