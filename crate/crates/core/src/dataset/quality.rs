//! Full-reference image quality: windowed SSIM and PSNR on a 1.0 dynamic range.

use serde::{Deserialize, Serialize};

use super::DatasetError;
use crate::image::ImageBuffer;

pub const SSIM_WINDOW: usize = 8;
const K1: f64 = 0.01;
const K2: f64 = 0.03;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QualityMetrics {
    pub ssim: f64,
    /// Decibels; `f64::INFINITY` for identical images.
    pub psnr: f64,
}

/// SSIM over every `8×8` window (uniform weights, population statistics),
/// averaged over windows and channels. Images smaller than the window use one
/// window spanning the whole image.
pub fn ssim(a: &ImageBuffer, b: &ImageBuffer) -> Result<f64, DatasetError> {
    check_shapes(a, b)?;
    let c1 = K1 * K1;
    let c2 = K2 * K2;
    let (w, h, ch) = (a.width(), a.height(), a.channels());
    let win_w = SSIM_WINDOW.min(w);
    let win_h = SSIM_WINDOW.min(h);
    let n = (win_w * win_h) as f64;
    let mut total = 0.0;
    let mut windows = 0usize;
    for c in 0..ch {
        for y0 in 0..=h - win_h {
            for x0 in 0..=w - win_w {
                let (mut sa, mut sb, mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0, 0.0, 0.0);
                for y in y0..y0 + win_h {
                    for x in x0..x0 + win_w {
                        let (p, q) = (a.get(x, y, c), b.get(x, y, c));
                        sa += p;
                        sb += q;
                        saa += p * p;
                        sbb += q * q;
                        sab += p * q;
                    }
                }
                let (ma, mb) = (sa / n, sb / n);
                let va = (saa / n - ma * ma).max(0.0);
                let vb = (sbb / n - mb * mb).max(0.0);
                let cov = sab / n - ma * mb;
                total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2))
                    / ((ma * ma + mb * mb + c1) * (va + vb + c2));
                windows += 1;
            }
        }
    }
    Ok(total / windows as f64)
}

/// `10·log10(1 / MSE)`.
pub fn psnr(a: &ImageBuffer, b: &ImageBuffer) -> Result<f64, DatasetError> {
    check_shapes(a, b)?;
    let mse = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(p, q)| (p - q) * (p - q))
        .sum::<f64>()
        / a.data().len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (1.0 / mse).log10())
}

pub fn image_quality_metrics(
    a: &ImageBuffer,
    b: &ImageBuffer,
) -> Result<QualityMetrics, DatasetError> {
    Ok(QualityMetrics {
        ssim: ssim(a, b)?,
        psnr: psnr(a, b)?,
    })
}

fn check_shapes(a: &ImageBuffer, b: &ImageBuffer) -> Result<(), DatasetError> {
    if (a.width(), a.height(), a.channels()) != (b.width(), b.height(), b.channels()) {
        return Err(DatasetError::Shape(format!(
            "{}x{}x{} vs {}x{}x{}",
            a.width(),
            a.height(),
            a.channels(),
            b.width(),
            b.height(),
            b.channels()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(w: usize, h: usize) -> ImageBuffer {
        ImageBuffer::from_fn(w, h, |x, y| 0.2 + 0.5 * ((x * 7 + y * 3) % 11) as f64 / 10.0)
    }

    #[test]
    fn identical_images() {
        let a = ramp(20, 16);
        let m = image_quality_metrics(&a, &a).unwrap();
        assert!((m.ssim - 1.0).abs() < 1e-12);
        assert_eq!(m.psnr, f64::INFINITY);
    }

    #[test]
    fn constant_offset_gives_twenty_db() {
        let a = ramp(20, 16);
        let b = ImageBuffer::new(
            20,
            16,
            1,
            a.data().iter().map(|v| v + 0.1).collect(),
        )
        .unwrap();
        assert!((psnr(&a, &b).unwrap() - 20.0).abs() < 1e-9);
    }

    #[test]
    fn shape_mismatch() {
        assert!(matches!(
            psnr(&ramp(4, 4), &ramp(5, 4)),
            Err(DatasetError::Shape(_))
        ));
        assert!(ssim(&ramp(4, 4), &ImageBuffer::filled(4, 4, 3, 0.5)).is_err());
    }

    #[test]
    fn small_images_use_one_window() {
        let a = ramp(5, 3);
        assert!((ssim(&a, &a).unwrap() - 1.0).abs() < 1e-12);
    }
}
