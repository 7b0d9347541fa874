//! PSNR, SSIM and ℓ₂ reporting.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imagecore::{l2_distance, Image, Plane};
use crate::theory::Embedding;

/// Reported PSNR when the images are (numerically) identical.
pub const PSNR_CAP_DB: f64 = 100.0;
const MSE_FLOOR: f64 = 1e-10;

pub const SSIM_WINDOW: usize = 8;
const SSIM_C1: f64 = 0.01 * 0.01;
const SSIM_C2: f64 = 0.03 * 0.03;

pub fn mse(x: &Image, y: &Image) -> Result<f64> {
    let d = l2_distance(x, y)?;
    Ok(d * d / x.len() as f64)
}

/// `-10·log10(MSE)` for samples in `[0, 1]`, capped at 100 dB.
pub fn psnr(x: &Image, y: &Image) -> Result<f64> {
    let m = mse(x, y)?;
    if m < MSE_FLOOR {
        return Ok(PSNR_CAP_DB);
    }
    Ok((-10.0 * m.log10()).min(PSNR_CAP_DB))
}

/// Mean SSIM over all 8×8 windows (stride 1) of the luma plane.
pub fn ssim(x: &Image, y: &Image) -> Result<f64> {
    x.check_shape(y)?;
    if x.width() < SSIM_WINDOW || x.height() < SSIM_WINDOW {
        return Err(Error::DimensionMismatch(format!(
            "SSIM needs at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {}x{}",
            x.width(),
            x.height()
        )));
    }
    Ok(ssim_planes(&x.luma(), &y.luma()))
}

fn ssim_planes(a: &Plane, b: &Plane) -> f64 {
    let (w, h) = (a.width, a.height);
    let sa = SummedArea::new(w, h, |i| a.data[i]);
    let sb = SummedArea::new(w, h, |i| b.data[i]);
    let saa = SummedArea::new(w, h, |i| a.data[i] * a.data[i]);
    let sbb = SummedArea::new(w, h, |i| b.data[i] * b.data[i]);
    let sab = SummedArea::new(w, h, |i| a.data[i] * b.data[i]);
    let n = (SSIM_WINDOW * SSIM_WINDOW) as f64;
    let mut total = 0.0;
    let mut count = 0usize;
    for y in 0..=h - SSIM_WINDOW {
        for x in 0..=w - SSIM_WINDOW {
            let mx = sa.window(x, y) / n;
            let my = sb.window(x, y) / n;
            let vx = (saa.window(x, y) / n - mx * mx).max(0.0);
            let vy = (sbb.window(x, y) / n - my * my).max(0.0);
            let cov = sab.window(x, y) / n - mx * my;
            total += ((2.0 * mx * my + SSIM_C1) * (2.0 * cov + SSIM_C2))
                / ((mx * mx + my * my + SSIM_C1) * (vx + vy + SSIM_C2));
            count += 1;
        }
    }
    total / count as f64
}

struct SummedArea {
    w: usize,
    s: Vec<f64>,
}

impl SummedArea {
    fn new(w: usize, h: usize, f: impl Fn(usize) -> f64) -> Self {
        let stride = w + 1;
        let mut s = vec![0.0; stride * (h + 1)];
        for y in 0..h {
            let mut row = 0.0;
            for x in 0..w {
                row += f(y * w + x);
                s[(y + 1) * stride + x + 1] = s[y * stride + x + 1] + row;
            }
        }
        Self { w, s }
    }

    fn window(&self, x: usize, y: usize) -> f64 {
        let stride = self.w + 1;
        let (x1, y1) = (x + SSIM_WINDOW, y + SSIM_WINDOW);
        self.s[y1 * stride + x1] - self.s[y * stride + x1] - self.s[y1 * stride + x] + self.s[y * stride + x]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub psnr: f64,
    pub ssim: f64,
    pub l2_pixel: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l2_embedding: Option<f64>,
}

impl QualityReport {
    pub const CSV_HEADER: &'static str = "psnr,ssim,l2_pixel,l2_embedding";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{}",
            self.psnr,
            self.ssim,
            self.l2_pixel,
            self.l2_embedding.map(|v| v.to_string()).unwrap_or_default()
        )
    }
}

pub fn quality_report(original: &Image, processed: &Image, phi: Option<&dyn Embedding>) -> Result<QualityReport> {
    let l2_embedding = phi.map(|phi| {
        let a = phi.embed(original);
        let b = phi.embed(processed);
        a.iter().zip(&b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
    });
    Ok(QualityReport {
        psnr: psnr(original, processed)?,
        ssim: ssim(original, processed)?,
        l2_pixel: l2_distance(original, processed)?,
        l2_embedding,
    })
}
