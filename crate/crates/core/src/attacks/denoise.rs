//! Classical denoisers used as the reconstruction step of regeneration.

use crate::error::{Error, Result};
use crate::imagecore::{Image, Plane};

const CHAMBOLLE_STEP: f64 = 0.25;

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be positive, got {v}")))
    }
}

fn per_channel(x: &Image, f: impl Fn(&Plane) -> Plane) -> Result<Image> {
    let planes: Vec<Plane> = (0..x.channels()).map(|c| f(&x.channel(c))).collect();
    Image::from_planes(&planes)
}

/// ROF denoising, `argmin_u TV(u) + ‖u − f‖² / (2λ)`, per channel.
pub fn tv_denoise(x: &Image, lambda: f64, iters: usize) -> Result<Image> {
    positive("lambda", lambda)?;
    if iters == 0 {
        return Err(Error::invalid("tv iterations must be at least 1"));
    }
    per_channel(x, |p| tv_plane(p, lambda, iters))
}

/// Chambolle's dual projection iteration.
pub(super) fn tv_plane(f: &Plane, lambda: f64, iters: usize) -> Plane {
    let (w, h) = (f.width, f.height);
    let n = w * h;
    let mut px = vec![0.0; n];
    let mut py = vec![0.0; n];
    let mut div = vec![0.0; n];
    for _ in 0..iters {
        divergence(&px, &py, w, h, &mut div);
        let g: Vec<f64> = div.iter().zip(&f.data).map(|(d, v)| d - v / lambda).collect();
        for y in 0..h {
            for x in 0..w {
                let i = y * w + x;
                let gx = if x + 1 < w { g[i + 1] - g[i] } else { 0.0 };
                let gy = if y + 1 < h { g[i + w] - g[i] } else { 0.0 };
                let norm = 1.0 + CHAMBOLLE_STEP * (gx * gx + gy * gy).sqrt();
                px[i] = (px[i] + CHAMBOLLE_STEP * gx) / norm;
                py[i] = (py[i] + CHAMBOLLE_STEP * gy) / norm;
            }
        }
    }
    divergence(&px, &py, w, h, &mut div);
    let data = f.data.iter().zip(&div).map(|(v, d)| v - lambda * d).collect();
    Plane { width: w, height: h, data }
}

/// Negative adjoint of the forward-difference gradient.
fn divergence(px: &[f64], py: &[f64], w: usize, h: usize, out: &mut [f64]) {
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let dx = match x {
                0 => px[i],
                _ if x + 1 == w => -px[i - 1],
                _ => px[i] - px[i - 1],
            };
            let dy = match y {
                0 => py[i],
                _ if y + 1 == h => -py[i - w],
                _ => py[i] - py[i - w],
            };
            out[i] = dx + dy;
        }
    }
}

/// Isotropic total variation summed over channels.
pub fn total_variation(x: &Image) -> f64 {
    (0..x.channels())
        .map(|c| {
            let p = x.channel(c);
            let mut tv = 0.0;
            for y in 0..p.height {
                for xx in 0..p.width {
                    let v = p.at(xx, y);
                    let gx = if xx + 1 < p.width { p.at(xx + 1, y) - v } else { 0.0 };
                    let gy = if y + 1 < p.height { p.at(xx, y + 1) - v } else { 0.0 };
                    tv += (gx * gx + gy * gy).sqrt();
                }
            }
            tv
        })
        .sum()
}

/// Bilateral filter over a `(2⌈3σ_s⌉ + 1)²` window with replicated edges.
pub fn bilateral(x: &Image, sigma_s: f64, sigma_r: f64) -> Result<Image> {
    positive("sigma_s", sigma_s)?;
    positive("sigma_r", sigma_r)?;
    per_channel(x, |p| bilateral_plane(p, sigma_s, sigma_r))
}

pub(super) fn bilateral_plane(p: &Plane, sigma_s: f64, sigma_r: f64) -> Plane {
    let half = (3.0 * sigma_s).ceil() as isize;
    let spatial: Vec<f64> = (-half..=half)
        .flat_map(|dy| (-half..=half).map(move |dx| (-((dx * dx + dy * dy) as f64) / (2.0 * sigma_s * sigma_s)).exp()))
        .collect();
    let range_scale = 1.0 / (2.0 * sigma_r * sigma_r);
    let (w, h) = (p.width as isize, p.height as isize);
    let side = (2 * half + 1) as usize;
    let mut out = Plane::zeros(p.width, p.height);
    for y in 0..h {
        for x in 0..w {
            let center = p.at(x as usize, y as usize);
            let (mut num, mut den) = (0.0, 0.0);
            for dy in -half..=half {
                let yy = (y + dy).clamp(0, h - 1) as usize;
                for dx in -half..=half {
                    let xx = (x + dx).clamp(0, w - 1) as usize;
                    let v = p.at(xx, yy);
                    let s = spatial[(dy + half) as usize * side + (dx + half) as usize];
                    let wgt = s * (-(v - center) * (v - center) * range_scale).exp();
                    num += wgt * v;
                    den += wgt;
                }
            }
            out.set(x as usize, y as usize, num / den);
        }
    }
    out
}

/// Non-local means with `(2·patch + 1)²` patches searched over a
/// `(2·window + 1)²` neighbourhood; patch distances pool all channels.
pub fn nlm(x: &Image, patch: usize, window: usize, h: f64) -> Result<Image> {
    positive("h", h)?;
    if window == 0 {
        return Err(Error::invalid("nlm search window must be at least 1"));
    }
    let planes: Vec<Plane> = (0..x.channels()).map(|c| x.channel(c)).collect();
    Image::from_planes(&nlm_planes(&planes, patch, window, h))
}

pub(super) fn nlm_planes(planes: &[Plane], patch: usize, window: usize, h: f64) -> Vec<Plane> {
    let (w, hgt) = (planes[0].width as isize, planes[0].height as isize);
    let n = (w * hgt) as usize;
    let at = |x: isize, y: isize| (y.clamp(0, hgt - 1) * w + x.clamp(0, w - 1)) as usize;
    let norm = 1.0 / (((2 * patch + 1) * (2 * patch + 1) * planes.len()) as f64 * h * h);
    let (pr, wr) = (patch as isize, window as isize);
    let mut num: Vec<Vec<f64>> = vec![vec![0.0; n]; planes.len()];
    let mut den = vec![0.0; n];
    let mut diff = vec![0.0; n];
    for oy in -wr..=wr {
        for ox in -wr..=wr {
            for y in 0..hgt {
                for x in 0..w {
                    let (i, j) = (at(x, y), at(x + ox, y + oy));
                    diff[i] = planes.iter().map(|p| (p.data[i] - p.data[j]).powi(2)).sum();
                }
            }
            for y in 0..hgt {
                for x in 0..w {
                    let mut d = 0.0;
                    for py in -pr..=pr {
                        for px in -pr..=pr {
                            d += diff[at(x + px, y + py)];
                        }
                    }
                    let wgt = (-d * norm).exp();
                    let (i, j) = (at(x, y), at(x + ox, y + oy));
                    den[i] += wgt;
                    for (c, p) in planes.iter().enumerate() {
                        num[c][i] += wgt * p.data[j];
                    }
                }
            }
        }
    }
    num.into_iter()
        .map(|acc| Plane {
            width: w as usize,
            height: hgt as usize,
            data: acc.iter().zip(&den).map(|(a, d)| a / d).collect(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attacks::{gaussian_blur, gaussian_noise};
    use crate::imagecore::{synthetic_image, SyntheticKind};
    use crate::metrics::psnr;
    use crate::rng::RngState;

    fn max_diff(a: &Image, b: &Image) -> f64 {
        a.data().iter().zip(b.data()).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn constant_images_are_fixed_points() {
        let flat = Image::filled(12, 9, 3, 0.37).unwrap();
        assert!(max_diff(&flat, &tv_denoise(&flat, 0.3, 50).unwrap()) < 1e-9);
        assert!(max_diff(&flat, &bilateral(&flat, 2.0, 0.1).unwrap()) < 1e-9);
        assert!(max_diff(&flat, &nlm(&flat, 1, 3, 0.1).unwrap()) < 1e-9);
    }

    #[test]
    fn parameter_errors() {
        let x = Image::filled(4, 4, 1, 0.5).unwrap();
        assert!(tv_denoise(&x, 0.0, 10).is_err());
        assert!(tv_denoise(&x, 0.1, 0).is_err());
        assert!(bilateral(&x, 0.0, 1.0).is_err());
        assert!(bilateral(&x, 1.0, -1.0).is_err());
        assert!(nlm(&x, 1, 0, 0.1).is_err());
        assert!(nlm(&x, 1, 2, 0.0).is_err());
    }

    #[test]
    fn tv_reduces_total_variation_on_noisy_step() {
        let (w, h) = (32, 24);
        let data: Vec<f64> = (0..w * h).map(|i| if i % w < w / 2 { 0.2 } else { 0.8 }).collect();
        let step = Image::new(w, h, 1, data).unwrap();
        let noisy = gaussian_noise(&step, 0.08, RngState::new(3, 0)).unwrap();
        let out = tv_denoise(&noisy, 0.1, 100).unwrap();
        assert!(total_variation(&out) <= total_variation(&noisy));
        assert!(psnr(&step, &out).unwrap() > psnr(&step, &noisy).unwrap());
    }

    #[test]
    fn bilateral_with_flat_range_kernel_is_gaussian_blur() {
        let x = synthetic_image(5, 30, 22, SyntheticKind::SmoothNoise).unwrap();
        for radius in [1.0, 2.0, 3.0] {
            let a = bilateral(&x, radius / 2.0, 1e9).unwrap();
            let b = gaussian_blur(&x, radius).unwrap();
            assert!(max_diff(&a, &b) < 1e-6);
        }
    }

    #[test]
    fn tv_gain_with_lambda_tuned_on_held_out_image() {
        let std = 20.0 / 255.0;
        let held_out = synthetic_image(900, 64, 64, SyntheticKind::SmoothNoise).unwrap();
        let noisy = gaussian_noise(&held_out, std, RngState::new(900, 0)).unwrap();
        let grid: Vec<f64> = (1..=12).map(|i| i as f64 * 0.25 * std).collect();
        let best = grid
            .iter()
            .copied()
            .max_by(|a, b| {
                let pa = psnr(&held_out, &tv_denoise(&noisy, *a, 60).unwrap()).unwrap();
                let pb = psnr(&held_out, &tv_denoise(&noisy, *b, 60).unwrap()).unwrap();
                pa.total_cmp(&pb)
            })
            .unwrap();
        for seed in 0..6 {
            let x = synthetic_image(seed, 64, 64, SyntheticKind::SmoothNoise).unwrap();
            let y = gaussian_noise(&x, std, RngState::new(seed, 1)).unwrap();
            let gain = psnr(&x, &tv_denoise(&y, best, 60).unwrap()).unwrap() - psnr(&x, &y).unwrap();
            assert!(gain >= 2.0, "image {seed}: gain {gain:.2} dB at lambda {best}");
        }
    }

    #[test]
    fn nlm_improves_noisy_smooth_image() {
        let x = synthetic_image(8, 40, 40, SyntheticKind::SmoothNoise).unwrap();
        let std = 20.0 / 255.0;
        let y = gaussian_noise(&x, std, RngState::new(8, 0)).unwrap();
        let out = nlm(&y, 1, 4, 0.8 * std).unwrap();
        assert!(psnr(&x, &out).unwrap() > psnr(&x, &y).unwrap() + 2.0);
    }
}
