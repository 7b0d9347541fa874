//! Baseline image attacks and the regeneration attack family.
//!
//! Regeneration takes a watermarked image, adds i.i.d. Gaussian noise in
//! pixel space and hands the result to a denoiser. With the `none` denoiser
//! it is exactly the Gaussian-noise attack.

mod denoise;
mod plugin;

use std::fmt;
use std::io::Cursor;
use std::str::FromStr;

use image::codecs::jpeg::JpegEncoder;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imagecore::{from_dynamic, to_bytes, Image, Plane};
use crate::rng::RngState;

pub use denoise::{bilateral, nlm, total_variation, tv_denoise};
pub use plugin::{plugin_regenerate, PluginOutput, DEFAULT_PLUGIN_TIMEOUT_SECS};

/// TV weight used by regeneration when none is given, per unit of noise std.
pub const TV_LAMBDA_PER_SIGMA: f64 = 1.0;
/// NLM filtering parameter used by regeneration when none is given, per unit of noise std.
pub const NLM_H_PER_SIGMA: f64 = 0.8;
/// Bilateral range std used by regeneration when none is given, per unit of noise std.
pub const BILATERAL_RANGE_PER_SIGMA: f64 = 2.0;

/// Reconstruction step of the regeneration attack.
///
/// Parameters left as `None` are derived from the regeneration noise level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Denoiser {
    None,
    Tv {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lambda: Option<f64>,
        #[serde(default = "default_tv_iters")]
        iters: usize,
    },
    Bilateral {
        #[serde(default = "default_sigma_s")]
        sigma_s: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sigma_r: Option<f64>,
    },
    Nlm {
        #[serde(default = "default_patch")]
        patch: usize,
        #[serde(default = "default_window")]
        window: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        h: Option<f64>,
    },
}

fn default_tv_iters() -> usize {
    60
}
fn default_sigma_s() -> f64 {
    1.5
}
fn default_patch() -> usize {
    1
}
fn default_window() -> usize {
    5
}

impl Denoiser {
    pub fn name(&self) -> &'static str {
        match self {
            Denoiser::None => "none",
            Denoiser::Tv { .. } => "tv",
            Denoiser::Bilateral { .. } => "bilateral",
            Denoiser::Nlm { .. } => "nlm",
        }
    }

    fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: Option<f64>| match v {
            Some(v) if !(v > 0.0 && v.is_finite()) => Err(Error::invalid(format!("{name} must be positive, got {v}"))),
            _ => Ok(()),
        };
        match *self {
            Denoiser::None => Ok(()),
            Denoiser::Tv { lambda, iters } => {
                if iters == 0 {
                    return Err(Error::invalid("tv iterations must be at least 1"));
                }
                positive("lambda", lambda)
            }
            Denoiser::Bilateral { sigma_s, sigma_r } => {
                positive("sigma_s", Some(sigma_s))?;
                positive("sigma_r", sigma_r)
            }
            Denoiser::Nlm { patch: _, window, h } => {
                if window == 0 {
                    return Err(Error::invalid("nlm search window must be at least 1"));
                }
                positive("h", h)
            }
        }
    }

    fn apply(&self, planes: Vec<Plane>, sigma: f64) -> Vec<Plane> {
        let floor = |v: Option<f64>, per_sigma: f64| v.unwrap_or((per_sigma * sigma).max(1e-6));
        match *self {
            Denoiser::None => planes,
            Denoiser::Tv { lambda, iters } => {
                let lambda = floor(lambda, TV_LAMBDA_PER_SIGMA);
                planes.iter().map(|p| denoise::tv_plane(p, lambda, iters)).collect()
            }
            Denoiser::Bilateral { sigma_s, sigma_r } => {
                let sigma_r = floor(sigma_r, BILATERAL_RANGE_PER_SIGMA);
                planes.iter().map(|p| denoise::bilateral_plane(p, sigma_s, sigma_r)).collect()
            }
            Denoiser::Nlm { patch, window, h } => denoise::nlm_planes(&planes, patch, window, floor(h, NLM_H_PER_SIGMA)),
        }
    }
}

impl FromStr for Denoiser {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Denoiser::None),
            "tv" => Ok(Denoiser::Tv { lambda: None, iters: default_tv_iters() }),
            "bilateral" => Ok(Denoiser::Bilateral { sigma_s: default_sigma_s(), sigma_r: None }),
            "nlm" => Ok(Denoiser::Nlm { patch: default_patch(), window: default_window(), h: None }),
            other => Err(Error::invalid(format!("unknown denoiser '{other}'"))),
        }
    }
}

/// One attack with its parameters.
///
/// `GaussianNoise::std` is on the 8-bit scale (divided by 255 when applied);
/// `Regen::sigma` is a per-sample std on the `[0, 1]` scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Attack {
    Identity,
    Brightness { factor: f64 },
    Contrast { factor: f64 },
    Jpeg { quality: u8 },
    GaussianNoise { std: f64 },
    GaussianBlur { radius: f64 },
    Regen { sigma: f64, denoiser: Denoiser },
    Plugin {
        command: Vec<String>,
        strength: f64,
        #[serde(default = "default_timeout")]
        timeout_secs: u64,
    },
}

fn default_timeout() -> u64 {
    DEFAULT_PLUGIN_TIMEOUT_SECS
}

impl Attack {
    pub fn kind(&self) -> &'static str {
        match self {
            Attack::Identity => "identity",
            Attack::Brightness { .. } => "brightness",
            Attack::Contrast { .. } => "contrast",
            Attack::Jpeg { .. } => "jpeg",
            Attack::GaussianNoise { .. } => "gaussian-noise",
            Attack::GaussianBlur { .. } => "gaussian-blur",
            Attack::Regen { .. } => "regen",
            Attack::Plugin { .. } => "plugin",
        }
    }

    /// The scalar reported as the attack strength.
    pub fn strength(&self) -> f64 {
        match *self {
            Attack::Identity => 0.0,
            Attack::Brightness { factor } | Attack::Contrast { factor } => factor,
            Attack::Jpeg { quality } => quality as f64,
            Attack::GaussianNoise { std } => std,
            Attack::GaussianBlur { radius } => radius,
            Attack::Regen { sigma, .. } => sigma,
            Attack::Plugin { strength, .. } => strength,
        }
    }

    /// Reporting label, e.g. `regen-tv`.
    pub fn label(&self) -> String {
        match self {
            Attack::Regen { denoiser, .. } => format!("regen-{}", denoiser.name()),
            other => other.kind().to_string(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let nonneg = |name: &str, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name} must be non-negative, got {v}")))
            }
        };
        match self {
            Attack::Identity => Ok(()),
            Attack::Brightness { factor } | Attack::Contrast { factor } => {
                if *factor > 0.0 && factor.is_finite() {
                    Ok(())
                } else {
                    Err(Error::invalid(format!("enhancement factor must be positive, got {factor}")))
                }
            }
            Attack::Jpeg { quality } => {
                if (1..=100).contains(quality) {
                    Ok(())
                } else {
                    Err(Error::invalid(format!("jpeg quality must be in 1..=100, got {quality}")))
                }
            }
            Attack::GaussianNoise { std } => nonneg("noise std", *std),
            Attack::GaussianBlur { radius } => nonneg("blur radius", *radius),
            Attack::Regen { sigma, denoiser } => {
                nonneg("regeneration sigma", *sigma)?;
                denoiser.validate()
            }
            Attack::Plugin { command, strength, .. } => {
                if command.is_empty() {
                    return Err(Error::invalid("plugin command is empty"));
                }
                if !strength.is_finite() {
                    return Err(Error::NonFinite);
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for Attack {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Attack::Identity => f.write_str("identity"),
            other => write!(f, "{}({})", other.label(), other.strength()),
        }
    }
}

/// Applies `attack`; randomized attacks draw only from `rng`.
pub fn apply_attack(x: &Image, attack: &Attack, rng: RngState) -> Result<Image> {
    attack.validate()?;
    match attack {
        Attack::Identity => Ok(x.clone()),
        Attack::Brightness { factor } => brightness(x, *factor),
        Attack::Contrast { factor } => contrast(x, *factor),
        Attack::Jpeg { quality } => jpeg(x, *quality),
        Attack::GaussianNoise { std } => gaussian_noise(x, std / 255.0, rng),
        Attack::GaussianBlur { radius } => gaussian_blur(x, *radius),
        Attack::Regen { sigma, denoiser } => regenerate(x, *sigma, denoiser, rng),
        Attack::Plugin { command, strength, timeout_secs } => {
            plugin_regenerate(x, command, *strength, *timeout_secs).map(|out| out.image)
        }
    }
}

pub fn brightness(x: &Image, factor: f64) -> Result<Image> {
    if !(factor > 0.0) {
        return Err(Error::invalid(format!("brightness factor must be positive, got {factor}")));
    }
    Ok(x.map(|v| v * factor))
}

/// Scales deviations from each channel's mean by `factor`.
pub fn contrast(x: &Image, factor: f64) -> Result<Image> {
    if !(factor > 0.0) {
        return Err(Error::invalid(format!("contrast factor must be positive, got {factor}")));
    }
    let planes: Vec<Plane> = (0..x.channels())
        .map(|c| {
            let mut p = x.channel(c);
            let mean = p.data.iter().sum::<f64>() / p.data.len() as f64;
            for v in p.data.iter_mut() {
                *v = mean + factor * (*v - mean);
            }
            p
        })
        .collect();
    Image::from_planes(&planes)
}

/// Baseline JPEG round trip through an in-memory buffer.
pub fn jpeg(x: &Image, quality: u8) -> Result<Image> {
    if !(1..=100).contains(&quality) {
        return Err(Error::invalid(format!("jpeg quality must be in 1..=100, got {quality}")));
    }
    let color = if x.channels() == 1 { image::ExtendedColorType::L8 } else { image::ExtendedColorType::Rgb8 };
    let mut buf = Vec::new();
    JpegEncoder::new_with_quality(&mut buf, quality)
        .encode(&to_bytes(x), x.width() as u32, x.height() as u32, color)
        .map_err(|e| Error::Codec(e.to_string()))?;
    let decoded = image::load(Cursor::new(buf), image::ImageFormat::Jpeg).map_err(|e| Error::Codec(e.to_string()))?;
    let out = from_dynamic(decoded)?;
    if out.channels() != x.channels() {
        // Grayscale JPEGs may decode as RGB with equal channels.
        let planes = vec![out.channel(0)];
        return Image::from_planes(&planes);
    }
    Ok(out)
}

/// Adds i.i.d. `N(0, std²)` noise to every sample (unit scale) and clips.
pub fn gaussian_noise(x: &Image, std: f64, rng: RngState) -> Result<Image> {
    let noisy = add_noise(x, std, rng)?;
    Ok(Image::from_raw_clipped(x.width(), x.height(), x.channels(), noisy))
}

fn add_noise(x: &Image, std: f64, rng: RngState) -> Result<Vec<f64>> {
    if !(std >= 0.0 && std.is_finite()) {
        return Err(Error::invalid(format!("noise std must be non-negative, got {std}")));
    }
    if std == 0.0 {
        return Ok(x.data().to_vec());
    }
    let mut rng = rng.rng();
    Ok(x.data()
        .iter()
        .map(|&v| {
            let z: f64 = rng.sample(StandardNormal);
            v + std * z
        })
        .collect())
}

/// Normalized 1-D Gaussian kernel truncated at `ceil(3σ)`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    if sigma <= 0.0 {
        return vec![1.0];
    }
    let half = (3.0 * sigma).ceil() as isize;
    let mut k: Vec<f64> = (-half..=half).map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp()).collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

/// Separable Gaussian convolution of one plane with edge replication.
pub fn gaussian_blur_plane(p: &Plane, sigma: f64) -> Plane {
    let k = gaussian_kernel(sigma);
    if k.len() == 1 {
        return p.clone();
    }
    let half = (k.len() / 2) as isize;
    let (w, h) = (p.width as isize, p.height as isize);
    let mut tmp = Plane::zeros(p.width, p.height);
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (i, kv) in k.iter().enumerate() {
                let xx = (x + i as isize - half).clamp(0, w - 1);
                acc += kv * p.at(xx as usize, y as usize);
            }
            tmp.set(x as usize, y as usize, acc);
        }
    }
    let mut out = Plane::zeros(p.width, p.height);
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (i, kv) in k.iter().enumerate() {
                let yy = (y + i as isize - half).clamp(0, h - 1);
                acc += kv * tmp.at(x as usize, yy as usize);
            }
            out.set(x as usize, y as usize, acc);
        }
    }
    out
}

/// Gaussian blur with kernel std `radius / 2`.
pub fn gaussian_blur(x: &Image, radius: f64) -> Result<Image> {
    if !(radius >= 0.0 && radius.is_finite()) {
        return Err(Error::invalid(format!("blur radius must be non-negative, got {radius}")));
    }
    let planes: Vec<Plane> = (0..x.channels()).map(|c| gaussian_blur_plane(&x.channel(c), radius / 2.0)).collect();
    Image::from_planes(&planes)
}

/// Regeneration with the identity embedding: `denoise(x_w + σ·z)`, clipped.
///
/// The noisy image is passed to the denoiser unclipped.
pub fn regenerate(x_w: &Image, sigma: f64, denoiser: &Denoiser, rng: RngState) -> Result<Image> {
    denoiser.validate()?;
    let noisy = add_noise(x_w, sigma, rng)?;
    let (w, h, ch) = (x_w.width(), x_w.height(), x_w.channels());
    if matches!(denoiser, Denoiser::None) {
        return Ok(Image::from_raw_clipped(w, h, ch, noisy));
    }
    let planes: Vec<Plane> = (0..ch)
        .map(|c| Plane { width: w, height: h, data: noisy.iter().skip(c).step_by(ch).copied().collect() })
        .collect();
    let out = denoiser.apply(planes, sigma);
    let mut data = vec![0.0; w * h * ch];
    for (c, p) in out.iter().enumerate() {
        for (i, v) in p.data.iter().enumerate() {
            data[i * ch + c] = *v;
        }
    }
    Ok(Image::from_raw_clipped(w, h, ch, data))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imagecore::{synthetic_image, SyntheticKind};
    use crate::metrics::psnr;
    use proptest::prelude::*;

    fn smooth(seed: u64) -> Image {
        synthetic_image(seed, 48, 40, SyntheticKind::SmoothNoise).unwrap()
    }

    #[test]
    fn brightness_examples() {
        let x = Image::new(2, 1, 1, vec![0.6, 0.3]).unwrap();
        assert_eq!(brightness(&x, 1.0).unwrap(), x);
        assert_eq!(brightness(&x, 2.0).unwrap().data(), &[1.0, 0.6]);
        assert!(brightness(&x, 0.0).is_err());
        assert!(brightness(&x, -1.0).is_err());
    }

    #[test]
    fn contrast_examples() {
        let x = Image::new(2, 1, 1, vec![0.3, 0.7]).unwrap();
        let y = contrast(&x, 2.0).unwrap();
        assert!((y.data()[1] - 0.9).abs() < 1e-12);
        assert!((y.data()[0] - 0.1).abs() < 1e-12);
        assert_eq!(contrast(&x, 1.0).unwrap(), x);
        let flat = Image::filled(5, 5, 3, 0.42).unwrap();
        let out = contrast(&flat, 7.0).unwrap();
        assert!(out.data().iter().all(|v| (v - 0.42).abs() < 1e-12));
        assert!(contrast(&x, 0.0).is_err());
    }

    #[test]
    fn jpeg_quality() {
        let x = synthetic_image(3, 64, 64, SyntheticKind::SmoothNoise).unwrap();
        let hi = jpeg(&x, 100).unwrap();
        assert!(hi.same_shape(&x));
        assert!(psnr(&x, &hi).unwrap() >= 40.0);
        let p10 = psnr(&x, &jpeg(&x, 10).unwrap()).unwrap();
        let p60 = psnr(&x, &jpeg(&x, 60).unwrap()).unwrap();
        assert!(p10 < p60);
        assert!(jpeg(&x, 0).is_err());
        assert!(jpeg(&x, 101).is_err());

        let gray = Image::from_planes(&[x.channel(1)]).unwrap();
        assert_eq!(jpeg(&gray, 80).unwrap().channels(), 1);
    }

    #[test]
    fn noise_examples() {
        let x = smooth(1);
        assert_eq!(gaussian_noise(&x, 0.0, RngState::new(1, 1)).unwrap(), x);
        let a = gaussian_noise(&x, 0.05, RngState::new(1, 1)).unwrap();
        assert_eq!(a, gaussian_noise(&x, 0.05, RngState::new(1, 1)).unwrap());
        assert_ne!(a, gaussian_noise(&x, 0.05, RngState::new(1, 2)).unwrap());
        assert!(gaussian_noise(&x, -0.1, RngState::new(1, 1)).is_err());
    }

    #[test]
    fn noise_power_matches_std() {
        let x = Image::filled(200, 200, 3, 0.5).unwrap();
        let std = 10.0 / 255.0;
        let noisy = add_noise(&x, std, RngState::new(9, 0)).unwrap();
        let msq = noisy.iter().map(|v| (v - 0.5) * (v - 0.5)).sum::<f64>() / noisy.len() as f64;
        assert!((msq / (std * std) - 1.0).abs() < 0.05);
    }

    #[test]
    fn blur_examples() {
        for sigma in [0.3, 1.0, 2.5, 6.0] {
            let s: f64 = gaussian_kernel(sigma).iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
        let x = smooth(2);
        assert_eq!(gaussian_blur(&x, 0.0).unwrap(), x);
        let flat = Image::filled(9, 7, 3, 0.3).unwrap();
        let out = gaussian_blur(&flat, 4.0).unwrap();
        assert!(out.data().iter().all(|v| (v - 0.3).abs() < 1e-12));
        assert!(gaussian_blur(&x, -1.0).is_err());
    }

    #[test]
    fn regen_degenerate_cases() {
        let x = smooth(4);
        assert_eq!(regenerate(&x, 0.0, &Denoiser::None, RngState::new(0, 0)).unwrap(), x);
        for sigma in [0.01, 0.1, 0.5] {
            let r = RngState::new(11, 3);
            assert_eq!(
                regenerate(&x, sigma, &Denoiser::None, r).unwrap(),
                gaussian_noise(&x, sigma, r).unwrap()
            );
        }
        let attack = Attack::Regen { sigma: 0.2, denoiser: Denoiser::None };
        let noise = Attack::GaussianNoise { std: 0.2 * 255.0 };
        let r = RngState::new(5, 5);
        let a = apply_attack(&x, &attack, r).unwrap();
        let b = apply_attack(&x, &noise, r).unwrap();
        let max = a.data().iter().zip(b.data()).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        assert!(max < 1e-12);
    }

    #[test]
    fn regen_beats_noise_on_quality() {
        for (seed, sigma) in [(20, 10.0 / 255.0), (21, 20.0 / 255.0), (22, 30.0 / 255.0)] {
            let x = synthetic_image(seed, 64, 64, SyntheticKind::SmoothNoise).unwrap();
            let r = RngState::new(seed, 1);
            let noisy = psnr(&x, &gaussian_noise(&x, sigma, r).unwrap()).unwrap();
            for d in ["tv", "bilateral", "nlm"] {
                let den: Denoiser = d.parse().unwrap();
                let regen = psnr(&x, &regenerate(&x, sigma, &den, r).unwrap()).unwrap();
                assert!(regen >= noisy, "{d} at sigma {sigma}: {regen} < {noisy}");
            }
        }
    }

    #[test]
    fn denoiser_names_and_validation() {
        assert!("bm3d".parse::<Denoiser>().is_err());
        for d in ["none", "tv", "bilateral", "nlm"] {
            assert_eq!(d.parse::<Denoiser>().unwrap().name(), d);
        }
        let bad = Attack::Regen { sigma: 0.1, denoiser: Denoiser::Tv { lambda: Some(0.0), iters: 10 } };
        assert!(bad.validate().is_err());
        assert!(Attack::Regen { sigma: -0.1, denoiser: Denoiser::None }.validate().is_err());
        assert!(serde_json::from_str::<Attack>(r#"{"kind":"regen","sigma":0.1,"denoiser":{"name":"bm3d"}}"#).is_err());
    }

    #[test]
    fn attack_json_roundtrip() {
        let attacks = vec![
            Attack::Identity,
            Attack::Brightness { factor: 2.0 },
            Attack::Jpeg { quality: 50 },
            Attack::Regen { sigma: 0.1, denoiser: "tv".parse().unwrap() },
            Attack::Plugin { command: vec!["regen".into(), "--mode".into(), "vae".into()], strength: 3.0, timeout_secs: 30 },
        ];
        let s = serde_json::to_string(&attacks).unwrap();
        let back: Vec<Attack> = serde_json::from_str(&s).unwrap();
        assert_eq!(attacks, back);
        let parsed: Attack = serde_json::from_str(r#"{"kind":"gaussian-noise","std":5}"#).unwrap();
        assert_eq!(parsed, Attack::GaussianNoise { std: 5.0 });
        assert_eq!(parsed.label(), "gaussian-noise");
        assert_eq!(back[3].label(), "regen-tv");
    }

    fn mean_psnr(imgs: &[Image], attack: &Attack) -> f64 {
        imgs.iter()
            .enumerate()
            .map(|(i, x)| psnr(x, &apply_attack(x, attack, RngState::new(3, i as u64)).unwrap()).unwrap())
            .sum::<f64>()
            / imgs.len() as f64
    }

    #[test]
    fn strength_monotonicity() {
        let imgs: Vec<Image> = (0..4).map(|s| synthetic_image(s, 40, 40, SyntheticKind::SmoothNoise).unwrap()).collect();
        let decreasing = |grid: Vec<Attack>| {
            let ps: Vec<f64> = grid.iter().map(|a| mean_psnr(&imgs, a)).collect();
            ps.windows(2).all(|w| w[1] <= w[0] + 1e-9)
        };
        assert!(decreasing([5.0, 10.0, 15.0, 20.0, 25.0, 30.0].map(|std| Attack::GaussianNoise { std }).to_vec()));
        assert!(decreasing([2.0, 4.0, 6.0, 8.0, 10.0, 12.0].map(|radius| Attack::GaussianBlur { radius }).to_vec()));
        assert!(decreasing([1.0, 2.0, 4.0, 6.0, 8.0, 12.0].map(|factor| Attack::Brightness { factor }).to_vec()));
        assert!(decreasing([100, 60, 50, 40, 30, 20, 10].map(|quality| Attack::Jpeg { quality }).to_vec()));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn attacks_preserve_shape_and_range(seed in 0u64..1000, which in 0usize..8, s in 0.0f64..1.0) {
            let x = synthetic_image(seed, 17, 13, SyntheticKind::SmoothNoise).unwrap();
            let attack = match which {
                0 => Attack::Brightness { factor: 0.2 + 4.0 * s },
                1 => Attack::Contrast { factor: 0.2 + 4.0 * s },
                2 => Attack::Jpeg { quality: 1 + (s * 99.0) as u8 },
                3 => Attack::GaussianNoise { std: 40.0 * s },
                4 => Attack::GaussianBlur { radius: 8.0 * s },
                5 => Attack::Regen { sigma: 0.3 * s, denoiser: "tv".parse().unwrap() },
                6 => Attack::Regen { sigma: 0.3 * s, denoiser: "bilateral".parse().unwrap() },
                _ => Attack::Regen { sigma: 0.3 * s, denoiser: "nlm".parse().unwrap() },
            };
            let r = RngState::new(seed, 7);
            let y = apply_attack(&x, &attack, r).unwrap();
            prop_assert!(y.same_shape(&x));
            prop_assert!(y.data().iter().all(|v| (0.0..=1.0).contains(v)));
            prop_assert_eq!(&y, &apply_attack(&x, &attack, r).unwrap());
        }
    }
}
