//! Image representation, color conversion, PNG I/O and the synthetic corpus.
//!
//! Samples live in `[0, 1]` as `f64`; 8-bit quantization only happens when
//! writing files.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use image::{DynamicImage, ImageError};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngState;

/// A raster with 1 or 3 channels, row-major and channel-interleaved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Image {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl Image {
    /// Builds an image, clipping every sample into `[0, 1]`.
    pub fn new(width: usize, height: usize, channels: usize, mut data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("image dimensions must be positive"));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::invalid(format!("unsupported channel count {channels}")));
        }
        if data.len() != width * height * channels {
            return Err(Error::DimensionMismatch(format!(
                "{}x{}x{} needs {} samples, got {}",
                width,
                height,
                channels,
                width * height * channels,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        clip_in_place(&mut data);
        Ok(Self { width, height, channels, data })
    }

    /// Image with every sample equal to `value` (clipped).
    pub fn filled(width: usize, height: usize, channels: usize, value: f64) -> Result<Self> {
        Self::new(width, height, channels, vec![value; width * height * channels])
    }

    pub(crate) fn from_raw_clipped(width: usize, height: usize, channels: usize, mut data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), width * height * channels);
        for v in data.iter_mut() {
            *v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
        }
        Self { width, height, channels, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    pub fn same_shape(&self, other: &Image) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }

    pub(crate) fn check_shape(&self, other: &Image) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::DimensionMismatch(format!(
                "{}x{}x{} vs {}x{}x{}",
                self.width, self.height, self.channels, other.width, other.height, other.channels
            )))
        }
    }

    /// Copies one channel out as a plane.
    pub fn channel(&self, c: usize) -> Plane {
        assert!(c < self.channels, "channel {c} out of range");
        let data = self.data.iter().skip(c).step_by(self.channels).copied().collect();
        Plane { width: self.width, height: self.height, data }
    }

    /// Reassembles an image from per-channel planes, clipping to `[0, 1]`.
    pub fn from_planes(planes: &[Plane]) -> Result<Self> {
        let first = planes.first().ok_or_else(|| Error::invalid("no planes"))?;
        let (w, h) = (first.width, first.height);
        if planes.iter().any(|p| p.width != w || p.height != h) {
            return Err(Error::DimensionMismatch("planes differ in size".into()));
        }
        let channels = planes.len();
        let mut data = vec![0.0; w * h * channels];
        for (c, p) in planes.iter().enumerate() {
            for (i, v) in p.data.iter().enumerate() {
                data[i * channels + c] = *v;
            }
        }
        Self::new(w, h, channels, data)
    }

    /// Applies `f` to every sample and clips the result.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Image {
        let data = self.data.iter().map(|&v| f(v)).collect();
        Image::from_raw_clipped(self.width, self.height, self.channels, data)
    }

    /// Luma plane: the channel itself for grayscale, BT.601 Y for color.
    pub fn luma(&self) -> Plane {
        if self.channels == 1 {
            return self.channel(0);
        }
        let data = self
            .data
            .chunks_exact(3)
            .map(|p| KR * p[0] + KG * p[1] + KB * p[2])
            .collect();
        Plane { width: self.width, height: self.height, data }
    }
}

fn clip_in_place(data: &mut [f64]) {
    for v in data.iter_mut() {
        *v = v.clamp(0.0, 1.0);
    }
}

/// Single-channel real-valued workspace; values are unbounded.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl Plane {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "plane {}x{} needs {} values, got {}",
                width,
                height,
                width * height,
                data.len()
            )));
        }
        Ok(Self { width, height, data })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self { width, height, data: vec![0.0; width * height] }
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.data[y * self.width + x] = v;
    }

    pub fn energy(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }
}

/// Reads an 8- or 16-bit PNG, scaling samples by the bit-depth maximum.
/// Alpha channels are dropped.
pub fn load_image(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::FileNotFound(path.to_path_buf()));
    }
    let reader = image::ImageReader::open(path)?
        .with_guessed_format()
        .map_err(|e| Error::CorruptImage(e.to_string()))?;
    match reader.format() {
        Some(image::ImageFormat::Png) => {}
        Some(other) => return Err(Error::UnsupportedFormat(format!("{other:?}"))),
        None => return Err(Error::UnsupportedFormat("unrecognized file signature".into())),
    }
    let decoded = reader.decode().map_err(|e| match e {
        ImageError::Unsupported(u) => Error::UnsupportedFormat(u.to_string()),
        other => Error::CorruptImage(other.to_string()),
    })?;
    from_dynamic(decoded)
}

pub(crate) fn from_dynamic(img: DynamicImage) -> Result<Image> {
    let (w, h) = (img.width() as usize, img.height() as usize);
    match img {
        DynamicImage::ImageLuma8(b) => {
            Image::new(w, h, 1, b.into_raw().into_iter().map(|v| v as f64 / 255.0).collect())
        }
        DynamicImage::ImageLumaA8(_) => {
            let b = img.to_luma8();
            Image::new(w, h, 1, b.into_raw().into_iter().map(|v| v as f64 / 255.0).collect())
        }
        DynamicImage::ImageLuma16(b) => {
            Image::new(w, h, 1, b.into_raw().into_iter().map(|v| v as f64 / 65535.0).collect())
        }
        DynamicImage::ImageLumaA16(_) => {
            let b = img.to_luma16();
            Image::new(w, h, 1, b.into_raw().into_iter().map(|v| v as f64 / 65535.0).collect())
        }
        DynamicImage::ImageRgb16(b) => {
            Image::new(w, h, 3, b.into_raw().into_iter().map(|v| v as f64 / 65535.0).collect())
        }
        DynamicImage::ImageRgba16(_) => {
            let b = img.to_rgb16();
            Image::new(w, h, 3, b.into_raw().into_iter().map(|v| v as f64 / 65535.0).collect())
        }
        other => {
            let b = other.to_rgb8();
            Image::new(w, h, 3, b.into_raw().into_iter().map(|v| v as f64 / 255.0).collect())
        }
    }
}

/// Quantizes a sample to a byte, rounding half away from zero.
#[inline]
pub fn quantize_u8(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

pub(crate) fn to_bytes(img: &Image) -> Vec<u8> {
    img.data.iter().map(|&v| quantize_u8(v)).collect()
}

/// Writes an 8-bit PNG.
pub fn save_image(img: &Image, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let color = if img.channels == 1 { image::ExtendedColorType::L8 } else { image::ExtendedColorType::Rgb8 };
    image::save_buffer_with_format(
        path,
        &to_bytes(img),
        img.width as u32,
        img.height as u32,
        color,
        image::ImageFormat::Png,
    )
    .map_err(|e| Error::Write { path: path.to_path_buf(), reason: e.to_string() })
}

/// Rounds every sample to the nearest 8-bit level, as a PNG save/load would.
pub fn quantize_8bit(img: &Image) -> Image {
    img.map(|v| quantize_u8(v) as f64 / 255.0)
}

const KR: f64 = 0.299;
const KG: f64 = 0.587;
const KB: f64 = 0.114;

/// Unclipped BT.601 full-range conversion. U and V are centered on zero.
pub fn rgb_to_yuv_planes(img: &Image) -> Result<[Plane; 3]> {
    if img.channels != 3 {
        return Err(Error::ChannelCount { expected: 3, got: img.channels });
    }
    let n = img.width * img.height;
    let (mut y, mut u, mut v) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    for (i, p) in img.data.chunks_exact(3).enumerate() {
        let yy = KR * p[0] + KG * p[1] + KB * p[2];
        y[i] = yy;
        u[i] = (p[2] - yy) / (2.0 * (1.0 - KB));
        v[i] = (p[0] - yy) / (2.0 * (1.0 - KR));
    }
    let (w, h) = (img.width, img.height);
    Ok([Plane { width: w, height: h, data: y }, Plane { width: w, height: h, data: u }, Plane {
        width: w,
        height: h,
        data: v,
    }])
}

/// Inverse of [`rgb_to_yuv_planes`]; output is not clipped.
pub fn yuv_planes_to_rgb(planes: &[Plane; 3]) -> Vec<f64> {
    let [y, u, v] = planes;
    let mut out = Vec::with_capacity(y.data.len() * 3);
    for i in 0..y.data.len() {
        let (yy, uu, vv) = (y.data[i], u.data[i], v.data[i]);
        let r = yy + 2.0 * (1.0 - KR) * vv;
        let b = yy + 2.0 * (1.0 - KB) * uu;
        let g = (yy - KR * r - KB * b) / KG;
        out.extend_from_slice(&[r, g, b]);
    }
    out
}

/// RGB to YUV as an image. U and V are offset by 0.5 so they fit in `[0, 1]`.
pub fn rgb_to_yuv(img: &Image) -> Result<Image> {
    let [y, u, v] = rgb_to_yuv_planes(img)?;
    let mut data = Vec::with_capacity(img.data.len());
    for i in 0..y.data.len() {
        data.extend_from_slice(&[y.data[i], u.data[i] + 0.5, v.data[i] + 0.5]);
    }
    Ok(Image::from_raw_clipped(img.width, img.height, 3, data))
}

pub fn yuv_to_rgb(img: &Image) -> Result<Image> {
    if img.channels != 3 {
        return Err(Error::ChannelCount { expected: 3, got: img.channels });
    }
    let y = img.channel(0);
    let mut u = img.channel(1);
    let mut v = img.channel(2);
    u.data.iter_mut().for_each(|s| *s -= 0.5);
    v.data.iter_mut().for_each(|s| *s -= 0.5);
    let rgb = yuv_planes_to_rgb(&[y, u, v]);
    Ok(Image::from_raw_clipped(img.width, img.height, 3, rgb))
}

/// Euclidean norm of the sample-wise difference.
pub fn l2_distance(a: &Image, b: &Image) -> Result<f64> {
    a.check_shape(b)?;
    Ok(a.data.iter().zip(&b.data).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt())
}

/// Kinds of generated test images.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyntheticKind {
    /// Vertical ramp starting at 0 on row 0, with a seeded per-channel tint.
    Gradient,
    /// Two seeded colors alternating in square cells.
    Checker { cell: usize },
    /// Low-pass filtered random texture.
    SmoothNoise,
}

impl fmt::Display for SyntheticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SyntheticKind::Gradient => f.write_str("gradient"),
            SyntheticKind::Checker { cell } if *cell == 4 => f.write_str("checker"),
            SyntheticKind::Checker { cell } => write!(f, "checker:{cell}"),
            SyntheticKind::SmoothNoise => f.write_str("smooth-noise"),
        }
    }
}

impl FromStr for SyntheticKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gradient" => Ok(SyntheticKind::Gradient),
            "checker" => Ok(SyntheticKind::Checker { cell: 4 }),
            "smooth-noise" | "smooth_noise" => Ok(SyntheticKind::SmoothNoise),
            _ => {
                if let Some(cell) = s.strip_prefix("checker:") {
                    let cell: usize = cell.parse().map_err(|_| Error::invalid(format!("bad checker cell in {s:?}")))?;
                    if cell == 0 {
                        return Err(Error::invalid("checker cell must be positive"));
                    }
                    Ok(SyntheticKind::Checker { cell })
                } else {
                    Err(Error::invalid(format!("unknown synthetic kind {s:?}")))
                }
            }
        }
    }
}

impl Serialize for SyntheticKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for SyntheticKind {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Deterministic 3-channel test image for `(seed, kind, width, height)`.
pub fn synthetic_image(seed: u64, width: usize, height: usize, kind: SyntheticKind) -> Result<Image> {
    if width == 0 || height == 0 {
        return Err(Error::invalid("synthetic image dimensions must be positive"));
    }
    let mut rng = RngState::new(seed, 0x5157_4e54).rng();
    let n = width * height;
    let mut data = vec![0.0; n * 3];
    match kind {
        SyntheticKind::Gradient => {
            let tint: [f64; 3] = [rng.gen_range(0.5..1.0), rng.gen_range(0.5..1.0), rng.gen_range(0.5..1.0)];
            let slope: [f64; 3] = [rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3)];
            for y in 0..height {
                let t = if height > 1 { y as f64 / (height - 1) as f64 } else { 0.0 };
                for x in 0..width {
                    let s = if width > 1 { x as f64 / (width - 1) as f64 - 0.5 } else { 0.0 };
                    for c in 0..3 {
                        data[(y * width + x) * 3 + c] = t * (tint[c] + slope[c] * s).clamp(0.0, 1.0);
                    }
                }
            }
        }
        SyntheticKind::Checker { cell } => {
            let cell = cell.max(1);
            let lo: [f64; 3] = [rng.gen_range(0.05..0.4), rng.gen_range(0.05..0.4), rng.gen_range(0.05..0.4)];
            let hi: [f64; 3] = [rng.gen_range(0.6..0.95), rng.gen_range(0.6..0.95), rng.gen_range(0.6..0.95)];
            for y in 0..height {
                for x in 0..width {
                    let color = if ((x / cell) + (y / cell)) % 2 == 0 { &lo } else { &hi };
                    data[(y * width + x) * 3..(y * width + x) * 3 + 3].copy_from_slice(color);
                }
            }
        }
        SyntheticKind::SmoothNoise => {
            // Shared luminance texture at two scales plus weaker chroma texture.
            let coarse = smooth_field(&mut rng, width, height, 6.0);
            let fine = smooth_field(&mut rng, width, height, 1.5);
            let mut chroma = [
                smooth_field(&mut rng, width, height, 4.0),
                smooth_field(&mut rng, width, height, 4.0),
                smooth_field(&mut rng, width, height, 4.0),
            ];
            let base: [f64; 3] = [rng.gen_range(-0.4..0.4), rng.gen_range(-0.4..0.4), rng.gen_range(-0.4..0.4)];
            for i in 0..n {
                let lum = 1.2 * coarse[i] + 0.35 * fine[i];
                for c in 0..3 {
                    let z = lum + 0.35 * std::mem::take(&mut chroma[c][i]) + base[c];
                    data[i * 3 + c] = 0.5 + 0.45 * z.tanh();
                }
            }
        }
    }
    Image::new(width, height, 3, data)
}

/// Gaussian-blurred white noise normalized to unit standard deviation.
fn smooth_field(rng: &mut impl Rng, width: usize, height: usize, sigma: f64) -> Vec<f64> {
    let noise: Vec<f64> = (0..width * height).map(|_| rng.sample(StandardNormal)).collect();
    let plane = Plane { width, height, data: noise };
    let blurred = crate::attacks::gaussian_blur_plane(&plane, sigma);
    let n = blurred.data.len() as f64;
    let mean = blurred.data.iter().sum::<f64>() / n;
    let var = blurred.data.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let sd = var.sqrt().max(1e-12);
    blurred.data.into_iter().map(|v| (v - mean) / sd).collect()
}

/// A deterministic synthetic corpus: image `i` uses seed `seed + i`.
pub fn synthetic_corpus(seed: u64, count: usize, width: usize, height: usize, kind: SyntheticKind) -> Result<Vec<Image>> {
    (0..count as u64).map(|i| synthetic_image(seed.wrapping_add(i), width, height, kind)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use proptest::prelude::*;

    fn random_rgb(seed: u64, w: usize, h: usize) -> Image {
        let mut rng = RngState::new(seed, 1).rng();
        Image::new(w, h, 3, (0..w * h * 3).map(|_| rng.gen::<f64>()).collect()).unwrap()
    }

    #[test]
    fn new_rejects_bad_shapes() {
        assert!(Image::new(2, 2, 3, vec![0.0; 11]).is_err());
        assert!(Image::new(0, 2, 1, vec![]).is_err());
        assert!(Image::new(1, 1, 2, vec![0.0; 2]).is_err());
        assert!(matches!(Image::new(1, 1, 1, vec![f64::NAN]), Err(Error::NonFinite)));
    }

    #[test]
    fn new_clips() {
        let img = Image::new(2, 1, 1, vec![-0.5, 1.5]).unwrap();
        assert_eq!(img.data(), &[0.0, 1.0]);
    }

    #[test]
    fn quantization_rule() {
        assert_eq!(quantize_u8(1.0), 255);
        assert_eq!(quantize_u8(0.0), 0);
        assert_eq!(quantize_u8(0.5), 128);
        assert_eq!(quantize_u8(0.25), 64);
    }

    #[test]
    fn png_roundtrip_within_one_level() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.png");
        let img = random_rgb(3, 16, 16);
        save_image(&img, &path).unwrap();
        let back = load_image(&path).unwrap();
        assert!(back.same_shape(&img));
        for (a, b) in img.data().iter().zip(back.data()) {
            assert!((a - b).abs() <= 1.0 / 255.0 + 1e-12);
        }
        // extremes map exactly
        let ext = Image::new(2, 1, 1, vec![0.0, 1.0]).unwrap();
        save_image(&ext, &path).unwrap();
        assert_eq!(load_image(&path).unwrap().data(), &[0.0, 1.0]);
    }

    #[test]
    fn sixteen_bit_png_is_scaled() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g16.png");
        let buf: image::ImageBuffer<image::Luma<u16>, Vec<u16>> =
            image::ImageBuffer::from_raw(2, 1, vec![0u16, 65535]).unwrap();
        buf.save(&path).unwrap();
        let img = load_image(&path).unwrap();
        assert_eq!(img.channels(), 1);
        assert_eq!(img.data(), &[0.0, 1.0]);
    }

    #[test]
    fn load_errors_are_distinct() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(load_image(dir.path().join("missing.png")), Err(Error::FileNotFound(_))));

        let bmp = dir.path().join("a.bmp");
        std::fs::write(&bmp, b"BM\x00\x00\x00\x00\x00\x00\x00\x00\x00\x00\x00\x00").unwrap();
        assert!(matches!(load_image(&bmp), Err(Error::UnsupportedFormat(_))));

        let junk = dir.path().join("junk.png");
        let mut bytes = b"\x89PNG\r\n\x1a\n".to_vec();
        bytes.extend_from_slice(&[0u8, 0, 0, 13, b'I', b'H', b'D', b'R', 1, 2, 3]);
        std::fs::write(&junk, bytes).unwrap();
        assert!(matches!(load_image(&junk), Err(Error::CorruptImage(_))));
    }

    #[test]
    fn save_to_unwritable_path_fails() {
        let img = Image::filled(2, 2, 1, 0.5).unwrap();
        let err = save_image(&img, "/nonexistent-dir/sub/x.png").unwrap_err();
        assert!(matches!(err, Error::Write { .. }));
    }

    #[test]
    fn yuv_reference_values() {
        let white = Image::filled(1, 1, 3, 1.0).unwrap();
        assert!((rgb_to_yuv(&white).unwrap().get(0, 0, 0) - 1.0).abs() < 1e-12);
        let black = Image::filled(1, 1, 3, 0.0).unwrap();
        assert_eq!(rgb_to_yuv(&black).unwrap().get(0, 0, 0), 0.0);
        let red = Image::new(1, 1, 3, vec![1.0, 0.0, 0.0]).unwrap();
        assert!((rgb_to_yuv(&red).unwrap().get(0, 0, 0) - 0.299).abs() < 1e-12);
        let gray = Image::filled(1, 1, 1, 0.5).unwrap();
        assert!(matches!(rgb_to_yuv(&gray), Err(Error::ChannelCount { .. })));
        assert!(yuv_to_rgb(&gray).is_err());
    }

    #[test]
    fn yuv_roundtrip() {
        for seed in 0..20 {
            let img = random_rgb(seed, 8, 8);
            let planes = rgb_to_yuv_planes(&img).unwrap();
            let back = yuv_planes_to_rgb(&planes);
            for (a, b) in img.data().iter().zip(&back) {
                assert!((a - b).abs() <= 1e-4);
            }
            let back_img = yuv_to_rgb(&rgb_to_yuv(&img).unwrap()).unwrap();
            for (a, b) in img.data().iter().zip(back_img.data()) {
                assert!((a - b).abs() <= 1e-4);
            }
        }
    }

    #[test]
    fn l2_examples() {
        let x = random_rgb(1, 4, 4);
        assert_eq!(l2_distance(&x, &x).unwrap(), 0.0);
        let a = Image::filled(1, 1, 1, 0.0).unwrap();
        let b = Image::filled(1, 1, 1, 0.3).unwrap();
        assert!((l2_distance(&a, &b).unwrap() - 0.3).abs() < 1e-15);
        let base = Image::filled(5, 4, 3, 0.4).unwrap();
        let shifted = base.map(|v| v + 0.1);
        assert!((l2_distance(&base, &shifted).unwrap() - 0.1 * 60f64.sqrt()).abs() < 1e-12);
        assert!(l2_distance(&a, &base).is_err());
    }

    #[test]
    fn synthetic_is_deterministic() {
        for kind in [SyntheticKind::Gradient, SyntheticKind::Checker { cell: 4 }, SyntheticKind::SmoothNoise] {
            let a = synthetic_image(11, 20, 12, kind).unwrap();
            let b = synthetic_image(11, 20, 12, kind).unwrap();
            assert_eq!(a, b);
            assert!(a.data().iter().all(|v| (0.0..=1.0).contains(v)));
        }
        let a = synthetic_image(11, 20, 12, SyntheticKind::SmoothNoise).unwrap();
        let c = synthetic_image(12, 20, 12, SyntheticKind::SmoothNoise).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn synthetic_kind_shapes() {
        let g = synthetic_image(5, 16, 16, SyntheticKind::Gradient).unwrap();
        assert!((0..16).all(|x| (0..3).all(|c| g.get(x, 0, c) == 0.0)));
        let ch = synthetic_image(5, 16, 16, SyntheticKind::Checker { cell: 4 }).unwrap();
        assert_ne!(ch.get(0, 0, 0), ch.get(4, 0, 0));
        assert!(synthetic_image(0, 0, 4, SyntheticKind::Gradient).is_err());
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("checker".parse::<SyntheticKind>().unwrap(), SyntheticKind::Checker { cell: 4 });
        assert_eq!("checker:8".parse::<SyntheticKind>().unwrap(), SyntheticKind::Checker { cell: 8 });
        assert_eq!("smooth-noise".parse::<SyntheticKind>().unwrap(), SyntheticKind::SmoothNoise);
        assert!("plaid".parse::<SyntheticKind>().is_err());
        assert!("checker:0".parse::<SyntheticKind>().is_err());
    }

    proptest! {
        #[test]
        fn l2_is_a_metric(seed in 0u64..10_000) {
            let a = random_rgb(seed, 5, 3);
            let b = random_rgb(seed + 100_000, 5, 3);
            let c = random_rgb(seed + 200_000, 5, 3);
            let ab = l2_distance(&a, &b).unwrap();
            prop_assert!((ab - l2_distance(&b, &a).unwrap()).abs() < 1e-15);
            prop_assert!(ab > 0.0);
            prop_assert!(ab <= l2_distance(&a, &c).unwrap() + l2_distance(&c, &b).unwrap() + 1e-12);
        }
    }
}
