//! Watermark schemes sharing one embed/extract contract.
//!
//! * `lsb`: message bits written into the least significant bit of the 8-bit
//!   green channel at keyed pixel positions.
//! * `dwt-dct-svd`: QIM on the largest singular value of 4×4 DCT blocks taken
//!   from the LL subband of the luma plane.
//! * `additive`: keyed antipodal chip pairs, rescaled so that the delivered
//!   image sits at an exact ℓ₂ distance from the cover.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imagecore::{l2_distance, quantize_u8, rgb_to_yuv_planes, yuv_planes_to_rgb, Image, Plane};
use crate::rng::RngState;
use crate::transforms::{block_partition, dwt_haar_forward, dwt_haar_inverse, svd_small, DctBasis, BlockGrid};

/// Size of the DCT/SVD blocks in the LL subband.
pub const DWT_BLOCK: usize = 4;

/// A k-bit payload.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Message {
    bits: Vec<bool>,
}

impl Message {
    pub fn new(bits: Vec<bool>) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::invalid("message must carry at least one bit"));
        }
        Ok(Self { bits })
    }

    /// Parses a hex string, most significant bit first; `k = 4 · len`.
    pub fn from_hex(hex: &str) -> Result<Self> {
        let hex = hex.trim().trim_start_matches("0x");
        if hex.is_empty() {
            return Err(Error::invalid("empty hex message"));
        }
        let mut bits = Vec::with_capacity(hex.len() * 4);
        for ch in hex.chars() {
            let d = ch.to_digit(16).ok_or_else(|| Error::invalid(format!("invalid hex digit {ch:?}")))?;
            bits.extend((0..4).rev().map(|i| (d >> i) & 1 == 1));
        }
        Ok(Self { bits })
    }

    /// Hex encoding; a trailing partial nibble is zero-padded.
    pub fn to_hex(&self) -> String {
        self.bits
            .chunks(4)
            .map(|nib| {
                let v = nib.iter().enumerate().fold(0u32, |acc, (i, &b)| acc | ((b as u32) << (3 - i)));
                char::from_digit(v, 16).expect("nibble")
            })
            .collect()
    }

    pub fn random(k: usize, rng: RngState) -> Result<Self> {
        let mut r = rng.rng();
        Self::new((0..k).map(|_| r.gen::<bool>()).collect())
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn k(&self) -> usize {
        self.bits.len()
    }

    pub fn complement(&self) -> Self {
        Self { bits: self.bits.iter().map(|b| !b).collect() }
    }
}

impl fmt::Display for Message {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Lsb,
    DwtDctSvd,
    Additive,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Lsb, Scheme::DwtDctSvd, Scheme::Additive];

    /// Default strength: QIM step for dwt-dct-svd, per-sample chip amplitude
    /// for additive. Ignored by lsb.
    pub fn default_strength(self) -> f64 {
        match self {
            Scheme::Lsb => 1.0,
            Scheme::DwtDctSvd => 30.0 / 255.0,
            Scheme::Additive => 0.004,
        }
    }

    fn stream_id(self) -> u64 {
        match self {
            Scheme::Lsb => 0x004c_5342,
            Scheme::DwtDctSvd => 0x4457_5444,
            Scheme::Additive => 0x0041_4444,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Lsb => "lsb",
            Scheme::DwtDctSvd => "dwt-dct-svd",
            Scheme::Additive => "additive",
        })
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lsb" => Ok(Scheme::Lsb),
            "dwt-dct-svd" | "dwtdctsvd" | "dwt_dct_svd" => Ok(Scheme::DwtDctSvd),
            "additive" => Ok(Scheme::Additive),
            _ => Err(Error::invalid(format!("unknown scheme {s:?}"))),
        }
    }
}

/// Secret material selecting carriers for one scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Key {
    pub seed: u64,
    pub scheme: Scheme,
}

impl Key {
    pub fn new(seed: u64, scheme: Scheme) -> Self {
        Self { seed, scheme }
    }

    fn rng_state(&self) -> RngState {
        RngState::new(self.seed, self.scheme.stream_id())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmbedConfig {
    pub scheme: Scheme,
    pub strength: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_delta: Option<f64>,
}

impl EmbedConfig {
    pub fn new(scheme: Scheme) -> Self {
        Self { scheme, strength: scheme.default_strength(), target_delta: None }
    }

    pub fn with_strength(mut self, strength: f64) -> Self {
        self.strength = strength;
        self
    }

    pub fn with_target_delta(mut self, delta: f64) -> Self {
        self.target_delta = Some(delta);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.strength.is_finite() && self.strength > 0.0) {
            return Err(Error::invalid(format!("strength must be positive, got {}", self.strength)));
        }
        if let Some(d) = self.target_delta {
            if self.scheme != Scheme::Additive {
                return Err(Error::invalid("target delta is only supported by the additive scheme"));
            }
            if !(d.is_finite() && d >= 0.0) {
                return Err(Error::invalid(format!("target delta must be nonnegative, got {d}")));
            }
        }
        Ok(())
    }
}

fn check_key(key: &Key, cfg: &EmbedConfig) -> Result<()> {
    cfg.validate()?;
    if key.scheme != cfg.scheme {
        return Err(Error::invalid(format!("key is for {} but config selects {}", key.scheme, cfg.scheme)));
    }
    Ok(())
}

/// Embeds `msg` into `x`. The result is clipped to `[0, 1]`.
pub fn embed(x: &Image, msg: &Message, key: &Key, cfg: &EmbedConfig) -> Result<Image> {
    check_key(key, cfg)?;
    match cfg.scheme {
        Scheme::Lsb => lsb::embed(x, msg, key),
        Scheme::DwtDctSvd => dwt::embed(x, msg, key, cfg.strength),
        Scheme::Additive => additive::embed(x, msg, key, cfg),
    }
}

/// Reads `k` bits back. Defined on every image of sufficient size.
pub fn extract(x: &Image, key: &Key, cfg: &EmbedConfig, k: usize) -> Result<Message> {
    check_key(key, cfg)?;
    if k == 0 {
        return Err(Error::invalid("k must be positive"));
    }
    let bits = match cfg.scheme {
        Scheme::Lsb => lsb::extract(x, key, k)?,
        Scheme::DwtDctSvd => dwt::extract(x, key, k, cfg.strength)?,
        Scheme::Additive => additive::extract(x, key, k)?,
    };
    Message::new(bits)
}

/// Empirical Δ: the ℓ₂ distance between cover and watermarked image.
pub fn measure_delta(x: &Image, x_w: &Image) -> Result<f64> {
    l2_distance(x, x_w)
}

fn keyed_permutation(key: &Key, n: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut key.rng_state().rng());
    idx
}

mod lsb {
    use super::*;

    fn carrier_channel(x: &Image) -> usize {
        if x.channels() == 3 {
            1
        } else {
            0
        }
    }

    fn positions(x: &Image, key: &Key, k: usize) -> Result<Vec<usize>> {
        let pixels = x.width() * x.height();
        if pixels < k {
            return Err(Error::CapacityExceeded { needed: k, available: pixels });
        }
        let mut perm = keyed_permutation(key, pixels);
        perm.truncate(k);
        Ok(perm)
    }

    pub(super) fn embed(x: &Image, msg: &Message, key: &Key) -> Result<Image> {
        let pos = positions(x, key, msg.k())?;
        let c = carrier_channel(x);
        let ch = x.channels();
        let mut data = x.data().to_vec();
        for (&p, &bit) in pos.iter().zip(msg.bits()) {
            let i = p * ch + c;
            let q = (quantize_u8(data[i]) & !1) | bit as u8;
            data[i] = q as f64 / 255.0;
        }
        Image::new(x.width(), x.height(), ch, data)
    }

    pub(super) fn extract(x: &Image, key: &Key, k: usize) -> Result<Vec<bool>> {
        let pos = positions(x, key, k)?;
        let c = carrier_channel(x);
        Ok(pos.iter().map(|&p| quantize_u8(x.data()[p * x.channels() + c]) & 1 == 1).collect())
    }
}

mod dwt {
    use super::*;

    struct Layout {
        planes: [Plane; 3],
        bands: crate::transforms::SubbandSet,
        grid: BlockGrid,
        /// carriers[i] lists the block indices voting for bit i
        carriers: Vec<Vec<usize>>,
    }

    fn layout(x: &Image, key: &Key, k: usize) -> Result<Layout> {
        if x.channels() != 3 {
            return Err(Error::ChannelCount { expected: 3, got: x.channels() });
        }
        let planes = rgb_to_yuv_planes(x)?;
        let bands = dwt_haar_forward(&planes[0])?;
        let grid = block_partition(&bands.ll, DWT_BLOCK)?;
        // blocks that lie entirely inside the LL band
        let full_x = bands.ll.width / DWT_BLOCK;
        let full_y = bands.ll.height / DWT_BLOCK;
        let usable: Vec<usize> = (0..full_y).flat_map(|j| (0..full_x).map(move |i| j * grid.blocks_x + i)).collect();
        if usable.len() < k {
            return Err(Error::CapacityExceeded { needed: k, available: usable.len() });
        }
        let reps = usable.len() / k;
        let perm = keyed_permutation(key, usable.len());
        let carriers = (0..k).map(|i| perm[i * reps..(i + 1) * reps].iter().map(|&p| usable[p]).collect()).collect();
        Ok(Layout { planes, bands, grid, carriers })
    }

    /// Position of `s` inside its QIM cell, in `[0, 1)`.
    fn cell_phase(s: f64, q: f64) -> f64 {
        let r = s / q;
        r - r.floor()
    }

    pub(super) fn embed(x: &Image, msg: &Message, key: &Key, q: f64) -> Result<Image> {
        let Layout { mut planes, mut bands, mut grid, carriers } = layout(x, key, msg.k())?;
        let dct = DctBasis::new(DWT_BLOCK)?;
        for (blocks, &bit) in carriers.iter().zip(msg.bits()) {
            for &b in blocks {
                let coeffs = dct.forward(&grid.blocks[b])?;
                let svd = svd_small(&coeffs)?;
                let s1 = svd.s[0];
                let target = q * ((s1 / q).floor() + 0.25 + 0.5 * bit as u8 as f64);
                let shift = target - s1;
                let mut modified = coeffs;
                for r in 0..DWT_BLOCK {
                    for c in 0..DWT_BLOCK {
                        modified.data[r * DWT_BLOCK + c] += shift * svd.u.at(0, r) * svd.v.at(0, c);
                    }
                }
                grid.blocks[b] = dct.inverse(&modified)?;
            }
        }
        bands.ll = crate::transforms::block_assemble(&grid)?;
        planes[0] = dwt_haar_inverse(&bands)?;
        let rgb = yuv_planes_to_rgb(&planes);
        Ok(Image::from_raw_clipped(x.width(), x.height(), 3, rgb))
    }

    pub(super) fn extract(x: &Image, key: &Key, k: usize, q: f64) -> Result<Vec<bool>> {
        let Layout { grid, carriers, .. } = layout(x, key, k)?;
        let dct = DctBasis::new(DWT_BLOCK)?;
        carriers
            .iter()
            .map(|blocks| {
                let mut votes = 0i64;
                let mut soft = 0.0;
                for &b in blocks {
                    let s1 = svd_small(&dct.forward(&grid.blocks[b])?)?.s[0];
                    let phase = cell_phase(s1, q);
                    votes += if phase >= 0.5 { 1 } else { -1 };
                    soft += phase - 0.5;
                }
                Ok(if votes != 0 { votes > 0 } else { soft >= 0.0 })
            })
            .collect()
    }
}

mod additive {
    use super::*;

    /// Horizontal sample pairs `(a, a + channels)` with a keyed chip sign,
    /// grouped per bit.
    struct Chips {
        per_bit: Vec<Vec<(usize, f64)>>,
    }

    fn chips(x: &Image, key: &Key, k: usize) -> Result<Chips> {
        let (w, h, ch) = (x.width(), x.height(), x.channels());
        let pairs_per_row = w / 2;
        let total = pairs_per_row * h * ch;
        if total < k {
            return Err(Error::CapacityExceeded { needed: k, available: total });
        }
        let per = total / k;
        let perm = keyed_permutation(key, total);
        let mut rng = key.rng_state().derive(1, 0).rng();
        let per_bit = (0..k)
            .map(|i| {
                perm[i * per..(i + 1) * per]
                    .iter()
                    .map(|&p| {
                        let c = p % ch;
                        let rest = p / ch;
                        let (px, y) = (rest % pairs_per_row, rest / pairs_per_row);
                        let a = (y * w + 2 * px) * ch + c;
                        let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                        (a, sign)
                    })
                    .collect()
            })
            .collect();
        Ok(Chips { per_bit })
    }

    fn pattern(x: &Image, chips: &Chips, msg: &Message) -> Vec<f64> {
        let ch = x.channels();
        let mut p = vec![0.0; x.len()];
        for (pairs, &bit) in chips.per_bit.iter().zip(msg.bits()) {
            let polarity = if bit { 1.0 } else { -1.0 };
            for &(a, sign) in pairs {
                p[a] += polarity * sign;
                p[a + ch] -= polarity * sign;
            }
        }
        p
    }

    fn apply(x: &Image, p: &[f64], scale: f64) -> Vec<f64> {
        x.data().iter().zip(p).map(|(v, d)| (v + scale * d).clamp(0.0, 1.0)).collect()
    }

    fn distance(x: &Image, p: &[f64], scale: f64) -> f64 {
        x.data()
            .iter()
            .zip(p)
            .map(|(v, d)| {
                let e = (v + scale * d).clamp(0.0, 1.0) - v;
                e * e
            })
            .sum::<f64>()
            .sqrt()
    }

    pub(super) fn embed(x: &Image, msg: &Message, key: &Key, cfg: &EmbedConfig) -> Result<Image> {
        let chips = chips(x, key, msg.k())?;
        let p = pattern(x, &chips, msg);
        let scale = match cfg.target_delta {
            None => cfg.strength,
            Some(delta) => solve_scale(x, &p, delta)?,
        };
        Image::new(x.width(), x.height(), x.channels(), apply(x, &p, scale))
    }

    /// Smallest scale whose clipped perturbation has ℓ₂ norm `delta`.
    fn solve_scale(x: &Image, p: &[f64], delta: f64) -> Result<f64> {
        if delta == 0.0 {
            return Ok(0.0);
        }
        let norm = p.iter().map(|v| v * v).sum::<f64>().sqrt();
        let s0 = delta / norm;
        let d0 = distance(x, p, s0);
        if (d0 - delta).abs() <= 1e-13 * delta {
            return Ok(s0);
        }
        // clipping only shrinks the perturbation, so the answer lies above s0
        let (mut lo, mut hi) = (s0, 2.0 * s0);
        let mut steps = 0;
        while distance(x, p, hi) < delta {
            lo = hi;
            hi *= 2.0;
            steps += 1;
            if steps > 64 {
                return Err(Error::Infeasible(format!("image saturates before reaching delta {delta}")));
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if distance(x, p, mid) < delta {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(hi)
    }

    pub(super) fn extract(x: &Image, key: &Key, k: usize) -> Result<Vec<bool>> {
        let chips = chips(x, key, k)?;
        let ch = x.channels();
        let d = x.data();
        Ok(chips
            .per_bit
            .iter()
            .map(|pairs| pairs.iter().map(|&(a, sign)| sign * (d[a] - d[a + ch])).sum::<f64>() > 0.0)
            .collect())
    }
}
