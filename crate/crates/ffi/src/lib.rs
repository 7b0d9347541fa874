//! C ABI over `wmlab`.
//!
//! Images cross the boundary as opaque `WmlabImage` handles created by the
//! `wmlab_image_*` constructors and released with `wmlab_image_free`.
//! Every fallible function returns a `WmlabStatus`; on failure a message is
//! available from `wmlab_last_error_message` on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use wmlab::attacks::{apply_attack, regenerate, Attack, Denoiser};
use wmlab::detection::{detect, false_positive_rate, threshold_for_alpha};
use wmlab::imagecore::{load_image, save_image, synthetic_image, SyntheticKind};
use wmlab::metrics::{psnr, ssim};
use wmlab::theory::{cwf_tradeoff, utility_delta_tilde, CwfParams, UtilityParams};
use wmlab::watermarks::{embed, EmbedConfig, Key, Message, Scheme};
use wmlab::{Error, Image, RngState};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WmlabStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Format = 4,
    Dimension = 5,
    Capacity = 6,
    Infeasible = 7,
    Plugin = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WmlabScheme {
    Lsb = 0,
    DwtDctSvd = 1,
    Additive = 2,
}

impl From<WmlabScheme> for Scheme {
    fn from(s: WmlabScheme) -> Self {
        match s {
            WmlabScheme::Lsb => Scheme::Lsb,
            WmlabScheme::DwtDctSvd => Scheme::DwtDctSvd,
            WmlabScheme::Additive => Scheme::Additive,
        }
    }
}

/// Reconstruction step of `wmlab_regenerate`, with parameters derived from sigma.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WmlabDenoiser {
    None = 0,
    Tv = 1,
    Bilateral = 2,
    Nlm = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct WmlabDetection {
    pub matched: u32,
    pub k: u32,
    pub tau: u32,
    pub p_value: f64,
    pub detected: bool,
}

/// Opaque image handle.
pub struct WmlabImage(Image);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> WmlabStatus {
    match e {
        Error::FileNotFound(_) | Error::Write { .. } | Error::Io(_) => WmlabStatus::Io,
        Error::UnsupportedFormat(_) | Error::CorruptImage(_) | Error::Codec(_) | Error::Json(_) => WmlabStatus::Format,
        Error::DimensionMismatch(_) | Error::ChannelCount { .. } | Error::LengthMismatch(..) => WmlabStatus::Dimension,
        Error::CapacityExceeded { .. } => WmlabStatus::Capacity,
        Error::Infeasible(_) => WmlabStatus::Infeasible,
        Error::Plugin(_) | Error::PluginTimeout(_) => WmlabStatus::Plugin,
        _ => WmlabStatus::InvalidArgument,
    }
}

enum Fail {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> WmlabStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => WmlabStatus::Ok,
        Ok(Err(Fail::Null(what))) => {
            set_last_error(format!("{what} is null"));
            WmlabStatus::NullPointer
        }
        Ok(Err(Fail::Lib(e))) => {
            set_last_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_last_error("internal panic".into());
            WmlabStatus::Panic
        }
    }
}

unsafe fn image_ref<'a>(p: *const WmlabImage, what: &'static str) -> Result<&'a Image, Fail> {
    p.as_ref().map(|h| &h.0).ok_or(Fail::Null(what))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail::Lib(Error::InvalidParameter(format!("{what} is not valid UTF-8"))))
}

unsafe fn put_image(out: *mut *mut WmlabImage, img: Image) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail::Null("out"));
    }
    *out = Box::into_raw(Box::new(WmlabImage(img)));
    Ok(())
}

unsafe fn put<T>(out: *mut T, v: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail::Null("out"));
    }
    *out = v;
    Ok(())
}

fn config(scheme: WmlabScheme, strength: f64) -> EmbedConfig {
    let cfg = EmbedConfig::new(scheme.into());
    if strength > 0.0 {
        cfg.with_strength(strength)
    } else {
        cfg
    }
}

/// Message of the most recent failure on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn wmlab_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn wmlab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies `width * height * channels` interleaved samples into a new image.
/// Samples are clipped to [0, 1].
///
/// # Safety
/// `data` must point to that many readable doubles.
#[no_mangle]
pub unsafe extern "C" fn wmlab_image_new(
    width: usize,
    height: usize,
    channels: usize,
    data: *const f64,
    out: *mut *mut WmlabImage,
) -> WmlabStatus {
    guard(|| {
        if data.is_null() {
            return Err(Fail::Null("data"));
        }
        let n = width
            .checked_mul(height)
            .and_then(|v| v.checked_mul(channels))
            .ok_or_else(|| Error::InvalidParameter("image size overflows".into()))?;
        let samples = std::slice::from_raw_parts(data, n).to_vec();
        put_image(out, Image::new(width, height, channels, samples)?)
    })
}

/// Deterministic smooth-noise test image with three channels.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wmlab_image_synthetic(
    seed: u64,
    width: usize,
    height: usize,
    out: *mut *mut WmlabImage,
) -> WmlabStatus {
    guard(|| put_image(out, synthetic_image(seed, width, height, SyntheticKind::SmoothNoise)?))
}

/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wmlab_image_load(path: *const c_char, out: *mut *mut WmlabImage) -> WmlabStatus {
    guard(|| put_image(out, load_image(str_arg(path, "path")?)?))
}

/// Writes an 8-bit PNG.
///
/// # Safety
/// `img` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn wmlab_image_save(img: *const WmlabImage, path: *const c_char) -> WmlabStatus {
    guard(|| Ok(save_image(image_ref(img, "img")?, str_arg(path, "path")?)?))
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `img` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn wmlab_image_free(img: *mut WmlabImage) {
    if !img.is_null() {
        drop(Box::from_raw(img));
    }
}

/// # Safety
/// `img` must be a live handle or null (which yields 0).
#[no_mangle]
pub unsafe extern "C" fn wmlab_image_width(img: *const WmlabImage) -> usize {
    img.as_ref().map_or(0, |h| h.0.width())
}

/// # Safety
/// `img` must be a live handle or null (which yields 0).
#[no_mangle]
pub unsafe extern "C" fn wmlab_image_height(img: *const WmlabImage) -> usize {
    img.as_ref().map_or(0, |h| h.0.height())
}

/// # Safety
/// `img` must be a live handle or null (which yields 0).
#[no_mangle]
pub unsafe extern "C" fn wmlab_image_channels(img: *const WmlabImage) -> usize {
    img.as_ref().map_or(0, |h| h.0.channels())
}

/// Copies the interleaved samples into `buf`, which holds `len` doubles.
///
/// # Safety
/// `img` must be a live handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn wmlab_image_copy_data(img: *const WmlabImage, buf: *mut f64, len: usize) -> WmlabStatus {
    guard(|| {
        let img = image_ref(img, "img")?;
        if buf.is_null() {
            return Err(Fail::Null("buf"));
        }
        if len != img.len() {
            return Err(Error::LengthMismatch(len, img.len()).into());
        }
        std::slice::from_raw_parts_mut(buf, len).copy_from_slice(img.data());
        Ok(())
    })
}

/// Embeds a hex message. `strength <= 0` selects the scheme default.
///
/// # Safety
/// Pointers must be valid; `msg_hex` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn wmlab_embed(
    img: *const WmlabImage,
    scheme: WmlabScheme,
    key: u64,
    msg_hex: *const c_char,
    strength: f64,
    out: *mut *mut WmlabImage,
) -> WmlabStatus {
    guard(|| {
        let msg = Message::from_hex(str_arg(msg_hex, "msg_hex")?)?;
        let x_w = embed(image_ref(img, "img")?, &msg, &Key::new(key, scheme.into()), &config(scheme, strength))?;
        put_image(out, x_w)
    })
}

/// Additive-scheme embedding at an exact ℓ₂ distance `delta` from the cover.
///
/// # Safety
/// Pointers must be valid; `msg_hex` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn wmlab_embed_additive_exact(
    img: *const WmlabImage,
    key: u64,
    msg_hex: *const c_char,
    delta: f64,
    out: *mut *mut WmlabImage,
) -> WmlabStatus {
    guard(|| {
        let msg = Message::from_hex(str_arg(msg_hex, "msg_hex")?)?;
        let cfg = EmbedConfig::new(Scheme::Additive).with_target_delta(delta);
        put_image(out, embed(image_ref(img, "img")?, &msg, &Key::new(key, Scheme::Additive), &cfg)?)
    })
}

/// # Safety
/// Pointers must be valid; `msg_hex` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn wmlab_detect(
    img: *const WmlabImage,
    scheme: WmlabScheme,
    key: u64,
    msg_hex: *const c_char,
    strength: f64,
    alpha: f64,
    out: *mut WmlabDetection,
) -> WmlabStatus {
    guard(|| {
        let msg = Message::from_hex(str_arg(msg_hex, "msg_hex")?)?;
        let r = detect(image_ref(img, "img")?, &Key::new(key, scheme.into()), &config(scheme, strength), &msg, alpha)?;
        put(
            out,
            WmlabDetection { matched: r.matched, k: r.k, tau: r.tau, p_value: r.p_value, detected: r.detected },
        )
    })
}

/// Adds `N(0, sigma²)` noise per sample (unit scale) and denoises.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn wmlab_regenerate(
    img: *const WmlabImage,
    sigma: f64,
    denoiser: WmlabDenoiser,
    seed: u64,
    out: *mut *mut WmlabImage,
) -> WmlabStatus {
    guard(|| {
        let name = match denoiser {
            WmlabDenoiser::None => "none",
            WmlabDenoiser::Tv => "tv",
            WmlabDenoiser::Bilateral => "bilateral",
            WmlabDenoiser::Nlm => "nlm",
        };
        let d: Denoiser = name.parse()?;
        put_image(out, regenerate(image_ref(img, "img")?, sigma, &d, RngState::new(seed, 0))?)
    })
}

/// Applies an attack given as JSON, e.g. `{"kind":"jpeg","quality":50}`.
///
/// # Safety
/// Pointers must be valid; `attack_json` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn wmlab_attack_json(
    img: *const WmlabImage,
    attack_json: *const c_char,
    seed: u64,
    out: *mut *mut WmlabImage,
) -> WmlabStatus {
    guard(|| {
        let attack: Attack = serde_json::from_str(str_arg(attack_json, "attack_json")?).map_err(Error::from)?;
        put_image(out, apply_attack(image_ref(img, "img")?, &attack, RngState::new(seed, 0))?)
    })
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn wmlab_psnr(a: *const WmlabImage, b: *const WmlabImage, out: *mut f64) -> WmlabStatus {
    guard(|| put(out, psnr(image_ref(a, "a")?, image_ref(b, "b")?)?))
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn wmlab_ssim(a: *const WmlabImage, b: *const WmlabImage, out: *mut f64) -> WmlabStatus {
    guard(|| put(out, ssim(image_ref(a, "a")?, image_ref(b, "b")?)?))
}

/// Smallest match threshold with false positive rate below `alpha`;
/// `k + 1` when none qualifies.
#[no_mangle]
pub extern "C" fn wmlab_threshold_for_alpha(k: u32, alpha: f64) -> u32 {
    threshold_for_alpha(k, alpha)
}

/// `P[M > tau]` for `M ~ Binomial(k, 1/2)`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wmlab_false_positive_rate(tau: u32, k: u32, out: *mut f64) -> WmlabStatus {
    guard(|| put(out, false_positive_rate(tau, k)?))
}

/// Certified minimum Type II error at Type I error `eps1`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wmlab_cwf_tradeoff(
    eps1: f64,
    lipschitz: f64,
    delta: f64,
    sigma: f64,
    out: *mut f64,
) -> WmlabStatus {
    guard(|| put(out, cwf_tradeoff(eps1, &CwfParams::new(lipschitz, delta, sigma)?)?))
}

/// Failure probability of denoising a watermarked image.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wmlab_delta_tilde(delta_prob: f64, distance: f64, sigma: f64, out: *mut f64) -> WmlabStatus {
    guard(|| put(out, utility_delta_tilde(&UtilityParams::new(delta_prob, distance, sigma)?)?.value))
}
