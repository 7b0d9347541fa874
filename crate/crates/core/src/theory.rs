//! Certified-removal numerics.
//!
//! After an attack `A(φ(x) + N(0, σ²I))`, telling a watermarked input from its
//! clean original is at least as hard as telling `N(0, 1)` from `N(μ, 1)` with
//! `μ = L·Δ/σ`. Every detector's Type II error is then bounded below by the
//! Gaussian tradeoff `f(ε₁) = Φ(Φ⁻¹(1 − ε₁) − μ)`. The utility side bounds the
//! failure probability `δ̃` of denoising the watermarked image in terms of the
//! clean failure probability `δ`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::detection::RocCurve;
use crate::error::{Error, Result};
use crate::imagecore::Image;
use crate::rng::RngState;
use crate::transforms::DctBasis;

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Standard normal quantile (Wichura's AS 241) polished by one Newton step.
pub fn normal_cdf_inv(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid(format!("normal quantile needs p in (0, 1), got {p}")));
    }
    let z = as241(p);
    let err = normal_cdf(z) - p;
    let pdf = normal_pdf(z);
    Ok(if pdf > 0.0 { z - err / pdf } else { z })
}

#[allow(clippy::excessive_precision)]
fn as241(p: f64) -> f64 {
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        return q
            * (((((((2.509_080_928_730_122_7e3 * r + 3.343_057_558_358_812_8e4) * r + 6.726_577_092_700_870_1e4) * r
                + 4.592_195_393_154_987_1e4)
                * r
                + 1.373_169_376_550_946e4)
                * r
                + 1.971_590_950_306_551_3e3)
                * r
                + 1.331_416_678_917_843_8e2)
                * r
                + 3.387_132_872_796_366_5)
            / (((((((5.226_495_278_852_545_4e3 * r + 2.872_908_573_572_194_3e4) * r + 3.930_789_580_009_271e4)
                * r
                + 2.121_379_430_158_659_7e4)
                * r
                + 5.394_196_021_424_751e3)
                * r
                + 6.871_870_074_920_579e2)
                * r
                + 4.231_333_070_160_091_2e1)
                * r
                + 1.0);
    }
    let r = if q < 0.0 { p } else { 1.0 - p };
    let r = (-r.ln()).sqrt();
    let val = if r <= 5.0 {
        let r = r - 1.6;
        (((((((7.745_450_142_783_414e-4 * r + 2.272_384_498_926_918_4e-2) * r + 2.417_807_251_774_506e-1) * r
            + 1.270_458_252_452_368_4)
            * r
            + 3.647_848_324_763_204_5)
            * r
            + 5.769_497_221_460_691)
            * r
            + 4.630_337_846_156_546)
            * r
            + 1.423_437_110_749_683_5)
            / (((((((1.050_750_071_644_416_9e-9 * r + 5.475_938_084_995_345e-4) * r + 1.519_866_656_361_645_7e-2)
                * r
                + 1.481_039_764_274_800_8e-1)
                * r
                + 6.897_673_349_851e-1)
                * r
                + 1.676_384_830_183_803_8)
                * r
                + 2.053_191_626_637_759)
                * r
                + 1.0)
    } else {
        let r = r - 5.0;
        (((((((2.010_334_399_292_288_1e-7 * r + 2.711_555_568_743_487_6e-5) * r + 1.242_660_947_388_078_4e-3)
            * r
            + 2.653_218_952_657_612_4e-2)
            * r
            + 2.965_605_718_285_048_7e-1)
            * r
            + 1.784_826_539_917_291_3)
            * r
            + 5.463_784_911_164_114_4)
            * r
            + 6.657_904_643_501_103)
            / (((((((2.044_263_103_389_939_7e-15 * r + 1.421_511_758_316_446e-7) * r + 1.846_318_317_510_054_8e-5)
                * r
                + 7.868_691_311_456_132_6e-4)
                * r
                + 1.487_536_129_085_061_5e-2)
                * r
                + 1.369_298_809_227_358e-1)
                * r
                + 5.998_322_065_558_88e-1)
                * r
                + 1.0)
    };
    if q < 0.0 {
        -val
    } else {
        val
    }
}

/// Parameters of the Gaussian tradeoff bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CwfParams {
    /// Local watermark-specific Lipschitz constant of the embedding.
    pub lipschitz: f64,
    /// ℓ₂ invisibility budget in image space.
    pub delta: f64,
    /// Per-coordinate noise standard deviation in embedding space.
    pub sigma: f64,
}

impl CwfParams {
    pub fn new(lipschitz: f64, delta: f64, sigma: f64) -> Result<Self> {
        if !(lipschitz >= 0.0 && lipschitz.is_finite()) {
            return Err(Error::invalid(format!("lipschitz must be nonnegative, got {lipschitz}")));
        }
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(Error::invalid(format!("delta must be nonnegative, got {delta}")));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::invalid(format!("sigma must be positive, got {sigma}")));
        }
        Ok(Self { lipschitz, delta, sigma })
    }

    /// Shift between the two Gaussians, `L·Δ/σ`.
    pub fn mu(&self) -> f64 {
        self.lipschitz * self.delta / self.sigma
    }
}

/// Gaussian tradeoff with shift `mu`; endpoints take their limits.
pub fn gaussian_tradeoff(eps1: f64, mu: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&eps1) {
        return Err(Error::invalid(format!("type I error must lie in [0, 1], got {eps1}")));
    }
    if mu == 0.0 {
        return Ok(1.0 - eps1);
    }
    if eps1 == 0.0 {
        return Ok(1.0);
    }
    if eps1 == 1.0 {
        return Ok(0.0);
    }
    Ok(normal_cdf(normal_cdf_inv(1.0 - eps1)? - mu))
}

/// Lower bound on the Type II error of any detector after the attack.
pub fn cwf_tradeoff(eps1: f64, params: &CwfParams) -> Result<f64> {
    gaussian_tradeoff(eps1, params.mu())
}

/// Smallest σ for which the bound guarantees Type II error at least
/// `eps2_star` at Type I error `eps1_star`. Never returns less than
/// `sigma_floor`.
pub fn calibrate_sigma(lipschitz: f64, delta: f64, eps1_star: f64, eps2_star: f64, sigma_floor: f64) -> Result<f64> {
    if !(eps1_star > 0.0 && eps1_star < 1.0) || !(eps2_star > 0.0 && eps2_star < 1.0) {
        return Err(Error::invalid("target errors must lie in (0, 1)"));
    }
    if eps2_star >= 1.0 - eps1_star {
        return Err(Error::Infeasible(format!(
            "type II error {eps2_star} is unreachable at type I error {eps1_star} (limit {})",
            1.0 - eps1_star
        )));
    }
    if !(sigma_floor > 0.0) {
        return Err(Error::invalid("sigma floor must be positive"));
    }
    let scale = lipschitz * delta;
    if scale <= 0.0 {
        return Ok(sigma_floor);
    }
    let ok = |sigma: f64| -> Result<bool> { Ok(gaussian_tradeoff(eps1_star, scale / sigma)? >= eps2_star) };
    let mut hi = scale;
    while !ok(hi)? {
        hi *= 2.0;
    }
    let mut lo = hi / 2.0;
    while ok(lo)? {
        lo /= 2.0;
        if lo < f64::MIN_POSITIVE {
            return Ok(sigma_floor);
        }
    }
    while (hi - lo) > 1e-12 * hi {
        let mid = 0.5 * (lo + hi);
        if ok(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi.max(sigma_floor))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UtilityParams {
    /// Failure probability of the denoiser on the clean image.
    pub delta_prob: f64,
    /// `L·Δ`, the watermark size seen in embedding space.
    pub delta_tilde_dist: f64,
    pub sigma: f64,
    /// Denoiser error radius, carried along for reporting only.
    #[serde(default)]
    pub xi: f64,
}

impl UtilityParams {
    pub fn new(delta_prob: f64, delta_tilde_dist: f64, sigma: f64) -> Result<Self> {
        let p = Self { delta_prob, delta_tilde_dist, sigma, xi: 0.0 };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        if !(self.delta_prob > 0.0 && self.delta_prob < 1.0) {
            return Err(Error::invalid(format!("delta must lie in (0, 1), got {}", self.delta_prob)));
        }
        if !(self.delta_tilde_dist >= 0.0 && self.delta_tilde_dist.is_finite()) {
            return Err(Error::invalid("watermark distance must be nonnegative"));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::invalid("sigma must be positive"));
        }
        Ok(())
    }

    /// The objective minimized over `v`.
    pub fn objective(&self, v: f64) -> f64 {
        let r = self.delta_tilde_dist / self.sigma;
        let shift = v / r;
        let ev = v.exp();
        self.delta_prob * ev + normal_cdf(0.5 * r - shift) - ev * normal_cdf(-0.5 * r - shift)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaTilde {
    pub value: f64,
    /// Minimizer; `None` when the watermark distance is zero.
    pub v_star: Option<f64>,
}

const V_RANGE: f64 = 60.0;
const V_STEP: f64 = 0.25;

/// Failure probability of denoising the watermarked image.
pub fn utility_delta_tilde(params: &UtilityParams) -> Result<DeltaTilde> {
    params.validate()?;
    if params.delta_tilde_dist == 0.0 {
        return Ok(DeltaTilde { value: params.delta_prob, v_star: None });
    }
    let g = |v: f64| params.objective(v);
    let steps = (2.0 * V_RANGE / V_STEP) as usize;
    let (mut best_v, mut best_g) = (-V_RANGE, g(-V_RANGE));
    for i in 1..=steps {
        let v = -V_RANGE + i as f64 * V_STEP;
        let gv = g(v);
        if gv < best_g {
            best_v = v;
            best_g = gv;
        }
    }
    let (v_star, g_star) = golden_section(g, best_v - V_STEP, best_v + V_STEP, 1e-9);
    let (v_star, g_star) = if g_star <= best_g { (v_star, g_star) } else { (best_v, best_g) };
    Ok(DeltaTilde { value: g_star.clamp(0.0, 1.0), v_star: Some(v_star) })
}

fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Closed-form upper bound `exp(Δ̃²/σ²)·√δ`.
pub fn corollary_bound(params: &UtilityParams) -> f64 {
    let r = params.delta_tilde_dist / params.sigma;
    (r * r).exp() * params.delta_prob.sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Theoretical,
    MonteCarlo,
    EmpiricalDetector,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Theoretical => "theoretical",
            Provenance::MonteCarlo => "monte-carlo",
            Provenance::EmpiricalDetector => "empirical-detector",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TradeoffPoint {
    pub eps1: f64,
    pub eps2: f64,
}

/// Sequence of (Type I, Type II) pairs sorted by ascending `eps1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffCurve {
    pub points: Vec<TradeoffPoint>,
    pub provenance: Provenance,
}

impl TradeoffCurve {
    /// The bound on an `n + 1` point uniform grid over `[0, 1]`.
    pub fn theoretical(params: &CwfParams, n: usize) -> Result<Self> {
        let n = n.max(1);
        let points = (0..=n)
            .map(|i| {
                let eps1 = i as f64 / n as f64;
                Ok(TradeoffPoint { eps1, eps2: cwf_tradeoff(eps1, params)? })
            })
            .collect::<Result<_>>()?;
        Ok(Self { points, provenance: Provenance::Theoretical })
    }

    /// Detector ROC as a tradeoff curve (`eps2 = 1 − tpr`).
    pub fn from_roc(roc: &RocCurve) -> Self {
        let mut points: Vec<TradeoffPoint> =
            roc.points.iter().map(|p| TradeoffPoint { eps1: p.fpr, eps2: 1.0 - p.tpr }).collect();
        points.sort_by(|a, b| a.eps1.total_cmp(&b.eps1).then(b.eps2.total_cmp(&a.eps2)));
        Self { points, provenance: Provenance::EmpiricalDetector }
    }

    /// Enforces `eps2` nonincreasing in `eps1` by a running minimum.
    pub fn make_monotone(&mut self) {
        let mut floor = f64::INFINITY;
        for p in self.points.iter_mut() {
            floor = floor.min(p.eps2);
            p.eps2 = floor;
        }
    }

    /// Largest vertical gap to the Gaussian tradeoff with shift `mu`.
    pub fn sup_gap(&self, mu: f64) -> Result<f64> {
        let mut gap: f64 = 0.0;
        for p in &self.points {
            gap = gap.max((p.eps2 - gaussian_tradeoff(p.eps1, mu)?).abs());
        }
        Ok(gap)
    }

    /// CSV rows `eps1,eps2,provenance` without a header.
    pub fn csv_rows(&self) -> String {
        let mut s = String::new();
        for p in &self.points {
            s.push_str(&format!("{},{},{}\n", p.eps1, p.eps2, self.provenance.as_str()));
        }
        s
    }
}

pub const MIN_MC_SAMPLES: usize = 10_000;

/// Empirical tradeoff of the likelihood-ratio test between `N(0, 1)` and
/// `N(mu, 1)` from `samples` draws of each.
pub fn gaussian_pair_tradeoff_mc(mu: f64, samples: usize, rng: RngState) -> Result<TradeoffCurve> {
    if samples < MIN_MC_SAMPLES {
        return Err(Error::invalid(format!("need at least {MIN_MC_SAMPLES} samples, got {samples}")));
    }
    if !(mu >= 0.0 && mu.is_finite()) {
        return Err(Error::invalid("mu must be nonnegative"));
    }
    let mut r = rng.rng();
    // (value, is_alternative); for mu ≥ 0 the likelihood ratio is monotone in y
    let mut draws: Vec<(f64, bool)> = Vec::with_capacity(2 * samples);
    for _ in 0..samples {
        draws.push((r.sample::<f64, _>(StandardNormal), false));
    }
    for _ in 0..samples {
        draws.push((mu + r.sample::<f64, _>(StandardNormal), true));
    }
    draws.sort_by(|a, b| b.0.total_cmp(&a.0));
    let n = samples as f64;
    let (mut null_above, mut alt_above) = (0usize, 0usize);
    let mut points = vec![TradeoffPoint { eps1: 0.0, eps2: 1.0 }];
    for (_, alt) in draws {
        if alt {
            alt_above += 1;
        } else {
            null_above += 1;
        }
        points.push(TradeoffPoint { eps1: null_above as f64 / n, eps2: 1.0 - alt_above as f64 / n });
    }
    let mut curve = TradeoffCurve { points, provenance: Provenance::MonteCarlo };
    curve.make_monotone();
    Ok(curve)
}

/// A map from image space into an embedding space.
pub trait Embedding: Sync {
    fn embed(&self, x: &Image) -> Vec<f64>;
}

/// `φ(x) = x`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Identity;

impl Embedding for Identity {
    fn embed(&self, x: &Image) -> Vec<f64> {
        x.data().to_vec()
    }
}

/// `φ(x) = c·x`.
#[derive(Debug, Clone, Copy)]
pub struct Scaled(pub f64);

impl Embedding for Scaled {
    fn embed(&self, x: &Image) -> Vec<f64> {
        x.data().iter().map(|v| v * self.0).collect()
    }
}

/// Orthogonal projection onto the `keep × keep` lowest-frequency 2-D DCT
/// coefficients of every channel, expressed in coefficient coordinates.
#[derive(Debug, Clone, Copy)]
pub struct DctLowPass {
    pub keep: usize,
}

impl DctLowPass {
    /// Dimension of the subspace for an image of this shape.
    pub fn dimension(&self, x: &Image) -> usize {
        self.keep.min(x.width()) * self.keep.min(x.height()) * x.channels()
    }
}

impl Embedding for DctLowPass {
    fn embed(&self, x: &Image) -> Vec<f64> {
        let (w, h) = (x.width(), x.height());
        let (kw, kh) = (self.keep.min(w), self.keep.min(h));
        let bw = DctBasis::new(w).expect("positive width");
        let bh = DctBasis::new(h).expect("positive height");
        let mut out = Vec::with_capacity(kw * kh * x.channels());
        for c in 0..x.channels() {
            let plane = x.channel(c);
            // rows first, then columns, keeping only the low-frequency corner
            let mut rows = vec![0.0; h * kw];
            for y in 0..h {
                for u in 0..kw {
                    rows[y * kw + u] = (0..w).map(|i| bw.coefficient(u, i) * plane.data[y * w + i]).sum();
                }
            }
            for vv in 0..kh {
                for u in 0..kw {
                    out.push((0..h).map(|j| bh.coefficient(vv, j) * rows[j * kw + u]).sum());
                }
            }
        }
        out
    }
}

/// `‖φ(x_w) − φ(x)‖ / ‖x_w − x‖` for a specific watermark.
pub fn local_lipschitz_estimate(phi: &dyn Embedding, x: &Image, x_w: &Image) -> Result<f64> {
    x.check_shape(x_w)?;
    let denom = crate::imagecore::l2_distance(x, x_w)?;
    if denom == 0.0 {
        return Err(Error::invalid("watermarked image equals the original"));
    }
    let a = phi.embed(x);
    let b = phi.embed(x_w);
    let num = a.iter().zip(&b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
    Ok(num / denom)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub tau: u32,
    pub fpr: f64,
    pub tpr: f64,
    /// Theoretical minimum Type II error at this fpr.
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpossibilityReport {
    pub passed: bool,
    pub mu: f64,
    pub band: f64,
    pub violations: Vec<Violation>,
}

/// Checks that no ROC point enters the region the bound rules out:
/// `1 − tpr ≥ f(fpr) − band` at every threshold.
pub fn impossibility_check(empirical: &RocCurve, params: &CwfParams, band: f64) -> Result<ImpossibilityReport> {
    let mut violations = Vec::new();
    for p in &empirical.points {
        let bound = cwf_tradeoff(p.fpr, params)?;
        if 1.0 - p.tpr < bound - band {
            violations.push(Violation { tau: p.tau, fpr: p.fpr, tpr: p.tpr, bound });
        }
    }
    Ok(ImpossibilityReport { passed: violations.is_empty(), mu: params.mu(), band, violations })
}
