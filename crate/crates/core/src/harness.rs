//! Embed → attack → detect sweeps and report emission.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::attacks::{apply_attack, Attack, Denoiser, DEFAULT_PLUGIN_TIMEOUT_SECS};
use crate::detection::{match_bits, p_value, threshold_for_alpha, RocCurve};
use crate::error::{Error, Result};
use crate::imagecore::{l2_distance, load_image, synthetic_corpus, Image, SyntheticKind};
use crate::metrics::{psnr, ssim};
use crate::rng::RngState;
use crate::theory::TradeoffCurve;
use crate::watermarks::{embed, extract, EmbedConfig, Key, Message, Scheme};

pub const DEFAULT_ALPHA: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CorpusSpec {
    Synthetic {
        #[serde(default = "default_count")]
        count: usize,
        #[serde(default = "default_dim")]
        width: usize,
        #[serde(default = "default_dim")]
        height: usize,
        #[serde(default)]
        seed: u64,
        #[serde(default = "default_kind")]
        kind: SyntheticKind,
    },
    /// Every `.png` file in the directory, in file-name order.
    Directory { path: PathBuf },
}

fn default_count() -> usize {
    64
}
fn default_dim() -> usize {
    128
}
fn default_kind() -> SyntheticKind {
    SyntheticKind::SmoothNoise
}

impl Default for CorpusSpec {
    fn default() -> Self {
        CorpusSpec::Synthetic {
            count: default_count(),
            width: default_dim(),
            height: default_dim(),
            seed: 0,
            kind: default_kind(),
        }
    }
}

impl CorpusSpec {
    pub fn load(&self) -> Result<Vec<Image>> {
        let corpus = match self {
            CorpusSpec::Synthetic { count, width, height, seed, kind } => {
                synthetic_corpus(*seed, *count, *width, *height, *kind)?
            }
            CorpusSpec::Directory { path } => {
                if !path.is_dir() {
                    return Err(Error::FileNotFound(path.clone()));
                }
                let mut files: Vec<PathBuf> = fs::read_dir(path)?
                    .filter_map(|e| e.ok().map(|e| e.path()))
                    .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")))
                    .collect();
                files.sort();
                files.iter().map(load_image).collect::<Result<_>>()?
            }
        };
        if corpus.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        Ok(corpus)
    }

    fn seed(&self) -> Option<u64> {
        match self {
            CorpusSpec::Synthetic { seed, .. } => Some(*seed),
            CorpusSpec::Directory { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum MessageSpec {
    Hex(String),
    Random { k: usize, seed: u64 },
}

impl MessageSpec {
    pub fn message(&self) -> Result<Message> {
        match self {
            MessageSpec::Hex(h) => Message::from_hex(h),
            MessageSpec::Random { k, seed } => Message::random(*k, RngState::new(*seed, 0)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttackKind {
    Identity,
    Brightness,
    Contrast,
    Jpeg,
    GaussianNoise,
    GaussianBlur,
    Regen,
    Plugin,
}

/// One attack family swept over a strength grid.
///
/// For `regen` the strengths are per-sample noise stds on the unit scale,
/// or multiples of each image's measured Δ when `relative_to_delta` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackGrid {
    pub kind: AttackKind,
    #[serde(default)]
    pub strengths: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub denoiser: Option<Denoiser>,
    #[serde(default, skip_serializing_if = "is_false")]
    pub relative_to_delta: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub command: Vec<String>,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
}

fn is_false(b: &bool) -> bool {
    !*b
}
fn default_timeout() -> u64 {
    DEFAULT_PLUGIN_TIMEOUT_SECS
}

impl AttackGrid {
    pub fn new(kind: AttackKind, strengths: Vec<f64>) -> Self {
        Self {
            kind,
            strengths,
            denoiser: None,
            relative_to_delta: false,
            command: Vec::new(),
            timeout_secs: default_timeout(),
        }
    }

    pub fn regen(denoiser: Denoiser, strengths: Vec<f64>, relative_to_delta: bool) -> Self {
        Self { denoiser: Some(denoiser), relative_to_delta, ..Self::new(AttackKind::Regen, strengths) }
    }

    fn grid(&self) -> Vec<f64> {
        if self.kind == AttackKind::Identity && self.strengths.is_empty() {
            vec![0.0]
        } else {
            self.strengths.clone()
        }
    }

    /// The concrete attack for one strength on an image with embedding distance `delta`.
    pub fn attack(&self, strength: f64, delta: f64) -> Result<Attack> {
        let attack = match self.kind {
            AttackKind::Identity => Attack::Identity,
            AttackKind::Brightness => Attack::Brightness { factor: strength },
            AttackKind::Contrast => Attack::Contrast { factor: strength },
            AttackKind::Jpeg => {
                if strength.fract() != 0.0 || !(1.0..=100.0).contains(&strength) {
                    return Err(Error::invalid(format!("jpeg quality must be an integer in 1..=100, got {strength}")));
                }
                Attack::Jpeg { quality: strength as u8 }
            }
            AttackKind::GaussianNoise => Attack::GaussianNoise { std: strength },
            AttackKind::GaussianBlur => Attack::GaussianBlur { radius: strength },
            AttackKind::Regen => Attack::Regen {
                sigma: if self.relative_to_delta { strength * delta } else { strength },
                denoiser: self.denoiser.clone().unwrap_or(Denoiser::None),
            },
            AttackKind::Plugin => Attack::Plugin {
                command: self.command.clone(),
                strength,
                timeout_secs: self.timeout_secs,
            },
        };
        attack.validate()?;
        Ok(attack)
    }

    /// Reporting label; regeneration grids carry the denoiser name.
    pub fn label(&self) -> String {
        let base = match self.attack(self.grid().first().copied().unwrap_or(0.0), 0.0) {
            Ok(a) => a.label(),
            Err(_) => serde_json::to_value(self.kind).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
        };
        if self.relative_to_delta {
            format!("{base}-rel")
        } else {
            base
        }
    }

    fn validate(&self) -> Result<()> {
        if self.grid().is_empty() {
            return Err(Error::invalid(format!("{} grid has no strengths", self.label())));
        }
        if self.relative_to_delta && self.kind != AttackKind::Regen {
            return Err(Error::invalid("relative_to_delta applies to regen grids only"));
        }
        for &s in &self.grid() {
            self.attack(s, 1.0)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub corpus: CorpusSpec,
    pub scheme: EmbedConfig,
    pub message: MessageSpec,
    pub key: u64,
    /// Root of every attack RNG stream.
    #[serde(default)]
    pub seed: u64,
    pub attacks: Vec<AttackGrid>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    /// Also attack the clean covers and attach per-cell ROC curves.
    #[serde(default, skip_serializing_if = "is_false")]
    pub roc: bool,
}

fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}

impl ExperimentConfig {
    pub fn new(scheme: EmbedConfig, message: MessageSpec, key: u64, attacks: Vec<AttackGrid>) -> Self {
        Self {
            corpus: CorpusSpec::default(),
            scheme,
            message,
            key,
            seed: 0,
            attacks,
            alpha: DEFAULT_ALPHA,
            output_dir: None,
            workers: None,
            roc: false,
        }
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        if !path.exists() {
            return Err(Error::FileNotFound(path.to_path_buf()));
        }
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.attacks.is_empty() {
            return Err(Error::invalid("at least one attack is required"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::invalid(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if self.workers == Some(0) {
            return Err(Error::invalid("workers must be positive"));
        }
        self.scheme.validate()?;
        self.message.message()?;
        self.attacks.iter().try_for_each(AttackGrid::validate)
    }

    /// SHA-256 of the canonical JSON encoding, output directory excluded.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output_dir = None;
        canonical.workers = None;
        let json = serde_json::to_string(&canonical).expect("config serializes");
        Sha256::digest(json.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Outcome of one (image, attack cell) unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub cell: usize,
    pub attack: String,
    pub strength: f64,
    pub image: usize,
    pub k: u32,
    pub tau: u32,
    pub delta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matched: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detected: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psnr: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ssim: Option<f64>,
    /// ℓ₂ distance between the watermarked and the attacked image.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attack_l2: Option<f64>,
    /// Match count of the attacked clean cover, when ROC curves are requested.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub null_matched: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub scheme: Scheme,
    pub attack: String,
    pub strength: f64,
    pub tpr_at_alpha: Option<f64>,
    pub mean_psnr: Option<f64>,
    pub mean_ssim: Option<f64>,
    pub mean_delta: f64,
    pub mean_attack_l2: Option<f64>,
    pub n_images: usize,
    pub n_failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellCurve {
    pub attack: String,
    pub strength: f64,
    pub roc: RocCurve,
    pub tradeoff: TradeoffCurve,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportProvenance {
    pub config_hash: String,
    pub key: u64,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corpus_seed: Option<u64>,
    pub alpha: f64,
    pub k: u32,
    pub tau: u32,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub rows: Vec<ReportRow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub curves: Vec<CellCurve>,
    pub provenance: ReportProvenance,
    #[serde(skip)]
    pub records: Vec<DetectionRecord>,
}

impl ExperimentReport {
    pub fn row(&self, attack: &str, strength: f64) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.attack == attack && r.strength == strength)
    }

    pub fn failed_cells(&self) -> usize {
        self.rows.iter().filter(|r| r.n_failed > 0).count()
    }
}

struct Cell {
    grid: usize,
    label: String,
    strength: f64,
}

struct Embedded {
    x_w: Image,
    delta: f64,
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    match cfg.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::invalid(format!("cannot build worker pool: {e}")))?
            .install(|| run_inner(cfg)),
        None => run_inner(cfg),
    }
}

fn run_inner(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let corpus = cfg.corpus.load()?;
    let msg = cfg.message.message()?;
    let key = Key::new(cfg.key, cfg.scheme.scheme);
    let k = msg.k() as u32;
    let tau = threshold_for_alpha(k, cfg.alpha);

    let embedded: Vec<Embedded> = corpus
        .par_iter()
        .map(|x| {
            let x_w = embed(x, &msg, &key, &cfg.scheme)?;
            let delta = l2_distance(x, &x_w)?;
            Ok(Embedded { x_w, delta })
        })
        .collect::<Result<_>>()?;

    let cells: Vec<Cell> = cfg
        .attacks
        .iter()
        .enumerate()
        .flat_map(|(g, grid)| {
            let label = grid.label();
            grid.grid().into_iter().map(move |strength| Cell { grid: g, label: label.clone(), strength })
        })
        .collect();

    let base = RngState::new(cfg.seed, 0);
    let n = corpus.len();
    let records: Vec<DetectionRecord> = (0..cells.len() * n)
        .into_par_iter()
        .map(|u| {
            let (c, i) = (u / n, u % n);
            let cell = &cells[c];
            let rng = base.derive(i as u64, c as u64);
            let mut rec = DetectionRecord {
                cell: c,
                attack: cell.label.clone(),
                strength: cell.strength,
                image: i,
                k,
                tau,
                delta: embedded[i].delta,
                matched: None,
                p_value: None,
                detected: None,
                psnr: None,
                ssim: None,
                attack_l2: None,
                null_matched: None,
                error: None,
            };
            let outcome = run_unit(cfg, &cfg.attacks[cell.grid], cell.strength, &corpus[i], &embedded[i], &key, &msg, rng);
            match outcome {
                Ok(u) => {
                    rec.matched = Some(u.matched);
                    rec.p_value = Some(p_value(u.matched, k));
                    rec.detected = Some(u.matched >= tau);
                    rec.psnr = Some(u.psnr);
                    rec.ssim = Some(u.ssim);
                    rec.attack_l2 = Some(u.attack_l2);
                    rec.null_matched = u.null_matched;
                }
                Err(e) => rec.error = Some(e.to_string()),
            }
            rec
        })
        .collect();

    let mean_delta = embedded.iter().map(|e| e.delta).sum::<f64>() / n as f64;
    let mut rows = Vec::with_capacity(cells.len());
    let mut curves = Vec::new();
    for (c, cell) in cells.iter().enumerate() {
        let recs = &records[c * n..(c + 1) * n];
        let ok: Vec<&DetectionRecord> = recs.iter().filter(|r| r.error.is_none()).collect();
        let mean = |f: &dyn Fn(&DetectionRecord) -> f64| {
            (!ok.is_empty()).then(|| ok.iter().map(|r| f(r)).sum::<f64>() / ok.len() as f64)
        };
        rows.push(ReportRow {
            scheme: cfg.scheme.scheme,
            attack: cell.label.clone(),
            strength: cell.strength,
            tpr_at_alpha: mean(&|r| if r.detected == Some(true) { 1.0 } else { 0.0 }),
            mean_psnr: mean(&|r| r.psnr.unwrap_or(f64::NAN)),
            mean_ssim: mean(&|r| r.ssim.unwrap_or(f64::NAN)),
            mean_delta,
            mean_attack_l2: mean(&|r| r.attack_l2.unwrap_or(f64::NAN)),
            n_images: n,
            n_failed: n - ok.len(),
        });
        if cfg.roc && !ok.is_empty() {
            let wm: Vec<u32> = ok.iter().filter_map(|r| r.matched).collect();
            let null: Vec<u32> = ok.iter().filter_map(|r| r.null_matched).collect();
            let roc = RocCurve::from_counts(&wm, &null, k)?;
            let tradeoff = TradeoffCurve::from_roc(&roc);
            curves.push(CellCurve { attack: cell.label.clone(), strength: cell.strength, roc, tradeoff });
        }
    }

    Ok(ExperimentReport {
        rows,
        curves,
        provenance: ReportProvenance {
            config_hash: cfg.hash(),
            key: cfg.key,
            seed: cfg.seed,
            corpus_seed: cfg.corpus.seed(),
            alpha: cfg.alpha,
            k,
            tau,
            version: env!("CARGO_PKG_VERSION").to_string(),
        },
        records,
    })
}

struct UnitOutcome {
    matched: u32,
    psnr: f64,
    ssim: f64,
    attack_l2: f64,
    null_matched: Option<u32>,
}

#[allow(clippy::too_many_arguments)]
fn run_unit(
    cfg: &ExperimentConfig,
    grid: &AttackGrid,
    strength: f64,
    x: &Image,
    e: &Embedded,
    key: &Key,
    msg: &Message,
    rng: RngState,
) -> Result<UnitOutcome> {
    let attack = grid.attack(strength, e.delta)?;
    let attacked = apply_attack(&e.x_w, &attack, rng)?;
    let matched = match_bits(msg, &extract(&attacked, key, &cfg.scheme, msg.k())?)? as u32;
    let null_matched = if cfg.roc {
        let clean = apply_attack(x, &attack, rng.derive(u64::MAX, 0))?;
        Some(match_bits(msg, &extract(&clean, key, &cfg.scheme, msg.k())?)? as u32)
    } else {
        None
    };
    Ok(UnitOutcome {
        matched,
        psnr: psnr(x, &attacked)?,
        ssim: ssim(x, &attacked)?,
        attack_l2: l2_distance(&e.x_w, &attacked)?,
        null_matched,
    })
}

/// TPR of one cell recomputed from detection records.
pub fn tpr_from_records(records: &[DetectionRecord], cell: usize) -> Option<f64> {
    let ok: Vec<&DetectionRecord> = records.iter().filter(|r| r.cell == cell && r.error.is_none()).collect();
    if ok.is_empty() {
        return None;
    }
    let hits = ok.iter().filter(|r| r.matched.is_some_and(|m| m >= r.tau)).count();
    Some(hits as f64 / ok.len() as f64)
}

pub const REPORT_CSV: &str = "report.csv";
pub const REPORT_JSON: &str = "report.json";
pub const TRADEOFF_SVG: &str = "tradeoff.svg";
pub const ROC_CSV: &str = "roc.csv";
pub const DETECTIONS_JSONL: &str = "detections.jsonl";

/// Writes the report files into `dir`, creating it if needed.
pub fn emit_report(report: &ExperimentReport, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::Write { path: dir.to_path_buf(), reason: e.to_string() })?;
    let mut written = Vec::new();

    let path = dir.join(REPORT_CSV);
    let mut w = csv::Writer::from_path(&path).map_err(|e| write_err(&path, e))?;
    for row in &report.rows {
        w.serialize(row).map_err(|e| write_err(&path, e))?;
    }
    w.flush()?;
    written.push(path);

    let path = dir.join(REPORT_JSON);
    fs::write(&path, serde_json::to_string_pretty(report)? + "\n")?;
    written.push(path);

    let path = dir.join(TRADEOFF_SVG);
    fs::write(&path, tradeoff_svg(&report.rows))?;
    written.push(path);

    if !report.curves.is_empty() {
        let path = dir.join(ROC_CSV);
        let mut w = csv::Writer::from_path(&path).map_err(|e| write_err(&path, e))?;
        w.write_record(["attack", "strength", "tau", "fpr", "tpr"]).map_err(|e| write_err(&path, e))?;
        for c in &report.curves {
            for p in &c.roc.points {
                w.write_record([
                    c.attack.clone(),
                    c.strength.to_string(),
                    p.tau.to_string(),
                    p.fpr.to_string(),
                    p.tpr.to_string(),
                ])
                .map_err(|e| write_err(&path, e))?;
            }
        }
        w.flush()?;
        written.push(path);
    }

    let path = dir.join(DETECTIONS_JSONL);
    let mut f = std::io::BufWriter::new(fs::File::create(&path)?);
    for r in &report.records {
        serde_json::to_writer(&mut f, r)?;
        f.write_all(b"\n")?;
    }
    f.flush()?;
    written.push(path);
    Ok(written)
}

fn write_err(path: &Path, e: impl ToString) -> Error {
    Error::Write { path: path.to_path_buf(), reason: e.to_string() }
}

pub fn read_detection_records(path: impl AsRef<Path>) -> Result<Vec<DetectionRecord>> {
    fs::read_to_string(path)?
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| Ok(serde_json::from_str(l)?))
        .collect()
}

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

/// TPR against mean PSNR, one connected marker series per attack family.
pub fn tradeoff_svg(rows: &[ReportRow]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 420.0;
    const L: f64 = 60.0;
    const R: f64 = 170.0;
    const T: f64 = 20.0;
    const B: f64 = 50.0;
    let points: Vec<(&str, f64, f64)> = rows
        .iter()
        .filter_map(|r| Some((r.attack.as_str(), r.mean_psnr?, r.tpr_at_alpha?)))
        .collect();
    let (mut lo, mut hi) = points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.1), b.max(p.1)));
    if !lo.is_finite() {
        (lo, hi) = (0.0, 50.0);
    }
    lo = (lo / 5.0).floor() * 5.0;
    hi = ((hi / 5.0).ceil() * 5.0).max(lo + 5.0);
    let sx = |v: f64| L + (v - lo) / (hi - lo) * (W - L - R);
    let sy = |v: f64| H - B - v * (H - T - B);

    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\" font-family=\"sans-serif\" font-size=\"11\">\n"
    );
    s += &format!("<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n");
    s += &format!(
        "<rect x=\"{L}\" y=\"{T}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n",
        W - L - R,
        H - T - B
    );
    let ticks = ((hi - lo) / 5.0).round() as usize;
    for i in 0..=ticks {
        let v = lo + 5.0 * i as f64;
        s += &format!("<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{v}</text>\n", sx(v), H - B + 16.0);
    }
    for i in 0..=4 {
        let v = i as f64 / 4.0;
        s += &format!("<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{v:.2}</text>\n", L - 6.0, sy(v) + 4.0);
    }
    s += &format!("<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">PSNR (dB)</text>\n", sx((lo + hi) / 2.0), H - 12.0);
    s += &format!(
        "<text x=\"16\" y=\"{:.2}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.2})\">TPR@FPR</text>\n",
        sy(0.5),
        sy(0.5)
    );

    let mut families: Vec<&str> = Vec::new();
    for p in &points {
        if !families.contains(&p.0) {
            families.push(p.0);
        }
    }
    for (fi, fam) in families.iter().enumerate() {
        let color = PALETTE[fi % PALETTE.len()];
        let series: Vec<(f64, f64)> = points.iter().filter(|p| p.0 == *fam).map(|p| (sx(p.1), sy(p.2))).collect();
        let path: Vec<String> = series.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        s += &format!("<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\"/>\n", path.join(" "));
        for (x, y) in &series {
            s += &format!("<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"3.5\" fill=\"{color}\"/>\n");
        }
        let ly = T + 14.0 + 18.0 * fi as f64;
        s += &format!("<circle cx=\"{:.2}\" cy=\"{ly:.2}\" r=\"3.5\" fill=\"{color}\"/>\n", W - R + 16.0);
        s += &format!("<text x=\"{:.2}\" y=\"{:.2}\">{}</text>\n", W - R + 26.0, ly + 4.0, xml_escape(fam));
    }
    s += "</svg>\n";
    s
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
