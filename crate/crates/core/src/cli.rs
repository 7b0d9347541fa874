//! Command-line front end. Exit codes: 0 success, 1 usage error, 2 runtime failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::attacks::{apply_attack, Attack, Denoiser, DEFAULT_PLUGIN_TIMEOUT_SECS};
use crate::detection::{detect, empirical_roc, RocCurve};
use crate::error::{Error, Result};
use crate::harness::{emit_report, read_detection_records, run_experiment, ExperimentConfig, CorpusSpec};
use crate::imagecore::{load_image, save_image, Image};
use crate::metrics::psnr;
use crate::rng::RngState;
use crate::theory::{
    calibrate_sigma, corollary_bound, utility_delta_tilde, CwfParams, TradeoffCurve, UtilityParams,
};
use crate::watermarks::{embed, extract, measure_delta, EmbedConfig, Key, Message, Scheme};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "wmlab", version, about = "Watermark embedding, detection and removal-attack laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Embed a message and write the watermarked PNG.
    Embed(EmbedArgs),
    /// Extract k bits and print them as hex.
    Extract(ExtractArgs),
    /// Test an image for a known message; prints one JSON object.
    Detect(DetectArgs),
    /// Apply one attack to an image.
    Attack(AttackArgs),
    /// Run an experiment config and write the report files.
    Bench(BenchArgs),
    /// Evaluate the certified-removal bounds.
    Theory(TheoryArgs),
    /// Empirical ROC from detection records or from two image directories.
    Roc(RocArgs),
}

#[derive(Debug, Args)]
struct SchemeArgs {
    #[arg(long)]
    scheme: Scheme,
    #[arg(long)]
    key: u64,
    /// Scheme strength; defaults to the scheme's own default.
    #[arg(long)]
    strength: Option<f64>,
}

impl SchemeArgs {
    fn config(&self) -> EmbedConfig {
        let cfg = EmbedConfig::new(self.scheme);
        match self.strength {
            Some(s) => cfg.with_strength(s),
            None => cfg,
        }
    }

    fn key(&self) -> Key {
        Key::new(self.key, self.scheme)
    }
}

#[derive(Debug, Args)]
struct EmbedArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long = "out")]
    output: PathBuf,
    #[command(flatten)]
    scheme: SchemeArgs,
    /// Message as hex, four bits per digit.
    #[arg(long)]
    msg: String,
    /// Exact ℓ₂ embedding distance (additive scheme only).
    #[arg(long)]
    target_delta: Option<f64>,
}

#[derive(Debug, Args)]
struct ExtractArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[command(flatten)]
    scheme: SchemeArgs,
    #[arg(long, default_value_t = 32)]
    k: usize,
}

#[derive(Debug, Args)]
struct DetectArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[command(flatten)]
    scheme: SchemeArgs,
    #[arg(long)]
    msg: String,
    #[arg(long, default_value_t = 0.01)]
    alpha: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AttackName {
    Identity,
    Brightness,
    Contrast,
    Jpeg,
    GaussianNoise,
    GaussianBlur,
    Regen,
    Plugin,
}

#[derive(Debug, Args)]
struct AttackArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long = "out")]
    output: PathBuf,
    #[arg(long, value_enum)]
    kind: AttackName,
    /// Factor, quality, 8-bit noise std, blur radius, unit-scale regeneration sigma,
    /// or plugin strength, depending on the kind.
    #[arg(long, default_value_t = 0.0)]
    strength: f64,
    #[arg(long, default_value = "tv")]
    denoiser: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Plugin program followed by any extra arguments.
    #[arg(long, num_args = 1.., allow_hyphen_values = true)]
    plugin_cmd: Vec<String>,
    #[arg(long, default_value_t = DEFAULT_PLUGIN_TIMEOUT_SECS)]
    timeout: u64,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Replace the corpus with the PNG files in this directory.
    #[arg(long)]
    corpus_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TheoryMode {
    /// CSV of the certified tradeoff curve.
    Tradeoff,
    /// Utility failure inflation and its closed-form bound.
    DeltaTilde,
    /// Smallest sigma achieving a target (eps1, eps2).
    Calibrate,
}

#[derive(Debug, Args)]
struct TheoryArgs {
    #[arg(long, value_enum)]
    mode: TheoryMode,
    #[arg(long = "L", default_value_t = 1.0)]
    lipschitz: f64,
    #[arg(long, default_value_t = 1.0)]
    delta: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long, default_value_t = 100)]
    points: usize,
    /// Denoiser failure probability.
    #[arg(long, default_value_t = 1e-3)]
    delta_prob: f64,
    #[arg(long, default_value_t = 0.05)]
    eps1: f64,
    #[arg(long, default_value_t = 0.9)]
    eps2: f64,
    #[arg(long, default_value_t = 1e-6)]
    sigma_floor: f64,
}

#[derive(Debug, Args)]
struct RocArgs {
    /// `detections.jsonl` written by `bench` with ROC enabled.
    #[arg(long, conflicts_with_all = ["watermarked", "clean"])]
    records: Option<PathBuf>,
    #[arg(long, requires = "clean")]
    watermarked: Option<PathBuf>,
    #[arg(long, requires = "watermarked")]
    clean: Option<PathBuf>,
    #[arg(long)]
    scheme: Option<Scheme>,
    #[arg(long)]
    key: Option<u64>,
    #[arg(long)]
    strength: Option<f64>,
    #[arg(long)]
    msg: Option<String>,
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_RUNTIME
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<()> {
    match cmd {
        Command::Embed(a) => {
            let x = load_image(&a.input)?;
            let mut cfg = a.scheme.config();
            if let Some(d) = a.target_delta {
                cfg = cfg.with_target_delta(d);
            }
            let msg = Message::from_hex(&a.msg)?;
            let x_w = embed(&x, &msg, &a.scheme.key(), &cfg)?;
            save_image(&x_w, &a.output)?;
            let report = json!({
                "delta": measure_delta(&x, &x_w)?,
                "psnr": psnr(&x, &x_w)?,
                "k": msg.k(),
            });
            writeln!(out, "{report}")?;
        }
        Command::Extract(a) => {
            let x = load_image(&a.input)?;
            let m = extract(&x, &a.scheme.key(), &a.scheme.config(), a.k)?;
            if a.k % 4 == 0 {
                writeln!(out, "{}", m.to_hex())?;
            } else {
                writeln!(out, "{m}")?;
            }
        }
        Command::Detect(a) => {
            let x = load_image(&a.input)?;
            let msg = Message::from_hex(&a.msg)?;
            let r = detect(&x, &a.scheme.key(), &a.scheme.config(), &msg, a.alpha)?;
            writeln!(out, "{}", serde_json::to_string(&r)?)?;
        }
        Command::Attack(a) => {
            let x = load_image(&a.input)?;
            let attack = build_attack(&a)?;
            let y = apply_attack(&x, &attack, RngState::new(a.seed, 0))?;
            save_image(&y, &a.output)?;
            writeln!(out, "{}", json!({ "attack": attack.label(), "strength": attack.strength(), "psnr": psnr(&x, &y)? }))?;
        }
        Command::Bench(a) => {
            let mut cfg = ExperimentConfig::from_json_file(&a.config)?;
            if let Some(d) = a.output_dir {
                cfg.output_dir = Some(d);
            }
            if a.workers.is_some() {
                cfg.workers = a.workers;
            }
            if let Some(s) = a.seed {
                cfg.seed = s;
            }
            if let Some(al) = a.alpha {
                cfg.alpha = al;
            }
            if let Some(path) = a.corpus_dir {
                cfg.corpus = CorpusSpec::Directory { path };
            }
            let dir = cfg.output_dir.clone().ok_or_else(|| Error::invalid("no output directory given"))?;
            let report = run_experiment(&cfg)?;
            emit_report(&report, &dir)?;
            writeln!(out, "scheme,attack,strength,tpr_at_alpha,mean_psnr,n_failed")?;
            for r in &report.rows {
                writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    r.scheme,
                    r.attack,
                    r.strength,
                    opt(r.tpr_at_alpha),
                    opt(r.mean_psnr),
                    r.n_failed
                )?;
            }
        }
        Command::Theory(a) => theory(&a, out)?,
        Command::Roc(a) => roc(&a, out)?,
    }
    Ok(())
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.4}")).unwrap_or_default()
}

fn build_attack(a: &AttackArgs) -> Result<Attack> {
    let s = a.strength;
    let attack = match a.kind {
        AttackName::Identity => Attack::Identity,
        AttackName::Brightness => Attack::Brightness { factor: s },
        AttackName::Contrast => Attack::Contrast { factor: s },
        AttackName::Jpeg => {
            if s.fract() != 0.0 || !(1.0..=100.0).contains(&s) {
                return Err(Error::invalid(format!("jpeg quality must be an integer in 1..=100, got {s}")));
            }
            Attack::Jpeg { quality: s as u8 }
        }
        AttackName::GaussianNoise => Attack::GaussianNoise { std: s },
        AttackName::GaussianBlur => Attack::GaussianBlur { radius: s },
        AttackName::Regen => Attack::Regen { sigma: s, denoiser: a.denoiser.parse::<Denoiser>()? },
        AttackName::Plugin => Attack::Plugin { command: a.plugin_cmd.clone(), strength: s, timeout_secs: a.timeout },
    };
    attack.validate()?;
    Ok(attack)
}

fn theory(a: &TheoryArgs, out: &mut dyn Write) -> Result<()> {
    match a.mode {
        TheoryMode::Tradeoff => {
            let params = CwfParams::new(a.lipschitz, a.delta, a.sigma)?;
            let curve = TradeoffCurve::theoretical(&params, a.points)?;
            write!(out, "eps1,eps2,provenance\n{}", curve.csv_rows())?;
        }
        TheoryMode::DeltaTilde => {
            let params = UtilityParams::new(a.delta_prob, a.lipschitz * a.delta, a.sigma)?;
            let dt = utility_delta_tilde(&params)?;
            let report = json!({
                "delta_prob": a.delta_prob,
                "delta_tilde_dist": params.delta_tilde_dist,
                "sigma": a.sigma,
                "delta_tilde": dt.value,
                "v_star": dt.v_star,
                "corollary_bound": corollary_bound(&params),
            });
            writeln!(out, "{report}")?;
        }
        TheoryMode::Calibrate => {
            let sigma = calibrate_sigma(a.lipschitz, a.delta, a.eps1, a.eps2, a.sigma_floor)?;
            writeln!(out, "{}", json!({ "sigma": sigma, "mu": a.lipschitz * a.delta / sigma }))?;
        }
    }
    Ok(())
}

fn roc(a: &RocArgs, out: &mut dyn Write) -> Result<()> {
    writeln!(out, "attack,strength,tau,fpr,tpr")?;
    if let Some(path) = &a.records {
        let records = read_detection_records(path)?;
        let mut cells: Vec<usize> = records.iter().map(|r| r.cell).collect();
        cells.sort_unstable();
        cells.dedup();
        for c in cells {
            let recs: Vec<_> = records.iter().filter(|r| r.cell == c && r.error.is_none()).collect();
            let Some(first) = recs.first() else { continue };
            let wm: Vec<u32> = recs.iter().filter_map(|r| r.matched).collect();
            let null: Vec<u32> = recs.iter().filter_map(|r| r.null_matched).collect();
            if null.is_empty() {
                return Err(Error::invalid("records carry no null match counts; rerun bench with \"roc\": true"));
            }
            write_roc(out, &first.attack, first.strength, &RocCurve::from_counts(&wm, &null, first.k)?)?;
        }
        return Ok(());
    }
    let (Some(wm_dir), Some(clean_dir)) = (&a.watermarked, &a.clean) else {
        return Err(Error::invalid("give either --records or both --watermarked and --clean"));
    };
    let scheme = a.scheme.ok_or_else(|| Error::invalid("--scheme is required"))?;
    let key = Key::new(a.key.ok_or_else(|| Error::invalid("--key is required"))?, scheme);
    let msg = Message::from_hex(a.msg.as_deref().ok_or_else(|| Error::invalid("--msg is required"))?)?;
    let mut cfg = EmbedConfig::new(scheme);
    if let Some(s) = a.strength {
        cfg = cfg.with_strength(s);
    }
    let load = |dir: &PathBuf| -> Result<Vec<Image>> { CorpusSpec::Directory { path: dir.clone() }.load() };
    let roc = empirical_roc(&load(wm_dir)?, &load(clean_dir)?, &key, &cfg, &msg)?;
    write_roc(out, "none", 0.0, &roc)
}

fn write_roc(out: &mut dyn Write, attack: &str, strength: f64, roc: &RocCurve) -> Result<()> {
    for p in &roc.points {
        writeln!(out, "{attack},{strength},{},{},{}", p.tau, p.fpr, p.tpr)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_str(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(std::iter::once("wmlab").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run_str(&["frobnicate"]).0, EXIT_USAGE);
        assert_eq!(run_str(&[]).0, EXIT_USAGE);
        assert_eq!(run_str(&["detect", "--in", "x.png"]).0, EXIT_USAGE);
        assert_eq!(run_str(&["theory", "--mode", "sideways"]).0, EXIT_USAGE);
        assert_eq!(run_str(&["--help"]).0, EXIT_OK);
    }

    #[test]
    fn runtime_errors_exit_two() {
        let (code, _, err) = run_str(&["detect", "--in", "/nonexistent.png", "--scheme", "lsb", "--key", "1", "--msg", "ab"]);
        assert_eq!(code, EXIT_RUNTIME);
        assert!(err.contains("not found"));
        assert_eq!(run_str(&["theory", "--mode", "tradeoff", "--sigma", "0"]).0, EXIT_RUNTIME);
    }

    #[test]
    fn theory_tradeoff_csv() {
        let (code, out, _) = run_str(&["theory", "--mode", "tradeoff", "--L", "1", "--delta", "1", "--sigma", "1.16"]);
        assert_eq!(code, EXIT_OK);
        let lines: Vec<&str> = out.lines().collect();
        assert_eq!(lines[0], "eps1,eps2,provenance");
        assert_eq!(lines.len(), 102);
        assert!(lines[1].starts_with("0,1,"));
        assert!(lines[101].starts_with("1,0,"));
    }

    #[test]
    fn theory_delta_tilde_json() {
        let (code, out, _) = run_str(&["theory", "--mode", "delta-tilde", "--delta-prob", "1e-4", "--delta", "0.5", "--sigma", "1"]);
        assert_eq!(code, EXIT_OK);
        let v: serde_json::Value = serde_json::from_str(out.trim()).unwrap();
        let dt = v["delta_tilde"].as_f64().unwrap();
        assert!(dt >= 1e-4 && dt <= v["corollary_bound"].as_f64().unwrap());
    }
}
