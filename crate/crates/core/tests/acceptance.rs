//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use wmlab::attacks::{regenerate, Denoiser};
use wmlab::detection::{binomial_goodness_of_fit, false_positive_rate, match_counts, threshold_for_alpha, RocCurve};
use wmlab::harness::{run_experiment, AttackGrid, AttackKind, CorpusSpec, ExperimentConfig, ExperimentReport, MessageSpec};
use wmlab::imagecore::{quantize_8bit, synthetic_corpus, Plane, SyntheticKind};
use wmlab::metrics::psnr;
use wmlab::theory::{gaussian_pair_tradeoff_mc, impossibility_check, utility_delta_tilde, CwfParams, UtilityParams};
use wmlab::transforms::{dct2_forward, dct2_inverse, dwt_haar_forward, dwt_haar_inverse, svd_small, DctBasis};
use wmlab::watermarks::{embed, measure_delta, EmbedConfig, Key, Message, Scheme};
use wmlab::RngState;

type Check = Result<String, String>;

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).unwrap()
}

/// `Φ(Φ⁻¹(1 − a) − μ)` through statrs, with the endpoint limits.
fn gaussian_tradeoff_oracle(a: f64, mu: f64) -> f64 {
    let n = std_normal();
    if a <= 0.0 {
        1.0
    } else if a >= 1.0 {
        0.0
    } else {
        n.cdf(n.inverse_cdf(1.0 - a) - mu)
    }
}

fn thresholds() -> Check {
    let (t32, t96) = (threshold_for_alpha(32, 0.01), threshold_for_alpha(96, 0.01));
    if (t32, t96) == (23, 59) {
        Ok(format!("tau(32) = {t32}, tau(96) = {t96}"))
    } else {
        Err(format!("tau(32) = {t32}, tau(96) = {t96}, expected 23 and 59"))
    }
}

/// `P[M > tau]` for `M ~ Binomial(k, 1/2)` by exact integer summation.
fn strict_tail_oracle(tau: u32, k: u32) -> f64 {
    let mut row = vec![1u128];
    for _ in 0..k {
        let mut next = vec![1u128; row.len() + 1];
        for j in 1..row.len() {
            next[j] = row[j - 1] + row[j];
        }
        row = next;
    }
    let upper: u128 = row[(tau as usize + 1).min(row.len())..].iter().sum();
    upper as f64 / 2f64.powi(k as i32)
}

fn tail_accuracy() -> Check {
    let mut worst: f64 = 0.0;
    for k in 1..=128u32 {
        for tau in 0..=k {
            let got = false_positive_rate(tau, k).map_err(|e| e.to_string())?;
            worst = worst.max((got - strict_tail_oracle(tau, k)).abs());
        }
    }
    if worst <= 1e-10 {
        Ok(format!("max abs error {worst:.2e} over k <= 128"))
    } else {
        Err(format!("max abs error {worst:.2e} exceeds 1e-10"))
    }
}

fn embedding_quality() -> Check {
    let corpus = synthetic_corpus(3_000, 64, 128, 128, SyntheticKind::SmoothNoise).map_err(|e| e.to_string())?;
    let msg = Message::random(32, RngState::new(31, 0)).unwrap();
    let key = Key::new(2024, Scheme::DwtDctSvd);
    let cfg = EmbedConfig::new(Scheme::DwtDctSvd);
    let results: Vec<(f64, bool)> = corpus
        .par_iter()
        .map(|x| {
            let x_w = quantize_8bit(&embed(x, &msg, &key, &cfg).unwrap());
            let d = wmlab::detection::detect(&x_w, &key, &cfg, &msg, 0.01).unwrap();
            (psnr(x, &x_w).unwrap(), d.detected)
        })
        .collect();
    let detected = results.iter().filter(|r| r.1).count();
    let mean_psnr = results.iter().map(|r| r.0).sum::<f64>() / results.len() as f64;
    let detail = format!("{detected}/64 detected, mean PSNR {mean_psnr:.2} dB");
    if detected == 64 && mean_psnr >= 33.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn theorem1_end_to_end() -> Check {
    let n = 200;
    let delta = 1.0;
    let ratio = 1.16;
    let corpus = synthetic_corpus(4_000, n, 64, 64, SyntheticKind::SmoothNoise).map_err(|e| e.to_string())?;
    let msg = Message::random(32, RngState::new(41, 0)).unwrap();
    let key = Key::new(77, Scheme::Additive);
    let cfg = EmbedConfig::new(Scheme::Additive).with_target_delta(delta);
    let sigma = ratio * delta;
    let denoiser: Denoiser = "tv".parse().unwrap();
    let pairs: Vec<(f64, wmlab::Image, wmlab::Image)> = corpus
        .par_iter()
        .enumerate()
        .map(|(i, x)| {
            let x_w = embed(x, &msg, &key, &cfg).unwrap();
            let d = measure_delta(x, &x_w).unwrap();
            let a_w = regenerate(&x_w, sigma, &denoiser, RngState::new(5, 2 * i as u64)).unwrap();
            let a_c = regenerate(x, sigma, &denoiser, RngState::new(5, 2 * i as u64 + 1)).unwrap();
            (d, a_w, a_c)
        })
        .collect();
    let worst_delta = pairs.iter().map(|p| (p.0 - delta).abs()).fold(0.0, f64::max);
    if worst_delta > 1e-9 {
        return Err(format!("embedding distance off by {worst_delta:.2e}"));
    }
    let attacked_w: Vec<_> = pairs.iter().map(|p| p.1.clone()).collect();
    let attacked_c: Vec<_> = pairs.iter().map(|p| p.2.clone()).collect();
    let wm = match_counts(&attacked_w, &key, &cfg, &msg).map_err(|e| e.to_string())?;
    let cl = match_counts(&attacked_c, &key, &cfg, &msg).map_err(|e| e.to_string())?;
    let roc = RocCurve::from_counts(&wm, &cl, 32).map_err(|e| e.to_string())?;

    let mu = 1.0 / ratio;
    let mut worst_margin = f64::INFINITY;
    for p in &roc.points {
        let margin = (1.0 - p.tpr) - (gaussian_tradeoff_oracle(p.fpr, mu) - 0.05);
        worst_margin = worst_margin.min(margin);
    }
    let report = impossibility_check(&roc, &CwfParams::new(1.0, delta, sigma).unwrap(), 0.05).map_err(|e| e.to_string())?;
    let tpr = roc.at_tau(threshold_for_alpha(32, 0.01)).map(|p| p.tpr).unwrap_or(0.0);
    let detail = format!(
        "min margin {worst_margin:.4} over {} thresholds, TPR@0.01 {tpr:.3}, impossibility_check {}",
        roc.points.len(),
        if report.passed { "passed" } else { "failed" }
    );
    if worst_margin >= 0.0 && report.passed {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn gaussian_pair_mc() -> Check {
    let mut parts = Vec::new();
    let mut ok = true;
    for (i, mu) in [0.5, 1.0, 2.0].into_iter().enumerate() {
        let curve = gaussian_pair_tradeoff_mc(mu, 100_000, RngState::new(99, i as u64)).map_err(|e| e.to_string())?;
        let gap = curve
            .points
            .iter()
            .map(|p| (p.eps2 - gaussian_tradeoff_oracle(p.eps1, mu)).abs())
            .fold(0.0, f64::max);
        ok &= gap <= 0.02;
        parts.push(format!("mu {mu}: gap {gap:.4}"));
    }
    if ok {
        Ok(parts.join(", "))
    } else {
        Err(parts.join(", "))
    }
}

/// Dense grid minimization of the utility objective with statrs' normal CDF.
fn delta_tilde_oracle(delta: f64, r: f64) -> f64 {
    let n = std_normal();
    let g = |v: f64| delta * v.exp() + n.cdf(0.5 * r - v / r) - v.exp() * n.cdf(-0.5 * r - v / r);
    let mut best = f64::INFINITY;
    let mut v = -40.0;
    while v <= 40.0 {
        best = best.min(g(v));
        v += 1e-3;
    }
    best.clamp(0.0, 1.0)
}

fn utility_numerics() -> Check {
    const TOL: f64 = 1e-8;
    let deltas = [1e-6, 1e-5, 1e-4, 1e-3, 1e-2];
    let ratios: Vec<f64> = (0..5).map(|i| 0.1 + 1.9 * i as f64 / 4.0).collect();
    let sigmas: Vec<f64> = (0..5).map(|i| 0.5 + 3.5 * i as f64 / 4.0).collect();
    let mut issues = Vec::new();
    let mut checked = 0;
    let mut oracle_gap: f64 = 0.0;
    let value = |d: f64, dist: f64, s: f64| utility_delta_tilde(&UtilityParams::new(d, dist, s).unwrap()).unwrap().value;
    for &d in &deltas {
        for &s in &sigmas {
            let mut last = 0.0;
            for &r in &ratios {
                let dt = value(d, r * s, s);
                let bound = (r * r).exp() * d.sqrt();
                if dt < d - TOL {
                    issues.push(format!("delta_tilde {dt:e} < delta {d:e} at r {r}, sigma {s}"));
                }
                if dt > bound + TOL {
                    issues.push(format!("delta_tilde {dt:e} above bound {bound:e} at r {r}, sigma {s}"));
                }
                if dt < last - TOL {
                    issues.push(format!("not monotone in distance at delta {d:e}, sigma {s}, r {r}"));
                }
                last = dt;
                checked += 1;
            }
        }
        // fixed distance, growing sigma: the failure probability must not grow
        for &r in &ratios {
            for &s0 in &sigmas {
                let dist = r * s0;
                let mut last = f64::INFINITY;
                for &s in &sigmas {
                    let dt = value(d, dist, s);
                    if dt > last + TOL {
                        issues.push(format!("not monotone in 1/sigma at delta {d:e}, distance {dist}"));
                    }
                    last = dt;
                }
            }
        }
        for &r in &ratios {
            oracle_gap = oracle_gap.max((value(d, r, 1.0) - delta_tilde_oracle(d, r)).abs());
        }
    }
    if oracle_gap > 1e-6 {
        issues.push(format!("solver differs from dense-grid oracle by {oracle_gap:e}"));
    }
    if issues.is_empty() {
        Ok(format!("{checked} grid points, oracle gap {oracle_gap:.1e}"))
    } else {
        Err(format!("{} issue(s); first: {}", issues.len(), issues[0]))
    }
}

fn dominance_config(scheme: Scheme) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(
        EmbedConfig::new(scheme),
        MessageSpec::Random { k: 32, seed: 7 },
        1234,
        vec![
            AttackGrid::new(
                AttackKind::GaussianNoise,
                vec![0.25, 0.5, 1.0, 2.0, 3.0, 5.0, 8.0, 10.0, 15.0, 20.0, 25.0, 30.0],
            ),
            AttackGrid::regen(
                "tv".parse().unwrap(),
                [0.25, 0.5, 1.0, 2.0, 3.0, 5.0, 8.0, 10.0, 15.0, 20.0, 30.0, 40.0, 60.0].map(|s| s / 255.0).to_vec(),
                false,
            ),
        ],
    );
    cfg.corpus = CorpusSpec::default();
    cfg.seed = 11;
    cfg
}

/// Every regen row against every noise row within 1 dB of mean PSNR.
fn dominance_pairs(report: &ExperimentReport) -> (usize, Vec<String>) {
    let noise: Vec<_> = report.rows.iter().filter(|r| r.attack == "gaussian-noise").collect();
    let mut matched = 0;
    let mut violations = Vec::new();
    for regen in report.rows.iter().filter(|r| r.attack == "regen-tv") {
        let (Some(rp), Some(rt)) = (regen.mean_psnr, regen.tpr_at_alpha) else { continue };
        for n in &noise {
            let (Some(np), Some(nt)) = (n.mean_psnr, n.tpr_at_alpha) else { continue };
            if (rp - np).abs() <= 1.0 {
                matched += 1;
                if rt > nt {
                    violations.push(format!(
                        "regen sigma {:.4} ({rp:.2} dB, tpr {rt:.3}) vs noise std {} ({np:.2} dB, tpr {nt:.3})",
                        regen.strength, n.strength
                    ));
                }
            }
        }
    }
    (matched, violations)
}

fn dominance() -> Check {
    let mut parts = Vec::new();
    let mut failures = Vec::new();
    for scheme in [Scheme::Additive, Scheme::Lsb] {
        let report = run_experiment(&dominance_config(scheme)).map_err(|e| e.to_string())?;
        if report.failed_cells() > 0 {
            return Err(format!("{scheme}: {} failed cells", report.failed_cells()));
        }
        let (matched, violations) = dominance_pairs(&report);
        parts.push(format!("{scheme}: {matched} matched pairs, {} violations", violations.len()));
        if matched == 0 {
            failures.push(format!("{scheme}: no PSNR-matched pairs"));
        }
        failures.extend(violations.into_iter().map(|v| format!("{scheme}: {v}")));
    }
    if failures.is_empty() {
        Ok(parts.join("; "))
    } else {
        Err(format!("{}; first violation: {}", parts.join("; "), failures[0]))
    }
}

fn random_plane(rng: &mut impl Rng, w: usize, h: usize) -> Plane {
    Plane::new(w, h, (0..w * h).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

fn max_abs(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
}

fn transform_exactness() -> Check {
    let mut rng = RngState::new(8, 8).rng();
    let mut worst = [0.0f64; 6];
    for _ in 0..1000 {
        // DWT: roundtrip on any size, energy preservation and linearity on even sizes
        let (w, h) = (rng.gen_range(1..40), rng.gen_range(1..40));
        let p = random_plane(&mut rng, w, h);
        let back = dwt_haar_inverse(&dwt_haar_forward(&p).unwrap()).unwrap();
        worst[0] = worst[0].max(max_abs(&p.data, &back.data));
        let (we, he) = (2 * rng.gen_range(1..20), 2 * rng.gen_range(1..20));
        let a = random_plane(&mut rng, we, he);
        let b = random_plane(&mut rng, we, he);
        let sa = dwt_haar_forward(&a).unwrap();
        worst[1] = worst[1].max((sa.energy() - a.energy()).abs() / a.energy().max(1e-300));
        let (c1, c2) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let mix = Plane::new(we, he, a.data.iter().zip(&b.data).map(|(x, y)| c1 * x + c2 * y).collect()).unwrap();
        let sm = dwt_haar_forward(&mix).unwrap();
        let sb = dwt_haar_forward(&b).unwrap();
        let lin: Vec<f64> = sa.ll.data.iter().zip(&sb.ll.data).map(|(x, y)| c1 * x + c2 * y).collect();
        worst[2] = worst[2].max(max_abs(&sm.ll.data, &lin));

        // DCT: orthonormal basis, roundtrip and Parseval
        let n = rng.gen_range(2..17);
        let basis = DctBasis::new(n).unwrap();
        for i in 0..n {
            for j in 0..n {
                let dot: f64 = (0..n).map(|t| basis.coefficient(i, t) * basis.coefficient(j, t)).sum();
                worst[3] = worst[3].max((dot - if i == j { 1.0 } else { 0.0 }).abs());
            }
        }
        let blk = random_plane(&mut rng, n, n);
        let coeffs = dct2_forward(&blk).unwrap();
        worst[3] = worst[3].max(max_abs(&blk.data, &dct2_inverse(&coeffs).unwrap().data));
        worst[3] = worst[3].max((coeffs.energy() - blk.energy()).abs());

        // SVD: reconstruction, orthonormal factors, spectrum against an eigen oracle
        let (r, c) = (rng.gen_range(1..9), rng.gen_range(1..9));
        let m = random_plane(&mut rng, c, r);
        let svd = svd_small(&m).unwrap();
        worst[4] = worst[4].max(max_abs(&m.data, &svd.reconstruct().data));
        let k = svd.s.len();
        for i in 0..k {
            for j in 0..k {
                let e = if i == j { 1.0 } else { 0.0 };
                let uu: f64 = (0..r).map(|t| svd.u.at(i, t) * svd.u.at(j, t)).sum();
                let vv: f64 = (0..c).map(|t| svd.v.at(i, t) * svd.v.at(j, t)).sum();
                worst[4] = worst[4].max((uu - e).abs()).max((vv - e).abs());
            }
        }
        let nm = DMatrix::from_row_slice(r, c, &m.data);
        let gram = if r >= c { nm.transpose() * &nm } else { &nm * nm.transpose() };
        let mut eig: Vec<f64> = gram.symmetric_eigenvalues().iter().map(|v| v.max(0.0).sqrt()).collect();
        eig.sort_by(|a, b| b.total_cmp(a));
        worst[5] = worst[5].max(max_abs(&svd.s, &eig[..k]));
        if r > 1 {
            let mut swapped = m.clone();
            let (i, j) = (0, r - 1);
            for x in 0..c {
                swapped.data.swap(i * c + x, j * c + x);
            }
            worst[5] = worst[5].max(max_abs(&svd.s, &svd_small(&swapped).unwrap().s));
        }
    }
    let tol = [1e-12, 1e-12, 1e-12, 1e-12, 1e-10, 1e-9];
    let names = ["dwt roundtrip", "dwt energy", "dwt linearity", "dct", "svd factors", "svd spectrum"];
    let detail: Vec<String> = names.iter().zip(&worst).map(|(n, w)| format!("{n} {w:.1e}")).collect();
    if worst.iter().zip(&tol).all(|(w, t)| w <= t) {
        Ok(detail.join(", "))
    } else {
        Err(detail.join(", "))
    }
}

fn null_calibration() -> Check {
    let corpus = synthetic_corpus(9_000, 500, 128, 128, SyntheticKind::SmoothNoise).map_err(|e| e.to_string())?;
    let msg = Message::random(32, RngState::new(90, 0)).unwrap();
    let tau = threshold_for_alpha(32, 0.01);
    let mut parts = Vec::new();
    let mut ok = true;
    for scheme in Scheme::ALL {
        let key = Key::new(4242, scheme);
        let counts = match_counts(&corpus, &key, &EmbedConfig::new(scheme), &msg).map_err(|e| e.to_string())?;
        let fpr = counts.iter().filter(|&&m| m >= tau).count() as f64 / counts.len() as f64;
        let gof = binomial_goodness_of_fit(&counts, 32).map_err(|e| e.to_string())?;
        ok &= fpr <= 0.03 && gof.p_value > 0.001;
        parts.push(format!("{scheme}: FPR {fpr:.3}, GOF p {:.3}", gof.p_value));
    }
    if ok {
        Ok(parts.join("; "))
    } else {
        Err(parts.join("; "))
    }
}

fn main() -> ExitCode {
    let criteria: [(u32, &str, Duration, fn() -> Check); 9] = [
        (1, "threshold parity", Duration::from_secs(1), thresholds),
        (2, "tail accuracy", Duration::from_secs(10), tail_accuracy),
        (3, "embedding quality", Duration::from_secs(120), embedding_quality),
        (4, "certified removal end-to-end", Duration::from_secs(300), theorem1_end_to_end),
        (5, "gaussian pair monte carlo", Duration::from_secs(30), gaussian_pair_mc),
        (6, "utility numerics", Duration::from_secs(10), utility_numerics),
        (7, "regeneration dominance", Duration::from_secs(600), dominance),
        (8, "transform exactness", Duration::from_secs(30), transform_exactness),
        (9, "null calibration", Duration::from_secs(120), null_calibration),
    ];
    let mut failed = 0;
    for (id, name, budget, check) in criteria {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let (pass, detail) = match outcome {
            Ok(d) if elapsed <= budget => (true, d),
            Ok(d) => (false, format!("{d}; too slow")),
            Err(d) => (false, d),
        };
        println!(
            "criterion {id} [{name}]: {} ({detail}; {:.2} s of {} s)",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
        failed += usize::from(!pass);
    }
    println!("{} of 9 criteria passed", 9 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
