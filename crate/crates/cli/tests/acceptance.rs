//! Acceptance checks, one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (no libtest harness). Environment:
//! - `WBPE_ACCEPTANCE_ONLY=1,4,8` runs a subset.
//! - `WBPE_ACCEPTANCE_BUDGET=full` trains the ensemble checks (6, 7) with
//!   the full epoch budget instead of the reduced default.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use rand::seq::index::sample;
use rand::Rng;
use wbp_ensemble::bp::{wbp_decode, WeightsSet};
use wbp_ensemble::builtin;
use wbp_ensemble::channel::{q_function, sigma_from_snr, stream_rng, transmit, ChannelConfig};
use wbp_ensemble::code::{Codeword, ErrorPattern};
use wbp_ensemble::ensemble::{EnsembleModel, GatingMode};
use wbp_ensemble::eval::{run_sweep, EvalConfig, ExpertDecoder, FerRecord};
use wbp_ensemble::hdd::{BchDecoder, HddStatus};
use wbp_ensemble::partition::{
    em_fit, em_step, prop1_experiment, syndrome_labels, BernoulliMixture, EmConfig, MixtureVariant, PartitionModel,
};
use wbp_ensemble::training::{generate_dataset, gradient, mean_loss, train, TrainConfig, TrainingSample};

type Check = std::result::Result<String, String>;

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// ---------------------------------------------------------------------------
// 1. uniform WBP against a dense textbook sum-product decoder

/// Flooding sum-product on the dense matrix, written from the message
/// equations with no shared code. Same saturation as the decoder under test.
fn textbook_bp(h: &[Vec<u8>], llr: &[f64], iterations: usize) -> Vec<u8> {
    let m = h.len();
    let n = llr.len();
    let sat = |x: f64| x.clamp(-10.0, 10.0);
    let mut c2v = vec![vec![0.0f64; n]; m];
    let mut hard = vec![0u8; n];
    for _ in 0..iterations {
        let mut v2c = vec![vec![0.0f64; n]; m];
        for c in 0..m {
            for v in 0..n {
                if h[c][v] == 1 {
                    let others: f64 = (0..m).filter(|&d| d != c && h[d][v] == 1).map(|d| c2v[d][v]).sum();
                    v2c[c][v] = sat(llr[v] + others);
                }
            }
        }
        for c in 0..m {
            for v in 0..n {
                if h[c][v] == 1 {
                    let mut prod = 1.0;
                    for u in 0..n {
                        if u != v && h[c][u] == 1 {
                            prod *= (v2c[c][u] / 2.0).tanh();
                        }
                    }
                    let prod = prod.clamp(-(1.0 - 1e-12), 1.0 - 1e-12);
                    c2v[c][v] = sat(2.0 * prod.atanh());
                }
            }
        }
        for v in 0..n {
            let total = llr[v] + (0..m).filter(|&c| h[c][v] == 1).map(|c| c2v[c][v]).sum::<f64>();
            hard[v] = u8::from(total <= 0.0);
        }
        let satisfied = h.iter().all(|row| row.iter().zip(&hard).map(|(a, b)| a & b).fold(0, |x, y| x ^ y) == 0);
        if satisfied {
            break;
        }
    }
    hard
}

fn criterion_1() -> Check {
    let (code, h) = builtin::cr_bch_63_36();
    let dense: Vec<Vec<u8>> = (0..h.rows()).map(|c| (0..h.cols()).map(|v| h.entry(c, v)).collect()).collect();
    let w = WeightsSet::uniform(&h, 5);
    let ch = ChannelConfig::from_snr(4.0, code.rate()).unwrap();
    let mut rng = stream_rng(2024, 1);
    let words = 10_000;
    let mut mismatches = 0;
    let mut wrong = 0;
    for _ in 0..words {
        let llr = transmit(&[1.0; 63], &ch, &mut rng).unwrap();
        let got = wbp_decode(&h, llr.values(), &w, 5).unwrap().codeword;
        let want = textbook_bp(&dense, llr.values(), 5);
        mismatches += usize::from(got.bits() != want.as_slice());
        wrong += usize::from(got.weight() > 0);
    }
    ensure(
        mismatches == 0,
        format!("{mismatches} of {words} hard outputs differ ({wrong} frame errors)"),
    )
}

// ---------------------------------------------------------------------------
// 2. hard-decision BCH decoding up to t errors

fn plant_and_decode(dec: &BchDecoder, support: &[usize]) -> bool {
    let n = dec.code().n;
    let mut y = vec![0u8; n];
    for &p in support {
        y[p] = 1;
    }
    let r = dec.decode(&y).unwrap();
    r.status == HddStatus::Corrected && r.estimated_error.as_ref().map(ErrorPattern::bits) == Some(y.as_slice())
}

fn criterion_2() -> Check {
    let mut details = Vec::new();
    let mut ok = true;
    for (code, _) in [builtin::cr_bch_63_36(), builtin::cr_bch_63_45()] {
        let dec = BchDecoder::with_default_field(code.clone()).unwrap();
        let (n, t) = (code.n, code.t);
        let mut tried = 0usize;
        let mut failed = 0usize;
        for i in 0..n {
            tried += 1;
            failed += usize::from(!plant_and_decode(&dec, &[i]));
            for j in i + 1..n {
                tried += 1;
                failed += usize::from(!plant_and_decode(&dec, &[i, j]));
            }
        }
        let mut rng = stream_rng(31, t as u64);
        for w in 1..=t {
            for _ in 0..10_000 {
                let support = sample(&mut rng, n, w).into_vec();
                tried += 1;
                failed += usize::from(!plant_and_decode(&dec, &support));
            }
        }
        ok &= failed == 0 && tried == n + n * (n - 1) / 2 + 10_000 * t;
        details.push(format!("{} t={t}: {failed}/{tried} failed", code.code_id));
    }
    ensure(ok, details.join("; "))
}

// ---------------------------------------------------------------------------
// 3. reverse-mode gradient against central differences

fn criterion_3() -> Check {
    let h = builtin::hamming_7_4();
    let ch = ChannelConfig::from_snr(1.0, 4.0 / 7.0).unwrap();
    let mut rng = stream_rng(303, 0);
    let step = 1e-4;
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let mut w = WeightsSet::uniform(&h, 2);
        for p in w.params_mut() {
            *p = rng.random_range(0.5..1.5);
        }
        let batch: Vec<TrainingSample> = (0..8)
            .map(|_| TrainingSample::new(transmit(&[1.0; 7], &ch, &mut rng).unwrap(), Codeword::zeros(7)))
            .collect();
        let (_, grad) = gradient(&h, &batch, &w).unwrap();
        for (i, &a) in grad.params().enumerate() {
            let mut plus = w.clone();
            *plus.params_mut().nth(i).unwrap() += step;
            let mut minus = w.clone();
            *minus.params_mut().nth(i).unwrap() -= step;
            let fd = (mean_loss(&h, &batch, &plus) - mean_loss(&h, &batch, &minus)) / (2.0 * step);
            let scale = a.abs().max(fd.abs());
            let err = if scale < 1e-7 { (a - fd).abs() } else { (a - fd).abs() / scale };
            worst = worst.max(err);
        }
    }
    ensure(worst < 1e-4, format!("max relative error {worst:.2e} over 100 weight sets"))
}

// ---------------------------------------------------------------------------
// 4. EM

fn bsc_patterns(p: f64, count: usize, v: usize, seed: u64, stream: u64) -> Vec<ErrorPattern> {
    let mut rng = stream_rng(seed, stream);
    (0..count)
        .map(|_| ErrorPattern((0..v).map(|_| u8::from(rng.random_bool(p))).collect()))
        .collect()
}

fn monotone(m: &BernoulliMixture, k: usize) -> bool {
    m.log_likelihood_trace.windows(2).all(|w| w[1] >= w[0] - 1e-9 * k as f64)
}

/// Linear-space E-step and weighted means for one M-step.
fn brute_force_step(m: &BernoulliMixture, samples: &[ErrorPattern], labels: &[Vec<u8>]) -> BernoulliMixture {
    let guided = m.variant == MixtureVariant::SyndromeGuided;
    let a = m.pi.len();
    let v = samples[0].len();
    let resp: Vec<Vec<f64>> = samples
        .iter()
        .zip(labels)
        .map(|(e, q)| {
            let joint: Vec<f64> = (0..a)
                .map(|i| {
                    (0..v).fold(m.pi[i], |p, j| {
                        let mu = if guided && q[j] == 1 { m.mu1[i][j] } else { m.mu0[i][j] };
                        p * if e.bits()[j] == 1 { mu } else { 1.0 - mu }
                    })
                })
                .collect();
            let z: f64 = joint.iter().sum();
            joint.iter().map(|x| x / z).collect()
        })
        .collect();
    let mut next = m.clone();
    for i in 0..a {
        next.pi[i] = resp.iter().map(|r| r[i]).sum::<f64>() / samples.len() as f64;
        for j in 0..v {
            for b in 0..=u8::from(guided) {
                let (mut num, mut den) = (0.0, 0.0);
                for (k, e) in samples.iter().enumerate() {
                    if !guided || labels[k][j] == b {
                        den += resp[k][i];
                        num += resp[k][i] * f64::from(e.bits()[j]);
                    }
                }
                let cell = if b == 1 { &mut next.mu1[i][j] } else { &mut next.mu0[i][j] };
                if den > 0.0 {
                    *cell = (num / den).clamp(1e-6, 1.0 - 1e-6);
                }
            }
        }
    }
    next
}

fn criterion_4() -> Check {
    let (code, h) = builtin::cr_bch_63_36();
    let mut details = Vec::new();
    let mut ok = true;

    // (a) monotone log-likelihood on decoder-input error patterns
    let data = generate_dataset(&code, &h, &TrainConfig::from_scratch(41), 20_000).unwrap();
    let errors: Vec<ErrorPattern> =
        data.samples.iter().map(|s| s.true_error.clone()).filter(|e| e.weight() > 0).collect();
    let cfg = EmConfig { seed: 42, ..EmConfig::default() };
    for variant in [MixtureVariant::Naive, MixtureVariant::SyndromeGuided] {
        let m = em_fit(&errors, 3, variant, &cfg, Some(&h)).unwrap();
        let mono = monotone(&m, errors.len());
        ok &= mono;
        details.push(format!("{variant:?} monotone={mono} ({} steps)", m.log_likelihood_trace.len()));
    }

    // (b) planted two-component mixture
    let mut planted = bsc_patterns(0.01, 50_000, 63, 43, 0);
    planted.extend(bsc_patterns(0.30, 50_000, 63, 43, 1));
    let m = em_fit(&planted, 2, MixtureVariant::Naive, &cfg, None).unwrap();
    let mean = |i: usize| m.mu0[i].iter().sum::<f64>() / 63.0;
    let (lo, hi) = if mean(0) < mean(1) { (0, 1) } else { (1, 0) };
    let dev = (0..63)
        .map(|j| (m.mu0[lo][j] - 0.01).abs().max((m.mu0[hi][j] - 0.30).abs()))
        .fold(0.0, f64::max);
    ok &= dev <= 0.02;
    details.push(format!("planted max deviation {dev:.4}"));

    // (c) one M-step against brute force, both variants
    let small = bsc_patterns(0.08, 20, 63, 44, 0);
    let labels: Vec<Vec<u8>> = small.iter().map(|e| syndrome_labels(&h, e).unwrap()).collect();
    let mut rng = stream_rng(45, 0);
    let mut draw = || -> Vec<Vec<f64>> { (0..3).map(|_| (0..63).map(|_| rng.random_range(0.05..0.3)).collect()).collect() };
    let mut worst: f64 = 0.0;
    for variant in [MixtureVariant::Naive, MixtureVariant::SyndromeGuided] {
        let m = BernoulliMixture {
            variant,
            pi: vec![0.2, 0.3, 0.5],
            mu0: draw(),
            mu1: if variant == MixtureVariant::Naive { Vec::new() } else { draw() },
            log_likelihood_trace: Vec::new(),
            reinitializations: 0,
        };
        let (got, _) = em_step(&m, &small, Some(&h)).unwrap();
        let want = brute_force_step(&m, &small, &labels);
        let flat = |x: &BernoulliMixture| -> Vec<f64> {
            x.pi.iter().chain(x.mu0.iter().flatten()).chain(x.mu1.iter().flatten()).copied().collect()
        };
        let (g, w) = (flat(&got), flat(&want));
        if g.len() != w.len() {
            return Err(format!("{variant:?}: parameter count {} vs {}", g.len(), w.len()));
        }
        worst = g.iter().zip(&w).map(|(a, b)| (a - b).abs()).fold(worst, f64::max);
    }
    ok &= worst <= 1e-12;
    details.push(format!("M-step max |diff| {worst:.1e}"));
    ensure(ok, details.join("; "))
}

// ---------------------------------------------------------------------------
// 5. mixture of BSCs recovers the channel crossovers

fn criterion_5() -> Check {
    let rate = 36.0 / 63.0;
    let sigmas: Vec<f64> = [4.0, 5.0, 6.0].iter().map(|&s| sigma_from_snr(s, rate)).collect();
    let cfg = EmConfig { seed: 1, ..EmConfig::default() };
    let r = prop1_experiment(&sigmas, 100_000, 63, &cfg).unwrap();
    let parts: Vec<String> = r
        .components
        .iter()
        .zip(&sigmas)
        .map(|(c, &s)| {
            format!(
                "p={:.4} mean={:.4} dev={:.4} pi={:.3}",
                q_function(1.0 / s),
                c.fitted_mean,
                c.max_deviation,
                c.pi
            )
        })
        .collect();
    ensure(
        r.max_deviation <= 0.01 && r.max_pi_deviation <= 0.02,
        format!(
            "max mu deviation {:.4}, max pi deviation {:.4} [{}]",
            r.max_deviation,
            r.max_pi_deviation,
            parts.join(", ")
        ),
    )
}

// ---------------------------------------------------------------------------
// 6, 7. trained Hamming-partition ensemble

struct Budget {
    k: usize,
    epochs: usize,
    steps_per_epoch: usize,
    batch_per_snr: usize,
    max_validation: usize,
    label: &'static str,
}

fn budget() -> Budget {
    match std::env::var("WBPE_ACCEPTANCE_BUDGET").as_deref() {
        Ok("full") => Budget {
            k: 100_000,
            epochs: 300,
            steps_per_epoch: 1,
            batch_per_snr: 1000,
            max_validation: 4000,
            label: "full",
        },
        _ => Budget {
            k: 100_000,
            epochs: 40,
            steps_per_epoch: 1,
            batch_per_snr: 250,
            max_validation: 2000,
            label: "reduced",
        },
    }
}

struct Trained {
    model: EnsembleModel,
    baseline: WeightsSet,
}

fn train_ensemble() -> Trained {
    let b = budget();
    let (code, h) = builtin::cr_bch_63_36();
    let apply = |mut cfg: TrainConfig| {
        cfg.epochs = b.epochs;
        cfg.steps_per_epoch = b.steps_per_epoch;
        cfg.batch_per_snr = b.batch_per_snr;
        cfg.max_validation = b.max_validation;
        cfg
    };
    let scratch = apply(TrainConfig::from_scratch(1));
    let data = generate_dataset(&code, &h, &scratch, b.k).unwrap();
    let started = Instant::now();
    let baseline = train(&code, &h, &data.samples, &scratch, None).unwrap().weights;
    let partition = PartitionModel::Hamming { alpha: 3 };
    let induced = wbp_ensemble::partition::induce_datasets(&data.samples, &partition, &h).unwrap();
    let finetune = apply(TrainConfig::finetune(2));
    let experts: Vec<WeightsSet> = induced
        .datasets
        .iter()
        .map(|d| train(&code, &h, d, &finetune, Some(&baseline)).unwrap().weights)
        .collect();
    eprintln!(
        "  trained baseline and {} experts ({} budget) in {:.0?}",
        experts.len(),
        b.label,
        started.elapsed()
    );
    let hdd = BchDecoder::with_default_field(code.clone()).unwrap();
    let model = EnsembleModel::new(code, h, experts, 5, partition, GatingMode::SingleChoice, hdd).unwrap();
    Trained { model, baseline }
}

fn sweep_model(t: &Trained, mode: GatingMode, snrs: &[f64], min_errors: u64, seed: u64) -> Vec<FerRecord> {
    let model = t.model.clone().with_gating_mode(mode);
    let cfg = EvalConfig { min_frame_errors: min_errors, ..EvalConfig::new(snrs.to_vec(), seed) };
    run_sweep(&cfg, model.code(), model.parity_check(), &model).unwrap()
}

fn show(r: &FerRecord) -> String {
    format!("{:.3e} [{:.3e}, {:.3e}]", r.fer, r.fer_lo, r.fer_hi)
}

/// `a` is not significantly above `b`.
fn not_above(a: &FerRecord, b: &FerRecord) -> bool {
    a.fer <= b.fer || a.fer_lo <= b.fer_hi
}

fn criterion_6(t: &Trained) -> Check {
    let snrs = [4.0, 5.0, 6.0];
    let all = sweep_model(t, GatingMode::AllDecoders, &snrs, 100, 61);
    let single = sweep_model(t, GatingMode::SingleChoice, &snrs, 100, 61);
    let random = sweep_model(t, GatingMode::RandomChoice, &snrs, 100, 61);
    let mut ok = true;
    let mut parts = Vec::new();
    for i in 0..snrs.len() {
        let (a, s, r) = (&all[i], &single[i], &random[i]);
        ok &= [a, s, r].iter().all(|x| x.frame_errors >= 100);
        ok &= not_above(a, s) && not_above(s, r);
        parts.push(format!("{} dB all {} single {} random {}", snrs[i], show(a), show(s), show(r)));
    }
    ensure(ok, parts.join("; "))
}

fn criterion_7(t: &Trained) -> Check {
    let snrs = [5.0, 6.0];
    let min_errors = 100_000;
    let single = sweep_model(t, GatingMode::SingleChoice, &snrs, min_errors, 71);
    let base = ExpertDecoder::new(t.model.parity_check(), &t.baseline, 5, "baseline").unwrap();
    let cfg = EvalConfig { min_frame_errors: min_errors, ..EvalConfig::new(snrs.to_vec(), 71) };
    let baseline = run_sweep(&cfg, t.model.code(), t.model.parity_check(), &base).unwrap();
    let mut ok = true;
    let mut parts = Vec::new();
    for i in 0..snrs.len() {
        let (s, b) = (&single[i], &baseline[i]);
        ok &= s.fer_hi < b.fer_lo;
        parts.push(format!("{} dB single {} baseline {}", snrs[i], show(s), show(b)));
    }
    ensure(ok, parts.join("; "))
}

// ---------------------------------------------------------------------------
// 8. CLI outputs are reproducible across runs and worker counts

fn wbpe(dir: &Path, args: &[&str]) -> std::result::Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_wbpe"))
        .args(args)
        .current_dir(dir)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("wbpe {}: {}", args.join(" "), String::from_utf8_lossy(&out.stderr).trim()))
    }
}

fn cli_pipeline(dir: &Path, workers: &str) -> std::result::Result<(), String> {
    let w = ["--workers", workers, "--seed", "5"];
    let train = [
        "--k", "600", "--epochs", "3", "--batch-per-snr", "20", "--max-validation", "40",
    ];
    let with = |head: &[&'static str], tail: &[&str]| -> Vec<String> {
        head.iter().chain(w.iter()).chain(tail).map(|s| s.to_string()).collect()
    };
    let run = |args: Vec<String>| {
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        wbpe(dir, &refs)
    };
    run(with(&["train-baseline"], &[&train[..], &["--out", "base.json"]].concat()))?;
    run(with(&["partition", "hamming"], &["--alpha", "3", "--k", "600", "--out", "ham.json"]))?;
    run(with(
        &["partition", "em-syndrome"],
        &["--alpha", "2", "--k", "2000", "--restarts", "2", "--max-em-iterations", "15", "--out", "em.json"],
    ))?;
    run(with(
        &["train-experts"],
        &[&train[..], &["--partition", "ham.json", "--weights", "base.json", "--manifest", "ens.json"]].concat(),
    ))?;
    let eval = ["--snr", "2,3", "--min-errors", "30", "--max-frames", "3000", "--shard-frames", "50"];
    run(with(&["eval"], &[&eval[..], &["--out", "bp.csv"]].concat()))?;
    run(with(&["eval"], &[&eval[..], &["--weights", "base.json", "--out", "base.csv"]].concat()))?;
    run(with(
        &["eval"],
        &[&eval[..], &["--manifest", "ens.json", "--gating", "random", "--format", "json", "--out", "ens.json.out"]]
            .concat(),
    ))?;
    run(with(&["prop1"], &["--k", "3000", "--restarts", "2", "--out", "prop1.json"]))?;
    run(with(&["hdd-selftest"], &["--trials", "200", "--out", "selftest.json"]))?;
    wbpe(dir, &["compare", "bp.csv", "base.csv", "--out", "compare.json"])
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect();
    files.sort();
    files
}

fn criterion_8() -> Check {
    let root = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut snaps = Vec::new();
    for (name, workers) in [("a", "1"), ("b", "1"), ("c", "4")] {
        let dir = root.path().join(name);
        std::fs::create_dir(&dir).map_err(|e| e.to_string())?;
        cli_pipeline(&dir, workers)?;
        snaps.push(snapshot(&dir));
    }
    let names: Vec<&str> = snaps[0].iter().map(|(n, _)| n.as_str()).collect();
    let differing: Vec<String> = snaps[1..]
        .iter()
        .flat_map(|s| {
            s.iter()
                .zip(&snaps[0])
                .filter(|(x, y)| x != y)
                .map(|(x, _)| x.0.clone())
                .collect::<Vec<_>>()
        })
        .collect();
    let same_sets = snaps.iter().all(|s| s.len() == snaps[0].len());
    ensure(
        same_sets && differing.is_empty(),
        if differing.is_empty() {
            format!("{} files identical across 3 runs (workers 1, 1, 4)", names.len())
        } else {
            format!("differing files: {}", differing.join(", "))
        },
    )
}

// ---------------------------------------------------------------------------

fn run(n: usize, name: &str, check: impl FnOnce() -> Check) -> bool {
    let started = Instant::now();
    let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Err(format!("panicked: {msg}"))
    });
    let secs = started.elapsed().as_secs_f64();
    match &result {
        Ok(d) => println!("criterion {n} {name}: PASS ({d}) [{secs:.1}s]"),
        Err(d) => println!("criterion {n} {name}: FAIL ({d}) [{secs:.1}s]"),
    }
    result.is_ok()
}

fn main() -> ExitCode {
    let only: Option<Vec<usize>> = std::env::var("WBPE_ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let wanted = |n: usize| only.as_ref().is_none_or(|o| o.contains(&n));
    let mut passed = true;
    if wanted(1) {
        passed &= run(1, "uniform WBP equals textbook BP", criterion_1);
    }
    if wanted(2) {
        passed &= run(2, "HDD corrects every pattern up to t", criterion_2);
    }
    if wanted(3) {
        passed &= run(3, "gradient matches central differences", criterion_3);
    }
    if wanted(4) {
        passed &= run(4, "EM monotone, planted recovery, M-step", criterion_4);
    }
    if wanted(5) {
        passed &= run(5, "BSC mixture recovers crossovers", criterion_5);
    }
    if wanted(6) || wanted(7) {
        let trained = catch_unwind(train_ensemble);
        match trained {
            Ok(t) => {
                if wanted(6) {
                    passed &= run(6, "gating order all <= single <= random", || criterion_6(&t));
                }
                if wanted(7) {
                    passed &= run(7, "single-choice ensemble beats baseline", || criterion_7(&t));
                }
            }
            Err(_) => {
                for n in [6, 7].into_iter().filter(|&n| wanted(n)) {
                    println!("criterion {n}: FAIL (ensemble training panicked)");
                }
                passed = false;
            }
        }
    }
    if wanted(8) {
        passed &= run(8, "CLI byte-identical across runs and workers", criterion_8);
    }
    if passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
