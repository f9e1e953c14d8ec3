//! Monte Carlo FER/BER sweeps.
//!
//! Frames are simulated in fixed-size shards. Shard `s` of SNR point `p`
//! draws from its own random stream, and shards are merged in order with the
//! stopping rule applied after each one, so results depend on the seed and
//! the shard size but not on the number of workers.

use std::io::Write;
use std::path::Path;

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bp::{decode_with, Unweighted, WbpDecoder, WeightsSet};
use crate::channel::{modulate_bpsk, stream_rng, transmit, ChannelConfig, RNG_ID, SNR_CONVENTION};
use crate::code::{CodeSpec, Codeword, Generator, ParityCheckMatrix};
use crate::ensemble::{EnsembleModel, GatingSource};
use crate::error::{check_len, Error, Result};

/// Two-sided 95% normal quantile.
pub const WILSON_Z: f64 = 1.959963984540054;

const EVAL_STREAM: u64 = 5 << 40;

/// What a decoder reports about one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameOutcome {
    pub codeword: Codeword,
    pub iterations: usize,
    pub source: Option<GatingSource>,
    pub active: Vec<bool>,
}

pub trait FrameDecoder: Sync {
    /// Number of ensemble experts; 0 for single decoders.
    fn alpha(&self) -> usize {
        0
    }

    fn describe(&self) -> String;

    fn decode_frame(&self, llr: &[f64], rng: &mut ChaCha8Rng) -> Result<FrameOutcome>;
}

/// Unweighted sum-product BP.
pub struct PlainBp<'a> {
    pub h: &'a ParityCheckMatrix,
    pub iterations: usize,
}

impl FrameDecoder for PlainBp<'_> {
    fn describe(&self) -> String {
        format!("plain_bp(T={})", self.iterations)
    }

    fn decode_frame(&self, llr: &[f64], _rng: &mut ChaCha8Rng) -> Result<FrameOutcome> {
        let r = decode_with(self.h, llr, &Unweighted, self.iterations, false);
        Ok(FrameOutcome {
            codeword: r.codeword,
            iterations: r.iterations_used,
            source: None,
            active: Vec::new(),
        })
    }
}

/// A single weighted decoder.
pub struct ExpertDecoder<'a> {
    decoder: WbpDecoder<'a>,
    h: &'a ParityCheckMatrix,
    weights: &'a WeightsSet,
    label: String,
}

impl<'a> ExpertDecoder<'a> {
    pub fn new(h: &'a ParityCheckMatrix, weights: &'a WeightsSet, iterations: usize, label: impl Into<String>) -> Result<Self> {
        Ok(ExpertDecoder {
            decoder: WbpDecoder::new(h, weights, iterations)?,
            h,
            weights,
            label: label.into(),
        })
    }
}

impl FrameDecoder for ExpertDecoder<'_> {
    fn describe(&self) -> String {
        format!("wbp({}, T={})", self.label, self.decoder.iterations())
    }

    fn decode_frame(&self, llr: &[f64], _rng: &mut ChaCha8Rng) -> Result<FrameOutcome> {
        let r = decode_with(self.h, llr, self.weights, self.decoder.iterations(), false);
        Ok(FrameOutcome {
            codeword: r.codeword,
            iterations: r.iterations_used,
            source: None,
            active: Vec::new(),
        })
    }
}

impl FrameDecoder for EnsembleModel {
    fn alpha(&self) -> usize {
        EnsembleModel::alpha(self)
    }

    fn describe(&self) -> String {
        format!(
            "ensemble(alpha={}, partition={}, gating={}, T={})",
            EnsembleModel::alpha(self),
            self.partition().kind(),
            self.gating_mode().as_str(),
            self.iterations()
        )
    }

    fn decode_frame(&self, llr: &[f64], rng: &mut ChaCha8Rng) -> Result<FrameOutcome> {
        let (codeword, diag) = self.decode_word(llr, rng)?;
        Ok(FrameOutcome {
            codeword,
            iterations: diag.iterations,
            source: Some(diag.source),
            active: diag.active,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub snr_points_db: Vec<f64>,
    pub min_frame_errors: u64,
    pub max_frames: u64,
    pub seed: u64,
    /// Frames per random stream; part of the reproducibility key.
    pub shard_frames: u64,
    /// Worker threads; does not affect results.
    #[serde(skip)]
    pub workers: usize,
    /// Transmit random codewords instead of the all-zero word.
    #[serde(default)]
    pub random_codewords: bool,
}

impl EvalConfig {
    pub fn new(snr_points_db: Vec<f64>, seed: u64) -> Self {
        EvalConfig {
            snr_points_db,
            min_frame_errors: 100,
            max_frames: 10_000_000,
            seed,
            shard_frames: 100,
            workers: 1,
            random_codewords: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.snr_points_db.is_empty() {
            return Err(Error::InvalidArgument("SNR list is empty".into()));
        }
        if self.min_frame_errors == 0 || self.max_frames == 0 || self.shard_frames == 0 || self.workers == 0 {
            return Err(Error::InvalidArgument(
                "min_frame_errors, max_frames, shard_frames and workers must be positive".into(),
            ));
        }
        if self.snr_points_db.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidArgument("SNR values must be finite".into()));
        }
        Ok(())
    }
}

/// Results at one SNR point. The fields are exactly the CSV columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FerRecord {
    pub snr_db: f64,
    pub frames: u64,
    pub frame_errors: u64,
    pub bit_errors: u64,
    pub fer: f64,
    pub ber: f64,
    pub fer_lo: f64,
    pub fer_hi: f64,
    /// BP iterations per frame, summed over the experts that ran.
    pub mean_iterations: f64,
    pub gating_bypass: u64,
    pub gating_hdd: u64,
    pub gating_fallback: u64,
    /// Frames in which each expert was active.
    pub expert_usage: Vec<u64>,
}

impl FerRecord {
    /// Fewer frame errors than requested were collected.
    pub fn low_confidence(&self, min_frame_errors: u64) -> bool {
        self.frame_errors < min_frame_errors
    }
}

/// Wilson score interval for `errors` successes in `frames` trials.
pub fn wilson_interval(errors: u64, frames: u64) -> (f64, f64) {
    if frames == 0 {
        return (0.0, 1.0);
    }
    let n = frames as f64;
    let p = errors as f64 / n;
    let z2 = WILSON_Z * WILSON_Z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = WILSON_Z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    // rounding at p = 0 or 1 must not exclude the estimate
    ((center - half).clamp(0.0, p), (center + half).clamp(p, 1.0))
}

#[derive(Debug, Clone, Default)]
struct Tally {
    frames: u64,
    frame_errors: u64,
    bit_errors: u64,
    iterations: u64,
    bypass: u64,
    hdd: u64,
    fallback: u64,
    usage: Vec<u64>,
}

impl Tally {
    fn add(&mut self, o: &Tally) {
        self.frames += o.frames;
        self.frame_errors += o.frame_errors;
        self.bit_errors += o.bit_errors;
        self.iterations += o.iterations;
        self.bypass += o.bypass;
        self.hdd += o.hdd;
        self.fallback += o.fallback;
        if self.usage.len() < o.usage.len() {
            self.usage.resize(o.usage.len(), 0);
        }
        for (a, b) in self.usage.iter_mut().zip(&o.usage) {
            *a += b;
        }
    }

    fn into_record(self, snr_db: f64, alpha: usize) -> FerRecord {
        let (fer_lo, fer_hi) = wilson_interval(self.frame_errors, self.frames);
        let frames = self.frames.max(1) as f64;
        let mut usage = self.usage;
        usage.resize(alpha, 0);
        FerRecord {
            snr_db,
            frames: self.frames,
            frame_errors: self.frame_errors,
            bit_errors: self.bit_errors,
            fer: if self.frames == 0 { 0.0 } else { self.frame_errors as f64 / frames },
            ber: 0.0,
            fer_lo,
            fer_hi,
            mean_iterations: self.iterations as f64 / frames,
            gating_bypass: self.bypass,
            gating_hdd: self.hdd,
            gating_fallback: self.fallback,
            expert_usage: usage,
        }
    }
}

struct Shard<'a, D: FrameDecoder> {
    decoder: &'a D,
    channel: ChannelConfig,
    generator: Option<&'a Generator>,
    n: usize,
}

impl<D: FrameDecoder> Shard<'_, D> {
    fn run(&self, rng: &mut ChaCha8Rng, frames: u64) -> Result<Tally> {
        let mut t = Tally {
            usage: vec![0; self.decoder.alpha()],
            ..Tally::default()
        };
        let zero = Codeword::zeros(self.n);
        let zero_x = modulate_bpsk(&zero);
        for _ in 0..frames {
            let (sent, llr) = match self.generator {
                Some(g) => {
                    let c = g.random_codeword(rng);
                    let llr = transmit(&modulate_bpsk(&c), &self.channel, rng)?;
                    (c, llr)
                }
                None => (zero.clone(), transmit(&zero_x, &self.channel, rng)?),
            };
            let out = self.decoder.decode_frame(llr.values(), rng)?;
            check_len("decoded word length", self.n, out.codeword.len())?;
            let wrong = out.codeword.bits().iter().zip(sent.bits()).filter(|(a, b)| a != b).count() as u64;
            t.frames += 1;
            t.bit_errors += wrong;
            t.frame_errors += u64::from(wrong > 0);
            t.iterations += out.iterations as u64;
            match out.source {
                Some(GatingSource::Bypass) => t.bypass += 1,
                Some(GatingSource::HddRegion) => t.hdd += 1,
                Some(GatingSource::HddFailureFallback) => t.fallback += 1,
                _ => {}
            }
            for (u, &a) in t.usage.iter_mut().zip(&out.active) {
                *u += u64::from(a);
            }
        }
        Ok(t)
    }
}

/// Simulates every SNR point until `min_frame_errors` frame errors or
/// `max_frames` frames.
pub fn run_sweep<D: FrameDecoder>(cfg: &EvalConfig, code: &CodeSpec, h: &ParityCheckMatrix, decoder: &D) -> Result<Vec<FerRecord>> {
    cfg.validate()?;
    check_len("parity-check columns", code.n, h.cols())?;
    let generator = cfg.random_codewords.then(|| Generator::from_parity_check(h));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let mut records = Vec::with_capacity(cfg.snr_points_db.len());
    for (pi, &snr) in cfg.snr_points_db.iter().enumerate() {
        let shard = Shard {
            decoder,
            channel: ChannelConfig::from_snr(snr, code.rate())?,
            generator: generator.as_ref(),
            n: code.n,
        };
        let mut total = Tally {
            usage: vec![0; decoder.alpha()],
            ..Tally::default()
        };
        let mut next_shard = 0u64;
        'point: loop {
            // one wave of shards, merged in shard order
            let wave: Vec<(u64, u64)> = (0..cfg.workers as u64)
                .map(|i| {
                    let s = next_shard + i;
                    let start = s * cfg.shard_frames;
                    (s, cfg.shard_frames.min(cfg.max_frames.saturating_sub(start)))
                })
                .filter(|&(_, f)| f > 0)
                .collect();
            if wave.is_empty() {
                break;
            }
            next_shard += wave.len() as u64;
            let tallies: Vec<Result<Tally>> = pool.install(|| {
                wave.par_iter()
                    .map(|&(s, frames)| {
                        let mut rng = stream_rng(cfg.seed, EVAL_STREAM + ((pi as u64) << 32) + s);
                        shard.run(&mut rng, frames)
                    })
                    .collect()
            });
            for t in tallies {
                total.add(&t?);
                if total.frame_errors >= cfg.min_frame_errors || total.frames >= cfg.max_frames {
                    break 'point;
                }
            }
        }
        let bits = total.frames * code.n as u64;
        let bit_errors = total.bit_errors;
        let mut rec = total.into_record(snr, decoder.alpha());
        rec.ber = if bits == 0 { 0.0 } else { bit_errors as f64 / bits as f64 };
        if rec.low_confidence(cfg.min_frame_errors) {
            log::warn!(
                "SNR {snr} dB: {} frame errors in {} frames (below {}); low confidence",
                rec.frame_errors,
                rec.frames,
                cfg.min_frame_errors
            );
        }
        records.push(rec);
    }
    Ok(records)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointEcho {
    pub snr_db: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub code_id: String,
    pub rate: f64,
    pub decoder: String,
    pub snr_convention: String,
    pub rng: String,
    #[serde(flatten)]
    pub eval: EvalConfig,
    pub points: Vec<PointEcho>,
}

impl ConfigEcho {
    pub fn new(cfg: &EvalConfig, code: &CodeSpec, decoder: &str) -> Result<Self> {
        let points = cfg
            .snr_points_db
            .iter()
            .map(|&s| Ok(PointEcho { snr_db: s, sigma: ChannelConfig::from_snr(s, code.rate())?.sigma }))
            .collect::<Result<Vec<_>>>()?;
        Ok(ConfigEcho {
            code_id: code.code_id.clone(),
            rate: code.rate(),
            decoder: decoder.to_string(),
            snr_convention: SNR_CONVENTION.to_string(),
            rng: RNG_ID.to_string(),
            eval: cfg.clone(),
            points,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JsonRecord {
    #[serde(flatten)]
    pub record: FerRecord,
    pub low_confidence: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config: ConfigEcho,
    pub records: Vec<JsonRecord>,
}

impl EvalReport {
    pub fn new(config: ConfigEcho, records: &[FerRecord]) -> Self {
        let min = config.eval.min_frame_errors;
        EvalReport {
            records: records
                .iter()
                .map(|r| JsonRecord {
                    record: r.clone(),
                    low_confidence: r.low_confidence(min),
                })
                .collect(),
            config,
        }
    }

    pub fn fer_records(&self) -> Vec<FerRecord> {
        self.records.iter().map(|r| r.record.clone()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExportFormat {
    Csv,
    Json,
}

impl ExportFormat {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ExportFormat::Csv),
            "json" => Ok(ExportFormat::Json),
            other => Err(Error::InvalidArgument(format!("unknown format '{other}' (csv or json)"))),
        }
    }
}

const FIXED_COLUMNS: [&str; 12] = [
    "snr_db",
    "frames",
    "frame_errors",
    "bit_errors",
    "fer",
    "ber",
    "fer_lo",
    "fer_hi",
    "mean_iterations",
    "gating_bypass",
    "gating_hdd",
    "gating_fallback",
];

pub fn csv_header(alpha: usize) -> Vec<String> {
    FIXED_COLUMNS
        .iter()
        .map(|s| s.to_string())
        .chain((1..=alpha).map(|i| format!("expert_usage_{i}")))
        .collect()
}

pub fn write_csv<W: Write>(records: &[FerRecord], out: W) -> Result<()> {
    let alpha = records.first().map_or(0, |r| r.expert_usage.len());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(csv_header(alpha))?;
    for r in records {
        check_len("expert usage columns", alpha, r.expert_usage.len())?;
        let mut row = vec![
            r.snr_db.to_string(),
            r.frames.to_string(),
            r.frame_errors.to_string(),
            r.bit_errors.to_string(),
            r.fer.to_string(),
            r.ber.to_string(),
            r.fer_lo.to_string(),
            r.fer_hi.to_string(),
            r.mean_iterations.to_string(),
            r.gating_bypass.to_string(),
            r.gating_hdd.to_string(),
            r.gating_fallback.to_string(),
        ];
        row.extend(r.expert_usage.iter().map(u64::to_string));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

pub fn read_csv(text: &str, source: &str) -> Result<Vec<FerRecord>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header.len() < FIXED_COLUMNS.len() || header[..FIXED_COLUMNS.len()] != FIXED_COLUMNS {
        return Err(Error::Parse {
            path: source.to_string(),
            line: 1,
            message: "unexpected CSV header".into(),
        });
    }
    let alpha = header.len() - FIXED_COLUMNS.len();
    if header != csv_header(alpha) {
        return Err(Error::Parse {
            path: source.to_string(),
            line: 1,
            message: "unexpected expert usage columns".into(),
        });
    }
    let mut out = Vec::new();
    for (i, row) in r.records().enumerate() {
        let row = row?;
        let line = i + 2;
        let bad = |col: usize| Error::Parse {
            path: source.to_string(),
            line,
            message: format!("bad value in column '{}'", header[col]),
        };
        let f = |col: usize| row.get(col).and_then(|s| s.parse::<f64>().ok()).ok_or_else(|| bad(col));
        let u = |col: usize| row.get(col).and_then(|s| s.parse::<u64>().ok()).ok_or_else(|| bad(col));
        out.push(FerRecord {
            snr_db: f(0)?,
            frames: u(1)?,
            frame_errors: u(2)?,
            bit_errors: u(3)?,
            fer: f(4)?,
            ber: f(5)?,
            fer_lo: f(6)?,
            fer_hi: f(7)?,
            mean_iterations: f(8)?,
            gating_bypass: u(9)?,
            gating_hdd: u(10)?,
            gating_fallback: u(11)?,
            expert_usage: (0..alpha).map(|j| u(12 + j)).collect::<Result<_>>()?,
        });
    }
    Ok(out)
}

/// Writes records as CSV, or as JSON with the configuration echo.
pub fn export(records: &[FerRecord], echo: &ConfigEcho, path: impl AsRef<Path>, format: ExportFormat) -> Result<()> {
    let path = path.as_ref();
    match format {
        ExportFormat::Json => crate::persist::write_json(path, &EvalReport::new(echo.clone(), records)),
        ExportFormat::Csv => {
            let mut buf = Vec::new();
            write_csv(records, &mut buf)?;
            std::fs::write(path, buf).map_err(|e| Error::io(path, e))
        }
    }
}

/// Reads records from a CSV or JSON result file (by extension, JSON when
/// the content starts with '{').
pub fn import(path: impl AsRef<Path>) -> Result<Vec<FerRecord>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    if text.trim_start().starts_with('{') {
        let report: EvalReport = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
        Ok(report.fer_records())
    } else {
        read_csv(&text, &path.display().to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparePoint {
    pub snr_db: f64,
    pub fer_a: f64,
    pub fer_b: f64,
    /// fer_b / fer_a; None when fer_a is zero.
    pub ratio: Option<f64>,
    pub intervals_overlap: bool,
    /// SNR saved by curve b at the FER curve a reaches here; positive means
    /// b is better. None where b's range does not bracket the level.
    pub gain_db: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub points: Vec<ComparePoint>,
    pub max_gain_db: Option<f64>,
}

/// SNR at which `curve` reaches `level`, by linear interpolation of log10
/// FER between adjacent points. Points with zero FER are skipped.
fn snr_at_level(curve: &[(f64, f64)], level: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = curve.iter().filter(|(_, f)| *f > 0.0).map(|&(s, f)| (s, f.log10())).collect();
    let target = level.log10();
    for w in pts.windows(2) {
        let ((s0, l0), (s1, l1)) = (w[0], w[1]);
        let (lo, hi) = if l0 <= l1 { (l0, l1) } else { (l1, l0) };
        if target < lo || target > hi {
            continue;
        }
        if l1 == l0 {
            return Some(s0);
        }
        return Some(s0 + (target - l0) / (l1 - l0) * (s1 - s0));
    }
    // exact hit on a single point
    pts.iter().find(|(_, l)| *l == target).map(|&(s, _)| s)
}

/// Pointwise comparison of two curves on their shared SNR grid.
pub fn compare_curves(a: &[FerRecord], b: &[FerRecord]) -> Result<CompareReport> {
    let mut sorted_b: Vec<(f64, f64)> = b.iter().map(|r| (r.snr_db, r.fer)).collect();
    sorted_b.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut points = Vec::new();
    for ra in a {
        let Some(rb) = b.iter().find(|r| r.snr_db == ra.snr_db) else {
            continue;
        };
        let gain_db = if ra.fer > 0.0 {
            snr_at_level(&sorted_b, ra.fer).map(|s| ra.snr_db - s)
        } else {
            None
        };
        points.push(ComparePoint {
            snr_db: ra.snr_db,
            fer_a: ra.fer,
            fer_b: rb.fer,
            ratio: (ra.fer > 0.0).then(|| rb.fer / ra.fer),
            intervals_overlap: ra.fer_lo <= rb.fer_hi && rb.fer_lo <= ra.fer_hi,
            gain_db,
        });
    }
    if points.is_empty() {
        return Err(Error::InvalidArgument("curves share no SNR points".into()));
    }
    let max_gain_db = points.iter().filter_map(|p| p.gain_db).reduce(f64::max);
    Ok(CompareReport { points, max_gain_db })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(snr: f64, frames: u64, errors: u64) -> FerRecord {
        let mut t = Tally {
            frames,
            frame_errors: errors,
            bit_errors: errors * 3,
            iterations: frames * 2,
            usage: vec![frames, 0, 1],
            ..Tally::default()
        };
        t.bypass = 1;
        let mut r = t.into_record(snr, 3);
        r.ber = errors as f64 * 3.0 / (frames as f64 * 63.0);
        r
    }

    #[test]
    fn wilson_contains_estimate() {
        for (e, n) in [(0, 10), (1, 10), (5, 10), (10, 10), (100, 1_000_000), (37, 2000)] {
            let (lo, hi) = wilson_interval(e, n);
            let p = e as f64 / n as f64;
            assert!(lo <= p && p <= hi, "{e}/{n}: [{lo}, {hi}]");
            assert!((0.0..=1.0).contains(&lo) && (0.0..=1.0).contains(&hi));
        }
        // statsmodels proportion_confint(method="wilson")
        let refs = [
            (5, 10, 0.236_593_090_512_563_94, 0.763_406_909_487_436_1),
            (37, 2000, 0.013_451_349_814_109_871, 0.025_394_766_717_736_703),
            (0, 10, 0.0, 0.277_532_799_862_889_26),
        ];
        for (e, n, lo, hi) in refs {
            let got = wilson_interval(e, n);
            assert!((got.0 - lo).abs() < 1e-12 && (got.1 - hi).abs() < 1e-12, "{e}/{n}: {got:?}");
        }
        assert_eq!(wilson_interval(0, 0), (0.0, 1.0));
    }

    #[test]
    fn csv_round_trip_and_columns() {
        let recs = vec![record(4.0, 1000, 120), record(5.0, 123_456, 101)];
        let mut buf = Vec::new();
        write_csv(&recs, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let header = text.lines().next().unwrap();
        assert_eq!(header.split(',').filter(|c| c.starts_with("expert_usage_")).count(), 3);
        assert!(header.starts_with("snr_db,frames,frame_errors,bit_errors,fer,ber,fer_lo,fer_hi,mean_iterations,gating_bypass,gating_hdd,gating_fallback"));
        assert_eq!(read_csv(&text, "mem").unwrap(), recs);
        assert!(read_csv("a,b\n1,2\n", "mem").is_err());
    }

    #[test]
    fn identical_curves_have_zero_gain() {
        let a: Vec<FerRecord> = [(1.0, 500), (2.0, 200), (3.0, 50), (4.0, 5)]
            .iter()
            .map(|&(s, e)| record(s, 1000, e))
            .collect();
        let rep = compare_curves(&a, &a).unwrap();
        for p in &rep.points {
            assert_eq!(p.gain_db, Some(0.0));
            assert!(p.intervals_overlap);
        }
    }

    #[test]
    fn shifted_curve_gain_is_grid_step() {
        // log10 FER linear in SNR: fer(s) = 10^(-s/2)
        let mk = |shift: f64| -> Vec<FerRecord> {
            (0..6)
                .map(|i| {
                    let s = i as f64;
                    let mut r = record(s, 1000, 1);
                    r.fer = 10f64.powf(-(s + shift) / 2.0);
                    r
                })
                .collect()
        };
        let rep = compare_curves(&mk(0.0), &mk(1.0)).unwrap();
        let defined: Vec<f64> = rep.points.iter().filter_map(|p| p.gain_db).collect();
        assert!(defined.len() >= 4);
        for g in defined {
            assert!((g - 1.0).abs() < 1e-9, "{g}");
        }
        // the b curve never reaches the a curve's value at 0 dB
        assert_eq!(rep.points[0].gain_db, None);
    }

    #[test]
    fn disjoint_grids_rejected() {
        let a = vec![record(1.0, 10, 1)];
        let b = vec![record(2.0, 10, 1)];
        assert!(compare_curves(&a, &b).is_err());
    }
}
