//! Partitions of the error space into alpha regions.
//!
//! Region indices are 0-based throughout the API: index `i` is region
//! X^(i+1). Zero-weight patterns belong to no region; callers bypass them.
//!
//! Two partitions are provided: by Hamming weight, and by the most probable
//! component of a Bernoulli mixture fitted with EM. The mixture is either
//! naive (one Bernoulli vector per component) or syndrome-guided, where each
//! component holds two vectors and the syndrome label q_v of a bit selects
//! which one models it.

use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{q_function, stream_rng};
use crate::code::{ErrorPattern, ParityCheckMatrix};
use crate::error::{check_len, Error, Result};
use crate::training::TrainingSample;

/// Bernoulli parameters are kept in [MU_EPS, 1 - MU_EPS].
pub const MU_EPS: f64 = 1e-6;

const EM_CHUNK: usize = 1024;
const EM_STREAM: u64 = 3 << 40;
const PROP1_STREAM: u64 = 4 << 40;

/// Region of a nonzero pattern by weight: min(weight, alpha), 0-based.
pub fn hamming_region(e: &ErrorPattern, alpha: usize) -> Result<usize> {
    if alpha == 0 {
        return Err(Error::InvalidArgument("alpha must be positive".into()));
    }
    match e.weight() {
        0 => Err(Error::ZeroWeightPattern),
        w => Ok(w.min(alpha) - 1),
    }
}

/// q_v = 1 iff strictly more of v's checks are unsatisfied than satisfied
/// by s = H e.
pub fn syndrome_labels(h: &ParityCheckMatrix, e: &ErrorPattern) -> Result<Vec<u8>> {
    let s = h.syndrome(e.bits())?;
    Ok(labels_from_syndrome(h, &s))
}

fn labels_from_syndrome(h: &ParityCheckMatrix, s: &[u8]) -> Vec<u8> {
    (0..h.cols())
        .map(|v| {
            let unsat = h.var_neighbors(v).filter(|&c| s[c] == 1).count();
            u8::from(2 * unsat > h.var_degree(v))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixtureVariant {
    Naive,
    SyndromeGuided,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmConfig {
    pub max_iterations: usize,
    /// Converged when |delta log-likelihood| < tolerance_per_sample * K.
    pub tolerance_per_sample: f64,
    pub restarts: usize,
    pub seed: u64,
    /// Initial mu entries are drawn uniformly from this range.
    pub init_range: (f64, f64),
    /// Components with less responsibility mass are reinitialized.
    pub min_mass: f64,
}

impl Default for EmConfig {
    fn default() -> Self {
        EmConfig {
            max_iterations: 200,
            tolerance_per_sample: 1e-6,
            restarts: 5,
            seed: 0,
            init_range: (0.05, 0.3),
            min_mass: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BernoulliMixture {
    pub variant: MixtureVariant,
    pub pi: Vec<f64>,
    /// Naive: mu^(i). Syndrome-guided: mu^(i,0).
    pub mu0: Vec<Vec<f64>>,
    /// Syndrome-guided only: mu^(i,1).
    pub mu1: Vec<Vec<f64>>,
    pub log_likelihood_trace: Vec<f64>,
    pub reinitializations: usize,
}

impl BernoulliMixture {
    pub fn alpha(&self) -> usize {
        self.pi.len()
    }

    pub fn len(&self) -> usize {
        self.mu0.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn final_log_likelihood(&self) -> f64 {
        self.log_likelihood_trace.last().copied().unwrap_or(f64::NEG_INFINITY)
    }

    /// mu_v^(i, q_v) for the given labels (naive mixtures ignore labels).
    fn mu(&self, i: usize, v: usize, q: Option<&[u8]>) -> f64 {
        match (self.variant, q) {
            (MixtureVariant::SyndromeGuided, Some(q)) if q[v] == 1 => self.mu1[i][v],
            _ => self.mu0[i][v],
        }
    }

    /// log pi_i + log P(e | component i), evaluated term by term.
    pub fn log_joint(&self, e: &ErrorPattern, q: Option<&[u8]>) -> Vec<f64> {
        (0..self.alpha())
            .map(|i| {
                let mut acc = self.pi[i].ln();
                for (v, &b) in e.bits().iter().enumerate() {
                    let m = self.mu(i, v, q);
                    acc += if b == 1 { m.ln() } else { (1.0 - m).ln() };
                }
                acc
            })
            .collect()
    }

    pub fn to_file(&self, code_id: &str, k: usize, seed: u64) -> MixtureFile {
        let syn = self.variant == MixtureVariant::SyndromeGuided;
        MixtureFile {
            variant: self.variant,
            alpha: self.alpha(),
            pi: self.pi.clone(),
            mu: (!syn).then(|| self.mu0.clone()),
            mu0: syn.then(|| self.mu0.clone()),
            mu1: syn.then(|| self.mu1.clone()),
            log_likelihood_trace: self.log_likelihood_trace.clone(),
            metadata: MixtureMetadata {
                code_id: code_id.to_string(),
                k,
                seed,
                final_log_likelihood: self.final_log_likelihood(),
                reinitializations: self.reinitializations,
            },
        }
    }

    pub fn from_file(file: &MixtureFile) -> Result<Self> {
        let missing = |f: &str| Error::InvalidArgument(format!("mixture file lacks '{f}'"));
        let (mu0, mu1) = match file.variant {
            MixtureVariant::Naive => (file.mu.clone().ok_or_else(|| missing("mu"))?, Vec::new()),
            MixtureVariant::SyndromeGuided => (
                file.mu0.clone().ok_or_else(|| missing("mu0"))?,
                file.mu1.clone().ok_or_else(|| missing("mu1"))?,
            ),
        };
        check_len("mixture components", file.alpha, file.pi.len())?;
        check_len("mixture components", file.alpha, mu0.len())?;
        if file.variant == MixtureVariant::SyndromeGuided {
            check_len("mixture components", file.alpha, mu1.len())?;
        }
        Ok(BernoulliMixture {
            variant: file.variant,
            pi: file.pi.clone(),
            mu0,
            mu1,
            log_likelihood_trace: file.log_likelihood_trace.clone(),
            reinitializations: file.metadata.reinitializations,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureMetadata {
    pub code_id: String,
    #[serde(rename = "K")]
    pub k: usize,
    pub seed: u64,
    pub final_log_likelihood: f64,
    pub reinitializations: usize,
}

/// On-disk mixture: `mu` for naive mixtures, `mu0`/`mu1` for
/// syndrome-guided ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureFile {
    pub variant: MixtureVariant,
    pub alpha: usize,
    pub pi: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mu: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mu0: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mu1: Option<Vec<Vec<f64>>>,
    pub log_likelihood_trace: Vec<f64>,
    pub metadata: MixtureMetadata,
}

/// Posterior component probabilities, one row per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Responsibility {
    pub rows: Vec<Vec<f64>>,
}

/// Error patterns prepared for EM: supports and (optionally) labels.
struct EmData {
    len: usize,
    support: Vec<Vec<u32>>,
    labels: Option<Vec<Vec<u8>>>,
    label_support: Option<Vec<Vec<u32>>>,
}

impl EmData {
    fn new(samples: &[ErrorPattern], h: Option<&ParityCheckMatrix>) -> Result<Self> {
        let len = samples[0].len();
        for s in samples {
            check_len("error pattern length", len, s.len())?;
        }
        let support = samples.iter().map(|e| e.support().map(|v| v as u32).collect()).collect();
        let labels = match h {
            Some(h) => Some(samples.iter().map(|e| syndrome_labels(h, e)).collect::<Result<Vec<_>>>()?),
            None => None,
        };
        let label_support = labels.as_ref().map(|ls: &Vec<Vec<u8>>| {
            ls.iter()
                .map(|q| q.iter().enumerate().filter(|(_, &b)| b == 1).map(|(v, _)| v as u32).collect())
                .collect()
        });
        Ok(EmData {
            len,
            support,
            labels,
            label_support,
        })
    }

    fn count(&self) -> usize {
        self.support.len()
    }
}

/// Per-component constants giving log P(e | i) as a sparse sum.
struct LogTables {
    // sum_v ln(1 - mu0_iv)
    base: Vec<f64>,
    // ln mu_b - ln(1 - mu_b), for b = 0 and (syndrome-guided) b = 1
    logit0: Vec<Vec<f64>>,
    logit1: Vec<Vec<f64>>,
    // ln(1 - mu1) - ln(1 - mu0)
    label_shift: Vec<Vec<f64>>,
    log_pi: Vec<f64>,
}

impl LogTables {
    fn new(m: &BernoulliMixture) -> Self {
        let syn = m.variant == MixtureVariant::SyndromeGuided;
        let logit = |mu: &Vec<f64>| mu.iter().map(|&p| p.ln() - (1.0 - p).ln()).collect::<Vec<f64>>();
        LogTables {
            base: m.mu0.iter().map(|mu| mu.iter().map(|&p| (1.0 - p).ln()).sum()).collect(),
            logit0: m.mu0.iter().map(logit).collect(),
            logit1: if syn { m.mu1.iter().map(logit).collect() } else { Vec::new() },
            label_shift: if syn {
                m.mu0
                    .iter()
                    .zip(&m.mu1)
                    .map(|(a, b)| a.iter().zip(b).map(|(&p0, &p1)| (1.0 - p1).ln() - (1.0 - p0).ln()).collect())
                    .collect()
            } else {
                Vec::new()
            },
            log_pi: m.pi.iter().map(|p| p.ln()).collect(),
        }
    }

    fn log_joint(&self, data: &EmData, k: usize, out: &mut [f64]) {
        let support = &data.support[k];
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = self.log_pi[i] + self.base[i];
            match (&data.labels, &data.label_support) {
                (Some(labels), Some(lsup)) if !self.logit1.is_empty() => {
                    let q = &labels[k];
                    for &v in &lsup[k] {
                        acc += self.label_shift[i][v as usize];
                    }
                    for &v in support {
                        let v = v as usize;
                        acc += if q[v] == 1 { self.logit1[i][v] } else { self.logit0[i][v] };
                    }
                }
                _ => {
                    for &v in support {
                        acc += self.logit0[i][v as usize];
                    }
                }
            }
            *o = acc;
        }
    }
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.iter().map(|&x| (x - max).exp()).sum::<f64>().ln()
}

/// Sufficient statistics of one E-step.
#[derive(Clone)]
struct Stats {
    log_likelihood: f64,
    mass: Vec<f64>,
    // sum_k R_ki e_kv
    ones: Vec<Vec<f64>>,
    // sum_k R_ki [q_kv = 1]
    label_mass: Vec<Vec<f64>>,
    // sum_k R_ki [q_kv = 1] e_kv
    label_ones: Vec<Vec<f64>>,
}

impl Stats {
    fn zeros(alpha: usize, len: usize, syn: bool) -> Self {
        let grid = || vec![vec![0.0; len]; alpha];
        Stats {
            log_likelihood: 0.0,
            mass: vec![0.0; alpha],
            ones: grid(),
            label_mass: if syn { grid() } else { Vec::new() },
            label_ones: if syn { grid() } else { Vec::new() },
        }
    }

    fn add(&mut self, other: &Stats) {
        self.log_likelihood += other.log_likelihood;
        let add_grid = |a: &mut Vec<Vec<f64>>, b: &Vec<Vec<f64>>| {
            for (ra, rb) in a.iter_mut().zip(b) {
                ra.iter_mut().zip(rb).for_each(|(x, y)| *x += y);
            }
        };
        self.mass.iter_mut().zip(&other.mass).for_each(|(x, y)| *x += y);
        add_grid(&mut self.ones, &other.ones);
        add_grid(&mut self.label_mass, &other.label_mass);
        add_grid(&mut self.label_ones, &other.label_ones);
    }
}

fn e_step(m: &BernoulliMixture, data: &EmData) -> Stats {
    let tables = LogTables::new(m);
    let alpha = m.alpha();
    let syn = m.variant == MixtureVariant::SyndromeGuided;
    let indices: Vec<usize> = (0..data.count()).collect();
    let partials: Vec<Stats> = indices
        .par_chunks(EM_CHUNK)
        .map(|chunk| {
            let mut st = Stats::zeros(alpha, data.len, syn);
            let mut lj = vec![0.0; alpha];
            for &k in chunk {
                tables.log_joint(data, k, &mut lj);
                let norm = log_sum_exp(&lj);
                st.log_likelihood += norm;
                for i in 0..alpha {
                    let r = (lj[i] - norm).exp();
                    st.mass[i] += r;
                    for &v in &data.support[k] {
                        st.ones[i][v as usize] += r;
                    }
                    if syn {
                        let q = &data.labels.as_ref().expect("labels")[k];
                        for &v in &data.label_support.as_ref().expect("labels")[k] {
                            st.label_mass[i][v as usize] += r;
                        }
                        for &v in &data.support[k] {
                            if q[v as usize] == 1 {
                                st.label_ones[i][v as usize] += r;
                            }
                        }
                    }
                }
            }
            st
        })
        .collect();
    let mut total = Stats::zeros(alpha, data.len, syn);
    for p in &partials {
        total.add(p);
    }
    total
}

fn clamp_mu(p: f64) -> f64 {
    p.clamp(MU_EPS, 1.0 - MU_EPS)
}

/// M-step; returns the indices of starved components.
fn m_step(m: &mut BernoulliMixture, st: &Stats, count: usize, min_mass: f64) -> Vec<usize> {
    let mut starved = Vec::new();
    for i in 0..m.alpha() {
        let mass = st.mass[i];
        m.pi[i] = mass / count as f64;
        if mass <= 0.0 || mass < min_mass {
            starved.push(i);
            continue;
        }
        match m.variant {
            MixtureVariant::Naive => {
                for v in 0..m.len() {
                    m.mu0[i][v] = clamp_mu(st.ones[i][v] / mass);
                }
            }
            MixtureVariant::SyndromeGuided => {
                for v in 0..m.len() {
                    let mass1 = st.label_mass[i][v];
                    let ones1 = st.label_ones[i][v];
                    let mass0 = mass - mass1;
                    let ones0 = st.ones[i][v] - ones1;
                    // An empty (v, b) cell keeps its previous parameter.
                    if mass0 > 1e-12 * mass {
                        m.mu0[i][v] = clamp_mu(ones0 / mass0);
                    }
                    if mass1 > 1e-12 * mass {
                        m.mu1[i][v] = clamp_mu(ones1 / mass1);
                    }
                }
            }
        }
    }
    starved
}

fn random_mixture<R: Rng>(variant: MixtureVariant, alpha: usize, len: usize, cfg: &EmConfig, rng: &mut R) -> BernoulliMixture {
    let (lo, hi) = cfg.init_range;
    let mut draw = || (0..alpha).map(|_| (0..len).map(|_| rng.random_range(lo..hi)).collect()).collect::<Vec<Vec<f64>>>();
    let mu0 = draw();
    let mu1 = if variant == MixtureVariant::SyndromeGuided { draw() } else { Vec::new() };
    BernoulliMixture {
        variant,
        pi: vec![1.0 / alpha as f64; alpha],
        mu0,
        mu1,
        log_likelihood_trace: Vec::new(),
        reinitializations: 0,
    }
}

fn run_em<R: Rng>(mut m: BernoulliMixture, data: &EmData, cfg: &EmConfig, rng: &mut R) -> BernoulliMixture {
    let count = data.count();
    let tol = cfg.tolerance_per_sample * count as f64;
    let (lo, hi) = cfg.init_range;
    let mut steps = 0;
    loop {
        let st = e_step(&m, data);
        let ll = st.log_likelihood;
        let converged = m
            .log_likelihood_trace
            .last()
            .is_some_and(|&prev| (ll - prev).abs() < tol);
        m.log_likelihood_trace.push(ll);
        if converged || steps == cfg.max_iterations {
            break;
        }
        let starved = m_step(&mut m, &st, count, cfg.min_mass);
        if !starved.is_empty() {
            for &i in &starved {
                for v in 0..m.len() {
                    m.mu0[i][v] = rng.random_range(lo..hi);
                    if m.variant == MixtureVariant::SyndromeGuided {
                        m.mu1[i][v] = rng.random_range(lo..hi);
                    }
                }
                m.pi[i] = 1.0 / m.alpha() as f64;
            }
            let total: f64 = m.pi.iter().sum();
            m.pi.iter_mut().for_each(|p| *p /= total);
            m.reinitializations += starved.len();
            log::warn!("EM: reinitialized {} starved component(s)", starved.len());
        }
        steps += 1;
    }
    m
}

/// Fits a Bernoulli mixture by EM; best of `cfg.restarts` random starts by
/// final log-likelihood. The syndrome-guided variant needs `h` for labels.
pub fn em_fit(
    samples: &[ErrorPattern],
    alpha: usize,
    variant: MixtureVariant,
    cfg: &EmConfig,
    h: Option<&ParityCheckMatrix>,
) -> Result<BernoulliMixture> {
    if alpha == 0 || samples.len() < alpha {
        return Err(Error::InvalidArgument(format!(
            "EM needs 1 <= alpha <= K (alpha = {alpha}, K = {})",
            samples.len()
        )));
    }
    let h = match variant {
        MixtureVariant::Naive => None,
        MixtureVariant::SyndromeGuided => Some(h.ok_or_else(|| {
            Error::InvalidArgument("syndrome-guided EM needs the parity-check matrix".into())
        })?),
    };
    let data = EmData::new(samples, h)?;
    let mut best: Option<BernoulliMixture> = None;
    for r in 0..cfg.restarts.max(1) {
        let mut rng = stream_rng(cfg.seed, EM_STREAM + r as u64);
        let init = random_mixture(variant, alpha, data.len, cfg, &mut rng);
        let fitted = run_em(init, &data, cfg, &mut rng);
        log::debug!("EM restart {r}: log-likelihood {}", fitted.final_log_likelihood());
        if best.as_ref().is_none_or(|b| fitted.final_log_likelihood() > b.final_log_likelihood()) {
            best = Some(fitted);
        }
    }
    Ok(best.expect("at least one restart"))
}

/// One EM iteration (E-step then M-step) from `m`, without restarts or
/// reinitialization. Returns the updated mixture and the log-likelihood of
/// `m` on the samples.
pub fn em_step(m: &BernoulliMixture, samples: &[ErrorPattern], h: Option<&ParityCheckMatrix>) -> Result<(BernoulliMixture, f64)> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("EM step needs samples".into()));
    }
    let h = match m.variant {
        MixtureVariant::Naive => None,
        MixtureVariant::SyndromeGuided => Some(h.ok_or_else(|| Error::InvalidArgument("labels need H".into()))?),
    };
    let data = EmData::new(samples, h)?;
    check_len("error pattern length", m.len(), data.len)?;
    let st = e_step(m, &data);
    let mut next = m.clone();
    m_step(&mut next, &st, data.count(), 0.0);
    Ok((next, st.log_likelihood))
}

/// Posterior responsibilities of each sample.
pub fn responsibilities(m: &BernoulliMixture, samples: &[ErrorPattern], h: Option<&ParityCheckMatrix>) -> Result<Responsibility> {
    let labels_needed = m.variant == MixtureVariant::SyndromeGuided;
    let rows = samples
        .iter()
        .map(|e| {
            let q = if labels_needed {
                Some(syndrome_labels(h.ok_or_else(|| Error::InvalidArgument("labels need H".into()))?, e)?)
            } else {
                None
            };
            let lj = m.log_joint(e, q.as_deref());
            let norm = log_sum_exp(&lj);
            Ok(lj.iter().map(|x| (x - norm).exp()).collect())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Responsibility { rows })
}

/// Most probable component of `e`; ties go to the lowest index.
pub fn em_region(m: &BernoulliMixture, e: &ErrorPattern, h: Option<&ParityCheckMatrix>) -> Result<usize> {
    check_len("error pattern length", m.len(), e.len())?;
    let q = match m.variant {
        MixtureVariant::Naive => None,
        MixtureVariant::SyndromeGuided => Some(syndrome_labels(
            h.ok_or_else(|| Error::InvalidArgument("syndrome-guided regions need H".into()))?,
            e,
        )?),
    };
    let lj = m.log_joint(e, q.as_deref());
    let mut best = 0;
    for (i, &x) in lj.iter().enumerate() {
        if x > lj[best] {
            best = i;
        }
    }
    Ok(best)
}

/// A partition of the nonzero error patterns into alpha regions.
#[derive(Debug, Clone, PartialEq)]
pub enum PartitionModel {
    Hamming { alpha: usize },
    Em(BernoulliMixture),
}

impl PartitionModel {
    pub fn alpha(&self) -> usize {
        match self {
            PartitionModel::Hamming { alpha } => *alpha,
            PartitionModel::Em(m) => m.alpha(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            PartitionModel::Hamming { .. } => "hamming",
            PartitionModel::Em(m) => match m.variant {
                MixtureVariant::Naive => "em",
                MixtureVariant::SyndromeGuided => "em-syndrome",
            },
        }
    }

    /// 0-based region of a nonzero pattern.
    pub fn assign(&self, e: &ErrorPattern, h: &ParityCheckMatrix) -> Result<usize> {
        if e.weight() == 0 {
            return Err(Error::ZeroWeightPattern);
        }
        match self {
            PartitionModel::Hamming { alpha } => hamming_region(e, *alpha),
            PartitionModel::Em(m) => em_region(m, e, Some(h)),
        }
    }

    pub fn to_file(&self, code_id: &str, k: usize, seed: u64) -> PartitionFile {
        match self {
            PartitionModel::Hamming { alpha } => PartitionFile::Hamming {
                alpha: *alpha,
                code_id: code_id.to_string(),
            },
            PartitionModel::Em(m) => PartitionFile::Em(m.to_file(code_id, k, seed)),
        }
    }

    pub fn from_file(file: &PartitionFile) -> Result<Self> {
        match file {
            PartitionFile::Hamming { alpha, .. } => Ok(PartitionModel::Hamming { alpha: *alpha }),
            PartitionFile::Em(m) => Ok(PartitionModel::Em(BernoulliMixture::from_file(m)?)),
        }
    }

    pub fn save(&self, path: impl AsRef<Path>, code_id: &str, k: usize, seed: u64) -> Result<()> {
        crate::persist::write_json(path, &self.to_file(code_id, k, seed))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_file(&crate::persist::read_json(path)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PartitionFile {
    Hamming { alpha: usize, code_id: String },
    Em(MixtureFile),
}

#[derive(Debug, Clone)]
pub struct InducedDatasets {
    pub datasets: Vec<Vec<TrainingSample>>,
    pub dropped_zero_weight: usize,
    /// Regions that received no samples.
    pub empty_regions: Vec<usize>,
}

/// Routes every sample by its true error pattern.
pub fn induce_datasets(samples: &[TrainingSample], model: &PartitionModel, h: &ParityCheckMatrix) -> Result<InducedDatasets> {
    let mut datasets = vec![Vec::new(); model.alpha()];
    let mut dropped = 0;
    for s in samples {
        match model.assign(&s.true_error, h) {
            Ok(region) => datasets[region].push(s.clone()),
            Err(Error::ZeroWeightPattern) => dropped += 1,
            Err(e) => return Err(e),
        }
    }
    let empty_regions: Vec<usize> = (0..datasets.len()).filter(|&i| datasets[i].is_empty()).collect();
    for &i in &empty_regions {
        log::warn!("region {} received no training samples; its decoder cannot train", i + 1);
    }
    Ok(InducedDatasets {
        datasets,
        dropped_zero_weight: dropped,
        empty_regions,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prop1Component {
    pub sigma: f64,
    pub crossover: f64,
    pub fitted_mean: f64,
    pub max_deviation: f64,
    pub pi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prop1Report {
    pub k: usize,
    pub v: usize,
    pub components: Vec<Prop1Component>,
    pub max_deviation: f64,
    pub max_pi_deviation: f64,
    pub final_log_likelihood: f64,
}

/// Draws K / alpha patterns from each BSC(Q(1/sigma_i)), fits naive EM and
/// compares every fitted center with the flat vector of its channel.
/// Components are matched to channels by sorted means.
pub fn prop1_experiment(sigmas: &[f64], k: usize, v: usize, cfg: &EmConfig) -> Result<Prop1Report> {
    let alpha = sigmas.len();
    if alpha == 0 || k < alpha || v == 0 {
        return Err(Error::InvalidArgument("prop1 needs sigmas, K >= alpha and V > 0".into()));
    }
    let per = k / alpha;
    let mut samples = Vec::with_capacity(per * alpha);
    for (i, &sigma) in sigmas.iter().enumerate() {
        let p = q_function(1.0 / sigma);
        let mut rng = stream_rng(cfg.seed, PROP1_STREAM + i as u64);
        for _ in 0..per {
            samples.push(ErrorPattern((0..v).map(|_| u8::from(rng.random_bool(p))).collect()));
        }
    }
    let m = em_fit(&samples, alpha, MixtureVariant::Naive, cfg, None)?;
    let mean = |mu: &Vec<f64>| mu.iter().sum::<f64>() / mu.len() as f64;
    let mut comp_order: Vec<usize> = (0..alpha).collect();
    comp_order.sort_by(|&a, &b| mean(&m.mu0[a]).total_cmp(&mean(&m.mu0[b])));
    let mut chan_order: Vec<usize> = (0..alpha).collect();
    chan_order.sort_by(|&a, &b| q_function(1.0 / sigmas[a]).total_cmp(&q_function(1.0 / sigmas[b])));
    let mut components = vec![None; alpha];
    for (&ci, &si) in comp_order.iter().zip(&chan_order) {
        let p = q_function(1.0 / sigmas[si]);
        let mu = &m.mu0[ci];
        components[si] = Some(Prop1Component {
            sigma: sigmas[si],
            crossover: p,
            fitted_mean: mean(mu),
            max_deviation: mu.iter().map(|x| (x - p).abs()).fold(0.0, f64::max),
            pi: m.pi[ci],
        });
    }
    let components: Vec<Prop1Component> = components.into_iter().map(|c| c.expect("matched")).collect();
    Ok(Prop1Report {
        k: per * alpha,
        v,
        max_deviation: components.iter().map(|c| c.max_deviation).fold(0.0, f64::max),
        max_pi_deviation: components
            .iter()
            .map(|c| (c.pi - 1.0 / alpha as f64).abs())
            .fold(0.0, f64::max),
        final_log_likelihood: m.final_log_likelihood(),
        components,
    })
}
