//! Training of weighted-BP decoders.
//!
//! The objective is the multiloss: binary cross-entropy of the soft output
//! of every iteration against the transmitted codeword, summed over
//! iterations and bits and averaged over the batch. Gradients are exact
//! reverse-mode derivatives of the unrolled decoder; early stopping is off
//! during training so the graph always has depth T.
//!
//! Batch gradients are reduced in a fixed order: samples are grouped into
//! consecutive chunks of [`REDUCTION_CHUNK`], each chunk is summed in sample
//! order and chunk sums are added in chunk order. The result therefore does
//! not depend on the number of worker threads.

use std::path::Path;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bp::{forward_tape, Tape, Weighting, WeightsSet, MESSAGE_CLIP, TANH_PRODUCT_LIMIT};
use crate::channel::{hard_decision, stream_rng, transmit, ChannelConfig, LlrWord};
use crate::code::{CodeSpec, Codeword, ErrorPattern, ParityCheckMatrix};
use crate::error::{check_len, Error, Result};

pub const REDUCTION_CHUNK: usize = 32;

/// Clamp applied to soft outputs before taking logarithms.
pub const SOFT_OUTPUT_EPS: f64 = 1e-12;

const DATASET_STREAM: u64 = 1 << 40;
const SHUFFLE_STREAM: u64 = 2 << 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainMode {
    FromScratch,
    Finetune,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub snr_grid_db: Vec<f64>,
    /// Words per SNR in a generated batch; a minibatch holds
    /// `batch_per_snr * snr_grid_db.len()` samples.
    pub batch_per_snr: usize,
    pub learning_rate: f64,
    pub mode: TrainMode,
    /// Epoch budget. An epoch is `steps_per_epoch` optimizer steps followed
    /// by one validation pass.
    pub epochs: usize,
    pub steps_per_epoch: usize,
    pub seed: u64,
    pub clip_range: (f64, f64),
    pub iterations: usize,
    pub tied_weights: bool,
    pub rmsprop_decay: f64,
    pub rmsprop_eps: f64,
    /// Stop when validation loss has not improved by `plateau_min_delta`
    /// within `plateau_patience` epochs.
    pub plateau_patience: usize,
    pub plateau_min_delta: f64,
    pub validation_fraction: f64,
    pub max_validation: usize,
}

impl TrainConfig {
    pub fn from_scratch(seed: u64) -> Self {
        TrainConfig {
            snr_grid_db: vec![4.0, 5.0, 6.0, 7.0],
            batch_per_snr: 1000,
            learning_rate: 0.01,
            mode: TrainMode::FromScratch,
            epochs: 200,
            steps_per_epoch: 1,
            seed,
            clip_range: (-MESSAGE_CLIP, MESSAGE_CLIP),
            iterations: 5,
            tied_weights: false,
            rmsprop_decay: 0.9,
            rmsprop_eps: 1e-8,
            plateau_patience: 10,
            plateau_min_delta: 1e-4,
            validation_fraction: 0.05,
            max_validation: 4000,
        }
    }

    pub fn finetune(seed: u64) -> Self {
        TrainConfig {
            learning_rate: 0.001,
            mode: TrainMode::Finetune,
            ..Self::from_scratch(seed)
        }
    }

    pub fn batch_size(&self) -> usize {
        self.batch_per_snr * self.snr_grid_db.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.snr_grid_db.is_empty() {
            return Err(Error::InvalidArgument("training SNR grid is empty".into()));
        }
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::InvalidArgument(format!("invalid learning rate {}", self.learning_rate)));
        }
        if self.batch_per_snr == 0 || self.iterations == 0 || self.steps_per_epoch == 0 {
            return Err(Error::InvalidArgument(
                "batch_per_snr, iterations and steps_per_epoch must be positive".into(),
            ));
        }
        if self.clip_range != (-MESSAGE_CLIP, MESSAGE_CLIP) {
            return Err(Error::InvalidArgument(format!(
                "message range is fixed at ({}, {MESSAGE_CLIP})",
                -MESSAGE_CLIP
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSample {
    pub llr: LlrWord,
    pub target: Codeword,
    pub true_error: ErrorPattern,
}

impl TrainingSample {
    pub fn new(llr: LlrWord, target: Codeword) -> Self {
        let true_error = ErrorPattern::between(&hard_decision(llr.values()), target.bits());
        TrainingSample {
            llr,
            target,
            true_error,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub samples: Vec<TrainingSample>,
    pub per_snr: usize,
    /// Requested samples that did not fit an equal split over the grid.
    pub remainder: usize,
}

/// Zero-codeword transmissions, `count / |grid|` per training SNR in grid
/// order. Each SNR point draws from its own random stream.
pub fn generate_dataset(code: &CodeSpec, h: &ParityCheckMatrix, cfg: &TrainConfig, count: usize) -> Result<Dataset> {
    cfg.validate()?;
    check_len("parity-check columns", code.n, h.cols())?;
    let per_snr = count / cfg.snr_grid_db.len();
    let remainder = count - per_snr * cfg.snr_grid_db.len();
    if remainder > 0 {
        log::warn!("dataset of {count} words split as {per_snr} per SNR; {remainder} dropped");
    }
    let x = vec![1.0; code.n];
    let mut samples = Vec::with_capacity(per_snr * cfg.snr_grid_db.len());
    for (i, &snr) in cfg.snr_grid_db.iter().enumerate() {
        let ch = ChannelConfig::from_snr(snr, code.rate())?;
        let mut rng = stream_rng(cfg.seed, DATASET_STREAM + i as u64);
        for _ in 0..per_snr {
            let llr = transmit(&x, &ch, &mut rng)?;
            samples.push(TrainingSample::new(llr, Codeword::zeros(code.n)));
        }
    }
    Ok(Dataset {
        samples,
        per_snr,
        remainder,
    })
}

/// SHA-256 over LLR bit patterns and targets, in sample order.
pub fn dataset_fingerprint(samples: &[TrainingSample]) -> String {
    let mut hasher = Sha256::new();
    for s in samples {
        for l in s.llr.values() {
            hasher.update(l.to_bits().to_le_bytes());
        }
        hasher.update(s.target.bits());
    }
    hex::encode(hasher.finalize())
}

/// Multiloss of one word from its per-iteration soft outputs o^(t).
pub fn multiloss(soft_outputs: &[Vec<f64>], target: &[u8]) -> f64 {
    soft_outputs
        .iter()
        .map(|o| {
            o.iter()
                .zip(target)
                .map(|(&p, &c)| {
                    let p = p.clamp(SOFT_OUTPUT_EPS, 1.0 - SOFT_OUTPUT_EPS);
                    if c & 1 == 1 {
                        -p.ln()
                    } else {
                        -(1.0 - p).ln()
                    }
                })
                .sum::<f64>()
        })
        .sum()
}

/// Batch-averaged multiloss.
pub fn multiloss_batch(soft_outputs: &[Vec<Vec<f64>>], targets: &[&[u8]]) -> f64 {
    let total: f64 = soft_outputs.iter().zip(targets).map(|(o, t)| multiloss(o, t)).sum();
    total / soft_outputs.len() as f64
}

#[inline]
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Cross-entropy of o = logistic(-L) against bit c, written in L.
#[inline]
fn bce_marginal(marginal: f64, c: u8) -> f64 {
    if c & 1 == 1 {
        softplus(marginal)
    } else {
        softplus(-marginal)
    }
}

/// Multiloss of a recorded forward pass.
pub fn tape_loss(tape: &Tape, target: &[u8]) -> f64 {
    tape.marginal
        .iter()
        .map(|l| l.iter().zip(target).map(|(&x, &c)| bce_marginal(x, c)).sum::<f64>())
        .sum()
}

/// Loss of one sample and its gradient accumulated into `grad` (scaled by
/// `scale`).
fn backprop_sample(
    h: &ParityCheckMatrix,
    w: &WeightsSet,
    sample: &TrainingSample,
    scale: f64,
    grad: &mut WeightsSet,
    scratch: &mut BackScratch,
) -> Result<f64> {
    let llr = sample.llr.values();
    let target = sample.target.bits();
    let iterations = w.iterations();
    let tape = forward_tape(h, llr, w, iterations);
    let loss = tape_loss(&tape, target);
    if !loss.is_finite() {
        return Err(Error::NonFinite {
            iteration: iterations,
            edge: 0,
            what: "multiloss",
        });
    }
    let edges = h.edges();
    let g_cv = &mut scratch.g_cv;
    g_cv.iter_mut().for_each(|g| *g = 0.0);
    for t in (0..iterations).rev() {
        let layer = w.layer(t);
        let cv = &tape.cv[t];
        for v in 0..h.cols() {
            // d loss / d L = c - o with o = logistic(-L)
            let o = crate::bp::logistic(-tape.marginal[t][v]);
            let g_l = scale * (f64::from(target[v] & 1) - o);
            grad.out_llr[layer][v] += g_l * llr[v];
            for &e in h.var_edges(v) {
                grad.out_edge[layer][e] += g_l * cv[e];
                g_cv[e] += g_l * w.out_edge(layer, e);
            }
        }
        let g_vc = &mut scratch.g_vc;
        for c in 0..h.rows() {
            let range = h.check_edges(c);
            let base = range.start;
            let d = range.len();
            let th = &tape.tanh_half[t][range.clone()];
            let gp = &mut scratch.g_prod[..d];
            for (i, e) in range.clone().enumerate() {
                let prod = tape.product[t][e];
                gp[i] = if tape.cv_pre[t][e].abs() < MESSAGE_CLIP && prod.abs() <= TANH_PRODUCT_LIMIT {
                    g_cv[e] * 2.0 / (1.0 - prod * prod)
                } else {
                    0.0
                };
            }
            let suffix = &mut scratch.suffix[..d + 1];
            for f in 0..d {
                suffix[d] = 1.0;
                for j in (0..d).rev() {
                    suffix[j] = if j == f { suffix[j + 1] } else { suffix[j + 1] * th[j] };
                }
                let mut pre = 1.0;
                let mut acc = 0.0;
                for j in 0..d {
                    if j == f {
                        continue;
                    }
                    acc += gp[j] * pre * suffix[j + 1];
                    pre *= th[j];
                }
                g_vc[base + f] = acc * 0.5 * (1.0 - th[f] * th[f]);
            }
        }
        let g_prev = &mut scratch.g_prev;
        g_prev.iter_mut().for_each(|g| *g = 0.0);
        for (e, &(_, v)) in edges.iter().enumerate() {
            let g = g_vc[e];
            if !g.is_finite() {
                return Err(Error::NonFinite {
                    iteration: t + 1,
                    edge: e,
                    what: "variable-to-check gradient",
                });
            }
            if tape.vc_pre[t][e].abs() >= MESSAGE_CLIP {
                continue;
            }
            grad.llr_edge[layer][e] += g * llr[v];
            if t > 0 {
                let cv_prev = &tape.cv[t - 1];
                for p in h.pair_range(e) {
                    let inc = h.pair_incoming(p);
                    grad.pair[layer][p] += g * cv_prev[inc];
                    g_prev[inc] += g * w.pair(layer, p);
                }
            }
        }
        std::mem::swap(g_cv, g_prev);
    }
    Ok(loss)
}

struct BackScratch {
    g_cv: Vec<f64>,
    g_vc: Vec<f64>,
    g_prev: Vec<f64>,
    g_prod: Vec<f64>,
    suffix: Vec<f64>,
}

impl BackScratch {
    fn new(h: &ParityCheckMatrix) -> Self {
        let e = h.num_edges();
        let d = (0..h.rows()).map(|c| h.check_degree(c)).max().unwrap_or(0);
        BackScratch {
            g_cv: vec![0.0; e],
            g_vc: vec![0.0; e],
            g_prev: vec![0.0; e],
            g_prod: vec![0.0; d],
            suffix: vec![0.0; d + 1],
        }
    }
}

/// Mean multiloss over `batch` and its exact gradient with respect to every
/// weight.
pub fn gradient(h: &ParityCheckMatrix, batch: &[TrainingSample], w: &WeightsSet) -> Result<(f64, WeightsSet)> {
    if batch.is_empty() {
        return Err(Error::InvalidArgument("gradient of an empty batch".into()));
    }
    w.validate(h)?;
    for s in batch {
        check_len("sample LLR length", h.cols(), s.llr.len())?;
        check_len("sample target length", h.cols(), s.target.len())?;
    }
    let scale = 1.0 / batch.len() as f64;
    let partials: Vec<Result<(f64, WeightsSet)>> = batch
        .par_chunks(REDUCTION_CHUNK)
        .map(|chunk| {
            let mut grad = w.zeros_like();
            let mut scratch = BackScratch::new(h);
            let mut loss = 0.0;
            for s in chunk {
                loss += backprop_sample(h, w, s, scale, &mut grad, &mut scratch)?;
            }
            Ok((loss, grad))
        })
        .collect();
    let mut total_loss = 0.0;
    let mut total = w.zeros_like();
    for part in partials {
        let (loss, grad) = part?;
        total_loss += loss;
        total.add_scaled(&grad, 1.0);
    }
    Ok((total_loss * scale, total))
}

/// Mean multiloss without gradients.
pub fn mean_loss(h: &ParityCheckMatrix, samples: &[TrainingSample], w: &WeightsSet) -> f64 {
    let partials: Vec<f64> = samples
        .par_chunks(REDUCTION_CHUNK)
        .map(|chunk| {
            chunk
                .iter()
                .map(|s| tape_loss(&forward_tape(h, s.llr.values(), w, w.iterations()), s.target.bits()))
                .sum::<f64>()
        })
        .collect();
    partials.iter().sum::<f64>() / samples.len() as f64
}

/// RMSProp: s = decay s + (1 - decay) g^2; w -= lr g / (sqrt(s) + eps).
#[derive(Debug, Clone)]
pub struct RmsProp {
    pub learning_rate: f64,
    pub decay: f64,
    pub eps: f64,
    mean_square: Vec<f64>,
}

impl RmsProp {
    pub fn new(learning_rate: f64, decay: f64, eps: f64, num_params: usize) -> Self {
        RmsProp {
            learning_rate,
            decay,
            eps,
            mean_square: vec![0.0; num_params],
        }
    }

    pub fn step(&mut self, w: &mut WeightsSet, grad: &WeightsSet) {
        for ((p, &g), s) in w.params_mut().zip(grad.params()).zip(self.mean_square.iter_mut()) {
            *s = self.decay * *s + (1.0 - self.decay) * g * g;
            *p -= self.learning_rate * g / (s.sqrt() + self.eps);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Weights of the epoch with the lowest validation loss.
    pub weights: WeightsSet,
    pub best_epoch: usize,
    pub history: Vec<EpochStats>,
    pub stopped_on_plateau: bool,
}

/// Trains one decoder on `dataset`.
///
/// From-scratch training starts at all-ones weights; finetuning starts at
/// `baseline`. A seeded shuffle splits off the validation set and orders
/// minibatches.
pub fn train(
    code: &CodeSpec,
    h: &ParityCheckMatrix,
    dataset: &[TrainingSample],
    cfg: &TrainConfig,
    baseline: Option<&WeightsSet>,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    check_len("parity-check columns", code.n, h.cols())?;
    if dataset.is_empty() {
        return Err(Error::InvalidArgument("training dataset is empty".into()));
    }
    let mut weights = match cfg.mode {
        TrainMode::FromScratch => WeightsSet::filled(h, cfg.iterations, cfg.tied_weights, 1.0),
        TrainMode::Finetune => {
            let base = baseline.ok_or_else(|| {
                Error::InvalidArgument("finetune mode requires baseline weights".into())
            })?;
            base.validate(h)?;
            base.clone()
        }
    };
    if weights.iterations() != cfg.iterations {
        return Err(Error::InvalidArgument(format!(
            "baseline has {} iterations, config asks for {}",
            weights.iterations(),
            cfg.iterations
        )));
    }

    let mut rng = stream_rng(cfg.seed, SHUFFLE_STREAM);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    order.shuffle(&mut rng);
    let val_count = if dataset.len() < 2 {
        0
    } else {
        ((dataset.len() as f64 * cfg.validation_fraction) as usize).min(cfg.max_validation)
    };
    let (val_idx, train_idx) = order.split_at(val_count);
    let validation: Vec<TrainingSample> = val_idx.iter().map(|&i| dataset[i].clone()).collect();
    let mut train_idx = train_idx.to_vec();
    let batch_size = cfg.batch_size().min(train_idx.len());

    let mut opt = RmsProp::new(cfg.learning_rate, cfg.rmsprop_decay, cfg.rmsprop_eps, weights.len());
    let val_set: &[TrainingSample] = if validation.is_empty() { dataset } else { &validation };
    let mut best_val = mean_loss(h, val_set, &weights);
    let mut best = weights.clone();
    let mut best_epoch = 0;
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut cursor = 0;
    let mut stopped_on_plateau = false;
    let mut batch: Vec<TrainingSample> = Vec::with_capacity(batch_size);

    for epoch in 1..=cfg.epochs {
        let mut train_loss = 0.0;
        for _ in 0..cfg.steps_per_epoch {
            if cursor + batch_size > train_idx.len() {
                train_idx.shuffle(&mut rng);
                cursor = 0;
            }
            batch.clear();
            batch.extend(train_idx[cursor..cursor + batch_size].iter().map(|&i| dataset[i].clone()));
            cursor += batch_size;
            let (loss, grad) = gradient(h, &batch, &weights)?;
            opt.step(&mut weights, &grad);
            train_loss += loss;
        }
        train_loss /= cfg.steps_per_epoch as f64;
        let val_loss = mean_loss(h, val_set, &weights);
        log::debug!("epoch {epoch}: train {train_loss:.5} val {val_loss:.5}");
        history.push(EpochStats {
            epoch,
            train_loss,
            val_loss,
        });
        if val_loss < best_val - cfg.plateau_min_delta {
            best_val = val_loss;
            best = weights.clone();
            best_epoch = epoch;
        } else if epoch - best_epoch >= cfg.plateau_patience {
            stopped_on_plateau = true;
            break;
        }
    }
    // Epoch 0 is the starting point; keep it only if training never helped.
    Ok(TrainOutcome {
        weights: best,
        best_epoch,
        history,
        stopped_on_plateau,
    })
}

/// Sidecar document written next to a trained weights file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainMetadata {
    pub config: TrainConfig,
    pub epoch: usize,
    /// None when the starting weights were never improved on.
    pub train_loss: Option<f64>,
    pub val_loss: Option<f64>,
    pub dataset_fingerprint: String,
    pub dataset_size: usize,
}

impl TrainMetadata {
    pub fn from_outcome(cfg: &TrainConfig, outcome: &TrainOutcome, dataset: &[TrainingSample]) -> Self {
        let stats = outcome
            .history
            .iter()
            .find(|s| s.epoch == outcome.best_epoch)
            .cloned();
        TrainMetadata {
            config: cfg.clone(),
            epoch: outcome.best_epoch,
            train_loss: stats.as_ref().map(|s| s.train_loss),
            val_loss: stats.as_ref().map(|s| s.val_loss),
            dataset_fingerprint: dataset_fingerprint(dataset),
            dataset_size: dataset.len(),
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        crate::persist::write_json(path, self)
    }
}
