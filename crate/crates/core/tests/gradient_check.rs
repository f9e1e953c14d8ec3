//! Reverse-mode gradients against central finite differences.

use rand::Rng;
use wbp_ensemble::bp::{forward_tape, WeightsSet};
use wbp_ensemble::builtin::hamming_7_4;
use wbp_ensemble::channel::{stream_rng, transmit, ChannelConfig, LlrWord};
use wbp_ensemble::code::{Codeword, ParityCheckMatrix};
use wbp_ensemble::training::{gradient, tape_loss, TrainingSample};

fn mean_loss(h: &ParityCheckMatrix, batch: &[TrainingSample], w: &WeightsSet) -> f64 {
    batch
        .iter()
        .map(|s| tape_loss(&forward_tape(h, s.llr.values(), w, w.iterations()), s.target.bits()))
        .sum::<f64>()
        / batch.len() as f64
}

fn param_mut(w: &mut WeightsSet, idx: usize) -> &mut f64 {
    w.params_mut().nth(idx).unwrap()
}

/// Max relative error over every parameter of `w`.
fn max_rel_error(h: &ParityCheckMatrix, batch: &[TrainingSample], w: &WeightsSet) -> f64 {
    let (_, grad) = gradient(h, batch, w).unwrap();
    let analytic: Vec<f64> = grad.params().copied().collect();
    let step = 1e-4;
    let mut worst: f64 = 0.0;
    for (i, &a) in analytic.iter().enumerate() {
        let mut plus = w.clone();
        *param_mut(&mut plus, i) += step;
        let mut minus = w.clone();
        *param_mut(&mut minus, i) -= step;
        let fd = (mean_loss(h, batch, &plus) - mean_loss(h, batch, &minus)) / (2.0 * step);
        let denom = a.abs().max(fd.abs());
        let err = if denom < 1e-7 { (a - fd).abs() } else { (a - fd).abs() / denom };
        worst = worst.max(err);
    }
    worst
}

fn batch(seed: u64, count: usize, snr: f64) -> Vec<TrainingSample> {
    let cfg = ChannelConfig::from_snr(snr, 4.0 / 7.0).unwrap();
    let mut rng = stream_rng(seed, 0);
    (0..count)
        .map(|_| TrainingSample::new(transmit(&[1.0; 7], &cfg, &mut rng).unwrap(), Codeword::zeros(7)))
        .collect()
}

#[test]
fn hamming_two_iterations_random_weights() {
    let h = hamming_7_4();
    let mut rng = stream_rng(77, 1);
    for trial in 0..3 {
        let mut w = WeightsSet::uniform(&h, 2);
        for p in w.params_mut() {
            *p = 1.0 + rng.random_range(-0.5..0.5);
        }
        let b = batch(100 + trial, 16, 1.0);
        let err = max_rel_error(&h, &b, &w);
        eprintln!("trial {trial}: max relative error {err:.3e}");
        assert!(err < 1e-4, "trial {trial}: max relative error {err}");
    }
}

#[test]
fn nonzero_targets_and_tied_weights() {
    let h = hamming_7_4();
    let mut w = WeightsSet::filled(&h, 3, true, 1.0);
    let mut rng = stream_rng(5, 2);
    for p in w.params_mut() {
        *p = 1.0 + rng.random_range(-0.3..0.3);
    }
    let c = Codeword(vec![1, 1, 1, 1, 1, 1, 1]);
    let cfg = ChannelConfig::from_snr(2.0, 4.0 / 7.0).unwrap();
    let b: Vec<TrainingSample> = (0..8)
        .map(|_| TrainingSample::new(transmit(&[-1.0; 7], &cfg, &mut rng).unwrap(), c.clone()))
        .collect();
    let err = max_rel_error(&h, &b, &w);
    assert!(err < 1e-4, "max relative error {err}");
}

#[test]
fn gradients_finite_on_random_batches() {
    let h = hamming_7_4();
    let w = WeightsSet::uniform(&h, 5);
    for seed in 0..100 {
        let b = batch(seed, 10, 0.0);
        let (loss, g) = gradient(&h, &b, &w).unwrap();
        assert!(loss.is_finite());
        assert!(g.params().all(|x| x.is_finite()));
    }
    let extreme = vec![TrainingSample::new(LlrWord(vec![1e6, -1e6, 0.0, 1e-300, 3.0, -3.0, 0.0]), Codeword::zeros(7))];
    let (loss, g) = gradient(&h, &extreme, &w).unwrap();
    assert!(loss.is_finite() && g.params().all(|x| x.is_finite()));
}
