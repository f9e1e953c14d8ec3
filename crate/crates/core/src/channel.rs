//! BPSK over AWGN: modulation, noise, LLRs and seeded random streams.
//!
//! SNR values are Eb/N0 in dB. For a code of rate R the noise standard
//! deviation is `sigma = 1 / sqrt(2 R 10^(snr/10))`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::code::Codeword;
use crate::error::{Error, Result};

/// Identity of the random generator, echoed into result files.
pub const RNG_ID: &str = "ChaCha8 (rand_chacha 0.9), seed_from_u64(seed) + set_stream(stream_id)";

/// SNR convention echoed into result files.
pub const SNR_CONVENTION: &str = "Eb/N0 dB; sigma = 1/sqrt(2*rate*10^(snr_db/10))";

/// Random stream for a (seed, stream id) pair. Distinct stream ids give
/// independent sequences for the same seed.
pub fn stream_rng(seed: u64, stream_id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    rng
}

/// Noise standard deviation for Eb/N0 `snr_db` at code rate `rate`.
pub fn sigma_from_snr(snr_db: f64, rate: f64) -> f64 {
    1.0 / (2.0 * rate * 10f64.powf(snr_db / 10.0)).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    pub snr_db: f64,
    pub sigma: f64,
    pub rate: f64,
}

impl ChannelConfig {
    pub fn from_snr(snr_db: f64, rate: f64) -> Result<Self> {
        if !(rate > 0.0 && rate <= 1.0) {
            return Err(Error::InvalidArgument(format!("code rate {rate} outside (0, 1]")));
        }
        Ok(ChannelConfig {
            snr_db,
            sigma: sigma_from_snr(snr_db, rate),
            rate,
        })
    }

    /// BSC crossover probability of the hard-decision channel, Q(1/sigma).
    pub fn crossover(&self) -> f64 {
        q_function(1.0 / self.sigma)
    }
}

/// Channel log-likelihood ratios, log P(c=0)/P(c=1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlrWord(pub Vec<f64>);

impl LlrWord {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// x_v = 1 - 2 c_v.
pub fn modulate_bpsk(c: &Codeword) -> Vec<f64> {
    c.bits().iter().map(|&b| 1.0 - 2.0 * f64::from(b & 1)).collect()
}

/// LLRs of a received word: 2 y / sigma^2.
pub fn llr_from_received(y: &[f64], sigma: f64) -> LlrWord {
    let scale = 2.0 / (sigma * sigma);
    LlrWord(y.iter().map(|&v| scale * v).collect())
}

/// Adds N(0, sigma^2) noise to `x` and returns the channel LLRs.
pub fn transmit<R: Rng + ?Sized>(x: &[f64], cfg: &ChannelConfig, rng: &mut R) -> Result<LlrWord> {
    if !(cfg.sigma > 0.0) || !cfg.sigma.is_finite() {
        return Err(Error::InvalidArgument(format!("noise sigma must be positive, got {}", cfg.sigma)));
    }
    let y: Vec<f64> = x
        .iter()
        .map(|&xv| {
            let n: f64 = StandardNormal.sample(rng);
            xv + cfg.sigma * n
        })
        .collect();
    Ok(llr_from_received(&y, cfg.sigma))
}

/// Bit 0 for positive LLR, 1 otherwise (a zero LLR maps to 1).
pub fn hard_decision(llr: &[f64]) -> Vec<u8> {
    llr.iter().map(|&l| u8::from(!(l > 0.0))).collect()
}

/// Gaussian tail probability, 0.5 erfc(x / sqrt 2).
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}
