//! Unrolled (weighted) belief propagation on the Tanner graph.
//!
//! One iteration t computes, for every edge e = (c, v):
//!
//! ```text
//! m_vc[e] = clip( wl[t][e] * l[v] + sum_{e' at v, e' != e} wp[t][(e', e)] * m_cv_prev[e'] )
//! m_cv[e] = clip( 2 artanh( prod_{e'' at c, e'' != e} tanh(m_vc[e''] / 2) ) )
//! L[v]    = wo[t][v] * l[v] + sum_{e at v} we[t][e] * m_cv[e]
//! o[v]    = logistic(-L[v])            // estimate of P(c_v = 1)
//! ```
//!
//! with `m_cv_prev = 0` on the first iteration and `clip` saturating to
//! [-10, 10]. The hard decision of every iteration is `hard_decision(L)` and
//! decoding stops as soon as it satisfies all checks.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::hard_decision;
use crate::code::{Codeword, ParityCheckMatrix};
use crate::error::{check_len, Error, Result};

/// Saturation bound for every LLR-domain message.
pub const MESSAGE_CLIP: f64 = 10.0;

/// Bound applied to the tanh product before artanh.
pub const TANH_PRODUCT_LIMIT: f64 = 1.0 - 1e-12;

#[inline]
pub(crate) fn clip(x: f64) -> f64 {
    x.clamp(-MESSAGE_CLIP, MESSAGE_CLIP)
}

#[inline]
pub(crate) fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Read access to the trainable weights of one decoder.
///
/// `layer` is the weight layer of an iteration; see [`Weighting::layer`].
pub trait Weighting {
    fn layer(&self, iteration: usize) -> usize;
    fn llr_edge(&self, layer: usize, e: usize) -> f64;
    fn pair(&self, layer: usize, p: usize) -> f64;
    fn out_llr(&self, layer: usize, v: usize) -> f64;
    fn out_edge(&self, layer: usize, e: usize) -> f64;
}

/// Plain BP: every weight is 1.0.
#[derive(Debug, Clone, Copy, Default)]
pub struct Unweighted;

impl Weighting for Unweighted {
    fn layer(&self, _: usize) -> usize {
        0
    }
    #[inline]
    fn llr_edge(&self, _: usize, _: usize) -> f64 {
        1.0
    }
    #[inline]
    fn pair(&self, _: usize, _: usize) -> f64 {
        1.0
    }
    #[inline]
    fn out_llr(&self, _: usize, _: usize) -> f64 {
        1.0
    }
    #[inline]
    fn out_edge(&self, _: usize, _: usize) -> f64 {
        1.0
    }
}

/// All trainable parameters of an unrolled weighted-BP decoder.
///
/// With `tied = false` every iteration has its own layer of weights;
/// with `tied = true` a single layer is shared by all iterations.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightsSet {
    iterations: usize,
    tied: bool,
    pub llr_edge: Vec<Vec<f64>>,
    pub pair: Vec<Vec<f64>>,
    pub out_llr: Vec<Vec<f64>>,
    pub out_edge: Vec<Vec<f64>>,
}

impl WeightsSet {
    /// All weights equal to `value`; 1.0 reproduces plain BP.
    pub fn filled(h: &ParityCheckMatrix, iterations: usize, tied: bool, value: f64) -> Self {
        let layers = if tied { 1 } else { iterations };
        WeightsSet {
            iterations,
            tied,
            llr_edge: vec![vec![value; h.num_edges()]; layers],
            pair: vec![vec![value; h.num_pairs()]; layers],
            out_llr: vec![vec![value; h.cols()]; layers],
            out_edge: vec![vec![value; h.num_edges()]; layers],
        }
    }

    pub fn uniform(h: &ParityCheckMatrix, iterations: usize) -> Self {
        Self::filled(h, iterations, false, 1.0)
    }

    pub fn zeros_like(&self) -> Self {
        let z = |v: &Vec<Vec<f64>>| v.iter().map(|l| vec![0.0; l.len()]).collect();
        WeightsSet {
            iterations: self.iterations,
            tied: self.tied,
            llr_edge: z(&self.llr_edge),
            pair: z(&self.pair),
            out_llr: z(&self.out_llr),
            out_edge: z(&self.out_edge),
        }
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn tied(&self) -> bool {
        self.tied
    }

    pub fn num_layers(&self) -> usize {
        self.llr_edge.len()
    }

    /// Flat view of every parameter in a fixed order (layer-major within
    /// each group: llr_edge, pair, out_llr, out_edge).
    pub fn params(&self) -> impl Iterator<Item = &f64> {
        self.llr_edge
            .iter()
            .chain(&self.pair)
            .chain(&self.out_llr)
            .chain(&self.out_edge)
            .flatten()
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.llr_edge
            .iter_mut()
            .chain(self.pair.iter_mut())
            .chain(self.out_llr.iter_mut())
            .chain(self.out_edge.iter_mut())
            .flatten()
    }

    pub fn len(&self) -> usize {
        self.params().count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Adds `scale * other` in place; shapes must agree.
    pub fn add_scaled(&mut self, other: &WeightsSet, scale: f64) {
        for (a, b) in self.params_mut().zip(other.params()) {
            *a += scale * b;
        }
    }

    /// Checks shape against `h` and finiteness of all entries.
    pub fn validate(&self, h: &ParityCheckMatrix) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidArgument("weights need at least one iteration".into()));
        }
        let layers = if self.tied { 1 } else { self.iterations };
        for (what, group, width) in [
            ("llr_edge_weights", &self.llr_edge, h.num_edges()),
            ("pair_weights", &self.pair, h.num_pairs()),
            ("out_llr_weights", &self.out_llr, h.cols()),
            ("out_edge_weights", &self.out_edge, h.num_edges()),
        ] {
            check_len(what, layers, group.len())?;
            for (t, layer) in group.iter().enumerate() {
                check_len(what, width, layer.len())?;
                if let Some(i) = layer.iter().position(|x| !x.is_finite()) {
                    return Err(Error::NonFinite {
                        iteration: t + 1,
                        edge: i,
                        what,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn to_file(&self, h: &ParityCheckMatrix, code_id: &str) -> WeightsFile {
        WeightsFile {
            code_id: code_id.to_string(),
            iterations: self.iterations,
            tied: self.tied,
            edge_order: h.edges().to_vec(),
            llr_edge_weights: self.llr_edge.clone(),
            pair_weights: self
                .pair
                .iter()
                .map(|layer| {
                    (0..h.num_edges())
                        .flat_map(|e| h.pair_range(e).map(move |p| (h.pair_incoming(p), e, layer[p])))
                        .collect()
                })
                .collect(),
            out_llr_weights: self.out_llr.clone(),
            out_edge_weights: self.out_edge.clone(),
        }
    }

    pub fn from_file(file: &WeightsFile, h: &ParityCheckMatrix) -> Result<Self> {
        if file.edge_order != h.edges() {
            return Err(Error::InvalidArgument(format!(
                "weights for {} were trained on a different edge order than the given matrix",
                file.code_id
            )));
        }
        let pair = file
            .pair_weights
            .iter()
            .map(|triples| {
                check_len("pair_weights entries", h.num_pairs(), triples.len())?;
                let mut layer = vec![0.0; h.num_pairs()];
                let mut slots = triples.iter();
                for e in 0..h.num_edges() {
                    for p in h.pair_range(e) {
                        let &(inc, out, w) = slots.next().expect("length checked");
                        if inc != h.pair_incoming(p) || out != e {
                            return Err(Error::InvalidArgument(format!(
                                "pair weight ({inc},{out}) out of order; expected ({},{e})",
                                h.pair_incoming(p)
                            )));
                        }
                        layer[p] = w;
                    }
                }
                Ok(layer)
            })
            .collect::<Result<Vec<_>>>()?;
        let w = WeightsSet {
            iterations: file.iterations,
            tied: file.tied,
            llr_edge: file.llr_edge_weights.clone(),
            pair,
            out_llr: file.out_llr_weights.clone(),
            out_edge: file.out_edge_weights.clone(),
        };
        w.validate(h)?;
        Ok(w)
    }

    pub fn save(&self, path: impl AsRef<Path>, h: &ParityCheckMatrix, code_id: &str) -> Result<()> {
        crate::persist::write_json(path, &self.to_file(h, code_id))
    }

    pub fn load(path: impl AsRef<Path>, h: &ParityCheckMatrix) -> Result<(Self, String)> {
        let file: WeightsFile = crate::persist::read_json(path)?;
        Ok((Self::from_file(&file, h)?, file.code_id))
    }
}

impl Weighting for WeightsSet {
    #[inline]
    fn layer(&self, iteration: usize) -> usize {
        if self.tied {
            0
        } else {
            iteration
        }
    }
    #[inline]
    fn llr_edge(&self, layer: usize, e: usize) -> f64 {
        self.llr_edge[layer][e]
    }
    #[inline]
    fn pair(&self, layer: usize, p: usize) -> f64 {
        self.pair[layer][p]
    }
    #[inline]
    fn out_llr(&self, layer: usize, v: usize) -> f64 {
        self.out_llr[layer][v]
    }
    #[inline]
    fn out_edge(&self, layer: usize, e: usize) -> f64 {
        self.out_edge[layer][e]
    }
}

/// On-disk layout of a [`WeightsSet`]. `pair_weights[t]` lists
/// `(incoming_edge, outgoing_edge, weight)` triples; edge indices refer to
/// `edge_order`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightsFile {
    pub code_id: String,
    #[serde(rename = "T")]
    pub iterations: usize,
    pub tied: bool,
    pub edge_order: Vec<(usize, usize)>,
    pub llr_edge_weights: Vec<Vec<f64>>,
    pub pair_weights: Vec<Vec<(usize, usize, f64)>>,
    pub out_llr_weights: Vec<Vec<f64>>,
    pub out_edge_weights: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult {
    pub codeword: Codeword,
    pub iterations_used: usize,
    pub converged: bool,
    /// Per-iteration o^(t); only filled when requested.
    pub soft_outputs: Option<Vec<Vec<f64>>>,
}

/// Every intermediate of a full-depth forward pass (no early stopping),
/// stored per iteration for the backward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Tape {
    /// Variable-to-check messages before clipping.
    pub vc_pre: Vec<Vec<f64>>,
    /// Variable-to-check messages.
    pub vc: Vec<Vec<f64>>,
    /// tanh(m_vc / 2).
    pub tanh_half: Vec<Vec<f64>>,
    /// Leave-one-out tanh products before clamping.
    pub product: Vec<Vec<f64>>,
    /// Check-to-variable messages before clipping.
    pub cv_pre: Vec<Vec<f64>>,
    /// Check-to-variable messages.
    pub cv: Vec<Vec<f64>>,
    /// Marginal LLRs L^(t).
    pub marginal: Vec<Vec<f64>>,
}

impl Tape {
    /// o^(t) = logistic(-L^(t)).
    pub fn soft_outputs(&self) -> Vec<Vec<f64>> {
        self.marginal
            .iter()
            .map(|l| l.iter().map(|&x| logistic(-x)).collect())
            .collect()
    }
}

struct Scratch {
    vc_pre: Vec<f64>,
    vc: Vec<f64>,
    tanh_half: Vec<f64>,
    product: Vec<f64>,
    cv_pre: Vec<f64>,
    cv: Vec<f64>,
    marginal: Vec<f64>,
    prefix: Vec<f64>,
}

impl Scratch {
    fn new(h: &ParityCheckMatrix) -> Self {
        let e = h.num_edges();
        let max_deg = (0..h.rows()).map(|c| h.check_degree(c)).max().unwrap_or(0);
        Scratch {
            vc_pre: vec![0.0; e],
            vc: vec![0.0; e],
            tanh_half: vec![0.0; e],
            product: vec![0.0; e],
            cv_pre: vec![0.0; e],
            cv: vec![0.0; e],
            marginal: vec![0.0; h.cols()],
            prefix: vec![0.0; max_deg + 1],
        }
    }

    /// One message-passing iteration; `self.cv` holds the previous
    /// check-to-variable messages on entry and the new ones on exit.
    fn iterate<W: Weighting>(&mut self, h: &ParityCheckMatrix, llr: &[f64], w: &W, layer: usize) {
        let edges = h.edges();
        for (e, &(_, v)) in edges.iter().enumerate() {
            let mut acc = w.llr_edge(layer, e) * llr[v];
            for p in h.pair_range(e) {
                acc += w.pair(layer, p) * self.cv[h.pair_incoming(p)];
            }
            self.vc_pre[e] = acc;
            self.vc[e] = clip(acc);
        }
        for c in 0..h.rows() {
            let range = h.check_edges(c);
            let base = range.start;
            let d = range.len();
            for e in range.clone() {
                self.tanh_half[e] = (0.5 * self.vc[e]).tanh();
            }
            self.prefix[0] = 1.0;
            for i in 0..d {
                self.prefix[i + 1] = self.prefix[i] * self.tanh_half[base + i];
            }
            let mut suffix = 1.0;
            for i in (0..d).rev() {
                let e = base + i;
                let prod = self.prefix[i] * suffix;
                suffix *= self.tanh_half[e];
                self.product[e] = prod;
                let pre = 2.0 * prod.clamp(-TANH_PRODUCT_LIMIT, TANH_PRODUCT_LIMIT).atanh();
                self.cv_pre[e] = pre;
                self.cv[e] = clip(pre);
            }
        }
        // The single marginalization site: L > 0 favours bit 0, and
        // o = logistic(-L) is the estimate of P(bit = 1).
        for (v, out) in self.marginal.iter_mut().enumerate() {
            let mut acc = w.out_llr(layer, v) * llr[v];
            for &e in h.var_edges(v) {
                acc += w.out_edge(layer, e) * self.cv[e];
            }
            *out = acc;
        }
    }
}

/// Decodes with early stopping; `keep_soft` retains o^(t) of every
/// iteration that ran.
pub fn decode_with<W: Weighting>(
    h: &ParityCheckMatrix,
    llr: &[f64],
    w: &W,
    iterations: usize,
    keep_soft: bool,
) -> DecodeResult {
    let mut s = Scratch::new(h);
    let mut soft = keep_soft.then(Vec::new);
    let mut hard = vec![0u8; h.cols()];
    for t in 0..iterations {
        s.iterate(h, llr, w, w.layer(t));
        hard = hard_decision(&s.marginal);
        if let Some(soft) = soft.as_mut() {
            soft.push(s.marginal.iter().map(|&x| logistic(-x)).collect());
        }
        if h.is_codeword_unchecked(&hard) {
            return DecodeResult {
                codeword: Codeword(hard),
                iterations_used: t + 1,
                converged: true,
                soft_outputs: soft,
            };
        }
    }
    DecodeResult {
        codeword: Codeword(hard),
        iterations_used: iterations,
        converged: false,
        soft_outputs: soft,
    }
}

/// Full-depth forward pass recording every intermediate.
pub fn forward_tape<W: Weighting>(h: &ParityCheckMatrix, llr: &[f64], w: &W, iterations: usize) -> Tape {
    let mut s = Scratch::new(h);
    let mut tape = Tape {
        vc_pre: Vec::with_capacity(iterations),
        vc: Vec::with_capacity(iterations),
        tanh_half: Vec::with_capacity(iterations),
        product: Vec::with_capacity(iterations),
        cv_pre: Vec::with_capacity(iterations),
        cv: Vec::with_capacity(iterations),
        marginal: Vec::with_capacity(iterations),
    };
    for t in 0..iterations {
        s.iterate(h, llr, w, w.layer(t));
        tape.vc_pre.push(s.vc_pre.clone());
        tape.vc.push(s.vc.clone());
        tape.tanh_half.push(s.tanh_half.clone());
        tape.product.push(s.product.clone());
        tape.cv_pre.push(s.cv_pre.clone());
        tape.cv.push(s.cv.clone());
        tape.marginal.push(s.marginal.clone());
    }
    tape
}

/// A validated (parity-check matrix, weights) binding.
#[derive(Debug, Clone, Copy)]
pub struct WbpDecoder<'a> {
    h: &'a ParityCheckMatrix,
    weights: &'a WeightsSet,
    iterations: usize,
}

impl<'a> WbpDecoder<'a> {
    pub fn new(h: &'a ParityCheckMatrix, weights: &'a WeightsSet, iterations: usize) -> Result<Self> {
        weights.validate(h)?;
        check_iterations(iterations)?;
        if !weights.tied() && iterations > weights.iterations() {
            return Err(Error::InvalidArgument(format!(
                "{iterations} iterations requested but weights cover {}",
                weights.iterations()
            )));
        }
        Ok(WbpDecoder { h, weights, iterations })
    }

    pub fn decode(&self, llr: &[f64]) -> Result<DecodeResult> {
        check_len("LLR length", self.h.cols(), llr.len())?;
        Ok(decode_with(self.h, llr, self.weights, self.iterations, false))
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }
}

fn check_iterations(iterations: usize) -> Result<()> {
    if iterations == 0 {
        Err(Error::InvalidArgument("at least one BP iteration is required".into()))
    } else {
        Ok(())
    }
}

/// Weighted BP with early stopping.
pub fn wbp_decode(h: &ParityCheckMatrix, llr: &[f64], w: &WeightsSet, iterations: usize) -> Result<DecodeResult> {
    WbpDecoder::new(h, w, iterations)?.decode(llr)
}

/// Plain sum-product BP with early stopping (all weights 1.0).
pub fn bp_decode(h: &ParityCheckMatrix, llr: &[f64], iterations: usize) -> Result<DecodeResult> {
    check_len("LLR length", h.cols(), llr.len())?;
    check_iterations(iterations)?;
    Ok(decode_with(h, llr, &Unweighted, iterations, false))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin::{cr_bch_63_36, hamming_7_4};
    use crate::channel::{modulate_bpsk, stream_rng, transmit, ChannelConfig};
    use crate::code::ParityCheckMatrix;
    use proptest::prelude::*;

    fn codewords(h: &ParityCheckMatrix) -> Vec<Vec<u8>> {
        let n = h.cols();
        (0u32..1 << n)
            .map(|m| (0..n).map(|i| ((m >> i) & 1) as u8).collect::<Vec<u8>>())
            .filter(|c| h.is_codeword(c).unwrap())
            .collect()
    }

    #[test]
    fn noiseless_converges_in_one_iteration() {
        let h = hamming_7_4();
        for c in codewords(&h) {
            let llr: Vec<f64> = modulate_bpsk(&Codeword(c.clone())).iter().map(|x| 50.0 * x).collect();
            let r = bp_decode(&h, &llr, 5).unwrap();
            assert!(r.converged);
            assert_eq!(r.iterations_used, 1);
            assert_eq!(r.codeword.bits(), &c[..]);
        }
    }

    #[test]
    fn hamming_single_errors_corrected() {
        // Every codeword, every single flipped position, moderate reliability.
        let h = hamming_7_4();
        let w = WeightsSet::uniform(&h, 5);
        for c in codewords(&h) {
            for flip in 0..7 {
                let mut x = modulate_bpsk(&Codeword(c.clone()));
                x[flip] = -x[flip];
                let llr: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
                let r = wbp_decode(&h, &llr, &w, 5).unwrap();
                assert_eq!(r.codeword.bits(), &c[..], "codeword {c:?} flip {flip}");
            }
        }
    }

    #[test]
    fn all_zero_llr_gives_all_ones() {
        let h = hamming_7_4();
        let r = bp_decode(&h, &[0.0; 7], 5).unwrap();
        assert_eq!(r.codeword.bits(), &[1u8; 7]);
        assert!(r.converged, "all-ones is a Hamming codeword");
    }

    #[test]
    fn errors_on_bad_input() {
        let h = hamming_7_4();
        assert!(bp_decode(&h, &[1.0; 6], 5).is_err());
        assert!(bp_decode(&h, &[1.0; 7], 0).is_err());
        let mut w = WeightsSet::uniform(&h, 2);
        assert!(wbp_decode(&h, &[1.0; 7], &w, 3).is_err());
        w.pair[1][3] = f64::NAN;
        match wbp_decode(&h, &[1.0; 7], &w, 2) {
            Err(Error::NonFinite { iteration: 2, edge: 3, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn uniform_weights_match_unweighted_tapes() {
        let (spec, h) = cr_bch_63_36();
        let cfg = ChannelConfig::from_snr(3.0, spec.rate()).unwrap();
        let w = WeightsSet::uniform(&h, 5);
        let mut rng = stream_rng(3, 0);
        for _ in 0..50 {
            let llr = transmit(&vec![1.0; 63], &cfg, &mut rng).unwrap();
            assert_eq!(forward_tape(&h, llr.values(), &w, 5), forward_tape(&h, llr.values(), &Unweighted, 5));
        }
    }

    #[test]
    fn tied_weights_share_one_layer() {
        let h = hamming_7_4();
        let tied = WeightsSet::filled(&h, 5, true, 1.0);
        assert_eq!(tied.num_layers(), 1);
        let llr = [1.5, -0.3, 0.8, 2.0, -1.1, 0.4, 0.9];
        assert_eq!(forward_tape(&h, &llr, &tied, 5), forward_tape(&h, &llr, &Unweighted, 5));
    }

    #[test]
    fn complement_symmetry_on_repetition_code() {
        // 5-bit repetition code: the complement of a codeword is a codeword.
        let h = ParityCheckMatrix::from_check_lists(5, &[vec![0, 1], vec![1, 2], vec![2, 3], vec![3, 4]]).unwrap();
        let mut rng = stream_rng(11, 0);
        let cfg = ChannelConfig::from_snr(1.0, 0.2).unwrap();
        for _ in 0..500 {
            let llr = transmit(&[1.0; 5], &cfg, &mut rng).unwrap();
            let neg: Vec<f64> = llr.values().iter().map(|x| -x).collect();
            let a = bp_decode(&h, llr.values(), 5).unwrap();
            let b = bp_decode(&h, &neg, 5).unwrap();
            let comp: Vec<u8> = a.codeword.bits().iter().map(|b| 1 - b).collect();
            assert_eq!(b.codeword.bits(), &comp[..]);
        }
    }

    #[test]
    fn weights_file_round_trip() {
        let h = hamming_7_4();
        let mut w = WeightsSet::uniform(&h, 3);
        for (i, x) in w.params_mut().enumerate() {
            *x = 1.0 + i as f64 * 0.01;
        }
        let file = w.to_file(&h, "Hamming(7,4)");
        assert_eq!(WeightsSet::from_file(&file, &h).unwrap(), w);
        let other = ParityCheckMatrix::from_check_lists(7, &[vec![0, 1, 2, 4], vec![1, 2, 3, 5], vec![2, 3, 4, 6]]).unwrap();
        assert!(WeightsSet::from_file(&file, &other).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn messages_stay_clipped(llr in proptest::collection::vec(-40.0f64..40.0, 7), scale in 0.1f64..3.0) {
            let h = hamming_7_4();
            let w = WeightsSet::filled(&h, 4, false, scale);
            let tape = forward_tape(&h, &llr, &w, 4);
            for t in 0..4 {
                prop_assert!(tape.vc[t].iter().chain(&tape.cv[t]).all(|m| m.abs() <= MESSAGE_CLIP));
            }
        }

        #[test]
        fn converged_output_is_codeword(llr in proptest::collection::vec(-6.0f64..6.0, 7)) {
            let h = hamming_7_4();
            let r = bp_decode(&h, &llr, 5).unwrap();
            prop_assert!(r.iterations_used <= 5);
            if r.converged {
                prop_assert!(h.is_codeword(r.codeword.bits()).unwrap());
            }
        }
    }
}
