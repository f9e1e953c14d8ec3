//! The gated ensemble: a gate picks experts, each active expert runs
//! weighted BP, and the combiner keeps the candidate with the lowest
//! correlation score.

use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bp::{decode_with, WbpDecoder, WeightsSet};
use crate::builtin;
use crate::channel::hard_decision;
use crate::code::{CodeSpec, Codeword, ErrorPattern, ParityCheckMatrix};
use crate::error::{check_len, Error, Result};
use crate::hdd::{BchDecoder, GfField, HddStatus};
use crate::partition::PartitionModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GatingMode {
    SingleChoice,
    AllDecoders,
    RandomChoice,
}

impl GatingMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "single_choice" | "single-choice" | "single" => Ok(GatingMode::SingleChoice),
            "all_decoders" | "all-decoders" | "all" => Ok(GatingMode::AllDecoders),
            "random_choice" | "random-choice" | "random" => Ok(GatingMode::RandomChoice),
            other => Err(Error::InvalidArgument(format!("unknown gating mode '{other}'"))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            GatingMode::SingleChoice => "single_choice",
            GatingMode::AllDecoders => "all_decoders",
            GatingMode::RandomChoice => "random_choice",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GatingSource {
    Bypass,
    HddRegion,
    HddFailureFallback,
    All,
    Random,
}

/// Which experts decode a word. Bypass decisions activate nobody; every
/// other decision activates at least one expert.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GatingDecision {
    pub active: Vec<bool>,
    pub source: GatingSource,
}

impl GatingDecision {
    fn one(alpha: usize, j: usize, source: GatingSource) -> Self {
        let mut active = vec![false; alpha];
        active[j] = true;
        GatingDecision { active, source }
    }

    fn all(alpha: usize, source: GatingSource) -> Self {
        GatingDecision {
            active: vec![true; alpha],
            source,
        }
    }

    pub fn active_count(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }
}

/// Correlation score sum_v c_v l_v; lower is better.
pub fn correlation_score(c: &Codeword, llr: &[f64]) -> f64 {
    c.bits().iter().zip(llr).filter(|(&b, _)| b == 1).map(|(_, &l)| l).sum()
}

/// Index of the lowest-scoring candidate among the valid ones (among all if
/// none is valid). Ties go to the lowest index.
pub fn combine(candidates: &[(Codeword, bool)], llr: &[f64]) -> Result<usize> {
    if candidates.is_empty() {
        return Err(Error::InvalidArgument("combine needs at least one candidate".into()));
    }
    let any_valid = candidates.iter().any(|(_, valid)| *valid);
    let mut best: Option<(usize, f64)> = None;
    for (i, (c, valid)) in candidates.iter().enumerate() {
        if any_valid && !valid {
            continue;
        }
        let score = correlation_score(c, llr);
        if best.is_none_or(|(_, s)| score < s) {
            best = Some((i, score));
        }
    }
    Ok(best.expect("non-empty").0)
}

/// Per-word record of what the ensemble did.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordDiagnostics {
    pub source: GatingSource,
    pub active: Vec<bool>,
    /// Expert whose output was returned; None under bypass.
    pub chosen_expert: Option<usize>,
    /// Convergence of each expert that ran.
    pub expert_converged: Vec<Option<bool>>,
    /// BP iterations summed over the experts that ran.
    pub iterations: usize,
}

#[derive(Debug, Clone)]
pub struct EnsembleModel {
    code: CodeSpec,
    h: ParityCheckMatrix,
    experts: Vec<WeightsSet>,
    iterations: usize,
    partition: PartitionModel,
    gating_mode: GatingMode,
    hdd: BchDecoder,
}

impl EnsembleModel {
    pub fn new(
        code: CodeSpec,
        h: ParityCheckMatrix,
        experts: Vec<WeightsSet>,
        iterations: usize,
        partition: PartitionModel,
        gating_mode: GatingMode,
        hdd: BchDecoder,
    ) -> Result<Self> {
        check_len("expert count", partition.alpha(), experts.len())?;
        check_len("parity-check columns", code.n, h.cols())?;
        if hdd.code().n != code.n {
            return Err(Error::InvalidArgument("hard-decision decoder length differs from code".into()));
        }
        for w in &experts {
            WbpDecoder::new(&h, w, iterations)?;
        }
        Ok(EnsembleModel {
            code,
            h,
            experts,
            iterations,
            partition,
            gating_mode,
            hdd,
        })
    }

    pub fn alpha(&self) -> usize {
        self.experts.len()
    }

    pub fn code(&self) -> &CodeSpec {
        &self.code
    }

    pub fn parity_check(&self) -> &ParityCheckMatrix {
        &self.h
    }

    pub fn experts(&self) -> &[WeightsSet] {
        &self.experts
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn partition(&self) -> &PartitionModel {
        &self.partition
    }

    pub fn gating_mode(&self) -> GatingMode {
        self.gating_mode
    }

    pub fn with_gating_mode(mut self, mode: GatingMode) -> Self {
        self.gating_mode = mode;
        self
    }

    /// Gating decision for a received word. `rng` is only drawn from in
    /// random-choice mode.
    pub fn gate<R: Rng + ?Sized>(&self, llr: &[f64], rng: &mut R) -> Result<GatingDecision> {
        check_len("LLR length", self.code.n, llr.len())?;
        let y_hd = hard_decision(llr);
        let alpha = self.alpha();
        if self.h.is_codeword(&y_hd)? {
            return Ok(GatingDecision {
                active: vec![false; alpha],
                source: GatingSource::Bypass,
            });
        }
        match self.gating_mode {
            GatingMode::AllDecoders => Ok(GatingDecision::all(alpha, GatingSource::All)),
            GatingMode::RandomChoice => Ok(GatingDecision::one(alpha, rng.random_range(0..alpha), GatingSource::Random)),
            GatingMode::SingleChoice => {
                let res = self.hdd.decode(&y_hd)?;
                match (res.status, res.estimated_error) {
                    (HddStatus::Corrected, Some(e)) if e.weight() > 0 => {
                        let j = self.partition.assign(&e, &self.h)?;
                        Ok(GatingDecision::one(alpha, j, GatingSource::HddRegion))
                    }
                    (HddStatus::Corrected, Some(_)) => Ok(GatingDecision {
                        active: vec![false; alpha],
                        source: GatingSource::Bypass,
                    }),
                    _ => Ok(GatingDecision::all(alpha, GatingSource::HddFailureFallback)),
                }
            }
        }
    }

    /// Full ensemble decode of one received word.
    pub fn decode_word<R: Rng + ?Sized>(&self, llr: &[f64], rng: &mut R) -> Result<(Codeword, WordDiagnostics)> {
        let decision = self.gate(llr, rng)?;
        let alpha = self.alpha();
        if decision.source == GatingSource::Bypass {
            let word = Codeword(hard_decision(llr));
            return Ok((
                word,
                WordDiagnostics {
                    source: decision.source,
                    active: decision.active,
                    chosen_expert: None,
                    expert_converged: vec![None; alpha],
                    iterations: 0,
                },
            ));
        }
        let mut candidates = Vec::with_capacity(decision.active_count());
        let mut owners = Vec::with_capacity(decision.active_count());
        let mut converged = vec![None; alpha];
        let mut iterations = 0;
        for (j, _) in decision.active.iter().enumerate().filter(|(_, &a)| a) {
            let r = decode_with(&self.h, llr, &self.experts[j], self.iterations, false);
            converged[j] = Some(r.converged);
            iterations += r.iterations_used;
            candidates.push((r.codeword, r.converged));
            owners.push(j);
        }
        let pick = combine(&candidates, llr)?;
        let word = candidates.swap_remove(pick).0;
        Ok((
            word,
            WordDiagnostics {
                source: decision.source,
                active: decision.active,
                chosen_expert: Some(owners[pick]),
                expert_converged: converged,
                iterations,
            },
        ))
    }

    /// Estimated error of the hard-decision decoder, if it succeeds.
    pub fn hdd_error(&self, llr: &[f64]) -> Result<Option<ErrorPattern>> {
        let res = self.hdd.decode(&hard_decision(llr))?;
        Ok(res.estimated_error)
    }

    /// Loads the model described by a manifest. Relative paths are resolved
    /// against the manifest's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let manifest: EnsembleManifest = crate::persist::read_json(path)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        manifest.build(base)
    }
}

/// Hard-decision decoder parameters recorded in a manifest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HddParams {
    pub m: u32,
    pub primitive_poly: u32,
    pub t: usize,
}

impl HddParams {
    pub fn of(dec: &BchDecoder) -> Self {
        HddParams {
            m: dec.field().m(),
            primitive_poly: dec.field().primitive_poly(),
            t: dec.code().t,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleManifest {
    pub code_id: String,
    /// Matrix file; the shipped matrix for `code_id` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alist: Option<String>,
    pub alpha: usize,
    pub gating_mode: GatingMode,
    #[serde(rename = "T")]
    pub iterations: usize,
    pub partition: String,
    pub experts: Vec<String>,
    pub hdd: HddParams,
}

impl EnsembleManifest {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        crate::persist::write_json(path, self)
    }

    pub fn build(&self, base: &Path) -> Result<EnsembleModel> {
        let resolve = |p: &str| -> PathBuf {
            let p = Path::new(p);
            if p.is_absolute() {
                p.to_path_buf()
            } else {
                base.join(p)
            }
        };
        let alist = self.alist.as_deref().map(resolve);
        let (mut code, h) = builtin::load_with(&self.code_id, alist.as_deref())?;
        check_len("manifest experts", self.alpha, self.experts.len())?;
        if self.hdd.t != code.t {
            log::warn!("manifest overrides t = {} with {}", code.t, self.hdd.t);
            code.t = self.hdd.t;
        }
        let partition = PartitionModel::load(resolve(&self.partition))?;
        let experts = self
            .experts
            .iter()
            .map(|p| {
                let (w, id) = WeightsSet::load(resolve(p), &h)?;
                if id != self.code_id {
                    return Err(Error::InvalidArgument(format!("expert '{p}' was trained for {id}, not {}", self.code_id)));
                }
                Ok(w)
            })
            .collect::<Result<Vec<_>>>()?;
        let field = GfField::new(self.hdd.m, self.hdd.primitive_poly)?;
        let hdd = BchDecoder::new(code.clone(), field)?;
        EnsembleModel::new(code, h, experts, self.iterations, partition, self.gating_mode, hdd)
    }
}
