use std::fmt;
use std::path::{Path, PathBuf};

use serde::Serialize;
use wbp_ensemble::bp::WeightsSet;
use wbp_ensemble::builtin;
use wbp_ensemble::channel::sigma_from_snr;
use wbp_ensemble::code::{CodeSpec, ErrorPattern, ParityCheckMatrix};
use wbp_ensemble::ensemble::{EnsembleManifest, EnsembleModel, GatingMode, HddParams};
use wbp_ensemble::eval::{
    compare_curves, export, import, run_sweep, ConfigEcho, EvalConfig, ExpertDecoder, ExportFormat, FrameDecoder,
    PlainBp,
};
use wbp_ensemble::hdd::{selftest, BchDecoder};
use wbp_ensemble::partition::{
    em_fit, induce_datasets, prop1_experiment, EmConfig, MixtureVariant, PartitionModel,
};
use wbp_ensemble::persist::write_json;
use wbp_ensemble::training::{generate_dataset, train, TrainConfig, TrainMetadata, TrainMode, TrainingSample};

use crate::{CodeArgs, Command, CommonArgs, Format, Gating, PartitionKind, TrainArgs};

#[derive(Debug)]
pub struct CliError {
    pub kind: &'static str,
    pub message: String,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<wbp_ensemble::Error> for CliError {
    fn from(e: wbp_ensemble::Error) -> Self {
        CliError {
            kind: e.kind(),
            message: e.to_string(),
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn usage(message: impl Into<String>) -> CliError {
    CliError {
        kind: "usage",
        message: message.into(),
    }
}

pub fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::LoadCode { code, out } => load_code(&code, out.as_deref()),
        Command::TrainBaseline { code, common, train, out } => {
            init_workers(&common)?;
            train_baseline(&code, &common, &train, &out)
        }
        Command::Partition {
            kind,
            code,
            common,
            alpha,
            k,
            train_snr,
            restarts,
            max_em_iterations,
            out,
        } => {
            init_workers(&common)?;
            partition(kind, &code, &common, alpha, k, train_snr, restarts, max_em_iterations, &out)
        }
        Command::TrainExperts {
            code,
            common,
            train,
            partition,
            weights,
            from_scratch,
            gating,
            manifest,
        } => {
            init_workers(&common)?;
            train_experts(&code, &common, &train, &partition, weights.as_deref(), from_scratch, gating, &manifest)
        }
        Command::Eval {
            code,
            common,
            snr,
            min_errors,
            max_frames,
            shard_frames,
            iterations,
            weights,
            manifest,
            gating,
            random_codewords,
            out,
            format,
        } => {
            let cfg = EvalConfig {
                min_frame_errors: min_errors,
                max_frames,
                shard_frames,
                workers: common.workers,
                random_codewords,
                ..EvalConfig::new(snr, common.seed)
            };
            eval(&code, cfg, iterations, weights.as_deref(), manifest.as_deref(), gating, &out, format)
        }
        Command::Compare { a, b, out } => {
            let report = compare_curves(&import(&a)?, &import(&b)?)?;
            emit(&report, out.as_deref())
        }
        Command::Prop1 {
            common,
            snr,
            rate,
            k,
            v,
            restarts,
            out,
        } => {
            init_workers(&common)?;
            let sigmas: Vec<f64> = snr.iter().map(|&s| sigma_from_snr(s, rate)).collect();
            let cfg = EmConfig {
                restarts,
                seed: common.seed,
                ..EmConfig::default()
            };
            let report = prop1_experiment(&sigmas, k, v, &cfg)?;
            emit(&report, out.as_deref())
        }
        Command::HddSelftest { code, common, trials, out } => {
            let (spec, _) = load(&code)?;
            let dec = BchDecoder::with_default_field(spec)?;
            let report = selftest(&dec, trials, common.seed)?;
            emit(&report, out.as_deref())?;
            if report.passed {
                Ok(())
            } else {
                Err(CliError {
                    kind: "selftest_failed",
                    message: format!("{}: some planted errors were not corrected", report.code_id),
                })
            }
        }
    }
}

fn init_workers(common: &CommonArgs) -> Result<()> {
    if common.workers == 0 {
        return Err(usage("--workers must be positive"));
    }
    // Ignore a second initialization in the same process.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(common.workers).build_global();
    Ok(())
}

fn load(code: &CodeArgs) -> Result<(CodeSpec, ParityCheckMatrix)> {
    Ok(builtin::load_with(&code.code, code.alist.as_deref())?)
}

/// Pretty JSON to `out`, or to stdout.
fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => Ok(write_json(path, value)?),
        None => {
            let text = serde_json::to_string_pretty(value).map_err(|e| usage(e.to_string()))?;
            println!("{text}");
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct CodeSummary {
    code_id: String,
    n: usize,
    k: usize,
    t: usize,
    rate: f64,
    rows: usize,
    edges: usize,
    rank: usize,
    four_cycles: usize,
    var_degrees: (usize, usize),
    check_degrees: (usize, usize),
}

fn degree_range(it: impl Iterator<Item = usize>) -> (usize, usize) {
    it.fold((usize::MAX, 0), |(lo, hi), d| (lo.min(d), hi.max(d)))
}

fn load_code(code: &CodeArgs, out: Option<&Path>) -> Result<()> {
    let (spec, h) = load(code)?;
    let summary = CodeSummary {
        code_id: spec.code_id.clone(),
        n: spec.n,
        k: spec.k,
        t: spec.t,
        rate: spec.rate(),
        rows: h.rows(),
        edges: h.num_edges(),
        rank: h.rank(),
        four_cycles: h.four_cycles(),
        var_degrees: degree_range((0..h.cols()).map(|v| h.var_degree(v))),
        check_degrees: degree_range((0..h.rows()).map(|c| h.check_degree(c))),
    };
    emit(&summary, out)
}

fn train_config(args: &TrainArgs, seed: u64, mode: TrainMode) -> TrainConfig {
    let base = match mode {
        TrainMode::FromScratch => TrainConfig::from_scratch(seed),
        TrainMode::Finetune => TrainConfig::finetune(seed),
    };
    TrainConfig {
        snr_grid_db: args.train_snr.clone(),
        batch_per_snr: args.batch_per_snr,
        learning_rate: args.lr.unwrap_or(base.learning_rate),
        epochs: args.epochs,
        steps_per_epoch: args.steps_per_epoch,
        iterations: args.iterations,
        tied_weights: args.tied,
        max_validation: args.max_validation,
        plateau_patience: args.patience,
        ..base
    }
}

fn meta_path(weights: &Path) -> PathBuf {
    let stem = weights.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    weights.with_file_name(format!("{stem}.meta.json"))
}

fn dataset(spec: &CodeSpec, h: &ParityCheckMatrix, cfg: &TrainConfig, k: usize) -> Result<Vec<TrainingSample>> {
    Ok(generate_dataset(spec, h, cfg, k)?.samples)
}

fn train_baseline(code: &CodeArgs, common: &CommonArgs, args: &TrainArgs, out: &Path) -> Result<()> {
    let (spec, h) = load(code)?;
    let cfg = train_config(args, common.seed, TrainMode::FromScratch);
    let data = dataset(&spec, &h, &cfg, args.k)?;
    let outcome = train(&spec, &h, &data, &cfg, None)?;
    outcome.weights.save(out, &h, &spec.code_id)?;
    TrainMetadata::from_outcome(&cfg, &outcome, &data).save(meta_path(out))?;
    log::info!("baseline: best epoch {} of {}", outcome.best_epoch, outcome.history.len());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn partition(
    kind: PartitionKind,
    code: &CodeArgs,
    common: &CommonArgs,
    alpha: usize,
    k: usize,
    train_snr: Vec<f64>,
    restarts: usize,
    max_em_iterations: usize,
    out: &Path,
) -> Result<()> {
    let (spec, h) = load(code)?;
    if alpha == 0 {
        return Err(usage("--alpha must be positive"));
    }
    let model = match kind {
        PartitionKind::Hamming => PartitionModel::Hamming { alpha },
        PartitionKind::Em | PartitionKind::EmSyndrome => {
            let cfg = TrainConfig {
                snr_grid_db: train_snr,
                ..TrainConfig::from_scratch(common.seed)
            };
            let errors: Vec<ErrorPattern> = dataset(&spec, &h, &cfg, k)?
                .into_iter()
                .map(|s| s.true_error)
                .filter(|e| e.weight() > 0)
                .collect();
            let variant = if kind == PartitionKind::Em {
                MixtureVariant::Naive
            } else {
                MixtureVariant::SyndromeGuided
            };
            let em = EmConfig {
                restarts,
                max_iterations: max_em_iterations,
                seed: common.seed,
                ..EmConfig::default()
            };
            PartitionModel::Em(em_fit(&errors, alpha, variant, &em, Some(&h))?)
        }
    };
    model.save(out, &spec.code_id, k, common.seed)?;
    Ok(())
}

fn gating_mode(g: Gating) -> GatingMode {
    match g {
        Gating::Single => GatingMode::SingleChoice,
        Gating::All => GatingMode::AllDecoders,
        Gating::Random => GatingMode::RandomChoice,
    }
}

#[allow(clippy::too_many_arguments)]
fn train_experts(
    code: &CodeArgs,
    common: &CommonArgs,
    args: &TrainArgs,
    partition_path: &Path,
    baseline_path: Option<&Path>,
    from_scratch: bool,
    gating: Gating,
    manifest_path: &Path,
) -> Result<()> {
    let (spec, h) = load(code)?;
    let model = PartitionModel::load(partition_path)?;
    let baseline = match (baseline_path, from_scratch) {
        (Some(p), false) => Some(WeightsSet::load(p, &h)?.0),
        _ => None,
    };
    if baseline.is_none() && !from_scratch && matches!(model, PartitionModel::Hamming { .. }) {
        return Err(usage("Hamming experts are finetuned: pass --weights <baseline> or --from-scratch"));
    }
    let mode = if baseline.is_some() {
        TrainMode::Finetune
    } else {
        TrainMode::FromScratch
    };
    let cfg = train_config(args, common.seed, mode);
    let data = dataset(&spec, &h, &cfg, args.k)?;
    let induced = induce_datasets(&data, &model, &h)?;
    if !induced.empty_regions.is_empty() {
        let list: Vec<String> = induced.empty_regions.iter().map(|r| (r + 1).to_string()).collect();
        return Err(usage(format!("regions {} received no training samples", list.join(", "))));
    }

    let dir = manifest_path.parent().map(Path::to_path_buf).unwrap_or_default();
    let stem = manifest_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "ensemble".into());
    let partition_name = format!("{stem}.partition.json");
    model.save(dir.join(&partition_name), &spec.code_id, args.k, common.seed)?;
    let mut experts = Vec::with_capacity(model.alpha());
    for (i, region) in induced.datasets.iter().enumerate() {
        let outcome = train(&spec, &h, region, &cfg, baseline.as_ref())?;
        let name = format!("{stem}.expert{}.json", i + 1);
        let path = dir.join(&name);
        outcome.weights.save(&path, &h, &spec.code_id)?;
        TrainMetadata::from_outcome(&cfg, &outcome, region).save(meta_path(&path))?;
        log::info!("expert {}: {} samples, best epoch {}", i + 1, region.len(), outcome.best_epoch);
        experts.push(name);
    }
    let hdd = BchDecoder::with_default_field(spec.clone())?;
    let manifest = EnsembleManifest {
        code_id: spec.code_id.clone(),
        alist: code.alist.as_ref().map(|p| p.display().to_string()),
        alpha: model.alpha(),
        gating_mode: gating_mode(gating),
        iterations: args.iterations,
        partition: partition_name,
        experts,
        hdd: HddParams::of(&hdd),
    };
    manifest.save(manifest_path)?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn eval(
    code: &CodeArgs,
    cfg: EvalConfig,
    iterations: usize,
    weights: Option<&Path>,
    manifest: Option<&Path>,
    gating: Option<Gating>,
    out: &Path,
    format: Format,
) -> Result<()> {
    let format = match format {
        Format::Csv => ExportFormat::Csv,
        Format::Json => ExportFormat::Json,
    };
    let run = |spec: &CodeSpec, h: &ParityCheckMatrix, dec: &dyn DynDecoder| -> Result<()> {
        let records = dec.sweep(&cfg, spec, h)?;
        let echo = ConfigEcho::new(&cfg, spec, &dec.label())?;
        export(&records, &echo, out, format)?;
        Ok(())
    };
    match (weights, manifest) {
        (_, Some(m)) => {
            let mut model = EnsembleModel::load(m)?;
            if let Some(g) = gating {
                model = model.with_gating_mode(gating_mode(g));
            }
            let spec = model.code().clone();
            let h = model.parity_check().clone();
            run(&spec, &h, &model)
        }
        (Some(w), None) => {
            let (spec, h) = load(code)?;
            let (ws, id) = WeightsSet::load(w, &h)?;
            if id != spec.code_id {
                return Err(usage(format!("weights were trained for {id}, not {}", spec.code_id)));
            }
            let label = w.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            let dec = ExpertDecoder::new(&h, &ws, iterations, label)?;
            run(&spec, &h, &dec)
        }
        (None, None) => {
            let (spec, h) = load(code)?;
            if gating.is_some() {
                return Err(usage("--gating needs --manifest"));
            }
            run(&spec, &h, &PlainBp { h: &h, iterations })
        }
    }
}

/// Object-safe view of a decoder for the sweep.
trait DynDecoder {
    fn label(&self) -> String;
    fn sweep(&self, cfg: &EvalConfig, spec: &CodeSpec, h: &ParityCheckMatrix) -> wbp_ensemble::Result<Vec<wbp_ensemble::eval::FerRecord>>;
}

impl<D: FrameDecoder> DynDecoder for D {
    fn label(&self) -> String {
        self.describe()
    }

    fn sweep(&self, cfg: &EvalConfig, spec: &CodeSpec, h: &ParityCheckMatrix) -> wbp_ensemble::Result<Vec<wbp_ensemble::eval::FerRecord>> {
        run_sweep(cfg, spec, h, self)
    }
}
