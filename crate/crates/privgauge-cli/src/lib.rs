//! Pipeline orchestration behind the `privgauge` binary: configuration,
//! artifact layout, and one function per subcommand.
//!
//! Every run is driven by a [`RunConfig`] (JSON file, all fields optional
//! with desk-scale defaults). Artifacts land under one output directory:
//!
//! ```text
//! <out>/data/     corpus files + manifest
//! <out>/models/   pretrained + per-config weights, manifests, traces
//! <out>/attack/   membership-inference results per model
//! <out>/utility/  perplexity evaluations per model
//! <out>/sweep/    pareto.csv, sweep.json, report.json, sweep_report.md
//! <out>/audit/    audit_report.json, audit_report.md
//! ```
//!
//! All randomness is seeded from the config, so rerunning any command
//! reproduces its artifacts byte for byte (wall-clock timings in traces
//! aside).

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use privgauge::accountant::{calibrate_sigma, PrivacySpec, SamplingConfig};
use privgauge::artifact::{sha256_hex, write_atomic, write_json_atomic};
use privgauge::audit::{
    audit_loop, config_verdict, emit_pareto_csv, emit_report, emit_report_markdown,
    pareto_frontier, AuditOutcome, AuditReport, ConfigEval, EpsilonSchedule, Fingerprints,
    ParetoPoint, Thresholds, UtilityResult, Verdict,
};
use privgauge::corpus::{
    generate_bundle, read_corpus_dir, write_corpus_dir, CorpusBundle, CorpusManifest, CorpusSpec,
};
use privgauge::dp::{
    train_from, ClipConfig, NoiseConfig, OptimizerKind, TrainConfig, TrainTrace,
};
use privgauge::lm::{encode, nll, perplexity, ModelConfig, ModelParams};
use privgauge::mia::{collect_losses, run_mia, threshold_attack, MiaResult};

/// Environment variable that overrides the configured output directory.
pub const OUTPUT_DIR_ENV: &str = "PRIVGAUGE_OUTPUT_DIR";

/// Process exit codes: the audit's verdict is the contract with callers.
pub mod exit_codes {
    pub const ACCEPTED: u8 = 0;
    pub const OPERATIONAL_ERROR: u8 = 1;
    pub const PRIVACY_FAIL: u8 = 2;
    pub const UTILITY_FAIL: u8 = 3;
    pub const INFEASIBLE: u8 = 4;
}

pub fn verdict_exit_code(v: Verdict) -> u8 {
    match v {
        Verdict::Accepted => exit_codes::ACCEPTED,
        Verdict::PrivacyFail => exit_codes::PRIVACY_FAIL,
        Verdict::UtilityFail => exit_codes::UTILITY_FAIL,
        Verdict::Infeasible => exit_codes::INFEASIBLE,
    }
}

/// Optimization recipe for one training stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StageConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub optimizer: OptimizerKind,
    pub weight_decay: f64,
    /// Seed driving example shuffling for this stage.
    pub data_seed: u64,
    /// Seed driving the DP noise stream (unused by non-private stages).
    pub noise_seed: u64,
}

impl Default for StageConfig {
    fn default() -> Self {
        // Fine-tuning defaults; the pretraining stage overrides these.
        Self {
            epochs: 10,
            batch_size: 8,
            learning_rate: 5e-5,
            optimizer: OptimizerKind::AdamW,
            weight_decay: 0.0,
            data_seed: 1002,
            noise_seed: 2003,
        }
    }
}

fn default_pretrain_stage() -> StageConfig {
    StageConfig {
        epochs: 15,
        batch_size: 16,
        learning_rate: 1e-3,
        optimizer: OptimizerKind::AdamW,
        weight_decay: 0.0,
        data_seed: 1001,
        noise_seed: 0,
    }
}

/// Privacy parameters of the sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PrivacyConfig {
    pub delta: f64,
    pub clip_norm: f64,
    /// Budgets swept, strongest-to-weakest privacy not required; order is
    /// preserved in outputs. The first entry is the headline configuration.
    pub epsilons: Vec<f64>,
}

impl Default for PrivacyConfig {
    fn default() -> Self {
        Self {
            delta: 1e-5,
            clip_norm: 1.0,
            epsilons: vec![8.0, 2.0, 0.5],
        }
    }
}

fn default_thresholds() -> Thresholds {
    Thresholds::new(0.15, 90.0)
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("runs")
}

/// Top-level run configuration; every field has a desk-scale default so a
/// missing or partial JSON file still yields a full recipe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub data: CorpusSpec,
    pub model: ModelConfig,
    pub pretrain: StageConfig,
    pub train: StageConfig,
    pub privacy: PrivacyConfig,
    pub thresholds: Thresholds,
    pub schedule: EpsilonSchedule,
    pub output_dir: PathBuf,
    /// Worker threads for per-example gradient work; `None` uses all cores.
    pub workers: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            data: CorpusSpec::default(),
            model: ModelConfig::default(),
            pretrain: default_pretrain_stage(),
            train: StageConfig::default(),
            privacy: PrivacyConfig::default(),
            thresholds: default_thresholds(),
            schedule: EpsilonSchedule::default(),
            output_dir: default_output_dir(),
            workers: None,
        }
    }
}

impl RunConfig {
    /// Load from a JSON file (or take defaults), then apply the output-dir
    /// override chain: CLI flag beats the environment beats the file.
    pub fn load(path: Option<&Path>, output_override: Option<&Path>) -> Result<Self> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("reading config {}", p.display()))?;
                serde_json::from_str(&text)
                    .with_context(|| format!("parsing config {}", p.display()))?
            }
            None => Self::default(),
        };
        if let Ok(env_dir) = std::env::var(OUTPUT_DIR_ENV) {
            if !env_dir.is_empty() {
                cfg.output_dir = PathBuf::from(env_dir);
            }
        }
        if let Some(dir) = output_override {
            cfg.output_dir = dir.to_path_buf();
        }
        Ok(cfg)
    }

    pub fn data_dir(&self) -> PathBuf {
        self.output_dir.join("data")
    }

    pub fn models_dir(&self) -> PathBuf {
        self.output_dir.join("models")
    }
}

fn progress(msg: &str) {
    eprintln!("[privgauge] {msg}");
}

/// Generate the corpus if the data directory has none, otherwise load and
/// validate what is there. Returns the bundle and its manifest.
pub fn ensure_corpus(cfg: &RunConfig) -> Result<(CorpusBundle, CorpusManifest)> {
    let dir = cfg.data_dir();
    if dir.join("corpus_manifest.json").exists() {
        progress(&format!("loading corpus from {}", dir.display()));
        let (bundle, manifest) = read_corpus_dir(&dir)?;
        Ok((bundle, manifest))
    } else {
        progress(&format!(
            "generating corpus ({} records, seed {})",
            cfg.data.n_records, cfg.data.seed
        ));
        let bundle = generate_bundle(&cfg.data)?;
        let manifest = write_corpus_dir(&dir, &bundle, &cfg.data)?;
        Ok((bundle, manifest))
    }
}

/// Generate (or regenerate) the corpus unconditionally.
pub fn cmd_gen_data(cfg: &RunConfig) -> Result<CorpusManifest> {
    progress(&format!(
        "generating corpus ({} records, seed {})",
        cfg.data.n_records, cfg.data.seed
    ));
    let bundle = generate_bundle(&cfg.data)?;
    let manifest = write_corpus_dir(&cfg.data_dir(), &bundle, &cfg.data)?;
    progress(&format!(
        "wrote {} (dataset {})",
        cfg.data_dir().display(),
        &manifest.combined_sha256[..12]
    ));
    Ok(manifest)
}

fn stage_to_train_config(stage: &StageConfig, dp: Option<(f64, f64, f64, Option<f64>)>) -> TrainConfig {
    // dp = (sigma, clip_norm, delta, epsilon_target)
    match dp {
        Some((sigma, clip_norm, delta, epsilon_target)) => TrainConfig {
            epochs: stage.epochs,
            batch_size: stage.batch_size,
            learning_rate: stage.learning_rate,
            optimizer: stage.optimizer,
            weight_decay: stage.weight_decay,
            dp_enabled: true,
            clip: ClipConfig {
                max_grad_norm: clip_norm,
            },
            noise: NoiseConfig {
                sigma,
                seed: stage.noise_seed,
                delta,
            },
            seed: stage.data_seed,
            epsilon_target,
        },
        None => TrainConfig {
            epochs: stage.epochs,
            batch_size: stage.batch_size,
            learning_rate: stage.learning_rate,
            optimizer: stage.optimizer,
            weight_decay: stage.weight_decay,
            dp_enabled: false,
            clip: ClipConfig::unbounded(),
            noise: NoiseConfig {
                sigma: 0.0,
                seed: stage.noise_seed,
                delta: 1e-5,
            },
            seed: stage.data_seed,
            epsilon_target: None,
        },
    }
}

/// Cache key binding the pretrained weights to everything that shaped them.
fn pretrain_key(cfg: &RunConfig, dataset_sha256: &str) -> Result<String> {
    let blob = serde_json::to_vec(&(&cfg.model, &cfg.pretrain, dataset_sha256))?;
    Ok(sha256_hex(&blob)[..16].to_string())
}

/// Train (or load from cache) the shared non-private pretrained model.
pub fn pretrained_model(
    cfg: &RunConfig,
    bundle: &CorpusBundle,
    dataset_sha256: &str,
) -> Result<ModelParams> {
    let key = pretrain_key(cfg, dataset_sha256)?;
    let bin = cfg.models_dir().join(format!("pretrained-{key}.bin"));
    let manifest = cfg.models_dir().join(format!("pretrained-{key}.json"));
    if bin.exists() && manifest.exists() {
        progress(&format!("loading cached pretrained model ({key})"));
        return Ok(ModelParams::load(&bin, &manifest)?);
    }
    progress(&format!(
        "pretraining on {} general sentences ({} epochs)",
        bundle.pretrain.len(),
        cfg.pretrain.epochs
    ));
    let params = ModelParams::init(cfg.model)?;
    let train_cfg = stage_to_train_config(&cfg.pretrain, None);
    let (params, trace) = train_from(params, &bundle.pretrain, &train_cfg)?;
    progress(&format!(
        "pretrain losses: first epoch {:.4}, last epoch {:.4}",
        trace.epoch_losses[0], trace.final_loss
    ));
    params.save(&bin, &manifest)?;
    write_json_atomic(
        &cfg.models_dir().join(format!("pretrained-{key}-trace.json")),
        &trace,
    )?;
    Ok(params)
}

/// One fine-tuned configuration with its artifacts still in memory.
pub struct ConfigRun {
    pub label: String,
    pub epsilon_target: Option<f64>,
    pub model: ModelParams,
    pub trace: TrainTrace,
    pub model_sha256: String,
}

/// Fine-tune the members split at one privacy budget (or none), starting
/// from the shared pretrained weights. Every configuration uses the same
/// data and noise seeds so runs differ only in their noise scale.
pub fn run_one_config(
    cfg: &RunConfig,
    label: &str,
    epsilon: Option<f64>,
    pretrained: &ModelParams,
    members: &[String],
) -> Result<ConfigRun> {
    let n = members.len();
    let dp = match epsilon {
        Some(eps) => {
            let sampling = SamplingConfig {
                q: (cfg.train.batch_size as f64 / n as f64).min(1.0),
                steps: (n.div_ceil(cfg.train.batch_size) * cfg.train.epochs) as u64,
            };
            let spec = PrivacySpec {
                epsilon: eps,
                delta: cfg.privacy.delta,
            };
            let calibration = calibrate_sigma(&spec, &sampling)?;
            progress(&format!(
                "{label}: calibrated sigma {:.4} for epsilon {eps} \
                 (achieves {:.4} at order {})",
                calibration.sigma, calibration.achieved_epsilon, calibration.optimal_order
            ));
            Some((calibration.sigma, cfg.privacy.clip_norm, cfg.privacy.delta, Some(eps)))
        }
        None => None,
    };
    let train_cfg = stage_to_train_config(&cfg.train, dp);
    progress(&format!(
        "{label}: fine-tuning on {n} members ({} epochs, batch {})",
        cfg.train.epochs, cfg.train.batch_size
    ));
    let (model, trace) = train_from(pretrained.clone(), members, &train_cfg)?;
    let model_sha256 = model.content_hash();
    progress(&format!(
        "{label}: final loss {:.4}, model {}",
        trace.final_loss,
        &model_sha256[..12]
    ));
    Ok(ConfigRun {
        label: label.to_string(),
        epsilon_target: epsilon,
        model,
        trace,
        model_sha256,
    })
}

fn save_config_run(cfg: &RunConfig, run: &ConfigRun) -> Result<()> {
    let dir = cfg.models_dir();
    run.model.save(
        &dir.join(format!("{}.bin", run.label)),
        &dir.join(format!("{}.json", run.label)),
    )?;
    write_json_atomic(&dir.join(format!("{}-trace.json", run.label)), &run.trace)?;
    Ok(())
}

/// Train one labeled configuration end to end and persist it.
pub fn cmd_train(cfg: &RunConfig, label: &str, epsilon: Option<f64>) -> Result<ConfigRun> {
    let (bundle, manifest) = ensure_corpus(cfg)?;
    let pretrained = pretrained_model(cfg, &bundle, &manifest.combined_sha256)?;
    let run = run_one_config(cfg, label, epsilon, &pretrained, &bundle.split.members)?;
    save_config_run(cfg, &run)?;
    Ok(run)
}

fn load_model_by_label(cfg: &RunConfig, label: &str) -> Result<ModelParams> {
    let dir = cfg.models_dir();
    let bin = dir.join(format!("{label}.bin"));
    let manifest = dir.join(format!("{label}.json"));
    if !bin.exists() {
        bail!(
            "no model named '{label}' under {} (run `privgauge train --label {label}` first)",
            dir.display()
        );
    }
    Ok(ModelParams::load(&bin, &manifest)?)
}

/// Run the membership-inference attack against a stored model.
pub fn cmd_attack(cfg: &RunConfig, label: &str) -> Result<MiaResult> {
    let (bundle, _) = ensure_corpus(cfg)?;
    let model = load_model_by_label(cfg, label)?;
    progress(&format!(
        "attacking {label} with {} members / {} non-members",
        bundle.split.members.len(),
        bundle.split.nonmembers.len()
    ));
    let samples = collect_losses(&model, &bundle.split.members, &bundle.split.nonmembers)?;
    let result = threshold_attack(&samples)?;
    let attack_dir = cfg.output_dir.join("attack");
    let path = attack_dir.join(format!("{label}.json"));
    write_json_atomic(&path, &result)?;

    // Per-sample losses for external ROC plotting.
    let mut csv = String::from("loss,is_member,source_id\n");
    for s in &samples {
        csv.push_str(&format!("{},{},{}\n", s.loss, s.is_member, s.source_id));
    }
    write_atomic(&attack_dir.join(format!("{label}-losses.csv")), csv.as_bytes())?;

    progress(&format!(
        "advantage {:.4}, auroc {:.4} -> {}",
        result.advantage,
        result.auroc,
        path.display()
    ));
    Ok(result)
}

/// Utility evaluation artifact: corpus perplexity plus per-sentence detail.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UtilityEval {
    pub label: String,
    pub ppl: f64,
    pub n_sentences: usize,
    /// exp(mean NLL) of each general sentence, in corpus order.
    pub per_sentence_ppl: Vec<f64>,
}

/// Score a stored model's perplexity on the general corpus.
pub fn cmd_eval_utility(cfg: &RunConfig, label: &str) -> Result<UtilityEval> {
    let (bundle, _) = ensure_corpus(cfg)?;
    let model = load_model_by_label(cfg, label)?;
    let sentences = &bundle.general.sentences;
    let ppl = perplexity(&model, sentences)?;
    let per_sentence_ppl = sentences
        .iter()
        .map(|s| {
            let tokens = encode(s, model.config.context_len);
            Ok(nll(&model, &tokens)?.1.exp())
        })
        .collect::<Result<Vec<f64>>>()?;
    let eval = UtilityEval {
        label: label.to_string(),
        ppl,
        n_sentences: sentences.len(),
        per_sentence_ppl,
    };
    let path = cfg.output_dir.join("utility").join(format!("{label}.json"));
    write_json_atomic(&path, &eval)?;
    progress(&format!("{label}: perplexity {ppl:.2} -> {}", path.display()));
    Ok(eval)
}

/// One sweep row as persisted in `sweep.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepConfigResult {
    pub label: String,
    pub epsilon_target: Option<f64>,
    pub model_sha256: String,
    pub mia: MiaResult,
    pub utility: UtilityResult,
    pub verdict: Verdict,
    pub on_frontier: bool,
    pub trace: TrainTrace,
}

/// Full sweep output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepSummary {
    pub dataset_sha256: String,
    pub reference_ppl: f64,
    pub thresholds: Thresholds,
    pub configs: Vec<SweepConfigResult>,
}

fn baseline_label() -> String {
    "baseline".to_string()
}

fn dp_label(eps: f64) -> String {
    format!("dp-eps-{eps}")
}

/// Train the baseline and every DP budget, attack and score each, and write
/// the Pareto artifacts plus a headline audit report.
pub fn cmd_sweep(cfg: &RunConfig) -> Result<SweepSummary> {
    let (bundle, manifest) = ensure_corpus(cfg)?;
    let dataset_sha256 = manifest.combined_sha256.clone();
    let pretrained = pretrained_model(cfg, &bundle, &dataset_sha256)?;
    let members = &bundle.split.members;
    let nonmembers = &bundle.split.nonmembers;
    let general = &bundle.general.sentences;

    // The non-private baseline anchors the utility scale.
    let mut runs = vec![run_one_config(cfg, &baseline_label(), None, &pretrained, members)?];
    for &eps in &cfg.privacy.epsilons {
        runs.push(run_one_config(cfg, &dp_label(eps), Some(eps), &pretrained, members)?);
    }

    progress("evaluating attack and utility for each configuration");
    let reference_ppl = perplexity(&runs[0].model, general)?;
    let mut rows = Vec::with_capacity(runs.len());
    for run in &runs {
        let mia = run_mia(&run.model, members, nonmembers)?;
        let ppl = perplexity(&run.model, general)?;
        let utility = UtilityResult::new(ppl, reference_ppl)?;
        let verdict = config_verdict(mia.advantage, utility.score, &cfg.thresholds);
        progress(&format!(
            "{}: advantage {:.4}, auroc {:.4}, ppl {:.2}, utility {:.1} ({:?})",
            run.label, mia.advantage, mia.auroc, ppl, utility.score, verdict
        ));
        rows.push((run, mia, utility, verdict));
    }

    let points: Vec<ParetoPoint> = rows
        .iter()
        .map(|(run, mia, utility, _)| ParetoPoint {
            label: run.label.clone(),
            epsilon: run.epsilon_target,
            advantage: mia.advantage,
            utility_score: utility.score,
        })
        .collect();
    let frontier = pareto_frontier(&points);

    let configs: Vec<SweepConfigResult> = rows
        .iter()
        .zip(&frontier)
        .map(|((run, mia, utility, verdict), &on_frontier)| SweepConfigResult {
            label: run.label.clone(),
            epsilon_target: run.epsilon_target,
            model_sha256: run.model_sha256.clone(),
            mia: *mia,
            utility: *utility,
            verdict: *verdict,
            on_frontier,
            trace: run.trace.clone(),
        })
        .collect();

    for run in &runs {
        save_config_run(cfg, run)?;
    }

    let sweep_dir = cfg.output_dir.join("sweep");
    write_atomic(&sweep_dir.join("pareto.csv"), emit_pareto_csv(&points).as_bytes())?;

    let summary = SweepSummary {
        dataset_sha256: dataset_sha256.clone(),
        reference_ppl,
        thresholds: cfg.thresholds,
        configs,
    };
    write_json_atomic(&sweep_dir.join("sweep.json"), &summary)?;

    // Headline report: the first configured budget, with the sweep attached.
    let headline = &summary.configs[1];
    let report = AuditReport {
        epsilon_target: headline.trace.epsilon_target,
        epsilon_achieved: headline.trace.epsilon_achieved,
        delta: headline.trace.delta,
        sigma: headline.trace.sigma,
        clip_norm: headline.trace.clip_norm,
        sample_rate: headline.trace.sample_rate,
        steps: headline.trace.steps,
        advantage: headline.mia.advantage,
        auroc: headline.mia.auroc,
        ppl: headline.utility.ppl,
        reference_ppl,
        utility_score: headline.utility.score,
        verdict: headline.verdict,
        thresholds: cfg.thresholds,
        fingerprints: Fingerprints {
            dataset_sha256,
            model_sha256: headline.model_sha256.clone(),
            train_config_sha256: sha256_hex(&serde_json::to_vec(&cfg.train)?),
        },
        iterations: Vec::new(),
        pareto: points,
    };
    write_atomic(&sweep_dir.join("report.json"), emit_report(&report)?.as_bytes())?;
    write_atomic(
        &sweep_dir.join("sweep_report.md"),
        emit_report_markdown(&report).as_bytes(),
    )?;
    progress(&format!("sweep artifacts in {}", sweep_dir.display()));
    Ok(summary)
}

/// Audit loop output: the report plus the raw loop outcome.
pub struct AuditRun {
    pub report: AuditReport,
    pub outcome: AuditOutcome,
}

/// Search budgets with the feedback loop until the thresholds hold or the
/// search is exhausted, then emit the audit report.
pub fn cmd_audit(cfg: &RunConfig) -> Result<AuditRun> {
    let (bundle, manifest) = ensure_corpus(cfg)?;
    let dataset_sha256 = manifest.combined_sha256.clone();
    let pretrained = pretrained_model(cfg, &bundle, &dataset_sha256)?;
    let members = &bundle.split.members;
    let nonmembers = &bundle.split.nonmembers;
    let general = &bundle.general.sentences;

    // Baseline once: it fixes the utility scale for every iteration.
    let baseline = run_one_config(cfg, &baseline_label(), None, &pretrained, members)?;
    save_config_run(cfg, &baseline)?;
    let reference_ppl = perplexity(&baseline.model, general)?;
    progress(&format!("baseline reference perplexity {reference_ppl:.2}"));

    // The loop's evaluator trains and scores one budget; keep the artifacts
    // of every candidate so the accepted one can be reported.
    let mut evaluated: Vec<(f64, ConfigRun, MiaResult, UtilityResult)> = Vec::new();
    let outcome = audit_loop(&cfg.schedule, &cfg.thresholds, |eps| {
        let run = run_one_config(cfg, &dp_label(eps), Some(eps), &pretrained, members)
            .map_err(to_privgauge_error)?;
        let mia = run_mia(&run.model, members, nonmembers)?;
        let ppl = perplexity(&run.model, general)?;
        let utility = UtilityResult::new(ppl, reference_ppl)?;
        progress(&format!(
            "audit eps {eps}: advantage {:.4}, utility {:.1}",
            mia.advantage, utility.score
        ));
        let eval = ConfigEval {
            advantage: mia.advantage,
            utility: utility.score,
        };
        evaluated.push((eps, run, mia, utility));
        Ok(eval)
    })?;

    let (_, final_run, final_mia, final_utility) = evaluated
        .iter()
        .rev()
        .find(|(eps, _, _, _)| *eps == outcome.final_epsilon)
        .expect("final epsilon was evaluated");
    save_config_run(cfg, final_run)?;

    let report = AuditReport {
        epsilon_target: final_run.trace.epsilon_target,
        epsilon_achieved: final_run.trace.epsilon_achieved,
        delta: cfg.privacy.delta,
        sigma: final_run.trace.sigma,
        clip_norm: final_run.trace.clip_norm,
        sample_rate: final_run.trace.sample_rate,
        steps: final_run.trace.steps,
        advantage: final_mia.advantage,
        auroc: final_mia.auroc,
        ppl: final_utility.ppl,
        reference_ppl,
        utility_score: final_utility.score,
        verdict: outcome.verdict,
        thresholds: cfg.thresholds,
        fingerprints: Fingerprints {
            dataset_sha256,
            model_sha256: final_run.model_sha256.clone(),
            train_config_sha256: sha256_hex(&serde_json::to_vec(&cfg.train)?),
        },
        iterations: outcome.iterations.clone(),
        pareto: Vec::new(),
    };
    let audit_dir = cfg.output_dir.join("audit");
    write_atomic(&audit_dir.join("audit_report.json"), emit_report(&report)?.as_bytes())?;
    write_atomic(
        &audit_dir.join("audit_report.md"),
        emit_report_markdown(&report).as_bytes(),
    )?;
    progress(&format!(
        "audit verdict: {:?} at epsilon {} ({} iterations)",
        outcome.verdict,
        outcome.final_epsilon,
        report.iterations.len()
    ));
    Ok(AuditRun { report, outcome })
}

fn to_privgauge_error(e: anyhow::Error) -> privgauge::Error {
    privgauge::Error::Artifact(format!("{e:#}"))
}

/// Re-validate a stored report and return its verdict.
pub fn cmd_report(input: &Path, markdown_out: Option<&Path>) -> Result<Verdict> {
    let text = std::fs::read_to_string(input)
        .with_context(|| format!("reading report {}", input.display()))?;
    let report = privgauge::audit::parse_report(&text)?;
    if !report.verdict_is_consistent() {
        bail!(
            "report verdict '{:?}' does not follow from its stored numbers \
             (advantage {}, utility {}, thresholds {:?})",
            report.verdict,
            report.advantage,
            report.utility_score,
            report.thresholds
        );
    }
    if let Some(path) = markdown_out {
        write_atomic(path, emit_report_markdown(&report).as_bytes())?;
        progress(&format!("wrote {}", path.display()));
    }
    progress(&format!("verdict: {:?}", report.verdict));
    Ok(report.verdict)
}
