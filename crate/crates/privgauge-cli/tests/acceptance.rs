//! Acceptance gate for the whole artifact. One test per criterion; the
//! harness line for each test is the pass/fail record, and every tolerance
//! is pinned as a constant here.
//!
//! Criteria 4 and 5 (and the default-threshold audit) share a single
//! desk-scale sweep run at the default configuration; it is executed once
//! and cached for the lifetime of the test process.

use std::path::PathBuf;
use std::process::Command;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use privgauge::accountant::{calibrate_sigma, epsilon_for_sigma, PrivacySpec, SamplingConfig};
use privgauge::audit::{
    audit_loop, pareto_frontier, utility_score, ConfigEval, EpsilonSchedule, ParetoPoint,
    Thresholds, Verdict,
};
use privgauge::corpus::{generate_bundle, CorpusSpec};
use privgauge::dp::{
    clip_gradient, train, train_from, ClipConfig, NoiseConfig, OptimizerKind, TrainConfig,
};
use privgauge::lm::{encode, nll, per_sample_grads, perplexity, ModelConfig, ModelParams};
use privgauge::mia::{auroc, collect_losses, threshold_attack, LossSample};
use privgauge_cli::{cmd_audit, cmd_sweep, verdict_exit_code, RunConfig, SweepSummary};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// ---------------------------------------------------------------------------
// Pinned tolerances and reference values.

/// Budget → noise multiplier at q = 8/300, T = 380, δ = 1e-5.
const SIGMA_REFERENCE: [(f64, f64); 3] = [(8.0, 0.6927), (2.0, 1.3232), (0.5, 3.9062)];
const SIGMA_RTOL: f64 = 0.10;
const CALIBRATION_BUDGET: Duration = Duration::from_secs(5);

/// Perplexity → utility score against the 179.91 reference.
const UTILITY_REFERENCE_PPL: f64 = 179.91;
const UTILITY_TABLE: [(f64, f64); 4] = [
    (179.91, 100.0),
    (119.63, 150.4),
    (121.27, 148.3),
    (121.97, 147.5),
];
const UTILITY_TOLERANCE_PP: f64 = 0.1;

/// Directional leakage requirements on the default desk sweep.
const MIN_ADVANTAGE_SEPARATION: f64 = 0.05;
const MIN_GAP_RATIO: f64 = 3.0;
const PER_CONFIG_BUDGET: Duration = Duration::from_secs(15 * 60);

/// Width of the band the DP advantages must share.
const MAX_PLATEAU_BAND: f64 = 0.05;

/// Chance band for an attack on an untrained model at n = 500.
const AUROC_CHANCE_BAND: (f64, f64) = (0.43, 0.57);

/// Finite-difference agreement: relative where the gradient is sizable,
/// with an absolute floor at the central-difference rounding noise.
const FD_RTOL: f64 = 1e-4;
const FD_ATOL: f64 = 1e-9;

const CLIP_VECTORS: usize = 1000;
const ORACLE_MAX_SAMPLES: usize = 12;
const REGULARIZATION_REPS: usize = 5;

// ---------------------------------------------------------------------------
// Shared desk-scale run (default configuration).

struct DeskRun {
    dir: PathBuf,
    summary: SweepSummary,
    sweep_wall: Duration,
}

fn desk_run() -> &'static DeskRun {
    static RUN: OnceLock<DeskRun> = OnceLock::new();
    RUN.get_or_init(|| {
        let dir = std::env::temp_dir().join(format!("privgauge-acceptance-{}", std::process::id()));
        let cfg = RunConfig {
            output_dir: dir.clone(),
            ..RunConfig::default()
        };
        let started = Instant::now();
        let summary = cmd_sweep(&cfg).expect("desk-scale sweep at the default config");
        DeskRun {
            dir,
            summary,
            sweep_wall: started.elapsed(),
        }
    })
}

fn dp_configs(summary: &SweepSummary) -> Vec<&privgauge_cli::SweepConfigResult> {
    summary
        .configs
        .iter()
        .filter(|c| c.epsilon_target.is_some())
        .collect()
}

// ---------------------------------------------------------------------------

#[test]
fn criterion_1_sigma_calibration_matches_reference_values() {
    let sampling = SamplingConfig {
        q: 8.0 / 300.0,
        steps: 380,
    };
    let started = Instant::now();
    for (epsilon, expected_sigma) in SIGMA_REFERENCE {
        let cal = calibrate_sigma(&PrivacySpec { epsilon, delta: 1e-5 }, &sampling).unwrap();
        let rel = (cal.sigma - expected_sigma).abs() / expected_sigma;
        println!(
            "criterion 1: eps {epsilon}: sigma {:.4} vs reference {expected_sigma} ({:+.2}%)",
            cal.sigma,
            100.0 * (cal.sigma / expected_sigma - 1.0)
        );
        assert!(
            rel <= SIGMA_RTOL,
            "sigma for eps {epsilon} off by {:.1}% (> {:.0}%)",
            100.0 * rel,
            100.0 * SIGMA_RTOL
        );
        assert!(
            cal.achieved_epsilon <= epsilon,
            "calibrated sigma overspends: {} > {epsilon}",
            cal.achieved_epsilon
        );
    }
    let elapsed = started.elapsed();
    println!("criterion 1: three calibrations in {elapsed:?}");
    assert!(
        elapsed <= CALIBRATION_BUDGET,
        "calibration took {elapsed:?} (budget {CALIBRATION_BUDGET:?})"
    );
}

#[test]
fn criterion_2_utility_scores_match_reference_table() {
    for (ppl, expected) in UTILITY_TABLE {
        let score = utility_score(ppl, UTILITY_REFERENCE_PPL).unwrap();
        println!("criterion 2: ppl {ppl} -> {score:.4} (reference {expected})");
        assert!(
            (score - expected).abs() <= UTILITY_TOLERANCE_PP,
            "utility for ppl {ppl}: {score:.4} vs {expected} (tolerance {UTILITY_TOLERANCE_PP} pp)"
        );
    }
}

#[test]
fn criterion_3_frontier_of_reference_points_is_exactly_the_high_budget_run() {
    // The published four-configuration comparison: the budget-8 model
    // dominates both tighter budgets (equal-or-better on both axes) and the
    // non-private baseline is dominated on advantage.
    let points = vec![
        ParetoPoint {
            label: "baseline".into(),
            epsilon: None,
            advantage: 0.358,
            utility_score: 100.0,
        },
        ParetoPoint {
            label: "dp-eps-8".into(),
            epsilon: Some(8.0),
            advantage: 0.102,
            utility_score: 150.4,
        },
        ParetoPoint {
            label: "dp-eps-2".into(),
            epsilon: Some(2.0),
            advantage: 0.104,
            utility_score: 148.3,
        },
        ParetoPoint {
            label: "dp-eps-0.5".into(),
            epsilon: Some(0.5),
            advantage: 0.106,
            utility_score: 147.5,
        },
    ];
    let frontier = pareto_frontier(&points);
    println!("criterion 3: frontier mask {frontier:?}");
    assert_eq!(
        frontier,
        vec![false, true, false, false],
        "frontier must contain exactly the budget-8 configuration"
    );
}

#[test]
fn criterion_4_baseline_leaks_more_than_every_dp_model_on_the_desk_run() {
    let run = desk_run();
    let baseline = &run.summary.configs[0];
    assert!(baseline.epsilon_target.is_none(), "first config is the baseline");
    let base_adv = baseline.mia.advantage;
    let base_gap = baseline.mia.loss_gap;

    for dp in dp_configs(&run.summary) {
        let adv = dp.mia.advantage;
        let gap = dp.mia.loss_gap;
        println!(
            "criterion 4: {}: advantage {:.4} vs baseline {:.4} (sep {:.4}), gap {:.4} vs {:.4}",
            dp.label,
            adv,
            base_adv,
            base_adv - adv,
            gap,
            base_gap
        );
        assert!(
            base_adv - adv >= MIN_ADVANTAGE_SEPARATION,
            "{}: advantage separation {:.4} < {MIN_ADVANTAGE_SEPARATION}",
            dp.label,
            base_adv - adv
        );
        assert!(
            base_gap >= MIN_GAP_RATIO * gap,
            "{}: baseline loss gap {base_gap:.4} is not {MIN_GAP_RATIO}x the DP gap {gap:.4}",
            dp.label
        );
    }

    println!(
        "criterion 4: sweep of {} configurations in {:?}",
        run.summary.configs.len(),
        run.sweep_wall
    );
    for cfg in &run.summary.configs {
        let wall = Duration::from_secs_f64(cfg.trace.wall_clock_seconds);
        assert!(
            wall <= PER_CONFIG_BUDGET,
            "{} trained for {wall:?} (budget {PER_CONFIG_BUDGET:?})",
            cfg.label
        );
    }
    let per_config = run.sweep_wall / run.summary.configs.len() as u32;
    assert!(
        per_config <= PER_CONFIG_BUDGET,
        "sweep averaged {per_config:?} per configuration (budget {PER_CONFIG_BUDGET:?})"
    );
}

#[test]
fn criterion_5_dp_advantages_plateau_within_a_narrow_band() {
    let run = desk_run();
    let advantages: Vec<f64> = dp_configs(&run.summary)
        .iter()
        .map(|c| c.mia.advantage)
        .collect();
    assert_eq!(advantages.len(), 3, "three DP budgets in the default sweep");
    let band = advantages.iter().cloned().fold(f64::MIN, f64::max)
        - advantages.iter().cloned().fold(f64::MAX, f64::min);
    println!("criterion 5: DP advantages {advantages:?}, band width {band:.4}");
    assert!(
        band <= MAX_PLATEAU_BAND,
        "DP advantages span {band:.4} (> {MAX_PLATEAU_BAND})"
    );
}

#[test]
fn criterion_6_regularization_direction_is_recorded_over_seeded_repetitions() {
    // Best-effort directional check, recorded but not hard-failing: after
    // light pretraining on general text and an overfitting fine-tune on
    // members, the DP model's general-corpus perplexity should not exceed
    // the baseline's in most repetitions. Runs at a reduced scale so five
    // repetitions stay cheap; the learning rate is raised to compensate for
    // the shorter schedule.
    let mut wins = 0usize;
    let mut comparisons = Vec::new();
    for rep in 0..REGULARIZATION_REPS {
        let seed = 100 + rep as u64;
        let spec = CorpusSpec {
            n_records: 130,
            n_members: 80,
            n_nonmembers: 50,
            n_general: 30,
            n_pretrain: 150,
            seed,
        };
        let bundle = generate_bundle(&spec).unwrap();
        let model_cfg = ModelConfig {
            d_model: 32,
            n_layers: 1,
            n_heads: 2,
            context_len: 128,
            seed: seed + 7,
        };
        let pretrain_cfg = TrainConfig {
            epochs: 8,
            batch_size: 16,
            learning_rate: 1e-3,
            optimizer: OptimizerKind::AdamW,
            weight_decay: 0.0,
            dp_enabled: false,
            clip: ClipConfig::unbounded(),
            noise: NoiseConfig {
                sigma: 0.0,
                seed: 0,
                delta: 1e-5,
            },
            seed: seed + 1,
            epsilon_target: None,
        };
        let (pretrained, _) = train(&model_cfg, &bundle.pretrain, &pretrain_cfg).unwrap();

        let baseline_cfg = TrainConfig {
            epochs: 10,
            batch_size: 8,
            learning_rate: 3e-4,
            seed: seed + 2,
            ..pretrain_cfg
        };
        let (baseline, _) =
            train_from(pretrained.clone(), &bundle.split.members, &baseline_cfg).unwrap();

        let sampling = SamplingConfig {
            q: 8.0 / 80.0,
            steps: 10 * (80 / 8),
        };
        let cal = calibrate_sigma(
            &PrivacySpec {
                epsilon: 8.0,
                delta: 1e-5,
            },
            &sampling,
        )
        .unwrap();
        let dp_cfg = TrainConfig {
            dp_enabled: true,
            clip: ClipConfig { max_grad_norm: 1.0 },
            noise: NoiseConfig {
                sigma: cal.sigma,
                seed: seed + 3,
                delta: 1e-5,
            },
            epsilon_target: Some(8.0),
            ..baseline_cfg
        };
        let (dp, _) = train_from(pretrained, &bundle.split.members, &dp_cfg).unwrap();

        let general = &bundle.general.sentences;
        let baseline_ppl = perplexity(&baseline, general).unwrap();
        let dp_ppl = perplexity(&dp, general).unwrap();
        assert!(baseline_ppl.is_finite() && dp_ppl.is_finite());
        if dp_ppl <= baseline_ppl {
            wins += 1;
        }
        comparisons.push((seed, dp_ppl, baseline_ppl));
        println!(
            "criterion 6: seed {seed}: DP general ppl {dp_ppl:.2} vs baseline {baseline_ppl:.2}"
        );
    }
    let majority = wins * 2 > REGULARIZATION_REPS;
    println!(
        "criterion 6: DP at-or-below baseline in {wins}/{REGULARIZATION_REPS} repetitions \
         (majority: {majority}); recorded, not hard-failing"
    );

    // The product report must surface the same comparison for the desk run:
    // each configuration's perplexity and its score against the reference.
    let run = desk_run();
    let report_text = std::fs::read_to_string(run.dir.join("sweep/report.json")).unwrap();
    let report: serde_json::Value = serde_json::from_str(&report_text).unwrap();
    let pareto = report["pareto"].as_array().unwrap();
    assert_eq!(pareto.len(), run.summary.configs.len());
    for point in pareto {
        assert!(point["utility_score"].as_f64().unwrap().is_finite());
    }
    let markdown = std::fs::read_to_string(run.dir.join("sweep/sweep_report.md")).unwrap();
    assert!(
        markdown.contains("general ppl"),
        "report omits the per-configuration perplexity column"
    );
    assert!(
        markdown.contains("non-private reference"),
        "report omits the reference-perplexity comparison"
    );
    for cfg in &run.summary.configs {
        assert!(markdown.contains(&cfg.label));
    }
    drop(comparisons);
}

#[test]
fn criterion_7_property_suites_hold() {
    fd_gradients_agree();
    clip_bound_holds_on_random_vectors();
    attack_sweep_matches_brute_force_oracle();
    untrained_model_attack_is_chance_level();
    accountant_is_monotone();
    feedback_loop_terminates_correctly_on_monotone_mocks();
}

fn fd_gradients_agree() {
    let cfg = ModelConfig {
        d_model: 8,
        n_layers: 1,
        n_heads: 2,
        context_len: 16,
        seed: 7,
    };
    let params = ModelParams::init(cfg).unwrap();
    let tokens = encode("Patient A, 42", 16);
    let set = per_sample_grads(&params, &[tokens.clone()], &[0]).unwrap();
    let analytic = &set.per_sample[0];

    let h = 1e-5;
    let mut checked = 0usize;
    for i in (0..params.len()).step_by(17) {
        let mut plus = params.clone();
        plus.data[i] += h;
        let mut minus = params.clone();
        minus.data[i] -= h;
        let numeric = (nll(&plus, &tokens).unwrap().1 - nll(&minus, &tokens).unwrap().1) / (2.0 * h);
        let excess =
            (analytic[i] - numeric).abs() / (FD_ATOL + FD_RTOL * analytic[i].abs().max(numeric.abs()));
        assert!(
            excess < 1.0,
            "parameter {i}: analytic {} vs numeric {numeric}",
            analytic[i]
        );
        if analytic[i].abs() > 1e-3 {
            let rel = (analytic[i] - numeric).abs() / analytic[i].abs();
            assert!(rel < FD_RTOL, "parameter {i}: relative error {rel:.2e}");
        }
        checked += 1;
    }
    println!("criterion 7: finite differences agree on {checked} sampled parameters");
}

fn clip_bound_holds_on_random_vectors() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..CLIP_VECTORS {
        let dim = rng.gen_range(1..=64);
        let c = rng.gen_range(0.01..4.0);
        let mut v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let pre_norm = clip_gradient(&mut v, c);
        let post_norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(pre_norm >= 0.0);
        assert!(
            post_norm <= c + 1e-12,
            "clipped norm {post_norm} exceeds bound {c}"
        );
        if pre_norm <= c {
            assert!((post_norm - pre_norm).abs() <= 1e-12, "small vector was rescaled");
        }
    }
    println!("criterion 7: clip bound held on {CLIP_VECTORS} random vectors");
}

/// Evaluate the attack at every candidate threshold (each loss value nudged
/// both ways, plus sentinels beyond the extremes) and return the best
/// balanced accuracy; brute force against which the sweep must match.
fn oracle_best_accuracy(samples: &[LossSample]) -> f64 {
    let mut candidates: Vec<f64> = Vec::new();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for s in samples {
        candidates.push(s.loss - 1e-9);
        candidates.push(s.loss + 1e-9);
        lo = lo.min(s.loss);
        hi = hi.max(s.loss);
    }
    candidates.push(lo - 1.0);
    candidates.push(hi + 1.0);

    let n_members = samples.iter().filter(|s| s.is_member).count() as f64;
    let n_non = samples.len() as f64 - n_members;
    let mut best = 0.0f64;
    for tau in candidates {
        let tp = samples.iter().filter(|s| s.is_member && s.loss < tau).count() as f64;
        let tn = samples.iter().filter(|s| !s.is_member && s.loss >= tau).count() as f64;
        best = best.max(0.5 * (tp / n_members + tn / n_non));
    }
    best
}

fn attack_sweep_matches_brute_force_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(4242);
    let mut instances = 0usize;
    for n_members in 1..=ORACLE_MAX_SAMPLES - 1 {
        for n_non in 1..=ORACLE_MAX_SAMPLES - n_members {
            for _ in 0..8 {
                // Losses on a coarse grid so ties occur often.
                let sample = |rng: &mut ChaCha8Rng, is_member: bool, id: usize| LossSample {
                    loss: 0.05 * rng.gen_range(0..40) as f64,
                    is_member,
                    source_id: id,
                };
                let mut samples: Vec<LossSample> = Vec::new();
                for i in 0..n_members {
                    samples.push(sample(&mut rng, true, i));
                }
                for i in 0..n_non {
                    samples.push(sample(&mut rng, false, n_members + i));
                }
                let result = threshold_attack(&samples).unwrap();
                let oracle = oracle_best_accuracy(&samples);
                assert!(
                    (result.accuracy - oracle).abs() < 1e-12,
                    "sweep {} vs oracle {oracle} on {samples:?}",
                    result.accuracy
                );
                // AUROC against the rank-statistic definition.
                let mut pairs = 0.0;
                let mut score = 0.0;
                for m in samples.iter().filter(|s| s.is_member) {
                    for n in samples.iter().filter(|s| !s.is_member) {
                        pairs += 1.0;
                        if m.loss < n.loss {
                            score += 1.0;
                        } else if m.loss == n.loss {
                            score += 0.5;
                        }
                    }
                }
                let reference = score / pairs;
                assert!(
                    (auroc(&samples).unwrap() - reference).abs() < 1e-12,
                    "auroc mismatch on {samples:?}"
                );
                instances += 1;
            }
        }
    }
    println!("criterion 7: attack matched the brute-force oracle on {instances} instances");
}

fn untrained_model_attack_is_chance_level() {
    let bundle = generate_bundle(&CorpusSpec::default()).unwrap();
    let params = ModelParams::init(ModelConfig::default()).unwrap();
    let samples = collect_losses(&params, &bundle.split.members, &bundle.split.nonmembers).unwrap();
    assert_eq!(samples.len(), 500);
    let value = auroc(&samples).unwrap();
    println!("criterion 7: untrained-model AUROC {value:.4}");
    assert!(
        (AUROC_CHANCE_BAND.0..=AUROC_CHANCE_BAND.1).contains(&value),
        "AUROC {value:.4} outside the chance band {AUROC_CHANCE_BAND:?}"
    );
}

fn accountant_is_monotone() {
    let delta = 1e-5;
    // More noise buys strictly more privacy.
    let mut last = f64::INFINITY;
    for sigma in [0.5, 0.7, 1.0, 2.0, 4.0] {
        let (eps, _) = epsilon_for_sigma(
            sigma,
            &SamplingConfig {
                q: 8.0 / 300.0,
                steps: 380,
            },
            delta,
        )
        .unwrap();
        assert!(eps < last, "epsilon not decreasing at sigma {sigma}");
        last = eps;
    }
    // More steps spend strictly more budget.
    let mut last = 0.0;
    for steps in [100, 380, 1000, 4000] {
        let (eps, _) = epsilon_for_sigma(
            1.0,
            &SamplingConfig {
                q: 8.0 / 300.0,
                steps,
            },
            delta,
        )
        .unwrap();
        assert!(eps > last, "epsilon not increasing at {steps} steps");
        last = eps;
    }
    // A larger sampling rate spends more budget.
    let mut last = 0.0;
    for q in [0.005, 8.0 / 300.0, 0.1, 0.5] {
        let (eps, _) = epsilon_for_sigma(1.0, &SamplingConfig { q, steps: 380 }, delta).unwrap();
        assert!(eps > last, "epsilon not increasing at q {q}");
        last = eps;
    }
    println!("criterion 7: accountant monotone in sigma, steps, and sampling rate");
}

fn feedback_loop_terminates_correctly_on_monotone_mocks() {
    let schedule = EpsilonSchedule::default();
    // Leakage grows with the budget, utility grows with the budget.
    let advantage = |eps: f64| 0.02 + 0.03 * (1.0 + eps).ln();
    let utility = |eps: f64| 80.0 + 10.0 * (1.0 + eps).ln();

    // Generous thresholds: accepted immediately.
    let outcome = audit_loop(&schedule, &Thresholds::new(0.5, 50.0), |eps| {
        Ok(ConfigEval {
            advantage: advantage(eps),
            utility: utility(eps),
        })
    })
    .unwrap();
    assert_eq!(outcome.verdict, Verdict::Accepted);

    // Satisfiable only at a smaller budget: the loop must walk down to it.
    let outcome = audit_loop(&schedule, &Thresholds::new(0.05, 50.0), |eps| {
        Ok(ConfigEval {
            advantage: advantage(eps),
            utility: utility(eps),
        })
    })
    .unwrap();
    assert_eq!(outcome.verdict, Verdict::Accepted);
    assert!(outcome.final_epsilon < schedule.initial);
    assert!(advantage(outcome.final_epsilon) <= 0.05 + 0.01);

    // Contradictory thresholds: must terminate infeasible, within budget.
    let outcome = audit_loop(&schedule, &Thresholds::new(0.01, 120.0), |eps| {
        Ok(ConfigEval {
            advantage: advantage(eps),
            utility: utility(eps),
        })
    })
    .unwrap();
    assert_eq!(outcome.verdict, Verdict::Infeasible);
    assert!(outcome.iterations.len() <= schedule.max_iterations);
    for it in &outcome.iterations {
        assert!(it.epsilon >= schedule.min && it.epsilon <= schedule.max);
    }
    println!("criterion 7: feedback loop terminated correctly on monotone evaluators");
}

#[test]
fn criterion_8_sweep_reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let out_a = tmp.path().join("a");
    let out_b = tmp.path().join("b");
    let cfg = serde_json::json!({
        "data": { "n_records": 40, "n_members": 24, "n_nonmembers": 16,
                   "n_general": 6, "n_pretrain": 30, "seed": 42 },
        "model": { "d_model": 16, "n_layers": 1, "n_heads": 2,
                    "context_len": 128, "seed": 42 },
        "pretrain": { "epochs": 4, "batch_size": 8, "learning_rate": 1e-3,
                       "optimizer": "adamw", "weight_decay": 0.0,
                       "data_seed": 1001, "noise_seed": 0 },
        "train": { "epochs": 3, "batch_size": 4, "learning_rate": 5e-4,
                    "optimizer": "adamw", "weight_decay": 0.0,
                    "data_seed": 1002, "noise_seed": 2003 },
        "privacy": { "delta": 1e-5, "clip_norm": 1.0, "epsilons": [8.0, 2.0] },
        "output_dir": out_a,
    });
    let cfg_path = tmp.path().join("config.json");
    std::fs::write(&cfg_path, serde_json::to_string(&cfg).unwrap()).unwrap();

    let sweep = |out: Option<&PathBuf>| {
        let mut command = Command::new(env!("CARGO_BIN_EXE_privgauge"));
        command
            .args(["sweep", "--config", cfg_path.to_str().unwrap()])
            .env_remove("PRIVGAUGE_OUTPUT_DIR");
        if let Some(dir) = out {
            command.args(["--out", dir.to_str().unwrap()]);
        }
        let result = command.output().unwrap();
        assert!(
            result.status.success(),
            "sweep failed: {}",
            String::from_utf8_lossy(&result.stderr)
        );
    };
    sweep(None);
    sweep(Some(&out_b));

    let csv_a = std::fs::read(out_a.join("sweep/pareto.csv")).unwrap();
    let csv_b = std::fs::read(out_b.join("sweep/pareto.csv")).unwrap();
    assert_eq!(csv_a, csv_b, "pareto.csv differs between identical invocations");

    let hashes = |dir: &PathBuf| -> Vec<String> {
        let text = std::fs::read_to_string(dir.join("sweep/sweep.json")).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        v["configs"]
            .as_array()
            .unwrap()
            .iter()
            .map(|c| c["model_sha256"].as_str().unwrap().to_string())
            .collect()
    };
    let hashes_a = hashes(&out_a);
    assert_eq!(hashes_a, hashes(&out_b), "model hashes differ between reruns");
    println!(
        "criterion 8: identical CSV ({} bytes) and model hashes {:?}",
        csv_a.len(),
        hashes_a
    );
}

/// End-to-end audit at the default desk thresholds (advantage ≤ 0.15,
/// utility ≥ 90): the default budget must be accepted on the first pass and
/// the stored report must round-trip through re-validation.
#[test]
fn desk_audit_accepts_at_default_thresholds() {
    let run = desk_run();
    let cfg = RunConfig {
        output_dir: run.dir.clone(),
        ..RunConfig::default()
    };
    let audit = cmd_audit(&cfg).unwrap();
    println!(
        "desk audit: verdict {:?} at epsilon {} after {} iteration(s)",
        audit.outcome.verdict,
        audit.outcome.final_epsilon,
        audit.outcome.iterations.len()
    );
    assert_eq!(audit.outcome.verdict, Verdict::Accepted);
    assert_eq!(verdict_exit_code(audit.outcome.verdict), 0);
    assert_eq!(audit.outcome.final_epsilon, 8.0);
    assert_eq!(audit.outcome.iterations.len(), 1);

    let report_path = run.dir.join("audit/audit_report.json");
    let verdict = privgauge_cli::cmd_report(&report_path, None).unwrap();
    assert_eq!(verdict, Verdict::Accepted);
}
