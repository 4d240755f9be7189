//! The attack against actual models: an untrained model must look like a
//! coin flip, and a model deliberately overfit on its members must leak.

use privgauge::corpus::{generate_bundle, CorpusSpec};
use privgauge::dp::{train_from, ClipConfig, NoiseConfig, OptimizerKind, TrainConfig};
use privgauge::lm::{ModelConfig, ModelParams};
use privgauge::mia::run_mia;

#[test]
fn random_init_model_attack_is_near_chance() {
    // Desk-scale split: 300 members vs 200 non-members drawn from the same
    // record distribution. A freshly initialized model has seen neither, so
    // AUROC must sit near 0.5.
    let spec = CorpusSpec {
        n_records: 500,
        n_members: 300,
        n_nonmembers: 200,
        n_general: 2,
        n_pretrain: 2,
        seed: 42,
    };
    let bundle = generate_bundle(&spec).unwrap();
    let params = ModelParams::init(ModelConfig::default()).unwrap();
    let result = run_mia(&params, &bundle.split.members, &bundle.split.nonmembers).unwrap();
    assert!(
        (result.auroc - 0.5).abs() <= 0.07,
        "random-init AUROC {} strays from chance",
        result.auroc
    );
    assert_eq!(result.n_members, 300);
    assert_eq!(result.n_nonmembers, 200);
    assert!(result.accuracy >= 0.5);
}

#[test]
fn overfit_model_leaks_membership() {
    let spec = CorpusSpec {
        n_records: 36,
        n_members: 20,
        n_nonmembers: 16,
        n_general: 2,
        n_pretrain: 2,
        seed: 7,
    };
    let bundle = generate_bundle(&spec).unwrap();
    let model_cfg = ModelConfig {
        d_model: 32,
        n_layers: 1,
        n_heads: 2,
        context_len: 128,
        seed: 3,
    };
    let cfg = TrainConfig {
        epochs: 30,
        batch_size: 4,
        learning_rate: 3e-3,
        optimizer: OptimizerKind::AdamW,
        weight_decay: 0.0,
        dp_enabled: false,
        clip: ClipConfig::unbounded(),
        noise: NoiseConfig::default(),
        seed: 11,
        epsilon_target: None,
    };
    let params = ModelParams::init(model_cfg).unwrap();
    let (trained, trace) = train_from(params, &bundle.split.members, &cfg).unwrap();
    assert!(
        trace.final_loss < trace.epoch_losses[0] * 0.6,
        "model failed to fit its members"
    );
    let result = run_mia(&trained, &bundle.split.members, &bundle.split.nonmembers).unwrap();
    assert!(
        result.advantage > 0.15,
        "overfit model should leak: advantage {}, auroc {}",
        result.advantage,
        result.auroc
    );
    assert!(result.loss_gap > 0.0, "members should score lower on average");
}
