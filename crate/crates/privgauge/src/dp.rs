//! Differentially private SGD: per-example clipping, Gaussian noise on the
//! summed gradient, a Laplace mechanism for scalar releases, and the training
//! loop that ties them to the language model.
//!
//! The only way to obtain a gradient the optimizer will accept is
//! [`privatize_batch`], which clips, sums, noises, and averages. Non-private
//! training goes through the same gate with `sigma = 0` and an unbounded clip
//! norm, which reduces exactly to the plain mean gradient.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::accountant::{epsilon_for_sigma, SamplingConfig};
use crate::error::{Error, Result};
use crate::lm::{encode, per_sample_grads, ModelConfig, ModelParams};

/// Per-example gradient clipping bound. `f64::INFINITY` disables clipping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClipConfig {
    pub max_grad_norm: f64,
}

impl ClipConfig {
    pub fn unbounded() -> Self {
        Self {
            max_grad_norm: f64::INFINITY,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_grad_norm <= 0.0 || self.max_grad_norm.is_nan() {
            return Err(Error::InvalidParameter(format!(
                "max_grad_norm must be positive, got {}",
                self.max_grad_norm
            )));
        }
        Ok(())
    }
}

/// Gaussian noise applied to the clipped gradient sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    /// Noise multiplier; the per-coordinate stddev on the sum is
    /// `sigma * max_grad_norm`.
    pub sigma: f64,
    /// Seed for the noise stream, independent of data shuffling.
    pub seed: u64,
    /// Failure probability the privacy guarantee is quoted at.
    pub delta: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            sigma: 0.0,
            seed: 1,
            delta: 1e-5,
        }
    }
}

impl NoiseConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "sigma must be finite and non-negative, got {}",
                self.sigma
            )));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "delta must lie in (0, 1), got {}",
                self.delta
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    AdamW,
}

/// Full training recipe for one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub optimizer: OptimizerKind,
    pub weight_decay: f64,
    /// When false the clip/noise settings are ignored and the update is the
    /// exact mean gradient.
    pub dp_enabled: bool,
    pub clip: ClipConfig,
    pub noise: NoiseConfig,
    /// Seed for example shuffling, independent of the noise seed.
    pub seed: u64,
    /// Privacy budget this run was calibrated for, if any; recorded in the
    /// trace for provenance, not used by the loop itself.
    pub epsilon_target: Option<f64>,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidParameter("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidParameter(
                "batch_size must be at least 1".into(),
            ));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "learning_rate must be positive and finite, got {}",
                self.learning_rate
            )));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "weight_decay must be non-negative, got {}",
                self.weight_decay
            )));
        }
        self.clip.validate()?;
        self.noise.validate()?;
        if self.dp_enabled && self.noise.sigma > 0.0 && !self.clip.max_grad_norm.is_finite() {
            return Err(Error::InvalidParameter(
                "noisy training requires a finite clip norm".into(),
            ));
        }
        Ok(())
    }
}

/// Everything a run discloses about itself: losses, realized privacy
/// parameters, seeds, and timing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainTrace {
    pub epoch_losses: Vec<f64>,
    pub final_loss: f64,
    pub steps: u64,
    pub n_samples: usize,
    pub batch_size: usize,
    pub sample_rate: f64,
    pub learning_rate: f64,
    pub optimizer: OptimizerKind,
    pub weight_decay: f64,
    pub dp_enabled: bool,
    /// `None` means unclipped.
    pub clip_norm: Option<f64>,
    pub sigma: f64,
    pub delta: f64,
    /// Budget the noise was calibrated against, when known.
    pub epsilon_target: Option<f64>,
    /// Privacy actually spent according to the accountant; `None` when the
    /// run provides no bound (no noise).
    pub epsilon_achieved: Option<f64>,
    pub optimal_order: Option<f64>,
    pub data_seed: u64,
    pub noise_seed: u64,
    pub wall_clock_seconds: f64,
}

/// Scale a gradient in place to `min(1, c / ||g||)` of itself; returns the
/// pre-clip L2 norm.
pub fn clip_gradient(grad: &mut [f64], max_grad_norm: f64) -> f64 {
    let norm = l2_norm(grad);
    if norm > max_grad_norm {
        let scale = max_grad_norm / norm;
        for g in grad.iter_mut() {
            *g *= scale;
        }
    }
    norm
}

fn l2_norm(v: &[f64]) -> f64 {
    let mut sum = 0.0;
    for &x in v {
        sum += x * x;
    }
    sum.sqrt()
}

/// A gradient that has passed through the clip/noise/average gate. The field
/// is private: the optimizer only accepts this type, so every update is
/// forced through [`privatize_batch`].
#[derive(Debug, Clone)]
pub struct PrivatizedGradient {
    values: Vec<f64>,
}

impl PrivatizedGradient {
    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Clip each per-example gradient, sum, add `N(0, sigma^2 c^2)` noise per
/// coordinate, and divide by the batch size.
///
/// With `sigma = 0` no noise stream is consumed and the result is the exact
/// mean of the clipped gradients.
pub fn privatize_batch(
    per_sample: &[Vec<f64>],
    clip: &ClipConfig,
    noise: &NoiseConfig,
    rng: &mut ChaCha8Rng,
) -> Result<PrivatizedGradient> {
    clip.validate()?;
    noise.validate()?;
    if per_sample.is_empty() {
        return Err(Error::EmptyInput("privatize_batch"));
    }
    let dim = per_sample[0].len();
    if per_sample.iter().any(|g| g.len() != dim) {
        return Err(Error::SizeMismatch {
            expected: dim,
            actual: per_sample.iter().map(Vec::len).find(|&l| l != dim).unwrap_or(dim),
            context: "per-sample gradient lengths",
        });
    }
    if noise.sigma > 0.0 && !clip.max_grad_norm.is_finite() {
        return Err(Error::InvalidParameter(
            "cannot add noise calibrated to an unbounded clip norm".into(),
        ));
    }

    let c = clip.max_grad_norm;
    let mut sum = vec![0.0; dim];
    for grad in per_sample {
        let norm = l2_norm(grad);
        let scale = if norm > c { c / norm } else { 1.0 };
        for (s, &g) in sum.iter_mut().zip(grad) {
            *s += scale * g;
        }
    }
    if noise.sigma > 0.0 {
        let noise_scale = noise.sigma * c;
        for s in sum.iter_mut() {
            let z: f64 = StandardNormal.sample(rng);
            *s += noise_scale * z;
        }
    }
    let inv_b = 1.0 / per_sample.len() as f64;
    for s in sum.iter_mut() {
        *s *= inv_b;
    }
    Ok(PrivatizedGradient { values: sum })
}

/// Laplace noise scale for a release: sensitivity / epsilon.
pub fn laplace_scale(sensitivity: f64, epsilon: f64) -> Result<f64> {
    if !(sensitivity >= 0.0 && sensitivity.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "sensitivity must be finite and non-negative, got {sensitivity}"
        )));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must be positive and finite, got {epsilon}"
        )));
    }
    Ok(sensitivity / epsilon)
}

/// Release a scalar with Laplace noise of scale sensitivity/epsilon, via
/// inverse-CDF sampling.
pub fn laplace_mechanism(
    value: f64,
    sensitivity: f64,
    epsilon: f64,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let b = laplace_scale(sensitivity, epsilon)?;
    let u: f64 = rng.gen::<f64>() - 0.5;
    let noise = -b * u.signum() * (1.0 - 2.0 * u.abs()).ln();
    Ok(value + noise)
}

/// First-order optimizer over the flat parameter vector. Only privatized
/// gradients are accepted.
#[derive(Debug, Clone)]
pub struct Optimizer {
    kind: OptimizerKind,
    weight_decay: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

impl Optimizer {
    pub fn new(kind: OptimizerKind, dim: usize, weight_decay: f64) -> Self {
        let state_dim = match kind {
            OptimizerKind::Sgd => 0,
            OptimizerKind::AdamW => dim,
        };
        Self {
            kind,
            weight_decay,
            m: vec![0.0; state_dim],
            v: vec![0.0; state_dim],
            t: 0,
        }
    }

    /// Apply one update. Weight decay is decoupled: parameters shrink by
    /// `lr * weight_decay` independently of the gradient term.
    pub fn step(&mut self, params: &mut [f64], grad: &PrivatizedGradient, lr: f64) {
        debug_assert_eq!(params.len(), grad.len());
        let g = grad.as_slice();
        if self.weight_decay > 0.0 {
            let shrink = 1.0 - lr * self.weight_decay;
            for p in params.iter_mut() {
                *p *= shrink;
            }
        }
        match self.kind {
            OptimizerKind::Sgd => {
                for (p, &gi) in params.iter_mut().zip(g) {
                    *p -= lr * gi;
                }
            }
            OptimizerKind::AdamW => {
                self.t += 1;
                let bc1 = 1.0 - ADAM_BETA1.powi(self.t as i32);
                let bc2 = 1.0 - ADAM_BETA2.powi(self.t as i32);
                for i in 0..params.len() {
                    let gi = g[i];
                    self.m[i] = ADAM_BETA1 * self.m[i] + (1.0 - ADAM_BETA1) * gi;
                    self.v[i] = ADAM_BETA2 * self.v[i] + (1.0 - ADAM_BETA2) * gi * gi;
                    let mhat = self.m[i] / bc1;
                    let vhat = self.v[i] / bc2;
                    params[i] -= lr * mhat / (vhat.sqrt() + ADAM_EPS);
                }
            }
        }
    }
}

/// Train a freshly initialized model on `corpus`.
pub fn train(
    model_config: &ModelConfig,
    corpus: &[String],
    cfg: &TrainConfig,
) -> Result<(ModelParams, TrainTrace)> {
    let params = ModelParams::init(*model_config)?;
    train_from(params, corpus, cfg)
}

/// Continue training from existing parameters (e.g. fine-tuning a
/// pre-trained model under DP).
pub fn train_from(
    mut params: ModelParams,
    corpus: &[String],
    cfg: &TrainConfig,
) -> Result<(ModelParams, TrainTrace)> {
    cfg.validate()?;
    if corpus.is_empty() {
        return Err(Error::EmptyInput("training corpus"));
    }
    let start = Instant::now();
    let n = corpus.len();
    let context_len = params.config.context_len;
    let encoded: Vec<Vec<u32>> = corpus.iter().map(|s| encode(s, context_len)).collect();

    // Effective clip/noise: the non-private path is the same gate with
    // sigma = 0 and no clipping.
    let (clip, noise) = if cfg.dp_enabled {
        (cfg.clip, cfg.noise)
    } else {
        (
            ClipConfig::unbounded(),
            NoiseConfig {
                sigma: 0.0,
                ..cfg.noise
            },
        )
    };

    let mut data_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut noise_rng = ChaCha8Rng::seed_from_u64(noise.seed);
    let mut optimizer = Optimizer::new(cfg.optimizer, params.len(), cfg.weight_decay);

    let steps_per_epoch = n.div_ceil(cfg.batch_size);
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    let mut indices: Vec<usize> = (0..n).collect();
    for _ in 0..cfg.epochs {
        shuffle(&mut indices, &mut data_rng);
        let mut loss_sum = 0.0;
        for chunk in indices.chunks(cfg.batch_size) {
            let seqs: Vec<Vec<u32>> = chunk.iter().map(|&i| encoded[i].clone()).collect();
            let grads = per_sample_grads(&params, &seqs, chunk)?;
            loss_sum += grads.losses.iter().sum::<f64>();
            let update = privatize_batch(&grads.per_sample, &clip, &noise, &mut noise_rng)?;
            optimizer.step(&mut params.data, &update, cfg.learning_rate);
        }
        epoch_losses.push(loss_sum / n as f64);
    }

    let steps = (steps_per_epoch * cfg.epochs) as u64;
    let sample_rate = (cfg.batch_size as f64 / n as f64).min(1.0);
    let (epsilon_achieved, optimal_order) = if cfg.dp_enabled && noise.sigma > 0.0 {
        let sampling = SamplingConfig {
            q: sample_rate,
            steps,
        };
        let (eps, order) = epsilon_for_sigma(noise.sigma, &sampling, noise.delta)?;
        (Some(eps), Some(order))
    } else {
        (None, None)
    };

    let trace = TrainTrace {
        final_loss: *epoch_losses.last().expect("at least one epoch"),
        epoch_losses,
        steps,
        n_samples: n,
        batch_size: cfg.batch_size,
        sample_rate,
        learning_rate: cfg.learning_rate,
        optimizer: cfg.optimizer,
        weight_decay: cfg.weight_decay,
        dp_enabled: cfg.dp_enabled,
        clip_norm: clip.max_grad_norm.is_finite().then_some(clip.max_grad_norm),
        sigma: noise.sigma,
        delta: noise.delta,
        epsilon_target: cfg.epsilon_target,
        epsilon_achieved,
        optimal_order,
        data_seed: cfg.seed,
        noise_seed: noise.seed,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    };
    Ok((params, trace))
}

/// Fisher-Yates shuffle driven by the given rng (kept explicit so the data
/// order consumes a predictable number of rng draws).
fn shuffle(indices: &mut [usize], rng: &mut ChaCha8Rng) {
    for i in (1..indices.len()).rev() {
        let j = rng.gen_range(0..=i);
        indices.swap(i, j);
    }
}
