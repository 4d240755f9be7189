//! Loss-threshold membership inference.
//!
//! The attacker sees per-example losses and predicts "member" when the loss
//! falls below a threshold. The attack sweeps every distinct decision
//! boundary, scores each by balanced accuracy, and reports the best, along
//! with the threshold-free AUROC and the mean member/non-member loss gap.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lm::{mean_nll, ModelParams};

/// One scored example.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossSample {
    pub loss: f64,
    pub is_member: bool,
    /// Index of the sentence in its corpus file; members and non-members
    /// share one global numbering (members first).
    pub source_id: usize,
}

/// Outcome of the threshold attack over one loss set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MiaResult {
    /// Mean non-member loss minus mean member loss.
    pub loss_gap: f64,
    /// Balanced accuracy of the best threshold: (TPR + TNR) / 2.
    pub accuracy: f64,
    /// Plain fraction-correct at the same threshold.
    pub raw_accuracy: f64,
    /// Balanced accuracy minus the 0.5 coin-flip baseline.
    pub advantage: f64,
    pub auroc: f64,
    pub best_threshold: f64,
    pub n_members: usize,
    pub n_nonmembers: usize,
}

/// Score both corpora under the model; members come first in the output.
pub fn collect_losses(
    params: &ModelParams,
    members: &[String],
    nonmembers: &[String],
) -> Result<Vec<LossSample>> {
    if members.is_empty() {
        return Err(Error::MissingClass("members"));
    }
    if nonmembers.is_empty() {
        return Err(Error::MissingClass("non-members"));
    }
    let member_losses: Vec<f64> = members
        .par_iter()
        .map(|s| mean_nll(params, s))
        .collect::<Result<_>>()?;
    let nonmember_losses: Vec<f64> = nonmembers
        .par_iter()
        .map(|s| mean_nll(params, s))
        .collect::<Result<_>>()?;
    let mut samples = Vec::with_capacity(members.len() + nonmembers.len());
    for (i, loss) in member_losses.into_iter().enumerate() {
        samples.push(LossSample {
            loss,
            is_member: true,
            source_id: i,
        });
    }
    for (i, loss) in nonmember_losses.into_iter().enumerate() {
        samples.push(LossSample {
            loss,
            is_member: false,
            source_id: members.len() + i,
        });
    }
    Ok(samples)
}

fn split_classes(samples: &[LossSample]) -> Result<(Vec<f64>, Vec<f64>)> {
    let members: Vec<f64> = samples
        .iter()
        .filter(|s| s.is_member)
        .map(|s| s.loss)
        .collect();
    let nonmembers: Vec<f64> = samples
        .iter()
        .filter(|s| !s.is_member)
        .map(|s| s.loss)
        .collect();
    if members.is_empty() {
        return Err(Error::MissingClass("members"));
    }
    if nonmembers.is_empty() {
        return Err(Error::MissingClass("non-members"));
    }
    Ok((members, nonmembers))
}

/// Mean non-member loss minus mean member loss. Positive values mean members
/// are scored more confidently, i.e. the model leaks membership.
pub fn loss_gap(samples: &[LossSample]) -> Result<f64> {
    let (members, nonmembers) = split_classes(samples)?;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    Ok(mean(&nonmembers) - mean(&members))
}

/// Pairwise AUROC of the rule "lower loss means member": the probability a
/// random member scores below a random non-member, counting ties as half.
pub fn auroc(samples: &[LossSample]) -> Result<f64> {
    let (members, nonmembers) = split_classes(samples)?;
    let mut wins = 0.0;
    for &m in &members {
        for &n in &nonmembers {
            if m < n {
                wins += 1.0;
            } else if m == n {
                wins += 0.5;
            }
        }
    }
    Ok(wins / (members.len() * nonmembers.len()) as f64)
}

/// Balanced accuracy of "predict member iff loss < threshold".
fn balanced_accuracy_at(members: &[f64], nonmembers: &[f64], threshold: f64) -> f64 {
    let tpr = members.iter().filter(|&&l| l < threshold).count() as f64 / members.len() as f64;
    let tnr =
        nonmembers.iter().filter(|&&l| l >= threshold).count() as f64 / nonmembers.len() as f64;
    (tpr + tnr) / 2.0
}

/// Sweep all decision boundaries and report the best threshold by balanced
/// accuracy (ties broken toward the smallest threshold).
pub fn threshold_attack(samples: &[LossSample]) -> Result<MiaResult> {
    let (members, nonmembers) = split_classes(samples)?;

    let mut sorted: Vec<f64> = members.iter().chain(nonmembers.iter()).copied().collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("losses must not be NaN"));
    sorted.dedup();

    // Candidate thresholds: one per constant piece of the accuracy curve —
    // below everything, between each adjacent pair, above everything. The
    // sentinels stay finite so results serialize cleanly.
    let mut candidates = Vec::with_capacity(sorted.len() + 1);
    candidates.push(sorted[0] - 1.0);
    for w in sorted.windows(2) {
        candidates.push((w[0] + w[1]) / 2.0);
    }
    candidates.push(sorted[sorted.len() - 1] + 1.0);

    let mut best_threshold = candidates[0];
    let mut best_acc = balanced_accuracy_at(&members, &nonmembers, candidates[0]);
    for &t in &candidates[1..] {
        let acc = balanced_accuracy_at(&members, &nonmembers, t);
        if acc > best_acc {
            best_acc = acc;
            best_threshold = t;
        }
    }

    let tp = members.iter().filter(|&&l| l < best_threshold).count();
    let tn = nonmembers.iter().filter(|&&l| l >= best_threshold).count();
    let raw_accuracy = (tp + tn) as f64 / (members.len() + nonmembers.len()) as f64;

    Ok(MiaResult {
        loss_gap: loss_gap(samples)?,
        accuracy: best_acc,
        raw_accuracy,
        advantage: best_acc - 0.5,
        auroc: auroc(samples)?,
        best_threshold,
        n_members: members.len(),
        n_nonmembers: nonmembers.len(),
    })
}

/// Score the corpora and run the full attack.
pub fn run_mia(
    params: &ModelParams,
    members: &[String],
    nonmembers: &[String],
) -> Result<MiaResult> {
    let samples = collect_losses(params, members, nonmembers)?;
    threshold_attack(&samples)
}
