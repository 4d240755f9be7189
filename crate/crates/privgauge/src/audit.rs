//! The audit loop and its reporting surface.
//!
//! A configuration is judged on two axes: attack advantage (privacy) and a
//! perplexity-based utility score. The loop searches over privacy budgets by
//! halving epsilon when the attack is too strong and doubling it when utility
//! falls short, until both thresholds hold or the search provably cannot
//! succeed. Sweep results feed a Pareto analysis and a machine-readable
//! report with content fingerprints of everything that influenced it.

use std::collections::HashSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Acceptance thresholds for one audited configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// Largest tolerable attack advantage (balanced accuracy minus 0.5).
    pub max_advantage: f64,
    /// Smallest acceptable utility score (percent of the reference).
    pub min_utility: f64,
    /// Slack added to `max_advantage` before failing a run; absorbs attack
    /// noise at desk-scale sample counts.
    pub advantage_tolerance: f64,
}

impl Thresholds {
    pub fn new(max_advantage: f64, min_utility: f64) -> Self {
        Self {
            max_advantage,
            min_utility,
            advantage_tolerance: 0.01,
        }
    }
}

/// Utility of a model relative to a reference perplexity: 100 times
/// reference-over-model, so matching the reference scores 100 and lower
/// perplexity scores higher.
pub fn utility_score(ppl: f64, reference_ppl: f64) -> Result<f64> {
    for (name, v) in [("ppl", ppl), ("reference_ppl", reference_ppl)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "{name} must be positive and finite, got {v}"
            )));
        }
    }
    Ok(100.0 * reference_ppl / ppl)
}

/// Perplexities and the derived score for one model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UtilityResult {
    pub ppl: f64,
    pub reference_ppl: f64,
    pub score: f64,
}

impl UtilityResult {
    pub fn new(ppl: f64, reference_ppl: f64) -> Result<Self> {
        Ok(Self {
            ppl,
            reference_ppl,
            score: utility_score(ppl, reference_ppl)?,
        })
    }
}

/// Privacy acceptance check: the advantage may exceed the threshold by at
/// most the configured tolerance.
pub fn check_acceptable(advantage: f64, thresholds: &Thresholds) -> bool {
    advantage <= thresholds.max_advantage + thresholds.advantage_tolerance
}

/// Per-run verdict. The loop itself only ever ends `Accepted` or
/// `Infeasible`; single-configuration evaluations use the two failure
/// variants, privacy taking priority over utility.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Accepted,
    PrivacyFail,
    UtilityFail,
    Infeasible,
}

/// Judge one configuration against the thresholds (privacy first).
pub fn config_verdict(advantage: f64, utility: f64, thresholds: &Thresholds) -> Verdict {
    if !check_acceptable(advantage, thresholds) {
        Verdict::PrivacyFail
    } else if utility < thresholds.min_utility {
        Verdict::UtilityFail
    } else {
        Verdict::Accepted
    }
}

/// Search bounds for the loop's epsilon schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSchedule {
    pub initial: f64,
    pub min: f64,
    pub max: f64,
    pub max_iterations: usize,
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        Self {
            initial: 8.0,
            min: 0.05,
            max: 64.0,
            max_iterations: 12,
        }
    }
}

impl EpsilonSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.min > 0.0 && self.min <= self.initial && self.initial <= self.max) {
            return Err(Error::InvalidParameter(format!(
                "epsilon schedule must satisfy 0 < min <= initial <= max, got \
                 min={} initial={} max={}",
                self.min, self.initial, self.max
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter(
                "max_iterations must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// What one evaluation of a candidate epsilon reports back to the loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfigEval {
    pub advantage: f64,
    pub utility: f64,
}

/// One loop step, as recorded in the report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub index: usize,
    pub epsilon: f64,
    pub advantage: f64,
    pub utility: f64,
    pub privacy_ok: bool,
    pub utility_ok: bool,
}

/// Final state of a loop run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditOutcome {
    pub verdict: Verdict,
    /// Epsilon of the accepted configuration, or the last one evaluated.
    pub final_epsilon: f64,
    pub iterations: Vec<IterationRecord>,
}

/// Run the feedback loop: halve epsilon on privacy failure, double it on a
/// utility-only failure, accept when both checks hold.
///
/// The search declares infeasibility when the next epsilon would leave the
/// schedule's bounds, when it would revisit a value already tried (the
/// halve/double cycle detecting an empty gap between the thresholds), or when
/// the iteration budget runs out.
pub fn audit_loop<F>(
    schedule: &EpsilonSchedule,
    thresholds: &Thresholds,
    mut evaluate: F,
) -> Result<AuditOutcome>
where
    F: FnMut(f64) -> Result<ConfigEval>,
{
    schedule.validate()?;
    let mut epsilon = schedule.initial;
    let mut visited: HashSet<u64> = HashSet::new();
    let mut iterations = Vec::new();

    for index in 1..=schedule.max_iterations {
        visited.insert(epsilon.to_bits());
        let eval = evaluate(epsilon)?;
        let privacy_ok = check_acceptable(eval.advantage, thresholds);
        let utility_ok = eval.utility >= thresholds.min_utility;
        iterations.push(IterationRecord {
            index,
            epsilon,
            advantage: eval.advantage,
            utility: eval.utility,
            privacy_ok,
            utility_ok,
        });

        if privacy_ok && utility_ok {
            return Ok(AuditOutcome {
                verdict: Verdict::Accepted,
                final_epsilon: epsilon,
                iterations,
            });
        }
        // Privacy violations dominate: tightening the budget addresses them
        // even when utility also failed.
        let next = if !privacy_ok { epsilon * 0.5 } else { epsilon * 2.0 };
        let out_of_bounds = next < schedule.min || next > schedule.max;
        let revisited = visited.contains(&next.to_bits());
        if out_of_bounds || revisited || index == schedule.max_iterations {
            return Ok(AuditOutcome {
                verdict: Verdict::Infeasible,
                final_epsilon: epsilon,
                iterations,
            });
        }
        epsilon = next;
    }
    unreachable!("loop exits via accept, bounds, revisit, or iteration budget");
}

/// One configuration in privacy/utility space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoPoint {
    pub label: String,
    /// `None` marks a non-private configuration (unbounded epsilon).
    pub epsilon: Option<f64>,
    pub advantage: f64,
    pub utility_score: f64,
}

/// True iff `a` dominates `b`: no worse on both axes, strictly better on one.
fn dominates(a: &ParetoPoint, b: &ParetoPoint) -> bool {
    let no_worse = a.advantage <= b.advantage && a.utility_score >= b.utility_score;
    let strictly_better = a.advantage < b.advantage || a.utility_score > b.utility_score;
    no_worse && strictly_better
}

/// Frontier membership per point, in input order: true where no other point
/// dominates it.
pub fn pareto_frontier(points: &[ParetoPoint]) -> Vec<bool> {
    points
        .iter()
        .map(|p| !points.iter().any(|q| dominates(q, p)))
        .collect()
}

/// CSV rendering of a sweep: one row per point plus a frontier-membership
/// column. Non-private rows leave the epsilon cell empty.
pub fn emit_pareto_csv(points: &[ParetoPoint]) -> String {
    let frontier = pareto_frontier(points);
    let mut out = String::from("label,epsilon,advantage,utility_score,frontier\n");
    for (p, on) in points.iter().zip(&frontier) {
        let eps = p.epsilon.map(|e| e.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            p.label, eps, p.advantage, p.utility_score, on
        );
    }
    out
}

/// Hashes binding a report to its inputs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fingerprints {
    pub dataset_sha256: String,
    pub model_sha256: String,
    pub train_config_sha256: String,
}

/// The machine-readable audit report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    /// Budget the run was calibrated against; `None` for non-private runs.
    pub epsilon_target: Option<f64>,
    /// Privacy actually spent per the accountant; `None` when unbounded.
    pub epsilon_achieved: Option<f64>,
    pub delta: f64,
    /// Noise multiplier used in training (0 for non-private runs).
    pub sigma: f64,
    /// Per-sample clipping norm; `None` means unclipped.
    pub clip_norm: Option<f64>,
    /// Sampling rate the accountant charged (batch size over members).
    pub sample_rate: f64,
    /// Optimizer updates taken.
    pub steps: u64,
    pub advantage: f64,
    pub auroc: f64,
    pub ppl: f64,
    /// Non-private reference perplexity the utility score is normalized by.
    pub reference_ppl: f64,
    pub utility_score: f64,
    pub verdict: Verdict,
    pub thresholds: Thresholds,
    pub fingerprints: Fingerprints,
    /// Loop history; empty for single-configuration reports.
    pub iterations: Vec<IterationRecord>,
    /// Sweep points, when the report covers a sweep.
    pub pareto: Vec<ParetoPoint>,
}

impl AuditReport {
    /// The verdict must be re-derivable from the stored numbers: a report
    /// whose stored verdict disagrees with its own thresholds has been
    /// tampered with or mis-assembled.
    pub fn verdict_is_consistent(&self) -> bool {
        let recomputed = config_verdict(self.advantage, self.utility_score, &self.thresholds);
        match self.verdict {
            Verdict::Infeasible => recomputed != Verdict::Accepted,
            v => recomputed == v,
        }
    }
}

/// Serialize a report as pretty JSON (trailing newline included).
pub fn emit_report(report: &AuditReport) -> Result<String> {
    let mut s = serde_json::to_string_pretty(report)?;
    s.push('\n');
    Ok(s)
}

/// Parse a report produced by [`emit_report`].
pub fn parse_report(json: &str) -> Result<AuditReport> {
    Ok(serde_json::from_str(json)?)
}

fn fmt_opt_eps(eps: Option<f64>) -> String {
    eps.map(|e| format!("{e}")).unwrap_or_else(|| "-".into())
}

/// Human-readable Markdown rendering of the same report.
pub fn emit_report_markdown(report: &AuditReport) -> String {
    let mut md = String::new();
    let _ = writeln!(md, "# Privacy Audit Report\n");
    let _ = writeln!(md, "- **Verdict:** {}", verdict_str(report.verdict));
    let _ = writeln!(
        md,
        "- **Privacy spent:** epsilon = {} (target {}), delta = {}",
        fmt_opt_eps(report.epsilon_achieved),
        fmt_opt_eps(report.epsilon_target),
        report.delta
    );
    let _ = writeln!(
        md,
        "- **Mechanism:** sigma = {:.4}, clip = {}, sampling rate = {:.4}, steps = {}",
        report.sigma,
        report
            .clip_norm
            .map(|c| format!("{c}"))
            .unwrap_or_else(|| "unclipped".into()),
        report.sample_rate,
        report.steps
    );
    let _ = writeln!(
        md,
        "- **Attack:** advantage = {:.4}, AUROC = {:.4}",
        report.advantage, report.auroc
    );
    let _ = writeln!(
        md,
        "- **Utility:** perplexity = {:.2} vs non-private reference {:.2}, score = {:.1} (threshold {:.1})",
        report.ppl, report.reference_ppl, report.utility_score, report.thresholds.min_utility
    );
    let _ = writeln!(
        md,
        "- **Privacy threshold:** advantage <= {} (+{} tolerance)",
        report.thresholds.max_advantage, report.thresholds.advantage_tolerance
    );
    let _ = writeln!(md, "- **Dataset:** `{}`", report.fingerprints.dataset_sha256);
    let _ = writeln!(md, "- **Model:** `{}`", report.fingerprints.model_sha256);
    let _ = writeln!(
        md,
        "- **Train config:** `{}`",
        report.fingerprints.train_config_sha256
    );

    if !report.iterations.is_empty() {
        let _ = writeln!(md, "\n## Loop iterations\n");
        let _ = writeln!(md, "| # | epsilon | advantage | utility | privacy | utility ok |");
        let _ = writeln!(md, "|---|---------|-----------|---------|---------|------------|");
        for it in &report.iterations {
            let _ = writeln!(
                md,
                "| {} | {} | {:.4} | {:.1} | {} | {} |",
                it.index,
                it.epsilon,
                it.advantage,
                it.utility,
                if it.privacy_ok { "ok" } else { "fail" },
                if it.utility_ok { "ok" } else { "fail" },
            );
        }
    }

    if !report.pareto.is_empty() {
        let frontier = pareto_frontier(&report.pareto);
        let _ = writeln!(md, "\n## Privacy-utility sweep\n");
        let _ = writeln!(
            md,
            "| config | epsilon | advantage | utility | general ppl | frontier |"
        );
        let _ = writeln!(
            md,
            "|--------|---------|-----------|---------|-------------|----------|"
        );
        for (p, on) in report.pareto.iter().zip(&frontier) {
            // Invert the score so each row shows its general-corpus
            // perplexity next to the non-private reference (score 100).
            let ppl = 100.0 * report.reference_ppl / p.utility_score;
            let _ = writeln!(
                md,
                "| {} | {} | {:.4} | {:.1} | {:.2} | {} |",
                p.label,
                fmt_opt_eps(p.epsilon),
                p.advantage,
                p.utility_score,
                ppl,
                if *on { "yes" } else { "" },
            );
        }
    }
    md
}

fn verdict_str(v: Verdict) -> &'static str {
    match v {
        Verdict::Accepted => "accepted",
        Verdict::PrivacyFail => "privacy_fail",
        Verdict::UtilityFail => "utility_fail",
        Verdict::Infeasible => "infeasible",
    }
}
