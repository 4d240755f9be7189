//! Central finite-difference validation of the hand-written backward pass.
//!
//! Every parameter of a small model is perturbed by ±1e-5 and the numerical
//! derivative of the mean NLL is compared against the analytic gradient.
//!
//! The comparison is `|analytic - numeric| <= ATOL + RTOL * max(|a|, |n|)`:
//! a relative bound of 1e-4 wherever the gradient is meaningfully sized,
//! with an absolute floor just above the rounding noise of the central
//! difference itself (~eps * |loss| / h ~ 1e-10).

use privgauge::lm::{encode, nll, ModelConfig, ModelParams};

const RTOL: f64 = 1e-4;
const ATOL: f64 = 1e-9;

fn numerical_grad(params: &ModelParams, tokens: &[u32], i: usize, h: f64) -> f64 {
    let mut plus = params.clone();
    plus.data[i] += h;
    let mut minus = params.clone();
    minus.data[i] -= h;
    let f_plus = nll(&plus, tokens).unwrap().1;
    let f_minus = nll(&minus, tokens).unwrap().1;
    (f_plus - f_minus) / (2.0 * h)
}

/// How far outside the tolerance envelope a pair sits; anything < 1 passes.
fn excess(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (ATOL + RTOL * analytic.abs().max(numeric.abs()))
}

#[test]
fn analytic_gradients_match_finite_differences() {
    let cfg = ModelConfig {
        d_model: 8,
        n_layers: 1,
        n_heads: 2,
        context_len: 16,
        seed: 7,
    };
    let params = ModelParams::init(cfg).unwrap();
    let tokens = encode("Patient A, 42", 16);
    assert!(tokens.len() >= 4, "test sequence too short to be interesting");

    let set = privgauge::lm::per_sample_grads(&params, &[tokens.clone()], &[0]).unwrap();
    let analytic = &set.per_sample[0];
    assert_eq!(analytic.len(), params.len());

    let h = 1e-5;
    let mut worst = 0.0f64;
    let mut worst_idx = 0usize;
    let mut worst_large = 0.0f64;
    for i in 0..params.len() {
        let numeric = numerical_grad(&params, &tokens, i, h);
        let e = excess(analytic[i], numeric);
        if e > worst {
            worst = e;
            worst_idx = i;
        }
        // Where the gradient is comfortably above the noise floor the bound
        // must hold in purely relative terms.
        let mag = analytic[i].abs().max(numeric.abs());
        if mag > 1e-3 {
            worst_large = worst_large.max((analytic[i] - numeric).abs() / mag);
        }
    }
    let name = params
        .shapes()
        .iter()
        .find(|s| (s.offset..s.offset + s.len).contains(&worst_idx))
        .map(|s| s.name.clone())
        .unwrap_or_default();
    assert!(
        worst < 1.0,
        "worst tolerance excess {worst:.3e} at parameter {worst_idx} ({name})"
    );
    assert!(
        worst_large < RTOL,
        "relative error {worst_large:.3e} on large-gradient parameters"
    );
}

#[test]
fn finite_difference_check_holds_with_multiple_heads_and_layers() {
    // A second configuration exercises the cross-layer residual wiring.
    let cfg = ModelConfig {
        d_model: 8,
        n_layers: 2,
        n_heads: 4,
        context_len: 12,
        seed: 11,
    };
    let params = ModelParams::init(cfg).unwrap();
    let tokens = encode("abc def", 12);
    let set = privgauge::lm::per_sample_grads(&params, &[tokens.clone()], &[0]).unwrap();
    let analytic = &set.per_sample[0];

    let h = 1e-5;
    // Spot-check a deterministic stride of parameters to keep runtime modest;
    // the first test already sweeps an entire model exhaustively.
    let mut worst = 0.0f64;
    for i in (0..params.len()).step_by(7) {
        let numeric = numerical_grad(&params, &tokens, i, h);
        worst = worst.max(excess(analytic[i], numeric));
    }
    assert!(worst < 1.0, "worst tolerance excess {worst:.3e}");
}
