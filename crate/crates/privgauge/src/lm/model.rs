//! Forward pass, hand-written backward pass, and loss/perplexity evaluation.
//!
//! Everything operates on flat `f64` slices with explicit shapes. Inner loops
//! are written as stride-1 accumulations so the optimizer can vectorize them;
//! reductions use a fixed operation order so results are bit-reproducible
//! across runs and across worker counts.

use rayon::prelude::*;
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::lm::{encode, BlockIndex, ModelParams, Span, VOCAB_SIZE};

const LN_EPS: f64 = 1e-5;
const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal CDF, used by the exact (erf-based) GELU.
fn phi(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

fn gelu(x: f64) -> f64 {
    x * phi(x)
}

fn gelu_grad(x: f64) -> f64 {
    phi(x) + x * FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Dot product with four independent accumulators. The split keeps a fixed
/// summation order (deterministic) while breaking the serial dependency chain.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let n = a.len();
    let chunks = n / 4 * 4;
    let (mut s0, mut s1, mut s2, mut s3) = (0.0, 0.0, 0.0, 0.0);
    let mut i = 0;
    while i < chunks {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
        i += 4;
    }
    let mut tail = 0.0;
    while i < n {
        tail += a[i] * b[i];
        i += 1;
    }
    ((s0 + s1) + (s2 + s3)) + tail
}

/// y += a * x over equal-length slices.
fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    debug_assert_eq!(y.len(), x.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// out = x @ w + bias for row-major x [m,k], w [k,n]; out is overwritten.
fn linear_forward(x: &[f64], w: &[f64], bias: &[f64], m: usize, k: usize, n: usize, out: &mut [f64]) {
    debug_assert_eq!(out.len(), m * n);
    for t in 0..m {
        let out_row = &mut out[t * n..(t + 1) * n];
        out_row.copy_from_slice(bias);
        let x_row = &x[t * k..(t + 1) * k];
        for (i, &xv) in x_row.iter().enumerate() {
            axpy(out_row, xv, &w[i * n..(i + 1) * n]);
        }
    }
}

/// Accumulate gradients through out = x @ w + bias.
///
/// dw and db are accumulated; dx is accumulated as well, so the caller zeroes
/// it when this is the only contribution.
fn linear_backward(
    x: &[f64],
    w: &[f64],
    dy: &[f64],
    m: usize,
    k: usize,
    n: usize,
    dw: &mut [f64],
    db: &mut [f64],
    dx: &mut [f64],
) {
    for t in 0..m {
        let dy_row = &dy[t * n..(t + 1) * n];
        let x_row = &x[t * k..(t + 1) * k];
        for (j, &dyv) in dy_row.iter().enumerate() {
            db[j] += dyv;
        }
        for i in 0..k {
            axpy(&mut dw[i * n..(i + 1) * n], x_row[i], dy_row);
        }
        let dx_row = &mut dx[t * k..(t + 1) * k];
        for i in 0..k {
            dx_row[i] += dot(dy_row, &w[i * n..(i + 1) * n]);
        }
    }
}

/// Row-wise layer norm; returns per-row mean and reciprocal stddev for the
/// backward pass.
fn layer_norm(
    x: &[f64],
    gamma: &[f64],
    beta: &[f64],
    rows: usize,
    d: usize,
    out: &mut [f64],
    mean: &mut Vec<f64>,
    rstd: &mut Vec<f64>,
) {
    mean.clear();
    rstd.clear();
    for t in 0..rows {
        let row = &x[t * d..(t + 1) * d];
        let mut m = 0.0;
        for &v in row {
            m += v;
        }
        m /= d as f64;
        let mut var = 0.0;
        for &v in row {
            let c = v - m;
            var += c * c;
        }
        var /= d as f64;
        let r = 1.0 / (var + LN_EPS).sqrt();
        mean.push(m);
        rstd.push(r);
        let out_row = &mut out[t * d..(t + 1) * d];
        for i in 0..d {
            out_row[i] = gamma[i] * ((row[i] - m) * r) + beta[i];
        }
    }
}

/// Backward through layer norm; dgamma/dbeta/dx all accumulate.
#[allow(clippy::too_many_arguments)]
fn layer_norm_backward(
    dy: &[f64],
    x: &[f64],
    gamma: &[f64],
    mean: &[f64],
    rstd: &[f64],
    rows: usize,
    d: usize,
    dgamma: &mut [f64],
    dbeta: &mut [f64],
    dx: &mut [f64],
) {
    for t in 0..rows {
        let dy_row = &dy[t * d..(t + 1) * d];
        let x_row = &x[t * d..(t + 1) * d];
        let (m, r) = (mean[t], rstd[t]);
        let mut sum_g = 0.0;
        let mut sum_gx = 0.0;
        for i in 0..d {
            let xhat = (x_row[i] - m) * r;
            let g = gamma[i] * dy_row[i];
            dgamma[i] += dy_row[i] * xhat;
            dbeta[i] += dy_row[i];
            sum_g += g;
            sum_gx += g * xhat;
        }
        let mean_g = sum_g / d as f64;
        let mean_gx = sum_gx / d as f64;
        let dx_row = &mut dx[t * d..(t + 1) * d];
        for i in 0..d {
            let xhat = (x_row[i] - m) * r;
            let g = gamma[i] * dy_row[i];
            dx_row[i] += r * (g - mean_g - xhat * mean_gx);
        }
    }
}

/// Cross-entropy of one logit row against a target index: logsumexp minus the
/// target logit.
pub fn nll_from_logits(logits: &[f64], target: usize) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for &v in logits {
        sum += (v - max).exp();
    }
    max + sum.ln() - logits[target]
}

struct BlockCache {
    x_in: Vec<f64>,
    ln1_mean: Vec<f64>,
    ln1_rstd: Vec<f64>,
    a1: Vec<f64>,
    q: Vec<f64>,
    k: Vec<f64>,
    v: Vec<f64>,
    /// Attention weights, [n_heads, n_t, n_t]; entries above the diagonal
    /// stay zero (causal mask).
    att: Vec<f64>,
    ctx: Vec<f64>,
    x_mid: Vec<f64>,
    ln2_mean: Vec<f64>,
    ln2_rstd: Vec<f64>,
    a2: Vec<f64>,
    fc_pre: Vec<f64>,
    fc_act: Vec<f64>,
}

struct Cache {
    n_t: usize,
    n_pred: usize,
    blocks: Vec<BlockCache>,
    h_last: Vec<f64>,
    lnf_mean: Vec<f64>,
    lnf_rstd: Vec<f64>,
    hf: Vec<f64>,
    /// Softmax rows for each predicted position, [n_pred, VOCAB_SIZE].
    probs: Vec<f64>,
    per_token_nll: Vec<f64>,
    mean_nll: f64,
}

fn validate_tokens(params: &ModelParams, tokens: &[u32]) -> Result<()> {
    if tokens.len() < 2 {
        return Err(Error::SequenceTooShort(tokens.len()));
    }
    if tokens.len() > params.config.context_len {
        return Err(Error::InvalidParameter(format!(
            "sequence length {} exceeds context_len {}",
            tokens.len(),
            params.config.context_len
        )));
    }
    if let Some(&bad) = tokens.iter().find(|&&t| t as usize >= VOCAB_SIZE) {
        return Err(Error::InvalidParameter(format!(
            "token {bad} is outside the vocabulary (size {VOCAB_SIZE})"
        )));
    }
    Ok(())
}

fn forward(params: &ModelParams, tokens: &[u32]) -> Result<Cache> {
    validate_tokens(params, tokens)?;
    let cfg = &params.config;
    let idx = &params.index;
    let data = &params.data;
    let d = cfg.d_model;
    let f = cfg.d_ff();
    let n_heads = cfg.n_heads;
    let hd = d / n_heads;
    let inv_sqrt_hd = 1.0 / (hd as f64).sqrt();
    let n_t = tokens.len();
    let n_pred = n_t - 1;

    // Token + positional embeddings.
    let tok_emb = idx.tok_emb.of(data);
    let pos_emb = idx.pos_emb.of(data);
    let mut x = vec![0.0; n_t * d];
    for (t, &tok) in tokens.iter().enumerate() {
        let row = &mut x[t * d..(t + 1) * d];
        let te = &tok_emb[tok as usize * d..(tok as usize + 1) * d];
        let pe = &pos_emb[t * d..(t + 1) * d];
        for i in 0..d {
            row[i] = te[i] + pe[i];
        }
    }

    let mut blocks = Vec::with_capacity(cfg.n_layers);
    for block in &idx.blocks {
        let mut c = BlockCache {
            x_in: x,
            ln1_mean: Vec::new(),
            ln1_rstd: Vec::new(),
            a1: vec![0.0; n_t * d],
            q: vec![0.0; n_t * d],
            k: vec![0.0; n_t * d],
            v: vec![0.0; n_t * d],
            att: vec![0.0; n_heads * n_t * n_t],
            ctx: vec![0.0; n_t * d],
            x_mid: vec![0.0; n_t * d],
            ln2_mean: Vec::new(),
            ln2_rstd: Vec::new(),
            a2: vec![0.0; n_t * d],
            fc_pre: vec![0.0; n_t * f],
            fc_act: vec![0.0; n_t * f],
        };

        layer_norm(
            &c.x_in,
            block.ln1_gamma.of(data),
            block.ln1_beta.of(data),
            n_t,
            d,
            &mut c.a1,
            &mut c.ln1_mean,
            &mut c.ln1_rstd,
        );
        linear_forward(&c.a1, block.wq.of(data), block.bq.of(data), n_t, d, d, &mut c.q);
        linear_forward(&c.a1, block.wk.of(data), block.bk.of(data), n_t, d, d, &mut c.k);
        linear_forward(&c.a1, block.wv.of(data), block.bv.of(data), n_t, d, d, &mut c.v);

        // Causal multi-head attention.
        for h in 0..n_heads {
            let col = h * hd;
            for t in 0..n_t {
                let q_row = &c.q[t * d + col..t * d + col + hd];
                let att_row = &mut c.att[h * n_t * n_t + t * n_t..h * n_t * n_t + t * n_t + n_t];
                let mut row_max = f64::NEG_INFINITY;
                for u in 0..=t {
                    let s = dot(q_row, &c.k[u * d + col..u * d + col + hd]) * inv_sqrt_hd;
                    att_row[u] = s;
                    row_max = row_max.max(s);
                }
                let mut denom = 0.0;
                for item in att_row.iter_mut().take(t + 1) {
                    *item = (*item - row_max).exp();
                    denom += *item;
                }
                for item in att_row.iter_mut().take(t + 1) {
                    *item /= denom;
                }
                let (head_ctx, v_slice) = (t * d + col, &c.v);
                let ctx_row = &mut c.ctx[head_ctx..head_ctx + hd];
                for u in 0..=t {
                    axpy(ctx_row, att_row[u], &v_slice[u * d + col..u * d + col + hd]);
                }
            }
        }

        // Attention output projection + residual.
        linear_forward(&c.ctx, block.wo.of(data), block.bo.of(data), n_t, d, d, &mut c.x_mid);
        for (xm, xi) in c.x_mid.iter_mut().zip(&c.x_in) {
            *xm += xi;
        }

        // Feed-forward + residual.
        layer_norm(
            &c.x_mid,
            block.ln2_gamma.of(data),
            block.ln2_beta.of(data),
            n_t,
            d,
            &mut c.a2,
            &mut c.ln2_mean,
            &mut c.ln2_rstd,
        );
        linear_forward(&c.a2, block.wfc.of(data), block.bfc.of(data), n_t, d, f, &mut c.fc_pre);
        for (act, &pre) in c.fc_act.iter_mut().zip(&c.fc_pre) {
            *act = gelu(pre);
        }
        let mut x_out = vec![0.0; n_t * d];
        linear_forward(&c.fc_act, block.wproj.of(data), block.bproj.of(data), n_t, f, d, &mut x_out);
        for (xo, xm) in x_out.iter_mut().zip(&c.x_mid) {
            *xo += xm;
        }
        blocks.push(c);
        x = x_out;
    }

    // Final norm, output head, and per-position cross-entropy.
    let h_last = x;
    let mut hf = vec![0.0; n_t * d];
    let mut lnf_mean = Vec::new();
    let mut lnf_rstd = Vec::new();
    layer_norm(
        &h_last,
        idx.lnf_gamma.of(data),
        idx.lnf_beta.of(data),
        n_t,
        d,
        &mut hf,
        &mut lnf_mean,
        &mut lnf_rstd,
    );

    let head_w = idx.head_w.of(data);
    let head_b = idx.head_b.of(data);
    let mut probs = vec![0.0; n_pred * VOCAB_SIZE];
    let mut per_token_nll = Vec::with_capacity(n_pred);
    let mut logits = vec![0.0; VOCAB_SIZE];
    for t in 0..n_pred {
        logits.copy_from_slice(head_b);
        let hf_row = &hf[t * d..(t + 1) * d];
        for (i, &hv) in hf_row.iter().enumerate() {
            axpy(&mut logits, hv, &head_w[i * VOCAB_SIZE..(i + 1) * VOCAB_SIZE]);
        }
        let target = tokens[t + 1] as usize;
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut denom = 0.0;
        let p_row = &mut probs[t * VOCAB_SIZE..(t + 1) * VOCAB_SIZE];
        for (pv, &lv) in p_row.iter_mut().zip(logits.iter()) {
            *pv = (lv - max).exp();
            denom += *pv;
        }
        for pv in p_row.iter_mut() {
            *pv /= denom;
        }
        per_token_nll.push(max + denom.ln() - logits[target]);
    }
    let mean_nll = per_token_nll.iter().sum::<f64>() / n_pred as f64;

    Ok(Cache {
        n_t,
        n_pred,
        blocks,
        h_last,
        lnf_mean,
        lnf_rstd,
        hf,
        probs,
        per_token_nll,
        mean_nll,
    })
}

fn backward(params: &ModelParams, tokens: &[u32], cache: &Cache, grad: &mut [f64]) {
    let cfg = &params.config;
    let idx = &params.index;
    let data = &params.data;
    let d = cfg.d_model;
    let f = cfg.d_ff();
    let n_heads = cfg.n_heads;
    let hd = d / n_heads;
    let inv_sqrt_hd = 1.0 / (hd as f64).sqrt();
    let n_t = cache.n_t;
    let n_pred = cache.n_pred;
    let scale = 1.0 / n_pred as f64;

    // Head and final layer norm.
    let head_w = idx.head_w.of(data);
    let mut dhf = vec![0.0; n_t * d];
    let mut dlogits = vec![0.0; VOCAB_SIZE];
    for t in 0..n_pred {
        let p_row = &cache.probs[t * VOCAB_SIZE..(t + 1) * VOCAB_SIZE];
        for (dl, &p) in dlogits.iter_mut().zip(p_row) {
            *dl = p * scale;
        }
        dlogits[tokens[t + 1] as usize] -= scale;

        axpy(idx.head_b.of_mut(grad), 1.0, &dlogits);
        let hf_row = &cache.hf[t * d..(t + 1) * d];
        {
            let dw = idx.head_w.of_mut(grad);
            for (i, &hv) in hf_row.iter().enumerate() {
                axpy(&mut dw[i * VOCAB_SIZE..(i + 1) * VOCAB_SIZE], hv, &dlogits);
            }
        }
        let dhf_row = &mut dhf[t * d..(t + 1) * d];
        for i in 0..d {
            dhf_row[i] = dot(&dlogits, &head_w[i * VOCAB_SIZE..(i + 1) * VOCAB_SIZE]);
        }
    }

    let mut dx = vec![0.0; n_t * d];
    {
        // Split the flat gradient into the two final-norm params and dx.
        let (dgamma, dbeta) = (idx.lnf_gamma, idx.lnf_beta);
        let mut dg = vec![0.0; d];
        let mut db = vec![0.0; d];
        layer_norm_backward(
            &dhf,
            &cache.h_last,
            idx.lnf_gamma.of(data),
            &cache.lnf_mean,
            &cache.lnf_rstd,
            n_t,
            d,
            &mut dg,
            &mut db,
            &mut dx,
        );
        axpy(dgamma.of_mut(grad), 1.0, &dg);
        axpy(dbeta.of_mut(grad), 1.0, &db);
    }

    // Blocks in reverse.
    for (block, c) in idx.blocks.iter().zip(&cache.blocks).rev() {
        let dx_prev = backward_block(block, c, data, grad, &dx, n_t, d, f, n_heads, hd, inv_sqrt_hd);
        dx = dx_prev;
    }

    // Embeddings.
    let tok_grad = idx.tok_emb.of_mut(grad);
    for (t, &tok) in tokens.iter().enumerate() {
        axpy(
            &mut tok_grad[tok as usize * d..(tok as usize + 1) * d],
            1.0,
            &dx[t * d..(t + 1) * d],
        );
    }
    let pos_grad = idx.pos_emb.of_mut(grad);
    for t in 0..n_t {
        axpy(&mut pos_grad[t * d..(t + 1) * d], 1.0, &dx[t * d..(t + 1) * d]);
    }
}

/// Backward through one block; returns the gradient w.r.t. the block input.
#[allow(clippy::too_many_arguments)]
fn backward_block(
    block: &BlockIndex,
    c: &BlockCache,
    data: &[f64],
    grad: &mut [f64],
    dx_out: &[f64],
    n_t: usize,
    d: usize,
    f: usize,
    n_heads: usize,
    hd: usize,
    inv_sqrt_hd: f64,
) -> Vec<f64> {
    // Helper to accumulate into a parameter span without holding two mutable
    // borrows of `grad` at once.
    fn acc(grad: &mut [f64], span: Span, local: &[f64]) {
        axpy(span.of_mut(grad), 1.0, local);
    }

    // MLP path: x_out = x_mid + gelu(ln2(x_mid) @ wfc + bfc) @ wproj + bproj.
    let mut dx_mid = dx_out.to_vec();
    let mut dfc_act = vec![0.0; n_t * f];
    {
        let mut dwproj = vec![0.0; f * d];
        let mut dbproj = vec![0.0; d];
        linear_backward(
            &c.fc_act,
            block.wproj.of(data),
            dx_out,
            n_t,
            f,
            d,
            &mut dwproj,
            &mut dbproj,
            &mut dfc_act,
        );
        acc(grad, block.wproj, &dwproj);
        acc(grad, block.bproj, &dbproj);
    }
    for (dfa, &pre) in dfc_act.iter_mut().zip(&c.fc_pre) {
        *dfa *= gelu_grad(pre);
    }
    let dfc_pre = dfc_act;
    let mut da2 = vec![0.0; n_t * d];
    {
        let mut dwfc = vec![0.0; d * f];
        let mut dbfc = vec![0.0; f];
        linear_backward(
            &c.a2,
            block.wfc.of(data),
            &dfc_pre,
            n_t,
            d,
            f,
            &mut dwfc,
            &mut dbfc,
            &mut da2,
        );
        acc(grad, block.wfc, &dwfc);
        acc(grad, block.bfc, &dbfc);
    }
    {
        let mut dg = vec![0.0; d];
        let mut db = vec![0.0; d];
        layer_norm_backward(
            &da2,
            &c.x_mid,
            block.ln2_gamma.of(data),
            &c.ln2_mean,
            &c.ln2_rstd,
            n_t,
            d,
            &mut dg,
            &mut db,
            &mut dx_mid,
        );
        acc(grad, block.ln2_gamma, &dg);
        acc(grad, block.ln2_beta, &db);
    }

    // Attention path: x_mid = x_in + attention(ln1(x_in)) @ wo + bo.
    let mut dx_in = dx_mid.clone();
    let mut dctx = vec![0.0; n_t * d];
    {
        let mut dwo = vec![0.0; d * d];
        let mut dbo = vec![0.0; d];
        linear_backward(
            &c.ctx,
            block.wo.of(data),
            &dx_mid,
            n_t,
            d,
            d,
            &mut dwo,
            &mut dbo,
            &mut dctx,
        );
        acc(grad, block.wo, &dwo);
        acc(grad, block.bo, &dbo);
    }

    let mut dq = vec![0.0; n_t * d];
    let mut dk = vec![0.0; n_t * d];
    let mut dv = vec![0.0; n_t * d];
    let mut dp = vec![0.0; n_t];
    for h in 0..n_heads {
        let col = h * hd;
        for t in 0..n_t {
            let att_row = &c.att[h * n_t * n_t + t * n_t..h * n_t * n_t + t * n_t + n_t];
            let dctx_row = &dctx[t * d + col..t * d + col + hd];
            let mut sum_pd = 0.0;
            for u in 0..=t {
                let dpu = dot(dctx_row, &c.v[u * d + col..u * d + col + hd]);
                dp[u] = dpu;
                sum_pd += att_row[u] * dpu;
                axpy(&mut dv[u * d + col..u * d + col + hd], att_row[u], dctx_row);
            }
            let q_row = &c.q[t * d + col..t * d + col + hd];
            let dq_row = &mut dq[t * d + col..t * d + col + hd];
            for u in 0..=t {
                let ds = att_row[u] * (dp[u] - sum_pd) * inv_sqrt_hd;
                axpy(dq_row, ds, &c.k[u * d + col..u * d + col + hd]);
                axpy(&mut dk[u * d + col..u * d + col + hd], ds, q_row);
            }
        }
    }

    let mut da1 = vec![0.0; n_t * d];
    for (w, b, dy) in [
        (block.wq, block.bq, &dq),
        (block.wk, block.bk, &dk),
        (block.wv, block.bv, &dv),
    ] {
        let mut dw = vec![0.0; d * d];
        let mut db = vec![0.0; d];
        linear_backward(&c.a1, w.of(data), dy, n_t, d, d, &mut dw, &mut db, &mut da1);
        acc(grad, w, &dw);
        acc(grad, b, &db);
    }
    {
        let mut dg = vec![0.0; d];
        let mut db = vec![0.0; d];
        layer_norm_backward(
            &da1,
            &c.x_in,
            block.ln1_gamma.of(data),
            &c.ln1_mean,
            &c.ln1_rstd,
            n_t,
            d,
            &mut dg,
            &mut db,
            &mut dx_in,
        );
        acc(grad, block.ln1_gamma, &dg);
        acc(grad, block.ln1_beta, &db);
    }
    dx_in
}

/// Per-position negative log-likelihoods and their mean for one sequence.
pub fn nll(params: &ModelParams, tokens: &[u32]) -> Result<(Vec<f64>, f64)> {
    let cache = forward(params, tokens)?;
    Ok((cache.per_token_nll, cache.mean_nll))
}

/// Mean NLL of a text under the model (encode, then score).
pub fn mean_nll(params: &ModelParams, text: &str) -> Result<f64> {
    let tokens = encode(text, params.config.context_len);
    Ok(nll(params, &tokens)?.1)
}

/// Mean loss and flat gradient for one sequence.
pub(crate) fn loss_and_grad(params: &ModelParams, tokens: &[u32]) -> Result<(f64, Vec<f64>)> {
    let cache = forward(params, tokens)?;
    let mut grad = vec![0.0; params.len()];
    backward(params, tokens, &cache, &mut grad);
    Ok((cache.mean_nll, grad))
}

/// Per-example gradients for a batch, in input order.
#[derive(Debug, Clone)]
pub struct GradientSet {
    pub per_sample: Vec<Vec<f64>>,
    pub batch_ids: Vec<usize>,
    pub losses: Vec<f64>,
}

/// Compute per-example gradients for a batch of encoded sequences.
///
/// `batch_ids` labels each row (typically the corpus index) and is carried
/// through unchanged. Rows come back in input order regardless of how the
/// work is scheduled.
pub fn per_sample_grads(
    params: &ModelParams,
    sequences: &[Vec<u32>],
    batch_ids: &[usize],
) -> Result<GradientSet> {
    if sequences.len() != batch_ids.len() {
        return Err(Error::SizeMismatch {
            expected: sequences.len(),
            actual: batch_ids.len(),
            context: "batch_ids length",
        });
    }
    if sequences.is_empty() {
        return Err(Error::EmptyInput("per-sample gradient batch"));
    }
    let results: Vec<(f64, Vec<f64>)> = sequences
        .par_iter()
        .map(|seq| loss_and_grad(params, seq))
        .collect::<Result<_>>()?;
    let mut per_sample = Vec::with_capacity(results.len());
    let mut losses = Vec::with_capacity(results.len());
    for (loss, grad) in results {
        losses.push(loss);
        per_sample.push(grad);
    }
    Ok(GradientSet {
        per_sample,
        batch_ids: batch_ids.to_vec(),
        losses,
    })
}

/// Token-weighted perplexity over a corpus: exp of total NLL over total
/// predicted tokens.
pub fn perplexity(params: &ModelParams, texts: &[String]) -> Result<f64> {
    if texts.is_empty() {
        return Err(Error::EmptyInput("perplexity corpus"));
    }
    let parts: Vec<(f64, usize)> = texts
        .par_iter()
        .map(|text| {
            let tokens = encode(text, params.config.context_len);
            let (per_token, _) = nll(params, &tokens)?;
            Ok((per_token.iter().sum::<f64>(), per_token.len()))
        })
        .collect::<Result<_>>()?;
    let mut total = 0.0;
    let mut count = 0usize;
    for (s, n) in parts {
        total += s;
        count += n;
    }
    Ok((total / count as f64).exp())
}
