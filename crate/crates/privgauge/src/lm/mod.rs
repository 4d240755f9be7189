//! A tiny from-scratch causal language model over raw bytes.
//!
//! The vocabulary is fixed at 258 tokens (256 byte values plus BOS/EOS), the
//! architecture is a pre-norm transformer with learned positional embeddings
//! and an untied output projection, and every parameter lives in one flat
//! `Vec<f64>` addressed through a named shape index. All math is double
//! precision so gradients can be checked against central finite differences.

mod model;

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::artifact::{read_json, sha256_hex, write_atomic, write_json_atomic};
use crate::error::{Error, Result};

pub use model::{mean_nll, nll, nll_from_logits, per_sample_grads, perplexity, GradientSet};

/// Byte-level vocabulary: 256 byte values plus BOS and EOS markers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    pub size: usize,
}

impl Default for Vocabulary {
    fn default() -> Self {
        Self { size: VOCAB_SIZE }
    }
}

pub const VOCAB_SIZE: usize = 258;
pub const BOS: u32 = 256;
pub const EOS: u32 = 257;

/// Encode text as BOS + bytes + EOS, truncated to `context_len` tokens.
pub fn encode(text: &str, context_len: usize) -> Vec<u32> {
    let mut tokens = Vec::with_capacity(text.len() + 2);
    tokens.push(BOS);
    tokens.extend(text.bytes().map(u32::from));
    tokens.push(EOS);
    tokens.truncate(context_len);
    tokens
}

/// Invert [`encode`] for sequences that were not truncated.
pub fn decode(tokens: &[u32]) -> Result<String> {
    let inner: Vec<u8> = tokens
        .iter()
        .filter(|&&t| t != BOS && t != EOS)
        .map(|&t| {
            u8::try_from(t).map_err(|_| {
                Error::InvalidParameter(format!("token {t} is outside the byte range"))
            })
        })
        .collect::<Result<Vec<u8>>>()?;
    String::from_utf8(inner)
        .map_err(|e| Error::InvalidParameter(format!("decoded bytes are not UTF-8: {e}")))
}

/// Architecture hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub d_model: usize,
    pub n_layers: usize,
    pub n_heads: usize,
    pub context_len: usize,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            d_model: 64,
            n_layers: 2,
            n_heads: 4,
            context_len: 128,
            seed: 42,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d_model == 0 || self.n_layers == 0 || self.n_heads == 0 {
            return Err(Error::InvalidParameter(
                "d_model, n_layers, and n_heads must all be positive".into(),
            ));
        }
        if self.d_model % self.n_heads != 0 {
            return Err(Error::InvalidParameter(format!(
                "d_model {} must be divisible by n_heads {}",
                self.d_model, self.n_heads
            )));
        }
        if self.context_len < 2 {
            return Err(Error::InvalidParameter(
                "context_len must be at least 2".into(),
            ));
        }
        Ok(())
    }

    /// MLP hidden width (the usual 4x expansion).
    pub(crate) fn d_ff(&self) -> usize {
        4 * self.d_model
    }
}

/// Contiguous slice of the flat parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Span {
    pub offset: usize,
    pub len: usize,
}

impl Span {
    pub fn of<'a>(&self, data: &'a [f64]) -> &'a [f64] {
        &data[self.offset..self.offset + self.len]
    }

    pub fn of_mut<'a>(&self, data: &'a mut [f64]) -> &'a mut [f64] {
        &mut data[self.offset..self.offset + self.len]
    }
}

/// Spans of one transformer block's parameters.
#[derive(Debug, Clone, Copy)]
pub(crate) struct BlockIndex {
    pub ln1_gamma: Span,
    pub ln1_beta: Span,
    pub wq: Span,
    pub bq: Span,
    pub wk: Span,
    pub bk: Span,
    pub wv: Span,
    pub bv: Span,
    pub wo: Span,
    pub bo: Span,
    pub ln2_gamma: Span,
    pub ln2_beta: Span,
    pub wfc: Span,
    pub bfc: Span,
    pub wproj: Span,
    pub bproj: Span,
}

/// Named spans over the whole flat parameter vector.
#[derive(Debug, Clone)]
pub(crate) struct ParamIndex {
    pub tok_emb: Span,
    pub pos_emb: Span,
    pub blocks: Vec<BlockIndex>,
    pub lnf_gamma: Span,
    pub lnf_beta: Span,
    pub head_w: Span,
    pub head_b: Span,
    pub total: usize,
}

/// Manifest entry describing one named parameter tensor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShapeEntry {
    pub name: String,
    pub dims: Vec<usize>,
    pub offset: usize,
    pub len: usize,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum ParamKind {
    Weight,
    Bias,
    Gain,
}

struct ShapeWalk {
    entries: Vec<(ShapeEntry, ParamKind)>,
    cursor: usize,
}

impl ShapeWalk {
    fn new() -> Self {
        Self {
            entries: Vec::new(),
            cursor: 0,
        }
    }

    fn push(&mut self, name: String, dims: &[usize], kind: ParamKind) -> Span {
        let len = dims.iter().product();
        let span = Span {
            offset: self.cursor,
            len,
        };
        self.entries.push((
            ShapeEntry {
                name,
                dims: dims.to_vec(),
                offset: span.offset,
                len,
            },
            kind,
        ));
        self.cursor += len;
        span
    }
}

fn build_index(cfg: &ModelConfig) -> (ParamIndex, Vec<(ShapeEntry, ParamKind)>) {
    let d = cfg.d_model;
    let f = cfg.d_ff();
    let mut walk = ShapeWalk::new();
    let tok_emb = walk.push("tok_emb".into(), &[VOCAB_SIZE, d], ParamKind::Weight);
    let pos_emb = walk.push("pos_emb".into(), &[cfg.context_len, d], ParamKind::Weight);
    let mut blocks = Vec::with_capacity(cfg.n_layers);
    for l in 0..cfg.n_layers {
        let p = |s: &str| format!("blocks.{l}.{s}");
        blocks.push(BlockIndex {
            ln1_gamma: walk.push(p("ln1.gamma"), &[d], ParamKind::Gain),
            ln1_beta: walk.push(p("ln1.beta"), &[d], ParamKind::Bias),
            wq: walk.push(p("attn.wq"), &[d, d], ParamKind::Weight),
            bq: walk.push(p("attn.bq"), &[d], ParamKind::Bias),
            wk: walk.push(p("attn.wk"), &[d, d], ParamKind::Weight),
            bk: walk.push(p("attn.bk"), &[d], ParamKind::Bias),
            wv: walk.push(p("attn.wv"), &[d, d], ParamKind::Weight),
            bv: walk.push(p("attn.bv"), &[d], ParamKind::Bias),
            wo: walk.push(p("attn.wo"), &[d, d], ParamKind::Weight),
            bo: walk.push(p("attn.bo"), &[d], ParamKind::Bias),
            ln2_gamma: walk.push(p("ln2.gamma"), &[d], ParamKind::Gain),
            ln2_beta: walk.push(p("ln2.beta"), &[d], ParamKind::Bias),
            wfc: walk.push(p("mlp.wfc"), &[d, f], ParamKind::Weight),
            bfc: walk.push(p("mlp.bfc"), &[f], ParamKind::Bias),
            wproj: walk.push(p("mlp.wproj"), &[f, d], ParamKind::Weight),
            bproj: walk.push(p("mlp.bproj"), &[d], ParamKind::Bias),
        });
    }
    let lnf_gamma = walk.push("lnf.gamma".into(), &[d], ParamKind::Gain);
    let lnf_beta = walk.push("lnf.beta".into(), &[d], ParamKind::Bias);
    let head_w = walk.push("head.w".into(), &[d, VOCAB_SIZE], ParamKind::Weight);
    let head_b = walk.push("head.b".into(), &[VOCAB_SIZE], ParamKind::Bias);
    let index = ParamIndex {
        tok_emb,
        pos_emb,
        blocks,
        lnf_gamma,
        lnf_beta,
        head_w,
        head_b,
        total: walk.cursor,
    };
    (index, walk.entries)
}

/// Number of parameters a config implies.
pub fn param_count(cfg: &ModelConfig) -> usize {
    build_index(cfg).0.total
}

/// Flat parameter vector plus its named shape index.
#[derive(Debug, Clone)]
pub struct ModelParams {
    pub config: ModelConfig,
    pub data: Vec<f64>,
    shapes: Vec<ShapeEntry>,
    pub(crate) index: ParamIndex,
}

impl ModelParams {
    /// Seeded initialization: weights N(0, 0.02), biases 0, layer-norm gains 1.
    pub fn init(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let (index, entries) = build_index(&config);
        let mut data = vec![0.0; index.total];
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let normal = Normal::new(0.0, 0.02).expect("valid stddev");
        for (entry, kind) in &entries {
            let slice = &mut data[entry.offset..entry.offset + entry.len];
            match kind {
                ParamKind::Weight => slice.fill_with(|| normal.sample(&mut rng)),
                ParamKind::Bias => slice.fill(0.0),
                ParamKind::Gain => slice.fill(1.0),
            }
        }
        Ok(Self {
            config,
            data,
            shapes: entries.into_iter().map(|(e, _)| e).collect(),
            index,
        })
    }

    /// All-zero parameters (uniform logits); used by tests and calibration.
    pub fn zeroed(config: ModelConfig) -> Result<Self> {
        let mut params = Self::init(config)?;
        params.data.fill(0.0);
        Ok(params)
    }

    pub fn shapes(&self) -> &[ShapeEntry] {
        &self.shapes
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Little-endian f64 serialization of the flat vector.
    pub fn to_le_bytes(&self) -> Vec<u8> {
        let mut bytes = Vec::with_capacity(self.data.len() * 8);
        for v in &self.data {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        bytes
    }

    /// Hex SHA-256 of the binary parameter encoding; the model fingerprint
    /// cited in reports.
    pub fn content_hash(&self) -> String {
        sha256_hex(&self.to_le_bytes())
    }

    /// Write the binary weights and the JSON shape manifest atomically.
    pub fn save(&self, bin_path: &Path, manifest_path: &Path) -> Result<ModelManifest> {
        let bytes = self.to_le_bytes();
        let manifest = ModelManifest {
            config: self.config,
            param_count: self.data.len(),
            bin_sha256: sha256_hex(&bytes),
            shapes: self.shapes.clone(),
        };
        write_atomic(bin_path, &bytes)?;
        write_json_atomic(manifest_path, &manifest)?;
        Ok(manifest)
    }

    /// Load a model saved by [`ModelParams::save`], verifying length and
    /// content hash against the manifest.
    pub fn load(bin_path: &Path, manifest_path: &Path) -> Result<Self> {
        let manifest: ModelManifest = read_json(manifest_path)?;
        let bytes = std::fs::read(bin_path)?;
        if bytes.len() != manifest.param_count * 8 {
            return Err(Error::SizeMismatch {
                expected: manifest.param_count * 8,
                actual: bytes.len(),
                context: "model binary length",
            });
        }
        if sha256_hex(&bytes) != manifest.bin_sha256 {
            return Err(Error::Artifact(format!(
                "model binary {} does not match its manifest hash",
                bin_path.display()
            )));
        }
        let data: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        let (index, entries) = build_index(&manifest.config);
        if index.total != data.len() {
            return Err(Error::SizeMismatch {
                expected: index.total,
                actual: data.len(),
                context: "parameter count derived from config",
            });
        }
        Ok(Self {
            config: manifest.config,
            data,
            shapes: entries.into_iter().map(|(e, _)| e).collect(),
            index,
        })
    }
}

/// JSON manifest stored next to the binary weights.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelManifest {
    pub config: ModelConfig,
    pub param_count: usize,
    pub bin_sha256: String,
    pub shapes: Vec<ShapeEntry>,
}
