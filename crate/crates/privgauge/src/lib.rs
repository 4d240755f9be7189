//! Privacy-utility audit gauge for a tiny causal language model.
//!
//! The library covers the full desk-scale loop: deterministic synthetic
//! clinical-PII corpora ([`corpus`]), a from-scratch byte-level transformer
//! ([`lm`]), DP-SGD training with gradient clipping and Gaussian noise
//! ([`dp`]), a Renyi-accountant with noise calibration ([`accountant`]),
//! loss-threshold membership inference ([`mia`]), and utility scoring,
//! Pareto analysis, and audit reporting ([`audit`]).

pub mod accountant;
pub mod artifact;
pub mod audit;
pub mod corpus;
pub mod dp;
pub mod error;
pub mod lm;
pub mod mia;

pub use error::{Error, Result};
