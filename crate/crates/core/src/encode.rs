//! Tokenization, the deterministic toy encoder, and passage splitting.
//!
//! The toy encoder stands in for a neural dual-encoder so the whole pipeline
//! can run without model weights. Its hash is part of the contract, so other
//! tools can reproduce vectors bit for bit:
//!
//! 1. lowercase the text and split it on runs of non-alphanumeric characters;
//! 2. hash each token with 64-bit FNV-1a, first absorbing the seed as eight
//!    little-endian bytes, then the token's UTF-8 bytes;
//! 3. add one to bucket `hash % dimension`;
//! 4. L2-normalize the counts. Text without tokens gives the zero vector.

use crate::error::{Error, Result};
use crate::types::DenseVector;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// Lowercased alphanumeric runs. No stemming, no stopwords.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

fn fnv1a(seed: u64, token: &str) -> u64 {
    seed.to_le_bytes()
        .iter()
        .chain(token.as_bytes())
        .fold(FNV_OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

/// Seeded feature-hashing encoder.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ToyEncoder {
    dimension: usize,
    seed: u64,
}

impl ToyEncoder {
    pub fn new(dimension: usize, seed: u64) -> Result<Self> {
        if dimension < 2 {
            return Err(Error::InvalidConfig(format!(
                "toy encoder dimension must be at least 2, got {dimension}"
            )));
        }
        Ok(Self { dimension, seed })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn bucket(&self, token: &str) -> usize {
        (fnv1a(self.seed, token) % self.dimension as u64) as usize
    }

    pub fn encode(&self, text: &str) -> DenseVector {
        let mut counts = vec![0.0f64; self.dimension];
        for token in tokenize(text) {
            counts[self.bucket(&token)] += 1.0;
        }
        let norm = counts.iter().map(|c| c * c).sum::<f64>().sqrt();
        let values = if norm == 0.0 {
            vec![0.0; self.dimension]
        } else {
            counts.iter().map(|c| (c / norm) as f32).collect()
        };
        DenseVector::new(values).expect("normalized counts are finite")
    }
}

/// Encodes `text` with the toy encoder.
///
/// # Panics
///
/// If `dimension < 2`; use [`ToyEncoder::new`] for a fallible version.
pub fn toy_encode(text: &str, dimension: usize, seed: u64) -> DenseVector {
    ToyEncoder::new(dimension, seed)
        .expect("dimension must be at least 2")
        .encode(text)
}

/// Fixed-size token windows over a document.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PassageSplitter {
    pub window: usize,
    pub stride: usize,
}

impl Default for PassageSplitter {
    fn default() -> Self {
        Self {
            window: 200,
            stride: 200,
        }
    }
}

impl PassageSplitter {
    pub fn new(window: usize, stride: usize) -> Result<Self> {
        if window == 0 || stride == 0 {
            return Err(Error::InvalidConfig(
                "passage window and stride must be positive".into(),
            ));
        }
        Ok(Self { window, stride })
    }

    /// Splits into passages of normalized tokens joined by single spaces.
    /// Always returns at least one passage, possibly empty.
    pub fn split(&self, text: &str) -> Vec<String> {
        let tokens = tokenize(text);
        if tokens.is_empty() {
            return vec![String::new()];
        }
        let mut passages = Vec::new();
        let mut start = 0;
        loop {
            let end = (start + self.window).min(tokens.len());
            passages.push(tokens[start..end].join(" "));
            if end == tokens.len() {
                break;
            }
            start += self.stride;
            if start >= tokens.len() {
                break;
            }
        }
        passages
    }
}
