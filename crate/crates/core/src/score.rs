//! Scoring primitives: dot product, cosine distance and maxP aggregation.

use crate::error::{Error, Result};
use crate::types::{norm_slice, DenseVector};

/// Inner product of two equal-length vectors.
///
/// Accumulates in 64-bit and rounds the result to 32-bit, the precision of
/// the stored vectors.
pub fn dot(a: &DenseVector, b: &DenseVector) -> Result<f32> {
    check_same_dim(a.as_slice(), b.as_slice())?;
    Ok(dot_slices(a.as_slice(), b.as_slice()))
}

pub(crate) fn dot_slices(a: &[f32], b: &[f32]) -> f32 {
    debug_assert_eq!(a.len(), b.len());
    let sum: f64 = a.iter().zip(b).map(|(&x, &y)| f64::from(x) * f64::from(y)).sum();
    sum as f32
}

/// `1 - cos(a, b)` clamped to `[0, 2]`. A zero vector on either side yields 1.0.
pub fn cosine_distance(a: &DenseVector, b: &DenseVector) -> Result<f64> {
    check_same_dim(a.as_slice(), b.as_slice())?;
    Ok(cosine_distance_slices(a.as_slice(), b.as_slice()))
}

pub(crate) fn cosine_distance_slices(a: &[f32], b: &[f32]) -> f64 {
    let na = norm_slice(a);
    let nb = norm_slice(b);
    if na == 0.0 || nb == 0.0 {
        return 1.0;
    }
    let dot: f64 = a.iter().zip(b).map(|(&x, &y)| f64::from(x) * f64::from(y)).sum();
    (1.0 - dot / (na * nb)).clamp(0.0, 2.0)
}

/// Document score as the maximum of its passage scores.
pub fn maxp(passage_scores: &[f64]) -> Result<f64> {
    if passage_scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite("passage score"));
    }
    passage_scores
        .iter()
        .copied()
        .reduce(f64::max)
        .ok_or(Error::Empty("passage score list"))
}

fn check_same_dim(a: &[f32], b: &[f32]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    Ok(())
}
