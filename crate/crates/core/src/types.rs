//! Identifiers, vectors and ranked lists shared by every stage.

use std::borrow::Borrow;
use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Opaque document identifier: non-empty, no whitespace.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DocId(Arc<str>);

impl DocId {
    pub fn new(id: impl AsRef<str>) -> Result<Self> {
        let id = id.as_ref();
        if !is_valid_token(id) {
            return Err(Error::InvalidId(id.to_string()));
        }
        Ok(Self(Arc::from(id)))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

pub(crate) fn is_valid_token(s: &str) -> bool {
    !s.is_empty() && !s.chars().any(char::is_whitespace)
}

impl Borrow<str> for DocId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl AsRef<str> for DocId {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for DocId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for DocId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DocId({:?})", &*self.0)
    }
}

impl TryFrom<&str> for DocId {
    type Error = Error;

    fn try_from(value: &str) -> Result<Self> {
        DocId::new(value)
    }
}

/// A dense representation with finite 32-bit components.
#[derive(Clone, PartialEq, Debug, Default)]
pub struct DenseVector(Vec<f32>);

impl DenseVector {
    pub fn new(values: Vec<f32>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("vector"));
        }
        Ok(Self(values))
    }

    pub fn zeros(dimension: usize) -> Self {
        Self(vec![0.0; dimension])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f32> {
        self.0
    }

    /// Euclidean norm, accumulated in 64-bit.
    pub fn norm(&self) -> f64 {
        norm_slice(&self.0)
    }

    pub(crate) fn check_dim(&self, expected: usize) -> Result<()> {
        if self.dim() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: self.dim(),
            });
        }
        Ok(())
    }
}

pub(crate) fn norm_slice(v: &[f32]) -> f64 {
    v.iter().map(|&x| f64::from(x) * f64::from(x)).sum::<f64>().sqrt()
}

impl TryFrom<Vec<f32>> for DenseVector {
    type Error = Error;

    fn try_from(values: Vec<f32>) -> Result<Self> {
        DenseVector::new(values)
    }
}

impl AsRef<[f32]> for DenseVector {
    fn as_ref(&self) -> &[f32] {
        &self.0
    }
}

#[derive(Clone, PartialEq, Debug)]
pub struct ScoredDoc {
    pub doc: DocId,
    pub score: f64,
}

impl ScoredDoc {
    pub fn new(doc: DocId, score: f64) -> Self {
        Self { doc, score }
    }
}

/// Ranking order: higher score first, equal scores by ascending id.
pub fn ranking_order(a: &ScoredDoc, b: &ScoredDoc) -> Ordering {
    b.score.total_cmp(&a.score).then_with(|| a.doc.cmp(&b.doc))
}

/// Documents sorted by descending score with ties broken by ascending id.
#[derive(Clone, PartialEq, Debug, Default)]
pub struct RankedList {
    hits: Vec<ScoredDoc>,
}

impl RankedList {
    /// Sorts `hits` into ranking order. Rejects duplicate ids and non-finite scores.
    pub fn new(mut hits: Vec<ScoredDoc>) -> Result<Self> {
        if hits.iter().any(|h| !h.score.is_finite()) {
            return Err(Error::NonFinite("score"));
        }
        let mut seen = HashSet::with_capacity(hits.len());
        for h in &hits {
            if !seen.insert(h.doc.clone()) {
                return Err(Error::DuplicateDocId(h.doc.clone()));
            }
        }
        hits.sort_unstable_by(ranking_order);
        Ok(Self { hits })
    }

    /// Builds from pairs already known to be distinct and finite; only sorts.
    pub(crate) fn from_distinct(mut hits: Vec<ScoredDoc>) -> Self {
        debug_assert!(hits.iter().all(|h| h.score.is_finite()));
        hits.sort_unstable_by(ranking_order);
        Self { hits }
    }

    /// Like [`from_distinct`](Self::from_distinct) but keeps only the best `k`.
    pub(crate) fn top_k_distinct(mut hits: Vec<ScoredDoc>, k: usize) -> Self {
        if k == 0 {
            return Self::default();
        }
        if hits.len() > k {
            hits.select_nth_unstable_by(k - 1, ranking_order);
            hits.truncate(k);
        }
        Self::from_distinct(hits)
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.hits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hits.is_empty()
    }

    pub fn hits(&self) -> &[ScoredDoc] {
        &self.hits
    }

    pub fn iter(&self) -> std::slice::Iter<'_, ScoredDoc> {
        self.hits.iter()
    }

    pub fn docs(&self) -> impl Iterator<Item = &DocId> + '_ {
        self.hits.iter().map(|h| &h.doc)
    }

    pub fn truncate(&mut self, k: usize) {
        self.hits.truncate(k);
    }

    pub fn truncated(mut self, k: usize) -> Self {
        self.truncate(k);
        self
    }

    pub fn into_hits(self) -> Vec<ScoredDoc> {
        self.hits
    }
}

impl<'a> IntoIterator for &'a RankedList {
    type Item = &'a ScoredDoc;
    type IntoIter = std::slice::Iter<'a, ScoredDoc>;

    fn into_iter(self) -> Self::IntoIter {
        self.hits.iter()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Query {
    pub qid: String,
    pub text: String,
    pub vector: Option<DenseVector>,
}

impl Query {
    pub fn new(qid: impl Into<String>, text: impl Into<String>) -> Result<Self> {
        let qid = qid.into();
        if !is_valid_token(&qid) {
            return Err(Error::InvalidId(qid));
        }
        Ok(Self {
            qid,
            text: text.into(),
            vector: None,
        })
    }

    pub fn with_vector(mut self, vector: DenseVector) -> Self {
        self.vector = Some(vector);
        self
    }
}
