//! Second-stage scoring over a sparse candidate list: re-ranking,
//! interpolation, hybrid fusion with sparse fallback, and interpolation with
//! early stopping.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use crate::error::{Error, Result};
use crate::forward::ForwardIndex;
use crate::types::{ranking_order, DenseVector, DocId, RankedList, ScoredDoc};

/// Default interpolation weights for the dense encoders this engine was
/// tuned against.
pub mod alpha {
    pub const TCT_COLBERT: f64 = 0.2;
    pub const ANCE: f64 = 0.5;
    pub const BERT_CLS: f64 = 0.7;
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InterpolationConfig {
    pub alpha: f64,
    /// Final cut-off depth.
    pub k: usize,
    /// Sparse retrieval depth.
    pub k_s: usize,
    /// Dense retrieval depth for hybrid fusion.
    pub k_d: usize,
}

impl Default for InterpolationConfig {
    fn default() -> Self {
        Self {
            alpha: alpha::TCT_COLBERT,
            k: 10,
            k_s: 1000,
            k_d: 1000,
        }
    }
}

impl InterpolationConfig {
    pub fn new(alpha: f64, k: usize, k_s: usize, k_d: usize) -> Result<Self> {
        let c = Self { alpha, k, k_s, k_d };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        if self.k == 0 || self.k_s == 0 || self.k_d == 0 {
            return Err(Error::InvalidConfig("k, k_S and k_D must be positive".into()));
        }
        if self.k > self.k_s {
            return Err(Error::InvalidConfig(format!(
                "k ({}) must not exceed k_S ({})",
                self.k, self.k_s
            )));
        }
        Ok(())
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidConfig(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    Ok(())
}

#[inline]
fn mix(alpha: f64, sparse: f64, dense: f64) -> f64 {
    alpha * sparse + (1.0 - alpha) * dense
}

/// `alpha * sparse + (1 - alpha) * dense` for every sparse hit, re-sorted.
pub fn interpolate(sparse_hits: &RankedList, dense_scores: &HashMap<DocId, f64>, alpha: f64) -> Result<RankedList> {
    check_alpha(alpha)?;
    let hits = sparse_hits
        .iter()
        .map(|h| {
            let dense = dense_scores
                .get(&h.doc)
                .ok_or_else(|| Error::MissingDocument(h.doc.clone()))?;
            Ok(ScoredDoc::new(h.doc.clone(), mix(alpha, h.score, *dense)))
        })
        .collect::<Result<Vec<_>>>()?;
    RankedList::new(hits)
}

/// Orders the sparse candidates by dense score alone.
pub fn rerank(sparse_hits: &RankedList, dense_scores: &HashMap<DocId, f64>) -> Result<RankedList> {
    interpolate(sparse_hits, dense_scores, 0.0)
}

/// Interpolation over the sparse candidates where documents missing from
/// `dense_hits` fall back to their sparse score in the dense slot. Documents
/// retrieved only by the dense side are discarded.
pub fn hybrid_score(sparse_hits: &RankedList, dense_hits: &RankedList, alpha: f64) -> Result<RankedList> {
    check_alpha(alpha)?;
    let dense: HashMap<&DocId, f64> = dense_hits.iter().map(|h| (&h.doc, h.score)).collect();
    let hits = sparse_hits
        .iter()
        .map(|h| {
            let d = dense.get(&h.doc).copied().unwrap_or(h.score);
            ScoredDoc::new(h.doc.clone(), mix(alpha, h.score, d))
        })
        .collect();
    RankedList::new(hits)
}

/// Dense scores from the forward index for every sparse hit.
pub fn dense_scores_for(
    index: &ForwardIndex,
    query_vec: &DenseVector,
    hits: &RankedList,
) -> Result<HashMap<DocId, f64>> {
    query_vec.check_dim(index.dimension())?;
    hits.iter()
        .map(|h| {
            Ok((
                h.doc.clone(),
                index.dense_score_unchecked(query_vec.as_slice(), h.doc.as_str())?,
            ))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct EarlyStopResult {
    pub topk: RankedList,
    /// Forward-index lookups performed.
    pub lookups: usize,
    pub stopped_early: bool,
}

/// Heap entry ordered so that the *worst* ranked document is the maximum,
/// putting it on top of a `BinaryHeap`.
#[derive(Debug)]
struct Worst(ScoredDoc);

impl PartialEq for Worst {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Worst {}

impl PartialOrd for Worst {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Worst {
    fn cmp(&self, other: &Self) -> Ordering {
        ranking_order(&self.0, &other.0)
    }
}

/// Walks the sparse ranking in order, interpolating with looked-up dense
/// scores, and stops once no remaining document can enter the top `k`.
///
/// The bound for the next document is `alpha * sparse + (1 - alpha) * s_D`
/// where `s_D` is the largest dense score seen so far, or `s_d_override`
/// when given. With the override set to the true maximum over the
/// candidates the result is the exact top `k`; without it the result is an
/// approximation whose scores are still exact for the documents returned.
pub fn early_stop_interpolate(
    sparse_hits: &RankedList,
    index: &ForwardIndex,
    query_vec: &DenseVector,
    config: &InterpolationConfig,
    s_d_override: Option<f64>,
) -> Result<EarlyStopResult> {
    query_vec.check_dim(index.dimension())?;
    let q = query_vec.as_slice();
    early_stop_with(sparse_hits, config, s_d_override, |doc| {
        index.dense_score_unchecked(q, doc.as_str())
    })
}

/// [`early_stop_interpolate`] over an arbitrary dense scorer.
pub fn early_stop_with<F>(
    sparse_hits: &RankedList,
    config: &InterpolationConfig,
    s_d_override: Option<f64>,
    mut dense_score: F,
) -> Result<EarlyStopResult>
where
    F: FnMut(&DocId) -> Result<f64>,
{
    config.validate()?;
    if let Some(s) = s_d_override {
        if !s.is_finite() {
            return Err(Error::NonFinite("dense score bound"));
        }
    }
    let alpha = config.alpha;
    let k = config.k;
    let mut queue: BinaryHeap<Worst> = BinaryHeap::with_capacity(k + 1);
    let mut s_d = s_d_override.unwrap_or(f64::NEG_INFINITY);
    let mut lookups = 0;
    let mut stopped_early = false;

    for hit in sparse_hits.iter().take(config.k_s) {
        let mut evicted = None;
        if queue.len() == k {
            let s_min = queue.pop().expect("queue is full").0;
            // the dense term vanishes at alpha = 1 even while s_d is -inf
            let s_best = if alpha < 1.0 {
                mix(alpha, hit.score, s_d)
            } else {
                hit.score
            };
            if s_best <= s_min.score {
                queue.push(Worst(s_min));
                stopped_early = true;
                break;
            }
            evicted = Some(s_min);
        }
        let dense = dense_score(&hit.doc)?;
        lookups += 1;
        s_d = s_d.max(dense);
        let candidate = ScoredDoc::new(hit.doc.clone(), mix(alpha, hit.score, dense));
        let keep = match evicted {
            Some(min) if ranking_order(&min, &candidate) == Ordering::Less => min,
            _ => candidate,
        };
        queue.push(Worst(keep));
    }

    let hits = queue.into_vec().into_iter().map(|w| w.0).collect();
    Ok(EarlyStopResult {
        topk: RankedList::new(hits)?,
        lookups,
        stopped_early,
    })
}

/// True maximum dense score over the candidates; the exact bound for
/// [`early_stop_interpolate`].
pub fn max_dense_score(
    index: &ForwardIndex,
    query_vec: &DenseVector,
    hits: &RankedList,
    k_s: usize,
) -> Result<Option<f64>> {
    query_vec.check_dim(index.dimension())?;
    let mut best: Option<f64> = None;
    for h in hits.iter().take(k_s) {
        let s = index.dense_score_unchecked(query_vec.as_slice(), h.doc.as_str())?;
        best = Some(best.map_or(s, |b| b.max(s)));
    }
    Ok(best)
}
