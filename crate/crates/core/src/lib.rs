//! Fast-forward indexes: sparse first-stage retrieval re-scored by
//! interpolating lexical scores with dense scores looked up from
//! pre-computed passage vectors.
//!
//! The pipeline is:
//!
//! 1. [`SparseIndex::retrieve`] produces the top `k_S` candidates by BM25.
//! 2. [`ForwardIndex::dense_score`] looks up each candidate's passage
//!    vectors and takes the best dot product with the query vector (maxP).
//! 3. [`rank::interpolate`] mixes both scores, or [`rank::hybrid_score`]
//!    fuses with a dense top-`k_D` list, or
//!    [`rank::early_stop_interpolate`] does the same walk but stops once no
//!    remaining candidate can make the top `k`.
//!
//! [`coalesce`] shrinks a forward index by averaging runs of similar
//! consecutive passages, and [`eval`] / [`latency`] measure quality and
//! per-query cost.

pub mod coalesce;
pub mod container;
pub mod encode;
mod error;
pub mod eval;
pub mod forward;
pub mod ingest;
pub mod latency;
pub mod rank;
pub mod score;
pub mod sparse;
mod types;

pub use coalesce::{coalesce_doc, coalesce_index, CoalesceConfig, CoalesceStats};
pub use encode::{tokenize, toy_encode, PassageSplitter, ToyEncoder};
pub use error::{Error, Result};
pub use eval::{Metric, Qrels, RunFile};
pub use forward::{ForwardIndex, ForwardIndexReader, Passages};
pub use latency::{measure_latency, LatencyReport, Phase, PhaseTimer};
pub use rank::{EarlyStopResult, InterpolationConfig};
pub use score::{cosine_distance, dot, maxp};
pub use sparse::{Bm25Params, SparseIndex};
pub use types::{ranking_order, DenseVector, DocId, Query, RankedList, ScoredDoc};
