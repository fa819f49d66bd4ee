//! Sequential coalescing of maxP indexes.
//!
//! Consecutive passage vectors are merged into the mean of their run while
//! each new vector stays within cosine distance `delta` of the running mean.
//! Runs never span a gap: passages 3 and 5 are not merged unless 4 is too.

use std::io::Write;
use std::ops::Range;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::forward::{ForwardIndex, Passages};
use crate::score::cosine_distance_slices;
use crate::types::{DenseVector, DocId};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoalesceConfig {
    delta: f64,
}

impl CoalesceConfig {
    pub fn new(delta: f64) -> Result<Self> {
        if !delta.is_finite() || delta < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "delta must be finite and >= 0, got {delta}"
            )));
        }
        Ok(Self { delta })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }
}

/// Output of coalescing one document: the run means and the input range
/// each mean was taken over.
#[derive(Clone, Debug, PartialEq)]
pub struct Coalesced {
    pub vectors: Vec<DenseVector>,
    pub runs: Vec<Range<usize>>,
}

struct RunningMean {
    sum: Vec<f64>,
    count: usize,
    mean: Vec<f32>,
}

impl RunningMean {
    fn new(dim: usize) -> Self {
        Self {
            sum: vec![0.0; dim],
            count: 0,
            mean: vec![0.0; dim],
        }
    }

    fn add(&mut self, v: &[f32]) {
        for (s, &x) in self.sum.iter_mut().zip(v) {
            *s += f64::from(x);
        }
        self.count += 1;
        let n = self.count as f64;
        for (m, s) in self.mean.iter_mut().zip(&self.sum) {
            *m = (s / n) as f32;
        }
    }

    fn reset(&mut self) {
        self.sum.fill(0.0);
        self.count = 0;
    }
}

/// Coalesces one document's passages, in order.
pub fn coalesce_doc<'a, I>(passages: I, config: &CoalesceConfig) -> Result<Coalesced>
where
    I: IntoIterator<Item = &'a [f32]>,
{
    let mut iter = passages.into_iter();
    let first = iter.next().ok_or(Error::Empty("passage list"))?;
    let dim = first.len();
    let mut acc = RunningMean::new(dim);
    acc.add(first);

    let mut out = Coalesced {
        vectors: Vec::new(),
        runs: Vec::new(),
    };
    let mut run_start = 0;
    for (i, v) in iter.enumerate().map(|(i, v)| (i + 1, v)) {
        if v.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: v.len(),
            });
        }
        if cosine_distance_slices(v, &acc.mean) >= config.delta {
            out.vectors.push(DenseVector::new(acc.mean.clone())?);
            out.runs.push(run_start..i);
            run_start = i;
            acc.reset();
        }
        acc.add(v);
    }
    let end = run_start + acc.count;
    out.vectors.push(DenseVector::new(acc.mean)?);
    out.runs.push(run_start..end);
    Ok(out)
}

/// Convenience wrapper over [`coalesce_doc`] for owned vectors.
pub fn coalesce_vectors(passages: &[DenseVector], config: &CoalesceConfig) -> Result<Vec<DenseVector>> {
    if let Some(first) = passages.first() {
        for p in passages {
            p.check_dim(first.dim())?;
        }
    }
    Ok(coalesce_doc(passages.iter().map(DenseVector::as_slice), config)?.vectors)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CoalesceStats {
    pub input_vectors: usize,
    pub output_vectors: usize,
}

impl CoalesceStats {
    /// Fraction of vectors kept; 0.25 is a 4x reduction.
    pub fn compression_ratio(&self) -> f64 {
        self.output_vectors as f64 / self.input_vectors as f64
    }
}

/// Coalesces every document. Documents are processed in parallel; the
/// result does not depend on scheduling.
pub fn coalesce_index(index: &ForwardIndex, config: &CoalesceConfig) -> Result<(ForwardIndex, CoalesceStats)> {
    let docs: Vec<(&DocId, Passages<'_>)> = index.iter().collect();
    let coalesced: Vec<(DocId, Vec<DenseVector>)> = docs
        .par_iter()
        .map(|(id, passages)| Ok(((*id).clone(), coalesce_doc(passages.iter(), config)?.vectors)))
        .collect::<Result<_>>()?;
    let output_vectors = coalesced.iter().map(|(_, v)| v.len()).sum();
    let stats = CoalesceStats {
        input_vectors: index.vector_count(),
        output_vectors,
    };
    Ok((ForwardIndex::build(coalesced)?, stats))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepRow {
    pub delta: f64,
    pub total_vectors: usize,
    pub compression_ratio: f64,
}

/// Coalesces `index` at each threshold and records the resulting sizes.
pub fn sweep(index: &ForwardIndex, deltas: &[f64]) -> Result<Vec<SweepRow>> {
    deltas
        .iter()
        .map(|&delta| {
            let (_, stats) = coalesce_index(index, &CoalesceConfig::new(delta)?)?;
            Ok(SweepRow {
                delta,
                total_vectors: stats.output_vectors,
                compression_ratio: stats.compression_ratio(),
            })
        })
        .collect()
}

/// CSV with header `delta,total_vectors,compression_ratio`.
pub fn write_sweep_csv<W: Write>(mut w: W, rows: &[SweepRow]) -> Result<()> {
    writeln!(w, "delta,total_vectors,compression_ratio")?;
    for r in rows {
        writeln!(w, "{},{},{:.6}", r.delta, r.total_vectors, r.compression_ratio)?;
    }
    Ok(())
}
