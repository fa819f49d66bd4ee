//! Command implementations. Each returns its result instead of printing so
//! the binary and the tests share one code path.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use fastforward::coalesce::{self, CoalesceStats, SweepRow};
use fastforward::eval::{self, Evaluation, Metric};
use fastforward::rank::{self, EarlyStopResult};
use fastforward::{
    ingest, measure_latency, CoalesceConfig, DenseVector, DocId, ForwardIndex, LatencyReport, PassageSplitter, Phase,
    PhaseTimer, Qrels, Query, RankedList, RunFile, ScoredDoc, SparseIndex, ToyEncoder,
};
use log::{info, warn};

use crate::config::{Config, Mode};
use crate::error::{CliError, CliResult};

fn open(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn finish<W: Write>(mut w: W, path: &Path) -> CliResult<()> {
    w.flush()
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn is_jsonl(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()),
        Some("jsonl" | "json" | "ndjson")
    )
}

/// Reads a TSV or JSONL corpus, chosen by file extension.
pub fn read_corpus(path: &Path) -> CliResult<Vec<(DocId, String)>> {
    let reader = open(path)?;
    let docs = if is_jsonl(path) {
        ingest::read_corpus_jsonl(reader)
    } else {
        ingest::read_corpus_tsv(reader)
    };
    docs.map_err(|e| CliError::at(path, e))
}

/// Where document vectors come from.
#[derive(Clone, Debug, PartialEq)]
pub enum Encoder {
    /// The built-in hashing encoder over fixed token windows.
    Toy {
        dimension: usize,
        seed: u64,
        splitter: PassageSplitter,
    },
    /// Pre-computed vectors in the JSONL interchange format.
    Interchange(PathBuf),
}

#[derive(Clone, Debug, PartialEq)]
pub struct IndexOptions {
    pub corpus: PathBuf,
    pub sparse_out: PathBuf,
    pub forward_out: PathBuf,
    pub encoder: Encoder,
    pub bm25: fastforward::Bm25Params,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IndexSummary {
    pub docs: usize,
    pub vectors: usize,
    pub dimension: usize,
}

pub fn cmd_index(opts: &IndexOptions) -> CliResult<IndexSummary> {
    let corpus = read_corpus(&opts.corpus)?;
    let forward = match &opts.encoder {
        Encoder::Toy {
            dimension,
            seed,
            splitter,
        } => {
            let enc = ToyEncoder::new(*dimension, *seed)?;
            ForwardIndex::build(corpus.iter().map(|(id, text)| {
                let passages = splitter.split(text).iter().map(|p| enc.encode(p)).collect();
                (id.clone(), passages)
            }))
            .map_err(|e| CliError::at(&opts.corpus, e))?
        }
        Encoder::Interchange(path) => {
            let index = ingest::read_forward_jsonl(open(path)?).map_err(|e| CliError::at(path, e))?;
            let missing = corpus.iter().filter(|(id, _)| !index.contains(id.as_str())).count();
            if missing > 0 {
                warn!("{missing} corpus documents have no vectors in {}", path.display());
            }
            index
        }
    };
    let sparse = SparseIndex::build(corpus, opts.bm25).map_err(|e| CliError::at(&opts.corpus, e))?;

    let mut w = create(&opts.sparse_out)?;
    sparse.write_to(&mut w).map_err(|e| CliError::at(&opts.sparse_out, e))?;
    finish(w, &opts.sparse_out)?;
    let w = forward
        .write_to(create(&opts.forward_out)?)
        .map_err(|e| CliError::at(&opts.forward_out, e))?;
    finish(w, &opts.forward_out)?;

    Ok(IndexSummary {
        docs: sparse.doc_count(),
        vectors: forward.vector_count(),
        dimension: forward.dimension(),
    })
}

pub fn load_forward(path: &Path) -> CliResult<ForwardIndex> {
    ForwardIndex::read_from(open(path)?).map_err(|e| CliError::at(path, e))
}

pub fn load_sparse(path: &Path) -> CliResult<SparseIndex> {
    SparseIndex::read_from(&mut open(path)?).map_err(|e| CliError::at(path, e))
}

pub fn cmd_coalesce(index: &Path, delta: f64, out: &Path) -> CliResult<CoalesceStats> {
    let config = CoalesceConfig::new(delta)?;
    let forward = load_forward(index)?;
    let (coalesced, stats) = coalesce::coalesce_index(&forward, &config)?;
    let w = coalesced.write_to(create(out)?).map_err(|e| CliError::at(out, e))?;
    finish(w, out)?;
    Ok(stats)
}

pub fn cmd_sweep(index: &Path, deltas: &[f64], csv: Option<&Path>) -> CliResult<Vec<SweepRow>> {
    for &d in deltas {
        CoalesceConfig::new(d)?;
    }
    let forward = load_forward(index)?;
    let rows = coalesce::sweep(&forward, deltas)?;
    if let Some(path) = csv {
        let mut w = create(path)?;
        coalesce::write_sweep_csv(&mut w, &rows).map_err(|e| CliError::at(path, e))?;
        finish(w, path)?;
    }
    Ok(rows)
}

/// Loaded indexes plus the knobs that drive second-stage scoring.
pub struct Engine {
    pub config: Config,
    pub sparse: SparseIndex,
    pub forward: ForwardIndex,
}

/// A query after first-stage retrieval, ready for re-scoring.
pub struct Prepared {
    pub query: Query,
    pub vector: DenseVector,
    pub candidates: RankedList,
}

pub struct Rescored {
    pub ranking: RankedList,
    pub lookups: usize,
    pub early_stop: Option<EarlyStopResult>,
}

impl Engine {
    pub fn load(config: Config) -> CliResult<Self> {
        config.validate()?;
        let sparse = load_sparse(config.require(&config.sparse, "sparse")?)?;
        let forward = load_forward(config.require(&config.forward, "forward")?)?;
        Ok(Self {
            config,
            sparse,
            forward,
        })
    }

    pub fn load_queries(&self) -> CliResult<Vec<Query>> {
        let path = self.config.require(&self.config.queries, "queries")?;
        let mut queries = ingest::read_queries_tsv(open(path)?).map_err(|e| CliError::at(path, e))?;
        let dim = self.forward.dimension();
        if let Some(vpath) = &self.config.query_vectors {
            let vectors: HashMap<String, DenseVector> = ingest::read_query_vectors_tsv(open(vpath)?)
                .map_err(|e| CliError::at(vpath, e))?
                .into_iter()
                .collect();
            for q in &mut queries {
                let v = vectors
                    .get(&q.qid)
                    .ok_or_else(|| CliError::Format(format!("{}: no vector for query {}", vpath.display(), q.qid)))?;
                q.vector = Some(v.clone());
            }
        } else {
            let enc = ToyEncoder::new(dim, self.config.seed)?;
            for q in &mut queries {
                q.vector = Some(enc.encode(&q.text));
            }
        }
        for q in &queries {
            let found = q.vector.as_ref().map_or(0, DenseVector::dim);
            if found != dim {
                return Err(CliError::Format(format!(
                    "query {} has dimension {found}, forward index has {dim}",
                    q.qid
                )));
            }
        }
        Ok(queries)
    }

    /// First-stage retrieval; not part of the measured latency.
    pub fn prepare(&self, query: Query) -> Prepared {
        let candidates = self.sparse.retrieve(&query.text, self.config.k_s);
        let vector = query.vector.clone().expect("queries are encoded on load");
        Prepared {
            query,
            vector,
            candidates,
        }
    }

    /// Second-stage scoring in the configured mode, timed per phase.
    pub fn rescore(&self, p: &Prepared, timer: &mut PhaseTimer) -> CliResult<Rescored> {
        let c = &self.config;
        let k = c.k;
        match c.mode {
            Mode::Rerank | Mode::Interpolate => {
                let alpha = if c.mode == Mode::Rerank { 0.0 } else { c.alpha };
                let dense = timer.time(Phase::Scoring, || {
                    p.candidates
                        .iter()
                        .map(|h| self.forward.dense_score(&p.vector, h.doc.as_str()))
                        .collect::<Result<Vec<f64>, _>>()
                })?;
                let mixed: Vec<ScoredDoc> = timer.time(Phase::Interpolation, || {
                    p.candidates
                        .iter()
                        .zip(&dense)
                        .map(|(h, d)| ScoredDoc::new(h.doc.clone(), alpha * h.score + (1.0 - alpha) * d))
                        .collect()
                });
                let ranking = timer.time(Phase::Sorting, || RankedList::new(mixed).map(|l| l.truncated(k)))?;
                Ok(Rescored {
                    ranking,
                    lookups: dense.len(),
                    early_stop: None,
                })
            }
            Mode::Hybrid => {
                let dense_hits = timer.time(Phase::Scoring, || self.forward.dense_topk(&p.vector, c.k_d))?;
                let fused = timer.time(Phase::Interpolation, || {
                    rank::hybrid_score(&p.candidates, &dense_hits, c.alpha)
                })?;
                let ranking = timer.time(Phase::Sorting, || fused.truncated(k));
                Ok(Rescored {
                    ranking,
                    lookups: 0,
                    early_stop: None,
                })
            }
            Mode::EarlyStop => {
                let interp = c.interpolation()?;
                let result = timer.time(Phase::Scoring, || -> fastforward::Result<EarlyStopResult> {
                    let bound = if c.sd_oracle {
                        rank::max_dense_score(&self.forward, &p.vector, &p.candidates, c.k_s)?
                    } else {
                        None
                    };
                    rank::early_stop_interpolate(&p.candidates, &self.forward, &p.vector, &interp, bound)
                })?;
                Ok(Rescored {
                    ranking: result.topk.clone(),
                    lookups: result.lookups,
                    early_stop: Some(result),
                })
            }
        }
    }
}

/// Runs every query and writes the run file if a path is configured.
/// Early-stopping runs record per-query lookup counts as header comments.
pub fn cmd_search(config: &Config) -> CliResult<RunFile> {
    let engine = Engine::load(config.clone())?;
    let queries = engine.load_queries()?;
    let mut run = RunFile::new(format!("fastforward-{}", config.mode));
    let mut lookups: Vec<(String, EarlyStopResult)> = Vec::new();
    for q in queries {
        let prepared = engine.prepare(q);
        let out = engine.rescore(&prepared, &mut PhaseTimer::default())?;
        if let Some(es) = out.early_stop {
            lookups.push((prepared.query.qid.clone(), es));
        }
        run.insert(prepared.query.qid, out.ranking);
    }
    lookups.sort_by(|a, b| a.0.cmp(&b.0));
    for (qid, es) in lookups {
        run.header.push(format!(
            "lookups qid={qid} count={} stopped_early={}",
            es.lookups, es.stopped_early
        ));
    }
    if let Some(path) = &config.run {
        let mut w = create(path)?;
        run.write(&mut w).map_err(|e| CliError::at(path, e))?;
        finish(w, path)?;
    }
    info!("searched {} queries in {} mode", run.runs.len(), config.mode);
    Ok(run)
}

pub fn cmd_evaluate(run: &Path, qrels: &Path, metrics: &[Metric], min_grade: u32) -> CliResult<Evaluation> {
    let run_file = RunFile::parse(open(run)?).map_err(|e| CliError::at(run, e))?;
    let judgments = Qrels::parse(open(qrels)?).map_err(|e| CliError::at(qrels, e))?;
    Ok(eval::evaluate(&run_file, &judgments, metrics, min_grade))
}

/// Measures per-query latency of the configured second stage. Sparse
/// retrieval and query encoding happen before measurement starts.
pub fn cmd_bench(config: &Config, warmup: usize, rounds: usize) -> CliResult<LatencyReport> {
    let engine = Engine::load(config.clone())?;
    let prepared: Vec<Prepared> = engine.load_queries()?.into_iter().map(|q| engine.prepare(q)).collect();
    let by_qid: HashMap<&str, &Prepared> = prepared.iter().map(|p| (p.query.qid.as_str(), p)).collect();
    let queries: Vec<Query> = prepared.iter().map(|p| p.query.clone()).collect();
    let mut failure = None;
    let report = measure_latency(&queries, warmup, rounds, |q, timer| {
        match engine.rescore(by_qid[q.qid.as_str()], timer) {
            Ok(out) => Ok(out.lookups),
            Err(e) => {
                let msg = e.to_string();
                failure = Some(e);
                Err(fastforward::Error::InvalidConfig(msg))
            }
        }
    });
    match (report, failure) {
        (_, Some(e)) => Err(e),
        (Ok(r), None) => Ok(r),
        (Err(e), None) => Err(e.into()),
    }
}

pub fn write_latency_csv(report: &LatencyReport, path: &Path) -> CliResult<()> {
    let mut w = create(path)?;
    report.write_csv(&mut w).map_err(|e| CliError::at(path, e))?;
    finish(w, path)
}

/// Reads a whole file into lines, for callers comparing outputs.
pub fn read_lines(path: &Path) -> CliResult<Vec<String>> {
    open(path)?
        .lines()
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}
