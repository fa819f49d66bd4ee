//! TREC-style relevance judgments, run files and ranking metrics.
//!
//! Qrels lines are `qid 0 docid grade`; run lines are
//! `qid Q0 docid rank score tag`. Lines starting with `#` are comments.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use log::warn;

use crate::error::{Error, Result};
use crate::types::{is_valid_token, DocId, RankedList, ScoredDoc};

/// Relevance grade at or above which a document counts as relevant for the
/// binary metrics.
pub const DEFAULT_MIN_GRADE: u32 = 1;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Qrels {
    judgments: HashMap<String, HashMap<DocId, u32>>,
}

impl Qrels {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a judgment; a repeated (query, document) pair is an error.
    pub fn insert(&mut self, qid: &str, doc: DocId, grade: u32) -> Result<()> {
        let per_query = self.judgments.entry(qid.to_string()).or_default();
        if per_query.insert(doc.clone(), grade).is_some() {
            return Err(Error::DuplicateDocId(doc));
        }
        Ok(())
    }

    pub fn for_query(&self, qid: &str) -> Option<&HashMap<DocId, u32>> {
        self.judgments.get(qid)
    }

    pub fn grade(&self, qid: &str, doc: &str) -> u32 {
        self.judgments.get(qid).and_then(|m| m.get(doc)).copied().unwrap_or(0)
    }

    pub fn query_ids(&self) -> impl Iterator<Item = &str> {
        self.judgments.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.judgments.values().map(HashMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn parse<R: BufRead>(reader: R) -> Result<Self> {
        let mut qrels = Self::new();
        for (n, line) in reader.lines().enumerate() {
            let line = line?;
            let line_no = n + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = trimmed.split_whitespace().collect();
            let [qid, _iter, doc, grade] = fields[..] else {
                return Err(Error::parse(
                    line_no,
                    format!("expected 4 fields, found {}", fields.len()),
                ));
            };
            let grade: i64 = grade
                .parse()
                .map_err(|_| Error::parse(line_no, format!("bad relevance grade {grade:?}")))?;
            let grade = u32::try_from(grade)
                .map_err(|_| Error::parse(line_no, format!("relevance grade {grade} is negative or too large")))?;
            let doc = DocId::new(doc).map_err(|e| Error::parse(line_no, e.to_string()))?;
            qrels
                .insert(qid, doc, grade)
                .map_err(|e| Error::parse(line_no, e.to_string()))?;
        }
        Ok(qrels)
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        let mut qids: Vec<_> = self.judgments.keys().collect();
        qids.sort();
        for qid in qids {
            let mut docs: Vec<_> = self.judgments[qid].iter().collect();
            docs.sort();
            for (doc, grade) in docs {
                writeln!(w, "{qid} 0 {doc} {grade}")?;
            }
        }
        Ok(())
    }
}

/// Ranked lists for a set of queries, keyed and written in query-id order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunFile {
    pub tag: String,
    pub runs: BTreeMap<String, RankedList>,
    /// Comment lines written before the results, without the leading `#`.
    pub header: Vec<String>,
}

impl RunFile {
    pub fn new(tag: impl Into<String>) -> Self {
        Self {
            tag: tag.into(),
            runs: BTreeMap::new(),
            header: Vec::new(),
        }
    }

    pub fn insert(&mut self, qid: impl Into<String>, list: RankedList) {
        self.runs.insert(qid.into(), list);
    }

    pub fn get(&self, qid: &str) -> Option<&RankedList> {
        self.runs.get(qid)
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        for line in &self.header {
            writeln!(w, "# {line}")?;
        }
        for (qid, list) in &self.runs {
            for (rank, hit) in list.iter().enumerate() {
                writeln!(w, "{qid} Q0 {} {} {} {}", hit.doc, rank + 1, hit.score, self.tag)?;
            }
        }
        Ok(())
    }

    /// Parses a run, requiring ranks `1..n` in order and non-increasing
    /// scores per query.
    pub fn parse<R: BufRead>(reader: R) -> Result<Self> {
        let mut run = RunFile::default();
        let mut pending: BTreeMap<String, Vec<ScoredDoc>> = BTreeMap::new();
        for (n, line) in reader.lines().enumerate() {
            let line = line?;
            let line_no = n + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            if let Some(comment) = trimmed.strip_prefix('#') {
                run.header.push(comment.trim().to_string());
                continue;
            }
            let fields: Vec<&str> = trimmed.split_whitespace().collect();
            let [qid, _q0, doc, rank, score, tag] = fields[..] else {
                return Err(Error::parse(
                    line_no,
                    format!("expected 6 fields, found {}", fields.len()),
                ));
            };
            let rank: usize = rank
                .parse()
                .map_err(|_| Error::parse(line_no, format!("bad rank {rank:?}")))?;
            let score: f64 = score
                .parse()
                .map_err(|_| Error::parse(line_no, format!("bad score {score:?}")))?;
            if !score.is_finite() {
                return Err(Error::parse(line_no, "non-finite score"));
            }
            let doc = DocId::new(doc).map_err(|e| Error::parse(line_no, e.to_string()))?;
            if run.tag.is_empty() {
                run.tag = tag.to_string();
            }
            let hits = pending.entry(qid.to_string()).or_default();
            if rank != hits.len() + 1 {
                return Err(Error::parse(
                    line_no,
                    format!("rank {rank} out of sequence for query {qid}"),
                ));
            }
            if hits.last().is_some_and(|prev| prev.score < score) {
                return Err(Error::parse(
                    line_no,
                    format!("score increases at rank {rank} for query {qid}"),
                ));
            }
            hits.push(ScoredDoc::new(doc, score));
        }
        for (qid, hits) in pending {
            let list = RankedList::new(hits).map_err(|e| Error::parse(0, format!("query {qid}: {e}")))?;
            run.runs.insert(qid, list);
        }
        Ok(run)
    }
}

fn judged<'a>(qrels: &'a Qrels, qid: &str) -> Option<&'a HashMap<DocId, u32>> {
    let judged = qrels.for_query(qid);
    if judged.is_none() {
        warn!("query {qid} has no relevance judgments");
    }
    judged
}

/// nDCG with exponential gain `2^grade - 1` and `log2(rank + 1)` discount.
pub fn ndcg_at(run: &RankedList, qrels: &Qrels, qid: &str, k: usize) -> f64 {
    let Some(grades) = judged(qrels, qid) else {
        return 0.0;
    };
    let gain = |g: u32| 2f64.powi(g as i32) - 1.0;
    let discount = |i: usize| ((i + 2) as f64).log2();
    let dcg: f64 = run
        .iter()
        .take(k)
        .enumerate()
        .map(|(i, h)| gain(grades.get(&h.doc).copied().unwrap_or(0)) / discount(i))
        .sum();
    let mut ideal: Vec<u32> = grades.values().copied().filter(|&g| g > 0).collect();
    ideal.sort_unstable_by(|a, b| b.cmp(a));
    let idcg: f64 = ideal
        .iter()
        .take(k)
        .enumerate()
        .map(|(i, &g)| gain(g) / discount(i))
        .sum();
    if idcg == 0.0 {
        0.0
    } else {
        dcg / idcg
    }
}

fn relevant_count(grades: &HashMap<DocId, u32>, min_grade: u32) -> usize {
    grades.values().filter(|&&g| g >= min_grade).count()
}

/// Average precision within depth `k`, normalized by all relevant documents.
pub fn ap_at(run: &RankedList, qrels: &Qrels, qid: &str, k: usize, min_grade: u32) -> f64 {
    let Some(grades) = judged(qrels, qid) else {
        return 0.0;
    };
    let total = relevant_count(grades, min_grade);
    if total == 0 {
        return 0.0;
    }
    let mut found = 0;
    let mut sum = 0.0;
    for (i, h) in run.iter().take(k).enumerate() {
        if grades.get(&h.doc).is_some_and(|&g| g >= min_grade) {
            found += 1;
            sum += found as f64 / (i + 1) as f64;
        }
    }
    sum / total as f64
}

pub fn recall_at(run: &RankedList, qrels: &Qrels, qid: &str, k: usize, min_grade: u32) -> f64 {
    let Some(grades) = judged(qrels, qid) else {
        return 0.0;
    };
    let total = relevant_count(grades, min_grade);
    if total == 0 {
        return 0.0;
    }
    let found = run
        .iter()
        .take(k)
        .filter(|h| grades.get(&h.doc).is_some_and(|&g| g >= min_grade))
        .count();
    found as f64 / total as f64
}

pub fn rr_at(run: &RankedList, qrels: &Qrels, qid: &str, k: usize, min_grade: u32) -> f64 {
    let Some(grades) = judged(qrels, qid) else {
        return 0.0;
    };
    run.iter()
        .take(k)
        .position(|h| grades.get(&h.doc).is_some_and(|&g| g >= min_grade))
        .map_or(0.0, |i| 1.0 / (i + 1) as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Metric {
    Ndcg(usize),
    Ap(usize),
    Recall(usize),
    Rr(usize),
}

impl Metric {
    pub fn compute(&self, run: &RankedList, qrels: &Qrels, qid: &str, min_grade: u32) -> f64 {
        match *self {
            Metric::Ndcg(k) => ndcg_at(run, qrels, qid, k),
            Metric::Ap(k) => ap_at(run, qrels, qid, k, min_grade),
            Metric::Recall(k) => recall_at(run, qrels, qid, k, min_grade),
            Metric::Rr(k) => rr_at(run, qrels, qid, k, min_grade),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Metric::Ndcg(k) => write!(f, "ndcg@{k}"),
            Metric::Ap(k) => write!(f, "ap@{k}"),
            Metric::Recall(k) => write!(f, "recall@{k}"),
            Metric::Rr(k) => write!(f, "rr@{k}"),
        }
    }
}

impl FromStr for Metric {
    type Err = Error;

    /// Accepts `ndcg@10`, `ap@1000`, `map@1000`, `recall@100`, `rr@10`, `mrr@10`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("unknown metric {s:?}"));
        let (name, k) = s.split_once('@').ok_or_else(bad)?;
        let k: usize = k.parse().map_err(|_| bad())?;
        if k == 0 {
            return Err(bad());
        }
        match name.to_ascii_lowercase().as_str() {
            "ndcg" => Ok(Metric::Ndcg(k)),
            "ap" | "map" => Ok(Metric::Ap(k)),
            "recall" | "r" => Ok(Metric::Recall(k)),
            "rr" | "mrr" => Ok(Metric::Rr(k)),
            _ => Err(bad()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub metrics: Vec<Metric>,
    /// Per-query values, one per metric, in query-id order.
    pub per_query: BTreeMap<String, Vec<f64>>,
    pub mean: Vec<f64>,
}

/// Scores every run query that has judgments; others are skipped with a
/// warning. Means are over the scored queries.
pub fn evaluate(run: &RunFile, qrels: &Qrels, metrics: &[Metric], min_grade: u32) -> Evaluation {
    let mut per_query = BTreeMap::new();
    for (qid, list) in &run.runs {
        if qrels.for_query(qid).is_none() {
            warn!("skipping query {qid}: no relevance judgments");
            continue;
        }
        let values = metrics.iter().map(|m| m.compute(list, qrels, qid, min_grade)).collect();
        per_query.insert(qid.clone(), values);
    }
    let n = per_query.len();
    let mean = (0..metrics.len())
        .map(|i| {
            if n == 0 {
                0.0
            } else {
                per_query.values().map(|v: &Vec<f64>| v[i]).sum::<f64>() / n as f64
            }
        })
        .collect();
    Evaluation {
        metrics: metrics.to_vec(),
        per_query,
        mean,
    }
}

impl Evaluation {
    /// trec_eval-like lines `metric<TAB>qid<TAB>value`, `all` for the mean.
    pub fn write_table<W: Write>(&self, mut w: W, per_query: bool) -> Result<()> {
        for (i, m) in self.metrics.iter().enumerate() {
            if per_query {
                for (qid, values) in &self.per_query {
                    writeln!(w, "{m}\t{qid}\t{:.5}", values[i])?;
                }
            }
            writeln!(w, "{m}\tall\t{:.5}", self.mean[i])?;
        }
        Ok(())
    }
}

pub(crate) fn check_qid(qid: &str, line: usize) -> Result<()> {
    if !is_valid_token(qid) {
        return Err(Error::parse(line, format!("invalid query id {qid:?}")));
    }
    Ok(())
}
