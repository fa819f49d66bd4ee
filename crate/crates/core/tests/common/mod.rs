//! Reference implementations used as test oracles. They recompute results
//! from raw inputs without touching the library's index structures.

#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};

use fastforward::{DocId, RankedList, ScoredDoc};
use rand::Rng;

/// Lowercase alphanumeric runs, written as a character loop.
pub fn tokens(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for c in text.chars() {
        if c.is_alphanumeric() {
            cur.push(c);
        } else if !cur.is_empty() {
            out.push(cur.to_lowercase());
            cur.clear();
        }
    }
    if !cur.is_empty() {
        out.push(cur.to_lowercase());
    }
    out
}

/// Scores every document against the query from scratch.
pub fn brute_bm25(corpus: &[(String, String)], query: &str, k1: f64, b: f64) -> Vec<(String, f64)> {
    let docs: Vec<(String, Vec<String>)> = corpus.iter().map(|(id, t)| (id.clone(), tokens(t))).collect();
    let n = docs.len() as f64;
    let avg = docs.iter().map(|(_, t)| t.len() as f64).sum::<f64>() / n;
    let mut qterms: Vec<String> = tokens(query);
    qterms.sort();
    qterms.dedup();
    let mut out = Vec::new();
    for (id, toks) in &docs {
        let mut score = 0.0;
        let mut matched = false;
        for term in &qterms {
            let tf = toks.iter().filter(|t| *t == term).count() as f64;
            if tf == 0.0 {
                continue;
            }
            matched = true;
            let df = docs.iter().filter(|(_, t)| t.contains(term)).count() as f64;
            let idf = (1.0 + (n - df + 0.5) / (df + 0.5)).ln();
            let len = toks.len() as f64;
            score += idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * len / avg));
        }
        if matched {
            out.push((id.clone(), score));
        }
    }
    out.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    out
}

pub fn random_corpus<R: Rng>(rng: &mut R, docs: usize, vocab: usize, max_len: usize) -> Vec<(String, String)> {
    (0..docs)
        .map(|i| {
            let len = rng.gen_range(0..=max_len);
            let text: Vec<String> = (0..len).map(|_| format!("w{}", rng.gen_range(0..vocab))).collect();
            (format!("doc{i:05}"), text.join(" "))
        })
        .collect()
}

pub fn list(pairs: impl IntoIterator<Item = (String, f64)>) -> RankedList {
    RankedList::new(
        pairs
            .into_iter()
            .map(|(d, s)| ScoredDoc::new(DocId::new(d).unwrap(), s))
            .collect(),
    )
    .unwrap()
}

pub fn ids(list: &RankedList) -> Vec<String> {
    list.docs().map(|d| d.to_string()).collect()
}

/// Plain-data evaluator over (qid -> doc -> grade) and (qid -> ranked ids).
pub struct BruteEvaluator {
    pub qrels: BTreeMap<String, HashMap<String, u32>>,
    pub run: BTreeMap<String, Vec<String>>,
}

impl BruteEvaluator {
    pub fn from_text(qrels: &str, run: &str) -> Self {
        let mut q: BTreeMap<String, HashMap<String, u32>> = BTreeMap::new();
        for line in qrels.lines().filter(|l| !l.trim().is_empty()) {
            let f: Vec<&str> = line.split_whitespace().collect();
            q.entry(f[0].into())
                .or_default()
                .insert(f[2].into(), f[3].parse().unwrap());
        }
        let mut r: BTreeMap<String, Vec<(usize, String)>> = BTreeMap::new();
        for line in run.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#')) {
            let f: Vec<&str> = line.split_whitespace().collect();
            r.entry(f[0].into())
                .or_default()
                .push((f[3].parse().unwrap(), f[2].into()));
        }
        let run = r
            .into_iter()
            .map(|(q, mut v)| {
                v.sort();
                (q, v.into_iter().map(|(_, d)| d).collect())
            })
            .collect();
        Self { qrels: q, run }
    }

    fn is_rel(&self, q: &str, d: &str, min: u32) -> bool {
        self.qrels[q].get(d).is_some_and(|&g| g >= min)
    }

    fn relevant(&self, q: &str, min: u32) -> usize {
        self.qrels[q].values().filter(|&&g| g >= min).count()
    }

    pub fn ndcg(&self, q: &str, k: usize) -> f64 {
        let gains: Vec<f64> = self.run[q]
            .iter()
            .map(|d| self.qrels[q].get(d).map_or(0.0, |&g| (1u64 << g) as f64 - 1.0))
            .collect();
        let dcg = |g: &[f64]| -> f64 {
            g.iter()
                .take(k)
                .enumerate()
                .map(|(i, x)| x / (i as f64 + 2.0).log2())
                .sum()
        };
        let mut ideal: Vec<f64> = self.qrels[q].values().map(|&g| (1u64 << g) as f64 - 1.0).collect();
        ideal.sort_by(|a, b| b.total_cmp(a));
        let idcg = dcg(&ideal);
        if idcg == 0.0 {
            0.0
        } else {
            dcg(&gains) / idcg
        }
    }

    /// AP as the mean over relevant documents of precision at their rank.
    pub fn ap(&self, q: &str, k: usize, min: u32) -> f64 {
        let total = self.relevant(q, min);
        if total == 0 {
            return 0.0;
        }
        let top: Vec<&String> = self.run[q].iter().take(k).collect();
        let mut sum = 0.0;
        for (rank, d) in top.iter().enumerate() {
            if self.is_rel(q, d, min) {
                let rel_above = top[..=rank].iter().filter(|x| self.is_rel(q, x, min)).count();
                sum += rel_above as f64 / (rank + 1) as f64;
            }
        }
        sum / total as f64
    }

    pub fn recall(&self, q: &str, k: usize, min: u32) -> f64 {
        let total = self.relevant(q, min);
        if total == 0 {
            return 0.0;
        }
        self.run[q].iter().take(k).filter(|d| self.is_rel(q, d, min)).count() as f64 / total as f64
    }

    pub fn rr(&self, q: &str, k: usize, min: u32) -> f64 {
        for (i, d) in self.run[q].iter().take(k).enumerate() {
            if self.is_rel(q, d, min) {
                return 1.0 / (i + 1) as f64;
            }
        }
        0.0
    }
}
