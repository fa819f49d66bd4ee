//! BM25 inverted index used for first-stage retrieval.
//!
//! Scoring follows the Robertson form with a non-negative idf:
//!
//! ```text
//! idf(t)      = ln(1 + (N - df + 0.5) / (df + 0.5))
//! score(q, d) = sum over distinct query terms t in d of
//!               idf(t) * tf * (k1 + 1) / (tf + k1 * (1 - b + b * len(d) / avg_len))
//! ```

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::container::{self, SectionTag};
use crate::encode::tokenize;
use crate::error::{Error, Result};
use crate::types::{DocId, RankedList, ScoredDoc};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Bm25Params {
    /// Tuned for passage-length collections.
    pub const PASSAGE: Bm25Params = Bm25Params { k1: 0.82, b: 0.68 };
    /// Tuned for full-document collections.
    pub const DOCUMENT: Bm25Params = Bm25Params { k1: 4.46, b: 0.82 };

    pub fn new(k1: f64, b: f64) -> Result<Self> {
        if !(k1.is_finite() && k1 >= 0.0) {
            return Err(Error::InvalidConfig(format!("k1 must be finite and >= 0, got {k1}")));
        }
        if !(0.0..=1.0).contains(&b) {
            return Err(Error::InvalidConfig(format!("b must lie in [0, 1], got {b}")));
        }
        Ok(Self { k1, b })
    }
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self::PASSAGE
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Posting {
    /// Ordinal into the id-sorted document table.
    pub doc: u32,
    pub tf: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SparseIndex {
    docs: Vec<DocId>,
    doc_lengths: Vec<u32>,
    postings: BTreeMap<String, Vec<Posting>>,
    avg_doc_length: f64,
    params: Bm25Params,
}

impl SparseIndex {
    /// Indexes `corpus`. Documents are stored sorted by id so the result
    /// does not depend on input order.
    pub fn build<I, T>(corpus: I, params: Bm25Params) -> Result<Self>
    where
        I: IntoIterator<Item = (DocId, T)>,
        T: AsRef<str>,
    {
        let mut tokenized: Vec<(DocId, Vec<String>)> = corpus
            .into_iter()
            .map(|(id, text)| (id, tokenize(text.as_ref())))
            .collect();
        if tokenized.is_empty() {
            return Err(Error::Empty("corpus"));
        }
        tokenized.sort_by(|a, b| a.0.cmp(&b.0));
        if let Some(w) = tokenized.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::DuplicateDocId(w[0].0.clone()));
        }
        if tokenized.len() > u32::MAX as usize {
            return Err(Error::InvalidConfig("too many documents".into()));
        }

        let mut postings: BTreeMap<String, Vec<Posting>> = BTreeMap::new();
        let mut docs = Vec::with_capacity(tokenized.len());
        let mut doc_lengths = Vec::with_capacity(tokenized.len());
        for (ordinal, (id, tokens)) in tokenized.into_iter().enumerate() {
            let mut tf: BTreeMap<String, u32> = BTreeMap::new();
            for t in &tokens {
                *tf.entry(t.clone()).or_default() += 1;
            }
            // ordinals increase, so each postings list stays sorted by id
            for (term, count) in tf {
                postings.entry(term).or_default().push(Posting {
                    doc: ordinal as u32,
                    tf: count,
                });
            }
            docs.push(id);
            doc_lengths.push(tokens.len() as u32);
        }
        Ok(Self::assemble(docs, doc_lengths, postings, params))
    }

    fn assemble(
        docs: Vec<DocId>,
        doc_lengths: Vec<u32>,
        postings: BTreeMap<String, Vec<Posting>>,
        params: Bm25Params,
    ) -> Self {
        let total: u64 = doc_lengths.iter().map(|&l| u64::from(l)).sum();
        let avg_doc_length = total as f64 / doc_lengths.len() as f64;
        Self {
            docs,
            doc_lengths,
            postings,
            avg_doc_length,
            params,
        }
    }

    pub fn doc_count(&self) -> usize {
        self.docs.len()
    }

    pub fn avg_doc_length(&self) -> f64 {
        self.avg_doc_length
    }

    pub fn params(&self) -> Bm25Params {
        self.params
    }

    pub fn vocabulary_size(&self) -> usize {
        self.postings.len()
    }

    pub fn docs(&self) -> &[DocId] {
        &self.docs
    }

    pub fn doc_length(&self, doc: &str) -> Option<u32> {
        let i = self.docs.binary_search_by(|d| d.as_str().cmp(doc)).ok()?;
        Some(self.doc_lengths[i])
    }

    pub fn postings(&self, term: &str) -> &[Posting] {
        self.postings.get(term).map_or(&[], Vec::as_slice)
    }

    pub fn doc_id(&self, ordinal: u32) -> &DocId {
        &self.docs[ordinal as usize]
    }

    pub fn idf(&self, term: &str) -> f64 {
        let n = self.docs.len() as f64;
        let df = self.postings(term).len() as f64;
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }

    /// Top `k_s` documents by BM25 for the query text. Documents matching no
    /// query term are never returned.
    pub fn retrieve(&self, query: &str, k_s: usize) -> RankedList {
        let Bm25Params { k1, b } = self.params;
        // Sorted distinct terms: each term counts once, and the summation
        // order (hence every bit of the score) ignores query word order.
        let mut terms = tokenize(query);
        terms.sort_unstable();
        terms.dedup();

        let mut acc: HashMap<u32, f64> = HashMap::new();
        for term in &terms {
            let list = self.postings(term);
            if list.is_empty() {
                continue;
            }
            let idf = self.idf(term);
            for p in list {
                let tf = f64::from(p.tf);
                let len = f64::from(self.doc_lengths[p.doc as usize]);
                let norm = k1 * (1.0 - b + b * len / self.avg_doc_length);
                *acc.entry(p.doc).or_default() += idf * tf * (k1 + 1.0) / (tf + norm);
            }
        }
        let hits = acc
            .into_iter()
            .map(|(doc, score)| ScoredDoc::new(self.docs[doc as usize].clone(), score))
            .collect();
        RankedList::top_k_distinct(hits, k_s)
    }

    /// Serializes as: envelope, k1 f64, b f64, doc count u64, per document
    /// (id, length u32), term count u64, per term (term, posting count u32,
    /// per posting (doc ordinal u32, tf u32)). Terms appear in byte order.
    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        container::write_header(w, SectionTag::Sparse)?;
        w.write_all(&self.params.k1.to_le_bytes())?;
        w.write_all(&self.params.b.to_le_bytes())?;
        w.write_all(&(self.docs.len() as u64).to_le_bytes())?;
        for (id, len) in self.docs.iter().zip(&self.doc_lengths) {
            container::write_str(w, id.as_str())?;
            w.write_all(&len.to_le_bytes())?;
        }
        w.write_all(&(self.postings.len() as u64).to_le_bytes())?;
        for (term, list) in &self.postings {
            container::write_str(w, term)?;
            w.write_all(&(list.len() as u32).to_le_bytes())?;
            for p in list {
                w.write_all(&p.doc.to_le_bytes())?;
                w.write_all(&p.tf.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        container::read_header(r, SectionTag::Sparse)?;
        let params = Bm25Params::new(container::read_f64(r)?, container::read_f64(r)?)
            .map_err(|e| Error::format(e.to_string()))?;
        let n = container::read_u64(r)? as usize;
        if n == 0 {
            return Err(Error::format("sparse index has no documents"));
        }
        let mut docs = Vec::with_capacity(n.min(1 << 20));
        let mut doc_lengths = Vec::with_capacity(n.min(1 << 20));
        for _ in 0..n {
            let id = container::read_str(r)?;
            let id = DocId::new(&id).map_err(|e| Error::format(e.to_string()))?;
            if docs.last().is_some_and(|prev: &DocId| *prev >= id) {
                return Err(Error::format("document table is not strictly sorted"));
            }
            docs.push(id);
            doc_lengths.push(container::read_u32(r)?);
        }
        let terms = container::read_u64(r)?;
        let mut postings = BTreeMap::new();
        for _ in 0..terms {
            let term = container::read_str(r)?;
            let count = container::read_u32(r)? as usize;
            let mut list = Vec::with_capacity(count.min(n));
            for _ in 0..count {
                let doc = container::read_u32(r)?;
                let tf = container::read_u32(r)?;
                if doc as usize >= n {
                    return Err(Error::format(format!(
                        "posting for `{term}` points past the document table"
                    )));
                }
                list.push(Posting { doc, tf });
            }
            postings.insert(term, list);
        }
        Ok(Self::assemble(docs, doc_lengths, postings, params))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(&mut BufReader::new(File::open(path)?))
    }
}
