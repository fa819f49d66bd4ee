//! Fast-forward index: pre-computed passage vectors per document with
//! constant-time lookup and maxP dense scoring.
//!
//! # File format
//!
//! Little-endian throughout.
//!
//! ```text
//! "FFWD"  version:u32  tag:u8 (=1)  dimension:u32  doc_count:u64
//! doc_count x { id_len:u16  id:[u8]  passages:u32  passages*dimension x f32 }
//! doc_count x { id_len:u16  id:[u8]  record_offset:u64 }
//! table_offset:u64
//! ```
//!
//! Records are written in ascending id order. `record_offset` points at the
//! record's `id_len` field; `table_offset` points at the first table entry.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::container::{self, CountingWriter, SectionTag};
use crate::error::{Error, Result};
use crate::score::dot_slices;
use crate::types::{DenseVector, DocId, RankedList, ScoredDoc};

#[derive(Clone, Debug, PartialEq)]
pub struct ForwardIndex {
    dimension: usize,
    ids: Vec<DocId>,
    /// (first vector, vector count) per entry of `ids`.
    spans: Vec<(usize, usize)>,
    positions: HashMap<DocId, usize>,
    data: Vec<f32>,
}

/// Borrowed view of one document's passage vectors, in original order.
#[derive(Clone, Copy, Debug)]
pub struct Passages<'a> {
    dimension: usize,
    data: &'a [f32],
}

impl<'a> Passages<'a> {
    pub fn len(&self) -> usize {
        self.data.len() / self.dimension
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<&'a [f32]> {
        self.data.get(i * self.dimension..(i + 1) * self.dimension)
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'a, f32> {
        self.data.chunks_exact(self.dimension)
    }

    pub fn to_vectors(&self) -> Vec<DenseVector> {
        self.iter()
            .map(|v| DenseVector::new(v.to_vec()).expect("stored vectors are finite"))
            .collect()
    }

    /// Max over passages of the dot product with `query`.
    fn max_dot(&self, query: &[f32]) -> f32 {
        self.iter()
            .map(|p| dot_slices(query, p))
            .fold(f32::NEG_INFINITY, f32::max)
    }
}

impl ForwardIndex {
    /// Builds an index from per-document passage vectors.
    pub fn build<I>(documents: I) -> Result<Self>
    where
        I: IntoIterator<Item = (DocId, Vec<DenseVector>)>,
    {
        let mut docs: Vec<(DocId, Vec<DenseVector>)> = documents.into_iter().collect();
        docs.sort_by(|a, b| a.0.cmp(&b.0));
        if let Some(w) = docs.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::DuplicateDocId(w[0].0.clone()));
        }
        let dimension = docs
            .iter()
            .find_map(|(_, p)| p.first().map(DenseVector::dim))
            .ok_or(Error::Empty("forward index"))?;
        if dimension == 0 {
            return Err(Error::InvalidConfig("vector dimension must be positive".into()));
        }

        let total: usize = docs.iter().map(|(_, p)| p.len()).sum();
        let mut data = Vec::with_capacity(total * dimension);
        let mut ids = Vec::with_capacity(docs.len());
        let mut spans = Vec::with_capacity(docs.len());
        for (id, passages) in docs {
            if passages.is_empty() {
                return Err(Error::Empty("passage list"));
            }
            let start = data.len() / dimension;
            for v in &passages {
                v.check_dim(dimension)?;
                data.extend_from_slice(v.as_slice());
            }
            spans.push((start, passages.len()));
            ids.push(id);
        }
        Ok(Self::assemble(dimension, ids, spans, data))
    }

    fn assemble(dimension: usize, ids: Vec<DocId>, spans: Vec<(usize, usize)>, data: Vec<f32>) -> Self {
        let positions = ids.iter().cloned().enumerate().map(|(i, id)| (id, i)).collect();
        Self {
            dimension,
            ids,
            spans,
            positions,
            data,
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn doc_count(&self) -> usize {
        self.ids.len()
    }

    pub fn vector_count(&self) -> usize {
        self.data.len() / self.dimension
    }

    /// Document ids in ascending order.
    pub fn doc_ids(&self) -> &[DocId] {
        &self.ids
    }

    pub fn contains(&self, doc: &str) -> bool {
        self.positions.contains_key(doc)
    }

    fn passages_at(&self, pos: usize) -> Passages<'_> {
        let (start, count) = self.spans[pos];
        Passages {
            dimension: self.dimension,
            data: &self.data[start * self.dimension..(start + count) * self.dimension],
        }
    }

    pub fn lookup(&self, doc: &str) -> Result<Passages<'_>> {
        match self.positions.get(doc) {
            Some(&pos) => Ok(self.passages_at(pos)),
            None => Err(Error::MissingDocument(missing_id(doc))),
        }
    }

    /// Documents with their passages, in ascending id order.
    pub fn iter(&self) -> impl Iterator<Item = (&DocId, Passages<'_>)> + '_ {
        self.ids.iter().enumerate().map(|(i, id)| (id, self.passages_at(i)))
    }

    /// maxP dense score: the best passage dot product with `query`.
    pub fn dense_score(&self, query: &DenseVector, doc: &str) -> Result<f64> {
        query.check_dim(self.dimension)?;
        Ok(f64::from(self.lookup(doc)?.max_dot(query.as_slice())))
    }

    /// Dense score without the dimension check; callers validate `query` once.
    pub(crate) fn dense_score_unchecked(&self, query: &[f32], doc: &str) -> Result<f64> {
        Ok(f64::from(self.lookup(doc)?.max_dot(query)))
    }

    /// Exhaustive dense retrieval: scores every document, keeps the best `k_d`.
    pub fn dense_topk(&self, query: &DenseVector, k_d: usize) -> Result<RankedList> {
        query.check_dim(self.dimension)?;
        let q = query.as_slice();
        let hits: Vec<ScoredDoc> = (0..self.ids.len())
            .into_par_iter()
            .map(|i| ScoredDoc::new(self.ids[i].clone(), f64::from(self.passages_at(i).max_dot(q))))
            .collect();
        Ok(RankedList::top_k_distinct(hits, k_d))
    }

    pub fn write_to<W: Write>(&self, w: W) -> Result<W> {
        let mut w = CountingWriter::new(w);
        container::write_header(&mut w, SectionTag::Forward)?;
        let dim = u32::try_from(self.dimension).map_err(|_| Error::format("dimension does not fit in u32"))?;
        w.write_all(&dim.to_le_bytes())?;
        w.write_all(&(self.ids.len() as u64).to_le_bytes())?;

        let mut offsets = Vec::with_capacity(self.ids.len());
        for (id, passages) in self.iter() {
            offsets.push(w.written);
            container::write_str(&mut w, id.as_str())?;
            w.write_all(&(passages.len() as u32).to_le_bytes())?;
            for x in passages.data {
                w.write_all(&x.to_le_bytes())?;
            }
        }
        let table_offset = w.written;
        for (id, offset) in self.ids.iter().zip(offsets) {
            container::write_str(&mut w, id.as_str())?;
            w.write_all(&offset.to_le_bytes())?;
        }
        w.write_all(&table_offset.to_le_bytes())?;
        Ok(w.into_inner())
    }

    /// Reads a whole index into memory, checking the offset table against
    /// the records it indexes.
    pub fn read_from<R: Read>(r: R) -> Result<Self> {
        let mut r = CountingReader { inner: r, read: 0 };
        container::read_header(&mut r, SectionTag::Forward)?;
        let dimension = container::read_u32(&mut r)? as usize;
        if dimension == 0 {
            return Err(Error::format("dimension is zero"));
        }
        let n = container::read_u64(&mut r)? as usize;
        if n == 0 {
            return Err(Error::format("index has no documents"));
        }
        let mut ids = Vec::with_capacity(n.min(1 << 20));
        let mut spans = Vec::with_capacity(n.min(1 << 20));
        let mut offsets = Vec::with_capacity(n.min(1 << 20));
        let mut data = Vec::new();
        for _ in 0..n {
            offsets.push(r.read);
            let id = read_doc_id(&mut r)?;
            if ids.last().is_some_and(|prev: &DocId| *prev >= id) {
                return Err(Error::format("records are not in strictly ascending id order"));
            }
            let count = container::read_u32(&mut r)? as usize;
            if count == 0 {
                return Err(Error::format(format!("document `{id}` has no passages")));
            }
            let start = data.len() / dimension;
            container::read_f32s(&mut r, &mut data, count * dimension)?;
            if data[start * dimension..].iter().any(|x| !x.is_finite()) {
                return Err(Error::format(format!("document `{id}` has non-finite values")));
            }
            spans.push((start, count));
            ids.push(id);
        }
        let table_offset = r.read;
        for (id, offset) in ids.iter().zip(&offsets) {
            let table_id = read_doc_id(&mut r)?;
            let table_off = container::read_u64(&mut r)?;
            if table_id != *id || table_off != *offset {
                return Err(Error::format(format!("offset table disagrees with record `{id}`")));
            }
        }
        if container::read_u64(&mut r)? != table_offset {
            return Err(Error::format("trailing table offset is wrong"));
        }
        let mut rest = [0u8; 1];
        if r.inner.read(&mut rest)? != 0 {
            return Err(Error::format("trailing bytes after offset table"));
        }
        Ok(Self::assemble(dimension, ids, spans, data))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = self.write_to(BufWriter::new(File::create(path)?))?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(BufReader::new(File::open(path)?))
    }
}

fn missing_id(doc: &str) -> DocId {
    DocId::new(doc).unwrap_or_else(|_| DocId::new(format!("{doc:?}")).expect("debug form is non-empty"))
}

fn read_doc_id<R: Read>(r: &mut R) -> Result<DocId> {
    let id = container::read_str(r)?;
    DocId::new(&id).map_err(|e| Error::format(e.to_string()))
}

struct CountingReader<R> {
    inner: R,
    read: u64,
}

impl<R: Read> Read for CountingReader<R> {
    fn read(&mut self, buf: &mut [u8]) -> std::io::Result<usize> {
        let n = self.inner.read(buf)?;
        self.read += n as u64;
        Ok(n)
    }
}

/// Opens an index file through its trailing offset table and reads
/// documents on demand, without loading the vectors up front.
pub struct ForwardIndexReader<R> {
    inner: R,
    dimension: usize,
    offsets: HashMap<DocId, u64>,
}

impl ForwardIndexReader<BufReader<File>> {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        Self::new(BufReader::new(File::open(path)?))
    }
}

impl<R: Read + Seek> ForwardIndexReader<R> {
    pub fn new(mut inner: R) -> Result<Self> {
        container::read_header(&mut inner, SectionTag::Forward)?;
        let dimension = container::read_u32(&mut inner)? as usize;
        let n = container::read_u64(&mut inner)?;
        let end = inner.seek(SeekFrom::End(0))?;
        if end < container::HEADER_LEN + 12 + 8 {
            return Err(Error::format("file too short"));
        }
        inner.seek(SeekFrom::End(-8))?;
        let table_offset = container::read_u64(&mut inner)?;
        if table_offset >= end - 8 {
            return Err(Error::format("trailing table offset out of range"));
        }
        inner.seek(SeekFrom::Start(table_offset))?;
        let mut offsets = HashMap::with_capacity(n.min(1 << 20) as usize);
        for _ in 0..n {
            let id = read_doc_id(&mut inner)?;
            let offset = container::read_u64(&mut inner)?;
            if offsets.insert(id.clone(), offset).is_some() {
                return Err(Error::format(format!("offset table lists `{id}` twice")));
            }
        }
        Ok(Self {
            inner,
            dimension,
            offsets,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn doc_count(&self) -> usize {
        self.offsets.len()
    }

    pub fn offset(&self, doc: &str) -> Option<u64> {
        self.offsets.get(doc).copied()
    }

    pub fn read(&mut self, doc: &str) -> Result<Vec<DenseVector>> {
        let offset = self
            .offset(doc)
            .ok_or_else(|| Error::MissingDocument(missing_id(doc)))?;
        self.inner.seek(SeekFrom::Start(offset))?;
        let id = read_doc_id(&mut self.inner)?;
        if id.as_str() != doc {
            return Err(Error::format(format!("offset for `{doc}` points at `{id}`")));
        }
        let count = container::read_u32(&mut self.inner)? as usize;
        let mut data = Vec::with_capacity(count * self.dimension);
        container::read_f32s(&mut self.inner, &mut data, count * self.dimension)?;
        data.chunks_exact(self.dimension)
            .map(|c| DenseVector::new(c.to_vec()))
            .collect()
    }
}
