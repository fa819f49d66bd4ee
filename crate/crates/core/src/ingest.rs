//! Text interchange formats: corpora, queries, and vector files.
//!
//! * corpus TSV: `doc_id<TAB>text`
//! * corpus JSONL: `{"id": "...", "text": "..."}`
//! * vector JSONL: `{"id": "...", "passages": [[f, ...], ...]}`
//! * query TSV: `qid<TAB>text`
//! * query-vector TSV: `qid<TAB>f,f,...`
//!
//! Floats are written in shortest round-trip form, so parsing a written
//! file reproduces every 32-bit value exactly. Errors carry 1-based line
//! numbers.

use std::collections::HashSet;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::check_qid;
use crate::forward::ForwardIndex;
use crate::types::{DenseVector, DocId, Query};

fn lines<R: BufRead>(reader: R) -> impl Iterator<Item = Result<(usize, String)>> {
    reader
        .lines()
        .enumerate()
        .map(|(i, l)| l.map(|l| (i + 1, l)).map_err(Error::from))
        .filter(|r| !matches!(r, Ok((_, l)) if l.trim().is_empty()))
}

fn doc_id(id: &str, line: usize) -> Result<DocId> {
    DocId::new(id).map_err(|e| Error::parse(line, e.to_string()))
}

pub fn read_corpus_tsv<R: BufRead>(reader: R) -> Result<Vec<(DocId, String)>> {
    let mut out = Vec::new();
    for item in lines(reader) {
        let (n, line) = item?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        let (id, text) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(n, "expected `doc_id<TAB>text`"))?;
        out.push((doc_id(id, n)?, text.to_string()));
    }
    Ok(out)
}

#[derive(Deserialize)]
struct CorpusLine {
    id: String,
    text: String,
}

pub fn read_corpus_jsonl<R: BufRead>(reader: R) -> Result<Vec<(DocId, String)>> {
    let mut out = Vec::new();
    for item in lines(reader) {
        let (n, line) = item?;
        let rec: CorpusLine = serde_json::from_str(&line).map_err(|e| Error::parse(n, format!("invalid JSON: {e}")))?;
        out.push((doc_id(&rec.id, n)?, rec.text));
    }
    Ok(out)
}

#[derive(Serialize, Deserialize)]
struct VectorLine {
    id: String,
    passages: Vec<Vec<f32>>,
}

/// Reads per-document passage vectors, validating ids, dimensions and
/// values line by line.
pub fn read_vectors_jsonl<R: BufRead>(reader: R) -> Result<Vec<(DocId, Vec<DenseVector>)>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    let mut dimension = None;
    for item in lines(reader) {
        let (n, line) = item?;
        let rec: VectorLine = serde_json::from_str(&line).map_err(|e| Error::parse(n, format!("invalid JSON: {e}")))?;
        let id = doc_id(&rec.id, n)?;
        if !seen.insert(id.clone()) {
            return Err(Error::parse(n, format!("duplicate document id `{id}`")));
        }
        if rec.passages.is_empty() {
            return Err(Error::parse(n, format!("document `{id}` has no passages")));
        }
        let mut passages = Vec::with_capacity(rec.passages.len());
        for p in rec.passages {
            let dim = *dimension.get_or_insert(p.len());
            if p.len() != dim || dim == 0 {
                return Err(Error::parse(n, format!("expected dimension {dim}, found {}", p.len())));
            }
            passages.push(DenseVector::new(p).map_err(|e| Error::parse(n, e.to_string()))?);
        }
        out.push((id, passages));
    }
    Ok(out)
}

pub fn read_forward_jsonl<R: BufRead>(reader: R) -> Result<ForwardIndex> {
    ForwardIndex::build(read_vectors_jsonl(reader)?)
}

/// One line per document, in ascending id order.
pub fn write_vectors_jsonl<W: Write>(index: &ForwardIndex, mut w: W) -> Result<()> {
    for (id, passages) in index.iter() {
        let rec = VectorLine {
            id: id.to_string(),
            passages: passages.iter().map(<[f32]>::to_vec).collect(),
        };
        serde_json::to_writer(&mut w, &rec).map_err(|e| Error::Io(e.into()))?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_queries_tsv<R: BufRead>(reader: R) -> Result<Vec<Query>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for item in lines(reader) {
        let (n, line) = item?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        let (qid, text) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(n, "expected `qid<TAB>text`"))?;
        check_qid(qid, n)?;
        if !seen.insert(qid.to_string()) {
            return Err(Error::parse(n, format!("duplicate query id {qid}")));
        }
        out.push(Query::new(qid, text).map_err(|e| Error::parse(n, e.to_string()))?);
    }
    Ok(out)
}

pub fn read_query_vectors_tsv<R: BufRead>(reader: R) -> Result<Vec<(String, DenseVector)>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for item in lines(reader) {
        let (n, line) = item?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        let (qid, values) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(n, "expected `qid<TAB>f,f,...`"))?;
        check_qid(qid, n)?;
        if !seen.insert(qid.to_string()) {
            return Err(Error::parse(n, format!("duplicate query id {qid}")));
        }
        let values = values
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f32>()
                    .map_err(|_| Error::parse(n, format!("bad float {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let v = DenseVector::new(values).map_err(|e| Error::parse(n, e.to_string()))?;
        out.push((qid.to_string(), v));
    }
    Ok(out)
}

pub fn write_query_vectors_tsv<'a, W, I>(mut w: W, vectors: I) -> Result<()>
where
    W: Write,
    I: IntoIterator<Item = (&'a str, &'a DenseVector)>,
{
    for (qid, v) in vectors {
        write!(w, "{qid}\t")?;
        for (i, x) in v.as_slice().iter().enumerate() {
            if i > 0 {
                w.write_all(b",")?;
            }
            write!(w, "{x}")?;
        }
        w.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn corpus_tsv_and_jsonl() {
        let tsv = "d1\thello world\n\nd2\tsecond\tdoc\r\n";
        let docs = read_corpus_tsv(tsv.as_bytes()).unwrap();
        assert_eq!(docs.len(), 2);
        assert_eq!(docs[1].1, "second\tdoc");
        assert!(matches!(
            read_corpus_tsv("nodelim\n".as_bytes()),
            Err(Error::Parse { line: 1, .. })
        ));

        let jsonl = "{\"id\": \"a\", \"text\": \"x y\"}\n{\"id\": \"b\", \"text\": \"\"}\n";
        assert_eq!(read_corpus_jsonl(jsonl.as_bytes()).unwrap().len(), 2);
        let bad = "{\"id\": \"a\", \"text\": \"x\"}\n{\"id\": \"b\"\n";
        assert!(matches!(
            read_corpus_jsonl(bad.as_bytes()),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn vector_jsonl_validation() {
        let ok = "{\"id\": \"a\", \"passages\": [[1, 0.5], [0, -2e-3]]}\n";
        let docs = read_vectors_jsonl(ok.as_bytes()).unwrap();
        assert_eq!(docs[0].1[1].as_slice(), &[0.0, -0.002]);

        let drift = "{\"id\": \"a\", \"passages\": [[1, 0]]}\n{\"id\": \"b\", \"passages\": [[1]]}\n";
        assert!(matches!(
            read_vectors_jsonl(drift.as_bytes()),
            Err(Error::Parse { line: 2, .. })
        ));
        let dup = "{\"id\": \"a\", \"passages\": [[1]]}\n{\"id\": \"a\", \"passages\": [[1]]}\n";
        assert!(matches!(
            read_vectors_jsonl(dup.as_bytes()),
            Err(Error::Parse { line: 2, .. })
        ));
        let empty = "{\"id\": \"a\", \"passages\": []}\n";
        assert!(read_vectors_jsonl(empty.as_bytes()).is_err());
    }

    #[test]
    fn queries() {
        let q = read_queries_tsv("1\twhat is x\n2\ty\n".as_bytes()).unwrap();
        assert_eq!(q[0].qid, "1");
        assert_eq!(q[0].text, "what is x");
        assert!(read_queries_tsv("1\ta\n1\tb\n".as_bytes()).is_err());
    }

    #[test]
    fn query_vectors_reject_duplicates_and_garbage() {
        assert!(read_query_vectors_tsv("q\t1,2\nq\t3,4\n".as_bytes()).is_err());
        assert!(read_query_vectors_tsv("q\t1,x\n".as_bytes()).is_err());
        assert!(read_query_vectors_tsv("".as_bytes()).unwrap().is_empty());
    }

    proptest! {
        #[test]
        fn vector_jsonl_round_trips_bitwise(
            docs in prop::collection::btree_map("[a-z0-9]{1,8}", prop::collection::vec(prop::collection::vec(any::<f32>().prop_filter("finite", |x| x.is_finite()), 3), 1..4), 1..8)
        ) {
            let index = ForwardIndex::build(docs.iter().map(|(id, ps)| {
                (DocId::new(id).unwrap(), ps.iter().map(|p| DenseVector::new(p.clone()).unwrap()).collect())
            })).unwrap();
            let mut buf = Vec::new();
            write_vectors_jsonl(&index, &mut buf).unwrap();
            let back = read_forward_jsonl(buf.as_slice()).unwrap();
            for (id, passages) in index.iter() {
                let other = back.lookup(id.as_str()).unwrap();
                for (a, b) in passages.iter().zip(other.iter()) {
                    let bits_a: Vec<u32> = a.iter().map(|x| x.to_bits()).collect();
                    let bits_b: Vec<u32> = b.iter().map(|x| x.to_bits()).collect();
                    prop_assert_eq!(bits_a, bits_b);
                }
            }
        }

        #[test]
        fn query_vector_tsv_round_trips(values in prop::collection::vec(any::<f32>().prop_filter("finite", |x| x.is_finite()), 1..16)) {
            let v = DenseVector::new(values).unwrap();
            let mut buf = Vec::new();
            write_query_vectors_tsv(&mut buf, [("q1", &v)]).unwrap();
            let back = read_query_vectors_tsv(buf.as_slice()).unwrap();
            prop_assert_eq!(&back[0].1, &v);
        }
    }
}
