//! Immutable inverted index with document, term, and collection statistics.
//!
//! The index is canonical: document numbers follow the lexicographic order of
//! document ids, the vocabulary is sorted, and every posting list is sorted by
//! document number. Two corpora with identical content produce bit-identical
//! indexes regardless of ingestion order.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::corpus::{Document, TokenizerConfig};
use crate::{Error, Result};

/// One `(document, term frequency)` entry of a posting list.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Posting {
    /// Internal document number (index into the sorted id table).
    pub doc: u32,
    /// Term frequency within that document.
    pub tf: u32,
}

#[derive(Debug, Clone)]
struct TermEntry {
    collection_freq: u64,
    postings: Vec<Posting>,
}

/// Immutable postings plus the statistics every weighting and expansion
/// formula needs. Build once with [`build_index`], then share freely across
/// threads.
#[derive(Debug, Clone)]
pub struct InvertedIndex {
    terms: Vec<String>,
    entries: Vec<TermEntry>,
    doc_ids: Vec<String>,
    doc_len: Vec<u64>,
    // doc -> [(term number, tf)] sorted by term number; required by
    // pseudo-relevance feedback to recover feedback-set term statistics.
    direct: Vec<Vec<(u32, u32)>>,
    total_tokens: u64,
    avg_doc_length: f64,
}

impl InvertedIndex {
    /// Number of documents `N`.
    pub fn n_docs(&self) -> usize {
        self.doc_ids.len()
    }

    /// Mean document length in tokens.
    pub fn avg_doc_length(&self) -> f64 {
        self.avg_doc_length
    }

    /// Total token count of the corpus.
    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    /// Vocabulary size.
    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    /// Internal document number for an external id.
    pub fn doc_index(&self, doc_id: &str) -> Option<u32> {
        self.doc_ids
            .binary_search_by(|d| d.as_str().cmp(doc_id))
            .ok()
            .map(|i| i as u32)
    }

    /// External id of a document number.
    pub fn doc_id(&self, doc: u32) -> &str {
        &self.doc_ids[doc as usize]
    }

    /// Length of a document in tokens.
    pub fn doc_len(&self, doc: u32) -> u64 {
        self.doc_len[doc as usize]
    }

    /// Term number for a term string, if indexed.
    pub fn term_id(&self, term: &str) -> Option<u32> {
        self.terms
            .binary_search_by(|t| t.as_str().cmp(term))
            .ok()
            .map(|i| i as u32)
    }

    /// Term string for a term number.
    pub fn term(&self, term_id: u32) -> &str {
        &self.terms[term_id as usize]
    }

    /// Document frequency `n_t`.
    pub fn doc_freq(&self, term_id: u32) -> usize {
        self.entries[term_id as usize].postings.len()
    }

    /// Collection frequency `F_t`.
    pub fn collection_freq(&self, term_id: u32) -> u64 {
        self.entries[term_id as usize].collection_freq
    }

    /// Posting list of a term, sorted by document number.
    pub fn postings(&self, term_id: u32) -> &[Posting] {
        &self.entries[term_id as usize].postings
    }

    /// Terms of a document as `(term number, tf)`, sorted by term number.
    pub fn doc_terms(&self, doc: u32) -> &[(u32, u32)] {
        &self.direct[doc as usize]
    }

    /// All document ids in canonical (sorted) order.
    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    /// Persist the index as a plain-text artifact, together with the
    /// tokenizer pipeline the documents were normalized with.
    pub fn write_text<W: Write>(&self, w: W, pipeline: &TokenizerConfig) -> Result<()> {
        let mut w = BufWriter::new(w);
        writeln!(w, "sqp-index\t1")?;
        writeln!(
            w,
            "pipeline\t{}\t{}\t{}",
            pipeline.case_fold as u8, pipeline.stop as u8, pipeline.stem as u8
        )?;
        writeln!(w, "stats\t{}\t{}", self.n_docs(), self.total_tokens)?;
        for (id, len) in self.doc_ids.iter().zip(&self.doc_len) {
            writeln!(w, "doc\t{id}\t{len}")?;
        }
        for (term, entry) in self.terms.iter().zip(&self.entries) {
            writeln!(
                w,
                "term\t{term}\t{}\t{}",
                entry.collection_freq,
                entry.postings.len()
            )?;
            for p in &entry.postings {
                writeln!(w, "p\t{}\t{}", p.doc, p.tf)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Write the index to a file. See [`InvertedIndex::write_text`].
    pub fn save(&self, path: &Path, pipeline: &TokenizerConfig) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_text(file, pipeline)
    }

    /// Load an index persisted by [`InvertedIndex::write_text`].
    pub fn read_text<R: Read>(r: R, path: &str) -> Result<(InvertedIndex, TokenizerConfig)> {
        let err = |line: usize, message: String| Error::Parse {
            path: path.to_string(),
            line,
            message,
        };

        let mut pipeline = TokenizerConfig::default();
        let mut n_docs = 0usize;
        let mut total_tokens = 0u64;
        let mut doc_ids = Vec::new();
        let mut doc_len = Vec::new();
        let mut terms: Vec<String> = Vec::new();
        let mut entries: Vec<TermEntry> = Vec::new();
        let mut saw_header = false;
        let mut lineno = 0usize;

        for line in BufReader::new(r).lines() {
            lineno += 1;
            let this_line = lineno;
            let line = line?;
            if !saw_header {
                if line.trim_end() != "sqp-index\t1" {
                    return Err(err(1, format!("unrecognized index header: {line:?}")));
                }
                saw_header = true;
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let parse_u64 = |s: &str| -> Result<u64> {
                s.parse()
                    .map_err(|_| err(this_line, format!("expected integer, got {s:?}")))
            };
            match fields[0] {
                "pipeline" if fields.len() == 4 => {
                    pipeline = TokenizerConfig {
                        case_fold: fields[1] == "1",
                        stop: fields[2] == "1",
                        stem: fields[3] == "1",
                    };
                }
                "stats" if fields.len() == 3 => {
                    n_docs = parse_u64(fields[1])? as usize;
                    total_tokens = parse_u64(fields[2])?;
                }
                "doc" if fields.len() == 3 => {
                    doc_ids.push(fields[1].to_string());
                    doc_len.push(parse_u64(fields[2])?);
                }
                "term" if fields.len() == 4 => {
                    terms.push(fields[1].to_string());
                    entries.push(TermEntry {
                        collection_freq: parse_u64(fields[2])?,
                        postings: Vec::with_capacity(parse_u64(fields[3])? as usize),
                    });
                }
                "p" if fields.len() == 3 => {
                    let entry = entries
                        .last_mut()
                        .ok_or_else(|| err(this_line, "posting before any term".into()))?;
                    entry.postings.push(Posting {
                        doc: parse_u64(fields[1])? as u32,
                        tf: parse_u64(fields[2])? as u32,
                    });
                }
                other => {
                    return Err(err(this_line, format!("unrecognized record {other:?}")));
                }
            }
        }

        if !saw_header {
            return Err(err(1, "empty index file".into()));
        }
        if doc_ids.len() != n_docs {
            return Err(err(
                lineno,
                format!("stats claim {n_docs} docs, found {}", doc_ids.len()),
            ));
        }
        let direct = build_direct(doc_ids.len(), &entries);
        let avg_doc_length = if n_docs > 0 {
            total_tokens as f64 / n_docs as f64
        } else {
            0.0
        };
        Ok((
            InvertedIndex {
                terms,
                entries,
                doc_ids,
                doc_len,
                direct,
                total_tokens,
                avg_doc_length,
            },
            pipeline,
        ))
    }

    /// Load an index from a file. See [`InvertedIndex::read_text`].
    pub fn load(path: &Path) -> Result<(InvertedIndex, TokenizerConfig)> {
        let file = std::fs::File::open(path)?;
        InvertedIndex::read_text(file, &path.display().to_string())
    }
}

fn build_direct(n_docs: usize, entries: &[TermEntry]) -> Vec<Vec<(u32, u32)>> {
    let mut direct = vec![Vec::new(); n_docs];
    for (term_id, entry) in entries.iter().enumerate() {
        for p in &entry.postings {
            direct[p.doc as usize].push((term_id as u32, p.tf));
        }
    }
    // term ids are visited in ascending order, so each row is already sorted
    direct
}

/// Build the immutable index from a document stream.
///
/// Rejects duplicate document ids (naming the offender) and empty corpora.
/// Input order is irrelevant: the result is canonicalized by document id.
pub fn build_index<I>(documents: I) -> Result<InvertedIndex>
where
    I: IntoIterator<Item = Document>,
{
    let mut seen = HashSet::new();
    let mut docs: Vec<Document> = Vec::new();
    for doc in documents {
        if !seen.insert(doc.doc_id.clone()) {
            return Err(Error::DuplicateDocId(doc.doc_id));
        }
        docs.push(doc);
    }
    if docs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    docs.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));

    let mut doc_ids = Vec::with_capacity(docs.len());
    let mut doc_len = Vec::with_capacity(docs.len());
    let mut vocab: BTreeMap<String, TermEntry> = BTreeMap::new();
    let mut total_tokens = 0u64;

    for (doc_no, doc) in docs.iter().enumerate() {
        doc_ids.push(doc.doc_id.clone());
        doc_len.push(doc.tokens.len() as u64);
        total_tokens += doc.tokens.len() as u64;

        let mut counts: HashMap<&str, u32> = HashMap::new();
        for t in &doc.tokens {
            *counts.entry(t.as_str()).or_insert(0) += 1;
        }
        for (term, tf) in counts {
            let entry = vocab.entry(term.to_string()).or_insert(TermEntry {
                collection_freq: 0,
                postings: Vec::new(),
            });
            entry.collection_freq += tf as u64;
            entry.postings.push(Posting {
                doc: doc_no as u32,
                tf,
            });
        }
    }

    let mut terms = Vec::with_capacity(vocab.len());
    let mut entries = Vec::with_capacity(vocab.len());
    for (term, mut entry) in vocab {
        entry.postings.sort_by_key(|p| p.doc);
        terms.push(term);
        entries.push(entry);
    }

    let direct = build_direct(doc_ids.len(), &entries);
    let avg_doc_length = total_tokens as f64 / doc_ids.len() as f64;
    Ok(InvertedIndex {
        terms,
        entries,
        doc_ids,
        doc_len,
        direct,
        total_tokens,
        avg_doc_length,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(id: &str, tokens: &[&str]) -> Document {
        Document {
            doc_id: id.to_string(),
            tokens: tokens.iter().map(|t| t.to_string()).collect(),
        }
    }

    #[test]
    fn single_document_statistics() {
        let idx = build_index([doc("d1", &["a", "b", "a"])]).unwrap();
        let a = idx.term_id("a").unwrap();
        let b = idx.term_id("b").unwrap();
        assert_eq!(idx.postings(a), &[Posting { doc: 0, tf: 2 }]);
        assert_eq!(idx.postings(b), &[Posting { doc: 0, tf: 1 }]);
        assert_eq!(idx.n_docs(), 1);
        assert_eq!(idx.avg_doc_length(), 3.0);
    }

    #[test]
    fn document_and_collection_frequency() {
        let idx = build_index([doc("d1", &["a"]), doc("d2", &["a"])]).unwrap();
        let a = idx.term_id("a").unwrap();
        assert_eq!(idx.doc_freq(a), 2);
        assert_eq!(idx.collection_freq(a), 2);
    }

    #[test]
    fn empty_corpus_rejected() {
        assert!(matches!(build_index([]), Err(Error::EmptyCorpus)));
    }

    #[test]
    fn duplicate_doc_id_rejected_by_name() {
        let err = build_index([doc("dup", &["a"]), doc("dup", &["b"])]).unwrap_err();
        match err {
            Error::DuplicateDocId(id) => assert_eq!(id, "dup"),
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn ingestion_order_is_irrelevant() {
        let a = build_index([doc("d2", &["x", "y"]), doc("d1", &["y"])]).unwrap();
        let b = build_index([doc("d1", &["y"]), doc("d2", &["x", "y"])]).unwrap();
        let y = a.term_id("y").unwrap();
        assert_eq!(a.postings(y), b.postings(y));
        assert_eq!(a.doc_ids(), b.doc_ids());
        assert_eq!(a.total_tokens(), b.total_tokens());
    }

    #[test]
    fn text_round_trip() {
        let idx = build_index([doc("d1", &["a", "b"]), doc("d2", &["b", "b", "c"])]).unwrap();
        let mut buf = Vec::new();
        idx.write_text(&mut buf, &TokenizerConfig::default()).unwrap();
        let (back, pipeline) = InvertedIndex::read_text(buf.as_slice(), "mem").unwrap();
        assert_eq!(pipeline, TokenizerConfig::default());
        assert_eq!(back.n_docs(), 2);
        assert_eq!(back.total_tokens(), idx.total_tokens());
        let b = back.term_id("b").unwrap();
        assert_eq!(back.postings(b), idx.postings(idx.term_id("b").unwrap()));
        assert_eq!(back.doc_terms(1), idx.doc_terms(1));
    }

    #[test]
    fn direct_index_mirrors_postings() {
        let idx = build_index([doc("d1", &["a", "b", "a"]), doc("d2", &["b"])]).unwrap();
        let a = idx.term_id("a").unwrap();
        let b = idx.term_id("b").unwrap();
        assert_eq!(idx.doc_terms(0), &[(a, 2), (b, 1)]);
        assert_eq!(idx.doc_terms(1), &[(b, 1)]);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        prop_compose! {
            fn random_corpus()(
                docs in prop::collection::vec(
                    prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "d", "e", "f", "g"]), 0..12),
                    1..50,
                )
            ) -> Vec<Document> {
                docs.into_iter()
                    .enumerate()
                    .map(|(i, tokens)| Document {
                        doc_id: format!("doc{i:03}"),
                        tokens: tokens.into_iter().map(String::from).collect(),
                    })
                    .collect()
            }
        }

        proptest! {
            // brute-force recount of tf, df, and collection frequency from
            // the raw token lists equals the index statistics exactly
            #[test]
            fn statistics_match_brute_force_recount(docs in random_corpus()) {
                let idx = build_index(docs.clone()).unwrap();
                let mut total = 0u64;
                for d in &docs {
                    total += d.tokens.len() as u64;
                    let num = idx.doc_index(&d.doc_id).unwrap();
                    prop_assert_eq!(idx.doc_len(num), d.tokens.len() as u64);
                }
                prop_assert_eq!(idx.total_tokens(), total);
                prop_assert_eq!(idx.avg_doc_length(), total as f64 / docs.len() as f64);

                for term in ["a", "b", "c", "d", "e", "f", "g"] {
                    let df = docs.iter().filter(|d| d.tokens.iter().any(|t| t == term)).count();
                    let cf: u64 = docs
                        .iter()
                        .map(|d| d.tokens.iter().filter(|t| *t == term).count() as u64)
                        .sum();
                    match idx.term_id(term) {
                        Some(tid) => {
                            prop_assert_eq!(idx.doc_freq(tid), df);
                            prop_assert_eq!(idx.collection_freq(tid), cf);
                            // per-posting tf recount, postings sorted by doc
                            let mut prev = None;
                            for p in idx.postings(tid) {
                                let id = idx.doc_id(p.doc).to_string();
                                let tf = docs
                                    .iter()
                                    .find(|d| d.doc_id == id)
                                    .unwrap()
                                    .tokens
                                    .iter()
                                    .filter(|t| *t == term)
                                    .count();
                                prop_assert_eq!(p.tf as usize, tf);
                                prop_assert!(prev.is_none_or(|x| x < p.doc));
                                prev = Some(p.doc);
                            }
                        }
                        None => {
                            prop_assert_eq!(df, 0);
                            prop_assert_eq!(cf, 0);
                        }
                    }
                }
            }
        }
    }
}
