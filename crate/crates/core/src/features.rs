//! Aggregated per-query feature vectors and effectiveness labels.
//!
//! Features are computed from the BM25 top-`K` of a query: eight per-document
//! features, each aggregated with {min, max, mean, std, sum}, plus four
//! pre-retrieval features, giving a fixed 44-dimensional vector.
//!
//! Per-document features (sums range over the query's distinct terms):
//! BM25 score, document length, `Σ tf`, `Σ ln(1+tf)`, `Σ idf` over matched
//! terms, `Σ tf·idf`, `Σ tf/dl`, and the Dirichlet LM log-score of the
//! document. `idf = ln(N/n_t)`. Pre-retrieval features: query length
//! (distinct positive-weight terms), mean/max/sum idf over corpus-present
//! query terms.
//!
//! The std aggregator uses the population (÷n) form so a single retrieved
//! document yields 0, not an undefined value.

use std::io::{BufRead, BufReader, Read, Write};

use crate::corpus::{InvertedIndex, Topic};
use crate::gridpoints::{GridOfPoints, ProcessingThread};
use crate::retrieval::{bm25_default, document_score, ModelKind, WeightedQuery, WeightingModel};
use crate::{Error, Result};

/// Number of per-document features.
pub const DOC_FEATURES: usize = 8;
/// Number of aggregators applied to each per-document feature.
pub const AGGREGATORS: usize = 5;
/// Number of pre-retrieval features.
pub const PRE_FEATURES: usize = 4;
/// Total feature dimension.
pub const FEATURE_DIM: usize = DOC_FEATURES * AGGREGATORS + PRE_FEATURES;

/// Default BM25 cutoff for feature extraction.
pub const DEFAULT_TOP_K: usize = 20;

const DOC_FEATURE_NAMES: [&str; DOC_FEATURES] = [
    "bm25", "doclen", "sum_tf", "sum_log_tf", "sum_idf", "sum_tfidf", "sum_norm_tf", "dirichlet",
];
const AGGREGATOR_NAMES: [&str; AGGREGATORS] = ["min", "max", "mean", "std", "sum"];
const PRE_FEATURE_NAMES: [&str; PRE_FEATURES] = ["qlen", "mean_idf", "max_idf", "sum_idf"];

/// Names of all 44 dimensions, in vector order.
pub fn feature_names() -> Vec<String> {
    let mut names = Vec::with_capacity(FEATURE_DIM);
    for f in DOC_FEATURE_NAMES {
        for a in AGGREGATOR_NAMES {
            names.push(format!("{f}_{a}"));
        }
    }
    names.extend(PRE_FEATURE_NAMES.iter().map(|s| s.to_string()));
    names
}

/// Identifier of the feature configuration, embedded in model files so a
/// router is never applied to vectors with a different layout.
pub fn feature_config_id(top_k: usize) -> String {
    format!("letor{DOC_FEATURES}x{AGGREGATORS}+pre{PRE_FEATURES}/k={top_k}")
}

/// Fixed-length real feature vector for one query.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryFeatures {
    pub topic_id: String,
    pub vector: Vec<f64>,
}

impl QueryFeatures {
    /// All-zero vector; produced for queries whose BM25 retrieval is empty.
    pub fn zero(topic_id: &str) -> QueryFeatures {
        QueryFeatures {
            topic_id: topic_id.to_string(),
            vector: vec![0.0; FEATURE_DIM],
        }
    }
}

/// Effectiveness of each candidate thread for one query, copied from the
/// grid of points.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateLabels {
    pub topic_id: String,
    pub eff: Vec<f64>,
}

/// Per-term idf pairs for corpus-present query terms: `(term id, ln(N/n_t))`.
fn query_term_idf(index: &InvertedIndex, query: &WeightedQuery) -> Vec<(u32, f64)> {
    let n_docs = index.n_docs() as f64;
    let mut term_idf = Vec::new();
    for (term, &qw) in &query.term_weights {
        if qw <= 0.0 {
            continue;
        }
        if let Some(tid) = index.term_id(term) {
            term_idf.push((tid, (n_docs / index.doc_freq(tid) as f64).ln()));
        }
    }
    term_idf
}

/// The eight per-document features for the BM25 top-`K` of a topic, together
/// with the run they were computed from. This is the unaggregated form used
/// by the document-level reranking baseline.
pub fn doc_features(
    index: &InvertedIndex,
    topic: &Topic,
    top_k: usize,
) -> (crate::retrieval::ScoredList, Vec<[f64; DOC_FEATURES]>) {
    let query = WeightedQuery::from_topic(topic);
    let run = bm25_default(index, &query, top_k);
    let rows = doc_feature_rows(index, &query, &run);
    (run, rows)
}

/// Per-document feature rows for an existing ranking.
pub(crate) fn doc_feature_rows(
    index: &InvertedIndex,
    query: &WeightedQuery,
    run: &crate::retrieval::ScoredList,
) -> Vec<[f64; DOC_FEATURES]> {
    let dirichlet = WeightingModel::new(ModelKind::DirichletLm);
    let term_idf = query_term_idf(index, query);
    let mut per_doc: Vec<[f64; DOC_FEATURES]> = Vec::with_capacity(run.len());
    for entry in run.ranking() {
        let doc = index
            .doc_index(&entry.doc_id)
            .expect("retrieved documents exist in the index");
        let dl = index.doc_len(doc) as f64;
        let mut sum_tf = 0.0;
        let mut sum_log_tf = 0.0;
        let mut sum_idf = 0.0;
        let mut sum_tfidf = 0.0;
        let mut sum_norm_tf = 0.0;
        for &(tid, idf) in &term_idf {
            let tf = index
                .postings(tid)
                .binary_search_by_key(&doc, |p| p.doc)
                .map(|pos| index.postings(tid)[pos].tf as f64)
                .unwrap_or(0.0);
            if tf > 0.0 {
                sum_tf += tf;
                sum_log_tf += (1.0 + tf).ln();
                sum_idf += idf;
                sum_tfidf += tf * idf;
                sum_norm_tf += tf / dl;
            }
        }
        per_doc.push([
            entry.score,
            dl,
            sum_tf,
            sum_log_tf,
            sum_idf,
            sum_tfidf,
            sum_norm_tf,
            document_score(index, query, &dirichlet, doc),
        ]);
    }
    per_doc
}

/// Compute the feature vector of a topic from its BM25 top-`K`.
///
/// An empty retrieval (degenerate query or no matching document) yields the
/// zero vector, flagged with a warning.
pub fn extract_features(index: &InvertedIndex, topic: &Topic, top_k: usize) -> QueryFeatures {
    let query = WeightedQuery::from_topic(topic);
    let run = bm25_default(index, &query, top_k);
    if run.is_empty() {
        log::warn!(
            "topic {} retrieved nothing at feature extraction; zero vector",
            topic.topic_id
        );
        return QueryFeatures::zero(&topic.topic_id);
    }

    let term_idf = query_term_idf(index, &query);
    let per_doc = doc_feature_rows(index, &query, &run);

    let mut vector = Vec::with_capacity(FEATURE_DIM);
    let n = per_doc.len() as f64;
    for f in 0..DOC_FEATURES {
        let values = per_doc.iter().map(|row| row[f]);
        let min = values.clone().fold(f64::INFINITY, f64::min);
        let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = values.clone().sum();
        let mean = sum / n;
        let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        vector.extend_from_slice(&[min, max, mean, var.sqrt(), sum]);
    }

    // pre-retrieval features
    let qlen = query.term_weights.values().filter(|&&w| w > 0.0).count() as f64;
    let idf_sum: f64 = term_idf.iter().map(|&(_, idf)| idf).sum();
    let idf_max = term_idf.iter().map(|&(_, idf)| idf).fold(0.0, f64::max);
    let idf_mean = if term_idf.is_empty() {
        0.0
    } else {
        idf_sum / term_idf.len() as f64
    };
    vector.extend_from_slice(&[qlen, idf_mean, idf_max, idf_sum]);

    debug_assert_eq!(vector.len(), FEATURE_DIM);
    QueryFeatures {
        topic_id: topic.topic_id.clone(),
        vector,
    }
}

/// Copy the effectiveness labels of candidate threads for one topic out of
/// the grid.
pub fn label_candidates(
    grid: &GridOfPoints,
    candidates: &[ProcessingThread],
    topic_id: &str,
) -> Result<CandidateLabels> {
    let qi = grid
        .topic_index(topic_id)
        .ok_or_else(|| Error::GridLookup(format!("topic {topic_id} not in grid")))?;
    let mut eff = Vec::with_capacity(candidates.len());
    for c in candidates {
        let ti = grid
            .thread_index(c)
            .ok_or_else(|| Error::GridLookup(format!("thread {} not in grid", c.id())))?;
        eff.push(grid.value(ti, qi));
    }
    Ok(CandidateLabels {
        topic_id: topic_id.to_string(),
        eff,
    })
}

/// Write feature vectors as TSV: `topic_id f1 … fn`, with a `#` header naming
/// the dimensions.
pub fn write_features<W: Write>(mut w: W, features: &[QueryFeatures]) -> Result<()> {
    writeln!(w, "#topic_id\t{}", feature_names().join("\t"))?;
    for f in features {
        write!(w, "{}", f.topic_id)?;
        for v in &f.vector {
            write!(w, "\t{v}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Read feature vectors written by [`write_features`].
pub fn read_features<R: Read>(r: R, path: &str) -> Result<Vec<QueryFeatures>> {
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(r).lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split('\t');
        let topic_id = fields.next().unwrap_or("").to_string();
        let vector: Vec<f64> = fields
            .map(|s| {
                s.parse().map_err(|_| Error::Parse {
                    path: path.to_string(),
                    line: lineno,
                    message: format!("bad feature value {s:?}"),
                })
            })
            .collect::<Result<_>>()?;
        if vector.len() != FEATURE_DIM {
            return Err(Error::DimensionMismatch {
                expected: FEATURE_DIM,
                actual: vector.len(),
            });
        }
        out.push(QueryFeatures { topic_id, vector });
    }
    Ok(out)
}

/// Write labels as TSV: `topic_id thread_id value`.
pub fn write_labels<W: Write>(
    mut w: W,
    labels: &[CandidateLabels],
    candidates: &[ProcessingThread],
) -> Result<()> {
    for l in labels {
        for (c, v) in candidates.iter().zip(&l.eff) {
            writeln!(w, "{}\t{}\t{}", l.topic_id, c.id(), v)?;
        }
    }
    Ok(())
}
