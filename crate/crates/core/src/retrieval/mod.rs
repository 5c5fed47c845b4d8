//! Scoring and ranking documents for weighted queries.
//!
//! A [`ScoredList`] is one "run" for one topic: documents ordered by
//! (score descending, doc id ascending), truncated to a retrieval depth.
//! Runs serialize to the TREC run format
//! `topic_id Q0 doc_id rank score tag` with ranks starting at 1.

mod models;

pub use models::{ModelKind, ModelParams, WeightingModel};

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};

use crate::corpus::{InvertedIndex, Topic};
use crate::{Error, Result};

pub(crate) use models::{CollectionStats, TermStats};

/// Default retrieval depth for runs.
pub const DEFAULT_DEPTH: usize = 1000;

/// A query as a bag of nonnegatively weighted terms.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedQuery {
    pub topic_id: String,
    /// term -> query weight ≥ 0. Sorted so that score accumulation order is
    /// deterministic.
    pub term_weights: BTreeMap<String, f64>,
}

impl WeightedQuery {
    /// Build a query from a topic title; weights are term counts.
    pub fn from_topic(topic: &Topic) -> WeightedQuery {
        let mut term_weights = BTreeMap::new();
        for t in &topic.title_terms {
            *term_weights.entry(t.clone()).or_insert(0.0) += 1.0;
        }
        WeightedQuery {
            topic_id: topic.topic_id.clone(),
            term_weights,
        }
    }

    pub fn from_terms<I, S>(topic_id: &str, terms: I) -> WeightedQuery
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        WeightedQuery {
            topic_id: topic_id.to_string(),
            term_weights: terms.into_iter().map(|(t, w)| (t.into(), w)).collect(),
        }
    }

    /// True when no term carries positive weight.
    pub fn is_degenerate(&self) -> bool {
        !self.term_weights.values().any(|&w| w > 0.0)
    }
}

/// One ranked document.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredDoc {
    pub doc_id: String,
    pub score: f64,
}

/// A ranking for one topic, ordered by (score desc, doc id asc).
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredList {
    pub topic_id: String,
    /// Retrieval cutoff the list was produced under.
    pub depth: usize,
    ranking: Vec<ScoredDoc>,
}

impl ScoredList {
    /// Order candidates canonically, deduplicate-check, and truncate to depth.
    pub fn from_candidates(
        topic_id: &str,
        depth: usize,
        mut candidates: Vec<ScoredDoc>,
    ) -> ScoredList {
        candidates.sort_by(|a, b| {
            b.score
                .partial_cmp(&a.score)
                .expect("document scores must not be NaN")
                .then_with(|| a.doc_id.cmp(&b.doc_id))
        });
        candidates.truncate(depth);
        debug_assert!(
            candidates.windows(2).all(|w| w[0].doc_id != w[1].doc_id),
            "duplicate doc ids in ranking"
        );
        ScoredList {
            topic_id: topic_id.to_string(),
            depth,
            ranking: candidates,
        }
    }

    /// An empty run (degenerate query, no matches).
    pub fn empty(topic_id: &str, depth: usize) -> ScoredList {
        ScoredList {
            topic_id: topic_id.to_string(),
            depth,
            ranking: Vec::new(),
        }
    }

    pub fn ranking(&self) -> &[ScoredDoc] {
        &self.ranking
    }

    pub fn len(&self) -> usize {
        self.ranking.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranking.is_empty()
    }

    /// Doc ids of the top `k` entries.
    pub fn top_ids(&self, k: usize) -> impl Iterator<Item = &str> {
        self.ranking.iter().take(k).map(|d| d.doc_id.as_str())
    }
}

/// Score and rank documents for a weighted query under a weighting model.
///
/// Every returned document matches at least one query term; the document
/// score is `Σ_t qweight(t) · model_term_score(t, doc)`. Degenerate queries
/// and queries whose terms are all absent from the corpus yield empty lists.
pub fn score(
    index: &InvertedIndex,
    query: &WeightedQuery,
    model: &WeightingModel,
    depth: usize,
) -> ScoredList {
    let cstats = CollectionStats {
        n_docs: index.n_docs() as f64,
        avg_dl: index.avg_doc_length(),
        total_tokens: index.total_tokens() as f64,
    };
    // term-at-a-time scoring into a document-indexed accumulator array
    let mut acc = vec![0.0f64; index.n_docs()];
    let mut matched = vec![false; index.n_docs()];
    let mut present_weight = 0.0;

    // BTreeMap iteration gives a fixed term order, so float accumulation is
    // deterministic.
    for (term, &qw) in &query.term_weights {
        if qw <= 0.0 {
            continue;
        }
        let Some(tid) = index.term_id(term) else {
            // absent from the corpus: contributes exactly 0 everywhere
            continue;
        };
        let tstats = TermStats {
            n_t: index.doc_freq(tid) as f64,
            f_t: index.collection_freq(tid) as f64,
        };
        present_weight += qw;
        for p in index.postings(tid) {
            let ts = model.term_score(p.tf as f64, index.doc_len(p.doc) as f64, &tstats, &cstats);
            acc[p.doc as usize] += qw * ts;
            matched[p.doc as usize] = true;
        }
    }

    let mut candidates: Vec<(u32, f64)> = matched
        .iter()
        .enumerate()
        .filter(|(_, &m)| m)
        .map(|(doc, _)| (doc as u32, acc[doc]))
        .collect();
    // Dirichlet LM charges a length normalizer once per unit of query
    // weight; other models contribute nothing here.
    for (doc, s) in candidates.iter_mut() {
        let extra = model.doc_component(index.doc_len(*doc) as f64, &cstats);
        if extra != 0.0 {
            *s += present_weight * extra;
        }
    }

    // Internal doc numbers follow sorted external ids, so ordering by number
    // equals ordering by id. (score desc, id asc) is a total order, so the
    // partial-selection shortcut for shallow cutoffs changes nothing.
    let by_rank = |a: &(u32, f64), b: &(u32, f64)| {
        b.1.partial_cmp(&a.1)
            .expect("document scores must not be NaN")
            .then_with(|| a.0.cmp(&b.0))
    };
    if depth < candidates.len() {
        candidates.select_nth_unstable_by(depth, by_rank);
        candidates.truncate(depth);
    }
    candidates.sort_by(by_rank);
    ScoredList {
        topic_id: query.topic_id.clone(),
        depth,
        ranking: candidates
            .into_iter()
            .map(|(doc, score)| ScoredDoc {
                doc_id: index.doc_id(doc).to_string(),
                score,
            })
            .collect(),
    }
}

/// Full model score of a single document for a query.
///
/// Equals the score the document would receive in [`score`]; used by feature
/// extraction to evaluate a secondary model over an already retrieved set.
pub fn document_score(
    index: &InvertedIndex,
    query: &WeightedQuery,
    model: &WeightingModel,
    doc: u32,
) -> f64 {
    let cstats = CollectionStats {
        n_docs: index.n_docs() as f64,
        avg_dl: index.avg_doc_length(),
        total_tokens: index.total_tokens() as f64,
    };
    let dl = index.doc_len(doc) as f64;
    let mut s = 0.0;
    let mut present_weight = 0.0;
    for (term, &qw) in &query.term_weights {
        if qw <= 0.0 {
            continue;
        }
        let Some(tid) = index.term_id(term) else {
            continue;
        };
        present_weight += qw;
        if let Ok(pos) = index.postings(tid).binary_search_by_key(&doc, |p| p.doc) {
            let tstats = TermStats {
                n_t: index.doc_freq(tid) as f64,
                f_t: index.collection_freq(tid) as f64,
            };
            s += qw * model.term_score(index.postings(tid)[pos].tf as f64, dl, &tstats, &cstats);
        }
    }
    s + present_weight * model.doc_component(dl, &cstats)
}

/// The Baseline-1 run: BM25 with default parameters b = 0.75, k1 = 1.2.
///
/// Also the first-pass ranker for feature extraction.
pub fn bm25_default(index: &InvertedIndex, query: &WeightedQuery, depth: usize) -> ScoredList {
    score(index, query, &WeightingModel::bm25_default(), depth)
}

/// Write runs in TREC format: `topic_id Q0 doc_id rank score tag`.
pub fn write_run<W: Write>(w: W, runs: &[ScoredList], tag: &str) -> Result<()> {
    let mut w = BufWriter::new(w);
    for run in runs {
        for (i, doc) in run.ranking.iter().enumerate() {
            writeln!(
                w,
                "{} Q0 {} {} {} {}",
                run.topic_id,
                doc.doc_id,
                i + 1,
                doc.score,
                tag
            )?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Read a TREC run file back into per-topic lists (file order preserved for
/// topics, rank order within each topic).
pub fn read_run<R: Read>(r: R, path: &str) -> Result<Vec<ScoredList>> {
    let reader = BufReader::new(r);
    let mut order: Vec<String> = Vec::new();
    let mut by_topic: HashMap<String, Vec<(usize, ScoredDoc)>> = HashMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 6 {
            return Err(Error::Parse {
                path: path.to_string(),
                line: lineno,
                message: format!("expected 6 fields, got {}", fields.len()),
            });
        }
        let rank: usize = fields[3].parse().map_err(|_| Error::Parse {
            path: path.to_string(),
            line: lineno,
            message: format!("bad rank {:?}", fields[3]),
        })?;
        let score: f64 = fields[4].parse().map_err(|_| Error::Parse {
            path: path.to_string(),
            line: lineno,
            message: format!("bad score {:?}", fields[4]),
        })?;
        let topic = fields[0].to_string();
        if !by_topic.contains_key(&topic) {
            order.push(topic.clone());
        }
        by_topic.entry(topic).or_default().push((
            rank,
            ScoredDoc {
                doc_id: fields[2].to_string(),
                score,
            },
        ));
    }
    let mut runs = Vec::with_capacity(order.len());
    for topic in order {
        let mut entries = by_topic.remove(&topic).unwrap();
        entries.sort_by_key(|(rank, _)| *rank);
        let ranking: Vec<ScoredDoc> = entries.into_iter().map(|(_, d)| d).collect();
        runs.push(ScoredList {
            topic_id: topic,
            depth: ranking.len(),
            ranking,
        });
    }
    Ok(runs)
}
