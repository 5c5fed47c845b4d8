//! Document-level learning-to-rank baseline.
//!
//! The initial ranking is BM25. A linear pairwise ranker is trained on the
//! per-document features of the BM25 top-`K` of the training topics, with one
//! hinge constraint per document pair whose relevance grades differ. At test
//! time the BM25 top-`K` is reordered by learned score; ranks below `K` are
//! unchanged.

use crate::corpus::{InvertedIndex, Qrels, Topic};
use crate::evalkit::SplitMix64;
use crate::features::{doc_features, DOC_FEATURES};
use crate::retrieval::{bm25_default, ScoredDoc, ScoredList, WeightedQuery};
use crate::{Error, Result};

const LEARNING_RATE: f64 = 0.5;
const LEARNING_RATE_DECAY: f64 = 0.02;

/// Training hyperparameters for the pairwise document ranker.
#[derive(Debug, Clone, Copy)]
pub struct L2rParams {
    /// BM25 cutoff used for training pairs and test-time reranking.
    pub top_k: usize,
    /// Retrieval depth of the underlying BM25 runs.
    pub depth: usize,
    pub reg: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for L2rParams {
    fn default() -> Self {
        L2rParams {
            top_k: crate::features::DEFAULT_TOP_K,
            depth: crate::retrieval::DEFAULT_DEPTH,
            reg: 0.01,
            epochs: 100,
            seed: 42,
        }
    }
}

/// Linear scorer over raw per-document features.
#[derive(Debug, Clone, PartialEq)]
pub struct DocRanker {
    pub weights: [f64; DOC_FEATURES],
}

impl DocRanker {
    pub fn zero() -> DocRanker {
        DocRanker {
            weights: [0.0; DOC_FEATURES],
        }
    }

    fn score(&self, x: &[f64; DOC_FEATURES]) -> f64 {
        self.weights.iter().zip(x).map(|(w, v)| w * v).sum()
    }
}

/// Training data for one topic: the per-document features of its BM25
/// top-`K` and the matching relevance grades.
#[derive(Debug, Clone)]
pub struct TopicDocData {
    pub features: Vec<[f64; DOC_FEATURES]>,
    pub grades: Vec<u32>,
}

/// Generate one topic's training data (the Gen-phase work of this baseline).
pub fn doc_training_data(
    index: &InvertedIndex,
    topic: &Topic,
    qrels: &Qrels,
    top_k: usize,
) -> TopicDocData {
    let (run, features) = doc_features(index, topic, top_k);
    let grades = run
        .ranking()
        .iter()
        .map(|d| qrels.grade(&topic.topic_id, &d.doc_id))
        .collect();
    TopicDocData { features, grades }
}

/// Train the pairwise ranker on the BM25 top-`K` of the training topics.
///
/// Errors when the training topics have no relevant documents at all. If
/// relevance never separates any retrieved pair, the zero ranker is returned
/// (reranking then preserves BM25 order).
pub fn train_doc_ranker(
    index: &InvertedIndex,
    topics_train: &[Topic],
    qrels_train: &Qrels,
    params: &L2rParams,
) -> Result<DocRanker> {
    let data: Vec<TopicDocData> = topics_train
        .iter()
        .map(|t| doc_training_data(index, t, qrels_train, params.top_k))
        .collect();
    train_doc_ranker_from(&data, params)
}

/// Train from pre-generated per-topic data (the Train-phase work).
pub fn train_doc_ranker_from(data: &[TopicDocData], params: &L2rParams) -> Result<DocRanker> {
    if data.iter().all(|d| d.grades.iter().all(|&g| g == 0)) {
        return Err(Error::NoTrainingRelevance);
    }

    // pairwise constraints: preferred over non-preferred within a topic
    let mut rows: Vec<[f64; DOC_FEATURES]> = Vec::new();
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for topic_data in data {
        let base = rows.len();
        rows.extend_from_slice(&topic_data.features);
        let grades = &topic_data.grades;
        for i in 0..grades.len() {
            for j in 0..grades.len() {
                if grades[i] > grades[j] {
                    pairs.push((base + i, base + j));
                }
            }
        }
    }
    if pairs.is_empty() {
        return Ok(DocRanker::zero());
    }

    // standardize per dimension over all training rows
    let n = rows.len() as f64;
    let mut mean = [0.0; DOC_FEATURES];
    for row in &rows {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    let mut std = [0.0; DOC_FEATURES];
    for row in &rows {
        for (s, (v, m)) in std.iter_mut().zip(row.iter().zip(&mean)) {
            *s += (v - m) * (v - m);
        }
    }
    for s in &mut std {
        *s = (*s / n).sqrt();
        if *s == 0.0 {
            *s = 1.0;
        }
    }
    let standardized: Vec<[f64; DOC_FEATURES]> = rows
        .iter()
        .map(|row| {
            let mut out = [0.0; DOC_FEATURES];
            for i in 0..DOC_FEATURES {
                out[i] = (row[i] - mean[i]) / std[i];
            }
            out
        })
        .collect();

    // subgradient descent with iterate averaging after a burn-in
    let mut w = [0.0; DOC_FEATURES];
    let mut avg = [0.0; DOC_FEATURES];
    let mut averaged = 0u64;
    let burn_in = params.epochs / 5;
    let mut rng = SplitMix64::new(params.seed);
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    let reg_share = 2.0 * params.reg / pairs.len() as f64;
    for epoch in 0..params.epochs {
        rng.shuffle(&mut order);
        let eta = LEARNING_RATE / (1.0 + LEARNING_RATE_DECAY * epoch as f64);
        for &pi in &order {
            let (hi, lo) = pairs[pi];
            let mut margin = 0.0;
            for i in 0..DOC_FEATURES {
                margin += w[i] * (standardized[hi][i] - standardized[lo][i]);
            }
            for wi in w.iter_mut() {
                *wi -= eta * reg_share * *wi;
            }
            if margin < 1.0 {
                for i in 0..DOC_FEATURES {
                    w[i] += eta * (standardized[hi][i] - standardized[lo][i]);
                }
            }
        }
        if epoch >= burn_in {
            for (a, wi) in avg.iter_mut().zip(&w) {
                *a += wi;
            }
            averaged += 1;
        }
    }
    let scale = 1.0 / averaged.max(1) as f64;

    // fold the scaler back; pairwise differences carry no bias term
    let mut raw = [0.0; DOC_FEATURES];
    for i in 0..DOC_FEATURES {
        raw[i] = avg[i] * scale / std[i];
    }
    Ok(DocRanker { weights: raw })
}

/// Rerank the BM25 top-`K` of each test topic by learned score; the tail of
/// the run keeps its BM25 order. Scores in the returned lists are positional
/// (rank-derived), since the metrics are rank-based.
pub fn rerank_with(
    index: &InvertedIndex,
    ranker: &DocRanker,
    topics_test: &[Topic],
    params: &L2rParams,
) -> Vec<ScoredList> {
    topics_test
        .iter()
        .map(|topic| {
            let query = WeightedQuery::from_topic(topic);
            let run = bm25_default(index, &query, params.depth);
            let head_len = run.len().min(params.top_k);
            let head = ScoredList::from_candidates(
                &topic.topic_id,
                head_len,
                run.ranking()[..head_len].to_vec(),
            );
            let features = crate::features::doc_feature_rows(index, &query, &head);
            // stable order: learned score descending, BM25 rank breaks ties,
            // so the zero ranker preserves BM25 order exactly
            let mut order: Vec<usize> = (0..head_len).collect();
            order.sort_by(|&a, &b| {
                ranker
                    .score(&features[b])
                    .partial_cmp(&ranker.score(&features[a]))
                    .expect("ranker scores must not be NaN")
                    .then(a.cmp(&b))
            });
            let reordered: Vec<&ScoredDoc> = order
                .iter()
                .map(|&i| &run.ranking()[i])
                .chain(run.ranking()[head_len..].iter())
                .collect();
            let n = reordered.len();
            ScoredList::from_candidates(
                &topic.topic_id,
                run.depth,
                reordered
                    .into_iter()
                    .enumerate()
                    .map(|(i, d)| ScoredDoc {
                        doc_id: d.doc_id.clone(),
                        score: (n - i) as f64,
                    })
                    .collect(),
            )
        })
        .collect()
}

/// Train on the training topics and rerank the test topics.
pub fn l2r_document_baseline(
    index: &InvertedIndex,
    topics_train: &[Topic],
    qrels_train: &Qrels,
    topics_test: &[Topic],
    params: &L2rParams,
) -> Result<Vec<ScoredList>> {
    let ranker = train_doc_ranker(index, topics_train, qrels_train, params)?;
    Ok(rerank_with(index, &ranker, topics_test, params))
}
