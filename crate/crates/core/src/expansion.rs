//! Pseudo-relevance-feedback query expansion.
//!
//! The top `D` documents of a first-pass run form the feedback set. Candidate
//! terms are weighted by a divergence-from-randomness feedback model and the
//! top `T` of them are merged into the query Rocchio-style:
//!
//! ```text
//! new_weight(t) = orig(t)/max_orig + beta · exp(t)/max_exp
//! ```
//!
//! with either component 0 when the term is absent from that side. Original
//! query terms are never dropped.

use std::collections::BTreeMap;
use std::fmt;

use crate::corpus::InvertedIndex;
use crate::retrieval::{ScoredList, WeightedQuery};
use crate::{Error, Result};

/// Feedback term-weighting models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ExpansionKind {
    /// No expansion: the thread is single-pass.
    None,
    /// Bose-Einstein 1: `w(t) = tf_x·log2((1+λ)/λ) + log2(1+λ)`, `λ = F_t/N`.
    Bo1,
    /// Bose-Einstein 2: same form with `λ = F_t·fb_tokens/total_tokens`.
    Bo2,
    /// Kullback-Leibler: `w(t) = P_x·log2(P_x/P_c)`, terms with `P_x ≤ P_c`
    /// dropped.
    Kl,
}

impl ExpansionKind {
    pub const EXPANDING: [ExpansionKind; 3] =
        [ExpansionKind::Bo1, ExpansionKind::Bo2, ExpansionKind::Kl];

    pub fn from_id(id: &str) -> Result<ExpansionKind> {
        match id {
            "None" => Ok(ExpansionKind::None),
            "Bo1" => Ok(ExpansionKind::Bo1),
            "Bo2" => Ok(ExpansionKind::Bo2),
            "KL" => Ok(ExpansionKind::Kl),
            other => Err(Error::UnknownModel(other.to_string())),
        }
    }

    pub fn id(&self) -> &'static str {
        match self {
            ExpansionKind::None => "None",
            ExpansionKind::Bo1 => "Bo1",
            ExpansionKind::Bo2 => "Bo2",
            ExpansionKind::Kl => "KL",
        }
    }
}

impl fmt::Display for ExpansionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// An expansion model: feedback weighting plus the Rocchio merge weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansionModel {
    pub kind: ExpansionKind,
    /// Merge weight in `[0, 1]`; 0.4 by default.
    pub beta: f64,
}

impl ExpansionModel {
    pub const DEFAULT_BETA: f64 = 0.4;

    pub fn new(kind: ExpansionKind) -> ExpansionModel {
        ExpansionModel {
            kind,
            beta: Self::DEFAULT_BETA,
        }
    }

    pub fn none() -> ExpansionModel {
        ExpansionModel::new(ExpansionKind::None)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::InvalidParameter(format!(
                "beta={} not in [0,1]",
                self.beta
            )));
        }
        Ok(())
    }
}

/// Feedback budget: number of feedback documents `D` and expansion terms `T`.
///
/// `D = 0 ⇔ T = 0 ⇔ the expansion model is None`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ExpansionBudget {
    pub docs: usize,
    pub terms: usize,
}

impl ExpansionBudget {
    pub fn none() -> ExpansionBudget {
        ExpansionBudget { docs: 0, terms: 0 }
    }
}

/// Weight every term of the feedback set (top `min(D, |first_pass|)`
/// documents) under the feedback model.
///
/// `D = 0` or an empty first pass yield an empty map, which signals a no-op
/// expansion downstream. Terms absent from the feedback documents are absent
/// from the map.
pub fn expansion_weights(
    index: &InvertedIndex,
    first_pass: &ScoredList,
    kind: ExpansionKind,
    docs: usize,
) -> BTreeMap<String, f64> {
    let mut weights = BTreeMap::new();
    if kind == ExpansionKind::None || docs == 0 || first_pass.is_empty() {
        return weights;
    }

    // feedback-set term frequencies and token mass
    let mut tf_x: BTreeMap<u32, u64> = BTreeMap::new();
    let mut fb_tokens = 0u64;
    for doc_id in first_pass.top_ids(docs) {
        let Some(doc) = index.doc_index(doc_id) else {
            continue;
        };
        fb_tokens += index.doc_len(doc);
        for &(term, tf) in index.doc_terms(doc) {
            *tf_x.entry(term).or_insert(0) += tf as u64;
        }
    }
    if fb_tokens == 0 {
        return weights;
    }

    let n_docs = index.n_docs() as f64;
    let total = index.total_tokens() as f64;
    for (term, tf) in tf_x {
        let tf = tf as f64;
        let f_t = index.collection_freq(term) as f64;
        let w = match kind {
            ExpansionKind::Bo1 => {
                let lambda = f_t / n_docs;
                tf * ((1.0 + lambda) / lambda).log2() + (1.0 + lambda).log2()
            }
            ExpansionKind::Bo2 => {
                let lambda = f_t * fb_tokens as f64 / total;
                tf * ((1.0 + lambda) / lambda).log2() + (1.0 + lambda).log2()
            }
            ExpansionKind::Kl => {
                let p_x = tf / fb_tokens as f64;
                let p_c = f_t / total;
                if p_x <= p_c {
                    continue;
                }
                p_x * (p_x / p_c).log2()
            }
            ExpansionKind::None => unreachable!(),
        };
        weights.insert(index.term(term).to_string(), w);
    }
    weights
}

/// Merge the top `T` expansion terms into the original query.
///
/// Selection is by descending weight with ties broken by ascending term.
/// All original terms are retained; `|result| ≤ |original| + T`.
pub fn expand(
    original: &WeightedQuery,
    weights: &BTreeMap<String, f64>,
    terms: usize,
    beta: f64,
) -> WeightedQuery {
    if terms == 0 || weights.is_empty() {
        return original.clone();
    }

    let mut ranked: Vec<(&String, f64)> = weights.iter().map(|(t, &w)| (t, w)).collect();
    ranked.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .expect("expansion weights must not be NaN")
            .then_with(|| a.0.cmp(b.0))
    });
    ranked.truncate(terms);

    let max_orig = original
        .term_weights
        .values()
        .fold(0.0f64, |m, &w| m.max(w));
    let max_exp = ranked.iter().fold(0.0f64, |m, &(_, w)| m.max(w));

    let mut merged: BTreeMap<String, f64> = BTreeMap::new();
    for (term, &w) in &original.term_weights {
        let base = if max_orig > 0.0 { w / max_orig } else { 0.0 };
        merged.insert(term.clone(), base);
    }
    if max_exp > 0.0 {
        for (term, w) in ranked {
            *merged.entry(term.clone()).or_insert(0.0) += beta * w / max_exp;
        }
    }
    WeightedQuery {
        topic_id: original.topic_id.clone(),
        term_weights: merged,
    }
}
