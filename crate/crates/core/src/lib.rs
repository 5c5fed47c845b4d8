//! Selective query processing at desk scale.
//!
//! `sqp-core` is a self-contained information-retrieval engine plus a
//! meta-search experiment harness. It covers the full pipeline:
//!
//! 1. [`corpus`] — TREC-format ingestion, tokenization, and the immutable
//!    inverted index.
//! 2. [`retrieval`] — eight term-weighting models (BM25, TF-IDF, Dirichlet LM,
//!    Hiemstra LM, PL2, InL2, DPH, LGD) over weighted queries.
//! 3. [`expansion`] — pseudo-relevance-feedback query expansion (Bo1, Bo2, KL).
//! 4. [`gridpoints`] — enumeration of processing threads `(W, Q, D, T)` and the
//!    per-(thread, query) effectiveness matrix used as the training substrate.
//! 5. [`evalkit`] — AP, nDCG@10, P@10, cross-validation folds, paired t-tests.
//! 6. [`features`] — aggregated per-query feature vectors for router training.
//! 7. [`selector`] — candidate-pair selection (risk/reward), the linear routing
//!    model, CombSum fusion, and a document-level learning-to-rank baseline.
//! 8. [`harness`] — experiment configuration, Gen/Train/RT phase timing, the
//!    end-to-end protocol, and report rendering.
//!
//! A deterministic synthetic corpus generator lives in [`synth`] so the whole
//! experiment can run without any external data.

pub mod corpus;
pub mod error;
pub mod evalkit;
pub mod expansion;
pub mod features;
pub mod gridpoints;
pub mod harness;
pub mod retrieval;
pub mod selector;
pub mod synth;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
