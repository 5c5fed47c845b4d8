//! Term-weighting models.
//!
//! The model roster is the closed set {BM25, TFIDF, DirichletLM, HiemstraLM,
//! PL2, InL2, DPH, LGD}. Formulas follow the standard literature definitions:
//!
//! * BM25 (Robertson/Spärck Jones): `idf · tf·(k1+1) / (K + tf)` with
//!   `idf = ln(1 + (N − n_t + 0.5)/(n_t + 0.5))` and
//!   `K = k1·((1−b) + b·dl/avdl)`.
//! * TF-IDF: Robertson tf `tf/(tf + K)` times `ln(N/n_t)`.
//! * Dirichlet LM (Zhai/Lafferty): query likelihood with Dirichlet smoothing,
//!   `ln(1 + tf/(µ·P_c)) + ln(µ/(µ + dl))` per term, `P_c = F_t/|C|`.
//! * Hiemstra LM: `ln(1 + λ·tf·|C| / ((1−λ)·F_t·dl))`.
//! * PL2, InL2, DPH, LGD: divergence-from-randomness models with the usual
//!   second normalization `tfn = tf·log2(1 + c·avdl/dl)` where applicable.
//!
//! Scores may be negative (language-model log-scores); ranking order is the
//! contract, not score sign.

use std::f64::consts::{LOG2_E, PI};
use std::fmt;

use crate::{Error, Result};

/// Identifier of a weighting model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ModelKind {
    Bm25,
    TfIdf,
    DirichletLm,
    HiemstraLm,
    Pl2,
    InL2,
    Dph,
    Lgd,
}

impl ModelKind {
    /// Every implemented model, in canonical order.
    pub const ALL: [ModelKind; 8] = [
        ModelKind::Bm25,
        ModelKind::TfIdf,
        ModelKind::DirichletLm,
        ModelKind::HiemstraLm,
        ModelKind::Pl2,
        ModelKind::InL2,
        ModelKind::Dph,
        ModelKind::Lgd,
    ];

    pub fn from_id(id: &str) -> Result<ModelKind> {
        match id {
            "BM25" => Ok(ModelKind::Bm25),
            "TFIDF" => Ok(ModelKind::TfIdf),
            "DirichletLM" => Ok(ModelKind::DirichletLm),
            "HiemstraLM" => Ok(ModelKind::HiemstraLm),
            "PL2" => Ok(ModelKind::Pl2),
            "InL2" => Ok(ModelKind::InL2),
            "DPH" => Ok(ModelKind::Dph),
            "LGD" => Ok(ModelKind::Lgd),
            other => Err(Error::UnknownModel(other.to_string())),
        }
    }

    pub fn id(&self) -> &'static str {
        match self {
            ModelKind::Bm25 => "BM25",
            ModelKind::TfIdf => "TFIDF",
            ModelKind::DirichletLm => "DirichletLM",
            ModelKind::HiemstraLm => "HiemstraLM",
            ModelKind::Pl2 => "PL2",
            ModelKind::InL2 => "InL2",
            ModelKind::Dph => "DPH",
            ModelKind::Lgd => "LGD",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// Named hyperparameters. Each model reads only the fields that apply to it.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParams {
    /// BM25/TF-IDF length-normalization slope, in `[0, 1]`.
    pub b: f64,
    /// BM25/TF-IDF saturation, `> 0`.
    pub k1: f64,
    /// Dirichlet smoothing mass, `> 0`.
    pub mu: f64,
    /// Hiemstra mixing weight on the document model, in `(0, 1)`.
    pub lambda: f64,
    /// DFR second-normalization constant, `> 0` (PL2, InL2, LGD).
    pub c: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            b: 0.75,
            k1: 1.2,
            mu: 2500.0,
            lambda: 0.15,
            c: 1.0,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.b) {
            return Err(Error::InvalidParameter(format!("b={} not in [0,1]", self.b)));
        }
        if self.k1 <= 0.0 {
            return Err(Error::InvalidParameter(format!("k1={} not > 0", self.k1)));
        }
        if self.mu <= 0.0 {
            return Err(Error::InvalidParameter(format!("mu={} not > 0", self.mu)));
        }
        if self.lambda <= 0.0 || self.lambda >= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "lambda={} not in (0,1)",
                self.lambda
            )));
        }
        if self.c <= 0.0 {
            return Err(Error::InvalidParameter(format!("c={} not > 0", self.c)));
        }
        Ok(())
    }
}

/// A weighting model: identifier plus hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightingModel {
    pub kind: ModelKind,
    pub params: ModelParams,
}

impl WeightingModel {
    /// Model with default parameters.
    pub fn new(kind: ModelKind) -> WeightingModel {
        WeightingModel {
            kind,
            params: ModelParams::default(),
        }
    }

    /// Parse a model id string; unknown ids are rejected.
    pub fn from_id(id: &str) -> Result<WeightingModel> {
        Ok(WeightingModel::new(ModelKind::from_id(id)?))
    }

    /// The Baseline-1 ranker: BM25 with b = 0.75, k1 = 1.2.
    pub fn bm25_default() -> WeightingModel {
        WeightingModel::new(ModelKind::Bm25)
    }

    pub fn with_params(kind: ModelKind, params: ModelParams) -> Result<WeightingModel> {
        params.validate()?;
        Ok(WeightingModel { kind, params })
    }
}

impl fmt::Display for WeightingModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.kind.fmt(f)
    }
}

/// Per-term statistics needed by the scorers.
#[derive(Debug, Clone, Copy)]
pub(crate) struct TermStats {
    /// Document frequency `n_t`.
    pub n_t: f64,
    /// Collection frequency `F_t`.
    pub f_t: f64,
}

/// Collection-level statistics.
#[derive(Debug, Clone, Copy)]
pub(crate) struct CollectionStats {
    pub n_docs: f64,
    pub avg_dl: f64,
    pub total_tokens: f64,
}

impl WeightingModel {
    /// Score contribution of a term with frequency `tf > 0` in a document of
    /// length `dl`, before query-weight scaling.
    pub(crate) fn term_score(&self, tf: f64, dl: f64, t: &TermStats, c: &CollectionStats) -> f64 {
        let p = &self.params;
        match self.kind {
            ModelKind::Bm25 => {
                let idf = (1.0 + (c.n_docs - t.n_t + 0.5) / (t.n_t + 0.5)).ln();
                let k = p.k1 * ((1.0 - p.b) + p.b * dl / c.avg_dl);
                idf * tf * (p.k1 + 1.0) / (k + tf)
            }
            ModelKind::TfIdf => {
                let k = p.k1 * ((1.0 - p.b) + p.b * dl / c.avg_dl);
                let rtf = tf / (tf + k);
                rtf * (c.n_docs / t.n_t).ln()
            }
            ModelKind::DirichletLm => {
                // tf-dependent part only; the per-document length normalizer
                // is charged once per unit of query weight by the caller via
                // `doc_component`.
                let p_c = t.f_t / c.total_tokens;
                (1.0 + tf / (p.mu * p_c)).ln()
            }
            ModelKind::HiemstraLm => {
                (1.0 + (p.lambda * tf * c.total_tokens) / ((1.0 - p.lambda) * t.f_t * dl)).ln()
            }
            ModelKind::Pl2 => {
                let tfn = tf * (1.0 + p.c * c.avg_dl / dl).log2();
                let lambda = t.f_t / c.n_docs;
                (tfn * (tfn / lambda).log2()
                    + (lambda - tfn) * LOG2_E
                    + 0.5 * (2.0 * PI * tfn).log2())
                    / (tfn + 1.0)
            }
            ModelKind::InL2 => {
                let tfn = tf * (1.0 + p.c * c.avg_dl / dl).log2();
                tfn / (tfn + 1.0) * ((c.n_docs + 1.0) / (t.n_t + 0.5)).log2()
            }
            ModelKind::Dph => {
                // tf == dl (a document made of one repeated term) drives the
                // norm to 0 and the inner log to -inf; the limit is 0.
                if tf >= dl {
                    return 0.0;
                }
                let f = tf / dl;
                let norm = (1.0 - f) * (1.0 - f) / (tf + 1.0);
                norm * (tf * ((tf * c.avg_dl / dl) * (c.n_docs / t.f_t)).log2()
                    + 0.5 * (2.0 * PI * tf * (1.0 - f)).log2())
            }
            ModelKind::Lgd => {
                let tfn = tf * (1.0 + p.c * c.avg_dl / dl).log2();
                let lambda = t.n_t / c.n_docs;
                ((lambda + tfn) / lambda).log2() / (tfn + 1.0)
            }
        }
    }

    /// Additive per-document component applied once per unit of query weight,
    /// independent of term matches. Nonzero only for Dirichlet LM, whose
    /// query-likelihood score carries a length normalizer for every query
    /// term, matched or not.
    pub(crate) fn doc_component(&self, dl: f64, _c: &CollectionStats) -> f64 {
        match self.kind {
            ModelKind::DirichletLm => {
                let mu = self.params.mu;
                (mu / (mu + dl)).ln()
            }
            _ => 0.0,
        }
    }
}
