//! Experiment configuration: a TOML file, schema-validated before any work.
//!
//! ```toml
//! [corpus]
//! documents = ["data/documents.trec"]
//! topics = "data/topics.txt"
//! qrels = "data/qrels.txt"
//!
//! [threads]
//! weighting = ["BM25", "PL2"]      # the unexpanded thread per model is implicit
//! expansion = ["Bo1", "KL"]        # "None" is implicit
//! feedback_docs = [5, 10, 20]      # D values; 0 is implicit
//! expansion_terms = [5, 10]        # T values; 0 is implicit
//!
//! [experiment]
//! measure = "AP"
//! modes = ["ERisk-SQE", "ERisk-SQP", "Best-SQE"]
//! trials = 3
//! seed = 42
//! ```
//!
//! Every section except `[corpus]` has defaults (the desk-scale enumeration:
//! 8 weighting models × 3 expansion models × D ∈ {5,10,20} × T ∈ {5,10}, plus
//! the 8 unexpanded threads — 152 processing threads).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::TokenizerConfig;
use crate::evalkit::Measure;
use crate::expansion::{ExpansionKind, ExpansionModel};
use crate::gridpoints::{enumerate_threads, ProcessingThread};
use crate::retrieval::{ModelKind, ModelParams, WeightingModel};
use crate::selector::SelectionMode;
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusConfig {
    /// TREC document files.
    pub documents: Vec<PathBuf>,
    pub topics: PathBuf,
    pub qrels: PathBuf,
    /// Optional persisted index; commands load it instead of re-indexing.
    #[serde(default)]
    pub index: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThreadsConfig {
    pub weighting: Vec<String>,
    /// Expanding models only; the unexpanded thread is always enumerated.
    pub expansion: Vec<String>,
    pub feedback_docs: Vec<usize>,
    pub expansion_terms: Vec<usize>,
    /// Rocchio merge weight for all expanding threads.
    pub beta: f64,
}

impl Default for ThreadsConfig {
    fn default() -> Self {
        ThreadsConfig {
            weighting: ModelKind::ALL.iter().map(|k| k.id().to_string()).collect(),
            expansion: ExpansionKind::EXPANDING
                .iter()
                .map(|k| k.id().to_string())
                .collect(),
            feedback_docs: vec![5, 10, 20],
            expansion_terms: vec![5, 10],
            beta: ExpansionModel::DEFAULT_BETA,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolConfig {
    /// Training/selection measure: AP, nDCG@10, or P@10.
    pub measure: String,
    pub modes: Vec<String>,
    pub trials: usize,
    pub seed: u64,
    /// Risk trade-off for SQP candidate selection.
    pub lambda: f64,
    /// BM25 cutoff for feature extraction and document reranking.
    pub top_k: usize,
    /// Retrieval depth for runs.
    pub depth: usize,
    /// Worker count for grid generation; 0 = all cores. Train and RT are
    /// always single-threaded for timing fidelity.
    pub parallelism: usize,
    /// Router / reranker training epochs.
    pub epochs: usize,
    /// L2 regularization for router and reranker.
    pub reg: f64,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            measure: "AP".to_string(),
            modes: SelectionMode::ALL.iter().map(|m| m.id().to_string()).collect(),
            trials: 3,
            seed: 42,
            lambda: 1.0,
            top_k: crate::features::DEFAULT_TOP_K,
            depth: crate::retrieval::DEFAULT_DEPTH,
            parallelism: 1,
            epochs: 200,
            reg: 1.5,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from("out"),
        }
    }
}

/// The whole experiment configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub corpus: CorpusConfig,
    #[serde(default)]
    pub pipeline: TokenizerConfig,
    #[serde(default)]
    pub models: ModelParams,
    #[serde(default)]
    pub threads: ThreadsConfig,
    #[serde(default)]
    pub experiment: ProtocolConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl ExperimentConfig {
    /// Parse and validate a TOML document.
    pub fn from_toml_str(text: &str) -> Result<ExperimentConfig> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Load and validate a configuration file.
    pub fn load(path: &Path) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path)?;
        ExperimentConfig::from_toml_str(&text)
    }

    /// A minimal configuration pointing at the given corpus files, with
    /// defaults everywhere else.
    pub fn for_corpus(documents: Vec<PathBuf>, topics: PathBuf, qrels: PathBuf) -> ExperimentConfig {
        ExperimentConfig {
            corpus: CorpusConfig {
                documents,
                topics,
                qrels,
                index: None,
            },
            pipeline: TokenizerConfig::default(),
            models: ModelParams::default(),
            threads: ThreadsConfig::default(),
            experiment: ProtocolConfig::default(),
            output: OutputConfig::default(),
        }
    }

    /// Schema and range validation; every accessor below must succeed after
    /// this passes.
    pub fn validate(&self) -> Result<()> {
        if self.corpus.documents.is_empty() {
            return Err(Error::InvalidConfig("corpus.documents is empty".into()));
        }
        self.models.validate()?;
        self.measure()?;
        self.modes()?;
        self.enumerate()?;
        let e = &self.experiment;
        if e.trials == 0 {
            return Err(Error::InvalidConfig("experiment.trials must be ≥ 1".into()));
        }
        if e.depth == 0 || e.top_k == 0 {
            return Err(Error::InvalidConfig(
                "experiment.depth and experiment.top_k must be ≥ 1".into(),
            ));
        }
        if e.lambda < 0.0 {
            return Err(Error::InvalidConfig("experiment.lambda must be ≥ 0".into()));
        }
        if e.epochs == 0 {
            return Err(Error::InvalidConfig("experiment.epochs must be ≥ 1".into()));
        }
        if e.reg < 0.0 {
            return Err(Error::InvalidConfig("experiment.reg must be ≥ 0".into()));
        }
        Ok(())
    }

    pub fn measure(&self) -> Result<Measure> {
        self.experiment.measure.parse()
    }

    pub fn modes(&self) -> Result<Vec<SelectionMode>> {
        self.experiment.modes.iter().map(|m| m.parse()).collect()
    }

    /// Weighting models named in the config, with the configured parameters.
    pub fn weighting_models(&self) -> Result<Vec<WeightingModel>> {
        self.threads
            .weighting
            .iter()
            .map(|id| WeightingModel::with_params(ModelKind::from_id(id)?, self.models))
            .collect()
    }

    /// Expansion models named in the config plus the implicit `None`.
    pub fn expansion_models(&self) -> Result<Vec<ExpansionModel>> {
        let mut models = vec![ExpansionModel::none()];
        for id in &self.threads.expansion {
            let m = ExpansionModel {
                kind: ExpansionKind::from_id(id)?,
                beta: self.threads.beta,
            };
            if m.kind == ExpansionKind::None {
                continue;
            }
            m.validate()?;
            models.push(m);
        }
        Ok(models)
    }

    /// Enumerate the full processing-thread set for this config.
    pub fn enumerate(&self) -> Result<Vec<ProcessingThread>> {
        let w = self.weighting_models()?;
        let q = self.expansion_models()?;
        let mut d = vec![0usize];
        d.extend(self.threads.feedback_docs.iter().filter(|&&v| v > 0));
        let mut t = vec![0usize];
        t.extend(self.threads.expansion_terms.iter().filter(|&&v| v > 0));
        enumerate_threads(&w, &q, &d, &t)
    }

    /// Re-attach this config's hyperparameters to a thread parsed from a
    /// manifest or grid file (which carry ids only).
    pub fn attach_params(&self, thread: &ProcessingThread) -> ProcessingThread {
        let mut out = thread.clone();
        out.weighting.params = self.models;
        out.expansion.beta = self.threads.beta;
        out
    }
}
