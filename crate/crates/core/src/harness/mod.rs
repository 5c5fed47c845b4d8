//! Experiment configuration, phase timing, the end-to-end protocol, and
//! report rendering.

mod config;
mod experiment;
mod report;
mod timing;

pub use config::{
    CorpusConfig, ExperimentConfig, OutputConfig, ProtocolConfig, ThreadsConfig,
};
pub use experiment::{load_corpus, run_experiment, BONFERRONI_DIVISOR};
pub use report::{bonferroni_significant, Cell, Method, ReportRow, ReportTable};
pub use timing::{timed, AuditLog, AuditRecord, Phase, PhaseTiming};
