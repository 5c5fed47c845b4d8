//! Phase timing: Gen (offline data generation), Train (offline model
//! training), RT (per-query runtime processing).
//!
//! Every elapsed measurement is attributed to exactly one phase; nested
//! timers are rejected so no interval is double-counted. The audit log keeps
//! one labeled record per measurement, which is how the harness proves that
//! RT covers feature extraction, routing, and retrieval and nothing else.

use std::cell::Cell;
use std::fmt;
use std::io::Write;
use std::time::Instant;

use crate::{Error, Result};

/// The three efficiency phases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Gen,
    Train,
    Rt,
}

impl Phase {
    pub const ALL: [Phase; 3] = [Phase::Gen, Phase::Train, Phase::Rt];

    pub fn id(&self) -> &'static str {
        match self {
            Phase::Gen => "Gen",
            Phase::Train => "Train",
            Phase::Rt => "RT",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

thread_local! {
    static ACTIVE: Cell<Option<Phase>> = const { Cell::new(None) };
}

struct PhaseGuard;

impl Drop for PhaseGuard {
    fn drop(&mut self) {
        ACTIVE.with(|a| a.set(None));
    }
}

/// Run `work`, returning its result and the wall-clock elapsed milliseconds
/// attributed to `phase`. Starting a timer while another is active on the
/// same thread is an error.
pub fn timed<T>(phase: Phase, work: impl FnOnce() -> T) -> Result<(T, f64)> {
    ACTIVE.with(|active| {
        if let Some(running) = active.get() {
            return Err(Error::NestedTimer(running.id().to_string()));
        }
        active.set(Some(phase));
        Ok(())
    })?;
    let _guard = PhaseGuard;
    let start = Instant::now();
    let result = work();
    let elapsed = start.elapsed().as_secs_f64() * 1e3;
    Ok((result, elapsed))
}

/// Per-query timing summary of one phase execution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseTiming {
    pub phase: Phase,
    /// Mean elapsed per query, milliseconds.
    pub mean_ms: f64,
    /// Sample standard deviation over queries (0 for a single query).
    pub std_ms: f64,
    /// Total elapsed across all measurements.
    pub total_ms: f64,
    pub n: usize,
}

impl PhaseTiming {
    pub fn from_samples(phase: Phase, samples: &[f64]) -> PhaseTiming {
        let n = samples.len();
        let total_ms: f64 = samples.iter().sum();
        let mean_ms = if n > 0 { total_ms / n as f64 } else { 0.0 };
        let std_ms = if n > 1 {
            (samples
                .iter()
                .map(|s| (s - mean_ms) * (s - mean_ms))
                .sum::<f64>()
                / (n - 1) as f64)
                .sqrt()
        } else {
            0.0
        };
        PhaseTiming {
            phase,
            mean_ms,
            std_ms,
            total_ms,
            n,
        }
    }
}

/// One attributed measurement: which method, which phase, what work, where.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditRecord {
    pub method: String,
    pub phase: Phase,
    pub label: String,
    pub trial: usize,
    pub fold: String,
    pub ms: f64,
}

/// Append-only log of every timed measurement in an experiment.
#[derive(Debug, Clone, Default)]
pub struct AuditLog {
    records: Vec<AuditRecord>,
}

impl AuditLog {
    pub fn new() -> AuditLog {
        AuditLog::default()
    }

    pub fn add(
        &mut self,
        method: &str,
        phase: Phase,
        label: &str,
        trial: usize,
        fold: &str,
        ms: f64,
    ) {
        self.records.push(AuditRecord {
            method: method.to_string(),
            phase,
            label: label.to_string(),
            trial,
            fold: fold.to_string(),
            ms,
        });
    }

    pub fn records(&self) -> &[AuditRecord] {
        &self.records
    }

    /// TSV: `method phase label trial fold ms`.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "#method\tphase\tlabel\ttrial\tfold\tms")?;
        for r in &self.records {
            writeln!(
                w,
                "{}\t{}\t{}\t{}\t{}\t{}",
                r.method, r.phase, r.label, r.trial, r.fold, r.ms
            )?;
        }
        Ok(())
    }
}
