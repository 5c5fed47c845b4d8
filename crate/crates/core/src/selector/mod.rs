//! Candidate-pair selection, routing, fusion, and the document reranking
//! baseline.
//!
//! Given a grid of points over training queries, the selector picks two
//! candidate threads:
//!
//! * `C1` is always the thread with the highest mean training effectiveness.
//! * For SQE, `C2` is the expansion/non-expansion counterpart of `C1` under
//!   the same weighting model.
//! * For SQP, `C2` maximizes `gain = reward − λ·risk`, where reward and risk
//!   are the mean per-query positive and negative margins against `C1`.
//!
//! A learned linear router then assigns each query to one of the two.

mod fusion;
mod l2r;
mod router;

pub use fusion::{combsum, combsum_with, FusionNorm};
pub use l2r::{
    doc_training_data, l2r_document_baseline, rerank_with, train_doc_ranker,
    train_doc_ranker_from, DocRanker, L2rParams, TopicDocData,
};
pub use router::{read_model, route, train_router, write_model, Candidate, RoutingModel};

use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::str::FromStr;

use crate::expansion::ExpansionKind;
use crate::gridpoints::{GridOfPoints, ProcessingThread};
use crate::{Error, Result};

/// How the candidate pair is constructed.
///
/// `ERisk-SQE` and `Best-SQE` share the same construction rule; they differ
/// only when handed different grids (the harness documents which grid each
/// sees — by default both see the full training grid).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SelectionMode {
    EriskSqe,
    EriskSqp,
    BestSqe,
}

impl SelectionMode {
    pub const ALL: [SelectionMode; 3] = [
        SelectionMode::EriskSqe,
        SelectionMode::EriskSqp,
        SelectionMode::BestSqe,
    ];

    pub fn id(&self) -> &'static str {
        match self {
            SelectionMode::EriskSqe => "ERisk-SQE",
            SelectionMode::EriskSqp => "ERisk-SQP",
            SelectionMode::BestSqe => "Best-SQE",
        }
    }
}

impl FromStr for SelectionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<SelectionMode> {
        match s {
            "ERisk-SQE" | "erisk-sqe" => Ok(SelectionMode::EriskSqe),
            "ERisk-SQP" | "erisk-sqp" => Ok(SelectionMode::EriskSqp),
            "Best-SQE" | "best-sqe" => Ok(SelectionMode::BestSqe),
            other => Err(Error::InvalidConfig(format!(
                "unknown selection mode {other:?}"
            ))),
        }
    }
}

impl fmt::Display for SelectionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// The two candidate threads a meta-system routes between.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidatePair {
    pub c1: ProcessingThread,
    pub c2: ProcessingThread,
    pub mode: SelectionMode,
}

impl CandidatePair {
    pub fn new(
        c1: ProcessingThread,
        c2: ProcessingThread,
        mode: SelectionMode,
    ) -> Result<CandidatePair> {
        let pair = CandidatePair { c1, c2, mode };
        pair.validate()?;
        Ok(pair)
    }

    /// `c1 ≠ c2`; SQE pairs share the weighting model and exactly one side is
    /// unexpanded.
    pub fn validate(&self) -> Result<()> {
        if self.c1 == self.c2 {
            return Err(Error::InvalidConfig(format!(
                "candidate pair has identical threads {}",
                self.c1.id()
            )));
        }
        if matches!(self.mode, SelectionMode::EriskSqe | SelectionMode::BestSqe) {
            if self.c1.weighting.kind != self.c2.weighting.kind {
                return Err(Error::InvalidConfig(format!(
                    "SQE pair must share the weighting model: {} vs {}",
                    self.c1.id(),
                    self.c2.id()
                )));
            }
            let none_count = [&self.c1, &self.c2]
                .iter()
                .filter(|t| t.expansion.kind == ExpansionKind::None)
                .count();
            if none_count != 1 {
                return Err(Error::InvalidConfig(format!(
                    "SQE pair needs exactly one unexpanded side: {} vs {}",
                    self.c1.id(),
                    self.c2.id()
                )));
            }
        }
        Ok(())
    }

    pub fn candidates(&self) -> [&ProcessingThread; 2] {
        [&self.c1, &self.c2]
    }
}

/// Risk/reward decomposition of a candidate's gain against `C1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskGain {
    /// Mean per-query positive margin over `C1`, ≥ 0.
    pub reward: f64,
    /// Mean per-query loss against `C1`, ≥ 0.
    pub risk: f64,
    /// `reward − lambda·risk`.
    pub gain: f64,
    pub lambda: f64,
}

/// The thread with the highest mean effectiveness over the grid's queries.
/// Ties break toward the canonically smallest thread id.
pub fn select_c1(grid_train: &GridOfPoints) -> Result<ProcessingThread> {
    if grid_train.threads().is_empty() {
        return Err(Error::EmptyGrid);
    }
    let mut best: Option<(f64, &ProcessingThread)> = None;
    for (i, thread) in grid_train.threads().iter().enumerate() {
        let mean = grid_train.mean_effectiveness(i);
        let better = match &best {
            None => true,
            Some((bm, bt)) => mean > *bm || (mean == *bm && thread < bt),
        };
        if better {
            best = Some((mean, thread));
        }
    }
    Ok(best.expect("nonempty grid has a best thread").1.clone())
}

/// The expansion/non-expansion counterpart of `c1` under the same weighting
/// model.
///
/// If `c1` is expanded, the counterpart is exactly `(W1, None, 0, 0)`.
/// If `c1` is unexpanded, the counterpart is the expanded thread with `W1`
/// that has the highest mean training effectiveness.
pub fn sqe_counterpart(
    grid_train: &GridOfPoints,
    c1: &ProcessingThread,
) -> Result<ProcessingThread> {
    if c1.is_expanded() {
        let unexpanded = ProcessingThread::unexpanded(c1.weighting);
        return grid_train
            .threads()
            .iter()
            .find(|t| **t == unexpanded)
            .cloned()
            .ok_or_else(|| {
                Error::MissingCounterpart(format!(
                    "grid lacks the unexpanded thread {}",
                    unexpanded.id()
                ))
            });
    }
    let mut best: Option<(f64, &ProcessingThread)> = None;
    for (i, thread) in grid_train.threads().iter().enumerate() {
        if thread.weighting.kind != c1.weighting.kind || !thread.is_expanded() {
            continue;
        }
        let mean = grid_train.mean_effectiveness(i);
        let better = match &best {
            None => true,
            Some((bm, bt)) => mean > *bm || (mean == *bm && thread < bt),
        };
        if better {
            best = Some((mean, thread));
        }
    }
    best.map(|(_, t)| t.clone()).ok_or_else(|| {
        Error::MissingCounterpart(format!(
            "no expanded thread shares weighting model {}",
            c1.weighting.kind
        ))
    })
}

/// The thread maximizing `gain = reward − λ·risk` against `c1`.
///
/// `reward(c) = mean_q max(0, eff_c(q) − eff_c1(q))` and
/// `risk(c) = mean_q max(0, eff_c1(q) − eff_c(q))`. Ties break toward the
/// canonically smallest thread.
pub fn sqp_second(
    grid_train: &GridOfPoints,
    c1: &ProcessingThread,
    lambda: f64,
) -> Result<(ProcessingThread, RiskGain)> {
    if grid_train.threads().len() < 2 {
        return Err(Error::InvalidConfig(
            "SQP needs at least two threads in the grid".into(),
        ));
    }
    let c1_idx = grid_train
        .thread_index(c1)
        .ok_or_else(|| Error::GridLookup(format!("thread {} not in grid", c1.id())))?;
    let c1_row = grid_train.row(c1_idx);
    let n = c1_row.len() as f64;

    let mut best: Option<(RiskGain, &ProcessingThread)> = None;
    for (i, thread) in grid_train.threads().iter().enumerate() {
        if thread == c1 {
            continue;
        }
        let row = grid_train.row(i);
        let mut reward = 0.0;
        let mut risk = 0.0;
        for (v, base) in row.iter().zip(c1_row) {
            reward += (v - base).max(0.0);
            risk += (base - v).max(0.0);
        }
        reward /= n;
        risk /= n;
        let rg = RiskGain {
            reward,
            risk,
            gain: reward - lambda * risk,
            lambda,
        };
        let better = match &best {
            None => true,
            Some((brg, bt)) => rg.gain > brg.gain || (rg.gain == brg.gain && thread < bt),
        };
        if better {
            best = Some((rg, thread));
        }
    }
    let (rg, thread) = best.expect("grid with ≥ 2 threads has a second candidate");
    Ok((thread.clone(), rg))
}

/// Construct the candidate pair for a mode over a training grid.
///
/// Returns the pair and, for SQP, the winning candidate's risk/gain record.
pub fn select_pair(
    grid_train: &GridOfPoints,
    mode: SelectionMode,
    lambda: f64,
) -> Result<(CandidatePair, Option<RiskGain>)> {
    let c1 = select_c1(grid_train)?;
    match mode {
        SelectionMode::EriskSqe | SelectionMode::BestSqe => {
            let c2 = sqe_counterpart(grid_train, &c1)?;
            Ok((CandidatePair::new(c1, c2, mode)?, None))
        }
        SelectionMode::EriskSqp => {
            let (c2, rg) = sqp_second(grid_train, &c1, lambda)?;
            Ok((CandidatePair::new(c1, c2, mode)?, Some(rg)))
        }
    }
}

/// Persist a candidate pair: mode, lambda, and the two canonical thread ids.
pub fn write_manifest<W: Write>(mut w: W, pair: &CandidatePair, lambda: f64) -> Result<()> {
    writeln!(w, "#sqp-candidates\t1")?;
    writeln!(w, "mode\t{}", pair.mode)?;
    writeln!(w, "lambda\t{lambda}")?;
    writeln!(w, "c1\t{}", pair.c1.id())?;
    writeln!(w, "c2\t{}", pair.c2.id())?;
    Ok(())
}

/// Read a manifest written by [`write_manifest`]. Thread hyperparameters are
/// defaults; callers re-attach configured parameters before execution.
pub fn read_manifest<R: Read>(r: R, path: &str) -> Result<(CandidatePair, f64)> {
    let mut mode: Option<SelectionMode> = None;
    let mut lambda = 1.0;
    let mut c1: Option<ProcessingThread> = None;
    let mut c2: Option<ProcessingThread> = None;
    for (idx, line) in BufReader::new(r).lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('\t') else {
            return Err(Error::Parse {
                path: path.to_string(),
                line: lineno,
                message: "expected key\\tvalue".into(),
            });
        };
        match key {
            "mode" => mode = Some(value.parse()?),
            "lambda" => {
                lambda = value.parse().map_err(|_| Error::Parse {
                    path: path.to_string(),
                    line: lineno,
                    message: format!("bad lambda {value:?}"),
                })?
            }
            "c1" => c1 = Some(ProcessingThread::parse_id(value)?),
            "c2" => c2 = Some(ProcessingThread::parse_id(value)?),
            other => {
                return Err(Error::Parse {
                    path: path.to_string(),
                    line: lineno,
                    message: format!("unrecognized key {other:?}"),
                })
            }
        }
    }
    let missing = |what: &str| Error::Parse {
        path: path.to_string(),
        line: 0,
        message: format!("manifest lacks {what}"),
    };
    let pair = CandidatePair::new(
        c1.ok_or_else(|| missing("c1"))?,
        c2.ok_or_else(|| missing("c2"))?,
        mode.ok_or_else(|| missing("mode"))?,
    )?;
    Ok((pair, lambda))
}
