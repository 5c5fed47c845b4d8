//! Processing threads and the grid of points.
//!
//! A processing thread `(W, Q, D, T)` names one end-to-end retrieval
//! configuration: weighting model, expansion model, feedback-document count,
//! and expansion-term count. Executing every thread over a topic set and
//! evaluating the runs produces the grid of points — the per-(thread, query)
//! effectiveness matrix that candidate selection and routing train on.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::time::Instant;

use rayon::prelude::*;

use crate::corpus::{InvertedIndex, Qrels, Topic};
use crate::evalkit::{evaluate, Measure};
use crate::expansion::{expand, expansion_weights, ExpansionBudget, ExpansionKind, ExpansionModel};
use crate::retrieval::{score, ScoredList, WeightedQuery, WeightingModel};
use crate::{Error, Result};

/// One end-to-end retrieval configuration.
///
/// Threads are identified by their canonical id `W/Q/D/T` (for example
/// `PL2/Bo1/10/5`); hyperparameters ride along but do not participate in
/// identity or ordering, since a grid applies one parameter setting per
/// model.
#[derive(Debug, Clone)]
pub struct ProcessingThread {
    pub weighting: WeightingModel,
    pub expansion: ExpansionModel,
    pub budget: ExpansionBudget,
}

impl ProcessingThread {
    pub fn unexpanded(weighting: WeightingModel) -> ProcessingThread {
        ProcessingThread {
            weighting,
            expansion: ExpansionModel::none(),
            budget: ExpansionBudget::none(),
        }
    }

    pub fn expanded(
        weighting: WeightingModel,
        expansion: ExpansionModel,
        docs: usize,
        terms: usize,
    ) -> ProcessingThread {
        ProcessingThread {
            weighting,
            expansion,
            budget: ExpansionBudget { docs, terms },
        }
    }

    /// Canonical id `W/Q/D/T`.
    pub fn id(&self) -> String {
        format!(
            "{}/{}/{}/{}",
            self.weighting.kind,
            self.expansion.kind,
            self.budget.docs,
            self.budget.terms
        )
    }

    /// Parse a canonical id, attaching default hyperparameters.
    pub fn parse_id(id: &str) -> Result<ProcessingThread> {
        let parts: Vec<&str> = id.split('/').collect();
        if parts.len() != 4 {
            return Err(Error::InvalidConfig(format!(
                "thread id must be W/Q/D/T, got {id:?}"
            )));
        }
        let weighting = WeightingModel::from_id(parts[0])?;
        let expansion = ExpansionModel::new(ExpansionKind::from_id(parts[1])?);
        let docs = parts[2]
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("bad D in thread id {id:?}")))?;
        let terms = parts[3]
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("bad T in thread id {id:?}")))?;
        let thread = ProcessingThread {
            weighting,
            expansion,
            budget: ExpansionBudget { docs, terms },
        };
        thread.validate()?;
        Ok(thread)
    }

    /// Structural invariants: `Q = None ⇔ D = 0 ⇔ T = 0`, and expanded
    /// threads have positive budgets. Hyperparameters are range-checked too.
    pub fn validate(&self) -> Result<()> {
        self.weighting.params.validate()?;
        self.expansion.validate()?;
        let expanded = self.expansion.kind != ExpansionKind::None;
        let ok = if expanded {
            self.budget.docs > 0 && self.budget.terms > 0
        } else {
            self.budget.docs == 0 && self.budget.terms == 0
        };
        if !ok {
            return Err(Error::InvalidConfig(format!(
                "thread {} violates Q=None ⇔ D=0 ⇔ T=0",
                self.id()
            )));
        }
        Ok(())
    }

    pub fn is_expanded(&self) -> bool {
        self.expansion.kind != ExpansionKind::None
    }

    fn key(&self) -> (crate::retrieval::ModelKind, ExpansionKind, usize, usize) {
        (
            self.weighting.kind,
            self.expansion.kind,
            self.budget.docs,
            self.budget.terms,
        )
    }
}

impl PartialEq for ProcessingThread {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl Eq for ProcessingThread {}

impl PartialOrd for ProcessingThread {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ProcessingThread {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

impl fmt::Display for ProcessingThread {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

/// Enumerate all processing threads from the value sets: exactly one
/// unexpanded thread per weighting model, plus the Cartesian product of
/// models × expanding models × positive D × positive T. Output is
/// deduplicated and canonically ordered.
pub fn enumerate_threads(
    w_set: &[WeightingModel],
    q_set: &[ExpansionModel],
    d_set: &[usize],
    t_set: &[usize],
) -> Result<Vec<ProcessingThread>> {
    if w_set.is_empty() {
        return Err(Error::InvalidConfig("weighting model set is empty".into()));
    }
    if q_set.is_empty() || d_set.is_empty() || t_set.is_empty() {
        return Err(Error::InvalidConfig(
            "expansion model, D, and T sets must be nonempty".into(),
        ));
    }
    let has_none = q_set.iter().any(|q| q.kind == ExpansionKind::None);
    let has_zero_d = d_set.contains(&0);
    let has_zero_t = t_set.contains(&0);
    if has_none != has_zero_d || has_none != has_zero_t {
        return Err(Error::InvalidConfig(
            "0 ∈ D and 0 ∈ T exactly when None is among the expansion models".into(),
        ));
    }

    let mut out = BTreeSet::new();
    for w in w_set {
        w.params.validate()?;
        out.insert(ProcessingThread::unexpanded(*w));
        for q in q_set {
            if q.kind == ExpansionKind::None {
                continue;
            }
            q.validate()?;
            for &d in d_set {
                if d == 0 {
                    continue;
                }
                for &t in t_set {
                    if t == 0 {
                        continue;
                    }
                    out.insert(ProcessingThread::expanded(*w, *q, d, t));
                }
            }
        }
    }
    Ok(out.into_iter().collect())
}

/// Execute one thread for one topic.
///
/// Unexpanded threads are a single scoring pass. Expanded threads run a first
/// pass under `W`, mine expansion weights from the top `D` documents, merge
/// the top `T` terms, and score again under `W`.
pub fn run_thread_single(
    index: &InvertedIndex,
    topic: &Topic,
    thread: &ProcessingThread,
    depth: usize,
) -> ScoredList {
    let query = WeightedQuery::from_topic(topic);
    if query.is_degenerate() {
        return ScoredList::empty(&topic.topic_id, depth);
    }
    if !thread.is_expanded() {
        return score(index, &query, &thread.weighting, depth);
    }
    let first = score(index, &query, &thread.weighting, depth);
    let weights = expansion_weights(index, &first, thread.expansion.kind, thread.budget.docs);
    let expanded = expand(&query, &weights, thread.budget.terms, thread.expansion.beta);
    score(index, &expanded, &thread.weighting, depth)
}

/// Execute one thread over a topic set, preserving topic order.
pub fn run_thread(
    index: &InvertedIndex,
    topics: &[Topic],
    thread: &ProcessingThread,
    depth: usize,
) -> Vec<ScoredList> {
    topics
        .iter()
        .map(|t| run_thread_single(index, t, thread, depth))
        .collect()
}

/// A thread's run plus the per-topic wall time it took to produce.
pub struct TimedRun {
    pub thread: ProcessingThread,
    pub lists: Vec<ScoredList>,
    pub per_topic_ms: Vec<f64>,
}

/// Execute many threads over the topic set on a work pool.
///
/// Results are keyed by thread and reassembled in input order, so the output
/// is identical whatever the degree of parallelism. Per-(thread, topic)
/// elapsed time is recorded task-locally.
pub fn run_threads(
    index: &InvertedIndex,
    topics: &[Topic],
    threads: &[ProcessingThread],
    depth: usize,
    parallelism: usize,
) -> Result<Vec<TimedRun>> {
    let work = |threads: &[ProcessingThread]| -> Vec<TimedRun> {
        threads
            .par_iter()
            .map(|thread| {
                let mut lists = Vec::with_capacity(topics.len());
                let mut per_topic_ms = Vec::with_capacity(topics.len());
                for topic in topics {
                    let start = Instant::now();
                    lists.push(run_thread_single(index, topic, thread, depth));
                    per_topic_ms.push(start.elapsed().as_secs_f64() * 1e3);
                }
                TimedRun {
                    thread: thread.clone(),
                    lists,
                    per_topic_ms,
                }
            })
            .collect()
    };
    if parallelism == 0 {
        // 0 = library default (all cores)
        Ok(work(threads))
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(parallelism)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("cannot build worker pool: {e}")))?;
        Ok(pool.install(|| work(threads)))
    }
}

/// The per-(thread, query) effectiveness matrix for one measure.
#[derive(Debug, Clone, PartialEq)]
pub struct GridOfPoints {
    threads: Vec<ProcessingThread>,
    topics: Vec<String>,
    /// `eff[thread][topic]`, all values in `[0, 1]`.
    eff: Vec<Vec<f64>>,
    measure: Measure,
}

impl GridOfPoints {
    pub fn new(
        threads: Vec<ProcessingThread>,
        topics: Vec<String>,
        eff: Vec<Vec<f64>>,
        measure: Measure,
    ) -> Result<GridOfPoints> {
        if eff.len() != threads.len() || eff.iter().any(|row| row.len() != topics.len()) {
            return Err(Error::InvalidConfig(format!(
                "grid must be {} × {}",
                threads.len(),
                topics.len()
            )));
        }
        if eff
            .iter()
            .flatten()
            .any(|v| !v.is_finite() || !(0.0..=1.0).contains(v))
        {
            return Err(Error::InvalidConfig(
                "grid values must lie in [0,1]".into(),
            ));
        }
        Ok(GridOfPoints {
            threads,
            topics,
            eff,
            measure,
        })
    }

    pub fn threads(&self) -> &[ProcessingThread] {
        &self.threads
    }

    pub fn topics(&self) -> &[String] {
        &self.topics
    }

    pub fn measure(&self) -> Measure {
        self.measure
    }

    pub fn value(&self, thread: usize, topic: usize) -> f64 {
        self.eff[thread][topic]
    }

    pub fn row(&self, thread: usize) -> &[f64] {
        &self.eff[thread]
    }

    pub fn thread_index(&self, thread: &ProcessingThread) -> Option<usize> {
        self.threads.iter().position(|t| t == thread)
    }

    pub fn topic_index(&self, topic: &str) -> Option<usize> {
        self.topics.iter().position(|t| t == topic)
    }

    /// Mean effectiveness of a thread across all grid topics.
    pub fn mean_effectiveness(&self, thread: usize) -> f64 {
        let row = &self.eff[thread];
        if row.is_empty() {
            return 0.0;
        }
        row.iter().sum::<f64>() / row.len() as f64
    }

    /// Restriction of the grid to a topic subset (for example a training
    /// fold). Topic order follows the subset argument.
    pub fn subgrid(&self, topics: &[String]) -> Result<GridOfPoints> {
        let mut cols = Vec::with_capacity(topics.len());
        for t in topics {
            cols.push(
                self.topic_index(t)
                    .ok_or_else(|| Error::GridLookup(format!("topic {t} not in grid")))?,
            );
        }
        let eff = self
            .eff
            .iter()
            .map(|row| cols.iter().map(|&c| row[c]).collect())
            .collect();
        GridOfPoints::new(self.threads.clone(), topics.to_vec(), eff, self.measure)
    }

    /// Persist as TSV: `thread_id topic_id measure value`. Values use the
    /// shortest round-trip float representation, so reading the file back
    /// reproduces every cell bit-exactly.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> Result<()> {
        for (ti, thread) in self.threads.iter().enumerate() {
            let id = thread.id();
            for (qi, topic) in self.topics.iter().enumerate() {
                writeln!(w, "{id}\t{topic}\t{}\t{}", self.measure, self.eff[ti][qi])?;
            }
        }
        Ok(())
    }

    /// Read a grid written by [`GridOfPoints::write_tsv`].
    pub fn read_tsv<R: Read>(r: R, path: &str) -> Result<GridOfPoints> {
        let mut threads: Vec<ProcessingThread> = Vec::new();
        let mut topics: Vec<String> = Vec::new();
        let mut eff: Vec<Vec<f64>> = Vec::new();
        let mut measure: Option<Measure> = None;
        for (idx, line) in BufReader::new(r).lines().enumerate() {
            let lineno = idx + 1;
            let line = line?;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 4 {
                return Err(Error::Parse {
                    path: path.to_string(),
                    line: lineno,
                    message: format!("expected 4 fields, got {}", fields.len()),
                });
            }
            let thread = ProcessingThread::parse_id(fields[0])?;
            let m: Measure = fields[2].parse()?;
            if *measure.get_or_insert(m) != m {
                return Err(Error::Parse {
                    path: path.to_string(),
                    line: lineno,
                    message: "mixed measures in one grid file".into(),
                });
            }
            let value: f64 = fields[3].parse().map_err(|_| Error::Parse {
                path: path.to_string(),
                line: lineno,
                message: format!("bad value {:?}", fields[3]),
            })?;
            if threads.last() != Some(&thread) {
                threads.push(thread);
                eff.push(Vec::new());
            }
            let row = eff.last_mut().unwrap();
            if threads.len() == 1 {
                topics.push(fields[1].to_string());
            } else {
                let expected = topics.get(row.len()).map(String::as_str);
                if expected != Some(fields[1]) {
                    return Err(Error::Parse {
                        path: path.to_string(),
                        line: lineno,
                        message: format!(
                            "topic order mismatch: expected {expected:?}, got {:?}",
                            fields[1]
                        ),
                    });
                }
            }
            row.push(value);
        }
        let measure = measure.ok_or_else(|| Error::Parse {
            path: path.to_string(),
            line: 0,
            message: "empty grid file".into(),
        })?;
        GridOfPoints::new(threads, topics, eff, measure)
    }
}

/// Evaluate every run against the judgments and assemble the grid.
///
/// Topics absent from the qrels score 0 and are flagged with a warning; the
/// matrix stays rectangular.
pub fn build_grid(
    runs: &[TimedRun],
    qrels: &Qrels,
    measure: Measure,
) -> Result<GridOfPoints> {
    if runs.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let topics: Vec<String> = runs[0].lists.iter().map(|l| l.topic_id.clone()).collect();
    for topic in &topics {
        if !qrels.has_topic(topic) {
            log::warn!("topic {topic} absent from qrels; its grid cells are 0");
        }
    }
    let mut threads = Vec::with_capacity(runs.len());
    let mut eff = Vec::with_capacity(runs.len());
    for run in runs {
        let got: Vec<&str> = run.lists.iter().map(|l| l.topic_id.as_str()).collect();
        if got != topics.iter().map(String::as_str).collect::<Vec<_>>() {
            return Err(Error::InvalidConfig(format!(
                "thread {} was run over a different topic sequence",
                run.thread.id()
            )));
        }
        threads.push(run.thread.clone());
        eff.push(
            run.lists
                .iter()
                .map(|list| evaluate(measure, list, qrels))
                .collect(),
        );
    }
    GridOfPoints::new(threads, topics, eff, measure)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_index, Document};
    use crate::retrieval::{bm25_default, ModelKind};
    use proptest::prelude::*;

    fn doc(id: &str, tokens: &[&str]) -> Document {
        Document {
            doc_id: id.to_string(),
            tokens: tokens.iter().map(|t| t.to_string()).collect(),
        }
    }

    fn fixture_index() -> InvertedIndex {
        build_index([
            doc("d01", &["petroleum", "exploration", "south", "atlantic"]),
            doc("d02", &["falkland", "islands", "oil", "exploration"]),
            doc("d03", &["petroleum", "industry", "report"]),
            doc("d04", &["south", "atlantic", "fisheries", "dispute"]),
            doc("d05", &["oil", "drilling", "platform", "north", "sea"]),
            doc("d06", &["falkland", "petroleum", "exploration", "licence"]),
            doc("d07", &["world", "news", "summary"]),
            doc("d08", &["exploration", "of", "mars", "surface"]),
            doc("d09", &["petroleum", "exploration", "exploration", "drilling"]),
            doc("d10", &["economic", "impact", "of", "oil", "prices"]),
        ])
        .unwrap()
    }

    fn topic(id: &str, terms: &[&str]) -> Topic {
        Topic {
            topic_id: id.to_string(),
            title_terms: terms.iter().map(|t| t.to_string()).collect(),
        }
    }

    fn bm25() -> WeightingModel {
        WeightingModel::bm25_default()
    }

    #[test]
    fn enumeration_applies_the_structural_constraint() {
        let threads = enumerate_threads(
            &[bm25()],
            &[ExpansionModel::none(), ExpansionModel::new(ExpansionKind::Bo1)],
            &[0, 2],
            &[0, 5],
        )
        .unwrap();
        let ids: Vec<String> = threads.iter().map(|t| t.id()).collect();
        assert_eq!(ids, ["BM25/None/0/0", "BM25/Bo1/2/5"]);
    }

    #[test]
    fn enumeration_without_expansion() {
        let threads = enumerate_threads(
            &[bm25(), WeightingModel::new(ModelKind::Pl2)],
            &[ExpansionModel::none()],
            &[0],
            &[0],
        )
        .unwrap();
        assert_eq!(threads.len(), 2);
        assert!(threads.iter().all(|t| !t.is_expanded()));
    }

    #[test]
    fn desk_scale_enumeration_has_152_threads() {
        let w: Vec<WeightingModel> = ModelKind::ALL.map(WeightingModel::new).to_vec();
        let q: Vec<ExpansionModel> = std::iter::once(ExpansionModel::none())
            .chain(ExpansionKind::EXPANDING.map(ExpansionModel::new))
            .collect();
        let threads = enumerate_threads(&w, &q, &[0, 5, 10, 20], &[0, 5, 10]).unwrap();
        assert_eq!(threads.len(), 8 + 8 * 3 * 3 * 2);
        assert_eq!(threads.len(), 152);
    }

    #[test]
    fn empty_weighting_set_is_an_error() {
        assert!(enumerate_threads(&[], &[ExpansionModel::none()], &[0], &[0]).is_err());
    }

    #[test]
    fn inconsistent_zero_membership_is_an_error() {
        // None present but no zero in D
        assert!(enumerate_threads(
            &[bm25()],
            &[ExpansionModel::none(), ExpansionModel::new(ExpansionKind::Bo1)],
            &[2],
            &[0, 5],
        )
        .is_err());
    }

    #[test]
    fn thread_id_round_trip() {
        for id in ["BM25/None/0/0", "PL2/Bo1/10/5", "LGD/KL/50/20"] {
            assert_eq!(ProcessingThread::parse_id(id).unwrap().id(), id);
        }
        assert!(ProcessingThread::parse_id("BM25/Bo1/0/5").is_err());
        assert!(ProcessingThread::parse_id("BM25/None/0").is_err());
    }

    #[test]
    fn unexpanded_thread_equals_bm25_default() {
        let idx = fixture_index();
        let topics = [topic("1", &["petroleum", "exploration"])];
        let thread = ProcessingThread::unexpanded(bm25());
        let via_thread = run_thread(&idx, &topics, &thread, 100);
        let direct = bm25_default(&idx, &WeightedQuery::from_topic(&topics[0]), 100);
        assert_eq!(via_thread[0], direct);
    }

    // The expanded thread must equal the manual three-step composition of the
    // module operations.
    #[test]
    fn expanded_thread_equals_manual_composition() {
        let idx = fixture_index();
        let t = topic("1", &["petroleum", "exploration"]);
        let thread = ProcessingThread::expanded(
            bm25(),
            ExpansionModel::new(ExpansionKind::Bo1),
            2,
            5,
        );
        let got = run_thread_single(&idx, &t, &thread, 100);

        let query = WeightedQuery::from_topic(&t);
        let first = score(&idx, &query, &bm25(), 100);
        let weights = expansion_weights(&idx, &first, ExpansionKind::Bo1, 2);
        let expanded = expand(&query, &weights, 5, ExpansionModel::DEFAULT_BETA);
        let manual = score(&idx, &expanded, &bm25(), 100);
        assert_eq!(got, manual);
    }

    #[test]
    fn none_thread_pipeline_is_bit_identical_to_single_pass() {
        let idx = fixture_index();
        let t = topic("1", &["oil", "drilling"]);
        for kind in ModelKind::ALL {
            let thread = ProcessingThread::unexpanded(WeightingModel::new(kind));
            let via = run_thread_single(&idx, &t, &thread, 50);
            let direct = score(
                &idx,
                &WeightedQuery::from_topic(&t),
                &WeightingModel::new(kind),
                50,
            );
            assert_eq!(via, direct, "{kind}");
        }
    }

    #[test]
    fn degenerate_topic_yields_empty_run_and_zero_effectiveness() {
        let idx = fixture_index();
        let topics = [topic("1", &[])];
        let thread = ProcessingThread::unexpanded(bm25());
        let runs = run_threads(&idx, &topics, &[thread], 100, 1).unwrap();
        assert!(runs[0].lists[0].is_empty());
        let mut qrels = Qrels::new();
        qrels.insert("1", "d01", 1);
        let grid = build_grid(&runs, &qrels, Measure::Ap).unwrap();
        assert_eq!(grid.value(0, 0), 0.0);
    }

    #[test]
    fn identical_runs_give_identical_rows() {
        let idx = fixture_index();
        let topics = [
            topic("1", &["petroleum"]),
            topic("2", &["oil", "falkland"]),
        ];
        let thread = ProcessingThread::unexpanded(bm25());
        let mut qrels = Qrels::new();
        qrels.insert("1", "d09", 1);
        qrels.insert("2", "d02", 2);
        let runs = run_threads(&idx, &topics, &[thread.clone(), thread], 100, 1).unwrap();
        let grid = build_grid(&runs, &qrels, Measure::Ap).unwrap();
        assert_eq!(grid.row(0), grid.row(1));
    }

    #[test]
    fn grid_rows_reproducible_via_evalkit() {
        let idx = fixture_index();
        let topics = [
            topic("1", &["petroleum", "exploration"]),
            topic("2", &["oil"]),
        ];
        let mut qrels = Qrels::new();
        qrels.insert("1", "d01", 1);
        qrels.insert("1", "d06", 2);
        qrels.insert("2", "d05", 1);
        let threads = [
            ProcessingThread::unexpanded(bm25()),
            ProcessingThread::expanded(bm25(), ExpansionModel::new(ExpansionKind::Kl), 2, 3),
        ];
        let runs = run_threads(&idx, &topics, &threads, 100, 1).unwrap();
        let grid = build_grid(&runs, &qrels, Measure::Ap).unwrap();
        for (ti, run) in runs.iter().enumerate() {
            for (qi, list) in run.lists.iter().enumerate() {
                let direct = crate::evalkit::average_precision(list, &qrels);
                assert_eq!(grid.value(ti, qi), direct);
            }
        }
    }

    #[test]
    fn parallel_and_serial_grids_are_bit_identical() {
        let idx = fixture_index();
        let topics = [
            topic("1", &["petroleum", "exploration"]),
            topic("2", &["oil", "sea"]),
            topic("3", &["falkland"]),
        ];
        let w: Vec<WeightingModel> = ModelKind::ALL.map(WeightingModel::new).to_vec();
        let q = [ExpansionModel::none(), ExpansionModel::new(ExpansionKind::Bo1)];
        let threads = enumerate_threads(&w, &q, &[0, 2], &[0, 3]).unwrap();
        let mut qrels = Qrels::new();
        qrels.insert("1", "d06", 1);
        qrels.insert("2", "d05", 1);
        qrels.insert("3", "d02", 1);
        let serial = run_threads(&idx, &topics, &threads, 100, 1).unwrap();
        let parallel = run_threads(&idx, &topics, &threads, 100, 4).unwrap();
        let g1 = build_grid(&serial, &qrels, Measure::Ndcg10).unwrap();
        let g2 = build_grid(&parallel, &qrels, Measure::Ndcg10).unwrap();
        assert_eq!(g1, g2);
    }

    #[test]
    fn grid_tsv_round_trip() {
        let threads = vec![
            ProcessingThread::unexpanded(bm25()),
            ProcessingThread::expanded(bm25(), ExpansionModel::new(ExpansionKind::Bo1), 5, 10),
        ];
        let grid = GridOfPoints::new(
            threads,
            vec!["1".into(), "2".into()],
            vec![vec![0.25, 0.5], vec![1.0 / 3.0, 0.9502344167898356]],
            Measure::Ap,
        )
        .unwrap();
        let mut buf = Vec::new();
        grid.write_tsv(&mut buf).unwrap();
        let back = GridOfPoints::read_tsv(buf.as_slice(), "mem").unwrap();
        assert_eq!(grid, back);
    }

    #[test]
    fn subgrid_selects_columns() {
        let grid = GridOfPoints::new(
            vec![ProcessingThread::unexpanded(bm25())],
            vec!["1".into(), "2".into(), "3".into()],
            vec![vec![0.1, 0.2, 0.3]],
            Measure::Ap,
        )
        .unwrap();
        let sub = grid.subgrid(&["3".into(), "1".into()]).unwrap();
        assert_eq!(sub.row(0), &[0.3, 0.1]);
        assert!(grid.subgrid(&["9".into()]).is_err());
    }

    proptest! {
        // |W| + |W|·|Q≠None|·|D>0|·|T>0| for arbitrary value sets
        #[test]
        fn enumeration_count_formula(
            n_w in 1usize..8,
            n_q in 0usize..3,
            ds in prop::collection::btree_set(1usize..60, 1..5),
            ts in prop::collection::btree_set(1usize..25, 1..4),
        ) {
            let w: Vec<WeightingModel> =
                ModelKind::ALL[..n_w].iter().map(|&k| WeightingModel::new(k)).collect();
            let mut q = vec![ExpansionModel::none()];
            q.extend(ExpansionKind::EXPANDING[..n_q].iter().map(|&k| ExpansionModel::new(k)));
            let mut d: Vec<usize> = vec![0];
            d.extend(ds.iter().copied());
            let mut t: Vec<usize> = vec![0];
            t.extend(ts.iter().copied());
            let threads = enumerate_threads(&w, &q, &d, &t).unwrap();
            let expected = n_w + n_w * n_q * ds.len() * ts.len();
            prop_assert_eq!(threads.len(), expected);
            // no duplicates, canonical order
            for pair in threads.windows(2) {
                prop_assert!(pair[0] < pair[1]);
            }
        }
    }
}
