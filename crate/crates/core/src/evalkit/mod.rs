//! Effectiveness metrics, fold construction, and significance testing.
//!
//! All metrics are rank-based: they read the ordering of a [`ScoredList`],
//! never its score values. Unjudged documents count as non-relevant.

mod folds;
mod stats;

pub use folds::{make_folds, FoldPlan, SplitMix64};
pub use stats::{paired_t_test, summarize, SummaryStat};

use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::str::FromStr;

use crate::corpus::Qrels;
use crate::retrieval::ScoredList;
use crate::{Error, Result};

/// Effectiveness measures supported by grids and reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Measure {
    /// Average precision over the full run depth.
    Ap,
    /// Normalized discounted cumulative gain at cutoff 10 (linear gains).
    Ndcg10,
    /// Precision at cutoff 10.
    P10,
}

impl Measure {
    pub const ALL: [Measure; 3] = [Measure::Ap, Measure::Ndcg10, Measure::P10];

    pub fn id(&self) -> &'static str {
        match self {
            Measure::Ap => "AP",
            Measure::Ndcg10 => "nDCG@10",
            Measure::P10 => "P@10",
        }
    }
}

impl FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Measure> {
        match s {
            "AP" | "ap" | "map" => Ok(Measure::Ap),
            "nDCG@10" | "ndcg@10" | "ndcg_cut_10" => Ok(Measure::Ndcg10),
            "P@10" | "p@10" | "P_10" => Ok(Measure::P10),
            other => Err(Error::InvalidConfig(format!("unknown measure {other:?}"))),
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// Mean precision at the ranks of relevant retrieved documents, divided by
/// the total number of relevant documents `R`. 0 when `R = 0`.
pub fn average_precision(run: &ScoredList, qrels: &Qrels) -> f64 {
    let relevant = qrels.relevant_count(&run.topic_id);
    if relevant == 0 {
        return 0.0;
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, doc) in run.ranking().iter().enumerate() {
        if qrels.grade(&run.topic_id, &doc.doc_id) > 0 {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    sum / relevant as f64
}

/// Relevant documents in the top 10, divided by 10. Runs shorter than 10 are
/// implicitly padded with non-relevant documents.
pub fn precision_at_10(run: &ScoredList, qrels: &Qrels) -> f64 {
    let hits = run
        .ranking()
        .iter()
        .take(10)
        .filter(|d| qrels.grade(&run.topic_id, &d.doc_id) > 0)
        .count();
    hits as f64 / 10.0
}

/// nDCG@10 with linear gains (`gain = grade`) and discount `1/log2(rank+1)`,
/// normalized by the ideal DCG@10 from the judgments. 0 when the topic has no
/// relevant documents.
pub fn ndcg_at_10(run: &ScoredList, qrels: &Qrels) -> f64 {
    let Some(judged) = qrels.topic_judgments(&run.topic_id) else {
        return 0.0;
    };
    let mut ideal: Vec<u32> = judged.values().copied().filter(|&g| g > 0).collect();
    ideal.sort_unstable_by(|a, b| b.cmp(a));
    let idcg: f64 = ideal
        .iter()
        .take(10)
        .enumerate()
        .map(|(i, &g)| g as f64 / ((i + 2) as f64).log2())
        .sum();
    if idcg == 0.0 {
        return 0.0;
    }
    let dcg: f64 = run
        .ranking()
        .iter()
        .take(10)
        .enumerate()
        .map(|(i, d)| qrels.grade(&run.topic_id, &d.doc_id) as f64 / ((i + 2) as f64).log2())
        .sum();
    dcg / idcg
}

/// Evaluate one run under the chosen measure.
pub fn evaluate(measure: Measure, run: &ScoredList, qrels: &Qrels) -> f64 {
    match measure {
        Measure::Ap => average_precision(run, qrels),
        Measure::Ndcg10 => ndcg_at_10(run, qrels),
        Measure::P10 => precision_at_10(run, qrels),
    }
}

/// Write per-topic metric rows as TSV: `topic_id metric value`.
pub fn write_topic_metrics<W: Write>(
    mut w: W,
    rows: &[(String, Measure, f64)],
) -> Result<()> {
    for (topic, measure, value) in rows {
        writeln!(w, "{topic}\t{measure}\t{value}")?;
    }
    Ok(())
}

/// Read rows written by [`write_topic_metrics`].
pub fn read_topic_metrics<R: Read>(r: R, path: &str) -> Result<Vec<(String, Measure, f64)>> {
    let mut rows = Vec::new();
    for (idx, line) in BufReader::new(r).lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                path: path.to_string(),
                line: lineno,
                message: format!("expected 3 fields, got {}", fields.len()),
            });
        }
        let measure: Measure = fields[1].parse()?;
        let value: f64 = fields[2].parse().map_err(|_| Error::Parse {
            path: path.to_string(),
            line: lineno,
            message: format!("bad value {:?}", fields[2]),
        })?;
        rows.push((fields[0].to_string(), measure, value));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::retrieval::ScoredDoc;

    fn run(topic: &str, ids: &[&str]) -> ScoredList {
        ScoredList::from_candidates(
            topic,
            1000,
            ids.iter()
                .enumerate()
                .map(|(i, id)| ScoredDoc {
                    doc_id: id.to_string(),
                    score: (ids.len() - i) as f64,
                })
                .collect(),
        )
    }

    fn qrels(topic: &str, graded: &[(&str, u32)]) -> Qrels {
        let mut q = Qrels::new();
        for (doc, grade) in graded {
            q.insert(topic, doc, *grade);
        }
        q
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12
    }

    #[test]
    fn ap_perfect_ranking_is_one() {
        let q = qrels("t", &[("d1", 1), ("d2", 1)]);
        assert_eq!(average_precision(&run("t", &["d1", "d2"]), &q), 1.0);
    }

    #[test]
    fn ap_single_relevant_at_rank_two() {
        let q = qrels("t", &[("d2", 1)]);
        assert_eq!(average_precision(&run("t", &["d1", "d2"]), &q), 0.5);
    }

    // (1/3)(1/2 + 2/5 + 3/9), frozen from the definition
    #[test]
    fn ap_three_relevant_fixture() {
        let q = qrels("t", &[("r1", 1), ("r2", 1), ("r3", 1)]);
        let r = run(
            "t",
            &["x1", "r1", "x2", "x3", "r2", "x4", "x5", "x6", "r3", "x7"],
        );
        assert!(close(average_precision(&r, &q), 0.4111111111111111));
    }

    #[test]
    fn ap_no_relevant_is_zero() {
        let q = Qrels::new();
        assert_eq!(average_precision(&run("t", &["d1"]), &q), 0.0);
    }

    #[test]
    fn p10_all_relevant_top_10() {
        let ids: Vec<String> = (0..10).map(|i| format!("d{i}")).collect();
        let graded: Vec<(&str, u32)> = ids.iter().map(|s| (s.as_str(), 1)).collect();
        let q = qrels("t", &graded);
        let refs: Vec<&str> = ids.iter().map(|s| s.as_str()).collect();
        assert_eq!(precision_at_10(&run("t", &refs), &q), 1.0);
    }

    #[test]
    fn p10_empty_run_is_zero() {
        let q = qrels("t", &[("d1", 1)]);
        assert_eq!(precision_at_10(&ScoredList::empty("t", 1000), &q), 0.0);
    }

    #[test]
    fn p10_short_run_padded_with_nonrelevant() {
        let q = qrels("t", &[("d1", 1), ("d2", 1)]);
        assert_eq!(precision_at_10(&run("t", &["d1", "d2"]), &q), 0.2);
    }

    #[test]
    fn ndcg_ideal_ordering_is_one() {
        let q = qrels("t", &[("d1", 2), ("d2", 1)]);
        assert_eq!(ndcg_at_10(&run("t", &["d1", "d2"]), &q), 1.0);
    }

    #[test]
    fn ndcg_without_relevant_docs_is_zero() {
        let q = qrels("t", &[("d9", 0)]);
        assert_eq!(ndcg_at_10(&run("t", &["d1"]), &q), 0.0);
        assert_eq!(ndcg_at_10(&run("t", &["d1"]), &Qrels::new()), 0.0);
    }

    // (2 + 1/2) / (2 + 1/log2(3)), frozen from the definition
    #[test]
    fn ndcg_graded_fixture() {
        let q = qrels("t", &[("d1", 2), ("d3", 1)]);
        let r = run("t", &["d1", "d2", "d3"]);
        assert!(close(ndcg_at_10(&r, &q), 0.9502344167898356));
    }

    #[test]
    fn metrics_are_rank_based() {
        // same ordering, transformed scores: every metric must be unchanged
        let q = qrels("t", &[("d2", 2), ("d4", 1)]);
        let base = run("t", &["d1", "d2", "d3", "d4"]);
        let transformed = ScoredList::from_candidates(
            "t",
            1000,
            base.ranking()
                .iter()
                .map(|d| ScoredDoc {
                    doc_id: d.doc_id.clone(),
                    score: d.score * 3.0 + 7.0,
                })
                .collect(),
        );
        for m in Measure::ALL {
            assert_eq!(evaluate(m, &base, &q), evaluate(m, &transformed, &q));
        }
    }

    #[test]
    fn topic_metric_tsv_round_trip() {
        let rows = vec![
            ("351".to_string(), Measure::Ap, 0.4111111111111111),
            ("352".to_string(), Measure::Ndcg10, 0.9502344167898356),
            ("353".to_string(), Measure::P10, 0.2),
        ];
        let mut buf = Vec::new();
        write_topic_metrics(&mut buf, &rows).unwrap();
        let back = read_topic_metrics(buf.as_slice(), "mem").unwrap();
        assert_eq!(rows, back);
    }
}
