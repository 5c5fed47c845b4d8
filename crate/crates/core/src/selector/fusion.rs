//! CombSum data fusion.

use std::collections::HashMap;
use std::str::FromStr;

use crate::retrieval::{ScoredDoc, ScoredList};
use crate::{Error, Result};

/// Per-run score treatment before summing.
///
/// The original formulation sums raw scores; min-max per-run normalization is
/// the default here because heterogeneous weighting models produce
/// incomparable score scales.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FusionNorm {
    /// Raw scores, summed as-is.
    None,
    /// Min-max to `[0, 1]` over each run's retrieved set; a constant-score
    /// run normalizes to all 1.0.
    #[default]
    MinMax,
}

impl FromStr for FusionNorm {
    type Err = Error;

    fn from_str(s: &str) -> Result<FusionNorm> {
        match s {
            "none" => Ok(FusionNorm::None),
            "minmax" => Ok(FusionNorm::MinMax),
            other => Err(Error::InvalidConfig(format!(
                "unknown fusion normalization {other:?} (expected none|minmax)"
            ))),
        }
    }
}

/// Fuse two runs for the same topic by summing min-max-normalized scores.
///
/// Documents absent from a run contribute 0 from that side. The fused list
/// is reordered canonically and truncated to `depth`.
pub fn combsum(run_a: &ScoredList, run_b: &ScoredList, depth: usize) -> Result<ScoredList> {
    combsum_with(run_a, run_b, depth, FusionNorm::MinMax)
}

/// CombSum with an explicit normalization choice.
pub fn combsum_with(
    run_a: &ScoredList,
    run_b: &ScoredList,
    depth: usize,
    norm: FusionNorm,
) -> Result<ScoredList> {
    if run_a.topic_id != run_b.topic_id {
        return Err(Error::TopicMismatch {
            left: run_a.topic_id.clone(),
            right: run_b.topic_id.clone(),
        });
    }
    let mut fused: HashMap<&str, f64> = HashMap::new();
    for run in [run_a, run_b] {
        for (doc_id, value) in normalized(run, norm) {
            *fused.entry(doc_id).or_insert(0.0) += value;
        }
    }
    Ok(ScoredList::from_candidates(
        &run_a.topic_id,
        depth,
        fused
            .into_iter()
            .map(|(doc_id, score)| ScoredDoc {
                doc_id: doc_id.to_string(),
                score,
            })
            .collect(),
    ))
}

fn normalized(run: &ScoredList, norm: FusionNorm) -> impl Iterator<Item = (&str, f64)> {
    let min = run
        .ranking()
        .iter()
        .map(|d| d.score)
        .fold(f64::INFINITY, f64::min);
    let max = run
        .ranking()
        .iter()
        .map(|d| d.score)
        .fold(f64::NEG_INFINITY, f64::max);
    let span = max - min;
    run.ranking().iter().map(move |d| {
        let value = match norm {
            FusionNorm::None => d.score,
            FusionNorm::MinMax => {
                if span > 0.0 {
                    (d.score - min) / span
                } else {
                    1.0
                }
            }
        };
        (d.doc_id.as_str(), value)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn run(topic: &str, docs: &[(&str, f64)]) -> ScoredList {
        ScoredList::from_candidates(
            topic,
            1000,
            docs.iter()
                .map(|(id, s)| ScoredDoc {
                    doc_id: id.to_string(),
                    score: *s,
                })
                .collect(),
        )
    }

    fn ids(list: &ScoredList) -> Vec<&str> {
        list.ranking().iter().map(|d| d.doc_id.as_str()).collect()
    }

    #[test]
    fn fusing_a_run_with_itself_preserves_its_ranking() {
        let a = run("t", &[("d1", 9.0), ("d2", 4.0), ("d3", 1.5)]);
        let fused = combsum(&a, &a, 100).unwrap();
        assert_eq!(ids(&fused), ids(&a));
    }

    #[test]
    fn disjoint_single_document_runs_tie_and_break_by_doc_id() {
        let a = run("t", &[("d2", 7.0)]);
        let b = run("t", &[("d1", 3.0)]);
        let fused = combsum(&a, &b, 100).unwrap();
        // constant-score runs normalize to 1.0 each
        assert_eq!(ids(&fused), ["d1", "d2"]);
        assert_eq!(fused.ranking()[0].score, 1.0);
        assert_eq!(fused.ranking()[1].score, 1.0);
    }

    // brute-force normalize-and-sum recomputed inline
    #[test]
    fn overlapping_fixture_matches_brute_force() {
        let a = run("t", &[("d1", 10.0), ("d2", 5.0), ("d3", 0.0)]);
        let b = run("t", &[("d2", 2.0), ("d4", 1.0), ("d1", 0.5)]);
        let fused = combsum(&a, &b, 100).unwrap();

        let norm_a = |s: f64| (s - 0.0) / 10.0;
        let norm_b = |s: f64| (s - 0.5) / 1.5;
        let mut expected = vec![
            ("d1", norm_a(10.0) + norm_b(0.5)),
            ("d2", norm_a(5.0) + norm_b(2.0)),
            ("d3", norm_a(0.0)),
            ("d4", norm_b(1.0)),
        ];
        expected.sort_by(|x, y| y.1.partial_cmp(&x.1).unwrap().then(x.0.cmp(y.0)));
        assert_eq!(
            ids(&fused),
            expected.iter().map(|(id, _)| *id).collect::<Vec<_>>()
        );
        for (got, (_, want)) in fused.ranking().iter().zip(&expected) {
            assert!((got.score - want).abs() < 1e-12);
        }
    }

    #[test]
    fn topic_mismatch_is_an_error() {
        let a = run("t1", &[("d1", 1.0)]);
        let b = run("t2", &[("d1", 1.0)]);
        assert!(matches!(
            combsum(&a, &b, 10),
            Err(Error::TopicMismatch { .. })
        ));
    }

    #[test]
    fn empty_side_leaves_the_other_normalized() {
        let a = run("t", &[("d1", 4.0), ("d2", 2.0)]);
        let empty = ScoredList::empty("t", 1000);
        let fused = combsum(&a, &empty, 100).unwrap();
        assert_eq!(ids(&fused), ["d1", "d2"]);
    }

    #[test]
    fn raw_score_fusion_skips_normalization() {
        let a = run("t", &[("d1", 10.0), ("d2", 5.0)]);
        let b = run("t", &[("d1", 1.0)]);
        let fused = combsum_with(&a, &b, 100, FusionNorm::None).unwrap();
        assert_eq!(fused.ranking()[0].doc_id, "d1");
        assert_eq!(fused.ranking()[0].score, 11.0);
        assert_eq!(fused.ranking()[1].score, 5.0);
    }

    #[test]
    fn depth_truncates_fused_list() {
        let a = run("t", &[("d1", 3.0), ("d2", 2.0), ("d3", 1.0)]);
        let b = run("t", &[("d4", 9.0)]);
        assert_eq!(combsum(&a, &b, 2).unwrap().len(), 2);
    }

    prop_compose! {
        fn arb_run()(
            entries in prop::collection::btree_map("d[0-9]{2}", 0.0f64..100.0, 1..12)
        ) -> ScoredList {
            run(
                "t",
                &entries
                    .iter()
                    .map(|(id, s)| (id.as_str(), *s))
                    .collect::<Vec<_>>(),
            )
        }
    }

    proptest! {
        #[test]
        fn combsum_is_symmetric(a in arb_run(), b in arb_run()) {
            let ab = combsum(&a, &b, 100).unwrap();
            let ba = combsum(&b, &a, 100).unwrap();
            prop_assert_eq!(ab.ranking(), ba.ranking());
        }
    }
}
