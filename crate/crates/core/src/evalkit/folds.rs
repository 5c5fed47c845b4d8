//! Deterministic cross-validation fold construction.
//!
//! The shuffle uses SplitMix64, a documented 64-bit generator, so fold
//! assignments are reproducible from the seed alone on any platform.
//! Reproducing any other environment's shuffle stream is a non-goal.

use std::io::Write;

use crate::{Error, Result};

/// SplitMix64 (Steele, Lea & Flood 2014). State advances by the golden-ratio
/// increment; output is the finalized mix of the new state.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> SplitMix64 {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform-enough draw in `[0, n)`. The modulo bias is irrelevant here:
    /// determinism, not statistical perfection, is the contract.
    pub fn below(&mut self, n: u64) -> u64 {
        self.next_u64() % n
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, slice: &mut [T]) {
        for i in (1..slice.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            slice.swap(i, j);
        }
    }
}

/// Per-trial two-fold partitions of the topic set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub trials: usize,
    pub seed: u64,
    /// Per trial: `(Q_A, Q_Ā)`. Disjoint, exhaustive, sizes differ by ≤ 1.
    pub assignment: Vec<(Vec<String>, Vec<String>)>,
}

impl FoldPlan {
    /// The two folds of a trial, in evaluation order: each serves once as
    /// training set and once as test set.
    pub fn folds(&self, trial: usize) -> [&[String]; 2] {
        let (a, b) = &self.assignment[trial];
        [a.as_slice(), b.as_slice()]
    }

    /// Persist as TSV: `trial fold topic`.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> Result<()> {
        for (trial, (a, b)) in self.assignment.iter().enumerate() {
            for t in a {
                writeln!(w, "{trial}\tA\t{t}")?;
            }
            for t in b {
                writeln!(w, "{trial}\tB\t{t}")?;
            }
        }
        Ok(())
    }
}

/// Partition topics into two folds per trial, `trials` times.
///
/// Topic ids are sorted before shuffling, so the plan depends only on the
/// topic set and the seed, not on input order. Fold membership is stored
/// sorted.
pub fn make_folds(topic_ids: &[String], trials: usize, seed: u64) -> Result<FoldPlan> {
    if topic_ids.len() < 2 {
        return Err(Error::InvalidConfig(format!(
            "fold construction needs at least 2 topics, got {}",
            topic_ids.len()
        )));
    }
    let mut ids: Vec<String> = topic_ids.to_vec();
    ids.sort();
    ids.dedup();

    let mut rng = SplitMix64::new(seed);
    let mut assignment = Vec::with_capacity(trials);
    for _ in 0..trials {
        let mut shuffled = ids.clone();
        rng.shuffle(&mut shuffled);
        let half = shuffled.len().div_ceil(2);
        let mut a: Vec<String> = shuffled[..half].to_vec();
        let mut b: Vec<String> = shuffled[half..].to_vec();
        a.sort();
        b.sort();
        assignment.push((a, b));
    }
    Ok(FoldPlan {
        trials,
        seed,
        assignment,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("t{i:02}")).collect()
    }

    #[test]
    fn four_topics_split_evenly_and_exhaustively() {
        let plan = make_folds(&ids(4), 3, 42).unwrap();
        for (a, b) in &plan.assignment {
            assert_eq!(a.len(), 2);
            assert_eq!(b.len(), 2);
            let all: BTreeSet<&String> = a.iter().chain(b.iter()).collect();
            assert_eq!(all.len(), 4);
        }
    }

    #[test]
    fn same_seed_reproduces_the_plan() {
        let p1 = make_folds(&ids(9), 3, 42).unwrap();
        let p2 = make_folds(&ids(9), 3, 42).unwrap();
        assert_eq!(p1, p2);
    }

    #[test]
    fn input_order_is_irrelevant() {
        let mut reversed = ids(9);
        reversed.reverse();
        assert_eq!(
            make_folds(&ids(9), 3, 42).unwrap(),
            make_folds(&reversed, 3, 42).unwrap()
        );
    }

    #[test]
    fn odd_count_gives_sizes_differing_by_one() {
        let plan = make_folds(&ids(5), 3, 42).unwrap();
        for (a, b) in &plan.assignment {
            assert_eq!(a.len(), 3);
            assert_eq!(b.len(), 2);
        }
    }

    #[test]
    fn fewer_than_two_topics_is_an_error() {
        assert!(make_folds(&ids(1), 3, 42).is_err());
        assert!(make_folds(&[], 3, 42).is_err());
    }

    #[test]
    fn trials_differ_from_each_other() {
        let plan = make_folds(&ids(16), 3, 42).unwrap();
        // with 16 topics the probability of two identical draws is negligible
        assert_ne!(plan.assignment[0], plan.assignment[1]);
        assert_ne!(plan.assignment[1], plan.assignment[2]);
    }
}
