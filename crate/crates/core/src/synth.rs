//! Deterministic synthetic TREC-format corpus generator.
//!
//! The licensed ad-hoc collections cannot ship with the repository, so the
//! experiment runs on a generated corpus with the statistical structure the
//! pipeline needs: themed documents whose relevance correlates with term
//! overlap, topics drawn from theme cores, and graded judgments.
//!
//! Each theme owns three core terms (topic titles draw from these) and a
//! related vocabulary that is partly unique and partly shared with other
//! themes through a common domain pool. Core terms also occur in the general
//! background, so term matching alone retrieves decoys; ranking quality then
//! depends on the weighting model and on mining related terms from feedback
//! documents, which is what differentiates processing threads. Everything
//! derives from SplitMix64, so a given spec always produces byte-identical
//! files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::evalkit::SplitMix64;
use crate::Result;

const SYLLABLES: [&str; 20] = [
    "ba", "ce", "di", "fo", "gu", "ha", "jo", "ka", "lu", "me", "na", "po", "qa", "ro", "sa",
    "te", "vu", "wi", "xa", "zo",
];

const CORE_TERMS: usize = 3;
const UNIQUE_RELATED: usize = 6;
const SHARED_RELATED: usize = 6;
const DOMAIN_POOL: usize = 150;

/// Size and seed of a generated corpus.
#[derive(Debug, Clone, Copy)]
pub struct SynthSpec {
    pub docs: usize,
    pub topics: usize,
    pub seed: u64,
    /// Background vocabulary size (theme and domain vocabularies on top).
    pub background_vocab: usize,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            docs: 1200,
            topics: 30,
            seed: 7,
            background_vocab: 1000,
        }
    }
}

/// Generated corpus files, as in-memory text.
#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub documents: String,
    pub topics: String,
    pub qrels: String,
}

/// Pseudo-word for an integer: three base-20 syllables, collision-free.
fn word(n: usize) -> String {
    let mut s = String::new();
    let mut v = n;
    for _ in 0..3 {
        s.push_str(SYLLABLES[v % SYLLABLES.len()]);
        v /= SYLLABLES.len();
    }
    s
}

struct Vocab {
    core: Vec<Vec<String>>,
    related: Vec<Vec<String>>,
    /// Background pool with Zipf-ish cumulative weights; includes every core
    /// term so queries hit decoy documents too.
    background: Vec<String>,
    cumulative: Vec<f64>,
}

impl Vocab {
    fn build(spec: &SynthSpec, rng: &mut SplitMix64) -> Vocab {
        let n = spec.topics;
        let mut next_word = 0usize;
        let mut take = |k: usize| -> Vec<String> {
            let words = (next_word..next_word + k).map(word).collect();
            next_word += k;
            words
        };

        let domain: Vec<String> = take(DOMAIN_POOL);
        let mut core = Vec::with_capacity(n);
        let mut related = Vec::with_capacity(n);
        for _ in 0..n {
            core.push(take(CORE_TERMS));
            let mut rel = take(UNIQUE_RELATED);
            for _ in 0..SHARED_RELATED {
                rel.push(domain[rng.below(DOMAIN_POOL as u64) as usize].clone());
            }
            related.push(rel);
        }

        let mut background = take(spec.background_vocab);
        // plant the core terms mid-rank in the background so they occur in
        // unrelated documents as decoys
        for (t, cores) in core.iter().enumerate() {
            for (i, c) in cores.iter().enumerate() {
                let pos = (23 + t * 7 + i * 3) % background.len().max(1);
                background.insert(pos, c.clone());
            }
        }
        let weights: Vec<f64> = (0..background.len())
            .map(|r| 1.0 / (r as f64 + 10.0))
            .collect();
        let cumulative = weights
            .iter()
            .scan(0.0, |acc, w| {
                *acc += w;
                Some(*acc)
            })
            .collect();
        Vocab {
            core,
            related,
            background,
            cumulative,
        }
    }

    fn background_draw(&self, rng: &mut SplitMix64) -> &str {
        let total = *self.cumulative.last().unwrap();
        let u = (rng.next_u64() as f64 / u64::MAX as f64) * total;
        let idx = self.cumulative.partition_point(|&c| c < u);
        &self.background[idx.min(self.background.len() - 1)]
    }
}

/// Generate the corpus, topics, and qrels for a spec.
pub fn generate(spec: &SynthSpec) -> SynthCorpus {
    let mut rng = SplitMix64::new(spec.seed);
    let unit = |rng: &mut SplitMix64| rng.next_u64() as f64 / u64::MAX as f64;
    let vocab = Vocab::build(spec, &mut rng);

    let mut documents = String::new();
    let mut qrels = String::new();
    // Odd themes are ambiguous: roughly one document in twelve is a strong
    // off-sense decoy that uses an odd theme's core terms heavily while
    // belonging to a different theme. Decoys crack the feedback set of the
    // ambiguous topics, so expansion drifts and hurts exactly those queries;
    // clean (even) topics profit from expansion. That asymmetry is the
    // per-query signal candidate routing can learn.
    for d in 0..spec.docs {
        let doc_id = format!("SYN-{d:04}");
        // A decoy borrows the core terms of an odd theme but belongs to that
        // theme's fixed host (the next theme over), so the drift induced in
        // the feedback set is coherent rather than diffuse.
        let poison_target = if spec.topics > 2 && d % 6 == 5 {
            Some(1 + 2 * rng.below((spec.topics as u64 - 1) / 2) as usize)
        } else {
            None
        };
        // Odd (ambiguous) themes are rare: few relevant documents, so their
        // rankings are fragile and the decoy flood dominates their feedback.
        let primary = match poison_target {
            Some(t) => (t + 1) % spec.topics,
            None if spec.topics > 2 && unit(&mut rng) < 0.8 => {
                2 * rng.below(spec.topics.div_ceil(2) as u64) as usize
            }
            None => {
                let odd_count = (spec.topics / 2).max(1);
                (1 + 2 * rng.below(odd_count as u64) as usize) % spec.topics
            }
        };
        let secondary = if poison_target.is_none() && unit(&mut rng) < 0.25 {
            Some(rng.below(spec.topics as u64) as usize)
        } else {
            None
        };
        let affinity = 0.15 + 0.55 * unit(&mut rng);
        let len = 60 + rng.below(80) as usize;

        let mut tokens: Vec<String> = Vec::with_capacity(len);
        for _ in 0..len {
            if let Some(t) = poison_target {
                if unit(&mut rng) < 0.40 {
                    let cores = &vocab.core[t];
                    tokens.push(cores[rng.below(cores.len() as u64) as usize].clone());
                    continue;
                }
            }
            if unit(&mut rng) < affinity {
                let theme = match secondary {
                    Some(s) if unit(&mut rng) < 0.3 => s,
                    _ => primary,
                };
                let pool = if unit(&mut rng) < 0.25 {
                    &vocab.core[theme]
                } else {
                    &vocab.related[theme]
                };
                tokens.push(pool[rng.below(pool.len() as u64) as usize].clone());
            } else {
                tokens.push(vocab.background_draw(&mut rng).to_string());
            }
        }

        writeln!(documents, "<DOC>").unwrap();
        writeln!(documents, "<DOCNO> {doc_id} </DOCNO>").unwrap();
        writeln!(documents, "<TEXT>").unwrap();
        for chunk in tokens.chunks(12) {
            writeln!(documents, "{}", chunk.join(" ")).unwrap();
        }
        writeln!(documents, "</TEXT>").unwrap();
        writeln!(documents, "</DOC>").unwrap();

        // judgments follow the generating affinity, so grades are known
        let topic_no = 901 + primary;
        let grade = if affinity >= 0.62 {
            2
        } else if affinity >= 0.48 {
            1
        } else {
            0
        };
        writeln!(qrels, "{topic_no} 0 {doc_id} {grade}").unwrap();
        if let Some(s) = secondary {
            if s != primary {
                let grade2 = u32::from(affinity >= 0.62);
                writeln!(qrels, "{} 0 {doc_id} {grade2}", 901 + s).unwrap();
            }
        }
        if let Some(t) = poison_target {
            // judged and rejected for the topic whose terms it borrows
            writeln!(qrels, "{} 0 {doc_id} 0", 901 + t).unwrap();
        }
    }

    let mut topics = String::new();
    for t in 0..spec.topics {
        let n_title = if rng.below(2) == 0 { 2 } else { 3 };
        let title = vocab.core[t][..n_title].join(" ");
        writeln!(topics, "<top>").unwrap();
        writeln!(topics, "<num> Number: {}", 901 + t).unwrap();
        writeln!(topics, "<title> {title}").unwrap();
        writeln!(topics, "<desc> Description:").unwrap();
        writeln!(topics, "Documents about {title}.").unwrap();
        writeln!(topics, "</top>").unwrap();
    }

    SynthCorpus {
        documents,
        topics,
        qrels,
    }
}

/// Write the three files into a directory, returning their paths as
/// `(documents, topics, qrels)`.
pub fn write_to_dir(spec: &SynthSpec, dir: &Path) -> Result<(PathBuf, PathBuf, PathBuf)> {
    std::fs::create_dir_all(dir)?;
    let corpus = generate(spec);
    let docs = dir.join("documents.trec");
    let topics = dir.join("topics.txt");
    let qrels = dir.join("qrels.txt");
    std::fs::write(&docs, corpus.documents)?;
    std::fs::write(&topics, corpus.topics)?;
    std::fs::write(&qrels, corpus.qrels)?;
    Ok((docs, topics, qrels))
}
