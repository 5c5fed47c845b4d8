//! TREC-format ingestion: documents, topics, relevance judgments.
//!
//! Documents arrive as `<DOC><DOCNO>…</DOCNO>…</DOC>` records, topics as
//! `<top>` blocks with `<num>` and `<title>` fields, and qrels as the
//! four-field whitespace format `topic 0 docno grade`. Only the topic id and
//! title are retained from topic statements.

mod index;
mod tokenize;

pub use index::{build_index, InvertedIndex, Posting};
pub use tokenize::{tokenize, TokenizerConfig, STOPWORDS};

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use crate::{Error, Result};

/// A tokenized document ready for indexing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    /// Unique identifier (the `<DOCNO>` of the TREC record).
    pub doc_id: String,
    /// Ordered sequence of normalized terms.
    pub tokens: Vec<String>,
}

/// A query topic. Only the id and the tokenized title survive parsing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topic {
    pub topic_id: String,
    /// Tokens of the topic title under the corpus pipeline.
    pub title_terms: Vec<String>,
}

impl Topic {
    /// A topic whose title normalized to nothing. Degenerate topics are
    /// retained and produce empty result lists downstream.
    pub fn is_degenerate(&self) -> bool {
        self.title_terms.is_empty()
    }
}

/// Relevance judgments: `(topic, document) -> grade ≥ 0`.
///
/// Unjudged pairs are absent and treated as grade 0 by every metric.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Qrels {
    judgments: BTreeMap<String, BTreeMap<String, u32>>,
}

impl Qrels {
    pub fn new() -> Qrels {
        Qrels::default()
    }

    /// Record a judgment, keeping the maximum grade on duplicates.
    pub fn insert(&mut self, topic_id: &str, doc_id: &str, grade: u32) {
        let slot = self
            .judgments
            .entry(topic_id.to_string())
            .or_default()
            .entry(doc_id.to_string())
            .or_insert(0);
        *slot = (*slot).max(grade);
    }

    /// Grade for a pair; 0 when unjudged.
    pub fn grade(&self, topic_id: &str, doc_id: &str) -> u32 {
        self.judgments
            .get(topic_id)
            .and_then(|m| m.get(doc_id))
            .copied()
            .unwrap_or(0)
    }

    /// Judged documents of a topic, if any.
    pub fn topic_judgments(&self, topic_id: &str) -> Option<&BTreeMap<String, u32>> {
        self.judgments.get(topic_id)
    }

    /// Number of documents with grade > 0 for a topic.
    pub fn relevant_count(&self, topic_id: &str) -> usize {
        self.judgments
            .get(topic_id)
            .map(|m| m.values().filter(|&&g| g > 0).count())
            .unwrap_or(0)
    }

    /// Whether the topic appears in the judgments at all.
    pub fn has_topic(&self, topic_id: &str) -> bool {
        self.judgments.contains_key(topic_id)
    }

    /// Topic ids present in the judgments.
    pub fn topics(&self) -> impl Iterator<Item = &String> {
        self.judgments.keys()
    }
}

fn parse_error(path: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_string(),
        line,
        message: message.into(),
    }
}

/// Strip SGML/HTML-style tags, replacing each with a space.
fn strip_tags(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut in_tag = false;
    for c in text.chars() {
        match c {
            '<' => {
                in_tag = true;
                out.push(' ');
            }
            '>' => in_tag = false,
            c if !in_tag => out.push(c),
            _ => {}
        }
    }
    out
}

/// Parse TREC `<DOC>` records and tokenize their bodies.
pub fn parse_documents<R: Read>(
    r: R,
    path: &str,
    pipeline: &TokenizerConfig,
) -> Result<Vec<Document>> {
    let reader = BufReader::new(r);
    let mut docs = Vec::new();
    let mut doc_no: Option<String> = None;
    let mut body = String::new();
    let mut in_doc = false;
    let mut doc_start = 0usize;

    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.starts_with("<DOC>") {
            if in_doc {
                return Err(parse_error(path, lineno, "nested <DOC> record"));
            }
            in_doc = true;
            doc_start = lineno;
            doc_no = None;
            body.clear();
            continue;
        }
        if trimmed.starts_with("</DOC>") {
            if !in_doc {
                return Err(parse_error(path, lineno, "</DOC> without <DOC>"));
            }
            let id = doc_no
                .take()
                .ok_or_else(|| parse_error(path, doc_start, "<DOC> record without <DOCNO>"))?;
            docs.push(Document {
                doc_id: id,
                tokens: tokenize(&strip_tags(&body), pipeline),
            });
            in_doc = false;
            continue;
        }
        if !in_doc {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix("<DOCNO>") {
            let id = rest.split("</DOCNO>").next().unwrap_or("").trim();
            if id.is_empty() {
                return Err(parse_error(path, lineno, "empty <DOCNO>"));
            }
            doc_no = Some(id.to_string());
            continue;
        }
        body.push_str(&line);
        body.push('\n');
    }
    if in_doc {
        return Err(parse_error(path, doc_start, "unterminated <DOC> record"));
    }
    Ok(docs)
}

/// Parse TREC topic statements, keeping id and tokenized title only.
///
/// Topics whose title normalizes to nothing are flagged degenerate (via
/// [`Topic::is_degenerate`]) but retained.
pub fn parse_topics<R: Read>(r: R, path: &str, pipeline: &TokenizerConfig) -> Result<Vec<Topic>> {
    let reader = BufReader::new(r);
    let mut topics = Vec::new();
    let mut num: Option<String> = None;
    let mut title = String::new();
    let mut field: Option<&'static str> = None;
    let mut top_start = 0usize;
    let mut in_top = false;

    let mut finish = |num: &mut Option<String>,
                      title: &mut String,
                      start: usize|
     -> Result<()> {
        let id = num
            .take()
            .ok_or_else(|| parse_error(path, start, "<top> block without <num>"))?;
        let terms = tokenize(title, pipeline);
        if terms.is_empty() {
            log::warn!("topic {id} has an empty title after normalization; flagged degenerate");
        }
        topics.push(Topic {
            topic_id: id,
            title_terms: terms,
        });
        title.clear();
        Ok(())
    };

    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.starts_with("<top>") {
            if in_top {
                return Err(parse_error(path, lineno, "nested <top> block"));
            }
            in_top = true;
            top_start = lineno;
            field = None;
            continue;
        }
        if trimmed.starts_with("</top>") {
            if !in_top {
                return Err(parse_error(path, lineno, "</top> without <top>"));
            }
            finish(&mut num, &mut title, top_start)?;
            in_top = false;
            field = None;
            continue;
        }
        if !in_top {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix("<num>") {
            let rest = rest.trim().trim_start_matches("Number:").trim();
            let id = rest.split_whitespace().next().unwrap_or("");
            if id.is_empty() {
                // id may sit on the following line
                field = Some("num");
            } else {
                num = Some(id.to_string());
                field = None;
            }
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix("<title>") {
            let rest = rest.trim().trim_start_matches("Topic:").trim();
            title.push_str(rest);
            title.push('\n');
            field = Some("title");
            continue;
        }
        if trimmed.starts_with("<desc>") || trimmed.starts_with("<narr>") {
            field = None;
            continue;
        }
        match field {
            Some("title") => {
                title.push_str(trimmed);
                title.push('\n');
            }
            Some("num") => {
                let id = trimmed.trim_start_matches("Number:").trim();
                if let Some(id) = id.split_whitespace().next() {
                    num = Some(id.to_string());
                }
                field = None;
            }
            _ => {}
        }
    }
    if in_top {
        return Err(parse_error(path, top_start, "unterminated <top> block"));
    }
    Ok(topics)
}

/// Parse the four-field TREC qrels format: `topic 0 docno grade`.
///
/// Negative grades are clamped to 0 with a warning, matching the convention
/// of standard evaluation tooling. Malformed lines report their line number.
pub fn parse_qrels<R: Read>(r: R, path: &str) -> Result<Qrels> {
    let reader = BufReader::new(r);
    let mut qrels = Qrels::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(parse_error(
                path,
                lineno,
                format!("expected 4 fields, got {}", fields.len()),
            ));
        }
        let grade: i64 = fields[3]
            .parse()
            .map_err(|_| parse_error(path, lineno, format!("bad grade {:?}", fields[3])))?;
        let grade = if grade < 0 {
            log::warn!("{path}:{lineno}: negative grade {grade} clamped to 0");
            0
        } else {
            grade as u32
        };
        qrels.insert(fields[0], fields[2], grade);
    }
    Ok(qrels)
}

/// Convenience wrapper: parse every document file in `paths`.
pub fn load_documents(paths: &[impl AsRef<Path>], pipeline: &TokenizerConfig) -> Result<Vec<Document>> {
    let mut docs = Vec::new();
    for path in paths {
        let path = path.as_ref();
        let file = std::fs::File::open(path)?;
        docs.extend(parse_documents(
            file,
            &path.display().to_string(),
            pipeline,
        )?);
    }
    Ok(docs)
}
