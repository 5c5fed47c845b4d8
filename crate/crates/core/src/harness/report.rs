//! Experiment report: methods × (effectiveness, efficiency) with
//! significance marks.
//!
//! Rows are the compared methods; effectiveness columns are AP, nDCG@10, and
//! P@10 as `mean [std]`; efficiency columns are per-query Gen, Train, and RT
//! milliseconds. `△` marks a Bonferroni-significant difference against the
//! document reranking baseline, `↑` against the best trained thread. Cells a
//! method does not have (BM25 needs no Gen or Train) render as `-`.

use std::fmt;
use std::str::FromStr;

use crate::evalkit::Measure;
use crate::harness::Phase;
use crate::selector::SelectionMode;
use crate::{Error, Result};

/// Whether a p-value clears the Bonferroni-corrected 0.05 level for the
/// given number of comparisons.
pub fn bonferroni_significant(p: f64, comparisons: usize) -> bool {
    p < 0.05 / comparisons as f64
}

/// Compared methods, in report row order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Bm25,
    L2rD,
    BestTrained,
    CombSum,
    Selective(SelectionMode),
}

impl Method {
    pub fn id(&self) -> &'static str {
        match self {
            Method::Bm25 => "BM25",
            Method::L2rD => "L2R-D",
            Method::BestTrained => "Best trained",
            Method::CombSum => "CombSum",
            Method::Selective(mode) => mode.id(),
        }
    }

    /// Filesystem-safe name.
    pub fn file_stem(&self) -> String {
        self.id().replace(' ', "_")
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Method> {
        Ok(match s {
            "BM25" => Method::Bm25,
            "L2R-D" => Method::L2rD,
            "Best trained" => Method::BestTrained,
            "CombSum" => Method::CombSum,
            other => Method::Selective(other.parse()?),
        })
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// `mean [std]`; std is absent for single-measurement cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub mean: f64,
    pub std: Option<f64>,
}

impl Cell {
    pub fn new(mean: f64, std: f64) -> Cell {
        Cell {
            mean,
            std: Some(std),
        }
    }

    pub fn single(mean: f64) -> Cell {
        Cell { mean, std: None }
    }
}

/// One method's report line.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub method: Method,
    /// Effectiveness cells in [`Measure::ALL`] order.
    pub eff: [Option<Cell>; 3],
    /// Timing cells in [`Phase::ALL`] order (Gen, Train, RT).
    pub timing: [Option<Cell>; 3],
    /// Significant vs the document reranking baseline, per measure.
    pub sig_vs_l2r: [bool; 3],
    /// Significant vs the best trained thread, per measure.
    pub sig_vs_best: [bool; 3],
}

impl ReportRow {
    pub fn empty(method: Method) -> ReportRow {
        ReportRow {
            method,
            eff: [None; 3],
            timing: [None; 3],
            sig_vs_l2r: [false; 3],
            sig_vs_best: [false; 3],
        }
    }
}

/// The full table plus the protocol facts needed to read it.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportTable {
    /// The measure used for training and candidate selection.
    pub measure: Measure,
    /// Bonferroni divisor applied to the 0.05 significance level.
    pub bonferroni: usize,
    pub rows: Vec<ReportRow>,
}

impl ReportTable {
    pub fn row(&self, method: Method) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.method == method)
    }

    /// Aligned plain-text rendering.
    pub fn render_text(&self) -> String {
        let mut header = vec!["Method".to_string()];
        header.extend(Measure::ALL.iter().map(|m| m.id().to_string()));
        header.extend(Phase::ALL.iter().map(|p| format!("{p} (ms)")));

        let mut body: Vec<Vec<String>> = Vec::new();
        for row in &self.rows {
            let mut cells = vec![row.method.id().to_string()];
            for (i, cell) in row.eff.iter().enumerate() {
                cells.push(match cell {
                    None => "-".to_string(),
                    Some(c) => {
                        let mut s = format!("{:.3}", c.mean);
                        if row.sig_vs_l2r[i] {
                            s.push('△');
                        }
                        if row.sig_vs_best[i] {
                            s.push('↑');
                        }
                        if let Some(std) = c.std {
                            s.push_str(&format!(" [{std:.3}]"));
                        }
                        s
                    }
                });
            }
            for cell in &row.timing {
                cells.push(match cell {
                    None => "-".to_string(),
                    Some(c) => match c.std {
                        Some(std) => format!("{:.2} [{:.2}]", c.mean, std),
                        None => format!("{:.2}", c.mean),
                    },
                });
            }
            body.push(cells);
        }

        let widths: Vec<usize> = (0..header.len())
            .map(|i| {
                body.iter()
                    .map(|r| r[i].chars().count())
                    .chain(std::iter::once(header[i].chars().count()))
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let fmt_row = |cells: &[String]| {
            cells
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    let pad = widths[i] - c.chars().count();
                    format!("{c}{}", " ".repeat(pad))
                })
                .collect::<Vec<_>>()
                .join("  ")
        };

        let mut out = String::new();
        out.push_str(&format!(
            "Training measure: {}. Marks: △ vs L2R-D, ↑ vs Best trained \
             (two-tailed paired t-test, p < 0.05/{}).\n\n",
            self.measure, self.bonferroni
        ));
        out.push_str(&fmt_row(&header));
        out.push('\n');
        out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
        out.push('\n');
        for cells in &body {
            out.push_str(&fmt_row(cells));
            out.push('\n');
        }
        out
    }

    /// Machine-readable TSV with full-precision values.
    pub fn render_tsv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "#sqp-report\t1\tmeasure={}\tbonferroni={}\n",
            self.measure, self.bonferroni
        ));
        out.push_str("#method");
        for m in Measure::ALL {
            out.push_str(&format!(
                "\t{m}_mean\t{m}_std\t{m}_sig_l2r\t{m}_sig_best"
            ));
        }
        for p in Phase::ALL {
            out.push_str(&format!("\t{p}_mean\t{p}_std"));
        }
        out.push('\n');
        let opt = |v: Option<f64>| match v {
            Some(x) => format!("{x}"),
            None => "-".to_string(),
        };
        for row in &self.rows {
            out.push_str(row.method.id());
            for i in 0..3 {
                out.push_str(&format!(
                    "\t{}\t{}\t{}\t{}",
                    opt(row.eff[i].map(|c| c.mean)),
                    opt(row.eff[i].and_then(|c| c.std)),
                    row.sig_vs_l2r[i] as u8,
                    row.sig_vs_best[i] as u8
                ));
            }
            for i in 0..3 {
                out.push_str(&format!(
                    "\t{}\t{}",
                    opt(row.timing[i].map(|c| c.mean)),
                    opt(row.timing[i].and_then(|c| c.std))
                ));
            }
            out.push('\n');
        }
        out
    }

    /// Parse a TSV rendered by [`ReportTable::render_tsv`].
    pub fn parse_tsv(text: &str, path: &str) -> Result<ReportTable> {
        let err = |line: usize, message: String| Error::Parse {
            path: path.to_string(),
            line,
            message,
        };
        let mut measure = Measure::Ap;
        let mut bonferroni = 2usize;
        let mut rows = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let lineno = idx + 1;
            if line.starts_with("#sqp-report") {
                for field in line.split('\t') {
                    if let Some(m) = field.strip_prefix("measure=") {
                        measure = m.parse()?;
                    }
                    if let Some(b) = field.strip_prefix("bonferroni=") {
                        bonferroni = b
                            .parse()
                            .map_err(|_| err(lineno, format!("bad bonferroni {b:?}")))?;
                    }
                }
                continue;
            }
            if line.starts_with('#') || line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 1 + 3 * 4 + 3 * 2 {
                return Err(err(lineno, format!("expected 19 fields, got {}", fields.len())));
            }
            let parse_opt = |s: &str| -> Result<Option<f64>> {
                if s == "-" {
                    Ok(None)
                } else {
                    s.parse()
                        .map(Some)
                        .map_err(|_| err(lineno, format!("bad value {s:?}")))
                }
            };
            let mut row = ReportRow::empty(fields[0].parse()?);
            for i in 0..3 {
                let base = 1 + i * 4;
                row.eff[i] = parse_opt(fields[base])?.map(|mean| Cell {
                    mean,
                    std: None,
                });
                if let (Some(cell), Some(std)) = (&mut row.eff[i], parse_opt(fields[base + 1])?) {
                    cell.std = Some(std);
                }
                row.sig_vs_l2r[i] = fields[base + 2] == "1";
                row.sig_vs_best[i] = fields[base + 3] == "1";
            }
            for i in 0..3 {
                let base = 13 + i * 2;
                row.timing[i] = parse_opt(fields[base])?.map(|mean| Cell {
                    mean,
                    std: None,
                });
                if let (Some(cell), Some(std)) = (&mut row.timing[i], parse_opt(fields[base + 1])?)
                {
                    cell.std = Some(std);
                }
            }
            rows.push(row);
        }
        Ok(ReportTable {
            measure,
            bonferroni,
            rows,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> ReportTable {
        let mut bm25 = ReportRow::empty(Method::Bm25);
        bm25.eff = [
            Some(Cell::single(0.211)),
            Some(Cell::single(0.465)),
            Some(Cell::single(0.448)),
        ];
        bm25.timing = [None, None, Some(Cell::single(40.49))];

        let mut sqp = ReportRow::empty(Method::Selective(SelectionMode::EriskSqp));
        sqp.eff = [
            Some(Cell::new(0.247, 0.002)),
            Some(Cell::new(0.530, 0.002)),
            Some(Cell::new(0.500, 0.005)),
        ];
        sqp.timing = [
            Some(Cell::new(1091.0, 27.0)),
            Some(Cell::new(0.67, 0.11)),
            Some(Cell::new(46.0, 1.7)),
        ];
        sqp.sig_vs_l2r = [true, true, true];
        sqp.sig_vs_best = [true, false, false];

        ReportTable {
            measure: Measure::Ap,
            bonferroni: 2,
            rows: vec![bm25, sqp],
        }
    }

    #[test]
    fn bm25_row_renders_dashes_for_gen_and_train() {
        let text = fixture().render_text();
        let bm25_line = text.lines().find(|l| l.starts_with("BM25")).unwrap();
        let cells: Vec<&str> = bm25_line.split_whitespace().collect();
        assert_eq!(cells[4], "-");
        assert_eq!(cells[5], "-");
    }

    #[test]
    fn significance_marks_render() {
        let text = fixture().render_text();
        let sqp_line = text.lines().find(|l| l.starts_with("ERisk-SQP")).unwrap();
        assert!(sqp_line.contains("0.247△↑"));
        assert!(sqp_line.contains("0.530△ "));
    }

    #[test]
    fn tsv_round_trip() {
        let table = fixture();
        let tsv = table.render_tsv();
        let back = ReportTable::parse_tsv(&tsv, "mem").unwrap();
        assert_eq!(table, back);
    }

    #[test]
    fn method_ids_round_trip() {
        for m in [
            Method::Bm25,
            Method::L2rD,
            Method::BestTrained,
            Method::CombSum,
            Method::Selective(SelectionMode::BestSqe),
        ] {
            assert_eq!(m.id().parse::<Method>().unwrap(), m);
        }
    }
}
