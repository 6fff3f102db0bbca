//! Benchmark × feature-vector runtime tables built from worker logs.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::cr_opt::{CrMethod, OptOutcome};
use crate::model::ProblemClass;
use crate::portfolio::{default_labels, LogLine, WorkerRecord};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("no worker logs in {0}")]
    MissingLogs(PathBuf),
    #[error("reading {0}: {1}")]
    Io(PathBuf, std::io::Error),
    #[error("{0}:{1}: {2}")]
    BadLog(PathBuf, usize, String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    /// Definitive answer after this many seconds.
    Solved(f64),
    Timeout,
    Unknown,
    Unbounded,
    Cancelled,
    Missing,
}

impl Cell {
    fn from_record(r: &WorkerRecord) -> Cell {
        match &r.outcome {
            OptOutcome::Optimal { .. } | OptOutcome::Infeasible => Cell::Solved(r.wall_us as f64 / 1e6),
            _ if r.cancelled => Cell::Cancelled,
            OptOutcome::Unknown { reason, .. } if reason == "timeout" => Cell::Timeout,
            OptOutcome::Unknown { .. } => Cell::Unknown,
            OptOutcome::BoundExceeded { .. } => Cell::Unbounded,
        }
    }

    fn text(&self) -> String {
        match self {
            Cell::Solved(s) => format!("{s:.2}"),
            Cell::Timeout => "timeout".into(),
            Cell::Unknown => "UNKNOWN".into(),
            Cell::Unbounded => "unbounded".into(),
            Cell::Cancelled => "cancelled".into(),
            Cell::Missing => String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub headers: Vec<String>,
    pub rows: Vec<(String, Vec<Cell>)>,
}

impl Report {
    pub fn to_text(&self) -> String {
        let mut table: Vec<Vec<String>> = vec![std::iter::once("benchmark".to_string()).chain(self.headers.iter().cloned()).collect()];
        for (name, cells) in &self.rows {
            table.push(std::iter::once(name.clone()).chain(cells.iter().map(Cell::text)).collect());
        }
        let widths: Vec<usize> = (0..table[0].len()).map(|c| table.iter().map(|r| r[c].chars().count()).max().unwrap_or(0)).collect();
        let mut out = String::new();
        for row in table {
            let line: Vec<String> = row.iter().zip(&widths).enumerate().map(|(c, (s, w))| if c == 0 { format!("{s:<w$}") } else { format!("{s:>w$}") }).collect();
            out.push_str(line.join("  ").trim_end());
            out.push('\n');
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let quote = |s: &str| if s.contains([',', '"', '\n']) { format!("\"{}\"", s.replace('"', "\"\"")) } else { s.to_string() };
        let mut out = String::new();
        let header: Vec<String> = std::iter::once("benchmark".to_string()).chain(self.headers.iter().cloned()).map(|h| quote(&h)).collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for (name, cells) in &self.rows {
            let line: Vec<String> = std::iter::once(quote(name)).chain(cells.iter().map(|c| quote(&c.text()))).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}

fn fig_header(cr: CrMethod) -> &'static str {
    match cr {
        CrMethod::Ubs => "U.B.S",
        CrMethod::Naive => "Naive",
        CrMethod::Hybrid => "Hybrid",
    }
}

/// Read every `*.jsonl` worker log under `dir` and lay out the final records.
pub fn report_table(dir: &Path) -> Result<Report, ReportError> {
    let entries = std::fs::read_dir(dir).map_err(|e| ReportError::Io(dir.to_path_buf(), e))?;
    let mut files: Vec<PathBuf> = entries.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| p.extension().is_some_and(|x| x == "jsonl")).collect();
    files.sort();

    let mut cells: BTreeMap<String, BTreeMap<String, Cell>> = BTreeMap::new();
    let mut labels: BTreeSet<String> = BTreeSet::new();
    let mut classes: BTreeSet<bool> = BTreeSet::new();
    for path in files {
        let text = std::fs::read_to_string(&path).map_err(|e| ReportError::Io(path.clone(), e))?;
        for (n, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let parsed: LogLine = serde_json::from_str(line).map_err(|e| ReportError::BadLog(path.clone(), n + 1, e.to_string()))?;
            if let LogLine::Final { benchmark, class, record } = parsed {
                classes.insert(class.is_continuous());
                labels.insert(record.label.clone());
                cells.entry(benchmark).or_default().insert(record.label.clone(), Cell::from_record(&record));
            }
        }
    }
    if cells.is_empty() {
        return Err(ReportError::MissingLogs(dir.to_path_buf()));
    }

    // column order follows the default vector order; anything else goes last
    let class = if classes.contains(&false) { ProblemClass::MINLP } else { ProblemClass::NLP };
    let order: Vec<String> = if class == ProblemClass::NLP {
        [CrMethod::Ubs, CrMethod::Naive, CrMethod::Hybrid].iter().map(|m| format!("nobb_{}", m.label())).collect()
    } else {
        default_labels(class)
    };
    let mut columns: Vec<String> = order.into_iter().filter(|l| labels.contains(l)).collect();
    columns.extend(labels.iter().filter(|l| !columns.contains(l)).cloned().collect::<Vec<_>>());

    let headers = columns
        .iter()
        .map(|l| match (class, CrMethod::ALL.iter().find(|m| l == &format!("nobb_{}", m.label()))) {
            (ProblemClass::NLP, Some(m)) => fig_header(*m).to_string(),
            _ => l.clone(),
        })
        .collect();
    let rows = cells
        .into_iter()
        .map(|(bench, by_label)| {
            let row = columns.iter().map(|l| by_label.get(l).cloned().unwrap_or(Cell::Missing)).collect();
            (bench, row)
        })
        .collect();
    Ok(Report { headers, rows })
}
