//! MPS reader for linear (mixed-integer) models.
//!
//! Free format is tried first on every data line; when the tokens do not fit the
//! section, the fixed column layout is used instead (names with embedded spaces).

use std::collections::HashMap;

use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::model::{Constraint, Expr, Model, Objective, Origin, Sense, VarId, VarKind};
use crate::rat::parse_rat;
use crate::Rat;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MpsError {
    #[error("line {line}: unknown section {name:?}")]
    UnknownSection { line: usize, name: String },
    #[error("duplicate row {0:?}")]
    DuplicateRow(String),
    #[error("reference to unknown row {0:?}")]
    UnknownRowReference(String),
    #[error("line {line}: {detail}")]
    MalformedField { line: usize, detail: String },
}

impl MpsError {
    fn field(line: usize, detail: impl Into<String>) -> MpsError {
        MpsError::MalformedField { line, detail: detail.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    Name,
    ObjSense,
    Rows,
    Columns,
    Rhs,
    Ranges,
    Bounds,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RowKind {
    Objective,
    Le,
    Ge,
    Eq,
}

struct Row {
    name: String,
    kind: RowKind,
    terms: Vec<(VarId, Rat)>,
    rhs: Rat,
    range: Option<Rat>,
}

struct Column {
    name: String,
    integer: bool,
    kind: Option<VarKind>,
    lower: Option<Rat>,
    upper: Option<Rat>,
    lower_set: bool,
}

#[derive(Default)]
struct Reader {
    sense: Option<Sense>,
    rows: Vec<Row>,
    row_ids: HashMap<String, usize>,
    /// First N row; later N rows are free rows and dropped.
    objective: Option<usize>,
    columns: Vec<Column>,
    col_ids: HashMap<String, usize>,
    in_integer_block: bool,
    objective_constant: Rat,
}

pub fn parse_mps(text: &str) -> Result<Model, MpsError> {
    let mut r = Reader::default();
    let mut section: Option<Section> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim_end();
        if trimmed.trim_start().is_empty() || trimmed.starts_with('*') {
            continue;
        }
        if !trimmed.starts_with([' ', '\t']) {
            let mut words = trimmed.split_whitespace();
            let head = words.next().unwrap_or_default().to_ascii_uppercase();
            let rest: Vec<&str> = words.collect();
            section = Some(match head.as_str() {
                "NAME" => Section::Name,
                "OBJSENSE" => {
                    if let Some(s) = rest.first() {
                        r.set_sense(line, s)?;
                    }
                    Section::ObjSense
                }
                "ROWS" => Section::Rows,
                "COLUMNS" => Section::Columns,
                "RHS" => Section::Rhs,
                "RANGES" => Section::Ranges,
                "BOUNDS" => Section::Bounds,
                "ENDATA" => break,
                _ => return Err(MpsError::UnknownSection { line, name: head }),
            });
            continue;
        }
        let Some(sec) = section else {
            return Err(MpsError::field(line, "data before the first section"));
        };
        let free: Vec<&str> = trimmed.split_whitespace().collect();
        match r.data_line(sec, line, &free) {
            Err(e) if fixed_differs(trimmed, &free) => {
                let fixed = fixed_fields(trimmed);
                let fixed: Vec<&str> = fixed.iter().map(String::as_str).collect();
                r.data_line(sec, line, &fixed).map_err(|_| e)?;
            }
            other => other?,
        }
    }
    r.finish()
}

/// The six classic fixed-format fields (columns 2–3, 5–12, 15–22, 25–36, 40–47, 50–61),
/// with empty fields dropped.
fn fixed_fields(line: &str) -> Vec<String> {
    const SPANS: [(usize, usize); 6] = [(1, 3), (4, 12), (14, 22), (24, 36), (39, 47), (49, 61)];
    let chars: Vec<char> = line.chars().collect();
    SPANS
        .iter()
        .map(|&(a, b)| chars.get(a.min(chars.len())..b.min(chars.len())).map(|s| s.iter().collect::<String>()).unwrap_or_default())
        .map(|f| f.trim().to_string())
        .filter(|f| !f.is_empty())
        .collect()
}

fn fixed_differs(line: &str, free: &[&str]) -> bool {
    let fixed = fixed_fields(line);
    fixed.len() != free.len() || fixed.iter().zip(free).any(|(a, b)| a != b)
}

fn number(line: usize, s: &str) -> Result<Rat, MpsError> {
    parse_rat(s).map_err(|_| MpsError::field(line, format!("bad number {s:?}")))
}

impl Reader {
    fn set_sense(&mut self, line: usize, word: &str) -> Result<(), MpsError> {
        self.sense = Some(match word.to_ascii_uppercase().as_str() {
            "MIN" | "MINIMIZE" => Sense::Minimize,
            "MAX" | "MAXIMIZE" => Sense::Maximize,
            other => return Err(MpsError::field(line, format!("objective sense {other:?}"))),
        });
        Ok(())
    }

    fn row(&self, name: &str) -> Result<usize, MpsError> {
        self.row_ids.get(name).copied().ok_or_else(|| MpsError::UnknownRowReference(name.to_string()))
    }

    fn column(&self, line: usize, name: &str) -> Result<usize, MpsError> {
        self.col_ids.get(name).copied().ok_or_else(|| MpsError::field(line, format!("bound on unknown column {name:?}")))
    }

    fn data_line(&mut self, sec: Section, line: usize, f: &[&str]) -> Result<(), MpsError> {
        match sec {
            Section::Name => Ok(()),
            Section::ObjSense => match f {
                [word] => self.set_sense(line, word),
                _ => Err(MpsError::field(line, "expected MIN or MAX")),
            },
            Section::Rows => self.rows_line(line, f),
            Section::Columns => self.columns_line(line, f),
            Section::Rhs => self.value_pairs(line, f, true, |row, v| row.rhs = v),
            Section::Ranges => self.value_pairs(line, f, false, |row, v| row.range = Some(v)),
            Section::Bounds => self.bounds_line(line, f),
        }
    }

    fn rows_line(&mut self, line: usize, f: &[&str]) -> Result<(), MpsError> {
        let [kind, name] = f else {
            return Err(MpsError::field(line, "ROWS entries are `type name`"));
        };
        let kind = match kind.to_ascii_uppercase().as_str() {
            "N" => RowKind::Objective,
            "L" => RowKind::Le,
            "G" => RowKind::Ge,
            "E" => RowKind::Eq,
            other => return Err(MpsError::field(line, format!("row type {other:?}"))),
        };
        if self.row_ids.contains_key(*name) {
            return Err(MpsError::DuplicateRow(name.to_string()));
        }
        if kind == RowKind::Objective && self.objective.is_none() {
            self.objective = Some(self.rows.len());
        }
        self.row_ids.insert(name.to_string(), self.rows.len());
        self.rows.push(Row { name: name.to_string(), kind, terms: Vec::new(), rhs: Rat::zero(), range: None });
        Ok(())
    }

    fn columns_line(&mut self, line: usize, f: &[&str]) -> Result<(), MpsError> {
        if let [_, marker, kind] = f {
            if marker.trim_matches('\'').eq_ignore_ascii_case("MARKER") {
                match kind.trim_matches('\'').to_ascii_uppercase().as_str() {
                    "INTORG" => self.in_integer_block = true,
                    "INTEND" => self.in_integer_block = false,
                    other => return Err(MpsError::field(line, format!("marker {other:?}"))),
                }
                return Ok(());
            }
        }
        let (col, pairs) = match f {
            [col, rest @ ..] if rest.len() == 2 || rest.len() == 4 => (*col, rest),
            _ => return Err(MpsError::field(line, "COLUMNS entries are `column row value [row value]`")),
        };
        let entries = self.resolve_pairs(line, pairs)?;
        let id = match self.col_ids.get(col) {
            Some(&id) => id,
            None => {
                let id = self.columns.len();
                self.col_ids.insert(col.to_string(), id);
                self.columns.push(Column {
                    name: col.to_string(),
                    integer: self.in_integer_block,
                    kind: None,
                    lower: Some(Rat::zero()),
                    upper: None,
                    lower_set: false,
                });
                id
            }
        };
        for (row, v) in entries {
            self.rows[row].terms.push((VarId(id), v));
        }
        Ok(())
    }

    /// `row value` pairs, fully checked before anything is applied so a failed line
    /// leaves no trace when the fixed-format reading is retried.
    fn resolve_pairs(&self, line: usize, pairs: &[&str]) -> Result<Vec<(usize, Rat)>, MpsError> {
        pairs.chunks(2).map(|p| Ok((self.row(p[0])?, number(line, p[1])?))).collect()
    }

    /// RHS and RANGES lines: `[set] row value [row value]`.
    fn value_pairs(&mut self, line: usize, f: &[&str], rhs: bool, apply: impl Fn(&mut Row, Rat)) -> Result<(), MpsError> {
        let pairs = match f.len() {
            2 | 4 => f,
            3 | 5 => &f[1..],
            _ => return Err(MpsError::field(line, "expected `[set] row value [row value]`")),
        };
        for (row, v) in self.resolve_pairs(line, pairs)? {
            if self.rows[row].kind == RowKind::Objective {
                // an objective right-hand side b reads as `obj − b`; free rows are dropped
                if rhs && Some(row) == self.objective {
                    self.objective_constant = -v;
                }
                continue;
            }
            apply(&mut self.rows[row], v);
        }
        Ok(())
    }

    fn bounds_line(&mut self, line: usize, f: &[&str]) -> Result<(), MpsError> {
        let Some(kind) = f.first().map(|k| k.to_ascii_uppercase()) else {
            return Err(MpsError::field(line, "empty bound"));
        };
        let needs_value = matches!(kind.as_str(), "UP" | "LO" | "FX" | "UI" | "LI");
        let (col, value) = match (needs_value, f.len()) {
            (true, 3) => (f[1], Some(f[2])),
            (true, 4) => (f[2], Some(f[3])),
            (false, 2) => (f[1], None),
            (false, 3) => (f[2], None),
            // BV with an explicit value after the column
            (false, 4) => (f[2], None),
            _ => return Err(MpsError::field(line, format!("malformed {kind} bound"))),
        };
        let id = self.column(line, col)?;
        let value = value.map(|v| number(line, v)).transpose()?;
        let c = &mut self.columns[id];
        match (kind.as_str(), value) {
            ("UP", Some(v)) | ("UI", Some(v)) => {
                // classic convention: a negative upper bound with an untouched lower
                // bound of 0 makes the column unbounded below
                if v.is_negative() && !c.lower_set {
                    log::warn!("line {line}: negative upper bound on {col}; lower bound set to -inf");
                    c.lower = None;
                }
                c.upper = Some(v);
                if kind == "UI" {
                    c.kind = Some(VarKind::Integer);
                }
            }
            ("LO", Some(v)) | ("LI", Some(v)) => {
                c.lower = Some(v);
                c.lower_set = true;
                if kind == "LI" {
                    c.kind = Some(VarKind::Integer);
                }
            }
            ("FX", Some(v)) => {
                c.lower = Some(v.clone());
                c.upper = Some(v);
                c.lower_set = true;
            }
            ("FR", None) => {
                c.lower = None;
                c.upper = None;
                c.lower_set = true;
            }
            ("MI", None) => {
                c.lower = None;
                c.lower_set = true;
            }
            ("PL", None) => c.upper = None,
            ("BV", None) => c.kind = Some(VarKind::Binary),
            _ => return Err(MpsError::field(line, format!("bound type {kind:?}"))),
        }
        Ok(())
    }

    fn finish(self) -> Result<Model, MpsError> {
        let objective_terms = self.objective.map(|o| self.rows[o].terms.clone()).unwrap_or_default();
        let body = if objective_terms.is_empty() { Expr::constant(Rat::zero()) } else { Expr::linear(objective_terms) };
        let mut objective = match self.sense.unwrap_or(Sense::Minimize) {
            Sense::Minimize => Objective::minimize(body),
            Sense::Maximize => Objective::maximize(body),
        };
        objective.constant = self.objective_constant;
        let mut model = Model::new(objective);
        for c in self.columns {
            let kind = c.kind.unwrap_or(if c.integer { VarKind::Integer } else { VarKind::Continuous });
            model.add_variable(c.name, kind, c.lower, c.upper);
        }
        for row in self.rows {
            let (lower, upper) = match (row.kind, row.range) {
                (RowKind::Objective, _) => continue,
                (RowKind::Le, None) => (None, Some(row.rhs)),
                (RowKind::Ge, None) => (Some(row.rhs), None),
                (RowKind::Eq, None) => (Some(row.rhs.clone()), Some(row.rhs)),
                (RowKind::Le, Some(r)) => (Some(&row.rhs - r.abs()), Some(row.rhs)),
                (RowKind::Ge, Some(r)) => (Some(row.rhs.clone()), Some(&row.rhs + r.abs())),
                (RowKind::Eq, Some(r)) if r.is_negative() => (Some(&row.rhs + r), Some(row.rhs)),
                (RowKind::Eq, Some(r)) => (Some(row.rhs.clone()), Some(&row.rhs + r)),
            };
            let body = if row.terms.is_empty() { Expr::constant(Rat::zero()) } else { Expr::linear(row.terms) };
            let mut c = Constraint::new(body, lower, upper, Origin::Parsed);
            c.name = Some(row.name);
            model.add_constraint(c);
        }
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{classify, ProblemClass};
    use crate::rat::{frac, int};

    const MINIMAL: &str = "NAME          TINY
ROWS
 N  COST
 G  C1
COLUMNS
    x         COST      1            C1        1
RHS
    RHS       C1        3
ENDATA
";

    #[test]
    fn minimal_file() {
        let m = parse_mps(MINIMAL).unwrap();
        assert_eq!(m.objective.sense, Sense::Minimize);
        assert_eq!(m.objective.body, Expr::var(VarId(0)));
        assert_eq!(m.variables[0].lower, Some(int(0)));
        assert_eq!(m.constraints.len(), 1);
        assert_eq!(m.constraints[0].body, Expr::var(VarId(0)));
        assert_eq!((m.constraints[0].lower.clone(), m.constraints[0].upper.clone()), (Some(int(3)), None));
        assert_eq!(classify(&m), ProblemClass::LP);
    }

    #[test]
    fn binary_bound() {
        let text = MINIMAL.replace("ENDATA", "BOUNDS\n BV BND       x\nENDATA");
        let m = parse_mps(&text).unwrap();
        assert_eq!(m.variables[0].kind, VarKind::Binary);
        assert_eq!((m.variables[0].lower.clone(), m.variables[0].upper.clone()), (Some(int(0)), Some(int(1))));
    }

    #[test]
    fn ranges() {
        let text = "NAME R
ROWS
 N obj
 L lim
 G low
 E eqp
 E eqn
COLUMNS
 x obj 1 lim 1
 x low 1 eqp 1
 x eqn 1
RHS
 rhs lim 10 low 2
 rhs eqp 5 eqn 5
RANGES
 rng lim -4 low 3
 rng eqp 2 eqn -2
ENDATA
";
        let m = parse_mps(text).unwrap();
        let b = |i: usize| (m.constraints[i].lower.clone(), m.constraints[i].upper.clone());
        assert_eq!(b(0), (Some(int(6)), Some(int(10))));
        assert_eq!(b(1), (Some(int(2)), Some(int(5))));
        assert_eq!(b(2), (Some(int(5)), Some(int(7))));
        assert_eq!(b(3), (Some(int(3)), Some(int(5))));
    }

    #[test]
    fn integer_markers_and_bounds() {
        let text = "NAME ints
OBJSENSE
    MAX
ROWS
 N obj
 L c
COLUMNS
 MARKER 'MARKER' 'INTORG'
 i obj 2 c 1
 j obj 1 c 1
 MARKER 'MARKER' 'INTEND'
 y obj 0.5 c 1
RHS
 rhs c 7.5
 rhs obj -3
BOUNDS
 UP bnd i 4
 MI bnd y
 UP bnd y 2
 FX bnd j 1
ENDATA
";
        let m = parse_mps(text).unwrap();
        assert_eq!(m.objective.sense, Sense::Maximize);
        assert_eq!(m.objective.constant, int(3));
        let kinds: Vec<_> = m.variables.iter().map(|v| v.kind).collect();
        assert_eq!(kinds, [VarKind::Integer, VarKind::Integer, VarKind::Continuous]);
        assert_eq!(m.variables[0].upper, Some(int(4)));
        assert_eq!((m.variables[1].lower.clone(), m.variables[1].upper.clone()), (Some(int(1)), Some(int(1))));
        assert_eq!((m.variables[2].lower.clone(), m.variables[2].upper.clone()), (None, Some(int(2))));
        assert_eq!(m.constraints[0].upper, Some(frac(15, 2)));
        assert_eq!(classify(&m), ProblemClass::MILP);
    }

    #[test]
    fn negative_upper_frees_lower() {
        let text = MINIMAL.replace("ENDATA", "BOUNDS\n UP BND x -1\nENDATA");
        assert_eq!(parse_mps(&text).unwrap().variables[0].lower, None);
        let text = MINIMAL.replace("ENDATA", "BOUNDS\n LO BND x -5\n UP BND x -1\nENDATA");
        assert_eq!(parse_mps(&text).unwrap().variables[0].lower, Some(int(-5)));
    }

    #[test]
    fn fixed_format_names_with_spaces() {
        let columns = format!("{:4}{:10}{:10}{:15}{:10}2", "", "MY VAR", "COST", "1", "ROW ONE");
        let text = format!(
            "NAME          SPACED\nROWS\n N  COST\n G  ROW ONE\nCOLUMNS\n{columns}\nRHS\n    RHS       ROW ONE   4\nENDATA\n"
        );
        let m = parse_mps(&text).unwrap();
        assert_eq!(m.variables[0].name, "MY VAR");
        assert_eq!(m.constraints[0].name.as_deref(), Some("ROW ONE"));
        assert_eq!(m.constraints[0].lower, Some(int(4)));
    }

    #[test]
    fn errors() {
        assert!(matches!(parse_mps("SOS\n"), Err(MpsError::UnknownSection { .. })));
        assert_eq!(parse_mps("ROWS\n N a\n L a\n"), Err(MpsError::DuplicateRow("a".into())));
        assert_eq!(parse_mps("ROWS\n N a\nCOLUMNS\n x b 1\n"), Err(MpsError::UnknownRowReference("b".into())));
        match parse_mps("ROWS\n N a\nCOLUMNS\n x a one\n") {
            Err(MpsError::MalformedField { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_mps("ROWS\n Q a\n"), Err(MpsError::MalformedField { line: 2, .. })));
    }
}
