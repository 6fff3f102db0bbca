//! OSiL (Optimization Services instance Language) reader.
//!
//! Supports the subset needed for polynomial and exponential MINLPs: typed variables,
//! a single objective, constraint rows, the sparse linear coefficient matrix,
//! quadratic term tuples and `nl` expression trees. Anything else is an error rather
//! than silently dropped.

use num_traits::{One, Zero};
use roxmltree::{Document, Node};
use thiserror::Error;

use crate::model::{classify, Constraint, Expr, Model, Objective, Origin, ProblemClass, VarId, VarKind};
use crate::portfolio::VectorSet;
use crate::rat::{int, parse_rat};
use crate::Rat;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OsilError {
    #[error("unsupported operator <{0}>")]
    UnsupportedOperator(String),
    #[error("only one objective is supported")]
    MultipleObjectives,
    #[error("malformed document: {0}")]
    MalformedDocument(String),
    #[error("inconsistent counts: {0}")]
    InconsistentCounts(String),
}

fn malformed(detail: impl Into<String>) -> OsilError {
    OsilError::MalformedDocument(detail.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct OsilOptions {
    /// Treat a missing variable `lb` as −∞ instead of the schema default 0.
    pub free_default_lower: bool,
}

pub fn parse_osil(bytes: &[u8]) -> Result<Model, OsilError> {
    parse_osil_with(bytes, OsilOptions::default())
}

pub fn parse_osil_with(bytes: &[u8], opts: OsilOptions) -> Result<Model, OsilError> {
    let text = std::str::from_utf8(bytes).map_err(|e| malformed(format!("not UTF-8: {e}")))?;
    let doc = Document::parse(text).map_err(|e| malformed(e.to_string()))?;
    let root = doc.root_element();
    if root.tag_name().name() != "osil" {
        return Err(malformed(format!("root element is <{}>, expected <osil>", root.tag_name().name())));
    }
    let data = child(root, "instanceData").ok_or_else(|| malformed("missing <instanceData>"))?;

    let mut model = Model::new(Objective::minimize(Expr::constant(Rat::zero())));
    if let Some(vars) = child(data, "variables") {
        read_variables(vars, &mut model, opts)?;
    }
    let n = model.variables.len();

    let mut rows = match child(data, "constraints") {
        Some(cons) => read_rows(cons)?,
        None => Vec::new(),
    };
    let mut objective = match child(data, "objectives") {
        Some(objs) => read_objective(objs, n)?,
        None => ObjRow { maximize: false, constant: Rat::zero(), terms: Vec::new() },
    };

    if let Some(lin) = child(data, "linearConstraintCoefficients") {
        for (row, col, value) in read_matrix(lin, rows.len(), n)? {
            rows[row].terms.push(Expr::scaled_var(value, VarId(col)));
        }
    }
    if let Some(quad) = child(data, "quadraticCoefficients") {
        for (row, term) in read_quadratic(quad, n)? {
            target(&mut rows, &mut objective.terms, row)?.push(term);
        }
    }
    if let Some(nls) = child(data, "nonlinearExpressions") {
        let declared = count_attr(nls, "numberOfNonlinearExpressions")?;
        let mut seen = 0;
        for nl in elements(nls, "nl") {
            seen += 1;
            let row: i64 = attr_parse(nl, "idx")?.ok_or_else(|| malformed("<nl> without idx"))?;
            let mut kids = nl.children().filter(Node::is_element);
            let (Some(tree), None) = (kids.next(), kids.next()) else {
                return Err(malformed("<nl> must hold exactly one expression"));
            };
            let e = read_nl(tree, n)?;
            target(&mut rows, &mut objective.terms, row)?.push(e);
        }
        check_count("nonlinearExpressions", declared, seen)?;
    }

    model.objective = Objective {
        sense: if objective.maximize { crate::model::Sense::Maximize } else { crate::model::Sense::Minimize },
        body: body_of(objective.terms),
        constant: objective.constant,
        negated: false,
    };
    for row in rows {
        // body + constant ∈ [lb, ub]; rows with no finite side constrain nothing
        if row.lower.is_none() && row.upper.is_none() {
            continue;
        }
        let shift = |b: Option<Rat>| b.map(|b| b - &row.constant);
        let mut c = Constraint::new(body_of(row.terms), shift(row.lower), shift(row.upper), Origin::Parsed);
        c.name = row.name;
        model.add_constraint(c);
    }
    Ok(model)
}

/// Problem class plus which feature-vector family suits it.
pub fn detect_class_and_vector_set(model: &Model) -> (ProblemClass, VectorSet) {
    let set = if model.has_integer_vars() { VectorSet::Minlp } else { VectorSet::Nlp };
    (classify(model), set)
}

struct Row {
    name: Option<String>,
    lower: Option<Rat>,
    upper: Option<Rat>,
    constant: Rat,
    terms: Vec<Expr>,
}

struct ObjRow {
    maximize: bool,
    constant: Rat,
    terms: Vec<Expr>,
}

fn body_of(terms: Vec<Expr>) -> Expr {
    if terms.is_empty() {
        Expr::constant(Rat::zero())
    } else {
        Expr::sum(terms)
    }
}

/// Row `idx` of the constraint list, or the objective for `-1`.
fn target<'a>(rows: &'a mut [Row], objective: &'a mut Vec<Expr>, idx: i64) -> Result<&'a mut Vec<Expr>, OsilError> {
    match idx {
        -1 => Ok(objective),
        i if i < -1 => Err(OsilError::MultipleObjectives),
        i => {
            let len = rows.len();
            rows.get_mut(i as usize).map(|r| &mut r.terms).ok_or_else(|| malformed(format!("row index {i} out of range 0..{len}")))
        }
    }
}

fn child<'a, 'i>(node: Node<'a, 'i>, name: &str) -> Option<Node<'a, 'i>> {
    node.children().find(|c| c.is_element() && c.tag_name().name() == name)
}

fn elements<'a, 'i: 'a>(node: Node<'a, 'i>, name: &'a str) -> impl Iterator<Item = Node<'a, 'i>> + 'a {
    node.children().filter(move |c| c.is_element() && c.tag_name().name() == name)
}

fn attr_parse<T: std::str::FromStr>(node: Node, name: &str) -> Result<Option<T>, OsilError> {
    match node.attribute(name) {
        None => Ok(None),
        Some(s) => s.trim().parse().map(Some).map_err(|_| malformed(format!("<{}> attribute {name}={s:?}", node.tag_name().name()))),
    }
}

fn count_attr(node: Node, name: &str) -> Result<Option<usize>, OsilError> {
    attr_parse(node, name)
}

fn check_count(what: &str, declared: Option<usize>, seen: usize) -> Result<(), OsilError> {
    match declared {
        Some(d) if d != seen => Err(OsilError::InconsistentCounts(format!("{what}: declared {d}, found {seen}"))),
        _ => Ok(()),
    }
}

/// A bound value: `None` for ±∞ (the caller knows which side).
fn bound(node: Node, name: &str) -> Result<Option<Option<Rat>>, OsilError> {
    let Some(s) = node.attribute(name) else {
        return Ok(None);
    };
    let t = s.trim();
    let infinite = matches!(t.trim_start_matches(['-', '+']).to_ascii_lowercase().as_str(), "inf" | "infinity");
    if infinite {
        return Ok(Some(None));
    }
    number(t).map(|r| Some(Some(r)))
}

fn number(s: &str) -> Result<Rat, OsilError> {
    parse_rat(s.trim()).map_err(|_| malformed(format!("bad number {s:?}")))
}

fn mult(node: Node) -> Result<usize, OsilError> {
    Ok(attr_parse::<usize>(node, "mult")?.unwrap_or(1))
}

fn read_variables(vars: Node, model: &mut Model, opts: OsilOptions) -> Result<(), OsilError> {
    let declared = count_attr(vars, "numberOfVariables")?;
    let default_lower = if opts.free_default_lower { None } else { Some(Rat::zero()) };
    for v in elements(vars, "var") {
        let kind = match v.attribute("type").unwrap_or("C") {
            "C" => VarKind::Continuous,
            "I" => VarKind::Integer,
            "B" => VarKind::Binary,
            other => return Err(malformed(format!("unsupported variable type {other:?}"))),
        };
        let lower = bound(v, "lb")?.unwrap_or(default_lower.clone());
        let upper = bound(v, "ub")?.unwrap_or(None);
        for _ in 0..mult(v)? {
            let name = match v.attribute("name") {
                Some(n) if !n.is_empty() && model.find_var(n).is_none() => n.to_string(),
                Some(n) if !n.is_empty() => model.fresh_name(n),
                _ => model.fresh_name(&format!("x{}", model.variables.len())),
            };
            model.add_variable(name, kind, lower.clone(), upper.clone());
        }
    }
    check_count("variables", declared, model.variables.len())
}

fn read_rows(cons: Node) -> Result<Vec<Row>, OsilError> {
    let declared = count_attr(cons, "numberOfConstraints")?;
    let mut rows = Vec::new();
    for c in elements(cons, "con") {
        let lower = bound(c, "lb")?.flatten();
        let upper = bound(c, "ub")?.flatten();
        let constant = match c.attribute("constant") {
            Some(s) => number(s)?,
            None => Rat::zero(),
        };
        for _ in 0..mult(c)? {
            rows.push(Row {
                name: c.attribute("name").map(str::to_string),
                lower: lower.clone(),
                upper: upper.clone(),
                constant: constant.clone(),
                terms: Vec::new(),
            });
        }
    }
    check_count("constraints", declared, rows.len())?;
    Ok(rows)
}

fn read_objective(objs: Node, n: usize) -> Result<ObjRow, OsilError> {
    let all: Vec<Node> = elements(objs, "obj").collect();
    let declared = count_attr(objs, "numberOfObjectives")?;
    if all.len() > 1 || declared.is_some_and(|d| d > 1) {
        return Err(OsilError::MultipleObjectives);
    }
    check_count("objectives", declared, all.len())?;
    let Some(obj) = all.first() else {
        return Ok(ObjRow { maximize: false, constant: Rat::zero(), terms: Vec::new() });
    };
    let maximize = match obj.attribute("maxOrMin").unwrap_or("min").to_ascii_lowercase().as_str() {
        "min" => false,
        "max" => true,
        other => return Err(malformed(format!("maxOrMin={other:?}"))),
    };
    let constant = match obj.attribute("constant") {
        Some(s) => number(s)?,
        None => Rat::zero(),
    };
    let mut terms = Vec::new();
    for coef in elements(*obj, "coef") {
        let idx: usize = attr_parse(coef, "idx")?.ok_or_else(|| malformed("<coef> without idx"))?;
        if idx >= n {
            return Err(malformed(format!("objective coefficient on variable {idx} of {n}")));
        }
        terms.push(Expr::scaled_var(number(coef.text().unwrap_or(""))?, VarId(idx)));
    }
    check_count("objective coefficients", count_attr(*obj, "numberOfObjCoef")?, terms.len())?;
    Ok(ObjRow { maximize, constant, terms })
}

/// Expand an `<el>` list with `mult`/`incr` into plain values.
fn expand<T>(list: Node, parse: impl Fn(&str) -> Result<T, OsilError>, step: impl Fn(&T, &T, usize) -> T) -> Result<Vec<T>, OsilError> {
    let mut out = Vec::new();
    for el in elements(list, "el") {
        let first = parse(el.text().unwrap_or(""))?;
        let reps = mult(el)?;
        match el.attribute("incr") {
            None => out.extend(std::iter::repeat_with(|| step(&first, &first, 0)).take(reps)),
            Some(s) => {
                let incr = parse(s)?;
                out.extend((0..reps).map(|k| step(&first, &incr, k)));
            }
        }
    }
    Ok(out)
}

fn index_list(list: Node) -> Result<Vec<usize>, OsilError> {
    let parse = |s: &str| -> Result<i64, OsilError> { s.trim().parse().map_err(|_| malformed(format!("bad index {s:?}"))) };
    let raw = expand(list, parse, |first, incr, k| if k == 0 { *first } else { first + incr * k as i64 })?;
    raw.into_iter().map(|i| usize::try_from(i).map_err(|_| malformed(format!("negative index {i}")))).collect()
}

fn value_list(list: Node) -> Result<Vec<Rat>, OsilError> {
    expand(list, number, |first, incr, k| if k == 0 { first.clone() } else { first + incr * int(k as i64) })
}

/// `(row, column, value)` triples of the sparse linear matrix.
fn read_matrix(lin: Node, nrows: usize, ncols: usize) -> Result<Vec<(usize, usize, Rat)>, OsilError> {
    let declared = count_attr(lin, "numberOfValues")?;
    let start = child(lin, "start").map(index_list).transpose()?.unwrap_or_default();
    let values = child(lin, "value").map(value_list).transpose()?.unwrap_or_default();
    // column-major stores row indices per column, row-major column indices per row
    let (column_major, idx) = match (child(lin, "rowIdx"), child(lin, "colIdx")) {
        (Some(r), None) => (true, index_list(r)?),
        (None, Some(c)) => (false, index_list(c)?),
        (Some(_), Some(_)) => return Err(malformed("both rowIdx and colIdx present")),
        (None, None) if values.is_empty() => return Ok(Vec::new()),
        (None, None) => return Err(malformed("linear coefficients without rowIdx or colIdx")),
    };
    check_count("linear coefficient values", declared, values.len())?;
    if idx.len() != values.len() {
        return Err(OsilError::InconsistentCounts(format!("{} indices for {} values", idx.len(), values.len())));
    }
    let (majors, minors) = if column_major { (ncols, nrows) } else { (nrows, ncols) };
    if start.len() != majors + 1 && !(values.is_empty() && start.len() <= 1) {
        return Err(OsilError::InconsistentCounts(format!("start has {} entries for {majors} vectors", start.len())));
    }
    let mut out = Vec::with_capacity(values.len());
    for major in 0..start.len().saturating_sub(1) {
        let (a, b) = (start[major], start[major + 1]);
        if a > b || b > values.len() {
            return Err(malformed(format!("start entries {a}, {b} out of order or range")));
        }
        for k in a..b {
            let minor = idx[k];
            if minor >= minors {
                return Err(malformed(format!("coefficient index {minor} out of range 0..{minors}")));
            }
            let (row, col) = if column_major { (minor, major) } else { (major, minor) };
            out.push((row, col, values[k].clone()));
        }
    }
    if start.last().is_some_and(|&e| e != values.len()) {
        return Err(OsilError::InconsistentCounts(format!("start ends at {} with {} values", start.last().unwrap(), values.len())));
    }
    Ok(out)
}

fn read_quadratic(quad: Node, n: usize) -> Result<Vec<(i64, Expr)>, OsilError> {
    let declared = count_attr(quad, "numberOfQuadraticTerms")?;
    let mut out = Vec::new();
    for q in elements(quad, "qTerm") {
        let row: i64 = attr_parse(q, "idx")?.ok_or_else(|| malformed("<qTerm> without idx"))?;
        let var = |name: &str| -> Result<VarId, OsilError> {
            let i: usize = attr_parse(q, name)?.ok_or_else(|| malformed(format!("<qTerm> without {name}")))?;
            if i >= n {
                return Err(malformed(format!("quadratic term on variable {i} of {n}")));
            }
            Ok(VarId(i))
        };
        let (a, b) = (var("idxOne")?, var("idxTwo")?);
        let coef = match q.attribute("coef") {
            Some(s) => number(s)?,
            None => Rat::one(),
        };
        let monomial = if a == b {
            Expr::power(Expr::var(a), Expr::constant(int(2)))
        } else {
            Expr::product([Expr::var(a), Expr::var(b)])
        };
        let term = if coef.is_one() { monomial } else { Expr::product([Expr::constant(coef), monomial]) };
        out.push((row, term));
    }
    check_count("quadratic terms", declared, out.len())?;
    Ok(out)
}

fn read_nl(node: Node, n: usize) -> Result<Expr, OsilError> {
    let name = node.tag_name().name();
    let kids: Vec<Node> = node.children().filter(Node::is_element).collect();
    let arity = |k: usize| -> Result<(), OsilError> {
        if kids.len() == k {
            Ok(())
        } else {
            Err(malformed(format!("<{name}> takes {k} operand(s), found {}", kids.len())))
        }
    };
    let sub = |i: usize| read_nl(kids[i], n);
    Ok(match name {
        "number" => {
            let v = node.attribute("value").ok_or_else(|| malformed("<number> without value"))?;
            Expr::constant(number(v)?)
        }
        "variable" => {
            let i: usize = attr_parse(node, "idx")?.ok_or_else(|| malformed("<variable> without idx"))?;
            if i >= n {
                return Err(malformed(format!("<variable idx={i}> out of range 0..{n}")));
            }
            let coef = match node.attribute("coef") {
                Some(s) => number(s)?,
                None => Rat::one(),
            };
            Expr::scaled_var(coef, VarId(i))
        }
        "plus" => {
            arity(2)?;
            Expr::sum([sub(0)?, sub(1)?])
        }
        "minus" => {
            arity(2)?;
            Expr::subtract(sub(0)?, sub(1)?)
        }
        "times" => {
            arity(2)?;
            Expr::product([sub(0)?, sub(1)?])
        }
        "divide" => {
            arity(2)?;
            Expr::divide(sub(0)?, sub(1)?)
        }
        "power" => {
            arity(2)?;
            Expr::power(sub(0)?, sub(1)?)
        }
        "negate" => {
            arity(1)?;
            Expr::negate(sub(0)?)
        }
        "square" => {
            arity(1)?;
            Expr::power(sub(0)?, Expr::constant(int(2)))
        }
        "exp" => {
            arity(1)?;
            Expr::exp(sub(0)?)
        }
        "sum" | "product" => {
            let terms = (0..kids.len()).map(sub).collect::<Result<Vec<_>, _>>()?;
            match (name, terms.is_empty()) {
                ("sum", true) => Expr::constant(Rat::zero()),
                ("sum", false) => Expr::sum(terms),
                (_, true) => Expr::constant(Rat::one()),
                _ => Expr::product(terms),
            }
        }
        other => return Err(OsilError::UnsupportedOperator(other.to_string())),
    })
}
