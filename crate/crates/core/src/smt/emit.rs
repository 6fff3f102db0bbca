//! SMT-LIB 2.0 text for expressions and formulas.

use std::collections::HashSet;
use std::fmt::Write as _;

use num_traits::{Signed, ToPrimitive};
use thiserror::Error;

use crate::model::{Expr, Formula, VarId};
use crate::Rat;

pub const DEFAULT_UNROLL_CAP: u32 = 32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EmitError {
    #[error("power exponent must be a non-negative integer constant")]
    NonIntegerExponent,
    #[error("power exponent {0} exceeds the unroll cap {1}")]
    ExponentTooLarge(String, u32),
    #[error("variable {0} has no symbol")]
    UnknownVariable(VarId),
}

#[derive(Debug, Clone, Copy)]
pub struct EmitOptions {
    pub native_power: bool,
    pub unroll_cap: u32,
}

impl Default for EmitOptions {
    fn default() -> Self {
        EmitOptions { native_power: false, unroll_cap: DEFAULT_UNROLL_CAP }
    }
}

const RESERVED: &[&str] = &[
    "and", "or", "not", "xor", "ite", "let", "true", "false", "exists", "forall", "as", "par", "exp", "abs", "div",
    "mod", "distinct", "to_real", "to_int", "is_int", "assert", "push", "pop", "Real", "Int", "Bool", "NUMERAL",
    "DECIMAL", "STRING", "_", "!",
];

fn is_simple_symbol(s: &str) -> bool {
    const EXTRA: &str = "~!@$%^&*_-+=<>.?/";
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || EXTRA.contains(c) => {}
        _ => return false,
    }
    s.chars().all(|c| c.is_ascii_alphanumeric() || EXTRA.contains(c)) && !RESERVED.contains(&s)
}

/// Maps variable ids to distinct SMT-LIB symbols.
///
/// Names that are valid simple symbols are used verbatim; anything else is quoted
/// as `|...|` after replacing characters that cannot appear inside quotes.
#[derive(Debug, Clone, Default)]
pub struct SymbolTable {
    symbols: Vec<String>,
    used: HashSet<String>,
}

impl SymbolTable {
    pub fn new() -> SymbolTable {
        SymbolTable::default()
    }

    /// Register the next id (ids are dense and assigned in call order).
    pub fn push(&mut self, name: &str) -> VarId {
        let mut base = if is_simple_symbol(name) {
            name.to_string()
        } else {
            let cleaned: String = name.chars().map(|c| if c == '|' || c == '\\' { '_' } else { c }).collect();
            format!("|{cleaned}|")
        };
        if RESERVED.contains(&base.trim_matches('|')) || base == "||" {
            base = format!("v_{}", name.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>());
        }
        let mut sym = base.clone();
        let mut i = 1;
        while self.used.contains(&sym) {
            sym = match base.strip_suffix('|') {
                Some(stem) => format!("{stem}_{i}|"),
                None => format!("{base}_{i}"),
            };
            i += 1;
        }
        self.used.insert(sym.clone());
        self.symbols.push(sym);
        VarId(self.symbols.len() - 1)
    }

    pub fn get(&self, id: VarId) -> Option<&str> {
        self.symbols.get(id.0).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }
}

/// `p`, `(/ p q)`, with negative values wrapped as `(- …)`.
pub fn rat(r: &Rat) -> String {
    let magnitude = r.abs();
    let body = if magnitude.is_integer() {
        magnitude.numer().to_string()
    } else {
        format!("(/ {} {})", magnitude.numer(), magnitude.denom())
    };
    if r.is_negative() {
        format!("(- {body})")
    } else {
        body
    }
}

pub fn expr(e: &Expr, names: &SymbolTable, opts: EmitOptions) -> Result<String, EmitError> {
    let mut out = String::new();
    write_expr(&mut out, e, names, opts)?;
    Ok(out)
}

fn write_nary(out: &mut String, op: &str, cs: &[&Expr], names: &SymbolTable, opts: EmitOptions) -> Result<(), EmitError> {
    out.push('(');
    out.push_str(op);
    for c in cs {
        out.push(' ');
        write_expr(out, c, names, opts)?;
    }
    out.push(')');
    Ok(())
}

fn write_expr(out: &mut String, e: &Expr, names: &SymbolTable, opts: EmitOptions) -> Result<(), EmitError> {
    match e {
        Expr::Const(r) => out.push_str(&rat(r)),
        Expr::Var(id) => out.push_str(names.get(*id).ok_or(EmitError::UnknownVariable(*id))?),
        Expr::Sum(cs) => write_nary(out, "+", &cs.iter().collect::<Vec<_>>(), names, opts)?,
        Expr::Product(cs) => write_nary(out, "*", &cs.iter().collect::<Vec<_>>(), names, opts)?,
        Expr::Negate(c) => write_nary(out, "-", &[c], names, opts)?,
        Expr::Subtract(a, b) => write_nary(out, "-", &[a, b], names, opts)?,
        Expr::Divide(a, b) => write_nary(out, "/", &[a, b], names, opts)?,
        Expr::Exp(c) => write_nary(out, "exp", &[c], names, opts)?,
        Expr::Power(base, exponent) => {
            let k = match exponent.as_ref() {
                Expr::Const(r) if r.is_integer() && !r.is_negative() => r.to_integer(),
                _ => return Err(EmitError::NonIntegerExponent),
            };
            if opts.native_power {
                out.push_str("(^ ");
                write_expr(out, base, names, opts)?;
                let _ = write!(out, " {k})");
                return Ok(());
            }
            let k = match k.to_u32() {
                Some(k) if k <= opts.unroll_cap => k,
                _ => return Err(EmitError::ExponentTooLarge(k.to_string(), opts.unroll_cap)),
            };
            match k {
                0 => out.push('1'),
                1 => write_expr(out, base, names, opts)?,
                _ => {
                    let factors: Vec<&Expr> = std::iter::repeat_n(base.as_ref(), k as usize).collect();
                    write_nary(out, "*", &factors, names, opts)?;
                }
            }
        }
    }
    Ok(())
}

pub fn formula(f: &Formula, names: &SymbolTable, opts: EmitOptions) -> Result<String, EmitError> {
    Ok(match f {
        Formula::Atom { lhs, op, rhs } => format!("({} {} {})", op.smt_symbol(), expr(lhs, names, opts)?, rat(rhs)),
        Formula::And(fs) if fs.is_empty() => "true".to_string(),
        Formula::Or(fs) if fs.is_empty() => "false".to_string(),
        Formula::And(fs) | Formula::Or(fs) if fs.len() == 1 => formula(&fs[0], names, opts)?,
        Formula::And(fs) | Formula::Or(fs) => {
            let op = if matches!(f, Formula::And(_)) { "and" } else { "or" };
            let parts = fs.iter().map(|g| formula(g, names, opts)).collect::<Result<Vec<_>, _>>()?;
            format!("({op} {})", parts.join(" "))
        }
    })
}

/// One `(assert …)` line per top-level conjunct.
pub fn assertions(f: &Formula, names: &SymbolTable, opts: EmitOptions) -> Result<Vec<String>, EmitError> {
    f.conjuncts().into_iter().map(|c| Ok(format!("(assert {})", formula(c, names, opts)?))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Cmp;
    use crate::rat::{frac, int};

    fn xy() -> SymbolTable {
        let mut t = SymbolTable::new();
        t.push("x");
        t.push("y");
        t
    }

    #[test]
    fn emit_examples() {
        let t = xy();
        let o = EmitOptions::default();
        let e = Expr::sum([Expr::var(VarId(0)), Expr::product([Expr::constant(int(2)), Expr::var(VarId(1))])]);
        assert_eq!(expr(&e, &t, o).unwrap(), "(+ x (* 2 y))");
        assert_eq!(expr(&Expr::constant(frac(-1, 3)), &t, o).unwrap(), "(- (/ 1 3))");
        assert_eq!(expr(&Expr::constant(int(-2)), &t, o).unwrap(), "(- 2)");
        let cube = Expr::power(Expr::var(VarId(0)), Expr::constant(int(3)));
        assert_eq!(expr(&cube, &t, o).unwrap(), "(* x x x)");
        assert_eq!(expr(&cube, &t, EmitOptions { native_power: true, ..o }).unwrap(), "(^ x 3)");
        assert_eq!(expr(&Expr::power(Expr::var(VarId(0)), Expr::constant(int(0))), &t, o).unwrap(), "1");
        assert_eq!(expr(&Expr::exp(Expr::negate(Expr::var(VarId(1)))), &t, o).unwrap(), "(exp (- y))");
    }

    #[test]
    fn power_errors() {
        let t = xy();
        let o = EmitOptions::default();
        let half = Expr::power(Expr::var(VarId(0)), Expr::constant(frac(1, 2)));
        assert_eq!(expr(&half, &t, o), Err(EmitError::NonIntegerExponent));
        let by_var = Expr::power(Expr::var(VarId(0)), Expr::var(VarId(1)));
        assert_eq!(expr(&by_var, &t, o), Err(EmitError::NonIntegerExponent));
        let big = Expr::power(Expr::var(VarId(0)), Expr::constant(int(33)));
        assert_eq!(expr(&big, &t, o), Err(EmitError::ExponentTooLarge("33".into(), 32)));
    }

    #[test]
    fn formula_examples() {
        let t = xy();
        let o = EmitOptions::default();
        let cut = Formula::Or(vec![Formula::var_le(VarId(0), int(2)), Formula::var_ge(VarId(0), int(3))]);
        assert_eq!(assertions(&cut, &t, o).unwrap(), vec!["(assert (or (<= x 2) (>= x 3)))"]);
        let flat = Formula::Or(vec![Formula::var_eq(VarId(1), int(0)), Formula::var_eq(VarId(1), int(1))]);
        assert_eq!(assertions(&flat, &t, o).unwrap(), vec!["(assert (or (= y 0) (= y 1)))"]);
        let bounds = Formula::And(vec![
            Formula::var_ge(VarId(0), int(0)),
            Formula::var_le(VarId(0), int(4)),
            Formula::atom(Expr::var(VarId(1)), Cmp::Gt, frac(1, 2)),
        ]);
        assert_eq!(assertions(&bounds, &t, o).unwrap().len(), 3);
    }

    #[test]
    fn symbols_are_distinct_and_quoted() {
        let mut t = SymbolTable::new();
        t.push("x");
        t.push("a b");
        t.push("exp");
        t.push("2x");
        t.push("x");
        assert_eq!(t.symbols(), &["x", "|a b|", "v_exp", "|2x|", "x_1"]);
    }
}
