use serde::{Deserialize, Serialize};

use crate::model::{EvalError, Expr, VarId};
use crate::rat::serde_rat;
use crate::Rat;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cmp {
    Le,
    Lt,
    Ge,
    Gt,
    Eq,
}

impl Cmp {
    pub fn holds(self, lhs: &Rat, rhs: &Rat) -> bool {
        match self {
            Cmp::Le => lhs <= rhs,
            Cmp::Lt => lhs < rhs,
            Cmp::Ge => lhs >= rhs,
            Cmp::Gt => lhs > rhs,
            Cmp::Eq => lhs == rhs,
        }
    }

    pub fn smt_symbol(self) -> &'static str {
        match self {
            Cmp::Le => "<=",
            Cmp::Lt => "<",
            Cmp::Ge => ">=",
            Cmp::Gt => ">",
            Cmp::Eq => "=",
        }
    }
}

/// Boolean combination of comparisons `expr ⋈ constant`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Formula {
    Atom {
        lhs: Expr,
        op: Cmp,
        #[serde(with = "serde_rat")]
        rhs: Rat,
    },
    And(Vec<Formula>),
    Or(Vec<Formula>),
}

impl Formula {
    pub fn atom(lhs: Expr, op: Cmp, rhs: Rat) -> Formula {
        Formula::Atom { lhs, op, rhs }
    }

    pub fn var_le(id: VarId, rhs: Rat) -> Formula {
        Formula::atom(Expr::Var(id), Cmp::Le, rhs)
    }

    pub fn var_ge(id: VarId, rhs: Rat) -> Formula {
        Formula::atom(Expr::Var(id), Cmp::Ge, rhs)
    }

    pub fn var_eq(id: VarId, rhs: Rat) -> Formula {
        Formula::atom(Expr::Var(id), Cmp::Eq, rhs)
    }

    /// Top-level conjuncts; a non-conjunction is its own single conjunct.
    pub fn conjuncts(&self) -> Vec<&Formula> {
        match self {
            Formula::And(fs) => fs.iter().flat_map(|f| f.conjuncts()).collect(),
            other => vec![other],
        }
    }

    /// Number of `Or` nodes in the formula.
    pub fn disjunction_count(&self) -> usize {
        match self {
            Formula::Atom { .. } => 0,
            Formula::And(fs) => fs.iter().map(Formula::disjunction_count).sum(),
            Formula::Or(fs) => 1 + fs.iter().map(Formula::disjunction_count).sum::<usize>(),
        }
    }

    pub fn exprs(&self) -> Vec<&Expr> {
        match self {
            Formula::Atom { lhs, .. } => vec![lhs],
            Formula::And(fs) | Formula::Or(fs) => fs.iter().flat_map(|f| f.exprs()).collect(),
        }
    }

    /// Exact truth value, with every comparison relaxed by `tol`.
    pub fn holds(&self, value: &impl Fn(VarId) -> Option<Rat>, tol: &Rat) -> Result<bool, EvalError> {
        Ok(match self {
            Formula::Atom { lhs, op, rhs } => {
                let v = lhs.eval_with(value)?;
                match op {
                    Cmp::Le | Cmp::Lt if tol > &Rat::default() => v <= rhs + tol,
                    Cmp::Ge | Cmp::Gt if tol > &Rat::default() => v >= rhs - tol,
                    Cmp::Eq => v >= rhs - tol && v <= rhs + tol,
                    _ => op.holds(&v, rhs),
                }
            }
            Formula::And(fs) => {
                for f in fs {
                    if !f.holds(value, tol)? {
                        return Ok(false);
                    }
                }
                true
            }
            Formula::Or(fs) => {
                for f in fs {
                    if f.holds(value, tol)? {
                        return Ok(true);
                    }
                }
                false
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{frac, int};

    #[test]
    fn conjunct_splitting_and_counts() {
        let x = VarId(0);
        let f = Formula::And(vec![
            Formula::var_ge(x, int(0)),
            Formula::And(vec![Formula::Or(vec![Formula::var_le(x, int(0)), Formula::var_ge(x, int(1))])]),
            Formula::var_le(x, int(1)),
        ]);
        assert_eq!(f.conjuncts().len(), 3);
        assert_eq!(f.disjunction_count(), 1);
    }

    #[test]
    fn tolerance_relaxes_atoms() {
        let x = VarId(0);
        let f = Formula::var_ge(x, int(3));
        let at = |v: Rat| move |_: VarId| Some(v.clone());
        assert!(!f.holds(&at(frac(2999, 1000)), &int(0)).unwrap());
        assert!(f.holds(&at(frac(2999, 1000)), &frac(1, 1000)).unwrap());
        let strict = Formula::atom(Expr::Var(x), Cmp::Gt, int(3));
        assert!(!strict.holds(&at(int(3)), &int(0)).unwrap());
    }
}
