use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::VarId;
use crate::rat::serde_rat;
use crate::{Rat, Scalar};

/// Operator tree for objective and constraint bodies.
///
/// `Sum` and `Product` always have at least two children; use [`Expr::sum`] and
/// [`Expr::product`] to build them from arbitrary lists.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expr {
    Const(#[serde(with = "serde_rat")] Rat),
    Var(VarId),
    Sum(Vec<Expr>),
    Negate(Box<Expr>),
    Product(Vec<Expr>),
    Subtract(Box<Expr>, Box<Expr>),
    Divide(Box<Expr>, Box<Expr>),
    Power(Box<Expr>, Box<Expr>),
    Exp(Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("expression has no rational value: {0}")]
    NonRationalValue(&'static str),
    #[error("variable {0} has no value")]
    MissingValue(VarId),
}

impl Expr {
    pub fn constant(r: Rat) -> Expr {
        Expr::Const(r)
    }

    pub fn var(id: VarId) -> Expr {
        Expr::Var(id)
    }

    /// Sum of `terms`, flattening nested sums. An empty list is `0`, a single term is itself.
    pub fn sum(terms: impl IntoIterator<Item = Expr>) -> Expr {
        let mut flat = Vec::new();
        for t in terms {
            match t {
                Expr::Sum(inner) => flat.extend(inner),
                other => flat.push(other),
            }
        }
        match flat.len() {
            0 => Expr::Const(Rat::from_integer(0.into())),
            1 => flat.pop().unwrap(),
            _ => Expr::Sum(flat),
        }
    }

    /// Product of `factors`, flattening nested products. An empty list is `1`.
    pub fn product(factors: impl IntoIterator<Item = Expr>) -> Expr {
        let mut flat = Vec::new();
        for f in factors {
            match f {
                Expr::Product(inner) => flat.extend(inner),
                other => flat.push(other),
            }
        }
        match flat.len() {
            0 => Expr::Const(Rat::from_integer(1.into())),
            1 => flat.pop().unwrap(),
            _ => Expr::Product(flat),
        }
    }

    pub fn negate(e: Expr) -> Expr {
        Expr::Negate(Box::new(e))
    }

    pub fn subtract(a: Expr, b: Expr) -> Expr {
        Expr::Subtract(Box::new(a), Box::new(b))
    }

    pub fn divide(a: Expr, b: Expr) -> Expr {
        Expr::Divide(Box::new(a), Box::new(b))
    }

    pub fn power(base: Expr, exponent: Expr) -> Expr {
        Expr::Power(Box::new(base), Box::new(exponent))
    }

    pub fn exp(e: Expr) -> Expr {
        Expr::Exp(Box::new(e))
    }

    /// `coef * x`, written as a bare variable when `coef == 1`.
    pub fn scaled_var(coef: Rat, id: VarId) -> Expr {
        if num_traits::One::is_one(&coef) {
            Expr::Var(id)
        } else {
            Expr::Product(vec![Expr::Const(coef), Expr::Var(id)])
        }
    }

    /// `Σ coef·x` over `terms`.
    pub fn linear(terms: impl IntoIterator<Item = (VarId, Rat)>) -> Expr {
        Expr::sum(terms.into_iter().map(|(id, c)| Expr::scaled_var(c, id)))
    }

    pub fn children(&self) -> Vec<&Expr> {
        match self {
            Expr::Const(_) | Expr::Var(_) => Vec::new(),
            Expr::Sum(cs) | Expr::Product(cs) => cs.iter().collect(),
            Expr::Negate(c) | Expr::Exp(c) => vec![c],
            Expr::Subtract(a, b) | Expr::Divide(a, b) | Expr::Power(a, b) => vec![a, b],
        }
    }

    /// Visit every node, parents before children.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        f(self);
        for c in self.children() {
            c.walk(f);
        }
    }

    pub fn any(&self, pred: &impl Fn(&Expr) -> bool) -> bool {
        pred(self) || self.children().into_iter().any(|c| c.any(pred))
    }

    pub fn contains_exp(&self) -> bool {
        self.any(&|e| matches!(e, Expr::Exp(_)))
    }

    pub fn max_var(&self) -> Option<VarId> {
        let mut max = None;
        self.walk(&mut |e| {
            if let Expr::Var(id) = e {
                max = Some(max.map_or(*id, |m: VarId| m.max(*id)));
            }
        });
        max
    }

    /// Replace every variable id through `map`.
    pub fn map_vars(&self, map: &impl Fn(VarId) -> VarId) -> Expr {
        match self {
            Expr::Const(r) => Expr::Const(r.clone()),
            Expr::Var(id) => Expr::Var(map(*id)),
            Expr::Sum(cs) => Expr::Sum(cs.iter().map(|c| c.map_vars(map)).collect()),
            Expr::Product(cs) => Expr::Product(cs.iter().map(|c| c.map_vars(map)).collect()),
            Expr::Negate(c) => Expr::negate(c.map_vars(map)),
            Expr::Exp(c) => Expr::exp(c.map_vars(map)),
            Expr::Subtract(a, b) => Expr::subtract(a.map_vars(map), b.map_vars(map)),
            Expr::Divide(a, b) => Expr::divide(a.map_vars(map), b.map_vars(map)),
            Expr::Power(a, b) => Expr::power(a.map_vars(map), b.map_vars(map)),
        }
    }

    /// Polynomial degree, or `None` when the tree is not a polynomial (division by a
    /// non-constant, `exp` of a non-constant, or a non-constant/non-natural exponent).
    pub fn polynomial_degree(&self) -> Option<u32> {
        match self {
            Expr::Const(_) => Some(0),
            Expr::Var(_) => Some(1),
            Expr::Sum(cs) => cs.iter().try_fold(0, |acc, c| Some(acc.max(c.polynomial_degree()?))),
            Expr::Product(cs) => cs.iter().try_fold(0, |acc, c| Some(acc + c.polynomial_degree()?)),
            Expr::Negate(c) => c.polynomial_degree(),
            Expr::Subtract(a, b) => Some(a.polynomial_degree()?.max(b.polynomial_degree()?)),
            Expr::Divide(a, b) => match b.polynomial_degree()? {
                0 => a.polynomial_degree(),
                _ => None,
            },
            Expr::Power(base, exponent) => {
                let k = match exponent.as_ref() {
                    Expr::Const(r) if r.is_integer() && !num_traits::Signed::is_negative(r) => {
                        num_traits::ToPrimitive::to_u32(&r.to_integer())?
                    }
                    _ => return None,
                };
                Some(base.polynomial_degree()? * k)
            }
            Expr::Exp(c) => match c.polynomial_degree()? {
                0 => Some(0),
                _ => None,
            },
        }
    }

    /// Linear in the classification sense: polynomial of degree at most one with no
    /// `Power`, `Exp` or division by a variable anywhere.
    pub fn is_linear(&self) -> bool {
        !self.any(&|e| matches!(e, Expr::Power(..) | Expr::Exp(_)))
            && self.polynomial_degree().is_some_and(|d| d <= 1)
    }

    /// Evaluate with variable values looked up through `value`.
    pub fn eval_with<S: Scalar>(&self, value: &impl Fn(VarId) -> Option<S>) -> Result<S, EvalError> {
        Ok(match self {
            Expr::Const(r) => S::from_rat(r),
            Expr::Var(id) => value(*id).ok_or(EvalError::MissingValue(*id))?,
            Expr::Sum(cs) => {
                let mut acc = S::zero();
                for c in cs {
                    acc = acc + c.eval_with(value)?;
                }
                acc
            }
            Expr::Product(cs) => {
                let mut acc = S::one();
                for c in cs {
                    acc = acc * c.eval_with(value)?;
                }
                acc
            }
            Expr::Negate(c) => -c.eval_with(value)?,
            Expr::Subtract(a, b) => a.eval_with(value)? - b.eval_with(value)?,
            Expr::Divide(a, b) => {
                let d = b.eval_with(value)?;
                if d.is_zero() {
                    return Err(EvalError::DivisionByZero);
                }
                a.eval_with(value)? / d
            }
            Expr::Power(base, exponent) => {
                let b = base.eval_with(value)?;
                let e = exponent.eval_with(value)?;
                match e.as_exponent() {
                    Some(k) => b.powi(k).ok_or(EvalError::DivisionByZero)?,
                    None => b.powf(&e).ok_or(EvalError::NonRationalValue("non-integer exponent"))?,
                }
            }
            Expr::Exp(c) => {
                let v = c.eval_with(value)?;
                v.exp().ok_or(EvalError::NonRationalValue("exp"))?
            }
        })
    }

    /// Evaluate over a dense slice indexed by variable id.
    pub fn eval_dense<S: Scalar>(&self, values: &[S]) -> Result<S, EvalError> {
        self.eval_with(&|id: VarId| values.get(id.0).cloned())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{frac, int};

    fn x() -> Expr {
        Expr::var(VarId(0))
    }
    fn y() -> Expr {
        Expr::var(VarId(1))
    }

    #[test]
    fn sum_and_product_flatten() {
        let e = Expr::sum([x(), Expr::sum([y(), Expr::constant(int(1))])]);
        assert_eq!(e, Expr::Sum(vec![x(), y(), Expr::constant(int(1))]));
        assert_eq!(Expr::sum([x()]), x());
        assert_eq!(Expr::product(Vec::new()), Expr::constant(int(1)));
    }

    #[test]
    fn degree_and_linearity() {
        assert!(Expr::linear([(VarId(0), int(2)), (VarId(1), int(-1))]).is_linear());
        assert!(!Expr::product([x(), y()]).is_linear());
        assert!(!Expr::power(x(), Expr::constant(int(1))).is_linear());
        assert!(Expr::divide(x(), Expr::constant(int(2))).is_linear());
        assert!(!Expr::divide(Expr::constant(int(1)), x()).is_linear());
        assert_eq!(Expr::power(Expr::product([x(), y()]), Expr::constant(int(3))).polynomial_degree(), Some(6));
        assert_eq!(Expr::power(x(), Expr::constant(frac(1, 2))).polynomial_degree(), None);
    }

    #[test]
    fn float_evaluation_supports_exp() {
        let e = Expr::sum([Expr::exp(x()), Expr::power(y(), Expr::constant(frac(1, 2)))]);
        let v: f64 = e.eval_dense(&[0.0, 4.0]).unwrap();
        assert!((v - 3.0).abs() < 1e-12);
        assert!(matches!(e.eval_dense(&[int(0), int(4)]), Err(EvalError::NonRationalValue(_))));
    }
}
