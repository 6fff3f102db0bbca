//! Exact-arithmetic model of a mixed-integer non-linear program.

mod classify;
mod expr;
mod formula;

use std::collections::{BTreeMap, HashSet};

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rat::{serde_opt_rat, serde_rat};
use crate::Rat;

pub use classify::{classify, ProblemClass};
pub use expr::{EvalError, Expr};
pub use formula::{Cmp, Formula};

/// Dense index of a variable in [`Model::variables`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VarId(pub usize);

impl std::fmt::Display for VarId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarKind {
    Continuous,
    Integer,
    Binary,
}

impl VarKind {
    pub fn is_integral(self) -> bool {
        !matches!(self, VarKind::Continuous)
    }
}

/// A decision variable. `None` bounds are infinite.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variable {
    pub id: VarId,
    pub name: String,
    pub kind: VarKind,
    #[serde(with = "serde_opt_rat")]
    pub lower: Option<Rat>,
    #[serde(with = "serde_opt_rat")]
    pub upper: Option<Rat>,
}

impl Variable {
    /// Width `u - l` when both bounds are finite.
    pub fn width(&self) -> Option<Rat> {
        Some(self.upper.as_ref()? - self.lower.as_ref()?)
    }
}

/// Where a constraint came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Parsed,
    Binarization,
    Flattening,
    Cut,
}

/// `lower <= body <= upper`; at least one side finite.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Constraint {
    pub name: Option<String>,
    pub body: Expr,
    #[serde(with = "serde_opt_rat")]
    pub lower: Option<Rat>,
    #[serde(with = "serde_opt_rat")]
    pub upper: Option<Rat>,
    pub origin: Origin,
}

impl Constraint {
    pub fn new(body: Expr, lower: Option<Rat>, upper: Option<Rat>, origin: Origin) -> Constraint {
        Constraint { name: None, body, lower, upper, origin }
    }

    pub fn equal(body: Expr, value: Rat, origin: Origin) -> Constraint {
        Constraint::new(body, Some(value.clone()), Some(value), origin)
    }

    /// The constraint as a conjunction of comparisons (an equality when both sides coincide).
    pub fn to_formula(&self) -> Formula {
        match (&self.lower, &self.upper) {
            (Some(l), Some(u)) if l == u => Formula::atom(self.body.clone(), Cmp::Eq, l.clone()),
            (Some(l), Some(u)) => Formula::And(vec![
                Formula::atom(self.body.clone(), Cmp::Ge, l.clone()),
                Formula::atom(self.body.clone(), Cmp::Le, u.clone()),
            ]),
            (Some(l), None) => Formula::atom(self.body.clone(), Cmp::Ge, l.clone()),
            (None, Some(u)) => Formula::atom(self.body.clone(), Cmp::Le, u.clone()),
            (None, None) => Formula::And(Vec::new()),
        }
    }
}

/// An arbitrary logical constraint (disjunctions added by flattening, for example).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SideConstraint {
    pub formula: Formula,
    pub origin: Origin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Objective {
    pub sense: Sense,
    pub body: Expr,
    #[serde(with = "serde_rat")]
    pub constant: Rat,
    /// Set by [`Model::normalize_to_min`] when a maximization was turned into a
    /// minimization; reported optima must be negated back.
    #[serde(default)]
    pub negated: bool,
}

impl Objective {
    pub fn minimize(body: Expr) -> Objective {
        Objective { sense: Sense::Minimize, body, constant: Rat::zero(), negated: false }
    }

    pub fn maximize(body: Expr) -> Objective {
        Objective { sense: Sense::Maximize, body, constant: Rat::zero(), negated: false }
    }

    /// `body + constant` as one tree.
    pub fn full_expr(&self) -> Expr {
        if self.constant.is_zero() {
            self.body.clone()
        } else {
            Expr::sum([self.body.clone(), Expr::Const(self.constant.clone())])
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("duplicate variable name {0:?}")]
    DuplicateName(String),
    #[error("variable {0:?} has lower bound above upper bound")]
    InvertedBounds(String),
    #[error("binary variable {0:?} must have bounds [0, 1]")]
    BinaryBounds(String),
    #[error("variable {0:?} has id {1} but sits at position {2}")]
    MisplacedId(String, usize, usize),
    #[error("expression references undeclared variable {0}")]
    UnknownVariable(VarId),
    #[error("constraint {0} has no finite bound")]
    VacuousConstraint(usize),
    #[error("n-ary node with fewer than two children")]
    BadArity,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Model {
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    #[serde(default)]
    pub side_constraints: Vec<SideConstraint>,
    pub objective: Objective,
}

impl Model {
    pub fn new(objective: Objective) -> Model {
        Model { variables: Vec::new(), constraints: Vec::new(), side_constraints: Vec::new(), objective }
    }

    /// Append a variable. Binary variables get bounds `[0, 1]` regardless of the arguments.
    pub fn add_variable(&mut self, name: impl Into<String>, kind: VarKind, lower: Option<Rat>, upper: Option<Rat>) -> VarId {
        let id = VarId(self.variables.len());
        let (lower, upper) = match kind {
            VarKind::Binary => (Some(Rat::zero()), Some(Rat::one())),
            _ => (lower, upper),
        };
        self.variables.push(Variable { id, name: name.into(), kind, lower, upper });
        id
    }

    pub fn add_constraint(&mut self, c: Constraint) {
        self.constraints.push(c);
    }

    pub fn var(&self, id: VarId) -> &Variable {
        &self.variables[id.0]
    }

    pub fn find_var(&self, name: &str) -> Option<VarId> {
        self.variables.iter().find(|v| v.name == name).map(|v| v.id)
    }

    /// A variable name not used in the model, derived from `base`.
    pub fn fresh_name(&self, base: &str) -> String {
        let taken: HashSet<&str> = self.variables.iter().map(|v| v.name.as_str()).collect();
        if !taken.contains(base) {
            return base.to_string();
        }
        (1..).map(|i| format!("{base}_{i}")).find(|n| !taken.contains(n.as_str())).unwrap()
    }

    pub fn integer_vars(&self) -> impl Iterator<Item = &Variable> {
        self.variables.iter().filter(|v| v.kind.is_integral())
    }

    pub fn has_integer_vars(&self) -> bool {
        self.integer_vars().next().is_some()
    }

    pub fn contains_exp(&self) -> bool {
        self.all_exprs().any(Expr::contains_exp)
    }

    /// Every expression tree in the model (objective, constraint bodies, side constraints).
    pub fn all_exprs(&self) -> impl Iterator<Item = &Expr> {
        std::iter::once(&self.objective.body)
            .chain(self.constraints.iter().map(|c| &c.body))
            .chain(self.side_constraints.iter().flat_map(|s| s.formula.exprs()))
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let mut names = HashSet::new();
        for (pos, v) in self.variables.iter().enumerate() {
            if v.id.0 != pos {
                return Err(ModelError::MisplacedId(v.name.clone(), v.id.0, pos));
            }
            if !names.insert(v.name.as_str()) {
                return Err(ModelError::DuplicateName(v.name.clone()));
            }
            if let (Some(l), Some(u)) = (&v.lower, &v.upper) {
                if l > u {
                    return Err(ModelError::InvertedBounds(v.name.clone()));
                }
            }
            if v.kind == VarKind::Binary && (v.lower != Some(Rat::zero()) || v.upper != Some(Rat::one())) {
                return Err(ModelError::BinaryBounds(v.name.clone()));
            }
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if c.lower.is_none() && c.upper.is_none() {
                return Err(ModelError::VacuousConstraint(i));
            }
        }
        for e in self.all_exprs() {
            let mut err = None;
            e.walk(&mut |node| match node {
                Expr::Var(id) if id.0 >= self.variables.len() => err = Some(ModelError::UnknownVariable(*id)),
                Expr::Sum(cs) | Expr::Product(cs) if cs.len() < 2 => err = Some(ModelError::BadArity),
                _ => {}
            });
            if let Some(e) = err {
                return Err(e);
            }
        }
        Ok(())
    }

    /// Turn a maximization into the equivalent minimization of the negated objective.
    /// Idempotent; the `negated` flag records that reported optima must be flipped back.
    pub fn normalize_to_min(&self) -> Model {
        let mut m = self.clone();
        if m.objective.sense == Sense::Maximize {
            m.objective = Objective {
                sense: Sense::Minimize,
                body: Expr::negate(self.objective.body.clone()),
                constant: -self.objective.constant.clone(),
                negated: !self.objective.negated,
            };
        }
        m
    }

    /// Exact objective value (including the constant) under `a`.
    pub fn objective_value(&self, a: &Assignment) -> Result<Rat, EvalError> {
        Ok(self.objective.body.eval_with(&a.lookup())? + &self.objective.constant)
    }

    /// Integer/Binary variables whose value in `a` is not an integer, ordered by id.
    /// Variables missing from `a` are skipped.
    pub fn violated_integrality(&self, a: &Assignment) -> Vec<(VarId, Rat)> {
        self.integer_vars()
            .filter_map(|v| a.get(v.id).filter(|val| !val.is_integer()).map(|val| (v.id, val.clone())))
            .collect()
    }

    /// True iff every bound, constraint and side constraint holds within `tol`
    /// and every integrality requirement holds exactly.
    pub fn check_feasible_point(&self, a: &Assignment, tol: &Rat) -> Result<bool, EvalError> {
        let lookup = a.lookup();
        for v in &self.variables {
            let val = a.get(v.id).ok_or(EvalError::MissingValue(v.id))?;
            if v.kind.is_integral() && !val.is_integer() {
                return Ok(false);
            }
            if v.lower.as_ref().is_some_and(|l| val < &(l - tol)) || v.upper.as_ref().is_some_and(|u| val > &(u + tol)) {
                return Ok(false);
            }
        }
        for c in &self.constraints {
            let val = c.body.eval_with(&lookup)?;
            if c.lower.as_ref().is_some_and(|l| val < l - tol) || c.upper.as_ref().is_some_and(|u| val > u + tol) {
                return Ok(false);
            }
        }
        for s in &self.side_constraints {
            if !s.formula.holds(&lookup, tol)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// JSON debug form; [`Model::from_debug_text`] reads it back unchanged.
    pub fn to_debug_text(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serialization cannot fail")
    }

    pub fn from_debug_text(text: &str) -> Result<Model, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// Exact values for (some of) a model's variables.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Assignment(BTreeMap<VarId, Rat>);

impl Assignment {
    pub fn new() -> Assignment {
        Assignment(BTreeMap::new())
    }

    pub fn insert(&mut self, id: VarId, value: Rat) {
        self.0.insert(id, value);
    }

    pub fn get(&self, id: VarId) -> Option<&Rat> {
        self.0.get(&id)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (VarId, &Rat)> {
        self.0.iter().map(|(k, v)| (*k, v))
    }

    /// Keep only ids below `n`.
    pub fn truncated(&self, n: usize) -> Assignment {
        Assignment(self.0.iter().filter(|(k, _)| k.0 < n).map(|(k, v)| (*k, v.clone())).collect())
    }

    pub fn lookup(&self) -> impl Fn(VarId) -> Option<Rat> + '_ {
        move |id| self.0.get(&id).cloned()
    }
}

impl FromIterator<(VarId, Rat)> for Assignment {
    fn from_iter<T: IntoIterator<Item = (VarId, Rat)>>(iter: T) -> Self {
        Assignment(iter.into_iter().collect())
    }
}

impl Serialize for Assignment {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in &self.0 {
            map.serialize_entry(&k.0.to_string(), &crate::rat::to_text(v))?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for Assignment {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = BTreeMap::<String, String>::deserialize(d)?;
        raw.into_iter()
            .map(|(k, v)| {
                let id = k.parse().map_err(serde::de::Error::custom)?;
                let val = crate::rat::parse_rat(&v).map_err(serde::de::Error::custom)?;
                Ok((VarId(id), val))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{frac, int};

    fn assign(pairs: &[(usize, Rat)]) -> Assignment {
        pairs.iter().map(|(i, v)| (VarId(*i), v.clone())).collect()
    }

    #[test]
    fn eval_examples() {
        let (x, y) = (VarId(0), VarId(1));
        let e = Expr::sum([Expr::var(x), Expr::product([Expr::constant(int(2)), Expr::var(y)])]);
        let a = assign(&[(0, int(1)), (1, frac(3, 2))]);
        assert_eq!(e.eval_with(&a.lookup()).unwrap(), int(4));

        let sq = Expr::power(Expr::var(x), Expr::constant(int(2)));
        assert_eq!(sq.eval_with(&assign(&[(0, frac(-3, 2))]).lookup()).unwrap(), frac(9, 4));

        let inv = Expr::divide(Expr::constant(int(1)), Expr::var(x));
        assert_eq!(inv.eval_with(&assign(&[(0, int(0))]).lookup()), Err(EvalError::DivisionByZero));

        let root = Expr::power(Expr::var(x), Expr::constant(frac(1, 2)));
        assert!(matches!(root.eval_with(&assign(&[(0, int(4))]).lookup()), Err(EvalError::NonRationalValue(_))));
        assert!(matches!(Expr::exp(Expr::var(x)).eval_with(&assign(&[(0, int(0))]).lookup()), Err(EvalError::NonRationalValue(_))));
    }

    fn three_vars() -> Model {
        let mut m = Model::new(Objective::minimize(Expr::var(VarId(0))));
        m.add_variable("x", VarKind::Integer, Some(int(0)), Some(int(10)));
        m.add_variable("b", VarKind::Binary, None, None);
        m.add_variable("c", VarKind::Continuous, None, None);
        m
    }

    #[test]
    fn violated_integrality_examples() {
        let m = three_vars();
        assert_eq!(m.violated_integrality(&assign(&[(0, frac(5, 2))])), vec![(VarId(0), frac(5, 2))]);
        assert!(m.violated_integrality(&assign(&[(0, int(-3))])).is_empty());
        let a = assign(&[(0, frac(12, 5)), (1, frac(1, 2)), (2, frac(1, 3))]);
        assert_eq!(m.violated_integrality(&a), vec![(VarId(0), frac(12, 5)), (VarId(1), frac(1, 2))]);
    }

    #[test]
    fn feasible_point_examples() {
        let mut m = Model::new(Objective::minimize(Expr::var(VarId(0))));
        let x = m.add_variable("x", VarKind::Continuous, None, None);
        m.add_constraint(Constraint::new(Expr::var(x), Some(int(3)), None, Origin::Parsed));
        assert!(m.check_feasible_point(&assign(&[(0, int(3))]), &int(0)).unwrap());
        assert!(!m.check_feasible_point(&assign(&[(0, frac(2999, 1000))]), &int(0)).unwrap());
        assert!(m.check_feasible_point(&assign(&[(0, frac(2999, 1000))]), &frac(1, 1000)).unwrap());

        let mut mi = Model::new(Objective::minimize(Expr::var(VarId(0))));
        mi.add_variable("x", VarKind::Integer, None, None);
        assert!(!mi.check_feasible_point(&assign(&[(0, frac(5, 2))]), &int(100)).unwrap());
    }

    #[test]
    fn normalize_examples() {
        let mut m = Model::new(Objective::maximize(Expr::var(VarId(0))));
        m.add_variable("x", VarKind::Continuous, None, Some(int(5)));
        let n = m.normalize_to_min();
        assert_eq!(n.objective.sense, Sense::Minimize);
        assert!(n.objective.negated);
        assert_eq!(n.objective.body, Expr::negate(Expr::var(VarId(0))));
        assert_eq!(n.normalize_to_min(), n);

        let mut mn = Model::new(Objective::minimize(Expr::var(VarId(0))));
        mn.add_variable("x", VarKind::Continuous, None, None);
        assert_eq!(mn.normalize_to_min(), mn);
    }

    #[test]
    fn validation_catches_broken_models() {
        let mut m = three_vars();
        assert!(m.validate().is_ok());
        m.variables[1].upper = Some(int(2));
        assert_eq!(m.validate(), Err(ModelError::BinaryBounds("b".into())));

        let mut m = three_vars();
        m.objective.body = Expr::var(VarId(7));
        assert_eq!(m.validate(), Err(ModelError::UnknownVariable(VarId(7))));

        let mut m = three_vars();
        m.variables[2].name = "x".into();
        assert_eq!(m.validate(), Err(ModelError::DuplicateName("x".into())));
    }

    #[test]
    fn debug_text_round_trip() {
        let mut m = three_vars();
        m.add_constraint(Constraint::new(
            Expr::sum([Expr::var(VarId(0)), Expr::power(Expr::var(VarId(2)), Expr::constant(int(2)))]),
            Some(frac(-1, 3)),
            None,
            Origin::Parsed,
        ));
        m.side_constraints.push(SideConstraint {
            formula: Formula::Or(vec![Formula::var_eq(VarId(1), int(0)), Formula::var_eq(VarId(1), int(1))]),
            origin: Origin::Flattening,
        });
        let back = Model::from_debug_text(&m.to_debug_text()).unwrap();
        assert_eq!(back, m);
    }
}
