//! Brute-force reference solver for tiny models.
//!
//! Enumerates every integer combination and scans continuous variables on a uniform
//! grid. It relies only on the model's own evaluation code, so it can check the
//! solver-backed pipeline independently. Constraints are checked with a slack of
//! `grid · L` for a caller-supplied Lipschitz constant `L`; the slack is reported with
//! the result so the discretization error is visible.

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cr_opt::{Bracket, OptOutcome};
use crate::model::{Assignment, EvalError, Model, VarId};
use crate::rat::serde_rat;
use crate::Rat;

pub const MAX_INTEGER_COMBINATIONS: u64 = 1_000_000;
pub const MAX_CONTINUOUS_DIMS: usize = 2;
pub const MAX_GRID_STEPS: u64 = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("model too large for enumeration: {0}")]
    TooLarge(String),
    #[error("variable {0:?} is unbounded")]
    UnboundedVariable(String),
    #[error("model contains exp, which has no exact value")]
    ContainsExp,
    #[error("grid step must be positive")]
    BadGrid,
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleResult {
    pub outcome: OptOutcome,
    /// Constraint slack used at grid points.
    #[serde(with = "serde_rat")]
    pub tolerance: Rat,
    pub points: u64,
}

/// Minimize `model` by enumeration. `lipschitz` bounds how far a constraint body can
/// move per unit step of a continuous variable; `Rat::zero()` demands exact
/// feasibility at grid points.
pub fn brute_force(model: &Model, grid: &Rat, eps: &Rat, lipschitz: &Rat) -> Result<OracleResult, OracleError> {
    if !grid.is_positive() {
        return Err(OracleError::BadGrid);
    }
    if model.contains_exp() {
        return Err(OracleError::ContainsExp);
    }
    let m = model.normalize_to_min();
    let tolerance = grid * lipschitz;
    let Some(axes) = axes(&m, grid)? else {
        return Ok(OracleResult { outcome: OptOutcome::Infeasible, tolerance, points: 0 });
    };

    let mut best: Option<(Rat, Assignment)> = None;
    let mut points = 0u64;
    let mut idx = vec![0usize; axes.len()];
    'scan: loop {
        points += 1;
        let a: Assignment = axes.iter().zip(&idx).map(|((id, values), &k)| (*id, values[k].clone())).collect();
        if m.check_feasible_point(&a, &tolerance)? {
            let v = m.objective_value(&a)?;
            if best.as_ref().is_none_or(|(b, _)| &v < b) {
                best = Some((v, a));
            }
        }
        // mixed-radix increment
        for d in 0..idx.len() {
            idx[d] += 1;
            if idx[d] < axes[d].1.len() {
                continue 'scan;
            }
            idx[d] = 0;
        }
        break;
    }

    let outcome = match best {
        None => OptOutcome::Infeasible,
        Some((value, witness)) => OptOutcome::Optimal { bracket: Bracket { lo: &value - eps, hi: value.clone() }, value, witness },
    };
    let outcome = if m.objective.negated { outcome.negated() } else { outcome };
    Ok(OracleResult { outcome, tolerance, points })
}

/// Candidate values per variable; `None` when some variable has no admissible value.
/// A variable with its candidate values.
type Axis = (VarId, Vec<Rat>);

fn axes(m: &Model, grid: &Rat) -> Result<Option<Vec<Axis>>, OracleError> {
    let mut axes = Vec::with_capacity(m.variables.len());
    let mut combos = BigInt::from(1);
    let mut continuous = 0usize;
    for v in &m.variables {
        let (Some(l), Some(u)) = (&v.lower, &v.upper) else {
            return Err(OracleError::UnboundedVariable(v.name.clone()));
        };
        let values: Vec<Rat> = if v.kind.is_integral() {
            let (lo, hi) = (l.ceil().to_integer(), u.floor().to_integer());
            let width = if hi >= lo { &hi - &lo + 1 } else { BigInt::zero() };
            combos *= &width;
            if combos > BigInt::from(MAX_INTEGER_COMBINATIONS) {
                return Err(OracleError::TooLarge(format!("more than {MAX_INTEGER_COMBINATIONS} integer combinations")));
            }
            let n = width.to_u64().unwrap_or(0);
            (0..n).map(|k| Rat::from_integer(&lo + BigInt::from(k))).collect()
        } else {
            continuous += 1;
            if continuous > MAX_CONTINUOUS_DIMS {
                return Err(OracleError::TooLarge(format!("more than {MAX_CONTINUOUS_DIMS} continuous variables")));
            }
            let steps = ((u - l) / grid).floor().to_integer();
            if steps > BigInt::from(MAX_GRID_STEPS) {
                return Err(OracleError::TooLarge(format!("{} has {} grid steps", v.name, steps)));
            }
            let mut values: Vec<Rat> = (0..=steps.to_u64().unwrap_or(0)).map(|k| l + grid * Rat::from_integer(k.into())).collect();
            if values.last() != Some(u) && u >= l {
                values.push(u.clone());
            }
            values
        };
        if values.is_empty() {
            return Ok(None);
        }
        axes.push((v.id, values));
    }
    Ok(Some(axes))
}
