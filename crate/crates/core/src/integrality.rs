//! Integrality management by disjunctive cuts.
//!
//! Integer variables are declared `Real` and every feasibility check becomes a
//! repair loop: whenever the solver proposes a point where some integer variable
//! has a fractional value `v`, the cut `x ≤ ⌊v⌋ ∨ x ≥ ⌈v⌉` is asserted and the check
//! is repeated. Cuts exclude no integral point, so they are asserted permanently and
//! keep paying off across later objective probes.

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Formula, Model, VarId};
use crate::smt::{SatResult, SmtError, SmtSession};
use crate::Rat;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegralityMode {
    /// One cut per repair round, on the violated variable with the lowest id.
    OneByOne,
    /// One cut per violated variable per repair round.
    AllInOne,
    /// No cuts; integrality is the solver's business (Int sorts) or absent.
    Disabled,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CutStats {
    pub cuts_added: u64,
    pub repair_iterations: u64,
}

impl CutStats {
    pub fn absorb(&mut self, other: CutStats) {
        self.cuts_added += other.cuts_added;
        self.repair_iterations += other.repair_iterations;
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IntegralityError {
    #[error("value {0} is already integral")]
    IntegerValue(String),
}

/// `x ≤ ⌊v⌋ ∨ x ≥ ⌈v⌉` for a fractional `v`.
pub fn cut_for(x: VarId, v: &Rat) -> Result<Formula, IntegralityError> {
    if v.is_integer() {
        return Err(IntegralityError::IntegerValue(crate::rat::to_text(v)));
    }
    Ok(Formula::Or(vec![Formula::var_le(x, v.floor()), Formula::var_ge(x, v.ceil())]))
}

/// `10 · Σ (u − l)` over the integral variables, or `100000` if any is unbounded.
pub fn default_max_cut_rounds(model: &Model) -> u64 {
    const UNBOUNDED: u64 = 100_000;
    let mut total = BigInt::from(0);
    for v in model.integer_vars() {
        match v.width() {
            Some(w) => total += w.floor().to_integer(),
            None => return UNBOUNDED,
        }
    }
    (total * BigInt::from(10)).to_u64().unwrap_or(u64::MAX).max(1)
}

/// Check satisfiability while enforcing integrality of `model`'s integer variables.
///
/// Every `Sat` returned has no integrality violation. Runs out of rounds as
/// `Unknown("cut rounds exceeded")`.
pub fn integral_check_sat(
    s: &mut SmtSession,
    model: &Model,
    mode: IntegralityMode,
    max_cut_rounds: u64,
) -> Result<(SatResult, CutStats), SmtError> {
    let mut stats = CutStats::default();
    if mode == IntegralityMode::Disabled || !model.has_integer_vars() {
        return Ok((s.check_sat()?, stats));
    }
    loop {
        let a = match s.check_sat()? {
            SatResult::Sat(Some(a)) => a,
            SatResult::Sat(None) => {
                return Ok((SatResult::Unknown("model values unparseable under cut mode".into()), stats));
            }
            other => return Ok((other, stats)),
        };
        let violated = model.violated_integrality(&a);
        if violated.is_empty() {
            return Ok((SatResult::Sat(Some(a)), stats));
        }
        if stats.repair_iterations >= max_cut_rounds {
            return Ok((SatResult::Unknown("cut rounds exceeded".into()), stats));
        }
        stats.repair_iterations += 1;
        let chosen = match mode {
            IntegralityMode::OneByOne => &violated[..1],
            _ => &violated[..],
        };
        for (id, v) in chosen {
            let cut = cut_for(*id, v).expect("violations are fractional");
            s.assert_permanent(&cut)?;
            stats.cuts_added += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Expr, Objective, VarKind};
    use crate::rat::{frac, int};
    use proptest::prelude::*;

    #[test]
    fn cut_examples() {
        let x = VarId(0);
        let or = |a, b| Formula::Or(vec![Formula::var_le(x, int(a)), Formula::var_ge(x, int(b))]);
        assert_eq!(cut_for(x, &frac(12, 5)).unwrap(), or(2, 3));
        assert_eq!(cut_for(x, &frac(-1, 2)).unwrap(), or(-1, 0));
        assert_eq!(cut_for(x, &int(3)), Err(IntegralityError::IntegerValue("3".into())));
    }

    #[test]
    fn default_rounds() {
        let mut m = Model::new(Objective::minimize(Expr::var(VarId(0))));
        m.add_variable("x", VarKind::Integer, Some(int(0)), Some(int(7)));
        m.add_variable("b", VarKind::Binary, None, None);
        assert_eq!(default_max_cut_rounds(&m), 80);
        m.add_variable("y", VarKind::Integer, None, Some(int(3)));
        assert_eq!(default_max_cut_rounds(&m), 100_000);
    }

    proptest! {
        #[test]
        fn cuts_keep_integers_and_drop_the_trigger(n in -10_000i64..10_000, d in 2i64..50, k in -10_000i64..10_000) {
            let v = frac(n, d);
            prop_assume!(!v.is_integer());
            let cut = cut_for(VarId(0), &v).unwrap();
            let at = |r: Rat| move |_: VarId| Some(r.clone());
            prop_assert!(cut.holds(&at(int(k)), &int(0)).unwrap());
            prop_assert!(!cut.holds(&at(v.clone()), &int(0)).unwrap());
        }
    }
}
