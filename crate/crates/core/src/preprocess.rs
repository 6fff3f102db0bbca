//! Preprocessing: binarization of integer variables and static flattening of
//! integrality into disjunctions.
//!
//! * [`binarize`] writes each bounded integer `x ∈ [l, u]` as `x = l + Σ 2^(i-1)·b_i`
//!   with `q = 1 + ⌈log2(u − l)⌉` bits `b_i ∈ {0, 1}`, keeping `l ≤ x ≤ u`.
//! * [`flatten_binarized`] then replaces each bit's integrality by `(b = 0) ∨ (b = 1)`.
//! * [`flatten_naive`] excludes every open band `(i, i + 1)` of an unbinarized range
//!   directly; it is only practical for narrow ranges.

use num_bigint::BigInt;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::model::{Constraint, Expr, Formula, Model, Origin, SideConstraint, VarId, VarKind};
use crate::rat::ceil_log2;
use crate::Rat;

pub const DEFAULT_NAIVE_FLATTEN_CAP: u64 = 1024;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PreprocessError {
    #[error("integer variable {0:?} is unbounded")]
    UnboundedInteger(String),
    #[error("integer variable {0:?} has no integer in its range")]
    EmptyIntegerRange(String),
    #[error("integer variable {0:?} is not binarized (bounds must be [0, 1])")]
    NotBinarized(String),
    #[error("integer range width {0} exceeds the flattening cap {1}")]
    RangeTooWide(String, u64),
}

/// Bit decomposition of one original integer variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinEntry {
    pub var: VarId,
    pub lower: Rat,
    /// `b_1 … b_q`, least significant first. Empty when the variable was fixed.
    pub bits: Vec<VarId>,
}

impl BinEntry {
    /// `l + Σ 2^(i-1)·b_i` for the given bit values.
    pub fn decode(&self, bits: &[bool]) -> Rat {
        let mut value = self.lower.clone();
        let mut weight = BigInt::one();
        for &b in bits {
            if b {
                value += Rat::from_integer(weight.clone());
            }
            weight <<= 1;
        }
        value
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BinMap {
    pub entries: Vec<BinEntry>,
}

impl BinMap {
    pub fn entry(&self, var: VarId) -> Option<&BinEntry> {
        self.entries.iter().find(|e| e.var == var)
    }
}

/// Number of bits used for an integer range of width `u − l ≥ 1`.
pub fn bit_count(width: &BigInt) -> u64 {
    1 + ceil_log2(width)
}

/// Integer bounds `[⌈l⌉, ⌊u⌋]` of an integral variable.
fn integer_range(model: &Model, id: VarId) -> Result<(BigInt, BigInt), PreprocessError> {
    let v = model.var(id);
    let (Some(l), Some(u)) = (&v.lower, &v.upper) else {
        return Err(PreprocessError::UnboundedInteger(v.name.clone()));
    };
    let (l, u) = (l.ceil().to_integer(), u.floor().to_integer());
    if l > u {
        return Err(PreprocessError::EmptyIntegerRange(v.name.clone()));
    }
    Ok((l, u))
}

/// Replace every non-binary integer variable by a bit decomposition.
///
/// The original variable stays (as `Continuous`, with its tightened bounds) and is
/// tied to its bits by an equality constraint. Binary variables pass through as
/// their own single bit.
pub fn binarize(model: &Model) -> Result<(Model, BinMap), PreprocessError> {
    let mut out = model.clone();
    let mut map = BinMap::default();
    let targets: Vec<VarId> = model.variables.iter().filter(|v| v.kind == VarKind::Integer).map(|v| v.id).collect();
    for id in targets {
        let (l, u) = integer_range(model, id)?;
        let (lr, ur) = (Rat::from_integer(l.clone()), Rat::from_integer(u.clone()));
        let name = model.var(id).name.clone();
        {
            let v = &mut out.variables[id.0];
            v.kind = VarKind::Continuous;
            v.lower = Some(lr.clone());
            v.upper = Some(ur);
        }
        if l == u {
            out.add_constraint(Constraint::equal(Expr::var(id), lr.clone(), Origin::Binarization));
            map.entries.push(BinEntry { var: id, lower: lr, bits: Vec::new() });
            continue;
        }
        let q = bit_count(&(&u - &l));
        let mut bits = Vec::with_capacity(q as usize);
        let mut terms = Vec::with_capacity(q as usize);
        let mut weight = BigInt::one();
        for i in 1..=q {
            let bit_name = out.fresh_name(&format!("{name}_bit{i}"));
            let b = out.add_variable(bit_name, VarKind::Integer, Some(Rat::zero()), Some(Rat::one()));
            terms.push((b, Rat::from_integer(weight.clone())));
            bits.push(b);
            weight <<= 1;
        }
        out.add_constraint(Constraint::equal(
            Expr::subtract(Expr::var(id), Expr::linear(terms)),
            lr.clone(),
            Origin::Binarization,
        ));
        map.entries.push(BinEntry { var: id, lower: lr, bits });
    }
    Ok((out, map))
}

/// Replace the integrality of every 0/1 variable by the disjunction `(b = 0) ∨ (b = 1)`.
///
/// The result has no integral variables left.
pub fn flatten_binarized(model: &Model) -> Result<Model, PreprocessError> {
    let mut out = model.clone();
    for v in model.integer_vars() {
        if v.lower != Some(Rat::zero()) || v.upper != Some(Rat::one()) {
            return Err(PreprocessError::NotBinarized(v.name.clone()));
        }
    }
    for v in model.integer_vars() {
        out.side_constraints.push(SideConstraint {
            formula: Formula::Or(vec![Formula::var_eq(v.id, Rat::zero()), Formula::var_eq(v.id, Rat::one())]),
            origin: Origin::Flattening,
        });
        out.variables[v.id.0].kind = VarKind::Continuous;
    }
    Ok(out)
}

/// Exclude all non-integer values of each integral variable directly:
/// `(x ≥ l) ∧ ⋀_{l ≤ i ≤ u} (x ≤ i ∨ x ≥ i + 1) ∧ (x ≤ u)`.
///
/// Fails when a range is wider than `cap`.
pub fn flatten_naive(model: &Model, cap: u64) -> Result<Model, PreprocessError> {
    let mut out = model.clone();
    let targets: Vec<VarId> = model.integer_vars().map(|v| v.id).collect();
    for id in &targets {
        let (l, u) = integer_range(model, *id)?;
        let width = &u - &l;
        if width > BigInt::from(cap) {
            return Err(PreprocessError::RangeTooWide(width.to_string(), cap));
        }
    }
    for id in targets {
        let (l, u) = integer_range(model, id)?;
        let (lr, ur) = (Rat::from_integer(l.clone()), Rat::from_integer(u.clone()));
        let mut conjuncts = vec![Formula::var_ge(id, lr.clone())];
        let mut i = l.clone();
        while i <= u {
            let ir = Rat::from_integer(i.clone());
            conjuncts.push(Formula::Or(vec![Formula::var_le(id, ir.clone()), Formula::var_ge(id, ir + Rat::one())]));
            i += 1;
        }
        conjuncts.push(Formula::var_le(id, ur.clone()));
        out.side_constraints.push(SideConstraint { formula: Formula::And(conjuncts), origin: Origin::Flattening });
        let v = &mut out.variables[id.0];
        v.kind = VarKind::Continuous;
        v.lower = Some(lr);
        v.upper = Some(ur);
    }
    Ok(out)
}
