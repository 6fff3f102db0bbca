//! Mixed-integer non-linear optimization through SMT feasibility checking.
//!
//! A model (parsed from OSiL or MPS) is minimized to a fixed absolute accuracy by
//! repeatedly asking an external SMT-LIB 2.0 solver whether the objective can be
//! pushed below a bound. The work is organized in layers:
//!
//! * [`preprocess`]: binarization and flattening of integer variables,
//! * [`integrality`]: disjunctive-cut repair loops around each feasibility check,
//! * [`cr_opt`]: naive descent, unbounded binary search and the hybrid of both,
//! * [`smt`]: the incremental solver conversation itself.
//!
//! A choice for every layer is a [`portfolio::FeatureVector`]; the [`portfolio`]
//! runs many of them side by side and keeps the first definitive answer.
//!
//! All bookkeeping is done in exact rationals ([`Rat`]). Expression evaluation is
//! generic over [`Scalar`], so the same trees can also be evaluated in `f64`.

pub mod cr_opt;
pub mod integrality;
pub mod model;
pub mod mps;
pub mod oracle;
pub mod osil;
pub mod portfolio;
pub mod preprocess;
pub mod rat;
pub mod report;
pub mod scalar;
pub mod smt;

pub use scalar::Scalar;

/// Arbitrary-precision exact rational. Always in lowest terms with a positive denominator.
pub type Rat = num_rational::BigRational;

/// Expression tree over exact rationals.
pub type Expr = model::Expr;

/// Values of model variables, keyed by variable id.
pub type Assignment = model::Assignment;

pub use model::{Model, ProblemClass, VarId, VarKind, Variable};
