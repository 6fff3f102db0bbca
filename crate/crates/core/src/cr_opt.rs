//! Continuous relaxation optimization: minimizing the objective to an absolute
//! accuracy `ε` through a sequence of feasibility probes `obj ≤ bound`.
//!
//! Three strategies share one probing interface ([`Feasibility`]):
//!
//! * **naive**: after each feasible point with objective `v`, permanently assert
//!   `obj ≤ v − ε` until the solver says unsat;
//! * **unbounded binary search**: bracket the optimum by exponentially growing steps
//!   below the first feasible value, then bisect the bracket down to width `ε`;
//! * **hybrid**: binary search plus an emptiness probe `obj ≤ hi − ε` after every
//!   new witnessed upper value, which stops early on isolated optima.
//!
//! Probes that may need retracting are wrapped in `push`/`pop`.

use std::time::Instant;

use num_traits::{One, Signed};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::integrality::{integral_check_sat, CutStats, IntegralityMode};
use crate::model::{Assignment, Cmp, Expr, Formula, Model, VarId};
use crate::rat::{serde_rat, to_text};
use crate::smt::{SatResult, SmtError, SmtSession, Sort};
use crate::Rat;

pub const DEFAULT_DOUBLING_CAP: u32 = 64;
pub const DEFAULT_MAX_ITERS: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("accuracy must be positive, got {0}")]
pub struct AccuracyError(String);

/// Absolute accuracy `ε > 0`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Accuracy(#[serde(with = "serde_rat")] Rat);

impl Accuracy {
    pub fn new(eps: Rat) -> Result<Accuracy, AccuracyError> {
        if eps.is_positive() {
            Ok(Accuracy(eps))
        } else {
            Err(AccuracyError(to_text(&eps)))
        }
    }

    pub fn value(&self) -> &Rat {
        &self.0
    }
}

impl Default for Accuracy {
    fn default() -> Self {
        Accuracy(crate::rat::frac(1, 1000))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrMethod {
    Naive,
    Ubs,
    Hybrid,
}

impl CrMethod {
    pub const ALL: [CrMethod; 3] = [CrMethod::Naive, CrMethod::Ubs, CrMethod::Hybrid];

    pub fn label(self) -> &'static str {
        match self {
            CrMethod::Naive => "naive",
            CrMethod::Ubs => "ubs",
            CrMethod::Hybrid => "hybrid",
        }
    }
}

/// `lo < f* ≤ hi`: no feasible objective value `≤ lo` exists, `hi` is feasible.
///
/// After [`OptOutcome::negated`] (reporting a maximization) the roles swap:
/// `lo` is the witnessed value and `hi` the proven bound.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bracket {
    #[serde(with = "serde_rat")]
    pub lo: Rat,
    #[serde(with = "serde_rat")]
    pub hi: Rat,
}

/// A feasible point and its objective value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Incumbent {
    #[serde(with = "serde_rat")]
    pub value: Rat,
    pub witness: Assignment,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Below,
    Above,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum OptOutcome {
    /// `value` is within `ε` of the optimum; `witness` is the best parsed feasible point
    /// (its objective may sit above `value` when later probes had unparseable models).
    Optimal {
        #[serde(with = "serde_rat")]
        value: Rat,
        witness: Assignment,
        bracket: Bracket,
    },
    Infeasible,
    Unknown {
        reason: String,
        best: Option<Incumbent>,
    },
    /// The objective kept improving past the doubling cap.
    BoundExceeded {
        direction: Direction,
        best: Option<Incumbent>,
    },
}

impl OptOutcome {
    pub fn is_definitive(&self) -> bool {
        matches!(self, OptOutcome::Optimal { .. } | OptOutcome::Infeasible)
    }

    pub fn value(&self) -> Option<&Rat> {
        match self {
            OptOutcome::Optimal { value, .. } => Some(value),
            _ => None,
        }
    }

    pub fn unknown(reason: impl Into<String>) -> OptOutcome {
        OptOutcome::Unknown { reason: reason.into(), best: None }
    }

    /// Flip the sign of every objective quantity (for maximization problems that were
    /// minimized as their negation).
    pub fn negated(self) -> OptOutcome {
        let flip = |best: Option<Incumbent>| best.map(|b| Incumbent { value: -b.value, witness: b.witness });
        match self {
            OptOutcome::Optimal { value, witness, bracket } => OptOutcome::Optimal {
                value: -value,
                witness,
                bracket: Bracket { lo: -bracket.hi, hi: -bracket.lo },
            },
            OptOutcome::Infeasible => OptOutcome::Infeasible,
            OptOutcome::Unknown { reason, best } => OptOutcome::Unknown { reason, best: flip(best) },
            OptOutcome::BoundExceeded { direction, best } => OptOutcome::BoundExceeded {
                direction: match direction {
                    Direction::Below => Direction::Above,
                    Direction::Above => Direction::Below,
                },
                best: flip(best),
            },
        }
    }
}

/// Answer to one feasibility probe.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    /// Feasible; `None` when the solver's model could not be read exactly.
    Sat(Option<Incumbent>),
    Unsat,
    Unknown(String),
}

/// What the optimizers need from the layers below.
pub trait Feasibility {
    fn push(&mut self) -> Result<(), SmtError>;
    fn pop(&mut self) -> Result<(), SmtError>;
    /// Assert `obj ≤ bound` in the current scope.
    fn bound_objective(&mut self, bound: &Rat) -> Result<(), SmtError>;
    fn check(&mut self) -> Result<Verdict, SmtError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Initial,
    Descent,
    Doubling,
    Bisection,
    Emptiness,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictKind {
    Sat,
    SatUnparseable,
    Unsat,
    Unknown,
}

/// One feasibility probe, as logged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeRecord {
    pub phase: Phase,
    #[serde(with = "crate::rat::serde_opt_rat")]
    pub bound: Option<Rat>,
    pub verdict: VerdictKind,
    pub elapsed_ms: f64,
}

/// Instrumentation hook; every method has a no-op default.
pub trait Observer {
    fn probe(&mut self, _record: &ProbeRecord) {}
    /// Called whenever the bracket changes once a lower bound is known.
    fn bracket(&mut self, _lo: &Rat, _hi: &Rat) {}
}

impl Observer for () {}

/// Collects every probe record.
#[derive(Debug, Clone, Default)]
pub struct ProbeLog {
    pub records: Vec<ProbeRecord>,
}

impl Observer for ProbeLog {
    fn probe(&mut self, record: &ProbeRecord) {
        self.records.push(record.clone());
    }
}

#[derive(Debug, Clone)]
pub struct OptParams {
    pub accuracy: Accuracy,
    pub max_iters: u64,
    pub doubling_cap: u32,
}

impl Default for OptParams {
    fn default() -> Self {
        OptParams { accuracy: Accuracy::default(), max_iters: DEFAULT_MAX_ITERS, doubling_cap: DEFAULT_DOUBLING_CAP }
    }
}

fn error_reason(e: &SmtError) -> String {
    match e {
        SmtError::Timeout => "timeout".into(),
        SmtError::Cancelled => "cancelled".into(),
        SmtError::SolverDied(msg) if msg.is_empty() => "solver died".into(),
        SmtError::SolverDied(msg) => format!("solver died: {msg}"),
        other => other.to_string(),
    }
}

struct Driver<'a, F: Feasibility, O: Observer> {
    fc: &'a mut F,
    obs: &'a mut O,
    eps: Rat,
    probes: u64,
}

impl<F: Feasibility, O: Observer> Driver<'_, F, O> {
    /// Probe `obj ≤ bound` (or plain feasibility without a bound). Scoped probes are
    /// retracted afterwards; unscoped bounds stay asserted.
    fn probe(&mut self, phase: Phase, bound: Option<&Rat>, scoped: bool) -> Verdict {
        let start = Instant::now();
        self.probes += 1;
        let verdict = self.run_probe(bound, scoped).unwrap_or_else(|e| Verdict::Unknown(error_reason(&e)));
        let kind = match &verdict {
            Verdict::Sat(Some(_)) => VerdictKind::Sat,
            Verdict::Sat(None) => VerdictKind::SatUnparseable,
            Verdict::Unsat => VerdictKind::Unsat,
            Verdict::Unknown(_) => VerdictKind::Unknown,
        };
        self.obs.probe(&ProbeRecord {
            phase,
            bound: bound.cloned(),
            verdict: kind,
            elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        });
        verdict
    }

    fn run_probe(&mut self, bound: Option<&Rat>, scoped: bool) -> Result<Verdict, SmtError> {
        if scoped {
            self.fc.push()?;
        }
        if let Some(b) = bound {
            self.fc.bound_objective(b)?;
        }
        let v = self.fc.check()?;
        if scoped {
            self.fc.pop()?;
        }
        Ok(v)
    }
}

/// Result of one optimizer run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OptRun {
    pub outcome: OptOutcome,
    pub probes: u64,
}

pub fn optimize(method: CrMethod, fc: &mut impl Feasibility, params: &OptParams, obs: &mut impl Observer) -> OptRun {
    match method {
        CrMethod::Naive => optimize_naive(fc, params, obs),
        CrMethod::Ubs => optimize_ubs(fc, params, obs),
        CrMethod::Hybrid => optimize_hybrid(fc, params, obs),
    }
}

/// Naive descent: tighten `obj ≤ v − ε` after every feasible value `v`.
pub fn optimize_naive(fc: &mut impl Feasibility, params: &OptParams, obs: &mut impl Observer) -> OptRun {
    let mut d = Driver { fc, obs, eps: params.accuracy.value().clone(), probes: 0 };
    let mut best: Option<Incumbent> = None;
    let outcome = loop {
        if d.probes >= params.max_iters {
            break OptOutcome::Unknown { reason: "iterations exceeded".into(), best };
        }
        let bound = best.as_ref().map(|b| &b.value - &d.eps);
        let phase = if bound.is_some() { Phase::Descent } else { Phase::Initial };
        match d.probe(phase, bound.as_ref(), false) {
            Verdict::Sat(Some(inc)) => best = Some(inc),
            Verdict::Sat(None) => break OptOutcome::Unknown { reason: "naive requires model values".into(), best },
            Verdict::Unsat => {
                break match best {
                    Some(b) => OptOutcome::Optimal {
                        bracket: Bracket { lo: &b.value - &d.eps, hi: b.value.clone() },
                        value: b.value,
                        witness: b.witness,
                    },
                    None => OptOutcome::Infeasible,
                }
            }
            Verdict::Unknown(reason) => break OptOutcome::Unknown { reason, best },
        }
    };
    OptRun { outcome, probes: d.probes }
}

pub fn optimize_ubs(fc: &mut impl Feasibility, params: &OptParams, obs: &mut impl Observer) -> OptRun {
    binary_search(fc, params, obs, false)
}

pub fn optimize_hybrid(fc: &mut impl Feasibility, params: &OptParams, obs: &mut impl Observer) -> OptRun {
    binary_search(fc, params, obs, true)
}

enum Step {
    Continue,
    Done(Box<OptOutcome>),
}

/// Search state shared by the bounds-search and bisection phases.
struct Search {
    hi: Rat,
    best: Incumbent,
}

impl Search {
    fn unknown(&self, reason: String) -> OptOutcome {
        OptOutcome::Unknown { reason, best: Some(self.best.clone()) }
    }

    fn optimal(&self, lo: Rat) -> OptOutcome {
        OptOutcome::Optimal { value: self.hi.clone(), witness: self.best.witness.clone(), bracket: Bracket { lo, hi: self.hi.clone() } }
    }

    /// Emptiness probe `obj ≤ hi − ε`: unsat proves `hi` is ε-optimal.
    fn emptiness<F: Feasibility, O: Observer>(&mut self, d: &mut Driver<'_, F, O>) -> Step {
        let bound = &self.hi - &d.eps;
        match d.probe(Phase::Emptiness, Some(&bound), true) {
            Verdict::Unsat => {
                d.obs.bracket(&bound, &self.hi);
                Step::Done(Box::new(self.optimal(bound)))
            }
            Verdict::Sat(Some(inc)) => {
                self.hi = inc.value.clone();
                self.best = inc;
                Step::Continue
            }
            Verdict::Sat(None) => {
                self.hi = bound;
                Step::Continue
            }
            Verdict::Unknown(reason) => Step::Done(Box::new(self.unknown(reason))),
        }
    }
}

fn binary_search(fc: &mut impl Feasibility, params: &OptParams, obs: &mut impl Observer, hybrid: bool) -> OptRun {
    let mut d = Driver { fc, obs, eps: params.accuracy.value().clone(), probes: 0 };
    let outcome = run_binary_search(&mut d, params, hybrid);
    OptRun { outcome, probes: d.probes }
}

fn run_binary_search<F: Feasibility, O: Observer>(d: &mut Driver<'_, F, O>, params: &OptParams, hybrid: bool) -> OptOutcome {
    let first = match d.probe(Phase::Initial, None, false) {
        Verdict::Sat(Some(inc)) => inc,
        Verdict::Sat(None) => return OptOutcome::unknown("initial model values unparseable"),
        Verdict::Unsat => return OptOutcome::Infeasible,
        Verdict::Unknown(reason) => return OptOutcome::unknown(reason),
    };
    let mut s = Search { hi: first.value.clone(), best: first };
    if hybrid {
        if let Step::Done(o) = s.emptiness(d) {
            return *o;
        }
    }

    // bounds search: step down by δ = max(ε, 1), doubling while still feasible
    let mut delta = d.eps.clone().max(Rat::one());
    let mut steps = 0u32;
    let mut lo = loop {
        if steps >= params.doubling_cap {
            return OptOutcome::BoundExceeded { direction: Direction::Below, best: Some(s.best) };
        }
        steps += 1;
        let bound = &s.hi - &delta;
        match d.probe(Phase::Doubling, Some(&bound), true) {
            Verdict::Unsat => break bound,
            Verdict::Sat(Some(inc)) => {
                s.hi = inc.value.clone();
                s.best = inc;
                if hybrid {
                    if let Step::Done(o) = s.emptiness(d) {
                        return *o;
                    }
                }
            }
            Verdict::Sat(None) => s.hi = bound,
            Verdict::Unknown(reason) => return s.unknown(reason),
        }
        delta *= Rat::from_integer(2.into());
    };
    d.obs.bracket(&lo, &s.hi);

    // bisection
    let two = Rat::from_integer(2.into());
    while &s.hi - &lo > d.eps {
        let mid = (&lo + &s.hi) / &two;
        match d.probe(Phase::Bisection, Some(&mid), true) {
            Verdict::Unsat => lo = mid,
            Verdict::Sat(Some(inc)) => {
                s.hi = inc.value.clone();
                s.best = inc;
                if hybrid {
                    d.obs.bracket(&lo, &s.hi);
                    if let Step::Done(o) = s.emptiness(d) {
                        return *o;
                    }
                }
            }
            Verdict::Sat(None) => s.hi = mid,
            Verdict::Unknown(reason) => return s.unknown(reason),
        }
        // the hybrid's emptiness probe may have pushed hi to (or below) lo + ε
        if s.hi <= lo {
            return s.unknown("inconsistent solver answers".into());
        }
        d.obs.bracket(&lo, &s.hi);
    }
    s.optimal(lo)
}

/// [`Feasibility`] over a live solver session: `obj` is a fresh variable tied to the
/// objective, and every check goes through [`integral_check_sat`].
pub struct SmtObjective<'m> {
    session: SmtSession,
    model: &'m Model,
    mode: IntegralityMode,
    max_cut_rounds: u64,
    obj: VarId,
    pub stats: CutStats,
}

impl<'m> SmtObjective<'m> {
    pub fn new(mut session: SmtSession, model: &'m Model, mode: IntegralityMode, max_cut_rounds: u64) -> Result<SmtObjective<'m>, SmtError> {
        let name = model.fresh_name("obj");
        let obj = session.declare(&name, Sort::Real)?;
        let link = Formula::atom(Expr::subtract(Expr::var(obj), model.objective.full_expr()), Cmp::Eq, Rat::default());
        session.assert_permanent(&link)?;
        Ok(SmtObjective { session, model, mode, max_cut_rounds, obj, stats: CutStats::default() })
    }

    pub fn session(&self) -> &SmtSession {
        &self.session
    }

    pub fn into_session(self) -> SmtSession {
        self.session
    }
}

impl Feasibility for SmtObjective<'_> {
    fn push(&mut self) -> Result<(), SmtError> {
        self.session.push()
    }

    fn pop(&mut self) -> Result<(), SmtError> {
        self.session.pop()
    }

    fn bound_objective(&mut self, bound: &Rat) -> Result<(), SmtError> {
        self.session.assert_formula(&Formula::var_le(self.obj, bound.clone()))
    }

    fn check(&mut self) -> Result<Verdict, SmtError> {
        let (result, stats) = integral_check_sat(&mut self.session, self.model, self.mode, self.max_cut_rounds)?;
        self.stats.absorb(stats);
        Ok(match result {
            SatResult::Sat(Some(a)) => match a.get(self.obj) {
                Some(v) => Verdict::Sat(Some(Incumbent { value: v.clone(), witness: a.truncated(self.model.variables.len()) })),
                None => Verdict::Sat(None),
            },
            SatResult::Sat(None) => Verdict::Sat(None),
            SatResult::Unsat => Verdict::Unsat,
            SatResult::Unknown(reason) => Verdict::Unknown(reason),
        })
    }
}
