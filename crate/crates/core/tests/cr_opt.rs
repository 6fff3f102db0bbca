mod common;

use smtopt_core::cr_opt::{optimize, Accuracy, CrMethod, OptOutcome, OptParams, ProbeLog, SmtObjective};
use smtopt_core::integrality::{default_max_cut_rounds, IntegralityMode};
use smtopt_core::model::{Constraint, Expr, Model, Objective, Origin, VarId, VarKind};
use smtopt_core::rat::{frac, int};
use smtopt_core::smt::SmtSession;
use smtopt_core::Rat;

/// minimize (x − 7/3)² + y  s.t.  x·y ≥ 1, x ∈ {0..5}, y ≥ 0.
/// Optimum 11/18 at x = 2, y = 1/2.
fn mixed() -> Model {
    let (x, y) = (VarId(0), VarId(1));
    let shifted = Expr::subtract(Expr::var(x), Expr::constant(frac(7, 3)));
    let mut m = Model::new(Objective::minimize(Expr::sum([
        Expr::power(shifted, Expr::constant(int(2))),
        Expr::var(y),
    ])));
    m.add_variable("x", VarKind::Integer, Some(int(0)), Some(int(5)));
    m.add_variable("y", VarKind::Continuous, Some(int(0)), None);
    m.add_constraint(Constraint::new(Expr::product([Expr::var(x), Expr::var(y)]), Some(int(1)), None, Origin::Parsed));
    m
}

fn run(m: &Model, method: CrMethod, mode: IntegralityMode, eps: Rat) -> (OptOutcome, ProbeLog) {
    let int_sorts = mode == IntegralityMode::Disabled;
    let s = SmtSession::open(&common::solver(), m, int_sorts).unwrap();
    let mut fc = SmtObjective::new(s, m, mode, default_max_cut_rounds(m)).unwrap();
    let params = OptParams { accuracy: Accuracy::new(eps).unwrap(), ..OptParams::default() };
    let mut log = ProbeLog::default();
    let r = optimize(method, &mut fc, &params, &mut log);
    (r.outcome, log)
}

#[test]
fn every_method_and_mode_reaches_the_optimum() {
    let m = mixed();
    let eps = frac(1, 1000);
    let opt = frac(11, 18);
    for method in CrMethod::ALL {
        for mode in [IntegralityMode::OneByOne, IntegralityMode::AllInOne, IntegralityMode::Disabled] {
            let (outcome, log) = run(&m, method, mode, eps.clone());
            match outcome {
                OptOutcome::Optimal { value, witness, bracket } => {
                    assert!(value >= opt && &value - &opt <= eps, "{method:?}/{mode:?}: {value}");
                    assert!(bracket.lo < opt && opt <= bracket.hi);
                    assert!(m.check_feasible_point(&witness, &int(0)).unwrap());
                    assert_eq!(m.objective_value(&witness).unwrap(), value);
                }
                other => panic!("{method:?}/{mode:?}: {other:?}"),
            }
            assert!(!log.records.is_empty());
        }
    }
}

#[test]
fn infeasible_model_is_reported() {
    let mut m = mixed();
    m.add_constraint(Constraint::new(Expr::var(VarId(1)), None, Some(frac(1, 10)), Origin::Parsed));
    // x·y ≥ 1 with y ≤ 1/10 needs x ≥ 10 > 5
    for method in CrMethod::ALL {
        assert_eq!(run(&m, method, IntegralityMode::OneByOne, frac(1, 100)).0, OptOutcome::Infeasible);
    }
}

#[test]
fn maximization_is_reported_in_the_original_sense() {
    let mut m = Model::new(Objective::maximize(Expr::var(VarId(0))));
    m.add_variable("x", VarKind::Integer, Some(int(-3)), Some(frac(13, 2)));
    let m = m.normalize_to_min();
    let (outcome, _) = run(&m, CrMethod::Hybrid, IntegralityMode::OneByOne, frac(1, 1000));
    assert_eq!(outcome.negated().value(), Some(&int(6)));
}
