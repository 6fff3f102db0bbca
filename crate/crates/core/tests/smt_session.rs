mod common;

use smtopt_core::model::{Cmp, Constraint, Expr, Formula, Model, Objective, Origin, VarId, VarKind};
use smtopt_core::rat::{frac, int};
use smtopt_core::smt::{SatResult, SmtError, SmtSession, Sort};

fn one_var(kind: VarKind) -> Model {
    let mut m = Model::new(Objective::minimize(Expr::var(VarId(0))));
    m.add_variable("x", kind, Some(int(-10)), Some(int(10)));
    m
}

#[test]
fn integer_sorts_follow_the_flag() {
    let m = one_var(VarKind::Integer);
    let s = SmtSession::open(&common::solver(), &m, false).unwrap();
    assert_eq!(s.sort(VarId(0)), Some(Sort::Real));
    let s = SmtSession::open(&common::solver(), &m, true).unwrap();
    assert_eq!(s.sort(VarId(0)), Some(Sort::Int));
}

#[test]
fn contradiction_is_unsat() {
    let mut s = SmtSession::open(&common::solver(), &one_var(VarKind::Continuous), false).unwrap();
    s.assert_formula(&Formula::And(vec![
        Formula::atom(Expr::var(VarId(0)), Cmp::Gt, int(0)),
        Formula::atom(Expr::var(VarId(0)), Cmp::Lt, int(0)),
    ]))
    .unwrap();
    assert_eq!(s.check_sat().unwrap(), SatResult::Unsat);
}

#[test]
fn rational_model_values_are_exact() {
    let mut s = SmtSession::open(&common::solver(), &one_var(VarKind::Continuous), false).unwrap();
    s.assert_formula(&Formula::var_eq(VarId(0), frac(1, 3))).unwrap();
    match s.check_sat().unwrap() {
        SatResult::Sat(Some(a)) => assert_eq!(a.get(VarId(0)), Some(&frac(1, 3))),
        other => panic!("expected sat, got {other:?}"),
    }
    s.assert_formula(&Formula::var_eq(VarId(0), int(0))).unwrap();
    assert_eq!(s.check_sat().unwrap(), SatResult::Unsat);
}

#[test]
fn algebraic_values_are_unparseable_but_sat() {
    let mut s = SmtSession::open(&common::solver(), &one_var(VarKind::Continuous), false).unwrap();
    let sq = Expr::power(Expr::var(VarId(0)), Expr::constant(int(2)));
    s.assert_formula(&Formula::atom(sq, Cmp::Eq, int(2))).unwrap();
    assert_eq!(s.check_sat().unwrap(), SatResult::Sat(None));
}

#[test]
fn push_pop_retracts_and_counts() {
    let mut s = SmtSession::open(&common::solver(), &one_var(VarKind::Continuous), false).unwrap();
    s.push().unwrap();
    s.assert_formula(&Formula::var_ge(VarId(0), int(100))).unwrap();
    assert_eq!(s.check_sat().unwrap(), SatResult::Unsat);
    s.pop().unwrap();
    assert!(matches!(s.check_sat().unwrap(), SatResult::Sat(Some(_))));
    assert_eq!(s.pop(), Err(SmtError::PopOnEmptyStack));

    for i in 0..100 {
        s.push().unwrap();
        s.assert_formula(&Formula::var_le(VarId(0), int(i % 7))).unwrap();
        s.check_sat().unwrap();
        assert_eq!(s.depth(), 1);
        s.pop().unwrap();
    }
    assert_eq!(s.depth(), 0);
}

#[test]
fn permanent_assertions_survive_pop() {
    let mut s = SmtSession::open(&common::solver(), &one_var(VarKind::Continuous), false).unwrap();
    s.push().unwrap();
    s.push().unwrap();
    s.assert_permanent(&Formula::var_ge(VarId(0), int(5))).unwrap();
    s.pop().unwrap();
    s.pop().unwrap();
    s.assert_formula(&Formula::var_le(VarId(0), int(4))).unwrap();
    assert_eq!(s.check_sat().unwrap(), SatResult::Unsat);
}

#[test]
fn sat_models_satisfy_the_model() {
    let mut m = Model::new(Objective::minimize(Expr::var(VarId(0))));
    let x = m.add_variable("x", VarKind::Continuous, Some(int(0)), Some(int(5)));
    let y = m.add_variable("y", VarKind::Continuous, Some(int(-2)), None);
    m.add_constraint(Constraint::new(
        Expr::sum([Expr::product([Expr::var(x), Expr::var(y)]), Expr::var(y)]),
        Some(frac(7, 3)),
        None,
        Origin::Parsed,
    ));
    let mut s = SmtSession::open(&common::solver(), &m, false).unwrap();
    match s.check_sat().unwrap() {
        SatResult::Sat(Some(a)) => assert!(m.check_feasible_point(&a, &int(0)).unwrap()),
        other => panic!("expected a parseable model, got {other:?}"),
    }
}

#[test]
fn incomplete_solver_reports_unknown_with_reason() {
    let mut s = SmtSession::open(&common::incomplete_solver(), &one_var(VarKind::Integer), true).unwrap();
    assert_eq!(s.check_sat().unwrap(), SatResult::Unknown("incomplete".into()));
}

#[test]
fn close_is_idempotent_and_does_not_hang() {
    let mut s = SmtSession::open(&common::solver(), &one_var(VarKind::Continuous), false).unwrap();
    s.check_sat().unwrap();
    s.close();
    s.close();
    assert!(!s.is_alive());
    assert!(matches!(s.check_sat(), Err(SmtError::SolverDied(_))));
}

#[test]
fn non_smt_program_fails_handshake() {
    let cfg = smtopt_core::smt::SolverConfig::for_command("true");
    let r = SmtSession::open(&cfg, &one_var(VarKind::Continuous), false);
    assert!(matches!(r, Err(SmtError::HandshakeFailure(_))), "{:?}", r.err());
}

#[test]
fn per_check_timeout_yields_unknown() {
    let mut cfg = common::solver();
    cfg.per_check_timeout_ms = Some(1);
    // x^3 + y^3 = z^3 over small positive integers is hard enough to outlast 1 ms
    let mut m = Model::new(Objective::minimize(Expr::var(VarId(0))));
    let vars: Vec<_> = ["x", "y", "z"]
        .iter()
        .map(|n| m.add_variable(*n, VarKind::Integer, Some(int(1)), Some(int(1_000_000))))
        .collect();
    let cube = |v: VarId| Expr::power(Expr::var(v), Expr::constant(int(3)));
    m.add_constraint(Constraint::equal(
        Expr::subtract(Expr::sum([cube(vars[0]), cube(vars[1])]), cube(vars[2])),
        int(0),
        Origin::Parsed,
    ));
    let mut s = SmtSession::open(&cfg, &m, true).unwrap();
    match s.check_sat().unwrap() {
        SatResult::Unknown(reason) => assert_eq!(reason, "timeout"),
        other => panic!("expected a timeout, got {other:?}"),
    }
}
