use std::path::PathBuf;
use std::process::{Command, Output};

use smtopt_core::cr_opt::OptOutcome;
use smtopt_core::portfolio::PortfolioResult;
use smtopt_core::rat::frac;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn solver() -> String {
    std::env::var("MINLP_SMT_SOLVER").unwrap_or_else(|_| "z3".into())
}

fn smtopt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_smtopt")).args(args).env_remove("RUST_LOG").output().expect("binary runs")
}

fn solve(file: &str, extra: &[&str]) -> Output {
    let path = fixture(file);
    let solver = solver();
    let mut args = vec![path.to_str().unwrap(), "--solver", &solver, "--timeout", "120"];
    args.extend_from_slice(extra);
    smtopt(&args)
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn tiny_minlp_prints_exact_and_decimal_optimum() {
    // (x - 3/2)² + y with x integer, x + y ≥ 5/2: optimum 3/4 at x = 2, y = 1/2
    let out = solve("tiny_minlp.osil", &["--accuracy", "0.001"]);
    let text = stdout(&out);
    assert_eq!(out.status.code(), Some(0), "{text}");
    assert!(text.contains("status: optimal"), "{text}");
    assert!(text.contains("objective: 0.750000 (exact 3/4)"), "{text}");
    assert!(text.contains("class: MINLP"), "{text}");
}

#[test]
fn mps_milp_through_linear_pipeline() {
    // max x + 2y with x + y ≤ 4.5, y - x ≤ 1, integers: (2, 2)
    let out = solve("milp.mps", &["--format", "mps"]);
    let text = stdout(&out);
    assert_eq!(out.status.code(), Some(0), "{text}");
    assert!(text.contains("(exact -6)"), "{text}");
    assert!(text.contains("class: ILP"), "{text}");
}

#[test]
fn contradictory_model_exits_one() {
    let out = solve("infeasible.mps", &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("infeasible"));
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(smtopt(&["--bogus"]).status.code(), Some(64));
    let path = fixture("tiny_minlp.osil");
    let p = path.to_str().unwrap();
    assert_eq!(smtopt(&[p, "--solver", "z3", "--accuracy", "0"]).status.code(), Some(64));
    assert_eq!(smtopt(&[p, "--solver", "z3", "--vectors", "nosuch_ubs"]).status.code(), Some(64));
    let out = Command::new(env!("CARGO_BIN_EXE_smtopt")).arg(p).env_remove("MINLP_SMT_SOLVER").output().unwrap();
    assert_eq!(out.status.code(), Some(64));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--solver"));
    assert_eq!(smtopt(&["--help"]).status.code(), Some(0));
}

#[test]
fn parse_errors_exit_65() {
    let dir = tempfile::tempdir().unwrap();
    let osil = dir.path().join("broken.osil");
    std::fs::write(&osil, "<osil><instanceData><variables numberOfVariables=\"1\">").unwrap();
    let mps = dir.path().join("broken.mps");
    std::fs::write(&mps, "ROWS\n N OBJ\nCOLUMNS\n X NOPE 1\nENDATA\n").unwrap();
    for f in [&osil, &mps] {
        let out = smtopt(&[f.to_str().unwrap(), "--solver", "z3"]);
        assert_eq!(out.status.code(), Some(65), "{}", f.display());
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn json_output_round_trips() {
    let out = solve("tiny_minlp.osil", &["--json", "--seq", "--vectors", "nobb"]);
    assert_eq!(out.status.code(), Some(0));
    let r = PortfolioResult::from_json(&stdout(&out)).expect("valid result json");
    assert_eq!(r.outcome.value(), Some(&frac(3, 4)));
    assert!(matches!(r.outcome, OptOutcome::Optimal { .. }));
    assert_eq!(r.winner.map(|v| v.label()).as_deref(), Some("nobb_naive"));
}

#[test]
fn logs_feed_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let logs = dir.path().to_str().unwrap();
    let out = solve("tiny_minlp.osil", &["--cross-check", "--vectors", "nobb,bin_flattening", "--log-dir", logs]);
    assert_eq!(out.status.code(), Some(0));

    let out = smtopt(&["report", logs]);
    let text = stdout(&out);
    assert_eq!(out.status.code(), Some(0));
    assert!(text.starts_with("benchmark"), "{text}");
    assert!(text.contains("nobb_ubs") && text.contains("bin_flattening_hybrid"), "{text}");
    assert!(text.lines().any(|l| l.starts_with("tiny_minlp")), "{text}");

    let csv = stdout(&smtopt(&["report", logs, "--csv"]));
    assert_eq!(csv.lines().next().unwrap().split(',').count(), 7, "{csv}");

    let empty = tempfile::tempdir().unwrap();
    assert_eq!(smtopt(&["report", empty.path().to_str().unwrap()]).status.code(), Some(65));
}

#[test]
fn hidden_oracle_agrees() {
    let path = fixture("tiny_minlp.osil");
    let out = smtopt(&["oracle", path.to_str().unwrap(), "--grid", "1/2"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("3/4"), "{}", stdout(&out));
}
