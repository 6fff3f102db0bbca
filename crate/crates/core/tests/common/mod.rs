#![allow(dead_code)]

use std::path::PathBuf;

use smtopt_core::smt::SolverConfig;

/// The solver used by integration tests: `$MINLP_SMT_SOLVER`, else `z3` from `PATH`.
pub fn solver() -> SolverConfig {
    if let Ok(cmd) = std::env::var("MINLP_SMT_SOLVER") {
        return SolverConfig::for_command(cmd);
    }
    let on_path = std::env::var_os("PATH")
        .map(|p| std::env::split_paths(&p).any(|dir| dir.join("z3").is_file()))
        .unwrap_or(false);
    assert!(on_path, "integration tests need an SMT solver: install z3 or set MINLP_SMT_SOLVER");
    SolverConfig::for_command("z3")
}

/// A responder that answers `unknown` to every `check-sat`.
pub fn incomplete_solver() -> SolverConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/incomplete_solver.sh");
    SolverConfig::for_command(path.to_string_lossy().into_owned())
}

/// A responder that stalls for 30 s on every `check-sat`.
pub fn slow_solver() -> SolverConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/slow_solver.sh");
    SolverConfig::for_command(path.to_string_lossy().into_owned())
}
