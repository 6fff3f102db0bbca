//! Incremental SMT-LIB 2.0 conversation with an external solver process.
//!
//! The solver runs as a child process; commands go to its stdin and a reader thread
//! forwards complete responses from its stdout. `:print-success` is enabled so every
//! command is acknowledged, which keeps the two sides in lock-step.

pub mod emit;
pub mod sexp;

use std::io::{BufRead, BufReader, Read, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use log::trace;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Assignment, Formula, Model, VarId};
use emit::{EmitError, EmitOptions, SymbolTable};
use sexp::Sexp;

const POLL: Duration = Duration::from_millis(20);
const HANDSHAKE_TIMEOUT: Duration = Duration::from_secs(20);
const CLOSE_GRACE: Duration = Duration::from_millis(300);
const STDERR_TAIL: usize = 4096;

/// How to start and talk to a solver.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub command: String,
    pub args: Vec<String>,
    /// `None` picks `ALL` when the solver accepts it, else `QF_NIRA`/`QF_NRA`.
    pub logic: Option<String>,
    pub per_check_timeout_ms: Option<u64>,
    /// Emit `(^ b k)` instead of unrolling integer powers.
    pub native_power: bool,
    pub unroll_cap: u32,
}

impl SolverConfig {
    /// Configuration with argument presets for well-known solvers (`z3 -in`, …).
    pub fn for_command(command: impl Into<String>) -> SolverConfig {
        let command = command.into();
        let base = std::path::Path::new(&command)
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let args: &[&str] = match base.as_str() {
            b if b.starts_with("z3") => &["-in"],
            b if b.starts_with("cvc5") || b.starts_with("cvc4") => &["--incremental", "--lang=smt2"],
            b if b.starts_with("yices") => &["--incremental"],
            _ => &[],
        };
        SolverConfig {
            command,
            args: args.iter().map(|s| s.to_string()).collect(),
            logic: None,
            per_check_timeout_ms: None,
            native_power: false,
            unroll_cap: emit::DEFAULT_UNROLL_CAP,
        }
    }

    pub fn with_args(mut self, args: Vec<String>) -> SolverConfig {
        self.args = args;
        self
    }

    pub fn emit_options(&self) -> EmitOptions {
        EmitOptions { native_power: self.native_power, unroll_cap: self.unroll_cap }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sort {
    Real,
    Int,
}

impl Sort {
    fn smt(self) -> &'static str {
        match self {
            Sort::Real => "Real",
            Sort::Int => "Int",
        }
    }
}

/// Verdict of one `check-sat`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SatResult {
    /// Satisfiable. `None` when at least one model value could not be read as a rational.
    Sat(Option<Assignment>),
    Unsat,
    Unknown(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SmtError {
    #[error("could not start solver {0:?}: {1}")]
    SpawnFailure(String, String),
    #[error("solver handshake failed: {0}")]
    HandshakeFailure(String),
    #[error("solver died: {0}")]
    SolverDied(String),
    #[error("unexpected solver response: {0}")]
    ProtocolError(String),
    #[error("solver reported an error: {0}")]
    SolverError(String),
    #[error("pop on an empty assertion stack")]
    PopOnEmptyStack,
    #[error("deadline exceeded")]
    Timeout,
    #[error("cancelled")]
    Cancelled,
    #[error(transparent)]
    Emit(#[from] EmitError),
}

/// Shared cancellation flag; cancelling kills any solver blocked on it.
#[derive(Debug, Clone, Default)]
pub struct CancelToken(Arc<AtomicBool>);

impl CancelToken {
    pub fn new() -> CancelToken {
        CancelToken::default()
    }

    pub fn cancel(&self) {
        self.0.store(true, Ordering::SeqCst);
    }

    pub fn is_cancelled(&self) -> bool {
        self.0.load(Ordering::SeqCst)
    }
}

/// Wall-clock limits for a session.
#[derive(Debug, Clone, Default)]
pub struct Limits {
    pub deadline: Option<Instant>,
    pub cancel: Option<CancelToken>,
}

pub struct SmtSession {
    config: SolverConfig,
    child: Option<Child>,
    stdin: Option<ChildStdin>,
    responses: Receiver<String>,
    stderr_tail: Arc<Mutex<String>>,
    symbols: SymbolTable,
    sorts: Vec<Sort>,
    depth: usize,
    /// Permanent formulas asserted while each scope was open; re-asserted on pop.
    scoped_permanent: Vec<Vec<Formula>>,
    limits: Limits,
    dead: bool,
}

impl SmtSession {
    /// Start the solver, declare the model's variables and assert its bounds and constraints.
    ///
    /// Integer/Binary variables are declared `Int` only when `integer_sorts` is set;
    /// otherwise they are `Real` and integrality is left to the caller.
    pub fn open(config: &SolverConfig, model: &Model, integer_sorts: bool) -> Result<SmtSession, SmtError> {
        SmtSession::open_with(config, model, integer_sorts, Limits::default())
    }

    pub fn open_with(config: &SolverConfig, model: &Model, integer_sorts: bool, limits: Limits) -> Result<SmtSession, SmtError> {
        let mut s = SmtSession::spawn(config, limits)?;
        s.handshake(integer_sorts && model.has_integer_vars())?;
        for v in &model.variables {
            let sort = if integer_sorts && v.kind.is_integral() { Sort::Int } else { Sort::Real };
            s.declare(&v.name, sort)?;
        }
        for v in &model.variables {
            if let Some(l) = &v.lower {
                s.assert_formula(&Formula::var_ge(v.id, l.clone()))?;
            }
            if let Some(u) = &v.upper {
                s.assert_formula(&Formula::var_le(v.id, u.clone()))?;
            }
        }
        for c in &model.constraints {
            s.assert_formula(&c.to_formula())?;
        }
        for side in &model.side_constraints {
            s.assert_formula(&side.formula)?;
        }
        Ok(s)
    }

    fn spawn(config: &SolverConfig, limits: Limits) -> Result<SmtSession, SmtError> {
        if config.command.is_empty() {
            return Err(SmtError::SpawnFailure(String::new(), "empty solver command".into()));
        }
        let mut child = Command::new(&config.command)
            .args(&config.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| SmtError::SpawnFailure(config.command.clone(), e.to_string()))?;
        let stdin = child.stdin.take();
        let stdout = child.stdout.take().expect("piped stdout");
        let mut stderr = child.stderr.take().expect("piped stderr");

        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            let mut acc = sexp::Accumulator::new();
            for line in BufReader::new(stdout).lines() {
                let Ok(line) = line else { break };
                if let Some(resp) = acc.push_line(&line) {
                    if tx.send(resp).is_err() {
                        break;
                    }
                }
            }
        });
        let stderr_tail = Arc::new(Mutex::new(String::new()));
        let tail = Arc::clone(&stderr_tail);
        thread::spawn(move || {
            let mut chunk = [0u8; 1024];
            while let Ok(n) = stderr.read(&mut chunk) {
                if n == 0 {
                    break;
                }
                let mut t = tail.lock().unwrap();
                t.push_str(&String::from_utf8_lossy(&chunk[..n]));
                if t.len() > STDERR_TAIL {
                    let cut = t.len() - STDERR_TAIL;
                    let cut = (cut..t.len()).find(|i| t.is_char_boundary(*i)).unwrap_or(t.len());
                    t.drain(..cut);
                }
            }
        });

        Ok(SmtSession {
            config: config.clone(),
            child: Some(child),
            stdin,
            responses: rx,
            stderr_tail,
            symbols: SymbolTable::new(),
            sorts: Vec::new(),
            depth: 0,
            scoped_permanent: Vec::new(),
            limits,
            dead: false,
        })
    }

    fn handshake(&mut self, integer_sorts: bool) -> Result<(), SmtError> {
        let deadline = Instant::now() + HANDSHAKE_TIMEOUT;
        let first = self.send("(set-option :print-success true)").and_then(|_| self.recv(Some(deadline)));
        match first {
            Ok(r) if r == "success" => {}
            Ok(other) => return Err(SmtError::HandshakeFailure(other)),
            Err(SmtError::SolverDied(msg)) => return Err(SmtError::HandshakeFailure(msg)),
            Err(e) => return Err(e),
        }
        self.command("(set-option :produce-models true)")
            .map_err(|e| SmtError::HandshakeFailure(e.to_string()))?;
        match self.config.logic.clone() {
            Some(logic) => self
                .command(&format!("(set-logic {logic})"))
                .map_err(|e| SmtError::HandshakeFailure(e.to_string()))?,
            None => {
                if let Err(SmtError::SolverError(_) | SmtError::ProtocolError(_)) = self.command("(set-logic ALL)") {
                    let fallback = if integer_sorts { "QF_NIRA" } else { "QF_NRA" };
                    self.command(&format!("(set-logic {fallback})"))
                        .map_err(|e| SmtError::HandshakeFailure(e.to_string()))?;
                }
            }
        }
        Ok(())
    }

    fn stderr_text(&self) -> String {
        self.stderr_tail.lock().map(|t| t.trim().to_string()).unwrap_or_default()
    }

    fn send(&mut self, text: &str) -> Result<(), SmtError> {
        if self.dead {
            return Err(SmtError::SolverDied("session is closed".into()));
        }
        trace!("smt> {text}");
        let stdin = self.stdin.as_mut().ok_or_else(|| SmtError::SolverDied("stdin closed".into()))?;
        let res = stdin.write_all(text.as_bytes()).and_then(|_| stdin.write_all(b"\n")).and_then(|_| stdin.flush());
        if let Err(e) = res {
            self.dead = true;
            return Err(SmtError::SolverDied(format!("{e}; {}", self.stderr_text())));
        }
        Ok(())
    }

    fn recv(&mut self, deadline: Option<Instant>) -> Result<String, SmtError> {
        let deadline = match (deadline, self.limits.deadline) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        loop {
            if self.limits.cancel.as_ref().is_some_and(CancelToken::is_cancelled) {
                self.kill();
                return Err(SmtError::Cancelled);
            }
            let wait = match deadline {
                Some(d) => {
                    let now = Instant::now();
                    if now >= d {
                        self.kill();
                        return Err(SmtError::Timeout);
                    }
                    POLL.min(d - now)
                }
                None => POLL,
            };
            match self.responses.recv_timeout(wait) {
                Ok(r) => {
                    trace!("smt< {r}");
                    return Ok(r);
                }
                Err(RecvTimeoutError::Timeout) => continue,
                Err(RecvTimeoutError::Disconnected) => {
                    self.dead = true;
                    // give the stderr reader a moment to collect the last words
                    thread::sleep(Duration::from_millis(10));
                    return Err(SmtError::SolverDied(self.stderr_text()));
                }
            }
        }
    }

    /// Send a command that must be acknowledged with `success`.
    fn command(&mut self, text: &str) -> Result<(), SmtError> {
        self.send(text)?;
        let r = self.recv(None)?;
        match r.as_str() {
            "success" => Ok(()),
            _ if r.starts_with("(error") => Err(SmtError::SolverError(r)),
            _ => Err(SmtError::ProtocolError(r)),
        }
    }

    /// Declare a variable beyond the model's own; returns its id.
    pub fn declare(&mut self, name: &str, sort: Sort) -> Result<VarId, SmtError> {
        let id = self.symbols.push(name);
        self.sorts.push(sort);
        let sym = self.symbols.get(id).unwrap().to_string();
        self.command(&format!("(declare-fun {sym} () {})", sort.smt()))?;
        Ok(id)
    }

    pub fn sort(&self, id: VarId) -> Option<Sort> {
        self.sorts.get(id.0).copied()
    }

    pub fn symbols(&self) -> &SymbolTable {
        &self.symbols
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn is_alive(&self) -> bool {
        !self.dead && self.child.is_some()
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    /// SMT-LIB text for an expression, using this session's symbols and power settings.
    pub fn emit(&self, e: &crate::Expr) -> Result<String, EmitError> {
        emit::expr(e, &self.symbols, self.config.emit_options())
    }

    /// Assert `f` in the current scope, one `assert` per top-level conjunct.
    pub fn assert_formula(&mut self, f: &Formula) -> Result<(), SmtError> {
        for line in emit::assertions(f, &self.symbols, self.config.emit_options())? {
            self.command(&line)?;
        }
        Ok(())
    }

    /// Assert `f` so that it survives every enclosing `pop`.
    pub fn assert_permanent(&mut self, f: &Formula) -> Result<(), SmtError> {
        self.assert_formula(f)?;
        if let Some(scope) = self.scoped_permanent.last_mut() {
            scope.push(f.clone());
        }
        Ok(())
    }

    pub fn push(&mut self) -> Result<(), SmtError> {
        self.command("(push 1)")?;
        self.depth += 1;
        self.scoped_permanent.push(Vec::new());
        Ok(())
    }

    pub fn pop(&mut self) -> Result<(), SmtError> {
        if self.depth == 0 {
            return Err(SmtError::PopOnEmptyStack);
        }
        self.command("(pop 1)")?;
        self.depth -= 1;
        let carried = self.scoped_permanent.pop().unwrap_or_default();
        for f in &carried {
            self.assert_permanent(f)?;
        }
        Ok(())
    }

    /// Run `check-sat`; on `sat`, fetch values for every declared variable.
    ///
    /// A per-check or global timeout kills the solver and reports `Unknown("timeout")`.
    pub fn check_sat(&mut self) -> Result<SatResult, SmtError> {
        let per_check = self.config.per_check_timeout_ms.map(|ms| Instant::now() + Duration::from_millis(ms));
        self.send("(check-sat)")?;
        let verdict = match self.recv(per_check) {
            Ok(v) => v,
            Err(SmtError::Timeout) => return Ok(SatResult::Unknown("timeout".into())),
            Err(e) => return Err(e),
        };
        match verdict.as_str() {
            "sat" => self.model_values().map(SatResult::Sat),
            "unsat" => Ok(SatResult::Unsat),
            "unknown" => Ok(SatResult::Unknown(self.reason_unknown()?)),
            "timeout" => Ok(SatResult::Unknown("timeout".into())),
            _ => Err(SmtError::ProtocolError(verdict)),
        }
    }

    fn model_values(&mut self) -> Result<Option<Assignment>, SmtError> {
        if self.symbols.is_empty() {
            return Ok(Some(Assignment::new()));
        }
        let query = format!("(get-value ({}))", self.symbols.symbols().join(" "));
        self.send(&query)?;
        let resp = self.recv(None)?;
        let pairs = match sexp::parse(&resp) {
            Some(Sexp::List(pairs)) if pairs.len() == self.symbols.len() => pairs,
            _ => return Err(SmtError::ProtocolError(resp)),
        };
        let mut a = Assignment::new();
        for (i, pair) in pairs.iter().enumerate() {
            let v = match pair {
                Sexp::List(kv) if kv.len() == 2 => sexp::value(&kv[1]),
                _ => return Err(SmtError::ProtocolError(resp)),
            };
            match v {
                Some(v) => a.insert(VarId(i), v),
                None => return Ok(None),
            }
        }
        Ok(Some(a))
    }

    fn reason_unknown(&mut self) -> Result<String, SmtError> {
        self.send("(get-info :reason-unknown)")?;
        let resp = self.recv(None)?;
        let reason = match sexp::parse(&resp) {
            Some(Sexp::List(items)) if items.len() == 2 => match &items[1] {
                Sexp::Atom(a) => a.trim_matches('"').to_string(),
                other => format!("{other:?}"),
            },
            _ => "unknown".to_string(),
        };
        Ok(reason)
    }

    fn kill(&mut self) {
        self.dead = true;
        self.stdin = None;
        if let Some(mut child) = self.child.take() {
            let _ = child.kill();
            let _ = child.wait();
        }
    }

    /// Ask the solver to exit, then reap it (killing it after a short grace period).
    /// Safe to call repeatedly.
    pub fn close(&mut self) {
        let Some(mut child) = self.child.take() else { return };
        if !self.dead {
            if let Some(stdin) = self.stdin.as_mut() {
                let _ = stdin.write_all(b"(exit)\n").and_then(|_| stdin.flush());
            }
        }
        self.stdin = None;
        self.dead = true;
        let start = Instant::now();
        while start.elapsed() < CLOSE_GRACE {
            if let Ok(Some(_)) = child.try_wait() {
                return;
            }
            thread::sleep(Duration::from_millis(5));
        }
        let _ = child.kill();
        let _ = child.wait();
    }
}

impl Drop for SmtSession {
    fn drop(&mut self) {
        self.close();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_follow_the_executable_name() {
        assert_eq!(SolverConfig::for_command("/usr/bin/z3").args, vec!["-in"]);
        assert_eq!(SolverConfig::for_command("cvc5").args, vec!["--incremental", "--lang=smt2"]);
        assert!(SolverConfig::for_command("mysolver").args.is_empty());
    }

    #[test]
    fn unknown_executable_fails_to_spawn() {
        let m = Model::new(crate::model::Objective::minimize(crate::Expr::Const(crate::rat::int(0))));
        let cfg = SolverConfig::for_command("/nonexistent/solver-binary");
        assert!(matches!(SmtSession::open(&cfg, &m, false), Err(SmtError::SpawnFailure(..))));
    }
}
