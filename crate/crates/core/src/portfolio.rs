//! Feature vectors and the portfolio that races them.
//!
//! A feature vector fixes one choice per layer (preprocessing, integrality
//! management, relaxation optimizer) plus the solver. Each vector runs as an isolated
//! worker with its own derived model and solver process; the first worker to reach a
//! definitive answer (optimal or infeasible) wins and the rest are cancelled.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::mpsc;
use std::time::{Duration, Instant};

use log::{debug, warn};
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cr_opt::{optimize, CrMethod, Incumbent, Observer, OptOutcome, OptParams, ProbeRecord, SmtObjective};
use crate::integrality::{default_max_cut_rounds, CutStats, IntegralityMode};
use crate::model::{classify, Model, ProblemClass, Sense};
use crate::preprocess::{binarize, flatten_binarized};
use crate::smt::{CancelToken, Limits, SmtSession, SolverConfig};
use crate::Rat;

/// Which default feature-vector family suits a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VectorSet {
    Minlp,
    Nlp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preprocess {
    None,
    Binarize,
    BinarizedFlatten,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VectorError {
    #[error("binarized flattening leaves no integer variables; integrality must be disabled")]
    FlattenNeedsDisabled,
    #[error("model has no integer variables; only plain vectors without integrality management apply")]
    ContinuousModel,
    #[error("unknown feature vector {0:?}")]
    UnknownLabel(String),
    #[error("vector selection {0:?} matches nothing")]
    EmptySelection(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub preprocess: Preprocess,
    pub integrality: IntegralityMode,
    pub cr: CrMethod,
    pub solver: SolverConfig,
}

/// The six preprocessing/integrality combinations of the default set, by label.
const COMBOS: [(&str, Preprocess, IntegralityMode); 6] = [
    ("allinone", Preprocess::None, IntegralityMode::AllInOne),
    ("onebyone", Preprocess::None, IntegralityMode::OneByOne),
    ("nobb", Preprocess::None, IntegralityMode::Disabled),
    ("bin_allinone", Preprocess::Binarize, IntegralityMode::AllInOne),
    ("bin_onebyone", Preprocess::Binarize, IntegralityMode::OneByOne),
    ("bin_flattening", Preprocess::BinarizedFlatten, IntegralityMode::Disabled),
];

impl FeatureVector {
    pub fn new(preprocess: Preprocess, integrality: IntegralityMode, cr: CrMethod, solver: SolverConfig) -> FeatureVector {
        FeatureVector { preprocess, integrality, cr, solver }
    }

    /// `nobb_ubs`, `bin_flattening_hybrid`, … (`bin_nobb` for the one valid
    /// combination outside the default set).
    pub fn label(&self) -> String {
        let prefix = COMBOS
            .iter()
            .find(|(_, p, i)| *p == self.preprocess && *i == self.integrality)
            .map(|(l, _, _)| *l)
            .unwrap_or(match self.preprocess {
                Preprocess::Binarize => "bin_nobb",
                _ => "invalid",
            });
        format!("{prefix}_{}", self.cr.label())
    }

    /// Check the layer dependency rules against `model`.
    pub fn validate(&self, model: &Model) -> Result<(), VectorError> {
        if self.preprocess == Preprocess::BinarizedFlatten && self.integrality != IntegralityMode::Disabled {
            return Err(VectorError::FlattenNeedsDisabled);
        }
        if !model.has_integer_vars() && (self.preprocess != Preprocess::None || self.integrality != IntegralityMode::Disabled) {
            return Err(VectorError::ContinuousModel);
        }
        Ok(())
    }

    /// Parse a full label such as `bin_onebyone_hybrid`.
    pub fn from_label(label: &str, solver: SolverConfig) -> Result<FeatureVector, VectorError> {
        let unknown = || VectorError::UnknownLabel(label.to_string());
        let (prefix, cr) = label.rsplit_once('_').ok_or_else(unknown)?;
        let cr = CrMethod::ALL.into_iter().find(|m| m.label() == cr).ok_or_else(unknown)?;
        let (pre, integ) = match prefix {
            "bin_nobb" => (Preprocess::Binarize, IntegralityMode::Disabled),
            p => COMBOS.iter().find(|(l, _, _)| *l == p).map(|(_, p, i)| (*p, *i)).ok_or_else(unknown)?,
        };
        Ok(FeatureVector::new(pre, integ, cr, solver))
    }
}

/// The default portfolio: 3 vectors for continuous classes, 18 otherwise.
pub fn default_vectors(class: ProblemClass, solver: &SolverConfig) -> Vec<FeatureVector> {
    let combos: &[_] = if class.is_continuous() { &COMBOS[2..3] } else { &COMBOS };
    combos
        .iter()
        .flat_map(|&(_, p, i)| CrMethod::ALL.into_iter().map(move |cr| FeatureVector::new(p, i, cr, solver.clone())))
        .collect()
}

/// Labels of [`default_vectors`] in the same order.
pub fn default_labels(class: ProblemClass) -> Vec<String> {
    let combos: &[_] = if class.is_continuous() { &COMBOS[2..3] } else { &COMBOS };
    combos.iter().flat_map(|(l, _, _)| CrMethod::ALL.into_iter().map(move |m| format!("{l}_{}", m.label()))).collect()
}

/// Select vectors by a comma-separated spec. Each item is a full label
/// (`nobb_ubs`), a preprocessing/integrality prefix (`bin_flattening`, all three
/// optimizers), an optimizer (`hybrid`, every default combination), or `all`.
/// Items that do not apply to `model` are dropped; explicit full labels must apply.
pub fn select_vectors(spec: &str, model: &Model, solver: &SolverConfig) -> Result<Vec<FeatureVector>, VectorError> {
    let defaults = default_vectors(classify(model), solver);
    let mut out: Vec<FeatureVector> = Vec::new();
    for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let picked: Vec<FeatureVector> = if item == "all" {
            defaults.clone()
        } else if let Some(m) = CrMethod::ALL.into_iter().find(|m| m.label() == item) {
            defaults.iter().filter(|v| v.cr == m).cloned().collect()
        } else if COMBOS.iter().any(|(l, _, _)| *l == item) {
            defaults.iter().filter(|v| v.label().rsplit_once('_').is_some_and(|(p, _)| p == item)).cloned().collect()
        } else {
            let v = FeatureVector::from_label(item, solver.clone())?;
            v.validate(model)?;
            vec![v]
        };
        for v in picked {
            if !out.contains(&v) {
                out.push(v);
            }
        }
    }
    if out.is_empty() {
        return Err(VectorError::EmptySelection(spec.to_string()));
    }
    Ok(out)
}

/// What one worker did.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkerRecord {
    pub label: String,
    pub vector: FeatureVector,
    /// In the model's original objective sense.
    pub outcome: OptOutcome,
    /// Stopped (or never started) because another worker won.
    pub cancelled: bool,
    pub wall_us: u64,
    pub cuts: CutStats,
    pub probes: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunMode {
    /// Parallel, first definitive answer cancels the rest.
    #[default]
    Race,
    /// One vector at a time in the given order, stopping at the first definitive answer.
    Sequential,
    /// Parallel, every vector runs to completion and the answers are compared.
    CrossCheck,
}

#[derive(Debug, Clone)]
pub struct PortfolioOptions {
    pub params: OptParams,
    pub timeout: Option<Duration>,
    /// Maximum concurrent workers (0 = one per vector).
    pub jobs: usize,
    pub mode: RunMode,
    pub log_dir: Option<PathBuf>,
    /// Name used for log files.
    pub benchmark: String,
}

impl Default for PortfolioOptions {
    fn default() -> Self {
        PortfolioOptions {
            params: OptParams::default(),
            timeout: None,
            jobs: 0,
            mode: RunMode::Race,
            log_dir: None,
            benchmark: "model".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PortfolioResult {
    pub class: ProblemClass,
    pub winner: Option<FeatureVector>,
    pub outcome: OptOutcome,
    pub workers: Vec<WorkerRecord>,
    /// Cross-check disagreements between definitive workers.
    pub conflicts: Vec<String>,
    pub wall_us: u64,
}

impl PortfolioResult {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("result serializes")
    }

    pub fn from_json(text: &str) -> Result<PortfolioResult, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// One JSON line in a worker log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
#[allow(clippy::large_enum_variant)]
pub enum LogLine {
    Probe(ProbeRecord),
    Final {
        benchmark: String,
        class: ProblemClass,
        #[serde(flatten)]
        record: WorkerRecord,
    },
}

pub fn log_path(dir: &Path, benchmark: &str, label: &str) -> PathBuf {
    dir.join(format!("{benchmark}__{label}.jsonl"))
}

/// Streams probe records to a JSON-lines file.
struct LogObserver {
    out: Option<BufWriter<File>>,
}

impl LogObserver {
    fn write(&mut self, line: &LogLine) {
        if let Some(out) = &mut self.out {
            let text = serde_json::to_string(line).expect("log line serializes");
            if let Err(e) = writeln!(out, "{text}") {
                warn!("worker log write failed: {e}");
                self.out = None;
            }
        }
    }
}

impl Observer for LogObserver {
    fn probe(&mut self, record: &ProbeRecord) {
        self.write(&LogLine::Probe(record.clone()));
    }
}

/// Context a worker needs besides its vector.
#[derive(Debug, Clone, Default)]
pub struct WorkerEnv {
    pub limits: Limits,
    pub log_dir: Option<PathBuf>,
    pub benchmark: String,
}

/// Run one feature vector to completion on `model` (original sense).
pub fn run_worker(model: &Model, v: &FeatureVector, params: &OptParams, env: &WorkerEnv) -> WorkerRecord {
    let start = Instant::now();
    let label = v.label();
    let mut obs = LogObserver { out: None };
    if let Some(dir) = &env.log_dir {
        match File::create(log_path(dir, &env.benchmark, &label)) {
            Ok(f) => obs.out = Some(BufWriter::new(f)),
            Err(e) => warn!("cannot create worker log in {}: {e}", dir.display()),
        }
    }
    let (outcome, cuts, probes) = match worker_pipeline(model, v, params, &env.limits, &mut obs) {
        Ok(r) => r,
        Err(reason) => (OptOutcome::unknown(reason), CutStats::default(), 0),
    };
    let outcome = if model.objective.sense == Sense::Maximize { outcome.negated() } else { outcome };
    let cancelled = matches!(&outcome, OptOutcome::Unknown { reason, .. } if reason == "cancelled");
    let record = WorkerRecord { label, vector: v.clone(), outcome, cancelled, wall_us: start.elapsed().as_micros() as u64, cuts, probes };
    obs.write(&LogLine::Final { benchmark: env.benchmark.clone(), class: classify(model), record: record.clone() });
    if let Some(mut out) = obs.out {
        let _ = out.flush();
    }
    debug!("{} finished: {:?}", record.label, record.outcome);
    record
}

fn worker_pipeline(
    model: &Model,
    v: &FeatureVector,
    params: &OptParams,
    limits: &Limits,
    obs: &mut LogObserver,
) -> Result<(OptOutcome, CutStats, u64), String> {
    v.validate(model).map_err(|e| e.to_string())?;
    let normalized = model.normalize_to_min();
    let derived = match v.preprocess {
        Preprocess::None => normalized,
        Preprocess::Binarize => binarize(&normalized).map_err(|e| format!("preprocessing failed: {e}"))?.0,
        Preprocess::BinarizedFlatten => {
            let (bin, _) = binarize(&normalized).map_err(|e| format!("preprocessing failed: {e}"))?;
            flatten_binarized(&bin).map_err(|e| format!("preprocessing failed: {e}"))?
        }
    };
    let integer_sorts = v.integrality == IntegralityMode::Disabled && derived.has_integer_vars();
    let session = SmtSession::open_with(&v.solver, &derived, integer_sorts, limits.clone()).map_err(|e| match e {
        crate::smt::SmtError::Timeout => "timeout".to_string(),
        crate::smt::SmtError::Cancelled => "cancelled".to_string(),
        other => other.to_string(),
    })?;
    let mut fc = SmtObjective::new(session, &derived, v.integrality, default_max_cut_rounds(&derived)).map_err(|e| e.to_string())?;
    let run = optimize(v.cr, &mut fc, params, obs);
    let cuts = fc.stats;
    fc.into_session().close();
    let outcome = match run.outcome {
        OptOutcome::Optimal { value, witness, bracket } => {
            let witness = witness.truncated(model.variables.len());
            // the witness must satisfy the model as given; skipped when Exp makes exact evaluation impossible
            if !model.contains_exp() && !matches!(model.check_feasible_point(&witness, &Rat::zero()), Ok(true)) {
                OptOutcome::unknown("solver witness violates the model")
            } else {
                OptOutcome::Optimal { value, witness, bracket }
            }
        }
        OptOutcome::Unknown { reason, best } => OptOutcome::Unknown { reason, best: truncate(best, model) },
        OptOutcome::BoundExceeded { direction, best } => OptOutcome::BoundExceeded { direction, best: truncate(best, model) },
        OptOutcome::Infeasible => OptOutcome::Infeasible,
    };
    Ok((outcome, cuts, run.probes))
}

fn truncate(best: Option<Incumbent>, model: &Model) -> Option<Incumbent> {
    best.map(|b| Incumbent { value: b.value, witness: b.witness.truncated(model.variables.len()) })
}

/// Run `vectors` on `model` under `opts.mode`.
pub fn run_portfolio(model: &Model, vectors: &[FeatureVector], opts: &PortfolioOptions) -> PortfolioResult {
    let start = Instant::now();
    let deadline = opts.timeout.map(|t| start + t);
    if let Some(dir) = &opts.log_dir {
        if let Err(e) = std::fs::create_dir_all(dir) {
            warn!("cannot create log directory {}: {e}", dir.display());
        }
    }
    let tokens: Vec<CancelToken> = vectors.iter().map(|_| CancelToken::new()).collect();
    let env = |i: usize| WorkerEnv {
        limits: Limits { deadline, cancel: Some(tokens[i].clone()) },
        log_dir: opts.log_dir.clone(),
        benchmark: opts.benchmark.clone(),
    };
    let mut records: Vec<Option<WorkerRecord>> = vec![None; vectors.len()];
    let mut winner: Option<usize> = None;

    match opts.mode {
        RunMode::Sequential => {
            for (i, v) in vectors.iter().enumerate() {
                let r = run_worker(model, v, &opts.params, &env(i));
                let definitive = r.outcome.is_definitive();
                records[i] = Some(r);
                if definitive {
                    winner = Some(i);
                    break;
                }
            }
        }
        RunMode::Race | RunMode::CrossCheck => {
            let race = opts.mode == RunMode::Race;
            let jobs = if opts.jobs == 0 { vectors.len() } else { opts.jobs.min(vectors.len()) };
            let next = AtomicUsize::new(0);
            let stop = AtomicBool::new(false);
            let (tx, rx) = mpsc::channel::<(usize, WorkerRecord)>();
            std::thread::scope(|scope| {
                for _ in 0..jobs {
                    let tx = tx.clone();
                    let (next, stop, env) = (&next, &stop, &env);
                    scope.spawn(move || loop {
                        let i = next.fetch_add(1, Ordering::SeqCst);
                        if i >= vectors.len() || stop.load(Ordering::SeqCst) {
                            break;
                        }
                        let r = run_worker(model, &vectors[i], &opts.params, &env(i));
                        if tx.send((i, r)).is_err() {
                            break;
                        }
                    });
                }
                drop(tx);
                for (i, r) in rx {
                    if race && winner.is_none() && r.outcome.is_definitive() {
                        winner = Some(i);
                        stop.store(true, Ordering::SeqCst);
                        for (j, t) in tokens.iter().enumerate() {
                            if j != i {
                                t.cancel();
                            }
                        }
                    }
                    records[i] = Some(r);
                }
            });
            if !race {
                winner = records.iter().position(|r| r.as_ref().is_some_and(|r| r.outcome.is_definitive()));
            }
        }
    }

    let workers: Vec<WorkerRecord> = records
        .into_iter()
        .zip(vectors)
        .map(|(r, v)| {
            r.unwrap_or_else(|| WorkerRecord {
                label: v.label(),
                vector: v.clone(),
                outcome: OptOutcome::unknown("cancelled"),
                cancelled: true,
                wall_us: 0,
                cuts: CutStats::default(),
                probes: 0,
            })
        })
        .collect();
    let conflicts = conflicts(&workers, opts.params.accuracy.value());
    let outcome = match winner {
        Some(i) => workers[i].outcome.clone(),
        None => aggregate(&workers, model.objective.sense),
    };
    PortfolioResult {
        class: classify(model),
        winner: winner.map(|i| vectors[i].clone()),
        outcome,
        workers,
        conflicts,
        wall_us: start.elapsed().as_micros() as u64,
    }
}

/// Pairs of definitive answers that cannot both be right: optimal values more than
/// `2ε` apart, or optimal next to infeasible.
pub fn conflicts(workers: &[WorkerRecord], eps: &Rat) -> Vec<String> {
    let two_eps = eps * Rat::from_integer(2.into());
    let mut out = Vec::new();
    let definitive: Vec<&WorkerRecord> = workers.iter().filter(|w| w.outcome.is_definitive()).collect();
    for (k, a) in definitive.iter().enumerate() {
        for b in &definitive[k + 1..] {
            let clash = match (&a.outcome, &b.outcome) {
                (OptOutcome::Optimal { value: x, .. }, OptOutcome::Optimal { value: y, .. }) => {
                    let d = x - y;
                    (if d < Rat::zero() { -d } else { d }) > two_eps
                }
                (OptOutcome::Infeasible, OptOutcome::Infeasible) => false,
                _ => true,
            };
            if clash {
                out.push(format!("{} ({}) vs {} ({})", a.label, summary(&a.outcome), b.label, summary(&b.outcome)));
            }
        }
    }
    out
}

fn summary(o: &OptOutcome) -> String {
    match o {
        OptOutcome::Optimal { value, .. } => format!("optimal {}", crate::rat::to_text(value)),
        OptOutcome::Infeasible => "infeasible".into(),
        OptOutcome::Unknown { reason, .. } => format!("unknown: {reason}"),
        OptOutcome::BoundExceeded { .. } => "unbounded".into(),
    }
}

/// Combined outcome when nobody was definitive.
fn aggregate(workers: &[WorkerRecord], sense: Sense) -> OptOutcome {
    let better = |a: &Rat, b: &Rat| match sense {
        Sense::Minimize => a < b,
        Sense::Maximize => a > b,
    };
    let mut best: Option<Incumbent> = None;
    for w in workers {
        let cand = match &w.outcome {
            OptOutcome::Unknown { best, .. } | OptOutcome::BoundExceeded { best, .. } => best.as_ref(),
            _ => None,
        };
        if let Some(c) = cand {
            if best.as_ref().is_none_or(|b| better(&c.value, &b.value)) {
                best = Some(c.clone());
            }
        }
    }
    if let Some(direction) = workers.iter().find_map(|w| match &w.outcome {
        OptOutcome::BoundExceeded { direction, .. } => Some(*direction),
        _ => None,
    }) {
        return OptOutcome::BoundExceeded { direction, best };
    }
    let reasons: Vec<String> = workers
        .iter()
        .map(|w| match &w.outcome {
            OptOutcome::Unknown { reason, .. } => format!("{}: {reason}", w.label),
            other => format!("{}: {}", w.label, summary(other)),
        })
        .collect();
    OptOutcome::Unknown { reason: reasons.join("; "), best }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Expr, Objective, VarId, VarKind};
    use crate::rat::int;

    fn z3() -> SolverConfig {
        SolverConfig::for_command("z3")
    }

    fn minlp() -> Model {
        let mut m = Model::new(Objective::minimize(Expr::var(VarId(0))));
        m.add_variable("x", VarKind::Integer, Some(int(0)), Some(int(3)));
        m
    }

    #[test]
    fn default_sets_have_the_right_sizes_and_are_valid() {
        let m = minlp();
        let all = default_vectors(ProblemClass::MINLP, &z3());
        assert_eq!(all.len(), 18);
        assert!(all.iter().all(|v| v.validate(&m).is_ok()));
        let mut labels: Vec<String> = all.iter().map(FeatureVector::label).collect();
        labels.sort();
        labels.dedup();
        assert_eq!(labels.len(), 18);
        assert_eq!(all.iter().map(FeatureVector::label).collect::<Vec<_>>(), default_labels(ProblemClass::MINLP));

        let mut nlp = Model::new(Objective::minimize(Expr::var(VarId(0))));
        nlp.add_variable("y", VarKind::Continuous, None, None);
        let three = default_vectors(ProblemClass::NLP, &z3());
        assert_eq!(three.len(), 3);
        assert!(three.iter().all(|v| v.validate(&nlp).is_ok()));
        for class in [ProblemClass::LP, ProblemClass::ILP, ProblemClass::MILP, ProblemClass::BLP, ProblemClass::MBNLP] {
            assert_eq!(default_vectors(class, &z3()).len(), if class.is_continuous() { 3 } else { 18 });
        }
    }

    #[test]
    fn dependency_rule_rejects_flattening_with_cuts() {
        let v = FeatureVector::new(Preprocess::BinarizedFlatten, IntegralityMode::OneByOne, CrMethod::Naive, z3());
        assert_eq!(v.validate(&minlp()), Err(VectorError::FlattenNeedsDisabled));
        let mut nlp = Model::new(Objective::minimize(Expr::var(VarId(0))));
        nlp.add_variable("y", VarKind::Continuous, None, None);
        let v = FeatureVector::new(Preprocess::None, IntegralityMode::AllInOne, CrMethod::Ubs, z3());
        assert_eq!(v.validate(&nlp), Err(VectorError::ContinuousModel));
    }

    #[test]
    fn labels_round_trip() {
        for v in default_vectors(ProblemClass::MINLP, &z3()) {
            assert_eq!(FeatureVector::from_label(&v.label(), z3()).unwrap(), v);
        }
        let v = FeatureVector::from_label("bin_nobb_hybrid", z3()).unwrap();
        assert_eq!((v.preprocess, v.integrality), (Preprocess::Binarize, IntegralityMode::Disabled));
        assert!(FeatureVector::from_label("bin_flattening", z3()).is_err());
    }

    #[test]
    fn selection_specs() {
        let m = minlp();
        let pick = |s: &str| select_vectors(s, &m, &z3()).map(|vs| vs.iter().map(FeatureVector::label).collect::<Vec<_>>());
        assert_eq!(pick("nobb_ubs").unwrap(), ["nobb_ubs"]);
        assert_eq!(pick("bin_flattening").unwrap(), ["bin_flattening_naive", "bin_flattening_ubs", "bin_flattening_hybrid"]);
        assert_eq!(pick("hybrid").unwrap().len(), 6);
        assert_eq!(pick("all").unwrap().len(), 18);
        assert_eq!(pick("ubs, nobb_ubs").unwrap().len(), 6);
        assert!(matches!(pick("bogus_ubs"), Err(VectorError::UnknownLabel(_))));
        assert!(matches!(pick(""), Err(VectorError::EmptySelection(_))));
    }

    #[test]
    fn conflict_detection() {
        let rec = |label: &str, outcome: OptOutcome| WorkerRecord {
            label: label.into(),
            vector: FeatureVector::from_label("nobb_ubs", z3()).unwrap(),
            outcome,
            cancelled: false,
            wall_us: 0,
            cuts: CutStats::default(),
            probes: 0,
        };
        let opt = |v: Rat| OptOutcome::Optimal {
            value: v.clone(),
            witness: Default::default(),
            bracket: crate::cr_opt::Bracket { lo: v.clone() - crate::rat::frac(1, 1000), hi: v },
        };
        let eps = crate::rat::frac(1, 1000);
        let close = [rec("a", opt(int(1))), rec("b", opt(crate::rat::frac(1002, 1000))), rec("c", OptOutcome::unknown("x"))];
        assert!(conflicts(&close, &eps).is_empty());
        let far = [rec("a", opt(int(1))), rec("b", opt(crate::rat::frac(1003, 1000)))];
        assert_eq!(conflicts(&far, &eps).len(), 1);
        let mixed = [rec("a", opt(int(1))), rec("b", OptOutcome::Infeasible)];
        assert_eq!(conflicts(&mixed, &eps).len(), 1);
    }
}
