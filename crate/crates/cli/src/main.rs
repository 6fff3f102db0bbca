//! `smtopt`: solve OSiL/MPS models by reduction to SMT with a portfolio of strategies.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use smtopt_core::cr_opt::{Accuracy, OptOutcome, OptParams};
use smtopt_core::model::{Model, Sense};
use smtopt_core::mps::parse_mps;
use smtopt_core::oracle::brute_force;
use smtopt_core::osil::{detect_class_and_vector_set, parse_osil_with, OsilOptions};
use smtopt_core::portfolio::{default_vectors, run_portfolio, select_vectors, PortfolioOptions, PortfolioResult, RunMode};
use smtopt_core::rat::{parse_rat, to_decimal, to_text};
use smtopt_core::report::report_table;
use smtopt_core::smt::SolverConfig;
use smtopt_core::Rat;

macro_rules! outln {
    ($out:expr, $($arg:tt)*) => {{
        let _ = writeln!($out, $($arg)*);
    }};
}

const EXIT_OPTIMAL: u8 = 0;
const EXIT_INFEASIBLE: u8 = 1;
const EXIT_UNKNOWN: u8 = 2;
const EXIT_UNBOUNDED: u8 = 3;
const EXIT_USAGE: u8 = 64;
const EXIT_DATA: u8 = 65;

#[derive(Parser, Debug)]
#[command(name = "smtopt", version, about = "Optimize MINLP models through an external SMT solver", args_conflicts_with_subcommands = true)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,

    #[command(flatten)]
    solve: SolveArgs,

    /// More log output (repeat for more)
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Tabulate per-vector runtimes from a directory of worker logs
    Report {
        dir: PathBuf,
        /// Emit CSV instead of an aligned text table
        #[arg(long)]
        csv: bool,
    },
    /// Brute-force reference solve of a tiny model
    #[command(hide = true)]
    Oracle {
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Auto)]
        format: Format,
        /// Grid step for continuous variables
        #[arg(long, default_value = "1/100")]
        grid: String,
        /// Constraint slack per unit grid step
        #[arg(long, default_value = "0")]
        lipschitz: String,
        #[arg(long, default_value = "0.001")]
        accuracy: String,
    },
}

#[derive(Args, Debug)]
struct SolveArgs {
    /// Model file (OSiL or MPS)
    input: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = Format::Auto)]
    format: Format,

    /// Absolute accuracy of the reported optimum
    #[arg(long, default_value = "0.001")]
    accuracy: String,

    /// Wall-clock limit in seconds
    #[arg(long, default_value_t = 1800.0)]
    timeout: f64,

    /// SMT solver executable (SMT-LIB 2 on stdin/stdout)
    #[arg(long, env = "MINLP_SMT_SOLVER")]
    solver: Option<String>,

    /// Solver argument, replacing the built-in presets (repeatable)
    #[arg(long = "solver-arg", allow_hyphen_values = true)]
    solver_args: Vec<String>,

    /// Per check-sat limit in milliseconds
    #[arg(long)]
    check_timeout: Option<u64>,

    /// SMT logic to request instead of automatic selection
    #[arg(long)]
    logic: Option<String>,

    /// Concurrent workers [default: one per vector]
    #[arg(long)]
    jobs: Option<usize>,

    /// Comma-separated vector selection: labels such as nobb_ubs, prefixes such as
    /// bin_flattening, optimizers (naive, ubs, hybrid) or `all`
    #[arg(long)]
    vectors: Option<String>,

    /// Directory for per-vector JSON-lines logs
    #[arg(long)]
    log_dir: Option<PathBuf>,

    /// Print the full result as JSON
    #[arg(long)]
    json: bool,

    /// Deterministic sequential mode: one vector at a time, in order
    #[arg(long)]
    seq: bool,

    /// Run every vector to completion and compare the answers
    #[arg(long)]
    cross_check: bool,

    /// OSiL variables without an lb attribute are free instead of nonnegative
    #[arg(long)]
    lb_default_free: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Auto,
    Osil,
    Mps,
}

/// Failure classes with their exit codes.
enum Failure {
    Usage(anyhow::Error),
    Data(anyhow::Error),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        2 => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = match cli.command {
        Some(Command::Report { dir, csv }) => report(&dir, csv),
        Some(Command::Oracle { input, format, grid, lipschitz, accuracy }) => oracle(&input, format, &grid, &lipschitz, &accuracy),
        None => solve(&cli.solve),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_DATA)
        }
    }
}

fn usage(e: anyhow::Error) -> Failure {
    Failure::Usage(e)
}

fn data(e: anyhow::Error) -> Failure {
    Failure::Data(e)
}

fn positive_rat(text: &str, what: &str) -> Result<Rat> {
    let r = parse_rat(text).map_err(|_| anyhow!("{what} must be a number, got {text:?}"))?;
    if r <= Rat::default() {
        bail!("{what} must be positive, got {text:?}");
    }
    Ok(r)
}

fn load_model(path: &Path, format: Format, osil: OsilOptions) -> Result<Model, Failure> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display())).map_err(usage)?;
    let format = match format {
        Format::Auto => detect_format(path, &bytes),
        f => f,
    };
    let model = match format {
        Format::Osil => parse_osil_with(&bytes, osil).map_err(anyhow::Error::from),
        _ => std::str::from_utf8(&bytes)
            .map_err(|e| anyhow!("MPS file is not UTF-8: {e}"))
            .and_then(|t| parse_mps(t).map_err(anyhow::Error::from)),
    };
    let model = model.with_context(|| format!("parsing {}", path.display())).map_err(data)?;
    model.validate().with_context(|| format!("checking {}", path.display())).map_err(data)?;
    Ok(model)
}

/// Extension first, then a look at the first non-blank byte.
fn detect_format(path: &Path, bytes: &[u8]) -> Format {
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("osil") | Some("xml") => return Format::Osil,
        Some("mps") | Some("free") => return Format::Mps,
        _ => {}
    }
    let body = bytes.strip_prefix(b"\xEF\xBB\xBF").unwrap_or(bytes);
    match body.iter().find(|b| !b.is_ascii_whitespace()) {
        Some(b'<') => Format::Osil,
        _ => Format::Mps,
    }
}

fn solver_config(args: &SolveArgs) -> Result<SolverConfig> {
    let Some(cmd) = args.solver.as_deref().filter(|s| !s.is_empty()) else {
        bail!("no SMT solver given: pass --solver or set MINLP_SMT_SOLVER");
    };
    let mut cfg = SolverConfig::for_command(cmd);
    if !args.solver_args.is_empty() {
        cfg = cfg.with_args(args.solver_args.clone());
    }
    cfg.per_check_timeout_ms = args.check_timeout;
    cfg.logic = args.logic.clone();
    Ok(cfg)
}

fn solve(args: &SolveArgs) -> Result<u8, Failure> {
    let input = args.input.as_deref().ok_or_else(|| usage(anyhow!("no input model given (see --help)")))?;
    let eps = positive_rat(&args.accuracy, "--accuracy").map_err(usage)?;
    if !(args.timeout > 0.0 && args.timeout.is_finite()) {
        return Err(usage(anyhow!("--timeout must be a positive number of seconds")));
    }
    let solver = solver_config(args).map_err(usage)?;
    let model = load_model(input, args.format, OsilOptions { free_default_lower: args.lb_default_free })?;

    let (class, set) = detect_class_and_vector_set(&model);
    log::info!("{} variables, {} constraints, class {class}, {set:?} vectors", model.variables.len(), model.constraints.len());
    let vectors = match &args.vectors {
        Some(spec) => select_vectors(spec, &model, &solver).map_err(|e| usage(e.into()))?,
        None => default_vectors(class, &solver),
    };
    let mode = match (args.seq, args.cross_check) {
        (_, true) => RunMode::CrossCheck,
        (true, false) => RunMode::Sequential,
        _ => RunMode::Race,
    };
    let opts = PortfolioOptions {
        params: OptParams { accuracy: Accuracy::new(eps).map_err(|e| usage(e.into()))?, ..OptParams::default() },
        timeout: Some(Duration::from_secs_f64(args.timeout)),
        jobs: if args.seq { 1 } else { args.jobs.unwrap_or(0) },
        mode,
        log_dir: args.log_dir.clone(),
        benchmark: input.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "model".into()),
    };
    let result = run_portfolio(&model, &vectors, &opts);
    for c in &result.conflicts {
        eprintln!("warning: vectors disagree: {c}");
    }
    if args.json {
        emit(&format!("{}\n", result.to_json()));
    } else {
        emit(&render_human(&model, &result));
    }
    Ok(exit_code(&result.outcome))
}

fn exit_code(o: &OptOutcome) -> u8 {
    match o {
        OptOutcome::Optimal { .. } => EXIT_OPTIMAL,
        OptOutcome::Infeasible => EXIT_INFEASIBLE,
        OptOutcome::Unknown { .. } => EXIT_UNKNOWN,
        OptOutcome::BoundExceeded { .. } => EXIT_UNBOUNDED,
    }
}

fn value_line(v: &Rat) -> String {
    format!("{} (exact {})", to_decimal(v, 6), to_text(v))
}

/// Write to stdout; a closed pipe (`| head`) is not an error.
fn emit(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn render_human(model: &Model, r: &PortfolioResult) -> String {
    let mut out = String::new();
    match &r.outcome {
        OptOutcome::Optimal { value, witness, .. } => {
            outln!(out, "status: optimal");
            outln!(out, "objective: {}", value_line(value));
            const SHOWN: usize = 50;
            for (id, v) in witness.iter().take(SHOWN) {
                outln!(out, "  {} = {}", model.var(id).name, value_line(v));
            }
            if witness.len() > SHOWN {
                outln!(out, "  ... {} more", witness.len() - SHOWN);
            }
        }
        OptOutcome::Infeasible => outln!(out, "status: infeasible"),
        OptOutcome::Unknown { reason, best } => {
            outln!(out, "status: unknown ({reason})");
            if let Some(b) = best {
                outln!(out, "best found: {}", value_line(&b.value));
            }
        }
        OptOutcome::BoundExceeded { best, .. } => {
            let dir = if model.objective.sense == Sense::Maximize { "above" } else { "below" };
            outln!(out, "status: unbounded {dir}");
            if let Some(b) = best {
                outln!(out, "best found: {}", value_line(&b.value));
            }
        }
    }
    let winner = r.winner.as_ref().map(|v| v.label()).unwrap_or_else(|| "none".into());
    outln!(out, "vector: {winner}");
    outln!(out, "class: {}", r.class);
    outln!(out, "wall time: {:.3} s", r.wall_us as f64 / 1e6);
    out
}

fn report(dir: &Path, csv: bool) -> Result<u8, Failure> {
    let table = report_table(dir).map_err(|e| data(e.into()))?;
    emit(&if csv { table.to_csv() } else { table.to_text() });
    Ok(EXIT_OPTIMAL)
}

fn oracle(input: &Path, format: Format, grid: &str, lipschitz: &str, accuracy: &str) -> Result<u8, Failure> {
    let grid = positive_rat(grid, "--grid").map_err(usage)?;
    let eps = positive_rat(accuracy, "--accuracy").map_err(usage)?;
    let lipschitz = parse_rat(lipschitz).map_err(|_| usage(anyhow!("--lipschitz must be a number")))?;
    let model = load_model(input, format, OsilOptions::default())?;
    let r = brute_force(&model, &grid, &eps, &lipschitz).map_err(|e| data(e.into()))?;
    emit(&format!("{}\n", serde_json::to_string_pretty(&r).expect("oracle result serializes")));
    Ok(exit_code(&r.outcome))
}
