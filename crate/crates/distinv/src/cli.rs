//! The `distinv` command line: `synth`, `check`, `simulate`, `dump` and
//! `export`.
//!
//! A problem argument is either a path to a problem file or `@name` for a
//! built-in fixture (`@running`, `@running-ex2`, `@chain`, `@split`).

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use distinv_core::certificate::{check, simulate, CheckOptions, Strategy};
use distinv_core::constraints::{build_system, TemplateSet};
use distinv_core::model::fixtures::builtin_fixture;
use distinv_core::model::{InitialSpec, Mode, StateDist, SynthesisProblem};
use distinv_core::qelim::eliminate_all;
use distinv_core::rational::format_rational;
use distinv_core::smt::emit_smt;
use distinv_core::synth::{
    solver_system, synthesize, Phase, Status, SynthOptions, SYNTHESIS_LOGIC,
};

use crate::formats::{self, FormatError};
use crate::process::{default_command, parse_command_list, ProcessBackend, SolverConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_UNKNOWN: i32 = 2;
pub const EXIT_INPUT: i32 = 3;
pub const EXIT_INTERNAL: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "distinv",
    version,
    about = "Synthesize and check distributional invariants of MDPs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize a certificate and check it.
    Synth(SynthArgs),
    /// Check a certificate against a problem's model and safe set.
    Check(CheckArgs),
    /// Print the exact distribution stream under a strategy.
    Simulate(SimulateArgs),
    /// Print an intermediate stage of the pipeline.
    Dump(DumpArgs),
    /// Print a built-in fixture as a problem file.
    Export {
        /// Fixture name, with or without a leading `@`.
        fixture: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Memless,
    Dist,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Switch {
    On,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InitialArg {
    /// The initial distribution of the problem file.
    Fixed,
    /// Any initial distribution (uninitialized variant).
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Stage {
    /// Quantified constraints after template substitution.
    Step2,
    /// The existential system after quantifier elimination.
    Step3,
    /// The SMT-LIB2 script sent to the solver.
    Smt,
}

#[derive(Debug, Clone, Args)]
pub struct ProblemArgs {
    /// Problem file, or `@fixture`.
    pub problem: String,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Number of invariant conjuncts.
    #[arg(long)]
    pub ni: Option<usize>,
    /// Maximal number of factors in Handelman products.
    #[arg(long)]
    pub k: Option<usize>,
    /// Steps played by one-step strategies before the invariant.
    #[arg(long)]
    pub unroll: Option<usize>,
    #[arg(long, value_enum)]
    pub initial: Option<InitialArg>,
    /// JSON list of affine constraints on the initial distribution.
    #[arg(long, value_name = "FILE")]
    pub initial_constraints: Option<PathBuf>,
    /// JSON object of known template variable values.
    #[arg(long, value_name = "FILE")]
    pub hints: Option<PathBuf>,
    /// Add the safe set to the antecedents of inductiveness implications.
    #[arg(long, value_enum)]
    pub strengthen: Option<Switch>,
    /// Add the conservation laws of the model to every antecedent.
    #[arg(long, value_enum)]
    pub conservation: Option<Switch>,
    /// Look for a safe fixpoint under a one-step strategy (with `--ni 0`).
    #[arg(long)]
    pub fixpoint: bool,
    /// Send the raw existential system to the solver.
    #[arg(long)]
    pub no_presolve: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// Solver command line; repeat for a portfolio. Defaults to
    /// `z3 -in -smt2`, or the `DISTINV_SOLVERS` environment variable.
    #[arg(long = "solver-cmd", value_name = "CMD")]
    pub solver_cmd: Vec<String>,
    #[arg(long, default_value_t = 300)]
    pub timeout_secs: u64,
    /// Try the solvers one after another instead of concurrently.
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Try template sizes up to this one.
    #[arg(long)]
    pub ni_max: Option<usize>,
    #[arg(long)]
    pub no_check: bool,
    /// Write the synthesis script here.
    #[arg(long, value_name = "PATH")]
    pub emit_smt: Option<PathBuf>,
    /// Certificate output path.
    #[arg(long, short, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Simulation horizon of the checker's cross-check.
    #[arg(long, default_value_t = 50)]
    pub horizon: usize,
    /// Depth of the memoryless screening query; 0 disables it.
    #[arg(long, default_value_t = 3)]
    pub screen_depth: usize,
    /// Print the run report as JSON.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Args)]
pub struct CheckArgs {
    /// Problem file (model and safe set), or `@fixture`.
    pub problem: String,
    pub certificate: PathBuf,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, default_value_t = 50)]
    pub horizon: usize,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Problem file, or `@fixture`.
    pub problem: String,
    /// Strategy file (memoryless, markov or dist), or a certificate.
    #[arg(long, value_name = "FILE")]
    pub strategy: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    pub horizon: usize,
    /// Also write the trace as CSV.
    #[arg(long, value_name = "PATH")]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Args)]
pub struct DumpArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long, value_enum)]
    pub stage: Stage,
}

/// An error that ends the command with exit code 3.
#[derive(Debug, thiserror::Error)]
pub enum InputError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Format { path: String, source: FormatError },
    #[error("{0}")]
    Other(String),
}

fn read(path: &Path) -> Result<String, InputError> {
    fs::read_to_string(path).map_err(|source| InputError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn write(path: &Path, text: &str) -> Result<(), InputError> {
    fs::write(path, text).map_err(|source| InputError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn in_file<T>(path: &Path, r: Result<T, FormatError>) -> Result<T, InputError> {
    r.map_err(|source| InputError::Format {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_problem(spec: &str) -> Result<SynthesisProblem, InputError> {
    if let Some(name) = spec.strip_prefix('@') {
        return builtin_fixture(name).map_err(|e| InputError::Other(e.to_string()));
    }
    let path = Path::new(spec);
    in_file(path, formats::parse_problem(&read(path)?))
}

fn problem_stem(spec: &str) -> String {
    match spec.strip_prefix('@') {
        Some(name) => name.to_string(),
        None => Path::new(spec)
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| String::from("problem")),
    }
}

impl ProblemArgs {
    pub fn build(&self) -> Result<SynthesisProblem, InputError> {
        let mut p = load_problem(&self.problem)?;
        if let Some(m) = self.mode {
            p.mode = match m {
                ModeArg::Memless => Mode::Memoryless,
                ModeArg::Dist => Mode::Distribution,
            };
        }
        if let Some(n) = self.ni {
            p.invariant_size = n;
        }
        if let Some(k) = self.k {
            p.handelman_degree = k;
        }
        if let Some(u) = self.unroll {
            p.unroll = u;
        }
        if self.initial == Some(InitialArg::Free) {
            p.initial = InitialSpec::Free;
        }
        if let Some(path) = &self.initial_constraints {
            let cs = in_file(path, formats::parse_conjuncts(&read(path)?, &p.mdp))?;
            p.initial = InitialSpec::Constrained(cs);
        }
        if let Some(path) = &self.hints {
            let hints = in_file(path, formats::parse_hints(&read(path)?))?;
            p.hints.extend(hints);
        }
        if let Some(s) = self.strengthen {
            p.strengthen = s == Switch::On;
        }
        if let Some(s) = self.conservation {
            p.conservation = s == Switch::On;
        }
        if self.fixpoint {
            p.fixpoint = true;
            if self.ni.is_none() {
                p.invariant_size = 0;
            }
        }
        p.validate().map_err(|e| InputError::Other(e.to_string()))?;
        Ok(p)
    }
}

impl SolverArgs {
    pub fn config(&self) -> SolverConfig {
        let mut cfg = SolverConfig::from_env();
        if !self.solver_cmd.is_empty() {
            cfg.commands = self
                .solver_cmd
                .iter()
                .flat_map(|c| parse_command_list(c))
                .collect();
        }
        if cfg.commands.is_empty() {
            cfg.commands = vec![default_command()];
        }
        cfg.timeout = Duration::from_secs(self.timeout_secs);
        cfg.portfolio = !self.sequential;
        cfg
    }
}

fn initial_label(i: &InitialSpec) -> &'static str {
    match i {
        InitialSpec::Fixed(_) => "fixed",
        InitialSpec::Free => "free",
        InitialSpec::Constrained(_) => "constrained",
    }
}

fn status_exit(s: &Status) -> i32 {
    match s {
        Status::Certified | Status::Unchecked => EXIT_OK,
        Status::Unsat | Status::ScreenedUnsat => EXIT_NEGATIVE,
        Status::Unknown(_) | Status::Timeout | Status::CheckInconclusive(_) => EXIT_UNKNOWN,
        Status::CheckFailed => EXIT_INTERNAL,
    }
}

fn status_detail(s: &Status) -> Option<String> {
    match s {
        Status::Unknown(why) | Status::CheckInconclusive(why) => Some(why.clone()),
        Status::ScreenedUnsat => Some(String::from(
            "no memoryless strategy keeps the first steps safe",
        )),
        _ => None,
    }
}

/// Wall-clock time per phase; phases entered repeatedly are summed.
#[derive(Default)]
struct PhaseClock {
    current: Option<(Phase, Instant)>,
    totals: BTreeMap<Phase, Duration>,
}

impl PhaseClock {
    fn enter(&mut self, p: Phase) {
        let now = Instant::now();
        if let Some((prev, start)) = self.current.take() {
            *self.totals.entry(prev).or_default() += now - start;
        }
        if p != Phase::Done {
            self.current = Some((p, now));
        }
    }

    fn value(&self) -> Value {
        let obj: Map<String, Value> = self
            .totals
            .iter()
            .map(|(p, d)| (p.as_str().to_string(), json!(d.as_secs_f64())))
            .collect();
        Value::Object(obj)
    }
}

fn smt_path(base: &Path, ni: usize, several: bool) -> PathBuf {
    if !several {
        return base.to_path_buf();
    }
    let stem = base
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let ext = base
        .extension()
        .map(|s| format!(".{}", s.to_string_lossy()))
        .unwrap_or_default();
    base.with_file_name(format!("{stem}.ni{ni}{ext}"))
}

fn synthesis_script(p: &SynthesisProblem, presolve: bool) -> Result<String, InputError> {
    let tpl = TemplateSet::new(p);
    let sys = build_system(p, &tpl).map_err(|e| InputError::Other(e.to_string()))?;
    let ex =
        eliminate_all(&sys, p.handelman_degree).map_err(|e| InputError::Other(e.to_string()))?;
    Ok(emit_smt(
        &solver_system(&ex, presolve).system,
        SYNTHESIS_LOGIC,
        &p.mdp,
    ))
}

pub fn run_synth(args: &SynthArgs, out: &mut dyn std::io::Write) -> Result<i32, InputError> {
    let p = args.problem.build()?;
    let cfg = args.solver.config();
    let ni_max = args
        .ni_max
        .unwrap_or(p.invariant_size)
        .max(p.invariant_size);
    if let Some(base) = &args.emit_smt {
        let several = ni_max > p.invariant_size;
        for ni in p.invariant_size..=ni_max {
            let mut q = p.clone();
            q.invariant_size = ni;
            write(
                &smt_path(base, ni, several),
                &synthesis_script(&q, !args.problem.no_presolve)?,
            )?;
        }
    }
    let opts = SynthOptions {
        ni_max,
        check: !args.no_check,
        check_options: CheckOptions {
            horizon: args.horizon,
            ..CheckOptions::default()
        },
        screen_depth: args.screen_depth,
        presolve: !args.problem.no_presolve,
    };
    let backend = ProcessBackend::new(cfg.clone());
    let mut clock = PhaseClock::default();
    let start = Instant::now();
    let outcome = synthesize(&p, &backend, &opts, &mut |ph| clock.enter(ph))
        .map_err(|e| InputError::Other(e.to_string()))?;
    let total = start.elapsed();
    let code = status_exit(&outcome.status);

    let mut cert_path = None;
    if let (Some(cert), EXIT_OK) = (&outcome.certificate, code) {
        let path = args.out.clone().unwrap_or_else(|| {
            PathBuf::from(format!("{}.cert.json", problem_stem(&args.problem.problem)))
        });
        write(&path, &formats::print_certificate(cert, &p.mdp))?;
        cert_path = Some(path);
    }

    let attempts: Vec<Value> = outcome
        .attempts
        .iter()
        .map(|a| {
            json!({
                "ni": a.invariant_size,
                "variables": a.variables,
                "constraints": a.constraints,
                "solver_variables": a.solver_variables,
                "solver_constraints": a.solver_constraints,
                "implications": a.implications,
                "ground_constraints": a.quantified_ground,
                "status": a.status.as_str(),
                "detail": status_detail(&a.status),
            })
        })
        .collect();
    let report = json!({
        "command": "synth",
        "problem": args.problem.problem,
        "config": {
            "mode": p.mode.as_str(),
            "ni": p.invariant_size,
            "ni_max": ni_max,
            "k": p.handelman_degree,
            "unroll": p.unroll,
            "initial": initial_label(&p.initial),
            "strengthen": p.strengthen,
            "conservation": p.conservation,
            "conservation_laws": p.conservation_laws().len(),
            "fixpoint": p.fixpoint,
            "presolve": opts.presolve,
            "hints": p.hints.len(),
            "check": opts.check,
            "screen_depth": opts.screen_depth,
            "solver": cfg.commands,
            "portfolio": cfg.portfolio,
            "timeout_secs": cfg.timeout.as_secs(),
        },
        "status": outcome.status.as_str(),
        "detail": status_detail(&outcome.status),
        "exit_code": code,
        "attempts": attempts,
        "phases": clock.value(),
        "total_secs": total.as_secs_f64(),
        "certificate_path": cert_path.as_ref().map(|p| p.display().to_string()),
        "certificate": outcome.certificate.as_ref().map(|c| formats::certificate_value(c, &p.mdp)),
        "check": outcome.report.as_ref().map(|r| formats::check_report_value(r, &p.mdp)),
    });
    let text = if args.json {
        formats::json_text(&report)
    } else {
        let mut s = String::new();
        for a in &outcome.attempts {
            s.push_str(&format!(
                "N_I={}: {} variables, {} constraints ({} / {} after presolve): {}\n",
                a.invariant_size,
                a.variables,
                a.constraints,
                a.solver_variables,
                a.solver_constraints,
                a.status.as_str()
            ));
        }
        s.push_str(&format!("status: {}", outcome.status.as_str()));
        if let Some(d) = status_detail(&outcome.status) {
            s.push_str(&format!(" ({d})"));
        }
        s.push_str(&format!(" in {:.2}s\n", total.as_secs_f64()));
        if let Some(r) = &outcome.report {
            s.push_str(&formats::format_check_report(r));
        }
        if let Some(path) = &cert_path {
            s.push_str(&format!("certificate written to {}\n", path.display()));
        }
        s
    };
    let _ = out.write_all(text.as_bytes());
    Ok(code)
}

pub fn run_check(args: &CheckArgs, out: &mut dyn std::io::Write) -> Result<i32, InputError> {
    let p = load_problem(&args.problem)?;
    let cert = in_file(
        &args.certificate,
        formats::parse_certificate(&read(&args.certificate)?, &p.mdp),
    )?;
    let backend = ProcessBackend::new(args.solver.config());
    let opts = CheckOptions {
        horizon: args.horizon,
        ..CheckOptions::default()
    };
    let start = Instant::now();
    let report = check(&p.mdp, &p.safe, &cert, &backend, opts)
        .map_err(|e| InputError::Other(e.to_string()))?;
    let code = if report.all_pass() {
        EXIT_OK
    } else if report.any_fail() {
        EXIT_NEGATIVE
    } else {
        EXIT_UNKNOWN
    };
    let text = if args.json {
        let mut v = formats::check_report_value(&report, &p.mdp);
        let o = v.as_object_mut().expect("object");
        o.insert("command".into(), json!("check"));
        o.insert("solver".into(), json!(args.solver.config().commands));
        o.insert("total_secs".into(), json!(start.elapsed().as_secs_f64()));
        o.insert("exit_code".into(), json!(code));
        formats::json_text(&v)
    } else {
        formats::format_check_report(&report)
    };
    let _ = out.write_all(text.as_bytes());
    Ok(code)
}

pub fn run_simulate(args: &SimulateArgs, out: &mut dyn std::io::Write) -> Result<i32, InputError> {
    let p = load_problem(&args.problem)?;
    let m = &p.mdp;
    let (strategy, cert) = match &args.strategy {
        Some(path) => in_file(path, formats::parse_strategy(&read(path)?, m))?,
        None if m.is_markov_chain() => (Strategy::Memoryless(Default::default()), None),
        None => {
            return Err(InputError::Other(String::from(
                "the model has choices; pass --strategy",
            )))
        }
    };
    let (mu0, strategy) = match &cert {
        Some(c) if !c.prefix.is_empty() => {
            // Play the prefix tables first, then the main strategy.
            let Strategy::Memoryless(main) = &strategy else {
                return Err(InputError::Other(String::from(
                    "unrolled certificates use memoryless strategies",
                )));
            };
            let mut seq = c.prefix.clone();
            seq.extend(std::iter::repeat_n(main.clone(), args.horizon));
            (c.initial.clone(), Strategy::Markov(seq))
        }
        Some(c) => (c.initial.clone(), strategy),
        None => match &p.initial {
            InitialSpec::Fixed(mu) => (mu.clone(), strategy),
            _ => {
                return Err(InputError::Other(String::from(
                    "the problem has no fixed initial distribution",
                )))
            }
        },
    };
    let trace = match simulate(m, &strategy, &mu0, args.horizon) {
        Ok(t) => t,
        Err(e) => {
            let _ = writeln!(out, "strategy error at {e}");
            return Ok(EXIT_UNKNOWN);
        }
    };
    let first_unsafe = trace.iter().position(|mu| !p.safe.member(mu));
    if let Some(path) = &args.csv {
        let mut w = csv::Writer::from_path(path)
            .map_err(|e| InputError::Other(format!("{}: {e}", path.display())))?;
        let mut header = vec![String::from("step")];
        header.extend(m.states().iter().cloned());
        header.push(String::from("safe"));
        let rows = trace.iter().enumerate().map(|(t, mu)| {
            let mut row = vec![t.to_string()];
            row.extend(mu.entries().iter().map(format_rational));
            row.push(p.safe.member(mu).to_string());
            row
        });
        std::iter::once(header)
            .chain(rows)
            .try_for_each(|r| w.write_record(&r))
            .and_then(|_| w.flush().map_err(csv::Error::from))
            .map_err(|e| InputError::Other(format!("{}: {e}", path.display())))?;
    }
    let text = if args.json {
        let steps: Vec<Value> = trace
            .iter()
            .map(|mu| {
                Value::Array(
                    mu.entries()
                        .iter()
                        .map(|r| json!(format_rational(r)))
                        .collect(),
                )
            })
            .collect();
        formats::json_text(&json!({
            "command": "simulate",
            "states": m.states(),
            "trace": steps,
            "first_unsafe_step": first_unsafe,
        }))
    } else {
        format_trace(m.states(), &trace, &p.safe)
    };
    let _ = out.write_all(text.as_bytes());
    Ok(if first_unsafe.is_some() {
        EXIT_NEGATIVE
    } else {
        EXIT_OK
    })
}

fn format_trace(
    states: &[String],
    trace: &[StateDist],
    safe: &distinv_core::model::SafeSet,
) -> String {
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut header = vec![String::from("step")];
    header.extend(states.iter().cloned());
    header.push(String::from("safe"));
    rows.push(header);
    for (t, mu) in trace.iter().enumerate() {
        let mut row = vec![t.to_string()];
        row.extend(mu.entries().iter().map(format_rational));
        row.push(if safe.member(mu) {
            "yes".into()
        } else {
            "NO".into()
        });
        rows.push(row);
    }
    let widths: Vec<usize> = (0..rows[0].len())
        .map(|c| rows.iter().map(|r| r[c].len()).max().unwrap_or(0))
        .collect();
    let mut s = String::new();
    for r in rows {
        let cells: Vec<String> = r
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:>w$}"))
            .collect();
        s.push_str(cells.join("  ").trim_end());
        s.push('\n');
    }
    s
}

pub fn run_dump(args: &DumpArgs, out: &mut dyn std::io::Write) -> Result<i32, InputError> {
    let p = args.problem.build()?;
    let tpl = TemplateSet::new(&p);
    let sys = build_system(&p, &tpl).map_err(|e| InputError::Other(e.to_string()))?;
    let text = match args.stage {
        Stage::Step2 => sys.dump(&p.mdp),
        Stage::Step3 => eliminate_all(&sys, p.handelman_degree)
            .map_err(|e| InputError::Other(e.to_string()))?
            .dump(&p.mdp),
        Stage::Smt => synthesis_script(&p, !args.problem.no_presolve)?,
    };
    let _ = out.write_all(text.as_bytes());
    Ok(EXIT_OK)
}

/// Runs a parsed command line and returns the exit code.
pub fn run(cli: Cli, out: &mut dyn std::io::Write, err: &mut dyn std::io::Write) -> i32 {
    let result = match &cli.command {
        Command::Synth(a) => run_synth(a, out),
        Command::Check(a) => run_check(a, out),
        Command::Simulate(a) => run_simulate(a, out),
        Command::Dump(a) => run_dump(a, out),
        Command::Export { fixture } => {
            load_problem(&format!("@{}", fixture.trim_start_matches('@'))).map(|p| {
                let _ = out.write_all(formats::print_problem(&p).as_bytes());
                EXIT_OK
            })
        }
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_INPUT
        }
    }
}

/// Entry point of the binary.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    run(cli, &mut std::io::stdout(), &mut std::io::stderr())
}
