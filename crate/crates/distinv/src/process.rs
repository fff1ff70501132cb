//! SMT solvers as child processes.
//!
//! A script is written to the solver's stdin and the answer read from its
//! stdout. Several solvers can run as a portfolio: all start at once and
//! the first `sat`/`unsat` answer wins, the others are killed.

use std::io::{Read, Write};
use std::process::{Child, Command, Stdio};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{mpsc, Arc};
use std::thread;
use std::time::{Duration, Instant};

use distinv_core::smt::{RawResponse, SmtBackend};

/// Environment variable overriding the solver commands: `;`-separated
/// command lines, each split on whitespace.
pub const SOLVERS_ENV: &str = "DISTINV_SOLVERS";

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(300);

const POLL: Duration = Duration::from_millis(5);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolverConfig {
    pub commands: Vec<Vec<String>>,
    pub timeout: Duration,
    /// Run all commands at once; otherwise they are tried in order until
    /// one gives a definite answer.
    pub portfolio: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            commands: vec![default_command()],
            timeout: DEFAULT_TIMEOUT,
            portfolio: true,
        }
    }
}

pub fn default_command() -> Vec<String> {
    vec!["z3".into(), "-in".into(), "-smt2".into()]
}

/// Splits `"z3 -in -smt2;other --flag"` into argv lists.
pub fn parse_command_list(text: &str) -> Vec<Vec<String>> {
    text.split(';')
        .map(|c| c.split_whitespace().map(String::from).collect::<Vec<_>>())
        .filter(|argv| !argv.is_empty())
        .collect()
}

impl SolverConfig {
    /// Commands from the environment override, if set and nonempty.
    pub fn from_env() -> Self {
        let mut cfg = SolverConfig::default();
        if let Ok(v) = std::env::var(SOLVERS_ENV) {
            let cmds = parse_command_list(&v);
            if !cmds.is_empty() {
                cfg.commands = cmds;
            }
        }
        cfg
    }

    pub fn describe(&self) -> String {
        let cmds: Vec<String> = self.commands.iter().map(|c| c.join(" ")).collect();
        format!("[{}] timeout {}s", cmds.join("; "), self.timeout.as_secs())
    }
}

/// Reads the solver's answer: the first line is the verdict, the rest is
/// the `get-value` response.
pub fn interpret_output(stdout: &str, stderr: &str, success: bool) -> RawResponse {
    let trimmed = stdout.trim_start();
    let (first, rest) = trimmed.split_once('\n').unwrap_or((trimmed, ""));
    match first.trim() {
        "sat" => {
            // Errors after `sat` (for example from a missing get-value) make
            // the model unusable.
            if rest.contains("(error") {
                RawResponse::Error(rest.trim().to_string())
            } else {
                RawResponse::Sat(rest.trim().to_string())
            }
        }
        "unsat" => RawResponse::Unsat,
        "unknown" => RawResponse::Unknown(String::from("solver answered unknown")),
        "timeout" => RawResponse::Timeout,
        other => {
            let mut msg = String::new();
            if !other.is_empty() {
                msg.push_str(trimmed.trim());
            }
            if !stderr.trim().is_empty() {
                if !msg.is_empty() {
                    msg.push_str("; ");
                }
                msg.push_str(stderr.trim());
            }
            if msg.is_empty() {
                msg = if success {
                    "empty output".into()
                } else {
                    "solver exited with an error".into()
                };
            }
            RawResponse::Error(msg)
        }
    }
}

fn drain<R: Read + Send + 'static>(mut r: R) -> thread::JoinHandle<String> {
    thread::spawn(move || {
        let mut buf = String::new();
        let _ = r.read_to_string(&mut buf);
        buf
    })
}

fn kill(child: &mut Child) {
    let _ = child.kill();
    let _ = child.wait();
}

/// Runs one solver on `script`, giving up after `timeout` or when `cancel`
/// is raised.
pub fn run_command(
    argv: &[String],
    script: &str,
    timeout: Duration,
    cancel: &AtomicBool,
) -> RawResponse {
    let Some((program, args)) = argv.split_first() else {
        return RawResponse::Error(String::from("empty solver command"));
    };
    let mut child = match Command::new(program)
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
    {
        Ok(c) => c,
        Err(e) => return RawResponse::Error(format!("cannot start `{program}`: {e}")),
    };
    let out = drain(child.stdout.take().expect("piped stdout"));
    let err = drain(child.stderr.take().expect("piped stderr"));
    let mut stdin = child.stdin.take().expect("piped stdin");
    let script = script.to_owned();
    let writer = thread::spawn(move || {
        let _ = stdin.write_all(script.as_bytes());
    });
    let start = Instant::now();
    let status = loop {
        match child.try_wait() {
            Ok(Some(status)) => break status,
            Ok(None) => {}
            Err(e) => {
                kill(&mut child);
                return RawResponse::Error(format!("waiting for `{program}`: {e}"));
            }
        }
        if cancel.load(Ordering::Relaxed) {
            kill(&mut child);
            return RawResponse::Unknown(String::from("cancelled"));
        }
        if start.elapsed() >= timeout {
            kill(&mut child);
            return RawResponse::Timeout;
        }
        thread::sleep(POLL);
    };
    let _ = writer.join();
    let stdout = out.join().unwrap_or_default();
    let stderr = err.join().unwrap_or_default();
    interpret_output(&stdout, &stderr, status.success())
}

fn definite(r: &RawResponse) -> bool {
    matches!(r, RawResponse::Sat(_) | RawResponse::Unsat)
}

/// Ranks indefinite answers so the most informative one is reported.
fn rank(r: &RawResponse) -> u8 {
    match r {
        RawResponse::Sat(_) | RawResponse::Unsat => 0,
        RawResponse::Timeout => 1,
        RawResponse::Unknown(_) => 2,
        RawResponse::Error(_) => 3,
    }
}

pub struct ProcessBackend {
    pub config: SolverConfig,
}

impl ProcessBackend {
    pub fn new(config: SolverConfig) -> Self {
        ProcessBackend { config }
    }

    fn portfolio(&self, script: &str) -> RawResponse {
        let cancel = Arc::new(AtomicBool::new(false));
        let (tx, rx) = mpsc::channel();
        let mut handles = Vec::new();
        for argv in self.config.commands.clone() {
            let (tx, cancel, script, timeout) = (
                tx.clone(),
                cancel.clone(),
                script.to_owned(),
                self.config.timeout,
            );
            handles.push(thread::spawn(move || {
                let _ = tx.send(run_command(&argv, &script, timeout, &cancel));
            }));
        }
        drop(tx);
        let mut best: Option<RawResponse> = None;
        for r in rx {
            if definite(&r) {
                cancel.store(true, Ordering::Relaxed);
                best = Some(r);
                break;
            }
            if best.as_ref().is_none_or(|b| rank(&r) < rank(b)) {
                best = Some(r);
            }
        }
        for h in handles {
            let _ = h.join();
        }
        best.unwrap_or_else(|| RawResponse::Error(String::from("no solver configured")))
    }
}

impl SmtBackend for ProcessBackend {
    fn run(&self, script: &str) -> RawResponse {
        if self.config.portfolio && self.config.commands.len() > 1 {
            return self.portfolio(script);
        }
        let never = AtomicBool::new(false);
        let mut best: Option<RawResponse> = None;
        for argv in &self.config.commands {
            let r = run_command(argv, script, self.config.timeout, &never);
            if definite(&r) {
                return r;
            }
            if best.as_ref().is_none_or(|b| rank(&r) < rank(b)) {
                best = Some(r);
            }
        }
        best.unwrap_or_else(|| RawResponse::Error(String::from("no solver configured")))
    }

    fn describe(&self) -> String {
        self.config.describe()
    }
}
