//! The synthesis pipeline: templates, constraint generation, quantifier
//! elimination, solving, certificate extraction and checking.
//!
//! Callers that want timings pass an observer which is told when each
//! [`Phase`] starts.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::certificate::{
    check, extract_certificate, falsify_bounded, Certificate, CheckOptions, CheckReport,
};
use crate::constraints::{
    build_system, step_symbolic, BuildError, ConstraintSystem, StepStrategy, TemplateSet,
};
use crate::model::{InitialSpec, Mode, ModelError, SynthesisProblem};
use crate::presolve::{presolve, Presolved};
use crate::qelim::{eliminate_all, ExConstraint, ExistentialSystem, QelimError};
use crate::ring::Polynomial;
use crate::smt::{first_violation, solve, Cmp, Logic, SmtBackend, SolveOutcome};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SynthError {
    Model(ModelError),
    Build(BuildError),
    Qelim(QelimError),
}

impl fmt::Display for SynthError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SynthError::Model(e) => e.fmt(f),
            SynthError::Build(e) => e.fmt(f),
            SynthError::Qelim(e) => e.fmt(f),
        }
    }
}

impl core::error::Error for SynthError {}

impl From<ModelError> for SynthError {
    fn from(e: ModelError) -> Self {
        SynthError::Model(e)
    }
}

impl From<BuildError> for SynthError {
    fn from(e: BuildError) -> Self {
        SynthError::Build(e)
    }
}

impl From<QelimError> for SynthError {
    fn from(e: QelimError) -> Self {
        SynthError::Qelim(e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Phase {
    Screen,
    Build,
    Eliminate,
    Solve,
    Check,
    Done,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Screen => "screen",
            Phase::Build => "build",
            Phase::Eliminate => "eliminate",
            Phase::Solve => "solve",
            Phase::Check => "check",
            Phase::Done => "done",
        }
    }
}

/// Templates, the quantified system and its existential form.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub templates: TemplateSet,
    pub system: ConstraintSystem,
    pub existential: ExistentialSystem,
}

pub fn prepare(prob: &SynthesisProblem) -> Result<Prepared, SynthError> {
    let templates = TemplateSet::new(prob);
    let system = build_system(prob, &templates)?;
    let existential = eliminate_all(&system, prob.handelman_degree)?;
    Ok(Prepared {
        templates,
        system,
        existential,
    })
}

/// The system handed to the solver: presolved, or the raw one.
pub fn solver_system(existential: &ExistentialSystem, reduce: bool) -> Presolved {
    if reduce {
        presolve(existential)
    } else {
        Presolved::identity(existential.clone())
    }
}

/// Synthesis queries are always posed in nonlinear real arithmetic.
pub const SYNTHESIS_LOGIC: Logic = Logic::QfNra;

/// Existence of a memoryless strategy keeping `μ_1..μ_depth` in the safe
/// set, from the fixed initial distribution. When this is unsatisfiable no
/// certificate with a memoryless strategy exists, whatever the template
/// size. `None` when the problem is not of that shape.
pub fn screening_system(prob: &SynthesisProblem, depth: usize) -> Option<ExistentialSystem> {
    let InitialSpec::Fixed(mu0) = &prob.initial else {
        return None;
    };
    if prob.mode != Mode::Memoryless || prob.unroll > 0 || prob.fixpoint {
        return None;
    }
    let m = &prob.mdp;
    let tpl = TemplateSet::new(prob);
    let crate::constraints::StrategyTemplate::Memoryless(probs) = &tpl.strategy else {
        return None;
    };
    let names: &dyn crate::ring::VarNames = m;
    let mut constraints = Vec::new();
    let mut by_state: BTreeMap<usize, Polynomial> = BTreeMap::new();
    for (&(s, _), p) in probs {
        constraints.push(ExConstraint::new(
            alloc::format!("strat.nonneg[{}]", p.render(names)),
            p.clone(),
            Cmp::Ge,
        ));
        let e = by_state.entry(s).or_default();
        *e = &*e + p;
    }
    for (s, total) in by_state {
        constraints.push(ExConstraint::new(
            alloc::format!("strat.sum[{}]", m.state_name(s)),
            &total - &Polynomial::one(),
            Cmp::Eq,
        ));
    }
    let safe: Vec<Polynomial> = prob
        .safe
        .normalized()
        .iter()
        .map(|e| e.to_polynomial())
        .collect();
    let mut mu: Vec<Polynomial> = mu0
        .entries()
        .iter()
        .map(|p| Polynomial::constant(p.clone()))
        .collect();
    for t in 0..=depth {
        for (j, h) in safe.iter().enumerate() {
            let v = crate::constraints::apply_to_step(h, &mu);
            constraints.push(ExConstraint::new(
                alloc::format!("reach{t}.safe[{}]", j + 1),
                v,
                Cmp::Ge,
            ));
        }
        if t < depth {
            let step = step_symbolic(m, StepStrategy::Memoryless(probs), &mu).ok()?;
            mu = step.polynomials()?.to_vec();
        }
    }
    let variables = probs.values().flat_map(|p| p.vars()).collect();
    Some(ExistentialSystem {
        variables,
        constraints,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SynthOptions {
    /// Largest template size tried; the search starts at the problem's own.
    pub ni_max: usize,
    pub check: bool,
    pub check_options: CheckOptions,
    /// Depth of the memoryless prefix screening; 0 disables it.
    pub screen_depth: usize,
    /// Sends the presolved system to the solver instead of the raw one.
    pub presolve: bool,
}

impl SynthOptions {
    pub fn for_problem(prob: &SynthesisProblem) -> Self {
        SynthOptions {
            ni_max: prob.invariant_size,
            check: true,
            check_options: CheckOptions::default(),
            screen_depth: 3,
            presolve: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Status {
    /// Solved and accepted by the checker.
    Certified,
    /// Solved; checking was disabled.
    Unchecked,
    /// No certificate at the tried template sizes.
    Unsat,
    /// No certificate with a memoryless strategy can exist: the screening
    /// query has no solution.
    ScreenedUnsat,
    Unknown(String),
    Timeout,
    /// The checker did not accept the synthesized certificate; never
    /// expected.
    CheckFailed,
    CheckInconclusive(String),
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Certified => "certified",
            Status::Unchecked => "unchecked",
            Status::Unsat => "unsat",
            Status::ScreenedUnsat => "unsat",
            Status::Unknown(_) => "unknown",
            Status::Timeout => "timeout",
            Status::CheckFailed => "check-failed",
            Status::CheckInconclusive(_) => "check-inconclusive",
        }
    }

    fn solved(&self) -> bool {
        matches!(self, Status::Certified | Status::Unchecked)
    }
}

/// One template size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Attempt {
    pub invariant_size: usize,
    pub variables: usize,
    pub constraints: usize,
    pub quantified_ground: usize,
    pub implications: usize,
    /// Size of the system actually sent to the solver, after presolving.
    pub solver_variables: usize,
    pub solver_constraints: usize,
    pub status: Status,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthOutcome {
    pub status: Status,
    pub attempts: Vec<Attempt>,
    pub certificate: Option<Certificate>,
    pub report: Option<CheckReport>,
}

/// Runs the pipeline for template sizes `prob.invariant_size ..= ni_max`,
/// stopping at the first solved one.
pub fn synthesize(
    prob: &SynthesisProblem,
    backend: &dyn SmtBackend,
    opts: &SynthOptions,
    observe: &mut dyn FnMut(Phase),
) -> Result<SynthOutcome, SynthError> {
    prob.validate()?;
    let mut outcome = SynthOutcome {
        status: Status::Unsat,
        attempts: Vec::new(),
        certificate: None,
        report: None,
    };
    if opts.screen_depth > 0 {
        observe(Phase::Screen);
        if screen(prob, opts.screen_depth, backend) {
            outcome.status = Status::ScreenedUnsat;
            observe(Phase::Done);
            return Ok(outcome);
        }
    }
    let mut worst_open: Option<Status> = None;
    for ni in prob.invariant_size..=opts.ni_max.max(prob.invariant_size) {
        let mut p = prob.clone();
        p.invariant_size = ni;
        let (attempt, cert, report) = attempt(&p, backend, opts, observe)?;
        let status = attempt.status.clone();
        outcome.attempts.push(attempt);
        if status.solved() || matches!(status, Status::CheckFailed | Status::CheckInconclusive(_)) {
            outcome.status = status;
            outcome.certificate = cert;
            outcome.report = report;
            observe(Phase::Done);
            return Ok(outcome);
        }
        if status != Status::Unsat && worst_open.is_none() {
            worst_open = Some(status);
        }
    }
    outcome.status = worst_open.unwrap_or(Status::Unsat);
    observe(Phase::Done);
    Ok(outcome)
}

/// True when screening proves that no memoryless certificate exists.
fn screen(prob: &SynthesisProblem, depth: usize, backend: &dyn SmtBackend) -> bool {
    let InitialSpec::Fixed(mu0) = &prob.initial else {
        return false;
    };
    if prob.mode != Mode::Memoryless || prob.unroll > 0 || prob.fixpoint {
        return false;
    }
    if prob.mdp.is_markov_chain() {
        return matches!(
            falsify_bounded(&prob.mdp, &prob.safe, None, mu0, depth),
            Ok(Some(_))
        );
    }
    match screening_system(prob, depth) {
        Some(sys) => solve(&sys, SYNTHESIS_LOGIC, &prob.mdp, backend) == SolveOutcome::Unsat,
        None => false,
    }
}

fn attempt(
    prob: &SynthesisProblem,
    backend: &dyn SmtBackend,
    opts: &SynthOptions,
    observe: &mut dyn FnMut(Phase),
) -> Result<(Attempt, Option<Certificate>, Option<CheckReport>), SynthError> {
    observe(Phase::Build);
    let templates = TemplateSet::new(prob);
    let system = build_system(prob, &templates)?;
    observe(Phase::Eliminate);
    let existential = eliminate_all(&system, prob.handelman_degree)?;
    let reduced = solver_system(&existential, opts.presolve);
    let mut attempt = Attempt {
        invariant_size: prob.invariant_size,
        variables: existential.num_variables(),
        constraints: existential.num_constraints(),
        quantified_ground: system.ground.len(),
        implications: system.implications.len(),
        solver_variables: reduced.system.num_variables(),
        solver_constraints: reduced.system.num_constraints(),
        status: Status::Unsat,
    };
    observe(Phase::Solve);
    let model = match solve(&reduced.system, SYNTHESIS_LOGIC, &prob.mdp, backend) {
        SolveOutcome::Sat(model) => match reduced.recover(&model) {
            Some(full) if first_violation(&existential, &full).is_none() => full,
            _ => {
                attempt.status =
                    Status::Unknown(String::from("recovered model violates the system"));
                return Ok((attempt, None, None));
            }
        },
        SolveOutcome::Unsat => return Ok((attempt, None, None)),
        SolveOutcome::Unknown(why) => {
            attempt.status = Status::Unknown(why);
            return Ok((attempt, None, None));
        }
        SolveOutcome::Timeout => {
            attempt.status = Status::Timeout;
            return Ok((attempt, None, None));
        }
        SolveOutcome::SolverError(e) => {
            attempt.status = Status::Unknown(alloc::format!("solver error: {e}"));
            return Ok((attempt, None, None));
        }
    };
    let cert = extract_certificate(prob, &templates, &model)?;
    if !opts.check {
        attempt.status = Status::Unchecked;
        return Ok((attempt, Some(cert), None));
    }
    observe(Phase::Check);
    let report = check(&prob.mdp, &prob.safe, &cert, backend, opts.check_options)
        .map_err(|e| SynthError::Model(ModelError::Invalid(e.to_string())))?;
    attempt.status = if report.all_pass() {
        Status::Certified
    } else if report.any_fail() {
        Status::CheckFailed
    } else {
        let why = report
            .verdicts()
            .iter()
            .find_map(|(_, v)| match v {
                crate::certificate::Verdict::Inconclusive(w) => Some(w.clone()),
                _ => None,
            })
            .unwrap_or_else(|| String::from("checker inconclusive"));
        Status::CheckInconclusive(why)
    };
    Ok((attempt, Some(cert), Some(report)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::builtin_fixture;
    use crate::smt::{FixedResponse, RawResponse};

    #[test]
    fn screening_shape() {
        let p = builtin_fixture("running-ex2").unwrap();
        assert!(
            screening_system(&p, 2).is_none(),
            "distribution mode is not screened"
        );
        let mut p = p;
        p.mode = Mode::Memoryless;
        let sys = screening_system(&p, 2).unwrap();
        assert_eq!(sys.variables.len(), 2);
        // Nonnegativity (2) and the row sum, then the equality as two
        // inequalities at steps 0, 1 and 2.
        assert_eq!(sys.constraints.len(), 3 + 6);
        assert!(!sys.mentions_state_variables());
    }

    #[test]
    fn chain_is_not_screened_out() {
        let p = builtin_fixture("chain").unwrap();
        assert!(!screen(&p, 5, &FixedResponse(RawResponse::Unsat)));
    }

    #[test]
    fn unsat_everywhere_walks_template_sizes() {
        let mut p = builtin_fixture("split").unwrap();
        p.invariant_size = 1;
        let mut opts = SynthOptions::for_problem(&p);
        opts.ni_max = 3;
        opts.screen_depth = 0;
        let mut phases = Vec::new();
        let out = synthesize(&p, &FixedResponse(RawResponse::Unsat), &opts, &mut |ph| {
            phases.push(ph)
        })
        .unwrap();
        assert_eq!(out.status, Status::Unsat);
        let sizes: Vec<usize> = out.attempts.iter().map(|a| a.invariant_size).collect();
        assert_eq!(sizes, [1, 2, 3]);
        assert_eq!(phases.last(), Some(&Phase::Done));
    }

    #[test]
    fn unsat_screening_stops_early() {
        let mut p = builtin_fixture("running-ex2").unwrap();
        p.mode = Mode::Memoryless;
        let opts = SynthOptions::for_problem(&p);
        let out = synthesize(&p, &FixedResponse(RawResponse::Unsat), &opts, &mut |_| {}).unwrap();
        assert_eq!(out.status, Status::ScreenedUnsat);
        assert!(out.attempts.is_empty());
    }
}
