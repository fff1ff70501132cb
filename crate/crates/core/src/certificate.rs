//! Certificates, the exact simulator and the independent checker.
//!
//! The checker does not reuse the synthesis pipeline. Each obligation is
//! stated as the negated entailment "some point of the invariant violates
//! the conclusion" and handed to an SMT solver; `unsat` means the
//! obligation holds. A `sat` answer only becomes a failure after the
//! witness has been re-checked in exact arithmetic.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use num_traits::{One, Signed, Zero};

use crate::constraints::TemplateSet;
use crate::model::{
    AffineExpr, AffineInequality, InitialSpec, Mdp, ModelError, Relation, SafeSet, StateDist,
    SynthesisProblem,
};
use crate::qelim::{ExConstraint, ExistentialSystem};
use crate::rational::{format_rational, Rational};
use crate::ring::{Polynomial, VarId};
use crate::smt::{solve, Cmp, Logic, SmtBackend, SolveOutcome};

/// Action probabilities of multi-action states; absent entries are 0.
pub type MemorylessTable = BTreeMap<(usize, usize), Rational>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CertStrategy {
    Memoryless(MemorylessTable),
    /// `num(s, a)(x) / den(s)(x)` for every multi-action state `s`.
    Distribution {
        num: BTreeMap<(usize, usize), AffineExpr>,
        den: BTreeMap<usize, AffineExpr>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Certificate {
    pub invariant: Vec<AffineInequality>,
    pub strategy: CertStrategy,
    pub initial: StateDist,
    /// One-step strategies played before the invariant is entered. Empty
    /// unless the certificate came from an unrolled problem: then the
    /// distribution reached after `prefix.len()` steps lies in the
    /// invariant and the earlier ones lie in the safe set.
    pub prefix: Vec<MemorylessTable>,
}

impl Certificate {
    pub fn num_states(&self) -> usize {
        self.initial.len()
    }

    pub fn in_invariant(&self, point: &[Rational]) -> bool {
        self.invariant.iter().all(|c| c.holds_at(point))
    }
}

/// A point together with what goes wrong there.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub point: Vec<Rational>,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail(Witness),
    Inconclusive(String),
}

impl Verdict {
    pub fn is_pass(&self) -> bool {
        matches!(self, Verdict::Pass)
    }

    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail(_) => "fail",
            Verdict::Inconclusive(_) => "inconclusive",
        }
    }

    /// First failure wins, then the first inconclusive result.
    fn combine(self, other: Verdict) -> Verdict {
        match (self, other) {
            (f @ Verdict::Fail(_), _) => f,
            (_, f @ Verdict::Fail(_)) => f,
            (i @ Verdict::Inconclusive(_), _) => i,
            (_, i) => i,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Pass => f.write_str("pass"),
            Verdict::Fail(w) => {
                write!(f, "fail: {} at ({})", w.description, format_point(&w.point))
            }
            Verdict::Inconclusive(why) => write!(f, "inconclusive: {why}"),
        }
    }
}

pub fn format_point(point: &[Rational]) -> String {
    let parts: Vec<String> = point.iter().map(format_rational).collect();
    parts.join(", ")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SimulationResult {
    /// Every simulated distribution stayed in the invariant and the safe
    /// set.
    Consistent,
    /// Stopped early because the exact numbers grew beyond the size limit.
    Truncated,
    Left {
        step: usize,
        set: &'static str,
        point: Vec<Rational>,
    },
    StrategyError(SimError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimulationCheck {
    pub horizon: usize,
    pub steps_checked: usize,
    pub result: SimulationResult,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckReport {
    pub initial: Verdict,
    pub containment: Verdict,
    pub strategy: Verdict,
    pub inductive: Verdict,
    pub simulation: SimulationCheck,
}

impl CheckReport {
    pub fn verdicts(&self) -> [(&'static str, &Verdict); 4] {
        [
            ("initial", &self.initial),
            ("containment", &self.containment),
            ("strategy", &self.strategy),
            ("inductive", &self.inductive),
        ]
    }

    pub fn all_pass(&self) -> bool {
        self.verdicts().iter().all(|(_, v)| v.is_pass())
            && matches!(
                self.simulation.result,
                SimulationResult::Consistent | SimulationResult::Truncated
            )
    }

    pub fn any_fail(&self) -> bool {
        self.verdicts()
            .iter()
            .any(|(_, v)| matches!(v, Verdict::Fail(_)))
            || matches!(
                self.simulation.result,
                SimulationResult::Left { .. } | SimulationResult::StrategyError(_)
            )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CheckError {
    Dimension { expected: usize, found: usize },
    Strategy(String),
}

impl fmt::Display for CheckError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CheckError::Dimension { expected, found } => {
                write!(
                    f,
                    "certificate has dimension {found}, model has {expected} states"
                )
            }
            CheckError::Strategy(why) => write!(f, "malformed strategy: {why}"),
        }
    }
}

impl core::error::Error for CheckError {}

/// Raised when a strategy cannot be applied at a reached distribution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimError {
    pub step: usize,
    pub message: String,
}

impl fmt::Display for SimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "step {}: {}", self.step, self.message)
    }
}

impl core::error::Error for SimError {}

/// A concrete strategy for simulation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Strategy {
    Memoryless(MemorylessTable),
    /// Step `t` plays the `t`-th table; the sequence must cover the horizon.
    Markov(Vec<MemorylessTable>),
    Distribution {
        num: BTreeMap<(usize, usize), AffineExpr>,
        den: BTreeMap<usize, AffineExpr>,
    },
}

impl From<&CertStrategy> for Strategy {
    fn from(s: &CertStrategy) -> Self {
        match s {
            CertStrategy::Memoryless(t) => Strategy::Memoryless(t.clone()),
            CertStrategy::Distribution { num, den } => Strategy::Distribution {
                num: num.clone(),
                den: den.clone(),
            },
        }
    }
}

/// Action probabilities at `mu` for the multi-action states.
fn action_probabilities(
    m: &Mdp,
    strategy: &Strategy,
    step: usize,
    mu: &[Rational],
) -> Result<MemorylessTable, SimError> {
    let err = |message: String| SimError { step, message };
    match strategy {
        Strategy::Memoryless(t) => Ok(t.clone()),
        Strategy::Markov(seq) => seq
            .get(step)
            .cloned()
            .ok_or_else(|| err(String::from("strategy sequence is too short"))),
        Strategy::Distribution { num, den } => {
            let mut out = MemorylessTable::new();
            for s in m.multi_action_states() {
                let sname = m.state_name(s);
                let d = den
                    .get(&s)
                    .ok_or_else(|| err(alloc::format!("no denominator for state {sname}")))?
                    .eval(mu);
                if d < Rational::one() {
                    return Err(err(alloc::format!(
                        "denominator of {sname} is {} < 1",
                        format_rational(&d)
                    )));
                }
                let mut total = Rational::zero();
                for &a in m.avail(s) {
                    let v = num
                        .get(&(s, a))
                        .ok_or_else(|| {
                            err(alloc::format!(
                                "no numerator for {sname}/{}",
                                m.action_name(a)
                            ))
                        })?
                        .eval(mu);
                    if v.is_negative() {
                        return Err(err(alloc::format!(
                            "numerator of {sname}/{} is negative",
                            m.action_name(a)
                        )));
                    }
                    total += &v;
                    out.insert((s, a), v / &d);
                }
                if total != d {
                    return Err(err(alloc::format!(
                        "numerators of {sname} do not sum to the denominator"
                    )));
                }
            }
            Ok(out)
        }
    }
}

/// Checks that `table` is a memoryless strategy of `m`: only available
/// actions, entries in `[0, 1]`, rows of multi-action states summing to 1.
/// Entries of single-action states must be 1.
pub fn validate_table(m: &Mdp, table: &MemorylessTable) -> Result<(), String> {
    for (&(s, a), p) in table {
        if s >= m.num_states() || !m.is_available(s, a) {
            return Err(alloc::format!(
                "entry for unavailable action (state {s}, action {a})"
            ));
        }
        if p.is_negative() || p > &Rational::one() {
            return Err(alloc::format!(
                "probability {} of {}/{} is outside [0, 1]",
                format_rational(p),
                m.state_name(s),
                m.action_name(a)
            ));
        }
        if m.avail(s).len() == 1 && !p.is_one() {
            return Err(alloc::format!(
                "single action of {} must have probability 1",
                m.state_name(s)
            ));
        }
    }
    for s in m.multi_action_states() {
        let total: Rational = m.avail(s).iter().filter_map(|&a| table.get(&(s, a))).sum();
        if !total.is_one() {
            return Err(alloc::format!(
                "probabilities of {} sum to {}",
                m.state_name(s),
                format_rational(&total)
            ));
        }
    }
    Ok(())
}

/// `μ'_i = Σ_{s,a} p(s, a) · δ(s, a, i) · μ_s`, single-action states
/// playing their action with probability 1.
pub fn step_exact(m: &Mdp, table: &MemorylessTable, mu: &[Rational]) -> Vec<Rational> {
    let n = m.num_states();
    let mut out = alloc::vec![Rational::zero(); n];
    for s in 0..n {
        if mu[s].is_zero() {
            continue;
        }
        let multi = m.avail(s).len() > 1;
        for (a, row) in m.rows(s) {
            let w = if multi {
                match table.get(&(s, a)) {
                    Some(p) => p * &mu[s],
                    None => continue,
                }
            } else {
                mu[s].clone()
            };
            for (i, p) in row.iter().enumerate() {
                if !p.is_zero() {
                    out[i] += p * &w;
                }
            }
        }
    }
    out
}

/// Exact stream `μ_0, …, μ_horizon` under `strategy`.
pub fn simulate(
    m: &Mdp,
    strategy: &Strategy,
    mu0: &StateDist,
    horizon: usize,
) -> Result<Vec<StateDist>, SimError> {
    let mut out = Vec::with_capacity(horizon + 1);
    let mut mu = mu0.clone();
    out.push(mu.clone());
    for t in 0..horizon {
        let table = action_probabilities(m, strategy, t, mu.entries())?;
        if !matches!(strategy, Strategy::Distribution { .. }) {
            validate_table(m, &table).map_err(|message| SimError { step: t, message })?;
        }
        let next = step_exact(m, &table, mu.entries());
        mu = StateDist::new(next).map_err(|e| SimError {
            step: t + 1,
            message: e.to_string(),
        })?;
        out.push(mu.clone());
    }
    Ok(out)
}

/// First step within `horizon` whose distribution leaves `safe`, following
/// `strategy`; Markov chains need no strategy.
pub fn falsify_bounded(
    m: &Mdp,
    safe: &SafeSet,
    strategy: Option<&Strategy>,
    mu0: &StateDist,
    horizon: usize,
) -> Result<Option<(usize, StateDist)>, SimError> {
    let fallback = Strategy::Memoryless(MemorylessTable::new());
    let strategy = match strategy {
        Some(s) => s,
        None if m.is_markov_chain() => &fallback,
        None => {
            return Err(SimError {
                step: 0,
                message: String::from("the model is nondeterministic and no strategy was given"),
            })
        }
    };
    let trace = simulate(m, strategy, mu0, horizon)?;
    Ok(trace
        .into_iter()
        .enumerate()
        .find(|(_, mu)| !safe.member(mu)))
}

/// Simulates the certificate's own strategy: the prefix tables first, then
/// the main strategy. Returns `None` in place of the remaining steps once a
/// coordinate exceeds `max_bits` bits.
pub fn simulate_certificate(
    m: &Mdp,
    cert: &Certificate,
    horizon: usize,
    max_bits: u64,
) -> Result<(Vec<StateDist>, bool), SimError> {
    let main = Strategy::from(&cert.strategy);
    let mut out = alloc::vec![cert.initial.clone()];
    let mut mu = cert.initial.clone();
    for t in 0..horizon {
        let table = match cert.prefix.get(t) {
            Some(table) => {
                validate_table(m, table).map_err(|message| SimError { step: t, message })?;
                table.clone()
            }
            None => {
                let local = t - cert.prefix.len();
                let table =
                    action_probabilities(m, &main, local, mu.entries()).map_err(|e| SimError {
                        step: t,
                        message: e.message,
                    })?;
                if let Strategy::Memoryless(_) = main {
                    validate_table(m, &table).map_err(|message| SimError { step: t, message })?;
                }
                table
            }
        };
        let next = step_exact(m, &table, mu.entries());
        mu = StateDist::new(next).map_err(|e| SimError {
            step: t + 1,
            message: e.to_string(),
        })?;
        let too_big = mu
            .entries()
            .iter()
            .any(|r| r.numer().bits().max(r.denom().bits()) > max_bits);
        out.push(mu.clone());
        if too_big {
            return Ok((out, true));
        }
    }
    Ok((out, false))
}

/// Reads a certificate back from a satisfying assignment of the synthesis
/// system.
pub fn extract_certificate(
    prob: &SynthesisProblem,
    tpl: &TemplateSet,
    model: &BTreeMap<VarId, Rational>,
) -> Result<Certificate, ModelError> {
    let m = &prob.mdp;
    let n = m.num_states();
    let value = |v: VarId| model.get(&v).cloned().unwrap_or_else(Rational::zero);
    let ground = |p: &Polynomial| -> Result<AffineExpr, ModelError> {
        let sigma: BTreeMap<VarId, Polynomial> = p
            .vars()
            .into_iter()
            .filter(|v| !v.is_state())
            .map(|v| (v, Polynomial::constant(value(v))))
            .collect();
        AffineExpr::from_polynomial(&p.substitute(&sigma), n)
            .ok_or_else(|| ModelError::Invalid(String::from("template is not affine")))
    };
    let initial = match &prob.initial {
        InitialSpec::Fixed(mu) => mu.clone(),
        _ => StateDist::new((0..n).map(|i| value(VarId::Init(i))).collect())?,
    };
    let table_of = |var: &dyn Fn(usize, usize) -> VarId| -> MemorylessTable {
        m.multi_action_states()
            .flat_map(|s| m.avail(s).iter().map(move |&a| (s, a)))
            .map(|(s, a)| ((s, a), value(var(s, a))))
            .collect()
    };
    let strategy = match &tpl.strategy {
        crate::constraints::StrategyTemplate::Memoryless(_) => {
            CertStrategy::Memoryless(table_of(&|state, action| VarId::Prob { state, action }))
        }
        crate::constraints::StrategyTemplate::Distribution { num, den } => {
            CertStrategy::Distribution {
                num: num
                    .iter()
                    .map(|(&k, p)| Ok((k, ground(p)?)))
                    .collect::<Result<_, ModelError>>()?,
                den: den
                    .iter()
                    .map(|(&k, p)| Ok((k, ground(p)?)))
                    .collect::<Result<_, ModelError>>()?,
            }
        }
    };
    let invariant = if prob.fixpoint {
        // The invariant of a fixpoint is the point itself.
        (0..n)
            .map(|i| {
                let mut e = AffineExpr::zero(n);
                e.coeffs[i] = Rational::one();
                e.constant = -initial[i].clone();
                AffineInequality::eq(e)
            })
            .collect()
    } else {
        let mut out = Vec::new();
        for p in &tpl.invariant {
            let e = ground(p)?;
            let trivial = e.coeffs.iter().all(Zero::is_zero) && !e.constant.is_negative();
            if !trivial {
                out.push(AffineInequality::ge(e));
            }
        }
        out.extend(prob.conservation_laws());
        out
    };
    let prefix = (0..if prob.fixpoint { 0 } else { prob.unroll })
        .map(|step| {
            table_of(&|state, action| VarId::StepProb {
                step,
                state,
                action,
            })
        })
        .collect();
    Ok(Certificate {
        invariant,
        strategy,
        initial,
        prefix,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CheckOptions {
    pub horizon: usize,
    /// Size limit for the simulation cross-check, in bits per coordinate.
    pub max_bits: u64,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            horizon: 50,
            max_bits: 4096,
        }
    }
}

fn x(i: usize) -> Polynomial {
    Polynomial::var(VarId::State(i))
}

/// Region facts of a query: the invariant (equalities kept as equalities)
/// and the probability simplex.
fn region(n: usize, invariant: &[AffineInequality]) -> Vec<ExConstraint> {
    let mut out = Vec::new();
    for (j, c) in invariant.iter().enumerate() {
        let cmp = match c.relation {
            Relation::Ge => Cmp::Ge,
            Relation::Eq => Cmp::Eq,
        };
        out.push(ExConstraint::new(
            alloc::format!("I[{}]", j + 1),
            c.expr.to_polynomial(),
            cmp,
        ));
    }
    for i in 0..n {
        out.push(ExConstraint::new(
            alloc::format!("simplex[{}]", i + 1),
            x(i),
            Cmp::Ge,
        ));
    }
    let total: Polynomial = (0..n).map(x).sum();
    out.push(ExConstraint::new(
        "simplex.sum",
        &total - &Polynomial::one(),
        Cmp::Eq,
    ));
    out
}

/// One entailment obligation `region ⇒ goal ≥ 0` (or `= 0`).
struct Obligation {
    what: String,
    extra: Vec<ExConstraint>,
    goal: Polynomial,
    equality: bool,
}

struct Checker<'a> {
    m: &'a Mdp,
    cert: &'a Certificate,
    backend: &'a dyn SmtBackend,
}

impl Checker<'_> {
    fn n(&self) -> usize {
        self.m.num_states()
    }

    /// Asks for a point violating the obligation. `refute` re-checks a
    /// candidate point exactly and describes the violation.
    fn discharge(
        &self,
        ob: &Obligation,
        logic: Logic,
        refute: &dyn Fn(&[Rational]) -> Option<String>,
    ) -> Verdict {
        let n = self.n();
        let mut goals = alloc::vec![ExConstraint::new("goal", -&ob.goal, Cmp::Gt)];
        if ob.equality {
            goals.push(ExConstraint::new("goal", ob.goal.clone(), Cmp::Gt));
        }
        let mut verdict = Verdict::Pass;
        for goal in goals {
            let mut constraints = region(n, &self.cert.invariant);
            constraints.extend(ob.extra.iter().cloned());
            constraints.push(goal);
            let sys = ExistentialSystem {
                variables: (0..n).map(VarId::State).collect(),
                constraints,
            };
            let v = match solve(&sys, logic, self.m, self.backend) {
                SolveOutcome::Unsat => Verdict::Pass,
                SolveOutcome::Sat(model) => {
                    let point: Vec<Rational> =
                        (0..n).map(|i| model[&VarId::State(i)].clone()).collect();
                    let on_region = sys.constraints[..sys.constraints.len() - 1]
                        .iter()
                        .all(|c| c.poly.eval_states(&point).is_some_and(|v| c.cmp.holds(&v)));
                    match (on_region, refute(&point)) {
                        (true, Some(description)) => Verdict::Fail(Witness {
                            point,
                            description: alloc::format!("{}: {description}", ob.what),
                        }),
                        _ => Verdict::Inconclusive(alloc::format!(
                            "{}: solver witness does not survive exact re-checking",
                            ob.what
                        )),
                    }
                }
                SolveOutcome::Unknown(why) => {
                    Verdict::Inconclusive(alloc::format!("{}: {why}", ob.what))
                }
                SolveOutcome::Timeout => {
                    Verdict::Inconclusive(alloc::format!("{}: timeout", ob.what))
                }
                SolveOutcome::SolverError(e) => {
                    Verdict::Inconclusive(alloc::format!("{}: solver error: {e}", ob.what))
                }
            };
            verdict = verdict.combine(v);
            if matches!(verdict, Verdict::Fail(_)) {
                break;
            }
        }
        verdict
    }

    fn initial(&self, safe: &SafeSet) -> Verdict {
        let mut mu = self.cert.initial.clone();
        for (t, table) in self.cert.prefix.iter().enumerate() {
            if !safe.member(&mu) {
                return Verdict::Fail(Witness {
                    point: mu.into_inner(),
                    description: alloc::format!("distribution at step {t} is not safe"),
                });
            }
            if let Err(e) = validate_table(self.m, table) {
                return Verdict::Fail(Witness {
                    point: mu.into_inner(),
                    description: alloc::format!("strategy of step {t}: {e}"),
                });
            }
            match StateDist::new(step_exact(self.m, table, mu.entries())) {
                Ok(next) => mu = next,
                Err(e) => return Verdict::Inconclusive(e.to_string()),
            }
        }
        if self.cert.in_invariant(mu.entries()) {
            Verdict::Pass
        } else {
            Verdict::Fail(Witness {
                point: mu.into_inner(),
                description: alloc::format!(
                    "distribution at step {} is outside the invariant",
                    self.cert.prefix.len()
                ),
            })
        }
    }

    fn containment(&self, safe: &SafeSet) -> Verdict {
        let mut v = Verdict::Pass;
        for (j, h) in safe.conjuncts.iter().enumerate() {
            let ob = Obligation {
                what: alloc::format!("safe-set conjunct {}", j + 1),
                extra: Vec::new(),
                goal: h.expr.to_polynomial(),
                equality: h.relation == Relation::Eq,
            };
            let refute = |p: &[Rational]| {
                (!h.holds_at(p))
                    .then(|| String::from("point of the invariant outside the safe set"))
            };
            v = v.combine(self.discharge(&ob, Logic::QfLra, &refute));
        }
        v
    }

    fn strategy(&self) -> Verdict {
        match &self.cert.strategy {
            CertStrategy::Memoryless(table) => match validate_table(self.m, table) {
                Ok(()) => Verdict::Pass,
                Err(e) => Verdict::Fail(Witness {
                    point: Vec::new(),
                    description: e,
                }),
            },
            CertStrategy::Distribution { num, den } => {
                let mut v = Verdict::Pass;
                for s in self.m.multi_action_states() {
                    let sname = self.m.state_name(s);
                    let (Some(d), true) = (
                        den.get(&s),
                        self.m.avail(s).iter().all(|a| num.contains_key(&(s, *a))),
                    ) else {
                        return Verdict::Fail(Witness {
                            point: Vec::new(),
                            description: alloc::format!("incomplete strategy for state {sname}"),
                        });
                    };
                    for &a in self.m.avail(s) {
                        let e = &num[&(s, a)];
                        let ob = Obligation {
                            what: alloc::format!("numerator {sname}/{}", self.m.action_name(a)),
                            extra: Vec::new(),
                            goal: e.to_polynomial(),
                            equality: false,
                        };
                        let refute = |p: &[Rational]| {
                            e.eval(p)
                                .is_negative()
                                .then(|| String::from("negative numerator"))
                        };
                        v = v.combine(self.discharge(&ob, Logic::QfLra, &refute));
                    }
                    let ob = Obligation {
                        what: alloc::format!("denominator {sname}"),
                        extra: Vec::new(),
                        goal: &d.to_polynomial() - &Polynomial::one(),
                        equality: false,
                    };
                    let refute = |p: &[Rational]| {
                        (d.eval(p) < Rational::one()).then(|| String::from("denominator below 1"))
                    };
                    v = v.combine(self.discharge(&ob, Logic::QfLra, &refute));
                    let total: Polynomial = self
                        .m
                        .avail(s)
                        .iter()
                        .map(|a| num[&(s, *a)].to_polynomial())
                        .sum();
                    let ob = Obligation {
                        what: alloc::format!("numerator sum {sname}"),
                        extra: Vec::new(),
                        goal: &total - &d.to_polynomial(),
                        equality: true,
                    };
                    let refute = |p: &[Rational]| {
                        let sum: Rational =
                            self.m.avail(s).iter().map(|a| num[&(s, *a)].eval(p)).sum();
                        (sum != d.eval(p))
                            .then(|| String::from("numerators do not sum to the denominator"))
                    };
                    v = v.combine(self.discharge(&ob, Logic::QfLra, &refute));
                }
                v
            }
        }
    }

    /// Successor of `point` under the certificate strategy, exactly. `None`
    /// when the strategy is not applicable there.
    fn successor(&self, point: &[Rational]) -> Option<Vec<Rational>> {
        let table =
            action_probabilities(self.m, &Strategy::from(&self.cert.strategy), 0, point).ok()?;
        Some(step_exact(self.m, &table, point))
    }

    fn inductive(&self) -> Verdict {
        let n = self.n();
        let xs: Vec<Polynomial> = (0..n).map(x).collect();
        let mut extra = Vec::new();
        // Successor scaled by `scale`: memoryless steps are affine, and
        // fraction strategies are multiplied through by every denominator.
        let (scaled, scale, logic) = match &self.cert.strategy {
            CertStrategy::Memoryless(table) => {
                let mut next = alloc::vec![Polynomial::zero(); n];
                for s in 0..n {
                    for (a, row) in self.m.rows(s) {
                        let w = if self.m.avail(s).len() > 1 {
                            table.get(&(s, a)).cloned().unwrap_or_else(Rational::zero)
                        } else {
                            Rational::one()
                        };
                        for (i, p) in row.iter().enumerate() {
                            next[i] = &next[i] + &xs[s].scale(&(&w * p));
                        }
                    }
                }
                (next, Polynomial::one(), Logic::QfLra)
            }
            CertStrategy::Distribution { num, den } => {
                let dens: BTreeMap<usize, Polynomial> =
                    den.iter().map(|(&s, e)| (s, e.to_polynomial())).collect();
                for (&s, d) in &dens {
                    extra.push(ExConstraint::new(
                        alloc::format!("den[{}]", self.m.state_name(s)),
                        d - &Polynomial::one(),
                        Cmp::Ge,
                    ));
                }
                let all: Polynomial = dens.values().fold(Polynomial::one(), |acc, d| &acc * d);
                let mut next = alloc::vec![Polynomial::zero(); n];
                for s in 0..n {
                    let multi = self.m.avail(s).len() > 1;
                    for (a, row) in self.m.rows(s) {
                        // Weight of `x_s` flowing through `a`, times all
                        // denominators.
                        let w = if multi {
                            let others = dens
                                .iter()
                                .filter(|(&t, _)| t != s)
                                .fold(Polynomial::one(), |acc, (_, d)| &acc * d);
                            match num.get(&(s, a)) {
                                Some(e) => &e.to_polynomial() * &others,
                                None => {
                                    return Verdict::Fail(Witness {
                                        point: Vec::new(),
                                        description: alloc::format!(
                                            "no numerator for {}/{}",
                                            self.m.state_name(s),
                                            self.m.action_name(a)
                                        ),
                                    })
                                }
                            }
                        } else {
                            all.clone()
                        };
                        let flow = &w * &xs[s];
                        for (i, p) in row.iter().enumerate() {
                            next[i] = &next[i] + &flow.scale(p);
                        }
                    }
                }
                (next, all, Logic::QfNra)
            }
        };
        let mut v = Verdict::Pass;
        for (j, c) in self.cert.invariant.iter().enumerate() {
            let e = &c.expr;
            let mut goal = scale.scale(&e.constant);
            for (i, coeff) in e.coeffs.iter().enumerate() {
                if !coeff.is_zero() {
                    goal = &goal + &scaled[i].scale(coeff);
                }
            }
            let ob = Obligation {
                what: alloc::format!("invariant conjunct {}", j + 1),
                extra: extra.clone(),
                goal,
                equality: c.relation == Relation::Eq,
            };
            let refute = |p: &[Rational]| {
                let next = self.successor(p)?;
                (!c.holds_at(&next))
                    .then(|| alloc::format!("successor ({}) violates it", format_point(&next)))
            };
            v = v.combine(self.discharge(&ob, logic, &refute));
            if matches!(v, Verdict::Fail(_)) {
                break;
            }
        }
        v
    }

    fn simulation(&self, safe: &SafeSet, opts: CheckOptions) -> SimulationCheck {
        let (trace, truncated) =
            match simulate_certificate(self.m, self.cert, opts.horizon, opts.max_bits) {
                Ok(t) => t,
                Err(e) => {
                    return SimulationCheck {
                        horizon: opts.horizon,
                        steps_checked: e.step,
                        result: SimulationResult::StrategyError(e),
                    }
                }
            };
        let u = self.cert.prefix.len();
        for (t, mu) in trace.iter().enumerate() {
            let left = if !safe.member(mu) {
                Some("safe set")
            } else if t >= u && !self.cert.in_invariant(mu.entries()) {
                Some("invariant")
            } else {
                None
            };
            if let Some(set) = left {
                return SimulationCheck {
                    horizon: opts.horizon,
                    steps_checked: t,
                    result: SimulationResult::Left {
                        step: t,
                        set,
                        point: mu.entries().to_vec(),
                    },
                };
            }
        }
        SimulationCheck {
            horizon: opts.horizon,
            steps_checked: trace.len() - 1,
            result: if truncated {
                SimulationResult::Truncated
            } else {
                SimulationResult::Consistent
            },
        }
    }
}

/// Checks every obligation of `cert` for `m` and `safe`.
pub fn check(
    m: &Mdp,
    safe: &SafeSet,
    cert: &Certificate,
    backend: &dyn SmtBackend,
    opts: CheckOptions,
) -> Result<CheckReport, CheckError> {
    let n = m.num_states();
    let dims = core::iter::once(cert.initial.len())
        .chain(cert.invariant.iter().map(|c| c.expr.coeffs.len()))
        .chain(safe.conjuncts.iter().map(|c| c.expr.coeffs.len()));
    let dims: Vec<usize> = match &cert.strategy {
        CertStrategy::Memoryless(_) => dims.collect(),
        CertStrategy::Distribution { num, den } => dims
            .chain(num.values().map(|e| e.coeffs.len()))
            .chain(den.values().map(|e| e.coeffs.len()))
            .collect(),
    };
    if let Some(&found) = dims.iter().find(|&&d| d != n) {
        return Err(CheckError::Dimension { expected: n, found });
    }
    let keys_ok = match &cert.strategy {
        CertStrategy::Memoryless(t) => t.keys().all(|&(s, a)| s < n && m.is_available(s, a)),
        CertStrategy::Distribution { num, den } => {
            num.keys().all(|&(s, a)| s < n && m.is_available(s, a)) && den.keys().all(|&s| s < n)
        }
    };
    if !keys_ok {
        return Err(CheckError::Strategy(String::from(
            "entry for an unavailable action",
        )));
    }
    let c = Checker { m, cert, backend };
    Ok(CheckReport {
        initial: c.initial(safe),
        containment: c.containment(safe),
        strategy: c.strategy(),
        inductive: c.inductive(),
        simulation: c.simulation(safe, opts),
    })
}

/// The four hand-written certificates of the benchmark models, used as
/// checker oracles.
pub mod known {
    use super::*;
    use crate::model::fixtures;
    use crate::rational::rat;

    fn affine(m: &Mdp, constant: Rational, pairs: &[(&str, Rational)]) -> AffineExpr {
        m.affine(constant, pairs).expect("fixture names")
    }

    fn one() -> Rational {
        Rational::one()
    }

    fn always(m: &Mdp, state: &str, action: &str) -> MemorylessTable {
        let s = m.state_index(state).expect("fixture state");
        m.avail(s)
            .iter()
            .map(|&a| {
                (
                    (s, a),
                    if m.action_name(a) == action {
                        one()
                    } else {
                        Rational::zero()
                    },
                )
            })
            .collect()
    }

    /// `C ≥ 1/4` and `C ≥ A`, always playing `b` at A.
    pub fn running_ex1() -> Certificate {
        let m = fixtures::running_mdp();
        Certificate {
            invariant: alloc::vec![
                AffineInequality::ge(affine(&m, -rat(1, 4), &[("C", one())])),
                AffineInequality::ge(affine(&m, Rational::zero(), &[("C", one()), ("A", -one())])),
            ],
            strategy: CertStrategy::Memoryless(always(&m, "A", "b")),
            initial: StateDist::uniform(3),
            prefix: Vec::new(),
        }
    }

    /// The first conjunct of [`running_ex1`] alone, which is not inductive.
    pub fn running_ex1_weak() -> Certificate {
        let mut c = running_ex1();
        c.invariant.truncate(1);
        c
    }

    /// `A ≥ 1/4`, `B = 1/4`; at A play `b` with weight `1` and `a` with
    /// weight `4A − 1`, out of `4A`.
    pub fn running_ex2() -> Certificate {
        let m = fixtures::running_mdp();
        let (s, a, b) = (0, 0, 1);
        let mut num = BTreeMap::new();
        num.insert((s, a), affine(&m, -one(), &[("A", rat(4, 1))]));
        num.insert((s, b), affine(&m, one(), &[]));
        let mut den = BTreeMap::new();
        den.insert(s, affine(&m, Rational::zero(), &[("A", rat(4, 1))]));
        Certificate {
            invariant: alloc::vec![
                AffineInequality::ge(affine(&m, -rat(1, 4), &[("A", one())])),
                AffineInequality::eq(affine(&m, -rat(1, 4), &[("B", one())])),
            ],
            strategy: CertStrategy::Distribution { num, den },
            initial: m
                .dist_from_pairs(&[("A", rat(3, 4)), ("B", rat(1, 4))])
                .expect("distribution"),
            prefix: Vec::new(),
        }
    }

    /// `s9 + s10 ≥ 1/5`, `s10 ≥ 1/10`.
    pub fn chain() -> Certificate {
        let m = fixtures::chain_mdp();
        Certificate {
            invariant: alloc::vec![
                AffineInequality::ge(affine(&m, -rat(1, 5), &[("s9", one()), ("s10", one())])),
                AffineInequality::ge(affine(&m, -rat(1, 10), &[("s10", one())])),
            ],
            strategy: CertStrategy::Memoryless(MemorylessTable::new()),
            initial: StateDist::uniform(10),
            prefix: Vec::new(),
        }
    }

    /// `D ≥ B`, `A + B ≥ C + D`, `3(C + D) ≥ A + B + 1`, always `a1`.
    pub fn split() -> Certificate {
        let m = fixtures::split_mdp();
        Certificate {
            invariant: alloc::vec![
                AffineInequality::ge(affine(&m, Rational::zero(), &[("D", one()), ("B", -one())])),
                AffineInequality::ge(affine(
                    &m,
                    Rational::zero(),
                    &[("A", one()), ("B", one()), ("C", -one()), ("D", -one())]
                )),
                AffineInequality::ge(affine(
                    &m,
                    -one(),
                    &[
                        ("C", rat(3, 1)),
                        ("D", rat(3, 1)),
                        ("A", -one()),
                        ("B", -one())
                    ]
                )),
            ],
            strategy: CertStrategy::Memoryless(always(&m, "A", "a1")),
            initial: m
                .dist_from_pairs(&[("A", rat(1, 2)), ("C", rat(1, 2))])
                .expect("distribution"),
            prefix: Vec::new(),
        }
    }
}
