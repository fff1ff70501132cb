//! MDPs, state distributions, affine predicates and synthesis problems.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use num_traits::{One, Signed, Zero};

use crate::rational::{format_rational, Rational};
use crate::ring::{Polynomial, Slot, VarId, VarNames};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModelError {
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    InvalidName(String),
    Duplicate {
        what: &'static str,
        name: String,
    },
    UnknownState(String),
    UnknownAction(String),
    NoActions(String),
    MissingTransition {
        state: String,
        action: String,
    },
    UnavailableAction {
        state: String,
        action: String,
    },
    NegativeProbability {
        state: String,
        action: String,
    },
    RowSum {
        state: String,
        action: String,
        sum: Rational,
    },
    DimensionMismatch {
        expected: usize,
        found: usize,
    },
    NotADistribution(String),
    StrictInequality,
    UnknownFixture(String),
    Invalid(String),
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::Syntax { line, column, message } => {
                write!(f, "syntax error at line {line}, column {column}: {message}")
            }
            ModelError::InvalidName(n) => write!(
                f,
                "invalid name `{n}`: names must start with a letter and contain only letters and digits"
            ),
            ModelError::Duplicate { what, name } => write!(f, "duplicate {what} `{name}`"),
            ModelError::UnknownState(n) => write!(f, "unknown state `{n}`"),
            ModelError::UnknownAction(n) => write!(f, "unknown action `{n}`"),
            ModelError::NoActions(s) => write!(f, "state `{s}` has no available action"),
            ModelError::MissingTransition { state, action } => {
                write!(f, "no transition given for available action `{action}` of state `{state}`")
            }
            ModelError::UnavailableAction { state, action } => {
                write!(f, "action `{action}` is not available in state `{state}`")
            }
            ModelError::NegativeProbability { state, action } => {
                write!(f, "negative probability in delta({state}, {action})")
            }
            ModelError::RowSum { state, action, sum } => write!(
                f,
                "row-sum of delta({state}, {action}) is {} instead of 1",
                format_rational(sum)
            ),
            ModelError::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected} entries, found {found}")
            }
            ModelError::NotADistribution(why) => write!(f, "not a probability distribution: {why}"),
            ModelError::StrictInequality => write!(
                f,
                "strict inequalities are not supported; safe sets and invariants are \
                 conjunctions of non-strict affine inequalities (>= 0) and equalities (= 0)"
            ),
            ModelError::UnknownFixture(n) => write!(f, "unknown fixture `{n}`"),
            ModelError::Invalid(m) => f.write_str(m),
        }
    }
}

impl core::error::Error for ModelError {}

fn check_name(name: &str) -> Result<(), ModelError> {
    let mut chars = name.chars();
    let ok = matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric());
    if ok {
        Ok(())
    } else {
        Err(ModelError::InvalidName(name.to_string()))
    }
}

/// A finite MDP with rational transition kernel.
///
/// States and actions keep their construction order; that order fixes the
/// variable order of every generated constraint system.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mdp {
    states: Vec<String>,
    actions: Vec<String>,
    avail: Vec<Vec<usize>>,
    /// `delta[s]` is aligned with `avail[s]`; each row is a dense successor
    /// distribution.
    delta: Vec<Vec<Vec<Rational>>>,
}

impl Mdp {
    /// Builds and validates an MDP. `transitions` lists, for every state in
    /// order, `(action name, sparse successor distribution)` pairs; the
    /// available actions of a state are exactly the listed ones.
    pub fn new(
        states: Vec<String>,
        actions: Vec<String>,
        transitions: Vec<Vec<(String, Vec<(String, Rational)>)>>,
    ) -> Result<Self, ModelError> {
        for (i, s) in states.iter().enumerate() {
            check_name(s)?;
            if states[..i].contains(s) {
                return Err(ModelError::Duplicate {
                    what: "state",
                    name: s.clone(),
                });
            }
        }
        for (i, a) in actions.iter().enumerate() {
            check_name(a)?;
            if actions[..i].contains(a) {
                return Err(ModelError::Duplicate {
                    what: "action",
                    name: a.clone(),
                });
            }
        }
        if transitions.len() != states.len() {
            return Err(ModelError::DimensionMismatch {
                expected: states.len(),
                found: transitions.len(),
            });
        }
        let n = states.len();
        let state_index = |name: &str| {
            states
                .iter()
                .position(|s| s == name)
                .ok_or_else(|| ModelError::UnknownState(name.to_string()))
        };
        let mut avail = Vec::with_capacity(n);
        let mut delta = Vec::with_capacity(n);
        for (s, rows) in transitions.into_iter().enumerate() {
            if rows.is_empty() {
                return Err(ModelError::NoActions(states[s].clone()));
            }
            let mut acts = Vec::with_capacity(rows.len());
            let mut dists = Vec::with_capacity(rows.len());
            for (action, succ) in rows {
                let a = actions
                    .iter()
                    .position(|x| *x == action)
                    .ok_or_else(|| ModelError::UnknownAction(action.clone()))?;
                if acts.contains(&a) {
                    return Err(ModelError::Duplicate {
                        what: "action",
                        name: action,
                    });
                }
                let mut row = alloc::vec![Rational::zero(); n];
                for (target, p) in succ {
                    let t = state_index(&target)?;
                    if p.is_negative() {
                        return Err(ModelError::NegativeProbability {
                            state: states[s].clone(),
                            action,
                        });
                    }
                    row[t] += p;
                }
                let sum: Rational = row.iter().sum();
                if !sum.is_one() {
                    return Err(ModelError::RowSum {
                        state: states[s].clone(),
                        action,
                        sum,
                    });
                }
                acts.push(a);
                dists.push(row);
            }
            avail.push(acts);
            delta.push(dists);
        }
        Ok(Mdp {
            states,
            actions,
            avail,
            delta,
        })
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn actions(&self) -> &[String] {
        &self.actions
    }

    pub fn state_name(&self, s: usize) -> &str {
        &self.states[s]
    }

    pub fn action_name(&self, a: usize) -> &str {
        &self.actions[a]
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s == name)
    }

    pub fn action_index(&self, name: &str) -> Option<usize> {
        self.actions.iter().position(|a| a == name)
    }

    /// Available actions of `s`, in file order.
    pub fn avail(&self, s: usize) -> &[usize] {
        &self.avail[s]
    }

    pub fn is_available(&self, s: usize, a: usize) -> bool {
        self.avail[s].contains(&a)
    }

    /// States where a strategy actually has a choice to make.
    pub fn multi_action_states(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.num_states()).filter(|&s| self.avail[s].len() > 1)
    }

    pub fn is_markov_chain(&self) -> bool {
        self.avail.iter().all(|a| a.len() == 1)
    }

    /// Linear functionals `f` with `f(s) = Σ_t δ(s,a,t)·f(t)` for every
    /// available pair, constants excluded. `f·μ` is the same for every
    /// distribution reachable from `μ`, whatever the strategy.
    pub fn conserved_functionals(&self) -> Vec<Vec<Rational>> {
        let n = self.num_states();
        let mut rows = Vec::new();
        for s in 0..n {
            for (_, succ) in self.rows(s) {
                let mut r: Vec<Rational> = succ.iter().map(|p| -p.clone()).collect();
                r[s] += Rational::one();
                rows.push(r);
            }
        }
        let mut kept: Vec<Vec<Rational>> = alloc::vec![alloc::vec![Rational::one(); n]];
        let mut out = Vec::new();
        for f in nullspace(rows, n) {
            kept.push(f.clone());
            if rank(kept.clone()) == kept.len() {
                out.push(f);
            } else {
                kept.pop();
            }
        }
        out
    }

    /// Number of state-action pairs.
    pub fn num_pairs(&self) -> usize {
        self.avail.iter().map(Vec::len).sum()
    }

    /// Successor distribution of (`s`, `a`), if `a` is available in `s`.
    pub fn delta(&self, s: usize, a: usize) -> Option<&[Rational]> {
        let k = self.avail[s].iter().position(|&x| x == a)?;
        Some(&self.delta[s][k])
    }

    /// `(action, successor row)` pairs of `s`.
    pub fn rows(&self, s: usize) -> impl Iterator<Item = (usize, &[Rational])> {
        self.avail[s]
            .iter()
            .zip(self.delta[s].iter())
            .map(|(&a, row)| (a, row.as_slice()))
    }

    pub fn dist_from_pairs(&self, pairs: &[(&str, Rational)]) -> Result<StateDist, ModelError> {
        let mut v = alloc::vec![Rational::zero(); self.num_states()];
        for (name, p) in pairs {
            let i = self
                .state_index(name)
                .ok_or_else(|| ModelError::UnknownState((*name).to_string()))?;
            v[i] += p.clone();
        }
        StateDist::new(v)
    }

    /// Affine expression from `(state name, coefficient)` pairs.
    pub fn affine(
        &self,
        constant: Rational,
        pairs: &[(&str, Rational)],
    ) -> Result<AffineExpr, ModelError> {
        let mut coeffs = alloc::vec![Rational::zero(); self.num_states()];
        for (name, c) in pairs {
            let i = self
                .state_index(name)
                .ok_or_else(|| ModelError::UnknownState((*name).to_string()))?;
            coeffs[i] += c.clone();
        }
        Ok(AffineExpr { constant, coeffs })
    }
}

/// Variable naming driven by the MDP's state and action names. State and
/// action names are alphanumeric, so the `_`-separated names are injective.
impl VarNames for Mdp {
    fn name(&self, var: VarId) -> String {
        let slot = |s: Slot| match s {
            Slot::Const => String::from("0"),
            Slot::State(i) => self.states[i].clone(),
        };
        match var {
            VarId::State(i) => alloc::format!("x_{}", self.states[i]),
            VarId::Inv { conj, slot: s } => alloc::format!("a{}_{}", conj + 1, slot(s)),
            VarId::Prob { state, action } => {
                alloc::format!("p_{}_{}", self.states[state], self.actions[action])
            }
            VarId::Num {
                state,
                action,
                slot: s,
            } => alloc::format!(
                "r_{}_{}_{}",
                self.states[state],
                self.actions[action],
                slot(s)
            ),
            VarId::Den { state, slot: s } => alloc::format!("d_{}_{}", self.states[state], slot(s)),
            VarId::Init(i) => alloc::format!("mu0_{}", self.states[i]),
            VarId::Unrolled { step, state } => alloc::format!("mu{}_{}", step, self.states[state]),
            VarId::StepProb {
                step,
                state,
                action,
            } => alloc::format!("q{}_{}_{}", step, self.states[state], self.actions[action]),
            VarId::Mult { group, index } => alloc::format!("y{group}_{index}"),
        }
    }
}

/// A probability distribution over the states of an MDP.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct StateDist(Vec<Rational>);

impl StateDist {
    pub fn new(entries: Vec<Rational>) -> Result<Self, ModelError> {
        if entries.iter().any(Signed::is_negative) {
            return Err(ModelError::NotADistribution(String::from("negative entry")));
        }
        let sum: Rational = entries.iter().sum();
        if !sum.is_one() {
            return Err(ModelError::NotADistribution(alloc::format!(
                "entries sum to {}",
                format_rational(&sum)
            )));
        }
        Ok(StateDist(entries))
    }

    pub fn uniform(n: usize) -> Self {
        let p = Rational::new(1.into(), (n as i64).into());
        StateDist(alloc::vec![p; n])
    }

    pub fn entries(&self) -> &[Rational] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<Rational> {
        self.0
    }
}

impl core::ops::Index<usize> for StateDist {
    type Output = Rational;
    fn index(&self, i: usize) -> &Rational {
        &self.0[i]
    }
}

/// `constant + Σ coeffs[i]·x_i` with concrete rational coefficients.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffineExpr {
    pub constant: Rational,
    pub coeffs: Vec<Rational>,
}

impl AffineExpr {
    pub fn zero(n: usize) -> Self {
        AffineExpr {
            constant: Rational::zero(),
            coeffs: alloc::vec![Rational::zero(); n],
        }
    }

    pub fn eval(&self, point: &[Rational]) -> Rational {
        debug_assert_eq!(point.len(), self.coeffs.len());
        self.coeffs
            .iter()
            .zip(point)
            .fold(self.constant.clone(), |acc, (c, x)| acc + c * x)
    }

    pub fn negated(&self) -> Self {
        AffineExpr {
            constant: -self.constant.clone(),
            coeffs: self.coeffs.iter().map(|c| -c.clone()).collect(),
        }
    }

    pub fn to_polynomial(&self) -> Polynomial {
        Polynomial::affine_in_states(&self.constant, &self.coeffs)
    }

    /// Reads back an affine polynomial over state variables.
    pub fn from_polynomial(p: &Polynomial, n: usize) -> Option<Self> {
        let mut out = AffineExpr::zero(n);
        for (m, c) in p.terms() {
            match m.powers() {
                [] => out.constant = c.clone(),
                [(VarId::State(i), 1)] if *i < n => out.coeffs[*i] = c.clone(),
                _ => return None,
            }
        }
        Some(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Relation {
    /// `expr >= 0`
    Ge,
    /// `expr = 0`
    Eq,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffineInequality {
    pub expr: AffineExpr,
    pub relation: Relation,
}

impl AffineInequality {
    pub fn ge(expr: AffineExpr) -> Self {
        AffineInequality {
            expr,
            relation: Relation::Ge,
        }
    }

    pub fn eq(expr: AffineExpr) -> Self {
        AffineInequality {
            expr,
            relation: Relation::Eq,
        }
    }

    pub fn holds_at(&self, point: &[Rational]) -> bool {
        let v = self.expr.eval(point);
        match self.relation {
            Relation::Ge => !v.is_negative(),
            Relation::Eq => v.is_zero(),
        }
    }

    /// Equivalent list of `>= 0` expressions; an equality becomes the pair
    /// `{e >= 0, -e >= 0}`.
    pub fn normalize(&self) -> Vec<AffineExpr> {
        match self.relation {
            Relation::Ge => alloc::vec![self.expr.clone()],
            Relation::Eq => alloc::vec![self.expr.clone(), self.expr.negated()],
        }
    }
}

/// Splits every equality and returns the resulting `>= 0` list.
pub fn normalize_all(conjuncts: &[AffineInequality]) -> Vec<AffineExpr> {
    conjuncts
        .iter()
        .flat_map(AffineInequality::normalize)
        .collect()
}

/// An affine safe set. Membership in the probability simplex is implicit
/// and never stored as a conjunct.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SafeSet {
    pub conjuncts: Vec<AffineInequality>,
}

impl SafeSet {
    pub fn new(conjuncts: Vec<AffineInequality>) -> Self {
        SafeSet { conjuncts }
    }

    pub fn member(&self, mu: &StateDist) -> bool {
        self.conjuncts.iter().all(|c| c.holds_at(mu.entries()))
    }

    pub fn normalized(&self) -> Vec<AffineExpr> {
        normalize_all(&self.conjuncts)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InitialSpec {
    Fixed(StateDist),
    Free,
    Constrained(Vec<AffineInequality>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Memoryless,
    Distribution,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Memoryless => "memless",
            Mode::Distribution => "dist",
        }
    }
}

/// Reduced row echelon form in place; returns the pivot columns.
fn rref(m: &mut [Vec<Rational>], cols: usize) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..m.len()).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let lead = m[r][c].clone();
        for x in m[r].iter_mut() {
            *x /= &lead;
        }
        for i in 0..m.len() {
            if i != r && !m[i][c].is_zero() {
                let k = m[i][c].clone();
                let pivot_row = m[r].clone();
                for (x, y) in m[i].iter_mut().zip(pivot_row.iter()) {
                    *x -= &k * y;
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == m.len() {
            break;
        }
    }
    pivots
}

fn rank(mut m: Vec<Vec<Rational>>) -> usize {
    let cols = m.first().map_or(0, Vec::len);
    rref(&mut m, cols).len()
}

fn nullspace(mut m: Vec<Vec<Rational>>, cols: usize) -> Vec<Vec<Rational>> {
    let pivots = rref(&mut m, cols);
    (0..cols)
        .filter(|c| !pivots.contains(c))
        .map(|free| {
            let mut v = alloc::vec![Rational::zero(); cols];
            v[free] = Rational::one();
            for (r, &pc) in pivots.iter().enumerate() {
                v[pc] = -m[r][free].clone();
            }
            v
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthesisProblem {
    pub mdp: Mdp,
    pub safe: SafeSet,
    pub initial: InitialSpec,
    /// Number of affine conjuncts of the invariant template.
    pub invariant_size: usize,
    /// Maximal number of factors in a Handelman product.
    pub handelman_degree: usize,
    pub mode: Mode,
    pub unroll: usize,
    /// Known values for template variables, keyed by variable name.
    pub hints: BTreeMap<String, Rational>,
    /// Adds the safe-set conjuncts to the antecedents of inductiveness
    /// implications.
    pub strengthen: bool,
    /// Adds the conservation laws of the model (see
    /// [`SynthesisProblem::conservation_laws`]) to every antecedent and to
    /// the synthesized invariant.
    pub conservation: bool,
    /// Searches for a fixpoint distribution inside the safe set instead of an
    /// invariant (uninitialized variant); requires `invariant_size == 0`.
    pub fixpoint: bool,
}

impl SynthesisProblem {
    pub fn new(mdp: Mdp, safe: SafeSet, initial: InitialSpec) -> Self {
        SynthesisProblem {
            mdp,
            safe,
            initial,
            invariant_size: 1,
            handelman_degree: 2,
            mode: Mode::Memoryless,
            unroll: 0,
            hints: BTreeMap::new(),
            strengthen: true,
            conservation: true,
            fixpoint: false,
        }
    }

    /// Equalities `f·x = f·μ0` for the conserved functionals of the model.
    /// They hold along every run from a fixed initial distribution, so any
    /// inductive invariant stays inductive when intersected with them.
    /// Empty when disabled, for a non-fixed initial distribution and for
    /// fixpoint search.
    pub fn conservation_laws(&self) -> Vec<AffineInequality> {
        let InitialSpec::Fixed(mu0) = &self.initial else {
            return Vec::new();
        };
        if !self.conservation || self.fixpoint {
            return Vec::new();
        }
        self.mdp
            .conserved_functionals()
            .into_iter()
            .map(|f| {
                let value: Rational = f.iter().zip(mu0.entries()).map(|(a, b)| a * b).sum();
                AffineInequality::eq(AffineExpr {
                    constant: -value,
                    coeffs: f,
                })
            })
            .collect()
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let n = self.mdp.num_states();
        let check = |c: &AffineInequality| {
            if c.expr.coeffs.len() == n {
                Ok(())
            } else {
                Err(ModelError::DimensionMismatch {
                    expected: n,
                    found: c.expr.coeffs.len(),
                })
            }
        };
        self.safe.conjuncts.iter().try_for_each(check)?;
        match &self.initial {
            InitialSpec::Fixed(mu) if mu.len() != n => {
                return Err(ModelError::DimensionMismatch {
                    expected: n,
                    found: mu.len(),
                })
            }
            InitialSpec::Constrained(cs) => cs.iter().try_for_each(check)?,
            _ => {}
        }
        if self.handelman_degree == 0 {
            return Err(ModelError::Invalid(String::from(
                "Handelman degree K must be at least 1",
            )));
        }
        if self.fixpoint && self.invariant_size != 0 {
            return Err(ModelError::Invalid(String::from(
                "fixpoint search requires an invariant size of 0",
            )));
        }
        Ok(())
    }
}

pub mod fixtures {
    //! The benchmark models used throughout the tests: the three-state
    //! running example (two safety queries), the ten-state chain and the
    //! two-component split model.

    use super::*;
    use crate::rational::rat;

    pub const NAMES: [&str; 5] = ["running", "running-ex1", "running-ex2", "chain", "split"];

    fn strings(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    fn row(action: &str, succ: &[(&str, Rational)]) -> (String, Vec<(String, Rational)>) {
        (
            action.to_string(),
            succ.iter()
                .map(|(s, p)| (s.to_string(), p.clone()))
                .collect(),
        )
    }

    /// States A, B, C; A chooses between `a` (stay) and `b` (to B); B moves
    /// to C; C returns to A or stays, with probability 1/2 each. The
    /// unlabelled actions of B and C are called `tau`.
    pub fn running_mdp() -> Mdp {
        let one = Rational::one();
        Mdp::new(
            strings(&["A", "B", "C"]),
            strings(&["a", "b", "tau"]),
            alloc::vec![
                alloc::vec![
                    row("a", &[("A", one.clone())]),
                    row("b", &[("B", one.clone())])
                ],
                alloc::vec![row("tau", &[("C", one)])],
                alloc::vec![row("tau", &[("C", rat(1, 2)), ("A", rat(1, 2))])],
            ],
        )
        .expect("running example is well formed")
    }

    /// s1 → s2 → … → s10, and s10 moves to s9 or stays with probability 1/2.
    pub fn chain_mdp() -> Mdp {
        let states: Vec<String> = (1..=10).map(|i| alloc::format!("s{i}")).collect();
        let mut transitions = Vec::new();
        for i in 1..10 {
            transitions.push(alloc::vec![(
                String::from("tau"),
                alloc::vec![(alloc::format!("s{}", i + 1), Rational::one())]
            )]);
        }
        transitions.push(alloc::vec![(
            String::from("tau"),
            alloc::vec![
                (String::from("s9"), rat(1, 2)),
                (String::from("s10"), rat(1, 2))
            ]
        )]);
        Mdp::new(states, strings(&["tau"]), transitions).expect("chain is well formed")
    }

    /// Two disconnected parts: A keeps 9/10 of its mass under `a1` (rest to
    /// B) or sends everything to B under `a2`; B and D absorb; C halves into D.
    pub fn split_mdp() -> Mdp {
        let one = Rational::one();
        Mdp::new(
            strings(&["A", "B", "C", "D"]),
            strings(&["a1", "a2", "tau"]),
            alloc::vec![
                alloc::vec![
                    row("a1", &[("A", rat(9, 10)), ("B", rat(1, 10))]),
                    row("a2", &[("B", one.clone())]),
                ],
                alloc::vec![row("tau", &[("B", one.clone())])],
                alloc::vec![row("tau", &[("C", rat(1, 2)), ("D", rat(1, 2))])],
                alloc::vec![row("tau", &[("D", one)])],
            ],
        )
        .expect("split model is well formed")
    }

    pub fn builtin_fixture(name: &str) -> Result<SynthesisProblem, ModelError> {
        match name {
            "running" | "running-ex1" => {
                let m = running_mdp();
                let safe = SafeSet::new(alloc::vec![AffineInequality::ge(
                    m.affine(-rat(1, 4), &[("C", Rational::one())])?
                )]);
                let mut p =
                    SynthesisProblem::new(m, safe, InitialSpec::Fixed(StateDist::uniform(3)));
                p.invariant_size = 2;
                Ok(p)
            }
            "running-ex2" => {
                let m = running_mdp();
                let safe = SafeSet::new(alloc::vec![AffineInequality::eq(
                    m.affine(-rat(1, 4), &[("B", Rational::one())])?
                )]);
                let mu0 = m.dist_from_pairs(&[("A", rat(3, 4)), ("B", rat(1, 4))])?;
                let mut p = SynthesisProblem::new(m, safe, InitialSpec::Fixed(mu0));
                p.invariant_size = 3;
                p.mode = Mode::Distribution;
                Ok(p)
            }
            "chain" => {
                let m = chain_mdp();
                let safe = SafeSet::new(alloc::vec![AffineInequality::ge(
                    m.affine(-rat(1, 10), &[("s10", Rational::one())])?
                )]);
                let mut p =
                    SynthesisProblem::new(m, safe, InitialSpec::Fixed(StateDist::uniform(10)));
                p.invariant_size = 2;
                Ok(p)
            }
            "split" => {
                let m = split_mdp();
                let safe = SafeSet::new(alloc::vec![AffineInequality::ge(m.affine(
                    -rat(1, 2),
                    &[("A", Rational::one()), ("D", Rational::one())]
                )?)]);
                let mu0 = m.dist_from_pairs(&[("A", rat(1, 2)), ("C", rat(1, 2))])?;
                let mut p = SynthesisProblem::new(m, safe, InitialSpec::Fixed(mu0));
                p.invariant_size = 3;
                Ok(p)
            }
            other => Err(ModelError::UnknownFixture(other.to_string())),
        }
    }
}

pub use fixtures::builtin_fixture;
