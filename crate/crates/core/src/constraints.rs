//! Templates and the universally quantified constraint systems built from
//! them.
//!
//! A [`ConstraintSystem`] holds ground (purely existential) constraints over
//! template variables and a list of [`Implication`]s, each universally
//! quantified over the state variables. Quantifier elimination turns the
//! latter into ground constraints as well (see [`crate::qelim`]).

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::fmt::Write as _;

use num_traits::{One, Signed};

use crate::model::{InitialSpec, Mdp, Mode, ModelError, Relation, SynthesisProblem};
use crate::rational::{format_rational, Rational};
use crate::ring::{Polynomial, Slot, VarId, VarNames};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BuildError {
    Model(ModelError),
    UnknownHint(String),
    NotAffine(String),
}

impl fmt::Display for BuildError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BuildError::Model(e) => e.fmt(f),
            BuildError::UnknownHint(n) => write!(f, "hint names unknown template variable `{n}`"),
            BuildError::NotAffine(what) => write!(f, "{what} is not affine in the state variables"),
        }
    }
}

impl core::error::Error for BuildError {}

impl From<ModelError> for BuildError {
    fn from(e: ModelError) -> Self {
        BuildError::Model(e)
    }
}

/// Symbolic strategy of a template.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StrategyTemplate {
    /// One probability variable per (state, action) of every multi-action
    /// state.
    Memoryless(BTreeMap<(usize, usize), Polynomial>),
    /// Action probabilities `num(s, a)(x) / den(s)(x)` with affine numerator
    /// and denominator templates, again for multi-action states only.
    Distribution {
        num: BTreeMap<(usize, usize), Polynomial>,
        den: BTreeMap<usize, Polynomial>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateSet {
    /// `a^i_0 + Σ_j a^i_j x_j`, one per invariant conjunct.
    pub invariant: Vec<Polynomial>,
    pub strategy: StrategyTemplate,
    /// Initial distribution variables when it is not fixed.
    pub initial: Option<Vec<Polynomial>>,
}

fn affine_template(n: usize, var: impl Fn(Slot) -> VarId) -> Polynomial {
    let mut p = Polynomial::var(var(Slot::Const));
    for i in 0..n {
        p = &p + &(&Polynomial::var(var(Slot::State(i))) * &Polynomial::var(VarId::State(i)));
    }
    p
}

impl TemplateSet {
    pub fn new(prob: &SynthesisProblem) -> Self {
        let m = &prob.mdp;
        let n = m.num_states();
        let invariant = (0..prob.invariant_size)
            .map(|conj| affine_template(n, |slot| VarId::Inv { conj, slot }))
            .collect();
        let mode = if prob.fixpoint {
            Mode::Memoryless
        } else {
            prob.mode
        };
        let strategy = match mode {
            Mode::Memoryless => StrategyTemplate::Memoryless(
                m.multi_action_states()
                    .flat_map(|s| m.avail(s).iter().map(move |&a| (s, a)))
                    .map(|(s, a)| {
                        (
                            (s, a),
                            Polynomial::var(VarId::Prob {
                                state: s,
                                action: a,
                            }),
                        )
                    })
                    .collect(),
            ),
            Mode::Distribution => {
                let mut num = BTreeMap::new();
                let mut den = BTreeMap::new();
                for s in m.multi_action_states() {
                    for &a in m.avail(s) {
                        num.insert(
                            (s, a),
                            affine_template(n, |slot| VarId::Num {
                                state: s,
                                action: a,
                                slot,
                            }),
                        );
                    }
                    den.insert(s, affine_template(n, |slot| VarId::Den { state: s, slot }));
                }
                StrategyTemplate::Distribution { num, den }
            }
        };
        let initial = match prob.initial {
            InitialSpec::Fixed(_) => None,
            InitialSpec::Free | InitialSpec::Constrained(_) => {
                Some((0..n).map(|i| Polynomial::var(VarId::Init(i))).collect())
            }
        };
        TemplateSet {
            invariant,
            strategy,
            initial,
        }
    }

    /// Every template variable, in variable order.
    pub fn variables(&self) -> BTreeSet<VarId> {
        let mut out = BTreeSet::new();
        let mut add = |p: &Polynomial| out.extend(p.vars().into_iter().filter(|v| !v.is_state()));
        self.invariant.iter().for_each(&mut add);
        match &self.strategy {
            StrategyTemplate::Memoryless(p) => p.values().for_each(&mut add),
            StrategyTemplate::Distribution { num, den } => {
                num.values().for_each(&mut add);
                den.values().for_each(&mut add);
            }
        }
        if let Some(init) = &self.initial {
            init.iter().for_each(&mut add);
        }
        out
    }
}

/// Strategy used to apply one step of the MDP symbolically.
#[derive(Debug, Clone, Copy)]
pub enum StepStrategy<'a> {
    /// Probabilities per (state, action) of multi-action states: template
    /// variables or constants.
    Memoryless(&'a BTreeMap<(usize, usize), Polynomial>),
    Fractions {
        num: &'a BTreeMap<(usize, usize), Polynomial>,
        den: &'a BTreeMap<usize, Polynomial>,
    },
}

/// Mass arriving at each state after one step through a multi-action state
/// governed by a fraction strategy: `numerators[i] / den`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FractionPart {
    pub state: usize,
    pub den: Polynomial,
    pub numerators: Vec<Polynomial>,
}

/// Symbolic successor distribution: `base[i] + Σ_parts numerators[i] / den`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub base: Vec<Polynomial>,
    pub fractions: Vec<FractionPart>,
}

impl Step {
    /// The successor distribution when no fractions are involved.
    pub fn polynomials(&self) -> Option<&[Polynomial]> {
        self.fractions.is_empty().then_some(self.base.as_slice())
    }
}

/// The state variables `x_1..x_n` as polynomials.
pub fn state_vector(n: usize) -> Vec<Polynomial> {
    (0..n).map(|i| Polynomial::var(VarId::State(i))).collect()
}

fn check_strategy_keys<'a>(
    m: &Mdp,
    keys: impl Iterator<Item = &'a (usize, usize)>,
) -> Result<(), ModelError> {
    for &(s, a) in keys {
        if s >= m.num_states() || !m.is_available(s, a) {
            return Err(ModelError::UnavailableAction {
                state: m.states().get(s).cloned().unwrap_or_default(),
                action: m.actions().get(a).cloned().unwrap_or_default(),
            });
        }
    }
    Ok(())
}

fn missing(m: &Mdp, s: usize, a: usize) -> ModelError {
    ModelError::MissingTransition {
        state: m.state_name(s).to_string(),
        action: m.action_name(a).to_string(),
    }
}

/// One step of the distribution transformer applied to `x`:
/// `step(x)_i = Σ_{s, a} p(s, a) · δ(s, a, i) · x_s`.
///
/// The mass moved out of `s` is proportional to `x_s`, the mass of the source
/// state. Single-action states always play their action.
pub fn step_symbolic(
    m: &Mdp,
    strategy: StepStrategy<'_>,
    x: &[Polynomial],
) -> Result<Step, ModelError> {
    let n = m.num_states();
    if x.len() != n {
        return Err(ModelError::DimensionMismatch {
            expected: n,
            found: x.len(),
        });
    }
    let mut base = alloc::vec![Polynomial::zero(); n];
    let mut fractions = Vec::new();
    match strategy {
        StepStrategy::Memoryless(probs) => check_strategy_keys(m, probs.keys())?,
        StepStrategy::Fractions { num, den } => {
            check_strategy_keys(m, num.keys())?;
            for &s in den.keys() {
                if s >= n {
                    return Err(ModelError::DimensionMismatch {
                        expected: n,
                        found: s + 1,
                    });
                }
            }
        }
    }
    for s in 0..n {
        let multi = m.avail(s).len() > 1;
        match strategy {
            StepStrategy::Fractions { num, den } if multi => {
                let d = den.get(&s).ok_or_else(|| missing(m, s, m.avail(s)[0]))?;
                let mut numerators = alloc::vec![Polynomial::zero(); n];
                for (a, row) in m.rows(s) {
                    let w = num.get(&(s, a)).ok_or_else(|| missing(m, s, a))?;
                    let flow = w * &x[s];
                    for (i, p) in row.iter().enumerate() {
                        numerators[i] = &numerators[i] + &flow.scale(p);
                    }
                }
                fractions.push(FractionPart {
                    state: s,
                    den: d.clone(),
                    numerators,
                });
            }
            _ => {
                for (a, row) in m.rows(s) {
                    let flow = if multi {
                        let StepStrategy::Memoryless(probs) = strategy else {
                            unreachable!()
                        };
                        probs.get(&(s, a)).ok_or_else(|| missing(m, s, a))? * &x[s]
                    } else {
                        x[s].clone()
                    };
                    for (i, p) in row.iter().enumerate() {
                        base[i] = &base[i] + &flow.scale(p);
                    }
                }
            }
        }
    }
    Ok(Step { base, fractions })
}

/// Splits `c_0 + Σ c_i x_i` (template coefficients allowed) into
/// `(c_0, [c_i])`.
pub fn affine_parts(p: &Polynomial, n: usize) -> Option<(Polynomial, Vec<Polynomial>)> {
    if p.degree_in(VarId::is_state) > 1 {
        return None;
    }
    let mut groups = p.collect(VarId::is_state);
    let c0 = groups
        .remove(&crate::ring::Monomial::one())
        .unwrap_or_default();
    let mut coeffs = alloc::vec![Polynomial::zero(); n];
    for (m, c) in groups {
        match m.powers() {
            [(VarId::State(i), 1)] if *i < n => coeffs[*i] = c,
            _ => return None,
        }
    }
    Some((c0, coeffs))
}

/// Applies an affine conjunct to a polynomial step: substitutes `x_i` by
/// `step_i`.
pub fn apply_to_step(conjunct: &Polynomial, step: &[Polynomial]) -> Polynomial {
    let sigma: BTreeMap<VarId, Polynomial> = step
        .iter()
        .enumerate()
        .map(|(i, p)| (VarId::State(i), p.clone()))
        .collect();
    conjunct.substitute(&sigma)
}

/// Multiplies `c_0 + Σ_i c_i · step_i(x)` by the product `D(x)` of all
/// denominators, giving a polynomial that has the same sign wherever every
/// denominator is positive. Without fractions this is plain substitution.
pub fn clear_denominators(conjunct: &Polynomial, step: &Step) -> Result<Polynomial, BuildError> {
    let n = step.base.len();
    let (c0, coeffs) = affine_parts(conjunct, n)
        .ok_or_else(|| BuildError::NotAffine("invariant conjunct".into()))?;
    let dens: Vec<&Polynomial> = step.fractions.iter().map(|f| &f.den).collect();
    let product = |skip: Option<usize>| -> Polynomial {
        dens.iter()
            .enumerate()
            .filter(|&(k, _)| Some(k) != skip)
            .fold(Polynomial::one(), |acc, (_, d)| &acc * *d)
    };
    let weighted = |vals: &[Polynomial]| -> Polynomial {
        coeffs
            .iter()
            .zip(vals)
            .map(|(c, v)| c * v)
            .sum::<Polynomial>()
    };
    let mut out = &product(None) * &(&c0 + &weighted(&step.base));
    for (k, part) in step.fractions.iter().enumerate() {
        out = &out + &(&weighted(&part.numerators) * &product(Some(k)));
    }
    Ok(out)
}

/// Which elimination applies to an implication.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    Farkas,
    Handelman,
}

/// `∀x. (⋀ antecedent_j ≥ 0) ⇒ consequent ≥ 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Implication {
    pub label: String,
    pub antecedent: Vec<Polynomial>,
    pub consequent: Polynomial,
    pub route: Route,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundConstraint {
    pub label: String,
    pub poly: Polynomial,
    pub relation: Relation,
}

impl GroundConstraint {
    pub fn holds(&self, assignment: &BTreeMap<VarId, Rational>) -> Option<bool> {
        let v = self.poly.eval(assignment)?;
        Some(match self.relation {
            Relation::Ge => !v.is_negative(),
            Relation::Eq => num_traits::Zero::is_zero(&v),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintSystem {
    /// Existentially quantified variables, in variable order.
    pub variables: Vec<VarId>,
    pub ground: Vec<GroundConstraint>,
    pub implications: Vec<Implication>,
}

impl ConstraintSystem {
    fn collect_variables(&mut self) {
        let mut vars = BTreeSet::new();
        for g in &self.ground {
            vars.extend(g.poly.vars());
        }
        for imp in &self.implications {
            vars.extend(imp.consequent.vars());
            for a in &imp.antecedent {
                vars.extend(a.vars());
            }
        }
        self.variables = vars.into_iter().filter(|v| !v.is_state()).collect();
    }

    /// Canonical one-constraint-per-line listing.
    pub fn dump(&self, names: &dyn VarNames) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "; {} existential variables, {} ground constraints, {} implications",
            self.variables.len(),
            self.ground.len(),
            self.implications.len()
        );
        for g in &self.ground {
            let rel = match g.relation {
                Relation::Ge => ">=",
                Relation::Eq => "=",
            };
            let _ = writeln!(out, "{}: {} {} 0", g.label, g.poly.render(names), rel);
        }
        for imp in &self.implications {
            let route = match imp.route {
                Route::Farkas => "farkas",
                Route::Handelman => "handelman",
            };
            let ante: Vec<String> = imp
                .antecedent
                .iter()
                .map(|a| alloc::format!("{} >= 0", a.render(names)))
                .collect();
            let _ = writeln!(
                out,
                "{} [{}]: forall x. {} => {} >= 0",
                imp.label,
                route,
                ante.join(" /\\ "),
                imp.consequent.render(names)
            );
        }
        out
    }
}

/// Simplex facts `x_i ≥ 0`, `Σx − 1 ≥ 0`, `1 − Σx ≥ 0` followed by the
/// trivial fact `1 ≥ 0`.
pub fn simplex_facts(n: usize) -> Vec<Polynomial> {
    let xs = state_vector(n);
    let total: Polynomial = xs.iter().cloned().sum();
    let one = Polynomial::one();
    let mut out = xs;
    out.push(&total - &one);
    out.push(&one - &total);
    out.push(one);
    out
}

struct Builder<'a> {
    m: &'a Mdp,
    names: &'a dyn VarNames,
    ground: Vec<GroundConstraint>,
    implications: Vec<Implication>,
}

impl Builder<'_> {
    /// Constant constraints that hold are dropped; failing ones are kept so
    /// the system stays unsatisfiable.
    fn ground(&mut self, label: String, poly: Polynomial, relation: Relation) {
        if let Some(c) = poly.as_constant() {
            let ok = match relation {
                Relation::Ge => !c.is_negative(),
                Relation::Eq => num_traits::Zero::is_zero(&c),
            };
            if ok {
                return;
            }
        }
        self.ground.push(GroundConstraint {
            label,
            poly,
            relation,
        });
    }

    fn distribution(&mut self, label: &str, mu: &[Polynomial]) {
        for (i, p) in mu.iter().enumerate() {
            self.ground(
                alloc::format!("{label}.nonneg[{}]", i + 1),
                p.clone(),
                Relation::Ge,
            );
        }
        let total: Polynomial = mu.iter().cloned().sum();
        self.ground(
            alloc::format!("{label}.sum"),
            &total - &Polynomial::one(),
            Relation::Eq,
        );
    }

    fn in_safe_set(&mut self, label: &str, safe: &[Polynomial], mu: &[Polynomial]) {
        for (j, h) in safe.iter().enumerate() {
            self.ground(
                alloc::format!("{label}[{}]", j + 1),
                apply_to_step(h, mu),
                Relation::Ge,
            );
        }
    }

    fn memoryless_strategy(&mut self, label: &str, probs: &BTreeMap<(usize, usize), Polynomial>) {
        let mut by_state: BTreeMap<usize, Vec<&Polynomial>> = BTreeMap::new();
        for (&(s, _), p) in probs {
            self.ground(
                alloc::format!("{label}.nonneg[{}]", p.render(self.names)),
                p.clone(),
                Relation::Ge,
            );
            by_state.entry(s).or_default().push(p);
        }
        for (s, ps) in by_state {
            let total: Polynomial = ps.into_iter().cloned().sum();
            self.ground(
                alloc::format!("{label}.sum[{}]", self.m.state_name(s)),
                &total - &Polynomial::one(),
                Relation::Eq,
            );
        }
    }
}

/// Strategy variables of one unrolled step, for every multi-action state.
fn step_probabilities(m: &Mdp, step: usize) -> BTreeMap<(usize, usize), Polynomial> {
    m.multi_action_states()
        .flat_map(|s| m.avail(s).iter().map(move |&a| (s, a)))
        .map(|(s, a)| {
            (
                (s, a),
                Polynomial::var(VarId::StepProb {
                    step,
                    state: s,
                    action: a,
                }),
            )
        })
        .collect()
}

/// Builds the constraint system for `prob` from the templates `tpl`.
///
/// Memoryless mode keeps strategy constraints ground and routes every
/// implication through Farkas elimination. Distribution mode states the
/// strategy constraints as implications over the invariant and routes the
/// denominator-cleared inductiveness implications through Handelman
/// elimination.
pub fn build_system(
    prob: &SynthesisProblem,
    tpl: &TemplateSet,
) -> Result<ConstraintSystem, BuildError> {
    prob.validate()?;
    let m = &prob.mdp;
    let n = m.num_states();
    let names: &dyn VarNames = m;
    let mut b = Builder {
        m,
        names,
        ground: Vec::new(),
        implications: Vec::new(),
    };

    let xs = state_vector(n);
    let safe: Vec<Polynomial> = prob
        .safe
        .normalized()
        .iter()
        .map(|e| e.to_polynomial())
        .collect();
    let mut base_antecedent = tpl.invariant.clone();
    base_antecedent.extend(simplex_facts(n));
    base_antecedent.extend(
        crate::model::normalize_all(&prob.conservation_laws())
            .iter()
            .map(|e| e.to_polynomial()),
    );
    let mut inductive_antecedent = base_antecedent.clone();
    if prob.strengthen {
        inductive_antecedent.extend(safe.iter().cloned());
    }

    // Initial distribution, possibly symbolic.
    let mu0: Vec<Polynomial> = match (&prob.initial, &tpl.initial) {
        (InitialSpec::Fixed(mu), _) => mu
            .entries()
            .iter()
            .map(|p| Polynomial::constant(p.clone()))
            .collect(),
        (_, Some(vars)) => vars.clone(),
        (_, None) => (0..n).map(|i| Polynomial::var(VarId::Init(i))).collect(),
    };
    if !matches!(prob.initial, InitialSpec::Fixed(_)) {
        b.distribution("initial", &mu0);
    }
    if let InitialSpec::Constrained(cs) = &prob.initial {
        let exprs: Vec<Polynomial> = crate::model::normalize_all(cs)
            .iter()
            .map(|e| e.to_polynomial())
            .collect();
        for (j, e) in exprs.iter().enumerate() {
            b.ground(
                alloc::format!("initial.spec[{}]", j + 1),
                apply_to_step(e, &mu0),
                Relation::Ge,
            );
        }
    }

    if prob.fixpoint {
        let StrategyTemplate::Memoryless(probs) = &tpl.strategy else {
            return Err(BuildError::Model(ModelError::Invalid(
                "fixpoint search uses a memoryless strategy template".into(),
            )));
        };
        b.memoryless_strategy("strat", probs);
        b.in_safe_set("fix.safe", &safe, &mu0);
        let step = step_symbolic(m, StepStrategy::Memoryless(probs), &mu0)?;
        let next = step
            .polynomials()
            .expect("memoryless step has no fractions");
        for i in 0..n {
            b.ground(
                alloc::format!("fix.eq[{}]", i + 1),
                &mu0[i] - &next[i],
                Relation::Eq,
            );
        }
        return finish(b, prob, names);
    }

    // Unrolled prefix: the invariant only has to contain the distribution
    // reached after `unroll` steps.
    let mut current = mu0;
    for t in 0..prob.unroll {
        let probs = step_probabilities(m, t);
        b.memoryless_strategy(&alloc::format!("unroll{t}.strat"), &probs);
        b.in_safe_set(&alloc::format!("unroll{t}.safe"), &safe, &current);
        let step = step_symbolic(m, StepStrategy::Memoryless(&probs), &current)?;
        let next_vars: Vec<Polynomial> = (0..n)
            .map(|i| {
                Polynomial::var(VarId::Unrolled {
                    step: t + 1,
                    state: i,
                })
            })
            .collect();
        let next = step
            .polynomials()
            .expect("memoryless step has no fractions");
        for i in 0..n {
            b.ground(
                alloc::format!("unroll{}.eq[{}]", t + 1, i + 1),
                &next_vars[i] - &next[i],
                Relation::Eq,
            );
        }
        b.distribution(&alloc::format!("unroll{}.dist", t + 1), &next_vars);
        current = next_vars;
    }

    for (i, conj) in tpl.invariant.iter().enumerate() {
        b.ground(
            alloc::format!("init[{}]", i + 1),
            apply_to_step(conj, &current),
            Relation::Ge,
        );
    }

    match &tpl.strategy {
        StrategyTemplate::Memoryless(probs) => {
            b.memoryless_strategy("strat", probs);
            let step = step_symbolic(m, StepStrategy::Memoryless(probs), &xs)?;
            let next = step
                .polynomials()
                .expect("memoryless step has no fractions");
            for (i, conj) in tpl.invariant.iter().enumerate() {
                b.implications.push(Implication {
                    label: alloc::format!("inductive[{}]", i + 1),
                    antecedent: inductive_antecedent.clone(),
                    consequent: apply_to_step(conj, next),
                    route: Route::Farkas,
                });
            }
        }
        StrategyTemplate::Distribution { num, den } => {
            for (&s, d) in den {
                let sname = m.state_name(s);
                let mut total = Polynomial::zero();
                for &a in m.avail(s) {
                    let nu = num.get(&(s, a)).ok_or_else(|| missing(m, s, a))?;
                    total = &total + nu;
                    b.implications.push(Implication {
                        label: alloc::format!("strat.num[{},{}]", sname, m.action_name(a)),
                        antecedent: base_antecedent.clone(),
                        consequent: nu.clone(),
                        route: Route::Farkas,
                    });
                }
                b.implications.push(Implication {
                    label: alloc::format!("strat.den[{sname}]"),
                    antecedent: base_antecedent.clone(),
                    consequent: d - &Polynomial::one(),
                    route: Route::Farkas,
                });
                b.implications.push(Implication {
                    label: alloc::format!("strat.sum[{sname}].ge"),
                    antecedent: base_antecedent.clone(),
                    consequent: &total - d,
                    route: Route::Farkas,
                });
                b.implications.push(Implication {
                    label: alloc::format!("strat.sum[{sname}].le"),
                    antecedent: base_antecedent.clone(),
                    consequent: d - &total,
                    route: Route::Farkas,
                });
            }
            let step = step_symbolic(m, StepStrategy::Fractions { num, den }, &xs)?;
            for (i, conj) in tpl.invariant.iter().enumerate() {
                let consequent = clear_denominators(conj, &step)?;
                let route = if consequent.degree_in(VarId::is_state) > 1 {
                    Route::Handelman
                } else {
                    Route::Farkas
                };
                b.implications.push(Implication {
                    label: alloc::format!("inductive[{}]", i + 1),
                    antecedent: inductive_antecedent.clone(),
                    consequent,
                    route,
                });
            }
        }
    }

    for (j, h) in safe.iter().enumerate() {
        b.implications.push(Implication {
            label: alloc::format!("safe[{}]", j + 1),
            antecedent: base_antecedent.clone(),
            consequent: h.clone(),
            route: Route::Farkas,
        });
    }

    finish(b, prob, names)
}

fn finish(
    b: Builder<'_>,
    prob: &SynthesisProblem,
    names: &dyn VarNames,
) -> Result<ConstraintSystem, BuildError> {
    let mut sys = ConstraintSystem {
        variables: Vec::new(),
        ground: b.ground,
        implications: b.implications,
    };
    sys.collect_variables();
    if !prob.hints.is_empty() {
        let by_name: BTreeMap<String, VarId> =
            sys.variables.iter().map(|&v| (names.name(v), v)).collect();
        for (name, value) in &prob.hints {
            let v = *by_name
                .get(name)
                .ok_or_else(|| BuildError::UnknownHint(name.clone()))?;
            sys.ground.push(GroundConstraint {
                label: alloc::format!("hint[{name}]"),
                poly: &Polynomial::var(v) - &Polynomial::constant(value.clone()),
                relation: Relation::Eq,
            });
        }
    }
    Ok(sys)
}

/// Renders a hint map for reports.
pub fn format_hints(hints: &BTreeMap<String, Rational>) -> String {
    let parts: Vec<String> = hints
        .iter()
        .map(|(k, v)| alloc::format!("{k}={}", format_rational(v)))
        .collect();
    parts.join(",")
}

/// Convenience: the constant-probability map of a concrete memoryless
/// strategy, for use with [`StepStrategy::Memoryless`].
pub fn constant_probabilities(
    table: &BTreeMap<(usize, usize), Rational>,
) -> BTreeMap<(usize, usize), Polynomial> {
    table
        .iter()
        .map(|(&k, v)| (k, Polynomial::constant(v.clone())))
        .collect()
}

/// Is every row of the memoryless map a distribution over the available
/// actions of its state?
pub fn rows_sum_to_one(m: &Mdp, table: &BTreeMap<(usize, usize), Rational>) -> bool {
    m.multi_action_states().all(|s| {
        let total: Rational = m.avail(s).iter().filter_map(|&a| table.get(&(s, a))).sum();
        total.is_one()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{builtin_fixture, fixtures};
    use crate::rational::{int, rat};

    fn x(i: usize) -> Polynomial {
        Polynomial::var(VarId::State(i))
    }

    #[test]
    fn running_concrete_step_matches_hand_recurrence() {
        let m = fixtures::running_mdp();
        let mut table = BTreeMap::new();
        table.insert((0, 0), int(0));
        table.insert((0, 1), int(1));
        let probs = constant_probabilities(&table);
        let step = step_symbolic(&m, StepStrategy::Memoryless(&probs), &state_vector(3)).unwrap();
        let next = step.polynomials().unwrap();
        assert_eq!(next[0], x(2).scale(&rat(1, 2)));
        assert_eq!(next[1], x(0));
        assert_eq!(next[2], &x(1) + &x(2).scale(&rat(1, 2)));
    }

    #[test]
    fn self_loop_step_is_identity() {
        let m = Mdp::new(
            alloc::vec!["s".into()],
            alloc::vec!["go".into()],
            alloc::vec![alloc::vec![(
                "go".into(),
                alloc::vec![("s".into(), Rational::one())]
            )]],
        )
        .unwrap();
        let step = step_symbolic(
            &m,
            StepStrategy::Memoryless(&BTreeMap::new()),
            &state_vector(1),
        )
        .unwrap();
        assert_eq!(step.polynomials().unwrap(), &[x(0)]);
    }

    #[test]
    fn symbolic_mass_defect_is_row_sum_defect() {
        let prob = builtin_fixture("running").unwrap();
        let tpl = TemplateSet::new(&prob);
        let StrategyTemplate::Memoryless(probs) = &tpl.strategy else {
            panic!()
        };
        let step =
            step_symbolic(&prob.mdp, StepStrategy::Memoryless(probs), &state_vector(3)).unwrap();
        let next = step.polynomials().unwrap();
        let pa = Polynomial::var(VarId::Prob {
            state: 0,
            action: 0,
        });
        let pb = Polynomial::var(VarId::Prob {
            state: 0,
            action: 1,
        });
        assert_eq!(next[0], &(&pa * &x(0)) + &x(2).scale(&rat(1, 2)));
        let defect = &next.iter().cloned().sum::<Polynomial>()
            - &state_vector(3).into_iter().sum::<Polynomial>();
        assert_eq!(defect, &(&(&pa + &pb) - &Polynomial::one()) * &x(0));
    }

    #[test]
    fn unavailable_action_is_rejected() {
        let m = fixtures::running_mdp();
        let mut probs = BTreeMap::new();
        probs.insert((1, 0), Polynomial::one());
        let err =
            step_symbolic(&m, StepStrategy::Memoryless(&probs), &state_vector(3)).unwrap_err();
        assert!(matches!(err, ModelError::UnavailableAction { .. }));
    }

    #[test]
    fn no_fractions_means_no_denominator() {
        let m = fixtures::chain_mdp();
        let step = step_symbolic(
            &m,
            StepStrategy::Memoryless(&BTreeMap::new()),
            &state_vector(10),
        )
        .unwrap();
        let conj = &x(9) - &Polynomial::constant(rat(1, 10));
        let cleared = clear_denominators(&conj, &step).unwrap();
        assert_eq!(cleared, apply_to_step(&conj, step.polynomials().unwrap()));
        assert_eq!(cleared.degree_in(VarId::is_state), 1);
    }

    #[test]
    fn running_ex1_system_has_four_groups() {
        let mut prob = builtin_fixture("running").unwrap();
        prob.invariant_size = 1;
        let tpl = TemplateSet::new(&prob);
        let sys = build_system(&prob, &tpl).unwrap();
        let labels: Vec<&str> = sys.ground.iter().map(|g| g.label.as_str()).collect();
        assert_eq!(
            labels,
            [
                "init[1]",
                "strat.nonneg[p_A_a]",
                "strat.nonneg[p_A_b]",
                "strat.sum[A]"
            ]
        );
        let imp: Vec<&str> = sys.implications.iter().map(|i| i.label.as_str()).collect();
        assert_eq!(imp, ["inductive[1]", "safe[1]"]);
        // Template variables: a1_0, a1_A, a1_B, a1_C, p_A_a, p_A_b.
        assert_eq!(sys.variables.len(), 6);
        // Initial constraint is c0 + c1/3 + c2/3 + c3/3.
        let init = &sys.ground[0].poly;
        assert_eq!(init.num_terms(), 4);
        assert_eq!(init.constant_term(), int(0));
        // Antecedents: invariant, three x_i >= 0, two sum facts, trivial, H.
        assert_eq!(sys.implications[0].antecedent.len(), 1 + 3 + 2 + 1 + 1);
        assert_eq!(sys.implications[1].antecedent.len(), 1 + 3 + 2 + 1);
        assert!(sys.implications.iter().all(|i| i.route == Route::Farkas));
    }

    #[test]
    fn empty_invariant_template() {
        let mut prob = builtin_fixture("running").unwrap();
        prob.invariant_size = 0;
        let sys = build_system(&prob, &TemplateSet::new(&prob)).unwrap();
        assert!(sys.ground.iter().all(|g| !g.label.starts_with("init")));
        assert!(sys.implications.iter().all(|i| i.label.starts_with("safe")));
        assert_eq!(sys.implications[0].antecedent, simplex_facts(3));
    }

    #[test]
    fn distribution_mode_clears_denominators() {
        let prob = builtin_fixture("running-ex2").unwrap();
        let sys = build_system(&prob, &TemplateSet::new(&prob)).unwrap();
        let inductive: Vec<&Implication> = sys
            .implications
            .iter()
            .filter(|i| i.label.starts_with("inductive"))
            .collect();
        assert_eq!(inductive.len(), 3);
        for imp in inductive {
            assert_eq!(imp.route, Route::Handelman);
            assert_eq!(imp.consequent.degree_in(VarId::is_state), 2);
        }
        let strat = sys
            .implications
            .iter()
            .filter(|i| i.label.starts_with("strat"))
            .count();
        assert_eq!(strat, 2 + 1 + 2);
    }

    #[test]
    fn hints_become_equations() {
        let mut prob = builtin_fixture("running").unwrap();
        prob.hints.insert("p_A_b".into(), Rational::one());
        let sys = build_system(&prob, &TemplateSet::new(&prob)).unwrap();
        let hint = sys.ground.last().unwrap();
        assert_eq!(hint.label, "hint[p_A_b]");
        assert_eq!(hint.relation, Relation::Eq);

        prob.hints.insert("nope".into(), Rational::one());
        assert!(matches!(
            build_system(&prob, &TemplateSet::new(&prob)),
            Err(BuildError::UnknownHint(_))
        ));
    }

    #[test]
    fn unroll_zero_is_plain_build() {
        let prob = builtin_fixture("split").unwrap();
        let tpl = TemplateSet::new(&prob);
        let a = build_system(&prob, &tpl).unwrap();
        let mut prob0 = prob.clone();
        prob0.unroll = 0;
        assert_eq!(a, build_system(&prob0, &tpl).unwrap());
    }
}
