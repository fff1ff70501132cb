//! SMT-LIB2 emission, model parsing and exact re-validation.
//!
//! The crate never runs a solver itself. An [`SmtBackend`] receives a
//! complete script and returns the raw verdict and `get-value` text;
//! [`solve`] turns that into a [`SolveOutcome`] and only reports `Sat` when
//! the parsed model satisfies every constraint in exact arithmetic.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::fmt::Write as _;

use num_traits::{One, Signed, Zero};

use crate::qelim::ExistentialSystem;
use crate::rational::{parse_rational, Rational};
use crate::ring::{Polynomial, VarId, VarNames};

/// Relation of a ground atom `poly ⋈ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Cmp {
    Ge,
    Gt,
    Eq,
}

impl Cmp {
    pub fn symbol(self) -> &'static str {
        match self {
            Cmp::Ge => ">=",
            Cmp::Gt => ">",
            Cmp::Eq => "=",
        }
    }

    pub fn holds(self, v: &Rational) -> bool {
        match self {
            Cmp::Ge => !v.is_negative(),
            Cmp::Gt => v.is_positive(),
            Cmp::Eq => v.is_zero(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Logic {
    QfNra,
    QfLra,
}

impl Logic {
    pub fn as_str(self) -> &'static str {
        match self {
            Logic::QfNra => "QF_NRA",
            Logic::QfLra => "QF_LRA",
        }
    }
}

/// Quotes a symbol unless it is a valid simple symbol.
pub fn symbol(name: &str) -> String {
    let simple = !name.is_empty()
        && !name.as_bytes()[0].is_ascii_digit()
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || "~!@$%^&*_-+=<>.?/".contains(c));
    if simple {
        name.to_string()
    } else {
        alloc::format!("|{name}|")
    }
}

fn literal(r: &Rational) -> String {
    debug_assert!(!r.is_negative());
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        alloc::format!("(/ {} {})", r.numer(), r.denom())
    }
}

fn term_sexpr(coeff: &Rational, m: &crate::ring::Monomial, names: &dyn VarNames) -> String {
    let mut factors = Vec::new();
    if !coeff.is_one() || m.is_one() {
        factors.push(literal(coeff));
    }
    for &(v, e) in m.powers() {
        let s = symbol(&names.name(v));
        for _ in 0..e {
            factors.push(s.clone());
        }
    }
    if factors.len() == 1 {
        factors.pop().unwrap()
    } else {
        alloc::format!("(* {})", factors.join(" "))
    }
}

fn sum_sexpr(mut parts: Vec<String>) -> String {
    if parts.len() == 1 {
        parts.pop().unwrap()
    } else {
        alloc::format!("(+ {})", parts.join(" "))
    }
}

/// SMT-LIB2 term of a polynomial: positive terms summed, negative terms
/// subtracted, highest monomial first.
pub fn poly_sexpr(p: &Polynomial, names: &dyn VarNames) -> String {
    if p.is_zero() {
        return String::from("0");
    }
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for (m, c) in p.terms().rev() {
        if c.is_negative() {
            neg.push(term_sexpr(&c.abs(), m, names));
        } else {
            pos.push(term_sexpr(c, m, names));
        }
    }
    match (pos.is_empty(), neg.is_empty()) {
        (_, true) => sum_sexpr(pos),
        (true, false) => alloc::format!("(- {})", sum_sexpr(neg)),
        (false, false) => alloc::format!("(- {} {})", sum_sexpr(pos), neg.join(" ")),
    }
}

/// Complete SMT-LIB2 script: logic, declarations in system order, one
/// assertion per constraint, `check-sat` and a `get-value` over all
/// variables. Output depends only on the system.
pub fn emit_smt(sys: &ExistentialSystem, logic: Logic, names: &dyn VarNames) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "(set-option :produce-models true)");
    let _ = writeln!(out, "(set-logic {})", logic.as_str());
    let syms: Vec<String> = sys
        .variables
        .iter()
        .map(|&v| symbol(&names.name(v)))
        .collect();
    for s in &syms {
        let _ = writeln!(out, "(declare-fun {s} () Real)");
    }
    for c in &sys.constraints {
        let _ = writeln!(
            out,
            "(assert ({} {} 0))",
            c.cmp.symbol(),
            poly_sexpr(&c.poly, names)
        );
    }
    let _ = writeln!(out, "(check-sat)");
    if !syms.is_empty() {
        let _ = writeln!(out, "(get-value ({}))", syms.join(" "));
    }
    let _ = writeln!(out, "(exit)");
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SexpError(pub String);

impl fmt::Display for SexpError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "malformed s-expression: {}", self.0)
    }
}

impl core::error::Error for SexpError {}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

/// Parses a sequence of s-expressions. `|quoted|` symbols keep their
/// content without the bars.
pub fn parse_sexps(text: &str) -> Result<Vec<Sexp>, SexpError> {
    let mut stack: Vec<Vec<Sexp>> = alloc::vec![Vec::new()];
    let mut chars = text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        match c {
            '(' => stack.push(Vec::new()),
            ')' => {
                let done = stack
                    .pop()
                    .ok_or_else(|| SexpError("unbalanced `)`".into()))?;
                stack
                    .last_mut()
                    .ok_or_else(|| SexpError(alloc::format!("unbalanced `)` at offset {i}")))?
                    .push(Sexp::List(done));
            }
            ';' => {
                for (_, c2) in chars.by_ref() {
                    if c2 == '\n' {
                        break;
                    }
                }
            }
            '|' => {
                let mut s = String::new();
                loop {
                    match chars.next() {
                        Some((_, '|')) => break,
                        Some((_, c2)) => s.push(c2),
                        None => return Err(SexpError("unterminated `|` symbol".into())),
                    }
                }
                stack.last_mut().unwrap().push(Sexp::Atom(s));
            }
            '"' => {
                let mut s = String::new();
                loop {
                    match chars.next() {
                        Some((_, '"')) => {
                            if matches!(chars.peek(), Some((_, '"'))) {
                                chars.next();
                                s.push('"');
                            } else {
                                break;
                            }
                        }
                        Some((_, c2)) => s.push(c2),
                        None => return Err(SexpError("unterminated string".into())),
                    }
                }
                stack.last_mut().unwrap().push(Sexp::Atom(s));
            }
            c if c.is_whitespace() => {}
            _ => {
                let mut s = String::new();
                s.push(c);
                while let Some(&(_, c2)) = chars.peek() {
                    if c2.is_whitespace() || c2 == '(' || c2 == ')' || c2 == ';' {
                        break;
                    }
                    s.push(c2);
                    chars.next();
                }
                stack.last_mut().unwrap().push(Sexp::Atom(s));
            }
        }
    }
    if stack.len() != 1 {
        return Err(SexpError("unbalanced `(`".into()));
    }
    Ok(stack.pop().unwrap())
}

/// A value from a model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModelValue {
    Rational(Rational),
    /// Algebraic numbers (`root-obj`, irrational) and other forms that have
    /// no exact rational reading.
    NonRational,
}

fn eval_value(e: &Sexp) -> Result<ModelValue, SexpError> {
    use ModelValue::*;
    match e {
        Sexp::Atom(a) => parse_rational(a)
            .map(Rational)
            .map_err(|_| SexpError(alloc::format!("not a number: `{a}`"))),
        Sexp::List(items) => {
            let (head, args) = match items.split_first() {
                Some((Sexp::Atom(h), args)) => (h.as_str(), args),
                _ => return Err(SexpError("expected an operator".into())),
            };
            let mut vals = Vec::with_capacity(args.len());
            match head {
                "/" | "-" | "+" | "*" => {
                    for a in args {
                        match eval_value(a)? {
                            Rational(r) => vals.push(r),
                            NonRational => return Ok(NonRational),
                        }
                    }
                }
                "root-obj" | "_" | "irrational" | "algebraic" => return Ok(NonRational),
                other => return Err(SexpError(alloc::format!("unsupported operator `{other}`"))),
            }
            let first = vals
                .first()
                .cloned()
                .ok_or_else(|| SexpError(alloc::format!("`{head}` without arguments")))?;
            let rest = &vals[1..];
            Ok(Rational(match head {
                "-" if rest.is_empty() => -first,
                "-" => rest.iter().fold(first, |acc, v| acc - v),
                "+" => rest.iter().fold(first, |acc, v| acc + v),
                "*" => rest.iter().fold(first, |acc, v| acc * v),
                _ => {
                    let mut acc = first;
                    for v in rest {
                        if v.is_zero() {
                            return Err(SexpError("division by zero".into()));
                        }
                        acc /= v;
                    }
                    acc
                }
            }))
        }
    }
}

/// Reads one value of a `get-value` response: numerals, decimals,
/// `(/ p q)`, `(- v)` and nesting thereof.
pub fn parse_value(text: &str) -> Result<ModelValue, SexpError> {
    let exprs = parse_sexps(text)?;
    match exprs.as_slice() {
        [e] => eval_value(e),
        _ => Err(SexpError(alloc::format!(
            "expected exactly one value in `{text}`"
        ))),
    }
}

/// Reads a whole `get-value` response `((name value) ...)`.
pub fn parse_get_value(text: &str) -> Result<Vec<(String, ModelValue)>, SexpError> {
    let exprs = parse_sexps(text)?;
    let mut out = Vec::new();
    for e in exprs {
        let Sexp::List(pairs) = e else {
            return Err(SexpError("expected a list of (name value) pairs".into()));
        };
        for p in pairs {
            match p {
                Sexp::List(kv) if kv.len() == 2 => {
                    let Sexp::Atom(name) = &kv[0] else {
                        return Err(SexpError("expected a symbol".into()));
                    };
                    out.push((name.clone(), eval_value(&kv[1])?));
                }
                _ => return Err(SexpError("expected a (name value) pair".into())),
            }
        }
    }
    Ok(out)
}

/// What a backend saw the solver answer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RawResponse {
    /// `sat`, with the text printed for `get-value`.
    Sat(String),
    Unsat,
    Unknown(String),
    Timeout,
    Error(String),
}

/// Something that can run an SMT-LIB2 script to completion.
pub trait SmtBackend {
    fn run(&self, script: &str) -> RawResponse;

    /// Human-readable description (solver argv, timeout) for reports.
    fn describe(&self) -> String {
        String::from("smt backend")
    }
}

impl<B: SmtBackend + ?Sized> SmtBackend for &B {
    fn run(&self, script: &str) -> RawResponse {
        (**self).run(script)
    }
    fn describe(&self) -> String {
        (**self).describe()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolveOutcome {
    Sat(BTreeMap<VarId, Rational>),
    Unsat,
    Unknown(String),
    Timeout,
    SolverError(String),
}

impl SolveOutcome {
    pub fn verdict(&self) -> &'static str {
        match self {
            SolveOutcome::Sat(_) => "sat",
            SolveOutcome::Unsat => "unsat",
            SolveOutcome::Unknown(_) => "unknown",
            SolveOutcome::Timeout => "timeout",
            SolveOutcome::SolverError(_) => "error",
        }
    }
}

/// Index of the first constraint violated by `model`, if any.
pub fn first_violation(
    sys: &ExistentialSystem,
    model: &BTreeMap<VarId, Rational>,
) -> Option<usize> {
    sys.constraints
        .iter()
        .position(|c| match c.poly.eval(model) {
            Some(v) => !c.cmp.holds(&v),
            None => true,
        })
}

/// Emits `sys`, runs it on `backend` and re-validates any model exactly.
pub fn solve(
    sys: &ExistentialSystem,
    logic: Logic,
    names: &dyn VarNames,
    backend: &dyn SmtBackend,
) -> SolveOutcome {
    let script = emit_smt(sys, logic, names);
    match backend.run(&script) {
        RawResponse::Sat(values) => interpret_model(sys, names, &values),
        RawResponse::Unsat => SolveOutcome::Unsat,
        RawResponse::Unknown(why) => SolveOutcome::Unknown(why),
        RawResponse::Timeout => SolveOutcome::Timeout,
        RawResponse::Error(e) => SolveOutcome::SolverError(e),
    }
}

/// Maps a `get-value` response back to variables and checks it.
pub fn interpret_model(
    sys: &ExistentialSystem,
    names: &dyn VarNames,
    values: &str,
) -> SolveOutcome {
    let by_name: BTreeMap<String, VarId> =
        sys.variables.iter().map(|&v| (names.name(v), v)).collect();
    let pairs = match parse_get_value(values) {
        Ok(p) => p,
        Err(e) => return SolveOutcome::SolverError(alloc::format!("{e}")),
    };
    let mut model = BTreeMap::new();
    for (name, value) in pairs {
        let Some(&v) = by_name.get(&name) else {
            continue;
        };
        match value {
            ModelValue::Rational(r) => {
                model.insert(v, r);
            }
            ModelValue::NonRational => {
                return SolveOutcome::Unknown(String::from("non-rational model"));
            }
        }
    }
    if let Some(v) = sys.variables.iter().find(|v| !model.contains_key(v)) {
        return SolveOutcome::SolverError(alloc::format!(
            "model does not assign `{}`",
            names.name(*v)
        ));
    }
    if let Some(i) = first_violation(sys, &model) {
        return SolveOutcome::Unknown(alloc::format!(
            "model fails exact re-validation of `{}`",
            sys.constraints[i].label
        ));
    }
    SolveOutcome::Sat(model)
}

/// A backend that always answers the same; for tests and offline use.
pub struct FixedResponse(pub RawResponse);

impl SmtBackend for FixedResponse {
    fn run(&self, _script: &str) -> RawResponse {
        self.0.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qelim::ExConstraint;
    use crate::rational::{int, rat};
    use crate::ring::PlainNames;

    struct Y;
    impl VarNames for Y {
        fn name(&self, _v: VarId) -> String {
            "y".into()
        }
    }

    fn yvar() -> VarId {
        VarId::Mult { group: 0, index: 0 }
    }

    fn small_system(offset: Rational) -> ExistentialSystem {
        let y = Polynomial::var(yvar());
        ExistentialSystem {
            variables: alloc::vec![yvar()],
            constraints: alloc::vec![
                ExConstraint::new("nonneg", y.clone(), Cmp::Ge),
                ExConstraint::new("eq", &y - &Polynomial::constant(offset), Cmp::Eq),
            ],
        }
    }

    #[test]
    fn emits_expected_forms() {
        let script = emit_smt(&small_system(rat(1, 2)), Logic::QfNra, &Y);
        assert!(script.contains("(set-logic QF_NRA)"));
        assert!(script.contains("(declare-fun y () Real)"));
        assert!(script.contains("(assert (>= y 0))"));
        assert!(script.contains("(assert (= (- y (/ 1 2)) 0))"));
        assert!(script.contains("(get-value (y))"));
    }

    #[test]
    fn empty_system_only_checks() {
        let script = emit_smt(&ExistentialSystem::default(), Logic::QfLra, &PlainNames);
        assert!(script.contains("(check-sat)"));
        assert!(!script.contains("get-value"));
        assert!(!script.contains("assert"));
    }

    #[test]
    fn polynomial_terms() {
        let x = Polynomial::var(VarId::State(0));
        let p = &(&x.pow(2).scale(&int(3)) - &x) - &Polynomial::one();
        assert_eq!(poly_sexpr(&p, &PlainNames), "(- (* 3 x0 x0) x0 1)");
        assert_eq!(poly_sexpr(&(-&x), &PlainNames), "(- x0)");
        assert_eq!(symbol("1abc"), "|1abc|");
        assert_eq!(symbol("a1_0"), "a1_0");
    }

    #[test]
    fn value_forms() {
        assert_eq!(
            parse_value("(/ 1 3)").unwrap(),
            ModelValue::Rational(rat(1, 3))
        );
        assert_eq!(
            parse_value("(- (/ 1 4))").unwrap(),
            ModelValue::Rational(rat(-1, 4))
        );
        assert_eq!(
            parse_value("(/ 1.0 4.0)").unwrap(),
            ModelValue::Rational(rat(1, 4))
        );
        assert_eq!(
            parse_value("(- 2.5)").unwrap(),
            ModelValue::Rational(rat(-5, 2))
        );
        assert_eq!(parse_value("7").unwrap(), ModelValue::Rational(int(7)));
        assert_eq!(
            parse_value("(root-obj (+ (^ x 2) (- 2)) 1)").unwrap(),
            ModelValue::NonRational
        );
        assert!(parse_value("(/ 1 3").is_err());
        assert!(parse_value("(foo 1)").is_err());
    }

    #[test]
    fn get_value_response() {
        let pairs = parse_get_value("((y (/ 1 2))\n (|x A| (- 1.0)))").unwrap();
        assert_eq!(pairs[0], ("y".into(), ModelValue::Rational(rat(1, 2))));
        assert_eq!(pairs[1], ("x A".into(), ModelValue::Rational(int(-1))));
    }

    #[test]
    fn sat_is_revalidated() {
        let sys = small_system(rat(1, 2));
        let ok = solve(
            &sys,
            Logic::QfNra,
            &Y,
            &FixedResponse(RawResponse::Sat("((y (/ 1 2)))".into())),
        );
        assert_eq!(
            ok,
            SolveOutcome::Sat([(yvar(), rat(1, 2))].into_iter().collect())
        );
        let wrong = solve(
            &sys,
            Logic::QfNra,
            &Y,
            &FixedResponse(RawResponse::Sat("((y 0.5000001))".into())),
        );
        assert!(matches!(wrong, SolveOutcome::Unknown(_)));
        let irrational = solve(
            &sys,
            Logic::QfNra,
            &Y,
            &FixedResponse(RawResponse::Sat(
                "((y (root-obj (+ (^ x 2) (- 2)) 1)))".into(),
            )),
        );
        assert_eq!(
            irrational,
            SolveOutcome::Unknown("non-rational model".into())
        );
        let missing = solve(
            &sys,
            Logic::QfNra,
            &Y,
            &FixedResponse(RawResponse::Sat("()".into())),
        );
        assert!(matches!(missing, SolveOutcome::SolverError(_)));
    }
}
