//! Multivariate polynomials with exact rational coefficients over a single
//! flat variable space.
//!
//! State variables, template unknowns and multipliers all live in the same
//! ring. "Affine in x with template coefficients" is not a separate type; it
//! is a view obtained with [`Polynomial::collect`].

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt::Write as _;
use core::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Signed, Zero};

use crate::rational::{format_rational, Rational};

/// Coefficient slot of a symbolic affine form: the constant term, or the
/// coefficient of one state variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Slot {
    Const,
    State(usize),
}

/// A variable of the ring.
///
/// The derived order is the variable order used everywhere (monomial order,
/// SMT declarations, dumps); it only depends on indices, so equal problems
/// yield equal orders.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VarId {
    /// Probability mass of state `i`; the universally quantified variables.
    State(usize),
    /// Coefficient of invariant conjunct `conj`.
    Inv { conj: usize, slot: Slot },
    /// Memoryless probability of playing `action` in `state`.
    Prob { state: usize, action: usize },
    /// Coefficient of the numerator affine form of (`state`, `action`).
    Num {
        state: usize,
        action: usize,
        slot: Slot,
    },
    /// Coefficient of the denominator affine form of `state`.
    Den { state: usize, slot: Slot },
    /// Initial probability of `state` when the initial distribution is unknown.
    Init(usize),
    /// Probability of `state` at unrolled step `step` (1-based).
    Unrolled { step: usize, state: usize },
    /// One-step strategy used at unrolled step `step` (0-based).
    StepProb {
        step: usize,
        state: usize,
        action: usize,
    },
    /// Multiplier `index` of elimination group `group`.
    Mult { group: usize, index: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarKind {
    State,
    Template,
    Multiplier,
}

impl VarId {
    pub fn kind(self) -> VarKind {
        match self {
            VarId::State(_) => VarKind::State,
            VarId::Mult { .. } => VarKind::Multiplier,
            _ => VarKind::Template,
        }
    }

    pub fn is_state(self) -> bool {
        matches!(self, VarId::State(_))
    }
}

/// Maps variables to printable names. Names must be injective for dumps to
/// be unambiguous.
pub trait VarNames {
    fn name(&self, var: VarId) -> String;
}

/// Index-based fallback naming.
pub struct PlainNames;

impl VarNames for PlainNames {
    fn name(&self, var: VarId) -> String {
        fn slot(s: Slot) -> String {
            match s {
                Slot::Const => String::from("0"),
                Slot::State(i) => alloc::format!("x{i}"),
            }
        }
        match var {
            VarId::State(i) => alloc::format!("x{i}"),
            VarId::Inv { conj, slot: s } => alloc::format!("a{conj}_{}", slot(s)),
            VarId::Prob { state, action } => alloc::format!("p_{state}_{action}"),
            VarId::Num {
                state,
                action,
                slot: s,
            } => {
                alloc::format!("r_{state}_{action}_{}", slot(s))
            }
            VarId::Den { state, slot: s } => alloc::format!("s_{state}_{}", slot(s)),
            VarId::Init(i) => alloc::format!("mu0_{i}"),
            VarId::Unrolled { step, state } => alloc::format!("mu{step}_{state}"),
            VarId::StepProb {
                step,
                state,
                action,
            } => alloc::format!("q{step}_{state}_{action}"),
            VarId::Mult { group, index } => alloc::format!("y{group}_{index}"),
        }
    }
}

/// A power product, stored as strictly increasing variables with positive
/// exponents.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Monomial(Vec<(VarId, u32)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn var(v: VarId) -> Self {
        Monomial(alloc::vec![(v, 1)])
    }

    pub fn from_powers(powers: impl IntoIterator<Item = (VarId, u32)>) -> Self {
        let mut map: BTreeMap<VarId, u32> = BTreeMap::new();
        for (v, e) in powers {
            *map.entry(v).or_default() += e;
        }
        Monomial(map.into_iter().filter(|&(_, e)| e > 0).collect())
    }

    pub fn powers(&self) -> &[(VarId, u32)] {
        &self.0
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|&(_, e)| e).sum()
    }

    pub fn degree_in(&self, pred: impl Fn(VarId) -> bool) -> u32 {
        self.0
            .iter()
            .filter(|&&(v, _)| pred(v))
            .map(|&(_, e)| e)
            .sum()
    }

    /// Splits into the part over variables selected by `pred` and the rest.
    pub fn split(&self, pred: impl Fn(VarId) -> bool) -> (Monomial, Monomial) {
        let (inside, outside): (Vec<_>, Vec<_>) = self.0.iter().partition(|&&(v, _)| pred(v));
        (Monomial(inside), Monomial(outside))
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            let (a, ea) = self.0[i];
            let (b, eb) = other.0[j];
            match a.cmp(&b) {
                Ordering::Less => {
                    out.push((a, ea));
                    i += 1;
                }
                Ordering::Greater => {
                    out.push((b, eb));
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((a, ea + eb));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&other.0[j..]);
        Monomial(out)
    }

    pub fn vars(&self) -> impl Iterator<Item = VarId> + '_ {
        self.0.iter().map(|&(v, _)| v)
    }

    pub fn render(&self, names: &dyn VarNames) -> String {
        if self.0.is_empty() {
            return String::from("1");
        }
        let mut out = String::new();
        for (k, &(v, e)) in self.0.iter().enumerate() {
            if k > 0 {
                out.push('*');
            }
            out.push_str(&names.name(v));
            if e > 1 {
                let _ = write!(out, "^{e}");
            }
        }
        out
    }
}

/// Graded lexicographic order: total degree first, then the earlier variable
/// with the larger exponent wins.
impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        match self.degree().cmp(&other.degree()) {
            Ordering::Equal => {}
            ord => return ord,
        }
        for (&(a, ea), &(b, eb)) in self.0.iter().zip(other.0.iter()) {
            match a.cmp(&b) {
                Ordering::Less => return Ordering::Greater,
                Ordering::Greater => return Ordering::Less,
                Ordering::Equal => match ea.cmp(&eb) {
                    Ordering::Equal => {}
                    ord => return ord,
                },
            }
        }
        self.0.len().cmp(&other.0.len())
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Polynomial with exact rational coefficients; zero coefficients are never
/// stored, so structural equality is semantic equality.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Polynomial {
    terms: BTreeMap<Monomial, Rational>,
}

impl Polynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(Rational::one())
    }

    pub fn constant(c: Rational) -> Self {
        Self::term(c, Monomial::one())
    }

    pub fn var(v: VarId) -> Self {
        Self::term(Rational::one(), Monomial::var(v))
    }

    pub fn term(c: Rational, m: Monomial) -> Self {
        let mut p = Self::zero();
        p.add_term(m, c);
        p
    }

    /// `constant + Σ coeffs[i]·State(i)`.
    pub fn affine_in_states(constant: &Rational, coeffs: &[Rational]) -> Self {
        let mut p = Self::constant(constant.clone());
        for (i, c) in coeffs.iter().enumerate() {
            p.add_term(Monomial::var(VarId::State(i)), c.clone());
        }
        p
    }

    pub fn add_term(&mut self, m: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            alloc::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            alloc::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// The value if the polynomial is constant.
    pub fn as_constant(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => self.terms.get(&Monomial::one()).cloned(),
            _ => None,
        }
    }

    pub fn coefficient(&self, m: &Monomial) -> Rational {
        self.terms.get(m).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn constant_term(&self) -> Rational {
        self.coefficient(&Monomial::one())
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Polynomial {
            terms: self.terms.iter().map(|(m, k)| (m.clone(), k * c)).collect(),
        }
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    /// Total degree restricted to the variables selected by `pred`.
    pub fn degree_in(&self, pred: impl Fn(VarId) -> bool) -> u32 {
        self.terms
            .keys()
            .map(|m| m.degree_in(&pred))
            .max()
            .unwrap_or(0)
    }

    pub fn vars(&self) -> BTreeSet<VarId> {
        self.terms.keys().flat_map(|m| m.vars()).collect()
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut out = Self::one();
        for _ in 0..e {
            out = &out * self;
        }
        out
    }

    /// Groups terms by their monomial over the variables selected by `pred`.
    /// Reassembling `Σ key·value` gives back `self`; values never contain a
    /// selected variable.
    pub fn collect(&self, pred: impl Fn(VarId) -> bool) -> BTreeMap<Monomial, Polynomial> {
        let mut out: BTreeMap<Monomial, Polynomial> = BTreeMap::new();
        for (m, c) in &self.terms {
            let (inside, outside) = m.split(&pred);
            out.entry(inside).or_default().add_term(outside, c.clone());
        }
        out.retain(|_, p| !p.is_zero());
        out
    }

    /// Simultaneous substitution of the mapped variables.
    pub fn substitute(&self, sigma: &BTreeMap<VarId, Polynomial>) -> Self {
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            let mut acc = Polynomial::constant(c.clone());
            let mut rest = Vec::new();
            for &(v, e) in m.powers() {
                match sigma.get(&v) {
                    Some(image) => acc = &acc * &image.pow(e),
                    None => rest.push((v, e)),
                }
            }
            let rest = Monomial(rest);
            for (m2, c2) in acc.terms {
                out.add_term(m2.mul(&rest), c2);
            }
        }
        out
    }

    /// Evaluates with every variable assigned; `None` if some variable is
    /// missing from `assignment`.
    pub fn eval(&self, assignment: &BTreeMap<VarId, Rational>) -> Option<Rational> {
        let mut total = Rational::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for &(v, e) in m.powers() {
                let x = assignment.get(&v)?;
                for _ in 0..e {
                    t *= x;
                }
            }
            total += t;
        }
        Some(total)
    }

    /// Evaluates a polynomial over state variables only at a point.
    pub fn eval_states(&self, point: &[Rational]) -> Option<Rational> {
        let assignment: BTreeMap<VarId, Rational> = point
            .iter()
            .enumerate()
            .map(|(i, x)| (VarId::State(i), x.clone()))
            .collect();
        self.eval(&assignment)
    }

    /// Canonical text, highest monomial first, e.g. `x^2 - 1`.
    pub fn render(&self, names: &dyn VarNames) -> String {
        if self.terms.is_empty() {
            return String::from("0");
        }
        let mut out = String::new();
        for (k, (m, c)) in self.terms.iter().rev().enumerate() {
            let neg = c.is_negative();
            let abs = c.abs();
            if k == 0 {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            if m.is_one() {
                out.push_str(&format_rational(&abs));
            } else if abs.is_one() {
                out.push_str(&m.render(names));
            } else {
                let _ = write!(out, "{}*{}", format_rational(&abs), m.render(names));
            }
        }
        out
    }
}

impl From<Rational> for Polynomial {
    fn from(c: Rational) -> Self {
        Polynomial::constant(c)
    }
}

impl From<VarId> for Polynomial {
    fn from(v: VarId) -> Self {
        Polynomial::var(v)
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        let mut out = Polynomial::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &rhs.terms {
                out.add_term(m1.mul(m2), c1 * c2);
            }
        }
        out
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        Polynomial {
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.clone(), -c.clone()))
                .collect(),
        }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $method:ident) => {
        impl $tr for Polynomial {
            type Output = Polynomial;
            fn $method(self, rhs: Polynomial) -> Polynomial {
                (&self).$method(&rhs)
            }
        }
        impl $tr<&Polynomial> for Polynomial {
            type Output = Polynomial;
            fn $method(self, rhs: &Polynomial) -> Polynomial {
                (&self).$method(rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        -&self
    }
}

impl core::iter::Sum for Polynomial {
    fn sum<I: Iterator<Item = Polynomial>>(iter: I) -> Polynomial {
        let mut out = Polynomial::zero();
        for p in iter {
            for (m, c) in p.terms {
                out.add_term(m, c);
            }
        }
        out
    }
}
