//! Elimination of the universal quantifiers of a [`ConstraintSystem`].
//!
//! An implication `∀x. ⋀ f_j(x) ≥ 0 ⇒ g(x) ≥ 0` is replaced by fresh
//! multipliers `y ≥ 0` and the requirement that `g − Σ y_k φ_k` is the zero
//! polynomial in `x`, where the `φ_k` are the antecedent rows (Farkas) or
//! products of at most `K` of them (Handelman). Coefficients of every
//! `x`-monomial become equations over the template variables and
//! multipliers.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::constraints::{ConstraintSystem, Implication, Route};
use crate::model::Relation;
use crate::rational::Rational;
use crate::ring::{Polynomial, VarId, VarNames};
use crate::smt::Cmp;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QelimError {
    /// A Farkas implication whose consequent or antecedent is not affine in
    /// the state variables.
    NotAffine { label: String },
    /// A Handelman implication with a non-affine antecedent row.
    NonAffineAntecedent { label: String },
}

impl fmt::Display for QelimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QelimError::NotAffine { label } => {
                write!(
                    f,
                    "implication `{label}` is not affine in the state variables"
                )
            }
            QelimError::NonAffineAntecedent { label } => {
                write!(f, "implication `{label}` has a non-affine antecedent row")
            }
        }
    }
}

impl core::error::Error for QelimError {}

/// A ground constraint `poly ⋈ 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExConstraint {
    pub label: String,
    pub poly: Polynomial,
    pub cmp: Cmp,
}

impl ExConstraint {
    pub fn new(label: impl Into<String>, poly: Polynomial, cmp: Cmp) -> Self {
        ExConstraint {
            label: label.into(),
            poly,
            cmp,
        }
    }
}

/// A purely existential polynomial system: no state variable occurs.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ExistentialSystem {
    pub variables: Vec<VarId>,
    pub constraints: Vec<ExConstraint>,
}

impl ExistentialSystem {
    pub fn num_variables(&self) -> usize {
        self.variables.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn mentions_state_variables(&self) -> bool {
        self.constraints
            .iter()
            .any(|c| c.poly.vars().iter().any(|v| v.is_state()))
    }

    pub fn dump(&self, names: &dyn VarNames) -> String {
        let mut out = alloc::format!(
            "; {} variables, {} constraints\n",
            self.variables.len(),
            self.constraints.len()
        );
        for c in &self.constraints {
            out.push_str(&alloc::format!(
                "{}: {} {} 0\n",
                c.label,
                c.poly.render(names),
                c.cmp.symbol()
            ));
        }
        out
    }
}

/// Output of eliminating one implication.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fragment {
    pub multipliers: Vec<VarId>,
    /// The polynomial each multiplier stands for, aligned with
    /// `multipliers`.
    pub products: Vec<Polynomial>,
    pub constraints: Vec<ExConstraint>,
}

/// Multiplier nonnegativity followed by one equation per `x`-monomial of
/// `consequent − Σ y_k φ_k`.
fn match_coefficients(imp: &Implication, group: usize, products: &[Polynomial]) -> Fragment {
    let multipliers: Vec<VarId> = (0..products.len())
        .map(|index| VarId::Mult { group, index })
        .collect();
    let mut residual = imp.consequent.clone();
    for (y, phi) in multipliers.iter().zip(products) {
        residual = &residual - &(&Polynomial::var(*y) * phi);
    }
    let mut constraints: Vec<ExConstraint> = multipliers
        .iter()
        .map(|&y| {
            ExConstraint::new(
                alloc::format!("{}.mult", imp.label),
                Polynomial::var(y),
                Cmp::Ge,
            )
        })
        .collect();
    // Highest monomial first, matching the printed order of polynomials.
    for (_, coeff) in residual.collect(VarId::is_state).into_iter().rev() {
        constraints.push(ExConstraint::new(
            alloc::format!("{}.match", imp.label),
            coeff,
            Cmp::Eq,
        ));
    }
    Fragment {
        multipliers,
        products: products.to_vec(),
        constraints,
    }
}

/// Farkas translation: one multiplier per antecedent row. The trivial row
/// `1 ≥ 0` of every antecedent absorbs the constant slack.
pub fn farkas_eliminate(imp: &Implication, group: usize) -> Result<Fragment, QelimError> {
    let affine = |p: &Polynomial| p.degree_in(VarId::is_state) <= 1;
    if !affine(&imp.consequent) || !imp.antecedent.iter().all(affine) {
        return Err(QelimError::NotAffine {
            label: imp.label.clone(),
        });
    }
    Ok(match_coefficients(imp, group, &imp.antecedent))
}

/// Number of multisets of size at most `k` over `n` rows: `C(n + k, k)`.
pub fn handelman_count(n: usize, k: usize) -> usize {
    let mut c: u128 = 1;
    for i in 1..=k as u128 {
        c = c * (n as u128 + i) / i;
    }
    c as usize
}

/// All products of multisets of at most `k` rows, the empty product `1`
/// first, then by size, then lexicographically by row index.
pub fn handelman_products(rows: &[Polynomial], k: usize) -> Vec<Polynomial> {
    let mut out = alloc::vec![Polynomial::one()];
    // (product, index of last factor) for the previous size.
    let mut frontier: Vec<(Polynomial, usize)> = alloc::vec![(Polynomial::one(), 0)];
    for _ in 0..k {
        let mut next = Vec::new();
        for (p, start) in &frontier {
            for (i, row) in rows.iter().enumerate().skip(*start) {
                next.push((p * row, i));
            }
        }
        out.extend(next.iter().map(|(p, _)| p.clone()));
        frontier = next;
    }
    out
}

/// Handelman translation with products of at most `k` antecedent rows.
///
/// Products that coincide as polynomials (e.g. `1·f` and `f` when the
/// trivial row is present) share one multiplier, which leaves the cone
/// unchanged.
pub fn handelman_eliminate(
    imp: &Implication,
    k: usize,
    group: usize,
) -> Result<Fragment, QelimError> {
    if !imp
        .antecedent
        .iter()
        .all(|p| p.degree_in(VarId::is_state) <= 1)
    {
        return Err(QelimError::NonAffineAntecedent {
            label: imp.label.clone(),
        });
    }
    let mut seen = BTreeSet::new();
    let mut products = Vec::new();
    let rows: Vec<Polynomial> = imp
        .antecedent
        .iter()
        .filter(|r| r.as_constant().is_none())
        .cloned()
        .collect();
    for p in handelman_products(&rows, k) {
        if !p.is_zero() && seen.insert(p.clone()) {
            products.push(p);
        }
    }
    Ok(match_coefficients(imp, group, &products))
}

fn ground_cmp(rel: Relation) -> Cmp {
    match rel {
        Relation::Ge => Cmp::Ge,
        Relation::Eq => Cmp::Eq,
    }
}

/// Ground constraints pass through; every implication is replaced by its
/// fragment, in implication order. Multipliers of implication `g` are
/// `Mult { group: g, .. }` and are never shared.
pub fn eliminate_all(sys: &ConstraintSystem, k: usize) -> Result<ExistentialSystem, QelimError> {
    let mut out = ExistentialSystem {
        variables: sys.variables.clone(),
        constraints: sys
            .ground
            .iter()
            .map(|g| ExConstraint::new(g.label.clone(), g.poly.clone(), ground_cmp(g.relation)))
            .collect(),
    };
    for (group, imp) in sys.implications.iter().enumerate() {
        let frag = match imp.route {
            Route::Farkas => farkas_eliminate(imp, group)?,
            Route::Handelman => handelman_eliminate(imp, k, group)?,
        };
        out.variables.extend(frag.multipliers);
        out.constraints.extend(frag.constraints);
    }
    debug_assert!(!out.mentions_state_variables());
    Ok(out)
}

/// `consequent − Σ y_k φ_k` under concrete multiplier values; zero exactly
/// when the multipliers witness the implication.
pub fn residual(
    imp: &Implication,
    products: &[Polynomial],
    multipliers: &[Rational],
) -> Polynomial {
    let mut r = imp.consequent.clone();
    for (phi, y) in products.iter().zip(multipliers) {
        r = &r - &phi.scale(y);
    }
    r
}
