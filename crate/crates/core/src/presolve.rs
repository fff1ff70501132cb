//! Satisfiability-preserving reductions of an [`ExistentialSystem`] before
//! it is sent to a solver.
//!
//! Three rewrites, each undone by [`Presolved::recover`]:
//!
//! * a multiplier `y ≥ 0` that occurs only in one equation `E + c·y = 0`
//!   (constant `c`) is a slack: the pair becomes `−E/c ≥ 0`;
//! * two multipliers `u, v ≥ 0` that only ever occur as `u − v` become one
//!   free variable;
//! * a free variable occurring linearly in inequalities only is removed by
//!   Fourier–Motzkin.
//!
//! On Farkas fragments over the simplex this turns the slack rows `x_i ≥ 0`,
//! `1 ≥ 0` and the pair `Σx − 1 ≥ 0`, `1 − Σx ≥ 0` into one inequality per
//! vertex of the simplex.
//!
//! Recovered models are meant to be re-validated against the original
//! system; the reductions are exact, so a model of the reduced system always
//! recovers to a model of the original one.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use num_traits::{One, Signed, Zero};

use crate::qelim::{ExConstraint, ExistentialSystem};
use crate::rational::Rational;
use crate::ring::{Polynomial, VarId};
use crate::smt::Cmp;

#[derive(Debug, Clone, PartialEq, Eq)]
enum Recovery {
    Slack {
        var: VarId,
        value: Polynomial,
    },
    Merged {
        pos: VarId,
        neg: VarId,
    },
    Projected {
        var: VarId,
        lower: Vec<Polynomial>,
        upper: Vec<Polynomial>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Presolved {
    pub system: ExistentialSystem,
    recovery: Vec<Recovery>,
}

/// `p = coeff·v + rest` when `p` is at most linear in `v`.
fn linear_in(p: &Polynomial, v: VarId) -> Option<(Polynomial, Polynomial)> {
    let mut coeff = Polynomial::zero();
    let mut rest = Polynomial::zero();
    for (m, c) in p.collect(|w| w == v) {
        match m.powers() {
            [] => rest = c,
            [(_, 1)] => coeff = c,
            _ => return None,
        }
    }
    Some((coeff, rest))
}

fn is_nonneg_of(c: &ExConstraint, v: VarId) -> bool {
    c.cmp == Cmp::Ge && c.poly == Polynomial::var(v)
}

fn occurrences(constraints: &[Option<ExConstraint>]) -> BTreeMap<VarId, Vec<usize>> {
    let mut occ: BTreeMap<VarId, Vec<usize>> = BTreeMap::new();
    for (i, c) in constraints.iter().enumerate() {
        if let Some(c) = c {
            for v in c.poly.vars() {
                occ.entry(v).or_default().push(i);
            }
        }
    }
    occ
}

fn is_multiplier(v: VarId) -> bool {
    matches!(v, VarId::Mult { .. })
}

pub fn presolve(sys: &ExistentialSystem) -> Presolved {
    let mut cs: Vec<Option<ExConstraint>> = sys.constraints.iter().cloned().map(Some).collect();
    let mut recovery = Vec::new();
    let mut removed: BTreeSet<VarId> = BTreeSet::new();

    // Slack multipliers.
    let occ = occurrences(&cs);
    for (&v, at) in &occ {
        if !is_multiplier(v) || at.len() != 2 {
            continue;
        }
        let (bound, eq) = match (&cs[at[0]], &cs[at[1]]) {
            (Some(a), Some(_)) if is_nonneg_of(a, v) => (at[0], at[1]),
            (Some(_), Some(b)) if is_nonneg_of(b, v) => (at[1], at[0]),
            _ => continue,
        };
        let Some(c) = cs[eq].as_ref().filter(|c| c.cmp == Cmp::Eq) else {
            continue;
        };
        let Some((coeff, rest)) = linear_in(&c.poly, v) else {
            continue;
        };
        let Some(k) = coeff.as_constant().filter(|k| !k.is_zero()) else {
            continue;
        };
        let value = rest.scale(&(-Rational::one() / k));
        let label = c.label.clone();
        cs[eq] = Some(ExConstraint::new(label, value.clone(), Cmp::Ge));
        cs[bound] = None;
        removed.insert(v);
        recovery.push(Recovery::Slack { var: v, value });
    }

    // Multipliers occurring only through their difference.
    let occ = occurrences(&cs);
    let mut by_support: BTreeMap<Vec<usize>, Vec<VarId>> = BTreeMap::new();
    for (&v, at) in &occ {
        if !is_multiplier(v) {
            continue;
        }
        let Some(&b) = at
            .iter()
            .find(|&&i| cs[i].as_ref().is_some_and(|c| is_nonneg_of(c, v)))
        else {
            continue;
        };
        let support: Vec<usize> = at.iter().copied().filter(|&i| i != b).collect();
        by_support.entry(support).or_default().push(v);
    }
    let mut free: Vec<VarId> = Vec::new();
    for (support, vars) in by_support {
        let mut used: BTreeSet<VarId> = BTreeSet::new();
        for (i, &u) in vars.iter().enumerate() {
            for &w in &vars[i + 1..] {
                if used.contains(&u) || used.contains(&w) {
                    continue;
                }
                let opposite = support.iter().all(|&k| {
                    let p = &cs[k].as_ref().expect("live constraint").poly;
                    let Some((cu, rest)) = linear_in(p, u) else {
                        return false;
                    };
                    let Some((cw, _)) = linear_in(&rest, w) else {
                        return false;
                    };
                    !cu.vars().contains(&w) && cw == -&cu && !cu.is_zero()
                });
                if !opposite {
                    continue;
                }
                let sigma: BTreeMap<VarId, Polynomial> =
                    [(w, Polynomial::zero())].into_iter().collect();
                for &k in &support {
                    let c = cs[k].as_mut().expect("live constraint");
                    c.poly = c.poly.substitute(&sigma);
                }
                for c in cs.iter_mut() {
                    if c.as_ref()
                        .is_some_and(|c| is_nonneg_of(c, u) || is_nonneg_of(c, w))
                    {
                        *c = None;
                    }
                }
                used.insert(u);
                used.insert(w);
                removed.insert(w);
                free.push(u);
                recovery.push(Recovery::Merged { pos: u, neg: w });
            }
        }
    }

    // Fourier–Motzkin on the free variables.
    for z in free {
        let occ = occurrences(&cs);
        let Some(at) = occ.get(&z) else { continue };
        let mut lower = Vec::new();
        let mut upper = Vec::new();
        let mut ok = true;
        for &k in at {
            let c = cs[k].as_ref().expect("live constraint");
            let split =
                linear_in(&c.poly, z).and_then(|(coeff, rest)| Some((coeff.as_constant()?, rest)));
            match split {
                Some((k0, rest)) if c.cmp == Cmp::Ge && !k0.is_zero() => {
                    // k0·z + rest ≥ 0
                    let bound = rest.scale(&(-Rational::one() / &k0));
                    if k0.is_positive() {
                        lower.push((k, bound));
                    } else {
                        upper.push((k, bound));
                    }
                }
                _ => ok = false,
            }
        }
        let pairs = lower.len() * upper.len();
        if !ok || pairs > 2 * (lower.len() + upper.len()) + 4 {
            continue;
        }
        let mut fresh = Vec::new();
        for (ku, u) in &upper {
            for (_, l) in &lower {
                let label: String = cs[*ku].as_ref().expect("live constraint").label.clone();
                fresh.push(ExConstraint::new(label, u - l, Cmp::Ge));
            }
        }
        let first = *at.iter().min().expect("z occurs");
        for &k in at {
            cs[k] = None;
        }
        // Keep the new constraints where the first removed one was.
        let mut rebuilt: Vec<Option<ExConstraint>> = Vec::with_capacity(cs.len() + fresh.len());
        for (k, c) in cs.into_iter().enumerate() {
            if k == first {
                rebuilt.extend(fresh.drain(..).map(Some));
            }
            rebuilt.push(c);
        }
        cs = rebuilt;
        removed.insert(z);
        recovery.push(Recovery::Projected {
            var: z,
            lower: lower.into_iter().map(|(_, p)| p).collect(),
            upper: upper.into_iter().map(|(_, p)| p).collect(),
        });
    }

    let constraints: Vec<ExConstraint> = cs
        .into_iter()
        .flatten()
        .filter(|c| !trivially_true(c))
        .collect();
    let variables = sys
        .variables
        .iter()
        .copied()
        .filter(|v| !removed.contains(v))
        .collect();
    Presolved {
        system: ExistentialSystem {
            variables,
            constraints,
        },
        recovery,
    }
}

fn trivially_true(c: &ExConstraint) -> bool {
    c.poly.as_constant().is_some_and(|k| c.cmp.holds(&k))
}

impl Presolved {
    /// No reduction at all.
    pub fn identity(system: ExistentialSystem) -> Self {
        Presolved {
            system,
            recovery: Vec::new(),
        }
    }

    /// Extends a model of the reduced system to the eliminated variables.
    pub fn recover(&self, model: &BTreeMap<VarId, Rational>) -> Option<BTreeMap<VarId, Rational>> {
        let mut out = model.clone();
        for step in self.recovery.iter().rev() {
            match step {
                Recovery::Slack { var, value } => {
                    let v = value.eval(&out)?;
                    out.insert(*var, v);
                }
                Recovery::Merged { pos, neg } => {
                    let z = out.get(pos).cloned().unwrap_or_else(Rational::zero);
                    let zero = Rational::zero();
                    out.insert(
                        *neg,
                        if z.is_negative() {
                            -z.clone()
                        } else {
                            zero.clone()
                        },
                    );
                    out.insert(*pos, if z.is_negative() { zero } else { z });
                }
                Recovery::Projected { var, lower, upper } => {
                    let eval = |ps: &[Polynomial]| {
                        ps.iter().map(|p| p.eval(&out)).collect::<Option<Vec<_>>>()
                    };
                    let lo = eval(lower)?;
                    let hi = eval(upper)?;
                    let z = match (lo.into_iter().max(), hi.into_iter().min()) {
                        (Some(l), _) => l,
                        (None, Some(h)) => h,
                        (None, None) => Rational::zero(),
                    };
                    out.insert(*var, z);
                }
            }
        }
        Some(out)
    }

    /// Number of variables removed.
    pub fn eliminated(&self) -> usize {
        self.recovery.len()
    }
}
