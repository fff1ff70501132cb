//! Generators and per-case checks shared by the property suites and the
//! acceptance run. Every check compares the library against [`oracle`] or
//! against exact hand-derived values.

#![allow(dead_code)]

pub mod oracle;

use std::collections::BTreeMap;

use distinv_core::certificate::{self, known, simulate, step_exact};
use distinv_core::constraints::{
    constant_probabilities, state_vector, step_symbolic, Implication, Route, StepStrategy,
};
use distinv_core::model::{fixtures, Mdp, StateDist};
use distinv_core::qelim::{
    farkas_eliminate, handelman_count, handelman_eliminate, handelman_products, residual,
    ExistentialSystem, Fragment,
};
use distinv_core::rational::{int, rat, Rational};
use distinv_core::ring::{Polynomial, VarId};
use distinv_core::smt::{first_violation, Cmp};
use num_traits::{One, Signed, Zero};
use oracle::{cone_feasible, min_over, Affine};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

pub fn small_rat() -> impl Strategy<Value = Rational> {
    (-6i64..=6, 1i64..=4).prop_map(|(n, d)| rat(n, d))
}

pub fn nonneg_rat() -> impl Strategy<Value = Rational> {
    (0i64..=6, 1i64..=4).prop_map(|(n, d)| rat(n, d))
}

fn poly(a: &Affine) -> Polynomial {
    Polynomial::affine_in_states(&a.constant, &a.coeffs)
}

fn fragment_system(f: &Fragment) -> ExistentialSystem {
    ExistentialSystem {
        variables: f.multipliers.clone(),
        constraints: f.constraints.clone(),
    }
}

fn assignment(f: &Fragment, y: &[Rational]) -> BTreeMap<VarId, Rational> {
    f.multipliers
        .iter()
        .copied()
        .zip(y.iter().cloned())
        .collect()
}

/// The match equations of a fragment with a concrete consequent, read back
/// as `A y = b` by evaluation at unit vectors.
fn match_matrix(f: &Fragment) -> (Vec<Vec<Rational>>, Vec<Rational>) {
    let k = f.multipliers.len();
    let zero: Vec<Rational> = vec![Rational::zero(); k];
    let mut a = Vec::new();
    let mut b = Vec::new();
    for c in f.constraints.iter().filter(|c| c.cmp == Cmp::Eq) {
        let at = |y: &[Rational]| {
            c.poly
                .eval(&assignment(f, y))
                .expect("only multipliers occur")
        };
        let c0 = at(&zero);
        let row = (0..k)
            .map(|i| {
                let mut e = zero.clone();
                e[i] = int(1);
                at(&e) - &c0
            })
            .collect();
        a.push(row);
        b.push(-c0);
    }
    (a, b)
}

fn fragment_feasible(f: &Fragment) -> Result<bool, TestCaseError> {
    let (a, b) = match_matrix(f);
    // Besides the match equations, only `y ≥ 0` per multiplier.
    prop_assert_eq!(
        f.constraints.iter().filter(|c| c.cmp == Cmp::Ge).count(),
        f.multipliers.len()
    );
    Ok(cone_feasible(&a, &b, f.multipliers.len()).is_some())
}

fn implication(rows: &[Affine], consequent: &Affine, route: Route) -> Implication {
    Implication {
        label: "t".into(),
        antecedent: rows.iter().map(poly).collect(),
        consequent: poly(consequent),
        route,
    }
}

/// A nonempty bounded polyhedron over `n ≤ 4` variables: the unit box plus
/// up to two random rows that hold at a random point of the box, then the
/// trivial row `1 ≥ 0`.
pub fn polytope() -> impl Strategy<Value = (usize, Vec<Affine>)> {
    (1usize..=4).prop_flat_map(|n| {
        let point = prop::collection::vec((0i64..=4).prop_map(|k| rat(k, 4)), n);
        let extra =
            prop::collection::vec((prop::collection::vec(small_rat(), n), nonneg_rat()), 0..=2);
        (Just(n), point, extra).prop_map(|(n, p, extra)| {
            let mut rows = Vec::new();
            for i in 0..n {
                let mut e = vec![int(0); n];
                e[i] = int(1);
                rows.push(Affine {
                    coeffs: e.clone(),
                    constant: int(0),
                });
                rows.push(Affine {
                    coeffs: e.iter().map(|v| -v.clone()).collect(),
                    constant: int(1),
                });
            }
            for (coeffs, slack) in extra {
                let at = Affine {
                    coeffs: coeffs.clone(),
                    constant: int(0),
                }
                .eval(&p);
                rows.push(Affine {
                    coeffs,
                    constant: slack - at,
                });
            }
            rows.push(Affine {
                coeffs: vec![int(0); n],
                constant: int(1),
            });
            (n, rows)
        })
    })
}

/// An entailment query whose consequent attains the minimum `delta` over
/// the polytope, so it holds exactly when `delta ≥ 0`.
pub fn entailment() -> impl Strategy<Value = (usize, Vec<Affine>, Affine)> {
    polytope().prop_flat_map(|(n, rows)| {
        let coeffs = prop::collection::vec(small_rat(), n);
        let delta = prop::sample::select(vec![
            rat(-1, 2),
            rat(-1, 8),
            int(0),
            int(0),
            rat(1, 8),
            int(1),
        ]);
        (Just(n), Just(rows), coeffs, delta).prop_map(|(n, rows, coeffs, delta)| {
            let lin = Affine {
                coeffs: coeffs.clone(),
                constant: int(0),
            };
            let m = min_over(&rows, &lin, n).expect("the box has vertices");
            (
                n,
                rows,
                Affine {
                    coeffs,
                    constant: delta - m,
                },
            )
        })
    })
}

/// A polytope with a nonnegative multiplier per row.
pub fn combination() -> impl Strategy<Value = (usize, Vec<Affine>, Vec<Rational>)> {
    polytope().prop_flat_map(|(n, rows)| {
        let ys = prop::collection::vec(nonneg_rat(), rows.len());
        (Just(n), Just(rows), ys)
    })
}

/// The consequent is `Σ y_j φ_j`; elimination must accept exactly `y`.
pub fn farkas_reexpansion(
    (n, rows, y): (usize, Vec<Affine>, Vec<Rational>),
) -> Result<(), TestCaseError> {
    let mut consequent = Affine {
        coeffs: vec![int(0); n],
        constant: int(0),
    };
    for (r, yk) in rows.iter().zip(&y) {
        for i in 0..n {
            consequent.coeffs[i] += &r.coeffs[i] * yk;
        }
        consequent.constant += &r.constant * yk;
    }
    let imp = implication(&rows, &consequent, Route::Farkas);
    let frag = farkas_eliminate(&imp, 0).map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert_eq!(frag.multipliers.len(), rows.len());
    prop_assert!(residual(&imp, &frag.products, &y).is_zero());
    prop_assert_eq!(
        first_violation(&fragment_system(&frag), &assignment(&frag, &y)),
        None
    );
    Ok(())
}

/// The Farkas fragment is satisfiable iff the entailment holds.
pub fn farkas_lp_agreement(
    (n, rows, consequent): (usize, Vec<Affine>, Affine),
) -> Result<(), TestCaseError> {
    let entailed = !min_over(&rows, &consequent, n)
        .expect("bounded")
        .is_negative();
    let frag = farkas_eliminate(&implication(&rows, &consequent, Route::Farkas), 0)
        .map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert_eq!(fragment_feasible(&frag)?, entailed);
    Ok(())
}

/// Degree-one Handelman products are the rows themselves, so both
/// eliminations decide the same entailment.
pub fn handelman_k1_agreement(
    (n, rows, consequent): (usize, Vec<Affine>, Affine),
) -> Result<(), TestCaseError> {
    let fail = |e: distinv_core::qelim::QelimError| TestCaseError::fail(e.to_string());
    let farkas =
        farkas_eliminate(&implication(&rows, &consequent, Route::Farkas), 0).map_err(fail)?;
    let handelman = handelman_eliminate(&implication(&rows, &consequent, Route::Handelman), 1, 0)
        .map_err(fail)?;
    let entailed = !min_over(&rows, &consequent, n)
        .expect("bounded")
        .is_negative();
    prop_assert_eq!(fragment_feasible(&handelman)?, fragment_feasible(&farkas)?);
    prop_assert_eq!(fragment_feasible(&handelman)?, entailed);
    Ok(())
}

/// Random nonconstant affine rows for the Handelman re-expansion, with a
/// degree cap and a pool of multiplier values.
pub fn handelman_input() -> impl Strategy<Value = (usize, Vec<Affine>, usize, Vec<Rational>)> {
    (1usize..=3).prop_flat_map(|n| {
        let row = (prop::collection::vec(small_rat(), n), small_rat())
            .prop_filter("not constant", |(c, _)| c.iter().any(|v| !v.is_zero()))
            .prop_map(|(coeffs, constant)| Affine { coeffs, constant });
        (
            Just(n),
            prop::collection::vec(row, 1..=3),
            1usize..=3,
            prop::collection::vec(nonneg_rat(), 1..=40),
        )
    })
}

pub fn handelman_reexpansion(
    (n, rows, k, pool): (usize, Vec<Affine>, usize, Vec<Rational>),
) -> Result<(), TestCaseError> {
    let fail = |e: distinv_core::qelim::QelimError| TestCaseError::fail(e.to_string());
    let probe = Affine {
        coeffs: vec![int(0); n],
        constant: int(0),
    };
    let shape =
        handelman_eliminate(&implication(&rows, &probe, Route::Handelman), k, 0).map_err(fail)?;
    let all = handelman_products(&rows.iter().map(poly).collect::<Vec<_>>(), k);
    for p in &shape.products {
        prop_assert!(all.contains(p));
    }
    let y: Vec<Rational> = pool
        .iter()
        .cycle()
        .take(shape.products.len())
        .cloned()
        .collect();
    let consequent: Polynomial = shape.products.iter().zip(&y).map(|(p, v)| p.scale(v)).sum();
    let imp = Implication {
        label: "t".into(),
        antecedent: rows.iter().map(poly).collect(),
        consequent,
        route: Route::Handelman,
    };
    let frag = handelman_eliminate(&imp, k, 0).map_err(fail)?;
    prop_assert_eq!(&frag.products, &shape.products);
    prop_assert!(residual(&imp, &frag.products, &y).is_zero());
    prop_assert_eq!(
        first_violation(&fragment_system(&frag), &assignment(&frag, &y)),
        None
    );
    Ok(())
}

fn binomial(n: usize, k: usize) -> usize {
    // Pascal's triangle.
    let mut row = vec![1usize];
    for _ in 0..n {
        let mut next = vec![1usize; row.len() + 1];
        for i in 1..row.len() {
            next[i] = row[i - 1] + row[i];
        }
        row = next;
    }
    row.get(k).copied().unwrap_or(0)
}

/// `|M_K| = C(N+K, K)` for `N ≤ 5`, `K ≤ 4`, both from the formula and
/// from the enumeration.
pub fn handelman_counts() -> Result<(), String> {
    for n in 0..=5 {
        let rows: Vec<Polynomial> = (0..n).map(|i| Polynomial::var(VarId::State(i))).collect();
        for k in 0..=4 {
            let expected = binomial(n + k, k);
            let products = handelman_products(&rows, k);
            if handelman_count(n, k) != expected || products.len() != expected {
                return Err(format!(
                    "N={n} K={k}: expected {expected}, count {}, enumerated {}",
                    handelman_count(n, k),
                    products.len()
                ));
            }
            if products.iter().any(|p| p.degree() as usize > k) {
                return Err(format!("N={n} K={k}: product above degree {k}"));
            }
        }
    }
    Ok(())
}

/// Positive weights normalised into a distribution.
pub fn normalise(w: &[u32]) -> Vec<Rational> {
    let total: u32 = w.iter().sum();
    w.iter().map(|&x| rat(x as i64, total as i64)).collect()
}

pub fn weights(n: usize) -> impl Strategy<Value = Vec<u32>> {
    prop::collection::vec(0u32..=3, n).prop_filter("nonzero", |w| w.iter().any(|&x| x > 0))
}

pub type Table = BTreeMap<(usize, usize), Rational>;

/// A random MDP with up to four states and one or two actions per state,
/// a random memoryless strategy and a random distribution.
pub fn mdp_triple() -> impl Strategy<Value = (Mdp, Table, Vec<Rational>)> {
    (1usize..=4).prop_flat_map(|n| {
        let rows = prop::collection::vec((any::<bool>(), weights(n), weights(n), 0u32..=4), n);
        (rows, weights(n)).prop_map(move |(rows, mu)| {
            let states: Vec<String> = (0..n).map(|i| format!("s{i}")).collect();
            let succ = |w: &[u32]| {
                normalise(w)
                    .into_iter()
                    .enumerate()
                    .filter(|(_, p)| !p.is_zero())
                    .map(|(t, p)| (format!("s{t}"), p))
                    .collect::<Vec<_>>()
            };
            let mut transitions = Vec::new();
            let mut table = BTreeMap::new();
            for (s, (two, w0, w1, split)) in rows.iter().enumerate() {
                let mut acts = vec![("a0".to_string(), succ(w0))];
                if *two {
                    acts.push(("a1".to_string(), succ(w1)));
                    let p = rat(*split as i64, 4);
                    table.insert((s, 0), p.clone());
                    table.insert((s, 1), Rational::one() - p);
                }
                transitions.push(acts);
            }
            let m =
                Mdp::new(states, vec!["a0".into(), "a1".into()], transitions).expect("well formed");
            (m, table, normalise(&mu))
        })
    })
}

/// One step is a distribution again, agrees with the symbolic step, and
/// the symbolic step preserves `Σ x` as a polynomial identity.
pub fn step_conserves_mass(
    (m, table, mu): (Mdp, Table, Vec<Rational>),
) -> Result<(), TestCaseError> {
    let next = step_exact(&m, &table, &mu);
    prop_assert!(StateDist::new(next.clone()).is_ok());
    let probs = constant_probabilities(&table);
    let sym = step_symbolic(
        &m,
        StepStrategy::Memoryless(&probs),
        &state_vector(m.num_states()),
    )
    .map_err(|e| TestCaseError::fail(e.to_string()))?;
    let polys = sym.polynomials().expect("memoryless step is polynomial");
    for (p, v) in polys.iter().zip(&next) {
        prop_assert_eq!(&p.eval_states(&mu).expect("only states occur"), v);
    }
    let total: Polynomial = polys.iter().cloned().sum();
    let xs: Polynomial = state_vector(m.num_states()).into_iter().sum();
    prop_assert_eq!(total, xs);
    Ok(())
}

fn pow2(i: u32) -> Rational {
    Rational::from_integer((1u64 << i).into())
}

/// The second running-example query under its certificate strategy:
/// `μ_i = (1/4 + 2^-(i+1), 1/4, 1/2 − 2^-(i+1))` for `i ≤ horizon`, and
/// `a` played with weight `1 / (2^(i-1) + 1)`, which is 2/3 at `μ_0`.
pub fn second_query_closed_form(horizon: usize) -> Result<(), String> {
    let m = fixtures::running_mdp();
    let cert = known::running_ex2();
    let trace = simulate(
        &m,
        &certificate::Strategy::from(&cert.strategy),
        &cert.initial,
        horizon,
    )
    .map_err(|e| e.to_string())?;
    if trace.len() != horizon + 1 {
        return Err(format!("trace has {} entries", trace.len()));
    }
    let certificate::CertStrategy::Distribution { num, den } = &cert.strategy else {
        return Err("not a distribution strategy".into());
    };
    for (i, mu) in trace.iter().enumerate() {
        let tail = Rational::one() / pow2(i as u32 + 1);
        let expected = [rat(1, 4) + &tail, rat(1, 4), rat(1, 2) - &tail];
        if mu.entries() != expected {
            return Err(format!(
                "step {i}: got {}",
                certificate::format_point(mu.entries())
            ));
        }
        let d = den[&0].eval(mu.entries());
        let pa = num[&(0, 0)].eval(mu.entries()) / &d;
        let pb = num[&(0, 1)].eval(mu.entries()) / &d;
        let want_a = int(2) / (int(2) + pow2(i as u32));
        if pa != want_a || &pa + &pb != Rational::one() {
            return Err(format!("step {i}: a has weight {pa}, expected {want_a}"));
        }
        if i == 0 && (pa != rat(2, 3) || pb != rat(1, 3)) {
            return Err(format!("step 0: weights {pa}, {pb}"));
        }
    }
    Ok(())
}
