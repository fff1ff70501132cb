//! Properties of the independent checker on the benchmark certificates.

use std::time::Duration;

use distinv::process::{default_command, ProcessBackend, SolverConfig};
use distinv_core::certificate::{
    check, known, simulate, Certificate, CheckOptions, CheckReport, Strategy, Verdict,
};
use distinv_core::model::{builtin_fixture, AffineExpr, AffineInequality, Mdp, SafeSet, StateDist};
use distinv_core::rational::{int, rat};

fn backend(commands: Vec<Vec<String>>, portfolio: bool) -> ProcessBackend {
    ProcessBackend::new(SolverConfig {
        commands,
        timeout: Duration::from_secs(60),
        portfolio,
    })
}

fn z3() -> ProcessBackend {
    backend(vec![default_command()], true)
}

/// The passing certificates with their problems.
fn cases() -> Vec<(&'static str, Certificate)> {
    vec![
        ("running", known::running_ex1()),
        ("running-ex2", known::running_ex2()),
        ("chain", known::chain()),
        ("split", known::split()),
    ]
}

fn run_check(m: &Mdp, safe: &SafeSet, cert: &Certificate, b: &ProcessBackend) -> CheckReport {
    check(m, safe, cert, b, CheckOptions::default()).expect("well-formed certificate")
}

fn in_set(conjuncts: &[AffineInequality], mu: &StateDist) -> bool {
    conjuncts.iter().all(|c| c.holds_at(mu.entries()))
}

/// Asserts that a failed verdict comes with a point at which the violated
/// entailment is false in exact arithmetic.
fn assert_genuine(name: &str, m: &Mdp, safe: &SafeSet, cert: &Certificate, r: &CheckReport) {
    if let Verdict::Fail(w) = &r.containment {
        let mu = StateDist::new(w.point.clone()).expect("witness is a distribution");
        assert!(
            in_set(&cert.invariant, &mu),
            "{name}: containment witness outside I"
        );
        assert!(!safe.member(&mu), "{name}: containment witness inside H");
    }
    if let Verdict::Fail(w) = &r.inductive {
        let mu = StateDist::new(w.point.clone()).expect("witness is a distribution");
        assert!(
            in_set(&cert.invariant, &mu),
            "{name}: inductive witness outside I"
        );
        let next =
            simulate(m, &Strategy::from(&cert.strategy), &mu, 1).expect("strategy defined on I");
        assert!(
            !in_set(&cert.invariant, &next[1]),
            "{name}: successor of witness stays in I"
        );
    }
    if let Verdict::Fail(_) = &r.initial {
        assert!(
            !in_set(&cert.invariant, &cert.initial) || !safe.member(&cert.initial),
            "{name}"
        );
    }
}

#[test]
fn passing_certificates_simulate_inside_invariant_and_safe_set() {
    for (name, cert) in cases() {
        let p = builtin_fixture(name).unwrap();
        let r = run_check(&p.mdp, &p.safe, &cert, &z3());
        assert!(r.all_pass(), "{name}: {r:?}");
        let trace = simulate(&p.mdp, &Strategy::from(&cert.strategy), &cert.initial, 50).unwrap();
        for (t, mu) in trace.iter().enumerate() {
            assert!(in_set(&cert.invariant, mu), "{name}: step {t} leaves I");
            assert!(p.safe.member(mu), "{name}: step {t} leaves H");
        }
    }
}

#[test]
fn weak_certificate_fails_only_inductiveness() {
    let p = builtin_fixture("running").unwrap();
    let cert = known::running_ex1_weak();
    let r = run_check(&p.mdp, &p.safe, &cert, &z3());
    assert!(r.initial.is_pass() && r.containment.is_pass() && r.strategy.is_pass());
    let Verdict::Fail(w) = &r.inductive else {
        panic!("inductiveness should fail: {r:?}")
    };
    assert_eq!(w.point, vec![rat(3, 4), int(0), rat(1, 4)]);
    assert_genuine("running-weak", &p.mdp, &p.safe, &cert, &r);
}

/// Extra conjuncts for an `n`-state model.
fn strengthenings(n: usize) -> Vec<AffineInequality> {
    let unit = |i: usize, c: i64| {
        let mut v = vec![int(0); n];
        v[i] = int(c);
        v
    };
    let mut diff = unit(n - 1, 1);
    diff[0] = int(-1);
    vec![
        AffineInequality::ge(AffineExpr {
            constant: int(0),
            coeffs: unit(0, 1),
        }),
        AffineInequality::ge(AffineExpr {
            constant: rat(-1, 2),
            coeffs: unit(0, 1),
        }),
        AffineInequality::ge(AffineExpr {
            constant: rat(1, 3),
            coeffs: unit(1, -1),
        }),
        AffineInequality::ge(AffineExpr {
            constant: int(0),
            coeffs: diff,
        }),
        AffineInequality::eq(AffineExpr {
            constant: rat(-1, 4),
            coeffs: unit(n - 1, 1),
        }),
    ]
}

#[test]
fn strengthening_never_breaks_containment_and_witnesses_are_genuine() {
    let mut inductive_failures = 0;
    for (name, cert) in cases() {
        let p = builtin_fixture(name).unwrap();
        for extra in strengthenings(p.mdp.num_states()) {
            let mut stronger = cert.clone();
            stronger.invariant.push(extra);
            let r = run_check(&p.mdp, &p.safe, &stronger, &z3());
            assert!(r.containment.is_pass(), "{name}: {r:?}");
            assert!(r.strategy.is_pass(), "{name}: {r:?}");
            if matches!(r.inductive, Verdict::Fail(_)) {
                inductive_failures += 1;
            }
            assert_genuine(name, &p.mdp, &p.safe, &stronger, &r);
        }
    }
    // The suite must exercise some failing witnesses.
    assert!(inductive_failures >= 4, "{inductive_failures}");
}

#[test]
fn broken_containment_has_a_genuine_witness() {
    let p = builtin_fixture("chain").unwrap();
    let mut cert = known::chain();
    cert.invariant.remove(1);
    let r = run_check(&p.mdp, &p.safe, &cert, &z3());
    assert!(matches!(r.containment, Verdict::Fail(_)), "{r:?}");
    assert_genuine("chain", &p.mdp, &p.safe, &cert, &r);
}

#[test]
fn portfolio_and_sequential_runs_agree_with_a_single_solver() {
    let two = vec![
        default_command(),
        vec![
            "z3".into(),
            "-in".into(),
            "-smt2".into(),
            "smt.random_seed=7".into(),
        ],
    ];
    let mut all = cases();
    all.push(("running", known::running_ex1_weak()));
    for (name, cert) in all {
        let p = builtin_fixture(name).unwrap();
        let labels = |r: &CheckReport| r.verdicts().map(|(k, v)| (k, v.label()));
        let single = labels(&run_check(&p.mdp, &p.safe, &cert, &z3()));
        for portfolio in [true, false] {
            let r = run_check(&p.mdp, &p.safe, &cert, &backend(two.clone(), portfolio));
            assert_eq!(labels(&r), single, "{name}, portfolio {portfolio}");
        }
    }
}
