//! Distribution semantics of the running example, against hand-derived values.

mod support;

use std::collections::BTreeMap;

use distinv_core::certificate::{falsify_bounded, simulate, step_exact, Strategy};
use distinv_core::model::{builtin_fixture, fixtures, StateDist};
use distinv_core::rational::{int, rat, Rational};
use num_traits::{One, Zero};

fn dist(entries: &[Rational]) -> StateDist {
    StateDist::new(entries.to_vec()).unwrap()
}

#[test]
fn second_query_first_two_steps() {
    let m = fixtures::running_mdp();
    let mu0 = [rat(3, 4), rat(1, 4), int(0)];
    // a with 2/3, b with 1/3.
    let table: BTreeMap<_, _> = [((0, 0), rat(2, 3)), ((0, 1), rat(1, 3))]
        .into_iter()
        .collect();
    let mu1 = step_exact(&m, &table, &mu0);
    assert_eq!(mu1, vec![rat(1, 2), rat(1, 4), rat(1, 4)]);
    let table: BTreeMap<_, _> = [((0, 0), rat(1, 2)), ((0, 1), rat(1, 2))]
        .into_iter()
        .collect();
    assert_eq!(
        step_exact(&m, &table, &mu1),
        vec![rat(3, 8), rat(1, 4), rat(3, 8)]
    );
}

#[test]
fn second_query_closed_form() {
    support::second_query_closed_form(10).unwrap();
}

#[test]
fn always_a_leaves_the_second_safe_set() {
    let p = builtin_fixture("running-ex2").unwrap();
    let m = &p.mdp;
    let mu0 = dist(&[rat(3, 4), rat(1, 4), int(0)]);
    let always_a: BTreeMap<_, _> = [((0, 0), int(1)), ((0, 1), int(0))].into_iter().collect();
    let (step, mu) = falsify_bounded(m, &p.safe, Some(&Strategy::Memoryless(always_a)), &mu0, 10)
        .unwrap()
        .expect("B drops to zero");
    assert_eq!(step, 1);
    assert_eq!(mu.entries(), &[rat(3, 4), int(0), rat(1, 4)]);
}

#[test]
fn first_query_hand_recurrence() {
    // μ'(A) = C/2, μ'(B) = A under b, μ'(C) = B + C/2.
    let m = fixtures::running_mdp();
    let always_b: BTreeMap<_, _> = [((0, 0), int(0)), ((0, 1), int(1))].into_iter().collect();
    let mut mu = vec![rat(1, 3); 3];
    for _ in 0..12 {
        let next = step_exact(&m, &always_b, &mu);
        assert_eq!(
            next,
            vec![&mu[2] / int(2), mu[0].clone(), &mu[1] + &mu[2] / int(2)]
        );
        assert!(next[2] >= rat(1, 4));
        assert!(next[0] <= next[2]);
        mu = next;
    }
}

#[test]
fn first_query_always_a_leaves_at_step_three() {
    let p = builtin_fixture("running-ex1").unwrap();
    let always_a: BTreeMap<_, _> = [((0, 0), int(1)), ((0, 1), int(0))].into_iter().collect();
    let (step, mu) = falsify_bounded(
        &p.mdp,
        &p.safe,
        Some(&Strategy::Memoryless(always_a)),
        &StateDist::uniform(3),
        10,
    )
    .unwrap()
    .expect("C drains into A");
    assert_eq!(step, 3);
    assert_eq!(mu.entries(), &[rat(7, 8), int(0), rat(1, 8)]);
}

#[test]
fn chain_mass_settles_on_the_last_two_states() {
    let p = builtin_fixture("chain").unwrap();
    let trace = simulate(
        &p.mdp,
        &Strategy::Memoryless(BTreeMap::new()),
        &StateDist::uniform(10),
        30,
    )
    .unwrap();
    for mu in &trace {
        assert!(p.safe.member(mu));
    }
    let last = trace.last().unwrap().entries();
    assert!(last[..8].iter().all(Zero::is_zero));
    assert_eq!(&last[8] + &last[9], Rational::one());
}
