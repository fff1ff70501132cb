//! Brute-force exact linear algebra used as an independent oracle.

#![allow(dead_code)]

use distinv_core::rational::Rational;
use num_traits::{Signed, Zero};

/// Unique solution of `A y = b` (`A` is `m × s`), if the system is
/// consistent and `A` has full column rank.
pub fn solve_unique(a: &[Vec<Rational>], b: &[Rational], s: usize) -> Option<Vec<Rational>> {
    let mut m: Vec<Vec<Rational>> = a
        .iter()
        .zip(b)
        .map(|(row, bi)| {
            let mut r = row.clone();
            r.push(bi.clone());
            r
        })
        .collect();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..s {
        let Some(p) = (r..m.len()).find(|&i| !m[i][c].is_zero()) else {
            return None;
        };
        m.swap(r, p);
        let lead = m[r][c].clone();
        for x in m[r].iter_mut() {
            *x = &*x / &lead;
        }
        for i in 0..m.len() {
            if i != r && !m[i][c].is_zero() {
                let k = m[i][c].clone();
                for j in 0..=s {
                    let v = &k * &m[r][j];
                    m[i][j] -= v;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    // Remaining rows must read 0 = 0.
    if m[r..].iter().any(|row| !row[s].is_zero()) {
        return None;
    }
    Some((0..s).map(|i| m[i][s].clone()).collect())
}

fn subsets(k: usize, size: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if cur.len() == size {
        out.push(cur.clone());
        return;
    }
    for i in start..k {
        cur.push(i);
        subsets(k, size, i + 1, cur, out);
        cur.pop();
    }
}

pub fn all_subsets(k: usize, size: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    subsets(k, size, 0, &mut Vec::new(), &mut out);
    out
}

/// `∃ y ≥ 0. A y = b`, decided by enumerating basic solutions: if `b` lies
/// in the cone of the columns of `A`, it is a nonnegative combination of
/// linearly independent columns.
pub fn cone_feasible(a: &[Vec<Rational>], b: &[Rational], k: usize) -> Option<Vec<Rational>> {
    let m = a.len();
    for size in 0..=k.min(m) {
        for cols in all_subsets(k, size) {
            let sub: Vec<Vec<Rational>> = a
                .iter()
                .map(|row| cols.iter().map(|&c| row[c].clone()).collect())
                .collect();
            if let Some(y) = solve_unique(&sub, b, size) {
                if y.iter().all(|v| !v.is_negative()) {
                    let mut full = vec![Rational::zero(); k];
                    for (c, v) in cols.iter().zip(y) {
                        full[*c] = v;
                    }
                    return Some(full);
                }
            }
        }
    }
    None
}

/// An affine form `coeffs·x + constant`.
#[derive(Debug, Clone)]
pub struct Affine {
    pub coeffs: Vec<Rational>,
    pub constant: Rational,
}

impl Affine {
    pub fn eval(&self, x: &[Rational]) -> Rational {
        self.coeffs
            .iter()
            .zip(x)
            .fold(self.constant.clone(), |acc, (a, b)| acc + a * b)
    }
}

/// Minimum of `obj` over the bounded polyhedron `{x | row(x) ≥ 0}` by vertex
/// enumeration; `None` when the polyhedron has no vertex.
pub fn min_over(rows: &[Affine], obj: &Affine, n: usize) -> Option<Rational> {
    let mut best: Option<Rational> = None;
    for pick in all_subsets(rows.len(), n) {
        let a: Vec<Vec<Rational>> = pick.iter().map(|&i| rows[i].coeffs.clone()).collect();
        let b: Vec<Rational> = pick.iter().map(|&i| -rows[i].constant.clone()).collect();
        let Some(x) = solve_unique(&a, &b, n) else {
            continue;
        };
        if rows.iter().all(|r| !r.eval(&x).is_negative()) {
            let v = obj.eval(&x);
            if best.as_ref().is_none_or(|b| v < *b) {
                best = Some(v);
            }
        }
    }
    best
}
