#![allow(dead_code, clippy::needless_range_loop)]
//! Oracles shared by the integration tests.

use lgraph::cost::{check_admissible, contribution, edge_local, setup_exponent, vertex_local, ExponentAssignment};
use lgraph::graph::UndirectedGraph;
use lgraph::lp::LinearProgram;
use lgraph::rational::Rational;
use lgraph::schedule::{items_of, ScheduleItem};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Minimum over all schedules of the worst stage at a fixed assignment, by DP over loaded sets.
pub fn best_schedule_value(h: &UndirectedGraph, a: &ExponentAssignment) -> Rational {
    let items = items_of(h);
    let n = items.len();
    let needs: Vec<u32> = items
        .iter()
        .map(|it| match *it {
            ScheduleItem::Vertex(_) => 0,
            ScheduleItem::Edge(i, j) => 1 << (i - 1) | 1 << (j - 1),
        })
        .collect();
    let local: Vec<Option<Rational>> = items
        .iter()
        .map(|it| match *it {
            ScheduleItem::Vertex(v) => vertex_local(h, a, v),
            ScheduleItem::Edge(i, j) => Some(edge_local(a, i, j).1),
        })
        .collect();
    let contrib: Vec<Rational> = items.iter().map(|&it| contribution(a, it)).collect();
    let full = (1usize << n) - 1;
    let mut best: Vec<Option<Rational>> = vec![None; full + 1];
    best[0] = Some(setup_exponent(h, a).unwrap());
    for mask in 1..=full {
        for z in 0..n {
            if mask >> z & 1 == 0 {
                continue;
            }
            let rest = mask & !(1 << z);
            if needs[z] as usize & !rest != 0 {
                continue;
            }
            let Some(prev) = best[rest].clone() else { continue };
            let global: Rational = (0..n).filter(|&y| rest >> y & 1 == 1).map(|y| contrib[y].clone()).sum();
            let value = match &local[z] {
                Some(l) => prev.max(global + l),
                None => prev,
            };
            if best[mask].as_ref().is_none_or(|b| value < *b) {
                best[mask] = Some(value);
            }
        }
    }
    best[full].clone().unwrap()
}

pub fn random_admissible(h: &UndirectedGraph, rng: &mut ChaCha8Rng) -> ExponentAssignment {
    loop {
        let rho: Vec<Rational> = (0..h.k())
            .map(|_| {
                let d = rng.gen_range(1..=14);
                Rational::new(rng.gen_range(0..=d), d)
            })
            .collect();
        let delta: Vec<((usize, usize), Rational)> = h
            .edges()
            .map(|(i, j)| {
                let hi = rho[i - 1].clone().max(rho[j - 1].clone());
                let d = rng.gen_range(1..=14);
                ((i, j), hi * Rational::new(rng.gen_range(0..=d), d))
            })
            .collect();
        let a = ExponentAssignment::new(rho, delta);
        if check_admissible(h, &a).is_ok() {
            return a;
        }
    }
}

pub fn r(n: i64) -> Rational {
    Rational::from_integer(n)
}

pub fn random_lp(rng: &mut ChaCha8Rng) -> LinearProgram {
    let n = rng.gen_range(1..=5);
    let m = rng.gen_range(1..=8);
    let names: Vec<String> = (0..n).map(|i| format!("x{i}")).collect();
    let mut lp = LinearProgram::new(names);
    lp.set_objective((0..n).map(|_| Rational::new(rng.gen_range(-5..=5), rng.gen_range(1..=3))).collect());
    for _ in 0..m {
        let coeffs = (0..n).map(|_| Rational::new(rng.gen_range(-4..=4), rng.gen_range(1..=4))).collect();
        lp.add_le(coeffs, Rational::new(rng.gen_range(-3..=8), rng.gen_range(1..=2)));
    }
    // a box keeps the feasible region bounded so the vertex oracle is complete
    for i in 0..n {
        let mut e = vec![r(0); n];
        e[i] = r(1);
        lp.add_le(e, r(10));
    }
    lp
}

/// Solves the square system `a x = b`; `None` if singular.
pub fn solve_square(mut a: Vec<Vec<Rational>>, mut b: Vec<Rational>) -> Option<Vec<Rational>> {
    let n = a.len();
    for col in 0..n {
        let p = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, p);
        b.swap(col, p);
        let inv = a[col][col].recip();
        for c in col..n {
            a[col][c] = &a[col][c] * &inv;
        }
        b[col] = &b[col] * &inv;
        for row in 0..n {
            if row != col && !a[row][col].is_zero() {
                let f = a[row][col].clone();
                for c in col..n {
                    let v = &a[col][c] * &f;
                    a[row][c] = &a[row][c] - &v;
                }
                let v = &b[col] * &f;
                b[row] = &b[row] - &v;
            }
        }
    }
    Some(b)
}

/// Minimum of the objective over all basic feasible points, or `None` if there are none.
pub fn vertex_oracle(lp: &LinearProgram) -> Option<Rational> {
    let n = lp.num_vars();
    // every row as a.x <= b, including x >= 0 as -x <= 0
    let mut rows: Vec<(Vec<Rational>, Rational)> =
        lp.constraints.iter().map(|c| (c.coeffs.clone(), c.rhs.clone())).collect();
    for i in 0..n {
        let mut e = vec![r(0); n];
        e[i] = r(-1);
        rows.push((e, r(0)));
    }
    let total = rows.len();
    let mut best: Option<Rational> = None;
    let mut pick = Vec::new();
    fn rec(
        start: usize,
        total: usize,
        n: usize,
        pick: &mut Vec<usize>,
        rows: &[(Vec<Rational>, Rational)],
        lp: &LinearProgram,
        best: &mut Option<Rational>,
    ) {
        if pick.len() == n {
            let a = pick.iter().map(|&i| rows[i].0.clone()).collect();
            let b = pick.iter().map(|&i| rows[i].1.clone()).collect();
            if let Some(x) = solve_square(a, b) {
                if lp.is_feasible(&x) {
                    let v = lp.objective_at(&x);
                    if best.as_ref().is_none_or(|b| v < *b) {
                        *best = Some(v);
                    }
                }
            }
            return;
        }
        for i in start..total {
            pick.push(i);
            rec(i + 1, total, n, pick, rows, lp, best);
            pick.pop();
        }
    }
    rec(0, total, n, &mut pick, &rows, lp, &mut best);
    best
}
