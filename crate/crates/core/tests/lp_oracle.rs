mod common;

use common::{r, random_lp, vertex_oracle};
use lgraph::lp::{solve_lp, LinearProgram, LpOutcome};
use lgraph::rational::Rational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn agrees_with_vertex_enumeration_on_random_programs() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut infeasible = 0;
    for _ in 0..100 {
        let lp = random_lp(&mut rng);
        let out = solve_lp(&lp).unwrap();
        match (vertex_oracle(&lp), &out) {
            (Some(v), LpOutcome::Optimal { x, value }) => {
                assert_eq!(*value, v, "{lp}");
                assert!(lp.is_feasible(x));
                assert_eq!(lp.objective_at(x), *value);
            }
            (None, LpOutcome::Infeasible) => infeasible += 1,
            (oracle, got) => panic!("oracle {oracle:?} vs solver {got:?} on\n{lp}"),
        }
    }
    assert!(infeasible < 100);
}

#[test]
fn repeated_solves_are_identical() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let lp = random_lp(&mut rng);
        let first = solve_lp(&lp).unwrap();
        for _ in 0..10 {
            assert_eq!(solve_lp(&lp).unwrap(), first);
        }
    }
}

#[test]
fn feasible_dual_multipliers_bound_the_optimum() {
    // min c.x, A x <= b, x >= 0: any y >= 0 with c + A^T y >= 0 gives c.x >= -b.y
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut checked = 0;
    for _ in 0..200 {
        let lp = random_lp(&mut rng);
        let LpOutcome::Optimal { value, .. } = solve_lp(&lp).unwrap() else { continue };
        let y: Vec<Rational> = lp.constraints.iter().map(|_| Rational::new(rng.gen_range(0..=6), 2)).collect();
        let reduced_ok = (0..lp.num_vars()).all(|j| {
            let s: Rational = lp.constraints.iter().zip(&y).map(|(c, yi)| &c.coeffs[j] * yi).sum();
            !(&lp.objective[j] + &s).is_negative()
        });
        if reduced_ok {
            let bound: Rational = lp.constraints.iter().zip(&y).map(|(c, yi)| -(&c.rhs * yi)).sum();
            assert!(value >= bound);
            checked += 1;
        }
    }
    assert!(checked > 0);
}

#[test]
fn hand_built_dual_certificate() {
    // min x + y s.t. x + 2y >= 2, 3x + y >= 3; optimum 7/5 at (4/5, 3/5)
    let mut lp = LinearProgram::new(["x", "y"]);
    lp.set_objective(vec![r(1), r(1)]);
    lp.add_ge(vec![r(1), r(2)], r(2));
    lp.add_ge(vec![r(3), r(1)], r(3));
    let LpOutcome::Optimal { x, value } = solve_lp(&lp).unwrap() else { panic!() };
    assert_eq!(value, Rational::new(7, 5));
    assert_eq!(x, vec![Rational::new(4, 5), Rational::new(3, 5)]);
    // multipliers (2/5, 1/5) certify the bound 2*2/5 + 3*1/5 = 7/5
    let bound = r(2) * Rational::new(2, 5) + r(3) * Rational::new(1, 5);
    assert_eq!(bound, value);
}

#[test]
fn warm_start_matches_cold_solves() {
    use lgraph::lp::WarmLp;
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    let mut extended = 0;
    for _ in 0..100 {
        let mut lp = random_lp(&mut rng);
        let mut warm = WarmLp::solve(&lp).unwrap();
        assert_eq!(warm.outcome(), solve_lp(&lp).unwrap());
        if !matches!(warm.outcome(), LpOutcome::Optimal { .. }) {
            continue;
        }
        for _ in 0..4 {
            let n = lp.num_vars();
            let coeffs: Vec<Rational> =
                (0..n).map(|_| Rational::new(rng.gen_range(-4..=4), rng.gen_range(1..=4))).collect();
            let rhs = Rational::new(rng.gen_range(-2..=6), rng.gen_range(1..=3));
            warm.add_le(&coeffs, &rhs).unwrap();
            lp.add_le(coeffs, rhs);
            let cold = solve_lp(&lp).unwrap();
            match (warm.outcome(), &cold) {
                (LpOutcome::Optimal { x, value }, LpOutcome::Optimal { value: v, .. }) => {
                    assert_eq!(value, *v);
                    assert!(lp.is_feasible(&x));
                    extended += 1;
                }
                (LpOutcome::Infeasible, LpOutcome::Infeasible) => break,
                (w, c) => panic!("warm {w:?} vs cold {c:?}"),
            }
        }
    }
    assert!(extended > 50);
}
