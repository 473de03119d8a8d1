use std::collections::BTreeSet;

use lgraph::learning_graph::{
    build_triangle_lg, graph_complexity, lemma_simple_cost_check, stage_complexity, triangle_flow,
    uniform_edge_probability, vertex_ratio_estimate, FlowViolation, LGraph, LemmaCheck, LgLabel, DEFAULT_SEED,
};
use lgraph::rational::{q, Rational};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn all_triples(n: usize) -> Vec<(usize, usize, usize)> {
    let mut v = Vec::new();
    for a in 1..=n {
        for b in 1..=n {
            for c in 1..=n {
                if a != b && b != c && a != c {
                    v.push((a, b, c));
                }
            }
        }
    }
    v
}

#[test]
fn every_triangle_flow_is_valid() {
    for (n, r1, r2, lam) in [(8, 1, 4, 1), (8, 1, 4, 3), (9, 2, 4, 2), (10, 2, 4, 1)] {
        let g = build_triangle_lg(n, r1, r2, lam).unwrap();
        let ts = all_triples(n);
        assert_eq!(ts.len(), n * (n - 1) * (n - 2));
        for t in ts {
            let f = triangle_flow(&g, t).unwrap();
            assert_eq!(lgraph::learning_graph::verify_flow(&g, &f), Ok(()), "{t:?} at n={n}");
        }
    }
}

#[test]
fn edges_only_add_slots_and_lengths_are_differences() {
    let g = build_triangle_lg(9, 2, 4, 2).unwrap();
    for e in g.edges() {
        let (u, w) = (&g.vertices()[e.from], &g.vertices()[e.to]);
        assert_eq!(w.level, u.level + 1);
        assert_eq!(u.slots & !w.slots, 0);
        assert_eq!(e.length, (w.slots & !u.slots).count_ones());
        assert_eq!(e.weight, Rational::one());
    }
    assert_eq!(g.vertices()[0].label, LgLabel::default());
    assert_eq!(g.level(1), 0..1);
}

#[test]
fn out_degrees_per_stage() {
    let (n, r1, r2, lam) = (10usize, 2usize, 4usize, 1usize);
    let g = build_triangle_lg(n, r1, r2, lam).unwrap();
    let expected = [840, n - r1 - r2 + 2, n - r1 - r2 + 1, (n - r1 - r2) * r2, r2 - lam, r1];
    for (t, d) in expected.iter().enumerate() {
        for u in g.level(t + 1) {
            assert_eq!(g.out_edges(u).len(), *d, "stage {}", t + 1);
        }
    }
    assert!(g.level(7).all(|u| g.out_edges(u).is_empty()));
}

#[test]
fn stage_numbers_at_desk_scale() {
    let g = build_triangle_lg(10, 2, 4, 1).unwrap();
    let f = triangle_flow(&g, (4, 7, 2)).unwrap();
    let s1 = stage_complexity(&g, &f, 1).unwrap();
    assert_eq!(s1.c0, q(2520, 1));
    assert_eq!(s1.c1, q(3, 140));
    assert_eq!(s1.c_squared, q(54, 1));
    assert!((s1.c - 54f64.sqrt()).abs() < 1e-12);
    let s5 = stage_complexity(&g, &f, 5).unwrap();
    assert_eq!(s5.c0, Rational::from(g.stage_edges(5).len()));
    match lemma_simple_cost_check(&g, &f, 2).unwrap() {
        LemmaCheck::Equal { d, g: fanout, v, w, .. } => {
            assert_eq!((d, fanout, v, w), (6, 1, 840, 140));
        }
        other => panic!("{other:?}"),
    }
    let (stages, total) = graph_complexity(&g, &f).unwrap();
    assert_eq!(stages.len(), 6);
    assert!(stages.iter().all(|s| s.c <= total));
}

#[test]
fn lemma_holds_with_equality_on_every_stage() {
    for (n, r1, r2, lam) in [(8, 1, 4, 1), (8, 1, 4, 2), (8, 1, 2, 1), (9, 2, 4, 3), (10, 2, 4, 1)] {
        let g = build_triangle_lg(n, r1, r2, lam).unwrap();
        let f = triangle_flow(&g, (1, 2, 3)).unwrap();
        for t in 1..=6 {
            let got = lemma_simple_cost_check(&g, &f, t).unwrap();
            assert!(matches!(got, LemmaCheck::Equal { .. }), "n={n} stage {t}: {got:?}");
        }
    }
}

#[test]
fn corrupted_weight_breaks_the_hypotheses() {
    let mut g = build_triangle_lg(9, 2, 4, 1).unwrap();
    let f = triangle_flow(&g, (1, 2, 3)).unwrap();
    let e = g.stage_edges(3).start + 5;
    g.set_weight(e, q(2, 1));
    assert!(matches!(lemma_simple_cost_check(&g, &f, 3).unwrap(), LemmaCheck::Hypothesis(_)));
    assert!(matches!(lemma_simple_cost_check(&g, &f, 4).unwrap(), LemmaCheck::Equal { .. }));
}

#[test]
fn injected_faults_are_reported() {
    let g = build_triangle_lg(9, 2, 4, 1).unwrap();
    let f = triangle_flow(&g, (2, 5, 9)).unwrap();
    let (e, v) = f.iter().find(|(e, _)| g.stage_edges(3).contains(e)).map(|(e, v)| (e, v.clone())).unwrap();
    let mut bad = f.clone();
    bad.set(e, v + q(1, 1000));
    match lgraph::learning_graph::verify_flow(&g, &bad) {
        Err(FlowViolation::Conservation { name, .. }) => assert!(name.contains("level")),
        other => panic!("{other:?}"),
    }
    let zero = lgraph::learning_graph::Flow::new(f.certificate);
    assert!(matches!(
        lgraph::learning_graph::verify_flow(&g, &zero),
        Err(FlowViolation::Source { total }) if total.is_zero()
    ));
    // a flow for another triangle does not reach this certificate
    let mut other = triangle_flow(&g, (1, 5, 9)).unwrap();
    other.certificate = f.certificate;
    assert!(matches!(lgraph::learning_graph::verify_flow(&g, &other), Err(FlowViolation::Certificate { .. })));
}

#[test]
fn degenerate_zero_length_stage() {
    let g = LGraph::from_parts(3, vec![(1, LgLabel::default()), (2, LgLabel::default())], vec![(0, 1)]).unwrap();
    let mut f = lgraph::learning_graph::Flow::new(0);
    f.set(0, Rational::one());
    assert_eq!(lgraph::learning_graph::verify_flow(&g, &f), Ok(()));
    let s = stage_complexity(&g, &f, 1).unwrap();
    assert_eq!((s.c0, s.c1), (Rational::zero(), Rational::zero()));
    assert!(stage_complexity(&g, &f, 2).is_err());
}

#[test]
fn complexities_are_invariant_under_relabeling() {
    let g = build_triangle_lg(9, 2, 4, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let t = (3, 8, 1);
    let f = triangle_flow(&g, t).unwrap();
    let base: Vec<Rational> = (1..=6).map(|s| stage_complexity(&g, &f, s).unwrap().c_squared).collect();
    for _ in 0..5 {
        let mut perm: Vec<usize> = (0..9).collect();
        perm.shuffle(&mut rng);
        let moved = f.relabel(&g, &perm).unwrap();
        assert_eq!(lgraph::learning_graph::verify_flow(&g, &moved), Ok(()));
        let image = (perm[t.0 - 1] + 1, perm[t.1 - 1] + 1, perm[t.2 - 1] + 1);
        assert_eq!(moved, triangle_flow(&g, image).unwrap());
        let c: Vec<Rational> = (1..=6).map(|s| stage_complexity(&g, &moved, s).unwrap().c_squared).collect();
        assert_eq!(c, base);
    }
}

/// Fraction of all bipartite graphs with the given degrees that contain the pair (0,0).
fn degree_class_oracle(l: usize, g: usize, d: usize) -> Rational {
    let right = l * d / g;
    let (mut total, mut with) = (0i64, 0i64);
    for mask in 0u64..1 << (l * g) {
        let ok_left = (0..l).all(|i| (0..g).filter(|&j| mask >> (i * g + j) & 1 == 1).count() == d);
        let ok_right = ok_left && (0..g).all(|j| (0..l).filter(|&i| mask >> (i * g + j) & 1 == 1).count() == right);
        if ok_right {
            total += 1;
            with += (mask & 1) as i64;
        }
    }
    Rational::new(with, total)
}

#[test]
fn edge_probability_is_d_over_g() {
    let mut checked = 0;
    for l in 1..=3 {
        for g in 1..=6 {
            for d in 0..=g {
                if (l * d) % g != 0 {
                    assert!(uniform_edge_probability(l, g, d).is_err());
                    continue;
                }
                let p = uniform_edge_probability(l, g, d).unwrap();
                assert_eq!(p, Rational::new(d as i64, g as i64), "({l},{g},{d})");
                assert_eq!(p, degree_class_oracle(l, g, d));
                checked += 1;
            }
        }
    }
    assert!(checked > 20);
}

#[test]
fn vertex_ratios_at_desk_scale() {
    let g = build_triangle_lg(10, 2, 4, 1).unwrap();
    let f = triangle_flow(&g, (1, 2, 3)).unwrap();
    let exact = [q(1, 1), q(1, 6), q(1, 18), q(2, 45), q(1, 120), q(1, 180), q(1, 360)];
    for level in 1..=7 {
        let r = vertex_ratio_estimate(&g, &f, level, 20_000, DEFAULT_SEED).unwrap();
        assert_eq!(r.exact, exact[level - 1], "level {level}");
        assert!(r.within_three_se(), "{r:?}");
        assert!(r.above_bound(), "{r:?}");
    }
    assert_eq!(vertex_ratio_estimate(&g, &f, 6, 10_000, 7).unwrap().bound, q(2, 10) * q(4, 10) * q(1, 10) * q(1, 4));
    assert!(vertex_ratio_estimate(&g, &f, 3, 100, 7).is_err());
    assert_eq!(vertex_ratio_estimate(&g, &f, 4, 10_000, 9), vertex_ratio_estimate(&g, &f, 4, 10_000, 9));
}

#[test]
fn vertex_ratio_matches_full_enumeration_at_n8() {
    let g = build_triangle_lg(8, 1, 4, 2).unwrap();
    let f = triangle_flow(&g, (2, 6, 7)).unwrap();
    let inflow = f.inflows(&g);
    for level in [3, 5, 6] {
        let p = g.vertices()[g.level(level).start].label;
        let mut hits = 0i64;
        let mut total = 0i64;
        let mut perm: Vec<usize> = (0..8).collect();
        heap_permutations(&mut perm, 8, &mut |pm| {
            let id = g.vertex_id(level, &p.permuted(pm)).unwrap();
            total += 1;
            if inflow.contains_key(&id) {
                hits += 1;
            }
        });
        let r = vertex_ratio_estimate(&g, &f, level, 10_000, 3).unwrap();
        assert_eq!(r.exact, Rational::new(hits, total), "level {level}");
    }
}

fn heap_permutations(a: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
    if k == 1 {
        f(a);
        return;
    }
    for i in 0..k {
        heap_permutations(a, k - 1, f);
        if k.is_multiple_of(2) {
            a.swap(i, k - 1);
        } else {
            a.swap(0, k - 1);
        }
    }
}

#[test]
fn dump_matches_golden_file() {
    let g = build_triangle_lg(8, 1, 4, 1).unwrap();
    let dump = g.dump_levels(1..3);
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/golden/lg_n8_levels_1_2.txt");
    if std::env::var_os("LGRAPH_BLESS").is_some() {
        std::fs::write(path, &dump).unwrap();
    }
    let golden = std::fs::read_to_string(path).unwrap();
    assert_eq!(dump, golden);
    let full = g.dump();
    let vertex_lines = full.lines().filter(|l| l.starts_with("v ")).count();
    let edge_lines: BTreeSet<&str> = full.lines().filter(|l| l.starts_with("e ")).collect();
    assert_eq!(vertex_lines, g.vertices().len());
    assert_eq!(edge_lines.len(), g.edges().len());
}
