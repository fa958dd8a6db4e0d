use std::time::Instant;

use rhfill_core::graph::{
    build_cayley_ball, build_coned_off, build_cusped_ball, build_horoball, estimate_delta, four_point_delta,
    regular_geodesic, verify_metric_lemmas, BaseGraph, DeltaMode, VertexKey,
};
use rhfill_core::group::{make_oracle, make_pair, GroupSpec, PeripheralSpec, RelHypPair, DEFAULT_BALL_CAP};

fn free2() -> RelHypPair {
    let g = make_oracle(&GroupSpec::Free { rank: 2 }).unwrap();
    make_pair(g, &[PeripheralSpec::Factor(0), PeripheralSpec::Factor(1)]).unwrap()
}

/// Distance in `H(Z)` between `(0, 0)` and `(n, 0)`: up `k`, `⌈n / 2^k⌉` jumps, down `k`.
fn horoball_distance(n: u64) -> u64 {
    (0..40).map(|k| 2 * k + n.div_ceil(1 << k)).min().unwrap()
}

#[test]
fn horoball_geodesics_are_regular() {
    let t = Instant::now();
    let h = build_horoball(BaseGraph::path(129), 8).unwrap();
    let n = h.graph.len() as u32;
    let mut pairs = 0u64;
    for u in 0..n {
        let d = h.graph.bfs(u);
        for v in 0..n {
            let p = regular_geodesic(&h, u, v).unwrap();
            assert!(h.graph.is_path(&p));
            assert_eq!(p.start(), Some(u));
            assert_eq!(p.end(), Some(v));
            assert_eq!(p.len() as u32, d[v as usize], "{:?} {:?}", h.graph.key(u), h.graph.key(v));
            pairs += 1;
        }
    }
    assert!(pairs > 10_000);
    assert!(t.elapsed().as_secs() < 30);
}

#[test]
fn horoball_distance_closed_form() {
    let h = build_horoball(BaseGraph::path(129), 8).unwrap();
    let origin = h.vertex(64, 0).unwrap();
    let d = h.graph.bfs(origin);
    for n in 0..=64u32 {
        let v = h.vertex(64 + n, 0).unwrap();
        assert_eq!(u64::from(d[v as usize]), horoball_distance(u64::from(n)), "n = {n}");
    }
}

#[test]
fn cusped_distance_to_peripheral_powers() {
    let pair = free2();
    let o = pair.group();
    let g = build_cusped_ball(&pair, 8, DEFAULT_BALL_CAP).unwrap();
    let a8 = g.group_vertex(&o.parse("a^8").unwrap()).unwrap();
    assert_eq!(g.root_distance(a8), Some(6));
    for n in 1..=40u64 {
        let expect = horoball_distance(n);
        for w in [format!("a^{n}"), format!("b^-{n}")] {
            match g.group_vertex(&o.parse(&w).unwrap()) {
                Some(v) => assert_eq!(u64::from(g.root_distance(v).unwrap()), expect, "{w}"),
                None => assert!(expect > 8, "{w} missing from the window"),
            }
        }
    }
}

#[test]
fn cusped_window_is_the_ball() {
    let pair = free2();
    let small = build_cusped_ball(&pair, 4, DEFAULT_BALL_CAP).unwrap();
    let big = build_cusped_ball(&pair, 6, DEFAULT_BALL_CAP).unwrap();
    let mut inside = 0;
    for v in 0..big.len() as u32 {
        let d = big.root_distance(v).unwrap();
        assert!(d <= 6);
        assert!(big.depth(v) <= d);
        if d <= 4 {
            inside += 1;
            let w = small.vertex(big.key(v)).expect("vertex of the smaller ball");
            assert_eq!(small.root_distance(w), Some(d));
        }
    }
    assert_eq!(inside, small.len());
}

#[test]
fn cayley_ball_of_free_group_is_a_tree() {
    let pair = free2();
    let g = build_cayley_ball(&pair, 4, DEFAULT_BALL_CAP).unwrap();
    assert_eq!(g.len(), 2 * 81 - 1);
    assert_eq!(g.edge_count(), g.len() - 1);
    let est = estimate_delta(&g, DeltaMode::FourPointExhaustive, 0, DEFAULT_BALL_CAP).unwrap();
    assert_eq!(est.delta4, Some(0.0));
}

#[test]
fn coned_length_counts_syllables() {
    let pair = free2();
    let o = pair.group();
    let g = build_coned_off(&pair, 5, 6, DEFAULT_BALL_CAP).unwrap();
    let mut groups = 0;
    for v in 0..g.len() as u32 {
        let VertexKey::Group(x) = g.key(v) else { continue };
        groups += 1;
        let ex = o.letter_exponents(x).unwrap();
        if ex.iter().all(|&(_, e)| e.unsigned_abs() <= 6) {
            let hat: u64 = ex.iter().map(|&(_, e)| e.unsigned_abs().min(2)).sum();
            assert_eq!(u64::from(g.root_distance(v).unwrap()), hat, "{}", o.render(x));
        }
    }
    assert!(groups > 100);
    let x = o.parse("a^6 b^-5 a").unwrap();
    assert_eq!(g.root_distance(g.group_vertex(&x).unwrap()), Some(5));
}

#[test]
fn four_point_delta_of_small_graphs() {
    let cycle = |n: usize| move |i: usize, j: usize| {
        let d = i.abs_diff(j);
        d.min(n - d) as i64
    };
    let (d, w) = four_point_delta(8, cycle(8), &[]);
    assert_eq!(d, 2.0);
    let c = cycle(8);
    let mut sums = [c(w[0], w[1]) + c(w[2], w[3]), c(w[0], w[2]) + c(w[1], w[3]), c(w[0], w[3]) + c(w[1], w[2])];
    sums.sort();
    assert_eq!(sums[2] - sums[1], 4);
    assert_eq!(four_point_delta(6, cycle(6), &[]).0, 1.0);
    let path = |i: usize, j: usize| i.abs_diff(j) as i64;
    assert_eq!(four_point_delta(10, path, &[]).0, 0.0);
}

#[test]
fn metric_lemmas_on_the_free_group_window() {
    let t = Instant::now();
    let pair = free2();
    let report = verify_metric_lemmas(&pair, 6, 2, 5, None, DEFAULT_BALL_CAP).unwrap();
    assert!(report.comparison.pass, "{:?}", report.comparison.witnesses);
    assert!(report.horoball_entry.pass, "{:?}", report.horoball_entry.witnesses);
    assert!(report.quasidensity.pass, "{:?}", report.quasidensity.witnesses);
    assert!(report.comparison.checked > 100);
    assert!(report.horoball_entry.checked > 0);
    assert!(report.quasidensity.checked > 100);
    assert!(report.delta >= 1.0);
    eprintln!("metric lemmas: delta {} in {:?}", report.delta, t.elapsed());
}
