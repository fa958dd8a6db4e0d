use std::time::Instant;

use rhfill_core::filling::{
    build_quotient_cusped, check_descent_quasigeodesic, check_local_isometry, check_uniform_delta, lift_round_trip, rng,
};
use rhfill_core::graph::VertexKey;
use rhfill_core::group::{make_oracle, make_pair, GroupSpec, KernelSpec, PeripheralSpec, RelHypPair, DEFAULT_BALL_CAP};

fn free2() -> RelHypPair {
    let g = make_oracle(&GroupSpec::Free { rank: 2 }).unwrap();
    make_pair(g, &[PeripheralSpec::Factor(0), PeripheralSpec::Factor(1)]).unwrap()
}

fn kernels(pair: &RelHypPair, n: u64) -> KernelSpec {
    let o = pair.group();
    let mut k = KernelSpec::new();
    k.insert(0, vec![o.parse(&format!("a^{n}")).unwrap()]);
    k.insert(1, vec![o.parse(&format!("b^{n}")).unwrap()]);
    k
}

/// Distance in `H(Z)` between `(x, k1)` and `(y, k2)` with `|x - y| = d`.
fn horoball_distance(k1: u64, k2: u64, d: u64) -> u64 {
    (k1.max(k2)..40).map(|k| 2 * k - k1 - k2 + d.div_ceil(1 << k)).min().unwrap()
}

#[test]
fn edge_map_of_a_long_filling() {
    let pair = free2();
    let filling = pair.fill(&kernels(&pair, 60)).unwrap();
    let fg = build_quotient_cusped(&pair, &filling, 5, DEFAULT_BALL_CAP).unwrap();
    let r = fg.edge_report();
    assert!(r.sound(), "{r:?}");
    assert_eq!(r.loops, 0);
    assert!(fg.is_window_isomorphism());
}

#[test]
fn edge_map_of_a_short_filling() {
    let pair = free2();
    let filling = pair.fill(&kernels(&pair, 2)).unwrap();
    let fg = build_quotient_cusped(&pair, &filling, 4, DEFAULT_BALL_CAP).unwrap();
    let r = fg.edge_report();
    assert_eq!(r.vertical_loops, 0);
    assert_eq!(r.depth_changes, 0);
    assert!(r.surjective);
    assert!(!fg.is_window_isomorphism());
}

#[test]
fn lifts_project_back() {
    let t = Instant::now();
    let pair = free2();
    let filling = pair.fill(&kernels(&pair, 7)).unwrap();
    let fg = build_quotient_cusped(&pair, &filling, 6, DEFAULT_BALL_CAP).unwrap();
    let mut r = rng(5);
    for i in 0..1000 {
        let p = fg.random_target_walk(1 + i % 6, &mut r);
        assert!(lift_round_trip(&fg, &p).unwrap(), "walk {i}");
    }
    let root = fg.source.root().unwrap();
    for i in 0..1000 {
        let p = fg.random_target_geodesic(&mut r).unwrap();
        let lift = fg.lift_path(&p, root).unwrap();
        assert_eq!(fg.project_path(&lift), p);
        let end = lift.end().unwrap();
        assert_eq!(fg.source.root_distance(end), Some(p.len() as u32), "geodesic {i}");
    }
    assert!(t.elapsed().as_secs() < 30);
}

#[test]
fn short_kernel_breaks_local_isometry() {
    let pair = free2();
    let filling = pair.fill(&kernels(&pair, 3)).unwrap();
    let rep = check_local_isometry(&pair, &filling, 5, DEFAULT_BALL_CAP).unwrap();
    assert!(!rep.pass);
    assert!(!rep.witnesses.is_empty());
    for w in &rep.witnesses {
        assert!(w.target_distance < w.source_distance);
    }
}

#[test]
fn local_isometry_threshold_at_radius_five() {
    let pair = free2();
    let fifty = pair.fill(&kernels(&pair, 50)).unwrap();
    let rep = check_local_isometry(&pair, &fifty, 5, DEFAULT_BALL_CAP).unwrap();
    assert!(!rep.pass);
    assert!(rep.injective);
    let fg = build_quotient_cusped(&pair, &fifty, 10, DEFAULT_BALL_CAP).unwrap();
    // every witness sits in one horoball and is explained by wrapping around Z/50
    for w in &rep.witnesses {
        let (VertexKey::Horo { peripheral: p, base: x, depth: k1 }, VertexKey::Horo { peripheral: q, base: y, depth: k2 }) =
            (fg.source.key(w.x), fg.source.key(w.y))
        else {
            panic!("witness off the horoballs");
        };
        assert_eq!(p, q);
        let o = pair.group();
        let ex = o.letter_exponents(&o.multiply(&o.inverse(x), y)).unwrap();
        assert_eq!(ex.len(), 1);
        let d = ex[0].1.unsigned_abs();
        let (k1, k2) = (u64::from(*k1), u64::from(*k2));
        assert_eq!(u64::from(w.source_distance), horoball_distance(k1, k2, d));
        assert_eq!(u64::from(w.target_distance), horoball_distance(k1, k2, 50 - d));
    }

    let fifty_six = pair.fill(&kernels(&pair, 56)).unwrap();
    assert!(!check_local_isometry(&pair, &fifty_six, 5, DEFAULT_BALL_CAP).unwrap().pass);
    let fifty_seven = pair.fill(&kernels(&pair, 57)).unwrap();
    let rep = check_local_isometry(&pair, &fifty_seven, 5, DEFAULT_BALL_CAP).unwrap();
    assert!(rep.pass, "{:?}", rep.witnesses);
    assert!(rep.witnesses.is_empty());
}

#[test]
fn local_isometry_radius_is_monotone() {
    let pair = free2();
    let filling = pair.fill(&kernels(&pair, 12)).unwrap();
    let passes: Vec<bool> =
        (1..=4).map(|r| check_local_isometry(&pair, &filling, r, DEFAULT_BALL_CAP).unwrap().pass).collect();
    for w in passes.windows(2) {
        assert!(w[0] || !w[1], "{passes:?}");
    }
    assert!(passes[0]);
}

#[test]
fn long_fillings_keep_delta() {
    let pair = free2();
    let family: Vec<(String, KernelSpec)> = [50u64, 60, 70].iter().map(|&n| (format!("n={n}"), kernels(&pair, n))).collect();
    let rep = check_uniform_delta(&pair, &family, 6, 0.0, DEFAULT_BALL_CAP).unwrap();
    assert!(rep.bounded, "{rep:?}");
    for row in &rep.rows {
        assert_eq!(row.delta, rep.unfilled.delta);
        assert_eq!(row.core_size, rep.unfilled.core_size);
    }
}

#[test]
fn projected_geodesics_stay_quasigeodesic() {
    let pair = free2();
    let filling = pair.fill(&kernels(&pair, 30)).unwrap();
    let fg = build_quotient_cusped(&pair, &filling, 6, DEFAULT_BALL_CAP).unwrap();
    let rep = check_descent_quasigeodesic(&fg, 1.0, 1.0, 3, 200, 9).unwrap();
    assert!(rep.pass, "{:?}", rep.witnesses);
    assert_eq!(rep.paths, 200);
    assert!(rep.sub_pairs > 200);
}
