use std::f64::consts::FRAC_PI_2;
use std::time::Instant;

use rhfill_core::egf::{
    chabauty_check, check_compatibility, edf_condition_check, elliptic_family, enumerate_gpaths,
    fiber_consistency_check, gpath_tracking_check, limit_set_convergence, nested_diameters, sanov_automaton,
    sanov_pair, sanov_representation, sanov_set_system, validate_automaton, AutomatonGraph, AutomatonVertex, EdfQuery,
    FlagBall, GPath, Label, Outcome, RepFamily,
};
use rhfill_core::flag::{flag_distance, Flag, ParabolicType, ProjectiveMatrix, Representation};
use rhfill_core::group::{GroupElement, DEFAULT_BALL_CAP};

fn edf_query() -> EdfQuery {
    EdfQuery {
        peripheral: 0,
        u: vec![FlagBall::new(Flag::line_at(0.0), 0.5)],
        f: vec![GroupElement::identity()],
        k: vec![FlagBall::new(Flag::line_at(FRAC_PI_2), 0.3)],
    }
}

/// Largest distance from `e_1` of `[[1, 3k], [0, 1]]` applied to a dense sweep of
/// the closed ball of radius `r` about `e_2`.
fn brute_image_radius(k: i64, r: f64) -> f64 {
    let half = r.asin();
    (0..=20_000)
        .map(|i| {
            let phi = FRAC_PI_2 - half + 2.0 * half * f64::from(i) / 20_000.0;
            let (x, y) = (phi.cos() + 3.0 * k as f64 * phi.sin(), phi.sin());
            (y / x.hypot(y)).abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn sanov_automaton_is_well_formed() {
    let pair = sanov_pair();
    let g = sanov_automaton();
    let rep = validate_automaton(&g, &pair).unwrap();
    assert!(rep.pass());

    let id = GroupElement::identity();
    let coset = |p: usize| Label::Coset { g: id.clone(), peripheral: p, excluded: vec![id.clone()] };
    let lonely = AutomatonGraph::new(
        vec![
            AutomatonVertex { name: "v_a".into(), label: coset(0) },
            AutomatonVertex { name: "v_b".into(), label: coset(1) },
        ],
        &[(0, 1)],
    )
    .unwrap();
    let rep = validate_automaton(&lonely, &pair).unwrap();
    assert!(!rep.outgoing_edge.pass);
    assert_eq!(rep.outgoing_edge.witnesses, vec!["v_b".to_string()]);

    let a = pair.group().parse("a").unwrap();
    let shifted = AutomatonGraph::new(
        vec![
            AutomatonVertex { name: "v_a".into(), label: coset(0) },
            AutomatonVertex { name: "v_b".into(), label: coset(1) },
            AutomatonVertex {
                name: "w_b".into(),
                label: Label::Coset { g: a.clone(), peripheral: 1, excluded: vec![a.clone()] },
            },
        ],
        &[(0, 1), (1, 0), (2, 1)],
    )
    .unwrap();
    assert!(!validate_automaton(&shifted, &pair).unwrap().parabolic_vertex.pass);
    let bad = AutomatonGraph::new(
        vec![AutomatonVertex { name: "v".into(), label: Label::Coset { g: id.clone(), peripheral: 0, excluded: vec![a.clone(), pair.group().parse("b").unwrap()] } }],
        &[(0, 0)],
    )
    .unwrap();
    assert!(validate_automaton(&bad, &pair).is_err());
}

#[test]
fn gpath_counts() {
    let pair = sanov_pair();
    let g = sanov_automaton();
    for c in 1..=4u64 {
        // two start vertices, one successor each, 2c labels per coset
        let n2 = enumerate_gpaths(&g, &pair, 2, c).unwrap().count() as u64;
        assert_eq!(n2, 8 * c * c);
        let n3 = enumerate_gpaths(&g, &pair, 3, c).unwrap().count() as u64;
        assert_eq!(n3, 2 * (2 * c).pow(3));
    }
    let stream = enumerate_gpaths(&g, &pair, 4, 2).unwrap();
    assert!(stream.truncated());
    for p in stream {
        assert_eq!(p.len(), 4);
        for w in p.steps.windows(2) {
            assert_ne!(w[0].0, w[1].0);
        }
        for (v, a) in &p.steps {
            assert!(!a.is_identity());
            assert_eq!(pair.coset_key(*v, a), GroupElement::identity());
        }
    }
}

#[test]
fn sanov_system_is_compatible() {
    let t = Instant::now();
    let pair = sanov_pair();
    let rep = sanov_representation(&pair).unwrap();
    let c = check_compatibility(&rep, &pair, &sanov_automaton(), &sanov_set_system(), 12, 7).unwrap();
    assert_eq!(c.outcome, Outcome::Pass);
    assert_eq!(c.edges, 2);
    assert_eq!(c.elements, 48);
    assert!(c.truncated);
    // the reported margin is a lower bound on the exact one, attained at a^{±1}
    let exact = 0.7 - brute_image_radius(1, 0.72);
    assert!(c.min_margin > 0.0);
    assert!(c.min_margin <= exact + 1e-9, "{} vs {exact}", c.min_margin);
    assert!(c.min_margin > exact - 0.05);
    assert!(t.elapsed().as_secs() < 30);
}

#[test]
fn identity_representation_is_not_compatible() {
    let pair = sanov_pair();
    let id = ProjectiveMatrix::identity(2);
    let rep = Representation::new(pair.group(), vec![id.clone(), id]).unwrap();
    let c = check_compatibility(&rep, &pair, &sanov_automaton(), &sanov_set_system(), 4, 7).unwrap();
    assert_eq!(c.outcome, Outcome::Fail);
    assert!(c.min_margin < 0.0);
    assert!(c.witnesses.iter().any(|w| w.outcome == Outcome::Fail));
}

#[test]
fn nested_images_contract() {
    let t = Instant::now();
    let pair = sanov_pair();
    let rep = sanov_representation(&pair).unwrap();
    let g = sanov_automaton();
    let sys = sanov_set_system();
    let paths: Vec<GPath> = enumerate_gpaths(&g, &pair, 10, 3).unwrap().step_by(997).take(50).collect();
    assert_eq!(paths.len(), 50);
    for p in &paths {
        let d = nested_diameters(&rep, &pair, &g, p, &sys, 3).unwrap();
        assert!(d.rate < 0.9, "{d:?}");
        assert!(d.monotone && d.contracting);
        assert!(d.max_repetition <= 2 && d.backtracking_ok());
        assert_eq!(d.diameters.len(), 10);
    }
    assert!(t.elapsed().as_secs() < 60);
}

#[test]
fn elliptic_family_kernels_are_verified() {
    let fam = elliptic_family(&[3, 7, 30]).unwrap();
    let o = fam.pair.group();
    for m in &fam.members {
        let an = m.rep.image(o, &o.parse(&format!("a^{}", m.n)).unwrap()).unwrap();
        assert!(an.is_identity(1e-10));
        let short = m.rep.image(o, &o.parse(&format!("b^{}", m.n - 1)).unwrap()).unwrap();
        assert!(!short.is_identity(1e-6));
        // trace of the unimodular lift is ±2 cos(π/n)
        let u = m.rep.letter_matrices()[0].unimodular();
        let tr = (u[(0, 0)] + u[(1, 1)]).abs();
        assert!((tr - 2.0 * (std::f64::consts::PI / m.n as f64).cos()).abs() < 1e-12);
    }
    assert!(elliptic_family(&[1]).is_err());
    let bogus = RepFamily::new(
        fam.pair.clone(),
        fam.base.clone(),
        vec![rhfill_core::egf::FamilyMember { n: 5, rep: fam.base.clone(), kernels: fam.members[0].kernels.clone() }],
    );
    assert!(bogus.is_err());
}

#[test]
fn edf_condition_against_peripheral_stability() {
    let t = Instant::now();
    let fam = elliptic_family(&[3, 30, 40, 60]).unwrap();
    let rep = edf_condition_check(&fam, &edf_query(), 64, 1).unwrap();
    assert!(rep.base.edf_margin > 0.0);
    assert_eq!(rep.base.edf, Outcome::Inconclusive);
    assert!(!rep.base.exhaustive);
    for row in &rep.rows {
        let n = row.n.unwrap();
        assert_eq!(row.order, Some(n));
        assert!(row.exhaustive);
        assert_eq!(row.elements as u64, n - 1);
        assert_eq!(row.edf, Outcome::Pass, "n = {n}");
        assert!(row.edf_margin > 0.1);
        assert_eq!(row.stability, Outcome::Fail, "n = {n}");
        // the witness is a nontrivial kernel element, which fixes K
        let w = row.stability_witness.as_ref().unwrap();
        let m = fam.members.iter().find(|m| m.n == n).unwrap();
        assert!(!w.is_identity());
        assert!(m.rep.image(fam.pair.group(), w).unwrap().is_identity(1e-10));
        assert!((row.stability_margin + 0.5).abs() < 1e-9);
    }
    assert!(t.elapsed().as_secs() < 60);
}

#[test]
fn edf_rejects_overlapping_query() {
    let fam = elliptic_family(&[5]).unwrap();
    let mut q = edf_query();
    q.k = vec![FlagBall::new(Flag::line_at(0.2), 0.3)];
    assert!(edf_condition_check(&fam, &q, 16, 1).is_err());
}

#[test]
fn limit_sets_converge() {
    let t = Instant::now();
    let fam = elliptic_family(&[10, 20, 30, 40, 60]).unwrap();
    let rep = limit_set_convergence(&fam, 12, &ParabolicType::lines(2), 1 << 22).unwrap();
    assert!(rep.decreasing, "{rep:?}");
    let last = rep.rows.last().unwrap();
    assert_eq!(last.n, 60);
    assert!(last.d_hausdorff.unwrap() < 0.05);
    assert!(rep.rows.iter().all(|r| r.d_hausdorff.is_some()));
    assert!(t.elapsed().as_secs() < 300);
}

#[test]
fn chabauty_distances_shrink() {
    let t = Instant::now();
    let fam = elliptic_family(&[10, 20, 30, 40, 60]).unwrap();
    let rep = chabauty_check(&fam, 10.0, 8, 1 << 22).unwrap();
    for w in rep.rows.windows(2) {
        assert!(w[1].full.max() < w[0].full.max(), "{:?}", rep.rows);
        for p in 0..2 {
            assert!(w[1].peripheral[p].max() < w[0].peripheral[p].max());
        }
        assert!(w[1].algebraic < w[0].algebraic);
    }
    let constant = RepFamily::constant(fam.pair.clone(), fam.base.clone(), &[1, 2]);
    for row in chabauty_check(&constant, 10.0, 6, 1 << 22).unwrap().rows {
        assert_eq!(row.full.max(), 0.0);
        assert_eq!(row.algebraic, 0.0);
    }
    assert!(t.elapsed().as_secs() < 300);
}

#[test]
fn fibers_of_nearby_sequences() {
    let pair = sanov_pair();
    let o = pair.group();
    let rep = sanov_representation(&pair).unwrap();
    let ty = ParabolicType::lines(2);
    let powers = |l: &str, n: i64| -> Vec<GroupElement> { (1..=n).map(|k| o.parse(&format!("{l}^{k}")).unwrap()).collect() };
    let a = powers("a", 40);
    let mut ab = a.clone();
    ab.push(o.parse("a^40 b").unwrap());
    let b = powers("b", 40);
    let r = fiber_consistency_check(&rep, &pair, &ty, &[a.clone(), ab, b.clone()], 3, 3, 0.05).unwrap();
    assert!(r.pass);
    let near = r.pairs.iter().find(|p| (p.i, p.j) == (0, 1)).unwrap();
    assert!(near.close && near.limit_distance < 0.05);
    let far = r.pairs.iter().find(|p| (p.i, p.j) == (0, 2)).unwrap();
    assert!(!far.close && far.limit_distance > 0.1);
    // pretending the a- and b-tails are close must fail
    let r = fiber_consistency_check(&rep, &pair, &ty, &[a, b], 1000, 3, 0.05).unwrap();
    assert!(!r.pass);
}

#[test]
fn partial_products_track_geodesics() {
    let pair = sanov_pair();
    let o = pair.group();
    let a = o.parse("a").unwrap();
    let line = AutomatonGraph::new(vec![AutomatonVertex { name: "a".into(), label: Label::Singleton(a.clone()) }], &[(0, 0)])
        .unwrap();
    let p = GPath::new(&line, vec![(0, a.clone()), (0, a.clone()), (0, a)]).unwrap();
    let r = gpath_tracking_check(&pair, &p, 6, DEFAULT_BALL_CAP).unwrap();
    assert_eq!(r.tracking, 0);
    assert_eq!(r.geodesic_length, 3);
    assert!(r.certified);

    let g = sanov_automaton();
    let (a2, b2) = (o.parse("a^2").unwrap(), o.parse("b^2").unwrap());
    let p = GPath::new(&g, vec![(0, a2.clone()), (1, b2.clone()), (0, a2), (1, b2)]).unwrap();
    let r = gpath_tracking_check(&pair, &p, 8, DEFAULT_BALL_CAP).unwrap();
    assert!(r.tracking <= 3, "{r:?}");
    assert_eq!(r.geodesic_length, 8);
    assert_eq!(r.depth_ok, Some(true));
    assert!(gpath_tracking_check(&pair, &p, 6, DEFAULT_BALL_CAP).is_err());

    let deep = GPath::new(&g, vec![(0, o.parse("a^32").unwrap())]).unwrap();
    let r = gpath_tracking_check(&pair, &deep, 10, DEFAULT_BALL_CAP).unwrap();
    assert_eq!(r.geodesic_length, 10);
    assert!(matches!(r.max_depth, 3 | 4));
    assert_eq!(r.depth_ok, Some(true));

    let mut p = GPath::new(&g, vec![(0, o.parse("a^2").unwrap()), (1, o.parse("b").unwrap())]).unwrap();
    let (per, key) = p.mark_limiting_parabolic(&g, &pair).unwrap();
    assert_eq!(per, 1);
    assert_eq!(key, pair.coset_key(1, &o.parse("a^2").unwrap()));
    assert!(p.limiting_parabolic);
}

#[test]
fn flag_balls_sample_inside() {
    let ball = FlagBall::new(Flag::line_at(0.4), 0.3);
    let mut rng = rhfill_core::filling::rng(2);
    for x in ball.interior_samples(50, &mut rng).unwrap() {
        assert!(ball.depth_of(&x).unwrap() >= -1e-12);
    }
    for x in ball.boundary_samples(0.05, 8, &mut rng).unwrap() {
        let d = flag_distance(&x, &ball.center).unwrap();
        assert!((d - 0.35).abs() < 1e-9);
    }
}
