use std::sync::LazyLock;

use proptest::prelude::*;
use rhfill_core::egf::sanov_pair;
use rhfill_core::filling::{build_quotient_cusped, lift_round_trip, rng, FillingGeometry};
use rhfill_core::flag::{flag_distance, Flag, ProjectiveMatrix};
use rhfill_core::graph::{build_cusped_ball, CuspedGraph};
use rhfill_core::group::{
    make_oracle, make_pair, GroupElement, GroupOracle, GroupSpec, KernelSpec, PeripheralSpec, DEFAULT_BALL_CAP,
};

static WINDOW: LazyLock<CuspedGraph> = LazyLock::new(|| build_cusped_ball(&sanov_pair(), 4, DEFAULT_BALL_CAP).unwrap());

static FILLED: LazyLock<FillingGeometry> = LazyLock::new(|| {
    let pair = sanov_pair();
    let mut k = KernelSpec::new();
    k.insert(0, vec![pair.group().parse("a^7").unwrap()]);
    k.insert(1, vec![pair.group().parse("b^7").unwrap()]);
    build_quotient_cusped(&pair, &pair.fill(&k).unwrap(), 4, DEFAULT_BALL_CAP).unwrap()
});

fn product() -> GroupOracle {
    make_oracle(&GroupSpec::FreeProduct(vec![
        GroupSpec::FiniteCyclic { order: 5 },
        GroupSpec::FreeAbelian { rank: 2 },
        GroupSpec::Free { rank: 1 },
    ]))
    .unwrap()
}

fn word() -> impl Strategy<Value = String> {
    prop::collection::vec((0usize..4, -6i64..=6), 0..10).prop_map(|w| {
        w.iter().map(|&(l, e)| format!("{}^{e}", char::from(b'a' + l as u8))).collect::<Vec<_>>().join(" ")
    })
}

fn element(o: &GroupOracle, w: &str) -> GroupElement {
    o.parse(w).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn group_axioms(x in word(), y in word(), z in word()) {
        let o = product();
        let (x, y, z) = (element(&o, &x), element(&o, &y), element(&o, &z));
        prop_assert_eq!(o.multiply(&o.multiply(&x, &y), &z), o.multiply(&x, &o.multiply(&y, &z)));
        prop_assert!(o.multiply(&x, &o.inverse(&x)).is_identity());
        prop_assert_eq!(o.multiply(&o.identity(), &x), x.clone());
        prop_assert_eq!(o.parse(&o.render(&x)).unwrap(), x);
    }

    #[test]
    fn word_length_is_a_norm(x in word(), y in word()) {
        let o = product();
        let (x, y) = (element(&o, &x), element(&o, &y));
        prop_assert_eq!(o.word_length(&x), o.word_length(&o.inverse(&x)));
        prop_assert!(o.word_length(&o.multiply(&x, &y)) <= o.word_length(&x) + o.word_length(&y));
        prop_assert_eq!(o.word_length(&x) == 0, x.is_identity());
    }

    #[test]
    fn filling_projection_is_a_homomorphism(x in word(), y in word(), n in 2i64..9) {
        let o = product();
        let pair = make_pair(o.clone(), &[PeripheralSpec::Factor(0), PeripheralSpec::Factor(1), PeripheralSpec::Factor(2)]).unwrap();
        let mut k = KernelSpec::new();
        k.insert(1, vec![o.parse(&format!("b^{n} c")).unwrap()]);
        k.insert(2, vec![o.parse(&format!("d^{n}")).unwrap()]);
        let f = pair.fill(&k).unwrap();
        let q = f.quotient_oracle();
        let (x, y) = (element(&o, &x), element(&o, &y));
        prop_assert_eq!(f.project(&o, &o.multiply(&x, &y)), q.multiply(&f.project(&o, &x), &f.project(&o, &y)));
        prop_assert!(q.word_length(&f.project(&o, &x)) <= o.word_length(&x));
    }

    #[test]
    fn line_distance_is_a_metric(a in 0.0f64..3.2, b in 0.0f64..3.2, c in 0.0f64..3.2) {
        let (x, y, z) = (Flag::line_at(a), Flag::line_at(b), Flag::line_at(c));
        let d = |p: &Flag, q: &Flag| flag_distance(p, q).unwrap();
        prop_assert!((d(&x, &y) - d(&y, &x)).abs() < 1e-15);
        prop_assert!(d(&x, &z) <= d(&x, &y) + d(&y, &z) + 1e-12);
        prop_assert!(d(&x, &x) < 1e-15);
    }

    #[test]
    fn projective_action(entries in prop::array::uniform4(-3.0f64..3.0), s in 0.1f64..10.0, a in 0.0f64..3.2) {
        let Ok(g) = ProjectiveMatrix::from_rows(2, &entries) else { return Ok(()) };
        prop_assume!(g.unimodular().determinant().abs() > 0.5);
        let scaled: Vec<f64> = entries.iter().map(|x| -s * x).collect();
        let h = ProjectiveMatrix::from_rows(2, &scaled).unwrap();
        prop_assert!(g.distance(&h) < 1e-10);
        let x = Flag::line_at(a);
        prop_assert!(flag_distance(&g.apply(&x).unwrap(), &h.apply(&x).unwrap()).unwrap() < 1e-10);
        let back = g.inverse().apply(&g.apply(&x).unwrap()).unwrap();
        prop_assert!(flag_distance(&back, &x).unwrap() < 1e-8);
    }

    #[test]
    fn window_distance_is_a_metric(u in any::<prop::sample::Index>(), v in any::<prop::sample::Index>(), w in any::<prop::sample::Index>()) {
        let g = &*WINDOW;
        let (u, v, w) = (u.index(g.len()) as u32, v.index(g.len()) as u32, w.index(g.len()) as u32);
        let d = |x, y| g.distance(x, y).unwrap();
        prop_assert_eq!(d(u, v), d(v, u));
        prop_assert_eq!(d(u, v) == 0, u == v);
        prop_assert!(d(u, w) <= d(u, v) + d(v, w));
        let (ru, rv) = (g.root_distance(u).unwrap(), g.root_distance(v).unwrap());
        prop_assert!(ru.abs_diff(rv) <= d(u, v));
        prop_assert!(ru <= 4);
    }

    // walks no longer than the window radius stay where every edge has a preimage
    #[test]
    fn lifts_project_back(seed in any::<u64>(), len in 1usize..=4) {
        let fg = &*FILLED;
        let mut r = rng(seed);
        let p = fg.random_target_walk(len, &mut r);
        prop_assert!(lift_round_trip(fg, &p).unwrap());
        let lift = fg.lift_path(&p, fg.source.root().unwrap()).unwrap();
        prop_assert_eq!(lift.len(), p.len());
    }
}
