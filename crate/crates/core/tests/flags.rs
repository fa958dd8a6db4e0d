use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rhfill_core::flag::{
    attracting_flag, attracting_line, flag_distance, hausdorff, hausdorff_one_sided, is_transverse, q_divergence,
    q_limit_set, Flag, ParabolicType, ProjectiveMatrix, Representation, Verdict,
};
use rhfill_core::group::{make_oracle, GroupSpec, DEFAULT_BALL_CAP};
use rhfill_core::Error;

fn m2(a: f64, b: f64, c: f64, d: f64) -> ProjectiveMatrix {
    ProjectiveMatrix::from_rows(2, &[a, b, c, d]).unwrap()
}

#[test]
fn diagonal_attracting_line() {
    let g = m2(3.0, 0.0, 0.0, 1.0 / 3.0);
    let (xi, gaps) = attracting_flag(&g, &ParabolicType::lines(2)).unwrap();
    assert!((gaps[0] - 9.0).abs() < 1e-12);
    assert!(flag_distance(&xi, &Flag::line_at(0.0)).unwrap() < 1e-12);
    let (theta, gap) = attracting_line(&[3.0, 0.0, 0.0, 1.0 / 3.0]);
    assert!(theta.abs() < 1e-12 || (theta - PI).abs() < 1e-12);
    assert!((gap - 9.0).abs() < 1e-9);
}

#[test]
fn unipotent_attracting_line() {
    // [[1, t], [0, 1]] has top left singular vector at angle θ with tan 2θ = 2 / t
    let t = 15.0;
    let g = m2(1.0, 3.0, 0.0, 1.0).pow(5);
    let (xi, gaps) = attracting_flag(&g, &ParabolicType::lines(2)).unwrap();
    let theta = 0.5 * (2.0f64).atan2(t);
    assert!((xi.angle().unwrap() - theta).abs() < 1e-12);
    // σ_1 / σ_2 = σ_1² for a determinant one matrix
    let s1 = ((t * t + 2.0 + t * (t * t + 4.0).sqrt()) / 2.0).sqrt();
    assert!((gaps[0] - s1 * s1).abs() < 1e-9 * s1 * s1);
}

#[test]
fn rotations_have_no_attracting_line() {
    let (c, s) = (0.3f64.cos(), 0.3f64.sin());
    let err = attracting_flag(&m2(c, -s, s, c), &ParabolicType::lines(2)).unwrap_err();
    assert!(matches!(err, Error::GapTooSmall { index: 1, .. }));
}

#[test]
fn line_distance_is_sine() {
    for k in 0..50 {
        let t = k as f64 * PI / 50.0;
        let d = flag_distance(&Flag::line_at(0.3), &Flag::line_at(0.3 + t)).unwrap();
        assert!((d - t.sin().abs()).abs() < 1e-12);
    }
    let d = flag_distance(&Flag::line_at(0.0), &Flag::line_at(FRAC_PI_2)).unwrap();
    assert!((d - 1.0).abs() < 1e-12);
}

#[test]
fn full_flags_in_three_space() {
    let ty = ParabolicType::full(3);
    let standard = Flag::from_frame(ty.clone(), DMatrix::identity(3, 3)).unwrap();
    let reversed =
        Flag::from_frame(ty.clone(), DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0]))
            .unwrap();
    let (t, margin) = is_transverse(&standard, &reversed).unwrap();
    assert!(t);
    assert!((margin - 1.0).abs() < 1e-12);
    let (t, margin) = is_transverse(&standard, &standard).unwrap();
    assert!(!t);
    assert!(margin < 1e-12);
    // V_1 = e1 is transverse to W_2 = span(e1 + e2, e3), but W_1 = e1 + e2 lies in V_2
    let tilted =
        Flag::from_frame(ty.clone(), DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0]))
            .unwrap();
    assert!(!is_transverse(&standard, &tilted).unwrap().0);
    assert!(is_transverse(&Flag::from_frame(ParabolicType::lines(3), DMatrix::identity(3, 1)).unwrap(), &standard).is_err());
}

#[test]
fn attracting_flags_are_projective() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let ty = ParabolicType::full(3);
    for _ in 0..50 {
        let entries: Vec<f64> = (0..9).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let Ok(g) = ProjectiveMatrix::from_rows(3, &entries) else { continue };
        let scaled: Vec<f64> = entries.iter().map(|x| -4.5 * x).collect();
        let h = ProjectiveMatrix::from_rows(3, &scaled).unwrap();
        assert!(g.distance(&h) < 1e-12);
        let (Ok((a, gaps)), Ok((b, _))) = (attracting_flag(&g, &ty), attracting_flag(&h, &ty)) else { continue };
        if gaps.iter().any(|&x| x < 1.1) {
            continue;
        }
        assert!(flag_distance(&a, &b).unwrap() < 1e-9);
    }
}

#[test]
fn generic_flags_converge_under_powers() {
    let g = m2(2.0, 1.0, 1.0, 1.0);
    let ty = ParabolicType::lines(2);
    let (xi, _) = attracting_flag(&g.pow(40), &ty).unwrap();
    let (repel, _) = attracting_flag(&g.inverse().pow(40), &ty).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut tested = 0;
    while tested < 100 {
        let eta = Flag::line_at(rng.gen_range(0.0..PI));
        if flag_distance(&eta, &repel).unwrap() < 1e-3 {
            continue;
        }
        tested += 1;
        let mut prev = f64::INFINITY;
        for k in [5, 10, 20, 30] {
            let d = flag_distance(&g.pow(k).apply(&eta).unwrap(), &xi).unwrap();
            assert!(d <= prev + 1e-15);
            prev = d;
        }
        assert!(prev < 1e-9);
    }
}

#[test]
fn divergence_verdicts() {
    let ty = ParabolicType::lines(2);
    let hyperbolic = m2(2.0, 1.0, 1.0, 1.0);
    let seq: Vec<ProjectiveMatrix> = (1..=8).map(|k| hyperbolic.pow(k)).collect();
    let cert = q_divergence(&seq, &ty).unwrap();
    assert_eq!(cert.verdict, Verdict::Divergent);
    assert!(cert.limit.is_some());
    let (c, s) = (0.7f64.cos(), 0.7f64.sin());
    let rot = m2(c, -s, s, c);
    let seq: Vec<ProjectiveMatrix> = (1..=8).map(|k| rot.pow(k)).collect();
    assert_eq!(q_divergence(&seq, &ty).unwrap().verdict, Verdict::Bounded);
    let seq: Vec<ProjectiveMatrix> = (1..=3).map(|k| hyperbolic.pow(k)).collect();
    assert_eq!(q_divergence(&seq, &ty).unwrap().verdict, Verdict::Inconclusive);
}

#[test]
fn hausdorff_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..30 {
        let a: Vec<Flag> = (0..rng.gen_range(1..40)).map(|_| Flag::line_at(rng.gen_range(0.0..PI))).collect();
        let b: Vec<Flag> = (0..rng.gen_range(1..40)).map(|_| Flag::line_at(rng.gen_range(0.0..PI))).collect();
        let brute = |x: &[Flag], y: &[Flag]| {
            x.iter()
                .map(|p| y.iter().map(|q| flag_distance(p, q).unwrap()).fold(f64::INFINITY, f64::min))
                .fold(0.0, f64::max)
        };
        assert!((hausdorff_one_sided(&a, &b).unwrap() - brute(&a, &b)).abs() < 1e-12);
        assert!((hausdorff(&a, &b).unwrap() - brute(&a, &b).max(brute(&b, &a))).abs() < 1e-12);
    }
    assert_eq!(hausdorff_one_sided(&[], &[Flag::line_at(0.0)]).unwrap(), 0.0);
    assert_eq!(hausdorff_one_sided(&[Flag::line_at(0.0)], &[]).unwrap(), f64::INFINITY);
}

#[test]
fn limit_cloud_of_a_schottky_group() {
    let o = make_oracle(&GroupSpec::Free { rank: 2 }).unwrap();
    let rep = Representation::new(&o, vec![m2(1.0, 3.0, 0.0, 1.0), m2(1.0, 0.0, 3.0, 1.0)]).unwrap();
    let ty = ParabolicType::lines(2);
    assert!(q_limit_set(&rep, &o, 0, &ty, DEFAULT_BALL_CAP).unwrap().is_empty());
    let shallow = q_limit_set(&rep, &o, 5, &ty, DEFAULT_BALL_CAP).unwrap();
    let deep = q_limit_set(&rep, &o, 8, &ty, DEFAULT_BALL_CAP).unwrap();
    assert!(deep.len() > shallow.len());
    // attracting lines stay in the ping-pong sets around the two axes
    for xi in &deep {
        let near_a = flag_distance(xi, &Flag::line_at(0.0)).unwrap();
        let near_b = flag_distance(xi, &Flag::line_at(FRAC_PI_2)).unwrap();
        assert!(near_a.min(near_b) < 0.75);
    }
    assert!(hausdorff(&shallow, &deep).unwrap() < hausdorff(&q_limit_set(&rep, &o, 2, &ty, DEFAULT_BALL_CAP).unwrap(), &deep).unwrap());
}
