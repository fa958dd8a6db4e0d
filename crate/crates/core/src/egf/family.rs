use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use super::{AutomatonGraph, AutomatonVertex, FlagBall, Label, Outcome, SetSystem};
use crate::error::{Error, Result};
use crate::filling::rng;
use crate::flag::q_limit_set_on;
use crate::flag::{hausdorff, q_divergence, Flag, ParabolicType, ProjectiveMatrix, Representation, Verdict, TOLERANCES};
use crate::group::{make_oracle, make_pair, GroupElement, GroupSpec, KernelSpec, PeripheralSpec, RelHypPair};

/// Off-diagonal entry of the built-in parabolic generators.
pub const SANOV_T: f64 = 3.0;

/// `(F_2, {⟨a⟩, ⟨b⟩})`.
pub fn sanov_pair() -> RelHypPair {
    let g = make_oracle(&GroupSpec::Free { rank: 2 }).expect("free group");
    make_pair(g, &[PeripheralSpec::Factor(0), PeripheralSpec::Factor(1)]).expect("free factors")
}

/// `a = [[1, t], [0, 1]]`, `b = [[1, 0], [t, 1]]` with `t = 3`.
pub fn sanov_representation(pair: &RelHypPair) -> Result<Representation> {
    let a = ProjectiveMatrix::from_rows(2, &[1.0, SANOV_T, 0.0, 1.0])?;
    let b = ProjectiveMatrix::from_rows(2, &[1.0, 0.0, SANOV_T, 1.0])?;
    Representation::new(pair.group(), vec![a, b])
}

/// Two parabolic vertices `⟨a⟩ ∖ {id}` and `⟨b⟩ ∖ {id}` with an edge each way.
pub fn sanov_automaton() -> AutomatonGraph {
    let id = GroupElement::identity();
    let coset = |p: usize| Label::Coset { g: id.clone(), peripheral: p, excluded: vec![id.clone()] };
    let vertices = vec![
        AutomatonVertex { name: "v_a".into(), label: coset(0) },
        AutomatonVertex { name: "v_b".into(), label: coset(1) },
    ];
    AutomatonGraph::new(vertices, &[(0, 1), (1, 0)]).expect("edges in range")
}

/// Balls of radius 0.7 about the fixed lines `span(e_1)`, `span(e_2)` of `a`, `b`, with `ε = 0.02`.
pub fn sanov_set_system() -> SetSystem {
    let (e1, e2) = (Flag::line_at(0.0), Flag::line_at(core::f64::consts::FRAC_PI_2));
    SetSystem::new(
        vec![vec![FlagBall::new(e1.clone(), 0.7)], vec![FlagBall::new(e2.clone(), 0.7)]],
        0.02,
        vec![e2, e1],
    )
    .expect("valid built-in system")
}

#[derive(Debug, Clone, PartialEq)]
pub struct FamilyMember {
    pub n: u64,
    pub rep: Representation,
    /// Declared kernel of `σ_n` on the peripherals.
    pub kernels: KernelSpec,
}

/// A base representation `ρ` and representations `σ_n` indexed by `n`.
#[derive(Debug, Clone)]
pub struct RepFamily {
    pub pair: RelHypPair,
    pub base: Representation,
    pub members: Vec<FamilyMember>,
}

impl RepFamily {
    /// Checks that every declared kernel element maps to the identity.
    pub fn new(pair: RelHypPair, base: Representation, members: Vec<FamilyMember>) -> Result<Self> {
        let oracle = pair.group();
        for m in &members {
            if m.rep.dim() != base.dim() {
                return Err(Error::DimensionMismatch(format!("member {} has another dimension", m.n)));
            }
            for ks in m.kernels.values() {
                for k in ks {
                    let img = m.rep.image(oracle, k)?;
                    if !img.is_identity(TOLERANCES.kernel) {
                        return Err(Error::InvalidParameter(format!(
                            "declared kernel element {} is not sent to the identity at n = {}",
                            oracle.render(k),
                            m.n
                        )));
                    }
                }
            }
        }
        Ok(RepFamily { pair, base, members })
    }

    /// Every member equal to the base, with no kernels.
    pub fn constant(pair: RelHypPair, base: Representation, ns: &[u64]) -> Self {
        let members = ns.iter().map(|&n| FamilyMember { n, rep: base.clone(), kernels: KernelSpec::new() }).collect();
        RepFamily { pair, base, members }
    }
}

/// `a_n = a [[1, 0], [-ε_n, 1]]`, `b_n = [[1, -ε_n], [0, 1]] b` with
/// `ε_n = 2(1 - cos(π/n)) / t`, so both have trace `2 cos(π/n)` and order `n`
/// in `PSL(2, ℝ)`. Kernels `{a^n}`, `{b^n}` are declared and verified.
pub fn elliptic_family(ns: &[u64]) -> Result<RepFamily> {
    let pair = sanov_pair();
    let base = sanov_representation(&pair)?;
    let oracle = pair.group();
    let mut members = Vec::with_capacity(ns.len());
    for &n in ns {
        if n < 2 {
            return Err(Error::InvalidParameter(format!("elliptic order {n} is below 2")));
        }
        let e = 2.0 * (1.0 - libm::cos(core::f64::consts::PI / n as f64)) / SANOV_T;
        let t = SANOV_T;
        let a = ProjectiveMatrix::from_rows(2, &[1.0 - t * e, t, -e, 1.0])?;
        let b = ProjectiveMatrix::from_rows(2, &[1.0 - t * e, -e, t, 1.0])?;
        let mut kernels = KernelSpec::new();
        kernels.insert(0, vec![oracle.parse(&format!("a^{n}"))?]);
        kernels.insert(1, vec![oracle.parse(&format!("b^{n}"))?]);
        members.push(FamilyMember { n, rep: Representation::new(oracle, vec![a, b])?, kernels });
    }
    RepFamily::new(pair, base, members)
}

/// A query `(σ(Γ_p) ∖ σ(F)) K ⊂ U`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdfQuery {
    pub peripheral: usize,
    pub u: Vec<FlagBall>,
    pub f: Vec<GroupElement>,
    pub k: Vec<FlagBall>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdfRow {
    /// `None` for the base representation.
    pub n: Option<u64>,
    /// Order of `σ_n(Γ_p)` when finite.
    pub order: Option<u64>,
    /// Whether the whole image was tested rather than a depth-cut part of it.
    pub exhaustive: bool,
    pub elements: usize,
    pub edf: Outcome,
    pub edf_margin: f64,
    pub edf_witness: Option<GroupElement>,
    /// `σ(Γ_p ∖ F) K ⊂ U`.
    pub stability: Outcome,
    pub stability_margin: f64,
    pub stability_witness: Option<GroupElement>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdfReport {
    pub depth: u64,
    pub base: EdfRow,
    pub rows: Vec<EdfRow>,
}

/// Worst depth in `U` of the images of the sample points.
fn worst_depth(m: &ProjectiveMatrix, pts: &[Flag], u: &[FlagBall]) -> Result<f64> {
    let mut worst = f64::INFINITY;
    for x in pts {
        let y = m.apply(x)?;
        let mut best = f64::NEG_INFINITY;
        for b in u {
            best = best.max(b.depth_of(&y)?);
        }
        worst = worst.min(best);
    }
    Ok(worst)
}

/// Tests the elements against the sample, returning the worst margin and its element.
fn sweep(
    rep: &Representation,
    pair: &RelHypPair,
    elements: &[GroupElement],
    pts: &[Flag],
    u: &[FlagBall],
) -> Result<(f64, Option<GroupElement>)> {
    let mut worst = (f64::INFINITY, None);
    for g in elements {
        let d = worst_depth(&rep.image(pair.group(), g)?, pts, u)?;
        if d < worst.0 {
            worst = (d, Some(g.clone()));
        }
    }
    Ok(worst)
}

fn verdict(margin: f64, exhaustive: bool) -> Outcome {
    match (margin > 0.0, exhaustive) {
        (false, _) => Outcome::Fail,
        (true, true) => Outcome::Pass,
        (true, false) => Outcome::Inconclusive,
    }
}

/// For the base and every member, tests the extended Dehn filling condition
/// `(σ(Γ_p) ∖ σ(F)) K ⊂ U` next to peripheral stability `σ(Γ_p ∖ F) K ⊂ U` on a
/// seeded sample of `K`. Finite images are enumerated in full, one lift per
/// class; infinite ones are cut at peripheral length `depth` and a pass there
/// is only inconclusive.
pub fn edf_condition_check(family: &RepFamily, query: &EdfQuery, depth: u64, seed: u64) -> Result<EdfReport> {
    let pair = &family.pair;
    let oracle = pair.group();
    let p = pair.peripheral(query.peripheral)?;
    for kb in &query.k {
        for ub in &query.u {
            if crate::flag::flag_distance(&kb.center, &ub.center)? <= kb.radius + ub.radius {
                return Err(Error::InvalidParameter("K is not separated from U by a positive margin".into()));
            }
        }
    }
    let mut rng = rng(seed);
    let mut pts = Vec::new();
    for b in &query.k {
        pts.push(b.center.clone());
        pts.extend(b.interior_samples(64, &mut rng)?);
        pts.extend(b.boundary_samples(0.0, 64, &mut rng)?);
    }
    let fac = &oracle.factors()[p.factor];
    let ball = fac.ball(depth, crate::group::DEFAULT_BALL_CAP).ok_or(Error::BudgetExceeded {
        what: "peripheral ball",
        limit: crate::group::DEFAULT_BALL_CAP,
    })?;
    let cut: Vec<GroupElement> = ball.iter().map(|(x, _)| oracle.syllable(p.factor, x)).collect();

    // base: Γ_p ∖ F up to the cutoff, where both conditions coincide
    let outside_f: Vec<GroupElement> = cut.iter().filter(|g| !query.f.contains(g)).cloned().collect();
    let exhaustive = fac.order().is_some_and(|o| ball.len() as u64 == o);
    let (m, w) = sweep(&family.base, pair, &outside_f, &pts, &query.u)?;
    let base = EdfRow {
        n: None,
        order: fac.order(),
        exhaustive,
        elements: outside_f.len(),
        edf: verdict(m, exhaustive),
        edf_margin: m,
        edf_witness: w.clone(),
        stability: verdict(m, exhaustive),
        stability_margin: m,
        stability_witness: w,
    };

    let mut rows = Vec::with_capacity(family.members.len());
    for member in &family.members {
        let filling = pair.fill(&member.kernels)?;
        let project = |g: &GroupElement| filling.project(oracle, g);
        let order = filling.quotient_oracle().factors()[p.factor].order();
        let Some(order) = order else {
            // infinite image: fall back to the cut, where the two conditions agree
            let (m, w) = sweep(&member.rep, pair, &outside_f, &pts, &query.u)?;
            rows.push(EdfRow {
                n: Some(member.n),
                order: None,
                exhaustive: false,
                elements: outside_f.len(),
                edf: verdict(m, false),
                edf_margin: m,
                edf_witness: w.clone(),
                stability: verdict(m, false),
                stability_margin: m,
                stability_witness: w,
            });
            continue;
        };
        // one lift per class of σ_n(Γ_p), shortest first
        let mut classes: BTreeMap<GroupElement, GroupElement> = BTreeMap::new();
        let mut radius = 0;
        while (classes.len() as u64) < order {
            radius = if radius == 0 { order.max(1) } else { radius * 2 };
            let lifts = fac.ball(radius, crate::group::DEFAULT_BALL_CAP).ok_or(Error::BudgetExceeded {
                what: "peripheral ball",
                limit: crate::group::DEFAULT_BALL_CAP,
            })?;
            for (x, _) in lifts {
                let g = oracle.syllable(p.factor, &x);
                classes.entry(project(&g)).or_insert(g);
            }
            if radius > 1 << 20 {
                return Err(Error::PeripheralImageNotFinite { peripheral: p.id, index: member.n.to_string() });
            }
        }
        let excluded: Vec<GroupElement> = query.f.iter().map(&project).collect();
        let edf_elements: Vec<GroupElement> =
            classes.iter().filter(|(c, _)| !excluded.contains(c)).map(|(_, g)| g.clone()).collect();
        // a class escapes stability's exclusion unless its whole fibre lies in F;
        // fibres are infinite when Γ_p is
        let kernel_gen = member.kernels.get(&p.id).and_then(|k| k.iter().find(|g| !g.is_identity())).cloned();
        let mut stab_elements = Vec::new();
        for (c, g) in &classes {
            if !query.f.contains(g) {
                stab_elements.push(g.clone());
            } else if fac.order().is_none() {
                if let Some(k) = &kernel_gen {
                    stab_elements.push(oracle.multiply(g, k));
                }
            } else {
                // finite Γ_p: search the fibre
                let all = fac.ball(u64::MAX, crate::group::DEFAULT_BALL_CAP).unwrap_or_default();
                if let Some(h) = all
                    .iter()
                    .map(|(x, _)| oracle.syllable(p.factor, x))
                    .find(|h| project(h) == *c && !query.f.contains(h))
                {
                    stab_elements.push(h);
                }
            }
        }
        let (em, ew) = sweep(&member.rep, pair, &edf_elements, &pts, &query.u)?;
        let (sm, sw) = sweep(&member.rep, pair, &stab_elements, &pts, &query.u)?;
        rows.push(EdfRow {
            n: Some(member.n),
            order: Some(order),
            exhaustive: true,
            elements: edf_elements.len(),
            edf: verdict(em, true),
            edf_margin: em,
            edf_witness: ew,
            stability: verdict(sm, true),
            stability_margin: sm,
            stability_witness: sw,
        });
    }
    Ok(EdfReport { depth, base, rows })
}

/// One-sided window distances between two sets of matrices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OneSided {
    /// `sup` over `σ_n`-images in the ball of the distance to the `ρ`-images.
    pub a_side: f64,
    /// `sup` over `ρ`-images in the ball of the distance to the `σ_n`-images.
    pub b_side: f64,
}

impl OneSided {
    pub fn max(&self) -> f64 {
        self.a_side.max(self.b_side)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChabautyRow {
    pub n: u64,
    pub full: OneSided,
    /// One entry per peripheral.
    pub peripheral: Vec<OneSided>,
    /// `max` over letters of `d(σ_n(s), ρ(s))`.
    pub algebraic: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChabautyReport {
    pub radius: f64,
    pub depth: u32,
    pub rows: Vec<ChabautyRow>,
}

fn unimodular_entries(m: &ProjectiveMatrix) -> Vec<f64> {
    m.unimodular().iter().copied().collect()
}

fn matrix_distance(a: &[f64], b: &[f64]) -> f64 {
    let (mut minus, mut plus) = (0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        minus += (x - y) * (x - y);
        plus += (x + y) * (x + y);
    }
    libm::sqrt(minus.min(plus))
}

fn norm(a: &[f64]) -> f64 {
    libm::sqrt(a.iter().map(|x| x * x).sum())
}

/// `sup_{x ∈ a, ‖x‖ <= r} inf_{y ∈ b} d(x, y)`, zero when no point of `a` is in the ball.
fn one_sided(a: &[Vec<f64>], b: &[Vec<f64>], r: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for x in a.iter().filter(|x| norm(x) <= r) {
        let best = b.iter().map(|y| matrix_distance(x, y)).fold(f64::INFINITY, f64::min);
        worst = worst.max(best);
    }
    worst
}

/// For each member, compares `{σ_n(γ) : |γ| <= depth}` and `{ρ(γ) : |γ| <= depth}`
/// inside the Frobenius ball of radius `radius` about the origin, with
/// unimodular representatives up to sign. Each one-sided distance takes its
/// points from the ball and its nearest neighbours from the whole other set.
/// The peripheral rows do the same on `Γ_p` with peripheral length at most `depth`.
pub fn chabauty_check(family: &RepFamily, radius: f64, depth: u32, cap: usize) -> Result<ChabautyReport> {
    let pair = &family.pair;
    let oracle = pair.group();
    let ball = oracle.enumerate_ball(depth, cap)?;
    let images = |rep: &Representation| -> Vec<Vec<f64>> {
        rep.ball_images(oracle, &ball).iter().map(unimodular_entries).collect()
    };
    let periph_elements: Vec<Vec<GroupElement>> = pair
        .peripherals()
        .iter()
        .map(|p| {
            let fac = &oracle.factors()[p.factor];
            let b = fac.ball(u64::from(depth), cap).ok_or(Error::BudgetExceeded { what: "peripheral ball", limit: cap })?;
            Ok(b.iter().map(|(x, _)| oracle.syllable(p.factor, x)).collect())
        })
        .collect::<Result<_>>()?;
    let periph_images = |rep: &Representation| -> Result<Vec<Vec<Vec<f64>>>> {
        periph_elements
            .iter()
            .map(|els| els.iter().map(|g| rep.image(oracle, g).map(|m| unimodular_entries(&m))).collect())
            .collect()
    };
    let base_full = images(&family.base);
    let base_periph = periph_images(&family.base)?;
    let mut rows = Vec::with_capacity(family.members.len());
    for m in &family.members {
        let full = images(&m.rep);
        let periph = periph_images(&m.rep)?;
        let algebraic = family
            .base
            .letter_matrices()
            .iter()
            .zip(m.rep.letter_matrices())
            .map(|(x, y)| x.distance(y))
            .fold(0.0, f64::max);
        rows.push(ChabautyRow {
            n: m.n,
            full: OneSided { a_side: one_sided(&full, &base_full, radius), b_side: one_sided(&base_full, &full, radius) },
            peripheral: periph
                .iter()
                .zip(&base_periph)
                .map(|(a, b)| OneSided { a_side: one_sided(a, b, radius), b_side: one_sided(b, a, radius) })
                .collect(),
            algebraic,
        });
    }
    Ok(ChabautyReport { radius, depth, rows })
}

#[derive(Debug, Clone, PartialEq)]
pub struct HausdorffRow {
    pub n: u64,
    /// `None` when the member failed divergence screening.
    pub d_hausdorff: Option<f64>,
    pub cloud_size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitSetReport {
    pub depth: u32,
    pub base_size: usize,
    pub rows: Vec<HausdorffRow>,
    /// Strictly decreasing over the screened rows, in member order.
    pub decreasing: bool,
}

/// Screening: powers of the product of all letters must be divergent.
fn screened(rep: &Representation, ty: &ParabolicType) -> Result<bool> {
    let mut g = ProjectiveMatrix::identity(rep.dim());
    for m in rep.letter_matrices() {
        g = g.mul(m);
    }
    let seq: Vec<ProjectiveMatrix> = (1..=TOLERANCES.tail_window as i64).map(|k| g.pow(k)).collect();
    Ok(q_divergence(&seq, ty)?.verdict == Verdict::Divergent)
}

/// `d_H(Λ_n, Λ_∞)` between the limit clouds at word depth `depth`.
pub fn limit_set_convergence(family: &RepFamily, depth: u32, ty: &ParabolicType, cap: usize) -> Result<LimitSetReport> {
    let oracle = family.pair.group();
    if !screened(&family.base, ty)? {
        return Err(Error::InvalidParameter("the base representation fails divergence screening".into()));
    }
    let ball = oracle.enumerate_ball(depth, cap)?;
    let base = q_limit_set_on(&family.base, oracle, &ball, ty);
    let mut rows = Vec::with_capacity(family.members.len());
    for m in &family.members {
        if !screened(&m.rep, ty)? {
            rows.push(HausdorffRow { n: m.n, d_hausdorff: None, cloud_size: 0 });
            continue;
        }
        let cloud = q_limit_set_on(&m.rep, oracle, &ball, ty);
        rows.push(HausdorffRow { n: m.n, d_hausdorff: Some(hausdorff(&cloud, &base)?), cloud_size: cloud.len() });
    }
    let vals: Vec<f64> = rows.iter().filter_map(|r| r.d_hausdorff).collect();
    let decreasing = vals.windows(2).all(|w| w[1] < w[0]);
    Ok(LimitSetReport { depth, base_size: base.len(), rows, decreasing })
}
