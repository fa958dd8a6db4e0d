use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use super::{AutomatonGraph, GPath, Outcome, SetSystem};
use crate::error::{Error, Result};
use crate::filling::rng;
use crate::flag::{attracting_flag, flag_distance, Flag, ParabolicType, ProjectiveMatrix, Representation};
use crate::graph::{build_cusped_ball, UNREACHED};
use crate::group::{GroupElement, RelHypPair};

const MAX_WITNESSES: usize = 16;
/// Boundary samples per ball when bounding an image ball.
const BOUNDARY_SAMPLES: usize = 64;
/// Safety factor on sampled image radii.
const INFLATION: f64 = 1.1;
/// Points sampled from each `U_v` when measuring nested diameters.
const DIAMETER_SAMPLES: usize = 128;

#[derive(Debug, Clone, PartialEq)]
pub struct InclusionWitness {
    pub edge: (usize, usize),
    pub element: GroupElement,
    /// Ball of `U_w` whose image was tested.
    pub ball: usize,
    pub outcome: Outcome,
    /// `r - d(c, αc') - ρ'` for the best ball of `U_v`.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompatibilityReport {
    pub outcome: Outcome,
    pub epsilon: f64,
    pub depth: u64,
    pub edges: usize,
    pub elements: u64,
    /// Whether coset labels were cut at `depth`.
    pub truncated: bool,
    pub min_margin: f64,
    pub witnesses: Vec<InclusionWitness>,
}

/// For every edge `v → w` and every listed `α ∈ T_v`, tests
/// `α · N(U_w, ε)‾ ⊂ U_v` ball by ball. The image of a ball is bounded by the
/// image of its center and 1.1 times the largest sampled distance to the image
/// of its inflated boundary. A sampled point landing outside `U_v` is a failure;
/// a bound that does not fit in a single ball of `U_v` is inconclusive.
pub fn check_compatibility(
    rep: &Representation,
    pair: &RelHypPair,
    g: &AutomatonGraph,
    sys: &SetSystem,
    depth: u64,
    seed: u64,
) -> Result<CompatibilityReport> {
    if sys.sets.len() != g.len() {
        return Err(Error::DimensionMismatch("set system and automaton have different vertex counts".into()));
    }
    let oracle = pair.group();
    let mut rng = rng(seed);
    let mut report = CompatibilityReport {
        outcome: Outcome::Pass,
        epsilon: sys.epsilon,
        depth,
        edges: g.edges.len(),
        elements: 0,
        truncated: false,
        min_margin: f64::INFINITY,
        witnesses: Vec::new(),
    };
    // boundary samples are fixed per ball so every label sees the same points
    let samples: Vec<Vec<Vec<Flag>>> = sys
        .sets
        .iter()
        .map(|balls| balls.iter().map(|b| b.boundary_samples(sys.epsilon, BOUNDARY_SAMPLES, &mut rng)).collect())
        .collect::<Result<_>>()?;
    for &(v, w) in &g.edges {
        let (labels, truncated) = g.labels(pair, v, depth)?;
        report.truncated |= truncated;
        for alpha in labels {
            report.elements += 1;
            let m = rep.image(oracle, &alpha)?;
            for (bi, ball) in sys.sets[w].iter().enumerate() {
                let c = m.apply(&ball.center)?;
                let mut outcome = Outcome::Pass;
                let mut rho: f64 = 0.0;
                if sys.depth_in(v, &c)? <= 0.0 {
                    outcome = Outcome::Fail;
                }
                for x in &samples[w][bi] {
                    let y = m.apply(x)?;
                    if sys.depth_in(v, &y)? <= 0.0 {
                        outcome = Outcome::Fail;
                    }
                    rho = rho.max(flag_distance(&c, &y)?);
                }
                rho *= INFLATION;
                let mut margin = f64::NEG_INFINITY;
                for target in &sys.sets[v] {
                    margin = margin.max(target.radius - flag_distance(&target.center, &c)? - rho);
                }
                if outcome == Outcome::Pass && margin <= 0.0 {
                    outcome = Outcome::Inconclusive;
                }
                report.min_margin = report.min_margin.min(margin);
                report.outcome = report.outcome.and(outcome);
                if outcome != Outcome::Pass && report.witnesses.len() < MAX_WITNESSES {
                    report.witnesses.push(InclusionWitness { edge: (v, w), element: alpha.clone(), ball: bi, outcome, margin });
                }
            }
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiameterReport {
    /// `diam(g_n U_{v_{n+1}})` for `n = 0, …, N-1`, with `g_0 = id`.
    pub diameters: Vec<f64>,
    /// `exp` of the least-squares slope of `log diam` against `n`.
    pub rate: f64,
    pub contracting: bool,
    pub monotone: bool,
    /// Largest number of times one element occurs among `g_1, …, g_N`.
    pub max_repetition: usize,
    pub vertex_count: usize,
}

impl DiameterReport {
    pub fn backtracking_ok(&self) -> bool {
        self.max_repetition <= self.vertex_count
    }
}

/// Image of a line under a `2×2` product known up to scale, with `log|det|`
/// carried separately so that distances between nearby images keep their
/// relative accuracy: `sin∠(Mx, My) = |det M| |x × y| / (|Mx| |My|)`.
#[derive(Clone, Copy)]
struct Tracked2 {
    m: [f64; 4],
    log_det: f64,
}

impl Tracked2 {
    fn identity() -> Self {
        Tracked2 { m: [1.0, 0.0, 0.0, 1.0], log_det: 0.0 }
    }

    fn mul(&self, a: &ProjectiveMatrix) -> Self {
        let a = a.matrix();
        let x = &self.m;
        let p = [
            x[0] * a[(0, 0)] + x[1] * a[(1, 0)],
            x[0] * a[(0, 1)] + x[1] * a[(1, 1)],
            x[2] * a[(0, 0)] + x[3] * a[(1, 0)],
            x[2] * a[(0, 1)] + x[3] * a[(1, 1)],
        ];
        let n = libm::sqrt(p.iter().map(|v| v * v).sum());
        let det_a = (a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)]).abs();
        Tracked2 { m: [p[0] / n, p[1] / n, p[2] / n, p[3] / n], log_det: self.log_det + libm::log(det_a) - 2.0 * libm::log(n) }
    }

    fn diameter(&self, pts: &[[f64; 2]]) -> f64 {
        let img: Vec<f64> = pts
            .iter()
            .map(|p| libm::hypot(self.m[0] * p[0] + self.m[1] * p[1], self.m[2] * p[0] + self.m[3] * p[1]))
            .collect();
        let det = libm::exp(self.log_det);
        let mut best: f64 = 0.0;
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                let cross = (pts[i][0] * pts[j][1] - pts[i][1] * pts[j][0]).abs();
                best = best.max(det * cross / (img[i] * img[j]));
            }
        }
        best.min(1.0)
    }
}

fn fit_rate(d: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> =
        d.iter().enumerate().filter(|(_, &x)| x > 0.0).map(|(i, &x)| (i as f64, libm::log(x))).collect();
    if pts.len() < 2 {
        return 1.0;
    }
    let n = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let (mx, my) = (sx / n, sy / n);
    let (num, den) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + (p.0 - mx) * (p.1 - my), a.1 + (p.0 - mx) * (p.0 - mx)));
    libm::exp(num / den)
}

/// Diameters of the nested images `g_n U_{v_{n+1}}` measured on a fixed seeded
/// sample of each `U_v`, the fitted contraction rate, and the largest
/// repetition count among the partial products.
pub fn nested_diameters(
    rep: &Representation,
    pair: &RelHypPair,
    g: &AutomatonGraph,
    path: &GPath,
    sys: &SetSystem,
    seed: u64,
) -> Result<DiameterReport> {
    if path.is_empty() {
        return Err(Error::EmptyPath);
    }
    let oracle = pair.group();
    let mut rng = rng(seed);
    let samples: Vec<Vec<Flag>> = sys
        .sets
        .iter()
        .map(|balls| {
            let per = DIAMETER_SAMPLES.div_ceil(balls.len());
            let mut pts = Vec::new();
            for b in balls {
                pts.extend(b.interior_samples(per, &mut rng)?);
            }
            Ok(pts)
        })
        .collect::<Result<_>>()?;
    let mut diameters = Vec::with_capacity(path.len());
    if rep.dim() == 2 {
        let raw: Vec<Vec<[f64; 2]>> = samples
            .iter()
            .map(|s| s.iter().map(|f| [f.frame()[(0, 0)], f.frame()[(1, 0)]]).collect())
            .collect();
        let mut t = Tracked2::identity();
        for (n, (v, alpha)) in path.steps.iter().enumerate() {
            diameters.push(t.diameter(&raw[*v]));
            if n + 1 < path.len() {
                t = t.mul(&rep.image(oracle, alpha)?);
            }
        }
    } else {
        let mut m = ProjectiveMatrix::identity(rep.dim());
        for (n, (v, alpha)) in path.steps.iter().enumerate() {
            let img: Vec<Flag> = samples[*v].iter().map(|x| m.apply(x)).collect::<Result<_>>()?;
            let mut best: f64 = 0.0;
            for i in 0..img.len() {
                for j in i + 1..img.len() {
                    best = best.max(flag_distance(&img[i], &img[j])?);
                }
            }
            diameters.push(best);
            if n + 1 < path.len() {
                m = m.mul(&rep.image(oracle, alpha)?);
            }
        }
    }
    let rate = fit_rate(&diameters);
    let monotone = diameters.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9));
    let mut counts: BTreeMap<GroupElement, usize> = BTreeMap::new();
    for p in path.partial_products(oracle) {
        *counts.entry(p).or_default() += 1;
    }
    Ok(DiameterReport {
        diameters,
        rate,
        contracting: rate < 1.0 - 1e-9,
        monotone,
        max_repetition: counts.values().copied().max().unwrap_or(0),
        vertex_count: g.len(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiberPair {
    pub i: usize,
    pub j: usize,
    /// Hausdorff distance of the two tails in the word metric.
    pub tail_distance: u64,
    pub limit_distance: f64,
    pub close: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiberReport {
    pub bound: u64,
    pub tolerance: f64,
    pub pairs: Vec<FiberPair>,
    /// Sequences whose last element has no attracting flag.
    pub skipped: Vec<usize>,
    pub pass: bool,
}

/// Sequences whose last `tail` elements are within Hausdorff distance `bound`
/// of each other in the word metric must have attracting flags of their last
/// elements within `tolerance`. Pairs farther apart are reported, not judged.
pub fn fiber_consistency_check(
    rep: &Representation,
    pair: &RelHypPair,
    ty: &ParabolicType,
    seqs: &[Vec<GroupElement>],
    bound: u64,
    tail: usize,
    tolerance: f64,
) -> Result<FiberReport> {
    let oracle = pair.group();
    let mut limits: Vec<Option<Flag>> = Vec::with_capacity(seqs.len());
    let mut skipped = Vec::new();
    for (i, s) in seqs.iter().enumerate() {
        let last = s.last().ok_or(Error::EmptyPath)?;
        match attracting_flag(&rep.image(oracle, last)?, ty) {
            Ok((f, _)) => limits.push(Some(f)),
            Err(Error::GapTooSmall { .. }) => {
                skipped.push(i);
                limits.push(None);
            }
            Err(e) => return Err(e),
        }
    }
    let tails: Vec<&[GroupElement]> = seqs.iter().map(|s| &s[s.len().saturating_sub(tail.max(1))..]).collect();
    let one_sided = |a: &[GroupElement], b: &[GroupElement]| -> u64 {
        a.iter()
            .map(|x| {
                let xi = oracle.inverse(x);
                b.iter().map(|y| oracle.word_length(&oracle.multiply(&xi, y))).min().unwrap_or(u64::MAX)
            })
            .max()
            .unwrap_or(0)
    };
    let mut report = FiberReport { bound, tolerance, pairs: Vec::new(), skipped, pass: true };
    for i in 0..seqs.len() {
        for j in i + 1..seqs.len() {
            let (Some(fi), Some(fj)) = (&limits[i], &limits[j]) else { continue };
            let tail_distance = one_sided(tails[i], tails[j]).max(one_sided(tails[j], tails[i]));
            let limit_distance = flag_distance(fi, fj)?;
            let close = tail_distance <= bound;
            if close && limit_distance > tolerance {
                report.pass = false;
            }
            report.pairs.push(FiberPair { i, j, tail_distance, limit_distance, close });
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackingReport {
    pub radius: u32,
    /// Hausdorff distance in `d_X` between `{g_0 = id, g_1, …, g_N}` and the
    /// group vertices of a geodesic from `id` to `g_N`.
    pub tracking: u32,
    /// Whether every distance entering `tracking` is certified exact in the window.
    pub certified: bool,
    pub geodesic_length: u32,
    /// Largest depth along the geodesic.
    pub max_depth: u32,
    /// `max ℓ_X(α_i)`, when every label lies in the window.
    pub jump: Option<u32>,
    /// `max_depth <= C + 3 · tracking` when `C` is known.
    pub depth_ok: Option<bool>,
}

/// Compares the partial products of a G-path with a geodesic of the cusped
/// window `B_X(id, radius)`.
pub fn gpath_tracking_check(pair: &RelHypPair, path: &GPath, radius: u32, cap: usize) -> Result<TrackingReport> {
    if path.is_empty() {
        return Err(Error::EmptyPath);
    }
    let w = build_cusped_ball(pair, radius, cap)?;
    let oracle = pair.group();
    let mut points = alloc::vec![0u32];
    for p in path.partial_products(oracle) {
        points.push(w.group_vertex(&p).ok_or_else(|| Error::WindowTooSmall("a partial product is outside the window".into()))?);
    }
    let end = *points.last().unwrap();
    let geo = w.shortest_path(0, end)?;
    let on_geo: Vec<u32> = geo.vertices.iter().copied().filter(|&v| w.depth(v) == 0).collect();
    let max_depth = geo.vertices.iter().map(|&v| w.depth(v)).max().unwrap_or(0);
    let dist: Vec<Vec<u32>> = points.iter().map(|&p| w.bfs(p)).collect();
    let mut certified = true;
    let mut cert = |p: u32, q: u32, d: u32| {
        let (a, b) = (w.root_distance(p).unwrap_or(UNREACHED), w.root_distance(q).unwrap_or(UNREACHED));
        if d == UNREACHED || u64::from(a) + u64::from(b) + u64::from(d) > 2 * u64::from(radius) {
            certified = false;
        }
    };
    let mut tracking = 0;
    for (i, &p) in points.iter().enumerate() {
        let (q, d) = on_geo.iter().map(|&q| (q, dist[i][q as usize])).min_by_key(|x| x.1).unwrap();
        cert(p, q, d);
        tracking = tracking.max(d);
    }
    for &q in &on_geo {
        let (i, d) = (0..points.len()).map(|i| (i, dist[i][q as usize])).min_by_key(|x| x.1).unwrap();
        cert(points[i], q, d);
        tracking = tracking.max(d);
    }
    let mut jump = Some(0);
    for (_, a) in &path.steps {
        jump = match (jump, w.group_vertex(a).and_then(|v| w.root_distance(v))) {
            (Some(c), Some(l)) => Some(c.max(l)),
            _ => None,
        };
    }
    let depth_ok = jump.map(|c| u64::from(max_depth) <= u64::from(c) + 3 * u64::from(tracking));
    Ok(TrackingReport { radius, tracking, certified, geodesic_length: geo.len() as u32, max_depth, jump, depth_ok })
}
