use alloc::collections::{BTreeSet, VecDeque};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::{build_quotient_cusped, rng, FillingGeometry};
use crate::error::{Error, Result};
use crate::graph::{build_cusped_ball, estimate_delta, translate, DeltaMode, GraphPath, UNREACHED};
use crate::group::{FillingData, KernelSpec, RelHypPair};

const MAX_WITNESSES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IsometryWitness {
    /// Source vertices.
    pub x: u32,
    pub y: u32,
    pub source_distance: u32,
    pub target_distance: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalIsometryReport {
    pub r: u32,
    pub pass: bool,
    /// `"window-isomorphism"` when `π_X` is an isomorphism of the radius-`2r`
    /// windows, which forces isometry on the radius-`r` ball; `"pairwise"` otherwise.
    pub method: &'static str,
    pub ball_size: usize,
    pub injective: bool,
    pub image_is_ball: bool,
    pub pairs_checked: u64,
    pub witnesses: Vec<IsometryWitness>,
}

/// Tests whether `π_X` restricted to `B_X(id, r)` is an isometric embedding onto
/// `B(id, r)` in the quotient. Balls about other points of `Cay(Γ)` are
/// translates of this one. Pairwise comparison stops after a few witnesses.
pub fn check_local_isometry(pair: &RelHypPair, filling: &FillingData, r: u32, cap: usize) -> Result<LocalIsometryReport> {
    if r == 0 {
        return Err(Error::WindowTooSmall("radius must be positive".into()));
    }
    let fg = build_quotient_cusped(pair, filling, 2 * r, cap)?;
    let ball = fg.source.ball_vertices(r);
    let n = ball.len();
    let mut report = LocalIsometryReport {
        r,
        pass: true,
        method: "window-isomorphism",
        ball_size: n,
        injective: true,
        image_is_ball: true,
        pairs_checked: (n as u64) * (n as u64 - 1) / 2,
        witnesses: Vec::new(),
    };
    if fg.is_window_isomorphism() {
        return Ok(report);
    }
    report.method = "pairwise";
    report.pairs_checked = 0;

    // injectivity: two points with one image are a pair at target distance 0
    let mut seen: hashbrown::HashMap<u32, u32, crate::FxBuild> = hashbrown::HashMap::default();
    for &x in &ball {
        if let Some(&y) = seen.get(&fg.map(x)) {
            report.injective = false;
            if report.witnesses.len() < MAX_WITNESSES {
                let d = fg.source.distance(y, x).unwrap_or(UNREACHED);
                report.witnesses.push(IsometryWitness { x: y, y: x, source_distance: d, target_distance: 0 });
            }
        } else {
            seen.insert(fg.map(x), x);
        }
    }
    let image: BTreeSet<u32> = ball.iter().map(|&x| fg.map(x)).collect();
    let target_ball: BTreeSet<u32> = fg.target.ball_vertices(r).into_iter().collect();
    report.image_is_ball = image == target_ball;

    if report.witnesses.is_empty() {
        pairwise_distances(pair, &fg, &ball, r, &mut report);
    }
    report.pass = report.injective && report.image_is_ball && report.witnesses.is_empty();
    Ok(report)
}

/// Compares source and target distances on all pairs of `ball`. Pairs with a
/// group vertex `g` are translated by `g^{-1}` and read off the root distances,
/// which are exact on the whole window; other pairs use breadth-first search.
fn pairwise_distances(pair: &RelHypPair, fg: &FillingGeometry, ball: &[u32], r: u32, report: &mut LocalIsometryReport) {
    let quotient = fg.filling.quotient();
    let mut ds = vec![UNREACHED; fg.source.len()];
    let mut dt = vec![UNREACHED; fg.target.len()];
    let mut q = VecDeque::new();
    for (i, &x) in ball.iter().enumerate() {
        let rest = &ball[i + 1..];
        let compare = |y: u32, a: u32, b: u32, report: &mut LocalIsometryReport| {
            report.pairs_checked += 1;
            if a != b && report.witnesses.len() < MAX_WITNESSES {
                report.witnesses.push(IsometryWitness { x, y, source_distance: a, target_distance: b });
            }
        };
        if let Some(g) = fg.source.key(x).group_element() {
            let gi = pair.group().inverse(g);
            let hi = quotient.group().inverse(&fg.filling.project(pair.group(), g));
            for &y in rest {
                let ys = translate(pair, &gi, fg.source.key(y));
                let yt = translate(quotient, &hi, fg.target.key(fg.map(y)));
                let a = fg.source.vertex(&ys).and_then(|v| fg.source.root_distance(v)).unwrap_or(UNREACHED);
                let b = fg.target.vertex(&yt).and_then(|v| fg.target.root_distance(v)).unwrap_or(UNREACHED);
                compare(y, a, b, report);
            }
        } else {
            let vs = fg.source.bfs_into(x, 2 * r, &mut ds, &mut q);
            let vt = fg.target.bfs_into(fg.map(x), 2 * r, &mut dt, &mut q);
            for &y in rest {
                compare(y, ds[y as usize], dt[fg.map(y) as usize], report);
            }
            for v in vs {
                ds[v as usize] = UNREACHED;
            }
            for v in vt {
                dt[v as usize] = UNREACHED;
            }
        }
        if report.witnesses.len() >= MAX_WITNESSES {
            return;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DescentReport {
    pub k: f64,
    pub delta: f64,
    pub max_depth_used: u32,
    pub paths: usize,
    pub sub_pairs: u64,
    pub pass: bool,
    /// `(path index, i, j, target distance)` for sub-pairs below `|i - j| / K - 2δ`.
    pub witnesses: Vec<(usize, usize, usize, u32)>,
}

/// Projects seeded source geodesics from the identity whose vertices have depth
/// at most `max_depth_used`, and checks `|i-j|/K - 2δ <= d(c_i, c_j) <= K|i-j| + 2δ`
/// on every sub-pair. All sub-pairs of a path from the root are certified.
pub fn check_descent_quasigeodesic(
    fg: &FillingGeometry,
    k: f64,
    delta: f64,
    max_depth_used: u32,
    paths: usize,
    seed: u64,
) -> Result<DescentReport> {
    let src = &fg.source;
    let radius = src.window().radius.ok_or_else(|| Error::WindowTooSmall("source is not a ball window".into()))?;
    let root_dist: Vec<u32> = (0..src.len() as u32).map(|v| src.root_distance(v).unwrap()).collect();
    let candidates: Vec<u32> = (0..src.len() as u32).filter(|&v| root_dist[v as usize] >= 2).collect();
    if candidates.is_empty() {
        return Err(Error::WindowTooSmall("no geodesics of length 2 in the window".into()));
    }
    let mut rng = rng(seed);
    let mut report =
        DescentReport { k, delta, max_depth_used, paths: 0, sub_pairs: 0, pass: true, witnesses: Vec::new() };
    let mut attempts = 0;
    while report.paths < paths && attempts < 50 * paths {
        attempts += 1;
        let v = candidates[rng.gen_range(0..candidates.len())];
        let mut p = src.path_along(v, 0, &root_dist)?;
        p.vertices.reverse();
        if p.vertices.iter().any(|&x| src.depth(x) > max_depth_used) {
            continue;
        }
        let c = fg.project_path(&p);
        for i in 0..c.vertices.len() {
            let d = fg.target.bfs_within(c.vertices[i], 2 * radius);
            for j in i + 1..c.vertices.len() {
                report.sub_pairs += 1;
                let dist = f64::from(d[c.vertices[j] as usize]);
                let span = (j - i) as f64;
                if dist < span / k - 2.0 * delta || dist > k * span + 2.0 * delta {
                    report.pass = false;
                    if report.witnesses.len() < MAX_WITNESSES {
                        report.witnesses.push((report.paths, i, j, d[c.vertices[j] as usize]));
                    }
                }
            }
        }
        report.paths += 1;
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeltaRow {
    pub label: String,
    pub delta: f64,
    pub core_size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UniformDeltaReport {
    pub radius: u32,
    pub unfilled: DeltaRow,
    pub rows: Vec<DeltaRow>,
    pub slack: f64,
    /// Whether every row is within `slack` of the unfilled value.
    pub bounded: bool,
}

/// Exhaustive window δ of the quotient cusped space for each filling, next to the unfilled value.
pub fn check_uniform_delta(
    pair: &RelHypPair,
    family: &[(String, KernelSpec)],
    radius: u32,
    slack: f64,
    cap: usize,
) -> Result<UniformDeltaReport> {
    let est = |p: &RelHypPair| -> Result<(f64, usize)> {
        let w = build_cusped_ball(p, radius, cap)?;
        let e = estimate_delta(&w, DeltaMode::FourPointExhaustive, 0, cap)?;
        Ok((e.delta4.unwrap_or(0.0), e.core_size))
    };
    let (d0, c0) = est(pair)?;
    let unfilled = DeltaRow { label: "unfilled".into(), delta: d0, core_size: c0 };
    let mut rows = Vec::new();
    for (label, spec) in family {
        let filling = pair.fill(spec)?;
        let (d, c) = est(filling.quotient())?;
        rows.push(DeltaRow { label: label.clone(), delta: d, core_size: c });
    }
    let bounded = rows.iter().all(|r| r.delta <= d0 + slack);
    Ok(UniformDeltaReport { radius, unfilled, rows, slack, bounded })
}

/// Round trip used by tests and the CLI: lift then project.
pub fn lift_round_trip(fg: &FillingGeometry, path: &GraphPath) -> Result<bool> {
    let root = fg.source.root().unwrap_or(0);
    let lifted = fg.lift_path(path, root)?;
    Ok(fg.project_path(&lifted) == *path && fg.source.is_path(&lifted))
}
