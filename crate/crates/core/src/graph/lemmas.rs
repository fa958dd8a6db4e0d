use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::vec;
use alloc::vec::Vec;

use super::{build_cusped_ball, estimate_delta, CuspedGraph, DeltaMode, VertexKey, UNREACHED};
use crate::error::{Error, Result};
use crate::group::{GroupElement, RelHypPair};

#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub vertices: Vec<u32>,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LemmaCheck {
    pub name: &'static str,
    pub pass: bool,
    pub checked: u64,
    /// Largest `lhs - rhs` seen; nonpositive on a pass.
    pub worst_excess: f64,
    pub witnesses: Vec<Witness>,
}

impl LemmaCheck {
    fn new(name: &'static str) -> Self {
        LemmaCheck { name, pass: true, checked: 0, worst_excess: f64::NEG_INFINITY, witnesses: Vec::new() }
    }

    fn record(&mut self, vertices: &[u32], lhs: f64, rhs: f64) {
        self.checked += 1;
        let excess = lhs - rhs;
        if excess > self.worst_excess {
            self.worst_excess = excess;
        }
        if excess > 0.0 {
            self.pass = false;
            if self.witnesses.len() < 16 {
                self.witnesses.push(Witness { vertices: vertices.to_vec(), lhs, rhs });
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricLemmaReport {
    pub radius: u32,
    pub window_vertices: usize,
    pub delta: f64,
    pub comparison: LemmaCheck,
    pub horoball_entry: LemmaCheck,
    pub quasidensity: LemmaCheck,
}

impl MetricLemmaReport {
    pub fn pass(&self) -> bool {
        self.comparison.pass && self.horoball_entry.pass && self.quasidensity.pass
    }
}

/// Horoballs containing a vertex, as `(peripheral, coset key)`.
fn horoballs_of(pair: &RelHypPair, key: &VertexKey) -> Vec<(usize, GroupElement)> {
    match key {
        VertexKey::Group(u) => pair.peripherals().iter().map(|p| (p.id, pair.coset_key(p.id, u))).collect(),
        VertexKey::Horo { peripheral, base, .. } => vec![(*peripheral, pair.coset_key(*peripheral, base))],
        _ => Vec::new(),
    }
}

/// Checks, on the window `B_X(id, R)`:
/// * `d_X <= d_Γ <= d_X √2^{d_X}` on every certified pair of group vertices. By
///   equivariance these are exactly the pairs `(id, w)` with `w` in the window;
/// * `d(z, {x, y}) <= d(z, X∖H) + 3C + 7δ` for every vertex `z` on every geodesic
///   between `x, y ∈ B(id, R/2)` lying within `C <= c_entry` of a horoball `H`;
/// * every `γ` with `|γ|_Γ <= quasi_radius` is within `8 + 21δ` of a geodesic from
///   the identity to a vertex of the sphere of radius `R`.
///
/// `delta` defaults to the exhaustive four-point value of the window core.
pub fn verify_metric_lemmas(
    pair: &RelHypPair,
    radius: u32,
    c_entry: u32,
    quasi_radius: u32,
    delta: Option<f64>,
    cap: usize,
) -> Result<MetricLemmaReport> {
    if radius < 4 {
        return Err(Error::WindowTooSmall("metric lemmas need a radius of at least 4".into()));
    }
    let g = build_cusped_ball(pair, radius, cap)?;
    let delta = match delta {
        Some(d) => d,
        None => estimate_delta(&g, DeltaMode::FourPointExhaustive, 0, cap)?.delta4.unwrap_or(0.0),
    };
    let comparison = comparison_check(pair, &g);
    let horoball_entry = entry_check(pair, &g, radius / 2, c_entry, delta);
    let quasidensity = quasidensity_check(pair, &g, quasi_radius, delta)?;
    Ok(MetricLemmaReport { radius, window_vertices: g.len(), delta, comparison, horoball_entry, quasidensity })
}

fn comparison_check(pair: &RelHypPair, g: &CuspedGraph) -> LemmaCheck {
    let mut check = LemmaCheck::new("cusp-cayley-comparison");
    let oracle = pair.group();
    for v in 0..g.len() as u32 {
        let VertexKey::Group(w) = g.key(v) else { continue };
        let dx = f64::from(g.root_distance(v).unwrap());
        let dg = oracle.word_length(w) as f64;
        let upper = dx * libm::pow(core::f64::consts::SQRT_2, dx);
        // report whichever side is tighter
        let (lhs, rhs) = if dx - dg > dg - upper { (dx, dg) } else { (dg, upper) };
        check.record(&[0, v], lhs, rhs);
    }
    check
}

fn entry_check(pair: &RelHypPair, g: &CuspedGraph, core_radius: u32, c_entry: u32, delta: f64) -> LemmaCheck {
    let mut check = LemmaCheck::new("geodesics-enter-horoballs");
    let core = g.ball_vertices(core_radius);
    let dists: Vec<Vec<u32>> = core.iter().map(|&x| g.bfs(x)).collect();
    // horoballs within c_entry of each core vertex, with their distance
    let near: Vec<BTreeMap<(usize, GroupElement), u32>> = core
        .iter()
        .zip(&dists)
        .map(|(&x, dx)| {
            let mut m = BTreeMap::new();
            for z in g.bfs_within(x, c_entry).iter().enumerate().filter(|(_, &d)| d != UNREACHED).map(|(z, _)| z) {
                for h in horoballs_of(pair, g.key(z as u32)) {
                    let e = m.entry(h).or_insert(u32::MAX);
                    *e = (*e).min(dx[z]);
                }
            }
            m
        })
        .collect();
    for i in 0..core.len() {
        for j in i + 1..core.len() {
            let common: Vec<(&(usize, GroupElement), u32)> = near[i]
                .iter()
                .filter_map(|(h, &di)| near[j].get(h).map(|&dj| (h, di.max(dj))))
                .collect();
            if common.is_empty() {
                continue;
            }
            let (x, y) = (core[i], core[j]);
            let interval = g.interval(&dists[i], &dists[j], x);
            for &z in &interval {
                let lhs = f64::from(dists[i][z as usize].min(dists[j][z as usize]));
                let zh: BTreeSet<(usize, GroupElement)> = horoballs_of(pair, g.key(z)).into_iter().collect();
                for (h, c) in &common {
                    // distance to the complement of a horoball is the depth inside it
                    let to_outside = if zh.contains(*h) { g.depth(z) } else { 0 };
                    let rhs = f64::from(to_outside) + 3.0 * f64::from(*c) + 7.0 * delta;
                    check.record(&[x, y, z], lhs, rhs);
                }
            }
        }
    }
    check
}

fn quasidensity_check(pair: &RelHypPair, g: &CuspedGraph, quasi_radius: u32, delta: f64) -> Result<LemmaCheck> {
    let mut check = LemmaCheck::new("rays-quasidense");
    let radius = g.window().radius.unwrap_or(0);
    let root_dist: Vec<u32> = (0..g.len() as u32).map(|v| g.root_distance(v).unwrap()).collect();
    // union of the canonical geodesics from the sphere down to the identity
    let mut on_ray = vec![false; g.len()];
    for s in (0..g.len() as u32).filter(|&v| root_dist[v as usize] == radius) {
        let path = g.path_along(s, 0, &root_dist)?;
        for v in path.vertices {
            on_ray[v as usize] = true;
        }
    }
    let ball = pair.group().enumerate_ball(quasi_radius, usize::MAX)?;
    let bound = 8.0 + 21.0 * delta;
    for gamma in &ball.elements {
        let Some(v) = g.group_vertex(gamma) else {
            return Err(Error::WindowTooSmall("the group ball is not inside the cusped window".into()));
        };
        // window distances only overestimate, so the bound stays sound
        let mut dist = vec![UNREACHED; g.len()];
        dist[v as usize] = 0;
        let mut q = VecDeque::from([v]);
        let mut found = None;
        while let Some(x) = q.pop_front() {
            if on_ray[x as usize] {
                found = Some((x, dist[x as usize]));
                break;
            }
            for &(y, _) in g.neighbors(x) {
                if dist[y as usize] == UNREACHED {
                    dist[y as usize] = dist[x as usize] + 1;
                    q.push_back(y);
                }
            }
        }
        let (z, d) = found.ok_or(Error::DisconnectedInWindow)?;
        check.record(&[v, z], f64::from(d), bound);
    }
    Ok(check)
}
