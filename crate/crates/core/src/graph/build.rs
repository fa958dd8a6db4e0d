use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use hashbrown::HashMap;

use super::{CuspedGraph, EdgeKind, GraphKind, VertexKey, Window};
use crate::error::{Error, Result};
use crate::group::{GroupElement, RelHypPair};
use crate::FxBuild;

/// Peripheral, coset representative and level of a horoball vertex.
type LevelKey = (usize, GroupElement, u32);

/// Which pieces are glued to `Cay(Γ)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpaceSpec {
    /// Glue combinatorial horoballs truncated at `max_depth`.
    pub horoballs: bool,
    pub max_depth: u32,
    /// Add one cone point per peripheral coset.
    pub cones: bool,
    /// Cone points are expanded only along peripheral words of length at most this.
    pub cone_cutoff: u64,
}

impl SpaceSpec {
    pub fn cayley() -> Self {
        SpaceSpec { horoballs: false, max_depth: 0, cones: false, cone_cutoff: 0 }
    }

    pub fn cusped(max_depth: u32) -> Self {
        SpaceSpec { horoballs: true, max_depth, cones: false, cone_cutoff: 0 }
    }

    pub fn coned(cone_cutoff: u64) -> Self {
        SpaceSpec { horoballs: false, max_depth: 0, cones: true, cone_cutoff }
    }

    fn kind(&self) -> GraphKind {
        if self.horoballs {
            GraphKind::Cusped
        } else if self.cones {
            GraphKind::ConedOff
        } else {
            GraphKind::Cayley
        }
    }
}

pub fn build_cayley_ball(pair: &RelHypPair, radius: u32, cap: usize) -> Result<CuspedGraph> {
    build_window(pair, SpaceSpec::cayley(), radius, cap)
}

pub fn build_coned_off(pair: &RelHypPair, radius: u32, cone_cutoff: u64, cap: usize) -> Result<CuspedGraph> {
    build_window(pair, SpaceSpec::coned(cone_cutoff), radius, cap)
}

/// The ball `B_X(id, R)` of the cusped space; horoballs are cut at depth `R`,
/// which no vertex of the ball can exceed.
pub fn build_cusped_ball(pair: &RelHypPair, radius: u32, cap: usize) -> Result<CuspedGraph> {
    build_window(pair, SpaceSpec::cusped(radius), radius, cap)
}

struct Space<'a> {
    pair: &'a RelHypPair,
    spec: SpaceSpec,
    /// Nonzero peripheral elements as syllables, sorted by length.
    balls: Vec<Vec<(GroupElement, u64)>>,
}

impl<'a> Space<'a> {
    fn new(pair: &'a RelHypPair, spec: SpaceSpec, radius: u32, cap: usize) -> Result<Self> {
        let g = pair.group();
        let reach = if spec.horoballs {
            // expanded vertices sit at distance < R, hence at depth < R
            let top = spec.max_depth.min(radius.saturating_sub(1));
            1u64.checked_shl(top).unwrap_or(u64::MAX)
        } else if spec.cones {
            spec.cone_cutoff
        } else {
            0
        };
        let mut balls = Vec::new();
        for p in pair.peripherals() {
            let fac = &g.factors()[p.factor];
            let ball = if reach == 0 {
                Vec::new()
            } else {
                fac.ball(reach, cap).ok_or(Error::BudgetExceeded { what: "peripheral ball", limit: cap })?
            };
            balls.push(
                ball.into_iter()
                    .filter(|(_, l)| *l > 0)
                    .map(|(x, l)| (g.syllable(p.factor, &x), l))
                    .collect(),
            );
        }
        Ok(Space { pair, spec, balls })
    }

    fn expand(&self, v: &VertexKey, out: &mut Vec<VertexKey>) {
        let g = self.pair.group();
        match v {
            VertexKey::Group(u) => {
                for s in g.generators() {
                    out.push(VertexKey::Group(g.multiply(u, s)));
                }
                for p in self.pair.peripherals() {
                    if self.spec.horoballs && self.spec.max_depth >= 1 {
                        out.push(VertexKey::Horo { peripheral: p.id, base: u.clone(), depth: 1 });
                    }
                    if self.spec.cones {
                        out.push(VertexKey::Cone { peripheral: p.id, coset: self.pair.coset_key(p.id, u) });
                    }
                }
            }
            VertexKey::Horo { peripheral, base, depth } => {
                let (i, k) = (*peripheral, *depth);
                out.push(if k == 1 {
                    VertexKey::Group(base.clone())
                } else {
                    VertexKey::Horo { peripheral: i, base: base.clone(), depth: k - 1 }
                });
                if k < self.spec.max_depth {
                    out.push(VertexKey::Horo { peripheral: i, base: base.clone(), depth: k + 1 });
                }
                let reach = 1u64.checked_shl(k).unwrap_or(u64::MAX);
                for (p, l) in &self.balls[i] {
                    if *l > reach {
                        break;
                    }
                    out.push(VertexKey::Horo { peripheral: i, base: g.multiply(base, p), depth: k });
                }
            }
            VertexKey::Cone { peripheral, coset } => {
                out.push(VertexKey::Group(coset.clone()));
                for (p, l) in &self.balls[*peripheral] {
                    if *l > self.spec.cone_cutoff {
                        break;
                    }
                    out.push(VertexKey::Group(g.multiply(coset, p)));
                }
            }
            VertexKey::Node { .. } => {}
        }
    }
}

/// Grows the ball of radius `radius` about the identity and returns it as an
/// induced subgraph with every edge of the space between its vertices.
pub fn build_window(pair: &RelHypPair, spec: SpaceSpec, radius: u32, cap: usize) -> Result<CuspedGraph> {
    let space = Space::new(pair, spec, radius, cap)?;
    let mut index: HashMap<VertexKey, u32, FxBuild> = HashMap::default();
    let mut keys: Vec<VertexKey> = Vec::new();
    let mut dist: Vec<u32> = Vec::new();
    let root = VertexKey::Group(GroupElement::identity());
    index.insert(root.clone(), 0);
    keys.push(root);
    dist.push(0);
    let mut buf = Vec::new();
    let mut i = 0;
    while i < keys.len() {
        let d = dist[i];
        if d < radius {
            buf.clear();
            space.expand(&keys[i], &mut buf);
            for y in buf.drain(..) {
                if !index.contains_key(&y) {
                    index.insert(y.clone(), keys.len() as u32);
                    keys.push(y);
                    dist.push(d + 1);
                    if keys.len() > cap {
                        return Err(Error::BudgetExceeded { what: "window vertices", limit: cap });
                    }
                }
            }
        }
        i += 1;
    }

    // canonical vertex order: (distance from the root, key)
    let mut order: Vec<u32> = (0..keys.len() as u32).collect();
    order.sort_by(|&a, &b| dist[a as usize].cmp(&dist[b as usize]).then_with(|| keys[a as usize].cmp(&keys[b as usize])));
    let mut keys_sorted = Vec::with_capacity(keys.len());
    for &o in &order {
        keys_sorted.push(core::mem::replace(&mut keys[o as usize], VertexKey::Node { id: 0, depth: 0 }));
    }
    let keys = keys_sorted;
    drop(index);
    let mut index: HashMap<VertexKey, u32, FxBuild> = HashMap::default();
    index.reserve(keys.len());
    for (i, k) in keys.iter().enumerate() {
        index.insert(k.clone(), i as u32);
    }

    let edges = induced_edges(pair, &spec, &keys, &index);
    let window = Window {
        kind: spec.kind(),
        root: Some(0),
        radius: Some(radius),
        max_depth: if spec.horoballs { spec.max_depth } else { 0 },
        cone_cutoff: spec.cones.then_some(spec.cone_cutoff),
    };
    Ok(CuspedGraph::from_edges(keys, edges, window))
}

fn induced_edges(
    pair: &RelHypPair,
    spec: &SpaceSpec,
    keys: &[VertexKey],
    index: &HashMap<VertexKey, u32, FxBuild>,
) -> Vec<(u32, u32, EdgeKind)> {
    let g = pair.group();
    let mut edges = Vec::new();
    // horizontal edges are found by grouping horoball levels per coset
    let mut levels: BTreeMap<LevelKey, Vec<(Vec<i64>, u32)>> = BTreeMap::new();
    for (vi, key) in keys.iter().enumerate() {
        let v = vi as u32;
        match key {
            VertexKey::Group(u) => {
                for s in g.generators() {
                    if let Some(&w) = index.get(&VertexKey::Group(g.multiply(u, s))) {
                        if v < w {
                            edges.push((v, w, EdgeKind::Cayley));
                        }
                    }
                }
                for p in pair.peripherals() {
                    if spec.horoballs {
                        let up = VertexKey::Horo { peripheral: p.id, base: u.clone(), depth: 1 };
                        if let Some(&w) = index.get(&up) {
                            edges.push((v, w, EdgeKind::Vertical));
                        }
                    }
                    if spec.cones {
                        let c = VertexKey::Cone { peripheral: p.id, coset: pair.coset_key(p.id, u) };
                        if let Some(&w) = index.get(&c) {
                            edges.push((v, w, EdgeKind::Cone));
                        }
                    }
                }
            }
            VertexKey::Horo { peripheral, base, depth } => {
                let up = VertexKey::Horo { peripheral: *peripheral, base: base.clone(), depth: depth + 1 };
                if let Some(&w) = index.get(&up) {
                    edges.push((v, w, EdgeKind::Vertical));
                }
                let (coset, coords) = pair.split_coset(*peripheral, base);
                levels.entry((*peripheral, coset, *depth)).or_default().push((coords, v));
            }
            _ => {}
        }
    }
    for ((i, _, k), mut members) in levels {
        let fac = &g.factors()[pair.peripherals()[i].factor];
        let reach = 1u64.checked_shl(k).unwrap_or(u64::MAX);
        members.sort();
        let line = fac.rank() == 1 && fac.moduli()[0] == 0 && fac.has_coordinate_metric();
        for a in 0..members.len() {
            for b in a + 1..members.len() {
                let diff: Vec<i64> = members[b].0.iter().zip(&members[a].0).map(|(x, y)| x - y).collect();
                let l = fac.length(&diff);
                if line && l > reach {
                    break;
                }
                if l <= reach {
                    edges.push((members[a].1, members[b].1, EdgeKind::Horizontal));
                }
            }
        }
    }
    edges
}
