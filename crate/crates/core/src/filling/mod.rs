//! Cusped spaces of Dehn filling quotients, the graph map `π_X`, and path lifts.

mod checks;

pub use checks::{
    check_descent_quasigeodesic, check_local_isometry, check_uniform_delta, DeltaRow, DescentReport,
    lift_round_trip, IsometryWitness, LocalIsometryReport, UniformDeltaReport,
};

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{build_cusped_ball, CuspedGraph, EdgeKind, GraphPath, VertexKey};
use crate::group::{FillingData, RelHypPair};

/// `π_X: X(Γ, P) → X(Γ/N, P^π)` restricted to ball windows of equal radius.
#[derive(Debug, Clone)]
pub struct FillingGeometry {
    pub source: CuspedGraph,
    pub target: CuspedGraph,
    /// Source vertex index to target vertex index.
    pub vertex_map: Vec<u32>,
    pub filling: FillingData,
}

/// Edge bookkeeping of `π_X` on a window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EdgeMapReport {
    pub edges: usize,
    /// Source edges sent onto a loop, i.e. a single vertex.
    pub loops: usize,
    pub vertical_loops: usize,
    /// Source edges whose image is neither a loop nor an edge of the same kind.
    pub kind_changes: usize,
    pub depth_changes: usize,
    pub surjective: bool,
}

impl EdgeMapReport {
    pub fn sound(&self) -> bool {
        self.vertical_loops == 0 && self.kind_changes == 0 && self.depth_changes == 0 && self.surjective
    }
}

fn map_key(pair: &RelHypPair, filling: &FillingData, key: &VertexKey) -> VertexKey {
    let source = pair.group();
    match key {
        VertexKey::Group(u) => VertexKey::Group(filling.project(source, u)),
        VertexKey::Horo { peripheral, base, depth } => {
            VertexKey::Horo { peripheral: *peripheral, base: filling.project(source, base), depth: *depth }
        }
        VertexKey::Cone { peripheral, coset } => VertexKey::Cone {
            peripheral: *peripheral,
            coset: filling.quotient().coset_key(*peripheral, &filling.project(source, coset)),
        },
        VertexKey::Node { .. } => key.clone(),
    }
}

/// Builds `B_X(id, R)` over `Γ` and `B(id, R)` over `Γ/N` directly from the
/// quotient oracle, and maps one into the other.
pub fn build_quotient_cusped(pair: &RelHypPair, filling: &FillingData, radius: u32, cap: usize) -> Result<FillingGeometry> {
    let source = build_cusped_ball(pair, radius, cap)?;
    let target = build_cusped_ball(filling.quotient(), radius, cap)?;
    let mut vertex_map = Vec::with_capacity(source.len());
    for key in source.keys() {
        // π_X is 1-Lipschitz, so the image of the ball lies in the target ball
        let img = map_key(pair, filling, key);
        vertex_map.push(target.vertex(&img).ok_or(Error::NotInWindow)?);
    }
    Ok(FillingGeometry { source, target, vertex_map, filling: filling.clone() })
}

impl FillingGeometry {
    pub fn map(&self, v: u32) -> u32 {
        self.vertex_map[v as usize]
    }

    pub fn project_path(&self, p: &GraphPath) -> GraphPath {
        GraphPath { vertices: p.vertices.iter().map(|&v| self.map(v)).collect() }
    }

    pub fn edge_report(&self) -> EdgeMapReport {
        let mut r = EdgeMapReport::default();
        for (u, v, kind) in self.source.edges() {
            r.edges += 1;
            let (a, b) = (self.map(u), self.map(v));
            if self.source.depth(u) != self.target.depth(a) || self.source.depth(v) != self.target.depth(b) {
                r.depth_changes += 1;
            }
            if a == b {
                r.loops += 1;
                if kind == EdgeKind::Vertical {
                    r.vertical_loops += 1;
                }
            } else if self.target.edge_kind(a, b) != Some(kind) {
                r.kind_changes += 1;
            }
        }
        let mut hit = alloc::vec![false; self.target.len()];
        for &t in &self.vertex_map {
            hit[t as usize] = true;
        }
        r.surjective = hit.into_iter().all(|h| h);
        r
    }

    /// Whether `π_X` is a graph isomorphism of the two windows.
    pub fn is_window_isomorphism(&self) -> bool {
        if self.source.len() != self.target.len() || self.source.edge_count() != self.target.edge_count() {
            return false;
        }
        let mut hit = alloc::vec![false; self.target.len()];
        for &t in &self.vertex_map {
            if core::mem::replace(&mut hit[t as usize], true) {
                return false;
            }
        }
        self.source.edges().all(|(u, v, _)| self.target.edge_kind(self.map(u), self.map(v)).is_some())
    }

    /// Lifts a target path edge by edge starting at `base`. Among several preimage
    /// edges the one ending at the least vertex key is taken; a repeated target
    /// vertex lifts to a repeated source vertex.
    pub fn lift_path(&self, path: &GraphPath, base: u32) -> Result<GraphPath> {
        let first = path.start().ok_or(Error::EmptyPath)?;
        if self.map(base) != first {
            return Err(Error::InvalidParameter("base lift does not map to the start of the path".into()));
        }
        let mut out = alloc::vec![base];
        let mut x = base;
        for (step, &t) in path.vertices.iter().enumerate().skip(1) {
            if self.map(x) == t {
                out.push(x);
                continue;
            }
            x = self
                .source
                .neighbors(x)
                .iter()
                .map(|e| e.0)
                .filter(|&y| self.map(y) == t)
                .min_by(|&a, &b| self.source.key(a).cmp(self.source.key(b)))
                .ok_or(Error::NoPreimageEdge { step })?;
            out.push(x);
        }
        Ok(GraphPath { vertices: out })
    }

    /// A seeded random walk of `len` steps in the target from its root.
    pub fn random_target_walk(&self, len: usize, rng: &mut ChaCha8Rng) -> GraphPath {
        let mut v = self.target.root().unwrap_or(0);
        let mut out = alloc::vec![v];
        for _ in 0..len {
            let nb = self.target.neighbors(v);
            if nb.is_empty() {
                break;
            }
            v = nb[rng.gen_range(0..nb.len())].0;
            out.push(v);
        }
        GraphPath { vertices: out }
    }

    /// A target geodesic from the root to a seeded random vertex.
    pub fn random_target_geodesic(&self, rng: &mut ChaCha8Rng) -> Result<GraphPath> {
        let v = rng.gen_range(0..self.target.len()) as u32;
        let root = self.target.root().unwrap_or(0);
        let dist: Vec<u32> = (0..self.target.len() as u32).map(|x| self.target.root_distance(x).unwrap()).collect();
        let mut p = self.target.path_along(v, root, &dist)?;
        p.vertices.reverse();
        Ok(p)
    }
}

/// Seeded generator shared by the sampling checks.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
