//! Truncated Cayley graphs, coned-off graphs, combinatorial horoballs and cusped spaces.
//!
//! Windows over a pair are metric balls `B(id, R)` of the infinite graph, grown
//! lazily by breadth-first search and stored as induced subgraphs. A window
//! distance `d_W(x, y)` equals the true distance whenever
//! `|x| + |y| + d_W(x, y) <= 2R`, since every geodesic between such points stays
//! inside the ball.

mod build;
mod delta;
mod horoball;
mod lemmas;

pub use build::{build_cayley_ball, build_coned_off, build_cusped_ball, build_window, SpaceSpec};
pub use delta::{estimate_delta, four_point_delta, DeltaMode, HyperbolicityEstimate};
pub use horoball::{build_horoball, regular_distance, regular_geodesic, BaseGraph};
pub use lemmas::{verify_metric_lemmas, LemmaCheck, MetricLemmaReport, Witness};

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use hashbrown::HashMap;

use crate::error::{Error, Result};
use crate::group::GroupElement;
use crate::FxBuild;

pub const UNREACHED: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VertexKey {
    /// A vertex of `Cay(Γ)`.
    Group(GroupElement),
    /// The vertex `(base, depth)` of the horoball over `base P_peripheral`, `depth >= 1`.
    Horo { peripheral: usize, base: GroupElement, depth: u32 },
    /// The cone point over the coset `coset P_peripheral`.
    Cone { peripheral: usize, coset: GroupElement },
    /// A vertex of a graph not attached to a group.
    Node { id: u32, depth: u32 },
}

impl VertexKey {
    pub fn depth(&self) -> u32 {
        match self {
            VertexKey::Group(_) => 0,
            VertexKey::Horo { depth, .. } | VertexKey::Node { depth, .. } => *depth,
            VertexKey::Cone { .. } => 1,
        }
    }

    pub fn group_element(&self) -> Option<&GroupElement> {
        match self {
            VertexKey::Group(g) => Some(g),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EdgeKind {
    Cayley,
    Horizontal,
    Vertical,
    Cone,
}

impl EdgeKind {
    pub fn name(self) -> &'static str {
        match self {
            EdgeKind::Cayley => "cayley",
            EdgeKind::Horizontal => "horizontal",
            EdgeKind::Vertical => "vertical",
            EdgeKind::Cone => "cone",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "cayley" => EdgeKind::Cayley,
            "horizontal" => EdgeKind::Horizontal,
            "vertical" => EdgeKind::Vertical,
            "cone" => EdgeKind::Cone,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphKind {
    Cayley,
    ConedOff,
    Cusped,
    Horoball,
    Plain,
}

/// Truncation data of a graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub kind: GraphKind,
    /// Root vertex and radius for ball windows.
    pub root: Option<u32>,
    pub radius: Option<u32>,
    pub max_depth: u32,
    /// Largest peripheral word length a cone point was expanded along.
    pub cone_cutoff: Option<u64>,
}

/// A finite graph with tagged edges. Immutable after construction.
#[derive(Debug, Clone)]
pub struct CuspedGraph {
    keys: Vec<VertexKey>,
    index: HashMap<VertexKey, u32, FxBuild>,
    adj: Vec<Vec<(u32, EdgeKind)>>,
    root_dist: Vec<u32>,
    window: Window,
}

/// A vertex sequence in which consecutive vertices are adjacent or equal
/// (equal vertices stand for the self-loops deleted from quotient graphs).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphPath {
    pub vertices: Vec<u32>,
}

impl GraphPath {
    pub fn len(&self) -> usize {
        self.vertices.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn start(&self) -> Option<u32> {
        self.vertices.first().copied()
    }

    pub fn end(&self) -> Option<u32> {
        self.vertices.last().copied()
    }
}

/// Left translation `h · key` of a vertex of a space over `pair`.
pub fn translate(pair: &crate::group::RelHypPair, h: &GroupElement, key: &VertexKey) -> VertexKey {
    let g = pair.group();
    match key {
        VertexKey::Group(u) => VertexKey::Group(g.multiply(h, u)),
        VertexKey::Horo { peripheral, base, depth } => {
            VertexKey::Horo { peripheral: *peripheral, base: g.multiply(h, base), depth: *depth }
        }
        VertexKey::Cone { peripheral, coset } => {
            VertexKey::Cone { peripheral: *peripheral, coset: pair.coset_key(*peripheral, &g.multiply(h, coset)) }
        }
        VertexKey::Node { .. } => key.clone(),
    }
}

impl CuspedGraph {
    /// Builds a graph from keys and undirected edges; duplicate edges are merged
    /// and loops dropped. `root` makes it a ball window of the given radius.
    pub fn from_edges(
        keys: Vec<VertexKey>,
        edges: impl IntoIterator<Item = (u32, u32, EdgeKind)>,
        window: Window,
    ) -> Self {
        let n = keys.len();
        let mut adj: Vec<Vec<(u32, EdgeKind)>> = vec![Vec::new(); n];
        for (u, v, k) in edges {
            if u != v {
                adj[u as usize].push((v, k));
                adj[v as usize].push((u, k));
            }
        }
        for a in adj.iter_mut() {
            a.sort_unstable();
            a.dedup_by_key(|e| e.0);
        }
        let mut index: HashMap<VertexKey, u32, FxBuild> = HashMap::default();
        index.reserve(n);
        for (i, k) in keys.iter().enumerate() {
            index.insert(k.clone(), i as u32);
        }
        let mut g = CuspedGraph { keys, index, adj, root_dist: Vec::new(), window };
        if let Some(r) = window.root {
            g.root_dist = g.bfs(r);
        }
        g
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn root(&self) -> Option<u32> {
        self.window.root
    }

    pub fn key(&self, v: u32) -> &VertexKey {
        &self.keys[v as usize]
    }

    pub fn keys(&self) -> &[VertexKey] {
        &self.keys
    }

    pub fn depth(&self, v: u32) -> u32 {
        self.keys[v as usize].depth()
    }

    pub fn vertex(&self, key: &VertexKey) -> Option<u32> {
        self.index.get(key).copied()
    }

    pub fn group_vertex(&self, g: &GroupElement) -> Option<u32> {
        self.vertex(&VertexKey::Group(g.clone()))
    }

    pub fn neighbors(&self, v: u32) -> &[(u32, EdgeKind)] {
        &self.adj[v as usize]
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Each undirected edge once, as `(u, v, kind)` with `u < v`.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32, EdgeKind)> + '_ {
        self.adj.iter().enumerate().flat_map(|(u, a)| {
            a.iter().filter(move |e| (u as u32) < e.0).map(move |&(v, k)| (u as u32, v, k))
        })
    }

    pub fn edge_kind(&self, u: u32, v: u32) -> Option<EdgeKind> {
        self.adj[u as usize].iter().find(|e| e.0 == v).map(|e| e.1)
    }

    /// Distance from the window root, if the graph is a ball window.
    pub fn root_distance(&self, v: u32) -> Option<u32> {
        self.root_dist.get(v as usize).copied()
    }

    /// Whether the window distance `d` between `u` and `v` is the distance in the
    /// untruncated space. Graphs that are not ball windows are their own space.
    pub fn certified(&self, u: u32, v: u32, d: u32) -> bool {
        match (self.window.root, self.window.radius) {
            (Some(_), Some(r)) => {
                u64::from(self.root_dist[u as usize]) + u64::from(self.root_dist[v as usize]) + u64::from(d)
                    <= 2 * u64::from(r)
            }
            _ => true,
        }
    }

    /// Vertices within `r` of the root.
    pub fn ball_vertices(&self, r: u32) -> Vec<u32> {
        (0..self.len() as u32).filter(|&v| self.root_dist.get(v as usize).is_some_and(|&d| d <= r)).collect()
    }

    pub fn bfs(&self, src: u32) -> Vec<u32> {
        self.bfs_within(src, u32::MAX)
    }

    /// Breadth-first distances from `src`, not exploring past `limit`.
    pub fn bfs_within(&self, src: u32, limit: u32) -> Vec<u32> {
        let mut dist = vec![UNREACHED; self.len()];
        self.bfs_into(src, limit, &mut dist, &mut VecDeque::new());
        dist
    }

    /// As [`bfs_within`](Self::bfs_within) with caller-owned buffers; `dist` must be all [`UNREACHED`].
    /// Returns the visited vertices so the caller can reset `dist` cheaply.
    pub fn bfs_into(&self, src: u32, limit: u32, dist: &mut [u32], queue: &mut VecDeque<u32>) -> Vec<u32> {
        let mut visited = vec![src];
        dist[src as usize] = 0;
        queue.clear();
        queue.push_back(src);
        while let Some(x) = queue.pop_front() {
            let d = dist[x as usize];
            if d >= limit {
                continue;
            }
            for &(y, _) in &self.adj[x as usize] {
                if dist[y as usize] == UNREACHED {
                    dist[y as usize] = d + 1;
                    visited.push(y);
                    queue.push_back(y);
                }
            }
        }
        visited
    }

    /// Multi-source distances.
    pub fn bfs_from_set(&self, sources: &[u32]) -> Vec<u32> {
        let mut dist = vec![UNREACHED; self.len()];
        let mut queue = VecDeque::new();
        for &s in sources {
            if dist[s as usize] != 0 {
                dist[s as usize] = 0;
                queue.push_back(s);
            }
        }
        while let Some(x) = queue.pop_front() {
            let d = dist[x as usize];
            for &(y, _) in &self.adj[x as usize] {
                if dist[y as usize] == UNREACHED {
                    dist[y as usize] = d + 1;
                    queue.push_back(y);
                }
            }
        }
        dist
    }

    pub fn distance(&self, u: u32, v: u32) -> Option<u32> {
        let d = self.bfs(u)[v as usize];
        (d != UNREACHED).then_some(d)
    }

    /// A geodesic from `u` to `v`; at each step the smallest-index vertex that
    /// stays on a geodesic is taken.
    pub fn shortest_path(&self, u: u32, v: u32) -> Result<GraphPath> {
        let to_v = self.bfs(v);
        self.path_along(u, v, &to_v)
    }

    /// Geodesic from `u` to `v` given distances to `v`.
    pub fn path_along(&self, u: u32, v: u32, to_v: &[u32]) -> Result<GraphPath> {
        if to_v[u as usize] == UNREACHED {
            return Err(Error::DisconnectedInWindow);
        }
        let mut path = vec![u];
        let mut x = u;
        while x != v {
            let d = to_v[x as usize];
            x = self.adj[x as usize]
                .iter()
                .map(|e| e.0)
                .filter(|&y| to_v[y as usize] + 1 == d)
                .min()
                .expect("breadth-first distances decrease along some edge");
            path.push(x);
        }
        Ok(GraphPath { vertices: path })
    }

    /// Whether consecutive vertices of `p` are adjacent or equal.
    pub fn is_path(&self, p: &GraphPath) -> bool {
        p.vertices.iter().all(|&v| (v as usize) < self.len())
            && p.vertices.windows(2).all(|w| w[0] == w[1] || self.edge_kind(w[0], w[1]).is_some())
    }

    /// Vertices lying on some geodesic between `x` and `y`, given both distance arrays.
    pub fn interval(&self, dx: &[u32], dy: &[u32], x: u32) -> Vec<u32> {
        let total = dy[x as usize];
        let mut out = vec![x];
        let mut seen = hashbrown::HashSet::<u32, FxBuild>::default();
        seen.insert(x);
        let mut i = 0;
        while i < out.len() {
            let z = out[i];
            i += 1;
            for &(w, _) in &self.adj[z as usize] {
                let (a, b) = (dx[w as usize], dy[w as usize]);
                if a == dx[z as usize] + 1 && b != UNREACHED && a + b == total && seen.insert(w) {
                    out.push(w);
                }
            }
        }
        out
    }
}
