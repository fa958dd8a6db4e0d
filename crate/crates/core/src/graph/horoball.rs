use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use super::{CuspedGraph, EdgeKind, GraphKind, GraphPath, VertexKey, Window, UNREACHED};
use crate::error::{Error, Result};

/// A finite connected graph `Y` used as the base of a standalone horoball.
#[derive(Debug, Clone)]
pub struct BaseGraph {
    adj: Vec<Vec<u32>>,
}

impl BaseGraph {
    pub fn new(n: usize, edges: &[(u32, u32)]) -> Self {
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u != v {
                adj[u as usize].push(v);
                adj[v as usize].push(u);
            }
        }
        for a in adj.iter_mut() {
            a.sort_unstable();
            a.dedup();
        }
        BaseGraph { adj }
    }

    /// The path graph `0 - 1 - ... - (n-1)`, i.e. a window of `Cay(Z)`.
    pub fn path(n: usize) -> Self {
        let edges: Vec<(u32, u32)> = (1..n as u32).map(|i| (i - 1, i)).collect();
        Self::new(n, &edges)
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    fn bfs(&self, s: u32) -> Vec<u32> {
        let mut d = vec![UNREACHED; self.len()];
        d[s as usize] = 0;
        let mut q = VecDeque::from([s]);
        while let Some(x) = q.pop_front() {
            for &y in &self.adj[x as usize] {
                if d[y as usize] == UNREACHED {
                    d[y as usize] = d[x as usize] + 1;
                    q.push_back(y);
                }
            }
        }
        d
    }
}

/// A standalone combinatorial horoball `H(Y)` cut at `max_depth`, with the
/// distance table of its base.
#[derive(Debug, Clone)]
pub struct Horoball {
    pub graph: CuspedGraph,
    base: BaseGraph,
    base_dist: Vec<Vec<u32>>,
    max_depth: u32,
}

#[allow(clippy::needless_range_loop)]
pub fn build_horoball(base: BaseGraph, max_depth: u32) -> Result<Horoball> {
    let n = base.len();
    if n == 0 {
        return Err(Error::InvalidParameter("base graph is empty".into()));
    }
    let base_dist: Vec<Vec<u32>> = (0..n as u32).map(|s| base.bfs(s)).collect();
    if base_dist[0].contains(&UNREACHED) {
        return Err(Error::InvalidParameter("base graph is disconnected".into()));
    }
    let levels = max_depth as usize + 1;
    let id = |y: usize, k: usize| (k * n + y) as u32;
    let mut keys = Vec::with_capacity(n * levels);
    for k in 0..levels {
        for y in 0..n {
            keys.push(VertexKey::Node { id: y as u32, depth: k as u32 });
        }
    }
    let mut edges = Vec::new();
    for k in 0..levels {
        let reach = 1u64.checked_shl(k as u32).unwrap_or(u64::MAX);
        for u in 0..n {
            for v in u + 1..n {
                if u64::from(base_dist[u][v]) <= reach {
                    edges.push((id(u, k), id(v, k), EdgeKind::Horizontal));
                }
            }
            if k + 1 < levels {
                edges.push((id(u, k), id(u, k + 1), EdgeKind::Vertical));
            }
        }
    }
    let window = Window { kind: GraphKind::Horoball, root: None, radius: None, max_depth, cone_cutoff: None };
    Ok(Horoball { graph: CuspedGraph::from_edges(keys, edges, window), base, base_dist, max_depth })
}

/// Shape of the shortest regular path between depths `k1`, `k2` over base points
/// at distance `d`: `(length, apex, horizontal jumps)`. `None` when the apex would
/// have to exceed `max_depth`.
pub fn regular_distance(k1: u32, k2: u32, d: u64, max_depth: u32) -> Option<(u64, u32, u64)> {
    let mut best: Option<(u64, u32, u64)> = None;
    for apex in k1.max(k2)..=max_depth {
        let step = 1u64.checked_shl(apex).unwrap_or(u64::MAX);
        let jumps = d.div_ceil(step);
        if jumps > 3 {
            continue;
        }
        let len = u64::from(2 * apex - k1 - k2) + jumps;
        if best.is_none_or(|b| len < b.0) {
            best = Some((len, apex, jumps));
        }
    }
    best
}

impl Horoball {
    pub fn vertex(&self, y: u32, depth: u32) -> Option<u32> {
        self.graph.vertex(&VertexKey::Node { id: y, depth })
    }

    pub fn base_distance(&self, u: u32, v: u32) -> u32 {
        self.base_dist[u as usize][v as usize]
    }

    pub fn max_depth(&self) -> u32 {
        self.max_depth
    }
}

/// Vertical, then at most three horizontal jumps at one level, then vertical;
/// the shortest such path between the two vertices.
pub fn regular_geodesic(h: &Horoball, u: u32, v: u32) -> Result<GraphPath> {
    let (VertexKey::Node { id: y1, depth: k1 }, VertexKey::Node { id: y2, depth: k2 }) =
        (h.graph.key(u).clone(), h.graph.key(v).clone())
    else {
        return Err(Error::NotInWindow);
    };
    let d = h.base_distance(y1, y2);
    let (_, apex, jumps) = regular_distance(k1, k2, u64::from(d), h.max_depth).ok_or(Error::WindowTooShallow)?;
    let mut path = Vec::new();
    for k in k1..=apex {
        path.push(h.vertex(y1, k).ok_or(Error::NotInWindow)?);
    }
    if jumps > 0 {
        // a base geodesic from y1 to y2, walked backwards from y2
        let to_y2 = &h.base_dist[y2 as usize];
        let mut line = vec![y1];
        let mut y = y1;
        while y != y2 {
            y = *h.base.adj[y as usize].iter().filter(|&&z| to_y2[z as usize] + 1 == to_y2[y as usize]).min().unwrap();
            line.push(y);
        }
        let step = 1usize << apex.min(63);
        for j in 1..=jumps as usize {
            let at = (j.saturating_mul(step)).min(d as usize);
            path.push(h.vertex(line[at], apex).ok_or(Error::NotInWindow)?);
        }
    }
    for k in (k2..apex).rev() {
        path.push(h.vertex(y2, k).ok_or(Error::NotInWindow)?);
    }
    Ok(GraphPath { vertices: path })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes() {
        assert_eq!(regular_distance(2, 5, 0, 8), Some((3, 5, 0)));
        assert_eq!(regular_distance(0, 0, 8, 8), Some((6, 2, 2)));
        assert_eq!(regular_distance(0, 0, 1, 8), Some((1, 0, 1)));
        assert_eq!(regular_distance(0, 0, 100, 2), None);
    }
}
