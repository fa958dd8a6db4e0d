use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{CuspedGraph, UNREACHED};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeltaMode {
    FourPointExhaustive,
    FourPointSampled { quadruples: usize },
    ThinTriangles { triangles: usize },
}

/// Window estimates of δ. Both are lower bounds for the untruncated space.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperbolicityEstimate {
    pub delta4: Option<f64>,
    pub delta_thin: Option<f64>,
    pub samples: u64,
    /// Number of vertices quadruples or triangles were drawn from.
    pub core_size: usize,
    /// A quadruple or triangle attaining the estimate.
    pub witness: Vec<u32>,
}

/// Core vertices and their pairwise distances. For ball windows of radius `R`
/// the core is `B(id, R/2)`, where every window distance is certified.
struct Core {
    verts: Vec<u32>,
    dist: Vec<u16>,
}

impl Core {
    fn new(g: &CuspedGraph, radius: Option<u32>, budget: usize) -> Result<Self> {
        let verts = match (g.root(), radius) {
            (Some(_), Some(r)) => g.ball_vertices(r),
            _ => (0..g.len() as u32).collect(),
        };
        let n = verts.len();
        if n > budget {
            return Err(Error::BudgetExceeded { what: "delta core vertices", limit: budget });
        }
        let mut dist = vec![0u16; n * n];
        for (i, &v) in verts.iter().enumerate() {
            let d = g.bfs(v);
            for (j, &w) in verts.iter().enumerate() {
                let x = d[w as usize];
                if x == UNREACHED {
                    return Err(Error::DisconnectedInWindow);
                }
                dist[i * n + j] = x.min(u32::from(u16::MAX)) as u16;
            }
        }
        Ok(Core { verts, dist })
    }

    fn d(&self, i: usize, j: usize) -> i64 {
        i64::from(self.dist[i * self.verts.len() + j])
    }
}

/// Twice the four-point defect of the quadruple: largest pair sum minus the second largest.
fn defect2(d: &impl Fn(usize, usize) -> i64, x: usize, y: usize, z: usize, w: usize) -> i64 {
    let mut s = [d(x, y) + d(z, w), d(x, z) + d(y, w), d(x, w) + d(y, z)];
    s.sort_unstable();
    s[2] - s[1]
}

/// Exact four-point δ of a finite metric `d` on `n` points. `nbrs` are graph
/// neighbours inside the point set, used to restrict to far-apart pairs; empty
/// lists are always sound. Returns `(δ, witness)`.
pub fn four_point_delta(n: usize, d: impl Fn(usize, usize) -> i64, nbrs: &[Vec<usize>]) -> (f64, [usize; 4]) {
    let mut pairs: Vec<(i64, usize, usize)> = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let duv = d(u, v);
            let far = nbrs.get(u).is_none_or(|a| a.iter().all(|&w| d(w, v) <= duv))
                && nbrs.get(v).is_none_or(|a| a.iter().all(|&w| d(u, w) <= duv));
            if far {
                pairs.push((duv, u, v));
            }
        }
    }
    pairs.sort_unstable_by(|a, b| b.cmp(a));
    let mut best = 0i64;
    let mut witness = [0; 4];
    for i in 0..pairs.len() {
        let (dxy, x, y) = pairs[i];
        // the defect of a quadruple is at most the smaller of its two pair distances
        if dxy <= best {
            break;
        }
        for &(_, z, w) in &pairs[..i] {
            let s1 = dxy + d(z, w);
            let s2 = d(x, z) + d(y, w);
            let s3 = d(x, w) + d(y, z);
            let c = s1 - s2.max(s3);
            if c > best {
                best = c;
                witness = [x, y, z, w];
            }
        }
    }
    (best as f64 / 2.0, witness)
}

/// Lower-bound estimate of δ on a graph. Ball windows use their certified core;
/// other graphs are taken as the whole metric space.
pub fn estimate_delta(g: &CuspedGraph, mode: DeltaMode, seed: u64, budget: usize) -> Result<HyperbolicityEstimate> {
    let radius = g.window().radius;
    match mode {
        DeltaMode::FourPointExhaustive => {
            let core = Core::new(g, radius.map(|r| r / 2), budget)?;
            let n = core.verts.len();
            let pos: hashbrown::HashMap<u32, usize, crate::FxBuild> =
                core.verts.iter().enumerate().map(|(i, &v)| (v, i)).collect();
            let nbrs: Vec<Vec<usize>> = core
                .verts
                .iter()
                .map(|&v| g.neighbors(v).iter().filter_map(|e| pos.get(&e.0).copied()).collect())
                .collect();
            let (delta, w) = four_point_delta(n, |i, j| core.d(i, j), &nbrs);
            let samples = (n as u64).pow(4);
            Ok(HyperbolicityEstimate {
                delta4: Some(delta),
                delta_thin: None,
                samples,
                core_size: n,
                witness: w.iter().map(|&i| core.verts[i]).collect(),
            })
        }
        DeltaMode::FourPointSampled { quadruples } => {
            let core = Core::new(g, radius.map(|r| r / 2), budget)?;
            let n = core.verts.len();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let d = |i: usize, j: usize| core.d(i, j);
            let (mut best, mut witness) = (0i64, [0usize; 4]);
            for _ in 0..quadruples {
                let q = [rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n)];
                let c = defect2(&d, q[0], q[1], q[2], q[3]);
                if c > best {
                    best = c;
                    witness = q;
                }
            }
            Ok(HyperbolicityEstimate {
                delta4: Some(best as f64 / 2.0),
                delta_thin: None,
                samples: quadruples as u64,
                core_size: n,
                witness: witness.iter().map(|&i| core.verts[i]).collect(),
            })
        }
        DeltaMode::ThinTriangles { triangles } => thin_triangles(g, radius.map(|r| r / 4), triangles, seed),
    }
}

/// Largest distance from a point of one side to the union of the other two,
/// over sampled geodesic triangles with corners in `B(id, R/4)`.
fn thin_triangles(g: &CuspedGraph, core_radius: Option<u32>, triangles: usize, seed: u64) -> Result<HyperbolicityEstimate> {
    let verts = match (g.root(), core_radius) {
        (Some(_), Some(r)) => g.ball_vertices(r),
        _ => (0..g.len() as u32).collect(),
    };
    let n = verts.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut best, mut witness) = (0u32, Vec::new());
    for _ in 0..triangles {
        let t = [verts[rng.gen_range(0..n)], verts[rng.gen_range(0..n)], verts[rng.gen_range(0..n)]];
        let to: Vec<Vec<u32>> = t.iter().map(|&c| g.bfs(c)).collect();
        let sides = [
            g.path_along(t[0], t[1], &to[1])?.vertices,
            g.path_along(t[1], t[2], &to[2])?.vertices,
            g.path_along(t[2], t[0], &to[0])?.vertices,
        ];
        for s in 0..3 {
            let others: Vec<u32> = sides[(s + 1) % 3].iter().chain(&sides[(s + 2) % 3]).copied().collect();
            let d = g.bfs_from_set(&others);
            let worst = sides[s].iter().map(|&p| d[p as usize]).max().unwrap_or(0);
            if worst > best {
                best = worst;
                witness = t.to_vec();
            }
        }
    }
    Ok(HyperbolicityEstimate {
        delta4: None,
        delta_thin: Some(f64::from(best)),
        samples: triangles as u64,
        core_size: n,
        witness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cycle(n: usize) -> impl Fn(usize, usize) -> i64 {
        move |i, j| {
            let d = i.abs_diff(j);
            d.min(n - d) as i64
        }
    }

    #[test]
    fn cycle_eight_four_point() {
        let (delta, w) = four_point_delta(8, cycle(8), &[]);
        assert_eq!(delta, 2.0);
        let d = cycle(8);
        assert_eq!(defect2(&d, w[0], w[1], w[2], w[3]), 4);
    }

    #[test]
    fn far_apart_pruning_agrees_with_brute_force() {
        for n in 3..12 {
            let d = cycle(n);
            let nbrs: Vec<Vec<usize>> = (0..n).map(|i| vec![(i + 1) % n, (i + n - 1) % n]).collect();
            let mut brute = 0;
            for x in 0..n {
                for y in 0..n {
                    for z in 0..n {
                        for w in 0..n {
                            brute = brute.max(defect2(&d, x, y, z, w));
                        }
                    }
                }
            }
            assert_eq!(four_point_delta(n, &d, &nbrs).0, brute as f64 / 2.0, "C_{n}");
        }
    }
}
