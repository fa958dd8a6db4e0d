use alloc::collections::{BTreeMap, VecDeque};
use alloc::vec;
use alloc::vec::Vec;

/// A finitely generated abelian group `Z^a x Z/m_1 x ... ` in fixed coordinates,
/// together with the images of its letters.
#[derive(Debug, Clone)]
pub struct AbelianFactor {
    moduli: Vec<u64>,
    gens: Vec<Vec<i64>>,
    metric: Metric,
}

#[derive(Debug, Clone)]
enum Metric {
    /// Letter images are exactly the `±e_i`, so length is a sum over coordinates.
    Coordinate,
    /// Finite factor with a full distance table.
    Table(BTreeMap<Vec<i64>, u32>),
    /// Infinite factor with skew letter images; lengths by breadth-first search.
    Search,
}

impl AbelianFactor {
    pub fn free_abelian(rank: usize) -> Self {
        let gens = (0..rank).map(|i| unit(rank, i)).collect();
        Self::new(vec![0; rank], gens)
    }

    pub fn cyclic(order: u64) -> Self {
        if order == 1 {
            return Self::new(Vec::new(), vec![Vec::new()]);
        }
        Self::new(vec![order], vec![vec![1]])
    }

    /// `moduli[i] == 0` marks an infinite coordinate; every other modulus is at least 2.
    pub fn new(moduli: Vec<u64>, gens: Vec<Vec<i64>>) -> Self {
        let mut f = AbelianFactor { moduli, gens, metric: Metric::Coordinate };
        let gens = core::mem::take(&mut f.gens);
        f.gens = gens
            .into_iter()
            .map(|mut g| {
                f.canon(&mut g);
                g
            })
            .collect();
        f.metric = if f.is_coordinate_metric() {
            Metric::Coordinate
        } else if let Some(order) = f.order() {
            Metric::Table(f.distance_table(order as usize))
        } else {
            Metric::Search
        };
        f
    }

    pub fn rank(&self) -> usize {
        self.moduli.len()
    }

    pub fn moduli(&self) -> &[u64] {
        &self.moduli
    }

    pub fn letter_images(&self) -> &[Vec<i64>] {
        &self.gens
    }

    /// `true` when lengths are coordinate sums, i.e. the letters are the unit vectors up to sign.
    pub fn has_coordinate_metric(&self) -> bool {
        matches!(self.metric, Metric::Coordinate)
    }

    pub fn order(&self) -> Option<u64> {
        self.moduli
            .iter()
            .try_fold(1u64, |acc, &m| if m == 0 { None } else { acc.checked_mul(m) })
    }

    pub fn canon(&self, x: &mut [i64]) {
        for (v, &m) in x.iter_mut().zip(&self.moduli) {
            if m != 0 {
                *v = v.rem_euclid(m as i64);
            }
        }
    }

    pub fn is_zero(x: &[i64]) -> bool {
        x.iter().all(|&v| v == 0)
    }

    pub fn neg(&self, x: &[i64]) -> Vec<i64> {
        let mut y: Vec<i64> = x.iter().map(|v| -v).collect();
        self.canon(&mut y);
        y
    }

    pub fn add(&self, x: &[i64], y: &[i64]) -> Vec<i64> {
        let mut z: Vec<i64> = x.iter().zip(y).map(|(a, b)| a + b).collect();
        self.canon(&mut z);
        z
    }

    /// Signed representative of a cyclic residue closest to zero.
    pub fn balanced(&self, i: usize, v: i64) -> i64 {
        let m = self.moduli[i] as i64;
        if m != 0 && v > m / 2 {
            v - m
        } else {
            v
        }
    }

    /// Symmetric letter set: nonzero images and their negatives, deduplicated, in letter order.
    pub fn generators(&self) -> Vec<Vec<i64>> {
        let mut out: Vec<Vec<i64>> = Vec::new();
        for g in &self.gens {
            if Self::is_zero(g) {
                continue;
            }
            for s in [g.clone(), self.neg(g)] {
                if !out.contains(&s) {
                    out.push(s);
                }
            }
        }
        out
    }

    /// Word length with respect to the letter images.
    pub fn length(&self, x: &[i64]) -> u64 {
        match &self.metric {
            Metric::Coordinate => x
                .iter()
                .zip(&self.moduli)
                .map(|(&v, &m)| {
                    if m == 0 {
                        v.unsigned_abs()
                    } else {
                        let r = v.rem_euclid(m as i64) as u64;
                        r.min(m - r)
                    }
                })
                .sum(),
            Metric::Table(t) => u64::from(t[x]),
            Metric::Search => self.search_length(x),
        }
    }

    /// All elements of length at most `radius`, ordered by (length, coordinates).
    pub fn ball(&self, radius: u64, cap: usize) -> Option<Vec<(Vec<i64>, u64)>> {
        let gens = self.generators();
        let zero = vec![0; self.rank()];
        let mut seen = BTreeMap::new();
        seen.insert(zero.clone(), 0u64);
        let mut layer = vec![zero];
        let mut out = vec![(vec![0; self.rank()], 0)];
        for d in 1..=radius {
            let mut next = Vec::new();
            for x in &layer {
                for s in &gens {
                    let y = self.add(x, s);
                    if !seen.contains_key(&y) {
                        seen.insert(y.clone(), d);
                        next.push(y);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            next.sort();
            out.extend(next.iter().map(|y| (y.clone(), d)));
            if out.len() > cap {
                return None;
            }
            layer = next;
        }
        Some(out)
    }

    fn is_coordinate_metric(&self) -> bool {
        let n = self.rank();
        let mut covered = vec![false; n];
        for g in &self.gens {
            if Self::is_zero(g) {
                continue;
            }
            let nz: Vec<usize> = (0..n).filter(|&i| g[i] != 0).collect();
            if nz.len() != 1 {
                return false;
            }
            let i = nz[0];
            let m = self.moduli[i] as i64;
            let v = g[i];
            let unit = v == 1 || v == -1 || (m != 0 && v == m - 1);
            if !unit {
                return false;
            }
            covered[i] = true;
        }
        covered.into_iter().all(|c| c)
    }

    fn distance_table(&self, order: usize) -> BTreeMap<Vec<i64>, u32> {
        let gens = self.generators();
        let zero = vec![0; self.rank()];
        let mut t = BTreeMap::new();
        t.insert(zero.clone(), 0u32);
        let mut q = VecDeque::from([zero]);
        while let Some(x) = q.pop_front() {
            let d = t[&x];
            for s in &gens {
                let y = self.add(&x, s);
                if !t.contains_key(&y) {
                    t.insert(y.clone(), d + 1);
                    q.push_back(y);
                }
            }
        }
        debug_assert_eq!(t.len(), order);
        t
    }

    fn search_length(&self, x: &[i64]) -> u64 {
        let mut target = x.to_vec();
        self.canon(&mut target);
        let gens = self.generators();
        let zero = vec![0; self.rank()];
        if target == zero {
            return 0;
        }
        let mut seen = BTreeMap::new();
        seen.insert(zero.clone(), 0u64);
        let mut q = VecDeque::from([zero]);
        while let Some(y) = q.pop_front() {
            let d = seen[&y];
            for s in &gens {
                let z = self.add(&y, s);
                if z == target {
                    return d + 1;
                }
                if !seen.contains_key(&z) {
                    seen.insert(z.clone(), d + 1);
                    q.push_back(z);
                }
            }
        }
        unreachable!("letter images generate the factor")
    }
}

pub(crate) fn unit(n: usize, i: usize) -> Vec<i64> {
    let mut v = vec![0; n];
    v[i] = 1;
    v
}
