use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use super::factor::AbelianFactor;
use super::smith::diagonalize;
use super::{GroupElement, GroupKind, GroupOracle, RelHypPair};
use crate::error::{Error, Result};

/// Kernel generators keyed by peripheral id; missing ids get the trivial kernel.
pub type KernelSpec = BTreeMap<usize, Vec<GroupElement>>;

/// Linear map from a factor's coordinates onto its quotient's coordinates.
#[derive(Debug, Clone)]
struct FactorMap {
    rows: Vec<Vec<i64>>,
}

impl FactorMap {
    fn apply(&self, x: &[i64]) -> Vec<i64> {
        self.rows.iter().map(|r| r.iter().zip(x).map(|(a, b)| a * b).sum()).collect()
    }
}

/// A Dehn filling `Γ → Γ/N` where `N` is normally generated by subgroups of the peripherals.
#[derive(Debug, Clone)]
pub struct FillingData {
    kernels: Vec<Vec<GroupElement>>,
    maps: Vec<FactorMap>,
    quotient: RelHypPair,
}

pub fn make_filling(pair: &RelHypPair, spec: &KernelSpec) -> Result<FillingData> {
    let g = pair.group();
    let mut kernels = vec![Vec::new(); pair.peripherals().len()];
    for (&id, gens) in spec {
        pair.peripheral(id)?;
        for k in gens {
            if !pair.membership(id, k) {
                return Err(Error::KernelNotInPeripheral { peripheral: id, element: g.render(k) });
            }
        }
        kernels[id] = gens.clone();
    }

    let mut maps = Vec::new();
    let mut factors = Vec::new();
    for (f, fac) in g.factors().iter().enumerate() {
        let rank = fac.rank();
        let mut cols: Vec<Vec<i64>> = Vec::new();
        if let Some(id) = pair.peripheral_of_factor(f) {
            for k in &kernels[id] {
                cols.push(pair.split_coset(id, k).1);
            }
        }
        for (i, &m) in fac.moduli().iter().enumerate() {
            if m != 0 {
                let mut c = vec![0; rank];
                c[i] = m as i64;
                cols.push(c);
            }
        }
        let d = diagonalize(rank, &cols);
        let keep: Vec<usize> = (0..rank).filter(|&i| d.diag[i] != 1).collect();
        let map = FactorMap { rows: keep.iter().map(|&i| d.left[i].clone()).collect() };
        let moduli: Vec<u64> = keep.iter().map(|&i| d.diag[i] as u64).collect();
        let gens = fac.letter_images().iter().map(|x| map.apply(x)).collect();
        factors.push(AbelianFactor::new(moduli, gens));
        maps.push(map);
    }
    let oracle = GroupOracle::with_letters(GroupKind::FilledQuotient, factors, g.letters().to_vec());
    let quotient = RelHypPair::from_parts(oracle, pair.peripherals().to_vec());
    Ok(FillingData { kernels, maps, quotient })
}

impl FillingData {
    pub fn kernels(&self) -> &[Vec<GroupElement>] {
        &self.kernels
    }

    pub fn quotient(&self) -> &RelHypPair {
        &self.quotient
    }

    pub fn quotient_oracle(&self) -> &GroupOracle {
        self.quotient.group()
    }

    pub fn is_trivial(&self) -> bool {
        self.kernels.iter().flatten().all(|k| k.is_identity())
    }

    /// The quotient map `π`.
    pub fn project(&self, source: &GroupOracle, g: &GroupElement) -> GroupElement {
        let q = self.quotient.group();
        let mut out = Vec::new();
        for (f, v) in source.syllables(g) {
            let y = self.maps[f].apply(v);
            q.push_syllable(&mut out, f, &y);
        }
        GroupElement(out)
    }
}

impl RelHypPair {
    pub fn fill(&self, spec: &KernelSpec) -> Result<FillingData> {
        make_filling(self, spec)
    }
}
