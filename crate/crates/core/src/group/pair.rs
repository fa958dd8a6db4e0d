use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::smith::diagonalize;
use super::{GroupElement, GroupOracle};
use crate::error::{Error, Result};

/// How a peripheral subgroup is designated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PeripheralSpec {
    /// A whole free factor.
    Factor(usize),
    /// The subgroup generated by these elements; must be a whole free factor.
    Generated(Vec<GroupElement>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Peripheral {
    pub id: usize,
    pub factor: usize,
}

#[derive(Debug, Clone)]
pub struct RelHypPair {
    group: GroupOracle,
    peripherals: Vec<Peripheral>,
}

pub fn make_pair(group: GroupOracle, specs: &[PeripheralSpec]) -> Result<RelHypPair> {
    let mut peripherals: Vec<Peripheral> = Vec::new();
    for (id, spec) in specs.iter().enumerate() {
        let factor = match spec {
            PeripheralSpec::Factor(f) => {
                if *f >= group.factors().len() {
                    return Err(Error::InvalidParameter(format!("no factor {f}")));
                }
                *f
            }
            PeripheralSpec::Generated(gens) => generated_factor(&group, gens)?,
        };
        if peripherals.iter().any(|p| p.factor == factor) {
            return Err(Error::InvalidParameter(format!("factor {factor} is listed twice")));
        }
        peripherals.push(Peripheral { id, factor });
    }
    for p in &peripherals {
        let fac = &group.factors()[p.factor];
        if !spans(fac.rank(), fac.moduli(), fac.letter_images()) {
            return Err(Error::IncompatibleGenset(format!(
                "letters in peripheral {} do not generate it",
                p.id
            )));
        }
    }
    Ok(RelHypPair { group, peripherals })
}

fn generated_factor(group: &GroupOracle, gens: &[GroupElement]) -> Result<usize> {
    let mut factor = None;
    let mut vecs = Vec::new();
    for g in gens.iter().filter(|g| !g.is_identity()) {
        let syl: Vec<(usize, &[i64])> = group.syllables(g).collect();
        if syl.len() != 1 || factor.is_some_and(|f| f != syl[0].0) {
            return Err(Error::IncompatibleGenset(format!(
                "`{}` does not lie in a single free factor",
                group.render(g)
            )));
        }
        factor = Some(syl[0].0);
        vecs.push(syl[0].1.to_vec());
    }
    let f = factor.ok_or_else(|| Error::IncompatibleGenset("peripheral has no generators".into()))?;
    let fac = &group.factors()[f];
    if !spans(fac.rank(), fac.moduli(), &vecs) {
        return Err(Error::IncompatibleGenset(format!(
            "subgroup is a proper subgroup of factor {f}; only whole factors are supported"
        )));
    }
    Ok(f)
}

/// Whether `vecs` generate `Z^r / (moduli)`.
fn spans(rank: usize, moduli: &[u64], vecs: &[Vec<i64>]) -> bool {
    let mut cols: Vec<Vec<i64>> = vecs.to_vec();
    for (i, &m) in moduli.iter().enumerate() {
        if m != 0 {
            let mut c = vec![0; rank];
            c[i] = m as i64;
            cols.push(c);
        }
    }
    diagonalize(rank, &cols).diag.iter().all(|&d| d == 1)
}

impl RelHypPair {
    pub(crate) fn from_parts(group: GroupOracle, peripherals: Vec<Peripheral>) -> Self {
        RelHypPair { group, peripherals }
    }

    pub fn group(&self) -> &GroupOracle {
        &self.group
    }

    pub fn peripherals(&self) -> &[Peripheral] {
        &self.peripherals
    }

    pub fn peripheral(&self, id: usize) -> Result<Peripheral> {
        self.peripherals.get(id).copied().ok_or(Error::UnknownPeripheral(id))
    }

    /// Peripheral whose factor is `f`, if any.
    pub fn peripheral_of_factor(&self, f: usize) -> Option<usize> {
        self.peripherals.iter().position(|p| p.factor == f)
    }

    pub fn membership(&self, id: usize, g: &GroupElement) -> bool {
        let f = self.peripherals[id].factor;
        let mut syl = self.group.syllables(g);
        match (syl.next(), syl.next()) {
            (None, _) => true,
            (Some((h, _)), None) => h == f,
            _ => false,
        }
    }

    /// Canonical representative of `g P`: the normal form with a trailing
    /// syllable from `P` removed.
    pub fn coset_key(&self, id: usize, g: &GroupElement) -> GroupElement {
        self.split_coset(id, g).0
    }

    /// `(coset key, coordinates of the peripheral suffix)`.
    pub fn split_coset(&self, id: usize, g: &GroupElement) -> (GroupElement, Vec<i64>) {
        let f = self.peripherals[id].factor;
        let rank = self.group.factors()[f].rank();
        let raw = g.raw();
        match self.group.last_syllable(raw) {
            Some((start, lf)) if lf == f => (GroupElement(raw[..start].to_vec()), raw[start + 1..].to_vec()),
            _ => (g.clone(), vec![0; rank]),
        }
    }

    /// Word length of `p` in the peripheral's own Cayley graph.
    pub fn peripheral_length(&self, id: usize, p: &[i64]) -> u64 {
        self.group.factors()[self.peripherals[id].factor].length(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{make_oracle, GroupSpec};

    fn f2() -> RelHypPair {
        let g = make_oracle(&GroupSpec::Free { rank: 2 }).unwrap();
        make_pair(g, &[PeripheralSpec::Factor(0), PeripheralSpec::Factor(1)]).unwrap()
    }

    #[test]
    fn membership_and_cosets() {
        let p = f2();
        let g = p.group();
        assert!(p.membership(0, &g.parse("a^3").unwrap()));
        assert!(!p.membership(0, &g.parse("ab").unwrap()));
        assert_eq!(p.coset_key(0, &g.parse("ba^2").unwrap()), p.coset_key(0, &g.parse("ba^5").unwrap()));
        assert_ne!(p.coset_key(0, &g.parse("b").unwrap()), p.coset_key(0, &g.parse("b^2").unwrap()));
    }

    #[test]
    fn generated_peripheral_must_be_a_factor() {
        let g = make_oracle(&GroupSpec::Free { rank: 2 }).unwrap();
        let ab = g.parse("ab").unwrap();
        let a2 = g.parse("a^2").unwrap();
        let a = g.parse("a").unwrap();
        assert!(matches!(
            make_pair(g.clone(), &[PeripheralSpec::Generated(vec![ab])]),
            Err(Error::IncompatibleGenset(_))
        ));
        assert!(matches!(
            make_pair(g.clone(), &[PeripheralSpec::Generated(vec![a2])]),
            Err(Error::IncompatibleGenset(_))
        ));
        let p = make_pair(g, &[PeripheralSpec::Generated(vec![a])]).unwrap();
        assert_eq!(p.peripherals()[0].factor, 0);
    }
}
