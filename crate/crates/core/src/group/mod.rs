//! Exact arithmetic in free products of finitely generated abelian groups.
//!
//! Free groups are free products of copies of `Z`, so every supported family
//! shares one alternating syllable normal form.

mod factor;
mod filling;
mod pair;
pub(crate) mod smith;
mod word;

pub use factor::AbelianFactor;
pub use filling::{make_filling, FillingData, KernelSpec};
pub use pair::{make_pair, Peripheral, PeripheralSpec, RelHypPair};

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use hashbrown::HashMap;

use crate::error::{Error, Result};
use crate::FxBuild;

/// Default element cap for ball enumeration.
pub const DEFAULT_BALL_CAP: usize = 2_000_000;

/// Canonical normal form: concatenated syllables `[factor, c_1, ..., c_r]`
/// with adjacent syllables in distinct factors and no zero syllable.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct GroupElement(Vec<i64>);

impl GroupElement {
    pub fn identity() -> Self {
        GroupElement(Vec::new())
    }

    pub fn is_identity(&self) -> bool {
        self.0.is_empty()
    }

    pub fn raw(&self) -> &[i64] {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupKind {
    Free,
    FreeAbelian,
    FiniteCyclic,
    FreeProduct,
    FilledQuotient,
}

impl GroupKind {
    pub fn name(self) -> &'static str {
        match self {
            GroupKind::Free => "free",
            GroupKind::FreeAbelian => "free-abelian",
            GroupKind::FiniteCyclic => "finite-cyclic",
            GroupKind::FreeProduct => "free-product",
            GroupKind::FilledQuotient => "filled-quotient",
        }
    }
}

/// Group descriptor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GroupSpec {
    Free { rank: usize },
    FreeAbelian { rank: usize },
    FiniteCyclic { order: u64 },
    FreeProduct(Vec<GroupSpec>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Letter {
    pub name: String,
    pub factor: usize,
    /// Index of the letter's image among the factor's letter images.
    pub slot: usize,
}

/// A symmetric generator: the letter it comes from and the sign of its exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GeneratorSource {
    pub letter: usize,
    pub sign: i64,
}

#[derive(Debug, Clone)]
pub struct GroupOracle {
    kind: GroupKind,
    factors: Vec<AbelianFactor>,
    letters: Vec<Letter>,
    generators: Vec<GroupElement>,
    sources: Vec<GeneratorSource>,
}

pub fn make_oracle(spec: &GroupSpec) -> Result<GroupOracle> {
    let kind = match spec {
        GroupSpec::Free { .. } => GroupKind::Free,
        GroupSpec::FreeAbelian { .. } => GroupKind::FreeAbelian,
        GroupSpec::FiniteCyclic { .. } => GroupKind::FiniteCyclic,
        GroupSpec::FreeProduct(_) => GroupKind::FreeProduct,
    };
    let mut factors = Vec::new();
    collect_factors(spec, &mut factors)?;
    if factors.is_empty() {
        return Err(Error::InvalidParameter("a free product needs at least one factor".into()));
    }
    Ok(GroupOracle::from_factors(kind, factors))
}

fn collect_factors(spec: &GroupSpec, out: &mut Vec<AbelianFactor>) -> Result<()> {
    match *spec {
        GroupSpec::Free { rank } => {
            if rank == 0 {
                return Err(Error::InvalidParameter("free group rank must be at least 1".into()));
            }
            out.extend((0..rank).map(|_| AbelianFactor::free_abelian(1)));
        }
        GroupSpec::FreeAbelian { rank } => {
            if rank == 0 {
                return Err(Error::InvalidParameter("free abelian rank must be at least 1".into()));
            }
            out.push(AbelianFactor::free_abelian(rank));
        }
        GroupSpec::FiniteCyclic { order } => {
            if order == 0 {
                return Err(Error::InvalidParameter("cyclic order must be at least 1".into()));
            }
            out.push(AbelianFactor::cyclic(order));
        }
        GroupSpec::FreeProduct(ref fs) => {
            for f in fs {
                collect_factors(f, out)?;
            }
        }
    }
    Ok(())
}

fn letter_name(i: usize) -> String {
    if i < 26 {
        char::from(b'a' + i as u8).to_string()
    } else {
        format!("g{i}")
    }
}

impl GroupOracle {
    /// Letters are named `a, b, c, ...` in factor order.
    pub(crate) fn from_factors(kind: GroupKind, factors: Vec<AbelianFactor>) -> Self {
        let mut letters = Vec::new();
        for (f, fac) in factors.iter().enumerate() {
            for slot in 0..fac.letter_images().len() {
                letters.push(Letter { name: letter_name(letters.len()), factor: f, slot });
            }
        }
        Self::with_letters(kind, factors, letters)
    }

    pub(crate) fn with_letters(kind: GroupKind, factors: Vec<AbelianFactor>, letters: Vec<Letter>) -> Self {
        let mut o = GroupOracle { kind, factors, letters, generators: Vec::new(), sources: Vec::new() };
        for (li, l) in o.letters.clone().iter().enumerate() {
            let x = o.syllable(l.factor, &o.factors[l.factor].letter_images()[l.slot]);
            if x.is_identity() {
                continue;
            }
            for (g, sign) in [(x.clone(), 1), (o.inverse(&x), -1)] {
                if !o.generators.contains(&g) {
                    o.generators.push(g);
                    o.sources.push(GeneratorSource { letter: li, sign });
                }
            }
        }
        o
    }

    pub fn kind(&self) -> GroupKind {
        self.kind
    }

    pub fn factors(&self) -> &[AbelianFactor] {
        &self.factors
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    /// The symmetric generating set `S`, without the identity.
    pub fn generators(&self) -> &[GroupElement] {
        &self.generators
    }

    pub fn generator_sources(&self) -> &[GeneratorSource] {
        &self.sources
    }

    pub fn identity(&self) -> GroupElement {
        GroupElement::identity()
    }

    pub fn letter(&self, name: &str) -> Option<GroupElement> {
        let l = self.letters.iter().find(|l| l.name == name)?;
        Some(self.syllable(l.factor, &self.factors[l.factor].letter_images()[l.slot]))
    }

    /// The element of factor `f` with coordinates `x`, reduced.
    pub fn syllable(&self, f: usize, x: &[i64]) -> GroupElement {
        let mut out = GroupElement::identity();
        self.push_syllable(&mut out.0, f, x);
        out
    }

    pub fn syllables<'a>(&'a self, g: &'a GroupElement) -> Syllables<'a> {
        Syllables { oracle: self, raw: &g.0 }
    }

    pub fn syllable_count(&self, g: &GroupElement) -> usize {
        self.syllables(g).count()
    }

    /// Start offset and factor of the last syllable.
    fn last_syllable(&self, raw: &[i64]) -> Option<(usize, usize)> {
        let mut i = 0;
        let mut last = None;
        while i < raw.len() {
            let f = raw[i] as usize;
            last = Some((i, f));
            i += 1 + self.factors[f].rank();
        }
        last
    }

    fn push_syllable(&self, out: &mut Vec<i64>, f: usize, x: &[i64]) {
        let fac = &self.factors[f];
        match self.last_syllable(out) {
            Some((start, lf)) if lf == f => {
                let sum = fac.add(&out[start + 1..], x);
                out.truncate(start);
                if !AbelianFactor::is_zero(&sum) {
                    out.push(f as i64);
                    out.extend_from_slice(&sum);
                }
            }
            _ => {
                let mut v = x.to_vec();
                fac.canon(&mut v);
                if !AbelianFactor::is_zero(&v) {
                    out.push(f as i64);
                    out.extend_from_slice(&v);
                }
            }
        }
    }

    pub fn multiply(&self, x: &GroupElement, y: &GroupElement) -> GroupElement {
        let mut out = x.0.clone();
        for (f, v) in self.syllables(y) {
            self.push_syllable(&mut out, f, v);
        }
        GroupElement(out)
    }

    pub fn inverse(&self, x: &GroupElement) -> GroupElement {
        let syl: Vec<(usize, &[i64])> = self.syllables(x).collect();
        let mut out = Vec::with_capacity(x.0.len());
        for (f, v) in syl.into_iter().rev() {
            out.push(f as i64);
            out.extend(self.factors[f].neg(v));
        }
        GroupElement(out)
    }

    pub fn power(&self, x: &GroupElement, n: i64) -> GroupElement {
        let base = if n < 0 { self.inverse(x) } else { x.clone() };
        let mut out = GroupElement::identity();
        for _ in 0..n.unsigned_abs() {
            out = self.multiply(&out, &base);
        }
        out
    }

    pub fn word_length(&self, x: &GroupElement) -> u64 {
        self.syllables(x).map(|(f, v)| self.factors[f].length(v)).sum()
    }

    /// Writes `x` as a word. The identity is `1`; syllables of factors whose letters
    /// are not unit vectors use the literal `<factor|c_1,...>`.
    pub fn render(&self, x: &GroupElement) -> String {
        if x.is_identity() {
            return "1".into();
        }
        let mut s = String::new();
        for (f, v) in self.syllables(x) {
            let fac = &self.factors[f];
            if !fac.has_coordinate_metric() {
                let parts: Vec<String> = v.iter().map(|c| c.to_string()).collect();
                s.push_str(&format!("<{f}|{}>", parts.join(",")));
                continue;
            }
            for (i, &c) in v.iter().enumerate() {
                if c == 0 {
                    continue;
                }
                let (name, sign) = self.unit_letter(f, i);
                let e = fac.balanced(i, c) * sign;
                s.push_str(name);
                if e != 1 {
                    s.push_str(&format!("^{e}"));
                }
            }
        }
        s
    }

    /// The letter whose image is `±e_i` in factor `f`, with that sign.
    fn unit_letter(&self, f: usize, i: usize) -> (&str, i64) {
        let fac = &self.factors[f];
        for l in self.letters.iter().filter(|l| l.factor == f) {
            let g = &fac.letter_images()[l.slot];
            if g.iter().enumerate().all(|(j, &c)| (j == i) == (c != 0)) {
                return (&l.name, if g[i] == 1 { 1 } else { -1 });
            }
        }
        unreachable!("coordinate metric factors have unit letters")
    }

    /// Exponents of letters spelling `x`, one entry per nonzero coordinate.
    /// Only available when every syllable's factor has unit letters.
    pub fn letter_exponents(&self, x: &GroupElement) -> Option<Vec<(usize, i64)>> {
        let mut out = Vec::new();
        for (f, v) in self.syllables(x) {
            let fac = &self.factors[f];
            if !fac.has_coordinate_metric() {
                return None;
            }
            for (i, &c) in v.iter().enumerate() {
                if c == 0 {
                    continue;
                }
                let (name, sign) = self.unit_letter(f, i);
                let li = self.letters.iter().position(|l| l.name == name)?;
                out.push((li, c * sign));
            }
        }
        Some(out)
    }

    pub fn parse(&self, word: &str) -> Result<GroupElement> {
        word::parse(self, word)
    }

    /// Elements with word length at most `radius`, ordered by (length, normal form),
    /// with a breadth-first spanning tree over the generators.
    pub fn enumerate_ball(&self, radius: u32, cap: usize) -> Result<Ball> {
        let mut index: HashMap<GroupElement, u32, FxBuild> = HashMap::default();
        let mut ball = Ball { elements: vec![GroupElement::identity()], lengths: vec![0], parents: vec![None] };
        index.insert(GroupElement::identity(), 0);
        let mut layer = 0..1usize;
        for d in 1..=radius {
            let mut next: Vec<(GroupElement, u32, u16)> = Vec::new();
            for p in layer.clone() {
                for (gi, s) in self.generators.iter().enumerate() {
                    let y = self.multiply(&ball.elements[p], s);
                    if !index.contains_key(&y) {
                        index.insert(y.clone(), u32::MAX);
                        next.push((y, p as u32, gi as u16));
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            next.sort_by(|a, b| a.0.cmp(&b.0));
            let start = ball.elements.len();
            if start + next.len() > cap {
                return Err(Error::BudgetExceeded { what: "ball elements", limit: cap });
            }
            for (y, p, gi) in next {
                *index.get_mut(&y).unwrap() = ball.elements.len() as u32;
                ball.elements.push(y);
                ball.lengths.push(d);
                ball.parents.push(Some((p, gi)));
            }
            layer = start..ball.elements.len();
        }
        Ok(ball)
    }
}

pub struct Syllables<'a> {
    oracle: &'a GroupOracle,
    raw: &'a [i64],
}

impl<'a> Iterator for Syllables<'a> {
    type Item = (usize, &'a [i64]);

    fn next(&mut self) -> Option<Self::Item> {
        if self.raw.is_empty() {
            return None;
        }
        let f = self.raw[0] as usize;
        let r = self.oracle.factors[f].rank();
        let v = &self.raw[1..1 + r];
        self.raw = &self.raw[1 + r..];
        Some((f, v))
    }
}

/// A word-metric ball with its breadth-first spanning tree.
#[derive(Debug, Clone)]
pub struct Ball {
    pub elements: Vec<GroupElement>,
    pub lengths: Vec<u32>,
    /// Parent index and generator index; `None` only for the identity.
    pub parents: Vec<Option<(u32, u16)>>,
}

impl Ball {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}
