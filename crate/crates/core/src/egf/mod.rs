//! Relative automata acting on flag manifolds, compatible set systems, and the
//! checks run on families of representations.

mod compat;
mod family;

pub use compat::{
    check_compatibility, fiber_consistency_check, gpath_tracking_check, nested_diameters, CompatibilityReport,
    DiameterReport, FiberPair, FiberReport, InclusionWitness, TrackingReport,
};
pub use family::{
    chabauty_check, edf_condition_check, elliptic_family, limit_set_convergence, sanov_automaton, sanov_pair,
    sanov_representation, sanov_set_system, ChabautyReport, ChabautyRow, EdfQuery, EdfReport, EdfRow,
    FamilyMember, HausdorffRow, LimitSetReport, OneSided, RepFamily, SANOV_T,
};

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::flag::{flag_distance, is_transverse, Flag};
use crate::group::{GroupElement, GroupOracle, RelHypPair};

/// Three-valued result of a numerical check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Outcome {
    Pass,
    Inconclusive,
    Fail,
}

impl Outcome {
    pub fn name(self) -> &'static str {
        match self {
            Outcome::Pass => "pass",
            Outcome::Inconclusive => "inconclusive",
            Outcome::Fail => "fail",
        }
    }

    /// The worse of two outcomes.
    pub fn and(self, other: Outcome) -> Outcome {
        self.max(other)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Label {
    Singleton(GroupElement),
    /// `g P_peripheral ∖ excluded`.
    Coset { g: GroupElement, peripheral: usize, excluded: Vec<GroupElement> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AutomatonVertex {
    pub name: String,
    pub label: Label,
}

/// A finite directed graph with label sets `T_v ⊂ Γ`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AutomatonGraph {
    pub vertices: Vec<AutomatonVertex>,
    /// Sorted, without duplicates.
    pub edges: Vec<(usize, usize)>,
}

impl AutomatonGraph {
    pub fn new(vertices: Vec<AutomatonVertex>, edges: &[(usize, usize)]) -> Result<Self> {
        let n = vertices.len();
        if let Some(e) = edges.iter().find(|e| e.0 >= n || e.1 >= n) {
            return Err(Error::InvalidParameter(format!("edge {e:?} leaves the {n} vertices")));
        }
        let edges: BTreeSet<(usize, usize)> = edges.iter().copied().collect();
        Ok(AutomatonGraph { vertices, edges: edges.into_iter().collect() })
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn successors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges.iter().filter(move |e| e.0 == v).map(|e| e.1)
    }

    pub fn is_parabolic(&self, v: usize) -> bool {
        matches!(self.vertices[v].label, Label::Coset { .. })
    }

    /// Elements of `T_v`; coset labels are cut at peripheral length `cutoff`.
    /// The flag is set when the label set is larger than what was listed.
    pub fn labels(&self, pair: &RelHypPair, v: usize, cutoff: u64) -> Result<(Vec<GroupElement>, bool)> {
        match &self.vertices[v].label {
            Label::Singleton(a) => Ok((alloc::vec![a.clone()], false)),
            Label::Coset { g, peripheral, excluded } => {
                let p = pair.peripheral(*peripheral)?;
                let oracle = pair.group();
                let fac = &oracle.factors()[p.factor];
                let ball = fac
                    .ball(cutoff, crate::group::DEFAULT_BALL_CAP)
                    .ok_or(Error::BudgetExceeded { what: "peripheral ball", limit: crate::group::DEFAULT_BALL_CAP })?;
                let truncated = fac.order().is_none_or(|o| (ball.len() as u64) < o);
                let out = ball
                    .into_iter()
                    .map(|(x, _)| oracle.multiply(g, &oracle.syllable(p.factor, &x)))
                    .filter(|y| !excluded.contains(y))
                    .collect();
                Ok((out, truncated))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PropertyCheck {
    pub name: &'static str,
    pub pass: bool,
    pub witnesses: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AutomatonReport {
    /// Every vertex has an outgoing edge.
    pub outgoing_edge: PropertyCheck,
    /// Each peripheral has a parabolic vertex at its own fixed point, and all
    /// parabolic vertices over translates of that point share its outgoing edges.
    pub parabolic_vertex: PropertyCheck,
}

impl AutomatonReport {
    pub fn pass(&self) -> bool {
        self.outgoing_edge.pass && self.parabolic_vertex.pass
    }
}

/// Structural checks of a `(Γ, P)`-graph.
pub fn validate_automaton(g: &AutomatonGraph, pair: &RelHypPair) -> Result<AutomatonReport> {
    let oracle = pair.group();
    for v in &g.vertices {
        if let Label::Coset { g: base, peripheral, excluded } = &v.label {
            if pair.peripheral(*peripheral).is_err() {
                return Err(Error::MalformedLabel(format!("vertex {} names peripheral {peripheral}", v.name)));
            }
            let key = pair.coset_key(*peripheral, base);
            if let Some(x) = excluded.iter().find(|x| pair.coset_key(*peripheral, x) != key) {
                return Err(Error::MalformedLabel(format!(
                    "vertex {} excludes {} outside its coset",
                    v.name,
                    oracle.render(x)
                )));
            }
        }
    }
    let mut outgoing_edge = PropertyCheck { name: "outgoing-edge", pass: true, witnesses: Vec::new() };
    for (i, v) in g.vertices.iter().enumerate() {
        if g.successors(i).next().is_none() {
            outgoing_edge.pass = false;
            outgoing_edge.witnesses.push(v.name.clone());
        }
    }
    let mut parabolic_vertex = PropertyCheck { name: "parabolic-vertex", pass: true, witnesses: Vec::new() };
    for p in pair.peripherals() {
        let over_p: Vec<usize> = (0..g.len())
            .filter(|&i| matches!(&g.vertices[i].label, Label::Coset { peripheral, .. } if *peripheral == p.id))
            .collect();
        let at_p = over_p.iter().copied().find(|&i| match &g.vertices[i].label {
            Label::Coset { g: base, .. } => pair.coset_key(p.id, base).is_identity(),
            Label::Singleton(_) => false,
        });
        let Some(v) = at_p else {
            parabolic_vertex.pass = false;
            parabolic_vertex.witnesses.push(format!("no parabolic vertex at the fixed point of peripheral {}", p.id));
            continue;
        };
        let out_v: Vec<usize> = g.successors(v).collect();
        for &w in &over_p {
            if g.successors(w).collect::<Vec<_>>() != out_v {
                parabolic_vertex.pass = false;
                parabolic_vertex
                    .witnesses
                    .push(format!("{} and {} have different outgoing edges", g.vertices[v].name, g.vertices[w].name));
            }
        }
    }
    Ok(AutomatonReport { outgoing_edge, parabolic_vertex })
}

/// A path in the automaton with a label element at each vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GPath {
    pub steps: Vec<(usize, GroupElement)>,
    /// Finite path standing for the parabolic point `α_1 ⋯ α_{N-1} q_{v_N}`.
    pub limiting_parabolic: bool,
}

impl GPath {
    pub fn new(g: &AutomatonGraph, steps: Vec<(usize, GroupElement)>) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::EmptyPath);
        }
        for w in steps.windows(2) {
            if g.edges.binary_search(&(w[0].0, w[1].0)).is_err() {
                return Err(Error::InvalidParameter(format!("no edge {} -> {}", w[0].0, w[1].0)));
            }
        }
        Ok(GPath { steps, limiting_parabolic: false })
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// `g_n = α_1 ⋯ α_n` for `n = 1, …, N`.
    pub fn partial_products(&self, oracle: &GroupOracle) -> Vec<GroupElement> {
        let mut g = oracle.identity();
        self.steps
            .iter()
            .map(|(_, a)| {
                g = oracle.multiply(&g, a);
                g.clone()
            })
            .collect()
    }

    /// Marks the path as limiting to the parabolic point of its last vertex and
    /// returns that point as `(peripheral, coset key)`.
    pub fn mark_limiting_parabolic(&mut self, g: &AutomatonGraph, pair: &RelHypPair) -> Result<(usize, GroupElement)> {
        let (v, _) = self.steps.last().ok_or(Error::EmptyPath)?;
        let Label::Coset { g: base, peripheral, .. } = &g.vertices[*v].label else {
            return Err(Error::InvalidParameter("the last vertex is not parabolic".into()));
        };
        let oracle = pair.group();
        let mut prefix = oracle.identity();
        for (_, a) in &self.steps[..self.steps.len() - 1] {
            prefix = oracle.multiply(&prefix, a);
        }
        self.limiting_parabolic = true;
        Ok((*peripheral, pair.coset_key(*peripheral, &oracle.multiply(&prefix, base))))
    }
}

/// Depth-first stream of G-paths with `max_len` vertices, or shorter when a
/// vertex without outgoing edges is reached. Vertices, successors and labels
/// are taken in order.
pub struct GPathStream<'a> {
    graph: &'a AutomatonGraph,
    labels: Vec<Vec<GroupElement>>,
    truncated: Vec<bool>,
    max_len: usize,
    /// `(option index, label index)` per level; options of level 0 are all vertices.
    stack: Vec<(usize, usize)>,
    started: bool,
}

pub fn enumerate_gpaths<'a>(
    g: &'a AutomatonGraph,
    pair: &RelHypPair,
    max_len: usize,
    label_cutoff: u64,
) -> Result<GPathStream<'a>> {
    if max_len == 0 {
        return Err(Error::InvalidParameter("max_len must be at least 1".into()));
    }
    let mut labels = Vec::with_capacity(g.len());
    let mut truncated = Vec::with_capacity(g.len());
    for v in 0..g.len() {
        let (l, t) = g.labels(pair, v, label_cutoff)?;
        labels.push(l);
        truncated.push(t);
    }
    Ok(GPathStream { graph: g, labels, truncated, max_len, stack: Vec::new(), started: false })
}

impl GPathStream<'_> {
    /// Whether some coset label was cut at the label cutoff.
    pub fn truncated(&self) -> bool {
        self.truncated.iter().any(|&t| t)
    }

    fn options(&self, level: usize) -> Vec<usize> {
        if level == 0 {
            (0..self.graph.len()).collect()
        } else {
            let (oi, _) = self.stack[level - 1];
            let v = self.options(level - 1)[oi];
            self.graph.successors(v).collect()
        }
    }

    /// First admissible choice at the next level at or after `(oi, li)`.
    fn first_from(&self, level: usize, mut oi: usize, mut li: usize) -> Option<(usize, usize)> {
        let opts = self.options(level);
        while oi < opts.len() {
            if li < self.labels[opts[oi]].len() {
                return Some((oi, li));
            }
            oi += 1;
            li = 0;
        }
        None
    }

    fn descend(&mut self) {
        while self.stack.len() < self.max_len {
            match self.first_from(self.stack.len(), 0, 0) {
                Some(c) => self.stack.push(c),
                None => break,
            }
        }
    }

    fn current(&self) -> GPath {
        let mut steps = Vec::with_capacity(self.stack.len());
        for (level, &(oi, li)) in self.stack.iter().enumerate() {
            let v = self.options(level)[oi];
            steps.push((v, self.labels[v][li].clone()));
        }
        GPath { steps, limiting_parabolic: false }
    }
}

impl Iterator for GPathStream<'_> {
    type Item = GPath;

    fn next(&mut self) -> Option<GPath> {
        if !self.started {
            self.started = true;
            self.descend();
            return if self.stack.is_empty() { None } else { Some(self.current()) };
        }
        loop {
            let (oi, li) = self.stack.pop()?;
            let level = self.stack.len();
            if let Some(c) = self.first_from(level, oi, li + 1) {
                self.stack.push(c);
                self.descend();
                // a dead end below a new choice is still a path, but an empty
                // level zero is not
                return Some(self.current());
            }
        }
    }
}

/// A closed ball in the flag manifold.
#[derive(Debug, Clone, PartialEq)]
pub struct FlagBall {
    pub center: Flag,
    pub radius: f64,
}

impl FlagBall {
    pub fn new(center: Flag, radius: f64) -> Self {
        FlagBall { center, radius }
    }

    /// Signed distance to the boundary, positive inside.
    pub fn depth_of(&self, x: &Flag) -> Result<f64> {
        Ok(self.radius - flag_distance(&self.center, x)?)
    }

    /// Points at distance `radius + extra` from the center: the two endpoints
    /// of the arc in `ℝP¹`, `n` seeded points otherwise.
    pub fn boundary_samples(&self, extra: f64, n: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Flag>> {
        let rho = (self.radius + extra).min(1.0);
        if self.center.dim() == 2 {
            let t = self.center.angle().unwrap();
            let phi = libm::asin(rho);
            return Ok(alloc::vec![Flag::line_at(t - phi), Flag::line_at(t + phi)]);
        }
        (0..n).map(|_| point_at_distance(&self.center, rho, rng)).collect()
    }

    /// `n` points of the ball: evenly spaced along the arc in `ℝP¹`, seeded
    /// random radii and directions otherwise.
    pub fn interior_samples(&self, n: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Flag>> {
        let r = self.radius.min(1.0);
        if self.center.dim() == 2 {
            let t = self.center.angle().unwrap();
            let phi = libm::asin(r);
            let m = n.max(2) - 1;
            return Ok((0..=m).map(|i| Flag::line_at(t - phi + 2.0 * phi * i as f64 / m as f64)).collect());
        }
        (0..n).map(|_| point_at_distance(&self.center, r * rng.gen::<f64>(), rng)).collect()
    }
}

/// `R c` for a seeded rotation `R = (I - tA/2)^{-1}(I + tA/2)`, `A` skew, with
/// `t` tuned so that the distance to `c` is `rho` (or as close as it gets).
fn point_at_distance(c: &Flag, rho: f64, rng: &mut ChaCha8Rng) -> Result<Flag> {
    let d = c.dim();
    let mut a = DMatrix::<f64>::zeros(d, d);
    for i in 0..d {
        for j in i + 1..d {
            let x = rng.gen::<f64>() * 2.0 - 1.0;
            a[(i, j)] = x;
            a[(j, i)] = -x;
        }
    }
    let rotate = |t: f64| -> Result<Flag> {
        let id = DMatrix::<f64>::identity(d, d);
        let half = &a * (t / 2.0);
        let inv = (&id - &half).try_inverse().expect("I - skew is invertible");
        let r = inv * (&id + &half);
        Flag::from_frame(c.parabolic_type().clone(), r * c.frame())
    };
    if rho <= 0.0 {
        return Ok(c.clone());
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut best = rotate(hi)?;
    while flag_distance(c, &best)? < rho && hi < 1e6 {
        lo = hi;
        hi *= 2.0;
        best = rotate(hi)?;
    }
    if flag_distance(c, &best)? < rho {
        return Ok(best);
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if flag_distance(c, &rotate(mid)?)? < rho {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    rotate(hi)
}

/// Open sets `U_v` as unions of balls, a margin `ε`, and per vertex a flag
/// transverse to every ball center with margin above the ball radius.
#[derive(Debug, Clone, PartialEq)]
pub struct SetSystem {
    pub sets: Vec<Vec<FlagBall>>,
    pub epsilon: f64,
    pub exterior: Vec<Flag>,
}

impl SetSystem {
    pub fn new(sets: Vec<Vec<FlagBall>>, epsilon: f64, exterior: Vec<Flag>) -> Result<Self> {
        if epsilon.is_nan() || epsilon <= 0.0 {
            return Err(Error::InvalidParameter("epsilon must be positive".into()));
        }
        if exterior.len() != sets.len() {
            return Err(Error::DimensionMismatch(format!("{} exterior witnesses for {} sets", exterior.len(), sets.len())));
        }
        for (v, (balls, w)) in sets.iter().zip(&exterior).enumerate() {
            if balls.is_empty() {
                return Err(Error::InvalidParameter(format!("set {v} is empty")));
            }
            for b in balls {
                let (_, margin) = is_transverse(w, &b.center)?;
                if margin <= b.radius {
                    return Err(Error::InvalidParameter(format!(
                        "exterior witness of set {v} is not transverse with margin above {}",
                        b.radius
                    )));
                }
            }
        }
        Ok(SetSystem { sets, epsilon, exterior })
    }

    /// `max` over the balls of `U_v` of the signed depth of `x`; positive iff `x ∈ U_v`.
    pub fn depth_in(&self, v: usize, x: &Flag) -> Result<f64> {
        let mut best = f64::NEG_INFINITY;
        for b in &self.sets[v] {
            best = best.max(b.depth_of(x)?);
        }
        Ok(best)
    }
}
