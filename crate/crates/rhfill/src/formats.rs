//! JSON descriptors for pairs, kernels, representations, automata and set
//! systems, plus the text graph dump.
//!
//! Descriptors deserialize structurally with serde; words and decimal strings
//! are resolved afterwards against an oracle, with errors naming the field path.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rhfill_core::egf::{
    sanov_automaton, sanov_pair, sanov_representation, sanov_set_system, AutomatonGraph, AutomatonVertex, EdfQuery,
    FlagBall, Label, SetSystem,
};
use rhfill_core::flag::{Flag, ParabolicType, ProjectiveMatrix, Representation};
use rhfill_core::graph::{CuspedGraph, EdgeKind, GraphKind, VertexKey, Window};
use rhfill_core::group::{
    make_oracle, make_pair, GroupElement, GroupOracle, GroupSpec, KernelSpec, PeripheralSpec, RelHypPair,
};
use rhfill_core::nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const BUILTIN: &str = "sanov";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GroupDesc {
    Free { rank: usize },
    FreeAbelian { rank: usize },
    FiniteCyclic { order: u64 },
    FreeProduct { factors: Vec<GroupDesc> },
}

impl GroupDesc {
    pub fn spec(&self) -> GroupSpec {
        match self {
            GroupDesc::Free { rank } => GroupSpec::Free { rank: *rank },
            GroupDesc::FreeAbelian { rank } => GroupSpec::FreeAbelian { rank: *rank },
            GroupDesc::FiniteCyclic { order } => GroupSpec::FiniteCyclic { order: *order },
            GroupDesc::FreeProduct { factors } => GroupSpec::FreeProduct(factors.iter().map(GroupDesc::spec).collect()),
        }
    }
}

/// A peripheral given as a factor index or by generating words.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PeripheralDesc {
    Factor(usize),
    Generated(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairDesc {
    pub group: GroupDesc,
    pub peripherals: Vec<PeripheralDesc>,
}

/// `"sanov"` or an inline descriptor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Builtin<T> {
    Named(String),
    Inline(T),
}

fn builtin_name(name: &str, field: &str) -> CliResult<()> {
    if name == BUILTIN {
        Ok(())
    } else {
        Err(CliError::schema(field, format!("unknown built-in `{name}`, expected `{BUILTIN}`")))
    }
}

pub fn parse_word(oracle: &GroupOracle, word: &str, field: &str) -> CliResult<GroupElement> {
    oracle.parse(word).map_err(|e| CliError::schema(field, e))
}

pub fn resolve_pair(desc: &Builtin<PairDesc>, field: &str) -> CliResult<RelHypPair> {
    let d = match desc {
        Builtin::Named(name) => {
            builtin_name(name, field)?;
            return Ok(sanov_pair());
        }
        Builtin::Inline(d) => d,
    };
    let oracle = make_oracle(&d.group.spec()).map_err(|e| CliError::schema(format!("{field}.group"), e))?;
    let mut specs = Vec::with_capacity(d.peripherals.len());
    for (i, p) in d.peripherals.iter().enumerate() {
        specs.push(match p {
            PeripheralDesc::Factor(f) => PeripheralSpec::Factor(*f),
            PeripheralDesc::Generated(words) => PeripheralSpec::Generated(
                words
                    .iter()
                    .enumerate()
                    .map(|(j, w)| parse_word(&oracle, w, &format!("{field}.peripherals[{i}][{j}]")))
                    .collect::<CliResult<_>>()?,
            ),
        });
    }
    make_pair(oracle, &specs).map_err(|e| CliError::schema(format!("{field}.peripherals"), e))
}

/// A kernel element as a word or as an exponent vector in the peripheral's factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KernelEntry {
    Word(String),
    Vector(Vec<i64>),
}

/// Peripheral id (as a string key) to kernel generators.
pub type KernelsDesc = BTreeMap<String, Vec<KernelEntry>>;

pub fn resolve_kernels(pair: &RelHypPair, desc: &KernelsDesc, field: &str) -> CliResult<KernelSpec> {
    let oracle = pair.group();
    let mut spec = KernelSpec::new();
    for (key, entries) in desc {
        let at = format!("{field}.{key}");
        let id: usize = key.parse().map_err(|_| CliError::schema(&at, "peripheral ids are nonnegative integers"))?;
        let p = pair.peripheral(id).map_err(|e| CliError::schema(&at, e))?;
        let rank = oracle.factors()[p.factor].rank();
        let mut gens = Vec::with_capacity(entries.len());
        for (j, e) in entries.iter().enumerate() {
            let at = format!("{at}[{j}]");
            let g = match e {
                KernelEntry::Word(w) => parse_word(oracle, w, &at)?,
                KernelEntry::Vector(v) if v.len() == rank => oracle.syllable(p.factor, v),
                KernelEntry::Vector(v) => {
                    return Err(CliError::schema(at, format!("vector of length {} in a rank {rank} peripheral", v.len())))
                }
            };
            if !pair.membership(id, &g) {
                return Err(CliError::schema(at, format!("`{}` is not in peripheral {id}", oracle.render(&g))));
            }
            gens.push(g);
        }
        spec.insert(id, gens);
    }
    Ok(spec)
}

/// `n` times every basis vector of every peripheral.
pub fn power_kernels(pair: &RelHypPair, n: u64) -> KernelSpec {
    let oracle = pair.group();
    let mut spec = KernelSpec::new();
    for p in pair.peripherals() {
        let rank = oracle.factors()[p.factor].rank();
        let gens = (0..rank)
            .map(|i| {
                let mut v = vec![0i64; rank];
                v[i] = n as i64;
                oracle.syllable(p.factor, &v)
            })
            .collect();
        spec.insert(p.id, gens);
    }
    spec
}

pub fn kernels_to_desc(pair: &RelHypPair, spec: &KernelSpec) -> KernelsDesc {
    spec.iter()
        .map(|(id, gens)| (id.to_string(), gens.iter().map(|g| KernelEntry::Word(pair.group().render(g))).collect()))
        .collect()
}

/// Strict decimal grammar: sign, digits with an optional point, optional exponent.
fn is_decimal(s: &str) -> bool {
    let b = s.as_bytes();
    let mut i = usize::from(matches!(b.first(), Some(b'+' | b'-')));
    let (mut int, mut frac) = (0, 0);
    while i < b.len() && b[i].is_ascii_digit() {
        i += 1;
        int += 1;
    }
    if i < b.len() && b[i] == b'.' {
        i += 1;
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
            frac += 1;
        }
    }
    if int + frac == 0 {
        return false;
    }
    if i < b.len() && matches!(b[i], b'e' | b'E') {
        i += 1;
        if i < b.len() && matches!(b[i], b'+' | b'-') {
            i += 1;
        }
        let start = i;
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
        if i == start {
            return false;
        }
    }
    i == b.len()
}

/// Correctly rounded conversion of a decimal string.
pub fn parse_decimal(s: &str, field: &str) -> CliResult<f64> {
    let t = s.trim();
    if !is_decimal(t) {
        return Err(CliError::schema(field, format!("`{s}` is not a decimal number")));
    }
    let x: f64 = t.parse().map_err(|e| CliError::schema(field, e))?;
    if !x.is_finite() {
        return Err(CliError::schema(field, format!("`{s}` is out of range")));
    }
    Ok(x)
}

/// Row-major entries, flat or as rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixDesc {
    Flat(Vec<String>),
    Rows(Vec<Vec<String>>),
}

/// Generator name to matrix.
pub type RepresentationDesc = BTreeMap<String, MatrixDesc>;

pub fn resolve_representation(
    pair: &RelHypPair,
    desc: &Builtin<RepresentationDesc>,
    field: &str,
) -> CliResult<Representation> {
    let d = match desc {
        Builtin::Named(name) => {
            builtin_name(name, field)?;
            if pair.group().letters().len() != 2 {
                return Err(CliError::schema(field, "the built-in representation needs two letters"));
            }
            return Ok(sanov_representation(pair)?);
        }
        Builtin::Inline(d) => d,
    };
    let oracle = pair.group();
    if let Some(extra) = d.keys().find(|k| oracle.letters().iter().all(|l| &l.name != *k)) {
        return Err(CliError::schema(format!("{field}.{extra}"), "no such generator"));
    }
    let mut mats = Vec::with_capacity(oracle.letters().len());
    for l in oracle.letters() {
        let at = format!("{field}.{}", l.name);
        let m = d.get(&l.name).ok_or_else(|| CliError::schema(&at, "missing generator"))?;
        let strings: Vec<&String> = match m {
            MatrixDesc::Flat(v) => v.iter().collect(),
            MatrixDesc::Rows(rows) => {
                if rows.iter().any(|r| r.len() != rows.len()) {
                    return Err(CliError::schema(&at, "rows of unequal length"));
                }
                rows.iter().flatten().collect()
            }
        };
        let dim = (strings.len() as f64).sqrt().round() as usize;
        if dim * dim != strings.len() || dim < 2 {
            return Err(CliError::schema(&at, format!("{} entries do not form a square matrix", strings.len())));
        }
        let entries: Vec<f64> = strings
            .iter()
            .enumerate()
            .map(|(i, s)| parse_decimal(s, &format!("{at}[{i}]")))
            .collect::<CliResult<_>>()?;
        mats.push(ProjectiveMatrix::from_rows(dim, &entries).map_err(|e| CliError::schema(&at, e))?);
    }
    Representation::new(oracle, mats).map_err(|e| CliError::schema(field, e))
}

/// Unimodular representatives as shortest round-trip decimal strings.
pub fn representation_to_desc(oracle: &GroupOracle, rep: &Representation) -> RepresentationDesc {
    oracle
        .letters()
        .iter()
        .zip(rep.letter_matrices())
        .map(|(l, m)| {
            let a = m.unimodular();
            let flat = (0..a.nrows()).flat_map(|i| (0..a.ncols()).map(|j| format!("{:?}", a[(i, j)])).collect::<Vec<_>>()).collect();
            (l.name.clone(), MatrixDesc::Flat(flat))
        })
        .collect()
}

/// A line by angle or spanning vector, or a flag by an orthonormalizable frame
/// (rows of the matrix are the frame vectors) and its type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FlagDesc {
    Angle { angle: f64 },
    Line { line: Vec<f64> },
    Frame { frame: Vec<Vec<f64>>, indices: Vec<usize> },
}

pub fn resolve_flag(desc: &FlagDesc, field: &str) -> CliResult<Flag> {
    let r = match desc {
        FlagDesc::Angle { angle } => Ok(Flag::line_at(*angle)),
        FlagDesc::Line { line } => Flag::line(line),
        FlagDesc::Frame { frame, indices } => {
            let d = frame.first().map_or(0, Vec::len);
            if frame.is_empty() || frame.iter().any(|r| r.len() != d) {
                return Err(CliError::schema(field, "frame rows must be nonempty and of equal length"));
            }
            let cols = DMatrix::from_fn(d, frame.len(), |i, j| frame[j][i]);
            ParabolicType::new(d, indices).and_then(|ty| Flag::from_frame(ty, cols))
        }
    };
    r.map_err(|e| CliError::schema(field, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BallDesc {
    pub center: FlagDesc,
    pub radius: f64,
}

pub fn resolve_balls(balls: &[BallDesc], field: &str) -> CliResult<Vec<FlagBall>> {
    balls
        .iter()
        .enumerate()
        .map(|(i, b)| {
            if !(b.radius > 0.0 && b.radius <= 1.0) {
                return Err(CliError::schema(format!("{field}[{i}].radius"), "radius must lie in (0, 1]"));
            }
            Ok(FlagBall::new(resolve_flag(&b.center, &format!("{field}[{i}].center"))?, b.radius))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LabelDesc {
    Singleton { word: String },
    Coset { g: String, peripheral: usize, #[serde(default)] excluded: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VertexDesc {
    pub id: String,
    pub label: LabelDesc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AutomatonDesc {
    pub vertices: Vec<VertexDesc>,
    pub edges: Vec<(String, String)>,
}

fn vertex_index(ids: &[&str], id: &str, field: &str) -> CliResult<usize> {
    ids.iter().position(|x| *x == id).ok_or_else(|| CliError::schema(field, format!("unknown vertex `{id}`")))
}

pub fn resolve_automaton(pair: &RelHypPair, desc: &Builtin<AutomatonDesc>, field: &str) -> CliResult<AutomatonGraph> {
    let d = match desc {
        Builtin::Named(name) => {
            builtin_name(name, field)?;
            return Ok(sanov_automaton());
        }
        Builtin::Inline(d) => d,
    };
    let oracle = pair.group();
    let mut vertices = Vec::with_capacity(d.vertices.len());
    for (i, v) in d.vertices.iter().enumerate() {
        let at = format!("{field}.vertices[{i}].label");
        let label = match &v.label {
            LabelDesc::Singleton { word } => Label::Singleton(parse_word(oracle, word, &format!("{at}.word"))?),
            LabelDesc::Coset { g, peripheral, excluded } => Label::Coset {
                g: parse_word(oracle, g, &format!("{at}.g"))?,
                peripheral: *peripheral,
                excluded: excluded
                    .iter()
                    .enumerate()
                    .map(|(j, w)| parse_word(oracle, w, &format!("{at}.excluded[{j}]")))
                    .collect::<CliResult<_>>()?,
            },
        };
        if d.vertices[..i].iter().any(|u| u.id == v.id) {
            return Err(CliError::schema(format!("{field}.vertices[{i}].id"), format!("duplicate id `{}`", v.id)));
        }
        vertices.push(AutomatonVertex { name: v.id.clone(), label });
    }
    let ids: Vec<&str> = d.vertices.iter().map(|v| v.id.as_str()).collect();
    let edges = d
        .edges
        .iter()
        .enumerate()
        .map(|(i, (a, b))| {
            let at = format!("{field}.edges[{i}]");
            Ok((vertex_index(&ids, a, &at)?, vertex_index(&ids, b, &at)?))
        })
        .collect::<CliResult<Vec<_>>>()?;
    AutomatonGraph::new(vertices, &edges).map_err(|e| CliError::schema(field, e))
}

pub fn automaton_to_desc(oracle: &GroupOracle, g: &AutomatonGraph) -> AutomatonDesc {
    let vertices = g
        .vertices
        .iter()
        .map(|v| VertexDesc {
            id: v.name.clone(),
            label: match &v.label {
                Label::Singleton(w) => LabelDesc::Singleton { word: oracle.render(w) },
                Label::Coset { g, peripheral, excluded } => LabelDesc::Coset {
                    g: oracle.render(g),
                    peripheral: *peripheral,
                    excluded: excluded.iter().map(|x| oracle.render(x)).collect(),
                },
            },
        })
        .collect();
    let edges = g.edges.iter().map(|&(a, b)| (g.vertices[a].name.clone(), g.vertices[b].name.clone())).collect();
    AutomatonDesc { vertices, edges }
}

/// Ball lists keyed by automaton vertex id, one exterior point per vertex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetSystemDesc {
    pub epsilon: f64,
    pub sets: BTreeMap<String, Vec<BallDesc>>,
    pub exterior: BTreeMap<String, FlagDesc>,
}

pub fn resolve_set_system(
    g: &AutomatonGraph,
    desc: &Builtin<SetSystemDesc>,
    field: &str,
) -> CliResult<SetSystem> {
    let d = match desc {
        Builtin::Named(name) => {
            builtin_name(name, field)?;
            return Ok(sanov_set_system());
        }
        Builtin::Inline(d) => d,
    };
    let ids: Vec<&str> = g.vertices.iter().map(|v| v.name.as_str()).collect();
    for key in d.sets.keys().chain(d.exterior.keys()) {
        vertex_index(&ids, key, field)?;
    }
    let mut sets = Vec::with_capacity(ids.len());
    let mut exterior = Vec::with_capacity(ids.len());
    for id in &ids {
        let balls = d.sets.get(*id).ok_or_else(|| CliError::schema(format!("{field}.sets.{id}"), "missing"))?;
        sets.push(resolve_balls(balls, &format!("{field}.sets.{id}"))?);
        let x = d.exterior.get(*id).ok_or_else(|| CliError::schema(format!("{field}.exterior.{id}"), "missing"))?;
        exterior.push(resolve_flag(x, &format!("{field}.exterior.{id}"))?);
    }
    SetSystem::new(sets, d.epsilon, exterior).map_err(|e| CliError::schema(field, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdfQueryDesc {
    pub peripheral: usize,
    pub u: Vec<BallDesc>,
    #[serde(default)]
    pub f: Vec<String>,
    pub k: Vec<BallDesc>,
}

pub fn resolve_edf_query(pair: &RelHypPair, q: &EdfQueryDesc, field: &str) -> CliResult<EdfQuery> {
    Ok(EdfQuery {
        peripheral: q.peripheral,
        u: resolve_balls(&q.u, &format!("{field}.u"))?,
        f: q.f
            .iter()
            .enumerate()
            .map(|(i, w)| parse_word(pair.group(), w, &format!("{field}.f[{i}]")))
            .collect::<CliResult<_>>()?,
        k: resolve_balls(&q.k, &format!("{field}.k"))?,
    })
}

/// `U = B(e_1, 0.5)`, `K = B(e_2, 0.3)`, `F = {id}` on the first peripheral.
pub fn default_edf_query() -> EdfQueryDesc {
    EdfQueryDesc {
        peripheral: 0,
        u: vec![BallDesc { center: FlagDesc::Angle { angle: 0.0 }, radius: 0.5 }],
        f: vec!["1".into()],
        k: vec![BallDesc { center: FlagDesc::Angle { angle: std::f64::consts::FRAC_PI_2 }, radius: 0.3 }],
    }
}

fn kind_name(kind: GraphKind) -> &'static str {
    match kind {
        GraphKind::Cayley => "cayley",
        GraphKind::ConedOff => "coned",
        GraphKind::Cusped => "cusped",
        GraphKind::Horoball => "horoball",
        GraphKind::Plain => "plain",
    }
}

/// One `V <id> <depth> <cosetId|-> <word>` line per vertex and one
/// `E <id1> <id2> <kind>` line per edge with `id1 < id2`. Coset ids number the
/// `(peripheral, coset)` pairs in order of first appearance; the word is the
/// group element, horoball base or coset representative. A leading comment
/// records the window so a dump reloads with the same certified core.
pub fn write_graph_dump(oracle: Option<&GroupOracle>, g: &CuspedGraph) -> String {
    let w = g.window();
    let opt = |x: Option<u32>| x.map_or("-".to_string(), |r| r.to_string());
    let mut out = format!(
        "# rhfill-graph kind={} root={} radius={} max_depth={}\n",
        kind_name(w.kind),
        opt(w.root),
        opt(w.radius),
        w.max_depth
    );
    let render = |x: &GroupElement| oracle.map_or_else(|| format!("{:?}", x.raw()), |o| o.render(x));
    let mut cosets: BTreeMap<(usize, GroupElement), usize> = BTreeMap::new();
    let mut coset_id = |p: usize, c: &GroupElement| {
        let n = cosets.len();
        *cosets.entry((p, c.clone())).or_insert(n)
    };
    for v in 0..g.len() as u32 {
        let key = g.key(v);
        let (coset, word) = match key {
            VertexKey::Group(x) => ("-".to_string(), render(x)),
            VertexKey::Horo { peripheral, base, .. } => (coset_id(*peripheral, base).to_string(), render(base)),
            VertexKey::Cone { peripheral, coset } => (coset_id(*peripheral, coset).to_string(), render(coset)),
            VertexKey::Node { id, .. } => ("-".to_string(), format!("#{id}")),
        };
        let _ = writeln!(out, "V {v} {} {coset} {word}", key.depth());
    }
    for (u, v, k) in g.edges() {
        if u < v {
            let _ = writeln!(out, "E {u} {v} {}", k.name());
        }
    }
    out
}

/// Reads a dump back as a plain graph on `Node` keys, keeping the window's root
/// and radius.
pub fn read_graph_dump(text: &str, field: &str) -> CliResult<CuspedGraph> {
    let mut keys = Vec::new();
    let mut edges = Vec::new();
    let mut window = Window { kind: GraphKind::Plain, root: None, radius: None, max_depth: 0, cone_cutoff: None };
    for (i, line) in text.lines().enumerate() {
        let at = || format!("{field}:{}", i + 1);
        let bad = |what: &str| CliError::schema(at(), what);
        let mut it = line.split_whitespace();
        match it.next() {
            None => {}
            Some("#") => {
                for kv in it {
                    if let Some((k, v)) = kv.split_once('=') {
                        match k {
                            "root" => window.root = v.parse().ok(),
                            "radius" => window.radius = v.parse().ok(),
                            "max_depth" => window.max_depth = v.parse().map_err(|_| bad("bad max_depth"))?,
                            _ => {}
                        }
                    }
                }
            }
            Some("V") => {
                let id: u32 = it.next().and_then(|x| x.parse().ok()).ok_or_else(|| bad("bad vertex id"))?;
                let depth: u32 = it.next().and_then(|x| x.parse().ok()).ok_or_else(|| bad("bad depth"))?;
                if id as usize != keys.len() {
                    return Err(bad("vertex ids must be 0, 1, 2, … in order"));
                }
                keys.push(VertexKey::Node { id, depth });
            }
            Some("E") => {
                let u: u32 = it.next().and_then(|x| x.parse().ok()).ok_or_else(|| bad("bad edge endpoint"))?;
                let v: u32 = it.next().and_then(|x| x.parse().ok()).ok_or_else(|| bad("bad edge endpoint"))?;
                let kind = it.next().and_then(EdgeKind::from_name).ok_or_else(|| bad("unknown edge kind"))?;
                edges.push((u, v, kind));
            }
            Some(other) => return Err(bad(&format!("unknown record `{other}`"))),
        }
    }
    let n = keys.len() as u32;
    if edges.iter().any(|&(u, v, _)| u >= n || v >= n) {
        return Err(CliError::schema(field, "edge endpoint out of range"));
    }
    if window.root.is_some_and(|r| r >= n) {
        return Err(CliError::schema(field, "root out of range"));
    }
    if window.root.is_none() {
        window.radius = None;
    }
    Ok(CuspedGraph::from_edges(keys, edges, window))
}
