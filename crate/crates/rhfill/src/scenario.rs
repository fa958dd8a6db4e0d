//! Scenario files: a pair, optional fillings and representations, and a task
//! list run in order. Every input is resolved before the first task starts.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use rhfill_core::egf::{
    chabauty_check, check_compatibility, edf_condition_check, elliptic_family, enumerate_gpaths,
    gpath_tracking_check, limit_set_convergence, nested_diameters, validate_automaton, AutomatonGraph, FamilyMember,
    GPath, RepFamily, SetSystem,
};
use rhfill_core::filling::{
    build_quotient_cusped, check_descent_quasigeodesic, check_local_isometry, lift_round_trip, rng,
};
use rhfill_core::flag::{q_limit_set, Flag, ParabolicType, Representation};
use rhfill_core::graph::{
    build_horoball, build_window, estimate_delta, regular_geodesic, verify_metric_lemmas, BaseGraph, CuspedGraph,
    DeltaMode, LemmaCheck, SpaceSpec, VertexKey,
};
use rhfill_core::group::{GroupElement, KernelSpec, RelHypPair, DEFAULT_BALL_CAP};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{CliError, CliResult};
use crate::formats::{
    default_edf_query, power_kernels, resolve_automaton, resolve_edf_query, resolve_kernels, resolve_pair,
    resolve_representation, resolve_set_system, write_graph_dump, AutomatonDesc, Builtin, EdfQueryDesc, KernelsDesc,
    PairDesc, RepresentationDesc, SetSystemDesc,
};
use crate::report::{PropertyVerdict, Report, Table, TaskReport, Verdict};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default = "default_name")]
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    pub pair: Builtin<PairDesc>,
    #[serde(default)]
    pub fillings: Option<FillingsDesc>,
    #[serde(default)]
    pub representation: Option<Builtin<RepresentationDesc>>,
    #[serde(default)]
    pub family: Option<FamilyDesc>,
    #[serde(default)]
    pub automaton: Option<Builtin<AutomatonDesc>>,
    #[serde(default)]
    pub sets: Option<Builtin<SetSystemDesc>>,
    #[serde(default)]
    pub budgets: Budgets,
    #[serde(default)]
    pub outputs: Outputs,
    pub tasks: Vec<TaskDesc>,
}

fn default_name() -> String {
    "scenario".into()
}

/// Fillings by a common power of every peripheral generator, or listed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FillingsDesc {
    Powers { powers: Vec<u64> },
    List(Vec<NamedKernels>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedKernels {
    pub label: String,
    pub kernels: KernelsDesc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FamilyDesc {
    /// Elliptic deformations of the built-in representation; needs the built-in pair.
    Elliptic { n: Vec<u64> },
    /// Copies of `representation` indexed by `n`.
    Constant { n: Vec<u64> },
    Explicit { members: Vec<MemberDesc> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MemberDesc {
    pub n: u64,
    pub representation: RepresentationDesc,
    #[serde(default)]
    pub kernels: KernelsDesc,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Budgets {
    /// Cap on enumerated group elements and window vertices, and on matrices
    /// computed from them.
    #[serde(default = "default_elements")]
    pub elements: usize,
    /// Wall clock for the whole scenario, checked between tasks.
    #[serde(default = "default_seconds")]
    pub seconds: f64,
}

fn default_elements() -> usize {
    DEFAULT_BALL_CAP
}

fn default_seconds() -> f64 {
    900.0
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets { elements: default_elements(), seconds: default_seconds() }
    }
}

/// Paths relative to the scenario file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    #[serde(default)]
    pub report: Option<String>,
    /// Directory receiving one CSV per table.
    #[serde(default)]
    pub tables: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskDesc {
    #[serde(default)]
    pub name: Option<String>,
    /// Whether the task's verdicts count towards the exit status.
    #[serde(default = "yes")]
    pub assert: bool,
    /// Expected verdicts that differ from `pass`.
    #[serde(default)]
    pub expect: BTreeMap<String, Verdict>,
    #[serde(flatten)]
    pub kind: TaskKind,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Space {
    Cayley,
    Coned,
    Cusped,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeltaModeDesc {
    Exhaustive,
    Sampled,
    Thin,
}

impl DeltaModeDesc {
    pub fn mode(self, samples: usize) -> DeltaMode {
        match self {
            DeltaModeDesc::Exhaustive => DeltaMode::FourPointExhaustive,
            DeltaModeDesc::Sampled => DeltaMode::FourPointSampled { quadruples: samples },
            DeltaModeDesc::Thin => DeltaMode::ThinTriangles { triangles: samples },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "kebab-case")]
pub enum TaskKind {
    /// Regular paths against BFS in the horoball over a path graph.
    Horoball {
        #[serde(default = "d129")]
        length: usize,
        #[serde(default = "d8")]
        max_depth: u32,
    },
    Cusped {
        radius: u32,
        #[serde(default = "cusped")]
        space: Space,
        #[serde(default)]
        max_depth: Option<u32>,
        #[serde(default = "d2u64")]
        cone_cutoff: u64,
        #[serde(default)]
        dump: Option<String>,
    },
    Delta {
        radius: u32,
        #[serde(default = "cusped")]
        space: Space,
        #[serde(default = "exhaustive")]
        mode: DeltaModeDesc,
        #[serde(default = "d1000")]
        samples: usize,
    },
    MetricLemmas {
        #[serde(default = "d6")]
        radius: u32,
        #[serde(default = "d2")]
        c_entry: u32,
        #[serde(default = "d5")]
        quasi_radius: u32,
        #[serde(default)]
        delta: Option<f64>,
    },
    Injectivity {
        #[serde(default)]
        radius: Option<u32>,
        #[serde(default = "d5")]
        max_radius: u32,
    },
    LocalIsometry {
        #[serde(default = "d5")]
        r: u32,
    },
    Lift {
        #[serde(default = "d6")]
        radius: u32,
        #[serde(default = "d1000")]
        walks: usize,
        #[serde(default = "d1000")]
        geodesics: usize,
        #[serde(default = "d6usize")]
        max_walk: usize,
    },
    Descent {
        #[serde(default = "d6")]
        radius: u32,
        #[serde(default = "one")]
        k: f64,
        #[serde(default = "one")]
        delta: f64,
        #[serde(default = "d3")]
        max_depth: u32,
        #[serde(default = "d200")]
        paths: usize,
    },
    UniformDelta {
        #[serde(default = "d5")]
        radius: u32,
        #[serde(default)]
        slack: f64,
    },
    Automaton {},
    Compatibility {
        #[serde(default = "d12u64")]
        depth: u64,
    },
    Contraction {
        #[serde(default = "d50")]
        paths: usize,
        #[serde(default = "d10usize")]
        length: usize,
        #[serde(default = "d3u64")]
        cutoff: u64,
        #[serde(default = "d997")]
        stride: usize,
    },
    Tracking {
        /// `(vertex id, label word)` per step.
        steps: Vec<(String, String)>,
        #[serde(default = "d8")]
        radius: u32,
    },
    Edf {
        #[serde(default = "d64")]
        depth: u64,
        #[serde(default)]
        queries: Option<Vec<EdfQueryDesc>>,
    },
    Chabauty {
        #[serde(default = "ten")]
        radius: f64,
        #[serde(default = "d8")]
        depth: u32,
    },
    LimitSet {
        #[serde(default = "d12")]
        depth: u32,
        #[serde(default = "tol")]
        tolerance: f64,
        #[serde(default)]
        indices: Option<Vec<usize>>,
        /// Also tabulate the limit cloud of the base representation.
        #[serde(default)]
        cloud: bool,
    },
}

fn d2() -> u32 {
    2
}
fn d3() -> u32 {
    3
}
fn d5() -> u32 {
    5
}
fn d6() -> u32 {
    6
}
fn d8() -> u32 {
    8
}
fn d12() -> u32 {
    12
}
fn d129() -> usize {
    129
}
fn d6usize() -> usize {
    6
}
fn d10usize() -> usize {
    10
}
fn d50() -> usize {
    50
}
fn d200() -> usize {
    200
}
fn d997() -> usize {
    997
}
fn d1000() -> usize {
    1000
}
fn d2u64() -> u64 {
    2
}
fn d3u64() -> u64 {
    3
}
fn d12u64() -> u64 {
    12
}
fn d64() -> u64 {
    64
}
fn one() -> f64 {
    1.0
}
fn ten() -> f64 {
    10.0
}
fn tol() -> f64 {
    0.05
}
fn cusped() -> Space {
    Space::Cusped
}
fn exhaustive() -> DeltaModeDesc {
    DeltaModeDesc::Exhaustive
}

impl TaskKind {
    pub fn name(&self) -> &'static str {
        match self {
            TaskKind::Horoball { .. } => "horoball",
            TaskKind::Cusped { .. } => "cusped",
            TaskKind::Delta { .. } => "delta",
            TaskKind::MetricLemmas { .. } => "metric-lemmas",
            TaskKind::Injectivity { .. } => "injectivity",
            TaskKind::LocalIsometry { .. } => "local-isometry",
            TaskKind::Lift { .. } => "lift",
            TaskKind::Descent { .. } => "descent",
            TaskKind::UniformDelta { .. } => "uniform-delta",
            TaskKind::Automaton {} => "automaton",
            TaskKind::Compatibility { .. } => "compatibility",
            TaskKind::Contraction { .. } => "contraction",
            TaskKind::Tracking { .. } => "tracking",
            TaskKind::Edf { .. } => "edf",
            TaskKind::Chabauty { .. } => "chabauty",
            TaskKind::LimitSet { .. } => "limit-set",
        }
    }
}

pub fn parse_scenario(text: &str) -> CliResult<Scenario> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        CliError::schema(if path == "." { "scenario".into() } else { path }, e.into_inner())
    })
}

pub fn load_scenario(path: &Path) -> CliResult<Scenario> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_scenario(&text)
}

#[derive(Debug, Clone)]
pub struct Filling {
    pub label: String,
    /// The common power when the filling was given by one.
    pub n: Option<u64>,
    pub spec: KernelSpec,
}

/// Resolved scenario inputs.
struct Context {
    pair: RelHypPair,
    fillings: Option<Vec<Filling>>,
    rep: Option<Representation>,
    family: Option<RepFamily>,
    automaton: Option<AutomatonGraph>,
    sets: Option<SetSystem>,
    seed: u64,
    cap: usize,
    base_dir: PathBuf,
}

impl Context {
    fn new(s: &Scenario, base_dir: &Path) -> CliResult<Self> {
        let pair = resolve_pair(&s.pair, "pair")?;
        let fillings: Option<Vec<Filling>> = match &s.fillings {
            None => None,
            Some(FillingsDesc::Powers { powers }) => Some(
                powers
                    .iter()
                    .enumerate()
                    .map(|(i, &n)| {
                        if n == 0 {
                            return Err(CliError::schema(format!("fillings.powers[{i}]"), "powers must be positive"));
                        }
                        Ok(Filling { label: format!("n={n}"), n: Some(n), spec: power_kernels(&pair, n) })
                    })
                    .collect::<CliResult<_>>()?,
            ),
            Some(FillingsDesc::List(list)) => Some(
                list.iter()
                    .enumerate()
                    .map(|(i, k)| {
                        let spec = resolve_kernels(&pair, &k.kernels, &format!("fillings[{i}].kernels"))?;
                        Ok(Filling { label: k.label.clone(), n: None, spec })
                    })
                    .collect::<CliResult<_>>()?,
            ),
        };
        if let Some(fs) = &fillings {
            for (i, f) in fs.iter().enumerate() {
                pair.fill(&f.spec).map_err(|e| CliError::schema(format!("fillings[{i}]"), e))?;
            }
        }
        let rep = s.representation.as_ref().map(|r| resolve_representation(&pair, r, "representation")).transpose()?;
        let family = match &s.family {
            None => None,
            Some(FamilyDesc::Elliptic { n }) => {
                if s.pair != Builtin::Named(crate::formats::BUILTIN.into()) {
                    return Err(CliError::schema("family", "the elliptic family lives over the built-in pair"));
                }
                Some(elliptic_family(n).map_err(|e| CliError::schema("family.n", e))?)
            }
            Some(FamilyDesc::Constant { n }) => {
                let base = rep.clone().ok_or_else(|| CliError::schema("family", "needs `representation`"))?;
                Some(RepFamily::constant(pair.clone(), base, n))
            }
            Some(FamilyDesc::Explicit { members }) => {
                let base = rep.clone().ok_or_else(|| CliError::schema("family", "needs `representation`"))?;
                let mut out = Vec::with_capacity(members.len());
                for (i, m) in members.iter().enumerate() {
                    let at = format!("family.members[{i}]");
                    let r = resolve_representation(
                        &pair,
                        &Builtin::Inline(m.representation.clone()),
                        &format!("{at}.representation"),
                    )?;
                    let kernels = resolve_kernels(&pair, &m.kernels, &format!("{at}.kernels"))?;
                    out.push(FamilyMember { n: m.n, rep: r, kernels });
                }
                Some(RepFamily::new(pair.clone(), base, out).map_err(|e| CliError::schema("family", e))?)
            }
        };
        let automaton = s.automaton.as_ref().map(|a| resolve_automaton(&pair, a, "automaton")).transpose()?;
        let sets = match (&s.sets, &automaton) {
            (None, _) => None,
            (Some(_), None) => return Err(CliError::schema("sets", "needs `automaton`")),
            (Some(d), Some(g)) => Some(resolve_set_system(g, d, "sets")?),
        };
        Ok(Context {
            pair,
            fillings,
            rep,
            family,
            automaton,
            sets,
            seed: s.seed,
            cap: s.budgets.elements,
            base_dir: base_dir.to_path_buf(),
        })
    }

    fn fillings(&self, at: &str) -> CliResult<&[Filling]> {
        self.fillings.as_deref().ok_or_else(|| CliError::schema(at, "needs `fillings`"))
    }

    fn rep(&self, at: &str) -> CliResult<&Representation> {
        self.rep.as_ref().ok_or_else(|| CliError::schema(at, "needs `representation`"))
    }

    fn family(&self, at: &str) -> CliResult<&RepFamily> {
        self.family.as_ref().ok_or_else(|| CliError::schema(at, "needs `family`"))
    }

    fn automaton(&self, at: &str) -> CliResult<&AutomatonGraph> {
        self.automaton.as_ref().ok_or_else(|| CliError::schema(at, "needs `automaton`"))
    }

    fn sets(&self, at: &str) -> CliResult<&SetSystem> {
        self.sets.as_ref().ok_or_else(|| CliError::schema(at, "needs `sets`"))
    }
}

/// What a task produced before verdicts are compared with expectations.
#[derive(Default)]
struct Outcome {
    verdicts: Vec<(&'static str, Verdict)>,
    data: Value,
    tables: Vec<Table>,
}

/// Runs every task in order. Verdict mismatches are recorded in the report,
/// not raised; errors and exhausted budgets abort the run.
pub fn run_scenario(s: &Scenario, base_dir: &Path) -> CliResult<Report> {
    let start = Instant::now();
    let ctx = Context::new(s, base_dir)?;
    let mut names = BTreeSet::new();
    for (i, t) in s.tasks.iter().enumerate() {
        let name = task_name(t, i);
        if !names.insert(name.clone()) {
            return Err(CliError::schema(format!("tasks[{i}].name"), format!("duplicate task name `{name}`")));
        }
    }
    let mut tasks = Vec::with_capacity(s.tasks.len());
    for (i, t) in s.tasks.iter().enumerate() {
        let at = format!("tasks[{i}]");
        let out = run_task(&ctx, &t.kind, &at)?;
        let mut verdicts = BTreeMap::new();
        for (prop, v) in out.verdicts {
            let expected = t.expect.get(prop).copied().unwrap_or(Verdict::Pass);
            verdicts.insert(prop.to_string(), PropertyVerdict { verdict: v, expected, asserted: t.assert });
        }
        if let Some(k) = t.expect.keys().find(|k| !verdicts.contains_key(*k)) {
            return Err(CliError::schema(format!("{at}.expect.{k}"), "the task reports no such property"));
        }
        let ok = verdicts.values().all(PropertyVerdict::ok);
        tasks.push(TaskReport {
            task: t.kind.name().into(),
            name: task_name(t, i),
            status: Verdict::of(ok),
            verdicts,
            data: out.data,
            tables: out.tables,
        });
        let elapsed = start.elapsed().as_secs_f64();
        if elapsed > s.budgets.seconds {
            return Err(CliError::Budget(format!(
                "{elapsed:.1} s after task {at} exceeds the {} s scenario budget",
                s.budgets.seconds
            )));
        }
    }
    let ok = tasks.iter().all(|t| t.status == Verdict::Pass);
    Ok(Report { scenario: s.name.clone(), seed: s.seed, status: Verdict::of(ok), tasks })
}

fn task_name(t: &TaskDesc, i: usize) -> String {
    t.name.clone().unwrap_or_else(|| format!("{i:02}-{}", t.kind.name()))
}

/// Writes the report and one CSV per table, `<task>.<table>.csv`.
pub fn write_outputs(report: &Report, report_path: Option<&Path>, tables_dir: Option<&Path>) -> CliResult<()> {
    if let Some(p) = report_path {
        if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        }
        std::fs::write(p, report.to_json()).map_err(|e| CliError::io(p, e))?;
    }
    if let Some(dir) = tables_dir {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        for (task, table) in report.tables() {
            let p = dir.join(format!("{}.{}.csv", task.name, table.name));
            std::fs::write(&p, table.to_csv()?).map_err(|e| CliError::io(&p, e))?;
        }
    }
    Ok(())
}

/// Loads, runs and writes a scenario file. Output paths default to the
/// scenario's own, resolved against its directory.
pub fn run_file(path: &Path, report_path: Option<&Path>, tables_dir: Option<&Path>) -> CliResult<Report> {
    let s = load_scenario(path)?;
    let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
    let report = run_scenario(&s, &base)?;
    let rel = |x: &Option<String>| x.as_ref().map(|p| base.join(p));
    let rp = report_path.map(Path::to_path_buf).or_else(|| rel(&s.outputs.report));
    let td = tables_dir.map(Path::to_path_buf).or_else(|| rel(&s.outputs.tables));
    write_outputs(&report, rp.as_deref(), td.as_deref())?;
    Ok(report)
}

fn describe(pair: &RelHypPair, key: &VertexKey) -> String {
    let o = pair.group();
    match key {
        VertexKey::Group(g) => o.render(g),
        VertexKey::Horo { peripheral, base, depth } => format!("({}; P{peripheral}, depth {depth})", o.render(base)),
        VertexKey::Cone { peripheral, coset } => format!("cone({} P{peripheral})", o.render(coset)),
        VertexKey::Node { id, depth } => format!("#{id} (depth {depth})"),
    }
}

fn lemma_json(pair: &RelHypPair, g: &CuspedGraph, c: &LemmaCheck) -> Value {
    json!({
        "verdict": Verdict::of(c.pass),
        "checked": c.checked,
        "worst_excess": c.worst_excess,
        "witnesses": c.witnesses.iter().map(|w| json!({
            "vertices": w.vertices.iter().map(|&v| describe(pair, g.key(v))).collect::<Vec<_>>(),
            "lhs": w.lhs,
            "rhs": w.rhs,
        })).collect::<Vec<_>>(),
    })
}

fn worst(vs: impl IntoIterator<Item = Verdict>) -> Verdict {
    vs.into_iter().max().unwrap_or(Verdict::Pass)
}

fn strictly_decreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] < w[0])
}

fn space_spec(space: Space, radius: u32, max_depth: Option<u32>, cone_cutoff: u64) -> SpaceSpec {
    match space {
        Space::Cayley => SpaceSpec::cayley(),
        Space::Coned => SpaceSpec::coned(cone_cutoff),
        Space::Cusped => SpaceSpec::cusped(max_depth.unwrap_or(radius)),
    }
}

fn run_task(ctx: &Context, kind: &TaskKind, at: &str) -> CliResult<Outcome> {
    let pair = &ctx.pair;
    let cap = ctx.cap;
    let seed = ctx.seed;
    Ok(match kind {
        TaskKind::Horoball { length, max_depth } => {
            let h = build_horoball(BaseGraph::path(*length), *max_depth)?;
            let n = h.graph.len() as u32;
            let mismatches: Vec<(u32, u32)> = (0..n)
                .into_par_iter()
                .map(|u| -> CliResult<Vec<(u32, u32)>> {
                    let d = h.graph.bfs(u);
                    let mut bad = Vec::new();
                    for v in 0..n {
                        let p = regular_geodesic(&h, u, v)?;
                        if !h.graph.is_path(&p) || p.len() as u32 != d[v as usize] {
                            bad.push((u, v));
                        }
                    }
                    Ok(bad)
                })
                .collect::<CliResult<Vec<_>>>()?
                .into_iter()
                .flatten()
                .collect();
            Outcome {
                verdicts: vec![("regular-geodesics", Verdict::of(mismatches.is_empty()))],
                data: json!({
                    "vertices": n,
                    "pairs": u64::from(n) * u64::from(n),
                    "mismatches": mismatches.len(),
                    "witnesses": mismatches.iter().take(16).map(|&(u, v)| {
                        [describe(pair, h.graph.key(u)), describe(pair, h.graph.key(v))]
                    }).collect::<Vec<_>>(),
                }),
                tables: Vec::new(),
            }
        }
        TaskKind::Cusped { radius, space, max_depth, cone_cutoff, dump } => {
            let g = build_window(pair, space_spec(*space, *radius, *max_depth, *cone_cutoff), *radius, cap)?;
            let mut spheres = vec![0u64; *radius as usize + 1];
            let mut inside = true;
            for v in 0..g.len() as u32 {
                match g.root_distance(v) {
                    Some(d) if d <= *radius => spheres[d as usize] += 1,
                    _ => inside = false,
                }
            }
            let mut t = Table::new("spheres", &["radius", "vertices"]);
            for (r, c) in spheres.iter().enumerate() {
                t.push(vec![json!(r), json!(c)]);
            }
            if let Some(p) = dump {
                let p = ctx.base_dir.join(p);
                std::fs::write(&p, write_graph_dump(Some(pair.group()), &g)).map_err(|e| CliError::io(&p, e))?;
            }
            let depth = (0..g.len() as u32).map(|v| g.depth(v)).max().unwrap_or(0);
            Outcome {
                verdicts: vec![("window-is-ball", Verdict::of(inside))],
                data: json!({ "vertices": g.len(), "edges": g.edge_count(), "max_depth": depth }),
                tables: vec![t],
            }
        }
        TaskKind::Delta { radius, space, mode, samples } => {
            let g = build_window(pair, space_spec(*space, *radius, None, 2), *radius, cap)?;
            let e = estimate_delta(&g, mode.mode(*samples), seed, cap)?;
            Outcome { verdicts: Vec::new(), data: delta_json(pair, &g, &e), tables: Vec::new() }
        }
        TaskKind::MetricLemmas { radius, c_entry, quasi_radius, delta } => {
            let r = verify_metric_lemmas(pair, *radius, *c_entry, *quasi_radius, *delta, cap)?;
            let g = build_window(pair, SpaceSpec::cusped(*radius), *radius, cap)?;
            Outcome {
                verdicts: vec![
                    (r.comparison.name, Verdict::of(r.comparison.pass)),
                    (r.horoball_entry.name, Verdict::of(r.horoball_entry.pass)),
                    (r.quasidensity.name, Verdict::of(r.quasidensity.pass)),
                ],
                data: json!({
                    "radius": r.radius,
                    "window_vertices": r.window_vertices,
                    "delta": r.delta,
                    "checks": [
                        lemma_json(pair, &g, &r.comparison),
                        lemma_json(pair, &g, &r.horoball_entry),
                        lemma_json(pair, &g, &r.quasidensity),
                    ],
                }),
                tables: Vec::new(),
            }
        }
        TaskKind::Injectivity { radius, max_radius } => {
            let fs = ctx.fillings(at)?;
            let o = pair.group();
            let rows = fs
                .par_iter()
                .map(|f| -> CliResult<(u32, usize, usize, bool)> {
                    let r = match (radius, f.n) {
                        (Some(r), _) => *r,
                        (None, Some(n)) => (n.saturating_sub(1) / 2).min(u64::from(*max_radius)) as u32,
                        (None, None) => {
                            return Err(CliError::schema(format!("{at}.radius"), "needed for listed fillings"))
                        }
                    };
                    let filling = pair.fill(&f.spec)?;
                    let ball = o.enumerate_ball(r, cap)?;
                    let images: BTreeSet<GroupElement> = ball.elements.iter().map(|g| filling.project(o, g)).collect();
                    let mut peripheral_ok = true;
                    for p in pair.peripherals() {
                        let fac = &o.factors()[p.factor];
                        let b = fac
                            .ball(u64::from(r), cap)
                            .ok_or(CliError::Budget(format!("peripheral ball above {cap} elements")))?;
                        let img: BTreeSet<GroupElement> =
                            b.iter().map(|(x, _)| filling.project(o, &o.syllable(p.factor, x))).collect();
                        peripheral_ok &= img.len() == b.len();
                    }
                    Ok((r, ball.len(), images.len(), peripheral_ok))
                })
                .collect::<CliResult<Vec<_>>>()?;
            let mut t = Table::new("injectivity", &["filling", "radius", "ball", "images", "peripheral_injective"]);
            let mut all = true;
            for (f, (r, b, i, p)) in fs.iter().zip(&rows) {
                all &= b == i && *p;
                t.push(vec![json!(f.label), json!(r), json!(b), json!(i), json!(p)]);
            }
            Outcome { verdicts: vec![("filling-injective-on-ball", Verdict::of(all))], data: Value::Null, tables: vec![t] }
        }
        TaskKind::LocalIsometry { r } => {
            let fs = ctx.fillings(at)?;
            let reports = fs
                .par_iter()
                .map(|f| -> CliResult<_> {
                    let filling = pair.fill(&f.spec)?;
                    Ok(check_local_isometry(pair, &filling, *r, cap)?)
                })
                .collect::<CliResult<Vec<_>>>()?;
            let mut t = Table::new(
                "local_isometry",
                &["filling", "r", "verdict", "method", "ball_size", "pairs_checked", "witnesses"],
            );
            let mut data = Vec::new();
            for (f, rep) in fs.iter().zip(&reports) {
                t.push(vec![
                    json!(f.label),
                    json!(rep.r),
                    json!(Verdict::of(rep.pass)),
                    json!(rep.method),
                    json!(rep.ball_size),
                    json!(rep.pairs_checked),
                    json!(rep.witnesses.len()),
                ]);
                data.push(json!({
                    "filling": f.label,
                    "injective": rep.injective,
                    "image_is_ball": rep.image_is_ball,
                    "witnesses": rep.witnesses.iter().map(|w| json!({
                        "x": w.x, "y": w.y,
                        "source_distance": w.source_distance,
                        "target_distance": w.target_distance,
                    })).collect::<Vec<_>>(),
                }));
            }
            Outcome {
                verdicts: vec![("local-isometry", Verdict::of(reports.iter().all(|r| r.pass)))],
                data: Value::Array(data),
                tables: vec![t],
            }
        }
        TaskKind::Lift { radius, walks, geodesics, max_walk } => {
            let fs = ctx.fillings(at)?;
            let rows = fs
                .par_iter()
                .enumerate()
                .map(|(i, f)| -> CliResult<(usize, usize)> {
                    let filling = pair.fill(&f.spec)?;
                    let fg = build_quotient_cusped(pair, &filling, *radius, cap)?;
                    let mut r = rng(seed.wrapping_add(i as u64));
                    let mut walks_ok = 0;
                    for k in 0..*walks {
                        let p = fg.random_target_walk(1 + k % (*max_walk).max(1), &mut r);
                        walks_ok += usize::from(lift_round_trip(&fg, &p)?);
                    }
                    let root = fg.source.root().unwrap_or(0);
                    let mut tight = 0;
                    for _ in 0..*geodesics {
                        let p = fg.random_target_geodesic(&mut r)?;
                        let lift = fg.lift_path(&p, root)?;
                        let end = lift.end().ok_or(rhfill_core::Error::EmptyPath)?;
                        tight += usize::from(
                            fg.project_path(&lift) == p && fg.source.root_distance(end) == Some(p.len() as u32),
                        );
                    }
                    Ok((walks_ok, tight))
                })
                .collect::<CliResult<Vec<_>>>()?;
            let mut t = Table::new("lift", &["filling", "walks", "walks_ok", "geodesics", "geodesics_tight"]);
            for (f, (w, g)) in fs.iter().zip(&rows) {
                t.push(vec![json!(f.label), json!(walks), json!(w), json!(geodesics), json!(g)]);
            }
            Outcome {
                verdicts: vec![
                    ("lift-projects-back", Verdict::of(rows.iter().all(|r| r.0 == *walks))),
                    ("lifted-geodesics-tight", Verdict::of(rows.iter().all(|r| r.1 == *geodesics))),
                ],
                data: Value::Null,
                tables: vec![t],
            }
        }
        TaskKind::Descent { radius, k, delta, max_depth, paths } => {
            let fs = ctx.fillings(at)?;
            let reports = fs
                .par_iter()
                .map(|f| -> CliResult<_> {
                    let filling = pair.fill(&f.spec)?;
                    let fg = build_quotient_cusped(pair, &filling, *radius, cap)?;
                    Ok(check_descent_quasigeodesic(&fg, *k, *delta, *max_depth, *paths, seed)?)
                })
                .collect::<CliResult<Vec<_>>>()?;
            let mut t = Table::new("descent", &["filling", "verdict", "paths", "sub_pairs", "witnesses"]);
            for (f, r) in fs.iter().zip(&reports) {
                t.push(vec![
                    json!(f.label),
                    json!(Verdict::of(r.pass)),
                    json!(r.paths),
                    json!(r.sub_pairs),
                    json!(r.witnesses.len()),
                ]);
            }
            let all = reports.iter().all(|r| r.pass && r.paths == *paths);
            Outcome { verdicts: vec![("descent-quasigeodesic", Verdict::of(all))], data: Value::Null, tables: vec![t] }
        }
        TaskKind::UniformDelta { radius, slack } => {
            let fs = ctx.fillings(at)?;
            // the unfilled pair goes first so every window is built in parallel
            let pairs: Vec<RelHypPair> = std::iter::once(Ok(pair.clone()))
                .chain(fs.iter().map(|f| pair.fill(&f.spec).map(|q| q.quotient().clone())))
                .collect::<rhfill_core::Result<_>>()?;
            let deltas = pairs
                .par_iter()
                .map(|p| -> CliResult<f64> {
                    let w = build_window(p, SpaceSpec::cusped(*radius), *radius, cap)?;
                    Ok(estimate_delta(&w, DeltaMode::FourPointExhaustive, 0, cap)?.delta4.unwrap_or(0.0))
                })
                .collect::<CliResult<Vec<_>>>()?;
            let unfilled = deltas[0];
            let mut t = Table::new("delta", &["filling", "delta"]);
            t.push(vec![json!("unfilled"), json!(unfilled)]);
            for (f, d) in fs.iter().zip(&deltas[1..]) {
                t.push(vec![json!(f.label), json!(d)]);
            }
            let bounded = deltas[1..].iter().all(|&d| d <= unfilled + slack);
            Outcome {
                verdicts: vec![("uniform-hyperbolicity", Verdict::of(bounded))],
                data: json!({ "radius": radius, "slack": slack, "unfilled": unfilled }),
                tables: vec![t],
            }
        }
        TaskKind::Automaton {} => {
            let g = ctx.automaton(at)?;
            let r = validate_automaton(g, pair)?;
            let check = |c: &rhfill_core::egf::PropertyCheck| json!({ "verdict": Verdict::of(c.pass), "witnesses": c.witnesses });
            Outcome {
                verdicts: vec![
                    (r.outgoing_edge.name, Verdict::of(r.outgoing_edge.pass)),
                    (r.parabolic_vertex.name, Verdict::of(r.parabolic_vertex.pass)),
                ],
                data: json!({
                    "vertices": g.len(),
                    "edges": g.edges.len(),
                    "checks": [check(&r.outgoing_edge), check(&r.parabolic_vertex)],
                }),
                tables: Vec::new(),
            }
        }
        TaskKind::Compatibility { depth } => {
            let (rep, g, sys) = (ctx.rep(at)?, ctx.automaton(at)?, ctx.sets(at)?);
            let r = check_compatibility(rep, pair, g, sys, *depth, seed)?;
            let o = pair.group();
            Outcome {
                verdicts: vec![("compatible-set-system", r.outcome.into())],
                data: json!({
                    "epsilon": r.epsilon,
                    "depth": r.depth,
                    "edges": r.edges,
                    "elements": r.elements,
                    "truncated": r.truncated,
                    "min_margin": r.min_margin,
                    "witnesses": r.witnesses.iter().map(|w| json!({
                        "edge": [g.vertices[w.edge.0].name.clone(), g.vertices[w.edge.1].name.clone()],
                        "element": o.render(&w.element),
                        "ball": w.ball,
                        "verdict": Verdict::from(w.outcome),
                        "margin": w.margin,
                    })).collect::<Vec<_>>(),
                }),
                tables: Vec::new(),
            }
        }
        TaskKind::Contraction { paths, length, cutoff, stride } => {
            let (rep, g, sys) = (ctx.rep(at)?, ctx.automaton(at)?, ctx.sets(at)?);
            let stream = enumerate_gpaths(g, pair, *length, *cutoff)?;
            let chosen: Vec<GPath> = stream.step_by((*stride).max(1)).take(*paths).collect();
            if chosen.len() < *paths {
                return Err(CliError::schema(
                    format!("{at}.paths"),
                    format!("only {} paths at stride {stride}", chosen.len()),
                ));
            }
            let reports = chosen
                .par_iter()
                .map(|p| nested_diameters(rep, pair, g, p, sys, seed))
                .collect::<rhfill_core::Result<Vec<_>>>()?;
            let o = pair.group();
            let mut t = Table::new("contraction", &["path", "rate", "monotone", "max_repetition", "last_diameter"]);
            for (i, (p, r)) in chosen.iter().zip(&reports).enumerate() {
                let word: Vec<String> =
                    p.steps.iter().map(|(v, a)| format!("{}:{}", g.vertices[*v].name, o.render(a))).collect();
                t.push(vec![
                    json!(format!("{i}: {}", word.join(" "))),
                    json!(r.rate),
                    json!(r.monotone),
                    json!(r.max_repetition),
                    json!(r.diameters.last()),
                ]);
            }
            let contracting = reports.iter().all(|r| r.contracting && r.monotone);
            let backtracking = reports.iter().all(|r| r.backtracking_ok());
            let rate = reports.iter().map(|r| r.rate).fold(0.0, f64::max);
            Outcome {
                verdicts: vec![
                    ("nested-contraction", Verdict::of(contracting)),
                    ("bounded-backtracking", Verdict::of(backtracking)),
                ],
                data: json!({ "paths": reports.len(), "worst_rate": rate }),
                tables: vec![t],
            }
        }
        TaskKind::Tracking { steps, radius } => {
            let g = ctx.automaton(at)?;
            let ids: Vec<&str> = g.vertices.iter().map(|v| v.name.as_str()).collect();
            let steps = steps
                .iter()
                .enumerate()
                .map(|(i, (v, w))| {
                    let f = format!("{at}.steps[{i}]");
                    let vi = ids
                        .iter()
                        .position(|x| x == v)
                        .ok_or_else(|| CliError::schema(&f, format!("unknown vertex `{v}`")))?;
                    Ok((vi, crate::formats::parse_word(pair.group(), w, &f)?))
                })
                .collect::<CliResult<Vec<_>>>()?;
            let path = GPath::new(g, steps).map_err(|e| CliError::schema(format!("{at}.steps"), e))?;
            let r = gpath_tracking_check(pair, &path, *radius, cap)?;
            let ok = r.certified && r.depth_ok != Some(false);
            Outcome {
                verdicts: vec![("partial-products-track", Verdict::of(ok))],
                data: json!({
                    "radius": r.radius,
                    "tracking": r.tracking,
                    "certified": r.certified,
                    "geodesic_length": r.geodesic_length,
                    "max_depth": r.max_depth,
                    "jump": r.jump,
                    "depth_ok": r.depth_ok,
                }),
                tables: Vec::new(),
            }
        }
        TaskKind::Edf { depth, queries } => {
            let fam = ctx.family(at)?;
            let queries = queries.clone().unwrap_or_else(|| vec![default_edf_query()]);
            let mut t = Table::new(
                "edf",
                &["query", "n", "order", "exhaustive", "edf", "edf_margin", "stability", "stability_margin"],
            );
            let (mut edf, mut stab) = (Vec::new(), Vec::new());
            let o = fam.pair.group();
            let mut witnesses = Vec::new();
            for (qi, q) in queries.iter().enumerate() {
                let query = resolve_edf_query(&fam.pair, q, &format!("{at}.queries[{qi}]"))?;
                let r = edf_condition_check(fam, &query, *depth, seed)?;
                for row in std::iter::once(&r.base).chain(&r.rows) {
                    t.push(vec![
                        json!(qi),
                        row.n.map_or(json!("base"), |n| json!(n)),
                        json!(row.order),
                        json!(row.exhaustive),
                        json!(Verdict::from(row.edf)),
                        json!(row.edf_margin),
                        json!(Verdict::from(row.stability)),
                        json!(row.stability_margin),
                    ]);
                }
                for row in &r.rows {
                    edf.push(Verdict::from(row.edf));
                    stab.push(Verdict::from(row.stability));
                    witnesses.push(json!({
                        "query": qi,
                        "n": row.n,
                        "edf_witness": row.edf_witness.as_ref().map(|g| o.render(g)),
                        "stability_witness": row.stability_witness.as_ref().map(|g| o.render(g)),
                    }));
                }
            }
            Outcome {
                verdicts: vec![("extended-dehn-filling", worst(edf)), ("peripheral-stability", worst(stab))],
                data: json!({ "depth": depth, "witnesses": witnesses }),
                tables: vec![t],
            }
        }
        TaskKind::Chabauty { radius, depth } => {
            let fam = ctx.family(at)?;
            let r = chabauty_check(fam, *radius, *depth, cap)?;
            let np = fam.pair.peripherals().len();
            let mut cols = vec!["n".to_string(), "full_a".into(), "full_b".into()];
            for p in 0..np {
                cols.push(format!("peripheral{p}_a"));
                cols.push(format!("peripheral{p}_b"));
            }
            cols.push("algebraic".into());
            let mut t = Table { name: "chabauty".into(), columns: cols, rows: Vec::new() };
            for row in &r.rows {
                let mut cells = vec![json!(row.n), json!(row.full.a_side), json!(row.full.b_side)];
                for s in &row.peripheral {
                    cells.push(json!(s.a_side));
                    cells.push(json!(s.b_side));
                }
                cells.push(json!(row.algebraic));
                t.push(cells);
            }
            let full: Vec<f64> = r.rows.iter().map(|x| x.full.max()).collect();
            let mut ok = strictly_decreasing(&full);
            for p in 0..np {
                let side: Vec<f64> = r.rows.iter().map(|x| x.peripheral[p].max()).collect();
                ok &= strictly_decreasing(&side);
            }
            Outcome {
                verdicts: vec![("chabauty-convergence", Verdict::of(ok))],
                data: json!({ "radius": r.radius, "depth": r.depth }),
                tables: vec![t],
            }
        }
        TaskKind::LimitSet { depth, tolerance, indices, cloud } => {
            let fam = ctx.family(at)?;
            let dim = fam.base.dim();
            let ty = match indices {
                None => ParabolicType::lines(dim),
                Some(ix) => ParabolicType::new(dim, ix).map_err(|e| CliError::schema(format!("{at}.indices"), e))?,
            };
            let r = limit_set_convergence(fam, *depth, &ty, cap)?;
            let mut t = Table::new("hausdorff", &["n", "d_hausdorff", "depth"]);
            for row in &r.rows {
                t.push(vec![json!(row.n), json!(row.d_hausdorff), json!(depth)]);
            }
            let last_ok = r.rows.last().and_then(|x| x.d_hausdorff).is_some_and(|d| d < *tolerance);
            let ok = r.decreasing && last_ok && r.rows.iter().all(|x| x.d_hausdorff.is_some());
            let mut tables = vec![t];
            if *cloud {
                let flags = q_limit_set(&fam.base, fam.pair.group(), *depth, &ty, cap)?;
                tables.push(cloud_table(&flags)?);
            }
            Outcome {
                verdicts: vec![("limit-set-convergence", Verdict::of(ok))],
                data: json!({
                    "depth": r.depth,
                    "base_size": r.base_size,
                    "tolerance": tolerance,
                    "decreasing": r.decreasing,
                    "cloud_sizes": r.rows.iter().map(|x| x.cloud_size).collect::<Vec<_>>(),
                }),
                tables,
            }
        }
    })
}

fn delta_json(pair: &RelHypPair, g: &CuspedGraph, e: &rhfill_core::graph::HyperbolicityEstimate) -> Value {
    json!({
        "delta4": e.delta4,
        "delta_thin": e.delta_thin,
        "samples": e.samples,
        "core_size": e.core_size,
        "witness": e.witness.iter().map(|&v| describe(pair, g.key(v))).collect::<Vec<_>>(),
    })
}

/// Angles for lines in the plane, projector entries of each subspace otherwise.
pub fn cloud_table(flags: &[Flag]) -> CliResult<Table> {
    let Some(first) = flags.first() else { return Ok(Table::new("cloud", &["angle"])) };
    if first.dim() == 2 {
        let mut t = Table::new("cloud", &["angle"]);
        for f in flags {
            t.push(vec![json!(f.angle())]);
        }
        return Ok(t);
    }
    let ty = first.parabolic_type().clone();
    let d = ty.dim();
    let mut cols = Vec::new();
    for idx in ty.indices() {
        for i in 0..d {
            for j in 0..d {
                cols.push(format!("p{idx}_{i}{j}"));
            }
        }
    }
    let mut t = Table { name: "cloud".into(), columns: cols, rows: Vec::new() };
    for f in flags {
        let mut row = Vec::new();
        for &idx in ty.indices() {
            let p = f.projector(idx)?;
            for i in 0..d {
                for j in 0..d {
                    row.push(json!(p[(i, j)]));
                }
            }
        }
        t.push(row);
    }
    Ok(t)
}

/// The core's delta estimate for a graph read from a dump.
pub fn graph_delta(g: &CuspedGraph, mode: DeltaModeDesc, samples: usize, seed: u64, cap: usize) -> CliResult<Value> {
    let e = estimate_delta(g, mode.mode(samples), seed, cap)?;
    Ok(json!({
        "delta4": e.delta4,
        "delta_thin": e.delta_thin,
        "samples": e.samples,
        "core_size": e.core_size,
        "witness": e.witness,
    }))
}
