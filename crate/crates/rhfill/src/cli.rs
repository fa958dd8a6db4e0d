//! Command line verbs. Each verb other than `run` and `delta --graph` is a
//! one-task scenario built from its flags.

use std::ffi::OsString;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use serde_json::json;

use crate::error::{CliError, CliResult};
use crate::formats::{read_graph_dump, AutomatonDesc, Builtin, KernelsDesc, PairDesc, RepresentationDesc, SetSystemDesc};
use crate::report::{Report, TaskReport, Verdict};
use crate::scenario::{
    graph_delta, parse_scenario, run_file, run_scenario, write_outputs, Budgets, DeltaModeDesc, FamilyDesc,
    FillingsDesc, NamedKernels, Outputs, Scenario, Space, TaskDesc, TaskKind,
};

#[derive(Debug, Parser)]
#[command(name = "rhfill", version, about = "Cusped spaces, Dehn fillings and flag-manifold automata")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Report JSON path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Directory for one CSV per table.
    #[arg(long)]
    pub tables: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Element and vertex budget.
    #[arg(long, default_value_t = rhfill_core::group::DEFAULT_BALL_CAP)]
    pub budget: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a ball window of a Cayley graph, coned-off graph or cusped space.
    Cusped {
        /// Pair descriptor JSON file, or `sanov`.
        #[arg(long, default_value = "sanov")]
        pair: String,
        #[arg(long)]
        radius: u32,
        #[arg(long, value_enum, default_value = "cusped")]
        space: SpaceArg,
        #[arg(long)]
        max_depth: Option<u32>,
        #[arg(long, default_value_t = 2)]
        cone_cutoff: u64,
        /// Write the window as a text graph dump.
        #[arg(long)]
        dump: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Estimate δ of a dumped graph or of a fresh window.
    Delta {
        #[arg(long, conflicts_with_all = ["pair", "radius"])]
        graph: Option<PathBuf>,
        #[arg(long)]
        pair: Option<String>,
        #[arg(long)]
        radius: Option<u32>,
        #[arg(long, value_enum, default_value = "exhaustive")]
        mode: ModeArg,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Fill a pair along kernels and run checks on the quotient.
    Fill {
        #[arg(long, default_value = "sanov")]
        pair: String,
        /// Kernel JSON such as `{"0":["a^50"],"1":["b^50"]}`, or `@file`.
        #[arg(long)]
        kernels: String,
        /// Window radius for descent, lifts and δ.
        #[arg(long, default_value_t = 6)]
        radius: u32,
        /// Ball radius for the local isometry check.
        #[arg(long, default_value_t = 5)]
        r: u32,
        /// Comma list of local-isometry, injectivity, lift, descent, uniform-delta.
        #[arg(long, value_delimiter = ',', default_value = "local-isometry")]
        checks: Vec<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Lift seeded paths of a filled window and project them back.
    Lift {
        #[arg(long, default_value = "sanov")]
        pair: String,
        #[arg(long)]
        kernels: String,
        #[arg(long, default_value_t = 6)]
        radius: u32,
        #[arg(long, default_value_t = 1000)]
        walks: usize,
        #[arg(long, default_value_t = 1000)]
        geodesics: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Validate an automaton; with a representation and set system, check compatibility too.
    Automaton {
        #[arg(long, default_value = "sanov")]
        pair: String,
        /// Automaton JSON file, or `sanov`.
        #[arg(long, default_value = "sanov")]
        automaton: String,
        /// Representation JSON file, or `sanov`.
        #[arg(long)]
        representation: Option<String>,
        /// Set system JSON file, or `sanov`.
        #[arg(long)]
        sets: Option<String>,
        #[arg(long, default_value_t = 12)]
        depth: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Extended Dehn filling condition against peripheral stability.
    Edf {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long, default_value_t = 64)]
        depth: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Window Chabauty distances between each member and the base.
    Chabauty {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long, default_value_t = 10.0)]
        radius: f64,
        #[arg(long, default_value_t = 8)]
        depth: u32,
        #[command(flatten)]
        common: Common,
    },
    /// Hausdorff distances between limit clouds of each member and the base.
    Limitset {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long, default_value_t = 12)]
        depth: u32,
        #[arg(long, default_value_t = 0.05)]
        tolerance: f64,
        /// Also tabulate the base limit cloud.
        #[arg(long)]
        cloud: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Run a scenario file.
    Run {
        scenario: PathBuf,
        /// Report JSON path, overriding the scenario's.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        tables: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct FamilyArgs {
    /// Orders of the elliptic family over the built-in pair.
    #[arg(long, value_delimiter = ',', conflicts_with = "family")]
    pub n: Vec<u64>,
    /// JSON file with `pair`, `representation` and `family`.
    #[arg(long)]
    pub family: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum SpaceArg {
    Cayley,
    Coned,
    Cusped,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum ModeArg {
    Exhaustive,
    Sampled,
    Thin,
}

impl From<SpaceArg> for Space {
    fn from(s: SpaceArg) -> Self {
        match s {
            SpaceArg::Cayley => Space::Cayley,
            SpaceArg::Coned => Space::Coned,
            SpaceArg::Cusped => Space::Cusped,
        }
    }
}

impl From<ModeArg> for DeltaModeDesc {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Exhaustive => DeltaModeDesc::Exhaustive,
            ModeArg::Sampled => DeltaModeDesc::Sampled,
            ModeArg::Thin => DeltaModeDesc::Thin,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FamilyFile {
    #[serde(default = "sanov")]
    pair: Builtin<PairDesc>,
    #[serde(default)]
    representation: Option<Builtin<RepresentationDesc>>,
    family: FamilyDesc,
}

fn sanov<T>() -> Builtin<T> {
    Builtin::Named(crate::formats::BUILTIN.into())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de)
        .map_err(|e| CliError::schema(format!("{}:{}", path.display(), e.path()), e.into_inner()))
}

/// `sanov` or a JSON file.
fn builtin_or_file<T: serde::de::DeserializeOwned>(arg: &str) -> CliResult<Builtin<T>> {
    if arg == crate::formats::BUILTIN {
        Ok(sanov())
    } else {
        Ok(Builtin::Inline(read_json(Path::new(arg))?))
    }
}

/// Inline JSON, or `@file`.
fn kernels_arg(arg: &str) -> CliResult<KernelsDesc> {
    let text = match arg.strip_prefix('@') {
        Some(p) => std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?,
        None => arg.to_string(),
    };
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de).map_err(|e| CliError::schema(format!("kernels.{}", e.path()), e.into_inner()))
}

fn scenario(name: &str, pair: Builtin<PairDesc>, seed: u64, budget: usize, tasks: Vec<TaskKind>) -> Scenario {
    Scenario {
        name: name.into(),
        seed,
        pair,
        fillings: None,
        representation: None,
        family: None,
        automaton: None,
        sets: None,
        budgets: Budgets { elements: budget, ..Budgets::default() },
        outputs: Outputs::default(),
        tasks: tasks.into_iter().map(|kind| TaskDesc { name: None, assert: true, expect: Default::default(), kind }).collect(),
    }
}

fn with_family(mut s: Scenario, f: &FamilyArgs) -> CliResult<Scenario> {
    match &f.family {
        Some(path) => {
            let ff: FamilyFile = read_json(path)?;
            s.pair = ff.pair;
            s.representation = ff.representation;
            s.family = Some(ff.family);
        }
        None if f.n.is_empty() => return Err(CliError::Usage("give --n or --family".into())),
        None => s.family = Some(FamilyDesc::Elliptic { n: f.n.clone() }),
    }
    Ok(s)
}

/// Caps the global pool at `RHFILL_THREADS`.
pub fn configure_threads() -> CliResult<()> {
    let Ok(v) = std::env::var("RHFILL_THREADS") else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("RHFILL_THREADS must be a positive integer, got `{v}`")))?;
    // a pool that is already built keeps its size
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn emit(report: &Report, common: &Common) -> CliResult<()> {
    match &common.out {
        Some(p) => write_outputs(report, Some(p), common.tables.as_deref())?,
        None => {
            write_outputs(report, None, common.tables.as_deref())?;
            std::io::stdout().write_all(report.to_json().as_bytes()).map_err(|e| CliError::io("<stdout>", e))?;
        }
    }
    Ok(())
}

fn summarize(report: &Report) {
    for t in &report.tasks {
        let props: Vec<String> = t.verdicts.iter().map(|(k, v)| format!("{k}={}", v.verdict.name())).collect();
        eprintln!("{}: {} {}", t.name, t.status.name(), props.join(" "));
    }
}

fn finish(report: &Report) -> CliResult<()> {
    summarize(report);
    let failures = report.failures();
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::TaskFailed(failures.join("; ")))
    }
}

fn run_inline(s: Scenario, common: &Common) -> CliResult<()> {
    let report = run_scenario(&s, Path::new("."))?;
    emit(&report, common)?;
    finish(&report)
}

pub fn run(cli: Cli) -> CliResult<()> {
    configure_threads()?;
    match cli.command {
        Command::Run { scenario, out, tables } => {
            let report = run_file(&scenario, out.as_deref(), tables.as_deref())?;
            let has_out = out.is_some() || parse_scenario_outputs(&scenario)?;
            if !has_out {
                std::io::stdout().write_all(report.to_json().as_bytes()).map_err(|e| CliError::io("<stdout>", e))?;
            }
            finish(&report)
        }
        Command::Cusped { pair, radius, space, max_depth, cone_cutoff, dump, common } => {
            let task = TaskKind::Cusped {
                radius,
                space: space.into(),
                max_depth,
                cone_cutoff,
                dump: dump.map(|p| p.to_string_lossy().into_owned()),
            };
            run_inline(scenario("cusped", builtin_or_file(&pair)?, common.seed, common.budget, vec![task]), &common)
        }
        Command::Delta { graph: Some(path), mode, samples, common, .. } => {
            let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
            let g = read_graph_dump(&text, &path.to_string_lossy())?;
            let data = graph_delta(&g, mode.into(), samples, common.seed, common.budget)?;
            let task = TaskReport {
                task: "delta".into(),
                name: "00-delta".into(),
                status: Verdict::Pass,
                verdicts: Default::default(),
                data: json!({ "graph": path.to_string_lossy(), "vertices": g.len(), "estimate": data }),
                tables: Vec::new(),
            };
            let report = Report { scenario: "delta".into(), seed: common.seed, status: Verdict::Pass, tasks: vec![task] };
            emit(&report, &common)?;
            finish(&report)
        }
        Command::Delta { graph: None, pair, radius, mode, samples, common } => {
            let radius = radius.ok_or_else(|| CliError::Usage("give --graph, or --radius with an optional --pair".into()))?;
            let pair = builtin_or_file(pair.as_deref().unwrap_or(crate::formats::BUILTIN))?;
            let task = TaskKind::Delta { radius, space: Space::Cusped, mode: mode.into(), samples };
            run_inline(scenario("delta", pair, common.seed, common.budget, vec![task]), &common)
        }
        Command::Fill { pair, kernels, radius, r, checks, common } => {
            let mut tasks = Vec::new();
            for c in &checks {
                tasks.push(match c.as_str() {
                    "local-isometry" => TaskKind::LocalIsometry { r },
                    "injectivity" => TaskKind::Injectivity { radius: Some(r), max_radius: r },
                    "lift" => TaskKind::Lift { radius, walks: 1000, geodesics: 1000, max_walk: 6 },
                    "descent" => TaskKind::Descent { radius, k: 1.0, delta: 1.0, max_depth: 3, paths: 200 },
                    "uniform-delta" => TaskKind::UniformDelta { radius, slack: 0.0 },
                    other => return Err(CliError::Usage(format!("unknown check `{other}`"))),
                });
            }
            let mut s = scenario("fill", builtin_or_file(&pair)?, common.seed, common.budget, tasks);
            s.fillings = Some(FillingsDesc::List(vec![NamedKernels { label: "kernels".into(), kernels: kernels_arg(&kernels)? }]));
            run_inline(s, &common)
        }
        Command::Lift { pair, kernels, radius, walks, geodesics, common } => {
            let task = TaskKind::Lift { radius, walks, geodesics, max_walk: 6 };
            let mut s = scenario("lift", builtin_or_file(&pair)?, common.seed, common.budget, vec![task]);
            s.fillings = Some(FillingsDesc::List(vec![NamedKernels { label: "kernels".into(), kernels: kernels_arg(&kernels)? }]));
            run_inline(s, &common)
        }
        Command::Automaton { pair, automaton, representation, sets, depth, common } => {
            let mut tasks = vec![TaskKind::Automaton {}];
            if representation.is_some() && sets.is_some() {
                tasks.push(TaskKind::Compatibility { depth });
            }
            let mut s = scenario("automaton", builtin_or_file(&pair)?, common.seed, common.budget, tasks);
            s.automaton = Some(builtin_or_file::<AutomatonDesc>(&automaton)?);
            s.representation = representation.as_deref().map(builtin_or_file).transpose()?;
            s.sets = sets.as_deref().map(builtin_or_file::<SetSystemDesc>).transpose()?;
            run_inline(s, &common)
        }
        Command::Edf { family, depth, common } => {
            let s = scenario("edf", sanov(), common.seed, common.budget, vec![TaskKind::Edf { depth, queries: None }]);
            run_inline(with_family(s, &family)?, &common)
        }
        Command::Chabauty { family, radius, depth, common } => {
            let s = scenario("chabauty", sanov(), common.seed, common.budget, vec![TaskKind::Chabauty { radius, depth }]);
            run_inline(with_family(s, &family)?, &common)
        }
        Command::Limitset { family, depth, tolerance, cloud, common } => {
            let task = TaskKind::LimitSet { depth, tolerance, indices: None, cloud };
            let s = scenario("limitset", sanov(), common.seed, common.budget, vec![task]);
            run_inline(with_family(s, &family)?, &common)
        }
    }
}

/// Whether the scenario names its own report path.
fn parse_scenario_outputs(path: &Path) -> CliResult<bool> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    Ok(parse_scenario(&text)?.outputs.report.is_some())
}

/// Parses arguments, runs, and maps the result to an exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("rhfill: {e}");
            e.exit_code()
        }
    }
}
