use std::path::{Path, PathBuf};

use rhfill::formats::{
    automaton_to_desc, read_graph_dump, representation_to_desc, resolve_automaton, resolve_kernels, resolve_pair,
    resolve_representation, resolve_set_system, write_graph_dump, Builtin, KernelEntry, KernelsDesc,
};
use rhfill::{emit_plot_data, parse_scenario, run_file, run_scenario, CliError, Report, Table, Verdict};
use rhfill_core::egf::{elliptic_family, sanov_automaton, sanov_pair, sanov_representation};
use rhfill_core::flag::ParabolicType;
use rhfill_core::graph::{build_cusped_ball, estimate_delta, DeltaMode};
use rhfill_core::group::DEFAULT_BALL_CAP;
use sha2::{Digest, Sha256};

fn bundled() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/sanov-filling.json")
}

fn table<'a>(r: &'a Report, name: &str) -> &'a Table {
    r.tables().map(|(_, t)| t).find(|t| t.name == name).unwrap()
}

#[test]
fn bundled_scenario_runs_the_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let r = run_file(&bundled(), Some(&dir.path().join("r.json")), Some(&dir.path().join("t"))).unwrap();
    assert_eq!(r.status, Verdict::Pass, "{:?}", r.failures());

    let delta = table(&r, "delta");
    assert_eq!(delta.columns, ["filling", "delta"]);
    assert_eq!(delta.rows.len(), 4);

    let edf = r.tasks.iter().find(|t| t.task == "edf").unwrap();
    assert_eq!(edf.verdicts["extended-dehn-filling"].verdict, Verdict::Pass);
    assert_eq!(edf.verdicts["peripheral-stability"].verdict, Verdict::Fail);
    assert_eq!(edf.verdicts["peripheral-stability"].expected, Verdict::Fail);

    // the Hausdorff table is the core's convergence report, row for row
    let h = table(&r, "hausdorff");
    assert_eq!(h.columns, ["n", "d_hausdorff", "depth"]);
    let fam = elliptic_family(&[10, 20, 30, 40, 60]).unwrap();
    let direct = rhfill_core::egf::limit_set_convergence(&fam, 12, &ParabolicType::lines(2), 1 << 22).unwrap();
    assert_eq!(h.rows.len(), direct.rows.len());
    for (row, d) in h.rows.iter().zip(&direct.rows) {
        assert_eq!(row[0], d.n);
        assert_eq!(row[1].as_f64(), d.d_hausdorff);
        assert_eq!(row[2], 12);
    }

    let csv = std::fs::read_to_string(dir.path().join("t/09-limit-set.hausdorff.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("n,d_hausdorff,depth"));
    assert_eq!(csv.lines().count(), 6);
    let csv = std::fs::read_to_string(dir.path().join("t/05-uniform-delta.delta.csv")).unwrap();
    assert!(csv.lines().all(|l| l.split(',').count() == 2));
}

fn digest(dir: &Path) -> Vec<u8> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir.join("t")).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    files.insert(0, dir.join("r.json"));
    let mut h = Sha256::new();
    for f in files {
        h.update(f.file_name().unwrap().to_string_lossy().as_bytes());
        h.update(std::fs::read(&f).unwrap());
    }
    h.finalize().to_vec()
}

#[test]
fn reruns_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        run_file(&bundled(), Some(&d.path().join("r.json")), Some(&d.path().join("t"))).unwrap();
    }
    assert_eq!(digest(a.path()), digest(b.path()));
}

#[test]
fn plot_data_tables() {
    let s = parse_scenario(r#"{"pair": "sanov", "tasks": []}"#).unwrap();
    let r = run_scenario(&s, Path::new(".")).unwrap();
    assert!(r.tasks.is_empty());
    assert!(matches!(emit_plot_data(&r, None), Err(CliError::NoTabularData)));

    let s = parse_scenario(
        r#"{"pair": "sanov", "fillings": [], "tasks": [{"task": "uniform-delta", "radius": 4}, {"task": "injectivity", "radius": 2}]}"#,
    )
    .unwrap();
    let r = run_scenario(&s, Path::new(".")).unwrap();
    assert_eq!(emit_plot_data(&r, Some("injectivity")).unwrap(), "filling,radius,ball,images,peripheral_injective\n");
    assert_eq!(emit_plot_data(&r, Some("delta")).unwrap(), "filling,delta\nunfilled,1.0\n");
    assert!(matches!(emit_plot_data(&r, None), Err(CliError::Usage(_))));
}

#[test]
fn expectations_and_names() {
    let s = parse_scenario(
        r#"{"pair": "sanov", "fillings": {"powers": [3]},
            "tasks": [{"task": "local-isometry", "r": 2, "expect": {"local-isometry": "fail"}},
                      {"task": "local-isometry", "r": 2, "name": "strict"},
                      {"task": "local-isometry", "r": 2, "name": "loose", "assert": false}]}"#,
    )
    .unwrap();
    let r = run_scenario(&s, Path::new(".")).unwrap();
    assert_eq!(r.tasks[0].status, Verdict::Pass);
    assert_eq!(r.tasks[1].status, Verdict::Fail);
    assert_eq!(r.tasks[2].status, Verdict::Pass);
    assert_eq!(r.failures().len(), 1);

    let s = parse_scenario(r#"{"pair": "sanov", "tasks": [{"task": "automaton", "expect": {"nonsense": "pass"}}], "automaton": "sanov"}"#)
        .unwrap();
    assert!(matches!(run_scenario(&s, Path::new(".")), Err(CliError::Schema { field, .. }) if field == "tasks[0].expect.nonsense"));
    let s = parse_scenario(r#"{"pair": "sanov", "tasks": [{"task": "automaton", "name": "x"}, {"task": "automaton", "name": "x"}], "automaton": "sanov"}"#)
        .unwrap();
    assert!(run_scenario(&s, Path::new(".")).is_err());
    let s = parse_scenario(r#"{"pair": "sanov", "tasks": [{"task": "automaton"}]}"#).unwrap();
    assert!(matches!(run_scenario(&s, Path::new(".")), Err(CliError::Schema { field, .. }) if field == "tasks[0]"));
}

#[test]
fn pair_descriptors() {
    let d = serde_json::from_str(
        r#"{"group": {"kind": "free-product", "factors": [{"kind": "free-abelian", "rank": 2}, {"kind": "finite-cyclic", "order": 5}, {"kind": "free", "rank": 1}]},
            "peripherals": [0, ["d"]]}"#,
    )
    .unwrap();
    let pair = resolve_pair(&Builtin::Inline(d), "pair").unwrap();
    assert_eq!(pair.peripherals().len(), 2);
    assert_eq!(pair.peripherals()[1].factor, 2);
    let k: KernelsDesc = serde_json::from_str(r#"{"0": [[4, 0], "b^6"], "1": ["d^7"]}"#).unwrap();
    let spec = resolve_kernels(&pair, &k, "k").unwrap();
    assert_eq!(spec[&0][0], pair.group().parse("a^4").unwrap());
    assert!(matches!(k["0"][0], KernelEntry::Vector(_)));
    let bad: KernelsDesc = serde_json::from_str(r#"{"0": [[4]]}"#).unwrap();
    assert!(matches!(resolve_kernels(&pair, &bad, "k"), Err(CliError::Schema { field, .. }) if field == "k.0[0]"));
    let bad: KernelsDesc = serde_json::from_str(r#"{"2": ["a"]}"#).unwrap();
    assert!(matches!(resolve_kernels(&pair, &bad, "k"), Err(CliError::Schema { field, .. }) if field == "k.2"));
}

#[test]
fn representations_round_trip() {
    let pair = sanov_pair();
    let rep = sanov_representation(&pair).unwrap();
    let desc = representation_to_desc(pair.group(), &rep);
    let back = resolve_representation(&pair, &Builtin::Inline(desc), "representation").unwrap();
    assert_eq!(back, rep);
    let desc = serde_json::from_str(r#"{"a": [["1", "0.1"], ["0", "1"]], "b": ["1", "0", "2.5e-1", "1"]}"#).unwrap();
    let r = resolve_representation(&pair, &Builtin::Inline(desc), "representation").unwrap();
    assert!((r.letter_matrices()[1].unimodular()[(1, 0)] - 0.25).abs() < 1e-15);
    let desc = serde_json::from_str(r#"{"a": ["1", "0", "0", "1"], "b": ["1", "0", "x", "1"]}"#).unwrap();
    let err = resolve_representation(&pair, &Builtin::Inline(desc), "representation").unwrap_err();
    assert!(matches!(err, CliError::Schema { field, .. } if field == "representation.b[2]"));
    let desc = serde_json::from_str(r#"{"a": ["1", "0", "0", "1"]}"#).unwrap();
    assert!(resolve_representation(&pair, &Builtin::Inline(desc), "r").is_err());
}

#[test]
fn automata_and_set_systems() {
    let pair = sanov_pair();
    let g = sanov_automaton();
    let desc = automaton_to_desc(pair.group(), &g);
    let text = serde_json::to_string(&desc).unwrap();
    assert!(text.contains(r#""kind":"coset""#));
    let back = resolve_automaton(&pair, &Builtin::Inline(serde_json::from_str(&text).unwrap()), "automaton").unwrap();
    assert_eq!(back, g);
    let bad = serde_json::from_str(r#"{"vertices": [{"id": "v", "label": {"kind": "singleton", "word": "a"}}], "edges": [["v", "w"]]}"#)
        .unwrap();
    assert!(matches!(resolve_automaton(&pair, &Builtin::Inline(bad), "automaton"),
        Err(CliError::Schema { field, .. }) if field == "automaton.edges[0]"));

    let sys = serde_json::from_str(
        r#"{"epsilon": 0.02,
            "sets": {"v_a": [{"center": {"angle": 0.0}, "radius": 0.7}], "v_b": [{"center": {"line": [0.0, 2.0]}, "radius": 0.7}]},
            "exterior": {"v_a": {"angle": 1.5707963267948966}, "v_b": {"angle": 0.0}}}"#,
    )
    .unwrap();
    let s = resolve_set_system(&g, &Builtin::Inline(sys), "sets").unwrap();
    let builtin = rhfill_core::egf::sanov_set_system();
    assert_eq!(s.epsilon, builtin.epsilon);
    for (x, y) in s.sets.iter().zip(&builtin.sets) {
        assert!(rhfill_core::flag::flag_distance(&x[0].center, &y[0].center).unwrap() < 1e-15);
    }
}

#[test]
fn graph_dump_round_trip() {
    let pair = sanov_pair();
    let g = build_cusped_ball(&pair, 4, DEFAULT_BALL_CAP).unwrap();
    let text = write_graph_dump(Some(pair.group()), &g);
    assert!(text.lines().any(|l| l.starts_with("V ") && l.ends_with(" a^2")));
    let back = read_graph_dump(&text, "x").unwrap();
    assert_eq!(back.len(), g.len());
    assert_eq!(back.edge_count(), g.edge_count());
    assert_eq!(back.root(), g.root());
    for v in 0..g.len() as u32 {
        assert_eq!(back.depth(v), g.depth(v));
        assert_eq!(back.root_distance(v), g.root_distance(v));
    }
    let a = estimate_delta(&g, DeltaMode::FourPointExhaustive, 0, DEFAULT_BALL_CAP).unwrap();
    let b = estimate_delta(&back, DeltaMode::FourPointExhaustive, 0, DEFAULT_BALL_CAP).unwrap();
    assert_eq!(a.delta4, b.delta4);
    assert!(matches!(read_graph_dump("V 0 0 - 1\nE 0 1 cayley\n", "x"), Err(CliError::Schema { .. })));
    assert!(matches!(read_graph_dump("V 0 0 - 1\nQ\n", "g"), Err(CliError::Schema { field, .. }) if field == "g:2"));
}
