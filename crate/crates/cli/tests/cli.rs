use std::path::{Path, PathBuf};
use std::process::Command;

use demoreq_cli::{cmd_analyze, exit, machine, parse_machine, AnalyzeOptions, OutputFormat};
use demoreq_core::engine::{run, EngineConfig};
use demoreq_core::model::parse_model;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(format!("{name}.toml"))
}

fn demoreq(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_demoreq"))
        .args(args)
        .env_remove("DEMOREQ_CONFIG")
        .output()
        .expect("binary runs");
    (
        out.status.code().expect("exited normally"),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn write(dir: &tempfile::TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path
}

const TRIVIAL: &str = r#"
[project]
name = "solo"

[[work_packages]]
id = "WP1"
name = "Only"
kind = "technical"
target_trl = 4
estimated_trl = 4
use_cases = ["U"]

[[use_cases]]
id = "U"
provider = "Acme"
readiness = "G4"

[[demonstrators]]
id = "D"
name = "Demo"
target_trl = 4
covered_wps = ["WP1"]
use_cases = ["U"]
qualities = "functional_only"
"#;

/// Edges as (from, to, style) with quotes stripped.
fn dot_edges(text: &str) -> (Vec<String>, Vec<(String, String, String)>) {
    let ast = dot_parser::ast::Graph::try_from(text).expect("DOT parses");
    let graph = dot_parser::canonical::Graph::from(ast)
        .filter_map(|(k, v): (dot_parser::ast::ID<'_>, dot_parser::ast::ID<'_>)| Some((k.into(), v.into())));
    let unquote = |s: &str| s.trim_matches('"').to_string();
    let mut nodes: Vec<String> = graph.nodes.set.keys().map(|k| unquote(k)).collect();
    nodes.sort();
    let edges = graph
        .edges
        .set
        .iter()
        .map(|e| {
            let style: String =
                e.attr.elems.iter().find(|(k, _): &&(String, String)| k == "style").map(|(_, v)| unquote(v)).unwrap_or_default();
            (unquote(&e.from), unquote(&e.to), style)
        })
        .collect();
    (nodes, edges)
}

#[test]
fn validate_exit_codes() {
    let (code, stdout, _) = demoreq(&["validate", fixture("zorro").to_str().unwrap()]);
    assert_eq!(code, exit::OK);
    assert!(stdout.contains("valid"));

    let dir = tempfile::tempdir().unwrap();
    let dangling = write(&dir, "dangling.toml", &TRIVIAL.replace(r#"covered_wps = ["WP1"]"#, r#"covered_wps = ["WP9"]"#));
    let (code, _, stderr) = demoreq(&["validate", dangling.to_str().unwrap()]);
    assert_eq!(code, exit::INVALID);
    assert!(stderr.contains("WP9"), "{stderr}");

    let (code, _, _) = demoreq(&["validate", "/nonexistent/model.toml"]);
    assert_eq!(code, exit::IO_OR_SYNTAX);

    let broken = write(&dir, "broken.toml", "[project\nname = ");
    assert_eq!(demoreq(&["validate", broken.to_str().unwrap()]).0, exit::IO_OR_SYNTAX);
}

#[test]
fn unknown_keys_are_errors_unless_lenient() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(&dir, "extra.toml", &TRIVIAL.replace("name = \"solo\"", "name = \"solo\"\ncolour = \"red\""));
    let path = path.to_str().unwrap();
    assert_eq!(demoreq(&["validate", path]).0, exit::INVALID);
    let (code, _, stderr) = demoreq(&["validate", "--lenient", path]);
    assert_eq!(code, exit::OK);
    assert!(stderr.contains("colour"));
}

#[test]
fn analyze_zorro_reports_shortfall() {
    let (code, stdout, _) = demoreq(&["analyze", fixture("zorro").to_str().unwrap()]);
    assert_eq!(code, exit::TARGETS_UNMET);
    assert!(stdout.contains("industrial: recommended L2 (Proof of integration)"), "{stdout}");
    for block in 1..=7 {
        assert!(stdout.contains(&format!("== Block {block}:")));
    }
}

#[test]
fn zorro_overrides_reduce_the_shortfall() {
    let path = fixture("zorro");
    let config = EngineConfig::default();
    let base = cmd_analyze(&path, &config, &AnalyzeOptions { format: OutputFormat::Machine, ..Default::default() });
    let sets = ["wp.WP1.use_cases+=CPP", "wp.WP4.use_cases+=CPP", "use_case.CPP.readiness=G3"];
    let changed = cmd_analyze(
        &path,
        &config,
        &AnalyzeOptions {
            format: OutputFormat::Machine,
            sets: sets.iter().map(|s| s.to_string()).collect(),
            ..Default::default()
        },
    );
    let (base, changed) = (parse_machine(&base.stdout).unwrap(), parse_machine(&changed.stdout).unwrap());
    let shortfall = |r: &demoreq_core::engine::AnalysisReport| r.assessment("industrial").unwrap().shortfall;
    assert!(shortfall(&changed) < shortfall(&base));

    let mut args = vec!["what-if", path.to_str().unwrap()];
    for s in &sets {
        args.extend(["--set", s]);
    }
    let (code, stdout, _) = demoreq(&args);
    assert_eq!(code, exit::TARGETS_UNMET, "one TRL level is still missing");
    assert!(stdout.contains("recommended industrial: L2 -> L4"), "{stdout}");
}

#[test]
fn trivial_model_passes_the_gate() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(&dir, "solo.toml", TRIVIAL);
    let (code, stdout, stderr) = demoreq(&["analyze", "--format", "machine", path.to_str().unwrap()]);
    assert_eq!(code, exit::OK, "{stdout}{stderr}");
    let report = parse_machine(&stdout).unwrap();
    assert!(report.feedback.is_empty());
}

#[test]
fn iteration_limit_and_bad_overrides() {
    let path = fixture("primavera");
    let path = path.to_str().unwrap();
    assert_eq!(demoreq(&["analyze", path, "--max-iterations", "1"]).0, exit::ITERATION_LIMIT);
    assert_eq!(demoreq(&["analyze", path, "--set", "wp.WP99.target_trl=4"]).0, exit::INVALID);
    assert_eq!(demoreq(&["analyze", path, "--set", "garbage"]).0, exit::INVALID);
}

#[test]
fn config_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(&dir, "config.toml", "max_feedback_iterations = 1\n");
    let out = Command::new(env!("CARGO_BIN_EXE_demoreq"))
        .args(["analyze", fixture("primavera").to_str().unwrap()])
        .env("DEMOREQ_CONFIG", &config)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(exit::ITERATION_LIMIT));

    let bad = write(&dir, "bad.toml", "[level_trl_bands]\nL1 = 7\nL2 = 5\nL3 = 5\nL4 = 6\nL5 = 7\n");
    let (code, _, _) = demoreq(&["--config", bad.to_str().unwrap(), "analyze", fixture("zorro").to_str().unwrap()]);
    assert_eq!(code, exit::INVALID);
}

#[test]
fn machine_output_round_trips() {
    for name in ["zorro", "primavera"] {
        let model = parse_model(&std::fs::read(fixture(name)).unwrap()).unwrap();
        let report = run(&model, &EngineConfig::default(), &[]).unwrap();
        let text = machine(&report);
        assert!(text.contains("\"report_version\": 1"));
        assert_eq!(parse_machine(&text).unwrap(), report);
    }
}

#[test]
fn dot_for_primavera() {
    let (code, stdout, _) = demoreq(&["export-dot", fixture("primavera").to_str().unwrap()]);
    assert_eq!(code, exit::OK);
    let (nodes, edges) = dot_edges(&stdout);
    assert_eq!(nodes.len(), 8);
    let solid: Vec<_> = edges.iter().filter(|e| e.2 == "solid").map(|e| (e.0.as_str(), e.1.as_str())).collect();
    assert_eq!(solid, [("WP1", "WP2"), ("WP2", "WP3"), ("WP3", "WP4"), ("WP4", "WP5")]);
    let dashed: Vec<_> = edges.iter().filter(|e| e.2 == "dashed").map(|e| (e.0.as_str(), e.1.as_str())).collect();
    assert_eq!(dashed.len(), 5);
    assert!(dashed.iter().all(|(_, to)| *to == "WP6"));
    assert!(stdout.contains("label=\"WP1: Data acquisition\""));
    assert!(stdout.contains("xlabel=\"island\""));
}

#[test]
fn dot_for_zorro_and_edgeless_models() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("zorro.dot");
    let (code, stdout, _) = demoreq(&["export-dot", fixture("zorro").to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!((code, stdout.as_str()), (exit::OK, ""));
    let (_, edges) = dot_edges(&std::fs::read_to_string(&out).unwrap());
    assert_eq!(edges.iter().filter(|e| e.2 == "dashed" && e.1 == "WP5").count(), 4);

    let solo = write(&dir, "solo.toml", TRIVIAL);
    let (_, stdout, _) = demoreq(&["export-dot", solo.to_str().unwrap()]);
    let (nodes, edges) = dot_edges(&stdout);
    assert_eq!(nodes, ["WP1"]);
    assert!(edges.is_empty());
    assert!(!stdout.contains("->"));
}

#[test]
fn dot_escapes_names() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(&dir, "q.toml", &TRIVIAL.replace(r#"name = "Only""#, r#"name = "The \"quoted\" \\ one""#));
    let (code, stdout, _) = demoreq(&["export-dot", path.to_str().unwrap()]);
    assert_eq!(code, exit::OK);
    assert!(stdout.contains(r#"label="WP1: The \"quoted\" \\ one""#), "{stdout}");
    dot_edges(&stdout);
}
