//! The command-line contract: report shape, exit codes and argument handling.

mod common;

use std::path::PathBuf;

use jsonschema::JSONSchema;
use serde_json::Value;

use common::{archtrap, report};

fn schema() -> JSONSchema {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../schemas/report.schema.json");
    let value: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    JSONSchema::compile(&value).unwrap()
}

fn exit_code_of(verdict: &str) -> i32 {
    match verdict {
        "ok" | "safe-proved" => 0,
        "unsafe-witness" => 1,
        "inconclusive" => 2,
        "error" => 3,
        other => panic!("unknown verdict {other}"),
    }
}

const SAMPLES: &[&[&str]] = &[
    &["corpus", "list"],
    &["check", "ring"],
    &["check", "no-such-spec"],
    &["normalize", "tree-dfs"],
    &["unfold", "star", "--max-nodes", "6"],
    &["verify-ground", "ring"],
    &["verify-ground", "sync-philo", "--size", "4"],
    &["verify-ground", "ring-star", "--size", "40", "--max-nodes", "5"],
    &["traps", "token-ring", "--size", "3"],
    &["traps", "token-ring"],
    &["emit", "tree-back-root"],
    &["verify", "alt-philo-sym", "--max-nodes", "8"],
    &["verify", "star", "--max-nodes", "8"],
    &["oracle-check", "ring", "--suite", "flow"],
    &["oracle-check", "ring", "--suite", "nonsense"],
    &["paths", "ring", "--tree", "2", "--from", "r3.x2", "--to", "r2.x2"],
    &["paths", "ring", "--tree", "2", "--from", "r9.x2", "--to", "r2.x2"],
];

#[test]
fn reports_follow_the_schema_and_exit_codes_follow_verdicts() {
    let schema = schema();
    for args in SAMPLES {
        let (code, value, _) = report(args);
        if let Err(errors) = schema.validate(&value) {
            let errors: Vec<String> = errors.map(|e| format!("{} at {}", e, e.instance_path)).collect();
            panic!("{args:?}: {errors:?}");
        }
        assert_eq!(code, exit_code_of(value["verdict"].as_str().unwrap()), "{args:?}");
    }
}

#[test]
fn verdicts_of_the_bundled_systems() {
    let verdict = |args: &[&str]| report(args).1["verdict"].as_str().unwrap().to_string();
    assert_eq!(verdict(&["verify-ground", "alt-philo-sym", "--size", "3"]), "unsafe-witness");
    assert_eq!(verdict(&["verify-ground", "alt-philo-asym", "--size", "3"]), "safe-proved");
    assert_eq!(verdict(&["verify-ground", "ring"]), "unsafe-witness");
    assert_eq!(verdict(&["check", "no-such-spec"]), "error");
}

#[test]
fn ground_witness_is_reported() {
    let (_, v, _) = report(&["verify-ground", "alt-philo-sym", "--size", "2"]);
    let inst = &v["result"]["instances"][0];
    assert_eq!(inst["verdict"], "unsafe");
    assert!(!inst["witness"].as_array().unwrap().is_empty());
}

#[test]
fn usage_errors_exit_with_the_error_code() {
    let run = archtrap(&["verify-ground"]);
    assert_eq!(run.code, 3);
    assert!(run.stderr.contains("Usage"), "{}", run.stderr);
    assert_eq!(archtrap(&["no-such-command"]).code, 3);
    assert_eq!(archtrap(&["--help"]).code, 0);
    assert_eq!(archtrap(&["--version"]).code, 0);
}

#[test]
fn linked_leaves_answer_to_their_short_name() {
    let (code, v, _) = report(&["check", "tll"]);
    assert_eq!(code, 0);
    assert_eq!(v["spec"], "tll");
    let (_, w, _) = report(&["normalize", "corpus/tll.pas"]);
    let (_, u, _) = report(&["normalize", "tree-linked-leaves"]);
    assert_eq!(w["result"], u["result"]);
}

#[test]
fn every_suite_passes_on_linked_leaves_within_seven_nodes() {
    let (code, v, _) = report(&["oracle-check", "corpus/tll.pas", "--max-nodes", "7"]);
    assert_eq!(code, 0, "{v}");
    let suites = v["result"]["suites"].as_array().unwrap();
    assert_eq!(suites.len(), 5);
    for s in suites {
        assert_eq!(s["failed"], 0, "{s}");
        assert!(s["cases"].as_u64().unwrap() > 0, "{s}");
    }
}

#[test]
fn specs_are_read_from_files() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let good = dir.join("pair.pas");
    std::fs::write(
        &good,
        "component C { ports p; states a init, b; rule a -p-> b; }
         root new x . new y . < p(x).p(y) > ( C(x), C(y) );
         check deadlock;",
    )
    .unwrap();
    let (code, v, _) = report(&["verify-ground", good.to_str().unwrap()]);
    // both fire once and then nothing is enabled
    assert_eq!(code, 1, "{v}");
    let bad = dir.join("broken.pas");
    std::fs::write(&bad, "component C { ports p; states a init; rule a -q-> a; }").unwrap();
    let (code, v, _) = report(&["check", bad.to_str().unwrap()]);
    assert_eq!(code, 3);
    assert!(!v["diagnostics"].as_array().unwrap().is_empty());
    let out = dir.join("pair.mona");
    let run = archtrap(&["emit", good.to_str().unwrap(), "-o", out.to_str().unwrap()]);
    assert_eq!(run.code, 0);
    assert!(std::fs::read_to_string(&out).unwrap().starts_with("ws1s;"));
}

#[test]
fn missing_solver_falls_back_to_bounded_evidence() {
    let run = archtrap(&["verify", "sync-philo", "--mona-path", "/nonexistent/mona", "--max-nodes", "8"]);
    assert_eq!(run.code, 2);
    assert!(run.stdout.contains("BOUNDED EVIDENCE ONLY"), "{}", run.stdout);
    let (code, v, _) = report(&["verify", "alt-philo-sym", "--mona-path", "/nonexistent/mona", "--max-nodes", "8"]);
    assert_eq!(code, 1);
    assert_eq!(v["result"]["method"], "bounded");
}

#[test]
fn unfold_streams_one_tree_per_line() {
    let run = archtrap(&["unfold", "tree-dfs", "--max-nodes", "7"]);
    assert_eq!(run.code, 0);
    let lines: Vec<Value> = run.stdout.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 3);
    assert!(lines.iter().all(|l| l["instances"].is_object() && l["edges"].is_array()));
    assert!(run.stderr.contains("unfold"));
}

#[test]
fn summary_table_is_fixed_width() {
    let run = archtrap(&["verify-ground", "star", "--size", "3"]);
    assert_eq!(run.code, 0);
    let table: Vec<&str> = run.stdout.lines().skip_while(|l| !l.starts_with("command")).collect();
    assert!(table.len() >= 5);
    for line in table {
        assert_eq!(line.as_bytes()[15], b' ', "{line}");
    }
}
