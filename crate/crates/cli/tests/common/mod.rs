//! Running the built binary.

// each test target uses a different part of this module
#![allow(dead_code)]

use std::process::Command;

use serde_json::Value;

pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn archtrap(args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_archtrap")).args(args).env_remove("MONA_BIN").output().expect("binary runs");
    Run {
        code: out.status.code().expect("exited"),
        stdout: String::from_utf8(out.stdout).expect("utf-8"),
        stderr: String::from_utf8(out.stderr).expect("utf-8"),
    }
}

/// The `--json` report of a run.
pub fn report(args: &[&str]) -> (i32, Value, String) {
    let mut all = args.to_vec();
    all.push("--json");
    let run = archtrap(&all);
    let value = serde_json::from_str(&run.stdout).unwrap_or_else(|e| panic!("{args:?}: {e}\n{}", run.stdout));
    (run.code, value, run.stdout)
}

/// The report text up to its timing object, which is serialized last.
pub fn without_timing(raw: &str) -> &str {
    &raw[..raw.rfind("\"timing\"").expect("timing is present")]
}
