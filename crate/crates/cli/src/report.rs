//! The report every subcommand produces, and its two renderings.

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    /// The command succeeded and makes no safety claim.
    Ok,
    SafeProved,
    UnsafeWitness,
    Inconclusive,
    Error,
}

impl Verdict {
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Ok | Verdict::SafeProved => 0,
            Verdict::UnsafeWitness => 1,
            Verdict::Inconclusive => 2,
            Verdict::Error => 3,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Ok => "ok",
            Verdict::SafeProved => "safe-proved",
            Verdict::UnsafeWitness => "unsafe-witness",
            Verdict::Inconclusive => "inconclusive",
            Verdict::Error => "error",
        }
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Statistics {
    pub trees: usize,
    pub configurations: usize,
    pub formula_size: Option<usize>,
}

/// Wall-clock figures; the only part of a report that varies between runs.
#[derive(Clone, Debug, Default, Serialize)]
pub struct Timing {
    pub elapsed_ms: u64,
    pub solver_ms: Option<u64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub spec: Option<String>,
    pub command: String,
    pub verdict: Verdict,
    pub statistics: Statistics,
    pub diagnostics: Vec<Value>,
    pub result: Value,
    pub timing: Timing,
    /// Human-readable body printed above the summary table.
    #[serde(skip)]
    pub text: String,
}

impl RunReport {
    pub fn new(command: &str, spec: Option<String>) -> RunReport {
        RunReport {
            spec,
            command: command.to_string(),
            verdict: Verdict::Ok,
            statistics: Statistics::default(),
            diagnostics: Vec::new(),
            result: Value::Null,
            timing: Timing::default(),
            text: String::new(),
        }
    }

    pub fn note(&mut self, message: impl Into<String>) {
        self.diagnostics.push(serde_json::json!({ "message": message.into() }));
    }

    pub fn fail(&mut self, message: impl Into<String>) {
        self.note(message);
        self.verdict = Verdict::Error;
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    /// Fixed-width summary table.
    pub fn table(&self) -> String {
        let mut rows: Vec<(&str, String)> = vec![("command", self.command.clone())];
        if let Some(s) = &self.spec {
            rows.push(("spec", s.clone()));
        }
        rows.push(("verdict", self.verdict.as_str().to_string()));
        rows.push(("trees", self.statistics.trees.to_string()));
        rows.push(("configurations", self.statistics.configurations.to_string()));
        if let Some(n) = self.statistics.formula_size {
            rows.push(("formula size", n.to_string()));
        }
        if let Some(ms) = self.timing.solver_ms {
            rows.push(("solver ms", ms.to_string()));
        }
        rows.push(("elapsed ms", self.timing.elapsed_ms.to_string()));
        let mut out = String::new();
        for (k, v) in rows {
            let _ = writeln!(out, "{k:<16}{v}");
        }
        for d in &self.diagnostics {
            let msg = d.get("message").and_then(Value::as_str).unwrap_or_default();
            let _ = writeln!(out, "{:<16}{msg}", "diagnostic");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_the_verdict() {
        let codes: Vec<i32> = [Verdict::Ok, Verdict::SafeProved, Verdict::UnsafeWitness, Verdict::Inconclusive, Verdict::Error]
            .iter()
            .map(|v| v.exit_code())
            .collect();
        assert_eq!(codes, vec![0, 0, 1, 2, 3]);
    }

    #[test]
    fn table_is_aligned() {
        let mut r = RunReport::new("check", Some("ring".into()));
        r.note("fine");
        for line in r.table().lines() {
            assert!(line.len() > 16 && line.as_bytes()[15] == b' ', "{line}");
        }
    }
}
