//! One function per subcommand, each returning a finished report.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;
use std::time::Duration;

use archtrap_core::automata::{tree_path_directions, AutomataFamily};
use archtrap_core::corpus;
use archtrap_core::crosscheck::{
    flow_suite, path_automaton_suite, rtree_suite, run_formula_suite, trap_invariant_suite, CrossError, SuiteReport,
};
use archtrap_core::dsl::pretty_print;
use archtrap_core::oracle::{Compiled, Exact, GroundReport, TrapOutcome, Verdict as GroundVerdict};
use archtrap_core::pipeline::{load, Model};
use archtrap_core::rewriting::{enumerate_trees, ground_system, GroundSystem, PreparedSystem, RewritingTree};
use archtrap_core::term::Var;
use archtrap_core::wsks::{build_safe, emit_solver, run_solver, Mode, SolverConfig, SolverOutcome, WsksError};
use serde_json::{json, Value};

use crate::report::{RunReport, Verdict};
use crate::{Bounds, SolverArgs};

const DEFAULT_MAX_NODES: usize = 12;
/// Instance sizes checked when none is given.
const DEFAULT_SIZES: std::ops::RangeInclusive<usize> = 2..=6;

/// Reads a spec file, falling back to the built-in corpus by file stem.
fn source(arg: &str) -> Result<String, String> {
    let path = Path::new(arg);
    if path.is_file() {
        return std::fs::read_to_string(path).map_err(|e| format!("cannot read `{arg}`: {e}"));
    }
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or(arg);
    let name = if stem == "tll" { "tree-linked-leaves" } else { stem };
    corpus::get(name).map(str::to_string).ok_or_else(|| format!("cannot read `{arg}`: no such file or built-in specification"))
}

/// Loads the spec for `report`, recording any failure in it.
fn model(report: &mut RunReport, arg: &str) -> Option<Model> {
    let text = match source(arg) {
        Ok(t) => t,
        Err(e) => {
            report.fail(e);
            return None;
        }
    };
    match load(&text) {
        Ok(m) => Some(m),
        Err(e) => {
            let diags = e.diagnostics();
            if diags.is_empty() {
                report.fail(e.to_string());
            } else {
                report.diagnostics.extend(diags.iter().map(|d| serde_json::to_value(d).expect("diagnostics serialize")));
                report.verdict = Verdict::Error;
            }
            None
        }
    }
}

fn tree_json(sys: &PreparedSystem, id: usize, tree: &RewritingTree, g: &GroundSystem) -> Value {
    let labels: BTreeMap<String, String> = tree.labels().iter().map(|(w, &r)| (w.to_string(), sys.rules[r].label())).collect();
    let edges: Vec<[String; 2]> = tree
        .nodes()
        .filter_map(|w| w.parent().map(|p| [p.to_string(), w.to_string()]))
        .collect();
    json!({
        "id": id,
        "nodes": tree.nodes().map(|w| w.to_string()).collect::<Vec<_>>(),
        "labels": labels,
        "edges": edges,
        "instances": g.instances,
        "interactions": g.architecture,
    })
}

struct Instance {
    id: usize,
    tree: RewritingTree,
    ground: GroundSystem,
    size: usize,
}

/// Instances whose size is in `sizes`, in enumeration order.
fn instances(m: &Model, max_nodes: usize, sizes: &BTreeSet<usize>) -> Result<Vec<Instance>, String> {
    let mut out = Vec::new();
    for (id, tree) in enumerate_trees(&m.system, max_nodes).enumerate() {
        let ground = ground_system(&m.system, &tree).map_err(|e| e.to_string())?;
        let size = m.size_of(&ground);
        if sizes.contains(&size) {
            out.push(Instance { id, tree, ground, size });
        }
    }
    Ok(out)
}

fn chosen_sizes(bounds: &Bounds) -> BTreeSet<usize> {
    match bounds.size {
        Some(s) => BTreeSet::from([s]),
        None => DEFAULT_SIZES.collect(),
    }
}

/// One tree picked by index or, failing that, by size.
fn pick_tree(m: &Model, tree: Option<usize>, bounds: &Bounds) -> Result<Instance, String> {
    let max_nodes = bounds.max_nodes.unwrap_or(DEFAULT_MAX_NODES);
    let found = match (tree, bounds.size) {
        (Some(id), _) => enumerate_trees(&m.system, max_nodes).nth(id).map(|t| (id, t)),
        (None, Some(size)) => enumerate_trees(&m.system, max_nodes)
            .enumerate()
            .find(|(_, t)| ground_system(&m.system, t).map(|g| m.size_of(&g) == size).unwrap_or(false)),
        (None, None) => return Err("choose an instance with --tree or --size".into()),
    };
    let (id, tree) = found.ok_or_else(|| format!("no such tree within {max_nodes} nodes"))?;
    let ground = ground_system(&m.system, &tree).map_err(|e| e.to_string())?;
    let size = m.size_of(&ground);
    Ok(Instance { id, tree, ground, size })
}

fn fmt_config<'a>(pairs: impl IntoIterator<Item = (&'a archtrap_core::node::Node, &'a String)>) -> String {
    let items: Vec<String> = pairs.into_iter().map(|(w, s)| format!("{w}:{s}")).collect();
    format!("{{{}}}", items.join(", "))
}

pub fn check(arg: &str) -> RunReport {
    let mut r = RunReport::new("check", Some(arg.to_string()));
    let Some(m) = model(&mut r, arg) else { return r };
    r.result = json!({
        "components": m.spec.components.iter().map(|c| c.name.clone()).collect::<Vec<_>>(),
        "rules": m.system.rules.len(),
        "kappa": m.system.kappa,
        "queries": m.spec.queries.iter().map(|q| q.to_string()).collect::<Vec<_>>(),
    });
    r.text = pretty_print(&m.spec);
    r
}

pub fn normalize(arg: &str) -> RunReport {
    let mut r = RunReport::new("normalize", Some(arg.to_string()));
    let Some(m) = model(&mut r, arg) else { return r };
    let text = m.normalized.to_string();
    let rules: Vec<String> = m.system.rules.iter().map(|s| format!("{}: {s}", s.label())).collect();
    r.text = rules.iter().map(|l| format!("{l}\n")).collect();
    r.result = json!({ "text": text, "rules": rules, "kappa": m.system.kappa });
    r
}

pub fn unfold(arg: &str, bounds: &Bounds, stream: bool) -> RunReport {
    let mut r = RunReport::new("unfold", Some(arg.to_string()));
    let Some(m) = model(&mut r, arg) else { return r };
    let max_nodes = bounds.max_nodes.unwrap_or(DEFAULT_MAX_NODES);
    let mut trees = Vec::new();
    for (id, tree) in enumerate_trees(&m.system, max_nodes).enumerate() {
        let g = match ground_system(&m.system, &tree) {
            Ok(g) => g,
            Err(e) => {
                r.fail(format!("tree {id}: {e}"));
                return r;
            }
        };
        if bounds.size.is_some_and(|s| s != m.size_of(&g)) {
            continue;
        }
        let line = tree_json(&m.system, id, &tree, &g);
        r.statistics.trees += 1;
        if stream {
            // stop quietly once the reader has gone away
            if writeln!(std::io::stdout(), "{line}").is_err() {
                break;
            }
        } else {
            trees.push(line);
        }
    }
    r.result = json!({ "max_nodes": max_nodes, "trees": trees });
    r
}

fn ground_entry(inst: &Instance, sys: &PreparedSystem, report: &GroundReport) -> Value {
    let (verdict, method, witness) = match report.verdict() {
        GroundVerdict::Safe(m) => ("safe", Some(m), None),
        GroundVerdict::Unsafe(w) => ("unsafe", None, Some(w)),
        GroundVerdict::Inconclusive => ("inconclusive", None, None),
    };
    json!({
        "tree": inst.id,
        "size": inst.size,
        "labels": tree_json(sys, inst.id, &inst.tree, &inst.ground)["labels"],
        "verdict": verdict,
        "method": method,
        "witness": witness,
        "exact": report.exact,
        "trap": report.trap,
    })
}

/// Checks every instance of the chosen sizes. Returns the aggregate verdict.
fn ground_evidence(r: &mut RunReport, m: &Model, bounds: &Bounds) -> Option<(Verdict, Vec<Value>)> {
    let max_nodes = bounds.max_nodes.unwrap_or(DEFAULT_MAX_NODES);
    let sizes = chosen_sizes(bounds);
    let insts = match instances(m, max_nodes, &sizes) {
        Ok(i) => i,
        Err(e) => {
            r.fail(e);
            return None;
        }
    };
    if insts.is_empty() {
        r.fail(format!("no instance of size {sizes:?} within {max_nodes} nodes"));
        return None;
    }
    let (mut unsafe_seen, mut open) = (false, false);
    let mut entries = Vec::new();
    for inst in &insts {
        let report = match Compiled::new(&inst.ground) {
            Ok(c) => c.verify(&m.spec.queries, bounds.limit),
            Err(e) => {
                r.fail(format!("tree {}: {e}", inst.id));
                return None;
            }
        };
        r.statistics.trees += 1;
        if let Exact::Safe { explored } = report.exact {
            r.statistics.configurations += explored;
        }
        let mut line = format!("tree {:<5} size {:<3} ", inst.id, inst.size);
        match report.verdict() {
            GroundVerdict::Unsafe(w) => {
                unsafe_seen = true;
                let _ = write!(line, "unsafe after {} steps", w.len());
                if let Some(last) = w.last() {
                    let _ = write!(line, ", reaching {}", fmt_config(&last.target));
                }
            }
            GroundVerdict::Safe(method) => {
                let _ = write!(line, "safe ({})", serde_json::to_value(method).expect("serializes").as_str().unwrap_or_default());
            }
            GroundVerdict::Inconclusive => {
                open = true;
                line.push_str("inconclusive");
            }
        }
        if let TrapOutcome::Inconclusive { candidate } = &report.trap {
            let _ = write!(line, "; trap candidate {}", fmt_config(candidate));
        }
        let _ = writeln!(r.text, "{line}");
        entries.push(ground_entry(inst, &m.system, &report));
    }
    let verdict = if unsafe_seen {
        Verdict::UnsafeWitness
    } else if open {
        Verdict::Inconclusive
    } else {
        Verdict::SafeProved
    };
    Some((verdict, entries))
}

pub fn verify_ground(arg: &str, bounds: &Bounds) -> RunReport {
    let mut r = RunReport::new("verify-ground", Some(arg.to_string()));
    let Some(m) = model(&mut r, arg) else { return r };
    if let Some((verdict, entries)) = ground_evidence(&mut r, &m, bounds) {
        r.verdict = verdict;
        r.result = json!({ "instances": entries });
    }
    r
}

pub fn traps(arg: &str, tree: Option<usize>, bounds: &Bounds) -> RunReport {
    let mut r = RunReport::new("traps", Some(arg.to_string()));
    let Some(m) = model(&mut r, arg) else { return r };
    let inst = match pick_tree(&m, tree, bounds) {
        Ok(i) => i,
        Err(e) => {
            r.fail(e);
            return r;
        }
    };
    let c = match Compiled::new(&inst.ground) {
        Ok(c) => c,
        Err(e) => {
            r.fail(e.to_string());
            return r;
        }
    };
    let traps = c.marked_traps();
    r.statistics.trees = 1;
    for t in &traps {
        let _ = writeln!(r.text, "{}", fmt_config(t.iter().map(|(w, s)| (w, s))));
    }
    r.result = json!({
        "tree": tree_json(&m.system, inst.id, &inst.tree, &inst.ground),
        "size": inst.size,
        "marked_traps": traps,
    });
    r
}

/// The safety formula in solver syntax, with its size and free sets.
fn solver_input(r: &mut RunReport, m: &Model) -> Option<(String, Mode, Vec<String>)> {
    let built = Mode::for_kappa(m.system.kappa).and_then(|mode| {
        let phi = build_safe(&m.system, &m.spec.queries)?;
        Ok((emit_solver(&phi, mode)?, mode, phi))
    });
    match built {
        Ok((text, mode, phi)) => {
            r.statistics.formula_size = Some(phi.formula.size());
            Some((text, mode, phi.free_set_vars().into_iter().collect()))
        }
        Err(e) => {
            r.fail(e.to_string());
            None
        }
    }
}

fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::Ws1s => "ws1s",
        Mode::Ws2s => "ws2s",
    }
}

pub fn emit(arg: &str, output: Option<&Path>) -> RunReport {
    let mut r = RunReport::new("emit", Some(arg.to_string()));
    let Some(m) = model(&mut r, arg) else { return r };
    let Some((text, mode, free)) = solver_input(&mut r, &m) else { return r };
    let mut result = json!({ "mode": mode_name(mode), "free_sets": free });
    match output {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &text) {
                r.fail(format!("cannot write {}: {e}", path.display()));
                return r;
            }
            result["output"] = json!(path.display().to_string());
        }
        None => {
            result["text"] = json!(text);
            r.text = text;
        }
    }
    r.result = result;
    r
}

pub fn verify(arg: &str, solver: &SolverArgs, bounds: &Bounds) -> RunReport {
    let mut r = RunReport::new("verify", Some(arg.to_string()));
    let Some(m) = model(&mut r, arg) else { return r };
    let cfg = SolverConfig { binary: solver.mona_path.clone(), timeout: Duration::from_secs(solver.solver_timeout) };
    if let Err(WsksError::SolverNotFound(why)) = cfg.locate() {
        r.note(format!("solver not found ({why}): bounded evidence only, no parametric claim"));
        let _ = writeln!(r.text, "BOUNDED EVIDENCE ONLY: the solver is unavailable");
        if let Some((verdict, entries)) = ground_evidence(&mut r, &m, bounds) {
            // A bounded check can refute safety but never prove it for all sizes.
            r.verdict = if verdict == Verdict::UnsafeWitness { verdict } else { Verdict::Inconclusive };
            r.result = json!({ "method": "bounded", "instances": entries });
        }
        return r;
    }
    let Some((text, mode, free)) = solver_input(&mut r, &m) else { return r };
    match run_solver(&text, &cfg) {
        Ok((outcome, elapsed)) => {
            r.timing.solver_ms = Some(elapsed.as_millis() as u64);
            let mut result = json!({ "method": "solver", "mode": mode_name(mode), "free_sets": free });
            match outcome {
                SolverOutcome::Unsat => {
                    r.verdict = Verdict::SafeProved;
                    result["outcome"] = json!("unsat");
                }
                SolverOutcome::Sat { witness } => {
                    r.verdict = Verdict::Inconclusive;
                    r.note("the safety formula is satisfiable: trap invariants do not exclude every bad configuration");
                    result["outcome"] = json!("sat");
                    result["witness"] = json!(witness);
                    let _ = writeln!(r.text, "{witness}");
                }
            }
            r.result = result;
        }
        Err(e) => r.fail(e.to_string()),
    }
    r
}

const SUITES: [&str; 5] = ["rtree", "run-formula", "path-automaton", "flow", "trap-invariant"];

/// Default bound per suite: nodes for tree suites, depth for `run-formula`.
fn suite_bound(suite: &str, kappa: usize) -> usize {
    match suite {
        "rtree" => 5,
        "run-formula" if kappa == 1 => 4,
        "run-formula" => 2,
        "path-automaton" => 9,
        "flow" => 7,
        _ => 6,
    }
}

fn run_suite(suite: &str, sys: &PreparedSystem, bound: usize) -> Result<SuiteReport, CrossError> {
    match suite {
        "rtree" => rtree_suite(sys, bound),
        "run-formula" => run_formula_suite(sys, bound),
        "path-automaton" => path_automaton_suite(sys, bound),
        "flow" => flow_suite(sys, bound),
        _ => trap_invariant_suite(sys, bound),
    }
}

pub fn oracle_check(arg: &str, bounds: &Bounds, only: &[String]) -> RunReport {
    let mut r = RunReport::new("oracle-check", Some(arg.to_string()));
    if let Some(bad) = only.iter().find(|s| !SUITES.contains(&s.as_str())) {
        r.fail(format!("unknown suite `{bad}`; expected one of {}", SUITES.join(", ")));
        return r;
    }
    let Some(m) = model(&mut r, arg) else { return r };
    let mut results = Vec::new();
    for suite in SUITES.iter().filter(|s| only.is_empty() || only.iter().any(|o| o == *s)) {
        let mut bound = suite_bound(suite, m.system.kappa);
        if *suite != "run-formula" {
            bound = bounds.max_nodes.map_or(bound, |n| n.min(bound));
        }
        // a family whose smallest tree is past the default still gets a case;
        // the rtree suite also covers labelings that are not trees
        if !matches!(*suite, "run-formula" | "rtree") {
            let cap = bounds.max_nodes.unwrap_or(DEFAULT_MAX_NODES);
            if enumerate_trees(&m.system, bound).next().is_none() {
                if let Some(least) = (bound + 1..=cap).find(|&n| enumerate_trees(&m.system, n).next().is_some()) {
                    r.note(format!("suite {suite}: no tree within {bound} nodes, bound raised to {least}"));
                    bound = least;
                }
            }
        }
        match run_suite(suite, &m.system, bound) {
            Ok(rep) => {
                let _ = writeln!(r.text, "{:<16}bound {:<4}cases {:<8}failed {}", rep.suite, bound, rep.cases, rep.failed);
                for f in &rep.failures {
                    let _ = writeln!(r.text, "    {f}");
                }
                if !rep.passed() {
                    r.fail(format!("suite {} failed {} of {} cases", rep.suite, rep.failed, rep.cases));
                }
                let mut v = serde_json::to_value(&rep).expect("serializes");
                v["bound"] = json!(bound);
                results.push(v);
            }
            Err(e) => {
                r.fail(format!("suite {suite}: {e}"));
            }
        }
    }
    r.result = json!({ "suites": results });
    r
}

/// `r2.x1` into a rule index and variable.
fn occurrence(sys: &PreparedSystem, text: &str) -> Result<(usize, Var), String> {
    let (rule, var) = text.split_once('.').ok_or_else(|| format!("`{text}` is not of the form rule.variable"))?;
    let index = rule
        .trim_start_matches('r')
        .parse::<usize>()
        .ok()
        .filter(|&i| i >= 1 && i <= sys.rules.len())
        .ok_or_else(|| format!("no rule `{rule}`"))?
        - 1;
    let var = Var::new(var);
    if !sys.rules[index].vars().contains(&var) {
        return Err(format!("rule {rule} has no variable `{var}`"));
    }
    Ok((index, var))
}

pub fn paths(arg: &str, tree: usize, from: &str, to: &str, bounds: &Bounds) -> RunReport {
    let mut r = RunReport::new("paths", Some(arg.to_string()));
    let Some(m) = model(&mut r, arg) else { return r };
    let picked = pick_tree(&m, Some(tree), bounds)
        .and_then(|inst| Ok((inst, occurrence(&m.system, from)?, occurrence(&m.system, to)?)));
    let (inst, (r1, z1), (r2, z2)) = match picked {
        Ok(p) => p,
        Err(e) => {
            r.fail(e);
            return r;
        }
    };
    let family = AutomataFamily::new(&m.system);
    let automaton = match family.automaton(r1, &z1, r2, &z2) {
        Ok(a) => a,
        Err(e) => {
            r.fail(e.to_string());
            return r;
        }
    };
    let at = |rule: usize| inst.tree.labels().iter().filter(move |(_, &l)| l == rule).map(|(w, _)| w.clone());
    let mut endpoints = Vec::new();
    for w1 in at(r1) {
        for w2 in at(r2) {
            let ok = tree_path_directions(&inst.tree, &w1, &w2).map(|p| automaton.accepts(&p)).unwrap_or(false);
            if ok {
                let _ = writeln!(r.text, "{w1} -> {w2}");
                endpoints.push([w1.to_string(), w2.to_string()]);
            }
        }
    }
    r.statistics.trees = 1;
    r.result = json!({
        "tree": tree_json(&m.system, inst.id, &inst.tree, &inst.ground),
        "from": from,
        "to": to,
        "automaton_states": automaton.states.len(),
        "endpoints": endpoints,
    });
    r
}

pub fn corpus_list() -> RunReport {
    let mut r = RunReport::new("corpus list", None);
    let mut entries = Vec::new();
    for (name, _) in corpus::CORPUS {
        let file = format!("corpus/{name}.pas");
        let _ = writeln!(r.text, "{name:<20}{file}");
        entries.push(json!({ "name": name, "file": file }));
    }
    r.result = json!({ "specs": entries });
    r
}
