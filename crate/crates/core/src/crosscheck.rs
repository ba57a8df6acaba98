//! Cross-validation of the symbolic encoding against the explicit semantics
//! on bounded instances.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::automata::{direction_path, same_identifier_oracle, tree_path_directions, AutomatonError};
use crate::node::Node;
use crate::oracle::{Compiled, Configuration, OracleError, DEFAULT_LIMIT};
use crate::pipeline::{written_system, Model};
use crate::rewriting::{
    canonical_ground_term, enumerate_trees, ground_system, param_sets_to_tree, ParamSets, PreparedSystem, RewriteError,
};
use crate::wsks::{
    bounded_eval, bounded_models, build_flow, build_run_formula, build_rtree, build_trapinv, Encoder, Valuation,
    VariableLayout, WsksError, STATE_X, STATE_Y1, STATE_Y2,
};

/// At most this many failure messages are kept per suite.
const KEEP_FAILURES: usize = 20;
/// Model enumeration cap per evaluation.
const MODEL_LIMIT: usize = 1_000_000;

#[derive(Debug, thiserror::Error)]
pub enum CrossError {
    #[error(transparent)]
    Rewrite(#[from] RewriteError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Wsks(#[from] WsksError),
    #[error(transparent)]
    Automaton(#[from] AutomatonError),
}

/// Outcome of one suite on one system.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub cases: usize,
    pub failed: usize,
    pub failures: Vec<String>,
}

impl SuiteReport {
    fn new(suite: &str) -> SuiteReport {
        SuiteReport { suite: suite.to_string(), ..SuiteReport::default() }
    }

    fn record(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.failed += 1;
            if self.failures.len() < KEEP_FAILURES {
                self.failures.push(what());
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.failed == 0
    }
}

fn set_vars(names: Vec<String>, domain: Option<&BTreeSet<Node>>) -> Vec<(String, Option<BTreeSet<Node>>)> {
    names.into_iter().map(|n| (n, domain.cloned())).collect()
}

/// Models of the trap-invariant formula are exactly the configurations in
/// every initially marked trap, and every reachable configuration is one.
pub fn trap_invariant_suite(sys: &PreparedSystem, max_nodes: usize) -> Result<SuiteReport, CrossError> {
    let mut report = SuiteReport::new("trap-invariant");
    let layout = VariableLayout::new(sys);
    let phi = build_trapinv(sys);
    for tree in enumerate_trees(sys, max_nodes) {
        let g = ground_system(sys, &tree)?;
        let c = Compiled::new(&g)?;
        let theta: BTreeSet<Configuration> =
            c.all_configurations().into_iter().filter(|s| c.trap_invariant_holds(s).unwrap_or(false)).collect();
        let reach = c.reachable(DEFAULT_LIMIT)?;
        let outside = reach.configs.iter().map(|r| c.decode(r)).find(|s| !theta.contains(s));
        report.record(outside.is_none(), || format!("{tree:?}: reachable {outside:?} violates a marked trap"));
        let nu = layout.tree_valuation(sys, &tree);
        let open = set_vars(layout.state_sets(STATE_X), None);
        let models = bounded_models(&phi, &nu, tree.depth() + 1, &open, MODEL_LIMIT)?;
        let got: BTreeSet<Configuration> =
            models.iter().filter_map(|m| layout.read_configuration(STATE_X, m)).collect();
        report.record(got.len() == models.len() && got == theta, || {
            format!("{tree:?}: {} formula models, {} configurations in marked traps", models.len(), theta.len())
        });
    }
    Ok(report)
}

/// Models of the flow formula are the pre/post pairs of the interactions.
pub fn flow_suite(sys: &PreparedSystem, max_nodes: usize) -> Result<SuiteReport, CrossError> {
    let mut report = SuiteReport::new("flow");
    let layout = VariableLayout::new(sys);
    let phi = build_flow(sys);
    for tree in enumerate_trees(sys, max_nodes) {
        let g = ground_system(sys, &tree)?;
        let mut want = BTreeSet::new();
        for pi in &g.architecture {
            let (mut pre, mut post) = (BTreeMap::new(), BTreeMap::new());
            for (port, w) in pi {
                let c = g.component_of(w).expect("typed instance");
                pre.insert(w.clone(), c.pre(port).expect("owned port").to_string());
                post.insert(w.clone(), c.post(port).expect("owned port").to_string());
            }
            want.insert((pre, post));
        }
        let mut open = set_vars(layout.state_sets(STATE_Y1), None);
        open.extend(set_vars(layout.state_sets(STATE_Y2), None));
        let nu = layout.tree_valuation(sys, &tree);
        let models = bounded_models(&phi, &nu, tree.depth() + 1, &open, MODEL_LIMIT)?;
        let got: BTreeSet<(Configuration, Configuration)> = models
            .iter()
            .filter_map(|m| Some((layout.read_configuration(STATE_Y1, m)?, layout.read_configuration(STATE_Y2, m)?)))
            .collect();
        report.record(got.len() == models.len() && got == want, || {
            format!("{tree:?}: {} flow models, {} interactions", models.len(), want.len())
        });
    }
    Ok(report)
}

/// Every `(rule, variable)` pair of the system.
fn occurrences(sys: &PreparedSystem) -> Vec<(usize, crate::term::Var)> {
    sys.rules.iter().flat_map(|r| r.vars().into_iter().map(move |v| (r.index, v))).collect()
}

/// Nodes of depth at most `depth` in the κ-ary tree.
pub fn prefix_nodes(kappa: usize, depth: usize) -> Vec<Node> {
    let mut out = vec![Node::root()];
    let mut k = 0;
    while k < out.len() {
        if out[k].depth() < depth {
            for a in 0..kappa as u8 {
                out.push(out[k].child(a));
            }
        }
        k += 1;
    }
    out
}

/// The run formula of each automaton holds between two nodes exactly when
/// the automaton accepts the directions of the path between them.
pub fn run_formula_suite(sys: &PreparedSystem, depth: usize) -> Result<SuiteReport, CrossError> {
    let mut report = SuiteReport::new("run-formula");
    let enc = Encoder::new(sys);
    let nodes = prefix_nodes(sys.kappa, depth);
    let occ = occurrences(sys);
    for (r1, z1) in &occ {
        for (r2, z2) in &occ {
            let a = enc.family().automaton(*r1, z1, *r2, z2)?;
            if a.states.is_empty() {
                continue;
            }
            let phi = build_run_formula(sys, &a);
            for w1 in &nodes {
                for w2 in &nodes {
                    let nu = Valuation::new().with_position("x", w1.clone()).with_position("y", w2.clone());
                    let holds = bounded_eval(&phi, &nu, depth + 1)?;
                    let accepts = a.accepts(&direction_path(w1, w2));
                    report.record(holds == accepts, || {
                        format!("r{}.{z1} -> r{}.{z2} from {w1} to {w2}: formula {holds}, automaton {accepts}", r1 + 1, r2 + 1)
                    });
                }
            }
        }
    }
    Ok(report)
}

/// Automaton acceptance along tree paths coincides with two variables
/// denoting the same identifier.
pub fn path_automaton_suite(sys: &PreparedSystem, max_nodes: usize) -> Result<SuiteReport, CrossError> {
    let mut report = SuiteReport::new("path-automaton");
    let enc = Encoder::new(sys);
    for tree in enumerate_trees(sys, max_nodes) {
        let occ: Vec<(Node, usize, crate::term::Var)> = tree
            .labels()
            .iter()
            .flat_map(|(w, &r)| sys.rules[r].vars().into_iter().map(move |v| (w.clone(), r, v)))
            .collect();
        for (w1, r1, z1) in &occ {
            for (w2, r2, z2) in &occ {
                let a = enc.family().automaton(*r1, z1, *r2, z2)?;
                let accepts = a.accepts(&tree_path_directions(&tree, w1, w2)?);
                let same = same_identifier_oracle(sys, &tree, (w1, z1), (w2, z2));
                report.record(accepts == same, || {
                    format!("{tree:?}: {z1}@{w1} vs {z2}@{w2}: automaton {accepts}, substitution {same}")
                });
            }
        }
    }
    Ok(report)
}

/// Prefix-closed node sets of the κ-ary tree with at most `max_nodes` nodes.
pub fn skeletons(kappa: usize, max_nodes: usize) -> Vec<BTreeSet<Node>> {
    let mut seen: BTreeSet<BTreeSet<Node>> = BTreeSet::new();
    let mut frontier = vec![BTreeSet::from([Node::root()])];
    while let Some(s) = frontier.pop() {
        if !seen.insert(s.clone()) || s.len() >= max_nodes {
            continue;
        }
        for w in &s {
            for a in 0..kappa as u8 {
                let c = w.child(a);
                if !s.contains(&c) {
                    let mut t = s.clone();
                    t.insert(c);
                    frontier.push(t);
                }
            }
        }
    }
    seen.into_iter().collect()
}

/// The tree formula holds for a labeling of a skeleton exactly when the
/// labeling is a rewriting tree. Each skeleton's models are enumerated
/// symbolically and compared with the explicit check on every labeling.
pub fn rtree_suite(sys: &PreparedSystem, max_nodes: usize) -> Result<SuiteReport, CrossError> {
    let mut report = SuiteReport::new("rtree");
    let layout = VariableLayout::new(sys);
    let phi = build_rtree(sys);
    let n_rules = sys.rules.len();
    for skel in skeletons(sys.kappa, max_nodes) {
        let depth = skel.iter().map(Node::depth).max().unwrap_or(0);
        let open = set_vars(layout.rule_sets(), Some(&skel));
        let models: BTreeSet<Vec<BTreeSet<Node>>> = bounded_models(&phi, &Valuation::new(), depth + 1, &open, MODEL_LIMIT)?
            .into_iter()
            .map(|m| layout.rule_sets().iter().map(|u| m[u].clone()).collect())
            .collect();
        for m in &models {
            let ok = param_sets_to_tree(sys, &ParamSets(m.clone())).is_ok();
            report.record(ok, || format!("model {m:?} is not a rewriting tree"));
        }
        let nodes: Vec<&Node> = skel.iter().collect();
        let mut labels = vec![0usize; nodes.len()];
        loop {
            let mut sets = vec![BTreeSet::new(); n_rules];
            for (w, &l) in nodes.iter().zip(&labels) {
                sets[l].insert((*w).clone());
            }
            let valid = param_sets_to_tree(sys, &ParamSets(sets.clone())).is_ok();
            let holds = models.contains(&sets);
            report.record(valid == holds, || format!("labeling {sets:?}: formula {holds}, definition {valid}"));
            let mut k = 0;
            while k < labels.len() {
                labels[k] += 1;
                if labels[k] < n_rules {
                    break;
                }
                labels[k] = 0;
                k += 1;
            }
            if k == labels.len() {
                break;
            }
        }
    }
    Ok(report)
}

/// The maximal trap inside every set of instance-states is the union of all
/// traps it contains, and the trap invariant holds exactly for the
/// configurations meeting every marked trap. Exhaustive over subsets, so
/// only instances with at most `max_states` instance-states are checked.
pub fn maximal_trap_suite(sys: &PreparedSystem, max_nodes: usize, max_states: usize) -> Result<SuiteReport, CrossError> {
    let mut report = SuiteReport::new("maximal-trap");
    for tree in enumerate_trees(sys, max_nodes) {
        let c = Compiled::new(&ground_system(sys, &tree)?)?;
        let states: Vec<(Node, String)> = c.all_instance_states().into_iter().collect();
        if states.len() > max_states {
            continue;
        }
        let subset = |mask: u32| -> BTreeSet<(Node, String)> {
            states.iter().enumerate().filter(|(k, _)| mask >> k & 1 == 1).map(|(_, p)| p.clone()).collect()
        };
        let full: u32 = (1u32 << states.len()) - 1;
        let traps: Vec<u32> = (0..=full).filter(|&m| c.is_trap(&subset(m))).collect();
        for q in 0..=full {
            let union = traps.iter().filter(|&&t| t & !q == 0).fold(0, |acc, t| acc | t);
            let got = c.maximal_trap_within(&subset(q));
            report.record(got == subset(union), || format!("{tree:?}: maximal trap within {:?}", subset(q)));
        }
        let marked: Vec<BTreeSet<(Node, String)>> = traps.iter().map(|&t| subset(t)).filter(|t| c.is_marked(t)).collect();
        for sigma in c.all_configurations() {
            let meets = marked.iter().all(|t| sigma.iter().any(|(w, s)| t.contains(&(w.clone(), s.clone()))));
            let holds = c.trap_invariant_holds(&sigma)?;
            report.record(meets == holds, || format!("{tree:?}: trap invariant at {sigma:?}"));
        }
    }
    Ok(report)
}

/// The written system and its normal form denote the same ground terms up
/// to renaming of identifiers. Normalization adds at most one node per
/// instance, so a normal-form tree of `n` nodes has a written counterpart
/// of at most `n` nodes, and a written tree of `n` nodes with `c` instances
/// has a normal-form counterpart of at most `n + c` nodes.
pub fn normalization_suite(model: &Model, max_nodes: usize) -> Result<SuiteReport, CrossError> {
    let mut report = SuiteReport::new("normalization");
    let written = written_system(&model.spec)?;
    let mut ours = BTreeSet::new();
    for tree in enumerate_trees(&model.system, max_nodes) {
        if let Some(g) = canonical_ground_term(&model.system, &tree)? {
            ours.insert(g.up_to_renaming());
        }
    }
    let mut theirs = BTreeSet::new();
    for tree in enumerate_trees(&written, max_nodes) {
        let Some(g) = canonical_ground_term(&written, &tree)? else { continue };
        let key = g.up_to_renaming();
        if tree.size() + key.instances.len() <= max_nodes {
            report.record(ours.contains(&key), || format!("written {tree:?} has no normal-form counterpart"));
        }
        theirs.insert(key);
    }
    for key in &ours {
        report.record(theirs.contains(key), || format!("normal-form term {key:?} is not written"));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::pipeline::load;

    fn sys(name: &str) -> PreparedSystem {
        load(corpus::get(name).unwrap()).unwrap().system
    }

    #[test]
    fn normal_form_and_traps_on_the_ring() {
        let m = load(corpus::get("ring").unwrap()).unwrap();
        let n = normalization_suite(&m, 7).unwrap();
        assert!(n.passed() && n.cases > 0, "{n:?}");
        let t = maximal_trap_suite(&m.system, 4, 8).unwrap();
        assert!(t.passed() && t.cases > 0, "{t:?}");
    }

    #[test]
    fn skeleton_counts() {
        // Positional binary trees with 1..=4 nodes: 1 + 2 + 5 + 14.
        assert_eq!(skeletons(2, 4).len(), 22);
        assert_eq!(skeletons(1, 5).len(), 5);
    }

    #[test]
    fn small_suites_pass_on_the_ring() {
        let s = sys("ring");
        for r in [
            trap_invariant_suite(&s, 5).unwrap(),
            flow_suite(&s, 5).unwrap(),
            run_formula_suite(&s, 3).unwrap(),
            path_automaton_suite(&s, 6).unwrap(),
            rtree_suite(&s, 4).unwrap(),
        ] {
            assert!(r.passed(), "{r:?}");
            assert!(r.cases > 0, "{r:?}");
        }
    }
}
