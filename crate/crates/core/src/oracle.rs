//! Explicit-state semantics of ground systems: firing, reachability,
//! deadlocks, traps and the trap invariant.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use serde::Serialize;

use crate::component::ComponentType;
use crate::dsl::SafetyQuery;
use crate::node::Node;
use crate::rewriting::GroundSystem;
use crate::term::Interaction;

pub const DEFAULT_LIMIT: usize = 2_000_000;

/// One state per instance, by node.
pub type Configuration = BTreeMap<Node, String>;

/// A set of instance-states.
pub type StateSet = BTreeSet<(Node, String)>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("interaction {0:?} is not part of the architecture")]
    UnknownInteraction(Interaction),
    #[error("more than {0} configurations")]
    Overflow(usize),
    #[error("configuration is not total or not well typed: {0}")]
    BadConfiguration(String),
    #[error("port `{port}` of instance {node} labels no transition")]
    UnknownPort { port: String, node: Node },
}

struct Part {
    inst: usize,
    pre: u8,
    post: u8,
}

/// A ground system with instances and states replaced by indices.
pub struct Compiled {
    pub nodes: Vec<Node>,
    pub components: Vec<ComponentType>,
    types: Vec<usize>,
    interactions: Vec<Vec<Part>>,
    source: Vec<Interaction>,
    pub initial: Vec<u8>,
    offsets: Vec<usize>,
    n_states: usize,
    /// Interactions whose last participant (by index) is the instance.
    closing: Vec<Vec<usize>>,
}

impl Compiled {
    pub fn new(g: &GroundSystem) -> Result<Compiled, OracleError> {
        let nodes: Vec<Node> = g.instances.keys().cloned().collect();
        let index: HashMap<&Node, usize> = nodes.iter().enumerate().map(|(i, n)| (n, i)).collect();
        let mut types = Vec::new();
        let mut offsets = Vec::new();
        let mut n_states = 0;
        for ctype in g.instances.values() {
            let t = g.components.iter().position(|c| &c.name == ctype).expect("instance type is declared");
            types.push(t);
            offsets.push(n_states);
            n_states += g.components[t].states.len();
        }
        let mut interactions = Vec::new();
        let mut closing = vec![Vec::new(); nodes.len()];
        for (k, inter) in g.architecture.iter().enumerate() {
            let mut parts = Vec::new();
            for (port, node) in inter {
                let inst = index[node];
                let c = &g.components[types[inst]];
                let t = c.transition(port).ok_or_else(|| OracleError::UnknownPort { port: port.clone(), node: node.clone() })?;
                parts.push(Part {
                    inst,
                    pre: c.state_index(&t.from).expect("declared") as u8,
                    post: c.state_index(&t.to).expect("declared") as u8,
                });
            }
            if let Some(last) = parts.iter().map(|p| p.inst).max() {
                closing[last].push(k);
            }
            interactions.push(parts);
        }
        let initial = nodes
            .iter()
            .zip(&types)
            .map(|(n, &t)| g.components[t].state_index(&g.initial[n]).expect("declared") as u8)
            .collect();
        Ok(Compiled {
            nodes,
            components: g.components.clone(),
            types,
            interactions,
            source: g.architecture.iter().cloned().collect(),
            initial,
            offsets,
            n_states,
            closing,
        })
    }

    pub fn interactions(&self) -> &[Interaction] {
        &self.source
    }

    pub fn instance_states(&self) -> usize {
        self.n_states
    }

    fn component(&self, inst: usize) -> &ComponentType {
        &self.components[self.types[inst]]
    }

    fn state_count(&self, inst: usize) -> usize {
        self.component(inst).states.len()
    }

    fn istate(&self, inst: usize, s: u8) -> usize {
        self.offsets[inst] + s as usize
    }

    /// Inverse of the instance-state index.
    fn pair(&self, k: usize) -> (Node, String) {
        let inst = self.offsets.partition_point(|&o| o <= k) - 1;
        (self.nodes[inst].clone(), self.component(inst).states[k - self.offsets[inst]].clone())
    }

    fn index_of(&self, node: &Node, state: &str) -> Option<usize> {
        let inst = self.nodes.iter().position(|n| n == node)?;
        Some(self.istate(inst, self.component(inst).state_index(state)? as u8))
    }

    pub fn decode(&self, c: &[u8]) -> Configuration {
        c.iter()
            .enumerate()
            .map(|(i, &s)| (self.nodes[i].clone(), self.component(i).states[s as usize].clone()))
            .collect()
    }

    pub fn encode(&self, sigma: &Configuration) -> Result<Vec<u8>, OracleError> {
        if sigma.len() != self.nodes.len() {
            return Err(OracleError::BadConfiguration(format!("{} states for {} instances", sigma.len(), self.nodes.len())));
        }
        self.nodes
            .iter()
            .enumerate()
            .map(|(i, n)| {
                let s = sigma.get(n).ok_or_else(|| OracleError::BadConfiguration(format!("no state for {n}")))?;
                self.component(i)
                    .state_index(s)
                    .map(|k| k as u8)
                    .ok_or_else(|| OracleError::BadConfiguration(format!("`{s}` is not a state of instance {n}")))
            })
            .collect()
    }

    fn lookup(&self, pi: &Interaction) -> Result<usize, OracleError> {
        self.source.binary_search(pi).map_err(|_| OracleError::UnknownInteraction(pi.clone()))
    }

    fn enabled_at(&self, c: &[u8], k: usize) -> bool {
        self.interactions[k].iter().all(|p| c[p.inst] == p.pre)
    }

    fn fire_at(&self, c: &[u8], k: usize) -> Vec<u8> {
        let mut next = c.to_vec();
        for p in &self.interactions[k] {
            next[p.inst] = p.post;
        }
        next
    }

    pub fn enabled(&self, sigma: &Configuration, pi: &Interaction) -> Result<bool, OracleError> {
        Ok(self.enabled_at(&self.encode(sigma)?, self.lookup(pi)?))
    }

    /// Participants move to their post-states, everyone else idles.
    pub fn fire(&self, sigma: &Configuration, pi: &Interaction) -> Result<Configuration, OracleError> {
        Ok(self.decode(&self.fire_at(&self.encode(sigma)?, self.lookup(pi)?)))
    }

    fn is_deadlocked(&self, c: &[u8]) -> bool {
        (0..self.interactions.len()).all(|k| !self.enabled_at(c, k))
    }

    pub fn deadlocked(&self, sigma: &Configuration) -> Result<bool, OracleError> {
        Ok(self.is_deadlocked(&self.encode(sigma)?))
    }

    pub fn initial_configuration(&self) -> Configuration {
        self.decode(&self.initial)
    }

    /// Breadth-first closure from the initial configuration.
    pub fn reachable(&self, limit: usize) -> Result<Reach, OracleError> {
        let mut configs = vec![self.initial.clone()];
        let mut seen: HashMap<Vec<u8>, usize> = HashMap::from([(self.initial.clone(), 0)]);
        let mut parent = vec![None];
        let mut edges = Vec::new();
        let mut queue = VecDeque::from([0usize]);
        while let Some(i) = queue.pop_front() {
            for k in 0..self.interactions.len() {
                if !self.enabled_at(&configs[i], k) {
                    continue;
                }
                let next = self.fire_at(&configs[i], k);
                let j = match seen.get(&next) {
                    Some(&j) => j,
                    None => {
                        if configs.len() >= limit {
                            return Err(OracleError::Overflow(limit));
                        }
                        let j = configs.len();
                        seen.insert(next.clone(), j);
                        configs.push(next);
                        parent.push(Some((i, k)));
                        queue.push_back(j);
                        j
                    }
                };
                edges.push((i, k, j));
            }
        }
        Ok(Reach { configs, parent, edges })
    }

    fn path_to(&self, reach: &Reach, mut j: usize) -> Vec<Step> {
        let mut steps = Vec::new();
        while let Some((i, k)) = reach.parent[j] {
            steps.push(Step { interaction: self.source[k].clone(), target: self.decode(&reach.configs[j]) });
            j = i;
        }
        steps.reverse();
        steps
    }

    fn index_set(&self, q: &StateSet) -> Vec<bool> {
        let mut v = vec![false; self.n_states];
        for (n, s) in q {
            if let Some(k) = self.index_of(n, s) {
                v[k] = true;
            }
        }
        v
    }

    fn state_set(&self, v: &[bool]) -> StateSet {
        v.iter().enumerate().filter(|(_, b)| **b).map(|(k, _)| self.pair(k)).collect()
    }

    /// Remove pre-states of violating interactions until none is left.
    fn max_trap(&self, mut q: Vec<bool>) -> Vec<bool> {
        loop {
            let mut changed = false;
            for inter in &self.interactions {
                let pre_hit = inter.iter().any(|p| q[self.istate(p.inst, p.pre)]);
                let post_hit = inter.iter().any(|p| q[self.istate(p.inst, p.post)]);
                if pre_hit && !post_hit {
                    for p in inter {
                        q[self.istate(p.inst, p.pre)] = false;
                    }
                    changed = true;
                }
            }
            if !changed {
                return q;
            }
        }
    }

    fn marked(&self, q: &[bool]) -> bool {
        self.initial.iter().enumerate().any(|(i, &s)| q[self.istate(i, s)])
    }

    /// Greatest trap contained in `q`.
    pub fn maximal_trap_within(&self, q: &StateSet) -> StateSet {
        self.state_set(&self.max_trap(self.index_set(q)))
    }

    pub fn is_trap(&self, theta: &StateSet) -> bool {
        let q = self.index_set(theta);
        self.interactions.iter().all(|inter| {
            !inter.iter().any(|p| q[self.istate(p.inst, p.pre)]) || inter.iter().any(|p| q[self.istate(p.inst, p.post)])
        })
    }

    pub fn is_marked(&self, theta: &StateSet) -> bool {
        self.marked(&self.index_set(theta))
    }

    pub fn all_instance_states(&self) -> StateSet {
        self.state_set(&vec![true; self.n_states])
    }

    fn in_theta(&self, c: &[u8]) -> bool {
        let mut q = vec![true; self.n_states];
        for (i, &s) in c.iter().enumerate() {
            q[self.istate(i, s)] = false;
        }
        !self.marked(&self.max_trap(q))
    }

    /// `σ` meets every marked trap.
    pub fn trap_invariant_holds(&self, sigma: &Configuration) -> Result<bool, OracleError> {
        Ok(self.in_theta(&self.encode(sigma)?))
    }

    /// Every configuration, in lexicographic order of state indices.
    pub fn all_configurations(&self) -> Vec<Configuration> {
        let mut out = Vec::new();
        let mut c = vec![0u8; self.nodes.len()];
        loop {
            out.push(self.decode(&c));
            let mut i = c.len();
            loop {
                if i == 0 {
                    return out;
                }
                i -= 1;
                c[i] += 1;
                if (c[i] as usize) < self.state_count(i) {
                    break;
                }
                c[i] = 0;
            }
        }
    }

    /// One marked trap per initial instance-state, shrunk greedily to be
    /// minimal among traps containing that state.
    pub fn marked_traps(&self) -> Vec<StateSet> {
        let mut out: Vec<Vec<bool>> = Vec::new();
        for (i, &s) in self.initial.iter().enumerate() {
            let keep = self.istate(i, s);
            let mut q = self.max_trap(vec![true; self.n_states]);
            if !q[keep] {
                continue;
            }
            for k in 0..self.n_states {
                if k == keep || !q[k] {
                    continue;
                }
                let mut smaller = q.clone();
                smaller[k] = false;
                let t = self.max_trap(smaller);
                if t[keep] {
                    q = t;
                }
            }
            if !out.contains(&q) {
                out.push(q);
            }
        }
        out.iter().map(|q| self.state_set(q)).collect()
    }

    fn matches_pattern(&self, c: &[u8], pattern: &[(String, String)]) -> bool {
        fn place(this: &Compiled, c: &[u8], pattern: &[(String, String)], used: &mut Vec<bool>) -> bool {
            let Some(((ty, st), rest)) = pattern.split_first() else { return true };
            for i in 0..c.len() {
                let comp = this.component(i);
                if used[i] || comp.name != *ty || comp.states[c[i] as usize] != *st {
                    continue;
                }
                used[i] = true;
                let ok = place(this, c, rest, used);
                used[i] = false;
                if ok {
                    return true;
                }
            }
            false
        }
        place(self, c, pattern, &mut vec![false; c.len()])
    }

    fn is_bad(&self, c: &[u8], queries: &[SafetyQuery]) -> bool {
        queries.iter().any(|q| match q {
            SafetyQuery::Deadlock => self.is_deadlocked(c),
            SafetyQuery::Pattern(p) => self.matches_pattern(c, p),
        })
    }

    pub fn is_bad_configuration(&self, sigma: &Configuration, queries: &[SafetyQuery]) -> Result<bool, OracleError> {
        Ok(self.is_bad(&self.encode(sigma)?, queries))
    }

    /// A bad configuration inside the trap invariant, if any.
    fn theta_bad_candidate(&self, query: &SafetyQuery) -> Option<Vec<u8>> {
        match query {
            SafetyQuery::Deadlock => {
                let mut c = vec![0u8; self.nodes.len()];
                self.search(&mut c, 0, &vec![None; self.nodes.len()], true).then_some(c)
            }
            SafetyQuery::Pattern(items) => {
                let mut fixed = vec![None; self.nodes.len()];
                self.place_pattern(items, &mut fixed)
            }
        }
    }

    fn place_pattern(&self, items: &[(String, String)], fixed: &mut Vec<Option<u8>>) -> Option<Vec<u8>> {
        let Some(((ty, st), rest)) = items.split_first() else {
            let mut c = vec![0u8; self.nodes.len()];
            return self.search(&mut c, 0, fixed, false).then_some(c);
        };
        for i in 0..self.nodes.len() {
            let comp = self.component(i);
            if fixed[i].is_some() || comp.name != *ty {
                continue;
            }
            let Some(s) = comp.state_index(st) else { continue };
            fixed[i] = Some(s as u8);
            let found = self.place_pattern(rest, fixed);
            fixed[i] = None;
            if found.is_some() {
                return found;
            }
        }
        None
    }

    /// Backtracking over instance states; prunes partial assignments whose
    /// assigned complement already contains a marked trap, and (for
    /// deadlocks) those enabling an interaction.
    fn search(&self, c: &mut Vec<u8>, i: usize, fixed: &[Option<u8>], deadlock: bool) -> bool {
        if i == c.len() {
            return self.in_theta(c);
        }
        let choices: Vec<u8> = match fixed[i] {
            Some(s) => vec![s],
            None => (0..self.state_count(i) as u8).collect(),
        };
        for s in choices {
            c[i] = s;
            if deadlock && self.closing[i].iter().any(|&k| self.enabled_at(c, k)) {
                continue;
            }
            let mut q = vec![false; self.n_states];
            for (j, &sj) in c.iter().enumerate().take(i + 1) {
                for t in 0..self.state_count(j) as u8 {
                    q[self.istate(j, t)] = t != sj;
                }
            }
            if self.marked(&self.max_trap(q)) {
                continue;
            }
            if self.search(c, i + 1, fixed, deadlock) {
                return true;
            }
        }
        false
    }

    /// Exact reachability plus the trap method for the given queries.
    pub fn verify(&self, queries: &[SafetyQuery], limit: usize) -> GroundReport {
        let exact = match self.reachable(limit) {
            Err(_) => Exact::Overflow { limit },
            Ok(reach) => match (0..reach.configs.len()).find(|&j| self.is_bad(&reach.configs[j], queries)) {
                Some(j) => Exact::Unsafe { witness: self.path_to(&reach, j) },
                None => Exact::Safe { explored: reach.configs.len() },
            },
        };
        let trap = match queries.iter().find_map(|q| self.theta_bad_candidate(q)) {
            None => TrapOutcome::Proved,
            Some(c) => TrapOutcome::Inconclusive { candidate: self.decode(&c) },
        };
        GroundReport { exact, trap }
    }
}

pub struct Reach {
    pub configs: Vec<Vec<u8>>,
    parent: Vec<Option<(usize, usize)>>,
    /// `(from, interaction, to)` by index.
    pub edges: Vec<(usize, usize, usize)>,
}

impl Reach {
    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Step {
    pub interaction: Interaction,
    pub target: Configuration,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum Exact {
    Safe { explored: usize },
    Unsafe { witness: Vec<Step> },
    Overflow { limit: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum TrapOutcome {
    Proved,
    Inconclusive { candidate: Configuration },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GroundReport {
    pub exact: Exact,
    pub trap: TrapOutcome,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    TrapInvariant,
    Exact,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Safe(Method),
    Unsafe(Vec<Step>),
    Inconclusive,
}

impl GroundReport {
    pub fn verdict(&self) -> Verdict {
        match (&self.exact, &self.trap) {
            (Exact::Unsafe { witness }, _) => Verdict::Unsafe(witness.clone()),
            (_, TrapOutcome::Proved) => Verdict::Safe(Method::TrapInvariant),
            (Exact::Safe { .. }, _) => Verdict::Safe(Method::Exact),
            _ => Verdict::Inconclusive,
        }
    }
}

pub fn verify_ground(g: &GroundSystem, queries: &[SafetyQuery], limit: usize) -> Result<GroundReport, OracleError> {
    Ok(Compiled::new(g)?.verify(queries, limit))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::load;
    use crate::rewriting::{enumerate_trees, ground_system};

    const RING: &str = "
        component CType { ports out, in; states q0 init, q1; rule q0 -out-> q1; rule q1 -in-> q0; }
        Chain(x1, x2) <- < out(x1).in(x2) > ( CType(x1), CType(x2) );
        Chain(x1, x2) <- new z . < out(x1).in(z) > ( CType(x1), Chain(z, x2) );
        root new y1 . new y2 . < out(y2).in(y1) > ( Chain(y1, y2) );
    ";

    const TOKEN_RING: &str = "
        component Elem { ports out, in; states e0, e1 init; rule e0 -out-> e1; rule e1 -in-> e0; }
        component Head { ports hout, hin; states h0 init, h1; rule h0 -hout-> h1; rule h1 -hin-> h0; }
        Chain(x1, x2) <- < out(x1).in(x2) > ( Elem(x1), Elem(x2) );
        root new h . new y1 . new y2 . < hout(h).in(y1) + out(y2).hin(h) > ( Head(h), Chain(y1, y2) );
    ";

    fn compiled(text: &str, size: usize) -> Compiled {
        let m = load(text).unwrap();
        let t = enumerate_trees(&m.system, 12).find(|t| ground_system(&m.system, t).unwrap().instances.len() == size).unwrap();
        Compiled::new(&ground_system(&m.system, &t).unwrap()).unwrap()
    }

    fn s(pairs: &[(&Compiled, usize, &str)]) -> StateSet {
        pairs.iter().map(|(c, i, st)| (c.nodes[*i].clone(), st.to_string())).collect()
    }

    #[test]
    fn ring_of_three_is_stuck() {
        let c = compiled(RING, 3);
        let init = c.initial_configuration();
        for pi in c.interactions() {
            assert!(!c.enabled(&init, pi).unwrap());
        }
        assert!(c.deadlocked(&init).unwrap());
        assert_eq!(c.reachable(10).unwrap().len(), 1);
        let r = c.verify(&[SafetyQuery::Deadlock], DEFAULT_LIMIT);
        assert_eq!(r.verdict(), Verdict::Unsafe(Vec::new()));
    }

    #[test]
    fn token_ring_moves_one_token() {
        let c = compiled(TOKEN_RING, 3);
        let reach = c.reachable(100).unwrap();
        assert_eq!(reach.len(), 3);
        for cfg in &reach.configs {
            assert!(!c.is_deadlocked(cfg));
            assert!(c.in_theta(cfg));
        }
        // fire then fire back along the ring returns to the start
        let mut sigma = c.initial_configuration();
        for _ in 0..3 {
            let pi = c.interactions().iter().find(|pi| c.enabled(&sigma, pi).unwrap()).unwrap().clone();
            sigma = c.fire(&sigma, &pi).unwrap();
        }
        assert_eq!(sigma, c.initial_configuration());
        let no_token: Configuration = c.initial_configuration().into_iter().map(|(n, st)| (n, if st == "h0" { "h1".into() } else { st })).collect();
        assert!(!c.trap_invariant_holds(&no_token).unwrap());
        assert_eq!(c.verify(&[SafetyQuery::Deadlock], DEFAULT_LIMIT).verdict(), Verdict::Safe(Method::TrapInvariant));
    }

    #[test]
    fn unknown_interaction_rejected() {
        let c = compiled(TOKEN_RING, 3);
        let bogus: Interaction = BTreeSet::from([("out".to_string(), Node::root())]);
        assert_eq!(c.enabled(&c.initial_configuration(), &bogus), Err(OracleError::UnknownInteraction(bogus)));
    }

    #[test]
    fn maximal_trap_on_two_ring() {
        let c = compiled(RING, 2);
        // every interaction puts a participant into q1 and one into q0
        let all = c.all_instance_states();
        assert_eq!(c.maximal_trap_within(&all), all);
        assert!(c.maximal_trap_within(&StateSet::new()).is_empty());
        // {q0(a), q0(b)}: out(a).in(b) empties q0(a) and fills q0(b), so it is a trap
        let q0s = s(&[(&c, 0, "q0"), (&c, 1, "q0")]);
        assert_eq!(c.maximal_trap_within(&q0s), q0s);
        // a single q1 is left by `in` and refilled only by `out` of the other side
        assert!(c.maximal_trap_within(&s(&[(&c, 0, "q1")])).is_empty());
        for theta in c.marked_traps() {
            assert!(c.is_trap(&theta) && c.is_marked(&theta));
        }
    }

    #[test]
    fn pattern_query_is_excluded_only_by_reachability() {
        let c = compiled(TOKEN_RING, 3);
        let q = [SafetyQuery::Pattern(vec![("Elem".into(), "e0".into()), ("Elem".into(), "e0".into())])];
        let r = c.verify(&q, DEFAULT_LIMIT);
        assert!(matches!(r.exact, Exact::Safe { explored: 3 }));
        assert!(matches!(r.trap, TrapOutcome::Inconclusive { .. }));
        assert_eq!(r.verdict(), Verdict::Safe(Method::Exact));
    }

    #[test]
    fn overflow_is_reported() {
        let c = compiled(TOKEN_RING, 3);
        assert_eq!(c.reachable(2).err(), Some(OracleError::Overflow(2)));
        assert!(matches!(c.verify(&[SafetyQuery::Deadlock], 2).exact, Exact::Overflow { limit: 2 }));
    }
}
