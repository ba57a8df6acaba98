//! Built-in benchmark specifications.

pub const CORPUS: &[(&str, &str)] = &[
    ("ring", include_str!("../../../corpus/ring.pas")),
    ("token-ring", include_str!("../../../corpus/token-ring.pas")),
    ("star", include_str!("../../../corpus/star.pas")),
    ("ring-star", include_str!("../../../corpus/ring-star.pas")),
    ("alt-philo-sym", include_str!("../../../corpus/alt-philo-sym.pas")),
    ("alt-philo-asym", include_str!("../../../corpus/alt-philo-asym.pas")),
    ("sync-philo", include_str!("../../../corpus/sync-philo.pas")),
    ("tree-dfs", include_str!("../../../corpus/tree-dfs.pas")),
    ("tree-back-root", include_str!("../../../corpus/tree-back-root.pas")),
    ("tree-linked-leaves", include_str!("../../../corpus/tree-linked-leaves.pas")),
];

pub fn get(name: &str) -> Option<&'static str> {
    CORPUS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::load;
    use crate::rewriting::{enumerate_trees, ground_system};

    #[test]
    fn every_entry_loads_and_unfolds() {
        for (name, text) in CORPUS {
            let m = load(text).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert!(m.system.kappa <= 2, "{name}");
            let mut any = false;
            for t in enumerate_trees(&m.system, 8) {
                ground_system(&m.system, &t).unwrap_or_else(|e| panic!("{name} {t:?}: {e}"));
                any = true;
            }
            assert!(any, "{name} has no tree of at most 8 nodes");
        }
    }
}
