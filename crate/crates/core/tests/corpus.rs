//! Ground verdicts of the bundled systems against closed forms.

use archtrap_core::corpus::CORPUS;
use archtrap_core::oracle::{Compiled, Exact, TrapOutcome};
use archtrap_core::pipeline::{load, Model};

const LIMIT: usize = 1_000_000;

fn model(name: &str) -> Model {
    let text = CORPUS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t).expect("bundled");
    load(text).unwrap()
}

/// `(trees, reachable, unsafe, trap proves)` for every instance of `size`.
fn profile(m: &Model, size: usize) -> Vec<(usize, usize, bool, bool)> {
    let trees = m.trees_of_size(size, 12).unwrap();
    let n = trees.len();
    trees
        .iter()
        .map(|(_, g)| {
            let c = Compiled::new(g).unwrap();
            let reach = c.reachable(LIMIT).unwrap().len();
            let report = c.verify(&m.spec.queries, LIMIT);
            let bad = matches!(report.exact, Exact::Unsafe { .. });
            assert!(!matches!(report.exact, Exact::Overflow { .. }));
            (n, reach, bad, report.trap == TrapOutcome::Proved)
        })
        .collect()
}

fn recurrence(a: usize, b: usize, n: usize) -> usize {
    // x(2) = a, x(3) = b, x(k) = 2 x(k-1) + x(k-2)
    let (mut x, mut y) = (a, b);
    for _ in 2..n {
        (x, y) = (y, 2 * y + x);
    }
    x
}

fn lucas(n: usize) -> usize {
    let (mut x, mut y) = (2, 1);
    for _ in 0..n {
        (x, y) = (y, x + y);
    }
    x
}

fn catalan(n: usize) -> usize {
    (0..n).fold(1, |c, k| c * 2 * (2 * k + 1) / (k + 2))
}

fn assert_family(name: &str, sizes: impl IntoIterator<Item = usize>, want: impl Fn(usize) -> (usize, usize, bool, bool)) {
    let m = model(name);
    for size in sizes {
        let got = profile(&m, size);
        assert!(!got.is_empty(), "{name} size {size}");
        for g in got {
            assert_eq!(g, want(size), "{name} size {size}");
        }
    }
}

#[test]
fn ring_deadlocks_at_once() {
    assert_family("ring", 2..=6, |_| (1, 1, true, false));
}

#[test]
fn token_ring_passes_one_token_around() {
    assert_family("token-ring", 2..=6, |n| (1, n + 1, false, false));
}

#[test]
fn star_is_proved_by_traps() {
    assert_family("star", 2..=6, |n| (1, n + 1, false, true));
}

#[test]
fn ring_star_is_safe_but_not_trap_provable() {
    assert_family("ring-star", 2..=6, |n| (1, 2 * n + 2, false, false));
}

#[test]
fn symmetric_philosophers_deadlock() {
    // companion Pell numbers
    assert_family("alt-philo-sym", 2..=6, |n| (1, recurrence(6, 14, n), true, false));
}

#[test]
fn asymmetric_philosophers_are_safe() {
    // Pell numbers; traps alone only settle two philosophers
    assert_family("alt-philo-asym", 2..=6, |n| (1, recurrence(5, 12, n), false, n == 2));
}

#[test]
fn synchronised_philosophers_are_proved_by_traps() {
    assert_family("sync-philo", 2..=6, |n| (1, lucas(n), false, true));
}

#[test]
fn tree_families_are_proved_by_traps() {
    assert_family("tree-dfs", 2..=6, |n| (catalan(n - 1), 4 * n - 2, false, true));
    // the root serves at most one of the n callers
    assert_family("tree-back-root", [2, 4, 6], |n| (catalan(n / 2), n + 1, false, true));
    assert_family("tree-linked-leaves", [4], |_| (1, 8, false, true));
    assert_family("tree-linked-leaves", [6], |_| (2, 32, false, true));
}

#[test]
fn odd_sizes_do_not_occur_where_shapes_forbid_them() {
    assert!(model("tree-back-root").trees_of_size(3, 12).unwrap().is_empty());
    assert!(model("tree-linked-leaves").trees_of_size(5, 12).unwrap().is_empty());
}
