//! Algebraic laws of the term layer, the parser and the normalizer.

use std::collections::BTreeSet;

use archtrap_core::corpus::CORPUS;
use archtrap_core::dsl::{parse_spec, pretty_print};
use archtrap_core::node::Node;
use archtrap_core::normalize::normalize;
use archtrap_core::pipeline::load;
use archtrap_core::rewriting::{canonical_ground_term, enumerate_trees, param_sets_to_tree, tree_to_param_sets};
use archtrap_core::system::RewritingSystem;
use archtrap_core::term::{arch_semantics, flatten, flatten_steps, ArchExpr, ArchSpec, FlatTerm, PortRef, Substitution, Symbol, Term, Var};
use proptest::prelude::*;

fn node() -> impl Strategy<Value = Node> {
    prop::collection::vec(0u8..2, 0..3).prop_map(Node::from_path)
}

fn ground_port() -> impl Strategy<Value = ArchExpr> {
    (prop::sample::select(vec!["a", "b", "c"]), node()).prop_map(|(p, w)| ArchExpr::port(p, Symbol::Id(w)))
}

fn arch_expr() -> impl Strategy<Value = ArchExpr> {
    ground_port().prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| ArchExpr::sum(a, b)),
            (inner.clone(), inner).prop_map(|(a, b)| ArchExpr::prod(a, b)),
        ]
    })
}

fn small_arch() -> impl Strategy<Value = ArchSpec> {
    prop::collection::vec(prop::collection::vec((prop::sample::select(vec!["a", "b"]), node()), 1..3), 0..3).prop_map(
        |products| {
            ArchSpec::from_products(
                products.into_iter().map(|p| p.into_iter().map(|(q, w)| PortRef::new(q, Symbol::Id(w))).collect()).collect(),
            )
        },
    )
}

/// Binder-free, predicate-free terms with nested applications.
fn nested_term() -> impl Strategy<Value = Term> {
    node().prop_map(|w| Term::instance("C", Symbol::Id(w))).prop_recursive(3, 12, 3, |inner| {
        (small_arch(), prop::collection::vec(inner, 1..4)).prop_map(|(a, args)| Term::apply(a, args))
    })
}

fn var_or_id() -> impl Strategy<Value = Symbol> {
    prop_oneof![prop::sample::select(vec!["x", "y", "z"]).prop_map(Symbol::var), node().prop_map(Symbol::Id)]
}

fn substitution() -> impl Strategy<Value = Substitution> {
    prop::collection::btree_map(prop::sample::select(vec!["x", "y", "z"]).prop_map(Var::new), var_or_id(), 0..3)
        .prop_map(|m| Substitution(m))
}

/// Terms over free variables only, so substitution never meets a binder.
fn open_term() -> impl Strategy<Value = Term> {
    let atom = prop_oneof![
        var_or_id().prop_map(|s| Term::instance("C", s)),
        prop::collection::vec(var_or_id(), 1..3).prop_map(|args| Term::pred("P", args)),
    ];
    atom.prop_recursive(2, 8, 3, |inner| {
        (prop::collection::vec(var_or_id(), 1..3), prop::collection::vec(inner, 1..3)).prop_map(|(ports, args)| {
            let product = ports.into_iter().map(|s| PortRef::new("a", s)).collect();
            Term::apply(ArchSpec::from_products(vec![product]), args)
        })
    })
}

fn terminal_forms(t: &Term) -> Vec<Term> {
    let mut out = Vec::new();
    let mut frontier = vec![t.clone()];
    let mut seen = BTreeSet::new();
    while let Some(u) = frontier.pop() {
        let next = flatten_steps(&u);
        if next.is_empty() {
            out.push(u);
            continue;
        }
        for n in next {
            if seen.insert(format!("{n}")) {
                frontier.push(n);
            }
        }
    }
    out
}

fn atoms_of(t: &Term) -> Vec<String> {
    let mut v: Vec<String> = FlatTerm::of(t).atoms.iter().map(|a| a.to_string()).collect();
    v.sort();
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn sum_of_products_preserves_semantics(e in arch_expr()) {
        prop_assert_eq!(e.semantics().unwrap(), arch_semantics(&e.to_sop()).unwrap());
    }

    #[test]
    fn flattening_is_confluent(t in nested_term()) {
        let canon = flatten(&t).unwrap();
        let want = arch_semantics(&FlatTerm::of(&canon).arch).unwrap();
        for u in terminal_forms(&t) {
            prop_assert_eq!(arch_semantics(&FlatTerm::of(&u).arch).unwrap(), want.clone());
            prop_assert_eq!(atoms_of(&u), atoms_of(&canon));
        }
    }

    #[test]
    fn substitutions_compose(t in open_term(), s1 in substitution(), s2 in substitution()) {
        prop_assert_eq!(s1.then(&s2).apply(&t), s2.apply(&s1.apply(&t)));
    }

    #[test]
    fn node_text_round_trip(w in prop::collection::vec(0u8..12, 0..6)) {
        let n = Node::from_path(w);
        prop_assert_eq!(n.to_string().parse::<Node>().unwrap(), n);
    }

    #[test]
    fn generated_specs_print_and_parse_back(
        states in 1usize..4,
        moves in prop::collection::vec((0usize..4, 0usize..4), 1..4),
        init in 0usize..4,
        links in prop::collection::vec((0usize..4, 0usize..4), 1..3),
    ) {
        let st = |i: usize| format!("s{}", i % states);
        let mut text = format!("component C {{ ports {}; states ", (0..moves.len()).map(|i| format!("p{i}")).collect::<Vec<_>>().join(", "));
        text += &(0..states).map(|i| if i == init % states { format!("s{i} init") } else { format!("s{i}") }).collect::<Vec<_>>().join(", ");
        text += "; ";
        for (i, (a, b)) in moves.iter().enumerate() {
            text += &format!("rule {} -p{i}-> {}; ", st(*a), st(*b));
        }
        text += "}\n";
        let port = |i: usize| format!("p{}", i % moves.len());
        let arch: Vec<String> = links.iter().map(|(a, b)| format!("{}(x1).{}(x2)", port(*a), port(*b))).collect();
        text += &format!("Pair(x1, x2) <- < {} > ( C(x1), C(x2) );\n", arch.join(" + "));
        text += "root new y1 . new y2 . Pair(y1, y2);\ncheck deadlock;\n";
        let spec = parse_spec(&text).unwrap();
        let printed = pretty_print(&spec);
        prop_assert_eq!(parse_spec(&printed).unwrap(), spec);
    }
}

#[test]
fn corpus_specs_print_and_parse_back() {
    for (name, text) in CORPUS {
        let spec = parse_spec(text).unwrap();
        let printed = pretty_print(&spec);
        assert_eq!(parse_spec(&printed).unwrap(), spec, "{name}");
        assert_eq!(pretty_print(&parse_spec(&printed).unwrap()), printed, "{name}");
    }
}

#[test]
fn parameter_sets_round_trip_up_to_nine_nodes() {
    for (name, text) in CORPUS {
        let m = load(text).unwrap();
        let mut n = 0;
        for t in enumerate_trees(&m.system, 9) {
            assert_eq!(param_sets_to_tree(&m.system, &tree_to_param_sets(&m.system, &t)).as_ref(), Ok(&t), "{name}");
            n += 1;
        }
        assert!(n > 0, "{name}");
    }
}

#[test]
fn normalizing_twice_changes_nothing() {
    for (name, text) in CORPUS {
        let m = load(text).unwrap();
        let once = &m.normalized;
        let user = RewritingSystem::new(once.system.user_rules().cloned().collect());
        let twice = normalize(&user, once.root()).unwrap();
        assert_eq!(twice.system.rules.len(), once.system.rules.len(), "{name}");
        // every predicate keeps a single copy
        let copies: Vec<&String> = twice.origin.values().collect();
        let heads: BTreeSet<&String> = once.system.rules.iter().map(|r| &r.head).collect();
        assert_eq!(copies.len(), heads.len(), "{name}");
        assert_eq!(copies.into_iter().collect::<BTreeSet<_>>(), heads, "{name}");
        let keys = |sys: &RewritingSystem| -> BTreeSet<_> {
            let p = archtrap_core::rewriting::PreparedSystem::new(m.spec.components.clone(), sys).unwrap();
            enumerate_trees(&p, 7).filter_map(|t| canonical_ground_term(&p, &t).unwrap()).map(|g| g.up_to_renaming()).collect()
        };
        assert_eq!(keys(&twice.system), keys(&once.system), "{name}");
    }
}
