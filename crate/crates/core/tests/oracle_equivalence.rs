//! Cross-checks the memoized enumeration against the slow reference
//! generator on small instances: counting identity, order agreement, and
//! stratum bijectivity.

use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::{One, Zero};

use cq_core::enumerator::Enumeration;
use cq_core::grammar::load_grammar;
use cq_core::oracle;
use cq_core::treegrammar::{compile_to_rtg, render, RegularTreeGrammar, RenderRules};

const TOYS: &[(&str, &str)] = &[
    (r#"S : "a" | "(" S ")" ;"#, "paren"),
    (r#"S : "x" | S "+" S ;"#, "binary"),
    (r#"E : E "+" T | T ; T : "x" | "(" E ")" ;"#, "expr"),
    ("S : | \"a\" S ;", "epsilon-list"),
    ("S : A A ; A : \"a\" | \"b\" | C ; C : \"c\" C | \"c\" ;", "two-level"),
    (r#"S : "a"* ("b" | "c")? ;"#, "sugared"),
];

fn enumeration(src: &str) -> (Arc<RegularTreeGrammar>, Enumeration) {
    let rtg = Arc::new(compile_to_rtg(&load_grammar(src).unwrap()).unwrap());
    (rtg.clone(), Enumeration::new(rtg))
}

#[test]
fn counting_identity_to_k12() {
    for (src, name) in TOYS {
        let (rtg, e) = enumeration(src);
        for nt in 0..rtg.nonterminals().len() {
            for k in 0..=12u64 {
                let brute = oracle::trees_with_exact_count(&rtg, nt, k).len();
                assert_eq!(
                    e.cardinality(nt, k),
                    BigUint::from(brute),
                    "{name}: nt={nt} k={k}"
                );
            }
        }
    }
}

#[test]
fn order_agreement_to_k12() {
    for (src, name) in TOYS {
        let (rtg, e) = enumeration(src);
        let expected = oracle::trees_up_to_count(&rtg, 12);
        let total = e.total_below(12);
        assert_eq!(total, BigUint::from(expected.len()), "{name}: totals");
        let mut index = BigUint::zero();
        for (i, brute_tree) in expected.iter().enumerate() {
            let tree = e.index_to_tree(&index).unwrap();
            assert_eq!(&tree, brute_tree, "{name}: index {i}");
            index += BigUint::one();
        }
    }
}

#[test]
fn renders_are_distinct_for_unambiguous_toys() {
    // The paren grammar renders every tree uniquely, so the first N rendered
    // programs must be N distinct strings matching the reference order.
    let (rtg, e) = enumeration(TOYS[0].0);
    let rules = RenderRules::with_separator("");
    let brute = oracle::renders_up_to_count(&rtg, &rules, 12);
    let mut seen = std::collections::BTreeSet::new();
    for (i, expected) in brute.iter().enumerate() {
        let tree = e.index_to_tree(&BigUint::from(i)).unwrap();
        let text = render(&tree, &rtg, &rules);
        assert_eq!(&text, expected);
        assert!(seen.insert(text), "duplicate render at index {i}");
    }
    assert_eq!(seen.len(), brute.len());
}

#[test]
fn stratum_offsets_match_reference() {
    for (src, name) in TOYS {
        let (rtg, e) = enumeration(src);
        let mut offset = BigUint::zero();
        for k in 1..=10u64 {
            assert_eq!(e.total_below(k - 1), offset, "{name}: offset before k={k}");
            offset += BigUint::from(oracle::trees_with_exact_count(&rtg, rtg.start(), k).len());
        }
    }
}
