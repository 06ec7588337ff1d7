//! Property tests: grammar round-trips, the nonempty-language guarantee,
//! render-size monotonicity, and the CQ/LCQ identities.

use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::One;
use proptest::prelude::*;

use cq_core::enumerator::Enumeration;
use cq_core::grammar::{load_grammar, validate};
use cq_core::harness::{CampaignResult, CompileResult, Verdict, VerdictCounts};
use cq_core::metrics::{compute_cq, compute_lcq, lcq_curve, MetricParams};
use cq_core::oracle;
use cq_core::treegrammar::{compile_to_rtg, render, size_of, DerivationTree, RenderRules};

// ---- random grammar sources ------------------------------------------------

/// A random (possibly empty-language) grammar over up to 4 nonterminals and
/// a small terminal pool, emitted as source text.
fn grammar_source() -> impl Strategy<Value = String> {
    let nt_count = 1..=4usize;
    nt_count.prop_flat_map(|n| {
        let names: Vec<String> = (0..n).map(|i| format!("N{i}")).collect();
        let symbol = prop_oneof![
            (0..n).prop_map({
                let names = names.clone();
                move |i| names[i].clone()
            }),
            prop_oneof![
                Just("\"a\"".to_string()),
                Just("\"b\"".to_string()),
                Just("\"(\"".to_string()),
                Just("\")\"".to_string()),
                Just("\"long_token\"".to_string()),
            ],
        ];
        let alt = prop::collection::vec(symbol, 0..4).prop_map(|syms| syms.join(" "));
        let rule_body = prop::collection::vec(alt, 1..4).prop_map(|alts| alts.join(" | "));
        prop::collection::vec(rule_body, n..=n).prop_map(move |bodies| {
            names
                .iter()
                .zip(&bodies)
                .map(|(name, body)| format!("{name} : {body} ;"))
                .collect::<Vec<_>>()
                .join("\n")
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn print_parse_round_trip(src in grammar_source()) {
        let g = load_grammar(&src).unwrap();
        let reparsed = load_grammar(&g.to_string()).unwrap();
        prop_assert_eq!(g, reparsed);
    }

    #[test]
    fn nonempty_language_enumerates_a_program(src in grammar_source()) {
        let g = load_grammar(&src).unwrap();
        let report = validate(&g);
        if !report.empty_language {
            let rtg = Arc::new(compile_to_rtg(&g).unwrap());
            let e = Enumeration::new(rtg.clone());
            // With at most 4 nonterminals and 3-symbol right-hand sides, the
            // smallest complete tree is comfortably below 256 constructors.
            prop_assert!(e.total_below(256) >= BigUint::one());
            let tree = e.index_to_tree(&BigUint::from(0u32)).unwrap();
            let _program = render(&tree, &rtg, &RenderRules::default());
        }
    }
}

// ---- subtree replacement monotonicity ---------------------------------------

fn subtree_positions(tree: &DerivationTree) -> usize {
    let mut count = 0;
    let mut stack = vec![tree];
    while let Some(node) = stack.pop() {
        count += 1;
        stack.extend(node.children.iter());
    }
    count
}

enum Replace {
    Done(DerivationTree),
    WrongNonterminal,
    NotHere,
}

/// Replaces the preorder `pos`-th node with `replacement`, provided both
/// root at the same nonterminal.
fn replace_at(
    tree: &DerivationTree,
    rtg: &cq_core::treegrammar::RegularTreeGrammar,
    pos: &mut usize,
    replacement: &DerivationTree,
) -> Replace {
    if *pos == 0 {
        return if rtg.rule(tree.rule).lhs == rtg.rule(replacement.rule).lhs {
            Replace::Done(replacement.clone())
        } else {
            Replace::WrongNonterminal
        };
    }
    *pos -= 1;
    for (i, child) in tree.children.iter().enumerate() {
        match replace_at(child, rtg, pos, replacement) {
            Replace::Done(new_child) => {
                let mut children = tree.children.clone();
                children[i] = new_child;
                return Replace::Done(DerivationTree {
                    rule: tree.rule,
                    children,
                });
            }
            Replace::WrongNonterminal => return Replace::WrongNonterminal,
            Replace::NotHere => {}
        }
    }
    Replace::NotHere
}

fn nth_subtree<'a>(tree: &'a DerivationTree, pos: &mut usize) -> Option<&'a DerivationTree> {
    if *pos == 0 {
        return Some(tree);
    }
    *pos -= 1;
    for child in &tree.children {
        if let Some(node) = nth_subtree(child, pos) {
            return Some(node);
        }
    }
    None
}

#[test]
fn size_monotone_under_larger_subtree() {
    for sep in ["", " ", "  "] {
        let rules = RenderRules::with_separator(sep);
        let g = load_grammar(r#"E : E "+" T | T ; T : "x" | "(" E ")" ;"#).unwrap();
        let rtg = Arc::new(compile_to_rtg(&g).unwrap());
        let trees = oracle::trees_up_to_count(&rtg, 6);
        let pool = oracle::trees_up_to_count(&rtg, 6);
        for tree in &trees {
            let base = size_of(&render(tree, &rtg, &rules));
            for replacement in &pool {
                let repl_size = size_of(&render(replacement, &rtg, &rules));
                for pos in 0..subtree_positions(tree) {
                    let mut cursor = pos;
                    let modified = match replace_at(tree, &rtg, &mut cursor, replacement) {
                        Replace::Done(t) => t,
                        _ => continue,
                    };
                    let mut cursor = pos;
                    let original = nth_subtree(tree, &mut cursor).unwrap();
                    let orig_size = size_of(&render(original, &rtg, &rules));
                    if repl_size > orig_size {
                        let new_size = size_of(&render(&modified, &rtg, &rules));
                        assert!(
                            new_size >= base,
                            "sep={sep:?} pos={pos} shrank {base} -> {new_size}"
                        );
                    }
                }
            }
        }
    }
}

// ---- metric identities -------------------------------------------------------

fn campaign_from(sizes_verdicts: &[(u64, bool)]) -> CampaignResult {
    let mut counts = VerdictCounts::default();
    let results = sizes_verdicts
        .iter()
        .enumerate()
        .map(|(i, (size, ok))| {
            let verdict = if *ok { Verdict::Accepted } else { Verdict::Rejected };
            counts.add(verdict);
            CompileResult {
                index: BigUint::from(i),
                bucket: (size / 16) as usize,
                size: *size,
                verdict,
                exit_code: Some(if *ok { 0 } else { 1 }),
                duration_ms: 0,
                stderr_head: String::new(),
            }
        })
        .collect();
    CampaignResult {
        language: "prop".to_string(),
        run_id: "seed0-0".to_string(),
        results,
        counts,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    /// Partitioning [0, S) into windows of width 2e+1 and weighting each
    /// defined LCQ by its window population reproduces CQ exactly.
    #[test]
    fn cq_equals_weighted_lcq_partition(
        entries in prop::collection::vec((0u64..96, any::<bool>()), 1..60),
        epsilon in 0u64..6,
    ) {
        let campaign = campaign_from(&entries);
        let params = MetricParams { size_bound: 96, epsilon, lcq_step: 1 };
        let cq = compute_cq(&campaign).unwrap();
        let width = 2 * epsilon + 1;
        let mut weighted = 0.0f64;
        let mut covered = 0u64;
        let mut j = 0u64;
        while j * width < 96 {
            let center = j * width + epsilon;
            let lo = j * width;
            let hi = j * width + 2 * epsilon;
            let pop = campaign
                .results
                .iter()
                .filter(|r| r.size >= lo && r.size <= hi)
                .count() as u64;
            if let Some(lcq) = compute_lcq(&campaign, center, &params) {
                weighted += lcq * pop as f64;
                covered += pop;
            } else {
                prop_assert_eq!(pop, 0);
            }
            j += 1;
        }
        prop_assert_eq!(covered, campaign.results.len() as u64);
        let reconstructed = weighted / covered as f64;
        prop_assert!((reconstructed - cq).abs() < 1e-9, "{} vs {}", reconstructed, cq);
    }

    /// Flipping any rejected verdict to accepted never decreases CQ or any
    /// defined LCQ.
    #[test]
    fn monotone_response_to_verdict_flips(
        entries in prop::collection::vec((0u64..96, any::<bool>()), 2..40),
        flip in any::<prop::sample::Index>(),
    ) {
        let campaign = campaign_from(&entries);
        let mut flipped = entries.clone();
        let at = flip.index(flipped.len());
        flipped[at].1 = true;
        let after = campaign_from(&flipped);
        let params = MetricParams { size_bound: 96, epsilon: 5, lcq_step: 7 };
        prop_assert!(compute_cq(&after).unwrap() >= compute_cq(&campaign).unwrap() - 1e-12);
        for (before_pt, after_pt) in lcq_curve(&campaign, &params)
            .iter()
            .zip(lcq_curve(&after, &params).iter())
        {
            prop_assert_eq!(before_pt.window_population, after_pt.window_population);
            match (before_pt.lcq, after_pt.lcq) {
                (Some(b), Some(a)) => prop_assert!(a >= b - 1e-12),
                (None, None) => {}
                other => prop_assert!(false, "definedness changed: {:?}", other),
            }
        }
    }

    /// Duplicating every result a constant number of times leaves CQ
    /// unchanged.
    #[test]
    fn cq_scale_invariance(
        entries in prop::collection::vec((0u64..96, any::<bool>()), 1..30),
        factor in 2usize..5,
    ) {
        let single = compute_cq(&campaign_from(&entries)).unwrap();
        let mut scaled = Vec::new();
        for _ in 0..factor {
            scaled.extend(entries.iter().copied());
        }
        let multi = compute_cq(&campaign_from(&scaled)).unwrap();
        prop_assert!((single - multi).abs() < 1e-9);
    }
}
