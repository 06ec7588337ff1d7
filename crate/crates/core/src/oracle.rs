//! Slow reference enumerators, kept deliberately independent of the memoized
//! tables in [`crate::enumerator`]. Tests compare the fast path against these
//! on small instances; they are also handy for exhaustively censusing a tiny
//! language by byte size.

use std::collections::BTreeMap;

use crate::grammar::{Grammar, Symbol};
use crate::treegrammar::{render, DerivationTree, RegularTreeGrammar, RenderRules, Slot};

/// All derivation trees rooted at `nt` with exactly `k` constructors, in
/// enumeration order: constructor ordinal, then child-size composition in
/// lexicographic order, then children's local indices left to right.
pub fn trees_with_exact_count(
    rtg: &RegularTreeGrammar,
    nt: usize,
    k: u64,
) -> Vec<DerivationTree> {
    let mut out = Vec::new();
    if k == 0 {
        return out;
    }
    for r in rtg.rules_of(nt) {
        let child_nts: Vec<usize> = rtg.rule(r).child_nts().collect();
        if child_nts.is_empty() {
            if k == 1 {
                out.push(DerivationTree::leaf(r));
            }
            continue;
        }
        for composition in compositions(k - 1, child_nts.len()) {
            let lists: Vec<Vec<DerivationTree>> = child_nts
                .iter()
                .zip(&composition)
                .map(|(&c, &kc)| trees_with_exact_count(rtg, c, kc))
                .collect();
            if lists.iter().any(Vec::is_empty) {
                continue;
            }
            cartesian(&lists, &mut |children| {
                out.push(DerivationTree {
                    rule: r,
                    children: children.to_vec(),
                });
            });
        }
    }
    out
}

/// All derivation trees of the start symbol with at most `k` constructors,
/// smaller strata first.
pub fn trees_up_to_count(rtg: &RegularTreeGrammar, k: u64) -> Vec<DerivationTree> {
    (1..=k)
        .flat_map(|kk| trees_with_exact_count(rtg, rtg.start(), kk))
        .collect()
}

/// Compositions of `total` into `parts` positive summands, lexicographically
/// ascending.
fn compositions(total: u64, parts: usize) -> Vec<Vec<u64>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(parts);
    fn go(total: u64, parts: usize, current: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        if parts == 1 {
            current.push(total);
            out.push(current.clone());
            current.pop();
            return;
        }
        for first in 1..=(total - parts as u64 + 1) {
            current.push(first);
            go(total - first, parts - 1, current, out);
            current.pop();
        }
    }
    if parts > 0 && total >= parts as u64 {
        go(total, parts, &mut current, &mut out);
    }
    out
}

fn cartesian(lists: &[Vec<DerivationTree>], emit: &mut impl FnMut(&[DerivationTree])) {
    fn go(
        lists: &[Vec<DerivationTree>],
        picked: &mut Vec<DerivationTree>,
        emit: &mut impl FnMut(&[DerivationTree]),
    ) {
        if picked.len() == lists.len() {
            emit(picked);
            return;
        }
        for item in &lists[picked.len()] {
            picked.push(item.clone());
            go(lists, picked, emit);
            picked.pop();
        }
    }
    go(lists, &mut Vec::new(), emit);
}

/// Multiset of words derivable from the start symbol in at most
/// `max_applications` leftmost production applications, rendered with
/// `rules`. Word-level counterpart of [`trees_up_to_count`]: leftmost
/// derivations correspond one-to-one with derivation trees.
pub fn leftmost_words(
    grammar: &Grammar,
    rules: &RenderRules,
    max_applications: u64,
) -> Vec<String> {
    #[derive(Clone)]
    struct Form {
        symbols: Vec<Symbol>,
        steps: u64,
    }
    let mut words = Vec::new();
    let mut queue = vec![Form {
        symbols: vec![Symbol::Nonterminal(grammar.start())],
        steps: 0,
    }];
    while let Some(form) = queue.pop() {
        let leftmost = form
            .symbols
            .iter()
            .position(|s| matches!(s, Symbol::Nonterminal(_)));
        match leftmost {
            None => {
                let tokens: Vec<&str> = form
                    .symbols
                    .iter()
                    .map(|s| match s {
                        Symbol::Terminal(id) => grammar.terminal_text(*id),
                        Symbol::Nonterminal(_) => unreachable!(),
                    })
                    .collect();
                words.push(join_tokens(&tokens, rules));
            }
            Some(pos) => {
                if form.steps == max_applications {
                    continue;
                }
                let nt = match form.symbols[pos] {
                    Symbol::Nonterminal(id) => id,
                    Symbol::Terminal(_) => unreachable!(),
                };
                // A completed form needs one application per remaining
                // nonterminal at minimum.
                let nts_left = form
                    .symbols
                    .iter()
                    .filter(|s| matches!(s, Symbol::Nonterminal(_)))
                    .count() as u64;
                if form.steps + nts_left > max_applications {
                    continue;
                }
                for prod in grammar.productions_of(nt) {
                    let mut next = form.symbols[..pos].to_vec();
                    next.extend(prod.rhs.iter().copied());
                    next.extend(form.symbols[pos + 1..].iter().copied());
                    queue.push(Form {
                        symbols: next,
                        steps: form.steps + 1,
                    });
                }
            }
        }
    }
    words
}

fn join_tokens(tokens: &[&str], rules: &RenderRules) -> String {
    // Mirror of the tree renderer, over a flat token list.
    let mut out = String::new();
    for (i, token) in tokens.iter().enumerate() {
        if i > 0 {
            let joined = rules
                .no_space
                .iter()
                .any(|(l, r)| pat_match(l, tokens[i - 1]) && pat_match(r, token));
            if !joined {
                out.push_str(&rules.separator);
            }
        }
        out.push_str(token);
    }
    out
}

fn pat_match(pat: &crate::treegrammar::TokenPat, token: &str) -> bool {
    match pat {
        crate::treegrammar::TokenPat::Any => true,
        crate::treegrammar::TokenPat::Lit(text) => text == token,
    }
}

/// Calls `emit` once per program of the language whose rendered size is below
/// `byte_bound`, enumerating trees directly with byte-budget pruning.
///
/// Only uniform joining is supported: `rules.no_space` must be empty, so that
/// a tree's rendered size decomposes over subtrees.
pub fn for_each_program_below(
    rtg: &RegularTreeGrammar,
    rules: &RenderRules,
    byte_bound: u64,
    emit: &mut impl FnMut(&str),
) {
    assert!(
        rules.no_space.is_empty(),
        "byte-budget census requires a uniform separator"
    );
    let sep = rules.separator.len() as u64;
    // weight(tree) = sum over tokens of len(token) + len(sep); rendered size
    // is weight - len(sep) for nonempty token lists, 0 otherwise. size <
    // byte_bound is then weight <= byte_bound - 1 + len(sep).
    let budget = byte_bound - 1 + sep;

    let nt_count = rtg.nonterminals().len();
    let mut min_weight = vec![u64::MAX; nt_count];
    loop {
        let mut changed = false;
        for (r, rule) in rtg.rules().iter().enumerate() {
            let _ = r;
            let mut total = 0u64;
            let mut ok = true;
            for slot in &rule.template {
                match slot {
                    Slot::FixedTerminal(t) => total += t.len() as u64 + sep,
                    Slot::Child(c) => {
                        if min_weight[*c] == u64::MAX {
                            ok = false;
                            break;
                        }
                        total += min_weight[*c];
                    }
                }
            }
            if ok && total < min_weight[rule.lhs] {
                min_weight[rule.lhs] = total;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    // Per-rule minimum weight of the template suffix from each slot on.
    let suffix_min: Vec<Vec<u64>> = rtg
        .rules()
        .iter()
        .map(|rule| {
            let mut mins = vec![0u64; rule.template.len() + 1];
            for (j, slot) in rule.template.iter().enumerate().rev() {
                let own = match slot {
                    Slot::FixedTerminal(t) => t.len() as u64 + sep,
                    Slot::Child(c) => min_weight[*c],
                };
                mins[j] = mins[j + 1].saturating_add(own);
            }
            mins
        })
        .collect();

    // Depth-first over rules and template slots; tokens accumulate in a
    // shared prefix and the continuation fires once a whole subtree fits.
    struct Gen<'a> {
        rtg: &'a RegularTreeGrammar,
        suffix_min: &'a [Vec<u64>],
        sep: u64,
        prefix: Vec<String>,
    }

    impl Gen<'_> {
        fn nonterminal(&mut self, nt: usize, budget: u64, cont: &mut dyn FnMut(&mut Gen, u64)) {
            for r in self.rtg.rules_of(nt) {
                self.slots(r, 0, budget, 0, cont);
            }
        }

        fn slots(
            &mut self,
            r: usize,
            slot: usize,
            budget: u64,
            used: u64,
            cont: &mut dyn FnMut(&mut Gen, u64),
        ) {
            if used + self.suffix_min[r][slot] > budget {
                return;
            }
            if slot == self.rtg.rule(r).template.len() {
                cont(self, used);
                return;
            }
            match self.rtg.rule(r).template[slot].clone() {
                Slot::FixedTerminal(t) => {
                    let weight = t.len() as u64 + self.sep;
                    self.prefix.push(t);
                    self.slots(r, slot + 1, budget, used + weight, cont);
                    self.prefix.pop();
                }
                Slot::Child(c) => {
                    let child_budget = budget - used - self.suffix_min[r][slot + 1];
                    self.nonterminal(c, child_budget, &mut |gen, child_weight| {
                        gen.slots(r, slot + 1, budget, used + child_weight, cont);
                    });
                }
            }
        }
    }

    if min_weight[rtg.start()] > budget {
        return;
    }
    let mut gen = Gen {
        rtg,
        suffix_min: &suffix_min,
        sep,
        prefix: Vec::new(),
    };
    let separator = rules.separator.clone();
    let mut finish = |gen: &mut Gen, _weight: u64| {
        emit(&gen.prefix.join(&separator));
    };
    gen.nonterminal(rtg.start(), budget, &mut finish);
}

/// Exhaustive census of the language below `byte_bound` bytes, grouped by
/// rendered size.
pub fn byte_census(
    rtg: &RegularTreeGrammar,
    rules: &RenderRules,
    byte_bound: u64,
) -> BTreeMap<u64, Vec<String>> {
    let mut census: BTreeMap<u64, Vec<String>> = BTreeMap::new();
    for_each_program_below(rtg, rules, byte_bound, &mut |text| {
        census
            .entry(crate::treegrammar::size_of(text))
            .or_default()
            .push(text.to_string());
    });
    census
}

/// Rendered texts of [`trees_up_to_count`], convenience for tests.
pub fn renders_up_to_count(
    rtg: &RegularTreeGrammar,
    rules: &RenderRules,
    k: u64,
) -> Vec<String> {
    trees_up_to_count(rtg, k)
        .iter()
        .map(|t| render(t, rtg, rules))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::load_grammar;
    use crate::treegrammar::compile_to_rtg;
    use std::sync::Arc;

    fn rtg(src: &str) -> Arc<RegularTreeGrammar> {
        Arc::new(compile_to_rtg(&load_grammar(src).unwrap()).unwrap())
    }

    #[test]
    fn compositions_are_lexicographic() {
        assert_eq!(
            compositions(4, 2),
            vec![vec![1, 3], vec![2, 2], vec![3, 1]]
        );
        assert_eq!(compositions(2, 3), Vec::<Vec<u64>>::new());
    }

    #[test]
    fn binary_tree_counts_match_catalan() {
        let g = rtg(r#"S : "x" | S "+" S ;"#);
        let counts: Vec<usize> = (1..=11)
            .map(|k| trees_with_exact_count(&g, 0, k).len())
            .collect();
        assert_eq!(counts, vec![1, 0, 1, 0, 2, 0, 5, 0, 14, 0, 42]);
    }

    #[test]
    fn census_matches_direct_render() {
        let g = rtg(r#"S : "a" | "(" S ")" ;"#);
        let rules = RenderRules::with_separator("");
        let census = byte_census(&g, &rules, 16);
        let sizes: Vec<u64> = census.keys().copied().collect();
        assert_eq!(sizes, vec![1, 3, 5, 7, 9, 11, 13, 15]);
        assert!(census.values().all(|v| v.len() == 1));
        assert_eq!(census[&5][0], "((a))");
    }

    #[test]
    fn census_with_space_separator() {
        let g = rtg(r#"S : "x" | S "+" S ;"#);
        let census = byte_census(&g, &RenderRules::default(), 16);
        // sizes 4m+1: 1 leaf, then Catalan many shapes rendering identically
        assert_eq!(census[&1], vec!["x"]);
        assert_eq!(census[&5], vec!["x + x"]);
        assert_eq!(census[&9].len(), 2);
        assert_eq!(census[&13].len(), 5);
        assert!(!census.contains_key(&2));
    }

    #[test]
    fn leftmost_words_match_tree_renders() {
        for (src, sep) in [
            (r#"S : "a" | "(" S ")" ;"#, ""),
            (r#"S : "x" | S "+" S ;"#, " "),
            ("S : | \"a\" S ;", " "),
        ] {
            let grammar = load_grammar(src).unwrap();
            let g = rtg(src);
            let rules = RenderRules::with_separator(sep);
            let mut words = leftmost_words(&grammar, &rules, 9);
            let mut renders = renders_up_to_count(&g, &rules, 9);
            words.sort();
            renders.sort();
            assert_eq!(words, renders, "mismatch for {src}");
        }
    }
}
