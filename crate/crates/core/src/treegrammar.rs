//! Regular tree grammars over a context-free grammar's productions, plus
//! rendering of derivation trees to program text.
//!
//! Compilation is mechanical: nonterminals and start symbol carry over, and
//! every production `p` of `lhs` with per-lhs ordinal `i` becomes one ranked
//! constructor `C_<lhs>_<i>` whose arity is the number of nonterminal
//! occurrences on `p`'s right-hand side. Terminals stay in the constructor's
//! template as nullary symbols, in source order.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grammar::{validate, Grammar, Symbol};

/// One template slot of a constructor: either a fixed terminal emitted
/// verbatim, or a child subtree rooted at the given nonterminal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Slot {
    FixedTerminal(String),
    Child(usize),
}

/// Constructor for one source production. The template preserves the
/// production's symbol order; `Child` slots bind the constructor's children
/// left to right.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstructorRule {
    pub constructor_name: String,
    pub lhs: usize,
    pub template: Vec<Slot>,
}

impl ConstructorRule {
    pub fn arity(&self) -> usize {
        self.template
            .iter()
            .filter(|s| matches!(s, Slot::Child(_)))
            .count()
    }

    /// Nonterminals of the `Child` slots, left to right.
    pub fn child_nts(&self) -> impl Iterator<Item = usize> + '_ {
        self.template.iter().filter_map(|s| match s {
            Slot::Child(nt) => Some(*nt),
            Slot::FixedTerminal(_) => None,
        })
    }
}

/// Regular tree grammar compiled from a [`Grammar`]. Rules are grouped by
/// lhs in nonterminal order; rule index = source production index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegularTreeGrammar {
    nonterminals: Vec<String>,
    terminals: Vec<String>,
    rules: Vec<ConstructorRule>,
    start: usize,
    rule_spans: Vec<(usize, usize)>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RtgError {
    #[error("grammar generates no programs: start symbol `{start}` is unproductive (unproductive: {unproductive:?})")]
    EmptyLanguage {
        start: String,
        unproductive: Vec<String>,
    },
}

/// Compiles a validated grammar into its regular tree grammar. Grammars whose
/// start symbol derives no terminal string are rejected.
pub fn compile_to_rtg(grammar: &Grammar) -> Result<RegularTreeGrammar, RtgError> {
    let report = validate(grammar);
    if report.empty_language {
        return Err(RtgError::EmptyLanguage {
            start: grammar.nonterminal_name(grammar.start()).to_string(),
            unproductive: report.unproductive,
        });
    }
    let rules = grammar
        .productions()
        .iter()
        .map(|prod| ConstructorRule {
            constructor_name: format!(
                "C_{}_{}",
                grammar.nonterminal_name(prod.lhs),
                prod.ordinal
            ),
            lhs: prod.lhs,
            template: prod
                .rhs
                .iter()
                .map(|sym| match sym {
                    Symbol::Nonterminal(id) => Slot::Child(*id),
                    Symbol::Terminal(id) => {
                        Slot::FixedTerminal(grammar.terminal_text(*id).to_string())
                    }
                })
                .collect(),
        })
        .collect();
    let rule_spans = (0..grammar.nonterminals().len())
        .map(|nt| grammar.production_span(nt))
        .collect();
    Ok(RegularTreeGrammar {
        nonterminals: grammar.nonterminals().to_vec(),
        terminals: grammar.terminals().to_vec(),
        rules,
        start: grammar.start(),
        rule_spans,
    })
}

impl RegularTreeGrammar {
    pub fn nonterminals(&self) -> &[String] {
        &self.nonterminals
    }

    pub fn terminals(&self) -> &[String] {
        &self.terminals
    }

    pub fn rules(&self) -> &[ConstructorRule] {
        &self.rules
    }

    pub fn rule(&self, id: usize) -> &ConstructorRule {
        &self.rules[id]
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn nonterminal_name(&self, id: usize) -> &str {
        &self.nonterminals[id]
    }

    /// Rule index range for `nt`, in constructor-ordinal order.
    pub fn rules_of(&self, nt: usize) -> std::ops::Range<usize> {
        let (begin, end) = self.rule_spans[nt];
        begin..end
    }
}

/// Tree of constructor applications. `rule` indexes into the owning RTG's
/// rule table; children correspond to the rule's `Child` slots left to right.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DerivationTree {
    pub rule: usize,
    pub children: Vec<DerivationTree>,
}

impl DerivationTree {
    pub fn leaf(rule: usize) -> DerivationTree {
        DerivationTree {
            rule,
            children: Vec::new(),
        }
    }

    /// Total constructors in the tree, always at least 1. Iterative: chain
    /// grammars produce trees whose depth equals their constructor count.
    pub fn constructor_count(&self) -> u64 {
        let mut count = 0u64;
        let mut stack = vec![self];
        while let Some(node) = stack.pop() {
            count += 1;
            stack.extend(node.children.iter());
        }
        count
    }

    /// Checks structural well-formedness against `rtg`: each child's root
    /// rule belongs to the nonterminal of the corresponding `Child` slot.
    pub fn is_well_formed(&self, rtg: &RegularTreeGrammar) -> bool {
        let mut stack = vec![self];
        while let Some(node) = stack.pop() {
            let rule = rtg.rule(node.rule);
            if rule.arity() != node.children.len() {
                return false;
            }
            for (nt, child) in rule.child_nts().zip(&node.children) {
                if rtg.rule(child.rule).lhs != nt {
                    return false;
                }
                stack.push(child);
            }
        }
        true
    }
}

impl Drop for DerivationTree {
    /// Hand-rolled to keep deep chains from overflowing the stack in the
    /// default recursive drop glue.
    fn drop(&mut self) {
        if self.children.is_empty() {
            return;
        }
        let mut stack = std::mem::take(&mut self.children);
        while let Some(mut node) = stack.pop() {
            stack.append(&mut node.children);
        }
    }
}

/// Matches a rendered token in a [`RenderRules`] adjacency exception; `"*"`
/// in a config file maps to `Any`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "String", into = "String")]
pub enum TokenPat {
    Any,
    Lit(String),
}

impl TokenPat {
    fn matches(&self, token: &str) -> bool {
        match self {
            TokenPat::Any => true,
            TokenPat::Lit(text) => text == token,
        }
    }
}

impl From<String> for TokenPat {
    fn from(s: String) -> Self {
        if s == "*" {
            TokenPat::Any
        } else {
            TokenPat::Lit(s)
        }
    }
}

impl From<TokenPat> for String {
    fn from(p: TokenPat) -> String {
        match p {
            TokenPat::Any => "*".to_string(),
            TokenPat::Lit(s) => s,
        }
    }
}

/// How adjacent tokens are joined when a tree is rendered: `separator`
/// between every pair, except pairs matching an entry of `no_space`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderRules {
    #[serde(default = "default_separator")]
    pub separator: String,
    #[serde(default)]
    pub no_space: Vec<(TokenPat, TokenPat)>,
}

fn default_separator() -> String {
    " ".to_string()
}

impl Default for RenderRules {
    fn default() -> Self {
        RenderRules {
            separator: default_separator(),
            no_space: Vec::new(),
        }
    }
}

impl RenderRules {
    pub fn with_separator(separator: &str) -> RenderRules {
        RenderRules {
            separator: separator.to_string(),
            no_space: Vec::new(),
        }
    }

    fn joined(&self, left: &str, right: &str) -> bool {
        self.no_space
            .iter()
            .any(|(l, r)| l.matches(left) && r.matches(right))
    }
}

/// In-order walk over the tree's fixed terminals, without recursion.
fn for_each_token<'a>(
    tree: &'a DerivationTree,
    rtg: &'a RegularTreeGrammar,
    mut visit: impl FnMut(&'a str),
) {
    enum Item<'a> {
        Node(&'a DerivationTree),
        Text(&'a str),
    }
    let mut stack = vec![Item::Node(tree)];
    while let Some(item) = stack.pop() {
        match item {
            Item::Text(text) => visit(text),
            Item::Node(node) => {
                let rule = rtg.rule(node.rule);
                let mut child = node.children.len();
                for slot in rule.template.iter().rev() {
                    match slot {
                        Slot::FixedTerminal(text) => stack.push(Item::Text(text)),
                        Slot::Child(_) => {
                            child -= 1;
                            stack.push(Item::Node(&node.children[child]));
                        }
                    }
                }
            }
        }
    }
}

/// Renders a derivation tree to program text: the in-order concatenation of
/// fixed terminals, joined per `rules`.
pub fn render(tree: &DerivationTree, rtg: &RegularTreeGrammar, rules: &RenderRules) -> String {
    let mut out = String::new();
    let mut prev: Option<&str> = None;
    for_each_token(tree, rtg, |token| {
        if let Some(p) = prev {
            if !rules.joined(p, token) {
                out.push_str(&rules.separator);
            }
        }
        out.push_str(token);
        prev = Some(token);
    });
    out
}

/// Byte size of [`render`]'s output without building the string.
pub fn rendered_size(tree: &DerivationTree, rtg: &RegularTreeGrammar, rules: &RenderRules) -> u64 {
    let mut total = 0u64;
    let mut prev: Option<&str> = None;
    for_each_token(tree, rtg, |token| {
        if let Some(p) = prev {
            if !rules.joined(p, token) {
                total += rules.separator.len() as u64;
            }
        }
        total += token.len() as u64;
        prev = Some(token);
    });
    total
}

/// Program size in UTF-8 bytes of the rendered text. The trailing newline
/// appended when a program is written to disk is not counted.
pub fn size_of(text: &str) -> u64 {
    text.len() as u64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::load_grammar;

    fn paren_rtg() -> RegularTreeGrammar {
        compile_to_rtg(&load_grammar(r#"S : "a" | "(" S ")" ;"#).unwrap()).unwrap()
    }

    #[test]
    fn paren_grammar_constructors() {
        let rtg = paren_rtg();
        assert_eq!(rtg.rules().len(), 2);
        assert_eq!(rtg.rule(0).constructor_name, "C_S_0");
        assert_eq!(rtg.rule(0).arity(), 0);
        assert_eq!(
            rtg.rule(0).template,
            vec![Slot::FixedTerminal("a".to_string())]
        );
        assert_eq!(rtg.rule(1).constructor_name, "C_S_1");
        assert_eq!(rtg.rule(1).arity(), 1);
        assert_eq!(
            rtg.rule(1).template,
            vec![
                Slot::FixedTerminal("(".to_string()),
                Slot::Child(0),
                Slot::FixedTerminal(")".to_string()),
            ]
        );
    }

    #[test]
    fn epsilon_production_is_nullary_with_empty_template() {
        let rtg = compile_to_rtg(&load_grammar("S : ;").unwrap()).unwrap();
        assert_eq!(rtg.rules().len(), 1);
        assert_eq!(rtg.rule(0).arity(), 0);
        assert!(rtg.rule(0).template.is_empty());
        let tree = DerivationTree::leaf(0);
        assert_eq!(render(&tree, &rtg, &RenderRules::default()), "");
        assert_eq!(size_of(&render(&tree, &rtg, &RenderRules::default())), 0);
    }

    #[test]
    fn binary_expr_has_arity_two() {
        let rtg = compile_to_rtg(&load_grammar(r#"S : "x" | S "+" S ;"#).unwrap()).unwrap();
        assert_eq!(rtg.rule(1).arity(), 2);
    }

    #[test]
    fn rule_count_matches_production_count() {
        let g = load_grammar(r#"E : E "+" T | T ; T : "x" | "(" E ")" ;"#).unwrap();
        let rtg = compile_to_rtg(&g).unwrap();
        assert_eq!(rtg.rules().len(), g.productions().len());
    }

    #[test]
    fn unproductive_start_rejected() {
        let g = load_grammar("S : S \"a\" ;").unwrap();
        assert!(matches!(
            compile_to_rtg(&g),
            Err(RtgError::EmptyLanguage { .. })
        ));
    }

    #[test]
    fn render_with_and_without_separator() {
        let rtg = paren_rtg();
        let tree = DerivationTree {
            rule: 1,
            children: vec![DerivationTree::leaf(0)],
        };
        assert!(tree.is_well_formed(&rtg));
        assert_eq!(render(&tree, &rtg, &RenderRules::with_separator("")), "(a)");
        assert_eq!(render(&tree, &rtg, &RenderRules::default()), "( a )");
        assert_eq!(size_of("(a)"), 3);
    }

    #[test]
    fn render_binary_tree() {
        let rtg = compile_to_rtg(&load_grammar(r#"S : "x" | S "+" S ;"#).unwrap()).unwrap();
        let tree = DerivationTree {
            rule: 1,
            children: vec![DerivationTree::leaf(0), DerivationTree::leaf(0)],
        };
        let text = render(&tree, &rtg, &RenderRules::default());
        assert_eq!(text, "x + x");
        assert_eq!(size_of(&text), 5);
    }

    #[test]
    fn no_space_pairs_suppress_separator() {
        let rtg = paren_rtg();
        let tree = DerivationTree {
            rule: 1,
            children: vec![DerivationTree {
                rule: 1,
                children: vec![DerivationTree::leaf(0)],
            }],
        };
        let rules = RenderRules {
            separator: " ".to_string(),
            no_space: vec![
                (TokenPat::Lit("(".to_string()), TokenPat::Any),
                (TokenPat::Any, TokenPat::Lit(")".to_string())),
            ],
        };
        assert_eq!(render(&tree, &rtg, &rules), "((a))");
    }

    #[test]
    fn multibyte_sizes_count_bytes() {
        assert_eq!(size_of("λx"), 3);
    }
}
