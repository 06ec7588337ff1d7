//! Context-free grammars: the `.cqg` file format, EBNF desugaring, and
//! productivity/reachability validation.
//!
//! A grammar file holds one rule per statement, `Name : alt | alt ;`, where
//! each alternative is a sequence of nonterminal names and double-quoted
//! terminal literals. `#` starts a line comment, an empty alternative denotes
//! the empty word, and the postfix operators `?` `*` `+` plus `( ... )`
//! groups are accepted and rewritten into plain productions by [`desugar`].
//! The first rule's left-hand side is the start symbol unless a
//! `start Name ;` directive says otherwise.

mod ast;
mod desugar;
mod parse;

pub use ast::{SugaredGrammar, SugaredRule, Term};
pub use desugar::desugar;
pub use parse::parse_grammar;

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

/// Symbol on a production's right-hand side, referring into the grammar's
/// nonterminal and terminal tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Symbol {
    Nonterminal(usize),
    Terminal(usize),
}

/// One plain production `lhs -> rhs`. `ordinal` is the production's index
/// among the productions sharing the same left-hand side, dense from 0; it
/// fixes constructor numbering downstream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Production {
    pub lhs: usize,
    pub rhs: Vec<Symbol>,
    pub ordinal: usize,
}

/// A plain context-free grammar. Productions are grouped by left-hand side,
/// groups appearing in nonterminal definition order, so symbol and production
/// order is stable and deterministic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grammar {
    nonterminals: Vec<String>,
    terminals: Vec<String>,
    productions: Vec<Production>,
    start: usize,
    prod_spans: Vec<(usize, usize)>,
}

impl Grammar {
    /// Builds a grammar from named parts. Productions must be grouped by
    /// lhs in nonterminal order; terminals are collected in first-occurrence
    /// order. Used by [`desugar`] and by tests that construct grammars by hand.
    pub(crate) fn assemble(
        nonterminals: Vec<String>,
        start: usize,
        rules: &[(usize, Vec<RawSymbol>)],
    ) -> Grammar {
        let mut terminals: Vec<String> = Vec::new();
        let mut term_index: HashMap<String, usize> = HashMap::new();
        let mut productions = Vec::new();
        let mut ordinals = vec![0usize; nonterminals.len()];
        for (lhs, rhs) in rules {
            let rhs = rhs
                .iter()
                .map(|sym| match sym {
                    RawSymbol::Nonterminal(id) => Symbol::Nonterminal(*id),
                    RawSymbol::Terminal(text) => {
                        let id = *term_index.entry(text.clone()).or_insert_with(|| {
                            terminals.push(text.clone());
                            terminals.len() - 1
                        });
                        Symbol::Terminal(id)
                    }
                })
                .collect();
            productions.push(Production {
                lhs: *lhs,
                rhs,
                ordinal: ordinals[*lhs],
            });
            ordinals[*lhs] += 1;
        }
        let mut spans = vec![(0usize, 0usize); nonterminals.len()];
        let mut pos = 0;
        while pos < productions.len() {
            let lhs = productions[pos].lhs;
            let begin = pos;
            while pos < productions.len() && productions[pos].lhs == lhs {
                pos += 1;
            }
            spans[lhs] = (begin, pos);
        }
        Grammar {
            nonterminals,
            terminals,
            productions,
            start,
            prod_spans: spans,
        }
    }

    pub fn nonterminals(&self) -> &[String] {
        &self.nonterminals
    }

    pub fn terminals(&self) -> &[String] {
        &self.terminals
    }

    pub fn productions(&self) -> &[Production] {
        &self.productions
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn nonterminal_name(&self, id: usize) -> &str {
        &self.nonterminals[id]
    }

    pub fn terminal_text(&self, id: usize) -> &str {
        &self.terminals[id]
    }

    /// Productions of `nt`, in ordinal order.
    pub fn productions_of(&self, nt: usize) -> &[Production] {
        let (begin, end) = self.prod_spans[nt];
        &self.productions[begin..end]
    }

    /// Global production index range for `nt`.
    pub fn production_span(&self, nt: usize) -> (usize, usize) {
        self.prod_spans[nt]
    }
}

/// Pre-interning symbol used while assembling a grammar.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum RawSymbol {
    Nonterminal(usize),
    Terminal(String),
}

impl fmt::Display for Grammar {
    /// Prints the grammar back in `.cqg` syntax. Re-parsing and desugaring
    /// the output yields a structurally identical grammar.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "start {} ;", self.nonterminals[self.start])?;
        for (nt, name) in self.nonterminals.iter().enumerate() {
            let prods = self.productions_of(nt);
            if prods.is_empty() {
                continue;
            }
            write!(f, "{name} :")?;
            for (i, prod) in prods.iter().enumerate() {
                if i > 0 {
                    write!(f, " |")?;
                }
                for sym in &prod.rhs {
                    match sym {
                        Symbol::Nonterminal(id) => write!(f, " {}", self.nonterminals[*id])?,
                        Symbol::Terminal(id) => {
                            write!(f, " \"{}\"", escape_literal(&self.terminals[*id]))?
                        }
                    }
                }
            }
            writeln!(f, " ;")?;
        }
        Ok(())
    }
}

fn escape_literal(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for ch in text.chars() {
        match ch {
            '\\' => out.push_str("\\\\"),
            '"' => out.push_str("\\\""),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            other => out.push(other),
        }
    }
    out
}

/// Findings of [`validate`]: nonterminals from which no terminal string
/// derives, nonterminals unreachable from the start symbol, and whether the
/// grammar's language is empty (start unproductive).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationReport {
    pub unproductive: Vec<String>,
    pub unreachable: Vec<String>,
    pub empty_language: bool,
}

/// Fixpoint productivity and reachability analysis.
pub fn validate(grammar: &Grammar) -> ValidationReport {
    let n = grammar.nonterminals.len();
    let mut productive = vec![false; n];
    loop {
        let mut changed = false;
        for prod in &grammar.productions {
            if productive[prod.lhs] {
                continue;
            }
            let ok = prod.rhs.iter().all(|sym| match sym {
                Symbol::Nonterminal(id) => productive[*id],
                Symbol::Terminal(_) => true,
            });
            if ok {
                productive[prod.lhs] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    let mut reachable = vec![false; n];
    let mut stack = vec![grammar.start];
    reachable[grammar.start] = true;
    while let Some(nt) = stack.pop() {
        for prod in grammar.productions_of(nt) {
            for sym in &prod.rhs {
                if let Symbol::Nonterminal(id) = sym {
                    if !reachable[*id] {
                        reachable[*id] = true;
                        stack.push(*id);
                    }
                }
            }
        }
    }

    let unproductive = grammar
        .nonterminals
        .iter()
        .enumerate()
        .filter(|(id, _)| !productive[*id])
        .map(|(_, name)| name.clone())
        .collect();
    let unreachable = grammar
        .nonterminals
        .iter()
        .enumerate()
        .filter(|(id, _)| !reachable[*id])
        .map(|(_, name)| name.clone())
        .collect();
    let empty_language = !productive[grammar.start];
    ValidationReport {
        unproductive,
        unreachable,
        empty_language,
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GrammarError {
    #[error("{line}:{col}: syntax error: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("{line}:{col}: duplicate definition of nonterminal `{name}`")]
    DuplicateDefinition {
        line: usize,
        col: usize,
        name: String,
    },
    #[error("{line}:{col}: reference to undefined symbol `{name}`")]
    UndefinedSymbol {
        line: usize,
        col: usize,
        name: String,
    },
    #[error("grammar has no rules")]
    Empty,
}

/// Parse + desugar in one step.
pub fn load_grammar(text: &str) -> Result<Grammar, GrammarError> {
    Ok(desugar(&parse_grammar(text)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_basic_counts() {
        let g = load_grammar(r#"S : "a" | "(" S ")" ;"#).unwrap();
        assert_eq!(g.nonterminals(), &["S".to_string()]);
        assert_eq!(
            g.terminals(),
            &["a".to_string(), "(".to_string(), ")".to_string()]
        );
        assert_eq!(g.productions().len(), 2);
        assert_eq!(g.productions()[0].ordinal, 0);
        assert_eq!(g.productions()[1].ordinal, 1);
    }

    #[test]
    fn empty_alternative_is_epsilon() {
        let g = load_grammar("S : ;").unwrap();
        assert_eq!(g.productions().len(), 1);
        assert!(g.productions()[0].rhs.is_empty());
    }

    #[test]
    fn missing_terminator_is_syntax_error() {
        let err = parse_grammar(r#"S : "a""#).unwrap_err();
        match err {
            GrammarError::Syntax { message, .. } => {
                assert!(message.contains("end of input"), "{message}")
            }
            other => panic!("unexpected error: {other:?}"),
        }
    }

    #[test]
    fn duplicate_definition_rejected() {
        let err = parse_grammar("S : \"a\" ;\nS : \"b\" ;").unwrap_err();
        assert!(matches!(err, GrammarError::DuplicateDefinition { .. }));
    }

    #[test]
    fn undefined_symbol_rejected() {
        let err = parse_grammar(r#"S : T ;"#).unwrap_err();
        match err {
            GrammarError::UndefinedSymbol { name, .. } => assert_eq!(name, "T"),
            other => panic!("unexpected error: {other:?}"),
        }
    }

    #[test]
    fn start_directive_overrides_first_rule() {
        let g = load_grammar("start T ;\nS : \"a\" ;\nT : \"b\" ;").unwrap();
        assert_eq!(g.nonterminal_name(g.start()), "T");
    }

    #[test]
    fn validate_self_loop_is_empty_language() {
        let g = load_grammar("S : S ;").unwrap();
        let report = validate(&g);
        assert_eq!(report.unproductive, vec!["S".to_string()]);
        assert!(report.empty_language);
    }

    #[test]
    fn validate_unreachable() {
        let g = load_grammar("S : \"a\" ;\nT : \"b\" ;").unwrap();
        let report = validate(&g);
        assert!(report.unproductive.is_empty());
        assert_eq!(report.unreachable, vec!["T".to_string()]);
        assert!(!report.empty_language);
    }

    #[test]
    fn validate_paren_grammar_clean() {
        let g = load_grammar(r#"S : "a" | "(" S ")" ;"#).unwrap();
        let report = validate(&g);
        assert!(report.unproductive.is_empty());
        assert!(report.unreachable.is_empty());
        assert!(!report.empty_language);
    }

    #[test]
    fn print_parse_round_trip() {
        let sources = [
            r#"S : "a" | "(" S ")" ;"#,
            "S : ;\nT : S \"x\" T | ;\nstart T ;",
            r#"E : E "+" T | T ; T : "x" | "(" E ")" ;"#,
        ];
        for src in sources {
            let g = load_grammar(src).unwrap();
            let reparsed = load_grammar(&g.to_string()).unwrap();
            assert_eq!(g, reparsed, "round trip failed for {src}");
        }
    }

    #[test]
    fn round_trip_preserves_escapes() {
        let g = load_grammar(r#"S : "a\"b" | "c\\d" | "e\nf" | "g\th" ;"#).unwrap();
        let reparsed = load_grammar(&g.to_string()).unwrap();
        assert_eq!(g, reparsed);
    }
}
