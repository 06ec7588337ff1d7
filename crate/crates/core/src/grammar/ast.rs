//! Parse-level grammar representation, still carrying EBNF sugar.

/// Right-hand-side element as written in the source file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Term {
    /// Reference to a nonterminal by name.
    Symbol(String),
    /// Quoted terminal literal, unescaped.
    Literal(String),
    /// Parenthesized group of alternatives.
    Group(Vec<Vec<Term>>),
    Opt(Box<Term>),
    Star(Box<Term>),
    Plus(Box<Term>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SugaredRule {
    pub name: String,
    pub alts: Vec<Vec<Term>>,
}

/// A parsed grammar file: rules in source order plus the resolved start rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SugaredGrammar {
    pub rules: Vec<SugaredRule>,
    /// Index into `rules`.
    pub start: usize,
}

impl From<&crate::grammar::Grammar> for SugaredGrammar {
    /// Embeds a plain grammar back into the sugared representation, e.g. to
    /// check that desugaring is idempotent.
    fn from(grammar: &crate::grammar::Grammar) -> Self {
        use crate::grammar::Symbol;
        let rules = grammar
            .nonterminals()
            .iter()
            .enumerate()
            .map(|(nt, name)| SugaredRule {
                name: name.clone(),
                alts: grammar
                    .productions_of(nt)
                    .iter()
                    .map(|prod| {
                        prod.rhs
                            .iter()
                            .map(|sym| match sym {
                                Symbol::Nonterminal(id) => {
                                    Term::Symbol(grammar.nonterminal_name(*id).to_string())
                                }
                                Symbol::Terminal(id) => {
                                    Term::Literal(grammar.terminal_text(*id).to_string())
                                }
                            })
                            .collect()
                    })
                    .collect(),
            })
            .collect();
        SugaredGrammar {
            rules,
            start: grammar.start(),
        }
    }
}
