//! Rewrites EBNF sugar (`?` `*` `+`, groups) into plain productions.
//!
//! Every sugar occurrence introduces one fresh nonterminal named
//! `<lhs>__s<k>`, where `k` counts sugar occurrences of that rule in source
//! order (nested occurrences inner-first), so constructor numbering is stable
//! across runs. Fresh rules are appended after the source rules in creation
//! order.

use std::collections::HashMap;

use super::ast::{SugaredGrammar, Term};
use super::{Grammar, RawSymbol};

#[derive(Debug, Clone)]
enum PlainSym {
    Nt(String),
    T(String),
}

struct Desugarer {
    names: Vec<String>,
    counters: HashMap<String, usize>,
    fresh: Vec<(String, Vec<Vec<PlainSym>>)>,
}

impl Desugarer {
    fn fresh_name(&mut self, base: &str) -> String {
        loop {
            let k = self.counters.entry(base.to_string()).or_insert(0);
            let candidate = format!("{base}__s{k}");
            *k += 1;
            if !self.names.contains(&candidate) {
                self.names.push(candidate.clone());
                return candidate;
            }
        }
    }

    fn term(&mut self, term: &Term, base: &str) -> PlainSym {
        match term {
            Term::Symbol(name) => PlainSym::Nt(name.clone()),
            Term::Literal(text) => PlainSym::T(text.clone()),
            Term::Group(alts) => {
                let plain: Vec<Vec<PlainSym>> = alts
                    .iter()
                    .map(|alt| alt.iter().map(|t| self.term(t, base)).collect())
                    .collect();
                let name = self.fresh_name(base);
                self.fresh.push((name.clone(), plain));
                PlainSym::Nt(name)
            }
            Term::Opt(inner) => {
                let sym = self.term(inner, base);
                let name = self.fresh_name(base);
                self.fresh.push((name.clone(), vec![vec![], vec![sym]]));
                PlainSym::Nt(name)
            }
            Term::Star(inner) => {
                let sym = self.term(inner, base);
                let name = self.fresh_name(base);
                self.fresh.push((
                    name.clone(),
                    vec![vec![], vec![sym, PlainSym::Nt(name.clone())]],
                ));
                PlainSym::Nt(name)
            }
            Term::Plus(inner) => {
                let sym = self.term(inner, base);
                let name = self.fresh_name(base);
                self.fresh.push((
                    name.clone(),
                    vec![vec![sym.clone()], vec![sym, PlainSym::Nt(name.clone())]],
                ));
                PlainSym::Nt(name)
            }
        }
    }
}

/// Eliminates all EBNF sugar, preserving the generated language. A grammar
/// with no sugar comes back with an identical production list.
pub fn desugar(src: &SugaredGrammar) -> Grammar {
    let mut state = Desugarer {
        names: src.rules.iter().map(|r| r.name.clone()).collect(),
        counters: HashMap::new(),
        fresh: Vec::new(),
    };

    let mut plain_rules: Vec<(String, Vec<Vec<PlainSym>>)> = Vec::new();
    for rule in &src.rules {
        let alts = rule
            .alts
            .iter()
            .map(|alt| alt.iter().map(|t| state.term(t, &rule.name)).collect())
            .collect();
        plain_rules.push((rule.name.clone(), alts));
    }
    plain_rules.append(&mut state.fresh);

    let nonterminals: Vec<String> = plain_rules.iter().map(|(name, _)| name.clone()).collect();
    let index: HashMap<&str, usize> = nonterminals
        .iter()
        .enumerate()
        .map(|(i, name)| (name.as_str(), i))
        .collect();

    let mut flat: Vec<(usize, Vec<RawSymbol>)> = Vec::new();
    for (name, alts) in &plain_rules {
        let lhs = index[name.as_str()];
        for alt in alts {
            let rhs = alt
                .iter()
                .map(|sym| match sym {
                    PlainSym::Nt(n) => RawSymbol::Nonterminal(index[n.as_str()]),
                    PlainSym::T(t) => RawSymbol::Terminal(t.clone()),
                })
                .collect();
            flat.push((lhs, rhs));
        }
    }
    Grammar::assemble(nonterminals, src.start, &flat)
}
