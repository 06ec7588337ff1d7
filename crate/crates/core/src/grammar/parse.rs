//! Hand-rolled lexer and recursive-descent parser for `.cqg` files.

use super::ast::{SugaredGrammar, SugaredRule, Term};
use super::GrammarError;

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Literal(String),
    Colon,
    Semi,
    Pipe,
    LParen,
    RParen,
    Question,
    Star,
    Plus,
    Eof,
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    col: usize,
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Self {
        Lexer {
            chars: text.chars().peekable(),
            line: 1,
            col: 1,
        }
    }

    fn bump(&mut self) -> Option<char> {
        let ch = self.chars.next()?;
        if ch == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(ch)
    }

    fn error(&self, message: impl Into<String>) -> GrammarError {
        GrammarError::Syntax {
            line: self.line,
            col: self.col,
            message: message.into(),
        }
    }

    fn next_token(&mut self) -> Result<Spanned, GrammarError> {
        loop {
            match self.chars.peek() {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('#') => {
                    while let Some(&c) = self.chars.peek() {
                        if c == '\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                _ => break,
            }
        }
        let line = self.line;
        let col = self.col;
        let spanned = |tok| Spanned { tok, line, col };
        let Some(&ch) = self.chars.peek() else {
            return Ok(spanned(Tok::Eof));
        };
        match ch {
            ':' => {
                self.bump();
                Ok(spanned(Tok::Colon))
            }
            ';' => {
                self.bump();
                Ok(spanned(Tok::Semi))
            }
            '|' => {
                self.bump();
                Ok(spanned(Tok::Pipe))
            }
            '(' => {
                self.bump();
                Ok(spanned(Tok::LParen))
            }
            ')' => {
                self.bump();
                Ok(spanned(Tok::RParen))
            }
            '?' => {
                self.bump();
                Ok(spanned(Tok::Question))
            }
            '*' => {
                self.bump();
                Ok(spanned(Tok::Star))
            }
            '+' => {
                self.bump();
                Ok(spanned(Tok::Plus))
            }
            '"' => {
                self.bump();
                let mut text = String::new();
                loop {
                    match self.bump() {
                        None => return Err(self.error("unterminated string literal")),
                        Some('\n') => {
                            return Err(self.error("string literal spans a line break"))
                        }
                        Some('"') => break,
                        Some('\\') => match self.bump() {
                            Some('"') => text.push('"'),
                            Some('\\') => text.push('\\'),
                            Some('n') => text.push('\n'),
                            Some('t') => text.push('\t'),
                            Some(other) => {
                                return Err(self.error(format!("unknown escape `\\{other}`")))
                            }
                            None => return Err(self.error("unterminated string literal")),
                        },
                        Some(other) => text.push(other),
                    }
                }
                if text.is_empty() {
                    return Err(GrammarError::Syntax {
                        line,
                        col,
                        message: "empty terminal literal".into(),
                    });
                }
                Ok(spanned(Tok::Literal(text)))
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut name = String::new();
                while let Some(&c) = self.chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        name.push(c);
                        self.bump();
                    } else {
                        break;
                    }
                }
                Ok(spanned(Tok::Ident(name)))
            }
            other => Err(self.error(format!("unexpected character `{other}`"))),
        }
    }
}

struct Parser {
    tokens: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Spanned {
        &self.tokens[self.pos.min(self.tokens.len() - 1)]
    }

    fn advance(&mut self) -> Spanned {
        let t = self.tokens[self.pos.min(self.tokens.len() - 1)].clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn error_here(&self, message: impl Into<String>) -> GrammarError {
        let at = self.peek();
        GrammarError::Syntax {
            line: at.line,
            col: at.col,
            message: message.into(),
        }
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), GrammarError> {
        if self.peek().tok == want {
            self.advance();
            Ok(())
        } else if self.peek().tok == Tok::Eof {
            Err(self.error_here(format!("expected {what} but reached end of input")))
        } else {
            Err(self.error_here(format!("expected {what}")))
        }
    }

    fn parse_alts(&mut self) -> Result<Vec<Vec<Term>>, GrammarError> {
        let mut alts = vec![self.parse_seq()?];
        while self.peek().tok == Tok::Pipe {
            self.advance();
            alts.push(self.parse_seq()?);
        }
        Ok(alts)
    }

    fn parse_seq(&mut self) -> Result<Vec<Term>, GrammarError> {
        let mut seq = Vec::new();
        loop {
            match &self.peek().tok {
                Tok::Ident(_) | Tok::Literal(_) | Tok::LParen => {
                    seq.push(self.parse_postfixed()?)
                }
                _ => return Ok(seq),
            }
        }
    }

    fn parse_postfixed(&mut self) -> Result<Term, GrammarError> {
        let mut term = self.parse_primary()?;
        loop {
            term = match self.peek().tok {
                Tok::Question => {
                    self.advance();
                    Term::Opt(Box::new(term))
                }
                Tok::Star => {
                    self.advance();
                    Term::Star(Box::new(term))
                }
                Tok::Plus => {
                    self.advance();
                    Term::Plus(Box::new(term))
                }
                _ => return Ok(term),
            };
        }
    }

    fn parse_primary(&mut self) -> Result<Term, GrammarError> {
        let spanned = self.advance();
        match spanned.tok {
            Tok::Ident(name) => Ok(Term::Symbol(name)),
            Tok::Literal(text) => Ok(Term::Literal(text)),
            Tok::LParen => {
                let alts = self.parse_alts()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(Term::Group(alts))
            }
            _ => unreachable!("parse_primary called on non-primary token"),
        }
    }
}

fn check_symbols(term: &Term, rules: &SugaredGrammar, at: (usize, usize)) -> Result<(), GrammarError> {
    match term {
        Term::Symbol(name) => {
            if rules.rules.iter().any(|r| &r.name == name) {
                Ok(())
            } else {
                Err(GrammarError::UndefinedSymbol {
                    line: at.0,
                    col: at.1,
                    name: name.clone(),
                })
            }
        }
        Term::Literal(_) => Ok(()),
        Term::Group(alts) => {
            for alt in alts {
                for t in alt {
                    check_symbols(t, rules, at)?;
                }
            }
            Ok(())
        }
        Term::Opt(inner) | Term::Star(inner) | Term::Plus(inner) => {
            check_symbols(inner, rules, at)
        }
    }
}

/// Parses a `.cqg` grammar file into its sugared form. Symbol references are
/// resolved here: every identifier on a right-hand side must be defined as a
/// rule, and rule names must be unique.
pub fn parse_grammar(text: &str) -> Result<SugaredGrammar, GrammarError> {
    let mut lexer = Lexer::new(text);
    let mut tokens = Vec::new();
    loop {
        let t = lexer.next_token()?;
        let done = t.tok == Tok::Eof;
        tokens.push(t);
        if done {
            break;
        }
    }
    let mut parser = Parser { tokens, pos: 0 };

    let mut rules: Vec<SugaredRule> = Vec::new();
    let mut rule_positions: Vec<(usize, usize)> = Vec::new();
    let mut start_directive: Option<(String, usize, usize)> = None;
    loop {
        let head = parser.advance();
        match head.tok {
            Tok::Eof => break,
            Tok::Ident(name) => {
                // `start Name ;` directive, unless `start` is itself a rule.
                if name == "start" {
                    if let Tok::Ident(target) = parser.peek().tok.clone() {
                        parser.advance();
                        parser.expect(Tok::Semi, "`;`")?;
                        start_directive = Some((target, head.line, head.col));
                        continue;
                    }
                }
                if rules.iter().any(|r| r.name == name) {
                    return Err(GrammarError::DuplicateDefinition {
                        line: head.line,
                        col: head.col,
                        name,
                    });
                }
                parser.expect(Tok::Colon, "`:`")?;
                let alts = parser.parse_alts()?;
                parser.expect(Tok::Semi, "`;`")?;
                rules.push(SugaredRule { name, alts });
                rule_positions.push((head.line, head.col));
            }
            _ => return Err(parser.error_here("expected a rule definition")),
        }
    }
    if rules.is_empty() {
        return Err(GrammarError::Empty);
    }

    let start = match start_directive {
        None => 0,
        Some((name, line, col)) => rules
            .iter()
            .position(|r| r.name == name)
            .ok_or(GrammarError::UndefinedSymbol { line, col, name })?,
    };
    let grammar = SugaredGrammar { rules, start };
    for (rule, at) in grammar.rules.iter().zip(&rule_positions) {
        for alt in &rule.alts {
            for term in alt {
                check_symbols(term, &grammar, *at)?;
            }
        }
    }
    Ok(grammar)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ebnf_operators_parse() {
        let g = parse_grammar(r#"S : "a"* ("b" | S)? "c"+ ;"#).unwrap();
        assert_eq!(g.rules.len(), 1);
        let alt = &g.rules[0].alts[0];
        assert!(matches!(alt[0], Term::Star(_)));
        assert!(matches!(alt[1], Term::Opt(_)));
        assert!(matches!(alt[2], Term::Plus(_)));
    }

    #[test]
    fn comments_and_whitespace_skipped() {
        let g = parse_grammar("# header\nS : \"a\" ; # trailing\n# footer\n").unwrap();
        assert_eq!(g.rules[0].name, "S");
    }

    #[test]
    fn error_positions_reported() {
        let err = parse_grammar("S : \"a\" ;\nT : @ ;").unwrap_err();
        match err {
            GrammarError::Syntax { line, col, .. } => {
                assert_eq!(line, 2);
                assert_eq!(col, 5);
            }
            other => panic!("unexpected error: {other:?}"),
        }
    }

    #[test]
    fn rule_named_start_is_allowed() {
        let g = parse_grammar("start : \"a\" ;").unwrap();
        assert_eq!(g.rules[0].name, "start");
        assert_eq!(g.start, 0);
    }

    #[test]
    fn empty_literal_rejected() {
        assert!(parse_grammar(r#"S : "" ;"#).is_err());
    }

    #[test]
    fn empty_file_rejected() {
        assert_eq!(parse_grammar("# nothing\n").unwrap_err(), GrammarError::Empty);
    }
}
