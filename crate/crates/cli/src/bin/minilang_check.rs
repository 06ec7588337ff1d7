//! Semantic validator for the shipped mini-language: typed arithmetic over
//! the two variables `var1` and `var2`. Serves as a stand-in compiler so the
//! demo campaign and CI need no real toolchain.
//!
//! Statements: `int v = e ;`, `bool v = e ;`, `v = e ;`, `print e ;`.
//! Expressions are left-associative chains of `+` and `<` over `42`,
//! `true`, and the variables; both operators take and yield int, as in C
//! (`true` is the sole bool expression). Both
//! variables start as `int`; a declaration rebinds a variable to its stated
//! type. A program is valid when every expression type-checks, every
//! assignment matches the variable's current type, and every declaration's
//! initializer matches the declared type.
//!
//! Usage: `minilang-check FILE` exits 0 (valid) or 1 (invalid, reason on
//! stderr). `minilang-check --batch` reads NUL-separated programs on stdin
//! and prints one line per program, `A` or `R`.

use std::io::{BufWriter, Read, Write};
use std::process::ExitCode;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Ty {
    Int,
    Bool,
}

impl std::fmt::Display for Ty {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Ty::Int => write!(f, "int"),
            Ty::Bool => write!(f, "bool"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    KwInt,
    KwBool,
    KwPrint,
    KwTrue,
    Var(usize),
    Number,
    Plus,
    Less,
    Assign,
    Semi,
}

fn lex(text: &str) -> Result<Vec<Tok>, String> {
    let mut tokens = Vec::new();
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
            continue;
        }
        match c {
            '+' => {
                chars.next();
                tokens.push(Tok::Plus);
            }
            '<' => {
                chars.next();
                tokens.push(Tok::Less);
            }
            '=' => {
                chars.next();
                tokens.push(Tok::Assign);
            }
            ';' => {
                chars.next();
                tokens.push(Tok::Semi);
            }
            '0'..='9' => {
                while chars.peek().is_some_and(|c| c.is_ascii_digit()) {
                    chars.next();
                }
                tokens.push(Tok::Number);
            }
            c if c.is_ascii_alphabetic() => {
                let mut word = String::new();
                while chars
                    .peek()
                    .is_some_and(|c| c.is_ascii_alphanumeric() || *c == '_')
                {
                    word.push(chars.next().unwrap());
                }
                tokens.push(match word.as_str() {
                    "int" => Tok::KwInt,
                    "bool" => Tok::KwBool,
                    "print" => Tok::KwPrint,
                    "true" => Tok::KwTrue,
                    "var1" => Tok::Var(0),
                    "var2" => Tok::Var(1),
                    other => return Err(format!("unknown word `{other}`")),
                });
            }
            other => return Err(format!("unexpected character `{other}`")),
        }
    }
    Ok(tokens)
}

struct Checker {
    tokens: Vec<Tok>,
    pos: usize,
    /// Current variable types; both variables start as int.
    vars: [Ty; 2],
}

impl Checker {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), String> {
        match self.next() {
            Some(t) if t == tok => Ok(()),
            Some(t) => Err(format!("expected {what}, found {t:?}")),
            None => Err(format!("expected {what}, found end of input")),
        }
    }

    fn atom(&mut self) -> Result<Ty, String> {
        match self.next() {
            Some(Tok::Number) => Ok(Ty::Int),
            Some(Tok::KwTrue) => Ok(Ty::Bool),
            Some(Tok::Var(v)) => Ok(self.vars[v]),
            other => Err(format!("expected expression atom, found {other:?}")),
        }
    }

    fn expr(&mut self) -> Result<Ty, String> {
        let mut ty = self.atom()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Plus) => Tok::Plus,
                Some(Tok::Less) => Tok::Less,
                _ => return Ok(ty),
            };
            self.pos += 1;
            let rhs = self.atom()?;
            if ty != Ty::Int || rhs != Ty::Int {
                return Err(format!(
                    "operator `{}` needs int operands, found {ty} and {rhs}",
                    if op == Tok::Plus { "+" } else { "<" }
                ));
            }
            let _ = op;
            ty = Ty::Int;
        }
    }

    fn statement(&mut self) -> Result<(), String> {
        match self.next() {
            Some(kw @ (Tok::KwInt | Tok::KwBool)) => {
                let declared = if kw == Tok::KwInt { Ty::Int } else { Ty::Bool };
                let var = match self.next() {
                    Some(Tok::Var(v)) => v,
                    other => return Err(format!("expected variable, found {other:?}")),
                };
                self.expect(Tok::Assign, "`=`")?;
                let ty = self.expr()?;
                if ty != declared {
                    return Err(format!("cannot initialize {declared} var{} from {ty}", var + 1));
                }
                self.expect(Tok::Semi, "`;`")?;
                self.vars[var] = declared;
                Ok(())
            }
            Some(Tok::Var(var)) => {
                let declared = self.vars[var];
                self.expect(Tok::Assign, "`=`")?;
                let ty = self.expr()?;
                if ty != declared {
                    return Err(format!("cannot assign {ty} to {declared} var{}", var + 1));
                }
                self.expect(Tok::Semi, "`;`")
            }
            Some(Tok::KwPrint) => {
                self.expr()?;
                self.expect(Tok::Semi, "`;`")
            }
            other => Err(format!("expected statement, found {other:?}")),
        }
    }

    fn program(&mut self) -> Result<(), String> {
        self.statement()?;
        while self.peek().is_some() {
            self.statement()?;
        }
        Ok(())
    }
}

fn check(text: &str) -> Result<(), String> {
    let tokens = lex(text)?;
    Checker {
        tokens,
        pos: 0,
        vars: [Ty::Int, Ty::Int],
    }
    .program()
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    match args.as_slice() {
        [flag] if flag == "--batch" => {
            let mut input = Vec::new();
            if std::io::stdin().read_to_end(&mut input).is_err() {
                eprintln!("minilang-check: cannot read stdin");
                return ExitCode::from(2);
            }
            let stdout = std::io::stdout();
            let mut out = BufWriter::new(stdout.lock());
            for chunk in input.split(|&b| b == 0) {
                if chunk.is_empty() {
                    continue;
                }
                let verdict = match std::str::from_utf8(chunk) {
                    Ok(text) if check(text).is_ok() => "A",
                    _ => "R",
                };
                let _ = writeln!(out, "{verdict}");
            }
            let _ = out.flush();
            ExitCode::SUCCESS
        }
        [path] => match std::fs::read_to_string(path) {
            Err(err) => {
                eprintln!("minilang-check: cannot read {path}: {err}");
                ExitCode::from(2)
            }
            Ok(text) => match check(&text) {
                Ok(()) => ExitCode::SUCCESS,
                Err(reason) => {
                    eprintln!("minilang-check: {reason}");
                    ExitCode::FAILURE
                }
            },
        },
        _ => {
            eprintln!("usage: minilang-check FILE | minilang-check --batch");
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepts_valid_programs() {
        for src in [
            "print 42 ;",
            "print var1 ;",
            "var1 = 42 ;",
            "print 42 + 42 ;",
            "print 42 < 42 ;",
            "int var1 = 42 ;",
            "int var1 = 42 ; var1 = var1 + 42 ; print var1 ;",
            "int var2 = 42 < 42 ; print var2 ;",
            "print 42 < 42 < 42 ;",
            "print 42 < 42 + 42 ;",
            "bool var1 = true ; int var1 = 42 ; print var1 + var2 ;",
        ] {
            assert!(check(src).is_ok(), "should accept: {src}");
        }
    }

    #[test]
    fn rejects_invalid_programs() {
        for src in [
            "int var1 = true ;",
            "bool var1 = 42 ;",
            "var1 = true ;",
            "bool var2 = true ; var2 = 42 ;",
            "int var1 = 42 ; var1 = true ;",
            "print true + 42 ;",
            "bool var2 = 42 < 42 ;",
            "int var1 = 42 ; bool var2 = var1 ;",
            "print true < true ;",
            "bool var1 = true ; print var1 + 42 ;",
        ] {
            assert!(check(src).is_err(), "should reject: {src}");
        }
    }

    #[test]
    fn bool_poisons_chains() {
        // true participates in no operator, anywhere in the chain.
        assert!(check("print true + 42 ;").is_err());
        assert!(check("print 42 + true ;").is_err());
        assert!(check("bool var2 = true ; print var2 + 42 ;").is_err());
    }
}
