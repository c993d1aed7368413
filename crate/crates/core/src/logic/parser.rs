//! Recursive-descent parser for the rule language.
//!
//! ```text
//! program := (decl | fact | rule)*
//! decl    := "pred" NAME "/" ("1"|"2") "."
//! fact    := "fact" NAME "(" CONST ("," CONST)? ")" "."
//! rule    := "rule" atom ("&" atom)* "=>" atom "."
//! atom    := NAME "(" term ("," term)? ")"
//! ```
//!
//! `#` starts a comment running to end of line.

use std::collections::BTreeMap;

use super::{declare, is_var_name, Arity, At, Atom, LogicError, Position, Rule, Term, Theory};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParseOptions {
    /// Declare predicates at first use instead of rejecting them.
    pub implicit_declarations: bool,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions {
            implicit_declarations: true,
        }
    }
}

pub fn parse_theory(text: &str) -> Result<Theory, LogicError> {
    parse_theory_with(text, ParseOptions::default())
}

pub fn parse_theory_with(text: &str, options: ParseOptions) -> Result<Theory, LogicError> {
    let tokens = tokenize(text)?;
    let mut parser = Parser {
        tokens,
        cursor: 0,
        options,
        predicates: BTreeMap::new(),
        rules: Vec::new(),
        facts: Vec::new(),
    };
    parser.program()?;
    Theory::from_parts(parser.predicates, parser.rules, parser.facts)
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Number(String),
    LParen,
    RParen,
    Comma,
    Dot,
    Amp,
    Arrow,
    Slash,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) | Tok::Number(s) => format!("`{s}`"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Dot => "`.`".into(),
            Tok::Amp => "`&`".into(),
            Tok::Arrow => "`=>`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

fn tokenize(text: &str) -> Result<Vec<(Tok, Position)>, LogicError> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    let (mut line, mut column) = (1, 1);
    while let Some(&c) = chars.peek() {
        let pos = Position { line, column };
        let mut advance = |chars: &mut std::iter::Peekable<std::str::Chars>| {
            let c = chars.next();
            if c == Some('\n') {
                line += 1;
                column = 1;
            } else {
                column += 1;
            }
            c
        };
        match c {
            c if c.is_whitespace() => {
                advance(&mut chars);
            }
            '#' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    advance(&mut chars);
                }
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if !(c.is_ascii_alphanumeric() || c == '_') {
                        break;
                    }
                    s.push(c);
                    advance(&mut chars);
                }
                out.push((Tok::Ident(s), pos));
            }
            c if c.is_ascii_digit() => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if !c.is_ascii_digit() {
                        break;
                    }
                    s.push(c);
                    advance(&mut chars);
                }
                out.push((Tok::Number(s), pos));
            }
            '=' => {
                advance(&mut chars);
                if chars.peek() == Some(&'>') {
                    advance(&mut chars);
                    out.push((Tok::Arrow, pos));
                } else {
                    return Err(LogicError::Syntax {
                        pos,
                        message: "expected `=>`".into(),
                    });
                }
            }
            _ => {
                let tok = match c {
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    ',' => Tok::Comma,
                    '.' => Tok::Dot,
                    '&' => Tok::Amp,
                    '/' => Tok::Slash,
                    other => {
                        return Err(LogicError::Syntax {
                            pos,
                            message: format!("unexpected character `{other}`"),
                        })
                    }
                };
                advance(&mut chars);
                out.push((tok, pos));
            }
        }
    }
    out.push((Tok::Eof, Position { line, column }));
    Ok(out)
}

struct Parser {
    tokens: Vec<(Tok, Position)>,
    cursor: usize,
    options: ParseOptions,
    predicates: BTreeMap<String, Arity>,
    rules: Vec<Rule>,
    facts: Vec<Atom>,
}

impl Parser {
    fn peek(&self) -> &(Tok, Position) {
        &self.tokens[self.cursor]
    }

    fn next(&mut self) -> (Tok, Position) {
        let tok = self.tokens[self.cursor].clone();
        if tok.0 != Tok::Eof {
            self.cursor += 1;
        }
        tok
    }

    fn error<T>(&self, pos: Position, message: impl Into<String>) -> Result<T, LogicError> {
        Err(LogicError::Syntax {
            pos,
            message: message.into(),
        })
    }

    fn expect(&mut self, want: Tok) -> Result<Position, LogicError> {
        let (tok, pos) = self.next();
        if tok == want {
            Ok(pos)
        } else {
            self.error(pos, format!("expected {}, found {}", want.describe(), tok.describe()))
        }
    }

    fn name(&mut self) -> Result<(String, Position), LogicError> {
        match self.next() {
            (Tok::Ident(s), pos) if !is_var_name(&s) => Ok((s, pos)),
            (tok, pos) => self.error(pos, format!("expected a lowercase name, found {}", tok.describe())),
        }
    }

    fn program(&mut self) -> Result<(), LogicError> {
        loop {
            let (tok, pos) = self.next();
            match tok {
                Tok::Eof => return Ok(()),
                Tok::Ident(kw) if kw == "pred" => self.decl()?,
                Tok::Ident(kw) if kw == "fact" => self.fact()?,
                Tok::Ident(kw) if kw == "rule" => self.rule()?,
                other => {
                    return self.error(
                        pos,
                        format!("expected `pred`, `fact` or `rule`, found {}", other.describe()),
                    )
                }
            }
        }
    }

    fn decl(&mut self) -> Result<(), LogicError> {
        let (name, name_pos) = self.name()?;
        self.expect(Tok::Slash)?;
        let arity = match self.next() {
            (Tok::Number(n), _) if n == "1" => Arity::Unary,
            (Tok::Number(n), _) if n == "2" => Arity::Binary,
            (tok, pos) => return self.error(pos, format!("expected arity 1 or 2, found {}", tok.describe())),
        };
        self.expect(Tok::Dot)?;
        match self.predicates.get(&name) {
            Some(&declared) if declared != arity => Err(LogicError::ArityMismatch {
                name,
                expected: declared.count(),
                found: arity.count(),
                at: At(Some(name_pos)),
            }),
            _ => {
                self.predicates.insert(name, arity);
                Ok(())
            }
        }
    }

    fn fact(&mut self) -> Result<(), LogicError> {
        let (atom, pos) = self.atom()?;
        self.expect(Tok::Dot)?;
        if !atom.is_ground() {
            return Err(LogicError::NonGroundFact {
                atom: atom.to_string(),
                at: At(Some(pos)),
            });
        }
        self.facts.push(atom);
        Ok(())
    }

    fn rule(&mut self) -> Result<(), LogicError> {
        let (first, rule_pos) = self.atom()?;
        let mut body = vec![first];
        loop {
            match self.peek().0 {
                Tok::Amp => {
                    self.next();
                    body.push(self.atom()?.0);
                }
                Tok::Arrow => {
                    self.next();
                    break;
                }
                _ => {
                    let (tok, pos) = self.next();
                    return self.error(pos, format!("expected `&` or `=>`, found {}", tok.describe()));
                }
            }
        }
        let (head, _) = self.atom()?;
        self.expect(Tok::Dot)?;
        let id = format!("r{}", self.rules.len());
        let rule = Rule::new(id, body, head).map_err(|e| match e {
            LogicError::NotRangeRestricted { variable, .. } => LogicError::NotRangeRestricted {
                variable,
                at: At(Some(rule_pos)),
            },
            other => other,
        })?;
        self.rules.push(rule);
        Ok(())
    }

    fn atom(&mut self) -> Result<(Atom, Position), LogicError> {
        let (predicate, pos) = self.name()?;
        self.expect(Tok::LParen)?;
        let mut args = vec![self.term()?];
        if self.peek().0 == Tok::Comma {
            self.next();
            args.push(self.term()?);
        }
        self.expect(Tok::RParen)?;
        let atom = Atom::new(predicate, args);
        if !self.options.implicit_declarations && !self.predicates.contains_key(&atom.predicate) {
            return Err(LogicError::UndeclaredPredicate {
                name: atom.predicate,
                at: At(Some(pos)),
            });
        }
        declare(&mut self.predicates, &atom, Some(pos))?;
        Ok((atom, pos))
    }

    fn term(&mut self) -> Result<Term, LogicError> {
        match self.next() {
            (Tok::Ident(s), _) => Ok(Term::from_name(&s)),
            (tok, pos) => self.error(pos, format!("expected a constant or variable, found {}", tok.describe())),
        }
    }
}
