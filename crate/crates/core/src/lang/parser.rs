//! Operator-precedence parser over the lexeme stream.
//!
//! The operator table is fixed:
//!
//! | priority | type | operators                              |
//! |----------|------|----------------------------------------|
//! | 700      | xfx  | `=` `is` `<` `=<` `>` `>=` `=:=` `=\=` |
//! | 500      | yfx  | `+` `-`                                |
//! | 400      | yfx  | `*` `/` `//`                           |
//!
//! Arguments and body goals are read at priority 999 so that `,` separates
//! them. A `-` directly followed by a number literal is a negative literal.

use std::collections::HashMap;

use super::lexer::{Lexeme, Tok};
use super::ParseError;
use crate::terms::{Sym, Term};

pub const ARG_PRIORITY: u32 = 999;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Assoc {
    Xfx,
    Yfx,
}

pub fn infix_op(name: &str) -> Option<(u32, Assoc)> {
    match name {
        "=" | "is" | "<" | "=<" | ">" | ">=" | "=:=" | "=\\=" => Some((700, Assoc::Xfx)),
        "+" | "-" => Some((500, Assoc::Yfx)),
        "*" | "/" | "//" => Some((400, Assoc::Yfx)),
        _ => None,
    }
}

/// Variable naming scope of one clause or query. Every `_` is fresh.
#[derive(Default, Debug)]
pub struct VarScope {
    ids: HashMap<String, usize>,
    pub names: Vec<String>,
}

impl VarScope {
    fn var(&mut self, name: &str) -> Term {
        if name == "_" {
            self.names.push("_".into());
            return Term::Var(self.names.len() - 1);
        }
        let next = self.names.len();
        let id = *self.ids.entry(name.to_owned()).or_insert(next);
        if id == next {
            self.names.push(name.to_owned());
        }
        Term::Var(id)
    }
}

pub struct Parser<'a> {
    lx: &'a [Lexeme],
    pos: usize,
    pub scope: VarScope,
}

impl<'a> Parser<'a> {
    pub fn new(lx: &'a [Lexeme]) -> Parser<'a> {
        Parser { lx, pos: 0, scope: VarScope::default() }
    }

    pub fn peek(&self) -> &Lexeme {
        &self.lx[self.pos.min(self.lx.len() - 1)]
    }

    pub fn next(&mut self) -> Lexeme {
        let lx = self.peek().clone();
        if self.pos < self.lx.len() - 1 {
            self.pos += 1;
        }
        lx
    }

    pub fn error_here(&self, msg: impl Into<String>) -> ParseError {
        let lx = self.peek();
        ParseError { line: lx.line, col: lx.col, msg: msg.into() }
    }

    pub fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        if self.peek().tok == tok {
            self.next();
            Ok(())
        } else {
            Err(self.error_here(format!("expected {what}, found {}", describe(&self.peek().tok))))
        }
    }

    pub fn reset_scope(&mut self) -> VarScope {
        std::mem::take(&mut self.scope)
    }

    pub fn term(&mut self, max: u32) -> Result<Term, ParseError> {
        let mut left = self.primary()?;
        let mut left_pri = 0;
        loop {
            let lx = self.peek();
            let Tok::Atom(name) = &lx.tok else { break };
            if lx.quoted {
                break;
            }
            let Some((pri, assoc)) = infix_op(name) else { break };
            if pri > max {
                break;
            }
            let left_max = if assoc == Assoc::Yfx { pri } else { pri - 1 };
            if left_pri > left_max {
                break;
            }
            let name = name.clone();
            self.next();
            let right = self.term(pri - 1)?;
            left = Term::app(Sym::new(&name), vec![left, right]);
            left_pri = pri;
        }
        Ok(left)
    }

    fn primary(&mut self) -> Result<Term, ParseError> {
        let lx = self.next();
        match lx.tok {
            Tok::Int(i) => Ok(Term::Int(i)),
            Tok::Float(x) => Ok(Term::float(x)),
            Tok::Var(name) => Ok(self.scope.var(&name)),
            Tok::Open => {
                let t = self.term(1200)?;
                self.expect(Tok::Close, "`)`")?;
                Ok(t)
            }
            Tok::Atom(name) => {
                if name == "-" && !lx.quoted {
                    let next = self.peek();
                    if !next.spaced {
                        match next.tok {
                            Tok::Int(i) => {
                                self.next();
                                return Ok(Term::Int(-i));
                            }
                            Tok::Float(x) => {
                                self.next();
                                return Ok(Term::float(-x));
                            }
                            _ => {}
                        }
                    }
                }
                if self.peek().tok == Tok::Open && !self.peek().spaced {
                    self.next();
                    let mut args = vec![self.term(ARG_PRIORITY)?];
                    while self.peek().tok == Tok::Comma {
                        self.next();
                        args.push(self.term(ARG_PRIORITY)?);
                    }
                    self.expect(Tok::Close, "`,` or `)`")?;
                    return Ok(Term::app(Sym::new(&name), args));
                }
                if !lx.quoted && infix_op(&name).is_some() && self.starts_term() {
                    return Err(ParseError {
                        line: lx.line,
                        col: lx.col,
                        msg: format!("operator `{name}` used as prefix"),
                    });
                }
                Ok(Term::atom(&name))
            }
            other => Err(ParseError { line: lx.line, col: lx.col, msg: format!("unexpected {}", describe(&other)) }),
        }
    }

    fn starts_term(&self) -> bool {
        matches!(self.peek().tok, Tok::Int(_) | Tok::Float(_) | Tok::Var(_) | Tok::Open)
            || matches!(&self.peek().tok, Tok::Atom(n) if infix_op(n).is_none())
    }
}

pub fn describe(tok: &Tok) -> String {
    match tok {
        Tok::Atom(a) => format!("`{a}`"),
        Tok::Var(v) => format!("variable `{v}`"),
        Tok::Int(i) => format!("`{i}`"),
        Tok::Float(x) => format!("`{x:?}`"),
        Tok::Open => "`(`".into(),
        Tok::Close => "`)`".into(),
        Tok::Comma => "`,`".into(),
        Tok::End => "end of clause".into(),
        Tok::Neck => "`:-`".into(),
        Tok::Eof => "end of input".into(),
    }
}
