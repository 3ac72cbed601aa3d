//! Tokenizer for the program and query language.

use super::ParseError;

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    /// Unquoted name, quoted atom or symbolic operator.
    Atom(String),
    Var(String),
    Int(i64),
    Float(f64),
    Open,
    Close,
    Comma,
    /// Clause terminator.
    End,
    Neck,
    Eof,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Lexeme {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
    /// Whitespace or a comment separates this lexeme from the previous one.
    pub spaced: bool,
    /// Written in quotes, so never treated as an operator.
    pub quoted: bool,
}

const SYMBOL_CHARS: &str = "+-*/\\^<>=~:.?@#&$";

fn is_symbol_char(c: char) -> bool {
    SYMBOL_CHARS.contains(c)
}

struct Cursor {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    col: usize,
}

impl Cursor {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek_at(&self, k: usize) -> Option<char> {
        self.chars.get(self.pos + k).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.pos).copied()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn error(&self, msg: impl Into<String>) -> ParseError {
        ParseError { line: self.line, col: self.col, msg: msg.into() }
    }

    /// Skips whitespace and comments; reports whether anything was skipped.
    fn skip_layout(&mut self) -> Result<bool, ParseError> {
        let start = self.pos;
        loop {
            match self.peek() {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('%') => {
                    while !matches!(self.peek(), None | Some('\n')) {
                        self.bump();
                    }
                }
                Some('/') if self.peek_at(1) == Some('*') => {
                    let (line, col) = (self.line, self.col);
                    self.bump();
                    self.bump();
                    loop {
                        match self.bump() {
                            None => {
                                return Err(ParseError { line, col, msg: "unterminated block comment".into() })
                            }
                            Some('*') if self.peek() == Some('/') => {
                                self.bump();
                                break;
                            }
                            Some(_) => {}
                        }
                    }
                }
                _ => return Ok(self.pos > start),
            }
        }
    }
}

pub fn tokenize(src: &str) -> Result<Vec<Lexeme>, ParseError> {
    let mut cur = Cursor { chars: src.chars().collect(), pos: 0, line: 1, col: 1 };
    let mut out = Vec::new();
    loop {
        let spaced = cur.skip_layout()? || out.is_empty();
        let (line, col) = (cur.line, cur.col);
        let mut quoted = false;
        let Some(c) = cur.peek() else {
            out.push(Lexeme { tok: Tok::Eof, line, col, spaced, quoted });
            return Ok(out);
        };
        let tok = if c.is_ascii_digit() {
            lex_number(&mut cur)?
        } else if c == '_' || c.is_ascii_uppercase() {
            Tok::Var(take_while(&mut cur, |c| c.is_ascii_alphanumeric() || c == '_'))
        } else if c.is_ascii_lowercase() {
            Tok::Atom(take_while(&mut cur, |c| c.is_ascii_alphanumeric() || c == '_'))
        } else if c == '\'' {
            quoted = true;
            lex_quoted(&mut cur)?
        } else if c == '(' {
            cur.bump();
            Tok::Open
        } else if c == ')' {
            cur.bump();
            Tok::Close
        } else if c == ',' {
            cur.bump();
            Tok::Comma
        } else if c == '.' && cur.peek_at(1).is_none_or(|n| n == '%' || n.is_whitespace()) {
            cur.bump();
            Tok::End
        } else if c == '!' || c == ';' {
            cur.bump();
            Tok::Atom(c.to_string())
        } else if is_symbol_char(c) {
            let sym = take_while(&mut cur, is_symbol_char);
            if sym == ":-" {
                Tok::Neck
            } else {
                Tok::Atom(sym)
            }
        } else {
            return Err(cur.error(format!("unexpected character {c:?}")));
        };
        out.push(Lexeme { tok, line, col, spaced, quoted });
    }
}

fn take_while(cur: &mut Cursor, pred: impl Fn(char) -> bool) -> String {
    let mut s = String::new();
    while let Some(c) = cur.peek().filter(|&c| pred(c)) {
        s.push(c);
        cur.bump();
    }
    s
}

fn lex_number(cur: &mut Cursor) -> Result<Tok, ParseError> {
    let (line, col) = (cur.line, cur.col);
    let mut text = take_while(cur, |c| c.is_ascii_digit());
    let mut is_float = false;
    if cur.peek() == Some('.') && cur.peek_at(1).is_some_and(|c| c.is_ascii_digit()) {
        is_float = true;
        text.push('.');
        cur.bump();
        text.push_str(&take_while(cur, |c| c.is_ascii_digit()));
    }
    if matches!(cur.peek(), Some('e' | 'E')) {
        let digits_at = if matches!(cur.peek_at(1), Some('+' | '-')) { 2 } else { 1 };
        if cur.peek_at(digits_at).is_some_and(|c| c.is_ascii_digit()) {
            is_float = true;
            for _ in 0..digits_at {
                text.push(cur.bump().unwrap());
            }
            text.push_str(&take_while(cur, |c| c.is_ascii_digit()));
        }
    }
    let bad = |msg: &str| ParseError { line, col, msg: format!("{msg}: {text}") };
    if is_float {
        text.parse().map(Tok::Float).map_err(|_| bad("bad float"))
    } else {
        text.parse().map(Tok::Int).map_err(|_| bad("integer out of range"))
    }
}

fn lex_quoted(cur: &mut Cursor) -> Result<Tok, ParseError> {
    let (line, col) = (cur.line, cur.col);
    cur.bump();
    let mut s = String::new();
    loop {
        match cur.bump() {
            None => return Err(ParseError { line, col, msg: "unterminated quoted atom".into() }),
            Some('\'') if cur.peek() == Some('\'') => {
                cur.bump();
                s.push('\'');
            }
            Some('\'') => return Ok(Tok::Atom(s)),
            Some('\\') => match cur.bump() {
                Some('n') => s.push('\n'),
                Some('t') => s.push('\t'),
                Some(c @ ('\\' | '\'')) => s.push(c),
                _ => return Err(cur.error("bad escape in quoted atom")),
            },
            Some(c) => s.push(c),
        }
    }
}
