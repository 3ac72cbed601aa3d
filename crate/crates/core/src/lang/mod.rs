//! The input language: a small Prolog subset with table declarations.
//!
//! ```text
//! :- table path(index, index, min).     % mode-directed table
//! :- table reach/2.                     % plain table, every argument indexed
//! :- table_strategy path/3, local.      % per-predicate scheduling override
//!
//! path(X, Y, C) :- edge(X, Y, C).
//! path(X, Y, C) :- path(X, Z, C1), edge(Z, Y, C2), C is C1 + C2.
//! ```
//!
//! Clauses are facts or rules whose bodies are conjunctions of goals. Goals
//! are user predicates or the builtins `true`, `fail`, `=`, `is`, `<`, `=<`,
//! `>`, `>=`, `=:=` and `=\=`. Atoms are lowercase names or quoted, variables
//! start with an uppercase letter or `_`, and every `_` is a distinct
//! anonymous variable. Comments use `%` or `/* ... */`.

pub mod builtins;
mod lexer;
mod parser;
mod printer;

use std::fmt;

use indexmap::IndexMap;
use thiserror::Error;

use crate::engine::Strategy;
use crate::modes::Mode;
use crate::terms::{Pred, Sym, Term};
use lexer::Tok;
use parser::{describe, Parser, ARG_PRIORITY};

pub use parser::infix_op;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{line}:{col}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Clause {
    pub head: Term,
    pub body: Vec<Term>,
    /// Source names of the clause variables, indexed by variable id.
    pub var_names: Vec<String>,
}

impl Clause {
    pub fn fact(head: Term) -> Clause {
        let mut n = 0;
        head.for_each_var(&mut |v| n = n.max(v + 1));
        Clause { head, body: Vec::new(), var_names: (0..n).map(|i| format!("_G{i}")).collect() }
    }

    pub fn pred(&self) -> Pred {
        Pred::of(&self.head).expect("clause heads are callable")
    }

    pub fn var_count(&self) -> usize {
        self.var_names.len()
    }

    pub fn is_fact(&self) -> bool {
        self.body.is_empty()
    }
}

#[derive(Clone, Debug)]
pub struct Declaration {
    pub pred: Pred,
    /// Modes in source order; `None` for a plain `name/arity` declaration.
    pub modes: Option<Vec<Mode>>,
    pub line: usize,
}

impl PartialEq for Declaration {
    fn eq(&self, other: &Declaration) -> bool {
        self.pred == other.pred && self.modes == other.modes
    }
}

impl Declaration {
    pub fn modes_or_index(&self) -> Vec<Mode> {
        self.modes.clone().unwrap_or_else(|| vec![Mode::Index; self.pred.arity])
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Program {
    pub declarations: Vec<Declaration>,
    pub strategy_overrides: IndexMap<Pred, Strategy>,
    pub clauses: Vec<Clause>,
}

impl Program {
    pub fn declaration(&self, pred: &Pred) -> Option<&Declaration> {
        self.declarations.iter().find(|d| d.pred == *pred)
    }

    pub fn is_tabled(&self, pred: &Pred) -> bool {
        self.declaration(pred).is_some()
    }

    pub fn clauses_for<'a>(&'a self, pred: &'a Pred) -> impl Iterator<Item = &'a Clause> + 'a {
        self.clauses.iter().filter(move |c| c.pred() == *pred)
    }

    /// Defined and declared predicates, in order of first appearance.
    pub fn predicates(&self) -> Vec<Pred> {
        let mut seen: IndexMap<Pred, ()> = IndexMap::new();
        for d in &self.declarations {
            seen.insert(d.pred, ());
        }
        for c in &self.clauses {
            seen.insert(c.pred(), ());
        }
        seen.into_keys().collect()
    }

    pub fn add_fact(&mut self, head: Term) {
        self.clauses.push(Clause::fact(head));
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Query {
    pub goals: Vec<Term>,
    pub var_names: Vec<String>,
}

impl Query {
    /// Ids and names of the variables reported in answers: named ones not
    /// starting with `_`.
    pub fn answer_vars(&self) -> Vec<(usize, &str)> {
        self.var_names
            .iter()
            .enumerate()
            .filter(|(_, n)| !n.starts_with('_'))
            .map(|(i, n)| (i, n.as_str()))
            .collect()
    }
}

pub fn parse_program(src: &str) -> Result<Program, ParseError> {
    let lexemes = lexer::tokenize(src)?;
    let mut p = Parser::new(&lexemes);
    let mut prog = Program::default();
    while p.peek().tok != Tok::Eof {
        if p.peek().tok == Tok::Neck {
            p.next();
            directive(&mut p, &mut prog)?;
        } else {
            let clause = clause(&mut p)?;
            prog.clauses.push(clause);
        }
    }
    check_declaration_arities(&prog)?;
    Ok(prog)
}

pub fn parse_query(src: &str) -> Result<Query, ParseError> {
    let lexemes = lexer::tokenize(src)?;
    let mut p = Parser::new(&lexemes);
    if matches!(p.peek().tok, Tok::Eof | Tok::End) {
        return Err(p.error_here("empty query"));
    }
    let goals = conjunction(&mut p)?;
    if p.peek().tok == Tok::End {
        p.next();
    }
    if p.peek().tok != Tok::Eof {
        return Err(p.error_here(format!("unexpected {} after query", describe(&p.peek().tok))));
    }
    Ok(Query { goals, var_names: p.reset_scope().names })
}

fn clause(p: &mut Parser<'_>) -> Result<Clause, ParseError> {
    let at = p.peek().clone();
    let head = p.term(ARG_PRIORITY)?;
    if !matches!(head, Term::Atom(_) | Term::Struct(..)) {
        return Err(ParseError { line: at.line, col: at.col, msg: format!("clause head {head} is not callable") });
    }
    let body = match p.peek().tok {
        Tok::Neck => {
            p.next();
            conjunction(p)?
        }
        _ => Vec::new(),
    };
    p.expect(Tok::End, "`.` ending the clause")?;
    Ok(Clause { head, body, var_names: p.reset_scope().names })
}

fn conjunction(p: &mut Parser<'_>) -> Result<Vec<Term>, ParseError> {
    let mut goals = Vec::new();
    loop {
        let at = p.peek().clone();
        let goal = p.term(ARG_PRIORITY)?;
        if !matches!(goal, Term::Atom(_) | Term::Struct(..)) {
            return Err(ParseError { line: at.line, col: at.col, msg: format!("goal {goal} is not callable") });
        }
        goals.push(goal);
        if p.peek().tok != Tok::Comma {
            return Ok(goals);
        }
        p.next();
    }
}

fn directive(p: &mut Parser<'_>, prog: &mut Program) -> Result<(), ParseError> {
    let at = p.peek().clone();
    match &at.tok {
        Tok::Atom(name) if name == "table" => {
            p.next();
            loop {
                table_spec(p, prog)?;
                if p.peek().tok != Tok::Comma {
                    break;
                }
                p.next();
            }
        }
        Tok::Atom(name) if name == "table_strategy" => {
            p.next();
            let pred = pred_indicator(p)?;
            p.expect(Tok::Comma, "`,` before the strategy")?;
            let s_at = p.peek().clone();
            let strategy = match &s_at.tok {
                Tok::Atom(s) => s.parse::<Strategy>().ok(),
                _ => None,
            }
            .ok_or_else(|| p.error_here("expected `local` or `batched`"))?;
            p.next();
            if prog.strategy_overrides.insert(pred, strategy).is_some() {
                return Err(ParseError {
                    line: at.line,
                    col: at.col,
                    msg: format!("duplicate strategy override for {pred}"),
                });
            }
        }
        _ => return Err(p.error_here(format!("unknown directive starting with {}", describe(&at.tok)))),
    }
    p.expect(Tok::End, "`.` ending the directive")?;
    p.reset_scope();
    Ok(())
}

fn pred_indicator(p: &mut Parser<'_>) -> Result<Pred, ParseError> {
    let t = p.term(ARG_PRIORITY)?;
    indicator_of(&t).ok_or_else(|| p.error_here(format!("expected name/arity, found {t}")))
}

fn indicator_of(t: &Term) -> Option<Pred> {
    match t {
        Term::Struct(slash, args) if slash.as_str() == "/" => match (&args[0], &args[1]) {
            (Term::Atom(name), Term::Int(n)) if *n >= 0 => Some(Pred { name: *name, arity: *n as usize }),
            _ => None,
        },
        _ => None,
    }
}

fn table_spec(p: &mut Parser<'_>, prog: &mut Program) -> Result<(), ParseError> {
    let at = p.peek().clone();
    let err = |msg: String| ParseError { line: at.line, col: at.col, msg };
    let spec = p.term(ARG_PRIORITY)?;
    let decl = if let Some(pred) = indicator_of(&spec) {
        Declaration { pred, modes: None, line: at.line }
    } else {
        let Term::Struct(name, args) = &spec else {
            return Err(err(format!("expected name(modes...) or name/arity, found {spec}")));
        };
        let modes = args
            .iter()
            .map(|a| match a {
                Term::Atom(m) => Mode::from_name(m.as_str()).ok_or_else(|| err(format!("unknown mode `{m}`", m = m.as_str()))),
                other => Err(err(format!("expected a mode name, found {other}"))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Declaration { pred: Pred { name: *name, arity: args.len() }, modes: Some(modes), line: at.line }
    };
    if prog.is_tabled(&decl.pred) {
        return Err(err(format!("duplicate table declaration for {}", decl.pred)));
    }
    prog.declarations.push(decl);
    Ok(())
}

/// A declaration whose name only ever appears with a different arity in
/// clause heads is almost certainly a typo.
fn check_declaration_arities(prog: &Program) -> Result<(), ParseError> {
    for d in &prog.declarations {
        let same_name: Vec<usize> =
            prog.clauses.iter().map(Clause::pred).filter(|c| c.name == d.pred.name).map(|c| c.arity).collect();
        if !same_name.is_empty() && !same_name.contains(&d.pred.arity) {
            return Err(ParseError {
                line: d.line,
                col: 1,
                msg: format!(
                    "table declaration for {} does not match the arity of its clauses ({})",
                    d.pred, same_name[0]
                ),
            });
        }
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let label = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{label}: {}", self.message)
    }
}

/// Static checks run before evaluation. Diagnostics are returned, not
/// raised; any of severity `Error` makes the program unrunnable.
pub fn validate(prog: &Program) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let error = |message: String| Diagnostic { severity: Severity::Error, message };
    for d in &prog.declarations {
        if let Some(modes) = &d.modes {
            if let Err(e) = crate::modes::compile_declaration(d.pred, modes) {
                out.push(error(e.to_string()));
            }
        }
        if prog.clauses_for(&d.pred).next().is_none() {
            out.push(Diagnostic {
                severity: Severity::Warning,
                message: format!("tabled predicate {} has no clauses", d.pred),
            });
        }
    }
    for pred in prog.strategy_overrides.keys() {
        if !prog.is_tabled(pred) {
            out.push(error(format!("strategy override for {pred}, which is not tabled")));
        }
    }
    let defined: std::collections::HashSet<Pred> = prog.predicates().into_iter().collect();
    let mut reported = std::collections::HashSet::new();
    for c in &prog.clauses {
        for g in &c.body {
            check_goal(g, &defined, &mut reported, &mut out);
        }
    }
    out
}

fn check_goal(
    goal: &Term,
    defined: &std::collections::HashSet<Pred>,
    reported: &mut std::collections::HashSet<Pred>,
    out: &mut Vec<Diagnostic>,
) {
    let Some(pred) = Pred::of(goal) else {
        out.push(Diagnostic { severity: Severity::Error, message: format!("goal {goal} is not callable") });
        return;
    };
    if builtins::is_builtin(&pred) || defined.contains(&pred) || !reported.insert(pred) {
        return;
    }
    out.push(Diagnostic { severity: Severity::Error, message: format!("call to undefined predicate {pred}") });
}

pub fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(|d| d.severity == Severity::Error)
}

/// Builds `name(args...)`, or the atom `name` when `args` is empty.
pub fn goal(name: &str, args: Vec<Term>) -> Term {
    Term::app(Sym::new(name), args)
}
