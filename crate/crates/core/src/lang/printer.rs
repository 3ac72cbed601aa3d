//! Source-form printing. Output re-parses to an identical program: infix
//! operators are fully parenthesized and clause variables keep their names.

use std::fmt::{self, Write};

use super::{infix_op, Clause, Declaration, Program, Query};
use crate::terms::{write_atom, write_float, Pred, Term};

pub fn write_term(f: &mut impl Write, t: &Term, names: &[String]) -> fmt::Result {
    match t {
        Term::Atom(s) => write_atom(f, s.as_str()),
        Term::Int(i) => write!(f, "{i}"),
        Term::Float(x) => write_float(f, x.0),
        Term::Var(v) => match names.get(*v) {
            Some(name) => f.write_str(name),
            None => write!(f, "_V{v}"),
        },
        Term::Struct(name, args) => {
            if args.len() == 2 && infix_op(name.as_str()).is_some() {
                f.write_char('(')?;
                write_term(f, &args[0], names)?;
                write!(f, " {} ", name.as_str())?;
                write_term(f, &args[1], names)?;
                return f.write_char(')');
            }
            write_atom(f, name.as_str())?;
            f.write_char('(')?;
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write_term(f, a, names)?;
            }
            f.write_char(')')
        }
    }
}

fn write_goals(f: &mut impl Write, goals: &[Term], names: &[String]) -> fmt::Result {
    for (i, g) in goals.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write_term(f, g, names)?;
    }
    Ok(())
}

fn write_pred(f: &mut impl Write, p: &Pred) -> fmt::Result {
    write!(f, "{p}")
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_term(f, &self.head, &self.var_names)?;
        if !self.body.is_empty() {
            f.write_str(" :- ")?;
            write_goals(f, &self.body, &self.var_names)?;
        }
        f.write_char('.')
    }
}

impl fmt::Display for Declaration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(":- table ")?;
        match &self.modes {
            None => write_pred(f, &self.pred)?,
            Some(modes) => {
                write_atom(f, self.pred.name.as_str())?;
                f.write_char('(')?;
                for (i, m) in modes.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{m}")?;
                }
                f.write_char(')')?;
            }
        }
        f.write_char('.')
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in &self.declarations {
            writeln!(f, "{d}")?;
        }
        for (p, s) in &self.strategy_overrides {
            f.write_str(":- table_strategy ")?;
            write_pred(f, p)?;
            writeln!(f, ", {s}.")?;
        }
        if !self.declarations.is_empty() || !self.strategy_overrides.is_empty() {
            writeln!(f)?;
        }
        for c in &self.clauses {
            writeln!(f, "{c}")?;
        }
        Ok(())
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_goals(f, &self.goals, &self.var_names)
    }
}
