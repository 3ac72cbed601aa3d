//! Builtin goals: unification, arithmetic evaluation and comparison.

use std::cmp::Ordering;

use thiserror::Error;

use crate::engine::Bindings;
use crate::terms::{Pred, Term};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BuiltinError {
    #[error("instantiation error: {0} is unbound in arithmetic")]
    Instantiation(Term),
    #[error("type error: {0} is not a number")]
    Type(Term),
    #[error("unknown arithmetic function {0}")]
    UnknownFunction(Pred),
    #[error("division by zero in {0}")]
    ZeroDivision(Term),
    #[error("integer overflow in {0}")]
    Overflow(Term),
}

const BUILTINS: [(&str, usize); 10] = [
    ("true", 0),
    ("fail", 0),
    ("=", 2),
    ("is", 2),
    ("<", 2),
    ("=<", 2),
    (">", 2),
    (">=", 2),
    ("=:=", 2),
    ("=\\=", 2),
];

pub fn is_builtin(pred: &Pred) -> bool {
    BUILTINS.iter().any(|&(name, arity)| pred.arity == arity && pred.name.as_str() == name)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Num {
    Int(i64),
    Float(f64),
}

impl Num {
    pub fn to_term(self) -> Term {
        match self {
            Num::Int(i) => Term::Int(i),
            Num::Float(x) => Term::float(x),
        }
    }

    fn as_f64(self) -> f64 {
        match self {
            Num::Int(i) => i as f64,
            Num::Float(x) => x,
        }
    }

    fn cmp(self, other: Num) -> Ordering {
        crate::terms::compare_ground(&self.to_term(), &other.to_term()).expect("numbers are ground")
    }
}

/// Evaluates a fully dereferenced arithmetic expression.
pub fn eval_arith(t: &Term) -> Result<Num, BuiltinError> {
    match t {
        Term::Int(i) => Ok(Num::Int(*i)),
        Term::Float(x) => Ok(Num::Float(x.0)),
        Term::Var(_) => Err(BuiltinError::Instantiation(t.clone())),
        Term::Atom(_) => Err(BuiltinError::Type(t.clone())),
        Term::Struct(name, args) => {
            let op = name.as_str();
            if args.len() == 1 {
                let x = eval_arith(&args[0])?;
                return match (op, x) {
                    ("-", Num::Int(i)) => i.checked_neg().map(Num::Int).ok_or_else(|| BuiltinError::Overflow(t.clone())),
                    ("-", Num::Float(f)) => Ok(Num::Float(-f)),
                    ("abs", Num::Int(i)) => i.checked_abs().map(Num::Int).ok_or_else(|| BuiltinError::Overflow(t.clone())),
                    ("abs", Num::Float(f)) => Ok(Num::Float(f.abs())),
                    _ => Err(BuiltinError::UnknownFunction(Pred { name: *name, arity: 1 })),
                };
            }
            if args.len() != 2 {
                return Err(BuiltinError::UnknownFunction(Pred { name: *name, arity: args.len() }));
            }
            let x = eval_arith(&args[0])?;
            let y = eval_arith(&args[1])?;
            let overflow = || BuiltinError::Overflow(t.clone());
            let zero = || BuiltinError::ZeroDivision(t.clone());
            match op {
                "+" | "-" | "*" => match (x, y) {
                    (Num::Int(a), Num::Int(b)) => {
                        let r = match op {
                            "+" => a.checked_add(b),
                            "-" => a.checked_sub(b),
                            _ => a.checked_mul(b),
                        };
                        r.map(Num::Int).ok_or_else(overflow)
                    }
                    _ => {
                        let (a, b) = (x.as_f64(), y.as_f64());
                        Ok(Num::Float(match op {
                            "+" => a + b,
                            "-" => a - b,
                            _ => a * b,
                        }))
                    }
                },
                "/" => match (x, y) {
                    (Num::Int(_), Num::Int(0)) => Err(zero()),
                    (Num::Int(a), Num::Int(b)) if a.checked_rem(b) == Some(0) => {
                        a.checked_div(b).map(Num::Int).ok_or_else(overflow)
                    }
                    _ if y.as_f64() == 0.0 => Err(zero()),
                    _ => Ok(Num::Float(x.as_f64() / y.as_f64())),
                },
                "//" => match (x, y) {
                    (Num::Int(_), Num::Int(0)) => Err(zero()),
                    (Num::Int(a), Num::Int(b)) => a.checked_div(b).map(Num::Int).ok_or_else(overflow),
                    (Num::Float(_), _) => Err(BuiltinError::Type(args[0].clone())),
                    (_, Num::Float(_)) => Err(BuiltinError::Type(args[1].clone())),
                },
                "min" => Ok(if y.cmp(x) == Ordering::Less { y } else { x }),
                "max" => Ok(if y.cmp(x) == Ordering::Greater { y } else { x }),
                _ => Err(BuiltinError::UnknownFunction(Pred { name: *name, arity: 2 })),
            }
        }
    }
}

/// Runs a builtin goal. Returns `Ok(false)` on failure; on success any new
/// bindings have been added to `b`.
pub fn eval_builtin(goal: &Term, b: &mut Bindings) -> Result<bool, BuiltinError> {
    let Some((name, _)) = goal.functor() else {
        return Ok(false);
    };
    let args = goal.args();
    Ok(match name.as_str() {
        "true" => true,
        "fail" => false,
        "=" => b.unify(&args[0], &args[1]),
        "is" => {
            let value = eval_arith(&b.resolve(&args[1]))?;
            b.unify(&args[0], &value.to_term())
        }
        op => {
            let x = eval_arith(&b.resolve(&args[0]))?;
            let y = eval_arith(&b.resolve(&args[1]))?;
            let ord = x.cmp(y);
            match op {
                "<" => ord == Ordering::Less,
                "=<" => ord != Ordering::Greater,
                ">" => ord == Ordering::Greater,
                ">=" => ord != Ordering::Less,
                "=:=" => ord == Ordering::Equal,
                "=\\=" => ord != Ordering::Equal,
                _ => unreachable!("not a builtin: {goal}"),
            }
        }
    })
}
