//! Variable bindings produced by one unification step.

use std::sync::Arc;

use crate::terms::Term;

/// A small triangular substitution. Bindings may point at terms that
/// contain further bound variables; [`resolve`](Bindings::resolve) follows
/// them all.
#[derive(Clone, Debug, Default)]
pub struct Bindings {
    slots: Vec<(usize, Term)>,
}

impl Bindings {
    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn lookup(&self, var: usize) -> Option<&Term> {
        self.slots.iter().rev().find(|(v, _)| *v == var).map(|(_, t)| t)
    }

    pub fn bind(&mut self, var: usize, value: Term) {
        self.slots.push((var, value));
    }

    /// Follows variable bindings at the top of `t` only.
    pub fn walk<'a>(&'a self, mut t: &'a Term) -> &'a Term {
        while let Term::Var(v) = t {
            match self.lookup(*v) {
                Some(next) => t = next,
                None => break,
            }
        }
        t
    }

    /// Unifies without an occurs check. On failure some bindings may have
    /// been added; callers discard the whole set.
    pub fn unify(&mut self, a: &Term, b: &Term) -> bool {
        let a = self.walk(a).clone();
        let b = self.walk(b).clone();
        match (&a, &b) {
            (Term::Var(x), Term::Var(y)) if x == y => true,
            (Term::Var(x), _) => {
                self.bind(*x, b);
                true
            }
            (_, Term::Var(y)) => {
                self.bind(*y, a);
                true
            }
            (Term::Struct(f, xs), Term::Struct(g, ys)) => {
                f == g && xs.len() == ys.len() && xs.iter().zip(ys.iter()).all(|(x, y)| self.unify(x, y))
            }
            _ => a == b,
        }
    }

    /// Applies the bindings throughout `t`.
    pub fn resolve(&self, t: &Term) -> Term {
        if self.slots.is_empty() {
            return t.clone();
        }
        self.resolve_renamed(t, 0)
    }

    /// Renames every variable `v` of `t` to `v + offset`, then applies the
    /// bindings.
    pub fn resolve_renamed(&self, t: &Term, offset: usize) -> Term {
        self.rebuild(t, offset).unwrap_or_else(|| t.clone())
    }

    /// `None` when `t` comes out unchanged.
    fn rebuild(&self, t: &Term, offset: usize) -> Option<Term> {
        match t {
            Term::Var(v) => {
                let renamed = v + offset;
                match self.lookup(renamed) {
                    Some(value) => Some(self.resolve_renamed(value, 0)),
                    None if offset != 0 => Some(Term::Var(renamed)),
                    None => None,
                }
            }
            Term::Struct(name, args) => {
                let mut changed: Option<Vec<Term>> = None;
                for (i, a) in args.iter().enumerate() {
                    if let Some(new) = self.rebuild(a, offset) {
                        changed
                        .get_or_insert_with(|| {
                            let mut v = Vec::with_capacity(args.len());
                            v.extend_from_slice(&args[..i]);
                            v
                        })
                        .push(new);
                    } else if let Some(c) = changed.as_mut() {
                        c.push(a.clone());
                    }
                }
                changed.map(|c| Term::Struct(*name, Arc::from(c)))
            }
            _ => None,
        }
    }
}
