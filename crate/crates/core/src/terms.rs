//! Logic terms, canonical variable numbering and the flat token form used
//! as trie paths.
//!
//! A term is tokenized in preorder: a compound contributes its
//! `functor/arity` token followed by the tokens of its arguments, and every
//! variable becomes a `VARi` constant numbered by first occurrence. The
//! numbering context ([`VarMap`]) is shared across all arguments of one
//! encoding, so `p(X, X)` and `p(X, Y)` produce different paths.
//!
//! Ground terms are totally ordered for `min`/`max` aggregation: numbers
//! (integers and floats interleaved by value) sort before atoms, atoms sort
//! lexicographically, and atoms sort before compounds. Compounds compare by
//! arity, then functor name, then argument-wise. Ordering of non-numeric
//! terms is a convention of this crate; only numeric order is usually
//! relied on by programs.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::{Arc, OnceLock, RwLock};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TermError {
    #[error("malformed token sequence: {0}")]
    Malformed(String),
    #[error("term is not ground: {0}")]
    NonGround(Term),
}

// ---------------------------------------------------------------------------
// Symbols

#[derive(Default)]
struct Interner {
    names: Vec<&'static str>,
    ids: HashMap<&'static str, u32>,
}

fn interner() -> &'static RwLock<Interner> {
    static INTERNER: OnceLock<RwLock<Interner>> = OnceLock::new();
    INTERNER.get_or_init(Default::default)
}

/// Interned atom or functor name.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Sym(u32);

impl Sym {
    pub fn new(name: &str) -> Sym {
        if let Some(&id) = interner().read().unwrap().ids.get(name) {
            return Sym(id);
        }
        let mut table = interner().write().unwrap();
        if let Some(&id) = table.ids.get(name) {
            return Sym(id);
        }
        let leaked: &'static str = Box::leak(name.to_owned().into_boxed_str());
        let id = table.names.len() as u32;
        table.names.push(leaked);
        table.ids.insert(leaked, id);
        Sym(id)
    }

    pub fn as_str(self) -> &'static str {
        interner().read().unwrap().names[self.0 as usize]
    }
}

impl fmt::Debug for Sym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_str())
    }
}

impl fmt::Display for Sym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Float with bitwise identity, so terms can be hashed and used as trie keys.
/// Numeric comparison lives in [`compare_ground`].
#[derive(Clone, Copy, Debug)]
pub struct F64(pub f64);

impl PartialEq for F64 {
    fn eq(&self, other: &Self) -> bool {
        self.0.to_bits() == other.0.to_bits()
    }
}

impl Eq for F64 {}

impl Hash for F64 {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.to_bits().hash(state)
    }
}

/// Predicate indicator `name/arity`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pred {
    pub name: Sym,
    pub arity: usize,
}

impl Pred {
    pub fn new(name: &str, arity: usize) -> Pred {
        Pred { name: Sym::new(name), arity }
    }

    pub fn of(term: &Term) -> Option<Pred> {
        term.functor().map(|(name, arity)| Pred { name, arity })
    }
}

impl fmt::Display for Pred {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_atom(f, self.name.as_str())?;
        write!(f, "/{}", self.arity)
    }
}

impl fmt::Debug for Pred {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

// ---------------------------------------------------------------------------
// Terms

#[derive(Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Atom(Sym),
    Int(i64),
    Float(F64),
    Var(usize),
    /// Compound term; always at least one argument.
    Struct(Sym, Arc<[Term]>),
}

impl Term {
    pub fn atom(name: &str) -> Term {
        Term::Atom(Sym::new(name))
    }

    pub fn float(v: f64) -> Term {
        Term::Float(F64(v))
    }

    /// Builds a compound, collapsing the zero-argument case to an atom.
    pub fn compound(name: &str, args: Vec<Term>) -> Term {
        Term::app(Sym::new(name), args)
    }

    pub fn app(functor: Sym, args: Vec<Term>) -> Term {
        if args.is_empty() {
            Term::Atom(functor)
        } else {
            Term::Struct(functor, args.into())
        }
    }

    /// Name and arity of the principal functor, for callable terms.
    pub fn functor(&self) -> Option<(Sym, usize)> {
        match self {
            Term::Atom(s) => Some((*s, 0)),
            Term::Struct(s, args) => Some((*s, args.len())),
            _ => None,
        }
    }

    pub fn args(&self) -> &[Term] {
        match self {
            Term::Struct(_, args) => args,
            _ => &[],
        }
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::Struct(_, args) => args.iter().all(Term::is_ground),
            _ => true,
        }
    }

    pub fn is_number(&self) -> bool {
        matches!(self, Term::Int(_) | Term::Float(_))
    }

    /// Visits variables in left-to-right order, repeats included.
    pub fn for_each_var(&self, f: &mut impl FnMut(usize)) {
        match self {
            Term::Var(v) => f(*v),
            Term::Struct(_, args) => args.iter().for_each(|a| a.for_each_var(f)),
            _ => {}
        }
    }

    /// Applies `f` to every variable, rebuilding only the spine that changes.
    pub fn map_vars(&self, f: &mut impl FnMut(usize) -> Term) -> Term {
        match self {
            Term::Var(v) => f(*v),
            Term::Struct(name, args) => {
                Term::Struct(*name, args.iter().map(|a| a.map_vars(f)).collect())
            }
            other => other.clone(),
        }
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

pub(crate) fn atom_needs_quotes(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_lowercase() => !chars.all(|c| c.is_ascii_alphanumeric() || c == '_'),
        _ => true,
    }
}

pub(crate) fn write_atom(f: &mut impl fmt::Write, name: &str) -> fmt::Result {
    if atom_needs_quotes(name) {
        f.write_char('\'')?;
        for c in name.chars() {
            match c {
                '\'' => f.write_str("\\'")?,
                '\\' => f.write_str("\\\\")?,
                '\n' => f.write_str("\\n")?,
                c => f.write_char(c)?,
            }
        }
        f.write_char('\'')
    } else {
        f.write_str(name)
    }
}

pub(crate) fn write_float(f: &mut impl fmt::Write, v: f64) -> fmt::Result {
    // Debug keeps a decimal point or exponent, so floats never read back as integers.
    write!(f, "{v:?}")
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Atom(s) => write_atom(f, s.as_str()),
            Term::Int(i) => write!(f, "{i}"),
            Term::Float(x) => write_float(f, x.0),
            Term::Var(v) => write!(f, "_{v}"),
            Term::Struct(name, args) => {
                write_atom(f, name.as_str())?;
                f.write_str("(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Tokens

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub enum Token {
    Functor(Sym, u32),
    Atom(Sym),
    Int(i64),
    Float(F64),
    Var(u32),
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Functor(s, n) => {
                write_atom(f, s.as_str())?;
                write!(f, "/{n}")
            }
            Token::Atom(s) => write_atom(f, s.as_str()),
            Token::Int(i) => write!(f, "{i}"),
            Token::Float(x) => write_float(f, x.0),
            Token::Var(i) => write!(f, "VAR{i}"),
        }
    }
}

impl fmt::Debug for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Flattened preorder form of one or more terms.
#[derive(Clone, PartialEq, Eq, Hash, Default, Debug)]
pub struct TokenSeq(pub Vec<Token>);

impl TokenSeq {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn tokens(&self) -> &[Token] {
        &self.0
    }
}

impl fmt::Display for TokenSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{t}")?;
        }
        Ok(())
    }
}

/// Variable numbering context for one encoding. Records the variables in the
/// order they were first seen.
#[derive(Default, Debug, Clone)]
pub struct VarMap {
    order: Vec<usize>,
}

impl VarMap {
    pub fn new() -> VarMap {
        VarMap::default()
    }

    pub fn ordinal(&mut self, var: usize) -> u32 {
        match self.order.iter().position(|&v| v == var) {
            Some(i) => i as u32,
            None => {
                self.order.push(var);
                (self.order.len() - 1) as u32
            }
        }
    }

    /// Variables in first-occurrence order.
    pub fn vars(&self) -> &[usize] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }
}

/// Appends the tokens of `term` to `out`.
pub fn tokenize_into(term: &Term, vars: &mut VarMap, out: &mut Vec<Token>) {
    match term {
        Term::Atom(s) => out.push(Token::Atom(*s)),
        Term::Int(i) => out.push(Token::Int(*i)),
        Term::Float(x) => out.push(Token::Float(*x)),
        Term::Var(v) => out.push(Token::Var(vars.ordinal(*v))),
        Term::Struct(name, args) => {
            out.push(Token::Functor(*name, args.len() as u32));
            for a in args.iter() {
                tokenize_into(a, vars, out);
            }
        }
    }
}

pub fn tokenize(args: &[Term], vars: &mut VarMap) -> TokenSeq {
    let mut out = Vec::new();
    for a in args {
        tokenize_into(a, vars, &mut out);
    }
    TokenSeq(out)
}

/// Reads one term from the front of `tokens`, returning it and the rest.
pub fn decode_one(tokens: &[Token]) -> Result<(Term, &[Token]), TermError> {
    let (first, mut rest) = tokens
        .split_first()
        .ok_or_else(|| TermError::Malformed("sequence ended inside a term".into()))?;
    let term = match *first {
        Token::Atom(s) => Term::Atom(s),
        Token::Int(i) => Term::Int(i),
        Token::Float(x) => Term::Float(x),
        Token::Var(i) => Term::Var(i as usize),
        Token::Functor(name, arity) => {
            if arity == 0 {
                return Err(TermError::Malformed(format!("functor {name}/0")));
            }
            let mut args = Vec::with_capacity(arity as usize);
            for _ in 0..arity {
                let (a, r) = decode_one(rest)?;
                args.push(a);
                rest = r;
            }
            Term::Struct(name, args.into())
        }
    };
    Ok((term, rest))
}

/// Decodes a whole sequence into the list of terms it encodes.
///
/// Fails if a functor is short of arguments or if a `VARi` skips ahead of
/// the variables seen so far.
pub fn decode(seq: &[Token]) -> Result<Vec<Term>, TermError> {
    let mut seen = 0u32;
    for t in seq {
        if let Token::Var(i) = *t {
            match i.cmp(&seen) {
                Ordering::Less => {}
                Ordering::Equal => seen += 1,
                Ordering::Greater => {
                    return Err(TermError::Malformed(format!(
                        "VAR{i} appears before VAR{seen}"
                    )))
                }
            }
        }
    }
    let mut out = Vec::new();
    let mut rest = seq;
    while !rest.is_empty() {
        let (t, r) = decode_one(rest)?;
        out.push(t);
        rest = r;
    }
    Ok(out)
}

/// Renumbers variables to `0..k` by first left-to-right occurrence across
/// all of `args`.
pub fn canonical_args(args: &[Term]) -> Vec<Term> {
    let mut vars = VarMap::new();
    args.iter()
        .map(|a| a.map_vars(&mut |v| Term::Var(vars.ordinal(v) as usize)))
        .collect()
}

pub fn canonical(t: &Term) -> Term {
    canonical_args(std::slice::from_ref(t)).pop().unwrap()
}

/// Equality up to consistent variable renaming.
pub fn variant(a: &Term, b: &Term) -> bool {
    let mut va = VarMap::new();
    let mut vb = VarMap::new();
    variant_walk(a, b, &mut va, &mut vb)
}

fn variant_walk(a: &Term, b: &Term, va: &mut VarMap, vb: &mut VarMap) -> bool {
    match (a, b) {
        (Term::Var(x), Term::Var(y)) => va.ordinal(*x) == vb.ordinal(*y),
        (Term::Struct(f, xs), Term::Struct(g, ys)) => {
            f == g
                && xs.len() == ys.len()
                && xs.iter().zip(ys.iter()).all(|(x, y)| variant_walk(x, y, va, vb))
        }
        (Term::Var(_), _) | (_, Term::Var(_)) => false,
        _ => a == b,
    }
}

// ---------------------------------------------------------------------------
// Ground order

fn class_rank(t: &Term) -> u8 {
    match t {
        Term::Int(_) | Term::Float(_) => 0,
        Term::Atom(_) => 1,
        Term::Struct(..) => 2,
        Term::Var(_) => 3,
    }
}

fn cmp_int_float(i: i64, f: f64) -> Ordering {
    if f.is_nan() {
        return Ordering::Less;
    }
    let as_f = i as f64;
    match as_f.partial_cmp(&f).unwrap() {
        Ordering::Equal => {
            // `i as f64` may have rounded; settle exactly when f is integral.
            if f.fract() == 0.0 && f.abs() < 9.3e18 {
                (i as i128).cmp(&(f as i128))
            } else {
                Ordering::Equal
            }
        }
        o => o,
    }
}

fn cmp_float(a: f64, b: f64) -> Ordering {
    match (a.is_nan(), b.is_nan()) {
        (true, true) => Ordering::Equal,
        (true, false) => Ordering::Greater,
        (false, true) => Ordering::Less,
        _ => a.partial_cmp(&b).unwrap(),
    }
}

/// Total order over ground terms.
///
/// Integers and floats are compared by value, so `3` and `3.0` are equal
/// here even though they are distinct tokens. NaN sorts after every other
/// number.
pub fn compare_ground(a: &Term, b: &Term) -> Result<Ordering, TermError> {
    for t in [a, b] {
        if !t.is_ground() {
            return Err(TermError::NonGround(t.clone()));
        }
    }
    Ok(cmp_ground(a, b))
}

/// Lexicographic extension of [`compare_ground`] to lists of terms.
pub fn compare_ground_slices(xs: &[Term], ys: &[Term]) -> Result<Ordering, TermError> {
    if let Some(t) = xs.iter().chain(ys).find(|t| !t.is_ground()) {
        return Err(TermError::NonGround(t.clone()));
    }
    Ok(cmp_ground_slices(xs, ys))
}

fn cmp_ground_slices(xs: &[Term], ys: &[Term]) -> Ordering {
    xs.iter()
        .zip(ys)
        .map(|(x, y)| cmp_ground(x, y))
        .find(|o| *o != Ordering::Equal)
        .unwrap_or_else(|| xs.len().cmp(&ys.len()))
}

fn cmp_ground(a: &Term, b: &Term) -> Ordering {
    match (a, b) {
        (Term::Int(x), Term::Int(y)) => x.cmp(y),
        (Term::Int(x), Term::Float(y)) => cmp_int_float(*x, y.0),
        (Term::Float(x), Term::Int(y)) => cmp_int_float(*y, x.0).reverse(),
        (Term::Float(x), Term::Float(y)) => cmp_float(x.0, y.0),
        (Term::Atom(x), Term::Atom(y)) => x.as_str().cmp(y.as_str()),
        (Term::Struct(f, xs), Term::Struct(g, ys)) => xs
            .len()
            .cmp(&ys.len())
            .then_with(|| f.as_str().cmp(g.as_str()))
            .then_with(|| cmp_ground_slices(xs, ys)),
        _ => class_rank(a).cmp(&class_rank(b)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(i: usize) -> Term {
        Term::Var(i)
    }

    fn int(i: i64) -> Term {
        Term::Int(i)
    }

    fn toks(seq: &TokenSeq) -> String {
        seq.to_string()
    }

    #[test]
    fn tokenizes_in_preorder_with_shared_var_numbering() {
        let t = Term::compound("path", vec![v(7), int(1), Term::compound("f", vec![v(3)])]);
        let seq = tokenize(&[t], &mut VarMap::new());
        assert_eq!(seq.len(), 5);
        assert_eq!(toks(&seq), "path/3 VAR0 1 f/1 VAR1");

        let t2 = Term::compound("path", vec![v(9), int(1), Term::atom("b")]);
        assert_eq!(toks(&tokenize(&[t2], &mut VarMap::new())), "path/3 VAR0 1 b");

        assert_eq!(toks(&tokenize(&[Term::atom("a")], &mut VarMap::new())), "a");
    }

    #[test]
    fn var_map_is_shared_across_arguments() {
        let mut vars = VarMap::new();
        let seq = tokenize(&[v(4), Term::compound("g", vec![v(2), v(4)])], &mut vars);
        assert_eq!(toks(&seq), "VAR0 g/2 VAR1 VAR0");
        assert_eq!(vars.vars(), &[4, 2]);
    }

    #[test]
    fn decode_examples() {
        let seq = tokenize(
            &[Term::compound("path", vec![v(0), int(1), Term::atom("b")])],
            &mut VarMap::new(),
        );
        let back = decode(seq.tokens()).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(back[0].to_string(), "path(_0,1,b)");

        assert_eq!(decode(&[Token::Atom(Sym::new("a"))]).unwrap(), vec![Term::atom("a")]);
        assert_eq!(
            decode(&[Token::Functor(Sym::new("f"), 1), Token::Var(0)]).unwrap(),
            vec![Term::compound("f", vec![v(0)])]
        );
    }

    #[test]
    fn decode_rejects_malformed() {
        assert!(decode(&[Token::Functor(Sym::new("f"), 2), Token::Int(1)]).is_err());
        assert!(decode(&[Token::Var(1)]).is_err());
        assert!(decode(&[Token::Functor(Sym::new("f"), 0)]).is_err());
    }

    #[test]
    fn variant_examples() {
        let a = Term::compound("path", vec![Term::atom("a"), v(3)]);
        let b = Term::compound("path", vec![Term::atom("a"), v(8)]);
        assert!(variant(&a, &b));
        let xx = Term::compound("p", vec![v(0), v(0)]);
        let xy = Term::compound("p", vec![v(0), v(1)]);
        assert!(!variant(&xx, &xy));
        assert!(!variant(&xy, &xx));
        let g = Term::compound("q", vec![int(1), Term::atom("z")]);
        assert!(variant(&g, &g));
    }

    #[test]
    fn ground_order_examples() {
        assert_eq!(compare_ground(&int(3), &int(5)).unwrap(), Ordering::Less);
        assert_eq!(
            compare_ground(&Term::atom("a"), &Term::atom("a")).unwrap(),
            Ordering::Equal
        );
        let f0 = Term::compound("f", vec![int(0)]);
        assert_eq!(compare_ground(&int(7), &f0).unwrap(), Ordering::Less);
        assert_eq!(compare_ground(&int(7), &Term::atom("a")).unwrap(), Ordering::Less);
        assert_eq!(compare_ground(&Term::atom("z"), &f0).unwrap(), Ordering::Less);
        assert_eq!(compare_ground(&int(3), &Term::float(3.0)).unwrap(), Ordering::Equal);
        assert_eq!(compare_ground(&Term::float(2.5), &int(3)).unwrap(), Ordering::Less);
        // arity first, then name
        let g1 = Term::compound("a", vec![int(0), int(0)]);
        let h1 = Term::compound("z", vec![int(0)]);
        assert_eq!(compare_ground(&h1, &g1).unwrap(), Ordering::Less);
    }

    #[test]
    fn ground_order_rejects_variables() {
        assert!(matches!(compare_ground(&v(0), &int(1)), Err(TermError::NonGround(_))));
        let fv = Term::compound("f", vec![v(0)]);
        let g = Term::compound("g", vec![int(1), int(2)]);
        assert!(compare_ground(&fv, &g).is_err());
        assert!(compare_ground(&Term::atom("a"), &fv).is_err());
    }

    #[test]
    fn int_float_exactness_near_precision_limit() {
        let big = (1i64 << 53) + 1;
        assert_eq!(
            compare_ground(&int(big), &Term::float((1i64 << 53) as f64)).unwrap(),
            Ordering::Greater
        );
    }
}
