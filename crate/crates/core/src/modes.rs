//! Mode declarations and the mode-directed answer insertion policy.
//!
//! A declaration `table p(m1, ..., mn)` is compiled into a [`ModeArray`] that
//! lists arguments in access order rather than source order:
//!
//! 1. `index` arguments,
//! 2. `min` / `max` arguments,
//! 3. `all` arguments,
//! 4. the single `sum` or `last` argument,
//! 5. `first` arguments.
//!
//! Calls are stored in the subgoal trie in that order, and answers are
//! inserted segment by segment in the same order. Because every decision
//! point sits above the segments it governs, replacing a stored value only
//! ever invalidates the subtree hanging below the decision node.

use std::cmp::Ordering;
use std::fmt;

use thiserror::Error;

use crate::terms::{
    compare_ground_slices, decode_one, tokenize_into, Pred, Term, TermError, Token, VarMap,
};
use crate::tries::{LeafId, NodeId, SubgoalFrame, Trie, TrieError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    Index,
    First,
    Last,
    Min,
    Max,
    Sum,
    All,
}

impl Mode {
    pub const ALL_MODES: [Mode; 7] =
        [Mode::Index, Mode::First, Mode::Last, Mode::Min, Mode::Max, Mode::Sum, Mode::All];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Index => "index",
            Mode::First => "first",
            Mode::Last => "last",
            Mode::Min => "min",
            Mode::Max => "max",
            Mode::Sum => "sum",
            Mode::All => "all",
        }
    }

    pub fn from_name(name: &str) -> Option<Mode> {
        Mode::ALL_MODES.into_iter().find(|m| m.name() == name)
    }

    /// Position of the mode's group in a compiled mode array.
    pub fn group(self) -> u8 {
        match self {
            Mode::Index => 0,
            Mode::Min | Mode::Max => 1,
            Mode::All => 2,
            Mode::Sum | Mode::Last => 3,
            Mode::First => 4,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModeError {
    #[error("{pred}: at most one sum or last argument is allowed")]
    MultipleAggregates { pred: Pred },
    #[error("{pred}: declaration lists {got} modes")]
    Arity { pred: Pred, got: usize },
    #[error("{pred}: argument {arg} ({mode}) needs a ground value, got {term}")]
    NonGround { pred: Pred, arg: usize, mode: Mode, term: Term },
    #[error("{pred}: argument {arg} (sum) needs a number, got {term}")]
    NotNumber { pred: Pred, arg: usize, term: Term },
    #[error("{pred}: integer overflow summing argument {arg}")]
    Overflow { pred: Pred, arg: usize },
    #[error("{pred}: expected {expected} substitution terms, got {got}")]
    AnswerLength { pred: Pred, expected: usize, got: usize },
    #[error("preferable() applies to min and max only, not {0}")]
    NotOrdered(Mode),
    #[error(transparent)]
    Term(#[from] TermError),
    #[error(transparent)]
    Trie(#[from] TrieError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModeEntry {
    /// 1-based argument position.
    pub arg: usize,
    pub mode: Mode,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModeArray {
    entries: Vec<ModeEntry>,
}

impl ModeArray {
    /// Plain tabling: every argument is an index argument, in source order.
    pub fn traditional(arity: usize) -> ModeArray {
        ModeArray { entries: (1..=arity).map(|arg| ModeEntry { arg, mode: Mode::Index }).collect() }
    }

    pub fn entries(&self) -> &[ModeEntry] {
        &self.entries
    }

    pub fn arity(&self) -> usize {
        self.entries.len()
    }

    /// Modes indexed by source position.
    pub fn source_modes(&self) -> Vec<Mode> {
        let mut out = vec![Mode::Index; self.entries.len()];
        for e in &self.entries {
            out[e.arg - 1] = e.mode;
        }
        out
    }

    pub fn is_traditional(&self) -> bool {
        self.entries.iter().all(|e| e.mode == Mode::Index)
    }
}

impl fmt::Display for ModeArray {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, e) in self.entries.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "({},{})", e.arg, e.mode)?;
        }
        f.write_str("]")
    }
}

/// Compiles modes given in source order into access order.
pub fn compile_declaration(pred: Pred, modes: &[Mode]) -> Result<ModeArray, ModeError> {
    if modes.len() != pred.arity || modes.is_empty() {
        return Err(ModeError::Arity { pred, got: modes.len() });
    }
    if modes.iter().filter(|m| matches!(m, Mode::Sum | Mode::Last)).count() > 1 {
        return Err(ModeError::MultipleAggregates { pred });
    }
    let mut entries: Vec<ModeEntry> =
        modes.iter().enumerate().map(|(i, &mode)| ModeEntry { arg: i + 1, mode }).collect();
    entries.sort_by_key(|e| e.mode.group());
    Ok(ModeArray { entries })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SubstEntry {
    pub mode: Mode,
    pub arg: usize,
    /// Fresh variables this argument introduced into the call.
    pub var_count: usize,
}

/// Per-call companion of the mode array: how many answer substitution terms
/// each argument contributes, in mode-array order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubstitutionArray {
    entries: Vec<SubstEntry>,
}

impl SubstitutionArray {
    pub fn from_counts(ma: &ModeArray, counts: &[usize]) -> SubstitutionArray {
        SubstitutionArray {
            entries: ma
                .entries()
                .iter()
                .zip(counts)
                .map(|(e, &var_count)| SubstEntry { mode: e.mode, arg: e.arg, var_count })
                .collect(),
        }
    }

    pub fn entries(&self) -> &[SubstEntry] {
        &self.entries
    }

    pub fn total_vars(&self) -> usize {
        self.entries.iter().map(|e| e.var_count).sum()
    }

    /// `(mode, count)` pairs with zero-count entries dropped and adjacent
    /// entries of the same mode merged.
    pub fn compact(&self) -> Vec<(Mode, usize)> {
        let mut out: Vec<(Mode, usize)> = Vec::new();
        for e in self.entries.iter().filter(|e| e.var_count > 0) {
            match out.last_mut() {
                Some((m, n)) if *m == e.mode => *n += e.var_count,
                _ => out.push((e.mode, e.var_count)),
            }
        }
        out
    }
}

impl fmt::Display for SubstitutionArray {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, e) in self.entries.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "({},{})", e.mode, e.var_count)?;
        }
        f.write_str("]")
    }
}

pub fn build_substitution_array(ma: &ModeArray, call_args: &[Term]) -> SubstitutionArray {
    let mut vars = VarMap::new();
    let mut scratch = Vec::new();
    let counts: Vec<usize> = ma
        .entries()
        .iter()
        .map(|e| {
            let before = vars.len();
            tokenize_into(&call_args[e.arg - 1], &mut vars, &mut scratch);
            vars.len() - before
        })
        .collect();
    SubstitutionArray::from_counts(ma, &counts)
}

// ---------------------------------------------------------------------------
// Answer insertion

#[derive(Clone, Debug, PartialEq)]
pub enum InsertOutcome {
    New,
    /// A preferable answer replaced the given number of stored answers.
    Replaced(usize),
    /// A new `all` value joined its siblings.
    Added,
    Rejected,
    SumUpdated(Term),
}

impl InsertOutcome {
    pub fn changes_table(&self) -> bool {
        !matches!(self, InsertOutcome::Rejected)
    }

    pub fn label(&self) -> &'static str {
        match self {
            InsertOutcome::New => "new",
            InsertOutcome::Replaced(_) => "replaced",
            InsertOutcome::Added => "added",
            InsertOutcome::Rejected => "rejected",
            InsertOutcome::SumUpdated(_) => "sum_updated",
        }
    }
}

impl fmt::Display for InsertOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InsertOutcome::Replaced(n) => write!(f, "replaced({n})"),
            InsertOutcome::SumUpdated(t) => write!(f, "sum_updated({t})"),
            other => f.write_str(other.label()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Inserted {
    pub outcome: InsertOutcome,
    /// Leaf of the stored answer; `None` when rejected.
    pub leaf: Option<LeafId>,
    /// Leaves invalidated by this insertion.
    pub invalidated: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preference {
    KeepOld,
    Replace,
    Tie,
}

/// Decides between a stored and a candidate value under `min` or `max`.
pub fn preferable(mode: Mode, old: &Term, new: &Term) -> Result<Preference, ModeError> {
    preferable_slices(mode, std::slice::from_ref(old), std::slice::from_ref(new))
}

fn preferable_slices(mode: Mode, old: &[Term], new: &[Term]) -> Result<Preference, ModeError> {
    let ord = compare_ground_slices(new, old)?;
    let better = match mode {
        Mode::Min => Ordering::Less,
        Mode::Max => Ordering::Greater,
        other => return Err(ModeError::NotOrdered(other)),
    };
    Ok(if ord == Ordering::Equal {
        Preference::Tie
    } else if ord == better {
        Preference::Replace
    } else {
        Preference::KeepOld
    })
}

struct Segment<'a> {
    entry: SubstEntry,
    terms: &'a [Term],
    tokens: Vec<Token>,
}

/// Reads the single stored value hanging below `from` that spans `count`
/// terms. Returns the first node of the value, its last node and its tokens,
/// or `None` when nothing is stored there.
fn stored_value(trie: &Trie, from: NodeId, count: usize) -> Result<Option<(NodeId, NodeId, Vec<Token>)>, TrieError> {
    if trie.child_count(from) == 0 {
        return Ok(None);
    }
    let mut need = count;
    let mut cur = from;
    let mut first = None;
    let mut tokens = Vec::new();
    while need > 0 {
        let mut kids = trie.children(cur);
        let next = match (kids.next(), kids.next()) {
            (Some(n), None) => n,
            (None, _) => return Err(TrieError::Corrupt("stored value ends early".into())),
            (Some(_), Some(_)) => {
                return Err(TrieError::Corrupt("aggregate argument holds several values".into()))
            }
        };
        let tok = trie.token(next).expect("non-root node has a token");
        need -= 1;
        if let Token::Functor(_, arity) = tok {
            need += arity as usize;
        }
        tokens.push(tok);
        first.get_or_insert(next);
        cur = next;
    }
    Ok(Some((first.unwrap(), cur, tokens)))
}

fn decode_terms(tokens: &[Token]) -> Vec<Term> {
    let mut out = Vec::new();
    let mut rest = tokens;
    while !rest.is_empty() {
        let (t, r) = decode_one(rest).expect("stored values are well formed");
        out.push(t);
        rest = r;
    }
    out
}

fn add_numbers(pred: Pred, arg: usize, a: &Term, b: &Term) -> Result<Term, ModeError> {
    Ok(match (a, b) {
        (Term::Int(x), Term::Int(y)) => {
            Term::Int(x.checked_add(*y).ok_or(ModeError::Overflow { pred, arg })?)
        }
        (Term::Int(x), Term::Float(y)) => Term::float(*x as f64 + y.0),
        (Term::Float(x), Term::Int(y)) => Term::float(x.0 + *y as f64),
        (Term::Float(x), Term::Float(y)) => Term::float(x.0 + y.0),
        (x, y) => {
            let bad = if x.is_number() { y } else { x };
            return Err(ModeError::NotNumber { pred, arg, term: bad.clone() });
        }
    })
}

/// Inserts one answer, given as substitution terms in substitution-array
/// order, applying each argument's mode.
///
/// Decisions are taken while walking existing paths, before anything is
/// written, so a rejected answer leaves the table untouched.
pub fn insert_answer(frame: &mut SubgoalFrame, subst_terms: &[Term]) -> Result<Inserted, ModeError> {
    frame.ensure_incomplete()?;
    let pred = frame.predicate();
    let layout = frame.substitution_array();
    if subst_terms.len() != layout.total_vars() {
        return Err(ModeError::AnswerLength {
            pred,
            expected: layout.total_vars(),
            got: subst_terms.len(),
        });
    }

    let mut vars = VarMap::new();
    let mut segments = Vec::with_capacity(layout.entries().len());
    let mut offset = 0;
    for entry in layout.entries().iter().copied().filter(|e| e.var_count > 0) {
        let terms = &subst_terms[offset..offset + entry.var_count];
        offset += entry.var_count;
        if matches!(entry.mode, Mode::Min | Mode::Max | Mode::Sum) {
            if let Some(t) = terms.iter().find(|t| !t.is_ground()) {
                return Err(ModeError::NonGround { pred, arg: entry.arg, mode: entry.mode, term: t.clone() });
            }
        }
        if entry.mode == Mode::Sum && (entry.var_count != 1 || !terms[0].is_number()) {
            return Err(ModeError::NotNumber { pred, arg: entry.arg, term: terms[0].clone() });
        }
        let mut tokens = Vec::new();
        for t in terms {
            tokenize_into(t, &mut vars, &mut tokens);
        }
        segments.push(Segment { entry, terms, tokens });
    }

    let trie = frame.answer_trie();
    let mut cur = trie.root();
    for (i, seg) in segments.iter().enumerate() {
        match seg.entry.mode {
            Mode::Index | Mode::All => {
                let siblings = trie.child_count(cur) > 0;
                for (j, tok) in seg.tokens.iter().enumerate() {
                    match trie.child(cur, tok) {
                        Some(next) => cur = next,
                        None => {
                            let outcome = if seg.entry.mode == Mode::All && siblings {
                                InsertOutcome::Added
                            } else {
                                InsertOutcome::New
                            };
                            return store(frame, cur, &seg.tokens[j..], &segments[i + 1..], outcome, 0);
                        }
                    }
                }
            }
            Mode::Min | Mode::Max => {
                let Some((head, tail, tokens)) = stored_value(trie, cur, seg.terms.len())? else {
                    return store(frame, cur, &seg.tokens, &segments[i + 1..], InsertOutcome::New, 0);
                };
                match preferable_slices(seg.entry.mode, &decode_terms(&tokens), seg.terms)? {
                    Preference::KeepOld => return Ok(reject(frame)),
                    Preference::Tie => cur = tail,
                    Preference::Replace => {
                        let inv = frame.unlink_and_invalidate(head)?;
                        let n = inv.leaves_invalidated;
                        return store(frame, cur, &seg.tokens, &segments[i + 1..], InsertOutcome::Replaced(n), n);
                    }
                }
            }
            Mode::Sum => {
                let Some((head, _, tokens)) = stored_value(trie, cur, 1)? else {
                    return store(frame, cur, &seg.tokens, &segments[i + 1..], InsertOutcome::New, 0);
                };
                let old = decode_terms(&tokens).pop().unwrap();
                let total = add_numbers(pred, seg.entry.arg, &old, &seg.terms[0])?;
                let inv = frame.unlink_and_invalidate(head)?;
                let mut total_tokens = Vec::new();
                tokenize_into(&total, &mut VarMap::new(), &mut total_tokens);
                let n = inv.leaves_invalidated;
                return store(frame, cur, &total_tokens, &segments[i + 1..], InsertOutcome::SumUpdated(total), n);
            }
            Mode::Last => {
                let Some((head, tail, tokens)) = stored_value(trie, cur, seg.terms.len())? else {
                    return store(frame, cur, &seg.tokens, &segments[i + 1..], InsertOutcome::New, 0);
                };
                if tokens == seg.tokens {
                    cur = tail;
                } else {
                    let inv = frame.unlink_and_invalidate(head)?;
                    let n = inv.leaves_invalidated;
                    return store(frame, cur, &seg.tokens, &segments[i + 1..], InsertOutcome::Replaced(n), n);
                }
            }
            Mode::First => {
                if trie.child_count(cur) > 0 {
                    return Ok(reject(frame));
                }
                return store(frame, cur, &seg.tokens, &segments[i + 1..], InsertOutcome::New, 0);
            }
        }
    }

    // Every segment matched an existing path.
    if trie.payload(cur).is_some() {
        return Ok(reject(frame));
    }
    store(frame, cur, &[], &[], InsertOutcome::New, 0)
}

fn reject(frame: &mut SubgoalFrame) -> Inserted {
    frame.stats.rejected += 1;
    Inserted { outcome: InsertOutcome::Rejected, leaf: None, invalidated: 0 }
}

fn store(
    frame: &mut SubgoalFrame,
    at: NodeId,
    head: &[Token],
    rest: &[Segment<'_>],
    outcome: InsertOutcome,
    invalidated: usize,
) -> Result<Inserted, ModeError> {
    let trie = frame.answer_trie_mut();
    let (mut node, _) = trie.insert_from(at, head);
    for seg in rest {
        node = trie.insert_from(node, &seg.tokens).0;
    }
    let leaf = frame.append_answer_leaf(node)?;
    frame.stats.inserted += 1;
    Ok(Inserted { outcome, leaf: Some(leaf), invalidated })
}
