//! Tabled resolution with batched and local scheduling.
//!
//! Evaluation is driven by an explicit task stack. A [`State`] is a
//! reified continuation: the goals still to prove plus the terms to report
//! when they are proved. Calls to tabled predicates go through the table
//! space:
//!
//! * the first call to a subgoal creates a *generator*, which resolves the
//!   subgoal against its clauses and feeds every derived answer to
//!   [`insert_answer`];
//! * a variant call to an incomplete subgoal becomes a *consumer*, a
//!   listener on the answer chain that is resumed as answers appear;
//! * a call to a complete subgoal just enumerates the stored answers.
//!
//! Generators form a completion stack. A consumer of an older incomplete
//! subgoal pulls every generator above it into that subgoal's SCC by
//! lowering their leader. When the leader runs out of work and none of the
//! SCC's listeners has unread answers, every member completes together.
//!
//! The strategies differ in who sees answers before completion. Under
//! batched scheduling each table-changing insertion is passed straight to
//! the generator's caller, so forward execution continues with partial
//! results. Under local scheduling answers stay inside the SCC and the
//! caller reads the table only once it is complete.

mod bindings;

use std::fmt;
use std::str::FromStr;

use rustc_hash::FxHashMap as HashMap;
use serde::Serialize;
use thiserror::Error;

use crate::lang::builtins::{eval_builtin, is_builtin, BuiltinError};
use crate::lang::{Program, Query};
use crate::modes::{compile_declaration, insert_answer, InsertOutcome, ModeArray, ModeError};
use crate::terms::{Pred, Sym, Term};
use crate::tries::{FrameId, LeafId, SubgoalFrame, TableSpace, TrieError};

pub use bindings::Bindings;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    #[default]
    Batched,
    Local,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::Batched => "batched",
            Strategy::Local => "local",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Strategy, String> {
        match s {
            "batched" => Ok(Strategy::Batched),
            "local" => Ok(Strategy::Local),
            other => Err(format!("unknown strategy `{other}` (expected local or batched)")),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("derivation limit of {0} exceeded")]
    Exhausted(u64),
    #[error("unknown predicate {0}")]
    UnknownPredicate(Pred),
    #[error("goal {0} is not callable")]
    NotCallable(Term),
    #[error("in {context}: {source}")]
    Builtin { context: String, source: BuiltinError },
    #[error(transparent)]
    Mode(#[from] ModeError),
    #[error(transparent)]
    Trie(#[from] TrieError),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Stats {
    /// Successful clause resolutions.
    pub derivations: u64,
    /// Answers that changed a table.
    pub insertions: u64,
    /// Answers a table turned away.
    pub rejections: u64,
    /// Stored answers invalidated by preferable ones.
    pub invalidations: u64,
    /// Answers handed to a consumer or caller continuation.
    pub propagations: u64,
    /// Times a suspended listener was scheduled to read new answers.
    pub consumer_resumptions: u64,
    pub completions: u64,
}

impl fmt::Display for Stats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "derivations: {}", self.derivations)?;
        writeln!(f, "insertions: {}", self.insertions)?;
        writeln!(f, "rejections: {}", self.rejections)?;
        writeln!(f, "invalidations: {}", self.invalidations)?;
        writeln!(f, "propagations: {}", self.propagations)?;
        writeln!(f, "consumer_resumptions: {}", self.consumer_resumptions)?;
        write!(f, "completions: {}", self.completions)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Event {
    Insert { frame: FrameId, pred: Pred, outcome: InsertOutcome, leaf: Option<LeafId> },
    Deliver {
        listener: usize,
        frame: FrameId,
        pred: Pred,
        leaf: LeafId,
        /// The listener belongs to the SCC of the frame's generator.
        internal: bool,
        complete: bool,
    },
    Complete { frame: FrameId, pred: Pred },
}

impl Event {
    pub fn to_json(&self) -> serde_json::Value {
        use serde_json::json;
        match self {
            Event::Insert { frame, pred, outcome, leaf } => json!({
                "event": "insert", "frame": frame, "predicate": pred.to_string(),
                "outcome": outcome.to_string(), "leaf": leaf,
            }),
            Event::Deliver { listener, frame, pred, leaf, internal, complete } => json!({
                "event": "deliver", "frame": frame, "predicate": pred.to_string(),
                "consumer": listener, "leaf": leaf, "internal": internal, "complete": complete,
            }),
            Event::Complete { frame, pred } => json!({
                "event": "complete", "frame": frame, "predicate": pred.to_string(),
            }),
        }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct EngineOptions {
    pub strategy: Strategy,
    /// Abort with [`EngineError::Exhausted`] after this many derivations.
    pub max_derivations: Option<u64>,
    pub record_events: bool,
}

impl EngineOptions {
    pub fn with_strategy(strategy: Strategy) -> EngineOptions {
        EngineOptions { strategy, ..EngineOptions::default() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    pub vars: Vec<String>,
    /// One row per answer, aligned with `vars`.
    pub answers: Vec<Vec<Term>>,
    pub stats: Stats,
}

impl Solution {
    /// `Var=Term` pairs joined by `, `, or `true` when the query has no
    /// reported variables.
    pub fn lines(&self) -> Vec<String> {
        self.answers
            .iter()
            .map(|row| {
                if self.vars.is_empty() {
                    return "true".to_string();
                }
                self.vars.iter().zip(row).map(|(v, t)| format!("{v}={t}")).collect::<Vec<_>>().join(", ")
            })
            .collect()
    }
}

/// Evaluates `query` against a fresh engine.
pub fn solve(program: &Program, query: &Query, strategy: Strategy) -> Result<Solution, EngineError> {
    Engine::new(program, EngineOptions::with_strategy(strategy))?.solve(query)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Key {
    Atom(Sym),
    Int(i64),
    Float(u64),
    Functor(Sym, usize),
}

fn key_of(t: &Term) -> Option<Key> {
    match t {
        Term::Atom(s) => Some(Key::Atom(*s)),
        Term::Int(i) => Some(Key::Int(*i)),
        Term::Float(x) => Some(Key::Float(x.0.to_bits())),
        Term::Struct(s, args) => Some(Key::Functor(*s, args.len())),
        Term::Var(_) => None,
    }
}

struct ClauseRec {
    head: Term,
    body: Vec<Term>,
    nvars: usize,
}

/// Clauses of one predicate with first-argument indexing.
#[derive(Default)]
struct PredClauses {
    clauses: Vec<ClauseRec>,
    all: Vec<u32>,
    by_key: HashMap<Key, Vec<u32>>,
    /// Clauses whose first argument is a variable, in source order.
    open: Vec<u32>,
}

impl PredClauses {
    fn add(&mut self, head: Term, body: Vec<Term>, nvars: usize) {
        let id = self.clauses.len() as u32;
        self.all.push(id);
        match head.args().first().and_then(key_of) {
            Some(k) => {
                let open = &self.open;
                self.by_key.entry(k).or_insert_with(|| open.clone()).push(id);
            }
            None if !head.args().is_empty() => {
                self.open.push(id);
                for list in self.by_key.values_mut() {
                    list.push(id);
                }
            }
            None => {}
        }
        self.clauses.push(ClauseRec { head, body, nvars });
    }

    fn candidates(&self, goal: &Term) -> &[u32] {
        match goal.args().first().and_then(key_of) {
            Some(k) => self.by_key.get(&k).unwrap_or(&self.open),
            None => &self.all,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Owner {
    Top,
    Generator(FrameId),
}

#[derive(Clone, Debug)]
struct State {
    /// Remaining goals, next goal last.
    goals: Vec<Term>,
    template: Vec<Term>,
    owner: Owner,
}

impl State {
    fn apply(&mut self, b: &Bindings) {
        if b.is_empty() {
            return;
        }
        for g in &mut self.goals {
            *g = b.resolve(g);
        }
        for t in &mut self.template {
            *t = b.resolve(t);
        }
    }
}

struct Listener {
    frame: FrameId,
    /// Last leaf read; may point at an invalidated leaf.
    cursor: Option<LeafId>,
    call_vars: Vec<Term>,
    cont: State,
    ts: u64,
}

#[derive(Clone, Copy, Debug)]
struct Generator {
    frame: FrameId,
    dfn: u64,
    leader: u64,
}

enum Task {
    Solve(State),
    Resume(usize),
    CheckCompletion(FrameId),
}

pub struct Engine {
    preds: HashMap<Pred, PredClauses>,
    tables: TableSpace,
    overrides: HashMap<Pred, Strategy>,
    options: EngineOptions,
    stats: Stats,
    events: Vec<Event>,
    tasks: Vec<Task>,
    listeners: Vec<Listener>,
    frame_listeners: Vec<Vec<usize>>,
    callers: HashMap<FrameId, usize>,
    completion_stack: Vec<Generator>,
    stack_pos: HashMap<FrameId, usize>,
    clock: u64,
    next_var: usize,
    top_answers: Vec<Vec<Term>>,
}

impl Engine {
    pub fn new(program: &Program, options: EngineOptions) -> Result<Engine, EngineError> {
        let mut tables = TableSpace::new();
        let mut preds: HashMap<Pred, PredClauses> = HashMap::default();
        for d in &program.declarations {
            let ma = match &d.modes {
                Some(modes) => compile_declaration(d.pred, modes)?,
                None => ModeArray::traditional(d.pred.arity),
            };
            tables.declare(d.pred, ma);
            preds.entry(d.pred).or_default();
        }
        for c in &program.clauses {
            preds.entry(c.pred()).or_default().add(c.head.clone(), c.body.clone(), c.var_count());
        }
        Ok(Engine {
            preds,
            tables,
            overrides: program.strategy_overrides.iter().map(|(p, s)| (*p, *s)).collect(),
            options,
            stats: Stats::default(),
            events: Vec::new(),
            tasks: Vec::new(),
            listeners: Vec::new(),
            frame_listeners: Vec::new(),
            callers: HashMap::default(),
            completion_stack: Vec::new(),
            stack_pos: HashMap::default(),
            clock: 0,
            next_var: 0,
            top_answers: Vec::new(),
        })
    }

    pub fn tables(&self) -> &TableSpace {
        &self.tables
    }

    pub fn stats(&self) -> Stats {
        self.stats
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn options(&self) -> EngineOptions {
        self.options
    }

    pub fn strategy_for(&self, pred: &Pred) -> Strategy {
        self.overrides.get(pred).copied().unwrap_or(self.options.strategy)
    }

    /// Frames of `pred`, in creation order.
    pub fn frames_of<'a>(&'a self, pred: &'a Pred) -> impl Iterator<Item = (FrameId, &'a SubgoalFrame)> + 'a {
        self.tables.frames().filter(move |(_, f)| f.predicate() == *pred)
    }

    /// Runs `query` to completion. Statistics and the event log cover this
    /// query only; completed tables persist across queries.
    ///
    /// A query made of a single tabled goal answers from the completed
    /// table in chain order. Any other query answers in delivery order.
    pub fn solve(&mut self, query: &Query) -> Result<Solution, EngineError> {
        self.stats = Stats::default();
        self.events.clear();
        self.top_answers.clear();
        self.next_var = query.var_names.len();
        let answer_vars = query.answer_vars();
        let template: Vec<Term> = answer_vars.iter().map(|(id, _)| Term::Var(*id)).collect();
        let state = State { goals: query.goals.iter().rev().cloned().collect(), template, owner: Owner::Top };
        self.tasks.push(Task::Solve(state));
        if let Err(e) = self.run() {
            self.reset_after_error();
            return Err(e);
        }
        debug_assert!(self.completion_stack.is_empty());
        self.listeners.clear();
        self.callers.clear();
        self.frame_listeners.iter_mut().for_each(Vec::clear);

        let mut answers = std::mem::take(&mut self.top_answers);
        if let [goal] = &query.goals[..] {
            if let Some(pred) = Pred::of(goal).filter(|p| self.tables.is_tabled(p)) {
                answers = self.table_answers(pred, goal, &answer_vars)?;
            }
        }
        Ok(Solution { vars: answer_vars.iter().map(|(_, n)| n.to_string()).collect(), answers, stats: self.stats })
    }

    fn table_answers(&mut self, pred: Pred, goal: &Term, vars: &[(usize, &str)]) -> Result<Vec<Vec<Term>>, EngineError> {
        let call = self.tables.subgoal_lookup_insert(pred, goal.args())?;
        let frame = self.tables.frame(call.frame);
        let call_vars: Vec<Term> = call.vars.iter().map(|v| Term::Var(*v)).collect();
        let mut out = Vec::new();
        for (_, answer) in frame.iter_answers(None) {
            let mut b = Bindings::default();
            let offset = self.next_var;
            let mut width = 0;
            for (cv, a) in call_vars.iter().zip(&answer) {
                a.for_each_var(&mut |v| width = width.max(v + 1));
                let renamed = Bindings::default().resolve_renamed(a, offset);
                b.unify(cv, &renamed);
            }
            self.next_var += width;
            out.push(vars.iter().map(|(id, _)| b.resolve(&Term::Var(*id))).collect());
        }
        Ok(out)
    }

    fn reset_after_error(&mut self) {
        self.tasks.clear();
        self.listeners.clear();
        self.callers.clear();
        self.frame_listeners.clear();
        self.completion_stack.clear();
        self.stack_pos.clear();
        self.tables.abolish_all();
    }

    fn run(&mut self) -> Result<(), EngineError> {
        while let Some(task) = self.tasks.pop() {
            match task {
                Task::Solve(state) => self.step(state)?,
                Task::Resume(lid) => self.resume(lid),
                Task::CheckCompletion(frame) => self.check_completion(frame)?,
            }
        }
        Ok(())
    }

    fn count_derivation(&mut self) -> Result<(), EngineError> {
        self.stats.derivations += 1;
        match self.options.max_derivations {
            Some(limit) if self.stats.derivations > limit => Err(EngineError::Exhausted(limit)),
            _ => Ok(()),
        }
    }

    fn context(&self, owner: Owner) -> String {
        match owner {
            Owner::Top => "query".to_string(),
            Owner::Generator(f) => self.tables.frame(f).predicate().to_string(),
        }
    }

    fn step(&mut self, mut state: State) -> Result<(), EngineError> {
        loop {
            let Some(goal) = state.goals.pop() else {
                return self.succeed(state);
            };
            let pred = Pred::of(&goal).ok_or_else(|| EngineError::NotCallable(goal.clone()))?;
            if is_builtin(&pred) {
                let mut b = Bindings::default();
                let ok = eval_builtin(&goal, &mut b)
                    .map_err(|source| EngineError::Builtin { context: self.context(state.owner), source })?;
                if !ok {
                    return Ok(());
                }
                state.apply(&b);
                continue;
            }
            if self.tables.is_tabled(&pred) {
                return self.call_tabled(pred, goal, state);
            }
            return self.call_clauses(pred, &goal, state);
        }
    }

    fn call_clauses(&mut self, pred: Pred, goal: &Term, state: State) -> Result<(), EngineError> {
        let Some(pc) = self.preds.get(&pred) else {
            return Err(EngineError::UnknownPredicate(pred));
        };
        let mut next: Vec<State> = Vec::new();
        for &id in pc.candidates(goal) {
            let c = &pc.clauses[id as usize];
            let offset = self.next_var;
            let mut b = Bindings::default();
            let head = if c.nvars == 0 { c.head.clone() } else { b.resolve_renamed(&c.head, offset) };
            if !b.unify(goal, &head) {
                continue;
            }
            let mut s = state.clone();
            s.apply(&b);
            s.goals.extend(c.body.iter().rev().map(|g| b.resolve_renamed(g, offset)));
            self.next_var += c.nvars;
            next.push(s);
        }
        for _ in 0..next.len() {
            self.count_derivation()?;
        }
        self.tasks.extend(next.into_iter().rev().map(Task::Solve));
        Ok(())
    }

    fn call_tabled(&mut self, pred: Pred, goal: Term, cont: State) -> Result<(), EngineError> {
        let call = self.tables.subgoal_lookup_insert(pred, goal.args())?;
        let frame = call.frame;
        if self.frame_listeners.len() <= frame {
            self.frame_listeners.resize_with(frame + 1, Vec::new);
        }
        let call_vars: Vec<Term> = call.vars.iter().map(|v| Term::Var(*v)).collect();
        let lid = self.listeners.len();
        let ts = self.tick();
        self.listeners.push(Listener { frame, cursor: None, call_vars: call_vars.clone(), cont, ts });

        if self.tables.frame(frame).is_complete() {
            self.tasks.push(Task::Resume(lid));
            return Ok(());
        }
        self.frame_listeners[frame].push(lid);

        if !call.is_new {
            let pos = self.stack_pos[&frame];
            let leader = self.completion_stack[pos].leader;
            for g in &mut self.completion_stack[pos..] {
                g.leader = g.leader.min(leader);
            }
            self.tasks.push(Task::Resume(lid));
            return Ok(());
        }

        self.callers.insert(frame, lid);
        let dfn = self.tick();
        self.stack_pos.insert(frame, self.completion_stack.len());
        self.completion_stack.push(Generator { frame, dfn, leader: dfn });
        self.tasks.push(Task::CheckCompletion(frame));

        let pc = &self.preds[&pred];
        let mut next = Vec::new();
        for &id in pc.candidates(&goal) {
            let c = &pc.clauses[id as usize];
            let offset = self.next_var;
            let mut b = Bindings::default();
            let head = if c.nvars == 0 { c.head.clone() } else { b.resolve_renamed(&c.head, offset) };
            if !b.unify(&goal, &head) {
                continue;
            }
            let goals = c.body.iter().rev().map(|g| b.resolve_renamed(g, offset)).collect();
            let template = call_vars.iter().map(|v| b.resolve(v)).collect();
            self.next_var += c.nvars;
            next.push(State { goals, template, owner: Owner::Generator(frame) });
        }
        for _ in 0..next.len() {
            self.count_derivation()?;
        }
        self.tasks.extend(next.into_iter().rev().map(Task::Solve));
        Ok(())
    }

    fn tick(&mut self) -> u64 {
        self.clock += 1;
        self.clock
    }

    fn succeed(&mut self, state: State) -> Result<(), EngineError> {
        let frame = match state.owner {
            Owner::Top => {
                self.top_answers.push(state.template);
                return Ok(());
            }
            Owner::Generator(f) => f,
        };
        let inserted = insert_answer(self.tables.frame_mut(frame), &state.template)?;
        let pred = self.tables.frame(frame).predicate();
        if self.options.record_events {
            self.events.push(Event::Insert { frame, pred, outcome: inserted.outcome.clone(), leaf: inserted.leaf });
        }
        let Some(leaf) = inserted.leaf else {
            self.stats.rejections += 1;
            return Ok(());
        };
        self.stats.insertions += 1;
        self.stats.invalidations += inserted.invalidated as u64;
        if self.strategy_for(&pred) == Strategy::Batched {
            if let Some(&caller) = self.callers.get(&frame) {
                self.listeners[caller].cursor = Some(leaf);
                self.deliver(caller, leaf);
            }
        }
        Ok(())
    }

    /// Reads the next unread valid answer of a listener, if any.
    fn resume(&mut self, lid: usize) {
        let l = &self.listeners[lid];
        let (next, examined) = self.tables.frame(l.frame).next_valid_after(l.cursor);
        match next {
            Some(leaf) => {
                self.listeners[lid].cursor = Some(leaf);
                self.tasks.push(Task::Resume(lid));
                self.deliver(lid, leaf);
            }
            None => self.listeners[lid].cursor = examined,
        }
    }

    /// Continues a listener's continuation with one answer.
    fn deliver(&mut self, lid: usize, leaf: LeafId) {
        let l = &self.listeners[lid];
        let frame = self.tables.frame(l.frame);
        let answer = frame.decode_leaf(leaf);
        let offset = self.next_var;
        let mut width = 0;
        let mut b = Bindings::default();
        for (cv, a) in l.call_vars.iter().zip(&answer) {
            a.for_each_var(&mut |v| width = width.max(v + 1));
            let renamed = if width == 0 { a.clone() } else { Bindings::default().resolve_renamed(a, offset) };
            b.unify(cv, &renamed);
        }
        self.next_var += width;
        let mut s = l.cont.clone();
        s.apply(&b);
        self.stats.propagations += 1;
        if self.options.record_events {
            let complete = frame.is_complete();
            let internal = !complete
                && self.stack_pos.get(&l.frame).is_some_and(|&p| l.ts >= self.completion_stack[p].leader);
            self.events.push(Event::Deliver {
                listener: lid,
                frame: l.frame,
                pred: frame.predicate(),
                leaf,
                internal,
                complete,
            });
        }
        self.tasks.push(Task::Solve(s));
    }

    fn check_completion(&mut self, frame: FrameId) -> Result<(), EngineError> {
        let pos = self.stack_pos[&frame];
        let g = self.completion_stack[pos];
        if g.leader < g.dfn {
            return Ok(());
        }
        let members: Vec<FrameId> = self.completion_stack[pos..].iter().map(|m| m.frame).collect();
        let pending: Vec<usize> = members
            .iter()
            .flat_map(|&m| self.frame_listeners[m].iter().copied())
            .filter(|&lid| {
                let l = &self.listeners[lid];
                l.ts >= g.dfn && self.tables.frame(l.frame).has_answers_after(l.cursor)
            })
            .collect();
        if !pending.is_empty() {
            self.tasks.push(Task::CheckCompletion(frame));
            self.stats.consumer_resumptions += pending.len() as u64;
            self.tasks.extend(pending.into_iter().rev().map(Task::Resume));
            return Ok(());
        }

        self.completion_stack.truncate(pos);
        let mut outside = Vec::new();
        for &m in &members {
            self.stack_pos.remove(&m);
            self.callers.remove(&m);
            self.tables.frame_mut(m).complete()?;
            self.stats.completions += 1;
            if self.options.record_events {
                self.events.push(Event::Complete { frame: m, pred: self.tables.frame(m).predicate() });
            }
            for lid in std::mem::take(&mut self.frame_listeners[m]) {
                if self.listeners[lid].ts < g.dfn {
                    outside.push(lid);
                }
            }
        }
        self.stats.consumer_resumptions += outside.len() as u64;
        self.tasks.extend(outside.into_iter().rev().map(Task::Resume));
        Ok(())
    }
}

impl fmt::Debug for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Engine")
            .field("options", &self.options)
            .field("frames", &self.tables.frame_count())
            .field("stats", &self.stats)
            .finish()
    }
}
