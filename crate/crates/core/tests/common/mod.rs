//! Shared fixtures for the integration suites and the acceptance runner:
//! worked-example programs, a flat reference aggregator, a random program
//! generator and a bottom-up fixpoint evaluator.

#![allow(dead_code)]

pub mod trie_model;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use modetab::engine::{solve, Bindings, Engine, EngineOptions, Strategy};
use modetab::lang::builtins::{eval_builtin, is_builtin};
use modetab::lang::{parse_program, parse_query, Program};
use modetab::modes::{build_substitution_array, compile_declaration, insert_answer, InsertOutcome, Mode};
use modetab::terms::{canonical_args, Pred, Term, TokenSeq};
use modetab::tries::SubgoalFrame;
use rand::seq::SliceRandom;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const CYCLE: &str = "
:- table path/2.
path(X, Z) :- path(X, Y), edge(Y, Z).
path(X, Z) :- edge(X, Z).
edge(a, b).
edge(b, a).
";

pub const COUNTED_PLAIN: &str = "
:- table path/3.
path(X, Z, N) :- path(X, Y, N1), edge(Y, Z), N is N1 + 1.
path(X, Z, 1) :- edge(X, Z).
edge(a, b).
edge(b, a).
";

pub const COUNTED_FIRST: &str = "
:- table path(index, index, first).
path(X, Z, N) :- path(X, Y, N1), edge(Y, Z), N is N1 + 1.
path(X, Z, 1) :- edge(X, Z).
edge(a, b).
edge(b, a).
";

pub const LINK_COUNT: &str = "
:- table num_links(index, sum).
num_links(A, 0) :- edge(_, A).
num_links(A, 1) :- edge(A, _).

:- table num_nodes(sum).
num_nodes(0).
num_nodes(1) :- num_links(_, _).

edge(a, b).
edge(a, c).
edge(b, c).
";

/// Shortest distances where the direct edge to `d` is found before the
/// cheaper three-hop route.
pub const MIN_REPLACEMENT: &str = "
:- table path(index, index, min).
path(X, Z, C) :- path(X, Y, C1), edge(Y, Z, C2), C is C1 + C2.
path(X, Z, C) :- edge(X, Z, C).
edge(a, b, 1).
edge(b, c, 1).
edge(c, d, 1).
edge(a, d, 5).
";

pub fn lines(src: &str, query: &str, strategy: Strategy) -> Vec<String> {
    let prog = parse_program(src).expect("fixture parses");
    let q = parse_query(query).expect("query parses");
    solve(&prog, &q, strategy).expect("evaluation succeeds").lines()
}

pub fn engine_for(src: &str, strategy: Strategy, record_events: bool) -> Engine {
    let prog = parse_program(src).expect("fixture parses");
    Engine::new(&prog, EngineOptions { strategy, record_events, ..EngineOptions::default() }).expect("engine builds")
}

// ---------------------------------------------------------------------------
// Aggregation

/// Mode declarations exercised against the flat aggregator. Arguments are
/// listed in mode-array order, so substitution order equals source order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Combo {
    First,
    Last,
    Min,
    Max,
    Sum,
    MinAll,
    MaxAll,
}

impl Combo {
    pub const ALL: [Combo; 7] = [Combo::First, Combo::Last, Combo::Min, Combo::Max, Combo::Sum, Combo::MinAll, Combo::MaxAll];

    pub fn modes(self) -> Vec<Mode> {
        match self {
            Combo::First => vec![Mode::Index, Mode::First],
            Combo::Last => vec![Mode::Index, Mode::Last],
            Combo::Min => vec![Mode::Index, Mode::Min],
            Combo::Max => vec![Mode::Index, Mode::Max],
            Combo::Sum => vec![Mode::Index, Mode::Sum],
            Combo::MinAll => vec![Mode::Index, Mode::Min, Mode::All],
            Combo::MaxAll => vec![Mode::Index, Mode::Max, Mode::All],
        }
    }

    pub fn has_all(self) -> bool {
        matches!(self, Combo::MinAll | Combo::MaxAll)
    }
}

/// One candidate answer: index key, aggregated value and, for the `all`
/// combinations, the collected value.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Candidate {
    pub key: i64,
    pub value: i64,
    pub extra: i64,
}

impl Candidate {
    pub fn terms(&self, combo: Combo) -> Vec<Term> {
        let mut out = vec![Term::Int(self.key), Term::Int(self.value)];
        if combo.has_all() {
            out.push(Term::Int(self.extra));
        }
        out
    }
}

/// Up to 50 candidates over at most 8 keys, with small value ranges so
/// ties are common.
pub fn random_candidates(rng: &mut ChaCha8Rng) -> Vec<Candidate> {
    let n = rng.random_range(0..=50);
    let keys = rng.random_range(1..=8);
    (0..n)
        .map(|_| Candidate {
            key: rng.random_range(0..keys),
            value: rng.random_range(-5..=5),
            extra: rng.random_range(0..4),
        })
        .collect()
}

/// The valid answer set a table should end with, computed directly from
/// the candidate sequence.
pub fn reference_aggregate(combo: Combo, cands: &[Candidate]) -> BTreeSet<Vec<i64>> {
    let mut by_key: BTreeMap<i64, Vec<&Candidate>> = BTreeMap::new();
    for c in cands {
        by_key.entry(c.key).or_default().push(c);
    }
    let mut out = BTreeSet::new();
    for (key, cs) in by_key {
        match combo {
            Combo::First => {
                out.insert(vec![key, cs[0].value]);
            }
            Combo::Last => {
                out.insert(vec![key, cs[cs.len() - 1].value]);
            }
            Combo::Sum => {
                out.insert(vec![key, cs.iter().map(|c| c.value).sum()]);
            }
            Combo::Min | Combo::Max | Combo::MinAll | Combo::MaxAll => {
                let values = cs.iter().map(|c| c.value);
                let best = if matches!(combo, Combo::Min | Combo::MinAll) { values.min() } else { values.max() }
                    .expect("key has candidates");
                if combo.has_all() {
                    for c in cs.iter().filter(|c| c.value == best) {
                        out.insert(vec![key, best, c.extra]);
                    }
                } else {
                    out.insert(vec![key, best]);
                }
            }
        }
    }
    out
}

/// An empty incomplete frame for an open call of a predicate with the
/// given modes.
pub fn open_frame(modes: &[Mode]) -> SubgoalFrame {
    let pred = Pred::new("p", modes.len());
    let ma = compile_declaration(pred, modes).expect("valid declaration");
    let call: Vec<Term> = (0..modes.len()).map(Term::Var).collect();
    SubgoalFrame::new(pred, TokenSeq::default(), build_substitution_array(&ma, &call))
}

/// Feeds the candidates through `insert_answer`, returning the outcomes
/// and the final valid set.
pub fn aggregate_with_table(combo: Combo, cands: &[Candidate]) -> (Vec<InsertOutcome>, BTreeSet<Vec<i64>>) {
    let mut frame = open_frame(&combo.modes());
    let outcomes = cands
        .iter()
        .map(|c| insert_answer(&mut frame, &c.terms(combo)).expect("ground candidates insert").outcome)
        .collect();
    (outcomes, int_rows(&frame.valid_answers()))
}

pub fn int_rows(rows: &[Vec<Term>]) -> BTreeSet<Vec<i64>> {
    rows.iter()
        .map(|r| {
            r.iter()
                .map(|t| match t {
                    Term::Int(i) => *i,
                    other => panic!("non-integer answer term {other}"),
                })
                .collect()
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Table snapshots

/// Every table of an engine: `pred(call args)` mapped to its valid answer
/// instances, all rendered with canonical variable numbering.
pub fn table_snapshot(engine: &Engine) -> BTreeMap<String, BTreeSet<String>> {
    let tables = engine.tables();
    let mut out = BTreeMap::new();
    for (id, frame) in tables.frames() {
        let call = render(frame.predicate(), &canonical_args(&tables.call_args(id)));
        let answers = tables
            .answer_instances(id)
            .iter()
            .map(|row| render(frame.predicate(), &canonical_args(row)))
            .collect();
        out.insert(call, answers);
    }
    out
}

fn render(pred: Pred, args: &[Term]) -> String {
    let mut s = pred.name.as_str().to_string();
    s.push('(');
    for (i, a) in args.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        write!(s, "{a}").unwrap();
    }
    s.push(')');
    s
}

/// Ground answers of every table, grouped by predicate.
pub fn table_facts(engine: &Engine) -> BTreeMap<Pred, BTreeSet<String>> {
    let tables = engine.tables();
    let mut out: BTreeMap<Pred, BTreeSet<String>> = BTreeMap::new();
    for (id, frame) in tables.frames() {
        for row in tables.answer_instances(id) {
            out.entry(frame.predicate()).or_default().insert(render(frame.predicate(), &row));
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Random programs

/// Direction shared by every aggregated predicate of a random program.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Min,
    Max,
}

#[derive(Clone, Debug)]
pub struct RandomProgram {
    pub source: String,
    pub queries: Vec<String>,
}

const CONSTS: [&str; 5] = ["a", "b", "c", "d", "e"];

/// A small random program over a five-constant domain.
///
/// Plain tabled predicates `t1/2`, `t2/2` compute reachability over `e/2`
/// facts. Aggregated predicates `m1/3`, `m2/3` (or `/4` with an `all`
/// argument) fold weights of `w/3` facts with one direction for the whole
/// program: costs only grow under `min` and only shrink under `max`, and
/// aggregated predicates never feed plain ones.
pub fn random_program(seed: u64) -> RandomProgram {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dir = if rng.random_bool(0.5) { Direction::Min } else { Direction::Max };
    let with_all = rng.random_bool(0.4);
    let mut src = String::new();
    let c = |rng: &mut ChaCha8Rng| CONSTS[rng.random_range(0..CONSTS.len())];

    let agg = if dir == Direction::Min { "min" } else { "max" };
    writeln!(src, ":- table t1/2.\n:- table t2/2.").unwrap();
    for m in ["m1", "m2"] {
        if with_all {
            writeln!(src, ":- table {m}(index, index, {agg}, all).").unwrap();
        } else {
            writeln!(src, ":- table {m}(index, index, {agg}).").unwrap();
        }
    }
    if rng.random_bool(0.3) {
        let p = ["t1/2", "t2/2", if with_all { "m1/4" } else { "m1/3" }][rng.random_range(0..3)];
        let s = if rng.random_bool(0.5) { "local" } else { "batched" };
        writeln!(src, ":- table_strategy {p}, {s}.").unwrap();
    }
    src.push('\n');

    let mut plain = Vec::new();
    for t in ["t1", "t2"] {
        plain.push(format!("{t}(X, Y) :- e(X, Y)."));
        for _ in 0..rng.random_range(1..=2) {
            let other = ["t1", "t2"][rng.random_range(0..2)];
            plain.push(match rng.random_range(0..3) {
                0 => format!("{t}(X, Y) :- {other}(X, Z), e(Z, Y)."),
                1 => format!("{t}(X, Y) :- e(X, Z), {other}(Z, Y)."),
                _ => format!("{t}(X, Y) :- {other}(X, Z), {other}(Z, Y)."),
            });
        }
    }
    plain.shuffle(&mut rng);

    let (step_op, k_sign) = if dir == Direction::Min { ("+", "") } else { ("-", "0 - ") };
    let (n_head, n_base, n_step, n_next, n_skip) = if with_all {
        (", N", ", 1", ", N1", ", N is N1 + 1", ", _")
    } else {
        ("", "", "", "", "")
    };
    let mut aggregated = Vec::new();
    for m in ["m1", "m2"] {
        aggregated.push(format!("{m}(X, Y, C{n_base}) :- w(X, Y, W), C is {k_sign}W."));
        for _ in 0..rng.random_range(1..=2) {
            let other = ["m1", "m2"][rng.random_range(0..2)];
            aggregated.push(match rng.random_range(0..4) {
                0 => format!(
                    "{m}(X, Y, C{n_head}) :- {other}(X, Z, C1{n_step}), w(Z, Y, W), C is C1 {step_op} W{n_next}."
                ),
                1 => format!(
                    "{m}(X, Y, C{n_head}) :- w(X, Z, W), {other}(Z, Y, C1{n_step}), C is C1 {step_op} W{n_next}."
                ),
                2 => {
                    let t = ["t1", "t2"][rng.random_range(0..2)];
                    let k = rng.random_range(5..=12);
                    format!("{m}(X, Y, C{n_base}) :- {t}(X, Y), C is {k_sign}{k}.")
                }
                _ => format!(
                    "{m}(X, Y, C{n_head}) :- {other}(X, Z, C1{n_step}), {other}(Z, Y, C2{n_skip}), C is C1 + C2{n_next}."
                ),
            });
        }
    }
    aggregated.shuffle(&mut rng);
    for clause in plain.iter().chain(&aggregated) {
        writeln!(src, "{clause}").unwrap();
    }

    let mut facts = BTreeSet::new();
    for _ in 0..rng.random_range(2..=7) {
        facts.insert(format!("e({}, {}).", c(&mut rng), c(&mut rng)));
    }
    let mut weighted = BTreeSet::new();
    for _ in 0..rng.random_range(2..=7) {
        let (x, y) = (c(&mut rng), c(&mut rng));
        let weight = rng.random_range(1..=9);
        weighted.insert(format!("w({x}, {y}, {weight})."));
    }
    for f in facts.iter().chain(&weighted) {
        writeln!(src, "{f}").unwrap();
    }

    let tail = if with_all { ", N" } else { "" };
    let mut queries = Vec::new();
    for _ in 0..2 {
        let p = ["t1", "t2", "m1", "m2"][rng.random_range(0..4)];
        let first = if rng.random_bool(0.5) { c(&mut rng).to_string() } else { "X".to_string() };
        queries.push(if p.starts_with('t') {
            format!("{p}({first}, Y)")
        } else {
            format!("{p}({first}, Y, C{tail})")
        });
    }
    RandomProgram { source: src, queries }
}

// ---------------------------------------------------------------------------
// Bottom-up evaluation

/// Bottom-up fixpoint of a range-restricted program, computed one
/// predicate component at a time with dependencies first. Predicates
/// declared with min or max keep, per index key, only the preferred value
/// (with every `all` value that reached it); other predicates keep every
/// derived fact.
pub fn bottom_up(prog: &Program) -> BTreeMap<Pred, Vec<Vec<Term>>> {
    let modes: BTreeMap<Pred, Vec<Mode>> = prog.declarations.iter().map(|d| (d.pred, d.modes_or_index())).collect();
    let mut db: BTreeMap<Pred, Vec<Vec<Term>>> = BTreeMap::new();
    for component in components(prog) {
        loop {
            let mut next = db.clone();
            for clause in prog.clauses.iter().filter(|c| component.contains(&c.pred())) {
                for b in body_solutions(&clause.body, &db) {
                    let head = b.resolve(&clause.head);
                    assert!(head.is_ground(), "rule is not range restricted: {head}");
                    next.entry(clause.pred()).or_default().push(head.args().to_vec());
                }
            }
            for p in &component {
                if let Some(rows) = next.get_mut(p) {
                    *rows = aggregate_rows(modes.get(p), std::mem::take(rows));
                }
            }
            if next == db {
                break;
            }
            db = next;
        }
    }
    db
}

/// Strongly connected components of the predicate dependency graph,
/// dependencies before dependents.
fn components(prog: &Program) -> Vec<BTreeSet<Pred>> {
    let preds: Vec<Pred> = prog.clauses.iter().map(|c| c.pred()).collect::<BTreeSet<_>>().into_iter().collect();
    let mut deps: BTreeMap<Pred, BTreeSet<Pred>> = BTreeMap::new();
    for c in &prog.clauses {
        let d = deps.entry(c.pred()).or_default();
        for g in &c.body {
            if let Some(p) = Pred::of(g).filter(|p| !is_builtin(p)) {
                d.insert(p);
            }
        }
    }
    let reaches = |from: Pred, to: Pred| {
        let mut seen = BTreeSet::from([from]);
        let mut stack = vec![from];
        while let Some(p) = stack.pop() {
            if p == to {
                return true;
            }
            for &q in deps.get(&p).into_iter().flatten() {
                if seen.insert(q) {
                    stack.push(q);
                }
            }
        }
        false
    };
    let mut out: Vec<BTreeSet<Pred>> = Vec::new();
    for &p in &preds {
        if out.iter().any(|c| c.contains(&p)) {
            continue;
        }
        out.push(preds.iter().copied().filter(|&q| reaches(p, q) && reaches(q, p)).collect());
    }
    let mut ordered = Vec::new();
    while !out.is_empty() {
        let i = (0..out.len())
            .find(|&i| {
                let p = *out[i].iter().next().unwrap();
                out.iter().enumerate().all(|(j, c)| j == i || !reaches(p, *c.iter().next().unwrap()))
            })
            .expect("component graph is acyclic");
        ordered.push(out.remove(i));
    }
    ordered
}

fn body_solutions(body: &[Term], db: &BTreeMap<Pred, Vec<Vec<Term>>>) -> Vec<Bindings> {
    let mut envs = vec![Bindings::default()];
    for g in body {
        let mut next = Vec::new();
        for b in envs {
            let goal = b.resolve(g);
            let pred = Pred::of(&goal).expect("callable goal");
            if is_builtin(&pred) {
                let mut b2 = b.clone();
                if eval_builtin(&goal, &mut b2).expect("builtin evaluates") {
                    next.push(b2);
                }
                continue;
            }
            for row in db.get(&pred).into_iter().flatten() {
                let mut b2 = b.clone();
                if goal.args().iter().zip(row).all(|(a, r)| b2.unify(a, r)) {
                    next.push(b2);
                }
            }
        }
        envs = next;
    }
    envs
}

fn aggregate_rows(modes: Option<&Vec<Mode>>, rows: Vec<Vec<Term>>) -> Vec<Vec<Term>> {
    let mut unique: Vec<Vec<Term>> = Vec::new();
    for r in rows {
        if !unique.contains(&r) {
            unique.push(r);
        }
    }
    let Some(modes) = modes else { return sorted(unique) };
    let Some(pos) = modes.iter().position(|m| matches!(m, Mode::Min | Mode::Max)) else {
        return sorted(unique);
    };
    let want_min = modes[pos] == Mode::Min;
    let keys: Vec<usize> = (0..modes.len()).filter(|&i| modes[i] == Mode::Index).collect();
    let key_of = |r: &Vec<Term>| keys.iter().map(|&i| r[i].to_string()).collect::<Vec<_>>();
    let value = |r: &Vec<Term>| match r[pos] {
        Term::Int(i) => i,
        ref other => panic!("aggregated value {other} is not an integer"),
    };
    let mut best: BTreeMap<Vec<String>, i64> = BTreeMap::new();
    for r in &unique {
        let v = value(r);
        best.entry(key_of(r)).and_modify(|b| *b = if want_min { (*b).min(v) } else { (*b).max(v) }).or_insert(v);
    }
    unique.retain(|r| best[&key_of(r)] == value(r));
    sorted(unique)
}

fn sorted(mut rows: Vec<Vec<Term>>) -> Vec<Vec<Term>> {
    rows.sort_by_cached_key(|r| format!("{r:?}"));
    rows
}

/// Compares every table of `engine` with the facts of the bottom-up model
/// that are instances of the table's call.
pub fn check_against_model(engine: &Engine, model: &BTreeMap<Pred, Vec<Vec<Term>>>) -> Result<usize, String> {
    let tables = engine.tables();
    let mut compared = 0;
    for (id, frame) in tables.frames() {
        let pred = frame.predicate();
        let call = tables.call_args(id);
        let got: BTreeSet<String> = tables.answer_instances(id).iter().map(|r| render(pred, r)).collect();
        let want: BTreeSet<String> = model
            .get(&pred)
            .into_iter()
            .flatten()
            .filter(|row| {
                let mut b = Bindings::default();
                call.iter().zip(row.iter()).all(|(c, r)| b.unify(c, r))
            })
            .map(|r| render(pred, r))
            .collect();
        if got != want {
            return Err(format!(
                "table {}: engine {:?}, model {:?}",
                render(pred, &call),
                got,
                want
            ));
        }
        compared += got.len();
    }
    Ok(compared)
}
