//! Reference solutions computed without the engine, and the checks that
//! compare them with completed tables.

use std::collections::{BTreeMap, BTreeSet};

use super::bench::{BenchInstance, BenchName, Payload, DAMPING};
use crate::engine::Engine;
use crate::terms::{Pred, Term};

/// Largest absolute rank difference tolerated by the pagerank check.
pub const RANK_TOLERANCE: f64 = 1e-9;

/// `d[x][y]`: weight of the lightest non-empty walk from `x` to `y`, over
/// nodes `1..=n`. The diagonal holds the lightest cycle through a node.
pub fn floyd_warshall(n: usize, edges: &[(usize, usize, i64)]) -> Vec<Vec<Option<i64>>> {
    let mut d = vec![vec![None; n + 1]; n + 1];
    for &(a, b, w) in edges {
        if d[a][b].is_none_or(|old| w < old) {
            d[a][b] = Some(w);
        }
    }
    for k in 1..=n {
        for i in 1..=n {
            let Some(ik) = d[i][k] else { continue };
            for j in 1..=n {
                if let Some(kj) = d[k][j] {
                    if d[i][j].is_none_or(|old| ik + kj < old) {
                        d[i][j] = Some(ik + kj);
                    }
                }
            }
        }
    }
    d
}

/// Whether `z` is a last-step predecessor of some lightest walk from `x`
/// to `y`. A walk made of the single edge `x -> y` has predecessor `x`.
pub fn is_justification(
    x: usize,
    y: usize,
    z: usize,
    dist: &[Vec<Option<i64>>],
    weight: &BTreeMap<(usize, usize), i64>,
) -> bool {
    let Some(d) = dist[x][y] else { return false };
    let Some(&w) = weight.get(&(z, y)) else { return false };
    (z == x && w == d) || dist[x][z].is_some_and(|dz| dz + w == d)
}

/// `counts[x][y]`: the edge counts of every lightest non-empty walk from
/// `x` to `y`, computed over the lightest-walk DAG.
pub fn lightest_edge_counts(
    n: usize,
    edges: &[(usize, usize, i64)],
    dist: &[Vec<Option<i64>>],
) -> Vec<Vec<BTreeSet<i64>>> {
    let mut into: Vec<Vec<(usize, i64)>> = vec![Vec::new(); n + 1];
    for &(a, b, w) in edges {
        into[b].push((a, w));
    }
    let mut counts = vec![vec![BTreeSet::new(); n + 1]; n + 1];
    for x in 1..=n {
        let mut order: Vec<usize> = (1..=n).filter(|&y| dist[x][y].is_some()).collect();
        order.sort_by_key(|&y| dist[x][y]);
        for y in order {
            let d = dist[x][y].expect("reachable");
            let mut set = BTreeSet::new();
            for &(z, w) in &into[y] {
                if z == x && w == d {
                    set.insert(1);
                }
                if dist[x][z].is_some_and(|dz| dz + w == d) {
                    set.extend(counts[x][z].iter().map(|k| k + 1));
                }
            }
            counts[x][y] = set;
        }
    }
    counts
}

/// `best[i][w]`: the most items among the first `i` whose weights sum to
/// exactly `w`, if any subset does.
pub fn knapsack_table(weights: &[i64], target: i64) -> Vec<Vec<Option<i64>>> {
    let t = target as usize;
    let mut best = vec![vec![None; t + 1]; weights.len() + 1];
    best[0][0] = Some(0);
    for i in 1..=weights.len() {
        let wi = weights[i - 1] as usize;
        for w in 0..=t {
            let skip = best[i - 1][w];
            let take = if wi <= w { best[i - 1][w - wi].map(|c| c + 1) } else { None };
            best[i][w] = skip.max(take);
        }
    }
    best
}

/// `len[i][j]`: longest common subsequence of `x[..i]` and `y[..j]`.
pub fn lcs_table<T: PartialEq>(x: &[T], y: &[T]) -> Vec<Vec<i64>> {
    let mut len = vec![vec![0; y.len() + 1]; x.len() + 1];
    for i in 1..=x.len() {
        for j in 1..=y.len() {
            len[i][j] = if x[i - 1] == y[j - 1] {
                len[i - 1][j - 1] + 1
            } else {
                len[i - 1][j].max(len[i][j - 1])
            };
        }
    }
    len
}

/// `cost[i][j]`: fewest scalar multiplications for the product of
/// matrices `i..=j`, where matrix `i` is `dims[i-1] x dims[i]`.
pub fn matrix_chain_table(dims: &[i64]) -> Vec<Vec<i64>> {
    let n = dims.len() - 1;
    let mut cost = vec![vec![0; n + 1]; n + 1];
    for span in 1..n {
        for i in 1..=n - span {
            let j = i + span;
            cost[i][j] = (i..j)
                .map(|k| cost[i][k] + cost[k + 1][j] + dims[i - 1] * dims[k] * dims[j])
                .min()
                .expect("non-empty split range");
        }
    }
    cost
}

/// `ranks[t][p]`: rank of node `p` after `t` power iterations starting
/// from the uniform distribution.
pub fn pagerank_table(nodes: usize, links: &[(usize, usize)], iterations: usize) -> Vec<Vec<f64>> {
    let mut outdeg = vec![0usize; nodes + 1];
    for &(a, _) in links {
        outdeg[a] += 1;
    }
    let n = nodes as f64;
    let mut ranks = vec![vec![0.0; nodes + 1]];
    for p in 1..=nodes {
        ranks[0][p] = 1.0 / n;
    }
    for t in 1..=iterations {
        let prev = &ranks[t - 1];
        let mut next = vec![0.0; nodes + 1];
        for p in 1..=nodes {
            next[p] = (1.0 - DAMPING) / n;
        }
        for &(q, p) in links {
            next[p] += DAMPING * prev[q] / outdeg[q] as f64;
        }
        ranks.push(next);
    }
    ranks
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub matched: bool,
    /// Answers compared.
    pub compared: usize,
    /// First disagreement found, if any.
    pub mismatch: Option<String>,
}

impl Verdict {
    fn new() -> Verdict {
        Verdict { matched: true, compared: 0, mismatch: None }
    }

    fn fail(&mut self, msg: String) {
        if self.matched {
            self.matched = false;
            self.mismatch = Some(msg);
        }
    }
}

fn int(t: &Term) -> Option<i64> {
    match t {
        Term::Int(i) => Some(*i),
        _ => None,
    }
}

fn float(t: &Term) -> Option<f64> {
    match t {
        Term::Float(x) => Some(x.0),
        Term::Int(i) => Some(*i as f64),
        _ => None,
    }
}

fn ints(row: &[Term]) -> Option<Vec<i64>> {
    row.iter().map(int).collect()
}

/// Every valid answer of every complete frame of `pred`, as ground
/// instances of the call.
fn instances(engine: &Engine, pred: &Pred) -> Vec<Vec<Term>> {
    let tables = engine.tables();
    let mut out = Vec::new();
    for (id, frame) in tables.frames() {
        if frame.predicate() == *pred {
            out.extend(tables.answer_instances(id));
        }
    }
    out
}

/// Compares the tables left in `engine` after running the instance's query
/// against the reference solution.
pub fn check(inst: &BenchInstance, engine: &Engine) -> Verdict {
    let mut v = Verdict::new();
    let incomplete = engine.tables().frames().filter(|(_, f)| !f.is_complete()).count();
    if incomplete > 0 {
        v.fail(format!("{incomplete} tables left incomplete"));
        return v;
    }
    match &inst.payload {
        Payload::Graph { nodes, edges } => check_graph(inst.name, *nodes, edges, engine, &mut v),
        Payload::Knapsack { weights, target } => {
            let best = knapsack_table(weights, *target);
            check_grid(engine, "ks", &mut v, |i, w| {
                best.get(i as usize).and_then(|row| row.get(w as usize)).copied().flatten()
            });
            if v.matched && !engine.tables().frames().any(|(_, f)| f.predicate().name.as_str() == "ks") {
                v.fail("no ks table".into());
            }
        }
        Payload::Lcs { x, y } => {
            let len = lcs_table(x, y);
            check_grid(engine, "lcs", &mut v, |i, j| len.get(i as usize).and_then(|r| r.get(j as usize)).copied());
        }
        Payload::Matrix { dims } => {
            let cost = matrix_chain_table(dims);
            check_grid(engine, "mc", &mut v, |i, j| {
                (i >= 1 && i <= j).then(|| cost.get(i as usize).and_then(|r| r.get(j as usize)).copied()).flatten()
            });
        }
        Payload::Pagerank { nodes, links, iterations } => {
            let ranks = pagerank_table(*nodes, links, *iterations);
            let rows = instances(engine, &Pred::new("rank", 3));
            let mut seen = BTreeSet::new();
            for row in rows {
                let (Some(t), Some(p), Some(r)) = (int(&row[0]), int(&row[1]), float(&row[2])) else {
                    v.fail(format!("malformed rank answer {row:?}"));
                    continue;
                };
                v.compared += 1;
                if !seen.insert((t, p)) {
                    v.fail(format!("two ranks for iteration {t} node {p}"));
                }
                let want = ranks.get(t as usize).and_then(|r| r.get(p as usize)).copied();
                match want {
                    Some(want) if (want - r).abs() <= RANK_TOLERANCE => {}
                    _ => v.fail(format!("rank({t},{p}) = {r}, expected {want:?}")),
                }
            }
            for p in 1..=*nodes as i64 {
                if !seen.contains(&(*iterations as i64, p)) {
                    v.fail(format!("missing final rank for node {p}"));
                }
            }
        }
    }
    v
}

/// Checks a predicate `name(I, J, V)` whose every answer must carry the
/// reference value for `(I, J)`. `None` means no answer may exist.
fn check_grid(engine: &Engine, name: &str, v: &mut Verdict, expected: impl Fn(i64, i64) -> Option<i64>) {
    let pred = Pred::new(name, 3);
    let mut answered = BTreeSet::new();
    for row in instances(engine, &pred) {
        let Some([i, j, val]) = ints(&row).map(|r| [r[0], r[1], r[2]]) else {
            v.fail(format!("non-integer answer {row:?}"));
            continue;
        };
        v.compared += 1;
        if !answered.insert((i, j)) {
            v.fail(format!("{name}({i},{j}) answered twice"));
        }
        if expected(i, j) != Some(val) {
            v.fail(format!("{name}({i},{j}) = {val}, expected {:?}", expected(i, j)));
        }
    }
    for (id, frame) in engine.tables().frames() {
        if frame.predicate() != pred {
            continue;
        }
        let args = engine.tables().call_args(id);
        if let (Some(i), Some(j)) = (int(&args[0]), int(&args[1])) {
            if expected(i, j).is_some() && !answered.contains(&(i, j)) {
                v.fail(format!("{name}({i},{j}) has no answer"));
            }
        }
    }
}

fn check_graph(name: BenchName, n: usize, edges: &[(usize, usize, i64)], engine: &Engine, v: &mut Verdict) {
    let dist = floyd_warshall(n, edges);
    let weight: BTreeMap<(usize, usize), i64> = edges.iter().map(|&(a, b, w)| ((a, b), w)).collect();
    let arity = if name == BenchName::Shortest { 3 } else { 4 };
    let rows = instances(engine, &Pred::new("path", arity));
    let mut found: BTreeMap<(usize, usize), BTreeSet<i64>> = BTreeMap::new();
    for row in rows {
        let Some(r) = ints(&row) else {
            v.fail(format!("non-integer answer {row:?}"));
            continue;
        };
        v.compared += 1;
        let (x, y, d) = (r[0] as usize, r[1] as usize, r[2]);
        if x == 0 || y == 0 || x > n || y > n || dist[x][y] != Some(d) {
            v.fail(format!("path({x},{y}) = {d}, expected {:?}", dist.get(x).and_then(|r| r.get(y))));
            continue;
        }
        let extra = r.get(3).copied().unwrap_or(0);
        if !found.entry((x, y)).or_default().insert(extra) {
            v.fail(format!("path({x},{y}) answered twice with {extra}"));
        }
        if matches!(name, BenchName::ShortestFirst | BenchName::ShortestPref)
            && !is_justification(x, y, extra as usize, &dist, &weight)
        {
            v.fail(format!("path({x},{y},{d}) justified by {extra}, which is not a predecessor"));
        }
    }
    let counts = (name == BenchName::ShortestAll).then(|| lightest_edge_counts(n, edges, &dist));
    for x in 1..=n {
        for y in 1..=n {
            let got = found.get(&(x, y));
            match (dist[x][y], got) {
                (None, None) => {}
                (Some(_), None) => v.fail(format!("path({x},{y}) missing")),
                (None, Some(_)) => unreachable!("unreachable pairs were rejected above"),
                (Some(_), Some(set)) => match &counts {
                    Some(counts) if *set != counts[x][y] => {
                        v.fail(format!("path({x},{y}) edge counts {set:?}, expected {:?}", counts[x][y]))
                    }
                    None if set.len() != 1 => v.fail(format!("path({x},{y}) has {} answers", set.len())),
                    _ => {}
                },
            }
        }
    }
}
