//! Benchmark instances: seeded generators and the tabled programs that
//! solve them.
//!
//! The generated data stands in for the real datasets (airport flight
//! graphs, web link graphs) at desk scale. Every instance is a pure
//! function of `(name, size, seed)`.

use std::fmt;
use std::ops::RangeInclusive;

use clap::ValueEnum;
use rand::seq::SliceRandom;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::lang::{goal, parse_program, parse_query, Program, Query};
use crate::modes::Mode;
use crate::terms::Term;

/// Node count of every pagerank link graph; `size` is the iteration count.
pub const PAGERANK_NODES: usize = 50;
pub const DAMPING: f64 = 0.85;
pub const LCS_ALPHABET: [char; 4] = ['a', 'c', 'g', 't'];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum BenchName {
    Shortest,
    ShortestFirst,
    ShortestAll,
    ShortestPref,
    Knapsack,
    Lcs,
    Matrix,
    Pagerank,
}

impl BenchName {
    pub const ALL: [BenchName; 8] = [
        BenchName::Shortest,
        BenchName::ShortestFirst,
        BenchName::ShortestAll,
        BenchName::ShortestPref,
        BenchName::Knapsack,
        BenchName::Lcs,
        BenchName::Matrix,
        BenchName::Pagerank,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BenchName::Shortest => "shortest",
            BenchName::ShortestFirst => "shortest_first",
            BenchName::ShortestAll => "shortest_all",
            BenchName::ShortestPref => "shortest_pref",
            BenchName::Knapsack => "knapsack",
            BenchName::Lcs => "lcs",
            BenchName::Matrix => "matrix",
            BenchName::Pagerank => "pagerank",
        }
    }

    /// Accepted `size` values, inclusive.
    pub fn size_bounds(self) -> (usize, usize) {
        match self {
            BenchName::Shortest | BenchName::ShortestFirst | BenchName::ShortestAll | BenchName::ShortestPref => {
                (2, 200)
            }
            BenchName::Knapsack => (1, 100),
            BenchName::Lcs => (1, 200),
            BenchName::Matrix => (1, 100),
            BenchName::Pagerank => (1, 50),
        }
    }

    /// Modes other than `index` used by the benchmark's table declaration.
    pub fn modes(self) -> &'static [Mode] {
        match self {
            BenchName::Shortest | BenchName::Matrix => &[Mode::Min],
            BenchName::ShortestFirst => &[Mode::Min, Mode::First],
            BenchName::ShortestAll => &[Mode::Min, Mode::All],
            BenchName::ShortestPref => &[Mode::Min, Mode::Last],
            BenchName::Knapsack | BenchName::Lcs => &[Mode::Max],
            BenchName::Pagerank => &[Mode::Sum],
        }
    }

    pub fn uses_sum(self) -> bool {
        self.modes().contains(&Mode::Sum)
    }

    pub fn is_graph(self) -> bool {
        matches!(
            self,
            BenchName::Shortest | BenchName::ShortestFirst | BenchName::ShortestAll | BenchName::ShortestPref
        )
    }
}

impl fmt::Display for BenchName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{name} size must be in {min}..={max}, got {size}")]
pub struct SizeError {
    pub name: BenchName,
    pub size: usize,
    pub min: usize,
    pub max: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Payload {
    /// Nodes `1..=nodes`, weighted edges `(from, to, weight)`.
    Graph { nodes: usize, edges: Vec<(usize, usize, i64)> },
    /// Item weights and the exact total to reach.
    Knapsack { weights: Vec<i64>, target: i64 },
    Lcs { x: Vec<char>, y: Vec<char> },
    /// Matrix `i` has shape `dims[i-1] x dims[i]`.
    Matrix { dims: Vec<i64> },
    /// Nodes `1..=nodes`, links `(from, to)`.
    Pagerank { nodes: usize, links: Vec<(usize, usize)>, iterations: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchInstance {
    pub name: BenchName,
    pub size: usize,
    pub seed: u64,
    pub payload: Payload,
}

pub fn gen_instance(name: BenchName, size: usize, seed: u64) -> Result<BenchInstance, SizeError> {
    let (min, max) = name.size_bounds();
    if size < min || size > max {
        return Err(SizeError { name, size, min, max });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let payload = match name {
        BenchName::Shortest | BenchName::ShortestFirst | BenchName::ShortestAll | BenchName::ShortestPref => {
            let links = random_digraph(&mut rng, size, 2..=4);
            let edges = links.into_iter().map(|(a, b)| (a, b, rng.random_range(1..=100))).collect();
            Payload::Graph { nodes: size, edges }
        }
        BenchName::Knapsack => {
            let weights: Vec<i64> = (0..size).map(|_| rng.random_range(1..=50)).collect();
            let mut target = 0;
            for &w in &weights {
                if rng.random_bool(0.5) {
                    target += w;
                }
            }
            if target == 0 {
                target = weights[rng.random_range(0..size)];
            }
            Payload::Knapsack { weights, target }
        }
        BenchName::Lcs => {
            let mut seq = || (0..size).map(|_| LCS_ALPHABET[rng.random_range(0..4)]).collect();
            let x = seq();
            let y = seq();
            Payload::Lcs { x, y }
        }
        BenchName::Matrix => Payload::Matrix { dims: (0..=size).map(|_| rng.random_range(5..=100)).collect() },
        BenchName::Pagerank => {
            let links = random_digraph(&mut rng, PAGERANK_NODES, 1..=3);
            Payload::Pagerank { nodes: PAGERANK_NODES, links, iterations: size }
        }
    };
    Ok(BenchInstance { name, size, seed, payload })
}

/// A ring through every node plus a random number of extra out-links per
/// node drawn from `extra`, without self-loops or duplicates. The ring
/// keeps it strongly connected.
fn random_digraph(rng: &mut ChaCha8Rng, nodes: usize, extra: RangeInclusive<usize>) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for a in 1..=nodes {
        let next = a % nodes + 1;
        let mut targets = vec![next];
        let mut others: Vec<usize> = (1..=nodes).filter(|&b| b != a && b != next).collect();
        others.shuffle(rng);
        let k = rng.random_range(extra.clone()).min(others.len());
        targets.extend_from_slice(&others[..k]);
        targets.sort_unstable();
        out.extend(targets.into_iter().map(|b| (a, b)));
    }
    out
}

const SHORTEST: &str = "
:- table path(index, index, min).
path(X, Y, D) :- path(X, Z, D1), edge(Z, Y, D2), D is D1 + D2.
path(X, Y, D) :- edge(X, Y, D).
";

const SHORTEST_FIRST: &str = "
:- table path(index, index, min, first).
path(X, Y, D, Z) :- path(X, Z, D1, _), edge(Z, Y, D2), D is D1 + D2.
path(X, Y, D, X) :- edge(X, Y, D).
";

const SHORTEST_ALL: &str = "
:- table path(index, index, min, all).
path(X, Y, D, N) :- path(X, Z, D1, N1), edge(Z, Y, D2), D is D1 + D2, N is N1 + 1.
path(X, Y, D, 1) :- edge(X, Y, D).
";

const SHORTEST_PREF: &str = "
:- table path(index, index, min, last).
path(X, Y, D, Z) :- path(X, Z, D1, _), edge(Z, Y, D2), D is D1 + D2.
path(X, Y, D, X) :- edge(X, Y, D).
";

const KNAPSACK: &str = "
:- table ks(index, index, max).
ks(0, 0, 0).
ks(I, W, C) :- I > 0, I1 is I - 1, ks(I1, W, C).
ks(I, W, C) :- I > 0, item(I, WI), WI =< W, I1 is I - 1, W1 is W - WI, ks(I1, W1, C1), C is C1 + 1.
";

const LCS: &str = "
:- table lcs(index, index, max).
lcs(0, _, 0).
lcs(I, 0, 0) :- I > 0.
lcs(I, J, L) :- I > 0, J > 0, x(I, C), y(J, C), I1 is I - 1, J1 is J - 1, lcs(I1, J1, L1), L is L1 + 1.
lcs(I, J, L) :- I > 0, J > 0, I1 is I - 1, lcs(I1, J, L).
lcs(I, J, L) :- I > 0, J > 0, J1 is J - 1, lcs(I, J1, L).
";

const MATRIX: &str = "
:- table mc(index, index, min).
mc(I, I, 0).
mc(I, J, C) :- I < J, J1 is J - 1, between(I, J1, K), mc(I, K, C1), K1 is K + 1, mc(K1, J, C2),
    I0 is I - 1, dim(I0, P0), dim(K, PK), dim(J, PJ), C is C1 + C2 + P0 * PK * PJ.
between(L, H, L) :- L =< H.
between(L, H, X) :- L < H, L1 is L + 1, between(L1, H, X).
";

const PAGERANK: &str = "
:- table rank(index, index, sum).
rank(0, P, R) :- node(P), nnodes(N), R is 1.0 / N.
rank(T, P, R) :- T > 0, node(P), nnodes(N), R is (1 - 0.85) / N.
rank(T, P, R) :- T > 0, T0 is T - 1, inlink(P, Q), outdeg(Q, D), rank(T0, Q, RQ), R is 0.85 * RQ / D.
";

impl BenchInstance {
    pub fn rules(&self) -> &'static str {
        match self.name {
            BenchName::Shortest => SHORTEST,
            BenchName::ShortestFirst => SHORTEST_FIRST,
            BenchName::ShortestAll => SHORTEST_ALL,
            BenchName::ShortestPref => SHORTEST_PREF,
            BenchName::Knapsack => KNAPSACK,
            BenchName::Lcs => LCS,
            BenchName::Matrix => MATRIX,
            BenchName::Pagerank => PAGERANK,
        }
    }

    /// The rules followed by the instance's facts.
    pub fn program(&self) -> Program {
        let mut prog = parse_program(self.rules()).expect("benchmark rules parse");
        let int = |i: usize| Term::Int(i as i64);
        match &self.payload {
            Payload::Graph { edges, .. } => {
                for &(a, b, w) in edges {
                    prog.add_fact(goal("edge", vec![int(a), int(b), Term::Int(w)]));
                }
            }
            Payload::Knapsack { weights, .. } => {
                for (i, &w) in weights.iter().enumerate() {
                    prog.add_fact(goal("item", vec![int(i + 1), Term::Int(w)]));
                }
            }
            Payload::Lcs { x, y } => {
                for (name, seq) in [("x", x), ("y", y)] {
                    for (i, c) in seq.iter().enumerate() {
                        prog.add_fact(goal(name, vec![int(i + 1), Term::atom(&c.to_string())]));
                    }
                }
            }
            Payload::Matrix { dims } => {
                for (i, &d) in dims.iter().enumerate() {
                    prog.add_fact(goal("dim", vec![int(i), Term::Int(d)]));
                }
            }
            Payload::Pagerank { nodes, links, .. } => {
                prog.add_fact(goal("nnodes", vec![int(*nodes)]));
                let mut outdeg = vec![0; nodes + 1];
                for &(a, _) in links {
                    outdeg[a] += 1;
                }
                for p in 1..=*nodes {
                    prog.add_fact(goal("node", vec![int(p)]));
                }
                for p in 1..=*nodes {
                    prog.add_fact(goal("outdeg", vec![int(p), int(outdeg[p])]));
                }
                let mut inlinks: Vec<(usize, usize)> = links.iter().map(|&(a, b)| (b, a)).collect();
                inlinks.sort_unstable();
                for (p, q) in inlinks {
                    prog.add_fact(goal("inlink", vec![int(p), int(q)]));
                }
            }
        }
        prog
    }

    pub fn query_text(&self) -> String {
        match &self.payload {
            Payload::Graph { .. } if self.name == BenchName::Shortest => "path(X, Y, D)".into(),
            Payload::Graph { .. } => "path(X, Y, D, J)".into(),
            Payload::Knapsack { weights, target } => format!("ks({}, {target}, C)", weights.len()),
            Payload::Lcs { x, y } => format!("lcs({}, {}, L)", x.len(), y.len()),
            Payload::Matrix { dims } => format!("mc(1, {}, C)", dims.len() - 1),
            Payload::Pagerank { iterations, .. } => format!("rank({iterations}, P, R)"),
        }
    }

    pub fn query(&self) -> Query {
        parse_query(&self.query_text()).expect("benchmark queries parse")
    }
}
