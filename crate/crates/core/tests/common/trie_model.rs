//! List and set models of answer tries and leaf chains, with the property
//! bodies shared by the proptest suite and the acceptance runner.

use std::collections::BTreeSet;

use modetab::modes::Mode;
use modetab::terms::Token;
use modetab::tries::{LeafId, NodeId, SubgoalFrame, Trie};
use proptest::prelude::*;

pub const CASES: u32 = 512;

pub fn path_strategy() -> impl Strategy<Value = Vec<i64>> {
    prop::collection::vec(0i64..3, 3)
}

pub fn tokens(path: &[i64]) -> Vec<Token> {
    path.iter().map(|&i| Token::Int(i)).collect()
}

#[derive(Clone, Debug)]
pub enum Op {
    /// Insert this answer path.
    Insert(Vec<i64>),
    /// Invalidate every live answer under the prefix `path[..depth]`
    /// of the live answer picked by `pick`.
    Invalidate { pick: usize, depth: usize },
    /// Park a consumer cursor on the leaf picked by `pick`.
    Park { pick: usize },
}

pub fn op_strategy() -> impl Strategy<Value = Op> {
    prop_oneof![
        4 => path_strategy().prop_map(Op::Insert),
        2 => (any::<usize>(), 1usize..=3).prop_map(|(pick, depth)| Op::Invalidate { pick, depth }),
        1 => any::<usize>().prop_map(|pick| Op::Park { pick }),
    ]
}

/// Model of one chained leaf.
#[derive(Clone, Debug)]
pub struct ModelLeaf {
    pub id: LeafId,
    pub node: NodeId,
    pub path: Vec<i64>,
    pub valid: bool,
}

pub struct Harness {
    pub frame: SubgoalFrame,
    pub model: Vec<ModelLeaf>,
    pub parked: Vec<usize>,
}

impl Harness {
    pub fn new() -> Harness {
        Harness { frame: super::open_frame(&[Mode::Index; 3]), model: Vec::new(), parked: Vec::new() }
    }

    pub fn live(&self) -> Vec<usize> {
        (0..self.model.len()).filter(|&i| self.model[i].valid).collect()
    }

    pub fn apply(&mut self, op: &Op) -> Result<(), TestCaseError> {
        match op {
            Op::Insert(path) => {
                let already = self.model.iter().any(|l| l.valid && &l.path == path);
                let (node, existed) = self.frame.answer_trie_mut().insert_from(Trie::ROOT, &tokens(path));
                prop_assert_eq!(existed, already);
                if !existed {
                    let id = self.frame.append_answer_leaf(node).unwrap();
                    self.model.push(ModelLeaf { id, node, path: path.clone(), valid: true });
                }
            }
            Op::Invalidate { pick, depth } => {
                let live = self.live();
                if live.is_empty() {
                    return Ok(());
                }
                let target = self.model[live[pick % live.len()]].clone();
                let prefix = &target.path[..*depth];
                let node = self.frame.answer_trie().lookup(&tokens(prefix)).expect("live prefix is reachable");
                let inv = self.frame.invalidate_branch(node).unwrap();
                let mut hit = 0;
                for l in self.model.iter_mut().filter(|l| l.valid && l.path.starts_with(prefix)) {
                    l.valid = false;
                    hit += 1;
                }
                prop_assert_eq!(inv.leaves_invalidated, hit);
            }
            Op::Park { pick } => {
                if !self.model.is_empty() {
                    self.parked.push(pick % self.model.len());
                }
            }
        }
        Ok(())
    }

    pub fn check(&self) -> Result<(), TestCaseError> {
        let f = &self.frame;
        let chain = f.chain();
        let want_chain: Vec<LeafId> = self.model.iter().map(|l| l.id).collect();
        prop_assert_eq!(chain, want_chain);
        for l in &self.model {
            prop_assert_eq!(f.leaf(l.id).valid, l.valid);
            prop_assert_eq!(f.answer_trie().is_live(l.node), l.valid);
            prop_assert_eq!(f.leaf_tokens(l.id), tokens(&l.path));
            if l.valid {
                prop_assert_eq!(f.answer_trie().lookup(&tokens(&l.path)), Some(l.node));
            }
        }
        let iterated: Vec<LeafId> = f.iter_answers(None).map(|(id, _)| id).collect();
        let valid: Vec<LeafId> = self.model.iter().filter(|l| l.valid).map(|l| l.id).collect();
        prop_assert_eq!(&iterated, &valid);

        // Only valid answers are reachable from the root, each at its own path.
        let reachable: Vec<(Vec<Token>, u32)> = f.answer_trie().live_paths();
        let got: BTreeSet<LeafId> = reachable.iter().map(|(_, p)| *p).collect();
        prop_assert_eq!(got, valid.iter().copied().collect::<BTreeSet<_>>());
        for l in self.model.iter().filter(|l| !l.valid) {
            let found = f.answer_trie().lookup(&tokens(&l.path));
            prop_assert!(found != Some(l.node), "invalidated node reachable");
        }

        // Node sharing: one live node per distinct prefix of a valid answer.
        let prefixes: BTreeSet<Vec<i64>> = self
            .model
            .iter()
            .filter(|l| l.valid)
            .flat_map(|l| (1..=l.path.len()).map(move |d| l.path[..d].to_vec()))
            .collect();
        prop_assert_eq!(f.answer_trie().node_count(), prefixes.len());

        // A cursor parked on any leaf, valid or not, still reaches every
        // later valid answer.
        for &pos in &self.parked {
            let later: Vec<LeafId> = self.model[pos + 1..].iter().filter(|l| l.valid).map(|l| l.id).collect();
            let seen: Vec<LeafId> = f.iter_answers(Some(self.model[pos].id)).map(|(id, _)| id).collect();
            prop_assert_eq!(seen, later);
        }
        Ok(())
    }
}


pub fn shared_prefixes_use_one_node(paths: &[Vec<i64>]) -> Result<(), TestCaseError> {
    let mut trie = Trie::new();
    let mut seen: BTreeSet<Vec<i64>> = BTreeSet::new();
    let mut nodes = Vec::new();
    for p in paths {
        let (node, existed) = trie.insert(&tokens(p));
        let was_prefix = p.is_empty() || seen.iter().any(|q| q.starts_with(p));
        prop_assert_eq!(existed, was_prefix);
        for d in 1..=p.len() {
            seen.insert(p[..d].to_vec());
        }
        nodes.push(node);
    }
    prop_assert_eq!(trie.node_count(), seen.len());
    for (p, node) in paths.iter().zip(&nodes) {
        prop_assert_eq!(trie.lookup(&tokens(p)), Some(*node));
        prop_assert_eq!(trie.path_tokens(*node), tokens(p));
    }
    Ok(())
}

pub fn prefix_paths() -> impl Strategy<Value = Vec<Vec<i64>>> {
    prop::collection::vec(prop::collection::vec(0i64..4, 0..5), 0..30)
}

pub fn ops() -> impl Strategy<Value = Vec<Op>> {
    prop::collection::vec(op_strategy(), 0..60)
}

pub fn chain_matches_list_model(ops: &[Op]) -> Result<(), TestCaseError> {
    let mut h = Harness::new();
    for op in ops {
        h.apply(op)?;
        h.check()?;
    }
    Ok(())
}

pub fn completion_purges_invalid_leaves(ops: &[Op]) -> Result<(), TestCaseError> {
    let mut h = Harness::new();
    for op in ops {
        h.apply(op)?;
    }
    let valid: Vec<LeafId> = h.model.iter().filter(|l| l.valid).map(|l| l.id).collect();
    h.frame.complete().unwrap();
    prop_assert_eq!(h.frame.invalid_in_chain(), 0);
    prop_assert_eq!(h.frame.chain(), valid.clone());
    let reachable: BTreeSet<LeafId> = h.frame.answer_trie().live_paths().iter().map(|(_, p)| *p).collect();
    prop_assert_eq!(reachable, valid.iter().copied().collect::<BTreeSet<_>>());
    prop_assert_eq!(h.frame.stats.purged as usize, h.model.len() - valid.len());
    for &pos in &h.parked {
        let later: Vec<LeafId> = h.model[pos + 1..].iter().filter(|l| l.valid).map(|l| l.id).collect();
        let seen: Vec<LeafId> = h.frame.iter_answers(Some(h.model[pos].id)).map(|(id, _)| id).collect();
        prop_assert_eq!(seen, later);
    }
    Ok(())
}

pub fn stale_inputs() -> impl Strategy<Value = (Vec<Vec<i64>>, Vec<Vec<i64>>, usize)> {
    (prop::collection::vec(path_strategy(), 1..10), prop::collection::vec(path_strategy(), 1..10), any::<usize>())
}

/// A cursor parked on a leaf that is then invalidated still reaches every
/// answer added afterwards.
pub fn stale_cursor_reaches_later_answers(before: &[Vec<i64>], after: &[Vec<i64>], pick: usize) -> Result<(), TestCaseError> {
    let mut h = Harness::new();
    for p in before {
        h.apply(&Op::Insert(p.clone()))?;
    }
    let pos = pick % h.model.len();
    h.apply(&Op::Invalidate { pick: h.live().iter().position(|&i| i == pos).unwrap(), depth: 3 })?;
    prop_assert!(!h.model[pos].valid);
    h.parked.push(pos);
    for p in after {
        h.apply(&Op::Insert(p.clone()))?;
    }
    h.check()
}
