//! The table space: one subgoal trie per tabled predicate, one answer trie
//! per subgoal frame.
//!
//! Answer leaves are chained in insertion order so a consumer only needs to
//! remember the last leaf it loaded. When a mode decides that stored answers
//! are superseded, the affected branch is unlinked from the trie (so later
//! lookups cannot reach it) but its leaves stay in the chain, tagged invalid,
//! until the table completes. Consumers parked on an invalidated leaf can
//! still follow the chain to later answers.

use std::fmt::Write as _;

use indexmap::IndexMap;
use rustc_hash::FxBuildHasher;
use thiserror::Error;

use crate::modes::{ModeArray, SubstitutionArray};
use crate::terms::{decode_one, tokenize_into, Pred, Term, Token, TokenSeq, VarMap};

pub type NodeId = u32;
pub type LeafId = u32;
pub type FrameId = usize;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrieError {
    #[error("node {0} is not a live node of this trie")]
    NotInTrie(NodeId),
    #[error("leaf node {0} is already chained")]
    DoubleAppend(NodeId),
    #[error("table for {0} is already complete")]
    AlreadyComplete(String),
    #[error("table for {0} is complete and cannot change")]
    Completed(String),
    #[error("{0} is not tabled")]
    NotTabled(Pred),
    #[error("call arity {got} does not match {pred}")]
    Arity { pred: Pred, got: usize },
    #[error("corrupt answer trie: {0}")]
    Corrupt(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeState {
    Live,
    /// Interior node unlinked by invalidation; kept until completion.
    Deleted,
    /// Invalidated leaf; unreachable from the root but still chained.
    Detached,
    Free,
}

#[derive(Clone, Debug)]
pub struct TrieNode {
    token: Option<Token>,
    parent: Option<NodeId>,
    children: IndexMap<Token, NodeId, FxBuildHasher>,
    payload: Option<u32>,
    state: NodeState,
}

impl TrieNode {
    fn new(token: Option<Token>, parent: Option<NodeId>) -> TrieNode {
        TrieNode { token, parent, children: IndexMap::default(), payload: None, state: NodeState::Live }
    }
}

/// Token trie with insertion-ordered children and an arena of nodes.
#[derive(Clone, Debug)]
pub struct Trie {
    nodes: Vec<TrieNode>,
    free: Vec<NodeId>,
    live: usize,
}

/// Result of unlinking a branch.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Unlinked {
    /// Interior nodes removed from the trie.
    pub deleted: usize,
    /// Payload-carrying nodes detached from the trie.
    pub detached: Vec<NodeId>,
}

impl Default for Trie {
    fn default() -> Self {
        Trie::new()
    }
}

impl Trie {
    pub const ROOT: NodeId = 0;

    pub fn new() -> Trie {
        Trie { nodes: vec![TrieNode::new(None, None)], free: Vec::new(), live: 0 }
    }

    pub fn root(&self) -> NodeId {
        Self::ROOT
    }

    fn node(&self, id: NodeId) -> &TrieNode {
        &self.nodes[id as usize]
    }

    fn node_mut(&mut self, id: NodeId) -> &mut TrieNode {
        &mut self.nodes[id as usize]
    }

    pub fn token(&self, id: NodeId) -> Option<Token> {
        self.node(id).token
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        self.node(id).parent
    }

    pub fn state(&self, id: NodeId) -> NodeState {
        self.node(id).state
    }

    pub fn payload(&self, id: NodeId) -> Option<u32> {
        self.node(id).payload
    }

    pub fn set_payload(&mut self, id: NodeId, payload: u32) {
        self.node_mut(id).payload = Some(payload);
    }

    pub fn child(&self, id: NodeId, token: &Token) -> Option<NodeId> {
        self.node(id).children.get(token).copied()
    }

    /// Live children in insertion order.
    pub fn children(&self, id: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.node(id).children.values().copied()
    }

    pub fn child_count(&self, id: NodeId) -> usize {
        self.node(id).children.len()
    }

    pub fn is_live(&self, id: NodeId) -> bool {
        (id as usize) < self.nodes.len() && self.node(id).state == NodeState::Live
    }

    /// Live nodes excluding the root.
    pub fn node_count(&self) -> usize {
        self.live
    }

    fn alloc(&mut self, token: Token, parent: NodeId) -> NodeId {
        let node = TrieNode::new(Some(token), Some(parent));
        let id = match self.free.pop() {
            Some(id) => {
                self.nodes[id as usize] = node;
                id
            }
            None => {
                self.nodes.push(node);
                (self.nodes.len() - 1) as NodeId
            }
        };
        self.node_mut(parent).children.insert(token, id);
        self.live += 1;
        id
    }

    /// Follows `tokens` from `start`, creating missing nodes. Returns the final
    /// node and whether the whole path already existed.
    pub fn insert_from(&mut self, start: NodeId, tokens: &[Token]) -> (NodeId, bool) {
        let mut cur = start;
        let mut existed = true;
        for tok in tokens {
            cur = match self.child(cur, tok) {
                Some(next) => next,
                None => {
                    existed = false;
                    self.alloc(*tok, cur)
                }
            };
        }
        (cur, existed)
    }

    pub fn insert(&mut self, seq: &[Token]) -> (NodeId, bool) {
        self.insert_from(Self::ROOT, seq)
    }

    pub fn lookup_from(&self, start: NodeId, tokens: &[Token]) -> Option<NodeId> {
        tokens.iter().try_fold(start, |cur, tok| self.child(cur, tok))
    }

    pub fn lookup(&self, seq: &[Token]) -> Option<NodeId> {
        self.lookup_from(Self::ROOT, seq)
    }

    /// Tokens on the path from the root to `id`, read bottom-up. Works for
    /// unlinked nodes too, since parent links survive until reclamation.
    pub fn path_tokens(&self, id: NodeId) -> Vec<Token> {
        let mut out = Vec::new();
        let mut cur = Some(id);
        while let Some(n) = cur {
            let node = self.node(n);
            if let Some(t) = node.token {
                out.push(t);
            }
            cur = node.parent;
        }
        out.reverse();
        out
    }

    /// Unlinks the subtree rooted at `id` from its parent. Nodes carrying a
    /// payload become `Detached`, the rest `Deleted`.
    pub fn unlink_subtree(&mut self, id: NodeId) -> Result<Unlinked, TrieError> {
        if id == Self::ROOT || !self.is_live(id) {
            return Err(TrieError::NotInTrie(id));
        }
        let parent = self.node(id).parent.expect("non-root node has a parent");
        let token = self.node(id).token.expect("non-root node has a token");
        self.node_mut(parent).children.shift_remove(&token);

        let mut out = Unlinked::default();
        let mut stack = vec![id];
        while let Some(n) = stack.pop() {
            let node = self.node_mut(n);
            stack.extend(node.children.values().copied());
            if node.payload.is_some() {
                node.state = NodeState::Detached;
                out.detached.push(n);
            } else {
                node.state = NodeState::Deleted;
                out.deleted += 1;
            }
        }
        self.live -= out.deleted + out.detached.len();
        Ok(out)
    }

    /// Deletes ancestors of a just-unlinked branch that were left without
    /// children or payload. Returns how many were deleted.
    pub fn prune_upward(&mut self, mut id: NodeId) -> usize {
        let mut pruned = 0;
        while id != Self::ROOT
            && self.is_live(id)
            && self.node(id).children.is_empty()
            && self.node(id).payload.is_none()
        {
            let parent = self.node(id).parent.unwrap();
            let token = self.node(id).token.unwrap();
            self.node_mut(parent).children.shift_remove(&token);
            self.node_mut(id).state = NodeState::Deleted;
            self.live -= 1;
            pruned += 1;
            id = parent;
        }
        pruned
    }

    /// Returns every unlinked node to the free list.
    pub fn reclaim(&mut self) -> usize {
        let mut n = 0;
        for (i, node) in self.nodes.iter_mut().enumerate() {
            if matches!(node.state, NodeState::Deleted | NodeState::Detached) {
                node.state = NodeState::Free;
                node.children = IndexMap::default();
                node.payload = None;
                self.free.push(i as NodeId);
                n += 1;
            }
        }
        n
    }

    /// All root-to-payload token paths reachable through live nodes, in
    /// depth-first insertion order.
    pub fn live_paths(&self) -> Vec<(Vec<Token>, u32)> {
        let mut out = Vec::new();
        let mut path = Vec::new();
        self.collect_paths(Self::ROOT, &mut path, &mut out);
        out
    }

    fn collect_paths(&self, id: NodeId, path: &mut Vec<Token>, out: &mut Vec<(Vec<Token>, u32)>) {
        let node = self.node(id);
        if let Some(p) = node.payload {
            out.push((path.clone(), p));
        }
        for (tok, child) in &node.children {
            path.push(*tok);
            self.collect_paths(*child, path, out);
            path.pop();
        }
    }
}

// ---------------------------------------------------------------------------
// Subgoal frames and answer chains

#[derive(Clone, Copy, Debug)]
pub struct AnswerLeaf {
    pub node: NodeId,
    pub next: Option<LeafId>,
    pub valid: bool,
    purged: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FrameState {
    Incomplete,
    Complete,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FrameStats {
    pub inserted: u64,
    pub rejected: u64,
    pub invalidated: u64,
    pub purged: u64,
}

/// Outcome of [`SubgoalFrame::invalidate_branch`].
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Invalidation {
    /// Interior nodes removed, ancestors pruned on the way up included.
    pub nodes_deleted: usize,
    pub leaves_invalidated: usize,
}

#[derive(Clone, Debug)]
pub struct SubgoalFrame {
    predicate: Pred,
    call_tokens: TokenSeq,
    subst: SubstitutionArray,
    answers: Trie,
    leaves: Vec<AnswerLeaf>,
    first: Option<LeafId>,
    last: Option<LeafId>,
    state: FrameState,
    pub stats: FrameStats,
}

impl SubgoalFrame {
    pub fn new(predicate: Pred, call_tokens: TokenSeq, subst: SubstitutionArray) -> SubgoalFrame {
        SubgoalFrame {
            predicate,
            call_tokens,
            subst,
            answers: Trie::new(),
            leaves: Vec::new(),
            first: None,
            last: None,
            state: FrameState::Incomplete,
            stats: FrameStats::default(),
        }
    }

    pub fn predicate(&self) -> Pred {
        self.predicate
    }

    pub fn call_tokens(&self) -> &TokenSeq {
        &self.call_tokens
    }

    pub fn substitution_array(&self) -> &SubstitutionArray {
        &self.subst
    }

    pub fn answer_trie(&self) -> &Trie {
        &self.answers
    }

    pub fn answer_trie_mut(&mut self) -> &mut Trie {
        &mut self.answers
    }

    pub fn state(&self) -> FrameState {
        self.state
    }

    pub fn is_complete(&self) -> bool {
        self.state == FrameState::Complete
    }

    pub fn first_answer(&self) -> Option<LeafId> {
        self.first
    }

    pub fn last_answer(&self) -> Option<LeafId> {
        self.last
    }

    pub fn leaf(&self, id: LeafId) -> &AnswerLeaf {
        &self.leaves[id as usize]
    }

    pub(crate) fn ensure_incomplete(&self) -> Result<(), TrieError> {
        if self.is_complete() {
            Err(TrieError::Completed(self.describe()))
        } else {
            Ok(())
        }
    }

    /// `pred: tokens` label used in messages and dumps.
    pub fn describe(&self) -> String {
        if self.call_tokens.is_empty() {
            self.predicate.to_string()
        } else {
            format!("{}: {}", self.predicate, self.call_tokens)
        }
    }

    /// Chains the answer ending at trie node `node` at the tail of the leaf list.
    pub fn append_answer_leaf(&mut self, node: NodeId) -> Result<LeafId, TrieError> {
        if !self.answers.is_live(node) {
            return Err(TrieError::NotInTrie(node));
        }
        if self.answers.payload(node).is_some() {
            return Err(TrieError::DoubleAppend(node));
        }
        let id = self.leaves.len() as LeafId;
        self.leaves.push(AnswerLeaf { node, next: None, valid: true, purged: false });
        self.answers.set_payload(node, id);
        match self.last {
            Some(prev) => self.leaves[prev as usize].next = Some(id),
            None => self.first = Some(id),
        }
        self.last = Some(id);
        Ok(id)
    }

    pub(crate) fn unlink_and_invalidate(&mut self, node: NodeId) -> Result<Invalidation, TrieError> {
        let unlinked = self.answers.unlink_subtree(node)?;
        for n in &unlinked.detached {
            let leaf = self.answers.payload(*n).expect("detached nodes carry a leaf");
            self.leaves[leaf as usize].valid = false;
        }
        let inv = Invalidation {
            nodes_deleted: unlinked.deleted,
            leaves_invalidated: unlinked.detached.len(),
        };
        self.stats.invalidated += inv.leaves_invalidated as u64;
        Ok(inv)
    }

    /// Invalidates every answer at or below `node`.
    ///
    /// Interior nodes used only by those answers are unlinked from the trie,
    /// and so are ancestors left empty. The invalidated leaves stay in the
    /// chain until [`complete`](Self::complete).
    pub fn invalidate_branch(&mut self, node: NodeId) -> Result<Invalidation, TrieError> {
        self.ensure_incomplete()?;
        if !self.answers.is_live(node) {
            return Err(TrieError::NotInTrie(node));
        }
        let parent = self.answers.parent(node);
        let mut inv = self.unlink_and_invalidate(node)?;
        if let Some(p) = parent {
            inv.nodes_deleted += self.answers.prune_upward(p);
        }
        Ok(inv)
    }

    /// Marks the table complete: invalid leaves leave the chain and their
    /// nodes are reclaimed.
    pub fn complete(&mut self) -> Result<(), TrieError> {
        if self.is_complete() {
            return Err(TrieError::AlreadyComplete(self.describe()));
        }
        let mut prev: Option<LeafId> = None;
        let mut cur = self.first;
        self.first = None;
        while let Some(id) = cur {
            let leaf = self.leaves[id as usize];
            cur = leaf.next;
            if leaf.valid {
                match prev {
                    Some(p) => self.leaves[p as usize].next = Some(id),
                    None => self.first = Some(id),
                }
                prev = Some(id);
            } else {
                // Purged leaves keep their `next`, so a stale cursor can still move forward.
                self.leaves[id as usize].purged = true;
                self.stats.purged += 1;
            }
        }
        if let Some(p) = prev {
            self.leaves[p as usize].next = None;
        }
        self.last = prev;
        self.answers.reclaim();
        self.state = FrameState::Complete;
        Ok(())
    }

    /// Drops every answer and reopens the table.
    pub fn abolish(&mut self) {
        self.answers = Trie::new();
        self.leaves.clear();
        self.first = None;
        self.last = None;
        self.state = FrameState::Incomplete;
        self.stats = FrameStats::default();
    }

    /// First valid leaf strictly after `from` (from the head when `None`).
    /// Also returns the last leaf examined, valid or not.
    pub fn next_valid_after(&self, from: Option<LeafId>) -> (Option<LeafId>, Option<LeafId>) {
        let mut examined = from;
        let mut cur = match from {
            Some(id) => self.leaves[id as usize].next,
            None => self.first,
        };
        while let Some(id) = cur {
            examined = Some(id);
            let leaf = &self.leaves[id as usize];
            if leaf.valid {
                return (Some(id), examined);
            }
            cur = leaf.next;
        }
        (None, examined)
    }

    pub fn has_answers_after(&self, from: Option<LeafId>) -> bool {
        self.next_valid_after(from).0.is_some()
    }

    /// Token path of a leaf, read bottom-up through the answer trie.
    pub fn leaf_tokens(&self, id: LeafId) -> Vec<Token> {
        self.answers.path_tokens(self.leaves[id as usize].node)
    }

    /// Substitution terms of an answer.
    pub fn decode_leaf(&self, id: LeafId) -> Vec<Term> {
        let tokens = self.leaf_tokens(id);
        let mut out = Vec::with_capacity(self.subst.total_vars());
        let mut rest = &tokens[..];
        while !rest.is_empty() {
            let (t, r) = decode_one(rest).expect("answer paths are well formed");
            out.push(t);
            rest = r;
        }
        out
    }

    /// Valid answers after `from`, in chain order.
    pub fn iter_answers(&self, from: Option<LeafId>) -> AnswerIter<'_> {
        AnswerIter { frame: self, cursor: from, done: false }
    }

    pub fn valid_answers(&self) -> Vec<Vec<Term>> {
        self.iter_answers(None).map(|(_, a)| a).collect()
    }

    /// Every chained leaf, valid or not, in chain order.
    pub fn chain(&self) -> Vec<LeafId> {
        let mut out = Vec::new();
        let mut cur = self.first;
        while let Some(id) = cur {
            out.push(id);
            cur = self.leaves[id as usize].next;
        }
        out
    }

    pub fn invalid_in_chain(&self) -> usize {
        self.chain().iter().filter(|id| !self.leaves[**id as usize].valid).count()
    }

    /// One line per chained answer: `tokens [valid|invalid]`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for id in self.chain() {
            let leaf = &self.leaves[id as usize];
            let toks = TokenSeq(self.leaf_tokens(id));
            let tag = if leaf.valid { "valid" } else { "invalid" };
            let _ = writeln!(out, "{toks} [{tag}]");
        }
        out
    }
}

pub struct AnswerIter<'a> {
    frame: &'a SubgoalFrame,
    cursor: Option<LeafId>,
    done: bool,
}

impl Iterator for AnswerIter<'_> {
    type Item = (LeafId, Vec<Term>);

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        match self.frame.next_valid_after(self.cursor).0 {
            Some(id) => {
                self.cursor = Some(id);
                Some((id, self.frame.decode_leaf(id)))
            }
            None => {
                self.done = true;
                None
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Table entries

#[derive(Clone, Debug)]
pub struct TableEntry {
    pub predicate: Pred,
    pub mode_array: ModeArray,
    subgoals: Trie,
}

impl TableEntry {
    pub fn subgoal_trie(&self) -> &Trie {
        &self.subgoals
    }
}

/// Result of looking up a call in its predicate's subgoal trie.
#[derive(Clone, Debug)]
pub struct SubgoalCall {
    pub frame: FrameId,
    pub is_new: bool,
    /// Free variables of the call in the order they entered the subgoal trie;
    /// answers carry one substitution term per entry.
    pub vars: Vec<usize>,
}

#[derive(Clone, Debug, Default)]
pub struct TableSpace {
    entries: IndexMap<Pred, TableEntry, FxBuildHasher>,
    frames: Vec<SubgoalFrame>,
}

impl TableSpace {
    pub fn new() -> TableSpace {
        TableSpace::default()
    }

    /// Registers a tabled predicate. Re-declaring keeps the first entry.
    pub fn declare(&mut self, predicate: Pred, mode_array: ModeArray) -> &TableEntry {
        self.entries
            .entry(predicate)
            .or_insert_with(|| TableEntry { predicate, mode_array, subgoals: Trie::new() })
    }

    pub fn entry(&self, predicate: &Pred) -> Option<&TableEntry> {
        self.entries.get(predicate)
    }

    pub fn entries(&self) -> impl Iterator<Item = &TableEntry> {
        self.entries.values()
    }

    pub fn is_tabled(&self, predicate: &Pred) -> bool {
        self.entries.contains_key(predicate)
    }

    pub fn frame(&self, id: FrameId) -> &SubgoalFrame {
        &self.frames[id]
    }

    pub fn frame_mut(&mut self, id: FrameId) -> &mut SubgoalFrame {
        &mut self.frames[id]
    }

    pub fn frames(&self) -> impl Iterator<Item = (FrameId, &SubgoalFrame)> {
        self.frames.iter().enumerate()
    }

    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    /// Finds or creates the frame for a call. Arguments enter the subgoal
    /// trie in mode-array order, so variant calls share a path.
    pub fn subgoal_lookup_insert(
        &mut self,
        predicate: Pred,
        args: &[Term],
    ) -> Result<SubgoalCall, TrieError> {
        let entry = self.entries.get_mut(&predicate).ok_or(TrieError::NotTabled(predicate))?;
        if args.len() != predicate.arity {
            return Err(TrieError::Arity { pred: predicate, got: args.len() });
        }
        let mut vars = VarMap::new();
        let mut tokens = Vec::new();
        let mut counts = Vec::with_capacity(args.len());
        for e in entry.mode_array.entries() {
            let before = vars.len();
            tokenize_into(&args[e.arg - 1], &mut vars, &mut tokens);
            counts.push(vars.len() - before);
        }
        let (leaf, _) = entry.subgoals.insert(&tokens);
        if let Some(frame) = entry.subgoals.payload(leaf) {
            return Ok(SubgoalCall { frame: frame as FrameId, is_new: false, vars: vars.vars().to_vec() });
        }
        let subst = SubstitutionArray::from_counts(&entry.mode_array, &counts);
        let id = self.frames.len();
        entry.subgoals.set_payload(leaf, id as u32);
        self.frames.push(SubgoalFrame::new(predicate, TokenSeq(tokens), subst));
        Ok(SubgoalCall { frame: id, is_new: true, vars: vars.vars().to_vec() })
    }

    /// Call arguments of a frame in source order. Free variables are
    /// numbered by first appearance in mode-array order.
    pub fn call_args(&self, id: FrameId) -> Vec<Term> {
        let frame = &self.frames[id];
        let entry = &self.entries[&frame.predicate()];
        let mut out = vec![Term::Int(0); frame.predicate().arity];
        let mut rest = frame.call_tokens().tokens();
        for e in entry.mode_array.entries() {
            let (t, r) = decode_one(rest).expect("call paths are well formed");
            out[e.arg - 1] = t;
            rest = r;
        }
        out
    }

    /// Valid answers of a frame as instances of its call arguments, in
    /// chain order. Variables left in an answer are numbered after the
    /// call's own.
    pub fn answer_instances(&self, id: FrameId) -> Vec<Vec<Term>> {
        let call = self.call_args(id);
        let width = self.frames[id].substitution_array().total_vars();
        self.frames[id]
            .iter_answers(None)
            .map(|(_, answer)| {
                let answer: Vec<Term> =
                    answer.iter().map(|t| t.map_vars(&mut |v| Term::Var(v + width))).collect();
                call.iter().map(|a| a.map_vars(&mut |v| answer[v].clone())).collect()
            })
            .collect()
    }

    /// Drops every table, keeping declarations.
    pub fn abolish_all(&mut self) {
        self.frames.clear();
        for e in self.entries.values_mut() {
            e.subgoals = Trie::new();
        }
    }
}
