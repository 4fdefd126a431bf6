//! The monotonic arc-eager transition system and its static oracle.
//!
//! Nodes are numbered `0..=n`, where `0` is the artificial root and token
//! `i` of the sentence is node `i + 1`.

use std::fmt;

use crate::error::{Error, Result};

pub const ROOT: usize = 0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Action {
    Shift,
    Reduce,
    Left(usize),
    Right(usize),
}

impl Action {
    /// Dense index: SHIFT, REDUCE, then LEFT(l) and RIGHT(l) for every label.
    pub fn index(self, n_labels: usize) -> usize {
        match self {
            Action::Shift => 0,
            Action::Reduce => 1,
            Action::Left(l) => 2 + l,
            Action::Right(l) => 2 + n_labels + l,
        }
    }

    pub fn from_index(index: usize, n_labels: usize) -> Self {
        match index {
            0 => Action::Shift,
            1 => Action::Reduce,
            i if i < 2 + n_labels => Action::Left(i - 2),
            i => Action::Right(i - 2 - n_labels),
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Shift => f.write_str("SHIFT"),
            Action::Reduce => f.write_str("REDUCE"),
            Action::Left(l) => write!(f, "LEFT-ARC({})", l),
            Action::Right(l) => write!(f, "RIGHT-ARC({})", l),
        }
    }
}

/// Source of one feature vector in a parser state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Slot {
    /// Token node `id ≥ 1`.
    Node(usize),
    Root,
    Null,
}

pub const N_SLOTS: usize = 8;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParserState {
    n: usize,
    stack: Vec<usize>,
    /// Next buffer node; the buffer is empty once this exceeds `n`.
    front: usize,
    heads: Vec<Option<usize>>,
    labels: Vec<Option<usize>>,
    leftmost: Vec<Option<usize>>,
    rightmost: Vec<Option<usize>>,
}

impl ParserState {
    pub fn new(n: usize) -> Self {
        ParserState {
            n,
            stack: vec![ROOT],
            front: 1,
            heads: vec![None; n + 1],
            labels: vec![None; n + 1],
            leftmost: vec![None; n + 1],
            rightmost: vec![None; n + 1],
        }
    }

    pub fn stack(&self) -> &[usize] {
        &self.stack
    }

    pub fn buffer_front(&self) -> Option<usize> {
        (self.front <= self.n).then_some(self.front)
    }

    /// Remaining buffer nodes.
    pub fn buffer(&self) -> std::ops::RangeInclusive<usize> {
        self.front..=self.n
    }

    pub fn head(&self, node: usize) -> Option<usize> {
        self.heads[node]
    }

    pub fn label(&self, node: usize) -> Option<usize> {
        self.labels[node]
    }

    fn top(&self) -> usize {
        *self.stack.last().expect("stack holds the root")
    }

    pub fn is_legal(&self, action: Action) -> bool {
        let buffer = self.buffer_front().is_some();
        let top = self.top();
        match action {
            Action::Shift | Action::Right(_) => buffer,
            Action::Left(_) => top != ROOT && buffer && self.heads[top].is_none(),
            Action::Reduce => top != ROOT && self.heads[top].is_some(),
        }
    }

    /// Legality of every action index.
    pub fn legal_mask(&self, n_labels: usize) -> Vec<bool> {
        (0..2 + 2 * n_labels)
            .map(|i| self.is_legal(Action::from_index(i, n_labels)))
            .collect()
    }

    pub fn is_terminal(&self) -> bool {
        !(self.is_legal(Action::Shift) || self.is_legal(Action::Reduce))
    }

    fn attach(&mut self, head: usize, dep: usize, label: usize) {
        self.heads[dep] = Some(head);
        self.labels[dep] = Some(label);
        if dep < head && self.leftmost[head].is_none_or(|c| dep < c) {
            self.leftmost[head] = Some(dep);
        }
        if dep > head && self.rightmost[head].is_none_or(|c| dep > c) {
            self.rightmost[head] = Some(dep);
        }
    }

    pub fn apply(&mut self, action: Action) -> Result<()> {
        if !self.is_legal(action) {
            return Err(Error::Contract(format!("{} is illegal in this state", action)));
        }
        let top = self.top();
        match action {
            Action::Shift => {
                self.stack.push(self.front);
                self.front += 1;
            }
            Action::Reduce => {
                self.stack.pop();
            }
            Action::Left(l) => {
                self.attach(self.front, top, l);
                self.stack.pop();
            }
            Action::Right(l) => {
                self.attach(top, self.front, l);
                self.stack.push(self.front);
                self.front += 1;
            }
        }
        Ok(())
    }

    /// Feature sources: s0, s1, b0, b1, leftmost and rightmost child of s0,
    /// leftmost child of b0, head of s0.
    pub fn slots(&self) -> [Slot; N_SLOTS] {
        let node = |id: Option<usize>| match id {
            Some(ROOT) => Slot::Root,
            Some(i) => Slot::Node(i),
            None => Slot::Null,
        };
        let s0 = self.stack.last().copied();
        let s1 = self.stack.len().checked_sub(2).map(|i| self.stack[i]);
        let b0 = self.buffer_front();
        let b1 = (self.front < self.n).then_some(self.front + 1);
        let child = |of: Option<usize>, table: &[Option<usize>]| of.and_then(|i| table[i]);
        [
            node(s0),
            node(s1),
            node(b0),
            node(b1),
            node(child(s0, &self.leftmost)),
            node(child(s0, &self.rightmost)),
            node(child(b0, &self.leftmost)),
            node(s0.and_then(|i| self.heads[i])),
        ]
    }
}

/// Whether the tree given by `heads` (head node of node `i + 1`) has no
/// crossing arcs, root arcs included.
pub fn is_projective(heads: &[usize]) -> bool {
    let arcs: Vec<(usize, usize)> = heads
        .iter()
        .enumerate()
        .map(|(i, &h)| (h.min(i + 1), h.max(i + 1)))
        .collect();
    arcs.iter().all(|&(a, b)| {
        arcs.iter()
            .all(|&(c, d)| !(a < c && c < b && b < d) && !(c < a && a < d && d < b))
    })
}

fn check_tree(heads: &[usize]) -> Result<()> {
    let n = heads.len();
    for (i, &h) in heads.iter().enumerate() {
        if h > n || h == i + 1 {
            return Err(Error::OracleUnavailable(format!("node {} has invalid head {}", i + 1, h)));
        }
    }
    for start in 1..=n {
        let mut node = start;
        for _ in 0..=n {
            if node == ROOT {
                break;
            }
            node = heads[node - 1];
        }
        if node != ROOT {
            return Err(Error::OracleUnavailable(format!("node {} lies on a cycle", start)));
        }
    }
    if !is_projective(heads) {
        return Err(Error::OracleUnavailable("tree is not projective".to_owned()));
    }
    Ok(())
}

/// Runs the static oracle on a gold tree, calling `visit` with every state
/// before its gold action is applied. Fails unless the tree is a projective
/// tree the action sequence reproduces exactly.
pub fn oracle_walk(
    heads: &[usize],
    labels: &[usize],
    mut visit: impl FnMut(&ParserState, Action),
) -> Result<ParserState> {
    check_tree(heads)?;
    let n = heads.len();
    let gold_head = |node: usize| heads[node - 1];
    let mut state = ParserState::new(n);
    while !state.is_terminal() {
        let s = state.top();
        let action = match state.buffer_front() {
            Some(b) if s != ROOT && gold_head(s) == b => Action::Left(labels[s - 1]),
            Some(b) if gold_head(b) == s => Action::Right(labels[b - 1]),
            _ if s != ROOT
                && state.heads[s].is_some()
                && state.buffer().all(|b| gold_head(b) != s) =>
            {
                Action::Reduce
            }
            Some(_) => Action::Shift,
            None => break,
        };
        visit(&state, action);
        state.apply(action)?;
    }
    let reproduced = (1..=n).all(|i| {
        state.heads[i] == Some(gold_head(i)) && state.labels[i] == Some(labels[i - 1])
    });
    if !reproduced {
        return Err(Error::OracleUnavailable(
            "oracle actions do not reproduce the tree".to_owned(),
        ));
    }
    Ok(state)
}

/// Gold action sequence of a projective tree.
pub fn oracle_actions(heads: &[usize], labels: &[usize]) -> Result<Vec<Action>> {
    let mut actions = Vec::with_capacity(2 * heads.len());
    oracle_walk(heads, labels, |_, a| actions.push(a))?;
    Ok(actions)
}
