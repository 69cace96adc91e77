//! Global types: interned syntax trees, parsing, pretty-printing and the
//! well-formedness side conditions.
//!
//! Every global type is stored as an arena of hash-consed nodes, so two
//! structurally equal subterms always share one [`NodeId`]. The arena is
//! exactly the set of syntactic subterms of the root, which makes it the
//! state space of the global automaton.

mod parse;
mod pretty;
mod wf;

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use crate::automata::build_gaut;
use crate::names::{Message, RecVar, Role};

pub use parse::{parse_global_type, SyntaxError};
pub use wf::{validate_well_formedness, WellFormednessReport, WfRule, WfViolation};

/// Identifier of an interned subterm.
#[derive(Copy, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct NodeId(u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub(crate) fn from_index(index: usize) -> Self {
        NodeId(u32::try_from(index).expect("subterm arena overflow"))
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One alternative `sender -> receiver : message . cont` of a choice.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Branch {
    pub receiver: Role,
    pub message: Message,
    pub cont: NodeId,
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Node {
    End,
    /// Sender-driven choice. A single-branch choice is a plain message prefix.
    Choice {
        sender: Role,
        branches: Vec<Branch>,
    },
    Rec {
        var: RecVar,
        body: NodeId,
    },
    Var(RecVar),
}

/// An interned global type.
#[derive(Clone, Debug)]
pub struct GlobalType {
    nodes: Vec<Node>,
    root: NodeId,
}

impl GlobalType {
    pub fn parse(text: &str) -> Result<Self, SyntaxError> {
        parse_global_type(text)
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.index()]
    }

    pub fn get(&self, id: NodeId) -> Option<&Node> {
        self.nodes.get(id.index())
    }

    /// Number of distinct subterms.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len()).map(NodeId::from_index)
    }

    /// Looks up the id of the subterm equal to `node`, if present.
    pub fn lookup(&self, node: &Node) -> Option<NodeId> {
        self.nodes.iter().position(|n| n == node).map(NodeId::from_index)
    }

    /// Roles in order of first occurrence (pre-order, branch order).
    pub fn roles(&self) -> Vec<Role> {
        let mut seen = BTreeSet::new();
        let mut roles = Vec::new();
        let mut visited = HashSet::new();
        let mut stack = vec![self.root];
        while let Some(id) = stack.pop() {
            if !visited.insert(id) {
                continue;
            }
            match self.node(id) {
                Node::Choice { sender, branches } => {
                    if seen.insert(sender.clone()) {
                        roles.push(sender.clone());
                    }
                    for b in branches {
                        if seen.insert(b.receiver.clone()) {
                            roles.push(b.receiver.clone());
                        }
                    }
                    stack.extend(branches.iter().rev().map(|b| b.cont));
                }
                Node::Rec { body, .. } => stack.push(*body),
                Node::End | Node::Var(_) => {}
            }
        }
        roles
    }

    pub fn messages(&self) -> BTreeSet<Message> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Choice { branches, .. } => Some(branches.iter().map(|b| b.message.clone())),
                _ => None,
            })
            .flatten()
            .collect()
    }

    /// Maps each recursion variable to its binder node `mu t . G`.
    ///
    /// In a well-formed type every variable has exactly one binder. If a
    /// variable is bound more than once the binder with the smallest id wins.
    pub fn binders(&self) -> BTreeMap<RecVar, NodeId> {
        let mut map = BTreeMap::new();
        for id in self.ids() {
            if let Node::Rec { var, .. } = self.node(id) {
                map.entry(var.clone()).or_insert(id);
            }
        }
        map
    }

    /// Immediate subterms of a node, in branch order.
    pub fn children(&self, id: NodeId) -> Vec<NodeId> {
        match self.node(id) {
            Node::Choice { branches, .. } => branches.iter().map(|b| b.cont).collect(),
            Node::Rec { body, .. } => vec![*body],
            Node::End | Node::Var(_) => Vec::new(),
        }
    }

    /// Canonical multi-line rendering, one branch per line.
    pub fn pretty(&self) -> String {
        pretty::render(self, self.root, true)
    }

    /// Single-line rendering of one subterm.
    pub fn pretty_node(&self, id: NodeId) -> String {
        pretty::render(self, id, false)
    }

    /// Number of states plus number of transitions of the global automaton.
    pub fn measure_size(&self) -> usize {
        measure_size(self)
    }

    /// Structural equality of two subterms that may live in different arenas.
    pub fn subterm_eq(&self, a: NodeId, other: &GlobalType, b: NodeId) -> bool {
        let mut assumed = HashSet::new();
        self.eq_rec(a, other, b, &mut assumed)
    }

    fn eq_rec(&self, a: NodeId, other: &GlobalType, b: NodeId, done: &mut HashSet<(NodeId, NodeId)>) -> bool {
        if !done.insert((a, b)) {
            return true;
        }
        match (self.node(a), other.node(b)) {
            (Node::End, Node::End) => true,
            (Node::Var(x), Node::Var(y)) => x == y,
            (Node::Rec { var: x, body: bx }, Node::Rec { var: y, body: by }) => {
                x == y && self.eq_rec(*bx, other, *by, done)
            }
            (
                Node::Choice {
                    sender: sa,
                    branches: ba,
                },
                Node::Choice {
                    sender: sb,
                    branches: bb,
                },
            ) => {
                sa == sb
                    && ba.len() == bb.len()
                    && ba.iter().zip(bb).all(|(x, y)| {
                        x.receiver == y.receiver && x.message == y.message && self.eq_rec(x.cont, other, y.cont, done)
                    })
            }
            _ => false,
        }
    }
}

/// Structural equality of the whole types.
impl PartialEq for GlobalType {
    fn eq(&self, other: &Self) -> bool {
        self.subterm_eq(self.root, other, other.root)
    }
}

impl Eq for GlobalType {}

impl fmt::Display for GlobalType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.pretty())
    }
}

/// Returns |states| + |transitions| of the global automaton of `g`.
pub fn measure_size(g: &GlobalType) -> usize {
    let gaut = build_gaut(g);
    gaut.states().len() + gaut.transitions().len()
}

/// Hash-consing builder for global types.
///
/// Nodes must be created children-first; equal nodes are shared.
#[derive(Default, Debug)]
pub struct GlobalTypeBuilder {
    nodes: Vec<Node>,
    index: HashMap<Node, NodeId>,
}

impl GlobalTypeBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, node: Node) -> NodeId {
        if let Some(&id) = self.index.get(&node) {
            return id;
        }
        if let Node::Choice { branches, .. } = &node {
            assert!(!branches.is_empty(), "a choice needs at least one branch");
        }
        let id = NodeId::from_index(self.nodes.len());
        self.nodes.push(node.clone());
        self.index.insert(node, id);
        id
    }

    pub fn end(&mut self) -> NodeId {
        self.intern(Node::End)
    }

    pub fn var(&mut self, var: impl Into<RecVar>) -> NodeId {
        self.intern(Node::Var(var.into()))
    }

    pub fn rec(&mut self, var: impl Into<RecVar>, body: NodeId) -> NodeId {
        self.intern(Node::Rec { var: var.into(), body })
    }

    /// `sender -> receiver : message . cont`
    pub fn message(
        &mut self,
        sender: impl Into<Role>,
        receiver: impl Into<Role>,
        message: impl Into<Message>,
        cont: NodeId,
    ) -> NodeId {
        self.choice(sender, vec![(receiver.into(), message.into(), cont)])
    }

    pub fn choice(&mut self, sender: impl Into<Role>, branches: Vec<(Role, Message, NodeId)>) -> NodeId {
        let branches = branches
            .into_iter()
            .map(|(receiver, message, cont)| Branch {
                receiver,
                message,
                cont,
            })
            .collect();
        self.intern(Node::Choice {
            sender: sender.into(),
            branches,
        })
    }

    /// Finishes the type rooted at `root`, dropping nodes it does not reach.
    /// Relative id order of the kept nodes is preserved.
    pub fn build(self, root: NodeId) -> GlobalType {
        let mut reachable = vec![false; self.nodes.len()];
        let mut stack = vec![root];
        while let Some(id) = stack.pop() {
            if std::mem::replace(&mut reachable[id.index()], true) {
                continue;
            }
            match &self.nodes[id.index()] {
                Node::Choice { branches, .. } => stack.extend(branches.iter().map(|b| b.cont)),
                Node::Rec { body, .. } => stack.push(*body),
                Node::End | Node::Var(_) => {}
            }
        }
        let mut remap = vec![None; self.nodes.len()];
        let mut next = 0usize;
        for (i, keep) in reachable.iter().enumerate() {
            if *keep {
                remap[i] = Some(NodeId::from_index(next));
                next += 1;
            }
        }
        let map = |id: NodeId| remap[id.index()].expect("child of a reachable node is reachable");
        let nodes = self
            .nodes
            .into_iter()
            .zip(reachable)
            .filter(|(_, keep)| *keep)
            .map(|(node, _)| match node {
                Node::Choice { sender, branches } => Node::Choice {
                    sender,
                    branches: branches
                        .into_iter()
                        .map(|b| Branch { cont: map(b.cont), ..b })
                        .collect(),
                },
                Node::Rec { var, body } => Node::Rec { var, body: map(body) },
                other => other,
            })
            .collect();
        GlobalType { nodes, root: map(root) }
    }
}
