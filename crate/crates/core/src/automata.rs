//! Event alphabets, the global automaton of a global type, and projection by
//! erasure onto a single role.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::names::{Message, Role};
use crate::syntax::{GlobalType, Node, NodeId};

/// `sender -> receiver : message`, an atomic exchange.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct SyncEvent {
    pub sender: Role,
    pub receiver: Role,
    pub message: Message,
}

impl SyncEvent {
    pub fn new(sender: impl Into<Role>, receiver: impl Into<Role>, message: impl Into<Message>) -> Self {
        SyncEvent {
            sender: sender.into(),
            receiver: receiver.into(),
            message: message.into(),
        }
    }

    pub fn send(&self) -> AsyncEvent {
        AsyncEvent::send(self.sender.clone(), self.receiver.clone(), self.message.clone())
    }

    pub fn receive(&self) -> AsyncEvent {
        AsyncEvent::receive(self.receiver.clone(), self.sender.clone(), self.message.clone())
    }

    /// The local view of this exchange for `role`, or `None` if `role` is
    /// not involved.
    pub fn project(&self, role: &Role) -> Option<AsyncEvent> {
        if &self.sender == role {
            Some(self.send())
        } else if &self.receiver == role {
            Some(self.receive())
        } else {
            None
        }
    }
}

impl fmt::Display for SyncEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}:{}", self.sender, self.receiver, self.message)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Direction {
    Send,
    Receive,
}

/// A send `active > peer ! message` or a receive `active < peer ? message`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct AsyncEvent {
    pub direction: Direction,
    pub active: Role,
    pub peer: Role,
    pub message: Message,
}

impl AsyncEvent {
    pub fn send(active: impl Into<Role>, peer: impl Into<Role>, message: impl Into<Message>) -> Self {
        AsyncEvent {
            direction: Direction::Send,
            active: active.into(),
            peer: peer.into(),
            message: message.into(),
        }
    }

    pub fn receive(active: impl Into<Role>, peer: impl Into<Role>, message: impl Into<Message>) -> Self {
        AsyncEvent {
            direction: Direction::Receive,
            active: active.into(),
            peer: peer.into(),
            message: message.into(),
        }
    }

    pub fn is_send(&self) -> bool {
        self.direction == Direction::Send
    }

    pub fn is_receive(&self) -> bool {
        self.direction == Direction::Receive
    }

    /// The ordered channel `(sender, receiver)` this event touches.
    pub fn channel(&self) -> (&Role, &Role) {
        match self.direction {
            Direction::Send => (&self.active, &self.peer),
            Direction::Receive => (&self.peer, &self.active),
        }
    }
}

impl fmt::Display for AsyncEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.direction {
            Direction::Send => write!(f, "{}>{}!{}", self.active, self.peer, self.message),
            Direction::Receive => write!(f, "{}<{}?{}", self.active, self.peer, self.message),
        }
    }
}

/// `p -> q : m` becomes `p>q!m . q<p?m`.
pub fn split_word(word: &[SyncEvent]) -> Vec<AsyncEvent> {
    word.iter().flat_map(|e| [e.send(), e.receive()]).collect()
}

/// Keeps the events in which `role` is active.
pub fn project_word(word: &[AsyncEvent], role: &Role) -> Vec<AsyncEvent> {
    word.iter().filter(|e| &e.active == role).cloned().collect()
}

/// Messages sent on channel `(sender, receiver)`, in order.
pub fn sent_messages(word: &[AsyncEvent], sender: &Role, receiver: &Role) -> Vec<Message> {
    word.iter()
        .filter(|e| e.is_send() && &e.active == sender && &e.peer == receiver)
        .map(|e| e.message.clone())
        .collect()
}

/// Messages received on channel `(sender, receiver)`, in order.
pub fn received_messages(word: &[AsyncEvent], sender: &Role, receiver: &Role) -> Vec<Message> {
    word.iter()
        .filter(|e| e.is_receive() && &e.active == receiver && &e.peer == sender)
        .map(|e| e.message.clone())
        .collect()
}

/// Renders a trace as `p>q!m.q<p?m`.
pub fn format_trace(trace: &[AsyncEvent]) -> String {
    trace.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(".")
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("bad trace token `{token}` at position {index}")]
pub struct TraceParseError {
    pub index: usize,
    pub token: String,
}

/// Parses the `p>q!m.q<p?m` token format. The empty string is the empty trace.
pub fn parse_trace(text: &str) -> Result<Vec<AsyncEvent>, TraceParseError> {
    let text = text.trim();
    if text.is_empty() {
        return Ok(Vec::new());
    }
    text.split('.')
        .enumerate()
        .map(|(index, raw)| {
            let token = raw.trim();
            let bad = || TraceParseError {
                index,
                token: token.to_string(),
            };
            let ident = |s: &str| {
                let s = s.trim();
                (!s.is_empty() && s.chars().all(|c| c.is_alphanumeric() || c == '_' || c == '\''))
                    .then(|| s.to_string())
            };
            let (direction, active, rest) = if let Some((a, rest)) = token.split_once('>') {
                (Direction::Send, a, rest)
            } else if let Some((a, rest)) = token.split_once('<') {
                (Direction::Receive, a, rest)
            } else {
                return Err(bad());
            };
            let sep = if direction == Direction::Send { '!' } else { '?' };
            let (peer, message) = rest.split_once(sep).ok_or_else(bad)?;
            let (active, peer, message) = (
                ident(active).ok_or_else(bad)?,
                ident(peer).ok_or_else(bad)?,
                ident(message).ok_or_else(bad)?,
            );
            if active == peer {
                return Err(bad());
            }
            Ok(AsyncEvent {
                direction,
                active: Role::new(active),
                peer: Role::new(peer),
                message: Message::new(message),
            })
        })
        .collect()
}

/// A transition of the global automaton; `label == None` is an ε-move.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct SyncTransition {
    pub source: NodeId,
    pub label: Option<SyncEvent>,
    pub target: NodeId,
}

/// The global automaton: states are the subterms of the global type.
///
/// A choice has one edge per branch, `mu t . G` has an ε-edge to `G`, and
/// `t` has an ε-edge back to its binder. The only final state is `0`.
#[derive(Clone, Debug)]
pub struct SyncAutomaton {
    states: BTreeSet<NodeId>,
    transitions: Vec<SyncTransition>,
    outgoing: Vec<Vec<usize>>,
    initial: NodeId,
    finals: BTreeSet<NodeId>,
}

impl SyncAutomaton {
    pub fn states(&self) -> &BTreeSet<NodeId> {
        &self.states
    }

    /// All transitions, sorted by (source, label, target).
    pub fn transitions(&self) -> &[SyncTransition] {
        &self.transitions
    }

    pub fn initial(&self) -> NodeId {
        self.initial
    }

    pub fn finals(&self) -> &BTreeSet<NodeId> {
        &self.finals
    }

    pub fn is_final(&self, q: NodeId) -> bool {
        self.finals.contains(&q)
    }

    pub fn outgoing(&self, q: NodeId) -> impl Iterator<Item = &SyncTransition> + '_ {
        self.outgoing
            .get(q.index())
            .into_iter()
            .flatten()
            .map(|&i| &self.transitions[i])
    }
}

/// Builds the global automaton. States are exactly the subterms of `g`;
/// the term `0` is a state whenever it occurs in `g`.
pub fn build_gaut(g: &GlobalType) -> SyncAutomaton {
    let binders = g.binders();
    let mut transitions = Vec::new();
    let mut finals = BTreeSet::new();
    for id in g.ids() {
        match g.node(id) {
            Node::End => {
                finals.insert(id);
            }
            Node::Choice { sender, branches } => {
                for b in branches {
                    transitions.push(SyncTransition {
                        source: id,
                        label: Some(SyncEvent {
                            sender: sender.clone(),
                            receiver: b.receiver.clone(),
                            message: b.message.clone(),
                        }),
                        target: b.cont,
                    });
                }
            }
            Node::Rec { body, .. } => transitions.push(SyncTransition {
                source: id,
                label: None,
                target: *body,
            }),
            Node::Var(v) => {
                if let Some(&binder) = binders.get(v) {
                    transitions.push(SyncTransition {
                        source: id,
                        label: None,
                        target: binder,
                    });
                }
            }
        }
    }
    transitions.sort();
    transitions.dedup();
    let mut outgoing = vec![Vec::new(); g.len()];
    for (i, t) in transitions.iter().enumerate() {
        outgoing[t.source.index()].push(i);
    }
    SyncAutomaton {
        states: g.ids().collect(),
        transitions,
        outgoing,
        initial: g.root(),
        finals,
    }
}

/// A transition of an erased automaton; `label == None` is an ε-move.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct LocalTransition {
    pub source: NodeId,
    pub label: Option<AsyncEvent>,
    pub target: NodeId,
}

/// The global automaton relabelled with one role's view of each exchange.
#[derive(Clone, Debug)]
pub struct LocalNfa {
    role: Role,
    states: BTreeSet<NodeId>,
    transitions: Vec<LocalTransition>,
    outgoing: Vec<Vec<usize>>,
    initial: NodeId,
    finals: BTreeSet<NodeId>,
}

impl LocalNfa {
    pub fn role(&self) -> &Role {
        &self.role
    }

    pub fn states(&self) -> &BTreeSet<NodeId> {
        &self.states
    }

    pub fn transitions(&self) -> &[LocalTransition] {
        &self.transitions
    }

    pub fn initial(&self) -> NodeId {
        self.initial
    }

    pub fn finals(&self) -> &BTreeSet<NodeId> {
        &self.finals
    }

    pub fn outgoing(&self, q: NodeId) -> impl Iterator<Item = &LocalTransition> + '_ {
        self.outgoing
            .get(q.index())
            .into_iter()
            .flatten()
            .map(|&i| &self.transitions[i])
    }
}

/// Projection by erasure: every `q --a--> q'` becomes `q --split(a)|p--> q'`,
/// which is ε when `p` takes no part in `a`.
pub fn erase(gaut: &SyncAutomaton, role: &Role) -> LocalNfa {
    let mut transitions: Vec<LocalTransition> = gaut
        .transitions()
        .iter()
        .map(|t| LocalTransition {
            source: t.source,
            label: t.label.as_ref().and_then(|e| e.project(role)),
            target: t.target,
        })
        .collect();
    transitions.sort();
    transitions.dedup();
    let mut outgoing = vec![Vec::new(); gaut.outgoing.len()];
    for (i, t) in transitions.iter().enumerate() {
        outgoing[t.source.index()].push(i);
    }
    LocalNfa {
        role: role.clone(),
        states: gaut.states.clone(),
        transitions,
        outgoing,
        initial: gaut.initial,
        finals: gaut.finals.clone(),
    }
}
