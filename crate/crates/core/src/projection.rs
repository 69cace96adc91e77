//! Determinization of a role's erased automaton.
//!
//! States of the resulting machine are sets of global subterms, which is
//! what the validity checks inspect.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;

use crate::automata::{build_gaut, erase, project_word, split_word, AsyncEvent, LocalNfa, SyncEvent};
use crate::names::Role;
use crate::syntax::{GlobalType, NodeId};

/// A non-empty set of subterms, kept sorted.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct SubsetState(Vec<NodeId>);

impl SubsetState {
    /// Returns `None` for the empty set.
    pub fn new(members: impl IntoIterator<Item = NodeId>) -> Option<Self> {
        let set: BTreeSet<NodeId> = members.into_iter().collect();
        (!set.is_empty()).then(|| SubsetState(set.into_iter().collect()))
    }

    pub fn members(&self) -> &[NodeId] {
        &self.0
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.0.binary_search(&id).is_ok()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for SubsetState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, id) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{id}")?;
        }
        f.write_str("}")
    }
}

/// Least superset of `seed` closed under ε-edges of `nfa`.
pub fn epsilon_closure(nfa: &LocalNfa, seed: impl IntoIterator<Item = NodeId>) -> BTreeSet<NodeId> {
    let mut closed = BTreeSet::new();
    let mut stack: Vec<NodeId> = seed.into_iter().collect();
    while let Some(q) = stack.pop() {
        if !closed.insert(q) {
            continue;
        }
        for t in nfa.outgoing(q) {
            if t.label.is_none() && !closed.contains(&t.target) {
                stack.push(t.target);
            }
        }
    }
    closed
}

/// The deterministic candidate implementation of one role.
///
/// States are numbered in breadth-first discovery order with labels visited
/// in sorted order; state 0 is the initial state.
#[derive(Clone, Debug)]
pub struct SubsetMachine {
    role: Role,
    states: Vec<SubsetState>,
    index: HashMap<SubsetState, usize>,
    out: Vec<Vec<(AsyncEvent, usize)>>,
    finals: Vec<bool>,
}

impl SubsetMachine {
    pub fn role(&self) -> &Role {
        &self.role
    }

    pub fn initial(&self) -> usize {
        0
    }

    pub fn states(&self) -> &[SubsetState] {
        &self.states
    }

    pub fn state(&self, i: usize) -> &SubsetState {
        &self.states[i]
    }

    pub fn index_of(&self, s: &SubsetState) -> Option<usize> {
        self.index.get(s).copied()
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn is_final(&self, i: usize) -> bool {
        self.finals[i]
    }

    pub fn final_states(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&i| self.finals[i])
    }

    /// Outgoing transitions of state `i`, sorted by label.
    pub fn outgoing(&self, i: usize) -> &[(AsyncEvent, usize)] {
        &self.out[i]
    }

    pub fn step(&self, i: usize, event: &AsyncEvent) -> Option<usize> {
        self.out[i]
            .binary_search_by(|(e, _)| e.cmp(event))
            .ok()
            .map(|k| self.out[i][k].1)
    }

    /// Replays `word` from the initial state.
    pub fn run(&self, word: &[AsyncEvent]) -> Option<usize> {
        word.iter().try_fold(self.initial(), |s, e| self.step(s, e))
    }

    /// All transitions as `(source, label, target)` in state then label order.
    pub fn transitions(&self) -> impl Iterator<Item = (usize, &AsyncEvent, usize)> + '_ {
        self.out
            .iter()
            .enumerate()
            .flat_map(|(s, out)| out.iter().map(move |(e, t)| (s, e, *t)))
    }

    pub fn transition_count(&self) -> usize {
        self.out.iter().map(Vec::len).sum()
    }

    /// Number of states plus number of transitions.
    pub fn size(&self) -> usize {
        self.len() + self.transition_count()
    }
}

/// Subset construction for `role` over the global automaton of `g`.
pub fn subset_construction(g: &GlobalType, role: &Role) -> SubsetMachine {
    subset_construction_from(&erase(&build_gaut(g), role))
}

/// Subset construction over an already erased automaton.
pub fn subset_construction_from(nfa: &LocalNfa) -> SubsetMachine {
    let initial =
        SubsetState::new(epsilon_closure(nfa, [nfa.initial()])).expect("closure of the initial state is non-empty");
    let mut machine = SubsetMachine {
        role: nfa.role().clone(),
        states: Vec::new(),
        index: HashMap::new(),
        out: Vec::new(),
        finals: Vec::new(),
    };
    let mut queue = VecDeque::new();
    let add = |m: &mut SubsetMachine, s: SubsetState, queue: &mut VecDeque<usize>| -> usize {
        if let Some(&i) = m.index.get(&s) {
            return i;
        }
        let i = m.states.len();
        m.finals.push(s.members().iter().any(|q| nfa.finals().contains(q)));
        m.index.insert(s.clone(), i);
        m.states.push(s);
        m.out.push(Vec::new());
        queue.push_back(i);
        i
    };
    add(&mut machine, initial, &mut queue);
    while let Some(i) = queue.pop_front() {
        let mut by_label: BTreeMap<AsyncEvent, BTreeSet<NodeId>> = BTreeMap::new();
        for &q in machine.states[i].members() {
            for t in nfa.outgoing(q) {
                if let Some(label) = &t.label {
                    by_label.entry(label.clone()).or_default().insert(t.target);
                }
            }
        }
        let mut out = Vec::with_capacity(by_label.len());
        for (label, targets) in by_label {
            let next = SubsetState::new(epsilon_closure(nfa, targets)).expect("non-empty successor");
            let j = add(&mut machine, next, &mut queue);
            out.push((label, j));
        }
        machine.out[i] = out;
    }
    machine
}

/// Compares, up to `depth` events, the role's view of the global automaton's
/// run prefixes with the traces of its subset construction.
///
/// The left side is enumerated directly on the global automaton, so this is
/// an independent check of the construction.
pub fn bounded_local_language_check(g: &GlobalType, role: &Role, depth: usize) -> bool {
    let machine = subset_construction(g, role);
    global_local_words(g, role, depth) == machine_words(&machine, depth)
}

/// `{ split(trace(ρ))↓role : ρ a run prefix }` restricted to words of length ≤ depth.
pub(crate) fn global_local_words(g: &GlobalType, role: &Role, depth: usize) -> HashSet<Vec<AsyncEvent>> {
    let gaut = build_gaut(g);
    let mut seen: HashSet<(NodeId, Vec<AsyncEvent>)> = HashSet::new();
    let mut stack = vec![(gaut.initial(), Vec::new())];
    let mut words = HashSet::new();
    while let Some((q, word)) = stack.pop() {
        if !seen.insert((q, word.clone())) {
            continue;
        }
        words.insert(word.clone());
        for t in gaut.outgoing(q) {
            let mut next = word.clone();
            if let Some(e) = &t.label {
                next.extend(project_word(&split_word(std::slice::from_ref::<SyncEvent>(e)), role));
            }
            if next.len() <= depth {
                stack.push((t.target, next));
            }
        }
    }
    words
}

fn machine_words(m: &SubsetMachine, depth: usize) -> HashSet<Vec<AsyncEvent>> {
    let mut words = HashSet::new();
    let mut stack = vec![(m.initial(), Vec::new())];
    while let Some((s, word)) = stack.pop() {
        if word.len() < depth {
            for (e, t) in m.outgoing(s) {
                let mut next = word.clone();
                next.push(e.clone());
                stack.push((*t, next));
            }
        }
        words.insert(word);
    }
    words
}
