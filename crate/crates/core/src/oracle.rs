//! Brute-force checks that do not share code with the decision procedure.
//!
//! Everything here works directly on the global automaton or on explicit
//! event sequences. The validity module uses these functions to validate
//! counterexamples, and the test suites use them to cross-check verdicts.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::automata::{build_gaut, split_word, AsyncEvent, SyncAutomaton, SyncEvent, SyncTransition};
use crate::csm::{for_each_trace_class, Csm, CsmConfiguration};
use crate::names::{Message, Role};
use crate::syntax::{GlobalType, GlobalTypeBuilder, NodeId};

pub const DEFAULT_SWAP_BUDGET: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("swap search gave up after {expansions} expansions")]
pub struct BudgetExhausted {
    pub expansions: usize,
}

fn blocks_swap(prefix: &[AsyncEvent], a: &AsyncEvent, b: &AsyncEvent) -> bool {
    if a.active == b.active {
        return true;
    }
    if a.direction == b.direction {
        return false;
    }
    let (send, recv) = if a.is_send() { (a, b) } else { (b, a) };
    if send.active == recv.peer && send.peer == recv.active {
        // same channel: only while a message is already in flight
        let sent = prefix
            .iter()
            .filter(|e| e.is_send() && e.active == send.active && e.peer == send.peer)
            .count();
        let received = prefix
            .iter()
            .filter(|e| e.is_receive() && e.active == recv.active && e.peer == recv.peer)
            .count();
        return sent <= received;
    }
    false
}

/// Decides `u ~ v` for finite words by searching over adjacent swaps of
/// independent events.
///
/// Words of different lengths or with different event multisets are never
/// related. Returns [`BudgetExhausted`] when more than `budget` words were
/// expanded without reaching `v`.
pub fn indistinguishable_finite(u: &[AsyncEvent], v: &[AsyncEvent], budget: usize) -> Result<bool, BudgetExhausted> {
    if u.len() != v.len() {
        return Ok(false);
    }
    let (mut su, mut sv) = (u.to_vec(), v.to_vec());
    su.sort();
    sv.sort();
    if su != sv {
        return Ok(false);
    }
    let mut seen: HashSet<Vec<AsyncEvent>> = HashSet::from([u.to_vec()]);
    let mut queue = VecDeque::from([u.to_vec()]);
    let mut expansions = 0;
    while let Some(w) = queue.pop_front() {
        if w == v {
            return Ok(true);
        }
        if expansions >= budget {
            return Err(BudgetExhausted { expansions });
        }
        expansions += 1;
        for i in 0..w.len().saturating_sub(1) {
            if blocks_swap(&w[..i], &w[i], &w[i + 1]) {
                continue;
            }
            let mut next = w.clone();
            next.swap(i, i + 1);
            if seen.insert(next.clone()) {
                queue.push_back(next);
            }
        }
    }
    Ok(false)
}

/// A global state and the number of events each role has consumed.
type ProductState = (NodeId, Vec<usize>);

/// A path of the global automaton starting at its initial state.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct RunPrefix {
    pub transitions: Vec<SyncTransition>,
}

impl RunPrefix {
    pub fn trace(&self) -> Vec<SyncEvent> {
        self.transitions.iter().filter_map(|t| t.label.clone()).collect()
    }

    /// Last state of the run, given the start state.
    pub fn end(&self, start: NodeId) -> NodeId {
        self.transitions.last().map_or(start, |t| t.target)
    }
}

/// A word together with each role's view of it.
#[derive(Clone, Debug)]
pub struct IntersectionQuery {
    word: Vec<AsyncEvent>,
    targets: BTreeMap<Role, Vec<AsyncEvent>>,
}

impl IntersectionQuery {
    pub fn new(word: &[AsyncEvent]) -> Self {
        let mut targets: BTreeMap<Role, Vec<AsyncEvent>> = BTreeMap::new();
        for e in word {
            targets.entry(e.active.clone()).or_default().push(e.clone());
        }
        IntersectionQuery {
            word: word.to_vec(),
            targets,
        }
    }

    pub fn word(&self) -> &[AsyncEvent] {
        &self.word
    }

    pub fn targets(&self) -> &BTreeMap<Role, Vec<AsyncEvent>> {
        &self.targets
    }
}

/// Reusable run-intersection search for one global type.
pub struct IntersectionOracle {
    gaut: SyncAutomaton,
    roles: HashMap<Role, usize>,
}

impl IntersectionOracle {
    pub fn new(g: &GlobalType) -> Self {
        IntersectionOracle {
            gaut: build_gaut(g),
            roles: g.roles().into_iter().enumerate().map(|(i, r)| (r, i)).collect(),
        }
    }

    /// A run prefix whose split trace extends every role's view of `word`,
    /// or `None` if no maximal run is consistent with all views at once.
    pub fn witness(&self, word: &[AsyncEvent]) -> Option<RunPrefix> {
        self.witness_for(&IntersectionQuery::new(word))
    }

    pub fn witness_for(&self, query: &IntersectionQuery) -> Option<RunPrefix> {
        let mut targets: Vec<&[AsyncEvent]> = vec![&[]; self.roles.len()];
        for (role, view) in &query.targets {
            match self.roles.get(role) {
                Some(&i) => targets[i] = view,
                None => return None,
            }
        }
        let done = |pos: &[usize]| pos.iter().zip(&targets).all(|(p, t)| *p == t.len());
        let start = (self.gaut.initial(), vec![0usize; targets.len()]);
        if done(&start.1) {
            return Some(RunPrefix::default());
        }
        let mut parent: HashMap<ProductState, Option<(ProductState, SyncTransition)>> =
            HashMap::from([(start.clone(), None)]);
        let mut queue = VecDeque::from([start]);
        while let Some(key) = queue.pop_front() {
            let (q, pos) = &key;
            for t in self.gaut.outgoing(*q) {
                let mut next = pos.clone();
                if let Some(e) = &t.label {
                    let s = self.roles[&e.sender];
                    let r = self.roles[&e.receiver];
                    if !advance(&mut next[s], targets[s], &e.send()) || !advance(&mut next[r], targets[r], &e.receive())
                    {
                        continue;
                    }
                }
                let key_next = (t.target, next);
                if parent.contains_key(&key_next) {
                    continue;
                }
                parent.insert(key_next.clone(), Some((key.clone(), t.clone())));
                if done(&key_next.1) {
                    let mut transitions = Vec::new();
                    let mut at = key_next;
                    while let Some(Some((prev, t))) = parent.get(&at) {
                        transitions.push(t.clone());
                        at = prev.clone();
                    }
                    transitions.reverse();
                    return Some(RunPrefix { transitions });
                }
                queue.push_back(key_next);
            }
        }
        None
    }
}

fn advance(pos: &mut usize, target: &[AsyncEvent], event: &AsyncEvent) -> bool {
    match target.get(*pos) {
        None => true,
        Some(expected) if expected == event => {
            *pos += 1;
            true
        }
        Some(_) => false,
    }
}

/// One-shot form of [`IntersectionOracle::witness`].
pub fn intersection_witness(g: &GlobalType, word: &[AsyncEvent]) -> Option<RunPrefix> {
    IntersectionOracle::new(g).witness(word)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Obligation {
    /// A split run prefix of the global type does not replay in the CSM.
    GlobalTraceReplay,
    /// A CSM trace has no consistent global run.
    IntersectionNonEmpty,
    /// The CSM reaches a deadlock.
    DeadlockFreedom,
}

impl fmt::Display for Obligation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Obligation::GlobalTraceReplay => "global trace replay",
            Obligation::IntersectionNonEmpty => "run intersection non-empty",
            Obligation::DeadlockFreedom => "deadlock freedom",
        })
    }
}

#[derive(Clone, Debug)]
pub struct FidelityFailure {
    pub obligation: Obligation,
    pub trace: Vec<AsyncEvent>,
}

#[derive(Clone, Debug, Default)]
pub struct FidelityReport {
    pub failure: Option<FidelityFailure>,
    /// Distinct (global state, CSM configuration) pairs replayed for the first obligation.
    pub replayed_prefixes: usize,
    /// CSM traces, one per distinct combination of role views, checked for the second.
    pub checked_traces: usize,
    /// Configurations visited for the third.
    pub explored_configurations: usize,
    pub frontier_cut: bool,
}

impl FidelityReport {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }
}

pub const DEFAULT_CHANNEL_BOUND: usize = 4;

/// Bounded protocol fidelity and deadlock freedom with channel bound 4.
pub fn bounded_fidelity_check(g: &GlobalType, csm: &Csm, depth: usize) -> FidelityReport {
    bounded_fidelity_check_with(g, csm, depth, DEFAULT_CHANNEL_BOUND)
}

/// Checks, up to `depth` events, that every split run prefix of `g` is a
/// CSM trace, that every CSM trace has a consistent global run, and that
/// the CSM does not deadlock. Stops at the first failure.
pub fn bounded_fidelity_check_with(g: &GlobalType, csm: &Csm, depth: usize, channel_bound: usize) -> FidelityReport {
    let mut report = FidelityReport::default();

    // global traces replay, including the half-split prefixes
    let gaut = build_gaut(g);
    let mut best: HashMap<(NodeId, CsmConfiguration), usize> = HashMap::new();
    let mut stack = vec![(gaut.initial(), csm.initial(), Vec::<AsyncEvent>::new())];
    while let Some((q, cfg, trace)) = stack.pop() {
        match best.get(&(q, cfg.clone())) {
            Some(&len) if len <= trace.len() => continue,
            _ => {
                best.insert((q, cfg.clone()), trace.len());
            }
        }
        for t in gaut.outgoing(q) {
            let Some(e) = &t.label else {
                stack.push((t.target, cfg.clone(), trace.clone()));
                continue;
            };
            if trace.len() >= depth {
                continue;
            }
            let mut next = cfg.clone();
            let mut extended = trace.clone();
            for x in split_word(std::slice::from_ref(e)) {
                extended.push(x.clone());
                if extended.len() > depth {
                    break;
                }
                match csm.step(&next, &x) {
                    Ok(c) => next = c,
                    Err(_) => {
                        report.failure = Some(FidelityFailure {
                            obligation: Obligation::GlobalTraceReplay,
                            trace: extended,
                        });
                        report.replayed_prefixes = best.len();
                        return report;
                    }
                }
            }
            if extended.len() <= depth {
                stack.push((t.target, next, extended));
            }
        }
    }
    report.replayed_prefixes = best.len();

    // every CSM trace has a consistent global run
    let oracle = IntersectionOracle::new(g);
    let mut failure = None;
    let mut checked = 0;
    for_each_trace_class(csm, channel_bound, depth, |trace| {
        checked += 1;
        if oracle.witness(trace).is_none() {
            failure = Some(trace.to_vec());
            return false;
        }
        true
    });
    report.checked_traces = checked;
    if let Some(trace) = failure {
        report.failure = Some(FidelityFailure {
            obligation: Obligation::IntersectionNonEmpty,
            trace,
        });
        return report;
    }

    let exploration = csm.explore(channel_bound, depth);
    report.explored_configurations = exploration.visited;
    report.frontier_cut = exploration.frontier_cut;
    if let Some(d) = exploration.deadlocks.into_iter().next() {
        report.failure = Some(FidelityFailure {
            obligation: Obligation::DeadlockFreedom,
            trace: d.trace,
        });
    }
    report
}

/// The family whose receiver `q` must remember the last `k` letters sent by
/// `p`, so that its subset construction has at least `2^k` states.
pub fn generate_gk(k: usize) -> GlobalType {
    assert!(k >= 1, "the family starts at k = 1");
    let mut b = GlobalTypeBuilder::new();
    let end = b.end();
    let tail = |b: &mut GlobalTypeBuilder, letter: &str| {
        let back = b.message("q", "p", letter, end);
        b.message("p", "q", "d", back)
    };
    let letters = |b: &mut GlobalTypeBuilder, cont_a: NodeId, cont_b: NodeId| {
        b.choice(
            "p",
            vec![
                (Role::new("q"), Message::new("a"), cont_a),
                (Role::new("q"), Message::new("b"), cont_b),
            ],
        )
    };
    let mut chain_a = tail(&mut b, "a");
    let mut chain_b = tail(&mut b, "b");
    for _ in 1..k {
        chain_a = letters(&mut b, chain_a, chain_a);
        chain_b = letters(&mut b, chain_b, chain_b);
    }
    let t = b.var("t");
    let short = letters(&mut b, t, t);
    let long = letters(&mut b, chain_a, chain_b);
    let body = b.choice(
        "p",
        vec![
            (Role::new("r"), Message::new("s"), short),
            (Role::new("r"), Message::new("l"), long),
        ],
    );
    let root = b.rec("t", body);
    b.build(root)
}

/// Parameters for [`random_global_type`].
#[derive(Clone, Debug)]
pub struct RandomTypeConfig {
    pub roles: Vec<Role>,
    pub messages: Vec<Message>,
    /// Upper bound on [`GlobalType::measure_size`].
    pub max_size: usize,
    pub max_branches: usize,
    pub max_depth: usize,
}

impl Default for RandomTypeConfig {
    fn default() -> Self {
        RandomTypeConfig {
            roles: ["p", "q", "r", "s"].map(Role::new).to_vec(),
            messages: ["a", "b", "c"].map(Message::new).to_vec(),
            max_size: 30,
            max_branches: 3,
            max_depth: 6,
        }
    }
}

/// Draws a well-formed global type, retrying until it fits `max_size`.
pub fn random_global_type<R: Rng + ?Sized>(rng: &mut R, config: &RandomTypeConfig) -> GlobalType {
    assert!(config.roles.len() >= 2 && !config.messages.is_empty());
    loop {
        let mut gen = Generator {
            rng: &mut *rng,
            config,
            builder: GlobalTypeBuilder::new(),
            fresh: 0,
        };
        let root = gen.node(config.max_depth, &mut Vec::new(), &[]);
        let g = gen.builder.build(root);
        if g.measure_size() <= config.max_size {
            return g;
        }
    }
}

struct Generator<'a, R: Rng + ?Sized> {
    rng: &'a mut R,
    config: &'a RandomTypeConfig,
    builder: GlobalTypeBuilder,
    fresh: usize,
}

impl<R: Rng + ?Sized> Generator<'_, R> {
    /// `bound` lists variables in scope; `unguarded` those with no message
    /// since their binder.
    fn node(&mut self, depth: usize, bound: &mut Vec<String>, unguarded: &[String]) -> NodeId {
        let usable: Vec<String> = bound.iter().filter(|v| !unguarded.contains(v)).cloned().collect();
        let pick = if depth == 0 {
            self.rng.gen_range(0..2)
        } else {
            self.rng.gen_range(0..10)
        };
        match pick {
            0 => self.builder.end(),
            1 if !usable.is_empty() => {
                let v = usable.choose(self.rng).expect("non-empty").clone();
                self.builder.var(v.as_str())
            }
            1 => self.builder.end(),
            2 | 3 if depth > 0 => {
                let var = format!("t{}", self.fresh);
                self.fresh += 1;
                bound.push(var.clone());
                let mut inner = unguarded.to_vec();
                inner.push(var.clone());
                let body = self.node(depth - 1, bound, &inner);
                bound.pop();
                self.builder.rec(var.as_str(), body)
            }
            _ => {
                let roles = &self.config.roles;
                let sender = roles.choose(self.rng).expect("roles").clone();
                let receivers: Vec<&Role> = roles.iter().filter(|r| **r != sender).collect();
                let mut pairs: Vec<(Role, Message)> = receivers
                    .iter()
                    .flat_map(|r| self.config.messages.iter().map(move |m| ((*r).clone(), m.clone())))
                    .collect();
                pairs.shuffle(self.rng);
                let n = self.rng.gen_range(1..=self.config.max_branches.min(pairs.len()));
                let mut branches = Vec::with_capacity(n);
                for (receiver, message) in pairs.into_iter().take(n) {
                    let cont = self.node(depth.saturating_sub(1), bound, &[]);
                    branches.push((receiver, message, cont));
                }
                self.builder.choice(sender, branches)
            }
        }
    }
}
