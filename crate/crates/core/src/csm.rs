//! Communicating state machines: one deterministic machine per role,
//! connected by unbounded FIFO channels between every ordered pair of
//! distinct roles.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::automata::AsyncEvent;
use crate::names::{Message, Role};
use crate::projection::{subset_construction, SubsetMachine};
use crate::syntax::GlobalType;

#[derive(Clone, Debug)]
pub struct Csm {
    machines: Vec<SubsetMachine>,
    role_index: HashMap<Role, usize>,
    channel_index: HashMap<(Role, Role), usize>,
    channels: Vec<(Role, Role)>,
}

/// Local states plus channel contents. Channels are indexed as in
/// [`Csm::channels`].
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct CsmConfiguration {
    pub states: Vec<usize>,
    pub channels: Vec<VecDeque<Message>>,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum NotEnabledReason {
    NoLocalTransition,
    EmptyChannel,
    WrongHead,
}

impl fmt::Display for NotEnabledReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NotEnabledReason::NoLocalTransition => "no local transition",
            NotEnabledReason::EmptyChannel => "channel is empty",
            NotEnabledReason::WrongHead => "another message is at the head of the channel",
        })
    }
}

#[derive(Clone, PartialEq, Eq, Debug, Error)]
#[error("`{event}` is not enabled: {reason}")]
pub struct NotEnabled {
    pub event: AsyncEvent,
    pub reason: NotEnabledReason,
}

#[derive(Clone, PartialEq, Eq, Debug, Error)]
#[error("event {index} of the trace: {error}")]
pub struct ReplayError {
    pub index: usize,
    pub error: NotEnabled,
}

impl Csm {
    /// Builds a CSM from one machine per role. Later machines for an already
    /// present role are ignored.
    pub fn new(machines: Vec<SubsetMachine>) -> Self {
        let mut kept: Vec<SubsetMachine> = Vec::new();
        let mut role_index = HashMap::new();
        for m in machines {
            if !role_index.contains_key(m.role()) {
                role_index.insert(m.role().clone(), kept.len());
                kept.push(m);
            }
        }
        let mut channels = Vec::new();
        let mut channel_index = HashMap::new();
        for a in &kept {
            for b in &kept {
                if a.role() != b.role() {
                    let key = (a.role().clone(), b.role().clone());
                    channel_index.insert(key.clone(), channels.len());
                    channels.push(key);
                }
            }
        }
        Csm {
            machines: kept,
            role_index,
            channel_index,
            channels,
        }
    }

    /// The CSM of the subset constructions of every role of `g`.
    pub fn from_global_type(g: &GlobalType) -> Self {
        Csm::new(g.roles().iter().map(|r| subset_construction(g, r)).collect())
    }

    pub fn roles(&self) -> impl Iterator<Item = &Role> + '_ {
        self.machines.iter().map(|m| m.role())
    }

    pub fn machines(&self) -> &[SubsetMachine] {
        &self.machines
    }

    pub fn machine(&self, role: &Role) -> Option<&SubsetMachine> {
        self.role_index.get(role).map(|&i| &self.machines[i])
    }

    /// Ordered pairs `(sender, receiver)` of distinct roles.
    pub fn channels(&self) -> &[(Role, Role)] {
        &self.channels
    }

    pub fn channel(&self, sender: &Role, receiver: &Role) -> Option<usize> {
        self.channel_index.get(&(sender.clone(), receiver.clone())).copied()
    }

    pub fn initial(&self) -> CsmConfiguration {
        CsmConfiguration {
            states: self.machines.iter().map(|m| m.initial()).collect(),
            channels: vec![VecDeque::new(); self.channels.len()],
        }
    }

    /// All machines final and all channels empty.
    pub fn is_final(&self, cfg: &CsmConfiguration) -> bool {
        cfg.channels.iter().all(VecDeque::is_empty)
            && self.machines.iter().zip(&cfg.states).all(|(m, &s)| m.is_final(s))
    }

    pub fn step(&self, cfg: &CsmConfiguration, event: &AsyncEvent) -> Result<CsmConfiguration, NotEnabled> {
        let fail = |reason| NotEnabled {
            event: event.clone(),
            reason,
        };
        let &r = self
            .role_index
            .get(&event.active)
            .ok_or(fail(NotEnabledReason::NoLocalTransition))?;
        let target = self.machines[r]
            .step(cfg.states[r], event)
            .ok_or(fail(NotEnabledReason::NoLocalTransition))?;
        let (sender, receiver) = event.channel();
        let c = self
            .channel(sender, receiver)
            .ok_or(fail(NotEnabledReason::NoLocalTransition))?;
        let mut next = cfg.clone();
        if event.is_send() {
            next.channels[c].push_back(event.message.clone());
        } else {
            match next.channels[c].front() {
                None => return Err(fail(NotEnabledReason::EmptyChannel)),
                Some(m) if *m != event.message => return Err(fail(NotEnabledReason::WrongHead)),
                Some(_) => {
                    next.channels[c].pop_front();
                }
            }
        }
        next.states[r] = target;
        Ok(next)
    }

    /// Enabled events with their successors, by role then label order.
    pub fn enabled(&self, cfg: &CsmConfiguration) -> Vec<(AsyncEvent, CsmConfiguration)> {
        let mut out = Vec::new();
        for (r, m) in self.machines.iter().enumerate() {
            for (event, _) in m.outgoing(cfg.states[r]) {
                if let Ok(next) = self.step(cfg, event) {
                    out.push((event.clone(), next));
                }
            }
        }
        out
    }

    pub fn replay(&self, trace: &[AsyncEvent]) -> Result<CsmConfiguration, ReplayError> {
        let mut cfg = self.initial();
        for (index, event) in trace.iter().enumerate() {
            cfg = self.step(&cfg, event).map_err(|error| ReplayError { index, error })?;
        }
        Ok(cfg)
    }

    pub fn is_deadlock(&self, cfg: &CsmConfiguration) -> bool {
        !self.is_final(cfg) && self.enabled(cfg).is_empty()
    }

    pub fn explore(&self, channel_bound: usize, depth: usize) -> ExplorationReport {
        self.explore_with(&ExploreOptions {
            channel_bound,
            depth,
            retain_traces: false,
        })
    }

    /// Breadth-first search over reachable configurations.
    ///
    /// Sends that would push a channel beyond `channel_bound`, and successors
    /// beyond `depth` events, are not explored; either sets `frontier_cut`.
    /// A pruned send still counts as enabled when looking for deadlocks.
    pub fn explore_with(&self, options: &ExploreOptions) -> ExplorationReport {
        let initial = self.initial();
        let mut index: HashMap<CsmConfiguration, usize> = HashMap::new();
        let mut nodes: Vec<SearchNode> = Vec::new();
        index.insert(initial.clone(), 0);
        nodes.push((initial, None, 0));
        let mut report = ExplorationReport::default();
        let mut at = 0;
        while at < nodes.len() {
            let (cfg, _, d) = nodes[at].clone();
            let enabled = self.enabled(&cfg);
            if enabled.is_empty() && !self.is_final(&cfg) {
                report.deadlocks.push(Deadlock {
                    trace: trace_to(&nodes, at),
                    configuration: cfg.clone(),
                });
            }
            for (event, next) in enabled {
                if next.channels.iter().any(|c| c.len() > options.channel_bound) || d >= options.depth {
                    report.frontier_cut = true;
                    continue;
                }
                if !index.contains_key(&next) {
                    index.insert(next.clone(), nodes.len());
                    nodes.push((next, Some((at, event)), d + 1));
                }
            }
            at += 1;
        }
        report.visited = nodes.len();
        if options.retain_traces {
            report.trace_prefixes = Some((0..nodes.len()).map(|i| trace_to(&nodes, i)).collect());
        }
        report
    }

    /// Human-readable rendering of a configuration.
    pub fn describe(&self, cfg: &CsmConfiguration) -> String {
        let mut parts: Vec<String> = self
            .machines
            .iter()
            .zip(&cfg.states)
            .map(|(m, &s)| format!("{}@{}", m.role(), s))
            .collect();
        for (c, q) in self.channels.iter().zip(&cfg.channels) {
            if !q.is_empty() {
                let msgs: Vec<&str> = q.iter().map(Message::as_str).collect();
                parts.push(format!("{}->{}:[{}]", c.0, c.1, msgs.join(",")));
            }
        }
        parts.join(" ")
    }
}

/// A visited configuration, its parent and incoming event, and its depth.
type SearchNode = (CsmConfiguration, Option<(usize, AsyncEvent)>, usize);

fn trace_to(nodes: &[SearchNode], mut at: usize) -> Vec<AsyncEvent> {
    let mut trace = Vec::new();
    while let Some((parent, event)) = &nodes[at].1 {
        trace.push(event.clone());
        at = *parent;
    }
    trace.reverse();
    trace
}

/// Free-function form of [`Csm::step`].
pub fn csm_step(csm: &Csm, cfg: &CsmConfiguration, event: &AsyncEvent) -> Result<CsmConfiguration, NotEnabled> {
    csm.step(cfg, event)
}

#[derive(Clone, Debug)]
pub struct ExploreOptions {
    pub channel_bound: usize,
    pub depth: usize,
    /// Keep the breadth-first witness trace of every visited configuration.
    pub retain_traces: bool,
}

impl Default for ExploreOptions {
    fn default() -> Self {
        ExploreOptions {
            channel_bound: 4,
            depth: 14,
            retain_traces: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Deadlock {
    pub configuration: CsmConfiguration,
    /// A shortest trace reaching the configuration.
    pub trace: Vec<AsyncEvent>,
}

#[derive(Clone, Debug, Default)]
pub struct ExplorationReport {
    pub visited: usize,
    pub deadlocks: Vec<Deadlock>,
    pub frontier_cut: bool,
    pub trace_prefixes: Option<Vec<Vec<AsyncEvent>>>,
}

/// Every prefix receives on each channel only what was sent on it, in order.
pub fn check_channel_compliance(trace: &[AsyncEvent]) -> bool {
    let mut pending: HashMap<(&Role, &Role), VecDeque<&Message>> = HashMap::new();
    for e in trace {
        let queue = pending.entry(e.channel()).or_default();
        if e.is_send() {
            queue.push_back(&e.message);
        } else if queue.pop_front() != Some(&e.message) {
            return false;
        }
    }
    true
}

/// All distinct per-role views of CSM traces up to `depth` events, with
/// channel contents bounded by `channel_bound`. Two traces with the same
/// views reach the same configuration, so one representative trace is kept
/// per view. The callback returns `false` to stop the search early.
pub(crate) fn for_each_trace_class(
    csm: &Csm,
    channel_bound: usize,
    depth: usize,
    mut visit: impl FnMut(&[AsyncEvent]) -> bool,
) -> bool {
    let mut seen: HashSet<Vec<Vec<AsyncEvent>>> = HashSet::new();
    let n = csm.machines.len();
    let mut layer = vec![(csm.initial(), vec![Vec::new(); n], Vec::new())];
    seen.insert(vec![Vec::new(); n]);
    for d in 0..=depth {
        let mut next_layer = Vec::new();
        for (cfg, views, trace) in &layer {
            if !visit(trace) {
                return false;
            }
            if d == depth {
                continue;
            }
            for (event, next) in csm.enabled(cfg) {
                if next.channels.iter().any(|c| c.len() > channel_bound) {
                    continue;
                }
                let r = csm.role_index[&event.active];
                let mut views = views.clone();
                views[r].push(event.clone());
                if seen.insert(views.clone()) {
                    let mut t = trace.clone();
                    t.push(event);
                    next_layer.push((next, views, t));
                }
            }
        }
        layer = next_layer;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::parse_trace;
    use crate::corpus;

    fn csm(text: &str) -> Csm {
        Csm::from_global_type(&GlobalType::parse(text).unwrap())
    }

    #[test]
    fn send_then_receive() {
        let c = csm(corpus::G_S);
        let t = parse_trace("p>q!o.q<p?o").unwrap();
        let after_send = c.step(&c.initial(), &t[0]).unwrap();
        let pq = c.channel(&"p".into(), &"q".into()).unwrap();
        assert_eq!(after_send.channels[pq], [Message::new("o")]);
        assert_ne!(after_send.states, c.initial().states);
        let after_recv = c.step(&after_send, &t[1]).unwrap();
        assert!(after_recv.channels[pq].is_empty());
    }

    #[test]
    fn step_errors() {
        let c = csm(corpus::G_S);
        let recv = parse_trace("q<p?o").unwrap().remove(0);
        assert_eq!(
            c.step(&c.initial(), &recv).unwrap_err().reason,
            NotEnabledReason::EmptyChannel
        );
        let cfg = c.replay(&parse_trace("p>q!m").unwrap()).unwrap();
        assert_eq!(c.step(&cfg, &recv).unwrap_err().reason, NotEnabledReason::WrongHead);
        let bogus = parse_trace("q>p!o").unwrap().remove(0);
        assert_eq!(
            c.step(&cfg, &bogus).unwrap_err().reason,
            NotEnabledReason::NoLocalTransition
        );
        let err = c.replay(&parse_trace("p>q!o.q<p?m").unwrap()).unwrap_err();
        assert_eq!(err.index, 1);
    }

    #[test]
    fn gs_deadlocks() {
        let c = csm(corpus::G_S);
        let cfg = c.replay(&parse_trace("p>q!o.q<p?o.r>q!m").unwrap()).unwrap();
        assert!(c.is_deadlock(&cfg));
        let report = c.explore(4, 14);
        assert!(!report.deadlocks.is_empty());
        assert!(report.deadlocks.iter().all(|d| c.is_deadlock(&d.configuration)));
    }

    #[test]
    fn gs_prime_is_deadlock_free() {
        let report = csm(corpus::G_S_PRIME).explore(4, 14);
        assert!(report.deadlocks.is_empty());
        assert!(!report.frontier_cut);
    }

    #[test]
    fn end_only() {
        let c = csm("0");
        assert!(c.is_final(&c.initial()));
        let report = c.explore(4, 14);
        assert_eq!(report.visited, 1);
        assert!(report.deadlocks.is_empty());
    }

    #[test]
    fn loops_hit_the_frontier() {
        let report = csm("mu t . p->q:o . t").explore(2, 6);
        assert!(report.frontier_cut);
        assert!(report.deadlocks.is_empty());
    }

    #[test]
    fn channel_compliance() {
        let ok = |s: &str| check_channel_compliance(&parse_trace(s).unwrap());
        assert!(ok("p>q!m.q<p?m"));
        assert!(!ok("q<p?m"));
        assert!(!ok("p>q!a.p>q!b.q<p?b"));
        assert!(ok("p>q!a.p>q!b.q<p?a"));
        assert!(ok(""));
    }

    #[test]
    fn retained_traces_replay() {
        let c = csm(corpus::ODD_EVEN);
        let report = c.explore_with(&ExploreOptions {
            channel_bound: 2,
            depth: 8,
            retain_traces: true,
        });
        let traces = report.trace_prefixes.unwrap();
        assert_eq!(traces.len(), report.visited);
        for t in traces {
            assert!(c.replay(&t).is_ok());
            assert!(check_channel_compliance(&t));
        }
    }
}
