//! Witness traces for validity violations.
//!
//! A candidate trace is built from a run of the global automaton that
//! leads the violating role into the offending state, then checked against
//! the CSM of subset constructions and the run-intersection oracle. The
//! first candidate that the CSM can execute and that no global run
//! explains is returned.

use std::collections::{BTreeSet, HashMap, VecDeque};

use crate::automata::{build_gaut, erase, split_word, AsyncEvent, SyncAutomaton, SyncEvent, SyncTransition};
use crate::csm::{for_each_trace_class, Csm};
use crate::error::{Error, Result};
use crate::names::Role;
use crate::oracle::IntersectionOracle;
use crate::projection::{subset_construction_from, SubsetMachine};
use crate::syntax::{GlobalType, NodeId};

use super::{ValidityViolation, ViolationDetails};

const FALLBACK_CHANNEL_BOUND: usize = 4;
const FALLBACK_DEPTH: usize = 14;

/// Builds a trace that the CSM of subset constructions can execute but that
/// no run of `g` explains.
pub fn build_counterexample(g: &GlobalType, v: &ValidityViolation) -> Result<Vec<AsyncEvent>> {
    let gaut = build_gaut(g);
    let machines: Vec<SubsetMachine> = g
        .roles()
        .iter()
        .map(|r| subset_construction_from(&erase(&gaut, r)))
        .collect();
    build_with(g, &gaut, &machines, v)
}

pub(super) fn build_with(
    g: &GlobalType,
    gaut: &SyncAutomaton,
    machines: &[SubsetMachine],
    v: &ValidityViolation,
) -> Result<Vec<AsyncEvent>> {
    let machine = machines
        .iter()
        .find(|m| m.role() == &v.role)
        .ok_or_else(|| Error::Internal(format!("no machine for role {}", v.role)))?;
    let csm = Csm::new(machines.to_vec());
    let oracle = IntersectionOracle::new(g);
    let product = Product::explore(gaut, machine);

    let candidates = match &v.details {
        ViolationDetails::Send { label, missing, .. } => {
            let mut out = Vec::new();
            for &member in missing {
                let Some(alpha) = product.path_to(member, v.state) else {
                    continue;
                };
                let mut trace = split_word(&labels(&alpha));
                trace.push(label.clone());
                out.push(trace.clone());
                // the member may still reach `label` silently; then the
                // exchange it offers the role instead races with the send
                for t in gaut.outgoing(member) {
                    if let Some(e) = t
                        .label
                        .as_ref()
                        .filter(|e| e.project(&v.role).is_some() && e.sender != v.role)
                    {
                        let mut raced = trace.clone();
                        raced.push(e.send());
                        out.push(raced);
                    }
                }
            }
            out
        }
        ViolationDetails::Receive {
            committed,
            alternative,
            continuation,
            witness,
            ..
        } => receive_candidates(gaut, &product, v, committed, alternative, *continuation, witness),
    };
    for trace in candidates {
        if csm.replay(&trace).is_ok() && oracle.witness(&trace).is_none() {
            return Ok(trace);
        }
    }

    let mut found = None;
    for_each_trace_class(&csm, FALLBACK_CHANNEL_BOUND, FALLBACK_DEPTH, |trace| {
        if oracle.witness(trace).is_none() {
            found = Some(trace.to_vec());
            return false;
        }
        true
    });
    found.ok_or_else(|| {
        Error::Internal(format!(
            "no counterexample found for {} up to {FALLBACK_DEPTH} events",
            v.kind
        ))
    })
}

fn receive_candidates(
    gaut: &SyncAutomaton,
    product: &Product,
    v: &ValidityViolation,
    committed: &AsyncEvent,
    alternative: &AsyncEvent,
    continuation: NodeId,
    witness: &[SyncTransition],
) -> Vec<Vec<AsyncEvent>> {
    let role = &v.role;
    let competing = SyncEvent {
        sender: alternative.peer.clone(),
        receiver: role.clone(),
        message: alternative.message.clone(),
    };
    let early_send = AsyncEvent::send(committed.peer.clone(), role.clone(), committed.message.clone());
    let before_send = &witness[..witness.len().saturating_sub(1)];
    let mut out = Vec::new();
    for &g1 in v.subset.members() {
        for t in gaut.outgoing(g1) {
            if t.label.as_ref() != Some(&competing) {
                continue;
            }
            let Some(gamma) = silent_path(gaut, role, t.target, continuation) else {
                continue;
            };
            let Some(alpha) = product.path_to(g1, v.state) else {
                continue;
            };
            let prefix = split_word(&labels(&alpha));

            let mut direct = prefix.clone();
            direct.extend([competing.send(), early_send.clone(), committed.clone()]);
            out.push(direct);

            let steps = std::iter::once(t).chain(&gamma).chain(before_send);
            let mut filtered = prefix;
            filtered.extend(unblocked_events(steps, role));
            filtered.extend([early_send.clone(), committed.clone()]);
            out.push(filtered);
        }
    }
    out
}

/// Events of `steps` that can happen while `role` stays put: a blocked
/// sender blocks its receiver, and messages to blocked roles stay queued.
fn unblocked_events<'a>(steps: impl IntoIterator<Item = &'a SyncTransition>, role: &Role) -> Vec<AsyncEvent> {
    let mut blocked = BTreeSet::from([role.clone()]);
    let mut out = Vec::new();
    for e in steps.into_iter().filter_map(|t| t.label.as_ref()) {
        if blocked.contains(&e.sender) {
            blocked.insert(e.receiver.clone());
            continue;
        }
        out.push(e.send());
        if !blocked.contains(&e.receiver) {
            out.push(e.receive());
        }
    }
    out
}

/// Shortest path from `from` to `to` whose exchanges do not involve `role`.
fn silent_path(gaut: &SyncAutomaton, role: &Role, from: NodeId, to: NodeId) -> Option<Vec<SyncTransition>> {
    let mut parent: HashMap<NodeId, Option<&SyncTransition>> = HashMap::from([(from, None)]);
    let mut queue = VecDeque::from([from]);
    while let Some(q) = queue.pop_front() {
        if q == to {
            let mut path = Vec::new();
            let mut at = q;
            while let Some(Some(t)) = parent.get(&at) {
                path.push((*t).clone());
                at = t.source;
            }
            path.reverse();
            return Some(path);
        }
        for t in gaut.outgoing(q) {
            let involved = t.label.as_ref().is_some_and(|e| e.project(role).is_some());
            if !involved && !parent.contains_key(&t.target) {
                parent.insert(t.target, Some(t));
                queue.push_back(t.target);
            }
        }
    }
    None
}

fn labels(path: &[SyncTransition]) -> Vec<SyncEvent> {
    path.iter().filter_map(|t| t.label.clone()).collect()
}

/// Breadth-first search over pairs of a global state and a state of one
/// role's subset construction, moving in lockstep.
type Parents<'a> = HashMap<(NodeId, usize), Option<(NodeId, usize, &'a SyncTransition)>>;

struct Product<'a> {
    parent: Parents<'a>,
}

impl<'a> Product<'a> {
    fn explore(gaut: &'a SyncAutomaton, machine: &SubsetMachine) -> Self {
        let role = machine.role();
        let start = (gaut.initial(), machine.initial());
        let mut parent = HashMap::from([(start, None)]);
        let mut queue = VecDeque::from([start]);
        while let Some((q, s)) = queue.pop_front() {
            for t in gaut.outgoing(q) {
                let next_s = match t.label.as_ref().and_then(|e| e.project(role)) {
                    Some(x) => match machine.step(s, &x) {
                        Some(n) => n,
                        None => continue,
                    },
                    None => s,
                };
                let key = (t.target, next_s);
                if let std::collections::hash_map::Entry::Vacant(slot) = parent.entry(key) {
                    slot.insert(Some((q, s, t)));
                    queue.push_back(key);
                }
            }
        }
        Product { parent }
    }

    /// A shortest run of the global automaton ending in `node` along which
    /// the role's machine ends in `state`.
    fn path_to(&self, node: NodeId, state: usize) -> Option<Vec<SyncTransition>> {
        let mut at = (node, state);
        self.parent.get(&at)?;
        let mut path = Vec::new();
        while let Some(Some((q, s, t))) = self.parent.get(&at) {
            path.push((*t).clone());
            at = (*q, *s);
        }
        path.reverse();
        Some(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::format_trace;
    use crate::corpus;
    use crate::validity::{check_implementability_with, CheckOptions};

    #[test]
    fn blocked_roles_filter_events() {
        let g = GlobalType::parse("q->s:x . s->p:y . q->r:z . r->p:w . 0").unwrap();
        let gaut = build_gaut(&g);
        let mut path = Vec::new();
        let mut at = g.root();
        while let Some(t) = gaut.outgoing(at).next() {
            path.push(t.clone());
            at = t.target;
        }
        // s->p:y goes to blocked p; r is never blocked
        let events = unblocked_events(&path, &Role::new("p"));
        assert_eq!(format_trace(&events), "q>s!x.s<q?x.s>p!y.q>r!z.r<q?z.r>p!w");
        let events = unblocked_events(&path, &Role::new("q"));
        assert!(events.is_empty());
    }

    #[test]
    fn every_violation_gets_a_valid_trace() {
        let racing = "mu t . r->s:c . + { p->q:a . t, p->r:c . 0 }";
        for text in [corpus::G_S, corpus::G_R, corpus::MIXED_CHOICE, racing] {
            let g = GlobalType::parse(text).unwrap();
            let verdict = check_implementability_with(&g, &CheckOptions { all_violations: true }).unwrap();
            let csm = Csm::from_global_type(&g);
            let oracle = IntersectionOracle::new(&g);
            for v in &verdict.all_violations {
                let trace = build_counterexample(&g, v).unwrap();
                assert!(csm.replay(&trace).is_ok(), "{}", format_trace(&trace));
                assert!(oracle.witness(&trace).is_none(), "{}", format_trace(&trace));
            }
        }
    }

    #[test]
    fn send_racing_a_choice() {
        let g = GlobalType::parse("mu t . r->s:c . + { p->q:a . t, p->r:c . 0 }").unwrap();
        let verdict = check_implementability_with(&g, &CheckOptions::default()).unwrap();
        assert_eq!(verdict.counterexample_text().unwrap(), "r>s!c.s<r?c.r>s!c.p>r!c");
    }

    #[test]
    fn reordered_send_behind_an_unrelated_exchange() {
        // in the top branch, q talks to s before sending to r; r cannot tell
        // which of its two receives comes first
        let g = GlobalType::parse(
            "+ { p->q:o . q->s:x . q->r:o . p->r:o . 0,
                 p->q:m . p->r:o . q->s:x . q->r:o . 0 }",
        )
        .unwrap();
        let verdict = check_implementability_with(&g, &CheckOptions::default()).unwrap();
        let trace = verdict.counterexample.unwrap();
        let csm = Csm::from_global_type(&g);
        assert!(csm.replay(&trace).is_ok());
        assert!(IntersectionOracle::new(&g).witness(&trace).is_none());
    }
}
