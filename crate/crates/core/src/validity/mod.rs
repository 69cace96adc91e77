//! Implementability checking: Send Validity, Receive Validity and
//! counterexample construction.

mod available;
mod counterexample;

use std::collections::BTreeSet;
use std::fmt;

use crate::automata::{build_gaut, erase, format_trace, AsyncEvent, LocalNfa, SyncTransition};
use crate::error::{Error, Result};
use crate::names::Role;
use crate::projection::{epsilon_closure, subset_construction_from, SubsetMachine, SubsetState};
use crate::syntax::{validate_well_formedness, GlobalType, NodeId};

pub use available::{available_messages, AvailableMessageQuery, AvailableMessageResult, AvailableMessages};
pub use counterexample::build_counterexample;

/// Origins and destinations of the transition leaving state `source` on
/// `label`.
///
/// The origins are the members of the source state with an outgoing
/// `label` move in the erased automaton; the destinations are the members of
/// the target state reachable by such a move followed by ε-moves.
pub fn transition_origins_destinations(
    m: &SubsetMachine,
    nfa: &LocalNfa,
    source: usize,
    label: &AsyncEvent,
) -> (BTreeSet<NodeId>, BTreeSet<NodeId>) {
    let mut origins = BTreeSet::new();
    let mut destinations = BTreeSet::new();
    let Some(target) = m.step(source, label) else {
        return (origins, destinations);
    };
    let target = m.state(target);
    for &g in m.state(source).members() {
        for t in nfa.outgoing(g) {
            if t.label.as_ref() == Some(label) {
                origins.insert(g);
                destinations.extend(
                    epsilon_closure(nfa, [t.target])
                        .into_iter()
                        .filter(|x| target.contains(*x)),
                );
            }
        }
    }
    (origins, destinations)
}

/// Members of `state` that are neither origins nor silent: a member is
/// silent if all its moves are ε-moves and one of them leads to an origin.
/// Silent members stand for exchanges the role does not take part in, so
/// they are covered by the members they lead to.
fn members_missing(nfa: &LocalNfa, state: &SubsetState, origins: &BTreeSet<NodeId>) -> Vec<NodeId> {
    state
        .members()
        .iter()
        .copied()
        .filter(|&g| {
            if origins.contains(&g) {
                return false;
            }
            let silent = nfa.outgoing(g).next().is_some() && nfa.outgoing(g).all(|t| t.label.is_none());
            !(silent && epsilon_closure(nfa, [g]).iter().any(|x| origins.contains(x)))
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ViolationKind {
    SendValidity,
    ReceiveValidity,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ViolationKind::SendValidity => "SendValidity",
            ViolationKind::ReceiveValidity => "ReceiveValidity",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ViolationDetails {
    Send {
        label: AsyncEvent,
        target: usize,
        /// Members of the source state from which `label` cannot be taken.
        missing: Vec<NodeId>,
    },
    Receive {
        /// The receive `p<q1?m1` that is also available elsewhere.
        committed: AsyncEvent,
        committed_target: usize,
        /// The competing receive `p<q2?m2`.
        alternative: AsyncEvent,
        alternative_target: usize,
        /// Destination of the competing receive in which `q1>p!m1` is available.
        continuation: NodeId,
        available: AsyncEvent,
        /// Path from `continuation` ending with the exchange that sends `available`.
        witness: Vec<SyncTransition>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValidityViolation {
    pub kind: ViolationKind,
    pub role: Role,
    pub state: usize,
    pub subset: SubsetState,
    pub details: ViolationDetails,
}

impl fmt::Display for ValidityViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.details {
            ViolationDetails::Send { label, missing, .. } => {
                let missing: Vec<String> = missing.iter().map(|n| n.to_string()).collect();
                write!(
                    f,
                    "{} violated for {} at state {} {}: `{}` is not enabled in subterms {{{}}}",
                    self.kind,
                    self.role,
                    self.state,
                    self.subset,
                    label,
                    missing.join(", ")
                )
            }
            ViolationDetails::Receive {
                committed,
                alternative,
                continuation,
                available,
                ..
            } => write!(
                f,
                "{} violated for {} at state {} {}: `{}` competes with `{}`, and `{}` is available in subterm {} after it",
                self.kind, self.role, self.state, self.subset, committed, alternative, available, continuation
            ),
        }
    }
}

/// Every Send Validity violation of `m`, by state then label.
pub fn send_validity_violations(m: &SubsetMachine, nfa: &LocalNfa) -> Vec<ValidityViolation> {
    let mut out = Vec::new();
    for s in 0..m.len() {
        for (label, target) in m.outgoing(s) {
            if !label.is_send() {
                continue;
            }
            let (origins, _) = transition_origins_destinations(m, nfa, s, label);
            let missing = members_missing(nfa, m.state(s), &origins);
            if !missing.is_empty() {
                out.push(ValidityViolation {
                    kind: ViolationKind::SendValidity,
                    role: m.role().clone(),
                    state: s,
                    subset: m.state(s).clone(),
                    details: ViolationDetails::Send {
                        label: label.clone(),
                        target: *target,
                        missing,
                    },
                });
            }
        }
    }
    out
}

/// First Send Validity violation, if any.
pub fn check_send_validity(m: &SubsetMachine, nfa: &LocalNfa) -> Option<ValidityViolation> {
    send_validity_violations(m, nfa).into_iter().next()
}

/// Receive Validity violations of `m`: at most one per state and pair of
/// competing receives, reporting the first offending destination.
pub fn receive_validity_violations(
    m: &SubsetMachine,
    nfa: &LocalNfa,
    engine: &mut AvailableMessages<'_>,
) -> Result<Vec<ValidityViolation>> {
    let role = m.role();
    let mut out = Vec::new();
    for s in 0..m.len() {
        let receives: Vec<&(AsyncEvent, usize)> = m.outgoing(s).iter().filter(|(e, _)| e.is_receive()).collect();
        for (first, first_target) in &receives {
            let available = AsyncEvent::send(first.peer.clone(), role.clone(), first.message.clone());
            for (second, second_target) in &receives {
                if first.peer == second.peer {
                    continue;
                }
                let (_, destinations) = transition_origins_destinations(m, nfa, s, second);
                for g2 in destinations {
                    let result = engine.blocked_by(g2, role)?;
                    if let Some(witness) = result.witness(&available) {
                        out.push(ValidityViolation {
                            kind: ViolationKind::ReceiveValidity,
                            role: role.clone(),
                            state: s,
                            subset: m.state(s).clone(),
                            details: ViolationDetails::Receive {
                                committed: first.clone(),
                                committed_target: *first_target,
                                alternative: second.clone(),
                                alternative_target: *second_target,
                                continuation: g2,
                                available: available.clone(),
                                witness: witness.to_vec(),
                            },
                        });
                        break;
                    }
                }
            }
        }
    }
    Ok(out)
}

/// First Receive Validity violation, if any.
pub fn check_receive_validity(m: &SubsetMachine, nfa: &LocalNfa, g: &GlobalType) -> Result<Option<ValidityViolation>> {
    let mut engine = AvailableMessages::new(g);
    Ok(receive_validity_violations(m, nfa, &mut engine)?.into_iter().next())
}

/// No state has both an outgoing send and an outgoing receive.
pub fn check_no_mixed_choice(m: &SubsetMachine) -> bool {
    (0..m.len()).all(|s| {
        let out = m.outgoing(s);
        out.iter().all(|(e, _)| e.is_send()) || out.iter().all(|(e, _)| e.is_receive())
    })
}

#[derive(Clone, Debug, Default)]
pub struct CheckOptions {
    /// Collect every violation instead of stopping at the first one.
    pub all_violations: bool,
}

#[derive(Clone, Debug)]
pub struct Verdict {
    pub implementable: bool,
    /// Subset constructions of every role, in role order.
    pub machines: Vec<SubsetMachine>,
    /// The first violation in role, state and label order.
    pub violation: Option<ValidityViolation>,
    /// A CSM trace that no run of the global type explains.
    pub counterexample: Option<Vec<AsyncEvent>>,
    /// All violations when requested, otherwise at most the first.
    pub all_violations: Vec<ValidityViolation>,
}

impl Verdict {
    /// The projections, present only when the type is implementable.
    pub fn projections(&self) -> Option<&[SubsetMachine]> {
        self.implementable.then_some(self.machines.as_slice())
    }

    pub fn machine(&self, role: &Role) -> Option<&SubsetMachine> {
        self.machines.iter().find(|m| m.role() == role)
    }

    pub fn counterexample_text(&self) -> Option<String> {
        self.counterexample.as_deref().map(format_trace)
    }
}

pub fn check_implementability(g: &GlobalType) -> Result<Verdict> {
    check_implementability_with(g, &CheckOptions::default())
}

/// Builds the subset construction of every role and checks Send then
/// Receive Validity role by role. Fails with [`Error::IllFormed`] on a type
/// that violates the well-formedness conditions.
pub fn check_implementability_with(g: &GlobalType, options: &CheckOptions) -> Result<Verdict> {
    let report = validate_well_formedness(g);
    if !report.is_well_formed() {
        return Err(Error::IllFormed(report));
    }
    let gaut = build_gaut(g);
    let mut engine = AvailableMessages::new(g);
    let mut machines = Vec::new();
    let mut violations = Vec::new();
    for role in g.roles() {
        let nfa = erase(&gaut, &role);
        let m = subset_construction_from(&nfa);
        if options.all_violations || violations.is_empty() {
            violations.extend(send_validity_violations(&m, &nfa));
        }
        if options.all_violations || violations.is_empty() {
            violations.extend(receive_validity_violations(&m, &nfa, &mut engine)?);
        }
        machines.push(m);
    }
    if !options.all_violations {
        violations.truncate(1);
    }
    let violation = violations.first().cloned();
    let counterexample = match &violation {
        Some(v) => Some(counterexample::build_with(g, &gaut, &machines, v)?),
        None => None,
    };
    Ok(Verdict {
        implementable: violation.is_none(),
        machines,
        violation,
        counterexample,
        all_violations: violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::parse_trace;
    use crate::corpus::{self, Expected};
    use crate::projection::subset_construction;

    fn parse(text: &str) -> GlobalType {
        GlobalType::parse(text).unwrap()
    }

    fn machine_and_nfa(g: &GlobalType, role: &str) -> (SubsetMachine, LocalNfa) {
        let nfa = erase(&build_gaut(g), &Role::new(role));
        (subset_construction_from(&nfa), nfa)
    }

    fn ev(s: &str) -> AsyncEvent {
        parse_trace(s).unwrap().remove(0)
    }

    #[test]
    fn origins_in_gs() {
        let g = parse(corpus::G_S);
        let (m, nfa) = machine_and_nfa(&g, "r");
        let (origins, _) = transition_origins_destinations(&m, &nfa, 0, &ev("r>q!o"));
        assert_eq!(origins.len(), 1);
        let other = parse("r->q:m . 0");
        let other = g.ids().find(|&id| g.subterm_eq(id, &other, other.root())).unwrap();
        assert!(m.state(0).contains(other) && !origins.contains(&other));
    }

    #[test]
    fn send_racing_a_choice_it_does_not_see() {
        // r may send again only if p picked the looping branch
        let g = parse("mu t . r->s:c . + { p->q:a . t, p->r:c . 0 }");
        let (m, nfa) = machine_and_nfa(&g, "r");
        let v = check_send_validity(&m, &nfa).unwrap();
        let ViolationDetails::Send { label, missing, .. } = &v.details else {
            panic!("{v}");
        };
        assert_eq!(label, &ev("r>s!c"));
        assert_eq!(
            missing.iter().map(|&id| g.pretty_node(id)).collect::<Vec<_>>(),
            ["+ { p->q:a . t, p->r:c . 0 }"]
        );
        assert!(!check_no_mixed_choice(&m));
    }

    #[test]
    fn silent_members_do_not_count() {
        let g = parse(corpus::G_S_PRIME);
        let (m, nfa) = machine_and_nfa(&g, "r");
        let (origins, _) = transition_origins_destinations(&m, &nfa, 0, &ev("r>q!b"));
        assert!(origins.len() < m.state(0).len());
        assert!(check_send_validity(&m, &nfa).is_none());
    }

    #[test]
    fn origins_without_choice() {
        let g = parse("p->q:m . 0");
        let (m, nfa) = machine_and_nfa(&g, "p");
        let (origins, destinations) = transition_origins_destinations(&m, &nfa, 0, &ev("p>q!m"));
        assert_eq!(origins.iter().copied().collect::<Vec<_>>(), m.state(0).members());
        assert_eq!(destinations.len(), 1);
    }

    #[test]
    fn destinations_in_gr() {
        let g = parse(corpus::G_R);
        let (m, nfa) = machine_and_nfa(&g, "r");
        let (_, destinations) = transition_origins_destinations(&m, &nfa, 0, &ev("r<p?o"));
        let sub = parse("q->r:o . 0");
        assert!(destinations.iter().any(|&d| g.subterm_eq(d, &sub, sub.root())));
    }

    #[test]
    fn send_validity_examples() {
        let g = parse(corpus::G_S);
        let (m, nfa) = machine_and_nfa(&g, "r");
        let v = check_send_validity(&m, &nfa).unwrap();
        assert_eq!((v.kind, v.state), (ViolationKind::SendValidity, 0));

        let g = parse(corpus::G_S_PRIME);
        let (m, nfa) = machine_and_nfa(&g, "r");
        assert_eq!(m.outgoing(0).len(), 1);
        assert!(check_send_validity(&m, &nfa).is_none());

        let (m, nfa) = machine_and_nfa(&g, "q");
        assert!(check_send_validity(&m, &nfa).is_none());
    }

    #[test]
    fn receive_validity_examples() {
        let g = parse(corpus::G_R);
        let (m, nfa) = machine_and_nfa(&g, "r");
        let v = check_receive_validity(&m, &nfa, &g).unwrap().unwrap();
        assert_eq!((v.kind, v.state), (ViolationKind::ReceiveValidity, 0));
        let ViolationDetails::Receive { available, .. } = &v.details else {
            panic!("expected receive details");
        };
        assert_eq!(available, &ev("p>r!o"));

        let g = parse(corpus::G_R_PRIME);
        let (m, nfa) = machine_and_nfa(&g, "r");
        assert!(check_receive_validity(&m, &nfa, &g).unwrap().is_none());

        // receives from one sender only
        let g = parse("+ { p->q:a . 0, p->q:b . 0 }");
        let (m, nfa) = machine_and_nfa(&g, "q");
        assert!(check_receive_validity(&m, &nfa, &g).unwrap().is_none());
    }

    #[test]
    fn corpus_verdicts() {
        for e in corpus::ENTRIES {
            let v = check_implementability(&parse(e.source)).unwrap();
            let got = match v.violation.as_ref().map(|v| v.kind) {
                None => Expected::Implementable,
                Some(ViolationKind::SendValidity) => Expected::SendValidity,
                Some(ViolationKind::ReceiveValidity) => Expected::ReceiveValidity,
            };
            assert_eq!(got, e.expected, "{}", e.name);
            assert_eq!(v.implementable, v.projections().is_some());
            assert_eq!(v.implementable, v.counterexample.is_none());
        }
    }

    #[test]
    fn known_counterexamples() {
        let v = check_implementability(&parse(corpus::G_S)).unwrap();
        assert_eq!(v.counterexample_text().unwrap(), "p>q!o.q<p?o.r>q!m");
        let v = check_implementability(&parse(corpus::G_R)).unwrap();
        assert_eq!(v.counterexample_text().unwrap(), "p>q!o.q<p?o.q>r!o.p>r!o.r<p?o");
        let v = check_implementability(&parse(corpus::MIXED_CHOICE)).unwrap();
        assert_eq!(v.counterexample_text().unwrap(), "p>q!l.q<p?l.r>q!m");
    }

    #[test]
    fn mixed_choice() {
        let g = parse(corpus::MIXED_CHOICE);
        assert!(!check_no_mixed_choice(&subset_construction(&g, &Role::new("r"))));
        assert!(check_no_mixed_choice(&subset_construction(
            &parse("0"),
            &Role::new("p")
        )));
        let g = parse(corpus::ODD_EVEN);
        for role in g.roles() {
            assert!(check_no_mixed_choice(&subset_construction(&g, &role)));
        }
    }

    #[test]
    fn ill_formed_types_are_rejected() {
        assert!(matches!(
            check_implementability(&parse("mu t . t")),
            Err(Error::IllFormed(_))
        ));
    }

    #[test]
    fn all_violations() {
        let g = parse(corpus::G_S);
        let options = CheckOptions { all_violations: true };
        let v = check_implementability_with(&g, &options).unwrap();
        // both sends of r fail, one for each missing branch
        assert_eq!(v.all_violations.len(), 2);
        assert_eq!(v.violation.as_ref(), v.all_violations.first());
    }
}
