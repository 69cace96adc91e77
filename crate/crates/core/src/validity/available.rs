//! Available messages: the sends that can put the first message into a
//! channel before any blocked role moves.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::rc::Rc;

use crate::automata::{AsyncEvent, SyncEvent, SyncTransition};
use crate::error::{Error, Result};
use crate::names::{RecVar, Role};
use crate::syntax::{GlobalType, Node, NodeId};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AvailableMessageQuery {
    pub subterm: NodeId,
    pub blocked: BTreeSet<Role>,
    pub unfolded: BTreeSet<RecVar>,
}

impl AvailableMessageQuery {
    pub fn new(subterm: NodeId, blocked: impl IntoIterator<Item = Role>) -> Self {
        AvailableMessageQuery {
            subterm,
            blocked: blocked.into_iter().collect(),
            unfolded: BTreeSet::new(),
        }
    }
}

/// Available send events, each with the path of the global automaton from
/// the queried subterm that ends with the exchange producing it.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AvailableMessageResult {
    pub events: BTreeMap<AsyncEvent, Vec<SyncTransition>>,
}

impl AvailableMessageResult {
    pub fn contains(&self, event: &AsyncEvent) -> bool {
        self.events.contains_key(event)
    }

    pub fn witness(&self, event: &AsyncEvent) -> Option<&[SyncTransition]> {
        self.events.get(event).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
}

type Key = (NodeId, Vec<Role>, Vec<RecVar>);

/// Memoizing evaluator for one global type.
///
/// Each recursion variable is unfolded at most once per path, so every
/// query terminates.
pub struct AvailableMessages<'g> {
    g: &'g GlobalType,
    binders: BTreeMap<RecVar, NodeId>,
    memo: HashMap<Key, Rc<AvailableMessageResult>>,
}

impl<'g> AvailableMessages<'g> {
    pub fn new(g: &'g GlobalType) -> Self {
        AvailableMessages {
            g,
            binders: g.binders(),
            memo: HashMap::new(),
        }
    }

    pub fn query(&mut self, q: &AvailableMessageQuery) -> Result<Rc<AvailableMessageResult>> {
        if self.g.get(q.subterm).is_none() {
            return Err(Error::Internal(format!(
                "subterm {} is not part of the global type",
                q.subterm
            )));
        }
        Ok(self.eval(q.subterm, &q.blocked, &q.unfolded))
    }

    /// Available messages at `subterm` with a single blocked role.
    pub fn blocked_by(&mut self, subterm: NodeId, role: &Role) -> Result<Rc<AvailableMessageResult>> {
        self.query(&AvailableMessageQuery::new(subterm, [role.clone()]))
    }

    fn eval(
        &mut self,
        id: NodeId,
        blocked: &BTreeSet<Role>,
        unfolded: &BTreeSet<RecVar>,
    ) -> Rc<AvailableMessageResult> {
        let key = (
            id,
            blocked.iter().cloned().collect::<Vec<_>>(),
            unfolded.iter().cloned().collect::<Vec<_>>(),
        );
        if let Some(r) = self.memo.get(&key) {
            return Rc::clone(r);
        }
        let mut events: BTreeMap<AsyncEvent, Vec<SyncTransition>> = BTreeMap::new();
        match self.g.node(id).clone() {
            Node::End => {}
            Node::Rec { var, body } => {
                let mut unfolded = unfolded.clone();
                unfolded.insert(var);
                let inner = self.eval(body, blocked, &unfolded);
                let step = epsilon(id, body);
                extend_with_prefix(&mut events, &inner, &[step]);
            }
            Node::Var(var) => {
                if let (false, Some(&binder)) = (unfolded.contains(&var), self.binders.get(&var)) {
                    if let Node::Rec { body, .. } = self.g.node(binder) {
                        let body = *body;
                        let mut unfolded = unfolded.clone();
                        unfolded.insert(var);
                        let inner = self.eval(body, blocked, &unfolded);
                        extend_with_prefix(&mut events, &inner, &[epsilon(id, binder), epsilon(binder, body)]);
                    }
                }
            }
            Node::Choice { sender, branches } => {
                for b in &branches {
                    let step = SyncTransition {
                        source: id,
                        label: Some(SyncEvent {
                            sender: sender.clone(),
                            receiver: b.receiver.clone(),
                            message: b.message.clone(),
                        }),
                        target: b.cont,
                    };
                    if blocked.contains(&sender) {
                        let mut blocked = blocked.clone();
                        blocked.insert(b.receiver.clone());
                        let inner = self.eval(b.cont, &blocked, unfolded);
                        extend_with_prefix(&mut events, &inner, &[step]);
                    } else {
                        let head = AsyncEvent::send(sender.clone(), b.receiver.clone(), b.message.clone());
                        events.entry(head).or_insert_with(|| vec![step.clone()]);
                        let inner = self.eval(b.cont, blocked, unfolded);
                        for (e, path) in &inner.events {
                            // the head send is the first message on its channel
                            if e.active == sender && e.peer == b.receiver {
                                continue;
                            }
                            events.entry(e.clone()).or_insert_with(|| {
                                let mut w = Vec::with_capacity(path.len() + 1);
                                w.push(step.clone());
                                w.extend(path.iter().cloned());
                                w
                            });
                        }
                    }
                }
            }
        }
        let result = Rc::new(AvailableMessageResult { events });
        self.memo.insert(key, Rc::clone(&result));
        result
    }
}

fn epsilon(source: NodeId, target: NodeId) -> SyncTransition {
    SyncTransition {
        source,
        label: None,
        target,
    }
}

fn extend_with_prefix(
    events: &mut BTreeMap<AsyncEvent, Vec<SyncTransition>>,
    inner: &AvailableMessageResult,
    prefix: &[SyncTransition],
) {
    for (e, path) in &inner.events {
        events.entry(e.clone()).or_insert_with(|| {
            let mut w = prefix.to_vec();
            w.extend(path.iter().cloned());
            w
        });
    }
}

/// One-shot evaluation of a query.
pub fn available_messages(g: &GlobalType, q: &AvailableMessageQuery) -> Result<AvailableMessageResult> {
    AvailableMessages::new(g).query(q).map(|r| (*r).clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::build_gaut;
    use crate::corpus;

    fn events(g: &GlobalType, id: NodeId, blocked: &[&str]) -> Vec<String> {
        let q = AvailableMessageQuery::new(id, blocked.iter().map(|r| Role::new(*r)));
        available_messages(g, &q)
            .unwrap()
            .events
            .keys()
            .map(|e| e.to_string())
            .collect()
    }

    fn find(g: &GlobalType, text: &str) -> NodeId {
        let sub = GlobalType::parse(text).unwrap();
        g.ids().find(|&id| g.subterm_eq(id, &sub, sub.root())).unwrap()
    }

    #[test]
    fn end_has_nothing() {
        let g = GlobalType::parse("0").unwrap();
        assert!(events(&g, g.root(), &["p"]).is_empty());
    }

    #[test]
    fn top_branch_tail_of_gr() {
        let g = GlobalType::parse(corpus::G_R).unwrap();
        let tail = find(&g, "p->r:o . 0");
        assert_eq!(events(&g, tail, &["r"]), ["p>r!o"]);
        let gt = find(&g, "q->r:o . p->r:o . 0");
        assert_eq!(events(&g, gt, &["r"]), ["p>r!o", "q>r!o"]);
    }

    #[test]
    fn blocked_sender_blocks_its_receiver() {
        let g = GlobalType::parse("p->q:m . q->r:o . 0").unwrap();
        assert!(events(&g, g.root(), &["p"]).is_empty());
        assert_eq!(events(&g, g.root(), &["r"]), ["p>q!m", "q>r!o"]);
    }

    #[test]
    fn only_first_message_per_channel() {
        let g = GlobalType::parse("p->q:a . p->q:b . p->r:c . 0").unwrap();
        assert_eq!(events(&g, g.root(), &["q"]), ["p>q!a", "p>r!c"]);
    }

    #[test]
    fn recursion_is_unfolded_once() {
        let g = GlobalType::parse("mu t . + { p->q:a . q->r:x . t, p->q:b . r->q:y . 0 }").unwrap();
        // q is blocked, so the looping branch stops at q->r:x; r is free in the other
        let e = events(&g, g.root(), &["q"]);
        assert_eq!(e, ["p>q!a", "p>q!b", "r>q!y"]);
        let e = events(&g, g.root(), &["s"]);
        assert_eq!(e, ["p>q!a", "p>q!b", "q>r!x", "r>q!y"]);
    }

    #[test]
    fn witnesses_are_paths_ending_in_the_event() {
        let g = GlobalType::parse(corpus::ODD_EVEN).unwrap();
        let gaut = build_gaut(&g);
        let mut engine = AvailableMessages::new(&g);
        for id in g.ids() {
            for role in g.roles() {
                let result = engine.blocked_by(id, &role).unwrap();
                for (e, path) in &result.events {
                    assert_ne!(e.active, role);
                    assert_eq!(path.first().unwrap().source, id);
                    assert!(path.windows(2).all(|w| w[0].target == w[1].source));
                    assert!(path.iter().all(|t| gaut.transitions().contains(t)));
                    let last = path.last().unwrap().label.as_ref().unwrap();
                    assert_eq!(&last.send(), e);
                }
            }
        }
        assert!(engine.blocked_by(NodeId::from_index(10_000), &Role::new("p")).is_err());
    }
}
