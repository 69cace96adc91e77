#![allow(dead_code)]

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use subproj_core::oracle::{random_global_type, RandomTypeConfig};
use subproj_core::syntax::GlobalTypeBuilder;
use subproj_core::{AsyncEvent, GlobalType, Message, Node, NodeId, RecVar, Role};

pub fn random_type(seed: u64) -> GlobalType {
    random_global_type(&mut ChaCha8Rng::seed_from_u64(seed), &RandomTypeConfig::default())
}

pub fn global_types() -> impl Strategy<Value = GlobalType> {
    any::<u64>().prop_map(random_type)
}

/// Rebuilds `g` with every name passed through the given maps.
pub fn rename(
    g: &GlobalType,
    role: impl Fn(&Role) -> Role,
    message: impl Fn(&Message) -> Message,
    var: impl Fn(&RecVar) -> RecVar,
) -> GlobalType {
    fn go(
        g: &GlobalType,
        id: NodeId,
        b: &mut GlobalTypeBuilder,
        role: &dyn Fn(&Role) -> Role,
        message: &dyn Fn(&Message) -> Message,
        var: &dyn Fn(&RecVar) -> RecVar,
    ) -> NodeId {
        match g.node(id) {
            Node::End => b.end(),
            Node::Var(t) => b.var(var(t)),
            Node::Rec { var: t, body } => {
                let body = go(g, *body, b, role, message, var);
                b.rec(var(t), body)
            }
            Node::Choice { sender, branches } => {
                let branches = branches
                    .iter()
                    .map(|br| {
                        (
                            role(&br.receiver),
                            message(&br.message),
                            go(g, br.cont, b, role, message, var),
                        )
                    })
                    .collect();
                b.choice(role(sender), branches)
            }
        }
    }
    let mut b = GlobalTypeBuilder::new();
    let root = go(g, g.root(), &mut b, &role, &message, &var);
    b.build(root)
}

/// Every well-formed event over the given roles and messages.
pub fn alphabet(roles: &[Role], messages: &[Message]) -> Vec<AsyncEvent> {
    let mut out = Vec::new();
    for p in roles {
        for q in roles {
            if p == q {
                continue;
            }
            for m in messages {
                out.push(AsyncEvent::send(p.clone(), q.clone(), m.clone()));
                out.push(AsyncEvent::receive(p.clone(), q.clone(), m.clone()));
            }
        }
    }
    out
}
